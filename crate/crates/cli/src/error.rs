use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Test,
    Repair,
    Store,
    Io,
    Config,
}

impl ErrorKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ErrorKind::Parse => "E-PARSE",
            ErrorKind::Test => "E-TEST",
            ErrorKind::Repair => "E-REPAIR",
            ErrorKind::Store => "E-STORE",
            ErrorKind::Io => "E-IO",
            ErrorKind::Config => "E-CONFIG",
        }
    }
}

/// A diagnostic printed as one line, `<prefix>: <message>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace('\n', " ");
        write!(f, "{}: {}", self.kind.prefix(), one_line)
    }
}

macro_rules! ctor {
    ($name:ident, $kind:ident) => {
        pub fn $name(message: impl Into<String>) -> Self {
            CliError {
                kind: ErrorKind::$kind,
                message: message.into(),
            }
        }
    };
}

impl CliError {
    ctor!(parse, Parse);
    ctor!(test, Test);
    ctor!(repair, Repair);
    ctor!(store, Store);
    ctor!(io, Io);
    ctor!(config, Config);
}

use std::io;

use bpa_cli::config::EnvVars;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = bpa_cli::run(
        std::env::args_os(),
        &EnvVars::from_process(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}

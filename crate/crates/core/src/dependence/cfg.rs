use std::collections::{BTreeSet, VecDeque};

use crate::lang::{Block, Line, Program, Stmt, StmtKind};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Function entry; defines the parameters at the header line.
    Entry,
    Exit,
    Stmt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgNode {
    pub kind: NodeKind,
    pub line: Line,
    pub function: usize,
    /// Variables defined when this node executes.
    pub defs: Vec<String>,
    /// Variables read when this node executes.
    pub uses: Vec<String>,
}

/// Intraprocedural control-flow graph for every function of a program.
/// Statements unreachable from their function entry are not represented.
#[derive(Debug, Clone)]
pub struct Cfg {
    nodes: Vec<CfgNode>,
    succ: Vec<BTreeSet<NodeId>>,
    pred: Vec<BTreeSet<NodeId>>,
    entries: Vec<NodeId>,
    exits: Vec<NodeId>,
}

impl Cfg {
    pub fn nodes(&self) -> &[CfgNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &CfgNode {
        &self.nodes[id]
    }

    pub fn successors(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.succ[id]
    }

    pub fn predecessors(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.pred[id]
    }

    pub fn entry(&self, function: usize) -> NodeId {
        self.entries[function]
    }

    pub fn exit(&self, function: usize) -> NodeId {
        self.exits[function]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(from, tos)| tos.iter().map(move |&to| (from, to)))
    }

    /// Successor lines of the statement node(s) at `line`, restricted to
    /// statement nodes.
    pub fn line_successors(&self, line: Line) -> BTreeSet<Line> {
        self.stmt_nodes_at(line)
            .flat_map(|id| self.succ[id].iter())
            .filter(|&&s| self.nodes[s].kind == NodeKind::Stmt)
            .map(|&s| self.nodes[s].line)
            .collect()
    }

    pub fn stmt_nodes_at(&self, line: Line) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.kind == NodeKind::Stmt && n.line == line)
            .map(|(i, _)| i)
    }
}

pub fn build_cfg(p: &Program) -> Cfg {
    let mut b = Builder::default();
    for (fi, f) in p.functions.iter().enumerate() {
        let entry = b.add(CfgNode {
            kind: NodeKind::Entry,
            line: f.header_line,
            function: fi,
            defs: f.params.clone(),
            uses: Vec::new(),
        });
        let exit = b.add(CfgNode {
            kind: NodeKind::Exit,
            line: f.end_line,
            function: fi,
            defs: Vec::new(),
            uses: Vec::new(),
        });
        b.exit = exit;
        b.function = fi;
        let out = b.block(&f.body, vec![entry]);
        for n in out {
            b.edge(n, exit);
        }
        b.entries.push(entry);
        b.exits.push(exit);
    }
    b.finish()
}

#[derive(Default)]
struct Builder {
    nodes: Vec<CfgNode>,
    edges: BTreeSet<(NodeId, NodeId)>,
    entries: Vec<NodeId>,
    exits: Vec<NodeId>,
    exit: NodeId,
    function: usize,
}

impl Builder {
    fn add(&mut self, n: CfgNode) -> NodeId {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn edge(&mut self, from: NodeId, to: NodeId) {
        self.edges.insert((from, to));
    }

    /// Wires `block` after `preds`; returns the nodes that fall through.
    fn block(&mut self, block: &Block, mut preds: Vec<NodeId>) -> Vec<NodeId> {
        for s in block {
            preds = self.stmt(s, preds);
        }
        preds
    }

    fn stmt(&mut self, s: &Stmt, preds: Vec<NodeId>) -> Vec<NodeId> {
        let id = self.add(CfgNode {
            kind: NodeKind::Stmt,
            line: s.line,
            function: self.function,
            defs: s.written_var().map(str::to_string).into_iter().collect(),
            uses: s.read_vars().into_iter().map(str::to_string).collect(),
        });
        for p in preds {
            self.edge(p, id);
        }
        match &s.kind {
            StmtKind::Return(_) => {
                let exit = self.exit;
                self.edge(id, exit);
                Vec::new()
            }
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut out = self.block(then_block, vec![id]);
                match else_block {
                    Some(b) => out.extend(self.block(b, vec![id])),
                    None => out.push(id),
                }
                out.sort_unstable();
                out.dedup();
                out
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                for n in self.block(body, vec![id]) {
                    self.edge(n, id);
                }
                vec![id]
            }
            _ => vec![id],
        }
    }

    fn finish(self) -> Cfg {
        let n = self.nodes.len();
        let mut succ = vec![BTreeSet::new(); n];
        for &(a, b) in &self.edges {
            succ[a].insert(b);
        }
        // Keep what is reachable from an entry; exits always survive.
        let mut keep = vec![false; n];
        let mut queue: VecDeque<NodeId> = self.entries.iter().copied().collect();
        for &e in &self.entries {
            keep[e] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &v in &succ[u] {
                if !keep[v] {
                    keep[v] = true;
                    queue.push_back(v);
                }
            }
        }
        for &x in &self.exits {
            keep[x] = true;
        }
        let mut remap = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for (old, node) in self.nodes.into_iter().enumerate() {
            if keep[old] {
                remap[old] = nodes.len();
                nodes.push(node);
            }
        }
        let m = nodes.len();
        let mut new_succ = vec![BTreeSet::new(); m];
        let mut new_pred = vec![BTreeSet::new(); m];
        for (a, b) in self.edges {
            if keep[a] && keep[b] {
                new_succ[remap[a]].insert(remap[b]);
                new_pred[remap[b]].insert(remap[a]);
            }
        }
        Cfg {
            nodes,
            succ: new_succ,
            pred: new_pred,
            entries: self.entries.iter().map(|&e| remap[e]).collect(),
            exits: self.exits.iter().map(|&e| remap[e]).collect(),
        }
    }
}

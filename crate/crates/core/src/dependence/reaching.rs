use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::cfg::{Cfg, NodeId};
use crate::lang::Line;

/// A definition site: the CFG node and the variable it defines.
pub type Def = (NodeId, String);

/// Result of the reaching-definitions fixpoint.
#[derive(Debug, Clone)]
pub struct ReachingDefinitions {
    /// Definitions live on entry to each node.
    pub reach_in: Vec<BTreeSet<Def>>,
    /// For each `(use line, variable)`, the lines of the definitions that
    /// may reach it.
    pub by_use: BTreeMap<(Line, String), BTreeSet<Line>>,
}

impl ReachingDefinitions {
    pub fn defs_for(&self, line: Line, var: &str) -> BTreeSet<Line> {
        self.by_use
            .get(&(line, var.to_string()))
            .cloned()
            .unwrap_or_default()
    }
}

/// Forward may-analysis: OUT = GEN ∪ (IN − KILL), IN = ∪ OUT(pred).
pub fn reaching_definitions(cfg: &Cfg) -> ReachingDefinitions {
    let n = cfg.nodes().len();
    let mut reach_in: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); n];
    let mut reach_out: Vec<BTreeSet<Def>> = vec![BTreeSet::new(); n];
    let transfer = |id: NodeId, inp: &BTreeSet<Def>| -> BTreeSet<Def> {
        let node = cfg.node(id);
        let mut out: BTreeSet<Def> = inp
            .iter()
            .filter(|(_, v)| !node.defs.contains(v))
            .cloned()
            .collect();
        out.extend(node.defs.iter().map(|v| (id, v.clone())));
        out
    };

    let mut work: VecDeque<NodeId> = (0..n).collect();
    let mut queued = vec![true; n];
    while let Some(id) = work.pop_front() {
        queued[id] = false;
        let mut inp = BTreeSet::new();
        for &p in cfg.predecessors(id) {
            inp.extend(reach_out[p].iter().cloned());
        }
        let out = transfer(id, &inp);
        reach_in[id] = inp;
        if out != reach_out[id] {
            reach_out[id] = out;
            for &s in cfg.successors(id) {
                if !queued[s] {
                    queued[s] = true;
                    work.push_back(s);
                }
            }
        }
    }

    let mut by_use: BTreeMap<(Line, String), BTreeSet<Line>> = BTreeMap::new();
    for (id, node) in cfg.nodes().iter().enumerate() {
        for var in &node.uses {
            let entry = by_use.entry((node.line, var.clone())).or_default();
            entry.extend(
                reach_in[id]
                    .iter()
                    .filter(|(_, v)| v == var)
                    .map(|(d, _)| cfg.node(*d).line),
            );
        }
    }
    ReachingDefinitions { reach_in, by_use }
}

//! Control flow, reaching definitions, the line-keyed dependence graph and
//! static slicing over it.

pub mod cfg;
pub mod graph;
pub mod reaching;

pub use cfg::{build_cfg, Cfg, CfgNode, NodeId, NodeKind};
pub use graph::{build_dependence_graph, DataEdge, DependenceGraph, EdgeKind, LineSet, SliceError};
pub use reaching::{reaching_definitions, ReachingDefinitions};

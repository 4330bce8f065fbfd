//! Four-way data-dependence classification between ordered statement pairs.

use crate::frontend::ast::NodeId;
use serde::Serialize;

use super::cfg::Cfg;
use super::dfg::Dfg;
use super::locations::AbstractLocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum DependenceKind {
    Raw,
    War,
    Waw,
    Rar,
}

impl DependenceKind {
    pub fn label(&self) -> &'static str {
        match self {
            DependenceKind::Raw => "RAW",
            DependenceKind::War => "WAR",
            DependenceKind::Waw => "WAW",
            DependenceKind::Rar => "RAR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Dependence {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: DependenceKind,
    pub location: AbstractLocation,
}

/// Enumerate all four dependence kinds for every ordered pair of window
/// statements sharing a location, where `from` precedes `to` on some CFG
/// path. Back-edge-respecting pairs are included, so dependences across loop
/// iterations appear in both directions. Output is sorted for determinism.
pub fn classify_dependences(cfg: &Cfg, dfg: &Dfg, window: &[NodeId]) -> Vec<Dependence> {
    let mut out = Vec::new();
    for &a in window {
        let Some(block_a) = cfg.block_of(a) else { continue };
        for &b in window {
            if a == b {
                continue;
            }
            let Some(block_b) = cfg.block_of(b) else { continue };
            if !cfg.reaches(block_a, block_b) {
                continue;
            }
            let reads_a = dfg.reads_of(a);
            let writes_a = dfg.writes_of(a);
            let reads_b = dfg.reads_of(b);
            let writes_b = dfg.writes_of(b);
            for loc in writes_a.intersection(reads_b) {
                out.push(Dependence { from: a, to: b, kind: DependenceKind::Raw, location: *loc });
            }
            for loc in reads_a.intersection(writes_b) {
                out.push(Dependence { from: a, to: b, kind: DependenceKind::War, location: *loc });
            }
            for loc in writes_a.intersection(writes_b) {
                out.push(Dependence { from: a, to: b, kind: DependenceKind::Waw, location: *loc });
            }
            for loc in reads_a.intersection(reads_b) {
                out.push(Dependence { from: a, to: b, kind: DependenceKind::Rar, location: *loc });
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

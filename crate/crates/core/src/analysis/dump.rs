//! Text dumps of the CFG and DFG for inspection and golden tests: one edge
//! per line, `fromId -> toId [kind]`.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::frontend::ast::NodeId;

use super::cfg::Cfg;
use super::dfg::Dfg;

pub fn cfg_to_text(cfg: &Cfg) -> String {
    let mut out = String::new();
    let name = |b: usize| -> String {
        if b == cfg.entry {
            "entry".to_string()
        } else if b == cfg.exit {
            "exit".to_string()
        } else {
            match cfg.blocks[b].point {
                Some(p) => p.to_string(),
                None => format!("b{}", b),
            }
        }
    };
    let mut lines: Vec<String> = cfg
        .edges
        .iter()
        .map(|(f, t, k)| format!("{} -> {} [{}]", name(*f), name(*t), k.label()))
        .collect();
    lines.sort();
    for l in lines {
        let _ = writeln!(out, "{}", l);
    }
    out
}

pub fn dfg_to_text(dfg: &Dfg, var_names: &BTreeMap<NodeId, String>) -> String {
    let mut out = String::new();
    let mut lines: Vec<String> = dfg
        .edges
        .iter()
        .map(|e| {
            let var = var_names
                .get(&e.location.decl)
                .cloned()
                .unwrap_or_else(|| e.location.decl.to_string());
            format!("{} -> {} [{}]", e.def, e.usage, var)
        })
        .collect();
    lines.sort();
    for l in lines {
        let _ = writeln!(out, "{}", l);
    }
    out
}

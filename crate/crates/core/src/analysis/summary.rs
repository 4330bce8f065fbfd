//! Method summaries: per-function state-variable side effects plus external
//! call flags, closed over the internal call graph by a monotone fixpoint.

use crate::frontend::ast::NodeId;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::access::Collector;
use super::cfg::{BlockOrigin, Cfg};
use super::points_to::PointsToMap;
use super::scope::Scope;
use super::MergedContract;

#[derive(Debug, Clone, Default, Serialize)]
pub struct MethodSummary {
    pub function: NodeId,
    pub state_vars_read: BTreeSet<NodeId>,
    pub state_vars_written: BTreeSet<NodeId>,
    pub makes_external_call: bool,
    pub makes_ether_transfer: bool,
}

pub fn summarize(
    unit: &crate::frontend::ast::SourceUnit,
    merged: &[MergedContract],
    points_to: &PointsToMap,
    cfgs: &BTreeMap<NodeId, Cfg>,
    scopes: &BTreeMap<NodeId, Scope>,
) -> BTreeMap<NodeId, MethodSummary> {
    let mut summaries: BTreeMap<NodeId, MethodSummary> = BTreeMap::new();
    let mut callees: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();

    // direct effects per function, internal calls recorded but not expanded
    for mc in merged {
        for function in &mc.functions {
            if !mc.contract.functions.iter().any(|f| f.id == function.id) {
                continue; // summarized at its defining contract
            }
            let mut summary = MethodSummary { function: function.id, ..Default::default() };
            let mut direct_callees = BTreeSet::new();
            let empty_bindings = HashMap::new();
            if let Some(cfg) = cfgs.get(&function.id) {
                let collector = Collector { unit, merged: mc, points_to, summaries: None };
                let fn_scope = &scopes[&function.id];
                for block in &cfg.blocks {
                    let Some(point) = block.point else { continue };
                    let Some(stmt) = unit.statement_by_id(point) else { continue };
                    let (scope, bindings) = match block.origin {
                        BlockOrigin::Modifier { modifier } => {
                            let env = &cfg.bindings[block.binding.unwrap()];
                            (&scopes[&modifier], &env.params)
                        }
                        _ => (fn_scope, &empty_bindings),
                    };
                    let acc = collector.collect(point, stmt, scope, bindings, fn_scope);
                    for event in &acc.events {
                        if !event.target.is_storage() {
                            continue;
                        }
                        if !is_state_var(event.target.decl, merged) {
                            continue;
                        }
                        match event.mode {
                            super::locations::AccessMode::Read => {
                                summary.state_vars_read.insert(event.target.decl);
                            }
                            super::locations::AccessMode::Write
                            | super::locations::AccessMode::Delete => {
                                summary.state_vars_written.insert(event.target.decl);
                            }
                            super::locations::AccessMode::Create => {}
                        }
                    }
                    summary.makes_external_call |= acc.facts.makes_external_call;
                    summary.makes_ether_transfer |= acc.facts.makes_ether_transfer;
                    direct_callees.extend(acc.facts.internal_callees.iter().copied());
                }
            }
            callees.insert(function.id, direct_callees);
            summaries.insert(function.id, summary);
        }
    }

    // fixpoint over the internal call graph: callers absorb callee effects
    loop {
        let mut changed = false;
        let ids: Vec<NodeId> = summaries.keys().copied().collect();
        for caller in &ids {
            let Some(callee_ids) = callees.get(caller) else { continue };
            for callee in callee_ids.clone() {
                let Some(callee_summary) = summaries.get(&callee).cloned() else { continue };
                let caller_summary = summaries.get_mut(caller).unwrap();
                for v in callee_summary.state_vars_read {
                    changed |= caller_summary.state_vars_read.insert(v);
                }
                for v in callee_summary.state_vars_written {
                    changed |= caller_summary.state_vars_written.insert(v);
                }
                if callee_summary.makes_external_call && !caller_summary.makes_external_call {
                    caller_summary.makes_external_call = true;
                    changed = true;
                }
                if callee_summary.makes_ether_transfer && !caller_summary.makes_ether_transfer {
                    caller_summary.makes_ether_transfer = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    summaries
}

fn is_state_var(decl: NodeId, merged: &[MergedContract]) -> bool {
    merged.iter().any(|mc| mc.state_vars.iter().any(|v| v.id == decl))
}

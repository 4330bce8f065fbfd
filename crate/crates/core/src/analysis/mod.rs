//! Program-analysis infrastructure: merged contract views, pointer analysis,
//! modifier-aware CFGs, method summaries, def-use graphs, and the dependence
//! classifier. All results are immutable once built; analyses of distinct
//! units may run in parallel.

pub mod access;
pub mod cfg;
pub mod dependence;
pub mod dfg;
pub mod dump;
pub mod locations;
pub mod points_to;
pub mod scope;
pub mod summary;

pub use cfg::{build_cfg, BlockOrigin, Cfg, EdgeKind};
pub use dependence::{classify_dependences, Dependence, DependenceKind};
pub use dfg::{build_dfg, Dfg, DfgEdge};
pub use locations::{AbstractLocation, AccessEvent, AccessMode};
pub use points_to::{pointer_analysis, PointsToMap};
pub use scope::{infer_type, Scope};
pub use summary::{summarize, MethodSummary};

use crate::frontend::ast::*;
use crate::frontend::calls::base_chain;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("function {function}: applied modifier {modifier:?} cannot be resolved")]
    MissingModifier { function: String, modifier: String },

    #[error("function {function} has no body")]
    NoBody { function: String },
}

/// A contract with its single-inheritance chain folded in; derived members
/// shadow base members by name.
#[derive(Debug)]
pub struct MergedContract<'u> {
    pub contract: &'u ContractDef,
    pub state_vars: Vec<&'u VarDecl>,
    pub functions: Vec<&'u FunctionDef>,
    pub modifiers: Vec<&'u ModifierDef>,
    pub structs: Vec<&'u StructDef>,
    pub events: Vec<&'u EventDef>,
}

impl<'u> MergedContract<'u> {
    pub fn has_payable_entry(&self) -> bool {
        self.functions.iter().any(|f| f.mutability == Mutability::Payable)
    }

    pub fn state_var_by_id(&self, id: NodeId) -> Option<&'u VarDecl> {
        self.state_vars.iter().find(|v| v.id == id).copied()
    }
}

pub fn build_merged(unit: &SourceUnit) -> Vec<MergedContract<'_>> {
    unit.contracts
        .iter()
        .map(|contract| {
            let mut chain = base_chain(unit, contract);
            chain.reverse(); // farthest base first, derived last
            chain.push(contract);

            let mut state_vars: Vec<&VarDecl> = Vec::new();
            let mut functions: Vec<&FunctionDef> = Vec::new();
            let mut modifiers: Vec<&ModifierDef> = Vec::new();
            let mut structs: Vec<&StructDef> = Vec::new();
            let mut events: Vec<&EventDef> = Vec::new();
            for c in chain {
                for v in &c.state_vars {
                    shadow_by_name(&mut state_vars, v, |x| x.name.as_deref());
                }
                for f in &c.functions {
                    if f.kind == FunctionKind::Regular {
                        shadow_by_name(&mut functions, f, |x| {
                            if x.kind == FunctionKind::Regular {
                                Some(x.name.as_str())
                            } else {
                                None
                            }
                        });
                    } else {
                        functions.push(f);
                    }
                }
                for m in &c.modifiers {
                    shadow_by_name(&mut modifiers, m, |x| Some(x.name.as_str()));
                }
                for s in &c.structs {
                    shadow_by_name(&mut structs, s, |x| Some(x.name.as_str()));
                }
                for e in &c.events {
                    shadow_by_name(&mut events, e, |x| Some(x.name.as_str()));
                }
            }
            MergedContract { contract, state_vars, functions, modifiers, structs, events }
        })
        .collect()
}

fn shadow_by_name<'u, T: ?Sized>(
    items: &mut Vec<&'u T>,
    new: &'u T,
    name: impl Fn(&T) -> Option<&str>,
) {
    if let Some(new_name) = name(new) {
        if let Some(slot) = items.iter_mut().find(|x| name(x) == Some(new_name)) {
            *slot = new;
            return;
        }
    }
    items.push(new);
}

/// Everything the detectors and the patcher need, computed in one pass:
/// pointer analysis, then CFGs, then summaries, then DFGs.
pub struct Analyses<'u> {
    pub unit: &'u SourceUnit,
    pub merged: Vec<MergedContract<'u>>,
    pub points_to: PointsToMap,
    pub cfgs: BTreeMap<NodeId, Cfg>,
    pub summaries: BTreeMap<NodeId, MethodSummary>,
    pub dfgs: BTreeMap<NodeId, Dfg>,
    /// Scopes keyed by function id (body scope) and modifier id.
    pub scopes: BTreeMap<NodeId, Scope>,
    /// Declaration id -> variable name, for dumps and reports.
    pub var_names: BTreeMap<NodeId, String>,
}

pub fn analyze(unit: &SourceUnit) -> Result<Analyses<'_>, AnalysisError> {
    let merged = build_merged(unit);
    let points_to = pointer_analysis(unit, &merged);

    let mut scopes: BTreeMap<NodeId, Scope> = BTreeMap::new();
    let mut var_names: BTreeMap<NodeId, String> = BTreeMap::new();
    for mc in &merged {
        for f in &mc.functions {
            if mc.contract.functions.iter().any(|x| x.id == f.id) {
                let scope = Scope::for_function(mc, f);
                collect_names(&scope, &mut var_names);
                scopes.insert(f.id, scope);
            }
        }
        for m in &mc.modifiers {
            if mc.contract.modifiers.iter().any(|x| x.id == m.id) {
                let scope = Scope::for_modifier(mc, m);
                collect_names(&scope, &mut var_names);
                scopes.insert(m.id, scope);
            }
        }
    }

    let mut cfgs: BTreeMap<NodeId, Cfg> = BTreeMap::new();
    for mc in &merged {
        for f in &mc.functions {
            if f.body.is_none() || cfgs.contains_key(&f.id) {
                continue;
            }
            // build in the defining contract's merged view
            if mc.contract.functions.iter().any(|x| x.id == f.id) {
                cfgs.insert(f.id, build_cfg(f, mc)?);
            }
        }
    }

    let summaries = summarize(unit, &merged, &points_to, &cfgs, &scopes);

    let mut dfgs: BTreeMap<NodeId, Dfg> = BTreeMap::new();
    for mc in &merged {
        for f in &mc.functions {
            if dfgs.contains_key(&f.id) || !cfgs.contains_key(&f.id) {
                continue;
            }
            if mc.contract.functions.iter().any(|x| x.id == f.id) {
                let dfg =
                    build_dfg(unit, mc, f.id, &cfgs[&f.id], &points_to, &summaries, &scopes);
                dfgs.insert(f.id, dfg);
            }
        }
    }

    Ok(Analyses { unit, merged, points_to, cfgs, summaries, dfgs, scopes, var_names })
}

fn collect_names(scope: &Scope, var_names: &mut BTreeMap<NodeId, String>) {
    for (name, decl) in &scope.vars {
        var_names.insert(*decl, name.clone());
    }
}

impl<'u> Analyses<'u> {
    pub fn merged_for(&self, contract_id: NodeId) -> Option<&MergedContract<'u>> {
        self.merged.iter().find(|m| m.contract.id == contract_id)
    }

    /// The merged contract that defines (or inherits) the given function.
    pub fn contract_of_function(&self, function_id: NodeId) -> Option<&MergedContract<'u>> {
        self.merged
            .iter()
            .find(|m| m.contract.functions.iter().any(|f| f.id == function_id))
            .or_else(|| {
                self.merged.iter().find(|m| m.functions.iter().any(|f| f.id == function_id))
            })
    }

    pub fn function_by_id(&self, function_id: NodeId) -> Option<&'u FunctionDef> {
        for mc in &self.merged {
            if let Some(f) = mc.functions.iter().find(|f| f.id == function_id) {
                return Some(f);
            }
        }
        None
    }

    pub fn var_name(&self, decl: NodeId) -> String {
        self.var_names.get(&decl).cloned().unwrap_or_else(|| decl.to_string())
    }
}

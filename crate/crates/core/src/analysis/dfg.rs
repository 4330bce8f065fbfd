//! Def-use dataflow graph over a function's CFG, via reaching definitions.
//!
//! Parameters, named returns, and state variables carry a pseudo-definition
//! at their declaration site, so a use of an otherwise-unwritten variable has
//! a def edge from its declaration. Writes to elementary variables update
//! strongly; collapsed composites (mappings, arrays, structs) update weakly.

use crate::frontend::ast::{Expression, NodeId, SourceUnit, TypeName};
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::access::{Collector, PointFacts};
use super::cfg::{BlockOrigin, Cfg};
use super::locations::{AbstractLocation, AccessEvent, AccessMode};
use super::points_to::PointsToMap;
use super::scope::Scope;
use super::summary::MethodSummary;
use super::MergedContract;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DfgEdge {
    /// Defining point: a statement, or a declaration for pseudo-defs.
    pub def: NodeId,
    pub usage: NodeId,
    pub location: AbstractLocation,
}

#[derive(Debug, Clone, Default)]
pub struct Dfg {
    pub function: NodeId,
    pub edges: Vec<DfgEdge>,
    pub events: BTreeMap<NodeId, Vec<AccessEvent>>,
    pub facts: BTreeMap<NodeId, PointFacts>,
    pub reads: BTreeMap<NodeId, BTreeSet<AbstractLocation>>,
    pub writes: BTreeMap<NodeId, BTreeSet<AbstractLocation>>,
}

impl Dfg {
    pub fn reads_of(&self, point: NodeId) -> &BTreeSet<AbstractLocation> {
        static EMPTY: BTreeSet<AbstractLocation> = BTreeSet::new();
        self.reads.get(&point).unwrap_or(&EMPTY)
    }

    pub fn writes_of(&self, point: NodeId) -> &BTreeSet<AbstractLocation> {
        static EMPTY: BTreeSet<AbstractLocation> = BTreeSet::new();
        self.writes.get(&point).unwrap_or(&EMPTY)
    }

    pub fn facts_of(&self, point: NodeId) -> Option<&PointFacts> {
        self.facts.get(&point)
    }

    /// Statements that read what `def_point` defined at `location`.
    pub fn uses_of_def(&self, def_point: NodeId, location: AbstractLocation) -> Vec<NodeId> {
        self.edges
            .iter()
            .filter(|e| e.def == def_point && e.location == location)
            .map(|e| e.usage)
            .collect()
    }

    /// Transitive backward closure: points whose definitions feed `start`.
    pub fn backward_slice(&self, start: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.usage == p) {
                if seen.insert(e.def) {
                    stack.push(e.def);
                }
            }
        }
        seen
    }
}

pub fn build_dfg(
    unit: &SourceUnit,
    merged: &MergedContract,
    function_id: NodeId,
    cfg: &Cfg,
    points_to: &PointsToMap,
    summaries: &BTreeMap<NodeId, MethodSummary>,
    scopes: &BTreeMap<NodeId, Scope>,
) -> Dfg {
    let fn_scope = &scopes[&function_id];
    let collector = Collector { unit, merged, points_to, summaries: Some(summaries) };
    let empty_bindings = HashMap::new();

    let mut dfg = Dfg { function: function_id, ..Default::default() };

    // per-block accesses
    let mut strong: BTreeMap<AbstractLocation, bool> = BTreeMap::new();
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
            match event.mode {
                AccessMode::Read => {
                    dfg.reads.entry(point).or_default().insert(event.target);
                }
                AccessMode::Write | AccessMode::Delete => {
                    dfg.writes.entry(point).or_default().insert(event.target);
                    strong.entry(event.target).or_insert_with(|| {
                        is_strong_location(event.target, fn_scope, scopes, merged)
                    });
                }
                AccessMode::Create => {}
            }
        }
        dfg.events.insert(point, acc.events);
        dfg.facts.insert(point, acc.facts);
    }

    // entry state: declarations are pseudo-defs for everything readable
    // before any write (parameters, named returns, state variables)
    let mut entry_state: BTreeMap<AbstractLocation, BTreeSet<NodeId>> = BTreeMap::new();
    for (decl, home) in &fn_scope.home_locations {
        let loc = AbstractLocation::new(*decl, *home);
        entry_state.entry(loc).or_default().insert(*decl);
    }

    // reaching definitions to fixpoint
    let nblocks = cfg.blocks.len();
    let mut in_sets: Vec<BTreeMap<AbstractLocation, BTreeSet<NodeId>>> = vec![BTreeMap::new(); nblocks];
    let mut out_sets: Vec<BTreeMap<AbstractLocation, BTreeSet<NodeId>>> = vec![BTreeMap::new(); nblocks];
    in_sets[cfg.entry] = entry_state.clone();
    out_sets[cfg.entry] = entry_state;

    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
    for (f, t, _) in &cfg.edges {
        preds[*t].push(*f);
    }

    let mut changed = true;
    while changed {
        changed = false;
        for b in 0..nblocks {
            if b == cfg.entry {
                continue;
            }
            let mut in_b: BTreeMap<AbstractLocation, BTreeSet<NodeId>> = BTreeMap::new();
            for p in &preds[b] {
                for (loc, defs) in &out_sets[*p] {
                    in_b.entry(*loc).or_default().extend(defs.iter().copied());
                }
            }
            let mut out_b = in_b.clone();
            if let Some(point) = cfg.blocks[b].point {
                if let Some(writes) = dfg.writes.get(&point) {
                    for loc in writes {
                        let entry = out_b.entry(*loc).or_default();
                        if strong.get(loc).copied().unwrap_or(false) {
                            entry.clear();
                        }
                        entry.insert(point);
                    }
                }
            }
            if in_b != in_sets[b] || out_b != out_sets[b] {
                in_sets[b] = in_b;
                out_sets[b] = out_b;
                changed = true;
            }
        }
    }

    // def-use edges: each read pairs with every reaching definition
    for block in &cfg.blocks {
        let Some(point) = block.point else { continue };
        let Some(reads) = dfg.reads.get(&point) else { continue };
        for loc in reads {
            if let Some(defs) = in_sets[block.id].get(loc) {
                for def in defs {
                    dfg.edges.push(DfgEdge { def: *def, usage: point, location: *loc });
                }
            }
        }
    }
    dfg.edges.sort();
    dfg.edges.dedup();
    dfg
}

/// Writes to elementary single-location variables replace prior definitions;
/// collapsed composites accumulate.
fn is_strong_location(
    loc: AbstractLocation,
    fn_scope: &Scope,
    scopes: &BTreeMap<NodeId, Scope>,
    merged: &MergedContract,
) -> bool {
    let ty = fn_scope
        .var_types
        .get(&loc.decl)
        .or_else(|| scopes.values().find_map(|s| s.var_types.get(&loc.decl)));
    let elementary = match ty {
        Some(t) => is_elementary_resolved(t, merged),
        None => false,
    };
    elementary
}

fn is_elementary_resolved(ty: &TypeName, merged: &MergedContract) -> bool {
    match ty {
        TypeName::UserDefined(name) => {
            // a contract-typed variable behaves like a scalar handle
            !merged.structs.iter().any(|s| s.name == *name)
        }
        other => other.is_elementary(),
    }
}

/// Convenience for detectors: whether the expression contains, anywhere, a
/// read of `block.timestamp`/`now`.
pub fn expr_reads_timestamp(expr: &Expression) -> bool {
    let mut found = false;
    crate::frontend::ast::walk_exprs(expr, &mut |e| match e {
        Expression::Identifier(id) if id.name == "now" => found = true,
        Expression::Member(m) => {
            if m.member == "timestamp" {
                if let Expression::Identifier(b) = &m.base {
                    if b.name == "block" {
                        found = true;
                    }
                }
            }
        }
        _ => {}
    });
    found
}

//! Flow- and context-insensitive pointer analysis specialized to Solidity's
//! data locations.
//!
//! Reference edges exist in exactly two situations: a storage composite
//! assigned to a local declared `storage`, and a memory composite assigned to
//! another memory composite. Every other assignment copies.

use crate::frontend::ast::*;
use std::collections::{BTreeMap, BTreeSet};

use super::locations::AbstractLocation;
use super::scope::Scope;
use super::MergedContract;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignClass {
    /// Storage composite into a `storage`-located local: reference.
    StorageRef,
    /// Memory composite into a memory composite: shared alias set.
    MemoryRef,
    /// Value copy; no points-to effect.
    Copy,
}

#[derive(Debug, Clone, Default)]
pub struct PointsToMap {
    map: BTreeMap<NodeId, BTreeSet<AbstractLocation>>,
    /// Reference-typed locals whose right-hand side never resolved; they keep
    /// the bottom (empty) set and are surfaced in reports.
    pub unresolved: Vec<NodeId>,
}

impl PointsToMap {
    pub fn points_to(&self, var: NodeId) -> Option<&BTreeSet<AbstractLocation>> {
        self.map.get(&var)
    }

    /// Locations an access through `var` touches. Falls back to the variable's
    /// own location when the analysis has no entry (e.g. modifier locals).
    pub fn locations_of(&self, var: NodeId, scope: &Scope) -> Vec<AbstractLocation> {
        if let Some(set) = self.map.get(&var) {
            if !set.is_empty() {
                return set.iter().copied().collect();
            }
        }
        let home = scope.home_locations.get(&var).copied().unwrap_or(DataLocation::Memory);
        vec![AbstractLocation::new(var, home)]
    }

    fn set_mut(&mut self, var: NodeId) -> &mut BTreeSet<AbstractLocation> {
        self.map.entry(var).or_default()
    }
}

/// Classify one assignment (or initialized declaration) into the two
/// reference-creation rules or a copy. `lhs` must already resolve to a
/// non-state variable for a reference to be possible; callers enforce that.
pub fn classify_assignment(lhs: NodeId, rhs: &Expression, scope: &Scope) -> AssignClass {
    let Some(lhs_ty) = scope.var_types.get(&lhs) else { return AssignClass::Copy };
    if !lhs_ty.is_composite() {
        return AssignClass::Copy;
    }
    let lhs_home = scope.home_locations.get(&lhs).copied().unwrap_or(DataLocation::Memory);

    let Some(base) = rhs_base_var(rhs, scope) else { return AssignClass::Copy };
    let Some(rhs_ty) = scope.var_types.get(&base) else { return AssignClass::Copy };
    if !rhs_ty.is_composite() {
        return AssignClass::Copy;
    }
    let rhs_home = scope.home_locations.get(&base).copied().unwrap_or(DataLocation::Memory);

    match (lhs_home, rhs_home) {
        (DataLocation::Storage, DataLocation::Storage) => AssignClass::StorageRef,
        (DataLocation::Memory, DataLocation::Memory) => AssignClass::MemoryRef,
        _ => AssignClass::Copy,
    }
}

/// Root variable of a right-hand side that can transfer a reference:
/// identifier, index into one, or member of one.
fn rhs_base_var(expr: &Expression, scope: &Scope) -> Option<NodeId> {
    expr.base_identifier().and_then(|id| scope.resolve(&id.name))
}

/// Least fixpoint of the assignment constraints of the whole unit.
pub fn pointer_analysis(unit: &SourceUnit, merged: &[MergedContract]) -> PointsToMap {
    let mut pts = PointsToMap::default();
    let mut constraints: Vec<(NodeId, NodeId, AssignClass)> = Vec::new();
    let mut ref_locals: BTreeSet<NodeId> = BTreeSet::new();

    for mc in merged {
        // self locations for every declaration visible in this contract
        for v in &mc.state_vars {
            pts.set_mut(v.id).insert(AbstractLocation::new(v.id, DataLocation::Storage));
        }
        for function in &mc.functions {
            let scope = Scope::for_function(mc, function);
            seed_scope(&mut pts, &scope);
            if let Some(body) = &function.body {
                collect_constraints(&body.statements, &scope, &mut constraints, &mut ref_locals);
            }
        }
        for modifier in &mc.modifiers {
            let scope = Scope::for_modifier(mc, modifier);
            seed_scope(&mut pts, &scope);
            collect_constraints(&modifier.body.statements, &scope, &mut constraints, &mut ref_locals);
        }
    }
    let _ = unit;

    // monotone union until stable
    loop {
        let mut changed = false;
        for (lhs, rhs, _class) in &constraints {
            let rhs_set: Vec<AbstractLocation> =
                pts.map.get(rhs).map(|s| s.iter().copied().collect()).unwrap_or_default();
            let lhs_set = pts.set_mut(*lhs);
            for loc in rhs_set {
                changed |= lhs_set.insert(loc);
            }
        }
        if !changed {
            break;
        }
    }

    // a reference local that gained nothing beyond bottom is unresolved
    for var in ref_locals {
        if pts.map.get(&var).map_or(true, |s| s.is_empty()) {
            pts.unresolved.push(var);
        }
    }
    pts
}

fn seed_scope(pts: &mut PointsToMap, scope: &Scope) {
    for (decl, home) in &scope.home_locations {
        if scope.is_state_var(*decl) {
            continue; // already seeded with the storage self-location
        }
        let ty = scope.var_types.get(decl);
        let is_storage_pointer =
            *home == DataLocation::Storage && ty.map_or(false, |t| t.is_composite());
        if is_storage_pointer {
            // bottom until a reference-creating assignment resolves it
            pts.set_mut(*decl);
        } else {
            pts.set_mut(*decl).insert(AbstractLocation::new(*decl, *home));
        }
    }
}

fn collect_constraints(
    stmts: &[Statement],
    scope: &Scope,
    constraints: &mut Vec<(NodeId, NodeId, AssignClass)>,
    ref_locals: &mut BTreeSet<NodeId>,
) {
    let mut consider = |lhs: NodeId, rhs: &Expression, scope: &Scope| {
        if scope.is_state_var(lhs) {
            return;
        }
        let class = classify_assignment(lhs, rhs, scope);
        if class == AssignClass::Copy {
            return;
        }
        if let Some(base) = rhs_base_var(rhs, scope) {
            constraints.push((lhs, base, class));
        }
    };

    let mut visit = |stmt: &Statement| {
        match stmt {
            Statement::VarDecl(d) => {
                let home = scope
                    .home_locations
                    .get(&d.decl.id)
                    .copied()
                    .unwrap_or(DataLocation::Memory);
                if home == DataLocation::Storage && d.decl.ty.is_composite() {
                    ref_locals.insert(d.decl.id);
                }
                if let Some(init) = &d.decl.initializer {
                    consider(d.decl.id, init, scope);
                }
            }
            Statement::Expr(e) => {
                if let Expression::Assign(a) = &e.expr {
                    if a.op == AssignOp::Assign {
                        if let Expression::Identifier(id) = &a.target {
                            if let Some(lhs) = scope.resolve(&id.name) {
                                consider(lhs, &a.value, scope);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    };

    for stmt in stmts {
        walk(stmt, &mut visit);
    }
}

fn walk(stmt: &Statement, f: &mut dyn FnMut(&Statement)) {
    f(stmt);
    match stmt {
        Statement::Block(b) => {
            for s in &b.statements {
                walk(s, f);
            }
        }
        Statement::If(i) => {
            walk(&i.then_branch, f);
            if let Some(e) = &i.else_branch {
                walk(e, f);
            }
        }
        Statement::While(w) => walk(&w.body, f),
        Statement::For(fo) => {
            if let Some(init) = &fo.init {
                walk(init, f);
            }
            walk(&fo.body, f);
        }
        _ => {}
    }
}

/// Map from variable name to merged declaration plus unit-wide helpers lives
/// in [`Scope`]; this module only owns the points-to relation.
#[allow(dead_code)]
fn _doc_anchor() {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_merged;
    use crate::frontend::parse;

    fn analyze(src: &str) -> (SourceUnit, PointsToMap) {
        let unit = parse(src, "t").unwrap();
        let merged = build_merged(&unit);
        let pts = pointer_analysis(&unit, &merged);
        (unit, pts)
    }

    fn decl_of(unit: &SourceUnit, name: &str) -> NodeId {
        let mut found = None;
        unit.for_each_statement(&mut |s| {
            if let Statement::VarDecl(d) = s {
                if d.decl.name.as_deref() == Some(name) {
                    found = Some(d.decl.id);
                }
            }
        });
        found.unwrap_or_else(|| panic!("no local {name}"))
    }

    const FIG4: &str = r#"
contract ReferenceDemo {
    struct Data {
        uint256 value;
        bool flag;
    }

    Data internal stateData;
    uint256 internal counter;

    function mutate(uint256[] memory input) public {
        Data storage ref = stateData;
        uint256[] memory copyRef = input;
        ref.value = counter;
        counter = copyRef[0];
    }
}
"#;

    #[test]
    fn storage_to_local_storage_creates_reference() {
        let (unit, pts) = analyze(FIG4);
        let state_data = unit.contracts[0].state_vars[0].id;
        let local = decl_of(&unit, "ref");
        let set = pts.points_to(local).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.contains(&AbstractLocation::new(state_data, DataLocation::Storage)));
    }

    #[test]
    fn memory_to_memory_shares_alias_set() {
        let (unit, pts) = analyze(FIG4);
        let c = &unit.contracts[0];
        let param = c.functions[0].params[0].id;
        let local = decl_of(&unit, "copyRef");
        let set = pts.points_to(local).unwrap();
        assert!(set.contains(&AbstractLocation::new(param, DataLocation::Memory)));
    }

    #[test]
    fn elementary_copy_never_aliases() {
        let src = r#"
contract A {
    function f() public pure returns (uint256 r) {
        uint256 b = 1;
        uint256 a = b;
        return a;
    }
}
"#;
        let (unit, pts) = analyze(src);
        let a = decl_of(&unit, "a");
        let set = pts.points_to(a).unwrap();
        assert_eq!(set.len(), 1, "{set:?}");
        assert!(set.contains(&AbstractLocation::new(a, DataLocation::Memory)));
    }

    #[test]
    fn storage_to_memory_is_a_copy() {
        let src = r#"
contract A {
    struct Data {
        uint256 value;
    }

    Data internal stored;

    function f() public view {
        Data memory local = stored;
        local.value;
    }
}
"#;
        let (unit, pts) = analyze(src);
        let local = decl_of(&unit, "local");
        let set = pts.points_to(local).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.contains(&AbstractLocation::new(local, DataLocation::Memory)));
    }
}

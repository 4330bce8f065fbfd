//! Method-level reentrancy fix: move the storage writes that follow an
//! external call to just before it, eliminating dependencies on the call via
//! temporaries where needed.
//!
//! Plan actions, per dependence between a write `w` (to be hoisted) and a
//! statement `s` it jumps over:
//! - `s` reads what `w` writes: snapshot the old value into a temporary
//!   declared before the hoisted writes and redirect the read (including the
//!   reads inside the call statement itself).
//! - `s` writes what `w` reads or writes, `s` not the call: move `s` along,
//!   keeping original relative order.
//! - the call itself writes what `w` reads or writes: blocked; the lock
//!   pattern is the fallback.
//! - shared reads only: the write moves alone.

use crate::analysis::{
    classify_dependences, infer_type, Analyses, DependenceKind, AbstractLocation,
};
use crate::detectors::Finding;
use crate::frontend::ast::*;
use crate::frontend::print_expression;
use std::collections::{BTreeMap, BTreeSet};

use super::wrap::finding_key;
use super::{containing_block, EditKind, EditScript, FixPattern, PatchError, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ReorderAction {
    IntroduceTemp,
    MovePair,
    MoveSingle,
    Blocked,
}

#[derive(Debug, Clone)]
pub enum BlockedReason {
    /// A WAR/WAW dependence (in the hoisted order) runs from a write to the
    /// call statement itself; the write needs the call's result.
    DependenceOnCall { kind: DependenceKind, location: String },
    /// A write (or a statement that must move with it) is nested inside
    /// control flow; hoisting it would change execution conditions.
    StatementNotMovable { statement: NodeId },
    /// The needed snapshot is not a copyable elementary value.
    SnapshotNotCopyable { expression: String },
}

impl std::fmt::Display for BlockedReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockedReason::DependenceOnCall { kind, location } => {
                write!(f, "{} dependence between the call and a write to {}", kind.label(), location)
            }
            BlockedReason::StatementNotMovable { statement } => {
                write!(f, "statement {} is nested inside control flow", statement)
            }
            BlockedReason::SnapshotNotCopyable { expression } => {
                write!(f, "snapshot of {:?} is not a copyable value", expression)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TempPlan {
    pub location: AbstractLocation,
    pub temp_name: String,
    pub ty: TypeName,
    /// Read expression snapshotted before the hoisted writes run.
    pub snapshot: Expression,
    /// Expression occurrences to redirect to the temporary.
    pub replacements: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct ReorderPlan {
    pub function: NodeId,
    pub call_site: NodeId,
    pub block: NodeId,
    /// Storage writes after the call, in original order.
    pub writes: Vec<NodeId>,
    /// Writes plus statements paired with them, in original order.
    pub moved: Vec<NodeId>,
    pub per_dependence: Vec<(crate::analysis::Dependence, ReorderAction)>,
    pub temps: Vec<TempPlan>,
    pub blocked: Option<BlockedReason>,
}

pub fn plan_reorder(finding: &Finding, analyses: &Analyses) -> Result<ReorderPlan, PatchError> {
    let function_id = finding
        .site
        .function_id
        .ok_or_else(|| PatchError::NotApplicable("finding has no function".into()))?;
    let call_site = finding.site.node;
    let cfg = analyses
        .cfgs
        .get(&function_id)
        .ok_or_else(|| PatchError::NotApplicable("function not analyzed".into()))?;
    let dfg = analyses
        .dfgs
        .get(&function_id)
        .ok_or_else(|| PatchError::NotApplicable("function not analyzed".into()))?;
    let mc = analyses
        .contract_of_function(function_id)
        .ok_or_else(|| PatchError::NotApplicable("function outside any contract".into()))?;
    let scope = &analyses.scopes[&function_id];

    let (block, _call_index) = containing_block(analyses.unit, call_site)
        .ok_or(PatchError::MissingTarget(call_site))?;

    // program order over all points of the function
    let order: BTreeMap<NodeId, usize> =
        cfg.points_in_order().into_iter().enumerate().map(|(i, p)| (p, i)).collect();

    let mut plan = ReorderPlan {
        function: function_id,
        call_site,
        block,
        writes: Vec::new(),
        moved: Vec::new(),
        per_dependence: Vec::new(),
        temps: Vec::new(),
        blocked: None,
    };

    // the window: the call and everything it can reach
    let mut window: Vec<NodeId> = vec![call_site];
    window.extend(cfg.points_reachable_from(call_site));
    window.sort_by_key(|p| order.get(p).copied().unwrap_or(usize::MAX));
    window.dedup();

    // storage writes to state variables after the call
    let writes: Vec<NodeId> = window
        .iter()
        .copied()
        .filter(|p| *p != call_site)
        .filter(|p| {
            dfg.writes_of(*p)
                .iter()
                .any(|loc| loc.is_storage() && mc.state_var_by_id(loc.decl).is_some())
        })
        .collect();
    plan.writes = writes.clone();
    if writes.is_empty() {
        return Err(PatchError::NotApplicable("no storage write follows the call".into()));
    }

    let deps = classify_dependences(cfg, dfg, &window);

    // close the moved set over move-pair requirements
    let mut moved: BTreeSet<NodeId> = writes.iter().copied().collect();
    loop {
        let mut grew = false;
        for dep in &deps {
            if !moved.contains(&dep.to) || moved.contains(&dep.from) {
                continue;
            }
            match dep.kind {
                DependenceKind::Raw | DependenceKind::Waw => {
                    if dep.from == call_site {
                        plan.per_dependence.push((*dep, ReorderAction::Blocked));
                        plan.blocked = Some(BlockedReason::DependenceOnCall {
                            kind: flip_kind(dep.kind),
                            location: analyses.var_name(dep.location.decl),
                        });
                    } else {
                        plan.per_dependence.push((*dep, ReorderAction::MovePair));
                        moved.insert(dep.from);
                        grew = true;
                    }
                }
                DependenceKind::War => {
                    plan.per_dependence.push((*dep, ReorderAction::IntroduceTemp));
                }
                DependenceKind::Rar => {
                    plan.per_dependence.push((*dep, ReorderAction::MoveSingle));
                }
            }
        }
        plan.per_dependence.sort_by_key(|(d, _)| *d);
        plan.per_dependence.dedup_by_key(|(d, _)| *d);
        if !grew {
            break;
        }
    }
    if plan.blocked.is_some() {
        return Ok(plan);
    }

    // every moved statement must sit directly in the call's block, after it
    let block_stmts = block_statement_ids(analyses.unit, block);
    let call_pos_in_block = block_stmts.iter().position(|s| *s == call_site);
    for m in &moved {
        let movable = call_pos_in_block
            .and_then(|ci| block_stmts.iter().position(|s| s == m).map(|mi| mi > ci))
            .unwrap_or(false);
        if !movable {
            plan.blocked = Some(BlockedReason::StatementNotMovable { statement: *m });
            return Ok(plan);
        }
    }

    plan.moved = block_stmts.iter().copied().filter(|s| moved.contains(s)).collect();

    // temporaries: for each location written by a hoisted write and read by
    // a statement that stays behind but originally ran before that write
    let mut first_write_order: BTreeMap<AbstractLocation, usize> = BTreeMap::new();
    for m in &plan.moved {
        for loc in dfg.writes_of(*m) {
            if !loc.is_storage() || mc.state_var_by_id(loc.decl).is_none() {
                continue;
            }
            let pos = order[m];
            first_write_order
                .entry(*loc)
                .and_modify(|p| *p = (*p).min(pos))
                .or_insert(pos);
        }
    }

    let mut used_names: BTreeSet<String> = BTreeSet::new();
    let mut temp_index: BTreeMap<(AbstractLocation, String), usize> = BTreeMap::new();
    for dep in &deps {
        if dep.kind != DependenceKind::War || !moved.contains(&dep.to) || moved.contains(&dep.from)
        {
            continue;
        }
        let Some(first_write) = first_write_order.get(&dep.location) else { continue };
        let reader = dep.from;
        if order.get(&reader).copied().unwrap_or(usize::MAX) > *first_write {
            // the reader already saw the new value in the original order
            continue;
        }
        let Some(stmt) = analyses.unit.statement_by_id(reader) else { continue };
        let occurrences = location_reads(stmt, dep.location, analyses, function_id);
        for (expr_id, printed, snapshot) in occurrences {
            let key = (dep.location, printed.clone());
            match temp_index.get(&key) {
                Some(i) => {
                    plan.temps[*i].replacements.push(expr_id);
                }
                None => {
                    let Some(ty) = infer_type(&snapshot, scope, mc) else {
                        plan.blocked =
                            Some(BlockedReason::SnapshotNotCopyable { expression: printed });
                        return Ok(plan);
                    };
                    if !copyable(&ty, mc) {
                        plan.blocked =
                            Some(BlockedReason::SnapshotNotCopyable { expression: printed });
                        return Ok(plan);
                    }
                    let base = analyses.var_name(dep.location.decl);
                    let name = temp_name(analyses.unit, &base, &mut used_names);
                    temp_index.insert(key, plan.temps.len());
                    plan.temps.push(TempPlan {
                        location: dep.location,
                        temp_name: name,
                        ty,
                        snapshot,
                        replacements: vec![expr_id],
                    });
                }
            }
        }
    }

    Ok(plan)
}

/// Emit the edit script for an unblocked plan: temp declarations directly
/// before the first hoisted write, hoisted statements in original order, and
/// redirected reads in the statements left behind.
pub fn apply_reorder(plan: &ReorderPlan, _unit: &SourceUnit) -> Result<EditScript, PatchError> {
    if let Some(reason) = &plan.blocked {
        return Err(PatchError::PlanBlocked(reason.to_string()));
    }
    let mut script = EditScript::new(FixPattern::Reorder, format!("Reentrancy@{}", plan.call_site));
    for temp in &plan.temps {
        for occurrence in &temp.replacements {
            let replacement = Expression::Identifier(Identifier {
                id: NodeId(0), // renumbered on apply
                span: Span::Synthetic,
                name: temp.temp_name.clone(),
            });
            script.push(EditKind::ReplaceExpr { expr: *occurrence, node: replacement });
        }
    }
    for temp in &plan.temps {
        script.push(EditKind::DeclareLocal {
            position: Position::Before { statement: plan.call_site },
            name: temp.temp_name.clone(),
            ty: temp.ty.clone(),
            initializer: temp.snapshot.clone(),
        });
    }
    for m in &plan.moved {
        script.push(EditKind::MoveStatement {
            stmt: *m,
            new_position: Position::Before { statement: plan.call_site },
        });
    }
    Ok(script)
}

/// Reorder with the finding key attached.
pub fn reorder_script(plan: &ReorderPlan, unit: &SourceUnit, finding: &Finding) -> Result<EditScript, PatchError> {
    let mut script = apply_reorder(plan, unit)?;
    let key = finding_key(finding);
    script.finding = key.clone();
    for e in &mut script.edits {
        e.finding = key.clone();
    }
    Ok(script)
}

fn flip_kind(original: DependenceKind) -> DependenceKind {
    // report the dependence as seen from the hoisted write toward the call
    match original {
        DependenceKind::Raw => DependenceKind::War,
        other => other,
    }
}

fn block_statement_ids(unit: &SourceUnit, block_id: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut found = false;
    unit.for_each_statement(&mut |s| {
        if let Statement::Block(b) = s {
            if b.id == block_id && !found {
                found = true;
                out = b.statements.iter().map(|s| s.id()).collect();
            }
        }
    });
    if !found {
        // function body blocks are not visited as statements; scan directly
        for c in &unit.contracts {
            for f in &c.functions {
                if let Some(body) = &f.body {
                    if body.id == block_id {
                        return body.statements.iter().map(|s| s.id()).collect();
                    }
                }
            }
            for m in &c.modifiers {
                if m.body.id == block_id {
                    return m.body.statements.iter().map(|s| s.id()).collect();
                }
            }
        }
    }
    out
}

/// Maximal read expressions of `location` inside a statement, with their
/// canonical text. The statement is known not to write storage, so every
/// occurrence is a read.
fn location_reads(
    stmt: &Statement,
    location: AbstractLocation,
    analyses: &Analyses,
    function_id: NodeId,
) -> Vec<(NodeId, String, Expression)> {
    let scope = &analyses.scopes[&function_id];
    let mut out = Vec::new();
    for root in statement_exprs(stmt) {
        collect(root, location, analyses, scope, &mut out);
    }
    return out;

    fn collect(
        expr: &Expression,
        location: AbstractLocation,
        analyses: &Analyses,
        scope: &crate::analysis::Scope,
        out: &mut Vec<(NodeId, String, Expression)>,
    ) {
        if let Some(base) = expr.base_identifier() {
            if let Some(decl) = scope.resolve(&base.name) {
                let hits = analyses
                    .points_to
                    .locations_of(decl, scope)
                    .iter()
                    .any(|loc| *loc == location);
                if hits {
                    let printed = print_expression(expr).unwrap_or_default();
                    out.push((expr.id(), printed, expr.clone()));
                    // index expressions may read the location independently
                    if let Expression::Index(ix) = expr {
                        collect(&ix.index, location, analyses, scope, out);
                    }
                    return;
                }
            }
        }
        match expr {
            Expression::Binary(e) => {
                collect(&e.left, location, analyses, scope, out);
                collect(&e.right, location, analyses, scope, out);
            }
            Expression::Unary(e) => collect(&e.operand, location, analyses, scope, out),
            Expression::Assign(e) => {
                collect(&e.target, location, analyses, scope, out);
                collect(&e.value, location, analyses, scope, out);
            }
            Expression::Conditional(e) => {
                collect(&e.condition, location, analyses, scope, out);
                collect(&e.then_value, location, analyses, scope, out);
                collect(&e.else_value, location, analyses, scope, out);
            }
            Expression::Member(e) => collect(&e.base, location, analyses, scope, out),
            Expression::Index(e) => {
                collect(&e.base, location, analyses, scope, out);
                collect(&e.index, location, analyses, scope, out);
            }
            Expression::Call(e) => {
                collect(&e.callee, location, analyses, scope, out);
                for opt in &e.options {
                    collect(&opt.value, location, analyses, scope, out);
                }
                for a in &e.args {
                    collect(a, location, analyses, scope, out);
                }
            }
            Expression::Tuple(e) => {
                for el in &e.elements {
                    collect(el, location, analyses, scope, out);
                }
            }
            _ => {}
        }
    }
}

/// Mapping and unbounded-array values cannot be copied into a local; only
/// elementary values (and struct-free user types) snapshot safely.
fn copyable(ty: &TypeName, mc: &crate::analysis::MergedContract) -> bool {
    match ty {
        TypeName::UserDefined(name) => !mc.structs.iter().any(|s| s.name == *name),
        TypeName::Mapping { .. } | TypeName::Array { .. } | TypeName::Inferred => false,
        _ => true,
    }
}

/// `<var>_temp`, suffixed numerically on collision with unit names or other
/// temporaries of the same plan.
fn temp_name(unit: &SourceUnit, base: &str, used: &mut BTreeSet<String>) -> String {
    let stem = format!("{}_temp", base);
    let mut candidate = super::fresh_name(unit, &stem);
    let mut i = 2;
    while used.contains(&candidate) {
        candidate = format!("{}{}", stem, i);
        i += 1;
    }
    used.insert(candidate.clone());
    candidate
}

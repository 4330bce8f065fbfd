//! Extraction of access events (create/read/write/delete) and per-point
//! facts from one statement. Shared by the summary pass and the dataflow
//! graph builder; reference variables resolve through the points-to map.

use crate::frontend::ast::*;
use crate::frontend::{classify_call, resolve_function, CallKind};
use std::collections::{BTreeMap, HashMap};

use super::locations::{AbstractLocation, AccessEvent, AccessMode};
use super::points_to::{classify_assignment, AssignClass, PointsToMap};
use super::scope::Scope;
use super::summary::MethodSummary;
use super::MergedContract;

/// Statement-level facts that are not variable accesses.
#[derive(Debug, Clone, Default)]
pub struct PointFacts {
    pub makes_external_call: bool,
    pub makes_ether_transfer: bool,
    pub makes_delegatecall: bool,
    pub reads_timestamp: bool,
    /// Call expressions handing control to foreign code, with their kind.
    pub external_calls: Vec<(NodeId, CallKind)>,
    /// Same-contract callees, resolved; filled when summaries are absent.
    pub internal_callees: Vec<NodeId>,
}

pub struct Collector<'a> {
    pub unit: &'a SourceUnit,
    pub merged: &'a MergedContract<'a>,
    pub points_to: &'a PointsToMap,
    /// When present, internal calls contribute their callee's state-variable
    /// effects at the call point.
    pub summaries: Option<&'a BTreeMap<NodeId, MethodSummary>>,
}

pub struct StatementAccesses {
    pub events: Vec<AccessEvent>,
    pub facts: PointFacts,
}

impl<'a> Collector<'a> {
    /// Collect accesses for the expressions evaluated directly by `stmt`
    /// (nested statements are separate program points).
    pub fn collect(
        &self,
        point: NodeId,
        stmt: &Statement,
        scope: &Scope,
        bindings: &HashMap<String, Expression>,
        arg_scope: &Scope,
    ) -> StatementAccesses {
        let mut walker = Walker {
            ctx: self,
            point,
            scope,
            bindings,
            arg_scope,
            events: Vec::new(),
            facts: PointFacts::default(),
        };

        if let Statement::VarDecl(decl_stmt) = stmt {
            walker.var_decl(&decl_stmt.decl);
        } else {
            for expr in statement_exprs(stmt) {
                walker.read_expr(expr, scope, true);
            }
        }

        walker.events.sort_by_key(|e| (e.target, e.mode));
        walker.events.dedup();
        StatementAccesses { events: walker.events, facts: walker.facts }
    }
}

struct Walker<'a, 'c> {
    ctx: &'c Collector<'a>,
    point: NodeId,
    scope: &'c Scope,
    bindings: &'c HashMap<String, Expression>,
    arg_scope: &'c Scope,
    events: Vec<AccessEvent>,
    facts: PointFacts,
}

impl<'a, 'c> Walker<'a, 'c> {
    fn emit(&mut self, target: AbstractLocation, mode: AccessMode) {
        self.events.push(AccessEvent { point: self.point, target, mode });
    }

    fn emit_var(&mut self, decl: NodeId, scope: &Scope, mode: AccessMode) {
        for loc in self.ctx.points_to.locations_of(decl, scope) {
            self.emit(loc, mode);
        }
    }

    fn var_decl(&mut self, decl: &VarDecl) {
        let home = self
            .scope
            .home_locations
            .get(&decl.id)
            .copied()
            .unwrap_or(DataLocation::Memory);
        self.emit(AbstractLocation::new(decl.id, home), AccessMode::Create);
        if let Some(init) = &decl.initializer {
            self.read_expr(init, self.scope, true);
            match classify_assignment(decl.id, init, self.scope) {
                // reference creation rebinds the pointer; no data write
                AssignClass::StorageRef | AssignClass::MemoryRef => {}
                AssignClass::Copy => self.emit(AbstractLocation::new(decl.id, home), AccessMode::Write),
            }
        }
    }

    /// Read every variable the expression evaluates. `allow_bindings` is
    /// false once we have already jumped into a bound modifier argument.
    fn read_expr(&mut self, expr: &Expression, scope: &Scope, allow_bindings: bool) {
        match expr {
            Expression::Identifier(id) => self.read_ident(id, scope, allow_bindings),
            Expression::Literal(_) | Expression::ElementaryType(_) => {}
            Expression::Binary(e) => {
                self.read_expr(&e.left, scope, allow_bindings);
                self.read_expr(&e.right, scope, allow_bindings);
            }
            Expression::Unary(e) => match e.op {
                UnaryOp::Delete => {
                    self.write_target(&e.operand, scope, allow_bindings, false);
                    self.delete_target(&e.operand, scope);
                }
                UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                    self.write_target(&e.operand, scope, allow_bindings, true);
                }
                _ => self.read_expr(&e.operand, scope, allow_bindings),
            },
            Expression::Assign(e) => {
                if let Some(class) = self.rebinding(&e.target, &e.value, scope) {
                    // pointer rebinding: reads the right-hand side only
                    let _ = class;
                    self.read_expr(&e.value, scope, allow_bindings);
                    return;
                }
                self.write_target(&e.target, scope, allow_bindings, e.op.reads_target());
                self.read_expr(&e.value, scope, allow_bindings);
            }
            Expression::Conditional(e) => {
                self.read_expr(&e.condition, scope, allow_bindings);
                self.read_expr(&e.then_value, scope, allow_bindings);
                self.read_expr(&e.else_value, scope, allow_bindings);
            }
            Expression::Member(e) => {
                if let Expression::Identifier(base) = &e.base {
                    if base.name == "block" {
                        if e.member == "timestamp" {
                            self.facts.reads_timestamp = true;
                        }
                        return;
                    }
                    if base.name == "msg" || base.name == "tx" || base.name == "abi" {
                        return;
                    }
                }
                self.read_expr(&e.base, scope, allow_bindings);
            }
            Expression::Index(e) => {
                self.read_expr(&e.base, scope, allow_bindings);
                self.read_expr(&e.index, scope, allow_bindings);
            }
            Expression::Call(e) => self.call(expr, e, scope, allow_bindings),
            Expression::Tuple(e) => {
                for el in &e.elements {
                    self.read_expr(el, scope, allow_bindings);
                }
            }
        }
    }

    fn read_ident(&mut self, id: &Identifier, scope: &Scope, allow_bindings: bool) {
        if id.name == "now" {
            self.facts.reads_timestamp = true;
            return;
        }
        if allow_bindings {
            if let Some(bound) = self.bindings.get(&id.name) {
                let bound = bound.clone();
                self.read_expr(&bound, self.arg_scope, false);
                return;
            }
        }
        if let Some(decl) = scope.resolve(&id.name) {
            self.emit_var(decl, scope, AccessMode::Read);
        }
    }

    fn write_target(
        &mut self,
        target: &Expression,
        scope: &Scope,
        allow_bindings: bool,
        also_read: bool,
    ) {
        match target {
            Expression::Identifier(id) => {
                if allow_bindings && self.bindings.contains_key(&id.name) {
                    // assignment to a modifier parameter writes its copy only
                    return;
                }
                if let Some(decl) = scope.resolve(&id.name) {
                    if also_read {
                        self.emit_var(decl, scope, AccessMode::Read);
                    }
                    self.emit_var(decl, scope, AccessMode::Write);
                }
            }
            Expression::Member(m) => self.write_target(&m.base, scope, allow_bindings, also_read),
            Expression::Index(ix) => {
                self.read_expr(&ix.index, scope, allow_bindings);
                self.write_target(&ix.base, scope, allow_bindings, also_read)
            }
            Expression::Tuple(t) => {
                for el in &t.elements {
                    self.write_target(el, scope, allow_bindings, also_read);
                }
            }
            other => self.read_expr(other, scope, allow_bindings),
        }
    }

    fn delete_target(&mut self, target: &Expression, scope: &Scope) {
        if let Some(base) = target.base_identifier() {
            if let Some(decl) = scope.resolve(&base.name) {
                self.emit_var(decl, scope, AccessMode::Delete);
            }
        }
    }

    fn rebinding(
        &self,
        target: &Expression,
        value: &Expression,
        scope: &Scope,
    ) -> Option<AssignClass> {
        let Expression::Identifier(id) = target else { return None };
        let decl = scope.resolve(&id.name)?;
        if scope.is_state_var(decl) {
            return None;
        }
        match classify_assignment(decl, value, scope) {
            AssignClass::Copy => None,
            class => Some(class),
        }
    }

    fn call(&mut self, expr: &Expression, call: &CallExpr, scope: &Scope, allow_bindings: bool) {
        let kind = classify_call(expr, self.ctx.unit, self.ctx.merged.contract);

        for opt in &call.options {
            self.read_expr(&opt.value, scope, allow_bindings);
        }
        for arg in &call.args {
            self.read_expr(arg, scope, allow_bindings);
        }
        // receiver chain reads (`token` in token.balanceOf(..)); identifier
        // callees are function names, not variables, and resolve to nothing
        self.read_expr(&call.callee, scope, allow_bindings);

        match kind {
            CallKind::Internal => {
                if let Some(callee) = self.resolve_internal(call) {
                    if let Some(summaries) = self.ctx.summaries {
                        if let Some(summary) = summaries.get(&callee) {
                            for var in &summary.state_vars_read {
                                self.emit(
                                    AbstractLocation::new(*var, DataLocation::Storage),
                                    AccessMode::Read,
                                );
                            }
                            for var in &summary.state_vars_written {
                                self.emit(
                                    AbstractLocation::new(*var, DataLocation::Storage),
                                    AccessMode::Write,
                                );
                            }
                            self.facts.makes_external_call |= summary.makes_external_call;
                            self.facts.makes_ether_transfer |= summary.makes_ether_transfer;
                        }
                    } else {
                        self.facts.internal_callees.push(callee);
                    }
                }
            }
            external => {
                self.facts.makes_external_call = true;
                if external.is_ether_transfer() {
                    self.facts.makes_ether_transfer = true;
                }
                if external == CallKind::Delegatecall {
                    self.facts.makes_delegatecall = true;
                }
                self.facts.external_calls.push((call.id, external));
            }
        }
    }

    fn resolve_internal(&self, call: &CallExpr) -> Option<NodeId> {
        let name = match &call.callee {
            Expression::Identifier(id) => &id.name,
            Expression::Member(m) => match &m.base {
                Expression::Identifier(b) if b.name == "this" => &m.member,
                _ => return None,
            },
            _ => return None,
        };
        resolve_function(name, self.ctx.unit, self.ctx.merged.contract).map(|f| f.id)
    }
}

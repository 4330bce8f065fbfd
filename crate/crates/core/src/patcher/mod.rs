//! Template-based fix patterns as ordered AST edit scripts.

pub mod engine;
pub mod gas;
pub mod lock;
pub mod reorder;
pub mod validation;
pub mod withdraw;
pub mod wrap;

pub use engine::{generate_patches, PatchConfig, PatchOutcome, PatchRecord, PatchStatus, ReentrancyStrategy};
pub use gas::{estimate_cost, GasEstimate};
pub use lock::apply_lock;
pub use reorder::{apply_reorder, plan_reorder, BlockedReason, ReorderAction, ReorderPlan};
pub use validation::fix_missing_input_validation;
pub use withdraw::fix_locked_ether;
pub use wrap::fix_unhandled_exception;

use crate::frontend::ast::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum PatchError {
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("reorder plan is blocked: {0}")]
    PlanBlocked(String),

    #[error("edit target {0} not found")]
    MissingTarget(NodeId),

    #[error("finding is marked unfixable")]
    Unfixable,
}

/// Fix pattern attached to a script; drives the gas heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixPattern {
    Require,
    Reorder,
    Lock,
    Withdraw,
}

impl FixPattern {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixPattern::Require => "require",
            FixPattern::Reorder => "reorder",
            FixPattern::Lock => "lock",
            FixPattern::Withdraw => "withdraw",
        }
    }
}

/// Where to place an inserted or moved statement. Anchored positions stay
/// valid as earlier edits of the same script shift indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Position {
    AtIndex { block: NodeId, index: usize },
    Before { statement: NodeId },
    AtEnd { block: NodeId },
}

#[derive(Debug, Clone)]
pub enum EditKind {
    InsertStatement { position: Position, node: Statement },
    MoveStatement { stmt: NodeId, new_position: Position },
    WrapInRequire { stmt: NodeId },
    ReplaceExpr { expr: NodeId, node: Expression },
    DeclareLocal { position: Position, name: String, ty: TypeName, initializer: Expression },
    AddStateVar { contract: NodeId, decl: VarDecl },
    AddFunction { contract: NodeId, def: FunctionDef },
    AddModifierGuard { function: NodeId, lock_var: String },
}

impl EditKind {
    pub fn name(&self) -> &'static str {
        match self {
            EditKind::InsertStatement { .. } => "insert-statement",
            EditKind::MoveStatement { .. } => "move-statement",
            EditKind::WrapInRequire { .. } => "wrap-in-require",
            EditKind::ReplaceExpr { .. } => "replace-expr",
            EditKind::DeclareLocal { .. } => "declare-local",
            EditKind::AddStateVar { .. } => "add-state-var",
            EditKind::AddFunction { .. } => "add-function",
            EditKind::AddModifierGuard { .. } => "add-modifier-guard",
        }
    }
}

/// One edit, stamped with the finding it serves.
#[derive(Debug, Clone)]
pub struct Edit {
    pub kind: EditKind,
    pub finding: String,
}

#[derive(Debug, Clone)]
pub struct EditScript {
    pub pattern: FixPattern,
    pub finding: String,
    pub edits: Vec<Edit>,
}

impl EditScript {
    pub fn new(pattern: FixPattern, finding: String) -> Self {
        EditScript { pattern, finding, edits: Vec::new() }
    }

    pub fn push(&mut self, kind: EditKind) {
        self.edits.push(Edit { kind, finding: self.finding.clone() });
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }
}

/// Apply a script to a copy of the unit. Inserted nodes are renumbered with
/// fresh ids so node-id uniqueness survives; preserved nodes keep theirs.
pub fn apply_edit_script(unit: &SourceUnit, script: &EditScript) -> Result<SourceUnit, PatchError> {
    let mut out = unit.clone();
    for edit in &script.edits {
        apply_edit(&mut out, &edit.kind)?;
    }
    Ok(out)
}

fn apply_edit(unit: &mut SourceUnit, kind: &EditKind) -> Result<(), PatchError> {
    match kind {
        EditKind::InsertStatement { position, node } => {
            let mut node = node.clone();
            renumber_statement(&mut node, &mut unit.ids);
            insert_at(unit, position, node)
        }
        EditKind::MoveStatement { stmt, new_position } => {
            let removed = remove_statement(unit, *stmt).ok_or(PatchError::MissingTarget(*stmt))?;
            insert_at(unit, new_position, removed)
        }
        EditKind::WrapInRequire { stmt } => wrap_in_require(unit, *stmt),
        EditKind::ReplaceExpr { expr, node } => {
            let mut node = node.clone();
            renumber_expression(&mut node, &mut unit.ids);
            if replace_expr(unit, *expr, node) {
                Ok(())
            } else {
                Err(PatchError::MissingTarget(*expr))
            }
        }
        EditKind::DeclareLocal { position, name, ty, initializer } => {
            let mut init = initializer.clone();
            renumber_expression(&mut init, &mut unit.ids);
            let mut factory = NodeFactory::new(&mut unit.ids);
            let stmt = factory.var_decl_stmt(name, ty.clone(), DataLocation::Default, Some(init));
            insert_at(unit, position, stmt)
        }
        EditKind::AddStateVar { contract, decl } => {
            let mut decl = decl.clone();
            renumber_vardecl(&mut decl, &mut unit.ids);
            let c = unit
                .contracts
                .iter_mut()
                .find(|c| c.id == *contract)
                .ok_or(PatchError::MissingTarget(*contract))?;
            c.state_vars.push(decl);
            Ok(())
        }
        EditKind::AddFunction { contract, def } => {
            let mut def = def.clone();
            renumber_function(&mut def, &mut unit.ids);
            let c = unit
                .contracts
                .iter_mut()
                .find(|c| c.id == *contract)
                .ok_or(PatchError::MissingTarget(*contract))?;
            c.functions.push(def);
            Ok(())
        }
        EditKind::AddModifierGuard { function, lock_var } => add_lock_guard(unit, *function, lock_var),
    }
}

// -- tree navigation -----------------------------------------------------------

fn for_each_block_mut(unit: &mut SourceUnit, f: &mut dyn FnMut(&mut Block) -> bool) {
    for c in &mut unit.contracts {
        for func in &mut c.functions {
            if let Some(body) = &mut func.body {
                if block_walk(body, f) {
                    return;
                }
            }
        }
        for m in &mut c.modifiers {
            if block_walk(&mut m.body, f) {
                return;
            }
        }
    }
}

/// Depth-first over blocks; callback returns true to stop.
fn block_walk(block: &mut Block, f: &mut dyn FnMut(&mut Block) -> bool) -> bool {
    if f(block) {
        return true;
    }
    for s in &mut block.statements {
        if stmt_blocks(s, f) {
            return true;
        }
    }
    false
}

fn stmt_blocks(stmt: &mut Statement, f: &mut dyn FnMut(&mut Block) -> bool) -> bool {
    match stmt {
        Statement::Block(b) => block_walk(b, f),
        Statement::If(i) => {
            stmt_blocks(&mut i.then_branch, f)
                || i.else_branch.as_mut().map_or(false, |e| stmt_blocks(e, f))
        }
        Statement::While(w) => stmt_blocks(&mut w.body, f),
        Statement::For(fo) => {
            fo.init.as_mut().map_or(false, |i| stmt_blocks(i, f)) || stmt_blocks(&mut fo.body, f)
        }
        _ => false,
    }
}

fn insert_at(unit: &mut SourceUnit, position: &Position, node: Statement) -> Result<(), PatchError> {
    let mut node = Some(node);
    let mut done = false;
    match position {
        Position::AtIndex { block, index } => {
            let (block, index) = (*block, *index);
            for_each_block_mut(unit, &mut |b| {
                if b.id == block {
                    let i = index.min(b.statements.len());
                    b.statements.insert(i, node.take().unwrap());
                    done = true;
                    return true;
                }
                false
            });
            if done {
                Ok(())
            } else {
                Err(PatchError::MissingTarget(block))
            }
        }
        Position::AtEnd { block } => {
            let block = *block;
            for_each_block_mut(unit, &mut |b| {
                if b.id == block {
                    b.statements.push(node.take().unwrap());
                    done = true;
                    return true;
                }
                false
            });
            if done {
                Ok(())
            } else {
                Err(PatchError::MissingTarget(block))
            }
        }
        Position::Before { statement } => {
            let target = *statement;
            for_each_block_mut(unit, &mut |b| {
                if let Some(i) = b.statements.iter().position(|s| s.id() == target) {
                    b.statements.insert(i, node.take().unwrap());
                    done = true;
                    return true;
                }
                false
            });
            if done {
                Ok(())
            } else {
                Err(PatchError::MissingTarget(target))
            }
        }
    }
}

pub fn remove_statement(unit: &mut SourceUnit, stmt: NodeId) -> Option<Statement> {
    let mut removed = None;
    for_each_block_mut(unit, &mut |b| {
        if let Some(i) = b.statements.iter().position(|s| s.id() == stmt) {
            removed = Some(b.statements.remove(i));
            return true;
        }
        false
    });
    removed
}

/// Locate the block directly containing a statement, with its index.
pub fn containing_block(unit: &SourceUnit, stmt: NodeId) -> Option<(NodeId, usize)> {
    fn search(block: &Block, stmt: NodeId) -> Option<(NodeId, usize)> {
        if let Some(i) = block.statements.iter().position(|s| s.id() == stmt) {
            return Some((block.id, i));
        }
        for s in &block.statements {
            if let Some(found) = search_stmt(s, stmt) {
                return Some(found);
            }
        }
        None
    }
    fn search_stmt(s: &Statement, stmt: NodeId) -> Option<(NodeId, usize)> {
        match s {
            Statement::Block(b) => search(b, stmt),
            Statement::If(i) => search_stmt(&i.then_branch, stmt)
                .or_else(|| i.else_branch.as_ref().and_then(|e| search_stmt(e, stmt))),
            Statement::While(w) => search_stmt(&w.body, stmt),
            Statement::For(f) => f
                .init
                .as_ref()
                .and_then(|i| search_stmt(i, stmt))
                .or_else(|| search_stmt(&f.body, stmt)),
            _ => None,
        }
    }
    for c in &unit.contracts {
        for f in &c.functions {
            if let Some(body) = &f.body {
                if let Some(found) = search(body, stmt) {
                    return Some(found);
                }
            }
        }
        for m in &c.modifiers {
            if let Some(found) = search(&m.body, stmt) {
                return Some(found);
            }
        }
    }
    None
}

fn wrap_in_require(unit: &mut SourceUnit, stmt: NodeId) -> Result<(), PatchError> {
    let mut done = false;
    let mut err = None;
    // splitting the borrow: mint ids first, then graft
    let require_ident_id = unit.ids.fresh();
    let require_call_id = unit.ids.fresh();
    for_each_block_mut(unit, &mut |b| {
        for s in &mut b.statements {
            if s.id() != stmt {
                continue;
            }
            let Statement::Expr(expr_stmt) = s else {
                err = Some(PatchError::NotApplicable(
                    "wrap target is not an expression statement".into(),
                ));
                return true;
            };
            let inner = expr_stmt.expr.clone();
            expr_stmt.expr = Expression::Call(Box::new(CallExpr {
                id: require_call_id,
                span: Span::Synthetic,
                callee: Expression::Identifier(Identifier {
                    id: require_ident_id,
                    span: Span::Synthetic,
                    name: "require".into(),
                }),
                options: Vec::new(),
                args: vec![inner],
            }));
            done = true;
            return true;
        }
        false
    });
    if let Some(e) = err {
        return Err(e);
    }
    if done {
        Ok(())
    } else {
        Err(PatchError::MissingTarget(stmt))
    }
}

fn replace_expr(unit: &mut SourceUnit, target: NodeId, replacement: Expression) -> bool {
    let mut replacement = Some(replacement);
    let mut done = false;
    for_each_block_mut(unit, &mut |b| {
        for s in &mut b.statements {
            if replace_in_stmt(s, target, &mut replacement) {
                done = true;
                return true;
            }
        }
        false
    });
    done
}

fn replace_in_stmt(stmt: &mut Statement, target: NodeId, repl: &mut Option<Expression>) -> bool {
    let exprs: Vec<&mut Expression> = match stmt {
        Statement::VarDecl(s) => s.decl.initializer.iter_mut().collect(),
        Statement::Expr(s) => vec![&mut s.expr],
        Statement::If(s) => vec![&mut s.condition],
        Statement::While(s) => vec![&mut s.condition],
        Statement::For(s) => s.condition.iter_mut().chain(s.update.iter_mut()).collect(),
        Statement::Return(s) => s.value.iter_mut().collect(),
        Statement::Emit(s) => s.args.iter_mut().collect(),
        _ => vec![],
    };
    for e in exprs {
        if replace_in_expr(e, target, repl) {
            return true;
        }
    }
    false
}

fn replace_in_expr(expr: &mut Expression, target: NodeId, repl: &mut Option<Expression>) -> bool {
    if expr.id() == target {
        *expr = repl.take().expect("replacement consumed twice");
        return true;
    }
    match expr {
        Expression::Binary(e) => {
            replace_in_expr(&mut e.left, target, repl) || replace_in_expr(&mut e.right, target, repl)
        }
        Expression::Unary(e) => replace_in_expr(&mut e.operand, target, repl),
        Expression::Assign(e) => {
            replace_in_expr(&mut e.target, target, repl)
                || replace_in_expr(&mut e.value, target, repl)
        }
        Expression::Conditional(e) => {
            replace_in_expr(&mut e.condition, target, repl)
                || replace_in_expr(&mut e.then_value, target, repl)
                || replace_in_expr(&mut e.else_value, target, repl)
        }
        Expression::Member(e) => replace_in_expr(&mut e.base, target, repl),
        Expression::Index(e) => {
            replace_in_expr(&mut e.base, target, repl) || replace_in_expr(&mut e.index, target, repl)
        }
        Expression::Call(e) => {
            if replace_in_expr(&mut e.callee, target, repl) {
                return true;
            }
            for opt in &mut e.options {
                if replace_in_expr(&mut opt.value, target, repl) {
                    return true;
                }
            }
            for a in &mut e.args {
                if replace_in_expr(a, target, repl) {
                    return true;
                }
            }
            false
        }
        Expression::Tuple(e) => {
            for el in &mut e.elements {
                if replace_in_expr(el, target, repl) {
                    return true;
                }
            }
            false
        }
        _ => false,
    }
}

/// Lock-guard expansion: entry `require(!flag); flag = true;` plus
/// `flag = false;` before every return and at the implicit end. Reverts roll
/// the flag back on their own, so no unlock is needed on failure paths.
fn add_lock_guard(unit: &mut SourceUnit, function: NodeId, lock_var: &str) -> Result<(), PatchError> {
    let mut ids = unit.ids.clone();

    let mut make_unlock = |ids: &mut IdGen| -> Statement {
        let mut factory = NodeFactory::new(ids);
        let target = factory.ident(lock_var);
        let value = factory.bool_lit(false);
        let assign = factory.assign(target, value);
        factory.expr_stmt(assign)
    };

    let mut found = false;
    for c in &mut unit.contracts {
        for f in &mut c.functions {
            if f.id != function {
                continue;
            }
            let Some(body) = &mut f.body else {
                return Err(PatchError::NotApplicable("function has no body".into()));
            };

            // unlock before every return, anywhere in the body
            insert_unlock_before_returns(&mut body.statements, lock_var, &mut ids, &mut make_unlock);

            // entry guard
            let mut factory = NodeFactory::new(&mut ids);
            let flag = factory.ident(lock_var);
            let negated = factory.unary(UnaryOp::Not, flag);
            let require = factory.require_stmt(negated);
            let target = factory.ident(lock_var);
            let value = factory.bool_lit(true);
            let assign = factory.assign(target, value);
            let engage = factory.expr_stmt(assign);
            body.statements.insert(0, require);
            body.statements.insert(1, engage);

            // unlock at the implicit end unless the body already returns
            let falls_through =
                !matches!(body.statements.last(), Some(Statement::Return(_)));
            if falls_through {
                let unlock = make_unlock(&mut ids);
                body.statements.push(unlock);
            }
            found = true;
        }
    }
    unit.ids = ids;
    if found {
        Ok(())
    } else {
        Err(PatchError::MissingTarget(function))
    }
}

fn insert_unlock_before_returns(
    stmts: &mut Vec<Statement>,
    lock_var: &str,
    ids: &mut IdGen,
    make_unlock: &mut dyn FnMut(&mut IdGen) -> Statement,
) {
    let mut i = 0;
    while i < stmts.len() {
        let is_return = matches!(stmts[i], Statement::Return(_));
        if is_return {
            stmts.insert(i, make_unlock(ids));
            i += 2;
            continue;
        }
        match &mut stmts[i] {
            Statement::Block(b) => {
                insert_unlock_before_returns(&mut b.statements, lock_var, ids, make_unlock)
            }
            Statement::If(s) => {
                recurse_branch(&mut s.then_branch, lock_var, ids, make_unlock);
                if let Some(e) = &mut s.else_branch {
                    recurse_branch(e, lock_var, ids, make_unlock);
                }
            }
            Statement::While(s) => recurse_branch(&mut s.body, lock_var, ids, make_unlock),
            Statement::For(s) => recurse_branch(&mut s.body, lock_var, ids, make_unlock),
            _ => {}
        }
        i += 1;
    }
}

fn recurse_branch(
    branch: &mut Statement,
    lock_var: &str,
    ids: &mut IdGen,
    make_unlock: &mut dyn FnMut(&mut IdGen) -> Statement,
) {
    if matches!(branch, Statement::Return(_)) {
        // single-statement branch: wrap into a block to host the unlock
        let ret = std::mem::replace(
            branch,
            Statement::Block(Block { id: ids.fresh(), span: Span::Synthetic, statements: vec![] }),
        );
        let unlock = make_unlock(ids);
        if let Statement::Block(b) = branch {
            b.statements.push(unlock);
            b.statements.push(ret);
        }
        return;
    }
    if let Statement::Block(b) = branch {
        insert_unlock_before_returns(&mut b.statements, lock_var, ids, make_unlock);
    } else {
        let mut wrapped = vec![std::mem::replace(
            branch,
            Statement::Block(Block { id: ids.fresh(), span: Span::Synthetic, statements: vec![] }),
        )];
        insert_unlock_before_returns(&mut wrapped, lock_var, ids, make_unlock);
        if let Statement::Block(b) = branch {
            b.statements = wrapped;
        }
    }
}

// -- fresh-id renumbering for inserted nodes ------------------------------------

pub(crate) fn renumber_statement(stmt: &mut Statement, ids: &mut IdGen) {
    match stmt {
        Statement::Block(b) => {
            b.id = ids.fresh();
            for s in &mut b.statements {
                renumber_statement(s, ids);
            }
        }
        Statement::VarDecl(s) => {
            s.id = ids.fresh();
            renumber_vardecl(&mut s.decl, ids);
        }
        Statement::Expr(s) => {
            s.id = ids.fresh();
            renumber_expression(&mut s.expr, ids);
        }
        Statement::If(s) => {
            s.id = ids.fresh();
            renumber_expression(&mut s.condition, ids);
            renumber_statement(&mut s.then_branch, ids);
            if let Some(e) = &mut s.else_branch {
                renumber_statement(e, ids);
            }
        }
        Statement::While(s) => {
            s.id = ids.fresh();
            renumber_expression(&mut s.condition, ids);
            renumber_statement(&mut s.body, ids);
        }
        Statement::For(s) => {
            s.id = ids.fresh();
            if let Some(init) = &mut s.init {
                renumber_statement(init, ids);
            }
            if let Some(c) = &mut s.condition {
                renumber_expression(c, ids);
            }
            if let Some(u) = &mut s.update {
                renumber_expression(u, ids);
            }
            renumber_statement(&mut s.body, ids);
        }
        Statement::Return(s) => {
            s.id = ids.fresh();
            if let Some(v) = &mut s.value {
                renumber_expression(v, ids);
            }
        }
        Statement::Emit(s) => {
            s.id = ids.fresh();
            for a in &mut s.args {
                renumber_expression(a, ids);
            }
        }
        Statement::Placeholder(s) => s.id = ids.fresh(),
    }
}

pub(crate) fn renumber_expression(expr: &mut Expression, ids: &mut IdGen) {
    match expr {
        Expression::Identifier(e) => e.id = ids.fresh(),
        Expression::Literal(e) => e.id = ids.fresh(),
        Expression::ElementaryType(e) => e.id = ids.fresh(),
        Expression::Binary(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.left, ids);
            renumber_expression(&mut e.right, ids);
        }
        Expression::Unary(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.operand, ids);
        }
        Expression::Assign(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.target, ids);
            renumber_expression(&mut e.value, ids);
        }
        Expression::Conditional(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.condition, ids);
            renumber_expression(&mut e.then_value, ids);
            renumber_expression(&mut e.else_value, ids);
        }
        Expression::Member(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.base, ids);
        }
        Expression::Index(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.base, ids);
            renumber_expression(&mut e.index, ids);
        }
        Expression::Call(e) => {
            e.id = ids.fresh();
            renumber_expression(&mut e.callee, ids);
            for opt in &mut e.options {
                renumber_expression(&mut opt.value, ids);
            }
            for a in &mut e.args {
                renumber_expression(a, ids);
            }
        }
        Expression::Tuple(e) => {
            e.id = ids.fresh();
            for el in &mut e.elements {
                renumber_expression(el, ids);
            }
        }
    }
}

pub(crate) fn renumber_vardecl(decl: &mut VarDecl, ids: &mut IdGen) {
    decl.id = ids.fresh();
    if let Some(init) = &mut decl.initializer {
        renumber_expression(init, ids);
    }
}

pub(crate) fn renumber_function(def: &mut FunctionDef, ids: &mut IdGen) {
    def.id = ids.fresh();
    for p in &mut def.params {
        renumber_vardecl(p, ids);
    }
    for r in &mut def.returns {
        renumber_vardecl(r, ids);
    }
    for m in &mut def.modifiers_applied {
        m.id = ids.fresh();
        for a in &mut m.args {
            renumber_expression(a, ids);
        }
    }
    if let Some(body) = &mut def.body {
        let mut as_stmt = Statement::Block(std::mem::replace(
            body,
            Block { id: NodeId(0), span: Span::Synthetic, statements: vec![] },
        ));
        renumber_statement(&mut as_stmt, ids);
        if let Statement::Block(b) = as_stmt {
            *body = b;
        }
    }
}

/// Pick a name not used by any state variable, function, parameter, or local
/// of the unit: `base`, then `base2`, `base3`, ...
pub(crate) fn fresh_name(unit: &SourceUnit, base: &str) -> String {
    let mut taken = std::collections::HashSet::new();
    for c in &unit.contracts {
        for v in &c.state_vars {
            if let Some(n) = &v.name {
                taken.insert(n.clone());
            }
        }
        for f in &c.functions {
            taken.insert(f.name.clone());
            for p in &f.params {
                if let Some(n) = &p.name {
                    taken.insert(n.clone());
                }
            }
        }
        for m in &c.modifiers {
            taken.insert(m.name.clone());
        }
    }
    unit.for_each_statement(&mut |s| {
        if let Statement::VarDecl(d) = s {
            if let Some(n) = &d.decl.name {
                taken.insert(n.clone());
            }
        }
    });
    if !taken.contains(base) {
        return base.to_string();
    }
    let mut i = 2;
    loop {
        let candidate = format!("{}{}", base, i);
        if !taken.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

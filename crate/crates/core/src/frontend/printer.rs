//! Canonical pretty-printer. Emission is a deterministic pre-order traversal;
//! `parse(print(u))` is structurally equal to `u` modulo spans and node ids.

use super::ast::*;
use super::error::PrintError;

const INDENT: &str = "    ";

pub fn print(unit: &SourceUnit) -> Result<String, PrintError> {
    let mut out = String::new();
    if let Some(p) = &unit.pragma {
        out.push_str(&format!("pragma solidity {};\n\n", p));
    }
    for (i, c) in unit.contracts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_contract(&mut out, c)?;
    }
    Ok(out)
}

fn print_contract(out: &mut String, c: &ContractDef) -> Result<(), PrintError> {
    out.push_str(&format!("{} {}", c.kind, c.name));
    if !c.bases.is_empty() {
        out.push_str(&format!(" is {}", c.bases.join(", ")));
    }
    out.push_str(" {\n");

    let mut first_section = true;
    if !c.structs.is_empty() {
        first_section = false;
        for s in &c.structs {
            out.push_str(&format!("{}struct {} {{\n", INDENT, s.name));
            for f in &s.fields {
                out.push_str(&format!("{}{}{} {};\n", INDENT, INDENT, type_text(&f.ty), f.name_str()));
            }
            out.push_str(&format!("{}}}\n", INDENT));
        }
    }
    if !c.events.is_empty() {
        if !first_section {
            out.push('\n');
        }
        first_section = false;
        for e in &c.events {
            let params: Vec<String> = e
                .params
                .iter()
                .map(|p| match &p.name {
                    Some(n) => format!("{} {}", type_text(&p.ty), n),
                    None => type_text(&p.ty),
                })
                .collect();
            out.push_str(&format!("{}event {}({});\n", INDENT, e.name, params.join(", ")));
        }
    }
    if !c.state_vars.is_empty() {
        if !first_section {
            out.push('\n');
        }
        first_section = false;
        for v in &c.state_vars {
            out.push_str(INDENT);
            out.push_str(&type_text(&v.ty));
            if let Some(vis) = &v.visibility {
                out.push_str(&format!(" {}", vis));
            }
            if v.constant {
                out.push_str(" constant");
            }
            out.push_str(&format!(" {}", v.name_str()));
            if let Some(init) = &v.initializer {
                out.push_str(" = ");
                print_expr(out, init, 0)?;
            }
            out.push_str(";\n");
        }
    }
    for m in &c.modifiers {
        if !first_section {
            out.push('\n');
        }
        first_section = false;
        out.push_str(&format!("{}modifier {}", INDENT, m.name));
        if !m.params.is_empty() {
            out.push('(');
            print_params(out, &m.params)?;
            out.push(')');
        }
        out.push(' ');
        print_block(out, &m.body, 1)?;
        out.push('\n');
    }
    for f in &c.functions {
        if !first_section {
            out.push('\n');
        }
        first_section = false;
        print_function(out, f)?;
    }
    out.push_str("}\n");
    Ok(())
}

fn print_params(out: &mut String, params: &[VarDecl]) -> Result<(), PrintError> {
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&type_text(&p.ty));
        match p.data_location {
            DataLocation::Storage => out.push_str(" storage"),
            DataLocation::Memory => out.push_str(" memory"),
            DataLocation::Calldata => out.push_str(" calldata"),
            DataLocation::Default => {}
        }
        if let Some(n) = &p.name {
            out.push_str(&format!(" {}", n));
        }
    }
    Ok(())
}

fn print_function(out: &mut String, f: &FunctionDef) -> Result<(), PrintError> {
    out.push_str(INDENT);
    match f.kind {
        FunctionKind::Constructor => out.push_str("constructor"),
        FunctionKind::Receive => out.push_str("receive"),
        FunctionKind::Fallback if f.name.is_empty() => out.push_str("function"),
        FunctionKind::Fallback => out.push_str("fallback"),
        FunctionKind::Regular => out.push_str(&format!("function {}", f.name)),
    }
    out.push('(');
    print_params(out, &f.params)?;
    out.push(')');

    out.push_str(&format!(" {}", f.visibility));
    match f.mutability {
        Mutability::Nonpayable => {}
        Mutability::Payable => out.push_str(" payable"),
        Mutability::View => out.push_str(" view"),
        Mutability::Pure => out.push_str(" pure"),
    }
    for m in &f.modifiers_applied {
        out.push_str(&format!(" {}", m.name));
        if !m.args.is_empty() {
            out.push('(');
            for (i, a) in m.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, a, 0)?;
            }
            out.push(')');
        }
    }
    if !f.returns.is_empty() {
        out.push_str(" returns (");
        print_params(out, &f.returns)?;
        out.push(')');
    }
    match &f.body {
        None => out.push_str(";\n"),
        Some(body) => {
            out.push(' ');
            print_block(out, body, 1)?;
            out.push('\n');
        }
    }
    Ok(())
}

fn print_block(out: &mut String, block: &Block, depth: usize) -> Result<(), PrintError> {
    out.push_str("{\n");
    for s in &block.statements {
        print_stmt(out, s, depth + 1)?;
    }
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
    Ok(())
}

fn print_stmt(out: &mut String, stmt: &Statement, depth: usize) -> Result<(), PrintError> {
    let pad = INDENT.repeat(depth);
    match stmt {
        Statement::Block(b) => {
            out.push_str(&pad);
            print_block(out, b, depth)?;
            out.push('\n');
        }
        Statement::VarDecl(s) => {
            out.push_str(&pad);
            out.push_str(&type_text(&s.decl.ty));
            match s.decl.data_location {
                DataLocation::Storage => out.push_str(" storage"),
                DataLocation::Memory => out.push_str(" memory"),
                DataLocation::Calldata => out.push_str(" calldata"),
                DataLocation::Default => {}
            }
            out.push_str(&format!(" {}", s.decl.name_str()));
            if let Some(init) = &s.decl.initializer {
                out.push_str(" = ");
                print_expr(out, init, 0)?;
            }
            out.push_str(";\n");
        }
        Statement::Expr(s) => {
            out.push_str(&pad);
            print_expr(out, &s.expr, 0)?;
            out.push_str(";\n");
        }
        Statement::If(s) => {
            out.push_str(&pad);
            out.push_str("if (");
            print_expr(out, &s.condition, 0)?;
            out.push_str(") ");
            print_branch(out, &s.then_branch, depth)?;
            if let Some(e) = &s.else_branch {
                out.push_str(" else ");
                print_branch(out, e, depth)?;
            }
            out.push('\n');
        }
        Statement::While(s) => {
            out.push_str(&pad);
            out.push_str("while (");
            print_expr(out, &s.condition, 0)?;
            out.push_str(") ");
            print_branch(out, &s.body, depth)?;
            out.push('\n');
        }
        Statement::For(s) => {
            out.push_str(&pad);
            out.push_str("for (");
            match &s.init {
                Some(init) => {
                    // reuse statement printing minus indentation/newline
                    let mut tmp = String::new();
                    print_stmt(&mut tmp, init, 0)?;
                    out.push_str(tmp.trim_end_matches('\n').trim_start());
                }
                None => out.push(';'),
            }
            out.push(' ');
            if let Some(c) = &s.condition {
                print_expr(out, c, 0)?;
            }
            out.push_str("; ");
            if let Some(u) = &s.update {
                print_expr(out, u, 0)?;
            }
            out.push_str(") ");
            print_branch(out, &s.body, depth)?;
            out.push('\n');
        }
        Statement::Return(s) => {
            out.push_str(&pad);
            out.push_str("return");
            if let Some(v) = &s.value {
                out.push(' ');
                print_expr(out, v, 0)?;
            }
            out.push_str(";\n");
        }
        Statement::Emit(s) => {
            out.push_str(&pad);
            out.push_str(&format!("emit {}(", s.event));
            for (i, a) in s.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, a, 0)?;
            }
            out.push_str(");\n");
        }
        Statement::Placeholder(_) => {
            out.push_str(&pad);
            out.push_str("_;\n");
        }
    }
    Ok(())
}

fn print_branch(out: &mut String, stmt: &Statement, depth: usize) -> Result<(), PrintError> {
    match stmt {
        Statement::Block(b) => print_block(out, b, depth),
        other => {
            // canonicalize single-statement branches into a block
            out.push_str("{\n");
            print_stmt(out, other, depth + 1)?;
            out.push_str(&INDENT.repeat(depth));
            out.push('}');
            Ok(())
        }
    }
}

/// Precedence used for parenthesization; mirrors the parser's binding powers.
fn prec_of(expr: &Expression) -> u8 {
    match expr {
        Expression::Assign(_) => 1,
        Expression::Conditional(_) => 2,
        Expression::Binary(b) => match b.op {
            BinaryOp::Or => 4,
            BinaryOp::And => 6,
            BinaryOp::Eq | BinaryOp::Ne => 8,
            BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge => 10,
            BinaryOp::BitOr => 12,
            BinaryOp::BitXor => 14,
            BinaryOp::BitAnd => 16,
            BinaryOp::Shl | BinaryOp::Shr => 18,
            BinaryOp::Add | BinaryOp::Sub => 20,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 22,
            BinaryOp::Pow => 24,
        },
        Expression::Unary(u) => match u.op {
            UnaryOp::PostInc | UnaryOp::PostDec => 30,
            _ => 26,
        },
        _ => 30,
    }
}

fn print_expr(out: &mut String, expr: &Expression, parent_prec: u8) -> Result<(), PrintError> {
    let prec = prec_of(expr);
    let needs_paren = prec < parent_prec;
    if needs_paren {
        out.push('(');
    }
    match expr {
        Expression::Identifier(e) => out.push_str(&e.name),
        Expression::Literal(e) => out.push_str(&e.text),
        Expression::ElementaryType(e) => out.push_str(&type_text(&e.ty)),
        Expression::Binary(e) => {
            // left operand keeps equal precedence unparenthesized
            // (left-assoc); right operand needs the bump
            print_expr(out, &e.left, prec)?;
            out.push_str(&format!(" {} ", e.op.text()));
            let right_min = if e.op == BinaryOp::Pow { prec } else { prec + 1 };
            print_expr(out, &e.right, right_min)?;
        }
        Expression::Unary(e) => match e.op {
            UnaryOp::Not => {
                out.push('!');
                print_expr(out, &e.operand, prec)?;
            }
            UnaryOp::Neg => {
                out.push('-');
                print_expr(out, &e.operand, prec)?;
            }
            UnaryOp::BitNot => {
                out.push('~');
                print_expr(out, &e.operand, prec)?;
            }
            UnaryOp::PreInc => {
                out.push_str("++");
                print_expr(out, &e.operand, prec)?;
            }
            UnaryOp::PreDec => {
                out.push_str("--");
                print_expr(out, &e.operand, prec)?;
            }
            UnaryOp::Delete => {
                out.push_str("delete ");
                print_expr(out, &e.operand, prec)?;
            }
            UnaryOp::PostInc => {
                print_expr(out, &e.operand, prec)?;
                out.push_str("++");
            }
            UnaryOp::PostDec => {
                print_expr(out, &e.operand, prec)?;
                out.push_str("--");
            }
        },
        Expression::Assign(e) => {
            print_expr(out, &e.target, prec + 1)?;
            out.push_str(&format!(" {} ", e.op.text()));
            print_expr(out, &e.value, prec)?;
        }
        Expression::Conditional(e) => {
            print_expr(out, &e.condition, prec + 1)?;
            out.push_str(" ? ");
            print_expr(out, &e.then_value, prec)?;
            out.push_str(" : ");
            print_expr(out, &e.else_value, prec)?;
        }
        Expression::Member(e) => {
            print_expr(out, &e.base, 30)?;
            out.push_str(&format!(".{}", e.member));
        }
        Expression::Index(e) => {
            print_expr(out, &e.base, 30)?;
            out.push('[');
            print_expr(out, &e.index, 0)?;
            out.push(']');
        }
        Expression::Call(e) => {
            print_expr(out, &e.callee, 30)?;
            if !e.options.is_empty() {
                out.push('{');
                for (i, opt) in e.options.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&format!("{}: ", opt.name));
                    print_expr(out, &opt.value, 0)?;
                }
                out.push('}');
            }
            out.push('(');
            for (i, a) in e.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, a, 0)?;
            }
            out.push(')');
        }
        Expression::Tuple(e) => {
            out.push('(');
            for (i, el) in e.elements.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, el, 0)?;
            }
            out.push(')');
        }
    }
    if needs_paren {
        out.push(')');
    }
    Ok(())
}

/// Print a single statement at zero indentation, without a trailing newline.
/// Used by diff construction and tests that compare statement sequences.
pub fn print_statement(stmt: &Statement) -> Result<String, PrintError> {
    let mut out = String::new();
    print_stmt(&mut out, stmt, 0)?;
    Ok(out.trim_end().to_string())
}

/// Print a bare expression, for report snippets.
pub fn print_expression(expr: &Expression) -> Result<String, PrintError> {
    let mut out = String::new();
    print_expr(&mut out, expr, 0)?;
    Ok(out)
}

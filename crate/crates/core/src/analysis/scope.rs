//! Name resolution for one analysis context (a function body or a modifier
//! body within a merged contract).

use crate::frontend::ast::*;
use std::collections::{BTreeSet, HashMap};

use super::MergedContract;

#[derive(Debug, Clone, Default)]
pub struct Scope {
    /// Visible name -> declaration site. Later declarations shadow earlier
    /// ones; the analysis is flow-insensitive about local shadowing.
    pub vars: HashMap<String, NodeId>,
    pub var_types: HashMap<NodeId, TypeName>,
    pub home_locations: HashMap<NodeId, DataLocation>,
    pub state_vars: BTreeSet<NodeId>,
}

impl Scope {
    pub fn resolve(&self, name: &str) -> Option<NodeId> {
        self.vars.get(name).copied()
    }

    pub fn is_state_var(&self, decl: NodeId) -> bool {
        self.state_vars.contains(&decl)
    }

    fn add_decl(&mut self, decl: &VarDecl, default_loc: DataLocation, state: bool) {
        let Some(name) = &decl.name else { return };
        let loc = match decl.data_location {
            DataLocation::Default => default_loc,
            explicit => explicit,
        };
        self.vars.insert(name.clone(), decl.id);
        self.var_types.insert(decl.id, decl.ty.clone());
        self.home_locations.insert(decl.id, loc);
        if state {
            self.state_vars.insert(decl.id);
        }
    }

    fn add_contract(&mut self, merged: &MergedContract) {
        for v in &merged.state_vars {
            self.add_decl(v, DataLocation::Storage, true);
        }
    }

    /// Scope for statements of `function`'s own body.
    pub fn for_function(merged: &MergedContract, function: &FunctionDef) -> Scope {
        let mut scope = Scope::default();
        scope.add_contract(merged);
        for p in &function.params {
            scope.add_decl(p, DataLocation::Memory, false);
        }
        for r in &function.returns {
            scope.add_decl(r, DataLocation::Memory, false);
        }
        if let Some(body) = &function.body {
            collect_locals(&mut scope, &body.statements);
        }
        scope
    }

    /// Scope for statements of a modifier body. Modifier parameters are not
    /// added; they are bound to invocation arguments by the access collector.
    pub fn for_modifier(merged: &MergedContract, modifier: &ModifierDef) -> Scope {
        let mut scope = Scope::default();
        scope.add_contract(merged);
        collect_locals(&mut scope, &modifier.body.statements);
        scope
    }
}

fn collect_locals(scope: &mut Scope, stmts: &[Statement]) {
    for s in stmts {
        match s {
            Statement::VarDecl(d) => scope.add_decl(&d.decl, DataLocation::Memory, false),
            Statement::Block(b) => collect_locals(scope, &b.statements),
            Statement::If(i) => {
                collect_locals(scope, std::slice::from_ref(&i.then_branch));
                if let Some(e) = &i.else_branch {
                    collect_locals(scope, std::slice::from_ref(e));
                }
            }
            Statement::While(w) => collect_locals(scope, std::slice::from_ref(&w.body)),
            Statement::For(f) => {
                if let Some(init) = &f.init {
                    collect_locals(scope, std::slice::from_ref(init));
                }
                collect_locals(scope, std::slice::from_ref(&f.body));
            }
            _ => {}
        }
    }
}

/// Best-effort static type of an expression; used to type reorder
/// temporaries and to gate snapshots to copyable values.
pub fn infer_type(expr: &Expression, scope: &Scope, merged: &MergedContract) -> Option<TypeName> {
    match expr {
        Expression::Identifier(id) => {
            let decl = scope.resolve(&id.name)?;
            scope.var_types.get(&decl).cloned()
        }
        Expression::Index(ix) => match infer_type(&ix.base, scope, merged)? {
            TypeName::Mapping { value, .. } => Some(*value),
            TypeName::Array { elem, .. } => Some(*elem),
            TypeName::Bytes => Some(TypeName::FixedBytes(1)),
            _ => None,
        },
        Expression::Member(m) => {
            if m.member == "balance" || m.member == "length" {
                return Some(TypeName::Uint(256));
            }
            match infer_type(&m.base, scope, merged)? {
                TypeName::UserDefined(name) => {
                    let def = merged.structs.iter().find(|s| s.name == name)?;
                    let field = def.fields.iter().find(|f| f.name.as_deref() == Some(&m.member))?;
                    Some(field.ty.clone())
                }
                _ => None,
            }
        }
        Expression::Call(c) => match &c.callee {
            Expression::ElementaryType(t) => Some(t.ty.clone()),
            _ => None,
        },
        Expression::Literal(l) => match l.kind {
            LiteralKind::Number | LiteralKind::Hex => Some(TypeName::Uint(256)),
            LiteralKind::Bool => Some(TypeName::Bool),
            LiteralKind::Str => Some(TypeName::String),
        },
        _ => None,
    }
}

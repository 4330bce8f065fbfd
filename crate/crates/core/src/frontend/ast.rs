//! Typed syntax tree for the supported Solidity subset.
//!
//! Every node carries a [`NodeId`] (unique within its [`SourceUnit`], even
//! after edits) and a [`Span`]. Nodes synthesized by a transformation carry
//! [`Span::Synthetic`] instead of byte offsets.

use serde::Serialize;
use std::fmt;

/// Identity of one AST node, stable across pretty-printing and edits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Byte range into the original source, or a marker for synthesized nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Span {
    Source { start: usize, end: usize },
    Synthetic,
}

impl Span {
    pub fn source(start: usize, end: usize) -> Self {
        Span::Source { start, end }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self, Span::Synthetic)
    }

    /// Start offset for source spans; usize::MAX for synthetic ones so they
    /// sort after real code.
    pub fn start(&self) -> usize {
        match self {
            Span::Source { start, .. } => *start,
            Span::Synthetic => usize::MAX,
        }
    }

    pub fn end(&self) -> usize {
        match self {
            Span::Source { end, .. } => *end,
            Span::Synthetic => usize::MAX,
        }
    }
}

/// Allocator for node ids. The counter lives in the owning [`SourceUnit`] so
/// edits keep minting fresh ids.
#[derive(Debug, Clone, Serialize)]
pub struct IdGen {
    next: u32,
}

impl IdGen {
    pub fn new() -> Self {
        IdGen { next: 0 }
    }

    pub fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        id
    }
}

impl Default for IdGen {
    fn default() -> Self {
        Self::new()
    }
}

// ===========================================================================
// Top level
// ===========================================================================

/// One parsed `.sol` file.
#[derive(Debug, Clone, Serialize)]
pub struct SourceUnit {
    pub path: String,
    /// Version string as written after `pragma solidity`, e.g. `^0.4.24`.
    pub pragma: Option<String>,
    pub contracts: Vec<ContractDef>,
    pub ids: IdGen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContractKind {
    Contract,
    Library,
    Interface,
}

impl fmt::Display for ContractKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractKind::Contract => write!(f, "contract"),
            ContractKind::Library => write!(f, "library"),
            ContractKind::Interface => write!(f, "interface"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractDef {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
    pub kind: ContractKind,
    /// Base contract names; the subset supports a single-inheritance chain.
    pub bases: Vec<String>,
    pub structs: Vec<StructDef>,
    pub events: Vec<EventDef>,
    pub state_vars: Vec<VarDecl>,
    pub modifiers: Vec<ModifierDef>,
    pub functions: Vec<FunctionDef>,
}

impl ContractDef {
    /// True iff at least one function (including fallback/receive) is payable.
    pub fn has_payable_entry(&self) -> bool {
        self.functions.iter().any(|f| f.mutability == Mutability::Payable)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StructDef {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
    pub fields: Vec<VarDecl>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventDef {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
    pub params: Vec<VarDecl>,
}

// ===========================================================================
// Functions and modifiers
// ===========================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionKind {
    Regular,
    Constructor,
    Fallback,
    Receive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Visibility::Public => write!(f, "public"),
            Visibility::External => write!(f, "external"),
            Visibility::Internal => write!(f, "internal"),
            Visibility::Private => write!(f, "private"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mutability {
    Nonpayable,
    Payable,
    View,
    Pure,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionDef {
    pub id: NodeId,
    pub span: Span,
    /// Empty for 0.4-style unnamed fallbacks and for `constructor`.
    pub name: String,
    pub kind: FunctionKind,
    pub params: Vec<VarDecl>,
    pub returns: Vec<VarDecl>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub modifiers_applied: Vec<ModifierInvocation>,
    /// Absent for declarations (interface members, abstract functions).
    pub body: Option<Block>,
}

impl FunctionDef {
    /// Display name used in findings and reports.
    pub fn display_name(&self) -> &str {
        match self.kind {
            FunctionKind::Constructor => "constructor",
            FunctionKind::Fallback => {
                if self.name.is_empty() {
                    "fallback"
                } else {
                    &self.name
                }
            }
            FunctionKind::Receive => "receive",
            FunctionKind::Regular => &self.name,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModifierInvocation {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
    pub args: Vec<Expression>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModifierDef {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
    pub params: Vec<VarDecl>,
    /// Contains exactly one top-level placeholder statement (`_;`).
    pub body: Block,
}

// ===========================================================================
// Declarations and types
// ===========================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DataLocation {
    Storage,
    Memory,
    Calldata,
    /// No explicit location keyword; resolved by context (state vars are
    /// storage, elementary locals are value copies).
    Default,
}

/// Variable declaration: state var, parameter, return slot, struct field, or
/// the declared half of a local declaration statement.
#[derive(Debug, Clone, Serialize)]
pub struct VarDecl {
    pub id: NodeId,
    pub span: Span,
    /// None only for unnamed return slots.
    pub name: Option<String>,
    pub ty: TypeName,
    pub data_location: DataLocation,
    pub visibility: Option<Visibility>,
    pub constant: bool,
    pub initializer: Option<Expression>,
}

impl VarDecl {
    pub fn name_str(&self) -> &str {
        self.name.as_deref().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TypeName {
    Address { payable: bool },
    Bool,
    Uint(u16),
    Int(u16),
    FixedBytes(u8),
    Bytes,
    String,
    Mapping { key: Box<TypeName>, value: Box<TypeName> },
    Array { elem: Box<TypeName>, len: Option<String> },
    /// Struct, contract, or interface name; resolved against the unit on use.
    UserDefined(String),
    /// `var` local declaration with inferred type (0.4 dialect).
    Inferred,
}

impl TypeName {
    /// Reference types per the subset: struct, array, mapping (and names that
    /// may resolve to structs).
    pub fn is_composite(&self) -> bool {
        matches!(
            self,
            TypeName::Mapping { .. } | TypeName::Array { .. } | TypeName::UserDefined(_)
        )
    }

    pub fn is_elementary(&self) -> bool {
        matches!(
            self,
            TypeName::Address { .. }
                | TypeName::Bool
                | TypeName::Uint(_)
                | TypeName::Int(_)
                | TypeName::FixedBytes(_)
                | TypeName::Bytes
                | TypeName::String
        )
    }

    pub fn is_address(&self) -> bool {
        matches!(self, TypeName::Address { .. })
    }
}

// ===========================================================================
// Statements
// ===========================================================================

#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub id: NodeId,
    pub span: Span,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, Serialize)]
pub enum Statement {
    Block(Block),
    VarDecl(VarDeclStmt),
    Expr(ExprStmt),
    If(IfStmt),
    While(WhileStmt),
    For(ForStmt),
    Return(ReturnStmt),
    Emit(EmitStmt),
    /// `_;` inside a modifier body.
    Placeholder(PlaceholderStmt),
}

impl Statement {
    pub fn id(&self) -> NodeId {
        match self {
            Statement::Block(b) => b.id,
            Statement::VarDecl(s) => s.id,
            Statement::Expr(s) => s.id,
            Statement::If(s) => s.id,
            Statement::While(s) => s.id,
            Statement::For(s) => s.id,
            Statement::Return(s) => s.id,
            Statement::Emit(s) => s.id,
            Statement::Placeholder(s) => s.id,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Statement::Block(b) => b.span,
            Statement::VarDecl(s) => s.span,
            Statement::Expr(s) => s.span,
            Statement::If(s) => s.span,
            Statement::While(s) => s.span,
            Statement::For(s) => s.span,
            Statement::Return(s) => s.span,
            Statement::Emit(s) => s.span,
            Statement::Placeholder(s) => s.span,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarDeclStmt {
    pub id: NodeId,
    pub span: Span,
    pub decl: VarDecl,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExprStmt {
    pub id: NodeId,
    pub span: Span,
    pub expr: Expression,
}

#[derive(Debug, Clone, Serialize)]
pub struct IfStmt {
    pub id: NodeId,
    pub span: Span,
    pub condition: Expression,
    pub then_branch: Box<Statement>,
    pub else_branch: Option<Box<Statement>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WhileStmt {
    pub id: NodeId,
    pub span: Span,
    pub condition: Expression,
    pub body: Box<Statement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForStmt {
    pub id: NodeId,
    pub span: Span,
    pub init: Option<Box<Statement>>,
    pub condition: Option<Expression>,
    pub update: Option<Expression>,
    pub body: Box<Statement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnStmt {
    pub id: NodeId,
    pub span: Span,
    pub value: Option<Expression>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmitStmt {
    pub id: NodeId,
    pub span: Span,
    pub event: String,
    pub args: Vec<Expression>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaceholderStmt {
    pub id: NodeId,
    pub span: Span,
}

// ===========================================================================
// Expressions
// ===========================================================================

#[derive(Debug, Clone, Serialize)]
pub enum Expression {
    Identifier(Identifier),
    Literal(Literal),
    /// Elementary type used as an expression, e.g. the callee in `address(0)`.
    ElementaryType(ElementaryTypeExpr),
    Binary(Box<BinaryExpr>),
    Unary(Box<UnaryExpr>),
    Assign(Box<AssignExpr>),
    Conditional(Box<ConditionalExpr>),
    Member(Box<MemberAccess>),
    Index(Box<IndexAccess>),
    Call(Box<CallExpr>),
    Tuple(TupleExpr),
}

impl Expression {
    pub fn id(&self) -> NodeId {
        match self {
            Expression::Identifier(e) => e.id,
            Expression::Literal(e) => e.id,
            Expression::ElementaryType(e) => e.id,
            Expression::Binary(e) => e.id,
            Expression::Unary(e) => e.id,
            Expression::Assign(e) => e.id,
            Expression::Conditional(e) => e.id,
            Expression::Member(e) => e.id,
            Expression::Index(e) => e.id,
            Expression::Call(e) => e.id,
            Expression::Tuple(e) => e.id,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Expression::Identifier(e) => e.span,
            Expression::Literal(e) => e.span,
            Expression::ElementaryType(e) => e.span,
            Expression::Binary(e) => e.span,
            Expression::Unary(e) => e.span,
            Expression::Assign(e) => e.span,
            Expression::Conditional(e) => e.span,
            Expression::Member(e) => e.span,
            Expression::Index(e) => e.span,
            Expression::Call(e) => e.span,
            Expression::Tuple(e) => e.span,
        }
    }

    /// The identifier at the root of an lvalue-ish chain (`a.b[c]` -> `a`).
    pub fn base_identifier(&self) -> Option<&Identifier> {
        match self {
            Expression::Identifier(id) => Some(id),
            Expression::Member(m) => m.base.base_identifier(),
            Expression::Index(ix) => ix.base.base_identifier(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Identifier {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LiteralKind {
    Number,
    Bool,
    Str,
    Hex,
}

#[derive(Debug, Clone, Serialize)]
pub struct Literal {
    pub id: NodeId,
    pub span: Span,
    pub kind: LiteralKind,
    /// Raw lexeme, including quotes for strings; printed verbatim.
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElementaryTypeExpr {
    pub id: NodeId,
    pub span: Span,
    pub ty: TypeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn text(&self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Pow => "**",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BinaryExpr {
    pub id: NodeId,
    pub span: Span,
    pub op: BinaryOp,
    pub left: Expression,
    pub right: Expression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
    Delete,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnaryExpr {
    pub id: NodeId,
    pub span: Span,
    pub op: UnaryOp,
    pub operand: Expression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssignOp {
    Assign,
    AddAssign,
    SubAssign,
    MulAssign,
    DivAssign,
    ModAssign,
    BitAndAssign,
    BitOrAssign,
    BitXorAssign,
}

impl AssignOp {
    pub fn text(&self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::AddAssign => "+=",
            AssignOp::SubAssign => "-=",
            AssignOp::MulAssign => "*=",
            AssignOp::DivAssign => "/=",
            AssignOp::ModAssign => "%=",
            AssignOp::BitAndAssign => "&=",
            AssignOp::BitOrAssign => "|=",
            AssignOp::BitXorAssign => "^=",
        }
    }

    /// Compound assignments read the target before writing it.
    pub fn reads_target(&self) -> bool {
        !matches!(self, AssignOp::Assign)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignExpr {
    pub id: NodeId,
    pub span: Span,
    pub op: AssignOp,
    pub target: Expression,
    pub value: Expression,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalExpr {
    pub id: NodeId,
    pub span: Span,
    pub condition: Expression,
    pub then_value: Expression,
    pub else_value: Expression,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberAccess {
    pub id: NodeId,
    pub span: Span,
    pub base: Expression,
    pub member: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexAccess {
    pub id: NodeId,
    pub span: Span,
    pub base: Expression,
    pub index: Expression,
}

/// One `{name: value}` entry of a 0.6-style call option block.
#[derive(Debug, Clone, Serialize)]
pub struct CallOption {
    pub name: String,
    pub value: Expression,
}

#[derive(Debug, Clone, Serialize)]
pub struct CallExpr {
    pub id: NodeId,
    pub span: Span,
    pub callee: Expression,
    /// `{value: e, gas: g}` options of the 0.6 call form; empty otherwise.
    pub options: Vec<CallOption>,
    pub args: Vec<Expression>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TupleExpr {
    pub id: NodeId,
    pub span: Span,
    pub elements: Vec<Expression>,
}

// ===========================================================================
// Lookup helpers
// ===========================================================================

impl SourceUnit {
    pub fn contract_by_name(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn contract_by_id(&self, id: NodeId) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.id == id)
    }

    pub fn function_by_id(&self, id: NodeId) -> Option<(&ContractDef, &FunctionDef)> {
        for c in &self.contracts {
            for f in &c.functions {
                if f.id == id {
                    return Some((c, f));
                }
            }
        }
        None
    }

    /// Walk every statement of every function and modifier body.
    pub fn for_each_statement<'a>(&'a self, f: &mut dyn FnMut(&'a Statement)) {
        for c in &self.contracts {
            for func in &c.functions {
                if let Some(body) = &func.body {
                    for s in &body.statements {
                        walk_stmt(s, f);
                    }
                }
            }
            for m in &c.modifiers {
                for s in &m.body.statements {
                    walk_stmt(s, f);
                }
            }
        }
    }

    /// Find the statement with the given id anywhere in the unit.
    pub fn statement_by_id(&self, id: NodeId) -> Option<&Statement> {
        let mut found = None;
        self.for_each_statement(&mut |s| {
            if s.id() == id && found.is_none() {
                found = Some(s);
            }
        });
        found
    }
}

fn walk_stmt<'a>(stmt: &'a Statement, f: &mut dyn FnMut(&'a Statement)) {
    f(stmt);
    match stmt {
        Statement::Block(b) => {
            for s in &b.statements {
                walk_stmt(s, f);
            }
        }
        Statement::If(s) => {
            walk_stmt(&s.then_branch, f);
            if let Some(e) = &s.else_branch {
                walk_stmt(e, f);
            }
        }
        Statement::While(s) => walk_stmt(&s.body, f),
        Statement::For(s) => {
            if let Some(init) = &s.init {
                walk_stmt(init, f);
            }
            walk_stmt(&s.body, f);
        }
        _ => {}
    }
}

/// Walk an expression tree, visiting every sub-expression including `root`.
pub fn walk_exprs<'a>(root: &'a Expression, f: &mut dyn FnMut(&'a Expression)) {
    f(root);
    match root {
        Expression::Binary(e) => {
            walk_exprs(&e.left, f);
            walk_exprs(&e.right, f);
        }
        Expression::Unary(e) => walk_exprs(&e.operand, f),
        Expression::Assign(e) => {
            walk_exprs(&e.target, f);
            walk_exprs(&e.value, f);
        }
        Expression::Conditional(e) => {
            walk_exprs(&e.condition, f);
            walk_exprs(&e.then_value, f);
            walk_exprs(&e.else_value, f);
        }
        Expression::Member(e) => walk_exprs(&e.base, f),
        Expression::Index(e) => {
            walk_exprs(&e.base, f);
            walk_exprs(&e.index, f);
        }
        Expression::Call(e) => {
            walk_exprs(&e.callee, f);
            for opt in &e.options {
                walk_exprs(&opt.value, f);
            }
            for a in &e.args {
                walk_exprs(a, f);
            }
        }
        Expression::Tuple(e) => {
            for el in &e.elements {
                walk_exprs(el, f);
            }
        }
        Expression::Identifier(_) | Expression::Literal(_) | Expression::ElementaryType(_) => {}
    }
}

/// Expressions evaluated directly by a statement, excluding those owned by
/// nested statements (an if's condition yes, its branches no).
pub fn statement_exprs(stmt: &Statement) -> Vec<&Expression> {
    match stmt {
        Statement::Block(_) | Statement::Placeholder(_) => vec![],
        Statement::VarDecl(s) => s.decl.initializer.iter().collect(),
        Statement::Expr(s) => vec![&s.expr],
        Statement::If(s) => vec![&s.condition],
        Statement::While(s) => vec![&s.condition],
        Statement::For(s) => {
            let mut v = Vec::new();
            if let Some(c) = &s.condition {
                v.push(c);
            }
            if let Some(u) = &s.update {
                v.push(u);
            }
            v
        }
        Statement::Return(s) => s.value.iter().collect(),
        Statement::Emit(s) => s.args.iter().collect(),
    }
}

// ===========================================================================
// Structural fingerprint
// ===========================================================================

/// Canonical structural rendering that ignores node ids and spans. Two trees
/// are structurally equal iff their fingerprints match; used by round-trip
/// tests and the verifier's "modulo formatting" comparisons.
pub fn fingerprint(unit: &SourceUnit) -> String {
    let mut out = String::new();
    let fp = &mut out;
    push(fp, "unit");
    if let Some(p) = &unit.pragma {
        push(fp, &format!("pragma:{}", p.trim()));
    }
    for c in &unit.contracts {
        fp_contract(fp, c);
    }
    out
}

pub fn structurally_equal(a: &SourceUnit, b: &SourceUnit) -> bool {
    fingerprint(a) == fingerprint(b)
}

fn push(out: &mut String, s: &str) {
    out.push_str(s);
    out.push('\n');
}

fn fp_contract(out: &mut String, c: &ContractDef) {
    push(out, &format!("{} {} is [{}]", c.kind, c.name, c.bases.join(",")));
    for s in &c.structs {
        push(out, &format!("struct {}", s.name));
        for f in &s.fields {
            fp_vardecl(out, f);
        }
    }
    for e in &c.events {
        push(out, &format!("event {} /{}", e.name, e.params.len()));
        for p in &e.params {
            fp_vardecl(out, p);
        }
    }
    for v in &c.state_vars {
        fp_vardecl(out, v);
    }
    for m in &c.modifiers {
        push(out, &format!("modifier {}", m.name));
        for p in &m.params {
            fp_vardecl(out, p);
        }
        fp_stmt(out, &Statement::Block(m.body.clone()));
    }
    for f in &c.functions {
        push(
            out,
            &format!("function {} kind={:?} vis={:?} mut={:?}", f.name, f.kind, f.visibility, f.mutability),
        );
        for p in &f.params {
            fp_vardecl(out, p);
        }
        push(out, "returns");
        for r in &f.returns {
            fp_vardecl(out, r);
        }
        for m in &f.modifiers_applied {
            push(out, &format!("apply {}", m.name));
            for a in &m.args {
                fp_expr(out, a);
            }
        }
        match &f.body {
            Some(b) => fp_stmt(out, &Statement::Block(b.clone())),
            None => push(out, "nobody"),
        }
    }
}

fn fp_vardecl(out: &mut String, v: &VarDecl) {
    push(
        out,
        &format!(
            "var {} : {} loc={:?} vis={:?} const={}",
            v.name.as_deref().unwrap_or(""),
            type_text(&v.ty),
            v.data_location,
            v.visibility,
            v.constant
        ),
    );
    if let Some(init) = &v.initializer {
        push(out, "init");
        fp_expr(out, init);
    }
}

/// Canonical text for a type, shared by the fingerprint and the printer.
pub fn type_text(ty: &TypeName) -> String {
    match ty {
        TypeName::Address { payable: false } => "address".into(),
        TypeName::Address { payable: true } => "address payable".into(),
        TypeName::Bool => "bool".into(),
        TypeName::Uint(n) => format!("uint{}", n),
        TypeName::Int(n) => format!("int{}", n),
        TypeName::FixedBytes(n) => format!("bytes{}", n),
        TypeName::Bytes => "bytes".into(),
        TypeName::String => "string".into(),
        TypeName::Mapping { key, value } => {
            format!("mapping({} => {})", type_text(key), type_text(value))
        }
        TypeName::Array { elem, len } => match len {
            Some(n) => format!("{}[{}]", type_text(elem), n),
            None => format!("{}[]", type_text(elem)),
        },
        TypeName::UserDefined(name) => name.clone(),
        TypeName::Inferred => "var".into(),
    }
}

fn fp_stmt(out: &mut String, stmt: &Statement) {
    match stmt {
        Statement::Block(b) => {
            push(out, "{");
            for s in &b.statements {
                fp_stmt(out, s);
            }
            push(out, "}");
        }
        Statement::VarDecl(s) => {
            push(out, "decl");
            fp_vardecl(out, &s.decl);
        }
        Statement::Expr(s) => {
            push(out, "expr");
            fp_expr(out, &s.expr);
        }
        Statement::If(s) => {
            push(out, "if");
            fp_expr(out, &s.condition);
            fp_stmt(out, &s.then_branch);
            match &s.else_branch {
                Some(e) => {
                    push(out, "else");
                    fp_stmt(out, e);
                }
                None => push(out, "noelse"),
            }
        }
        Statement::While(s) => {
            push(out, "while");
            fp_expr(out, &s.condition);
            fp_stmt(out, &s.body);
        }
        Statement::For(s) => {
            push(out, "for");
            match &s.init {
                Some(i) => fp_stmt(out, i),
                None => push(out, "noinit"),
            }
            match &s.condition {
                Some(c) => fp_expr(out, c),
                None => push(out, "nocond"),
            }
            match &s.update {
                Some(u) => fp_expr(out, u),
                None => push(out, "noupd"),
            }
            fp_stmt(out, &s.body);
        }
        Statement::Return(s) => {
            push(out, "return");
            if let Some(v) = &s.value {
                fp_expr(out, v);
            }
        }
        Statement::Emit(s) => {
            push(out, &format!("emit {}", s.event));
            for a in &s.args {
                fp_expr(out, a);
            }
        }
        Statement::Placeholder(_) => push(out, "_"),
    }
}

fn fp_expr(out: &mut String, expr: &Expression) {
    match expr {
        Expression::Identifier(e) => push(out, &format!("id {}", e.name)),
        Expression::Literal(e) => push(out, &format!("lit {:?} {}", e.kind, e.text)),
        Expression::ElementaryType(e) => push(out, &format!("ty {}", type_text(&e.ty))),
        Expression::Binary(e) => {
            push(out, &format!("bin {}", e.op.text()));
            fp_expr(out, &e.left);
            fp_expr(out, &e.right);
        }
        Expression::Unary(e) => {
            push(out, &format!("un {:?}", e.op));
            fp_expr(out, &e.operand);
        }
        Expression::Assign(e) => {
            push(out, &format!("asg {}", e.op.text()));
            fp_expr(out, &e.target);
            fp_expr(out, &e.value);
        }
        Expression::Conditional(e) => {
            push(out, "cond");
            fp_expr(out, &e.condition);
            fp_expr(out, &e.then_value);
            fp_expr(out, &e.else_value);
        }
        Expression::Member(e) => {
            push(out, &format!("member {}", e.member));
            fp_expr(out, &e.base);
        }
        Expression::Index(e) => {
            push(out, "index");
            fp_expr(out, &e.base);
            fp_expr(out, &e.index);
        }
        Expression::Call(e) => {
            push(out, &format!("call /{}", e.args.len()));
            fp_expr(out, &e.callee);
            for opt in &e.options {
                push(out, &format!("opt {}", opt.name));
                fp_expr(out, &opt.value);
            }
            for a in &e.args {
                fp_expr(out, a);
            }
        }
        Expression::Tuple(e) => {
            push(out, &format!("tuple /{}", e.elements.len()));
            for el in &e.elements {
                fp_expr(out, el);
            }
        }
    }
}

// ===========================================================================
// Node builders for synthesized code
// ===========================================================================

/// Mints nodes with fresh ids and synthetic spans; used by fix patterns.
pub struct NodeFactory<'a> {
    ids: &'a mut IdGen,
}

impl<'a> NodeFactory<'a> {
    pub fn new(ids: &'a mut IdGen) -> Self {
        NodeFactory { ids }
    }

    fn id(&mut self) -> NodeId {
        self.ids.fresh()
    }

    pub fn ident(&mut self, name: &str) -> Expression {
        Expression::Identifier(Identifier {
            id: self.id(),
            span: Span::Synthetic,
            name: name.to_string(),
        })
    }

    pub fn number(&mut self, text: &str) -> Expression {
        Expression::Literal(Literal {
            id: self.id(),
            span: Span::Synthetic,
            kind: LiteralKind::Number,
            text: text.to_string(),
        })
    }

    pub fn bool_lit(&mut self, value: bool) -> Expression {
        Expression::Literal(Literal {
            id: self.id(),
            span: Span::Synthetic,
            kind: LiteralKind::Bool,
            text: if value { "true".into() } else { "false".into() },
        })
    }

    pub fn member(&mut self, base: Expression, member: &str) -> Expression {
        Expression::Member(Box::new(MemberAccess {
            id: self.id(),
            span: Span::Synthetic,
            base,
            member: member.to_string(),
        }))
    }

    pub fn call(&mut self, callee: Expression, args: Vec<Expression>) -> Expression {
        Expression::Call(Box::new(CallExpr {
            id: self.id(),
            span: Span::Synthetic,
            callee,
            options: Vec::new(),
            args,
        }))
    }

    pub fn binary(&mut self, op: BinaryOp, left: Expression, right: Expression) -> Expression {
        Expression::Binary(Box::new(BinaryExpr {
            id: self.id(),
            span: Span::Synthetic,
            op,
            left,
            right,
        }))
    }

    pub fn unary(&mut self, op: UnaryOp, operand: Expression) -> Expression {
        Expression::Unary(Box::new(UnaryExpr {
            id: self.id(),
            span: Span::Synthetic,
            op,
            operand,
        }))
    }

    pub fn assign(&mut self, target: Expression, value: Expression) -> Expression {
        Expression::Assign(Box::new(AssignExpr {
            id: self.id(),
            span: Span::Synthetic,
            op: AssignOp::Assign,
            target,
            value,
        }))
    }

    pub fn expr_stmt(&mut self, expr: Expression) -> Statement {
        Statement::Expr(ExprStmt { id: self.id(), span: Span::Synthetic, expr })
    }

    /// `require(<cond>);`
    pub fn require_stmt(&mut self, cond: Expression) -> Statement {
        let callee = self.ident("require");
        let call = self.call(callee, vec![cond]);
        self.expr_stmt(call)
    }

    /// `address(0)`
    pub fn zero_address(&mut self) -> Expression {
        let ty = Expression::ElementaryType(ElementaryTypeExpr {
            id: self.id(),
            span: Span::Synthetic,
            ty: TypeName::Address { payable: false },
        });
        let zero = self.number("0");
        self.call(ty, vec![zero])
    }

    pub fn elementary(&mut self, ty: TypeName) -> Expression {
        Expression::ElementaryType(ElementaryTypeExpr { id: self.id(), span: Span::Synthetic, ty })
    }

    pub fn var_decl_stmt(
        &mut self,
        name: &str,
        ty: TypeName,
        location: DataLocation,
        initializer: Option<Expression>,
    ) -> Statement {
        let decl = VarDecl {
            id: self.id(),
            span: Span::Synthetic,
            name: Some(name.to_string()),
            ty,
            data_location: location,
            visibility: None,
            constant: false,
            initializer,
        };
        Statement::VarDecl(VarDeclStmt { id: self.id(), span: Span::Synthetic, decl })
    }

    pub fn state_var(&mut self, name: &str, ty: TypeName, visibility: Visibility) -> VarDecl {
        VarDecl {
            id: self.id(),
            span: Span::Synthetic,
            name: Some(name.to_string()),
            ty,
            data_location: DataLocation::Storage,
            visibility: Some(visibility),
            constant: false,
            initializer: None,
        }
    }

    pub fn block(&mut self, statements: Vec<Statement>) -> Block {
        Block { id: self.id(), span: Span::Synthetic, statements }
    }

    pub fn function(
        &mut self,
        name: &str,
        kind: FunctionKind,
        visibility: Visibility,
        mutability: Mutability,
        params: Vec<VarDecl>,
        body: Block,
    ) -> FunctionDef {
        FunctionDef {
            id: self.id(),
            span: Span::Synthetic,
            name: name.to_string(),
            kind,
            params,
            returns: Vec::new(),
            visibility,
            mutability,
            modifiers_applied: Vec::new(),
            body: Some(body),
        }
    }
}

//! Recursive-descent parser for the supported Solidity subset.
//!
//! One permissive dialect covers 0.4-style `function Name()` constructors and
//! `call.value(x)()` through 0.6-style `receive()` and `call{value: x}()`.
//! Constructs outside the subset (assembly, try/catch, multiple inheritance,
//! `new`, imports, enums) are rejected as [`ParseError::Unsupported`].

use super::ast::*;
use super::error::ParseError;
use super::lexer::{Lexer, Token, TokenKind};

pub fn parse(source: &str, path: &str) -> Result<SourceUnit, ParseError> {
    let tokens = Lexer::new(source).tokenize()?;
    let mut parser = Parser { src: source, tokens, pos: 0, ids: IdGen::new() };
    let unit = parser.source_unit(path)?;
    validate(&unit)?;
    Ok(unit)
}

const VISIBILITY_KWS: [&str; 4] = ["public", "external", "internal", "private"];
const MUTABILITY_KWS: [&str; 4] = ["payable", "view", "pure", "constant"];

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    ids: IdGen,
}

impl<'a> Parser<'a> {
    // -- token plumbing ----------------------------------------------------

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: TokenKind) -> bool {
        self.peek().kind == kind
    }

    fn at_kw(&self, kw: &str) -> bool {
        let t = self.peek();
        t.kind == TokenKind::Identifier && t.text == kw
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        if self.at(kind) {
            Ok(self.bump())
        } else {
            Err(self.err_here(&[what]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err_here(&[kw]))
        }
    }

    fn ident(&mut self) -> Result<Token, ParseError> {
        if self.at(TokenKind::Identifier) {
            Ok(self.bump())
        } else {
            Err(self.err_here(&["identifier"]))
        }
    }

    fn err_here(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        let found = if t.kind == TokenKind::Eof {
            "end of input".to_string()
        } else {
            format!("{:?}", t.text)
        };
        ParseError::syntax(t.line, t.column, expected.iter().map(|s| s.to_string()).collect(), found)
    }

    fn unsupported(&self, construct: &str) -> ParseError {
        let t = self.peek();
        ParseError::unsupported(construct, t.line, t.column)
    }

    fn span_from(&self, start: usize) -> Span {
        let end = if self.pos == 0 { start } else { self.tokens[self.pos - 1].end };
        Span::source(start, end.max(start))
    }

    fn id(&mut self) -> NodeId {
        self.ids.fresh()
    }

    // -- top level ----------------------------------------------------------

    fn source_unit(&mut self, path: &str) -> Result<SourceUnit, ParseError> {
        let mut pragma = None;
        if self.at_kw("pragma") {
            self.bump();
            self.expect_kw("solidity")?;
            let start = self.peek().start;
            let mut end = start;
            while !self.at(TokenKind::Semicolon) && !self.at(TokenKind::Eof) {
                end = self.bump().end;
            }
            self.expect(TokenKind::Semicolon, ";")?;
            pragma = Some(self.src[start..end].trim().to_string());
        }

        let mut contracts = Vec::new();
        while !self.at(TokenKind::Eof) {
            if self.at_kw("import") {
                return Err(self.unsupported("import directive"));
            }
            if self.at_kw("pragma") {
                return Err(self.unsupported("multiple pragma directives"));
            }
            contracts.push(self.contract()?);
        }

        Ok(SourceUnit {
            path: path.to_string(),
            pragma,
            contracts,
            ids: std::mem::take(&mut self.ids),
        })
    }

    fn contract(&mut self) -> Result<ContractDef, ParseError> {
        let start = self.peek().start;
        let kind = if self.eat_kw("contract") {
            ContractKind::Contract
        } else if self.eat_kw("library") {
            ContractKind::Library
        } else if self.eat_kw("interface") {
            ContractKind::Interface
        } else if self.at_kw("abstract") {
            return Err(self.unsupported("abstract contract"));
        } else {
            return Err(self.err_here(&["contract", "library", "interface"]));
        };
        let id = self.id();
        let name = self.ident()?.text;

        let mut bases = Vec::new();
        if self.eat_kw("is") {
            loop {
                bases.push(self.ident()?.text);
                if self.at(TokenKind::LParen) {
                    return Err(self.unsupported("base constructor arguments"));
                }
                if !self.eat(TokenKind::Comma) {
                    break;
                }
            }
            if bases.len() > 1 {
                return Err(self.unsupported("multiple inheritance"));
            }
        }

        self.expect(TokenKind::LBrace, "{")?;
        let mut def = ContractDef {
            id,
            span: Span::Synthetic,
            name,
            kind,
            bases,
            structs: Vec::new(),
            events: Vec::new(),
            state_vars: Vec::new(),
            modifiers: Vec::new(),
            functions: Vec::new(),
        };
        while !self.at(TokenKind::RBrace) {
            if self.at(TokenKind::Eof) {
                return Err(self.err_here(&["}"]));
            }
            self.contract_member(&mut def)?;
        }
        self.expect(TokenKind::RBrace, "}")?;
        def.span = self.span_from(start);
        Ok(def)
    }

    fn contract_member(&mut self, contract: &mut ContractDef) -> Result<(), ParseError> {
        if self.at_kw("using") {
            return Err(self.unsupported("using-for directive"));
        }
        if self.at_kw("enum") {
            return Err(self.unsupported("enum definition"));
        }
        if self.at_kw("struct") {
            let s = self.struct_def()?;
            contract.structs.push(s);
            return Ok(());
        }
        if self.at_kw("event") {
            let e = self.event_def()?;
            contract.events.push(e);
            return Ok(());
        }
        if self.at_kw("modifier") {
            let m = self.modifier_def()?;
            contract.modifiers.push(m);
            return Ok(());
        }
        if self.at_kw("function")
            || self.at_kw("constructor")
            || ((self.at_kw("receive") || self.at_kw("fallback"))
                && self.peek_at(1).kind == TokenKind::LParen)
        {
            let f = self.function_def(&contract.name)?;
            contract.functions.push(f);
            return Ok(());
        }
        let v = self.state_var()?;
        contract.state_vars.push(v);
        Ok(())
    }

    fn struct_def(&mut self) -> Result<StructDef, ParseError> {
        let start = self.peek().start;
        self.expect_kw("struct")?;
        let id = self.id();
        let name = self.ident()?.text;
        self.expect(TokenKind::LBrace, "{")?;
        let mut fields = Vec::new();
        while !self.at(TokenKind::RBrace) {
            let fstart = self.peek().start;
            let fid = self.id();
            let ty = self.type_name()?;
            let fname = self.ident()?.text;
            self.expect(TokenKind::Semicolon, ";")?;
            fields.push(VarDecl {
                id: fid,
                span: self.span_from(fstart),
                name: Some(fname),
                ty,
                data_location: DataLocation::Default,
                visibility: None,
                constant: false,
                initializer: None,
            });
        }
        self.expect(TokenKind::RBrace, "}")?;
        Ok(StructDef { id, span: self.span_from(start), name, fields })
    }

    fn event_def(&mut self) -> Result<EventDef, ParseError> {
        let start = self.peek().start;
        self.expect_kw("event")?;
        let id = self.id();
        let name = self.ident()?.text;
        self.expect(TokenKind::LParen, "(")?;
        let mut params = Vec::new();
        while !self.at(TokenKind::RParen) {
            let pstart = self.peek().start;
            let pid = self.id();
            let ty = self.type_name()?;
            self.eat_kw("indexed");
            let pname = if self.at(TokenKind::Identifier) && !self.at_kw("indexed") {
                Some(self.bump().text)
            } else {
                None
            };
            params.push(VarDecl {
                id: pid,
                span: self.span_from(pstart),
                name: pname,
                ty,
                data_location: DataLocation::Default,
                visibility: None,
                constant: false,
                initializer: None,
            });
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RParen, ")")?;
        self.eat_kw("anonymous");
        self.expect(TokenKind::Semicolon, ";")?;
        Ok(EventDef { id, span: self.span_from(start), name, params })
    }

    fn state_var(&mut self) -> Result<VarDecl, ParseError> {
        let start = self.peek().start;
        let id = self.id();
        let ty = self.type_name()?;
        let mut visibility = None;
        let mut constant = false;
        loop {
            if self.at_kw("constant") {
                self.bump();
                constant = true;
            } else if VISIBILITY_KWS.iter().any(|k| self.at_kw(k)) {
                let t = self.bump();
                visibility = Some(visibility_of(&t.text));
            } else {
                break;
            }
        }
        let name = self.ident()?.text;
        let initializer =
            if self.eat(TokenKind::Assign) { Some(self.expression(0)?) } else { None };
        self.expect(TokenKind::Semicolon, ";")?;
        Ok(VarDecl {
            id,
            span: self.span_from(start),
            name: Some(name),
            ty,
            data_location: DataLocation::Storage,
            visibility,
            constant,
            initializer,
        })
    }

    fn modifier_def(&mut self) -> Result<ModifierDef, ParseError> {
        let start = self.peek().start;
        self.expect_kw("modifier")?;
        let id = self.id();
        let name = self.ident()?.text;
        let params = if self.at(TokenKind::LParen) { self.param_list(true)? } else { Vec::new() };
        let body = self.block()?;
        Ok(ModifierDef { id, span: self.span_from(start), name, params, body })
    }

    fn function_def(&mut self, contract_name: &str) -> Result<FunctionDef, ParseError> {
        let start = self.peek().start;
        let id = self.id();
        let (mut kind, name) = if self.eat_kw("constructor") {
            (FunctionKind::Constructor, String::new())
        } else if self.at_kw("receive") {
            self.bump();
            (FunctionKind::Receive, String::new())
        } else if self.at_kw("fallback") {
            self.bump();
            (FunctionKind::Fallback, String::new())
        } else {
            self.expect_kw("function")?;
            if self.at(TokenKind::LParen) {
                // 0.4-style unnamed fallback: `function() payable {}`
                (FunctionKind::Fallback, String::new())
            } else {
                let n = self.ident()?.text;
                if n == contract_name {
                    (FunctionKind::Constructor, n)
                } else {
                    (FunctionKind::Regular, n)
                }
            }
        };

        let params = self.param_list(true)?;

        let mut visibility = Visibility::Public;
        let mut mutability = Mutability::Nonpayable;
        let mut modifiers_applied = Vec::new();
        let mut returns = Vec::new();
        loop {
            if VISIBILITY_KWS.iter().any(|k| self.at_kw(k)) {
                visibility = visibility_of(&self.bump().text);
            } else if MUTABILITY_KWS.iter().any(|k| self.at_kw(k)) {
                let t = self.bump();
                mutability = match t.text.as_str() {
                    "payable" => Mutability::Payable,
                    "pure" => Mutability::Pure,
                    // `constant` on a function is the 0.4 spelling of `view`
                    _ => Mutability::View,
                };
            } else if self.at_kw("returns") {
                self.bump();
                returns = self.param_list(false)?;
            } else if self.at_kw("virtual") || self.at_kw("override") {
                return Err(self.unsupported("virtual/override specifier"));
            } else if self.at(TokenKind::Identifier)
                && !self.at(TokenKind::LBrace)
                && !self.at_kw("returns")
            {
                let mid = self.id();
                let mstart = self.peek().start;
                let mname = self.ident()?.text;
                let args = if self.at(TokenKind::LParen) { self.call_args()? } else { Vec::new() };
                modifiers_applied.push(ModifierInvocation {
                    id: mid,
                    span: self.span_from(mstart),
                    name: mname,
                    args,
                });
            } else {
                break;
            }
        }

        if kind == FunctionKind::Fallback && mutability == Mutability::Payable && name.is_empty() {
            // keep the parsed kind; payable fallbacks double as 0.4 receive
        }
        if kind == FunctionKind::Receive {
            kind = FunctionKind::Receive;
        }

        let body = if self.eat(TokenKind::Semicolon) { None } else { Some(self.block()?) };

        Ok(FunctionDef {
            id,
            span: self.span_from(start),
            name: if kind == FunctionKind::Constructor { String::new() } else { name },
            kind,
            params,
            returns,
            visibility,
            mutability,
            modifiers_applied,
            body,
        })
    }

    fn param_list(&mut self, named: bool) -> Result<Vec<VarDecl>, ParseError> {
        self.expect(TokenKind::LParen, "(")?;
        let mut params = Vec::new();
        while !self.at(TokenKind::RParen) {
            let start = self.peek().start;
            let id = self.id();
            let ty = self.type_name()?;
            let data_location = self.opt_data_location();
            let name = if self.at(TokenKind::Identifier) && !self.at_kw("indexed") {
                Some(self.bump().text)
            } else if named {
                return Err(self.err_here(&["parameter name"]));
            } else {
                None
            };
            params.push(VarDecl {
                id,
                span: self.span_from(start),
                name,
                ty,
                data_location,
                visibility: None,
                constant: false,
                initializer: None,
            });
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RParen, ")")?;
        Ok(params)
    }

    fn opt_data_location(&mut self) -> DataLocation {
        if self.eat_kw("storage") {
            DataLocation::Storage
        } else if self.eat_kw("memory") {
            DataLocation::Memory
        } else if self.eat_kw("calldata") {
            DataLocation::Calldata
        } else {
            DataLocation::Default
        }
    }

    // -- types ---------------------------------------------------------------

    fn type_name(&mut self) -> Result<TypeName, ParseError> {
        let mut ty = if self.at_kw("mapping") {
            self.bump();
            self.expect(TokenKind::LParen, "(")?;
            let key = self.type_name()?;
            self.expect(TokenKind::Arrow, "=>")?;
            let value = self.type_name()?;
            self.expect(TokenKind::RParen, ")")?;
            TypeName::Mapping { key: Box::new(key), value: Box::new(value) }
        } else if self.at(TokenKind::Identifier) {
            let t = self.peek().clone();
            match elementary_type(&t.text) {
                Some(mut elem) => {
                    self.bump();
                    if matches!(elem, TypeName::Address { .. }) && self.at_kw("payable") {
                        self.bump();
                        elem = TypeName::Address { payable: true };
                    }
                    elem
                }
                None => {
                    if t.text == "function" {
                        return Err(self.unsupported("function type"));
                    }
                    self.bump();
                    TypeName::UserDefined(t.text)
                }
            }
        } else {
            return Err(self.err_here(&["type name"]));
        };

        while self.at(TokenKind::LBracket) {
            self.bump();
            let len = if self.at(TokenKind::Number) { Some(self.bump().text) } else { None };
            self.expect(TokenKind::RBracket, "]")?;
            ty = TypeName::Array { elem: Box::new(ty), len };
        }
        Ok(ty)
    }

    // -- statements ------------------------------------------------------------

    fn block(&mut self) -> Result<Block, ParseError> {
        let start = self.peek().start;
        let id = self.id();
        self.expect(TokenKind::LBrace, "{")?;
        let mut statements = Vec::new();
        while !self.at(TokenKind::RBrace) {
            if self.at(TokenKind::Eof) {
                return Err(self.err_here(&["}"]));
            }
            statements.push(self.statement()?);
        }
        self.expect(TokenKind::RBrace, "}")?;
        Ok(Block { id, span: self.span_from(start), statements })
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        for kw in ["assembly", "try", "unchecked", "do", "throw", "selfdestruct", "new"] {
            if self.at_kw(kw) {
                return Err(self.unsupported(&format!("{} statement", kw)));
            }
        }
        if self.at(TokenKind::LBrace) {
            return Ok(Statement::Block(self.block()?));
        }
        if self.at_kw("if") {
            return self.if_stmt();
        }
        if self.at_kw("while") {
            return self.while_stmt();
        }
        if self.at_kw("for") {
            return self.for_stmt();
        }
        if self.at_kw("return") {
            let start = self.peek().start;
            let id = self.id();
            self.bump();
            let value =
                if self.at(TokenKind::Semicolon) { None } else { Some(self.expression(0)?) };
            self.expect(TokenKind::Semicolon, ";")?;
            return Ok(Statement::Return(ReturnStmt { id, span: self.span_from(start), value }));
        }
        if self.at_kw("emit") {
            let start = self.peek().start;
            let id = self.id();
            self.bump();
            let event = self.ident()?.text;
            let args = self.call_args()?;
            self.expect(TokenKind::Semicolon, ";")?;
            return Ok(Statement::Emit(EmitStmt { id, span: self.span_from(start), event, args }));
        }
        if self.at_kw("_") && self.peek_at(1).kind == TokenKind::Semicolon {
            let start = self.peek().start;
            let id = self.id();
            self.bump();
            self.bump();
            return Ok(Statement::Placeholder(PlaceholderStmt { id, span: self.span_from(start) }));
        }
        if self.looks_like_declaration() {
            return self.var_decl_stmt();
        }
        let start = self.peek().start;
        let id = self.id();
        let expr = self.expression(0)?;
        self.expect(TokenKind::Semicolon, ";")?;
        Ok(Statement::Expr(ExprStmt { id, span: self.span_from(start), expr }))
    }

    /// Lookahead to separate `Foo[] memory x = ...` from `foo = ...`.
    fn looks_like_declaration(&self) -> bool {
        let t = self.peek();
        if t.kind != TokenKind::Identifier {
            return false;
        }
        if t.text == "mapping" || t.text == "var" || elementary_type(&t.text).is_some() {
            return true;
        }
        // user-defined type: Ident ('[' ']')* ('storage'|'memory'|'calldata')? Ident
        let mut i = 1;
        loop {
            let a = self.peek_at(i);
            if a.kind == TokenKind::LBracket {
                let mut j = i + 1;
                if self.peek_at(j).kind == TokenKind::Number {
                    j += 1;
                }
                if self.peek_at(j).kind != TokenKind::RBracket {
                    return false;
                }
                i = j + 1;
                continue;
            }
            break;
        }
        let a = self.peek_at(i);
        if a.kind == TokenKind::Identifier
            && matches!(a.text.as_str(), "storage" | "memory" | "calldata")
        {
            i += 1;
        }
        let name = self.peek_at(i);
        if name.kind != TokenKind::Identifier {
            return false;
        }
        matches!(self.peek_at(i + 1).kind, TokenKind::Assign | TokenKind::Semicolon)
    }

    fn var_decl_stmt(&mut self) -> Result<Statement, ParseError> {
        let start = self.peek().start;
        let stmt_id = self.id();
        let decl_id = self.id();
        let ty = if self.at_kw("var") {
            self.bump();
            TypeName::Inferred
        } else {
            self.type_name()?
        };
        let data_location = self.opt_data_location();
        let name = self.ident()?.text;
        let initializer =
            if self.eat(TokenKind::Assign) { Some(self.expression(0)?) } else { None };
        self.expect(TokenKind::Semicolon, ";")?;
        let span = self.span_from(start);
        Ok(Statement::VarDecl(VarDeclStmt {
            id: stmt_id,
            span,
            decl: VarDecl {
                id: decl_id,
                span,
                name: Some(name),
                ty,
                data_location,
                visibility: None,
                constant: false,
                initializer,
            },
        }))
    }

    fn if_stmt(&mut self) -> Result<Statement, ParseError> {
        let start = self.peek().start;
        let id = self.id();
        self.expect_kw("if")?;
        self.expect(TokenKind::LParen, "(")?;
        let condition = self.expression(0)?;
        self.expect(TokenKind::RParen, ")")?;
        let then_branch = Box::new(self.statement()?);
        let else_branch = if self.eat_kw("else") { Some(Box::new(self.statement()?)) } else { None };
        Ok(Statement::If(IfStmt { id, span: self.span_from(start), condition, then_branch, else_branch }))
    }

    fn while_stmt(&mut self) -> Result<Statement, ParseError> {
        let start = self.peek().start;
        let id = self.id();
        self.expect_kw("while")?;
        self.expect(TokenKind::LParen, "(")?;
        let condition = self.expression(0)?;
        self.expect(TokenKind::RParen, ")")?;
        let body = Box::new(self.statement()?);
        Ok(Statement::While(WhileStmt { id, span: self.span_from(start), condition, body }))
    }

    fn for_stmt(&mut self) -> Result<Statement, ParseError> {
        let start = self.peek().start;
        let id = self.id();
        self.expect_kw("for")?;
        self.expect(TokenKind::LParen, "(")?;
        let init = if self.eat(TokenKind::Semicolon) {
            None
        } else {
            // the init statement consumes its own semicolon
            let s = if self.looks_like_declaration() {
                self.var_decl_stmt()?
            } else {
                let estart = self.peek().start;
                let eid = self.id();
                let expr = self.expression(0)?;
                self.expect(TokenKind::Semicolon, ";")?;
                Statement::Expr(ExprStmt { id: eid, span: self.span_from(estart), expr })
            };
            Some(Box::new(s))
        };
        let condition =
            if self.at(TokenKind::Semicolon) { None } else { Some(self.expression(0)?) };
        self.expect(TokenKind::Semicolon, ";")?;
        let update = if self.at(TokenKind::RParen) { None } else { Some(self.expression(0)?) };
        self.expect(TokenKind::RParen, ")")?;
        let body = Box::new(self.statement()?);
        Ok(Statement::For(ForStmt { id, span: self.span_from(start), init, condition, update, body }))
    }

    // -- expressions -------------------------------------------------------------

    fn call_args(&mut self) -> Result<Vec<Expression>, ParseError> {
        self.expect(TokenKind::LParen, "(")?;
        let mut args = Vec::new();
        while !self.at(TokenKind::RParen) {
            args.push(self.expression(0)?);
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RParen, ")")?;
        Ok(args)
    }

    fn expression(&mut self, min_bp: u8) -> Result<Expression, ParseError> {
        let mut lhs = self.unary_expr()?;

        loop {
            // assignment (right-assoc, lowest)
            if min_bp == 0 {
                if let Some(op) = assign_op(self.peek().kind) {
                    let start = lhs.span().start();
                    let id = self.id();
                    self.bump();
                    let value = self.expression(0)?;
                    let span = self.span_from(start);
                    lhs = Expression::Assign(Box::new(AssignExpr { id, span, op, target: lhs, value }));
                    continue;
                }
                if self.at(TokenKind::Question) {
                    let start = lhs.span().start();
                    let id = self.id();
                    self.bump();
                    let then_value = self.expression(0)?;
                    self.expect(TokenKind::Colon, ":")?;
                    let else_value = self.expression(0)?;
                    let span = self.span_from(start);
                    lhs = Expression::Conditional(Box::new(ConditionalExpr {
                        id,
                        span,
                        condition: lhs,
                        then_value,
                        else_value,
                    }));
                    continue;
                }
            }

            let Some((op, lbp, rbp)) = binary_op(self.peek().kind) else { break };
            if lbp < min_bp {
                break;
            }
            let start = lhs.span().start();
            let id = self.id();
            self.bump();
            let right = self.expression(rbp)?;
            let span = self.span_from(start);
            lhs = Expression::Binary(Box::new(BinaryExpr { id, span, op, left: lhs, right }));
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expression, ParseError> {
        let start = self.peek().start;
        let op = match self.peek().kind {
            TokenKind::Bang => Some(UnaryOp::Not),
            TokenKind::Minus => Some(UnaryOp::Neg),
            TokenKind::Tilde => Some(UnaryOp::BitNot),
            TokenKind::PlusPlus => Some(UnaryOp::PreInc),
            TokenKind::MinusMinus => Some(UnaryOp::PreDec),
            TokenKind::Identifier if self.peek().text == "delete" => Some(UnaryOp::Delete),
            _ => None,
        };
        if let Some(op) = op {
            let id = self.id();
            self.bump();
            let operand = self.unary_expr()?;
            return Ok(Expression::Unary(Box::new(UnaryExpr {
                id,
                span: self.span_from(start),
                op,
                operand,
            })));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Expression, ParseError> {
        let start = self.peek().start;
        let mut expr = self.primary_expr()?;
        loop {
            match self.peek().kind {
                TokenKind::Dot => {
                    let id = self.id();
                    self.bump();
                    let member = self.ident()?.text;
                    expr = Expression::Member(Box::new(MemberAccess {
                        id,
                        span: self.span_from(start),
                        base: expr,
                        member,
                    }));
                }
                TokenKind::LBracket => {
                    let id = self.id();
                    self.bump();
                    let index = self.expression(0)?;
                    self.expect(TokenKind::RBracket, "]")?;
                    expr = Expression::Index(Box::new(IndexAccess {
                        id,
                        span: self.span_from(start),
                        base: expr,
                        index,
                    }));
                }
                TokenKind::LBrace => {
                    // 0.6 call options: recv.call{value: x}(...)
                    let id = self.id();
                    self.bump();
                    let mut options = Vec::new();
                    while !self.at(TokenKind::RBrace) {
                        let name = self.ident()?.text;
                        self.expect(TokenKind::Colon, ":")?;
                        let value = self.expression(0)?;
                        options.push(CallOption { name, value });
                        if !self.eat(TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(TokenKind::RBrace, "}")?;
                    let args = self.call_args()?;
                    expr = Expression::Call(Box::new(CallExpr {
                        id,
                        span: self.span_from(start),
                        callee: expr,
                        options,
                        args,
                    }));
                }
                TokenKind::LParen => {
                    let id = self.id();
                    let args = self.call_args()?;
                    expr = Expression::Call(Box::new(CallExpr {
                        id,
                        span: self.span_from(start),
                        callee: expr,
                        options: Vec::new(),
                        args,
                    }));
                }
                TokenKind::PlusPlus => {
                    let id = self.id();
                    self.bump();
                    expr = Expression::Unary(Box::new(UnaryExpr {
                        id,
                        span: self.span_from(start),
                        op: UnaryOp::PostInc,
                        operand: expr,
                    }));
                }
                TokenKind::MinusMinus => {
                    let id = self.id();
                    self.bump();
                    expr = Expression::Unary(Box::new(UnaryExpr {
                        id,
                        span: self.span_from(start),
                        op: UnaryOp::PostDec,
                        operand: expr,
                    }));
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn primary_expr(&mut self) -> Result<Expression, ParseError> {
        let start = self.peek().start;
        match self.peek().kind {
            TokenKind::Number | TokenKind::HexNumber => {
                let id = self.id();
                let t = self.bump();
                if self.at(TokenKind::Identifier)
                    && matches!(
                        self.peek().text.as_str(),
                        "ether" | "wei" | "finney" | "szabo" | "gwei" | "seconds" | "minutes"
                            | "hours" | "days" | "weeks" | "years"
                    )
                {
                    return Err(self.unsupported("literal with unit denomination"));
                }
                let kind =
                    if t.kind == TokenKind::HexNumber { LiteralKind::Hex } else { LiteralKind::Number };
                Ok(Expression::Literal(Literal {
                    id,
                    span: Span::source(t.start, t.end),
                    kind,
                    text: t.text,
                }))
            }
            TokenKind::Str => {
                let id = self.id();
                let t = self.bump();
                Ok(Expression::Literal(Literal {
                    id,
                    span: Span::source(t.start, t.end),
                    kind: LiteralKind::Str,
                    text: t.text,
                }))
            }
            TokenKind::LParen => {
                self.bump();
                let first = self.expression(0)?;
                if self.eat(TokenKind::Comma) {
                    let id = self.id();
                    let mut elements = vec![first];
                    while !self.at(TokenKind::RParen) {
                        elements.push(self.expression(0)?);
                        if !self.eat(TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(TokenKind::RParen, ")")?;
                    return Ok(Expression::Tuple(TupleExpr {
                        id,
                        span: self.span_from(start),
                        elements,
                    }));
                }
                self.expect(TokenKind::RParen, ")")?;
                Ok(first)
            }
            TokenKind::Identifier => {
                let text = self.peek().text.clone();
                if text == "new" {
                    return Err(self.unsupported("new expression"));
                }
                if text == "true" || text == "false" {
                    let id = self.id();
                    let t = self.bump();
                    return Ok(Expression::Literal(Literal {
                        id,
                        span: Span::source(t.start, t.end),
                        kind: LiteralKind::Bool,
                        text: t.text,
                    }));
                }
                // elementary type as expression = cast callee, e.g. address(0)
                if text != "var" {
                    if let Some(ty) = elementary_type(&text) {
                        let id = self.id();
                        let t = self.bump();
                        let ty = if matches!(ty, TypeName::Address { .. }) && self.eat_kw("payable")
                        {
                            TypeName::Address { payable: true }
                        } else {
                            ty
                        };
                        return Ok(Expression::ElementaryType(ElementaryTypeExpr {
                            id,
                            span: Span::source(t.start, t.end),
                            ty,
                        }));
                    }
                }
                let id = self.id();
                let t = self.bump();
                Ok(Expression::Identifier(Identifier {
                    id,
                    span: Span::source(t.start, t.end),
                    name: t.text,
                }))
            }
            _ => Err(self.err_here(&["expression"])),
        }
    }
}

fn visibility_of(kw: &str) -> Visibility {
    match kw {
        "external" => Visibility::External,
        "internal" => Visibility::Internal,
        "private" => Visibility::Private,
        _ => Visibility::Public,
    }
}

fn elementary_type(text: &str) -> Option<TypeName> {
    match text {
        "address" => return Some(TypeName::Address { payable: false }),
        "bool" => return Some(TypeName::Bool),
        "string" => return Some(TypeName::String),
        "bytes" => return Some(TypeName::Bytes),
        "byte" => return Some(TypeName::FixedBytes(1)),
        "uint" => return Some(TypeName::Uint(256)),
        "int" => return Some(TypeName::Int(256)),
        "var" => return Some(TypeName::Inferred),
        _ => {}
    }
    if let Some(n) = text.strip_prefix("uint") {
        if let Ok(bits) = n.parse::<u16>() {
            if bits >= 8 && bits <= 256 && bits % 8 == 0 {
                return Some(TypeName::Uint(bits));
            }
        }
    }
    if let Some(n) = text.strip_prefix("int") {
        if let Ok(bits) = n.parse::<u16>() {
            if bits >= 8 && bits <= 256 && bits % 8 == 0 {
                return Some(TypeName::Int(bits));
            }
        }
    }
    if let Some(n) = text.strip_prefix("bytes") {
        if let Ok(width) = n.parse::<u8>() {
            if width >= 1 && width <= 32 {
                return Some(TypeName::FixedBytes(width));
            }
        }
    }
    None
}

fn assign_op(kind: TokenKind) -> Option<AssignOp> {
    use TokenKind::*;
    Some(match kind {
        Assign => AssignOp::Assign,
        PlusAssign => AssignOp::AddAssign,
        MinusAssign => AssignOp::SubAssign,
        StarAssign => AssignOp::MulAssign,
        SlashAssign => AssignOp::DivAssign,
        PercentAssign => AssignOp::ModAssign,
        AmpAssign => AssignOp::BitAndAssign,
        PipeAssign => AssignOp::BitOrAssign,
        CaretAssign => AssignOp::BitXorAssign,
        _ => return None,
    })
}

/// (op, left binding power, right binding power); higher binds tighter.
fn binary_op(kind: TokenKind) -> Option<(BinaryOp, u8, u8)> {
    use TokenKind::*;
    Some(match kind {
        OrOr => (BinaryOp::Or, 4, 5),
        AndAnd => (BinaryOp::And, 6, 7),
        Eq => (BinaryOp::Eq, 8, 9),
        Ne => (BinaryOp::Ne, 8, 9),
        Lt => (BinaryOp::Lt, 10, 11),
        Gt => (BinaryOp::Gt, 10, 11),
        Le => (BinaryOp::Le, 10, 11),
        Ge => (BinaryOp::Ge, 10, 11),
        Pipe => (BinaryOp::BitOr, 12, 13),
        Caret => (BinaryOp::BitXor, 14, 15),
        Amp => (BinaryOp::BitAnd, 16, 17),
        Shl => (BinaryOp::Shl, 18, 19),
        Shr => (BinaryOp::Shr, 18, 19),
        Plus => (BinaryOp::Add, 20, 21),
        Minus => (BinaryOp::Sub, 20, 21),
        Star => (BinaryOp::Mul, 22, 23),
        Slash => (BinaryOp::Div, 22, 23),
        Percent => (BinaryOp::Mod, 22, 23),
        StarStar => (BinaryOp::Pow, 25, 24), // right-assoc
        _ => return None,
    })
}

// -- post-parse validation ------------------------------------------------------

fn validate(unit: &SourceUnit) -> Result<(), ParseError> {
    for contract in &unit.contracts {
        for func in &contract.functions {
            let mut seen = std::collections::HashSet::new();
            for p in &func.params {
                if let Some(name) = &p.name {
                    if !seen.insert(name.clone()) {
                        return Err(ParseError::syntax(
                            line_guess(p.span),
                            1,
                            vec!["unique parameter names".into()],
                            format!("duplicate parameter {:?}", name),
                        ));
                    }
                }
                if p.data_location == DataLocation::Calldata
                    && func.visibility != Visibility::External
                {
                    return Err(ParseError::unsupported(
                        "calldata parameter on non-external function",
                        line_guess(p.span),
                        1,
                    ));
                }
            }
            if let Some(body) = &func.body {
                if count_placeholders(&body.statements) > 0 {
                    return Err(ParseError::unsupported(
                        "placeholder statement outside modifier",
                        line_guess(func.span),
                        1,
                    ));
                }
            }
        }
        for m in &contract.modifiers {
            let top = m
                .body
                .statements
                .iter()
                .filter(|s| matches!(s, Statement::Placeholder(_)))
                .count();
            let total = count_placeholders(&m.body.statements);
            if top != 1 || total != 1 {
                return Err(ParseError::unsupported(
                    "modifier without a single top-level placeholder",
                    line_guess(m.span),
                    1,
                ));
            }
        }
    }
    Ok(())
}

fn count_placeholders(stmts: &[Statement]) -> usize {
    let mut n = 0;
    for s in stmts {
        match s {
            Statement::Placeholder(_) => n += 1,
            Statement::Block(b) => n += count_placeholders(&b.statements),
            Statement::If(i) => {
                n += count_placeholders(std::slice::from_ref(&i.then_branch));
                if let Some(e) = &i.else_branch {
                    n += count_placeholders(std::slice::from_ref(e));
                }
            }
            Statement::While(w) => n += count_placeholders(std::slice::from_ref(&w.body)),
            Statement::For(f) => n += count_placeholders(std::slice::from_ref(&f.body)),
            _ => {}
        }
    }
    n
}

// spans do not retain line numbers; good enough for validation diagnostics
fn line_guess(_span: Span) -> usize {
    1
}

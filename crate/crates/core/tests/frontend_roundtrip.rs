//! Parser/printer round-trip and call-classification checks over the seeded
//! corpus and hand-written snippets.

use solfix::frontend::{self, ast, classify_call, parse, print, CallKind, ParseError};
use std::fs;
use std::path::PathBuf;

fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// All parseable corpus files (the `invalid/` tree is for error paths).
fn corpus_files() -> Vec<PathBuf> {
    let mut files = Vec::new();
    for dir in ["patchable", "other", "unfixable"] {
        let mut entries: Vec<_> = fs::read_dir(corpus_root().join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().map_or(false, |x| x == "sol"))
            .collect();
        entries.sort();
        files.extend(entries);
    }
    files
}

#[test]
fn round_trip_all_corpus_files() {
    let files = corpus_files();
    assert!(files.len() >= 19, "corpus went missing: {} files", files.len());
    for path in files {
        let text = fs::read_to_string(&path).unwrap();
        let name = path.display().to_string();
        let first = parse(&text, &name).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = print(&first).unwrap();
        let second = parse(&printed, &name)
            .unwrap_or_else(|e| panic!("{name}: reparse failed: {e}\n{printed}"));
        assert!(
            ast::structurally_equal(&first, &second),
            "{name}: round-trip changed the tree\n--- printed ---\n{printed}\n--- fp1 ---\n{}\n--- fp2 ---\n{}",
            ast::fingerprint(&first),
            ast::fingerprint(&second)
        );
    }
}

#[test]
fn parse_is_deterministic_including_node_ids() {
    for path in corpus_files() {
        let text = fs::read_to_string(&path).unwrap();
        let a = parse(&text, "x").unwrap();
        let b = parse(&text, "x").unwrap();
        let ids_a: Vec<_> = collect_statement_ids(&a);
        let ids_b: Vec<_> = collect_statement_ids(&b);
        assert_eq!(ids_a, ids_b, "{}", path.display());
        assert!(ast::structurally_equal(&a, &b));
    }
}

fn collect_statement_ids(unit: &ast::SourceUnit) -> Vec<ast::NodeId> {
    let mut ids = Vec::new();
    unit.for_each_statement(&mut |s| ids.push(s.id()));
    ids
}

#[test]
fn spans_cover_source_and_statements_do_not_overlap_siblings() {
    for path in corpus_files() {
        let text = fs::read_to_string(&path).unwrap();
        let unit = parse(&text, "x").unwrap();
        let len = text.len();
        unit.for_each_statement(&mut |s| {
            let sp = s.span();
            assert!(!sp.is_synthetic(), "parsed node with synthetic span");
            assert!(sp.start() <= sp.end() && sp.end() <= len, "{}", path.display());
        });
        for c in &unit.contracts {
            for f in &c.functions {
                if let Some(body) = &f.body {
                    check_sibling_spans(&body.statements);
                }
            }
        }
    }
}

fn check_sibling_spans(stmts: &[ast::Statement]) {
    for pair in stmts.windows(2) {
        assert!(
            pair[0].span().end() <= pair[1].span().start(),
            "sibling statement spans overlap"
        );
    }
}

#[test]
fn fig2_victim_shape() {
    let text = fs::read_to_string(corpus_root().join("patchable/fig2_victim.sol")).unwrap();
    let unit = parse(&text, "fig2").unwrap();
    assert_eq!(unit.contracts.len(), 1);
    let c = &unit.contracts[0];
    let names: Vec<_> = c.functions.iter().map(|f| f.name.as_str()).collect();
    assert!(names.contains(&"refund"));
    assert!(names.contains(&"withdraw"));
    assert_eq!(c.state_vars.len(), 1);
    assert!(matches!(c.state_vars[0].ty, ast::TypeName::Mapping { .. }));
    assert!(c.has_payable_entry());
}

#[test]
fn empty_contract_parses() {
    let unit = parse("contract A {}", "t").unwrap();
    assert_eq!(unit.contracts.len(), 1);
    let c = &unit.contracts[0];
    assert!(c.functions.is_empty() && c.state_vars.is_empty() && c.structs.is_empty());
}

#[test]
fn fig4_assignments_parse_with_locations() {
    let text = fs::read_to_string(corpus_root().join("other/fig4_references.sol")).unwrap();
    let unit = parse(&text, "fig4").unwrap();
    let c = &unit.contracts[0];
    let f = c.functions.iter().find(|f| f.name == "mutate").unwrap();
    let body = f.body.as_ref().unwrap();
    let ast::Statement::VarDecl(first) = &body.statements[0] else { panic!("expected decl") };
    assert_eq!(first.decl.data_location, ast::DataLocation::Storage);
    assert!(matches!(first.decl.ty, ast::TypeName::UserDefined(_)));
    let ast::Statement::VarDecl(second) = &body.statements[1] else { panic!("expected decl") };
    assert_eq!(second.decl.data_location, ast::DataLocation::Memory);
    assert!(matches!(second.decl.ty, ast::TypeName::Array { .. }));
}

#[test]
fn unsupported_constructs_are_not_syntax_errors() {
    let asm = fs::read_to_string(corpus_root().join("invalid/assembly_block.sol")).unwrap();
    match parse(&asm, "asm") {
        Err(e @ ParseError::Unsupported { .. }) => {
            assert!(e.to_string().contains("assembly"));
        }
        other => panic!("expected unsupported-construct rejection, got {:?}", other),
    }
    assert!(matches!(
        parse("contract A is B, C {}", "t"),
        Err(ParseError::Unsupported { .. })
    ));
    assert!(matches!(
        parse("contract A { function f() public { try x() {} catch {} } }", "t"),
        Err(ParseError::Unsupported { .. })
    ));
}

#[test]
fn syntax_errors_carry_position_and_expectations() {
    let broken = fs::read_to_string(corpus_root().join("invalid/broken.sol")).unwrap();
    match parse(&broken, "broken") {
        Err(ParseError::Syntax { line, expected, .. }) => {
            assert!(line >= 4);
            assert!(!expected.is_empty());
        }
        other => panic!("expected syntax error, got {:?}", other),
    }
}

#[test]
fn both_call_value_forms_parse_and_classify() {
    let old = "contract A { function f(address to, uint256 v) public { require(v > 0); to.call.value(v)(); } }";
    let new = "contract A { function f(address to, uint256 v) public { require(v > 0); to.call{value: v}(\"\"); } }";
    for src in [old, new] {
        let unit = parse(src, "t").unwrap();
        let c = &unit.contracts[0];
        let body = c.functions[0].body.as_ref().unwrap();
        let ast::Statement::Expr(stmt) = &body.statements[1] else { panic!() };
        assert_eq!(classify_call(&stmt.expr, &unit, c), CallKind::EtherTransferCallValue, "{src}");
        // and it survives a round trip
        let printed = print(&unit).unwrap();
        let again = parse(&printed, "t").unwrap();
        assert!(ast::structurally_equal(&unit, &again), "{printed}");
    }
}

#[test]
fn classify_send_internal_and_delegatecall() {
    let src = r#"
contract A {
    address public lib;

    function helper() internal pure returns (uint256 r) {
        return 1;
    }

    function f(address to, uint256 amount) public {
        require(to != address(0));
        require(amount > 0);
        to.send(amount);
        this.helper();
        lib.delegatecall("run()");
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let c = &unit.contracts[0];
    let f = c.functions.iter().find(|f| f.name == "f").unwrap();
    let body = f.body.as_ref().unwrap();
    let kinds: Vec<_> = body.statements[2..]
        .iter()
        .map(|s| {
            let ast::Statement::Expr(e) = s else { panic!() };
            classify_call(&e.expr, &unit, c)
        })
        .collect();
    assert_eq!(
        kinds,
        vec![CallKind::EtherTransferSend, CallKind::Internal, CallKind::Delegatecall]
    );
}

#[test]
fn classify_unresolvable_receiver_falls_back_external() {
    let src = "contract A { function f() public { mystery(); } }";
    let unit = parse(src, "t").unwrap();
    let c = &unit.contracts[0];
    let body = c.functions[0].body.as_ref().unwrap();
    let ast::Statement::Expr(e) = &body.statements[0] else { panic!() };
    assert_eq!(classify_call(&e.expr, &unit, c), CallKind::ExternalContract);
    assert!(frontend::is_low_confidence(&e.expr, &unit, c));
}

#[test]
fn inserted_require_prints_at_position() {
    let src = "contract A { function f(address p) public { p.send(1); } }";
    let mut unit = parse(src, "t").unwrap();
    let mut ids = unit.ids.clone();
    let mut factory = ast::NodeFactory::new(&mut ids);
    let p = factory.ident("p");
    let zero = factory.zero_address();
    let cond = factory.binary(ast::BinaryOp::Ne, p, zero);
    let req = factory.require_stmt(cond);
    unit.ids = ids;
    let body = unit.contracts[0].functions[0].body.as_mut().unwrap();
    body.statements.insert(0, req);

    let printed = print(&unit).unwrap();
    let first_line = printed.lines().find(|l| l.trim_start().starts_with("require")).unwrap();
    assert_eq!(first_line.trim(), "require(p != address(0));");
    let reparsed = parse(&printed, "t").unwrap();
    assert!(ast::structurally_equal(&unit, &reparsed));
}

#[test]
fn method_call_as_modifier_argument_reparses() {
    // regression guard for emitting modifier arguments that are themselves
    // calls; the printed form must stay valid
    let src = r#"
contract A {
    uint256 public level;

    modifier atLeast(uint256 lvl) {
        require(level >= lvl);
        _;
    }

    function current() internal view returns (uint256 l) {
        return level;
    }

    function bump() public atLeast(current()) {
        level += 1;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let printed = print(&unit).unwrap();
    let again = parse(&printed, "t").unwrap_or_else(|e| panic!("reparse failed: {e}\n{printed}"));
    assert!(ast::structurally_equal(&unit, &again));
    let c = &again.contracts[0];
    let f = c.functions.iter().find(|f| f.name == "bump").unwrap();
    assert_eq!(f.modifiers_applied.len(), 1);
    assert_eq!(f.modifiers_applied[0].args.len(), 1);
}

#[test]
fn duplicate_parameter_names_rejected() {
    assert!(parse("contract A { function f(uint256 x, uint256 x) public {} }", "t").is_err());
}

#[test]
fn precedence_survives_round_trip() {
    let src = "contract A { function f(uint256 a, uint256 b, uint256 c) public pure returns (uint256 r) { return (a + b) * c - a / (b - c); } }";
    let unit = parse(src, "t").unwrap();
    let printed = print(&unit).unwrap();
    assert!(printed.contains("(a + b) * c - a / (b - c)"), "{printed}");
    let again = parse(&printed, "t").unwrap();
    assert!(ast::structurally_equal(&unit, &again));
}

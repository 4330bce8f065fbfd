//! Dataflow, summary, and dependence tests, including the brute-force
//! read/write-set oracle over randomly generated straight-line functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solfix::analysis::{
    analyze, classify_dependences, AbstractLocation, Dependence, DependenceKind,
};
use solfix::frontend::ast::{DataLocation, NodeId, SourceUnit, Statement};
use solfix::frontend::parse;
use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

fn corpus(path: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(path))
        .unwrap()
}

fn function_id(unit: &SourceUnit, contract: &str, name: &str) -> NodeId {
    unit.contract_by_name(contract)
        .unwrap()
        .functions
        .iter()
        .find(|f| f.name == name)
        .unwrap()
        .id
}

fn state_var_loc(unit: &SourceUnit, contract: &str, name: &str) -> AbstractLocation {
    let decl = unit
        .contract_by_name(contract)
        .unwrap()
        .state_vars
        .iter()
        .find(|v| v.name.as_deref() == Some(name))
        .unwrap()
        .id;
    AbstractLocation::new(decl, DataLocation::Storage)
}

#[test]
fn fig2_refund_summary_and_send_argument_edge() {
    let src = corpus("patchable/fig2_victim.sol");
    let unit = parse(&src, "fig2").unwrap();
    let analyses = analyze(&unit).unwrap();

    let refund = function_id(&unit, "Victim", "refund");
    let summary = &analyses.summaries[&refund];
    let balances = state_var_loc(&unit, "Victim", "userBalances");
    assert!(summary.state_vars_written.contains(&balances.decl));
    assert!(summary.makes_ether_transfer);
    assert!(summary.makes_external_call);

    // the send argument reads userBalances, fed by its declaration pseudo-def
    let dfg = &analyses.dfgs[&refund];
    let cfg = &analyses.cfgs[&refund];
    let points = cfg.points_in_order();
    let send_point = points
        .iter()
        .copied()
        .find(|p| {
            solfix::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                .unwrap()
                .contains(".send(")
        })
        .unwrap();
    assert!(dfg.reads_of(send_point).contains(&balances));
    assert!(
        dfg.edges.iter().any(|e| e.usage == send_point && e.location == balances),
        "no def-use edge into the send argument"
    );
}

#[test]
fn pure_getter_has_empty_summary() {
    let src = r#"
contract A {
    uint256 public total;

    function get() public view returns (uint256 t) {
        return total;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let get = function_id(&unit, "A", "get");
    let summary = &analyses.summaries[&get];
    assert!(summary.state_vars_written.is_empty());
    assert!(!summary.makes_external_call);
    assert!(!summary.makes_ether_transfer);
    assert_eq!(summary.state_vars_read.len(), 1);
}

#[test]
fn summary_fixpoint_propagates_through_internal_calls() {
    let src = r#"
contract A {
    uint256 public counter;

    function bump() internal {
        counter += 1;
    }

    function outer() public {
        bump();
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let outer = function_id(&unit, "A", "outer");
    let counter = state_var_loc(&unit, "A", "counter");
    // the hand-computed transitive closure: outer -> bump -> write(counter)
    assert!(analyses.summaries[&outer].state_vars_written.contains(&counter.decl));
}

#[test]
fn summary_monotonicity_under_added_write() {
    let base = r#"
contract A {
    uint256 public a;
    uint256 public b;

    function touch() public {
        a = 1;
    }
}
"#;
    let extended = base.replace("a = 1;", "a = 1;\n        b = 2;");
    let unit1 = parse(base, "t").unwrap();
    let unit2 = parse(&extended, "t").unwrap();
    let an1 = analyze(&unit1).unwrap();
    let an2 = analyze(&unit2).unwrap();
    let names = |unit: &SourceUnit, an: &solfix::analysis::Analyses| -> BTreeSet<String> {
        let f = function_id(unit, "A", "touch");
        an.summaries[&f].state_vars_written.iter().map(|d| an.var_name(*d)).collect()
    };
    let before = names(&unit1, &an1);
    let after = names(&unit2, &an2);
    assert!(before.is_subset(&after), "adding a write removed summary entries");
    assert!(after.contains("b"));
}

#[test]
fn vesting_war_between_require_read_and_write() {
    let src = corpus("patchable/vesting.sol");
    let unit = parse(&src, "vesting").unwrap();
    let analyses = analyze(&unit).unwrap();
    let f = function_id(&unit, "TokenVesting", "registerVestingSchedule");
    let cfg = &analyses.cfgs[&f];
    let dfg = &analyses.dfgs[&f];
    let total = state_var_loc(&unit, "TokenVesting", "totalUnreleasedTokens");

    let points = cfg.points_in_order();
    let require_point = points
        .iter()
        .copied()
        .find(|p| {
            solfix::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                .unwrap()
                .contains("balanceOf")
        })
        .unwrap();
    let write_point = points
        .iter()
        .copied()
        .find(|p| {
            solfix::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                .unwrap()
                .starts_with("totalUnreleasedTokens =")
        })
        .unwrap();

    let deps = classify_dependences(cfg, dfg, &points);
    assert!(
        deps.contains(&Dependence {
            from: require_point,
            to: write_point,
            kind: DependenceKind::War,
            location: total,
        }),
        "missing WAR from the balance check to the later write"
    );

    // writes through the storage pointer resolve to the mapping's location
    let schedules = state_var_loc(&unit, "TokenVesting", "vestingSchedules");
    let field_write = points
        .iter()
        .copied()
        .find(|p| {
            solfix::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                .unwrap()
                .starts_with("vestingSchedule.principleLockAmount")
        })
        .unwrap();
    assert!(dfg.writes_of(field_write).contains(&schedules));
}

#[test]
fn straight_line_single_raw_edge() {
    let src = r#"
contract A {
    function f() public pure returns (uint256 r) {
        uint256 x = 1;
        uint256 y = x;
        return y;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let f = function_id(&unit, "A", "f");
    let cfg = &analyses.cfgs[&f];
    let dfg = &analyses.dfgs[&f];
    let points = cfg.points_in_order();
    let deps = classify_dependences(cfg, dfg, &points[..2]);
    let raws: Vec<_> = deps.iter().filter(|d| d.kind == DependenceKind::Raw).collect();
    assert_eq!(raws.len(), 1);
    assert_eq!(raws[0].from, points[0]);
    assert_eq!(raws[0].to, points[1]);
}

#[test]
fn waw_between_successive_writes_to_same_slot() {
    let src = r#"
contract A {
    mapping(address => uint256) public m;

    function f(address k) public {
        require(k != address(0));
        m[k] = 1;
        m[k] = 2;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let f = function_id(&unit, "A", "f");
    let cfg = &analyses.cfgs[&f];
    let dfg = &analyses.dfgs[&f];
    let points = cfg.points_in_order();
    let deps = classify_dependences(cfg, dfg, &points);
    let m = state_var_loc(&unit, "A", "m");
    assert!(deps.iter().any(|d| d.kind == DependenceKind::Waw && d.location == m));
}

#[test]
fn loop_carried_dependences_follow_back_edges() {
    let src = r#"
contract A {
    uint256 public acc;

    function f(uint256 n) public {
        uint256 i = 0;
        while (i < n) {
            acc += i;
            i += 1;
        }
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let f = function_id(&unit, "A", "f");
    let cfg = &analyses.cfgs[&f];
    let dfg = &analyses.dfgs[&f];
    let points = cfg.points_in_order();
    let deps = classify_dependences(cfg, dfg, &points);
    // `i += 1` writes i which `acc += i` (earlier in the body) reads on the
    // next iteration: a back-edge-respecting WAR/RAW pair in both directions
    let acc_write = points
        .iter()
        .copied()
        .find(|p| {
            solfix::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                .unwrap()
                .starts_with("acc")
        })
        .unwrap();
    let i_bump = points
        .iter()
        .copied()
        .find(|p| {
            solfix::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                .unwrap()
                .starts_with("i +=")
        })
        .unwrap();
    assert!(deps.iter().any(|d| d.from == i_bump && d.to == acc_write && d.kind == DependenceKind::Raw));
}

// ---------------------------------------------------------------------------
// Brute-force oracle over random straight-line functions
// ---------------------------------------------------------------------------

/// One generated statement with its by-construction read/write sets.
struct GenStmt {
    text: String,
    writes: BTreeSet<usize>,
    reads: BTreeSet<usize>,
}

fn generate_function(rng: &mut ChaCha8Rng, nvars: usize, nstmts: usize) -> Vec<GenStmt> {
    (0..nstmts)
        .map(|_| {
            let a = rng.gen_range(0..nvars);
            match rng.gen_range(0..3) {
                0 => {
                    let c = rng.gen_range(0..100);
                    GenStmt {
                        text: format!("v{} = {};", a, c),
                        writes: BTreeSet::from([a]),
                        reads: BTreeSet::new(),
                    }
                }
                1 => {
                    let b = rng.gen_range(0..nvars);
                    let c = rng.gen_range(0..nvars);
                    GenStmt {
                        text: format!("v{} = v{} + v{};", a, b, c),
                        writes: BTreeSet::from([a]),
                        reads: BTreeSet::from([b, c]),
                    }
                }
                _ => {
                    let b = rng.gen_range(0..nvars);
                    GenStmt {
                        text: format!("v{} += v{};", a, b),
                        writes: BTreeSet::from([a]),
                        reads: BTreeSet::from([a, b]),
                    }
                }
            }
        })
        .collect()
}

fn oracle_dependences(stmts: &[GenStmt]) -> BTreeSet<(usize, usize, DependenceKind, usize)> {
    let mut out = BTreeSet::new();
    for i in 0..stmts.len() {
        for j in (i + 1)..stmts.len() {
            for v in stmts[i].writes.intersection(&stmts[j].reads) {
                out.insert((i, j, DependenceKind::Raw, *v));
            }
            for v in stmts[i].reads.intersection(&stmts[j].writes) {
                out.insert((i, j, DependenceKind::War, *v));
            }
            for v in stmts[i].writes.intersection(&stmts[j].writes) {
                out.insert((i, j, DependenceKind::Waw, *v));
            }
            for v in stmts[i].reads.intersection(&stmts[j].reads) {
                out.insert((i, j, DependenceKind::Rar, *v));
            }
        }
    }
    out
}

/// Run one generated function through the analyzer and compare every pair
/// against the oracle. Returns the number of compared dependences.
pub fn check_one_generated(rng: &mut ChaCha8Rng, max_vars: usize, max_stmts: usize) -> usize {
    let nvars = rng.gen_range(2..=max_vars);
    let nstmts = rng.gen_range(2..=max_stmts);
    let stmts = generate_function(rng, nvars, nstmts);

    let mut src = String::from("contract G {\n");
    for v in 0..nvars {
        src.push_str(&format!("    uint256 internal v{};\n", v));
    }
    src.push_str("\n    function f() public {\n");
    for s in &stmts {
        src.push_str(&format!("        {}\n", s.text));
    }
    src.push_str("    }\n}\n");

    let unit = parse(&src, "gen").unwrap();
    let analyses = analyze(&unit).unwrap();
    let f = function_id(&unit, "G", "f");
    let cfg = &analyses.cfgs[&f];
    let dfg = &analyses.dfgs[&f];
    let points = cfg.points_in_order();
    assert_eq!(points.len(), stmts.len());

    let var_decl: Vec<NodeId> =
        (0..nvars).map(|v| state_var_loc(&unit, "G", &format!("v{}", v)).decl).collect();
    let point_index: std::collections::BTreeMap<NodeId, usize> =
        points.iter().copied().enumerate().map(|(i, p)| (p, i)).collect();

    let actual: BTreeSet<(usize, usize, DependenceKind, usize)> =
        classify_dependences(cfg, dfg, &points)
            .into_iter()
            .map(|d| {
                let var = var_decl.iter().position(|decl| *decl == d.location.decl).unwrap();
                (point_index[&d.from], point_index[&d.to], d.kind, var)
            })
            .collect();
    let expected = oracle_dependences(&stmts);
    assert_eq!(actual, expected, "dependence mismatch for:\n{}", src);

    // RAW def-use edges must come from the latest preceding write
    for (j, stmt) in stmts.iter().enumerate() {
        for v in &stmt.reads {
            let last_def = (0..j).rev().find(|i| stmts[*i].writes.contains(v));
            let loc = AbstractLocation::new(var_decl[*v], DataLocation::Storage);
            let defs: Vec<NodeId> = dfg
                .edges
                .iter()
                .filter(|e| e.usage == points[j] && e.location == loc)
                .map(|e| e.def)
                .collect();
            match last_def {
                Some(i) => assert_eq!(defs, vec![points[i]], "wrong reaching def in:\n{}", src),
                None => assert_eq!(defs, vec![var_decl[*v]], "expected decl pseudo-def in:\n{}", src),
            }
        }
    }
    expected.len()
}

#[test]
fn dependences_match_brute_force_oracle_on_random_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x501f_1ace);
    for _ in 0..120 {
        check_one_generated(&mut rng, 4, 10);
    }
}

#[test]
fn points_to_conservatism_across_corpus() {
    // a variable points outside itself only when it is a non-state composite
    // local; everything else keeps its singleton self-location
    for dir in ["patchable", "other", "unfixable"] {
        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(dir);
        for entry in fs::read_dir(root).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().map_or(true, |x| x != "sol") {
                continue;
            }
            let text = fs::read_to_string(&path).unwrap();
            let unit = parse(&text, "c").unwrap();
            let analyses = analyze(&unit).unwrap();
            let mut decls: Vec<(NodeId, bool)> = Vec::new(); // (decl, is composite local)
            unit.for_each_statement(&mut |s| {
                if let Statement::VarDecl(d) = s {
                    decls.push((d.decl.id, d.decl.ty.is_composite()));
                }
            });
            for (decl, composite) in decls {
                if let Some(set) = analyses.points_to.points_to(decl) {
                    let self_only =
                        set.len() == 1 && set.iter().next().unwrap().decl == decl;
                    if !composite {
                        assert!(
                            self_only || set.is_empty(),
                            "elementary local aliases in {}",
                            path.display()
                        );
                    }
                }
            }
        }
    }
}

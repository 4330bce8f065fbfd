//! Detector strategy and ensemble behavior over the seeded fixtures and
//! hand-written patterns.

use solfix::analysis::analyze;
use solfix::detectors::{
    detect, detect_and_filter, detect_locked_ether, detect_missing_input_validation,
    detect_reentrancy, detect_unhandled_exception, ensemble, DetectorName, DetectorVote, Finding,
    Thresholds, UnfixableReason, VulnClass,
};
use solfix::frontend::parse;
use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

fn corpus(path: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(path))
        .unwrap()
}

fn detectors_of(votes: &[DetectorVote], class: VulnClass, function: &str) -> BTreeSet<DetectorName> {
    votes
        .iter()
        .filter(|v| v.class == class && v.site.function.as_deref() == Some(function))
        .map(|v| v.detector)
        .collect()
}

fn findings_for(src: &str) -> Vec<Finding> {
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    detect_and_filter(&analyses, src, &Thresholds::default())
}

// -- reentrancy --------------------------------------------------------------

#[test]
fn reentrancy_fig2_all_three_vote() {
    let src = corpus("patchable/fig2_victim.sol");
    let unit = parse(&src, "fig2").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_reentrancy(&analyses, &src);
    let voters = detectors_of(&votes, VulnClass::Reentrancy, "refund");
    assert_eq!(
        voters,
        BTreeSet::from([DetectorName::Syntactic, DetectorName::Dataflow, DetectorName::Semantic])
    );
    // withdraw follows checks-effects-interactions: zero votes
    assert!(detectors_of(&votes, VulnClass::Reentrancy, "withdraw").is_empty());
}

#[test]
fn reentrancy_call_guarded_write_semantic_abstains() {
    let src = corpus("other/fp_pattern.sol");
    let unit = parse(&src, "fp").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_reentrancy(&analyses, &src);
    let voters = detectors_of(&votes, VulnClass::Reentrancy, "forward");
    assert_eq!(voters, BTreeSet::from([DetectorName::Syntactic, DetectorName::Dataflow]));

    // the finding still forms (2 votes) but post-processing rejects it
    let findings = findings_for(&src);
    let reentrancy: Vec<_> =
        findings.iter().filter(|f| f.class == VulnClass::Reentrancy).collect();
    assert_eq!(reentrancy.len(), 1);
    assert!(!reentrancy[0].fixable);
    assert_eq!(
        reentrancy[0].unfixable_reason,
        Some(UnfixableReason::ExternalCallControlsWrite)
    );
}

#[test]
fn reentrancy_write_before_call_no_votes() {
    let src = r#"
contract A {
    mapping(address => uint256) public balances;

    function out() public {
        uint256 amount = balances[msg.sender];
        balances[msg.sender] = 0;
        msg.sender.transfer(amount);
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_reentrancy(&analyses, src);
    assert!(votes.is_empty(), "{votes:?}");
}

#[test]
fn reentrancy_via_internal_callee_summary() {
    // inter-procedural: f sends through a helper, then writes
    let src = r#"
contract A {
    mapping(address => uint256) public balances;

    function forward(address to, uint256 amount) internal {
        require(to != address(0));
        to.transfer(amount);
    }

    function out(address to) public {
        require(to != address(0));
        forward(to, balances[to]);
        balances[to] = 0;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_reentrancy(&analyses, src);
    let voters = detectors_of(&votes, VulnClass::Reentrancy, "out");
    assert!(voters.contains(&DetectorName::Dataflow), "{votes:?}");
}

// -- missing input validation -------------------------------------------------

#[test]
fn input_validation_fig5_votes_src_and_dst_not_wad() {
    let src = corpus("patchable/fig5_token.sol");
    let unit = parse(&src, "fig5").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_missing_input_validation(&analyses, &src);
    let named: BTreeSet<String> = votes
        .iter()
        .map(|v| v.site.description.split_whitespace().nth(1).unwrap().to_string())
        .collect();
    assert_eq!(named, BTreeSet::from(["src".to_string(), "dst".to_string()]));
}

#[test]
fn input_validation_zero_check_counts() {
    let src = r#"
contract A {
    address public stored;

    function set(address addr) public {
        require(addr != address(0));
        stored = addr;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    assert!(detect_missing_input_validation(&analyses, src).is_empty());
}

#[test]
fn input_validation_unused_param_votes() {
    let src = r#"
contract A {
    uint256 public v;

    function f(address ghost) public {
        v = 1;
    }
}
"#;
    // oracle: the parameter appears in no require/assert comparison subtree
    assert!(!src.contains("require"));
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_missing_input_validation(&analyses, src);
    assert_eq!(votes.len(), 1);
    assert!(votes[0].site.description.contains("ghost"));
    // single vote suffices for this class
    let findings = ensemble(votes, &Thresholds::default());
    assert_eq!(findings.len(), 1);
}

#[test]
fn input_validation_if_revert_counts() {
    let src = r#"
contract A {
    address public stored;

    function set(address addr) public {
        if (addr == address(0)) {
            revert();
        }
        stored = addr;
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    assert!(detect_missing_input_validation(&analyses, src).is_empty());
}

// -- locked ether ---------------------------------------------------------------

#[test]
fn locked_ether_payable_fallback_all_three_vote() {
    let src = r#"
contract Sink {
    function() public payable {}
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_locked_ether(&analyses, src);
    let voters: BTreeSet<DetectorName> = votes.iter().map(|v| v.detector).collect();
    assert_eq!(
        voters,
        BTreeSet::from([DetectorName::Syntactic, DetectorName::Dataflow, DetectorName::Semantic])
    );
}

#[test]
fn locked_ether_with_withdraw_no_votes() {
    let src = r#"
contract Bank {
    function deposit() public payable {}

    function withdraw(uint256 amount) public {
        require(amount > 0);
        msg.sender.transfer(amount);
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    assert!(detect_locked_ether(&analyses, src).is_empty());
}

#[test]
fn locked_ether_delegatecall_only_semantic_votes_syntactic_abstains() {
    let src = corpus("other/locked_delegatecall.sol");
    let unit = parse(&src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_locked_ether(&analyses, &src);
    let voters: BTreeSet<DetectorName> = votes.iter().map(|v| v.detector).collect();
    assert!(voters.contains(&DetectorName::Semantic));
    assert!(!voters.contains(&DetectorName::Syntactic), "call token should silence syntactic");
    // still two votes, so the finding forms and stays fixable
    let findings = findings_for(&src);
    let locked: Vec<_> = findings.iter().filter(|f| f.class == VulnClass::LockedEther).collect();
    assert_eq!(locked.len(), 1);
    assert!(locked[0].fixable);
}

#[test]
fn locked_ether_delegatecall_to_resolvable_sender_rescues() {
    let src = r#"
contract Helper {
    function flush(address to) public {
        require(to != address(0));
        to.transfer(address(this).balance);
    }
}

contract Proxy {
    Helper public helper;

    function deposit() public payable {}

    function drain() public {
        helper.delegatecall("flush(address)");
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_locked_ether(&analyses, src);
    let for_proxy: Vec<_> =
        votes.iter().filter(|v| v.site.contract == "Proxy").map(|v| v.detector).collect();
    // dataflow still votes (no summary transfers) but semantic sees the
    // resolvable delegatecall target that can send ether
    assert!(for_proxy.contains(&DetectorName::Dataflow));
    assert!(!for_proxy.contains(&DetectorName::Semantic));
    // one vote total: below threshold, no finding
    let findings = findings_for(src);
    assert!(findings.iter().all(|f| f.class != VulnClass::LockedEther || f.site.contract != "Proxy"));
}

// -- unhandled exception ----------------------------------------------------------

#[test]
fn unhandled_exception_bare_send_all_three() {
    let src = r#"
contract A {
    function pay(address to, uint256 amount) public {
        require(to != address(0));
        require(amount > 0);
        to.send(amount);
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_unhandled_exception(&analyses, src);
    let voters = detectors_of(&votes, VulnClass::UnhandledException, "pay");
    assert_eq!(
        voters,
        BTreeSet::from([DetectorName::Syntactic, DetectorName::Dataflow, DetectorName::Semantic])
    );
}

#[test]
fn unhandled_exception_require_wrapped_no_votes() {
    let src = r#"
contract A {
    function pay(address to, uint256 amount) public {
        require(to != address(0));
        require(amount > 0);
        require(to.send(amount));
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    assert!(detect_unhandled_exception(&analyses, src).is_empty());
}

#[test]
fn unhandled_exception_dead_capture_two_votes() {
    let src = r#"
contract A {
    function pay(address to, uint256 amount) public {
        require(to != address(0));
        require(amount > 0);
        bool ok = to.send(amount);
    }
}
"#;
    // oracle: `ok` appears in no later statement's use set
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    let votes = detect_unhandled_exception(&analyses, src);
    let voters = detectors_of(&votes, VulnClass::UnhandledException, "pay");
    assert_eq!(voters, BTreeSet::from([DetectorName::Dataflow, DetectorName::Semantic]));
}

#[test]
fn unhandled_exception_checked_capture_no_votes() {
    let src = r#"
contract A {
    uint256 public failures;

    function pay(address to, uint256 amount) public {
        require(to != address(0));
        require(amount > 0);
        bool ok = to.send(amount);
        if (!ok) {
            failures += 1;
        }
    }
}
"#;
    let unit = parse(src, "t").unwrap();
    let analyses = analyze(&unit).unwrap();
    assert!(detect_unhandled_exception(&analyses, src).is_empty());
}

// -- post-processing reasons ---------------------------------------------------------

#[test]
fn post_process_timestamp_dependent_write() {
    let src = corpus("unfixable/timestamp_reentrancy.sol");
    let findings = findings_for(&src);
    let unfixable: Vec<_> = findings.iter().filter(|f| !f.fixable).collect();
    assert_eq!(unfixable.len(), 1);
    assert_eq!(unfixable[0].class, VulnClass::Reentrancy);
    assert_eq!(unfixable[0].unfixable_reason, Some(UnfixableReason::TimestampDependentWrite));
}

#[test]
fn post_process_non_address_parameter() {
    let src = corpus("unfixable/uint_param.sol");
    let findings = findings_for(&src);
    let unfixable: Vec<_> = findings.iter().filter(|f| !f.fixable).collect();
    assert_eq!(unfixable.len(), 1);
    assert_eq!(unfixable[0].class, VulnClass::MissingInputValidation);
    assert_eq!(unfixable[0].unfixable_reason, Some(UnfixableReason::NonAddressParameter));
}

#[test]
fn post_process_library_contract() {
    let src = corpus("unfixable/library_locked.sol");
    let findings = findings_for(&src);
    let unfixable: Vec<_> = findings.iter().filter(|f| !f.fixable).collect();
    assert_eq!(unfixable.len(), 1);
    assert_eq!(unfixable[0].class, VulnClass::LockedEther);
    assert_eq!(unfixable[0].unfixable_reason, Some(UnfixableReason::LibraryContract));
}

#[test]
fn post_process_return_value_handled() {
    let src = corpus("unfixable/handled_send.sol");
    let findings = findings_for(&src);
    let unfixable: Vec<_> = findings.iter().filter(|f| !f.fixable).collect();
    assert_eq!(unfixable.len(), 1, "{findings:?}");
    assert_eq!(unfixable[0].class, VulnClass::UnhandledException);
    assert_eq!(unfixable[0].unfixable_reason, Some(UnfixableReason::ReturnValueHandled));
}

// -- ensemble properties ------------------------------------------------------------

#[test]
fn disabling_a_detector_only_shrinks_findings() {
    for file in ["patchable/fig2_victim.sol", "other/mixed.sol", "other/fp_pattern.sol"] {
        let src = corpus(file);
        let unit = parse(&src, "t").unwrap();
        let analyses = analyze(&unit).unwrap();
        let thresholds = Thresholds::default();
        let full: BTreeSet<_> =
            detect(&analyses, &src, &thresholds).iter().map(|f| f.identity()).collect();
        for disabled in [DetectorName::Syntactic, DetectorName::Dataflow, DetectorName::Semantic] {
            let mut votes = Vec::new();
            votes.extend(detect_unhandled_exception(&analyses, &src));
            votes.extend(detect_reentrancy(&analyses, &src));
            votes.extend(detect_missing_input_validation(&analyses, &src));
            votes.extend(detect_locked_ether(&analyses, &src));
            votes.retain(|v| v.detector != disabled);
            let reduced: BTreeSet<_> =
                ensemble(votes, &thresholds).iter().map(|f| f.identity()).collect();
            assert!(reduced.is_subset(&full), "{file}: disabling {disabled:?} created findings");
        }
    }
}

#[test]
fn every_finding_meets_threshold_and_fixability_totality() {
    for dir in ["patchable", "other", "unfixable"] {
        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(dir);
        for entry in fs::read_dir(root).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().map_or(true, |x| x != "sol") {
                continue;
            }
            let src = fs::read_to_string(&path).unwrap();
            let findings = findings_for(&src);
            let thresholds = Thresholds::default();
            for f in findings {
                assert!(!f.votes.is_empty());
                assert!(f.votes.len() >= thresholds.for_class(f.class), "{}", path.display());
                assert_eq!(f.fixable, f.unfixable_reason.is_none(), "{}", path.display());
            }
        }
    }
}

//! Vulnerability detection: three in-house strategies of deliberately
//! different precision per class, majority-voted into findings, then
//! post-processed into fixable/unfixable.

mod input_validation;
mod locked_ether;
mod reentrancy;
mod unhandled_exception;

pub use input_validation::detect_missing_input_validation;
pub use locked_ether::detect_locked_ether;
pub use reentrancy::detect_reentrancy;
pub use unhandled_exception::detect_unhandled_exception;

use crate::analysis::Analyses;
use crate::frontend::ast::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum VulnClass {
    Reentrancy,
    MissingInputValidation,
    LockedEther,
    UnhandledException,
}

impl VulnClass {
    pub fn name(&self) -> &'static str {
        match self {
            VulnClass::Reentrancy => "Reentrancy",
            VulnClass::MissingInputValidation => "MissingInputValidation",
            VulnClass::LockedEther => "LockedEther",
            VulnClass::UnhandledException => "UnhandledException",
        }
    }

    /// Fix-pattern granularity.
    pub fn scope(&self) -> FindingScope {
        match self {
            VulnClass::UnhandledException => FindingScope::Statement,
            VulnClass::Reentrancy | VulnClass::MissingInputValidation => FindingScope::Function,
            VulnClass::LockedEther => FindingScope::Contract,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FindingScope {
    Statement,
    Function,
    Contract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum DetectorName {
    Syntactic,
    Dataflow,
    Semantic,
}

impl DetectorName {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorName::Syntactic => "syntactic",
            DetectorName::Dataflow => "dataflow",
            DetectorName::Semantic => "semantic",
        }
    }
}

/// Where a finding lives, with enough context to survive re-printing: spans
/// shift across patches, so identity is (class, contract, function, ordinal).
#[derive(Debug, Clone, Serialize)]
pub struct Site {
    pub node: NodeId,
    /// Enclosing statement for expression-level sites.
    pub statement: Option<NodeId>,
    pub span: Span,
    pub line: usize,
    pub contract: String,
    pub contract_id: NodeId,
    pub function: Option<String>,
    pub function_id: Option<NodeId>,
    /// Index of the call/parameter within its function (0 for contracts).
    pub ordinal: usize,
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct DetectorVote {
    pub detector: DetectorName,
    pub class: VulnClass,
    pub site: Site,
    /// Confidence note, e.g. unresolvable receivers classified externally.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnfixableReason {
    ExternalCallControlsWrite,
    TimestampDependentWrite,
    NonAddressParameter,
    LibraryContract,
    ReturnValueHandled,
}

impl UnfixableReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnfixableReason::ExternalCallControlsWrite => "external-call-controls-write",
            UnfixableReason::TimestampDependentWrite => "timestamp-dependent-write",
            UnfixableReason::NonAddressParameter => "non-address-parameter",
            UnfixableReason::LibraryContract => "library-contract",
            UnfixableReason::ReturnValueHandled => "return-value-handled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Finding {
    pub class: VulnClass,
    pub site: Site,
    pub scope: FindingScope,
    pub votes: BTreeSet<DetectorName>,
    pub fixable: bool,
    pub unfixable_reason: Option<UnfixableReason>,
    pub notes: Vec<String>,
}

impl Finding {
    /// Identity stable across canonical re-printing and position shifts.
    pub fn identity(&self) -> (VulnClass, String, String, usize) {
        (
            self.class,
            self.site.contract.clone(),
            self.site.function.clone().unwrap_or_default(),
            self.site.ordinal,
        )
    }
}

/// Per-class vote thresholds. The default mirrors majority voting with a
/// single-tool exception for missing input validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Thresholds {
    pub reentrancy: usize,
    pub missing_input_validation: usize,
    pub locked_ether: usize,
    pub unhandled_exception: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            reentrancy: 2,
            missing_input_validation: 1,
            locked_ether: 2,
            unhandled_exception: 2,
        }
    }
}

impl Thresholds {
    pub fn for_class(&self, class: VulnClass) -> usize {
        match class {
            VulnClass::Reentrancy => self.reentrancy,
            VulnClass::MissingInputValidation => self.missing_input_validation,
            VulnClass::LockedEther => self.locked_ether,
            VulnClass::UnhandledException => self.unhandled_exception,
        }
    }
}

/// Group votes by (class, site) and emit findings that meet their class
/// threshold, ordered by (span, class) for determinism.
pub fn ensemble(votes: Vec<DetectorVote>, thresholds: &Thresholds) -> Vec<Finding> {
    let mut groups: BTreeMap<(VulnClass, NodeId), (Site, BTreeSet<DetectorName>, Vec<String>)> =
        BTreeMap::new();
    for vote in votes {
        let entry = groups
            .entry((vote.class, vote.site.node))
            .or_insert_with(|| (vote.site.clone(), BTreeSet::new(), Vec::new()));
        entry.1.insert(vote.detector);
        if let Some(note) = vote.note {
            if !entry.2.contains(&note) {
                entry.2.push(note);
            }
        }
    }

    let mut findings: Vec<Finding> = groups
        .into_iter()
        .filter(|((class, _), (_, voters, _))| voters.len() >= thresholds.for_class(*class))
        .map(|((class, _), (site, votes, notes))| Finding {
            class,
            scope: class.scope(),
            site,
            votes,
            fixable: true,
            unfixable_reason: None,
            notes,
        })
        .collect();
    findings.sort_by(|a, b| {
        (a.site.span.start(), a.class, a.site.node).cmp(&(b.site.span.start(), b.class, b.site.node))
    });
    findings
}

/// Run all four detectors and the ensemble.
pub fn detect(analyses: &Analyses, src: &str, thresholds: &Thresholds) -> Vec<Finding> {
    let mut votes = Vec::new();
    votes.extend(detect_unhandled_exception(analyses, src));
    votes.extend(detect_reentrancy(analyses, src));
    votes.extend(detect_missing_input_validation(analyses, src));
    votes.extend(detect_locked_ether(analyses, src));
    ensemble(votes, thresholds)
}

/// Detection plus fixability annotation.
pub fn detect_and_filter(analyses: &Analyses, src: &str, thresholds: &Thresholds) -> Vec<Finding> {
    let findings = detect(analyses, src, thresholds);
    post_process(findings, analyses)
}

/// Annotate fixability per class using AST context and the intra-procedural
/// analyses; every unfixable finding carries exactly one reason.
pub fn post_process(mut findings: Vec<Finding>, analyses: &Analyses) -> Vec<Finding> {
    for finding in &mut findings {
        let reason = match finding.class {
            VulnClass::Reentrancy => reentrancy::unfixable_reason(finding, analyses),
            VulnClass::MissingInputValidation => input_validation::unfixable_reason(finding, analyses),
            VulnClass::LockedEther => locked_ether::unfixable_reason(finding, analyses),
            VulnClass::UnhandledException => unhandled_exception::unfixable_reason(finding, analyses),
        };
        if let Some(reason) = reason {
            finding.fixable = false;
            finding.unfixable_reason = Some(reason);
        }
    }
    findings
}

// -- shared helpers ---------------------------------------------------------

pub(crate) fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes().iter().take(offset.min(src.len())).filter(|b| **b == b'\n').count() + 1
}

/// Lock-guard recognition: a function whose body opens with
/// `require(!flag); flag = true;` on a bool state variable is treated as
/// reentrancy-protected, mirroring how verification accepts the lock pattern.
pub(crate) fn lock_guard_var(
    function: &FunctionDef,
    merged: &crate::analysis::MergedContract,
) -> Option<NodeId> {
    let body = function.body.as_ref()?;
    let mut stmts = body.statements.iter();
    let first = stmts.next()?;
    let second = stmts.next()?;

    // require(!flag);
    let Statement::Expr(first) = first else { return None };
    let Expression::Call(call) = &first.expr else { return None };
    let Expression::Identifier(callee) = &call.callee else { return None };
    if callee.name != "require" || call.args.len() != 1 {
        return None;
    }
    let Expression::Unary(not) = &call.args[0] else { return None };
    if not.op != UnaryOp::Not {
        return None;
    }
    let Expression::Identifier(flag) = &not.operand else { return None };

    // flag = true;
    let Statement::Expr(second) = second else { return None };
    let Expression::Assign(assign) = &second.expr else { return None };
    let Expression::Identifier(target) = &assign.target else { return None };
    if target.name != flag.name {
        return None;
    }
    let Expression::Literal(value) = &assign.value else { return None };
    if value.text != "true" {
        return None;
    }

    merged
        .state_vars
        .iter()
        .find(|v| v.name.as_deref() == Some(&flag.name) && v.ty == TypeName::Bool)
        .map(|v| v.id)
}

/// Map each statement to its nearest enclosing if/while condition statement.
pub(crate) fn enclosing_conditions(function: &FunctionDef) -> BTreeMap<NodeId, NodeId> {
    let mut map = BTreeMap::new();
    if let Some(body) = &function.body {
        for s in &body.statements {
            walk(s, None, &mut map);
        }
    }
    return map;

    fn walk(stmt: &Statement, current: Option<NodeId>, map: &mut BTreeMap<NodeId, NodeId>) {
        if let Some(cond) = current {
            map.insert(stmt.id(), cond);
        }
        match stmt {
            Statement::Block(b) => {
                for s in &b.statements {
                    walk(s, current, map);
                }
            }
            Statement::If(i) => {
                walk(&i.then_branch, Some(i.id), map);
                if let Some(e) = &i.else_branch {
                    walk(e, Some(i.id), map);
                }
            }
            Statement::While(w) => walk(&w.body, Some(w.id), map),
            Statement::For(f) => {
                if let Some(init) = &f.init {
                    walk(init, current, map);
                }
                walk(&f.body, Some(f.id), map);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::frontend::parse;

    #[test]
    fn ensemble_respects_class_thresholds() {
        let src = "contract A { function f() public {} }";
        let unit = parse(src, "t").unwrap();
        let analyses = analyze(&unit).unwrap();
        let site = Site {
            node: NodeId(7),
            statement: None,
            span: Span::source(0, 1),
            line: 1,
            contract: "A".into(),
            contract_id: unit.contracts[0].id,
            function: Some("f".into()),
            function_id: None,
            ordinal: 0,
            description: "test".into(),
        };
        let vote = |detector, class| DetectorVote { detector, class, site: site.clone(), note: None };
        let thresholds = Thresholds::default();
        let _ = &analyses;

        // one vote below threshold: nothing
        let out = ensemble(vec![vote(DetectorName::Syntactic, VulnClass::Reentrancy)], &thresholds);
        assert!(out.is_empty());

        // two distinct detectors: finding with votes recorded
        let out = ensemble(
            vec![
                vote(DetectorName::Dataflow, VulnClass::Reentrancy),
                vote(DetectorName::Semantic, VulnClass::Reentrancy),
            ],
            &thresholds,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].votes.len(), 2);

        // missing input validation needs only one
        let out = ensemble(
            vec![vote(DetectorName::Dataflow, VulnClass::MissingInputValidation)],
            &thresholds,
        );
        assert_eq!(out.len(), 1);

        // duplicate votes from one detector still count once
        let out = ensemble(
            vec![
                vote(DetectorName::Dataflow, VulnClass::UnhandledException),
                vote(DetectorName::Dataflow, VulnClass::UnhandledException),
            ],
            &thresholds,
        );
        assert!(out.is_empty());
    }

    #[test]
    fn lock_guard_is_recognized() {
        let src = r#"
contract A {
    bool private locked;
    uint256 public v;

    function f() public {
        require(!locked);
        locked = true;
        v = 1;
        locked = false;
    }

    function g() public {
        v = 2;
    }
}
"#;
        let unit = parse(src, "t").unwrap();
        let merged = crate::analysis::build_merged(&unit);
        let f = merged[0].functions.iter().find(|f| f.name == "f").unwrap();
        let g = merged[0].functions.iter().find(|f| f.name == "g").unwrap();
        assert!(lock_guard_var(f, &merged[0]).is_some());
        assert!(lock_guard_var(g, &merged[0]).is_none());
    }
}

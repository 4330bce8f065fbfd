//! Per-function control flow graphs, one statement per block.
//!
//! Modifier code wraps the body: for applied modifiers `m1, m2` the block
//! order is m1-prefix, m2-prefix, body, m2-suffix, m1-suffix, where the
//! placeholder `_` splits each modifier body. A `return` in the body jumps to
//! the first pending modifier suffix rather than straight to exit.

use crate::frontend::ast::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{AnalysisError, MergedContract};

pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Seq,
    True,
    False,
    LoopBack,
}

impl EdgeKind {
    pub fn label(&self) -> &'static str {
        match self {
            EdgeKind::Seq => "seq",
            EdgeKind::True => "true",
            EdgeKind::False => "false",
            EdgeKind::LoopBack => "loop-back",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOrigin {
    Entry,
    Exit,
    Body,
    Modifier { modifier: NodeId },
}

#[derive(Debug, Clone)]
pub struct CfgBlock {
    pub id: BlockId,
    /// Statement owning this block; `None` for the virtual entry/exit.
    pub point: Option<NodeId>,
    pub origin: BlockOrigin,
    /// Index into [`Cfg::bindings`] for modifier-origin blocks.
    pub binding: Option<usize>,
}

/// Modifier parameter bindings for one invocation: parameter name to the
/// argument expression written at the call site.
#[derive(Debug, Clone)]
pub struct BindingEnv {
    pub modifier: NodeId,
    pub params: HashMap<String, Expression>,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub function: NodeId,
    pub blocks: Vec<CfgBlock>,
    pub edges: Vec<(BlockId, BlockId, EdgeKind)>,
    pub entry: BlockId,
    pub exit: BlockId,
    pub bindings: Vec<BindingEnv>,
    point_block: BTreeMap<NodeId, BlockId>,
}

impl Cfg {
    pub fn block_of(&self, point: NodeId) -> Option<BlockId> {
        self.point_block.get(&point).copied()
    }

    /// Statement points in block-creation order, which follows program order
    /// for straight-line code.
    pub fn points_in_order(&self) -> Vec<NodeId> {
        self.blocks.iter().filter_map(|b| b.point).collect()
    }

    pub fn successors(&self, block: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |(f, _, _)| *f == block).map(|(_, t, _)| *t)
    }

    /// True when a path of at least one edge leads from `from` to `to`.
    pub fn reaches(&self, from: BlockId, to: BlockId) -> bool {
        let mut seen = vec![false; self.blocks.len()];
        let mut queue: VecDeque<BlockId> = self.successors(from).collect();
        while let Some(b) = queue.pop_front() {
            if b == to {
                return true;
            }
            if std::mem::replace(&mut seen[b], true) {
                continue;
            }
            queue.extend(self.successors(b));
        }
        false
    }

    /// Points reachable from the given point (exclusive).
    pub fn points_reachable_from(&self, point: NodeId) -> Vec<NodeId> {
        let Some(start) = self.block_of(point) else { return Vec::new() };
        let mut seen = vec![false; self.blocks.len()];
        let mut out = Vec::new();
        let mut queue: VecDeque<BlockId> = self.successors(start).collect();
        while let Some(b) = queue.pop_front() {
            if std::mem::replace(&mut seen[b], true) {
                continue;
            }
            if let Some(p) = self.blocks[b].point {
                if b != start {
                    out.push(p);
                }
            }
            queue.extend(self.successors(b));
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Build the modifier-aware CFG for `function` within its merged contract.
pub fn build_cfg(
    function: &FunctionDef,
    merged: &MergedContract,
) -> Result<Cfg, AnalysisError> {
    let body = function.body.as_ref().ok_or_else(|| AnalysisError::NoBody {
        function: function.display_name().to_string(),
    })?;

    // resolve applied modifiers and split each at its placeholder
    let mut segments: Vec<Segment> = Vec::new();
    let mut suffixes: Vec<Segment> = Vec::new();
    let mut bindings: Vec<BindingEnv> = Vec::new();

    for invocation in &function.modifiers_applied {
        let def = merged
            .modifiers
            .iter()
            .find(|m| m.name == invocation.name)
            .ok_or_else(|| AnalysisError::MissingModifier {
                function: function.display_name().to_string(),
                modifier: invocation.name.clone(),
            })?;
        let mut params = HashMap::new();
        for (decl, arg) in def.params.iter().zip(&invocation.args) {
            if let Some(name) = &decl.name {
                params.insert(name.clone(), arg.clone());
            }
        }
        let binding = bindings.len();
        bindings.push(BindingEnv { modifier: def.id, params });

        let split = def
            .body
            .statements
            .iter()
            .position(|s| matches!(s, Statement::Placeholder(_)))
            .unwrap_or(def.body.statements.len());
        let prefix: Vec<&Statement> = def.body.statements[..split].iter().collect();
        let suffix: Vec<&Statement> =
            def.body.statements.get(split + 1..).map(|s| s.iter().collect()).unwrap_or_default();
        segments.push(Segment {
            stmts: prefix,
            origin: BlockOrigin::Modifier { modifier: def.id },
            binding: Some(binding),
        });
        // suffixes run in reverse application order (innermost first)
        suffixes.insert(
            0,
            Segment {
                stmts: suffix,
                origin: BlockOrigin::Modifier { modifier: def.id },
                binding: Some(binding),
            },
        );
    }
    segments.push(Segment {
        stmts: body.statements.iter().collect(),
        origin: BlockOrigin::Body,
        binding: None,
    });
    segments.extend(suffixes);

    let mut builder = Builder {
        cfg: Cfg {
            function: function.id,
            blocks: Vec::new(),
            edges: Vec::new(),
            entry: 0,
            exit: 0,
            bindings,
            point_block: BTreeMap::new(),
        },
        origin: BlockOrigin::Body,
        binding: None,
    };
    let entry = builder.add_virtual(BlockOrigin::Entry);
    builder.cfg.entry = entry;

    let mut dangling: Vec<(BlockId, EdgeKind)> = vec![(entry, EdgeKind::Seq)];
    let mut pending_returns: Vec<Vec<(BlockId, EdgeKind)>> = Vec::new();

    for (i, segment) in segments.iter().enumerate() {
        builder.origin = segment.origin;
        builder.binding = segment.binding;
        let is_suffix_start = i > 0 && segment.origin != BlockOrigin::Body && !segment.stmts.is_empty();
        let mut returns = Vec::new();
        let outs = builder.lower(&segment.stmts, dangling, &mut returns);
        if is_suffix_start {
            // earlier `return`s resume at the first suffix that produced code
            if let Some(first) = builder.first_block_of_segment(&segment.stmts) {
                for ret in pending_returns.drain(..).flatten() {
                    builder.cfg.edges.push((ret.0, first, ret.1));
                }
            }
        }
        pending_returns.push(returns);
        dangling = outs;
    }

    let exit = builder.add_virtual(BlockOrigin::Exit);
    builder.cfg.exit = exit;
    for (from, kind) in dangling {
        builder.cfg.edges.push((from, exit, kind));
    }
    for ret in pending_returns.into_iter().flatten() {
        builder.cfg.edges.push((ret.0, exit, ret.1));
    }

    Ok(builder.cfg)
}

struct Segment<'a> {
    stmts: Vec<&'a Statement>,
    origin: BlockOrigin,
    binding: Option<usize>,
}

struct Builder {
    cfg: Cfg,
    origin: BlockOrigin,
    binding: Option<usize>,
}

impl Builder {
    fn add_virtual(&mut self, origin: BlockOrigin) -> BlockId {
        let id = self.cfg.blocks.len();
        self.cfg.blocks.push(CfgBlock { id, point: None, origin, binding: None });
        id
    }

    fn add_block(&mut self, point: NodeId) -> BlockId {
        let id = self.cfg.blocks.len();
        self.cfg.blocks.push(CfgBlock {
            id,
            point: Some(point),
            origin: self.origin,
            binding: self.binding,
        });
        self.cfg.point_block.insert(point, id);
        id
    }

    fn first_block_of_segment(&self, stmts: &[&Statement]) -> Option<BlockId> {
        stmts.first().and_then(|s| self.cfg.block_of(first_point(s)))
    }

    fn conn(&mut self, preds: &[(BlockId, EdgeKind)], to: BlockId) {
        for (from, kind) in preds {
            self.cfg.edges.push((*from, to, *kind));
        }
    }

    /// Lower a statement list; returns the dangling exits that continue to
    /// whatever follows. `returns` collects edges produced by return
    /// statements for segment-level patching.
    fn lower(
        &mut self,
        stmts: &[&Statement],
        mut preds: Vec<(BlockId, EdgeKind)>,
        returns: &mut Vec<(BlockId, EdgeKind)>,
    ) -> Vec<(BlockId, EdgeKind)> {
        for stmt in stmts {
            preds = self.lower_stmt(stmt, preds, returns);
        }
        preds
    }

    fn lower_stmt(
        &mut self,
        stmt: &Statement,
        preds: Vec<(BlockId, EdgeKind)>,
        returns: &mut Vec<(BlockId, EdgeKind)>,
    ) -> Vec<(BlockId, EdgeKind)> {
        match stmt {
            Statement::Block(b) => {
                let inner: Vec<&Statement> = b.statements.iter().collect();
                self.lower(&inner, preds, returns)
            }
            Statement::Placeholder(_) => preds,
            Statement::Return(r) => {
                let block = self.add_block(r.id);
                self.conn(&preds, block);
                returns.push((block, EdgeKind::Seq));
                Vec::new()
            }
            Statement::If(i) => {
                let cond = self.add_block(i.id);
                self.conn(&preds, cond);
                let then_out = self.lower(
                    &[&*i.then_branch],
                    vec![(cond, EdgeKind::True)],
                    returns,
                );
                let mut outs = then_out;
                match &i.else_branch {
                    Some(else_branch) => {
                        let else_out = self.lower(
                            &[&**else_branch],
                            vec![(cond, EdgeKind::False)],
                            returns,
                        );
                        outs.extend(else_out);
                    }
                    None => outs.push((cond, EdgeKind::False)),
                }
                outs
            }
            Statement::While(w) => {
                let cond = self.add_block(w.id);
                self.conn(&preds, cond);
                let body_out = self.lower(&[&*w.body], vec![(cond, EdgeKind::True)], returns);
                for (from, _) in body_out {
                    self.cfg.edges.push((from, cond, EdgeKind::LoopBack));
                }
                vec![(cond, EdgeKind::False)]
            }
            Statement::For(f) => {
                let mut preds = preds;
                if let Some(init) = &f.init {
                    preds = self.lower(&[&**init], preds, returns);
                }
                // the for statement's block carries its condition and update
                let cond = self.add_block(f.id);
                self.conn(&preds, cond);
                let body_out = self.lower(&[&*f.body], vec![(cond, EdgeKind::True)], returns);
                for (from, _) in body_out {
                    self.cfg.edges.push((from, cond, EdgeKind::LoopBack));
                }
                vec![(cond, EdgeKind::False)]
            }
            simple => {
                let block = self.add_block(simple.id());
                self.conn(&preds, block);
                vec![(block, EdgeKind::Seq)]
            }
        }
    }
}

fn first_point(stmt: &Statement) -> NodeId {
    match stmt {
        Statement::Block(b) => b.statements.first().map(first_point).unwrap_or(b.id),
        Statement::For(f) => f.init.as_ref().map(|i| first_point(i)).unwrap_or(f.id),
        other => other.id(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_merged;
    use crate::frontend::parse;

    fn cfg_for(src: &str, fname: &str) -> (SourceUnit, Cfg) {
        let unit = parse(src, "t").unwrap();
        let merged = build_merged(&unit);
        let mc = &merged[0];
        let f = mc.functions.iter().find(|f| f.name == fname).unwrap();
        let cfg = build_cfg(f, mc).unwrap();
        (unit, cfg)
    }

    #[test]
    fn modifier_prefix_body_suffix_order() {
        let src = r#"
contract A {
    uint256 public calls;
    bool public open;

    modifier m(uint256 c) {
        require(c > 0);
        _;
        calls += 1;
    }

    function f(uint256 x) public m(x) {
        open = true;
    }
}
"#;
        let (unit, cfg) = cfg_for(src, "f");
        let points = cfg.points_in_order();
        assert_eq!(points.len(), 3);
        let texts: Vec<String> = points
            .iter()
            .map(|p| {
                crate::frontend::print_statement(unit.statement_by_id(*p).unwrap()).unwrap()
            })
            .collect();
        assert!(texts[0].starts_with("require"), "{texts:?}");
        assert!(texts[1].starts_with("open"), "{texts:?}");
        assert!(texts[2].starts_with("calls"), "{texts:?}");
        // prefix block carries the parameter binding
        let first = &cfg.blocks[cfg.block_of(points[0]).unwrap()];
        let env = &cfg.bindings[first.binding.unwrap()];
        assert!(env.params.contains_key("c"));
    }

    #[test]
    fn branch_edges_join_after_if_else() {
        let src = r#"
contract A {
    uint256 public v;

    function f(bool x) public {
        if (x) {
            v = 1;
        } else {
            v = 2;
        }
        v = 3;
    }
}
"#;
        let (_unit, cfg) = cfg_for(src, "f");
        let points = cfg.points_in_order();
        assert_eq!(points.len(), 4); // if, a, b, c
        let if_block = cfg.block_of(points[0]).unwrap();
        let a = cfg.block_of(points[1]).unwrap();
        let b = cfg.block_of(points[2]).unwrap();
        let c = cfg.block_of(points[3]).unwrap();
        assert!(cfg.edges.contains(&(if_block, a, EdgeKind::True)));
        assert!(cfg.edges.contains(&(if_block, b, EdgeKind::False)));
        assert!(cfg.edges.contains(&(a, c, EdgeKind::Seq)));
        assert!(cfg.edges.contains(&(b, c, EdgeKind::Seq)));
    }

    #[test]
    fn while_loop_has_back_edge() {
        let src = r#"
contract A {
    uint256 public v;

    function f(uint256 n) public {
        while (v < n) {
            v += 1;
        }
        v = 0;
    }
}
"#;
        let (_unit, cfg) = cfg_for(src, "f");
        let points = cfg.points_in_order();
        let cond = cfg.block_of(points[0]).unwrap();
        let body = cfg.block_of(points[1]).unwrap();
        assert!(cfg.edges.contains(&(body, cond, EdgeKind::LoopBack)));
        assert!(cfg.reaches(body, body));
    }

    #[test]
    fn return_jumps_to_modifier_suffix() {
        let src = r#"
contract A {
    uint256 public calls;

    modifier counted() {
        _;
        calls += 1;
    }

    function f(bool x) public counted returns (uint256 r) {
        if (x) {
            return 1;
        }
        return 2;
    }
}
"#;
        let (unit, cfg) = cfg_for(src, "f");
        let suffix_point = cfg
            .points_in_order()
            .into_iter()
            .find(|p| {
                crate::frontend::print_statement(unit.statement_by_id(*p).unwrap())
                    .unwrap()
                    .starts_with("calls")
            })
            .unwrap();
        let suffix_block = cfg.block_of(suffix_point).unwrap();
        let return_blocks: Vec<_> = cfg
            .blocks
            .iter()
            .filter(|b| {
                b.point.map_or(false, |p| {
                    matches!(unit.statement_by_id(p), Some(Statement::Return(_)))
                })
            })
            .map(|b| b.id)
            .collect();
        assert_eq!(return_blocks.len(), 2);
        for rb in return_blocks {
            assert!(
                cfg.edges.iter().any(|(f, t, _)| *f == rb && *t == suffix_block),
                "return does not resume at modifier suffix"
            );
        }
    }

    #[test]
    fn missing_modifier_is_an_error() {
        let src = "contract A { function f() public ghost {} }";
        let unit = parse(src, "t").unwrap();
        let merged = build_merged(&unit);
        let err = build_cfg(merged[0].functions[0], &merged[0]).unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn statement_partition_covers_body_and_modifiers() {
        let src = std::fs::read_to_string(
            std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("../../corpus/other/modifier_guard.sol"),
        )
        .unwrap();
        let unit = parse(&src, "t").unwrap();
        let merged = build_merged(&unit);
        let mc = &merged[0];
        for f in &mc.functions {
            if f.body.is_none() {
                continue;
            }
            let cfg = build_cfg(f, mc).unwrap();
            let mut expected = count_statements(&f.body.as_ref().unwrap().statements);
            for inv in &f.modifiers_applied {
                let m = mc.modifiers.iter().find(|m| m.name == inv.name).unwrap();
                expected += count_statements(&m.body.statements);
            }
            let points = cfg.points_in_order();
            let mut dedup = points.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(points.len(), dedup.len(), "duplicate blocks in {}", f.name);
            assert_eq!(points.len(), expected, "partition mismatch in {}", f.name);
        }
    }

    fn count_statements(stmts: &[Statement]) -> usize {
        let mut n = 0;
        for s in stmts {
            match s {
                Statement::Block(b) => n += count_statements(&b.statements),
                Statement::Placeholder(_) => {}
                Statement::If(i) => {
                    n += 1;
                    n += count_statements(std::slice::from_ref(&i.then_branch));
                    if let Some(e) = &i.else_branch {
                        n += count_statements(std::slice::from_ref(e));
                    }
                }
                Statement::While(w) => {
                    n += 1 + count_statements(std::slice::from_ref(&w.body));
                }
                Statement::For(f) => {
                    n += 1;
                    if let Some(init) = &f.init {
                        n += count_statements(std::slice::from_ref(init));
                    }
                    n += count_statements(std::slice::from_ref(&f.body));
                }
                _ => n += 1,
            }
        }
        n
    }
}

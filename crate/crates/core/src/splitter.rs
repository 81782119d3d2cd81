//! Prefix/suffix split plans and block partitioning.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::store::{Database, NodeTable};
use crate::xpath::{evaluate, Axis, KindTest, NodeTest, Origin, QueryAst, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MergeRule {
    ConcatInOrder,
    DedupSort,
}

impl fmt::Display for MergeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeRule::ConcatInOrder => "concat_in_order",
            MergeRule::DedupSort => "dedup_sort",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    StepBoundary,
    PredicatePeel,
    DescendantPushdown,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::StepBoundary => "step_boundary",
            SplitKind::PredicatePeel => "predicate_peel",
            SplitKind::DescendantPushdown => "descendant_pushdown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    /// Absolute, or headed by an index lookup.
    pub prefix: QueryAst,
    /// Relative; evaluated with each partition as its context.
    pub suffix: QueryAst,
    /// `DedupSort` until [`choose_merge`] has seen a prefix result.
    pub merge: MergeRule,
    pub kind: SplitKind,
}

impl SplitPlan {
    pub fn new(prefix: QueryAst, suffix: QueryAst, kind: SplitKind) -> Self {
        SplitPlan { prefix, suffix, merge: MergeRule::DedupSort, kind }
    }

    /// Builds a plan from prefix and suffix text.
    pub fn parse(prefix: &str, suffix: &str, kind: SplitKind) -> Result<Self> {
        let prefix = crate::xpath::parse_xpath(prefix)?;
        let suffix = crate::xpath::parse_xpath(suffix)?;
        if !prefix.is_absolute() {
            return Err(Error::Argument(format!("prefix `{prefix}` is not absolute")));
        }
        if suffix.is_absolute() {
            return Err(Error::Argument(format!("suffix `{suffix}` is not relative")));
        }
        Ok(SplitPlan::new(prefix, suffix, kind))
    }
}

impl fmt::Display for SplitPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "prefix = {}, suffix = {}", self.prefix, self.suffix)
    }
}

/// Name tests on the attribute axis select attributes.
fn element_only(step: &Step) -> bool {
    step.axis != Axis::Attribute && step.test.is_element_only()
}

/// Every legal split point of `ast`. Relative queries have none.
pub fn enumerate_splits(ast: &QueryAst) -> Vec<SplitPlan> {
    if !ast.is_absolute() {
        return Vec::new();
    }
    let n = ast.steps.len();
    let head = |k: usize| QueryAst { origin: ast.origin.clone(), steps: ast.steps[..k].to_vec() };
    let tail = |k: usize| ast.steps[k..].to_vec();
    let mut plans = Vec::new();

    // an index head is already a node set, so the split may sit right after it
    let first = if matches!(ast.origin, Origin::Index(_)) { 0 } else { 1 };
    for k in first..n {
        plans.push(SplitPlan::new(head(k), QueryAst::relative(tail(k)), SplitKind::StepBoundary));
    }

    for k in 1..=n {
        let step = &ast.steps[k - 1];
        if step.predicates.is_empty() || step.is_positional() {
            continue;
        }
        let mut prefix = head(k);
        prefix.steps[k - 1].predicates.clear();
        let self_test = if element_only(step) { NodeTest::Wildcard } else { NodeTest::Kind(KindTest::Node) };
        let mut suffix = vec![Step::new(Axis::SelfAxis, self_test).with_predicates(step.predicates.clone())];
        suffix.extend(tail(k));
        plans.push(SplitPlan::new(prefix, QueryAst::relative(suffix), SplitKind::PredicatePeel));
    }

    for k in 1..=n {
        let step = &ast.steps[k - 1];
        if step.axis != Axis::Descendant || !element_only(step) || step.is_positional() {
            continue;
        }
        let mut prefix = head(k - 1);
        prefix.steps.push(Step::new(Axis::Child, NodeTest::Wildcard));
        let mut suffix = vec![Step { axis: Axis::DescendantOrSelf, ..step.clone() }];
        suffix.extend(tail(k));
        plans.push(SplitPlan::new(prefix, QueryAst::relative(suffix), SplitKind::DescendantPushdown));
    }
    plans
}

/// Splits `seq` into `p` contiguous blocks whose sizes differ by at most one,
/// the larger blocks first.
pub fn block_partition(seq: &[usize], p: usize) -> Result<Vec<Vec<usize>>> {
    if p == 0 {
        return Err(Error::Argument("partition count must be at least 1".into()));
    }
    let (base, extra) = (seq.len() / p, seq.len() % p);
    let mut out = Vec::with_capacity(p);
    let mut start = 0;
    for i in 0..p {
        let len = base + usize::from(i < extra);
        out.push(seq[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub partitions: Vec<Vec<usize>>,
    pub db_name: String,
}

impl PartitionSet {
    pub fn new(seq: &[usize], p: usize, db_name: &str) -> Result<Self> {
        Ok(PartitionSet { partitions: block_partition(seq, p)?, db_name: db_name.to_string() })
    }

    pub fn p(&self) -> usize {
        self.partitions.len()
    }
}

/// True when no node of the ascending sequence lies inside another's subtree.
pub fn subtree_disjoint(table: &NodeTable, prefix: &[usize]) -> bool {
    prefix.windows(2).all(|w| w[0] + table.size(w[0]) <= w[1])
}

/// Concatenation is only order-preserving and duplicate-free when partition
/// results cannot overlap: the prefix nodes must own disjoint subtrees and
/// the suffix must stay inside them.
pub fn choose_merge(plan: &SplitPlan, table: &NodeTable, prefix_result: &[usize]) -> MergeRule {
    let downward = plan.suffix.steps.iter().all(|s| s.axis.is_downward());
    if downward && subtree_disjoint(table, prefix_result) {
        MergeRule::ConcatInOrder
    } else {
        MergeRule::DedupSort
    }
}

/// Merges per-partition ascending PRE lists.
pub fn merge_pres(parts: Vec<Vec<usize>>, rule: MergeRule) -> Vec<usize> {
    let mut out: Vec<usize> = parts.into_iter().flatten().collect();
    if rule == MergeRule::DedupSort {
        out.sort_unstable();
        out.dedup();
    }
    out
}

/// Evaluates a plan in-process: prefix once, suffix per partition, merge.
/// The reference the networked runs are compared against.
pub fn run_plan_local(plan: &SplitPlan, db: &Database, p: usize) -> Result<Vec<usize>> {
    let prefix = evaluate(&plan.prefix, db, &[0])?;
    let merge = choose_merge(plan, &db.table, &prefix);
    let mut parts = Vec::with_capacity(p);
    for block in block_partition(&prefix, p)? {
        parts.push(if block.is_empty() { Vec::new() } else { evaluate(&plan.suffix, db, &block)? });
    }
    Ok(merge_pres(parts, merge))
}

/// Default split point: the deepest plan whose prefix yields at least `4·p`
/// nodes, ties toward the shorter prefix; when none does, the plan with the
/// largest prefix result. Returns the index into `plans` and the count.
pub fn choose_split(plans: &[SplitPlan], db: &Database, p: usize) -> Result<Option<(usize, usize)>> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<usize> = (0..plans.len()).collect();
    // cheapest first: shorter prefixes
    order.sort_by_key(|&i| plans[i].prefix.steps.len());
    let mut scored = Vec::with_capacity(plans.len());
    for i in order {
        let text = plans[i].prefix.to_string();
        let count = match counts.get(&text) {
            Some(&c) => c,
            None => {
                let c = evaluate(&plans[i].prefix, db, &[0])?.len();
                counts.insert(text.clone(), c);
                c
            }
        };
        scored.push((i, count, plans[i].prefix.steps.len(), text.len()));
    }
    let threshold = 4 * p.max(1);
    let best = scored
        .iter()
        .filter(|s| s.1 >= threshold)
        .max_by(|a, b| a.2.cmp(&b.2).then(b.3.cmp(&a.3)).then(b.0.cmp(&a.0)))
        .or_else(|| scored.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.3.cmp(&a.3)).then(b.0.cmp(&a.0))));
    Ok(best.map(|s| (s.0, s.1)))
}

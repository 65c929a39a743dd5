//! Generic tree search parameterized by convex combinations of scoring rules.
//!
//! The loop is the multi-action form: each iteration picks the open leaf with
//! the best combined node score, fathoms it on the depth limit or on the
//! `fathom` hook, otherwise takes one action of every type and either fathoms
//! the node or appends its children. The single-action form is the `d = 1` case.
//!
//! Every hook except `fathom` receives a [`Path`] rather than the tree, so
//! path-wise evaluation is enforced by the type signatures.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dyadic::Combined;
use crate::error::{Error, Result};
use crate::scoring::ScoreRuleId;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Open,
    Fathomed,
    Expanded,
}

/// Which line of the loop closed a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FathomReason {
    DepthLimit,
    Check,
    ActionCheck,
    NoChildren,
}

/// Byte encoding used by [`canonical_hash`] and a readable form for dumps.
pub trait Canonical {
    fn write_canonical(&self, out: &mut Vec<u8>);
    fn describe(&self) -> String;
}

pub trait NodeData: Clone {
    fn lp_objective(&self) -> Option<f64> {
        None
    }
}

impl NodeData for () {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub objective: f64,
    pub solution: Vec<i64>,
}

impl Incumbent {
    pub fn point(&self) -> Vec<f64> {
        self.solution.iter().map(|&v| v as f64).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SearchNode<N, A> {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub data: N,
    pub status: NodeStatus,
    pub fathom_reason: Option<FathomReason>,
    /// One slot per action type, in type order; empty until actions are taken.
    pub actions_taken: Vec<Option<A>>,
    pub children: Vec<NodeId>,
    /// Incumbent as seen when the node was selected for processing.
    pub incumbent_at_selection: Option<Incumbent>,
    pub(crate) node_scores: (f64, f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub nodes_created: usize,
    pub nodes_fathomed: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SearchTree<N, A> {
    pub nodes: Vec<SearchNode<N, A>>,
    pub root: NodeId,
    pub incumbent: Option<Incumbent>,
    pub stats: TreeStats,
    /// Set when the node cap stopped the search early.
    pub truncated: bool,
    open: Vec<NodeId>,
}

/// Root-to-node path handed to path-wise hooks.
pub struct Path<'a, N, A> {
    nodes: Vec<&'a SearchNode<N, A>>,
}

impl<'a, N, A> Path<'a, N, A> {
    pub fn node(&self) -> &'a SearchNode<N, A> {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn root(&self) -> &'a SearchNode<N, A> {
        self.nodes[0]
    }

    pub fn nodes(&self) -> &[&'a SearchNode<N, A>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tunable configuration of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    /// One weight per action type.
    pub mu: Vec<f64>,
    pub lambda: f64,
    /// `(ascore_1, ascore_2)` per action type.
    pub action_rules: Vec<(ScoreRuleId, ScoreRuleId)>,
    pub node_rules: (ScoreRuleId, ScoreRuleId),
    pub depth_limit: usize,
}

impl ScoreParams {
    pub fn validate(&self, action_types: usize) -> Result<()> {
        if self.mu.len() != action_types || self.action_rules.len() != action_types {
            return Err(Error::Dimension(format!(
                "expected {action_types} action types, got {} weights and {} rule pairs",
                self.mu.len(),
                self.action_rules.len()
            )));
        }
        for &w in self.mu.iter().chain(std::iter::once(&self.lambda)) {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidInput(format!("parameter {w} outside [0,1]")));
            }
        }
        if self.depth_limit == 0 {
            return Err(Error::InvalidInput("depth limit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub node_cap: usize,
    /// Upper bound `b` on the size of each action set.
    pub max_actions: usize,
    /// Upper bound `k` on the number of children.
    pub max_children: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { node_cap: 1_000_000, max_actions: 100_000, max_children: 2 }
    }
}

pub trait SearchHooks {
    type Data: NodeData;
    type Action: Clone + Canonical;

    fn action_types(&self) -> usize;

    fn actions(&self, kind: usize, path: &Path<'_, Self::Data, Self::Action>) -> Result<Vec<Self::Action>>;

    fn action_score(
        &self,
        kind: usize,
        rule: &ScoreRuleId,
        path: &Path<'_, Self::Data, Self::Action>,
        action: &Self::Action,
    ) -> Result<f64>;

    fn node_score(
        &self,
        rule: &ScoreRuleId,
        path: &Path<'_, Self::Data, Self::Action>,
        params: &ScoreParams,
    ) -> Result<f64>;

    fn children(
        &self,
        path: &Path<'_, Self::Data, Self::Action>,
        actions: &[Option<Self::Action>],
    ) -> Result<Vec<Self::Data>>;

    /// Not path-wise: sees and may update the whole tree (incumbent).
    fn fathom(
        &self,
        tree: &mut SearchTree<Self::Data, Self::Action>,
        node: NodeId,
        actions: Option<&[Option<Self::Action>]>,
    ) -> Result<bool>;
}

impl<N: NodeData, A: Clone> SearchTree<N, A> {
    /// A tree holding a single open root.
    pub fn new(data: N) -> Self {
        let root = SearchNode {
            id: 0,
            parent: None,
            depth: 0,
            data,
            status: NodeStatus::Open,
            fathom_reason: None,
            actions_taken: Vec::new(),
            children: Vec::new(),
            incumbent_at_selection: None,
            node_scores: (0.0, 0.0),
        };
        SearchTree {
            nodes: vec![root],
            root: 0,
            incumbent: None,
            stats: TreeStats { nodes_created: 1, ..TreeStats::default() },
            truncated: false,
            open: vec![0],
        }
    }

    pub fn node(&self, id: NodeId) -> Result<&SearchNode<N, A>> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn open_leaves(&self) -> &[NodeId] {
        &self.open
    }

    pub fn path(&self, id: NodeId) -> Result<Path<'_, N, A>> {
        let ids = path_of(self, id)?;
        Ok(Path { nodes: ids.into_iter().map(|i| &self.nodes[i]).collect() })
    }

    /// A tree holding only the root-to-`id` path, renumbered from zero.
    pub fn path_only(&self, id: NodeId) -> Result<(SearchTree<N, A>, NodeId)> {
        let ids = path_of(self, id)?;
        let mut nodes = Vec::with_capacity(ids.len());
        for (pos, &i) in ids.iter().enumerate() {
            let mut n = self.nodes[i].clone();
            n.id = pos;
            n.parent = pos.checked_sub(1);
            n.children = if pos + 1 < ids.len() { vec![pos + 1] } else { Vec::new() };
            nodes.push(n);
        }
        let last = nodes.len() - 1;
        let open = if nodes[last].status == NodeStatus::Open { vec![last] } else { Vec::new() };
        let tree = SearchTree {
            stats: TreeStats { nodes_created: nodes.len(), ..TreeStats::default() },
            nodes,
            root: 0,
            incumbent: None,
            truncated: false,
            open,
        };
        Ok((tree, last))
    }

    fn close(&mut self, id: NodeId, status: NodeStatus, reason: Option<FathomReason>) {
        let node = &mut self.nodes[id];
        node.status = status;
        node.fathom_reason = reason;
        if status == NodeStatus::Fathomed {
            self.stats.nodes_fathomed += 1;
        }
        if let Some(pos) = self.open.iter().position(|&o| o == id) {
            self.open.remove(pos);
        }
    }
}

/// Node ids from the root to `id`, inclusive.
pub fn path_of<N, A>(tree: &SearchTree<N, A>, id: NodeId) -> Result<Vec<NodeId>> {
    let mut cur = tree.nodes.get(id).ok_or(Error::UnknownNode(id))?;
    let mut ids = vec![id];
    while let Some(p) = cur.parent {
        ids.push(p);
        cur = &tree.nodes[p];
    }
    ids.reverse();
    Ok(ids)
}

/// Open leaf with the largest combined node score; ties go to the smallest id.
/// Combined scores are compared exactly, without rounding.
pub fn select_leaf<N: NodeData, A: Clone>(tree: &SearchTree<N, A>, params: &ScoreParams) -> Result<NodeId> {
    let mut best: Option<(NodeId, Combined)> = None;
    for &id in &tree.open {
        let (s1, s2) = tree.nodes[id].node_scores;
        let score = Combined::new(s1, s2, params.lambda)?;
        // open is kept in increasing id order, so strict > keeps the smallest id
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((id, score));
        }
    }
    best.map(|(id, _)| id).ok_or(Error::NoOpenLeaf)
}

/// Action of type `kind` maximizing the exactly compared combined score at
/// `node`, ties to the earliest list position. `None` when the action set is empty.
pub fn select_action<H: SearchHooks>(
    hooks: &H,
    tree: &SearchTree<H::Data, H::Action>,
    node: NodeId,
    kind: usize,
    params: &ScoreParams,
    limits: &Limits,
) -> Result<Option<H::Action>> {
    let path = tree.path(node)?;
    let actions = hooks.actions(kind, &path)?;
    if actions.len() > limits.max_actions {
        return Err(Error::HookBudget(format!(
            "{} actions of type {kind} exceed the cap {}",
            actions.len(),
            limits.max_actions
        )));
    }
    let mu = params.mu[kind];
    let (r1, r2) = &params.action_rules[kind];
    let mut best: Option<(usize, Combined)> = None;
    for (pos, a) in actions.iter().enumerate() {
        let s1 = if mu != 0.0 { hooks.action_score(kind, r1, &path, a)? } else { 0.0 };
        let s2 = if mu != 1.0 { hooks.action_score(kind, r2, &path, a)? } else { 0.0 };
        let score = Combined::new(s1, s2, mu)?;
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((pos, score));
        }
    }
    Ok(best.map(|(pos, _)| actions[pos].clone()))
}

fn score_node<H: SearchHooks>(
    hooks: &H,
    tree: &mut SearchTree<H::Data, H::Action>,
    id: NodeId,
    params: &ScoreParams,
) -> Result<()> {
    let path = tree.path(id)?;
    let s1 = hooks.node_score(&params.node_rules.0, &path, params)?;
    let s2 = hooks.node_score(&params.node_rules.1, &path, params)?;
    tree.nodes[id].node_scores = (s1, s2);
    Ok(())
}

fn push_child<H: SearchHooks>(
    hooks: &H,
    tree: &mut SearchTree<H::Data, H::Action>,
    parent: NodeId,
    data: H::Data,
    params: &ScoreParams,
) -> Result<()> {
    let id = tree.nodes.len();
    tree.nodes.push(SearchNode {
        id,
        parent: Some(parent),
        depth: tree.nodes[parent].depth + 1,
        data,
        status: NodeStatus::Open,
        fathom_reason: None,
        actions_taken: Vec::new(),
        children: Vec::new(),
        incumbent_at_selection: None,
        node_scores: (0.0, 0.0),
    });
    tree.nodes[parent].children.push(id);
    tree.open.push(id);
    tree.stats.nodes_created += 1;
    score_node(hooks, tree, id, params)
}

fn search<H: SearchHooks>(
    root: H::Data,
    hooks: &H,
    params: &ScoreParams,
    limits: &Limits,
    suppressed: bool,
) -> Result<SearchTree<H::Data, H::Action>> {
    let d = hooks.action_types();
    params.validate(d)?;
    let mut tree = SearchTree::new(root);
    score_node(hooks, &mut tree, 0, params)?;

    while !tree.open.is_empty() {
        tree.stats.iterations += 1;
        let q = select_leaf(&tree, params)?;
        tree.nodes[q].incumbent_at_selection = tree.incumbent.clone();

        if tree.nodes[q].depth >= params.depth_limit {
            tree.close(q, NodeStatus::Fathomed, Some(FathomReason::DepthLimit));
            continue;
        }
        if !suppressed && hooks.fathom(&mut tree, q, None)? {
            tree.close(q, NodeStatus::Fathomed, Some(FathomReason::Check));
            continue;
        }

        let mut chosen = Vec::with_capacity(d);
        for kind in 0..d {
            chosen.push(select_action(hooks, &tree, q, kind, params, limits)?);
        }
        if !suppressed && hooks.fathom(&mut tree, q, Some(&chosen))? {
            tree.nodes[q].actions_taken = chosen;
            tree.close(q, NodeStatus::Fathomed, Some(FathomReason::ActionCheck));
            continue;
        }
        let kids = {
            let path = tree.path(q)?;
            hooks.children(&path, &chosen)?
        };
        tree.nodes[q].actions_taken = chosen;
        if kids.len() > limits.max_children {
            return Err(Error::HookBudget(format!("{} children exceed the cap {}", kids.len(), limits.max_children)));
        }
        if kids.is_empty() {
            tree.close(q, NodeStatus::Fathomed, Some(FathomReason::NoChildren));
            continue;
        }
        if tree.nodes.len() + kids.len() > limits.node_cap {
            tree.truncated = true;
            break;
        }
        for kid in kids {
            push_child(hooks, &mut tree, q, kid, params)?;
        }
        tree.close(q, NodeStatus::Expanded, None);
    }
    Ok(tree)
}

/// Runs the full search loop.
pub fn run<H: SearchHooks>(
    root: H::Data,
    hooks: &H,
    params: &ScoreParams,
    limits: &Limits,
) -> Result<SearchTree<H::Data, H::Action>> {
    search(root, hooks, params, limits, false)
}

/// The loop with both `fathom` checks suppressed: nodes close only on the
/// depth limit or when they produce no children.
pub fn run_suppressed<H: SearchHooks>(
    root: H::Data,
    hooks: &H,
    params: &ScoreParams,
    limits: &Limits,
) -> Result<SearchTree<H::Data, H::Action>> {
    search(root, hooks, params, limits, true)
}

fn write_node_bytes<N, A: Canonical>(node: &SearchNode<N, A>, out: &mut Vec<u8>) {
    out.push(match node.status {
        NodeStatus::Open => 0,
        NodeStatus::Fathomed => 1,
        NodeStatus::Expanded => 2,
    });
    out.extend_from_slice(&(node.actions_taken.len() as u32).to_le_bytes());
    for slot in &node.actions_taken {
        match slot {
            None => out.push(0),
            Some(a) => {
                out.push(1);
                let mut buf = Vec::new();
                a.write_canonical(&mut buf);
                out.extend_from_slice(&(buf.len() as u32).to_le_bytes());
                out.extend_from_slice(&buf);
            }
        }
    }
    out.extend_from_slice(&(node.children.len() as u32).to_le_bytes());
}

/// SHA-256 over a preorder encoding of shape, statuses, actions and child
/// order. Node ids and creation order do not enter the digest.
pub fn canonical_hash<N, A: Canonical>(tree: &SearchTree<N, A>) -> String {
    let mut hasher = Sha256::new();
    let mut stack = vec![tree.root];
    let mut buf = Vec::new();
    while let Some(id) = stack.pop() {
        let node = &tree.nodes[id];
        buf.clear();
        write_node_bytes(node, &mut buf);
        hasher.update(&buf);
        stack.extend(node.children.iter().rev());
    }
    hex::encode(hasher.finalize())
}

/// Structural equality of two trees, the exact counterpart of [`canonical_hash`].
pub fn structurally_equal<N, A: Canonical>(a: &SearchTree<N, A>, b: &SearchTree<N, A>) -> bool {
    let mut stack = vec![(a.root, b.root)];
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    while let Some((x, y)) = stack.pop() {
        let (nx, ny) = (&a.nodes[x], &b.nodes[y]);
        ba.clear();
        bb.clear();
        write_node_bytes(nx, &mut ba);
        write_node_bytes(ny, &mut bb);
        if ba != bb {
            return false;
        }
        stack.extend(nx.children.iter().copied().zip(ny.children.iter().copied()));
    }
    true
}

/// Checks that the root-to-`node` path of `small` occurs as a rooted path of
/// `big`, with the same actions at every node that has actions in both trees.
/// On failure returns the child-index route to the first mismatch.
pub fn rooted_path_in<N, A: Canonical>(
    small: &SearchTree<N, A>,
    node: NodeId,
    big: &SearchTree<N, A>,
) -> std::result::Result<(), Vec<usize>> {
    let ids = path_of(small, node).map_err(|_| Vec::new())?;
    let mut route = Vec::new();
    let mut cur = big.root;
    for w in 0..ids.len() {
        let s = &small.nodes[ids[w]];
        let g = &big.nodes[cur];
        if !s.actions_taken.is_empty() && !g.actions_taken.is_empty() {
            let enc = |n: &SearchNode<N, A>| {
                let mut v = Vec::new();
                for a in &n.actions_taken {
                    match a {
                        None => v.push(0),
                        Some(a) => {
                            v.push(1);
                            a.write_canonical(&mut v);
                        }
                    }
                }
                v
            };
            if enc(s) != enc(g) {
                return Err(route);
            }
        }
        if w + 1 < ids.len() {
            let idx = s.children.iter().position(|&c| c == ids[w + 1]).expect("path child");
            route.push(idx);
            match g.children.get(idx) {
                Some(&next) => cur = next,
                None => return Err(route),
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DumpLine {
    id: NodeId,
    parent: Option<NodeId>,
    depth: usize,
    status: NodeStatus,
    actions: Vec<Option<String>>,
    lp_objective: Option<f64>,
}

/// One JSON object per node, in id order.
pub fn dump_jsonl<N: NodeData, A: Canonical>(tree: &SearchTree<N, A>) -> String {
    let mut out = String::new();
    for n in &tree.nodes {
        let line = DumpLine {
            id: n.id,
            parent: n.parent,
            depth: n.depth,
            status: n.status,
            actions: n.actions_taken.iter().map(|a| a.as_ref().map(|a| a.describe())).collect(),
            lp_objective: n.data.lp_objective(),
        };
        out.push_str(&serde_json::to_string(&line).expect("dump line serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct Tag(u32);

    impl Canonical for Tag {
        fn write_canonical(&self, out: &mut Vec<u8>) {
            out.extend_from_slice(&self.0.to_le_bytes());
        }
        fn describe(&self) -> String {
            format!("tag{}", self.0)
        }
    }

    /// Synthetic hooks: every node offers the given `(s1, s2)` scored actions
    /// and expands into `fanout` children; `fathom` is never true.
    struct Synthetic {
        scores: Vec<(f64, f64)>,
        fanout: usize,
        node_scores: fn(&SearchNode<(), Tag>) -> (f64, f64),
    }

    impl SearchHooks for Synthetic {
        type Data = ();
        type Action = Tag;

        fn action_types(&self) -> usize {
            1
        }
        fn actions(&self, _: usize, _: &Path<'_, (), Tag>) -> Result<Vec<Tag>> {
            Ok((0..self.scores.len() as u32).map(Tag).collect())
        }
        fn action_score(&self, _: usize, rule: &ScoreRuleId, _: &Path<'_, (), Tag>, a: &Tag) -> Result<f64> {
            let (s1, s2) = self.scores[a.0 as usize];
            Ok(if *rule == ScoreRuleId::Efficacy { s1 } else { s2 })
        }
        fn node_score(&self, rule: &ScoreRuleId, path: &Path<'_, (), Tag>, _: &ScoreParams) -> Result<f64> {
            let (a, b) = (self.node_scores)(path.node());
            Ok(if *rule == ScoreRuleId::BestBound { a } else { b })
        }
        fn children(&self, _: &Path<'_, (), Tag>, _: &[Option<Tag>]) -> Result<Vec<()>> {
            Ok(vec![(); self.fanout])
        }
        fn fathom(&self, _: &mut SearchTree<(), Tag>, _: NodeId, _: Option<&[Option<Tag>]>) -> Result<bool> {
            Ok(false)
        }
    }

    fn params(mu: f64, lambda: f64, depth: usize) -> ScoreParams {
        ScoreParams {
            mu: vec![mu],
            lambda,
            action_rules: vec![(ScoreRuleId::Efficacy, ScoreRuleId::Parallelism)],
            node_rules: (ScoreRuleId::BestBound, ScoreRuleId::DepthFirst),
            depth_limit: depth,
        }
    }

    fn flat(_: &SearchNode<(), Tag>) -> (f64, f64) {
        (0.0, 0.0)
    }

    #[test]
    fn empty_children_gives_single_node() {
        let h = Synthetic { scores: vec![(1.0, 1.0)], fanout: 0, node_scores: flat };
        let t = run((), &h, &params(0.5, 1.0, 5), &Limits::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.nodes[0].fathom_reason, Some(FathomReason::NoChildren));
    }

    #[test]
    fn complete_binary_tree() {
        let h = Synthetic { scores: vec![(1.0, 0.0)], fanout: 2, node_scores: flat };
        let p = params(0.5, 1.0, 3);
        let t = run_suppressed((), &h, &p, &Limits::default()).unwrap();
        assert_eq!(t.len(), 15);
        assert_eq!(t.stats.nodes_created, 15);
        let full = run((), &h, &p, &Limits::default()).unwrap();
        assert!(structurally_equal(&t, &full));
        assert_eq!(canonical_hash(&t), canonical_hash(&full));
        assert!(t.nodes.iter().all(|n| n.status != NodeStatus::Open));
    }

    #[test]
    fn node_cap_truncates() {
        let h = Synthetic { scores: vec![(1.0, 0.0)], fanout: 2, node_scores: flat };
        let limits = Limits { node_cap: 6, ..Limits::default() };
        let t = run((), &h, &params(0.5, 1.0, 10), &limits).unwrap();
        assert!(t.truncated);
        assert!(t.len() <= 6);
    }

    #[test]
    fn children_budget_enforced() {
        let h = Synthetic { scores: vec![(1.0, 0.0)], fanout: 3, node_scores: flat };
        let r = run((), &h, &params(0.5, 1.0, 2), &Limits::default());
        assert!(matches!(r, Err(Error::HookBudget(_))));
        let h = Synthetic { scores: vec![(1.0, 0.0); 3], fanout: 1, node_scores: flat };
        let limits = Limits { max_actions: 2, ..Limits::default() };
        assert!(matches!(run((), &h, &params(0.5, 1.0, 2), &limits), Err(Error::HookBudget(_))));
    }

    fn chosen_at_root(mu: f64, scores: Vec<(f64, f64)>) -> u32 {
        let h = Synthetic { scores, fanout: 0, node_scores: flat };
        let t = run((), &h, &params(mu, 1.0, 3), &Limits::default()).unwrap();
        t.nodes[0].actions_taken[0].as_ref().unwrap().0
    }

    #[test]
    fn action_selection_endpoints_and_crossing() {
        let scores = vec![(1.0, 0.0), (0.0, 1.0)];
        assert_eq!(chosen_at_root(1.0, scores.clone()), 0);
        assert_eq!(chosen_at_root(0.0, scores.clone()), 1);
        assert_eq!(chosen_at_root(0.5, scores.clone()), 0, "tie goes to list order");
        assert_eq!(chosen_at_root(0.5 + 1e-9, scores.clone()), 0);
        assert_eq!(chosen_at_root(0.5 - 1e-9, scores.clone()), 1);
        // pure ascore_2 argmax with a tie on ascore_1
        assert_eq!(chosen_at_root(0.0, vec![(5.0, 1.0), (5.0, 2.0)]), 1);
    }

    #[test]
    fn argmax_invariant_under_positive_scaling() {
        let base = vec![(0.3, 0.9), (0.8, 0.1), (0.5, 0.5)];
        let scaled: Vec<_> = base.iter().map(|(a, b)| (a * 7.5, b * 7.5)).collect();
        for i in 0..=20 {
            let mu = i as f64 / 20.0;
            assert_eq!(chosen_at_root(mu, base.clone()), chosen_at_root(mu, scaled.clone()));
        }
    }

    fn leaf_tree(scores: &[(f64, f64)]) -> SearchTree<(), Tag> {
        let mut t: SearchTree<(), Tag> = SearchTree::new(());
        t.open.clear();
        for (i, &s) in scores.iter().enumerate() {
            if i > 0 {
                t.nodes.push(t.nodes[0].clone());
                t.nodes[i].id = i;
            }
            t.nodes[i].node_scores = s;
            t.open.push(i);
        }
        t
    }

    #[test]
    fn leaf_selection() {
        let t = leaf_tree(&[(5.0, 0.0), (3.0, 0.0)]);
        assert_eq!(select_leaf(&t, &params(1.0, 1.0, 3)).unwrap(), 0);
        let t = leaf_tree(&[(3.0, 0.0), (5.0, 0.0)]);
        assert_eq!(select_leaf(&t, &params(1.0, 1.0, 3)).unwrap(), 1);
        let t = leaf_tree(&[(2.0, 2.0), (2.0, 2.0)]);
        assert_eq!(select_leaf(&t, &params(1.0, 0.3, 3)).unwrap(), 0);
        // best-bound (4, 6) and depth (2, 0) at lambda 0.5: both combine to 3
        let t = leaf_tree(&[(4.0, 2.0), (6.0, 0.0)]);
        assert_eq!(select_leaf(&t, &params(1.0, 0.5, 3)).unwrap(), 0);
        let mut empty = leaf_tree(&[(0.0, 0.0)]);
        empty.open.clear();
        assert!(matches!(select_leaf(&empty, &params(1.0, 0.5, 3)), Err(Error::NoOpenLeaf)));
    }

    #[test]
    fn paths_and_path_only_trees() {
        let h = Synthetic { scores: vec![(1.0, 0.0)], fanout: 2, node_scores: flat };
        let t = run((), &h, &params(0.5, 1.0, 3), &Limits::default()).unwrap();
        assert_eq!(path_of(&t, 0).unwrap(), vec![0]);
        let deep = t.nodes.iter().find(|n| n.depth == 2).unwrap().id;
        assert_eq!(path_of(&t, deep).unwrap().len(), 3);
        assert!(matches!(path_of(&t, 999), Err(Error::UnknownNode(999))));
        let (p, last) = t.path_only(deep).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.nodes[last].depth, 2);
        assert!(rooted_path_in(&t, deep, &t).is_ok());
    }

    #[test]
    fn hash_distinguishes_shapes() {
        let two = Synthetic { scores: vec![(1.0, 0.0)], fanout: 2, node_scores: flat };
        let one = Synthetic { scores: vec![(1.0, 0.0)], fanout: 1, node_scores: flat };
        let p = params(0.5, 1.0, 3);
        let a = run((), &two, &p, &Limits::default()).unwrap();
        let b = run((), &one, &p, &Limits::default()).unwrap();
        assert_ne!(canonical_hash(&a), canonical_hash(&b));
        assert!(!structurally_equal(&a, &b));
        assert_eq!(canonical_hash(&a), canonical_hash(&run((), &two, &p, &Limits::default()).unwrap()));
    }

    #[test]
    fn dump_has_one_line_per_node() {
        let h = Synthetic { scores: vec![(1.0, 0.0)], fanout: 2, node_scores: flat };
        let t = run((), &h, &params(0.5, 1.0, 2), &Limits::default()).unwrap();
        let dump = dump_jsonl(&t);
        assert_eq!(dump.lines().count(), 7);
        let first: serde_json::Value = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
        assert_eq!(first["status"], "expanded");
        assert_eq!(first["actions"][0], "tag0");
    }
}

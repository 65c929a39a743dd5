//! Branch-and-cut on top of the generic tree search.
//!
//! Action type 0 is branching, type 1 is cutting. A node's data is its
//! subproblem together with the LP relaxation solved when the node was made.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ip::{relax, BranchSide, Disjunction, IpInstance, IpStatus, LinearConstraint, RowOrigin};
use crate::lp::{dot, is_integral, solve_lp, LpResult, LpStatus, Sense, INT_TOL};
use crate::scoring::{self, ScoreRuleId};
use crate::tree::{
    run, run_suppressed, Canonical, Incumbent, Limits, NodeData, NodeId, Path, ScoreParams, SearchHooks, SearchTree,
};

pub const BRANCH: usize = 0;
pub const CUT: usize = 1;

/// Valid inequality `alpha·x <= beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPlane {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl CutPlane {
    pub fn new(alpha: Vec<f64>, beta: f64) -> Result<Self> {
        if alpha.iter().all(|&a| a == 0.0) {
            return Err(Error::InvalidInput("cut normal is all zero".into()));
        }
        Ok(CutPlane { alpha, beta })
    }

    /// `alpha·x - beta`; positive when `x` violates the cut.
    pub fn violation(&self, x: &[f64]) -> f64 {
        dot(&self.alpha, x) - self.beta
    }

    pub fn row(&self) -> LinearConstraint {
        LinearConstraint::new(self.alpha.clone(), Sense::Le, self.beta, RowOrigin::Cut)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CutOrBranch {
    Branch(Disjunction),
    /// A batch of cuts added together, in pool order.
    Cuts(Vec<CutPlane>),
}

impl Canonical for CutOrBranch {
    fn write_canonical(&self, out: &mut Vec<u8>) {
        match self {
            CutOrBranch::Branch(d) => {
                out.push(0);
                out.extend_from_slice(&(d.pi.len() as u32).to_le_bytes());
                for p in &d.pi {
                    out.extend_from_slice(&p.to_le_bytes());
                }
                out.extend_from_slice(&d.pi0.to_le_bytes());
            }
            CutOrBranch::Cuts(cuts) => {
                out.push(1);
                out.extend_from_slice(&(cuts.len() as u32).to_le_bytes());
                for c in cuts {
                    out.extend_from_slice(&(c.alpha.len() as u32).to_le_bytes());
                    for a in &c.alpha {
                        out.extend_from_slice(&a.to_bits().to_le_bytes());
                    }
                    out.extend_from_slice(&c.beta.to_bits().to_le_bytes());
                }
            }
        }
    }

    fn describe(&self) -> String {
        let terms = |coeffs: Vec<String>| {
            let t: Vec<String> = coeffs.into_iter().collect();
            t.join(" + ")
        };
        match self {
            CutOrBranch::Branch(d) => {
                let lhs = terms(
                    d.pi.iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0)
                        .map(|(i, &p)| if p == 1 { format!("x{i}") } else { format!("{p}*x{i}") })
                        .collect(),
                );
                format!("branch {lhs} <= {} | >= {}", d.pi0, d.pi0 + 1)
            }
            CutOrBranch::Cuts(cuts) => {
                let parts: Vec<String> = cuts
                    .iter()
                    .map(|c| {
                        let lhs = terms(
                            c.alpha
                                .iter()
                                .enumerate()
                                .filter(|(_, &a)| a != 0.0)
                                .map(|(i, &a)| if a == 1.0 { format!("x{i}") } else { format!("{a}*x{i}") })
                                .collect(),
                        );
                        format!("{lhs} <= {}", c.beta)
                    })
                    .collect();
                format!("cuts [{}]", parts.join("; "))
            }
        }
    }
}

/// Subproblem and its LP relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct BncData {
    pub ip: IpInstance,
    pub lp: LpResult,
}

impl BncData {
    pub fn new(ip: IpInstance) -> Result<Self> {
        let lp = solve_lp(&relax(&ip))?;
        Ok(BncData { ip, lp })
    }
}

impl NodeData for BncData {
    fn lp_objective(&self) -> Option<f64> {
        self.lp.objective
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchMode {
    SingleVariable,
    /// Branch on `sum_{i in S} x_i` for each configured subset `S`.
    MultiVariable(Vec<Vec<usize>>),
    /// Branch on `pi·x` for each configured `pi` with `|pi_j| <= coeff_cap`.
    GeneralDisjunction {
        list: Vec<Vec<i64>>,
        coeff_cap: i64,
    },
}

impl BranchMode {
    /// Every single variable and every pair of variables.
    pub fn pairs(num_vars: usize) -> BranchMode {
        let singles = (0..num_vars).map(|i| vec![i]);
        let pairs = (0..num_vars).flat_map(|i| (i + 1..num_vars).map(move |j| vec![i, j]));
        BranchMode::MultiVariable(singles.chain(pairs).collect())
    }

    /// Unit vectors and the differences `x_i - x_j` for `i < j`.
    pub fn differences(num_vars: usize) -> BranchMode {
        let unit = |i: usize| {
            let mut pi = vec![0; num_vars];
            pi[i] = 1;
            pi
        };
        let diffs = (0..num_vars).flat_map(|i| {
            (i + 1..num_vars).map(move |j| {
                let mut pi = vec![0; num_vars];
                pi[i] = 1;
                pi[j] = -1;
                pi
            })
        });
        BranchMode::GeneralDisjunction { list: (0..num_vars).map(unit).chain(diffs).collect(), coeff_cap: 1 }
    }

    /// `single`, `multi` (see [`BranchMode::pairs`]) or `disj` (see [`BranchMode::differences`]).
    pub fn named(name: &str, num_vars: usize) -> Result<BranchMode> {
        match name {
            "single" => Ok(BranchMode::SingleVariable),
            "multi" => Ok(BranchMode::pairs(num_vars)),
            "disj" => Ok(BranchMode::differences(num_vars)),
            other => Err(Error::InvalidInput(format!("unknown branch mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BncConfig {
    pub branch_mode: BranchMode,
    pub cuts_per_node: usize,
    pub cut_violation_tol: f64,
    pub incumbent_tol: f64,
    pub integrality_tol: f64,
}

impl Default for BncConfig {
    fn default() -> Self {
        BncConfig {
            branch_mode: BranchMode::SingleVariable,
            cuts_per_node: 2,
            cut_violation_tol: 1e-6,
            incumbent_tol: 1e-6,
            integrality_tol: INT_TOL,
        }
    }
}

impl BncConfig {
    pub fn validate(&self, num_vars: usize) -> Result<()> {
        if !(self.cut_violation_tol > 0.0 && self.incumbent_tol > 0.0 && self.integrality_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        match &self.branch_mode {
            BranchMode::SingleVariable => {}
            BranchMode::MultiVariable(sets) => {
                for s in sets {
                    if s.is_empty() || s.iter().any(|&i| i >= num_vars) {
                        return Err(Error::InvalidInput(format!("bad branching subset {s:?}")));
                    }
                }
            }
            BranchMode::GeneralDisjunction { list, coeff_cap } => {
                for pi in list {
                    if pi.len() != num_vars {
                        return Err(Error::Dimension(format!(
                            "disjunction of length {} for {num_vars} vars",
                            pi.len()
                        )));
                    }
                    if pi.iter().all(|&p| p == 0) || pi.iter().any(|p| p.abs() > *coeff_cap) {
                        return Err(Error::InvalidInput(format!(
                            "disjunction {pi:?} is zero or exceeds coefficient cap {coeff_cap}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn is_fractional(v: f64, tol: f64) -> bool {
    (v - v.round()).abs() > tol
}

/// All size-`k` index combinations of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + n - k) else { break };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

pub struct BncHooks {
    root: IpInstance,
    pool: Vec<CutPlane>,
    config: BncConfig,
}

impl BncHooks {
    pub fn new(root: IpInstance, pool: Vec<CutPlane>, config: BncConfig) -> Result<Self> {
        root.validate()?;
        config.validate(root.num_vars)?;
        if let Some(c) = pool.iter().find(|c| c.alpha.len() != root.num_vars) {
            return Err(Error::Dimension(format!("cut of length {} for {} vars", c.alpha.len(), root.num_vars)));
        }
        Ok(BncHooks { root, pool, config })
    }

    pub fn root(&self) -> &IpInstance {
        &self.root
    }

    pub fn config(&self) -> &BncConfig {
        &self.config
    }

    pub fn branch_actions(&self, path: &Path<'_, BncData, CutOrBranch>) -> Vec<CutOrBranch> {
        let data = &path.node().data;
        let Some(x) = data.lp.solution.as_deref().filter(|_| data.lp.is_optimal()) else {
            return Vec::new();
        };
        let tol = self.config.integrality_tol;
        let n = data.ip.num_vars;
        match &self.config.branch_mode {
            BranchMode::SingleVariable => (0..n)
                .filter(|&i| data.ip.integral[i] && is_fractional(x[i], tol))
                .map(|i| CutOrBranch::Branch(Disjunction::single(n, i, x[i].floor() as i64)))
                .collect(),
            BranchMode::MultiVariable(sets) => sets
                .iter()
                .filter_map(|s| {
                    let total: f64 = s.iter().map(|&i| x[i]).sum();
                    is_fractional(total, tol).then(|| {
                        let mut pi = vec![0; n];
                        for &i in s {
                            pi[i] = 1;
                        }
                        CutOrBranch::Branch(Disjunction { pi, pi0: total.floor() as i64 })
                    })
                })
                .collect(),
            BranchMode::GeneralDisjunction { list, .. } => list
                .iter()
                .filter_map(|pi| {
                    let d = Disjunction { pi: pi.clone(), pi0: 0 };
                    let v = d.value_at(x);
                    is_fractional(v, tol).then(|| CutOrBranch::Branch(Disjunction { pi0: v.floor() as i64, ..d }))
                })
                .collect(),
        }
    }

    /// Batches of `min(cuts_per_node, #violated)` violated pool cuts, in
    /// lexicographic order of pool positions.
    pub fn cut_actions(&self, path: &Path<'_, BncData, CutOrBranch>) -> Vec<CutOrBranch> {
        let data = &path.node().data;
        let Some(x) = data.lp.solution.as_deref().filter(|_| data.lp.is_optimal()) else {
            return Vec::new();
        };
        let violated: Vec<&CutPlane> =
            self.pool.iter().filter(|c| c.violation(x) > self.config.cut_violation_tol).collect();
        let size = self.config.cuts_per_node.min(violated.len());
        combinations(violated.len(), size)
            .into_iter()
            .map(|combo| CutOrBranch::Cuts(combo.into_iter().map(|i| violated[i].clone()).collect()))
            .collect()
    }

    /// Replaces the incumbent iff `objective` is strictly better. The candidate
    /// is checked against the root instance first.
    pub fn update_incumbent(
        &self,
        tree: &mut SearchTree<BncData, CutOrBranch>,
        solution: Vec<i64>,
        objective: f64,
    ) -> Result<bool> {
        let point: Vec<f64> = solution.iter().map(|&v| v as f64).collect();
        if !self.root.is_feasible(&point, self.config.integrality_tol) {
            return Err(Error::InfeasibleIncumbent(format!("{solution:?}")));
        }
        if tree.incumbent.as_ref().is_some_and(|inc| objective <= inc.objective) {
            return Ok(false);
        }
        tree.incumbent = Some(Incumbent { objective, solution });
        Ok(true)
    }
}

fn cuts_in(actions: Option<&[Option<CutOrBranch>]>) -> &[CutPlane] {
    match actions.and_then(|a| a.get(CUT)) {
        Some(Some(CutOrBranch::Cuts(c))) => c,
        _ => &[],
    }
}

impl SearchHooks for BncHooks {
    type Data = BncData;
    type Action = CutOrBranch;

    fn action_types(&self) -> usize {
        2
    }

    fn actions(&self, kind: usize, path: &Path<'_, BncData, CutOrBranch>) -> Result<Vec<CutOrBranch>> {
        match kind {
            BRANCH => Ok(self.branch_actions(path)),
            CUT => Ok(self.cut_actions(path)),
            _ => Err(Error::InvalidInput(format!("unknown action type {kind}"))),
        }
    }

    fn action_score(
        &self,
        _kind: usize,
        rule: &ScoreRuleId,
        path: &Path<'_, BncData, CutOrBranch>,
        action: &CutOrBranch,
    ) -> Result<f64> {
        scoring::action_score(rule, path, action)
    }

    fn node_score(
        &self,
        rule: &ScoreRuleId,
        path: &Path<'_, BncData, CutOrBranch>,
        params: &ScoreParams,
    ) -> Result<f64> {
        scoring::node_score(rule, path, params.depth_limit)
    }

    fn children(&self, path: &Path<'_, BncData, CutOrBranch>, actions: &[Option<CutOrBranch>]) -> Result<Vec<BncData>> {
        let Some(Some(CutOrBranch::Branch(d))) = actions.get(BRANCH) else {
            return Ok(Vec::new());
        };
        let parent = &path.node().data.ip;
        let cut_rows: Vec<LinearConstraint> = cuts_in(Some(actions)).iter().map(CutPlane::row).collect();
        [BranchSide::Down, BranchSide::Up]
            .into_iter()
            .map(|side| {
                let mut rows = cut_rows.clone();
                rows.push(d.row(side));
                BncData::new(parent.with_rows(rows))
            })
            .collect()
    }

    fn fathom(
        &self,
        tree: &mut SearchTree<BncData, CutOrBranch>,
        node: NodeId,
        actions: Option<&[Option<CutOrBranch>]>,
    ) -> Result<bool> {
        let data = &tree.node(node)?.data;
        let cuts = cuts_in(actions);
        let resolved;
        let lp = if cuts.is_empty() {
            &data.lp
        } else {
            resolved = solve_lp(&relax(&data.ip.with_rows(cuts.iter().map(CutPlane::row))))?;
            &resolved
        };
        match lp.status {
            LpStatus::Infeasible => return Ok(true),
            LpStatus::Unbounded => return Err(Error::InvalidInput("LP relaxation is unbounded".into())),
            LpStatus::Optimal => {}
        }
        let x = lp.solution.as_deref().expect("optimal LP carries a solution");
        let bound = lp.objective.expect("optimal LP carries an objective");
        if is_integral(x, &data.ip.integral, self.config.integrality_tol) {
            let solution: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
            let point: Vec<f64> = solution.iter().map(|&v| v as f64).collect();
            let objective = self.root.objective_value(&point);
            self.update_incumbent(tree, solution, objective)?;
            return Ok(true);
        }
        Ok(tree.incumbent.as_ref().is_some_and(|inc| bound <= inc.objective + self.config.incumbent_tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Search closed every node by infeasibility, integrality or bound.
    Solved,
    /// Some node closed on the depth limit or for lack of a branching action.
    Incomplete,
    /// The node cap stopped the search.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct BncOutcome {
    pub status: RunStatus,
    pub ip_status: IpStatus,
    pub objective: Option<f64>,
    pub solution: Option<Vec<i64>>,
    /// Total nodes created, root included.
    pub tree_size: usize,
    pub tree: SearchTree<BncData, CutOrBranch>,
}

fn outcome(tree: SearchTree<BncData, CutOrBranch>) -> BncOutcome {
    use crate::tree::FathomReason;
    let status = if tree.truncated {
        RunStatus::Truncated
    } else if tree
        .nodes
        .iter()
        .any(|n| matches!(n.fathom_reason, Some(FathomReason::DepthLimit | FathomReason::NoChildren)))
    {
        RunStatus::Incomplete
    } else {
        RunStatus::Solved
    };
    let (ip_status, objective, solution) = match &tree.incumbent {
        Some(inc) => (IpStatus::Optimal, Some(inc.objective), Some(inc.solution.clone())),
        None => (IpStatus::Infeasible, None, None),
    };
    BncOutcome { status, ip_status, objective, solution, tree_size: tree.stats.nodes_created, tree }
}

/// Branch-and-cut on `root` with the given cut pool.
pub fn solve(
    root: &IpInstance,
    pool: Vec<CutPlane>,
    config: BncConfig,
    params: &ScoreParams,
    limits: &Limits,
) -> Result<BncOutcome> {
    let hooks = BncHooks::new(root.clone(), pool, config)?;
    let tree = run(BncData::new(root.clone())?, &hooks, params, limits)?;
    Ok(outcome(tree))
}

/// The same search with fathoming checks suppressed.
pub fn solve_suppressed(
    root: &IpInstance,
    pool: Vec<CutPlane>,
    config: BncConfig,
    params: &ScoreParams,
    limits: &Limits,
) -> Result<BncOutcome> {
    let hooks = BncHooks::new(root.clone(), pool, config)?;
    let tree = run_suppressed(BncData::new(root.clone())?, &hooks, params, limits)?;
    Ok(outcome(tree))
}

/// Branch-and-cut parameters with the given weights, best-bound versus depth
/// node selection and a depth limit of `depth_limit`.
pub fn params(
    mu_branch: f64,
    mu_cut: f64,
    lambda: f64,
    branch_rules: (ScoreRuleId, ScoreRuleId),
    cut_rules: (ScoreRuleId, ScoreRuleId),
    depth_limit: usize,
) -> ScoreParams {
    ScoreParams {
        mu: vec![mu_branch, mu_cut],
        lambda,
        action_rules: vec![branch_rules, cut_rules],
        node_rules: (ScoreRuleId::BestBound, ScoreRuleId::DepthFirst),
        depth_limit,
    }
}

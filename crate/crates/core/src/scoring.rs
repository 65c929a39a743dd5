//! Scoring rules for cuts, branching disjunctions and node selection.
//!
//! The vector-level formulas live here as pure functions. The path-level
//! wrappers that read node data are at the bottom and only ever see the
//! root-to-node path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bnc::{BncData, CutOrBranch, CutPlane};
use crate::error::{Error, Result};
use crate::ip::{relax, BranchSide, Disjunction};
use crate::lp::{dot, solve_lp, LpStatus};
use crate::tree::Path;

/// Score assigned to an infeasible strong-branching child and to a
/// directed-cutoff direction that never crosses the cut.
pub const SENTINEL: f64 = 1e6;
/// Floor applied to each factor of the product branching score.
pub const PRODUCT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoreRuleId {
    Efficacy,
    Parallelism,
    DirectedCutoff,
    BestBound,
    DepthFirst,
    SBLinear(f64),
    SBProduct,
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Cut,
    Branch,
    Node,
}

impl ScoreRuleId {
    pub fn kind(&self) -> RuleKind {
        match self {
            ScoreRuleId::Efficacy | ScoreRuleId::Parallelism | ScoreRuleId::DirectedCutoff => RuleKind::Cut,
            ScoreRuleId::BestBound | ScoreRuleId::DepthFirst => RuleKind::Node,
            ScoreRuleId::SBLinear(_) | ScoreRuleId::SBProduct | ScoreRuleId::MostFractional => RuleKind::Branch,
        }
    }

    /// Every rule the registry knows about, with a representative `sblinear` weight.
    pub fn registry() -> Vec<ScoreRuleId> {
        vec![
            ScoreRuleId::Efficacy,
            ScoreRuleId::Parallelism,
            ScoreRuleId::DirectedCutoff,
            ScoreRuleId::BestBound,
            ScoreRuleId::DepthFirst,
            ScoreRuleId::SBLinear(0.5),
            ScoreRuleId::SBProduct,
            ScoreRuleId::MostFractional,
        ]
    }
}

impl fmt::Display for ScoreRuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreRuleId::Efficacy => write!(f, "efficacy"),
            ScoreRuleId::Parallelism => write!(f, "parallelism"),
            ScoreRuleId::DirectedCutoff => write!(f, "dcd"),
            ScoreRuleId::BestBound => write!(f, "bestbound"),
            ScoreRuleId::DepthFirst => write!(f, "depth"),
            ScoreRuleId::SBLinear(rho) => write!(f, "sblinear:{rho}"),
            ScoreRuleId::SBProduct => write!(f, "sbproduct"),
            ScoreRuleId::MostFractional => write!(f, "mostfrac"),
        }
    }
}

impl FromStr for ScoreRuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "efficacy" => ScoreRuleId::Efficacy,
            "parallelism" => ScoreRuleId::Parallelism,
            "dcd" => ScoreRuleId::DirectedCutoff,
            "bestbound" => ScoreRuleId::BestBound,
            "depth" => ScoreRuleId::DepthFirst,
            "sbproduct" => ScoreRuleId::SBProduct,
            "mostfrac" => ScoreRuleId::MostFractional,
            other => match other.strip_prefix("sblinear:") {
                Some(w) => {
                    let rho: f64 = w.parse().map_err(|_| Error::UnknownRule(s.to_string()))?;
                    if !(0.0..=1.0).contains(&rho) {
                        return Err(Error::InvalidInput(format!("sblinear weight {rho} outside [0,1]")));
                    }
                    ScoreRuleId::SBLinear(rho)
                }
                None => return Err(Error::UnknownRule(s.to_string())),
            },
        })
    }
}

/// `mu * s1 + (1 - mu) * s2`. The endpoints return the pure score, so an
/// infinite score on the unused side never produces NaN.
pub fn combine(s1: f64, s2: f64, mu: f64) -> f64 {
    if mu == 1.0 {
        s1
    } else if mu == 0.0 {
        s2
    } else {
        mu * s1 + (1.0 - mu) * s2
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn nonzero_normal(alpha: &[f64]) -> Result<f64> {
    let n = norm(alpha);
    if n == 0.0 {
        return Err(Error::InvalidInput("cut normal is zero".into()));
    }
    Ok(n)
}

/// Signed distance from `x` to the hyperplane `alpha·x = beta`; positive when violated.
pub fn efficacy(cut: &CutPlane, x: &[f64]) -> Result<f64> {
    let n = nonzero_normal(&cut.alpha)?;
    Ok((dot(&cut.alpha, x) - cut.beta) / n)
}

/// Cosine of the angle between the cut normal and the objective, in `[0, 1]`.
pub fn parallelism(cut: &CutPlane, objective: &[f64]) -> Result<f64> {
    let na = nonzero_normal(&cut.alpha)?;
    let nc = norm(objective);
    if nc == 0.0 {
        return Err(Error::InvalidInput("objective vector is zero".into()));
    }
    Ok((dot(&cut.alpha, objective).abs() / (na * nc)).min(1.0))
}

/// Distance from `x` to the cut measured along the segment towards `incumbent`.
///
/// Falls back to efficacy without an incumbent (or when it coincides with
/// `x`), and returns [`SENTINEL`] when the direction never reaches the cut.
pub fn directed_cutoff(cut: &CutPlane, x: &[f64], incumbent: Option<&[f64]>) -> Result<f64> {
    nonzero_normal(&cut.alpha)?;
    let Some(inc) = incumbent else { return efficacy(cut, x) };
    let diff: Vec<f64> = inc.iter().zip(x).map(|(a, b)| a - b).collect();
    let len = norm(&diff);
    if len == 0.0 {
        return efficacy(cut, x);
    }
    // Rate at which the cut activity drops while moving towards the incumbent.
    let along: f64 = -dot(&cut.alpha, &diff) / len;
    if along > 1e-12 {
        Ok((dot(&cut.alpha, x) - cut.beta) / along)
    } else {
        Ok(SENTINEL)
    }
}

pub fn sb_linear(down: f64, up: f64, rho: f64) -> f64 {
    rho * down.max(up) + (1.0 - rho) * down.min(up)
}

pub fn sb_product(down: f64, up: f64) -> f64 {
    down.max(PRODUCT_EPS) * up.max(PRODUCT_EPS)
}

/// Distance of `value` to the nearest integer.
pub fn fractionality(value: f64) -> f64 {
    (value - value.floor()).min(value.ceil() - value)
}

/// LP objective of the node, `-inf` when infeasible.
pub fn best_bound_nscore(path: &Path<'_, BncData, CutOrBranch>) -> f64 {
    path.node().data.lp.objective.unwrap_or(f64::NEG_INFINITY)
}

/// Node depth scaled by the depth limit.
pub fn depth_nscore<N, A>(path: &Path<'_, N, A>, depth_limit: usize) -> f64 {
    path.node().depth as f64 / depth_limit as f64
}

/// Objective degradation `(z - z_down, z - z_up)` of the two children of `d`.
pub fn strong_branch_scores(path: &Path<'_, BncData, CutOrBranch>, d: &Disjunction) -> Result<(f64, f64)> {
    let data = &path.node().data;
    let z = data.lp.objective.ok_or_else(|| Error::InvalidInput("strong branching needs an optimal node LP".into()))?;
    let child_delta = |side| -> Result<f64> {
        let child = crate::ip::apply_branch(&data.ip, d, side)?;
        let lp = solve_lp(&relax(&child))?;
        Ok(match (lp.status, lp.objective) {
            (LpStatus::Optimal, Some(obj)) => z - obj,
            _ => SENTINEL,
        })
    };
    Ok((child_delta(BranchSide::Down)?, child_delta(BranchSide::Up)?))
}

/// Score of one action under `rule`, computed from the path only.
pub fn action_score(rule: &ScoreRuleId, path: &Path<'_, BncData, CutOrBranch>, action: &CutOrBranch) -> Result<f64> {
    let data = &path.node().data;
    let x = data
        .lp
        .solution
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("action scores need an optimal node LP".into()))?;
    match (rule.kind(), action) {
        (RuleKind::Cut, CutOrBranch::Cuts(cuts)) => {
            let incumbent = path.node().incumbent_at_selection.as_ref().map(|i| i.point());
            let mut total = 0.0;
            for cut in cuts {
                total += match rule {
                    ScoreRuleId::Efficacy => efficacy(cut, x)?,
                    ScoreRuleId::Parallelism => parallelism(cut, &data.ip.objective)?,
                    _ => directed_cutoff(cut, x, incumbent.as_deref())?,
                };
            }
            Ok(total)
        }
        (RuleKind::Branch, CutOrBranch::Branch(d)) => match rule {
            ScoreRuleId::MostFractional => Ok(fractionality(d.value_at(x))),
            ScoreRuleId::SBProduct => {
                let (down, up) = strong_branch_scores(path, d)?;
                Ok(sb_product(down, up))
            }
            ScoreRuleId::SBLinear(rho) => {
                let (down, up) = strong_branch_scores(path, d)?;
                Ok(sb_linear(down, up, *rho))
            }
            _ => unreachable!("rule kind checked above"),
        },
        _ => Err(Error::InvalidInput(format!("rule `{rule}` cannot score action {action:?}"))),
    }
}

/// Node-selection score under `rule`, computed from the path only.
pub fn node_score(rule: &ScoreRuleId, path: &Path<'_, BncData, CutOrBranch>, depth_limit: usize) -> Result<f64> {
    match rule {
        ScoreRuleId::BestBound => Ok(best_bound_nscore(path)),
        ScoreRuleId::DepthFirst => Ok(depth_nscore(path, depth_limit)),
        _ => Err(Error::InvalidInput(format!("rule `{rule}` is not a node-selection rule"))),
    }
}

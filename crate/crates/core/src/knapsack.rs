//! Multiple-knapsack instances in the Chvátal and reverse-Chvátal families
//! and the extended cover cut pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bnc::CutPlane;
use crate::error::{Error, Result};
use crate::ip::{write_instance_with_comments, IpInstance, LinearConstraint, RowOrigin};
use crate::lp::Sense;

/// Identifies the weight sampler in instance files.
pub const GENERATOR_ID: &str = "chacha8/inverse-cdf v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackSpec {
    pub num_items: usize,
    pub num_knapsacks: usize,
    pub reverse: bool,
    pub seed: u64,
    pub weight_mean: f64,
    pub weight_sd: f64,
}

impl KnapsackSpec {
    pub fn chvatal(num_items: usize, num_knapsacks: usize, seed: u64) -> Self {
        KnapsackSpec { num_items, num_knapsacks, reverse: false, seed, weight_mean: 50.0, weight_sd: 2.0 }
    }

    pub fn reverse_chvatal(num_items: usize, num_knapsacks: usize, seed: u64) -> Self {
        KnapsackSpec { reverse: true, ..Self::chvatal(num_items, num_knapsacks, seed) }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        KnapsackSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_items == 0 || self.num_knapsacks == 0 {
            return Err(Error::InvalidInput("need at least one item and one knapsack".into()));
        }
        if !(self.weight_sd > 0.0 && self.weight_sd.is_finite() && self.weight_mean.is_finite()) {
            return Err(Error::InvalidInput("weight distribution must be finite with positive sd".into()));
        }
        if self.weight_mean < 1.0 {
            return Err(Error::InvalidInput("weight mean must be at least 1".into()));
        }
        Ok(())
    }
}

/// Weights sorted nonincreasing and capacities of a multiple-knapsack IP
/// whose variables are ordered knapsack-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackStructure {
    pub weights: Vec<i64>,
    pub capacities: Vec<i64>,
}

impl KnapsackStructure {
    pub fn num_items(&self) -> usize {
        self.weights.len()
    }

    pub fn num_knapsacks(&self) -> usize {
        self.capacities.len()
    }

    pub fn var(&self, knapsack: usize, item: usize) -> usize {
        knapsack * self.num_items() + item
    }

    /// Recovers the structure from an instance with the generated layout:
    /// `K` capacity rows over identical sorted weights, then one assignment
    /// row per item.
    pub fn detect(ip: &IpInstance) -> Option<Self> {
        let n = ip.num_vars;
        (1..=n).filter(|&k| n.is_multiple_of(k)).find_map(|k| Self::try_layout(ip, k, n / k))
    }

    fn try_layout(ip: &IpInstance, k: usize, items: usize) -> Option<Self> {
        if ip.constraints.len() < k + items || ip.var_upper.iter().any(|&u| u != 1) {
            return None;
        }
        let integer = |v: f64| (v.fract() == 0.0).then_some(v as i64);
        let first = &ip.constraints[0];
        let weights: Vec<i64> = first.coeffs[..items].iter().map(|&w| integer(w)).collect::<Option<_>>()?;
        if weights.iter().any(|&w| w <= 0) || weights.windows(2).any(|p| p[0] < p[1]) {
            return None;
        }
        let mut capacities = Vec::with_capacity(k);
        for (b, row) in ip.constraints[..k].iter().enumerate() {
            if row.sense != Sense::Le {
                return None;
            }
            for (j, &c) in row.coeffs.iter().enumerate() {
                let expect = if j / items == b { weights[j % items] as f64 } else { 0.0 };
                if c != expect {
                    return None;
                }
            }
            capacities.push(integer(row.rhs)?);
        }
        for (i, row) in ip.constraints[k..k + items].iter().enumerate() {
            if row.sense != Sense::Le || row.rhs != 1.0 {
                return None;
            }
            for (j, &c) in row.coeffs.iter().enumerate() {
                if c != if j % items == i { 1.0 } else { 0.0 } {
                    return None;
                }
            }
        }
        Some(KnapsackStructure { weights, capacities })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackInstance {
    pub spec: KnapsackSpec,
    pub structure: KnapsackStructure,
    pub ip: IpInstance,
}

impl KnapsackInstance {
    /// Instance file text with the generator recorded in comments.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let comments = vec![
            format!("generator {GENERATOR_ID} seed={}", s.seed),
            format!(
                "items={} knapsacks={} reverse={} weight_mean={} weight_sd={}",
                s.num_items, s.num_knapsacks, s.reverse, s.weight_mean, s.weight_sd
            ),
        ];
        write_instance_with_comments(&self.ip, &comments)
    }
}

/// `floor(N(mean, sd))` via inverse CDF of uniforms from ChaCha8, sorted
/// nonincreasing. Draws below 1 are redrawn.
pub fn draw_weights(spec: &KnapsackSpec) -> Result<Vec<i64>> {
    spec.validate()?;
    let normal = Normal::new(spec.weight_mean, spec.weight_sd)
        .map_err(|e| Error::InvalidInput(format!("weight distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut weights = Vec::with_capacity(spec.num_items);
    while weights.len() < spec.num_items {
        let u: f64 = rng.random();
        if u <= 0.0 {
            continue;
        }
        let w = normal.inverse_cdf(u).floor();
        if w >= 1.0 && w.is_finite() {
            weights.push(w as i64);
        }
    }
    weights.sort_unstable_by(|a, b| b.cmp(a));
    Ok(weights)
}

pub fn generate(spec: &KnapsackSpec) -> Result<KnapsackInstance> {
    let weights = draw_weights(spec)?;
    let (items, knaps) = (spec.num_items, spec.num_knapsacks);
    let profits: Vec<i64> = if spec.reverse { weights.iter().rev().copied().collect() } else { weights.clone() };
    let total: i64 = weights.iter().sum();
    let capacities: Vec<i64> = (0..knaps as i64).map(|k| total / (2 * knaps as i64) + k).collect();

    let n = items * knaps;
    let mut objective = Vec::with_capacity(n);
    for _ in 0..knaps {
        objective.extend(profits.iter().map(|&p| p as f64));
    }
    let mut rows = Vec::with_capacity(knaps + items);
    for (k, &cap) in capacities.iter().enumerate() {
        let mut coeffs = vec![0.0; n];
        for (i, &w) in weights.iter().enumerate() {
            coeffs[k * items + i] = w as f64;
        }
        rows.push(LinearConstraint::new(coeffs, Sense::Le, cap as f64, RowOrigin::Original));
    }
    for i in 0..items {
        let mut coeffs = vec![0.0; n];
        for k in 0..knaps {
            coeffs[k * items + i] = 1.0;
        }
        rows.push(LinearConstraint::new(coeffs, Sense::Le, 1.0, RowOrigin::Original));
    }
    let ip = IpInstance::binary(objective, rows)?;
    Ok(KnapsackInstance { spec: spec.clone(), structure: KnapsackStructure { weights, capacities }, ip })
}

/// An extended cover cut with the cover it came from (0-based, inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct CoverCut {
    pub knapsack: usize,
    pub first: usize,
    pub last: usize,
    pub cut: CutPlane,
}

/// For each knapsack `k` and item `i`, the minimal `j > i` with
/// `w_i + ... + w_j > W_k` gives `sum_{l <= j} x_{k,l} <= j - i`.
/// Items heavier than `W_k` are skipped.
pub fn extended_covers(structure: &KnapsackStructure) -> Vec<CoverCut> {
    let items = structure.num_items();
    let n = items * structure.num_knapsacks();
    let mut out: Vec<CoverCut> = Vec::new();
    for (k, &cap) in structure.capacities.iter().enumerate() {
        for i in 0..items {
            let mut sum = structure.weights[i];
            // an item that alone exceeds the capacity heads no minimal cover
            if sum > cap {
                continue;
            }
            let Some(j) = (i + 1..items).find(|&j| {
                sum += structure.weights[j];
                sum > cap
            }) else {
                continue;
            };
            debug_assert!(sum - structure.weights[j] <= cap, "cover {i}..={j} is not minimal");
            let mut alpha = vec![0.0; n];
            for l in 0..=j {
                alpha[structure.var(k, l)] = 1.0;
            }
            let cut = CutPlane { alpha, beta: (j - i) as f64 };
            if !out.iter().any(|c| c.cut == cut) {
                out.push(CoverCut { knapsack: k, first: i, last: j, cut });
            }
        }
    }
    out
}

pub fn extended_cover_cuts(structure: &KnapsackStructure) -> Vec<CutPlane> {
    extended_covers(structure).into_iter().map(|c| c.cut).collect()
}

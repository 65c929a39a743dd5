//! Exact comparison of convex combinations of doubles.
//!
//! Every finite double is `m * 2^e` with integer `m`, so sums and products of
//! doubles are exact in big-integer arithmetic. Comparing combined scores
//! this way keeps each pairwise comparison linear in the weight.

use std::cmp::Ordering;

use num_bigint::BigInt;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Dyadic {
    mant: BigInt,
    exp: i32,
}

impl Dyadic {
    fn from_f64(v: f64) -> Dyadic {
        if v == 0.0 {
            return Dyadic { mant: BigInt::from(0), exp: 0 };
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1i64 << 52), raw_exp - 1075) };
        Dyadic { mant: BigInt::from(sign * m), exp: e }
    }

    fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic { mant: &self.mant * &other.mant, exp: self.exp + other.exp }
    }

    fn aligned(&self, exp: i32) -> BigInt {
        &self.mant << (self.exp - exp) as usize
    }

    fn add(&self, other: &Dyadic) -> Dyadic {
        let exp = self.exp.min(other.exp);
        Dyadic { mant: self.aligned(exp) + other.aligned(exp), exp }
    }

    fn sub(&self, other: &Dyadic) -> Dyadic {
        let exp = self.exp.min(other.exp);
        Dyadic { mant: self.aligned(exp) - other.aligned(exp), exp }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.min(other.exp);
        self.aligned(exp).cmp(&other.aligned(exp))
    }
}

/// The real number `w * s1 + (1 - w) * s2`, infinite when an infinite score
/// carries positive weight.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Combined {
    NegInf,
    Finite(Dyadic),
    PosInf,
}

impl Combined {
    pub(crate) fn new(s1: f64, s2: f64, w: f64) -> Result<Combined> {
        if s1.is_nan() || s2.is_nan() {
            return Err(Error::Numerical("score is NaN".into()));
        }
        let terms = [(s1, w > 0.0), (s2, w < 1.0)];
        let infinite: Vec<f64> = terms.iter().filter(|(s, used)| *used && s.is_infinite()).map(|(s, _)| *s).collect();
        if let Some(&first) = infinite.first() {
            if infinite.iter().any(|&s| s != first) {
                return Err(Error::Numerical("opposite infinite scores in one combination".into()));
            }
            return Ok(if first > 0.0 { Combined::PosInf } else { Combined::NegInf });
        }
        let one = Dyadic::from_f64(1.0);
        let dw = Dyadic::from_f64(w);
        let mut total = Dyadic::from_f64(0.0);
        if w > 0.0 {
            total = total.add(&dw.mul(&Dyadic::from_f64(s1)));
        }
        if w < 1.0 {
            total = total.add(&one.sub(&dw).mul(&Dyadic::from_f64(s2)));
        }
        Ok(Combined::Finite(total))
    }
}

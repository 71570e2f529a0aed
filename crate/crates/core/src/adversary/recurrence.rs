use serde::Serialize;

use crate::error::{BuybackError, Result};
use crate::weight::float17;

/// Values below this (after renormalization) count as negative.
pub const NEGATIVE_THRESHOLD: f64 = -1e-12;

const RENORM_HIGH: f64 = 1e100;
const RENORM_LOW: f64 = 1e-100;

#[derive(Debug, Clone, Serialize)]
pub struct ZSequence {
    #[serde(serialize_with = "float17::serialize")]
    pub beta: f64,
    pub k: usize,
    #[serde(serialize_with = "float17::serialize")]
    pub f: f64,
    /// Terms up to a positive factor: whenever a term leaves `[1e-100, 1e100]` in
    /// magnitude, it and its predecessor are rescaled to keep the recurrence finite.
    pub z: Vec<f64>,
    pub renormalizations: usize,
    #[serde(serialize_with = "float17::serialize")]
    pub discriminant: f64,
    pub first_negative_index: Option<usize>,
}

/// `(1 + β)² − 4kβ(1 + f)`.
pub fn discriminant(beta: f64, k: usize, f: f64) -> f64 {
    (1.0 + beta).powi(2) - 4.0 * k as f64 * beta * (1.0 + f)
}

/// Iterates `k z_{i+1} = (1 + β) z_i − β(1 + f) z_{i−1}` from `z_0 = 0, z_1 = 1`.
pub fn z_sequence(beta: f64, k: usize, f: f64, n_terms: usize) -> Result<ZSequence> {
    if beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
        return Err(BuybackError::Domain(format!("beta must be positive, got {beta}")));
    }
    if n_terms < 2 {
        return Err(BuybackError::Domain(format!("need at least 2 terms, got {n_terms}")));
    }
    if k == 0 || f.is_nan() || f < 0.0 {
        return Err(BuybackError::Domain(format!("need k ≥ 1 and f ≥ 0, got k={k}, f={f}")));
    }
    let a = (1.0 + beta) / k as f64;
    let b = beta * (1.0 + f) / k as f64;
    let mut z = Vec::with_capacity(n_terms);
    z.push(0.0);
    z.push(1.0);
    let mut renormalizations = 0;
    let mut first_negative_index = None;
    for i in 2..n_terms {
        let (prev, cur) = (z[i - 2], z[i - 1]);
        let mut next = a * cur - b * prev;
        let mag = next.abs();
        if mag > RENORM_HIGH || (mag < RENORM_LOW && mag > 0.0) {
            next /= mag;
            z[i - 1] = cur / mag;
            renormalizations += 1;
        }
        if first_negative_index.is_none() && next < NEGATIVE_THRESHOLD {
            first_negative_index = Some(i);
        }
        z.push(next);
    }
    Ok(ZSequence { beta, k, f, z, renormalizations, discriminant: discriminant(beta, k, f), first_negative_index })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Positivity {
    Consistent { terms: usize },
    /// Index of the first negative term, i.e. how many terms the refutation needed.
    Refuted { index: usize },
}

pub fn positivity_check(seq: &ZSequence) -> Positivity {
    match seq.z.iter().position(|&v| v < NEGATIVE_THRESHOLD) {
        Some(index) => Positivity::Refuted { index },
        None => Positivity::Consistent { terms: seq.z.len() },
    }
}

//! Rewinding adversary on a growing bipartite graph (two partition matroids,
//! capacity one per vertex).
//!
//! The algorithm holds one edge `ex_i = (u, v)`. Probes are single edges
//! `(u, fresh)` of weight `t·ε`; each probe is run on a snapshot and rolled
//! back. Once the smallest accepted level `t` is known, the step is committed
//! as `ey_i = (fresh, v)` at `(t−1)·ε` followed by `ex_{i+1} = (u, fresh)` at
//! `t·ε`. The lighter edge goes first so that it is judged against the same
//! state the probes saw; presented second it would find `v` already free.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, FromPrimitive, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::engine::{Decision, OnlineAlgorithm};
use crate::error::{BuybackError, Result};
use crate::matroid::{Element, MatroidDescriptor, Membership};
use crate::weight::{float17, opt_ratio_serde, ratio_to_f64, ElementId, Weight};

#[derive(Debug, Clone)]
pub struct K2Config {
    pub f: Weight,
    pub eps: Weight,
    pub max_steps: usize,
    /// Probes never exceed this weight; reaching it counts as divergence.
    pub weight_cap: Weight,
}

impl Default for K2Config {
    fn default() -> Self {
        K2Config {
            f: Weight::zero(),
            eps: Weight::from_ratio(1, 10_000),
            max_steps: 30,
            weight_cap: Weight::from_integer(1_000_000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeRole {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryEdge {
    pub id: ElementId,
    pub left: usize,
    pub right: usize,
    pub weight: Weight,
    pub role: EdgeRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    /// Step whose probing failed (1-based, holding `ex_step`).
    pub step: usize,
    pub reason: String,
    /// `(Σ y + largest rejected probe) / utility`, absent when utility is not positive.
    #[serde(with = "opt_ratio_serde")]
    pub ratio_evidence: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryReport {
    pub eps: Weight,
    pub f: Weight,
    pub x: Vec<Weight>,
    pub y: Vec<Weight>,
    pub probes_per_step: Vec<usize>,
    /// `u_i = x_i − f Σ_{j<i} x_j`, one entry per completed step.
    #[serde(with = "ratio_vec")]
    pub utility_trajectory: Vec<BigRational>,
    /// `Σ_{j≤i} y_j + x_{i+1} − ε`.
    #[serde(with = "ratio_vec")]
    pub opt_trajectory: Vec<BigRational>,
    #[serde(with = "opt_ratio_serde")]
    pub best_ratio_lower_bound: Option<BigRational>,
    pub divergence: Option<Divergence>,
    pub edges: Vec<AdversaryEdge>,
}

mod ratio_vec {
    use num::BigRational;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use crate::weight::format_ratio;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_ratio(r))?;
        }
        seq.end()
    }
}

impl AdversaryReport {
    pub fn best_ratio_f64(&self) -> Option<f64> {
        self.best_ratio_lower_bound.as_ref().map(ratio_to_f64)
    }

    /// Largest `|x_{i+1} − y_i|` over committed steps.
    pub fn max_probe_gap(&self) -> BigRational {
        self.y
            .iter()
            .zip(self.x.iter().skip(1))
            .map(|(y, x)| (x.as_ratio() - y.as_ratio()).abs())
            .max()
            .unwrap_or_default()
    }

    /// The witness matching `{ey_1, …, ey_m}` plus a copy of the last accepted
    /// edge is independent in both partition matroids.
    pub fn witness_is_matching(&self) -> Result<bool> {
        let ys: Vec<&AdversaryEdge> = self.edges.iter().filter(|e| e.role == EdgeRole::Y).collect();
        let last_x = self.edges.iter().rev().find(|e| e.role == EdgeRole::X);
        let mut members: Vec<(usize, usize)> = ys.iter().map(|e| (e.left, e.right)).collect();
        // e' shares u with the last accepted edge and uses a vertex nobody else touches.
        if let Some(x) = last_x.filter(|_| !ys.is_empty()) {
            members.push((x.left, usize::MAX));
        }
        let ids: BTreeSet<ElementId> = (0..members.len() as u32).map(ElementId).collect();
        let side = |pick: fn(&(usize, usize)) -> usize| {
            let mut classes: Vec<usize> = members.iter().map(pick).collect();
            let distinct: BTreeMap<usize, usize> =
                classes.iter().copied().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(i, c)| (c, i)).collect();
            classes.iter_mut().for_each(|c| *c = distinct[c]);
            MatroidDescriptor::Partition {
                class_of: classes.iter().enumerate().map(|(i, &c)| (ElementId(i as u32), c)).collect(),
                capacities: vec![1; distinct.len()],
            }
        };
        Ok(side(|e| e.0).is_independent(&ids)? && side(|e| e.1).is_independent(&ids)?)
    }
}

/// Two empty partition matroids; the adversary grows them through `present`.
pub fn empty_bipartite() -> Vec<MatroidDescriptor> {
    let empty = MatroidDescriptor::Partition { class_of: BTreeMap::new(), capacities: Vec::new() };
    vec![empty.clone(), empty]
}

struct Driver<'a, A: OnlineAlgorithm> {
    alg: &'a mut A,
    eps: BigRational,
    next_id: u32,
    next_left: usize,
    next_right: usize,
    edges: Vec<AdversaryEdge>,
    probes: usize,
}

fn edge_memberships(left: usize, right: usize) -> [Membership; 2] {
    [Membership::Class { class: left, capacity: 1 }, Membership::Class { class: right, capacity: 1 }]
}

impl<A: OnlineAlgorithm> Driver<'_, A> {
    fn level_weight(&self, t: u64) -> Result<Weight> {
        Weight::new(&self.eps * BigRational::from_integer(BigInt::from(t)))
    }

    fn accepts(&mut self, u: usize, t: u64) -> Result<bool> {
        let snap = self.alg.snapshot();
        let e = Element { id: ElementId(self.next_id), weight: self.level_weight(t)? };
        let decision = self.alg.present(&e, &edge_memberships(u, self.next_right))?;
        self.alg.restore(&snap)?;
        self.probes += 1;
        Ok(decision.accepted())
    }

    /// Smallest accepted level in `1..=cap`, by doubling then bisection.
    fn search(&mut self, u: usize, cap: u64) -> Result<Option<u64>> {
        if cap == 0 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0u64, 1u64);
        loop {
            if self.accepts(u, hi)? {
                break;
            }
            if hi == cap {
                return Ok(None);
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(cap);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.accepts(u, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    fn commit(&mut self, left: usize, right: usize, weight: Weight, role: EdgeRole) -> Result<(ElementId, Decision)> {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        let e = Element { id, weight: weight.clone() };
        let decision = self.alg.present(&e, &edge_memberships(left, right))?;
        self.edges.push(AdversaryEdge { id, left, right, weight, role });
        Ok((id, decision))
    }
}

/// Drives `alg`, which must start with two empty partition matroids
/// (see [`empty_bipartite`]) and no elements.
pub fn k2_adversary<A: OnlineAlgorithm>(alg: &mut A, config: &K2Config) -> Result<AdversaryReport> {
    if !config.eps.as_ratio().is_positive() {
        return Err(BuybackError::Domain("eps must be positive".to_string()));
    }
    let eps = config.eps.as_ratio().clone();
    let cap = (config.weight_cap.as_ratio() / &eps)
        .floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| BuybackError::Domain("weight_cap / eps exceeds the probe range".to_string()))?;
    let f = config.f.as_ratio().clone();
    let mut driver = Driver { alg, eps: eps.clone(), next_id: 0, next_left: 1, next_right: 1, edges: Vec::new(), probes: 0 };

    let mut report = AdversaryReport {
        eps: config.eps.clone(),
        f: config.f.clone(),
        x: vec![Weight::one()],
        y: Vec::new(),
        probes_per_step: Vec::new(),
        utility_trajectory: Vec::new(),
        opt_trajectory: Vec::new(),
        best_ratio_lower_bound: None,
        divergence: None,
        edges: Vec::new(),
    };

    let (mut held, first) = driver.commit(0, 0, Weight::one(), EdgeRole::X)?;
    if !first.accepted() {
        report.divergence = Some(Divergence {
            step: 1,
            reason: "first edge rejected; utility stays 0".to_string(),
            ratio_evidence: None,
        });
        report.edges = driver.edges;
        return Ok(report);
    }
    let (u, mut v) = (0usize, 0usize);
    let mut x_sum_before = BigRational::zero();
    let mut y_sum = BigRational::zero();

    for step in 1..=config.max_steps {
        let x_i = report.x[step - 1].as_ratio().clone();
        let u_i = &x_i - &f * &x_sum_before;
        if driver.alg.utility() != u_i {
            return Err(BuybackError::Invariant(format!(
                "step {step}: algorithm utility differs from x_i − f·Σx_j"
            )));
        }
        driver.probes = 0;
        let Some(t) = driver.search(u, cap)? else {
            let rejected = driver.level_weight(cap)?;
            report.probes_per_step.push(driver.probes);
            report.divergence = Some(Divergence {
                step,
                reason: format!("no probe up to weight {} was accepted", config.weight_cap),
                ratio_evidence: u_i.is_positive().then(|| (&y_sum + rejected.as_ratio()) / &u_i),
            });
            break;
        };
        report.probes_per_step.push(driver.probes);

        let y_weight = driver.level_weight(t - 1)?;
        let x_weight = driver.level_weight(t)?;
        let (fresh_left, fresh_right) = (driver.next_left, driver.next_right);
        driver.next_left += 1;
        driver.next_right += 1;
        let (_, dy) = driver.commit(fresh_left, v, y_weight.clone(), EdgeRole::Y)?;
        let (x_id, dx) = driver.commit(u, fresh_right, x_weight.clone(), EdgeRole::X)?;
        match (&dy, &dx) {
            (Decision::Reject, Decision::AcceptEvict { evicted }) if evicted.contains(&held) => {}
            (d, Decision::AcceptEvict { .. } | Decision::AcceptFree) if d.accepted() => {
                return Err(BuybackError::Protocol(format!("step {step}: algorithm accepted both probe edges")));
            }
            (d, _) if d.accepted() => {
                return Err(BuybackError::Protocol(format!(
                    "step {step}: lighter edge accepted but heavier rejected; acceptance is not monotone"
                )));
            }
            _ => {
                return Err(BuybackError::Protocol(format!(
                    "step {step}: committed edge decided {dx:?}, differing from its probe"
                )));
            }
        }
        held = x_id;
        v = fresh_right;

        y_sum += y_weight.as_ratio();
        let opt_i = &y_sum + x_weight.as_ratio() - &eps;
        report.y.push(y_weight);
        report.x.push(x_weight);
        report.utility_trajectory.push(u_i);
        report.opt_trajectory.push(opt_i);
        x_sum_before += x_i;
    }

    let mut candidates: Vec<BigRational> = report
        .utility_trajectory
        .iter()
        .zip(&report.opt_trajectory)
        .filter(|(u, _)| u.is_positive())
        .map(|(u, o)| o / u)
        .collect();
    if let Some(ev) = report.divergence.as_ref().and_then(|d| d.ratio_evidence.clone()) {
        candidates.push(ev);
    }
    report.best_ratio_lower_bound = candidates.into_iter().max();
    report.edges = driver.edges;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceCheck {
    pub i: usize,
    #[serde(serialize_with = "float17::serialize")]
    pub lhs: f64,
    #[serde(serialize_with = "float17::serialize")]
    pub rhs: f64,
    /// `lhs − rhs + (i+2)ε`; negative means the inequality fails.
    #[serde(serialize_with = "float17::serialize")]
    pub residual: f64,
    pub holds: bool,
    /// `x_{i+1} + (k−1) Σ_{j=2}^{i+1} x_j − opt_i`: how far the witnessed
    /// matching falls short of the ε-free right-hand side.
    #[serde(serialize_with = "float17::serialize")]
    pub epsilon_gap: f64,
    /// Same inequality after dropping `x_1` and scaling `x_2` to 1; absent at `i = 1`.
    pub rescaled_holds: Option<bool>,
}

/// Checks `β(x_i − f Σ_{j<i} x_j) ≥ x_{i+1} + (k−1) Σ_{j=2}^{i+1} x_j − (i+2)ε`
/// for every completed step, and its rescaled form.
pub fn verify_sequence_inequality(report: &AdversaryReport, beta: f64, k: usize) -> Result<Vec<SequenceCheck>> {
    let beta_q = BigRational::from_f64(beta)
        .ok_or_else(|| BuybackError::Domain(format!("beta must be finite, got {beta}")))?;
    if k == 0 {
        return Err(BuybackError::Domain("k must be at least 1".to_string()));
    }
    let km1 = BigRational::from_integer(BigInt::from(k - 1));
    let f = report.f.as_ratio();
    let eps = report.eps.as_ratio();
    let x: Vec<&BigRational> = report.x.iter().map(Weight::as_ratio).collect();
    let int = |n: usize| BigRational::from_integer(BigInt::from(n));
    let prefix = |from: usize, to: usize| -> BigRational {
        // Σ_{j=from}^{to} x_j, 1-based
        (from..=to).map(|j| x[j - 1].clone()).sum()
    };

    let mut out = Vec::new();
    for (idx, opt_i) in report.opt_trajectory.iter().enumerate() {
        let i = idx + 1;
        let lhs = &beta_q * (x[i - 1] - f * prefix(1, i - 1));
        let rhs_free = x[i].clone() + &km1 * prefix(2, i + 1);
        let allowance = int(i + 2) * eps;
        let residual = &lhs - &rhs_free + &allowance;

        let rescaled_holds = (i >= 2).then(|| {
            // x'_j = x_{j+1} / x_2, checked at i' = i − 1
            let x2 = x[1];
            let lhs = &beta_q * (x[i - 1] - f * prefix(2, i - 1)) / x2;
            let rhs = (x[i].clone() + &km1 * prefix(2, i + 1)) / x2;
            lhs - rhs + &allowance / x2 >= BigRational::zero()
        });

        out.push(SequenceCheck {
            i,
            lhs: ratio_to_f64(&lhs),
            rhs: ratio_to_f64(&rhs_free),
            residual: ratio_to_f64(&residual),
            holds: !residual.is_negative(),
            epsilon_gap: ratio_to_f64(&(&rhs_free - opt_i)),
            rescaled_holds,
        });
    }
    Ok(out)
}

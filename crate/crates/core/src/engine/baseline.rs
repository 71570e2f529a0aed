//! Single-element buyback for arbitrary downward-closed systems.
//!
//! Holds at most one element and runs the rank-one rule: swap when the
//! newcomer is at least `r` times heavier than the held element. Since every
//! feasible set has at most `n` elements, this is within `n · c₁` of the
//! optimum, where `c₁ = 1 + 2f + 2√(f(1+f))`.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, One, Zero};

use super::ratio::optimal_r_rational;
use super::{Decision, RunReport, StepRecord};
use crate::error::{BuybackError, Result};
use crate::instance::Instance;
use crate::matroid::Element;
use crate::weight::{ElementId, Weight};

#[derive(Debug, Clone)]
pub struct SingleElementBaseline {
    f: Weight,
    r: BigRational,
    held: Option<ElementId>,
    weights: BTreeMap<ElementId, Weight>,
    accepted: Vec<ElementId>,
    canceled: Vec<ElementId>,
    trace: Vec<StepRecord>,
}

impl SingleElementBaseline {
    /// Uses the rank-one optimal threshold for `f`.
    pub fn new(f: Weight) -> Self {
        let r = optimal_r_rational(1, f.as_ratio());
        Self::with_threshold(f, r)
    }

    pub fn with_threshold(f: Weight, r: BigRational) -> Self {
        SingleElementBaseline {
            f,
            r,
            held: None,
            weights: BTreeMap::new(),
            accepted: Vec::new(),
            canceled: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn threshold(&self) -> &BigRational {
        &self.r
    }

    pub fn held(&self) -> Option<ElementId> {
        self.held
    }

    /// `feasible` says whether `{e}` alone is independent; infeasible elements are rejected.
    pub fn offer(&mut self, e: &Element, feasible: bool) -> Result<Decision> {
        if self.weights.insert(e.id, e.weight.clone()).is_some() {
            return Err(BuybackError::DuplicateElement(e.id));
        }
        let decision = match self.held {
            _ if !feasible => Decision::Reject,
            None => Decision::AcceptFree,
            Some(h) => {
                let held_w = self.weights[&h].as_ratio();
                // A swap must also strictly gain weight; at r = 1 this stops churn between equals.
                if e.weight.as_ratio() >= &(&self.r * held_w) && e.weight.as_ratio() > held_w {
                    Decision::AcceptEvict { evicted: BTreeSet::from([h]) }
                } else {
                    Decision::Reject
                }
            }
        };
        match &decision {
            Decision::AcceptFree => {
                self.held = Some(e.id);
                self.accepted.push(e.id);
            }
            Decision::AcceptEvict { evicted } => {
                self.canceled.extend(evicted.iter().copied());
                self.held = Some(e.id);
                self.accepted.push(e.id);
            }
            Decision::Reject => {}
        }
        self.trace.push(StepRecord {
            step: self.trace.len() + 1,
            element: e.id,
            decision: decision.clone(),
            weight: e.weight.clone(),
            probes: Vec::new(),
        });
        Ok(decision)
    }

    pub fn utility(&self) -> BigRational {
        let sum = |ids: &[ElementId]| -> BigRational {
            ids.iter().map(|id| self.weights[id].as_ratio().clone()).sum()
        };
        sum(&self.accepted) - (BigRational::one() + self.f.as_ratio()) * sum(&self.canceled)
    }

    pub fn report(&self) -> RunReport {
        let final_set: BTreeSet<ElementId> = self.held.into_iter().collect();
        let final_weight = self.held.map(|h| self.weights[&h].clone()).unwrap_or_default();
        let canceled: BigRational = self.canceled.iter().map(|id| self.weights[id].as_ratio().clone()).sum();
        RunReport {
            trace: self.trace.clone(),
            final_set,
            final_weight,
            utility: self.utility(),
            penalty_total: if canceled.is_zero() { canceled } else { self.f.as_ratio() * canceled },
            opt_weight: None,
            observed_ratio: None,
        }
    }
}

/// Runs the baseline over any instance; each singleton is checked against every descriptor.
pub fn single_element_baseline(instance: &Instance) -> Result<RunReport> {
    instance.validate()?;
    let mut alg = SingleElementBaseline::new(instance.f.clone());
    for id in &instance.order {
        let e = instance.element(*id).ok_or(BuybackError::UnknownElement(*id))?;
        let feasible = instance.independent(&BTreeSet::from([e.id]))?;
        alg.offer(e, feasible)?;
    }
    Ok(alg.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::parse_ratio;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    #[test]
    fn equal_weights_keep_the_first_element() {
        let mut alg = SingleElementBaseline::new(w("0"));
        for i in 0..4 {
            alg.offer(&Element::new(i, w("1")), true).unwrap();
        }
        assert_eq!(alg.held(), Some(ElementId(0)));
        assert_eq!(alg.utility(), BigRational::one());
    }

    #[test]
    fn swap_pays_the_penalty() {
        // f = 1: r ≈ 3.414, 4 ≥ 3.414 → swap; utility = 5 − 2·1
        let mut alg = SingleElementBaseline::new(w("1"));
        alg.offer(&Element::new(0, w("1")), true).unwrap();
        let d = alg.offer(&Element::new(1, w("4")), true).unwrap();
        assert_eq!(d, Decision::AcceptEvict { evicted: BTreeSet::from([ElementId(0)]) });
        assert_eq!(alg.utility(), parse_ratio("3").unwrap());
        assert_eq!(alg.report().penalty_total, parse_ratio("1").unwrap());
    }

    #[test]
    fn infeasible_singletons_are_skipped() {
        let mut alg = SingleElementBaseline::new(w("0"));
        assert_eq!(alg.offer(&Element::new(0, w("9")), false).unwrap(), Decision::Reject);
        assert_eq!(alg.held(), None);
    }
}

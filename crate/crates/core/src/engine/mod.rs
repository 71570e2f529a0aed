//! The online buyback engine.
//!
//! [`AlgorithmState`] keeps an independent set `S` and decides each arrival
//! with one of two rules:
//!
//! * [`AlgorithmState::process_element`]: per matroid, find the lightest
//!   element whose removal repairs `S ∪ {e}`; accept `e` and evict those
//!   elements when `w(e) ≥ r · Σ_j w(e_j)`.
//! * [`AlgorithmState::process_element_greedy`]: run offline greedy on
//!   `S ∪ {e}` and accept when `w(e) ≥ r · w(dropped)`.
//!
//! Canceling an accepted element of weight `w` costs `f · w`, so the utility
//! is `Σ_accepted w − (1 + f) · Σ_canceled w`.

pub mod baseline;
pub mod ratio;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{BuybackError, Result};
use crate::instance::{Instance, Threshold};
use crate::matroid::{Element, MatroidDescriptor, Membership};
use crate::weight::{opt_ratio_serde, ratio_serde, ElementId, Weight};

static NEXT_RUN_ID: AtomicU64 = AtomicU64::new(1);

fn next_run_id() -> u64 {
    NEXT_RUN_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Alg1,
    Alg2,
    SingleElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RMode {
    Explicit,
    /// Rational upper approximation of the irrational optimum.
    OptimalFloat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    pub k: usize,
    pub f: Weight,
    pub r: BigRational,
    pub r_mode: RMode,
}

impl Params {
    pub fn new(k: usize, f: Weight, threshold: &Threshold) -> Result<Self> {
        if k == 0 {
            return Err(BuybackError::Input("k must be at least 1".to_string()));
        }
        let r = threshold.resolve(k, &f);
        if r < BigRational::one() {
            return Err(BuybackError::Domain(format!("threshold r = {r} is below 1")));
        }
        let r_mode = match threshold {
            Threshold::Optimal => RMode::OptimalFloat,
            Threshold::Explicit(_) => RMode::Explicit,
        };
        Ok(Params { k, f, r, r_mode })
    }

    pub fn from_instance(instance: &Instance) -> Result<Self> {
        Params::new(instance.k, instance.f.clone(), &instance.r)
    }

    /// Exact `c = (k r − 1) r / (r − 1 − f)`; a domain error unless `r > 1 + f`.
    pub fn competitive_ratio(&self) -> Result<BigRational> {
        ratio::competitive_ratio_exact(self.k, self.f.as_ratio(), &self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    AcceptFree,
    AcceptEvict { evicted: BTreeSet<ElementId> },
    Reject,
}

impl Decision {
    pub fn accepted(&self) -> bool {
        !matches!(self, Decision::Reject)
    }
}

/// What one matroid saw when an element arrived: the circuit of `S ∪ {e}`
/// (if dependent) and the lightest repairing element (if any).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatroidProbe {
    pub circuit: Option<BTreeSet<ElementId>>,
    pub evict: Option<ElementId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub element: ElementId,
    pub decision: Decision,
    #[serde(skip)]
    pub weight: Weight,
    /// Filled by the circuit rule only; empty for the greedy rule and on free accepts.
    #[serde(skip)]
    pub probes: Vec<MatroidProbe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rule {
    #[default]
    Circuit,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct AlgorithmState {
    run_id: u64,
    params: Params,
    rule: Rule,
    matroids: Vec<MatroidDescriptor>,
    weights: BTreeMap<ElementId, Weight>,
    current: BTreeSet<ElementId>,
    accepted_log: Vec<ElementId>,
    canceled_log: Vec<ElementId>,
    /// Penalty accounted to each accepted element: its own evictions plus theirs, recursively.
    penalty_account: BTreeMap<ElementId, BigRational>,
    utility: BigRational,
    trace: Vec<StepRecord>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    run_id: u64,
    state: Box<AlgorithmState>,
}

impl AlgorithmState {
    pub fn new(params: Params, matroids: Vec<MatroidDescriptor>) -> Result<Self> {
        if matroids.len() != params.k {
            return Err(BuybackError::Input(format!(
                "k = {} but {} matroids given",
                params.k,
                matroids.len()
            )));
        }
        if let Some(m) = matroids.iter().find(|m| !m.is_matroid()) {
            return Err(BuybackError::Unsupported { op: "buyback engine", kind: m.kind() });
        }
        Ok(AlgorithmState {
            run_id: next_run_id(),
            params,
            rule: Rule::Circuit,
            matroids,
            weights: BTreeMap::new(),
            current: BTreeSet::new(),
            accepted_log: Vec::new(),
            canceled_log: Vec::new(),
            penalty_account: BTreeMap::new(),
            utility: BigRational::zero(),
            trace: Vec::new(),
        })
    }

    pub fn from_instance(instance: &Instance) -> Result<Self> {
        instance.validate()?;
        AlgorithmState::new(Params::from_instance(instance)?, instance.matroids.clone())
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn matroids(&self) -> &[MatroidDescriptor] {
        &self.matroids
    }

    pub fn current(&self) -> &BTreeSet<ElementId> {
        &self.current
    }

    pub fn accepted_log(&self) -> &[ElementId] {
        &self.accepted_log
    }

    pub fn canceled_log(&self) -> &[ElementId] {
        &self.canceled_log
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    pub fn step(&self) -> usize {
        self.trace.len()
    }

    pub fn weights(&self) -> &BTreeMap<ElementId, Weight> {
        &self.weights
    }

    pub fn penalty_account(&self, id: ElementId) -> Option<&BigRational> {
        self.penalty_account.get(&id)
    }

    pub fn current_weight(&self) -> Weight {
        self.current.iter().map(|id| &self.weights[id]).sum()
    }

    /// `Σ_A w − (1 + f) Σ_R w`, recomputed from the logs.
    pub fn utility(&self) -> BigRational {
        let accepted: Weight = self.accepted_log.iter().map(|id| &self.weights[id]).sum();
        let canceled: Weight = self.canceled_log.iter().map(|id| &self.weights[id]).sum();
        accepted.into_ratio() - (BigRational::one() + self.params.f.as_ratio()) * canceled.into_ratio()
    }

    /// `f · Σ_R w`.
    pub fn penalty_total(&self) -> BigRational {
        let canceled: Weight = self.canceled_log.iter().map(|id| &self.weights[id]).sum();
        self.params.f.as_ratio() * canceled.into_ratio()
    }

    pub fn independent_everywhere<I>(&self, ids: I) -> Result<bool>
    where
        I: IntoIterator<Item = ElementId> + Clone,
    {
        for m in &self.matroids {
            if !m.independent_ids(ids.clone())? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn admit(&mut self, e: &Element) -> Result<()> {
        if self.weights.contains_key(&e.id) {
            return Err(BuybackError::DuplicateElement(e.id));
        }
        if !self.independent_everywhere(self.current.iter().copied())? {
            return Err(BuybackError::Invariant(format!(
                "current set is dependent before step {}",
                self.step() + 1
            )));
        }
        for m in &self.matroids {
            if !m.covers(e.id) {
                return Err(BuybackError::UnknownElement(e.id));
            }
        }
        self.weights.insert(e.id, e.weight.clone());
        Ok(())
    }

    fn union_with(&self, e: ElementId) -> impl Iterator<Item = ElementId> + Clone + '_ {
        self.current.iter().copied().chain(std::iter::once(e))
    }

    /// Circuit rule: evict the lightest repairing element of every violated matroid.
    pub fn process_element(&mut self, e: &Element) -> Result<Decision> {
        self.admit(e)?;
        if self.independent_everywhere(self.union_with(e.id))? {
            return self.commit(e, Decision::AcceptFree, Vec::new());
        }

        let mut probes = Vec::with_capacity(self.matroids.len());
        let mut is_loop = false;
        for m in &self.matroids {
            let circuit = m.circuit(&self.current, e.id)?;
            let evict = circuit.as_ref().and_then(|c| {
                c.iter()
                    .filter(|&&x| x != e.id)
                    .min_by(|&a, &b| self.weights[a].cmp(&self.weights[b]).then(a.cmp(b)))
                    .copied()
            });
            is_loop |= circuit.as_ref().is_some_and(|c| c.len() == 1);
            probes.push(MatroidProbe { circuit, evict });
        }
        if is_loop {
            return self.commit(e, Decision::Reject, probes);
        }

        // Σ_j w(e_j) with a repeated target counted once per matroid that chose it.
        let blocking: Weight = probes.iter().filter_map(|p| p.evict).map(|x| &self.weights[&x]).sum();
        let decision = if e.weight.as_ratio() >= &(&self.params.r * blocking.as_ratio()) {
            Decision::AcceptEvict { evicted: probes.iter().filter_map(|p| p.evict).collect() }
        } else {
            Decision::Reject
        };
        self.commit(e, decision, probes)
    }

    /// Greedy rule: keep what offline greedy keeps on `S ∪ {e}`.
    pub fn process_element_greedy(&mut self, e: &Element) -> Result<Decision> {
        self.admit(e)?;
        if self.independent_everywhere(self.union_with(e.id))? {
            return self.commit(e, Decision::AcceptFree, Vec::new());
        }
        if !self.independent_everywhere(std::iter::once(e.id))? {
            return self.commit(e, Decision::Reject, Vec::new());
        }

        let mut candidates: Vec<ElementId> = self.union_with(e.id).collect();
        candidates.sort_by(|a, b| self.weights[b].cmp(&self.weights[a]).then(a.cmp(b)));
        let mut kept: Vec<ElementId> = Vec::with_capacity(candidates.len());
        for x in candidates {
            kept.push(x);
            if !self.independent_everywhere(kept.iter().copied())? {
                kept.pop();
            }
        }
        if !kept.contains(&e.id) {
            return self.commit(e, Decision::Reject, Vec::new());
        }
        let dropped: BTreeSet<ElementId> =
            self.current.iter().copied().filter(|x| !kept.contains(x)).collect();
        let dropped_weight: Weight = dropped.iter().map(|x| &self.weights[x]).sum();
        let decision = if e.weight.as_ratio() >= &(&self.params.r * dropped_weight.as_ratio()) {
            Decision::AcceptEvict { evicted: dropped }
        } else {
            Decision::Reject
        };
        self.commit(e, decision, Vec::new())
    }

    /// Dispatches on the configured [`Rule`].
    pub fn process(&mut self, e: &Element) -> Result<Decision> {
        match self.rule {
            Rule::Circuit => self.process_element(e),
            Rule::Greedy => self.process_element_greedy(e),
        }
    }

    fn commit(&mut self, e: &Element, decision: Decision, probes: Vec<MatroidProbe>) -> Result<Decision> {
        let one_plus_f = BigRational::one() + self.params.f.as_ratio();
        match &decision {
            Decision::AcceptFree => {
                self.current.insert(e.id);
                self.accepted_log.push(e.id);
                self.penalty_account.insert(e.id, BigRational::zero());
                self.utility += e.weight.as_ratio();
            }
            Decision::AcceptEvict { evicted } => {
                let mut account = BigRational::zero();
                let mut evicted_weight = BigRational::zero();
                for x in evicted {
                    if !self.current.remove(x) {
                        return Err(BuybackError::Invariant(format!("evicted {x} is not held")));
                    }
                    self.canceled_log.push(*x);
                    let w = self.weights[x].as_ratio();
                    account += self.params.f.as_ratio() * w + &self.penalty_account[x];
                    evicted_weight += w;
                }
                self.current.insert(e.id);
                self.accepted_log.push(e.id);
                self.penalty_account.insert(e.id, account);
                self.utility += e.weight.as_ratio() - one_plus_f * evicted_weight;
            }
            Decision::Reject => {}
        }
        self.trace.push(StepRecord {
            step: self.trace.len() + 1,
            element: e.id,
            decision: decision.clone(),
            weight: e.weight.clone(),
            probes,
        });

        if self.utility != self.utility() {
            return Err(BuybackError::Invariant(format!(
                "utility ledger drifted at step {}",
                self.step()
            )));
        }
        if !self.independent_everywhere(self.current.iter().copied())? {
            return Err(BuybackError::Invariant(format!(
                "current set dependent after step {}",
                self.step()
            )));
        }
        Ok(decision)
    }

    /// Registers the element's matroid memberships, then decides it.
    pub fn present(&mut self, e: &Element, memberships: &[Membership]) -> Result<Decision> {
        if memberships.len() != self.matroids.len() {
            return Err(BuybackError::Input(format!(
                "{} memberships for {} matroids",
                memberships.len(),
                self.matroids.len()
            )));
        }
        let saved = self.matroids.clone();
        for (m, &membership) in self.matroids.iter_mut().zip(memberships) {
            if let Err(err) = m.extend(e.id, membership) {
                self.matroids = saved;
                return Err(err);
            }
        }
        self.process(e)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { run_id: self.run_id, state: Box::new(self.clone()) }
    }

    pub fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        if snapshot.run_id != self.run_id {
            return Err(BuybackError::StaleSnapshot { token: snapshot.run_id, state: self.run_id });
        }
        *self = (*snapshot.state).clone();
        Ok(())
    }

    /// Accounted-penalty bound `P(e) ≤ f · w_e / (r − 1)` for every accepted element,
    /// and the total `f · Σ_R w ≤ f · w(S) / (r − 1)`. Returns the offending ids.
    pub fn penalty_bound_violations(&self) -> Result<Vec<ElementId>> {
        let slack = &self.params.r - BigRational::one();
        if !slack.is_positive() {
            return Err(BuybackError::Domain("penalty bound needs r > 1".to_string()));
        }
        let f = self.params.f.as_ratio();
        let mut bad: Vec<ElementId> = self
            .penalty_account
            .iter()
            .filter(|(id, p)| *p * &slack > f * self.weights[id].as_ratio())
            .map(|(id, _)| *id)
            .collect();
        let held: BigRational = self.current.iter().map(|id| &self.penalty_account[id]).sum();
        if held != self.penalty_total() || self.penalty_total() * &slack > f * self.current_weight().as_ratio() {
            bad.extend(self.current.iter().copied());
        }
        Ok(bad)
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            trace: self.trace.clone(),
            final_set: self.current.clone(),
            final_weight: self.current_weight(),
            utility: self.utility(),
            penalty_total: self.penalty_total(),
            opt_weight: None,
            observed_ratio: None,
        }
    }
}

/// Interface the rewinding adversary drives.
pub trait OnlineAlgorithm {
    type Snapshot: Clone;

    fn present(&mut self, element: &Element, memberships: &[Membership]) -> Result<Decision>;
    fn current(&self) -> &BTreeSet<ElementId>;
    fn utility(&self) -> BigRational;
    fn snapshot(&self) -> Self::Snapshot;
    fn restore(&mut self, snapshot: &Self::Snapshot) -> Result<()>;
}

impl OnlineAlgorithm for AlgorithmState {
    type Snapshot = Snapshot;

    fn present(&mut self, element: &Element, memberships: &[Membership]) -> Result<Decision> {
        AlgorithmState::present(self, element, memberships)
    }

    fn current(&self) -> &BTreeSet<ElementId> {
        &self.current
    }

    fn utility(&self) -> BigRational {
        AlgorithmState::utility(self)
    }

    fn snapshot(&self) -> Snapshot {
        AlgorithmState::snapshot(self)
    }

    fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        AlgorithmState::restore(self, snapshot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub trace: Vec<StepRecord>,
    pub final_set: BTreeSet<ElementId>,
    pub final_weight: Weight,
    #[serde(with = "ratio_serde")]
    pub utility: BigRational,
    #[serde(with = "ratio_serde")]
    pub penalty_total: BigRational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt_weight: Option<Weight>,
    #[serde(with = "opt_ratio_serde", skip_serializing_if = "Option::is_none")]
    pub observed_ratio: Option<BigRational>,
}

impl RunReport {
    /// Attaches the offline optimum; the ratio is reported only for positive utility.
    pub fn with_opt(mut self, opt: Weight) -> Self {
        self.observed_ratio =
            self.utility.is_positive().then(|| opt.as_ratio() / &self.utility);
        self.opt_weight = Some(opt);
        self
    }

    pub fn decisions(&self) -> Vec<(ElementId, Decision)> {
        self.trace.iter().map(|s| (s.element, s.decision.clone())).collect()
    }
}

/// Feeds the instance's arrival order through the chosen variant.
pub fn run_stream(instance: &Instance, variant: Variant) -> Result<RunReport> {
    instance.validate()?;
    let rule = match variant {
        Variant::Alg1 => Rule::Circuit,
        Variant::Alg2 => Rule::Greedy,
        Variant::SingleElement => return baseline::single_element_baseline(instance),
    };
    let state = run_state(instance, rule)?;
    Ok(state.report())
}

/// Runs the engine and returns the final state (for auditing and invariant checks).
pub fn run_state(instance: &Instance, rule: Rule) -> Result<AlgorithmState> {
    let mut state = AlgorithmState::from_instance(instance)?.with_rule(rule);
    for id in &instance.order {
        let e = instance.element(*id).ok_or(BuybackError::UnknownElement(*id))?;
        state.process(e)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::parse_ratio;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    fn single_slot(r: &str, f: &str) -> AlgorithmState {
        let params = Params::new(1, w(f), &Threshold::Explicit(w(r))).unwrap();
        AlgorithmState::new(params, vec![MatroidDescriptor::Uniform { rank: 1 }]).unwrap()
    }

    #[test]
    fn single_slot_stream_hand_simulation() {
        let mut st = single_slot("2", "0");
        let a = Element::new(0, w("1"));
        let b = Element::new(1, w("3/2"));
        let c = Element::new(2, w("3"));
        assert_eq!(st.process_element(&a).unwrap(), Decision::AcceptFree);
        assert_eq!(st.process_element(&b).unwrap(), Decision::Reject);
        assert_eq!(
            st.process_element(&c).unwrap(),
            Decision::AcceptEvict { evicted: BTreeSet::from([ElementId(0)]) }
        );
        assert_eq!(st.utility(), parse_ratio("3").unwrap());
        assert_eq!(st.current(), &BTreeSet::from([ElementId(2)]));
        assert_eq!(st.canceled_log(), &[ElementId(0)]);
    }

    #[test]
    fn utility_identity_examples() {
        let st = single_slot("2", "0");
        assert!(st.utility().is_zero());
        let mut st = single_slot("2", "5");
        st.process_element(&Element::new(0, w("4"))).unwrap();
        assert_eq!(st.utility(), parse_ratio("4").unwrap());
    }

    #[test]
    fn two_partition_conflict_rejects_below_threshold() {
        // e conflicts with a in matroid 1 and with b in matroid 2.
        let m1 = MatroidDescriptor::Partition {
            class_of: BTreeMap::from([(ElementId(0), 0), (ElementId(1), 1), (ElementId(2), 0)]),
            capacities: vec![1, 1],
        };
        let m2 = MatroidDescriptor::Partition {
            class_of: BTreeMap::from([(ElementId(0), 0), (ElementId(1), 1), (ElementId(2), 1)]),
            capacities: vec![1, 1],
        };
        let params = Params::new(2, w("0"), &Threshold::Explicit(w("17071/10000"))).unwrap();
        let mut st = AlgorithmState::new(params, vec![m1, m2]).unwrap();
        st.process_element(&Element::new(0, w("1"))).unwrap();
        st.process_element(&Element::new(1, w("1"))).unwrap();
        assert_eq!(st.process_element(&Element::new(2, w("3"))).unwrap(), Decision::Reject);
        let probes = &st.trace()[2].probes;
        assert_eq!(probes[0].evict, Some(ElementId(0)));
        assert_eq!(probes[1].evict, Some(ElementId(1)));
    }

    #[test]
    fn loops_are_rejected() {
        let params = Params::new(1, w("0"), &Threshold::Explicit(w("1"))).unwrap();
        let mut st = AlgorithmState::new(params, vec![MatroidDescriptor::Uniform { rank: 0 }]).unwrap();
        assert_eq!(st.process_element(&Element::new(0, w("5"))).unwrap(), Decision::Reject);
        let mut st = st.with_rule(Rule::Greedy);
        assert_eq!(st.process_element_greedy(&Element::new(1, w("5"))).unwrap(), Decision::Reject);
    }

    #[test]
    fn duplicate_presentation_is_an_error() {
        let mut st = single_slot("2", "0");
        st.process_element(&Element::new(0, w("1"))).unwrap();
        assert_eq!(
            st.process_element(&Element::new(0, w("1"))),
            Err(BuybackError::DuplicateElement(ElementId(0)))
        );
    }

    #[test]
    fn threshold_below_one_is_refused() {
        assert!(Params::new(1, w("0"), &Threshold::Explicit(w("1/2"))).is_err());
        let p = Params::new(1, w("1"), &Threshold::Explicit(w("2"))).unwrap();
        assert!(p.competitive_ratio().is_err());
    }

    #[test]
    fn snapshot_restore_replays_identically() {
        let mut st = single_slot("2", "0");
        st.process_element(&Element::new(0, w("1"))).unwrap();
        let snap = st.snapshot();
        let d1 = st.process_element(&Element::new(1, w("5"))).unwrap();
        st.restore(&snap).unwrap();
        assert_eq!(st.step(), 1);
        let d2 = st.process_element(&Element::new(1, w("5"))).unwrap();
        assert_eq!(d1, d2);
        st.restore(&snap).unwrap();
        assert_eq!(st.process_element(&Element::new(2, w("1"))).unwrap(), Decision::Reject);
    }

    #[test]
    fn snapshot_from_another_run_is_stale() {
        let a = single_slot("2", "0");
        let mut b = single_slot("2", "0");
        assert!(matches!(b.restore(&a.snapshot()), Err(BuybackError::StaleSnapshot { .. })));
    }

    #[test]
    fn penalty_account_chains() {
        // f = 1, r = 2: 1 -> 2 -> 4 evictions; P(4) = 1*2 + (1*1 + 0) = 3 ≤ 1*4/(2-1)
        let mut st = single_slot("2", "1");
        for (i, x) in ["1", "2", "4"].iter().enumerate() {
            st.process_element(&Element::new(i as u32, w(x))).unwrap();
        }
        assert_eq!(st.penalty_account(ElementId(2)), Some(&parse_ratio("3").unwrap()));
        assert_eq!(st.penalty_total(), parse_ratio("3").unwrap());
        assert!(st.penalty_bound_violations().unwrap().is_empty());
    }

    #[test]
    fn present_extends_descriptors_and_rolls_back_on_error() {
        let params = Params::new(1, w("0"), &Threshold::Explicit(w("2"))).unwrap();
        let part = MatroidDescriptor::Partition { class_of: BTreeMap::new(), capacities: vec![] };
        let mut st = AlgorithmState::new(params, vec![part]).unwrap();
        let m = [Membership::Class { class: 0, capacity: 1 }];
        assert_eq!(st.present(&Element::new(0, w("1")), &m).unwrap(), Decision::AcceptFree);
        assert!(st.present(&Element::new(1, w("1")), &[Membership::Edge(0, 1)]).is_err());
        assert!(!st.matroids()[0].covers(ElementId(1)));
    }

    #[test]
    fn report_json_shape() {
        let mut st = single_slot("2", "0");
        st.process_element(&Element::new(0, w("1"))).unwrap();
        let report = st.report().with_opt(w("3"));
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["utility"], "1/1");
        assert_eq!(json["observed_ratio"], "3/1");
        assert_eq!(json["trace"][0]["decision"]["kind"], "accept_free");
        assert_eq!(json["final_set"][0], 0);
    }
}

//! Runtime verifier for the charging argument behind the final-weight bound
//! `w(S(n)) · (k r − 1) r / (r − 1) ≥ w(OPT)`.
//!
//! Alongside a run of the circuit rule we build one bipartite graph per
//! matroid. Left nodes are optimal elements that left the solution (rejected,
//! or evicted); right nodes are elements that were held. A left-saturating
//! matching that avoids optimal right nodes tells each lost optimal element
//! where to send its original charge. The ledger then replays the run,
//! moving charge along evictions, and checks that every unit of `w(OPT)`
//! ends on the final set within the per-element caps.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::ratio::{deleted_charge_factor, final_weight_factor};
use crate::engine::{run_state, Decision, Rule, StepRecord};
use crate::error::{BuybackError, Result};
use crate::instance::Instance;
use crate::matroid::MatroidDescriptor;
use crate::offline::{brute_opt, OptResult};
use crate::weight::{format_ratio, ratio_serde, ElementId, Weight};

/// Left sides up to this size get exhaustive subset checks.
pub const EXHAUSTIVE_LEFT_LIMIT: usize = 12;
const SAMPLED_SUBSETS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChargeEvent {
    Reject {
        step: usize,
        element: ElementId,
        circuits: Vec<Option<BTreeSet<ElementId>>>,
    },
    AcceptEvict {
        step: usize,
        element: ElementId,
        /// Element evicted on behalf of each matroid, if any.
        evicted: Vec<Option<ElementId>>,
        circuits: Vec<Option<BTreeSet<ElementId>>>,
    },
}

impl ChargeEvent {
    /// Free accepts leave the graphs untouched and yield no event.
    pub fn from_step(record: &StepRecord) -> Option<ChargeEvent> {
        let circuits = record.probes.iter().map(|p| p.circuit.clone()).collect();
        match record.decision {
            Decision::AcceptFree => None,
            Decision::Reject => Some(ChargeEvent::Reject { step: record.step, element: record.element, circuits }),
            Decision::AcceptEvict { .. } => Some(ChargeEvent::AcceptEvict {
                step: record.step,
                element: record.element,
                evicted: record.probes.iter().map(|p| p.evict).collect(),
                circuits,
            }),
        }
    }

    fn step(&self) -> usize {
        match self {
            ChargeEvent::Reject { step, .. } | ChargeEvent::AcceptEvict { step, .. } => *step,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChargeGraph {
    pub left: BTreeSet<ElementId>,
    /// Elements removed from the right side of this graph.
    pub deleted_right: BTreeSet<ElementId>,
    pub edges: BTreeMap<ElementId, BTreeSet<ElementId>>,
    pub matching: BTreeMap<ElementId, ElementId>,
}

impl ChargeGraph {
    pub fn neighbours<'a, I>(&self, subset: I) -> BTreeSet<ElementId>
    where
        I: IntoIterator<Item = &'a ElementId>,
    {
        subset
            .into_iter()
            .filter_map(|e| self.edges.get(e))
            .flat_map(|n| n.iter().copied())
            .collect()
    }

    pub fn right(&self) -> BTreeSet<ElementId> {
        self.neighbours(self.left.iter())
    }

    fn attach(&mut self, left: ElementId, circuit: &BTreeSet<ElementId>, skip: ElementId) {
        let targets: BTreeSet<ElementId> = circuit
            .iter()
            .copied()
            .filter(|&x| x != skip && !self.deleted_right.contains(&x))
            .collect();
        self.left.insert(left);
        self.edges.entry(left).or_default().extend(targets);
    }

    /// Removes `gone` from the right side; every edge into it is replaced by
    /// edges into the rest of the circuit that evicted it.
    fn delete_right(&mut self, gone: ElementId, circuit: &BTreeSet<ElementId>) {
        self.deleted_right.insert(gone);
        let replacement: BTreeSet<ElementId> = circuit
            .iter()
            .copied()
            .filter(|&x| x != gone && !self.deleted_right.contains(&x))
            .collect();
        for targets in self.edges.values_mut() {
            if targets.remove(&gone) {
                targets.extend(replacement.iter().copied());
            }
        }
    }

    /// Augmenting-path matching from the left side (in id order) into non-optimal right nodes.
    fn compute_matching(&mut self, opt: &BTreeSet<ElementId>) {
        let mut owner: BTreeMap<ElementId, ElementId> = BTreeMap::new();
        for &u in &self.left {
            let mut visited = BTreeSet::new();
            augment(u, &self.edges, opt, &mut visited, &mut owner);
        }
        self.matching = owner.into_iter().map(|(right, left)| (left, right)).collect();
    }
}

fn augment(
    u: ElementId,
    edges: &BTreeMap<ElementId, BTreeSet<ElementId>>,
    opt: &BTreeSet<ElementId>,
    visited: &mut BTreeSet<ElementId>,
    owner: &mut BTreeMap<ElementId, ElementId>,
) -> bool {
    let Some(targets) = edges.get(&u) else {
        return false;
    };
    for &v in targets.iter().filter(|v| !opt.contains(v)) {
        if !visited.insert(v) {
            continue;
        }
        let free = match owner.get(&v) {
            None => true,
            Some(&w) => augment(w, edges, opt, visited, owner),
        };
        if free {
            owner.insert(v, u);
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanAnomaly {
    pub step: usize,
    pub graph: usize,
    pub element: ElementId,
}

#[derive(Debug, Clone)]
pub struct ChargeGraphs {
    pub graphs: Vec<ChargeGraph>,
    opt: BTreeSet<ElementId>,
    matroids: Vec<MatroidDescriptor>,
    last_step: usize,
    /// Per-event span failures; flagged, not fatal.
    pub span_anomalies: Vec<SpanAnomaly>,
}

impl ChargeGraphs {
    pub fn new(matroids: Vec<MatroidDescriptor>, opt: BTreeSet<ElementId>) -> Self {
        ChargeGraphs {
            graphs: vec![ChargeGraph::default(); matroids.len()],
            opt,
            matroids,
            last_step: 0,
            span_anomalies: Vec::new(),
        }
    }

    pub fn record_event(&mut self, event: &ChargeEvent) -> Result<()> {
        let step = event.step();
        if step <= self.last_step {
            return Err(BuybackError::Sequencing { expected: self.last_step + 1, got: step });
        }
        self.last_step = step;
        match event {
            ChargeEvent::Reject { element, circuits, .. } => {
                if self.opt.contains(element) {
                    for (graph, circuit) in self.graphs.iter_mut().zip(circuits) {
                        // Only matroids that actually blocked the element get a left node.
                        if let Some(c) = circuit.as_ref().filter(|c| c.len() > 1) {
                            graph.attach(*element, c, *element);
                        }
                    }
                }
            }
            ChargeEvent::AcceptEvict { evicted, circuits, .. } => {
                for (p, graph) in self.graphs.iter_mut().enumerate() {
                    let (Some(gone), Some(circuit)) = (evicted[p], circuits[p].as_ref()) else {
                        continue;
                    };
                    graph.delete_right(gone, circuit);
                    if self.opt.contains(&gone) {
                        graph.attach(gone, circuit, gone);
                    }
                }
            }
        }
        self.check_span_after(step)
    }

    fn check_span_after(&mut self, step: usize) -> Result<()> {
        for (p, graph) in self.graphs.iter().enumerate() {
            for &e in &graph.left {
                if !spans(&self.matroids[p], &graph.neighbours([e].iter()), [e].iter())? {
                    self.span_anomalies.push(SpanAnomaly { step, graph: p, element: e });
                }
            }
        }
        Ok(())
    }

    pub fn compute_matchings(&mut self) {
        for g in &mut self.graphs {
            g.compute_matching(&self.opt);
        }
    }

    pub fn opt(&self) -> &BTreeSet<ElementId> {
        &self.opt
    }

    /// Builds the graphs for a finished circuit-rule trace and computes matchings.
    pub fn from_trace(
        matroids: Vec<MatroidDescriptor>,
        opt: BTreeSet<ElementId>,
        trace: &[StepRecord],
    ) -> Result<Self> {
        let mut graphs = ChargeGraphs::new(matroids, opt);
        for event in trace.iter().filter_map(ChargeEvent::from_step) {
            graphs.record_event(&event)?;
        }
        graphs.compute_matchings();
        Ok(graphs)
    }
}

/// `rank(base) == rank(base ∪ extra)`.
fn spans<'a, I>(m: &MatroidDescriptor, base: &BTreeSet<ElementId>, extra: I) -> Result<bool>
where
    I: IntoIterator<Item = &'a ElementId>,
{
    let mut union = base.clone();
    union.extend(extra);
    Ok(m.rank(base)? == m.rank(&union)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStructureReport {
    pub graph: usize,
    pub left_size: usize,
    pub left_in_lost_opt: bool,
    pub spanning: bool,
    pub hall: bool,
    pub saturating_matching: bool,
    pub hall_exhaustive: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub graphs: Vec<GraphStructureReport>,
    /// Every element outside `S(n) ∪ OPT` is matched from the right in at most `k − 1` graphs.
    pub right_multiplicity: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub multiplicity_witnesses: Vec<String>,
    pub span_anomalies: Vec<SpanAnomaly>,
}

impl StructureReport {
    pub fn properties(&self) -> [bool; 5] {
        let all = |f: fn(&GraphStructureReport) -> bool| self.graphs.iter().all(f);
        [
            all(|g| g.left_in_lost_opt),
            all(|g| g.spanning),
            all(|g| g.hall),
            all(|g| g.saturating_matching),
            self.right_multiplicity,
        ]
    }

    pub fn passed(&self) -> bool {
        self.properties().iter().all(|&b| b)
    }
}

fn subsets_of(left: &[ElementId], rng: &mut ChaCha8Rng) -> Vec<Vec<ElementId>> {
    if left.len() <= EXHAUSTIVE_LEFT_LIMIT {
        (1usize..1 << left.len())
            .map(|mask| (0..left.len()).filter(|b| mask >> b & 1 == 1).map(|b| left[b]).collect())
            .collect()
    } else {
        (0..SAMPLED_SUBSETS)
            .map(|_| left.iter().copied().filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect()
    }
}

pub fn verify_graph_structure(
    graphs: &ChargeGraphs,
    all_elements: &BTreeSet<ElementId>,
    final_set: &BTreeSet<ElementId>,
) -> Result<StructureReport> {
    let opt = graphs.opt();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut reports = Vec::with_capacity(graphs.graphs.len());
    for (p, graph) in graphs.graphs.iter().enumerate() {
        let matroid = &graphs.matroids[p];
        let mut witnesses = Vec::new();
        let left: Vec<ElementId> = graph.left.iter().copied().collect();

        let stray: Vec<_> = left.iter().filter(|e| !opt.contains(e) || final_set.contains(e)).collect();
        if !stray.is_empty() {
            witnesses.push(format!("left nodes outside OPT \\ S(n): {stray:?}"));
        }

        let mut spanning = true;
        for &e in &left {
            if !spans(matroid, &graph.neighbours([e].iter()), [e].iter())? {
                spanning = false;
                witnesses.push(format!("N({e}) does not span {e}"));
            }
        }
        let subsets = subsets_of(&left, &mut rng);
        if spanning {
            if let Some(s) = subsets
                .iter()
                .find(|s| !spans(matroid, &graph.neighbours(s.iter()), s.iter()).unwrap_or(false))
            {
                spanning = false;
                witnesses.push(format!("N({s:?}) does not span the subset"));
            }
        }

        let saturating = left.iter().all(|e| graph.matching.contains_key(e));
        if !saturating {
            let unmatched: Vec<_> = left.iter().filter(|e| !graph.matching.contains_key(e)).collect();
            witnesses.push(format!("unmatched left nodes: {unmatched:?}"));
        }
        let hall_exhaustive = left.len() <= EXHAUSTIVE_LEFT_LIMIT;
        let hall = if hall_exhaustive {
            match subsets.iter().find(|s| graph.neighbours(s.iter()).difference(opt).count() < s.len()) {
                Some(s) => {
                    witnesses.push(format!("Hall deficiency at {s:?}"));
                    false
                }
                None => true,
            }
        } else {
            saturating
        };

        reports.push(GraphStructureReport {
            graph: p,
            left_size: left.len(),
            left_in_lost_opt: stray.is_empty(),
            spanning,
            hall,
            saturating_matching: saturating,
            hall_exhaustive,
            witnesses,
        });
    }

    let k = graphs.graphs.len();
    let mut multiplicity_witnesses = Vec::new();
    for e in all_elements.iter().filter(|e| !final_set.contains(e) && !opt.contains(e)) {
        let times = graphs.graphs.iter().filter(|g| g.matching.values().any(|v| v == e)).count();
        if times + 1 > k {
            multiplicity_witnesses.push(format!("{e} matched in {times} graphs"));
        }
    }
    Ok(StructureReport {
        graphs: reports,
        right_multiplicity: multiplicity_witnesses.is_empty(),
        multiplicity_witnesses,
        span_anomalies: graphs.span_anomalies.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub from: ElementId,
    pub to: ElementId,
    pub graph: usize,
    #[serde(with = "ratio_serde")]
    pub amount: BigRational,
    /// Step at which the sender left the solution.
    pub source_step: usize,
    /// Step at which the charge lands: the receiver's deletion step, or `n + 1`.
    pub credit_step: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChargeEntry {
    pub ch1: BigRational,
    pub ch2: BigRational,
    pub deleted_at: Option<usize>,
    /// `ch2` just before it was passed on at deletion.
    pub ch2_at_deletion: Option<BigRational>,
}

impl ChargeEntry {
    pub fn total(&self) -> BigRational {
        &self.ch1 + &self.ch2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChargeLedger {
    pub entries: BTreeMap<ElementId, ChargeEntry>,
    pub transfers: Vec<Transfer>,
    /// Total charge over all elements after each step (index 0 = initial).
    pub totals: Vec<BigRational>,
    /// Transfers whose receiver was gone before the sender left.
    pub causality_violations: Vec<Transfer>,
}

/// Replays the trace, moving `ch1` along the matchings and `ch2` along evictions.
pub fn transfer_charges(
    trace: &[StepRecord],
    graphs: &ChargeGraphs,
    weights: &BTreeMap<ElementId, Weight>,
) -> Result<ChargeLedger> {
    let opt = graphs.opt();
    let end = trace.len() + 1;
    let mut entries: BTreeMap<ElementId, ChargeEntry> = weights
        .iter()
        .map(|(id, w)| {
            let ch1 = if opt.contains(id) { w.as_ratio().clone() } else { BigRational::zero() };
            (*id, ChargeEntry { ch1, ..Default::default() })
        })
        .collect();

    let mut deleted_at: BTreeMap<ElementId, usize> = BTreeMap::new();
    for rec in trace {
        if let Decision::AcceptEvict { evicted } = &rec.decision {
            for x in evicted {
                deleted_at.insert(*x, rec.step);
            }
        }
    }
    let credit_step = |id: &ElementId| deleted_at.get(id).copied().unwrap_or(end);
    let matched = |p: usize, e: ElementId| -> Result<ElementId> {
        graphs.graphs[p]
            .matching
            .get(&e)
            .copied()
            .ok_or(BuybackError::MatchingIncomplete { graph: p, element: e })
    };

    let mut transfers = Vec::new();
    for rec in trace {
        match &rec.decision {
            Decision::Reject if opt.contains(&rec.element) => {
                let shares: Vec<(usize, BigRational)> = rec
                    .probes
                    .iter()
                    .enumerate()
                    .filter(|(_, probe)| probe.circuit.as_ref().is_some_and(|c| c.len() > 1))
                    .map(|(p, probe)| {
                        let w = probe.evict.map(|x| weights[&x].as_ratio().clone()).unwrap_or_default();
                        (p, w)
                    })
                    .collect();
                let total: BigRational = shares.iter().map(|(_, w)| w.clone()).sum();
                let own = weights[&rec.element].as_ratio();
                for (p, w) in &shares {
                    let amount = if total.is_zero() {
                        own / BigRational::from_integer(BigInt::from(shares.len()))
                    } else {
                        own * w / &total
                    };
                    let to = matched(*p, rec.element)?;
                    transfers.push(Transfer {
                        from: rec.element,
                        to,
                        graph: *p,
                        amount,
                        source_step: rec.step,
                        credit_step: credit_step(&to),
                    });
                }
            }
            Decision::AcceptEvict { evicted } => {
                for x in evicted.iter().filter(|x| opt.contains(x)) {
                    let graphs_of_x: Vec<usize> = rec
                        .probes
                        .iter()
                        .enumerate()
                        .filter(|(_, probe)| probe.evict == Some(*x))
                        .map(|(p, _)| p)
                        .collect();
                    // An element evicted for several matroids splits its charge evenly.
                    let amount = weights[x].as_ratio() / BigRational::from_integer(BigInt::from(graphs_of_x.len()));
                    for p in graphs_of_x {
                        let to = matched(p, *x)?;
                        transfers.push(Transfer {
                            from: *x,
                            to,
                            graph: p,
                            amount: amount.clone(),
                            source_step: rec.step,
                            credit_step: credit_step(&to),
                        });
                    }
                }
            }
            _ => {}
        }
    }

    let causality_violations: Vec<Transfer> =
        transfers.iter().filter(|t| t.credit_step < t.source_step).cloned().collect();

    let mut totals = vec![entries.values().map(ChargeEntry::total).sum()];
    let credit = |entries: &mut BTreeMap<ElementId, ChargeEntry>, step: usize| {
        for t in transfers.iter().filter(|t| t.credit_step == step) {
            entries.get_mut(&t.from).expect("sender has an entry").ch1 -= &t.amount;
            entries.get_mut(&t.to).expect("receiver has an entry").ch2 += &t.amount;
        }
    };
    for rec in trace {
        credit(&mut entries, rec.step);
        if let Decision::AcceptEvict { evicted } = &rec.decision {
            for x in evicted {
                let entry = entries.get_mut(x).expect("evicted element has an entry");
                let moving = std::mem::take(&mut entry.ch2);
                entry.ch2_at_deletion = Some(moving.clone());
                entry.deleted_at = Some(rec.step);
                entries.get_mut(&rec.element).expect("accepted element has an entry").ch2 += moving;
            }
        }
        totals.push(entries.values().map(ChargeEntry::total).sum());
    }
    credit(&mut entries, end);
    totals.push(entries.values().map(ChargeEntry::total).sum());

    Ok(ChargeLedger { entries, transfers, totals, causality_violations })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementCharge {
    pub element: ElementId,
    pub in_final_set: bool,
    #[serde(with = "ratio_serde")]
    pub charge: BigRational,
    #[serde(with = "ratio_serde")]
    pub bound: BigRational,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChargeBoundReport {
    pub per_element: Vec<ElementCharge>,
    #[serde(with = "ratio_serde")]
    pub conservation_residual: BigRational,
    pub conserved_every_step: bool,
    pub causal: bool,
    /// Each `ch1` transfer is at most `r` times the receiver's weight.
    pub transfer_cap: bool,
    /// Receivers outside `S(n) ∪ OPT` get at most `k − 1` transfers.
    pub transfer_count: bool,
    pub final_weight_bound: bool,
}

impl ChargeBoundReport {
    pub fn passed(&self) -> bool {
        self.per_element.iter().all(|e| e.ok)
            && self.conservation_residual.is_zero()
            && self.conserved_every_step
            && self.causal
            && self.transfer_cap
            && self.transfer_count
            && self.final_weight_bound
    }
}

pub fn verify_charge_bounds(
    ledger: &ChargeLedger,
    final_set: &BTreeSet<ElementId>,
    weights: &BTreeMap<ElementId, Weight>,
    opt: &OptResult,
    k: usize,
    r: &BigRational,
) -> Result<ChargeBoundReport> {
    if r <= &BigRational::one() {
        return Err(BuybackError::Domain(format!("charge bounds need r > 1, got {}", format_ratio(r))));
    }
    let held_cap = final_weight_factor(k, r)?;
    let deleted_cap = deleted_charge_factor(k, r)?;

    let mut per_element = Vec::new();
    for (id, entry) in &ledger.entries {
        let w = weights[id].as_ratio();
        let row = if final_set.contains(id) {
            let charge = entry.total();
            let bound = &held_cap * w;
            ElementCharge { element: *id, in_final_set: true, ok: charge <= bound, charge, bound }
        } else if let Some(ch2) = &entry.ch2_at_deletion {
            let bound = &deleted_cap * w;
            ElementCharge { element: *id, in_final_set: false, ok: ch2 <= &bound, charge: ch2.clone(), bound }
        } else {
            continue;
        };
        per_element.push(row);
    }

    let on_final: BigRational = final_set.iter().map(|id| ledger.entries[id].total()).sum();
    let residual = opt.weight.as_ratio() - on_final;
    let conserved_every_step = ledger.totals.iter().all(|t| t == opt.weight.as_ratio());

    let transfer_cap = ledger.transfers.iter().all(|t| t.amount <= r * weights[&t.to].as_ratio());
    let mut received: BTreeMap<ElementId, usize> = BTreeMap::new();
    for t in &ledger.transfers {
        *received.entry(t.to).or_default() += 1;
    }
    let transfer_count = received
        .iter()
        .filter(|(id, _)| !final_set.contains(id) && !opt.set.contains(id))
        .all(|(_, &n)| n < k);

    let final_weight: BigRational = final_set.iter().map(|id| weights[id].as_ratio().clone()).sum();
    let final_weight_bound = (final_weight * &held_cap) >= *opt.weight.as_ratio();

    Ok(ChargeBoundReport {
        per_element,
        conservation_residual: residual,
        conserved_every_step,
        causal: ledger.causality_violations.is_empty(),
        transfer_cap,
        transfer_count,
        final_weight_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub opt: OptResult,
    pub final_set: BTreeSet<ElementId>,
    pub structure: StructureReport,
    pub structure_properties: [bool; 5],
    pub charges: ChargeBoundReport,
    pub transfers: Vec<Transfer>,
    pub passed: bool,
}

/// Runs the circuit rule on `instance` with full auditing.
pub fn audit_run(instance: &Instance) -> Result<AuditReport> {
    let opt = brute_opt(instance)?;
    let state = run_state(instance, Rule::Circuit)?;
    let graphs = ChargeGraphs::from_trace(instance.matroids.clone(), opt.set.clone(), state.trace())?;
    let all: BTreeSet<ElementId> = instance.elements.iter().map(|e| e.id).collect();
    let structure = verify_graph_structure(&graphs, &all, state.current())?;
    let weights = instance.weights();
    let ledger = transfer_charges(state.trace(), &graphs, &weights)?;
    let charges = verify_charge_bounds(&ledger, state.current(), &weights, &opt, instance.k, &state.params().r)?;
    let passed = structure.passed() && charges.passed();
    Ok(AuditReport {
        structure_properties: structure.properties(),
        opt,
        final_set: state.current().clone(),
        structure,
        charges,
        transfers: ledger.transfers,
        passed,
    })
}

impl ChargeLedger {
    pub fn conserved(&self) -> bool {
        self.totals.windows(2).all(|w| w[0] == w[1])
    }

    pub fn negative_entries(&self) -> Vec<ElementId> {
        self.entries
            .iter()
            .filter(|(_, e)| e.ch1.is_negative() || e.ch2.is_negative())
            .map(|(id, _)| *id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Threshold;
    use crate::matroid::Element;

    fn ids(v: &[u32]) -> BTreeSet<ElementId> {
        v.iter().map(|&i| ElementId(i)).collect()
    }

    fn single_slot(weights: &[&str], r: &str) -> Instance {
        Instance {
            k: 1,
            f: Weight::zero(),
            r: Threshold::Explicit(r.parse().unwrap()),
            elements: weights.iter().enumerate().map(|(i, w)| Element::new(i as u32, w.parse().unwrap())).collect(),
            matroids: vec![MatroidDescriptor::Uniform { rank: 1 }],
            order: (0..weights.len() as u32).map(ElementId).collect(),
        }
    }

    #[test]
    fn out_of_order_events_are_refused() {
        let mut g = ChargeGraphs::new(vec![MatroidDescriptor::Uniform { rank: 1 }], ids(&[]));
        let ev = |step| ChargeEvent::Reject { step, element: ElementId(0), circuits: vec![None] };
        g.record_event(&ev(3)).unwrap();
        assert_eq!(g.record_event(&ev(2)), Err(BuybackError::Sequencing { expected: 4, got: 2 }));
    }

    #[test]
    fn non_opt_reject_leaves_graphs_empty() {
        let mut g = ChargeGraphs::new(vec![MatroidDescriptor::Uniform { rank: 1 }], ids(&[1]));
        g.record_event(&ChargeEvent::Reject { step: 1, element: ElementId(5), circuits: vec![Some(ids(&[1, 5]))] })
            .unwrap();
        assert!(g.graphs[0].left.is_empty() && g.graphs[0].edges.is_empty());
    }

    #[test]
    fn opt_reject_adds_left_node_with_circuit_edges() {
        let m = MatroidDescriptor::Uniform { rank: 2 };
        let mut g = ChargeGraphs::new(vec![m], ids(&[9]));
        g.record_event(&ChargeEvent::Reject { step: 3, element: ElementId(9), circuits: vec![Some(ids(&[1, 2, 9]))] })
            .unwrap();
        assert_eq!(g.graphs[0].left, ids(&[9]));
        assert_eq!(g.graphs[0].edges[&ElementId(9)], ids(&[1, 2]));
        assert!(g.span_anomalies.is_empty());
    }

    #[test]
    fn eviction_rewires_edges_into_the_circuit() {
        let m = MatroidDescriptor::Uniform { rank: 2 };
        let mut g = ChargeGraphs::new(vec![m], ids(&[7]));
        // q = 7 rejected against {1 (=a), 3}
        g.record_event(&ChargeEvent::Reject { step: 1, element: ElementId(7), circuits: vec![Some(ids(&[1, 3, 7]))] })
            .unwrap();
        // e = 5 evicts a = 1 with circuit {1, 5, 2}
        g.record_event(&ChargeEvent::AcceptEvict {
            step: 2,
            element: ElementId(5),
            evicted: vec![Some(ElementId(1))],
            circuits: vec![Some(ids(&[1, 2, 5]))],
        })
        .unwrap();
        assert_eq!(g.graphs[0].edges[&ElementId(7)], ids(&[2, 3, 5]));
        assert!(g.graphs[0].deleted_right.contains(&ElementId(1)));
    }

    #[test]
    fn quiet_run_passes_vacuously() {
        let mut inst = single_slot(&["5"], "2");
        inst.matroids = vec![MatroidDescriptor::Uniform { rank: 3 }];
        let report = audit_run(&inst).unwrap();
        assert!(report.passed);
        assert!(report.structure.graphs[0].left_size == 0);
    }

    #[test]
    fn single_eviction_chain_moves_charge() {
        // OPT = {2} (weight 3); 1 is evicted by 3, OPT never leaves S.
        let inst = single_slot(&["1", "3/2", "3"], "2");
        let report = audit_run(&inst).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.opt.set, ids(&[2]));
        let row = report.charges.per_element.iter().find(|r| r.element == ElementId(2)).unwrap();
        assert_eq!(row.charge, BigRational::from_integer(3.into()));
    }

    #[test]
    fn evicted_opt_element_sends_charge_to_its_match() {
        // 0 (w 2) held, 1 (w 5) evicts it at r = 2; OPT = {1}. Then 2 (w 11) evicts 1.
        let inst = single_slot(&["2", "5", "11"], "2");
        let report = audit_run(&inst).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.opt.set, ids(&[2]));

        // OPT element evicted: weights 2, 5 with r = 2 and a final 4 that is rejected.
        let inst = single_slot(&["5", "11", "4"], "2");
        let report = audit_run(&inst).unwrap();
        assert_eq!(report.opt.set, ids(&[1]));
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn k1_runs_pass_matched_zero_times() {
        let inst = single_slot(&["1", "3", "2", "7", "6", "20"], "3/2");
        let report = audit_run(&inst).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.transfers.iter().all(|t| t.to != ElementId(0)));
    }

    #[test]
    fn charge_bounds_need_r_above_one() {
        let inst = single_slot(&["1"], "1");
        assert!(matches!(audit_run(&inst), Err(BuybackError::Domain(_))));
    }
}

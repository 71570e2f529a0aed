//! Matroid descriptors and their independence, rank and circuit oracles.
//!
//! `Family` describes a general downward-closed system by its maximal sets. It
//! answers independence queries but refuses the matroid-only operations
//! (`rank`, `circuit`, `min_evict`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{BuybackError, Result};
use crate::weight::{ElementId, Weight};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: ElementId,
    pub weight: Weight,
}

impl Element {
    pub fn new(id: u32, weight: Weight) -> Self {
        Element { id: ElementId(id), weight }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MatroidDescriptor {
    Uniform {
        rank: usize,
    },
    Partition {
        #[serde(rename = "classes")]
        class_of: BTreeMap<ElementId, usize>,
        capacities: Vec<usize>,
    },
    Graphic {
        #[serde(rename = "vertices")]
        vertex_count: usize,
        endpoints: BTreeMap<ElementId, (usize, usize)>,
    },
    Family {
        maximal: Vec<BTreeSet<ElementId>>,
    },
}

/// How a newly revealed element participates in one descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// No extra data (uniform matroids).
    Free,
    Class { class: usize, capacity: usize },
    Edge(usize, usize),
}

impl MatroidDescriptor {
    pub fn kind(&self) -> &'static str {
        match self {
            MatroidDescriptor::Uniform { .. } => "uniform",
            MatroidDescriptor::Partition { .. } => "partition",
            MatroidDescriptor::Graphic { .. } => "graphic",
            MatroidDescriptor::Family { .. } => "family",
        }
    }

    pub fn is_matroid(&self) -> bool {
        !matches!(self, MatroidDescriptor::Family { .. })
    }

    /// Whether the descriptor knows about `id`. Uniform matroids know every id;
    /// families treat unlisted ids as loops.
    pub fn covers(&self, id: ElementId) -> bool {
        match self {
            MatroidDescriptor::Uniform { .. } | MatroidDescriptor::Family { .. } => true,
            MatroidDescriptor::Partition { class_of, .. } => class_of.contains_key(&id),
            MatroidDescriptor::Graphic { endpoints, .. } => endpoints.contains_key(&id),
        }
    }

    /// Structural sanity: partition classes have capacities, graphic endpoints are in range.
    pub fn validate(&self) -> Result<()> {
        match self {
            MatroidDescriptor::Partition { class_of, capacities } => {
                for (id, &c) in class_of {
                    if c >= capacities.len() {
                        return Err(BuybackError::Input(format!(
                            "element {id} is in class {c} but only {} capacities are given",
                            capacities.len()
                        )));
                    }
                }
            }
            MatroidDescriptor::Graphic { vertex_count, endpoints } => {
                for (id, &(u, v)) in endpoints {
                    if u >= *vertex_count || v >= *vertex_count {
                        return Err(BuybackError::Input(format!(
                            "edge {id} = ({u},{v}) exceeds vertex count {vertex_count}"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Registers a newly revealed element.
    pub fn extend(&mut self, id: ElementId, membership: Membership) -> Result<()> {
        match (self, membership) {
            (MatroidDescriptor::Uniform { .. }, Membership::Free) => Ok(()),
            (MatroidDescriptor::Partition { class_of, capacities }, Membership::Class { class, capacity }) => {
                if class_of.contains_key(&id) {
                    return Err(BuybackError::DuplicateElement(id));
                }
                if class < capacities.len() {
                    if capacities[class] != capacity {
                        return Err(BuybackError::Input(format!(
                            "class {class} has capacity {}, not {capacity}",
                            capacities[class]
                        )));
                    }
                } else {
                    capacities.resize(class + 1, capacity);
                }
                class_of.insert(id, class);
                Ok(())
            }
            (MatroidDescriptor::Graphic { vertex_count, endpoints }, Membership::Edge(u, v)) => {
                if endpoints.contains_key(&id) {
                    return Err(BuybackError::DuplicateElement(id));
                }
                *vertex_count = (*vertex_count).max(u + 1).max(v + 1);
                endpoints.insert(id, (u, v));
                Ok(())
            }
            (desc, m) => Err(BuybackError::Input(format!(
                "membership {m:?} does not fit a {} descriptor",
                desc.kind()
            ))),
        }
    }

    pub fn is_independent(&self, set: &BTreeSet<ElementId>) -> Result<bool> {
        self.independent_ids(set.iter().copied())
    }

    /// Independence of a duplicate-free id sequence.
    pub fn independent_ids<I>(&self, ids: I) -> Result<bool>
    where
        I: IntoIterator<Item = ElementId>,
    {
        match self {
            MatroidDescriptor::Uniform { rank } => Ok(ids.into_iter().count() <= *rank),
            MatroidDescriptor::Partition { class_of, capacities } => {
                let mut used = vec![0usize; capacities.len()];
                let mut ok = true;
                for id in ids {
                    let class = *class_of.get(&id).ok_or(BuybackError::UnknownElement(id))?;
                    let slot = used
                        .get_mut(class)
                        .ok_or_else(|| BuybackError::Input(format!("class {class} has no capacity")))?;
                    *slot += 1;
                    if *slot > capacities[class] {
                        ok = false;
                    }
                }
                Ok(ok)
            }
            MatroidDescriptor::Graphic { vertex_count, endpoints } => {
                let mut forest = UnionFind::new(*vertex_count);
                let mut ok = true;
                for id in ids {
                    let &(u, v) = endpoints.get(&id).ok_or(BuybackError::UnknownElement(id))?;
                    if u >= *vertex_count || v >= *vertex_count {
                        return Err(BuybackError::Input(format!("edge {id} leaves the vertex range")));
                    }
                    if ok && !forest.union(u, v) {
                        ok = false;
                    }
                }
                Ok(ok)
            }
            MatroidDescriptor::Family { maximal } => {
                let set: BTreeSet<ElementId> = ids.into_iter().collect();
                Ok(set.is_empty() || maximal.iter().any(|m| set.is_subset(m)))
            }
        }
    }

    fn require_matroid(&self, op: &'static str) -> Result<()> {
        if self.is_matroid() {
            Ok(())
        } else {
            Err(BuybackError::Unsupported { op, kind: self.kind() })
        }
    }

    /// Greedy rank: grow an independent subset one element at a time.
    pub fn rank(&self, set: &BTreeSet<ElementId>) -> Result<usize> {
        self.require_matroid("rank")?;
        let mut basis: Vec<ElementId> = Vec::with_capacity(set.len());
        for &id in set {
            basis.push(id);
            if !self.independent_ids(basis.iter().copied())? {
                basis.pop();
            }
        }
        Ok(basis.len())
    }

    /// The unique circuit of `s ∪ {e}` when it is dependent.
    pub fn circuit(&self, s: &BTreeSet<ElementId>, e: ElementId) -> Result<Option<BTreeSet<ElementId>>> {
        self.require_matroid("circuit")?;
        if !self.is_independent(s)? {
            return Err(BuybackError::Precondition(
                "circuit query on a dependent set".to_string(),
            ));
        }
        if s.contains(&e) {
            return Err(BuybackError::Precondition(format!("element {e} already in the set")));
        }
        let with_e = || s.iter().copied().chain(std::iter::once(e));
        if self.independent_ids(with_e())? {
            return Ok(None);
        }
        let mut circuit = BTreeSet::from([e]);
        for &x in s {
            if self.independent_ids(with_e().filter(|&y| y != x))? {
                circuit.insert(x);
            }
        }
        Ok(Some(circuit))
    }

    /// Lightest element whose removal repairs `s ∪ {e}`; ties go to the smaller id.
    /// `None` when `s ∪ {e}` is already independent or when `e` is a loop.
    pub fn min_evict(
        &self,
        s: &BTreeSet<ElementId>,
        e: ElementId,
        weights: &BTreeMap<ElementId, Weight>,
    ) -> Result<Option<ElementId>> {
        let Some(circuit) = self.circuit(s, e)? else {
            return Ok(None);
        };
        let mut best: Option<(&Weight, ElementId)> = None;
        for &x in circuit.iter().filter(|&&x| x != e) {
            let w = weights.get(&x).ok_or(BuybackError::UnknownElement(x))?;
            if best.is_none_or(|(bw, _)| w < bw) {
                best = Some((w, x));
            }
        }
        Ok(best.map(|(_, x)| x))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `u` and `v` were already connected.
    fn union(&mut self, u: usize, v: usize) -> bool {
        let (a, b) = (self.find(u), self.find(v));
        if a == b {
            return false;
        }
        self.parent[a] = b;
        true
    }
}

pub const AXIOM_GROUND_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AxiomVerdict {
    Pass,
    /// The empty set is dependent.
    EmptyDependent,
    HereditaryViolated {
        set: Vec<ElementId>,
        subset: Vec<ElementId>,
    },
    /// `|smaller| < |larger|`, both independent, no element of `larger` augments `smaller`.
    ExchangeViolated {
        smaller: Vec<ElementId>,
        larger: Vec<ElementId>,
    },
}

impl AxiomVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, AxiomVerdict::Pass)
    }
}

/// Exhaustive check of the hereditary and exchange axioms over all subsets of `ground`.
///
/// Exchange is tested through the largest independent subset of each mask: `A`
/// violates exchange iff the complement of its augmenting elements still holds an
/// independent set larger than `A`.
pub fn axiom_check(desc: &MatroidDescriptor, ground: &[ElementId]) -> Result<AxiomVerdict> {
    let n = ground.len();
    if n > AXIOM_GROUND_LIMIT {
        return Err(BuybackError::SizeLimit { size: n, limit: AXIOM_GROUND_LIMIT });
    }
    let distinct: BTreeSet<_> = ground.iter().collect();
    if distinct.len() != n {
        return Err(BuybackError::Input("ground set has repeated ids".to_string()));
    }
    let full: usize = (1 << n) - 1;
    let ids_of = |mask: usize| -> Vec<ElementId> {
        (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ground[b]).collect()
    };

    let mut indep = vec![false; 1 << n];
    for (mask, slot) in indep.iter_mut().enumerate() {
        *slot = desc.independent_ids(ids_of(mask))?;
    }
    if !indep[0] {
        return Ok(AxiomVerdict::EmptyDependent);
    }

    for mask in 0..=full {
        if !indep[mask] {
            continue;
        }
        for b in 0..n {
            let sub = mask & !(1 << b);
            if sub != mask && !indep[sub] {
                return Ok(AxiomVerdict::HereditaryViolated { set: ids_of(mask), subset: ids_of(sub) });
            }
        }
    }

    // best[m] = a largest independent subset of m
    let mut best = vec![0usize; 1 << n];
    for mask in 1..=full {
        best[mask] = if indep[mask] {
            mask
        } else {
            (0..n)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| best[mask & !(1 << b)])
                .max_by_key(|m| m.count_ones())
                .unwrap_or(0)
        };
    }

    for a in 0..=full {
        if !indep[a] {
            continue;
        }
        let augmenting = (0..n)
            .filter(|b| a >> b & 1 == 0 && indep[a | 1 << b])
            .fold(0usize, |acc, b| acc | 1 << b);
        let candidate = best[full & !augmenting];
        if candidate.count_ones() > a.count_ones() {
            return Ok(AxiomVerdict::ExchangeViolated { smaller: ids_of(a), larger: ids_of(candidate) });
        }
    }
    Ok(AxiomVerdict::Pass)
}

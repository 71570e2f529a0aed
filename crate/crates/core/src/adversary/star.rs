//! Star-graph adversary: the independence system is "independent sets of a
//! graph" revealed one vertex at a time.

use std::collections::BTreeSet;

use num::{BigRational, One, Signed};
use serde::Serialize;

use crate::engine::baseline::SingleElementBaseline;
use crate::engine::Decision;
use crate::error::{BuybackError, Result};
use crate::matroid::{Element, MatroidDescriptor};
use crate::weight::{opt_ratio_serde, ratio_serde, ElementId, Weight};

/// Largest vertex count for the exhaustive family and optimum.
pub const STAR_VERTEX_LIMIT: usize = 20;

/// An online algorithm that sees each vertex with its edges to earlier vertices.
pub trait VertexAlgorithm {
    fn offer_vertex(&mut self, vertex: &Element, neighbours: &BTreeSet<ElementId>) -> Result<Decision>;
    fn held(&self) -> BTreeSet<ElementId>;
    fn utility(&self) -> BigRational;
}

impl VertexAlgorithm for SingleElementBaseline {
    fn offer_vertex(&mut self, vertex: &Element, _neighbours: &BTreeSet<ElementId>) -> Result<Decision> {
        // A lone vertex is always independent.
        self.offer(vertex, true)
    }

    fn held(&self) -> BTreeSet<ElementId> {
        SingleElementBaseline::held(self).into_iter().collect()
    }

    fn utility(&self) -> BigRational {
        SingleElementBaseline::utility(self)
    }
}

fn masks(n: usize, edges: &[(ElementId, ElementId)]) -> Result<Vec<u32>> {
    if n > STAR_VERTEX_LIMIT {
        return Err(BuybackError::SizeLimit { size: n, limit: STAR_VERTEX_LIMIT });
    }
    let mut adj = vec![0u32; n];
    for &(a, b) in edges {
        let (a, b) = (a.0 as usize, b.0 as usize);
        if a >= n || b >= n {
            return Err(BuybackError::Input(format!("edge ({a},{b}) outside {n} vertices")));
        }
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    Ok(adj)
}

fn independent(mask: u32, adj: &[u32]) -> bool {
    (0..adj.len()).all(|v| mask >> v & 1 == 0 || adj[v] & mask == 0)
}

/// Maximal independent sets of the graph on vertices `0..n` as a family descriptor.
pub fn graph_family(n: usize, edges: &[(ElementId, ElementId)]) -> Result<MatroidDescriptor> {
    let adj = masks(n, edges)?;
    let mut maximal = Vec::new();
    for mask in 0u32..1 << n {
        if !independent(mask, &adj) {
            continue;
        }
        let extendable = (0..n).any(|v| mask >> v & 1 == 0 && adj[v] & mask == 0);
        if !extendable {
            maximal.push((0..n).filter(|v| mask >> v & 1 == 1).map(|v| ElementId(v as u32)).collect());
        }
    }
    Ok(MatroidDescriptor::Family { maximal })
}

fn max_weight_independent(weights: &[Weight], adj: &[u32]) -> Weight {
    let n = weights.len();
    (0u32..1 << n)
        .filter(|&m| independent(m, adj))
        .map(|m| (0..n).filter(|v| m >> v & 1 == 1).map(|v| &weights[v]).sum::<Weight>())
        .max()
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarReport {
    pub n: usize,
    pub eps: Weight,
    /// Vertex held after the first two arrivals, if any.
    pub center: Option<ElementId>,
    pub held: BTreeSet<ElementId>,
    #[serde(with = "ratio_serde")]
    pub utility: BigRational,
    pub opt_weight: Weight,
    /// `1 + (n − 2)(1 − ε)`.
    pub opt_formula: Weight,
    #[serde(with = "opt_ratio_serde")]
    pub ratio: Option<BigRational>,
    /// Ratio at least the formula value, or non-positive utility.
    pub bound_met: bool,
    /// Arrivals after the first two that the algorithm moved to.
    pub swaps: usize,
    pub held_neither: bool,
    pub edges: Vec<(ElementId, ElementId)>,
    pub family: MatroidDescriptor,
}

/// Presents `N_1, N_2` (weight 1, adjacent) and then `N_3 … N_n` (weight `1 − ε`),
/// each adjacent only to the vertex the algorithm currently holds.
pub fn star_adversary<A: VertexAlgorithm>(alg: &mut A, n: usize, eps: &Weight) -> Result<StarReport> {
    if n < 3 {
        return Err(BuybackError::Domain(format!("star adversary needs n ≥ 3, got {n}")));
    }
    if !eps.as_ratio().is_positive() || eps.as_ratio() >= &BigRational::one() {
        return Err(BuybackError::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if n > STAR_VERTEX_LIMIT {
        return Err(BuybackError::SizeLimit { size: n, limit: STAR_VERTEX_LIMIT });
    }
    let light = Weight::new(BigRational::one() - eps.as_ratio())?;
    let mut weights = vec![Weight::one(), Weight::one()];
    let mut edges = vec![(ElementId(0), ElementId(1))];

    alg.offer_vertex(&Element::new(0, Weight::one()), &BTreeSet::new())?;
    alg.offer_vertex(&Element::new(1, Weight::one()), &BTreeSet::from([ElementId(0)]))?;
    let after_two = alg.held();
    let center = after_two.iter().next().copied();
    let held_neither = center.is_none();

    let mut swaps = 0;
    for i in 2..n {
        let id = ElementId(i as u32);
        // Redirect rule: attach to whatever is held now, or to N_1 when nothing is.
        let anchor = alg.held().iter().next().copied().unwrap_or(ElementId(0));
        let d = alg.offer_vertex(&Element { id, weight: light.clone() }, &BTreeSet::from([anchor]))?;
        if d.accepted() {
            swaps += 1;
        }
        edges.push((anchor, id));
        weights.push(light.clone());
    }

    let adj = masks(n, &edges)?;
    let opt_weight = max_weight_independent(&weights, &adj);
    let opt_formula = Weight::new(
        BigRational::one() + BigRational::from_integer((n as i64 - 2).into()) * light.as_ratio(),
    )?;
    let utility = alg.utility();
    let ratio = utility.is_positive().then(|| opt_weight.as_ratio() / &utility);
    let bound_met = ratio.as_ref().is_none_or(|q| q >= opt_formula.as_ratio());
    Ok(StarReport {
        n,
        eps: eps.clone(),
        center,
        held: alg.held(),
        utility,
        opt_weight,
        opt_formula,
        ratio,
        bound_met,
        swaps,
        held_neither,
        family: graph_family(n, &edges)?,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::axiom_check;
    use crate::matroid::AxiomVerdict;
    use crate::weight::parse_ratio;
    use num::Zero;

    /// Always moves to the newest vertex, dropping its neighbours.
    struct Chaser {
        held: BTreeSet<ElementId>,
        gained: BigRational,
        lost: BigRational,
        weights: Vec<BigRational>,
    }

    impl VertexAlgorithm for Chaser {
        fn offer_vertex(&mut self, v: &Element, nb: &BTreeSet<ElementId>) -> Result<Decision> {
            self.weights.push(v.weight.as_ratio().clone());
            let evicted: BTreeSet<ElementId> = self.held.intersection(nb).copied().collect();
            for x in &evicted {
                self.lost += &self.weights[x.0 as usize];
                self.held.remove(x);
            }
            self.held.insert(v.id);
            self.gained += v.weight.as_ratio();
            Ok(if evicted.is_empty() { Decision::AcceptFree } else { Decision::AcceptEvict { evicted } })
        }
        fn held(&self) -> BTreeSet<ElementId> {
            self.held.clone()
        }
        fn utility(&self) -> BigRational {
            &self.gained - &self.lost
        }
    }

    #[test]
    fn baseline_holds_the_first_vertex() {
        let mut alg = SingleElementBaseline::new(Weight::zero());
        let eps = Weight::from_ratio(1, 1000);
        let report = star_adversary(&mut alg, 5, &eps).unwrap();
        assert_eq!(report.center, Some(ElementId(0)));
        assert_eq!(report.utility, BigRational::one());
        assert_eq!(report.opt_weight.to_string(), "3997/1000");
        assert_eq!(report.opt_weight, report.opt_formula);
        assert!(report.bound_met);
        assert_eq!(report.swaps, 0);
    }

    #[test]
    fn smallest_star() {
        let mut alg = SingleElementBaseline::new(Weight::zero());
        let eps = Weight::from_ratio(1, 100);
        let report = star_adversary(&mut alg, 3, &eps).unwrap();
        assert_eq!(report.ratio, Some(parse_ratio("199/100").unwrap()));
    }

    #[test]
    fn chaser_is_redirected_and_pays() {
        let mut alg = Chaser {
            held: BTreeSet::new(),
            gained: BigRational::zero(),
            lost: BigRational::zero(),
            weights: Vec::new(),
        };
        let report = star_adversary(&mut alg, 6, &Weight::from_ratio(1, 10)).unwrap();
        assert_eq!(report.swaps, 4);
        assert_eq!(report.held, BTreeSet::from([ElementId(5)]));
        // each new vertex hangs off the previous one: a path 0-1-2-3-4-5
        assert!(report.edges.windows(2).all(|w| w[1].0 == w[0].1));
        assert!(report.utility < BigRational::one());
    }

    #[test]
    fn star_family_is_not_a_matroid() {
        let edges = [(ElementId(0), ElementId(1)), (ElementId(0), ElementId(2)), (ElementId(0), ElementId(3))];
        let fam = graph_family(4, &edges).unwrap();
        let MatroidDescriptor::Family { maximal } = &fam else { unreachable!() };
        assert_eq!(maximal.len(), 2);
        let ground: Vec<ElementId> = (0..4).map(ElementId).collect();
        assert!(matches!(axiom_check(&fam, &ground).unwrap(), AxiomVerdict::ExchangeViolated { .. }));
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut alg = SingleElementBaseline::new(Weight::zero());
        assert!(star_adversary(&mut alg, 2, &Weight::from_ratio(1, 2)).is_err());
        assert!(star_adversary(&mut alg, 4, &Weight::one()).is_err());
    }
}

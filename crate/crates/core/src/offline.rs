//! Exact and greedy offline solvers for small instances.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{BuybackError, Result};
use crate::instance::Instance;
use crate::matroid::MatroidDescriptor;
use crate::weight::{ElementId, Weight};

pub const BRUTE_OPT_LIMIT: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptResult {
    pub set: BTreeSet<ElementId>,
    pub weight: Weight,
}

fn independent_in_all(matroids: &[MatroidDescriptor], ids: &[ElementId]) -> Result<bool> {
    for m in matroids {
        if !m.independent_ids(ids.iter().copied())? {
            return Ok(false);
        }
    }
    Ok(true)
}

struct Search<'a> {
    matroids: &'a [MatroidDescriptor],
    items: Vec<(ElementId, Weight)>,
    chosen: Vec<ElementId>,
    best: Vec<ElementId>,
    best_weight: Weight,
}

impl Search<'_> {
    fn visit(&mut self, next: usize, weight: &Weight) -> Result<()> {
        if next == self.items.len() {
            if *weight > self.best_weight || (*weight == self.best_weight && self.chosen < self.best) {
                self.best = self.chosen.clone();
                self.best_weight = weight.clone();
            }
            return Ok(());
        }
        let (id, w) = self.items[next].clone();
        self.chosen.push(id);
        // Hereditary: a dependent prefix has no independent extension.
        if independent_in_all(self.matroids, &self.chosen)? {
            self.visit(next + 1, &(weight + &w))?;
        }
        self.chosen.pop();
        self.visit(next + 1, weight)
    }
}

/// Maximum-weight set independent in every descriptor; ties go to the
/// lexicographically smallest sorted id list.
pub fn brute_opt(instance: &Instance) -> Result<OptResult> {
    let n = instance.n();
    if n > BRUTE_OPT_LIMIT {
        return Err(BuybackError::SizeLimit { size: n, limit: BRUTE_OPT_LIMIT });
    }
    let mut items: Vec<(ElementId, Weight)> =
        instance.elements.iter().map(|e| (e.id, e.weight.clone())).collect();
    items.sort_by_key(|(id, _)| *id);
    let mut search = Search {
        matroids: &instance.matroids,
        items,
        chosen: Vec::new(),
        best: Vec::new(),
        best_weight: Weight::zero(),
    };
    search.visit(0, &Weight::zero())?;
    Ok(OptResult { set: search.best.into_iter().collect(), weight: search.best_weight })
}

/// Descending-weight greedy (ties by smaller id) through all descriptors.
pub fn greedy_offline(instance: &Instance) -> Result<OptResult> {
    let mut order: Vec<_> = instance.elements.iter().collect();
    order.sort_by(|a, b| b.weight.cmp(&a.weight).then(a.id.cmp(&b.id)));
    let mut kept: Vec<ElementId> = Vec::new();
    let mut weight = Weight::zero();
    for e in order {
        kept.push(e.id);
        if independent_in_all(&instance.matroids, &kept)? {
            weight = &weight + &e.weight;
        } else {
            kept.pop();
        }
    }
    Ok(OptResult { set: kept.into_iter().collect(), weight })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::instance::Threshold;
    use crate::matroid::Element;

    fn instance(weights: &[(u32, &str)], matroids: Vec<MatroidDescriptor>) -> Instance {
        Instance {
            k: matroids.len(),
            f: Weight::zero(),
            r: Threshold::Optimal,
            elements: weights.iter().map(|&(i, w)| Element::new(i, w.parse().unwrap())).collect(),
            matroids,
            order: weights.iter().map(|&(i, _)| ElementId(i)).collect(),
        }
    }

    /// Two partition matroids encoding a 2×2 bipartite graph: edge "ij" joins left i and right j.
    fn two_by_two() -> Instance {
        let edges = [(11u32, 0usize, 0usize), (12, 0, 1), (21, 1, 0), (22, 1, 1)];
        let left = MatroidDescriptor::Partition {
            class_of: edges.iter().map(|&(id, l, _)| (ElementId(id), l)).collect(),
            capacities: vec![1, 1],
        };
        let right = MatroidDescriptor::Partition {
            class_of: edges.iter().map(|&(id, _, r)| (ElementId(id), r)).collect(),
            capacities: vec![1, 1],
        };
        instance(&[(11, "5"), (12, "4"), (21, "4"), (22, "1")], vec![left, right])
    }

    #[test]
    fn uniform_full_rank_takes_everything() {
        let inst = instance(&[(0, "1"), (1, "2"), (2, "3")], vec![MatroidDescriptor::Uniform { rank: 3 }]);
        let opt = brute_opt(&inst).unwrap();
        assert_eq!(opt.set.len(), 3);
        assert_eq!(opt.weight, Weight::from_integer(6));
    }

    #[test]
    fn triangle_best_forest() {
        let g = MatroidDescriptor::Graphic {
            vertex_count: 3,
            endpoints: BTreeMap::from([
                (ElementId(0), (0, 1)),
                (ElementId(1), (1, 2)),
                (ElementId(2), (2, 0)),
            ]),
        };
        let inst = instance(&[(0, "3"), (1, "2"), (2, "2")], vec![g]);
        let opt = brute_opt(&inst).unwrap();
        assert_eq!(opt.weight, Weight::from_integer(5));
        // tie between {0,1} and {0,2}: lexicographically smallest wins
        assert_eq!(opt.set, BTreeSet::from([ElementId(0), ElementId(1)]));
    }

    #[test]
    fn bipartite_matching_opt_and_greedy() {
        let inst = two_by_two();
        let opt = brute_opt(&inst).unwrap();
        assert_eq!(opt.set, BTreeSet::from([ElementId(12), ElementId(21)]));
        assert_eq!(opt.weight, Weight::from_integer(8));
        let greedy = greedy_offline(&inst).unwrap();
        assert_eq!(greedy.set, BTreeSet::from([ElementId(11), ElementId(22)]));
        assert_eq!(greedy.weight, Weight::from_integer(6));
    }

    #[test]
    fn empty_instance() {
        let inst = instance(&[], vec![MatroidDescriptor::Uniform { rank: 2 }]);
        assert_eq!(greedy_offline(&inst).unwrap().weight, Weight::zero());
        assert!(brute_opt(&inst).unwrap().set.is_empty());
    }

    #[test]
    fn size_limit() {
        let weights: Vec<(u32, &str)> = (0..23).map(|i| (i, "1")).collect();
        let inst = instance(&weights, vec![MatroidDescriptor::Uniform { rank: 2 }]);
        assert!(matches!(brute_opt(&inst), Err(BuybackError::SizeLimit { size: 23, .. })));
    }
}

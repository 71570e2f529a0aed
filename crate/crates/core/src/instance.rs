use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, One};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::ratio::optimal_r_rational;
use crate::error::{BuybackError, Result};
use crate::matroid::{Element, MatroidDescriptor};
use crate::weight::{ElementId, Weight};

/// Acceptance threshold `r`: an explicit rational or the ratio-minimizing value.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Threshold {
    #[default]
    Optimal,
    Explicit(Weight),
}

impl Threshold {
    /// Exact threshold used by the engine. `Optimal` is rounded up to a rational.
    pub fn resolve(&self, k: usize, f: &Weight) -> BigRational {
        match self {
            Threshold::Optimal => optimal_r_rational(k, f.as_ratio()),
            Threshold::Explicit(r) => r.as_ratio().clone(),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Optimal => f.write_str("optimal"),
            Threshold::Explicit(w) => write!(f, "{w}"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.trim() == "optimal" {
            Ok(Threshold::Optimal)
        } else {
            s.parse().map(Threshold::Explicit).map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub k: usize,
    pub f: Weight,
    /// Defaults to `optimal` when absent.
    #[serde(default)]
    pub r: Threshold,
    pub elements: Vec<Element>,
    pub matroids: Vec<MatroidDescriptor>,
    pub order: Vec<ElementId>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let instance: Instance =
            serde_json::from_str(text).map_err(|e| BuybackError::Input(e.to_string()))?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(BuybackError::Input("k must be at least 1".to_string()));
        }
        if self.matroids.len() != self.k {
            return Err(BuybackError::Input(format!(
                "k = {} but {} matroids given",
                self.k,
                self.matroids.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if !seen.insert(e.id) {
                return Err(BuybackError::DuplicateElement(e.id));
            }
        }
        let order: BTreeSet<ElementId> = self.order.iter().copied().collect();
        if order.len() != self.order.len() || order != seen {
            return Err(BuybackError::Input(
                "order must be a permutation of the element ids".to_string(),
            ));
        }
        for m in &self.matroids {
            m.validate()?;
            if let Some(id) = seen.iter().find(|&&id| !m.covers(id)) {
                return Err(BuybackError::UnknownElement(*id));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn weights(&self) -> BTreeMap<ElementId, Weight> {
        self.elements.iter().map(|e| (e.id, e.weight.clone())).collect()
    }

    pub fn element(&self, id: ElementId) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn threshold(&self) -> BigRational {
        self.r.resolve(self.k, &self.f)
    }

    pub fn all_matroids(&self) -> bool {
        self.matroids.iter().all(MatroidDescriptor::is_matroid)
    }

    pub fn independent(&self, set: &BTreeSet<ElementId>) -> Result<bool> {
        for m in &self.matroids {
            if !m.is_independent(set)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn weight_of<'a, I>(&self, ids: I) -> Weight
    where
        I: IntoIterator<Item = &'a ElementId>,
    {
        let w = self.weights();
        ids.into_iter().filter_map(|id| w.get(id)).sum()
    }

    /// `1 + f` as an exact rational.
    pub fn one_plus_f(&self) -> BigRational {
        BigRational::one() + self.f.as_ratio()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"k":2,"f":"0/1","r":"optimal",
        "elements":[{"id":0,"weight":"5/1"},{"id":1,"weight":"4"}],
        "matroids":[{"type":"uniform","rank":1},{"type":"partition","classes":{"0":0,"1":0},"capacities":[1]}],
        "order":[1,0]}"#;

    #[test]
    fn parses_and_validates() {
        let inst = Instance::from_json(SAMPLE).unwrap();
        assert_eq!(inst.k, 2);
        assert_eq!(inst.r, Threshold::Optimal);
        assert_eq!(inst.order, vec![ElementId(1), ElementId(0)]);
        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn rejects_bad_order_and_k() {
        let bad = SAMPLE.replace("\"order\":[1,0]", "\"order\":[1,1]");
        assert!(Instance::from_json(&bad).is_err());
        let bad = SAMPLE.replace("\"k\":2", "\"k\":3");
        assert!(Instance::from_json(&bad).is_err());
    }

    #[test]
    fn uncovered_element_is_rejected() {
        let bad = SAMPLE.replace("\"classes\":{\"0\":0,\"1\":0}", "\"classes\":{\"0\":0}");
        assert_eq!(Instance::from_json(&bad), Err(BuybackError::UnknownElement(ElementId(1))));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = Instance::from_json("{\"k\": 2,,}").unwrap_err();
        assert!(err.to_string().contains("line 1 column"), "{err}");
    }

    #[test]
    fn explicit_threshold() {
        let t: Threshold = serde_json::from_str("\"17/10\"").unwrap();
        assert_eq!(t, Threshold::Explicit(Weight::from_ratio(17, 10)));
        assert_eq!(serde_json::to_string(&t).unwrap(), "\"17/10\"");
    }
}

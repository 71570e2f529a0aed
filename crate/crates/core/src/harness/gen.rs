use std::collections::BTreeMap;

use num::{BigInt, BigRational, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::graph_family;
use crate::error::{BuybackError, Result};
use crate::instance::{Instance, Threshold};
use crate::matroid::{Element, MatroidDescriptor};
use crate::weight::{ElementId, Weight};

/// Environment variable that overrides every configured seed.
pub const SEED_ENV: &str = "BUYBACK_SEED";

/// Largest denominator used when drawing base weights.
const MAX_DENOMINATOR: u64 = 12;
/// Distinct-weight perturbation step; far below `1 / MAX_DENOMINATOR²`.
const PERTURBATION: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    BipartiteMatching,
    RandomPartitionIntersection,
    GraphicIntersection,
    /// Each matroid independently uniform, partition or graphic.
    MixedIntersection,
    FreeDisposal,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalOrder {
    #[default]
    AsGenerated,
    Random,
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub kind: InstanceKind,
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub f: Weight,
    #[serde(default)]
    pub r: Threshold,
    #[serde(default = "default_range")]
    pub weight_range: (Weight, Weight),
    #[serde(default)]
    pub order: ArrivalOrder,
    /// Bipartite side sizes, or (impressions, advertisers) for free disposal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<(usize, usize)>,
    /// Advertiser capacity for free disposal; drawn from 1..=2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<usize>,
    /// Star kind: leaves weigh `1 − eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Weight>,
}

fn default_k() -> usize {
    2
}

fn default_range() -> (Weight, Weight) {
    (Weight::from_integer(1), Weight::from_integer(10))
}

impl GeneratorConfig {
    pub fn new(seed: u64, kind: InstanceKind, n: usize, k: usize) -> Self {
        GeneratorConfig {
            seed,
            kind,
            n,
            k,
            f: Weight::zero(),
            r: Threshold::Optimal,
            weight_range: default_range(),
            order: ArrivalOrder::AsGenerated,
            sides: None,
            capacity: None,
            eps: None,
        }
    }

    /// Applies `BUYBACK_SEED` when set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| BuybackError::Input(format!("{SEED_ENV}={v} is not a 64-bit integer")))?;
        }
        Ok(self)
    }
}

fn config_error(msg: impl Into<String>) -> BuybackError {
    BuybackError::Input(msg.into())
}

/// Base weight with a small denominator in `[lo, hi]`, plus `(idx+1)/10⁷` so all weights differ.
fn draw_weight(rng: &mut ChaCha8Rng, lo: &BigRational, hi: &BigRational, idx: usize) -> Result<Weight> {
    let den = rng.gen_range(1..=MAX_DENOMINATOR);
    let d = BigInt::from(den);
    let lo_num = (lo * &d).ceil().to_integer();
    let hi_num = (hi * &d).floor().to_integer();
    let base = if lo_num > hi_num {
        lo.clone()
    } else {
        let span = (&hi_num - &lo_num).to_u64().ok_or_else(|| config_error("weight range too wide"))?;
        BigRational::new(lo_num + BigInt::from(rng.gen_range(0..=span)), d)
    };
    let bump = BigRational::new(BigInt::from(idx as u64 + 1), BigInt::from(PERTURBATION));
    Weight::new(base + bump)
}

fn partition(class_of: BTreeMap<ElementId, usize>, capacities: Vec<usize>) -> MatroidDescriptor {
    MatroidDescriptor::Partition { class_of, capacities }
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> MatroidDescriptor {
    let classes = rng.gen_range(1..=(n / 2).max(1));
    let capacities = (0..classes).map(|_| rng.gen_range(1..=2)).collect();
    let class_of = (0..n).map(|i| (ElementId(i as u32), rng.gen_range(0..classes))).collect();
    partition(class_of, capacities)
}

fn random_graphic(rng: &mut ChaCha8Rng, n: usize) -> MatroidDescriptor {
    let vertices = rng.gen_range(2..=(n / 2 + 1).max(3));
    let endpoints = (0..n)
        .map(|i| {
            let u = rng.gen_range(0..vertices);
            let mut v = rng.gen_range(0..vertices - 1);
            if v >= u {
                v += 1;
            }
            (ElementId(i as u32), (u, v))
        })
        .collect();
    MatroidDescriptor::Graphic { vertex_count: vertices, endpoints }
}

fn random_uniform(rng: &mut ChaCha8Rng, n: usize) -> MatroidDescriptor {
    MatroidDescriptor::Uniform { rank: rng.gen_range(1..=(n / 2).max(1)) }
}

/// Edge list of a bipartite graph: all pairs when `n = a·b`, otherwise `n` random pairs.
fn bipartite_pairs(rng: &mut ChaCha8Rng, n: usize, (a, b): (usize, usize)) -> Result<Vec<(usize, usize)>> {
    if a == 0 || b == 0 {
        return Err(config_error("bipartite sides must be nonempty"));
    }
    if n == a * b {
        return Ok((0..a).flat_map(|i| (0..b).map(move |j| (i, j))).collect());
    }
    Ok((0..n).map(|_| (rng.gen_range(0..a), rng.gen_range(0..b))).collect())
}

fn two_partitions(pairs: &[(usize, usize)], sides: (usize, usize), caps: (usize, Vec<usize>)) -> Vec<MatroidDescriptor> {
    let ids = |pick: fn(&(usize, usize)) -> usize| {
        pairs.iter().enumerate().map(|(i, p)| (ElementId(i as u32), pick(p))).collect()
    };
    vec![partition(ids(|p| p.0), vec![caps.0; sides.0]), partition(ids(|p| p.1), caps.1)]
}

/// Deterministic in `config`: the same config always yields the same instance.
pub fn gen(config: &GeneratorConfig) -> Result<Instance> {
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = (config.weight_range.0.as_ratio(), config.weight_range.1.as_ratio());
    if lo > hi {
        return Err(config_error("weight_range lower end exceeds upper end"));
    }
    if config.k == 0 {
        return Err(config_error("k must be at least 1"));
    }
    let f = config.f.clone();
    let (matroids, weights): (Vec<MatroidDescriptor>, Option<Vec<Weight>>) = match config.kind {
        InstanceKind::BipartiteMatching => {
            if config.k != 2 {
                return Err(config_error("bipartite-matching needs k = 2"));
            }
            let side = (n as f64).sqrt().ceil().max(1.0) as usize;
            let sides = config.sides.unwrap_or((side, side));
            let pairs = bipartite_pairs(&mut rng, n, sides)?;
            (two_partitions(&pairs, sides, (1, vec![1; sides.1])), None)
        }
        InstanceKind::FreeDisposal => {
            if config.k != 2 {
                return Err(config_error("free-disposal needs k = 2"));
            }
            if !f.is_zero() {
                return Err(config_error("free-disposal has no cancellation penalty; set f = 0"));
            }
            let advertisers = n.clamp(1, 3);
            let sides = config.sides.unwrap_or((n.div_ceil(advertisers).max(1), advertisers));
            if n > sides.0 * sides.1 {
                return Err(config_error(format!(
                    "{n} elements do not fit {} impressions × {} advertisers",
                    sides.0, sides.1
                )));
            }
            // First n (impression, advertiser) pairs, impression-major.
            let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i / sides.1, i % sides.1)).collect();
            let caps = (0..sides.1).map(|_| config.capacity.unwrap_or_else(|| rng.gen_range(1..=2))).collect();
            (two_partitions(&pairs, sides, (1, caps)), None)
        }
        InstanceKind::RandomPartitionIntersection => {
            ((0..config.k).map(|_| random_partition(&mut rng, n)).collect(), None)
        }
        InstanceKind::GraphicIntersection => ((0..config.k).map(|_| random_graphic(&mut rng, n)).collect(), None),
        InstanceKind::MixedIntersection => (
            (0..config.k)
                .map(|_| match rng.gen_range(0..3) {
                    0 => random_uniform(&mut rng, n),
                    1 => random_partition(&mut rng, n),
                    _ => random_graphic(&mut rng, n),
                })
                .collect(),
            None,
        ),
        InstanceKind::Star => {
            if n < 3 {
                return Err(config_error("star needs n ≥ 3"));
            }
            if config.k != 1 {
                return Err(config_error("star is a single independence system; set k = 1"));
            }
            let eps = config.eps.clone().unwrap_or_else(|| Weight::from_ratio(1, 1000));
            let light = Weight::new(BigRational::from_integer(1.into()) - eps.as_ratio())
                .map_err(|_| config_error("star eps must be at most 1"))?;
            let edges: Vec<(ElementId, ElementId)> = (1..n).map(|i| (ElementId(0), ElementId(i as u32))).collect();
            let weights = (0..n).map(|i| if i < 2 { Weight::one() } else { light.clone() }).collect();
            (vec![graph_family(n, &edges)?], Some(weights))
        }
    };
    let weights = match weights {
        Some(w) => w,
        None => (0..n).map(|i| draw_weight(&mut rng, lo, hi, i)).collect::<Result<_>>()?,
    };
    let elements: Vec<Element> =
        weights.into_iter().enumerate().map(|(i, w)| Element { id: ElementId(i as u32), weight: w }).collect();

    let mut order: Vec<ElementId> = elements.iter().map(|e| e.id).collect();
    match config.order {
        ArrivalOrder::AsGenerated => {}
        ArrivalOrder::Random => order.shuffle(&mut rng),
        ArrivalOrder::Ascending => order.sort_by(|a, b| elements[a.0 as usize].weight.cmp(&elements[b.0 as usize].weight).then(a.cmp(b))),
        ArrivalOrder::Descending => order.sort_by(|a, b| elements[b.0 as usize].weight.cmp(&elements[a.0 as usize].weight).then(a.cmp(b))),
    }

    let instance = Instance { k: matroids.len(), f, r: config.r.clone(), elements, matroids, order };
    instance.validate()?;
    Ok(instance)
}

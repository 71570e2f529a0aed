use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gen::{gen, GeneratorConfig, InstanceKind};
use crate::engine::ratio::{competitive_ratio_exact, final_weight_factor, optimal_r_rational};
use crate::engine::{run_state, run_stream, Decision, Rule, RunReport, StepRecord, Variant};
use crate::error::Result;
use crate::instance::Instance;
use crate::matroid::MatroidDescriptor;
use crate::offline::{brute_opt, BRUTE_OPT_LIMIT};
use crate::weight::{opt_ratio_serde, ElementId, Weight};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub configs: Vec<GeneratorConfig>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Alg1]
}

/// `None` means the check does not apply to this run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InvariantChecks {
    /// Reported utility equals `Σ_A w − (1+f) Σ_R w` recomputed from the trace.
    pub utility_identity: bool,
    pub final_independent: bool,
    pub nonnegative_utility: bool,
    /// Total penalty at most `f · w(S(n)) / (r − 1)`, and per element.
    pub penalty_bound: Option<bool>,
    /// `w(S(n)) · (kr − 1) r / (r − 1) ≥ w(OPT)`.
    pub final_weight_bound: Option<bool>,
    /// `utility · c ≥ w(OPT)`.
    pub ratio_bound: Option<bool>,
    /// Final weight equals OPT at `k = 1, f = 0, r = 1`.
    pub exact_optimum: Option<bool>,
    /// Bipartite matching runs never hold more edges than the smaller side.
    pub matching_memory: Option<bool>,
}

impl InvariantChecks {
    pub fn passed(&self) -> bool {
        self.utility_identity
            && self.final_independent
            && self.nonnegative_utility
            && [self.penalty_bound, self.final_weight_bound, self.ratio_bound, self.exact_optimum, self.matching_memory]
                .iter()
                .all(|c| c.unwrap_or(true))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSummary {
    pub index: usize,
    pub seed: u64,
    pub kind: InstanceKind,
    pub n: usize,
    pub k: usize,
    pub variant: Variant,
    #[serde(with = "opt_ratio_serde")]
    pub utility: Option<BigRational>,
    pub final_weight: Option<Weight>,
    pub opt_weight: Option<Weight>,
    #[serde(with = "opt_ratio_serde")]
    pub observed_ratio: Option<BigRational>,
    /// Guarantee for this variant: `c` for the matroid algorithms, `n · c₁` for the baseline.
    #[serde(with = "opt_ratio_serde")]
    pub theoretical_c: Option<BigRational>,
    pub checks: Option<InvariantChecks>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchReport {
    pub instances: Vec<InstanceSummary>,
    #[serde(with = "opt_ratio_serde")]
    pub worst_ratio: Option<BigRational>,
    /// Largest observed ratio divided by its guarantee.
    #[serde(with = "opt_ratio_serde")]
    pub worst_ratio_to_bound: Option<BigRational>,
    pub failed_checks: usize,
    pub errors: usize,
    pub all_passed: bool,
}

fn sum_weights(instance: &Instance, ids: impl IntoIterator<Item = ElementId>) -> BigRational {
    ids.into_iter().map(|id| instance.element(id).map(|e| e.weight.as_ratio().clone()).unwrap_or_default()).sum()
}

fn recomputed_utility(instance: &Instance, trace: &[StepRecord]) -> BigRational {
    let accepted = trace.iter().filter(|s| s.decision.accepted()).map(|s| s.element);
    let canceled: Vec<ElementId> = trace
        .iter()
        .flat_map(|s| match &s.decision {
            Decision::AcceptEvict { evicted } => evicted.iter().copied().collect(),
            _ => Vec::new(),
        })
        .collect();
    sum_weights(instance, accepted) - instance.one_plus_f() * sum_weights(instance, canceled)
}

fn peak_size(trace: &[StepRecord]) -> usize {
    let mut size = 0usize;
    let mut peak = 0;
    for s in trace {
        match &s.decision {
            Decision::AcceptFree => size += 1,
            Decision::AcceptEvict { evicted } => size = size + 1 - evicted.len(),
            Decision::Reject => {}
        }
        peak = peak.max(size);
    }
    peak
}

fn smaller_side(instance: &Instance) -> Option<usize> {
    let sides: Vec<usize> = instance
        .matroids
        .iter()
        .filter_map(|m| match m {
            MatroidDescriptor::Partition { capacities, .. } if capacities.iter().all(|&c| c == 1) => {
                Some(capacities.len())
            }
            _ => None,
        })
        .collect();
    (sides.len() == 2).then(|| sides[0].min(sides[1]))
}

/// `n · c₁` with `c₁` at the baseline's rational threshold (exactly 1 when `f = 0`).
fn baseline_guarantee(instance: &Instance) -> Result<BigRational> {
    let f = instance.f.as_ratio();
    let c1 = if f.is_zero() {
        BigRational::one()
    } else {
        competitive_ratio_exact(1, f, &optimal_r_rational(1, f))?
    };
    Ok(c1 * BigRational::from_integer(BigInt::from(instance.n())))
}

struct Outcome {
    report: RunReport,
    checks: InvariantChecks,
    guarantee: Option<BigRational>,
}

fn evaluate(instance: &Instance, kind: InstanceKind, variant: Variant, opt: Option<&Weight>) -> Result<Outcome> {
    let (report, penalty_ok) = match variant {
        Variant::SingleElement => (run_stream(instance, variant)?, None),
        Variant::Alg1 | Variant::Alg2 => {
            let rule = if variant == Variant::Alg1 { Rule::Circuit } else { Rule::Greedy };
            let state = run_state(instance, rule)?;
            let penalty = (state.params().r > BigRational::one())
                .then(|| state.penalty_bound_violations().map(|v| v.is_empty()))
                .transpose()?;
            (state.report(), penalty)
        }
    };
    let r = instance.threshold();
    let f = instance.f.as_ratio();
    let guarantee = match variant {
        Variant::SingleElement => Some(baseline_guarantee(instance)?),
        _ if r > BigRational::one() + f => Some(competitive_ratio_exact(instance.k, f, &r)?),
        _ => None,
    };
    let matroid_run = variant != Variant::SingleElement && instance.all_matroids();
    let mut checks = InvariantChecks {
        utility_identity: recomputed_utility(instance, &report.trace) == report.utility,
        final_independent: instance.independent(&report.final_set)?,
        nonnegative_utility: !report.utility.is_negative(),
        penalty_bound: penalty_ok,
        matching_memory: (kind == InstanceKind::BipartiteMatching)
            .then(|| smaller_side(instance).map(|s| peak_size(&report.trace) <= s))
            .flatten(),
        ..Default::default()
    };
    if let Some(opt) = opt {
        let opt = opt.as_ratio();
        if matroid_run && r > BigRational::one() {
            let factor = final_weight_factor(instance.k, &r)?;
            checks.final_weight_bound = Some(report.final_weight.as_ratio() * factor >= *opt);
        }
        if let Some(c) = guarantee.as_ref().filter(|_| matroid_run || variant == Variant::SingleElement) {
            checks.ratio_bound = Some(&report.utility * c >= *opt);
        }
        if matroid_run && instance.k == 1 && f.is_zero() && r == BigRational::one() {
            checks.exact_optimum = Some(report.final_weight.as_ratio() == opt);
        }
    }
    Ok(Outcome { report, checks, guarantee })
}

fn run_one(index: usize, config: &GeneratorConfig, variant: Variant) -> InstanceSummary {
    let mut summary = InstanceSummary {
        index,
        seed: config.seed,
        kind: config.kind,
        n: config.n,
        k: config.k,
        variant,
        utility: None,
        final_weight: None,
        opt_weight: None,
        observed_ratio: None,
        theoretical_c: None,
        checks: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let instance = gen(config)?;
        summary.k = instance.k;
        let opt = if instance.n() <= BRUTE_OPT_LIMIT { Some(brute_opt(&instance)?.weight) } else { None };
        let outcome = evaluate(&instance, config.kind, variant, opt.as_ref())?;
        let report = match &opt {
            Some(w) => outcome.report.with_opt(w.clone()),
            None => outcome.report,
        };
        summary.utility = Some(report.utility.clone());
        summary.final_weight = Some(report.final_weight.clone());
        summary.opt_weight = report.opt_weight.clone();
        summary.observed_ratio = report.observed_ratio.clone();
        summary.theoretical_c = outcome.guarantee;
        summary.checks = Some(outcome.checks);
        Ok(())
    })();
    if let Err(e) = result {
        summary.error = Some(e.to_string());
    }
    summary
}

/// Runs every config under every variant; instances run in parallel and the
/// report is ordered by config, then variant.
pub fn run_batch(configs: &[GeneratorConfig], variants: &[Variant]) -> BatchReport {
    let jobs: Vec<(usize, &GeneratorConfig, Variant)> = configs
        .iter()
        .flat_map(|c| variants.iter().map(move |&v| (c, v)))
        .enumerate()
        .map(|(i, (c, v))| (i, c, v))
        .collect();
    let instances: Vec<InstanceSummary> = jobs.par_iter().map(|&(i, c, v)| run_one(i, c, v)).collect();

    let worst_ratio = instances.iter().filter_map(|s| s.observed_ratio.clone()).max();
    let worst_ratio_to_bound = instances
        .iter()
        .filter_map(|s| Some(s.observed_ratio.as_ref()? / s.theoretical_c.as_ref()?))
        .max();
    let failed_checks = instances.iter().filter(|s| s.checks.as_ref().is_some_and(|c| !c.passed())).count();
    let errors = instances.iter().filter(|s| s.error.is_some()).count();
    BatchReport {
        all_passed: failed_checks == 0 && errors == 0,
        instances,
        worst_ratio,
        worst_ratio_to_bound,
        failed_checks,
        errors,
    }
}

impl BatchReport {
    pub fn failures(&self) -> Vec<&InstanceSummary> {
        self.instances.iter().filter(|s| s.error.is_some() || s.checks.as_ref().is_some_and(|c| !c.passed())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Threshold;

    #[test]
    fn empty_batch_is_empty() {
        let report = run_batch(&[], &[Variant::Alg1]);
        assert!(report.instances.is_empty());
        assert!(report.worst_ratio.is_none());
        assert!(report.all_passed);
    }

    #[test]
    fn bipartite_batch_within_bound() {
        let configs: Vec<GeneratorConfig> = (0..40)
            .map(|s| GeneratorConfig {
                r: Threshold::Explicit("17/10".parse().unwrap()),
                ..GeneratorConfig::new(s, InstanceKind::BipartiteMatching, 9, 2)
            })
            .collect();
        let report = run_batch(&configs, &[Variant::Alg1, Variant::Alg2]);
        assert!(report.all_passed, "{:?}", report.failures());
        let bound: BigRational = "5828571/1000000".parse::<Weight>().unwrap().into_ratio();
        assert!(report.worst_ratio.unwrap() <= bound);
    }

    #[test]
    fn exact_at_k1_f0_r1() {
        let configs: Vec<GeneratorConfig> = (0..30)
            .map(|s| GeneratorConfig {
                r: Threshold::Explicit(Weight::one()),
                ..GeneratorConfig::new(s, InstanceKind::MixedIntersection, 8, 1)
            })
            .collect();
        let report = run_batch(&configs, &[Variant::Alg1]);
        assert!(report.all_passed, "{:?}", report.failures());
        assert!(report.instances.iter().all(|s| s.checks.as_ref().unwrap().exact_optimum == Some(true)));
    }

    #[test]
    fn failures_are_recorded_and_batch_continues() {
        let configs = vec![
            GeneratorConfig::new(0, InstanceKind::BipartiteMatching, 4, 3),
            GeneratorConfig::new(1, InstanceKind::BipartiteMatching, 4, 2),
        ];
        let report = run_batch(&configs, &[Variant::Alg1]);
        assert_eq!(report.errors, 1);
        assert!(report.instances[1].checks.as_ref().unwrap().passed());
    }

    #[test]
    fn star_runs_through_the_baseline() {
        let configs = vec![GeneratorConfig::new(0, InstanceKind::Star, 6, 1)];
        let report = run_batch(&configs, &[Variant::SingleElement, Variant::Alg1]);
        assert!(report.instances[0].error.is_none());
        assert!(report.instances[0].checks.as_ref().unwrap().passed());
        // the matroid engine refuses a non-matroid family
        assert!(report.instances[1].error.is_some());
    }

    #[test]
    fn reproducible() {
        let configs: Vec<GeneratorConfig> =
            (0..5).map(|s| GeneratorConfig::new(s, InstanceKind::GraphicIntersection, 7, 2)).collect();
        let a = serde_json::to_string(&run_batch(&configs, &[Variant::Alg1])).unwrap();
        let b = serde_json::to_string(&run_batch(&configs, &[Variant::Alg1])).unwrap();
        assert_eq!(a, b);
    }
}

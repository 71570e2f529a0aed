use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use buyback::adversary::{
    empty_bipartite, k2_adversary, positivity_check, star_adversary, verify_sequence_inequality, z_sequence,
    K2Config,
};
use buyback::audit::audit_run;
use buyback::engine::baseline::SingleElementBaseline;
use buyback::engine::ratio::{
    competitive_ratio, competitive_ratio_exact, optimal_competitive_ratio, optimal_r, optimal_r_rational,
    single_item_ratio,
};
use buyback::harness::{gen, run_batch, BatchConfig, GeneratorConfig};
use buyback::weight::{float17, format_ratio, parse_ratio, ratio_to_f64};
use buyback::{
    axiom_check, brute_opt, greedy_offline, run_stream, AlgorithmState, BuybackError, ElementId, Instance,
    MatroidDescriptor, Params, Threshold, Variant, Weight,
};
use clap::{Parser, Subcommand, ValueEnum};
use num::{BigInt, BigRational};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "buyback", version, about = "Online buyback over matroid intersections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an online algorithm over an instance.
    Run {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "alg1")]
        variant: VariantArg,
        /// Attach the brute-force optimum and the observed ratio.
        #[arg(long)]
        opt: bool,
    },
    /// Offline optimum (exhaustive) or greedy solution.
    Opt {
        input: Option<PathBuf>,
        #[arg(long)]
        greedy: bool,
    },
    /// Run the circuit rule with the charging audit.
    Audit { input: Option<PathBuf> },
    /// Lower-bound adversaries and the z-recurrence.
    Adversary {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value = "1/10000")]
        eps: String,
        /// Steps (k2), vertices (star) or terms (recurrence).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value = "0")]
        f: String,
        /// Largest probe weight for k2.
        #[arg(long, default_value = "1000000")]
        cap: String,
        /// Number of z terms to print (recurrence).
        #[arg(long, default_value_t = 32)]
        show: usize,
    },
    /// Generate an instance from a generator config.
    Gen { config: Option<PathBuf> },
    /// Optimal threshold and competitive ratio.
    Ratio { k: usize, f: String, r: Option<String> },
    /// Exhaustive matroid axiom check of every descriptor.
    Axioms { input: Option<PathBuf> },
    /// Batch experiment over generator configs.
    Batch { config: Option<PathBuf> },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Alg1,
    Alg2,
    SingleElement,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Alg1 => Variant::Alg1,
            VariantArg::Alg2 => Variant::Alg2,
            VariantArg::SingleElement => Variant::SingleElement,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    K2,
    Star,
    Recurrence,
}

enum Failure {
    /// Exit 1.
    Invariant(String),
    /// Exit 2.
    Input(String),
}

impl From<BuybackError> for Failure {
    fn from(e: BuybackError) -> Self {
        match e {
            BuybackError::Invariant(_) | BuybackError::MatchingIncomplete { .. } => Failure::Invariant(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(format!("{e:#}"))
    }
}

type CmdResult = Result<(String, bool), Failure>;

fn read_input(path: Option<&PathBuf>) -> anyhow::Result<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

/// Accepts `num/den`, integers and plain decimals such as `0.25`.
fn parse_number(s: &str) -> anyhow::Result<BigRational> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let num: BigInt = digits.parse().map_err(|_| anyhow!("malformed number `{s}`"))?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let q = BigRational::new(num, den);
        return Ok(if negative { -q } else { q });
    }
    parse_ratio(s).map_err(|e| anyhow!(e))
}

fn parse_weight(s: &str) -> Result<Weight, Failure> {
    Ok(Weight::new(parse_number(s)?)?)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Input(e.to_string()))
}

fn emit<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Input(e.to_string()))
}

#[derive(Serialize)]
struct F17(#[serde(serialize_with = "float17::serialize")] f64);

#[derive(Serialize)]
struct RatioOutput {
    k: usize,
    f: Weight,
    optimal_r: F17,
    c: F17,
    optimal_r_rational: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    single_item_ratio: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<Weight>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_at_r: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_at_r_exact: Option<String>,
}

#[derive(Serialize)]
struct WithApprox<'a, T: Serialize> {
    #[serde(flatten)]
    report: &'a T,
    ratio_approx: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence_checks: Option<Vec<buyback::adversary::SequenceCheck>>,
}

#[derive(Serialize)]
struct RecurrenceOutput {
    beta: F17,
    k: usize,
    f: F17,
    terms: usize,
    /// Leading terms only.
    z: Vec<F17>,
    renormalizations: usize,
    discriminant: F17,
    first_negative_index: Option<usize>,
    positivity: buyback::adversary::Positivity,
}

fn load_instance(path: Option<&PathBuf>) -> Result<Instance, Failure> {
    parse_instance(&read_input(path)?)
}

fn cmd_run(input: Option<&PathBuf>, variant: Variant, with_opt: bool) -> CmdResult {
    let instance = load_instance(input)?;
    let mut report = run_stream(&instance, variant)?;
    if with_opt {
        report = report.with_opt(brute_opt(&instance)?.weight);
    }
    Ok((emit(&report)?, true))
}

fn cmd_opt(input: Option<&PathBuf>, greedy: bool) -> CmdResult {
    let instance = load_instance(input)?;
    let result = if greedy { greedy_offline(&instance)? } else { brute_opt(&instance)? };
    Ok((emit(&result)?, true))
}

fn cmd_audit(input: Option<&PathBuf>) -> CmdResult {
    let instance = load_instance(input)?;
    let report = audit_run(&instance)?;
    Ok((emit(&report)?, report.passed))
}

fn cmd_ratio(k: usize, f: &str, r: Option<&str>) -> CmdResult {
    if k == 0 {
        return Err(Failure::Input("k must be at least 1".into()));
    }
    let f = parse_weight(f)?;
    let ff = f.to_f64();
    let mut out = RatioOutput {
        k,
        optimal_r: F17(optimal_r(k, ff)),
        c: F17(optimal_competitive_ratio(k, ff)),
        optimal_r_rational: format_ratio(&optimal_r_rational(k, f.as_ratio())),
        single_item_ratio: (k == 1).then(|| F17(single_item_ratio(ff))),
        r: None,
        c_at_r: None,
        c_at_r_exact: None,
        f,
    };
    if let Some(r) = r {
        let r = parse_weight(r)?;
        out.c_at_r = Some(F17(competitive_ratio(k, ff, r.to_f64())?));
        out.c_at_r_exact = Some(format_ratio(&competitive_ratio_exact(k, out.f.as_ratio(), r.as_ratio())?));
        out.r = Some(r);
    }
    Ok((emit(&out)?, true))
}

fn cmd_axioms(input: Option<&PathBuf>) -> CmdResult {
    let text = read_input(input)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed JSON: {e}")))?;
    let (descriptors, ground): (Vec<MatroidDescriptor>, Vec<ElementId>) = if value.get("elements").is_some() {
        let instance = parse_instance(&text)?;
        let ground = instance.elements.iter().map(|e| e.id).collect();
        (instance.matroids, ground)
    } else {
        let desc: MatroidDescriptor =
            serde_json::from_value(value).map_err(|e| Failure::Input(format!("not a descriptor: {e}")))?;
        let ground = match &desc {
            MatroidDescriptor::Partition { class_of, .. } => class_of.keys().copied().collect(),
            MatroidDescriptor::Graphic { endpoints, .. } => endpoints.keys().copied().collect(),
            MatroidDescriptor::Family { maximal } => {
                maximal.iter().flatten().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect()
            }
            MatroidDescriptor::Uniform { .. } => {
                return Err(Failure::Input("a uniform descriptor has no ground set; pass an instance".into()))
            }
        };
        (vec![desc], ground)
    };
    let mut verdicts = Vec::new();
    let mut all = true;
    for d in &descriptors {
        let v = axiom_check(d, &ground)?;
        all &= v.passed();
        verdicts.push(json!({"type": d.kind(), "verdict": to_value(&v)?}));
    }
    Ok((emit(&json!({"ground_size": ground.len(), "descriptors": verdicts, "passed": all}))?, all))
}

fn parse_instance(text: &str) -> Result<Instance, Failure> {
    let instance = Instance::from_json(text)?;
    instance.validate()?;
    Ok(instance)
}

fn cmd_gen(input: Option<&PathBuf>) -> CmdResult {
    let text = read_input(input)?;
    let config: GeneratorConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed generator config: {e}")))?;
    let instance = gen(&config.with_env_seed()?)?;
    Ok((emit(&instance)?, true))
}

fn cmd_batch(input: Option<&PathBuf>) -> CmdResult {
    let text = read_input(input)?;
    let config: BatchConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed batch config: {e}")))?;
    let configs = config.configs.into_iter().map(GeneratorConfig::with_env_seed).collect::<Result<Vec<_>, _>>()?;
    let report = run_batch(&configs, &config.variants);
    Ok((emit(&report)?, report.all_passed))
}

#[allow(clippy::too_many_arguments)]
fn cmd_adversary(
    mode: Mode,
    eps: &str,
    steps: Option<usize>,
    beta: Option<f64>,
    k: usize,
    f: &str,
    cap: &str,
    show: usize,
) -> CmdResult {
    let f = parse_weight(f)?;
    match mode {
        Mode::K2 => {
            let params = Params::new(2, f.clone(), &Threshold::Optimal)?;
            let mut alg = AlgorithmState::new(params, empty_bipartite())?;
            let config = K2Config { f: f.clone(), eps: parse_weight(eps)?, max_steps: steps.unwrap_or(30), weight_cap: parse_weight(cap)? };
            let report = k2_adversary(&mut alg, &config)?;
            let beta = beta.unwrap_or_else(|| optimal_competitive_ratio(2, f.to_f64()));
            let checks = verify_sequence_inequality(&report, beta, 2)?;
            let ok = report.max_probe_gap() <= *config.eps.as_ratio();
            let out = WithApprox {
                report: &report,
                ratio_approx: report.best_ratio_f64().map(F17),
                beta: Some(F17(beta)),
                sequence_checks: Some(checks),
            };
            Ok((emit(&out)?, ok))
        }
        Mode::Star => {
            let mut alg = SingleElementBaseline::new(f);
            let report = star_adversary(&mut alg, steps.unwrap_or(10), &parse_weight(eps)?)?;
            let out = WithApprox {
                report: &report,
                ratio_approx: report.ratio.as_ref().map(|q| F17(ratio_to_f64(q))),
                beta: None,
                sequence_checks: None,
            };
            Ok((emit(&out)?, report.bound_met))
        }
        Mode::Recurrence => {
            let beta = beta.unwrap_or_else(|| optimal_competitive_ratio(k, f.to_f64()));
            let seq = z_sequence(beta, k, f.to_f64(), steps.unwrap_or(10_000))?;
            let out = RecurrenceOutput {
                beta: F17(seq.beta),
                k,
                f: F17(seq.f),
                terms: seq.z.len(),
                z: seq.z.iter().take(show).map(|&v| F17(v)).collect(),
                renormalizations: seq.renormalizations,
                discriminant: F17(seq.discriminant),
                first_negative_index: seq.first_negative_index,
                positivity: positivity_check(&seq),
            };
            Ok((emit(&out)?, true))
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Run { input, variant, opt } => cmd_run(input.as_ref(), (*variant).into(), *opt),
        Command::Opt { input, greedy } => cmd_opt(input.as_ref(), *greedy),
        Command::Audit { input } => cmd_audit(input.as_ref()),
        Command::Adversary { mode, eps, steps, beta, k, f, cap, show } => {
            cmd_adversary(*mode, eps, *steps, *beta, *k, f, cap, *show)
        }
        Command::Gen { config } => cmd_gen(config.as_ref()),
        Command::Ratio { k, f, r } => cmd_ratio(*k, f, r.as_deref()),
        Command::Axioms { input } => cmd_axioms(input.as_ref()),
        Command::Batch { config } => cmd_batch(config.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((text, ok)) => {
            // A closed pipe downstream is not our failure.
            let _ = writeln!(std::io::stdout(), "{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Scenario runners behind the CLI: quantitative reproductions, the bound
//! race, the consolidated verification suite, and result serialization.
//!
//! All outputs are deterministic functions of their configuration and seed;
//! CSV renders f64 values with the shortest round-trip formatting, so result
//! files are byte-identical across runs and thread counts.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::divergence::{
    check_binomial_sandwich, check_entropy_inequalities, check_sum_sqrt_exp, ProbValue,
};
use crate::error::{Error, Result};
use crate::intervals::{check_appendix_lemmas, delta_profile, finite_class_bound, gap_series_bound};
use crate::loss_engine::{
    cumulative_loss, kw_exp_scale, LossCurve, PredictorRule, ENUMERATION_THRESHOLD, RNG_NAME,
};
use crate::model_class::{class_hash, ModelClass, Parameter};

/// Fixed tolerances used by the verification suite, recorded in manifests.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub analytic_identity: f64,
    pub entropy_grid: f64,
    pub sandwich: f64,
    pub series: f64,
    pub exact_interval: f64,
    pub probability_tail: f64,
    pub mc_sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            analytic_identity: 1e-12,
            entropy_grid: 1e-12,
            sandwich: 1e-12,
            series: 1e-12,
            exact_interval: 0.0,
            probability_tail: 1e-10,
            mc_sigmas: 3.0,
        }
    }
}

/// Normalized description of a scenario run (embedded in the manifest).
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub class_hash: Option<String>,
    pub horizon: Option<u64>,
    pub precision: Option<u32>,
    pub rules: Vec<String>,
    pub mc_paths: Option<u64>,
    pub seed: Option<u64>,
    /// horizon/precision consistency (2^(−P) < 1/(4√H)); inconsistent runs
    /// proceed but are flagged.
    pub consistent: bool,
}

impl ScenarioConfig {
    pub fn new(scenario: &str) -> Self {
        ScenarioConfig {
            scenario: scenario.to_string(),
            class_hash: None,
            horizon: None,
            precision: None,
            rules: Vec::new(),
            mc_paths: None,
            seed: None,
            consistent: true,
        }
    }
}

/// Run metadata. Two runs with identical manifests (timing aside) produce
/// byte-identical result files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ScenarioConfig,
    pub rng: &'static str,
    pub threads: usize,
    pub enumeration_threshold: u64,
    pub window_mass_bound_per_n: f64,
    pub score_tie_tolerance: f64,
    pub tolerances: Tolerances,
    pub environment: String,
    /// Wall-clock milliseconds; informational only, excluded from identity.
    pub timing_ms: u128,
}

impl RunManifest {
    pub fn new(config: ScenarioConfig, timing_ms: u128) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            rng: RNG_NAME,
            threads: rayon::current_num_threads(),
            enumeration_threshold: ENUMERATION_THRESHOLD,
            window_mass_bound_per_n: 1e-13,
            score_tie_tolerance: crate::estimator::SCORE_TIE_TOL,
            tolerances: Tolerances::default(),
            environment: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            timing_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Consistency rule between a curve horizon and a grid truncation precision.
pub fn horizon_precision_consistent(precision: u32, horizon: u64) -> bool {
    // 2^(−P) < 1/(4√H)  ⇔  4√H < 2^P
    4.0 * (horizon as f64).sqrt() < (precision as f64).exp2()
}

/// One row of the equal-complexity cluster reproduction.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleRow {
    pub n_param: u32,
    pub horizon: u64,
    pub measured: f64,
    /// (2^N − 5)/84 — the proven floor for the infinite sum (vacuous when
    /// negative).
    pub lower_value: f64,
    /// 2^N, the general bound's scale (up to a constant).
    pub exp_scale: f64,
    pub ratio_to_prev: Option<f64>,
    pub truncated: bool,
}

/// Exact cumulative MAP loss of the cluster classes at the horizon, with
/// the proven floor and growth ratios. Runs whose horizon cannot reach the
/// last contribution zone (n ≈ 2^(2·(2^N−1))) are labeled truncated.
pub fn run_counterexample(n_list: &[u32], horizon: u64) -> Result<Vec<CounterexampleRow>> {
    let mut rows: Vec<CounterexampleRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let class = ModelClass::counterexample(n)?;
        let curve = cumulative_loss(&class, horizon, PredictorRule::Mdl)?;
        let measured = curve.final_cumulative();
        let needed_exp = 2u32.saturating_mul((1u32 << n) - 1);
        let truncated = needed_exp >= 63 || horizon < (1u64 << needed_exp);
        let ratio_to_prev = rows.last().map(|p: &CounterexampleRow| measured / p.measured);
        rows.push(CounterexampleRow {
            n_param: n,
            horizon,
            measured,
            lower_value: ((1u64 << n) as f64 - 5.0) / 84.0,
            exp_scale: kw_exp_scale(n as f64),
            ratio_to_prev,
            truncated,
        });
    }
    Ok(rows)
}

pub fn counterexample_to_csv(rows: &[CounterexampleRow]) -> String {
    let mut s = String::from("N,horizon,measured,lower_value,exp_scale,ratio_to_prev,truncated\n");
    for r in rows {
        let ratio = r
            .ratio_to_prev
            .map_or(String::new(), |v| v.to_string());
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n_param, r.horizon, r.measured, r.lower_value, r.exp_scale, ratio, r.truncated
        )
        .unwrap();
    }
    s
}

/// One row of the half-complexity simulation check.
#[derive(Debug, Clone, Serialize)]
pub struct HalfKwRow {
    pub theta0: String,
    pub kw0: f64,
    pub measured: f64,
    pub budget: f64,
    pub tail_estimate: f64,
    pub loss_to_kw_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfKwReport {
    pub precision: u32,
    pub horizon: u64,
    pub consistent: bool,
    pub rows: Vec<HalfKwRow>,
    pub max_ratio: f64,
}

/// Cumulative MAP loss on the coded dyadic grid versus the half-complexity
/// budget ½·Kw(θ₀), per requested true parameter.
pub fn run_half_kw_check(
    theta0_list: &[Parameter],
    precision: u32,
    horizon: u64,
) -> Result<HalfKwReport> {
    let grid = ModelClass::dyadic_grid(precision)?;
    let mut rows = Vec::with_capacity(theta0_list.len());
    let mut max_ratio = f64::NEG_INFINITY;
    for t0 in theta0_list {
        let class = grid.with_true(t0)?;
        let kw0 = class.kws()[class.true_index().unwrap()];
        let curve = cumulative_loss(&class, horizon, PredictorRule::Mdl)?;
        let measured = curve.final_cumulative();
        let ratio = measured / kw0;
        max_ratio = max_ratio.max(ratio);
        rows.push(HalfKwRow {
            theta0: t0.to_string(),
            kw0,
            measured,
            budget: 0.5 * kw0,
            tail_estimate: curve.tail_estimate,
            loss_to_kw_ratio: ratio,
            pass: measured <= 0.5 * kw0,
        });
    }
    Ok(HalfKwReport {
        precision,
        horizon,
        consistent: horizon_precision_consistent(precision, horizon),
        rows,
        max_ratio,
    })
}

pub fn half_kw_to_csv(report: &HalfKwReport) -> String {
    let mut s = String::from("theta0,kw0,measured,budget,tail_estimate,loss_to_kw_ratio,pass\n");
    for r in &report.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.theta0, r.kw0, r.measured, r.budget, r.tail_estimate, r.loss_to_kw_ratio, r.pass
        )
        .unwrap();
    }
    s
}

/// A bound column in the race table.
#[derive(Debug, Clone, Serialize)]
pub struct BoundValue {
    pub label: String,
    pub value: f64,
    /// The source fixes only the scale; the multiplicative constant is
    /// unspecified.
    pub up_to_constant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaceRow {
    pub rule: String,
    pub measured: f64,
    pub accel_error_bound: f64,
    /// measured / bound-value, aligned with the report's bound columns.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaceReport {
    pub horizon: u64,
    pub bounds: Vec<BoundValue>,
    pub rows: Vec<RaceRow>,
}

/// Measured cumulative loss per predictor against every applicable bound
/// value: the 2^Kw scale, the gap-series value, the finite-class value, and
/// the mixture budget ln(w₀⁻¹).
pub fn run_bound_race(class: &ModelClass, horizon: u64, gap_steps: u32) -> Result<RaceReport> {
    let t0 = class.require_true_index()?;
    let kw0 = class.kws()[t0];
    let profile = delta_profile(class, gap_steps)?;
    let (gap_value, gap_truncated) = gap_series_bound(&profile, false);
    let bounds = vec![
        BoundValue {
            label: "exp-complexity scale 2^Kw0".into(),
            value: kw_exp_scale(kw0),
            up_to_constant: true,
        },
        BoundValue {
            label: if gap_truncated {
                "gap-series bound (bits, truncated)".into()
            } else {
                "gap-series bound (bits)".into()
            },
            value: gap_value,
            up_to_constant: true,
        },
        BoundValue {
            label: "finite-class bound N + Kw0 (bits)".into(),
            value: finite_class_bound(class)?,
            up_to_constant: true,
        },
        BoundValue {
            label: "mixture budget ln(1/w0) (nats)".into(),
            value: kw0 * LN_2,
            up_to_constant: false,
        },
    ];
    let mut rows = Vec::new();
    for rule in [PredictorRule::Mdl, PredictorRule::Ml, PredictorRule::Bayes] {
        let curve = cumulative_loss(class, horizon, rule)?;
        let measured = curve.final_cumulative();
        let ratios = bounds
            .iter()
            .map(|b| if b.value > 0.0 { measured / b.value } else { f64::INFINITY })
            .collect();
        rows.push(RaceRow {
            rule: rule.to_string(),
            measured,
            accel_error_bound: curve.accel_error_bound,
            ratios,
        });
    }
    Ok(RaceReport { horizon, bounds, rows })
}

pub fn race_to_csv(report: &RaceReport) -> String {
    let mut s = String::from("rule,measured");
    for b in &report.bounds {
        write!(s, ",{}", b.label.replace(',', ";")).unwrap();
        write!(s, ",ratio{}", if b.up_to_constant { " (up to constant)" } else { "" }).unwrap();
    }
    s.push('\n');
    for r in &report.rows {
        write!(s, "{},{}", r.rule, r.measured).unwrap();
        for (b, ratio) in report.bounds.iter().zip(&r.ratios) {
            write!(s, ",{},{}", b.value, ratio).unwrap();
        }
        s.push('\n');
    }
    s
}

/// CSV rendering of a loss curve: n, instantaneous, cumulative.
pub fn curve_to_csv(curve: &LossCurve) -> String {
    let mut s = String::from("n,inst_loss,cum_loss\n");
    for (i, (&v, &c)) in curve.per_n.iter().zip(&curve.cumulative).enumerate() {
        writeln!(s, "{},{},{}", i + 1, v, c).unwrap();
    }
    s
}

/// One verified inequality in the consolidated report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub grid_size: usize,
    pub max_violation: f64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub grid_density: usize,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every analytic certifier at the given density and consolidates the
/// outcomes. The report's `pass` is false iff any check exceeds its
/// tolerance; violations are report content, not errors.
pub fn run_verification_suite(grid_density: usize) -> VerificationReport {
    let tol = Tolerances::default();
    let mut checks = Vec::new();
    let push = |checks: &mut Vec<CheckOutcome>, r: crate::divergence::InequalityReport, tolerance: f64| {
        checks.push(CheckOutcome {
            pass: r.max_violation <= tolerance,
            id: r.lemma_id,
            grid_size: r.grid_size,
            max_violation: r.max_violation,
            worst_point: r.worst_point,
            tolerance,
        });
    };

    for r in check_entropy_inequalities(grid_density) {
        push(&mut checks, r, tol.entropy_grid);
    }

    // binomial sandwich over a θ₀ sweep, merged into one outcome
    let mut worst: Option<crate::divergence::InequalityReport> = None;
    let mut total = 0usize;
    for i in 1..=19u32 {
        let t = ProbValue::new(i as f64 * 0.05).unwrap();
        let r = check_binomial_sandwich(512, t).expect("interior θ₀");
        total += r.grid_size;
        worst = match worst {
            None => Some(r),
            Some(w) if r.max_violation > w.max_violation => Some(r),
            w => w,
        };
    }
    let mut merged = worst.unwrap();
    merged.grid_size = total;
    push(&mut checks, merged, tol.sandwich);

    // series estimates on a log-spaced z sweep, merged
    let mut worst: Option<crate::divergence::InequalityReport> = None;
    let mut total = 0usize;
    for i in 0..200 {
        let z = 0.05 * (10.0f64 / 0.05).powf(i as f64 / 199.0);
        let r = check_sum_sqrt_exp(z).expect("z > 0");
        total += r.grid_size;
        worst = match worst {
            None => Some(r),
            Some(w) if r.max_violation > w.max_violation => Some(r),
            w => w,
        };
    }
    let mut merged = worst.unwrap();
    merged.grid_size = total;
    push(&mut checks, merged, tol.series);

    for r in check_appendix_lemmas(&random_dyadic_grid(1000, 1234), 40) {
        push(&mut checks, r, tol.exact_interval);
    }

    let pass = checks.iter().all(|c| c.pass);
    VerificationReport { grid_density, checks, pass }
}

/// Deterministic grid of random dyadic parameters in (0, 1), plus a few
/// fixed anchors.
pub fn random_dyadic_grid(count: usize, seed: u64) -> Vec<Parameter> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid: Vec<Parameter> = [(3i64, 16i64), (1, 2), (5, 32), (1, 1024), (255, 512)]
        .into_iter()
        .map(|(p, q)| Parameter::from_ratio(p, q).unwrap())
        .collect();
    while grid.len() < count {
        let e: u32 = rng.random_range(2..=24);
        let m: i64 = rng.random_range(0..(1i64 << e)) | 1;
        grid.push(Parameter::from_ratio(m, 1i64 << e).unwrap());
    }
    grid
}

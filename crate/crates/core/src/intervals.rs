//! Nested dyadic-interval construction around the true parameter, the
//! complexity-gap profile it induces over a model class, the cumulative
//! bounds built from that profile, and exact-arithmetic certifiers for the
//! interval and gap properties.
//!
//! Endpoints are exact dyadic rationals throughout; only divergence
//! evaluations at sampled points run in f64.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::divergence::{extended_kl_parts, InequalityReport};
use crate::error::{Error, Result};
use crate::model_class::{big_ratio_to_f64, builtin_test_classes, ModelClass, Parameter};

/// Which construction rule fired at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Left,
    Center,
    Right,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Left => "l",
            StepKind::Center => "c",
            StepKind::Right => "r",
        })
    }
}

/// Half-open interval [lo, hi) with exact dyadic endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    lo: BigRational,
    hi: BigRational,
}

impl DyadicInterval {
    fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo < hi);
        DyadicInterval { lo, hi }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn measure(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x < &self.hi
    }

    /// inf over θ ∈ [lo, hi) of |x − θ| (0 when x is inside).
    pub fn distance_to(&self, x: &BigRational) -> BigRational {
        if self.contains(x) {
            BigRational::zero()
        } else if x < &self.lo {
            &self.lo - x
        } else {
            x - &self.hi
        }
    }

    /// sup over the closure of |θ − x|.
    pub fn sup_distance_to(&self, x: &BigRational) -> BigRational {
        let a = (&self.lo - x).abs();
        let b = (&self.hi - x).abs();
        a.max(b)
    }

    /// inf distance between two half-open intervals (0 on overlap).
    pub fn distance_to_interval(&self, other: &DyadicInterval) -> BigRational {
        if self.lo >= other.hi {
            &self.lo - &other.hi
        } else if other.lo >= self.hi {
            &other.lo - &self.hi
        } else {
            BigRational::zero()
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// One construction step: the kept interval (containing θ₀) and its
/// complement within the previous kept interval (one or two pieces).
#[derive(Debug, Clone)]
pub struct IntervalStep {
    pub k: u32,
    pub kind: StepKind,
    pub kept: DyadicInterval,
    pub complement: Vec<DyadicInterval>,
}

/// Builds the nested halving construction: starting from [0, 1), each step
/// keeps a half-length sub-interval around θ₀ (left / center / right by where
/// θ₀ sits relative to the 3/8 and 5/8 marks) and sheds the rest.
pub fn build_intervals(theta0: &Parameter, steps: u32) -> Result<Vec<IntervalStep>> {
    if !theta0.is_interior() {
        return Err(Error::Boundary(format!("theta0 = {theta0}")));
    }
    if steps > 200 {
        return Err(Error::invalid(format!("steps = {steps} exceeds the cap of 200")));
    }
    let t0 = theta0.ratio();
    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    let mut out = Vec::with_capacity(steps as usize);
    for k in 1..=steps {
        let d = &hi - &lo;
        let eighth = &d / BigRational::from_integer(BigInt::from(8));
        let m38 = &lo + &eighth * BigRational::from_integer(BigInt::from(3));
        let m58 = &lo + &eighth * BigRational::from_integer(BigInt::from(5));
        let half = &lo + &d / BigRational::from_integer(BigInt::from(2));
        let (kind, kept, complement) = if t0 < &m38 {
            (
                StepKind::Left,
                DyadicInterval::new(lo.clone(), half.clone()),
                vec![DyadicInterval::new(half.clone(), hi.clone())],
            )
        } else if t0 < &m58 {
            let q1 = &lo + &eighth * BigRational::from_integer(BigInt::from(2));
            let q3 = &lo + &eighth * BigRational::from_integer(BigInt::from(6));
            (
                StepKind::Center,
                DyadicInterval::new(q1.clone(), q3.clone()),
                vec![
                    DyadicInterval::new(lo.clone(), q1),
                    DyadicInterval::new(q3, hi.clone()),
                ],
            )
        } else {
            (
                StepKind::Right,
                DyadicInterval::new(half.clone(), hi.clone()),
                vec![DyadicInterval::new(lo.clone(), half.clone())],
            )
        };
        lo = kept.lo.clone();
        hi = kept.hi.clone();
        out.push(IntervalStep { k, kind, kept, complement });
    }
    Ok(out)
}

/// Number of leading left-steps the construction performs before the first
/// centering step can occur: max{0, ⌊log₂(3/(4θ₀))⌋}, evaluated exactly; for
/// θ₀ > ½ the reflection 1−θ₀ is used.
///
/// Boundary caveat: when θ₀ = 3·2^(−k₀−2) exactly, step k₀ itself is already
/// a c-step (the construction's half-open thresholds place θ₀ in the center
/// band one step earlier than the floor form suggests).
pub fn initial_left_steps(theta0: &Parameter) -> Result<u32> {
    if !theta0.is_interior() {
        return Err(Error::Boundary(format!("theta0 = {theta0}")));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let t = if theta0.ratio() > &half {
        BigRational::one() - theta0.ratio()
    } else {
        theta0.ratio().clone()
    };
    // largest m ≥ 0 with 2^m ≤ 3/(4t), i.e. t·2^(m+2) ≤ 3
    let three = BigRational::from_integer(BigInt::from(3));
    let mut m = 0u32;
    let mut scaled = &t * BigRational::from_integer(BigInt::from(4));
    if scaled > three {
        return Ok(0);
    }
    loop {
        let next = &scaled * BigRational::from_integer(BigInt::from(2));
        if next <= three {
            scaled = next;
            m += 1;
        } else {
            return Ok(m);
        }
    }
}

/// One row of the complexity-gap profile.
#[derive(Debug, Clone)]
pub struct GapStep {
    pub k: u32,
    /// Lowest-complexity member in the shed complement (none when empty).
    pub competitor: Option<usize>,
    /// Lowest-complexity member in the kept interval.
    pub anchor: usize,
    /// max{Kw(competitor) − Kw(anchor), 0}; +inf when the complement holds
    /// no member.
    pub gap: f64,
}

/// Per-step complexity gaps of a class along the construction at its true
/// parameter.
#[derive(Debug, Clone)]
pub struct DeltaProfile {
    pub theta0_index: usize,
    pub theta0_kw: f64,
    pub steps: Vec<GapStep>,
}

fn argmin_kw(class: &ModelClass, range: std::ops::Range<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in range {
        match best {
            None => best = Some(i),
            Some(b) if class.kws()[i] < class.kws()[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Computes the gap profile Δ(k) for k = 1..=steps.
pub fn delta_profile(class: &ModelClass, steps: u32) -> Result<DeltaProfile> {
    let t0 = class.require_true_index()?;
    let intervals = build_intervals(class.param(t0), steps)?;
    let mut rows = Vec::with_capacity(intervals.len());
    for step in &intervals {
        let anchor = argmin_kw(class, class.members_in_halfopen(step.kept.lo(), step.kept.hi()))
            .ok_or_else(|| {
                Error::InvalidClass("kept interval lost the true parameter".into())
            })?;
        let mut competitor: Option<usize> = None;
        for piece in &step.complement {
            let cand = argmin_kw(class, class.members_in_halfopen(piece.lo(), piece.hi()));
            competitor = match (competitor, cand) {
                (None, c) => c,
                (Some(b), Some(c)) if class.kws()[c] < class.kws()[b] => Some(c),
                (Some(b), Some(c)) if class.kws()[c] == class.kws()[b] && c < b => Some(c),
                (b, _) => b,
            };
        }
        let gap = match competitor {
            None => f64::INFINITY,
            Some(c) => (class.kws()[c] - class.kws()[anchor]).max(0.0),
        };
        rows.push(GapStep { k: step.k, competitor, anchor, gap });
    }
    Ok(DeltaProfile { theta0_index: t0, theta0_kw: class.kws()[t0], steps: rows })
}

/// Kw(θ₀) + Σ_k 2^(−Δ(k))·√Δ(k) (bits), the gap-series cumulative-loss
/// scale. Infinite gaps contribute 0, as do zero gaps under the literal
/// 2⁰·√0 reading. With `sharpened` the summand is 2^(−Δ(k)) instead — an
/// unproven variant, reported but never asserted.
///
/// The `truncated` flag is set when the last 32 evaluated terms still
/// contribute more than 1e-9.
pub fn gap_series_bound(profile: &DeltaProfile, sharpened: bool) -> (f64, bool) {
    let term = |gap: f64| -> f64 {
        if gap.is_infinite() {
            0.0
        } else if sharpened {
            (-gap).exp2()
        } else {
            (-gap).exp2() * gap.sqrt()
        }
    };
    let mut sum = crate::util::NeumaierSum::new();
    for row in &profile.steps {
        sum.add(term(row.gap));
    }
    let tail: f64 = profile
        .steps
        .iter()
        .rev()
        .take(32)
        .map(|r| term(r.gap))
        .sum();
    (profile.theta0_kw + sum.value(), tail > 1e-9)
}

/// Outcome of the uniform-weight neighborhood condition.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct UniformConditionOutcome {
    pub holds: bool,
    pub first_violation: Option<u32>,
    pub k_checked_up_to: u32,
}

/// Checks min{Kw(ϑ) : ϑ ∈ [θ₀−2^(−k), θ₀+2^(−k)] ∩ Θ, ϑ ≠ θ₀} ≥ (k−b)/a for
/// every a·Kw(θ₀)+b < k ≤ k_max. Empty neighborhoods pass vacuously.
/// `k_max` must stay within the class resolution (2^(−k_max) at least the
/// smallest member gap).
pub fn uniform_weight_condition(
    class: &ModelClass,
    a: f64,
    b: f64,
    k_max: u32,
) -> Result<UniformConditionOutcome> {
    if !(a >= 1.0) || !(b >= 0.0) {
        return Err(Error::invalid(format!("need a ≥ 1 and b ≥ 0, got a={a} b={b}")));
    }
    let t0 = class.require_true_index()?;
    if let Some(gap) = class.min_gap() {
        let res = BigRational::new(BigInt::one(), BigInt::one() << k_max);
        if res < gap {
            return Err(Error::invalid(format!(
                "k_max = {k_max} is beyond the class resolution (min gap {gap})"
            )));
        }
    }
    let threshold = a * class.kws()[t0] + b;
    let k_start = (threshold.floor() as u32).saturating_add(1);
    let t0_ratio = class.param(t0).ratio().clone();
    for k in k_start..=k_max {
        if (k as f64) <= threshold {
            continue;
        }
        let radius = BigRational::new(BigInt::one(), BigInt::one() << k);
        let lo = &t0_ratio - &radius;
        let hi = &t0_ratio + &radius;
        let range = class.members_in_closed(&lo, &hi);
        let min_kw = range
            .filter(|&i| i != t0)
            .map(|i| class.kws()[i])
            .fold(f64::INFINITY, f64::min);
        if min_kw < (k as f64 - b) / a {
            return Ok(UniformConditionOutcome {
                holds: false,
                first_violation: Some(k),
                k_checked_up_to: k_max,
            });
        }
    }
    Ok(UniformConditionOutcome { holds: true, first_violation: None, k_checked_up_to: k_max })
}

/// N + Kw(θ₀) (bits): the finite-class cumulative-loss scale.
pub fn finite_class_bound(class: &ModelClass) -> Result<f64> {
    let t0 = class.require_true_index()?;
    Ok(class.len() as f64 + class.kws()[t0])
}

fn signed_to_f64(x: &BigRational) -> f64 {
    if x.is_negative() {
        -big_ratio_to_f64(&-x.clone())
    } else {
        big_ratio_to_f64(x)
    }
}

struct Worst {
    id: &'static str,
    count: usize,
    max: f64,
    point: Vec<f64>,
}

impl Worst {
    fn new(id: &'static str) -> Self {
        Worst { id, count: 0, max: f64::NEG_INFINITY, point: Vec::new() }
    }

    fn update(&mut self, violation: f64, point: &[f64]) {
        self.count += 1;
        if violation > self.max {
            self.max = violation;
            self.point = point.to_vec();
        }
    }

    fn finish(self) -> InequalityReport {
        InequalityReport {
            lemma_id: self.id.to_string(),
            grid_size: self.count,
            max_violation: if self.count == 0 { 0.0 } else { self.max },
            worst_point: self.point,
        }
    }
}

/// Exact-arithmetic and sampled certifiers for the interval-construction
/// properties, the interval-optima properties (on the built-in classes), and
/// the two extended-divergence gap estimates on their hypothesis regions.
pub fn check_appendix_lemmas(theta0_grid: &[Parameter], k_max: u32) -> Vec<InequalityReport> {
    let k_max = k_max.clamp(6, 60);
    let mut reports = Vec::new();
    reports.extend(check_interval_geometry(theta0_grid, k_max));
    reports.extend(check_interval_optima(k_max));
    reports.push(check_far_alpha_gap(theta0_grid, false));
    reports.push(check_far_alpha_gap(theta0_grid, true));
    reports.push(check_near_alpha_gap(theta0_grid, k_max, false));
    reports.push(check_near_alpha_gap(theta0_grid, k_max, true));
    reports
}

/// Interval geometry, exact arithmetic: measures halve, the shed pieces stay
/// separated from θ₀ and from the kept interval five steps later, and the
/// shed pieces never reach farther than two previous half-widths.
fn check_interval_geometry(theta0_grid: &[Parameter], k_max: u32) -> Vec<InequalityReport> {
    let mut measure = Worst::new("interval.measure");
    let mut separation = Worst::new("interval.separation");
    let mut span = Worst::new("interval.span");
    let mut lag = Worst::new("interval.lag-separation");
    for t0 in theta0_grid {
        if !t0.is_interior() {
            continue;
        }
        let steps = match build_intervals(t0, k_max + 5) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let t0f = t0.to_f64();
        let tr = t0.ratio();
        for step in steps.iter().take(k_max as usize) {
            let k = step.k;
            let kf = k as f64;
            let pow = |e: i64| -> BigRational {
                BigRational::new(BigInt::one(), BigInt::one() << (e as usize))
            };
            // |kept_k| = 2^(−k), exact
            let dev = step.kept.measure() - pow(k as i64);
            measure.update(signed_to_f64(&dev).abs(), &[t0f, kf]);
            // d(θ₀, shed_k) ≥ 2^(−k−2)
            let d = step
                .complement
                .iter()
                .map(|p| p.distance_to(tr))
                .min()
                .unwrap();
            separation.update(signed_to_f64(&(pow(k as i64 + 2) - d)), &[t0f, kf]);
            // sup |θ − θ₀| over shed_k ≤ 2^(−k+1)
            let s = step
                .complement
                .iter()
                .map(|p| p.sup_distance_to(tr))
                .max()
                .unwrap();
            let budget = BigRational::new(BigInt::from(2), BigInt::one() << (k as usize));
            span.update(signed_to_f64(&(s - budget)), &[t0f, kf]);
            // d(kept_{k+5}, shed_k) ≥ 15·2^(−k−6)
            let kept5 = &steps[(k + 5 - 1) as usize].kept;
            let d5 = step
                .complement
                .iter()
                .map(|p| p.distance_to_interval(kept5))
                .min()
                .unwrap();
            let budget = BigRational::new(BigInt::from(15), BigInt::one() << (k as usize + 6));
            lag.update(signed_to_f64(&(budget - d5)), &[t0f, kf]);
        }
    }
    vec![measure.finish(), separation.finish(), span.finish(), lag.finish()]
}

/// Interval-optima properties on the built-in classes: the kept interval's
/// cheapest member never exceeds Kw(θ₀); kept-optima are monotone six steps
/// apart; the complement optimum one step later is no cheaper than the kept
/// optimum; and the lagged positive parts sum to at most 6·Kw(θ₀).
fn check_interval_optima(k_max: u32) -> Vec<InequalityReport> {
    let mut anchor = Worst::new("optima.anchor");
    let mut monotone = Worst::new("optima.anchor-monotone");
    let mut competitor = Worst::new("optima.competitor");
    let mut gap_sum = Worst::new("optima.gap-sum");
    for (idx, (_, class)) in builtin_test_classes().into_iter().enumerate() {
        let profile = match delta_profile(&class, k_max) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let kw = class.kws();
        let kw_of = |r: &GapStep, which: &str| -> f64 {
            match which {
                "anchor" => kw[r.anchor],
                _ => r.competitor.map_or(f64::INFINITY, |c| kw[c]),
            }
        };
        let rows = &profile.steps;
        let idf = idx as f64;
        let mut lagged_sum = 0.0;
        for (i, r) in rows.iter().enumerate() {
            anchor.update(kw_of(r, "anchor") - profile.theta0_kw, &[idf, r.k as f64]);
            if let Some(r6) = rows.get(i + 6) {
                monotone.update(kw_of(r, "anchor") - kw_of(r6, "anchor"), &[idf, r.k as f64]);
            }
            if let Some(r1) = rows.get(i + 1) {
                let c1 = kw_of(r1, "competitor");
                if c1.is_finite() {
                    competitor.update(kw_of(r, "anchor") - c1, &[idf, r.k as f64]);
                } else {
                    competitor.update(f64::NEG_INFINITY.max(-1.0), &[idf, r.k as f64]);
                }
            }
            if let Some(r5) = rows.get(i + 5) {
                let ci = kw_of(r, "competitor");
                if ci.is_finite() {
                    lagged_sum += (kw_of(r5, "anchor") - ci).max(0.0);
                }
            }
        }
        gap_sum.update(lagged_sum - 6.0 * profile.theta0_kw, &[idf]);
    }
    vec![anchor.finish(), monotone.finish(), competitor.finish(), gap_sum.finish()]
}

/// Extended-divergence gap for fractions far below the true parameter:
/// for k ≤ k₀−5, k₁ = k + ⌈log₂(k₀−k−3)⌉ + 2, every ϑ ≥ 2^(−k) and
/// α ≤ 2^(−k₁) give D^α(θ₀‖ϑ) ≥ 2^(−k−4). Needs θ₀ small enough that
/// k₀ ≥ 6; the `reflected` pass checks the mirrored statement.
fn check_far_alpha_gap(theta0_grid: &[Parameter], reflected: bool) -> InequalityReport {
    let id = if reflected { "gap.far-alpha.sym" } else { "gap.far-alpha" };
    let mut tr = Worst::new(id);
    let mut grid: Vec<Parameter> = theta0_grid
        .iter()
        .filter(|t| t.is_interior())
        .cloned()
        .collect();
    // make sure the small-θ₀ regime is populated
    for (p, q) in [(3i64, 256i64), (1, 1024), (5, 4096), (1, 100), (1, 97)] {
        grid.push(Parameter::from_ratio(p, q).unwrap());
    }
    for t0 in &grid {
        let small = if t0.ratio() > Parameter::half().ratio() {
            t0.complement()
        } else {
            t0.clone()
        };
        let Ok(k0) = initial_left_steps(&small) else { continue };
        if k0 < 6 {
            continue;
        }
        let (tv, tc) = (small.to_f64(), small.complement_f64());
        for k in 1..=k0 - 5 {
            let span = k0 - k - 3;
            // k₁ = k + ⌈log₂(k₀−k−3)⌉ + 2, span ≥ 2 here
            let ceil_log2 = if span.is_power_of_two() { span.ilog2() } else { span.ilog2() + 1 };
            let k1 = k + ceil_log2 + 2;
            let bound = (-(k as f64) - 4.0).exp2();
            let v_min = (-(k as f64)).exp2();
            let a_max = (-(k1 as f64)).exp2();
            for ai in 0..=16u32 {
                let a = a_max * ai as f64 / 16.0;
                for vi in 0..=64u32 {
                    let v = v_min + (1.0 - 1e-9 - v_min) * vi as f64 / 64.0;
                    // D^α(θ₀‖ϑ) with everything reflected when asked
                    let d = if reflected {
                        extended_kl_parts(1.0 - a, a, tc, tv, 1.0 - v, v)
                    } else {
                        extended_kl_parts(a, 1.0 - a, tv, tc, v, 1.0 - v)
                    };
                    tr.update(bound - d, &[small.to_f64(), k as f64, a, v]);
                }
            }
        }
    }
    tr.finish()
}

/// Extended-divergence gap near the true parameter: for k ≥ k₀−4, ϑ in the
/// shed complement at step k, and α, ϑ̃ both in the kept interval five steps
/// later, D^α(ϑ̃‖ϑ) ≥ 2^(−2k−5). Sample coordinates are exact f64 dyadics
/// (dyadic θ₀, power-of-two sample counts), so the f64 evaluation keeps full
/// relative precision through the near-cancellation.
fn check_near_alpha_gap(theta0_grid: &[Parameter], k_max: u32, reflected: bool) -> InequalityReport {
    let id = if reflected { "gap.near-alpha.sym" } else { "gap.near-alpha" };
    let mut tr = Worst::new(id);
    let mut grid: Vec<Parameter> = theta0_grid
        .iter()
        .filter(|t| t.is_interior() && t.is_dyadic() && t.dyadic_len().unwrap_or(99) <= 40)
        .cloned()
        .collect();
    if grid.is_empty() {
        for (p, q) in [(3i64, 16i64), (1, 2), (5, 32), (1, 1024), (255, 512)] {
            grid.push(Parameter::from_ratio(p, q).unwrap());
        }
    }
    grid.truncate(24);
    let k_cap = k_max.min(40);
    for t0 in &grid {
        let t0_use = if reflected { t0.complement() } else { t0.clone() };
        let small = if t0_use.ratio() > Parameter::half().ratio() {
            t0_use.complement()
        } else {
            t0_use.clone()
        };
        let Ok(k0) = initial_left_steps(&small) else { continue };
        let Ok(steps) = build_intervals(&t0_use, k_cap + 5) else { continue };
        for k in k0.saturating_sub(4).max(1)..=k_cap {
            let bound = (-2.0 * k as f64 - 5.0).exp2();
            let kept5 = &steps[(k + 5 - 1) as usize].kept;
            let (j_lo, j_hi) = (big_ratio_to_f64(kept5.lo()), big_ratio_to_f64(kept5.hi()));
            let j_step = (j_hi - j_lo) / 8.0;
            for piece in &steps[(k - 1) as usize].complement {
                let (p_lo, p_hi) = (big_ratio_to_f64(piece.lo()), big_ratio_to_f64(piece.hi()));
                let v_step = (p_hi - p_lo) / 32.0;
                for vi in 0..32u32 {
                    let v = p_lo + v_step * vi as f64;
                    if v <= 0.0 || v >= 1.0 {
                        continue;
                    }
                    for ai in 0..8u32 {
                        let a = j_lo + j_step * ai as f64;
                        for ti in 0..8u32 {
                            let tt = j_lo + j_step * ti as f64;
                            let d = extended_kl_parts(a, 1.0 - a, tt, 1.0 - tt, v, 1.0 - v);
                            tr.update(bound - d, &[t0_use.to_f64(), k as f64, v, a, tt]);
                        }
                    }
                }
            }
        }
    }
    tr.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_class::{CodedParameter, ModelClass};

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn construction_matches_reference_steps() {
        // θ₀ = 3/16: l, c, l, c with exact endpoints
        let t0 = Parameter::from_ratio(3, 16).unwrap();
        let steps = build_intervals(&t0, 4).unwrap();
        let kinds: Vec<StepKind> = steps.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![StepKind::Left, StepKind::Center, StepKind::Left, StepKind::Center]);

        assert_eq!(steps[0].kept, DyadicInterval::new(ratio(0, 1), ratio(1, 2)));
        assert_eq!(steps[0].complement, vec![DyadicInterval::new(ratio(1, 2), ratio(1, 1))]);

        assert_eq!(steps[1].kept, DyadicInterval::new(ratio(1, 8), ratio(3, 8)));
        assert_eq!(
            steps[1].complement,
            vec![
                DyadicInterval::new(ratio(0, 1), ratio(1, 8)),
                DyadicInterval::new(ratio(3, 8), ratio(1, 2)),
            ]
        );

        assert_eq!(steps[2].kept, DyadicInterval::new(ratio(1, 8), ratio(1, 4)));
        assert_eq!(steps[2].complement, vec![DyadicInterval::new(ratio(1, 4), ratio(3, 8))]);

        assert_eq!(steps[3].kept, DyadicInterval::new(ratio(5, 32), ratio(7, 32)));
    }

    #[test]
    fn construction_is_an_exact_partition_containing_theta0() {
        for (p, q) in [(3i64, 16i64), (1, 3), (7, 11), (1, 1000), (511, 512)] {
            let t0 = Parameter::from_ratio(p, q).unwrap();
            let steps = build_intervals(&t0, 48).unwrap();
            let mut prev = DyadicInterval::new(ratio(0, 1), ratio(1, 1));
            for s in &steps {
                assert!(s.kept.contains(t0.ratio()), "θ₀ left kept at k={}", s.k);
                // kept ⊔ complement = previous kept, exactly
                let mut pieces = s.complement.clone();
                pieces.push(s.kept.clone());
                pieces.sort_by(|a, b| a.lo().cmp(b.lo()));
                assert_eq!(pieces.first().unwrap().lo(), prev.lo());
                assert_eq!(pieces.last().unwrap().hi(), prev.hi());
                for w in pieces.windows(2) {
                    assert_eq!(w[0].hi(), w[1].lo(), "gap/overlap at k={}", s.k);
                }
                prev = s.kept.clone();
            }
        }
    }

    #[test]
    fn leading_left_steps_formula() {
        let cases = [
            ((3i64, 16i64), 2u32),
            ((1, 2), 0),
            ((1, 1024), 9),
            ((13, 16), 2),  // reflected: 3/16
            ((1, 3), 1),
        ];
        for ((p, q), expect) in cases {
            let t0 = Parameter::from_ratio(p, q).unwrap();
            assert_eq!(initial_left_steps(&t0).unwrap(), expect, "{p}/{q}");
        }
        assert!(initial_left_steps(&Parameter::zero()).is_err());
    }

    #[test]
    fn left_steps_precede_the_first_center_step() {
        // all steps k ≤ k₀ are l-steps, except step k₀ itself when
        // θ₀ = 3·2^(−k₀−2) exactly (then it is already a c-step)
        for (p, q) in [(1i64, 3i64), (1, 10), (1, 100), (3, 16), (3, 64), (5, 64)] {
            let t0 = Parameter::from_ratio(p, q).unwrap();
            let k0 = initial_left_steps(&t0).unwrap();
            let steps = build_intervals(&t0, k0.max(1)).unwrap();
            let exact_center = t0.ratio()
                == &(ratio(3, 1) / BigRational::from_integer(BigInt::one() << (k0 as usize + 2)));
            for s in steps.iter().take(k0 as usize) {
                if s.k == k0 && exact_center {
                    assert_eq!(s.kind, StepKind::Center, "{p}/{q} boundary step");
                } else {
                    assert_eq!(s.kind, StepKind::Left, "{p}/{q} k={}", s.k);
                }
            }
        }
    }

    #[test]
    fn gap_profile_for_singleton_is_all_infinite() {
        let c = ModelClass::new(
            vec![CodedParameter::new(Parameter::half(), 2.0).unwrap()],
            Some(&Parameter::half()),
        )
        .unwrap();
        let p = delta_profile(&c, 20).unwrap();
        assert!(p.steps.iter().all(|r| r.gap.is_infinite() && r.competitor.is_none()));
        let (v, truncated) = gap_series_bound(&p, false);
        assert_eq!(v, 2.0);
        assert!(!truncated);
    }

    #[test]
    fn gap_profile_anchor_never_beats_theta0() {
        for (_, class) in builtin_test_classes() {
            let p = delta_profile(&class, 30).unwrap();
            for r in &p.steps {
                assert!(class.kws()[r.anchor] <= p.theta0_kw);
            }
        }
    }

    #[test]
    fn gap_series_known_value() {
        // Δ(k) = k for all k: Σ 2^(−k)·√k ≈ 1.34742, computed independently
        let mut expect = 0.0;
        for k in 1..200u32 {
            expect += (-(k as f64)).exp2() * (k as f64).sqrt();
        }
        let profile = DeltaProfile {
            theta0_index: 0,
            theta0_kw: 1.5,
            steps: (1..=200)
                .map(|k| GapStep { k, competitor: None, anchor: 0, gap: k as f64 })
                .collect(),
        };
        let (v, truncated) = gap_series_bound(&profile, false);
        assert!((v - (1.5 + expect)).abs() < 1e-12, "{v}");
        assert!((expect - 1.3473).abs() < 1e-3);
        assert!(!truncated);
        // sharpened variant sums plain 2^(−Δ)
        let (vs, _) = gap_series_bound(&profile, true);
        assert!(vs < v + 1.0 && vs > 1.5);
    }

    #[test]
    fn gap_series_truncation_flag() {
        // constant zero gaps contribute nothing either way under the literal
        // reading; constant gap 1 keeps contributing and must be flagged
        let profile = DeltaProfile {
            theta0_index: 0,
            theta0_kw: 0.0,
            steps: (1..=40)
                .map(|k| GapStep { k, competitor: None, anchor: 0, gap: 1.0 })
                .collect(),
        };
        let (_, truncated) = gap_series_bound(&profile, false);
        assert!(truncated);
    }

    #[test]
    fn uniform_condition_grid_vs_cluster() {
        // dyadic grid: holds with a=1, b=0
        let g = ModelClass::dyadic_grid(6)
            .unwrap()
            .with_true(&Parameter::from_ratio(3, 8).unwrap())
            .unwrap();
        let out = uniform_weight_condition(&g, 1.0, 0.0, 6).unwrap();
        assert!(out.holds, "violated at {:?}", out.first_violation);

        // equal-complexity cluster: fails at the first k past the threshold
        let c = ModelClass::counterexample(3).unwrap();
        let out = uniform_weight_condition(&c, 1.0, 0.0, 8).unwrap();
        assert!(!out.holds);
        assert_eq!(out.first_violation, Some(4));

        // beyond-resolution k_max is rejected
        assert!(uniform_weight_condition(&c, 1.0, 0.0, 30).is_err());

        // singleton: vacuous at every k
        let s = ModelClass::new(
            vec![CodedParameter::new(Parameter::half(), 1.0).unwrap()],
            Some(&Parameter::half()),
        )
        .unwrap();
        assert!(uniform_weight_condition(&s, 1.0, 0.0, 40).unwrap().holds);
    }

    #[test]
    fn finite_class_bound_counts() {
        let s = ModelClass::new(
            vec![CodedParameter::new(Parameter::half(), 0.0).unwrap()],
            Some(&Parameter::half()),
        )
        .unwrap();
        assert_eq!(finite_class_bound(&s).unwrap(), 1.0);
        let c = ModelClass::counterexample(2).unwrap();
        assert_eq!(finite_class_bound(&c).unwrap(), 6.0);
        let g = ModelClass::dyadic_grid(3)
            .unwrap()
            .with_true(&Parameter::half())
            .unwrap();
        assert_eq!(finite_class_bound(&g).unwrap(), 12.0);
    }

    #[test]
    fn appendix_checks_clean_on_a_small_grid() {
        let grid: Vec<Parameter> = [(3i64, 16i64), (1, 2), (5, 32), (117, 256), (1, 1024)]
            .into_iter()
            .map(|(p, q)| Parameter::from_ratio(p, q).unwrap())
            .collect();
        let reports = check_appendix_lemmas(&grid, 24);
        for r in &reports {
            assert!(
                r.max_violation <= 0.0,
                "{}: violation {} at {:?}",
                r.lemma_id,
                r.max_violation,
                r.worst_point
            );
        }
        // tight separation case: θ₀ = 3/16 at k = 2 gives distance exactly 2^(−4)
        let t0 = Parameter::from_ratio(3, 16).unwrap();
        let steps = build_intervals(&t0, 2).unwrap();
        let d = steps[1]
            .complement
            .iter()
            .map(|p| p.distance_to(t0.ratio()))
            .min()
            .unwrap();
        assert_eq!(d, ratio(1, 16));
    }
}

//! The two-part-code (MAP) selection rule, the pairwise preference relation,
//! the maximum-likelihood degenerate case, the Bayes-mixture predictor, and
//! per-n decision-boundary precomputation.
//!
//! Scores are compared in nats with an absolute tie tolerance of 1e-12;
//! candidates inside the window fall to the deterministic tie-break
//! (smallest complexity, then smallest parameter value).

use std::f64::consts::LN_2;

use crate::divergence::{extended_kl_parts, kl_parts};
use crate::error::{Error, Result};
use crate::model_class::ModelClass;

/// Absolute score-tie tolerance in nats.
pub const SCORE_TIE_TOL: f64 = 1e-12;

/// Sufficient statistic of an observed Bernoulli string: length and
/// ones-count. `n = 0` denotes the empty observation (the selection rules
/// then reduce to the pure complexity argmin and the mixture to the prior).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationSummary {
    n: u64,
    k: u64,
}

impl ObservationSummary {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if k > n {
            return Err(Error::invalid(format!("observation k = {k} > n = {n}")));
        }
        Ok(ObservationSummary { n, k })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Observed fraction of ones (0 for the empty observation).
    pub fn fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.k as f64 / self.n as f64
        }
    }
}

/// n·D(k/n‖θᵢ) + Kw(θᵢ)·ln2 (the complexity term dropped for ML).
#[inline]
fn score(class: &ModelClass, i: usize, obs: ObservationSummary, use_kw: bool) -> f64 {
    let penalty = if use_kw { class.kws()[i] * LN_2 } else { 0.0 };
    if obs.n == 0 {
        return penalty;
    }
    let nf = obs.n as f64;
    let a = obs.k as f64 / nf;
    let ac = (obs.n - obs.k) as f64 / nf;
    let d = kl_parts(a, ac, class.values()[i], class.complements()[i]);
    nf * d + penalty
}

fn select_impl(class: &ModelClass, obs: ObservationSummary, use_kw: bool) -> Result<usize> {
    let mut best = f64::INFINITY;
    for i in 0..class.len() {
        let s = score(class, i, obs, use_kw);
        if s < best {
            best = s;
        }
    }
    if best.is_infinite() {
        return Err(Error::AllScoresInfinite);
    }
    // members within the tie window, resolved by (kw, value-order index)
    let mut winner = None;
    for i in 0..class.len() {
        let s = score(class, i, obs, use_kw);
        if s <= best + SCORE_TIE_TOL {
            let kw = if use_kw { class.kws()[i] } else { 0.0 };
            match winner {
                None => winner = Some((kw, i)),
                Some((bkw, _)) if kw < bkw => winner = Some((kw, i)),
                _ => {}
            }
        }
    }
    Ok(winner.expect("at least one finite score").1)
}

/// Index of the member minimizing the joint description length
/// n·D(k/n‖θ) + Kw(θ)·ln2.
pub fn mdl_select(class: &ModelClass, obs: ObservationSummary) -> Result<usize> {
    select_impl(class, obs, true)
}

/// Maximum-likelihood selection: the same rule with every complexity
/// treated as zero.
pub fn ml_select(class: &ModelClass, obs: ObservationSummary) -> Result<usize> {
    select_impl(class, obs, false)
}

/// Whether member `i` is preferred to member `j` at the given observation:
/// n·D^α(θᵢ‖θⱼ) ≥ ln2·(Kw(θᵢ) − Kw(θⱼ)). Both parameters must be interior.
pub fn beats(class: &ModelClass, i: usize, j: usize, obs: ObservationSummary) -> Result<bool> {
    for &idx in &[i, j] {
        if idx >= class.len() {
            return Err(Error::invalid(format!("member index {idx} out of range")));
        }
        if !class.param(idx).is_interior() {
            return Err(Error::Boundary(format!("member {}", class.param(idx))));
        }
    }
    let nf = obs.n as f64;
    let a = obs.fraction();
    let d = extended_kl_parts(
        a,
        1.0 - a,
        class.values()[i],
        class.complements()[i],
        class.values()[j],
        class.complements()[j],
    );
    Ok(nf * d >= LN_2 * (class.kws()[i] - class.kws()[j]))
}

/// Posterior-weighted next-symbol probability of the mixture:
/// Σ wθ·P(x|θ)·θ / Σ wθ·P(x|θ), evaluated in log space.
pub fn bayes_predictive(class: &ModelClass, obs: ObservationSummary) -> Result<f64> {
    let (num, den) = bayes_posterior_mean_parts(class, obs)?;
    Ok(num / den)
}

/// Shared inner loop: returns (Σ pⱼθⱼ, Σ pⱼ) with pⱼ the shifted joints.
fn bayes_posterior_mean_parts(class: &ModelClass, obs: ObservationSummary) -> Result<(f64, f64)> {
    let mut log_joint = vec![f64::NEG_INFINITY; class.len()];
    let mut max = f64::NEG_INFINITY;
    for i in 0..class.len() {
        let lj = log_joint_of(class, i, obs.n, obs.k);
        log_joint[i] = lj;
        if lj > max {
            max = lj;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroMixtureMass);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..class.len() {
        let p = (log_joint[i] - max).exp();
        num += p * class.values()[i];
        den += p;
    }
    Ok((num, den))
}

/// ln wᵢ + ln P(x|θᵢ) up to the k-independent binomial factor.
#[inline]
pub(crate) fn log_joint_of(class: &ModelClass, i: usize, n: u64, k: u64) -> f64 {
    let v = class.values()[i];
    let prior = -class.kws()[i] * LN_2;
    if v == 0.0 {
        return if k == 0 { prior } else { f64::NEG_INFINITY };
    }
    if v == 1.0 {
        return if k == n { prior } else { f64::NEG_INFINITY };
    }
    prior + k as f64 * class.ln_values()[i] + (n - k) as f64 * class.ln_complements()[i]
}

/// Piecewise-constant selection over the observed fraction for a fixed n.
///
/// Score differences are affine in α, so adjacent-winner crossings are
/// single points; the winning member as α sweeps [0, 1] is the lower
/// envelope of one line per interior member. Breakpoints are stored as f64
/// approximations of the (generally irrational) crossing points; any lookup
/// that lands within a breakpoint's tie radius re-scores directly, as do the
/// k = 0 and k = n columns where boundary members can win.
#[derive(Debug, Clone)]
pub struct DecisionMap {
    n: u64,
    use_kw: bool,
    breakpoints: Vec<f64>,
    selected: Vec<usize>,
    tie_radius: Vec<f64>,
}

impl DecisionMap {
    pub fn build(class: &ModelClass, n: u64) -> Result<Self> {
        DecisionMap::build_rule(class, n, true)
    }

    pub(crate) fn build_rule(class: &ModelClass, n: u64, use_kw: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("decision map needs n ≥ 1"));
        }
        let interior: Vec<usize> =
            (0..class.len()).filter(|&i| class.param(i).is_interior()).collect();
        if interior.is_empty() {
            return Err(Error::InvalidClass(
                "decision map needs at least one interior member".into(),
            ));
        }
        let nf = n as f64;
        let ln_v = class.ln_values();
        let ln_c = class.ln_complements();
        let kws = class.kws();
        // Crossing of members i < j (θᵢ < θⱼ):
        //   scoreᵢ(α) − scoreⱼ(α) = n·[α·A + (1−α)·B] + C
        // with A = ln(θⱼ/θᵢ), B = ln((1−θⱼ)/(1−θᵢ)), C = ΔKw·ln2;
        // zero at α* = −(B + C/n)/(A − B), A − B > 0.
        let cross = |i: usize, j: usize| -> f64 {
            let a = ln_v[j] - ln_v[i];
            let b = ln_c[j] - ln_c[i];
            let c = if use_kw { (kws[i] - kws[j]) * LN_2 } else { 0.0 };
            -(b + c / nf) / (a - b)
        };

        // Lower envelope by a monotone stack: slopes −n·ln_odds strictly
        // decrease along `interior`, so lines arrive sorted.
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(interior.len());
        for &idx in &interior {
            loop {
                match stack.last() {
                    None => {
                        stack.push((idx, f64::NEG_INFINITY));
                        break;
                    }
                    Some(&(top, top_start)) => {
                        let x = cross(top, idx);
                        if x <= top_start {
                            stack.pop();
                        } else {
                            stack.push((idx, x));
                            break;
                        }
                    }
                }
            }
        }

        // Clip the envelope to [0, 1].
        let mut selected = Vec::new();
        let mut breakpoints = Vec::new();
        for (pos, &(idx, start)) in stack.iter().enumerate() {
            let end = stack.get(pos + 1).map_or(f64::INFINITY, |&(_, s)| s);
            if end <= 0.0 || start >= 1.0 {
                continue;
            }
            if !selected.is_empty() {
                breakpoints.push(start.max(0.0));
            }
            selected.push(idx);
        }
        // Fallback window per breakpoint: covers the score-tie band plus the
        // f64 error of the crossing position, both measured in score units
        // and divided by the local slope gap n·(A−B).
        let mut tie_radius = Vec::with_capacity(breakpoints.len());
        for (r, _) in breakpoints.iter().enumerate() {
            let (i, j) = (selected[r], selected[r + 1]);
            let slope_gap = nf * ((ln_v[j] - ln_v[i]) - (ln_c[j] - ln_c[i]));
            let score_window = 4.0 * (SCORE_TIE_TOL + 8.0 * nf * 1e-16);
            tie_radius.push(score_window / slope_gap.abs().max(f64::MIN_POSITIVE));
        }
        Ok(DecisionMap { n, use_kw, breakpoints, selected, tie_radius })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Index into `selected` for a given fraction.
    pub(crate) fn region_of(&self, alpha: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= alpha)
    }

    pub(crate) fn region_index(&self, alpha: f64) -> usize {
        self.region_of(alpha)
    }

    pub(crate) fn tie_radius_at(&self, r: usize) -> f64 {
        self.tie_radius[r]
    }

    /// Whether α lies inside the re-scoring window of some breakpoint.
    pub(crate) fn near_breakpoint(&self, alpha: f64) -> bool {
        let r = self.region_of(alpha);
        (r > 0 && alpha - self.breakpoints[r - 1] <= self.tie_radius[r - 1])
            || (r < self.breakpoints.len() && self.breakpoints[r] - alpha <= self.tie_radius[r])
    }

    /// Selected member for the observation (n fixed at build time).
    pub fn select_at(&self, class: &ModelClass, k: u64) -> Result<usize> {
        let obs = ObservationSummary::new(self.n, k)?;
        if k == 0 || k == self.n {
            return select_impl(class, obs, self.use_kw);
        }
        let alpha = obs.fraction();
        if self.near_breakpoint(alpha) {
            return select_impl(class, obs, self.use_kw);
        }
        Ok(self.selected[self.region_of(alpha)])
    }
}

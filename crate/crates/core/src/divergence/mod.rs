//! Bernoulli divergence kernels and binomial probability primitives.
//!
//! Everything here is a pure function of its inputs and safe to call from any
//! number of threads. Boundary conventions are fixed so that `kl` is total:
//! 0·ln 0 = 0 and x·ln(x/0) = +inf for x > 0.

mod checks;

pub use checks::{check_binomial_sandwich, check_entropy_inequalities, check_sum_sqrt_exp};

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A probability in [0, 1], validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProbValue(f64);

impl ProbValue {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(ProbValue(value))
        } else {
            Err(Error::invalid(format!("probability out of [0,1]: {value}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ProbValue {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        ProbValue::new(value)
    }
}

/// Outcome of one numeric inequality certification.
///
/// `max_violation` is the supremum over the evaluated grid of
/// (side that must be smaller) − (side that must be larger); a value ≤ 0
/// (up to the check's tolerance) means the inequality held everywhere.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InequalityReport {
    pub lemma_id: String,
    pub grid_size: usize,
    pub max_violation: f64,
    pub worst_point: Vec<f64>,
}

impl InequalityReport {
    pub fn satisfied(&self, tolerance: f64) -> bool {
        self.max_violation <= tolerance
    }
}

/// ln(x/y) for x, y > 0, full relative precision also when x ≈ y.
#[inline]
pub(crate) fn ln_ratio(x: f64, y: f64) -> f64 {
    let r = x / y;
    if r > 0.5 && r < 2.0 {
        ((x - y) / y).ln_1p()
    } else {
        r.ln()
    }
}

/// KL divergence with both complements supplied exactly by the caller
/// (alpha + alpha_c = 1 and theta + theta_c = 1 in exact arithmetic).
/// Keeping the complements explicit preserves precision when a value is
/// within an ulp of 1.
#[inline]
pub(crate) fn kl_parts(alpha: f64, alpha_c: f64, theta: f64, theta_c: f64) -> f64 {
    let mut s = 0.0;
    if alpha > 0.0 {
        if theta == 0.0 {
            return f64::INFINITY;
        }
        s += alpha * ln_ratio(alpha, theta);
    }
    if alpha_c > 0.0 {
        if theta_c == 0.0 {
            return f64::INFINITY;
        }
        s += alpha_c * ln_ratio(alpha_c, theta_c);
    }
    // Mathematically ≥ 0; clamp the sub-ulp rounding residue at equality.
    s.max(0.0)
}

#[inline]
pub(crate) fn extended_kl_parts(
    alpha: f64,
    alpha_c: f64,
    theta: f64,
    theta_c: f64,
    tilde: f64,
    tilde_c: f64,
) -> f64 {
    alpha * ln_ratio(theta, tilde) + alpha_c * ln_ratio(theta_c, tilde_c)
}

/// D(α‖θ) = α·ln(α/θ) + (1−α)·ln((1−α)/(1−θ)) in nats.
///
/// Conventions: 0·ln 0 = 0 and x·ln(x/0) = +inf for x > 0, so the result is
/// defined for every pair; it is ≥ 0 with equality iff α = θ.
pub fn kl(alpha: ProbValue, theta: ProbValue) -> f64 {
    let (a, t) = (alpha.get(), theta.get());
    kl_parts(a, 1.0 - a, t, 1.0 - t)
}

/// D^α(θ‖θ̃) = α·ln(θ/θ̃) + (1−α)·ln((1−θ)/(1−θ̃)) in nats.
///
/// Equals kl(α, θ̃) − kl(α, θ) and is affine in α. Both θ and θ̃ must lie
/// strictly inside (0, 1).
pub fn extended_kl(alpha: ProbValue, theta: ProbValue, theta_tilde: ProbValue) -> Result<f64> {
    let (t, tt) = (theta.get(), theta_tilde.get());
    if t <= 0.0 || t >= 1.0 {
        return Err(Error::Boundary(format!("theta = {t}")));
    }
    if tt <= 0.0 || tt >= 1.0 {
        return Err(Error::Boundary(format!("theta_tilde = {tt}")));
    }
    let a = alpha.get();
    Ok(extended_kl_parts(a, 1.0 - a, t, 1.0 - t, tt, 1.0 - tt))
}

/// Cached ln k! for k ≤ LN_FACT_LEN−1, built once with compensated summation.
const LN_FACT_LEN: usize = 4097;

fn ln_factorials() -> &'static [f64; LN_FACT_LEN] {
    static TABLE: OnceLock<[f64; LN_FACT_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0f64; LN_FACT_LEN];
        let mut sum = 0.0;
        let mut comp = 0.0;
        for k in 1..LN_FACT_LEN {
            let term = (k as f64).ln();
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
            t[k] = sum;
        }
        t
    })
}

/// ln C(n, k); table-backed for n ≤ 4096, log-gamma beyond.
pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if (n as usize) < LN_FACT_LEN {
        let t = ln_factorials();
        t[n as usize] - t[k as usize] - t[(n - k) as usize]
    } else {
        use statrs::function::gamma::ln_gamma;
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// ln P(K = k) for K ~ Binomial(n, θ), computed in log space.
///
/// Returns −inf when a boundary θ is incompatible with k; `n ≥ 1` and
/// `k ≤ n` are required.
pub fn log_binomial_pmf(n: u64, k: u64, theta: ProbValue) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("log_binomial_pmf: n must be ≥ 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("log_binomial_pmf: k = {k} > n = {n}")));
    }
    let t = theta.get();
    if t == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if t == 1.0 {
        return Ok(if k == n { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(log_pmf_interior(n, k, t.ln(), (-t).ln_1p()))
}

/// Hot-path pmf log for interior θ with the logs precomputed by the caller.
#[inline]
pub(crate) fn log_pmf_interior(n: u64, k: u64, ln_t: f64, ln_tc: f64) -> f64 {
    ln_choose(n, k) + k as f64 * ln_t + (n - k) as f64 * ln_tc
}

/// P(k_lo ≤ K ≤ k_hi) for K ~ Binomial(n, θ) via the regularized incomplete
/// beta function, with the evaluation arranged to avoid cancellation in the
/// tails.
pub fn binomial_tail(n: u64, k_lo: u64, k_hi: u64, theta: ProbValue) -> Result<f64> {
    if k_lo > k_hi {
        return Err(Error::invalid(format!(
            "binomial_tail: inverted range [{k_lo}, {k_hi}]"
        )));
    }
    if k_hi > n {
        return Err(Error::invalid(format!("binomial_tail: k_hi = {k_hi} > n = {n}")));
    }
    let t = theta.get();
    if t == 0.0 {
        return Ok(if k_lo == 0 { 1.0 } else { 0.0 });
    }
    if t == 1.0 {
        return Ok(if k_hi == n { 1.0 } else { 0.0 });
    }
    // cdf(k) = P(K ≤ k) = I_{1−θ}(n−k, k+1);  sf(k) = P(K > k) = I_θ(k+1, n−k)
    let cdf = |k: u64| -> f64 {
        if k >= n {
            1.0
        } else {
            statrs::function::beta::beta_reg((n - k) as f64, k as f64 + 1.0, 1.0 - t)
        }
    };
    let sf = |k: u64| -> f64 {
        if k >= n {
            0.0
        } else {
            statrs::function::beta::beta_reg(k as f64 + 1.0, (n - k) as f64, t)
        }
    };
    let mean = n as f64 * t;
    let p = if k_lo == 0 && k_hi == n {
        1.0
    } else if k_lo == 0 {
        cdf(k_hi)
    } else if k_hi == n {
        sf(k_lo - 1)
    } else if (k_hi as f64) <= mean {
        cdf(k_hi) - cdf(k_lo - 1)
    } else if (k_lo as f64) >= mean {
        sf(k_lo - 1) - sf(k_hi)
    } else {
        1.0 - cdf(k_lo - 1) - sf(k_hi)
    };
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> ProbValue {
        ProbValue::new(v).unwrap()
    }

    #[test]
    fn kl_identity_is_zero() {
        for t in [0.0, 1e-9, 0.25, 0.5, 0.75, 1.0 - 1e-9, 1.0] {
            assert_eq!(kl(p(t), p(t)), 0.0, "kl({t},{t})");
        }
    }

    #[test]
    fn kl_boundary_conventions() {
        // 0·ln0 = 0 forces ln(1/(1−θ)).
        assert!((kl(p(0.0), p(0.5)) - std::f64::consts::LN_2).abs() < 1e-15);
        // mass on a zero-probability outcome → +inf
        assert_eq!(kl(p(0.5), p(0.0)), f64::INFINITY);
        assert_eq!(kl(p(0.5), p(1.0)), f64::INFINITY);
        assert_eq!(kl(p(0.0), p(0.0)), 0.0);
        assert_eq!(kl(p(1.0), p(1.0)), 0.0);
    }

    #[test]
    fn kl_half_quarter() {
        // ½·ln(4/3), evaluated independently to high precision
        let expected = 0.143_841_036_225_890_46_f64;
        assert!((kl(p(0.5), p(0.25)) - expected).abs() < 1e-15);
    }

    #[test]
    fn extended_kl_identities() {
        let (t, tt) = (p(0.3), p(0.7));
        // D^θ(θ‖θ̃) = D(θ‖θ̃)
        let lhs = extended_kl(t, t, tt).unwrap();
        assert!((lhs - kl(t, tt)).abs() < 1e-15);
        // D^α(θ‖θ) = 0
        for a in [0.0, 0.4, 1.0] {
            assert_eq!(extended_kl(p(a), t, t).unwrap(), 0.0);
        }
        // D^θ̃(θ‖θ̃) = −D(θ̃‖θ)
        let lhs = extended_kl(tt, t, tt).unwrap();
        assert!((lhs + kl(tt, t)).abs() < 1e-14);
    }

    #[test]
    fn extended_kl_rejects_boundaries() {
        assert!(extended_kl(p(0.5), p(0.0), p(0.5)).is_err());
        assert!(extended_kl(p(0.5), p(0.5), p(1.0)).is_err());
    }

    #[test]
    fn extended_kl_matches_kl_difference() {
        let mut worst = 0.0f64;
        for &a in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            for &t in &[0.05, 0.3, 0.5, 0.95] {
                for &tt in &[0.02, 0.4, 0.8] {
                    let e = extended_kl(p(a), p(t), p(tt)).unwrap();
                    let d = kl(p(a), p(tt)) - kl(p(a), p(t));
                    worst = worst.max((e - d).abs());
                }
            }
        }
        assert!(worst < 1e-12, "worst deviation {worst}");
    }

    #[test]
    fn pmf_small_cases() {
        // n=2, k=1, θ=1/2 → ln(1/2)
        let l = log_binomial_pmf(2, 1, p(0.5)).unwrap();
        assert!((l - 0.5f64.ln()).abs() < 1e-15);
        // degenerate θ=1
        assert_eq!(log_binomial_pmf(1, 1, p(1.0)).unwrap(), 0.0);
        assert_eq!(log_binomial_pmf(3, 1, p(1.0)).unwrap(), f64::NEG_INFINITY);
        assert!(log_binomial_pmf(3, 4, p(0.5)).is_err());
    }

    #[test]
    fn pmf_sums_to_one() {
        for &n in &[1u64, 7, 64, 257, 512] {
            for &t in &[0.05, 0.3, 0.5, 0.9] {
                let mut sum = 0.0;
                let mut comp = 0.0;
                for k in 0..=n {
                    let term = log_binomial_pmf(n, k, p(t)).unwrap().exp();
                    let y = term - comp;
                    let s = sum + y;
                    comp = (s - sum) - y;
                    sum = s;
                }
                assert!((sum - 1.0).abs() < 1e-12, "n={n} t={t} sum={sum}");
            }
        }
    }

    #[test]
    fn tail_full_range_is_one() {
        for &n in &[1u64, 10, 100] {
            assert_eq!(binomial_tail(n, 0, n, p(0.37)).unwrap(), 1.0);
        }
    }

    #[test]
    fn tail_point_mass() {
        // n=2, k=1, θ=1/2 → 1/2
        let v = binomial_tail(2, 1, 1, p(0.5)).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tail_matches_pmf_sum() {
        let cases = [
            (100u64, 45u64, 55u64, 0.5),
            (100, 0, 3, 0.5),
            (100, 97, 100, 0.5),
            (257, 10, 60, 0.13),
            (64, 40, 64, 0.81),
        ];
        for &(n, lo, hi, t) in &cases {
            let fast = binomial_tail(n, lo, hi, p(t)).unwrap();
            let mut slow = 0.0;
            for k in lo..=hi {
                slow += log_binomial_pmf(n, k, p(t)).unwrap().exp();
            }
            let denom = slow.abs().max(1e-300);
            assert!(
                ((fast - slow) / denom).abs() < 1e-10,
                "n={n} [{lo},{hi}] t={t}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn tail_rejects_inverted_range() {
        assert!(binomial_tail(10, 5, 4, p(0.5)).is_err());
        assert!(binomial_tail(10, 0, 11, p(0.5)).is_err());
    }
}

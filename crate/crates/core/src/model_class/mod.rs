//! Finite Bernoulli model classes with complexity assignments.
//!
//! A class is an ordered set of exact parameter values, each carrying a
//! description length in bits and the implied weight 2^(−Kw). Countable
//! classes are truncated to finite ones for computation; the truncation
//! precision is a caller-supplied argument everywhere it matters.

mod file;
mod param;

pub use file::{class_hash, from_json_str, to_canonical_string};
pub(crate) use param::big_ratio_to_f64;
pub use param::Parameter;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::util::NeumaierSum;

/// Self-delimiting code length for a dyadic parameter:
/// 2 bits for θ ∈ {0, 1}, otherwise l(θ) + 2·⌊log₂(l(θ)+1)⌋ where l(θ) is
/// the binary-expansion length.
pub fn dyadic_complexity(theta: &Parameter) -> Result<f64> {
    if theta.is_zero() || theta.is_one() {
        return Ok(2.0);
    }
    let l = theta
        .dyadic_len()
        .ok_or_else(|| Error::NonDyadic(theta.to_string()))?;
    Ok(l as f64 + 2.0 * (l + 1).ilog2() as f64)
}

/// A parameter with its description length (bits) and weight 2^(−Kw).
#[derive(Clone, Debug)]
pub struct CodedParameter {
    pub param: Parameter,
    pub kw: f64,
    pub weight: f64,
}

impl CodedParameter {
    pub fn new(param: Parameter, kw: f64) -> Result<Self> {
        if !kw.is_finite() || kw < 0.0 {
            return Err(Error::invalid(format!("complexity must be ≥ 0, got {kw}")));
        }
        Ok(CodedParameter { param, weight: (-kw).exp2(), kw })
    }
}

/// Ordered finite collection of coded parameters, optionally with one member
/// designated as the true parameter. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ModelClass {
    members: Vec<CodedParameter>,
    true_index: Option<usize>,
    kraft_sum: f64,
    // f64 caches for the hot paths
    values: Vec<f64>,
    complements: Vec<f64>,
    ln_values: Vec<f64>,
    ln_complements: Vec<f64>,
    ln_odds: Vec<f64>,
    kws: Vec<f64>,
}

impl ModelClass {
    /// Sorts members by parameter value, rejects duplicates, and caches the
    /// float projections. `true_value`, when given, must match a member
    /// exactly.
    pub fn new(mut members: Vec<CodedParameter>, true_value: Option<&Parameter>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidClass("class must not be empty".into()));
        }
        members.sort_by(|a, b| a.param.cmp(&b.param));
        for w in members.windows(2) {
            if w[0].param == w[1].param {
                return Err(Error::InvalidClass(format!(
                    "duplicate parameter value {}",
                    w[0].param
                )));
            }
        }
        let true_index = match true_value {
            None => None,
            Some(t) => Some(
                members
                    .iter()
                    .position(|m| &m.param == t)
                    .ok_or_else(|| Error::InvalidClass(format!("true parameter {t} is not a member")))?,
            ),
        };
        let mut kraft = NeumaierSum::new();
        for m in &members {
            kraft.add(m.weight);
        }
        let values: Vec<f64> = members.iter().map(|m| m.param.to_f64()).collect();
        let complements: Vec<f64> = members.iter().map(|m| m.param.complement_f64()).collect();
        let ln_values: Vec<f64> = values.iter().map(|&v| v.ln()).collect();
        let ln_complements: Vec<f64> = complements.iter().map(|&c| c.ln()).collect();
        let ln_odds: Vec<f64> = ln_values
            .iter()
            .zip(&ln_complements)
            .map(|(&lv, &lc)| lv - lc)
            .collect();
        let kws: Vec<f64> = members.iter().map(|m| m.kw).collect();
        Ok(ModelClass {
            members,
            true_index,
            kraft_sum: kraft.value(),
            values,
            complements,
            ln_values,
            ln_complements,
            ln_odds,
            kws,
        })
    }

    /// The equal-complexity cluster class: {½} ∪ {½ + 2^(−k−1) : 1 ≤ k ≤ 2^N − 1},
    /// every complexity N, true parameter ½.
    pub fn counterexample(n: u32) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::invalid(format!("counterexample: N = {n} outside 1..=20")));
        }
        let count = 1u64 << n;
        let mut members = Vec::with_capacity(count as usize);
        let half = Parameter::half();
        members.push(CodedParameter::new(half.clone(), n as f64)?);
        for k in 1..count {
            let v = BigRational::new(BigInt::one(), BigInt::from(2))
                + BigRational::new(BigInt::one(), BigInt::one() << (k + 1));
            members.push(CodedParameter::new(Parameter::new(v)?, n as f64)?);
        }
        ModelClass::new(members, Some(&half))
    }

    /// The cluster class truncated at k ≤ 2^N − 2 plus arbitrary extra
    /// parameters, each of which must carry complexity strictly above N.
    pub fn extended_counterexample(n: u32, extras: &[(Parameter, f64)]) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::invalid(format!("extended_counterexample: N = {n} outside 1..=20")));
        }
        let count = 1u64 << n;
        let mut members = Vec::new();
        let half = Parameter::half();
        members.push(CodedParameter::new(half.clone(), n as f64)?);
        for k in 1..count - 1 {
            let v = BigRational::new(BigInt::one(), BigInt::from(2))
                + BigRational::new(BigInt::one(), BigInt::one() << (k + 1));
            members.push(CodedParameter::new(Parameter::new(v)?, n as f64)?);
        }
        for (p, kw) in extras {
            if *kw <= n as f64 {
                return Err(Error::InvalidClass(format!(
                    "extra parameter {p} has complexity {kw} ≤ base complexity {n}"
                )));
            }
            members.push(CodedParameter::new(p.clone(), *kw)?);
        }
        ModelClass::new(members, Some(&half))
    }

    /// All finite binary fractions of expansion length ≤ `precision`, plus 0
    /// and 1, coded by `dyadic_complexity`. Contains 2^precision + 1 members,
    /// so memory grows accordingly.
    pub fn dyadic_grid(precision: u32) -> Result<Self> {
        if precision == 0 || precision > 30 {
            return Err(Error::invalid(format!("dyadic_grid: precision {precision} outside 1..=30")));
        }
        let mut members = Vec::with_capacity((1usize << precision) + 1);
        members.push(CodedParameter::new(Parameter::zero(), 2.0)?);
        members.push(CodedParameter::new(Parameter::one(), 2.0)?);
        for l in 1..=precision {
            let denom = BigInt::one() << l;
            let mut m = BigInt::one();
            while m < denom {
                let p = Parameter::new(BigRational::new(m.clone(), denom.clone()))?;
                let kw = dyadic_complexity(&p)?;
                members.push(CodedParameter::new(p, kw)?);
                m += 2;
            }
        }
        ModelClass::new(members, None)
    }

    /// Image of the dyadic grid under a rational polynomial φ (coefficients
    /// in ascending degree order). φ must map every grid point into [0, 1]
    /// and be injective on the grid; each image keeps the complexity of its
    /// preimage.
    pub fn distorted(coeffs: &[BigRational], precision: u32) -> Result<Self> {
        if precision == 0 || precision > 30 {
            return Err(Error::invalid(format!("distorted: precision {precision} outside 1..=30")));
        }
        let grid = ModelClass::dyadic_grid(precision)?;
        let eval = |t: &BigRational| -> BigRational {
            let mut acc = BigRational::zero();
            for c in coeffs.iter().rev() {
                acc = acc * t + c;
            }
            acc
        };
        let mut members = Vec::with_capacity(grid.len());
        for m in &grid.members {
            let image = eval(m.param.ratio());
            if image.is_negative() || image > BigRational::one() {
                return Err(Error::InvalidClass(format!(
                    "distortion maps {} to {image}, outside [0,1]",
                    m.param
                )));
            }
            members.push(CodedParameter::new(Parameter::new(image)?, m.kw)?);
        }
        members.sort_by(|a, b| a.param.cmp(&b.param));
        for w in members.windows(2) {
            if w[0].param == w[1].param {
                return Err(Error::InvalidClass(format!(
                    "distortion is not injective on the grid: collision at {}",
                    w[0].param
                )));
            }
        }
        ModelClass::new(members, None)
    }

    /// Returns a copy with the true parameter set to `value` (must be a member).
    pub fn with_true(&self, value: &Parameter) -> Result<Self> {
        let idx = self
            .members
            .iter()
            .position(|m| &m.param == value)
            .ok_or_else(|| Error::InvalidClass(format!("true parameter {value} is not a member")))?;
        let mut out = self.clone();
        out.true_index = Some(idx);
        Ok(out)
    }

    /// Σ 2^(−Kw) and whether it satisfies the prefix-code weight budget
    /// (≤ 1 + 1e-12). Classes over budget stay usable; they are only flagged.
    pub fn kraft(&self) -> (f64, bool) {
        (self.kraft_sum, self.kraft_sum <= 1.0 + 1e-12)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[CodedParameter] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &CodedParameter {
        &self.members[i]
    }

    pub fn param(&self, i: usize) -> &Parameter {
        &self.members[i].param
    }

    pub fn true_index(&self) -> Option<usize> {
        self.true_index
    }

    pub fn require_true_index(&self) -> Result<usize> {
        self.true_index.ok_or(Error::MissingTrueIndex)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn complements(&self) -> &[f64] {
        &self.complements
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_values
    }

    pub fn ln_complements(&self) -> &[f64] {
        &self.ln_complements
    }

    pub fn ln_odds(&self) -> &[f64] {
        &self.ln_odds
    }

    pub fn kws(&self) -> &[f64] {
        &self.kws
    }

    /// Smallest gap between adjacent members (exact). None for singletons.
    pub fn min_gap(&self) -> Option<BigRational> {
        self.members
            .windows(2)
            .map(|w| w[1].param.ratio() - w[0].param.ratio())
            .min()
    }

    /// Index range of members inside [lo, hi] (inclusive, exact comparisons).
    pub fn members_in_closed(&self, lo: &BigRational, hi: &BigRational) -> std::ops::Range<usize> {
        let start = self.members.partition_point(|m| m.param.ratio() < lo);
        let end = self.members.partition_point(|m| m.param.ratio() <= hi);
        start..end
    }

    /// Index range of members inside the half-open [lo, hi).
    pub fn members_in_halfopen(&self, lo: &BigRational, hi: &BigRational) -> std::ops::Range<usize> {
        let start = self.members.partition_point(|m| m.param.ratio() < lo);
        let end = self.members.partition_point(|m| m.param.ratio() < hi);
        start..end
    }

    /// Greatest squared distance from the true parameter to any member.
    pub fn squared_diameter_from_true(&self) -> Result<f64> {
        let t0 = self.require_true_index()?;
        let tv = self.values[t0];
        Ok(self
            .values
            .iter()
            .map(|v| (v - tv) * (v - tv))
            .fold(0.0, f64::max))
    }
}

/// The five canonical classes the test suites and the verification scenarios
/// run on. All satisfy the weight budget and designate a true parameter
/// inside (¼, ¾).
pub fn builtin_test_classes() -> Vec<(&'static str, ModelClass)> {
    let singleton = ModelClass::new(
        vec![CodedParameter::new(Parameter::half(), 0.0).unwrap()],
        Some(&Parameter::half()),
    )
    .unwrap();
    let square = vec![
        BigRational::zero(),
        BigRational::zero(),
        BigRational::one(),
    ];
    vec![
        ("singleton-half", singleton),
        ("cluster-2", ModelClass::counterexample(2).unwrap()),
        ("cluster-3", ModelClass::counterexample(3).unwrap()),
        (
            "dyadic-grid-3",
            ModelClass::dyadic_grid(3)
                .unwrap()
                .with_true(&Parameter::from_ratio(3, 8).unwrap())
                .unwrap(),
        ),
        (
            "squared-grid-3",
            ModelClass::distorted(&square, 3)
                .unwrap()
                .with_true(&Parameter::from_ratio(9, 16).unwrap())
                .unwrap(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_lengths_for_known_values() {
        assert_eq!(dyadic_complexity(&Parameter::zero()).unwrap(), 2.0);
        assert_eq!(dyadic_complexity(&Parameter::one()).unwrap(), 2.0);
        assert_eq!(dyadic_complexity(&Parameter::half()).unwrap(), 3.0);
        assert_eq!(dyadic_complexity(&Parameter::from_ratio(3, 16).unwrap()).unwrap(), 8.0);
        assert_eq!(dyadic_complexity(&Parameter::from_ratio(1, 4).unwrap()).unwrap(), 4.0);
        assert_eq!(dyadic_complexity(&Parameter::from_ratio(3, 4).unwrap()).unwrap(), 4.0);
        assert_eq!(dyadic_complexity(&Parameter::from_ratio(5, 8).unwrap()).unwrap(), 7.0);
        assert!(dyadic_complexity(&Parameter::from_ratio(1, 3).unwrap()).is_err());
    }

    #[test]
    fn code_length_dominates_expansion_length() {
        for l in 1..=30u32 {
            let p = Parameter::from_ratio(1, 1i64 << l).unwrap();
            assert!(dyadic_complexity(&p).unwrap() >= l as f64);
        }
    }

    #[test]
    fn cluster_class_layout() {
        let c = ModelClass::counterexample(1).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.param(0), &Parameter::half());
        assert_eq!(c.param(1), &Parameter::from_ratio(3, 4).unwrap());
        assert!(c.kws().iter().all(|&k| k == 1.0));

        let c = ModelClass::counterexample(2).unwrap();
        let expect = [(1i64, 2i64), (9, 16), (5, 8), (3, 4)];
        assert_eq!(c.len(), 4);
        for (i, &(p, q)) in expect.iter().enumerate() {
            assert_eq!(c.param(i), &Parameter::from_ratio(p, q).unwrap());
            assert_eq!(c.member(i).kw, 2.0);
        }
        let (sum, ok) = c.kraft();
        assert!((sum - 1.0).abs() < 1e-15 && ok);
        assert_eq!(c.true_index(), Some(0));
    }

    #[test]
    fn cluster_gaps_halve() {
        let c = ModelClass::counterexample(3).unwrap();
        // members above ½ sorted ascending are ½+2^(−k−1) for k = 7, 6, …, 1;
        // adjacent differences are 2^(−k−2)
        for i in 1..c.len() - 1 {
            let gap = c.param(i + 1).ratio() - c.param(i).ratio();
            let k = c.len() - i; // parameter index of the lower neighbor
            let expect = BigRational::new(BigInt::one(), BigInt::one() << (k + 1));
            assert_eq!(gap, expect, "gap at {i}");
        }
        assert_eq!(c.len(), 8);
    }

    #[test]
    fn extended_cluster_validation() {
        let c = ModelClass::extended_counterexample(2, &[]).unwrap();
        assert_eq!(c.len(), 3); // ½, 9/16, 5/8
        assert_eq!(c.param(2), &Parameter::from_ratio(5, 8).unwrap());

        let third = Parameter::from_ratio(1, 3).unwrap();
        let c = ModelClass::extended_counterexample(2, &[(third, 5.0)]).unwrap();
        assert_eq!(c.len(), 4);
        let (sum, _) = c.kraft();
        assert!((sum - (0.75 + 2f64.powi(-5))).abs() < 1e-15);

        // duplicate of a base member is rejected
        let dup = Parameter::from_ratio(5, 8).unwrap();
        assert!(ModelClass::extended_counterexample(2, &[(dup, 3.0)]).is_err());
        // complexity must strictly exceed N
        let x = Parameter::from_ratio(1, 5).unwrap();
        assert!(ModelClass::extended_counterexample(2, &[(x, 2.0)]).is_err());
    }

    #[test]
    fn dyadic_grid_layout() {
        let g = ModelClass::dyadic_grid(1).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(
            g.members().iter().map(|m| m.kw).collect::<Vec<_>>(),
            vec![2.0, 3.0, 2.0]
        );
        let g = ModelClass::dyadic_grid(2).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.member(1).kw, 4.0); // 1/4
        assert_eq!(g.member(3).kw, 4.0); // 3/4
        for p in 1..=8u32 {
            assert_eq!(ModelClass::dyadic_grid(p).unwrap().len(), (1 << p) + 1);
        }
    }

    #[test]
    fn distorted_square_grid() {
        let square = vec![BigRational::zero(), BigRational::zero(), BigRational::one()];
        let c = ModelClass::distorted(&square, 2).unwrap();
        let expect = [(0i64, 1i64), (1, 16), (1, 4), (9, 16), (1, 1)];
        let kws = [2.0, 4.0, 3.0, 4.0, 2.0];
        assert_eq!(c.len(), 5);
        for (i, (&(p, q), &kw)) in expect.iter().zip(&kws).enumerate() {
            assert_eq!(c.param(i), &Parameter::from_ratio(p, q).unwrap());
            assert_eq!(c.member(i).kw, kw);
        }
        // identity distortion reproduces the grid
        let ident = vec![BigRational::zero(), BigRational::one()];
        let d = ModelClass::distorted(&ident, 3).unwrap();
        let g = ModelClass::dyadic_grid(3).unwrap();
        assert_eq!(d.len(), g.len());
        for i in 0..d.len() {
            assert_eq!(d.param(i), g.param(i));
            assert_eq!(d.member(i).kw, g.member(i).kw);
        }
        // range violation: φ(t) = 2t
        let double = vec![BigRational::zero(), BigRational::from_integer(2.into())];
        assert!(ModelClass::distorted(&double, 2).is_err());
        // injectivity collision: φ(t) = t(1−t) pairs t with 1−t
        let hump = vec![
            BigRational::zero(),
            BigRational::one(),
            -BigRational::one(),
        ];
        assert!(ModelClass::distorted(&hump, 2).is_err());
    }

    #[test]
    fn kraft_flags_over_budget_classes() {
        let m = vec![
            CodedParameter::new(Parameter::from_ratio(1, 4).unwrap(), 0.0).unwrap(),
            CodedParameter::new(Parameter::from_ratio(3, 4).unwrap(), 0.0).unwrap(),
        ];
        let c = ModelClass::new(m, None).unwrap();
        let (sum, ok) = c.kraft();
        assert_eq!(sum, 2.0);
        assert!(!ok);

        let single = ModelClass::new(
            vec![CodedParameter::new(Parameter::half(), 0.0).unwrap()],
            None,
        )
        .unwrap();
        let (sum, ok) = single.kraft();
        assert_eq!(sum, 1.0);
        assert!(ok);
    }

    #[test]
    fn members_sorted_and_searchable() {
        let c = ModelClass::counterexample(3).unwrap();
        for w in c.members().windows(2) {
            assert!(w[0].param < w[1].param);
        }
        // binary-search range agrees with a linear scan
        let lo = Parameter::from_ratio(9, 16).unwrap();
        let hi = Parameter::from_ratio(11, 16).unwrap();
        let r = c.members_in_closed(lo.ratio(), hi.ratio());
        let linear: Vec<usize> = (0..c.len())
            .filter(|&i| c.param(i) >= &lo && c.param(i) <= &hi)
            .collect();
        assert_eq!((r.start..r.end).collect::<Vec<_>>(), linear);
    }

    #[test]
    fn duplicate_members_rejected() {
        let m = vec![
            CodedParameter::new(Parameter::half(), 1.0).unwrap(),
            CodedParameter::new(Parameter::half(), 2.0).unwrap(),
        ];
        assert!(ModelClass::new(m, None).is_err());
    }
}

//! Class-definition files (JSON).
//!
//! Two forms:
//!
//! ```json
//! {"parameters": [{"value": "3/16", "kw": 8.0}, {"value": "0.1b"}],
//!  "coding": "dyadic-Eq17", "true": "3/16"}
//! ```
//!
//! ```json
//! {"generator": {"kind": "counterexample", "N": 3}}
//! ```
//!
//! Parameter values use exact-rational syntax: "p/q" or binary "0.β…b".
//! Per-entry "kw" overrides the class-level "coding" rule
//! ("dyadic-Eq17" or "constant:N").

use num::rational::BigRational;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{dyadic_complexity, CodedParameter, ModelClass, Parameter};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFileRepr {
    #[serde(default)]
    parameters: Option<Vec<ParamEntry>>,
    #[serde(default)]
    generator: Option<GeneratorSpec>,
    #[serde(default)]
    coding: Option<String>,
    #[serde(default, rename = "true")]
    true_value: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamEntry {
    value: String,
    #[serde(default)]
    kw: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum GeneratorSpec {
    #[serde(rename = "counterexample")]
    Counterexample {
        #[serde(rename = "N")]
        n: u32,
    },
    #[serde(rename = "extended-counterexample")]
    ExtendedCounterexample {
        #[serde(rename = "N")]
        n: u32,
        #[serde(default)]
        extras: Vec<ParamEntry>,
    },
    #[serde(rename = "dyadic-grid")]
    DyadicGrid { precision: u32 },
    #[serde(rename = "distorted")]
    Distorted { precision: u32, coeffs: Vec<String> },
}

enum CodingRule {
    Dyadic,
    Constant(f64),
}

fn parse_coding(s: &str) -> Result<CodingRule> {
    if s == "dyadic-Eq17" {
        return Ok(CodingRule::Dyadic);
    }
    if let Some(n) = s.strip_prefix("constant:") {
        let kw: f64 = n
            .parse()
            .map_err(|_| Error::ClassFile(format!("bad constant coding {s:?}")))?;
        return Ok(CodingRule::Constant(kw));
    }
    Err(Error::ClassFile(format!(
        "unknown coding rule {s:?} (expected \"dyadic-Eq17\" or \"constant:N\")"
    )))
}

/// Parses a class-definition JSON document into a model class.
pub fn from_json_str(json: &str) -> Result<ModelClass> {
    let repr: ClassFileRepr =
        serde_json::from_str(json).map_err(|e| Error::ClassFile(e.to_string()))?;
    let mut class = match (repr.parameters, repr.generator) {
        (Some(_), Some(_)) => {
            return Err(Error::ClassFile(
                "give either \"parameters\" or \"generator\", not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::ClassFile(
                "need one of \"parameters\" or \"generator\"".into(),
            ))
        }
        (Some(entries), None) => {
            let rule = repr.coding.as_deref().map(parse_coding).transpose()?;
            let mut members = Vec::with_capacity(entries.len());
            for e in &entries {
                let p = Parameter::parse(&e.value)?;
                let kw = match (e.kw, &rule) {
                    (Some(kw), _) => kw,
                    (None, Some(CodingRule::Dyadic)) => dyadic_complexity(&p)?,
                    (None, Some(CodingRule::Constant(kw))) => *kw,
                    (None, None) => {
                        return Err(Error::ClassFile(format!(
                            "parameter {} has no \"kw\" and the file sets no \"coding\" rule",
                            e.value
                        )))
                    }
                };
                members.push(CodedParameter::new(p, kw)?);
            }
            ModelClass::new(members, None)?
        }
        (None, Some(gen)) => match gen {
            GeneratorSpec::Counterexample { n } => ModelClass::counterexample(n)?,
            GeneratorSpec::ExtendedCounterexample { n, extras } => {
                let mut parsed = Vec::with_capacity(extras.len());
                for e in &extras {
                    let kw = e.kw.ok_or_else(|| {
                        Error::ClassFile(format!("extra {} needs an explicit kw", e.value))
                    })?;
                    parsed.push((Parameter::parse(&e.value)?, kw));
                }
                ModelClass::extended_counterexample(n, &parsed)?
            }
            GeneratorSpec::DyadicGrid { precision } => ModelClass::dyadic_grid(precision)?,
            GeneratorSpec::Distorted { precision, coeffs } => {
                let parsed: Vec<BigRational> = coeffs
                    .iter()
                    .map(|c| parse_signed_rational(c))
                    .collect::<Result<_>>()?;
                ModelClass::distorted(&parsed, precision)?
            }
        },
    };
    if let Some(t) = repr.true_value {
        class = class.with_true(&Parameter::parse(&t)?)?;
    }
    Ok(class)
}

/// Polynomial coefficients may be negative and lie outside [0,1]; parse
/// "p/q" or an integer directly.
fn parse_signed_rational(s: &str) -> Result<BigRational> {
    use num::bigint::BigInt;
    use std::str::FromStr;
    let bad = |m: String| Error::ClassFile(format!("bad coefficient {s:?}: {m}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|e| bad(e.to_string()))?;
        let q = BigInt::from_str(q.trim()).map_err(|e| bad(e.to_string()))?;
        if q == BigInt::from(0) {
            return Err(bad("zero denominator".into()));
        }
        Ok(BigRational::new(p, q))
    } else {
        let p = BigInt::from_str(s.trim()).map_err(|e| bad(e.to_string()))?;
        Ok(BigRational::from_integer(p))
    }
}

/// Canonical one-line-per-member rendering used for hashing and manifests.
pub fn to_canonical_string(class: &ModelClass) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for (i, m) in class.members().iter().enumerate() {
        let mark = if Some(i) == class.true_index() { " *" } else { "" };
        writeln!(out, "{} kw={}{}", m.param, m.kw, mark).unwrap();
    }
    out
}

/// Hex SHA-256 of the canonical class rendering.
pub fn class_hash(class: &ModelClass) -> String {
    let mut h = Sha256::new();
    h.update(to_canonical_string(class).as_bytes());
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(s, "{b:02x}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_parameter_list() {
        let c = from_json_str(
            r#"{"parameters": [{"value": "3/16", "kw": 8.0}, {"value": "0.1b", "kw": 3.0}],
                "true": "3/16"}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.true_index(), Some(0));
        assert_eq!(c.member(0).kw, 8.0);
    }

    #[test]
    fn coding_rules() {
        let c = from_json_str(
            r#"{"parameters": [{"value": "3/16"}, {"value": "1/2"}], "coding": "dyadic-Eq17"}"#,
        )
        .unwrap();
        assert_eq!(c.member(0).kw, 8.0);
        assert_eq!(c.member(1).kw, 3.0);
        let c = from_json_str(
            r#"{"parameters": [{"value": "1/3"}, {"value": "1/2", "kw": 9.0}], "coding": "constant:4"}"#,
        )
        .unwrap();
        assert_eq!(c.member(0).kw, 4.0);
        assert_eq!(c.member(1).kw, 9.0);
        assert!(from_json_str(r#"{"parameters": [{"value": "1/3"}]}"#).is_err());
        assert!(
            from_json_str(r#"{"parameters": [{"value": "1/3"}], "coding": "huffman"}"#).is_err()
        );
    }

    #[test]
    fn generator_forms() {
        let c = from_json_str(r#"{"generator": {"kind": "counterexample", "N": 3}}"#).unwrap();
        assert_eq!(c.len(), 8);
        let c = from_json_str(
            r#"{"generator": {"kind": "dyadic-grid", "precision": 4}, "true": "3/16"}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 17);
        assert!(c.true_index().is_some());
        let c = from_json_str(
            r#"{"generator": {"kind": "distorted", "precision": 2, "coeffs": ["0", "0", "1"]}}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 5);
        let c = from_json_str(
            r#"{"generator": {"kind": "extended-counterexample", "N": 2,
                "extras": [{"value": "1/3", "kw": 5.0}]}}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn hash_is_stable_and_true_sensitive() {
        let a = from_json_str(r#"{"generator": {"kind": "counterexample", "N": 2}}"#).unwrap();
        let b = from_json_str(r#"{"generator": {"kind": "counterexample", "N": 2}}"#).unwrap();
        assert_eq!(class_hash(&a), class_hash(&b));
        let c = a.with_true(&Parameter::from_ratio(3, 4).unwrap()).unwrap();
        assert_ne!(class_hash(&a), class_hash(&c));
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(from_json_str("{}").is_err());
        assert!(from_json_str(
            r#"{"parameters": [], "generator": {"kind": "counterexample", "N": 1}}"#
        )
        .is_err());
    }
}

//! IFS definition files (TOML).
//!
//! ```toml
//! dim = 2
//! [[maps]]
//! ratio = "1/3"            # float, integer, or string holding a decimal or p/q
//! rotation_deg = 90        # plane only; or `rotation = [[0, -1], [1, 0]]` (rows)
//! translation = ["2/3", 0]
//! [osc_box]                # optional open-set-condition witness
//! lo = [0, 0]
//! hi = [1, 1]
//! ```
//!
//! A top-level `preset = "cantor3x3"` overrides everything else. Float literals go through
//! Rust's correctly rounded parser; string literals are also kept as exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use serde::Deserialize;

use super::exact::{ExactIfs, ExactMap};
use super::presets::preset;
use super::similarity::SimilarityMap;
use super::system::{AxisBox, IfsSystem};
use crate::error::{invalid, Result};
use crate::linalg;

/// A numeric literal with its exact rational value when one is available.
#[derive(Clone, Debug, PartialEq)]
pub struct Number {
    pub value: f64,
    pub exact: BigRational,
}

impl Number {
    pub fn parse(text: &str) -> Result<Number> {
        let t = text.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| invalid(format!("bad numerator in '{t}'")))?;
            let q: BigInt = q.trim().parse().map_err(|_| invalid(format!("bad denominator in '{t}'")))?;
            if q.is_zero() {
                return Err(invalid(format!("zero denominator in '{t}'")));
            }
            let exact = BigRational::new(p, q);
            let value = ratio_to_f64(&exact);
            return Ok(Number { value, exact });
        }
        let value: f64 = t.parse().map_err(|_| invalid(format!("'{t}' is not a number")))?;
        Ok(Number { value, exact: decimal_to_rational(t).unwrap_or_else(|| float_exact(value)) })
    }

    fn from_float(v: f64) -> Number {
        Number { value: v, exact: float_exact(v) }
    }
}

fn float_exact(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap_or_else(BigRational::zero)
}

/// Correctly rounded f64 from an exact rational (via its decimal expansion).
fn ratio_to_f64(r: &BigRational) -> f64 {
    let direct = r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN);
    if r.numer().bits() <= 53 && r.denom().bits() <= 53 {
        return direct;
    }
    r.to_f64().unwrap_or(direct)
}

fn decimal_to_rational(t: &str) -> Option<BigRational> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let all: String = format!("{int}{frac}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut n: BigInt = all.parse().ok()?;
    if neg {
        n = -n;
    }
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Int(i) => Ok(Number {
                value: i as f64,
                exact: BigRational::from_i64(i).expect("integer"),
            }),
            Raw::Float(f) => Ok(Number::from_float(f)),
            Raw::Text(s) => Number::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RotationSpec {
    Rows(Vec<Vec<Number>>),
    Flat(Vec<Number>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSpec {
    ratio: Number,
    rotation: Option<RotationSpec>,
    rotation_deg: Option<Number>,
    translation: Vec<Number>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxSpec {
    lo: Vec<Number>,
    hi: Vec<Number>,
}

/// Parsed IFS definition.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsFile {
    preset: Option<String>,
    dim: Option<usize>,
    #[serde(default)]
    maps: Vec<MapSpec>,
    osc_box: Option<BoxSpec>,
}

pub fn parse_ifs_file(text: &str) -> Result<IfsFile> {
    toml::from_str(text).map_err(|e| invalid(format!("IFS file: {}", e.message())))
}

impl IfsFile {
    pub fn preset_name(&self) -> Option<&str> {
        self.preset.as_deref()
    }

    fn dim(&self) -> Result<usize> {
        let d = self.dim.ok_or_else(|| invalid("dim: missing"))?;
        if d == 0 || d > 3 {
            return Err(invalid(format!("dim: {d} outside the supported range 1..=3")));
        }
        if self.maps.is_empty() {
            return Err(invalid("maps: at least one map is required"));
        }
        Ok(d)
    }

    fn rotation(&self, i: usize, d: usize) -> Result<Vec<Number>> {
        let m = &self.maps[i];
        match (&m.rotation, &m.rotation_deg) {
            (Some(_), Some(_)) => Err(invalid(format!("maps[{i}]: give rotation or rotation_deg, not both"))),
            (None, Some(deg)) => {
                if d != 2 {
                    return Err(invalid(format!("maps[{i}].rotation_deg: only valid for dim = 2")));
                }
                let r = linalg::rotation2(deg.value.to_radians());
                Ok(r.into_iter().map(Number::from_float).collect())
            }
            (Some(spec), None) => {
                let flat: Vec<Number> = match spec {
                    RotationSpec::Rows(rows) => {
                        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                            return Err(invalid(format!("maps[{i}].rotation: expected {d}x{d} rows")));
                        }
                        rows.iter().flatten().cloned().collect()
                    }
                    RotationSpec::Flat(v) => v.clone(),
                };
                if flat.len() != d * d {
                    return Err(invalid(format!("maps[{i}].rotation: expected {} entries", d * d)));
                }
                Ok(flat)
            }
            (None, None) => Ok(linalg::identity(d).into_iter().map(Number::from_float).collect()),
        }
    }

    pub fn build(&self) -> Result<IfsSystem> {
        if let Some(p) = &self.preset {
            return preset(p);
        }
        let d = self.dim()?;
        let mut maps = Vec::with_capacity(self.maps.len());
        for (i, m) in self.maps.iter().enumerate() {
            if m.translation.len() != d {
                return Err(invalid(format!("maps[{i}].translation: expected {d} entries")));
            }
            if !(m.ratio.value > 0.0 && m.ratio.value < 1.0) {
                return Err(invalid(format!("maps[{i}].ratio: {} is not in (0,1)", m.ratio.value)));
            }
            let rot: Vec<f64> = self.rotation(i, d)?.iter().map(|n| n.value).collect();
            let tr: Vec<f64> = m.translation.iter().map(|n| n.value).collect();
            let map = SimilarityMap::new(m.ratio.value, rot, tr)
                .map_err(|e| invalid(format!("maps[{i}].rotation: {e}")))?;
            maps.push(map);
        }
        let witness = match &self.osc_box {
            Some(b) => Some(AxisBox::new(
                b.lo.iter().map(|n| n.value).collect(),
                b.hi.iter().map(|n| n.value).collect(),
            )?),
            None => None,
        };
        IfsSystem::new(maps, witness)
    }

    /// Exact rational system; needs axis-aligned rotations and an `osc_box`.
    pub fn build_exact(&self) -> Result<ExactIfs> {
        if let Some(p) = &self.preset {
            return ExactIfs::preset(p);
        }
        let d = self.dim()?;
        let b = self
            .osc_box
            .as_ref()
            .ok_or_else(|| invalid("osc_box: required for the exact-rational path"))?;
        let mut maps = Vec::new();
        for (i, m) in self.maps.iter().enumerate() {
            let rot = self.rotation(i, d)?;
            let entries: Vec<i8> = rot
                .iter()
                .map(|n| match n.value {
                    1.0 => Ok(1),
                    -1.0 => Ok(-1),
                    0.0 => Ok(0),
                    _ => Err(invalid(format!("maps[{i}].rotation: exact path needs entries in {{-1,0,1}}"))),
                })
                .collect::<Result<_>>()?;
            maps.push(ExactMap::new(
                m.ratio.exact.clone(),
                entries,
                m.translation.iter().map(|n| n.exact.clone()).collect(),
            )?);
        }
        ExactIfs::new(
            maps,
            b.lo.iter().map(|n| n.exact.clone()).collect(),
            b.hi.iter().map(|n| n.exact.clone()).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_bit_exact() {
        let n = Number::parse("0.1").unwrap();
        assert_eq!(n.value.to_bits(), 0.1f64.to_bits());
        assert_eq!(n.exact, BigRational::new(1.into(), 10.into()));
        let third = Number::parse("1/3").unwrap();
        assert_eq!(third.value, 1.0 / 3.0);
        let e = Number::parse("2.5e-3").unwrap();
        assert_eq!(e.exact, BigRational::new(1.into(), 400.into()));
    }

    #[test]
    fn preset_overrides() {
        let f = parse_ifs_file("preset = \"cantor3x3\"\ndim = 5").unwrap();
        let ifs = f.build().unwrap();
        assert_eq!(ifs.dim(), 2);
        assert_eq!(ifs.num_maps(), 4);
    }

    #[test]
    fn ratio_error_names_field() {
        let text = "dim = 1\n[[maps]]\nratio = 1.2\ntranslation = [0]\n";
        let e = parse_ifs_file(text).unwrap().build().unwrap_err().to_string();
        assert!(e.contains("maps[0].ratio"), "{e}");
    }

    #[test]
    fn reflection_is_rejected() {
        let text = "dim = 2\n[[maps]]\nratio = 0.5\nrotation = [[1, 0], [0, -1]]\ntranslation = [0, 0]\n";
        let e = parse_ifs_file(text).unwrap().build().unwrap_err().to_string();
        assert!(e.contains("maps[0].rotation") && e.contains("determinant"), "{e}");
    }

    #[test]
    fn full_definition_round_trip() {
        let text = r#"
dim = 2
[[maps]]
ratio = "1/3"
translation = [0, 0]
[[maps]]
ratio = "1/3"
rotation_deg = 90
translation = ["2/3", 0]
[osc_box]
lo = [-1, -1]
hi = [1, 1]
"#;
        let f = parse_ifs_file(text).unwrap();
        let ifs = f.build().unwrap();
        assert_eq!(ifs.maps()[1].rotation(), &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(ifs.maps()[1].translation()[0], 2.0 / 3.0);
        let exact = f.build_exact().unwrap();
        assert_eq!(exact.maps().len(), 2);
    }
}

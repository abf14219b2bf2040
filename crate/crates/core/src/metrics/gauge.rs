use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Closed-form weight functions, all symmetric in `|y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeShape {
    /// `1`
    One,
    /// `(1 + |y|)^p`
    Power(f64),
    /// `|y|`
    Abs,
    /// `y^2`
    Square,
    /// `max(0, |y| - r)`: zero on `[-r, r]`.
    Hinge(f64),
}

/// What a gauge is used for: the weight `φ` of the Kolmogorov φ-metric, or
/// the moment gauge `ψ` of the ψ-weak topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeRole {
    UShaped,
    Psi,
}

/// A validated gauge function.
///
/// `UShaped` gauges are continuous, at least 1, nonincreasing on the negative
/// half-line and nondecreasing on the positive one. `Psi` gauges are
/// continuous, nonnegative and at least 1 outside a compact set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GaugeFunction {
    shape: GaugeShape,
}

impl GaugeFunction {
    pub fn new(shape: GaugeShape) -> Result<Self> {
        match shape {
            GaugeShape::Power(p) if !(p.is_finite() && p >= 0.0) => Err(Error::InvalidGauge(
                format!("power exponent must be >= 0, got {p}"),
            )),
            GaugeShape::Hinge(r) if !(r.is_finite() && r >= 0.0) => Err(Error::InvalidGauge(
                format!("hinge radius must be >= 0, got {r}"),
            )),
            _ => Ok(Self { shape }),
        }
    }

    pub fn one() -> Self {
        Self {
            shape: GaugeShape::One,
        }
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(GaugeShape::Power(p))
    }

    pub fn square() -> Self {
        Self {
            shape: GaugeShape::Square,
        }
    }

    pub fn abs() -> Self {
        Self {
            shape: GaugeShape::Abs,
        }
    }

    pub fn shape(&self) -> GaugeShape {
        self.shape
    }

    /// Parses a descriptor and checks it is valid for `role`.
    pub fn parse_as(desc: &str, role: GaugeRole) -> Result<Self> {
        let g: GaugeFunction = desc.parse()?;
        g.require(role)?;
        Ok(g)
    }

    pub fn is_u_shaped(&self) -> bool {
        matches!(self.shape, GaugeShape::One | GaugeShape::Power(_))
    }

    /// Every shape here is a valid ψ-gauge.
    pub fn is_psi(&self) -> bool {
        true
    }

    pub fn require(&self, role: GaugeRole) -> Result<()> {
        let ok = match role {
            GaugeRole::UShaped => self.is_u_shaped(),
            GaugeRole::Psi => self.is_psi(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGauge(format!(
                "{self} is not a u-shaped weight (values must be >= 1)"
            )))
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let a = y.abs();
        match self.shape {
            GaugeShape::One => 1.0,
            GaugeShape::Power(p) => (1.0 + a).powf(p),
            GaugeShape::Abs => a,
            GaugeShape::Square => y * y,
            GaugeShape::Hinge(r) => (a - r).max(0.0),
        }
    }

    /// Supremum of the gauge, if finite.
    pub fn bound(&self) -> Option<f64> {
        match self.shape {
            GaugeShape::One => Some(1.0),
            GaugeShape::Power(0.0) => Some(1.0),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.bound().is_some()
    }

    /// Radius `r` with `{y : gauge(y) >= level} = {|y| >= r}`, or `None` when
    /// that set is empty.
    pub fn level_radius(&self, level: f64) -> Option<f64> {
        if level <= self.eval(0.0) {
            return Some(0.0);
        }
        match self.shape {
            GaugeShape::One => None,
            GaugeShape::Power(0.0) => None,
            GaugeShape::Power(p) => Some(level.powf(1.0 / p) - 1.0),
            GaugeShape::Abs => Some(level),
            GaugeShape::Square => Some(level.sqrt()),
            GaugeShape::Hinge(r) => Some(r + level),
        }
    }

    /// Right-continuous inverse of the gauge restricted to the negative
    /// half-line, `sup{y <= 0 : gauge(y) > z}`; `None` when the set is empty.
    pub fn negative_inverse(&self, z: f64) -> Option<f64> {
        if z < self.eval(0.0) {
            return Some(0.0);
        }
        match self.shape {
            GaugeShape::One => None,
            GaugeShape::Power(0.0) => None,
            GaugeShape::Power(p) => Some(1.0 - z.powf(1.0 / p)),
            GaugeShape::Abs => Some(-z),
            GaugeShape::Square => Some(-z.sqrt()),
            GaugeShape::Hinge(r) => Some(-(r + z)),
        }
    }

    /// `∫ gauge dμ`, closed form where one exists.
    pub fn moment(&self, mu: &Distribution) -> f64 {
        match self.shape {
            GaugeShape::One => 1.0,
            GaugeShape::Power(0.0) => 1.0,
            GaugeShape::Square => mu.second_moment(),
            _ => mu.expect(|y| self.eval(y), &self.kinks()),
        }
    }

    /// `∫ gauge·1{gauge >= level} dμ`.
    pub fn tail_moment(&self, mu: &Distribution, level: f64) -> f64 {
        match self.level_radius(level) {
            None => 0.0,
            Some(r) if r <= 0.0 => self.moment(mu),
            Some(r) => {
                let mut cuts = self.kinks();
                cuts.extend([-r, r]);
                mu.expect(|y| if y.abs() >= r { self.eval(y) } else { 0.0 }, &cuts)
            }
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self.shape {
            GaugeShape::Hinge(r) => vec![-r, 0.0, r],
            _ => vec![0.0],
        }
    }
}

impl fmt::Display for GaugeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            GaugeShape::One => write!(f, "one"),
            GaugeShape::Power(p) => write!(f, "power:{p}"),
            GaugeShape::Abs => write!(f, "abs"),
            GaugeShape::Square => write!(f, "square"),
            GaugeShape::Hinge(r) => write!(f, "hinge:{r}"),
        }
    }
}

impl FromStr for GaugeFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidGauge(format!("'{s}' needs a numeric argument")))?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidGauge(format!("bad number in '{s}'")))
        };
        let shape = match (name.trim(), arg) {
            ("one", None) => GaugeShape::One,
            ("abs", None) => GaugeShape::Abs,
            ("square", None) => GaugeShape::Square,
            ("power", a) => GaugeShape::Power(num(a)?),
            ("hinge", a) => GaugeShape::Hinge(num(a)?),
            _ => return Err(Error::InvalidGauge(format!("unknown gauge '{s}'"))),
        };
        Self::new(shape)
    }
}

impl TryFrom<String> for GaugeFunction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GaugeFunction> for String {
    fn from(g: GaugeFunction) -> String {
        g.to_string()
    }
}

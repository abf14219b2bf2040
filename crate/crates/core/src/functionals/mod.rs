//! Statistical functionals `T` and their plug-in estimators
//! `T̂_n = T(m̂_n)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, EmpiricalMeasure};
use crate::error::{Error, Result};

/// A functional of a law on the real line (or, for the covariance, on the
/// plane).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Functional {
    Mean,
    SecondMoment,
    /// Divisor-`n` variance `∫y² dμ - (∫y dμ)²`.
    Variance,
    /// Lower `α`-quantile `F←(α)`, `0 < α < 1`.
    Quantile(f64),
    Covariance,
}

impl Functional {
    pub fn quantile(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Functional::Quantile(alpha))
        } else {
            Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0, 1), got {alpha}"
            )))
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(Functional::Mean),
            "second-moment" => Ok(Functional::SecondMoment),
            "variance" => Ok(Functional::Variance),
            "covariance" => Ok(Functional::Covariance),
            other => match other.strip_prefix("quantile:") {
                Some(a) => Functional::quantile(a.parse().map_err(|_| {
                    Error::Config(format!("bad quantile level in functional {other:?}"))
                })?),
                None => Err(Error::Config(format!("unknown functional {other:?}"))),
            },
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Mean => write!(f, "mean"),
            Functional::SecondMoment => write!(f, "second-moment"),
            Functional::Variance => write!(f, "variance"),
            Functional::Quantile(a) => write!(f, "quantile:{a}"),
            Functional::Covariance => write!(f, "covariance"),
        }
    }
}

impl TryFrom<String> for Functional {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Functional> for String {
    fn from(f: Functional) -> Self {
        f.to_string()
    }
}

fn finite(v: f64, what: &str, mu: &Distribution) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NotIntegrable(format!(
            "{what} of {} is not finite",
            mu.describe()
        )))
    }
}

/// `T(μ)` for a law on the real line.
pub fn evaluate(functional: Functional, mu: &Distribution) -> Result<f64> {
    match functional {
        Functional::Mean => finite(mu.mean(), "mean", mu),
        Functional::SecondMoment => finite(mu.second_moment(), "second moment", mu),
        Functional::Variance => {
            let m = finite(mu.mean(), "mean", mu)?;
            let s = finite(mu.second_moment(), "second moment", mu)?;
            Ok((s - m * m).max(0.0))
        }
        Functional::Quantile(alpha) => mu.quantile(alpha).finite().ok_or_else(|| {
            Error::Domain(format!("quantile {alpha} of {} is infinite", mu.describe()))
        }),
        Functional::Covariance => Err(Error::Domain("covariance needs a paired sample".into())),
    }
}

/// `T̂_n`: the functional applied to the empirical law of the sample.
pub fn plugin(functional: Functional, sample: &EmpiricalMeasure) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("plug-in estimator of an empty sample".into()));
    }
    evaluate(functional, &Distribution::from_measure(sample.clone()))
}

/// [`plugin`] on raw observations.
pub fn plugin_slice(functional: Functional, sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("plug-in estimator of an empty sample".into()));
    }
    plugin(functional, &EmpiricalMeasure::from_slice(sample)?)
}

/// Observations of a pair `(X, Y)` as two aligned sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidParameter(format!(
                "paired sample lengths differ: {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::Domain("empty paired sample".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "paired sample contains non-finite values".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `∫(x₁ - ∫x μ₁)(x₂ - ∫x μ₂) dμ` under the empirical law of the pairs.
    pub fn covariance(&self) -> f64 {
        let n = self.len() as f64;
        let mx = self.x.iter().sum::<f64>() / n;
        let my = self.y.iter().sum::<f64>() / n;
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n
    }
}

/// `T` on the empirical law of a paired sample; only the covariance is a
/// functional of the joint law, the others act on the first coordinate.
pub fn evaluate_paired(functional: Functional, sample: &PairedSample) -> Result<f64> {
    match functional {
        Functional::Covariance => Ok(sample.covariance()),
        other => plugin_slice(other, &sample.x),
    }
}

/// `∫ |F_μ(y) - F_ν(y)| |y|^k dy` for atomic laws (`k` = 0 or 1), exact
/// piece by piece between breakpoints.
pub fn weighted_cdf_l1(mu: &Distribution, nu: &Distribution, k: u32) -> Result<f64> {
    if !(mu.is_discrete() && nu.is_discrete()) {
        return Err(Error::Domain("exact CDF integrals need atomic laws".into()));
    }
    let mut pts = mu.breakpoints();
    pts.extend(nu.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // antiderivative of |y|^k
    let prim = |y: f64| if k == 0 { y } else { 0.5 * y * y.abs() };
    Ok(pts
        .windows(2)
        .map(|w| (mu.cdf(w[0]) - nu.cdf(w[0])).abs() * (prim(w[1]) - prim(w[0])))
        .sum())
}

//! Linear processes `X_t = Σ_{s>=0} a_s Z_{t-s}`: coefficient generators,
//! strong-mixing bounds and seeded path simulation.

mod arma;

pub use arma::{
    ar_polynomial, arma_ma_coeffs, causality_invertibility_check, invert_power_series,
    ma_polynomial, polynomial_roots, RootReport, MAX_DEGREE, ROOT_TOL,
};

use arma::{arma_recursion, Envelope};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Default bound on `E|Z| Σ_{s > s_max} |a_s|` for truncated simulation.
pub const TRUNCATION_BUDGET: f64 = 1e-10;
/// Largest truncation index chosen automatically.
pub const MAX_TRUNCATION: usize = 10_000;

/// How the MA(∞) coefficients `a_s` (with `a_0 = 1`) are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientSpec {
    /// `θ(z)/φ(z)` with `φ(z) = 1 - Σ φ_j z^j`, `θ(z) = 1 + Σ θ_j z^j`.
    Arma {
        #[serde(default)]
        phi: Vec<f64>,
        #[serde(default)]
        theta: Vec<f64>,
    },
    /// A finite list `a_0, a_1, ...`; later coefficients are zero.
    Explicit { coefficients: Vec<f64> },
    /// `a_0 = 1` and `a_s = a q^s` for `s >= 1`.
    Geometric { a: f64, q: f64 },
}

/// Internal evaluation form of a coefficient sequence.
#[derive(Debug, Clone, PartialEq)]
enum Series {
    /// `a_0 = 1`, `a_s = g q^(s-1)`: ARMA(1,1) and the geometric generator.
    Geometric { g: f64, q: f64 },
    /// Recursively generated with a certified envelope.
    General {
        phi: Vec<f64>,
        theta: Vec<f64>,
        envelope: Envelope,
    },
}

fn disk_margin(r: f64) -> bool {
    r.abs() * (1.0 + ROOT_TOL) < 1.0
}

impl Series {
    fn general(phi: &[f64], theta: &[f64]) -> Result<Self> {
        Ok(Series::General {
            phi: phi.to_vec(),
            theta: theta.to_vec(),
            envelope: Envelope::arma(phi, theta)?,
        })
    }

    fn coefficients(&self, s_max: usize) -> Vec<f64> {
        match self {
            Series::Geometric { g, q } => (0..=s_max)
                .map(|s| {
                    if s == 0 {
                        1.0
                    } else {
                        g * q.powi(s as i32 - 1)
                    }
                })
                .collect(),
            Series::General { phi, theta, .. } => arma_recursion(phi, theta, s_max),
        }
    }

    fn abs_sum(&self) -> f64 {
        self.tail_sum(0)
    }

    fn tail_sum(&self, n: usize) -> f64 {
        match self {
            Series::Geometric { g, q } => {
                let rest = g.abs() * q.abs().powi(n.max(1) as i32 - 1) / (1.0 - q.abs());
                if n == 0 {
                    1.0 + rest
                } else {
                    rest
                }
            }
            Series::General { envelope, .. } => envelope.tail_sum(n),
        }
    }

    fn tail_double_sum(&self, n: usize) -> f64 {
        match self {
            Series::Geometric { g, q } => {
                let r = q.abs();
                let from_one = g.abs() * r.powi(n.max(1) as i32 - 1) / ((1.0 - r) * (1.0 - r));
                if n == 0 {
                    from_one + self.abs_sum()
                } else {
                    from_one
                }
            }
            Series::General { envelope, .. } => envelope.tail_double_sum(n),
        }
    }
}

impl CoefficientSpec {
    pub fn arma(phi: &[f64], theta: &[f64]) -> Self {
        CoefficientSpec::Arma {
            phi: phi.to_vec(),
            theta: theta.to_vec(),
        }
    }

    /// `a = (1, 0, 0, ...)`: an i.i.d. process.
    pub fn iid() -> Self {
        CoefficientSpec::Explicit {
            coefficients: vec![1.0],
        }
    }

    /// The sequence `a_s` itself, validated for summability.
    fn forward(&self) -> Result<Series> {
        match self {
            CoefficientSpec::Arma { phi, theta } => {
                causality_invertibility_check(phi, theta).into_result()?;
                if phi.len() <= 1 && theta.len() <= 1 {
                    let p = phi.first().copied().unwrap_or(0.0);
                    let t = theta.first().copied().unwrap_or(0.0);
                    Ok(Series::Geometric { g: p + t, q: p })
                } else {
                    Series::general(phi, theta)
                }
            }
            CoefficientSpec::Explicit { coefficients } => {
                if coefficients.first() != Some(&1.0) {
                    return Err(Error::InvalidParameter(
                        "explicit coefficients must start with a_0 = 1".into(),
                    ));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "explicit coefficients must be finite".into(),
                    ));
                }
                Series::general(&[], &coefficients[1..])
            }
            CoefficientSpec::Geometric { a, q } => {
                if !(a.is_finite() && disk_margin(*q)) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric generator needs |q| < 1, got q = {q}"
                    )));
                }
                Ok(Series::Geometric { g: a * q, q: *q })
            }
        }
    }

    /// The coefficients `b_s` of `1 / Σ a_s z^s`, validated for summability.
    fn inverse(&self) -> Result<Series> {
        match self {
            CoefficientSpec::Arma { phi, theta } => {
                causality_invertibility_check(phi, theta).into_result()?;
                let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
                if phi.len() <= 1 && theta.len() <= 1 {
                    let p = phi.first().copied().unwrap_or(0.0);
                    let t = theta.first().copied().unwrap_or(0.0);
                    Ok(Series::Geometric { g: -(p + t), q: -t })
                } else {
                    Series::general(&neg(theta), &neg(phi))
                }
            }
            CoefficientSpec::Explicit { coefficients } => {
                self.forward()?;
                let theta = &coefficients[1..];
                causality_invertibility_check(&[], theta).into_result()?;
                Series::general(&theta.iter().map(|x| -x).collect::<Vec<_>>(), &[])
            }
            CoefficientSpec::Geometric { a, q } => {
                self.forward()?;
                // 1/a(z) = (1 - qz) / (1 + (a-1)q z)
                let r = (1.0 - a) * q;
                if !disk_margin(r) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric generator is not invertible: |(a-1)q| = {} >= 1",
                        r.abs()
                    )));
                }
                Ok(Series::Geometric { g: -a * q, q: r })
            }
        }
    }

    /// `a_0, ..., a_{s_max}`.
    pub fn coefficients(&self, s_max: usize) -> Result<Vec<f64>> {
        Ok(self.forward()?.coefficients(s_max))
    }

    /// `b_0, ..., b_{s_max}`.
    pub fn inverse_coefficients(&self, s_max: usize) -> Result<Vec<f64>> {
        Ok(self.inverse()?.coefficients(s_max))
    }

    /// `Σ |b_s|` (closed form, or an upper bound with certified remainder).
    pub fn inverse_abs_sum(&self) -> Result<f64> {
        Ok(self.inverse()?.abs_sum())
    }

    /// `Σ_{s>=n} |a_s|`.
    pub fn tail_sum(&self, n: usize) -> Result<f64> {
        Ok(self.forward()?.tail_sum(n))
    }

    pub fn describe(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            CoefficientSpec::Arma { phi, theta } => {
                format!("arma(phi=[{}],theta=[{}])", list(phi), list(theta))
            }
            CoefficientSpec::Explicit { coefficients } => {
                format!("explicit([{}])", list(coefficients))
            }
            CoefficientSpec::Geometric { a, q } => format!("geometric(a={a},q={q})"),
        }
    }
}

/// `Σ_{u>=n} Σ_{s>=u} |a_s|`: closed form for ARMA(1,1) and geometric
/// generators, otherwise a truncated sum plus a certified geometric
/// remainder (an upper bound within about `1e-15`).
pub fn tail_double_sum(coefficients: &CoefficientSpec, n: usize) -> Result<f64> {
    Ok(coefficients.forward()?.tail_double_sum(n))
}

/// A linear process driven by i.i.d. noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProcessSpec {
    #[serde(flatten)]
    pub coefficients: CoefficientSpec,
    pub noise: Distribution,
    /// Overrides the density-smoothness constant `M` of the noise.
    #[serde(
        default,
        rename = "density-lipschitz",
        skip_serializing_if = "Option::is_none"
    )]
    pub density_lipschitz: Option<f64>,
}

impl LinearProcessSpec {
    pub fn new(coefficients: CoefficientSpec, noise: Distribution) -> Self {
        Self {
            coefficients,
            noise,
            density_lipschitz: None,
        }
    }

    pub fn arma(phi: &[f64], theta: &[f64], noise: Distribution) -> Self {
        Self::new(CoefficientSpec::arma(phi, theta), noise)
    }

    pub fn iid(noise: Distribution) -> Self {
        Self::new(CoefficientSpec::iid(), noise)
    }

    /// `M` with `∫|f(y+h) - f(y)| dy <= M|h|` for the noise density.
    pub fn smoothness(&self) -> Result<f64> {
        match self.density_lipschitz {
            Some(m) if m.is_finite() && m > 0.0 => Ok(m),
            Some(m) => Err(Error::InvalidParameter(format!(
                "density-lipschitz must be positive, got {m}"
            ))),
            None => self.noise.density_lipschitz().ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no density-smoothness constant known for noise {}; set density-lipschitz",
                    self.noise.describe()
                ))
            }),
        }
    }

    /// `E|Z_1|`.
    pub fn noise_abs_mean(&self) -> f64 {
        self.noise.abs_mean()
    }

    /// The strong-mixing bound profile of the process.
    pub fn profile(&self) -> Result<MixingProfile> {
        let series = self.coefficients.forward()?;
        let b_abs_sum = self.coefficients.inverse_abs_sum()?;
        let noise_abs_mean = self.noise_abs_mean();
        if !noise_abs_mean.is_finite() {
            return Err(Error::NotIntegrable(
                "noise has infinite first absolute moment".into(),
            ));
        }
        // an i.i.d. process is mixing of every order without any smoothness
        let smoothness = if series.tail_double_sum(1) == 0.0 {
            self.smoothness().unwrap_or(0.0)
        } else {
            self.smoothness()?
        };
        Ok(MixingProfile {
            factor: 2.0 * smoothness * noise_abs_mean * b_abs_sum,
            smoothness,
            noise_abs_mean,
            b_abs_sum,
            series,
        })
    }

    /// Smallest truncation index with `E|Z| Σ_{s > s_max} |a_s|` within the
    /// default budget, at most `MAX_TRUNCATION`.
    pub fn default_truncation(&self) -> Result<usize> {
        let series = self.coefficients.forward()?;
        let l = self.noise_abs_mean();
        let mut lo = 0;
        let mut hi = MAX_TRUNCATION;
        if series.tail_sum(hi + 1) * l > TRUNCATION_BUDGET {
            return Err(Error::Truncation(format!(
                "coefficient tail exceeds {TRUNCATION_BUDGET:e} even at s_max = {MAX_TRUNCATION}"
            )));
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if series.tail_sum(mid + 1) * l <= TRUNCATION_BUDGET {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    /// Marginal law of the truncated process `Σ_{s<=s_max} a_s Z_{t-s}` when
    /// the noise is Gaussian.
    pub fn gaussian_marginal(&self, s_max: usize) -> Result<Option<Distribution>> {
        let Some((m, sd)) = self.noise.gaussian_params() else {
            return Ok(None);
        };
        let a = self.coefficients.coefficients(s_max)?;
        let sum: f64 = a.iter().sum();
        let sq: f64 = a.iter().map(|x| x * x).sum();
        Distribution::gaussian(m * sum, sd * sq.sqrt()).map(Some)
    }

    pub fn describe(&self) -> String {
        format!(
            "{} noise={}",
            self.coefficients.describe(),
            self.noise.describe()
        )
    }
}

/// Upper bounds on the strong-mixing coefficients of a linear process:
/// `α(n) <= min(1/4, 2 M E|Z| Σ|b_s| Σ_{u>=n} Σ_{s>=u} |a_s|)`, with
/// `α(0) = 1/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    /// `2 M E|Z| Σ|b_s|`.
    pub factor: f64,
    pub smoothness: f64,
    pub noise_abs_mean: f64,
    pub b_abs_sum: f64,
    series: Series,
}

impl MixingProfile {
    pub fn alpha(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.25;
        }
        let tail = self.series.tail_double_sum(n);
        if tail == 0.0 {
            0.0
        } else {
            (self.factor * tail).min(0.25)
        }
    }

    /// `α(0), ..., α(n-1)`.
    pub fn values(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.alpha(j)).collect()
    }

    pub fn tail_factor(&self, n: usize) -> f64 {
        self.series.tail_double_sum(n)
    }
}

/// `min(1/4, 2 M E|Z| Σ|b_s| Σ_{u>=n} Σ_{s>=u} |a_s|)`.
pub fn mixing_bound(spec: &LinearProcessSpec, n: usize) -> Result<f64> {
    Ok(spec.profile()?.alpha(n))
}

fn check_truncation(spec: &LinearProcessSpec, s_max: Option<usize>) -> Result<usize> {
    match s_max {
        None => spec.default_truncation(),
        Some(s) => {
            let tail = spec.coefficients.tail_sum(s + 1)? * spec.noise_abs_mean();
            if tail > TRUNCATION_BUDGET {
                Err(Error::Truncation(format!(
                    "dropped coefficient mass {tail:e} exceeds {TRUNCATION_BUDGET:e}; use a larger s_max"
                )))
            } else {
                Ok(s)
            }
        }
    }
}

/// A simulated path together with the noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    /// `X_1, ..., X_n`.
    pub path: Vec<f64>,
    /// `Z_{1-s_max}, ..., Z_n`.
    pub noise: Vec<f64>,
    pub s_max: usize,
}

/// Simulates `X_1..X_n` from the truncated sum over one seeded noise stream
/// `Z_{1-s_max}..Z_n`; `s_max` defaults to the smallest index within the
/// truncation budget.
pub fn simulate_linear(
    spec: &LinearProcessSpec,
    n: usize,
    seed: u64,
    s_max: Option<usize>,
) -> Result<Vec<f64>> {
    Ok(simulate_with_noise(spec, n, seed, s_max)?.path)
}

pub fn simulate_with_noise(
    spec: &LinearProcessSpec,
    n: usize,
    seed: u64,
    s_max: Option<usize>,
) -> Result<SimulatedPath> {
    let s_max = check_truncation(spec, s_max)?;
    let a = spec.coefficients.coefficients(s_max)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..n + s_max)
        .map(|_| spec.noise.sample(&mut rng))
        .collect();
    Ok(SimulatedPath {
        path: filter(&a, &noise, n),
        noise,
        s_max,
    })
}

/// Sampler reusing the coefficient vector across many paths.
#[derive(Debug, Clone)]
pub struct PathSampler {
    noise: Distribution,
    coefficients: Vec<f64>,
}

impl PathSampler {
    pub fn new(spec: &LinearProcessSpec, s_max: Option<usize>) -> Result<Self> {
        let s_max = check_truncation(spec, s_max)?;
        Ok(Self {
            noise: spec.noise.clone(),
            coefficients: spec.coefficients.coefficients(s_max)?,
        })
    }

    pub fn s_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Same path as [`simulate_linear`] with this truncation and seed.
    pub fn path(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..n + self.s_max())
            .map(|_| self.noise.sample(&mut rng))
            .collect();
        filter(&self.coefficients, &noise, n)
    }

    /// `count` independent copies of `X_1` from one seeded noise stream.
    pub fn marginal_draws(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.coefficients
                    .iter()
                    .map(|c| c * self.noise.sample(&mut rng))
                    .sum()
            })
            .collect()
    }

    /// Whether `X_t = Z_t`.
    pub fn is_iid(&self) -> bool {
        self.coefficients[0] == 1.0 && self.coefficients.iter().skip(1).all(|&c| c == 0.0)
    }
}

fn filter(a: &[f64], noise: &[f64], n: usize) -> Vec<f64> {
    let s_max = a.len() - 1;
    (0..n)
        .map(|t| {
            // X_{t+1} uses noise indices t + s_max - s
            let window = &noise[t..=t + s_max];
            a.iter().zip(window.iter().rev()).map(|(c, z)| c * z).sum()
        })
        .collect()
}

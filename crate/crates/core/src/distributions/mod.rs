//! Probability laws on the real line, exposed through their distribution
//! functions, plus generalized inverses and the quantile transformation.

mod empirical;
mod inverse;
mod transform;

pub use empirical::EmpiricalMeasure;
pub use inverse::{left_inverse, right_inverse};
pub use transform::quantile_transform;

use libm::erfc;
use rand::Rng;
use rand_distr::{Distribution as _, Normal, StandardUniform};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::numeric::{bisect_boundary, integrate_split, QUAD_TOL};

/// A real number or one of the two infinities.
///
/// Generalized inverses return `PosInf` for an empty set instead of a large
/// float, so callers can distinguish "no such point" from "very far away".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Maps the infinities to `f64::INFINITY` / `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }
}

/// Span (in standard deviations) outside which a Gaussian carries no mass
/// representable in double precision.
const GAUSS_SPAN: f64 = 38.0;

/// Finitely many atoms with merged ties, sorted by location.
#[derive(Debug, Clone, PartialEq)]
struct Atoms {
    locs: Vec<f64>,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl Atoms {
    fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        for &(x, w) in &pairs {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!("bad atom ({x}, {w})")));
            }
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if w == 0.0 {
                continue;
            }
            if locs.last() == Some(&x) {
                *weights.last_mut().unwrap() += w;
            } else {
                locs.push(x);
                weights.push(w);
            }
        }
        let mut acc = 0.0;
        let mut cum: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Ok(Self { locs, weights, cum })
    }

    fn cdf(&self, y: f64) -> f64 {
        let k = self.locs.partition_point(|&x| x <= y);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    fn cdf_left(&self, y: f64) -> f64 {
        let k = self.locs.partition_point(|&x| x < y);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    fn quantile(&self, t: f64) -> ExtReal {
        if t <= 0.0 {
            return ExtReal::NegInf;
        }
        let k = self.cum.partition_point(|&c| c < t);
        self.locs
            .get(k)
            .map_or(ExtReal::PosInf, |&x| ExtReal::Finite(x))
    }

    fn quantile_upper(&self, t: f64) -> ExtReal {
        if t < 0.0 {
            return ExtReal::NegInf;
        }
        let k = self.cum.partition_point(|&c| c <= t);
        self.locs
            .get(k)
            .map_or(ExtReal::PosInf, |&x| ExtReal::Finite(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    PointMass(f64),
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
    Discrete(Atoms),
    Empirical(EmpiricalMeasure),
    Mixture(Vec<(f64, Distribution)>),
}

/// A probability law on the real line.
///
/// All laws are immutable after construction; constructors validate their
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct Distribution {
    kind: Kind,
}

/// Text form of a [`Distribution`], as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    PointMass { location: f64 },
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
    FiniteDiscrete { atoms: Vec<(f64, f64)> },
    Empirical { sample: Vec<f64> },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub law: DistributionSpec,
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::PointMass { location } => Distribution::point_mass(location),
            DistributionSpec::Uniform { lo, hi } => Distribution::uniform(lo, hi),
            DistributionSpec::Gaussian { mean, sd } => Distribution::gaussian(mean, sd),
            DistributionSpec::FiniteDiscrete { atoms } => Distribution::finite_discrete(atoms),
            DistributionSpec::Empirical { sample } => Distribution::empirical(sample),
            DistributionSpec::Mixture { components } => Distribution::mixture(
                components
                    .into_iter()
                    .map(|c| Ok((c.weight, Distribution::try_from(c.law)?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d.kind {
            Kind::PointMass(location) => DistributionSpec::PointMass { location },
            Kind::Uniform { lo, hi } => DistributionSpec::Uniform { lo, hi },
            Kind::Gaussian { mean, sd } => DistributionSpec::Gaussian { mean, sd },
            Kind::Discrete(a) => DistributionSpec::FiniteDiscrete {
                atoms: a.locs.into_iter().zip(a.weights).collect(),
            },
            Kind::Empirical(m) => DistributionSpec::Empirical {
                sample: m.observations().to_vec(),
            },
            Kind::Mixture(parts) => DistributionSpec::Mixture {
                components: parts
                    .into_iter()
                    .map(|(weight, law)| MixtureComponent {
                        weight,
                        law: law.into(),
                    })
                    .collect(),
            },
        }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // the rational approximation is good to ~1e-11; two Newton steps on the
    // CDF bring it to rounding level
    for _ in 0..2 {
        let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if dens < 1e-300 {
            break;
        }
        let step = (std_normal_cdf(z) - p) / dens;
        if !step.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

impl Distribution {
    pub fn point_mass(location: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::InvalidDistribution(
                "point mass location must be finite".into(),
            ));
        }
        Ok(Self {
            kind: Kind::PointMass(location),
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDistribution(format!(
                "uniform needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            kind: Kind::Uniform { lo, hi },
        })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "gaussian needs sd > 0, got {sd}"
            )));
        }
        Ok(Self {
            kind: Kind::Gaussian { mean, sd },
        })
    }

    /// Finitely many `(location, weight)` atoms; weights must sum to one
    /// within `1e-12`. Ties are merged.
    pub fn finite_discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self {
            kind: Kind::Discrete(Atoms::new(atoms)?),
        })
    }

    /// Equal weights on the given points.
    pub fn uniform_on(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::finite_discrete(points.iter().map(|&x| (x, w)).collect())
    }

    pub fn empirical(sample: Vec<f64>) -> Result<Self> {
        Ok(Self {
            kind: Kind::Empirical(EmpiricalMeasure::new(sample)?),
        })
    }

    pub fn from_measure(m: EmpiricalMeasure) -> Self {
        Self {
            kind: Kind::Empirical(m),
        }
    }

    pub fn mixture(components: Vec<(f64, Distribution)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDistribution("empty mixture".into()));
        }
        if components.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "mixture weights must be nonnegative".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(Self {
            kind: Kind::Mixture(components),
        })
    }

    pub fn as_empirical(&self) -> Option<&EmpiricalMeasure> {
        match &self.kind {
            Kind::Empirical(m) => Some(m),
            _ => None,
        }
    }

    /// `(mean, sd)` for a Gaussian law.
    pub fn gaussian_params(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Gaussian { mean, sd } => Some((*mean, *sd)),
            _ => None,
        }
    }

    /// A constant `M` with `∫|f(y+h) - f(y)| dy <= M|h|` for the density
    /// `f`, when one is known in closed form: `∫|f'|` for Gaussian and
    /// `2/(b-a)` for uniform laws, weighted sums for mixtures of those.
    pub fn density_lipschitz(&self) -> Option<f64> {
        match &self.kind {
            Kind::Gaussian { sd, .. } => Some((2.0 / std::f64::consts::PI).sqrt() / sd),
            Kind::Uniform { lo, hi } => Some(2.0 / (hi - lo)),
            Kind::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| {
                    if *w == 0.0 {
                        Some(0.0)
                    } else {
                        d.density_lipschitz().map(|m| w * m)
                    }
                })
                .sum(),
            _ => None,
        }
    }

    /// `E|X|`.
    pub fn abs_mean(&self) -> f64 {
        match &self.kind {
            Kind::Gaussian { mean, sd } if *mean == 0.0 => sd * (2.0 / std::f64::consts::PI).sqrt(),
            _ => self.expect(f64::abs, &[0.0]),
        }
    }

    /// True when the law has no continuous part.
    pub fn is_discrete(&self) -> bool {
        match &self.kind {
            Kind::PointMass(_) | Kind::Discrete(_) | Kind::Empirical(_) => true,
            Kind::Uniform { .. } | Kind::Gaussian { .. } => false,
            Kind::Mixture(parts) => parts.iter().all(|(w, d)| *w == 0.0 || d.is_discrete()),
        }
    }

    /// True when the law has no atoms.
    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            Kind::Uniform { .. } | Kind::Gaussian { .. } => true,
            Kind::PointMass(_) | Kind::Discrete(_) | Kind::Empirical(_) => false,
            Kind::Mixture(parts) => parts.iter().all(|(w, d)| *w == 0.0 || d.is_continuous()),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::PointMass(x) => f64::from(u8::from(y >= *x)),
            Kind::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
            Kind::Gaussian { mean, sd } => std_normal_cdf((y - mean) / sd),
            Kind::Discrete(a) => a.cdf(y),
            Kind::Empirical(m) => m.cdf(y),
            Kind::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| w * d.cdf(y))
                .sum::<f64>()
                .min(1.0),
        }
    }

    /// Left limit `F(y-)`.
    pub fn cdf_left(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::PointMass(x) => f64::from(u8::from(y > *x)),
            Kind::Discrete(a) => a.cdf_left(y),
            Kind::Empirical(m) => m.cdf_left(y),
            Kind::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| w * d.cdf_left(y))
                .sum::<f64>()
                .min(1.0),
            Kind::Uniform { .. } | Kind::Gaussian { .. } => self.cdf(y),
        }
    }

    /// Mass of the single point `{y}`.
    pub fn mass_at(&self, y: f64) -> f64 {
        (self.cdf(y) - self.cdf_left(y)).max(0.0)
    }

    /// Lower quantile `inf{y : F(y) >= t}` (`-inf` for `t <= 0`, `+inf` when
    /// the set is empty).
    pub fn quantile(&self, t: f64) -> ExtReal {
        if t.is_nan() {
            return ExtReal::PosInf;
        }
        match &self.kind {
            Kind::PointMass(x) => {
                if t <= 0.0 {
                    ExtReal::NegInf
                } else if t <= 1.0 {
                    ExtReal::Finite(*x)
                } else {
                    ExtReal::PosInf
                }
            }
            Kind::Uniform { lo, hi } => {
                if t <= 0.0 {
                    ExtReal::NegInf
                } else if t <= 1.0 {
                    ExtReal::Finite(lo + t * (hi - lo))
                } else {
                    ExtReal::PosInf
                }
            }
            Kind::Gaussian { mean, sd } => {
                if t <= 0.0 {
                    ExtReal::NegInf
                } else if t >= 1.0 {
                    ExtReal::PosInf
                } else {
                    ExtReal::Finite(mean + sd * std_normal_quantile(t))
                }
            }
            Kind::Discrete(a) => {
                if t > 1.0 {
                    ExtReal::PosInf
                } else {
                    a.quantile(t)
                }
            }
            Kind::Empirical(m) => m.quantile(t),
            Kind::Mixture(parts) => self.mixture_inverse(parts, t, false),
        }
    }

    /// Upper quantile `inf{y : F(y) > t}`, the right limit of the lower
    /// quantile at `t`.
    pub fn quantile_upper(&self, t: f64) -> ExtReal {
        if t.is_nan() {
            return ExtReal::PosInf;
        }
        match &self.kind {
            Kind::PointMass(x) => {
                if t < 0.0 {
                    ExtReal::NegInf
                } else if t < 1.0 {
                    ExtReal::Finite(*x)
                } else {
                    ExtReal::PosInf
                }
            }
            Kind::Uniform { lo, hi } => {
                if t < 0.0 {
                    ExtReal::NegInf
                } else if t < 1.0 {
                    ExtReal::Finite(lo + t * (hi - lo))
                } else {
                    ExtReal::PosInf
                }
            }
            Kind::Gaussian { .. } => self.quantile(t),
            Kind::Discrete(a) => {
                if t >= 1.0 {
                    ExtReal::PosInf
                } else {
                    a.quantile_upper(t)
                }
            }
            Kind::Empirical(m) => m.quantile_upper(t),
            Kind::Mixture(parts) => self.mixture_inverse(parts, t, true),
        }
    }

    fn mixture_inverse(&self, parts: &[(f64, Distribution)], t: f64, strict: bool) -> ExtReal {
        if (!strict && t <= 0.0) || (strict && t < 0.0) {
            return ExtReal::NegInf;
        }
        let comp = |d: &Distribution| {
            if strict {
                d.quantile_upper(t)
            } else {
                d.quantile(t)
            }
        };
        let qs: Vec<ExtReal> = parts
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| comp(&p.1))
            .collect();
        let hi = qs
            .iter()
            .copied()
            .fold(ExtReal::NegInf, |a, b| if b > a { b } else { a });
        let lo = qs
            .iter()
            .copied()
            .fold(ExtReal::PosInf, |a, b| if b < a { b } else { a });
        // an infinite component quantile means that component never reaches
        // level t, so neither does the mixture
        let (ExtReal::Finite(lo), ExtReal::Finite(hi)) = (lo, hi) else {
            return ExtReal::PosInf;
        };
        let hit = |y: f64| {
            if strict {
                self.cdf(y) > t
            } else {
                self.cdf(y) >= t
            }
        };
        if hit(lo) {
            return ExtReal::Finite(lo);
        }
        let (a, b) = bisect_boundary(|y| !hit(y), lo, hi, 1e-12 * (1.0 + hi.abs()));
        // snap to an atom inside the final bracket, if any
        for atom in self.atoms() {
            if atom.0 > a && atom.0 <= b {
                return ExtReal::Finite(atom.0);
            }
        }
        ExtReal::Finite(b)
    }

    /// Atoms `(location, mass)` in increasing order of location.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::PointMass(x) => vec![(*x, 1.0)],
            Kind::Uniform { .. } | Kind::Gaussian { .. } => Vec::new(),
            Kind::Discrete(a) => a
                .locs
                .iter()
                .copied()
                .zip(a.weights.iter().copied())
                .collect(),
            Kind::Empirical(m) => m.atoms(),
            Kind::Mixture(parts) => {
                let mut all: Vec<(f64, f64)> = parts
                    .iter()
                    .flat_map(|(w, d)| d.atoms().into_iter().map(move |(x, m)| (x, w * m)))
                    .filter(|a| a.1 > 0.0)
                    .collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (x, m) in all {
                    match merged.last_mut() {
                        Some(last) if last.0 == x => last.1 += m,
                        _ => merged.push((x, m)),
                    }
                }
                merged
            }
        }
    }

    /// Points where the CDF jumps or has a kink (atoms and the endpoints of
    /// uniform pieces), sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms().into_iter().map(|a| a.0).collect();
        self.collect_kinks(&mut pts);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Kinks plus a ladder of points across each Gaussian bump, so adaptive
    /// quadrature over a wide span cannot step over the mass.
    fn collect_quadrature_cuts(&self, out: &mut Vec<f64>) {
        match &self.kind {
            Kind::Uniform { lo, hi } => out.extend([*lo, *hi]),
            Kind::Gaussian { mean, sd } => out.extend(
                [
                    -12.0, -8.0, -6.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0,
                    12.0,
                ]
                .map(|z| mean + z * sd),
            ),
            Kind::Mixture(parts) => parts
                .iter()
                .for_each(|(_, d)| d.collect_quadrature_cuts(out)),
            _ => {}
        }
    }

    fn collect_kinks(&self, out: &mut Vec<f64>) {
        match &self.kind {
            Kind::Uniform { lo, hi } => out.extend([*lo, *hi]),
            Kind::Mixture(parts) => parts.iter().for_each(|(_, d)| d.collect_kinks(out)),
            _ => {}
        }
    }

    /// Interval carrying the continuous part of the law (Gaussians are cut
    /// where their tails underflow), or `None` for purely atomic laws.
    pub fn continuous_span(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Uniform { lo, hi } => Some((*lo, *hi)),
            Kind::Gaussian { mean, sd } => Some((mean - GAUSS_SPAN * sd, mean + GAUSS_SPAN * sd)),
            Kind::Mixture(parts) => parts
                .iter()
                .filter(|p| p.0 > 0.0)
                .filter_map(|p| p.1.continuous_span())
                .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1))),
            _ => None,
        }
    }

    /// Evaluation points for searching suprema over the continuous part:
    /// `per_part` quantile-spaced points of every continuous component plus
    /// the ends of its span. Empty for atomic laws.
    pub fn probe_points(&self, per_part: usize) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_probes(per_part, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_probes(&self, per_part: usize, out: &mut Vec<f64>) {
        match &self.kind {
            Kind::Uniform { lo, hi } => {
                out.extend((0..=per_part).map(|k| lo + (hi - lo) * k as f64 / per_part as f64));
            }
            Kind::Gaussian { mean, sd } => {
                out.extend(
                    (1..=per_part)
                        .map(|k| mean + sd * std_normal_quantile(k as f64 / (per_part + 1) as f64)),
                );
                for z in [6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 28.0, GAUSS_SPAN] {
                    out.extend([mean - z * sd, mean + z * sd]);
                }
            }
            Kind::Mixture(parts) => parts
                .iter()
                .for_each(|(_, d)| d.collect_probes(per_part, out)),
            _ => {}
        }
    }

    /// Smallest and largest point that matters for the law: atoms, kinks and
    /// the continuous span.
    pub fn support_hull(&self) -> (f64, f64) {
        let pts = self.breakpoints();
        let mut lo = pts.first().copied().unwrap_or(f64::INFINITY);
        let mut hi = pts.last().copied().unwrap_or(f64::NEG_INFINITY);
        if let Some((a, b)) = self.continuous_span() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// Density of the continuous part (zero for atomic laws).
    pub(crate) fn density(&self, y: f64) -> f64 {
        match &self.kind {
            Kind::Uniform { lo, hi } => {
                if y >= *lo && y <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Kind::Gaussian { mean, sd } => {
                let z = (y - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Kind::Mixture(parts) => parts.iter().map(|(w, d)| w * d.density(y)).sum(),
            _ => 0.0,
        }
    }

    /// `∫ g dμ`: exact on atoms, adaptive quadrature on the continuous part.
    /// `cuts` lists points where `g` may jump or kink.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, cuts: &[f64]) -> f64 {
        let atomic: f64 = self.atoms().iter().map(|&(x, m)| m * g(x)).sum();
        let cont = match self.continuous_span() {
            Some((a, b)) => {
                let mut all_cuts = cuts.to_vec();
                self.collect_quadrature_cuts(&mut all_cuts);
                integrate_split(|y| g(y) * self.density(y), a, b, &all_cuts, QUAD_TOL)
            }
            None => 0.0,
        };
        atomic + cont
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::PointMass(x) => *x,
            Kind::Uniform { lo, hi } => 0.5 * (lo + hi),
            Kind::Gaussian { mean, .. } => *mean,
            Kind::Mixture(parts) => parts.iter().map(|(w, d)| w * d.mean()).sum(),
            _ => self.atoms().iter().map(|&(x, m)| x * m).sum(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            Kind::PointMass(x) => x * x,
            Kind::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            Kind::Gaussian { mean, sd } => mean * mean + sd * sd,
            Kind::Mixture(parts) => parts.iter().map(|(w, d)| w * d.second_moment()).sum(),
            _ => self.atoms().iter().map(|&(x, m)| x * x * m).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    /// Survival function of `|X|`: `P[|X| > y]`.
    pub fn abs_survival(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        ((1.0 - self.cdf(y)) + self.cdf_left(-y)).clamp(0.0, 1.0)
    }

    /// Right-continuous inverse of the survival function of `|X|`,
    /// `sup{y >= 0 : P[|X| > y] > t}` (zero when the set is empty).
    pub fn abs_survival_inverse(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Gaussian { mean, sd } if *mean == 0.0 => {
                if t <= 0.0 {
                    f64::INFINITY
                } else {
                    -sd * std_normal_quantile(0.5 * t)
                }
            }
            _ if self.is_discrete() => {
                // fold atoms onto |x| and scan from the top
                let mut folded: Vec<(f64, f64)> =
                    self.atoms().iter().map(|&(x, m)| (x.abs(), m)).collect();
                folded.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut above = 0.0;
                for (y, m) in folded {
                    // P[|X| > y'] for y' just below y is above + m
                    if above + m > t {
                        return y;
                    }
                    above += m;
                }
                0.0
            }
            _ => {
                if t <= 0.0 {
                    let (lo, hi) = self.support_hull();
                    return lo.abs().max(hi.abs());
                }
                let (lo, hi) = self.support_hull();
                let upper = lo.abs().max(hi.abs());
                right_inverse(|y| self.abs_survival(y), t, upper)
            }
        }
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> Distribution {
        let kind = match &self.kind {
            Kind::PointMass(x) => Kind::PointMass(-x),
            Kind::Uniform { lo, hi } => Kind::Uniform { lo: -hi, hi: -lo },
            Kind::Gaussian { mean, sd } => Kind::Gaussian {
                mean: -mean,
                sd: *sd,
            },
            Kind::Discrete(a) => Kind::Discrete(
                Atoms::new(
                    a.locs
                        .iter()
                        .map(|x| -x)
                        .zip(a.weights.iter().copied())
                        .collect(),
                )
                .expect("reflection keeps weights valid"),
            ),
            Kind::Empirical(m) => Kind::Empirical(
                EmpiricalMeasure::new(m.observations().iter().map(|x| -x).collect())
                    .expect("reflection keeps sample valid"),
            ),
            Kind::Mixture(parts) => {
                Kind::Mixture(parts.iter().map(|(w, d)| (*w, d.reflect())).collect())
            }
        };
        Distribution { kind }
    }

    /// Draws one observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::PointMass(x) => *x,
            Kind::Uniform { lo, hi } => {
                let u: f64 = rng.sample(StandardUniform);
                lo + u * (hi - lo)
            }
            Kind::Gaussian { mean, sd } => Normal::new(*mean, *sd).expect("validated").sample(rng),
            Kind::Discrete(a) => {
                let u: f64 = rng.sample(StandardUniform);
                let k = a.cum.partition_point(|&c| c <= u).min(a.locs.len() - 1);
                a.locs[k]
            }
            Kind::Empirical(m) => m.observations()[rng.random_range(0..m.len())],
            Kind::Mixture(parts) => {
                let u: f64 = rng.sample(StandardUniform);
                let mut acc = 0.0;
                for (w, d) in parts {
                    acc += w;
                    if u < acc {
                        return d.sample(rng);
                    }
                }
                parts.last().expect("nonempty").1.sample(rng)
            }
        }
    }

    /// Short human-readable descriptor, e.g. `gaussian(0,1)`.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::PointMass(x) => format!("point-mass({x})"),
            Kind::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            Kind::Gaussian { mean, sd } => format!("gaussian({mean},{sd})"),
            Kind::Discrete(a) => format!("finite-discrete({} atoms)", a.locs.len()),
            Kind::Empirical(m) => format!("empirical(n={})", m.len()),
            Kind::Mixture(parts) => format!("mixture({} components)", parts.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zoo() -> Vec<Distribution> {
        vec![
            Distribution::point_mass(0.5).unwrap(),
            Distribution::uniform(-1.0, 2.0).unwrap(),
            Distribution::gaussian(0.3, 1.7).unwrap(),
            Distribution::finite_discrete(vec![(1.0, 0.2), (-2.0, 0.5), (3.0, 0.3)]).unwrap(),
            Distribution::empirical(vec![0.1, -0.4, 2.2, 0.1, 5.0]).unwrap(),
            Distribution::mixture(vec![
                (0.4, Distribution::gaussian(0.0, 1.0).unwrap()),
                (0.6, Distribution::point_mass(1.0).unwrap()),
            ])
            .unwrap(),
        ]
    }

    fn grid() -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut g: Vec<f64> = (0..400).map(|_| rng.random_range(-8.0..8.0)).collect();
        g.extend([-2.0, 0.1, 0.5, 1.0, 3.0, 5.0, -1.0, 2.0]);
        g
    }

    #[test]
    fn cdfs_are_monotone_right_continuous_with_limits() {
        for d in zoo() {
            let mut g = grid();
            g.sort_by(f64::total_cmp);
            for w in g.windows(2) {
                assert!(d.cdf(w[0]) <= d.cdf(w[1]), "{}", d.describe());
            }
            for &y in &g {
                assert!(d.cdf_left(y) <= d.cdf(y));
                assert!(
                    (d.cdf(y + 1e-12) - d.cdf(y)).abs() < 1e-9,
                    "{}",
                    d.describe()
                );
            }
            assert!(d.cdf(-1e6) < 1e-12 && d.cdf(1e6) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn quantile_galois_inequalities() {
        for d in zoo() {
            for &y in &grid() {
                if let ExtReal::Finite(q) = d.quantile(d.cdf(y)) {
                    assert!(q <= y + 1e-9, "{} y={y} q={q}", d.describe());
                }
            }
            for k in 1..200 {
                let s = k as f64 / 200.0;
                let q = d.quantile(s).finite().unwrap();
                assert!(d.cdf(q) >= s - 1e-12, "{} s={s}", d.describe());
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.quantile(0.3), ExtReal::Finite(0.3));
        let d = Distribution::uniform_on(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.quantile(0.5), ExtReal::Finite(2.0));
        assert_eq!(d.quantile(1.0 / 3.0), ExtReal::Finite(1.0));
        assert_eq!(d.quantile_upper(1.0 / 3.0), ExtReal::Finite(2.0));
        assert_eq!(d.quantile(1.5), ExtReal::PosInf);
        let g = Distribution::gaussian(0.0, 1.0).unwrap();
        assert!((g.quantile(0.975).finite().unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(g.quantile(1.0), ExtReal::PosInf);
    }

    #[test]
    fn empirical_matches_uniform_discrete() {
        let sample = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let e = Distribution::empirical(sample.clone()).unwrap();
        let d = Distribution::uniform_on(&sample).unwrap();
        for &y in &grid() {
            assert!((e.cdf(y) - d.cdf(y)).abs() < 1e-15);
        }
        for k in 1..=40 {
            let t = k as f64 / 40.0;
            assert_eq!(e.quantile(t), d.quantile(t));
        }
    }

    #[test]
    fn mixture_quantile_lands_on_atom() {
        let m = &zoo()[5];
        assert_eq!(m.quantile(0.5), ExtReal::Finite(1.0));
        assert_eq!(m.quantile_upper(0.5), ExtReal::Finite(1.0));
        let q = m.quantile(0.05).finite().unwrap();
        assert!((m.cdf(q) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn expectations_and_moments() {
        for d in zoo() {
            let m = d.expect(|y| y, &[]);
            let m2 = d.expect(|y| y * y, &[]);
            assert!((m - d.mean()).abs() < 1e-8, "{}", d.describe());
            assert!((m2 - d.second_moment()).abs() < 1e-8, "{}", d.describe());
        }
    }

    #[test]
    fn abs_survival_inverse_forms() {
        let g = Distribution::gaussian(0.0, 2.0).unwrap();
        let y = g.abs_survival_inverse(0.1);
        assert!((g.abs_survival(y) - 0.1).abs() < 1e-12);
        let p = Distribution::point_mass(-2.0).unwrap();
        assert_eq!(p.abs_survival_inverse(0.5), 2.0);
        assert_eq!(p.abs_survival_inverse(1.0), 0.0);
        let u = Distribution::uniform(-1.0, 1.0).unwrap();
        assert!((u.abs_survival_inverse(0.25) - 0.75).abs() < 1e-10);
    }

    #[test]
    fn serde_round_trip() {
        let json = r#"{"kind":"gaussian","mean":0,"sd":1}"#;
        let d: Distribution = serde_json::from_str(json).unwrap();
        assert_eq!(d, Distribution::gaussian(0.0, 1.0).unwrap());
        for d in zoo() {
            let s = serde_json::to_string(&d).unwrap();
            let back: Distribution = serde_json::from_str(&s).unwrap();
            assert_eq!(back.describe(), d.describe());
        }
        assert!(
            serde_json::from_str::<Distribution>(r#"{"kind":"gaussian","mean":0,"sd":-1}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<Distribution>(
            r#"{"kind":"finite-discrete","atoms":[[0,0.5]]}"#
        )
        .is_err());
    }

    #[test]
    fn reflection_mirrors_cdf() {
        for d in zoo() {
            let r = d.reflect();
            for &y in &grid() {
                assert!(
                    (r.cdf(y) - (1.0 - d.cdf_left(-y))).abs() < 1e-12,
                    "{}",
                    d.describe()
                );
            }
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        for d in zoo() {
            let a: Vec<f64> = {
                let mut rng = ChaCha8Rng::seed_from_u64(5);
                (0..20).map(|_| d.sample(&mut rng)).collect()
            };
            let b: Vec<f64> = {
                let mut rng = ChaCha8Rng::seed_from_u64(5);
                (0..20).map(|_| d.sample(&mut rng)).collect()
            };
            assert_eq!(a, b);
        }
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::metrics::{kolmogorov_phi, levy, psi_moment, DenseFamily, GaugeFunction, GaugeRole};
use crate::processes::{LinearProcessSpec, PathSampler};

/// Pairs with `|φ + θ|` below this are dropped from an ARMA class grid.
pub const DIAGONAL_MARGIN: f64 = 0.01;
/// Default size of a sampled reference marginal.
pub const REFERENCE_SIZE: usize = 1_000_000;
/// Confidence level of the reported DKW radius.
const DKW_LEVEL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ugc,
    Robustness,
    RioCheck,
    LlnCheck,
    BracketCheck,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Ugc => "ugc",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::RioCheck => "rio-check",
            ExperimentKind::LlnCheck => "lln-check",
            ExperimentKind::BracketCheck => "bracket-check",
        })
    }
}

/// A distance between laws on the real line, named as in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricSpec {
    KolmogorovPhi(GaugeFunction),
    Levy,
    PsiVague(GaugeFunction),
    PsiLevy(GaugeFunction),
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "levy" {
            return Ok(MetricSpec::Levy);
        }
        let (name, gauge) = s.split_once(':').ok_or_else(|| {
            Error::Config(format!(
                "unknown metric {s:?}; expected kolmogorov-phi:g, levy, psi-vague:g or psi-levy:g"
            ))
        })?;
        let metric = match name {
            "kolmogorov-phi" => {
                MetricSpec::KolmogorovPhi(GaugeFunction::parse_as(gauge, GaugeRole::UShaped)?)
            }
            "psi-vague" => MetricSpec::PsiVague(GaugeFunction::parse_as(gauge, GaugeRole::Psi)?),
            "psi-levy" => MetricSpec::PsiLevy(GaugeFunction::parse_as(gauge, GaugeRole::Psi)?),
            _ => return Err(Error::Config(format!("unknown metric {s:?}"))),
        };
        Ok(metric)
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::KolmogorovPhi(g) => write!(f, "kolmogorov-phi:{g}"),
            MetricSpec::Levy => write!(f, "levy"),
            MetricSpec::PsiVague(g) => write!(f, "psi-vague:{g}"),
            MetricSpec::PsiLevy(g) => write!(f, "psi-levy:{g}"),
        }
    }
}

impl TryFrom<String> for MetricSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MetricSpec> for String {
    fn from(m: MetricSpec) -> Self {
        m.to_string()
    }
}

impl MetricSpec {
    /// The metric descriptor, extended by the dense test-function family
    /// when the metric depends on it.
    pub fn family_descriptor(&self) -> String {
        match self {
            MetricSpec::PsiVague(_) => format!("{self};{}", DenseFamily::default().descriptor()),
            _ => self.to_string(),
        }
    }

    pub fn distance(&self, mu: &Distribution, nu: &Distribution) -> Result<f64> {
        self.prepare(nu)?.distance(mu)
    }

    /// Caches everything that only depends on the reference law.
    pub fn prepare(&self, reference: &Distribution) -> Result<PreparedMetric> {
        let cache = match self {
            MetricSpec::KolmogorovPhi(_) | MetricSpec::Levy => Cache::None,
            MetricSpec::PsiLevy(psi) => Cache::Moment(psi_moment(reference, psi)?),
            MetricSpec::PsiVague(psi) => Cache::Vague(
                psi_moment(reference, psi)?,
                DenseFamily::default().integrals(reference),
            ),
        };
        Ok(PreparedMetric {
            metric: *self,
            reference: reference.clone(),
            cache,
        })
    }
}

#[derive(Debug, Clone)]
enum Cache {
    None,
    Moment(f64),
    Vague(f64, Vec<f64>),
}

/// A metric with one argument fixed.
#[derive(Debug, Clone)]
pub struct PreparedMetric {
    metric: MetricSpec,
    reference: Distribution,
    cache: Cache,
}

impl PreparedMetric {
    pub fn reference(&self) -> &Distribution {
        &self.reference
    }

    /// `d(mu, reference)`.
    pub fn distance(&self, mu: &Distribution) -> Result<f64> {
        match (&self.metric, &self.cache) {
            (MetricSpec::KolmogorovPhi(phi), _) => kolmogorov_phi(mu, &self.reference, phi),
            (MetricSpec::Levy, _) => Ok(levy(mu, &self.reference)),
            (MetricSpec::PsiLevy(psi), Cache::Moment(m)) => {
                Ok(levy(mu, &self.reference) + (psi_moment(mu, psi)? - m).abs())
            }
            (MetricSpec::PsiVague(psi), Cache::Vague(m, integrals)) => {
                let family = DenseFamily::default();
                let vague = family.distance_from_integrals(&family.integrals(mu), integrals);
                Ok(vague + (psi_moment(mu, psi)? - m).abs())
            }
            _ => unreachable!("cache built by prepare"),
        }
    }
}

/// `arma-class(c, grid-size)`: ARMA(1,1) laws with `|φ|, |θ| <= c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ArmaClass {
    pub c: f64,
    pub grid_size: usize,
    /// Noise law shared by all members; standard Gaussian by default.
    #[serde(default = "standard_gaussian")]
    pub noise: Distribution,
}

fn standard_gaussian() -> Distribution {
    Distribution::gaussian(0.0, 1.0).expect("valid parameters")
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut x, mut f) = (0.0, 1.0 / base as f64);
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f /= base as f64;
    }
    x
}

impl ArmaClass {
    /// The first `grid_size` points of the base-(2, 3) Halton sequence mapped
    /// onto `[-c, c]²`, skipping pairs with `|φ + θ| < 0.01`.
    pub fn grid(&self) -> Result<Vec<(f64, f64)>> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::Config(format!(
                "arma-class needs c in (0, 1), got {}",
                self.c
            )));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("arma-class needs grid-size >= 1".into()));
        }
        let mut out = Vec::with_capacity(self.grid_size);
        let mut i = 1u64;
        while out.len() < self.grid_size {
            let phi = self.c * (2.0 * radical_inverse(i, 2) - 1.0);
            let theta = self.c * (2.0 * radical_inverse(i, 3) - 1.0);
            if (phi + theta).abs() >= DIAGONAL_MARGIN {
                out.push((phi, theta));
            }
            i += 1;
        }
        Ok(out)
    }

    pub fn members(&self) -> Result<Vec<LinearProcessSpec>> {
        Ok(self
            .grid()?
            .into_iter()
            .map(|(p, t)| LinearProcessSpec::arma(&[p], &[t], self.noise.clone()))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassDescriptor {
    ArmaClass(ArmaClass),
}

/// Either an explicit list of processes or a parametric class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcessClass {
    Members(Vec<LinearProcessSpec>),
    Parametric(ClassDescriptor),
}

impl ProcessClass {
    pub fn members(&self) -> Result<Vec<LinearProcessSpec>> {
        match self {
            ProcessClass::Members(m) => Ok(m.clone()),
            ProcessClass::Parametric(ClassDescriptor::ArmaClass(a)) => a.members(),
        }
    }
}

/// Declarative description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_kind: ExperimentKind,
    pub process_class: ProcessClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
    pub n_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Thresholds `x` of the maximal-inequality check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    /// Gauge `ψ` of the law-of-large-numbers check (identity when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<GaugeFunction>,
    /// Truncation level `K` of the law-of-large-numbers bound; the best of a
    /// fixed geometric grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_level: Option<f64>,
    /// Size of sampled reference marginals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_size: Option<usize>,
}

fn positive(v: Option<f64>, name: &str, kind: ExperimentKind) -> Result<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
        None => Err(Error::Config(format!("{kind} needs {name}"))),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment_kind;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::Config(
                "n-grid must be nonempty with positive sizes".into(),
            ));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n-grid must be strictly increasing".into()));
        }
        let members = self.process_class.members()?;
        if members.is_empty() {
            return Err(Error::Config("process-class is empty".into()));
        }
        if self.reference_size == Some(0) {
            return Err(Error::Config("reference-size must be positive".into()));
        }
        match kind {
            ExperimentKind::Ugc => {
                if self.metric.is_none() {
                    return Err(Error::Config("ugc needs a metric".into()));
                }
                positive(self.delta, "delta", kind)?;
            }
            ExperimentKind::Robustness => {
                if self.functional.is_none() {
                    return Err(Error::Config("robustness needs a functional".into()));
                }
                if members.len() != 2 {
                    return Err(Error::Config(format!(
                        "robustness compares exactly two laws P and Q, got {} class members",
                        members.len()
                    )));
                }
            }
            ExperimentKind::RioCheck => {
                if let Some(xs) = &self.x_grid {
                    if xs.is_empty() || xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                        return Err(Error::Config("x-grid must hold positive thresholds".into()));
                    }
                }
            }
            ExperimentKind::LlnCheck => {
                positive(self.delta, "delta", kind)?;
                if self.truncation_level.is_some() {
                    positive(self.truncation_level, "truncation-level", kind)?;
                }
                if let Some(psi) = &self.psi {
                    psi.require(GaugeRole::Psi)
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
            }
            ExperimentKind::BracketCheck => {
                positive(self.eps, "eps", kind)?;
                if let Some(m) = &self.metric {
                    if !matches!(m, MetricSpec::KolmogorovPhi(_)) {
                        return Err(Error::Config(format!(
                            "bracket-check needs a kolmogorov-phi metric, got {m}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn members(&self) -> Result<Vec<LinearProcessSpec>> {
        self.process_class.members()
    }

    pub fn family_descriptor(&self) -> String {
        match &self.metric {
            Some(m) => m.family_descriptor(),
            None => "none".into(),
        }
    }
}

/// The marginal law a run compares against, with a note on how exactly it
/// represents the law of `X_1`.
#[derive(Debug, Clone)]
pub struct ReferenceMarginal {
    pub law: Distribution,
    pub exact: bool,
    pub note: String,
}

/// Radius `ε` with `P[sup |F_N - F| > ε] <= level` by the
/// Dvoretzky-Kiefer-Wolfowitz inequality.
pub fn dkw_radius(size: usize, level: f64) -> f64 {
    ((2.0 / level).ln() / (2.0 * size as f64)).sqrt()
}

/// Marginal of the simulated (truncated) process: the noise law itself for
/// i.i.d. processes, the exact Gaussian law for Gaussian noise, otherwise
/// the empirical law of `size` independent draws of `X_1`.
pub fn reference_marginal(
    spec: &LinearProcessSpec,
    sampler: &PathSampler,
    size: usize,
    seed: u64,
) -> Result<ReferenceMarginal> {
    if sampler.is_iid() {
        return Ok(ReferenceMarginal {
            law: spec.noise.clone(),
            exact: true,
            note: "exact: noise law".into(),
        });
    }
    if let Some(law) = spec.gaussian_marginal(sampler.s_max())? {
        let note = format!(
            "exact: Gaussian law of the process truncated at s_max = {}",
            sampler.s_max()
        );
        return Ok(ReferenceMarginal {
            law,
            exact: true,
            note,
        });
    }
    let law = Distribution::empirical(sampler.marginal_draws(size, seed))?;
    let note = format!(
        "sampled: {size} independent draws (seed {seed}); DKW radius {:.3e} at level {DKW_LEVEL}",
        dkw_radius(size, DKW_LEVEL)
    );
    Ok(ReferenceMarginal {
        law,
        exact: false,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_grid_is_admissible_and_deterministic() {
        let class = ArmaClass {
            c: 0.5,
            grid_size: 20,
            noise: standard_gaussian(),
        };
        let g = class.grid().unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g, class.grid().unwrap());
        for &(p, t) in &g {
            assert!(p.abs() <= 0.5 && t.abs() <= 0.5 && (p + t).abs() >= DIAGONAL_MARGIN);
        }
        let mut sorted = g.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
        assert!(ArmaClass {
            c: 1.0,
            ..class.clone()
        }
        .grid()
        .is_err());
        assert!(ArmaClass {
            grid_size: 0,
            ..class
        }
        .grid()
        .is_err());
        assert_eq!(radical_inverse(6, 2), 0.375);
    }

    #[test]
    fn metric_names_round_trip() {
        for s in [
            "kolmogorov-phi:one",
            "kolmogorov-phi:power:2",
            "levy",
            "psi-vague:square",
            "psi-levy:abs",
        ] {
            assert_eq!(s.parse::<MetricSpec>().unwrap().to_string(), s);
        }
        assert!("kolmogorov-phi:square".parse::<MetricSpec>().is_err());
        assert!("wasserstein".parse::<MetricSpec>().is_err());
    }

    fn base() -> serde_json::Value {
        serde_json::json!({
            "experiment-kind": "ugc",
            "process-class": {"kind": "arma-class", "c": 0.5, "grid-size": 3},
            "metric": "levy",
            "n-grid": [16, 64],
            "delta": 0.1,
            "replicates": 5,
            "master-seed": 7
        })
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(cfg.members().unwrap().len(), 3);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let bad = |key: &str, v: serde_json::Value| {
            let mut j = base();
            j[key] = v;
            ExperimentConfig::from_json(&j.to_string()).unwrap_err()
        };
        bad("replicates", 0.into());
        bad("n-grid", serde_json::json!([64, 16]));
        bad("n-grid", serde_json::json!([16, 16]));
        bad("process-class", serde_json::json!([]));
        bad(
            "process-class",
            serde_json::json!({"kind": "arma-class", "c": 1.5, "grid-size": 3}),
        );
        bad("metric", "kolmogorov".into());
        bad("delta", serde_json::json!(-1.0));
        bad("bogus", 1.into());
        let explicit = serde_json::json!([
            {"kind": "arma", "phi": [0.5], "noise": {"kind": "gaussian", "mean": 0.0, "sd": 1.0}},
            {"kind": "arma", "noise": {"kind": "uniform", "lo": -1.0, "hi": 1.0}}
        ]);
        let mut j = base();
        j["process-class"] = explicit;
        assert_eq!(
            ExperimentConfig::from_json(&j.to_string())
                .unwrap()
                .members()
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn reference_marginals() {
        let g = LinearProcessSpec::arma(&[0.5], &[], standard_gaussian());
        let s = PathSampler::new(&g, None).unwrap();
        let r = reference_marginal(&g, &s, 10, 1).unwrap();
        assert!(r.exact);
        assert!((r.law.variance() - 4.0 / 3.0).abs() < 1e-9);
        let u = LinearProcessSpec::arma(&[0.5], &[], Distribution::uniform(-1.0, 1.0).unwrap());
        let s = PathSampler::new(&u, None).unwrap();
        let r = reference_marginal(&u, &s, 20_000, 1).unwrap();
        assert!(!r.exact && r.law.is_discrete());
        assert!((r.law.variance() - 4.0 / 9.0).abs() < 0.02);
        let iid = LinearProcessSpec::iid(Distribution::uniform(0.0, 1.0).unwrap());
        let r = reference_marginal(&iid, &PathSampler::new(&iid, None).unwrap(), 10, 1).unwrap();
        assert_eq!(r.law, iid.noise);
        assert!((dkw_radius(1_000_000, 1e-3) - 0.001_949_9).abs() < 1e-6);
    }
}

use rayon::prelude::*;

use super::config::{
    reference_marginal, ExperimentConfig, ExperimentKind, MetricSpec, ReferenceMarginal,
    REFERENCE_SIZE,
};
use super::table::{ExperimentOutcome, ResultTable};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::functionals::{plugin_slice, Functional, PairedSample};
use crate::metrics::{kolmogorov, levy, GaugeFunction};
use crate::numeric::derive_seed;
use crate::processes::{LinearProcessSpec, MixingProfile, PathSampler};
use crate::prohorov::{prohorov_distance, FiniteLaw};
use crate::theory::{build_brackets, lln_tail_bound, lln_tail_bound_gauge, rio_bound, LlnBound};

/// Largest support of an estimator law handed to the Prohorov computation.
pub const MAX_ESTIMATOR_ATOMS: usize = 2000;
/// Number of contiguous replicate batches behind a distance's standard error.
pub const BATCHES: usize = 10;
/// A frequency exceeding its bound by more than this many standard errors
/// counts as a violation.
pub const VIOLATION_SE: f64 = 3.0;
/// Member index of the independent second run under `P` in robustness
/// experiments.
const NOISE_FLOOR_STREAM: u64 = 2;
const REFERENCE_STREAM: u64 = u64::MAX;

pub fn member_id(i: usize) -> String {
    format!("member-{i:02}")
}

pub fn replicate_seed(master: u64, member: usize, n: usize, rep: usize) -> u64 {
    derive_seed(master, &[member as u64, n as u64, rep as u64])
}

pub fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Sample mean and its standard error (`NaN` for a single value).
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn frequency(count: usize, reps: usize) -> (f64, f64) {
    let p = count as f64 / reps as f64;
    (p, binomial_se(p, reps))
}

/// Per-member machinery shared by the runners.
struct Member {
    spec: LinearProcessSpec,
    sampler: PathSampler,
    reference: ReferenceMarginal,
}

impl Member {
    fn new(cfg: &ExperimentConfig, index: usize, spec: &LinearProcessSpec) -> Result<Self> {
        let sampler = PathSampler::new(spec, None)?;
        let size = cfg.reference_size.unwrap_or(REFERENCE_SIZE);
        let seed = derive_seed(cfg.master_seed, &[index as u64, REFERENCE_STREAM]);
        let reference = reference_marginal(spec, &sampler, size, seed)?;
        Ok(Self {
            spec: spec.clone(),
            sampler,
            reference,
        })
    }

    /// `E X_1` of the simulated process.
    fn mean(&self) -> Result<f64> {
        let a = self.spec.coefficients.coefficients(self.sampler.s_max())?;
        Ok(self.spec.noise.mean() * a.iter().sum::<f64>())
    }

    fn replicates<T: Send, F>(
        &self,
        cfg: &ExperimentConfig,
        index: usize,
        n: usize,
        f: F,
    ) -> Result<Vec<T>>
    where
        F: Fn(Vec<f64>, usize) -> Result<T> + Sync,
    {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                f(
                    self.sampler
                        .path(n, replicate_seed(cfg.master_seed, index, n, r)),
                    r,
                )
            })
            .collect()
    }
}

struct Collector {
    outcome: ExperimentOutcome,
}

impl Collector {
    fn new(cfg: &ExperimentConfig, members: &[LinearProcessSpec]) -> Self {
        let table = ResultTable::new(
            cfg.experiment_kind,
            cfg.master_seed,
            cfg.family_descriptor(),
        );
        let members = members
            .iter()
            .enumerate()
            .map(|(i, m)| (member_id(i), m.describe()))
            .collect();
        Self {
            outcome: ExperimentOutcome {
                table,
                members,
                reference_notes: Vec::new(),
                failures: Vec::new(),
                violations: Vec::new(),
            },
        }
    }

    fn push(&mut self, member: &str, n: usize, statistic: impl Into<String>, value: f64, se: f64) {
        self.outcome.table.push(member, n, statistic, value, se);
    }

    fn fail(&mut self, member: &str, e: &Error) {
        self.push(member, 0, "failure", f64::NAN, f64::NAN);
        self.outcome.failures.push(format!("{member}: {e}"));
    }

    fn note(&mut self, member: &str, r: &ReferenceMarginal) {
        self.outcome
            .reference_notes
            .push(format!("{member}: {}", r.note));
    }

    fn violation(&mut self, msg: String) {
        self.outcome.violations.push(msg);
    }
}

/// Tracks the per-`n` maximum over members of a statistic.
struct SupTracker {
    best: Vec<Option<(f64, f64)>>,
}

impl SupTracker {
    fn new(len: usize) -> Self {
        Self {
            best: vec![None; len],
        }
    }

    fn offer(&mut self, k: usize, value: f64, se: f64) {
        match self.best[k] {
            Some((v, _)) if v >= value => {}
            _ => self.best[k] = Some((value, se)),
        }
    }

    fn emit(&self, out: &mut Collector, n_grid: &[usize], statistic: &str) {
        for (k, b) in self.best.iter().enumerate() {
            if let Some((v, se)) = b {
                out.push("sup", n_grid[k], statistic, *v, *se);
            }
        }
    }
}

/// `P[d(m̂_n, P_1) >= δ]` per class member and sample size, and its supremum
/// over the class.
pub fn run_ugc(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let metric = cfg
        .metric
        .ok_or_else(|| Error::Config("ugc needs a metric".into()))?;
    let delta = cfg
        .delta
        .ok_or_else(|| Error::Config("ugc needs delta".into()))?;
    let members = cfg.members()?;
    let mut out = Collector::new(cfg, &members);
    let mut sup = SupTracker::new(cfg.n_grid.len());
    for (i, spec) in members.iter().enumerate() {
        let id = member_id(i);
        let result = Member::new(cfg, i, spec).and_then(|m| {
            let prepared = metric.prepare(&m.reference.law)?;
            let rows = cfg
                .n_grid
                .iter()
                .map(|&n| {
                    let d = m.replicates(cfg, i, n, |path, _| {
                        prepared.distance(&Distribution::empirical(path)?)
                    })?;
                    Ok((
                        frequency(d.iter().filter(|&&x| x >= delta).count(), d.len()),
                        mean_and_se(&d),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((m, rows))
        });
        match result {
            Ok((m, rows)) => {
                out.note(&id, &m.reference);
                for (k, ((p, se), (mean, mean_se))) in rows.into_iter().enumerate() {
                    let n = cfg.n_grid[k];
                    out.push(&id, n, "exceedance", p, se);
                    out.push(&id, n, "mean-distance", mean, mean_se);
                    sup.offer(k, p, se);
                }
            }
            Err(e) => out.fail(&id, &e),
        }
    }
    sup.emit(&mut out, &cfg.n_grid, "exceedance");
    Ok(out.outcome)
}

/// The estimate `T̂_n` on one path; the covariance is taken over the lag-one
/// pairs `(X_t, X_{t+1})`.
fn estimate(functional: Functional, sampler: &PathSampler, n: usize, seed: u64) -> Result<f64> {
    match functional {
        Functional::Covariance => {
            let path = sampler.path(n + 1, seed);
            Ok(PairedSample::new(path[..n].to_vec(), path[1..].to_vec())?.covariance())
        }
        f => plugin_slice(f, &sampler.path(n, seed)),
    }
}

/// Sorted support and weights of the empirical law of `values`, reduced to
/// at most `cap` atoms by stratified thinning: the sorted values are cut into
/// `cap` nearly equal consecutive strata and each stratum is replaced by its
/// middle element carrying the stratum's mass.
pub fn thin(values: &[f64], cap: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let len = v.len();
    let strata = len.min(cap.max(1));
    let mut points: Vec<f64> = Vec::with_capacity(strata);
    let mut weights: Vec<f64> = Vec::with_capacity(strata);
    for j in 0..strata {
        let (a, b) = (j * len / strata, (j + 1) * len / strata);
        let x = v[(a + b - 1) / 2];
        let w = (b - a) as f64 / len as f64;
        match points.last() {
            Some(&last) if last == x => *weights.last_mut().expect("nonempty") += w,
            _ => {
                points.push(x);
                weights.push(w);
            }
        }
    }
    (points, weights)
}

fn estimator_law(values: &[f64]) -> Result<FiniteLaw> {
    let (p, w) = thin(values, MAX_ESTIMATOR_ATOMS);
    FiniteLaw::on_real_line(p, w)
}

fn estimator_distribution(values: &[f64]) -> Result<Distribution> {
    let (p, w) = thin(values, MAX_ESTIMATOR_ATOMS);
    Distribution::finite_discrete(p.into_iter().zip(w).collect())
}

/// Prohorov distance between two estimator laws, with a standard error from
/// the spread of the distances between matching replicate batches.
pub fn estimator_prohorov(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let value = prohorov_distance(&estimator_law(a)?, &estimator_law(b)?)?;
    let reps = a.len().min(b.len());
    if reps < 2 * BATCHES {
        return Ok((value, f64::NAN));
    }
    let parts = (0..BATCHES)
        .into_par_iter()
        .map(|j| {
            let (lo, hi) = (j * reps / BATCHES, (j + 1) * reps / BATCHES);
            prohorov_distance(&estimator_law(&a[lo..hi])?, &estimator_law(&b[lo..hi])?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (_, se) = mean_and_se(&parts);
    Ok((value, se))
}

/// Hampel-type comparison of the estimator laws under `P` (first class
/// member) and `Q` (second member), with a same-law noise floor from an
/// independent second run under `P`.
pub fn run_robustness(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let functional = cfg
        .functional
        .ok_or_else(|| Error::Config("robustness needs a functional".into()))?;
    let metric = cfg
        .metric
        .unwrap_or(MetricSpec::KolmogorovPhi(GaugeFunction::one()));
    let members = cfg.members()?;
    let mut out = Collector::new(cfg, &members);
    let p = Member::new(cfg, 0, &members[0])?;
    let q = Member::new(cfg, 1, &members[1])?;
    out.note("p", &p.reference);
    out.note("q", &q.reference);
    match metric.distance(&p.reference.law, &q.reference.law) {
        Ok(d) => out.push("p-vs-q", 0, format!("marginal-distance[{metric}]"), d, 0.0),
        Err(e) => out.fail("p-vs-q", &e),
    }
    let master = cfg.master_seed;
    let run = |sampler: &PathSampler, stream: u64, n: usize| -> Result<Vec<f64>> {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                estimate(
                    functional,
                    sampler,
                    n,
                    derive_seed(master, &[stream, n as u64, r as u64]),
                )
            })
            .collect()
    };
    for &n in &cfg.n_grid {
        let est_p = run(&p.sampler, 0, n)?;
        let est_q = run(&q.sampler, 1, n)?;
        let est_floor = run(&p.sampler, NOISE_FLOOR_STREAM, n)?;
        let (d, d_se) = estimator_prohorov(&est_p, &est_q)?;
        let (floor, floor_se) = estimator_prohorov(&est_p, &est_floor)?;
        let (law_p, law_q) = (
            estimator_distribution(&est_p)?,
            estimator_distribution(&est_q)?,
        );
        let (lv, ks) = (levy(&law_p, &law_q), kolmogorov(&law_p, &law_q));
        out.push("p-vs-q", n, "prohorov", d, d_se);
        out.push("p-vs-q", n, "levy", lv, f64::NAN);
        out.push("p-vs-q", n, "kolmogorov", ks, f64::NAN);
        out.push("p-vs-p", n, "prohorov", floor, floor_se);
        for (who, est) in [("p", &est_p), ("q", &est_q)] {
            let (mean, se) = mean_and_se(est);
            let sd = se * (est.len() as f64).sqrt();
            out.push(who, n, "estimator-mean", mean, se);
            out.push(
                who,
                n,
                "estimator-sd",
                sd,
                sd / (2.0 * (est.len() as f64 - 1.0)).sqrt(),
            );
        }
        if lv > ks + 1e-9 {
            out.violation(format!(
                "n = {n}: Levy distance {lv} exceeds Kolmogorov distance {ks}"
            ));
        }
    }
    Ok(out.outcome)
}

fn profile_and_member(
    cfg: &ExperimentConfig,
    i: usize,
    spec: &LinearProcessSpec,
) -> Result<(Member, MixingProfile)> {
    let m = Member::new(cfg, i, spec)?;
    let profile = spec.profile()?;
    Ok((m, profile))
}

/// Default thresholds: `x_j = j/2 · sqrt(n Var X_1)`, `j = 1..10`.
pub fn default_x_grid(variance: f64, n: usize) -> Vec<f64> {
    let scale = if variance > 0.0 {
        (n as f64 * variance).sqrt()
    } else {
        1.0
    };
    (1..=10).map(|j| 0.5 * j as f64 * scale).collect()
}

/// Maximal partial-sum deviations against Rio's inequality.
pub fn run_rio_check(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let members = cfg.members()?;
    let mut out = Collector::new(cfg, &members);
    for (i, spec) in members.iter().enumerate() {
        let id = member_id(i);
        let prepared =
            profile_and_member(cfg, i, spec).and_then(|(m, profile)| Ok((m.mean()?, m, profile)));
        let (mean, m, profile) = match prepared {
            Ok(v) => v,
            Err(e) => {
                out.fail(&id, &e);
                continue;
            }
        };
        out.note(&id, &m.reference);
        let law = &m.reference.law;
        for &n in &cfg.n_grid {
            let xs = cfg
                .x_grid
                .clone()
                .unwrap_or_else(|| default_x_grid(law.variance(), n));
            let alpha = profile.values(n);
            let bounds = match xs
                .iter()
                .map(|&x| rio_bound(law, &alpha, n, x))
                .collect::<Result<Vec<f64>>>()
            {
                Ok(b) => b,
                Err(e) => {
                    out.fail(&id, &e);
                    break;
                }
            };
            let dev = m.replicates(cfg, i, n, |path, _| {
                let (mut s, mut best) = (0.0f64, 0.0f64);
                for (k, x) in path.iter().enumerate() {
                    s += x;
                    best = best.max((s - (k + 1) as f64 * mean).abs());
                }
                Ok(best)
            })?;
            let mut violations = 0;
            for (x, bound) in xs.iter().zip(&bounds) {
                let (p, se) = frequency(dev.iter().filter(|&&d| d >= 2.0 * x).count(), dev.len());
                out.push(&id, n, format!("exceedance[x={x}]"), p, se);
                out.push(&id, n, format!("rio-bound[x={x}]"), *bound, 0.0);
                if p > bound + VIOLATION_SE * se {
                    violations += 1;
                    out.violation(format!("{id}, n = {n}, x = {x}: frequency {p} above bound {bound} + {VIOLATION_SE} SE"));
                }
            }
            out.push(&id, n, "violations", violations as f64, 0.0);
        }
    }
    Ok(out.outcome)
}

/// Truncation levels tried when the config does not fix `K`.
pub fn truncation_levels() -> Vec<f64> {
    (-8..=40).map(|j| 2f64.powf(j as f64 / 2.0)).collect()
}

fn lln_bound(
    law: &Distribution,
    psi: Option<&GaugeFunction>,
    alpha: &[f64],
    n: usize,
    delta: f64,
    k: f64,
) -> Result<LlnBound> {
    match psi {
        Some(g) => lln_tail_bound_gauge(law, g, alpha, n, delta, k),
        None => lln_tail_bound(law, alpha, n, delta, k),
    }
}

/// The law-of-large-numbers tail bound at the configured `K`, or the
/// smallest one over [`truncation_levels`].
fn best_lln_bound(
    cfg: &ExperimentConfig,
    law: &Distribution,
    alpha: &[f64],
    n: usize,
    delta: f64,
) -> Result<(f64, LlnBound)> {
    let levels = match cfg.truncation_level {
        Some(k) => vec![k],
        None => truncation_levels(),
    };
    let mut best: Option<(f64, LlnBound)> = None;
    for k in levels {
        let b = lln_bound(law, cfg.psi.as_ref(), alpha, n, delta, k)?;
        let raw = b.s1 + b.s2 + b.s3;
        if best.as_ref().is_none_or(|(_, c)| raw < c.s1 + c.s2 + c.s3) {
            best = Some((k, b));
        }
    }
    Ok(best.expect("at least one level"))
}

/// Frequencies of `|n⁻¹ Σ ψ(X_i) - E ψ(X_1)| >= δ` against the
/// law-of-large-numbers tail bound, per member and over the class.
pub fn run_lln_check(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let delta = cfg
        .delta
        .ok_or_else(|| Error::Config("lln-check needs delta".into()))?;
    let members = cfg.members()?;
    let mut out = Collector::new(cfg, &members);
    let mut sup_freq = SupTracker::new(cfg.n_grid.len());
    let mut sup_bound = SupTracker::new(cfg.n_grid.len());
    let psi = cfg.psi;
    for (i, spec) in members.iter().enumerate() {
        let id = member_id(i);
        let prepared = profile_and_member(cfg, i, spec).and_then(|(m, profile)| {
            let target = match &psi {
                Some(g) => crate::metrics::psi_moment(&m.reference.law, g)?,
                None => m.mean()?,
            };
            Ok((target, m, profile))
        });
        let (target, m, profile) = match prepared {
            Ok(v) => v,
            Err(e) => {
                out.fail(&id, &e);
                continue;
            }
        };
        out.note(&id, &m.reference);
        let mut rows = Vec::new();
        let mut failed = None;
        for (k, &n) in cfg.n_grid.iter().enumerate() {
            let alpha = profile.values(n);
            let (level, bound) = match best_lln_bound(cfg, &m.reference.law, &alpha, n, delta) {
                Ok(b) => b,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            };
            let hits = m.replicates(cfg, i, n, |path, _| {
                let s: f64 = path
                    .iter()
                    .map(|&x| psi.as_ref().map_or(x, |g| g.eval(x)))
                    .sum();
                Ok((s / n as f64 - target).abs() >= delta)
            })?;
            let (p, se) = frequency(hits.iter().filter(|&&h| h).count(), hits.len());
            rows.push((k, n, p, se, level, bound));
        }
        if let Some(e) = failed {
            out.fail(&id, &e);
            continue;
        }
        for (k, n, p, se, level, bound) in rows {
            out.push(&id, n, "frequency", p, se);
            out.push(&id, n, "bound", bound.total, 0.0);
            out.push(&id, n, "truncation-level", level, 0.0);
            sup_freq.offer(k, p, se);
            sup_bound.offer(k, bound.total, 0.0);
            if p > bound.total + VIOLATION_SE * se {
                out.violation(format!(
                    "{id}, n = {n}: frequency {p} above bound {} + {VIOLATION_SE} SE",
                    bound.total
                ));
            }
        }
    }
    sup_freq.emit(&mut out, &cfg.n_grid, "frequency");
    sup_bound.emit(&mut out, &cfg.n_grid, "bound");
    Ok(out.outcome)
}

/// Bracket construction for each member's marginal: widths, coverage of the
/// weighted indicators on a 100-point grid, and the sample-wise domination
/// on simulated paths.
pub fn run_bracket_check(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let eps = cfg
        .eps
        .ok_or_else(|| Error::Config("bracket-check needs eps".into()))?;
    let phi = match cfg.metric {
        Some(MetricSpec::KolmogorovPhi(g)) => g,
        _ => GaugeFunction::one(),
    };
    let members = cfg.members()?;
    let mut out = Collector::new(cfg, &members);
    let s_points: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    for (i, spec) in members.iter().enumerate() {
        let id = member_id(i);
        let built = Member::new(cfg, i, spec).and_then(|m| {
            let fam = build_brackets(&m.reference.law, &phi, eps)?;
            let per_n = cfg
                .n_grid
                .iter()
                .map(|&n| {
                    m.replicates(cfg, i, n, |path, r| {
                        fam.domination(
                            &path,
                            derive_seed(cfg.master_seed, &[i as u64, n as u64, r as u64, 1]),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((m, fam, per_n))
        });
        let (m, fam, per_n) = match built {
            Ok(v) => v,
            Err(e) => {
                out.fail(&id, &e);
                continue;
            }
        };
        out.note(&id, &m.reference);
        let width = fam.check_widths();
        let coverage = fam.check_coverage(&s_points);
        out.push(&id, 0, "bracket-count", fam.brackets.len() as f64, 0.0);
        out.push(&id, 0, "width-violations", width.is_err() as u8 as f64, 0.0);
        out.push(
            &id,
            0,
            "coverage-violations",
            coverage.is_err() as u8 as f64,
            0.0,
        );
        for e in [width.err(), coverage.err()].into_iter().flatten() {
            out.violation(format!("{id}: {e}"));
        }
        for (&n, doms) in cfg.n_grid.iter().zip(per_n) {
            let bad = doms.iter().filter(|d| !d.holds()).count();
            let slack = doms
                .iter()
                .map(|d| d.rhs - d.lhs)
                .fold(f64::INFINITY, f64::min);
            out.push(&id, n, "domination-violations", bad as f64, 0.0);
            out.push(&id, n, "domination-min-slack", slack, 0.0);
            if bad > 0 {
                out.violation(format!("{id}, n = {n}: domination fails on {bad} samples"));
            }
        }
    }
    Ok(out.outcome)
}

/// Runs the experiment named by the config's kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    match cfg.experiment_kind {
        ExperimentKind::Ugc => run_ugc(cfg),
        ExperimentKind::Robustness => run_robustness(cfg),
        ExperimentKind::RioCheck => run_rio_check(cfg),
        ExperimentKind::LlnCheck => run_lln_check(cfg),
        ExperimentKind::BracketCheck => run_bracket_check(cfg),
    }
}

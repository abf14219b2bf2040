//! Monte Carlo experiment harness: declarative configs, deterministic
//! parallel runners, CSV result tables and JSON run manifests.

mod config;
mod runs;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{
    dkw_radius, reference_marginal, ArmaClass, ClassDescriptor, ExperimentConfig, ExperimentKind,
    MetricSpec, PreparedMetric, ProcessClass, ReferenceMarginal, DIAGONAL_MARGIN, REFERENCE_SIZE,
};
pub use runs::{
    binomial_se, default_x_grid, estimator_prohorov, mean_and_se, member_id, replicate_seed,
    run_bracket_check, run_experiment, run_lln_check, run_rio_check, run_robustness, run_ugc, thin,
    truncation_levels, BATCHES, MAX_ESTIMATOR_ATOMS, VIOLATION_SE,
};
pub use table::{
    config_hash, format_float, ExperimentOutcome, Manifest, ResultRow, ResultTable, COLUMNS,
    SCHEMA_VERSION,
};

use crate::error::{Error, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "QUALROB_THREADS";

/// Worker threads: `QUALROB_THREADS` when set, else the available
/// parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!(
                "{THREADS_VAR} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// A finished run with its timing.
#[derive(Debug, Clone)]
pub struct Run {
    pub outcome: ExperimentOutcome,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

impl Run {
    pub fn manifest(&self, config: &ExperimentConfig) -> Manifest {
        Manifest::new(config, &self.outcome, self.threads, self.wall_clock_seconds)
    }
}

/// Runs an experiment on a dedicated pool of `threads` workers. Results do
/// not depend on the thread count.
pub fn run_with_threads(config: &ExperimentConfig, threads: usize) -> Result<Run> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| run_experiment(config))?;
    Ok(Run {
        outcome,
        threads,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run(config: &ExperimentConfig) -> Result<Run> {
    run_with_threads(config, thread_count()?)
}

/// The manifest path next to a CSV output: `results.csv` gives
/// `results.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Writes the result table and its manifest; returns the manifest path.
pub fn write_outputs(config: &ExperimentConfig, run: &Run, csv: &Path) -> Result<PathBuf> {
    run.outcome.table.write_csv(std::fs::File::create(csv)?)?;
    let manifest = manifest_path(csv);
    std::fs::write(&manifest, run.manifest(config).to_json())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn cfg(v: serde_json::Value) -> ExperimentConfig {
        ExperimentConfig::from_json(&v.to_string()).unwrap()
    }

    fn gauss() -> serde_json::Value {
        json!({"kind": "gaussian", "mean": 0.0, "sd": 1.0})
    }

    #[test]
    fn ugc_sup_is_max_and_csv_is_thread_independent() {
        let c = cfg(json!({
            "experiment-kind": "ugc",
            "process-class": {"kind": "arma-class", "c": 0.5, "grid-size": 3},
            "metric": "kolmogorov-phi:one",
            "n-grid": [8, 64],
            "delta": 0.2,
            "replicates": 40,
            "master-seed": 11
        }));
        let a = run_with_threads(&c, 1).unwrap();
        let b = run_with_threads(&c, 3).unwrap();
        assert_eq!(
            a.outcome.table.to_csv_string(),
            b.outcome.table.to_csv_string()
        );
        let t = &a.outcome.table;
        for n in [8, 64] {
            let max = (0..3)
                .map(|i| t.find(&member_id(i), "exceedance", n).unwrap().value)
                .fold(0.0, f64::max);
            assert_eq!(t.find("sup", "exceedance", n).unwrap().value, max);
        }
        assert!(t
            .rows
            .iter()
            .filter(|r| r.statistic == "exceedance")
            .all(|r| (0.0..=1.0).contains(&r.value) && r.std_error.is_finite()));
        assert_eq!(a.outcome.reference_notes.len(), 3);
        let m = a.manifest(&c);
        assert_eq!(m.config_sha256, config_hash(&c));
        assert_eq!(m.config_sha256.len(), 64);
    }

    #[test]
    fn ugc_single_replicate_gives_one_bernoulli_row() {
        let c = cfg(json!({
            "experiment-kind": "ugc",
            "process-class": [{"kind": "arma", "noise": gauss()}],
            "metric": "levy",
            "n-grid": [32],
            "delta": 0.5,
            "replicates": 1,
            "master-seed": 3
        }));
        let t = run_with_threads(&c, 2).unwrap().outcome.table;
        let rows: Vec<_> = t.select("member-00", "exceedance").collect();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].value == 0.0 || rows[0].value == 1.0);
        assert_eq!(
            t.to_csv_string(),
            run_with_threads(&c, 1)
                .unwrap()
                .outcome
                .table
                .to_csv_string()
        );
    }

    #[test]
    fn ugc_reports_member_failures() {
        let c = cfg(json!({
            "experiment-kind": "ugc",
            "process-class": [
                {"kind": "arma", "noise": {"kind": "point-mass", "location": 0.0}},
                {"kind": "arma", "phi": [0.5], "noise": {"kind": "point-mass", "location": 1.0}}
            ],
            "metric": "kolmogorov-phi:one",
            "n-grid": [4],
            "delta": 0.1,
            "replicates": 3,
            "master-seed": 1,
            "reference-size": 100
        }));
        let out = run_with_threads(&c, 1).unwrap().outcome;
        assert_eq!(
            out.table.find("member-00", "exceedance", 4).unwrap().value,
            0.0
        );
        // X_t = 2 for a constant noise of 1: the sampled reference is exact
        assert_eq!(
            out.table.find("member-01", "exceedance", 4).unwrap().value,
            0.0
        );
        assert!(out.failures.is_empty());
        // a noncausal member cannot be simulated
        let c = cfg(json!({
            "experiment-kind": "ugc",
            "process-class": [{"kind": "arma", "phi": [1.5], "noise": gauss()}],
            "metric": "levy",
            "n-grid": [4],
            "delta": 0.1,
            "replicates": 3,
            "master-seed": 1
        }));
        let out = run_with_threads(&c, 1).unwrap().outcome;
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.table.rows[0].statistic, "failure");
        assert!(out.table.select("sup", "exceedance").next().is_none());
    }

    #[test]
    fn robustness_with_point_masses_is_exactly_zero() {
        let pm = json!({"kind": "arma", "noise": {"kind": "point-mass", "location": 0.0}});
        let c = cfg(json!({
            "experiment-kind": "robustness",
            "process-class": [pm.clone(), pm],
            "functional": "mean",
            "n-grid": [16, 32],
            "replicates": 30,
            "master-seed": 5
        }));
        let out = run_with_threads(&c, 2).unwrap().outcome;
        assert!(out.passed());
        for n in [16, 32] {
            assert_eq!(out.table.find("p-vs-q", "prohorov", n).unwrap().value, 0.0);
            assert_eq!(out.table.find("p-vs-q", "levy", n).unwrap().value, 0.0);
            assert_eq!(out.table.find("p-vs-p", "prohorov", n).unwrap().value, 0.0);
        }
    }

    #[test]
    fn robustness_levy_below_kolmogorov() {
        let c = cfg(json!({
            "experiment-kind": "robustness",
            "process-class": [
                {"kind": "arma", "phi": [0.5], "theta": [0.3], "noise": gauss()},
                {"kind": "arma", "phi": [0.45], "theta": [0.3], "noise": gauss()}
            ],
            "functional": "quantile:0.5",
            "metric": "levy",
            "n-grid": [16, 64],
            "replicates": 200,
            "master-seed": 5
        }));
        let out = run_with_threads(&c, 2).unwrap().outcome;
        assert!(out.passed(), "{:?}", out.violations);
        let t = &out.table;
        for n in [16, 64] {
            assert!(
                t.find("p-vs-q", "levy", n).unwrap().value
                    <= t.find("p-vs-q", "kolmogorov", n).unwrap().value + 1e-9
            );
            assert!(t
                .find("p-vs-q", "prohorov", n)
                .unwrap()
                .std_error
                .is_finite());
        }
        assert!(
            t.find("p-vs-q", "marginal-distance[levy]", 0)
                .unwrap()
                .value
                > 0.0
        );
    }

    #[test]
    fn thinning_keeps_mass_and_order() {
        let v: Vec<f64> = (0..10_007).map(|i| ((i * 7919) % 10_007) as f64).collect();
        let (p, w) = thin(&v, 2000);
        assert_eq!(p.len(), 2000);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.windows(2).all(|x| x[0] < x[1]));
        let (p, w) = thin(&[3.0, 1.0, 3.0], 10);
        assert_eq!((p, w), (vec![1.0, 3.0], vec![1.0 / 3.0, 2.0 / 3.0]));
    }

    #[test]
    fn rio_check_trivial_cases() {
        let c = cfg(json!({
            "experiment-kind": "rio-check",
            "process-class": [{"kind": "arma", "noise": {"kind": "uniform", "lo": -1.0, "hi": 1.0}}],
            "n-grid": [16],
            "x-grid": [1e-3, 1e6],
            "replicates": 50,
            "master-seed": 2
        }));
        let out = run_with_threads(&c, 1).unwrap().outcome;
        assert!(out.passed());
        let t = &out.table;
        assert_eq!(
            t.find("member-00", "rio-bound[x=0.001]", 16).unwrap().value,
            1.0
        );
        assert!(
            t.find("member-00", "exceedance[x=0.001]", 16)
                .unwrap()
                .value
                <= 1.0
        );
        assert_eq!(
            t.find("member-00", "exceedance[x=1000000]", 16)
                .unwrap()
                .value,
            0.0
        );
        assert!(
            t.find("member-00", "rio-bound[x=1000000]", 16)
                .unwrap()
                .value
                >= 0.0
        );
    }

    #[test]
    fn lln_and_bracket_checks_pass_on_small_runs() {
        let c = cfg(json!({
            "experiment-kind": "lln-check",
            "process-class": {"kind": "arma-class", "c": 0.5, "grid-size": 2},
            "psi": "square",
            "n-grid": [16, 128],
            "delta": 0.5,
            "replicates": 100,
            "master-seed": 8
        }));
        let out = run_with_threads(&c, 2).unwrap().outcome;
        assert!(out.passed(), "{:?}", out.violations);
        assert_eq!(out.table.select("sup", "frequency").count(), 2);
        let c = cfg(json!({
            "experiment-kind": "bracket-check",
            "process-class": [{"kind": "arma", "phi": [0.4], "noise": gauss()}],
            "metric": "kolmogorov-phi:power:1",
            "eps": 0.1,
            "n-grid": [32],
            "replicates": 10,
            "master-seed": 8
        }));
        let out = run_with_threads(&c, 1).unwrap().outcome;
        assert!(out.passed(), "{:?}", out.violations);
        assert!(
            out.table
                .find("member-00", "bracket-count", 0)
                .unwrap()
                .value
                >= 1.0
        );
    }

    #[test]
    fn outputs_land_next_to_each_other() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(json!({
            "experiment-kind": "ugc",
            "process-class": [{"kind": "arma", "noise": gauss()}],
            "metric": "psi-levy:square",
            "n-grid": [16],
            "delta": 0.5,
            "replicates": 5,
            "master-seed": 3
        }));
        let r = run_with_threads(&c, 1).unwrap();
        let csv = dir.path().join("out.csv");
        let m = write_outputs(&c, &r, &csv).unwrap();
        assert_eq!(m, dir.path().join("out.manifest.json"));
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(m).unwrap()).unwrap();
        assert_eq!(manifest.rows, r.outcome.table.rows.len());
        assert_eq!(manifest.schema_version, SCHEMA_VERSION);
        assert_eq!(
            std::fs::read_to_string(csv).unwrap(),
            r.outcome.table.to_csv_string()
        );
    }
}

use serde::{Deserialize, Serialize};

use super::{levy, GaugeFunction, GaugeRole};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{integrate_split, QUAD_TOL};

/// Number of widths per centre in the bump enumeration.
const WIDTHS: usize = 9;

/// A fixed countable family of compactly supported continuous functions,
/// bounded by 1, used to define the vague metric.
///
/// Index `k` (1-based) is a plateau `e_n`, `n = k / 10`, when `k` is a
/// multiple of 10: equal to 1 on `[-n, n]`, 0 outside `[-n-1, n+1]`, linear in
/// between. Every other index is a triangle bump
/// `max(0, 1 - |x - c| / w)`; with `b` the running bump count, the centre is
/// the `b / 9`-th element of `0, 0.5, -0.5, 1, -1, 1.5, ...` and the width is
/// `2^(b mod 9 - 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseFamily {
    pub k_max: usize,
}

impl Default for DenseFamily {
    fn default() -> Self {
        Self { k_max: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Member {
    Plateau(f64),
    Bump { center: f64, width: f64 },
}

impl DenseFamily {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidParameter(
                "dense family needs k_max >= 1".into(),
            ));
        }
        Ok(Self { k_max })
    }

    /// Bound on the neglected tail of the series.
    pub fn truncation_error(&self) -> f64 {
        0.5f64.powi(self.k_max as i32)
    }

    pub fn descriptor(&self) -> String {
        format!("bumps(c in Z/2, w=2^-2..2^6)+plateaus;k_max={}", self.k_max)
    }

    fn member(k: usize) -> Member {
        assert!(k >= 1, "family is indexed from 1");
        if k.is_multiple_of(10) {
            return Member::Plateau((k / 10) as f64);
        }
        let b = k - k / 10 - 1;
        let m = b / WIDTHS;
        let j = (b % WIDTHS) as i32;
        let half_steps = m.div_ceil(2) as f64;
        let center = if m % 2 == 1 {
            0.5 * half_steps
        } else {
            -0.5 * half_steps
        };
        Member::Bump {
            center: if m == 0 { 0.0 } else { center },
            width: 2f64.powi(j - 2),
        }
    }

    /// `f_k(y)`.
    pub fn eval(&self, k: usize, y: f64) -> f64 {
        match Self::member(k) {
            Member::Plateau(n) => (n + 1.0 - y.abs()).clamp(0.0, 1.0),
            Member::Bump { center, width } => (1.0 - (y - center).abs() / width).max(0.0),
        }
    }

    /// Support `[lo, hi]` of `f_k` and its kinks.
    pub fn support(&self, k: usize) -> (f64, f64, Vec<f64>) {
        match Self::member(k) {
            Member::Plateau(n) => (-n - 1.0, n + 1.0, vec![-n, n]),
            Member::Bump { center, width } => (center - width, center + width, vec![center]),
        }
    }

    /// `∫ f_k dμ` for `k = 1..=k_max`.
    pub fn integrals(&self, mu: &Distribution) -> Vec<f64> {
        let atoms = mu.atoms();
        let span = mu.continuous_span();
        (1..=self.k_max)
            .map(|k| {
                let (lo, hi, kinks) = self.support(k);
                let atomic: f64 = atoms
                    .iter()
                    .filter(|a| a.0 > lo && a.0 < hi)
                    .map(|&(x, m)| m * self.eval(k, x))
                    .sum();
                let cont = match span {
                    Some((a, b)) if b > lo && a < hi => {
                        let mut cuts = kinks;
                        cuts.extend(mu.breakpoints());
                        cuts.extend(mu.probe_points(16));
                        integrate_split(
                            |y| self.eval(k, y) * mu.density(y),
                            a.max(lo),
                            b.min(hi),
                            &cuts,
                            QUAD_TOL,
                        )
                    }
                    _ => 0.0,
                };
                atomic + cont
            })
            .collect()
    }

    /// The truncated series from precomputed integrals.
    pub fn distance_from_integrals(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| 0.5f64.powi(i as i32 + 1) * (x - y).abs().min(1.0))
            .sum()
    }
}

/// Vague metric `Σ_k 2^-k min(1, |∫f_k dμ - ∫f_k dν|)`, truncated at
/// `family.k_max` (neglected tail at most `2^-k_max`).
pub fn vague_distance(mu: &Distribution, nu: &Distribution, family: &DenseFamily) -> f64 {
    family.distance_from_integrals(&family.integrals(mu), &family.integrals(nu))
}

/// `∫ ψ dμ`, failing when the moment is not finite.
pub fn psi_moment(mu: &Distribution, psi: &GaugeFunction) -> Result<f64> {
    psi.require(GaugeRole::Psi)?;
    let m = psi.moment(mu);
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::NotInGaugeClass(format!(
            "{} has no finite {psi}-moment",
            mu.describe()
        )))
    }
}

/// ψ-vague metric: the vague distance plus the ψ-moment gap.
pub fn psi_vague(
    mu: &Distribution,
    nu: &Distribution,
    psi: &GaugeFunction,
    family: &DenseFamily,
) -> Result<f64> {
    let gap = (psi_moment(mu, psi)? - psi_moment(nu, psi)?).abs();
    Ok(vague_distance(mu, nu, family) + gap)
}

/// ψ-Lévy metric: the Lévy distance plus the ψ-moment gap.
pub fn psi_levy(mu: &Distribution, nu: &Distribution, psi: &GaugeFunction) -> Result<f64> {
    let gap = (psi_moment(mu, psi)? - psi_moment(nu, psi)?).abs();
    Ok(levy(mu, nu) + gap)
}

/// Tail gauge moments `∫ g 1{g >= K} dμ` per marginal and level, and their
/// supremum over the marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMomentTable {
    pub levels: Vec<f64>,
    /// One row per marginal; an `Err` flags a marginal with an infinite
    /// gauge moment.
    pub per_marginal: Vec<Result<Vec<f64>>>,
    pub sup: Vec<f64>,
}

/// Uniform integrability profile of a gauge over a set of marginals.
pub fn uniform_phi_integrability(
    marginals: &[Distribution],
    gauge: &GaugeFunction,
    levels: &[f64],
) -> TailMomentTable {
    let per_marginal: Vec<Result<Vec<f64>>> = marginals
        .iter()
        .map(|mu| {
            let row: Vec<f64> = levels.iter().map(|&k| gauge.tail_moment(mu, k)).collect();
            if row.iter().all(|v| v.is_finite()) {
                Ok(row)
            } else {
                Err(Error::NotInGaugeClass(format!(
                    "{} has an infinite {gauge}-moment",
                    mu.describe()
                )))
            }
        })
        .collect();
    let sup = (0..levels.len())
        .map(|j| {
            per_marginal
                .iter()
                .filter_map(|r| r.as_ref().ok())
                .map(|row| row[j])
                .fold(0.0, f64::max)
        })
        .collect();
    TailMomentTable {
        levels: levels.to_vec(),
        per_marginal,
        sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(x: f64) -> Distribution {
        Distribution::point_mass(x).unwrap()
    }

    #[test]
    fn enumeration_prefix() {
        let fam = DenseFamily::default();
        assert_eq!(
            DenseFamily::member(1),
            Member::Bump {
                center: 0.0,
                width: 0.25
            }
        );
        assert_eq!(
            DenseFamily::member(9),
            Member::Bump {
                center: 0.0,
                width: 64.0
            }
        );
        assert_eq!(DenseFamily::member(10), Member::Plateau(1.0));
        assert_eq!(
            DenseFamily::member(11),
            Member::Bump {
                center: 0.5,
                width: 0.25
            }
        );
        assert_eq!(
            DenseFamily::member(21),
            Member::Bump {
                center: -0.5,
                width: 0.25
            }
        );
        assert_eq!(
            DenseFamily::member(31),
            Member::Bump {
                center: 1.0,
                width: 0.25
            }
        );
        for k in 1..=fam.k_max {
            let (lo, hi, _) = fam.support(k);
            assert_eq!(fam.eval(k, lo), 0.0);
            assert_eq!(fam.eval(k, hi), 0.0);
            for j in 0..=100 {
                let v = fam.eval(k, lo + (hi - lo) * j as f64 / 100.0);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    /// Direct summation for two point masses, written without the family
    /// machinery: each index contributes 2^-k |f_k(0) - f_k(1)|.
    fn point_mass_oracle(k_max: usize) -> f64 {
        let mut total = 0.0;
        let mut bumps = 0usize;
        for k in 1..=k_max {
            let f: Box<dyn Fn(f64) -> f64> = if k % 10 == 0 {
                let n = (k / 10) as f64;
                Box::new(move |y: f64| (n + 1.0 - y.abs()).clamp(0.0, 1.0))
            } else {
                let m = bumps / 9;
                let w = 2f64.powi((bumps % 9) as i32 - 2);
                let centers = [0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5];
                let c = centers[m];
                bumps += 1;
                Box::new(move |y: f64| (1.0 - (y - c).abs() / w).max(0.0))
            };
            total += 0.5f64.powi(k as i32) * (f(0.0) - f(1.0)).abs().min(1.0);
        }
        total
    }

    #[test]
    fn point_mass_golden_value() {
        let fam = DenseFamily::new(20).unwrap();
        let v = vague_distance(&pm(0.0), &pm(1.0), &fam);
        assert!((v - point_mass_oracle(20)).abs() < 1e-15);
        // frozen from an exact rational evaluation: 30037 / 32768
        assert_eq!(v, 30037.0 / 32768.0);
    }

    #[test]
    fn bounded_by_one_and_zero_on_diagonal() {
        let fam = DenseFamily::default();
        let g = Distribution::gaussian(0.0, 2.0).unwrap();
        assert_eq!(vague_distance(&g, &g, &fam), 0.0);
        assert!(vague_distance(&pm(-50.0), &pm(50.0), &fam) <= 1.0);
    }

    #[test]
    fn continuous_integrals_match_sampling_limit() {
        let fam = DenseFamily::new(12).unwrap();
        let u = Distribution::uniform(-1.0, 1.0).unwrap();
        let ints = fam.integrals(&u);
        // f_1 is the bump of width 1/4 at 0: integral 0.25 / 2
        assert!((ints[0] - 0.125).abs() < 1e-12);
        // plateau e_1 covers [-1,1] entirely
        assert!((ints[9] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_metrics_examples() {
        let fam = DenseFamily::new(20).unwrap();
        let sq = GaugeFunction::square();
        let vague = vague_distance(&pm(0.0), &pm(1.0), &fam);
        assert!((psi_vague(&pm(0.0), &pm(1.0), &sq, &fam).unwrap() - (vague + 1.0)).abs() < 1e-15);
        assert!((psi_levy(&pm(0.0), &pm(1.0), &sq).unwrap() - 2.0).abs() < 1e-9);
        let hinge: GaugeFunction = "hinge:3".parse().unwrap();
        assert_eq!(
            psi_levy(&pm(0.0), &pm(1.0), &hinge).unwrap(),
            levy(&pm(0.0), &pm(1.0))
        );
        assert_eq!(psi_vague(&pm(0.0), &pm(1.0), &hinge, &fam).unwrap(), vague);
    }

    #[test]
    fn integrability_profiles() {
        let one = GaugeFunction::one();
        let t = uniform_phi_integrability(&[pm(0.0)], &one, &[2.0]);
        assert_eq!(t.sup, vec![0.0]);
        let p2 = GaugeFunction::power(2.0).unwrap();
        let marg: Vec<Distribution> = [0.5, 0.8, 1.0]
            .iter()
            .map(|&s| Distribution::gaussian(0.0, s).unwrap())
            .collect();
        let t = uniform_phi_integrability(&marg, &p2, &[1.0, 10.0, 100.0]);
        assert!(t.sup[0] > t.sup[1] && t.sup[1] > t.sup[2]);
        // K = 1 keeps everything: E(1+|Z|)^2 = 2 + 2 sqrt(2/pi) for sd 1
        let full = 2.0 + 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((t.sup[0] - full).abs() < 1e-8);
    }
}

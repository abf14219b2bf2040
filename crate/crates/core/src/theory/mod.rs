//! Quantitative bounds for strongly mixing sequences (Rio's maximal
//! inequality and the uniform weak law of large numbers built on it) and the
//! ε-bracket construction behind the uniform Glivenko-Cantelli theorem for
//! the Kolmogorov φ-metric.

mod brackets;

pub use brackets::{build_brackets, Bracket, BracketFamily, Domination};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::metrics::GaugeFunction;
use crate::numeric::integrate_split;

const RIO_TOL: f64 = 1e-9;

fn check_alpha(alpha: &[f64], n: usize) -> Result<()> {
    if alpha.len() < n {
        return Err(Error::Domain(format!(
            "need {n} mixing coefficients, got {}",
            alpha.len()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(0.0..=0.25).contains(*a)) {
        return Err(Error::InvalidParameter(format!(
            "mixing coefficient {a} outside [0, 1/4]"
        )));
    }
    Ok(())
}

/// `∫_0^c Ḡ→(t)² dt` for every requested `c`, where `Ḡ→` is the
/// right-continuous inverse of the survival function of `|ξ|`.
fn squared_upper_quantile_integrals(marginal: &Distribution, ends: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..ends.len()).collect();
    order.sort_by(|&a, &b| ends[a].total_cmp(&ends[b]));
    let mut cuts: Vec<f64> = Vec::new();
    for (x, _) in marginal.atoms() {
        cuts.push(marginal.abs_survival(x.abs()));
        cuts.push(
            marginal.abs_survival(x.abs()) + marginal.mass_at(x.abs()) + marginal.mass_at(-x.abs()),
        );
    }
    let f = |t: f64| marginal.abs_survival_inverse(t).powi(2);
    let mut out = vec![0.0; ends.len()];
    let (mut prev, mut acc) = (0.0, 0.0);
    for i in order {
        let c = ends[i].clamp(0.0, 1.0);
        if c > prev {
            // the integrand may blow up logarithmically at 0: dyadic cuts
            let mut local: Vec<f64> = (1..=60)
                .map(|k| c * 0.5f64.powi(k))
                .filter(|&x| x > prev)
                .collect();
            local.extend(cuts.iter().copied().filter(|&x| x > prev && x < c));
            acc += integrate_split(f, prev, c, &local, RIO_TOL);
            prev = c;
        }
        out[i] = acc;
    }
    out
}

/// `n Σ_{j<n} ∫_0^{2α(j)} Ḡ→(t)² dt`, the part of Rio's bound that does not
/// depend on `x`.
pub fn rio_sum(marginal: &Distribution, alpha: &[f64], n: usize) -> Result<f64> {
    check_alpha(alpha, n)?;
    if !marginal.second_moment().is_finite() {
        return Err(Error::Domain(format!(
            "{} has no finite second moment",
            marginal.describe()
        )));
    }
    let ends: Vec<f64> = alpha[..n].iter().map(|a| 2.0 * a).collect();
    let parts = squared_upper_quantile_integrals(marginal, &ends);
    Ok(n as f64 * parts.iter().sum::<f64>())
}

/// Rio's maximal inequality: an upper bound on
/// `P[max_{k<=n} |Σ_{i<=k} (ξ_i - Eξ_1)| >= 2x]` for an identically
/// distributed sequence with marginal `marginal` and mixing coefficients
/// `alpha[j]` (`j = 0..n-1`, conventionally `alpha[0] = 1/4`), capped at 1.
pub fn rio_bound(marginal: &Distribution, alpha: &[f64], n: usize, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    let s = rio_sum(marginal, alpha, n)?;
    Ok((16.0 / (x * x) * s).min(1.0))
}

/// The three terms of the law-of-large-numbers tail bound and their capped
/// total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnBound {
    /// Truncated part via Rio: `(1152 K²/δ²) (1/n) Σ_{j<n} α(j)`.
    pub s1: f64,
    /// Markov bound on the large values: `(3/δ) E[|ξ| 1{|ξ| >= K}]`.
    pub s2: f64,
    /// `0` if `E[|ξ| 1{|ξ| > K}] < δ/3`, else `1`.
    pub s3: f64,
    pub total: f64,
}

/// Bound on `P[|n⁻¹ Σ ξ_i - Eξ_1| >= δ]` for `ξ_i` with law `marginal`.
pub fn lln_tail_bound(
    marginal: &Distribution,
    alpha: &[f64],
    n: usize,
    delta: f64,
    k: f64,
) -> Result<LlnBound> {
    lln_tail_bound_gauge(marginal, &GaugeFunction::abs(), alpha, n, delta, k)
}

/// [`lln_tail_bound`] for `ξ_i = ψ(X_i)` with `X_i` of law `marginal`.
/// Mixing coefficients of `ψ(X_i)` never exceed those of `X_i`.
pub fn lln_tail_bound_gauge(
    marginal: &Distribution,
    psi: &GaugeFunction,
    alpha: &[f64],
    n: usize,
    delta: f64,
    k: f64,
) -> Result<LlnBound> {
    if !(delta > 0.0 && k > 0.0) {
        return Err(Error::Domain(format!(
            "delta and K must be positive, got ({delta}, {k})"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    check_alpha(alpha, n)?;
    let at_least = psi.tail_moment(marginal, k);
    if !at_least.is_finite() {
        return Err(Error::NotIntegrable(format!(
            "{} has an infinite {psi}-moment",
            marginal.describe()
        )));
    }
    let on_level: f64 = marginal
        .atoms()
        .iter()
        .filter(|(x, _)| psi.eval(*x) == k)
        .map(|(_, m)| m)
        .sum();
    let above = at_least - k * on_level;
    let s1 = 1152.0 * k * k / (delta * delta) * alpha[..n].iter().sum::<f64>() / n as f64;
    let s2 = 3.0 / delta * at_least;
    let s3 = if above < delta / 3.0 { 0.0 } else { 1.0 };
    Ok(LlnBound {
        s1,
        s2,
        s3,
        total: (s1 + s2 + s3).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid_alpha(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n];
        a[0] = 0.25;
        a
    }

    #[test]
    fn rio_point_mass() {
        let c = 1.7;
        let d = Distribution::point_mass(-c).unwrap();
        for n in [1usize, 5, 40] {
            let x = 50.0;
            let b = rio_bound(&d, &iid_alpha(n), n, x).unwrap();
            assert!((b - 8.0 * n as f64 * c * c / (x * x)).abs() < 1e-12);
        }
        assert_eq!(rio_bound(&d, &[0.0; 4], 4, 1.0).unwrap(), 0.0);
        assert_eq!(rio_bound(&d, &iid_alpha(4), 4, 0.01).unwrap(), 1.0);
        assert!(rio_bound(&d, &iid_alpha(4), 4, 0.0).is_err());
        assert!(rio_bound(&d, &iid_alpha(3), 4, 1.0).is_err());
    }

    /// `∫_0^c Ḡ→(t)² dt = E[ξ²; |ξ| > q] + q² (c - P[|ξ| > q])` with
    /// `q = Ḡ→(c)`.
    fn tail_second_moment(d: &Distribution, c: f64) -> f64 {
        let q = d.abs_survival_inverse(c);
        let above = d.expect(|y| if y.abs() > q { y * y } else { 0.0 }, &[-q, q]);
        above + q * q * (c - d.abs_survival(q))
    }

    #[test]
    fn quadrature_matches_tail_moments() {
        let laws = [
            Distribution::gaussian(0.0, 1.3).unwrap(),
            Distribution::finite_discrete(vec![(-2.0, 0.2), (0.5, 0.5), (3.0, 0.3)]).unwrap(),
            Distribution::uniform(-1.0, 2.0).unwrap(),
        ];
        for d in &laws {
            let ends = [0.5, 0.1, 0.37, 0.02];
            let got = squared_upper_quantile_integrals(d, &ends);
            for (c, g) in ends.iter().zip(&got) {
                let want = tail_second_moment(d, *c);
                assert!((g - want).abs() < 1e-7, "{} {c}: {g} {want}", d.describe());
            }
        }
    }

    #[test]
    fn rio_is_monotone_in_x_and_alpha() {
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..32)
            .map(|j| if j == 0 { 0.25 } else { 0.25 * 0.5f64.powi(j) })
            .collect();
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let v: Vec<f64> = xs
            .iter()
            .map(|&x| rio_bound(&d, &a, 32, x).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
        let bigger: Vec<f64> = a.iter().map(|x| (x * 1.5f64).min(0.25)).collect();
        assert!(rio_bound(&d, &bigger, 32, 16.0).unwrap() >= v[4]);
    }

    #[test]
    fn lln_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let b = lln_tail_bound(&u, &iid_alpha(1_000_000), 1_000_000, 0.1, 1.0).unwrap();
        assert_eq!(b.s2, 0.0);
        assert_eq!(b.s3, 0.0);
        assert!((b.total - 0.0288).abs() < 1e-12);
        for n in [10usize, 100, 1000] {
            let b = lln_tail_bound(&u, &iid_alpha(n), n, 0.5, 1.0).unwrap();
            assert!((b.s1 - 1152.0 / 0.25 / n as f64 * 0.25).abs() < 1e-9);
        }
        let heavy = Distribution::finite_discrete(vec![(0.0, 0.5), (10.0, 0.5)]).unwrap();
        let b = lln_tail_bound(&heavy, &iid_alpha(100), 100, 0.3, 2.0).unwrap();
        assert_eq!(b.s3, 1.0);
        assert_eq!(b.total, 1.0);
        // an atom exactly at K counts for S2 but not for S3
        let edge = Distribution::finite_discrete(vec![(0.0, 0.9), (2.0, 0.1)]).unwrap();
        let b = lln_tail_bound(&edge, &iid_alpha(10), 10, 0.3, 2.0).unwrap();
        assert!((b.s2 - 3.0 / 0.3 * 0.2).abs() < 1e-12);
        assert_eq!(b.s3, 0.0);
    }
}

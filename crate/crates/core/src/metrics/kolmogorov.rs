use super::{grid_max, GaugeFunction, GaugeRole};
use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Running suprema above this are treated as divergent.
const DIVERGENCE: f64 = 1e12;
const PROBES: usize = 512;

/// Kolmogorov φ-metric `sup_y |F_μ(y) - F_ν(y)| φ(y)`.
///
/// Exact for atomic laws (the gap is constant between breakpoints and φ is
/// monotone on each side of zero) and for constant φ against a continuous
/// law; otherwise breakpoints, left limits and a quantile-spaced probe grid
/// are searched and the best cells polished.
pub fn kolmogorov_phi(mu: &Distribution, nu: &Distribution, phi: &GaugeFunction) -> Result<f64> {
    kolmogorov_phi_below(mu, nu, phi, f64::INFINITY)
}

/// Classical Kolmogorov (sup-norm) distance between CDFs.
pub fn kolmogorov(mu: &Distribution, nu: &Distribution) -> f64 {
    kolmogorov_phi(mu, nu, &GaugeFunction::one()).expect("constant gauge never diverges")
}

/// The φ-weighted CDF gap restricted to `y <= upper`.
pub fn kolmogorov_phi_below(
    mu: &Distribution,
    nu: &Distribution,
    phi: &GaugeFunction,
    upper: f64,
) -> Result<f64> {
    phi.require(GaugeRole::UShaped)?;
    let value = match (
        phi.bound(),
        upper == f64::INFINITY,
        mu.is_discrete(),
        nu.is_discrete(),
    ) {
        (Some(c), true, true, true) if nu.atoms().len() < mu.atoms().len() => {
            c * atomic_vs_any(nu, mu)
        }
        (Some(c), true, true, _) => c * atomic_vs_any(mu, nu),
        (Some(c), true, _, true) => c * atomic_vs_any(nu, mu),
        (_, _, true, true) => atomic_sup(mu, nu, phi, upper),
        _ => general_sup(mu, nu, phi, upper),
    };
    if !value.is_finite() || value > DIVERGENCE {
        return Err(Error::NotInGaugeClass(format!(
            "weighted CDF gap between {} and {} diverges under {phi}",
            mu.describe(),
            nu.describe()
        )));
    }
    Ok(value)
}

fn merged_breakpoints(mu: &Distribution, nu: &Distribution) -> Vec<f64> {
    let mut pts = mu.breakpoints();
    pts.extend(nu.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn atomic_sup(mu: &Distribution, nu: &Distribution, phi: &GaugeFunction, upper: f64) -> f64 {
    let pts = merged_breakpoints(mu, nu);
    let mut best: f64 = 0.0;
    for (i, &b) in pts.iter().enumerate() {
        if b > upper {
            break;
        }
        let gap = (mu.cdf(b) - nu.cdf(b)).abs();
        if gap == 0.0 {
            continue;
        }
        let next = pts.get(i + 1).copied().unwrap_or(f64::INFINITY).min(upper);
        let weight = if next.is_finite() {
            phi.eval(b).max(phi.eval(next))
        } else {
            f64::INFINITY
        };
        best = best.max(gap * weight);
    }
    best
}

/// Unweighted gap between an atomic law and any law. Between consecutive
/// atoms the atomic CDF is flat and the other is monotone, so the supremum
/// is attained at an atom, at its value or as the left limit.
fn atomic_vs_any(atomic: &Distribution, other: &Distribution) -> f64 {
    let mut best: f64 = 0.0;
    let mut below = 0.0;
    for (x, m) in atomic.atoms() {
        let above = below + m;
        best = best
            .max((other.cdf_left(x) - below).abs())
            .max((above - other.cdf(x)).abs());
        below = above;
    }
    best
}

fn general_sup(mu: &Distribution, nu: &Distribution, phi: &GaugeFunction, upper: f64) -> f64 {
    let mut pts = merged_breakpoints(mu, nu);
    pts.extend(mu.probe_points(PROBES));
    pts.extend(nu.probe_points(PROBES));
    if upper.is_finite() {
        pts.push(upper);
    }
    pts.retain(|&y| y <= upper);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let left = pts
        .iter()
        .map(|&b| (mu.cdf_left(b) - nu.cdf_left(b)).abs() * phi.eval(b))
        .fold(0.0, f64::max);
    let f = |y: f64| {
        if y > upper {
            0.0
        } else {
            (mu.cdf(y) - nu.cdf(y)).abs() * phi.eval(y)
        }
    };
    grid_max(f, &pts, 12).max(left)
}

/// Two-sample Kolmogorov-Smirnov statistic by a merge over the sorted
/// samples.
pub fn two_sample_ks(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        best = best.max((i as f64 / n - j as f64 / m).abs());
    }
    best
}

//! Distances between probability laws on the real line: the Kolmogorov
//! φ-metric, the Lévy metric, the vague metric and their ψ-weighted variants.

mod gauge;
mod kolmogorov;
mod levy;
mod vague;

pub use gauge::{GaugeFunction, GaugeRole, GaugeShape};
pub use kolmogorov::{kolmogorov, kolmogorov_phi, kolmogorov_phi_below, two_sample_ks};
pub use levy::levy;
pub use vague::{
    psi_levy, psi_moment, psi_vague, uniform_phi_integrability, vague_distance, DenseFamily,
    TailMomentTable,
};

/// Maximizes `f` over the sorted points `pts`, then polishes the best few
/// grid maxima by golden-section search inside their neighbouring cells.
pub(crate) fn grid_max<F: Fn(f64) -> f64>(f: F, pts: &[f64], polish: usize) -> f64 {
    if pts.is_empty() {
        return f64::NEG_INFINITY;
    }
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if polish == 0 || pts.len() < 2 {
        return best;
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    for &i in order.iter().take(polish) {
        let lo = pts[i.saturating_sub(1)];
        let hi = pts[(i + 1).min(pts.len() - 1)];
        best = best.max(golden_max(&f, lo, hi));
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    for _ in 0..80 {
        if b - a <= 1e-10 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            best = best.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            best = best.max(fd);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_max_polishes_interior_peak() {
        let pts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let v = grid_max(|x| -(x - 0.333_333).powi(2), &pts, 3);
        assert!(v > -1e-15);
    }
}

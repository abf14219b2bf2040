use super::{grid_max, kolmogorov};
use crate::distributions::Distribution;

const FEASIBILITY_TOL: f64 = 1e-12;
const STOP_WIDTH: f64 = 1e-10;
const PROBES: usize = 512;

/// Lévy distance: the smallest `ε` with
/// `F_μ(x-ε) - ε <= F_ν(x) <= F_μ(x+ε) + ε` for all `x`.
///
/// Bisection on `ε` over `[0, d_K(μ, ν)]` (the Kolmogorov distance dominates
/// the Lévy distance) until the bracket is narrower than `1e-10`. Each
/// sandwich check looks at the breakpoints of both laws, the breakpoints
/// shifted by `ε`, and (for continuous parts) a polished probe grid.
pub fn levy(mu: &Distribution, nu: &Distribution) -> f64 {
    let checker = Sandwich::new(mu, nu);
    if checker.holds(0.0) {
        return 0.0;
    }
    let mut hi = kolmogorov(mu, nu).min(1.0);
    if !checker.holds(hi) {
        hi = 1.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        if hi - lo < STOP_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if checker.holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

enum Sandwich<'a> {
    /// An atomic law against an atom-free one; the check reduces to the
    /// atoms, and only atoms whose unshifted gap exceeds `ε` can fail.
    Mixed {
        cont: &'a Distribution,
        atoms: Vec<AtomGap>,
    },
    General {
        mu: &'a Distribution,
        nu: &'a Distribution,
        probes: Vec<f64>,
    },
}

struct AtomGap {
    x: f64,
    below: f64,
    upto: f64,
    cont_at: f64,
}

impl<'a> Sandwich<'a> {
    fn new(mu: &'a Distribution, nu: &'a Distribution) -> Self {
        let mixed = |atomic: &'a Distribution, cont: &'a Distribution| {
            let mut below = 0.0;
            let atoms = atomic
                .atoms()
                .into_iter()
                .map(|(x, m)| {
                    let g = AtomGap {
                        x,
                        below,
                        upto: below + m,
                        cont_at: cont.cdf(x),
                    };
                    below += m;
                    g
                })
                .collect();
            Sandwich::Mixed { cont, atoms }
        };
        if mu.is_discrete() && nu.is_continuous() {
            mixed(mu, nu)
        } else if nu.is_discrete() && mu.is_continuous() {
            mixed(nu, mu)
        } else {
            let mut probes = mu.probe_points(PROBES);
            probes.extend(nu.probe_points(PROBES));
            probes.sort_by(f64::total_cmp);
            probes.dedup();
            Sandwich::General { mu, nu, probes }
        }
    }

    fn holds(&self, eps: f64) -> bool {
        match self {
            Sandwich::Mixed { cont, atoms } => atoms.iter().all(|a| {
                // F_atomic(x) <= F_cont(x + ε) + ε, worst at the atom itself
                let up = a.upto - a.cont_at <= eps
                    || a.upto <= cont.cdf(a.x + eps) + eps + FEASIBILITY_TOL;
                // F_cont(x) <= F_atomic(x + ε) + ε, worst just left of x + ε = atom
                let down = a.cont_at - a.below <= eps
                    || cont.cdf(a.x - eps) <= a.below + eps + FEASIBILITY_TOL;
                up && down
            }),
            Sandwich::General { mu, nu, probes } => {
                one_sided(mu, nu, eps, probes) && one_sided(nu, mu, eps, probes)
            }
        }
    }
}

/// Checks `F_q(x) <= F_p(x + ε) + ε` for all `x`.
fn one_sided(p: &Distribution, q: &Distribution, eps: f64, probes: &[f64]) -> bool {
    let mut pts: Vec<f64> = q.breakpoints();
    pts.extend(p.breakpoints().into_iter().map(|b| b - eps));
    let continuous = !p.is_discrete() || !q.is_discrete();
    if continuous {
        pts.extend(probes.iter().copied());
        pts.extend(probes.iter().map(|b| b - eps));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let left = pts
        .iter()
        .map(|&x| q.cdf_left(x) - p.cdf_left(x + eps))
        .fold(f64::NEG_INFINITY, f64::max);
    let value = |x: f64| q.cdf(x) - p.cdf(x + eps);
    let worst = grid_max(value, &pts, if continuous { 12 } else { 0 }).max(left);
    worst <= eps + FEASIBILITY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(x: f64) -> Distribution {
        Distribution::point_mass(x).unwrap()
    }

    /// Dense ε-grid oracle with the sandwich checked on a dense x-grid.
    fn oracle(mu: &Distribution, nu: &Distribution) -> f64 {
        let xs: Vec<f64> = (0..=4000).map(|k| -3.0 + 6.0 * k as f64 / 4000.0).collect();
        (0..=2000)
            .map(|k| k as f64 / 2000.0)
            .find(|&e| {
                xs.iter().all(|&x| {
                    mu.cdf(x - e) - e <= nu.cdf(x) + 1e-12 && nu.cdf(x) <= mu.cdf(x + e) + e + 1e-12
                })
            })
            .unwrap()
    }

    #[test]
    fn point_masses() {
        assert_eq!(levy(&pm(0.0), &pm(0.0)), 0.0);
        assert!((levy(&pm(0.0), &pm(0.5)) - 0.5).abs() < 1e-9);
        assert!((levy(&pm(0.0), &pm(1.0)) - 1.0).abs() < 1e-9);
        assert!((levy(&pm(0.0), &pm(7.0)) - 1.0).abs() < 1e-9);
        assert!((oracle(&pm(0.0), &pm(0.5)) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn shifted_uniforms() {
        let a = Distribution::uniform(0.0, 1.0).unwrap();
        let b = Distribution::uniform(0.2, 1.2).unwrap();
        assert!((levy(&a, &b) - 0.1).abs() < 1e-9);
        assert!((oracle(&a, &b) - 0.1).abs() < 1e-3);
    }

    #[test]
    fn agrees_with_grid_oracle_on_discrete_laws() {
        let mu = Distribution::finite_discrete(vec![(-1.0, 0.2), (0.1, 0.5), (0.4, 0.3)]).unwrap();
        let nu = Distribution::finite_discrete(vec![(-0.7, 0.6), (1.1, 0.4)]).unwrap();
        let d = levy(&mu, &nu);
        assert!((d - oracle(&mu, &nu)).abs() <= 5e-4 + 1e-9, "{d}");
        assert!((d - levy(&nu, &mu)).abs() < 1e-9);
    }

    #[test]
    fn mixed_fast_path_matches_general_check() {
        let g = Distribution::gaussian(0.0, 1.0).unwrap();
        let e = Distribution::empirical(vec![-0.9, -0.2, 0.05, 0.3, 1.7]).unwrap();
        let fast = levy(&e, &g);
        let probes = g.probe_points(PROBES);
        let general = |eps: f64| one_sided(&e, &g, eps, &probes) && one_sided(&g, &e, eps, &probes);
        assert!(general(fast + 1e-8));
        assert!(!general(fast - 1e-6));
        assert!(fast <= kolmogorov(&e, &g) + 1e-12);
    }
}

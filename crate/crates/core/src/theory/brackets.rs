use crate::distributions::{quantile_transform, Distribution, EmpiricalMeasure, ExtReal};
use crate::error::{Error, Result};
use crate::metrics::{kolmogorov_phi_below, GaugeFunction, GaugeRole};
use crate::numeric::bisect_boundary;

const GRID_TOL: f64 = 1e-13;
const WIDTH_TOL: f64 = 1e-8;

/// One bracket `[l, u]` on `[0, 1]`, attached to the cell `(lo, hi]` of the
/// merged grid:
/// `l = w(hi) 1[0, lo]` and `u = w(lo+) 1[0, lo] + w 1(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// `w(hi)`.
    pub lower_level: f64,
    /// `w(lo+)`, the right limit of `w` at `lo` (unused when `lo = 0`).
    pub upper_level: f64,
    /// `∫ (u - l)` over `[0, 1]`.
    pub width: f64,
}

/// Finitely many ε-brackets covering the weighted indicators
/// `w_s = w(s) 1[0, s]`, `s ∈ [0, 1]`, where
/// `w(t) = φ(F←(t)) 1[0, F(0)](t)` for a marginal with distribution
/// function `F` and a u-shaped gauge `φ`.
///
/// Built for the negative half-line; apply [`build_brackets`] to the
/// reflected marginal for the positive one.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketFamily {
    pub marginal: Distribution,
    pub phi: GaugeFunction,
    pub eps: f64,
    /// `F(0)`.
    pub f0: f64,
    /// Grid with `h` increments at most `ε/2`.
    pub s_grid: Vec<f64>,
    /// Level grid `0 = y_0 < ... < y_{l-1} = K` (the last cell extends to
    /// infinity).
    pub y_grid: Vec<f64>,
    /// Merged grid of the `s` points and the `w→(y_i)`.
    pub t_grid: Vec<f64>,
    pub brackets: Vec<Bracket>,
}

/// Value of the gauge at an extended real (the infinities give its
/// supremum).
fn phi_at(phi: &GaugeFunction, y: ExtReal) -> f64 {
    match y {
        ExtReal::Finite(x) => phi.eval(x),
        _ => phi.bound().unwrap_or(f64::INFINITY),
    }
}

impl BracketFamily {
    /// `w(t) = φ(F←(t))` for `0 < t <= F(0)`, zero beyond.
    pub fn weight(&self, t: f64) -> f64 {
        if t > self.f0 {
            0.0
        } else {
            phi_at(&self.phi, self.marginal.quantile(t))
        }
    }

    /// Right limit `w(t+)`.
    pub fn weight_right(&self, t: f64) -> f64 {
        if t >= self.f0 {
            0.0
        } else {
            phi_at(&self.phi, self.marginal.quantile_upper(t))
        }
    }

    /// `h(t) = ∫_0^t w`, through the quantile coupling:
    /// `E[φ(X); X < q] + φ(q)(t - F(q-))` with `q = F←(t)`.
    pub fn h(&self, t: f64) -> f64 {
        h_of(&self.marginal, &self.phi, self.f0, t)
    }

    pub fn lower(&self, i: usize, x: f64) -> f64 {
        let b = &self.brackets[i];
        if x <= b.lo && b.lo > 0.0 {
            b.lower_level
        } else {
            0.0
        }
    }

    pub fn upper(&self, i: usize, x: f64) -> f64 {
        let b = &self.brackets[i];
        if x <= b.lo {
            if b.lo > 0.0 {
                b.upper_level
            } else {
                0.0
            }
        } else if x <= b.hi {
            self.weight(x)
        } else {
            0.0
        }
    }

    /// `∫ u_i` over `[0, 1]`.
    pub fn upper_integral(&self, i: usize) -> f64 {
        let b = &self.brackets[i];
        let head = if b.lo > 0.0 {
            b.upper_level * b.lo
        } else {
            0.0
        };
        head + self.h(b.hi) - self.h(b.lo)
    }

    /// `∫ l_i` over `[0, 1]`.
    pub fn lower_integral(&self, i: usize) -> f64 {
        let b = &self.brackets[i];
        if b.lo > 0.0 {
            b.lower_level * b.lo
        } else {
            0.0
        }
    }

    /// Checks `∫(u - l) <= ε` (up to `1e-8`) for every bracket, comparing
    /// the stored width with the two integrals.
    pub fn check_widths(&self) -> Result<()> {
        for (i, b) in self.brackets.iter().enumerate() {
            let w = self.upper_integral(i) - self.lower_integral(i);
            if (w - b.width).abs() > WIDTH_TOL || w > self.eps + WIDTH_TOL {
                return Err(Error::Invariant(format!(
                    "bracket {i} on ({}, {}] has width {w} > {}",
                    b.lo, b.hi, self.eps
                )));
            }
        }
        if self.brackets.len() > self.s_grid.len() - 1 + self.y_grid.len() {
            return Err(Error::Invariant("more brackets than grid cells".into()));
        }
        Ok(())
    }

    /// Index of the bracket whose cell contains `s` (`0 < s <= 1`).
    pub fn bracket_for(&self, s: f64) -> Option<usize> {
        self.brackets.iter().position(|b| b.lo < s && s <= b.hi)
    }

    /// Checks pointwise `l_i <= w_s <= u_i` for the bracket containing each
    /// `s`, on a probe set made of the grid, `s` itself and a uniform mesh.
    pub fn check_coverage(&self, s_points: &[f64]) -> Result<()> {
        let mut probes: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        probes.extend(self.t_grid.iter().copied());
        probes.extend(self.t_grid.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        for &s in s_points {
            let i = self
                .bracket_for(s)
                .ok_or_else(|| Error::Invariant(format!("no bracket contains s = {s}")))?;
            let level = self.weight(s);
            let mut local = probes.clone();
            local.extend([s, s * (1.0 - 1e-12), (s * (1.0 + 1e-12)).min(1.0)]);
            for &x in &local {
                let ws = if x <= s { level } else { 0.0 };
                let (l, u) = (self.lower(i, x), self.upper(i, x));
                if x > 0.0 && !(l <= ws && ws <= u) {
                    return Err(Error::Invariant(format!(
                        "w_s for s = {s} leaves bracket {i} at {x}: {l} <= {ws} <= {u} fails"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The right-hand side of the bracketing domination
    /// `max_i max{∫u_i d(Ĝ - I), ∫l_i d(I - Ĝ)} + ε` for the empirical law
    /// `Ĝ` of `uniforms`.
    pub fn domination_rhs(&self, uniforms: &[f64]) -> f64 {
        let n = uniforms.len() as f64;
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.brackets.len() {
            let emp_u = uniforms.iter().map(|&x| self.upper(i, x)).sum::<f64>() / n;
            let emp_l = uniforms.iter().map(|&x| self.lower(i, x)).sum::<f64>() / n;
            best = best
                .max(emp_u - self.upper_integral(i))
                .max(self.lower_integral(i) - emp_l);
        }
        best + self.eps
    }
}

/// Both sides of the sample-wise bracketing domination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domination {
    /// `sup_{y<=0} |F̂_n(y) - F(y)| φ(y)`.
    pub lhs: f64,
    pub rhs: f64,
}

impl Domination {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-9
    }
}

impl BracketFamily {
    /// Evaluates both sides for one sample, with `Ĝ` built from the
    /// quantile transformation of the sample (auxiliary randomness from
    /// `seed`).
    pub fn domination(&self, sample: &[f64], seed: u64) -> Result<Domination> {
        let emp = EmpiricalMeasure::from_slice(sample)?;
        let uniforms = quantile_transform(&emp, &self.marginal, seed)?;
        let lhs = kolmogorov_phi_below(
            &Distribution::from_measure(emp),
            &self.marginal,
            &self.phi,
            0.0,
        )?;
        Ok(Domination {
            lhs,
            rhs: self.domination_rhs(&uniforms),
        })
    }
}

fn h_of(mu: &Distribution, phi: &GaugeFunction, f0: f64, t: f64) -> f64 {
    let t = t.min(f0);
    if t <= 0.0 {
        return 0.0;
    }
    let Some(q) = mu.quantile(t).finite() else {
        return 0.0;
    };
    let below = mu.expect(|y| if y < q { phi.eval(y) } else { 0.0 }, &[q, 0.0]);
    below + phi.eval(q) * (t - mu.cdf_left(q))
}

/// `Φ(y) = ∫_0^1 min(y, w(s)) ds = E[min(y, φ(X)); X <= 0]`.
fn capped_mass(mu: &Distribution, phi: &GaugeFunction, y: f64) -> f64 {
    let mut cuts = vec![0.0];
    if let Some(c) = phi.negative_inverse(y) {
        cuts.push(c);
    }
    mu.expect(|x| if x <= 0.0 { y.min(phi.eval(x)) } else { 0.0 }, &cuts)
}

/// `∫_{(-∞,0]} φ 1{φ >= K} dμ`.
fn negative_tail_moment(mu: &Distribution, phi: &GaugeFunction, k: f64) -> f64 {
    match phi.level_radius(k) {
        None => 0.0,
        Some(r) => mu.expect(
            |x| {
                if x <= -r && x <= 0.0 {
                    phi.eval(x)
                } else {
                    0.0
                }
            },
            &[-r, 0.0],
        ),
    }
}

/// Right-continuous inverse `w→(y) = sup{s : w(s) > y}`.
fn weight_inverse(mu: &Distribution, phi: &GaugeFunction, f0: f64, y: f64) -> f64 {
    if y < phi.eval(0.0) {
        return f0;
    }
    match phi.negative_inverse(y) {
        None => 0.0,
        Some(c) => mu.cdf_left(c).min(f0),
    }
}

/// Greedy left-to-right grid on `[0, end]`: each next point is the largest
/// one whose increment of the nondecreasing `g` stays within `budget`.
fn greedy_grid<G: Fn(f64) -> f64>(g: G, end: f64, budget: f64) -> Result<Vec<f64>> {
    // a relative slack absorbs quadrature noise in g without visibly
    // exceeding the budget
    let budget = budget * (1.0 + 1e-10);
    let mut grid = vec![0.0];
    let mut cur = 0.0;
    let top = g(end);
    while cur < end {
        let base = g(cur);
        if top - base <= budget {
            grid.push(end);
            break;
        }
        let (next, _) =
            bisect_boundary(|x| g(x) - base <= budget, cur, end, GRID_TOL * end.max(1.0));
        if next <= cur {
            return Err(Error::Invariant(format!(
                "grid construction stalled at {cur}"
            )));
        }
        grid.push(next);
        cur = next;
        if grid.len() > 1_000_000 {
            return Err(Error::Invariant("grid too fine".into()));
        }
    }
    Ok(grid)
}

/// Builds ε-brackets for the weighted indicators of one marginal:
/// an `s`-grid with `h` increments at most `ε/2`, a level `K` with
/// negative-half-line tail φ-moment at most `ε/2`, a level grid on `[0, K]`
/// whose slices of `∫ min(y, w)` are at most `ε/2`, and one bracket per cell
/// of the merged grid.
pub fn build_brackets(
    marginal: &Distribution,
    phi: &GaugeFunction,
    eps: f64,
) -> Result<BracketFamily> {
    phi.require(GaugeRole::UShaped)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let f0 = marginal.cdf(0.0);
    let total = h_of(marginal, phi, f0, f0);
    if !total.is_finite() || negative_tail_moment(marginal, phi, phi.eval(0.0)) > 1e15 {
        return Err(Error::NotInGaugeClass(format!(
            "{} has an infinite {phi}-moment on the negative half-line",
            marginal.describe()
        )));
    }
    let half = 0.5 * eps;
    let s_grid = greedy_grid(|t| h_of(marginal, phi, f0, t), 1.0, half)?;

    // smallest K (up to relative 1e-9) with tail moment <= eps/2
    let base = phi.eval(0.0);
    let mut hi = base;
    while negative_tail_moment(marginal, phi, hi) > half {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NotInGaugeClass("tail moment does not vanish".into()));
        }
    }
    let k_level = if hi == base {
        base
    } else {
        bisect_boundary(
            |k| negative_tail_moment(marginal, phi, k) > half,
            hi / 2.0,
            hi,
            1e-9 * hi,
        )
        .1
    };
    let y_grid = greedy_grid(|y| capped_mass(marginal, phi, y), k_level, half)?;

    let mut t_grid: Vec<f64> = s_grid.clone();
    t_grid.extend(y_grid.iter().map(|&y| weight_inverse(marginal, phi, f0, y)));
    t_grid.push(0.0);
    t_grid.push(1.0);
    t_grid.retain(|t| (0.0..=1.0).contains(t));
    t_grid.sort_by(f64::total_cmp);
    t_grid.dedup();

    let mut family = BracketFamily {
        marginal: marginal.clone(),
        phi: *phi,
        eps,
        f0,
        s_grid,
        y_grid,
        t_grid: t_grid.clone(),
        brackets: Vec::with_capacity(t_grid.len()),
    };
    for w in t_grid.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let lower_level = family.weight(hi);
        let upper_level = if lo > 0.0 {
            family.weight_right(lo)
        } else {
            0.0
        };
        let head = if lo > 0.0 {
            (upper_level - lower_level) * lo
        } else {
            0.0
        };
        let width = head + family.h(hi) - family.h(lo);
        family.brackets.push(Bracket {
            lo,
            hi,
            lower_level,
            upper_level,
            width,
        });
    }
    Ok(family)
}

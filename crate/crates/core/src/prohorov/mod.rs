//! Exact Prohorov distance and Strassen couplings between finitely supported
//! laws, decided by maximum flow.

mod flow;

use std::sync::Arc;

use flow::FlowNetwork;

use crate::error::{Error, Result};

/// Probability mass is moved in integer units of `2^-50`.
const UNITS: i64 = 1 << 50;
const UNIT: f64 = 1.0 / UNITS as f64;
/// Slack for comparing transported mass against `1 - eps`; covers the
/// rounding of weights to units.
const MASS_TOL: f64 = 1e-11;
const STOP_WIDTH: f64 = 1e-10;

/// A finite metric space given by its distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    dist: Vec<Vec<f64>>,
}

impl MetricSpace {
    /// Validates symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality (up to `1e-12`).
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invariant(format!(
                    "distance matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(Error::Invariant(format!(
                    "distance matrix diagonal entry {i} is not zero"
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !(d.is_finite() && d >= 0.0) || d != dist[j][i] {
                    return Err(Error::Invariant(format!(
                        "distance ({i},{j}) is negative or asymmetric"
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + 1e-12 {
                        return Err(Error::Invariant(format!(
                            "triangle inequality fails at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(Self { dist })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Support {
    Real(Vec<f64>),
    Points(Arc<MetricSpace>),
}

/// A probability law with finitely many atoms, either on the real line or on
/// the points of a shared [`MetricSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    support: Support,
    weights: Vec<f64>,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Invariant(
            "finite law needs at least one atom".into(),
        ));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Invariant(format!(
            "weight {i} is negative or not finite"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Invariant(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

impl FiniteLaw {
    pub fn on_real_line(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Invariant(
                "points and weights differ in length".into(),
            ));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invariant(format!("point {i} is not finite")));
        }
        check_weights(&weights)?;
        Ok(Self {
            support: Support::Real(points),
            weights,
        })
    }

    /// Equal weights on a sample (the empirical law of the sample).
    pub fn empirical(sample: &[f64]) -> Result<Self> {
        let w = 1.0 / sample.len().max(1) as f64;
        let mut weights = vec![w; sample.len()];
        if let Some(last) = weights.last_mut() {
            *last = 1.0 - w * (sample.len() - 1) as f64;
        }
        Self::on_real_line(sample.to_vec(), weights)
    }

    /// A law over all points of `space`, `weights[i]` on point `i`.
    pub fn on_space(space: Arc<MetricSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Invariant(
                "one weight per point of the space is required".into(),
            ));
        }
        check_weights(&weights)?;
        Ok(Self {
            support: Support::Points(space),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Real-line locations, if the law lives on the real line.
    pub fn points(&self) -> Option<&[f64]> {
        match &self.support {
            Support::Real(p) => Some(p),
            Support::Points(_) => None,
        }
    }

    fn units(&self) -> Vec<i64> {
        let mut acc = 0.0;
        let mut prev = 0i64;
        let n = self.weights.len();
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                acc += w;
                let cum = if i + 1 == n {
                    UNITS
                } else {
                    ((acc * UNITS as f64).round() as i64).min(UNITS)
                };
                let u = (cum - prev).max(0);
                prev = prev.max(cum);
                u
            })
            .collect()
    }
}

fn pair_distance(a: &FiniteLaw, i: usize, b: &FiniteLaw, j: usize) -> f64 {
    match (&a.support, &b.support) {
        (Support::Real(x), Support::Real(y)) => (x[i] - y[j]).abs(),
        (Support::Points(s), Support::Points(_)) => s.distance(i, j),
        _ => unreachable!("compatibility checked before transport"),
    }
}

fn check_compatible(a: &FiniteLaw, b: &FiniteLaw) -> Result<()> {
    match (&a.support, &b.support) {
        (Support::Real(_), Support::Real(_)) => Ok(()),
        (Support::Points(s), Support::Points(t)) if Arc::ptr_eq(s, t) || s == t => Ok(()),
        _ => Err(Error::Invariant("laws live on different spaces".into())),
    }
}

/// A joint law on pairs of atoms, stored sparsely as `(i, j, mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, w) in &self.entries {
            m[i][j] += w;
        }
        m
    }

    /// Checks nonnegativity and that the marginals match within `tol`.
    pub fn check_marginals(&self, mu1: &FiniteLaw, mu2: &FiniteLaw, tol: f64) -> Result<()> {
        let mut r = vec![0.0; self.rows];
        let mut c = vec![0.0; self.cols];
        for &(i, j, w) in &self.entries {
            if w < 0.0 {
                return Err(Error::Invariant(format!(
                    "negative coupling mass at ({i},{j})"
                )));
            }
            r[i] += w;
            c[j] += w;
        }
        for (i, (a, b)) in r.iter().zip(mu1.weights()).enumerate() {
            if (a - b).abs() > tol {
                return Err(Error::Invariant(format!(
                    "row {i} sums to {a}, expected {b}"
                )));
            }
        }
        for (j, (a, b)) in c.iter().zip(mu2.weights()).enumerate() {
            if (a - b).abs() > tol {
                return Err(Error::Invariant(format!(
                    "column {j} sums to {a}, expected {b}"
                )));
            }
        }
        Ok(())
    }

    /// Mass on pairs at distance at most `delta`.
    pub fn mass_within(&self, mu1: &FiniteLaw, mu2: &FiniteLaw, delta: f64) -> f64 {
        self.entries
            .iter()
            .filter(|&&(i, j, _)| pair_distance(mu1, i, mu2, j) <= delta)
            .map(|e| e.2)
            .sum()
    }
}

/// Transport of as much mass as possible along pairs at distance `<= delta`.
struct Transport {
    moved: i64,
    flows: Vec<(usize, usize, i64)>,
}

fn max_close_transport(
    mu1: &FiniteLaw,
    mu2: &FiniteLaw,
    delta: f64,
    want_flows: bool,
) -> Transport {
    match (&mu1.support, &mu2.support) {
        (Support::Real(x), Support::Real(y)) => {
            line_transport(x, &mu1.units(), y, &mu2.units(), delta, want_flows)
        }
        _ => network_transport(mu1, mu2, delta),
    }
}

/// On the line the admissible targets of a point `x` form the window
/// `[x - δ, x + δ]`, and both window ends grow with `x`. Serving sources in
/// increasing order, each from the leftmost target with mass left, is then a
/// maximum flow: any unit a later source could take from a more-left target
/// is also reachable for it further right (checked against Dinic's algorithm
/// in the tests).
fn line_transport(
    x: &[f64],
    ux: &[i64],
    y: &[f64],
    uy: &[i64],
    delta: f64,
    want_flows: bool,
) -> Transport {
    let mut xs: Vec<usize> = (0..x.len()).collect();
    xs.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<usize> = (0..y.len()).collect();
    ys.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let mut left: Vec<i64> = ys.iter().map(|&j| uy[j]).collect();
    let mut p = 0usize;
    let mut moved = 0i64;
    let mut flows = Vec::new();
    for &i in &xs {
        let mut need = ux[i];
        // targets left of the window, or already exhausted, never serve again
        while p < ys.len() && (y[ys[p]] < x[i] - delta || left[p] == 0) {
            p += 1;
        }
        let mut q = p;
        while need > 0 && q < ys.len() && y[ys[q]] <= x[i] + delta {
            if left[q] > 0 {
                let take = need.min(left[q]);
                left[q] -= take;
                need -= take;
                moved += take;
                if want_flows {
                    flows.push((i, ys[q], take));
                }
            }
            q += 1;
        }
    }
    Transport { moved, flows }
}

fn network_transport(mu1: &FiniteLaw, mu2: &FiniteLaw, delta: f64) -> Transport {
    let (n1, n2) = (mu1.len(), mu2.len());
    let (source, sink) = (n1 + n2, n1 + n2 + 1);
    let mut g = FlowNetwork::new(n1 + n2 + 2);
    let u1 = mu1.units();
    let u2 = mu2.units();
    for (i, &u) in u1.iter().enumerate() {
        g.add_edge(source, i, u);
    }
    for (j, &u) in u2.iter().enumerate() {
        g.add_edge(n1 + j, sink, u);
    }
    let mut pair_edges = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            if pair_distance(mu1, i, mu2, j) <= delta {
                pair_edges.push((i, j, g.add_edge(i, n1 + j, UNITS)));
            }
        }
    }
    let moved = g.max_flow(source, sink);
    let flows = pair_edges
        .into_iter()
        .map(|(i, j, e)| (i, j, g.flow_on(e)))
        .filter(|f| f.2 > 0)
        .collect();
    Transport { moved, flows }
}

/// Largest mass a coupling of `mu1` and `mu2` can put on pairs at distance
/// at most `delta`.
pub fn max_close_mass(mu1: &FiniteLaw, mu2: &FiniteLaw, delta: f64) -> Result<f64> {
    check_compatible(mu1, mu2)?;
    Ok(max_close_transport(mu1, mu2, delta, false).moved as f64 * UNIT)
}

/// Strassen feasibility: a coupling with mass at least `1 - eps` on pairs at
/// distance at most `delta`, or `None` when none exists (equivalently, some
/// set `A` has `μ1[A] > μ2[A^δ] + eps`).
pub fn strassen_feasible(
    mu1: &FiniteLaw,
    mu2: &FiniteLaw,
    delta: f64,
    eps: f64,
) -> Result<Option<Coupling>> {
    check_compatible(mu1, mu2)?;
    if !(delta >= 0.0 && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta and eps must be >= 0, got ({delta}, {eps})"
        )));
    }
    let t = max_close_transport(mu1, mu2, delta, true);
    if (t.moved as f64) * UNIT < 1.0 - eps - MASS_TOL {
        return Ok(None);
    }
    Ok(Some(complete_coupling(mu1, mu2, &t)))
}

/// Turns a partial transport into a full coupling: unit flows become masses
/// and the leftover mass is paired greedily (north-west corner).
fn complete_coupling(mu1: &FiniteLaw, mu2: &FiniteLaw, t: &Transport) -> Coupling {
    let (n1, n2) = (mu1.len(), mu2.len());
    let mut row_left: Vec<f64> = mu1.weights().to_vec();
    let mut col_left: Vec<f64> = mu2.weights().to_vec();
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(t.flows.len() + n1 + n2);
    for &(i, j, u) in &t.flows {
        let w = (u as f64 * UNIT).min(row_left[i]).min(col_left[j]);
        row_left[i] -= w;
        col_left[j] -= w;
        entries.push((i, j, w));
    }
    let (mut i, mut j) = (0, 0);
    while i < n1 && j < n2 {
        let w = row_left[i].min(col_left[j]).max(0.0);
        if w > 0.0 {
            entries.push((i, j, w));
            row_left[i] -= w;
            col_left[j] -= w;
        }
        if row_left[i] <= col_left[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Coupling {
        rows: n1,
        cols: n2,
        entries,
    }
}

/// Prohorov distance `inf{ε : strassen_feasible(μ1, μ2, ε, ε)}`, by
/// bisection on `[0, 1]` until the bracket is narrower than `1e-10`.
pub fn prohorov_distance(mu1: &FiniteLaw, mu2: &FiniteLaw) -> Result<f64> {
    check_compatible(mu1, mu2)?;
    let feasible =
        |e: f64| max_close_transport(mu1, mu2, e, false).moved as f64 * UNIT >= 1.0 - e - MASS_TOL;
    if feasible(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        if hi - lo < STOP_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

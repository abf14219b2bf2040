//! ARMA characteristic polynomials, MA(∞) coefficients and power-series
//! inversion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance for roots on the unit circle and for common roots.
pub const ROOT_TOL: f64 = 1e-9;
/// Largest polynomial degree handled by the root finder.
pub const MAX_DEGREE: usize = 8;

/// Roots of `c[0] + c[1] z + ... + c[d] z^d` as `(re, im)` pairs, from the
/// eigenvalues of the companion matrix. Trailing zero coefficients are
/// dropped; a constant polynomial has no roots.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let d = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    if d == 0 {
        return Ok(Vec::new());
    }
    if d > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "polynomial degree {d} exceeds the supported {MAX_DEGREE}"
        )));
    }
    let lead = coeffs[d];
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -coeffs[i] / lead;
    }
    Ok(companion
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect())
}

fn modulus(z: (f64, f64)) -> f64 {
    z.0.hypot(z.1)
}

/// Outcome of the causality and invertibility check, with every root found.
#[derive(Debug, Clone, PartialEq)]
pub struct RootReport {
    /// Roots of `φ(z) = 1 - Σ φ_s z^s`.
    pub ar_roots: Vec<(f64, f64)>,
    /// Roots of `θ(z) = 1 + Σ θ_s z^s`.
    pub ma_roots: Vec<(f64, f64)>,
    /// One message per failed condition; empty when the check passes.
    pub problems: Vec<String>,
}

impl RootReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(self.problems.join("; ")))
        }
    }
}

/// `φ(z) = 1 - Σ φ_s z^s` as a coefficient vector.
pub fn ar_polynomial(phi: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(phi.iter().map(|p| -p)).collect()
}

/// `θ(z) = 1 + Σ θ_s z^s` as a coefficient vector.
pub fn ma_polynomial(theta: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(theta.iter().copied()).collect()
}

/// Passes iff all roots of `φ(z)` and `θ(z)` lie strictly outside the
/// closed unit disk and the two polynomials share no root (tolerance
/// `1e-9`). Never fails; problems are reported in the result.
pub fn causality_invertibility_check(phi: &[f64], theta: &[f64]) -> RootReport {
    let mut problems = Vec::new();
    if phi.iter().chain(theta).any(|c| !c.is_finite()) {
        problems.push("coefficients must be finite".to_string());
        return RootReport {
            ar_roots: Vec::new(),
            ma_roots: Vec::new(),
            problems,
        };
    }
    let mut roots = |coeffs: Vec<f64>, name: &str| match polynomial_roots(&coeffs) {
        Ok(r) => r,
        Err(e) => {
            problems.push(format!("{name} polynomial: {e}"));
            Vec::new()
        }
    };
    let ar_roots = roots(ar_polynomial(phi), "autoregressive");
    let ma_roots = roots(ma_polynomial(theta), "moving-average");
    for &(re, im) in &ar_roots {
        if modulus((re, im)) <= 1.0 + ROOT_TOL {
            problems.push(format!(
                "not causal: autoregressive root {re}{im:+}i lies in the closed unit disk"
            ));
        }
    }
    for &(re, im) in &ma_roots {
        if modulus((re, im)) <= 1.0 + ROOT_TOL {
            problems.push(format!(
                "not invertible: moving-average root {re}{im:+}i lies in the closed unit disk"
            ));
        }
    }
    for &a in &ar_roots {
        for &m in &ma_roots {
            if modulus((a.0 - m.0, a.1 - m.1)) <= ROOT_TOL * modulus(a).max(1.0) {
                problems.push(format!(
                    "common root {}{:+}i of the autoregressive and moving-average polynomials",
                    a.0, a.1
                ));
            }
        }
    }
    RootReport {
        ar_roots,
        ma_roots,
        problems,
    }
}

/// Coefficients of `θ(z)/φ(z)` by the recursion
/// `a_s = θ_s + Σ_{j=1..min(s,p)} φ_j a_{s-j}`, without any root check.
pub(crate) fn arma_recursion(phi: &[f64], theta: &[f64], s_max: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(s_max + 1);
    for s in 0..=s_max {
        let mut v = if s == 0 {
            1.0
        } else {
            theta.get(s - 1).copied().unwrap_or(0.0)
        };
        for (j, p) in phi.iter().enumerate().take(s) {
            v += p * a[s - j - 1];
        }
        a.push(v);
    }
    a
}

/// MA(∞) coefficients `a_0..a_{s_max}` of a causal, invertible ARMA model.
pub fn arma_ma_coeffs(phi: &[f64], theta: &[f64], s_max: usize) -> Result<Vec<f64>> {
    causality_invertibility_check(phi, theta).into_result()?;
    Ok(arma_recursion(phi, theta, s_max))
}

/// Coefficients `b_0..b_{s_max}` of `1 / Σ a_s z^s`, so that
/// `Σ_{j<=s} a_j b_{s-j} = [s = 0]`.
pub fn invert_power_series(a: &[f64], s_max: usize) -> Result<Vec<f64>> {
    let a0 = a.first().copied().unwrap_or(0.0);
    if a0 == 0.0 || !a0.is_finite() {
        return Err(Error::InvalidParameter(
            "power series with zero constant term cannot be inverted".into(),
        ));
    }
    let mut b = Vec::with_capacity(s_max + 1);
    b.push(1.0 / a0);
    for s in 1..=s_max {
        let conv: f64 = (1..=s.min(a.len() - 1)).map(|j| a[j] * b[s - j]).sum();
        b.push(-conv / a0);
    }
    Ok(b)
}

/// Absolute coefficient sums with a certified geometric remainder: the
/// exact values `|c_s|` for `s < head.len()` and `|c_s| <= c ρ^(s - start)`
/// beyond.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Envelope {
    head: Vec<f64>,
    c: f64,
    rho: f64,
}

const ENVELOPE_TARGET: f64 = 1e-15;
const MAX_HEAD: usize = 100_000;
const MAX_POWER: usize = 100_000;

impl Envelope {
    /// Bounds the coefficients of `θ(z)/φ(z)`. Past index `q` the state
    /// vector `(c_s, ..., c_{s-p+1})` evolves by the companion matrix `C`;
    /// with `‖C^K‖ = γ <= 1/2` and `B = max_{j<K} ‖C^j‖` every later
    /// coefficient is at most `(B/γ) γ^{m/K} ‖state‖` after `m` steps.
    pub(crate) fn arma(phi: &[f64], theta: &[f64]) -> Result<Self> {
        let p = phi.len();
        let q = theta.len();
        if p == 0 {
            let head = arma_recursion(phi, theta, q)
                .iter()
                .map(|x| x.abs())
                .collect();
            return Ok(Self {
                head,
                c: 0.0,
                rho: 0.0,
            });
        }
        let norm = |m: &DMatrix<f64>| {
            m.row_iter()
                .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let mut companion = DMatrix::<f64>::zeros(p, p);
        for (j, v) in phi.iter().enumerate() {
            companion[(0, j)] = *v;
        }
        for i in 1..p {
            companion[(i, i - 1)] = 1.0;
        }
        let mut power = DMatrix::<f64>::identity(p, p);
        let mut big: f64 = 1.0;
        let mut k = 0;
        let gamma = loop {
            power = &companion * &power;
            k += 1;
            let g = norm(&power);
            if g <= 0.5 {
                break g;
            }
            big = big.max(g);
            if k >= MAX_POWER || !g.is_finite() {
                return Err(Error::InvalidParameter(
                    "autoregressive roots too close to the unit circle for a certified tail".into(),
                ));
            }
        };
        if gamma == 0.0 {
            // nilpotent companion: coefficients vanish after q + p steps
            let head = arma_recursion(phi, theta, q + p)
                .iter()
                .map(|x| x.abs())
                .collect();
            return Ok(Self {
                head,
                c: 0.0,
                rho: 0.0,
            });
        }
        let rho = gamma.powf(1.0 / k as f64);
        let factor = big / gamma;
        let mut coeffs = arma_recursion(phi, theta, q.max(p));
        let mut start = q.max(p - 1);
        loop {
            let state = (0..p)
                .map(|i| {
                    if start >= i {
                        coeffs[start - i].abs()
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            let c = factor * state;
            if c / ((1.0 - rho) * (1.0 - rho)) <= ENVELOPE_TARGET || start >= MAX_HEAD {
                let head = coeffs[..start].iter().map(|x| x.abs()).collect();
                return Ok(Self { head, c, rho });
            }
            start += 1;
            while coeffs.len() <= start {
                let s = coeffs.len();
                let v: f64 = phi
                    .iter()
                    .enumerate()
                    .map(|(j, f)| f * coeffs[s - j - 1])
                    .sum::<f64>()
                    + theta.get(s - 1).copied().unwrap_or(0.0);
                coeffs.push(v);
            }
        }
    }

    fn start(&self) -> usize {
        self.head.len()
    }

    /// Upper bound on `Σ_{s>=n} |c_s|`.
    pub(crate) fn tail_sum(&self, n: usize) -> f64 {
        let s0 = self.start();
        let geo = self.c / (1.0 - self.rho);
        if n < s0 {
            self.head[n..].iter().sum::<f64>() + geo
        } else {
            geo * self.rho.powi((n - s0) as i32)
        }
    }

    /// Upper bound on `Σ_{u>=n} Σ_{s>=u} |c_s| = Σ_{s>=n} (s-n+1)|c_s|`.
    pub(crate) fn tail_double_sum(&self, n: usize) -> f64 {
        let s0 = self.start();
        let r = self.rho;
        if n < s0 {
            let exact: f64 = self.head[n..]
                .iter()
                .enumerate()
                .map(|(k, v)| (k + 1) as f64 * v)
                .sum();
            exact + self.c * ((s0 - n + 1) as f64 / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)))
        } else {
            self.c * r.powi((n - s0) as i32) / ((1.0 - r) * (1.0 - r))
        }
    }
}

use super::ExtReal;
use crate::numeric::bisect_boundary;

const INVERSE_TOL: f64 = 1e-12;

/// Left-continuous inverse `inf{y in [lo, hi] : f(y) >= t}` of a
/// nondecreasing function, searched by bisection on the bracket `[lo, hi]`.
///
/// Returns `PosInf` when `f(hi) < t` (the set is empty on the bracket) and
/// `lo` when already `f(lo) >= t`.
pub fn left_inverse<F: Fn(f64) -> f64>(f: F, t: f64, lo: f64, hi: f64) -> ExtReal {
    if !(f(hi) >= t) {
        return ExtReal::PosInf;
    }
    if f(lo) >= t {
        return ExtReal::Finite(lo);
    }
    let (_, first) = bisect_boundary(
        |y| f(y) < t,
        lo,
        hi,
        INVERSE_TOL * (1.0 + hi.abs().max(lo.abs())),
    );
    ExtReal::Finite(first)
}

/// Right-continuous inverse `sup{y in [0, upper] : h(y) > t}` of a
/// nonincreasing function on the half-line; zero when the set is empty.
pub fn right_inverse<H: Fn(f64) -> f64>(h: H, t: f64, upper: f64) -> f64 {
    if !(h(0.0) > t) {
        return 0.0;
    }
    if h(upper) > t {
        return upper;
    }
    let (last, _) = bisect_boundary(|y| h(y) > t, 0.0, upper, INVERSE_TOL * (1.0 + upper.abs()));
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;

    #[test]
    fn left_inverse_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let q = left_inverse(|y| u.cdf(y), 0.3, -1.0, 2.0).finite().unwrap();
        assert!((q - 0.3).abs() < 1e-11);
        let d = Distribution::uniform_on(&[1.0, 2.0, 3.0]).unwrap();
        let q = left_inverse(|y| d.cdf(y), 0.5, 0.0, 4.0).finite().unwrap();
        assert!((q - 2.0).abs() < 1e-11);
        assert_eq!(
            left_inverse(|y: f64| 0.9 * y.clamp(0.0, 1.0), 0.95, -1.0, 10.0),
            ExtReal::PosInf
        );
    }

    #[test]
    fn right_inverse_examples() {
        let v = right_inverse(|y: f64| (1.0 - y).max(0.0), 0.4, 10.0);
        assert!((v - 0.6).abs() < 1e-11);
        assert_eq!(right_inverse(|_| 0.0, 0.0, 10.0), 0.0);
        let p = Distribution::point_mass(2.0).unwrap();
        let v = right_inverse(|y| p.abs_survival(y), 0.5, 10.0);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_closed_form_quantiles() {
        let g = Distribution::gaussian(1.0, 2.0).unwrap();
        for k in 1..50 {
            let t = k as f64 / 50.0;
            let q = left_inverse(|y| g.cdf(y), t, -80.0, 80.0).finite().unwrap();
            assert!((q - g.quantile(t).finite().unwrap()).abs() < 1e-9);
        }
    }
}

use crate::error::{Error, Result};

use super::ExtReal;

/// The empirical measure of a finite sample: mass `1/n` at every observation.
///
/// Observations are kept in their original order (the quantile transform
/// needs it) next to a sorted copy used for CDF evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    observations: Vec<f64>,
    sorted: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Domain(
                "empirical measure needs at least one observation".into(),
            ));
        }
        if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("observation {i} is not finite")));
        }
        let mut sorted = sample.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            observations: sample,
            sorted,
        })
    }

    pub fn from_slice(sample: &[f64]) -> Result<Self> {
        Self::new(sample.to_vec())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Observations in the order they were supplied.
    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// The `k`-th order statistic, 1-based.
    pub fn order_statistic(&self, k: usize) -> Option<f64> {
        if k == 0 {
            None
        } else {
            self.sorted.get(k - 1).copied()
        }
    }

    pub(crate) fn count_le(&self, y: f64) -> usize {
        self.sorted.partition_point(|&x| x <= y)
    }

    pub(crate) fn count_lt(&self, y: f64) -> usize {
        self.sorted.partition_point(|&x| x < y)
    }

    pub(crate) fn frac(&self, k: usize) -> f64 {
        k as f64 / self.sorted.len() as f64
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.frac(self.count_le(y))
    }

    pub fn cdf_left(&self, y: f64) -> f64 {
        self.frac(self.count_lt(y))
    }

    /// Lower quantile `inf{y : F(y) >= t}`; at `t = k/n` this is the `k`-th
    /// order statistic.
    pub fn quantile(&self, t: f64) -> ExtReal {
        let n = self.sorted.len();
        if t.is_nan() || t > 1.0 {
            return ExtReal::PosInf;
        }
        if t <= 0.0 {
            return ExtReal::NegInf;
        }
        // smallest k in 1..=n with k/n >= t
        let k = self.first_k(|k| self.frac(k) >= t);
        if k > n {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(self.sorted[k - 1])
        }
    }

    /// Upper quantile `inf{y : F(y) > t}`.
    pub fn quantile_upper(&self, t: f64) -> ExtReal {
        let n = self.sorted.len();
        if t.is_nan() || t >= 1.0 {
            return ExtReal::PosInf;
        }
        if t < 0.0 {
            return ExtReal::NegInf;
        }
        let k = self.first_k(|k| self.frac(k) > t);
        if k > n {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(self.sorted[k - 1])
        }
    }

    /// Smallest `k` in `1..=n` satisfying a monotone predicate, or `n + 1`.
    fn first_k<P: Fn(usize) -> bool>(&self, pred: P) -> usize {
        let (mut lo, mut hi) = (1, self.sorted.len() + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pred(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// Distinct support points with their masses, in increasing order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < self.sorted.len() {
            let x = self.sorted[i];
            let j = i + self.sorted[i..].partition_point(|&v| v <= x);
            out.push((x, (j - i) as f64 / n));
            i = j;
        }
        out
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_is_k_over_n_at_order_statistics() {
        let m = EmpiricalMeasure::new(vec![3.0, -1.0, 2.5, 0.0, 7.0]).unwrap();
        for k in 1..=5 {
            let x = m.order_statistic(k).unwrap();
            assert_eq!(m.cdf(x), k as f64 / 5.0);
            assert_eq!(m.quantile(k as f64 / 5.0), ExtReal::Finite(x));
        }
        assert_eq!(m.cdf(-2.0), 0.0);
        assert_eq!(m.cdf(100.0), 1.0);
    }

    #[test]
    fn ties_are_merged_into_atoms() {
        let m = EmpiricalMeasure::new(vec![1.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(m.atoms(), vec![(1.0, 0.75), (2.0, 0.25)]);
        assert_eq!(m.cdf_left(1.0), 0.0);
        assert_eq!(m.cdf(1.0), 0.75);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(EmpiricalMeasure::new(vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn thirds_are_exact() {
        // 1/3 computed as a float still picks the first order statistic
        let m = EmpiricalMeasure::new(vec![10.0, 20.0, 30.0]).unwrap();
        assert_eq!(m.quantile(1.0 / 3.0), ExtReal::Finite(10.0));
        assert_eq!(m.quantile(2.0 / 3.0), ExtReal::Finite(20.0));
        assert_eq!(m.quantile_upper(1.0 / 3.0), ExtReal::Finite(20.0));
    }
}

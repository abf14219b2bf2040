use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{Distribution, EmpiricalMeasure};
use crate::error::{Error, Result};

/// The quantile transformation: uniforms `U_i` with `F^{<-}(U_i) = x_i`.
///
/// Continuous points map to `F(x_i)`; a point sitting on an atom is spread
/// uniformly over `(F(x_i-), F(x_i)]` using a ChaCha stream seeded by `seed`.
/// The empirical CDF `G_n` of the output then satisfies `F_n = G_n ∘ F`.
pub fn quantile_transform(
    sample: &EmpiricalMeasure,
    marginal: &Distribution,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample
        .observations()
        .iter()
        .enumerate()
        .map(|(index, &x)| {
            let upper = marginal.cdf(x);
            let lower = marginal.cdf_left(x);
            if upper > lower {
                for _ in 0..64 {
                    let v: f64 = rng.random();
                    let u = lower + (upper - lower) * (1.0 - v);
                    if u > lower && u <= upper {
                        return Ok(u);
                    }
                }
                Ok(upper)
            } else if marginal.density(x) > 0.0 {
                Ok(upper)
            } else {
                Err(Error::OutsideSupport { index, value: x })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ExtReal;

    #[test]
    fn identity_on_uniform() {
        let s = EmpiricalMeasure::new(vec![0.2, 0.7]).unwrap();
        let u = quantile_transform(&s, &Distribution::uniform(0.0, 1.0).unwrap(), 1).unwrap();
        assert_eq!(u, vec![0.2, 0.7]);
    }

    #[test]
    fn point_mass_spreads_over_unit_interval() {
        let s = EmpiricalMeasure::new(vec![0.0; 3]).unwrap();
        let m = Distribution::point_mass(0.0).unwrap();
        let u = quantile_transform(&s, &m, 9).unwrap();
        for &ui in &u {
            assert!(ui > 0.0 && ui <= 1.0);
            assert_eq!(m.quantile(ui), ExtReal::Finite(0.0));
        }
    }

    #[test]
    fn gaussian_sample_satisfies_composition_identity() {
        let g = Distribution::gaussian(0.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let s = EmpiricalMeasure::new((0..50).map(|_| g.sample(&mut rng)).collect()).unwrap();
        let u = EmpiricalMeasure::new(quantile_transform(&s, &g, 4).unwrap()).unwrap();
        for k in 0..1000 {
            let y = -4.0 + 8.0 * k as f64 / 999.0;
            assert_eq!(s.cdf(y), u.cdf(g.cdf(y)));
        }
    }

    #[test]
    fn discrete_marginal_identity_and_determinism() {
        let d = Distribution::finite_discrete(vec![(-1.0, 0.3), (0.0, 0.2), (2.5, 0.5)]).unwrap();
        let s = EmpiricalMeasure::new(vec![2.5, -1.0, -1.0, 0.0, 2.5, 2.5]).unwrap();
        let u = quantile_transform(&s, &d, 77).unwrap();
        assert_eq!(u, quantile_transform(&s, &d, 77).unwrap());
        for (ui, &x) in u.iter().zip(s.observations()) {
            assert_eq!(d.quantile(*ui), ExtReal::Finite(x));
        }
        let g = EmpiricalMeasure::new(u).unwrap();
        for y in [-2.0, -1.0, -0.5, 0.0, 1.0, 2.5, 3.0] {
            assert_eq!(s.cdf(y), g.cdf(d.cdf(y)));
        }
    }

    #[test]
    fn names_offending_index() {
        let s = EmpiricalMeasure::new(vec![0.5, 3.0]).unwrap();
        let err = quantile_transform(&s, &Distribution::uniform(0.0, 1.0).unwrap(), 0).unwrap_err();
        assert_eq!(
            err,
            Error::OutsideSupport {
                index: 1,
                value: 3.0
            }
        );
    }
}

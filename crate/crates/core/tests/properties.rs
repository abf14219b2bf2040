use proptest::prelude::*;

use qualrob::distributions::Distribution;
use qualrob::metrics::{kolmogorov, kolmogorov_phi, levy, GaugeFunction};
use qualrob::processes::CoefficientSpec;
use qualrob::prohorov::{prohorov_distance, FiniteLaw};

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-20i32..=20, 1u32..=10), 1..8).prop_map(|raw| {
        let total: u32 = raw.iter().map(|a| a.1).sum();
        raw.into_iter()
            .map(|(x, w)| (x as f64 / 4.0, w as f64 / total as f64))
            .collect()
    })
}

fn finite(a: &[(f64, f64)]) -> FiniteLaw {
    let (p, w) = a.iter().copied().unzip();
    FiniteLaw::on_real_line(p, w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn levy_is_below_kolmogorov_and_weighting_only_increases(a in atoms(), b in atoms()) {
        let (mu, nu) = (Distribution::finite_discrete(a).unwrap(), Distribution::finite_discrete(b).unwrap());
        let k = kolmogorov(&mu, &nu);
        prop_assert!(levy(&mu, &nu) <= k + 1e-9);
        let weighted = kolmogorov_phi(&mu, &nu, &GaugeFunction::power(2.0).unwrap()).unwrap();
        prop_assert!(weighted >= k - 1e-12);
    }

    #[test]
    fn prohorov_is_symmetric_and_at_most_one(a in atoms(), b in atoms()) {
        let (p, q) = (finite(&a), finite(&b));
        let d = prohorov_distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - prohorov_distance(&q, &p).unwrap()).abs() <= 1e-9);
        prop_assert_eq!(prohorov_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn shifting_by_h_moves_prohorov_at_most_h(a in atoms(), shift in 0.0f64..0.9) {
        let moved: Vec<(f64, f64)> = a.iter().map(|&(x, w)| (x + shift, w)).collect();
        let d = prohorov_distance(&finite(&a), &finite(&moved)).unwrap();
        prop_assert!(d <= shift + 1e-9);
    }

    #[test]
    fn arma_series_inverts_its_coefficients(phi in -0.9f64..0.9, theta in -0.9f64..0.9) {
        prop_assume!((phi + theta).abs() >= 0.01);
        let spec = CoefficientSpec::arma(&[phi], &[theta]);
        let (a, b) = (spec.coefficients(40).unwrap(), spec.inverse_coefficients(40).unwrap());
        for s in 0..=40 {
            let conv: f64 = (0..=s).map(|k| a[k] * b[s - k]).sum();
            let unit = if s == 0 { 1.0 } else { 0.0 };
            prop_assert!((conv - unit).abs() < 1e-10);
        }
    }
}

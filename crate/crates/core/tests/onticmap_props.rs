mod common;

use common::{psd, psd_any};
use pcsft_core::{
    born_probabilities, energy_along, ensemble_stats, equivalent, frobenius_distance,
    from_epistemic, to_epistemic, Basis, DensityState, FieldSpec, Operator,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn scaling_leaves_the_image_unchanged(b in psd_any(8), k in -20i32..20, c in 0.01f64..100.0) {
        let rho = to_epistemic(&b).unwrap().rho;
        let exact = to_epistemic(&b.scale(2f64.powi(k))).unwrap().rho;
        prop_assert_eq!(&exact, &rho);
        let near = to_epistemic(&b.scale(c)).unwrap().rho;
        prop_assert!(frobenius_distance(near.operator(), rho.operator()).unwrap() <= 1e-15);
    }

    #[test]
    fn image_round_trips(b in psd_any(8)) {
        let img = to_epistemic(&b).unwrap();
        prop_assert!(img.rho.operator().trace() - 1.0 <= 1e-12);
        let back = img.covariance();
        prop_assert!(frobenius_distance(&back, &b).unwrap() <= 1e-12 * b.frobenius_norm());
    }

    #[test]
    fn from_epistemic_inverts(b in psd_any(6), s in prop::sample::select(vec![0.5, 1.0, 10.0])) {
        let rho = to_epistemic(&b).unwrap().rho;
        let cov = from_epistemic(&rho, s).unwrap();
        let img = to_epistemic(&cov).unwrap();
        prop_assert!((img.sigma2 - s).abs() <= 1e-12 * s);
        prop_assert!(frobenius_distance(img.rho.operator(), rho.operator()).unwrap() <= 1e-14);
    }

    #[test]
    fn born_probabilities_form_a_distribution(b in psd_any(8)) {
        let rho = to_epistemic(&b).unwrap().rho;
        let p = born_probabilities(&rho, &Basis::standard(rho.dim())).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(a in psd(4), b in psd(4), c in 0.1f64..10.0) {
        prop_assert!(equivalent(&a, &a, 0.0).unwrap());
        prop_assert!(equivalent(&a, &a.scale(c), 1e-12).unwrap());
        for tol in [1e-3, 0.1, 0.5] {
            prop_assert_eq!(equivalent(&a, &b, tol).unwrap(), equivalent(&b, &a, tol).unwrap());
        }
    }

    #[test]
    fn equivalence_is_transitive(a in psd(3), c1 in 0.1f64..10.0, c2 in 0.1f64..10.0, other in psd(3)) {
        let (b, c) = (a.scale(c1), a.scale(c1 * c2));
        let tol = 1e-12;
        prop_assert!(equivalent(&a, &b, tol).unwrap() && equivalent(&b, &c, tol).unwrap());
        prop_assert!(equivalent(&a, &c, tol).unwrap());
        let d = to_epistemic(&a).unwrap().rho;
        let e = to_epistemic(&other).unwrap().rho;
        let dist = frobenius_distance(d.operator(), e.operator()).unwrap();
        if dist > 1e-6 {
            prop_assert!(!equivalent(&c, &other, tol).unwrap());
        }
    }
}

fn mc_rho(rho: &DensityState<f64>, sigma2: f64, n: usize, seed: u64) -> Operator {
    let spec = FieldSpec::gaussian(from_epistemic(rho, sigma2).unwrap()).unwrap();
    let e = spec.sample(n, seed).unwrap();
    to_epistemic(&ensemble_stats(&e).unwrap().covariance)
        .unwrap()
        .rho
        .into_operator()
}

#[test]
fn empirical_image_converges_over_seeds() {
    let rho =
        DensityState::new(Operator::from_real_rows(&[&[0.3, 0.1], &[0.1, 0.7]]).unwrap()).unwrap();
    let n = 100_000;
    let sigma2 = 2.0;
    let bound = 5.0 * sigma2 / (n as f64).sqrt();
    for seed in 0..20 {
        let est = mc_rho(&rho, sigma2, n, seed);
        let d = frobenius_distance(&est, rho.operator()).unwrap();
        assert!(d <= bound, "seed {seed}: {d} > {bound}");
    }
}

#[test]
fn born_matches_directional_energy() {
    let b = Operator::from_real_rows(&[&[1.0, 0.4], &[0.4, 3.0]]).unwrap();
    let e = FieldSpec::gaussian(b.clone())
        .unwrap()
        .sample(100_000, 3)
        .unwrap();
    let stats = ensemble_stats(&e).unwrap();
    let basis = Basis::<f64>::standard(2);
    let p = born_probabilities(&to_epistemic(&b).unwrap().rho, &basis).unwrap();
    for (k, v) in basis.vectors().iter().enumerate() {
        let along = energy_along(&e, v).unwrap() / stats.dispersion;
        assert!((along - p[k]).abs() <= 0.01, "{k}: {along} vs {}", p[k]);
    }
}

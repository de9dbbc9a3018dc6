//! Randomized invariants spanning modules: pressure domination, Fenchel
//! duality, empirical-cloud bookkeeping, and artifact rounding.

use proptest::prelude::*;

use thermoform_core::convex::{q_star, RateFunctionHandle};
use thermoform_core::ldp::{
    empirical_distribution_gibbs, empirical_distribution_periodic, empirical_distribution_separated,
};
use thermoform_core::measure::InvariantMeasure;
use thermoform_core::potential::{ObservableFamily, Potential};
use thermoform_core::pressure::{equilibrium_state, pressure_spectral};
use thermoform_core::report::{round12, sig12};
use thermoform_core::shift::ShiftSpace;

/// A small pool of primitive spaces with varied structure.
fn pool_space(i: usize) -> ShiftSpace {
    match i {
        0 => ShiftSpace::full_shift(2).unwrap(),
        1 => ShiftSpace::full_shift(3).unwrap(),
        2 => ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap(),
        _ => ShiftSpace::sft(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap(),
    }
}

/// Builds a window-2 potential from a value buffer longer than any pool
/// space needs.
fn window2(space: &ShiftSpace, buffer: &[f64]) -> Potential<f64> {
    let count = space.admissible_words(2).unwrap().len();
    Potential::new(space, 2, buffer[..count].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pressure_dominates_equilibria_of_other_potentials(
        idx in 0usize..4,
        fv in prop::collection::vec(-0.8f64..0.8, 16),
        gv in prop::collection::vec(-0.8f64..0.8, 16),
    ) {
        let space = pool_space(idx);
        let f = window2(&space, &fv);
        let g = window2(&space, &gv);

        let other = InvariantMeasure::from_markov(equilibrium_state(&space, &g).unwrap());
        prop_assert!(q_star(&space, &f, &other).unwrap() >= -1e-9);

        let own = InvariantMeasure::from_markov(equilibrium_state(&space, &f).unwrap());
        prop_assert!(q_star(&space, &f, &own).unwrap().abs() < 1e-8);
    }

    #[test]
    fn fenchel_young_is_tight_at_exposed_points(
        idx in 0usize..4,
        fv in prop::collection::vec(-0.6f64..0.6, 16),
        sv in prop::collection::vec(-1.0f64..1.0, 16),
        t in -1.2f64..1.2,
    ) {
        let space = pool_space(idx);
        let f = window2(&space, &fv);
        let s = window2(&space, &sv);
        let family = ObservableFamily::new(&space, &[s]).unwrap();
        let handle = RateFunctionHandle::new(&space, &f, &family).unwrap();

        // At the exposed point x = nabla L(t) the conjugate's supremum is
        // attained at t itself.
        let x = handle.l_grad(&[t]).unwrap();
        let l = handle.l_eval(&[t]).unwrap();
        let rate = handle.rate_at(&x).unwrap().value;
        prop_assert!(rate.is_finite());
        let i_x = rate.finite().unwrap();
        prop_assert!((i_x - (t * x[0] - l)).abs() < 1e-6, "I = {i_x}, support value {}", t * x[0] - l);
        prop_assert!(i_x >= -1e-10);

        // The rate vanishes at the base equilibrium's moment.
        let center = handle.l_grad(&[0.0]).unwrap();
        let at_center = handle.rate_at(&center).unwrap().value.finite().unwrap();
        prop_assert!(at_center.abs() < 1e-8, "rate at the center is {at_center}");
    }

    #[test]
    fn empirical_clouds_are_probability_distributions(
        idx in 0usize..4,
        fv in prop::collection::vec(-0.8f64..0.8, 16),
        sv in prop::collection::vec(-1.0f64..1.0, 16),
        n in 2usize..=6,
        r in 0usize..=2,
    ) {
        let space = pool_space(idx);
        let f = window2(&space, &fv);
        let s = window2(&space, &sv);
        let family = ObservableFamily::new(&space, &[s]).unwrap();

        let periodic = empirical_distribution_periodic(&space, &f, n, &family).unwrap();
        let separated = empirical_distribution_separated(&space, &f, n, r, &family).unwrap();
        let gibbs = empirical_distribution_gibbs(&space, &f, n, &family).unwrap();
        for cloud in [&periodic, &separated, &gibbs] {
            prop_assert!((cloud.total_weight() - 1.0).abs() <= 1e-12);
            prop_assert!(cloud.atoms().iter().all(|(w, _)| *w > 0.0));
        }
    }

    #[test]
    fn periodic_and_separated_clouds_coincide_on_free_shifts(
        k in 2usize..=3,
        fv in prop::collection::vec(-1.0f64..1.0, 3),
        sv in prop::collection::vec(-1.0f64..1.0, 3),
        n in 2usize..=6,
    ) {
        // With no adjacency constraint and single-symbol windows, the
        // cyclic and linear ensembles enumerate the same words with the
        // same weights, atom for atom.
        let space = ShiftSpace::full_shift(k).unwrap();
        let f = Potential::new(&space, 1, fv[..k].to_vec()).unwrap();
        let s = Potential::new(&space, 1, sv[..k].to_vec()).unwrap();
        let family = ObservableFamily::new(&space, &[s]).unwrap();

        let periodic = empirical_distribution_periodic(&space, &f, n, &family).unwrap();
        let separated = empirical_distribution_separated(&space, &f, n, 0, &family).unwrap();
        prop_assert_eq!(periodic.atoms().len(), separated.atoms().len());
        for ((wp, pp), (ws, ps)) in periodic.atoms().iter().zip(separated.atoms()) {
            prop_assert_eq!(wp, ws);
            prop_assert_eq!(pp, ps);
        }
    }

    #[test]
    fn pressure_is_monotone_in_the_potential(
        idx in 0usize..4,
        fv in prop::collection::vec(-0.8f64..0.8, 16),
        bump in prop::collection::vec(0.0f64..0.5, 16),
    ) {
        let space = pool_space(idx);
        let f = window2(&space, &fv);
        let raised: Vec<f64> = fv.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let g = window2(&space, &raised);
        let pf = pressure_spectral(&space, &f).unwrap().value;
        let pg = pressure_spectral(&space, &g).unwrap().value;
        prop_assert!(pf <= pg + 1e-12, "P(f) = {pf} exceeded P(g) = {pg}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn twelve_digit_rounding_is_stable(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let once = round12(x);
        prop_assert_eq!(round12(once), once);
        prop_assert_eq!(sig12(once), sig12(x));
    }
}

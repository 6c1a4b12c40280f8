//! Invariants checked over random inputs.

mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pnpcert::certificate::{check_component, sample_homotopy};
use pnpcert::components::{line_admittance, LineParams, MultiplierFilter, OMEGA0_50HZ};
use pnpcert::linalg::CMatrix;
use pnpcert::lti::hermitian_min_eig;
use pnpcert::network::{flag_crossings, random_allocation};
use pnpcert::synthesis::{scattering_of, MultiplierTheta};
use pnpcert::{FrequencyGrid, StateSpaceModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> FrequencyGrid {
    FrequencyGrid::logspace(1e-2, 1e5, 200).unwrap()
}

fn close(a: &CMatrix, b: &CMatrix, rtol: f64) -> bool {
    (a - b).norm() <= rtol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn rl_lines_are_strictly_passive(lr in -4.0f64..0.0, lx in -4.0f64..0.5) {
        let y = line_admittance(&LineParams::from_rx(10f64.powf(lr), 10f64.powf(lx), OMEGA0_50HZ).unwrap()).unwrap();
        for &w in grid().points() {
            prop_assert!(hermitian_min_eig(&y.freq_response(w).unwrap()) > 0.0);
        }
    }

    #[test]
    fn convex_combinations_of_pd_endpoints_stay_pd(seed in any::<u64>(), n0 in 1usize..5, n1 in 1usize..5, a in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y0 = common::port_hamiltonian(&mut rng, n0);
        let y1 = common::port_hamiltonian(&mut rng, n1);
        let m = MultiplierFilter::identity();
        let s = sample_homotopy(&m, &y0, &y1, &grid(), &[0.0, a, 1.0]).unwrap();
        prop_assert!(s[0].min_eig > 0.0 && s[2].min_eig > 0.0);
        // Concavity of lambda_min: the interior value is at least the convex
        // combination of the endpoint minima.
        prop_assert!(s[1].min_eig >= ((1.0 - a) * s[0].min_eig + a * s[2].min_eig) * (1.0 - 1e-9));
    }

    #[test]
    fn scattering_realization_matches_formula(seed in any::<u64>(), n in 1usize..6, w in -2.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::port_hamiltonian(&mut rng, n);
        let r = scattering_of(&g).unwrap();
        let gw = g.freq_response(10f64.powf(w)).unwrap();
        let id = CMatrix::identity(2, 2);
        let expect = (&id - &gw) * (&id + &gw).try_inverse().unwrap();
        prop_assert!(close(&r.freq_response(10f64.powf(w)).unwrap(), &expect, 1e-9));
    }

    #[test]
    fn series_and_weighted_sum_responses(seed in any::<u64>(), wa in -3.0f64..3.0, wb in -3.0f64..3.0, w in -2.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::hurwitz_system(&mut rng, 3, 2, 2, (0.1, 1e4), 0.1);
        let b = common::hurwitz_system(&mut rng, 2, 2, 2, (0.1, 1e4), 0.1);
        let om = 10f64.powf(w);
        let (ra, rb) = (a.freq_response(om).unwrap(), b.freq_response(om).unwrap());
        let s = StateSpaceModel::series(&a, &b).unwrap();
        prop_assert!(close(&s.freq_response(om).unwrap(), &(&ra * &rb), 1e-9));
        let sum = StateSpaceModel::weighted_sum(wa, &a, wb, &b).unwrap();
        let expect = ra * Complex64::new(wa, 0.0) + rb * Complex64::new(wb, 0.0);
        prop_assert!(close(&sum.freq_response(om).unwrap(), &expect, 1e-9));
    }

    #[test]
    fn certificate_verdict_invariant_under_positive_scaling(seed in any::<u64>(), n in 1usize..5, lk in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = if seed % 2 == 0 {
            common::port_hamiltonian(&mut rng, n)
        } else {
            common::hurwitz_system(&mut rng, n, 2, 2, (0.1, 1e4), 0.1)
        };
        let k = 10f64.powf(lk);
        let m = MultiplierFilter::piecewise(OMEGA0_50HZ).unwrap();
        let a = check_component(&m, &y, &grid(), 0.0).unwrap();
        let b = check_component(&m, &y.scaled(k), &grid(), 0.0).unwrap();
        prop_assert_eq!(a.pass, b.pass);
        prop_assert!((b.grid_min_eig - k * a.grid_min_eig).abs() <= 1e-9 * (1.0 + (k * a.grid_min_eig).abs()));
    }

    #[test]
    fn multiplier_parametrization_is_hurwitz(seed in any::<u64>(), order in 1usize..8, scale in 0.1f64..30.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut th = MultiplierTheta::zeros(order, 100.0);
        for v in th.values.iter_mut() {
            *v = scale * common::randn(&mut rng);
        }
        prop_assert!(th.to_model().is_hurwitz(0.0).unwrap());
        prop_assert!(th.to_multiplier().is_ok());
    }

    #[test]
    fn crossing_flags_follow_sign_changes(res in prop::collection::vec((-5.0f64..5.0, -50.0f64..50.0), 1..12), shift in 0.0f64..1e-3) {
        let prev: Vec<Complex64> = res.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        // A tiny perturbation that keeps every sign flags nothing.
        let same: Vec<Complex64> = prev
            .iter()
            .map(|z| Complex64::new(if z.re >= 0.0 { z.re + shift } else { z.re - shift }, z.im))
            .collect();
        prop_assert!(flag_crossings(&prev, &same).iter().all(|f| !f));
        // Any bijective matching flags at least the net change of the
        // right-half-plane count.
        let cur: Vec<Complex64> = prev.iter().rev().map(|z| Complex64::new(-z.re + shift, z.im * 0.5)).collect();
        let rhp = |v: &[Complex64]| v.iter().filter(|z| z.re >= 0.0).count() as i64;
        let flagged = flag_crossings(&prev, &cur).iter().filter(|f| **f).count() as i64;
        prop_assert!(flagged >= (rhp(&cur) - rhp(&prev)).abs());
    }

    #[test]
    fn random_allocations_are_sorted_distinct_subsets(seed in any::<u64>(), trial in 0usize..1000, n in 0usize..=10) {
        let slots: Vec<u32> = (30..40).collect();
        let a = random_allocation(&slots, n, seed, trial);
        prop_assert_eq!(a.len(), n);
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(a.iter().all(|b| slots.contains(b)));
        prop_assert_eq!(a, random_allocation(&slots, n, seed, trial));
    }
}

#[test]
fn identity_scattering_is_zero() {
    let r = scattering_of(&StateSpaceModel::identity(2)).unwrap();
    assert_eq!(r.d(), &DMatrix::<f64>::zeros(2, 2));
}

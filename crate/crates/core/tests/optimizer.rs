//! Optimizer behaviour on the ansatz energies.

use std::f64::consts::PI;

use dmera_core::dmera::{energy_density, energy_objective, load_bundled_parameters, optimize_dmera, DmeraInit};
use dmera_core::models::exact_solution_cached;
use dmera_core::optimize::{
    bootstrap_depth, finite_diff_gradient, BOOTSTRAP_SIGMA, finite_diff_gradient_5pt, norm, BootstrapMode, LbfgsOptions, Objective,
};
use dmera_core::qaoa::{energy_density as qaoa_density, optimize_qaoa};
use dmera_core::{Model, ISING_ENERGY_DENSITY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_error(e: f64) -> f64 {
    (e - ISING_ENERGY_DENSITY) / ISING_ENERGY_DENSITY.abs()
}

fn bundled_error(depth: usize) -> f64 {
    rel_error(energy_density(&load_bundled_parameters(Model::Ising, depth).unwrap(), Model::Ising).unwrap())
}

#[test]
fn bundled_depth_one_is_stationary() {
    let obj = energy_objective(Model::Ising, 1);
    let theta = load_bundled_parameters(Model::Ising, 1).unwrap().params().to_vec();
    let g = finite_diff_gradient(&obj, &theta, 1e-6).unwrap();
    assert!(norm(&g) < 1e-5, "{:e}", norm(&g));
}

#[test]
fn central_difference_is_second_order() {
    let obj = energy_objective(Model::Ising, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-PI..PI)).collect();
    let reference = finite_diff_gradient_5pt(&obj, &theta, 1e-3).unwrap();
    let err = |h: f64| {
        let g = finite_diff_gradient(&obj, &theta, h).unwrap();
        norm(&g.iter().zip(&reference).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn random_starts_reach_bundled_depth_two() {
    let opts = LbfgsOptions {
        seed: 3,
        ..Default::default()
    };
    let run = optimize_dmera(Model::Ising, 2, &DmeraInit::Random { starts: 8 }, &opts).unwrap();
    let ours = rel_error(run.final_value);
    assert!(ours <= 2.0 * bundled_error(2), "{ours:e} vs {:e}", bundled_error(2));
    // the reported value is the best point visited
    let best = run.trajectory.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    assert_eq!(run.final_value, best);
}

#[test]
fn bootstrap_does_not_lose_ground() {
    let from = load_bundled_parameters(Model::Ising, 2).unwrap().params().to_vec();
    let opts = LbfgsOptions::default();
    let run = optimize_dmera(Model::Ising, 3, &DmeraInit::Bootstrap { from, position: None }, &opts).unwrap();
    assert!(rel_error(run.final_value) <= bundled_error(2));
}

#[test]
fn near_identity_rows_barely_move_the_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in 1..=4 {
        let theta = load_bundled_parameters(Model::Ising, d).unwrap().params().to_vec();
        let base = energy_objective(Model::Ising, d).evaluate(&theta);
        for (mode, grown) in [(BootstrapMode::AppendOne, d + 1), (BootstrapMode::InsertTwo { position: d / 2 }, d + 2)] {
            let x = bootstrap_depth(&theta, mode, &mut rng).unwrap();
            let diff = (energy_objective(Model::Ising, grown).evaluate(&x) - base).abs();
            assert!(diff < 10.0 * BOOTSTRAP_SIGMA, "D={d} {mode:?}: {diff:e}");
        }
    }
}

#[test]
fn qaoa_prepares_small_ring_exactly() {
    let opt = optimize_qaoa(2, 4, 2, None, 0).unwrap();
    let e0 = exact_solution_cached(Model::Ising, 4).unwrap().ground_energy;
    assert!((opt.energy - e0).abs() < 1e-8, "{:e}", opt.energy - e0);
    assert!((qaoa_density(&opt.params, 4).unwrap() * 4.0 - e0).abs() < 1e-8);
}

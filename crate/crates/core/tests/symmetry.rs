//! Correlator averaging, entropy and subsystem fidelity on prepared rings.

use std::f64::consts::PI;

use dmera_core::dmera::{load_bundled_parameters, prepare_state};
use dmera_core::gaussian::log_fidelity;
use dmera_core::models::{exact_solution_cached, Family};
use dmera_core::symmetry::{
    correlator_table, error_summary, mean_window_entropy, normalized_infidelity, orbit_variance,
    out_of_phase_fraction, subsystem_infidelity_profile_strided,
};
use dmera_core::{CovarianceState, Model};

const L: usize = 256;

fn ring(depth: usize) -> CovarianceState {
    prepare_state(&load_bundled_parameters(Model::Ising, depth).unwrap(), 8).unwrap()
}

fn exact() -> CovarianceState {
    exact_solution_cached(Model::Ising, L).unwrap().ground_state.clone()
}

#[test]
fn deeper_circuits_vary_less_over_orbits() {
    let ex = exact();
    let (t2, t4) = (correlator_table(&ring(2), &ex, 8).unwrap(), correlator_table(&ring(4), &ex, 8).unwrap());
    for f in Family::BOTH {
        for d in 1..=8 {
            assert!(orbit_variance(&t4, f, d).unwrap() < orbit_variance(&t2, f, d).unwrap(), "{f:?} d={d}");
        }
    }
}

#[test]
fn family_errors_are_mostly_out_of_phase() {
    let ex = exact();
    let distances: Vec<usize> = (1..=32).collect();
    for depth in 2..=6 {
        let t = correlator_table(&ring(depth), &ex, 32).unwrap();
        let frac = out_of_phase_fraction(&t, &distances).unwrap();
        assert!(frac > 0.5, "D={depth}: {frac}");
        for &d in &distances {
            let s = error_summary(&t, d).unwrap();
            assert!(s.abs_error_of_mean <= s.mean_abs_error, "D={depth} d={d}");
        }
    }
}

#[test]
fn exact_state_has_equal_families() {
    let ex = exact();
    let t = correlator_table(&ex, &ex, 64).unwrap();
    for d in 1..=64 {
        for i in 0..L {
            assert!((t.value(Family::A, i, d) - t.value(Family::B, i, d)).abs() < 1e-12, "i={i} d={d}");
        }
        assert!(error_summary(&t, d).unwrap().exact_match);
    }
}

#[test]
fn exact_entropy_has_ising_central_charge() {
    let big = exact_solution_cached(Model::Ising, 512).unwrap().ground_state.clone();
    let chord = |n: usize| (512.0 / PI * (PI * n as f64 / 512.0).sin()).ln();
    let n = 32;
    let ds = mean_window_entropy(&big, 2 * n).unwrap() - mean_window_entropy(&big, n).unwrap();
    let c = 3.0 * ds / (chord(2 * n) - chord(n));
    assert!((c - 0.5).abs() < 1e-4, "c = {c}");
}

#[test]
fn small_windows_are_closer_than_the_ring() {
    let ex = exact();
    for depth in 2..=4 {
        let s = ring(depth);
        let global = normalized_infidelity(log_fidelity(&s, &ex).unwrap(), L);
        let rows = subsystem_infidelity_profile_strided(&s, &ex, &[4, 8, 16], 16).unwrap();
        for r in rows {
            assert!(r.mean_normalized_infidelity > 0.0);
            assert!(r.mean_normalized_infidelity < global, "D={depth} N={}", r.n);
        }
    }
}

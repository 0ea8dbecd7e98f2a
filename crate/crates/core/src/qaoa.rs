//! Alternating-operator baseline: `p` rounds of `exp(-iγ ΣXX)` followed by
//! `exp(-iβ ΣZ)` applied to `|0…0⟩`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceState;
use crate::models::{exact_solution_cached, Model};
use crate::optimize::{lbfgs_minimize, FnObjective, LbfgsOptions, OptimizationRun};

/// Interleaved angles `(γ_1, β_1, …, γ_p, β_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    angles: Vec<f64>,
}

impl QaoaParams {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() || !angles.len().is_multiple_of(2) {
            return Err(Error::ParameterLength {
                expected: 2 * (angles.len() / 2).max(1),
                got: angles.len(),
            });
        }
        Ok(Self { angles })
    }

    pub fn rounds(&self) -> usize {
        self.angles.len() / 2
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

pub fn qaoa_state(params: &QaoaParams, n_sites: usize) -> Result<CovarianceState> {
    if n_sites < 2 {
        return Err(Error::TooFewSites { min: 2, got: n_sites });
    }
    if !n_sites.is_multiple_of(2) {
        return Err(Error::OddSiteCount(n_sites));
    }
    let mut s = CovarianceState::vacuum(n_sites)?;
    for k in 0..params.rounds() {
        let (gamma, beta) = (params.angles[2 * k], params.angles[2 * k + 1]);
        // X_jX_{j+1} = -iγ_{2j+1}γ_{2j+2}, Z_j = -iγ_{2j}γ_{2j+1}
        for j in 0..n_sites {
            s.rotate_antiperiodic(2 * j + 1, 2 * j + 2, 2.0 * gamma);
        }
        for j in 0..n_sites {
            s.rotate_unchecked(2 * j, 2 * j + 1, 2.0 * beta);
        }
    }
    Ok(s)
}

/// Smallest ring on which a depth-`p` circuit's local energy is already the
/// infinite-ring value.
pub fn saturation_size(p: usize) -> usize {
    4 * p + 4
}

/// Ising energy per site. Rings larger than [`saturation_size`] are
/// evaluated on that size, which gives the identical value.
pub fn energy_density(params: &QaoaParams, n_sites: usize) -> Result<f64> {
    let l = n_sites.min(saturation_size(params.rounds()));
    let s = qaoa_state(params, l)?;
    let h = Model::Ising.hamiltonian(l)?;
    Ok(h.energy(&s)? / l as f64)
}

fn density_objective(n_sites: usize) -> impl Fn(&[f64]) -> f64 + Sync {
    move |a: &[f64]| {
        let params = QaoaParams { angles: a.to_vec() };
        energy_density(&params, n_sites).unwrap_or(f64::NAN)
    }
}

/// Minimize the energy density at `n_sites` from `init`.
pub fn optimize_from(init: &QaoaParams, n_sites: usize, opts: &LbfgsOptions) -> Result<OptimizationRun> {
    let p = init.rounds();
    let obj = FnObjective::new(
        2 * p,
        format!("qaoa energy density, p={p}, L={n_sites}"),
        density_objective(n_sites),
    );
    lbfgs_minimize(&obj, &init.angles, opts)
}

/// Result of [`optimize_qaoa`].
#[derive(Debug, Clone)]
pub struct QaoaOptimum {
    pub params: QaoaParams,
    /// Total energy on `n_sites`.
    pub energy: f64,
    pub energy_density: f64,
    pub run: OptimizationRun,
}

/// Optimize `p` rounds on `n_sites ≥ 2p` sites. The search starts from the
/// exact-preparation angles at `L = 2p` (found by [`exact_prep_bootstrap`]
/// when `init` is `None`).
pub fn optimize_qaoa(
    p: usize,
    n_sites: usize,
    restarts: usize,
    init: Option<&QaoaParams>,
    seed: u64,
) -> Result<QaoaOptimum> {
    if p == 0 {
        return Err(Error::InvalidOption("p must be at least 1".into()));
    }
    if n_sites < 2 * p {
        return Err(Error::InvalidOption(format!("need L ≥ 2p, got L={n_sites}, p={p}")));
    }
    let start = match init {
        Some(i) if i.rounds() == p => i.clone(),
        Some(i) => {
            return Err(Error::ParameterLength {
                expected: 2 * p,
                got: i.angles.len(),
            })
        }
        None => exact_prep_single(p, EXACT_PREP_RESTARTS, seed)?,
    };
    let opts = LbfgsOptions {
        restarts,
        seed,
        ..Default::default()
    };
    let run = optimize_from(&start, n_sites, &opts)?;
    let params = QaoaParams::new(run.final_params.clone())?;
    let density = energy_density(&params, n_sites)?;
    Ok(QaoaOptimum {
        params,
        energy: density * n_sites as f64,
        energy_density: density,
        run,
    })
}

pub const EXACT_PREP_RESTARTS: usize = 64;
pub const EXACT_PREP_GAP: f64 = 1e-10;

/// Angles preparing the exact `L = 2p` ground state, searched from uniform
/// starts in `(-π/2, π/2]`.
pub fn exact_prep_single(p: usize, restarts: usize, seed: u64) -> Result<QaoaParams> {
    use rand::Rng;
    use std::f64::consts::FRAC_PI_2;
    let l = 2 * p;
    let e0 = exact_solution_cached(Model::Ising, l)?.ground_energy / l as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (p as u64).wrapping_mul(0x9e37_79b9));
    let opts = LbfgsOptions {
        restarts: 2,
        seed,
        ..Default::default()
    };
    let mut best_gap = f64::INFINITY;
    for _ in 0..restarts {
        let x0: Vec<f64> = (0..2 * p)
            .map(|_| FRAC_PI_2 - rng.random::<f64>() * std::f64::consts::PI)
            .collect();
        let run = optimize_from(&QaoaParams { angles: x0 }, l, &opts)?;
        let gap = (run.final_value - e0) * l as f64;
        if gap < EXACT_PREP_GAP {
            return QaoaParams::new(run.final_params);
        }
        best_gap = best_gap.min(gap);
    }
    Err(Error::OptimizerFailure(format!(
        "no exact preparation for p={p} after {restarts} starts (best gap {best_gap:e})"
    )))
}

/// Exact-preparation angles for every `p ≤ p_max`.
pub fn exact_prep_bootstrap(p_max: usize, seed: u64) -> Result<Vec<QaoaParams>> {
    if p_max == 0 || p_max > 8 {
        return Err(Error::InvalidOption(format!("p_max must be in 1..=8, got {p_max}")));
    }
    (1..=p_max)
        .map(|p| exact_prep_single(p, EXACT_PREP_RESTARTS, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_angles_give_vacuum() {
        let p = QaoaParams::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(qaoa_state(&p, 4).unwrap(), CovarianceState::vacuum(4).unwrap());
        assert!(QaoaParams::new(vec![0.1]).is_err());
        assert!(qaoa_state(&p, 3).is_err());
    }

    #[test]
    fn saturation_size_is_exact() {
        let p = QaoaParams::new(vec![0.3, -0.2, 0.7, 0.4]).unwrap();
        let small = qaoa_state(&p, saturation_size(2)).unwrap();
        let big = qaoa_state(&p, 64).unwrap();
        let e_small = Model::Ising.hamiltonian(12).unwrap().energy(&small).unwrap() / 12.0;
        let e_big = Model::Ising.hamiltonian(64).unwrap().energy(&big).unwrap() / 64.0;
        assert!((e_small - e_big).abs() < 1e-13);
    }

    #[test]
    fn two_site_exact_preparation() {
        let p = exact_prep_single(1, 16, 0).unwrap();
        let e = energy_density(&p, 2).unwrap() * 2.0;
        assert!((e + 8f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn bootstrap_range_checked() {
        assert!(exact_prep_bootstrap(0, 0).is_err());
        assert!(exact_prep_bootstrap(9, 0).is_err());
        assert!(optimize_qaoa(3, 4, 0, None, 0).is_err());
    }
}

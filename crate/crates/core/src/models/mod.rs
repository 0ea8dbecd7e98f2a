//! Quadratic Majorana Hamiltonians for the critical Ising chain and its
//! modified variant, with their exact ground states.

pub mod statevector;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceState;

/// The two spin chains studied here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `-Σ X_jX_{j+1} + Z_j`
    Ising,
    /// `Σ -X_jX_{j+1} + X_{j-1}Z_jX_{j+1}`
    ModifiedIsing,
}

/// One translation-invariant term `c · iγ_{2s+a}γ_{2s+b}` per site `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTerm {
    pub a: isize,
    pub b: isize,
    pub coeff: f64,
}

const ISING_TERMS: [LocalTerm; 2] = [
    // -Z_s
    LocalTerm { a: 0, b: 1, coeff: 1.0 },
    // -X_sX_{s+1}
    LocalTerm { a: 1, b: 2, coeff: 1.0 },
];

const MODIFIED_ISING_TERMS: [LocalTerm; 2] = [
    // -X_sX_{s+1}
    LocalTerm { a: 1, b: 2, coeff: 1.0 },
    // X_{s-1}Z_sX_{s+1} = -iγ_{2s-1}γ_{2s+2}
    LocalTerm { a: -1, b: 2, coeff: -1.0 },
];

impl Model {
    pub fn local_terms(self) -> &'static [LocalTerm] {
        match self {
            Model::Ising => &ISING_TERMS,
            Model::ModifiedIsing => &MODIFIED_ISING_TERMS,
        }
    }

    pub fn min_sites(self) -> usize {
        match self {
            Model::Ising => 2,
            Model::ModifiedIsing => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Ising => "ising",
            Model::ModifiedIsing => "modified_ising",
        }
    }

    /// Position in the crate's labeling of the `m`-th Majorana of the chain
    /// on which the model is a uniform nearest-neighbour coupling. Identity
    /// for the Ising model; the modified model's terms link
    /// `γ_{-1}, γ_2, γ_1, γ_4, γ_3, …`, so even `m` maps to `m - 1` and odd
    /// `m` to `m + 1`.
    pub fn chain_majorana(self, m: isize) -> isize {
        match self {
            Model::Ising => m,
            Model::ModifiedIsing => {
                if m.rem_euclid(2) == 0 {
                    m - 1
                } else {
                    m + 1
                }
            }
        }
    }

    pub fn hamiltonian(self, n_sites: usize) -> Result<QuadraticHamiltonian> {
        QuadraticHamiltonian::from_local_terms(self, n_sites)
    }

    /// Energy of the terms anchored at `site`, reading correlators through the
    /// antiperiodic wrap so `site` may sit anywhere on the ring.
    pub fn site_energy(self, state: &CovarianceState, site: usize) -> f64 {
        let n = state.n_modes() as isize;
        self.local_terms()
            .iter()
            .map(|t| {
                let (j, sj) = wrap_signed(2 * site as isize + t.a, n);
                let (k, sk) = wrap_signed(2 * site as isize + t.b, n);
                t.coeff * sj * sk * state.gamma()[(j, k)]
            })
            .sum()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ising" => Ok(Model::Ising),
            "modified_ising" | "modified-ising" => Ok(Model::ModifiedIsing),
            other => Err(Error::InvalidOption(format!("unknown model `{other}`"))),
        }
    }
}

/// Index on the antiperiodic Majorana ring for any signed position.
pub(crate) fn wrap_signed(index: isize, n_modes: isize) -> (usize, f64) {
    let turns = index.div_euclid(n_modes);
    let sign = if turns.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    (index.rem_euclid(n_modes) as usize, sign)
}

/// `H = (i/2) Σ_{j,k} A_jk γ_jγ_k` on an antiperiodic Majorana ring.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    n_sites: usize,
    coupling: DMatrix<f64>,
    /// `None` for user-supplied couplings.
    model: Option<Model>,
}

impl QuadraticHamiltonian {
    pub fn ising(n_sites: usize) -> Result<Self> {
        Self::from_local_terms(Model::Ising, n_sites)
    }

    pub fn modified_ising(n_sites: usize) -> Result<Self> {
        Self::from_local_terms(Model::ModifiedIsing, n_sites)
    }

    fn from_local_terms(model: Model, n_sites: usize) -> Result<Self> {
        if n_sites < model.min_sites() {
            return Err(Error::TooFewSites {
                min: model.min_sites(),
                got: n_sites,
            });
        }
        if !n_sites.is_multiple_of(2) {
            return Err(Error::OddSiteCount(n_sites));
        }
        let n = 2 * n_sites as isize;
        let mut a = DMatrix::zeros(n as usize, n as usize);
        for s in 0..n_sites as isize {
            for t in model.local_terms() {
                let (j, sj) = wrap_signed(2 * s + t.a, n);
                let (k, sk) = wrap_signed(2 * s + t.b, n);
                let c = sj * sk * t.coeff;
                a[(j, k)] += c;
                a[(k, j)] -= c;
            }
        }
        Ok(Self {
            n_sites,
            coupling: a,
            model: Some(model),
        })
    }

    pub fn custom(coupling: DMatrix<f64>) -> Result<Self> {
        let (r, c) = coupling.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::InvalidCovariance {
                rows: r,
                cols: c,
                reason: "coupling must be square with positive even dimension".into(),
            });
        }
        if (&coupling + coupling.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidCovariance {
                rows: r,
                cols: c,
                reason: "coupling must be antisymmetric".into(),
            });
        }
        Ok(Self {
            n_sites: r / 2,
            coupling,
            model: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn model(&self) -> Option<Model> {
        self.model
    }

    /// `⟨H⟩ = Σ_{j<k} A_jk Γ_jk`.
    pub fn energy(&self, state: &CovarianceState) -> Result<f64> {
        if state.n_modes() != self.coupling.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.coupling.nrows(),
                got: state.n_modes(),
            });
        }
        Ok(0.5 * self.coupling.dot(state.gamma()))
    }

    /// Fill every negative-energy mode: `Γ = -A (AᵀA)^{-1/2}`.
    pub fn exact_ground_state(&self) -> Result<ExactSolution> {
        let a = &self.coupling;
        let eig = SymmetricEigen::new(a.transpose() * a);
        let min = eig.eigenvalues.min();
        if min.max(0.0).sqrt() < 1e-12 {
            return Err(Error::DegenerateGroundState(min.max(0.0).sqrt()));
        }
        let v = &eig.eigenvectors;
        let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let g = -(a * v * inv * v.transpose());
        let g = 0.5 * (&g - g.transpose());
        let mut eps: Vec<f64> = eig.eigenvalues.iter().map(|l| l.sqrt()).collect();
        eps.sort_by(f64::total_cmp);
        // each single-particle energy appears twice
        let spectrum: Vec<f64> = eps.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        let ground_energy = -spectrum.iter().sum::<f64>();
        Ok(ExactSolution {
            ground_state: CovarianceState::from_matrix_unchecked(g),
            ground_energy,
            single_particle_spectrum: spectrum,
        })
    }
}

/// Ground state of a quadratic Hamiltonian.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub ground_state: CovarianceState,
    pub ground_energy: f64,
    /// `ε_k ≥ 0`, ascending, with `E₀ = -Σ ε_k`; an excitation costs `2ε_k`.
    pub single_particle_spectrum: Vec<f64>,
}

impl ExactSolution {
    /// All many-body energies in the parity sector of the ground state.
    pub fn ground_sector_spectrum(&self) -> Result<Vec<f64>> {
        let eps = &self.single_particle_spectrum;
        if eps.len() > 16 {
            return Err(Error::OracleTooLarge {
                max: 16,
                got: eps.len(),
            });
        }
        let mut out = Vec::new();
        for mask in 0u32..(1 << eps.len()) {
            if mask.count_ones() % 2 == 0 {
                let e: f64 = eps
                    .iter()
                    .enumerate()
                    .map(|(k, e)| if mask & (1 << k) != 0 { *e } else { -*e })
                    .sum();
                out.push(e);
            }
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

/// Closed form of the antiperiodic critical chain:
/// `E₀ = -Σ_q 2|cos(q/2)|`, `q = (2m+1)π/L`.
pub fn ising_ground_energy_analytic(n_sites: usize) -> f64 {
    let l = n_sites as f64;
    -(0..n_sites)
        .map(|m| {
            let q = (2 * m + 1) as f64 * std::f64::consts::PI / l;
            2.0 * (0.5 * q).cos().abs()
        })
        .sum::<f64>()
}

/// Exact solutions computed once per `(model, L)` and shared afterwards.
pub fn exact_solution_cached(model: Model, n_sites: usize) -> Result<Arc<ExactSolution>> {
    static CACHE: OnceLock<Mutex<HashMap<(Model, usize), Arc<ExactSolution>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().expect("cache poisoned").get(&(model, n_sites)) {
        return Ok(Arc::clone(s));
    }
    let sol = Arc::new(model.hamiltonian(n_sites)?.exact_ground_state()?);
    cache
        .lock()
        .expect("cache poisoned")
        .insert((model, n_sites), Arc::clone(&sol));
    Ok(sol)
}

/// Correlator families used for the Kramers-Wannier comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `⟨iγ_{2i}γ_{2j+1}⟩` (0-based)
    A,
    /// `⟨iγ_{2i+1}γ_{2j+2}⟩`, the same pattern shifted by one Majorana
    B,
}

impl Family {
    pub const BOTH: [Family; 2] = [Family::A, Family::B];

    pub fn label(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
        }
    }

    /// Majorana pair for base site `i` and separation `d`; the second index
    /// may run past the ring and must be read through the wrap.
    pub fn indices(self, i: usize, d: usize) -> (usize, usize) {
        match self {
            Family::A => (2 * i, 2 * (i + d) + 1),
            Family::B => (2 * i + 1, 2 * (i + d) + 2),
        }
    }

    pub fn read(self, state: &CovarianceState, i: usize, d: usize) -> f64 {
        let (j, k) = self.indices(i, d);
        state.entry_antiperiodic(j, k)
    }

    /// Same pattern in the model's own chain labeling (see
    /// [`Model::chain_majorana`]).
    pub fn read_in(self, model: Model, state: &CovarianceState, i: usize, d: usize) -> f64 {
        let (j, k) = self.indices(i, d);
        let n = state.n_modes() as isize;
        let (j, sj) = wrap_signed(model.chain_majorana(j as isize), n);
        let (k, sk) = wrap_signed(model.chain_majorana(k as isize), n);
        sj * sk * state.gamma()[(j, k)]
    }
}

/// Rows `{L, distance, family, value}` of the exact correlators at base site 0.
pub fn exact_table(solution: &ExactSolution, max_distance: usize) -> Vec<Vec<String>> {
    let l = solution.ground_state.n_sites();
    let mut rows = Vec::new();
    for d in 0..=max_distance {
        for f in Family::BOTH {
            rows.push(vec![
                l.to_string(),
                d.to_string(),
                f.label().to_string(),
                crate::io::fmt17(f.read(&solution.ground_state, 0, d)),
            ]);
        }
    }
    rows
}

pub const EXACT_TABLE_HEADER: [&str; 4] = ["L", "distance", "family", "value"];

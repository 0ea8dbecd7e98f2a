//! DMERA scaling circuits: finite-size preparation and the causal-cone
//! fixed point used as the variational objective.
//!
//! Layout (frozen against the bundled parameter tables):
//!
//! * a scaling layer maps `n` sites to `2n`; old site `i` moves to `2i`, and
//!   the odd sites start in `|0⟩`;
//! * row `r` (0-based, first applied first) pairs `(2k + r mod 2, …+1)`
//!   around the ring, so row 0 holds the isometries;
//! * row `r` uses `θ[2r] = x'` and `θ[2r+1] = y'` for `ũ(x', y')`.

mod params;

pub use params::{bundled_parameters, load_bundled_parameters, BundleEntry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceState, ModeSubset};
use crate::models::Model;
use crate::optimize::{
    bootstrap_depth, lbfgs_minimize, multi_start, BootstrapMode, FnObjective, LbfgsOptions, Objective,
    OptimizationRun,
};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 500;

/// A gate of one brickwork row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatePair {
    pub left: usize,
    pub right: usize,
    pub isometry: bool,
}

/// Gate positions of one scaling layer on `n_sites` output sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n_sites: usize,
    pub rows: Vec<Vec<GatePair>>,
}

pub fn build_layout(depth: usize, n_sites_out: usize) -> Result<Layout> {
    if depth == 0 {
        return Err(Error::InvalidOption("depth must be at least 1".into()));
    }
    if !n_sites_out.is_multiple_of(2) {
        return Err(Error::OddSiteCount(n_sites_out));
    }
    if n_sites_out < 4 {
        return Err(Error::TooFewSites {
            min: 4,
            got: n_sites_out,
        });
    }
    Ok(layout_unchecked(depth, n_sites_out))
}

fn layout_unchecked(depth: usize, n: usize) -> Layout {
    let rows = (0..depth)
        .map(|r| {
            (0..n / 2)
                .map(|k| {
                    let left = 2 * k + r % 2;
                    GatePair {
                        left: left % n,
                        right: (left + 1) % n,
                        isometry: r == 0,
                    }
                })
                .collect()
        })
        .collect();
    Layout { n_sites: n, rows }
}

/// Parameters of one scaling transformation: `(x'_1, y'_1, …, x'_D, y'_D)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCircuit {
    params: Vec<f64>,
}

impl ScalingCircuit {
    pub fn new(params: Vec<f64>) -> Result<Self> {
        if params.is_empty() || !params.len().is_multiple_of(2) {
            return Err(Error::ParameterLength {
                expected: 2 * (params.len() / 2).max(1),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(params));
        }
        Ok(Self { params })
    }

    /// All gates set to the identity.
    pub fn identity(depth: usize) -> Result<Self> {
        Self::new(vec![0.0; 2 * depth])
    }

    pub fn depth(&self) -> usize {
        self.params.len() / 2
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// `(x', y')` of row `r`.
    pub fn row_angles(&self, r: usize) -> (f64, f64) {
        (self.params[2 * r], self.params[2 * r + 1])
    }

    /// One scaling layer on the full ring of `state.n_sites()` sites.
    pub fn apply_layer(&self, state: &CovarianceState) -> CovarianceState {
        let n_out = 2 * state.n_sites();
        let mut s = interleave_vacuum(state);
        let layout = layout_unchecked(self.depth(), n_out);
        for (r, row) in layout.rows.iter().enumerate() {
            let (xp, yp) = self.row_angles(r);
            for g in row {
                s.apply_majorana_gate(g.left, xp, yp);
            }
        }
        s
    }

    /// Same layer on an open segment: gates that would cross the edge are
    /// dropped.
    fn apply_layer_open(&self, state: &CovarianceState) -> CovarianceState {
        let n_out = 2 * state.n_sites();
        let mut s = interleave_vacuum(state);
        for r in 0..self.depth() {
            let (xp, yp) = self.row_angles(r);
            let mut left = r % 2;
            while left + 1 < n_out {
                s.apply_majorana_gate(left, xp, yp);
                left += 2;
            }
        }
        s
    }
}

/// Old site `i` becomes site `2i`; odd sites are fresh vacuum.
fn interleave_vacuum(state: &CovarianceState) -> CovarianceState {
    let n = state.n_modes();
    let g = state.gamma();
    let mut out = CovarianceState::vacuum(2 * state.n_sites())
        .expect("nonempty")
        .into_gamma();
    let map = |m: usize| 4 * (m / 2) + m % 2;
    for j in 0..n {
        for k in 0..n {
            out[(map(j), map(k))] = g[(j, k)];
        }
    }
    CovarianceState::from_matrix_unchecked(out)
}

/// `L = 2^layers` sites, starting from a single vacuum site.
pub fn prepare_state(circuit: &ScalingCircuit, layers: usize) -> Result<CovarianceState> {
    if layers == 0 {
        return Err(Error::InvalidOption("at least one layer is required".into()));
    }
    if layers > 14 {
        return Err(Error::InvalidOption(format!(
            "{layers} layers would need {} sites",
            1usize << layers
        )));
    }
    let mut s = CovarianceState::vacuum(1)?;
    for _ in 0..layers {
        s = circuit.apply_layer(&s);
    }
    Ok(s)
}

/// Converged window state with its convergence record.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub state: CovarianceState,
    pub iterations: usize,
    /// `‖Γ_{n+1} - Γ_n‖_max` per iteration.
    pub residuals: Vec<f64>,
}

impl FixedPoint {
    pub fn width(&self) -> usize {
        self.state.n_sites()
    }

    /// Energy per site, averaged over the two central sites.
    pub fn energy_density(&self, model: Model) -> f64 {
        let c = self.width() / 2;
        0.5 * (model.site_energy(&self.state, c) + model.site_energy(&self.state, c + 1))
    }
}

/// Window width for depth `D`.
pub fn window_width(depth: usize) -> usize {
    4 * depth + 4
}

/// Iterate the descending channel on a `4D + 4` site window until the
/// max-norm change drops below `tol`. Each step embeds the window into twice
/// as many sites, applies one scaling layer without wraparound and keeps the
/// central window, averaged over its two alignments with the new lattice.
pub fn fixed_point_window(circuit: &ScalingCircuit, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidOption(format!("tolerance must be positive, got {tol}")));
    }
    let w = window_width(circuit.depth());
    let lo = ModeSubset::contiguous_sites(w / 2, w, 2 * w)?;
    let hi = ModeSubset::contiguous_sites(w / 2 + 1, w, 2 * w)?;
    let mut state = CovarianceState::vacuum(w)?;
    let mut residuals = Vec::new();
    for it in 1..=max_iter {
        let big = circuit.apply_layer_open(&state);
        let next = 0.5 * (big.restrict(&lo)?.into_gamma() + big.restrict(&hi)?.into_gamma());
        let r = (&next - state.gamma()).amax();
        residuals.push(r);
        state = CovarianceState::from_matrix_unchecked(next);
        if r < tol {
            return Ok(FixedPoint {
                state,
                iterations: it,
                residuals,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: residuals.last().copied().unwrap_or(f64::NAN),
    })
}

/// Fixed-point energy density with default tolerances.
pub fn energy_density(circuit: &ScalingCircuit, model: Model) -> Result<f64> {
    Ok(fixed_point_window(circuit, DEFAULT_TOL, DEFAULT_MAX_ITER)?.energy_density(model))
}

/// Fixed-point energy density as a function of the flat parameter vector.
/// Non-convergent or malformed inputs evaluate to NaN, which the optimizer
/// rejects.
pub fn energy_objective(model: Model, depth: usize) -> impl Objective {
    FnObjective::new(2 * depth, format!("dmera {model} energy density, D={depth}"), move |p: &[f64]| {
        ScalingCircuit::new(p.to_vec())
            .and_then(|c| energy_density(&c, model))
            .unwrap_or(f64::NAN)
    })
}

/// Where a depth-`D` optimization starts.
#[derive(Debug, Clone, PartialEq)]
pub enum DmeraInit {
    /// `starts` independent uniform draws in `(-π, π]`.
    Random { starts: usize },
    /// A depth `D - 1` (append one row) or `D - 2` (insert two rows at
    /// `position`) solution grown with near-identity rows.
    Bootstrap { from: Vec<f64>, position: Option<usize> },
    /// An explicit full-length parameter vector.
    Given(Vec<f64>),
}

/// Minimize the fixed-point energy density of `model` at depth `depth`.
pub fn optimize_dmera(model: Model, depth: usize, init: &DmeraInit, opts: &LbfgsOptions) -> Result<OptimizationRun> {
    use rand::SeedableRng;
    use std::f64::consts::PI;
    if depth == 0 {
        return Err(Error::InvalidOption("depth must be at least 1".into()));
    }
    let obj = energy_objective(model, depth);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    match init {
        DmeraInit::Random { starts } => multi_start(&obj, *starts, (-PI, PI), opts, &mut rng),
        DmeraInit::Bootstrap { from, position } => {
            let from_depth = from.len() / 2;
            let mode = match (depth.checked_sub(from_depth), position) {
                (Some(1), None) => BootstrapMode::AppendOne,
                (Some(2), Some(p)) => BootstrapMode::InsertTwo { position: *p },
                (Some(2), None) => BootstrapMode::InsertTwo { position: from_depth },
                _ => {
                    return Err(Error::InvalidOption(format!(
                        "cannot bootstrap depth {depth} from depth {from_depth}"
                    )))
                }
            };
            let x0 = bootstrap_depth(from, mode, &mut rng)?;
            lbfgs_minimize(&obj, &x0, opts)
        }
        DmeraInit::Given(x0) => lbfgs_minimize(&obj, x0, opts),
    }
}

/// Spatial reflection of the ansatz: `y → -y` on ordinary rows and
/// `y → π/2 - y` on the isometry row, written in `(x', y')`.
pub fn reflect_parameters(circuit: &ScalingCircuit) -> ScalingCircuit {
    use std::f64::consts::FRAC_PI_2;
    let mut p = Vec::with_capacity(circuit.params.len());
    for r in 0..circuit.depth() {
        let (xp, yp) = circuit.row_angles(r);
        if r == 0 {
            p.extend([yp + FRAC_PI_2, xp - FRAC_PI_2]);
        } else {
            p.extend([yp, xp]);
        }
    }
    ScalingCircuit { params: p }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_examples() {
        let l = build_layout(1, 4).unwrap();
        assert_eq!(l.rows.len(), 1);
        let pairs: Vec<(usize, usize)> = l.rows[0].iter().map(|g| (g.left, g.right)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);
        assert!(l.rows[0].iter().all(|g| g.isometry));

        let l = build_layout(4, 16).unwrap();
        assert_eq!(l.rows.len(), 4);
        for (r, row) in l.rows.iter().enumerate() {
            assert_eq!(row.len(), 8);
            assert_eq!(row[0].left, r % 2);
            assert_eq!(row.iter().any(|g| g.isometry), r == 0);
        }
        assert_eq!(l.rows[1][7], GatePair { left: 15, right: 0, isometry: false });

        assert!(build_layout(2, 6).is_ok());
        assert!(matches!(build_layout(2, 5), Err(Error::OddSiteCount(5))));
        assert!(build_layout(2, 2).is_err());
        assert!(build_layout(0, 8).is_err());
    }

    #[test]
    fn layout_tiles_every_row() {
        for d in 1..5 {
            for n in [4, 6, 8, 16] {
                for row in build_layout(d, n).unwrap().rows {
                    let mut seen = vec![false; n];
                    for g in row {
                        assert!(!seen[g.left] && !seen[g.right]);
                        seen[g.left] = true;
                        seen[g.right] = true;
                    }
                    assert!(seen.iter().all(|&s| s));
                }
            }
        }
    }

    #[test]
    fn parameter_length_validated() {
        assert!(ScalingCircuit::new(vec![]).is_err());
        assert!(ScalingCircuit::new(vec![0.1, 0.2, 0.3]).is_err());
        assert!(ScalingCircuit::new(vec![0.1, f64::NAN]).is_err());
    }

    #[test]
    fn identity_circuit_gives_vacuum() {
        let c = ScalingCircuit::identity(3).unwrap();
        let s = prepare_state(&c, 4).unwrap();
        assert_eq!(s, CovarianceState::vacuum(16).unwrap());
        let fp = fixed_point_window(&c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(fp.iterations, 1);
        assert_eq!(fp.energy_density(Model::Ising), -1.0);
    }

    #[test]
    fn reflection_is_involution_up_to_period() {
        let c = load_bundled_parameters(Model::Ising, 3).unwrap();
        let twice = reflect_parameters(&reflect_parameters(&c));
        for (a, b) in twice.params().iter().zip(c.params()) {
            let d = (a - b) / (2.0 * std::f64::consts::PI);
            assert!((d - d.round()).abs() < 1e-14);
        }
    }

    #[test]
    fn non_convergence_reported() {
        let c = load_bundled_parameters(Model::Ising, 2).unwrap();
        match fixed_point_window(&c, 1e-13, 3) {
            Err(Error::NonConvergence { iterations: 3, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(fixed_point_window(&c, 0.0, 10).is_err());
    }
}

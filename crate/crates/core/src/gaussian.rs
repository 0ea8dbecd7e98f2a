//! Gaussian fermionic states represented by their Majorana covariance matrix.
//!
//! Conventions used throughout the crate:
//!
//! * Majorana operators are indexed from 0. Site `j` owns `γ_{2j}` and
//!   `γ_{2j+1}`, and `{γ_a, γ_b} = 2δ_ab` so that `γ_a² = 1`.
//! * `Γ_ab = (i/2)⟨[γ_a, γ_b]⟩`, so `Γ_ab = ⟨iγ_aγ_b⟩` for `a ≠ b`. Pure states
//!   satisfy `Γ² = -I`.
//! * Jordan-Wigner: `γ_{2j} = (∏_{k<j} Z_k) X_j`, `γ_{2j+1} = (∏_{k<j} Z_k) Y_j`.
//!   Then `Z_j = -iγ_{2j}γ_{2j+1}` and `X_jX_{j+1} = -iγ_{2j+1}γ_{2j+2}`, so the
//!   vacuum `|0…0⟩` has `Γ_{2j,2j+1} = -1`.
//! * The chain is closed antiperiodically: `γ_{a+2n} = -γ_a`. Gates and
//!   correlators that reach past the last Majorana pick up that sign.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance on `ΓΓᵀ = I` used to decide that a state is pure.
pub const PURITY_TOL: f64 = 1e-9;

/// Canonical eigenvalues may exceed one by this much before being rejected.
pub const CLAMP_TOL: f64 = 1e-9;

/// Modes with `1 - λ² < SNAP_TOL` are treated as exactly pure by the mixed-state
/// fidelity.
const SNAP_TOL: f64 = 1e-9;

/// Resolve a possibly wrapped Majorana index on an antiperiodic ring of
/// `n_modes` operators. Returns the in-range index and the sign it carries.
pub fn wrap_index(index: usize, n_modes: usize) -> (usize, f64) {
    let turns = index / n_modes;
    let sign = if turns.is_multiple_of(2) { 1.0 } else { -1.0 };
    (index % n_modes, sign)
}

/// An ordered set of distinct Majorana indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSubset {
    indices: Vec<usize>,
}

impl ModeSubset {
    pub fn new(indices: Vec<usize>, n_modes: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_modes) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n_modes,
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(
                "indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { indices })
    }

    pub fn all(n_modes: usize) -> Self {
        Self {
            indices: (0..n_modes).collect(),
        }
    }

    /// Both Majoranas of every listed site. Sites wrap modulo `n_sites`.
    pub fn sites<I: IntoIterator<Item = usize>>(sites: I, n_sites: usize) -> Result<Self> {
        let mut idx: Vec<usize> = sites
            .into_iter()
            .flat_map(|s| {
                let s = s % n_sites;
                [2 * s, 2 * s + 1]
            })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        Self::new(idx, 2 * n_sites)
    }

    /// `len` consecutive sites starting at `start`, wrapping around the ring.
    pub fn contiguous_sites(start: usize, len: usize, n_sites: usize) -> Result<Self> {
        if len == 0 || len > n_sites {
            return Err(Error::InvalidSubset(format!(
                "window of {len} sites on a ring of {n_sites}"
            )));
        }
        Self::sites(start..start + len, n_sites)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Covariance matrix of a Gaussian state on `n_sites` fermionic sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    gamma: DMatrix<f64>,
}

impl CovarianceState {
    /// The product state `|0…0⟩`, i.e. `⟨Z_j⟩ = +1` on every site.
    pub fn vacuum(n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::TooFewSites { min: 1, got: 0 });
        }
        let n = 2 * n_sites;
        let mut gamma = DMatrix::zeros(n, n);
        for j in 0..n_sites {
            gamma[(2 * j, 2 * j + 1)] = -1.0;
            gamma[(2 * j + 1, 2 * j)] = 1.0;
        }
        Ok(Self { gamma })
    }

    /// Wrap a matrix after checking antisymmetry, even dimension and
    /// physicality (all singular values at most one).
    pub fn from_matrix(gamma: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = gamma.shape();
        let invalid = |reason: &str| Error::InvalidCovariance {
            rows,
            cols,
            reason: reason.to_string(),
        };
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(invalid("must be square with positive even dimension"));
        }
        let asym = (&gamma + gamma.transpose()).amax();
        if asym > 1e-12 {
            return Err(invalid(&format!("not antisymmetric (residual {asym:e})")));
        }
        let smax = gamma.singular_values().max();
        if smax > 1.0 + 1e-10 {
            return Err(invalid(&format!("singular value {smax} exceeds one")));
        }
        Ok(Self { gamma })
    }

    /// Wrap a matrix without validation. Callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(gamma: DMatrix<f64>) -> Self {
        Self { gamma }
    }

    pub fn n_sites(&self) -> usize {
        self.gamma.nrows() / 2
    }

    pub fn n_modes(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn into_gamma(self) -> DMatrix<f64> {
        self.gamma
    }

    /// Largest entry of `|ΓΓᵀ - I|`.
    pub fn purity_residual(&self) -> f64 {
        let n = self.n_modes();
        (&self.gamma * self.gamma.transpose() - DMatrix::<f64>::identity(n, n)).amax()
    }

    pub fn is_pure(&self) -> bool {
        self.purity_residual() < PURITY_TOL
    }

    /// `Γ_jk`, with `k` allowed to run past the last mode (antiperiodic wrap).
    pub fn entry_antiperiodic(&self, j: usize, k: usize) -> f64 {
        let n = self.n_modes();
        let (j, sj) = wrap_index(j, n);
        let (k, sk) = wrap_index(k, n);
        sj * sk * self.gamma[(j, k)]
    }

    /// `⟨iγ_jγ_k⟩`.
    pub fn expectation_quadratic(&self, j: usize, k: usize) -> Result<f64> {
        self.check_index(j)?;
        self.check_index(k)?;
        if j == k {
            return Err(Error::RepeatedIndex(j));
        }
        Ok(self.gamma[(j, k)])
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n_modes() {
            return Err(Error::IndexOutOfRange {
                index,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Conjugate by the Givens rotation `γ_j → cos·γ_j - sin·γ_k`,
    /// `γ_k → sin·γ_j + cos·γ_k`.
    pub fn apply_plane_rotation(&mut self, j: usize, k: usize, angle: f64) -> Result<()> {
        self.check_index(j)?;
        self.check_index(k)?;
        if j == k {
            return Err(Error::RepeatedIndex(j));
        }
        self.rotate_unchecked(j, k, angle);
        Ok(())
    }

    pub(crate) fn rotate_unchecked(&mut self, j: usize, k: usize, angle: f64) {
        let (s, c) = angle.sin_cos();
        let g = &mut self.gamma;
        let n = g.nrows();
        for col in 0..n {
            let a = g[(j, col)];
            let b = g[(k, col)];
            g[(j, col)] = c * a - s * b;
            g[(k, col)] = s * a + c * b;
        }
        {
            let (mut cj, mut ck) = g.columns_range_pair_mut(j, k);
            for row in 0..n {
                let a = cj[row];
                let b = ck[row];
                cj[row] = c * a - s * b;
                ck[row] = s * a + c * b;
            }
        }
    }

    /// Rotation in the plane of two possibly wrapped Majorana indices.
    /// A single wrapped index flips the sense of rotation.
    pub(crate) fn rotate_antiperiodic(&mut self, j: usize, k: usize, angle: f64) {
        let n = self.n_modes();
        let (j, sj) = wrap_index(j, n);
        let (k, sk) = wrap_index(k, n);
        self.rotate_unchecked(j, k, sj * sk * angle);
    }

    /// The matchgate `u(x, y)` on sites `left_site` and `left_site + 1`
    /// (periodically wrapped), acting on the four Majoranas as `ũ(x+y, x-y)`.
    pub fn apply_two_site_gate(&mut self, left_site: usize, x: f64, y: f64) -> Result<()> {
        if left_site >= self.n_sites() {
            return Err(Error::SiteOutOfRange {
                site: left_site,
                n_sites: self.n_sites(),
            });
        }
        self.apply_majorana_gate(left_site, x + y, x - y);
        Ok(())
    }

    /// `ũ(x', y')` on the Majoranas of `site` and its right neighbour:
    /// rotation by `x'` in the plane `(2s, 2s+2)` and by `-y'` in `(2s+1, 2s+3)`.
    pub(crate) fn apply_majorana_gate(&mut self, site: usize, xp: f64, yp: f64) {
        let a = 2 * site;
        self.rotate_antiperiodic(a, a + 2, xp);
        self.rotate_antiperiodic(a + 1, a + 3, -yp);
    }

    /// Keep only the listed Majoranas. The subset must have even size.
    pub fn restrict(&self, subset: &ModeSubset) -> Result<Self> {
        if let Some(&bad) = subset.indices().iter().find(|&&i| i >= self.n_modes()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n_modes: self.n_modes(),
            });
        }
        if !subset.len().is_multiple_of(2) {
            return Err(Error::InvalidSubset(
                "restriction needs an even number of Majoranas".into(),
            ));
        }
        let idx = subset.indices();
        let g = self.gamma.select_rows(idx).select_columns(idx);
        Ok(Self { gamma: g })
    }

    /// Pure state on twice the modes whose restriction to the first half is
    /// `self`: `[[Γ, M], [-M, -Γ]]` with `M = sqrt(I + Γ²)`.
    pub fn purify(&self) -> Self {
        let n = self.n_modes();
        let g = &self.gamma;
        let m = psd_sqrt(DMatrix::identity(n, n) - g.transpose() * g);
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(g);
        out.view_mut((0, n), (n, n)).copy_from(&m);
        out.view_mut((n, 0), (n, n)).copy_from(&(-&m));
        out.view_mut((n, n), (n, n)).copy_from(&(-g));
        Self { gamma: out }
    }

    /// Canonical eigenvalues `λ_j ∈ [0, 1]`, one per fermionic mode, descending.
    pub fn canonical_eigenvalues(&self) -> Result<Vec<f64>> {
        let mut sv: Vec<f64> = self.gamma.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let mut out = Vec::with_capacity(sv.len() / 2);
        for pair in sv.chunks(2) {
            let lambda = 0.5 * pair.iter().sum::<f64>();
            if lambda > 1.0 + CLAMP_TOL {
                return Err(Error::Unphysical(lambda));
            }
            out.push(lambda.clamp(0.0, 1.0));
        }
        Ok(out)
    }

    /// Von Neumann entropy (nats) of the whole state.
    pub fn entropy(&self) -> Result<f64> {
        // singular values as square roots of the spectrum of ΓᵀΓ; the
        // symmetric eigensolver is several times faster than an SVD
        let mut total = 0.0;
        let gram = self.gamma.transpose() * &self.gamma;
        for e in gram.symmetric_eigenvalues().iter() {
            let s = e.max(0.0).sqrt();
            if s > 1.0 + CLAMP_TOL {
                return Err(Error::Unphysical(s));
            }
            total += mode_entropy(s.min(1.0));
        }
        // singular values come in degenerate pairs
        Ok(0.5 * total)
    }

    /// Entropy of the reduced state on `subset`.
    pub fn entanglement_entropy(&self, subset: &ModeSubset) -> Result<f64> {
        self.restrict(subset)?.entropy()
    }

    /// Fermion parity `⟨∏_j Z_j⟩ = (-1)^n Pf(Γ)`; ±1 for pure states.
    pub fn parity(&self) -> f64 {
        let sign = if self.n_sites().is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * pfaffian(&self.gamma)
    }

    /// Row-major CSV of all entries, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.gamma.row_iter() {
            let line: Vec<String> = row.iter().map(|v| crate::io::fmt17(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Entropy of one fermionic mode with canonical eigenvalue `λ`.
pub fn mode_entropy(lambda: f64) -> f64 {
    let p = 0.5 * (1.0 + lambda);
    let q = 0.5 * (1.0 - lambda);
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    h(p) + h(q)
}

/// Uhlmann fidelity `tr|√ρ√σ|` between two Gaussian states.
pub fn fidelity(a: &CovarianceState, b: &CovarianceState) -> Result<f64> {
    Ok(log_fidelity(a, b)?.exp().min(1.0))
}

/// Natural log of [`fidelity`]. Stays finite for overlaps far below the
/// smallest representable double; returns `-inf` for orthogonal states.
pub fn log_fidelity(a: &CovarianceState, b: &CovarianceState) -> Result<f64> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            got: b.n_modes(),
        });
    }
    if a.is_pure() || b.is_pure() {
        return Ok(0.25 * log_abs_det(&((a.gamma() + b.gamma()) * 0.5)));
    }
    log_fidelity_mixed(a.gamma().clone(), b.gamma().clone())
}

/// Mixed-state branch. Nearly pure modes of either state are split off
/// exactly: with `ρ = φ ⊗ ρ'` and `φ` pure, `F(ρ, σ) = √p · F(ρ', σ̃)` where
/// `p = tr(φσ)` and `σ̃` is `σ` conditioned on `φ`. What remains goes through
/// the closed-form determinant expression.
fn log_fidelity_mixed(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<f64> {
    let mut a = a;
    let mut b = b;
    let mut acc = 0.0;
    let mut swapped_without_split = false;
    loop {
        let n = a.nrows();
        if n == 0 {
            return Ok(acc);
        }
        let (basis, k) = pure_split(&a);
        if k == 0 {
            if swapped_without_split {
                return Ok(acc + log_fidelity_closed_form(&a, &b)?);
            }
            std::mem::swap(&mut a, &mut b);
            swapped_without_split = true;
            continue;
        }
        swapped_without_split = false;
        let a2 = basis.transpose() * &a * &basis;
        let b2 = basis.transpose() * &b * &basis;
        let delta = polar_part(&a2.view((0, 0), (k, k)).into_owned());
        let b_pp = b2.view((0, 0), (k, k)).into_owned();
        let m = &b_pp + &delta;
        if k == n {
            return Ok(acc + 0.25 * log_abs_det(&(m * 0.5)));
        }
        let log_p = 0.5 * log_abs_det(&(&m * 0.5));
        if !log_p.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        acc += 0.5 * log_p;
        let r = n - k;
        let b_pm = b2.view((0, k), (k, r)).into_owned();
        let b_mp = b2.view((k, 0), (r, k)).into_owned();
        let b_mm = b2.view((k, k), (r, r)).into_owned();
        let solved = m.lu().solve(&b_pm).ok_or(Error::DegenerateOverlap)?;
        let cond = b_mm - b_mp * solved;
        b = 0.5 * (&cond - cond.transpose());
        a = a2.view((k, k), (r, r)).into_owned();
    }
}

/// `ln F = ½ ln tr(ρσ) + Σ_j ½ ln(1 + √(1 - λ_j²))`, where `tr(ρσ) =
/// 2^{-n} √det(I - AB)` and `λ_j` are the canonical eigenvalues of the
/// Gaussian operator `√ρ σ √ρ`. That operator is built with the product rule
/// for Gaussian operators, so only symmetric eigenproblems are needed.
fn log_fidelity_closed_form(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let dim = a.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let ld1 = log_abs_det(&(&id - a * b));
    if !ld1.is_finite() {
        return Err(Error::DegenerateOverlap);
    }
    // √ρ has covariance A (I + √(I + A²))⁻¹
    let denom = &id + psd_sqrt(&id - a.transpose() * a);
    let half = a * denom.try_inverse().ok_or(Error::DegenerateOverlap)?;
    let g = sandwich(&half, b)?;
    let ld2: f64 = (g.transpose() * &g)
        .symmetric_eigenvalues()
        .iter()
        .map(|e| (1.0 + (1.0 - e).max(0.0).sqrt()).ln())
        .sum();
    Ok(-0.25 * dim as f64 * std::f64::consts::LN_2 + 0.25 * ld1 + 0.25 * ld2)
}

/// Covariance of the normalized operator `XYX` for Gaussian operators with
/// covariances `x` and `y`. In terms of `C = -iΓ` the normalized product of
/// two Gaussian operators has `C₁ × C₂ = I - (I - C₂)(I + C₁C₂)⁻¹(I - C₁)`.
fn sandwich(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = x.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);
    let to_c = |m: &DMatrix<f64>| m.map(|v| C64::new(0.0, -v));
    let product = |c1: &DMatrix<C64>, c2: &DMatrix<C64>| -> Result<DMatrix<C64>> {
        let inv = (&id + c1 * c2).try_inverse().ok_or(Error::DegenerateOverlap)?;
        Ok(&id - (&id - c2) * inv * (&id - c1))
    };
    let cx = to_c(x);
    let c = product(&product(&cx, &to_c(y))?, &cx)?;
    // back to Γ = iC; Hermitian XYX makes it real up to rounding
    let g = c.map(|v| -v.im);
    Ok(0.5 * (&g - g.transpose()))
}

/// Orthonormal basis `[P | M]` where `P` spans the modes of `a` with
/// `1 - λ² < SNAP_TOL`; returns the basis and `dim P` (always even).
fn pure_split(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.transpose() * a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut k = order
        .iter()
        .take_while(|&&i| 1.0 - eig.eigenvalues[i] < SNAP_TOL)
        .count();
    k -= k % 2;
    let mut basis = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(i));
    }
    (basis, k)
}

/// `X (XᵀX)^{-1/2}`: the nearest pure covariance to an almost pure block.
fn polar_part(x: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(x.transpose() * x);
    let inv_sqrt = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt()),
    );
    let v = &eig.eigenvectors;
    x * v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose()
}

/// Square root of a symmetric positive semidefinite matrix. Eigenvalues
/// below `1e-13` are rounding noise of a pure block and are set to zero;
/// their square roots would otherwise leak `1e-8`-sized entries.
fn psd_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| if v < 1e-13 { 0.0 } else { v.sqrt() }),
    );
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&d) * v.transpose()
}

/// `ln|det m|` via LU; `-inf` for singular input.
pub fn log_abs_det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let lu = m.clone().lu();
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}

/// Pfaffian of an antisymmetric matrix by Parlett-Reid elimination with
/// partial pivoting.
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n % 2 == 1 {
        return 0.0;
    }
    let mut a = m.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        for i in k + 2..n {
            if a[(i, k)].abs() > a[(kp, k)].abs() {
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        if a[(k + 1, k)] == 0.0 {
            return 0.0;
        }
        let pivot = a[(k, k + 1)];
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_has_z_up() {
        let v = CovarianceState::vacuum(1).unwrap();
        // ⟨Z⟩ = -⟨iγ₀γ₁⟩
        assert_eq!(-v.expectation_quadratic(0, 1).unwrap(), 1.0);
        assert!(CovarianceState::vacuum(3).unwrap().is_pure());
        assert!(matches!(
            CovarianceState::vacuum(0),
            Err(Error::TooFewSites { .. })
        ));
    }

    #[test]
    fn rotation_edge_cases() {
        let v = CovarianceState::vacuum(2).unwrap();
        let mut s = v.clone();
        s.apply_plane_rotation(1, 2, 0.0).unwrap();
        assert_eq!(s, v);
        s.apply_plane_rotation(1, 2, 2.0 * PI).unwrap();
        assert!((s.gamma() - v.gamma()).amax() < 1e-12);
        assert!(s.apply_plane_rotation(1, 4, 0.3).is_err());
        assert!(s.apply_plane_rotation(2, 2, 0.3).is_err());
    }

    #[test]
    fn gate_at_zero_is_identity() {
        let v = CovarianceState::vacuum(3).unwrap();
        let mut s = v.clone();
        s.apply_two_site_gate(2, 0.0, 0.0).unwrap();
        assert_eq!(s, v);
        assert!(s.apply_two_site_gate(3, 0.1, 0.1).is_err());
    }

    #[test]
    fn expectation_is_antisymmetric() {
        let mut s = CovarianceState::vacuum(3).unwrap();
        s.apply_two_site_gate(0, 0.4, -0.3).unwrap();
        s.apply_two_site_gate(1, 1.1, 0.2).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                if j != k {
                    let a = s.expectation_quadratic(j, k).unwrap();
                    let b = s.expectation_quadratic(k, j).unwrap();
                    assert_eq!(a, -b);
                }
            }
        }
        assert!(matches!(
            s.expectation_quadratic(2, 2),
            Err(Error::RepeatedIndex(2))
        ));
    }

    #[test]
    fn restrict_trivial_cases() {
        let mut s = CovarianceState::vacuum(3).unwrap();
        s.apply_two_site_gate(1, 0.3, 0.9).unwrap();
        let all = s.restrict(&ModeSubset::all(6)).unwrap();
        assert_eq!(all, s);
        let v = CovarianceState::vacuum(3).unwrap();
        let one = v.restrict(&ModeSubset::sites([1], 3).unwrap()).unwrap();
        assert!(one.is_pure());
        assert!(v.restrict(&ModeSubset::new(vec![0, 1, 2], 6).unwrap()).is_err());
    }

    #[test]
    fn subset_validation() {
        assert!(ModeSubset::new(vec![], 4).is_err());
        assert!(ModeSubset::new(vec![1, 1], 4).is_err());
        assert!(ModeSubset::new(vec![2, 1], 4).is_err());
        assert!(ModeSubset::new(vec![4], 4).is_err());
        let w = ModeSubset::contiguous_sites(3, 2, 4).unwrap();
        assert_eq!(w.indices(), &[0, 1, 6, 7]);
    }

    #[test]
    fn entropy_limits() {
        assert_eq!(mode_entropy(1.0), 0.0);
        assert!((mode_entropy(0.0) - 2f64.ln()).abs() < 1e-15);
        // second closed form of the mode entropy, evaluated directly
        let l: f64 = 0.5;
        let alt = 2f64.ln() - (1.0 - l * l).sqrt().ln() - l * ((1.0 + l) / (1.0 - l)).sqrt().ln();
        assert!((mode_entropy(l) - alt).abs() < 1e-15);
        // dense 2x2 density matrix with eigenvalues (1 ± λ)/2
        let rho = nalgebra::Matrix2::new(0.75, 0.0, 0.0, 0.25);
        let dense: f64 = rho
            .symmetric_eigenvalues()
            .iter()
            .map(|p: &f64| -p * p.ln())
            .sum();
        assert!((mode_entropy(l) - dense).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_unphysical() {
        let mut g = DMatrix::zeros(2, 2);
        g[(0, 1)] = 1.01;
        g[(1, 0)] = -1.01;
        let s = CovarianceState::from_matrix_unchecked(g);
        assert!(matches!(s.entropy(), Err(Error::Unphysical(_))));
        let mut g = DMatrix::zeros(2, 2);
        g[(0, 1)] = 1.0 + 1e-12;
        g[(1, 0)] = -1.0 - 1e-12;
        let s = CovarianceState::from_matrix_unchecked(g);
        assert_eq!(s.entropy().unwrap(), 0.0);
    }

    #[test]
    fn purify_edge_cases() {
        let mixed = CovarianceState::from_matrix(DMatrix::zeros(2, 2)).unwrap();
        let p = mixed.purify();
        assert!(p.is_pure());
        assert!((p.entanglement_entropy(&ModeSubset::new(vec![0, 1], 4).unwrap()).unwrap() - 2f64.ln()).abs() < 1e-12);

        let mut pure = CovarianceState::vacuum(2).unwrap();
        pure.apply_two_site_gate(0, 0.7, 0.1).unwrap();
        let pp = pure.purify();
        assert!(pp.is_pure());
        let back = pp.restrict(&ModeSubset::new((0..4).collect(), 8).unwrap()).unwrap();
        assert!((back.gamma() - pure.gamma()).amax() < 1e-12);
    }

    #[test]
    fn fidelity_edge_cases() {
        let v = CovarianceState::vacuum(1).unwrap();
        assert!((fidelity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        // |1⟩, i.e. ⟨Z⟩ = -1
        let flipped = CovarianceState::from_matrix(-v.gamma()).unwrap();
        assert!(fidelity(&v, &flipped).unwrap() < 1e-12);
        // a rotation inside one site's plane only adds a phase
        let mut phased = v.clone();
        phased.apply_plane_rotation(0, 1, PI / 3.0).unwrap();
        assert!((phased.gamma() - v.gamma()).amax() < 1e-15);
        // a rotation by π across two sites flips both: |00⟩ → |11⟩
        let mut two = CovarianceState::vacuum(2).unwrap();
        two.apply_plane_rotation(1, 2, PI).unwrap();
        assert!((two.expectation_quadratic(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((two.expectation_quadratic(2, 3).unwrap() - 1.0).abs() < 1e-12);
        let v2 = CovarianceState::vacuum(2).unwrap();
        assert!(fidelity(&v2, &two).unwrap() < 1e-12);
        let other = CovarianceState::vacuum(2).unwrap();
        assert!(fidelity(&v, &other).is_err());
    }

    #[test]
    fn pfaffian_of_blocks() {
        let v = CovarianceState::vacuum(3).unwrap();
        assert!((pfaffian(v.gamma()) + 1.0).abs() < 1e-15);
        assert_eq!(v.parity(), 1.0);
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 1)] = 2.0;
        m[(1, 0)] = -2.0;
        m[(2, 3)] = 3.0;
        m[(3, 2)] = -3.0;
        m.swap_rows(1, 2);
        m.swap_columns(1, 2);
        // Pf is odd under a single transposition of indices
        assert!((pfaffian(&m) + 6.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_sign() {
        assert_eq!(wrap_index(3, 8), (3, 1.0));
        assert_eq!(wrap_index(9, 8), (1, -1.0));
        assert_eq!(wrap_index(17, 8), (1, 1.0));
    }

    #[test]
    fn csv_format() {
        let v = CovarianceState::vacuum(1).unwrap();
        let csv = v.to_csv();
        let first = csv.lines().next().unwrap();
        assert_eq!(first, "0.0000000000000000e0,-1.0000000000000000e0");
    }
}

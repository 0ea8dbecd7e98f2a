//! Dense spin-space reference simulator.
//!
//! Qubit 0 is the most significant bit of the basis index, so the two-qubit
//! matrices below are written in the basis `|q_a q_b⟩` with `q_a` leading.
//! Exponential in the qubit count; only for checking the Gaussian pipeline.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::Model;
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 14;
/// Full diagonalization is cubic in the sector dimension.
pub const MAX_DIAG_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub type PauliString = Vec<(usize, Pauli)>;

/// Gates understood by the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `u(x, y)` on `left` and `(left + 1) mod n`
    Local { left: usize, x: f64, y: f64 },
    /// `exp(-i·angle·X_aX_b)`
    XX { a: usize, b: usize, angle: f64 },
    /// `exp(-i·angle·Z_q)`
    Z { q: usize, angle: f64 },
}

#[derive(Debug, Clone)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooFewSites { min: 1, got: 0 });
        }
        if n > MAX_QUBITS {
            return Err(Error::OracleTooLarge {
                max: MAX_QUBITS,
                got: n,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wrap a normalized amplitude vector of length `2^n`.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidOption(format!("amplitude count {len} is not 2^n with n ≥ 1")));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::OracleTooLarge { max: MAX_QUBITS, got: n });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidOption(format!("amplitudes have norm² {norm}")));
        }
        Ok(Self { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::SiteOutOfRange {
                site: q,
                n_sites: self.n,
            });
        }
        Ok(())
    }

    /// Apply a 4×4 matrix in the basis `|q_a q_b⟩`.
    pub fn apply_two_qubit(&mut self, a: usize, b: usize, m: &[[C64; 4]; 4]) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::RepeatedIndex(a));
        }
        let (ma, mb) = (self.mask(a), self.mask(b));
        for base in 0..self.amps.len() {
            if base & (ma | mb) != 0 {
                continue;
            }
            let idx = [base, base | mb, base | ma, base | ma | mb];
            let v: [C64; 4] = idx.map(|i| self.amps[i]);
            for r in 0..4 {
                self.amps[idx[r]] = (0..4).map(|c| m[r][c] * v[c]).sum();
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Local { left, x, y } => {
                self.check_qubit(left)?;
                let right = (left + 1) % self.n;
                self.apply_two_qubit(left, right, &local_gate(x, y))
            }
            Gate::XX { a, b, angle } => {
                let (c, s) = (C64::new(angle.cos(), 0.0), C64::new(0.0, -angle.sin()));
                let z = C64::new(0.0, 0.0);
                let m = [[c, z, z, s], [z, c, s, z], [z, s, c, z], [s, z, z, c]];
                self.apply_two_qubit(a, b, &m)
            }
            Gate::Z { q, angle } => {
                self.check_qubit(q)?;
                let mq = self.mask(q);
                let up = C64::from_polar(1.0, -angle);
                let down = C64::from_polar(1.0, angle);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if i & mq == 0 { up } else { down };
                }
                Ok(())
            }
        }
    }

    /// `P|ψ⟩` for a product of Paulis on distinct qubits.
    pub fn apply_pauli_string(&self, string: &[(usize, Pauli)]) -> Result<Self> {
        for &(q, _) in string {
            self.check_qubit(q)?;
        }
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (b, amp) in self.amps.iter().enumerate() {
            let mut phase = C64::new(1.0, 0.0);
            let mut target = b;
            for &(q, p) in string {
                let m = self.mask(q);
                let bit = target & m != 0;
                match p {
                    Pauli::X => target ^= m,
                    Pauli::Z => {
                        if bit {
                            phase = -phase;
                        }
                    }
                    Pauli::Y => {
                        phase *= if bit {
                            C64::new(0.0, -1.0)
                        } else {
                            C64::new(0.0, 1.0)
                        };
                        target ^= m;
                    }
                }
            }
            out[target] += phase * amp;
        }
        Ok(Self {
            n: self.n,
            amps: out,
        })
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `⟨ψ|P|ψ⟩`
    pub fn expectation(&self, string: &[(usize, Pauli)]) -> Result<C64> {
        Ok(self.inner(&self.apply_pauli_string(string)?))
    }

    /// `⟨iγ_jγ_k⟩` with the Jordan-Wigner strings of the crate convention.
    pub fn quadratic(&self, j: usize, k: usize) -> Result<f64> {
        let phi = self
            .apply_pauli_string(&majorana_string(k))?
            .apply_pauli_string(&majorana_string(j))?;
        Ok((C64::new(0.0, 1.0) * self.inner(&phi)).re)
    }

    /// All `⟨iγ_jγ_k⟩` for `j ≠ k`, zero on the diagonal.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let n = 2 * self.n;
        let mut g = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in j + 1..n {
                let v = self.quadratic(j, k)?;
                g[(j, k)] = v;
                g[(k, j)] = -v;
            }
        }
        Ok(g)
    }
}

/// The two-qubit gate `u(x, y)`: rotation by `x` on `{|00⟩, |11⟩}` and by `y`
/// on `{|01⟩, |10⟩}`.
pub fn local_gate(x: f64, y: f64) -> [[C64; 4]; 4] {
    let r = |v: f64| C64::new(v, 0.0);
    let (sx, cx) = x.sin_cos();
    let (sy, cy) = y.sin_cos();
    let z = r(0.0);
    [
        [r(cx), z, z, r(sx)],
        [z, r(cy), r(sy), z],
        [z, r(-sy), r(cy), z],
        [r(-sx), z, z, r(cx)],
    ]
}

/// `γ_m` as a Pauli string: `Z` on every site before `m/2`, then `X` or `Y`.
pub fn majorana_string(m: usize) -> PauliString {
    let site = m / 2;
    let mut s: PauliString = (0..site).map(|q| (q, Pauli::Z)).collect();
    s.push((site, if m.is_multiple_of(2) { Pauli::X } else { Pauli::Y }));
    s
}

/// Run `gates` on `|0…0⟩` and return the real parts of `⟨P⟩` for each string.
pub fn statevector_oracle(
    n_qubits: usize,
    gates: &[Gate],
    observables: &[PauliString],
) -> Result<Vec<f64>> {
    let mut psi = StateVector::zero(n_qubits)?;
    for g in gates {
        psi.apply(g)?;
    }
    observables
        .iter()
        .map(|o| psi.expectation(o).map(|v| v.re))
        .collect()
}

/// Periodic spin Hamiltonian restricted to the even-parity sector (basis
/// states with an even number of 1s).
pub fn dense_even_sector(model: Model, n: usize) -> Result<DMatrix<f64>> {
    if n > MAX_DIAG_QUBITS {
        return Err(Error::OracleTooLarge {
            max: MAX_DIAG_QUBITS,
            got: n,
        });
    }
    if n < model.min_sites() {
        return Err(Error::TooFewSites {
            min: model.min_sites(),
            got: n,
        });
    }
    let bit = |q: usize| 1usize << (n - 1 - q);
    // (x-mask, z-mask, coefficient) of each X/Z Pauli product
    let mut terms: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..n {
        let next = (j + 1) % n;
        let prev = (j + n - 1) % n;
        match model {
            Model::Ising => {
                terms.push((bit(j) | bit(next), 0, -1.0));
                terms.push((0, bit(j), -1.0));
            }
            Model::ModifiedIsing => {
                terms.push((bit(j) | bit(next), 0, -1.0));
                terms.push((bit(prev) | bit(next), bit(j), 1.0));
            }
        }
    }
    let states: Vec<usize> = (0..1usize << n).filter(|b| b.count_ones() % 2 == 0).collect();
    let pos: std::collections::HashMap<usize, usize> =
        states.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut h = DMatrix::zeros(states.len(), states.len());
    for (col, &b) in states.iter().enumerate() {
        for &(xm, zm, c) in &terms {
            let sign = if (b & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let row = pos[&(b ^ xm)];
            h[(row, col)] += c * sign;
        }
    }
    Ok(h)
}

/// Ascending eigenvalues of [`dense_even_sector`].
pub fn dense_even_spectrum(model: Model, n: usize) -> Result<Vec<f64>> {
    let h = dense_even_sector(model, n)?;
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_circuit() {
        let v = statevector_oracle(3, &[], &[vec![(0, Pauli::Z)]]).unwrap();
        assert_eq!(v, vec![1.0]);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            StateVector::zero(15),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn majorana_anticommute_and_square() {
        let mut psi = StateVector::zero(3).unwrap();
        psi.apply(&Gate::Local { left: 0, x: 0.3, y: 0.8 }).unwrap();
        psi.apply(&Gate::Local { left: 1, x: -0.5, y: 0.2 }).unwrap();
        for m in 0..6 {
            let sq = psi
                .apply_pauli_string(&majorana_string(m))
                .unwrap()
                .apply_pauli_string(&majorana_string(m))
                .unwrap();
            assert!((psi.inner(&sq) - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        let g = psi.covariance().unwrap();
        assert!((&g * g.transpose() - DMatrix::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn z_and_xx_are_majorana_bilinears() {
        let mut psi = StateVector::zero(2).unwrap();
        psi.apply(&Gate::Local { left: 0, x: 0.4, y: 1.1 }).unwrap();
        let z0 = psi.expectation(&[(0, Pauli::Z)]).unwrap().re;
        assert!((z0 + psi.quadratic(0, 1).unwrap()).abs() < 1e-14);
        let xx = psi.expectation(&[(0, Pauli::X), (1, Pauli::X)]).unwrap().re;
        assert!((xx + psi.quadratic(1, 2).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn dense_two_site_ground_energy() {
        // -X₀X₁ - X₁X₀ - Z₀ - Z₁ on the even sector {|00⟩, |11⟩}
        let e = dense_even_spectrum(Model::Ising, 2).unwrap();
        assert!((e[0] + 8f64.sqrt()).abs() < 1e-12);
    }
}

//! Correlator tables, symmetry-averaged estimators and subsystem profiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{log_fidelity, CovarianceState, ModeSubset};
use crate::io::fmt17;
use crate::models::{Family, Model};

/// Both correlator families for every base site and separation `0..=max_distance`.
#[derive(Debug, Clone)]
pub struct CorrelatorTable {
    n_sites: usize,
    max_distance: usize,
    /// `[family][d][i]`
    values: [Vec<Vec<f64>>; 2],
    exact: [Vec<Vec<f64>>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRow {
    pub i: usize,
    pub j: usize,
    pub family: Family,
    pub value: f64,
    pub exact: f64,
}

fn family_slot(f: Family) -> usize {
    match f {
        Family::A => 0,
        Family::B => 1,
    }
}

fn read_all(model: Model, state: &CovarianceState, max_distance: usize) -> [Vec<Vec<f64>>; 2] {
    let l = state.n_sites();
    Family::BOTH.map(|f| {
        (0..=max_distance)
            .into_par_iter()
            .map(|d| (0..l).map(|i| f.read_in(model, state, i, d)).collect())
            .collect()
    })
}

/// Families read in the Ising labeling.
pub fn correlator_table(
    state: &CovarianceState,
    exact: &CovarianceState,
    max_distance: usize,
) -> Result<CorrelatorTable> {
    correlator_table_for(Model::Ising, state, exact, max_distance)
}

/// Families read in `model`'s chain labeling, where its half-shift symmetry
/// exchanges family A and family B.
pub fn correlator_table_for(
    model: Model,
    state: &CovarianceState,
    exact: &CovarianceState,
    max_distance: usize,
) -> Result<CorrelatorTable> {
    if state.n_sites() != exact.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: exact.n_sites(),
            got: state.n_sites(),
        });
    }
    if max_distance > state.n_sites() / 2 {
        return Err(Error::InvalidOption(format!(
            "max distance {max_distance} exceeds L/2 = {}",
            state.n_sites() / 2
        )));
    }
    Ok(CorrelatorTable {
        n_sites: state.n_sites(),
        max_distance,
        values: read_all(model, state, max_distance),
        exact: read_all(model, exact, max_distance),
    })
}

impl CorrelatorTable {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    pub fn value(&self, family: Family, i: usize, d: usize) -> f64 {
        self.values[family_slot(family)][d][i % self.n_sites]
    }

    pub fn exact(&self, family: Family, i: usize, d: usize) -> f64 {
        self.exact[family_slot(family)][d][i % self.n_sites]
    }

    pub fn rows(&self) -> Vec<CorrelatorRow> {
        let mut out = Vec::with_capacity(2 * self.n_sites * (self.max_distance + 1));
        for d in 0..=self.max_distance {
            for f in Family::BOTH {
                for i in 0..self.n_sites {
                    out.push(CorrelatorRow {
                        i,
                        j: (i + d) % self.n_sites,
                        family: f,
                        value: self.value(f, i, d),
                        exact: self.exact(f, i, d),
                    });
                }
            }
        }
        out
    }

    fn check_distance(&self, d: usize) -> Result<()> {
        if d > self.max_distance {
            return Err(Error::InvalidOption(format!(
                "distance {d} beyond table range {}",
                self.max_distance
            )));
        }
        Ok(())
    }
}

/// A symmetry group acting on `(family, base site)` at fixed separation.
pub trait AveragingGroup: Sync {
    fn name(&self) -> &str;
    /// Images of `(family, i)` under every group element.
    fn orbit(&self, n_sites: usize, family: Family, i: usize) -> Vec<(Family, usize)>;
}

/// Cyclic translations by `0..L`.
pub struct Translations;

/// Cyclic translations combined with the half-shift that exchanges the two
/// families.
pub struct TranslationsKw;

impl AveragingGroup for Translations {
    fn name(&self) -> &str {
        "translations"
    }

    fn orbit(&self, n_sites: usize, family: Family, i: usize) -> Vec<(Family, usize)> {
        (0..n_sites).map(|t| (family, (i + t) % n_sites)).collect()
    }
}

impl AveragingGroup for TranslationsKw {
    fn name(&self) -> &str {
        "translations x kramers-wannier"
    }

    fn orbit(&self, n_sites: usize, _family: Family, i: usize) -> Vec<(Family, usize)> {
        Family::BOTH
            .iter()
            .flat_map(|&f| (0..n_sites).map(move |t| (f, (i + t) % n_sites)))
            .collect()
    }
}

fn orbit_values(table: &CorrelatorTable, group: &dyn AveragingGroup, family: Family, d: usize) -> (Vec<f64>, Vec<f64>) {
    group
        .orbit(table.n_sites, family, 0)
        .into_iter()
        .map(|(f, i)| (table.value(f, i, d), table.exact(f, i, d)))
        .unzip()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Orbit mean of the ansatz values.
pub fn group_average(table: &CorrelatorTable, group: &dyn AveragingGroup, family: Family, d: usize) -> Result<f64> {
    table.check_distance(d)?;
    Ok(mean(&orbit_values(table, group, family, d).0))
}

pub fn translation_average(table: &CorrelatorTable, family: Family, d: usize) -> Result<f64> {
    group_average(table, &Translations, family, d)
}

/// Mean of the two translation-averaged families.
pub fn kw_average(table: &CorrelatorTable, d: usize) -> Result<f64> {
    group_average(table, &TranslationsKw, Family::A, d)
}

/// Exact reference correlator at separation `d`.
pub fn exact_average(table: &CorrelatorTable, d: usize) -> Result<f64> {
    table.check_distance(d)?;
    Ok(mean(&orbit_values(table, &TranslationsKw, Family::A, d).1))
}

/// Population variance of a family over its translation orbit.
pub fn orbit_variance(table: &CorrelatorTable, family: Family, d: usize) -> Result<f64> {
    table.check_distance(d)?;
    let v = orbit_values(table, &Translations, family, d).0;
    let m = mean(&v);
    Ok(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64)
}

/// `|⟨O⟩_KW - exact| / |exact|`.
pub fn kw_relative_error(table: &CorrelatorTable, d: usize) -> Result<f64> {
    let e = exact_average(table, d)?;
    Ok((kw_average(table, d)? - e).abs() / e.abs())
}

/// Translation-averaged error of one family.
pub fn family_error(table: &CorrelatorTable, family: Family, d: usize) -> Result<f64> {
    table.check_distance(d)?;
    let (v, e) = orbit_values(table, &Translations, family, d);
    Ok(mean(&v) - mean(&e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub d: usize,
    pub mean_abs_error: f64,
    pub abs_error_of_mean: f64,
    /// `abs_error_of_mean / mean_abs_error`, 0 when there is no error at all.
    pub ratio: f64,
    /// Set when every orbit element matches the reference exactly.
    pub exact_match: bool,
}

/// Typical error against the error of the fully averaged estimator.
pub fn error_summary(table: &CorrelatorTable, d: usize) -> Result<ErrorSummary> {
    table.check_distance(d)?;
    let (v, e) = orbit_values(table, &TranslationsKw, Family::A, d);
    let errs: Vec<f64> = v.iter().zip(&e).map(|(a, b)| (a - b).abs()).collect();
    let mean_abs_error = mean(&errs);
    let abs_error_of_mean = (mean(&v) - mean(&e)).abs();
    let exact_match = mean_abs_error == 0.0;
    Ok(ErrorSummary {
        d,
        mean_abs_error,
        abs_error_of_mean,
        ratio: if exact_match { 0.0 } else { abs_error_of_mean / mean_abs_error },
        exact_match,
    })
}

/// Fraction of separations where the two family errors have opposite sign.
pub fn out_of_phase_fraction(table: &CorrelatorTable, distances: &[usize]) -> Result<f64> {
    let mut opposite = 0;
    for &d in distances {
        if family_error(table, Family::A, d)? * family_error(table, Family::B, d)? < 0.0 {
            opposite += 1;
        }
    }
    Ok(opposite as f64 / distances.len().max(1) as f64)
}

/// Entropy averaged over all `L` contiguous windows of `n` sites.
pub fn mean_window_entropy(state: &CovarianceState, n: usize) -> Result<f64> {
    let l = state.n_sites();
    if n == 0 || n >= l {
        return Err(Error::InvalidSubset(format!("window of {n} sites on {l}")));
    }
    let total: Result<Vec<f64>> = (0..l)
        .into_par_iter()
        .map(|i| state.entanglement_entropy(&ModeSubset::contiguous_sites(i, n, l)?))
        .collect();
    Ok(mean(&total?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    pub mean_entropy: f64,
    pub exact_mean: f64,
    pub relative_error: f64,
}

impl EntropyRow {
    pub fn deviation(&self) -> f64 {
        self.mean_entropy - self.exact_mean
    }
}

pub fn entropy_profile(state: &CovarianceState, exact: &CovarianceState, sizes: &[usize]) -> Result<Vec<EntropyRow>> {
    if state.n_sites() != exact.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: exact.n_sites(),
            got: state.n_sites(),
        });
    }
    sizes
        .iter()
        .map(|&n| {
            let exact_mean = mean_window_entropy(exact, n)?;
            entropy_row(state, n, exact_mean)
        })
        .collect()
}

/// Like [`entropy_profile`] with the reference means already computed.
pub fn entropy_row(state: &CovarianceState, n: usize, exact_mean: f64) -> Result<EntropyRow> {
    let mean_entropy = mean_window_entropy(state, n)?;
    Ok(EntropyRow {
        n,
        mean_entropy,
        exact_mean,
        relative_error: (mean_entropy - exact_mean) / exact_mean,
    })
}

/// `1 - F^{1/n}` from `ln F`, accurate for tiny infidelities.
pub fn normalized_infidelity(log_fidelity: f64, n: usize) -> f64 {
    -(log_fidelity / n as f64).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfidelityRow {
    pub n: usize,
    pub mean_normalized_infidelity: f64,
}

pub fn subsystem_infidelity_profile(
    state: &CovarianceState,
    exact: &CovarianceState,
    sizes: &[usize],
) -> Result<Vec<InfidelityRow>> {
    subsystem_infidelity_profile_strided(state, exact, sizes, 1)
}

/// Average over window starts `0, stride, 2·stride, …`.
pub fn subsystem_infidelity_profile_strided(
    state: &CovarianceState,
    exact: &CovarianceState,
    sizes: &[usize],
    stride: usize,
) -> Result<Vec<InfidelityRow>> {
    let l = state.n_sites();
    if exact.n_sites() != l {
        return Err(Error::DimensionMismatch {
            expected: exact.n_sites(),
            got: l,
        });
    }
    if stride == 0 {
        return Err(Error::InvalidOption("stride must be positive".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            if n == 0 || n >= l {
                return Err(Error::InvalidSubset(format!("window of {n} sites on {l}")));
            }
            let vals: Result<Vec<f64>> = (0..l)
                .step_by(stride)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|i| {
                    let sub = ModeSubset::contiguous_sites(i, n, l)?;
                    let lf = log_fidelity(&state.restrict(&sub)?, &exact.restrict(&sub)?)?;
                    Ok(normalized_infidelity(lf, n))
                })
                .collect();
            Ok(InfidelityRow {
                n,
                mean_normalized_infidelity: mean(&vals?),
            })
        })
        .collect()
}

pub const CORRELATOR_HEADER: [&str; 8] = ["L", "D", "model", "d", "family", "value", "exact", "rel_error"];
pub const SUMMARY_HEADER: [&str; 7] = ["L", "D", "model", "d", "mean_abs_error", "abs_error_of_mean", "ratio"];
pub const ENTROPY_HEADER: [&str; 6] = ["L", "D", "N", "mean_entropy", "exact", "rel_error"];
pub const INFIDELITY_HEADER: [&str; 4] = ["L", "D", "N", "normalized_infidelity"];

/// Translation-averaged rows for each family plus a `KW` row per separation.
pub fn correlator_csv_rows(table: &CorrelatorTable, depth: usize, model: &str, distances: &[usize]) -> Result<Vec<Vec<String>>> {
    let l = table.n_sites().to_string();
    let mut rows = Vec::new();
    for &d in distances {
        let exact = exact_average(table, d)?;
        let mut push = |label: &str, value: f64| {
            rows.push(vec![
                l.clone(),
                depth.to_string(),
                model.to_string(),
                d.to_string(),
                label.to_string(),
                fmt17(value),
                fmt17(exact),
                fmt17((value - exact).abs() / exact.abs()),
            ]);
        };
        push("A", translation_average(table, Family::A, d)?);
        push("B", translation_average(table, Family::B, d)?);
        push("KW", kw_average(table, d)?);
    }
    Ok(rows)
}

pub fn summary_csv_rows(table: &CorrelatorTable, depth: usize, model: &str, distances: &[usize]) -> Result<Vec<Vec<String>>> {
    distances
        .iter()
        .map(|&d| {
            let s = error_summary(table, d)?;
            Ok(vec![
                table.n_sites().to_string(),
                depth.to_string(),
                model.to_string(),
                d.to_string(),
                fmt17(s.mean_abs_error),
                fmt17(s.abs_error_of_mean),
                fmt17(s.ratio),
            ])
        })
        .collect()
}

pub fn entropy_csv_rows(n_sites: usize, depth: usize, rows: &[EntropyRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                n_sites.to_string(),
                depth.to_string(),
                r.n.to_string(),
                fmt17(r.mean_entropy),
                fmt17(r.exact_mean),
                fmt17(r.relative_error),
            ]
        })
        .collect()
}

pub fn infidelity_csv_rows(n_sites: usize, depth: usize, rows: &[InfidelityRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                n_sites.to_string(),
                depth.to_string(),
                r.n.to_string(),
                fmt17(r.mean_normalized_infidelity),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::exact_solution_cached;

    fn exact(l: usize) -> CovarianceState {
        exact_solution_cached(Model::Ising, l).unwrap().ground_state.clone()
    }

    #[test]
    fn exact_vs_itself() {
        let g = exact(32);
        let t = correlator_table(&g, &g, 16).unwrap();
        for d in 0..=16 {
            let s = error_summary(&t, d).unwrap();
            assert_eq!(s.mean_abs_error, 0.0);
            assert_eq!(s.abs_error_of_mean, 0.0);
            assert!(s.exact_match && s.ratio == 0.0);
            assert!((kw_average(&t, d).unwrap() - t.exact(Family::A, 0, d)).abs() < 1e-12);
        }
        let rows = entropy_profile(&g, &g, &[31]).unwrap();
        assert_eq!(rows[0].relative_error, 0.0);
        let inf = subsystem_infidelity_profile_strided(&g, &g, &[1, 4], 4).unwrap();
        assert!(inf.iter().all(|r| r.mean_normalized_infidelity.abs() < 1e-9));
    }

    #[test]
    fn translation_invariant_average_equals_entry() {
        let g = exact(16);
        let t = correlator_table(&g, &g, 8).unwrap();
        let v = translation_average(&t, Family::B, 3).unwrap();
        assert!((v - t.value(Family::B, 5, 3)).abs() < 1e-13);
        assert!(orbit_variance(&t, Family::B, 3).unwrap() < 1e-24);
    }

    #[test]
    fn table_validation() {
        let g = exact(16);
        assert!(correlator_table(&g, &g, 9).is_err());
        assert!(correlator_table(&g, &exact(8), 2).is_err());
        let t = correlator_table(&g, &g, 4).unwrap();
        assert!(kw_average(&t, 5).is_err());
        assert_eq!(t.rows().len(), 2 * 16 * 5);
    }

    #[test]
    fn normalized_infidelity_small() {
        assert_eq!(normalized_infidelity(0.0, 4), 0.0);
        let v = normalized_infidelity(-1e-14, 2);
        assert!((v - 5e-15).abs() < 1e-28);
    }
}

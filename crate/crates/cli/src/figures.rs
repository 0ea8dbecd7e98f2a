//! `reproduce-figure`: fixed grids chaining the subcommand tables.

use std::collections::BTreeMap;

use dmera_core::dmera::{energy_density, load_bundled_parameters};
use dmera_core::io::fmt17;
use dmera_core::Model;

use crate::commands::{
    correlate_tables, emit, energy_rel_error, entropy_table, evaluate_rows, qaoa_table, subfid_table, Table,
    DEFAULT_DEPTHS, DEFAULT_QAOA_RESTARTS, EVALUATE_HEADER,
};
use crate::config::RunConfig;
use crate::svg::{log_chart, Series};
use crate::{CliError, Figure, FigureArgs};

const PROFILE_SITES: usize = 256;
const CORRELATOR_SITES: usize = 512;
const CORRELATOR_MAX_DISTANCE: usize = 64;
const FIDELITY_SITES: [usize; 6] = [8, 16, 32, 64, 128, 256];

pub const ENERGY_HEADER: [&str; 4] = ["model", "D", "energy_density", "energy_rel_error"];

/// Column index by header name.
fn col(t: &Table, name: &str) -> usize {
    t.header.iter().position(|h| *h == name).expect("known column")
}

/// One series per distinct value of `group`, plotting `y` against `x`.
fn series(t: &Table, group: &str, x: &str, y: &str) -> Vec<Series> {
    let (g, xi, yi) = (col(t, group), col(t, x), col(t, y));
    let mut by: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &t.rows {
        let (Ok(xv), Ok(yv)) = (r[xi].parse(), r[yi].parse()) else {
            continue;
        };
        by.entry(format!("{group}={}", r[g])).or_default().push((xv, yv));
    }
    by.into_iter().map(|(label, points)| Series { label, points }).collect()
}

fn energy_table(models: &[Model], depths: &[usize]) -> Result<Table, CliError> {
    let mut rows = Vec::new();
    for &m in models {
        for &d in depths {
            let e = energy_density(&load_bundled_parameters(m, d)?, m)?;
            rows.push(vec![m.to_string(), d.to_string(), fmt17(e), fmt17(energy_rel_error(e))]);
        }
    }
    Ok(Table {
        header: ENERGY_HEADER.to_vec(),
        rows,
    })
}

pub fn reproduce(a: FigureArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let model = a.common.model.or(cfg.model).unwrap_or(Model::Ising);
    let depths = a
        .depth
        .clone()
        .or_else(|| cfg.depth.clone())
        .map_or(DEFAULT_DEPTHS.to_vec(), |g| g.0);
    let seed = a.common.seed.or(cfg.seed).unwrap_or(0);
    let out = a.common.out.clone().or_else(|| cfg.out.clone());
    if a.svg && out.is_none() {
        return Err(CliError::Usage("--svg needs --out".into()));
    }
    let (table, chart) = match a.figure {
        Figure::F1b => {
            let t = entropy_table(model, &depths, PROFILE_SITES)?;
            let s = series(&t, "D", "N", "rel_error");
            (t, ("entropy relative error", "N", "|rel. error|", true, s))
        }
        Figure::F2a => {
            let models = match a.common.model.or(cfg.model) {
                Some(m) => vec![m],
                None => vec![Model::Ising, Model::ModifiedIsing],
            };
            let t = energy_table(&models, &depths)?;
            let s = series(&t, "model", "D", "energy_rel_error");
            (t, ("fixed-point energy error", "D", "|rel. error|", false, s))
        }
        Figure::F2b => {
            let mut rows = Vec::new();
            for &d in &depths {
                rows.extend(evaluate_rows(model, &[load_bundled_parameters(model, d)?], &FIDELITY_SITES)?);
            }
            let t = Table {
                header: EVALUATE_HEADER.to_vec(),
                rows,
            };
            let s = series(&t, "D", "L", "normalized_infidelity");
            (t, ("normalized infidelity", "L", "1 - F^(1/L)", true, s))
        }
        Figure::F3 => {
            let t = subfid_table(model, &depths, PROFILE_SITES, 1)?;
            let s = series(&t, "D", "N", "normalized_infidelity");
            (t, ("subsystem infidelity", "N", "1 - F^(1/N)", true, s))
        }
        Figure::F4a => {
            let depths = a.depth.as_ref().or(cfg.depth.as_ref()).map_or(vec![6], |g| g.0.clone());
            let (t, _) = correlate_tables(model, &depths, CORRELATOR_SITES, CORRELATOR_MAX_DISTANCE)?;
            let s = series(&t, "family", "d", "value");
            (t, ("correlators", "d", "|value|", true, s))
        }
        Figure::F4b => {
            let (mut t, _) = correlate_tables(model, &depths, CORRELATOR_SITES, CORRELATOR_MAX_DISTANCE)?;
            let f = col(&t, "family");
            t.rows.retain(|r| r[f] == "KW");
            let s = series(&t, "D", "d", "rel_error");
            (t, ("averaged correlator error", "d", "|rel. error|", true, s))
        }
        Figure::F5 => {
            let (_, t) = correlate_tables(model, &depths, CORRELATOR_SITES, CORRELATOR_MAX_DISTANCE)?;
            let s = series(&t, "D", "d", "ratio");
            (t, ("averaging gain", "d", "error ratio", true, s))
        }
        Figure::F6a | Figure::F6b => {
            if model != Model::Ising {
                return Err(CliError::Usage("the alternating-operator baseline targets the ising model only".into()));
            }
            let rounds = a
                .rounds
                .clone()
                .or_else(|| cfg.rounds.clone())
                .map_or((2..=8).collect(), |g| g.0);
            let restarts = cfg.restarts.unwrap_or(DEFAULT_QAOA_RESTARTS);
            let t = qaoa_table(&rounds, &[PROFILE_SITES], restarts, seed)?;
            let (y, title, label) = if a.figure == Figure::F6a {
                ("energy_rel_error", "alternating-operator energy error", "|rel. error|")
            } else {
                ("normalized_infidelity", "alternating-operator infidelity", "1 - F^(1/L)")
            };
            let s = series(&t, "L", "p", y);
            (t, (title, "p", label, false, s))
        }
    };
    emit(&table, out.as_deref())?;
    if a.svg {
        let path = out.expect("checked above").with_extension("svg");
        let (title, x, y, log_x, s) = chart;
        std::fs::write(path, log_chart(title, x, y, log_x, &s))?;
    }
    Ok(())
}

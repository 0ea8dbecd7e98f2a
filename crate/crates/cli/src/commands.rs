//! One function per subcommand. Each validates its inputs, computes a table
//! and writes it to `--out` or standard output.

use std::path::{Path, PathBuf};

use dmera_core::dmera::{
    energy_density, load_bundled_parameters, optimize_dmera, prepare_state, BundleEntry, DmeraInit, ScalingCircuit,
};
use dmera_core::gaussian::log_fidelity;
use dmera_core::io::{csv_string, fmt17, write_csv};
use dmera_core::models::exact_solution_cached;
use dmera_core::optimize::LbfgsOptions;
use dmera_core::qaoa::{exact_prep_single, optimize_qaoa, qaoa_state, QaoaParams, EXACT_PREP_RESTARTS};
use dmera_core::symmetry::{
    correlator_csv_rows, correlator_table_for, entropy_csv_rows, entropy_profile, infidelity_csv_rows,
    normalized_infidelity, subsystem_infidelity_profile_strided, summary_csv_rows, CORRELATOR_HEADER,
    ENTROPY_HEADER, INFIDELITY_HEADER, SUMMARY_HEADER,
};
use dmera_core::{Model, ISING_ENERGY_DENSITY};
use serde::Deserialize;

use crate::config::{layers_for, resolve_sites, Grid, RunConfig};
use crate::{CliError, CorrelateArgs, EvaluateArgs, InitKind, OptimizeArgs, ProfileArgs, QaoaArgs};

pub const EVALUATE_HEADER: [&str; 6] = [
    "model",
    "D",
    "L",
    "energy_density",
    "energy_rel_error",
    "normalized_infidelity",
];
pub const QAOA_HEADER: [&str; 5] = ["p", "L", "energy_density", "energy_rel_error", "normalized_infidelity"];

pub const DEFAULT_DEPTHS: [usize; 6] = [1, 2, 3, 4, 5, 6];
pub const DEFAULT_SITES: usize = 256;
pub const DEFAULT_CORRELATOR_SITES: usize = 512;
pub const DEFAULT_MAX_DISTANCE: usize = 64;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_QAOA_RESTARTS: usize = 2;

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub fn emit(table: &Table, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => write_csv(p, &table.header, &table.rows)?,
        None => print!("{}", csv_string(&table.header, &table.rows)?),
    }
    Ok(())
}

pub fn energy_rel_error(e: f64) -> f64 {
    (e - ISING_ENERGY_DENSITY).abs() / ISING_ENERGY_DENSITY.abs()
}

fn pick<T: Clone>(flag: Option<T>, cfg: &Option<T>) -> Option<T> {
    flag.or_else(|| cfg.clone())
}

fn out_path(flag: &Option<PathBuf>, cfg: &RunConfig) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.out.clone())
}

/// Parameter file: the bundled schema, with model and depth optional.
#[derive(Debug, Deserialize)]
struct ParamFile {
    model: Option<Model>,
    #[serde(rename = "D")]
    depth: Option<usize>,
    theta: Vec<f64>,
}

fn read_params(path: &Path) -> Result<(Option<Model>, ScalingCircuit), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read parameters {}: {e}", path.display())))?;
    let f: ParamFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad parameter file {}: {e}", path.display())))?;
    let c = ScalingCircuit::new(f.theta).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if f.depth.is_some_and(|d| d != c.depth()) {
        return Err(CliError::Usage(format!(
            "{}: D = {} but theta holds {} rows",
            path.display(),
            f.depth.unwrap_or_default(),
            c.depth()
        )));
    }
    Ok((f.model, c))
}

fn check_bundled_depths(depths: &[usize]) -> Result<(), CliError> {
    match depths.iter().find(|d| !(1..=6).contains(*d)) {
        Some(d) => Err(CliError::Usage(format!("bundled parameters cover depths 1..=6, got {d}"))),
        None => Ok(()),
    }
}

fn check_sites(model: Model, sites: &[usize]) -> Result<(), CliError> {
    for &l in sites {
        layers_for(l)?;
        if l < model.min_sites() {
            return Err(CliError::Usage(format!("{model} needs at least {} sites, got {l}", model.min_sites())));
        }
    }
    Ok(())
}

/// Windows of `1, 2, 4, …` sites strictly smaller than the ring.
pub fn window_sizes(l: usize) -> Vec<usize> {
    (0..).map(|k| 1usize << k).take_while(|&n| n < l).collect()
}

pub fn evaluate_rows(model: Model, circuits: &[ScalingCircuit], sites: &[usize]) -> Result<Vec<Vec<String>>, CliError> {
    let mut rows = Vec::new();
    for c in circuits {
        let e = energy_density(c, model)?;
        for &l in sites {
            let state = prepare_state(c, layers_for(l)?)?;
            let exact = &exact_solution_cached(model, l)?.ground_state;
            let inf = normalized_infidelity(log_fidelity(&state, exact)?, l);
            rows.push(vec![
                model.to_string(),
                c.depth().to_string(),
                l.to_string(),
                fmt17(e),
                fmt17(energy_rel_error(e)),
                fmt17(inf),
            ]);
        }
    }
    Ok(rows)
}

pub fn evaluate(a: EvaluateArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let sites = resolve_sites(pick(a.sites, &cfg.sites), a.layers.or(cfg.layers), DEFAULT_SITES)?;
    let (model, circuits) = match &a.params {
        Some(p) => {
            let (file_model, c) = read_params(p)?;
            let model = a.common.model.or(file_model).or(cfg.model).unwrap_or(Model::Ising);
            (model, vec![c])
        }
        None => {
            let model = a.common.model.or(cfg.model).unwrap_or(Model::Ising);
            let depths = pick(a.depth, &cfg.depth).map_or(DEFAULT_DEPTHS.to_vec(), |g| g.0);
            check_bundled_depths(&depths)?;
            let circuits: Result<Vec<_>, _> = depths.iter().map(|&d| load_bundled_parameters(model, d)).collect();
            (model, circuits?)
        }
    };
    check_sites(model, &sites)?;
    let rows = evaluate_rows(model, &circuits, &sites)?;
    emit(
        &Table {
            header: EVALUATE_HEADER.to_vec(),
            rows,
        },
        out_path(&a.common.out, cfg).as_deref(),
    )
}

pub fn optimize(a: OptimizeArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let model = a.common.model.or(cfg.model).unwrap_or(Model::Ising);
    let depth = match a.depth.or_else(|| cfg.depth.as_ref().and_then(|g| g.0.first().copied())) {
        Some(d) if d >= 1 => d,
        Some(d) => return Err(CliError::Usage(format!("depth must be at least 1, got {d}"))),
        None => return Err(CliError::Usage("--depth is required".into())),
    };
    let seed = a.common.seed.or(cfg.seed).unwrap_or(0);
    let restarts = a.restarts.or(cfg.restarts).unwrap_or(DEFAULT_RESTARTS);
    let kind = a.init.unwrap_or(if depth >= 3 { InitKind::Bootstrap } else { InitKind::Random });
    let init = match kind {
        InitKind::Random => {
            if a.from.is_some() || a.from_depth.is_some() {
                return Err(CliError::Usage("--from/--from-depth need --init bootstrap".into()));
            }
            DmeraInit::Random { starts: restarts }
        }
        InitKind::Bootstrap => {
            let from = match (&a.from, a.from_depth) {
                (Some(p), None) => read_params(p)?.1,
                (None, d) => {
                    let d = d.unwrap_or(depth.saturating_sub(1));
                    if d == 0 || d >= depth || depth - d > 2 {
                        return Err(CliError::Usage(format!(
                            "bootstrap source depth must be {} or {}, got {d}",
                            depth.saturating_sub(2),
                            depth - 1
                        )));
                    }
                    check_bundled_depths(&[d])?;
                    load_bundled_parameters(model, d)?
                }
                (Some(_), Some(_)) => return Err(CliError::Usage("give either --from or --from-depth".into())),
            };
            if !(depth == from.depth() + 1 || depth == from.depth() + 2) {
                return Err(CliError::Usage(format!(
                    "cannot grow depth {} to depth {depth}",
                    from.depth()
                )));
            }
            if a.position.is_some_and(|p| depth != from.depth() + 2 || p > from.depth()) {
                return Err(CliError::Usage("--position applies to two-row growth within the circuit".into()));
            }
            DmeraInit::Bootstrap {
                from: from.params().to_vec(),
                position: a.position,
            }
        }
    };
    let opts = LbfgsOptions {
        restarts,
        seed,
        ..Default::default()
    };
    let run = optimize_dmera(model, depth, &init, &opts)?;
    if let Some(log) = a.log.as_ref() {
        run.write_log(log)?;
    }
    let entry = BundleEntry {
        model,
        depth,
        theta: run.final_params.clone(),
    };
    let json = serde_json::to_string_pretty(&entry).map_err(|e| CliError::Failed(e.to_string()))? + "\n";
    match out_path(&a.common.out, cfg) {
        Some(p) => std::fs::write(p, json)?,
        None => print!("{json}"),
    }
    eprintln!(
        "{model} D={depth}: energy density {}, relative error {:.3e}, {} restarts, converged {}",
        fmt17(run.final_value),
        energy_rel_error(run.final_value),
        run.restarts_used,
        run.converged
    );
    if !run.converged {
        return Err(CliError::Failed("optimizer stopped without meeting its tolerances".into()));
    }
    Ok(())
}

pub fn correlate_tables(
    model: Model,
    depths: &[usize],
    l: usize,
    max_distance: usize,
) -> Result<(Table, Table), CliError> {
    if max_distance == 0 || max_distance > l / 2 {
        return Err(CliError::Usage(format!("--max-distance must be in 1..={}, got {max_distance}", l / 2)));
    }
    check_bundled_depths(depths)?;
    check_sites(model, &[l])?;
    let distances: Vec<usize> = (1..=max_distance).collect();
    let exact = &exact_solution_cached(model, l)?.ground_state;
    let mut corr = Vec::new();
    let mut summary = Vec::new();
    for &d in depths {
        let state = prepare_state(&load_bundled_parameters(model, d)?, layers_for(l)?)?;
        let t = correlator_table_for(model, &state, exact, max_distance)?;
        corr.extend(correlator_csv_rows(&t, d, model.name(), &distances)?);
        summary.extend(summary_csv_rows(&t, d, model.name(), &distances)?);
    }
    Ok((
        Table {
            header: CORRELATOR_HEADER.to_vec(),
            rows: corr,
        },
        Table {
            header: SUMMARY_HEADER.to_vec(),
            rows: summary,
        },
    ))
}

fn single_site_count(sites: Vec<usize>) -> Result<usize, CliError> {
    match sites.as_slice() {
        [l] => Ok(*l),
        _ => Err(CliError::Usage("this command takes a single --sites value".into())),
    }
}

pub fn correlate(a: CorrelateArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let model = a.common.model.or(cfg.model).unwrap_or(Model::Ising);
    let l = single_site_count(resolve_sites(
        pick(a.sites, &cfg.sites),
        a.layers.or(cfg.layers),
        DEFAULT_CORRELATOR_SITES,
    )?)?;
    let depths = pick(a.depth, &cfg.depth).map_or(vec![6], |g| g.0);
    let max_distance = a
        .max_distance
        .or(cfg.max_distance)
        .unwrap_or(DEFAULT_MAX_DISTANCE.min(l / 2));
    let (corr, summary) = correlate_tables(model, &depths, l, max_distance)?;
    emit(&corr, out_path(&a.common.out, cfg).as_deref())?;
    if let Some(p) = a.summary.as_deref() {
        emit(&summary, Some(p))?;
    }
    Ok(())
}

struct Profile {
    model: Model,
    depths: Vec<usize>,
    l: usize,
    stride: usize,
}

fn profile_inputs(a: &ProfileArgs, cfg: &RunConfig) -> Result<Profile, CliError> {
    let model = a.common.model.or(cfg.model).unwrap_or(Model::Ising);
    let l = single_site_count(resolve_sites(
        pick(a.sites.clone(), &cfg.sites),
        a.layers.or(cfg.layers),
        DEFAULT_SITES,
    )?)?;
    let depths = pick(a.depth.clone(), &cfg.depth).map_or(DEFAULT_DEPTHS.to_vec(), |g| g.0);
    check_bundled_depths(&depths)?;
    check_sites(model, &[l])?;
    let stride = a.stride.or(cfg.stride).unwrap_or(1);
    if stride == 0 {
        return Err(CliError::Usage("--stride must be positive".into()));
    }
    Ok(Profile { model, depths, l, stride })
}

pub fn entropy_table(model: Model, depths: &[usize], l: usize) -> Result<Table, CliError> {
    let exact = &exact_solution_cached(model, l)?.ground_state;
    let sizes = window_sizes(l);
    let mut rows = Vec::new();
    for &d in depths {
        let state = prepare_state(&load_bundled_parameters(model, d)?, layers_for(l)?)?;
        rows.extend(entropy_csv_rows(l, d, &entropy_profile(&state, exact, &sizes)?));
    }
    Ok(Table {
        header: ENTROPY_HEADER.to_vec(),
        rows,
    })
}

pub fn entropy(a: ProfileArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let p = profile_inputs(&a, cfg)?;
    emit(&entropy_table(p.model, &p.depths, p.l)?, out_path(&a.common.out, cfg).as_deref())
}

pub fn subfid_table(model: Model, depths: &[usize], l: usize, stride: usize) -> Result<Table, CliError> {
    let exact = &exact_solution_cached(model, l)?.ground_state;
    let sizes = window_sizes(l);
    let mut rows = Vec::new();
    for &d in depths {
        let state = prepare_state(&load_bundled_parameters(model, d)?, layers_for(l)?)?;
        let profile = subsystem_infidelity_profile_strided(&state, exact, &sizes, stride)?;
        rows.extend(infidelity_csv_rows(l, d, &profile));
    }
    Ok(Table {
        header: INFIDELITY_HEADER.to_vec(),
        rows,
    })
}

pub fn subfid(a: ProfileArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let p = profile_inputs(&a, cfg)?;
    emit(
        &subfid_table(p.model, &p.depths, p.l, p.stride)?,
        out_path(&a.common.out, cfg).as_deref(),
    )
}

pub fn qaoa_table(rounds: &[usize], sites: &[usize], restarts: usize, seed: u64) -> Result<Table, CliError> {
    for &p in rounds {
        if !(1..=8).contains(&p) {
            return Err(CliError::Usage(format!("rounds must be in 1..=8, got {p}")));
        }
        for &l in sites {
            if l < 2 * p || l % 2 != 0 {
                return Err(CliError::Usage(format!("need an even L ≥ 2p, got L={l}, p={p}")));
            }
        }
    }
    let mut rows = Vec::new();
    for &p in rounds {
        let init = exact_prep_single(p, EXACT_PREP_RESTARTS, seed)?;
        for &l in sites {
            let params: QaoaParams = if l == 2 * p {
                init.clone()
            } else {
                optimize_qaoa(p, l, restarts, Some(&init), seed)?.params
            };
            let density = dmera_core::qaoa::energy_density(&params, l)?;
            let exact = &exact_solution_cached(Model::Ising, l)?.ground_state;
            let inf = normalized_infidelity(log_fidelity(&qaoa_state(&params, l)?, exact)?, l);
            rows.push(vec![
                p.to_string(),
                l.to_string(),
                fmt17(density),
                fmt17(energy_rel_error(density)),
                fmt17(inf),
            ]);
        }
    }
    Ok(Table {
        header: QAOA_HEADER.to_vec(),
        rows,
    })
}

pub fn qaoa(a: QaoaArgs, cfg: &RunConfig) -> Result<(), CliError> {
    if a.common.model.or(cfg.model).is_some_and(|m| m != Model::Ising) {
        return Err(CliError::Usage("the alternating-operator baseline targets the ising model only".into()));
    }
    let rounds = pick(a.rounds, &cfg.rounds).unwrap_or(Grid((2..=8).collect())).0;
    let sites = pick(a.sites, &cfg.sites).map_or(vec![DEFAULT_SITES], |g| g.0);
    let restarts = a.restarts.or(cfg.restarts).unwrap_or(DEFAULT_QAOA_RESTARTS);
    let seed = a.common.seed.or(cfg.seed).unwrap_or(0);
    emit(
        &qaoa_table(&rounds, &sites, restarts, seed)?,
        out_path(&a.common.out, cfg).as_deref(),
    )
}

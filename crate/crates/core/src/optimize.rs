//! Derivative-free-input minimization: central finite differences feeding
//! L-BFGS with Armijo backtracking and perturbed restarts.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deterministic scalar function of a parameter vector.
pub trait Objective: Sync {
    fn arity(&self) -> usize;
    fn evaluate(&self, params: &[f64]) -> f64;
    fn description(&self) -> String {
        format!("objective of {} parameters", self.arity())
    }
}

/// Wrap a closure as an [`Objective`].
pub struct FnObjective<F> {
    arity: usize,
    label: String,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(arity: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            arity,
            label: label.into(),
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, params: &[f64]) -> f64 {
        (self.f)(params)
    }

    fn description(&self) -> String {
        self.label.clone()
    }
}

pub const DEFAULT_STEP: f64 = 1e-6;

fn checked_eval(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    let v = obj.evaluate(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(x.to_vec()))
    }
}

/// `(f(θ + h e_i) - f(θ - h e_i)) / 2h` for every coordinate.
pub fn finite_diff_gradient(obj: &dyn Objective, params: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidOption(format!("step must be positive, got {h}")));
    }
    if params.len() != obj.arity() {
        return Err(Error::ParameterLength {
            expected: obj.arity(),
            got: params.len(),
        });
    }
    (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut x = params.to_vec();
            x[i] = params[i] + h;
            let fp = checked_eval(obj, &x)?;
            x[i] = params[i] - h;
            let fm = checked_eval(obj, &x)?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Fourth-order stencil, used to check the two-point gradient.
pub fn finite_diff_gradient_5pt(obj: &dyn Objective, params: &[f64], h: f64) -> Result<Vec<f64>> {
    (0..params.len())
        .into_par_iter()
        .map(|i| {
            let at = |t: f64| {
                let mut x = params.to_vec();
                x[i] += t;
                checked_eval(obj, &x)
            };
            Ok((-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h))
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Stop once an accepted step lowers the value by less than
    /// `f_tol · max(1, |f|)`. Finite-difference gradients have a noise floor
    /// far above `grad_tol`, so this is the usual exit.
    pub f_tol: f64,
    pub restarts: usize,
    pub perturbation_scale: f64,
    pub fd_step: f64,
    /// Plain gradient-descent iterations run before L-BFGS.
    pub gd_iters: usize,
    pub seed: u64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 2000,
            grad_tol: 1e-10,
            f_tol: 1e-15,
            restarts: 8,
            perturbation_scale: 0.05,
            fd_step: DEFAULT_STEP,
            gd_iters: 0,
            seed: 0,
        }
    }
}

impl LbfgsOptions {
    fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::InvalidOption("memory must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0 && self.f_tol >= 0.0) {
            return Err(Error::InvalidOption("tolerances must be non-negative".into()));
        }
        if !(self.perturbation_scale >= 0.0 && self.fd_step > 0.0) {
            return Err(Error::InvalidOption(
                "perturbation scale must be non-negative and step positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub params: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
}

/// One JSON-lines record of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub description: String,
    pub initial_params: Vec<f64>,
    /// Accepted steps of every restart, in order. The first entry is the start.
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_params: Vec<f64>,
    pub final_value: f64,
    pub converged: bool,
    pub restarts_used: usize,
}

impl OptimizationRun {
    pub fn log_records(&self) -> Vec<LogRecord> {
        self.trajectory
            .iter()
            .enumerate()
            .map(|(iter, p)| LogRecord {
                iter,
                value: p.value,
                grad_norm: p.grad_norm,
            })
            .collect()
    }

    pub fn write_log<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        crate::io::write_json_lines(path, &self.log_records())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    GradTol,
    FTol,
    LineSearch,
    MaxIter,
}

struct Segment {
    x: Vec<f64>,
    f: f64,
    exit: Exit,
}

/// Backtracking along `d` until Armijo holds; `None` after 60 halvings.
fn line_search(
    obj: &dyn Objective,
    x: &[f64],
    f: f64,
    g: &[f64],
    d: &[f64],
    step0: f64,
) -> Result<Option<(Vec<f64>, f64)>> {
    const C1: f64 = 1e-4;
    let slope = dot(g, d);
    let mut t = step0;
    for _ in 0..60 {
        let xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        let fn_ = obj.evaluate(&xn);
        if fn_.is_finite() && fn_ <= f + C1 * t * slope {
            return Ok(Some((xn, fn_)));
        }
        t *= 0.5;
    }
    Ok(None)
}

fn run_segment(
    obj: &dyn Objective,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
    trajectory: &mut Vec<TrajectoryPoint>,
) -> Result<Segment> {
    let mut x = x0;
    let mut f = checked_eval(obj, &x)?;
    let mut g = finite_diff_gradient(obj, &x, opts.fd_step)?;
    trajectory.push(TrajectoryPoint {
        params: x.clone(),
        value: f,
        grad_norm: norm(&g),
    });
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let accept = |x: &[f64], f: f64, g: &[f64], traj: &mut Vec<TrajectoryPoint>| {
        traj.push(TrajectoryPoint {
            params: x.to_vec(),
            value: f,
            grad_norm: norm(g),
        })
    };

    for _ in 0..opts.gd_iters {
        if norm(&g) <= opts.grad_tol {
            return Ok(Segment { x, f, exit: Exit::GradTol });
        }
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let step0 = (1.0 / norm(&g)).min(1.0);
        match line_search(obj, &x, f, &g, &d, step0)? {
            Some((xn, fnew)) => {
                x = xn;
                f = fnew;
                g = finite_diff_gradient(obj, &x, opts.fd_step)?;
                accept(&x, f, &g, trajectory);
            }
            None => break,
        }
    }

    for it in 0..opts.max_iter {
        let gnorm = norm(&g);
        if gnorm <= opts.grad_tol {
            return Ok(Segment { x, f, exit: Exit::GradTol });
        }
        // two-loop recursion
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dot(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        let gamma = if k > 0 {
            dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut step0 = 1.0;
        if dot(&d, &g) >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -v).collect();
        }
        if s_hist.is_empty() {
            step0 = (1.0 / gnorm).min(1.0);
        }
        let Some((xn, fnew)) = line_search(obj, &x, f, &g, &d, step0)? else {
            return Ok(Segment { x, f, exit: Exit::LineSearch });
        };
        let gn = finite_diff_gradient(obj, &xn, opts.fd_step)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let decrease = f - fnew;
        x = xn;
        f = fnew;
        g = gn;
        accept(&x, f, &g, trajectory);
        if dot(&s, &y) > 1e-16 * norm(&s) * norm(&y) {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        if decrease <= opts.f_tol * f.abs().max(1.0) && it > 0 {
            return Ok(Segment { x, f, exit: Exit::FTol });
        }
    }
    Ok(Segment { x, f, exit: Exit::MaxIter })
}

/// L-BFGS from `x0`. A run that stalls (line-search failure or iteration cap)
/// is restarted from the best point so far plus Gaussian noise, up to
/// `opts.restarts` times.
pub fn lbfgs_minimize(obj: &dyn Objective, x0: &[f64], opts: &LbfgsOptions) -> Result<OptimizationRun> {
    use rand::SeedableRng;
    opts.validate()?;
    if x0.len() != obj.arity() {
        return Err(Error::ParameterLength {
            expected: obj.arity(),
            got: x0.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.perturbation_scale).expect("finite scale");
    let mut trajectory = Vec::new();
    let mut best: Option<Segment> = None;
    let mut restarts_used = 0;
    let mut start = x0.to_vec();
    loop {
        let seg = run_segment(obj, start, opts, &mut trajectory)?;
        let done = matches!(seg.exit, Exit::GradTol | Exit::FTol);
        let improved = best.as_ref().is_none_or(|b| seg.f < b.f);
        if improved {
            best = Some(seg);
        }
        let b = best.as_ref().expect("set above");
        if done && improved {
            break;
        }
        if restarts_used == opts.restarts {
            break;
        }
        restarts_used += 1;
        start = b.x.iter().map(|v| v + noise.sample(&mut rng)).collect();
    }
    let b = best.expect("at least one segment");
    Ok(OptimizationRun {
        description: obj.description(),
        initial_params: x0.to_vec(),
        trajectory,
        final_params: b.x,
        final_value: b.f,
        converged: matches!(b.exit, Exit::GradTol | Exit::FTol),
        restarts_used,
    })
}

/// Independent runs from uniform random starts in `(lo, hi]`; returns the best.
pub fn multi_start(
    obj: &dyn Objective,
    starts: usize,
    range: (f64, f64),
    opts: &LbfgsOptions,
    rng: &mut ChaCha8Rng,
) -> Result<OptimizationRun> {
    let mut best: Option<OptimizationRun> = None;
    for _ in 0..starts.max(1) {
        let x0: Vec<f64> = (0..obj.arity())
            .map(|_| range.1 - rng.random::<f64>() * (range.1 - range.0))
            .collect();
        let run = lbfgs_minimize(obj, &x0, opts)?;
        if best.as_ref().is_none_or(|b| run.final_value < b.final_value) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::OptimizerFailure("no start produced a result".into()))
}

/// How to grow a depth-`D` solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BootstrapMode {
    /// One near-identity row after the last row (depth `D + 1`).
    AppendOne,
    /// Two near-identity rows before row `position` (depth `D + 2`).
    InsertTwo { position: usize },
}

pub const BOOTSTRAP_SIGMA: f64 = 1e-3;

/// Extend `theta` (pairs `(x', y')` per row) with near-identity rows drawn
/// from `N(0, σ²)`, `σ = 1e-3`.
pub fn bootstrap_depth(theta: &[f64], mode: BootstrapMode, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if theta.is_empty() || !theta.len().is_multiple_of(2) {
        return Err(Error::ParameterLength {
            expected: 2 * (theta.len() / 2).max(1),
            got: theta.len(),
        });
    }
    let normal = Normal::new(0.0, BOOTSTRAP_SIGMA).expect("finite sigma");
    let mut fresh = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(rng)).collect() };
    let depth = theta.len() / 2;
    match mode {
        BootstrapMode::AppendOne => {
            let mut out = theta.to_vec();
            out.extend(fresh(2));
            Ok(out)
        }
        BootstrapMode::InsertTwo { position } => {
            if position > depth {
                return Err(Error::InvalidOption(format!(
                    "insert position {position} beyond depth {depth}"
                )));
            }
            let mut out = theta[..2 * position].to_vec();
            out.extend(fresh(4));
            out.extend_from_slice(&theta[2 * position..]);
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn gradient_of_quadratic() {
        let obj = FnObjective::new(2, "sum of squares", |x: &[f64]| x.iter().map(|v| v * v).sum());
        let g = finite_diff_gradient(&obj, &[1.0, 2.0], 1e-6).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
        let c = FnObjective::new(3, "constant", |_: &[f64]| 7.0);
        assert_eq!(finite_diff_gradient(&c, &[0.1, 0.2, 0.3], 1e-6).unwrap(), vec![0.0; 3]);
        assert!(finite_diff_gradient(&c, &[0.1, 0.2, 0.3], 0.0).is_err());
    }

    #[test]
    fn gradient_rejects_nan() {
        let obj = FnObjective::new(1, "log", |x: &[f64]| x[0].ln());
        assert!(matches!(
            finite_diff_gradient(&obj, &[-1.0], 1e-6),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn rosenbrock_minimum() {
        let obj = FnObjective::new(2, "rosenbrock", rosenbrock);
        let run = lbfgs_minimize(&obj, &[-1.2, 1.0], &LbfgsOptions::default()).unwrap();
        assert!((run.final_params[0] - 1.0).abs() < 1e-6, "{:?}", run.final_params);
        assert!((run.final_params[1] - 1.0).abs() < 1e-6);
        assert!(run.converged);
    }

    #[test]
    fn gradient_descent_stage_and_log() {
        let obj = FnObjective::new(2, "rosenbrock", rosenbrock);
        let opts = LbfgsOptions {
            gd_iters: 20,
            ..Default::default()
        };
        let run = lbfgs_minimize(&obj, &[-1.2, 1.0], &opts).unwrap();
        assert!((run.final_params[0] - 1.0).abs() < 1e-6);
        let log = run.log_records();
        assert_eq!(log.len(), run.trajectory.len());
        assert_eq!(log[0].iter, 0);
    }

    #[test]
    fn final_value_is_trajectory_minimum() {
        let obj = FnObjective::new(2, "rosenbrock", rosenbrock);
        let run = lbfgs_minimize(&obj, &[0.5, -0.3], &LbfgsOptions::default()).unwrap();
        let min = run
            .trajectory
            .iter()
            .map(|p| p.value)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, run.final_value);
    }

    #[test]
    fn bootstrap_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t1 = [0.43188, -1.13891];
        let t = bootstrap_depth(&t1, BootstrapMode::AppendOne, &mut rng).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(&t[..2], &t1);
        assert!(t[2].abs() < 1e-2 && t[3].abs() < 1e-2);

        let t2 = [0.1379, -0.56374, -0.53456, 0.18071];
        let t = bootstrap_depth(&t2, BootstrapMode::InsertTwo { position: 1 }, &mut rng).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(&t[..2], &t2[..2]);
        assert_eq!(&t[6..], &t2[2..]);
        assert!(bootstrap_depth(&t2, BootstrapMode::InsertTwo { position: 3 }, &mut rng).is_err());
    }
}

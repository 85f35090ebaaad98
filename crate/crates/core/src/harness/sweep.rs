use rayon::prelude::*;

use super::config::{Level, Setting, SweepConfig};
use super::table::{IterRow, LambdaRow};
use crate::error::{Error, Result};
use crate::linalg::{normalize_columns, DenseMatrix, SupportSet};
use crate::losses::{LossSpec, Weights};
use crate::problems::{
    gen_function_approx, gen_gaussian_sparse, gen_oracle_weights, hyperbolic_cross, iso_exponential,
    GaussianParams, McEvaluator, MultiIndexSet, ProblemInstance,
};
use crate::solvers::{omp_run, relative_l2_error, GreedyTrace, SolverOptions, TerminalStatus};

const WEIGHT_STREAM: u64 = 0x5745_4947_4854_5331;
const MC_STREAM: u64 = 0x4d43_504f_494e_5453;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "WOMP_THREADS";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed; depends only on its arguments, so adding trials or
/// levels never changes existing instances.
pub fn derive_seed(base_seed: u64, level: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ level as u64) ^ trial as u64)
}

fn iso(t: &[f64]) -> f64 {
    // sample points are drawn inside the cube
    iso_exponential(t).unwrap_or(f64::NAN)
}

/// The instance a sweep uses for `(level, trial)`, before any column
/// normalization.
pub fn trial_instance(cfg: &SweepConfig, level: &Level, trial: usize) -> Result<ProblemInstance> {
    let set = match cfg.setting {
        Setting::FunctionApprox => Some(index_set(cfg)?),
        _ => None,
    };
    build_instance(cfg, level, trial, set.as_ref())
}

fn index_set(cfg: &SweepConfig) -> Result<MultiIndexSet> {
    let (Some(d), Some(order)) = (cfg.d, cfg.hc_order) else {
        return Err(Error::InvalidConfig("function-approx needs d and hc_order".into()));
    };
    hyperbolic_cross(d, order)
}

fn build_instance(
    cfg: &SweepConfig,
    level: &Level,
    trial: usize,
    set: Option<&MultiIndexSet>,
) -> Result<ProblemInstance> {
    let seed = derive_seed(cfg.base_seed, level.id, trial);
    match cfg.setting {
        Setting::GaussianSparse | Setting::GaussianOracle => {
            let params = GaussianParams {
                n: cfg.n.unwrap_or(0),
                m: cfg.m,
                s: cfg.s.unwrap_or(0),
                eta: level.eta,
                big_m: cfg.big_m,
                k_corrupt: level.k_corrupt,
            };
            let mut inst = gen_gaussian_sparse(&params, seed)?;
            if cfg.setting == Setting::GaussianOracle {
                let support = inst.true_support().unwrap_or_else(SupportSet::empty);
                inst.w = gen_oracle_weights(
                    &support,
                    cfg.oracle_fraction,
                    cfg.w0,
                    params.n,
                    splitmix64(seed ^ WEIGHT_STREAM),
                )?;
                inst.meta.setting = Setting::GaussianOracle.name().into();
                inst.meta.w0 = Some(cfg.w0);
            }
            Ok(inst)
        }
        Setting::FunctionApprox => {
            let set = set.ok_or_else(|| Error::InvalidConfig("missing index set".into()))?;
            let mut inst =
                gen_function_approx(&iso, set, cfg.m, level.eta, cfg.big_m, level.k_corrupt, seed)?;
            inst.meta.hc_order = cfg.hc_order;
            Ok(inst)
        }
    }
}

enum Scorer {
    Coefficients(Vec<f64>),
    Function {
        scales: Vec<f64>,
        evaluator: Box<McEvaluator>,
    },
}

/// A generated trial ready for the solver: unit-norm columns, and a way to
/// score solutions expressed in those columns.
struct Trial {
    a: DenseMatrix,
    y: Vec<f64>,
    w: Weights,
    scorer: Scorer,
}

impl Trial {
    fn new(cfg: &SweepConfig, level: &Level, trial: usize, set: Option<&MultiIndexSet>) -> Result<Self> {
        let inst = build_instance(cfg, level, trial, set)?;
        let (a, scales) = normalize_columns(&inst.a)?;
        let scorer = match (inst.x_true, set) {
            (Some(x), _) => Scorer::Coefficients(x),
            (None, Some(set)) => Scorer::Function {
                scales,
                evaluator: Box::new(McEvaluator::new(
                    &iso,
                    set,
                    cfg.mc_points,
                    splitmix64(inst.meta.seed ^ MC_STREAM),
                )?),
            },
            (None, None) => return Err(Error::ZeroTruth),
        };
        Ok(Self {
            a,
            y: inst.y,
            w: inst.w,
            scorer,
        })
    }

    fn error(&self, x: &[f64]) -> Result<f64> {
        match &self.scorer {
            Scorer::Coefficients(truth) => relative_l2_error(x, truth),
            Scorer::Function { scales, evaluator } => {
                let unscaled: Vec<f64> = x.iter().zip(scales).map(|(v, s)| v / s).collect();
                evaluator.relative_error(&unscaled)
            }
        }
    }

    fn run(&self, cfg: &SweepConfig, lambda: f64) -> Result<GreedyTrace> {
        let spec = LossSpec::new(cfg.rule, lambda)?;
        omp_run(&spec, &self.a, &self.y, &self.w, &SolverOptions::with_iterations(cfg.k))
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

fn final_status(trace: &GreedyTrace) -> &'static str {
    if trace.records.iter().any(|r| r.not_converged) {
        "not-converged"
    } else if trace.records.last().is_some_and(|r| r.rank_deficient) {
        "rank-deficient"
    } else {
        match trace.status {
            TerminalStatus::CompletedK => "ok",
            TerminalStatus::Stalled => "stalled",
            TerminalStatus::DeltaBelowTol => "delta-below-tol",
        }
    }
}

fn error_status(e: &Error) -> String {
    // keep the field CSV-safe
    format!("error: {}", e.to_string().replace([',', '\n', '"'], " "))
}

/// Relative error versus the tuning parameter at a fixed iteration count.
///
/// Rows come out ordered by `(level, lambda, trial)`; failed cells are kept
/// with a non-`ok` status and a NaN error.
pub fn sweep_lambda(cfg: &SweepConfig) -> Result<Vec<LambdaRow>> {
    cfg.validate()?;
    let set = match cfg.setting {
        Setting::FunctionApprox => Some(index_set(cfg)?),
        _ => None,
    };
    let grid = cfg.lambda_grid();
    let levels = cfg.levels();
    let jobs: Vec<(usize, usize)> = (0..levels.len())
        .flat_map(|l| (0..cfg.n_trials).map(move |t| (l, t)))
        .collect();
    let per_job: Vec<Vec<LambdaRow>> = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(l, t)| {
                let level = &levels[l];
                let desc = level.desc(cfg);
                let row = |lambda: f64, rel_error: f64, status: String| LambdaRow {
                    level_id: level.id,
                    level_desc: desc.clone(),
                    lambda,
                    trial: t,
                    rel_error,
                    status,
                };
                let trial = match Trial::new(cfg, level, t, set.as_ref()) {
                    Ok(trial) => trial,
                    Err(e) => {
                        return grid
                            .iter()
                            .map(|&lambda| row(lambda, f64::NAN, error_status(&e)))
                            .collect()
                    }
                };
                grid.iter()
                    .map(|&lambda| {
                        match trial
                            .run(cfg, lambda)
                            .and_then(|tr| Ok((trial.error(&tr.final_x())?, final_status(&tr))))
                        {
                            Ok((err, status)) => row(lambda, err, status.into()),
                            Err(e) => row(lambda, f64::NAN, error_status(&e)),
                        }
                    })
                    .collect()
            })
            .collect()
    });
    let mut rows: Vec<LambdaRow> = per_job.into_iter().flatten().collect();
    // jobs are (level, trial)-major with lambda inside; reorder canonically
    rows.sort_by_key(|r| r.trial);
    let lambda_pos = |lambda: f64| grid.iter().position(|&g| g == lambda).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (r.level_id, lambda_pos(r.lambda)));
    Ok(rows)
}

/// The tuning parameters of an iteration sweep: 0 followed by the grid.
pub fn iteration_lambdas(cfg: &SweepConfig) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(cfg.lambda_grid());
    out
}

/// Per-iteration error traces for `lambda = 0` and every grid value.
///
/// Needs exactly one level. Runs that stall are carried forward to `K` with
/// status `stalled`, since further iterations would repeat the last one.
/// Rows are ordered by `(lambda, trial, k)`.
pub fn sweep_iterations(cfg: &SweepConfig) -> Result<Vec<IterRow>> {
    cfg.validate()?;
    let levels = cfg.levels();
    if levels.len() != 1 {
        return Err(Error::InvalidConfig(format!(
            "iteration sweeps need a single noise level, got {}",
            levels.len()
        )));
    }
    let level = &levels[0];
    let set = match cfg.setting {
        Setting::FunctionApprox => Some(index_set(cfg)?),
        _ => None,
    };
    let lambdas = iteration_lambdas(cfg);
    let per_trial: Vec<Vec<(usize, Vec<IterRow>)>> = pool()?.install(|| {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| {
                let trial = Trial::new(cfg, level, t, set.as_ref());
                lambdas
                    .iter()
                    .enumerate()
                    .map(|(li, &lambda)| {
                        let rows = match &trial {
                            Ok(trial) => iteration_rows(cfg, trial, lambda, t),
                            Err(e) => vec![failed_iter_row(lambda, t, 1, e)],
                        };
                        (li, rows)
                    })
                    .collect()
            })
            .collect()
    });
    let mut cells: Vec<(usize, usize, Vec<IterRow>)> = per_trial
        .into_iter()
        .enumerate()
        .flat_map(|(t, cells)| cells.into_iter().map(move |(li, rows)| (li, t, rows)))
        .collect();
    cells.sort_by_key(|(li, t, _)| (*li, *t));
    Ok(cells.into_iter().flat_map(|(_, _, rows)| rows).collect())
}

fn failed_iter_row(lambda: f64, trial: usize, k: usize, e: &Error) -> IterRow {
    IterRow {
        lambda,
        trial,
        k,
        rel_error: f64::NAN,
        fidelity: f64::NAN,
        loss: f64::NAN,
        selected_index: 0,
        support_size: 0,
        status: error_status(e),
    }
}

fn iteration_rows(cfg: &SweepConfig, trial: &Trial, lambda: f64, t: usize) -> Vec<IterRow> {
    let trace = match trial.run(cfg, lambda) {
        Ok(trace) => trace,
        Err(e) => return vec![failed_iter_row(lambda, t, 1, &e)],
    };
    let mut rows = Vec::with_capacity(cfg.k);
    for rec in &trace.records {
        let (rel_error, status) = match trial.error(&rec.x) {
            Ok(err) => {
                let status = if rec.not_converged {
                    "not-converged"
                } else if rec.stalled {
                    "stalled"
                } else if rec.rank_deficient {
                    "rank-deficient"
                } else {
                    "ok"
                };
                (err, status.to_string())
            }
            Err(e) => (f64::NAN, error_status(&e)),
        };
        rows.push(IterRow {
            lambda,
            trial: t,
            k: rec.k,
            rel_error,
            fidelity: rec.fidelity,
            loss: rec.loss,
            selected_index: rec.selected + 1,
            support_size: rec.support.len(),
            status,
        });
    }
    if trace.status != TerminalStatus::CompletedK {
        if let Some(last) = rows.last().cloned() {
            let status = match trace.status {
                TerminalStatus::Stalled => "stalled",
                _ => "delta-below-tol",
            };
            for k in last.k + 1..=cfg.k {
                rows.push(IterRow {
                    k,
                    status: status.into(),
                    ..last.clone()
                });
            }
        }
    }
    rows
}

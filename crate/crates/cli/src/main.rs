use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use womp::harness::{
    best_lambda, plot_spec, render_svg, rows_to_csv, summary_csv, sweep_iterations, sweep_lambda, trial_instance,
    BestBy, SweepConfig, Table, ITER_HEADER, LAMBDA_HEADER,
};
use womp::linalg::normalize_columns;
use womp::problems::ProblemInstance;
use womp::solvers::{omp_run, relative_l2_error, SolverOptions};
use womp::{LossSpec, Rule};

#[derive(Parser)]
#[command(name = "womp", version, about = "Loss-based weighted OMP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the problem instance a sweep would use for one (level, trial).
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// 0-based level index (noise level outermost).
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run OMP on one instance and write the per-iteration trace as CSV.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        rule: Rule,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        iterations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative error versus lambda at a fixed iteration count.
    SweepLambda {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out` from the config; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative error versus iteration for lambda = 0 and the grid.
    SweepIter {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a sweep table per cell, or report the best lambda per level.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// `median` or `log-mean`.
        #[arg(long, default_value = "median")]
        by: BestBy,
        /// Emit `level_id,level_desc,best_lambda` instead of the summary.
        #[arg(long)]
        best: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render median error curves from a sweep table as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Table::parse(&text)?)
}

fn solve(instance: &Path, rule: Rule, lambda: f64, iterations: usize) -> Result<String> {
    let inst = ProblemInstance::read_json(instance)
        .with_context(|| format!("reading instance {}", instance.display()))?;
    // the least-squares rules need unit-norm columns; report x in the
    // instance's own scaling
    let (a, scales) = normalize_columns(&inst.a)?;
    let spec = LossSpec::new(rule, lambda)?;
    let trace = omp_run(&spec, &a, &inst.y, &inst.w, &SolverOptions::with_iterations(iterations))?;
    let mut lines = vec!["k,selected_index,support_size,fidelity,loss,max_delta,rel_error,flags".to_string()];
    for r in &trace.records {
        let x: Vec<f64> = r.x.iter().zip(&scales).map(|(v, s)| v / s).collect();
        let err = match &inst.x_true {
            Some(truth) => relative_l2_error(&x, truth)?.to_string(),
            None => String::new(),
        };
        let mut flags = Vec::new();
        if r.stalled {
            flags.push("stalled");
        }
        if r.rank_deficient {
            flags.push("rank-deficient");
        }
        if r.not_converged {
            flags.push("not-converged");
        }
        lines.push(format!(
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.selected + 1,
            r.support.len(),
            r.fidelity,
            r.loss,
            r.max_delta,
            err,
            flags.join(" ")
        ));
    }
    Ok(lines.join("\n") + "\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            config,
            level,
            trial,
            out,
        } => {
            let cfg = SweepConfig::read(&config)?;
            let levels = cfg.levels();
            let Some(lvl) = levels.get(level) else {
                bail!("level {level} out of range: the config has {} levels", levels.len());
            };
            trial_instance(&cfg, lvl, trial)?.write_json(&out)?;
        }
        Command::Solve {
            instance,
            rule,
            lambda,
            iterations,
            out,
        } => emit(&solve(&instance, rule, lambda, iterations)?, out.as_deref())?,
        Command::SweepLambda { config, out } => {
            let cfg = SweepConfig::read(&config)?;
            let csv = rows_to_csv(&sweep_lambda(&cfg)?, LAMBDA_HEADER)?;
            emit(&csv, out.as_deref().or(cfg.out.as_deref()))?;
        }
        Command::SweepIter { config, out } => {
            let cfg = SweepConfig::read(&config)?;
            let csv = rows_to_csv(&sweep_iterations(&cfg)?, ITER_HEADER)?;
            emit(&csv, out.as_deref().or(cfg.out.as_deref()))?;
        }
        Command::Stats { input, by, best, out } => {
            let table = read_table(&input)?;
            let text = if best {
                let Table::Lambda(rows) = &table else {
                    bail!("--best needs a sweep-lambda table");
                };
                let mut levels: Vec<(usize, &str)> = Vec::new();
                for r in rows {
                    if !levels.iter().any(|(id, _)| *id == r.level_id) {
                        levels.push((r.level_id, &r.level_desc));
                    }
                }
                let mut text = String::from("level_id,level_desc,best_lambda\n");
                for (id, desc) in levels {
                    text.push_str(&format!("{id},{desc},{}\n", best_lambda(rows, id, by)?));
                }
                text
            } else {
                summary_csv(&table)?
            };
            emit(&text, out.as_deref())?;
        }
        Command::Plot { input, out } => {
            let svg = render_svg(&plot_spec(&read_table(&input)?)?)?;
            emit(&svg, Some(&out))?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

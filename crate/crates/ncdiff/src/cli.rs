//! Batch, non-interactive command line: parse a TOML config, run one
//! experiment, write JSON + CSV reports.
//!
//! Exit codes: 0 success, 1 validation/parse error, 2 numerical blow-up
//! beyond the exclusion budget, 3 failure of a report's built-in property
//! check.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_config, ConfigFile};
use crate::error::{Error, Result};
use crate::experiments::{
    self, config_hash, convergence_study, energy_check, mc_moments, modulus_scaling,
    ou_oracle_check,
};
use crate::integrators::{simulate, strong_order};
use crate::io::{write_path_binary, write_trajectory_binary, write_trajectory_csv};
use crate::stochastic::sample_path;

#[derive(Parser, Debug)]
#[command(name = "ncdiff", about = "Spectral-Galerkin Monte Carlo experiments for the stochastic nonclassical diffusion equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed (sim.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bound on parallel Monte Carlo workers.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory for reports (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run one trajectory and dump it as CSV (and optionally binary).
    Simulate,
    /// Uniform-in-eps moment estimates.
    Moments,
    /// Time-shift modulus scaling in delta.
    Modulus,
    /// Inviscid-limit convergence study on shared paths.
    Converge,
    /// Analytic Ornstein-Uhlenbeck validation of the linear regime.
    OuCheck,
    /// Discrete energy-identity residual convergence.
    EnergyCheck,
    /// Strong convergence order of the scheme.
    StrongOrder,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Modulus => "modulus",
            Command::Converge => "converge",
            Command::OuCheck => "ou-check",
            Command::EnergyCheck => "energy-check",
            Command::StrongOrder => "strong-order",
        }
    }
}

/// Splits dotted-key overrides (`--sim.epsilon=0.05`) from regular args.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut plain = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let is_override = arg.starts_with("--")
            && arg.contains('=')
            && arg[2..arg.find('=').unwrap()].contains('.');
        if is_override {
            let body = &arg[2..];
            let (key, value) = body.split_once('=').unwrap();
            overrides.push((key.to_string(), value.to_string()));
        } else {
            plain.push(arg);
        }
    }
    (plain, overrides)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } | Error::ExclusionBudget { .. } => 2,
        Error::PropertyCheck(_) => 3,
        _ => 1,
    }
}

/// Entry point used by both `main` and the integration tests.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let (plain, overrides) = split_overrides(args.into_iter().collect());
    let cli = match Cli::try_parse_from(plain) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with code 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &overrides) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, overrides: &[(String, String)]) -> Result<()> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut cfg = load_config(&text, overrides)?;
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    cfg.sim.validate()?;

    let command = cli.command;
    match cli.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
            pool.install(|| dispatch(command, &cfg))
        }
        None => dispatch(command, &cfg),
    }
}

fn dispatch(command: Command, cfg: &ConfigFile) -> Result<()> {
    let dir = Path::new(&cfg.output.dir);
    fs::create_dir_all(dir)?;
    let sim = &cfg.sim;
    let hash = config_hash(sim);
    let stem = format!("{}_{}_{}", command.name(), hash, sim.seed);

    match command {
        Command::Simulate => run_simulate(cfg, dir, &stem),
        Command::Moments => {
            let report = mc_moments(sim, &cfg.moments.epsilons, &cfg.moments.p, cfg.moments.samples)?;
            for q in &report.quantities {
                if q.name == "sup_energy" && q.has_upward_trend() {
                    return Err(Error::PropertyCheck(format!(
                        "sup_energy (p={}) trends upward as eps decreases",
                        q.p
                    )));
                }
            }
            let mut csv = String::from("quantity,p,eps,mean,std_error\n");
            for q in &report.quantities {
                for s in &q.per_eps {
                    csv.push_str(&format!(
                        "{},{},{:?},{:?},{:?}\n",
                        q.name, q.p, s.eps, s.mean, s.std_error
                    ));
                }
            }
            write_report(dir, &stem, &report, &csv)
        }
        Command::Modulus => {
            let report =
                modulus_scaling(sim, &cfg.modulus.deltas, cfg.modulus.space, cfg.modulus.samples)?;
            if report.means.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::PropertyCheck(
                    "mean modulus not nondecreasing in delta".into(),
                ));
            }
            let mut csv = String::from("delta,mean,std_error\n");
            for ((d, m), se) in report.deltas.iter().zip(&report.means).zip(&report.std_errors) {
                csv.push_str(&format!("{d:?},{m:?},{se:?}\n"));
            }
            write_report(dir, &stem, &report, &csv)
        }
        Command::Converge => {
            let report =
                convergence_study(sim, &cfg.converge.epsilons, cfg.converge.delta, cfg.converge.samples)?;
            let mut csv = String::from("eps,median_gap,mean_gap,exceedance\n");
            for row in &report.rows {
                csv.push_str(&format!(
                    "{:?},{:?},{:?},{:?}\n",
                    row.eps, row.median_gap, row.mean_gap, row.exceedance
                ));
            }
            write_report(dir, &stem, &report, &csv)?;
            report.check(cfg.converge.exceedance_threshold)
        }
        Command::OuCheck => {
            let section = &cfg.ou_check;
            let mut reports = Vec::new();
            for &eps in &section.epsilons {
                for &k in &section.modes {
                    reports.push(ou_oracle_check(
                        eps,
                        k,
                        section.gamma,
                        section.c0,
                        sim.t_final,
                        sim.dt,
                        section.samples,
                        sim.seed,
                    )?);
                }
            }
            let suite = OuSuite { master_seed: sim.seed, config_hash: hash.clone(), reports };
            let mut csv =
                String::from("eps,mode,mc_mean,exact_mean,mc_var,exact_var,max_rel_deviation\n");
            for r in &suite.reports {
                csv.push_str(&format!(
                    "{:?},{},{:?},{:?},{:?},{:?},{:?}\n",
                    r.eps, r.mode, r.mc_mean, r.exact_mean, r.mc_var, r.exact_var,
                    r.max_rel_deviation
                ));
            }
            write_report(dir, &stem, &suite, &csv)?;
            for r in &suite.reports {
                let mean_tol = 3.0 * r.mean_std_error + 0.02 * r.exact_mean.abs();
                let var_tol = 3.0 * r.var_std_error + 0.02 * r.exact_var.abs();
                if (r.mc_mean - r.exact_mean).abs() > mean_tol.max(1e-12)
                    || (r.mc_var - r.exact_var).abs() > var_tol.max(1e-12)
                {
                    return Err(Error::PropertyCheck(format!(
                        "OU moments off at eps={}, k={}: mean {} vs {}, var {} vs {}",
                        r.eps, r.mode, r.mc_mean, r.exact_mean, r.mc_var, r.exact_var
                    )));
                }
            }
            Ok(())
        }
        Command::EnergyCheck => {
            let report = energy_check(sim, cfg.energy_check.paths)?;
            let csv = format!(
                "deterministic_factor,stochastic_factor\n{:?},{:?}\n",
                report.deterministic_factor, report.stochastic_factor
            );
            write_report(dir, &stem, &report, &csv)?;
            if !(3.5..=4.5).contains(&report.deterministic_factor) {
                return Err(Error::PropertyCheck(format!(
                    "deterministic residual factor {} outside [3.5, 4.5]",
                    report.deterministic_factor
                )));
            }
            if report.stochastic_factor < 1.3 {
                return Err(Error::PropertyCheck(format!(
                    "stochastic RMS residual factor {} below 1.3",
                    report.stochastic_factor
                )));
            }
            Ok(())
        }
        Command::StrongOrder => {
            let report = strong_order(sim, cfg.strong_order.levels, cfg.strong_order.samples)?;
            let mut csv = String::from("level_pair,mean_gap\n");
            for (i, g) in report.mean_gaps.iter().enumerate() {
                csv.push_str(&format!("{i},{g:?}\n"));
            }
            write_report(dir, &stem, &report, &csv)
        }
    }
}

#[derive(Serialize)]
struct OuSuite {
    master_seed: u64,
    config_hash: String,
    reports: Vec<experiments::OuReport>,
}

fn run_simulate(cfg: &ConfigFile, dir: &Path, stem: &str) -> Result<()> {
    let sim = &cfg.sim;
    let path = sample_path(sim.t_final, sim.dt, sim.seed)?;
    let traj = simulate(sim, &path)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf)?;
    fs::write(&csv_path, buf)?;
    if cfg.output.binary_trajectory {
        let mut bin = Vec::new();
        write_trajectory_binary(&traj, &mut bin)?;
        fs::write(dir.join(format!("{stem}.traj")), bin)?;
        let mut pbin = Vec::new();
        write_path_binary(&path, &mut pbin)?;
        fs::write(dir.join(format!("{stem}.path")), pbin)?;
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn write_report<T: Serialize>(dir: &Path, stem: &str, report: &T, csv: &str) -> Result<()> {
    let json_path = dir.join(format!("{stem}.json"));
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(&json_path, json)?;
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    println!("wrote {}", json_path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_splitting() {
        let args = vec![
            "ncdiff".to_string(),
            "moments".to_string(),
            "--sim.epsilon=0.05".to_string(),
            "--seed".to_string(),
            "7".to_string(),
        ];
        let (plain, overrides) = split_overrides(args);
        assert_eq!(plain.len(), 4);
        assert_eq!(overrides, vec![("sim.epsilon".to_string(), "0.05".to_string())]);
    }
}

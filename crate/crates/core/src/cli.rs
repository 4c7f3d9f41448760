//! Command-line pipeline driver: `bank`, `phantom`, `estimate`, `sweep`
//! and `range` subcommands over a JSON run configuration.
//!
//! Exit codes: 0 on success, 2 for configuration or contract errors,
//! 3 for numeric failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bank::{build_bank, load_bank, save_bank, FormFactorBank};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_constrained_with_rcond, estimate_unconstrained_with_rcond, SuppressionMode,
    SuppressionPolicy,
};
use crate::evaluation::{estimable_size_range, noise_sweep};
use crate::export::{
    read_spectrum_csv, write_estimate_csv, write_estimate_summary, write_ground_truth_csv,
    write_spectrum_csv, write_sweep_csv, write_sweep_summary,
};
use crate::phantom::{synthesize_phantom, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Unconstrained,
    Constrained,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Threshold,
    ContiguousRun,
}

#[derive(Debug, Parser)]
#[command(name = "scatsize", version, about = "Scatterer size distribution estimation from backscatter coefficients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the form-factor bank and save it as JSON
    Bank {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Synthesize the configured phantoms against a saved bank
    Phantom {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate a size distribution from a form-factor CSV
    Estimate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bank: PathBuf,
        /// CSV with header frequency_mhz,value holding the total form factor
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        /// Suppression threshold fraction (overrides the config)
        #[arg(long)]
        theta: Option<f64>,
        /// Singular-value cutoff relative to sigma_max
        #[arg(long)]
        rcond: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the seeded noise-robustness sweep
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reuse a saved bank instead of rebuilding it
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Name of the configured phantom to sweep (default: bimodal,
        /// else the first configured phantom)
        #[arg(long)]
        phantom: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the estimable size range for a frequency band
    Range {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        f_min: Option<f64>,
        #[arg(long)]
        f_max: Option<f64>,
        /// Background sound speed in mm/us
        #[arg(long)]
        speed: Option<f64>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_policy_overrides(
    mut policy: SuppressionPolicy,
    theta: Option<f64>,
    mode: Option<ModeArg>,
) -> SuppressionPolicy {
    if let Some(t) = theta {
        policy.threshold_fraction = t;
    }
    if let Some(m) = mode {
        policy.mode = match m {
            ModeArg::Threshold => SuppressionMode::Threshold,
            ModeArg::ContiguousRun => SuppressionMode::ContiguousRun,
        };
    }
    policy
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bank { config, out } => cmd_bank(&load_config(&config)?, &out),
        Command::Phantom { config, bank, out } => {
            cmd_phantom(&load_config(&config)?, &bank, &out)
        }
        Command::Estimate {
            config,
            bank,
            spectrum,
            method,
            theta,
            rcond,
            mode,
            out,
        } => {
            let cfg = load_config(&config)?;
            let policy = apply_policy_overrides(cfg.policy, theta, mode);
            cmd_estimate(
                &bank,
                &spectrum,
                method,
                &policy,
                rcond.unwrap_or(cfg.rcond),
                &out,
            )
        }
        Command::Sweep {
            config,
            bank,
            phantom,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.noise.seed = s;
            }
            cmd_sweep(&cfg, bank.as_deref(), phantom.as_deref(), &out)
        }
        Command::Range {
            config,
            f_min,
            f_max,
            speed,
        } => {
            let cfg = load_config(&config)?;
            cmd_range(
                f_min.unwrap_or(cfg.frequency_grid.min_mhz),
                f_max.unwrap_or(cfg.frequency_grid.max_mhz),
                speed.unwrap_or(cfg.materials.background_speed),
            )
        }
    }
}

pub fn cmd_bank(config: &RunConfig, out: &Path) -> Result<()> {
    let sizes = config.size_grid()?;
    let frequencies = config.frequency_grid()?;
    let started = Instant::now();
    let bank = build_bank(sizes, frequencies, config.materials)?;
    fs::create_dir_all(out)?;
    let path = out.join("bank.json");
    save_bank(&bank, &path)?;
    println!(
        "bank: {} sizes x {} frequencies written to {} in {:.2?}",
        bank.num_sizes(),
        bank.num_frequencies(),
        path.display(),
        started.elapsed()
    );
    Ok(())
}

pub fn cmd_phantom(config: &RunConfig, bank_path: &Path, out: &Path) -> Result<()> {
    let bank = load_bank(bank_path)?;
    if config.phantoms.is_empty() {
        return Err(Error::Config("no phantoms configured".into()));
    }
    for phantom_cfg in &config.phantoms {
        let spec = config.phantom_spec(phantom_cfg);
        let synthesis = synthesize_phantom(&spec, &bank)?;
        let dir = out.join(&phantom_cfg.name);
        fs::create_dir_all(&dir)?;
        write_spectrum_csv(&dir.join("bsc.csv"), &synthesis.bsc)?;
        write_spectrum_csv(&dir.join("form_factor.csv"), &synthesis.form_factor)?;
        write_ground_truth_csv(&dir.join("ground_truth.csv"), bank.sizes(), &synthesis.truth)?;
        fs::write(
            dir.join("synthesis.json"),
            format!(
                "{{\n  \"form_factor_scale\": {:.16e}\n}}\n",
                synthesis.form_factor_scale
            ),
        )?;
        println!("phantom {}: outputs in {}", phantom_cfg.name, dir.display());
    }
    Ok(())
}

pub fn cmd_estimate(
    bank_path: &Path,
    spectrum_path: &Path,
    method: MethodArg,
    policy: &SuppressionPolicy,
    rcond: f64,
    out: &Path,
) -> Result<()> {
    let bank = load_bank(bank_path)?;
    let f_t = read_spectrum_csv(spectrum_path, SpectrumKind::FormFactor)?;
    fs::create_dir_all(out)?;

    if matches!(method, MethodArg::Unconstrained | MethodArg::Both) {
        let est = estimate_unconstrained_with_rcond(&f_t, &bank, rcond)?;
        write_estimate_csv(&out.join("estimate_unconstrained.csv"), bank.sizes(), &est)?;
        write_estimate_summary(
            &out.join("estimate_unconstrained_summary.json"),
            &est,
            None,
            rcond,
        )?;
        println!(
            "unconstrained: residual_l2 = {:.6e}",
            est.residual_l2
        );
    }
    if matches!(method, MethodArg::Constrained | MethodArg::Both) {
        let est = estimate_constrained_with_rcond(&f_t, &bank, policy, rcond)?;
        write_estimate_csv(&out.join("estimate_constrained.csv"), bank.sizes(), &est)?;
        write_estimate_summary(
            &out.join("estimate_constrained_summary.json"),
            &est,
            Some(policy),
            rcond,
        )?;
        println!(
            "constrained: residual_l2 = {:.6e}, {} sizes suppressed",
            est.residual_l2,
            est.suppressed.len()
        );
    }
    Ok(())
}

pub fn cmd_sweep(
    config: &RunConfig,
    bank_path: Option<&Path>,
    phantom_name: Option<&str>,
    out: &Path,
) -> Result<()> {
    let bank: FormFactorBank = match bank_path {
        Some(p) => load_bank(p)?,
        None => build_bank(config.size_grid()?, config.frequency_grid()?, config.materials)?,
    };
    let phantom_cfg = match phantom_name {
        Some(name) => config
            .phantoms
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Config(format!("no configured phantom named '{name}'")))?,
        None => config
            .phantoms
            .iter()
            .find(|p| p.name == "bimodal")
            .or_else(|| config.phantoms.first())
            .ok_or_else(|| Error::Config("no phantoms configured".into()))?,
    };
    let spec = config.phantom_spec(phantom_cfg);
    let summary = noise_sweep(
        &spec,
        &bank,
        config.noise.variance,
        config.noise.trials,
        config.noise.seed,
        &config.policy,
        config.rcond,
    )?;
    fs::create_dir_all(out)?;
    write_sweep_csv(&out.join("sweep.csv"), &summary)?;
    write_sweep_summary(&out.join("sweep_summary.json"), &summary)?;
    println!(
        "sweep over {} trials (variance {:.1e}): mean mae_in_range {:.6e} (unconstrained) vs {:.6e} (constrained)",
        summary.trials,
        summary.variance,
        summary.unconstrained.mean_mae_in_range,
        summary.constrained.mean_mae_in_range
    );
    Ok(())
}

pub fn cmd_range(f_min_mhz: f64, f_max_mhz: f64, background_speed: f64) -> Result<()> {
    let range = estimable_size_range(f_min_mhz, f_max_mhz, background_speed)?;
    println!(
        "estimable sizes for {f_min_mhz}-{f_max_mhz} MHz at c = {background_speed} mm/us ({} <= ka <= {}):",
        range.ka_low, range.ka_high
    );
    println!("size_min_um = {:.6}", range.size_min_um);
    println!("size_max_um = {:.6}", range.size_max_um);
    Ok(())
}

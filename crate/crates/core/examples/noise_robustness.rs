//! Seeded noise-robustness sweep on the bimodal phantom: add Gaussian
//! noise to the BSC, re-estimate with both methods, aggregate the errors.
//!
//! Run with: cargo run --release --example noise_robustness

use scatsize::bank::build_bank;
use scatsize::config::RunConfig;
use scatsize::evaluation::noise_sweep;

fn main() -> scatsize::Result<()> {
    let config = RunConfig::default();
    let bank = build_bank(
        config.size_grid()?,
        config.frequency_grid()?,
        config.materials,
    )?;
    let bimodal = config
        .phantoms
        .iter()
        .find(|p| p.name == "bimodal")
        .expect("stock bimodal phantom");

    let summary = noise_sweep(
        &config.phantom_spec(bimodal),
        &bank,
        config.noise.variance,
        config.noise.trials,
        config.noise.seed,
        &config.policy,
        config.rcond,
    )?;

    println!(
        "variance {:.1e}, {} trials, seed {} ({})",
        summary.variance, summary.trials, summary.seed, summary.rng_algorithm
    );
    for method in [&summary.unconstrained, &summary.constrained] {
        println!(
            "{:?}: mae_in_range {:.4e} +/- {:.4e} over {} trials ({} failed)",
            method.method,
            method.mean_mae_in_range,
            method.std_mae_in_range,
            method.trials_ok,
            method.trials_failed
        );
    }
    Ok(())
}

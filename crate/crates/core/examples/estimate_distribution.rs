//! Recover a size distribution from a noise-free synthesized form factor
//! with both estimators and compare them against the ground truth.
//!
//! Run with: cargo run --release --example estimate_distribution

use scatsize::bank::build_bank;
use scatsize::config::RunConfig;
use scatsize::estimator::{estimate_constrained, estimate_unconstrained, SuppressionPolicy};
use scatsize::evaluation::{estimable_size_range, evaluate};
use scatsize::phantom::synthesize_phantom;

fn main() -> scatsize::Result<()> {
    let config = RunConfig::default();
    let bank = build_bank(
        config.size_grid()?,
        config.frequency_grid()?,
        config.materials,
    )?;
    let range = estimable_size_range(
        config.frequency_grid.min_mhz,
        config.frequency_grid.max_mhz,
        config.materials.background_speed,
    )?;

    let bimodal = config
        .phantoms
        .iter()
        .find(|p| p.name == "bimodal")
        .expect("stock bimodal phantom");
    let synthesis = synthesize_phantom(&config.phantom_spec(bimodal), &bank)?;

    let unconstrained = estimate_unconstrained(&synthesis.form_factor, &bank)?;
    let constrained =
        estimate_constrained(&synthesis.form_factor, &bank, &SuppressionPolicy::default())?;

    for est in [&unconstrained, &constrained] {
        let report = evaluate(est, &synthesis.truth, bank.sizes(), &range)?;
        println!(
            "{:?}: residual {:.3e}, mae in range {:.3e}, out-of-range mass {:.4}, \
             peak errors {:?} um, {} sizes suppressed",
            est.method,
            est.residual_l2,
            report.mae_in_range,
            report.out_of_range_mass,
            report.peak_errors_um,
            est.suppressed.len()
        );
    }
    Ok(())
}

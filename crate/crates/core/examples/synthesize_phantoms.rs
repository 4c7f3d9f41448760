//! Synthesize the four stock bead phantoms and print their ground truth.
//!
//! Run with: cargo run --release --example synthesize_phantoms

use scatsize::bank::build_bank;
use scatsize::config::RunConfig;
use scatsize::phantom::synthesize_phantom;

fn main() -> scatsize::Result<()> {
    let config = RunConfig::default();
    let bank = build_bank(
        config.size_grid()?,
        config.frequency_grid()?,
        config.materials,
    )?;

    for phantom_cfg in &config.phantoms {
        let spec = config.phantom_spec(phantom_cfg);
        let synthesis = synthesize_phantom(&spec, &bank)?;
        let total_density: f64 = synthesis.truth.number_densities.iter().sum();
        let peak = synthesis
            .truth
            .probabilities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        println!(
            "{:16} {:10.3e} beads/cm^3, probability peak {:.4} at {} um, \
             form-factor scale {:.3e}",
            phantom_cfg.name,
            total_density,
            peak.1,
            bank.sizes().values()[peak.0],
            synthesis.form_factor_scale
        );
    }
    Ok(())
}

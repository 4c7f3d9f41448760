//! Build a form-factor bank for glass beads in gel and save it as JSON.
//!
//! Run with: cargo run --release --example build_bank

use scatsize::bank::{build_bank, save_bank, FrequencyGrid, SizeGrid};
use scatsize::faran::AcousticMaterials;

fn main() -> scatsize::Result<()> {
    let materials = AcousticMaterials::glass_beads_in_gel();
    let sizes = SizeGrid::from_range(10.0, 100.0, 5.0)?;
    let frequencies = FrequencyGrid::from_range(3.0, 9.0, 0.1)?;

    let started = std::time::Instant::now();
    let bank = build_bank(sizes, frequencies, materials)?;
    println!(
        "built {} sizes x {} frequencies in {:.2?}",
        bank.num_sizes(),
        bank.num_frequencies(),
        started.elapsed()
    );

    // Every row is a max-normalized form factor; the row scale restores
    // the absolute cross-section via scale * f^4.
    let i = bank.sizes().nearest_index(50.0);
    println!(
        "50 um row: scale {:.4e}, form factor at band edges {:.4} / {:.4}",
        bank.row_scales()[i],
        bank.row(i)[0],
        bank.row(i)[bank.num_frequencies() - 1]
    );

    let path = std::env::temp_dir().join("scatsize_bank.json");
    save_bank(&bank, &path)?;
    println!("saved to {}", path.display());
    Ok(())
}

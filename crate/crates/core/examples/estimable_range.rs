//! Print the estimable size window (0.6 <= ka <= 1.2) for a few
//! frequency bands.
//!
//! Run with: cargo run --example estimable_range

use scatsize::evaluation::estimable_size_range;
use scatsize::faran::AcousticMaterials;

fn main() -> scatsize::Result<()> {
    let c = AcousticMaterials::glass_beads_in_gel().background_speed;
    for (f_min, f_max) in [(3.0, 9.0), (2.0, 6.0), (5.0, 15.0)] {
        let range = estimable_size_range(f_min, f_max, c)?;
        println!(
            "{f_min}-{f_max} MHz at {c} mm/us: {:.2} to {:.2} um",
            range.size_min_um, range.size_max_um
        );
    }
    Ok(())
}

//! The form-factor bank: for each candidate size, the backscatter spectrum
//! divided by f^4 and max-normalized over the analysis band.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faran::{backscatter_cross_section, AcousticMaterials};

pub const BANK_FILE_VERSION: u32 = 1;

/// Strictly increasing positive sizes (um).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SizeGrid {
    values: Vec<f64>,
}

/// Strictly increasing positive frequencies (MHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyGrid {
    values: Vec<f64>,
}

fn check_grid(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{what} grid is empty")));
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!(
            "{what} grid values must be positive and finite"
        )));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}

/// min + i*step for i = 0..=round((max-min)/step); computing from the
/// index keeps the grid independent of accumulation order.
fn range_values(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(min > 0.0) || max < min {
        return Err(Error::Config(format!(
            "invalid grid range min={min} max={max} step={step}"
        )));
    }
    let count = ((max - min) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

impl SizeGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_grid(&values, "size")?;
        Ok(SizeGrid { values })
    }

    pub fn from_range(min_um: f64, max_um: f64, step_um: f64) -> Result<Self> {
        Self::new(range_values(min_um, max_um, step_um)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the grid size closest to `size_um`; ties go to the
    /// smaller size.
    pub fn nearest_index(&self, size_um: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &s) in self.values.iter().enumerate() {
            let d = (s - size_um).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

impl FrequencyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_grid(&values, "frequency")?;
        Ok(FrequencyGrid { values })
    }

    pub fn from_range(min_mhz: f64, max_mhz: f64, step_mhz: f64) -> Result<Self> {
        Self::new(range_values(min_mhz, max_mhz, step_mhz)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// N_a x N_f bank of normalized form factors, one row per candidate size.
///
/// `row_scales[i]` is the pre-normalization maximum of row i, so
/// `matrix[i][j] * row_scales[i] * f_j^4` reconstructs the raw
/// cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorBank {
    version: u32,
    pub materials: AcousticMaterials,
    sizes_um: SizeGrid,
    frequencies_mhz: FrequencyGrid,
    row_scales: Vec<f64>,
    matrix: Vec<Vec<f64>>,
}

impl FormFactorBank {
    pub fn sizes(&self) -> &SizeGrid {
        &self.sizes_um
    }

    pub fn frequencies(&self) -> &FrequencyGrid {
        &self.frequencies_mhz
    }

    pub fn row_scales(&self) -> &[f64] {
        &self.row_scales
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i]
    }

    pub fn num_sizes(&self) -> usize {
        self.sizes_um.len()
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies_mhz.len()
    }

    fn check_shape(&self) -> Result<()> {
        let rows = self.matrix.len();
        let expected_rows = self.sizes_um.len();
        let expected_cols = self.frequencies_mhz.len();
        let cols = self.matrix.first().map_or(0, |r| r.len());
        if rows != expected_rows
            || self.matrix.iter().any(|r| r.len() != expected_cols)
            || self.row_scales.len() != expected_rows
        {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                expected_rows,
                expected_cols,
            });
        }
        Ok(())
    }
}

/// Build a bank from an arbitrary spectrum model sigma(size_um, f_mhz).
///
/// Row i holds sigma(size_i, f_j) / f_j^4 divided by its own maximum;
/// the maximum is kept in `row_scales`.
pub fn build_bank_with<S>(
    sizes: SizeGrid,
    frequencies: FrequencyGrid,
    materials: AcousticMaterials,
    mut spectrum: S,
) -> Result<FormFactorBank>
where
    S: FnMut(f64, f64) -> Result<f64>,
{
    materials.validate()?;
    let mut matrix = Vec::with_capacity(sizes.len());
    let mut row_scales = Vec::with_capacity(sizes.len());
    for &size in sizes.values() {
        let mut row = Vec::with_capacity(frequencies.len());
        for &f in frequencies.values() {
            let sigma = spectrum(size, f)?;
            row.push(sigma / f.powi(4));
        }
        let scale = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "form factor row for size {size} um has non-positive maximum {scale}"
            )));
        }
        for v in row.iter_mut() {
            *v /= scale;
        }
        matrix.push(row);
        row_scales.push(scale);
    }
    Ok(FormFactorBank {
        version: BANK_FILE_VERSION,
        materials,
        sizes_um: sizes,
        frequencies_mhz: frequencies,
        row_scales,
        matrix,
    })
}

/// Build a bank from the Faran elastic-sphere model.
pub fn build_bank(
    sizes: SizeGrid,
    frequencies: FrequencyGrid,
    materials: AcousticMaterials,
) -> Result<FormFactorBank> {
    build_bank_with(sizes, frequencies, materials, |size, f| {
        backscatter_cross_section(size, f, &materials, None).map(|e| e.cross_section)
    })
}

/// Write the bank as a self-describing JSON document. Numbers are emitted
/// in shortest round-trip form, so a reload is bitwise identical.
pub fn save_bank(bank: &FormFactorBank, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, bank)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<FormFactorBank> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let bank: FormFactorBank = serde_json::from_reader(reader)
        .map_err(|e| Error::MalformedFile(e.to_string()))?;
    if bank.version != BANK_FILE_VERSION {
        return Err(Error::VersionMismatch {
            found: bank.version,
            expected: BANK_FILE_VERSION,
        });
    }
    bank.check_shape()?;
    bank.materials.validate()?;
    check_grid(bank.sizes_um.values(), "size").map_err(|_| {
        Error::MalformedFile("size grid is not strictly increasing and positive".into())
    })?;
    check_grid(bank.frequencies_mhz.values(), "frequency").map_err(|_| {
        Error::MalformedFile("frequency grid is not strictly increasing and positive".into())
    })?;
    if bank.row_scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::MalformedFile("row scales must be positive".into()));
    }
    Ok(bank)
}

//! Plot-ready CSV and JSON emission. Every number is written with 17
//! significant digits so files round-trip losslessly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bank::SizeGrid;
use crate::error::{Error, Result};
use crate::estimator::{Method, SizeDistributionEstimate, SuppressionPolicy};
use crate::evaluation::NoiseSweepSummary;
use crate::phantom::{GroundTruth, SpectrumKind, SpectrumVector};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_spectrum_csv(path: &Path, spectrum: &SpectrumVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "frequency_mhz,value")?;
    for (&f, &v) in spectrum.frequencies.values().iter().zip(&spectrum.values) {
        writeln!(w, "{},{}", fmt(f), fmt(v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv(path: &Path, kind: SpectrumKind) -> Result<SpectrumVector> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(header)) if header.trim() == "frequency_mhz,value" => {}
        _ => {
            return Err(Error::MalformedFile(
                "spectrum CSV must start with 'frequency_mhz,value'".into(),
            ))
        }
    }
    let mut frequencies = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (f, v) = line
            .split_once(',')
            .ok_or_else(|| Error::MalformedFile(format!("bad spectrum row: {line}")))?;
        frequencies.push(
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::MalformedFile(format!("bad frequency '{f}': {e}")))?,
        );
        values.push(
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::MalformedFile(format!("bad value '{v}': {e}")))?,
        );
    }
    let grid = crate::bank::FrequencyGrid::new(frequencies)?;
    SpectrumVector::new(grid, values, kind)
}

pub fn write_estimate_csv(
    path: &Path,
    sizes: &SizeGrid,
    estimate: &SizeDistributionEstimate,
) -> Result<()> {
    let probabilities = estimate.probabilities()?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "size_um,weight,probability,suppressed")?;
    for (i, ((&size, &weight), &p)) in sizes
        .values()
        .iter()
        .zip(&estimate.weights)
        .zip(&probabilities)
        .enumerate()
    {
        let suppressed = if estimate.suppressed.contains(&i) { 1 } else { 0 };
        writeln!(w, "{},{},{},{}", fmt(size), fmt(weight), fmt(p), suppressed)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateSummary<'a> {
    method: Method,
    policy: Option<&'a SuppressionPolicy>,
    residual_l2: f64,
    rcond: f64,
    iterations: usize,
    converged: bool,
    suppressed_count: usize,
}

pub fn write_estimate_summary(
    path: &Path,
    estimate: &SizeDistributionEstimate,
    policy: Option<&SuppressionPolicy>,
    rcond: f64,
) -> Result<()> {
    let summary = EstimateSummary {
        method: estimate.method,
        policy,
        residual_l2: estimate.residual_l2,
        rcond,
        iterations: estimate.iterations,
        converged: estimate.converged,
        suppressed_count: estimate.suppressed.len(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_ground_truth_csv(path: &Path, sizes: &SizeGrid, truth: &GroundTruth) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "size_um,probability,weight,number_density_per_cm3")?;
    for (((&size, &p), &weight), &n) in sizes
        .values()
        .iter()
        .zip(&truth.probabilities)
        .zip(&truth.weights)
        .zip(&truth.number_densities)
    {
        writeln!(w, "{},{},{},{}", fmt(size), fmt(p), fmt(weight), fmt(n))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, summary: &NoiseSweepSummary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "trial,method,mae_in_range,mae_full,out_of_range_mass,residual_l2"
    )?;
    for r in &summary.records {
        let method = match r.method {
            Method::Unconstrained => "unconstrained",
            Method::Constrained => "constrained",
        };
        if r.error.is_some() {
            writeln!(w, "{},{},nan,nan,nan,nan", r.trial, method)?;
        } else {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.trial,
                method,
                fmt(r.mae_in_range),
                fmt(r.mae_full),
                fmt(r.out_of_range_mass),
                fmt(r.residual_l2)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepSummaryDoc<'a> {
    variance: f64,
    trials: u64,
    seed: u64,
    rng_algorithm: &'a str,
    unconstrained: &'a crate::evaluation::MethodSummary,
    constrained: &'a crate::evaluation::MethodSummary,
}

pub fn write_sweep_summary(path: &Path, summary: &NoiseSweepSummary) -> Result<()> {
    let doc = SweepSummaryDoc {
        variance: summary.variance,
        trials: summary.trials,
        seed: summary.seed,
        rng_algorithm: &summary.rng_algorithm,
        unconstrained: &summary.unconstrained,
        constrained: &summary.constrained,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

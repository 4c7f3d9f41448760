//! End-to-end acceptance gate. Each test checks one numbered criterion
//! and prints a single `criterion N: PASS|FAIL` line.

mod common;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scatsize::bank::{build_bank, build_bank_with, FormFactorBank, FrequencyGrid, SizeGrid};
use scatsize::config::RunConfig;
use scatsize::estimator::{
    estimate_constrained, estimate_unconstrained, weights_to_number_density, SuppressionPolicy,
};
use scatsize::evaluation::{estimable_size_range, evaluate, noise_sweep};
use scatsize::export::{write_estimate_csv, write_sweep_csv};
use scatsize::faran::{backscatter_cross_section, AcousticMaterials};
use scatsize::phantom::{synthesize_phantom, PhantomSynthesis, SpectrumKind, SpectrumVector};

fn glass() -> AcousticMaterials {
    AcousticMaterials::glass_beads_in_gel()
}

fn report(criterion: usize, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// 41x61 identifiable bank: 16-96 um step 2, 3-9 MHz step 0.1.
fn identifiable_bank() -> &'static FormFactorBank {
    static BANK: OnceLock<FormFactorBank> = OnceLock::new();
    BANK.get_or_init(|| {
        build_bank(
            SizeGrid::from_range(16.0, 96.0, 2.0).unwrap(),
            FrequencyGrid::from_range(3.0, 9.0, 0.1).unwrap(),
            glass(),
        )
        .unwrap()
    })
}

/// Full 100x61 reference bank: 1-100 um step 1, 3-9 MHz step 0.1.
fn full_bank() -> &'static FormFactorBank {
    static BANK: OnceLock<FormFactorBank> = OnceLock::new();
    BANK.get_or_init(|| {
        build_bank(
            SizeGrid::from_range(1.0, 100.0, 1.0).unwrap(),
            FrequencyGrid::from_range(3.0, 9.0, 0.1).unwrap(),
            glass(),
        )
        .unwrap()
    })
}

fn default_syntheses(bank: &FormFactorBank) -> Vec<(String, PhantomSynthesis)> {
    let config = RunConfig::default();
    config
        .phantoms
        .iter()
        .map(|p| {
            let spec = config.phantom_spec(p);
            (p.name.clone(), synthesize_phantom(&spec, bank).unwrap())
        })
        .collect()
}

#[test]
fn criterion_1_ka_range_anchor() {
    let r = estimable_size_range(3.0, 9.0, 1.498).unwrap();
    let min_ok = (r.size_min_um - 15.9).abs() <= 0.1;
    let max_ok = (r.size_max_um - 95.5).abs() <= 0.1;
    report(
        1,
        min_ok && max_ok,
        &format!(
            "size_min = {:.3} um (want 15.9 +/- 0.1), size_max = {:.3} um (want 95.5 +/- 0.1); \
             1.2 * 1.498 mm/us / (2 pi * 3 MHz) is 95.37 um, so the 95.5 anchor is only \
             reachable with a speed rounded to 1.5 mm/us",
            r.size_min_um, r.size_max_um
        ),
    );
}

#[test]
fn criterion_2_rayleigh_slope() {
    let materials = glass();
    let mut worst: f64 = 0.0;
    for size in [10.0, 30.0, 50.0] {
        // ka <= 0.05 with a = size/2: f <= 0.05 c / (pi * size).
        let f_cap_mhz =
            0.05 * materials.background_speed * 1e3 / (std::f64::consts::PI * size);
        let points: Vec<(f64, f64)> = (0..15)
            .map(|i| {
                let f = f_cap_mhz * (0.1f64).powf(1.0 - i as f64 / 14.0);
                let sigma = backscatter_cross_section(size, f, &materials, None)
                    .unwrap()
                    .cross_section;
                (f.ln(), sigma.ln())
            })
            .collect();
        let n = points.len() as f64;
        let (sx, sy): (f64, f64) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        worst = worst.max((slope - 4.0).abs());
    }
    report(
        2,
        worst <= 0.05,
        &format!("worst |slope - 4| over sizes 10/30/50 um = {worst:.4}"),
    );
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

#[test]
fn criterion_3_exact_recovery_on_identifiable_bank() {
    let bank = identifiable_bank();
    let policy = SuppressionPolicy::default();
    let mut detail = String::new();
    let mut pass = true;
    for (name, synth) in default_syntheses(bank) {
        let u = estimate_unconstrained(&synth.form_factor, bank).unwrap();
        let err = relative_l2(&u.weights, &synth.truth.weights);
        if err > 1e-8 {
            pass = false;
            detail.push_str(&format!("{name}: method 1 weight error {err:.3e}; "));
        }
        let c = estimate_constrained(&synth.form_factor, bank, &policy).unwrap();
        if c.suppressed.is_empty() {
            let same = u
                .weights
                .iter()
                .zip(&c.weights)
                .all(|(a, b)| (a - b).abs() <= 1e-10);
            if !same {
                pass = false;
                detail.push_str(&format!("{name}: methods differ without suppression; "));
            }
        }
        if c.residual_l2 < u.residual_l2 - 1e-12 {
            pass = false;
            detail.push_str(&format!(
                "{name}: constrained residual {:.3e} below unconstrained {:.3e}; ",
                c.residual_l2, u.residual_l2
            ));
        }
    }
    report(3, pass, &detail);
}

#[test]
fn criterion_4_reference_reproduction() {
    let bank = full_bank();
    let policy = SuppressionPolicy::default();
    let range = estimable_size_range(3.0, 9.0, glass().background_speed).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for (name, synth) in default_syntheses(bank) {
        let u = estimate_unconstrained(&synth.form_factor, bank).unwrap();
        let c = estimate_constrained(&synth.form_factor, bank, &policy).unwrap();
        let ru = evaluate(&u, &synth.truth, bank.sizes(), &range).unwrap();
        let rc = evaluate(&c, &synth.truth, bank.sizes(), &range).unwrap();
        if rc.peak_errors_um.iter().any(|e| *e > 5.0) {
            pass = false;
            detail.push_str(&format!("{name}: peak errors {:?} um; ", rc.peak_errors_um));
        }
        if rc.out_of_range_mass > 0.05 {
            pass = false;
            detail.push_str(&format!(
                "{name}: out-of-range mass {:.4}; ",
                rc.out_of_range_mass
            ));
        }
        if rc.mae_in_range > ru.mae_in_range {
            pass = false;
            detail.push_str(&format!(
                "{name}: constrained mae {:.3e} > unconstrained {:.3e}; ",
                rc.mae_in_range, ru.mae_in_range
            ));
        }
    }
    report(4, pass, &detail);
}

fn bimodal_sweep(bank: &FormFactorBank) -> scatsize::evaluation::NoiseSweepSummary {
    let config = RunConfig::default();
    let phantom = config
        .phantoms
        .iter()
        .find(|p| p.name == "bimodal")
        .unwrap();
    noise_sweep(
        &config.phantom_spec(phantom),
        bank,
        1e-5,
        100,
        42,
        &SuppressionPolicy::default(),
        config.rcond,
    )
    .unwrap()
}

#[test]
fn criterion_5_noise_robustness_ordering() {
    let summary = bimodal_sweep(full_bank());
    let pass = summary.constrained.trials_ok == 100
        && summary.unconstrained.trials_ok == 100
        && summary.constrained.mean_mae_in_range <= summary.unconstrained.mean_mae_in_range;
    report(
        5,
        pass,
        &format!(
            "mean mae_in_range: constrained {:.4e} vs unconstrained {:.4e} ({}/{} trials ok)",
            summary.constrained.mean_mae_in_range,
            summary.unconstrained.mean_mae_in_range,
            summary.constrained.trials_ok,
            summary.unconstrained.trials_ok
        ),
    );
}

#[test]
fn criterion_6_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut detail = String::new();
    let mut pass = true;
    for instance in 0..10u64 {
        let n_sizes = 3 + (instance as usize % 6); // up to 8
        let n_freqs = n_sizes + 3 + (instance as usize % 2); // up to 12
        let sizes: Vec<f64> = (1..=n_sizes).map(|i| 10.0 * i as f64).collect();
        let freqs: Vec<f64> = (1..=n_freqs).map(|i| i as f64).collect();

        // Draw random positive rows until the normalized design matrix is
        // comfortably full rank.
        let (bank, design) = loop {
            let cells: Vec<Vec<f64>> = (0..n_sizes)
                .map(|_| (0..n_freqs).map(|_| rng.gen_range(0.1..1.1)).collect())
                .collect();
            let bank = build_bank_with(
                SizeGrid::new(sizes.clone()).unwrap(),
                FrequencyGrid::new(freqs.clone()).unwrap(),
                glass(),
                |size, f| {
                    let i = (size / 10.0 - 1.0).round() as usize;
                    let j = (f - 1.0).round() as usize;
                    Ok(cells[i][j] * f.powi(4))
                },
            )
            .unwrap();
            let design = DMatrix::from_fn(n_freqs, n_sizes, |j, i| bank.matrix()[i][j]);
            let sv = design.clone().svd(false, false).singular_values;
            let cond = sv.iter().cloned().fold(0.0f64, f64::max)
                / sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if cond < 1e3 {
                break (bank, design);
            }
        };

        // Non-negative truth; every other instance zeroes one component.
        let mut truth: Vec<f64> = (0..n_sizes).map(|_| rng.gen_range(0.5..1.5)).collect();
        if instance % 2 == 0 {
            truth[instance as usize % n_sizes] = 0.0;
        }
        let rhs = &design * DVector::from_column_slice(&truth);
        let f_t = SpectrumVector::new(
            bank.frequencies().clone(),
            rhs.iter().cloned().collect(),
            SpectrumKind::FormFactor,
        )
        .unwrap();

        let u = estimate_unconstrained(&f_t, &bank).unwrap();
        let oracle = common::normal_equations_solve(&design, &rhs);
        let max_diff = u
            .weights
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if max_diff > 1e-8 {
            pass = false;
            detail.push_str(&format!(
                "instance {instance}: method 1 vs normal equations diff {max_diff:.3e}; "
            ));
        }

        let c = estimate_constrained(&f_t, &bank, &SuppressionPolicy::default()).unwrap();
        let nnls = common::nnls(&design, &rhs);
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        if argmax(&c.weights) != argmax(&nnls) {
            pass = false;
            detail.push_str(&format!(
                "instance {instance}: method 2 argmax {} vs NNLS argmax {}; ",
                argmax(&c.weights),
                argmax(&nnls)
            ));
        }
    }
    report(6, pass, &detail);
}

#[test]
fn criterion_7_determinism_byte_identical_outputs() {
    let bank = full_bank();
    let dir = tempfile::tempdir().unwrap();
    let policy = SuppressionPolicy::default();

    let run = |tag: &str| -> Vec<Vec<u8>> {
        let mut blobs = Vec::new();
        for (name, synth) in default_syntheses(bank) {
            let c = estimate_constrained(&synth.form_factor, bank, &policy).unwrap();
            let path = dir.path().join(format!("{name}_{tag}.csv"));
            write_estimate_csv(&path, bank.sizes(), &c).unwrap();
            blobs.push(std::fs::read(&path).unwrap());
        }
        let sweep = bimodal_sweep(bank);
        let path = dir.path().join(format!("sweep_{tag}.csv"));
        write_sweep_csv(&path, &sweep).unwrap();
        blobs.push(std::fs::read(&path).unwrap());
        blobs
    };

    let first = run("a");
    let second = run("b");
    report(7, first == second, "re-run produced different bytes");
}

#[test]
fn criterion_8_number_density_round_trip() {
    let bank = identifiable_bank();
    let mut detail = String::new();
    let mut pass = true;
    for (name, synth) in default_syntheses(bank) {
        let est = estimate_unconstrained(&synth.form_factor, bank).unwrap();
        let densities = weights_to_number_density(&est, bank, synth.form_factor_scale).unwrap();
        for (n, t) in densities.iter().zip(&synth.truth.number_densities) {
            if *t > 0.0 && ((n - t) / t).abs() > 1e-8 {
                pass = false;
                detail.push_str(&format!(
                    "{name}: density {n:.6e} vs truth {t:.6e}; "
                ));
                break;
            }
        }
    }
    report(8, pass, &detail);
}

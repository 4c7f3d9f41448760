//! Estimate-quality metrics, the ka estimability window and the seeded
//! noise-robustness sweep.

use serde::{Deserialize, Serialize};

use crate::bank::{FormFactorBank, SizeGrid};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_constrained_with_rcond, estimate_unconstrained_with_rcond, Method,
    SizeDistributionEstimate, SuppressionPolicy,
};
use crate::phantom::{add_noise, synthesize_phantom, GroundTruth, PhantomSpec, SpectrumKind, SpectrumVector};

pub const KA_LOW: f64 = 0.6;
pub const KA_HIGH: f64 = 1.2;

/// Size window over which the band 0.6 <= ka <= 1.2 makes sizes
/// estimable; the tabulated size value is fed to k*a directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimableRange {
    pub size_min_um: f64,
    pub size_max_um: f64,
    pub ka_low: f64,
    pub ka_high: f64,
}

impl EstimableRange {
    pub fn contains(&self, size_um: f64) -> bool {
        size_um >= self.size_min_um && size_um <= self.size_max_um
    }
}

/// size_min = 0.6 c / (2 pi f_max), size_max = 1.2 c / (2 pi f_min);
/// f in MHz, c in mm/us, sizes in um.
pub fn estimable_size_range(
    f_min_mhz: f64,
    f_max_mhz: f64,
    background_speed: f64,
) -> Result<EstimableRange> {
    if !(f_min_mhz > 0.0 && f_max_mhz >= f_min_mhz) {
        return Err(Error::Domain(format!(
            "need 0 < f_min <= f_max, got {f_min_mhz} and {f_max_mhz}"
        )));
    }
    if !(background_speed > 0.0) {
        return Err(Error::Domain("background speed must be positive".into()));
    }
    // c [mm/us] * 1e3 / f [MHz] has units of um.
    let size_um = |kappa: f64, f: f64| {
        kappa * background_speed * 1e3 / (2.0 * std::f64::consts::PI * f)
    };
    Ok(EstimableRange {
        size_min_um: size_um(KA_LOW, f_max_mhz),
        size_max_um: size_um(KA_HIGH, f_min_mhz),
        ka_low: KA_LOW,
        ka_high: KA_HIGH,
    })
}

/// Quantitative proxies for curve agreement: mean absolute probability
/// error over the whole grid and inside the estimable range, the
/// probability mass outside the range, and per-mode peak distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mae_full: f64,
    pub mae_in_range: f64,
    pub out_of_range_mass: f64,
    pub peak_errors_um: Vec<f64>,
}

/// Local maxima of `p` at or above 10% of the global maximum. Plateaus
/// count once, at their first index.
pub fn find_peaks(p: &[f64]) -> Vec<usize> {
    let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let floor = 0.1 * max;
    let mut peaks = Vec::new();
    let n = p.len();
    let mut i = 0;
    while i < n {
        if p[i] < floor {
            i += 1;
            continue;
        }
        // extend over a plateau
        let start = i;
        let mut end = i;
        while end + 1 < n && p[end + 1] == p[start] {
            end += 1;
        }
        let left_ok = start == 0 || p[start - 1] < p[start];
        let right_ok = end == n - 1 || p[end + 1] < p[start];
        if left_ok && right_ok {
            peaks.push(start);
        }
        i = end + 1;
    }
    peaks
}

pub fn evaluate(
    estimate: &SizeDistributionEstimate,
    truth: &GroundTruth,
    sizes: &SizeGrid,
    range: &EstimableRange,
) -> Result<EvaluationReport> {
    let n = sizes.len();
    if estimate.weights.len() != n || truth.probabilities.len() != n {
        return Err(Error::GridMismatch(
            "estimate, truth and size grid lengths differ".into(),
        ));
    }
    let p_est = estimate.probabilities()?;
    let p_true = &truth.probabilities;

    let mut abs_sum_full = 0.0;
    let mut abs_sum_in = 0.0;
    let mut in_count = 0usize;
    let mut out_mass = 0.0;
    for ((&pe, pt), &size) in p_est.iter().zip(p_true).zip(sizes.values()) {
        let err = (pe - pt).abs();
        abs_sum_full += err;
        if range.contains(size) {
            abs_sum_in += err;
            in_count += 1;
        } else {
            out_mass += pe;
        }
    }
    let mae_full = abs_sum_full / n as f64;
    let mae_in_range = if in_count > 0 {
        abs_sum_in / in_count as f64
    } else {
        0.0
    };

    let est_peaks = find_peaks(&p_est);
    let true_peaks = find_peaks(p_true);
    let peak_errors_um = true_peaks
        .iter()
        .map(|&t| {
            est_peaks
                .iter()
                .map(|&e| (sizes.values()[e] - sizes.values()[t]).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    Ok(EvaluationReport {
        mae_full,
        mae_in_range,
        out_of_range_mass: out_mass,
        peak_errors_um,
    })
}

/// One noise-sweep trial outcome; `error` is set when an estimator failed
/// on that trial instead of aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub method: Method,
    pub mae_in_range: f64,
    pub mae_full: f64,
    pub out_of_range_mass: f64,
    pub residual_l2: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub mean_mae_in_range: f64,
    pub std_mae_in_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepSummary {
    pub variance: f64,
    pub trials: u64,
    pub seed: u64,
    /// Noise stream generator; pinned so seeds stay portable.
    pub rng_algorithm: String,
    pub records: Vec<TrialRecord>,
    pub unconstrained: MethodSummary,
    pub constrained: MethodSummary,
}

fn summarize(records: &[TrialRecord], method: Method) -> MethodSummary {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method && r.error.is_none())
        .map(|r| r.mae_in_range)
        .collect();
    let failed = records
        .iter()
        .filter(|r| r.method == method && r.error.is_some())
        .count();
    let n = values.len();
    let mean = if n > 0 {
        values.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let std = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    MethodSummary {
        method,
        trials_ok: n,
        trials_failed: failed,
        mean_mae_in_range: mean,
        std_mae_in_range: std,
    }
}

/// Seeded noise-robustness experiment: per trial, noise the unit-max BSC,
/// rebuild the form factor, run both estimators and score them against
/// the noise-free ground truth. Trial t uses seed XOR t, so trials are
/// order-independent.
#[allow(clippy::too_many_arguments)]
pub fn noise_sweep(
    phantom: &PhantomSpec,
    bank: &FormFactorBank,
    variance: f64,
    trials: u64,
    seed: u64,
    policy: &SuppressionPolicy,
    rcond: f64,
) -> Result<NoiseSweepSummary> {
    if trials < 1 {
        return Err(Error::Config("noise sweep needs at least one trial".into()));
    }
    policy.validate()?;
    let synthesis = synthesize_phantom(phantom, bank)?;
    let freqs = bank.frequencies();
    let range = estimable_size_range(
        freqs.values()[0],
        freqs.values()[freqs.len() - 1],
        bank.materials.background_speed,
    )?;
    let (bsc_unit, _) = synthesis.bsc.to_unit_max()?;

    let mut records = Vec::with_capacity(2 * trials as usize);
    for t in 0..trials {
        let noisy = add_noise(&bsc_unit, variance, seed ^ t)?;
        let trial_result = (|| -> Result<SpectrumVector> {
            let mut ff: Vec<f64> = noisy
                .values
                .iter()
                .zip(freqs.values())
                .map(|(b, &f)| b / f.powi(4))
                .collect();
            let max = ff.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(max > 0.0) {
                return Err(Error::Domain(
                    "noisy form factor has non-positive maximum".into(),
                ));
            }
            for v in ff.iter_mut() {
                *v /= max;
            }
            SpectrumVector::new(freqs.clone(), ff, SpectrumKind::FormFactor)
        })();

        let f_t = match trial_result {
            Ok(f_t) => f_t,
            Err(e) => {
                for method in [Method::Unconstrained, Method::Constrained] {
                    records.push(TrialRecord {
                        trial: t,
                        method,
                        mae_in_range: 0.0,
                        mae_full: 0.0,
                        out_of_range_mass: 0.0,
                        residual_l2: 0.0,
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };

        for method in [Method::Unconstrained, Method::Constrained] {
            let outcome = match method {
                Method::Unconstrained => estimate_unconstrained_with_rcond(&f_t, bank, rcond),
                Method::Constrained => {
                    estimate_constrained_with_rcond(&f_t, bank, policy, rcond)
                }
            }
            .and_then(|est| {
                let report = evaluate(&est, &synthesis.truth, bank.sizes(), &range)?;
                Ok((est, report))
            });
            match outcome {
                Ok((est, report)) => records.push(TrialRecord {
                    trial: t,
                    method,
                    mae_in_range: report.mae_in_range,
                    mae_full: report.mae_full,
                    out_of_range_mass: report.out_of_range_mass,
                    residual_l2: est.residual_l2,
                    error: None,
                }),
                Err(e) => records.push(TrialRecord {
                    trial: t,
                    method,
                    mae_in_range: 0.0,
                    mae_full: 0.0,
                    out_of_range_mass: 0.0,
                    residual_l2: 0.0,
                    error: Some(e.to_string()),
                }),
            }
        }
    }

    let unconstrained = summarize(&records, Method::Unconstrained);
    let constrained = summarize(&records, Method::Constrained);
    Ok(NoiseSweepSummary {
        variance,
        trials,
        seed,
        rng_algorithm: "chacha8".into(),
        records,
        unconstrained,
        constrained,
    })
}

//! Backscattering from a solid elastic sphere in a fluid, computed with
//! Faran's partial-wave phase shifts.
//!
//! Inputs are accepted in the units used throughout the crate (sizes in um,
//! frequencies in MHz, speeds in mm/us, densities in g/cm3) and converted to
//! SI internally before any wave-number arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest supported partial-wave / Bessel order.
pub const MAX_ORDER: usize = 200;

/// Relative size of the last retained series term under automatic truncation.
const SERIES_TOL: f64 = 1e-12;

/// Physical constants of the sphere and the embedding fluid.
///
/// Speeds are in mm/us, densities in g/cm3; Poisson's ratio is
/// dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticMaterials {
    pub sphere_longitudinal_speed: f64,
    pub sphere_poisson_ratio: f64,
    pub sphere_density: f64,
    pub background_speed: f64,
    pub background_density: f64,
}

impl AcousticMaterials {
    /// Glass beads in a water-based gel.
    pub fn glass_beads_in_gel() -> Self {
        AcousticMaterials {
            sphere_longitudinal_speed: 5.5719,
            sphere_poisson_ratio: 0.21,
            sphere_density: 2.38,
            background_speed: 1.498,
            background_density: 1.04,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sphere_longitudinal_speed > 0.0)
            || !(self.background_speed > 0.0)
            || !(self.sphere_density > 0.0)
            || !(self.background_density > 0.0)
        {
            return Err(Error::Domain(
                "speeds and densities must be positive".into(),
            ));
        }
        if !(self.sphere_poisson_ratio > 0.0 && self.sphere_poisson_ratio < 0.5) {
            return Err(Error::Domain(
                "Poisson's ratio must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }

    /// Shear wave speed in the sphere (mm/us), from the isotropic
    /// elasticity relation c_S = c_L sqrt((1 - 2v) / (2 - 2v)).
    pub fn shear_speed(&self) -> f64 {
        let v = self.sphere_poisson_ratio;
        self.sphere_longitudinal_speed * ((1.0 - 2.0 * v) / (2.0 - 2.0 * v)).sqrt()
    }
}

/// How a tabulated size value enters the Faran boundary conditions.
///
/// The bead grids are specified as diameters, so the physics uses
/// radius = size / 2 by default. `Radius` feeds the tabulated value to
/// k*a directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeConvention {
    Diameter,
    Radius,
}

/// One evaluation of the differential backscattering cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringEvaluation {
    pub size_um: f64,
    pub frequency_mhz: f64,
    /// sigma_b in m^2 (internally consistent scale; every consumer works
    /// with ratios or renormalized spectra).
    pub cross_section: f64,
    /// Number of partial-wave terms summed (highest order + 1).
    pub terms_used: usize,
}

/// Spherical Bessel function of the first kind j_n(x).
///
/// Computed by downward recurrence (Miller's algorithm) normalized against
/// the closed forms of j_0 and j_1.
pub fn spherical_bessel_j(order: usize, x: f64) -> Result<f64> {
    check_bessel_args(order, x)?;
    let values = bessel_j_array(order.max(1), x);
    Ok(values[order])
}

/// Spherical Bessel function of the second kind y_n(x), by upward
/// recurrence from the closed forms of y_0 and y_1.
pub fn spherical_bessel_y(order: usize, x: f64) -> Result<f64> {
    check_bessel_args(order, x)?;
    let values = bessel_y_array(order.max(1), x);
    let y = values[order];
    if !y.is_finite() {
        return Err(Error::Domain(format!(
            "y_{order}({x}) overflows double precision"
        )));
    }
    Ok(y)
}

fn check_bessel_args(order: usize, x: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "spherical Bessel argument must be positive, got {x}"
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "spherical Bessel order {order} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// j_0 .. j_n at x, n >= 1.
fn bessel_j_array(n_max: usize, x: f64) -> Vec<f64> {
    if x < 0.5 {
        // The closed form for j_1 cancels catastrophically as x -> 0;
        // the power series converges in a handful of terms here.
        return bessel_j_array_series(n_max, x);
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let mut out = vec![0.0; n_max + 1];
    out[0] = j0;
    out[1] = j1;
    if n_max == 1 {
        return out;
    }

    // Start the trial recurrence well above both the requested order and
    // the turning point near k = x, where j_k stops oscillating and decays.
    let start = n_max.max(x.ceil() as usize) + 25;
    let mut above = 0.0_f64; // trial j_{k+1}
    let mut here = 1e-30_f64; // trial j_k, k = start
    if start <= n_max {
        out[start] = here;
    }
    for k in (0..start).rev() {
        let below = (2 * k + 3) as f64 / x * here - above;
        above = here;
        here = below;
        if k <= n_max {
            out[k] = here;
        }
        if here.abs() > 1e250 {
            here *= 1e-250;
            above *= 1e-250;
            for v in out.iter_mut().skip(k) {
                *v *= 1e-250;
            }
        }
    }
    // Normalize against whichever closed form is better conditioned.
    let scale = if j0.abs() >= j1.abs() {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out.iter_mut().skip(2) {
        *v *= scale;
    }
    out[0] = j0;
    out[1] = j1;
    out
}

/// Direct power-series evaluation of j_0 .. j_n, accurate for small x
/// where the closed forms cancel. Orders whose leading term underflows
/// come out as zero, which is correct to double precision.
fn bessel_j_array_series(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let mut leading = 1.0; // x^n / (2n+1)!!
    for (n, slot) in out.iter_mut().enumerate() {
        if n > 0 {
            leading *= x / (2 * n + 1) as f64;
        }
        let mut term = leading;
        let mut sum = term;
        for m in 0..40 {
            term *= -x * x / 2.0 / ((m + 1) as f64 * (2 * n + 2 * m + 3) as f64);
            sum += term;
            if term.abs() <= f64::EPSILON * sum.abs() {
                break;
            }
        }
        *slot = sum;
    }
    out
}

/// y_0 .. y_n at x, n >= 1. Upward recurrence is stable for y.
fn bessel_y_array(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    out[0] = -x.cos() / x;
    out[1] = -x.cos() / (x * x) - x.sin() / x;
    for k in 1..n_max {
        out[k + 1] = (2 * k + 1) as f64 / x * out[k] - out[k - 1];
    }
    out
}

/// Derivative of a spherical Bessel function from the array of values:
/// f_n'(x) = f_{n-1}(x) - (n+1)/x * f_n(x), with f_0' = -f_1.
fn bessel_derivative(values: &[f64], n: usize, x: f64) -> f64 {
    if n == 0 {
        -values[1]
    } else {
        values[n - 1] - (n + 1) as f64 / x * values[n]
    }
}

/// -x f_n'(x) / f_n(x), the logarithmic-derivative combination the Faran
/// boundary conditions are written in.
fn tan_log_derivative(values: &[f64], n: usize, x: f64) -> f64 {
    -x * bessel_derivative(values, n, x) / values[n]
}

struct PhaseShiftTables {
    j_fluid: Vec<f64>,
    y_fluid: Vec<f64>,
    j_long: Vec<f64>,
    j_shear: Vec<f64>,
}

impl PhaseShiftTables {
    fn new(cap: usize, x_fluid: f64, x_long: f64, x_shear: f64) -> Self {
        let n = cap.max(1);
        PhaseShiftTables {
            j_fluid: bessel_j_array(n, x_fluid),
            y_fluid: bessel_y_array(n, x_fluid),
            j_long: bessel_j_array(n, x_long),
            j_shear: bessel_j_array(n, x_shear),
        }
    }
}

/// tan(eta_n) for partial wave n.
///
/// Faran's boundary conditions at the sphere surface, in the standard
/// logarithmic-derivative form; x_fluid = k a, x_long = k_L a,
/// x_shear = k_S a, density_ratio = rho_fluid / rho_sphere.
fn tan_phase_shift(
    tables: &PhaseShiftTables,
    n: usize,
    x_fluid: f64,
    x_long: f64,
    x_shear: f64,
    density_ratio: f64,
) -> f64 {
    let nn = (n * n + n) as f64;
    let half_xs2 = 0.5 * x_shear * x_shear;

    // Deep in the sub-wavelength regime j_n underflows (and y_n
    // overflows) at high orders; the phase shift is zero to double
    // precision there and the solid-side ratios would be 0/0.
    if -tables.j_fluid[n] / tables.y_fluid[n] == 0.0 {
        return 0.0;
    }

    let ta_long = tan_log_derivative(&tables.j_long, n, x_long);
    let ta_shear = tan_log_derivative(&tables.j_shear, n, x_shear);
    let ta_fluid = tan_log_derivative(&tables.j_fluid, n, x_fluid);
    let tb_fluid = tan_log_derivative(&tables.y_fluid, n, x_fluid);
    let tan_delta = -tables.j_fluid[n] / tables.y_fluid[n];

    // The textbook form divides by (ta_long + 1) and by the shear-side
    // denominator separately; multiplying both through keeps the ratio
    // finite when either factor crosses zero.
    let shear_den = nn - 1.0 - half_xs2 + ta_shear;
    let num = ta_long * shear_den - nn * (ta_long + 1.0);
    let den = (nn - half_xs2 + 2.0 * ta_long) * shear_den
        - nn * (ta_shear + 1.0) * (ta_long + 1.0);

    let tan_zeta = -half_xs2 * num / den;
    let tan_phi = -density_ratio * tan_zeta;

    tan_delta * (tan_phi + ta_fluid) / (tan_phi + tb_fluid)
}

/// sin(eta) e^{i eta} as (re, im) from t = tan(eta); well defined in the
/// limit t -> +-inf (pure resonance, value i).
fn resonance_term(t: f64) -> (f64, f64) {
    if t.is_infinite() {
        return (0.0, 1.0);
    }
    // NaN only arises at orders that are degenerate to double precision,
    // where the true contribution is below the neighbours' round-off.
    if t.is_nan() {
        return (0.0, 0.0);
    }
    let denom = 1.0 + t * t;
    (t / denom, t * t / denom)
}

/// Differential backscattering cross-section with the default diameter
/// convention (physics radius = size / 2) and automatic truncation unless
/// `truncation` pins the highest partial-wave order.
pub fn backscatter_cross_section(
    size_um: f64,
    frequency_mhz: f64,
    materials: &AcousticMaterials,
    truncation: Option<usize>,
) -> Result<ScatteringEvaluation> {
    backscatter_cross_section_with(
        size_um,
        frequency_mhz,
        materials,
        truncation,
        SizeConvention::Diameter,
    )
}

pub fn backscatter_cross_section_with(
    size_um: f64,
    frequency_mhz: f64,
    materials: &AcousticMaterials,
    truncation: Option<usize>,
    convention: SizeConvention,
) -> Result<ScatteringEvaluation> {
    materials.validate()?;
    if !(size_um > 0.0) {
        return Err(Error::Domain(format!(
            "scatterer size must be positive, got {size_um}"
        )));
    }
    if !(frequency_mhz > 0.0) {
        return Err(Error::Domain(format!(
            "frequency must be positive, got {frequency_mhz}"
        )));
    }
    if let Some(t) = truncation {
        if t > MAX_ORDER {
            return Err(Error::Domain(format!(
                "truncation order {t} exceeds supported maximum {MAX_ORDER}"
            )));
        }
    }

    let radius_m = match convention {
        SizeConvention::Diameter => size_um * 1e-6 / 2.0,
        SizeConvention::Radius => size_um * 1e-6,
    };
    let f_hz = frequency_mhz * 1e6;
    let c_fluid = materials.background_speed * 1e3; // m/s
    let c_long = materials.sphere_longitudinal_speed * 1e3;
    let c_shear = materials.shear_speed() * 1e3;
    let omega = 2.0 * std::f64::consts::PI * f_hz;

    let k_fluid = omega / c_fluid;
    let x_fluid = k_fluid * radius_m;
    let x_long = omega / c_long * radius_m;
    let x_shear = omega / c_shear * radius_m;
    let density_ratio = materials.background_density / materials.sphere_density;

    let n_min = x_fluid.ceil() as usize + 10;
    let mut cap = match truncation {
        Some(t) => t,
        None => (n_min + 20).min(MAX_ORDER),
    };

    loop {
        let tables = PhaseShiftTables::new(cap + 1, x_fluid, x_long, x_shear);
        let mut sum_re = 0.0;
        let mut sum_im = 0.0;
        let mut n_used = None;

        for n in 0..=cap {
            let t = tan_phase_shift(&tables, n, x_fluid, x_long, x_shear, density_ratio);
            let (s_re, s_im) = resonance_term(t);
            let weight = (2 * n + 1) as f64 * if n % 2 == 0 { 1.0 } else { -1.0 };
            let c_re = weight * s_re;
            let c_im = weight * s_im;
            sum_re += c_re;
            sum_im += c_im;

            if truncation.is_none() && n >= n_min {
                let term_mag = c_re.hypot(c_im);
                let sum_mag = sum_re.hypot(sum_im);
                if term_mag < SERIES_TOL * sum_mag {
                    n_used = Some(n);
                    break;
                }
            }
        }

        match (truncation, n_used) {
            (Some(t), _) => {
                let amplitude2 = sum_re * sum_re + sum_im * sum_im;
                return Ok(ScatteringEvaluation {
                    size_um,
                    frequency_mhz,
                    cross_section: amplitude2 / (k_fluid * k_fluid),
                    terms_used: t + 1,
                });
            }
            (None, Some(n)) => {
                let amplitude2 = sum_re * sum_re + sum_im * sum_im;
                return Ok(ScatteringEvaluation {
                    size_um,
                    frequency_mhz,
                    cross_section: amplitude2 / (k_fluid * k_fluid),
                    terms_used: n + 1,
                });
            }
            (None, None) if cap >= MAX_ORDER => {
                return Err(Error::NonConvergence {
                    size_um,
                    frequency_mhz,
                    terms: MAX_ORDER,
                });
            }
            (None, None) => {
                cap = (cap + 30).min(MAX_ORDER);
            }
        }
    }
}

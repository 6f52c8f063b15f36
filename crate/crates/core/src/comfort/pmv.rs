use serde::{Deserialize, Serialize};

use super::ComfortError;
use crate::scalar::Scalar;

/// Iteration cap for the clothing surface temperature solve.
pub const TCL_MAX_ITERATIONS: usize = 150;

/// Convergence tolerance on the clothing surface temperature, °C.
const TCL_TOLERANCE: f64 = 1e-5;

/// The six environmental and personal inputs of the Fanger heat balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmvInputs<T> {
    /// Air temperature, °C.
    pub air_temp: T,
    /// Mean radiant temperature, °C.
    pub mean_radiant_temp: T,
    /// Relative air velocity, m/s.
    pub air_velocity: T,
    /// Relative humidity, percent.
    pub rel_humidity: T,
    /// Metabolic rate, met.
    pub metabolic_rate: T,
    /// Clothing insulation, clo.
    pub clothing_insulation: T,
}

pub(crate) fn check_range<T: Scalar>(
    field: &'static str,
    value: T,
    min: f64,
    max: f64,
) -> Result<(), ComfortError> {
    let v = value.as_f64();
    if !v.is_finite() {
        return Err(ComfortError::NotFinite);
    }
    if v < min || v > max {
        return Err(ComfortError::OutOfRange {
            field,
            value: v,
            min,
            max,
        });
    }
    Ok(())
}

impl<T: Scalar> PmvInputs<T> {
    pub fn validate(&self) -> Result<(), ComfortError> {
        check_range("air_temp", self.air_temp, -10.0, 50.0)?;
        check_range("mean_radiant_temp", self.mean_radiant_temp, -10.0, 50.0)?;
        check_range("air_velocity", self.air_velocity, 0.0, 5.0)?;
        check_range("rel_humidity", self.rel_humidity, 0.0, 100.0)?;
        check_range("metabolic_rate", self.metabolic_rate, 0.7, 4.0)?;
        check_range("clothing_insulation", self.clothing_insulation, 0.0, 2.0)?;
        Ok(())
    }
}

/// Predicted Mean Vote from the ISO 7730 heat balance.
///
/// The clothing surface temperature is found by a damped fixed point
/// (damping 0.5) on t_cl, with the convective coefficient taken as the
/// larger of the natural and forced correlations at every step. External
/// work is zero. The result is not clamped.
pub fn compute_pmv<T: Scalar>(inputs: &PmvInputs<T>) -> Result<T, ComfortError> {
    inputs.validate()?;
    let c = T::of;

    let ta = inputs.air_temp;
    let tr = inputs.mean_radiant_temp;
    let vel = inputs.air_velocity;

    // water vapour partial pressure, Pa
    let pa = inputs.rel_humidity * c(10.0) * (c(16.6536) - c(4030.183) / (ta + c(235.0))).exp();

    let icl = c(0.155) * inputs.clothing_insulation;
    let m = inputs.metabolic_rate * c(58.15);
    let mw = m;

    let fcl = if icl <= c(0.078) {
        c(1.0) + c(1.29) * icl
    } else {
        c(1.05) + c(0.645) * icl
    };

    let hc_forced = c(12.1) * vel.sqrt();
    let taa = ta + c(273.0);
    let tra = tr + c(273.0);
    let radiant4 = (tra / c(100.0)).powi(4);

    // Heat balance at the clothing surface, in the scaled variable x = (t_cl + 273) / 100:
    // x = (p5 + p4 * hc - p2 * x^4) / (100 + p3 * hc)
    let p1 = icl * fcl;
    let p2 = p1 * c(3.96);
    let p3 = p1 * c(100.0);
    let p4 = p1 * taa;
    let p5 = c(308.7) - c(0.028) * mw + p2 * radiant4;

    let natural = |x: T| c(2.38) * (c(100.0) * x - taa).abs().powf(c(0.25));
    let update = |x: T, hc: T| (p5 + p4 * hc - p2 * x.powi(4)) / (c(100.0) + p3 * hc);

    // f32 cannot resolve 1e-5 °C near 300 K, so the tolerance never drops below a few ulps.
    let tol = c(TCL_TOLERANCE).max(c(64.0) * T::epsilon() * c(400.0));

    let tcla0 = taa + (c(35.5) - ta) / (c(3.5) * icl + c(0.1));
    let mut x_prev = tcla0 / c(100.0);
    let mut x_next = x_prev;
    let mut hc = hc_forced;
    let mut converged = false;
    for _ in 0..TCL_MAX_ITERATIONS {
        let damped = (x_prev + x_next) / c(2.0);
        hc = hc_forced.max(natural(damped));
        x_prev = damped;
        x_next = update(damped, hc);
        if (x_next - x_prev).abs() * c(100.0) < tol {
            converged = true;
            break;
        }
    }
    if !converged || !x_next.is_finite() {
        return Err(ComfortError::NonConvergence {
            iterations: TCL_MAX_ITERATIONS,
        });
    }

    let tcl = c(100.0) * x_next - c(273.0);

    let skin_diffusion = c(3.05e-3) * (c(5733.0) - c(6.99) * mw - pa);
    let sweating = if mw > c(58.15) {
        c(0.42) * (mw - c(58.15))
    } else {
        T::zero()
    };
    let latent_resp = c(1.7e-5) * m * (c(5867.0) - pa);
    let dry_resp = c(0.0014) * m * (c(34.0) - ta);
    let radiation = c(3.96) * fcl * (x_next.powi(4) - radiant4);
    let convection = fcl * hc * (tcl - ta);

    let sensitivity = c(0.303) * (c(-0.036) * m).exp() + c(0.028);
    Ok(sensitivity
        * (mw - skin_diffusion - sweating - latent_resp - dry_resp - radiation - convection))
}

/// Predicted Percentage Dissatisfied for a PMV value.
pub fn pmv_to_ppd<T: Scalar>(pmv: T) -> T {
    let c = T::of;
    let p2 = pmv * pmv;
    c(100.0) - c(95.0) * (c(-0.03353) * p2 * p2 - c(0.2179) * p2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(ta: f64, tr: f64, v: f64, rh: f64, met: f64, clo: f64) -> PmvInputs<f64> {
        PmvInputs {
            air_temp: ta,
            mean_radiant_temp: tr,
            air_velocity: v,
            rel_humidity: rh,
            metabolic_rate: met,
            clothing_insulation: clo,
        }
    }

    #[test]
    fn canonical_row() {
        let pmv = compute_pmv(&inputs(22.0, 22.0, 0.10, 60.0, 1.2, 0.5)).unwrap();
        // reference implementation: -0.75237
        assert!((pmv - (-0.7523668571085066)).abs() < 0.05, "pmv = {pmv}");
    }

    #[test]
    fn warmer_air_raises_pmv() {
        let warm = compute_pmv(&inputs(26.0, 26.0, 0.10, 50.0, 1.2, 0.5)).unwrap();
        let cool = compute_pmv(&inputs(20.0, 26.0, 0.10, 50.0, 1.2, 0.5)).unwrap();
        assert!(warm > cool);
    }

    #[test]
    fn humidity_out_of_range() {
        let err = compute_pmv(&inputs(22.0, 22.0, 0.10, 150.0, 1.2, 0.5)).unwrap_err();
        assert!(matches!(
            err,
            ComfortError::OutOfRange {
                field: "rel_humidity",
                ..
            }
        ));
    }

    #[test]
    fn nan_input_is_not_finite() {
        let err = compute_pmv(&inputs(f64::NAN, 22.0, 0.10, 50.0, 1.2, 0.5)).unwrap_err();
        assert_eq!(err, ComfortError::NotFinite);
    }

    #[test]
    fn repeated_calls_are_bit_identical() {
        let i = inputs(24.3, 25.1, 0.22, 47.0, 1.4, 0.8);
        let a = compute_pmv(&i).unwrap();
        let b = compute_pmv(&i).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn single_precision_tracks_double() {
        let d = compute_pmv(&inputs(22.0, 22.0, 0.10, 60.0, 1.2, 0.5)).unwrap();
        let s = compute_pmv(&PmvInputs::<f32> {
            air_temp: 22.0,
            mean_radiant_temp: 22.0,
            air_velocity: 0.10,
            rel_humidity: 60.0,
            metabolic_rate: 1.2,
            clothing_insulation: 0.5,
        })
        .unwrap();
        assert!((d - s as f64).abs() < 1e-3);
    }

    #[test]
    fn ppd_values() {
        assert_eq!(pmv_to_ppd(0.0), 5.0);
        let expected = 100.0 - 95.0 * (-0.03353f64 - 0.2179).exp();
        assert!((pmv_to_ppd(1.0) - expected).abs() < 1e-12);
        assert_eq!(pmv_to_ppd(1.7), pmv_to_ppd(-1.7));
    }

    #[test]
    fn extreme_corners_converge() {
        for &(ta, v, met, clo) in &[
            (-10.0, 5.0, 0.7, 0.0),
            (50.0, 0.0, 4.0, 2.0),
            (-10.0, 0.0, 4.0, 2.0),
            (50.0, 5.0, 0.7, 0.0),
        ] {
            let r = compute_pmv(&inputs(ta, ta, v, 50.0, met, clo));
            assert!(r.is_ok(), "{ta} {v} {met} {clo}: {r:?}");
        }
    }
}

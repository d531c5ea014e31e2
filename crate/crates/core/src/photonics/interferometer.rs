use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{PhotonicsError, Result, TimeBinGeometry};
use crate::propagation::PulseTrain;
use crate::scalar::Real;

/// Output port of the second splitter.
///
/// Port `A` is the one where `|e⟩+|l⟩` interferes constructively at `θ = 0`:
/// its field is `√(s₁s₂T_s)·x(t) + √((1-s₁)(1-s₂)T_l)·e^{iθ}·x(t-τ)`.
/// Port `B` carries `√(s₁(1-s₂)T_s)·x(t) - √((1-s₁)s₂T_l)·e^{iθ}·x(t-τ)`.
/// `sᵢ` are the splitters' short-arm fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Port {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSpec<T> {
    pub arm_delay_ns: T,
    pub analysis_phase: T,
    pub splitter_ratios: [T; 2],
    /// Intensity transmissions of the short and long arm.
    pub arm_transmissions: [T; 2],
    #[serde(default)]
    pub port: Port,
}

impl<T: Real> InterferometerSpec<T> {
    pub fn balanced(arm_delay_ns: T, analysis_phase: T) -> Self {
        let h = T::lit(0.5);
        Self {
            arm_delay_ns,
            analysis_phase,
            splitter_ratios: [h, h],
            arm_transmissions: [T::one(), T::one()],
            port: Port::A,
        }
    }

    pub fn with_port(self, port: Port) -> Self {
        Self { port, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !self
            .splitter_ratios
            .iter()
            .chain(&self.arm_transmissions)
            .all(|&v| unit(v))
        {
            return Err(PhotonicsError::InvalidParameter(
                "splitter ratios and arm transmissions must lie in [0, 1]".into(),
            ));
        }
        if !(self.arm_delay_ns > T::zero()) || !self.analysis_phase.is_finite() {
            return Err(PhotonicsError::InvalidParameter(
                "arm delay must be positive and the phase finite".into(),
            ));
        }
        Ok(())
    }

    /// Field coefficients `(c_short, c_long)` of the selected port.
    pub fn coefficients(&self) -> (T, T) {
        let [s1, s2] = self.splitter_ratios;
        let [ts, tl] = self.arm_transmissions;
        let one = T::one();
        match self.port {
            Port::A => ((s1 * s2 * ts).sqrt(), ((one - s1) * (one - s2) * tl).sqrt()),
            Port::B => (
                (s1 * (one - s2) * ts).sqrt(),
                -((one - s1) * s2 * tl).sqrt(),
            ),
        }
    }
}

/// Field at the selected output port. The record is extended by the arm
/// delay so the long-path copy is kept whole; the delay must be a whole
/// number of samples.
pub fn umzi_output<T: Real>(
    input: &PulseTrain<T>,
    spec: &InterferometerSpec<T>,
) -> Result<PulseTrain<T>> {
    spec.validate()?;
    let dt = input.dt();
    let k_real = (spec.arm_delay_ns / dt).round();
    let tol = dt * T::lit(1e-6);
    if (k_real * dt - spec.arm_delay_ns).abs() > tol {
        return Err(PhotonicsError::DelayMismatch {
            delay_ns: spec.arm_delay_ns.as_f64(),
            expected_ns: (k_real * dt).as_f64(),
            tolerance_ns: tol.as_f64(),
        });
    }
    let k = k_real.to_usize().unwrap_or(0);
    let (cs, cl) = spec.coefficients();
    let long = Complex::from_polar(cl, spec.analysis_phase);
    let x = input.samples();
    let n = x.len() + k;
    let zero = Complex::new(T::zero(), T::zero());
    let out: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let short = if i < x.len() { x[i] * cs } else { zero };
            let delayed = if i >= k { x[i - k] * long } else { zero };
            short + delayed
        })
        .collect();
    Ok(PulseTrain::new(input.t0(), dt, out)?)
}

/// [`umzi_output`] after checking the arm delay against the qubit's bin
/// separation to within one sample.
pub fn umzi_for_qubit<T: Real>(
    input: &PulseTrain<T>,
    spec: &InterferometerSpec<T>,
    geometry: &TimeBinGeometry<T>,
) -> Result<PulseTrain<T>> {
    if (spec.arm_delay_ns - geometry.bin_separation_ns).abs() > input.dt() {
        return Err(PhotonicsError::DelayMismatch {
            delay_ns: spec.arm_delay_ns.as_f64(),
            expected_ns: geometry.bin_separation_ns.as_f64(),
            tolerance_ns: input.dt().as_f64(),
        });
    }
    umzi_output(input, spec)
}

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{PhotonicsError, Result};
use crate::propagation::PulseTrain;
use crate::scalar::Real;

/// Preparation label of a time-bin qubit `a_e|e⟩ + a_l|l⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum QubitState<T> {
    E,
    L,
    Plus,
    Minus,
    PlusI,
    /// `(|e⟩ + e^{iΔα}|l⟩)/√2`.
    Custom {
        delta_alpha: T,
    },
}

impl<T: Real> QubitState<T> {
    /// `(a_e, a_l, Δα)`.
    pub fn amplitudes(self) -> (Complex<T>, Complex<T>, T) {
        let z = T::zero();
        let h = T::FRAC_1_SQRT_2();
        match self {
            QubitState::E => (Complex::new(T::one(), z), Complex::new(z, z), z),
            QubitState::L => (Complex::new(z, z), Complex::new(T::one(), z), z),
            QubitState::Plus => (Complex::new(h, z), Complex::new(h, z), z),
            QubitState::Minus => (Complex::new(h, z), Complex::new(-h, z), T::PI()),
            QubitState::PlusI => (Complex::new(h, z), Complex::new(z, h), T::FRAC_PI_2()),
            QubitState::Custom { delta_alpha } => (
                Complex::new(h, z),
                Complex::from_polar(h, delta_alpha),
                delta_alpha,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBinQubit<T> {
    pub amp_early: Complex<T>,
    pub amp_late: Complex<T>,
    pub relative_phase: T,
    pub pulse_fwhm_ns: T,
    pub bin_separation_ns: T,
    pub mean_photon_number: T,
}

impl<T: Real> TimeBinQubit<T> {
    pub fn validate(&self) -> Result<()> {
        let norm = self.amp_early.norm_sqr() + self.amp_late.norm_sqr();
        if (norm - T::one()).abs() > T::lit(1e-12) {
            return Err(PhotonicsError::InvalidParameter(format!(
                "|a_e|² + |a_l|² = {norm}, expected 1"
            )));
        }
        if !(self.pulse_fwhm_ns > T::zero()) || !(self.mean_photon_number > T::zero()) {
            return Err(PhotonicsError::InvalidParameter(
                "pulse width and photon number must be positive".into(),
            ));
        }
        if !(self.bin_separation_ns > self.pulse_fwhm_ns) {
            return Err(PhotonicsError::InvalidParameter(format!(
                "bin separation {} ns must exceed the pulse width {} ns",
                self.bin_separation_ns, self.pulse_fwhm_ns
            )));
        }
        Ok(())
    }

    /// Field amplitude of one bin's envelope at the neighbouring bin center.
    pub fn neighbour_amplitude(&self) -> T {
        let r = self.bin_separation_ns / self.pulse_fwhm_ns;
        (-T::lit(2.0) * T::LN_2() * r * r).exp()
    }
}

/// Pulse shape and sampling shared by all qubits of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBinGeometry<T> {
    pub pulse_fwhm_ns: T,
    pub bin_separation_ns: T,
    pub mean_photon_number: T,
    /// Center of the early bin on the record's time axis.
    pub early_center_ns: T,
    pub t0_ns: T,
    pub dt_ns: T,
    pub len: usize,
}

impl<T: Real> TimeBinGeometry<T> {
    pub fn qubit(&self, state: QubitState<T>) -> TimeBinQubit<T> {
        let (amp_early, amp_late, relative_phase) = state.amplitudes();
        TimeBinQubit {
            amp_early,
            amp_late,
            relative_phase,
            pulse_fwhm_ns: self.pulse_fwhm_ns,
            bin_separation_ns: self.bin_separation_ns,
            mean_photon_number: self.mean_photon_number,
        }
    }

    pub fn late_center_ns(&self) -> T {
        self.early_center_ns + self.bin_separation_ns
    }

    /// Early and late gates of width `gate_ns` centered `offset_ns` after each bin.
    pub fn bin_windows(&self, offset_ns: T, gate_ns: T) -> [(T, T); 2] {
        let h = gate_ns / T::lit(2.0);
        let e = self.early_center_ns + offset_ns;
        let l = self.late_center_ns() + offset_ns;
        [(e - h, e + h), (l - h, l + h)]
    }
}

/// Two Gaussian envelopes at the early and late bin centers with complex
/// weights `(a_e, a_l)`, scaled so the record carries exactly `μ_in` photons.
pub fn encode_qubit<T: Real>(
    state: QubitState<T>,
    g: &TimeBinGeometry<T>,
) -> Result<PulseTrain<T>> {
    let q = g.qubit(state);
    q.validate()?;
    let overlap = q.neighbour_amplitude();
    if overlap > T::lit(0.01) {
        return Err(PhotonicsError::Overlap {
            overlap: overlap.as_f64(),
        });
    }
    let mut p = PulseTrain::zeros(g.t0_ns, g.dt_ns, g.len)?;
    p.add_gaussian(g.early_center_ns, g.pulse_fwhm_ns, q.amp_early);
    p.add_gaussian(g.late_center_ns(), g.pulse_fwhm_ns, q.amp_late);
    let e = p.energy();
    if !(e > T::zero()) {
        return Err(PhotonicsError::InvalidParameter(
            "qubit envelopes fall outside the record".into(),
        ));
    }
    let scale = (g.mean_photon_number / e).sqrt();
    Ok(p.scaled(Complex::new(scale, T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry() -> TimeBinGeometry<f64> {
        TimeBinGeometry {
            pulse_fwhm_ns: 50.0,
            bin_separation_ns: 130.0,
            mean_photon_number: 1.610,
            early_center_ns: 300.0,
            t0_ns: 0.0,
            dt_ns: 1.0,
            len: 1024,
        }
    }

    #[test]
    fn early_state_has_no_late_light() {
        let g = geometry();
        let p = encode_qubit(QubitState::E, &g).unwrap();
        assert!((p.energy() - 1.61).abs() < 1e-12);
        let [_, late] = g.bin_windows(0.0, g.pulse_fwhm_ns);
        assert!(p.energy_between(late.0, late.1) <= 1e-6 * p.energy());
    }

    #[test]
    fn plus_state_splits_evenly() {
        let g = geometry();
        let p = encode_qubit(QubitState::Plus, &g).unwrap();
        let mid = g.early_center_ns + g.bin_separation_ns / 2.0;
        let early = p.energy_between(0.0, mid - 0.5);
        let late = p.energy_between(mid + 0.5, 2000.0);
        let centre = p.energy_between(mid - 0.5, mid + 0.5);
        assert!((early + centre / 2.0 - 0.805).abs() < 1e-12);
        assert!((late + centre / 2.0 - 0.805).abs() < 1e-12);
    }

    #[test]
    fn custom_pi_equals_minus() {
        let g = geometry();
        let a = encode_qubit(
            QubitState::Custom {
                delta_alpha: std::f64::consts::PI,
            },
            &g,
        )
        .unwrap();
        let b = encode_qubit(QubitState::Minus, &g).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn overlap_and_invariants() {
        let g = TimeBinGeometry {
            bin_separation_ns: 60.0,
            ..geometry()
        };
        assert!(matches!(
            encode_qubit(QubitState::Plus, &g),
            Err(PhotonicsError::Overlap { .. })
        ));
        let g = TimeBinGeometry {
            bin_separation_ns: 40.0,
            ..geometry()
        };
        assert!(matches!(
            encode_qubit(QubitState::Plus, &g),
            Err(PhotonicsError::InvalidParameter(_))
        ));
    }
}

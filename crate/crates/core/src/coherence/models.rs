use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Which quantity of the two-pulse echo the trace records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchoConvention {
    /// Echo intensity, `exp(-4 t₁₂ / T₂)`.
    #[default]
    Intensity,
    /// Echo field amplitude, `exp(-2 t₁₂ / T₂)`.
    Amplitude,
}

impl EchoConvention {
    fn rate_factor<T: Real>(self) -> T {
        match self {
            EchoConvention::Intensity => T::lit(4.0),
            EchoConvention::Amplitude => T::lit(2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DecayModel {
    /// `A e^{-t/T₁} + c`; parameters `[amplitude, t1, offset]`.
    SingleExp,
    /// `A e^{-k t₁₂/T₂}`; parameters `[amplitude, t2]`.
    TwoPulseEcho {
        #[serde(default)]
        convention: EchoConvention,
    },
    /// `Σ aᵢ e^{-t/τᵢ} + c`; parameters `[a1, a2, a3, tau1, tau2, tau3, offset]`.
    TripleExp,
}

impl DecayModel {
    pub fn num_params(self) -> usize {
        match self {
            DecayModel::SingleExp => 3,
            DecayModel::TwoPulseEcho { .. } => 2,
            DecayModel::TripleExp => 7,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            DecayModel::SingleExp => &["amplitude", "t1", "offset"],
            DecayModel::TwoPulseEcho { .. } => &["amplitude", "t2"],
            DecayModel::TripleExp => &["a1", "a2", "a3", "tau1", "tau2", "tau3", "offset"],
        }
    }

    /// Indices of parameters carrying time units.
    pub fn time_constants(self) -> &'static [usize] {
        match self {
            DecayModel::SingleExp => &[1],
            DecayModel::TwoPulseEcho { .. } => &[1],
            DecayModel::TripleExp => &[3, 4, 5],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DecayModel::SingleExp => "single_exp",
            DecayModel::TwoPulseEcho { .. } => "two_pulse_echo",
            DecayModel::TripleExp => "triple_exp",
        }
    }

    pub fn eval<T: Real>(self, p: &[T], t: T) -> T {
        match self {
            DecayModel::SingleExp => model_fluorescence(t, p[0], p[1], p[2]),
            DecayModel::TwoPulseEcho { convention } => {
                model_two_pulse_echo_with(convention, t, p[0], p[1])
            }
            DecayModel::TripleExp => {
                model_hole_decay(t, [p[0], p[1], p[2]], [p[3], p[4], p[5]], p[6])
            }
        }
    }

    /// `∂model/∂p` at `t`, written into `out`.
    pub fn gradient<T: Real>(self, p: &[T], t: T, out: &mut [T]) {
        match self {
            DecayModel::SingleExp => {
                let e = (-t / p[1]).exp();
                out[0] = e;
                out[1] = p[0] * e * t / (p[1] * p[1]);
                out[2] = T::one();
            }
            DecayModel::TwoPulseEcho { convention } => {
                let k = convention.rate_factor::<T>();
                let e = (-k * t / p[1]).exp();
                out[0] = e;
                out[1] = p[0] * e * k * t / (p[1] * p[1]);
            }
            DecayModel::TripleExp => {
                for i in 0..3 {
                    let tau = p[3 + i];
                    let e = (-t / tau).exp();
                    out[i] = e;
                    out[3 + i] = p[i] * e * t / (tau * tau);
                }
                out[6] = T::one();
            }
        }
    }
}

pub fn model_fluorescence<T: Real>(t: T, amplitude: T, t1: T, offset: T) -> T {
    amplitude * (-t / t1).exp() + offset
}

/// Echo intensity after pulse separation `t12`; the echo itself occurs at `2 t12`.
pub fn model_two_pulse_echo<T: Real>(t12: T, amplitude: T, t2: T) -> T {
    model_two_pulse_echo_with(EchoConvention::Intensity, t12, amplitude, t2)
}

pub fn model_two_pulse_echo_with<T: Real>(
    convention: EchoConvention,
    t12: T,
    amplitude: T,
    t2: T,
) -> T {
    amplitude * (-convention.rate_factor::<T>() * t12 / t2).exp()
}

pub fn model_hole_decay<T: Real>(t: T, a: [T; 3], tau: [T; 3], offset: T) -> T {
    a.iter()
        .zip(&tau)
        .map(|(&ai, &ti)| ai * (-t / ti).exp())
        .sum::<T>()
        + offset
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitional_points() {
        let e1 = (-1.0f64).exp();
        assert!((model_fluorescence(2.78, 1.0, 2.78, 0.0) - e1).abs() < 1e-15);
        assert_eq!(model_fluorescence(0.0, 2.0, 2.78, 0.5), 2.5);
        assert!((model_two_pulse_echo(17.48 / 4.0, 1.0, 17.48) - e1).abs() < 1e-15);
        assert!(
            (model_two_pulse_echo_with(EchoConvention::Amplitude, 17.48 / 2.0, 1.0, 17.48) - e1)
                .abs()
                < 1e-15
        );
        assert_eq!(model_two_pulse_echo(0.0, 3.0, 17.48), 3.0);
        assert_eq!(
            model_hole_decay(0.0, [1.0, 0.0, 0.0], [1.95, 5.0, 50.0], 0.0),
            1.0
        );
        assert!(
            (model_hole_decay(1e6f64, [1.0, 1.0, 1.0], [1.95, 5.0, 50.0], 0.2) - 0.2).abs() < 1e-15
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cases: [(DecayModel, Vec<f64>); 3] = [
            (DecayModel::SingleExp, vec![1.3, 2.78, 0.1]),
            (
                DecayModel::TwoPulseEcho {
                    convention: EchoConvention::Intensity,
                },
                vec![0.9, 17.48],
            ),
            (
                DecayModel::TripleExp,
                vec![0.5, 0.3, 0.2, 0.5, 5.0, 50.0, 0.05],
            ),
        ];
        for (m, p) in cases {
            let mut g = vec![0.0; p.len()];
            for t in [0.0, 0.7, 3.0, 20.0] {
                m.gradient(&p, t, &mut g);
                for j in 0..p.len() {
                    let h = 1e-6 * p[j].abs().max(1e-3);
                    let mut up = p.clone();
                    let mut dn = p.clone();
                    up[j] += h;
                    dn[j] -= h;
                    let fd = (m.eval(&up, t) - m.eval(&dn, t)) / (2.0 * h);
                    assert!(
                        (fd - g[j]).abs() < 1e-6 * (1.0 + fd.abs()),
                        "{m:?} p{j} t={t}"
                    );
                }
            }
        }
    }
}

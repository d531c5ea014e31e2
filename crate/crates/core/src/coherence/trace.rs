use serde::{Deserialize, Serialize};

use super::{CoherenceError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    S,
    Ms,
    Us,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::S => 1.0,
            TimeUnit::Ms => 1e-3,
            TimeUnit::Us => 1e-6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            TimeUnit::S => "s",
            TimeUnit::Ms => "ms",
            TimeUnit::Us => "us",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "s" => Some(TimeUnit::S),
            "ms" => Some(TimeUnit::Ms),
            "us" | "μs" | "µs" => Some(TimeUnit::Us),
            _ => None,
        }
    }
}

/// Sampled decay curve with declared time unit and optional per-point σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace<T> {
    unit: TimeUnit,
    times: Vec<T>,
    values: Vec<T>,
    sigma: Option<Vec<T>>,
}

impl<T: Real> DecayTrace<T> {
    pub fn new(
        unit: TimeUnit,
        times: Vec<T>,
        values: Vec<T>,
        sigma: Option<Vec<T>>,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(CoherenceError::InvalidTrace(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(CoherenceError::InvalidTrace("non-finite sample".into()));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(CoherenceError::InvalidTrace(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(s) = &sigma {
            if s.len() != values.len() {
                return Err(CoherenceError::InvalidTrace(
                    "sigma length differs from values".into(),
                ));
            }
            if s.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
                return Err(CoherenceError::InvalidTrace(
                    "sigma must be positive and finite".into(),
                ));
            }
        }
        Ok(Self {
            unit,
            times,
            values,
            sigma,
        })
    }

    pub fn unit(&self) -> TimeUnit {
        self.unit
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sigma(&self) -> Option<&[T]> {
        self.sigma.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Values (and σ) multiplied by `c`.
    pub fn scaled_values(&self, c: T) -> Self {
        Self {
            unit: self.unit,
            times: self.times.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            sigma: self
                .sigma
                .as_ref()
                .map(|s| s.iter().map(|&v| v * c.abs()).collect()),
        }
    }

    /// Time axis multiplied by `k > 0`, keeping the declared unit.
    pub fn scaled_times(&self, k: T) -> Self {
        Self {
            unit: self.unit,
            times: self.times.iter().map(|&t| t * k).collect(),
            values: self.values.clone(),
            sigma: self.sigma.clone(),
        }
    }

    /// Same trace expressed in another unit.
    pub fn in_unit(&self, unit: TimeUnit) -> Self {
        let k = T::lit(self.unit.seconds() / unit.seconds());
        Self {
            unit,
            ..self.scaled_times(k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = DecayTrace::new(TimeUnit::Ms, vec![0.0, 1.0], vec![1.0, 0.5], None);
        assert!(ok.is_ok());
        assert!(DecayTrace::new(TimeUnit::Ms, vec![1.0, 1.0], vec![1.0, 0.5], None).is_err());
        assert!(DecayTrace::new(TimeUnit::Ms, vec![0.0, 1.0], vec![1.0], None).is_err());
        assert!(DecayTrace::new(
            TimeUnit::Ms,
            vec![0.0, 1.0],
            vec![1.0, 0.5],
            Some(vec![0.1, 0.0])
        )
        .is_err());
    }

    #[test]
    fn unit_conversion() {
        let t = DecayTrace::new(TimeUnit::Ms, vec![0.0, 2.78], vec![1.0, 0.3], None).unwrap();
        let us = t.in_unit(TimeUnit::Us);
        assert!((us.times()[1] - 2780.0f64).abs() < 1e-9);
        assert_eq!(TimeUnit::parse("μs"), Some(TimeUnit::Us));
    }
}

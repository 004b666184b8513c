use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Cooling {
    /// `T(t) = T0 / ln(2 + t)`
    Logarithmic,
    /// `T(t+1) = α T(t)`, `T(1) = T0`
    Geometric { alpha: f64 },
}

/// Temperature sequence for `steps` annealing steps, indexed from 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub steps: u64,
    pub t0: f64,
    pub cooling: Cooling,
}

impl AnnealSchedule {
    pub fn logarithmic(steps: u64, t0: f64) -> Result<Self> {
        Self::validated(AnnealSchedule {
            steps,
            t0,
            cooling: Cooling::Logarithmic,
        })
    }

    pub fn geometric(steps: u64, t0: f64, alpha: f64) -> Result<Self> {
        Self::validated(AnnealSchedule {
            steps,
            t0,
            cooling: Cooling::Geometric { alpha },
        })
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!(
                "initial temperature must be positive, got {}",
                self.t0
            )));
        }
        if let Cooling::Geometric { alpha } = self.cooling {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config(format!(
                    "geometric cooling needs 0 < alpha < 1, got {alpha}"
                )));
            }
        }
        Ok(self)
    }

    /// Temperature at step `t` (1-based).
    pub fn temperature(&self, t: u64) -> f64 {
        match self.cooling {
            Cooling::Logarithmic => self.t0 / (2.0 + t as f64).ln(),
            Cooling::Geometric { alpha } => self.t0 * alpha.powf(t.saturating_sub(1) as f64),
        }
    }

    /// Temperatures for steps `1..=steps`.
    pub fn temperatures(&self) -> Temperatures {
        Temperatures {
            schedule: *self,
            t: 0,
            current: self.t0,
        }
    }
}

/// Iterator over a schedule's temperatures.
pub struct Temperatures {
    schedule: AnnealSchedule,
    t: u64,
    current: f64,
}

impl Iterator for Temperatures {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.t >= self.schedule.steps {
            return None;
        }
        self.t += 1;
        Some(match self.schedule.cooling {
            Cooling::Logarithmic => self.schedule.temperature(self.t),
            Cooling::Geometric { alpha } => {
                let out = self.current;
                self.current *= alpha;
                // never reach zero; Metropolis needs T > 0
                self.current = self.current.max(f64::MIN_POSITIVE);
                out
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperatures_are_positive_and_non_increasing() {
        for s in [
            AnnealSchedule::logarithmic(500, 3.0).unwrap(),
            AnnealSchedule::geometric(500, 3.0, 0.99).unwrap(),
        ] {
            let temps: Vec<f64> = s.temperatures().collect();
            assert_eq!(temps.len(), 500);
            assert!(temps.iter().all(|&t| t > 0.0));
            assert!(temps.windows(2).all(|w| w[1] <= w[0]));
            assert!((temps[9] - s.temperature(10)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(AnnealSchedule::geometric(10, 1.0, 1.0).is_err());
        assert!(AnnealSchedule::geometric(10, 1.0, 0.0).is_err());
        assert!(AnnealSchedule::logarithmic(10, 0.0).is_err());
    }
}

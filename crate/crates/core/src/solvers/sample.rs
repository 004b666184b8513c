use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Assignment, QuadraticModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Assignment,
    pub energy: f64,
    pub feasible: bool,
    /// Broken chains seen when this sample was unembedded.
    pub broken_chains: usize,
}

impl Sample {
    pub fn new(assignment: Assignment, energy: f64) -> Self {
        Sample {
            assignment,
            energy,
            feasible: true,
            broken_chains: 0,
        }
    }

    pub fn evaluate<M: QuadraticModel + ?Sized>(model: &M, assignment: Assignment) -> Result<Self> {
        let energy = model.energy_of(&assignment)?;
        Ok(Self::new(assignment, energy))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    #[default]
    Completed,
    TargetReached,
    Timeout,
    AttemptsExhausted,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    /// Moves proposed (annealers) or states visited (enumeration).
    pub steps: u64,
    /// Sub-solver invocations.
    pub calls: u64,
    pub seed: u64,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
    pub stop: StopReason,
    /// Best-so-far energy after each improvement.
    pub trace: Vec<f64>,
    /// Number of tied global optima (exhaustive solvers only).
    pub optima: u64,
}

/// Solver output: samples plus the index of the lowest-energy one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
    best: Option<usize>,
    pub stats: SolverStats,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>, stats: SolverStats) -> Self {
        let mut set = SampleSet {
            samples,
            best: None,
            stats,
        };
        set.reindex();
        set
    }

    fn reindex(&mut self) {
        self.best = self
            .samples
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
                Some((_, e)) if e <= s.energy => acc,
                _ => Some((i, s.energy)),
            })
            .map(|(i, _)| i);
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn best_index(&self) -> Option<usize> {
        self.best
    }

    pub fn try_best(&self) -> Option<&Sample> {
        self.best.map(|i| &self.samples[i])
    }

    /// Lowest-energy sample (first one on ties).
    ///
    /// # Panics
    /// If the set is empty.
    pub fn best(&self) -> &Sample {
        self.try_best().expect("sample set is empty")
    }

    /// Marks each sample with the result of `is_feasible`.
    pub fn mark_feasibility<F: FnMut(&Assignment) -> bool>(&mut self, mut is_feasible: F) {
        for s in &mut self.samples {
            s.feasible = is_feasible(&s.assignment);
        }
    }

    /// Appends another run's samples and accumulates its counters.
    pub fn merge(&mut self, other: SampleSet) {
        self.samples.extend(other.samples);
        self.stats.steps += other.stats.steps;
        self.stats.calls += other.stats.calls;
        self.stats.elapsed += other.stats.elapsed;
        self.reindex();
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(secs.max(0.0)))
    }
}

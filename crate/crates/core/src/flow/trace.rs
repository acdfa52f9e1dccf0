use std::fmt;
use std::str::FromStr;

use crate::error::InpaintError;

/// Why an iteration loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    StepUnderflow,
    /// The iteration produced non-finite values; the reported image is the
    /// initial fill.
    Diverged,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        self == StopReason::Converged
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max-iters",
            StopReason::StepUnderflow => "step-underflow",
            StopReason::Diverged => "diverged",
        })
    }
}

impl FromStr for StopReason {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "converged" => Ok(StopReason::Converged),
            "max-iters" => Ok(StopReason::MaxIters),
            "step-underflow" => Ok(StopReason::StepUnderflow),
            "diverged" => Ok(StopReason::Diverged),
            other => Err(InpaintError::MalformedTrace(format!("unknown stop reason {other:?}"))),
        }
    }
}

/// State of iterate `iter`. `error` and `step` describe the update that
/// produced it and are NaN for the starting image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub energy: f64,
    pub residual2: f64,
    pub error: f64,
    pub step: f64,
    pub kappa: f64,
    pub wall_ms: f64,
}

impl TraceRecord {
    /// Field-wise equality that treats NaN as equal to NaN.
    pub fn same_bits(&self, other: &TraceRecord) -> bool {
        self.iter == other.iter
            && [
                (self.energy, other.energy),
                (self.residual2, other.residual2),
                (self.error, other.error),
                (self.step, other.step),
                (self.kappa, other.kappa),
                (self.wall_ms, other.wall_ms),
            ]
            .iter()
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.iter < record.iter));
        self.records.push(record);
    }

    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn initial_residual2(&self) -> Option<f64> {
        self.records.first().map(|r| r.residual2)
    }

    pub fn final_residual2(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual2)
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.energy)
    }

    /// True when no record has higher energy than its predecessor.
    pub fn energy_non_increasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].energy <= w[0].energy)
    }
}

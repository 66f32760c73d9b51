//! Optimisation strategies over a simulated amplified-state model.

pub mod classical;
pub mod gas;
pub mod maoa;
pub mod session;

use rand::Rng;

pub use classical::classical_run;
pub use gas::{gas_run, GasConfig, DEFAULT_LAMBDA};
pub use maoa::{
    adaptive_search, final_threshold, find_peak, maoa_run, sample_phase, sampling_ratio,
    threshold_for_as, MaoaConfig, PeakScan, ThresholdTrace,
};
pub use session::{Halt, Session, Step, StopRule, Target, DEFAULT_EFFORT_CAP};

use crate::dist::QualityDistribution;
use crate::effort::EffortLedger;

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// Threshold phase followed by the sampling phase.
    Maoa(MaoaConfig),
    /// Sampling phase alone about a fixed threshold.
    MaoaSampling { r: u64, threshold: f64 },
    /// Threshold phase alone; the run ends when it completes.
    MaoaThreshold(MaoaConfig),
    Gas(GasConfig),
    Classical,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Maoa(_) => "maoa",
            Self::MaoaSampling { .. } => "maoa-sampling",
            Self::MaoaThreshold(_) => "maoa-threshold",
            Self::Gas(_) => "gas",
            Self::Classical => "classical",
        }
    }
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Calls spent when a target was first measured.
    pub found_at: Option<u64>,
    pub calls: u64,
    pub best: f64,
    /// `None` when the run ended on its own (threshold phase only).
    pub halt: Option<Halt>,
    pub trace: Option<ThresholdTrace>,
}

/// Runs one algorithm to completion under `stop`.
pub fn run_algorithm<R: Rng + ?Sized>(
    alg: &Algorithm,
    dist: &QualityDistribution,
    stop: &StopRule,
    rng: &mut R,
    log_events: bool,
) -> (RunOutcome, EffortLedger) {
    let mut s = Session::new(dist, stop, rng);
    if log_events {
        s = s.logged();
    }
    let mut trace = None;
    let halt = match alg {
        Algorithm::Maoa(cfg) => {
            let (t, h) = maoa_run(&mut s, cfg);
            trace = t;
            Some(h)
        }
        Algorithm::MaoaSampling { r, threshold } => sample_phase(&mut s, *r, *threshold).err(),
        Algorithm::MaoaThreshold(cfg) => match final_threshold(&mut s, cfg) {
            Ok(t) => {
                trace = Some(t);
                None
            }
            Err(h) => Some(h),
        },
        Algorithm::Gas(cfg) => gas_run(&mut s, cfg).err(),
        Algorithm::Classical => classical_run(&mut s).err(),
    };
    let outcome = RunOutcome {
        found_at: s.found_at(),
        calls: s.calls(),
        best: s.best(),
        halt,
        trace,
    };
    (outcome, s.into_ledger())
}

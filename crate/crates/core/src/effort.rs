//! Quality-function call accounting.

use std::io::Write;

use crate::error::Result;

/// One logged measurement or sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Total calls after this event.
    pub effort: u64,
    /// Best quality known after this event.
    pub best: f64,
    /// Rotation count used; `None` for a classical sample.
    pub rotations: Option<u64>,
    pub marked: bool,
}

/// Running count of quality-function calls with an optional event log.
///
/// An amplified preparation and measurement with `r` rotations costs `2r+1`
/// calls, a classical sample costs 1. The log is off by default because the
/// threshold phase of long runs performs millions of measurements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EffortLedger {
    calls: u64,
    log: Option<Vec<Event>>,
}

pub fn amplified_cost(r: u64) -> u64 {
    2 * r + 1
}

impl EffortLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_log() -> Self {
        Self {
            calls: 0,
            log: Some(Vec::new()),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn charge_amplified(&mut self, r: u64) {
        self.calls += amplified_cost(r);
    }

    pub fn charge_classical(&mut self) {
        self.calls += 1;
    }

    /// Charges `n` amplified measurements at once.
    pub fn charge_amplified_many(&mut self, r: u64, n: u64) {
        self.calls += n * amplified_cost(r);
    }

    pub fn charge_classical_many(&mut self, n: u64) {
        self.calls += n;
    }

    /// Charges a precomputed number of calls, such as a batch of skipped
    /// measurements with mixed rotation counts.
    pub fn charge(&mut self, calls: u64) {
        self.calls += calls;
    }

    /// Appends an event stamped with the current call count.
    pub fn record(&mut self, best: f64, rotations: Option<u64>, marked: bool) {
        if let Some(log) = &mut self.log {
            log.push(Event {
                effort: self.calls,
                best,
                rotations,
                marked,
            });
        }
    }

    pub fn events(&self) -> &[Event] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Sum of per-event costs, for checking that the log accounts for every
    /// call. Only meaningful when every charge was logged.
    pub fn replayed_calls(&self) -> u64 {
        self.events()
            .iter()
            .map(|e| e.rotations.map_or(1, amplified_cost))
            .sum()
    }

    /// Event log as CSV: `effort,best_quality,r_used,marked_flag`, with an
    /// empty `r_used` for classical samples.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "effort,best_quality,r_used,marked_flag")?;
        for e in self.events() {
            let r = e.rotations.map(|r| r.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{:.16e},{},{}",
                e.effort,
                e.best,
                r,
                u8::from(e.marked)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charges_and_replay() {
        let mut l = EffortLedger::with_log();
        l.charge_classical();
        l.record(3.0, None, false);
        l.charge_amplified(64);
        l.record(2.0, Some(64), true);
        assert_eq!(l.calls(), 1 + 129);
        assert_eq!(l.replayed_calls(), l.calls());
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().starts_with("130,2.0000000000000000e0,64,1"));
    }

    #[test]
    fn log_is_optional() {
        let mut l = EffortLedger::new();
        l.charge_amplified_many(3, 10);
        l.record(0.0, Some(3), false);
        assert_eq!(l.calls(), 70);
        assert!(l.events().is_empty());
    }
}

//! Checkers for the three run invariants.

use std::fmt;

use crate::sim::TickEvent;

/// Allowance for floating-point noise in fear comparisons.
pub const FEAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Invariant {
    FearRisesOnApproach,
    BestWhiteSpace,
    TimelyHandover,
}

impl Invariant {
    pub fn name(&self) -> &'static str {
        match self {
            Invariant::FearRisesOnApproach => "Invariant1",
            Invariant::BestWhiteSpace => "Invariant2",
            Invariant::TimelyHandover => "Invariant3",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub tick: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub invariant: Invariant,
    /// Number of individual checks made.
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Successful and failed attempts, for the timing invariant.
    pub successes: usize,
    pub failures: usize,
}

impl InvariantReport {
    fn new(invariant: Invariant) -> Self {
        Self {
            invariant,
            checked: 0,
            violations: Vec::new(),
            successes: 0,
            failures: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, tick: usize, message: String) {
        self.violations.push(Violation { tick, message });
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{} {} checked={} violations={}",
            self.invariant,
            verdict,
            self.checked,
            self.violations.len()
        )?;
        if self.invariant == Invariant::TimelyHandover {
            write!(
                f,
                " successes={} failures={}",
                self.successes, self.failures
            )?;
        }
        for v in &self.violations {
            write!(f, "\n  tick {}: {}", v.tick, v.message)?;
        }
        Ok(())
    }
}

/// Fear must not fall between consecutive ticks that approach the same
/// bad-signal point on the same provider.
pub fn check_invariant1(events: &[TickEvent]) -> InvariantReport {
    let mut r = InvariantReport::new(Invariant::FearRisesOnApproach);
    for w in events.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let (Some(d0), Some(d1)) = (prev.distance_to_bssp_m, cur.distance_to_bssp_m) else {
            continue;
        };
        let approaching = prev.provider == cur.provider && prev.bssp == cur.bssp && d1 < d0;
        if !approaching || prev.handed_over() {
            continue;
        }
        r.checked += 1;
        let (f0, f1) = (prev.fear.value(), cur.fear.value());
        if f1 < f0 - FEAR_TOLERANCE {
            r.fail(
                cur.tick,
                format!("fear fell {f0:.6} -> {f1:.6} while distance shrank {d0:.3} -> {d1:.3} m"),
            );
        }
    }
    r
}

/// Handovers go to the strongest future white space and only when it beats
/// the in-use one; selections that keep the in-use provider must have had
/// nothing better.
pub fn check_invariant2(events: &[TickEvent]) -> InvariantReport {
    let mut r = InvariantReport::new(Invariant::BestWhiteSpace);
    for e in events {
        let Some(pool) = &e.pool else { continue };
        let Some(max) = pool.max_future_dbm() else {
            continue;
        };
        let in_use = pool.get(&e.provider).map(|p| p.future_dbm);
        if let Some(h) = &e.handover {
            r.checked += 1;
            let target = pool.get(&h.to).map(|p| p.future_dbm);
            match (target, in_use) {
                (Some(t), Some(u)) if t == max && t > u => {}
                (Some(t), Some(u)) => r.fail(
                    e.tick,
                    format!(
                        "handover {} -> {} targets {t} dBm, pool max {max}, in-use {u}",
                        h.from, h.to
                    ),
                ),
                _ => r.fail(
                    e.tick,
                    format!("handover {} -> {} outside the pool", h.from, h.to),
                ),
            }
        } else if e.selection.as_ref() == Some(&e.provider) {
            r.checked += 1;
            if let Some(u) = in_use {
                if max > u {
                    r.fail(
                        e.tick,
                        format!(
                            "kept {} at {u} dBm although {max} dBm was available",
                            e.provider
                        ),
                    );
                }
            }
        }
    }
    r
}

/// Each attempt succeeds exactly when the time left exceeds the time required.
pub fn check_invariant3(events: &[TickEvent]) -> InvariantReport {
    let mut r = InvariantReport::new(Invariant::TimelyHandover);
    for e in events {
        let Some(h) = &e.handover else { continue };
        r.checked += 1;
        if h.success {
            r.successes += 1;
        } else {
            r.failures += 1;
        }
        let expected = h.time_left_s > h.required_s;
        if h.success != expected {
            r.fail(
                e.tick,
                format!(
                    "success={} but time_left {} s vs required {} s",
                    h.success, h.time_left_s, h.required_s
                ),
            );
        }
    }
    r
}

pub fn check_all(events: &[TickEvent]) -> Vec<InvariantReport> {
    vec![
        check_invariant1(events),
        check_invariant2(events),
        check_invariant3(events),
    ]
}

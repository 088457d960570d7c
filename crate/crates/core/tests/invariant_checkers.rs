use fearover::crsite::{CsmAction, HandoverAttempt, PoolEntry, WhiteSpacePool};
use fearover::invariants::{check_all, check_invariant1, check_invariant2, check_invariant3};
use fearover::pdfa::{FearBand, MobilitySymbol, PdfaState};
use fearover::route::ProviderId;
use fearover::sim::TickEvent;
use fearover::FearIntensity;

fn ev(tick: usize, distance: Option<f64>, fear: f64) -> TickEvent {
    let s: PdfaState = "1".parse().unwrap();
    TickEvent {
        tick,
        time_s: 0.5 * (tick + 1) as f64,
        position_m: 2.0 * (tick + 1) as f64,
        provider: "A".into(),
        bssp: distance.map(|_| "X".to_string()),
        distance_to_bssp_m: distance,
        bssp_signal_dbm: distance.map(|_| -90.0),
        signal_now_dbm: -60.0,
        signal_future_dbm: -70.0,
        fear: FearIntensity::new(fear),
        band: FearBand::B0,
        state: s,
        symbol: MobilitySymbol::S,
        next_state: s,
        action: CsmAction::KeepCurrent,
        pool: None,
        selection: None,
        handover: None,
        closed: None,
        remapped: false,
        reset: false,
    }
}

fn pool(entries: &[(&str, f64)]) -> WhiteSpacePool {
    WhiteSpacePool::new(
        entries
            .iter()
            .map(|&(p, f)| {
                (
                    ProviderId::new(p),
                    PoolEntry {
                        current_dbm: -60.0,
                        future_dbm: f,
                    },
                )
            })
            .collect(),
    )
}

fn attempt(to: &str, time_left_s: f64, required_s: f64, success: bool) -> HandoverAttempt {
    HandoverAttempt {
        from: "A".into(),
        to: to.into(),
        required_s,
        time_left_s,
        success,
    }
}

#[test]
fn empty_and_quiet_logs_pass_vacuously() {
    for r in check_all(&[]) {
        assert!(r.passed());
        assert_eq!(r.checked, 0);
    }
    let quiet: Vec<_> = (0..5).map(|t| ev(t, None, 0.0)).collect();
    for r in check_all(&quiet) {
        assert!(r.passed());
        assert_eq!(r.checked, 0);
    }
}

#[test]
fn falling_fear_on_approach_is_caught() {
    let log = vec![
        ev(0, Some(30.0), 0.5),
        ev(1, Some(28.0), 0.6),
        ev(2, Some(26.0), 0.45),
    ];
    let r = check_invariant1(&log);
    assert_eq!(r.checked, 2);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].tick, 2);
    assert!(r.to_string().starts_with("Invariant1 FAIL"));
}

#[test]
fn fear_drop_outside_an_approach_is_ignored() {
    let mut other = ev(1, Some(20.0), 0.1);
    other.bssp = Some("Y".into());
    let mut switched = ev(3, Some(18.0), 0.1);
    switched.provider = "B".into();
    let mut after_handover = ev(4, Some(40.0), 0.9);
    after_handover.handover = Some(attempt("B", 10.0, 2.1, true));
    let log = vec![
        ev(0, Some(30.0), 0.7),
        // another target point
        other,
        // receding
        ev(2, Some(25.0), 0.0),
        switched,
        after_handover,
        ev(5, Some(38.0), 0.2),
    ];
    let r = check_invariant1(&log);
    assert!(r.passed(), "{r}");
}

#[test]
fn noise_below_tolerance_is_allowed() {
    let log = vec![ev(0, Some(30.0), 0.5), ev(1, Some(29.0), 0.5 - 1e-13)];
    assert!(check_invariant1(&log).passed());
    let log = vec![ev(0, Some(30.0), 0.5), ev(1, Some(29.0), 0.5 - 1e-9)];
    assert!(!check_invariant1(&log).passed());
}

#[test]
fn handover_to_a_weaker_space_is_caught() {
    let mut e = ev(0, Some(10.0), 0.9);
    e.pool = Some(pool(&[("A", -90.0), ("B", -70.0), ("C", -50.0)]));
    e.selection = Some("C".into());
    e.handover = Some(attempt("B", 5.0, 2.1, true));
    let r = check_invariant2(&[e.clone()]);
    assert_eq!(r.violations.len(), 1);

    e.handover = Some(attempt("C", 5.0, 2.1, true));
    assert!(check_invariant2(&[e]).passed());
}

#[test]
fn handover_that_does_not_improve_is_caught() {
    let mut e = ev(0, Some(10.0), 0.9);
    e.pool = Some(pool(&[("A", -50.0), ("B", -50.0)]));
    e.handover = Some(attempt("B", 5.0, 2.1, true));
    assert!(!check_invariant2(&[e]).passed());
}

#[test]
fn handover_outside_the_pool_is_caught() {
    let mut e = ev(0, Some(10.0), 0.9);
    e.pool = Some(pool(&[("A", -90.0), ("B", -70.0)]));
    e.handover = Some(attempt("Z", 5.0, 2.1, true));
    let r = check_invariant2(&[e]);
    assert!(r.violations[0].message.contains("outside"));
}

#[test]
fn staying_while_a_better_space_exists_is_caught() {
    let mut e = ev(0, Some(10.0), 0.7);
    e.pool = Some(pool(&[("A", -80.0), ("B", -60.0)]));
    e.selection = Some("A".into());
    assert!(!check_invariant2(&[e.clone()]).passed());

    e.pool = Some(pool(&[("A", -60.0), ("B", -60.0)]));
    let r = check_invariant2(&[e]);
    assert!(r.passed());
    assert_eq!(r.checked, 1);
}

#[test]
fn wrong_success_verdict_is_caught_both_ways() {
    let mut late = ev(0, Some(3.0), 0.9);
    late.handover = Some(attempt("B", 0.75, 2.1, true));
    let mut early = ev(1, Some(30.0), 0.9);
    early.handover = Some(attempt("B", 7.5, 2.1, false));
    let r = check_invariant3(&[late, early]);
    assert_eq!(r.violations.len(), 2);
    assert_eq!((r.successes, r.failures), (1, 1));
}

#[test]
fn equal_times_count_as_failure() {
    let mut e = ev(0, Some(3.0), 0.9);
    e.handover = Some(attempt("B", 2.1, 2.1, false));
    assert!(check_invariant3(&[e.clone()]).passed());
    e.handover = Some(attempt("B", 2.1, 2.1, true));
    assert!(!check_invariant3(&[e]).passed());
}

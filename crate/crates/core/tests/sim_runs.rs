use dcmg_core::grid::ControlMode;
use dcmg_core::sim::{ber_tool, presets, run, smooth_trace, validate, AlarmReason, Event, SimError};
use dcmg_core::wireless::Point;
use dcmg_core::{DerId, Micros};

fn secs(s: f64) -> Micros {
    Micros::from_secs(s).unwrap()
}

#[test]
fn shipped_presets_validate() {
    for name in presets::NAMES {
        let v = validate(&presets::by_name(name).unwrap());
        assert!(v.is_empty(), "{name}: {v:?}");
    }
}

#[test]
fn access_delay_must_fit_the_period() {
    let mut cfg = presets::baseline();
    cfg.timing.tau_d = cfg.timing.t_sc;
    let v = validate(&cfg);
    assert!(v.iter().any(|x| x.0.contains("tau_d")), "{v:?}");
    assert!(matches!(run(&cfg), Err(SimError::Config(_))));
}

#[test]
fn disconnected_geometry_is_rejected() {
    let mut cfg = presets::baseline();
    cfg.geometry.positions[0] = Point { x: -5000.0, y: 0.0 };
    assert!(validate(&cfg).iter().any(|x| x.0.contains("not connected")));
}

#[test]
fn bad_ids_and_limits_are_listed() {
    let mut cfg = presets::baseline();
    cfg.initial_vset.push(DerId(12));
    cfg.v_min = 40.0;
    cfg.powertalk.d_span = 4;
    let v = validate(&cfg);
    assert!(v.iter().any(|x| x.0.contains("unknown unit 12")));
    assert!(v.iter().any(|x| x.0.contains("v_min")));
    assert!(v.iter().any(|x| x.0.contains("d_span")));
}

#[test]
fn same_seed_same_trace() {
    let cfg = presets::jam_with_defense();
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(run(&cfg).unwrap().trace, run(&other).unwrap().trace);
}

#[test]
fn trace_has_one_row_per_period_plus_events() {
    for name in presets::NAMES {
        let out = run(&presets::by_name(name).unwrap()).unwrap();
        let periods = out.trace.iter().filter(|r| !r.is_event()).count();
        assert_eq!(periods, 300, "{name}");
        assert!(out.trace.windows(2).all(|w| w[0].t <= w[1].t), "{name}: time goes backwards");
        assert!(out.trace.iter().all(|r| r.safety.is_clear()), "{name}: safety flag raised");
    }
}

#[test]
fn strategy_events_in_order() {
    let out = run(&presets::jam_with_defense()).unwrap();
    let first = |pred: &dyn Fn(&Event) -> bool| out.trace.iter().position(|r| r.event.as_ref().is_some_and(pred));
    let jam = first(&|e| matches!(e, Event::JamDetected(_))).unwrap();
    let start = out.trace.iter().rposition(|r| r.event == Some(Event::PtchStart)).unwrap();
    let switch = first(&|e| matches!(e, Event::ModeSwitch { .. })).unwrap();
    assert!(jam < start && start < switch);
    assert_eq!(out.trace[start].t, secs(5.0));
    assert_eq!(out.trace[switch].t, secs(5.18));
    assert!(!out.trace.iter().any(|r| matches!(r.event, Some(Event::Alarm(_)))));
}

#[test]
fn first_ptch_keeps_the_original_set() {
    let out = run(&presets::jam_with_defense()).unwrap();
    assert_eq!(out.ptchs.len(), 2);
    let early = &out.ptchs[0];
    assert_eq!(early.start, secs(2.5));
    assert_eq!(early.old_vset, early.new_vset);
    for q in &early.decoded {
        assert_eq!(q.rows(), early.transmitted.rows());
    }
}

#[test]
fn baseline_never_runs_power_talk() {
    let out = run(&presets::baseline()).unwrap();
    assert!(out.ptchs.is_empty());
    let last = out.trace.last().unwrap();
    let expect = [ControlMode::Csc, ControlMode::Vsc, ControlMode::Csc, ControlMode::Csc, ControlMode::Vsc];
    assert_eq!(&last.modes[..5], &expect);
}

#[test]
fn overrun_raises_an_alarm() {
    let mut cfg = presets::jam_with_defense();
    cfg.powertalk.s_rep = 3;
    cfg.powertalk.d_span = 22;
    // 216 slots need 0.54 s; the window is 0.55 s, so a load step right at
    // the start costs enough blanks to overrun.
    cfg.load.steps[0].t = 5.0125;
    let out = run(&cfg).unwrap();
    let late = out.ptchs.last().unwrap();
    assert_eq!(late.alarms, vec![AlarmReason::PtchOverrun]);
    assert_eq!(late.end, secs(5.55));
    assert_eq!(late.new_vset, late.old_vset);
    assert!(out.trace.iter().any(|r| r.t == secs(5.55) && r.event == Some(Event::Alarm(AlarmReason::PtchOverrun))));
}

#[test]
fn ber_examples() {
    assert_eq!(ber_tool(0.2, 0.0, 20, 10_000, 1).empirical, 0.0);
    let coin = ber_tool(0.2, 1.0e4, 1, 10_000, 1);
    assert!((coin.empirical - 0.5).abs() < 0.03);
    let r = ber_tool(0.2, 1.0e-2, 20, 10_000, 9);
    assert!(r.agree, "{r:?}");
    // Signalling at 10 mV against 10 mV noise gives a measurable error rate.
    let r = ber_tool(0.01, 1.0e-2, 20, 20_000, 5);
    assert!(r.analytic > 1e-3 && r.agree, "{r:?}");
}

#[test]
fn smoothing_lags_a_step() {
    let out = run(&presets::baseline()).unwrap();
    let smooth = smooth_trace(&out.trace, 0.01);
    let k = out.trace.iter().position(|r| r.t > secs(4.5) && !r.is_event()).unwrap();
    let dip = out.trace[k].v_bus;
    assert!(smooth[k].v_bus > dip);
    assert_eq!(smooth.len(), out.trace.len());
    assert_eq!(smooth_trace(&out.trace, 0.0), out.trace);
}

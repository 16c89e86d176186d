use dcmg_core::rng;
use dcmg_core::wireless::{update_jam_detector, JamDetector, JammerSpec, LinkOutcome, NodeGeometry, Point, WirelessNetwork};
use proptest::prelude::*;

fn line(n: usize, spacing: f64) -> NodeGeometry {
    NodeGeometry {
        positions: (0..n).map(|i| Point { x: i as f64 * spacing, y: 0.0 }).collect(),
        rho: 175.0,
        pathloss_exponent: 3.0,
        ref_loss_db: 40.05,
        tx_power_dbm: 16.0,
        sensitivity_dbm: -91.34,
    }
}

proptest! {
    #[test]
    fn delivery_respects_range_and_jamming(
        n in 2usize..9,
        spacing in 50.0..170.0f64,
        p_drop in 0.0..1.0f64,
        jx in -100.0..1500.0f64,
        jr in 0.0..300.0f64,
        seed in any::<u64>(),
    ) {
        let net = WirelessNetwork::new(line(n, spacing), p_drop, 0.005).unwrap();
        let jam = JammerSpec { position: Point { x: jx, y: 0.0 }, range: jr, active_from: 0.0, active_to: 1.0 };
        let jammed = net.jammed_nodes(&[&jam]);
        let mut r = rng::stream(seed, 1);
        let rep = net.step_period(0, &vec![true; n], &[&jam], &mut r);
        for tx in 0..n {
            prop_assert!(rep.access_delay[tx].is_some_and(|d| (0.0..0.005).contains(&d)));
            for rx in 0..n {
                if tx == rx {
                    prop_assert_eq!(rep.outcome(tx, rx), None);
                    continue;
                }
                if rep.delivered(tx, rx) {
                    prop_assert!(net.adjacency[tx][rx]);
                    prop_assert!(!jammed[tx] && !jammed[rx]);
                }
                if !net.adjacency[tx][rx] {
                    prop_assert_eq!(rep.outcome(tx, rx), Some(LinkOutcome::OutOfRange));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_report(seed in any::<u64>(), p_drop in 0.0..1.0f64) {
        let net = WirelessNetwork::new(line(6, 120.0), p_drop, 0.005).unwrap();
        let a = net.step_period(7, &[true; 6], &[], &mut rng::stream(seed, 1));
        let b = net.step_period(7, &[true; 6], &[], &mut rng::stream(seed, 1));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn links_are_symmetric(n in 2usize..9, spacing in 50.0..170.0f64) {
        let net = WirelessNetwork::new(line(n, spacing), 0.0, 0.005).unwrap();
        for a in 0..n {
            prop_assert!(!net.adjacency[a][a]);
            for b in 0..n {
                prop_assert_eq!(net.adjacency[a][b], net.adjacency[b][a]);
            }
        }
    }
}

/// A jammed node is flagged after exactly `n_det` silent periods and clears
/// once it hears anyone again.
#[test]
fn detection_latency_is_n_det_periods() {
    let net = WirelessNetwork::new(line(3, 100.0), 0.0, 0.005).unwrap();
    let jam = JammerSpec { position: Point { x: 0.0, y: 0.0 }, range: 10.0, active_from: 0.0, active_to: 1.0 };
    let mut det = JamDetector::new(8, 3);
    let mut r = rng::stream(3, 1);
    for k in 0..8 {
        assert!(!det.is_flagged(0), "flagged early at period {k}");
        let rep = net.step_period(k, &[true; 3], &[&jam], &mut r);
        for u in 0..3 {
            det = update_jam_detector(&det, u, &rep, &net.adjacency);
        }
    }
    assert!(det.is_flagged(0));
    assert!(!det.is_flagged(1) && !det.is_flagged(2));
    let rep = net.step_period(8, &[true; 3], &[], &mut r);
    det = update_jam_detector(&det, 0, &rep, &net.adjacency);
    assert!(!det.is_flagged(0));
}

use std::collections::HashSet;

use proptest::prelude::*;
use uasflow_core::draws::{ChaChaDraws, Mirrored};
use uasflow_core::sim::EventTag;
use uasflow_core::{run, DesignParams, Motion, Scenario, Simulation};

fn scenario(lambda: f64, m: u32, eta: f64, seed: u64, uas: u64) -> Scenario {
    let mut s = Scenario::nominal(DesignParams::new(3, m, eta, 3, 4), lambda, seed);
    s.stop.uas = Some(uas);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_metrics(lambda in 0.05f64..1.0, m in 2u32..7, eta in 0.0f64..=1.0, seed in any::<u64>()) {
        let s = scenario(lambda, m, eta, seed, 150);
        let a = serde_json::to_string(&run(&s).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&s).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn every_deployed_uas_is_delivered(lambda in 0.05f64..1.0, m in 2u32..7, eta in 0.0f64..=1.0, seed in any::<u64>()) {
        let r = run(&scenario(lambda, m, eta, seed, 150)).unwrap();
        prop_assert_eq!(r.deployed, 150);
        prop_assert_eq!(r.delivered, r.deployed);
        prop_assert_eq!(r.invariants.violations(), 0);
    }

    #[test]
    fn queued_uas_hold_distinct_positions(lambda in 0.3f64..1.0, m in 2u32..5, eta in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut sc = scenario(lambda, m, eta, seed, 120);
        sc.metrics.log_events = true;
        let l = sc.params().l;
        let mut sim = Simulation::new(sc).unwrap();
        let mut shared = Vec::new();
        while sim.step().unwrap() {
            let mut seen = HashSet::new();
            for u in sim.managed() {
                if let Motion::Lateral { zone, .. } = u.motion {
                    let j = sim.grid().relative_position(zone, u.cell).unwrap();
                    if !seen.insert((zone, j)) {
                        // Only a service exit meeting a lateral arrival at the node.
                        prop_assert_eq!(j, l + 1, "two queued UAS at j={} of {}", j, zone);
                        shared.push((sim.slot(), zone));
                    }
                }
            }
        }
        let rule6: HashSet<_> = sim
            .events()
            .iter()
            .filter(|e| e.tag == EventTag::Rule6)
            .map(|e| (e.slot, e.zone.unwrap()))
            .collect();
        for key in shared {
            prop_assert!(rule6.contains(&key), "unresolved shared node {:?}", key);
        }
    }

    #[test]
    fn mirrored_draws_mirror_the_spread(lambda in 0.3f64..1.0, m in 2u32..5, seed in any::<u64>()) {
        let s = scenario(lambda, m, 0.5, seed, 150);
        let plain = run(&s).unwrap();
        let mut sim = Simulation::with_draws(s, Box::new(Mirrored(ChaChaDraws::new(seed)))).unwrap();
        while sim.step().unwrap() {}
        let flipped = sim.metrics();
        for (a, b) in plain.spread.iter().zip(&flipped.spread) {
            prop_assert_eq!((a.x_min, a.x_max), (-b.x_max, -b.x_min));
        }
        for z in &plain.zones {
            let w = flipped.zone(-z.stream, z.level).unwrap();
            prop_assert_eq!(z.mean_in_service, w.mean_in_service);
            prop_assert_eq!(z.busy_fraction, w.busy_fraction);
        }
    }
}

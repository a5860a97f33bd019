//! Acceptance criteria AC1-AC11, one PASS/FAIL line each.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use uasflow_core::draws::derive_seed;
use uasflow_core::scenario::{ExogenousConfig, ExogenousMode};
use uasflow_core::sim::{EventTag, Metrics};
use uasflow_core::{run, DesignParams, Scenario, Side, Simulation};
use uasflow_queueing::modulation::theta00;
use uasflow_queueing::stream0::stream0_queue_recursion;
use uasflow_queueing::streamx::streamx_gamma_recursion;
use uasflow_queueing::{expected_spread, AnalyticScenario, Pgf, SolverOptions, SpreadResult};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params(m: u32, eta: f64) -> DesignParams {
    DesignParams::new(5, m, eta, 5, 10)
}

fn analyze(m: u32, eta: f64, lambda: f64) -> SpreadResult {
    expected_spread(&AnalyticScenario::nominal(params(m, eta), lambda), &SolverOptions::default())
}

fn simulate(m: u32, eta: f64, lambda: f64, seed: u64) -> Metrics {
    run(&Scenario::nominal(params(m, eta), lambda, seed)).expect("simulation runs")
}

fn spread1(s: Option<uasflow_core::sim::LevelSpread>) -> (i32, i32) {
    s.map_or((0, 0), |s| (s.x_min, s.x_max))
}

fn ac1() -> Outcome {
    let t = Instant::now();
    let theta = analyze(2, 0.5, 1.0).zone(0, 1).unwrap().out.theta0_star;
    let busy = simulate(2, 0.5, 1.0, SEED).zone(0, 1).unwrap().busy_fraction;
    let secs = t.elapsed().as_secs_f64();
    let target = 9.0 / 11.0;
    let pass = (theta - target).abs() <= 1e-2 && (busy - target).abs() <= 0.03 && secs < 10.0;
    outcome(pass, format!("analytic {theta:.4}, sim busy {busy:.4}, target {target:.4}, {secs:.2} s"))
}

fn ac2() -> Outcome {
    let t = Instant::now();
    let rows: Vec<(f64, f64, f64)> = (1..=10)
        .into_par_iter()
        .map(|i| {
            let lambda = i as f64 / 10.0;
            let theta = analyze(2, 0.5, lambda).zone(0, 1).unwrap().out.theta0_star;
            let busy = simulate(2, 0.5, lambda, derive_seed(SEED, i)).zone(0, 1).unwrap().busy_fraction;
            (lambda, theta, busy)
        })
        .collect();
    let (worst, at) = rows
        .iter()
        .map(|&(l, a, s)| ((a - s).abs(), l))
        .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let secs = t.elapsed().as_secs_f64();
    outcome(worst <= 0.05 && secs < 300.0, format!("max |sim - analytic| = {worst:.4} at lambda {at:.1}, {secs:.1} s"))
}

fn ac3() -> Outcome {
    let cases = [(0.5, (-2, 2)), (0.3, (-3, 1)), (0.1, (-4, 0))];
    let mut pass = true;
    let mut parts = Vec::new();
    for (eta, want) in cases {
        let a = spread1(analyze(2, eta, 0.8).level_spread(1));
        let s = spread1(simulate(2, eta, 0.8, SEED).level_spread(1));
        let sim_ok = (s.0 - want.0).abs() <= 1 && (s.1 - want.1).abs() <= 1;
        pass &= a == want && sim_ok;
        parts.push(format!("eta {eta}: want {want:?}, analytic {a:?}, sim {s:?}"));
    }
    outcome(pass, parts.join("; "))
}

fn ac4() -> Outcome {
    let mut worst_closed = 0.0f64;
    for l in 1..=10u32 {
        let s = 2 * l + 1;
        for m in 2..s {
            for p in [0.2f64, 0.5, 0.8] {
                let (s, m) = (s as i32, m as i32);
                let num = binom(s - 2, m) * p.powi(m) * (1.0 - p).powi(s - 2 - m) * (1.0 - p);
                let den = binom(s - 1, m) * p.powi(m) * (1.0 - p).powi(s - 1 - m);
                worst_closed = worst_closed.max((theta00(s as u32, m as u32) - num / den).abs());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_mc = 0.0f64;
    for (s, m) in [(11u32, 2u32), (11, 5), (11, 9), (7, 3), (21, 6)] {
        let p = m as f64 / (s - 1) as f64;
        let (mut kept, mut empty) = (0u64, 0u64);
        while kept < 50_000 {
            let w: Vec<bool> = (0..s - 1).map(|_| rng.gen::<f64>() < p).collect();
            if w.iter().filter(|&&b| b).count() == m as usize {
                kept += 1;
                empty += !w[0] as u64;
            }
        }
        worst_mc = worst_mc.max((empty as f64 / kept as f64 - theta00(s, m)).abs());
    }
    outcome(
        worst_closed < 1e-12 && worst_mc <= 0.02,
        format!("closed form max error {worst_closed:.1e}, conditioned-window MC max error {worst_mc:.4}"),
    )
}

fn binom(n: i32, k: i32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn grid_runs() -> Vec<(f64, u32, Metrics)> {
    let pts: Vec<(f64, u32)> = [0.2, 0.6, 1.0].iter().flat_map(|&l| [2u32, 3, 4].map(|m| (l, m))).collect();
    pts.into_par_iter()
        .enumerate()
        .map(|(i, (l, m))| (l, m, simulate(m, 0.5, l, derive_seed(SEED, 100 + i as u64))))
        .collect()
}

fn ac5(runs: &[(f64, u32, Metrics)]) -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut exceed = 0;
    for (_, _, r) in runs {
        let inv = &r.invariants;
        let frac = inv.rule6_events as f64 / inv.zone_slots.max(1) as f64;
        worst = worst.max(frac);
        exceed += inv.occupancy_exceedances;
        pass &= inv.occupancy_exceedances == 0 && frac < 1e-3;
    }
    outcome(pass, format!("{} runs, occupancy exceedances {exceed}, max rule-6 rate {worst:.2e}", runs.len()))
}

fn ac6(runs: &[(f64, u32, Metrics)]) -> Outcome {
    let (mut st, mut rl, mut dt) = (0, 0, 0);
    for (_, _, r) in runs {
        st += r.invariants.service_time;
        rl += r.invariants.reroute_length;
        dt += r.invariants.delivery_transitions;
    }
    outcome(st + rl + dt == 0, format!("service-time {st}, reroute-length {rl}, delivery-transition {dt} violations"))
}

fn ac7(runs: &[(f64, u32, Metrics)]) -> Outcome {
    let (mut qd, mut ot, mut beta, mut gamma) = (0, 0, 0, 0);
    for (_, _, r) in runs {
        qd += r.invariants.queue_deadline;
        ot += r.invariants.overflow_target;
        beta = beta.max(r.invariants.max_queue_age_beta);
        gamma = gamma.max(r.invariants.max_queue_age_gamma);
    }
    let mut sc = Scenario::nominal(params(2, 0.5), 0.8, SEED);
    sc.metrics.log_events = true;
    let mut sim = Simulation::new(sc).expect("scenario valid");
    while sim.step().expect("simulation runs") {}
    let grid = sim.grid();
    let events = sim.events();
    let mut checked = 0;
    let mut bad = 0;
    for (i, e) in events.iter().enumerate().filter(|(_, e)| e.tag == EventTag::Overflow) {
        let (Some(from), Some(to)) = (e.zone, e.to) else {
            bad += 1;
            continue;
        };
        let side = if to.stream > from.stream { Side::Right } else { Side::Left };
        let local = grid.frame().to_local(e.cell);
        let next = events[i + 1..].iter().find(|n| n.uas == e.uas && is_movement(n.tag));
        let ok = to == from.outward(side)
            && (from.stream == 0 || to.stream.abs() == from.stream.abs() + 1)
            && grid.relative_position(to, local).ok() == Some(1)
            && next.is_none_or(|n| n.zone == Some(to));
        bad += !ok as u64;
        checked += 1;
    }
    let l = 5;
    let pass = qd == 0 && ot == 0 && beta < l && gamma <= l && bad == 0 && checked > 0;
    outcome(
        pass,
        format!(
            "deadline {qd}, overflow-target {ot}, max age beta {beta} gamma {gamma}; {checked} logged overflows, {bad} mismatched"
        ),
    )
}

fn is_movement(t: EventTag) -> bool {
    matches!(
        t,
        EventTag::Upstream
            | EventTag::Outward
            | EventTag::InwardDiag
            | EventTag::OutwardDiag
            | EventTag::EnterService
            | EventTag::Descend
            | EventTag::Overflow
    )
}

fn exogenous(lambda_e: f64) -> Option<ExogenousConfig> {
    Some(ExogenousConfig { lambda_e, level: 2, offset: None, dx: 1, mode: ExogenousMode::InPlane })
}

fn ac8() -> Outcome {
    let mut sc = Scenario::nominal(params(3, 0.5), 0.2, SEED);
    sc.exogenous = exogenous(0.2);
    sc.stop.uas = None;
    sc.stop.slots = Some(50_000);
    let r = run(&sc).expect("simulation runs");
    let z = r.zone(0, 2).unwrap();
    let total: u64 = z.exogenous_hist.iter().sum();
    let s = 11;
    let dev = (0..=s)
        .map(|k| {
            let pmf = binom(s, k) * 0.2f64.powi(k) * 0.8f64.powi(s - k);
            let got = z.exogenous_hist.get(k as usize).copied().unwrap_or(0) as f64 / total as f64;
            (got - pmf).abs()
        })
        .fold(0.0, f64::max);
    let mean = z.mean_exogenous;
    outcome(
        (mean - 2.2).abs() <= 0.1 && dev <= 0.02,
        format!("mean exogenous count {mean:.3}, max histogram deviation {dev:.4}"),
    )
}

fn ac9() -> Outcome {
    let t = Instant::now();
    let pts: Vec<(f64, u32, f64)> = (1..=20)
        .flat_map(|i| (2..=10).flat_map(move |m| (0..=10).map(move |e| (i as f64 * 0.05, m, e as f64 / 10.0))))
        .collect();
    let res: Vec<(f64, usize, bool)> = pts
        .par_iter()
        .map(|&(l, m, eta)| {
            let r = analyze(m, eta, l);
            let probs_ok = r.zones.iter().all(|z| z.out.probabilities().iter().all(|p| (0.0..=1.0).contains(p)));
            (r.max_residual(), r.flagged().len(), probs_ok)
        })
        .collect();
    let worst = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let flagged: usize = res.iter().map(|r| r.1).sum();
    let bad_probs = res.iter().filter(|r| !r.2).count();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && flagged == 0 && bad_probs == 0,
        format!("{} configurations, max residual {worst:.1e}, {flagged} flagged, {bad_probs} out of range, {secs:.1} s", pts.len()),
    )
}

/// LCFS queue under iid congestion, tracked by queueing age.
fn lcfs_mc(lambda: f64, theta: f64, l: usize, slots: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ages: Vec<usize> = Vec::new();
    let mut hist = vec![0u64; l + 1];
    for _ in 0..slots {
        let arrival = rng.gen::<f64>() < lambda;
        let busy = rng.gen::<f64>() < theta;
        if busy {
            if arrival {
                ages.push(0);
            }
        } else if !arrival {
            if let Some(i) = (0..ages.len()).min_by_key(|&i| ages[i]) {
                ages.swap_remove(i);
            }
        }
        ages.iter_mut().for_each(|a| *a += 1);
        ages.retain(|&a| a <= l);
        hist[ages.len()] += 1;
    }
    hist.iter().map(|&c| c as f64 / slots as f64).collect()
}

/// Per-depth counts of the six-scenario queue, with all branch events drawn
/// independently each slot.
#[allow(clippy::too_many_arguments)]
fn gamma_mc(pa: f64, pc: f64, b0: f64, omega: f64, rho: f64, l: usize, slots: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0usize; l + 1];
    let mut hist = vec![0u64; 2 * l + 1];
    for _ in 0..slots {
        let conflict = rng.gen::<f64>() < omega;
        let descend = rng.gen::<f64>() >= b0;
        let preempted = rng.gen::<f64>() < rho;
        let a = (rng.gen::<f64>() < pa) as usize;
        let c = (rng.gen::<f64>() < pc) as usize;
        let nodal = if descend { c } else { a + c };
        for j in (0..l).rev() {
            let vj = v[j];
            v[j + 1] = if conflict {
                vj + if descend { 0 } else { a }
            } else if preempted {
                vj + nodal
            } else if vj == 0 {
                0
            } else {
                vj + nodal - 1
            };
        }
        hist[v[l]] += 1;
    }
    hist.iter().map(|&c| c as f64 / slots as f64).collect()
}

fn max_dev(pgf: &Pgf, mc: &[f64]) -> f64 {
    let n = pgf.coeffs().len().max(mc.len());
    (0..n)
        .map(|k| (pgf.coeffs().get(k).copied().unwrap_or(0.0) - mc.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn ac10() -> Outcome {
    let slots = 1_000_000;
    let l = 5;
    let pairs: Vec<(f64, f64)> = [0.2, 0.5, 0.8].iter().flat_map(|&a| [0.2, 0.5, 0.8].map(|t| (a, t))).collect();
    let s0 = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(lam, th))| {
            let v = stream0_queue_recursion(&Pgf::bernoulli(lam), th, l as u32);
            max_dev(&v[l], &lcfs_mc(lam, th, l, slots, derive_seed(SEED, i as u64)))
        })
        .reduce(|| 0.0, f64::max);
    let sets = [(0.5, 0.3, 0.6, 0.15, 0.5), (0.3, 0.2, 0.5, 0.06, 0.4), (0.6, 0.4, 0.7, 0.24, 0.6)];
    let gx = sets
        .par_iter()
        .enumerate()
        .map(|(i, &(pa, pc, b0, om, rho))| {
            let g = streamx_gamma_recursion(&Pgf::bernoulli(pa), &Pgf::bernoulli(pc), &Pgf::bernoulli(1.0 - b0), om, rho, l as u32);
            max_dev(&g[l], &gamma_mc(pa, pc, b0, om, rho, l, slots, derive_seed(SEED, 50 + i as u64)))
        })
        .reduce(|| 0.0, f64::max);
    outcome(s0 <= 0.01 && gx <= 0.01, format!("stream-0 queue max deviation {s0:.4}, gamma queue max deviation {gx:.4}"))
}

fn ac11() -> Outcome {
    let total = |m: u32| -> u64 {
        (1..=3u64)
            .into_par_iter()
            .map(|seed| {
                let mut sc = Scenario::nominal(params(m, 0.3), 0.2, seed);
                sc.exogenous = exogenous(0.2);
                run(&sc).expect("simulation runs").total_conflicts()
            })
            .sum()
    };
    let (on, off) = (total(4), total(11));
    outcome(on < off, format!("conflicts over 3 seeds: M=4 {on}, M=S {off}"))
}

fn main() {
    let start = Instant::now();
    let runs = grid_runs();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let checks: Vec<(&str, Check)> = vec![
        ("AC1", Box::new(ac1)),
        ("AC2", Box::new(ac2)),
        ("AC3", Box::new(ac3)),
        ("AC4", Box::new(ac4)),
        ("AC5", Box::new(|| ac5(&runs))),
        ("AC6", Box::new(|| ac6(&runs))),
        ("AC7", Box::new(|| ac7(&runs))),
        ("AC8", Box::new(ac8)),
        ("AC9", Box::new(ac9)),
        ("AC10", Box::new(ac10)),
        ("AC11", Box::new(ac11)),
    ];
    let mut failed = Vec::new();
    for (name, check) in &checks {
        let o = check();
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(*name);
        }
    }
    println!(
        "acceptance: {} passed, {} failed{} ({:.1} s)",
        checks.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) },
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

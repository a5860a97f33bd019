//! Systems on the nominal stream: one merged LCFS queue with deadline `L`.

use crate::modulation::{correction_factor, mmbp_modulate, mmrp_modulate, pi_e};
use crate::pgf::{departures, Pgf};
use crate::solver::{solve_fixed_point, SolverOptions};
use crate::zone::{Congestion, ZoneInputs, ZoneModelOutputs};

/// Queue-length PGFs `V_0 ..= V_L` under iid congestion `theta0`, with
/// `V_0 = 1`.
pub fn stream0_queue_recursion(a: &Pgf, theta0: f64, l: u32) -> Vec<Pgf> {
    lcfs_recursion(a, a, theta0, l)
}

/// Shared LCFS recursion: `arr` joins the queue when busy, `serve` arrivals
/// are netted against one departure when idle.
pub(crate) fn lcfs_recursion(arr: &Pgf, serve: &Pgf, busy: f64, depth: u32) -> Vec<Pgf> {
    let mut v = Vec::with_capacity(depth as usize + 1);
    v.push(Pgf::unit());
    for j in 0..depth as usize {
        let prev = &v[j];
        let mut next = arr.mul(prev).scale(busy);
        let mut idle = prev.shift_div().mul(serve);
        idle.axpy(1.0, &Pgf::new(vec![prev.at0()]));
        next.axpy(1.0 - busy, &idle);
        v.push(next);
    }
    v
}

pub fn availability0(a0: f64, a_o0: f64, v_l0: f64) -> (f64, f64) {
    let sigma = a0 * v_l0;
    (sigma, (1.0 - sigma) + sigma * (1.0 - a_o0))
}

/// Congestion from entry probabilities with exogenous arrivals held for `S`
/// slots.
pub fn forward_congestion(w1_0: f64, e0_0: f64, s: u32, m: u32) -> f64 {
    forward_congestion_with(w1_0, e0_0, s, m, s)
}

/// `1 - P[u < M]` where `u ~ Bin(S-1, 1-w1_0) + Bin(exo_slots, 1-e0_0)`.
pub fn forward_congestion_with(w1_0: f64, e0_0: f64, s: u32, m: u32, exo_slots: u32) -> f64 {
    let pw = binomial_head(s - 1, 1.0 - w1_0, m);
    let pe = binomial_head(exo_slots, 1.0 - e0_0, m);
    let mut below = 0.0;
    for (i, x) in pw.iter().enumerate() {
        for y in &pe[..(m as usize - i)] {
            below += x * y;
        }
    }
    (1.0 - below).clamp(0.0, 1.0)
}

/// `P[X = k]` for `k < m`, `X ~ Bin(n, p)`.
fn binomial_head(n: u32, p: f64, m: u32) -> Vec<f64> {
    let p = p.clamp(0.0, 1.0);
    let q = 1.0 - p;
    let mut out = vec![0.0; m as usize];
    let mut c = 1.0;
    for k in 0..(m.min(n + 1)) {
        if k > 0 {
            c *= (n - k + 1) as f64 / k as f64;
        }
        out[k as usize] = c * p.powi(k as i32) * q.powi((n - k) as i32);
    }
    out
}

/// Probability that the oldest queued UAS reached the deadline.
pub fn deadline_prob(v_prev: &Pgf, v_last: &Pgf) -> f64 {
    if v_prev.at0() <= 0.0 {
        0.0
    } else {
        ((v_prev.at0() - v_last.at0()) / v_prev.at0()).clamp(0.0, 1.0)
    }
}

/// Queue overflow probability and the resulting inward arrivals of the
/// neighbours on the negative and positive sides. The positive side receives
/// the share `eta`.
pub fn overflow0(a: &Pgf, v: &[Pgf], theta0_star: f64, w1_0_star: f64, inputs: &ZoneInputs) -> (f64, Pgf, Pgf) {
    let l = v.len() - 1;
    let a0 = a.at0();
    let phi = (1.0 - theta0_star) * (1.0 - a0 * v[l - 1].at0()) * deadline_prob(&v[l - 1], &v[l])
        + theta0_star * (1.0 - a0) * (1.0 - v[l].at0()) * w1_0_star
        + correction_factor(1.0 - a0, inputs.m, inputs.eta, inputs.s);
    let phi = phi.clamp(0.0, 1.0);
    (phi, Pgf::bernoulli((1.0 - inputs.eta) * phi), Pgf::bernoulli(inputs.eta * phi))
}

struct Parts {
    sigma: f64,
    pi: f64,
    w1_0: f64,
}

fn parts(inp: &ZoneInputs, theta0: f64) -> Parts {
    let v = stream0_queue_recursion(&inp.a, theta0, inp.l);
    let (sigma, pi) = availability0(inp.a.at0(), inp.a_o.at0(), v[inp.l as usize].at0());
    Parts { sigma, pi, w1_0: 1.0 - (1.0 - theta0) * pi }
}

pub fn solve_stream0(inp: &ZoneInputs, mode: Congestion, opts: &SolverOptions) -> ZoneModelOutputs {
    let h = |t: f64| forward_congestion_with(parts(inp, t).w1_0, inp.e0.at0(), inp.s, inp.m, inp.exo_slots);
    let (theta0, root) = match mode {
        Congestion::Solve => {
            let r = solve_fixed_point(h, opts);
            (r.theta, Some(r))
        }
        Congestion::Blocked => (1.0, None),
        Congestion::Free => (0.0, None),
    };
    let p = parts(inp, theta0);
    let lambda_e = inp.lambda_e();
    let pe = pi_e(p.pi, lambda_e);
    let mut mm = mmrp_modulate(theta0, pe, inp.s, inp.m);
    let w1_0_star = match mode {
        Congestion::Solve => mmbp_modulate(&mm, p.pi),
        Congestion::Blocked => 1.0,
        Congestion::Free => p.w1_0,
    };
    if mode != Congestion::Solve {
        mm.theta0_star = theta0;
    }
    let vs = stream0_queue_recursion(&inp.a, mm.theta0_star, inp.l);
    let (phi, _, _) = overflow0(&inp.a, &vs, mm.theta0_star, w1_0_star, inp);
    ZoneModelOutputs {
        theta0,
        theta0_star: mm.theta0_star,
        theta00: mm.theta00,
        theta10: mm.theta10,
        w1_0: p.w1_0,
        w1_0_star,
        pi: p.pi,
        pi_e: pe,
        sigma: p.sigma,
        phi,
        omega: 0.0,
        c0: 1.0,
        mean_in_service: (inp.s - 1) as f64 * (1.0 - w1_0_star) + inp.exo_slots as f64 * lambda_e,
        mean_in_queue: vs[inp.l as usize].mean(),
        departures: departures(w1_0_star),
        root,
    }
}

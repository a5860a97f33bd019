//! Systems off the nominal stream: a `beta` queue fed by inward overflow,
//! nodal conflicts between the two node arrival kinds, and a `gamma` queue.

use crate::modulation::{correction_factor, mmbp_modulate, mmrp_modulate, pi_e};
use crate::pgf::{departures, Pgf};
use crate::solver::{solve_fixed_point, SolverOptions};
use crate::stream0::{availability0, deadline_prob, forward_congestion_with, lcfs_recursion};
use crate::zone::{Congestion, ZoneInputs, ZoneModelOutputs};

/// Nodal arrivals leaving the `beta` queue, estimated from the same queue
/// with no conflicts, and the resulting conflict probability.
pub fn conflict_arrival_estimate(inp: &ZoneInputs, theta0: f64) -> (Pgf, f64) {
    let l = inp.l;
    let ai0 = inp.a_i.at0();
    let bv = lcfs_recursion(&inp.a_i, &inp.a_i, theta0, l - 1);
    let (last, prev) = (&bv[l as usize - 1], &bv[(l as usize).saturating_sub(2)]);
    let (_, pi) = availability0(ai0, inp.a_o.at0(), last.at0());
    let w1_0 = 1.0 - (1.0 - theta0) * pi;
    let prev_last = if l >= 2 { deadline_prob(prev, last) } else { 0.0 };
    let pc = (1.0 - theta0) * (1.0 - ai0 * prev.at0()) * prev_last
        + theta0 * (1.0 - ai0) * (1.0 - last.at0()) * w1_0
        + correction_factor(1.0 - ai0, inp.m, inp.eta, inp.s);
    let c = Pgf::bernoulli(pc.clamp(0.0, 1.0));
    let omega = (1.0 - c.at0()) * (1.0 - inp.a.at0());
    (c, omega)
}

/// `beta` queue PGFs `V_0 ..= V_{L-1}`; busy whenever congested or in conflict.
pub fn streamx_beta_recursion(a_i: &Pgf, theta0: f64, omega: f64, l: u32) -> Vec<Pgf> {
    lcfs_recursion(a_i, a_i, theta0 + omega - theta0 * omega, l - 1)
}

/// Probability that a queued `gamma` UAS is pre-empted by a non-nodal arrival
/// or the `beta` queue.
pub fn preemption(theta0: f64, a_i0: f64, beta_last0: f64) -> f64 {
    1.0 - (1.0 - theta0) * a_i0 * beta_last0
}

/// Weights of the six conflict/descend/pre-emption scenarios.
pub fn gamma_weights(omega: f64, b0: f64, rho: f64) -> [f64; 6] {
    let no = 1.0 - omega;
    [
        omega * (1.0 - b0),
        omega * b0,
        rho * (1.0 - b0) * no,
        rho * b0 * no,
        (1.0 - rho) * (1.0 - b0) * no,
        (1.0 - rho) * b0 * no,
    ]
}

/// `gamma` queue PGFs `V_0 ..= V_L`.
pub fn streamx_gamma_recursion(a: &Pgf, c: &Pgf, b: &Pgf, omega: f64, rho: f64, l: u32) -> Vec<Pgf> {
    let w = gamma_weights(omega, b.at0(), rho);
    debug_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let ac = a.mul(c);
    let mut v = Vec::with_capacity(l as usize + 1);
    v.push(Pgf::unit());
    for j in 0..l as usize {
        let prev = &v[j];
        let head = Pgf::new(vec![prev.at0()]);
        let tail = prev.shift_div();
        let mut next = prev.scale(w[0]);
        next.axpy(w[1], &a.mul(prev));
        next.axpy(w[2], &c.mul(prev));
        next.axpy(w[3], &ac.mul(prev));
        next.axpy(w[4] + w[5], &head);
        next.axpy(w[4], &tail.mul(c));
        next.axpy(w[5], &tail.mul(&ac));
        v.push(next);
    }
    v
}

/// Descend probability into `Z_UP` and availability.
pub fn availability_x(a0: f64, a_i0: f64, a_o0: f64, c0: f64, b0: f64, beta_last0: f64, gamma_last0: f64) -> (f64, f64) {
    let sigma = a_i0 * beta_last0 * c0 * (1.0 - b0 * (1.0 - a0)) * gamma_last0;
    (sigma, (1.0 - sigma) + sigma * (1.0 - a_o0))
}

pub fn feedback_x(omega: f64, theta0: f64, pi: f64) -> f64 {
    (1.0 - (omega + (1.0 - omega) * (1.0 - theta0) * pi)).clamp(0.0, 1.0)
}

/// Overflow of the `gamma` queue and the inward arrivals it creates for the
/// outward neighbour.
pub fn overflow_x(inp: &ZoneInputs, gv: &[Pgf], theta0_star: f64, w1_0_star: f64, c0: f64) -> (f64, Pgf) {
    let l = gv.len() - 1;
    let exposed = (1.0 - inp.a_i.at0() + (1.0 - inp.a.at0()) * inp.b.at0()).min(1.0);
    let phi = (1.0 - theta0_star) * (1.0 - w1_0_star) * deadline_prob(&gv[l - 1], &gv[l])
        + theta0_star * exposed * (1.0 - gv[l].at0()) * w1_0_star
        + correction_factor(1.0 - c0, inp.m, inp.eta, inp.s);
    let phi = phi.clamp(0.0, 1.0);
    (phi, Pgf::bernoulli(phi))
}

struct Parts {
    beta: Vec<Pgf>,
    gamma: Vec<Pgf>,
    c: Pgf,
    omega: f64,
    sigma: f64,
    pi: f64,
    w1_0: f64,
}

fn parts(inp: &ZoneInputs, theta0: f64) -> Parts {
    let (c, omega) = conflict_arrival_estimate(inp, theta0);
    let beta = streamx_beta_recursion(&inp.a_i, theta0, omega, inp.l);
    let beta_last0 = beta[inp.l as usize - 1].at0();
    let rho = preemption(theta0, inp.a_i.at0(), beta_last0);
    let gamma = streamx_gamma_recursion(&inp.a, &c, &inp.b, omega, rho, inp.l);
    let (sigma, pi) = availability_x(
        inp.a.at0(),
        inp.a_i.at0(),
        inp.a_o.at0(),
        c.at0(),
        inp.b.at0(),
        beta_last0,
        gamma[inp.l as usize].at0(),
    );
    let w1_0 = feedback_x(omega, theta0, pi);
    Parts { beta, gamma, c, omega, sigma, pi, w1_0 }
}

pub fn solve_streamx(inp: &ZoneInputs, mode: Congestion, opts: &SolverOptions) -> ZoneModelOutputs {
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
    let q = parts(inp, mm.theta0_star);
    let (phi, _) = overflow_x(inp, &q.gamma, mm.theta0_star, w1_0_star, p.c.at0());
    let l = inp.l as usize;
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
        omega: p.omega,
        c0: p.c.at0(),
        mean_in_service: (inp.s - 1) as f64 * (1.0 - w1_0_star) + inp.exo_slots as f64 * lambda_e,
        mean_in_queue: q.beta[l - 1].mean() + q.gamma[l].mean(),
        departures: departures(w1_0_star),
        root,
    }
}

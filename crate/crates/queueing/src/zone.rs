use serde::Serialize;

use crate::pgf::Pgf;
use crate::solver::Root;

/// Arrival distributions and design parameters of one queueing system.
#[derive(Clone, Debug)]
pub struct ZoneInputs {
    /// Nodal arrivals.
    pub a: Pgf,
    /// Inward non-nodal arrivals (overflow of the inward neighbour).
    pub a_i: Pgf,
    /// Outward non-nodal arrivals.
    pub a_o: Pgf,
    /// Descend distribution of the inward neighbour.
    pub b: Pgf,
    /// Exogenous arrivals.
    pub e0: Pgf,
    /// Slots an exogenous UAS stays in service: `S` in-plane, 1 out-of-plane.
    pub exo_slots: u32,
    pub l: u32,
    pub s: u32,
    pub m: u32,
    pub eta: f64,
}

impl ZoneInputs {
    /// Empty arrivals with the given parameters.
    pub fn idle(l: u32, m: u32, eta: f64) -> Self {
        ZoneInputs {
            a: Pgf::unit(),
            a_i: Pgf::unit(),
            a_o: Pgf::unit(),
            b: Pgf::unit(),
            e0: Pgf::unit(),
            exo_slots: 2 * l + 1,
            l,
            s: 2 * l + 1,
            m,
            eta,
        }
    }

    pub fn lambda_e(&self) -> f64 {
        1.0 - self.e0.at0()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ZoneModelOutputs {
    pub theta0: f64,
    pub theta0_star: f64,
    pub theta00: f64,
    pub theta10: f64,
    pub w1_0: f64,
    pub w1_0_star: f64,
    pub pi: f64,
    pub pi_e: f64,
    pub sigma: f64,
    pub phi: f64,
    pub omega: f64,
    pub c0: f64,
    pub mean_in_service: f64,
    pub mean_in_queue: f64,
    pub departures: Pgf,
    #[serde(skip)]
    pub root: Option<Root>,
}

impl ZoneModelOutputs {
    /// Outputs of a zone that carries no traffic.
    pub fn empty() -> Self {
        ZoneModelOutputs {
            theta0: 0.0,
            theta0_star: 0.0,
            theta00: 0.0,
            theta10: 0.0,
            w1_0: 1.0,
            w1_0_star: 1.0,
            pi: 0.0,
            pi_e: 0.0,
            sigma: 0.0,
            phi: 0.0,
            omega: 0.0,
            c0: 1.0,
            mean_in_service: 0.0,
            mean_in_queue: 0.0,
            departures: Pgf::unit(),
            root: None,
        }
    }

    pub fn flagged(&self) -> bool {
        self.root.as_ref().is_some_and(|r| r.flagged)
    }

    pub fn probabilities(&self) -> [f64; 12] {
        [
            self.theta0,
            self.theta0_star,
            self.theta00,
            self.theta10,
            self.w1_0,
            self.w1_0_star,
            self.pi,
            self.pi_e,
            self.sigma,
            self.phi,
            self.omega,
            self.c0,
        ]
    }
}

/// How congestion of a system is determined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Congestion {
    /// Solve the fixed point.
    Solve,
    /// `Z_UP` is a no-fly zone: permanently congested, nothing enters.
    Blocked,
    /// An inward zone is a no-fly zone: never congested.
    Free,
}

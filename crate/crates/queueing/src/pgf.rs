//! Probability generating functions as dense coefficient vectors.

use serde::{Deserialize, Serialize};

/// `c[i]` is the probability of value `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pgf {
    c: Vec<f64>,
}

const NEG_TOL: f64 = 1e-12;

impl Pgf {
    pub fn new(mut c: Vec<f64>) -> Self {
        if c.is_empty() {
            c.push(0.0);
        }
        for x in &mut c {
            if *x < 0.0 && *x >= -NEG_TOL {
                *x = 0.0;
            }
        }
        Pgf { c }
    }

    /// Point mass at zero.
    pub fn unit() -> Self {
        Pgf { c: vec![1.0] }
    }

    /// `(1 - p) + p z`.
    pub fn bernoulli(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Pgf { c: vec![1.0 - p, p] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    /// Value at `z = 0`.
    pub fn at0(&self) -> f64 {
        self.c[0]
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &x| acc * z + x)
    }

    /// First derivative at `z = 1`.
    pub fn mean(&self) -> f64 {
        self.c.iter().enumerate().map(|(i, &x)| i as f64 * x).sum()
    }

    pub fn total(&self) -> f64 {
        self.c.iter().sum()
    }

    pub fn is_distribution(&self, tol: f64) -> bool {
        self.c.iter().all(|&x| x >= -NEG_TOL) && (self.total() - 1.0).abs() <= tol
    }

    pub fn mul(&self, o: &Pgf) -> Pgf {
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Pgf { c }
    }

    pub fn scale(&self, k: f64) -> Pgf {
        Pgf { c: self.c.iter().map(|x| x * k).collect() }
    }

    /// Coefficient-wise sum.
    pub fn add(&self, o: &Pgf) -> Pgf {
        let mut c = vec![0.0; self.c.len().max(o.c.len())];
        for (i, x) in self.c.iter().enumerate() {
            c[i] += x;
        }
        for (i, x) in o.c.iter().enumerate() {
            c[i] += x;
        }
        Pgf { c }
    }

    /// `self += k * o`, in place.
    pub fn axpy(&mut self, k: f64, o: &Pgf) {
        if self.c.len() < o.c.len() {
            self.c.resize(o.c.len(), 0.0);
        }
        for (i, x) in o.c.iter().enumerate() {
            self.c[i] += k * x;
        }
    }

    pub fn pow(&self, n: u32) -> Pgf {
        (0..n).fold(Pgf::unit(), |acc, _| acc.mul(self))
    }

    /// `(v(z) - v(0)) / z`, by dropping the constant term.
    pub fn shift_div(&self) -> Pgf {
        if self.c.len() <= 1 {
            Pgf { c: vec![0.0] }
        } else {
            Pgf { c: self.c[1..].to_vec() }
        }
    }

    /// Clamp coefficients into `[0, 1]`.
    pub fn clamped(mut self) -> Pgf {
        for x in &mut self.c {
            *x = x.clamp(0.0, 1.0);
        }
        self
    }
}

/// Free-function form of [`Pgf::shift_div`].
pub fn pgf_shift_div(v: &Pgf) -> Pgf {
    v.shift_div()
}

/// Bernoulli departures of a system whose no-entry probability is `w1_0_star`.
pub fn departures(w1_0_star: f64) -> Pgf {
    let w = w1_0_star.clamp(0.0, 1.0);
    if w >= 1.0 {
        Pgf::unit()
    } else {
        Pgf { c: vec![w, 1.0 - w] }
    }
}

/// Means of the in-service and queue distributions.
pub fn expected_counts(u: &Pgf, queues: &[&Pgf]) -> (f64, f64) {
    (u.mean(), queues.iter().map(|q| q.mean()).sum())
}

//! Bracketing fixed-point search on `[0, 1]`.

use serde::Serialize;

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub step: f64,
    pub tol: f64,
    /// Scan the whole interval and record every bracket.
    pub scan_all: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { step: 1e-3, tol: 1e-10, scan_all: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Root {
    pub theta: f64,
    pub residual: f64,
    /// No root met the tolerance; `theta` is the best grid point.
    pub flagged: bool,
    /// Sign-change intervals found by the scan.
    pub brackets: Vec<(f64, f64)>,
}

/// Smallest `t` in `[0, 1]` with `h(t) = t`.
pub fn solve_fixed_point(mut h: impl FnMut(f64) -> f64, opts: &SolverOptions) -> Root {
    let mut g = |t: f64| h(t) - t;
    let n = (1.0 / opts.step).round() as usize;
    let mut best = (0.0, f64::INFINITY);
    let mut brackets = Vec::new();
    let mut root: Option<(f64, f64)> = None;
    let (mut t0, mut g0) = (0.0, g(0.0));
    if g0.abs() <= opts.tol {
        root = Some((0.0, g0));
    }
    for i in 1..=n {
        if root.is_some() && !opts.scan_all {
            break;
        }
        let t1 = if i == n { 1.0 } else { i as f64 * opts.step };
        let g1 = g(t1);
        if g1.abs() < best.1 {
            best = (t1, g1.abs());
        }
        if g0 * g1 <= 0.0 && g0 != 0.0 {
            brackets.push((t0, t1));
            if root.is_none() {
                root = Some(bisect(&mut g, t0, g0, t1, g1, opts.tol));
            }
        }
        t0 = t1;
        g0 = g1;
    }
    match root {
        Some((theta, r)) => Root { theta, residual: r.abs(), flagged: r.abs() > opts.tol, brackets },
        None => Root { theta: best.0, residual: best.1, flagged: true, brackets },
    }
}

fn bisect(g: &mut impl FnMut(f64) -> f64, mut lo: f64, mut glo: f64, mut hi: f64, ghi: f64, tol: f64) -> (f64, f64) {
    let mut best = if glo.abs() < ghi.abs() { (lo, glo) } else { (hi, ghi) };
    for _ in 0..200 {
        if best.1.abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if glo * gm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_smallest_root() {
        // Roots of t = h(t) at 0.2, 0.5, 0.8.
        let h = |t: f64| t + (t - 0.2) * (t - 0.5) * (t - 0.8);
        let r = solve_fixed_point(h, &SolverOptions { scan_all: true, ..Default::default() });
        assert!((r.theta - 0.2).abs() < 1e-9);
        assert!(!r.flagged);
        assert_eq!(r.brackets.len(), 3);
    }

    #[test]
    fn root_at_zero() {
        let r = solve_fixed_point(|t| t * t, &SolverOptions::default());
        assert_eq!(r.theta, 0.0);
        assert!(!r.flagged);
    }

    #[test]
    fn cosine_fixed_point() {
        let r = solve_fixed_point(f64::cos, &SolverOptions::default());
        assert!((r.theta - 0.739_085_133_215_160_6).abs() < 1e-9);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn flags_when_no_root() {
        let r = solve_fixed_point(|t| (t + 0.5).min(2.0), &SolverOptions::default());
        assert!(r.flagged);
    }
}

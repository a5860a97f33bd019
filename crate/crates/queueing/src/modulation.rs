//! Markov modulation of congestion and service entry, and the overflow
//! correction factor.

/// Transition probabilities of the congestion chain and the modulated
/// congestion probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mmrp {
    pub theta00: f64,
    pub theta10: f64,
    pub theta0_star: f64,
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Availability including exogenous arrivals.
pub fn pi_e(pi: f64, lambda_e: f64) -> f64 {
    pi + lambda_e - pi * lambda_e
}

/// `(S - M - 1) / (S - 1)`, floored at zero for `M = S`.
pub fn theta00(s: u32, m: u32) -> f64 {
    ((s as f64 - m as f64 - 1.0) / (s as f64 - 1.0)).max(0.0)
}

/// Probability an uncongested zone turns congested in the next slot. The
/// common factor `(1 - pi_e)^(S-M)` is cancelled so the ratio stays finite at
/// `pi_e = 1`.
pub fn theta10(pi_e: f64, s: u32, m: u32) -> f64 {
    let p = pi_e.clamp(0.0, 1.0);
    let q = 1.0 - p;
    let num = binom(s - 2, m - 1) * p.powi(m as i32);
    let den: f64 = (0..m).map(|n| binom(s - 1, n) * p.powi(n as i32) * q.powi((m - 1 - n) as i32)).sum();
    if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 }
}

pub fn mmrp_modulate(theta0: f64, pi_e: f64, s: u32, m: u32) -> Mmrp {
    let t00 = theta00(s, m);
    let t10 = theta10(pi_e, s, m);
    let star = (t00 * theta0 + t10 * (1.0 - theta0)).clamp(0.0, 1.0);
    Mmrp { theta00: t00, theta10: t10, theta0_star: star }
}

/// Probability that no UAS enters service, under modulation.
pub fn mmbp_modulate(mm: &Mmrp, pi: f64) -> f64 {
    let (t01, t11) = (1.0 - mm.theta00, 1.0 - mm.theta10);
    let enter = (t11 * (1.0 - mm.theta0_star) + t01 * mm.theta0_star) * pi;
    (1.0 - enter).clamp(0.0, 1.0)
}

pub fn correction_factor(x: f64, m: u32, eta: f64, s: u32) -> f64 {
    let zeta = if eta <= 0.5 { 2.0 * eta } else { 2.0 * (1.0 - eta) };
    let d = m as f64 - 1.0 + zeta;
    if d <= 0.0 || x <= 0.0 {
        return 0.0;
    }
    let r = x / d;
    0.15 * r * (-(s as f64) * r.powi(3)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta00_closed_form() {
        assert_eq!(theta00(11, 2), 0.8);
        for pe in [0.1, 0.5, 0.9] {
            assert_eq!(mmrp_modulate(0.3, pe, 11, 4).theta00, 6.0 / 10.0);
        }
        assert_eq!(theta00(11, 11), 0.0);
    }

    /// Sliding window of `S-1` slots, each holding an available UAS with
    /// probability `pe`; estimate P[next window has >= M | current has < M].
    fn theta10_mc(pe: f64, s: u32, m: u32, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut hits, mut total) = (0u64, 0u64);
        let w = (s - 1) as usize;
        let mut win: Vec<bool> = (0..w).map(|_| rng.gen::<f64>() < pe).collect();
        let mut head = 0;
        for _ in 0..n {
            let cnt = win.iter().filter(|&&b| b).count() as u32;
            win[head] = rng.gen::<f64>() < pe;
            head = (head + 1) % w;
            if cnt < m {
                total += 1;
                hits += (win.iter().filter(|&&b| b).count() as u32 >= m) as u64;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn theta10_matches_window_simulation() {
        // Independent closed form: C(S-2, M-1) pe^M / sum_n C(S-1, n) pe^n (1-pe)^(M-1-n).
        assert!((theta10(0.5, 11, 2) - 9.0 / 22.0).abs() < 1e-12);
        for (pe, m) in [(0.5, 2), (0.3, 3), (0.7, 4)] {
            let mc = theta10_mc(pe, 11, m, 400_000);
            assert!((theta10(pe, 11, m) - mc).abs() < 0.01, "pe={pe} m={m} mc={mc}");
        }
    }

    #[test]
    fn theta10_limits() {
        assert_eq!(theta10(0.0, 11, 2), 0.0);
        assert!((theta10(1.0, 11, 2) - 9.0 / 10.0).abs() < 1e-12);
        assert_eq!(theta10(0.6, 11, 11), 0.0);
    }

    #[test]
    fn modulated_star() {
        let mm = mmrp_modulate(0.0, 0.0, 11, 2);
        assert_eq!(mm.theta0_star, 0.0);
        assert_eq!(mmbp_modulate(&mm, 0.0), 1.0);
        assert_eq!(mmbp_modulate(&Mmrp { theta00: 0.8, theta10: 0.0, theta0_star: 0.0 }, 1.0), 0.0);
        let mm = Mmrp { theta00: 0.8, theta10: 0.3, theta0_star: 0.45 };
        let want = 1.0 - (0.7 * 0.55 + 0.2 * 0.45) * 0.6;
        assert!((mmbp_modulate(&mm, 0.6) - want).abs() < 1e-12);
    }

    #[test]
    fn correction_values() {
        assert_eq!(correction_factor(0.0, 2, 0.5, 11), 0.0);
        let want = 0.15 * 0.1 * (-11.0f64 * 0.001).exp();
        assert!((correction_factor(0.2, 2, 0.5, 11) - want).abs() < 1e-15);
        assert!((want - 0.014836).abs() < 1e-6);
        assert_eq!(correction_factor(0.4, 3, 0.3, 11), correction_factor(0.4, 3, 0.7, 11));
    }
}

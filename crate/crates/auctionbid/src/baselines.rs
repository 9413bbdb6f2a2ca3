//! Competing bidding policies: linear bid shading, log-form nonlinear
//! shading, and nonparametric distribution learning. Each refits once per
//! window of rounds on the previous window's data and holds parameters fixed
//! in between.

use std::collections::VecDeque;

use crate::auction::reward_raw;

/// Fixed-capacity FIFO of observed `(v, m)` pairs.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    capacity: usize,
    data: VecDeque<(f64, f64)>,
}

impl WindowBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        WindowBuffer {
            capacity,
            data: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, v: f64, m: f64) {
        if self.data.len() == self.capacity {
            self.data.pop_front();
        }
        self.data.push_back((v, m));
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn as_pairs(&self) -> Vec<(f64, f64)> {
        self.data.iter().copied().collect()
    }
}

/// Grid step to grid: `{0, 1/n, ..., 1}` where `n = round(1/step)`.
fn unit_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round().max(1.0) as usize;
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

/// Grid-search fit of the linear shading factor: the `theta` in
/// `{0, step, ..., 1}` maximizing window profit of bidding `theta·v`.
/// Ties go to the smallest factor; an empty window yields 0.
pub fn linear_fit(window: &[(f64, f64)], step: f64) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let mut best_theta = 0.0;
    let mut best_profit = f64::NEG_INFINITY;
    for theta in unit_grid(step) {
        let profit: f64 = window
            .iter()
            .map(|&(v, m)| reward_raw(theta * v, v, m))
            .sum();
        if profit > best_profit {
            best_profit = profit;
            best_theta = theta;
        }
    }
    best_theta
}

/// The log-form shading bid `ln(1 + t1·t2·v) / t2`, with the linear limit
/// `t1·v` at `t2 = 0`. Always at most `t1·v` since `ln(1+x) <= x`.
pub fn nonlinear_bid(theta1: f64, theta2: f64, v: f64) -> f64 {
    if theta2 == 0.0 {
        theta1 * v
    } else {
        (theta1 * theta2 * v).ln_1p() / theta2
    }
}

/// Default search grid for the curvature parameter: `{0, 0.25, ..., 8}`.
pub fn default_theta2_grid() -> Vec<f64> {
    (0..=32).map(|k| k as f64 * 0.25).collect()
}

/// Grid-search fit of the log-form shading parameters over the given grids,
/// maximizing window profit; ties go to the lexicographically smallest pair.
/// An empty window yields `(0, 0)`.
pub fn nonlinear_fit(
    window: &[(f64, f64)],
    theta1_grid: &[f64],
    theta2_grid: &[f64],
) -> (f64, f64) {
    if window.is_empty() {
        return (0.0, 0.0);
    }
    let mut best = (0.0, 0.0);
    let mut best_profit = f64::NEG_INFINITY;
    for &t1 in theta1_grid {
        for &t2 in theta2_grid {
            let profit: f64 = window
                .iter()
                .map(|&(v, m)| reward_raw(nonlinear_bid(t1, t2, v), v, m))
                .sum();
            if profit > best_profit {
                best_profit = profit;
                best = (t1, t2);
            }
        }
    }
    best
}

/// The empirical-distribution bid: treating the window's competing bids as
/// the true distribution, maximize `(v - b)·P(win)`. The objective only
/// jumps at support points, so the search ranges over the distinct observed
/// bids; ties go to the smallest bid, and if no candidate earns a positive
/// expected payoff (or the window is empty) the bid is 0.
pub fn dist_learning_bid(window_ms: &[f64], v: f64) -> f64 {
    let mut sorted: Vec<f64> = window_ms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dist_learning_bid_sorted(&sorted, v)
}

/// Same as [`dist_learning_bid`] over an already-sorted window.
pub fn dist_learning_bid_sorted(sorted_ms: &[f64], v: f64) -> f64 {
    if sorted_ms.is_empty() {
        return 0.0;
    }
    let n = sorted_ms.len() as f64;
    let mut best_bid = 0.0;
    let mut best_payoff = 0.0f64; // anything <= 0 falls back to bidding 0
    let mut i = 0usize;
    while i < sorted_ms.len() {
        let b = sorted_ms[i];
        // count of m <= b: advance over duplicates
        let mut j = i + 1;
        while j < sorted_ms.len() && sorted_ms[j] == b {
            j += 1;
        }
        let payoff = (v - b) * (j as f64 / n);
        if payoff > best_payoff {
            best_payoff = payoff;
            best_bid = b;
        }
        i = j;
    }
    best_bid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_fifo_eviction() {
        let mut w = WindowBuffer::new(2);
        w.push(1.0, 1.0);
        w.push(2.0, 2.0);
        w.push(3.0, 3.0);
        assert_eq!(w.as_pairs(), vec![(2.0, 2.0), (3.0, 3.0)]);
    }

    #[test]
    fn linear_fit_examples() {
        let theta = linear_fit(&[(0.5, 0.2), (1.0, 0.3)], 0.01);
        assert!((theta - 0.40).abs() < 1e-12);
        let profit: f64 = [(0.5, 0.2), (1.0, 0.3)]
            .iter()
            .map(|&(v, m)| reward_raw(theta * v, v, m))
            .sum();
        assert!((profit - 0.9).abs() < 1e-9);

        // nothing profitable: fall back to the smallest factor
        assert_eq!(linear_fit(&[(0.2, 0.9), (0.3, 0.8)], 0.01), 0.0);

        let theta = linear_fit(&[(1.0, 0.5)], 0.01);
        assert!((theta - 0.5).abs() < 1e-12);

        assert_eq!(linear_fit(&[], 0.01), 0.0);
    }

    #[test]
    fn nonlinear_bid_examples() {
        assert!((nonlinear_bid(1.0, 1.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((nonlinear_bid(0.5, 0.0, 0.8) - 0.4).abs() < 1e-15);
        assert!((nonlinear_bid(1.0, 4.0, 0.5) - 3.0f64.ln() / 4.0).abs() < 1e-15);
        assert!((nonlinear_bid(1.0, 4.0, 0.5) - 0.2747).abs() < 1e-4);
    }

    #[test]
    fn nonlinear_bid_always_shades() {
        for t1 in [0.0, 0.3, 0.7, 1.0] {
            for t2 in [0.0, 0.5, 2.0, 8.0] {
                for v in [0.1, 0.5, 1.0] {
                    let b = nonlinear_bid(t1, t2, v);
                    assert!(b <= t1 * v + 1e-15);
                    assert!(t1 * v <= v);
                    assert!(b >= 0.0);
                }
            }
        }
    }

    #[test]
    fn nonlinear_fit_recovers_linear_regime() {
        // window where the competing bid is exactly linear in the value:
        // the flattest curvature wins, recovering plain linear shading
        let window: Vec<(f64, f64)> = (1..=40)
            .map(|k| {
                let v = k as f64 / 40.0;
                (v, 0.5 * v)
            })
            .collect();
        let t1_grid = unit_grid(0.01);
        let (t1, t2) = nonlinear_fit(&window, &t1_grid, &default_theta2_grid());
        assert_eq!(t2, 0.0);
        assert!((t1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_fit_single_point() {
        let t1_grid = unit_grid(0.01);
        let (t1, t2) = nonlinear_fit(&[(1.0, 0.69)], &t1_grid, &default_theta2_grid());
        let bid = nonlinear_bid(t1, t2, 1.0);
        assert!((0.69..0.70).contains(&bid), "bid {bid}");
        assert!((1.0 - bid - 0.31).abs() < 0.01);
    }

    #[test]
    fn nonlinear_fit_degenerate_window() {
        let t1_grid = unit_grid(0.1);
        assert_eq!(
            nonlinear_fit(&[(0.2, 0.9)], &t1_grid, &default_theta2_grid()),
            (0.0, 0.0)
        );
        assert_eq!(nonlinear_fit(&[], &t1_grid, &default_theta2_grid()), (0.0, 0.0));
    }

    #[test]
    fn dist_learning_examples() {
        let b = dist_learning_bid(&[0.2, 0.2, 0.5], 0.6);
        assert_eq!(b, 0.2); // (0.4)·(2/3) = 0.2667 beats (0.1)·1

        assert_eq!(dist_learning_bid(&[0.5], 0.4), 0.0); // only negative payoffs
        assert_eq!(dist_learning_bid(&[], 0.9), 0.0);
    }

    #[test]
    fn dist_learning_dominates_every_support_point() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        for _ in 0..500 {
            let n = rng.gen_range(1..30);
            let ms: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let v: f64 = rng.gen_range(0.01..1.0);
            let b = dist_learning_bid(&ms, v);
            let payoff = |bid: f64| -> f64 {
                let wins = ms.iter().filter(|&&m| bid >= m).count() as f64;
                (v - bid) * wins / ms.len() as f64
            };
            let chosen = if b == 0.0 { payoff(0.0).max(0.0) } else { payoff(b) };
            for &m in &ms {
                assert!(chosen >= payoff(m) - 1e-12);
            }
            assert!(ms.contains(&b) || b == 0.0);
        }
    }
}

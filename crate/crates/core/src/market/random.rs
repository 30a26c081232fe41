use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MarketConfig, NodeConfig, NodeId};

/// Shape limits for [`random_market`].
#[derive(Debug, Clone, Copy)]
pub struct RandomMarketOptions {
    pub max_periods: usize,
    pub max_assets: usize,
    pub max_states: usize,
}

impl Default for RandomMarketOptions {
    fn default() -> Self {
        Self {
            max_periods: 3,
            max_assets: 3,
            max_states: 12,
        }
    }
}

/// Per-period branching factors whose product stays within `max_states`.
fn branching(rng: &mut ChaCha8Rng, periods: usize, max_states: usize) -> Vec<usize> {
    loop {
        let b: Vec<usize> = (0..periods).map(|_| rng.random_range(2..=6)).collect();
        if b.iter().product::<usize>() <= max_states {
            return b;
        }
    }
}

/// Arbitrage-free random event tree.
///
/// Each node draws a strictly positive conditional martingale measure and
/// random child prices, then shifts the child prices so their expectation
/// under that measure equals the parent price. The reference measure is an
/// independent strictly positive draw, so the tree always admits an
/// equivalent martingale measure.
pub fn random_market(seed: u64, opts: RandomMarketOptions) -> MarketConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periods = rng.random_range(1..=opts.max_periods);
    let assets = rng.random_range(1..=opts.max_assets);
    let branch = branching(&mut rng, periods, opts.max_states);

    let mut tree = vec![NodeConfig {
        id: NodeId::Int(0),
        parent: None,
        p: None,
        prices: (0..assets).map(|_| rng.random_range(5.0..15.0)).collect(),
    }];
    let mut frontier = vec![0usize];
    for &b in &branch {
        let mut next = Vec::new();
        for &parent in &frontier {
            let parent_prices = tree[parent].prices.clone();
            let q = simplex_point(&mut rng, b);
            let p = simplex_point(&mut rng, b);
            let mut child_prices: Vec<Vec<f64>> = (0..b)
                .map(|_| {
                    parent_prices
                        .iter()
                        .map(|s| s * (1.0 + rng.random_range(-0.4..0.4)))
                        .collect()
                })
                .collect();
            for a in 0..assets {
                let mean: f64 = (0..b).map(|c| q[c] * child_prices[c][a]).sum();
                for c in 0..b {
                    child_prices[c][a] += parent_prices[a] - mean;
                }
            }
            for (c, prices) in child_prices.into_iter().enumerate() {
                let id = tree.len();
                tree.push(NodeConfig {
                    id: NodeId::Int(id as i64),
                    parent: Some(NodeId::Int(parent as i64)),
                    p: Some(p[c]),
                    prices,
                });
                next.push(id);
            }
        }
        frontier = next;
    }
    MarketConfig {
        schema_version: Some(1),
        assets,
        tree,
    }
}

/// Strictly positive probability vector of length `n`.
fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random payoff vector with entries in `[-scale, scale]`.
pub fn random_claim(seed: u64, states: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..states).map(|_| rng.random_range(-scale..=scale)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MarketModel;

    #[test]
    fn random_markets_are_valid_and_bounded() {
        for seed in 1..=50 {
            let cfg = random_market(seed, RandomMarketOptions::default());
            let m = MarketModel::<f64>::build(&cfg).unwrap();
            assert!(m.num_states() <= 12 && m.num_states() >= 2);
            assert!((1..=3).contains(&m.horizon()));
            assert!((1..=3).contains(&m.assets()));
            let total: f64 = m.reference_probabilities().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = random_market(7, RandomMarketOptions::default());
        let b = random_market(7, RandomMarketOptions::default());
        assert_eq!(a, b);
    }
}

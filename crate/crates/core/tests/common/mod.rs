//! Shared corpus builders for the integration suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmdp_lab::dist::Dist;
use lmdp_lab::model::{Component, Lmdp};
use lmdp_lab::policy::{MarkovTable, Policy};

pub fn random_dist<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dist {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    Dist::normalized(w).unwrap()
}

/// Fully random LMDP with a reward profile scaled onto the unit
/// normalization.
pub fn random_lmdp(seed: u64, s: usize, a: usize, h: usize, l: usize) -> Lmdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (0..l)
        .map(|_| Component {
            init: random_dist(&mut rng, s),
            trans: (0..s)
                .map(|_| (0..a).map(|_| random_dist(&mut rng, s)).collect())
                .collect(),
        })
        .collect();
    let mut reward = vec![vec![vec![0.0; a]; s]; h];
    let mut max_sum = 0.0;
    for table in reward.iter_mut() {
        let mut step_max: f64 = 0.0;
        for row in table.iter_mut() {
            for r in row.iter_mut() {
                *r = rng.random::<f64>();
                step_max = step_max.max(*r);
            }
        }
        max_sum += step_max;
    }
    for table in reward.iter_mut() {
        for row in table.iter_mut() {
            for r in row.iter_mut() {
                *r /= max_sum;
            }
        }
    }
    Lmdp::new(s, a, h, Dist::uniform(l), components, reward).unwrap()
}

/// Random stochastic Markov policy.
pub fn random_markov(seed: u64, s: usize, a: usize, h: usize) -> MarkovTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MarkovTable {
        rows: (0..h)
            .map(|_| (0..s).map(|_| random_dist(&mut rng, a)).collect())
            .collect(),
    }
}

pub fn random_markov_policy(seed: u64, s: usize, a: usize, h: usize) -> Policy {
    Policy::Markov(random_markov(seed, s, a, h))
}

/// 99% chi-square critical value via the Wilson–Hilferty approximation
/// (adequate for the degrees of freedom used here).
pub fn chi2_critical_99(df: usize) -> f64 {
    let k = df as f64;
    let z = 2.3263478740408408; // Φ⁻¹(0.99)
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

//! Random δ-strongly separated instances for experiments and test corpora.
//!
//! Separation is built in rather than sampled and rejected: per `(s, a)`
//! cell, every component's transition row is `(1 − δ)·q + δ·e_{σ_m}` with a
//! shared random base row `q` and pairwise-distinct anchor states `σ_m`, so
//! every pair of rows has total variation exactly `δ`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{Component, Lmdp};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomSeparatedConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub n_components: usize,
    /// Exact pairwise transition-row separation.
    pub delta: f64,
}

pub fn random_separated_lmdp(cfg: &RandomSeparatedConfig, seed: u64) -> Result<Lmdp> {
    let (s_count, a_count, l) = (cfg.n_states, cfg.n_actions, cfg.n_components);
    if l > s_count {
        return Err(Error::Precondition(format!(
            "anchor construction needs L ≤ S, got L = {l}, S = {s_count}"
        )));
    }
    if !(0.0..=1.0).contains(&cfg.delta) {
        return Err(Error::Precondition(format!(
            "delta {} outside [0, 1]",
            cfg.delta
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rand_dist = |rng: &mut ChaCha8Rng, n: usize| {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        Dist::normalized(w).expect("positive mass")
    };

    // Per (s, a): a shared base row and a random injective anchor map.
    let mut rows = vec![vec![Vec::<Dist>::new(); a_count]; s_count];
    for s in 0..s_count {
        for a in 0..a_count {
            let base = rand_dist(&mut rng, s_count);
            let mut anchors: Vec<usize> = (0..s_count).collect();
            anchors.shuffle(&mut rng);
            rows[s][a] = (0..l)
                .map(|m| {
                    let w: Vec<f64> = (0..s_count)
                        .map(|t| {
                            (1.0 - cfg.delta) * base.get(t)
                                + if t == anchors[m] { cfg.delta } else { 0.0 }
                        })
                        .collect();
                    Dist::new(w).expect("convex combination of distributions")
                })
                .collect();
        }
    }
    let components = (0..l)
        .map(|m| Component {
            init: rand_dist(&mut rng, s_count),
            trans: (0..s_count)
                .map(|s| (0..a_count).map(|a| rows[s][a][m].clone()).collect())
                .collect(),
        })
        .collect();

    // Random reward profile scaled onto the unit normalization.
    let mut reward = vec![vec![vec![0.0; a_count]; s_count]; cfg.horizon];
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

    Lmdp::new(
        s_count,
        a_count,
        cfg.horizon,
        Dist::uniform(l),
        components,
        reward,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::min_pairwise_tv;

    #[test]
    fn separation_is_exact() {
        for seed in 0..20 {
            let cfg = RandomSeparatedConfig {
                n_states: 3,
                n_actions: 2,
                horizon: 5,
                n_components: 2,
                delta: 0.3,
            };
            let model = random_separated_lmdp(&cfg, seed).unwrap();
            let (sep, _) = min_pairwise_tv(&model).unwrap();
            assert!(
                (sep - 0.3).abs() < 1e-12,
                "seed {seed}: separation {sep} != 0.3"
            );
        }
    }

    #[test]
    fn rejects_more_components_than_states() {
        let cfg = RandomSeparatedConfig {
            n_states: 2,
            n_actions: 2,
            horizon: 3,
            n_components: 3,
            delta: 0.2,
        };
        assert!(random_separated_lmdp(&cfg, 0).is_err());
    }
}

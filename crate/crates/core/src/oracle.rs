//! Reference planners: per-component value iteration and the brute-force
//! optimal history-policy oracle.
//!
//! The oracle does backward dynamic programming on the full history tree
//! using exact posterior-mixture transitions
//! `ℙ(s′|τ̄_h, a) = Σ_m b(m|τ̄_h) 𝕋_m(s′|s_h, a)`, so its value dominates
//! every history-dependent policy. Every faster routine in the crate is
//! tested against it.

use crate::budget::Budget;
use crate::dist::Dist;
use crate::error::Result;
use crate::evaluate::prefix_likelihoods;
use crate::model::Lmdp;
use crate::policy::{HistoryTable, MarkovTable, Policy};

/// Result of finite-horizon backward DP on one component.
#[derive(Debug, Clone)]
pub struct ValueIteration {
    /// 0-based step the tables start at.
    pub from: usize,
    /// `v[h - from][s]`.
    pub v: Vec<Vec<f64>>,
    /// `q[h - from][s][a]`.
    pub q: Vec<Vec<Vec<f64>>>,
    /// Greedy actions, lowest action index on ties.
    pub actions: Vec<Vec<usize>>,
}

impl ValueIteration {
    pub fn policy(&self, n_actions: usize) -> MarkovTable {
        MarkovTable::from_actions(&self.actions, n_actions)
    }
}

/// Standard backward DP on component `m` from 0-based step `from` to the end
/// of the horizon:
/// `Q_h(s,a) = R_h(s,a) + E_{s′∼𝕋_m(·|s,a)}[V_{h+1}(s′)]`.
pub fn mdp_value_iteration(model: &Lmdp, m: usize, from: usize) -> ValueIteration {
    assert!(from < model.horizon(), "from-step outside the horizon");
    let (s_count, a_count, horizon) = (model.n_states(), model.n_actions(), model.horizon());
    let steps = horizon - from;
    let mut v = vec![vec![0.0; s_count]; steps];
    let mut q = vec![vec![vec![0.0; a_count]; s_count]; steps];
    let mut actions = vec![vec![0usize; s_count]; steps];
    for h in (from..horizon).rev() {
        let j = h - from;
        for s in 0..s_count {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..a_count {
                let mut val = model.reward_at(h, s, a);
                if h + 1 < horizon {
                    let (next, row) = (&v[j + 1], model.trans(m, s, a));
                    val += row
                        .iter()
                        .zip(next.iter())
                        .map(|(t, vn)| t * vn)
                        .sum::<f64>();
                }
                q[j][s][a] = val;
                if val > best {
                    best = val;
                    best_a = a;
                }
            }
            v[j][s] = best;
            actions[j][s] = best_a;
        }
    }
    ValueIteration {
        from,
        v,
        q,
        actions,
    }
}

/// Exact optimal value over all history-dependent policies.
///
/// The dense leaf count `S·(A·S)^(H−1)` must fit the budget; only reachable
/// prefixes are actually visited, and no policy is materialized.
pub fn brute_force_optimal_value(model: &Lmdp, budget: Budget) -> Result<f64> {
    budget.check(model.indexer().prefix_count(model.horizon()))?;
    let mut total = 0.0;
    for s1 in 0..model.n_states() {
        let alpha = prefix_likelihoods(model, &[s1], &[]);
        if alpha.iter().sum::<f64>() > 0.0 {
            total += optimal_backup(model, 0, s1, s1, &alpha, &mut None);
        }
    }
    Ok(total)
}

/// Exact optimal value together with an optimal deterministic history policy
/// (lowest action index on ties; unreachable prefixes get action 0).
pub fn brute_force_optimal(model: &Lmdp, budget: Budget) -> Result<(f64, Policy)> {
    let ix = model.indexer();
    budget.check(ix.prefix_count(model.horizon()))?;
    let mut levels: Vec<Vec<Dist>> = (1..=model.horizon())
        .map(|depth| {
            vec![Dist::point_mass(model.n_actions(), 0); ix.prefix_count(depth) as usize]
        })
        .collect();
    let mut total = 0.0;
    {
        let mut sink = Some(&mut levels);
        for s1 in 0..model.n_states() {
            let alpha = prefix_likelihoods(model, &[s1], &[]);
            if alpha.iter().sum::<f64>() > 0.0 {
                total += optimal_backup(model, 0, s1, s1, &alpha, &mut sink);
            }
        }
    }
    let policy = Policy::HistoryTable(HistoryTable {
        n_states: model.n_states(),
        n_actions: model.n_actions(),
        levels,
    });
    Ok((total, policy))
}

/// Unnormalized backup: returns `U(τ̄_h) = W(τ̄_h) · V*(τ̄_h)`, where
/// `W(τ̄_h) = Σ_m α_m` is the prefix mass under deterministic action replay.
/// Maximizing the unnormalized value per node is equivalent to maximizing the
/// conditional one and avoids dividing by the reach probability.
fn optimal_backup(
    model: &Lmdp,
    depth: usize,
    s: usize,
    code: usize,
    alpha: &[f64],
    levels: &mut Option<&mut Vec<Vec<Dist>>>,
) -> f64 {
    let mass: f64 = alpha.iter().sum();
    let horizon = model.horizon();
    let mut best = f64::NEG_INFINITY;
    let mut best_a = 0;
    for a in 0..model.n_actions() {
        let mut u = mass * model.reward_at(depth, s, a);
        if depth + 1 < horizon {
            for s_next in 0..model.n_states() {
                let next_alpha: Vec<f64> = alpha
                    .iter()
                    .enumerate()
                    .map(|(m, &w)| w * model.trans(m, s, a).get(s_next))
                    .collect();
                if next_alpha.iter().sum::<f64>() == 0.0 {
                    continue;
                }
                let child = model.indexer().child(code, a, s_next);
                u += optimal_backup(model, depth + 1, s_next, child, &next_alpha, levels);
            }
        }
        if u > best {
            best = u;
            best_a = a;
        }
    }
    if let Some(levels) = levels {
        levels[depth][code] = Dist::point_mass(model.n_actions(), best_a);
    }
    best
}

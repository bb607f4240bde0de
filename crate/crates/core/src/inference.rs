//! Latent-context inference: belief states, maximum-likelihood decoding and
//! decoding error.
//!
//! The decode score of component `m` for a prefix `τ̄_W` is
//! `log ρ(m) + log ν_m(s_1) + Σ_h log 𝕋_m(s_{h+1}|s_h, a_h)`; any zero
//! factor sends it to `−∞`. All routines here derive the score from the same
//! likelihood products as [`crate::evaluate::prefix_likelihoods`], so decode,
//! belief and the planner can never disagree on argmax tie-breaking.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::evaluate::{prefix_likelihoods, simulate_steps};
use crate::model::Lmdp;
use crate::policy::Policy;

/// Maximum-likelihood decode of a history prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Argmax of the score over supported components, lowest index on ties.
    pub index: usize,
    /// Per-component log scores; `−∞` off the mixing support or when any
    /// likelihood factor vanishes.
    pub log_scores: Vec<f64>,
    /// Set when the maximum is not unique, including the all-`−∞` case
    /// (prefix unreachable under every component). Diagnostics only; no
    /// control flow depends on it.
    pub tie: bool,
}

/// Decode from a precomputed likelihood vector `α` (strictly monotone in the
/// score, so the argmax and tie structure are identical).
pub(crate) fn decode_from_likelihoods(model: &Lmdp, alpha: &[f64]) -> (usize, bool) {
    let supp = model.supported_components();
    let mut best = f64::NEG_INFINITY;
    let mut best_m = supp[0];
    let mut tie = false;
    for &m in &supp {
        let a = alpha[m];
        if a > best {
            best = a;
            best_m = m;
            tie = false;
        } else if a == best && m != best_m {
            tie = true;
        }
    }
    if best == 0.0 {
        // Unreachable under every component: lowest supported index, flagged.
        (supp[0], true)
    } else {
        (best_m, tie)
    }
}

fn check_prefix(model: &Lmdp, states: &[usize], actions: &[usize]) -> Result<()> {
    if states.len() != actions.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "prefix with {} states and {} actions",
            states.len(),
            actions.len()
        )));
    }
    for &s in states {
        model.check_state(s)?;
    }
    for &a in actions {
        model.check_action(a)?;
    }
    Ok(())
}

/// Bayes posterior over the latent index given an observed prefix.
/// Errors when the prefix has zero probability under every component.
pub fn belief(model: &Lmdp, states: &[usize], actions: &[usize]) -> Result<Dist> {
    check_prefix(model, states, actions)?;
    let alpha = prefix_likelihoods(model, states, actions);
    if alpha.iter().sum::<f64>() == 0.0 {
        return Err(Error::UnreachablePrefix);
    }
    Dist::normalized(alpha)
}

/// Maximum-likelihood latent decode. Unreachable-for-all-components prefixes
/// are allowed and yield the lowest supported index with the tie flag set.
pub fn mle_decode(model: &Lmdp, states: &[usize], actions: &[usize]) -> Result<DecodeResult> {
    check_prefix(model, states, actions)?;
    let alpha = prefix_likelihoods(model, states, actions);
    let (index, tie) = decode_from_likelihoods(model, &alpha);
    let supp_mask: Vec<bool> = {
        let mut v = vec![false; model.n_components()];
        for m in model.supported_components() {
            v[m] = true;
        }
        v
    };
    let log_scores = alpha
        .iter()
        .enumerate()
        .map(|(m, &a)| if supp_mask[m] { a.ln() } else { f64::NEG_INFINITY })
        .collect();
    Ok(DecodeResult {
        index,
        log_scores,
        tie,
    })
}

/// Exact decoding error
/// `e_{θ,W}(π) = ℙ̃^π(m_θ(τ̄_W) ≠ m★)`, summed over all joint
/// `(m★, τ̄_W)` outcomes where the decode disagrees with the truth.
pub fn decoding_error_exact(
    model: &Lmdp,
    policy: &Policy,
    window: usize,
    budget: Budget,
) -> Result<f64> {
    if window == 0 || window > model.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "decode window {window} outside 1..={}",
            model.horizon()
        )));
    }
    budget.check(model.indexer().prefix_count(window))?;
    let mut total = 0.0;
    for (weight, arm) in policy.arms() {
        let mut states = Vec::with_capacity(window);
        let mut actions = Vec::new();
        for s1 in 0..model.n_states() {
            let alpha = prefix_likelihoods(model, &[s1], &[]);
            if alpha.iter().sum::<f64>() == 0.0 {
                continue;
            }
            states.push(s1);
            total += weight
                * decoding_error_rec(model, arm, window, &mut states, &mut actions, alpha, 1.0)?;
            states.pop();
        }
    }
    Ok(total)
}

fn decoding_error_rec(
    model: &Lmdp,
    policy: &Policy,
    window: usize,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    alpha: Vec<f64>,
    pweight: f64,
) -> Result<f64> {
    if states.len() == window {
        let (decoded, _) = decode_from_likelihoods(model, &alpha);
        let wrong: f64 = alpha
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != decoded)
            .map(|(_, &w)| w)
            .sum();
        return Ok(pweight * wrong);
    }
    let h = actions.len();
    let s = states[h];
    let adist = policy.action_dist(states, actions, model.n_actions())?;
    let mut total = 0.0;
    for a in 0..model.n_actions() {
        let pa = adist.get(a);
        if pa == 0.0 {
            continue;
        }
        actions.push(a);
        for s_next in 0..model.n_states() {
            let next_alpha: Vec<f64> = alpha
                .iter()
                .enumerate()
                .map(|(m, &w)| w * model.trans(m, s, a).get(s_next))
                .collect();
            if next_alpha.iter().sum::<f64>() == 0.0 {
                continue;
            }
            states.push(s_next);
            total += decoding_error_rec(
                model,
                policy,
                window,
                states,
                actions,
                next_alpha,
                pweight * pa,
            )?;
            states.pop();
        }
        actions.pop();
    }
    Ok(total)
}

/// Monte-Carlo decoding error with the latent label retained during
/// simulation. Returns `(estimate, standard error)`; deterministic given the
/// seed.
pub fn decoding_error_mc(
    model: &Lmdp,
    policy: &Policy,
    window: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples == 0 {
        return Err(Error::Precondition("n_samples must be at least 1".into()));
    }
    if window == 0 || window > model.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "decode window {window} outside 1..={}",
            model.horizon()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wrong = 0usize;
    for _ in 0..n_samples {
        let traj = simulate_steps(model, policy, window, &mut rng);
        let alpha = prefix_likelihoods(model, &traj.states, &traj.actions[..window - 1]);
        let (decoded, _) = decode_from_likelihoods(model, &alpha);
        if Some(decoded) != traj.latent {
            wrong += 1;
        }
    }
    let p = wrong as f64 / n_samples as f64;
    let stderr = (p * (1.0 - p) / n_samples as f64).sqrt();
    Ok((p, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Component;

    /// Two biased coins: component 0 lands state 1 w.p. 0.8, component 1
    /// w.p. 0.3, from either state and action.
    fn two_coin() -> Lmdp {
        let mk = |p: f64| {
            let row = Dist::new(vec![1.0 - p, p]).unwrap();
            Component {
                init: Dist::uniform(2),
                trans: vec![vec![row.clone(); 2]; 2],
            }
        };
        Lmdp::new(
            2,
            2,
            4,
            Dist::uniform(2),
            vec![mk(0.8), mk(0.3)],
            vec![vec![vec![0.0; 2]; 2]; 4],
        )
        .unwrap()
    }

    #[test]
    fn belief_with_identical_inits_is_the_prior() {
        let model = two_coin();
        let b = belief(&model, &[0], &[]).unwrap();
        assert_eq!(b.as_slice(), model.mixing().as_slice());
    }

    #[test]
    fn belief_matches_hand_bayes() {
        let model = two_coin();
        // Observe s_1 = 0 → s_2 = 1 under action 0.
        let b = belief(&model, &[0, 1], &[0]).unwrap();
        // Posterior ∝ (½·½·0.8, ½·½·0.3).
        let z = 0.8 + 0.3;
        assert!((b.get(0) - 0.8 / z).abs() < 1e-15);
        assert!((b.get(1) - 0.3 / z).abs() < 1e-15);
    }

    #[test]
    fn decode_agrees_with_belief_argmax() {
        let model = two_coin();
        let d = mle_decode(&model, &[0, 1, 1], &[0, 1]).unwrap();
        let b = belief(&model, &[0, 1, 1], &[0, 1]).unwrap();
        let argmax_belief = (0..2).max_by(|&i, &j| b.get(i).total_cmp(&b.get(j))).unwrap();
        assert_eq!(d.index, argmax_belief);
        assert!(!d.tie);
    }

    #[test]
    fn single_component_decodes_trivially() {
        let model = {
            let row = Dist::uniform(2);
            let comp = Component {
                init: Dist::uniform(2),
                trans: vec![vec![row.clone(); 2]; 2],
            };
            Lmdp::new(
                2,
                2,
                3,
                Dist::uniform(1),
                vec![comp],
                vec![vec![vec![0.0; 2]; 2]; 3],
            )
            .unwrap()
        };
        let d = mle_decode(&model, &[0, 1], &[1]).unwrap();
        assert_eq!(d.index, 0);
        let e = decoding_error_exact(&model, &Policy::uniform_markov(2, 2, 3), 2, Budget::default())
            .unwrap();
        assert_eq!(e, 0.0);
        let (est, _) =
            decoding_error_mc(&model, &Policy::uniform_markov(2, 2, 3), 2, 100, 0).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn unreachable_prefix_flags_tie() {
        // Make state 1 unreachable from state 0 in both components.
        let row = Dist::point_mass(2, 0);
        let comp = Component {
            init: Dist::point_mass(2, 0),
            trans: vec![vec![row.clone(); 2]; 2],
        };
        let model = Lmdp::new(
            2,
            2,
            3,
            Dist::uniform(2),
            vec![comp.clone(), comp],
            vec![vec![vec![0.0; 2]; 2]; 3],
        )
        .unwrap();
        assert!(belief(&model, &[0, 1], &[0]).is_err());
        let d = mle_decode(&model, &[0, 1], &[0]).unwrap();
        assert!(d.tie);
        assert_eq!(d.index, 0);
        assert!(d.log_scores.iter().all(|s| s.is_infinite() && *s < 0.0));
    }

    #[test]
    fn mc_estimator_is_consistent_with_exact() {
        let model = two_coin();
        let policy = Policy::uniform_markov(2, 2, 4);
        let exact = decoding_error_exact(&model, &policy, 3, Budget::default()).unwrap();
        let (est, stderr) = decoding_error_mc(&model, &policy, 3, 20_000, 9).unwrap();
        assert!(
            (est - exact).abs() <= 4.0 * stderr + 1e-9,
            "estimate {est} vs exact {exact} (stderr {stderr})"
        );
    }

    #[test]
    fn decoding_error_monotone_in_window() {
        let model = two_coin();
        let policy = Policy::uniform_markov(2, 2, 4);
        let mut prev = f64::INFINITY;
        for w in 1..=4 {
            let e = decoding_error_exact(&model, &policy, w, Budget::default()).unwrap();
            assert!(e <= prev + 1e-12, "e({w}) = {e} > e({}) = {prev}", w - 1);
            prev = e;
        }
    }
}

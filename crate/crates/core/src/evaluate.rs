//! Exact trajectory semantics: probabilities, distributions, values and
//! seeded simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::Budget;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::indexer::PrefixIndexer;
use crate::model::{Lmdp, Trajectory};
use crate::policy::Policy;

/// Per-component model likelihoods of a prefix `τ̄_h`:
/// `α_m = ρ(m) · ν_m(s_1) · Π_j 𝕋_m(s_{j+1}|s_j, a_j)` (no policy factor).
pub fn prefix_likelihoods(model: &Lmdp, states: &[usize], actions: &[usize]) -> Vec<f64> {
    debug_assert_eq!(states.len(), actions.len() + 1);
    let l = model.n_components();
    let mut alpha = vec![0.0; l];
    for m in 0..l {
        let mut w = model.mixing().get(m) * model.component(m).init.get(states[0]);
        for (j, &a) in actions.iter().enumerate() {
            if w == 0.0 {
                break;
            }
            w *= model.trans(m, states[j], a).get(states[j + 1]);
        }
        alpha[m] = w;
    }
    alpha
}

/// Exact probability of a full trajectory under the policy:
/// `Σ_m α_m(τ) · π(τ)`. Zero for unreachable trajectories.
pub fn traj_prob(model: &Lmdp, policy: &Policy, traj: &Trajectory) -> Result<f64> {
    traj.check_against(model)?;
    let alpha = prefix_likelihoods(model, &traj.states, &traj.actions[..traj.actions.len() - 1]);
    let model_prob: f64 = alpha.iter().sum();
    if model_prob == 0.0 {
        return Ok(0.0);
    }
    let weight = policy.trajectory_weight(&traj.states, &traj.actions, model.n_actions())?;
    Ok(model_prob * weight)
}

/// Dense exact distribution over full trajectories `τ_h` of a given length,
/// keyed by the mixed-radix code of `(s_1, a_1, …, s_h, a_h)`.
#[derive(Debug, Clone)]
pub struct TrajDist {
    pub upto: usize,
    indexer: PrefixIndexer,
    probs: Vec<f64>,
}

impl TrajDist {
    pub fn prob(&self, states: &[usize], actions: &[usize]) -> f64 {
        self.probs[self.indexer.encode_full(states, actions)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Trajectory, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(code, &p)| {
            let (states, actions) = self.indexer.decode_full(code, self.upto);
            (Trajectory::new(states, actions), p)
        })
    }

    /// Marginal distribution of the state sequence `s_{1:h}` obtained by
    /// summing out all actions.
    pub fn state_marginal(&self, states: &[usize]) -> f64 {
        let mut total = 0.0;
        let a = self.indexer.n_actions;
        let action_codes = a.pow(self.upto as u32);
        for mut acode in 0..action_codes {
            let mut actions = vec![0usize; self.upto];
            for h in (0..self.upto).rev() {
                actions[h] = acode % a;
                acode /= a;
            }
            total += self.prob(states, &actions);
        }
        total
    }
}

/// Exact enumeration of the trajectory distribution up to `upto` steps.
pub fn traj_dist(model: &Lmdp, policy: &Policy, upto: usize, budget: Budget) -> Result<TrajDist> {
    if upto == 0 || upto > model.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "trajectory length {upto} outside 1..={}",
            model.horizon()
        )));
    }
    let ix = model.indexer();
    budget.check(ix.full_count(upto))?;
    let mut probs = vec![0.0; ix.full_count(upto) as usize];
    for (weight, arm) in policy.arms() {
        let mut states = Vec::with_capacity(upto);
        let mut actions = Vec::with_capacity(upto);
        for s1 in 0..model.n_states() {
            let alpha = prefix_likelihoods(model, &[s1], &[]);
            if alpha.iter().sum::<f64>() == 0.0 {
                continue;
            }
            states.push(s1);
            fill_traj_dist(
                model, arm, upto, &ix, &mut states, &mut actions, alpha, weight, &mut probs,
            )?;
            states.pop();
        }
    }
    Ok(TrajDist {
        upto,
        indexer: ix,
        probs,
    })
}

#[allow(clippy::too_many_arguments)]
fn fill_traj_dist(
    model: &Lmdp,
    policy: &Policy,
    upto: usize,
    ix: &PrefixIndexer,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    alpha: Vec<f64>,
    weight: f64,
    probs: &mut [f64],
) -> Result<()> {
    let h = actions.len();
    let s = states[h];
    let adist = policy.action_dist(states, actions, model.n_actions())?;
    for a in 0..model.n_actions() {
        let pa = adist.get(a);
        if pa == 0.0 {
            continue;
        }
        actions.push(a);
        if states.len() == upto {
            let mass: f64 = alpha.iter().sum();
            probs[ix.encode_full(states, actions)] += weight * pa * mass;
        } else {
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
                fill_traj_dist(
                    model,
                    policy,
                    upto,
                    ix,
                    states,
                    actions,
                    next_alpha,
                    weight * pa,
                    probs,
                )?;
                states.pop();
            }
        }
        actions.pop();
    }
    Ok(())
}

/// Exact expected cumulative reward of a policy.
///
/// Open-loop and Markov policies are evaluated by a forward occupancy pass
/// over `(component, state)`; everything else walks the reachable history
/// tree under the budget. Mixtures split by linearity.
pub fn value(model: &Lmdp, policy: &Policy, budget: Budget) -> Result<f64> {
    let mut total = 0.0;
    for (weight, arm) in policy.arms() {
        let v = match arm {
            Policy::OpenLoop(_) | Policy::Markov(_) => value_forward(model, arm)?,
            _ => value_tree(model, arm, budget)?,
        };
        total += weight * v;
    }
    Ok(total)
}

fn value_forward(model: &Lmdp, policy: &Policy) -> Result<f64> {
    let (s_count, a_count, horizon) = (model.n_states(), model.n_actions(), model.horizon());
    let l = model.n_components();
    // occ[m][s]: joint probability of the component being m and the state
    // being s at the current step.
    let mut occ = vec![vec![0.0; s_count]; l];
    for m in 0..l {
        let rho = model.mixing().get(m);
        for s in 0..s_count {
            occ[m][s] = rho * model.component(m).init.get(s);
        }
    }
    let mut total = 0.0;
    for h in 0..horizon {
        // Action distribution per state; open-loop and Markov policies never
        // look beyond (h, s).
        let mut adists: Vec<Option<Dist>> = vec![None; s_count];
        for s in 0..s_count {
            if (0..l).any(|m| occ[m][s] > 0.0) {
                // The prefix passed here is a stand-in: only (h, s) matter
                // for the supported policy families.
                let mut states = vec![0; h + 1];
                states[h] = s;
                let actions = vec![0; h];
                adists[s] = Some(policy.action_dist(&states, &actions, a_count)?);
            }
        }
        for s in 0..s_count {
            let Some(adist) = &adists[s] else { continue };
            for a in 0..a_count {
                let pa = adist.get(a);
                if pa == 0.0 {
                    continue;
                }
                let mass: f64 = (0..l).map(|m| occ[m][s]).sum();
                total += mass * pa * model.reward_at(h, s, a);
            }
        }
        if h + 1 < horizon {
            let mut next = vec![vec![0.0; s_count]; l];
            for m in 0..l {
                for s in 0..s_count {
                    let w = occ[m][s];
                    if w == 0.0 {
                        continue;
                    }
                    let adist = adists[s].as_ref().expect("occupied state has actions");
                    for a in 0..a_count {
                        let pa = adist.get(a);
                        if pa == 0.0 {
                            continue;
                        }
                        for (s_next, t) in model.trans(m, s, a).iter().enumerate() {
                            if t > 0.0 {
                                next[m][s_next] += w * pa * t;
                            }
                        }
                    }
                }
            }
            occ = next;
        }
    }
    Ok(total)
}

fn value_tree(model: &Lmdp, policy: &Policy, budget: Budget) -> Result<f64> {
    budget.check(model.indexer().prefix_count(model.horizon()))?;
    let mut total = 0.0;
    let mut states = Vec::new();
    let mut actions = Vec::new();
    for s1 in 0..model.n_states() {
        let alpha = prefix_likelihoods(model, &[s1], &[]);
        if alpha.iter().sum::<f64>() == 0.0 {
            continue;
        }
        states.push(s1);
        total += value_tree_rec(model, policy, &mut states, &mut actions, alpha, 1.0)?;
        states.pop();
    }
    Ok(total)
}

fn value_tree_rec(
    model: &Lmdp,
    policy: &Policy,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    alpha: Vec<f64>,
    pweight: f64,
) -> Result<f64> {
    let h = actions.len();
    let s = states[h];
    let mass: f64 = alpha.iter().sum();
    let adist = policy.action_dist(states, actions, model.n_actions())?;
    let mut total = 0.0;
    for a in 0..model.n_actions() {
        let pa = adist.get(a);
        if pa == 0.0 {
            continue;
        }
        total += pweight * pa * mass * model.reward_at(h, s, a);
        if h + 1 < model.horizon() {
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
                total +=
                    value_tree_rec(model, policy, states, actions, next_alpha, pweight * pa)?;
                states.pop();
            }
            actions.pop();
        }
    }
    Ok(total)
}

/// Samples one episode: `m★ ∼ ρ`, `s_1 ∼ ν_{m★}`, then alternating policy
/// actions and `𝕋_{m★}` transitions. Deterministic given the seed.
pub fn simulate(model: &Lmdp, policy: &Policy, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(model, policy, &mut rng)
}

/// Simulation with a caller-owned RNG stream (for repeated episodes).
pub fn simulate_with_rng<R: Rng + ?Sized>(model: &Lmdp, policy: &Policy, rng: &mut R) -> Trajectory {
    simulate_steps(model, policy, model.horizon(), rng)
}

/// Simulates only the first `steps` steps (states `s_1..s_steps` and as many
/// actions).
pub fn simulate_steps<R: Rng + ?Sized>(
    model: &Lmdp,
    policy: &Policy,
    steps: usize,
    rng: &mut R,
) -> Trajectory {
    let resolved = policy.resolve_arms(rng);
    let latent = model.mixing().sample(rng);
    let mut states = Vec::with_capacity(steps);
    let mut actions = Vec::with_capacity(steps);
    states.push(model.component(latent).init.sample(rng));
    for h in 0..steps {
        let adist = resolved
            .action_dist(&states, &actions, model.n_actions())
            .expect("resolved policy yields an action distribution");
        let a = adist.sample(rng);
        actions.push(a);
        if h + 1 < steps {
            let s_next = model.trans(latent, states[h], a).sample(rng);
            states.push(s_next);
        }
    }
    let mut traj = Trajectory::new(states, actions);
    traj.latent = Some(latent);
    traj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Component;

    fn deterministic_chain(h: usize) -> Lmdp {
        // Three states in a line; action 0 advances, action 1 stays.
        let n = 3;
        let trans = (0..n)
            .map(|s| {
                vec![
                    Dist::point_mass(n, (s + 1).min(n - 1)),
                    Dist::point_mass(n, s),
                ]
            })
            .collect();
        let comp = Component {
            init: Dist::point_mass(n, 0),
            trans,
        };
        let mut reward = vec![vec![vec![0.0; 2]; n]; h];
        reward[h - 1][n - 1][0] = 1.0;
        reward[h - 1][n - 1][1] = 1.0;
        Lmdp::new(n, 2, h, Dist::uniform(1), vec![comp], reward).unwrap()
    }

    fn stay_swap() -> Lmdp {
        let stay = |s: usize| Dist::point_mass(2, s);
        let swap = |s: usize| Dist::point_mass(2, 1 - s);
        let mk = |f: &dyn Fn(usize) -> Dist| Component {
            init: Dist::point_mass(2, 0),
            trans: (0..2).map(|s| vec![f(s), f(s)]).collect(),
        };
        Lmdp::new(
            2,
            2,
            2,
            Dist::uniform(2),
            vec![mk(&stay), mk(&swap)],
            vec![vec![vec![0.0; 2]; 2]; 2],
        )
        .unwrap()
    }

    #[test]
    fn matching_open_loop_has_probability_one() {
        let model = deterministic_chain(3);
        let policy = Policy::OpenLoop(vec![0, 0, 0]);
        let traj = Trajectory::new(vec![0, 1, 2], vec![0, 0, 0]);
        assert_eq!(traj_prob(&model, &policy, &traj).unwrap(), 1.0);
    }

    #[test]
    fn open_loop_never_takes_other_actions() {
        let model = deterministic_chain(3);
        let policy = Policy::OpenLoop(vec![0, 0, 0]);
        let traj = Trajectory::new(vec![0, 1, 2], vec![0, 1, 0]);
        assert_eq!(traj_prob(&model, &policy, &traj).unwrap(), 0.0);
    }

    #[test]
    fn stay_trajectory_weights_half() {
        let model = stay_swap();
        let policy = Policy::OpenLoop(vec![0, 0]);
        let stay_traj = Trajectory::new(vec![0, 0], vec![0, 0]);
        assert_eq!(traj_prob(&model, &policy, &stay_traj).unwrap(), 0.5);
    }

    #[test]
    fn traj_dist_sums_to_one_and_agrees_with_traj_prob() {
        let model = stay_swap();
        let policy = Policy::uniform_markov(2, 2, 2);
        let dist = traj_dist(&model, &policy, 2, Budget::default()).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-10);
        for (traj, p) in dist.iter() {
            assert_eq!(traj_prob(&model, &policy, &traj).unwrap(), p);
        }
    }

    #[test]
    fn uniform_policy_on_single_state_model() {
        // 1 state, 2 actions, H = 2: four trajectories, each 0.25.
        let comp = Component {
            init: Dist::point_mass(1, 0),
            trans: vec![vec![Dist::point_mass(1, 0), Dist::point_mass(1, 0)]],
        };
        let model = Lmdp::new(
            1,
            2,
            2,
            Dist::uniform(1),
            vec![comp],
            vec![vec![vec![0.0; 2]; 1]; 2],
        )
        .unwrap();
        let dist = traj_dist(
            &model,
            &Policy::uniform_markov(1, 2, 2),
            2,
            Budget::default(),
        )
        .unwrap();
        assert_eq!(dist.probs().len(), 4);
        for &p in dist.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_reward_has_zero_value() {
        let model = stay_swap();
        let policy = Policy::uniform_markov(2, 2, 2);
        assert_eq!(value(&model, &policy, Budget::default()).unwrap(), 0.0);
    }

    #[test]
    fn chain_reaches_terminal_reward() {
        let model = deterministic_chain(3);
        let policy = Policy::OpenLoop(vec![0, 0, 0]);
        assert!((value(&model, &policy, Budget::default()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_and_tree_values_agree() {
        let model = stay_swap();
        let mut reward = vec![vec![vec![0.0; 2]; 2]; 2];
        reward[1][1][0] = 0.5;
        reward[1][1][1] = 0.25;
        let model = Lmdp::new(
            2,
            2,
            2,
            model.mixing().clone(),
            model.components().to_vec(),
            reward,
        )
        .unwrap();
        let policy = Policy::uniform_markov(2, 2, 2);
        let fast = value_forward(&model, &policy).unwrap();
        let slow = value_tree(&model, &policy, Budget::default()).unwrap();
        assert!((fast - slow).abs() < 1e-12);
    }

    #[test]
    fn value_is_affine_in_mixture_weights() {
        let model = deterministic_chain(3);
        let a = Policy::OpenLoop(vec![0, 0, 0]);
        let b = Policy::OpenLoop(vec![1, 1, 1]);
        let va = value(&model, &a, Budget::default()).unwrap();
        let vb = value(&model, &b, Budget::default()).unwrap();
        let mix = Policy::mixture(vec![(0.3, a), (0.7, b)]).unwrap();
        let vm = value(&model, &mix, Budget::default()).unwrap();
        assert!((vm - (0.3 * va + 0.7 * vb)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_model_and_policy_simulate_uniquely() {
        let model = deterministic_chain(3);
        let policy = Policy::OpenLoop(vec![0, 0, 0]);
        for seed in 0..5 {
            let t = simulate(&model, &policy, seed);
            assert_eq!(t.states, vec![0, 1, 2]);
            assert_eq!(t.actions, vec![0, 0, 0]);
            assert_eq!(t.latent, Some(0));
        }
    }

    #[test]
    fn simulate_is_deterministic_given_seed() {
        let model = stay_swap();
        let policy = Policy::uniform_markov(2, 2, 2);
        let a = simulate(&model, &policy, 42);
        let b = simulate(&model, &policy, 42);
        assert_eq!(a, b);
    }
}

//! Optimistic maximum-likelihood estimation over a finite explicit model
//! class.
//!
//! Each iteration keeps the models whose dataset log-likelihood is within
//! `β` of the best, picks the value-maximizing `(model, policy)` pair among
//! them subject to a decoding-error ceiling, executes the
//! exploration-transformed policy in the environment, and appends the
//! trajectory to the dataset. The output is the uniform mixture over the
//! chosen per-iteration policies.
//!
//! The idealized optimism step maximizes over *all* policies; here it
//! maximizes over an explicit per-model candidate set (planner outputs over
//! a window grid plus anything the caller supplies). That is the principal
//! fidelity gap of this implementation; it is sound whenever the candidate
//! set contains a near-optimal policy per model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::evaluate::{prefix_likelihoods, value};
use crate::inference::{decoding_error_exact, decoding_error_mc};
use crate::model::{Lmdp, Trajectory};
use crate::planner::plan;
use crate::policy::Policy;

/// A finite model class sharing `(S, A, H, L, R)`.
#[derive(Debug, Clone)]
pub struct ModelClass {
    models: Vec<Lmdp>,
}

impl ModelClass {
    pub fn new(models: Vec<Lmdp>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidModel("empty model class".into()))?;
        for (i, m) in models.iter().enumerate().skip(1) {
            let same = m.n_states() == first.n_states()
                && m.n_actions() == first.n_actions()
                && m.horizon() == first.horizon()
                && m.n_components() == first.n_components()
                && m.reward_tables() == first.reward_tables();
            if !same {
                return Err(Error::InvalidModel(format!(
                    "model {i} does not share (S, A, H, L, R) with model 0"
                )));
            }
        }
        Ok(ModelClass { models })
    }

    pub fn models(&self) -> &[Lmdp] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// The only thing a learner may do with the environment: run one episode.
pub trait Environment {
    fn rollout(&mut self, policy: &Policy) -> Trajectory;
}

/// Simulator-backed environment with its own seeded random stream. The
/// latent label is stripped from returned trajectories, so a learner cannot
/// peek at the hidden index.
pub struct SimEnvironment {
    model: Lmdp,
    rng: ChaCha8Rng,
}

impl SimEnvironment {
    pub fn new(model: Lmdp, seed: u64) -> Self {
        SimEnvironment {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Environment for SimEnvironment {
    fn rollout(&mut self, policy: &Policy) -> Trajectory {
        let mut traj = crate::evaluate::simulate_with_rng(&self.model, policy, &mut self.rng);
        traj.latent = None;
        traj
    }
}

/// OMLE parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmleConfig {
    /// Log-likelihood slack of the confidence set.
    pub beta: f64,
    /// Decoding-error ceiling for the optimism constraint.
    pub eps_s: f64,
    /// Decode window `W`.
    pub window: usize,
    /// Episode count `K`.
    pub episodes: usize,
    pub seed: u64,
    /// Budget for exact decoding-error evaluation; larger prefix trees fall
    /// back to Monte Carlo with the constraint checked conservatively at
    /// `estimate + 2·stderr`.
    pub budget: Budget,
}

impl OmleConfig {
    fn validate(&self, horizon: usize) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::Precondition("beta must be nonnegative".into()));
        }
        if !(self.eps_s > 0.0 && self.eps_s <= 1.0) {
            return Err(Error::Precondition("eps_s must lie in (0, 1]".into()));
        }
        if self.window == 0 || self.window > horizon {
            return Err(Error::Precondition(format!(
                "window {} outside 1..={horizon}",
                self.window
            )));
        }
        if self.episodes == 0 {
            return Err(Error::Precondition(
                "episode count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The finite-class confidence radius `β = 2 log|Θ| + 2 log(1/p) + 2`.
pub fn beta_for_finite_class(n_models: usize, failure_prob: f64) -> f64 {
    2.0 * (n_models as f64).ln() + 2.0 * (1.0 / failure_prob).ln() + 2.0
}

/// One dataset entry: the executed policy and the observed trajectory.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub policy: Policy,
    pub trajectory: Trajectory,
}

/// Dataset log-likelihood of a model: `Σ log ℙ_θ(τ)` over the entries,
/// using only the model factors (`Σ_m ρ ν Π𝕋`, marginal over the latent
/// index). The policy factor `π(τ)` is θ-independent and cancels in the
/// confidence-set comparison, so it is omitted. `−∞` if any trajectory has
/// zero model probability.
pub fn log_likelihood(model: &Lmdp, dataset: &[DatasetEntry]) -> f64 {
    dataset
        .iter()
        .map(|e| trajectory_log_prob(model, &e.trajectory))
        .sum()
}

fn trajectory_log_prob(model: &Lmdp, traj: &Trajectory) -> f64 {
    let alpha = prefix_likelihoods(
        model,
        &traj.states,
        &traj.actions[..traj.actions.len() - 1],
    );
    let p: f64 = alpha.iter().sum();
    p.ln() // ln(0) = −∞
}

/// One iteration record of the OMLE trace. Policies are referenced by their
/// index into the candidate pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmleRecord {
    pub iteration: usize,
    /// Models inside the confidence set at selection time.
    pub confidence_set: Vec<usize>,
    pub chosen_model: usize,
    pub chosen_policy: usize,
    pub optimistic_value: f64,
    /// Which arm of the exploration mixture was executed (0 is the
    /// `π ∘_W π_exp` arm, `u ≥ 1` the uniform-at-step-`u` arm).
    pub executed_arm: usize,
    pub trajectory: Trajectory,
    /// Running dataset log-likelihood per model, after this iteration.
    pub log_likelihoods: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OmleTrace {
    pub records: Vec<OmleRecord>,
}

impl OmleTrace {
    /// JSON-lines rendering, one record per iteration.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Everything `omle_run` produces: the uniform mixture over iteration
/// policies, the trace, and the candidate pool the trace indexes into.
#[derive(Debug, Clone)]
pub struct OmleOutcome {
    /// `Unif({π^1, …, π^K})`.
    pub policy: Policy,
    pub trace: OmleTrace,
    pub candidate_pool: Vec<Policy>,
    /// Per-iteration chosen pool index (duplicates trace data, but avoids a
    /// mixture walk when weighting per-policy values).
    pub chosen: Vec<usize>,
}

/// Exploration transform
/// `ϕ(π) = ½ (π ∘_W π_exp) + (1/2H) Σ_u φ_u(π)`:
/// one arm follows `π` below the window and `π_exp` (started fresh) from
/// step `W`; the other `H` arms follow `π` up to step `u`, play `Unif(𝒜)`
/// at step `u`, and hand over to `π_exp` afterwards.
pub fn explore_transform(pi: &Policy, pi_exp: &Policy, window: usize, horizon: usize) -> Policy {
    assert!(window >= 1 && window <= horizon);
    let mut arms = Vec::with_capacity(horizon + 1);
    arms.push((
        0.5,
        Policy::concat(window - 1, pi.clone(), pi_exp.clone()),
    ));
    let w_each = 0.5 / horizon as f64;
    for u in 1..=horizon {
        let arm = Policy::concat(
            u - 1,
            pi.clone(),
            Policy::concat(1, Policy::Uniform, pi_exp.clone()),
        );
        arms.push((w_each, arm));
    }
    Policy::Mixture(arms)
}

/// Default candidate generator: planner outputs across a window grid.
/// Windows above the horizon are skipped; duplicates are kept (they are
/// cheap and keep indices aligned with the grid).
pub fn planner_candidates(
    model: &Lmdp,
    windows: &[usize],
    budget: Budget,
) -> Result<Vec<Policy>> {
    let mut out = Vec::new();
    for &w in windows {
        if w == 0 || w > model.horizon() {
            continue;
        }
        out.push(plan(model, w, budget)?.to_policy());
    }
    if out.is_empty() {
        return Err(Error::Precondition(
            "candidate window grid produced no policies".into(),
        ));
    }
    Ok(out)
}

/// Decoding-error feasibility under the configured budget: exact when the
/// `W`-prefix tree fits, otherwise Monte Carlo with `10^4` episodes checked
/// conservatively at `estimate + 2·stderr`.
fn decoding_error_feasible(
    model: &Lmdp,
    policy: &Policy,
    cfg: &OmleConfig,
    mc_seed: u64,
) -> Result<bool> {
    let tree = model.indexer().prefix_count(cfg.window);
    if cfg.budget.check(tree).is_ok() {
        Ok(decoding_error_exact(model, policy, cfg.window, cfg.budget)? <= cfg.eps_s)
    } else {
        let (est, stderr) = decoding_error_mc(model, policy, cfg.window, 10_000, mc_seed)?;
        Ok(est + 2.0 * stderr <= cfg.eps_s)
    }
}

/// Runs OMLE for `cfg.episodes` iterations.
///
/// `candidates` maps each model of the class to its candidate policies; the
/// optimism step searches the union of all models' candidates. `pi_exp` is
/// the exploration policy of the transform; pass [`Policy::Uniform`] when
/// nothing better is known.
pub fn omle_run<E, F>(
    class: &ModelClass,
    env: &mut E,
    cfg: &OmleConfig,
    pi_exp: &Policy,
    candidates: F,
) -> Result<OmleOutcome>
where
    E: Environment,
    F: Fn(&Lmdp) -> Result<Vec<Policy>>,
{
    let horizon = class.models()[0].horizon();
    cfg.validate(horizon)?;
    let n_models = class.len();

    // The candidate pool is data-independent, as are the value and
    // feasibility tables; precompute everything once.
    let mut pool = Vec::new();
    for model in class.models() {
        pool.extend(candidates(model)?);
    }
    if pool.is_empty() {
        return Err(Error::Precondition("empty candidate pool".into()));
    }
    let mut values = vec![vec![0.0; pool.len()]; n_models];
    let mut feasible = vec![vec![false; pool.len()]; n_models];
    for (t, model) in class.models().iter().enumerate() {
        for (p, policy) in pool.iter().enumerate() {
            values[t][p] = value(model, policy, cfg.budget)?;
            let mc_seed = cfg
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add((t * pool.len() + p) as u64);
            feasible[t][p] = decoding_error_feasible(model, policy, cfg, mc_seed)?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut running_loglik = vec![0.0f64; n_models];
    let mut trace = OmleTrace::default();
    let mut chosen = Vec::with_capacity(cfg.episodes);

    for k in 0..cfg.episodes {
        let best_loglik = running_loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let confidence_set: Vec<usize> = (0..n_models)
            .filter(|&t| running_loglik[t] >= best_loglik - cfg.beta)
            .collect();

        let mut best: Option<(usize, usize, f64)> = None;
        for &t in &confidence_set {
            for p in 0..pool.len() {
                if !feasible[t][p] {
                    continue;
                }
                let v = values[t][p];
                if best.map_or(true, |(_, _, bv)| v > bv) {
                    best = Some((t, p, v));
                }
            }
        }
        let Some((theta_k, pi_k, v_k)) = best else {
            return Err(Error::Infeasible {
                iteration: k + 1,
                eps_s: cfg.eps_s,
            });
        };

        let explored = explore_transform(&pool[pi_k], pi_exp, cfg.window, horizon);
        let arms = explored.arms();
        let weights = Dist::new(arms.iter().map(|(w, _)| *w).collect())
            .expect("exploration mixture weights form a distribution");
        let arm = weights.sample(&mut rng);
        let executed = arms[arm].1.clone();
        let trajectory = env.rollout(&executed);

        for (t, model) in class.models().iter().enumerate() {
            running_loglik[t] += trajectory_log_prob(model, &trajectory);
        }

        trace.records.push(OmleRecord {
            iteration: k + 1,
            confidence_set,
            chosen_model: theta_k,
            chosen_policy: pi_k,
            optimistic_value: v_k,
            executed_arm: arm,
            trajectory,
            log_likelihoods: running_loglik.clone(),
        });
        chosen.push(pi_k);
    }

    let each = 1.0 / cfg.episodes as f64;
    let policy = Policy::Mixture(
        chosen
            .iter()
            .map(|&p| (each, pool[p].clone()))
            .collect(),
    );
    Ok(OmleOutcome {
        policy,
        trace,
        candidate_pool: pool,
        chosen,
    })
}

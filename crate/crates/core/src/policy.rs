//! Policies: the tagged union of every policy form the toolkit produces.
//!
//! A policy maps each observed history prefix `τ̄_h = (s_1, a_1, …, s_h)` to
//! a distribution over actions. Mixtures select one arm per episode; exact
//! evaluators handle them by linearity over [`Policy::arms`], while
//! simulation resolves arms up front via [`Policy::resolve_arms`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::indexer::PrefixIndexer;

/// Step-indexed stochastic Markov policy: `rows[h][s]` is `π_{h+1}(·|s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovTable {
    pub rows: Vec<Vec<Dist>>,
}

impl MarkovTable {
    pub fn uniform(n_states: usize, n_actions: usize, horizon: usize) -> Self {
        MarkovTable {
            rows: vec![vec![Dist::uniform(n_actions); n_states]; horizon],
        }
    }

    /// Deterministic table `actions[h][s]`.
    pub fn from_actions(actions: &[Vec<usize>], n_actions: usize) -> Self {
        MarkovTable {
            rows: actions
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&a| Dist::point_mass(n_actions, a))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Explicit per-depth history tables: `levels[h]` maps the mixed-radix code
/// of `τ̄_{h+1}` to an action distribution. Dense, so only suitable at desk
/// scale; the brute-force oracle emits this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryTable {
    pub n_states: usize,
    pub n_actions: usize,
    pub levels: Vec<Vec<Dist>>,
}

/// The compact short-memory form: a history-tree head below the window, a
/// decoder table on `τ̄_W`, and per-component Markov tails above it.
///
/// Executes `head[h][code(τ̄_{h+1})]` for `h < W−1` (0-based) and
/// `tails[decoder[code(τ̄_W)]][h−(W−1)][s_h]` for `h ≥ W−1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedPolicy {
    pub n_states: usize,
    pub n_actions: usize,
    /// Window `W ≥ 1`, counted in states seen by the decoder.
    pub window: usize,
    /// `head[h]` for `h ∈ 0..W−1`, keyed by prefix code of `τ̄_{h+1}`.
    pub head: Vec<Vec<usize>>,
    /// Keyed by prefix code of `τ̄_W`.
    pub decoder: Vec<usize>,
    /// `tails[m][j][s]` is the action at 0-based step `W−1+j` in state `s`
    /// once the decoder chose component `m`.
    pub tails: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatPolicy {
    /// 0-based step at which the tail takes over.
    pub switch: usize,
    pub head: Policy,
    pub tail: Policy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    /// Fixed action sequence `a_{1:H}`.
    OpenLoop(Vec<usize>),
    /// `Unif(𝒜)` at every step, for any horizon.
    Uniform,
    Markov(MarkovTable),
    HistoryTable(HistoryTable),
    Windowed(WindowedPolicy),
    /// Draw one arm per episode with the given weights.
    Mixture(Vec<(f64, Policy)>),
    /// `π ∘_h π′`: head for steps before `switch`, then the tail started
    /// fresh (the tail sees only the history from the switch on, re-based to
    /// its own step 0).
    Concat(Box<ConcatPolicy>),
}

impl Policy {
    pub fn uniform_markov(n_states: usize, n_actions: usize, horizon: usize) -> Self {
        Policy::Markov(MarkovTable::uniform(n_states, n_actions, horizon))
    }

    pub fn concat(switch: usize, head: Policy, tail: Policy) -> Self {
        Policy::Concat(Box::new(ConcatPolicy { switch, head, tail }))
    }

    /// Mixture weights must form a probability vector.
    pub fn mixture(arms: Vec<(f64, Policy)>) -> Result<Self> {
        Dist::new(arms.iter().map(|(w, _)| *w).collect())?;
        Ok(Policy::Mixture(arms))
    }

    /// Action distribution at 0-based step `h = states.len() − 1` given the
    /// full observed prefix. Errors on mixtures: exact evaluators must split
    /// them via [`Policy::arms`] first.
    pub fn action_dist(&self, states: &[usize], actions: &[usize], n_actions: usize) -> Result<Dist> {
        debug_assert_eq!(states.len(), actions.len() + 1);
        let h = actions.len();
        match self {
            Policy::OpenLoop(seq) => {
                let a = *seq.get(h).ok_or_else(|| {
                    Error::DimensionMismatch(format!("open-loop policy has no step {h}"))
                })?;
                Ok(Dist::point_mass(n_actions, a))
            }
            Policy::Uniform => Ok(Dist::uniform(n_actions)),
            Policy::Markov(table) => {
                let row = table.rows.get(h).ok_or_else(|| {
                    Error::DimensionMismatch(format!("Markov policy has no step {h}"))
                })?;
                Ok(row[states[h]].clone())
            }
            Policy::HistoryTable(t) => {
                let ix = PrefixIndexer::new(t.n_states, t.n_actions);
                let level = t.levels.get(h).ok_or_else(|| {
                    Error::DimensionMismatch(format!("history policy has no step {h}"))
                })?;
                Ok(level[ix.encode_prefix(states, actions)].clone())
            }
            Policy::Windowed(w) => {
                let ix = PrefixIndexer::new(w.n_states, w.n_actions);
                let a = if h < w.window - 1 {
                    w.head[h][ix.encode_prefix(states, actions)]
                } else {
                    let code =
                        ix.encode_prefix(&states[..w.window], &actions[..w.window - 1]);
                    let m = w.decoder[code];
                    w.tails[m][h - (w.window - 1)][states[h]]
                };
                Ok(Dist::point_mass(n_actions, a))
            }
            Policy::Mixture(_) => Err(Error::UnsupportedPolicy(
                "mixture arms must be evaluated separately".into(),
            )),
            Policy::Concat(c) => {
                if h < c.switch {
                    c.head.action_dist(states, actions, n_actions)
                } else {
                    c.tail
                        .action_dist(&states[c.switch..], &actions[c.switch..], n_actions)
                }
            }
        }
    }

    /// Flattens top-level mixtures into `(weight, arm)` pairs; a non-mixture
    /// policy is its own single arm.
    pub fn arms(&self) -> Vec<(f64, &Policy)> {
        match self {
            Policy::Mixture(arms) => arms
                .iter()
                .flat_map(|(w, p)| {
                    p.arms()
                        .into_iter()
                        .map(move |(w2, q)| (w * w2, q))
                })
                .collect(),
            other => vec![(1.0, other)],
        }
    }

    /// Draws every mixture arm (including arms nested inside concatenations)
    /// so the result is directly executable step by step.
    pub fn resolve_arms<R: Rng + ?Sized>(&self, rng: &mut R) -> Policy {
        match self {
            Policy::Mixture(arms) => {
                let weights = Dist::new(arms.iter().map(|(w, _)| *w).collect())
                    .expect("mixture weights form a distribution");
                let pick = weights.sample(rng);
                arms[pick].1.resolve_arms(rng)
            }
            Policy::Concat(c) => Policy::concat(
                c.switch,
                c.head.resolve_arms(rng),
                c.tail.resolve_arms(rng),
            ),
            other => other.clone(),
        }
    }

    /// Policy weight `π(τ) = Π_h π(a_h | τ̄_h)` of a realized trajectory;
    /// mixtures contribute the weighted sum of their arms' weights.
    pub fn trajectory_weight(
        &self,
        states: &[usize],
        actions: &[usize],
        n_actions: usize,
    ) -> Result<f64> {
        match self {
            Policy::Mixture(arms) => {
                let mut total = 0.0;
                for (w, p) in arms {
                    total += w * p.trajectory_weight(states, actions, n_actions)?;
                }
                Ok(total)
            }
            _ => {
                let mut weight = 1.0;
                for h in 0..actions.len() {
                    if weight == 0.0 {
                        break;
                    }
                    let d = self.action_dist(&states[..=h], &actions[..h], n_actions)?;
                    weight *= d.get(actions[h]);
                }
                Ok(weight)
            }
        }
    }
}

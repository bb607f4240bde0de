//! The LMDP representation and trajectories.
//!
//! An episode draws a latent component `m★ ∼ ρ`, an initial state
//! `s_1 ∼ ν_{m★}`, then alternates actions and transitions under `𝕋_{m★}`
//! for `H` steps; the episode ends right after action `a_H`. The latent draw
//! is never observed.
//!
//! Steps are 0-based in code (`h ∈ 0..H`); the usual 1-based step `h` of the
//! problem statement corresponds to index `h − 1` here.

use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::indexer::PrefixIndexer;

/// Slack on the reward normalization `Σ_h max_{s,a} R_h(s,a) ≤ 1`.
const REWARD_SUM_SLACK: f64 = 1e-9;

/// One MDP component: initial distribution and stationary transition kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// `ν_m`, over states.
    pub init: Dist,
    /// `trans[s][a]` is `𝕋_m(·|s, a)`, over states.
    pub trans: Vec<Vec<Dist>>,
}

impl Component {
    fn validate(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.init.len() != n_states {
            return Err(Error::InvalidModel(format!(
                "initial distribution over {} states, model has {n_states}",
                self.init.len()
            )));
        }
        if self.trans.len() != n_states {
            return Err(Error::InvalidModel(format!(
                "transition table has {} state rows, model has {n_states}",
                self.trans.len()
            )));
        }
        for (s, row) in self.trans.iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::InvalidModel(format!(
                    "state {s} has {} action rows, model has {n_actions}",
                    row.len()
                )));
            }
            for (a, d) in row.iter().enumerate() {
                if d.len() != n_states {
                    return Err(Error::InvalidModel(format!(
                        "transition row ({s}, {a}) has {} outcomes, model has {n_states}",
                        d.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A complete latent MDP description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lmdp {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    /// `ρ`, over components.
    mixing: Dist,
    components: Vec<Component>,
    /// `reward[h][s][a] = R_{h+1}(s, a)`, each in `[0, 1]`, with
    /// `Σ_h max_{s,a} R_h ≤ 1`.
    reward: Vec<Vec<Vec<f64>>>,
}

impl Lmdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        mixing: Dist,
        components: Vec<Component>,
        reward: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::InvalidModel(
                "state count, action count and horizon must be positive".into(),
            ));
        }
        if mixing.len() != components.len() {
            return Err(Error::InvalidModel(format!(
                "mixing over {} components, {} component models given",
                mixing.len(),
                components.len()
            )));
        }
        if components.is_empty() {
            return Err(Error::InvalidModel("no components".into()));
        }
        for c in &components {
            c.validate(n_states, n_actions)?;
        }
        if reward.len() != horizon {
            return Err(Error::InvalidModel(format!(
                "reward has {} step tables, horizon is {horizon}",
                reward.len()
            )));
        }
        let mut max_sum = 0.0;
        for (h, table) in reward.iter().enumerate() {
            if table.len() != n_states {
                return Err(Error::InvalidModel(format!(
                    "reward table at step {h} has {} state rows",
                    table.len()
                )));
            }
            let mut step_max: f64 = 0.0;
            for row in table {
                if row.len() != n_actions {
                    return Err(Error::InvalidModel(format!(
                        "reward row at step {h} has {} action entries",
                        row.len()
                    )));
                }
                for &r in row {
                    if !(0.0..=1.0).contains(&r) || !r.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "reward {r} at step {h} outside [0, 1]"
                        )));
                    }
                    step_max = step_max.max(r);
                }
            }
            max_sum += step_max;
        }
        if max_sum > 1.0 + REWARD_SUM_SLACK {
            return Err(Error::InvalidModel(format!(
                "Σ_h max_(s,a) R_h = {max_sum} exceeds the unit normalization"
            )));
        }
        Ok(Lmdp {
            n_states,
            n_actions,
            horizon,
            mixing,
            components,
            reward,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn mixing(&self) -> &Dist {
        &self.mixing
    }

    pub fn component(&self, m: usize) -> &Component {
        &self.components[m]
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Components with positive mixing weight, in index order.
    pub fn supported_components(&self) -> Vec<usize> {
        self.mixing.support().collect()
    }

    /// `𝕋_m(s′ | s, a)`.
    pub fn trans(&self, m: usize, s: usize, a: usize) -> &Dist {
        &self.components[m].trans[s][a]
    }

    /// `R_{h+1}(s, a)` for 0-based `h`.
    pub fn reward_at(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward[h][s][a]
    }

    pub fn reward_tables(&self) -> &Vec<Vec<Vec<f64>>> {
        &self.reward
    }

    /// Marginal distribution of the initial state, `Σ_m ρ(m) ν_m`.
    pub fn init_state_marginal(&self) -> Dist {
        let mut w = vec![0.0; self.n_states];
        for (m, c) in self.components.iter().enumerate() {
            let rho = self.mixing.get(m);
            for (s, v) in c.init.iter().enumerate() {
                w[s] += rho * v;
            }
        }
        Dist::normalized(w).expect("mixing and initial distributions have mass")
    }

    pub fn indexer(&self) -> PrefixIndexer {
        PrefixIndexer::new(self.n_states, self.n_actions)
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.n_states {
            return Err(Error::DimensionMismatch(format!(
                "state index {s} out of range 0..{}",
                self.n_states
            )));
        }
        Ok(())
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions {
            return Err(Error::DimensionMismatch(format!(
                "action index {a} out of range 0..{}",
                self.n_actions
            )));
        }
        Ok(())
    }
}

/// A realized episode: `H` states and `H` actions, plus the latent component
/// index when the trajectory came out of a simulator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    /// `m★`; present only for simulated trajectories.
    pub latent: Option<usize>,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Self {
        assert_eq!(states.len(), actions.len());
        Trajectory {
            states,
            actions,
            latent: None,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn check_against(&self, model: &Lmdp) -> Result<()> {
        if self.states.len() != model.horizon() || self.actions.len() != model.horizon() {
            return Err(Error::DimensionMismatch(format!(
                "trajectory of length {} against horizon {}",
                self.states.len(),
                model.horizon()
            )));
        }
        for &s in &self.states {
            model.check_state(s)?;
        }
        for &a in &self.actions {
            model.check_action(a)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn two_state_stay_swap() -> Lmdp {
        let stay = |s: usize| Dist::point_mass(2, s);
        let swap = |s: usize| Dist::point_mass(2, 1 - s);
        let comp = |f: &dyn Fn(usize) -> Dist| Component {
            init: Dist::point_mass(2, 0),
            trans: (0..2).map(|s| vec![f(s), f(s)]).collect(),
        };
        let reward = vec![vec![vec![0.0; 2]; 2]; 3];
        Lmdp::new(
            2,
            2,
            3,
            Dist::uniform(2),
            vec![comp(&stay), comp(&swap)],
            reward,
        )
        .unwrap()
    }

    #[test]
    fn validates_reward_normalization() {
        let m = two_state_stay_swap();
        let mut reward = m.reward_tables().clone();
        reward[0][0][0] = 0.7;
        reward[1][0][0] = 0.7;
        let out = Lmdp::new(
            2,
            2,
            3,
            m.mixing().clone(),
            m.components().to_vec(),
            reward,
        );
        assert!(matches!(out, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn init_marginal() {
        let m = two_state_stay_swap();
        let init = m.init_state_marginal();
        assert_eq!(init.as_slice(), &[1.0, 0.0]);
    }
}

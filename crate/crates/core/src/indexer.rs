//! Mixed-radix codes for history prefixes.
//!
//! A prefix `τ̄_h = (s_1, a_1, …, s_h)` is packed into a single index with
//! `s_1` most significant:
//!
//! ```text
//! code(τ̄_h) = ((…(s_1·A + a_1)·S + s_2)·A + a_2)… ·S + s_h
//! ```
//!
//! The planner, the brute-force oracle and exact trajectory distributions all
//! walk the same `(S·A)^h` trees; sharing the encoding keeps their tables
//! interchangeable.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixIndexer {
    pub n_states: usize,
    pub n_actions: usize,
}

impl PrefixIndexer {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        PrefixIndexer {
            n_states,
            n_actions,
        }
    }

    /// Number of prefixes `τ̄_h` with `h = depth` states: `S·(A·S)^(depth−1)`.
    pub fn prefix_count(&self, depth: usize) -> u128 {
        assert!(depth >= 1);
        let mut n = self.n_states as u128;
        for _ in 1..depth {
            n = n.saturating_mul((self.n_actions * self.n_states) as u128);
        }
        n
    }

    /// Number of full trajectories `τ_h = (s_1, a_1, …, s_h, a_h)`:
    /// `(S·A)^h`.
    pub fn full_count(&self, steps: usize) -> u128 {
        let mut n: u128 = 1;
        for _ in 0..steps {
            n = n.saturating_mul((self.n_states * self.n_actions) as u128);
        }
        n
    }

    /// Code of a prefix: `states.len() == actions.len() + 1`.
    pub fn encode_prefix(&self, states: &[usize], actions: &[usize]) -> usize {
        debug_assert_eq!(states.len(), actions.len() + 1);
        let mut code = states[0];
        for (a, s) in actions.iter().zip(&states[1..]) {
            code = (code * self.n_actions + a) * self.n_states + s;
        }
        code
    }

    /// Code of a full trajectory: `states.len() == actions.len()`.
    pub fn encode_full(&self, states: &[usize], actions: &[usize]) -> usize {
        debug_assert_eq!(states.len(), actions.len());
        self.encode_prefix(states, &actions[..actions.len() - 1]) * self.n_actions
            + actions[actions.len() - 1]
    }

    /// Extends a prefix code by one `(action, next state)` pair.
    pub fn child(&self, code: usize, action: usize, next_state: usize) -> usize {
        (code * self.n_actions + action) * self.n_states + next_state
    }

    /// Decodes a full-trajectory code of the given length.
    pub fn decode_full(&self, mut code: usize, steps: usize) -> (Vec<usize>, Vec<usize>) {
        let mut states = vec![0usize; steps];
        let mut actions = vec![0usize; steps];
        for h in (0..steps).rev() {
            actions[h] = code % self.n_actions;
            code /= self.n_actions;
            states[h] = code % self.n_states;
            code /= self.n_states;
        }
        (states, actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_full() {
        let ix = PrefixIndexer::new(3, 2);
        for code in 0..ix.full_count(3) as usize {
            let (s, a) = ix.decode_full(code, 3);
            assert_eq!(ix.encode_full(&s, &a), code);
        }
    }

    #[test]
    fn child_extends_prefix() {
        let ix = PrefixIndexer::new(3, 2);
        let code = ix.encode_prefix(&[2, 1], &[1]);
        assert_eq!(ix.child(code, 0, 2), ix.encode_prefix(&[2, 1, 2], &[1, 0]));
    }

    #[test]
    fn counts() {
        let ix = PrefixIndexer::new(3, 2);
        assert_eq!(ix.prefix_count(1), 3);
        assert_eq!(ix.prefix_count(2), 18);
        assert_eq!(ix.full_count(2), 36);
    }
}

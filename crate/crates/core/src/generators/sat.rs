//! 3SAT → LMDP embedding.
//!
//! A formula `Φ` with `n` variables and `N` clauses becomes an LMDP `M_Φ`
//! with one component per clause: actions spell out `w` assignment bits per
//! step, a component moves to the accepting state once its clause is
//! satisfied by some bit seen so far, and reward 1 is paid at the last step
//! in the accepting state. The optimal value is 1 iff `Φ` is satisfiable.
//!
//! The separated variant `M̃_Φ` doubles the components and attaches
//! antipodal observation distributions `μ_m^±` built from a symmetric sign
//! packing, making the instance `δ`-strongly separated while every
//! state-measurable value is preserved.

use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{Component, Lmdp};

use super::family::{greedy_packing, qx_dist, DELTA_BAR_FACTOR};

/// A CNF formula with at most three literals per clause. Literals are
/// nonzero signed variable indices (`3` means `x_3`, `-3` means `¬x_3`),
/// variables numbered `1..=n_vars`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatFormula {
    pub n_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl SatFormula {
    pub fn new(n_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::Precondition("formula needs variables".into()));
        }
        if clauses.is_empty() {
            return Err(Error::Precondition("formula needs clauses".into()));
        }
        for (i, clause) in clauses.iter().enumerate() {
            if clause.is_empty() || clause.len() > 3 {
                return Err(Error::Precondition(format!(
                    "clause {i} has {} literals, expected 1..=3",
                    clause.len()
                )));
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > n_vars {
                    return Err(Error::Precondition(format!(
                        "clause {i} has out-of-range literal {lit}"
                    )));
                }
            }
        }
        Ok(SatFormula { n_vars, clauses })
    }

    pub fn n_clauses(&self) -> usize {
        self.clauses.len()
    }

    fn clause_satisfied(&self, clause: &[i32], assignment: u64) -> bool {
        clause.iter().any(|&lit| {
            let var = lit.unsigned_abs() as usize - 1;
            let bit = assignment >> var & 1 == 1;
            (lit > 0) == bit
        })
    }

    pub fn satisfied_by(&self, assignment: u64) -> bool {
        self.clauses
            .iter()
            .all(|c| self.clause_satisfied(c, assignment))
    }

    /// Ground-truth satisfiability by exhausting all `2^n` assignments.
    pub fn exhaustive_satisfiable(&self) -> bool {
        assert!(self.n_vars <= 24, "exhaustive check capped at 24 variables");
        (0u64..1 << self.n_vars).any(|a| self.satisfied_by(a))
    }
}

/// The blocking set `𝒜_{m,h}`: actions (bit blocks) that satisfy clause `m`
/// at block `h` (1-based). Bit `j` of the action assigns variable
/// `w(h−1) + j + 1`.
fn satisfying_actions(phi: &SatFormula, w: usize, m: usize, h: usize) -> Vec<bool> {
    let clause = &phi.clauses[m];
    (0..1usize << w)
        .map(|a| {
            (0..w).any(|j| {
                let var = w * (h - 1) + j + 1;
                if var > phi.n_vars {
                    return false;
                }
                let bit = a >> j & 1 == 1;
                clause.iter().any(|&lit| {
                    lit.unsigned_abs() as usize == var && (lit > 0) == bit
                })
            })
        })
        .collect()
}

/// The non-separated embedding `M_Φ`: horizon `H = ⌈n/w⌉ + 1`, states
/// `{s_⊖^1, …, s_⊖^{H−1}, s_⊕}` (indices `0..H−1`, accepting state last),
/// actions `{0,1}^w`, one component per clause with uniform mixing, and
/// reward `1{s = s_⊕, h = H}`.
pub fn sat_to_lmdp(phi: &SatFormula, w: usize) -> Result<Lmdp> {
    if w == 0 {
        return Err(Error::Precondition("action bit width must be ≥ 1".into()));
    }
    if w > 16 {
        return Err(Error::Precondition("action bit width capped at 16".into()));
    }
    let horizon = phi.n_vars.div_ceil(w) + 1;
    let s_count = horizon; // H − 1 rejecting levels + the accepting state
    let accept = s_count - 1;
    let n_actions = 1usize << w;
    let level = |h: usize| h - 1; // s_⊖^h, h ∈ 1..=H−1

    let components = (0..phi.n_clauses())
        .map(|m| {
            let mut trans =
                vec![vec![Dist::point_mass(s_count, accept); n_actions]; s_count];
            for h in 1..horizon {
                let sat = satisfying_actions(phi, w, m, h);
                for (a, row) in trans[level(h)].iter_mut().enumerate() {
                    let next = if sat[a] {
                        accept
                    } else {
                        level((h + 1).min(horizon - 1))
                    };
                    *row = Dist::point_mass(s_count, next);
                }
            }
            // The accepting state is absorbing (the default rows above).
            Component {
                init: Dist::point_mass(s_count, level(1)),
                trans,
            }
        })
        .collect();

    let mut reward = vec![vec![vec![0.0; n_actions]; s_count]; horizon];
    for a in 0..n_actions {
        reward[horizon - 1][accept][a] = 1.0;
    }
    Lmdp::new(
        s_count,
        n_actions,
        horizon,
        Dist::uniform(phi.n_clauses()),
        components,
        reward,
    )
}

/// The `δ`-strongly separated embedding `M̃_Φ` over `𝒮 × [2d]` with
/// `d = ⌈11 ln(2N)⌉`: each clause component is doubled into
/// `M_m ⊗ μ_m^+` and `M_m ⊗ μ_m^−`, where `μ_m^± = Q_{±δ̄ x_m}` for a
/// symmetric sign packing `x_1..x_N` and `δ̄ = 4δ`.
pub fn sat_to_separated_lmdp(phi: &SatFormula, w: usize, delta: f64) -> Result<Lmdp> {
    if !(delta > 0.0) || delta > 0.25 {
        return Err(Error::Precondition(format!(
            "delta {delta} outside (0, 0.25] (δ̄ = 4δ must stay ≤ 1)"
        )));
    }
    let base = sat_to_lmdp(phi, w)?;
    let n_clauses = phi.n_clauses();
    // d = ⌈11 ln(2N)⌉.
    let d = ((11.0 * ((2 * n_clauses) as f64).ln()).ceil() as usize).max(1);
    let xs = greedy_packing(n_clauses, d, true)?;
    let delta_bar = DELTA_BAR_FACTOR * delta;

    let o_count = 2 * d;
    let s_count = base.n_states() * o_count;
    let mut components = Vec::with_capacity(2 * n_clauses);
    for (m, x) in xs.iter().enumerate() {
        for sign in [1.0, -1.0] {
            let scaled: Vec<f64> = x.iter().map(|&v| sign * delta_bar * v).collect();
            let mu = qx_dist(&scaled)?;
            components.push(super::augment::augment_mdp(&base, m, &mu));
        }
    }
    let reward = (0..base.horizon())
        .map(|h| {
            (0..s_count)
                .map(|so| {
                    let s = so / o_count;
                    (0..base.n_actions())
                        .map(|a| base.reward_at(h, s, a))
                        .collect()
                })
                .collect()
        })
        .collect();
    Lmdp::new(
        s_count,
        base.n_actions(),
        base.horizon(),
        Dist::uniform(2 * n_clauses),
        components,
        reward,
    )
}

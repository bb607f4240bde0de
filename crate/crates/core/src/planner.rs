//! Short-memory planning with context inference.
//!
//! Three phases over a window `W`:
//! 1. per-component backward DP for steps at and above the window
//!    (`mdp_value_iteration`), yielding tails `π_{m,h}` and tables
//!    `V̂_{m,h}`, `Q̂_{m,h}`;
//! 2. the stitch at depth `W`: decode `m = m(τ̄_W)` by maximum likelihood
//!    and set `V̂(τ̄_W) = ℙ(m|τ̄_W) · V̂_{m,W}(s_W)`, where `ℙ(m|τ̄_W)` is
//!    the exact Bayes posterior mass of the decoded index;
//! 3. a history-tree backward DP below the window with exact conditional
//!    transitions `ℙ(s′|τ̄_h, a) = Σ_m b(m|τ̄_h) 𝕋_m(s′|s_h, a)`.
//!
//! The stitch deliberately keeps only the decoded index's posterior mass, so
//! `V̂` under-estimates; realized value is certified to dominate
//! `E[V̂(τ̄_1)]`.

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::evaluate::prefix_likelihoods;
use crate::inference::decode_from_likelihoods;
use crate::model::Lmdp;
use crate::oracle::mdp_value_iteration;
use crate::policy::{Policy, WindowedPolicy};
use crate::separation::certified_varpi;

/// Planner output: the executable policy plus its value certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerPolicy {
    pub window: usize,
    /// The executable short-memory policy (head + decoder + tails).
    pub policy: WindowedPolicy,
    /// `V̂_{m,h}(s)` as `component_values[m][h − (W−1)][s]` for 0-based
    /// `h ∈ W−1..H`.
    pub component_values: Vec<Vec<Vec<f64>>>,
    /// `Q̂_{m,h}(s, a)`, same indexing; kept behind a flag since the planner
    /// itself only needs `V̂`.
    pub component_q: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    /// `V̂(τ̄_h)` keyed by prefix code, for depths `1..=W`
    /// (`head_values[h]` is depth `h+1`). Unreachable prefixes carry 0.
    pub head_values: Vec<Vec<f64>>,
    /// `Q̂(τ̄_h, a)` for depths below the window, flag-gated.
    pub head_q: Option<Vec<Vec<Vec<f64>>>>,
    /// `E_{s_1}[V̂(τ̄_1)]`: the certified lower estimate of the realized
    /// value.
    pub value_estimate: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlanOptions {
    /// Keep the `Q̂` tables (both per-component and head) for debugging.
    pub keep_q_tables: bool,
}

/// Runs the three planning phases with window `w` (`1 ≤ w ≤ H`). The head
/// tree has `S·(A·S)^(w−1)` nodes at the window layer; that count must fit
/// the budget.
pub fn plan(model: &Lmdp, w: usize, budget: Budget) -> Result<PlannerPolicy> {
    plan_with_options(model, w, budget, PlanOptions::default())
}

pub fn plan_with_options(
    model: &Lmdp,
    w: usize,
    budget: Budget,
    options: PlanOptions,
) -> Result<PlannerPolicy> {
    if w == 0 || w > model.horizon() {
        return Err(Error::Precondition(format!(
            "window {w} outside 1..={}",
            model.horizon()
        )));
    }
    let ix = model.indexer();
    budget.check(ix.prefix_count(w))?;
    let (s_count, a_count, l) = (model.n_states(), model.n_actions(), model.n_components());

    // Phase 1: per-component tails from 0-based step w−1.
    let mut tails = Vec::with_capacity(l);
    let mut component_values = Vec::with_capacity(l);
    let mut component_q = Vec::with_capacity(l);
    for m in 0..l {
        let vi = mdp_value_iteration(model, m, w - 1);
        tails.push(vi.actions);
        component_values.push(vi.v);
        component_q.push(vi.q);
    }

    // Phases 2 and 3 share one depth-first walk over reachable prefixes.
    let mut head: Vec<Vec<usize>> = (1..w)
        .map(|depth| vec![0usize; ix.prefix_count(depth) as usize])
        .collect();
    let mut decoder = vec![model.supported_components()[0]; ix.prefix_count(w) as usize];
    let mut head_values: Vec<Vec<f64>> = (1..=w)
        .map(|depth| vec![0.0; ix.prefix_count(depth) as usize])
        .collect();
    let mut head_q = options.keep_q_tables.then(|| {
        (1..w)
            .map(|depth| vec![vec![0.0; a_count]; ix.prefix_count(depth) as usize])
            .collect::<Vec<_>>()
    });

    let mut ctx = PlanCtx {
        model,
        window: w,
        component_values: &component_values,
        head: &mut head,
        decoder: &mut decoder,
        head_values: &mut head_values,
        head_q: &mut head_q,
    };
    let mut value_estimate = 0.0;
    for s1 in 0..s_count {
        let alpha = prefix_likelihoods(model, &[s1], &[]);
        let mass: f64 = alpha.iter().sum();
        if mass == 0.0 {
            continue;
        }
        let v = plan_backup(&mut ctx, 1, s1, s1, &alpha);
        value_estimate += v;
    }

    let policy = WindowedPolicy {
        n_states: s_count,
        n_actions: a_count,
        window: w,
        head,
        decoder,
        tails,
    };
    Ok(PlannerPolicy {
        window: w,
        policy,
        component_values,
        component_q: options.keep_q_tables.then_some(component_q),
        head_values,
        head_q,
        value_estimate,
    })
}

struct PlanCtx<'a> {
    model: &'a Lmdp,
    window: usize,
    component_values: &'a [Vec<Vec<f64>>],
    head: &'a mut Vec<Vec<usize>>,
    decoder: &'a mut Vec<usize>,
    head_values: &'a mut Vec<Vec<f64>>,
    head_q: &'a mut Option<Vec<Vec<Vec<f64>>>>,
}

/// Returns the unnormalized stitched value `W(τ̄_h)·V̂(τ̄_h)`, writing the
/// decoder, head actions and normalized `V̂` tables along the way.
fn plan_backup(ctx: &mut PlanCtx, depth: usize, s: usize, code: usize, alpha: &[f64]) -> f64 {
    let model = ctx.model;
    let mass: f64 = alpha.iter().sum();
    if depth == ctx.window {
        let (decoded, _) = decode_from_likelihoods(model, alpha);
        ctx.decoder[code] = decoded;
        // ℙ(m|τ̄_W)·V̂_{m,W}(s_W), unnormalized by the prefix mass:
        // α_m·V̂_{m,W}(s_W).
        let u = alpha[decoded] * ctx.component_values[decoded][0][s];
        ctx.head_values[depth - 1][code] = if mass > 0.0 { u / mass } else { 0.0 };
        return u;
    }
    let h = depth - 1; // 0-based step index of the action taken at this node
    let mut best = f64::NEG_INFINITY;
    let mut best_a = 0;
    for a in 0..model.n_actions() {
        let mut u = mass * model.reward_at(h, s, a);
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
            u += plan_backup(ctx, depth + 1, s_next, child, &next_alpha);
        }
        if let Some(q) = ctx.head_q.as_mut() {
            q[depth - 1][code][a] = if mass > 0.0 { u / mass } else { 0.0 };
        }
        if u > best {
            best = u;
            best_a = a;
        }
    }
    ctx.head[depth - 1][code] = best_a;
    ctx.head_values[depth - 1][code] = if mass > 0.0 { best / mass } else { 0.0 };
    best
}

/// Window selection per the planning contract: the minimal `W ≤ H` with
/// `ϖ(W) ≥ log(L/ε)` under the all-policy certified profile, or `None` when
/// no window up to the horizon is certified.
///
/// A single supported component decodes trivially, so the window is 1.
pub fn choose_window(model: &Lmdp, epsilon: f64) -> Result<Option<usize>> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Precondition(format!(
            "epsilon {epsilon} outside (0, 1]"
        )));
    }
    if model.supported_components().len() <= 1 {
        return Ok(Some(1));
    }
    let target = (model.n_components() as f64 / epsilon).ln();
    let profile = certified_varpi(model, model.horizon())?;
    Ok(profile.inverse(target))
}

/// Converts the planner output into the general policy union for
/// evaluation, simulation and transforms.
impl PlannerPolicy {
    pub fn to_policy(&self) -> Policy {
        Policy::Windowed(self.policy.clone())
    }
}

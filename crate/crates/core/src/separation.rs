//! Separation diagnostics: strong separation, N-step decodability, and
//! certified Bhattacharyya separation profiles over trajectory
//! distributions.
//!
//! `𝕄_{m,h}(π, s)` denotes the distribution of `(a_1, s_2, …, a_{h−1}, s_h)`
//! induced by running `π` in component `m` from state `s`. Profiles certify
//! lower bounds on `D_B(𝕄_{m,h}, 𝕄_{l,h})`, either under one Markov policy
//! or minimized over all policies (the minimizing policy can be taken
//! deterministic Markov, which is what the backward recursion exploits; the
//! tiny-scale cross-check against exhaustive policy enumeration lives in the
//! tests).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Lmdp;
use crate::policy::MarkovTable;

/// Scope of a certified separation profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationScope {
    /// Certified under one fixed policy.
    UnderPolicy,
    /// Certified as a minimum over all policies and start states.
    AllPolicies,
}

/// Per-step lower bounds `ϖ(1..=h_max)` on trajectory-level Bhattacharyya
/// divergence. Values may be `+∞` (disjoint supports). Nondecreasing in `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationProfile {
    values: Vec<f64>,
    pub scope: SeparationScope,
}

impl SeparationProfile {
    pub fn new(values: Vec<f64>, scope: SeparationScope) -> Self {
        SeparationProfile { values, scope }
    }

    pub fn h_max(&self) -> usize {
        self.values.len()
    }

    /// `ϖ(h)` for 1-based `h ≤ h_max`.
    pub fn varpi(&self, h: usize) -> f64 {
        self.values[h - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ϖ⁻¹(x) = min{h : ϖ(h) ≥ x}`, or `None` when unattained within
    /// `h_max` (a partial certificate: the profile is only known up to
    /// `h_max`).
    pub fn inverse(&self, x: f64) -> Option<usize> {
        self.values.iter().position(|&v| v >= x).map(|i| i + 1)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

/// The argument of a strong-separation minimum: the component pair, state
/// and action achieving the smallest transition-row divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub first: usize,
    pub second: usize,
    pub state: usize,
    pub action: usize,
    pub divergence: f64,
}

/// `−log(bc)` with disjoint supports mapped to `+∞` and `−0.0`/float noise
/// clamped to an exact zero (divergences are nonnegative by construction).
fn neg_log_bc(bc: f64) -> f64 {
    if bc == 0.0 {
        return f64::INFINITY;
    }
    let db = -bc.ln();
    if db.abs() < 1e-12 {
        0.0
    } else {
        db
    }
}

fn supported_pairs(model: &Lmdp) -> Result<Vec<(usize, usize)>> {
    let supp = model.supported_components();
    if supp.len() < 2 {
        return Err(Error::Precondition(
            "separation needs at least two supported components".into(),
        ));
    }
    let mut pairs = Vec::new();
    for (i, &m) in supp.iter().enumerate() {
        for &l in &supp[i + 1..] {
            pairs.push((m, l));
        }
    }
    Ok(pairs)
}

/// Minimum over supported component pairs, states and actions of the total
/// variation between transition rows. The model is `δ`-strongly separated
/// iff the returned value is at least `δ`.
pub fn min_pairwise_tv(model: &Lmdp) -> Result<(f64, SeparationWitness)> {
    let pairs = supported_pairs(model)?;
    let mut best: Option<SeparationWitness> = None;
    for &(m, l) in &pairs {
        for s in 0..model.n_states() {
            for a in 0..model.n_actions() {
                let d = crate::divergence::tv(model.trans(m, s, a), model.trans(l, s, a))?;
                if best.as_ref().map_or(true, |b| d < b.divergence) {
                    best = Some(SeparationWitness {
                        first: m,
                        second: l,
                        state: s,
                        action: a,
                        divergence: d,
                    });
                }
            }
        }
    }
    let w = best.expect("at least one pair");
    Ok((w.divergence, w))
}

/// N-step decodability: every length-`N` trajectory realizable (with
/// positive transition probability) from any start state is consistent with
/// at most one supported component.
///
/// Implemented as a reachability sweep over `(state, consistent-component
/// set)` nodes; the zero tests are exact, so generators should emit exact
/// zeros for impossible transitions.
pub fn is_n_step_decodable(model: &Lmdp, n_steps: usize) -> bool {
    assert!(n_steps >= 1 && n_steps <= model.horizon());
    let supp = model.supported_components();
    if supp.len() <= 1 {
        return true;
    }
    assert!(
        model.n_components() <= 64,
        "component masks are limited to 64 components"
    );
    let full_mask: u64 = supp.iter().map(|&m| 1u64 << m).sum();
    let nodes = model.n_states();
    // frontier[s] holds the set of component-masks realizable by some
    // trajectory ending at s.
    let mut frontier: Vec<Vec<u64>> = vec![vec![full_mask]; nodes];
    for _depth in 2..=n_steps {
        let mut next: Vec<Vec<u64>> = vec![Vec::new(); nodes];
        for s in 0..nodes {
            for &mask in &frontier[s] {
                for a in 0..model.n_actions() {
                    for s_next in 0..nodes {
                        let mut out = 0u64;
                        let mut bits = mask;
                        while bits != 0 {
                            let m = bits.trailing_zeros() as usize;
                            bits &= bits - 1;
                            if model.trans(m, s, a).get(s_next) > 0.0 {
                                out |= 1 << m;
                            }
                        }
                        if out != 0 && !next[s_next].contains(&out) {
                            next[s_next].push(out);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    frontier
        .iter()
        .flatten()
        .all(|mask| mask.count_ones() <= 1)
}

/// Exact `D_B(𝕄_{m,h}(π, s), 𝕄_{l,h}(π, s))` for `h = 1..=h_max` under a
/// Markov policy, via the vector recursion
/// `v_{j+1}[s′] = Σ_s v_j[s] Σ_a π_j(a|s) √(𝕋_m(s′|s,a) 𝕋_l(s′|s,a))`
/// with `D_B(h) = −log Σ_s v_h[s]`. No trajectory enumeration.
pub fn db_profile_markov(
    model: &Lmdp,
    policy: &MarkovTable,
    m: usize,
    l: usize,
    s_start: usize,
    h_max: usize,
) -> Result<SeparationProfile> {
    if m == l {
        return Err(Error::Precondition("component pair must differ".into()));
    }
    if h_max > model.horizon() {
        return Err(Error::Precondition(format!(
            "profile horizon {h_max} exceeds the model horizon {}",
            model.horizon()
        )));
    }
    model.check_state(s_start)?;
    let s_count = model.n_states();
    let mut v = vec![0.0; s_count];
    v[s_start] = 1.0;
    let mut values = Vec::with_capacity(h_max);
    values.push(0.0); // h = 1: the trajectory is empty.
    for j in 0..h_max.saturating_sub(1) {
        let mut next = vec![0.0; s_count];
        for s in 0..s_count {
            if v[s] == 0.0 {
                continue;
            }
            let row = &policy.rows[j][s];
            for a in 0..model.n_actions() {
                let pa = row.get(a);
                if pa == 0.0 {
                    continue;
                }
                let (tm, tl) = (model.trans(m, s, a), model.trans(l, s, a));
                for s_next in 0..s_count {
                    let g = (tm.get(s_next) * tl.get(s_next)).sqrt();
                    if g > 0.0 {
                        next[s_next] += v[s] * pa * g;
                    }
                }
            }
        }
        v = next;
        let bc: f64 = v.iter().sum();
        values.push(neg_log_bc(bc));
    }
    Ok(SeparationProfile::new(values, SeparationScope::UnderPolicy))
}

/// Minimum over all policies of `D_B(𝕄_{m,h}, 𝕄_{l,h})` from a start
/// state, via the backward recursion
/// `u_j(s) = max_a Σ_{s′} √(𝕋_m(s′|s,a) 𝕋_l(s′|s,a)) · u_{j+1}(s′)`
/// with `u_h ≡ 1`; the result is `−log u_1(s_start)`.
pub fn min_db_over_policies(
    model: &Lmdp,
    m: usize,
    l: usize,
    s_start: usize,
    h: usize,
) -> Result<f64> {
    if m == l {
        return Err(Error::Precondition("component pair must differ".into()));
    }
    model.check_state(s_start)?;
    let u = max_bc_vector(model, m, l, h);
    Ok(neg_log_bc(u[s_start]))
}

/// `u_1` of the backward recursion: per start state, the maximum achievable
/// Bhattacharyya coefficient between the two components' `h`-step trajectory
/// distributions.
fn max_bc_vector(model: &Lmdp, m: usize, l: usize, h: usize) -> Vec<f64> {
    let s_count = model.n_states();
    let mut u = vec![1.0; s_count];
    for _ in 0..h.saturating_sub(1) {
        let mut next = vec![0.0; s_count];
        for s in 0..s_count {
            let mut best = 0.0f64;
            for a in 0..model.n_actions() {
                let (tm, tl) = (model.trans(m, s, a), model.trans(l, s, a));
                let mut acc = 0.0;
                for s_next in 0..s_count {
                    let g = (tm.get(s_next) * tl.get(s_next)).sqrt();
                    if g > 0.0 {
                        acc += g * u[s_next];
                    }
                }
                best = best.max(acc);
            }
            next[s] = best;
        }
        u = next;
    }
    u
}

/// The all-policy separation profile
/// `ϖ(h) = min_{m≠l ∈ supp(ρ)} min_s min_π D_B(𝕄_{m,h}(π,s), 𝕄_{l,h}(π,s))`.
pub fn certified_varpi(model: &Lmdp, h_max: usize) -> Result<SeparationProfile> {
    let pairs = supported_pairs(model)?;
    let s_count = model.n_states();
    let mut values = vec![f64::INFINITY; h_max];
    values[0] = 0.0; // h = 1 compares empty trajectories.
    for &(m, l) in &pairs {
        let mut u = vec![1.0; s_count];
        for h in 2..=h_max {
            let mut next = vec![0.0; s_count];
            for s in 0..s_count {
                let mut best = 0.0f64;
                for a in 0..model.n_actions() {
                    let (tm, tl) = (model.trans(m, s, a), model.trans(l, s, a));
                    let mut acc = 0.0;
                    for s_next in 0..s_count {
                        let g = (tm.get(s_next) * tl.get(s_next)).sqrt();
                        if g > 0.0 {
                            acc += g * u[s_next];
                        }
                    }
                    best = best.max(acc);
                }
                next[s] = best;
            }
            u = next;
            let max_bc = u.iter().fold(0.0f64, |acc, &x| acc.max(x));
            let db = neg_log_bc(max_bc);
            if db < values[h - 1] {
                values[h - 1] = db;
            }
        }
    }
    Ok(SeparationProfile::new(values, SeparationScope::AllPolicies))
}

/// Numerical rank of the `S × (S·A)` transition matrix of component `m`:
/// singular values above `1e-9 · σ_max`.
pub fn component_rank(model: &Lmdp, m: usize) -> usize {
    let (s_count, a_count) = (model.n_states(), model.n_actions());
    let mat = nalgebra::DMatrix::from_fn(s_count, s_count * a_count, |s_next, col| {
        let (s, a) = (col / a_count, col % a_count);
        model.trans(m, s, a).get(s_next)
    });
    let svd = mat.svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > 1e-9 * sigma_max)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dist;
    use crate::model::Component;

    fn model_from_rows(rows: Vec<Vec<Vec<Dist>>>, h: usize) -> Lmdp {
        let n = rows[0].len();
        let a = rows[0][0].len();
        let components = rows
            .into_iter()
            .map(|trans| Component {
                init: Dist::uniform(n),
                trans,
            })
            .collect::<Vec<_>>();
        let l = components.len();
        Lmdp::new(
            n,
            a,
            h,
            Dist::uniform(l),
            components,
            vec![vec![vec![0.0; a]; n]; h],
        )
        .unwrap()
    }

    fn identical_pair() -> Lmdp {
        let row = Dist::new(vec![0.5, 0.5]).unwrap();
        let trans = vec![vec![row.clone(), row.clone()], vec![row.clone(), row]];
        model_from_rows(vec![trans.clone(), trans], 4)
    }

    fn disjoint_pair() -> Lmdp {
        let trans0 = vec![
            vec![Dist::point_mass(2, 0), Dist::point_mass(2, 0)],
            vec![Dist::point_mass(2, 0), Dist::point_mass(2, 0)],
        ];
        let trans1 = vec![
            vec![Dist::point_mass(2, 1), Dist::point_mass(2, 1)],
            vec![Dist::point_mass(2, 1), Dist::point_mass(2, 1)],
        ];
        model_from_rows(vec![trans0, trans1], 4)
    }

    #[test]
    fn identical_components_have_zero_separation() {
        let model = identical_pair();
        let (d, _) = min_pairwise_tv(&model).unwrap();
        assert_eq!(d, 0.0);
        let profile = certified_varpi(&model, 4).unwrap();
        for h in 1..=4 {
            assert!(profile.varpi(h).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_supports_have_full_separation() {
        let model = disjoint_pair();
        let (d, _) = min_pairwise_tv(&model).unwrap();
        assert_eq!(d, 1.0);
        // One transition separates the components perfectly.
        assert!(!is_n_step_decodable(&model, 1));
        assert!(is_n_step_decodable(&model, 2));
        let profile = certified_varpi(&model, 4).unwrap();
        assert_eq!(profile.varpi(1), 0.0);
        assert!(profile.varpi(2).is_infinite());
        assert_eq!(profile.inverse(f64::INFINITY), Some(2));
    }

    #[test]
    fn single_component_is_always_decodable() {
        let row = Dist::new(vec![0.5, 0.5]).unwrap();
        let trans = vec![vec![row.clone(), row.clone()], vec![row.clone(), row]];
        let model = model_from_rows(vec![trans], 4);
        assert!(is_n_step_decodable(&model, 1));
        assert!(is_n_step_decodable(&model, 4));
        assert!(min_pairwise_tv(&model).is_err());
    }

    #[test]
    fn markov_profile_trivial_cases() {
        let model = identical_pair();
        let pi = MarkovTable::uniform(2, 2, 4);
        let profile = db_profile_markov(&model, &pi, 0, 1, 0, 4).unwrap();
        for h in 1..=4 {
            assert!(profile.varpi(h).abs() < 1e-12);
        }
        assert_eq!(profile.varpi(1), 0.0);
    }

    #[test]
    fn rank_examples() {
        // Deterministic permutation transitions: full rank.
        let perm = vec![
            vec![Dist::point_mass(2, 1), Dist::point_mass(2, 1)],
            vec![Dist::point_mass(2, 0), Dist::point_mass(2, 0)],
        ];
        let model = model_from_rows(vec![perm], 2);
        assert_eq!(component_rank(&model, 0), 2);

        // All rows equal: rank one.
        let row = Dist::new(vec![0.25, 0.75]).unwrap();
        let flat = vec![
            vec![row.clone(), row.clone()],
            vec![row.clone(), row.clone()],
        ];
        let model = model_from_rows(vec![flat], 2);
        assert_eq!(component_rank(&model, 0), 1);
    }
}

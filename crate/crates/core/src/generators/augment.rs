//! Tensor augmentation: attach an i.i.d. auxiliary observation stream to an
//! MDP or a whole LMDP. The observation coordinate is appended to the state,
//! indexed `(s, o) ↦ s·|𝒪| + o`.

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{Component, Lmdp};

use super::family::Family;

/// `M ⊗ μ`: the component of model `m` over `𝒮 × 𝒪` with
/// `[𝕋⊗μ]((s′,o′)|(s,o),a) = 𝕋(s′|s,a)·μ(o′)` and initial distribution
/// `ν ⊗ μ`.
pub fn augment_mdp(model: &Lmdp, m: usize, mu: &Dist) -> Component {
    let base = model.component(m);
    let s_count = model.n_states();
    let o_count = mu.len();
    let init = Dist::product(&[base.init.clone(), mu.clone()]).expect("nonempty factors");
    let trans = (0..s_count * o_count)
        .map(|so| {
            let s = so / o_count;
            (0..model.n_actions())
                .map(|a| {
                    Dist::product(&[base.trans[s][a].clone(), mu.clone()])
                        .expect("nonempty factors")
                })
                .collect()
        })
        .collect();
    Component { init, trans }
}

/// `M ⊗ 𝒬`: augment each component `m` of the LMDP with the family's
/// distributions on the support of `ξ_m`, producing one component per
/// supported family index `i` with mixing weight `ρ(m(i))·ξ_{m(i)}(i)`.
/// Family indices outside every mixing support carry zero weight and are
/// dropped. The reward ignores the observation coordinate.
///
/// When the family certifies pairwise separation `δ`, the output is
/// `δ`-strongly separated regardless of the base transitions.
pub fn augment_lmdp(model: &Lmdp, family: &Family) -> Result<Lmdp> {
    if family.n_mixings() != model.n_components() {
        return Err(Error::DimensionMismatch(format!(
            "family has {} mixing weights, model has {} components",
            family.n_mixings(),
            model.n_components()
        )));
    }
    let o_count = family.outcome_size;
    let mut components = Vec::new();
    let mut weights = Vec::new();
    for (m, xi) in family.mixings.iter().enumerate() {
        let rho = model.mixing().get(m);
        for i in xi.support() {
            components.push(augment_mdp(model, m, &family.components[i]));
            weights.push(rho * xi.get(i));
        }
    }
    let s_count = model.n_states() * o_count;
    let reward = (0..model.horizon())
        .map(|h| {
            (0..s_count)
                .map(|so| {
                    let s = so / o_count;
                    (0..model.n_actions())
                        .map(|a| model.reward_at(h, s, a))
                        .collect()
                })
                .collect()
        })
        .collect();
    Lmdp::new(
        s_count,
        model.n_actions(),
        model.horizon(),
        Dist::new(weights)?,
        components,
        reward,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budget;
    use crate::evaluate::{traj_dist, value};
    use crate::generators::{comb_lock, qx_dist, LockSpec};
    use crate::policy::Policy;
    use crate::separation::min_pairwise_tv;

    #[test]
    fn point_mass_augmentation_is_isomorphic() {
        let model = comb_lock(2, 2, 3, LockSpec::Secret(vec![1])).unwrap();
        let mu = Dist::point_mass(3, 1);
        let comp = augment_mdp(&model, 0, &mu);
        // Row sums stay 1; only o = 1 entries are populated.
        for row in comp.trans.iter().flatten() {
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for (so, w) in row.iter().enumerate() {
                if so % 3 != 1 {
                    assert_eq!(w, 0.0);
                }
            }
        }
    }

    #[test]
    fn augmented_marginal_matches_base() {
        let model = comb_lock(2, 2, 3, LockSpec::Secret(vec![1])).unwrap();
        let fam = Family {
            outcome_size: 2,
            horizon: 3,
            delta: 0.2,
            gamma: 1.0,
            components: vec![qx_dist(&[0.2]).unwrap(), qx_dist(&[-0.2]).unwrap()],
            mixings: vec![Dist::point_mass(2, 0), Dist::point_mass(2, 1)],
        };
        let augmented = augment_lmdp(&model, &fam).unwrap();
        let policy = Policy::OpenLoop(vec![1, 0, 0]);
        // Marginalizing the observation coordinate of the augmented
        // trajectory distribution recovers the base distribution.
        let base_dist = traj_dist(&model, &policy, 2, Budget::default()).unwrap();
        let aug_dist = traj_dist(&augmented, &policy, 2, Budget::default()).unwrap();
        for (traj, p_base) in base_dist.iter() {
            let mut p_marginal = 0.0;
            for (aug_traj, p) in aug_dist.iter() {
                let projected: Vec<usize> =
                    aug_traj.states.iter().map(|&so| so / 2).collect();
                if projected == traj.states && aug_traj.actions == traj.actions {
                    p_marginal += p;
                }
            }
            assert!(
                (p_marginal - p_base).abs() < 1e-12,
                "marginal {p_marginal} vs base {p_base}"
            );
        }
        // Values of state-measurable policies are unchanged.
        let vb = value(&model, &policy, Budget::default()).unwrap();
        let va = value(&augmented, &policy, Budget::default()).unwrap();
        assert!((vb - va).abs() < 1e-12);
        // Strong separation comes from the family alone.
        let (sep, _) = min_pairwise_tv(&augmented).unwrap();
        assert!(sep >= fam.delta - 1e-12);
    }
}

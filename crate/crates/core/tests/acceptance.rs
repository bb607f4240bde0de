//! Acceptance suite: one test per criterion, each printing a pass line with
//! its elapsed time (`cargo test --test acceptance -- --nocapture` shows
//! them). Tolerances are pinned in the assertions.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use lmdp_lab::budget::Budget;
use lmdp_lab::dist::Dist;
use lmdp_lab::divergence::{
    bhattacharyya, hellinger_sq, l1_operator_norm, left_inverse, product_dist, tv,
};
use lmdp_lab::evaluate::{prefix_likelihoods, traj_dist, value};
use lmdp_lab::generators::{
    comb_lock, make_family, moment_matching, qx_dist, random_separated_lmdp,
    sat_to_separated_lmdp, two_family_exact, two_family_exponential, Family, GammaCheck,
    LockSpec, RandomSeparatedConfig, SatFormula,
};
use lmdp_lab::inference::decoding_error_exact;
use lmdp_lab::learner::{
    beta_for_finite_class, omle_run, planner_candidates, ModelClass, OmleConfig, SimEnvironment,
};
use lmdp_lab::model::{Component, Lmdp};
use lmdp_lab::oracle::brute_force_optimal_value;
use lmdp_lab::planner::{choose_window, plan};
use lmdp_lab::policy::{HistoryTable, Policy};
use lmdp_lab::separation::certified_varpi;

fn finish(criterion: usize, name: &str, start: Instant, limit_s: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    println!("acceptance {criterion} ({name}): PASS in {elapsed:.2}s (limit {limit_s}s)");
    assert!(
        elapsed < limit_s,
        "criterion {criterion} exceeded its runtime limit: {elapsed:.2}s ≥ {limit_s}s"
    );
}

/// Model-only conditional probability ℙ(s_{1:H} = seq | do(a_{1:H})).
fn states_given_actions(model: &Lmdp, states: &[usize], actions: &[usize]) -> f64 {
    prefix_likelihoods(model, states, &actions[..states.len() - 1])
        .iter()
        .sum()
}

// ── 1. Combination-lock exactness ───────────────────────────────────────

#[test]
fn acceptance_1_comb_lock_exactness() {
    let start = Instant::now();
    let tol = 1e-12;
    for n in 2..=4usize {
        let h = n + 1;
        let secret: Vec<usize> = (0..n - 1).map(|i| (i + 1) % 2).collect();
        let locked = comb_lock(n, 2, h, LockSpec::Secret(secret.clone())).unwrap();
        let reference = comb_lock(n, 2, h, LockSpec::Reference).unwrap();

        // State sequences 𝐬_k (survive to level k then fail) and 𝐬_{n,+}.
        let s_seq = |k: usize| -> Vec<usize> {
            let mut v: Vec<usize> = (0..k).collect();
            v.extend(std::iter::repeat(n).take(h - k));
            v
        };
        let s_plus = {
            let mut v: Vec<usize> = (0..n).collect();
            v.extend(std::iter::repeat(n - 1).take(h - n));
            v
        };

        // Probability identities over every action sequence.
        for code in 0..(1usize << h) {
            let actions: Vec<usize> = (0..h).map(|j| code >> j & 1).collect();
            for k in 1..=n {
                let p_ref = states_given_actions(&reference, &s_seq(k), &actions);
                assert!(
                    (p_ref - 1.0 / n as f64).abs() < tol,
                    "reference: ℙ(𝐬_{k}) = {p_ref} for n = {n}"
                );
            }
            let matches_secret = actions[..n - 1] == secret[..];
            if matches_secret {
                let p_plus = states_given_actions(&locked, &s_plus, &actions);
                assert!((p_plus - 1.0 / n as f64).abs() < tol);
                for k in 1..n {
                    let p = states_given_actions(&locked, &s_seq(k), &actions);
                    assert!((p - 1.0 / n as f64).abs() < tol);
                }
            } else {
                for k in 1..=n {
                    let p = states_given_actions(&locked, &s_seq(k), &actions);
                    assert!((p - 1.0 / n as f64).abs() < tol, "θ: ℙ(𝐬_{k}) = {p}");
                }
            }
        }

        // Value and total-variation identities over 100 random policies.
        let s_count = n + 1;
        for pseed in 0..100u64 {
            let policy = if pseed % 5 == 4 {
                random_history_policy(9_000 + pseed, s_count, 2, h)
            } else {
                random_markov_policy(9_000 + pseed, s_count, 2, h)
            };
            // w_θ(π): probability of playing the secret along the ⊕-prefix.
            let mut w = 1.0;
            for j in 0..n - 1 {
                let states: Vec<usize> = (0..=j).collect();
                let d = policy.action_dist(&states, &secret[..j], 2).unwrap();
                w *= d.get(secret[j]);
            }
            let v = value(&locked, &policy, Budget::default()).unwrap();
            assert!(
                (v - w / n as f64).abs() < tol,
                "n = {n}, policy {pseed}: V = {v}, w/n = {}",
                w / n as f64
            );
            let d_locked = traj_dist(&locked, &policy, h, Budget::default()).unwrap();
            let d_ref = traj_dist(&reference, &policy, h, Budget::default()).unwrap();
            let tv_traj: f64 = d_locked
                .probs()
                .iter()
                .zip(d_ref.probs())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            assert!(
                (tv_traj - w / n as f64).abs() < tol,
                "n = {n}, policy {pseed}: TV = {tv_traj}, w/n = {}",
                w / n as f64
            );
        }
    }
    finish(1, "combination-lock exactness", start, 10.0);
}

fn random_history_policy(seed: u64, s: usize, a: usize, h: usize) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ix = lmdp_lab::indexer::PrefixIndexer::new(s, a);
    let levels = (1..=h)
        .map(|depth| {
            (0..ix.prefix_count(depth) as usize)
                .map(|_| random_dist(&mut rng, a))
                .collect()
        })
        .collect();
    Policy::HistoryTable(HistoryTable {
        n_states: s,
        n_actions: a,
        levels,
    })
}

// ── 2 & 3. Separation growth and the decoding bound ─────────────────────

fn separated_corpus() -> Vec<(Lmdp, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100u64)
        .map(|seed| {
            let delta = rng.random_range(0.1..=0.5);
            let l = if seed % 3 == 0 { 3 } else { 2 };
            let cfg = RandomSeparatedConfig {
                n_states: 3,
                n_actions: 2,
                horizon: 8,
                n_components: l,
                delta,
            };
            (random_separated_lmdp(&cfg, 40_000 + seed).unwrap(), delta)
        })
        .collect()
}

#[test]
fn acceptance_2_separation_growth() {
    let start = Instant::now();
    for (i, (model, delta)) in separated_corpus().iter().enumerate() {
        let profile = certified_varpi(model, 8).unwrap();
        assert!(profile.is_nondecreasing(), "instance {i}");
        for h in 1..=8usize {
            let bound = delta * delta / 2.0 * (h - 1) as f64;
            assert!(
                profile.varpi(h) >= bound - 1e-9,
                "instance {i} (δ = {delta}): ϖ({h}) = {} < {bound}",
                profile.varpi(h)
            );
        }
    }
    finish(2, "separation growth", start, 30.0);
}

#[test]
fn acceptance_3_decoding_bound() {
    let start = Instant::now();
    for (i, (model, _delta)) in separated_corpus().iter().enumerate() {
        let profile = certified_varpi(model, 8).unwrap();
        let policy = random_markov_policy(50_000 + i as u64, 3, 2, 8);
        let l = model.n_components() as f64;
        let mut prev = f64::INFINITY;
        for w in 1..=8usize {
            let e = decoding_error_exact(model, &policy, w, Budget::default()).unwrap();
            let bound = l * (-profile.varpi(w)).exp();
            assert!(
                e <= bound + 1e-12,
                "instance {i}, W = {w}: e = {e} > L·exp(−ϖ) = {bound}"
            );
            assert!(e <= prev + 1e-12, "instance {i}: e not monotone at W = {w}");
            prev = e;
        }
    }
    finish(3, "decoding bound", start, 60.0);
}

// ── 4. Planner ε-optimality ─────────────────────────────────────────────

#[test]
fn acceptance_4_planner_epsilon_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4_040);
    let mut instances_tested = 0usize;
    let mut attempts = 0usize;
    while instances_tested < 50 && attempts < 300 {
        attempts += 1;
        let s = rng.random_range(2..=4usize);
        let l = rng.random_range(2..=3usize).min(s);
        let h = rng.random_range(4..=6usize);
        let delta = rng.random_range(0.75..=0.95);
        let cfg = RandomSeparatedConfig {
            n_states: s,
            n_actions: 2,
            horizon: h,
            n_components: l,
            delta,
        };
        let model = random_separated_lmdp(&cfg, 60_000 + attempts as u64).unwrap();
        let mut usable = false;
        for eps in [0.25, 0.1] {
            let Some(w) = choose_window(&model, eps).unwrap() else {
                continue;
            };
            usable = true;
            let planned = plan(&model, w, Budget::default()).unwrap();
            let realized = value(&model, &planned.to_policy(), Budget::default()).unwrap();
            let optimal = brute_force_optimal_value(&model, Budget::default()).unwrap();
            assert!(
                optimal - realized <= eps + 1e-9,
                "attempt {attempts} (ε = {eps}, W = {w}): gap {} > ε",
                optimal - realized
            );
            assert!(
                realized >= planned.value_estimate - 1e-9,
                "attempt {attempts}: realized {realized} below certificate {}",
                planned.value_estimate
            );
        }
        if usable {
            instances_tested += 1;
        }
    }
    assert!(
        instances_tested >= 50,
        "only {instances_tested} certified instances in {attempts} attempts"
    );
    finish(4, "planner ε-optimality", start, 120.0);
}

// ── 5. Family construction ──────────────────────────────────────────────

#[test]
fn acceptance_5_family_construction() {
    let start = Instant::now();

    // Preset builders, re-verified exactly.
    let presets = [
        make_family(1, 8, 2, 0.02, Budget::default()).unwrap(),
        make_family(1, 8, 3, 0.015, Budget::default()).unwrap(),
        make_family(1, 16, 4, 0.02, Budget::default()).unwrap(),
        make_family(2, 8, 2, 0.02, Budget::default()).unwrap(),
        two_family_exact(3, 0.03, Budget::default()).unwrap(),
        two_family_exact(4, 0.02, Budget::default()).unwrap(),
        two_family_exponential(3, 0.02, 1.0, Budget::default()).unwrap(),
    ];
    for (i, fam) in presets.iter().enumerate() {
        let check = fam.verify(Budget::default()).unwrap();
        assert!(check.supports_disjoint, "preset {i}");
        assert!(
            check.min_pairwise_tv >= fam.delta - 1e-12,
            "preset {i}: TV {} < δ {}",
            check.min_pairwise_tv,
            fam.delta
        );
        match check.gamma {
            GammaCheck::Exact { max_tv } => assert!(
                max_tv <= fam.gamma + 1e-12,
                "preset {i}: measured γ {max_tv} > certified {}",
                fam.gamma
            ),
            GammaCheck::Recipe => panic!("preset {i} should be exactly enumerable"),
        }
    }

    // Moment matching at d ≤ 2 against the Cor. prob-matching bound, with
    // exact product-mixture TV.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for case in 0..10 {
        let d = 1 + case % 2;
        let k_order = 2 + case % 2; // K ∈ {2, 3}
        let h = 2 + case % 3; // H ∈ {2, 3, 4}
        let delta_inf = 0.3;
        let n_needed = {
            // C(K−1+d, d) + 1 points.
            let mut count = 1usize;
            for j in 1..=d {
                count = count * (k_order - 1 + j) / j;
            }
            count + 1
        };
        let xs: Vec<Vec<f64>> = (0..n_needed + 1)
            .map(|_| (0..d).map(|_| rng.random_range(-delta_inf..=delta_inf)).collect())
            .collect();
        let (xi0, xi1) = moment_matching(&xs, k_order).unwrap();
        // Moments to order K − 1 agree within 1e-9.
        for moments in multi_indices_upto(d, k_order - 1) {
            let m0: f64 = xi0
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    w * moments
                        .iter()
                        .enumerate()
                        .map(|(j, &p)| xs[i][j].powi(p as i32))
                        .product::<f64>()
                })
                .sum();
            let m1: f64 = xi1
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    w * moments
                        .iter()
                        .enumerate()
                        .map(|(j, &p)| xs[i][j].powi(p as i32))
                        .product::<f64>()
                })
                .sum();
            assert!(
                (m0 - m1).abs() < 1e-9,
                "case {case}: moment {moments:?} differs: {m0} vs {m1}"
            );
        }
        // Exact TV of the H-fold product mixtures obeys the tail bound.
        let family = Family {
            outcome_size: 2 * d,
            horizon: h,
            delta: 0.0,
            gamma: 1.0,
            components: xs.iter().map(|x| qx_dist(x).unwrap()).collect(),
            mixings: vec![xi0, xi1],
        };
        let q0 = family.mixture_product(0, Budget::default()).unwrap();
        let q1 = family.mixture_product(1, Budget::default()).unwrap();
        let exact_tv = tv(&q0, &q1).unwrap();
        let ratio = std::f64::consts::E * h as f64 * delta_inf * delta_inf / k_order as f64;
        let tail: f64 = (k_order..=h).map(|k| ratio.powi(k as i32)).sum();
        assert!(
            exact_tv * exact_tv <= tail + 1e-9,
            "case {case}: TV² = {} > tail {tail}",
            exact_tv * exact_tv
        );
    }

    // Prop. unif-moments on every enumerable case (d ≤ 2, H ≤ 4, N ≤ 4):
    // exact TV² ≤ ¼ Σ_ℓ C(H,ℓ) d^{−ℓ} ‖Δ_ℓ‖².
    for case in 0..30 {
        let d = 1 + case % 2;
        let h = 2 + case % 3;
        let n = 2 + case % 3; // N ≤ 4
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let mu = random_dist(&mut rng, n);
        let nu = random_dist(&mut rng, n);
        let family = Family {
            outcome_size: 2 * d,
            horizon: h,
            delta: 0.0,
            gamma: 1.0,
            components: xs.iter().map(|x| qx_dist(x).unwrap()).collect(),
            mixings: vec![mu.clone(), nu.clone()],
        };
        let q0 = family.mixture_product(0, Budget::default()).unwrap();
        let q1 = family.mixture_product(1, Budget::default()).unwrap();
        let exact_tv = tv(&q0, &q1).unwrap();
        // Tensor moment differences Δ_ℓ, dense over d^ℓ entries.
        let mut rhs = 0.0;
        for ell in 0..=h {
            let mut delta_sq = 0.0;
            let entries = d.pow(ell as u32);
            for mut code in 0..entries {
                let mut idx = vec![0usize; ell];
                for slot in (0..ell).rev() {
                    idx[slot] = code % d;
                    code /= d;
                }
                let term = |weights: &Dist| -> f64 {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(i, w)| w * idx.iter().map(|&j| xs[i][j]).product::<f64>())
                        .sum()
                };
                let diff = term(&mu) - term(&nu);
                delta_sq += diff * diff;
            }
            rhs += binomial(h, ell) * delta_sq / (d as f64).powi(ell as i32);
        }
        rhs /= 4.0;
        assert!(
            exact_tv * exact_tv <= rhs + 1e-9,
            "case {case}: TV² = {} > bound {rhs}",
            exact_tv * exact_tv
        );
    }

    finish(5, "family construction", start, 60.0);
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut out = 1.0;
    for j in 0..k {
        out = out * (n - j) as f64 / (j + 1) as f64;
    }
    out
}

/// All multi-indices over `d` slots with total degree ≤ `max` (independent
/// of the library's internal enumeration).
fn multi_indices_upto(d: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in &out {
            let used: usize = prefix.iter().sum();
            for v in 0..=(max - used) {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

// ── 6. Left-inverse construction ────────────────────────────────────────

#[test]
fn acceptance_6_left_inverse() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut tested = 0usize;
    while tested < 50 {
        let l = rng.random_range(1..=4usize);
        let block = rng.random_range(2..=3usize);
        let n = l * block;
        let eta = rng.random_range(1e-5..2e-4);
        let columns: Vec<Dist> = (0..l)
            .map(|i| {
                let mut w: Vec<f64> = (0..n)
                    .map(|_| eta * (rng.random::<f64>() + 1e-3) / n as f64)
                    .collect();
                for b in 0..block {
                    w[i * block + b] = (1.0 - eta) * (rng.random::<f64>() + 0.2);
                }
                Dist::normalized(w).unwrap()
            })
            .collect();
        // Only keep draws that genuinely satisfy the precondition.
        let threshold = (2.0 * l as f64).ln();
        let mut ok = true;
        for i in 0..l {
            for j in (i + 1)..l {
                if bhattacharyya(&columns[i], &columns[j]).unwrap() < threshold {
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        tested += 1;
        let m_plus = left_inverse(&columns).unwrap();
        for r in 0..l {
            for c in 0..l {
                let entry: f64 = (0..n).map(|o| m_plus[r][o] * columns[c].get(o)).sum();
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!(
                    (entry - expect).abs() < 1e-9,
                    "𝕄⁺𝕄[{r},{c}] = {entry}"
                );
            }
        }
        assert!(l1_operator_norm(&m_plus) <= 2.0 + 1e-12);
    }
    finish(6, "left-inverse construction", start, 5.0);
}

// ── 7. 3SAT embedding ───────────────────────────────────────────────────

#[test]
fn acceptance_7_sat_embedding() {
    let start = Instant::now();
    let delta = 0.2;
    let delta_bar = 4.0 * delta;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut sat_count = 0usize;
    let mut unsat_count = 0usize;
    let mut tested = 0usize;
    let budget = Budget::new(40_000_000);
    while tested < 20 {
        let n_vars = rng.random_range(3..=4usize);
        let n_clauses = rng.random_range(2..=3usize);
        let clauses: Vec<Vec<i32>> = (0..n_clauses)
            .map(|_| {
                let len = rng.random_range(1..=3usize);
                let mut lits = Vec::with_capacity(len);
                while lits.len() < len {
                    let v = rng.random_range(1..=n_vars) as i32;
                    let lit = if rng.random::<bool>() { v } else { -v };
                    if !lits.contains(&lit) && !lits.contains(&-lit) {
                        lits.push(lit);
                    }
                }
                lits
            })
            .collect();
        let phi = SatFormula::new(n_vars, clauses).unwrap();
        let satisfiable = phi.exhaustive_satisfiable();
        // Keep the corpus mixed: collect at least 4 of each outcome.
        if satisfiable && sat_count >= 16 {
            continue;
        }
        if !satisfiable && unsat_count >= 16 {
            continue;
        }
        tested += 1;
        if satisfiable {
            sat_count += 1;
        } else {
            unsat_count += 1;
        }

        let model = sat_to_separated_lmdp(&phi, 2, delta).unwrap();
        let h = model.horizon();
        let optimal = brute_force_optimal_value(&model, budget).unwrap();
        if satisfiable {
            assert!(
                (optimal - 1.0).abs() < 1e-9,
                "satisfiable formula, optimal {optimal}"
            );
        } else {
            let bound = 1.0
                - (1.0 - delta_bar * delta_bar).powf((h - 1) as f64 / 2.0)
                    / phi.n_clauses() as f64;
            assert!(
                optimal <= bound + 1e-9,
                "unsatisfiable formula: optimal {optimal} > bound {bound}"
            );
        }
    }
    assert!(
        sat_count >= 4 && unsat_count >= 4,
        "corpus not mixed: {sat_count} satisfiable, {unsat_count} unsatisfiable"
    );
    finish(7, "3SAT embedding", start, 120.0);
}

// ── 8. OMLE behavior ────────────────────────────────────────────────────

/// Two-state chain: action `a` pulls toward state 1 with the component's
/// probability; reward sits at state 1 at the final step.
fn omle_test_model(pull: [[f64; 2]; 2]) -> Lmdp {
    let h = 4;
    let mk = |p_to_one: [f64; 2]| {
        let rows: Vec<Vec<Dist>> = (0..2)
            .map(|_s| {
                (0..2)
                    .map(|a| Dist::new(vec![1.0 - p_to_one[a], p_to_one[a]]).unwrap())
                    .collect()
            })
            .collect();
        Component {
            init: Dist::point_mass(2, 0),
            trans: rows,
        }
    };
    let mut reward = vec![vec![vec![0.0; 2]; 2]; h];
    reward[h - 1][1][0] = 1.0;
    reward[h - 1][1][1] = 1.0;
    Lmdp::new(
        2,
        2,
        h,
        Dist::uniform(2),
        vec![mk(pull[0]), mk(pull[1])],
        reward,
    )
    .unwrap()
}

#[test]
fn acceptance_8_omle_behavior() {
    let start = Instant::now();
    // Truth rewards action 0; the alternative rewards action 1 and is
    // slightly more optimistic about its own reachability, so optimism
    // prefers it until the likelihood data expels it.
    let truth = omle_test_model([[0.9, 0.1], [0.75, 0.25]]);
    let alt = omle_test_model([[0.12, 0.92], [0.28, 0.78]]);
    let class = ModelClass::new(vec![alt.clone(), truth.clone()]).unwrap();
    let truth_index = 1;
    let p = 0.01;
    let beta = beta_for_finite_class(2, p);
    let budget = Budget::default();
    let optimal = brute_force_optimal_value(&truth, budget).unwrap();

    // (i) θ★ stays in the confidence set through K = 100 episodes in at
    // least 99 of 100 seeded runs.
    let mut sound_runs = 0usize;
    for seed in 0..100u64 {
        let cfg = OmleConfig {
            beta,
            eps_s: 1.0,
            window: 2,
            episodes: 100,
            seed,
            budget,
        };
        let mut env = SimEnvironment::new(truth.clone(), seed ^ 0x0abc);
        let outcome = omle_run(&class, &mut env, &cfg, &Policy::Uniform, |m| {
            planner_candidates(m, &[1, 2], budget)
        })
        .unwrap();
        let always_in = outcome
            .trace
            .records
            .iter()
            .all(|r| r.confidence_set.contains(&truth_index));
        if always_in {
            sound_runs += 1;
        }
    }
    assert!(
        sound_runs >= 99,
        "θ★ ∈ Θ^k in only {sound_runs} of 100 runs"
    );

    // (ii) median final suboptimality over 10 seeds, nonincreasing across
    // K ∈ {100, 500, 2000} and ≤ 0.1 at K = 2000.
    let mut medians = Vec::new();
    for episodes in [100usize, 500, 2000] {
        let mut gaps = Vec::new();
        for seed in 0..10u64 {
            let cfg = OmleConfig {
                beta,
                eps_s: 1.0,
                window: 2,
                episodes,
                seed: 7_000 + seed,
                budget,
            };
            let mut env = SimEnvironment::new(truth.clone(), seed ^ 0xbeef);
            let outcome = omle_run(&class, &mut env, &cfg, &Policy::Uniform, |m| {
                planner_candidates(m, &[1, 2], budget)
            })
            .unwrap();
            // Value of the uniform mixture over iterates, via the pool.
            let mut pool_values = vec![None; outcome.candidate_pool.len()];
            let mut total = 0.0;
            for &p in &outcome.chosen {
                let v = match pool_values[p] {
                    Some(v) => v,
                    None => {
                        let v = value(&truth, &outcome.candidate_pool[p], budget).unwrap();
                        pool_values[p] = Some(v);
                        v
                    }
                };
                total += v;
            }
            gaps.push(optimal - total / outcome.chosen.len() as f64);
        }
        gaps.sort_by(f64::total_cmp);
        medians.push((gaps[4] + gaps[5]) / 2.0);
    }
    println!("omle medians across K: {medians:?}");
    assert!(
        medians[0] >= medians[1] - 1e-12 && medians[1] >= medians[2] - 1e-12,
        "medians not nonincreasing: {medians:?}"
    );
    assert!(
        medians[2] <= 0.1,
        "final suboptimality {} > 0.1 at K = 2000",
        medians[2]
    );
    finish(8, "OMLE behavior", start, 600.0);
}

// ── 9. Divergence identities ────────────────────────────────────────────

#[test]
fn acceptance_9_divergence_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=16usize);
        let p = random_dist(&mut rng, n);
        let q = random_dist(&mut rng, n);
        let tv = tv(&p, &q).unwrap();
        let h2 = hellinger_sq(&p, &q).unwrap();
        let db = bhattacharyya(&p, &q).unwrap();
        assert!((h2 - (1.0 - (-db).exp())).abs() < 1e-12);
        assert!(tv <= (2.0 * h2).sqrt() + 1e-10);
        assert!(tv >= h2 - 1e-10);
        assert!(db >= 0.5 * tv * tv - 1e-10);
        // And the product identity stays exact under tensoring.
        let pp = product_dist(&[p.clone(), p.clone()]).unwrap();
        let qq = product_dist(&[q.clone(), q.clone()]).unwrap();
        let db2 = bhattacharyya(&pp, &qq).unwrap();
        assert!((db2 - 2.0 * db).abs() < 1e-10);
    }
    finish(9, "divergence identities", start, 5.0);
}

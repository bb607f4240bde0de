//! Moment-matched distribution families.
//!
//! An `(L, H, δ, γ, L′)`-family over an outcome set `𝒪` is a collection of
//! distributions `μ_1..μ_{L′}` together with mixing weights `ξ_1..ξ_L` over
//! `[L′]` such that (1) the `ξ_k` have pairwise disjoint supports, (2) the
//! `H`-fold product mixtures `Q_k = E_{i∼ξ_k}[μ_i^{⊗H}]` are pairwise within
//! `γ` in total variation, and (3) the `μ_i` on the union of supports are
//! pairwise `δ`-separated in total variation. Families convert generic hard
//! LMDPs into strongly separated ones via [`super::augment_lmdp`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::dist::Dist;
use crate::divergence::{product_dist, tv};
use crate::error::{Error, Result};

/// Scale factor of the perturbed constructions: the raw packing vectors are
/// scaled by `δ̄ = 4δ` before becoming distributions, so that packing
/// distance `d/2` turns into pairwise TV at least `δ`.
pub const DELTA_BAR_FACTOR: f64 = 4.0;

/// The coordinate distribution `Q_x` over `[2d]` for `x ∈ [−1,1]^d`:
/// entries `(1 + x[j])/2d, (1 − x[j])/2d` in coordinate order.
///
/// Satisfies `TV(Q_x, Q_y) = ‖x − y‖₁ / (2d)` exactly.
pub fn qx_dist(x: &[f64]) -> Result<Dist> {
    if x.is_empty() {
        return Err(Error::Precondition("empty coordinate vector".into()));
    }
    let d = x.len() as f64;
    let mut w = Vec::with_capacity(2 * x.len());
    for &xi in x {
        if !(-1.0..=1.0).contains(&xi) {
            return Err(Error::Precondition(format!(
                "coordinate {xi} outside [−1, 1]"
            )));
        }
        w.push((1.0 + xi) / (2.0 * d));
        w.push((1.0 - xi) / (2.0 * d));
    }
    Dist::new(w)
}

/// Greedy sign-vector packing: `n_vectors` elements of `{−1,+1}^d` with
/// pairwise ℓ1 distance at least `d/2`; the symmetric variant additionally
/// guarantees `‖x_i + x_j‖₁ ≥ d/2`.
///
/// The sieve walks `{−1,+1}^d` in Gray-code order, keeps the first live
/// vector, and removes the open `d/2`-ball around each pick (and around its
/// antipode in the symmetric variant); vectors exactly on the boundary are
/// retained. The counting precondition `d ≥ ⌈11 ln N⌉` (respectively
/// `⌈11 ln 2N⌉`) guarantees the sieve cannot exhaust; exhaustion is still
/// detected and reported.
pub fn greedy_packing(n_vectors: usize, d: usize, symmetric: bool) -> Result<Vec<Vec<f64>>> {
    if n_vectors == 0 {
        return Err(Error::Precondition("need at least one vector".into()));
    }
    let count = if symmetric { 2 * n_vectors } else { n_vectors };
    let required = ((11.0 * (count as f64).ln()).ceil() as usize).max(1);
    if d < required {
        return Err(Error::Precondition(format!(
            "packing dimension {d} below the guarantee threshold {required}"
        )));
    }
    if d > 30 {
        return Err(Error::Precondition(format!(
            "packing dimension {d} exceeds the poly(2^d) feasibility cap of 30"
        )));
    }

    let total: usize = 1usize << d;
    // One bit per vector, indexed by Gray-sequence position t; the vector at
    // position t has code t ^ (t >> 1).
    let mut alive = BitSet::full(total);
    // Hamming radius of the removed ball: ‖x − y‖₁ < d/2 ⟺ ham(x, y) < d/4.
    let ham_radius = (d as f64 / 4.0).ceil() as usize - 1;
    let mut picks: Vec<u32> = Vec::with_capacity(n_vectors);
    let mut cursor = 0usize;
    while picks.len() < n_vectors {
        let Some(pos) = alive.next_set(cursor) else {
            return Err(Error::Numerical(format!(
                "sieve exhausted after {} of {n_vectors} vectors",
                picks.len()
            )));
        };
        cursor = pos;
        let code = (pos ^ (pos >> 1)) as u32;
        picks.push(code);
        remove_ball(&mut alive, code, ham_radius, d);
        if symmetric {
            let antipode = !code & ((1u32 << d) - 1);
            remove_ball(&mut alive, antipode, ham_radius, d);
        }
    }

    Ok(picks
        .into_iter()
        .map(|code| {
            (0..d)
                .map(|j| if code >> j & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect())
}

/// Plain bit set over `0..len`, dense enough for the 2^d sieve.
struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    fn full(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if len % 64 != 0 {
            *words.last_mut().unwrap() = (1u64 << (len % 64)) - 1;
        }
        BitSet { words, len }
    }

    fn clear(&mut self, i: usize) {
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    /// First set position at or after `from`.
    fn next_set(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut w = from / 64;
        let mut word = self.words[w] & (u64::MAX << (from % 64));
        loop {
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
            w += 1;
            if w == self.words.len() {
                return None;
            }
            word = self.words[w];
        }
    }
}

/// Marks dead every vector within Hamming distance `radius` of `center`,
/// translating codes into Gray-sequence positions.
fn remove_ball(alive: &mut BitSet, center: u32, radius: usize, d: usize) {
    // Enumerate all subsets of coordinates of size ≤ radius to flip.
    let mut stack: Vec<(u32, usize, usize)> = vec![(center, 0, 0)]; // (code, next coordinate, flips so far)
    while let Some((code, from, flips)) = stack.pop() {
        alive.clear(gray_position(code) as usize);
        if flips == radius {
            continue;
        }
        for j in from..d {
            stack.push((code ^ (1 << j), j + 1, flips + 1));
        }
    }
}

/// Inverse Gray code: the sequence position of a code.
fn gray_position(code: u32) -> u32 {
    let mut t = code;
    let mut shift = 1;
    while shift < 32 {
        t ^= t >> shift;
        shift <<= 1;
    }
    t
}

/// All multi-indices `k ∈ ℕ^d` with `|k| ≤ max_total` (there are
/// `C(max_total + d, d)` of them), in a fixed deterministic order.
pub(crate) fn multi_indices(d: usize, max_total: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == d {
            out.push(current.clone());
            return;
        }
        for v in 0..=remaining {
            current.push(v);
            rec(d, remaining - v, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, max_total, &mut Vec::new(), &mut out);
    out
}

/// Splits a null vector of the moment system into two disjoint-support
/// distributions whose mixed moments of order `< K` agree.
///
/// The system has one equation per multi-index `k` with `|k| ≤ K − 1`
/// (that is `C(K−1+d, d)` equations), so `N ≥ C(K+d−1, d) + 1` columns
/// guarantee a nonzero null vector. The null vector is taken from the SVD's
/// smallest right-singular direction, certified by residual
/// `‖A v‖ ≤ 1e-9·‖A‖`, and sign-canonicalized so the first nonzero entry is
/// positive.
pub fn moment_matching(xs: &[Vec<f64>], moment_order: usize) -> Result<(Dist, Dist)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Precondition(
            "moment matching needs at least two points".into(),
        ));
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch(
            "points of differing dimension".into(),
        ));
    }
    if moment_order == 0 {
        return Err(Error::Precondition("moment order must be ≥ 1".into()));
    }
    let indices = multi_indices(d, moment_order - 1);
    if n < indices.len() + 1 {
        return Err(Error::Precondition(format!(
            "need N ≥ {} points for moment order {moment_order} in dimension {d}, got {n}",
            indices.len() + 1
        )));
    }

    let a = DMatrix::from_fn(indices.len(), n, |r, c| {
        indices[r]
            .iter()
            .enumerate()
            .map(|(j, &k)| xs[c][j].powi(k as i32))
            .product::<f64>()
    });
    let a_norm = a.norm();
    // Pad to square with zero rows so the SVD's V^T is the full n×n basis;
    // its last row is the least-excited right-singular direction, which
    // spans the kernel whenever the system is rank-deficient.
    let padded = DMatrix::from_fn(n, n, |r, c| {
        if r < indices.len() {
            a[(r, c)]
        } else {
            0.0
        }
    });
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let row_index = v_t.nrows() - 1;
    let mut v: Vec<f64> = (0..n).map(|c| v_t[(row_index, c)]).collect();
    // Residual certificate.
    let residual = {
        let mut r2 = 0.0;
        for r in 0..indices.len() {
            let dot: f64 = (0..n).map(|c| a[(r, c)] * v[c]).sum();
            r2 += dot * dot;
        }
        r2.sqrt()
    };
    if residual > 1e-9 * a_norm.max(1.0) {
        return Err(Error::Numerical(format!(
            "no certified null vector: residual {residual:.3e} vs system norm {a_norm:.3e}"
        )));
    }
    if let Some(first) = v.iter().find(|&&x| x != 0.0) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    let pos: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    let neg: Vec<f64> = v.iter().map(|&x| (-x).max(0.0)).collect();
    if pos.iter().sum::<f64>() == 0.0 || neg.iter().sum::<f64>() == 0.0 {
        return Err(Error::Numerical(
            "null vector is one-signed; cannot split into two distributions".into(),
        ));
    }
    Ok((Dist::normalized(pos)?, Dist::normalized(neg)?))
}

/// What a gamma certificate is based on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GammaCheck {
    /// `max_k TV(Q_k, Q_1)` computed by full enumeration of `𝒪^H`.
    Exact { max_tv: f64 },
    /// Certified analytically from the construction recipe (moment order and
    /// packing scale); exact enumeration did not fit the budget.
    Recipe,
}

/// Post-construction verification report for a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub supports_disjoint: bool,
    /// Minimum pairwise TV over the union of mixing supports.
    pub min_pairwise_tv: f64,
    pub gamma: GammaCheck,
}

/// An `(L, H, δ, γ, L′)`-family with certified parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub outcome_size: usize,
    pub horizon: usize,
    /// Certified pairwise separation of the component distributions.
    pub delta: f64,
    /// Certified bound on `TV(Q_k, Q_1)`.
    pub gamma: f64,
    /// `μ_1..μ_{L′}`.
    pub components: Vec<Dist>,
    /// `ξ_1..ξ_L`, each over `[L′]`.
    pub mixings: Vec<Dist>,
}

impl Family {
    pub fn n_mixings(&self) -> usize {
        self.mixings.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Indices in the union of the mixing supports.
    pub fn supported_indices(&self) -> Vec<usize> {
        let mut used = vec![false; self.components.len()];
        for xi in &self.mixings {
            for i in xi.support() {
                used[i] = true;
            }
        }
        used.iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(i, _)| i)
            .collect()
    }

    /// `Q_k = E_{i∼ξ_k}[μ_i^{⊗H}]` over `𝒪^H`, budget-checked.
    pub fn mixture_product(&self, k: usize, budget: Budget) -> Result<Dist> {
        let size = (self.outcome_size as u128).pow(self.horizon as u32);
        budget.check(size)?;
        let mut acc = vec![0.0; size as usize];
        let xi = &self.mixings[k];
        for i in xi.support() {
            let tensor = product_dist(&vec![self.components[i].clone(); self.horizon])?;
            for (o, w) in tensor.iter().enumerate() {
                acc[o] += xi.get(i) * w;
            }
        }
        Dist::new(acc)
    }

    /// Re-verifies the three family clauses. Clauses (1) and (3) are always
    /// checked exactly; clause (2) is enumerated exactly when `|𝒪|^H` fits
    /// the budget and otherwise reported as recipe-certified.
    pub fn verify(&self, budget: Budget) -> Result<FamilyCheck> {
        // (1) Disjoint mixing supports.
        let mut seen = vec![false; self.components.len()];
        let mut disjoint = true;
        for xi in &self.mixings {
            for i in xi.support() {
                if seen[i] {
                    disjoint = false;
                }
                seen[i] = true;
            }
        }
        // (3) Pairwise TV on the union of supports.
        let used = self.supported_indices();
        let mut min_tv = f64::INFINITY;
        for (pos, &i) in used.iter().enumerate() {
            for &j in &used[pos + 1..] {
                min_tv = min_tv.min(tv(&self.components[i], &self.components[j])?);
            }
        }
        if used.len() < 2 {
            min_tv = f64::INFINITY;
        }
        // (2) Product-mixture closeness.
        let size = (self.outcome_size as u128).pow(self.horizon as u32);
        let gamma = if budget.check(size).is_ok() {
            let q1 = self.mixture_product(0, budget)?;
            let mut max_tv = 0.0f64;
            for k in 1..self.n_mixings() {
                let qk = self.mixture_product(k, budget)?;
                max_tv = max_tv.max(tv(&qk, &q1)?);
            }
            GammaCheck::Exact { max_tv }
        } else {
            GammaCheck::Recipe
        };
        Ok(FamilyCheck {
            supports_disjoint: disjoint,
            min_pairwise_tv: min_tv,
            gamma,
        })
    }
}

/// Builds a `(2^r, H, δ, γ, N^r)`-family over `[2d]^r` by composing the
/// greedy packing, the `Q_x` coordinate distributions scaled by `δ̄ = 4δ`,
/// moment matching at order `K = ⌈d/60⌉`, and an `r`-fold tensor lift.
///
/// Preconditions:
/// - `d ≥ 120·e·H·δ̄²` (with `δ̄ = 4δ`), which makes the moment-matching
///   tail sum certify `γ_base ≤ 2^{−(K−1)/2}`;
/// - the packing guarantee `d ≥ ⌈11 ln N⌉` for the `N = C(K+d−1, d) + 1`
///   vectors the moment system needs.
///
/// Invariants of the result are re-verified where the budget allows; the
/// returned `gamma` is `r · γ_base` (tensoring is additive in γ).
pub fn make_family(r: usize, d: usize, horizon: usize, delta: f64, budget: Budget) -> Result<Family> {
    if r == 0 {
        return Err(Error::Precondition("tensor order r must be ≥ 1".into()));
    }
    if !(delta > 0.0) || delta > 0.25 {
        return Err(Error::Precondition(format!(
            "delta {delta} outside (0, 0.25] (δ̄ = 4δ must stay ≤ 1)"
        )));
    }
    let delta_bar = DELTA_BAR_FACTOR * delta;
    let need = 120.0 * std::f64::consts::E * horizon as f64 * delta_bar * delta_bar;
    if (d as f64) < need {
        return Err(Error::Precondition(format!(
            "dimension {d} below 120·e·H·δ̄² = {need:.3}"
        )));
    }
    let k_order = d.div_ceil(60);
    let n_points = multi_indices(d, k_order - 1).len() + 1;

    let xs = greedy_packing(n_points, d, false)?;
    let scaled: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| x.iter().map(|&v| delta_bar * v).collect())
        .collect();
    let components: Vec<Dist> = scaled.iter().map(|x| qx_dist(x)).collect::<Result<_>>()?;
    let (xi0, xi1) = moment_matching(&scaled, k_order)?;

    // Tail-sum certificate: TV² ≤ Σ_{k=K}^{H} (e·H·δ̄²/K)^k, with ratio ≤ ½
    // under the dimension precondition; the coarse round-up of the same sum
    // is 2^{−(K−1)/2}.
    let ratio = std::f64::consts::E * horizon as f64 * delta_bar * delta_bar / k_order as f64;
    let tail: f64 = (k_order..=horizon).map(|k| ratio.powi(k as i32)).sum();
    let gamma_base = tail
        .sqrt()
        .min((2.0f64).powf(-((k_order as f64 - 1.0) / 2.0)));

    let base = Family {
        outcome_size: 2 * d,
        horizon,
        delta,
        gamma: gamma_base,
        components,
        mixings: vec![xi0, xi1],
    };
    let family = if r == 1 { base } else { tensor_family(&base, r)? };

    // Never trust the recipe: re-verify post-construction.
    let check = family.verify(budget)?;
    if !check.supports_disjoint {
        return Err(Error::Numerical(
            "constructed mixing supports overlap".into(),
        ));
    }
    if check.min_pairwise_tv + 1e-12 < delta {
        return Err(Error::Numerical(format!(
            "constructed pairwise TV {:.6} below the target {delta}",
            check.min_pairwise_tv
        )));
    }
    if let GammaCheck::Exact { max_tv } = check.gamma {
        if max_tv > family.gamma + 1e-12 {
            return Err(Error::Numerical(format!(
                "measured γ {max_tv:.3e} exceeds the certificate {:.3e}",
                family.gamma
            )));
        }
    }
    Ok(family)
}

/// First `n` points of the axis-aligned grid over `[−δ∞, δ∞]^d` whose
/// spacing guarantees pairwise ℓ1 distance at least `2dδ` (any two distinct
/// grid points differ by at least one full step in some coordinate).
fn grid_packing(n: usize, d: usize, delta_inf: f64, delta: f64) -> Result<Vec<Vec<f64>>> {
    let per_axis = (delta_inf / (d as f64 * delta)).floor() as usize + 1;
    if per_axis < 2 {
        return Err(Error::Precondition(format!(
            "grid packing infeasible: δ∞ = {delta_inf} below d·δ = {}",
            d as f64 * delta
        )));
    }
    let total = (per_axis as u128).pow(d as u32);
    if (n as u128) > total {
        return Err(Error::Precondition(format!(
            "grid packing of [−{delta_inf}, {delta_inf}]^{d} holds {total} points, {n} needed"
        )));
    }
    let step = 2.0 * delta_inf / (per_axis - 1) as f64;
    Ok((0..n)
        .map(|mut code| {
            let mut x = vec![0.0; d];
            for slot in (0..d).rev() {
                x[slot] = -delta_inf + (code % per_axis) as f64 * step;
                code /= per_axis;
            }
            x
        })
        .collect())
}

/// Certified `γ` for a freshly built 2-family over `Q_x` components: exact
/// product-mixture TV when enumerable, otherwise the tensor-moment bound,
/// otherwise the provided analytic fallback. A small slack absorbs the
/// numerical residue of moment matching.
fn certify_gamma(family: &Family, xs: &[Vec<f64>], budget: Budget, fallback: f64) -> f64 {
    let d = xs[0].len();
    let h = family.horizon;
    let enumerable = (family.outcome_size as u128).pow(h as u32);
    if budget.check(enumerable).is_ok() {
        let q0 = family.mixture_product(0, budget).expect("checked budget");
        let q1 = family.mixture_product(1, budget).expect("checked budget");
        return tv(&q0, &q1).expect("same outcome space") + 1e-9;
    }
    let moment_cost: u128 = (0..=h).map(|l| (d as u128).pow(l as u32)).sum();
    if budget.check(moment_cost).is_ok() {
        // TV² ≤ ¼ Σ_ℓ C(H,ℓ) d^{−ℓ} ‖Δ_ℓ‖².
        let mut bound = 0.0;
        for ell in 0..=h {
            let mut delta_sq = 0.0;
            for mut code in 0..d.pow(ell as u32) {
                let mut idx = vec![0usize; ell];
                for slot in (0..ell).rev() {
                    idx[slot] = code % d;
                    code /= d;
                }
                let term = |w: &Dist| -> f64 {
                    w.iter()
                        .enumerate()
                        .map(|(i, wi)| wi * idx.iter().map(|&j| xs[i][j]).product::<f64>())
                        .sum()
                };
                let diff = term(&family.mixings[0]) - term(&family.mixings[1]);
                delta_sq += diff * diff;
            }
            let mut binom = 1.0;
            for j in 0..ell {
                binom = binom * (h - j) as f64 / (j + 1) as f64;
            }
            bound += binom * delta_sq / (d as f64).powi(ell as i32);
        }
        return (bound / 4.0).sqrt() + 1e-9;
    }
    fallback
}

fn build_two_family(
    horizon: usize,
    delta: f64,
    delta_inf: f64,
    d: usize,
    k_order: usize,
    budget: Budget,
    fallback_gamma: f64,
) -> Result<Family> {
    let n_points = multi_indices(d, k_order - 1).len() + 1;
    if n_points > 2_000 {
        return Err(Error::Precondition(format!(
            "preset needs {n_points} packed points; not exposed at this scale"
        )));
    }
    let xs = grid_packing(n_points, d, delta_inf, delta)?;
    let components: Vec<Dist> = xs.iter().map(|x| qx_dist(x)).collect::<Result<_>>()?;
    let (xi0, xi1) = moment_matching(&xs, k_order)?;
    let mut family = Family {
        outcome_size: 2 * d,
        horizon,
        delta,
        gamma: 1.0,
        components,
        mixings: vec![xi0, xi1],
    };
    family.gamma = certify_gamma(&family, &xs, budget, fallback_gamma);
    // Separation is structural (grid spacing), but never trust the recipe.
    let check = family.verify(Budget::new(0))?;
    if !check.supports_disjoint || check.min_pairwise_tv + 1e-12 < delta {
        return Err(Error::Numerical(format!(
            "preset self-check failed: disjoint = {}, min TV = {}",
            check.supports_disjoint, check.min_pairwise_tv
        )));
    }
    Ok(family)
}

/// Exact-closeness preset: `δ∞ = 1`, `K = H + 1`, `d = ⌈4e²δH⌉`, giving a
/// `(2, H, δ, γ, N)`-family whose product mixtures agree on *all* moments up
/// to order `H` — mathematically `γ = 0`; the returned `gamma` is the
/// numerically certified residue of the moment matching.
///
/// Requires `δ ∈ (0, 1/(4e²)]`.
pub fn two_family_exact(horizon: usize, delta: f64, budget: Budget) -> Result<Family> {
    let cap = 1.0 / (4.0 * std::f64::consts::E * std::f64::consts::E);
    if !(delta > 0.0 && delta <= cap) {
        return Err(Error::Precondition(format!(
            "delta {delta} outside (0, 1/(4e²) ≈ {cap:.4}]"
        )));
    }
    let d = (4.0 * std::f64::consts::E * std::f64::consts::E * delta * horizon as f64).ceil()
        as usize;
    let d = d.max(1);
    build_two_family(horizon, delta, 1.0, d, horizon + 1, budget, 1.0)
}

/// Exponential-closeness preset: `K = ⌈λd⌉`, `δ∞ = 2e²δ(λ+1)`,
/// `d = max(⌈λ·4e⁷δ²H⌉, 1)`, giving a `(2, H, δ, γ, N)`-family with `γ`
/// decaying exponentially in `λd`. The returned `gamma` is certified
/// computationally (exact enumeration or the tensor-moment bound), with the
/// analytic tail sum as the out-of-budget fallback.
///
/// Requires `λ ∈ [1, 1/(4e²δ)]` (which also keeps `δ∞ ≤ 1`).
pub fn two_family_exponential(
    horizon: usize,
    delta: f64,
    lambda: f64,
    budget: Budget,
) -> Result<Family> {
    let e = std::f64::consts::E;
    if !(delta > 0.0 && delta <= 1.0 / (4.0 * e * e)) {
        return Err(Error::Precondition(format!(
            "delta {delta} outside (0, 1/(4e²)]"
        )));
    }
    if !(1.0..=1.0 / (4.0 * e * e * delta)).contains(&lambda) {
        return Err(Error::Precondition(format!(
            "lambda {lambda} outside [1, 1/(4e²δ)]"
        )));
    }
    let delta_inf = 2.0 * e * e * delta * (lambda + 1.0);
    let d = ((lambda * 4.0 * e.powi(7) * delta * delta * horizon as f64).ceil() as usize).max(1);
    let k_order = (lambda * d as f64).ceil() as usize;
    // Analytic fallback: the tail sum at the actual ratio.
    let ratio = e * horizon as f64 * delta_inf * delta_inf / k_order as f64;
    let fallback = if ratio < 1.0 {
        ((k_order..=horizon)
            .map(|k| ratio.powi(k as i32))
            .sum::<f64>())
        .sqrt()
    } else {
        1.0
    };
    build_two_family(horizon, delta, delta_inf, d, k_order, budget, fallback)
}

/// Binary-indexed tensor lift of a 2-family: mixing `m ∈ 0..2^r` uses
/// `ξ_{bit_j(m)}` in factor `j`, components are `μ_{k_1} ⊗ … ⊗ μ_{k_r}`
/// indexed lexicographically (factor 0 most significant). Produces a
/// `(2^r, H, δ, r·γ, N^r)`-family over `𝒪^r`.
pub fn tensor_family(base: &Family, r: usize) -> Result<Family> {
    if base.n_mixings() != 2 {
        return Err(Error::Precondition(
            "tensor lift requires a 2-family".into(),
        ));
    }
    if r == 0 {
        return Err(Error::Precondition("tensor order r must be ≥ 1".into()));
    }
    if r == 1 {
        return Ok(base.clone());
    }
    let n = base.n_components();
    let big_n = n.checked_pow(r as u32).ok_or_else(|| {
        Error::Precondition(format!("component count N^r overflows for N={n}, r={r}"))
    })?;
    // μ̃_k for k ∈ [N]^r, lexicographic with factor 0 most significant.
    let mut components = Vec::with_capacity(big_n);
    let mut idx = vec![0usize; r];
    loop {
        let factors: Vec<Dist> = idx.iter().map(|&i| base.components[i].clone()).collect();
        components.push(product_dist(&factors)?);
        let mut pos = r;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    // ξ̃_m(k) = Π_j ξ_{bit_j(m)}(k_j), with factor j reading bit j
    // (most-significant factor first to match the component ordering).
    let mut mixings = Vec::with_capacity(1 << r);
    for m in 0..(1usize << r) {
        let mut w = vec![0.0; big_n];
        for (code, weight) in w.iter_mut().enumerate() {
            let mut c = code;
            let mut digits = vec![0usize; r];
            for pos in (0..r).rev() {
                digits[pos] = c % n;
                c /= n;
            }
            let mut p = 1.0;
            for (j, &k_j) in digits.iter().enumerate() {
                let bit = (m >> (r - 1 - j)) & 1;
                p *= base.mixings[bit].get(k_j);
            }
            *weight = p;
        }
        mixings.push(Dist::new(w)?);
    }
    Ok(Family {
        outcome_size: base.outcome_size.pow(r as u32),
        horizon: base.horizon,
        delta: base.delta,
        gamma: r as f64 * base.gamma,
        components,
        mixings,
    })
}

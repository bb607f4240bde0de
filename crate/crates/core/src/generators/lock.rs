//! Combination locks: the canonical hard LMDP whose only above-baseline
//! policy plays one secret action string, plus the N-step decodable variant
//! with auxiliary counting states.

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{Component, Lmdp};

/// Which lock instance to build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LockSpec {
    /// The reference model `M_∅` with action-independent survival dynamics.
    Reference,
    /// `M_θ` for a secret action string of length `n − 1`.
    Secret(Vec<usize>),
}

/// Combination lock over states `{s_{⊕,1}, …, s_{⊕,n}, s_⊖}` with `L = n`
/// components, uniform mixing, and reward `1{s = s_{⊕,n}, h = n+1}`.
///
/// State indexing: `s_{⊕,h}` is `h − 1`, `s_⊖` is `n`.
///
/// Requires `H ≥ n + 1` and `A ≥ 2`. The reference model survives level `h`
/// with probability `(n−h)/(n−h+1)` regardless of actions, which makes
/// `ℙ(s_{1:H} = 𝐬_h | a_{1:H}) = 1/n` for every level and action sequence.
pub fn comb_lock(n: usize, n_actions: usize, horizon: usize, spec: LockSpec) -> Result<Lmdp> {
    if n < 1 {
        return Err(Error::Precondition("lock needs n ≥ 1 levels".into()));
    }
    if n_actions < 2 {
        return Err(Error::Precondition("lock needs A ≥ 2".into()));
    }
    if horizon < n + 1 {
        return Err(Error::Precondition(format!(
            "lock needs H ≥ n + 1 = {}, got {horizon}",
            n + 1
        )));
    }
    let s_count = n + 1;
    let plus = |h: usize| h - 1; // s_{⊕,h}, 1-based level
    let minus = n; // s_⊖

    let mut components = Vec::with_capacity(n);
    match spec {
        LockSpec::Reference => {
            // All n components identical.
            let mut trans = vec![vec![Dist::point_mass(s_count, minus); n_actions]; s_count];
            for h in 1..=n {
                let stay = (n - h) as f64 / (n - h + 1) as f64;
                let mut row = vec![0.0; s_count];
                if h < n {
                    row[plus(h + 1)] = stay;
                }
                row[minus] = 1.0 - if h < n { stay } else { 0.0 };
                let d = Dist::new(row)?;
                for a in 0..n_actions {
                    trans[plus(h)][a] = d.clone();
                }
            }
            let comp = Component {
                init: Dist::point_mass(s_count, plus(1)),
                trans,
            };
            components = vec![comp; n];
        }
        LockSpec::Secret(ref secret) => {
            if secret.len() + 1 != n {
                return Err(Error::Precondition(format!(
                    "secret string must have length n − 1 = {}, got {}",
                    n - 1,
                    secret.len()
                )));
            }
            if secret.iter().any(|&a| a >= n_actions) {
                return Err(Error::Precondition("secret action out of range".into()));
            }
            for m in 1..=n {
                let mut trans =
                    vec![vec![Dist::point_mass(s_count, minus); n_actions]; s_count];
                for h in 1..=n {
                    for a in 0..n_actions {
                        let next = if m == 1 {
                            if h < n {
                                if a == secret[h - 1] {
                                    plus(h + 1)
                                } else {
                                    minus
                                }
                            } else {
                                plus(n) // s_{⊕,n} absorbing in component 1
                            }
                        } else if h < m - 1 {
                            plus(h + 1)
                        } else if h == m - 1 {
                            if a == secret[h - 1] {
                                minus
                            } else {
                                plus(h + 1)
                            }
                        } else if h < n {
                            // m ≤ h < n
                            if a == secret[h - 1] {
                                plus(h + 1)
                            } else {
                                minus
                            }
                        } else {
                            minus // s_{⊕,n} exits for m > 1
                        };
                        trans[plus(h)][a] = Dist::point_mass(s_count, next);
                    }
                }
                components.push(Component {
                    init: Dist::point_mass(s_count, plus(1)),
                    trans,
                });
            }
        }
    }

    let mut reward = vec![vec![vec![0.0; n_actions]; s_count]; horizon];
    for a in 0..n_actions {
        reward[n][plus(n)][a] = 1.0; // 1-based step n + 1
    }
    Lmdp::new(
        s_count,
        n_actions,
        horizon,
        Dist::uniform(n),
        components,
        reward,
    )
}

/// N-step decodable combination lock with `k = N − n` levels of prefix
/// padding, horizon `H = n + 2k = 2N − n`, a failure-counting chain
/// `s_{⊖,2..n+k}` and per-component terminal states.
///
/// State indexing: `s_{⊕,i}` for `i ∈ −k+1..=n+k` is `i + k − 1`;
/// `s_{⊖,i}` for `i ∈ 2..=n+k` is `n + 2k + (i − 2)`; `terminal_m` for
/// `m ∈ 1..=n` is `2n + 3k − 1 + (m − 1)`.
///
/// Requires `N ≥ n + 1` (with `N = n` the paper's dynamics reference the
/// nonexistent failure state `s_{⊖,n+1}` and the reward step `n + k + 1`
/// falls outside the horizon) and `n ≥ 2`, `A ≥ 2`. The secret string is
/// fixed to all-zeros; the lock's difficulty profile is invariant to the
/// choice.
pub fn comb_lock_decodable(decode_steps: usize, n: usize, n_actions: usize) -> Result<Lmdp> {
    let big_n = decode_steps;
    if n < 2 {
        return Err(Error::Precondition("decodable lock needs n ≥ 2".into()));
    }
    if big_n < n + 1 {
        return Err(Error::Precondition(format!(
            "decodable lock needs N ≥ n + 1 = {}, got {big_n}",
            n + 1
        )));
    }
    if n_actions < 2 {
        return Err(Error::Precondition("decodable lock needs A ≥ 2".into()));
    }
    let k = big_n - n;
    let horizon = n + 2 * k;
    let s_count = 3 * n + 3 * k - 1;
    let secret = vec![0usize; n - 1];

    // Index helpers; `i` uses the construction's own numbering.
    let plus = |i: isize| -> usize { (i + k as isize - 1) as usize }; // i ∈ −k+1..=n+k
    let minus = |i: usize| -> usize { n + 2 * k + (i - 2) }; // i ∈ 2..=n+k
    let terminal = |m: usize| -> usize { 2 * n + 3 * k - 1 + (m - 1) }; // m ∈ 1..=n

    let mut components = Vec::with_capacity(n);
    for m in 1..=n {
        let mut trans = vec![vec![Dist::point_mass(s_count, terminal(m)); n_actions]; s_count];
        // Prefix padding: s_{⊕,i} for i ≤ 0 advances unconditionally.
        for i in (-(k as isize) + 1)..=0 {
            for a in 0..n_actions {
                trans[plus(i)][a] = Dist::point_mass(s_count, plus(i + 1));
            }
        }
        // Failure chain counts up, then funnels into the component's
        // terminal.
        for i in 2..n + k {
            for a in 0..n_actions {
                trans[minus(i)][a] = Dist::point_mass(s_count, minus(i + 1));
            }
        }
        // s_{⊖,n+k} and all terminals map to terminal_m (the defaults above
        // already do this; keep them).

        // Lock levels s_{⊕,1..n}: same structure as the plain lock with
        // s_⊖ entries identified with the counting chain.
        for h in 1..=n {
            for a in 0..n_actions {
                let next = if m == 1 {
                    if h < n {
                        if a == secret[h - 1] {
                            plus((h + 1) as isize)
                        } else {
                            minus(h + 1)
                        }
                    } else {
                        plus(n as isize) // absorbing s_{⊕,n}
                    }
                } else if h < m - 1 {
                    plus((h + 1) as isize)
                } else if h == m - 1 {
                    if a == secret[h - 1] {
                        minus(h + 1)
                    } else {
                        plus((h + 1) as isize)
                    }
                } else if h < n {
                    if a == secret[h - 1] {
                        plus((h + 1) as isize)
                    } else {
                        minus(h + 1)
                    }
                } else {
                    minus(n + 1) // s_{⊕,n} exits for m > 1; needs k ≥ 1
                };
                trans[plus(h as isize)][a] = Dist::point_mass(s_count, next);
            }
        }
        // Unreached overshoot states s_{⊕,n+1..n+k} also funnel into the
        // terminal so decodability holds from every start state (the
        // construction leaves them unspecified).
        components.push(Component {
            init: Dist::point_mass(s_count, plus(-(k as isize) + 1)),
            trans,
        });
    }

    let mut reward = vec![vec![vec![0.0; n_actions]; s_count]; horizon];
    for a in 0..n_actions {
        reward[n + k][plus(n as isize)][a] = 1.0; // 1-based step n + k + 1
    }
    Lmdp::new(
        s_count,
        n_actions,
        horizon,
        Dist::uniform(n),
        components,
        reward,
    )
}

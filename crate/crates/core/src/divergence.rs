//! Exact divergences between finite distributions.
//!
//! All functions are pure and operate on [`Dist`] values over a shared
//! outcome index range. Bhattacharyya divergence of disjoint-support inputs
//! is `+∞`, which downstream separation logic treats as "perfectly
//! separated" rather than an error.

use nalgebra::DMatrix;

use crate::dist::Dist;
use crate::error::{Error, Result};

fn check_same_len(p: &Dist, q: &Dist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions over outcome sets of sizes {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Total variation distance `½ Σ |p(x) − q(x)|`, in `[0, 1]`.
pub fn tv(p: &Dist, q: &Dist) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

/// Squared Hellinger distance `½ Σ (√p(x) − √q(x))²`, in `[0, 1]`.
///
/// Satisfies `D_H² = 1 − exp(−D_B)` exactly.
pub fn hellinger_sq(p: &Dist, q: &Dist) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(p.iter()
        .zip(q.iter())
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum::<f64>()
        / 2.0)
}

/// Bhattacharyya coefficient `Σ √(p(x) q(x))`, in `[0, 1]`.
pub fn bhattacharyya_coefficient(p: &Dist, q: &Dist) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(p.iter().zip(q.iter()).map(|(a, b)| (a * b).sqrt()).sum())
}

/// Bhattacharyya divergence `−log Σ √(p(x) q(x))`; `+∞` iff the supports are
/// disjoint.
pub fn bhattacharyya(p: &Dist, q: &Dist) -> Result<f64> {
    let bc = bhattacharyya_coefficient(p, q)?;
    if bc == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(-bc.ln())
    }
}

/// Product distribution over the Cartesian product outcome set, indexed
/// lexicographically with the first factor most significant.
pub fn product_dist(factors: &[Dist]) -> Result<Dist> {
    Dist::product(factors)
}

/// Induced ℓ1 operator norm of a row-major matrix: the maximum absolute
/// column sum.
pub fn l1_operator_norm(rows: &[Vec<f64>]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let cols = rows[0].len();
    (0..cols)
        .map(|j| rows.iter().map(|r| r[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Explicit left inverse of a column-stochastic matrix whose columns are
/// pairwise well separated in Bhattacharyya divergence.
///
/// Given columns `P_1, …, P_L` with `D_B(P_i, P_j) ≥ log(2L)` for all
/// `i ≠ j`, returns the `L × |𝒪|` matrix `𝕄⁺ = Y⁻¹ Z` with
/// `Z[m,o] = P_m(o) / Σ_i P_i(o)` and `Y = Z 𝕄`. The result satisfies
/// `𝕄⁺ 𝕄 = I_L` with induced ℓ1 operator norm at most 2.
pub fn left_inverse(columns: &[Dist]) -> Result<Vec<Vec<f64>>> {
    let l = columns.len();
    if l == 0 {
        return Err(Error::Precondition("no columns given".into()));
    }
    let n = columns[0].len();
    for c in columns {
        if c.len() != n {
            return Err(Error::DimensionMismatch(
                "columns over different outcome sets".into(),
            ));
        }
    }
    let threshold = (2.0 * l as f64).ln();
    for i in 0..l {
        for j in (i + 1)..l {
            let db = bhattacharyya(&columns[i], &columns[j])?;
            if db < threshold {
                return Err(Error::Precondition(format!(
                    "columns {i} and {j} have Bhattacharyya divergence {db:.6} < log(2L) = {threshold:.6}"
                )));
            }
        }
    }

    // Z[m][o] = P_m(o) / Σ_i P_i(o); columns with no mass anywhere stay zero.
    let mut z = vec![vec![0.0; n]; l];
    for o in 0..n {
        let colsum: f64 = columns.iter().map(|c| c.get(o)).sum();
        if colsum > 0.0 {
            for (m, c) in columns.iter().enumerate() {
                z[m][o] = c.get(o) / colsum;
            }
        }
    }

    let y = DMatrix::from_fn(l, l, |r, c| {
        (0..n).map(|o| z[r][o] * columns[c].get(o)).sum::<f64>()
    });
    let y_inv = y.try_inverse().ok_or_else(|| {
        Error::Numerical("Y = Z·𝕄 is numerically singular (insufficient separation)".into())
    })?;

    let mut out = vec![vec![0.0; n]; l];
    for r in 0..l {
        for o in 0..n {
            out[r][o] = (0..l).map(|k| y_inv[(r, k)] * z[k][o]).sum();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(w: &[f64]) -> Dist {
        Dist::new(w.to_vec()).unwrap()
    }

    #[test]
    fn tv_examples() {
        let half = d(&[0.5, 0.5]);
        assert_eq!(tv(&half, &half).unwrap(), 0.0);
        assert_eq!(tv(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 1.0);
        // Q_x vs Q_y over [2] with d = 1, x = 0.4, y = −0.2: |x − y| / 2.
        let qx = d(&[0.7, 0.3]);
        let qy = d(&[0.4, 0.6]);
        assert!((tv(&qx, &qy).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn hellinger_examples() {
        let half = d(&[0.5, 0.5]);
        let point = d(&[1.0, 0.0]);
        assert_eq!(hellinger_sq(&half, &half).unwrap(), 0.0);
        assert_eq!(
            hellinger_sq(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(),
            1.0
        );
        let expect = 1.0 - 0.5f64.sqrt();
        assert!((hellinger_sq(&half, &point).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn bhattacharyya_examples() {
        let half = d(&[0.5, 0.5]);
        let point = d(&[1.0, 0.0]);
        assert_eq!(bhattacharyya(&half, &half).unwrap(), 0.0);
        assert!(bhattacharyya(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]))
            .unwrap()
            .is_infinite());
        let expect = 0.5 * 2.0f64.ln();
        assert!((bhattacharyya(&half, &point).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = d(&[1.0]);
        let q = d(&[0.5, 0.5]);
        assert!(tv(&p, &q).is_err());
        assert!(hellinger_sq(&p, &q).is_err());
        assert!(bhattacharyya(&p, &q).is_err());
    }

    #[test]
    fn left_inverse_single_column() {
        let m = left_inverse(&[d(&[0.5, 0.5])]).unwrap();
        assert_eq!(m, vec![vec![1.0, 1.0]]);
        // 𝕄⁺𝕄 = [1].
        let prod: f64 = m[0][0] * 0.5 + m[0][1] * 0.5;
        assert!((prod - 1.0).abs() < 1e-15);
    }

    #[test]
    fn left_inverse_orthogonal_supports() {
        let cols = [d(&[1.0, 0.0, 0.0, 0.0]), d(&[0.0, 1.0, 0.0, 0.0])];
        let m = left_inverse(&cols).unwrap();
        assert_eq!(m[0], vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m[1], vec![0.0, 1.0, 0.0, 0.0]);
        assert!(l1_operator_norm(&m) <= 1.0 + 1e-12);
    }

    #[test]
    fn left_inverse_near_orthogonal() {
        let cols = [d(&[0.9, 0.1, 0.0, 0.0]), d(&[0.0, 0.0, 0.9, 0.1])];
        let m = left_inverse(&cols).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let entry: f64 = (0..4).map(|o| m[r][o] * cols[c].get(o)).sum();
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((entry - expect).abs() < 1e-10);
            }
        }
        assert!(l1_operator_norm(&m) <= 2.0);
    }

    #[test]
    fn left_inverse_rejects_close_columns() {
        let cols = [d(&[0.5, 0.5]), d(&[0.45, 0.55])];
        assert!(matches!(
            left_inverse(&cols),
            Err(Error::Precondition(_))
        ));
    }
}

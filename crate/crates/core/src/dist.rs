use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const DIST_SUM_TOLERANCE: f64 = 1e-12;

/// Kahan-compensated sum; the mass tolerance is tight enough that naive
/// summation over large outcome sets (tensor products) would fail it on
/// rounding noise alone.
pub(crate) fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// A finite probability vector over a contiguous index range `0..len`.
///
/// Outcome labels, when they exist, live in caller-side metadata; keeping the
/// outcome set a bare index range makes tensor-product indexing uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Dist {
    weights: Vec<f64>,
}

impl Dist {
    /// Validates nonnegativity and unit total mass (within
    /// [`DIST_SUM_TOLERANCE`]).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDist("empty outcome set".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidDist(format!(
                    "weight {w} at index {i} is not a finite nonnegative real"
                )));
            }
        }
        let total = kahan_sum(weights.iter().copied());
        if (total - 1.0).abs() > DIST_SUM_TOLERANCE {
            return Err(Error::InvalidDist(format!(
                "weights sum to {total}, expected 1 within {DIST_SUM_TOLERANCE}"
            )));
        }
        Ok(Dist { weights })
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        assert!(index < len, "point mass index out of range");
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Dist { weights }
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution over empty set");
        Dist {
            weights: vec![1.0 / len as f64; len],
        }
    }

    /// Normalizes arbitrary nonnegative weights. Errors if the total is zero.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total = kahan_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::InvalidDist("cannot normalize zero mass".into()));
        }
        Dist::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().copied()
    }

    /// Indices carrying strictly positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    /// Inverse-CDF sample from a single uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // Rounding can leave acc slightly under 1; fall back to the last
        // supported index.
        self.weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("distribution has support")
    }

    /// Product distribution over the Cartesian product of the factors'
    /// outcome sets, indexed lexicographically with the first factor most
    /// significant.
    pub fn product(factors: &[Dist]) -> Result<Dist> {
        if factors.is_empty() {
            return Err(Error::InvalidDist(
                "product of an empty list of distributions".into(),
            ));
        }
        let mut weights = vec![1.0];
        for f in factors {
            let mut next = Vec::with_capacity(weights.len() * f.len());
            for &w in &weights {
                for v in f.iter() {
                    next.push(w * v);
                }
            }
            weights = next;
        }
        Dist::new(weights)
    }
}

impl TryFrom<Vec<f64>> for Dist {
    type Error = Error;
    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Dist::new(weights)
    }
}

impl From<Dist> for Vec<f64> {
    fn from(d: Dist) -> Vec<f64> {
        d.weights
    }
}

impl std::ops::Index<usize> for Dist {
    type Output = f64;
    fn index(&self, index: usize) -> &f64 {
        &self.weights[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_negative_weight() {
        assert!(Dist::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn rejects_bad_total() {
        assert!(Dist::new(vec![0.5, 0.4]).is_err());
        assert!(Dist::new(vec![0.5, 0.5 + 1e-10]).is_err());
    }

    #[test]
    fn accepts_within_tolerance() {
        assert!(Dist::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn product_examples() {
        let p = Dist::new(vec![1.0, 0.0]).unwrap();
        let pp = Dist::product(&[p.clone(), p]).unwrap();
        assert_eq!(pp.as_slice(), &[1.0, 0.0, 0.0, 0.0]);

        let h = Dist::uniform(2);
        let hh = Dist::product(&[h.clone(), h]).unwrap();
        assert_eq!(hh.as_slice(), &[0.25, 0.25, 0.25, 0.25]);

        let a = Dist::new(vec![0.3, 0.7]).unwrap();
        let b = Dist::new(vec![0.5, 0.5]).unwrap();
        let ab = Dist::product(&[a, b]).unwrap();
        let expect = [0.15, 0.15, 0.35, 0.35];
        for (x, y) in ab.iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn product_of_empty_list_errors() {
        assert!(Dist::product(&[]).is_err());
    }

    #[test]
    fn sampling_matches_weights() {
        let d = Dist::new(vec![0.25, 0.5, 0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = d.get(i);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() < 4.0 * sigma + 1e-9);
        }
    }
}

//! Weight vectors and the entropic quantities the rate formulas consume.
//!
//! A [`WeightVector`] holds nonnegative weights: squared Schmidt coefficients
//! of a (possibly unnormalized) bipartite state, or a probability
//! distribution. All logarithms are base 2, so entropies are in bits.
//!
//! | Function | Quantity |
//! |----------|----------|
//! | [`power_sum`] | Σ w_i^α (rank at α = 0) |
//! | [`renyi_entropy`] | H_α(w) = log Σ w_i^α / (1 − α) |
//! | [`shannon_entropy`] | H(w) = −Σ w_i log w_i |
//! | [`relative_entropy`] | D(q‖p) = Σ q_i log(q_i / p_i) |
//! | [`tilt`] | p_i v_i^{1/α} / Z |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries at or below this are treated as zero (rank, supports).
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// A vector is normalized iff its total is within this of 1.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Rényi entropies switch to the Shannon formula this close to α = 1.
pub const RENYI_SHANNON_SWITCH: f64 = 1e-7;

/// Nonnegative, finite, nonempty list of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightVectorRepr", into = "WeightVectorRepr")]
pub struct WeightVector {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightVectorRepr {
    weights: Vec<f64>,
}

impl TryFrom<WeightVectorRepr> for WeightVector {
    type Error = Error;
    fn try_from(r: WeightVectorRepr) -> Result<Self> {
        WeightVector::new(r.weights)
    }
}

impl From<WeightVector> for WeightVectorRepr {
    fn from(w: WeightVector) -> Self {
        WeightVectorRepr { weights: w.weights }
    }
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!(
                "entry {i} is {w}, expected a finite nonnegative number"
            )));
        }
        Ok(WeightVector { weights })
    }

    /// Uniform distribution over `d` outcomes.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidWeights("uniform over zero outcomes".into()));
        }
        Self::new(vec![1.0 / d as f64; d])
    }

    /// The one-outcome distribution (1).
    pub fn point_mass() -> Self {
        WeightVector { weights: vec![1.0] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Returns `self` if normalized, otherwise [`Error::Unnormalized`].
    pub fn require_normalized(&self) -> Result<&Self> {
        let t = self.total();
        if (t - 1.0).abs() <= NORMALIZATION_TOL {
            Ok(self)
        } else {
            Err(Error::Unnormalized(t))
        }
    }

    /// Number of entries above [`SUPPORT_THRESHOLD`].
    pub fn rank(&self) -> usize {
        self.weights.iter().filter(|&&w| w > SUPPORT_THRESHOLD).count()
    }

    /// True when exactly one entry carries weight.
    pub fn is_point_mass(&self) -> bool {
        self.rank() <= 1
    }

    /// Copy with trailing zeros appended up to `len`.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut w = self.weights.clone();
        if w.len() < len {
            w.resize(len, 0.0);
        }
        w
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Weights sorted non-increasingly.
pub fn sort_desc(w: &WeightVector) -> WeightVector {
    let mut v = w.weights.clone();
    v.sort_by(|a, b| b.total_cmp(a));
    WeightVector { weights: v }
}

fn check_alpha_unit(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    Ok(())
}

/// Σ w_i^α over entries above the support threshold; α = 0 gives the rank.
pub fn power_sum(w: &WeightVector, alpha: f64) -> Result<f64> {
    check_alpha_unit(alpha)?;
    Ok(power_sum_unchecked(w.weights(), alpha))
}

pub(crate) fn power_sum_unchecked(w: &[f64], alpha: f64) -> f64 {
    let support = w.iter().copied().filter(|&x| x > SUPPORT_THRESHOLD);
    if alpha == 0.0 {
        support.count() as f64
    } else if alpha == 1.0 {
        compensated_sum(support)
    } else {
        compensated_sum(support.map(|x| x.powf(alpha)))
    }
}

/// −Σ w_i log₂ w_i, with 0 log 0 = 0.
pub fn shannon_entropy(w: &WeightVector) -> Result<f64> {
    w.require_normalized()?;
    Ok(shannon_unchecked(w.weights()))
}

pub(crate) fn shannon_unchecked(w: &[f64]) -> f64 {
    let h = -compensated_sum(
        w.iter()
            .copied()
            .filter(|&x| x > SUPPORT_THRESHOLD)
            .map(|x| x * x.log2()),
    );
    h.max(0.0)
}

/// Rényi entropy in bits for α ∈ [0, 1].
///
/// Within [`RENYI_SHANNON_SWITCH`] of α = 1 the Shannon entropy is returned,
/// which is the continuous extension of the formula.
pub fn renyi_entropy(w: &WeightVector, alpha: f64) -> Result<f64> {
    check_alpha_unit(alpha)?;
    w.require_normalized()?;
    Ok(renyi_unchecked(w.weights(), alpha))
}

pub(crate) fn renyi_unchecked(w: &[f64], alpha: f64) -> f64 {
    if 1.0 - alpha <= RENYI_SHANNON_SWITCH {
        shannon_unchecked(w)
    } else {
        (power_sum_unchecked(w, alpha).log2() / (1.0 - alpha)).max(0.0)
    }
}

/// D(q‖p) in bits. Shorter inputs are zero-padded; +∞ when the support of
/// `q` is not contained in the support of `p`.
pub fn relative_entropy(q: &WeightVector, p: &WeightVector) -> Result<f64> {
    q.require_normalized()?;
    p.require_normalized()?;
    let len = q.len().max(p.len());
    let (q, p) = (q.padded(len), p.padded(len));
    let mut terms = Vec::with_capacity(len);
    for (&qi, &pi) in q.iter().zip(&p) {
        if qi <= SUPPORT_THRESHOLD {
            continue;
        }
        if pi <= SUPPORT_THRESHOLD {
            return Ok(f64::INFINITY);
        }
        terms.push(qi * (qi / pi).log2());
    }
    Ok(compensated_sum(terms).max(0.0))
}

/// Result of [`tilt`]: the normalizing constant and the tilted distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilted {
    pub z: f64,
    pub tilted: WeightVector,
}

/// Tilts `p` by `values^(1/α)`: tilted_i = p_i v_i^{1/α} / Z.
pub fn tilt(p: &WeightVector, values: &[f64], alpha: f64) -> Result<Tilted> {
    p.require_normalized()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside (0, 1]")));
    }
    if values.len() != p.len() {
        return Err(Error::Dimension(format!(
            "{} values for a distribution of length {}",
            values.len(),
            p.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidWeights("tilt values must be finite and nonnegative".into()));
    }
    let raw: Vec<f64> = p
        .weights()
        .iter()
        .zip(values)
        .map(|(&pi, &v)| pi * v.powf(1.0 / alpha))
        .collect();
    let z = compensated_sum(raw.iter().copied());
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::DegenerateTilt);
    }
    let tilted = WeightVector::new(raw.into_iter().map(|x| x / z).collect())?;
    Ok(Tilted { z, tilted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![0.5, -0.1]).is_err());
        assert!(WeightVector::new(vec![f64::NAN]).is_err());
        assert!(WeightVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn sorts_descending() {
        assert_eq!(sort_desc(&wv(&[0.1, 0.9])).weights(), &[0.9, 0.1]);
        assert_eq!(sort_desc(&wv(&[0.5, 0.5])).weights(), &[0.5, 0.5]);
        assert_eq!(sort_desc(&wv(&[0.2, 0.5, 0.3])).weights(), &[0.5, 0.3, 0.2]);
    }

    #[test]
    fn power_sum_examples() {
        let v = power_sum(&wv(&[0.5, 0.5]), 0.5).unwrap();
        assert!((v - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v - 1.4142136).abs() < 1e-7);
        assert!((power_sum(&wv(&[0.2, 0.3, 0.5]), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(power_sum(&wv(&[0.5, 0.3, 0.2]), 0.0).unwrap(), 3.0);
        assert!(power_sum(&wv(&[0.5, 0.5]), 1.5).is_err());
        assert!(power_sum(&wv(&[0.5, 0.5]), -0.1).is_err());
    }

    #[test]
    fn rank_ignores_noise() {
        assert_eq!(power_sum(&wv(&[1.0, 1e-14]), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn renyi_examples() {
        assert!((renyi_entropy(&wv(&[0.25; 4]), 0.3).unwrap() - 2.0).abs() < 1e-12);
        let h = renyi_entropy(&wv(&[0.9, 0.1]), 1.0).unwrap();
        let direct = -0.9 * 0.9f64.log2() - 0.1 * 0.1f64.log2();
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.4689956).abs() < 1e-7);
        assert!((renyi_entropy(&wv(&[0.5, 0.3, 0.2]), 0.0).unwrap() - 3f64.log2()).abs() < 1e-15);
        assert!(matches!(
            renyi_entropy(&wv(&[0.5, 0.6]), 0.5),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon_entropy(&wv(&[0.5, 0.5])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(shannon_entropy(&wv(&[1.0])).unwrap(), 0.0);
        let direct = -0.7 * 0.7f64.log2() - 0.3 * 0.3f64.log2();
        let h = shannon_entropy(&wv(&[0.7, 0.3])).unwrap();
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.8812909).abs() < 1e-7);
        assert!(shannon_entropy(&wv(&[0.7, 0.7])).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let p = wv(&[0.2, 0.3, 0.5]);
        assert!(relative_entropy(&p, &p).unwrap().abs() < 1e-15);
        assert_eq!(
            relative_entropy(&wv(&[0.5, 0.5]), &wv(&[1.0, 0.0])).unwrap(),
            f64::INFINITY
        );
        let direct = 0.5 * (0.5f64 / 0.9).log2() + 0.5 * (0.5f64 / 0.1).log2();
        let d = relative_entropy(&wv(&[0.5, 0.5]), &wv(&[0.9, 0.1])).unwrap();
        assert!((d - direct).abs() < 1e-15);
        assert!((d - 0.7369656).abs() < 1e-7);
        // padding: q shorter than p
        assert!(relative_entropy(&wv(&[1.0]), &wv(&[0.5, 0.5])).unwrap() > 0.0);
    }

    #[test]
    fn tilt_examples() {
        let p = wv(&[0.2, 0.3, 0.5]);
        let t = tilt(&p, &[2.0, 2.0, 2.0], 0.5).unwrap();
        assert!((t.z - 4.0).abs() < 1e-12);
        for (a, b) in t.tilted.weights().iter().zip(p.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = tilt(&wv(&[0.5, 0.5]), &[1.0, 4.0], 0.5).unwrap();
        assert!((t.z - 8.5).abs() < 1e-12);
        assert!((t.tilted.weights()[0] - 1.0 / 17.0).abs() < 1e-15);
        assert!((t.tilted.weights()[1] - 16.0 / 17.0).abs() < 1e-15);
        let t = tilt(&wv(&[1.0]), &[3.0], 0.25).unwrap();
        assert!((t.z - 81.0).abs() < 1e-9);
        assert_eq!(t.tilted.weights(), &[1.0]);
        assert_eq!(tilt(&wv(&[0.5, 0.5]), &[0.0, 0.0], 0.5), Err(Error::DegenerateTilt));
        assert!(tilt(&wv(&[0.5, 0.5]), &[1.0], 0.5).is_err());
        assert!(tilt(&wv(&[0.5, 0.5]), &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn json_form() {
        let w: WeightVector = serde_json::from_str(r#"{"weights":[0.25,0.75]}"#).unwrap();
        assert_eq!(w.weights(), &[0.25, 0.75]);
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"weights":[0.25,0.75]}"#);
        assert!(serde_json::from_str::<WeightVector>(r#"{"weights":[-1]}"#).is_err());
    }

    fn distribution() -> impl Strategy<Value = WeightVector> {
        prop::collection::vec(0.001f64..1.0, 1..10).prop_map(|v| {
            let s: f64 = v.iter().sum();
            WeightVector::new(v.into_iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn renyi_non_increasing_and_bounded(w in distribution()) {
            let log_d = (w.len() as f64).log2();
            let mut prev = f64::INFINITY;
            for k in 0..=100 {
                let h = renyi_entropy(&w, k as f64 / 100.0).unwrap();
                prop_assert!(h <= prev + 1e-9);
                prop_assert!(h >= 0.0 && h <= log_d + 1e-9);
                prev = h;
            }
        }

        #[test]
        fn uniform_fixpoint(d in 1usize..20, a in 0.0f64..=1.0) {
            let u = WeightVector::uniform(d).unwrap();
            prop_assert!((renyi_entropy(&u, a).unwrap() - (d as f64).log2()).abs() < 1e-9);
        }

        #[test]
        fn continuity_at_one(w in distribution()) {
            let a = 1.0 - 1e-8;
            let direct = power_sum(&w, a).unwrap().log2() / (1.0 - a);
            prop_assert!((direct - shannon_entropy(&w).unwrap()).abs() <= 1e-6);
        }

        #[test]
        fn gibbs(q in distribution(), p in distribution()) {
            let d = relative_entropy(&q, &p).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(relative_entropy(&q, &q).unwrap() <= 1e-12);
        }

        #[test]
        fn tilt_normalized(p in distribution(), seed in 0.01f64..5.0, a in 0.05f64..=1.0) {
            let values: Vec<f64> = (0..p.len()).map(|i| seed * (1.0 + i as f64)).collect();
            let t = tilt(&p, &values, a).unwrap();
            prop_assert!((t.tilted.total() - 1.0).abs() <= 1e-12);
        }
    }
}

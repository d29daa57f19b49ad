//! Asymptotic conversion rates between bipartite pure states.
//!
//! With `P`, `Q` the Schmidt spectra of source and target and `r` the converse
//! error exponent (bits per copy), the optimal rate is
//!
//! ```text
//! E*(r, P, Q) = inf_{α ∈ [0,1)} (r α + log Σ p_i^α) / log Σ q_i^α
//! ```
//!
//! and the rate with success probability tending to one is
//! `E(P, Q) = min_{α ∈ [0,1]} H_α(P) / H_α(Q)`. Both are computed by
//! [`GridMinimizer`]. At `r = 0` the closed interval is used so that the
//! α = 1 endpoint (Shannon entropies) is attained rather than approached.
//!
//! Degenerate inputs follow the limits of the formula: a point-mass target
//! gives `+∞` with no minimizer; a point-mass source with an entangled target
//! gives 0 at α = 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::GridMinimizer;
use crate::spectra::{power_sum_unchecked, renyi_unchecked, WeightVector};
use crate::spectral::schmidt_spectrum;
use crate::state::PureState;

/// Upper end of the grid for the open interval `[0, 1)`.
pub const OPEN_UPPER: f64 = 1.0 - 1e-9;
/// Denominators at or below this make the objective `+∞`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `(P, Q, r)` with both spectra normalized and `r ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateQuery {
    source: WeightVector,
    target: WeightVector,
    r: f64,
}

impl RateQuery {
    pub fn new(source: WeightVector, target: WeightVector, r: f64) -> Result<Self> {
        source.require_normalized()?;
        target.require_normalized()?;
        check_exponent(r)?;
        Ok(RateQuery { source, target, r })
    }

    pub fn source(&self) -> &WeightVector {
        &self.source
    }

    pub fn target(&self) -> &WeightVector {
        &self.target
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("converse error exponent r = {r} must be finite and ≥ 0")));
    }
    Ok(())
}

/// Optimal value with optimizer diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateResultRepr", into = "RateResultRepr")]
pub struct RateResult {
    pub value: f64,
    pub argmin_alpha: Option<f64>,
    pub grid_size: usize,
    pub refinement_steps: usize,
    pub value_tolerance: f64,
}

impl RateResult {
    fn infinite() -> Self {
        RateResult {
            value: f64::INFINITY,
            argmin_alpha: None,
            grid_size: 0,
            refinement_steps: 0,
            value_tolerance: 0.0,
        }
    }

    fn exact(value: f64, alpha: f64) -> Self {
        RateResult {
            value,
            argmin_alpha: Some(alpha),
            grid_size: 0,
            refinement_steps: 0,
            value_tolerance: 0.0,
        }
    }

    fn from_minimum(m: crate::optimize::Minimum) -> Self {
        if m.value.is_finite() {
            RateResult {
                value: m.value.max(0.0),
                argmin_alpha: Some(m.argmin),
                grid_size: m.grid_size,
                refinement_steps: m.refinement_steps,
                value_tolerance: m.value_tolerance,
            }
        } else {
            RateResult { grid_size: m.grid_size, ..Self::infinite() }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueRepr {
    Number(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
struct RateResultRepr {
    argmin_alpha: Option<f64>,
    grid_size: usize,
    refinement_steps: usize,
    value: ValueRepr,
    value_tolerance: f64,
}

impl From<RateResult> for RateResultRepr {
    fn from(r: RateResult) -> Self {
        RateResultRepr {
            argmin_alpha: r.argmin_alpha,
            grid_size: r.grid_size,
            refinement_steps: r.refinement_steps,
            value: if r.value.is_finite() {
                ValueRepr::Number(r.value)
            } else {
                ValueRepr::Text("inf".into())
            },
            value_tolerance: r.value_tolerance,
        }
    }
}

impl TryFrom<RateResultRepr> for RateResult {
    type Error = Error;
    fn try_from(r: RateResultRepr) -> Result<Self> {
        let value = match r.value {
            ValueRepr::Number(v) => v,
            ValueRepr::Text(s) if s == "inf" => f64::INFINITY,
            ValueRepr::Text(s) => return Err(Error::Domain(format!("bad rate value {s:?}"))),
        };
        if value.is_finite() != r.argmin_alpha.is_some() {
            return Err(Error::Domain("argmin_alpha must be present iff value is finite".into()));
        }
        Ok(RateResult {
            value,
            argmin_alpha: r.argmin_alpha,
            grid_size: r.grid_size,
            refinement_steps: r.refinement_steps,
            value_tolerance: r.value_tolerance,
        })
    }
}

fn objective_unchecked(p: &[f64], q: &[f64], r: f64, alpha: f64) -> f64 {
    let den = power_sum_unchecked(q, alpha).log2();
    if den <= DENOMINATOR_FLOOR {
        return f64::INFINITY;
    }
    (r * alpha + power_sum_unchecked(p, alpha).log2()) / den
}

/// `(r α + log₂ Σ p_i^α) / log₂ Σ q_i^α` for α ∈ [0, 1).
///
/// Returns `+∞` when the denominator is at most [`DENOMINATOR_FLOOR`]; for a
/// point-mass target this includes the 0/0 case, matching the `+∞` of
/// [`deterministic_rate`].
pub fn rate_objective(p: &WeightVector, q: &WeightVector, r: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1)")));
    }
    p.require_normalized()?;
    q.require_normalized()?;
    check_exponent(r)?;
    Ok(objective_unchecked(p.weights(), q.weights(), r, alpha))
}

/// `E*(r, P, Q)`.
pub fn converse_rate(query: &RateQuery) -> RateResult {
    converse_rate_with(query, GridMinimizer::new(0.0, OPEN_UPPER))
}

/// [`converse_rate`] with an explicit optimizer configuration (the upper end
/// is replaced by 1 when `r = 0`).
pub fn converse_rate_with(query: &RateQuery, minimizer: GridMinimizer) -> RateResult {
    let (p, q, r) = (&query.source, &query.target, query.r);
    if let Some(res) = degenerate(p, q) {
        return res;
    }
    if r == 0.0 {
        return renyi_ratio_min(p, q, GridMinimizer { upper: 1.0, ..minimizer });
    }
    let (pw, qw) = (p.weights(), q.weights());
    RateResult::from_minimum(minimizer.minimize(|a| objective_unchecked(pw, qw, r, a)))
}

fn degenerate(p: &WeightVector, q: &WeightVector) -> Option<RateResult> {
    if q.is_point_mass() {
        Some(RateResult::infinite())
    } else if p.is_point_mass() {
        Some(RateResult::exact(0.0, 0.0))
    } else {
        None
    }
}

fn renyi_ratio_min(p: &WeightVector, q: &WeightVector, minimizer: GridMinimizer) -> RateResult {
    let (pw, qw) = (p.weights(), q.weights());
    RateResult::from_minimum(minimizer.minimize(|a| renyi_unchecked(pw, a) / renyi_unchecked(qw, a)))
}

/// `E(P, Q) = min_{α ∈ [0,1]} H_α(P) / H_α(Q)`.
pub fn deterministic_rate(p: &WeightVector, q: &WeightVector) -> Result<RateResult> {
    p.require_normalized()?;
    q.require_normalized()?;
    if let Some(res) = degenerate(p, q) {
        return Ok(res);
    }
    Ok(renyi_ratio_min(p, q, GridMinimizer::new(0.0, 1.0)))
}

/// Rate of EPR pairs: `inf_{α ∈ [0,1)} (r α + log₂ Σ p_i^α) / (1 − α)`.
pub fn concentration_rate(p: &WeightVector, r: f64) -> Result<RateResult> {
    p.require_normalized()?;
    check_exponent(r)?;
    if p.is_point_mass() {
        return Ok(RateResult::exact(0.0, 0.0));
    }
    let pw = p.weights();
    if r == 0.0 {
        let m = GridMinimizer::new(0.0, 1.0).minimize(|a| renyi_unchecked(pw, a));
        return Ok(RateResult::from_minimum(m));
    }
    let m = GridMinimizer::new(0.0, OPEN_UPPER)
        .minimize(|a| (r * a + power_sum_unchecked(pw, a).log2()) / (1.0 - a));
    Ok(RateResult::from_minimum(m))
}

/// [`converse_rate`] at each `r`, in input order.
pub fn rate_curve(p: &WeightVector, q: &WeightVector, r_values: &[f64]) -> Result<Vec<(f64, RateResult)>> {
    r_values
        .par_iter()
        .map(|&r| {
            let query = RateQuery::new(p.clone(), q.clone(), r)?;
            Ok((r, converse_rate(&query)))
        })
        .collect()
}

/// Minimum of the bipartite rate over all cuts of a multipartite pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipartiteBound {
    /// Parties on one side of the minimizing cut (`None` when every cut gives `+∞`).
    pub cut: Option<Vec<usize>>,
    pub value: f64,
}

/// Upper bound on the `k`-party rate: the smallest bipartite rate over all
/// cuts, each cut enumerated once up to complement.
pub fn multipartite_upper_bound(source: &PureState, target: &PureState, r: f64) -> Result<MultipartiteBound> {
    let k = source.parties();
    if k < 2 || target.parties() != k {
        return Err(Error::Dimension(format!(
            "need two states with the same number (≥ 2) of parties, got {} and {}",
            k,
            target.parties()
        )));
    }
    check_exponent(r)?;
    for s in [source, target] {
        let n = s.norm_sqr();
        if (n - 1.0).abs() > crate::spectra::NORMALIZATION_TOL {
            return Err(Error::Unnormalized(n));
        }
    }
    let cuts: Vec<Vec<usize>> = (0..(1usize << (k - 1)) - 1)
        .map(|mask| {
            // Party 0 is always on the cut side; `mask` picks the others.
            std::iter::once(0)
                .chain((1..k).filter(|&p| mask >> (p - 1) & 1 == 1))
                .collect()
        })
        .collect();
    let mut best = MultipartiteBound { value: f64::INFINITY, cut: None };
    for cut in cuts {
        let p = normalize_spectrum(schmidt_spectrum(source, &cut)?)?;
        let q = normalize_spectrum(schmidt_spectrum(target, &cut)?)?;
        let res = converse_rate(&RateQuery::new(p, q, r)?);
        if res.value < best.value {
            best = MultipartiteBound { value: res.value, cut: Some(cut) };
        }
    }
    Ok(best)
}

// Clamping solver noise can shave ~1e-13 off the total; restore it exactly.
fn normalize_spectrum(w: WeightVector) -> Result<WeightVector> {
    let total = w.total();
    w.require_normalized()?;
    WeightVector::new(w.into_weights().into_iter().map(|x| x / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    fn query(p: &[f64], q: &[f64], r: f64) -> RateQuery {
        RateQuery::new(wv(p), wv(q), r).unwrap()
    }

    #[test]
    fn objective_examples() {
        let v = rate_objective(&wv(&[0.75, 0.25]), &wv(&[0.5, 0.5]), 0.1, 0.5).unwrap();
        let direct = (0.05 + (0.75f64.sqrt() + 0.25f64.sqrt()).log2()) / 0.5;
        assert!((v - direct).abs() < 1e-14);
        assert!((v - 0.9999686).abs() < 1e-7);
        let p = wv(&[0.6, 0.3, 0.1]);
        for a in [0.0, 0.4, 0.9] {
            assert!((rate_objective(&p, &p, 0.0, a).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(rate_objective(&wv(&[1.0]), &wv(&[0.5, 0.5]), 1.0, 0.0).unwrap(), 0.0);
        assert!(rate_objective(&p, &p, 0.0, 1.0).is_err());
        assert_eq!(rate_objective(&p, &wv(&[1.0]), 0.0, 0.3).unwrap(), f64::INFINITY);
        assert_eq!(rate_objective(&wv(&[1.0]), &wv(&[1.0, 0.0]), 0.0, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn converse_examples() {
        let p = [0.5, 0.2, 0.2, 0.1];
        let r = converse_rate(&query(&p, &p, 0.0));
        assert!((r.value - 1.0).abs() < 1e-12);

        let r = converse_rate(&query(&[0.25; 4], &[0.5, 0.5], 0.2));
        assert!((r.value - 2.0).abs() < 1e-10);
        assert!(r.argmin_alpha.unwrap() < 1e-9);
        assert!(r.value_tolerance <= 1e-8);

        let c = converse_rate(&query(&[0.75, 0.25], &[0.5, 0.5], 0.1));
        let e = concentration_rate(&wv(&[0.75, 0.25]), 0.1).unwrap();
        assert!((c.value - e.value).abs() < 1e-8);
    }

    #[test]
    fn degenerate_cases() {
        let r = converse_rate(&query(&[0.5, 0.5], &[1.0], 0.3));
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.argmin_alpha, None);
        let r = converse_rate(&query(&[1.0, 0.0], &[0.5, 0.5], 0.3));
        assert_eq!((r.value, r.argmin_alpha), (0.0, Some(0.0)));
        assert!(RateQuery::new(wv(&[0.5, 0.6]), wv(&[1.0]), 0.0).is_err());
        assert!(RateQuery::new(wv(&[1.0]), wv(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn deterministic_examples() {
        assert!((deterministic_rate(&wv(&[0.25; 4]), &wv(&[0.5, 0.5])).unwrap().value - 2.0).abs() < 1e-12);
        let r = deterministic_rate(&wv(&[0.9, 0.1]), &wv(&[0.5, 0.5])).unwrap();
        let h = -0.9 * 0.9f64.log2() - 0.1 * 0.1f64.log2();
        assert!((r.value - h).abs() < 1e-12);
        assert!((r.value - 0.4689956).abs() < 1e-7);
        assert_eq!(r.argmin_alpha, Some(1.0));
        let p = wv(&[0.4, 0.35, 0.25]);
        assert!((deterministic_rate(&p, &p).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentration_examples() {
        for r in [0.0, 0.3, 2.0] {
            let res = concentration_rate(&wv(&[0.5, 0.5]), r).unwrap();
            assert!((res.value - 1.0).abs() < 1e-12);
            assert_eq!(res.argmin_alpha, Some(0.0));
        }
        let p = wv(&[0.6, 0.25, 0.15]);
        let c = concentration_rate(&p, 0.0).unwrap();
        let d = deterministic_rate(&p, &wv(&[0.5, 0.5])).unwrap();
        assert!((c.value - d.value).abs() < 1e-8);
        assert_eq!(concentration_rate(&wv(&[1.0]), 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn rate_curve_examples() {
        let p = wv(&[0.75, 0.25]);
        let q = wv(&[0.5, 0.5]);
        assert!(rate_curve(&p, &q, &[]).unwrap().is_empty());
        let one = rate_curve(&p, &q, &[0.0]).unwrap();
        assert!((one[0].1.value - deterministic_rate(&p, &q).unwrap().value).abs() < 1e-12);
        let rs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let curve = rate_curve(&p, &q, &rs).unwrap();
        for w in curve.windows(2) {
            assert!(w[0].0 < w[1].0);
            assert!(w[1].1.value >= w[0].1.value - 1e-12);
        }
        assert!(rate_curve(&p, &q, &[-0.1]).is_err());
    }

    #[test]
    fn multipartite_examples() {
        let h = 0.5f64.sqrt();
        let mut g = vec![0.0; 8];
        g[0] = h;
        g[7] = h;
        let ghz = PureState::from_real(vec![2, 2, 2], &g).unwrap();
        let b = multipartite_upper_bound(&ghz, &ghz, 0.0).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12);

        let t = 1.0 / 3f64.sqrt();
        let mut w = vec![0.0; 8];
        w[1] = t;
        w[2] = t;
        w[4] = t;
        let w = PureState::from_real(vec![2, 2, 2], &w).unwrap();
        let b = multipartite_upper_bound(&w, &ghz, 0.0).unwrap();
        let h23 = -(2.0 / 3.0) * (2.0f64 / 3.0).log2() - (1.0 / 3.0) * (1.0f64 / 3.0).log2();
        assert!((b.value - h23).abs() < 1e-10);
        assert!((b.value - 0.9182958).abs() < 1e-7);

        let prod = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        assert_eq!(multipartite_upper_bound(&prod, &ghz, 0.0).unwrap().value, 0.0);

        let single = PureState::from_real(vec![2], &[1.0, 0.0]).unwrap();
        assert!(multipartite_upper_bound(&single, &single, 0.0).is_err());
    }

    #[test]
    fn result_json() {
        let r = converse_rate(&query(&[0.75, 0.25], &[0.5, 0.5], 0.1));
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RateResult>(&js).unwrap(), r);
        let inf = converse_rate(&query(&[0.5, 0.5], &[1.0], 0.0));
        let js = serde_json::to_string(&inf).unwrap();
        assert!(js.contains(r#""value":"inf""#) && js.contains(r#""argmin_alpha":null"#));
        assert_eq!(serde_json::from_str::<RateResult>(&js).unwrap(), inf);
    }

    #[test]
    fn finer_grid_agrees() {
        let q = query(&[0.5, 0.3, 0.2], &[0.7, 0.3], 0.25);
        let coarse = converse_rate(&q);
        let fine = converse_rate_with(&q, GridMinimizer::new(0.0, OPEN_UPPER).with_grid_size(10 * 4096));
        assert!((coarse.value - fine.value).abs() <= coarse.value_tolerance);
    }
}

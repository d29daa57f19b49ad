//! Schmidt spectra and the spectral functionals `f_α`.
//!
//! For a bipartite state `f_α(φ) = Tr[(Tr₂|φ⟩⟨φ|)^α]`, the power sum of the
//! Schmidt weights. For `k > 2` parties the same functional is evaluated
//! across an explicit cut; nothing here claims those exhaust the multipartite
//! spectrum.
//!
//! The `check_*` functions evaluate the split inequality
//!
//! ```text
//! f(φ) ≥ ( f(A φ)^{1/α} + f(B φ)^{1/α} )^α
//! ```
//!
//! for projections (`A = Π`, `B = I − Π`), general contractions
//! (`A*A + B*B ≤ I`), and in the matrix trace form. They return the two sides
//! so callers can inspect margins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectra::{power_sum_unchecked, WeightVector};
use crate::state::{ConditionallyPure, PureState};

/// Relative slack allowed by the `check_*` inequalities.
pub const SPLIT_REL_TOL: f64 = 1e-10;
/// Tolerance on projector idempotence and on `A*A + B*B ≤ I`.
pub const OPERATOR_TOL: f64 = 1e-10;

/// The point `f_α` of the bipartite spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    alpha: f64,
}

impl SpectralPoint {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SpectralPoint { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `f_α` across `cut`.
    pub fn eval(&self, state: &PureState, cut: &[usize]) -> Result<f64> {
        eval_f_alpha(state, cut, self.alpha)
    }

    /// `log₂ f(√2 |0…0⟩)` for a `k`-party unit state, which recovers α.
    pub fn homogeneity_exponent(&self, parties: usize) -> Result<f64> {
        let dims = vec![1; parties.max(2)];
        let s = PureState::from_real(dims, &[2f64.sqrt()])?;
        Ok(self.eval(&s, &[0])?.log2())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    Ok(())
}

fn check_alpha_positive(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside (0, 1]")));
    }
    Ok(())
}

fn validate_cut(state: &PureState, cut: &[usize]) -> Result<()> {
    let k = state.parties();
    let mut seen = vec![false; k];
    let ok = !cut.is_empty()
        && cut.len() < k
        && cut.iter().all(|&p| p < k && !std::mem::replace(&mut seen[p], true));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidCut { cut: cut.to_vec(), parties: k })
    }
}

/// Squared singular values of the matricization across `cut`, non-increasing.
///
/// Computed from the Gram matrix of the smaller side; the entries sum to the
/// squared norm of the state up to solver noise.
pub fn schmidt_spectrum(state: &PureState, cut: &[usize]) -> Result<WeightVector> {
    validate_cut(state, cut)?;
    let m = state.matricize(cut)?;
    let gram = if m.nrows() <= m.ncols() {
        &m * m.adjoint()
    } else {
        m.adjoint() * &m
    };
    WeightVector::new(linalg::psd_eigenvalues(&gram)?)
}

/// `f_α(state)` across `cut`: the power sum of the Schmidt spectrum.
pub fn eval_f_alpha(state: &PureState, cut: &[usize], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let spec = schmidt_spectrum(state, cut)?;
    Ok(power_sum_unchecked(spec.weights(), alpha))
}

/// Bipartite `f_α` with the default cut `{0}`.
pub fn eval_f_alpha_bipartite(state: &PureState, alpha: f64) -> Result<f64> {
    if state.parties() != 2 {
        return Err(Error::Dimension(format!(
            "expected a bipartite state, got {} parties",
            state.parties()
        )));
    }
    eval_f_alpha(state, &[0], alpha)
}

/// Extension of `f_α` to ensembles.
///
/// `(Σ_x f_α(φ_x)^{1/α})^α` for α > 0 and `max_x f_0(φ_x)` for α = 0. The
/// empty ensemble evaluates to 0.
pub fn eval_f_alpha_conditional(state: &ConditionallyPure, cut: &[usize], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let values = state
        .branches()
        .values()
        .map(|s| eval_f_alpha(s, cut, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_branches(&values, alpha))
}

pub(crate) fn combine_branches(values: &[f64], alpha: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if alpha == 0.0 {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        crate::spectra::compensated_sum(values.iter().map(|v| v.powf(1.0 / alpha))).powf(alpha)
    }
}

/// Two sides of a split inequality and whether it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl SplitCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        SplitCheck { lhs, rhs, holds: lhs >= rhs - SPLIT_REL_TOL * lhs.abs() }
    }

    /// `(rhs − lhs) / lhs`; positive means the inequality is violated by that much.
    pub fn relative_excess(&self) -> f64 {
        if self.lhs == 0.0 {
            if self.rhs > 0.0 { f64::INFINITY } else { 0.0 }
        } else {
            (self.rhs - self.lhs) / self.lhs
        }
    }
}

fn require_bipartite(state: &PureState) -> Result<()> {
    if state.parties() != 2 {
        return Err(Error::Dimension(format!(
            "split checks need a bipartite state, got {} parties",
            state.parties()
        )));
    }
    Ok(())
}

fn split(state: &PureState, party: usize, a: &CMatrix, b: &CMatrix, alpha: f64) -> Result<SplitCheck> {
    let lhs = eval_f_alpha_bipartite(state, alpha)?;
    let fa = eval_f_alpha_bipartite(&state.apply_local(party, a)?, alpha)?;
    let fb = eval_f_alpha_bipartite(&state.apply_local(party, b)?, alpha)?;
    Ok(SplitCheck::new(lhs, combine_branches(&[fa, fb], alpha)))
}

fn local_dim(state: &PureState, party: usize) -> Result<usize> {
    state.dims().get(party).copied().ok_or_else(|| {
        Error::Dimension(format!("party {party} out of range for {} parties", state.parties()))
    })
}

fn require_square(m: &CMatrix, d: usize, name: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Split inequality for an orthogonal projection `Π` on `party`.
pub fn check_projection_split(
    state: &PureState,
    party: usize,
    projector: &CMatrix,
    alpha: f64,
) -> Result<SplitCheck> {
    check_alpha_positive(alpha)?;
    require_bipartite(state)?;
    let d = local_dim(state, party)?;
    require_square(projector, d, "projector")?;
    linalg::check_projector(projector, OPERATOR_TOL)?;
    let complement = linalg::identity(d) - projector;
    split(state, party, projector, &complement, alpha)
}

/// Split inequality for local operators with `A*A + B*B ≤ I`.
pub fn check_general_split(
    state: &PureState,
    party: usize,
    a: &CMatrix,
    b: &CMatrix,
    alpha: f64,
) -> Result<SplitCheck> {
    check_alpha_positive(alpha)?;
    require_bipartite(state)?;
    let d = local_dim(state, party)?;
    require_square(a, d, "A")?;
    require_square(b, d, "B")?;
    let top = linalg::lambda_max(&(a.adjoint() * a + b.adjoint() * b));
    if top > 1.0 + OPERATOR_TOL {
        return Err(Error::KrausConstraint(format!(
            "largest eigenvalue of A*A + B*B is {top}"
        )));
    }
    split(state, party, a, b, alpha)
}

/// `[Tr (X*X)^α]^{1/α} ≥ [Tr (X*ΠX)^α]^{1/α} + [Tr (X*(I−Π)X)^α]^{1/α}`.
pub fn check_trace_inequality(x: &CMatrix, projector: &CMatrix, alpha: f64) -> Result<SplitCheck> {
    check_alpha_positive(alpha)?;
    let n = x.nrows();
    require_square(x, n, "X")?;
    require_square(projector, n, "projector")?;
    linalg::check_projector(projector, OPERATOR_TOL)?;
    let complement = linalg::identity(n) - projector;
    let xa = x.adjoint();
    let term = |m: &CMatrix| -> Result<f64> {
        Ok(linalg::trace_power(m, alpha)?.powf(1.0 / alpha))
    };
    let lhs = term(&(&xa * x))?;
    let rhs = term(&(&xa * projector * x))? + term(&(&xa * complement * x))?;
    Ok(SplitCheck::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::locc::ghz_state;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| c(x, 0.0)),
        ))
    }

    fn epr() -> PureState {
        let h = 0.5f64.sqrt();
        PureState::from_real(vec![2, 2], &[h, 0.0, 0.0, h]).unwrap()
    }

    #[test]
    fn schmidt_examples() {
        let h = 0.5f64.sqrt();
        let prod = PureState::from_real(vec![2, 2], &[h, h, 0.0, 0.0]).unwrap();
        let s = schmidt_spectrum(&prod, &[0]).unwrap();
        assert!((s.weights()[0] - 1.0).abs() < 1e-14);
        assert!(s.weights()[1..].iter().all(|&x| x == 0.0));

        let s = schmidt_spectrum(&epr(), &[0]).unwrap();
        assert!((s.weights()[0] - 0.5).abs() < 1e-14 && (s.weights()[1] - 0.5).abs() < 1e-14);

        let t = 1.0 / 3f64.sqrt();
        let mut w = vec![0.0; 8];
        w[1] = t;
        w[2] = t;
        w[4] = t;
        let w = PureState::from_real(vec![2, 2, 2], &w).unwrap();
        let s = schmidt_spectrum(&w, &[0]).unwrap();
        assert!((s.weights()[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((s.weights()[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn cut_validation() {
        let s = epr();
        assert!(schmidt_spectrum(&s, &[]).is_err());
        assert!(schmidt_spectrum(&s, &[0, 1]).is_err());
        assert!(schmidt_spectrum(&s, &[3]).is_err());
    }

    #[test]
    fn f_alpha_examples() {
        for d in 1..5 {
            let g = ghz_state(d, 3).unwrap();
            for a in [0.0, 0.3, 1.0] {
                assert!((eval_f_alpha(&g, &[1], a).unwrap() - d as f64).abs() < 1e-12);
            }
        }
        assert!((eval_f_alpha(&epr(), &[0], 0.5).unwrap() - 1.4142136).abs() < 1e-7);
        assert!((eval_f_alpha(&epr(), &[0], 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(eval_f_alpha(&epr(), &[0], 1.2).is_err());
    }

    #[test]
    fn homogeneity_exponent_recovers_alpha() {
        for a in [0.0, 0.25, 0.9] {
            let p = SpectralPoint::new(a).unwrap();
            assert!((p.homogeneity_exponent(2).unwrap() - a).abs() < 1e-12);
        }
        assert!(SpectralPoint::new(-0.1).is_err());
    }

    #[test]
    fn conditional_examples() {
        let single = ConditionallyPure::pure(epr());
        assert!(
            (eval_f_alpha_conditional(&single, &[0], 0.4).unwrap()
                - eval_f_alpha(&epr(), &[0], 0.4).unwrap())
            .abs()
                < 1e-14
        );

        let half = epr().scaled(c(0.5f64.sqrt(), 0.0));
        let mut b = std::collections::BTreeMap::new();
        b.insert("a".to_string(), half.clone());
        b.insert("b".to_string(), half);
        let cp = ConditionallyPure::new(b).unwrap();
        let v = eval_f_alpha_conditional(&cp, &[0], 0.5).unwrap();
        assert!((v - 1.4142136).abs() < 1e-7);

        let mut b = std::collections::BTreeMap::new();
        b.insert("r1".to_string(), PureState::basis(vec![2, 2], &[0, 0]).unwrap());
        b.insert("r2".to_string(), epr());
        let cp = ConditionallyPure::new(b).unwrap();
        assert_eq!(eval_f_alpha_conditional(&cp, &[0], 0.0).unwrap(), 2.0);

        let empty = ConditionallyPure::empty(vec![2, 2]);
        assert_eq!(eval_f_alpha_conditional(&empty, &[0], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn projection_split_examples() {
        let phi = ghz_state(2, 2).unwrap();
        for a in [0.1, 0.5, 1.0] {
            let r = check_projection_split(&phi, 0, &diag(&[1.0, 0.0]), a).unwrap();
            assert!((r.lhs - 2.0).abs() < 1e-12);
            assert!((r.rhs - 2f64.powf(a)).abs() < 1e-12);
            assert!(r.holds);
            let r = check_projection_split(&phi, 1, &diag(&[1.0, 1.0]), a).unwrap();
            assert!((r.lhs - r.rhs).abs() < 1e-12 && r.holds);
        }
        assert!(matches!(
            check_projection_split(&phi, 0, &diag(&[1.0, 0.5]), 0.5),
            Err(Error::NotProjector(_))
        ));
        assert!(check_projection_split(&phi, 0, &diag(&[1.0, 0.0]), 0.0).is_err());
        let tri = ghz_state(2, 3).unwrap();
        assert!(check_projection_split(&tri, 0, &diag(&[1.0, 0.0]), 0.5).is_err());
    }

    #[test]
    fn general_split_examples() {
        let id = diag(&[1.0, 1.0]);
        let zero = diag(&[0.0, 0.0]);
        let r = check_general_split(&epr(), 0, &id, &zero, 0.3).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-12 && r.holds);

        let h = id.scale(0.5f64.sqrt());
        let r = check_general_split(&epr(), 0, &h, &h, 0.5).unwrap();
        assert!((r.lhs - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.rhs - 2f64.sqrt()).abs() < 1e-12);
        assert!(r.holds);

        assert!(matches!(
            check_general_split(&epr(), 0, &id, &id, 0.5),
            Err(Error::KrausConstraint(_))
        ));
    }

    #[test]
    fn trace_inequality_examples() {
        let x = CMatrix::from_fn(3, 3, |i, j| c(i as f64 - j as f64 * 0.5, (i * j) as f64 * 0.1));
        let p = diag(&[1.0, 0.0, 1.0]);
        let r = check_trace_inequality(&x, &p, 1.0).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-10 * r.lhs);

        // (1^α + 1^α)^{1/α} = 4 against 1 + 1
        let r = check_trace_inequality(&diag(&[1.0, 1.0]), &diag(&[1.0, 0.0]), 0.5).unwrap();
        assert!((r.lhs - 4.0).abs() < 1e-12 && (r.rhs - 2.0).abs() < 1e-12 && r.holds);

        assert!(matches!(
            check_trace_inequality(&x, &diag(&[1.0, 0.0]), 0.5),
            Err(Error::Dimension(_))
        ));
    }
}

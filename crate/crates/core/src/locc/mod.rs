//! Finite LOCC protocols acting on pure and conditionally pure states.
//!
//! A step acts on one party with Kraus operators `K_j`; `read(j)` is the
//! register label the operator fires on and `write(j)` the label of its
//! output. Parties are 0-based. Plain pure states carry the one-point register
//! [`ConditionallyPure::ROOT`].

mod apply;
mod lift;
mod normal_form;
mod step;

use serde::{Deserialize, Serialize};

pub use apply::{
    apply_protocol, apply_protocol_dense, apply_step, local_operator, MixedState, ProtocolOutput,
    MAX_BRANCHES, MAX_DENSE_DIM,
};
pub use lift::{branch_form, lift_direct_sum, BranchForm, BRANCH_FORM_TOL};
pub use normal_form::{to_normal_form, PATH_SEPARATOR};
pub use step::{validate_step, KrausMargin, LoccStep, Protocol, StepReport, KRAUS_TOL};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::state::{ConditionallyPure, PureState};

/// Row-major `{"im": [[..]], "re": [[..]]}`.
#[derive(Serialize, Deserialize)]
pub(crate) struct MatrixJson {
    im: Vec<Vec<f64>>,
    re: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&crate::linalg::C64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixJson { im: rows(|z| z.im), re: rows(|z| z.re) }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        let rows = m.re.len();
        let cols = m.re.first().map_or(0, Vec::len);
        let ragged = |v: &Vec<Vec<f64>>| v.len() != rows || v.iter().any(|r| r.len() != cols);
        if ragged(&m.re) || ragged(&m.im) {
            return Err(Error::Dimension("matrix rows of re and im must all have equal length".into()));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| c(m.re[i][j], m.im[i][j])))
    }
}

/// Unnormalized `Σ_{i<d} |i…i⟩` on `k` parties of dimension `d`.
pub fn ghz_state(d: usize, k: usize) -> Result<PureState> {
    if d == 0 || k == 0 {
        return Err(Error::Domain("GHZ level and party count must be positive".into()));
    }
    let zero = PureState::zero(vec![d; k])?;
    let mut amps = zero.amplitudes().to_vec();
    // |i…i⟩ sits at i · (1 + d + … + d^{k−1})
    let stride = (0..k).fold(0usize, |acc, _| acc * d + 1);
    for i in 0..d {
        amps[i * stride] = c(1.0, 0.0);
    }
    PureState::new(vec![d; k], amps)
}

/// Runs `protocol` on a plain pure state.
pub fn apply_to_pure(state: &PureState, protocol: &Protocol) -> Result<ProtocolOutput> {
    apply_protocol(&ConditionallyPure::pure(state.clone()), protocol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorization::nielsen_convertible;
    use crate::spectra::WeightVector;
    use crate::spectral::{eval_f_alpha, schmidt_spectrum};

    #[test]
    fn ghz_examples() {
        let unit = ghz_state(1, 3).unwrap();
        assert_eq!(unit, PureState::basis(vec![1, 1, 1], &[0, 0, 0]).unwrap());
        let g = ghz_state(2, 2).unwrap();
        assert_eq!(g, PureState::from_real(vec![2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap());
        for a in [0.0, 0.5, 1.0] {
            assert!((eval_f_alpha(&g, &[0], a).unwrap() - 2.0).abs() < 1e-14);
        }
        assert!((ghz_state(3, 4).unwrap().norm_sqr() - 3.0).abs() < 1e-15);
        assert!(ghz_state(0, 2).is_err());
    }

    #[test]
    fn ghz_ordering_by_level() {
        let spectrum = |d: usize| {
            let g = ghz_state(d, 2).unwrap().scaled(c(1.0 / (d as f64).sqrt(), 0.0));
            let s = schmidt_spectrum(&g, &[0]).unwrap();
            WeightVector::new(s.weights().to_vec()).unwrap()
        };
        for d1 in 1..5 {
            for d2 in 1..5 {
                assert_eq!(nielsen_convertible(&spectrum(d1), &spectrum(d2)).unwrap(), d1 >= d2, "{d1} {d2}");
            }
        }
    }

    #[test]
    fn matrix_json_rejects_ragged() {
        let m: std::result::Result<MatrixJson, _> = serde_json::from_str(r#"{"im":[[0,0],[0]],"re":[[1,0],[0,1]]}"#);
        assert!(CMatrix::try_from(m.unwrap()).is_err());
    }
}

use std::collections::BTreeMap;

use super::apply::{apply_protocol, ProtocolOutput};
use super::step::{LoccStep, Protocol};
use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};
use crate::state::{ConditionallyPure, PureState};

/// Tolerance when checking that every output branch is a multiple of `φ₂`.
pub const BRANCH_FORM_TOL: f64 = 1e-8;

/// Output of a protocol of the form `Σ_y a_y |φ₂⟩⟨φ₂| ⊗ |y⟩⟨y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchForm {
    /// `c_y` with branch `y` equal to `c_y φ₂`; `a_y = |c_y|²`.
    pub coefficients: BTreeMap<String, C64>,
}

impl BranchForm {
    pub fn weights(&self) -> BTreeMap<String, f64> {
        self.coefficients.iter().map(|(y, z)| (y.clone(), z.norm_sqr())).collect()
    }
}

fn inner(a: &PureState, b: &PureState) -> C64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x.conj() * y).sum()
}

/// Checks that every branch of `out` is a multiple of `phi2` within
/// [`BRANCH_FORM_TOL`] and returns the multiples.
pub fn branch_form(out: &ConditionallyPure, phi2: &PureState) -> Result<BranchForm> {
    let nn = phi2.norm_sqr();
    if nn == 0.0 {
        return Err(Error::Protocol("target state is zero".into()));
    }
    if out.dims() != phi2.dims() {
        return Err(Error::Dimension(format!(
            "protocol output has dims {:?}, target has {:?}",
            out.dims(),
            phi2.dims()
        )));
    }
    let mut coefficients = BTreeMap::new();
    for (y, b) in out.branches() {
        let cy = inner(phi2, b) / nn;
        let resid = b
            .amplitudes()
            .iter()
            .zip(phi2.amplitudes())
            .map(|(x, p)| (x - cy * p).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if resid > BRANCH_FORM_TOL * b.norm_sqr().sqrt().max(1.0) {
            return Err(Error::Protocol(format!(
                "branch {y:?} is not proportional to the target (residual {resid:e})"
            )));
        }
        coefficients.insert(y.clone(), cy);
    }
    Ok(BranchForm { coefficients })
}

/// Lifts a remembering protocol taking `φ₁` to `Σ_y a_y |φ₂⟩⟨φ₂| ⊗ |y⟩⟨y|`
/// into one taking `φ₁ ⊕ ψ` to `Σ_y a_y |φ₂ ⊕ ψ⟩⟨φ₂ ⊕ ψ| ⊗ |y⟩⟨y|`.
///
/// Each `K_j` becomes `K_j ⊕ √(c_{write(j)} / c_{read(j)}) I`, where `c` of a
/// register label is the total final weight below it and the root has `c = 1`.
/// Branch `y` of the original is `c_y φ₂` with a phase; a last remembering
/// step on party 0 multiplies the `φ` block by `|c_y|/c_y` so the two blocks
/// line up. That step is omitted when all phases are already trivial.
pub fn lift_direct_sum(
    protocol: &Protocol,
    phi1: &PureState,
    phi2: &PureState,
    spectator: &PureState,
) -> Result<Protocol> {
    if !protocol.is_remembering() {
        return Err(Error::Protocol("the direct-sum lift needs a remembering protocol".into()));
    }
    if spectator.parties() != phi1.parties() {
        return Err(Error::Dimension(format!(
            "spectator has {} parties, state has {}",
            spectator.parties(),
            phi1.parties()
        )));
    }
    let ProtocolOutput::Branches(out) =
        apply_protocol(&ConditionallyPure::pure(phi1.clone()), &Protocol::new(protocol.steps().to_vec(), false)?)?
    else {
        unreachable!("register is kept");
    };
    let form = branch_form(&out, phi2)?;
    let steps = protocol.steps();
    if steps.is_empty() {
        let c0 = form.coefficients[ConditionallyPure::ROOT];
        if (c0 - c(1.0, 0.0)).norm() > BRANCH_FORM_TOL {
            return Err(Error::Protocol("an empty protocol lifts only when φ₁ = φ₂".into()));
        }
        return Ok(protocol.clone());
    }

    // c per (level, label); level t holds the labels written by step t.
    let n = steps.len();
    let mut weight: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); n + 1];
    weight[0].insert(ConditionallyPure::ROOT, 1.0);
    for (y, z) in &form.coefficients {
        weight[n].insert(y.as_str(), z.norm_sqr());
    }
    for t in (1..n).rev() {
        let next = &steps[t];
        let mut level = BTreeMap::new();
        for (j, x) in next.read() {
            let w = weight[t + 1].get(next.write()[j].as_str()).copied().unwrap_or(0.0);
            *level.entry(x.as_str()).or_insert(0.0) += w;
        }
        weight[t] = level;
    }

    let mut lifted = Vec::with_capacity(n + 1);
    for (t, step) in steps.iter().enumerate() {
        let e = spectator.dims()[step.party()];
        let mut kraus = BTreeMap::new();
        for (j, k) in step.kraus() {
            let parent = weight[t].get(step.read()[j].as_str()).copied().unwrap_or(0.0);
            let child = weight[t + 1].get(step.write()[j].as_str()).copied().unwrap_or(0.0);
            let s = if parent > 0.0 { (child / parent).min(1.0).sqrt() } else { 0.0 };
            kraus.insert(j.clone(), linalg::direct_sum(k, &linalg::identity(e).scale(s)));
        }
        lifted.push(LoccStep::new(step.party(), kraus, step.read().clone(), step.write().clone())?);
    }

    let phases: BTreeMap<&String, C64> = form
        .coefficients
        .iter()
        .map(|(y, z)| (y, if z.norm() > 0.0 { z.conj() / z.norm() } else { c(1.0, 0.0) }))
        .collect();
    if phases.values().any(|p| (p - c(1.0, 0.0)).norm() > 1e-15) {
        let d = phi2.dims()[0];
        let e = spectator.dims()[0];
        let ops = phases.into_iter().map(|(y, p)| {
            let k = linalg::direct_sum(&linalg::identity(d).map(|z| z * p), &linalg::identity(e));
            (y.clone(), y.clone(), k)
        });
        lifted.push(LoccStep::remembering(0, ops)?);
    }
    Protocol::new(lifted, protocol.trace_final_register())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn proj(i: usize) -> CMatrix {
        let mut p = CMatrix::zeros(2, 2);
        p[(i, i)] = c(1.0, 0.0);
        p
    }

    /// Measure party 0 of EPR (flipping it back to |0⟩ on outcome 1), then
    /// flip party 1 on outcome 1 with a phase i. Both branches end up as
    /// multiples of |00⟩ with weight 0.5.
    fn collapse_epr() -> (Protocol, PureState, PureState) {
        let h = 0.5f64.sqrt();
        let epr = PureState::from_real(vec![2, 2], &[h, 0.0, 0.0, h]).unwrap();
        let flip = CMatrix::from_fn(2, 2, |i, j| c((i != j) as u8 as f64, 0.0));
        let m = LoccStep::remembering(
            0,
            [("0".to_string(), "".to_string(), proj(0)), ("1".to_string(), "".to_string(), &flip * proj(1))],
        )
        .unwrap();
        let fix = LoccStep::remembering(
            1,
            [
                ("0'".to_string(), "0".to_string(), linalg::identity(2)),
                ("1'".to_string(), "1".to_string(), flip.map(|z| z * c(0.0, 1.0))),
            ],
        )
        .unwrap();
        let phi2 = PureState::basis(vec![2, 2], &[0, 0]).unwrap();
        (Protocol::new(vec![m, fix], false).unwrap(), epr, phi2)
    }

    fn expected(form: &BranchForm, phi2: &PureState, psi: &PureState) -> ConditionallyPure {
        let target = phi2.direct_sum(psi).unwrap();
        let branches = form
            .weights()
            .into_iter()
            .map(|(y, a)| (y, target.scaled(c(a.sqrt(), 0.0))))
            .collect();
        ConditionallyPure::new(branches).unwrap()
    }

    fn densities_match(a: &ConditionallyPure, b: &ConditionallyPure) -> f64 {
        let ma = crate::locc::MixedState::from_conditionally_pure(a).unwrap();
        let mb = crate::locc::MixedState::from_conditionally_pure(b).unwrap();
        ma.max_abs_diff(&mb)
    }

    #[test]
    fn lift_with_product_spectator() {
        let (p, phi1, phi2) = collapse_epr();
        let ProtocolOutput::Branches(out) = apply_protocol(&ConditionallyPure::pure(phi1.clone()), &p).unwrap() else {
            panic!()
        };
        let form = branch_form(&out, &phi2).unwrap();
        for a in form.weights().values() {
            assert!((a - 0.5).abs() < 1e-15);
        }
        let psi = PureState::basis(vec![2, 2], &[0, 0]).unwrap();
        let lifted = lift_direct_sum(&p, &phi1, &phi2, &psi).unwrap();
        // outcome 1 picked up a phase i, so a correction step is appended
        assert_eq!(lifted.steps().len(), 3);
        let start = ConditionallyPure::pure(phi1.direct_sum(&psi).unwrap());
        let ProtocolOutput::Branches(got) = apply_protocol(&start, &lifted).unwrap() else { panic!() };
        assert!(densities_match(&got, &expected(&form, &phi2, &psi)) < 1e-12);
    }

    #[test]
    fn zero_spectator_reproduces_protocol() {
        let (p, phi1, phi2) = collapse_epr();
        let psi = PureState::zero(vec![1, 1]).unwrap();
        let lifted = lift_direct_sum(&p, &phi1, &phi2, &psi).unwrap();
        let ProtocolOutput::Branches(orig) = apply_protocol(&ConditionallyPure::pure(phi1.clone()), &p).unwrap() else {
            panic!()
        };
        let start = ConditionallyPure::pure(phi1.direct_sum(&psi).unwrap());
        let ProtocolOutput::Branches(got) = apply_protocol(&start, &lifted).unwrap() else { panic!() };
        let orig_padded = ConditionallyPure::new(
            orig.branches().iter().map(|(y, s)| (y.clone(), s.direct_sum(&psi).unwrap())).collect(),
        )
        .unwrap();
        assert!(densities_match(&got, &orig_padded) < 1e-14);
    }

    #[test]
    fn empty_protocol_is_identity() {
        let phi = PureState::basis(vec![2, 3], &[1, 2]).unwrap();
        let psi = PureState::basis(vec![1, 1], &[0, 0]).unwrap();
        let empty = Protocol::new(vec![], false).unwrap();
        assert_eq!(lift_direct_sum(&empty, &phi, &phi, &psi).unwrap(), empty);
        let other = PureState::basis(vec![2, 3], &[0, 0]).unwrap();
        assert!(lift_direct_sum(&empty, &phi, &other, &psi).is_err());
    }

    #[test]
    fn rejects_wrong_branch_form() {
        let h = 0.5f64.sqrt();
        let epr = PureState::from_real(vec![2, 2], &[h, 0.0, 0.0, h]).unwrap();
        let m = Protocol::new(vec![LoccStep::measurement(0, vec![proj(0), proj(1)], "").unwrap()], false).unwrap();
        let phi2 = PureState::basis(vec![2, 2], &[0, 0]).unwrap();
        let psi = PureState::basis(vec![1, 1], &[0, 0]).unwrap();
        assert!(matches!(lift_direct_sum(&m, &epr, &phi2, &psi), Err(Error::Protocol(_))));
    }
}

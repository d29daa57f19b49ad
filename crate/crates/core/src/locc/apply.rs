use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{require_valid, LoccStep, Protocol};
use super::MatrixJson;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{ConditionallyPure, PureState};

/// Largest number of register labels a tracked state may carry.
pub const MAX_BRANCHES: usize = 1 << 12;
/// Largest joint dimension for dense density matrices.
pub const MAX_DENSE_DIM: usize = 1 << 10;
/// Hermiticity and positivity tolerance for [`MixedState`].
pub const MIXED_TOL: f64 = 1e-10;

/// `Σ_x ρ_x ⊗ |x⟩⟨x|`: one dense block per register label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixedJson", into = "MixedJson")]
pub struct MixedState {
    dims: Vec<usize>,
    blocks: BTreeMap<String, CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct MixedJson {
    blocks: BTreeMap<String, MatrixJson>,
    dims: Vec<usize>,
}

impl TryFrom<MixedJson> for MixedState {
    type Error = Error;
    fn try_from(m: MixedJson) -> Result<Self> {
        let blocks = m
            .blocks
            .into_iter()
            .map(|(x, b)| Ok((x, CMatrix::try_from(b)?)))
            .collect::<Result<_>>()?;
        MixedState::new(m.dims, blocks)
    }
}

impl From<MixedState> for MixedJson {
    fn from(m: MixedState) -> Self {
        MixedJson {
            blocks: m.blocks.iter().map(|(x, b)| (x.clone(), MatrixJson::from(b))).collect(),
            dims: m.dims,
        }
    }
}

fn dense_dim(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= MAX_DENSE_DIM)
        .ok_or_else(|| Error::Resource(format!("dense state on {dims:?} exceeds dimension {MAX_DENSE_DIM}")))
}

impl MixedState {
    /// Validates shapes, Hermiticity and positivity of every block.
    pub fn new(dims: Vec<usize>, blocks: BTreeMap<String, CMatrix>) -> Result<Self> {
        let n = dense_dim(&dims)?;
        for (x, b) in &blocks {
            if b.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "block {x:?} is {}x{}, expected {n}x{n}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            let scale = linalg::max_abs(b).max(1.0);
            let herm = linalg::max_abs(&(b - b.adjoint()));
            if herm > MIXED_TOL * scale {
                return Err(Error::NotPsd(-herm));
            }
            let low = linalg::hermitian_eigenvalues(b).last().copied().unwrap_or(0.0);
            if low < -MIXED_TOL * scale {
                return Err(Error::NotPsd(low));
            }
        }
        Ok(MixedState { dims, blocks })
    }

    pub fn from_conditionally_pure(state: &ConditionallyPure) -> Result<Self> {
        dense_dim(state.dims())?;
        Ok(MixedState {
            dims: state.dims().to_vec(),
            blocks: state.branches().iter().map(|(x, s)| (x.clone(), s.density())).collect(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn blocks(&self) -> &BTreeMap<String, CMatrix> {
        &self.blocks
    }

    /// Total trace over all blocks.
    pub fn trace(&self) -> f64 {
        crate::spectra::compensated_sum(self.blocks.values().map(|b| b.trace().re))
    }

    /// Sums the register out, leaving one block labelled [`ConditionallyPure::ROOT`].
    pub fn trace_register(&self) -> MixedState {
        let n: usize = self.dims.iter().product();
        let sum = self.blocks.values().fold(CMatrix::zeros(n, n), |acc, b| acc + b);
        MixedState {
            dims: self.dims.clone(),
            blocks: BTreeMap::from([(ConditionallyPure::ROOT.to_string(), sum)]),
        }
    }

    /// Largest entrywise difference, with missing labels read as zero blocks.
    pub fn max_abs_diff(&self, other: &MixedState) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        let keys: std::collections::BTreeSet<&String> =
            self.blocks.keys().chain(other.blocks.keys()).collect();
        keys.into_iter()
            .map(|x| match (self.blocks.get(x), other.blocks.get(x)) {
                (Some(a), Some(b)) => linalg::max_abs(&(a - b)),
                (Some(a), None) | (None, Some(a)) => linalg::max_abs(a),
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Dense reference semantics of one step:
    /// `ρ'_y = Σ_{write(j)=y} (K_j)_i ρ_{read(j)} (K_j)_i*`.
    pub fn apply_step(&self, step: &LoccStep) -> Result<MixedState> {
        require_valid(step)?;
        let dims = step_dims(&self.dims, step)?;
        let n = dense_dim(&dims)?;
        let mut blocks: BTreeMap<String, CMatrix> = BTreeMap::new();
        for (j, k) in step.kraus() {
            let Some(rho) = self.blocks.get(&step.read()[j]) else { continue };
            let op = local_operator(&self.dims, step.party(), k);
            let out = &op * rho * op.adjoint();
            let acc = blocks.entry(step.write()[j].clone()).or_insert_with(|| CMatrix::zeros(n, n));
            *acc += out;
        }
        Ok(MixedState { dims, blocks })
    }
}

fn step_dims(dims: &[usize], step: &LoccStep) -> Result<Vec<usize>> {
    let d = dims.get(step.party()).copied().ok_or_else(|| {
        Error::Dimension(format!("party {} out of range for {} parties", step.party(), dims.len()))
    })?;
    if d != step.input_dim() {
        return Err(Error::Dimension(format!(
            "party {} has dimension {d}, step expects {}",
            step.party(),
            step.input_dim()
        )));
    }
    let mut out = dims.to_vec();
    out[step.party()] = step.output_dim();
    Ok(out)
}

/// `I ⊗ … ⊗ K ⊗ … ⊗ I` with `K` in slot `party`.
pub fn local_operator(dims: &[usize], party: usize, k: &CMatrix) -> CMatrix {
    let left: usize = dims[..party].iter().product();
    let right: usize = dims[party + 1..].iter().product();
    linalg::kron(&linalg::kron(&linalg::identity(left), k), &linalg::identity(right))
}

/// Applies a step to a conditionally pure state by tracking branches.
///
/// Each Kraus operator `j` maps the branch `read(j)` to `(K_j)_i φ` under
/// `write(j)`. If two nonzero contributions land on the same output label the
/// result is a genuine mixture and the step is rejected.
pub fn apply_step(state: &ConditionallyPure, step: &LoccStep) -> Result<ConditionallyPure> {
    require_valid(step)?;
    let dims = step_dims(state.dims(), step)?;
    let readable = step.input_labels();
    if let Some(x) = state.branches().keys().find(|x| !readable.contains(x.as_str())) {
        return Err(Error::Protocol(format!("branch label {x:?} is not read by the step")));
    }
    let contributions: Vec<(&String, PureState)> = step
        .kraus()
        .par_iter()
        .filter_map(|(j, k)| {
            let phi = state.branches().get(&step.read()[j])?;
            Some(phi.apply_local(step.party(), k).map(|out| (&step.write()[j], out)))
        })
        .collect::<Result<_>>()?;

    let mut branches: BTreeMap<String, PureState> = BTreeMap::new();
    for (y, out) in contributions {
        match branches.get_mut(y) {
            None => {
                if branches.len() == MAX_BRANCHES {
                    return Err(Error::Resource(format!("more than {MAX_BRANCHES} register labels")));
                }
                branches.insert(y.clone(), out);
            }
            Some(existing) => {
                if existing.is_zero() {
                    *existing = out;
                } else if !out.is_zero() {
                    return Err(Error::NotConditionallyPure(format!(
                        "several Kraus operators write nonzero branches to label {y:?}"
                    )));
                }
            }
        }
    }
    ConditionallyPure::with_dims(dims, branches)
}

/// Result of running a protocol: branches, or a mixed state when the final
/// register is traced out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProtocolOutput {
    Branches(ConditionallyPure),
    Mixed(MixedState),
}

impl ProtocolOutput {
    /// Dense form with the register kept.
    pub fn to_mixed(&self) -> Result<MixedState> {
        match self {
            ProtocolOutput::Branches(cp) => MixedState::from_conditionally_pure(cp),
            ProtocolOutput::Mixed(m) => Ok(m.clone()),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            ProtocolOutput::Branches(cp) => cp.total_norm_sqr(),
            ProtocolOutput::Mixed(m) => m.trace(),
        }
    }
}

/// Runs the steps in order with branch tracking, then traces out the register
/// if the protocol asks for it.
pub fn apply_protocol(state: &ConditionallyPure, protocol: &Protocol) -> Result<ProtocolOutput> {
    let mut cur = state.clone();
    for step in protocol.steps() {
        cur = apply_step(&cur, step)?;
    }
    if protocol.trace_final_register() {
        Ok(ProtocolOutput::Mixed(MixedState::from_conditionally_pure(&cur)?.trace_register()))
    } else {
        Ok(ProtocolOutput::Branches(cur))
    }
}

/// Dense reference run; accepts any protocol, including ones whose
/// intermediate states are not conditionally pure.
pub fn apply_protocol_dense(state: &MixedState, protocol: &Protocol) -> Result<MixedState> {
    let mut cur = state.clone();
    for step in protocol.steps() {
        cur = cur.apply_step(step)?;
    }
    Ok(if protocol.trace_final_register() { cur.trace_register() } else { cur })
}

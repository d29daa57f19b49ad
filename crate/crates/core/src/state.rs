//! Pure multipartite states and conditionally pure ensembles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};

/// Largest joint dimension a pure state may have.
pub const MAX_JOINT_DIM: usize = 1 << 20;

/// Dense amplitude tensor over `k` parties, row-major in party order.
///
/// States are not required to be normalized: the squared norm carries the
/// success probability of whatever produced the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateRepr", into = "PureStateRepr")]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct PureStateRepr {
    dims: Vec<usize>,
    im: Vec<f64>,
    re: Vec<f64>,
}

impl TryFrom<PureStateRepr> for PureState {
    type Error = Error;
    fn try_from(r: PureStateRepr) -> Result<Self> {
        PureState::from_parts(r.dims, &r.re, &r.im)
    }
}

impl From<PureState> for PureStateRepr {
    fn from(s: PureState) -> Self {
        PureStateRepr {
            im: s.amps.iter().map(|z| z.im).collect(),
            re: s.amps.iter().map(|z| z.re).collect(),
            dims: s.dims,
        }
    }
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= MAX_JOINT_DIM)
        .ok_or_else(|| {
            Error::Resource(format!(
                "joint dimension of {dims:?} exceeds {MAX_JOINT_DIM}"
            ))
        })
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a state needs at least one party".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Dimension(format!("zero local dimension in {dims:?}")));
        }
        let n = checked_product(&dims)?;
        if amps.len() != n {
            return Err(Error::Dimension(format!(
                "{} amplitudes for dims {dims:?} (expected {n})",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Dimension("non-finite amplitude".into()));
        }
        Ok(PureState { dims, amps })
    }

    pub fn from_parts(dims: Vec<usize>, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::Dimension(format!(
                "re has {} entries, im has {}",
                re.len(),
                im.len()
            )));
        }
        Self::new(dims, re.iter().zip(im).map(|(&a, &b)| c(a, b)).collect())
    }

    pub fn from_real(dims: Vec<usize>, re: &[f64]) -> Result<Self> {
        Self::new(dims, re.iter().map(|&a| c(a, 0.0)).collect())
    }

    pub fn zero(dims: Vec<usize>) -> Result<Self> {
        let n = checked_product(&dims)?;
        Self::new(dims, vec![C64::new(0.0, 0.0); n])
    }

    /// Computational basis vector `|i_1 … i_k⟩`.
    pub fn basis(dims: Vec<usize>, index: &[usize]) -> Result<Self> {
        let mut s = Self::zero(dims)?;
        if index.len() != s.dims.len() || index.iter().zip(&s.dims).any(|(i, d)| i >= d) {
            return Err(Error::Dimension(format!(
                "basis index {index:?} out of range for {:?}",
                s.dims
            )));
        }
        let flat = s.flat_index(index);
        s.amps[flat] = c(1.0, 0.0);
        Ok(s)
    }

    /// `Σ_i √w_i |ii⟩` on `C^d ⊗ C^d`.
    pub fn bipartite_from_weights(weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        let mut s = Self::zero(vec![d, d])?;
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) {
                return Err(Error::InvalidWeights(format!("weight {w} is negative")));
            }
            s.amps[i * d + i] = c(w.sqrt(), 0.0);
        }
        Ok(s)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::spectra::compensated_sum(self.amps.iter().map(|z| z.norm_sqr()))
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|z| z.norm_sqr() == 0.0)
    }

    pub fn scaled(&self, factor: C64) -> PureState {
        PureState {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    fn multi_index(dims: &[usize], mut flat: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
    }

    /// Party-wise tensor product: party `i` of the result lives on `H_i ⊗ H'_i`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if self.parties() != other.parties() {
            return Err(Error::Dimension(format!(
                "tensor of {}-party and {}-party states",
                self.parties(),
                other.parties()
            )));
        }
        let dims: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(a, b)| a * b).collect();
        let mut out = Self::zero(dims)?;
        let k = self.parties();
        let (mut ia, mut ib, mut joint) = (vec![0; k], vec![0; k], vec![0; k]);
        for (fa, za) in self.amps.iter().enumerate() {
            if za.norm_sqr() == 0.0 {
                continue;
            }
            Self::multi_index(&self.dims, fa, &mut ia);
            for (fb, zb) in other.amps.iter().enumerate() {
                Self::multi_index(&other.dims, fb, &mut ib);
                for p in 0..k {
                    joint[p] = ia[p] * other.dims[p] + ib[p];
                }
                let f = out.flat_index(&joint);
                out.amps[f] = za * zb;
            }
        }
        Ok(out)
    }

    /// Party-wise direct sum: party `i` of the result lives on `H_i ⊕ H'_i`.
    pub fn direct_sum(&self, other: &PureState) -> Result<PureState> {
        if self.parties() != other.parties() {
            return Err(Error::Dimension(format!(
                "direct sum of {}-party and {}-party states",
                self.parties(),
                other.parties()
            )));
        }
        let dims: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(a, b)| a + b).collect();
        let mut out = Self::zero(dims)?;
        let k = self.parties();
        let mut idx = vec![0; k];
        for (f, z) in self.amps.iter().enumerate() {
            Self::multi_index(&self.dims, f, &mut idx);
            let g = out.flat_index(&idx);
            out.amps[g] = *z;
        }
        for (f, z) in other.amps.iter().enumerate() {
            Self::multi_index(&other.dims, f, &mut idx);
            for p in 0..k {
                idx[p] += self.dims[p];
            }
            let g = out.flat_index(&idx);
            out.amps[g] = *z;
        }
        Ok(out)
    }

    /// Applies `op` (a `d' × d` matrix) to party `party`, i.e. `(op)_party |ψ⟩`.
    pub fn apply_local(&self, party: usize, op: &CMatrix) -> Result<PureState> {
        let d = *self.dims.get(party).ok_or_else(|| {
            Error::Dimension(format!("party {party} out of range for {} parties", self.parties()))
        })?;
        if op.ncols() != d {
            return Err(Error::Dimension(format!(
                "operator with {} columns applied to party {party} of dimension {d}",
                op.ncols()
            )));
        }
        let d_out = op.nrows();
        let left: usize = self.dims[..party].iter().product();
        let right: usize = self.dims[party + 1..].iter().product();
        let mut dims = self.dims.clone();
        dims[party] = d_out;
        let mut out = Self::zero(dims)?;
        for l in 0..left {
            for a_out in 0..d_out {
                for a in 0..d {
                    let k = op[(a_out, a)];
                    if k.norm_sqr() == 0.0 {
                        continue;
                    }
                    let src = (l * d + a) * right;
                    let dst = (l * d_out + a_out) * right;
                    for r in 0..right {
                        out.amps[dst + r] += k * self.amps[src + r];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matricization with the parties in `cut` (in increasing order) as rows.
    pub fn matricize(&self, cut: &[usize]) -> Result<CMatrix> {
        let k = self.parties();
        let mut in_cut = vec![false; k];
        for &p in cut {
            if p >= k || in_cut[p] {
                return Err(Error::InvalidCut { cut: cut.to_vec(), parties: k });
            }
            in_cut[p] = true;
        }
        let rows: usize = (0..k).filter(|&p| in_cut[p]).map(|p| self.dims[p]).product();
        let cols = self.amps.len() / rows;
        let mut m = CMatrix::zeros(rows, cols);
        let mut idx = vec![0; k];
        for (f, z) in self.amps.iter().enumerate() {
            Self::multi_index(&self.dims, f, &mut idx);
            let (mut r, mut col) = (0usize, 0usize);
            for p in 0..k {
                if in_cut[p] {
                    r = r * self.dims[p] + idx[p];
                } else {
                    col = col * self.dims[p] + idx[p];
                }
            }
            m[(r, col)] = *z;
        }
        Ok(m)
    }

    /// `|ψ⟩⟨ψ|` as a dense matrix.
    pub fn density(&self) -> CMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        &v * v.adjoint()
    }
}

/// Register label joining the two factor labels of a product ensemble.
pub const PRODUCT_LABEL_SEPARATOR: char = '*';

/// `Σ_x |φ_x⟩⟨φ_x| ⊗ |x⟩⟨x|`: pure branches indexed by classical register labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CondRepr", into = "CondRepr")]
pub struct ConditionallyPure {
    dims: Vec<usize>,
    branches: BTreeMap<String, PureState>,
}

#[derive(Serialize, Deserialize)]
struct CondRepr {
    branches: BTreeMap<String, PureState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<usize>>,
}

impl TryFrom<CondRepr> for ConditionallyPure {
    type Error = Error;
    fn try_from(r: CondRepr) -> Result<Self> {
        match r.dims {
            Some(d) => ConditionallyPure::with_dims(d, r.branches),
            None => ConditionallyPure::new(r.branches),
        }
    }
}

impl From<ConditionallyPure> for CondRepr {
    fn from(s: ConditionallyPure) -> Self {
        let dims = s.branches.is_empty().then(|| s.dims.clone());
        CondRepr { branches: s.branches, dims }
    }
}

impl ConditionallyPure {
    /// Label of the one-point register carried by a plain pure state.
    pub const ROOT: &'static str = "";

    /// Builds an ensemble; at least one branch is needed to infer the dims.
    pub fn new(branches: BTreeMap<String, PureState>) -> Result<Self> {
        let dims = branches
            .values()
            .next()
            .map(|s| s.dims.clone())
            .ok_or_else(|| Error::Dimension("empty ensemble needs explicit dims".into()))?;
        Self::with_dims(dims, branches)
    }

    pub fn with_dims(dims: Vec<usize>, branches: BTreeMap<String, PureState>) -> Result<Self> {
        if let Some((label, s)) = branches.iter().find(|(_, s)| s.dims != dims) {
            return Err(Error::Dimension(format!(
                "branch {label:?} has dims {:?}, expected {dims:?}",
                s.dims
            )));
        }
        Ok(ConditionallyPure { dims, branches })
    }

    /// The zero state on the given dims.
    pub fn empty(dims: Vec<usize>) -> Self {
        ConditionallyPure { dims, branches: BTreeMap::new() }
    }

    /// A pure state on the one-point register [`Self::ROOT`].
    pub fn pure(state: PureState) -> Self {
        let dims = state.dims.clone();
        let mut branches = BTreeMap::new();
        branches.insert(Self::ROOT.to_string(), state);
        ConditionallyPure { dims, branches }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn branches(&self) -> &BTreeMap<String, PureState> {
        &self.branches
    }

    pub fn into_branches(self) -> BTreeMap<String, PureState> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Σ_x ‖φ_x‖².
    pub fn total_norm_sqr(&self) -> f64 {
        crate::spectra::compensated_sum(self.branches.values().map(PureState::norm_sqr))
    }

    /// Product ensemble with labels `"x*y"`.
    pub fn tensor(&self, other: &ConditionallyPure) -> Result<ConditionallyPure> {
        let dims: Vec<usize> = if self.dims.len() == other.dims.len() {
            self.dims.iter().zip(&other.dims).map(|(a, b)| a * b).collect()
        } else {
            return Err(Error::Dimension("party counts differ".into()));
        };
        let mut branches = BTreeMap::new();
        for (x, a) in &self.branches {
            for (y, b) in &other.branches {
                let label = format!("{x}{PRODUCT_LABEL_SEPARATOR}{y}");
                if branches.insert(label.clone(), a.tensor(b)?).is_some() {
                    return Err(Error::Protocol(format!("product label {label:?} is ambiguous")));
                }
            }
        }
        Self::with_dims(dims, branches)
    }

    /// `Σ_x |φ_x⟩⟨φ_x|` with the register traced out.
    pub fn trace_register(&self) -> CMatrix {
        let n: usize = self.dims.iter().product();
        self.branches
            .values()
            .fold(CMatrix::zeros(n, n), |acc, s| acc + s.density())
    }
}

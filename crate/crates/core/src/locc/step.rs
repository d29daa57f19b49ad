use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MatrixJson;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Tolerance on the top eigenvalue of `Σ K*K` per input label.
pub const KRAUS_TOL: f64 = 1e-10;

/// One-step LOCC channel acting on a single party.
///
/// Kraus operator `K_j` (a `d_out × d_in` matrix) fires on branches whose
/// register label is `read[j]` and files its result under `write[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepJson", into = "StepJson")]
pub struct LoccStep {
    party: usize,
    kraus: BTreeMap<String, CMatrix>,
    read: BTreeMap<String, String>,
    write: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct StepJson {
    kraus: BTreeMap<String, MatrixJson>,
    party: usize,
    read: BTreeMap<String, String>,
    write: BTreeMap<String, String>,
}

impl TryFrom<StepJson> for LoccStep {
    type Error = Error;
    fn try_from(s: StepJson) -> Result<Self> {
        let kraus = s
            .kraus
            .into_iter()
            .map(|(j, m)| Ok((j, CMatrix::try_from(m)?)))
            .collect::<Result<_>>()?;
        LoccStep::new(s.party, kraus, s.read, s.write)
    }
}

impl From<LoccStep> for StepJson {
    fn from(s: LoccStep) -> Self {
        StepJson {
            kraus: s.kraus.iter().map(|(j, m)| (j.clone(), MatrixJson::from(m))).collect(),
            party: s.party,
            read: s.read,
            write: s.write,
        }
    }
}

impl LoccStep {
    /// Checks shapes and that `read`/`write` are defined exactly on the Kraus labels.
    /// The Kraus constraint itself is reported by [`validate_step`].
    pub fn new(
        party: usize,
        kraus: BTreeMap<String, CMatrix>,
        read: BTreeMap<String, String>,
        write: BTreeMap<String, String>,
    ) -> Result<Self> {
        let first = kraus
            .values()
            .next()
            .ok_or_else(|| Error::Protocol("a step needs at least one Kraus operator".into()))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::Dimension("Kraus operators must be nonempty".into()));
        }
        if let Some((j, m)) = kraus.iter().find(|(_, m)| m.shape() != shape) {
            return Err(Error::Dimension(format!(
                "Kraus operator {j:?} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                shape.0,
                shape.1
            )));
        }
        if kraus.values().flat_map(|m| m.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Dimension("non-finite Kraus entry".into()));
        }
        for (name, map) in [("read", &read), ("write", &write)] {
            if !map.keys().eq(kraus.keys()) {
                return Err(Error::Protocol(format!(
                    "{name} map must be defined exactly on the Kraus labels"
                )));
            }
        }
        Ok(LoccStep { party, kraus, read, write })
    }

    /// Remembering step from `(label, input label, K)` triples; each label is
    /// also its own output label.
    pub fn remembering<I>(party: usize, ops: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, CMatrix)>,
    {
        let (mut kraus, mut read, mut write) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for (j, x, k) in ops {
            if kraus.insert(j.clone(), k).is_some() {
                return Err(Error::Protocol(format!("duplicate Kraus label {j:?}")));
            }
            read.insert(j.clone(), x);
            write.insert(j.clone(), j);
        }
        Self::new(party, kraus, read, write)
    }

    /// Measurement with outcomes labelled `"0"`, `"1"`, … on branches labelled `input`.
    pub fn measurement(party: usize, ops: Vec<CMatrix>, input: &str) -> Result<Self> {
        Self::remembering(
            party,
            ops.into_iter().enumerate().map(|(j, k)| (j.to_string(), input.to_string(), k)),
        )
    }

    /// A single operator relabelling `input` as `output`.
    pub fn local(party: usize, op: CMatrix, input: &str, output: &str) -> Result<Self> {
        let one = |v: &str| BTreeMap::from([(output.to_string(), v.to_string())]);
        Self::new(party, BTreeMap::from([(output.to_string(), op)]), one(input), one(output))
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn kraus(&self) -> &BTreeMap<String, CMatrix> {
        &self.kraus
    }

    pub fn read(&self) -> &BTreeMap<String, String> {
        &self.read
    }

    pub fn write(&self) -> &BTreeMap<String, String> {
        &self.write
    }

    pub fn input_dim(&self) -> usize {
        self.kraus.values().next().map_or(0, |m| m.ncols())
    }

    pub fn output_dim(&self) -> usize {
        self.kraus.values().next().map_or(0, |m| m.nrows())
    }

    /// Register labels this step reads.
    pub fn input_labels(&self) -> BTreeSet<&str> {
        self.read.values().map(String::as_str).collect()
    }

    /// Register labels this step writes.
    pub fn output_labels(&self) -> BTreeSet<&str> {
        self.write.values().map(String::as_str).collect()
    }

    /// Whether every Kraus operator writes its own label.
    pub fn is_remembering(&self) -> bool {
        self.output_labels().len() == self.write.len()
    }
}

/// Constraint margin for one input label: `1 − λmax(Σ_{read(j)=x} K_j*K_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausMargin {
    pub holds: bool,
    pub label: String,
    pub lambda_max: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub margins: Vec<KrausMargin>,
    pub ok: bool,
}

impl StepReport {
    pub fn violations(&self) -> impl Iterator<Item = &KrausMargin> {
        self.margins.iter().filter(|m| !m.holds)
    }
}

/// Per-input-label Kraus constraint margins.
pub fn validate_step(step: &LoccStep) -> StepReport {
    let d = step.input_dim();
    let mut sums: BTreeMap<&str, CMatrix> = BTreeMap::new();
    for (j, k) in &step.kraus {
        let acc = sums.entry(step.read[j].as_str()).or_insert_with(|| CMatrix::zeros(d, d));
        *acc += k.adjoint() * k;
    }
    let margins: Vec<KrausMargin> = sums
        .into_iter()
        .map(|(label, s)| {
            let lambda_max = linalg::lambda_max(&s);
            KrausMargin {
                label: label.to_string(),
                lambda_max,
                margin: 1.0 - lambda_max,
                holds: lambda_max <= 1.0 + KRAUS_TOL,
            }
        })
        .collect();
    let ok = margins.iter().all(|m| m.holds);
    StepReport { margins, ok }
}

pub(crate) fn require_valid(step: &LoccStep) -> Result<()> {
    let report = validate_step(step);
    let result = match report.violations().next() {
        None => Ok(()),
        Some(v) => Err(Error::KrausConstraint(format!(
            "input label {:?}: largest eigenvalue {}",
            v.label, v.lambda_max
        ))),
    };
    result
}

/// A finite sequence of composable steps, optionally followed by tracing out
/// the classical register.
///
/// Composability: every label written by a step is read by the next one, and a
/// step acting on a party already touched expects the dimension last produced
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolJson", into = "ProtocolJson")]
pub struct Protocol {
    steps: Vec<LoccStep>,
    trace_final_register: bool,
}

#[derive(Serialize, Deserialize)]
struct ProtocolJson {
    steps: Vec<LoccStep>,
    trace_final_register: bool,
}

impl TryFrom<ProtocolJson> for Protocol {
    type Error = Error;
    fn try_from(p: ProtocolJson) -> Result<Self> {
        Protocol::new(p.steps, p.trace_final_register)
    }
}

impl From<Protocol> for ProtocolJson {
    fn from(p: Protocol) -> Self {
        ProtocolJson { steps: p.steps, trace_final_register: p.trace_final_register }
    }
}

impl Protocol {
    pub fn new(steps: Vec<LoccStep>, trace_final_register: bool) -> Result<Self> {
        let mut dims: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, s) in steps.iter().enumerate() {
            if let Some(&d) = dims.get(&s.party) {
                if d != s.input_dim() {
                    return Err(Error::Protocol(format!(
                        "step {i} expects dimension {} on party {}, previous steps leave {d}",
                        s.input_dim(),
                        s.party
                    )));
                }
            }
            dims.insert(s.party, s.output_dim());
            if let Some(next) = steps.get(i + 1) {
                let readable = next.input_labels();
                if let Some(y) = s.output_labels().into_iter().find(|y| !readable.contains(y)) {
                    return Err(Error::Protocol(format!(
                        "label {y:?} written by step {i} is not read by step {}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Protocol { steps, trace_final_register })
    }

    pub fn steps(&self) -> &[LoccStep] {
        &self.steps
    }

    pub fn trace_final_register(&self) -> bool {
        self.trace_final_register
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Whether every step is remembering.
    pub fn is_remembering(&self) -> bool {
        self.steps.iter().all(LoccStep::is_remembering)
    }

    /// Party dimensions after the protocol, given the input dimensions.
    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mut dims = input.to_vec();
        for s in &self.steps {
            let d = dims.get_mut(s.party).ok_or_else(|| {
                Error::Dimension(format!("party {} out of range for {} parties", s.party, input.len()))
            })?;
            if *d != s.input_dim() {
                return Err(Error::Dimension(format!(
                    "party {} has dimension {d}, step expects {}",
                    s.party,
                    s.input_dim()
                )));
            }
            *d = s.output_dim();
        }
        Ok(dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn basis_measurement() -> LoccStep {
        let mut p0 = CMatrix::zeros(2, 2);
        p0[(0, 0)] = c(1.0, 0.0);
        let mut p1 = CMatrix::zeros(2, 2);
        p1[(1, 1)] = c(1.0, 0.0);
        LoccStep::measurement(0, vec![p0, p1], "").unwrap()
    }

    #[test]
    fn validation_examples() {
        let iso = CMatrix::from_fn(3, 2, |i, j| c((i == j) as u8 as f64, 0.0));
        let r = validate_step(&LoccStep::local(1, iso, "", "").unwrap());
        assert!(r.ok);

        let r = validate_step(&basis_measurement());
        assert!(r.ok);
        assert_eq!(r.margins.len(), 1);
        assert!(r.margins[0].margin.abs() < 1e-15);

        let id = linalg::identity(2);
        let twice = LoccStep::new(
            0,
            BTreeMap::from([("a".into(), id.clone()), ("b".into(), id)]),
            BTreeMap::from([("a".into(), "x".into()), ("b".into(), "x".into())]),
            BTreeMap::from([("a".into(), "a".into()), ("b".into(), "b".into())]),
        )
        .unwrap();
        let r = validate_step(&twice);
        assert!(!r.ok);
        assert!((r.margins[0].lambda_max - 2.0).abs() < 1e-12);
        assert_eq!(r.violations().count(), 1);
    }

    #[test]
    fn shape_checks() {
        let bad = LoccStep::new(
            0,
            BTreeMap::from([("a".into(), linalg::identity(2)), ("b".into(), linalg::identity(3))]),
            BTreeMap::from([("a".into(), "".into()), ("b".into(), "".into())]),
            BTreeMap::from([("a".into(), "a".into()), ("b".into(), "b".into())]),
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
        let missing = LoccStep::new(
            0,
            BTreeMap::from([("a".into(), linalg::identity(2))]),
            BTreeMap::new(),
            BTreeMap::from([("a".into(), "a".into())]),
        );
        assert!(matches!(missing, Err(Error::Protocol(_))));
    }

    #[test]
    fn composability() {
        let m = basis_measurement();
        assert!(m.is_remembering());
        let fold = LoccStep::new(
            1,
            BTreeMap::from([("p".into(), linalg::identity(2)), ("q".into(), linalg::identity(2))]),
            BTreeMap::from([("p".into(), "0".into()), ("q".into(), "1".into())]),
            BTreeMap::from([("p".into(), "z".into()), ("q".into(), "z".into())]),
        )
        .unwrap();
        assert!(!fold.is_remembering());
        assert!(Protocol::new(vec![m.clone(), fold.clone()], true).is_ok());
        assert!(Protocol::new(vec![fold, m.clone()], true).is_err());
        let shrink = LoccStep::local(0, CMatrix::zeros(1, 2), "0", "0").unwrap();
        let after = LoccStep::local(0, linalg::identity(2), "0", "0").unwrap();
        assert!(Protocol::new(vec![shrink, after], false).is_err());
        let p = Protocol::new(vec![m], false).unwrap();
        assert_eq!(p.output_dims(&[2, 3]).unwrap(), vec![2, 3]);
        assert!(p.output_dims(&[3, 3]).is_err());
    }

    #[test]
    fn json_has_sorted_keys_and_round_trips() {
        let p = Protocol::new(vec![basis_measurement()], true).unwrap();
        let js = serde_json::to_string(&p).unwrap();
        assert!(js.starts_with(r#"{"steps":[{"kraus":{"0":{"im":[[0.0,0.0],[0.0,0.0]],"re":[[1.0,0.0],[0.0,0.0]]}"#));
        assert!(js.contains(r#""party":0,"read":{"0":"","1":""},"write":{"0":"0","1":"1"}}],"trace_final_register":true}"#));
        assert_eq!(serde_json::from_str::<Protocol>(&js).unwrap(), p);
    }
}

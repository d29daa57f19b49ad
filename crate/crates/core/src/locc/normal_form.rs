use std::collections::BTreeMap;

use super::apply::MAX_BRANCHES;
use super::step::{LoccStep, Protocol};
use crate::error::{Error, Result};

/// Joins Kraus labels along a path in normal-form register labels.
pub const PATH_SEPARATOR: char = '|';

/// Rewrites a protocol with a one-point final register into remembering steps
/// followed by a trace over the register.
///
/// Step `t` of the result is indexed by the paths `j₁|…|j_t` with
/// `read_s(j_s) = write_{s−1}(j_{s−1})`; the operator on a path is the
/// original `K_{j_t}`, it reads the path prefix, and writes the full path.
pub fn to_normal_form(protocol: &Protocol) -> Result<Protocol> {
    let Some(last) = protocol.steps().last() else {
        return Protocol::new(Vec::new(), true);
    };
    if last.output_labels().len() != 1 {
        return Err(Error::Protocol(format!(
            "final register has {} labels; normal form needs a one-point register",
            last.output_labels().len()
        )));
    }
    if let Some(j) = protocol
        .steps()
        .iter()
        .flat_map(|s| s.kraus().keys())
        .find(|j| j.contains(PATH_SEPARATOR))
    {
        return Err(Error::Protocol(format!(
            "Kraus label {j:?} contains the reserved separator {PATH_SEPARATOR:?}"
        )));
    }

    // (path label, original register label it stands for)
    let mut paths: Vec<(String, String)> = Vec::new();
    let mut steps = Vec::with_capacity(protocol.steps().len());
    for (t, step) in protocol.steps().iter().enumerate() {
        let (mut kraus, mut read, mut write) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        let mut next = Vec::new();
        let mut add = |label: String, input: String, j: &String| {
            kraus.insert(label.clone(), step.kraus()[j].clone());
            read.insert(label.clone(), input);
            write.insert(label.clone(), label.clone());
            next.push((label, step.write()[j].clone()));
        };
        if t == 0 {
            for j in step.kraus().keys() {
                add(j.clone(), step.read()[j].clone(), j);
            }
        } else {
            for (path, y) in &paths {
                for j in step.kraus().keys().filter(|j| step.read()[*j] == *y) {
                    add(format!("{path}{PATH_SEPARATOR}{j}"), path.clone(), j);
                }
            }
        }
        if next.len() > MAX_BRANCHES {
            return Err(Error::Resource(format!(
                "normal form needs {} paths at step {t}, more than {MAX_BRANCHES}",
                next.len()
            )));
        }
        steps.push(LoccStep::new(step.party(), kraus, read, write)?);
        paths = next;
    }
    Protocol::new(steps, true)
}

//! Seeded random instances. Every generator draws from a [`ChaCha8Rng`], so a
//! seed fixes the whole instance stream on every platform.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::linalg::{self, c, CMatrix, C64};
use crate::locc::{LoccStep, Protocol};
use crate::spectra::WeightVector;
use crate::state::{ConditionallyPure, PureState};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the simplex (flat Dirichlet).
pub fn distribution<R: Rng>(rng: &mut R, d: usize) -> WeightVector {
    let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    WeightVector::new(e.into_iter().map(|x| x / s).collect()).expect("positive draws")
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-random normalized pure state.
pub fn state<R: Rng>(rng: &mut R, dims: &[usize]) -> PureState {
    let n: usize = dims.iter().product();
    let amps: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    PureState::new(dims.to_vec(), amps.into_iter().map(|z| z / norm).collect()).expect("valid dims")
}

/// Haar-random unitary (QR of a Gaussian matrix with the phases of `R` fixed).
pub fn unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, d, d).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Orthogonal projection onto a random subspace of random rank `0..=d`.
pub fn projector<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let rank = rng.random_range(0..=d);
    let u = unitary(rng, d);
    let v = u.columns(0, rank);
    &v * v.adjoint()
}

/// `(A, B)` with `A*A + B*B ≤ I`, the top eigenvalue drawn from `[0.5, 1]`.
pub fn contraction_pair<R: Rng>(rng: &mut R, d: usize) -> (CMatrix, CMatrix) {
    let mut ops = kraus_family(rng, 2, d, d);
    let b = ops.pop().expect("two operators");
    let a = ops.pop().expect("two operators");
    (a, b)
}

/// `count` operators `d_out × d_in` with `Σ K*K ≤ I`, top eigenvalue in `[0.5, 1]`.
pub fn kraus_family<R: Rng>(rng: &mut R, count: usize, d_out: usize, d_in: usize) -> Vec<CMatrix> {
    let g: Vec<CMatrix> = (0..count).map(|_| gaussian_matrix(rng, d_out, d_in)).collect();
    let s = g.iter().fold(CMatrix::zeros(d_in, d_in), |acc, k| acc + k.adjoint() * k);
    let top = linalg::lambda_max(&s).max(f64::MIN_POSITIVE);
    let scale = (rng.random_range(0.5..=1.0) / top).sqrt();
    g.into_iter().map(|k| k.scale(scale)).collect()
}

/// Random branches over `labels` with squared norms summing to 1.
pub fn conditionally_pure<R: Rng>(rng: &mut R, dims: &[usize], labels: &[String]) -> ConditionallyPure {
    let w = distribution(rng, labels.len());
    let branches: BTreeMap<String, PureState> = labels
        .iter()
        .zip(w.weights())
        .map(|(x, &p)| (x.clone(), state(rng, dims).scaled(c(p.sqrt(), 0.0))))
        .collect();
    ConditionallyPure::with_dims(dims.to_vec(), branches).expect("shared dims")
}

/// Random protocol of `steps` steps with local dimensions in `1..=max_dim`,
/// reading `input_labels` and ending on the one-point register `"out"`.
/// Intermediate steps usually forget part of their outcomes.
pub fn protocol<R: Rng>(
    rng: &mut R,
    dims: &[usize],
    input_labels: &[String],
    steps: usize,
    max_dim: usize,
) -> Protocol {
    let mut dims = dims.to_vec();
    let mut labels: Vec<String> = input_labels.to_vec();
    let mut out = Vec::with_capacity(steps);
    let mut next_id = 0usize;
    for t in 0..steps {
        let party = rng.random_range(0..dims.len());
        let d_in = dims[party];
        let d_out = rng.random_range(1..=max_dim);
        let last = t + 1 == steps;
        let n_out = if last { 1 } else { rng.random_range(1..=3) };
        let (mut kraus, mut read, mut write) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for x in &labels {
            let count = rng.random_range(1..=3);
            for k in kraus_family(rng, count, d_out, d_in) {
                let j = format!("k{next_id}");
                next_id += 1;
                let y = if last { "out".to_string() } else { format!("s{t}.{}", rng.random_range(0..n_out)) };
                kraus.insert(j.clone(), k);
                read.insert(j.clone(), x.clone());
                write.insert(j, y);
            }
        }
        let step = LoccStep::new(party, kraus, read, write).expect("consistent maps");
        labels = step.output_labels().into_iter().map(str::to_string).collect();
        dims[party] = d_out;
        out.push(step);
    }
    Protocol::new(out, false).expect("composable by construction")
}

/// A remembering protocol taking `phi1` to branches that are all multiples of
/// the product state `phi2`, with a spectator for the direct-sum lift.
#[derive(Debug, Clone)]
pub struct LiftInstance {
    pub protocol: Protocol,
    pub phi1: PureState,
    pub phi2: PureState,
    pub spectator: PureState,
}

/// Party 0 measures in a random basis and resets to `|0⟩`; party 1 then
/// measures in a basis containing the (phase-randomized) conditional state
/// and resets to `|0⟩`. An optional local unitary on party 1 comes first.
pub fn lift_instance<R: Rng>(rng: &mut R) -> LiftInstance {
    let (d0, d1) = (rng.random_range(2..=3), rng.random_range(2..=3));
    let phi1 = state(rng, &[d0, d1]);
    let mut steps = Vec::new();
    let mut cur = phi1.clone();
    let mut root = ConditionallyPure::ROOT.to_string();
    if rng.random_bool(0.5) {
        let u = unitary(rng, d1);
        cur = cur.apply_local(1, &u).expect("square");
        steps.push(LoccStep::local(1, u, ConditionallyPure::ROOT, "u").expect("one operator"));
        root = "u".to_string();
    }

    let e0 = |d: usize| CMatrix::from_fn(d, 1, |i, _| c((i == 0) as u8 as f64, 0.0));
    let v = unitary(rng, d0);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for j in 0..d0 {
        let vj = v.column(j).into_owned();
        let kj = &e0(d0) * vj.adjoint();
        let label = format!("a{j}");
        let branch = cur.apply_local(0, &kj).expect("matching dims");
        first.push((label.clone(), root.clone(), kj));

        // conditional state on party 1 (party 0 sits in |0⟩)
        let u: Vec<C64> = (0..d1).map(|i| branch.amplitudes()[i]).collect();
        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mut m = gaussian_matrix(rng, d1, d1);
        for i in 0..d1 {
            m[(i, 0)] = u[i] * C64::from_polar(1.0 / norm.max(f64::MIN_POSITIVE), theta);
        }
        let q = m.qr().q();
        for b in 0..d1 {
            let qb = q.column(b).into_owned();
            second.push((format!("a{j}b{b}"), label.clone(), &e0(d1) * qb.adjoint()));
        }
    }
    steps.push(LoccStep::remembering(0, first).expect("distinct labels"));
    steps.push(LoccStep::remembering(1, second).expect("distinct labels"));
    let protocol = Protocol::new(steps, false).expect("composable by construction");

    let phi2 = PureState::basis(vec![d0, d1], &[0, 0]).expect("in range");
    let (e_0, e_1) = (rng.random_range(1..=2), rng.random_range(1..=2));
    let spectator = state(rng, &[e_0, e_1]);
    LiftInstance { protocol, phi1, phi2, spectator }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locc::{apply_protocol, branch_form, validate_step, ProtocolOutput};

    #[test]
    fn deterministic_for_a_seed() {
        let a = distribution(&mut seeded(7), 5);
        let b = distribution(&mut seeded(7), 5);
        assert_eq!(a, b);
        assert!((a.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_and_projector_shapes() {
        let mut rng = seeded(1);
        let u = unitary(&mut rng, 4);
        assert!(linalg::max_abs(&(u.adjoint() * &u - linalg::identity(4))) < 1e-12);
        for _ in 0..20 {
            let p = projector(&mut rng, 3);
            linalg::check_projector(&p, 1e-10).unwrap();
        }
        let (a, b) = contraction_pair(&mut rng, 3);
        assert!(linalg::lambda_max(&(a.adjoint() * &a + b.adjoint() * &b)) <= 1.0 + 1e-12);
    }

    #[test]
    fn random_protocols_are_valid() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let labels = vec!["a".to_string(), "b".to_string()];
            let steps = rng.random_range(1..=3);
            let p = protocol(&mut rng, &[2, 3], &labels, steps, 3);
            assert!(p.steps().iter().all(|s| validate_step(s).ok));
            assert_eq!(p.steps().last().unwrap().output_labels().len(), 1);
        }
    }

    #[test]
    fn lift_instances_have_branch_form() {
        let mut rng = seeded(11);
        for _ in 0..10 {
            let inst = lift_instance(&mut rng);
            assert!(inst.protocol.is_remembering());
            let ProtocolOutput::Branches(out) =
                apply_protocol(&ConditionallyPure::pure(inst.phi1.clone()), &inst.protocol).unwrap()
            else {
                panic!()
            };
            let form = branch_form(&out, &inst.phi2).unwrap();
            let total: f64 = form.weights().values().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

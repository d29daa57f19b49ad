//! Method of types: `n`-types over a finite alphabet, exact type-class sizes,
//! the lower bound `|T| ≥ 2^{n H(Q) − |I| log(n+1)}`, and nearest-type
//! rounding of a distribution.

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{relative_entropy, shannon_unchecked, WeightVector, SUPPORT_THRESHOLD};

/// Largest number of types [`enumerate_types`] will produce.
pub const MAX_TYPES: u64 = 10_000_000;

/// Counts over an alphabet summing to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NType {
    n: usize,
    counts: Vec<usize>,
}

impl TryFrom<Vec<usize>> for NType {
    type Error = Error;
    fn try_from(counts: Vec<usize>) -> Result<Self> {
        NType::new(counts)
    }
}

impl From<NType> for Vec<usize> {
    fn from(t: NType) -> Self {
        t.counts
    }
}

impl NType {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::Domain("a type needs a positive total count".into()));
        }
        Ok(NType { n, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// `counts / n`.
    pub fn distribution(&self) -> WeightVector {
        let n = self.n as f64;
        WeightVector::new(self.counts.iter().map(|&c| c as f64 / n).collect())
            .expect("counts are nonnegative")
    }

    /// Indices with a positive count.
    pub fn support(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&i| self.counts[i] > 0).collect()
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of `n`-types over `alphabet_size` letters, `C(n + |I| − 1, |I| − 1)`.
pub fn type_count(n: usize, alphabet_size: usize) -> BigUint {
    if alphabet_size == 0 {
        return BigUint::default();
    }
    binomial((n + alphabet_size - 1) as u64, (alphabet_size - 1) as u64)
}

fn push_compositions(rest: usize, prefix: &mut Vec<usize>, k: usize, out: &mut Vec<NType>) {
    if prefix.len() + 1 == k {
        prefix.push(rest);
        out.push(NType { n: prefix.iter().sum(), counts: prefix.clone() });
        prefix.pop();
        return;
    }
    for c in (0..=rest).rev() {
        prefix.push(c);
        push_compositions(rest - c, prefix, k, out);
        prefix.pop();
    }
}

/// All compositions of `n` into `alphabet_size` nonnegative parts, in
/// decreasing lexicographic order: `(n, 0, …)` first, `(…, 0, n)` last.
pub fn enumerate_types(n: usize, alphabet_size: usize) -> Result<Vec<NType>> {
    if n == 0 || alphabet_size == 0 {
        return Err(Error::Domain("n and the alphabet size must be positive".into()));
    }
    let count = type_count(n, alphabet_size);
    if count > BigUint::from(MAX_TYPES) {
        return Err(Error::Resource(format!(
            "{count} types for n = {n}, |I| = {alphabet_size} exceeds {MAX_TYPES}"
        )));
    }
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    push_compositions(n, &mut Vec::with_capacity(alphabet_size), alphabet_size, &mut out);
    Ok(out)
}

/// Exact multinomial coefficient `n! / Π counts_i!`.
pub fn type_class_size(t: &NType) -> BigUint {
    let mut acc = BigUint::one();
    let mut placed = 0u64;
    for &c in &t.counts {
        placed += c as u64;
        acc *= binomial(placed, c as u64);
    }
    acc
}

/// `log₂` of a positive big integer, accurate to double precision.
pub fn log2_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64().expect("fits in 64 bits");
    (top as f64).log2() + shift as f64
}

/// Size of a type class against its lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeClassBound {
    pub size: BigUint,
    /// `n H(counts/n) − |I| log₂(n+1)`.
    pub log2_bound: f64,
    /// `2^{log2_bound}`; may be `+∞` for very large classes.
    pub bound: f64,
    pub holds: bool,
}

/// Compares `|T|` with `2^{n H(Q) − |I| log₂(n+1)}`.
///
/// When the bound fits in a double the comparison is `size ≥ ⌈bound⌉` on exact
/// integers; otherwise it is made in the log domain.
pub fn check_type_class_bound(t: &NType) -> TypeClassBound {
    let size = type_class_size(t);
    let n = t.n as f64;
    let log2_bound =
        n * shannon_unchecked(t.distribution().weights()) - t.alphabet_size() as f64 * (n + 1.0).log2();
    let bound = log2_bound.exp2();
    let holds = match BigUint::from_f64(bound.ceil().max(0.0)) {
        Some(ceil) if bound.is_finite() => size >= ceil,
        _ => log2_biguint(&size) >= log2_bound,
    };
    TypeClassBound { size, log2_bound, bound, holds }
}

fn divergence(counts: &[usize], n: usize, p: &WeightVector) -> f64 {
    let q = WeightVector::new(counts.iter().map(|&c| c as f64 / n as f64).collect())
        .expect("counts are nonnegative");
    relative_entropy(&q, p).expect("both normalized")
}

/// An `n`-type with the same support as `p`, close to `p` in relative entropy.
///
/// Floor allocation with at least one count per support element, a
/// largest-remainder correction to reach `n`, then single-count moves while
/// they strictly lower `D(counts/n ‖ p)`.
pub fn closest_type(p: &WeightVector, n: usize) -> Result<NType> {
    p.require_normalized()?;
    let w = p.weights();
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > SUPPORT_THRESHOLD).collect();
    if n < support.len() {
        return Err(Error::Domain(format!(
            "n = {n} cannot cover a support of size {}",
            support.len()
        )));
    }
    let target: Vec<f64> = w.iter().map(|&x| x * n as f64).collect();
    let mut counts = vec![0usize; w.len()];
    for &i in &support {
        counts[i] = (target[i].floor() as usize).max(1);
    }
    let mut total: usize = counts.iter().sum();

    // Largest remainder first; ties go to the lower index.
    let mut order = support.clone();
    order.sort_by(|&a, &b| {
        let ra = target[a] - counts[a] as f64;
        let rb = target[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut k = 0;
    while total < n {
        counts[order[k % order.len()]] += 1;
        total += 1;
        k += 1;
    }
    while total > n {
        // Minimum-one bumps overshot: take from the most over-allocated.
        let i = support
            .iter()
            .copied()
            .filter(|&i| counts[i] > 1)
            .max_by(|&a, &b| {
                let ea = counts[a] as f64 - target[a];
                let eb = counts[b] as f64 - target[b];
                ea.total_cmp(&eb).then(b.cmp(&a))
            })
            .expect("n ≥ support size");
        counts[i] -= 1;
        total -= 1;
    }

    let mut best = divergence(&counts, n, p);
    loop {
        let mut improved = None;
        for &from in &support {
            if counts[from] <= 1 {
                continue;
            }
            for &to in &support {
                if to == from {
                    continue;
                }
                counts[from] -= 1;
                counts[to] += 1;
                let d = divergence(&counts, n, p);
                counts[from] += 1;
                counts[to] -= 1;
                if d < best - 1e-15 && improved.is_none_or(|(_, _, b)| d < b) {
                    improved = Some((from, to, d));
                }
            }
        }
        match improved {
            Some((from, to, d)) => {
                counts[from] -= 1;
                counts[to] += 1;
                best = d;
            }
            None => break,
        }
    }
    NType::new(counts)
}

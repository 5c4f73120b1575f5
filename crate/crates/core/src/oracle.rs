//! Brute-force cross-checks built from raw state algebra.
//!
//! Nothing here calls into the protocol's closed forms or its operator
//! constructions; only [`ChannelSpec`] is used, as plain data. Purification
//! is done with Householder reflections instead of Gram–Schmidt
//! completion, and the encoding operators are rebuilt from their defining
//! column action.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::protocol::ChannelSpec;
use crate::qstate::{
    self, apply, complete_to_unitary, gram_deviation, outcome_probabilities, MixedRadixSpace,
    Operator, StateVector,
};

/// Largest full state (pairs plus auxiliaries) the oracle will build.
pub const SIZE_LIMIT: usize = 1_000_000;

/// Divisor of the encoding phase `exp(2πi·j·n/d)` for branch digit `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseDivisor {
    /// `d = q − r`.
    ReducedLevels,
    /// `d = q` regardless of the branch.
    ReceiverDim,
}

impl PhaseDivisor {
    fn value(self, q: usize, r: usize) -> usize {
        match self {
            PhaseDivisor::ReducedLevels => q - r,
            PhaseDivisor::ReceiverDim => q,
        }
    }
}

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_size(spec: &ChannelSpec) -> Result<()> {
    let per_pair = spec.sender_dim() * spec.receiver_dim() * spec.receiver_dim();
    let size = (0..spec.pairs()).try_fold(1usize, |acc, _| acc.checked_mul(per_pair));
    match size {
        Some(s) if s <= SIZE_LIMIT => Ok(()),
        _ => Err(Error::SizeLimit {
            size: size.unwrap_or(usize::MAX),
            limit: SIZE_LIMIT,
        }),
    }
}

/// Householder reflection on `d` levels sending `|0⟩` to the real unit
/// vector `v`.
fn householder(v: &[f64]) -> Operator {
    let d = v.len();
    let w: Vec<f64> = (0..d)
        .map(|i| if i == 0 { 1.0 - v[0] } else { -v[i] })
        .collect();
    let ww: f64 = w.iter().map(|x| x * x).sum();
    if ww < 1e-30 {
        return Operator::identity(d);
    }
    Operator::from_fn(d, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        cplx(delta - 2.0 * w[r] * w[c] / ww)
    })
}

/// Local unitary on (particle, auxiliary) such that
/// `α_j |j⟩|0⟩ ↦ |j⟩ Σ_{r≤j} sqrt(α_r² − α_{r−1}²) |r⟩`.
fn purifier(alphas: &[f64], p: usize) -> Operator {
    let q = alphas.len();
    let squares: Vec<f64> = alphas.iter().map(|a| a * a).collect();
    let blocks: Vec<Operator> = (0..q)
        .map(|j| {
            let mut v: Vec<f64> = (0..q)
                .map(|r| {
                    if r > j {
                        0.0
                    } else {
                        let prev = if r == 0 { 0.0 } else { squares[r - 1] };
                        (squares[r] - prev).max(0.0).sqrt() * alphas[j].signum()
                    }
                })
                .collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            householder(&v)
        })
        .collect();
    Operator::from_fn(p * q, |row, col| {
        let (j, a) = (row / q, row % q);
        let (j2, b) = (col / q, col % q);
        if j != j2 {
            cplx(0.0)
        } else if j < q {
            blocks[j].get(a, b)
        } else {
            cplx(if a == b { 1.0 } else { 0.0 })
        }
    })
}

fn pair_state(alphas: &[f64], p: usize) -> Result<StateVector> {
    let q = alphas.len();
    let space = MixedRadixSpace::new(vec![p, q])?;
    let mut amps = vec![cplx(0.0); p * q];
    for (r, &a) in alphas.iter().enumerate() {
        amps[r * q + r] = cplx(a);
    }
    StateVector::new(space, amps)
}

/// Channel pairs plus auxiliaries after purification; auxiliaries sit after
/// all pair subsystems.
fn purified_state(spec: &ChannelSpec) -> Result<StateVector> {
    let (p, q, n) = (spec.sender_dim(), spec.receiver_dim(), spec.pairs());
    let mut parts = Vec::with_capacity(2 * n);
    for k in 0..n {
        parts.push(pair_state(&spec.alphas()[k], p)?);
    }
    for _ in 0..n {
        parts.push(StateVector::basis(vec![q], &[0])?);
    }
    let mut state = qstate::tensor(&parts)?;
    for k in 0..n {
        state = apply(&purifier(&spec.alphas()[k], p), &state, &[2 * k, 2 * n + k])?;
    }
    Ok(state)
}

/// Auxiliary outcome probabilities summed directly from the purified state.
pub fn brute_branch_probabilities(spec: &ChannelSpec) -> Result<Vec<(Vec<usize>, f64)>> {
    check_size(spec)?;
    let n = spec.pairs();
    let state = purified_state(spec)?;
    let aux: Vec<usize> = (2 * n..3 * n).collect();
    let probs = outcome_probabilities(&state, &aux)?;
    let space = MixedRadixSpace::new(vec![spec.receiver_dim(); n])?;
    Ok(probs
        .into_iter()
        .enumerate()
        .map(|(i, pr)| (space.digits_of(i), pr))
        .collect())
}

fn encoded_candidate(
    p: usize,
    q: usize,
    r: usize,
    m: usize,
    n: usize,
    divisor: PhaseDivisor,
) -> Result<StateVector> {
    let d = divisor.value(q, r) as f64;
    let space = MixedRadixSpace::new(vec![p, q])?;
    let mut amps = vec![cplx(0.0); p * q];
    let scale = 1.0 / ((q - r) as f64).sqrt();
    for j in r..q {
        let phase = Complex64::from_polar(scale, 2.0 * PI * (j * n) as f64 / d);
        amps[((j + m) % p) * q + j] += phase;
    }
    StateVector::new(space, amps)
}

/// Largest `|⟨Ψ_{m,n}|Ψ_{m',n'}⟩|` over distinct labels of branch digit `r`.
pub fn brute_orthogonality(p: usize, q: usize, r: usize, divisor: PhaseDivisor) -> Result<f64> {
    if q < 2 || p < q || r >= q {
        return Err(Error::LabelOutOfRange(format!(
            "need p >= q >= 2 and r < q (p = {p}, q = {q}, r = {r})"
        )));
    }
    let mut states = Vec::with_capacity(p * (q - r));
    for m in 0..p {
        for n in 0..q - r {
            states.push(encoded_candidate(p, q, r, m, n, divisor)?);
        }
    }
    let mut worst: f64 = 0.0;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            worst = worst.max(qstate::inner_product(a, b)?.norm());
        }
    }
    Ok(worst)
}

/// Encoding unitary rebuilt from its column action on levels `r..q`, the
/// idle columns filled in by Gram–Schmidt.
fn oracle_encoder(p: usize, q: usize, r: usize, m: usize, n: usize) -> Result<Operator> {
    let d = (q - r) as f64;
    let active: Vec<Vec<Complex64>> = (r..q)
        .map(|j| {
            let mut col = vec![cplx(0.0); p];
            col[(j + m) % p] = Complex64::from_polar(1.0, 2.0 * PI * (j * n) as f64 / d);
            col
        })
        .collect();
    let filled = complete_to_unitary(&active, p)?;
    let mut spare = active.len()..p;
    let mut source = vec![0usize; p];
    for (j, slot) in source.iter_mut().enumerate() {
        *slot = if (r..q).contains(&j) {
            j - r
        } else {
            spare.next().expect("p columns")
        };
    }
    Ok(Operator::from_fn(p, |row, col| {
        filled.get(row, source[col])
    }))
}

/// Number of mutually orthonormal states reachable by local encoding on one
/// pair whose auxiliary read `r`. `None` if that outcome cannot occur.
fn pair_cardinality(alphas: &[f64], p: usize, r: usize) -> Result<Option<usize>> {
    let q = alphas.len();
    let start = qstate::tensor(&[pair_state(alphas, p)?, StateVector::basis(vec![q], &[0])?])?;
    let purified = apply(&purifier(alphas, p), &start, &[0, 2])?;
    let branch = match purified.condition(&[2], &[r]) {
        Ok(s) => s,
        Err(Error::ZeroNormBranch) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut states = Vec::with_capacity(p * (q - r));
    for m in 0..p {
        for n in 0..q - r {
            states.push(apply(&oracle_encoder(p, q, r, m, n)?, &branch, &[0])?);
        }
    }
    let refs: Vec<&[Complex64]> = states.iter().map(|s| s.amplitudes()).collect();
    let dev = gram_deviation(&refs);
    if dev > qstate::NORM_TOL {
        return Err(Error::OracleMismatch(format!(
            "encoded states for r = {r} are not orthonormal (deviation {dev:e})"
        )));
    }
    Ok(Some(states.len()))
}

/// `Σ_r P(r)·log2 |basis(r)|` with probabilities from state simulation and
/// basis sizes counted from explicitly encoded, orthonormality-checked
/// states.
pub fn brute_average_information(spec: &ChannelSpec) -> Result<f64> {
    let branches = brute_branch_probabilities(spec)?;
    let p = spec.sender_dim();
    let mut cache: HashMap<(usize, usize), Option<usize>> = HashMap::new();
    let mut total = 0.0;
    for (digits, prob) in branches {
        if prob <= 0.0 {
            continue;
        }
        let mut count = 1.0f64;
        for (k, &r) in digits.iter().enumerate() {
            let key = (k, r);
            let card = match cache.get(&key) {
                Some(&c) => c,
                None => {
                    let c = pair_cardinality(&spec.alphas()[k], p, r)?;
                    cache.insert(key, c);
                    c
                }
            };
            match card {
                Some(c) => count *= c as f64,
                // outcome is impossible for this pair, so the joint branch
                // carries only rounding-level weight
                None => {
                    count = 0.0;
                    break;
                }
            }
        }
        if count > 0.0 {
            total += prob * count.log2();
        }
    }
    Ok(total)
}

/// Random valid channel with `q < p <= max_p`, `2 <= q <= max_q` and
/// `1..=max_pairs` pairs. Squared coefficients are sorted draws from
/// `[0.05, 1)`, normalized per pair.
pub fn random_spec<R: Rng + ?Sized>(
    rng: &mut R,
    max_pairs: usize,
    max_p: usize,
    max_q: usize,
) -> ChannelSpec {
    assert!(max_pairs >= 1 && max_q >= 2 && max_p >= 3);
    let q = rng.gen_range(2..=max_q.min(max_p - 1));
    let p = rng.gen_range(q + 1..=max_p);
    let pairs = rng.gen_range(1..=max_pairs);
    let squared = (0..pairs)
        .map(|_| {
            let mut w: Vec<f64> = (0..q).map(|_| rng.gen_range(0.05..1.0)).collect();
            w.sort_by(f64::total_cmp);
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    ChannelSpec::from_squared(p, q, squared).expect("generated spec is valid")
}

/// A reference `3 × 3` encoding matrix for `p = 3, q = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMatrix {
    pub name: &'static str,
    /// Branch digit, shift and phase index under which the crate's
    /// labeling produces this matrix.
    pub r: usize,
    pub m: usize,
    pub n: usize,
    pub entries: [f64; 9],
}

/// The six branch-0 and three branch-1 operators for `p = 3, q = 2`, row
/// major. Branch-1 names follow the conventional labels; `m` is the crate's
/// shift label, which swaps the two nontrivial ones.
#[rustfmt::skip]
pub const REFERENCE_MATRICES: [ReferenceMatrix; 9] = [
    ReferenceMatrix { name: "U0_00", r: 0, m: 0, n: 0, entries: [1., 0., 0., 0., 1., 0., 0., 0., 1.] },
    ReferenceMatrix { name: "U0_01", r: 0, m: 0, n: 1, entries: [1., 0., 0., 0., -1., 0., 0., 0., 1.] },
    ReferenceMatrix { name: "U0_10", r: 0, m: 1, n: 0, entries: [0., 0., 1., 1., 0., 0., 0., 1., 0.] },
    ReferenceMatrix { name: "U0_11", r: 0, m: 1, n: 1, entries: [0., 0., 1., 1., 0., 0., 0., -1., 0.] },
    ReferenceMatrix { name: "U0_20", r: 0, m: 2, n: 0, entries: [0., 1., 0., 0., 0., 1., 1., 0., 0.] },
    ReferenceMatrix { name: "U0_21", r: 0, m: 2, n: 1, entries: [0., -1., 0., 0., 0., 1., 1., 0., 0.] },
    ReferenceMatrix { name: "U1_00", r: 1, m: 0, n: 0, entries: [1., 0., 0., 0., 1., 0., 0., 0., 1.] },
    ReferenceMatrix { name: "U1_10", r: 1, m: 2, n: 0, entries: [0., 1., 0., 1., 0., 0., 0., 0., 1.] },
    ReferenceMatrix { name: "U1_20", r: 1, m: 1, n: 0, entries: [1., 0., 0., 0., 0., 1., 0., 1., 0.] },
];

//! Probabilistic dense coding over `N` non-maximally entangled `p ⊗ q`
//! pairs.
//!
//! Subsystem layout of the global state is `[1, 1', 2, 2', …, N, N']`
//! (sender particles at dimension `p`, receiver particles at `q`), followed
//! by the auxiliaries `a_1 … a_N` at dimension `q` once they are attached.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qstate::{
    self, apply, complete_to_unitary, measure_computational, MixedRadixSpace, Operator, StateVector,
};

/// Tolerance on `Σ_r α_r² = 1` per pair.
pub const COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    pairs: usize,
    sender_dim: usize,
    receiver_dim: usize,
    /// `alphas[k][r]` is the Schmidt coefficient of `|rr⟩` in pair `k`.
    alphas: Vec<Vec<f64>>,
}

impl ChannelSpec {
    pub fn new(sender_dim: usize, receiver_dim: usize, alphas: Vec<Vec<f64>>) -> Result<Self> {
        let (p, q) = (sender_dim, receiver_dim);
        if q < 2 {
            return Err(Error::InvalidChannel(format!(
                "receiver dimension q must be at least 2, got {q}"
            )));
        }
        if p <= q {
            return Err(Error::InvalidChannel(format!(
                "requires p > q (got p = {p}, q = {q})"
            )));
        }
        if alphas.is_empty() {
            return Err(Error::InvalidChannel(
                "at least one pair is required".into(),
            ));
        }
        for (k, row) in alphas.iter().enumerate() {
            let pair = k + 1;
            if row.len() != q {
                return Err(Error::InvalidChannel(format!(
                    "pair {pair} has {} coefficients, expected q = {q}",
                    row.len()
                )));
            }
            if row.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidChannel(format!(
                    "pair {pair} has a non-finite coefficient"
                )));
            }
            let sum: f64 = row.iter().map(|a| a * a).sum();
            if (sum - 1.0).abs() > COEFF_TOL {
                return Err(Error::InvalidChannel(format!(
                    "pair {pair} squared coefficients sum to {sum}, expected 1"
                )));
            }
            if row
                .windows(2)
                .any(|w| w[0] * w[0] - w[1] * w[1] > COEFF_TOL)
            {
                return Err(Error::InvalidChannel(format!(
                    "pair {pair} coefficients must be nondecreasing in magnitude"
                )));
            }
            if row[0] == 0.0 {
                return Err(Error::InvalidChannel(format!(
                    "pair {pair} has a zero coefficient; the channel cannot be purified"
                )));
            }
        }
        Ok(Self {
            pairs: alphas.len(),
            sender_dim: p,
            receiver_dim: q,
            alphas,
        })
    }

    /// Builds a spec from squared coefficients `α_{r,k}²`.
    pub fn from_squared(
        sender_dim: usize,
        receiver_dim: usize,
        squared: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if squared.iter().flatten().any(|&s| s < 0.0) {
            return Err(Error::InvalidChannel(
                "squared coefficients must be non-negative".into(),
            ));
        }
        let alphas = squared
            .into_iter()
            .map(|row| row.into_iter().map(f64::sqrt).collect())
            .collect();
        Self::new(sender_dim, receiver_dim, alphas)
    }

    /// All pairs maximally entangled.
    pub fn maximal(sender_dim: usize, receiver_dim: usize, pairs: usize) -> Result<Self> {
        let a = 1.0 / (receiver_dim as f64).sqrt();
        Self::new(sender_dim, receiver_dim, vec![vec![a; receiver_dim]; pairs])
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn sender_dim(&self) -> usize {
        self.sender_dim
    }

    pub fn receiver_dim(&self) -> usize {
        self.receiver_dim
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    pub fn alpha(&self, pair: usize, level: usize) -> f64 {
        self.alphas[pair][level]
    }

    /// `α²_{r,k} − α²_{r−1,k}` with `α_{−1,k} = 0`, clamped at zero.
    pub fn level_gap(&self, pair: usize, level: usize) -> f64 {
        let row = &self.alphas[pair];
        let below = if level == 0 {
            0.0
        } else {
            row[level - 1].powi(2)
        };
        (row[level].powi(2) - below).max(0.0)
    }

    /// Dims of the pair subsystems, `[p, q, p, q, …]`.
    pub fn pair_dims(&self) -> Vec<usize> {
        (0..self.pairs)
            .flat_map(|_| [self.sender_dim, self.receiver_dim])
            .collect()
    }

    /// Pair dims followed by `N` auxiliaries of dimension `q`.
    pub fn full_dims(&self) -> Vec<usize> {
        let mut dims = self.pair_dims();
        dims.extend(std::iter::repeat_n(self.receiver_dim, self.pairs));
        dims
    }

    pub fn sender_index(&self, pair: usize) -> usize {
        2 * pair
    }

    pub fn auxiliary_index(&self, pair: usize) -> usize {
        2 * self.pairs + pair
    }

    pub fn auxiliary_indices(&self) -> Vec<usize> {
        (0..self.pairs).map(|k| self.auxiliary_index(k)).collect()
    }
}

/// Result of measuring all auxiliaries: digit `r_k` per pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchOutcome {
    pub digits: Vec<usize>,
    pub probability: f64,
}

impl BranchOutcome {
    /// Closed-form branch probability `Π_k (q − r_k)(α²_{r_k,k} − α²_{r_k−1,k})`.
    pub fn closed_form(spec: &ChannelSpec, digits: Vec<usize>) -> Result<Self> {
        check_branch_digits(spec, &digits)?;
        let q = spec.receiver_dim();
        let probability = digits
            .iter()
            .enumerate()
            .map(|(k, &r)| (q - r) as f64 * spec.level_gap(k, r))
            .product();
        Ok(Self {
            digits,
            probability,
        })
    }

    /// Number of perfectly distinguishable messages in this branch.
    pub fn message_count(&self, spec: &ChannelSpec) -> u64 {
        self.digits
            .iter()
            .map(|&r| (spec.sender_dim() * (spec.receiver_dim() - r)) as u64)
            .product()
    }
}

fn check_branch_digits(spec: &ChannelSpec, digits: &[usize]) -> Result<()> {
    if digits.len() != spec.pairs() {
        return Err(Error::LabelOutOfRange(format!(
            "branch has {} digits for {} pairs",
            digits.len(),
            spec.pairs()
        )));
    }
    if let Some(&r) = digits.iter().find(|&&r| r >= spec.receiver_dim()) {
        return Err(Error::LabelOutOfRange(format!(
            "branch digit {r} not below q = {}",
            spec.receiver_dim()
        )));
    }
    Ok(())
}

/// Encoding operator label `(m, n)` for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairLabel {
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncodingLabel(pub Vec<PairLabel>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Message(pub u64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTrace {
    pub spec: ChannelSpec,
    pub branch: BranchOutcome,
    pub message: Message,
    pub label: EncodingLabel,
    pub decoded: Message,
    pub branch_probability: f64,
    pub success: bool,
}

/// `⊗_k Σ_r α_{r,k} |rr⟩_{kk'}`.
pub fn initial_state(spec: &ChannelSpec) -> Result<StateVector> {
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    let factors = (0..spec.pairs())
        .map(|k| {
            let space = MixedRadixSpace::new(vec![p, q])?;
            let mut amps = vec![Complex64::new(0.0, 0.0); p * q];
            for r in 0..q {
                amps[r * q + r] = Complex64::new(spec.alpha(k, r), 0.0);
            }
            StateVector::new(space, amps)
        })
        .collect::<Result<Vec<_>>>()?;
    qstate::tensor(&factors)
}

/// Appends `N` auxiliaries in `|0⟩` after the pair subsystems.
pub fn with_auxiliaries(state: &StateVector, spec: &ChannelSpec) -> Result<StateVector> {
    if state.dims() != spec.pair_dims().as_slice() {
        return Err(Error::SpaceMismatch(
            spec.pair_dims(),
            state.dims().to_vec(),
        ));
    }
    let mut parts = vec![state.clone()];
    for _ in 0..spec.pairs() {
        parts.push(StateVector::basis(vec![spec.receiver_dim()], &[0])?);
    }
    qstate::tensor(&parts)
}

/// The `(p·q) × (p·q)` purification unitary on (particle `k`, auxiliary
/// `a_k`), indexed `particle * q + auxiliary`.
///
/// Block-diagonal over the particle level `j`. For `j < q` the block is a
/// unitary `V_j` with first column
/// `(1/α_j) Σ_{r≤j} sqrt(α_r² − α_{r−1}²) |r⟩`; for `j ≥ q` it is the
/// identity.
pub fn purification_unitary(spec: &ChannelSpec, pair: usize) -> Result<Operator> {
    if pair >= spec.pairs() {
        return Err(Error::TargetOutOfRange {
            index: pair,
            count: spec.pairs(),
        });
    }
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    let mut blocks = Vec::with_capacity(q);
    for j in 0..q {
        let alpha = spec.alpha(pair, j);
        let mut column: Vec<Complex64> = (0..q)
            .map(|r| {
                if r <= j {
                    Complex64::new(spec.level_gap(pair, r).sqrt() / alpha, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        // The telescoping sum makes this unit-norm up to rounding (and up to
        // the clamping of tiny negative gaps).
        let n = column.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        column.iter_mut().for_each(|c| *c /= n);
        blocks.push(complete_to_unitary(&[column], q)?);
    }
    Ok(Operator::from_fn(p * q, |row, col| {
        let (j, a) = (row / q, row % q);
        let (j2, b) = (col / q, col % q);
        if j != j2 {
            Complex64::new(0.0, 0.0)
        } else if j < q {
            blocks[j].get(a, b)
        } else if a == b {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Applies every pair's purification unitary to the channel state with
/// auxiliaries attached.
pub fn conversion_step(state: &StateVector, spec: &ChannelSpec) -> Result<StateVector> {
    if state.dims() != spec.full_dims().as_slice() {
        return Err(Error::SpaceMismatch(
            spec.full_dims(),
            state.dims().to_vec(),
        ));
    }
    let mut current = state.clone();
    for k in 0..spec.pairs() {
        let u = purification_unitary(spec, k)?;
        current = apply(
            &u,
            &current,
            &[spec.sender_index(k), spec.auxiliary_index(k)],
        )?;
    }
    Ok(current)
}

/// All `q^N` branches in lexicographic order (first pair most significant).
pub fn branch_probabilities(spec: &ChannelSpec) -> Vec<BranchOutcome> {
    let q = spec.receiver_dim();
    let space = MixedRadixSpace::new(vec![q; spec.pairs()]).expect("q >= 2");
    (0..space.total_dim())
        .map(|i| BranchOutcome::closed_form(spec, space.digits_of(i)).expect("digits in range"))
        .collect()
}

/// Measures all auxiliaries and returns the branch together with the
/// collapsed state of the pair subsystems.
pub fn measure_branches<R: Rng + ?Sized>(
    state: &StateVector,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<(BranchOutcome, StateVector)> {
    if state.dims() != spec.full_dims().as_slice() {
        return Err(Error::SpaceMismatch(
            spec.full_dims(),
            state.dims().to_vec(),
        ));
    }
    let aux = spec.auxiliary_indices();
    let m = measure_computational(state, &aux, rng)?;
    let pairs = m.collapsed.condition(&aux, &m.outcome)?;
    Ok((
        BranchOutcome {
            digits: m.outcome,
            probability: m.probability,
        },
        pairs,
    ))
}

/// Which divisor the encoding phase `exp(2πi·j·n/d)` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// `d = q − r`; the encoded states of every branch are orthonormal.
    #[default]
    Corrected,
    /// `d = q` for every branch. Not orthogonal for
    /// `q ≥ 3, r ≥ 1`; kept for verification only.
    Uniform,
}

impl PhaseConvention {
    pub fn divisor(self, q: usize, r: usize) -> usize {
        match self {
            PhaseConvention::Corrected => q - r,
            PhaseConvention::Uniform => q,
        }
    }
}

/// `exp(2πi·k/d)`, exact at multiples of a quarter turn.
pub(crate) fn root_of_unity(k: usize, d: usize) -> Complex64 {
    let k = k % d;
    if (4 * k).is_multiple_of(d) {
        return match 4 * k / d {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

fn check_label(p: usize, q: usize, r: usize, m: usize, n: usize) -> Result<()> {
    if q < 2 || p < q {
        return Err(Error::LabelOutOfRange(format!(
            "dimensions must satisfy p >= q >= 2 (p = {p}, q = {q})"
        )));
    }
    if r >= q {
        return Err(Error::LabelOutOfRange(format!(
            "branch digit {r} not below q = {q}"
        )));
    }
    if m >= p {
        return Err(Error::LabelOutOfRange(format!("m = {m} not below p = {p}")));
    }
    if n >= q - r {
        return Err(Error::LabelOutOfRange(format!(
            "n = {n} not below q − r = {}",
            q - r
        )));
    }
    Ok(())
}

/// Encoding unitary for branch digit `r` with the default phase convention.
pub fn encoding_operator(p: usize, q: usize, r: usize, m: usize, n: usize) -> Result<Operator> {
    encoding_operator_with(p, q, r, m, n, PhaseConvention::Corrected)
}

/// `p × p` unitary mapping `|j⟩ ↦ exp(2πi·j·n/d) |(j + m) mod p⟩` on the
/// levels `r ≤ j < q` that carry amplitude in branch `r`.
///
/// The remaining (idle) input levels are sent, in increasing order, to the
/// output levels left free, in increasing order, with unit phase.
pub fn encoding_operator_with(
    p: usize,
    q: usize,
    r: usize,
    m: usize,
    n: usize,
    convention: PhaseConvention,
) -> Result<Operator> {
    check_label(p, q, r, m, n)?;
    let d = convention.divisor(q, r);
    let mut target = vec![usize::MAX; p];
    let mut phase = vec![Complex64::new(1.0, 0.0); p];
    for j in r..q {
        target[j] = (j + m) % p;
        phase[j] = root_of_unity(j * n, d);
    }
    let used: Vec<usize> = (r..q).map(|j| target[j]).collect();
    let free_outputs = (0..p).filter(|t| !used.contains(t));
    let idle_inputs: Vec<usize> = (0..p).filter(|&j| j < r || j >= q).collect();
    for (j, t) in idle_inputs.into_iter().zip(free_outputs) {
        target[j] = t;
    }
    Ok(Operator::from_fn(p, |row, col| {
        if target[col] == row {
            phase[col]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Pair state after the auxiliary of that pair reads `r`: the normalized
/// `Σ_{j≥r} |jj⟩`.
pub fn branch_state(p: usize, q: usize, r: usize) -> Result<StateVector> {
    if r >= q || p < q {
        return Err(Error::LabelOutOfRange(format!(
            "branch digit {r} invalid for p = {p}, q = {q}"
        )));
    }
    let space = MixedRadixSpace::new(vec![p, q])?;
    let mut amps = vec![Complex64::new(0.0, 0.0); p * q];
    for j in r..q {
        amps[j * q + j] = Complex64::new(1.0, 0.0);
    }
    StateVector::normalized(space, amps)
}

/// `(1/sqrt(q − r)) Σ_{j=r}^{q−1} exp(2πi·j·n/(q−r)) |(j + m) mod p⟩|j⟩`.
pub fn encoded_state(p: usize, q: usize, r: usize, m: usize, n: usize) -> Result<StateVector> {
    check_label(p, q, r, m, n)?;
    let space = MixedRadixSpace::new(vec![p, q])?;
    let mut amps = vec![Complex64::new(0.0, 0.0); p * q];
    let scale = 1.0 / ((q - r) as f64).sqrt();
    for j in r..q {
        amps[((j + m) % p) * q + j] = root_of_unity(j * n, q - r) * scale;
    }
    StateVector::new(space, amps)
}

/// The `p·(q − r)` encoded states of branch digit `r`, ordered by `(m, n)`.
pub fn encoded_basis(p: usize, q: usize, r: usize) -> Result<Vec<StateVector>> {
    if r >= q {
        return Err(Error::LabelOutOfRange(format!(
            "branch digit {r} not below q = {q}"
        )));
    }
    let mut out = Vec::with_capacity(p * (q - r));
    for m in 0..p {
        for n in 0..q - r {
            out.push(encoded_state(p, q, r, m, n)?);
        }
    }
    Ok(out)
}

/// Mixed-radix codec: per-pair radix `p·(q − r_k)`, pair 1 most
/// significant, digit `m·(q − r_k) + n`.
pub fn labels_to_message(
    label: &EncodingLabel,
    branch: &BranchOutcome,
    spec: &ChannelSpec,
) -> Result<Message> {
    check_branch_digits(spec, &branch.digits)?;
    if label.0.len() != spec.pairs() {
        return Err(Error::LabelOutOfRange(format!(
            "label has {} entries for {} pairs",
            label.0.len(),
            spec.pairs()
        )));
    }
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    let mut value = 0u64;
    for (l, &r) in label.0.iter().zip(&branch.digits) {
        check_label(p, q, r, l.m, l.n)?;
        let radix = (p * (q - r)) as u64;
        value = value * radix + (l.m * (q - r) + l.n) as u64;
    }
    Ok(Message(value))
}

pub fn message_to_labels(
    message: Message,
    branch: &BranchOutcome,
    spec: &ChannelSpec,
) -> Result<EncodingLabel> {
    check_branch_digits(spec, &branch.digits)?;
    let count = branch.message_count(spec);
    if message.0 >= count {
        return Err(Error::MessageOutOfRange {
            message: message.0,
            count,
        });
    }
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    let mut rest = message.0;
    let mut labels = vec![PairLabel { m: 0, n: 0 }; spec.pairs()];
    for (slot, &r) in labels.iter_mut().zip(&branch.digits).rev() {
        let width = (q - r) as u64;
        let radix = p as u64 * width;
        let digit = rest % radix;
        rest /= radix;
        *slot = PairLabel {
            m: (digit / width) as usize,
            n: (digit % width) as usize,
        };
    }
    Ok(EncodingLabel(labels))
}

/// How the classical payload is chosen once the branch is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageChoice {
    /// Uniform over the sampled branch's message range.
    Random,
    /// Fixed value, clamped to the largest message of the branch.
    Clamped(u64),
    /// Fixed value; out-of-range for the sampled branch is an error.
    Strict(u64),
}

/// One full round trip: purify, measure the auxiliaries, encode, send, and
/// decode by projective measurement.
pub fn run_protocol<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    choice: MessageChoice,
    rng: &mut R,
) -> Result<ProtocolTrace> {
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    let shared = with_auxiliaries(&initial_state(spec)?, spec)?;
    let purified = conversion_step(&shared, spec)?;
    let (branch, mut state) = measure_branches(&purified, spec, rng)?;

    let count = branch.message_count(spec);
    let message = match choice {
        MessageChoice::Random => Message(rng.gen_range(0..count)),
        MessageChoice::Clamped(v) => Message(v.min(count - 1)),
        MessageChoice::Strict(v) if v < count => Message(v),
        MessageChoice::Strict(v) => return Err(Error::MessageOutOfRange { message: v, count }),
    };
    let label = message_to_labels(message, &branch, spec)?;

    for (k, (l, &r)) in label.0.iter().zip(&branch.digits).enumerate() {
        let u = encoding_operator(p, q, r, l.m, l.n)?;
        state = apply(&u, &state, &[spec.sender_index(k)])?;
    }

    // Bob measures each pair in the encoded basis of its branch digit.
    let mut decoded_labels = Vec::with_capacity(spec.pairs());
    for (k, &r) in branch.digits.iter().enumerate() {
        let basis = encoded_basis(p, q, r)?;
        let outcomes = qstate::project(&state, &[2 * k, 2 * k + 1], &basis)?;
        let weights: Vec<f64> = outcomes.iter().map(|o| o.probability).collect();
        let total = weights.iter().sum();
        let idx = qstate::sample_index(&weights, total, rng).ok_or(Error::ZeroNormBranch)?;
        state = outcomes[idx]
            .collapsed
            .clone()
            .ok_or(Error::ZeroNormBranch)?;
        let width = q - r;
        decoded_labels.push(PairLabel {
            m: idx / width,
            n: idx % width,
        });
    }
    let decoded = labels_to_message(&EncodingLabel(decoded_labels), &branch, spec)?;

    Ok(ProtocolTrace {
        spec: spec.clone(),
        branch_probability: branch.probability,
        success: decoded == message,
        branch,
        message,
        label,
        decoded,
    })
}

//! Mixed-radix complex state vectors and the handful of operations the
//! protocol needs on them.
//!
//! Global basis indices are mixed-radix numbers with the first listed
//! subsystem most significant: for dims `[3, 2]` the index of `|j k⟩` is
//! `2 * j + k`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for normalization and orthonormality checks.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for `‖U†U − I‖_max`.
pub const UNITARY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MixedRadixSpace {
    dims: Vec<usize>,
    total_dim: usize,
}

impl MixedRadixSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(d));
        }
        let total_dim = dims.iter().product();
        Ok(Self { dims, total_dim })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Place value of each subsystem in the global index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }

    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: digits.len(),
            });
        }
        let mut idx = 0;
        for (&digit, &dim) in digits.iter().zip(&self.dims) {
            if digit >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: digit,
                });
            }
            idx = idx * dim + digit;
        }
        Ok(idx)
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (slot, &dim) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = index % dim;
            index /= dim;
        }
        digits
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.dims.len() {
                return Err(Error::TargetOutOfRange {
                    index: t,
                    count: self.dims.len(),
                });
            }
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateTarget(t));
            }
        }
        Ok(())
    }

    /// Split the space into the target subsystems and the rest.
    ///
    /// Returns `(bases, offsets)`: every global index is uniquely
    /// `bases[b] + offsets[t]`, where `t` is the mixed-radix index over the
    /// targets (in the given order) and `b` runs over the remaining
    /// subsystems in global order.
    fn split(&self, targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &t in targets {
            let mut next = Vec::with_capacity(offsets.len() * self.dims[t]);
            for &o in &offsets {
                for d in 0..self.dims[t] {
                    next.push(o + d * strides[t]);
                }
            }
            offsets = next;
        }
        let mut bases = vec![0usize];
        for (i, &dim) in self.dims.iter().enumerate() {
            if targets.contains(&i) {
                continue;
            }
            let mut next = Vec::with_capacity(bases.len() * dim);
            for &b in &bases {
                for d in 0..dim {
                    next.push(b + d * strides[i]);
                }
            }
            bases = next;
        }
        (bases, offsets)
    }

    fn sub_dims(&self, targets: &[usize]) -> Vec<usize> {
        targets.iter().map(|&t| self.dims[t]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: MixedRadixSpace,
    amplitudes: Vec<Complex64>,
}

fn squared_norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(space: MixedRadixSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::AmplitudeCount {
                expected: space.total_dim(),
                got: amplitudes.len(),
            });
        }
        let n = squared_norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { space, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(space: MixedRadixSpace, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::AmplitudeCount {
                expected: space.total_dim(),
                got: amplitudes.len(),
            });
        }
        let n = squared_norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNormBranch);
        }
        let scale = 1.0 / n.sqrt();
        amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { space, amplitudes })
    }

    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        let space = MixedRadixSpace::new(dims)?;
        let idx = space.index_of(digits)?;
        let mut amplitudes = vec![ZERO; space.total_dim()];
        amplitudes[idx] = ONE;
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> &MixedRadixSpace {
        &self.space
    }

    pub fn dims(&self) -> &[usize] {
        self.space.dims()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<Complex64> {
        Ok(self.amplitudes[self.space.index_of(digits)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        squared_norm(&self.amplitudes)
    }

    /// Fixes `targets` to the basis values `digits` and returns the
    /// renormalized state of the remaining subsystems.
    pub fn condition(&self, targets: &[usize], digits: &[usize]) -> Result<StateVector> {
        self.space.check_targets(targets)?;
        if targets.len() != digits.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                got: digits.len(),
            });
        }
        let sub = MixedRadixSpace::new(self.space.sub_dims(targets))?;
        let t = sub.index_of(digits)?;
        let rest: Vec<usize> = (0..self.space.num_subsystems())
            .filter(|i| !targets.contains(i))
            .map(|i| self.space.dims[i])
            .collect();
        let (bases, offsets) = self.space.split(targets);
        let amps = bases
            .iter()
            .map(|&b| self.amplitudes[b + offsets[t]])
            .collect();
        StateVector::normalized(MixedRadixSpace::new(rest)?, amps)
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        Ok(Self::from_fn(self.dim, |r, c| {
            (0..self.dim).map(|k| self.get(r, k) * rhs.get(k, c)).sum()
        }))
    }

    pub fn kron(&self, rhs: &Operator) -> Operator {
        let d = rhs.dim;
        Self::from_fn(self.dim * d, |r, c| {
            self.get(r / d, c / d) * rhs.get(r % d, c % d)
        })
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let s: Complex64 = (0..self.dim)
                    .map(|k| self.get(k, r).conj() * self.get(k, c))
                    .sum();
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() < UNITARY_TOL
    }

    fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| {
                self.entries[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Kronecker product of the states, in list order.
pub fn tensor(states: &[StateVector]) -> Result<StateVector> {
    let (first, rest) = states.split_first().ok_or(Error::EmptyTensor)?;
    let mut dims = first.dims().to_vec();
    let mut amps = first.amplitudes.clone();
    for s in rest {
        dims.extend_from_slice(s.dims());
        amps = amps
            .iter()
            .flat_map(|a| s.amplitudes.iter().map(move |b| a * b))
            .collect();
    }
    StateVector::new(MixedRadixSpace::new(dims)?, amps)
}

/// Applies `op` to the `targets` subsystems (first target most significant
/// in the operator's own index) and the identity elsewhere.
pub fn apply(op: &Operator, state: &StateVector, targets: &[usize]) -> Result<StateVector> {
    let space = state.space();
    space.check_targets(targets)?;
    let sub_dim: usize = targets.iter().map(|&t| space.dims[t]).product();
    if op.dim() != sub_dim {
        return Err(Error::DimensionMismatch {
            expected: sub_dim,
            got: op.dim(),
        });
    }
    let (bases, offsets) = space.split(targets);
    let mut out = vec![ZERO; space.total_dim()];
    let mut scratch = vec![ZERO; sub_dim];
    for &b in &bases {
        for (s, &o) in scratch.iter_mut().zip(&offsets) {
            *s = state.amplitudes[b + o];
        }
        for (v, &o) in op.mul_vec(&scratch).into_iter().zip(&offsets) {
            out[b + o] = v;
        }
    }
    // Non-unitary operators are allowed; the result is not renormalized.
    Ok(StateVector {
        space: space.clone(),
        amplitudes: out,
    })
}

/// `⟨a|b⟩`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch(a.dims().to_vec(), b.dims().to_vec()));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Born probabilities of every computational-basis outcome on `targets`,
/// indexed mixed-radix over the targets in the given order.
pub fn outcome_probabilities(state: &StateVector, targets: &[usize]) -> Result<Vec<f64>> {
    let space = state.space();
    space.check_targets(targets)?;
    let (bases, offsets) = space.split(targets);
    Ok(offsets
        .iter()
        .map(|&o| {
            bases
                .iter()
                .map(|&b| state.amplitudes[b + o].norm_sqr())
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: Vec<usize>,
    pub probability: f64,
    pub collapsed: StateVector,
}

/// Samples a computational-basis measurement of `targets` and collapses the
/// state onto the observed outcome.
pub fn measure_computational<R: Rng + ?Sized>(
    state: &StateVector,
    targets: &[usize],
    rng: &mut R,
) -> Result<Measurement> {
    let probs = outcome_probabilities(state, targets)?;
    let total: f64 = probs.iter().sum();
    let choice = sample_index(&probs, total, rng).ok_or(Error::ZeroNormBranch)?;
    let space = state.space();
    let sub = MixedRadixSpace::new(space.sub_dims(targets))?;
    let (bases, offsets) = space.split(targets);
    let mut amps = vec![ZERO; space.total_dim()];
    for &b in &bases {
        let idx = b + offsets[choice];
        amps[idx] = state.amplitudes[idx];
    }
    let collapsed = StateVector::normalized(space.clone(), amps)?;
    Ok(Measurement {
        outcome: sub.digits_of(choice),
        probability: probs[choice],
        collapsed,
    })
}

/// Picks an index with probability proportional to `weights`, never
/// returning a zero-weight entry.
pub(crate) fn sample_index<R: Rng + ?Sized>(
    weights: &[f64],
    total: f64,
    rng: &mut R,
) -> Option<usize> {
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let x = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if x < acc {
            return Some(i);
        }
    }
    // rounding at the top of the cumulative sum
    last
}

/// Max deviation of the Gram matrix of `vectors` from the identity.
pub fn gram_deviation(vectors: &[&[Complex64]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let s: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Outcome of projecting onto one basis member.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    /// `None` when the projected component has zero norm.
    pub collapsed: Option<StateVector>,
}

/// Projects `targets` onto each member of an orthonormal `basis` of states
/// living on exactly those subsystems.
pub fn project(
    state: &StateVector,
    targets: &[usize],
    basis: &[StateVector],
) -> Result<Vec<Projection>> {
    let space = state.space();
    space.check_targets(targets)?;
    let sub_dims = space.sub_dims(targets);
    for b in basis {
        if b.dims() != sub_dims.as_slice() {
            return Err(Error::SpaceMismatch(sub_dims.clone(), b.dims().to_vec()));
        }
    }
    let refs: Vec<&[Complex64]> = basis.iter().map(|b| b.amplitudes()).collect();
    let dev = gram_deviation(&refs);
    if dev > NORM_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let (bases, offsets) = space.split(targets);
    let mut out = Vec::with_capacity(basis.len());
    for member in basis {
        // contraction of the state with ⟨member| over the targets
        let coeffs: Vec<Complex64> = bases
            .iter()
            .map(|&b| {
                offsets
                    .iter()
                    .zip(&member.amplitudes)
                    .map(|(&o, m)| m.conj() * state.amplitudes[b + o])
                    .sum()
            })
            .collect();
        let probability = squared_norm(&coeffs);
        let collapsed = if probability > 0.0 {
            let mut amps = vec![ZERO; space.total_dim()];
            for (&b, c) in bases.iter().zip(&coeffs) {
                for (&o, m) in offsets.iter().zip(&member.amplitudes) {
                    amps[b + o] = c * m;
                }
            }
            Some(StateVector::normalized(space.clone(), amps)?)
        } else {
            None
        };
        out.push(Projection {
            probability,
            collapsed,
        });
    }
    Ok(out)
}

/// Extends orthonormal `columns` to a `d × d` unitary. The extra columns
/// come from Gram–Schmidt over the standard basis in index order.
pub fn complete_to_unitary(columns: &[Vec<Complex64>], d: usize) -> Result<Operator> {
    if columns.len() > d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: columns.len(),
        });
    }
    if let Some(c) = columns.iter().find(|c| c.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: c.len(),
        });
    }
    let refs: Vec<&[Complex64]> = columns.iter().map(|c| c.as_slice()).collect();
    let dev = gram_deviation(&refs);
    if dev > NORM_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut basis: Vec<Vec<Complex64>> = columns.to_vec();
    for e in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = vec![ZERO; d];
        v[e] = ONE;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                let overlap: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= overlap * bi);
            }
        }
        let n = squared_norm(&v).sqrt();
        // A standard basis vector always retains at least sqrt((d - k) / d)
        // of its norm somewhere; skip the ones that are (nearly) spanned.
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    debug_assert_eq!(basis.len(), d);
    Ok(Operator::from_fn(d, |r, c| basis[c][r]))
}

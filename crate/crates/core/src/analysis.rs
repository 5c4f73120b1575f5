//! Information accounting for the protocol: message counts per branch,
//! average information, side-channel cost and the two-pair capacity surface.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{branch_probabilities, ChannelSpec};

/// `Π_k p·(q − r_k)`.
pub fn branch_message_count(p: usize, q: usize, branch: &[usize]) -> u64 {
    branch.iter().map(|&r| (p * (q - r)) as u64).product()
}

/// Expected `log2` of the number of distinguishable messages, in bits.
pub fn average_information(spec: &ChannelSpec) -> f64 {
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    branch_probabilities(spec)
        .iter()
        .map(|b| b.probability * (branch_message_count(p, q, &b.digits) as f64).log2())
        .sum()
}

/// Bits needed to announce the auxiliary results: `N·log2 q`.
pub fn classical_cost(spec: &ChannelSpec) -> f64 {
    spec.pairs() as f64 * (spec.receiver_dim() as f64).log2()
}

/// `N·log2(p·q)`, reached when every pair is maximally entangled.
pub fn maximal_information(spec: &ChannelSpec) -> f64 {
    spec.pairs() as f64 * ((spec.sender_dim() * spec.receiver_dim()) as f64).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub branch: Vec<usize>,
    pub probability: f64,
    pub message_count: u64,
    pub log2_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub spec: ChannelSpec,
    pub branch_rows: Vec<BranchRow>,
    pub average_information: f64,
    pub classical_cost: f64,
    pub maximal_information: f64,
}

pub fn report(spec: &ChannelSpec) -> CapacityReport {
    let (p, q) = (spec.sender_dim(), spec.receiver_dim());
    // branch_probabilities already enumerates in lexicographic order
    let branch_rows: Vec<BranchRow> = branch_probabilities(spec)
        .into_iter()
        .map(|b| {
            let message_count = branch_message_count(p, q, &b.digits);
            BranchRow {
                probability: b.probability,
                message_count,
                log2_count: (message_count as f64).log2(),
                branch: b.digits,
            }
        })
        .collect();
    let average_information = branch_rows
        .iter()
        .map(|r| r.probability * r.log2_count)
        .sum();
    CapacityReport {
        spec: spec.clone(),
        branch_rows,
        average_information,
        classical_cost: classical_cost(spec),
        maximal_information: maximal_information(spec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub alpha01_sq: f64,
    pub alpha02_sq: f64,
    pub i_ave: f64,
}

/// `I_ave` for two `3 ⊗ 2` pairs on the grid `α₀ₖ² = 0.5·i/steps`,
/// `i = 1..=steps`, row-major with the first pair as the slow axis.
pub fn capacity_surface(steps: usize) -> Result<Vec<SurfacePoint>> {
    if steps < 2 {
        return Err(Error::InvalidChannel(format!(
            "surface needs at least 2 steps, got {steps}"
        )));
    }
    let axis: Vec<f64> = (1..=steps).map(|i| 0.5 * i as f64 / steps as f64).collect();
    let mut out = Vec::with_capacity(steps * steps);
    for &a in &axis {
        for &b in &axis {
            let spec = ChannelSpec::from_squared(3, 2, vec![vec![a, 1.0 - a], vec![b, 1.0 - b]])?;
            out.push(SurfacePoint {
                alpha01_sq: a,
                alpha02_sq: b,
                i_ave: average_information(&spec),
            });
        }
    }
    Ok(out)
}

//! One carrier per round.
//!
//! Alice applies SUM from her half of the pair onto a fresh carrier, the
//! carrier crosses the channel, Bob applies the inverse SUM from his half and
//! measures it. The round is kept when the outcome is 0, i.e. when the carrier
//! shift equals the shift of the shared pair. The carrier phase kicks back onto
//! the pair, so the surviving row is convolved with the carrier's phase row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_model::BellTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub table: BellTable,
    pub success_probability: f64,
}

impl RoundOutcome {
    pub fn fidelity(&self) -> f64 {
        self.table.fidelity()
    }
}

/// `W(n, m') = sum_j shared[n][j] channel[n][m' - j]`, then normalized.
pub fn round_update(shared: &BellTable, channel: &BellTable) -> Result<RoundOutcome> {
    let d = shared.d();
    if channel.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: channel.d() });
    }
    let mut w = vec![0.0; d * d];
    for n in 0..d {
        for m in 0..d {
            w[n * d + m] = (0..d)
                .map(|j| shared.get(n, j) * channel.get(n, (m + d - j) % d))
                .sum();
        }
    }
    let success_probability: f64 = w.iter().sum();
    if !(success_probability > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(RoundOutcome {
        table: BellTable::from_weights(d, w)?,
        success_probability,
    })
}

/// The same circuit with `m` carriers, each copied from Alice's half and
/// compared with Bob's. A shift row survives only if every carrier carries
/// that shift; all carrier phases add onto the pair.
pub fn sum_circuit_round(shared: &BellTable, channel: &BellTable, m: usize) -> Result<RoundOutcome> {
    let d = shared.d();
    if channel.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: channel.d() });
    }
    if m == 0 {
        return Err(Error::OutOfRange { name: "m", value: 0.0, range: ">= 1" });
    }
    let mut w = vec![0.0; d * d];
    for n in 0..d {
        let row: Vec<f64> = (0..d).map(|z| channel.get(n, z)).collect();
        let mut kernel = row.clone();
        for _ in 1..m {
            kernel = (0..d)
                .map(|t| (0..d).map(|j| kernel[j] * row[(t + d - j) % d]).sum())
                .collect();
        }
        for t in 0..d {
            w[n * d + t] = (0..d)
                .map(|j| shared.get(n, j) * kernel[(t + d - j) % d])
                .sum();
        }
    }
    let success_probability: f64 = w.iter().sum();
    if !(success_probability > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(RoundOutcome {
        table: BellTable::from_weights(d, w)?,
        success_probability,
    })
}

/// `F_N = p0^(N+1) / (p0^(N+1) + sum_{x != 0} u_x^(N+1))`, for channels
/// without pure phase errors. `u` holds all shift marginals; `u[0]` is ignored.
pub fn closed_form_fidelity(p0: f64, u: &[f64], rounds: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::OutOfRange { name: "p0", value: p0, range: "[0, 1]" });
    }
    let e = rounds as f64 + 1.0;
    let logs: Vec<f64> = u
        .iter()
        .skip(1)
        .filter(|&&ux| ux > 0.0)
        .map(|&ux| e * (ux.ln() - p0.ln()))
        .collect();
    if logs.is_empty() {
        return Ok(1.0);
    }
    if p0 == 0.0 {
        return Ok(0.0);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    Ok(if lse > 0.0 {
        let t = (-lse).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + lse.exp())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergence {
    /// `u_0 > u_x` for every `x != 0`.
    pub converges: bool,
    /// The channel has no pure phase errors, so the closed form is exact.
    pub hypothesis_holds: bool,
}

pub fn has_no_phase_errors(channel: &BellTable) -> bool {
    (1..channel.d()).all(|z| channel.get(0, z) == 0.0)
}

pub fn converges(channel: &BellTable) -> Convergence {
    let u = channel.marginals().u;
    Convergence {
        converges: u[1..].iter().all(|&ux| u[0] > ux),
        hypothesis_holds: has_no_phase_errors(channel),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: u64,
    pub success_probability: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub final_table: BellTable,
    pub converged_fidelity: f64,
}

/// Starts from one noisy pair distributed over `channel` and runs `rounds`
/// rounds, each with a fresh carrier through the same channel.
pub fn trajectory(channel: &BellTable, rounds: u64) -> Result<Trajectory> {
    let mut shared = channel.clone();
    let mut points = Vec::with_capacity(rounds as usize);
    for round in 1..=rounds {
        let out = round_update(&shared, channel)?;
        points.push(TrajectoryPoint {
            round,
            success_probability: out.success_probability,
            fidelity: out.fidelity(),
        });
        shared = out.table;
    }
    let converged_fidelity = points.last().map_or(channel.fidelity(), |p| p.fidelity);
    Ok(Trajectory { points, final_table: shared, converged_fidelity })
}

//! Basis preprocessing and the two-stage adaptive schedule.
//!
//! The channel's heaviest mutually unbiased line is rotated onto the row of
//! pure phase errors, so every shift check sees carriers whose shift marginal
//! `u_0` exceeds 1/2. Shift checks then suppress the rows `x != 0`; a
//! bilateral Hadamard turns the leftover phase errors into shifts for the
//! second stage, and a final local Pauli moves the dominant Bell state to
//! `Phi_00`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcaepp::round_update_general;
use crate::phase_space::{check_dim, rotation_to_primary, SymplecticMap};
use crate::single_carrier::{sum_circuit_round, RoundOutcome};
use crate::state_model::{BellTable, MubWeights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTracker {
    d: usize,
    /// `eps[x * d + z] = p_xz / p_00`; `eps[0] = 1`.
    eps: Vec<f64>,
}

impl EpsilonTracker {
    pub fn from_table(t: &BellTable) -> Result<Self> {
        let p00 = t.fidelity();
        if !(p00 > 0.0) {
            return Err(Error::OutOfRange { name: "p00", value: p00, range: "> 0" });
        }
        Ok(Self { d: t.d(), eps: t.as_slice().iter().map(|p| p / p00).collect() })
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.eps[x * self.d + z]
    }

    /// `p_00 = 1 / (1 + sum eps)`.
    pub fn fidelity(&self) -> f64 {
        1.0 / self.eps.iter().sum::<f64>()
    }

    pub fn to_table(&self) -> Result<BellTable> {
        BellTable::from_weights(self.d, self.eps.clone())
    }
}

/// `eps0 * ratio^(k m)`.
pub fn epsilon_decay_model(eps0: f64, ratio: f64, k: u32, m: u32) -> f64 {
    if k == 0 || m == 0 {
        return eps0;
    }
    eps0 * ratio.powf(k as f64 * m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Check(usize),
    Rotate,
    Correct,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Check(m) => write!(f, "check:{m}"),
            Phase::Rotate => write!(f, "rotate"),
            Phase::Correct => write!(f, "correct"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule(Vec<Phase>);

impl Schedule {
    pub fn new(phases: Vec<Phase>) -> Result<Self> {
        let Some((last, body)) = phases.split_last() else {
            return Err(Error::BadSchedule("empty schedule".into()));
        };
        if *last != Phase::Correct {
            return Err(Error::BadSchedule("schedule must end with correct".into()));
        }
        for p in body {
            match p {
                Phase::Correct => {
                    return Err(Error::BadSchedule("correct may only appear last".into()))
                }
                Phase::Check(0) => return Err(Error::BadSchedule("check needs m >= 1".into())),
                _ => {}
            }
        }
        Ok(Self(phases))
    }

    /// `k` checks, one rotation, `k` checks, correction.
    pub fn interleaved(k: usize, m: usize) -> Result<Self> {
        let mut v = vec![Phase::Check(m); k];
        v.push(Phase::Rotate);
        v.extend(std::iter::repeat_n(Phase::Check(m), k));
        v.push(Phase::Correct);
        Self::new(v)
    }

    pub fn phases(&self) -> &[Phase] {
        &self.0
    }

    pub fn checks(&self) -> usize {
        self.0.iter().filter(|p| matches!(p, Phase::Check(_))).count()
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let phases = s
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                match tok {
                    "rotate" => Ok(Phase::Rotate),
                    "correct" => Ok(Phase::Correct),
                    _ => tok
                        .strip_prefix("check:")
                        .and_then(|m| m.parse().ok())
                        .map(Phase::Check)
                        .ok_or_else(|| Error::BadSchedule(format!("unknown token {tok:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(phases)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Phase::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// `(x, z) -> (-z, x)`: takes the slope-0 line onto the row `x = 0`.
fn onto_phase_row(d: usize) -> Result<SymplecticMap> {
    SymplecticMap::new(d, [[0, -1], [1, 0]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub weights: MubWeights,
    pub map: SymplecticMap,
}

/// Relabels `t` so its heaviest line becomes the row `x = 0`, giving
/// `u[0] = L_max`. A table already dominated by that row is left alone.
pub fn mub_preprocess(t: &BellTable) -> Result<(Preprocessing, BellTable)> {
    let weights = t.mub_weights()?;
    let line = &weights.lines[weights.argmax];
    let map = onto_phase_row(t.d())?.compose(&rotation_to_primary(line)?)?;
    let out = t.relabel_symplectic(&map)?;
    Ok((Preprocessing { weights, map }, out))
}

/// Bilateral Hadamard: `(x, z) -> (z, -x)`.
pub fn hadamard_relabel(t: &BellTable) -> Result<BellTable> {
    t.relabel_symplectic(&SymplecticMap::new(t.d(), [[0, 1], [-1, 0]])?)
}

/// Moves the largest entry to `(0, 0)` by a translation; ties go to the
/// smallest row-major index. Returns the table and the translated index.
pub fn final_pauli_correction(t: &BellTable) -> Result<(BellTable, (usize, usize))> {
    let d = t.d();
    let mut best = 0;
    for (i, &v) in t.as_slice().iter().enumerate() {
        if v > t.as_slice()[best] {
            best = i;
        }
    }
    let (x, z) = (best / d, best % d);
    Ok((t.translate_to_origin(x, z)?, (x, z)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckModel {
    /// Each carrier passes the pair only if it shares the pair's shift,
    /// `p'_xz ~ p_xz u_x^m`, with phases untouched.
    ShiftFilter,
    /// The star-generator round, preceded by its permutation.
    StarCode,
    /// The literal SUM circuit; carrier phases kick back onto the pair.
    SumCircuit,
}

impl FromStr for CheckModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift-filter" => Ok(Self::ShiftFilter),
            "star" => Ok(Self::StarCode),
            "sum-circuit" => Ok(Self::SumCircuit),
            _ => Err(Error::BadSchedule(format!("unknown check model {s:?}"))),
        }
    }
}

pub fn shift_filter_round(shared: &BellTable, channel: &BellTable, m: usize) -> Result<RoundOutcome> {
    let d = shared.d();
    if channel.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: channel.d() });
    }
    let u = channel.marginals().u;
    let w: Vec<f64> = shared
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, p)| p * u[i / d].powi(m as i32))
        .collect();
    let success_probability: f64 = w.iter().sum();
    if !(success_probability > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(RoundOutcome { table: BellTable::from_weights(d, w)?, success_probability })
}

pub fn check_round(model: CheckModel, shared: &BellTable, channel: &BellTable, m: usize) -> Result<RoundOutcome> {
    match model {
        CheckModel::ShiftFilter => shift_filter_round(shared, channel, m),
        CheckModel::StarCode => round_update_general(shared, channel, m),
        CheckModel::SumCircuit => sum_circuit_round(shared, channel, m),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub x: usize,
    pub z: usize,
    pub observed: f64,
    pub model: f64,
    pub excess: bool,
}

/// Per-entry ratio `eps_after / eps_before` for shift errors, against
/// `(u_x / u_0)^m` of the carrier channel.
pub fn epsilon_contraction(
    before: &BellTable,
    after: &BellTable,
    carrier: &BellTable,
    m: usize,
) -> Result<Vec<Contraction>> {
    let (eb, ea) = (EpsilonTracker::from_table(before)?, EpsilonTracker::from_table(after)?);
    let u = carrier.marginals().u;
    let d = before.d();
    let mut out = Vec::new();
    for x in 1..d {
        for z in 0..d {
            if eb.get(x, z) <= 0.0 {
                continue;
            }
            let observed = ea.get(x, z) / eb.get(x, z);
            let model = epsilon_decay_model(1.0, u[x] / u[0], 1, m as u32);
            out.push(Contraction { x, z, observed, model, excess: observed > model * (1.0 + 1e-6) });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub preprocess: bool,
    pub model: CheckModel,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { preprocess: true, model: CheckModel::ShiftFilter }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub fidelity: f64,
    /// Success probability of this phase; 1 for relabelings.
    pub success_probability: f64,
    pub cumulative_success: f64,
    /// Shift-error entries contracting slower than the filter model.
    pub excess_contractions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRun {
    pub preprocessing: Option<Preprocessing>,
    pub model: CheckModel,
    pub initial_fidelity: f64,
    pub phases: Vec<PhaseReport>,
    pub correction: Option<(usize, usize)>,
    pub final_table: BellTable,
}

impl AdaptiveRun {
    pub fn final_fidelity(&self) -> f64 {
        self.final_table.fidelity()
    }
}

/// Distributes one pair through `channel`, then runs the schedule with fresh
/// carriers from the same (relabeled) channel in every check.
pub fn run_adaptive(channel: &BellTable, schedule: &Schedule, opts: &AdaptiveOptions) -> Result<AdaptiveRun> {
    let (preprocessing, carrier) = if opts.preprocess {
        let (pre, t) = mub_preprocess(channel)?;
        (Some(pre), t)
    } else {
        (None, channel.clone())
    };
    let mut shared = carrier.clone();
    let mut phases = Vec::with_capacity(schedule.phases().len());
    let mut cumulative = 1.0;
    let mut correction = None;
    for &phase in schedule.phases() {
        let (next, ps, excess) = match phase {
            Phase::Check(m) => {
                let out = check_round(opts.model, &shared, &carrier, m)?;
                let excess = epsilon_contraction(&shared, &out.table, &carrier, m)?
                    .iter()
                    .filter(|c| c.excess)
                    .count();
                (out.table, out.success_probability, excess)
            }
            Phase::Rotate => (hadamard_relabel(&shared)?, 1.0, 0),
            Phase::Correct => {
                let (t, at) = final_pauli_correction(&shared)?;
                correction = Some(at);
                (t, 1.0, 0)
            }
        };
        cumulative *= ps;
        shared = next;
        phases.push(PhaseReport {
            phase,
            fidelity: shared.fidelity(),
            success_probability: ps,
            cumulative_success: cumulative,
            excess_contractions: excess,
        });
    }
    Ok(AdaptiveRun {
        preprocessing,
        model: opts.model,
        initial_fidelity: carrier.fidelity(),
        phases,
        correction,
        final_table: shared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdPredicates {
    /// `p00 > 1/d`.
    pub distillable: bool,
    /// `p00 > (d - 1) / (2 d)`.
    pub spectral_dominance: bool,
    /// `(d p00 + 1) / (d + 1) > 1/2`.
    pub average_bound: bool,
}

pub fn threshold_predicates(p00: f64, d: usize) -> Result<ThresholdPredicates> {
    check_dim(d)?;
    let df = d as f64;
    Ok(ThresholdPredicates {
        distillable: p00 > 1.0 / df,
        spectral_dominance: p00 > (df - 1.0) / (2.0 * df),
        average_bound: (df * p00 + 1.0) / (df + 1.0) > 0.5,
    })
}

//! Qutrit purification with `m` carriers per round.
//!
//! The carriers are encoded with the star generators
//! `{X_i X_m^2 : i < m} + {Z_0 Z_1 ... Z_m}` and the round succeeds when all
//! carrier phases agree and the shifts of pair and carriers sum to zero. The
//! surviving pair is relabeled to `(s, t) = (x_0, z_0 - z_1)`.
//!
//! `p` is always the fidelity `p00` of a depolarizing carrier channel.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::single_carrier::RoundOutcome;
use crate::state_model::BellTable;

/// Index map of the permutation applied before each round: `r[j] = q[SRC[j]]`.
const SRC: [usize; 9] = [0, 7, 8, 3, 4, 5, 6, 1, 2];

/// Iteration cap used when none is given.
pub const DEFAULT_MAX_ROUNDS: u64 = 1 << 62;
pub const DEFAULT_TOL: f64 = 1e-12;

fn require_qutrit(t: &BellTable) -> Result<()> {
    if t.d() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: t.d() });
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(1.0 / 9.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p, range: "[1/9, 1]" });
    }
    Ok(())
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::OutOfRange { name: "m", value: 0.0, range: ">= 1" });
    }
    Ok(())
}

/// Swaps `(0,1) <-> (2,1)` and `(0,2) <-> (2,2)`.
pub fn preprocess_permutation(q: &BellTable) -> Result<BellTable> {
    require_qutrit(q)?;
    let s = q.as_slice();
    BellTable::from_weights(3, SRC.iter().map(|&i| s[i]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub p: f64,
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DecayParams {
    /// Single-carrier values `(A_1, B_1, C_1)`.
    pub fn per_carrier(p: f64) -> (f64, f64, f64) {
        ((3.0 * p + 1.0) / 4.0, (9.0 * p - 1.0) / 8.0, 3.0 * (1.0 - p) / 8.0)
    }

    /// `(C_1 / B_1)^m`, the suppression factor of the fixed point.
    pub fn suppression(&self) -> f64 {
        let (_, b1, c1) = Self::per_carrier(self.p);
        (c1 / b1).powi(self.m as i32)
    }
}

pub fn decay_params(p: f64, m: usize) -> Result<DecayParams> {
    check_p(p)?;
    check_m(m)?;
    let (a1, b1, c1) = DecayParams::per_carrier(p);
    let k = m as i32;
    Ok(DecayParams { p, m, a: a1.powi(k), b: b1.powi(k), c: c1.powi(k) })
}

/// `(A + (3 R_0 - 1) B + 2 C) / 3` for an already permuted table.
pub fn success_probability(r: &BellTable, p: f64, m: usize) -> Result<f64> {
    require_qutrit(r)?;
    let k = decay_params(p, m)?;
    let r0 = r.get(0, 0) + r.get(0, 1) + r.get(0, 2);
    let ps = (k.a + (3.0 * r0 - 1.0) * k.b + 2.0 * k.c) / 3.0;
    if !(ps > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(ps)
}

fn depolarizing_weights(r: &[f64], k: &DecayParams) -> Vec<f64> {
    let mut w = vec![0.0; 9];
    for s in 0..3 {
        let alpha = if s == 0 { k.a + 2.0 * k.b } else { k.a - k.b };
        for t in 0..3 {
            let others = r[s * 3 + (t + 1) % 3] + r[s * 3 + (t + 2) % 3];
            w[s * 3 + t] = (r[s * 3 + t] * alpha + others * k.c) / 3.0;
        }
    }
    w
}

pub fn round_update_depolarizing(q: &BellTable, p: f64, m: usize) -> Result<RoundOutcome> {
    let r = preprocess_permutation(q)?;
    let k = decay_params(p, m)?;
    let success_probability = success_probability(&r, p, m)?;
    let w = depolarizing_weights(r.as_slice(), &k);
    Ok(RoundOutcome { table: BellTable::from_weights(3, w)?, success_probability })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralComponents {
    /// Phase marginal `C_c`.
    pub phase_marginal: [f64; 3],
    /// `phi_{x|z=c}(k)`, zero where `C_c = 0`.
    pub conditional: [[Complex64; 3]; 3],
    /// `sum_x p[x][c] w^{k x} = C_c phi_{x|z=c}(k)`.
    pub unnormalized: [[Complex64; 3]; 3],
}

fn omega(k: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k % 3) as f64 / 3.0)
}

pub fn spectral_components(channel: &BellTable) -> Result<SpectralComponents> {
    require_qutrit(channel)?;
    let mut out = SpectralComponents {
        phase_marginal: [0.0; 3],
        conditional: [[Complex64::new(0.0, 0.0); 3]; 3],
        unnormalized: [[Complex64::new(0.0, 0.0); 3]; 3],
    };
    for c in 0..3 {
        out.phase_marginal[c] = (0..3).map(|x| channel.get(x, c)).sum();
        for k in 0..3 {
            let psi: Complex64 = (0..3).map(|x| omega(k * x) * channel.get(x, c)).sum();
            out.unnormalized[c][k] = psi;
            if out.phase_marginal[c] > 0.0 {
                out.conditional[c][k] = psi / out.phase_marginal[c];
            }
        }
    }
    Ok(out)
}

/// Characteristic function `sum_x u_x w^{k x}` of the shift marginal.
pub fn shift_characteristic(t: &BellTable) -> Result<[Complex64; 3]> {
    require_qutrit(t)?;
    let u = t.marginals().u;
    Ok([0, 1, 2].map(|k| (0..3).map(|x| omega(k * x) * u[x]).sum()))
}

const IMAG_TOL: f64 = 1e-10;

/// One star-code round on an already permuted table with arbitrary i.i.d.
/// carrier noise.
pub fn star_round(r: &BellTable, channel: &BellTable, m: usize) -> Result<RoundOutcome> {
    require_qutrit(r)?;
    check_m(m)?;
    let sc = spectral_components(channel)?;
    let powered: Vec<[Complex64; 3]> = (0..3)
        .map(|g| [0, 1, 2].map(|k| sc.unnormalized[g][k].powi(m as i32)))
        .collect();
    let mut w = vec![0.0; 9];
    let mut residue: f64 = 0.0;
    for s in 0..3 {
        for t in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (g, pw) in powered.iter().enumerate() {
                let filt: Complex64 = (0..3).map(|k| omega(k * s) * pw[k]).sum();
                acc += filt * r.get(s, (g + t) % 3);
            }
            acc /= 3.0;
            residue = residue.max(acc.im.abs());
            w[s * 3 + t] = acc.re;
        }
    }
    if residue > IMAG_TOL {
        return Err(Error::ImaginaryResidue(residue));
    }
    let success_probability: f64 = w.iter().sum();
    if !(success_probability > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(RoundOutcome { table: BellTable::from_weights(3, w)?, success_probability })
}

pub fn round_update_general(q: &BellTable, channel: &BellTable, m: usize) -> Result<RoundOutcome> {
    star_round(&preprocess_permutation(q)?, channel, m)
}

/// `(1/3) sum_c C_c^m sum_k phi_x0(k) phi_{x|z=c}(k)^m` for an already
/// permuted table.
pub fn success_probability_general(r: &BellTable, channel: &BellTable, m: usize) -> Result<f64> {
    let sc = spectral_components(channel)?;
    let phi0 = shift_characteristic(r)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..3 {
        for k in 0..3 {
            acc += phi0[k] * sc.unnormalized[c][k].powi(m as i32);
        }
    }
    acc /= 3.0;
    if acc.im.abs() > IMAG_TOL {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    Ok(acc.re)
}

type Mat = [[f64; 9]; 9];

fn zero() -> Mat {
    [[0.0; 9]; 9]
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut c = zero();
    for i in 0..9 {
        for k in 0..9 {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..9 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn apply(a: &Mat, v: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..9 {
        out[i] = (0..9).map(|j| a[i][j] * v[j]).sum();
    }
    out
}

fn normalize(v: [f64; 9]) -> [f64; 9] {
    let s: f64 = v.iter().sum();
    v.map(|x| x / s)
}

fn sup_dist(a: &[f64; 9], b: &[f64; 9]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `G` with `(M / A)^2 = I + G`, where `M` is one depolarizing round
/// including the permutation. Entries are of order `B/A` and `C/A`, so no
/// precision is lost to the identity part.
fn two_round_generator(k: &DecayParams) -> Mat {
    let b = (k.b / k.a).max(0.0);
    let c = k.c / k.a;
    let mut e = zero();
    for s in 0..3 {
        let ds = if s == 0 { 2.0 } else { -1.0 };
        for t in 0..3 {
            for u in 0..3 {
                e[s * 3 + t][s * 3 + u] = if t == u { b * ds } else { c };
            }
        }
    }
    let mut pep = zero();
    for i in 0..9 {
        for j in 0..9 {
            pep[i][j] = e[SRC[i]][SRC[j]];
        }
    }
    let prod = mul(&e, &pep);
    let mut g = zero();
    for i in 0..9 {
        for j in 0..9 {
            g[i][j] = e[i][j] + pep[i][j] + prod[i][j];
        }
    }
    g
}

fn scale_max(m: &Mat) -> f64 {
    m.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// Stationary table of the depolarizing round: the leading eigenvector of the
/// two-round generator, found by repeated squaring of a shifted copy.
pub fn stationary_state(p: f64, m: usize) -> Result<BellTable> {
    let k = decay_params(p, m)?;
    if p == 1.0 {
        return BellTable::depolarizing(3, 1.0);
    }
    let g = two_round_generator(&k);
    let radius = g
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = g;
    for (i, row) in s.iter_mut().enumerate() {
        row[i] += radius;
    }
    let start = BellTable::depolarizing(3, p)?;
    let mut v: [f64; 9] = start.as_slice().try_into().expect("nine entries");
    for _ in 0..64 {
        let n = scale_max(&s);
        if n > 0.0 {
            for x in s.iter_mut().flatten() {
                *x /= n;
            }
        }
        let next = normalize(apply(&s, &v));
        let moved = sup_dist(&next, &v);
        v = next;
        if moved == 0.0 {
            break;
        }
        s = mul(&s, &s);
    }
    BellTable::from_weights(3, v.to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub rounds: u64,
    pub fidelity: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub p: f64,
    pub m: usize,
    pub table: BellTable,
    /// First checkpoint within `tol` of the stationary table. Checkpoints
    /// sit at 0, 1 and powers of two, so this overestimates by at most 2x.
    pub rounds: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// `|f(q) - q|_inf` for one more exact round.
    pub residual: f64,
    pub success_probability: f64,
    /// `2 (C_1/B_1)^m`.
    pub infidelity_bound: f64,
}

impl FixedPoint {
    pub fn fidelity(&self) -> f64 {
        self.table.fidelity()
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.table.fidelity()
    }
}

/// Runs the depolarizing round from `depolarizing(p)` until it is within
/// `tol` (sup norm) of the stationary table.
///
/// `N` rounds are evaluated as `(I + G)^(N/2)` kept in the form `a I + H` and
/// squared, so round counts far beyond direct iteration stay affordable and
/// the slow approach of the last digits is not mistaken for convergence.
pub fn fixed_point(p: f64, m: usize, tol: f64, max_rounds: u64) -> Result<FixedPoint> {
    let k = decay_params(p, m)?;
    if !(tol > 0.0) {
        return Err(Error::OutOfRange { name: "tol", value: tol, range: "> 0" });
    }
    let target = stationary_state(p, m)?;
    let star: [f64; 9] = target.as_slice().try_into().expect("nine entries");
    let q0 = BellTable::depolarizing(3, p)?;
    let v0: [f64; 9] = q0.as_slice().try_into().expect("nine entries");

    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let record = |checkpoints: &mut Vec<Checkpoint>, rounds: u64, v: &[f64; 9]| {
        let distance = sup_dist(v, &star);
        checkpoints.push(Checkpoint { rounds, fidelity: v[0], distance });
        distance
    };
    let mut found = None;
    if record(&mut checkpoints, 0, &v0) < tol {
        found = Some(0);
    }
    if found.is_none() {
        let one = round_update_depolarizing(&q0, p, m)?;
        let v1: [f64; 9] = one.table.as_slice().try_into().expect("nine entries");
        if record(&mut checkpoints, 1, &v1) < tol {
            found = Some(1);
        }
    }
    let mut alpha = 1.0;
    let mut h = two_round_generator(&k);
    let mut rounds: u64 = 2;
    while found.is_none() {
        if rounds > max_rounds {
            let last = checkpoints.last().expect("recorded");
            return Err(Error::NonConvergence { rounds: last.rounds, distance: last.distance });
        }
        let hv = apply(&h, &v0);
        let v = normalize(std::array::from_fn(|i| alpha * v0[i] + hv[i]));
        if record(&mut checkpoints, rounds, &v) < tol {
            found = Some(rounds);
            break;
        }
        let h2 = mul(&h, &h);
        let mut next = zero();
        for i in 0..9 {
            for j in 0..9 {
                next[i][j] = 2.0 * alpha * h[i][j] + h2[i][j];
            }
        }
        let a2 = alpha * alpha;
        let n = scale_max(&next).max(a2);
        alpha = a2 / n;
        for x in next.iter_mut().flatten() {
            *x /= n;
        }
        h = next;
        rounds = match rounds.checked_mul(2) {
            Some(r) => r,
            None => {
                let last = checkpoints.last().expect("recorded");
                return Err(Error::NonConvergence { rounds: last.rounds, distance: last.distance });
            }
        };
    }
    let again = round_update_depolarizing(&target, p, m)?;
    Ok(FixedPoint {
        p,
        m,
        residual: again.table.max_abs_diff(&target),
        success_probability: again.success_probability,
        table: target,
        rounds: found.expect("loop exits with a round count"),
        checkpoints,
        infidelity_bound: 2.0 * k.suppression(),
    })
}

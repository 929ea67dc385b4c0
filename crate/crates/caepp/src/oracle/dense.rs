//! Dense state vectors on `n` qudits. Site 0 is the most significant digit
//! of the basis index.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::enumerate::EnumerationResult;
use super::DENSE_LIMIT;
use crate::error::{Error, Result};
use crate::phase_space::{check_dim, modd, PhasePoint};
use crate::state_model::BellTable;

const EPS: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn omega(d: usize, k: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * modd(k, d) as f64 / d as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    d: usize,
    sites: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn zero(d: usize, sites: usize) -> Result<Self> {
        check_dim(d)?;
        let size = (d as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
        if size > DENSE_LIMIT {
            return Err(Error::SizeGuard { size, limit: DENSE_LIMIT });
        }
        let mut amps = vec![c(0.0); size as usize];
        amps[0] = c(1.0);
        Ok(Self { d, sites, amps })
    }

    pub fn basis(d: usize, digits: &[usize]) -> Result<Self> {
        let mut s = Self::zero(d, digits.len())?;
        s.amps[0] = c(0.0);
        let idx = digits.iter().fold(0, |acc, &k| acc * d + k % d);
        s.amps[idx] = c(1.0);
        Ok(s)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn stride(&self, site: usize) -> usize {
        self.d.pow((self.sites - 1 - site) as u32)
    }

    fn digit(&self, idx: usize, site: usize) -> usize {
        (idx / self.stride(site)) % self.d
    }

    /// Applies a permutation of basis states with phases:
    /// `|i> -> phase(i) |f(i)>`.
    fn permute<F>(&mut self, f: F)
    where
        F: Fn(usize) -> (usize, Complex64),
    {
        let mut out = vec![c(0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if *a == c(0.0) {
                continue;
            }
            let (j, ph) = f(i);
            out[j] += a * ph;
        }
        self.amps = out;
    }

    /// `X^power` on `site`.
    pub fn x(&mut self, site: usize, power: i64) {
        let (d, st) = (self.d, self.stride(site));
        let p = modd(power, d);
        let digits: Vec<usize> = (0..self.amps.len()).map(|i| self.digit(i, site)).collect();
        self.permute(|i| {
            let k = digits[i];
            (i - k * st + ((k + p) % d) * st, c(1.0))
        });
    }

    /// `Z^power` on `site`.
    pub fn z(&mut self, site: usize, power: i64) {
        let d = self.d;
        for i in 0..self.amps.len() {
            let k = self.digit(i, site) as i64;
            self.amps[i] *= omega(d, power * k);
        }
    }

    /// `Z^z X^x` on `site`.
    pub fn weyl(&mut self, site: usize, x: usize, z: usize) {
        self.x(site, x as i64);
        self.z(site, z as i64);
    }

    /// `SUM^power`: `|j, k> -> |j, k + power j>` on (control, target).
    pub fn sum(&mut self, control: usize, target: usize, power: i64) {
        let d = self.d;
        let st = self.stride(target);
        let info: Vec<(usize, usize)> = (0..self.amps.len())
            .map(|i| (self.digit(i, control), self.digit(i, target)))
            .collect();
        self.permute(|i| {
            let (j, k) = info[i];
            let nk = modd(k as i64 + power * j as i64, d);
            (i - k * st + nk * st, c(1.0))
        });
    }

    /// Applies the single-site matrix `u` (row-major `d x d`).
    pub fn single(&mut self, site: usize, u: &[Complex64]) {
        let (d, st) = (self.d, self.stride(site));
        let mut out = vec![c(0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if *a == c(0.0) {
                continue;
            }
            let k = self.digit(i, site);
            let base = i - k * st;
            for r in 0..d {
                out[base + r * st] += u[r * d + k] * a;
            }
        }
        self.amps = out;
    }

    /// Keeps the component with `site` in `|value>` (unnormalized) and drops
    /// the site.
    pub fn project(&self, site: usize, value: usize) -> DenseState {
        let amps = (0..self.amps.len())
            .filter(|&i| self.digit(i, site) == value)
            .map(|i| self.amps[i])
            .collect();
        DenseState { d: self.d, sites: self.sites - 1, amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_diff(&self, other: &DenseState) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `F|j> = d^-1/2 sum_k w^{jk} |k>`.
pub fn fourier(d: usize) -> Vec<Complex64> {
    let s = 1.0 / (d as f64).sqrt();
    (0..d * d)
        .map(|i| omega(d, ((i / d) * (i % d)) as i64) * s)
        .collect()
}

pub fn adjoint(d: usize, u: &[Complex64]) -> Vec<Complex64> {
    (0..d * d).map(|i| u[(i % d) * d + i / d].conj()).collect()
}

pub fn conjugate(u: &[Complex64]) -> Vec<Complex64> {
    u.iter().map(|a| a.conj()).collect()
}

/// `Z^z X^x` as a dense matrix.
pub fn weyl_matrix(p: &PhasePoint) -> Vec<Complex64> {
    let d = p.d;
    let mut u = vec![c(0.0); d * d];
    for j in 0..d {
        let r = (j + p.x) % d;
        u[r * d + j] = omega(d, (p.z * r) as i64);
    }
    u
}

fn matmul(d: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![c(0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                out[i * d + j] += a[i * d + k] * b[k * d + j];
            }
        }
    }
    out
}

/// Exponent `t` with `W(a) W(b) = w^t W(b) W(a)`, read off the matrices.
pub fn dense_commutation_phase(a: &PhasePoint, b: &PhasePoint) -> Result<usize> {
    let d = a.d;
    let (wa, wb) = (weyl_matrix(a), weyl_matrix(b));
    let ab = matmul(d, &wa, &wb);
    let ba = matmul(d, &wb, &wa);
    (0..d)
        .find(|&t| {
            ab.iter()
                .zip(&ba)
                .all(|(x, y)| (x - omega(d, t as i64) * y).norm() < EPS)
        })
        .ok_or(Error::ImaginaryResidue(f64::NAN))
}

/// `(I (x) Z^z X^x)|Phi_00>` on two sites.
pub fn bell_state(d: usize, x: usize, z: usize) -> Result<DenseState> {
    let mut s = DenseState::zero(d, 2)?;
    s.amps[0] = c(0.0);
    let a = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        s.amps[j * d + j] = c(a);
    }
    s.weyl(1, x, z);
    Ok(s)
}

/// Bell-basis weights `|<Phi_xz|psi>|^2` of a two-site vector.
pub fn bell_weights(psi: &DenseState) -> Result<Vec<f64>> {
    let d = psi.d;
    let mut w = vec![0.0; d * d];
    for x in 0..d {
        for z in 0..d {
            w[x * d + z] = bell_state(d, x, z)?.inner(psi).norm_sqr();
        }
    }
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircuitKind {
    /// SUM from Alice's half onto every carrier, inverse SUM from Bob's.
    SumCircuit,
    /// Carriers prepared in the star code. Alice's half enters through an
    /// inverse SUM onto the first carrier, Bob's half leaves through a SUM.
    Star,
}

struct Layout {
    m: usize,
}

impl Layout {
    const A: usize = 0;
    const B: usize = 1;
    fn carrier(&self, i: usize) -> usize {
        1 + i
    }
}

fn encode(s: &mut DenseState, kind: CircuitKind, lay: &Layout) {
    let d = s.d;
    match kind {
        CircuitKind::SumCircuit => {
            for i in 1..=lay.m {
                s.sum(Layout::A, lay.carrier(i), 1);
            }
        }
        CircuitKind::Star => {
            let f = fourier(d);
            for i in 1..lay.m {
                s.single(lay.carrier(i), &f);
            }
            for i in 1..lay.m {
                s.sum(lay.carrier(i), lay.carrier(lay.m), -1);
            }
            s.sum(Layout::A, lay.carrier(1), -1);
        }
    }
}

fn decode(s: &mut DenseState, kind: CircuitKind, lay: &Layout) {
    let d = s.d;
    match kind {
        CircuitKind::SumCircuit => {
            for i in 1..=lay.m {
                s.sum(Layout::B, lay.carrier(i), -1);
            }
        }
        CircuitKind::Star => {
            s.sum(Layout::B, lay.carrier(1), 1);
            for i in 1..lay.m {
                s.sum(lay.carrier(i), lay.carrier(lay.m), 1);
            }
            let fd = adjoint(d, &fourier(d));
            for i in 1..lay.m {
                s.single(lay.carrier(i), &fd);
            }
        }
    }
}

/// One carrier round simulated on state vectors, averaging over every pair
/// error and every carrier error string with non-zero weight.
pub fn statevector_round(
    shared: &BellTable,
    channel: &BellTable,
    m: usize,
    kind: CircuitKind,
) -> Result<EnumerationResult> {
    let d = shared.d();
    if channel.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: channel.d() });
    }
    if m == 0 {
        return Err(Error::OutOfRange { name: "m", value: 0.0, range: ">= 1" });
    }
    let lay = Layout { m };
    let d2 = d * d;
    let carriers: Vec<Vec<usize>> = {
        let mut all = vec![vec![]];
        for _ in 0..m {
            all = all
                .into_iter()
                .flat_map(|v: Vec<usize>| {
                    (0..d2).filter(|&e| channel.as_slice()[e] > 0.0).map(move |e| {
                        let mut w = v.clone();
                        w.push(e);
                        w
                    })
                })
                .collect();
        }
        all
    };
    let mut acc = vec![0.0; d2];
    let mut strings = 0u64;
    for e0 in 0..d2 {
        let w0 = shared.as_slice()[e0];
        if w0 == 0.0 {
            continue;
        }
        let mut base = DenseState::zero(d, m + 2)?;
        base.amps[0] = c(0.0);
        let pair = bell_state(d, e0 / d, e0 % d)?;
        let block = d.pow(m as u32);
        for (i, a) in pair.amps.iter().enumerate() {
            base.amps[i * block] = *a;
        }
        encode(&mut base, kind, &lay);
        for errs in &carriers {
            let w = errs.iter().fold(w0, |w, &e| w * channel.as_slice()[e]);
            strings += 1;
            let mut s = base.clone();
            for (i, &e) in errs.iter().enumerate() {
                s.weyl(lay.carrier(i + 1), e / d, e % d);
            }
            decode(&mut s, kind, &lay);
            let mut ab = s;
            for i in (1..=m).rev() {
                ab = ab.project(lay.carrier(i), 0);
            }
            for (a, b) in acc.iter_mut().zip(bell_weights(&ab)?) {
                *a += w * b;
            }
        }
    }
    let success_probability: f64 = acc.iter().sum();
    if !(success_probability > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(EnumerationResult { table: BellTable::from_weights(d, acc)?, success_probability, strings })
}

/// Outcome of checking `SUM^m (I (x) Z^(x)m) SUM^-m = Z^e (x) Z^(x)m`, with
/// one SUM from a control onto each of `m` targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationCheck {
    pub m: usize,
    pub claimed_exponent: usize,
    pub holds: bool,
    /// Control exponent that actually makes the identity hold.
    pub actual_exponent: Option<usize>,
    /// First basis state where the claimed form fails.
    pub counterexample: Option<Vec<usize>>,
}

fn conjugated_z(d: usize, m: usize, digits: &[usize]) -> Result<DenseState> {
    let mut s = DenseState::basis(d, digits)?;
    for t in 1..=m {
        s.sum(0, t, -1);
    }
    for t in 1..=m {
        s.z(t, 1);
    }
    for t in 1..=m {
        s.sum(0, t, 1);
    }
    Ok(s)
}

fn claimed_z(d: usize, m: usize, e: usize, digits: &[usize]) -> Result<DenseState> {
    let mut s = DenseState::basis(d, digits)?;
    s.z(0, e as i64);
    for t in 1..=m {
        s.z(t, 1);
    }
    Ok(s)
}

fn all_digits(d: usize, n: usize) -> Vec<Vec<usize>> {
    (0..d.pow(n as u32))
        .map(|mut i| {
            let mut v = vec![0; n];
            for k in (0..n).rev() {
                v[k] = i % d;
                i /= d;
            }
            v
        })
        .collect()
}

pub fn check_sum_conjugation(d: usize, m: usize, claimed_exponent: usize) -> Result<ConjugationCheck> {
    check_dim(d)?;
    let basis = all_digits(d, m + 1);
    let holds_for = |e: usize| -> Result<Option<Vec<usize>>> {
        for digits in &basis {
            let lhs = conjugated_z(d, m, digits)?;
            let rhs = claimed_z(d, m, e, digits)?;
            if lhs.max_diff(&rhs) > EPS {
                return Ok(Some(digits.clone()));
            }
        }
        Ok(None)
    };
    let counterexample = holds_for(claimed_exponent % d)?;
    let mut actual_exponent = None;
    for e in 0..d {
        if holds_for(e)?.is_none() {
            actual_exponent = Some(e);
            break;
        }
    }
    Ok(ConjugationCheck {
        m,
        claimed_exponent: claimed_exponent % d,
        holds: counterexample.is_none(),
        actual_exponent,
        counterexample,
    })
}

/// `SUM (X (x) I) SUM^dag = X (x) X` on every basis state.
pub fn check_shift_copy(d: usize) -> Result<bool> {
    for digits in all_digits(d, 2) {
        let mut lhs = DenseState::basis(d, &digits)?;
        lhs.sum(0, 1, -1);
        lhs.x(0, 1);
        lhs.sum(0, 1, 1);
        let mut rhs = DenseState::basis(d, &digits)?;
        rhs.x(0, 1);
        rhs.x(1, 1);
        if lhs.max_diff(&rhs) > EPS {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub d: usize,
    pub shift_copy: bool,
    /// `SUM (I (x) Z) SUM^dag = Z^(d-1) (x) Z`.
    pub single: ConjugationCheck,
    /// The same control exponent `d - 1` claimed for `m` targets.
    pub multi: ConjugationCheck,
}

impl LemmaReport {
    pub fn passes(&self) -> bool {
        self.shift_copy && self.single.holds && self.multi.holds
    }
}

/// Checks the SUM propagation identities with exact phases on every basis
/// state, using the control exponent `d - 1` for any number of targets.
pub fn verify_propagation_lemmas(d: usize, m: usize) -> Result<LemmaReport> {
    Ok(LemmaReport {
        d,
        shift_copy: check_shift_copy(d)?,
        single: check_sum_conjugation(d, 1, d - 1)?,
        multi: check_sum_conjugation(d, m, d - 1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate::{enumerate_multi_round, enumerate_sum_circuit, CarrierCode};
    use crate::phase_space::commutation_phase;

    #[test]
    fn commutation_convention_matches_matrices() {
        for d in [2usize, 3, 5] {
            let pts = PhasePoint::all(d).unwrap();
            for a in &pts {
                for b in &pts {
                    assert_eq!(
                        dense_commutation_phase(a, b).unwrap(),
                        commutation_phase(a, b).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn bilateral_fourier_swaps_bell_indices() {
        let d = 3;
        let f = fourier(d);
        let fc = conjugate(&f);
        for x in 0..d {
            for z in 0..d {
                let mut s = bell_state(d, x, z).unwrap();
                s.single(0, &f);
                s.single(1, &fc);
                let w = bell_weights(&s).unwrap();
                let target = z * d + (d - x) % d;
                assert!((w[target] - 1.0).abs() < 1e-12, "({x},{z})");
            }
        }
    }

    #[test]
    fn sum_conjugation_exponent_is_minus_m() {
        for m in 1..=5 {
            let r = check_sum_conjugation(3, m, 2).unwrap();
            assert_eq!(r.actual_exponent, Some(modd(-(m as i64), 3)));
            assert_eq!(r.holds, m % 3 == 1);
        }
        assert!(check_shift_copy(3).unwrap());
        assert!(verify_propagation_lemmas(3, 1).unwrap().passes());
    }

    fn tables() -> (BellTable, BellTable) {
        let t = BellTable::from_weights(3, (1..=9).map(f64::from).collect()).unwrap();
        let ch = BellTable::from_weights(3, vec![5.0, 1.0, 0.5, 2.0, 0.1, 0.3, 0.7, 0.2, 0.9]).unwrap();
        (t, ch)
    }

    #[test]
    fn sum_circuit_agrees_with_frames() {
        let (t, ch) = tables();
        for m in 1..=2 {
            let a = statevector_round(&t, &ch, m, CircuitKind::SumCircuit).unwrap();
            let b = enumerate_sum_circuit(&t, &ch, m).unwrap();
            assert!(a.table.max_abs_diff(&b.table) < 1e-12, "m={m}");
            assert!((a.success_probability - b.success_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn star_circuit_agrees_with_generators() {
        let (t, ch) = tables();
        for m in 1..=2 {
            let a = statevector_round(&t, &ch, m, CircuitKind::Star).unwrap();
            let code = CarrierCode::star(3, m).unwrap();
            let b = enumerate_multi_round(&t, &ch, m, &code).unwrap();
            assert!(a.table.max_abs_diff(&b.table) < 1e-12, "m={m}");
            assert!((a.success_probability - b.success_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        assert!(matches!(DenseState::zero(3, 8), Err(Error::SizeGuard { .. })));
    }
}

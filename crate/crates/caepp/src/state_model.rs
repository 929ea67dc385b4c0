//! Bell-diagonal states and Pauli channels as `d x d` probability tables.
//!
//! Entry `(x, z)` is the weight of the Bell state `(I (x) Z^z X^x)|Phi_00>`,
//! equivalently the probability that a Pauli channel applies `Z^z X^x`. The
//! same table therefore describes a channel and its Choi state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{check_dim, mub_lines, MubLine, PhasePoint, SymplecticMap};

/// Inputs whose total is further than this from 1 are rejected.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelFile", into = "ChannelFile")]
pub struct BellTable {
    d: usize,
    p: Vec<f64>,
}

/// On-disk form: `{"d": 3, "p": [[...], [...], [...]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub d: usize,
    pub p: Vec<Vec<f64>>,
}

impl TryFrom<ChannelFile> for BellTable {
    type Error = Error;

    fn try_from(f: ChannelFile) -> Result<Self> {
        BellTable::new(f.d, &f.p)
    }
}

impl From<BellTable> for ChannelFile {
    fn from(t: BellTable) -> Self {
        ChannelFile { d: t.d, p: t.rows() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    /// Shift weights `u_x = sum_z p[x][z]`.
    pub u: Vec<f64>,
    /// Phase weights `v_z = sum_x p[x][z]`.
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MubWeights {
    pub lines: Vec<MubLine>,
    pub weights: Vec<f64>,
    /// Index of the heaviest line; ties go to the smallest index.
    pub argmax: usize,
}

impl MubWeights {
    pub fn max(&self) -> f64 {
        self.weights[self.argmax]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseSplit {
    Uniform,
    /// Relative phase weights applied to every error row.
    Weights([f64; 3]),
}

impl BellTable {
    /// Validates and, if the total is within [`NORM_TOL`] of 1, renormalizes.
    pub fn new(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_dim(d)?;
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::BadShape { d });
        }
        Self::from_flat(d, rows.concat())
    }

    pub fn from_flat(d: usize, p: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if p.len() != d * d {
            return Err(Error::BadShape { d });
        }
        for (i, &v) in p.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeEntry { x: i / d, z: i % d, value: v });
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::BadNormalization(total));
        }
        Ok(Self {
            d,
            p: p.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Normalizes computed non-negative weights. Rounding noise below
    /// `1e-12` of the total is clamped to zero.
    pub fn from_weights(d: usize, mut w: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if w.len() != d * d {
            return Err(Error::BadShape { d });
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroSuccess);
        }
        for (i, v) in w.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -1e-12 * total {
                    return Err(Error::NegativeEntry { x: i / d, z: i % d, value: *v });
                }
                *v = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        Ok(Self {
            d,
            p: w.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Fidelity `p`, the rest spread evenly over the `d^2 - 1` errors.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        check_dim(d)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange { name: "p", value: p, range: "[0, 1]" });
        }
        let mut w = vec![(1.0 - p) / (d * d - 1) as f64; d * d];
        w[0] = p;
        Self::from_weights(d, w)
    }

    /// Qutrit channel with `p00 = p0`, no pure phase errors, and the
    /// remaining weight split `a : 1 - a` between shift rows 1 and 2.
    pub fn from_marginal_params(p0: f64, a: f64, split: PhaseSplit) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::OutOfRange { name: "p0", value: p0, range: "[0, 1]" });
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::OutOfRange { name: "asym", value: a, range: "[0, 1]" });
        }
        let phases = match split {
            PhaseSplit::Uniform => [1.0 / 3.0; 3],
            PhaseSplit::Weights(w) => {
                let s: f64 = w.iter().sum();
                if w.iter().any(|v| !(*v >= 0.0)) || !(s > 0.0) {
                    return Err(Error::OutOfRange {
                        name: "phase split",
                        value: s,
                        range: "non-negative with positive sum",
                    });
                }
                w.map(|v| v / s)
            }
        };
        let rest = 1.0 - p0;
        let rows = [a * rest, (1.0 - a) * rest];
        let mut w = vec![0.0; 9];
        w[0] = p0;
        for (r, total) in rows.iter().enumerate() {
            for z in 0..3 {
                w[(r + 1) * 3 + z] = total * phases[z];
            }
        }
        Self::from_weights(3, w)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.p[x * self.d + z]
    }

    pub fn at(&self, p: &PhasePoint) -> f64 {
        self.get(p.x, p.z)
    }

    pub fn fidelity(&self) -> f64 {
        self.p[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn marginals(&self) -> Marginals {
        let d = self.d;
        let mut u = vec![0.0; d];
        let mut v = vec![0.0; d];
        for x in 0..d {
            for z in 0..d {
                u[x] += self.get(x, z);
                v[z] += self.get(x, z);
            }
        }
        Marginals { u, v }
    }

    pub fn mub_weights(&self) -> Result<MubWeights> {
        let lines = mub_lines(self.d)?;
        let weights: Vec<f64> = lines
            .iter()
            .map(|l| l.points.iter().map(|p| self.at(p)).sum())
            .collect();
        let mut argmax = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > weights[argmax] {
                argmax = i;
            }
        }
        Ok(MubWeights { lines, weights, argmax })
    }

    /// Moves the weight at `p` to `f(p)`; `f` must be a bijection.
    pub fn relabel<F>(&self, f: F) -> Result<BellTable>
    where
        F: Fn(&PhasePoint) -> Result<PhasePoint>,
    {
        let d = self.d;
        let mut out = vec![0.0; d * d];
        let mut hit = vec![false; d * d];
        for p in PhasePoint::all(d)? {
            let q = f(&p)?;
            if q.d != d {
                return Err(Error::DimensionMismatch { expected: d, got: q.d });
            }
            let j = q.x * d + q.z;
            if hit[j] {
                return Err(Error::NotBijective);
            }
            hit[j] = true;
            out[j] = self.at(&p);
        }
        Ok(BellTable { d, p: out })
    }

    pub fn relabel_symplectic(&self, map: &SymplecticMap) -> Result<BellTable> {
        self.relabel(|p| map.apply(p))
    }

    /// Shifts every index by `-(dx, dz)`, so `(dx, dz)` lands on `(0, 0)`.
    pub fn translate_to_origin(&self, dx: usize, dz: usize) -> Result<BellTable> {
        let d = self.d;
        self.relabel(|p| PhasePoint::new(p.x as i64 - dx as i64, p.z as i64 - dz as i64, d))
    }

    pub fn is_one_distillable(&self) -> bool {
        self.fidelity() > 1.0 / self.d as f64
    }

    pub fn max_abs_diff(&self, other: &BellTable) -> f64 {
        if self.d != other.d {
            return f64::INFINITY;
        }
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str::<ChannelFile>(s)
            .map_err(|e| Error::Parse(e.to_string()))?
            .try_into()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&ChannelFile::from(self.clone())).expect("plain data")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn depolarizing_qutrit() {
        let t = BellTable::depolarizing(3, 0.5).unwrap();
        assert_eq!(t.fidelity(), 0.5);
        assert_eq!(t.get(2, 1), 0.0625);
        assert_eq!(t.marginals().u, vec![0.625, 0.1875, 0.1875]);
        let q = BellTable::depolarizing(2, 0.4).unwrap();
        assert!((q.get(1, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn marginal_params() {
        let t = BellTable::from_marginal_params(0.34, 0.48, PhaseSplit::Uniform).unwrap();
        let u = t.marginals().u;
        for (a, b) in u.iter().zip([0.34, 0.3168, 0.3432]) {
            assert!((a - b).abs() < 1e-12);
        }
        let u = BellTable::from_marginal_params(0.51, 0.01, PhaseSplit::Uniform)
            .unwrap()
            .marginals()
            .u;
        for (a, b) in u.iter().zip([0.51, 0.0049, 0.4851]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_tables() {
        let bad = vec![vec![0.5, 0.5], vec![0.1, 0.0]];
        assert!(matches!(BellTable::new(2, &bad), Err(Error::BadNormalization(_))));
        let neg = vec![vec![1.1, -0.1], vec![0.0, 0.0]];
        assert!(matches!(BellTable::new(2, &neg), Err(Error::NegativeEntry { .. })));
        assert!(BellTable::new(3, &[vec![1.0]]).is_err());
        assert!(BellTable::depolarizing(3, 1.5).is_err());
    }

    #[test]
    fn renormalizes_small_drift() {
        let t = BellTable::new(2, &[vec![0.5 + 5e-10, 0.5], vec![0.0, 0.0]]).unwrap();
        assert!((t.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sum_rule_for_depolarizing() {
        let t = BellTable::depolarizing(3, 0.4).unwrap();
        let w = t.mub_weights().unwrap();
        let total: f64 = w.weights.iter().sum();
        assert!((total - (3.0 * t.fidelity() + 1.0)).abs() < 1e-12);
        assert_eq!(w.argmax, 0);
    }

    #[test]
    fn relabel_rejects_collisions() {
        let t = BellTable::depolarizing(3, 0.4).unwrap();
        let r = t.relabel(|p| PhasePoint::new(p.x as i64, 0, 3));
        assert_eq!(r, Err(Error::NotBijective));
    }

    #[test]
    fn json_round_trip() {
        let t = BellTable::from_marginal_params(0.34, 0.48, PhaseSplit::Uniform).unwrap();
        let back = BellTable::from_json_str(&t.to_json_string()).unwrap();
        assert!(t.max_abs_diff(&back) < 1e-15);
        assert!(BellTable::from_json_str(r#"{"d":2,"p":[[1.0,0.0],[0.0,0.5]]}"#).is_err());
    }

    pub(crate) fn table(d: usize) -> impl Strategy<Value = BellTable> {
        prop::collection::vec(0.0f64..1.0, d * d).prop_filter_map("zero", move |w| {
            BellTable::from_weights(d, w).ok()
        })
    }

    proptest! {
        #[test]
        fn sum_rule_and_pigeonhole(t in prop::sample::select(vec![2usize, 3, 5, 7]).prop_flat_map(table)) {
            let d = t.d();
            let w = t.mub_weights().unwrap();
            let total: f64 = w.weights.iter().sum();
            prop_assert!((total - (d as f64 * t.fidelity() + 1.0)).abs() < 1e-12);
            if t.is_one_distillable() {
                prop_assert!(w.max() > 2.0 / (d as f64 + 1.0));
            }
        }

        #[test]
        fn symplectic_relabel_keeps_mass(t in table(3), a in 0i64..3, c in 0i64..3) {
            let m = SymplecticMap::new(3, [[1, a], [c, 1 + a * c]]).unwrap();
            let r = t.relabel_symplectic(&m).unwrap();
            prop_assert!((r.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert_eq!(r.fidelity(), t.fidelity());
            let back = r.relabel_symplectic(&m.inverse()).unwrap();
            prop_assert!(back.max_abs_diff(&t) == 0.0);
        }
    }
}

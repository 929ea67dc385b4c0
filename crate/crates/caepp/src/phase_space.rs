//! Discrete phase space `Z_d^2` of a single qudit.
//!
//! The point `(x, z)` labels the Weyl operator `Z^z X^x` with
//! `X|j> = |j+1>` and `Z|j> = w^j |j>`, `w = exp(2 pi i / d)`. With these
//! operators `Z X = w X Z`, and two Weyl operators satisfy
//! `W(a) W(b) = w^t W(b) W(a)` with `t = x_b z_a - x_a z_b mod d`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    Ok(())
}

pub fn is_prime(d: usize) -> bool {
    d >= 2 && (2..).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

pub fn check_prime(d: usize) -> Result<()> {
    check_dim(d)?;
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    Ok(())
}

pub(crate) fn modd(v: i64, d: usize) -> usize {
    v.rem_euclid(d as i64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: usize,
    pub z: usize,
    pub d: usize,
}

impl PhasePoint {
    /// Point with coordinates reduced mod `d`.
    pub fn new(x: i64, z: i64, d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { x: modd(x, d), z: modd(z, d), d })
    }

    pub fn origin(d: usize) -> Result<Self> {
        Self::new(0, 0, d)
    }

    pub fn is_origin(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn add(&self, other: &PhasePoint) -> Result<PhasePoint> {
        same_dim(self.d, other.d)?;
        Ok(PhasePoint {
            x: (self.x + other.x) % self.d,
            z: (self.z + other.z) % self.d,
            d: self.d,
        })
    }

    pub fn neg(&self) -> PhasePoint {
        PhasePoint {
            x: (self.d - self.x) % self.d,
            z: (self.d - self.z) % self.d,
            d: self.d,
        }
    }

    pub fn scale(&self, k: i64) -> PhasePoint {
        let d = self.d;
        PhasePoint {
            x: modd(k * self.x as i64, d),
            z: modd(k * self.z as i64, d),
            d,
        }
    }

    /// All `d^2` points in row-major `(x, z)` order.
    pub fn all(d: usize) -> Result<Vec<PhasePoint>> {
        check_dim(d)?;
        Ok((0..d)
            .flat_map(|x| (0..d).map(move |z| PhasePoint { x, z, d }))
            .collect())
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.z)
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// Exponent `t` in `W(a) W(b) = w^t W(b) W(a)`.
pub fn commutation_phase(a: &PhasePoint, b: &PhasePoint) -> Result<usize> {
    same_dim(a.d, b.d)?;
    let d = a.d as i64;
    let t = b.x as i64 * a.z as i64 - a.x as i64 * b.z as i64;
    Ok(modd(t, d as usize))
}

/// Tensor product of single-site Weyl operators, global phase dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeylString {
    d: usize,
    sites: Vec<PhasePoint>,
}

impl WeylString {
    pub fn identity(d: usize, n: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            d,
            sites: vec![PhasePoint { x: 0, z: 0, d }; n],
        })
    }

    /// Builds a string from signed `(x, z)` exponents, reduced mod `d`.
    pub fn from_exponents(d: usize, exps: &[(i64, i64)]) -> Result<Self> {
        check_dim(d)?;
        let sites = exps
            .iter()
            .map(|&(x, z)| PhasePoint::new(x, z, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, sites })
    }

    pub fn from_points(d: usize, sites: Vec<PhasePoint>) -> Result<Self> {
        check_dim(d)?;
        for p in &sites {
            same_dim(d, p.d)?;
        }
        Ok(Self { d, sites })
    }

    /// Multiplies site `site` by `X^x` and `Z^z` (exponents add).
    pub fn with(mut self, site: usize, x: i64, z: i64) -> Self {
        let d = self.d;
        let p = &mut self.sites[site];
        p.x = modd(p.x as i64 + x, d);
        p.z = modd(p.z as i64 + z, d);
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, i: usize) -> PhasePoint {
        self.sites[i]
    }

    pub fn sites(&self) -> &[PhasePoint] {
        &self.sites
    }

    pub fn is_identity(&self) -> bool {
        self.sites.iter().all(PhasePoint::is_origin)
    }

    fn check_compatible(&self, other: &WeylString) -> Result<()> {
        same_dim(self.d, other.d)?;
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Product of the two strings up to a global phase.
    pub fn compose(&self, other: &WeylString) -> Result<WeylString> {
        self.check_compatible(other)?;
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeylString { d: self.d, sites })
    }

    /// Sum of the single-site commutation phases.
    pub fn commutation_phase(&self, other: &WeylString) -> Result<usize> {
        self.check_compatible(other)?;
        let mut t = 0;
        for (a, b) in self.sites.iter().zip(&other.sites) {
            t += commutation_phase(a, b)?;
        }
        Ok(t % self.d)
    }
}

impl fmt::Display for WeylString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (i, p) in self.sites.iter().enumerate() {
            for (label, e) in [("X", p.x), ("Z", p.z)] {
                if e == 0 {
                    continue;
                }
                if !first {
                    write!(f, " ")?;
                }
                first = false;
                write!(f, "{label}{i}")?;
                if e != 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Exponents `k_i` with `E S_i = w^{k_i} S_i E`.
pub fn syndrome_exponents(error: &WeylString, stabilizers: &[WeylString]) -> Result<Vec<usize>> {
    stabilizers
        .iter()
        .map(|s| error.commutation_phase(s))
        .collect()
}

/// `[[a, b], [c, e]]` acting on column vectors `(x, z)` mod `d`, with unit
/// determinant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymplecticMap {
    d: usize,
    m: [[usize; 2]; 2],
}

impl SymplecticMap {
    pub fn new(d: usize, m: [[i64; 2]; 2]) -> Result<Self> {
        check_dim(d)?;
        let m = [
            [modd(m[0][0], d), modd(m[0][1], d)],
            [modd(m[1][0], d), modd(m[1][1], d)],
        ];
        let det = modd(
            (m[0][0] * m[1][1]) as i64 - (m[0][1] * m[1][0]) as i64,
            d,
        );
        if det != 1 % d {
            return Err(Error::BadDeterminant(det));
        }
        Ok(Self { d, m })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(d, [[1, 0], [0, 1]])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> [[usize; 2]; 2] {
        self.m
    }

    pub fn apply(&self, p: &PhasePoint) -> Result<PhasePoint> {
        same_dim(self.d, p.d)?;
        let d = self.d;
        Ok(PhasePoint {
            x: (self.m[0][0] * p.x + self.m[0][1] * p.z) % d,
            z: (self.m[1][0] * p.x + self.m[1][1] * p.z) % d,
            d,
        })
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &SymplecticMap) -> Result<SymplecticMap> {
        same_dim(self.d, other.d)?;
        let (a, b) = (self.m, other.m);
        let mut out = [[0i64; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (a[i][0] * b[0][j] + a[i][1] * b[1][j]) as i64;
            }
        }
        Self::new(self.d, out)
    }

    pub fn inverse(&self) -> SymplecticMap {
        let d = self.d;
        let m = self.m;
        let neg = |v: usize| (d - v) % d;
        SymplecticMap {
            d,
            m: [[m[1][1], neg(m[0][1])], [neg(m[1][0]), m[0][0]]],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.m == [[1, 0], [0, 1]]
    }
}

impl fmt::Display for SymplecticMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.m;
        write!(f, "[[{}, {}], [{}, {}]]", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

pub fn symplectic_apply(map: &SymplecticMap, p: &PhasePoint) -> Result<PhasePoint> {
    map.apply(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineKind {
    /// `{(k, a k)}`
    Slope(usize),
    /// `{(0, k)}`
    Vertical,
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineKind::Slope(a) => write!(f, "slope {a}"),
            LineKind::Vertical => write!(f, "vertical"),
        }
    }
}

/// Line through the origin; `points[k]` is the `k`-th multiple of the
/// generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MubLine {
    pub d: usize,
    pub kind: LineKind,
    pub points: Vec<PhasePoint>,
}

impl MubLine {
    pub fn new(d: usize, kind: LineKind) -> Result<Self> {
        check_prime(d)?;
        let gen = match kind {
            LineKind::Slope(a) => PhasePoint::new(1, a as i64, d)?,
            LineKind::Vertical => PhasePoint::new(0, 1, d)?,
        };
        let points = (0..d as i64).map(|k| gen.scale(k)).collect();
        Ok(Self { d, kind, points })
    }

    pub fn contains(&self, p: &PhasePoint) -> bool {
        self.points.contains(p)
    }
}

/// The `d + 1` lines through the origin: slope 0, vertical, then slopes
/// `1..d`.
pub fn mub_lines(d: usize) -> Result<Vec<MubLine>> {
    check_prime(d)?;
    let mut kinds = vec![LineKind::Slope(0), LineKind::Vertical];
    kinds.extend((1..d).map(LineKind::Slope));
    kinds.into_iter().map(|k| MubLine::new(d, k)).collect()
}

/// Symplectic map taking `line` onto the slope-0 line `{(k, 0)}`.
pub fn rotation_to_primary(line: &MubLine) -> Result<SymplecticMap> {
    let d = line.d;
    match line.kind {
        LineKind::Slope(a) => SymplecticMap::new(d, [[1, 0], [-(a as i64), 1]]),
        LineKind::Vertical => SymplecticMap::new(d, [[0, 1], [-1, 0]]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: i64, z: i64) -> PhasePoint {
        PhasePoint::new(x, z, 3).unwrap()
    }

    // Values checked against explicit 3x3 matrices in the dense oracle.
    #[test]
    fn single_site_phases() {
        assert_eq!(commutation_phase(&pt(1, 0), &pt(0, 1)).unwrap(), 2);
        assert_eq!(commutation_phase(&pt(0, 1), &pt(1, 0)).unwrap(), 1);
        assert_eq!(commutation_phase(&pt(2, 0), &pt(0, 1)).unwrap(), 1);
        assert_eq!(commutation_phase(&pt(1, 1), &pt(1, 1)).unwrap(), 0);
    }

    #[test]
    fn two_carrier_relations() {
        let s1 = WeylString::from_exponents(3, &[(1, 0), (2, 0)]).unwrap();
        let s2 = WeylString::from_exponents(3, &[(0, 1), (0, 1)]).unwrap();
        let z1 = WeylString::from_exponents(3, &[(0, 1), (0, 0)]).unwrap();
        let z2 = WeylString::from_exponents(3, &[(0, 0), (0, 1)]).unwrap();
        let ks = syndrome_exponents(&z1, &[s1.clone(), s2.clone()]).unwrap();
        assert_eq!(ks, vec![1, 0]);
        let ks = syndrome_exponents(&z2, &[s1, s2.clone()]).unwrap();
        assert_eq!(ks, vec![2, 0]);
        let x1 = WeylString::from_exponents(3, &[(1, 0), (0, 0)]).unwrap();
        assert_eq!(x1.commutation_phase(&s2).unwrap(), 2);
    }

    #[test]
    fn line_order_for_qutrits() {
        let lines = mub_lines(3).unwrap();
        let pts: Vec<Vec<(usize, usize)>> = lines
            .iter()
            .map(|l| l.points.iter().map(|p| (p.x, p.z)).collect())
            .collect();
        assert_eq!(
            pts,
            vec![
                vec![(0, 0), (1, 0), (2, 0)],
                vec![(0, 0), (0, 1), (0, 2)],
                vec![(0, 0), (1, 1), (2, 2)],
                vec![(0, 0), (1, 2), (2, 1)],
            ]
        );
    }

    #[test]
    fn rotations_for_qutrits() {
        let lines = mub_lines(3).unwrap();
        assert!(rotation_to_primary(&lines[0]).unwrap().is_identity());
        assert_eq!(rotation_to_primary(&lines[1]).unwrap().matrix(), [[0, 1], [2, 0]]);
        let r = rotation_to_primary(&lines[2]).unwrap();
        assert_eq!(r.apply(&pt(1, 1)).unwrap(), pt(1, 0));
        assert_eq!(rotation_to_primary(&lines[3]).unwrap().matrix(), [[1, 0], [1, 1]]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SymplecticMap::new(3, [[1, 1], [1, 1]]).is_err());
        assert!(matches!(mub_lines(4), Err(Error::NotPrime(4))));
        assert!(PhasePoint::new(0, 0, 1).is_err());
        let a = PhasePoint::new(1, 0, 3).unwrap();
        let b = PhasePoint::new(1, 0, 5).unwrap();
        assert!(commutation_phase(&a, &b).is_err());
    }

    #[test]
    fn display() {
        let s = WeylString::from_exponents(3, &[(1, 0), (0, 2)]).unwrap();
        assert_eq!(s.to_string(), "X0 Z1^2");
        let m = SymplecticMap::new(3, [[0, 1], [-1, 0]]).unwrap();
        assert_eq!(m.to_string(), "[[0, 1], [2, 0]]");
    }

    fn prime() -> impl Strategy<Value = usize> {
        prop::sample::select(vec![2usize, 3, 5, 7, 11])
    }

    fn map_and_points() -> impl Strategy<Value = (SymplecticMap, [PhasePoint; 3])> {
        prime().prop_flat_map(|d| {
            let di = d as i64;
            (
                (0..di, 0..di, 0..di, 0..di),
                prop::array::uniform6(0..di),
            )
                .prop_filter_map("singular", move |((a, b, c, e), v)| {
                    let m = SymplecticMap::new(d, [[a, b], [c, e]]).ok()?;
                    let p = |i: usize| PhasePoint::new(v[i], v[(i + 1) % 6], d).unwrap();
                    Some((m, [p(0), p(2), p(4)]))
                })
        })
    }

    proptest! {
        #[test]
        fn form_is_antisymmetric_and_bilinear((_, [a, b, c]) in map_and_points(), k in -5i64..5) {
            let d = a.d;
            let ab = commutation_phase(&a, &b).unwrap();
            let ba = commutation_phase(&b, &a).unwrap();
            prop_assert_eq!((ab + ba) % d, 0);
            prop_assert_eq!(commutation_phase(&a, &a).unwrap(), 0);
            let sum = commutation_phase(&a.add(&c).unwrap(), &b).unwrap();
            prop_assert_eq!(sum, (ab + commutation_phase(&c, &b).unwrap()) % d);
            let scaled = commutation_phase(&a.scale(k), &b).unwrap();
            prop_assert_eq!(scaled, modd(k * ab as i64, d));
        }

        #[test]
        fn maps_preserve_the_form((m, [a, b, _]) in map_and_points()) {
            let before = commutation_phase(&a, &b).unwrap();
            let after = commutation_phase(&m.apply(&a).unwrap(), &m.apply(&b).unwrap()).unwrap();
            prop_assert_eq!(before, after);
            let back = m.inverse().apply(&m.apply(&a).unwrap()).unwrap();
            prop_assert_eq!(back, a);
        }

        #[test]
        fn lines_partition_the_plane(d in prime()) {
            let lines = mub_lines(d).unwrap();
            prop_assert_eq!(lines.len(), d + 1);
            for p in PhasePoint::all(d).unwrap() {
                let n = lines.iter().filter(|l| l.contains(&p)).count();
                prop_assert_eq!(n, if p.is_origin() { d + 1 } else { 1 });
            }
            for l in &lines {
                let r = rotation_to_primary(l).unwrap();
                for (k, p) in l.points.iter().enumerate() {
                    let q = r.apply(p).unwrap();
                    prop_assert_eq!(q.z, 0);
                    prop_assert!(k == 0 || q.x != 0);
                }
            }
        }
    }
}

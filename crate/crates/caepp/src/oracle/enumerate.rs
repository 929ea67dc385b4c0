use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::PauliFrame;
use super::ENUMERATION_LIMIT;
use crate::error::{Error, Result};
use crate::phase_space::{check_dim, commutation_phase, PhasePoint, WeylString};
use crate::state_model::BellTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub table: BellTable,
    pub success_probability: f64,
    /// Error strings with non-zero weight that were visited.
    pub strings: u64,
}

fn guard(d: usize, sites: usize) -> Result<()> {
    let size = (d as u128 * d as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::SizeGuard { size, limit: ENUMERATION_LIMIT });
    }
    Ok(())
}

fn same_d(a: &BellTable, b: &BellTable) -> Result<usize> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch { expected: a.d(), got: b.d() });
    }
    Ok(a.d())
}

fn finish(d: usize, acc: Vec<f64>, strings: u64) -> Result<EnumerationResult> {
    let success_probability: f64 = acc.iter().sum();
    if !(success_probability > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    Ok(EnumerationResult { table: BellTable::from_weights(d, acc)?, success_probability, strings })
}

fn add_into(mut a: (Vec<f64>, u64), b: (Vec<f64>, u64)) -> (Vec<f64>, u64) {
    for (x, y) in a.0.iter_mut().zip(b.0) {
        *x += y;
    }
    (a.0, a.1 + b.1)
}

/// Runs `visit(pair_error, carrier_errors, weight)` over all strings with
/// non-zero weight, split over the pair error so chunks run in parallel and
/// sums are combined in a fixed order.
fn for_each_string<F>(shared: &BellTable, channel: &BellTable, m: usize, visit: F) -> Result<(Vec<f64>, u64)>
where
    F: Fn(usize, &[usize], &mut [f64]) -> bool + Sync,
{
    let d = same_d(shared, channel)?;
    guard(d, m + 1)?;
    let d2 = d * d;
    let parts: Vec<(Vec<f64>, u64)> = (0..d2)
        .into_par_iter()
        .map(|e0| {
            let mut acc = vec![0.0; d2];
            let mut count = 0u64;
            let w0 = shared.as_slice()[e0];
            if w0 == 0.0 {
                return (acc, 0);
            }
            let mut errs = vec![0usize; m];
            let mut buf = vec![0.0; d2];
            loop {
                let w = errs.iter().fold(w0, |w, &e| w * channel.as_slice()[e]);
                if w > 0.0 {
                    count += 1;
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    if visit(e0, &errs, &mut buf) {
                        for (a, b) in acc.iter_mut().zip(&buf) {
                            *a += w * b;
                        }
                    }
                }
                let mut i = 0;
                loop {
                    if i == m {
                        return (acc, count);
                    }
                    errs[i] += 1;
                    if errs[i] < d2 {
                        break;
                    }
                    errs[i] = 0;
                    i += 1;
                }
            }
        })
        .collect();
    Ok(parts.into_iter().fold((vec![0.0; d2], 0), add_into))
}

/// SUM from Alice's half onto each of `m` carriers, carrier noise, inverse
/// SUM from Bob's half, keep when every carrier reads 0.
pub fn enumerate_sum_circuit(shared: &BellTable, channel: &BellTable, m: usize) -> Result<EnumerationResult> {
    let d = same_d(shared, channel)?;
    let (a, b) = (0, 1);
    let (acc, strings) = for_each_string(shared, channel, m, |e0, errs, out| {
        let mut f = PauliFrame::new(d, m + 2);
        f.insert(b, e0 / d, e0 % d);
        for i in 0..m {
            f.sum(a, 2 + i, 1);
        }
        for (i, &e) in errs.iter().enumerate() {
            f.insert(2 + i, e / d, e % d);
        }
        for i in 0..m {
            f.sum(b, 2 + i, -1);
        }
        if (0..m).any(|i| f.get(2 + i).0 != 0) {
            return false;
        }
        let (s, t) = f.bell_index(a, b);
        out[s * d + t] = 1.0;
        true
    })?;
    finish(d, acc, strings)
}

pub fn enumerate_single_round(shared: &BellTable, channel: &BellTable) -> Result<EnumerationResult> {
    enumerate_sum_circuit(shared, channel, 1)
}

/// Stabilizer description of a carrier check. Site 0 carries the pair error,
/// sites `1..=m` the carriers. A string is accepted when it commutes with
/// every generator; the pair is then relabeled by its phases against the two
/// logical operators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarrierCode {
    pub d: usize,
    pub m: usize,
    pub generators: Vec<WeylString>,
    pub logical_shift: WeylString,
    pub logical_phase: WeylString,
}

impl CarrierCode {
    pub fn new(
        generators: Vec<WeylString>,
        logical_shift: WeylString,
        logical_phase: WeylString,
    ) -> Result<Self> {
        let d = logical_shift.d();
        let n = logical_shift.len();
        if n < 2 {
            return Err(Error::OutOfRange { name: "sites", value: n as f64, range: ">= 2" });
        }
        for g in generators.iter().chain([&logical_phase]) {
            if g.d() != d {
                return Err(Error::DimensionMismatch { expected: d, got: g.d() });
            }
            if g.len() != n {
                return Err(Error::LengthMismatch { left: n, right: g.len() });
            }
        }
        Ok(Self { d, m: n - 1, generators, logical_shift, logical_phase })
    }

    /// Arbitrary generators with the star labels `(x_0, z_0 - z_1)`.
    pub fn with_star_labels(generators: Vec<WeylString>) -> Result<Self> {
        let first = generators.first().ok_or(Error::OutOfRange {
            name: "generators",
            value: 0.0,
            range: "non-empty",
        })?;
        let (d, n) = (first.d(), first.len());
        let shift = WeylString::identity(d, n)?.with(0, 0, -1);
        let phase = WeylString::identity(d, n)?.with(0, 1, 0).with(1, -1, 0);
        Self::new(generators, shift, phase)
    }

    /// `{X_i X_m^-1 : 1 <= i < m} + {Z_0 Z_1 ... Z_m}`.
    pub fn star(d: usize, m: usize) -> Result<Self> {
        check_dim(d)?;
        if m == 0 {
            return Err(Error::OutOfRange { name: "m", value: 0.0, range: ">= 1" });
        }
        let id = WeylString::identity(d, m + 1)?;
        let mut gens: Vec<WeylString> =
            (1..m).map(|i| id.clone().with(i, 1, 0).with(m, -1, 0)).collect();
        gens.push((0..=m).fold(id, |s, i| s.with(i, 0, 1)));
        Self::with_star_labels(gens)
    }

    /// Carriers copy the pair shift: `{Z_0^-1 Z_i}`, phases kick back onto
    /// the pair so the phase label is `z_0 + sum_i z_i`.
    pub fn repetition(d: usize, m: usize) -> Result<Self> {
        check_dim(d)?;
        let id = WeylString::identity(d, m + 1)?;
        let gens = (1..=m).map(|i| id.clone().with(0, 0, -1).with(i, 0, 1)).collect();
        let shift = id.clone().with(0, 0, -1);
        let phase = (0..=m).fold(id, |s, i| s.with(i, 1, 0));
        Self::new(gens, shift, phase)
    }
}

/// Precomputed phases of every single-site error against every operator.
struct PhaseTable {
    // [site][error][operator]
    phases: Vec<Vec<Vec<usize>>>,
}

impl PhaseTable {
    fn new(d: usize, ops: &[&WeylString]) -> Result<Self> {
        let n = ops[0].len();
        let points = PhasePoint::all(d)?;
        let mut phases = vec![vec![vec![0; ops.len()]; d * d]; n];
        for (site, row) in phases.iter_mut().enumerate() {
            for (e, p) in points.iter().enumerate() {
                for (k, op) in ops.iter().enumerate() {
                    row[e][k] = commutation_phase(p, &op.site(site))?;
                }
            }
        }
        Ok(Self { phases })
    }
}

/// Exhaustive weighted enumeration of a stabilizer carrier check.
pub fn enumerate_multi_round(
    shared: &BellTable,
    channel: &BellTable,
    m: usize,
    code: &CarrierCode,
) -> Result<EnumerationResult> {
    let d = same_d(shared, channel)?;
    if code.d != d {
        return Err(Error::DimensionMismatch { expected: d, got: code.d });
    }
    if code.m != m {
        return Err(Error::LengthMismatch { left: m + 1, right: code.m + 1 });
    }
    let mut ops: Vec<&WeylString> = code.generators.iter().collect();
    ops.push(&code.logical_shift);
    ops.push(&code.logical_phase);
    let table = PhaseTable::new(d, &ops)?;
    let ng = code.generators.len();
    let (acc, strings) = for_each_string(shared, channel, m, |e0, errs, out| {
        let mut k = table.phases[0][e0].clone();
        for (i, &e) in errs.iter().enumerate() {
            for (a, b) in k.iter_mut().zip(&table.phases[i + 1][e]) {
                *a = (*a + b) % d;
            }
        }
        if k[..ng].iter().any(|&v| v != 0) {
            return false;
        }
        out[k[ng] * d + k[ng + 1]] = 1.0;
        true
    })?;
    finish(d, acc, strings)
}

/// Monte Carlo estimate of a carrier check, for smoke tests only.
pub fn sample_round<R: rand::Rng>(
    shared: &BellTable,
    channel: &BellTable,
    code: &CarrierCode,
    shots: u64,
    rng: &mut R,
) -> Result<EnumerationResult> {
    let d = same_d(shared, channel)?;
    let draw = |t: &BellTable, rng: &mut R| {
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in t.as_slice().iter().enumerate() {
            acc += p;
            if r < acc {
                return i;
            }
        }
        d * d - 1
    };
    let points = PhasePoint::all(d)?;
    let mut counts = vec![0.0; d * d];
    let mut kept = 0u64;
    for _ in 0..shots {
        let mut sites = vec![points[draw(shared, rng)]];
        sites.extend((0..code.m).map(|_| points[draw(channel, rng)]));
        let e = WeylString::from_points(d, sites)?;
        let syn = crate::phase_space::syndrome_exponents(&e, &code.generators)?;
        if syn.iter().any(|&v| v != 0) {
            continue;
        }
        let s = e.commutation_phase(&code.logical_shift)?;
        let t = e.commutation_phase(&code.logical_phase)?;
        counts[s * d + t] += 1.0;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::ZeroSuccess);
    }
    Ok(EnumerationResult {
        table: BellTable::from_weights(d, counts)?,
        success_probability: kept as f64 / shots as f64,
        strings: shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single_carrier::round_update;
    use proptest::prelude::*;

    #[test]
    fn worked_point_by_enumeration() {
        let q = BellTable::depolarizing(3, 0.5).unwrap();
        let code = CarrierCode::star(3, 2).unwrap();
        let r = enumerate_multi_round(&q, &q, 2, &code).unwrap();
        assert!((r.success_probability - 0.20947265625).abs() < 1e-15);
        assert!((r.table.fidelity() - 0.6223776223776224).abs() < 1e-15);
        assert_eq!(r.strings, 729);
    }

    #[test]
    fn star_generators_for_two_carriers() {
        let code = CarrierCode::star(3, 2).unwrap();
        let names: Vec<String> = code.generators.iter().map(|g| g.to_string()).collect();
        assert_eq!(names, vec!["X1 X2^2", "Z0 Z1 Z2"]);
    }

    #[test]
    fn repetition_code_matches_circuit() {
        let t = BellTable::from_weights(3, (1..=9).map(f64::from).collect()).unwrap();
        let ch = BellTable::from_weights(3, vec![5.0, 1.0, 0.5, 2.0, 0.1, 0.3, 0.7, 0.2, 0.9]).unwrap();
        for m in 1..=3 {
            let a = enumerate_sum_circuit(&t, &ch, m).unwrap();
            let b = enumerate_multi_round(&t, &ch, m, &CarrierCode::repetition(3, m).unwrap()).unwrap();
            assert!(a.table.max_abs_diff(&b.table) < 1e-14);
            assert!((a.success_probability - b.success_probability).abs() < 1e-14);
        }
    }

    #[test]
    fn sum_circuit_closed_form() {
        let t = BellTable::from_weights(3, (1..=9).map(f64::from).collect()).unwrap();
        let ch = BellTable::from_weights(3, vec![5.0, 1.0, 0.5, 2.0, 0.1, 0.3, 0.7, 0.2, 0.9]).unwrap();
        for m in 1..=4 {
            let a = enumerate_sum_circuit(&t, &ch, m).unwrap();
            let b = crate::single_carrier::sum_circuit_round(&t, &ch, m).unwrap();
            assert!(a.table.max_abs_diff(&b.table) < 1e-13);
            assert!((a.success_probability - b.success_probability).abs() < 1e-13);
        }
    }

    #[test]
    fn size_guard() {
        let q = BellTable::depolarizing(3, 0.5).unwrap();
        let code = CarrierCode::star(3, 8).unwrap();
        assert!(matches!(
            enumerate_multi_round(&q, &q, 8, &code),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn sampling_agrees_roughly() {
        use rand::SeedableRng;
        let q = BellTable::depolarizing(3, 0.6).unwrap();
        let code = CarrierCode::star(3, 2).unwrap();
        let exact = enumerate_multi_round(&q, &q, 2, &code).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let est = sample_round(&q, &q, &code, 200_000, &mut rng).unwrap();
        assert!((est.success_probability - exact.success_probability).abs() < 0.01);
        assert!(est.table.max_abs_diff(&exact.table) < 0.01);
    }

    proptest! {
        #[test]
        fn single_round_matches_closed_form(
            (a, b) in prop::sample::select(vec![2usize, 3, 5]).prop_flat_map(|d| {
                (crate::state_model::tests::table(d), crate::state_model::tests::table(d))
            })
        ) {
            let e = enumerate_single_round(&a, &b).unwrap();
            let c = round_update(&a, &b).unwrap();
            prop_assert!(e.table.max_abs_diff(&c.table) < 1e-12);
            prop_assert!((e.success_probability - c.success_probability).abs() < 1e-12);
        }
    }
}

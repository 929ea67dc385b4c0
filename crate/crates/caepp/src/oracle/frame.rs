//! Pauli frames: a Weyl error per site, pushed through SUM gates by
//! conjugation. `SUM(c, t)` maps `|j, k> -> |j, k + j>`; an error `E` before
//! the gate becomes `SUM E SUM^dag` after it.

use crate::phase_space::modd;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    d: usize,
    x: Vec<usize>,
    z: Vec<usize>,
}

impl PauliFrame {
    pub fn new(d: usize, sites: usize) -> Self {
        Self { d, x: vec![0; sites], z: vec![0; sites] }
    }

    pub fn insert(&mut self, site: usize, x: usize, z: usize) {
        self.x[site] = (self.x[site] + x) % self.d;
        self.z[site] = (self.z[site] + z) % self.d;
    }

    pub fn get(&self, site: usize) -> (usize, usize) {
        (self.x[site], self.z[site])
    }

    /// `SUM^power` from `control` onto `target`.
    pub fn sum(&mut self, control: usize, target: usize, power: i64) {
        let d = self.d;
        let p = modd(power, d);
        self.x[target] = (self.x[target] + p * self.x[control]) % d;
        self.z[control] = modd(self.z[control] as i64 - (p * self.z[target]) as i64, d);
    }

    /// Bell index of the pair `(a, b)`: `(x_b - x_a, z_b + z_a)`.
    pub fn bell_index(&self, a: usize, b: usize) -> (usize, usize) {
        let d = self.d;
        ((self.x[b] + d - self.x[a]) % d, (self.z[b] + self.z[a]) % d)
    }
}

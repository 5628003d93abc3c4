//! Density-matrix simulation under a gate-local depolarizing noise model.
//!
//! The matrix is stored row-major as a flat buffer of `4^n` entries, so the
//! column index occupies bits `[0, n)` and the row index bits `[n, 2n)`.
//! Conjugating by `U` is then `U` on row bit `n + q` and `conj(U)` on
//! column bit `q`, reusing the statevector kernels.
//!
//! Depolarizing commutes with single-qubit unitaries, so runs of single-qubit
//! gates on one qubit are fused into one unitary followed by a single channel
//! of strength `1 - (1 - p1)^m`. The result is exact, not an approximation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Axis, Circuit, Gate};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::pauli::PauliSum;
use crate::statevector::{apply_cx_bits, apply_mat2, mat2_mul, single_qubit_matrix, Mat2};

pub const DEFAULT_MAX_DENSITY_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub readout_flip: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p1: 1e-3,
            p2: 1e-2,
            readout_flip: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            readout_flip: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("readout_flip", self.readout_flip),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "noise probability {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.readout_flip == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<Complex64>,
}

fn conj2(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[0][1].conj()],
        [m[1][0].conj(), m[1][1].conj()],
    ]
}

impl DensityMatrix {
    /// `|label><label|`.
    pub fn basis(n_qubits: usize, label: u64) -> Result<Self> {
        Self::basis_limited(n_qubits, label, DEFAULT_MAX_DENSITY_QUBITS)
    }

    pub fn basis_limited(n_qubits: usize, label: u64, max_qubits: usize) -> Result<Self> {
        if n_qubits > max_qubits {
            return Err(Error::Capacity {
                what: "density-matrix width",
                actual: n_qubits,
                limit: max_qubits,
            });
        }
        let dim = 1usize << n_qubits;
        if label >= dim as u64 {
            return Err(Error::Domain(format!(
                "basis label {label} out of range for {n_qubits} qubits"
            )));
        }
        let mut entries = vec![Complex64::default(); dim * dim];
        let l = label as usize;
        entries[l * dim + l] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, entries })
    }

    /// Maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let mut rho = Self::basis(n_qubits, 0)?;
        let dim = rho.dim();
        rho.entries.iter_mut().for_each(|e| *e = Complex64::default());
        for i in 0..dim {
            rho.entries[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(rho)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|i| self.entries[i * d + i]).sum()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |r, c| self.get(r, c));
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn apply_unitary(&mut self, qubit: usize, m: &Mat2) {
        apply_mat2(&mut self.entries, qubit + self.n_qubits, m);
        apply_mat2(&mut self.entries, qubit, &conj2(m));
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let n = self.n_qubits;
        apply_cx_bits(&mut self.entries, control + n, target + n);
        apply_cx_bits(&mut self.entries, control, target);
    }

    /// `ρ -> (1-p) ρ + p · I/2 ⊗ Tr_q ρ`.
    pub fn depolarize_1q(&mut self, qubit: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.n_qubits;
        let (rb, cb) = (1usize << (qubit + n), 1usize << qubit);
        let keep = 1.0 - p;
        for i in 0..self.entries.len() {
            if i & (rb | cb) != 0 {
                continue;
            }
            let (i00, i01, i10, i11) = (i, i | cb, i | rb, i | rb | cb);
            let e = &mut self.entries;
            let mix = (e[i00] + e[i11]) * (p / 2.0);
            e[i00] = e[i00] * keep + mix;
            e[i11] = e[i11] * keep + mix;
            e[i01] *= keep;
            e[i10] *= keep;
        }
    }

    /// Two-qubit analogue: `ρ -> (1-p) ρ + p · I/4 ⊗ Tr_ab ρ`.
    pub fn depolarize_2q(&mut self, a: usize, b: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.n_qubits;
        let row_bits = [1usize << (a + n), 1usize << (b + n)];
        let col_bits = [1usize << a, 1usize << b];
        let all = row_bits[0] | row_bits[1] | col_bits[0] | col_bits[1];
        let keep = 1.0 - p;
        let sub = |bits: &[usize; 2], k: usize| {
            (if k & 1 != 0 { bits[0] } else { 0 }) | (if k & 2 != 0 { bits[1] } else { 0 })
        };
        for i in 0..self.entries.len() {
            if i & all != 0 {
                continue;
            }
            let mut diag_sum = Complex64::default();
            for k in 0..4 {
                diag_sum += self.entries[i | sub(&row_bits, k) | sub(&col_bits, k)];
            }
            for r in 0..4 {
                for c in 0..4 {
                    let idx = i | sub(&row_bits, r) | sub(&col_bits, c);
                    self.entries[idx] *= keep;
                    if r == c {
                        self.entries[idx] += diag_sum * (p / 4.0);
                    }
                }
            }
        }
    }

    /// Classical bit flip `ρ -> (1-f) ρ + f XρX` on one qubit.
    pub fn bit_flip(&mut self, qubit: usize, f: f64) {
        if f == 0.0 {
            return;
        }
        let n = self.n_qubits;
        let (rb, cb) = (1usize << (qubit + n), 1usize << qubit);
        let keep = 1.0 - f;
        for i in 0..self.entries.len() {
            if i & (rb | cb) != 0 {
                continue;
            }
            let e = &mut self.entries;
            let (i00, i01, i10, i11) = (i, i | cb, i | rb, i | rb | cb);
            let (a, b, c, d) = (e[i00], e[i01], e[i10], e[i11]);
            e[i00] = a * keep + d * f;
            e[i11] = d * keep + a * f;
            e[i01] = b * keep + c * f;
            e[i10] = c * keep + b * f;
        }
    }

    pub fn expectation(&self, o: &PauliSum) -> Result<f64> {
        self.expectation_compiled(&Observable::compile(o)?)
    }

    /// `Tr(ρ O) = Σ_j w[j] ρ[j][j ^ x]` per X-mask group.
    pub fn expectation_compiled(&self, o: &Observable) -> Result<f64> {
        o.check_width(self.n_qubits)?;
        let d = self.dim();
        let mut total = Complex64::default();
        for (x, w) in o.groups() {
            let x = *x as usize;
            for (j, wj) in w.iter().enumerate() {
                total += wj * self.entries[j * d + (j ^ x)];
            }
        }
        Ok(total.re)
    }
}

/// Noisy evolution of `|0…0>` under `c` with the default width limit.
pub fn run_noisy(c: &Circuit, nm: &NoiseModel) -> Result<DensityMatrix> {
    run_noisy_limited(c, nm, DEFAULT_MAX_DENSITY_QUBITS)
}

pub fn run_noisy_limited(c: &Circuit, nm: &NoiseModel, max_qubits: usize) -> Result<DensityMatrix> {
    nm.validate()?;
    let n = c.n_qubits();
    let mut rho = DensityMatrix::basis_limited(n, 0, max_qubits)?;
    // Pending fused single-qubit unitary and gate count per qubit.
    let mut pending: Vec<Option<(Mat2, i32)>> = vec![None; n];

    let flush = |rho: &mut DensityMatrix, pending: &mut Vec<Option<(Mat2, i32)>>, q: usize| {
        if let Some((m, count)) = pending[q].take() {
            rho.apply_unitary(q, &m);
            rho.depolarize_1q(q, 1.0 - (1.0 - nm.p1).powi(count));
        }
    };

    for g in c.gates() {
        match *g {
            Gate::Cx { control, target } => {
                flush(&mut rho, &mut pending, control);
                flush(&mut rho, &mut pending, target);
                rho.apply_cx(control, target);
                rho.depolarize_2q(control, target, nm.p2);
            }
            _ => {
                let angle = g.param().map(|p| c.angle(p)).unwrap_or(0.0);
                let m = single_qubit_matrix(g, angle).expect("single-qubit gate");
                let q = g.qubits().0;
                pending[q] = Some(match pending[q] {
                    Some((acc, count)) => (mat2_mul(&m, &acc), count + 1),
                    None => (m, 1),
                });
            }
        }
    }
    for q in 0..n {
        flush(&mut rho, &mut pending, q);
    }
    for q in 0..n {
        rho.bit_flip(q, nm.readout_flip);
    }
    Ok(rho)
}

pub fn expectation_noisy(rho: &DensityMatrix, o: &PauliSum) -> Result<f64> {
    rho.expectation(o)
}

/// `Tr(ρ O)` for the noisy output of `c`, without materialising a
/// [`DensityMatrix`] when the circuit is real (H, X, CX and RY only). Such
/// circuits keep `ρ` real, which the fast path exploits.
pub fn noisy_expectation(c: &Circuit, nm: &NoiseModel, o: &Observable) -> Result<f64> {
    o.check_width(c.n_qubits())?;
    if !is_real_circuit(c) {
        return run_noisy(c, nm)?.expectation_compiled(o);
    }
    nm.validate()?;
    let rho = RealDensity::run(c, nm, DEFAULT_MAX_DENSITY_QUBITS)?;
    Ok(rho.expectation(o))
}

fn is_real_circuit(c: &Circuit) -> bool {
    c.gates().iter().all(|g| {
        matches!(
            g,
            Gate::H(_) | Gate::X(_) | Gate::Cx { .. } | Gate::Rot { axis: Axis::Y, .. }
        )
    })
}

type RMat2 = [[f64; 2]; 2];

fn rmat2(gate: &Gate, angle: f64) -> RMat2 {
    let m = single_qubit_matrix(gate, angle).expect("single-qubit gate");
    [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]]
}

fn rmat2_mul(a: &RMat2, b: &RMat2) -> RMat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Index `x` with a zero bit inserted at each position of `bits` (ascending).
#[inline(always)]
fn spread<const N: usize>(mut x: usize, bits: &[usize; N]) -> usize {
    for &b in bits {
        let low = x & ((1 << b) - 1);
        x = ((x >> b) << (b + 1)) | low;
    }
    x
}

/// Real symmetric density matrix with the same layout as [`DensityMatrix`].
struct RealDensity {
    n_qubits: usize,
    entries: Vec<f64>,
}

impl RealDensity {
    fn run(c: &Circuit, nm: &NoiseModel, max_qubits: usize) -> Result<Self> {
        let n = c.n_qubits();
        if n > max_qubits {
            return Err(Error::Capacity {
                what: "density-matrix width",
                actual: n,
                limit: max_qubits,
            });
        }
        let mut rho = Self { n_qubits: n, entries: vec![0.0; 1 << (2 * n)] };
        rho.entries[0] = 1.0;
        let mut pending: Vec<Option<(RMat2, i32)>> = vec![None; n];
        let flush = |rho: &mut Self, pending: &mut Vec<Option<(RMat2, i32)>>, q: usize| {
            if let Some((m, count)) = pending[q].take() {
                rho.unitary_depolarize(q, &m, 1.0 - (1.0 - nm.p1).powi(count));
            }
        };
        for g in c.gates() {
            match *g {
                Gate::Cx { control, target } => {
                    flush(&mut rho, &mut pending, control);
                    flush(&mut rho, &mut pending, target);
                    rho.cx_depolarize(control, target, nm.p2);
                }
                _ => {
                    let angle = g.param().map(|p| c.angle(p)).unwrap_or(0.0);
                    let m = rmat2(g, angle);
                    let q = g.qubits().0;
                    pending[q] = Some(match pending[q] {
                        Some((acc, count)) => (rmat2_mul(&m, &acc), count + 1),
                        None => (m, 1),
                    });
                }
            }
        }
        for q in 0..n {
            flush(&mut rho, &mut pending, q);
        }
        if nm.readout_flip > 0.0 {
            let f = nm.readout_flip;
            let flip = [[1.0 - f, f], [f, 1.0 - f]];
            for q in 0..n {
                rho.bit_flip(q, &flip);
            }
        }
        Ok(rho)
    }

    /// `ρ -> U ρ Uᵀ` on qubit `q`, then single-qubit depolarizing.
    fn unitary_depolarize(&mut self, q: usize, u: &RMat2, p: f64) {
        let n = self.n_qubits;
        let (cb, rb) = (1usize << q, 1usize << (q + n));
        let bits = [q, q + n];
        let keep = 1.0 - p;
        let e = &mut self.entries;
        for x in 0..e.len() >> 2 {
            let i = spread(x, &bits);
            let m = [[e[i], e[i | cb]], [e[i | rb], e[i | rb | cb]]];
            // t = U m, then m' = t Uᵀ.
            let t = rmat2_mul(u, &m);
            let m00 = t[0][0] * u[0][0] + t[0][1] * u[0][1];
            let m01 = t[0][0] * u[1][0] + t[0][1] * u[1][1];
            let m10 = t[1][0] * u[0][0] + t[1][1] * u[0][1];
            let m11 = t[1][0] * u[1][0] + t[1][1] * u[1][1];
            let mix = (m00 + m11) * (p / 2.0);
            e[i] = m00 * keep + mix;
            e[i | cb] = m01 * keep;
            e[i | rb] = m10 * keep;
            e[i | rb | cb] = m11 * keep + mix;
        }
    }

    /// CX conjugation followed by two-qubit depolarizing, in one pass.
    fn cx_depolarize(&mut self, control: usize, target: usize, p: f64) {
        let n = self.n_qubits;
        let mut bits = [control, target, control + n, target + n];
        bits.sort_unstable();
        let sub = |s: usize, shift: usize| {
            (if s & 1 != 0 { 1 << (control + shift) } else { 0 })
                | (if s & 2 != 0 { 1 << (target + shift) } else { 0 })
        };
        let row_off: [usize; 4] = std::array::from_fn(|s| sub(s, n));
        let col_off: [usize; 4] = std::array::from_fn(|s| sub(s, 0));
        // CX flips the target bit (bit 1) when the control bit (bit 0) is set.
        let cx = |s: usize| s ^ ((s & 1) << 1);
        let keep = 1.0 - p;
        let e = &mut self.entries;
        for x in 0..e.len() >> 4 {
            let i = spread(x, &bits);
            let mut v = [[0.0; 4]; 4];
            for (r, row) in v.iter_mut().enumerate() {
                for (cc, slot) in row.iter_mut().enumerate() {
                    *slot = e[i | row_off[cx(r)] | col_off[cx(cc)]];
                }
            }
            let mix = (v[0][0] + v[1][1] + v[2][2] + v[3][3]) * (p / 4.0);
            for r in 0..4 {
                for cc in 0..4 {
                    let diag = if r == cc { mix } else { 0.0 };
                    e[i | row_off[r] | col_off[cc]] = v[r][cc] * keep + diag;
                }
            }
        }
    }

    fn bit_flip(&mut self, q: usize, m: &RMat2) {
        let n = self.n_qubits;
        let (cb, rb) = (1usize << q, 1usize << (q + n));
        let bits = [q, q + n];
        let e = &mut self.entries;
        for x in 0..e.len() >> 2 {
            let i = spread(x, &bits);
            let (a, b, c, d) = (e[i], e[i | cb], e[i | rb], e[i | rb | cb]);
            // (1-f) ρ + f XρX: diagonal pairs mix, off-diagonal pairs swap.
            e[i] = m[0][0] * a + m[0][1] * d;
            e[i | rb | cb] = m[0][0] * d + m[0][1] * a;
            e[i | cb] = m[0][0] * b + m[0][1] * c;
            e[i | rb] = m[0][0] * c + m[0][1] * b;
        }
    }

    fn expectation(&self, o: &Observable) -> f64 {
        let d = 1usize << self.n_qubits;
        let mut total = 0.0;
        for (x, w) in o.groups() {
            let x = *x as usize;
            for (j, wj) in w.iter().enumerate() {
                total += wj.re * self.entries[j * d + (j ^ x)];
            }
        }
        total
    }
}

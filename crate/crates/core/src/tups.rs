//! Tiled unitary product state (tUPS) ansatz.
//!
//! Each block acts on spatial orbitals `p` and `q = p + 1`, i.e. the four
//! contiguous qubits `a = 2p, b = 2p + 1, c = 2q, d = 2q + 1`, and applies
//!
//! ```text
//! U(θa, θb, θc) = exp(θa κ) · exp(4 θb T) · exp(θc κ)
//! ```
//!
//! with `κ = E_pq − E_qp` the singlet orbital rotation and
//! `T = a†_qα a†_qβ a_pβ a_pα − h.c.` the pair exchange. The factor 4 makes
//! every elementary rotation in the decomposition use the angle `±θb`, so a
//! block parameter at a multiple of π/2 yields only Clifford gates.

use crate::circuit::{Axis, Circuit, Gate, ParamRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupsSpec {
    pub n_orbitals: usize,
    pub layers: usize,
    /// Electrons in the closed-shell reference; defaults to half filling.
    pub n_electrons: usize,
}

impl TupsSpec {
    pub fn new(n_orbitals: usize, layers: usize) -> Self {
        Self {
            n_orbitals,
            layers,
            n_electrons: n_orbitals,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_orbitals < 2 {
            return Err(Error::Domain(format!(
                "tUPS needs at least 2 spatial orbitals, got {}",
                self.n_orbitals
            )));
        }
        if self.layers == 0 {
            return Err(Error::Domain("tUPS needs at least one layer".into()));
        }
        hf_reference(self.n_orbitals, self.n_electrons).map(|_| ())
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals
    }
}

/// Basis label of the closed-shell reference: the lowest `n_electrons` spin
/// orbitals occupied.
pub fn hf_reference(n_orbitals: usize, n_electrons: usize) -> Result<u64> {
    if !n_electrons.is_multiple_of(2) {
        return Err(Error::UnsupportedConfiguration(format!(
            "open-shell reference with {n_electrons} electrons"
        )));
    }
    if n_electrons > 2 * n_orbitals {
        return Err(Error::Domain(format!(
            "{n_electrons} electrons do not fit in {n_orbitals} spatial orbitals"
        )));
    }
    if n_electrons >= 64 {
        return Err(Error::Capacity { what: "reference width", actual: n_electrons, limit: 63 });
    }
    Ok((1u64 << n_electrons) - 1)
}

/// Orbital pairs of one layer: odd pairs `(1,2), (3,4), …` then even pairs
/// `(0,1), (2,3), …`.
///
/// A block joining two doubly occupied (or two empty) orbitals acts trivially
/// on the reference. At four orbitals and half filling that is every even
/// pair, so odd pairs go first to keep the first layer's parameters live.
pub fn layer_pairs(n_orbitals: usize) -> Vec<(usize, usize)> {
    let even = (0..n_orbitals.saturating_sub(1)).step_by(2);
    let odd = (1..n_orbitals.saturating_sub(1)).step_by(2);
    odd.chain(even).map(|p| (p, p + 1)).collect()
}

fn ry(qubit: usize, param: ParamRef) -> Gate {
    Gate::Rot { axis: Axis::Y, qubit, param }
}

fn cx(control: usize, target: usize) -> Gate {
    Gate::Cx { control, target }
}

fn cz(a: usize, b: usize) -> [Gate; 3] {
    [Gate::H(b), cx(a, b), Gate::H(b)]
}

/// `exp(θ (σ⁺_i σ⁻_j − σ⁻_i σ⁺_j))` for `i < j`, without a parity string.
fn givens(i: usize, j: usize, p: usize) -> [Gate; 6] {
    [
        Gate::H(j),
        cx(j, i),
        ry(i, ParamRef::new(p)),
        ry(j, ParamRef::new(p)),
        cx(j, i),
        Gate::H(j),
    ]
}

/// `exp(θ κ)` between the two Givens rotations, without the CZ(b, c) frame
/// that supplies the parity string of the hop over qubit `b` and `c`.
fn kappa_core(q: [usize; 4], p: usize) -> Vec<Gate> {
    let [a, b, c, d] = q;
    let mut g = givens(a, c, p).to_vec();
    g.extend(givens(b, d, p));
    g
}

/// `exp(4θ T)` as a uniformly controlled RY on `a` inside a CX frame.
fn pair_exchange(q: [usize; 4], p: usize) -> Vec<Gate> {
    let [a, b, c, d] = q;
    let frame = [cx(a, b), cx(c, d), cx(a, c)];
    let gray = [b, c, b, d, b, c, b, d];
    // Sign carried by each control once it has been toggled into the parity.
    let polarity = |x: usize| if x == c { -1 } else { 1 };
    let mut toggled: Vec<usize> = Vec::new();
    let mut g = frame.to_vec();
    for &ctrl in &gray {
        let sign: i32 = -toggled.iter().map(|&x| polarity(x)).product::<i32>();
        let param = if sign > 0 { ParamRef::new(p) } else { ParamRef::neg(p) };
        g.push(ry(a, param));
        g.push(cx(ctrl, a));
        match toggled.iter().position(|&x| x == ctrl) {
            Some(i) => {
                toggled.remove(i);
            }
            None => toggled.push(ctrl),
        }
    }
    g.extend(frame.iter().rev());
    g
}

/// Appends one tUPS block on orbitals `(p, p + 1)` with parameters
/// `(θa, θb, θc)` at indices `params`.
pub fn push_block(c: &mut Circuit, p: usize, params: [usize; 3]) -> Result<()> {
    let q = [2 * p, 2 * p + 1, 2 * p + 2, 2 * p + 3];
    let [ta, tb, tc] = params;
    // CZ(b, c) commutes with T, so the two κ frames merge around the block.
    c.extend(cz(q[1], q[2]))?;
    c.extend(kappa_core(q, tc))?;
    c.extend(pair_exchange(q, tb))?;
    c.extend(kappa_core(q, ta))?;
    c.extend(cz(q[1], q[2]))?;
    Ok(())
}

/// tUPS circuit with every parameter at 0, preceded by the X gates preparing
/// the reference from `|0…0>`.
pub fn build_tups(spec: &TupsSpec) -> Result<Circuit> {
    spec.validate()?;
    let mut c = Circuit::new(spec.n_qubits());
    for q in 0..spec.n_electrons {
        c.push(Gate::X(q))?;
    }
    for _ in 0..spec.layers {
        for (p, _) in layer_pairs(spec.n_orbitals) {
            let idx = [c.add_param(0.0), c.add_param(0.0), c.add_param(0.0)];
            push_block(&mut c, p, idx)?;
        }
    }
    Ok(c)
}

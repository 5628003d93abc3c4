//! Gate-level circuits with a shared rotation-parameter table.
//!
//! Rotation gates do not store their angle. They point into the circuit's
//! parameter table through a [`ParamRef`], optionally negated, so one logical
//! parameter can drive several gates and be Cliffordized in one place.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use crate::error::{Error, Result};

/// Angular tolerance used to decide whether an angle is a multiple of π/2.
pub const CLIFFORD_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::X => "RX",
            Axis::Y => "RY",
            Axis::Z => "RZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamRef {
    pub index: usize,
    pub negated: bool,
}

impl ParamRef {
    pub fn new(index: usize) -> Self {
        Self {
            index,
            negated: false,
        }
    }

    pub fn neg(index: usize) -> Self {
        Self {
            index,
            negated: true,
        }
    }
}

/// Elementary gate. Rotations are `exp(-i θ/2 σ)` with `σ` the Pauli of `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Cx { control: usize, target: usize },
    Rot { axis: Axis, qubit: usize, param: ParamRef },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) => (q, None),
            Gate::Rot { qubit, .. } => (qubit, None),
            Gate::Cx { control, target } => (control, Some(target)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx { .. })
    }

    pub fn param(&self) -> Option<ParamRef> {
        match *self {
            Gate::Rot { param, .. } => Some(param),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "SDG",
            Gate::X(_) => "X",
            Gate::Cx { .. } => "CX",
            Gate::Rot { axis, .. } => axis.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamRole {
    Free,
    Cliffordized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CliffordMode {
    Zero,
    Bias,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    params: Vec<f64>,
    roles: Vec<ParamRole>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            params: Vec::new(),
            roles: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn roles(&self) -> &[ParamRole] {
        &self.roles
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Appends a free parameter and returns its index.
    pub fn add_param(&mut self, theta: f64) -> usize {
        self.params.push(theta);
        self.roles.push(ParamRole::Free);
        self.params.len() - 1
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let (a, b) = gate.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= self.n_qubits {
                return Err(Error::Domain(format!(
                    "{} acts on qubit {q}, circuit has {} qubits",
                    gate.name(),
                    self.n_qubits
                )));
            }
        }
        if b == Some(a) {
            return Err(Error::Domain(format!("{} on repeated qubit {a}", gate.name())));
        }
        if let Some(p) = gate.param() {
            if p.index >= self.params.len() {
                return Err(Error::Domain(format!(
                    "parameter {} out of range ({} parameters)",
                    p.index,
                    self.params.len()
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// Angle actually applied by a rotation referencing `p`.
    pub fn angle(&self, p: ParamRef) -> f64 {
        let t = self.params[p.index];
        if p.negated {
            -t
        } else {
            t
        }
    }

    /// Copy with a new parameter table; roles are reset to free.
    pub fn with_params(&self, params: &[f64]) -> Result<Circuit> {
        if params.len() != self.params.len() {
            return Err(Error::Dimension {
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        if let Some(t) = params.iter().find(|t| !t.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter {t}")));
        }
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.clone(),
            params: params.to_vec(),
            roles: vec![ParamRole::Free; params.len()],
        })
    }

    pub fn set_param(&mut self, index: usize, theta: f64) {
        self.params[index] = theta;
    }

    /// Number of gates referencing each parameter.
    pub fn param_gate_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.params.len()];
        for g in &self.gates {
            if let Some(p) = g.param() {
                counts[p.index] += 1;
            }
        }
        counts
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn count_non_clifford(&self) -> usize {
        self.non_clifford_indices().len()
    }

    /// Parameter indices whose angle is off the Clifford grid.
    pub fn non_clifford_indices(&self) -> Vec<usize> {
        self.params
            .iter()
            .enumerate()
            .filter(|(_, t)| !is_clifford_angle(**t).unwrap_or(false))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_fully_clifford(&self) -> bool {
        self.count_non_clifford() == 0
    }

    /// Snaps the selected parameters to the Clifford grid. `Zero` sets them
    /// to 0, `Bias` to the nearest multiple of π/2.
    pub fn cliffordize(&self, indices: &[usize], mode: CliffordMode) -> Result<Circuit> {
        let mut out = self.clone();
        for &i in indices {
            if i >= self.params.len() {
                return Err(Error::Domain(format!(
                    "parameter index {i} out of range ({} parameters)",
                    self.params.len()
                )));
            }
            out.params[i] = match mode {
                CliffordMode::Zero => 0.0,
                CliffordMode::Bias => nearest_clifford_angle(self.params[i])?,
            };
            out.roles[i] = ParamRole::Cliffordized;
        }
        Ok(out)
    }

    /// One gate per line: `GATE q0 [q1] [param]`, with a leading `-` on the
    /// parameter index for negated references.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            match *g {
                Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) => {
                    writeln!(f, "{} {q}", g.name())?
                }
                Gate::Cx { control, target } => writeln!(f, "CX {control} {target}")?,
                Gate::Rot { qubit, param, .. } => {
                    let sign = if param.negated { "-" } else { "" };
                    writeln!(f, "{} {qubit} {sign}{}", g.name(), param.index)?
                }
            }
        }
        Ok(())
    }
}

fn check_finite(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite angle {theta}")))
    }
}

pub fn is_clifford_angle(theta: f64) -> Result<bool> {
    check_finite(theta)?;
    let r = theta.rem_euclid(FRAC_PI_2);
    Ok(r.min(FRAC_PI_2 - r) <= CLIFFORD_ANGLE_TOL)
}

/// Multiple of π/2 in `[0, 2π)` closest to `theta`; exact ties go to the
/// smaller multiple.
pub fn nearest_clifford_angle(theta: f64) -> Result<f64> {
    Ok(f64::from(nearest_clifford_multiple(theta)?) * FRAC_PI_2)
}

/// Same as [`nearest_clifford_angle`] but returns `m` in `0..4`.
pub fn nearest_clifford_multiple(theta: f64) -> Result<u8> {
    check_finite(theta)?;
    let q = theta.rem_euclid(TAU) / FRAC_PI_2;
    let base = q.floor();
    let m = if q - base <= 0.5 { base } else { base + 1.0 };
    Ok((m as i64).rem_euclid(4) as u8)
}

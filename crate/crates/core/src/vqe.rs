//! Variational energy minimization: Rotosolve sweeps followed by a BFGS
//! refinement driven by parameter-shift gradients.
//!
//! A parameter that feeds `m` rotation gates makes the energy a trigonometric
//! polynomial of degree `m` in that parameter. Rotosolve therefore samples
//! `2m + 1` equidistant points, recovers the Fourier coefficients exactly and
//! jumps to the global minimum along that coordinate. For `m = 1` this is the
//! classic three-point sinusoid update.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::pauli::PauliSum;
use crate::statevector::StateVector;

/// Ideal energy of a parameterized circuit started from `|0…0>`.
#[derive(Debug, Clone)]
pub struct EnergyFn<'a> {
    circuit: &'a Circuit,
    observable: Observable,
}

impl<'a> EnergyFn<'a> {
    pub fn new(circuit: &'a Circuit, h: &PauliSum) -> Result<Self> {
        let observable = Observable::compile(h)?;
        observable.check_width(circuit.n_qubits())?;
        Ok(Self { circuit, observable })
    }

    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        self.energy_shifted(theta, None)
    }

    /// Energy with one gate's angle offset by `shift` (parameter-shift rule).
    fn energy_shifted(&self, theta: &[f64], shift: Option<(usize, f64)>) -> Result<f64> {
        if theta.len() != self.circuit.n_params() {
            return Err(Error::Dimension {
                expected: self.circuit.n_params(),
                actual: theta.len(),
            });
        }
        let mut s = StateVector::basis(self.circuit.n_qubits(), 0)?;
        s.apply_circuit_with(self.circuit, |i, g| {
            let p = g.param().expect("rotation");
            let base = if p.negated { -theta[p.index] } else { theta[p.index] };
            match shift {
                Some((gi, d)) if gi == i => base + d,
                _ => base,
            }
        })?;
        s.expectation_compiled(&self.observable)
    }

    /// Exact gradient: each gate contributes `±(E(+π/2) − E(−π/2)) / 2`.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; theta.len()];
        for (i, g) in self.circuit.gates().iter().enumerate() {
            let Some(p) = g.param() else { continue };
            let plus = self.energy_shifted(theta, Some((i, FRAC_PI_2)))?;
            let minus = self.energy_shifted(theta, Some((i, -FRAC_PI_2)))?;
            let sign = if p.negated { -1.0 } else { 1.0 };
            grad[p.index] += sign * (plus - minus) / 2.0;
        }
        Ok(grad)
    }
}

/// Minimizer of `a0 + Σ_k (a_k cos kx + b_k sin kx)` over one period.
fn trig_poly_argmin(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() - 1;
    let value = |x: f64| -> f64 {
        (1..=m).map(|k| a[k] * (k as f64 * x).cos() + b[k] * (k as f64 * x).sin()).sum()
    };
    let d1 = |x: f64| -> f64 {
        (1..=m)
            .map(|k| {
                let kf = k as f64;
                kf * (-a[k] * (kf * x).sin() + b[k] * (kf * x).cos())
            })
            .sum()
    };
    let d2 = |x: f64| -> f64 {
        (1..=m)
            .map(|k| {
                let kf = k as f64;
                -kf * kf * (a[k] * (kf * x).cos() + b[k] * (kf * x).sin())
            })
            .sum()
    };
    let grid = 64 * m;
    let mut best = (0.0, value(0.0));
    for i in 1..grid {
        let x = TAU * i as f64 / grid as f64;
        let v = value(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let mut x = best.0;
    for _ in 0..50 {
        let h = d2(x);
        if h <= 0.0 {
            break;
        }
        let step = d1(x) / h;
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if value(x) <= best.1 {
        x
    } else {
        best.0
    }
}

/// Coordinate update for parameter `j`; returns the new angle and energy.
fn rotosolve_coordinate(
    f: &EnergyFn<'_>,
    theta: &mut [f64],
    j: usize,
    degree: usize,
    current: f64,
) -> Result<f64> {
    let t0 = theta[j];
    if degree == 0 {
        return Ok(current);
    }
    let candidate = if degree == 1 {
        theta[j] = t0 + FRAC_PI_2;
        let ep = f.energy(theta)?;
        theta[j] = t0 - FRAC_PI_2;
        let em = f.energy(theta)?;
        t0 - FRAC_PI_2 - (2.0 * current - ep - em).atan2(ep - em)
    } else {
        let n = 2 * degree + 1;
        let mut samples = Vec::with_capacity(n);
        samples.push(current);
        for t in 1..n {
            theta[j] = t0 + TAU * t as f64 / n as f64;
            samples.push(f.energy(theta)?);
        }
        let mut a = vec![0.0; degree + 1];
        let mut b = vec![0.0; degree + 1];
        for (t, e) in samples.iter().enumerate() {
            let x = TAU * t as f64 / n as f64;
            for k in 0..=degree {
                a[k] += e * (k as f64 * x).cos();
                b[k] += e * (k as f64 * x).sin();
            }
        }
        for k in 1..=degree {
            a[k] *= 2.0 / n as f64;
            b[k] *= 2.0 / n as f64;
        }
        t0 + trig_poly_argmin(&a, &b)
    };
    // Keep angles in (-π, π] so saved tables stay readable.
    let candidate = candidate - TAU * ((candidate + PI) / TAU).ceil() + TAU;
    theta[j] = candidate;
    let e = f.energy(theta)?;
    if e <= current {
        Ok(e)
    } else {
        theta[j] = t0;
        Ok(current)
    }
}

/// One Rotosolve pass over all parameters in index order.
pub fn rotosolve_sweep(c: &Circuit, h: &PauliSum, theta: &[f64]) -> Result<Vec<f64>> {
    let f = EnergyFn::new(c, h)?;
    let mut theta = theta.to_vec();
    let degrees = c.param_gate_counts();
    let mut e = f.energy(&theta)?;
    for j in 0..theta.len() {
        e = rotosolve_coordinate(&f, &mut theta, j, degrees[j], e)?;
    }
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeOptions {
    pub tol_rotosolve: f64,
    pub tol_grad: f64,
    pub max_sweeps: usize,
    pub max_grad_steps: usize,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self {
            tol_rotosolve: 1e-8,
            tol_grad: 1e-6,
            max_sweeps: 200,
            max_grad_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeResult {
    pub theta_opt: Vec<f64>,
    pub energy: f64,
    /// Rotosolve sweeps plus gradient steps.
    pub iterations: usize,
    pub sweeps: usize,
    pub grad_steps: usize,
    /// Energy after each Rotosolve sweep, starting with the initial energy.
    pub trace: Vec<f64>,
    pub grad_norm: f64,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Rotosolve from `theta0` (all zeros if `None`), then BFGS until the
/// gradient's ∞-norm drops below `tol_grad`.
pub fn optimize(c: &Circuit, h: &PauliSum, theta0: Option<&[f64]>, opts: &VqeOptions) -> Result<VqeResult> {
    let f = EnergyFn::new(c, h)?;
    let mut theta = match theta0 {
        Some(t) => t.to_vec(),
        None => vec![0.0; c.n_params()],
    };
    let degrees = c.param_gate_counts();
    let mut e = f.energy(&theta)?;
    let mut trace = vec![e];
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let before = e;
        for j in 0..theta.len() {
            e = rotosolve_coordinate(&f, &mut theta, j, degrees[j], e)?;
        }
        sweeps += 1;
        trace.push(e);
        if before - e < opts.tol_rotosolve {
            break;
        }
    }

    let n = theta.len();
    let mut x = DVector::from_vec(theta);
    let mut g = DVector::from_vec(f.gradient(x.as_slice())?);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut steps = 0;
    while inf_norm(g.as_slice()) >= opts.tol_grad && steps < opts.max_grad_steps {
        let mut d = -(&hinv * &g);
        if d.dot(&g) >= 0.0 {
            hinv = DMatrix::identity(n, n);
            d = -g.clone();
        }
        let slope = d.dot(&g);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = &x + &d * alpha;
            let et = f.energy(trial.as_slice())?;
            if et <= e + 1e-4 * alpha * slope {
                accepted = Some((trial, et));
                break;
            }
            alpha *= 0.5;
        }
        steps += 1;
        let Some((x_new, e_new)) = accepted else {
            // No descent possible at floating-point resolution.
            if hinv == DMatrix::identity(n, n) {
                break;
            }
            hinv = DMatrix::identity(n, n);
            continue;
        };
        let g_new = DVector::from_vec(f.gradient(x_new.as_slice())?);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-18 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &s * y.transpose() * rho;
            let right = &i - &y * s.transpose() * rho;
            hinv = &left * &hinv * &right + &s * s.transpose() * rho;
        }
        x = x_new;
        g = g_new;
        e = e_new;
    }
    let grad_norm = inf_norm(g.as_slice());
    let theta_opt: Vec<f64> = x.iter().copied().collect();
    let energy = f.energy(&theta_opt)?;
    Ok(VqeResult {
        theta_opt,
        energy,
        iterations: sweeps + steps,
        sweeps,
        grad_steps: steps,
        trace,
        grad_norm,
        converged: grad_norm < opts.tol_grad,
    })
}

/// One radian value per line, full round-trip precision.
pub fn write_angles(path: impl AsRef<Path>, theta: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for t in theta {
        text.push_str(&format!("{t:e}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_angles(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_angles(&text)
}

pub fn parse_angles(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad angle {t:?}: {e}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse { line: i + 1, msg: format!("non-finite angle {t}") });
        }
        out.push(v);
    }
    Ok(out)
}

//! Clifford data regression: near-Clifford training sets, the linear,
//! quadratic and k-aware (NCE) regression families, energy sampling and
//! per-k training plans.
//!
//! A training circuit is the target circuit with a subset of its
//! non-Clifford parameters snapped to the Clifford grid. It is identified by
//! the bitmask of snapped parameter indices, so circuits are unique within a
//! set exactly when their masks are.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CliffordMode};
use crate::density::{noisy_expectation, NoiseModel};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::pauli::PauliSum;
use crate::stabilizer::run_clifford;
use crate::statevector::StateVector;

/// Environment variable overriding the worker-thread count.
pub const WORKERS_ENV: &str = "CDR_WORKERS";

/// Bitmask of Cliffordized parameter indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CircuitId(pub u64);

impl fmt::Display for CircuitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCircuit {
    pub id: CircuitId,
    pub k: usize,
    pub mode: CliffordMode,
    pub circuit: Circuit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub circuit_id: CircuitId,
    pub k: usize,
    pub x_exact: f64,
    pub x_noisy: f64,
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `k`-subsets of `0..n` as bitmasks, in increasing numeric order.
fn all_subsets(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut m: u64 = (1u64 << k) - 1;
    let limit: u128 = 1u128 << n;
    while (m as u128) < limit {
        out.push(m);
        // Gosper's hack: next integer with the same popcount.
        let c = m & m.wrapping_neg();
        let r = m.wrapping_add(c);
        if r == 0 {
            break;
        }
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

fn sampled_subsets(n: usize, k: usize, count: usize, rng: &mut impl Rng) -> Result<Vec<u64>> {
    let cap = 50 * count;
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == cap {
            return Err(Error::SamplingExhausted {
                attempts,
                found: out.len(),
                wanted: count,
            });
        }
        attempts += 1;
        let mask = rand::seq::index::sample(rng, n, k)
            .iter()
            .fold(0u64, |m, i| m | 1 << i);
        if seen.insert(mask) {
            out.push(mask);
        }
    }
    Ok(out)
}

/// Near-Clifford circuits keeping `k` of the target's non-Clifford
/// parameters and snapping the rest.
///
/// Returns `min(n_samples, C(n, k))` circuits with distinct kept sets. When
/// every subset is wanted they are enumerated; otherwise subsets are drawn
/// uniformly and duplicates rejected, giving up after `50 · n_samples` draws.
pub fn generate_training_set(
    target: &Circuit,
    k: usize,
    n_samples: usize,
    mode: CliffordMode,
    rng: &mut impl Rng,
) -> Result<Vec<TrainingCircuit>> {
    if target.n_params() > 64 {
        return Err(Error::Capacity {
            what: "parameter count for circuit ids",
            actual: target.n_params(),
            limit: 64,
        });
    }
    let free = target.non_clifford_indices();
    let n = free.len();
    if k > n {
        return Err(Error::Domain(format!(
            "k = {k} exceeds the {n} non-Clifford parameters"
        )));
    }
    if n_samples == 0 {
        return Err(Error::Domain("training set size must be at least 1".into()));
    }
    let total = binomial(n, k);
    let kept = if n_samples as u64 >= total {
        all_subsets(n, k)
    } else {
        sampled_subsets(n, k, n_samples, rng)?
    };
    kept.into_iter()
        .map(|mask| {
            let snapped = free
                .iter()
                .enumerate()
                .filter(|(pos, _)| mask >> pos & 1 == 0)
                .fold(0u64, |m, (_, &idx)| m | 1 << idx);
            let id = CircuitId(snapped);
            Ok(TrainingCircuit { id, k, mode, circuit: circuit_for(target, id, mode)? })
        })
        .collect()
}

/// The target with every parameter in `id` Cliffordized under `mode`.
pub fn circuit_for(target: &Circuit, id: CircuitId, mode: CliffordMode) -> Result<Circuit> {
    let indices: Vec<usize> = (0..64).filter(|i| id.0 >> i & 1 == 1).collect();
    target.cliffordize(&indices, mode)
}

/// Worker count from `CDR_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on up to `workers` threads. Output order follows
/// `items`; on failure the error of the lowest failing index is returned.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> =
        Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

type CacheKey = (CliffordMode, u64);

/// Exact and noisy expectation values of training circuits derived from one
/// target circuit, cached by `(mode, id)`.
#[derive(Debug)]
pub struct Evaluator {
    target: Circuit,
    hamiltonian: PauliSum,
    observable: Observable,
    noise: NoiseModel,
    workers: usize,
    exact_cache: Mutex<HashMap<CacheKey, f64>>,
    noisy_cache: Mutex<HashMap<CacheKey, f64>>,
}

impl Evaluator {
    pub fn new(target: Circuit, hamiltonian: PauliSum, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        let observable = Observable::compile(&hamiltonian)?;
        observable.check_width(target.n_qubits())?;
        Ok(Self {
            target,
            hamiltonian,
            observable,
            noise,
            workers: default_workers(),
            exact_cache: Mutex::default(),
            noisy_cache: Mutex::default(),
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn target(&self) -> &Circuit {
        &self.target
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Number of non-Clifford parameters `n` of the target.
    pub fn n_non_clifford(&self) -> usize {
        self.target.count_non_clifford()
    }

    fn exact_one(&self, tc: &TrainingCircuit) -> Result<f64> {
        let run = || -> Result<f64> {
            if tc.circuit.is_fully_clifford() {
                run_clifford(&tc.circuit)?.expectation(&self.hamiltonian)
            } else {
                let mut s = StateVector::basis(tc.circuit.n_qubits(), 0)?;
                s.apply_circuit(&tc.circuit)?;
                s.expectation_compiled(&self.observable)
            }
        };
        run().map_err(|e| Error::Simulation { circuit_id: tc.id.to_string(), source: Box::new(e) })
    }

    fn noisy_one(&self, tc: &TrainingCircuit) -> Result<f64> {
        noisy_expectation(&tc.circuit, &self.noise, &self.observable)
            .map_err(|e| Error::Simulation { circuit_id: tc.id.to_string(), source: Box::new(e) })
    }

    fn cached(
        &self,
        circuits: &[TrainingCircuit],
        cache: &Mutex<HashMap<CacheKey, f64>>,
        eval: impl Fn(&TrainingCircuit) -> Result<f64> + Sync,
    ) -> Result<Vec<f64>> {
        let key = |tc: &TrainingCircuit| (tc.mode, tc.id.0);
        let missing: Vec<&TrainingCircuit> = {
            let c = cache.lock().expect("cache");
            let mut seen = HashSet::new();
            circuits
                .iter()
                .filter(|tc| !c.contains_key(&key(tc)) && seen.insert(key(tc)))
                .collect()
        };
        let values = par_map(&missing, self.workers, |tc| eval(tc))?;
        let mut c = cache.lock().expect("cache");
        for (tc, v) in missing.iter().zip(values) {
            c.insert(key(tc), v);
        }
        Ok(circuits.iter().map(|tc| c[&key(tc)]).collect())
    }

    /// Noise-free values: tableau simulation for fully Clifford circuits,
    /// statevector otherwise.
    pub fn exact_values(&self, circuits: &[TrainingCircuit]) -> Result<Vec<f64>> {
        self.cached(circuits, &self.exact_cache, |tc| self.exact_one(tc))
    }

    /// Noisy values from the density-matrix simulator.
    pub fn noisy_values(&self, circuits: &[TrainingCircuit]) -> Result<Vec<f64>> {
        self.cached(circuits, &self.noisy_cache, |tc| self.noisy_one(tc))
    }

    pub fn build_samples(&self, circuits: &[TrainingCircuit]) -> Result<Vec<TrainingSample>> {
        let exact = self.exact_values(circuits)?;
        let noisy = self.noisy_values(circuits)?;
        Ok(samples_from(circuits, &exact, &noisy))
    }

    fn target_circuit(&self) -> TrainingCircuit {
        TrainingCircuit {
            id: CircuitId(0),
            k: self.n_non_clifford(),
            mode: CliffordMode::Bias,
            circuit: self.target.clone(),
        }
    }

    /// Ideal expectation of the target circuit.
    pub fn target_exact(&self) -> Result<f64> {
        Ok(self.exact_values(&[self.target_circuit()])?[0])
    }

    /// Noisy expectation of the target circuit.
    pub fn target_noisy(&self) -> Result<f64> {
        Ok(self.noisy_values(&[self.target_circuit()])?[0])
    }
}

fn samples_from(circuits: &[TrainingCircuit], exact: &[f64], noisy: &[f64]) -> Vec<TrainingSample> {
    circuits
        .iter()
        .zip(exact.iter().zip(noisy))
        .map(|(tc, (&x_exact, &x_noisy))| TrainingSample { circuit_id: tc.id, k: tc.k, x_exact, x_noisy })
        .collect()
}

/// Free-standing form of [`Evaluator::build_samples`].
pub fn build_samples(
    circuits: &[TrainingCircuit],
    h: &PauliSum,
    nm: &NoiseModel,
) -> Result<Vec<TrainingSample>> {
    let Some(first) = circuits.first() else {
        return Ok(Vec::new());
    };
    Evaluator::new(first.circuit.clone(), h.clone(), *nm)?.build_samples(circuits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Linear,
    Quadratic,
    Nce,
}

impl ModelFamily {
    pub fn n_coeffs(self) -> usize {
        match self {
            ModelFamily::Linear => 2,
            ModelFamily::Quadratic => 3,
            ModelFamily::Nce => 6,
        }
    }

    /// Design-matrix row for one input.
    pub fn features(self, x: f64, k: usize) -> Vec<f64> {
        let k = k as f64;
        match self {
            ModelFamily::Linear => vec![x, 1.0],
            ModelFamily::Quadratic => vec![x * x, x, 1.0],
            ModelFamily::Nce => vec![x * x, k * k, k * x, x, k, 1.0],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Linear => "linear",
            ModelFamily::Quadratic => "quadratic",
            ModelFamily::Nce => "nce",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub family: ModelFamily,
    pub coeffs: Vec<f64>,
}

impl RegressionModel {
    pub fn new(family: ModelFamily, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != family.n_coeffs() {
            return Err(Error::Dimension {
                expected: family.n_coeffs(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { family, coeffs })
    }

    /// Model value at `x_noisy`; `k` is used only by the NCE family.
    pub fn predict(&self, x_noisy: f64, k: usize) -> f64 {
        self.family
            .features(x_noisy, k)
            .iter()
            .zip(&self.coeffs)
            .map(|(f, a)| f * a)
            .sum()
    }

    pub fn residual_sum_of_squares(&self, samples: &[TrainingSample]) -> f64 {
        samples
            .iter()
            .map(|s| (s.x_exact - self.predict(s.x_noisy, s.k)).powi(2))
            .sum()
    }
}

/// Least-squares fit of `x_exact` against the family's features of
/// `(x_noisy, k)`. Rank-deficient designs get the minimum-norm solution.
pub fn fit(samples: &[TrainingSample], family: ModelFamily) -> Result<RegressionModel> {
    let p = family.n_coeffs();
    if samples.len() < p {
        return Err(Error::Underdetermined { samples: samples.len(), coeffs: p });
    }
    if family == ModelFamily::Nce {
        let ks: HashSet<usize> = samples.iter().map(|s| s.k).collect();
        if ks.len() < 2 {
            return Err(Error::DegenerateFeature(format!(
                "NCE needs at least two distinct k values, got only k = {}",
                samples[0].k
            )));
        }
    }
    let rows: Vec<f64> = samples.iter().flat_map(|s| family.features(s.x_noisy, s.k)).collect();
    let a = DMatrix::from_row_slice(samples.len(), p, &rows);
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.x_exact));
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = largest * samples.len().max(p) as f64 * f64::EPSILON;
    let solve = |rhs: &DVector<f64>| svd.solve(rhs, eps).map_err(|e| Error::Domain(e.to_string()));
    let mut coeffs = solve(&y)?;
    // Clustered training energies make the design ill-conditioned; a few
    // refinement passes on the residual recover the lost digits.
    for _ in 0..3 {
        coeffs += solve(&(&y - &a * &coeffs))?;
    }
    RegressionModel::new(family, coeffs.iter().copied().collect())
}

/// The `n` items with the smallest key, ties broken by circuit id.
pub fn lowest_n<T: Clone>(pool: &[T], n: usize, key: impl Fn(&T) -> (f64, CircuitId)) -> Result<Vec<T>> {
    if n > pool.len() {
        return Err(Error::Domain(format!(
            "cannot select {n} samples from a pool of {}",
            pool.len()
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&i, &j| {
        let (ei, ii) = key(&pool[i]);
        let (ej, ij) = key(&pool[j]);
        ei.total_cmp(&ej).then(ii.cmp(&ij))
    });
    Ok(order[..n].iter().map(|&i| pool[i].clone()).collect())
}

/// Energy sampling: keep the `n` samples with the lowest exact energy.
pub fn energy_sampling_select(pool: &[TrainingSample], n: usize) -> Result<Vec<TrainingSample>> {
    lowest_n(pool, n, |s| (s.x_exact, s.circuit_id))
}

/// Per-k sample counts `min(n_samples, C(n, k))` for `k` in
/// `k_min..=k_max`.
pub fn nce_training_plan(n: usize, k_min: usize, k_max: usize, n_samples: usize) -> Result<Vec<(usize, usize)>> {
    if k_min < 1 || k_min > k_max || k_max >= n {
        return Err(Error::Domain(format!(
            "NCE range needs 1 <= k_min <= k_max < n, got k_min = {k_min}, k_max = {k_max}, n = {n}"
        )));
    }
    Ok((k_min..=k_max)
        .map(|k| (k, binomial(n, k).min(n_samples as u64) as usize))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationReport {
    pub predicted: f64,
    /// `|predicted − reference|` when a reference value was supplied.
    pub abs_error: Option<f64>,
    pub family: ModelFamily,
    pub coeffs: Vec<f64>,
}

/// Applies a fitted model to the target's noisy value; NCE models are
/// evaluated at `k = n`.
pub fn mitigate(target_x_noisy: f64, model: &RegressionModel, n: usize, reference: Option<f64>) -> MitigationReport {
    let predicted = model.predict(target_x_noisy, n);
    MitigationReport {
        predicted,
        abs_error: reference.map(|r| (predicted - r).abs()),
        family: model.family,
        coeffs: model.coeffs.clone(),
    }
}

/// Generator for repeat `repeat` and slot `slot` (a k value or phase
/// index) of a run seeded with `master`: ChaCha8 keyed by `master` on
/// stream `(repeat << 32) | slot`.
pub fn substream_rng(master: u64, repeat: u32, slot: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((u64::from(repeat) << 32) | u64::from(slot));
    rng
}

/// `circuit_id,k,x_exact,x_noisy` with a header line.
pub fn training_csv(samples: &[TrainingSample]) -> String {
    let mut out = String::from("circuit_id,k,x_exact,x_noisy\n");
    for s in samples {
        out.push_str(&format!("{},{},{},{}\n", s.circuit_id, s.k, s.x_exact, s.x_noisy));
    }
    out
}

pub fn write_training_csv(path: impl AsRef<Path>, samples: &[TrainingSample]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, training_csv(samples)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Axis, Gate, ParamRef};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn sample(x_exact: f64, x_noisy: f64, k: usize, id: u64) -> TrainingSample {
        TrainingSample { circuit_id: CircuitId(id), k, x_exact, x_noisy }
    }

    fn ry_chain(angles: &[f64]) -> Circuit {
        let mut c = Circuit::new(2);
        for (i, &t) in angles.iter().enumerate() {
            let p = c.add_param(t);
            c.push(Gate::Rot { axis: Axis::Y, qubit: i % 2, param: ParamRef::new(p) }).unwrap();
            c.push(Gate::Cx { control: i % 2, target: 1 - i % 2 }).unwrap();
        }
        c
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(18, 2), 153);
        assert_eq!(binomial(27, 3), 2925);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(200, 100), u64::MAX);
        for n in 0..12 {
            assert_eq!(all_subsets(n, 3.min(n)).len() as u64, binomial(n, 3.min(n)));
        }
    }

    #[test]
    fn training_set_sizes_and_ids() {
        let c = ry_chain(&[0.3, 0.7, -1.1, 2.0, 0.4, 1.3]);
        let mut rng = substream_rng(7, 0, 0);
        let set = generate_training_set(&c, 2, 100, CliffordMode::Bias, &mut rng).unwrap();
        assert_eq!(set.len(), 15);
        let ids: HashSet<_> = set.iter().map(|t| t.id).collect();
        assert_eq!(ids.len(), 15);
        for t in &set {
            assert_eq!(t.circuit.count_non_clifford(), 2);
            assert_eq!(t.id.0.count_ones(), 4);
        }
        let set = generate_training_set(&c, 3, 5, CliffordMode::Zero, &mut rng).unwrap();
        assert_eq!(set.len(), 5);
        assert!(set.iter().all(|t| t.circuit.count_non_clifford() == 3));

        let all = generate_training_set(&c, 6, 10, CliffordMode::Bias, &mut rng).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].circuit, c);
        assert!(matches!(
            generate_training_set(&c, 7, 10, CliffordMode::Bias, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn clifford_parameters_are_not_counted() {
        let c = ry_chain(&[0.3, std::f64::consts::FRAC_PI_2, -1.1, 0.0]);
        let mut rng = substream_rng(1, 0, 0);
        let set = generate_training_set(&c, 1, 10, CliffordMode::Bias, &mut rng).unwrap();
        assert_eq!(set.len(), 2);
        for t in set {
            assert_eq!(t.id.0 & 0b1010, 0, "grid parameters stay untouched");
        }
    }

    #[test]
    fn exact_line_fit() {
        let s: Vec<_> = (1..=3).map(|i| sample(2.0 * i as f64, i as f64, 0, i)).collect();
        let m = fit(&s, ModelFamily::Linear).unwrap();
        assert_abs_diff_eq!(m.coeffs[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.coeffs[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        let s = vec![sample(1.0, 1.0, 2, 0), sample(2.0, 2.0, 2, 1)];
        assert!(matches!(fit(&s, ModelFamily::Quadratic), Err(Error::Underdetermined { .. })));
        let s: Vec<_> = (0..8).map(|i| sample(i as f64, i as f64 * 0.9, 3, i)).collect();
        assert!(matches!(fit(&s, ModelFamily::Nce), Err(Error::DegenerateFeature(_))));
    }

    #[test]
    fn rank_deficient_fit_is_minimum_norm() {
        // Every x equal: the design [x, 1] has rank one.
        let s: Vec<_> = (0..4).map(|i| sample(3.0, 2.0, 0, i)).collect();
        let m = fit(&s, ModelFamily::Linear).unwrap();
        // Minimum-norm solution of 2 a1 + a2 = 3 is a = (6, 3) / 5.
        assert_abs_diff_eq!(m.coeffs[0], 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(m.coeffs[1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn predictions() {
        let lin = RegressionModel::new(ModelFamily::Linear, vec![1.0, 0.0]).unwrap();
        assert_eq!(lin.predict(-1.7, 99), -1.7);
        let quad = RegressionModel::new(ModelFamily::Quadratic, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(quad.predict(-1.7, 0), -1.7);
        let nce = RegressionModel::new(ModelFamily::Nce, vec![0.3, 0.0, 0.0, -0.5, 0.0, 2.0]).unwrap();
        let q = RegressionModel::new(ModelFamily::Quadratic, vec![0.3, -0.5, 2.0]).unwrap();
        for k in [0, 4, 18] {
            assert_abs_diff_eq!(nce.predict(-2.2, k), q.predict(-2.2, k), epsilon = 1e-15);
        }
        assert!(RegressionModel::new(ModelFamily::Nce, vec![1.0]).is_err());
    }

    #[test]
    fn energy_sampling_picks_lowest() {
        let pool = vec![sample(3.0, 0.0, 1, 0), sample(1.0, 0.0, 1, 1), sample(2.0, 0.0, 1, 2)];
        let sel = energy_sampling_select(&pool, 2).unwrap();
        assert_eq!(sel.iter().map(|s| s.x_exact).collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert_eq!(energy_sampling_select(&pool, 3).unwrap().len(), 3);
        assert!(matches!(energy_sampling_select(&pool, 4), Err(Error::Domain(_))));

        let ties = vec![sample(1.0, 0.0, 1, 9), sample(1.0, 0.0, 1, 4)];
        assert_eq!(energy_sampling_select(&ties, 1).unwrap()[0].circuit_id, CircuitId(4));
    }

    #[test]
    fn training_plans() {
        assert_eq!(
            nce_training_plan(18, 1, 4, 40).unwrap(),
            vec![(1, 18), (2, 40), (3, 40), (4, 40)]
        );
        let plan = nce_training_plan(27, 1, 6, 1000).unwrap();
        assert_eq!(plan.iter().map(|p| p.1).collect::<Vec<_>>(), vec![27, 351, 1000, 1000, 1000, 1000]);
        assert!(nce_training_plan(18, 0, 4, 10).is_err());
        assert!(nce_training_plan(18, 5, 4, 10).is_err());
        assert!(nce_training_plan(18, 1, 18, 10).is_err());
    }

    #[test]
    fn substreams_differ_and_repeat() {
        let a: u64 = substream_rng(5, 0, 1).gen();
        let b: u64 = substream_rng(5, 1, 1).gen();
        let c: u64 = substream_rng(5, 0, 2).gen();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, substream_rng(5, 0, 1).gen::<u64>());
    }

    #[test]
    fn csv_layout() {
        let s = [sample(-1.5, -1.25, 3, 0x2a)];
        assert_eq!(training_csv(&s), "circuit_id,k,x_exact,x_noisy\n000000000000002a,3,-1.5,-1.25\n");
    }

    #[test]
    fn parallel_map_keeps_order_and_first_error() {
        let items: Vec<usize> = (0..50).collect();
        let out = par_map(&items, 4, |&i| Ok(i * i)).unwrap();
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
        let err = par_map(&items, 4, |&i| {
            if i % 7 == 3 {
                Err(Error::Domain(format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert!(matches!(err, Err(Error::Domain(m)) if m == "3"));
    }

    fn noisy_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-3.0f64..-1.0, -0.3f64..0.3), 6..40)
            .prop_map(|v| v.into_iter().map(|(e, d)| (e, 0.8 * e + d)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fitted_coefficients_are_rss_optimal(
            pairs in noisy_pairs(),
            family in prop_oneof![Just(ModelFamily::Linear), Just(ModelFamily::Quadratic)],
            seed in any::<u64>(),
        ) {
            let s: Vec<_> = pairs.iter().enumerate().map(|(i, &(e, x))| sample(e, x, 0, i as u64)).collect();
            let m = fit(&s, family).unwrap();
            let best = m.residual_sum_of_squares(&s);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let coeffs = m.coeffs.iter().map(|a| a + rng.gen_range(-1e-3..1e-3)).collect();
                let other = RegressionModel::new(family, coeffs).unwrap();
                prop_assert!(best <= other.residual_sum_of_squares(&s) + 1e-12);
            }
        }

        #[test]
        fn linear_fit_is_affine_equivariant(pairs in noisy_pairs(), shift in -2.0f64..2.0) {
            let s: Vec<_> = pairs.iter().enumerate().map(|(i, &(e, x))| sample(e, x, 0, i as u64)).collect();
            let shifted: Vec<_> = s.iter().map(|t| TrainingSample { x_noisy: t.x_noisy + shift, ..*t }).collect();
            let a = fit(&s, ModelFamily::Linear).unwrap();
            let b = fit(&shifted, ModelFamily::Linear).unwrap();
            prop_assert!((a.coeffs[0] - b.coeffs[0]).abs() < 1e-8);
            prop_assert!((b.coeffs[1] - (a.coeffs[1] - a.coeffs[0] * shift)).abs() < 1e-8);
            for t in &s {
                prop_assert!((a.predict(t.x_noisy, 0) - b.predict(t.x_noisy + shift, 0)).abs() < 1e-8);
            }
        }

        #[test]
        fn energy_sampling_of_whole_pool_matches_plain_fit(pairs in noisy_pairs()) {
            let s: Vec<_> = pairs.iter().enumerate().map(|(i, &(e, x))| sample(e, x, 0, i as u64)).collect();
            let sel = energy_sampling_select(&s, s.len()).unwrap();
            let a = fit(&s, ModelFamily::Linear).unwrap();
            let b = fit(&sel, ModelFamily::Linear).unwrap();
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

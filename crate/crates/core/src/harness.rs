//! Seeded experiment runner: for every grid point, `R` repeats of
//! generate → simulate → select → fit → predict, aggregated into CSV rows.
//!
//! Repeat `r` at retained count `k` draws its training subsets from
//! [`substream_rng`]`(seed, r, k)`. Grid points therefore share random
//! streams (common random numbers), so an `N = 50` set is a prefix of the
//! `N = 100` set for the same repeat and an energy-sampling pool of size `M`
//! is a prefix of every larger pool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cdr::{
    fit, generate_training_set, lowest_n, nce_training_plan, substream_rng, Evaluator, ModelFamily,
    TrainingCircuit, TrainingSample,
};
use crate::circuit::Circuit;
use crate::config::{ExperimentConfig, Method, Point, ThetaSource};
use crate::error::{Error, Result};
use crate::hamiltonian::{jordan_wigner, load_fcidump};
use crate::pauli::PauliSum;
use crate::tups::{build_tups, TupsSpec};
use crate::vqe::{optimize, read_angles, VqeResult};

pub const RESULT_HEADER: &str = "scan,mean_abs_error,std,mean_predicted,unmitigated_error,repeats";
pub const POOL_HEADER: &str = "scan,mean_exact,mean_noisy,std_exact,std_noisy,samples";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scan: usize,
    /// Mean of `|predicted − exact|` over the successful repeats.
    pub mean_abs_error: f64,
    /// Sample standard deviation of the predicted values (0 for one repeat).
    pub std: f64,
    pub mean_predicted: f64,
    /// `|noisy − exact|` of the target circuit.
    pub unmitigated_error: f64,
    pub repeats: usize,
    /// Set when fewer than the configured repeats succeeded.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolRow {
    pub scan: usize,
    pub mean_exact: f64,
    pub mean_noisy: f64,
    pub std_exact: f64,
    pub std_noisy: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Errors(Vec<ResultRow>),
    Pool(Vec<PoolRow>),
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            ExperimentOutput::Errors(rows) => {
                writeln!(out, "{RESULT_HEADER}").unwrap();
                for r in rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.scan, r.mean_abs_error, r.std, r.mean_predicted, r.unmitigated_error, r.repeats
                    )
                    .unwrap();
                }
            }
            ExperimentOutput::Pool(rows) => {
                writeln!(out, "{POOL_HEADER}").unwrap();
                for r in rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.scan, r.mean_exact, r.mean_noisy, r.std_exact, r.std_noisy, r.samples
                    )
                    .unwrap();
                }
            }
        }
        out
    }

    pub fn error_rows(&self) -> Option<&[ResultRow]> {
        match self {
            ExperimentOutput::Errors(r) => Some(r),
            ExperimentOutput::Pool(_) => None,
        }
    }

    pub fn pool_rows(&self) -> Option<&[PoolRow]> {
        match self {
            ExperimentOutput::Pool(r) => Some(r),
            ExperimentOutput::Errors(_) => None,
        }
    }
}

/// Hamiltonian, ansatz and optimized target shared by the experiments of
/// one configuration, with the simulation cache.
#[derive(Debug)]
pub struct Prepared {
    pub hamiltonian: PauliSum,
    pub e_core: f64,
    pub target: Circuit,
    pub evaluator: Evaluator,
    /// Present when the angles were optimized rather than loaded.
    pub vqe: Option<VqeResult>,
    layers: usize,
    fcidump: PathBuf,
}

/// Loads the Hamiltonian and builds the zero-angle tUPS circuit.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<(PauliSum, f64, Circuit)> {
    let ints = load_fcidump(cfg.fcidump_path())?;
    let h = jordan_wigner(&ints)?;
    let mut spec = TupsSpec::new(ints.n_orbitals(), cfg.ansatz.layers);
    if let Some(ne) = ints.n_electrons() {
        spec.n_electrons = ne;
    }
    let circuit = build_tups(&spec)?;
    Ok((h, ints.e_core(), circuit))
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let (hamiltonian, e_core, circuit) = load_problem(cfg)?;
        let (theta, vqe) = match cfg.theta.source {
            ThetaSource::File => {
                let path = cfg.theta_path().expect("validated");
                (read_angles(&path)?, None)
            }
            ThetaSource::Optimize => {
                let r = optimize(&circuit, &hamiltonian, None, &cfg.vqe)?;
                (r.theta_opt.clone(), Some(r))
            }
        };
        if theta.len() != circuit.n_params() {
            return Err(Error::Config(format!(
                "angle table has {} values but the {}-layer ansatz has {} parameters",
                theta.len(),
                cfg.ansatz.layers,
                circuit.n_params()
            )));
        }
        let target = circuit.with_params(&theta)?;
        let evaluator = Evaluator::new(target.clone(), hamiltonian.clone(), cfg.noise)?;
        let p = Self {
            hamiltonian,
            e_core,
            target,
            evaluator,
            vqe,
            layers: cfg.ansatz.layers,
            fcidump: cfg.fcidump_path(),
        };
        p.check(cfg)?;
        Ok(p)
    }

    /// Non-Clifford parameter count `n` of the target.
    pub fn n(&self) -> usize {
        self.evaluator.n_non_clifford()
    }

    /// Checks that `cfg` targets this problem and its grid fits `n`.
    pub fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        if cfg.ansatz.layers != self.layers
            || cfg.fcidump_path() != self.fcidump
            || cfg.noise != *self.evaluator.noise()
        {
            return Err(Error::Config(format!(
                "experiment {} does not share the prepared Hamiltonian, ansatz and noise",
                cfg.experiment.name
            )));
        }
        let n = self.n();
        for &v in &cfg.scan.values {
            let p = cfg.point(v)?;
            let too_big = match cfg.experiment.method {
                Method::Nce => p.k_max >= n,
                Method::None => false,
                _ => p.k > n,
            };
            if too_big {
                return Err(Error::Config(format!(
                    "grid point {v} asks for more non-Clifford parameters than the target's n = {n}"
                )));
            }
        }
        Ok(())
    }

    fn fit_and_predict(&self, samples: &[TrainingSample], family: ModelFamily) -> Result<f64> {
        let model = fit(samples, family)?;
        Ok(model.predict(self.evaluator.target_noisy()?, self.n()))
    }

    /// Mitigated prediction for one repeat at one grid point.
    pub fn predict(&self, cfg: &ExperimentConfig, p: &Point, repeat: u32) -> Result<f64> {
        let ev = &self.evaluator;
        let e = &cfg.experiment;
        let mode = e.mode;
        let rng = |k: usize| substream_rng(e.seed, repeat, k as u32);
        match e.method {
            Method::None => ev.target_noisy(),
            Method::Traditional => {
                let set = generate_training_set(&self.target, p.k, p.n, mode, &mut rng(p.k))?;
                self.fit_and_predict(&ev.build_samples(&set)?, e.model)
            }
            Method::Es => {
                let pool = generate_training_set(&self.target, p.k, p.m, mode, &mut rng(p.k))?;
                let exact = ev.exact_values(&pool)?;
                let ranked: Vec<(f64, usize)> = exact.iter().copied().zip(0..).collect();
                // Only the selected circuits are run on the noisy simulator.
                let chosen = lowest_n(&ranked, p.n.min(pool.len()), |&(x, i)| (x, pool[i].id))?;
                let selected: Vec<TrainingCircuit> = chosen.iter().map(|&(_, i)| pool[i].clone()).collect();
                self.fit_and_predict(&ev.build_samples(&selected)?, e.model)
            }
            Method::Nce => {
                let mut set = Vec::new();
                for (k, ns) in nce_training_plan(self.n(), p.k_min, p.k_max, p.n)? {
                    set.extend(generate_training_set(&self.target, k, ns, mode, &mut rng(k))?);
                }
                self.fit_and_predict(&ev.build_samples(&set)?, ModelFamily::Nce)
            }
            Method::Pool => Err(Error::Config("pool experiments have no prediction".into())),
        }
    }

    /// Training pools of every repeat at one grid point, for pool statistics.
    pub fn pool_samples(&self, cfg: &ExperimentConfig, p: &Point) -> Result<Vec<TrainingSample>> {
        let e = &cfg.experiment;
        let mut all = Vec::new();
        for r in 0..e.repeats as u32 {
            let mut rng = substream_rng(e.seed, r, p.k as u32);
            let set = generate_training_set(&self.target, p.k, p.n, e.mode, &mut rng)?;
            all.extend(self.evaluator.build_samples(&set)?);
        }
        Ok(all)
    }

    /// Runs every grid point of `cfg` on this prepared problem.
    pub fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        cfg.validate()?;
        self.check(cfg)?;
        let exact = self.evaluator.target_exact()?;
        let unmitigated = (self.evaluator.target_noisy()? - exact).abs();
        if cfg.experiment.method == Method::Pool {
            let mut rows = Vec::new();
            for &v in &cfg.scan.values {
                let s = self.pool_samples(cfg, &cfg.point(v)?)?;
                let ex: Vec<f64> = s.iter().map(|t| t.x_exact).collect();
                let no: Vec<f64> = s.iter().map(|t| t.x_noisy).collect();
                rows.push(PoolRow {
                    scan: v,
                    mean_exact: mean(&ex),
                    mean_noisy: mean(&no),
                    std_exact: sample_std(&ex),
                    std_noisy: sample_std(&no),
                    samples: s.len(),
                });
            }
            return Ok(ExperimentOutput::Pool(rows));
        }
        let mut rows = Vec::new();
        for &v in &cfg.scan.values {
            let p = cfg.point(v)?;
            let mut predicted = Vec::new();
            for r in 0..cfg.experiment.repeats as u32 {
                match self.predict(cfg, &p, r) {
                    Ok(x) => predicted.push(x),
                    Err(err) => eprintln!(
                        "warning: {} scan {v} repeat {r} failed: {err}",
                        cfg.experiment.name
                    ),
                }
            }
            let errors: Vec<f64> = predicted.iter().map(|x| (x - exact).abs()).collect();
            rows.push(ResultRow {
                scan: v,
                mean_abs_error: mean(&errors),
                std: sample_std(&predicted),
                mean_predicted: mean(&predicted),
                unmitigated_error: unmitigated,
                repeats: predicted.len(),
                flagged: predicted.len() < cfg.experiment.repeats,
            });
        }
        Ok(ExperimentOutput::Errors(rows))
    }
}

/// Prepares and runs one configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    Prepared::new(cfg)?.run(cfg)
}

/// Where the result CSV of `cfg` goes: `experiment.output` (default
/// `<name>.csv`), placed under `out_dir` when given, else next to the config.
pub fn output_path(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> PathBuf {
    let file = cfg
        .experiment
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment.name)));
    match out_dir {
        Some(d) => d.join(file.file_name().map(PathBuf::from).unwrap_or(file)),
        None => cfg.resolve(&file),
    }
}

/// Gnuplot script drawing the CSV written for `cfg`.
pub fn plot_script(cfg: &ExperimentConfig, csv_name: &str) -> String {
    let title = &cfg.experiment.name;
    let var = cfg.scan.variable;
    let stem = csv_name.trim_end_matches(".csv");
    if cfg.experiment.method == Method::Pool {
        format!(
            "set datafile separator ','\nset terminal pngcairo size 800,500\nset output '{stem}.png'\n\
             set title '{title}'\nset xlabel '{var}'\nset ylabel 'energy (Ha)'\n\
             plot '{csv_name}' skip 1 using 1:2 with linespoints title 'exact', \\\n     \
             '' skip 1 using 1:3 with linespoints title 'noisy'\n"
        )
    } else {
        format!(
            "set datafile separator ','\nset terminal pngcairo size 800,500\nset output '{stem}.png'\n\
             set title '{title}'\nset xlabel '{var}'\nset ylabel 'absolute error (Ha)'\n\
             plot '{csv_name}' skip 1 using 1:2:3 with yerrorlines title 'mitigated', \\\n     \
             '' skip 1 using 1:5 with lines dashtype 2 title 'unmitigated'\n"
        )
    }
}

/// Writes the CSV and its plot script; returns the CSV path.
pub fn write_output(cfg: &ExperimentConfig, out: &ExperimentOutput, out_dir: Option<&Path>) -> Result<PathBuf> {
    let path = output_path(cfg, out_dir);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&path, out.to_csv()).map_err(|e| Error::io(&path, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("results.csv");
    let gp = path.with_extension("gp");
    std::fs::write(&gp, plot_script(cfg, name)).map_err(|e| Error::io(&gp, e))?;
    Ok(path)
}

/// Runs several configurations on a shared problem and aligns their rows.
///
/// The configurations must share Hamiltonian, ansatz, angles, noise, seed
/// and scan grid. Output columns are `scan` followed by
/// `<name>_mean_abs_error,<name>_std,<name>_unmitigated_error` per config.
pub fn compare_methods(cfgs: &[ExperimentConfig]) -> Result<String> {
    let Some(first) = cfgs.first() else {
        return Err(Error::Config("nothing to compare".into()));
    };
    for c in &cfgs[1..] {
        let same = c.fcidump_path() == first.fcidump_path()
            && c.ansatz == first.ansatz
            && c.theta.source == first.theta.source
            && c.theta_path() == first.theta_path()
            && c.noise == first.noise
            && c.experiment.seed == first.experiment.seed
            && c.scan == first.scan;
        if !same {
            return Err(Error::Config(format!(
                "{} and {} differ in problem, noise, seed or scan axis",
                first.experiment.name, c.experiment.name
            )));
        }
    }
    if let Some(c) = cfgs.iter().find(|c| c.experiment.method == Method::Pool) {
        return Err(Error::Config(format!("{} is a pool experiment", c.experiment.name)));
    }
    let prepared = Prepared::new(first)?;
    let mut results = Vec::new();
    for c in cfgs {
        let out = prepared.run(c)?;
        results.push(out.error_rows().expect("error rows").to_vec());
    }
    let mut csv = String::from("scan");
    for c in cfgs {
        let n = &c.experiment.name;
        write!(csv, ",{n}_mean_abs_error,{n}_std,{n}_unmitigated_error").unwrap();
    }
    csv.push('\n');
    for (i, &v) in first.scan.values.iter().enumerate() {
        write!(csv, "{v}").unwrap();
        for rows in &results {
            let r = &rows[i];
            write!(csv, ",{},{},{}", r.mean_abs_error, r.std, r.unmitigated_error).unwrap();
        }
        csv.push('\n');
    }
    Ok(csv)
}

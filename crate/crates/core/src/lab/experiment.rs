use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classical::{classical_local_time, crossing_time_reference, q_statistic};
use super::generator::GeneratorSpec;
use crate::crossing::{k_pi_level, occupation_local_time};
use crate::dc::FunctionDescriptor;
use crate::error::{Error, Result};
use crate::field::{lp_distance, LevelFunction};
use crate::path::{LevelGrid, PartitionScheme, SampledCadlagPath};
use crate::skorokhod::interval_crossing_local_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    /// `K^{π^n}` along dyadic partitions, compared with `𝓛/2 + J`.
    #[serde(rename = "K_pi")]
    KPi,
    /// `(1/2ε) ∫ 1_{|x - u| <= ε} d[x]^c` with bandwidths from the ladder.
    #[serde(rename = "occupation")]
    Occupation,
    /// `c n^{z,c}` with widths from the ladder.
    #[serde(rename = "interval_crossing")]
    IntervalCrossing,
    /// `∫ |Q^{z,d}| dz`, reported directly.
    #[serde(rename = "q_statistic")]
    QStatistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Distance {
    #[serde(rename = "L1_levelgrid")]
    L1LevelGrid,
    /// `L^p(|f''|(du))`.
    #[serde(rename = "Lp_f2measure")]
    LpF2Measure { p: f64, function: FunctionDescriptor },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub estimator: Estimator,
    #[serde(default = "default_distance")]
    pub distance: Distance,
    /// Dyadic levels for `K_pi`, widths or bandwidths otherwise.
    pub ladder: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_du")]
    pub grid_du: f64,
    /// Evaluation time; defaults to the horizon.
    #[serde(default)]
    pub t: Option<f64>,
}

fn default_distance() -> Distance {
    Distance::L1LevelGrid
}

fn default_du() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub level: f64,
    pub paths: usize,
    pub mean: f64,
    pub std_error: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub estimator: Estimator,
    pub rows: Vec<ReportRow>,
    /// Per-path distances, one vector per ladder level.
    pub samples: Vec<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.paths == 0 {
            return Err(Error::config("experiment needs at least one path"));
        }
        if self.ladder.is_empty() {
            return Err(Error::config("empty refinement ladder"));
        }
        if !(self.grid_du > 0.0) {
            return Err(Error::config("grid_du must be positive"));
        }
        match self.estimator {
            Estimator::KPi => {
                let steps = self.generator.total_steps();
                for &n in &self.ladder {
                    if n < 0.0 || n.fract() != 0.0 || (1usize << (n as u32).min(62)) > steps {
                        return Err(Error::config(format!(
                            "dyadic level {n} needs an integer with 2^n <= {steps}"
                        )));
                    }
                }
            }
            _ => {
                if self.ladder.iter().any(|c| !(*c > 0.0)) {
                    return Err(Error::config("widths must be positive"));
                }
            }
        }
        if let Distance::LpF2Measure { p, function } = &self.distance {
            if !(*p >= 1.0) {
                return Err(Error::config("p must be at least 1"));
            }
            function.build()?;
        }
        if let Some(t) = self.t {
            if !(t > 0.0 && t <= self.generator.horizon) {
                return Err(Error::config(format!("t = {t} outside (0, horizon]")));
            }
        }
        Ok(())
    }

    fn eval_time(&self) -> f64 {
        self.t.unwrap_or(self.generator.horizon)
    }

    fn grid_for(&self, path: &SampledCadlagPath) -> Result<LevelGrid> {
        let margin = match self.estimator {
            Estimator::KPi => 2.0 * self.grid_du,
            _ => self.ladder.iter().copied().fold(0.0, f64::max) + 2.0 * self.grid_du,
        };
        LevelGrid::for_path(path, self.grid_du, Some(margin))
    }

    fn distance(&self, a: &LevelFunction, b: &LevelFunction) -> Result<f64> {
        match &self.distance {
            Distance::L1LevelGrid => lp_distance(a, b, 1.0, None),
            Distance::LpF2Measure { p, function } => lp_distance(a, b, *p, Some(&function.build()?)),
        }
    }

    /// Distances of one path, one per ladder level.
    pub fn evaluate_path(&self, index: u64) -> Result<Vec<f64>> {
        let spec = GeneratorSpec { seed: self.seed, ..self.generator.clone() };
        let path = spec.generate_indexed(index)?;
        let t = self.eval_time();
        let grid = self.grid_for(&path)?;
        let out = match self.estimator {
            Estimator::KPi => {
                let levels: Vec<u32> = self.ladder.iter().map(|n| *n as u32).collect();
                let scheme = PartitionScheme::dyadic(&path, &levels, false)?;
                let reference = crossing_time_reference(&path, t, &grid);
                (0..levels.len())
                    .map(|n| {
                        let k = k_pi_level(&path, scheme.level(n)?, t, &grid);
                        self.distance(&k, &reference)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Estimator::Occupation => {
                let reference = classical_local_time(&path, t, &grid).field;
                self.ladder
                    .iter()
                    .map(|&eps| self.distance(&occupation_local_time(&path, t, eps, &grid)?, &reference))
                    .collect::<Result<Vec<_>>>()?
            }
            Estimator::IntervalCrossing => {
                let reference = classical_local_time(&path, t, &grid).field;
                let mut out = Vec::with_capacity(self.ladder.len());
                for &c in &self.ladder {
                    let est = interval_crossing_local_time(&path, t, &[c], &grid)?;
                    out.push(self.distance(&est[0], &reference)?);
                }
                out
            }
            Estimator::QStatistic => self
                .ladder
                .iter()
                .map(|&d| q_statistic(&path, t, &grid, d))
                .collect::<Result<Vec<_>>>()?,
        };
        if let Some(bad) = out.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::Invariant(format!("path {index}: distance {bad} is not a finite nonnegative number")));
        }
        Ok(out)
    }
}

/// Worker pool honouring `LOCALTIME_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("LOCALTIME_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("LOCALTIME_THREADS={v} is not a positive integer")))?;
        if n == 0 {
            return Err(Error::config("LOCALTIME_THREADS must be positive"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::config(e.to_string()))
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every path in parallel and reduces in path order, so the report is
/// identical for any number of workers. Wall-clock is split evenly across
/// ladder levels.
pub fn run_convergence_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let pool = thread_pool()?;
    let start = Instant::now();
    let per_path: Vec<Vec<f64>> = pool.install(|| {
        (0..config.paths as u64)
            .into_par_iter()
            .map(|i| config.evaluate_path(i))
            .collect::<Result<Vec<_>>>()
    })?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3 / config.ladder.len() as f64;
    let samples: Vec<Vec<f64>> =
        (0..config.ladder.len()).map(|l| per_path.iter().map(|row| row[l]).collect()).collect();
    let rows = config
        .ladder
        .iter()
        .zip(&samples)
        .map(|(&level, xs)| {
            let (mean, std_error) = mean_and_se(xs);
            ReportRow { level, paths: xs.len(), mean, std_error, wall_ms }
        })
        .collect();
    Ok(ExperimentReport { estimator: config.estimator, rows, samples })
}

impl ExperimentReport {
    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean).collect()
    }

    /// Summary CSV: `level,paths,mean,std_error,wall_ms`.
    pub fn write_csv<W: Write>(&self, sink: W, with_wall_clock: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["level", "paths", "mean", "std_error", "wall_ms"])?;
        for r in &self.rows {
            let wall = if with_wall_clock { format!("{}", r.wall_ms) } else { String::new() };
            w.write_record([
                format!("{}", r.level),
                r.paths.to_string(),
                format!("{}", r.mean),
                format!("{}", r.std_error),
                wall,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format, one row per (level, path): `estimator,level,path,value`.
    pub fn write_long_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["estimator", "level", "path", "value"])?;
        let name = serde_json::to_value(self.estimator)?;
        let name = name.as_str().unwrap_or_default().to_string();
        for (r, xs) in self.rows.iter().zip(&self.samples) {
            for (i, v) in xs.iter().enumerate() {
                w.write_record([name.clone(), format!("{}", r.level), i.to_string(), format!("{v}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

//! Level-indexed functions and time-by-level local-time fields.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dc::DcFunction;
use crate::error::{Error, Result};
use crate::path::LevelGrid;

/// How a value relates to its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Exact average over the cell centred on the node.
    CellAverage,
    /// Point value at the node.
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    K,
    Kc,
    J,
    LOccupation,
    LInterval,
    LClassical,
    /// `𝕃 = 𝓛/2 + J`, the limit of the level-crossing times.
    KClassical,
    /// `L = 2 Kc` estimated from crossing times.
    LCrossing,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::K => "K",
            Self::Kc => "Kc",
            Self::J => "J",
            Self::LOccupation => "L_occupation",
            Self::LInterval => "L_interval",
            Self::LClassical => "L_classical",
            Self::KClassical => "K_classical",
            Self::LCrossing => "L_crossing",
        };
        f.write_str(s)
    }
}

/// One function of the level variable, discretised on a [`LevelGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFunction {
    pub grid: LevelGrid,
    pub values: Vec<f64>,
    pub sampling: Sampling,
}

impl LevelFunction {
    pub fn zeros(grid: LevelGrid, sampling: Sampling) -> Self {
        Self { values: vec![0.0; grid.len()], grid, sampling }
    }

    pub fn from_fn(grid: LevelGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.nodes().map(f).collect(), grid, sampling: Sampling::Node }
    }

    /// `∫ g(u) du` as a Riemann sum over cells.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.grid.spacing()).powf(1.0 / p)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Variation along the level axis.
    pub fn variation(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        inner + v.first().map_or(0.0, |a| a.abs()) + v.last().map_or(0.0, |a| a.abs())
    }

    /// Value of the cell containing `u`, zero outside the window.
    pub fn value_at(&self, u: f64) -> f64 {
        self.grid.cell_of(u).map_or(0.0, |k| self.values[k])
    }

    pub fn check_same_grid(&self, other: &LevelFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn map2(&self, other: &LevelFunction, f: impl Fn(f64, f64) -> f64) -> Result<LevelFunction> {
        self.check_same_grid(other)?;
        Ok(LevelFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
            sampling: self.sampling,
        })
    }

    pub fn scaled(&self, s: f64) -> LevelFunction {
        LevelFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
            sampling: self.sampling,
        }
    }
}

/// `(Σ |a-b|^p w Δu)^{1/p}`. With `weight = None` the measure is Lebesgue;
/// otherwise it is `|f''|`, density mass taken per cell and each atom
/// charged to the cell containing it.
pub fn lp_distance(
    a: &LevelFunction,
    b: &LevelFunction,
    p: f64,
    weight: Option<&DcFunction>,
) -> Result<f64> {
    a.check_same_grid(b)?;
    if !(p >= 1.0) {
        return Err(Error::domain(format!("p must be at least 1, got {p}")));
    }
    let grid = &a.grid;
    let diff = |k: usize| (a.values[k] - b.values[k]).abs().powf(p);
    let sum = match weight {
        None => (0..grid.len()).map(diff).sum::<f64>() * grid.spacing(),
        Some(f) => {
            let m = f.second();
            let mut s = 0.0;
            if m.has_density() {
                for k in 0..grid.len() {
                    s += diff(k) * m.abs_mass(grid.cell_lo(k), grid.cell_lo(k + 1));
                }
            }
            for atom in m.atoms() {
                if let Some(k) = grid.cell_of(atom.loc) {
                    s += diff(k) * atom.weight.abs();
                }
            }
            s
        }
    };
    Ok(sum.powf(1.0 / p))
}

/// Values per (time, level) for one kind of local time.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    pub kind: FieldKind,
    pub grid: LevelGrid,
    pub sampling: Sampling,
    pub times: Vec<f64>,
    pub data: Vec<Vec<f64>>,
}

impl LocalTimeField {
    pub fn from_functions(kind: FieldKind, times: Vec<f64>, fns: Vec<LevelFunction>) -> Result<Self> {
        let first = fns.first().ok_or_else(|| Error::domain("field needs at least one time"))?;
        if times.len() != fns.len() {
            return Err(Error::domain("one level function per time required"));
        }
        let (grid, sampling) = (first.grid, first.sampling);
        if fns.iter().any(|f| f.grid != grid) {
            return Err(Error::GridMismatch("level functions on different grids".into()));
        }
        Ok(Self { kind, grid, sampling, times, data: fns.into_iter().map(|f| f.values).collect() })
    }

    pub fn at(&self, i: usize) -> LevelFunction {
        LevelFunction { grid: self.grid, values: self.data[i].clone(), sampling: self.sampling }
    }

    /// Every value nonnegative and nondecreasing in time at every level.
    pub fn is_monotone_nonnegative(&self, tol: f64) -> bool {
        self.data.iter().all(|row| row.iter().all(|v| *v >= -tol))
            && self
                .data
                .windows(2)
                .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| *b >= *a - tol))
    }

    /// Long-format CSV: `t,u,value,kind`.
    pub fn write_csv<W: Write>(&self, sink: W, with_header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        if with_header {
            w.write_record(["t", "u", "value", "kind"])?;
        }
        let kind = self.kind.to_string();
        for (t, row) in self.times.iter().zip(&self.data) {
            for (k, v) in row.iter().enumerate() {
                w.write_record([
                    format!("{t}"),
                    format!("{}", self.grid.node(k)),
                    format!("{v}"),
                    kind.clone(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

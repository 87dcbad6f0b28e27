//! Sampled càdlàg paths, partitions of the sample grid, and the level grid
//! on which local-time fields are discretised.
//!
//! A [`SampledCadlagPath`] is read as a step function that moves at its
//! sample instants. Increments flagged as jumps carry the left limit
//! `x_{t-}`; every other increment is continuous motion at grid resolution.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a marked jump together with its left limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMark {
    pub index: usize,
    pub pre_jump_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCadlagPath {
    times: Vec<f64>,
    values: Vec<f64>,
    jumps: Vec<JumpMark>,
    marked: Vec<bool>,
}

impl SampledCadlagPath {
    /// Builds a path from samples and the indices of increments that are jumps.
    pub fn new(times: Vec<f64>, values: Vec<f64>, jump_indices: &[usize]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidPath("need at least two samples".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPath(format!("first time is {}, expected 0", times[0])));
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidPath(format!(
                    "times not strictly increasing at row {}",
                    i + 1
                )));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite value at row {i}")));
        }
        let mut marked = vec![false; times.len()];
        for &i in jump_indices {
            if i == 0 || i >= times.len() {
                return Err(Error::InvalidPath(format!("jump mark at invalid index {i}")));
            }
            marked[i] = true;
        }
        let jumps = marked
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| JumpMark { index: i, pre_jump_value: values[i - 1] })
            .collect();
        Ok(Self { times, values, jumps, marked })
    }

    /// Uniform grid on `[0, horizon]` with `values.len() - 1` steps.
    pub fn uniform(horizon: f64, values: Vec<f64>, jump_indices: &[usize]) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::domain("horizon must be positive"));
        }
        let steps = values.len().saturating_sub(1).max(1);
        let times = (0..values.len()).map(|i| horizon * i as f64 / steps as f64).collect();
        Self::new(times, values, jump_indices)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("path has samples")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[JumpMark] {
        &self.jumps
    }

    pub fn is_jump(&self, index: usize) -> bool {
        self.marked[index]
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index of the last sample with time `<= t` (0 when `t` precedes the grid).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.index_at(t)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The path on `[0, t]`. When `t` is not a sample instant a final sample
    /// holding the last value is appended so the horizon becomes `t`.
    pub fn restrict(&self, t: f64) -> Result<Self> {
        let horizon = self.horizon();
        if !(t > 0.0 && t <= horizon) {
            return Err(Error::domain(format!("restriction time {t} outside (0, {horizon}]")));
        }
        let last = self.index_at(t);
        let mut times = self.times[..=last].to_vec();
        let mut values = self.values[..=last].to_vec();
        if times[last] < t {
            times.push(t);
            values.push(values[last]);
        }
        let marked: Vec<usize> =
            self.jumps.iter().map(|j| j.index).filter(|&i| i <= last).collect();
        Self::new(times, values, &marked)
    }

    /// `(time, Δx)` for every marked jump, in time order.
    pub fn jump_sizes(&self) -> Vec<(f64, f64)> {
        self.jumps
            .iter()
            .map(|j| (self.times[j.index], self.values[j.index] - j.pre_jump_value))
            .collect()
    }

    /// `[x]^d_T = Σ (Δx)²` over marked jumps.
    pub fn jump_quadratic_variation(&self) -> f64 {
        self.jump_sizes().iter().map(|(_, d)| d * d).sum()
    }

    /// Sum of squared unmarked increments.
    pub fn continuous_quadratic_variation(&self) -> f64 {
        (1..self.len())
            .filter(|&i| !self.marked[i])
            .map(|i| (self.values[i] - self.values[i - 1]).powi(2))
            .sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Increment `values[i] - values[i-1]`.
    #[inline]
    pub fn increment(&self, i: usize) -> f64 {
        self.values[i] - self.values[i - 1]
    }

    /// Sample-index pairs `(t_j ∧ t, t_{j+1} ∧ t)` for the partition points
    /// `t_j < t` of `level`, mapped to the last sample at or before each time.
    pub fn clipped_intervals<'a>(
        &'a self,
        level: &'a [usize],
        t: f64,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        let end = self.index_at(t);
        level
            .windows(2)
            .take_while(move |w| self.times[w[0]] < t)
            .map(move |w| (w[0], w[1].min(end)))
    }

    /// Sum of marked jump sizes at indices in `(a, b]`.
    pub fn jump_sum_between(&self, a: usize, b: usize) -> f64 {
        let first = self.jumps.partition_point(|j| j.index <= a);
        self.jumps[first..]
            .iter()
            .take_while(|j| j.index <= b)
            .map(|j| self.values[j.index] - j.pre_jump_value)
            .sum()
    }

    /// Marked jumps with time `<= t`.
    pub fn jumps_until(&self, t: f64) -> &[JumpMark] {
        let end = self.index_at(t);
        let n = self.jumps.partition_point(|j| j.index <= end);
        &self.jumps[..n]
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["t", "x", "jump", "pre_x"])?;
        for i in 0..self.len() {
            let (flag, pre) = if self.marked[i] {
                ("1", format!("{}", self.values[i - 1]))
            } else {
                ("0", String::new())
            };
            w.write_record([
                format!("{}", self.times[i]),
                format!("{}", self.values[i]),
                flag.to_string(),
                pre,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            x: f64,
            jump: u8,
            pre_x: Option<f64>,
        }
        let mut rdr = csv::Reader::from_reader(source);
        let mut times = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut marks = Vec::new();
        for (row_no, rec) in rdr.deserialize::<Row>().enumerate() {
            let row = rec?;
            match row.jump {
                0 => {}
                1 => {
                    let pre = row.pre_x.ok_or_else(|| {
                        Error::InvalidPath(format!("row {row_no}: jump without pre_x"))
                    })?;
                    let prev = values.last().copied().ok_or_else(|| {
                        Error::InvalidPath("jump marked on the first row".into())
                    })?;
                    if pre != prev {
                        return Err(Error::InvalidPath(format!(
                            "row {row_no}: pre_x {pre} differs from previous x {prev}"
                        )));
                    }
                    marks.push(row_no);
                }
                other => {
                    return Err(Error::InvalidPath(format!(
                        "row {row_no}: jump flag must be 0 or 1, got {other}"
                    )))
                }
            }
            times.push(row.t);
            values.push(row.x);
        }
        if times.is_empty() {
            return Err(Error::InvalidPath("empty path file".into()));
        }
        Self::new(times, values, &marks)
    }
}

/// Serializable description of a partition scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionDescriptor {
    /// Level `n` uses the times `k T / 2^n`.
    Dyadic {
        levels: Vec<u32>,
        #[serde(default)]
        include_jumps: bool,
    },
    /// Level with `m` intervals uses the times `k T / m`.
    Uniform {
        counts: Vec<usize>,
        #[serde(default)]
        include_jumps: bool,
    },
    Explicit { levels: Vec<Vec<f64>> },
    /// The full sample grid, as a single level.
    Full,
}

impl PartitionDescriptor {
    pub fn build(&self, path: &SampledCadlagPath) -> Result<PartitionScheme> {
        match self {
            Self::Dyadic { levels, include_jumps } => {
                PartitionScheme::dyadic(path, levels, *include_jumps)
            }
            Self::Uniform { counts, include_jumps } => {
                PartitionScheme::uniform(path, counts, *include_jumps)
            }
            Self::Explicit { levels } => PartitionScheme::explicit(path, levels),
            Self::Full => Ok(PartitionScheme::full_grid(path)),
        }
    }
}

/// A family of partitions of `[0, T]`, each a subset of the sample grid
/// stored as sample indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionScheme {
    levels: Vec<Vec<usize>>,
    labels: Vec<u32>,
    refining: bool,
    exhausts_jumps: bool,
}

impl PartitionScheme {
    pub fn from_indices(
        path: &SampledCadlagPath,
        levels: Vec<Vec<usize>>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if levels.is_empty() || levels.len() != labels.len() {
            return Err(Error::InvalidPartition("need one label per non-empty level".into()));
        }
        let last = path.len() - 1;
        for (n, lvl) in levels.iter().enumerate() {
            if lvl.len() < 2 || lvl[0] != 0 || *lvl.last().unwrap() != last {
                return Err(Error::InvalidPartition(format!(
                    "level {n} must start at 0 and end at T"
                )));
            }
            if lvl.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidPartition(format!("level {n} not strictly increasing")));
            }
        }
        let meshes: Vec<f64> = levels.iter().map(|l| mesh_of(path, l)).collect();
        if let Some(n) = meshes.windows(2).position(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(Error::InvalidPartition(format!(
                "mesh increases from level {n} to level {}",
                n + 1
            )));
        }
        let refining = levels.windows(2).all(|w| is_subset(&w[0], &w[1]));
        let finest = levels.last().unwrap();
        let exhausts_jumps =
            path.jumps().iter().all(|j| finest.binary_search(&j.index).is_ok());
        Ok(Self { levels, labels, refining, exhausts_jumps })
    }

    pub fn full_grid(path: &SampledCadlagPath) -> Self {
        let all: Vec<usize> = (0..path.len()).collect();
        Self::from_indices(path, vec![all], vec![0]).expect("full grid is a valid partition")
    }

    pub fn dyadic(path: &SampledCadlagPath, levels: &[u32], include_jumps: bool) -> Result<Self> {
        let idx = levels
            .iter()
            .map(|&n| {
                let m = 1usize
                    .checked_shl(n)
                    .ok_or_else(|| Error::InvalidPartition(format!("dyadic level {n} too large")))?;
                Ok(snap_uniform(path, m, include_jumps))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(path, idx, levels.to_vec())
    }

    pub fn uniform(path: &SampledCadlagPath, counts: &[usize], include_jumps: bool) -> Result<Self> {
        if counts.contains(&0) {
            return Err(Error::InvalidPartition("uniform count must be positive".into()));
        }
        let idx = counts.iter().map(|&m| snap_uniform(path, m, include_jumps)).collect();
        Self::from_indices(path, idx, counts.iter().map(|&c| c as u32).collect())
    }

    pub fn explicit(path: &SampledCadlagPath, levels: &[Vec<f64>]) -> Result<Self> {
        let times = path.times();
        let tol = 1e-12 * path.horizon();
        let idx = levels
            .iter()
            .map(|lvl| {
                lvl.iter()
                    .map(|&t| {
                        let i = times.partition_point(|&s| s <= t + tol).saturating_sub(1);
                        if (times[i] - t).abs() > tol {
                            Err(Error::InvalidPartition(format!("time {t} is not a sample instant")))
                        } else {
                            Ok(i)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..idx.len() as u32).collect();
        Self::from_indices(path, idx, labels)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Sample indices of the level at position `n` in the scheme.
    pub fn level(&self, n: usize) -> Result<&[usize]> {
        self.levels
            .get(n)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidPartition(format!("no level at position {n}")))
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn is_refining(&self) -> bool {
        self.refining
    }

    pub fn exhausts_jumps(&self) -> bool {
        self.exhausts_jumps
    }

    pub fn mesh(&self, path: &SampledCadlagPath, n: usize) -> Result<f64> {
        Ok(mesh_of(path, self.level(n)?))
    }
}

fn mesh_of(path: &SampledCadlagPath, level: &[usize]) -> f64 {
    let t = path.times();
    level.windows(2).map(|w| t[w[1]] - t[w[0]]).fold(0.0, f64::max)
}

fn is_subset(coarse: &[usize], fine: &[usize]) -> bool {
    coarse.iter().all(|i| fine.binary_search(i).is_ok())
}

fn snap_uniform(path: &SampledCadlagPath, m: usize, include_jumps: bool) -> Vec<usize> {
    let times = path.times();
    let horizon = path.horizon();
    let tol = 1e-12 * horizon;
    let mut idx: Vec<usize> = (0..=m)
        .map(|k| {
            let target = horizon * k as f64 / m as f64;
            times.partition_point(|&s| s <= target + tol).saturating_sub(1)
        })
        .collect();
    *idx.last_mut().unwrap() = path.len() - 1;
    if include_jumps {
        idx.extend(path.jumps().iter().map(|j| j.index));
        idx.sort_unstable();
    }
    idx.dedup();
    idx
}

/// Uniform grid of levels `u_k = (origin + k) Δu`, `k = 0..count`.
///
/// Binned fields store the average over the cell `[u_k - Δu/2, u_k + Δu/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelGrid {
    origin: i64,
    spacing: f64,
    count: usize,
}

impl LevelGrid {
    pub fn new(origin: i64, spacing: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::domain(format!("level spacing must be positive, got {spacing}")));
        }
        if count == 0 {
            return Err(Error::domain("level grid needs at least one level"));
        }
        Ok(Self { origin, spacing, count })
    }

    /// Smallest aligned grid containing `[lo - margin, hi + margin]`.
    pub fn covering(lo: f64, hi: f64, spacing: f64, margin: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(margin >= 0.0) || !(hi >= lo) {
            return Err(Error::domain("bad level grid bounds"));
        }
        let first = ((lo - margin) / spacing).floor() as i64 - 1;
        let last = ((hi + margin) / spacing).ceil() as i64 + 1;
        Self::new(first, spacing, (last - first + 1) as usize)
    }

    /// Grid around the range of `path`; the margin defaults to two cells.
    pub fn for_path(path: &SampledCadlagPath, spacing: f64, margin: Option<f64>) -> Result<Self> {
        let margin = margin.unwrap_or(2.0 * spacing);
        Self::covering(path.min_value(), path.max_value(), spacing, margin)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        (self.origin + k as i64) as f64 * self.spacing
    }

    pub fn u_min(&self) -> f64 {
        self.node(0)
    }

    pub fn u_max(&self) -> f64 {
        self.node(self.count - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.node(k))
    }

    /// Lower edge of cell `k` (`k == len()` gives the upper edge of the window).
    #[inline]
    pub fn cell_lo(&self, k: usize) -> f64 {
        ((self.origin + k as i64) as f64 - 0.5) * self.spacing
    }

    pub fn window(&self) -> (f64, f64) {
        (self.cell_lo(0), self.cell_lo(self.count))
    }

    /// Index of the cell containing `u`, if it lies inside the window.
    pub fn cell_of(&self, u: f64) -> Option<usize> {
        let (lo, hi) = self.window();
        if !(u >= lo && u < hi) {
            return None;
        }
        let mut k = ((u - lo) / self.spacing).floor() as usize;
        k = k.min(self.count - 1);
        while k > 0 && u < self.cell_lo(k) {
            k -= 1;
        }
        while k + 1 < self.count && u >= self.cell_lo(k + 1) {
            k += 1;
        }
        Some(k)
    }

    /// Number of nodes `u_k` with `u_k < u` (the first node index `>= u`).
    pub fn nodes_below(&self, u: f64) -> usize {
        let guess = ((u / self.spacing).ceil() as i64 - self.origin).clamp(0, self.count as i64);
        let mut k = guess as usize;
        while k > 0 && self.node(k - 1) >= u {
            k -= 1;
        }
        while k < self.count && self.node(k) < u {
            k += 1;
        }
        k
    }

    /// Number of nodes `u_k` with `u_k <= u`.
    pub fn nodes_at_or_below(&self, u: f64) -> usize {
        let guess = ((u / self.spacing).floor() as i64 + 1 - self.origin).clamp(0, self.count as i64);
        let mut k = guess as usize;
        while k > 0 && self.node(k - 1) > u {
            k -= 1;
        }
        while k < self.count && self.node(k) <= u {
            k += 1;
        }
        k
    }
}

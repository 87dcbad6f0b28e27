use crate::crossing::{add_crossing_term, j_pi};
use crate::dc::{bracket, sign_left};
use crate::error::{Error, Result};
use crate::field::{LevelFunction, Sampling};
use crate::path::{LevelGrid, SampledCadlagPath};
use crate::skorokhod::count_all_levels;

/// Tanaka estimate of the classical local time with its flooring record.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalLocalTime {
    pub field: LevelFunction,
    /// `Σ` of the negative parts removed by flooring, times `Δu`.
    pub floored_mass: f64,
    pub floored_levels: usize,
}

/// `𝓛_t(u) = |x_t - u| - |x_0 - u| - Σ sign(x_{t_i} - u) Δx_i - 2 J_t(u)`
/// over the full sample grid, at one level, floored at zero.
pub fn classical_local_time_at(path: &SampledCadlagPath, t: f64, u: f64) -> f64 {
    let x = path.values();
    let end = path.index_at(t);
    let mut stoch = 0.0;
    for i in 1..=end {
        stoch += sign_left(x[i - 1] - u) * (x[i] - x[i - 1]);
    }
    let mut j = 0.0;
    for jm in path.jumps_until(t) {
        let b = x[jm.index];
        let (lo, hi) = bracket(jm.pre_jump_value, b);
        if u >= lo && u < hi {
            j += (b - u).abs();
        }
    }
    ((x[end] - u).abs() - (x[0] - u).abs() - stoch - 2.0 * j).max(0.0)
}

/// The same formula at every node of `grid`, in `O(samples + levels)`.
///
/// Uses `Σ sign(x_i - u) Δ_i = (x_t - x_0) - 2 Σ_{x_i <= u} Δ_i`, with the
/// second sum accumulated as a suffix over levels.
pub fn classical_local_time(path: &SampledCadlagPath, t: f64, grid: &LevelGrid) -> ClassicalLocalTime {
    let x = path.values();
    let end = path.index_at(t);
    let m = grid.len();
    let mut below = vec![0.0; m + 1];
    for i in 1..=end {
        below[grid.nodes_below(x[i - 1])] += x[i] - x[i - 1];
    }
    let mut jump = vec![0.0; m];
    for jm in path.jumps_until(t) {
        let b = x[jm.index];
        let (lo, hi) = bracket(jm.pre_jump_value, b);
        for (k, slot) in jump.iter_mut().enumerate().take(grid.nodes_below(hi)).skip(grid.nodes_below(lo)) {
            *slot += (b - grid.node(k)).abs();
        }
    }
    let (x0, xt) = (x[0], x[end]);
    let mut s = 0.0;
    let mut floored_mass = 0.0;
    let mut floored_levels = 0;
    let mut values = Vec::with_capacity(m);
    for (k, jk) in jump.iter().enumerate() {
        s += below[k];
        let u = grid.node(k);
        let raw = (xt - u).abs() - (x0 - u).abs() - (xt - x0) + 2.0 * s - 2.0 * jk;
        if raw < 0.0 {
            floored_mass -= raw * grid.spacing();
            floored_levels += 1;
        }
        values.push(raw.max(0.0));
    }
    ClassicalLocalTime {
        field: LevelFunction { grid: *grid, values, sampling: Sampling::Node },
        floored_mass,
        floored_levels,
    }
}

/// Exact cell averages of `𝓛_t` on the full sample grid.
///
/// Per sample interval the Tanaka terms collapse to
/// `2 |x_{i+1} - u| 1_⟦x_i, x_{i+1}⟦(u)`, and on marked jumps they cancel
/// against `2 J`, so only unmarked increments contribute.
pub fn classical_local_time_binned(path: &SampledCadlagPath, t: f64, grid: &LevelGrid) -> LevelFunction {
    let x = path.values();
    let mut out = LevelFunction::zeros(*grid, Sampling::CellAverage);
    for i in 1..=path.index_at(t) {
        if !path.is_jump(i) {
            add_crossing_term(&mut out.values, grid, x[i - 1], x[i], 2.0);
        }
    }
    out
}

/// `𝕃_t = 𝓛_t / 2 + J_t`, the limit of the level-crossing times `K^π_t`.
pub fn crossing_time_reference(path: &SampledCadlagPath, t: f64, grid: &LevelGrid) -> LevelFunction {
    let l = classical_local_time_binned(path, t, grid);
    let j = j_pi(path, t, grid);
    l.map2(&j, |a, b| 0.5 * a + b).expect("same grid")
}

/// `∫ |Q_t^{z,d}| dz` with `Q_t^{z,d} = d n^{z,d} - (1/d) ∫_{z-d/2}^{z+d/2} 𝓛_t(u) du`.
///
/// `z` runs over the nodes of `grid`; the inner integral is taken exactly
/// over the binned `𝓛`, with partial cells weighted by overlap.
pub fn q_statistic(path: &SampledCadlagPath, t: f64, grid: &LevelGrid, d: f64) -> Result<f64> {
    if !(d >= 2.0 * grid.spacing()) {
        return Err(Error::domain(format!(
            "width {d} not resolvable on level spacing {}",
            grid.spacing()
        )));
    }
    let l = classical_local_time_binned(path, t, grid);
    let du = grid.spacing();
    let m = grid.len();
    let mut prefix = vec![0.0; m + 1];
    for k in 0..m {
        prefix[k + 1] = prefix[k] + l.values[k] * du;
    }
    let (w0, _) = grid.window();
    // ∫_{w0}^{u} of the binned field
    let cumulative = |u: f64| -> f64 {
        let pos = ((u - w0) / du).clamp(0.0, m as f64);
        let k = (pos.floor() as usize).min(m - 1);
        prefix[k] + l.values[k] * du * (pos - k as f64)
    };
    let v = &path.values()[..=path.index_at(t)];
    let counts = count_all_levels(v, grid, d, false)?;
    let mut total = 0.0;
    for (k, n) in counts.iter().enumerate() {
        let z = grid.node(k);
        let occupation = cumulative(z + 0.5 * d) - cumulative(z - 0.5 * d);
        total += (d * *n as f64 - occupation / d).abs();
    }
    Ok(total * du)
}

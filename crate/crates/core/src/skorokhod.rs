//! The double Skorokhod problem on `[-ε/2, ε/2]` (play operator), interval
//! crossing counts, the Banach indicatrix and the Stieltjes integral
//! `∫ f'(x^ε_-) dx`.

use serde::Serialize;

use crate::dc::DcFunction;
use crate::error::{Error, Result};
use crate::field::{LevelFunction, Sampling};
use crate::crossing::add_crossing_term;
use crate::path::{LevelGrid, SampledCadlagPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonotoneSegment {
    pub start: usize,
    pub end: usize,
    /// `1` increasing, `-1` decreasing, `0` for a constant path.
    pub direction: i8,
}

/// `x = x^ε + φ` with `|φ| <= ε/2` and `x^ε` moving only when `φ` sits on
/// a barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorokhodSolution {
    pub regularized: SampledCadlagPath,
    pub deviation: Vec<f64>,
    pub width: f64,
    pub segments: Vec<MonotoneSegment>,
}

/// Play-operator recursion `x^ε_i = clamp(x^ε_{i-1}, x_i - ε/2, x_i + ε/2)`.
///
/// When the clamp binds, the result is nudged by single ulps so that the
/// stored deviation `x_i - x^ε_i` never exceeds `ε/2` in floating point and
/// the step keeps its direction.
pub fn skorokhod_map(path: &SampledCadlagPath, width: f64) -> Result<SkorokhodSolution> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::domain(format!("barrier width must be positive, got {width}")));
    }
    let h = 0.5 * width;
    let x = path.values();
    let mut xe = Vec::with_capacity(x.len());
    xe.push(x[0]);
    for &xi in &x[1..] {
        let prev = *xe.last().expect("seeded");
        let next = if xi - prev > h {
            let mut v = (xi - h).max(prev);
            while xi - v > h {
                v = v.next_up();
            }
            v
        } else if xi - prev < -h {
            let mut v = (xi + h).min(prev);
            while xi - v < -h {
                v = v.next_down();
            }
            v
        } else {
            prev
        };
        xe.push(next);
    }
    let deviation = x.iter().zip(&xe).map(|(a, b)| a - b).collect();
    let segments = monotone_segments(&xe);
    let marks: Vec<usize> = path.jumps().iter().map(|j| j.index).collect();
    let regularized = SampledCadlagPath::new(path.times().to_vec(), xe, &marks)?;
    Ok(SkorokhodSolution { regularized, deviation, width, segments })
}

/// Maximal runs of one sign of the increments; flat steps join the current run.
pub fn monotone_segments(values: &[f64]) -> Vec<MonotoneSegment> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut dir = 0i8;
    for i in 1..values.len() {
        let d = values[i] - values[i - 1];
        let s = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 && dir != 0 && s != dir {
            out.push(MonotoneSegment { start, end: i - 1, direction: dir });
            start = i - 1;
        }
        if s != 0 {
            dir = s;
        }
    }
    out.push(MonotoneSegment { start, end: values.len() - 1, direction: dir });
    out
}

impl SkorokhodSolution {
    pub fn total_variation(&self) -> f64 {
        self.regularized.total_variation()
    }

    /// `N^z(x^ε, [0, t])`: segments whose range `[min, max)` contains `z`.
    pub fn banach_indicatrix(&self, z: f64, t: f64) -> usize {
        let v = self.regularized.values();
        let end = self.regularized.index_at(t);
        self.segments
            .iter()
            .take_while(|s| s.start < end)
            .filter(|s| {
                let (a, b) = (v[s.start], v[s.end.min(end)]);
                z >= a.min(b) && z < a.max(b)
            })
            .count()
    }

    /// `∫ N^z dz` computed by sweeping the sorted segment endpoints.
    pub fn banach_indicatrix_integral(&self, t: f64) -> f64 {
        let v = self.regularized.values();
        let end = self.regularized.index_at(t);
        let mut events: Vec<(f64, i32)> = Vec::new();
        for s in self.segments.iter().take_while(|s| s.start < end) {
            let (a, b) = (v[s.start], v[s.end.min(end)]);
            if a != b {
                events.push((a.min(b), 1));
                events.push((a.max(b), -1));
            }
        }
        events.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut total = 0.0;
        let mut count = 0i32;
        let mut last = f64::NEG_INFINITY;
        for (z, d) in events {
            if count > 0 {
                total += count as f64 * (z - last);
            }
            count += d;
            last = z;
        }
        total
    }

    /// `J_t(x^ε, u)` from the increments of `x^ε` at the jump instants of `x`.
    pub fn jump_field(&self, t: f64, grid: &LevelGrid) -> LevelFunction {
        let v = self.regularized.values();
        let mut out = LevelFunction::zeros(*grid, Sampling::CellAverage);
        for j in self.regularized.jumps_until(t) {
            add_crossing_term(&mut out.values, grid, v[j.index - 1], v[j.index], 1.0);
        }
        out
    }
}

/// Upcrossing and downcrossing counts of the band `(z - ε/2, z + ε/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrossingTally {
    pub up: u64,
    pub down: u64,
    pub strict_up: u64,
    pub strict_down: u64,
}

impl CrossingTally {
    pub fn total(&self) -> u64 {
        self.up + self.down
    }

    pub fn strict_total(&self) -> u64 {
        self.strict_up + self.strict_down
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    None,
    Low,
    High,
}

fn check_width(width: f64, strict: bool) -> Result<()> {
    if !(width >= 0.0) || !width.is_finite() {
        return Err(Error::domain(format!("crossing width must be nonnegative, got {width}")));
    }
    if width == 0.0 && !strict {
        return Err(Error::domain("zero-width crossings are only defined in the strict form"));
    }
    Ok(())
}

/// `(up, down)` for one level. A sample is low when `x <= z - ε/2` (`<` if
/// `strict`) and high when `x >= z + ε/2` (`>`); a crossing is a low sample
/// followed by a high one or vice versa. The greedy scan attains the
/// supremum over subsequences.
pub fn count_level(values: &[f64], z: f64, width: f64, strict: bool) -> Result<(u64, u64)> {
    check_width(width, strict)?;
    let (lo, hi) = (z - 0.5 * width, z + 0.5 * width);
    let mut side = Side::None;
    let (mut up, mut down) = (0, 0);
    for &x in values {
        let low = if strict { x < lo } else { x <= lo };
        let high = if strict { x > hi } else { x >= hi };
        if low {
            if side == Side::High {
                down += 1;
            }
            side = Side::Low;
        } else if high {
            if side == Side::Low {
                up += 1;
            }
            side = Side::High;
        }
    }
    Ok((up, down))
}

pub fn count_crossings(path: &SampledCadlagPath, z: f64, width: f64, t: f64) -> Result<CrossingTally> {
    let v = &path.values()[..=path.index_at(t)];
    let (strict_up, strict_down) = count_level(v, z, width, true)?;
    let (up, down) = if width > 0.0 { count_level(v, z, width, false)? } else { (0, 0) };
    Ok(CrossingTally { up, down, strict_up, strict_down })
}

/// `n^{z,ε}` for every node `z` of `grid` in one pass over the samples.
///
/// Between consecutive samples only the levels whose thresholds lie between
/// the two values can change side, so the cost is linear in the number of
/// samples plus the number of level changes. The thresholds and comparisons
/// are the same as in [`count_level`], so the results agree exactly.
pub fn count_all_levels(values: &[f64], grid: &LevelGrid, width: f64, strict: bool) -> Result<Vec<u64>> {
    check_width(width, strict)?;
    let h = 0.5 * width;
    let m = grid.len();
    let lo: Vec<f64> = grid.nodes().map(|z| z - h).collect();
    let hi: Vec<f64> = grid.nodes().map(|z| z + h).collect();
    // levels with `x` low form a suffix, levels with `x` high a prefix
    let low_from = |x: f64| {
        if strict {
            lo.partition_point(|&l| l <= x)
        } else {
            lo.partition_point(|&l| l < x)
        }
    };
    let high_to = |x: f64| {
        if strict {
            hi.partition_point(|&u| u < x)
        } else {
            hi.partition_point(|&u| u <= x)
        }
    };
    let mut side = vec![Side::None; m];
    let mut counts = vec![0u64; m];
    let Some(&x0) = values.first() else {
        return Ok(counts);
    };
    // a level that is both low and high (possible only for sub-ulp widths)
    // counts as low, as in `count_level`
    let (mut prev_low, mut prev_high) = (low_from(x0), high_to(x0).min(low_from(x0)));
    for s in &mut side[prev_low..] {
        *s = Side::Low;
    }
    for s in &mut side[..prev_high] {
        *s = Side::High;
    }
    for &x in &values[1..] {
        let l = low_from(x);
        let h = high_to(x).min(l);
        // newly low: in [l, prev_low)
        for k in l..prev_low.max(l) {
            if side[k] == Side::High {
                counts[k] += 1;
            }
            side[k] = Side::Low;
        }
        for k in prev_high.min(h)..h {
            if side[k] == Side::Low {
                counts[k] += 1;
            }
            side[k] = Side::High;
        }
        prev_low = l;
        prev_high = h;
    }
    Ok(counts)
}

/// `c n^{z,c}(x, [0, t])` at the grid nodes for each width `c`.
pub fn interval_crossing_local_time(
    path: &SampledCadlagPath,
    t: f64,
    widths: &[f64],
    grid: &LevelGrid,
) -> Result<Vec<LevelFunction>> {
    if widths.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::domain("crossing widths must be positive"));
    }
    if widths.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("crossing widths must be decreasing"));
    }
    let v = &path.values()[..=path.index_at(t)];
    widths
        .iter()
        .map(|&c| {
            let n = count_all_levels(v, grid, c, false)?;
            Ok(LevelFunction {
                grid: *grid,
                values: n.into_iter().map(|k| c * k as f64).collect(),
                sampling: Sampling::Node,
            })
        })
        .collect()
}

/// `∫_0^t f'(x^ε_{s-}) dx_s = Σ f'(x^ε_{i-1}) (x_i - x_{i-1})`.
///
/// For a step function every sample is a potential jump of `f'(x^ε)`, so
/// the integration-by-parts definition reduces to this left-point sum.
pub fn stieltjes_integral_fprime(
    path: &SampledCadlagPath,
    solution: &SkorokhodSolution,
    f: &DcFunction,
    t: f64,
) -> Result<f64> {
    if solution.regularized.len() != path.len() {
        return Err(Error::domain("Skorokhod solution belongs to a different path"));
    }
    let x = path.values();
    let xe = solution.regularized.values();
    let end = path.index_at(t);
    Ok((1..=end).map(|i| f.deriv(xe[i - 1]) * (x[i] - x[i - 1])).sum())
}

/// `J_t(x^ε, ·)` on `grid`.
pub fn j_of_regularized(solution: &SkorokhodSolution, t: f64, grid: &LevelGrid) -> LevelFunction {
    solution.jump_field(t, grid)
}

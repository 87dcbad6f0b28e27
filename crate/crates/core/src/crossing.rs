//! Discrete level-crossing times `K^π`, the jump field `J`, the discrete
//! Tanaka–Meyer identity and the occupation-density estimator.

use crate::dc::{bracket, integrate_binned_against_f2, DcFunction};
use crate::error::{Error, Result};
use crate::field::{FieldKind, LevelFunction, LocalTimeField, Sampling};
use crate::path::{LevelGrid, PartitionScheme, SampledCadlagPath};

fn first_cell_reaching(grid: &LevelGrid, u: f64) -> usize {
    let (lo, hi) = grid.window();
    if u < lo {
        0
    } else if u >= hi {
        grid.len()
    } else {
        grid.cell_of(u).expect("inside window")
    }
}

/// Adds `scale ×` the cell averages of `u ↦ |b - u| 1_⟦a,b⟦(u)` to `acc`.
///
/// `|b - u|` has no kink inside the bracket, so the average over each
/// overlap `[p, q)` is exactly `|b - (p+q)/2| (q - p) / Δu`.
pub(crate) fn add_crossing_term(acc: &mut [f64], grid: &LevelGrid, a: f64, b: f64, scale: f64) {
    let (lo, hi) = bracket(a, b);
    if lo == hi {
        return;
    }
    let du = grid.spacing();
    let mut k = first_cell_reaching(grid, lo);
    while k < grid.len() {
        let (c0, c1) = (grid.cell_lo(k), grid.cell_lo(k + 1));
        if c0 >= hi {
            break;
        }
        let p = lo.max(c0);
        let q = hi.min(c1);
        if q > p {
            acc[k] += scale * (q - p) * (b - 0.5 * (p + q)).abs() / du;
        }
        k += 1;
    }
}

/// `K^π_t(u) = Σ |x_{t_{j+1}∧t} - u| 1_⟦x_{t_j∧t}, x_{t_{j+1}∧t}⟦(u)` as
/// exact cell averages, for one partition given by sample indices.
pub fn k_pi_level(path: &SampledCadlagPath, level: &[usize], t: f64, grid: &LevelGrid) -> LevelFunction {
    let vals = path.values();
    let mut out = LevelFunction::zeros(*grid, Sampling::CellAverage);
    for (a, b) in path.clipped_intervals(level, t) {
        add_crossing_term(&mut out.values, grid, vals[a], vals[b], 1.0);
    }
    out
}

pub fn k_pi(
    path: &SampledCadlagPath,
    scheme: &PartitionScheme,
    n: usize,
    t: f64,
    grid: &LevelGrid,
) -> Result<LevelFunction> {
    Ok(k_pi_level(path, scheme.level(n)?, t, grid))
}

/// `J_t(u) = Σ_{jumps s <= t} |x_s - u| 1_⟦x_{s-}, x_s⟦(u)`, cell averaged.
pub fn j_pi(path: &SampledCadlagPath, t: f64, grid: &LevelGrid) -> LevelFunction {
    let vals = path.values();
    let mut out = LevelFunction::zeros(*grid, Sampling::CellAverage);
    for j in path.jumps_until(t) {
        add_crossing_term(&mut out.values, grid, j.pre_jump_value, vals[j.index], 1.0);
    }
    out
}

/// `K^π` at each of `times` as a field.
pub fn k_field(
    path: &SampledCadlagPath,
    level: &[usize],
    times: &[f64],
    grid: &LevelGrid,
) -> Result<LocalTimeField> {
    let fns = times.iter().map(|&t| k_pi_level(path, level, t, grid)).collect();
    LocalTimeField::from_functions(FieldKind::K, times.to_vec(), fns)
}

pub fn j_field(path: &SampledCadlagPath, times: &[f64], grid: &LevelGrid) -> Result<LocalTimeField> {
    let fns = times.iter().map(|&t| j_pi(path, t, grid)).collect();
    LocalTimeField::from_functions(FieldKind::J, times.to_vec(), fns)
}

/// Left side minus right side of the discrete Tanaka–Meyer formula
/// `f(x_t) - f(x_0) - Σ f'(x_{t_i}) Δ_i = ∫ K^π_t(u) f''(du)`.
///
/// The right side is summed interval by interval in closed form, so atoms
/// of `f''` are hit exactly rather than through a level grid.
pub fn discrete_tanaka_residual(
    path: &SampledCadlagPath,
    f: &DcFunction,
    scheme: &PartitionScheme,
    n: usize,
    t: f64,
) -> Result<f64> {
    let level = scheme.level(n)?;
    let vals = path.values();
    let mut riemann = 0.0;
    let mut rhs = 0.0;
    for (a, b) in path.clipped_intervals(level, t) {
        let (xa, xb) = (vals[a], vals[b]);
        riemann += f.deriv(xa) * (xb - xa);
        rhs += f.jf_measure(xa, xb);
    }
    let lhs = f.eval(path.value_at(t)) - f.eval(path.first()) - riemann;
    Ok(lhs - rhs)
}

/// Same residual with the right side read off the binned `K^π` field. Only
/// accurate to the level spacing; useful as a diagnostic of the field.
pub fn binned_tanaka_residual(
    path: &SampledCadlagPath,
    f: &DcFunction,
    scheme: &PartitionScheme,
    n: usize,
    t: f64,
    grid: &LevelGrid,
) -> Result<f64> {
    let level = scheme.level(n)?;
    let k = k_pi_level(path, level, t, grid);
    let vals = path.values();
    let riemann: f64 =
        path.clipped_intervals(level, t).map(|(a, b)| f.deriv(vals[a]) * (vals[b] - vals[a])).sum();
    let lhs = f.eval(path.value_at(t)) - f.eval(path.first()) - riemann;
    Ok(lhs - integrate_binned_against_f2(&k.values, grid, f)?)
}

/// `Kc = (K - J)⁺` and the occupation-time estimate `L = 2 Kc`.
pub fn split_kc(k: &LocalTimeField, j: &LocalTimeField) -> Result<(LocalTimeField, LocalTimeField)> {
    if k.grid != j.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", k.grid, j.grid)));
    }
    if k.times != j.times {
        return Err(Error::GridMismatch("K and J sampled at different times".into()));
    }
    let data: Vec<Vec<f64>> = k
        .data
        .iter()
        .zip(&j.data)
        .map(|(kr, jr)| kr.iter().zip(jr).map(|(a, b)| (a - b).max(0.0)).collect())
        .collect();
    let kc = LocalTimeField {
        kind: FieldKind::Kc,
        grid: k.grid,
        sampling: k.sampling,
        times: k.times.clone(),
        data: data.clone(),
    };
    let l = LocalTimeField {
        kind: FieldKind::LCrossing,
        data: data.into_iter().map(|r| r.into_iter().map(|v| 2.0 * v).collect()).collect(),
        ..kc.clone()
    };
    Ok((kc, l))
}

/// `L̂_t(u) = (1/2ε) Σ_{unmarked, t_j < t, |x_{t_j} - u| <= ε} (Δx)²` at the
/// grid nodes.
pub fn occupation_local_time(
    path: &SampledCadlagPath,
    t: f64,
    bandwidth: f64,
    grid: &LevelGrid,
) -> Result<LevelFunction> {
    if !(bandwidth > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if bandwidth < grid.spacing() {
        return Err(Error::domain(format!(
            "bandwidth {bandwidth} below level spacing {}",
            grid.spacing()
        )));
    }
    let vals = path.values();
    let end = path.index_at(t);
    let mut diff = vec![0.0; grid.len() + 1];
    for i in 1..=end {
        if path.is_jump(i) {
            continue;
        }
        let d = vals[i] - vals[i - 1];
        if d == 0.0 {
            continue;
        }
        let x = vals[i - 1];
        let k0 = grid.nodes_below(x - bandwidth);
        let k1 = grid.nodes_at_or_below(x + bandwidth);
        if k1 > k0 {
            diff[k0] += d * d;
            diff[k1] -= d * d;
        }
    }
    let scale = 0.5 / bandwidth;
    let mut run = 0.0;
    let values = diff[..grid.len()]
        .iter()
        .map(|d| {
            run += d;
            (run * scale).max(0.0)
        })
        .collect();
    Ok(LevelFunction { grid: *grid, values, sampling: Sampling::Node })
}

/// `C_p Σ |Δ|^{1+1/p}` with `C_p = (p+1)^{-1/p}`, an upper bound for
/// `‖K^π_t‖_{L^p}`.
pub fn k_pi_lp_bound(path: &SampledCadlagPath, level: &[usize], t: f64, p: f64) -> f64 {
    let vals = path.values();
    let s: f64 = path
        .clipped_intervals(level, t)
        .map(|(a, b)| (vals[b] - vals[a]).abs().powf(1.0 + 1.0 / p))
        .sum();
    (p + 1.0).powf(-1.0 / p) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> LevelGrid {
        LevelGrid::covering(0.0, 1.0, 0.01, 0.05).unwrap()
    }

    #[test]
    fn constant_path_has_no_crossing_time() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.3; 5], &[]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let k = k_pi(&p, &s, 0, 1.0, &unit_grid()).unwrap();
        assert!(k.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_step_crossing_time() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0], &[]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let g = unit_grid();
        let k = k_pi(&p, &s, 0, 1.0, &g).unwrap();
        assert!((k.integral() - 0.5).abs() < 1e-12);
        // a cell fully inside [0, 1) holds the average of 1 - u
        let c = g.cell_of(0.25).unwrap();
        assert!((k.values[c] - (1.0 - g.node(c))).abs() < 1e-12);
        assert_eq!(k.values[g.cell_of(1.04).unwrap()], 0.0);
    }

    #[test]
    fn zigzag_crossing_time_is_flat() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0, 0.0], &[]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let g = unit_grid();
        let k = k_pi(&p, &s, 0, 1.0, &g).unwrap();
        assert!((k.integral() - 1.0).abs() < 1e-12);
        for u in [0.005, 0.3, 0.77, 0.985] {
            assert!((k.value_at(u) - 1.0).abs() < 1e-12, "{u}");
        }
    }

    #[test]
    fn jump_field_mass() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 0.0, 0.7, 0.7], &[2]).unwrap();
        let g = unit_grid();
        let j = j_pi(&p, 1.0, &g);
        assert!((j.integral() - 0.245).abs() < 1e-12);
        assert!(j.sup() <= 0.7);
        assert_eq!(j_pi(&p, 0.5, &g).integral(), 0.0);
    }

    #[test]
    fn tanaka_residual_examples() {
        let v = vec![0.0, 0.35, -0.2, 0.8, 0.1, 0.1, -0.45, 0.3];
        let p = SampledCadlagPath::uniform(1.0, v, &[3, 6]).unwrap();
        let s = PartitionScheme::dyadic(&p, &[1, 2], false).unwrap();
        let tol = 1e-10 * (1.0 + p.total_variation());
        for f in [DcFunction::affine(0.3, -2.0), DcFunction::half_abs(0.1), DcFunction::half_square()] {
            for n in 0..2 {
                for t in [0.3, 0.61, 1.0] {
                    let r = discrete_tanaka_residual(&p, &f, &s, n, t).unwrap();
                    assert!(r.abs() <= tol, "{} n={n} t={t}: {r}", f.name());
                }
            }
        }
    }

    #[test]
    fn binned_residual_is_small() {
        let v = vec![0.0, 0.35, -0.2, 0.8, 0.1];
        let p = SampledCadlagPath::uniform(1.0, v, &[]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let g = LevelGrid::for_path(&p, 0.001, None).unwrap();
        let r = binned_tanaka_residual(&p, &DcFunction::half_square(), &s, 0, 1.0, &g).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
        let r = binned_tanaka_residual(&p, &DcFunction::bump(0.0, 1.0), &s, 0, 1.0, &g).unwrap();
        assert!(r.abs() < 1e-5, "{r}");
    }

    #[test]
    fn pure_jump_path_has_no_continuous_part() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 0.5, -0.3, 0.4], &[1, 2, 3]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let g = LevelGrid::for_path(&p, 0.01, None).unwrap();
        let k = k_field(&p, s.level(0).unwrap(), &[0.5, 1.0], &g).unwrap();
        let j = j_field(&p, &[0.5, 1.0], &g).unwrap();
        let (kc, l) = split_kc(&k, &j).unwrap();
        assert!(kc.data.iter().flatten().all(|v| v.abs() < 1e-12));
        assert!(l.data.iter().flatten().all(|v| v.abs() < 1e-12));
        let occ = occupation_local_time(&p, 1.0, 0.05, &g).unwrap();
        assert!(occ.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ramp_has_no_jump_field() {
        let v = (0..=8).map(|i| i as f64 / 8.0).collect();
        let p = SampledCadlagPath::uniform(1.0, v, &[]).unwrap();
        let g = LevelGrid::for_path(&p, 0.01, None).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let k = k_field(&p, s.level(0).unwrap(), &[1.0], &g).unwrap();
        let j = j_field(&p, &[1.0], &g).unwrap();
        let (_, l) = split_kc(&k, &j).unwrap();
        for (a, b) in l.data[0].iter().zip(&k.data[0]) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn occupation_needs_resolvable_bandwidth() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0], &[]).unwrap();
        let g = unit_grid();
        assert!(occupation_local_time(&p, 1.0, 0.0, &g).is_err());
        assert!(occupation_local_time(&p, 1.0, 0.001, &g).is_err());
    }

    #[test]
    fn occupation_reads_left_points() {
        // one unmarked step of size 1 from 0: mass 1 spread over [-ε, ε]
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0], &[]).unwrap();
        let g = unit_grid();
        let occ = occupation_local_time(&p, 1.0, 0.1, &g).unwrap();
        assert!((occ.value_at(0.0) - 5.0).abs() < 1e-12);
        assert!((occ.value_at(0.1) - 5.0).abs() < 1e-12);
        assert_eq!(occ.value_at(0.2), 0.0);
    }

    #[test]
    fn field_mismatch_is_rejected() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0], &[]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let k = k_field(&p, s.level(0).unwrap(), &[1.0], &unit_grid()).unwrap();
        let other = LevelGrid::covering(0.0, 1.0, 0.02, 0.0).unwrap();
        let j = j_field(&p, &[1.0], &other).unwrap();
        assert!(split_kc(&k, &j).is_err());
    }
}

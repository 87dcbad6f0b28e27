//! Quadratic variation along partitions, left-point Riemann sums and the
//! Föllmer–Itô residual.

use crate::dc::DcFunction;
use crate::error::{Error, Result};
use crate::path::{PartitionScheme, SampledCadlagPath};

/// `[x]`, `[x]^c` and `[x]^d` evaluated at the points of one partition level.
///
/// The continuous part sums the squared continuous displacement of each
/// partition interval (its increment minus the marked jumps inside), so it
/// is exactly nonnegative and nondecreasing. On the full sample grid
/// `total == continuous + jump` holds exactly; on coarser levels the two
/// differ by the cross terms between jumps and continuous motion.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariation {
    pub level: u32,
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub continuous: Vec<f64>,
    pub jump: Vec<f64>,
}

/// `([x]_t, [x]^c_t, [x]^d_t)` along `level` with the clipped convention.
pub fn quadratic_variation_at(path: &SampledCadlagPath, level: &[usize], t: f64) -> (f64, f64, f64) {
    let vals = path.values();
    let mut total = 0.0;
    let mut cont = 0.0;
    for (a, b) in path.clipped_intervals(level, t) {
        let inc = vals[b] - vals[a];
        total += inc * inc;
        let c = inc - path.jump_sum_between(a, b);
        cont += c * c;
    }
    let jump = path
        .jumps_until(t)
        .iter()
        .map(|j| (vals[j.index] - j.pre_jump_value).powi(2))
        .sum();
    (total, cont, jump)
}

pub fn quadratic_variation(
    path: &SampledCadlagPath,
    scheme: &PartitionScheme,
    n: usize,
) -> Result<QuadraticVariation> {
    let level = scheme.level(n)?;
    let vals = path.values();
    let times = path.times();
    let mut out = QuadraticVariation {
        level: scheme.labels()[n],
        times: vec![0.0],
        total: vec![0.0],
        continuous: vec![0.0],
        jump: vec![0.0],
    };
    let (mut total, mut cont, mut jump) = (0.0, 0.0, 0.0);
    for w in level.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inc = vals[b] - vals[a];
        total += inc * inc;
        let js = path.jump_sum_between(a, b);
        let c = inc - js;
        cont += c * c;
        let first = path.jumps().partition_point(|j| j.index <= a);
        jump += path.jumps()[first..]
            .iter()
            .take_while(|j| j.index <= b)
            .map(|j| (vals[j.index] - j.pre_jump_value).powi(2))
            .sum::<f64>();
        out.times.push(times[b]);
        out.total.push(total);
        out.continuous.push(cont);
        out.jump.push(jump);
    }
    Ok(out)
}

/// `Σ_{t_j < t} g(x_{t_j}) (x_{t_{j+1}∧t} - x_{t_j∧t})`.
pub fn riemann_integral(
    path: &SampledCadlagPath,
    integrand: impl Fn(f64) -> f64,
    level: &[usize],
    t: f64,
) -> f64 {
    let vals = path.values();
    path.clipped_intervals(level, t).map(|(a, b)| integrand(vals[a]) * (vals[b] - vals[a])).sum()
}

/// `J^f_t = Σ_{jumps s <= t} (f(x_s) - f(x_{s-}) - f'(x_{s-}) Δx_s)`.
pub fn jump_compensator(path: &SampledCadlagPath, f: &DcFunction, t: f64) -> f64 {
    let vals = path.values();
    path.jumps_until(t).iter().map(|j| f.jf_increment(j.pre_jump_value, vals[j.index])).sum()
}

/// `f(x_t) - f(x_0) - Σ f'(x_{t_j}) Δ - ½ Σ f''(x_{t_j}) c_j² - J^f_t`, with
/// `c_j` the continuous displacement over each partition interval.
pub fn follmer_residual(
    path: &SampledCadlagPath,
    f: &DcFunction,
    scheme: &PartitionScheme,
    n: usize,
    t: f64,
) -> Result<f64> {
    if !f.second().is_absolutely_continuous() {
        return Err(Error::domain(format!(
            "Föllmer residual needs an absolutely continuous f'', {} has atoms",
            f.name()
        )));
    }
    let level = scheme.level(n)?;
    let vals = path.values();
    let m = f.second();
    let mut stoch = 0.0;
    let mut second = 0.0;
    for (a, b) in path.clipped_intervals(level, t) {
        let (xa, xb) = (vals[a], vals[b]);
        stoch += f.deriv(xa) * (xb - xa);
        let c = (xb - xa) - path.jump_sum_between(a, b);
        second += m.density(xa) * c * c;
    }
    let end = path.value_at(t);
    Ok(f.eval(end) - f.eval(path.first()) - stoch - 0.5 * second - jump_compensator(path, f, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(steps: usize) -> SampledCadlagPath {
        let v = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        SampledCadlagPath::uniform(1.0, v, &[]).unwrap()
    }

    #[test]
    fn ramp_quadratic_variation() {
        let p = ramp(1024);
        let s = PartitionScheme::full_grid(&p);
        let qv = quadratic_variation(&p, &s, 0).unwrap();
        let expected = 1024.0 * (1.0f64 / 1024.0).powi(2);
        assert!((qv.total.last().unwrap() - expected).abs() < 1e-15);
        assert!((qv.continuous.last().unwrap() - expected).abs() < 1e-15);
        assert_eq!(*qv.jump.last().unwrap(), 0.0);
    }

    #[test]
    fn single_jump_quadratic_variation() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 0.0, 1.0, 1.0, 1.0], &[2]).unwrap();
        for levels in [vec![0usize, 4], vec![0, 1, 2, 3, 4]] {
            let s = PartitionScheme::from_indices(&p, vec![levels], vec![0]).unwrap();
            let qv = quadratic_variation(&p, &s, 0).unwrap();
            assert_eq!(*qv.total.last().unwrap(), 1.0);
            assert_eq!(*qv.jump.last().unwrap(), 1.0);
            assert_eq!(*qv.continuous.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_path_has_no_variation() {
        let p = SampledCadlagPath::uniform(1.0, vec![2.0; 9], &[]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let qv = quadratic_variation(&p, &s, 0).unwrap();
        assert!(qv.total.iter().chain(&qv.continuous).chain(&qv.jump).all(|v| *v == 0.0));
    }

    #[test]
    fn riemann_sum_examples() {
        let zz = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0, 0.0], &[]).unwrap();
        let full = PartitionScheme::full_grid(&zz);
        let lvl = full.level(0).unwrap();
        assert_eq!(riemann_integral(&zz, |x| x, lvl, 1.0), -1.0);
        assert_eq!(riemann_integral(&zz, |_| 0.0, lvl, 1.0), 0.0);
        assert_eq!(riemann_integral(&zz, |_| 1.0, lvl, 0.7), 1.0);
    }

    #[test]
    fn compensator_examples() {
        let p = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0, 1.0], &[1]).unwrap();
        let sq = DcFunction::half_square();
        assert_eq!(jump_compensator(&p, &sq, 1.0), 0.5);
        assert_eq!(jump_compensator(&p, &sq, 0.4), 0.0);
        let flat = SampledCadlagPath::uniform(1.0, vec![0.0, 1.0, 1.0], &[]).unwrap();
        assert_eq!(jump_compensator(&flat, &sq, 1.0), 0.0);
    }

    #[test]
    fn follmer_residual_vanishes_for_square_on_full_grid() {
        let v = vec![0.0, 0.3, -0.2, 1.1, 0.9, 0.95, -0.4];
        let p = SampledCadlagPath::uniform(1.0, v, &[3, 6]).unwrap();
        let s = PartitionScheme::full_grid(&p);
        let r = follmer_residual(&p, &DcFunction::half_square(), &s, 0, 1.0).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
        // dyadic values keep every sum exact
        let d = SampledCadlagPath::uniform(1.0, vec![0.0, 0.25, -0.5, 1.125, 0.75], &[2]).unwrap();
        let sd = PartitionScheme::full_grid(&d);
        let r = follmer_residual(&d, &DcFunction::affine(1.0, 2.0), &sd, 0, 1.0).unwrap();
        assert_eq!(r, 0.0);
        assert!(follmer_residual(&p, &DcFunction::half_abs(0.0), &s, 0, 1.0).is_err());
    }
}

//! Difference-of-convex test functions described through their second
//! derivative measure, the `J^f` increment identity, and mollification.
//!
//! A function is stored as evaluation handles for `f` and its
//! left-derivative `f'`, together with `f''` split into an absolutely
//! continuous part (a constant plus piecewise polynomials) and atoms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::LevelGrid;
use crate::quad::{self, Poly};

/// Left-continuous sign: `1` for `x > 0`, `-1` for `x <= 0`.
#[inline]
pub fn sign_left(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Half-open bracket `⟦a,b⟦ = [a∧b, a∨b)`; empty when `a == b`.
#[inline]
pub fn bracket(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
pub fn in_bracket(u: f64, a: f64, b: f64) -> bool {
    let (lo, hi) = bracket(a, b);
    u >= lo && u < hi
}

/// Polynomial density on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPiece {
    pub lo: f64,
    pub hi: f64,
    pub poly: Poly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub loc: f64,
    pub weight: f64,
}

/// `f''(du) = (c + Σ_k p_k(u) 1_[lo_k,hi_k)(u)) du + Σ_j w_j δ_{c_j}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SecondDerivativeMeasure {
    constant: f64,
    pieces: Vec<PolyPiece>,
    atoms: Vec<Atom>,
}

impl SecondDerivativeMeasure {
    pub fn new(constant: f64, mut pieces: Vec<PolyPiece>, mut atoms: Vec<Atom>) -> Result<Self> {
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if pieces.iter().any(|p| !(p.hi > p.lo)) {
            return Err(Error::config("density piece with empty support"));
        }
        if pieces.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::config("density pieces overlap"));
        }
        atoms.retain(|a| a.weight != 0.0);
        atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
        if atoms.windows(2).any(|w| w[0].loc == w[1].loc) {
            return Err(Error::config("atoms must have distinct locations"));
        }
        Ok(Self { constant, pieces, atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[PolyPiece] {
        &self.pieces
    }

    pub fn constant_density(&self) -> f64 {
        self.constant
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn has_density(&self) -> bool {
        self.constant != 0.0 || !self.pieces.is_empty()
    }

    /// Support bounds; infinite when the constant density is nonzero.
    pub fn support(&self) -> (f64, f64) {
        if self.constant != 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let lo = self.pieces.iter().map(|p| p.lo).chain(self.atoms.iter().map(|a| a.loc));
        let hi = self.pieces.iter().map(|p| p.hi).chain(self.atoms.iter().map(|a| a.loc));
        (lo.fold(f64::INFINITY, f64::min), hi.fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn density(&self, u: f64) -> f64 {
        let k = self.pieces.partition_point(|p| p.lo <= u);
        let piece = if k > 0 && u < self.pieces[k - 1].hi {
            self.pieces[k - 1].poly.eval(u)
        } else {
            0.0
        };
        self.constant + piece
    }

    fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let first = self.pieces.partition_point(|p| p.hi <= lo);
        let mut out = Vec::new();
        for p in &self.pieces[first..] {
            if p.lo >= hi {
                break;
            }
            out.push(p.lo);
            out.push(p.hi);
        }
        out
    }

    /// `∫_{[lo,hi)} g(u) density(u) du`, split at piece boundaries and at
    /// the caller's `kinks` of `g`.
    pub fn integrate_density<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, kinks: &[f64]) -> f64 {
        if !(hi > lo) || !self.has_density() {
            return 0.0;
        }
        let mut breaks = self.breakpoints_in(lo, hi);
        breaks.extend_from_slice(kinks);
        quad::integrate_split(|u| g(u) * self.density(u), lo, hi, &breaks, 1)
    }

    /// `Σ w_j g(c_j)` over atoms with `lo <= c_j < hi`.
    pub fn integrate_atoms<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> f64 {
        let first = self.atoms.partition_point(|a| a.loc < lo);
        self.atoms[first..].iter().take_while(|a| a.loc < hi).map(|a| a.weight * g(a.loc)).sum()
    }

    fn integrate_atoms_abs(&self, lo: f64, hi: f64) -> f64 {
        self.atoms.iter().filter(|a| a.loc >= lo && a.loc < hi).map(|a| a.weight.abs()).sum()
    }

    /// Mass of `f''` (density part only) over `[lo, hi)`.
    pub fn density_mass(&self, lo: f64, hi: f64) -> f64 {
        self.integrate_density(|_| 1.0, lo, hi, &[])
    }

    /// Total variation mass `|f''|` over `[lo, hi)`, density integrated by
    /// quadrature of its absolute value.
    pub fn abs_mass(&self, lo: f64, hi: f64) -> f64 {
        let dens = if self.has_density() {
            let breaks = self.breakpoints_in(lo, hi);
            quad::integrate_split(|u| self.density(u).abs(), lo, hi, &breaks, 4)
        } else {
            0.0
        };
        dens + self.integrate_atoms_abs(lo, hi)
    }
}

type Handle = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A difference-of-convex function: `f`, its left-derivative `f'`, and `f''`.
#[derive(Clone)]
pub struct DcFunction {
    name: String,
    f: Handle,
    fprime: Handle,
    second: SecondDerivativeMeasure,
}

impl fmt::Debug for DcFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("DcFunction")
            .field("name", &self.name)
            .field("second", &self.second)
            .finish()
    }
}

impl DcFunction {
    /// Builds a function from arbitrary handles. The caller is responsible
    /// for consistency between the handles and the measure.
    pub fn from_handles(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fprime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: SecondDerivativeMeasure,
    ) -> Self {
        Self { name: name.into(), f: Arc::new(f), fprime: Arc::new(fprime), second }
    }

    /// `f(u) = intercept + slope·u + (|·| * f'')` in closed form: each atom
    /// contributes `w (u-c)^+`, the constant density `c u²/2`, and each
    /// polynomial piece its double antiderivative from `lo`.
    pub fn from_measure(
        name: impl Into<String>,
        intercept: f64,
        slope: f64,
        second: SecondDerivativeMeasure,
    ) -> Self {
        struct PieceAnti {
            lo: f64,
            hi: f64,
            p1: Poly,
            q1: Poly,
            p1_lo: f64,
            q1_lo: f64,
        }
        let anti: Arc<Vec<PieceAnti>> = Arc::new(
            second
                .pieces
                .iter()
                .map(|pc| {
                    let p1 = pc.poly.antiderivative();
                    let q1 = pc.poly.times_u().antiderivative();
                    let p1_lo = p1.eval(pc.lo);
                    let q1_lo = q1.eval(pc.lo);
                    PieceAnti { lo: pc.lo, hi: pc.hi, p1, q1, p1_lo, q1_lo }
                })
                .collect(),
        );
        let atoms: Arc<Vec<Atom>> = Arc::new(second.atoms.clone());
        let c = second.constant;

        let (anti_f, atoms_f) = (Arc::clone(&anti), Arc::clone(&atoms));
        let f = move |u: f64| {
            let mut v = intercept + slope * u + 0.5 * c * u * u;
            for a in atoms_f.iter() {
                if u > a.loc {
                    v += a.weight * (u - a.loc);
                }
            }
            for pc in anti_f.iter() {
                if u > pc.lo {
                    let m = u.min(pc.hi);
                    let mass = pc.p1.eval(m) - pc.p1_lo;
                    let first = pc.q1.eval(m) - pc.q1_lo;
                    v += u * mass - first;
                }
            }
            v
        };
        let fprime = move |u: f64| {
            let mut v = slope + c * u;
            for a in atoms.iter() {
                if u > a.loc {
                    v += a.weight;
                }
            }
            for pc in anti.iter() {
                if u > pc.lo {
                    v += pc.p1.eval(u.min(pc.hi)) - pc.p1_lo;
                }
            }
            v
        };
        Self::from_handles(name, f, fprime, second)
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        Self::from_measure("affine", intercept, slope, SecondDerivativeMeasure::default())
    }

    /// `|u - center| / 2`, whose second derivative is `δ_center`.
    pub fn half_abs(center: f64) -> Self {
        let m = SecondDerivativeMeasure::new(0.0, vec![], vec![Atom { loc: center, weight: 1.0 }])
            .expect("single atom");
        Self::from_measure(format!("abs({center})"), 0.5 * center, -0.5, m)
    }

    /// `(u - center)^+`.
    pub fn relu(center: f64) -> Self {
        let m = SecondDerivativeMeasure::new(0.0, vec![], vec![Atom { loc: center, weight: 1.0 }])
            .expect("single atom");
        Self::from_measure(format!("relu({center})"), 0.0, 0.0, m)
    }

    /// `u² / 2`.
    pub fn half_square() -> Self {
        let m = SecondDerivativeMeasure::new(1.0, vec![], vec![]).expect("constant density");
        Self::from_measure("square", 0.0, 0.0, m)
    }

    /// Smooth bump: `f''(u) = (35/32 w)(1 - ((u-c)/w)²)³` on `[c-w, c+w)`.
    pub fn bump(center: f64, width: f64) -> Self {
        let base = Poly(vec![1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0]).scale(35.0 / 32.0);
        // p(s) with s = (u - c)/w, rescaled to unit mass in u
        let scaled = Poly(
            base.0
                .iter()
                .enumerate()
                .map(|(k, a)| a / width.powi(k as i32) / width)
                .collect(),
        )
        .shifted(center);
        let piece = PolyPiece { lo: center - width, hi: center + width, poly: scaled };
        let m = SecondDerivativeMeasure::new(0.0, vec![piece], vec![]).expect("single piece");
        Self::from_measure(format!("bump({center},{width})"), 0.0, 0.0, m)
    }

    /// Kinked mixture with signed atoms and a piecewise density.
    pub fn mixture(atoms: Vec<Atom>, pieces: Vec<PolyPiece>) -> Result<Self> {
        let m = SecondDerivativeMeasure::new(0.0, pieces, atoms)?;
        Ok(Self::from_measure("mix", 0.0, 0.0, m))
    }

    pub fn default_mixture() -> Self {
        Self::mixture(
            vec![Atom { loc: -0.3, weight: 1.0 }, Atom { loc: 0.4, weight: -0.5 }],
            vec![
                PolyPiece { lo: -0.5, hi: 0.2, poly: Poly::constant(0.5) },
                PolyPiece { lo: 0.2, hi: 0.9, poly: Poly(vec![0.1, -0.8]) },
            ],
        )
        .expect("valid mixture")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        (self.fprime)(u)
    }

    pub fn second(&self) -> &SecondDerivativeMeasure {
        &self.second
    }

    /// `f(b) - f(a) - f'(a)(b - a)` through the evaluation handles.
    pub fn jf_increment(&self, a: f64, b: f64) -> f64 {
        self.eval(b) - self.eval(a) - self.deriv(a) * (b - a)
    }

    /// `∫_⟦a,b⟦ |b - u| f''(du)` through the measure.
    pub fn jf_measure(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = bracket(a, b);
        if lo == hi {
            return 0.0;
        }
        let g = |u: f64| (b - u).abs();
        self.second.integrate_density(g, lo, hi, &[]) + self.second.integrate_atoms(g, lo, hi)
    }
}

/// `∫ g(u) f''(du)` over the half-open window `[lo, hi)` for a closed-form
/// `g` with known kink locations.
pub fn integrate_against_f2<G: Fn(f64) -> f64>(
    g: G,
    f: &DcFunction,
    window: (f64, f64),
    kinks: &[f64],
) -> f64 {
    let (lo, hi) = window;
    f.second.integrate_density(&g, lo, hi, kinks) + f.second.integrate_atoms(&g, lo, hi)
}

/// `∫ g(u) f''(du)` for `g` binned on `grid` (cell averages). Density mass
/// is integrated exactly per cell; an atom takes the value of the cell
/// whose left edge is the nearest edge at or below it.
pub fn integrate_binned_against_f2(values: &[f64], grid: &LevelGrid, f: &DcFunction) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} values on a grid of {} levels",
            values.len(),
            grid.len()
        )));
    }
    let m = f.second();
    let mut total = 0.0;
    if m.has_density() {
        for (k, v) in values.iter().enumerate() {
            if *v != 0.0 {
                total += v * m.density_mass(grid.cell_lo(k), grid.cell_lo(k + 1));
            }
        }
    }
    for a in m.atoms() {
        let k = grid.cell_of(a.loc).ok_or_else(|| {
            Error::GridMismatch(format!("atom at {} outside level window {:?}", a.loc, grid.window()))
        })?;
        total += a.weight * values[k];
    }
    Ok(total)
}

/// Canonical test suite: pure-atom, pure-density, smooth and mixed cases.
pub fn builtin_suite() -> Vec<DcFunction> {
    vec![
        DcFunction::half_abs(0.1),
        DcFunction::relu(-0.2),
        DcFunction::half_square(),
        DcFunction::bump(0.0, 1.0),
        DcFunction::default_mixture(),
    ]
}

/// JSON descriptor for a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    Abs {
        #[serde(default)]
        center: f64,
    },
    Relu {
        #[serde(default)]
        center: f64,
    },
    Square,
    Bump {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Atoms as `[loc, weight]`, density pieces as `[lo, hi, value]`.
    Mix {
        #[serde(default)]
        atoms: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        density: Option<Vec<[f64; 3]>>,
    },
    Affine {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        slope: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl FunctionDescriptor {
    pub fn build(&self) -> Result<DcFunction> {
        Ok(match self {
            Self::Abs { center } => DcFunction::half_abs(*center),
            Self::Relu { center } => DcFunction::relu(*center),
            Self::Square => DcFunction::half_square(),
            Self::Bump { center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::config("bump width must be positive"));
                }
                DcFunction::bump(*center, *width)
            }
            Self::Mix { atoms: None, density: None } => DcFunction::default_mixture(),
            Self::Mix { atoms, density } => DcFunction::mixture(
                atoms
                    .iter()
                    .flatten()
                    .map(|[loc, weight]| Atom { loc: *loc, weight: *weight })
                    .collect(),
                density
                    .iter()
                    .flatten()
                    .map(|[lo, hi, v]| PolyPiece { lo: *lo, hi: *hi, poly: Poly::constant(*v) })
                    .collect(),
            )?,
            Self::Affine { intercept, slope } => DcFunction::affine(*intercept, *slope),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    /// `exp(-1/(1-u²))` on `(-1, 1)`.
    Symmetric,
    /// The same bump moved to `(0, 1)`.
    OneSided,
}

// the convolution uses the normalising rule, so affine functions are
// reproduced to rounding
const MOLLIFIER_PANELS: usize = 64;

/// Nonnegative smooth bump with unit integral and compact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    kind: MollifierKind,
    norm: f64,
}

impl Mollifier {
    pub fn new(kind: MollifierKind) -> Self {
        let raw = Self { kind, norm: 1.0 };
        let (lo, hi) = raw.support();
        let mass = quad::integrate_composite(|u| raw.eval(u), lo, hi, MOLLIFIER_PANELS);
        Self { kind, norm: 1.0 / mass }
    }

    pub fn symmetric() -> Self {
        Self::new(MollifierKind::Symmetric)
    }

    pub fn one_sided() -> Self {
        Self::new(MollifierKind::OneSided)
    }

    pub fn kind(&self) -> MollifierKind {
        self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            MollifierKind::Symmetric => (-1.0, 1.0),
            MollifierKind::OneSided => (0.0, 1.0),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let s = match self.kind {
            MollifierKind::Symmetric => u,
            MollifierKind::OneSided => 2.0 * u - 1.0,
        };
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.norm * (-1.0 / (1.0 - s * s)).exp()
        }
    }

    /// `ρ_n(u) = n ρ(n u)`.
    pub fn scaled(&self, n: f64, u: f64) -> f64 {
        n * self.eval(n * u)
    }
}

/// `f_n = ρ_n * f`. `f_n''` is `ρ_n * f''`, tabulated on a grid of spacing
/// `1/(128 n)` as a piecewise-linear density (the constant density part is
/// carried over); `f_n` and `f_n'` are its closed-form antiderivatives, with
/// the affine part taken from the quadrature convolution.
pub fn mollify(f: &DcFunction, n: u32, rho: &Mollifier) -> Result<DcFunction> {
    if n == 0 {
        return Err(Error::domain("mollification level must be at least 1"));
    }
    let nf = n as f64;
    let (r_lo, r_hi) = rho.support();
    let m = f.second().clone();
    let mut kinks: Vec<f64> = m.atoms().iter().map(|a| a.loc).collect();
    for p in m.pieces() {
        kinks.push(p.lo);
        kinks.push(p.hi);
    }
    let kinks = Arc::new(kinks);

    // ∫ ρ(v) h(u - v/n) dv with v-breakpoints where u - v/n hits a kink
    let convolve = {
        let kinks = Arc::clone(&kinks);
        let rho = *rho;
        move |h: &dyn Fn(f64) -> f64, u: f64| -> f64 {
            let vb: Vec<f64> = kinks.iter().map(|c| nf * (u - c)).collect();
            quad::integrate_split(|v| rho.eval(v) * h(u - v / nf), r_lo, r_hi, &vb, MOLLIFIER_PANELS)
        }
    };

    let (fa, fb) = (f.clone(), f.clone());
    let conv_a = convolve.clone();
    let conv_b = convolve;
    let fn_eval = move |u: f64| conv_a(&|y| fa.eval(y), u);
    let fn_deriv = move |u: f64| conv_b(&|y| fb.deriv(y), u);

    // ρ_n * (f'' minus its constant part), tabulated
    let (s_lo, s_hi) = if m.atoms().is_empty() && m.pieces().is_empty() {
        (0.0, 0.0)
    } else {
        let lo = m.pieces().iter().map(|p| p.lo).chain(m.atoms().iter().map(|a| a.loc));
        let hi = m.pieces().iter().map(|p| p.hi).chain(m.atoms().iter().map(|a| a.loc));
        (
            lo.fold(f64::INFINITY, f64::min) + r_lo / nf,
            hi.fold(f64::NEG_INFINITY, f64::max) + r_hi / nf,
        )
    };
    let mut pieces = Vec::new();
    if s_hi > s_lo {
        let h = 1.0 / (128.0 * nf);
        let cells = ((s_hi - s_lo) / h).ceil() as usize;
        let shape = SecondDerivativeMeasure::new(0.0, m.pieces().to_vec(), vec![])?;
        let dens_at = |u: f64| -> f64 {
            let atoms: f64 = m.atoms().iter().map(|a| a.weight * rho.scaled(nf, u - a.loc)).sum();
            let cont = if shape.has_density() {
                let lo = u - r_hi / nf;
                let hi = u - r_lo / nf;
                shape.integrate_density(|s| rho.scaled(nf, u - s), lo, hi, &[])
            } else {
                0.0
            };
            atoms + cont
        };
        let mut prev = dens_at(s_lo);
        for k in 0..cells {
            let a = s_lo + k as f64 * h;
            let b = s_lo + (k + 1) as f64 * h;
            let next = dens_at(b);
            if prev != 0.0 || next != 0.0 {
                pieces.push(PolyPiece { lo: a, hi: b, poly: Poly::linear_through(a, prev, b, next) });
            }
            prev = next;
        }
    }
    let c = m.constant_density();
    let second = SecondDerivativeMeasure::new(c, pieces, vec![])?;
    // left of the tabulated support f_n is quadratic; pin its affine part
    // there so that the handles integrate the tabulated f_n'' exactly
    let u0 = if s_hi > s_lo { s_lo } else { 0.0 };
    let slope = fn_deriv(u0) - c * u0;
    let intercept = fn_eval(u0) - slope * u0 - 0.5 * c * u0 * u0;
    Ok(DcFunction::from_measure(format!("{}*rho_{}", f.name(), n), intercept, slope, second))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_continuous_sign() {
        assert_eq!(sign_left(0.0), -1.0);
        assert_eq!(sign_left(1e-300), 1.0);
        let f = DcFunction::half_abs(0.25);
        assert_eq!(f.deriv(0.25), -0.5);
        assert_eq!(f.deriv(0.2500001), 0.5);
        let g = DcFunction::relu(0.0);
        assert_eq!(g.deriv(0.0), 0.0);
    }

    #[test]
    fn integrate_against_unit_atom() {
        let f = DcFunction::half_abs(0.3);
        let v = integrate_against_f2(|_| 1.0, &f, (-5.0, 5.0), &[]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn integrate_against_lebesgue_indicator() {
        let f = DcFunction::half_square();
        let v = integrate_against_f2(|u| if (0.0..1.0).contains(&u) { 1.0 } else { 0.0 }, &f, (-2.0, 2.0), &[0.0, 1.0]);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integrate_distance_weight_over_unit_bracket() {
        // ∫_[0,1) |1-u| du = 1/2
        let f = DcFunction::half_square();
        let v = integrate_against_f2(|u| (1.0 - u).abs(), &f, (0.0, 1.0), &[]);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jf_increment_examples() {
        let sq = DcFunction::half_square();
        assert_eq!(sq.jf_increment(0.7, 0.7), 0.0);
        assert!((sq.jf_increment(1.0, 0.0) - 0.5).abs() < 1e-15);
        // f = |·| as 2 · half_abs(0)
        let abs = DcFunction::from_measure(
            "abs",
            0.0,
            -1.0,
            SecondDerivativeMeasure::new(0.0, vec![], vec![Atom { loc: 0.0, weight: 2.0 }]).unwrap(),
        );
        assert_eq!(abs.eval(-1.0), 1.0);
        assert_eq!(abs.jf_increment(1.0, -1.0), 2.0);
        assert_eq!(abs.jf_measure(1.0, -1.0), 2.0);
    }

    #[test]
    fn jf_orientation_is_left_point() {
        // asymmetric case distinguishing ⟦a,b⟦|b-u| from ⟦b,a⟦|a-u|
        let f = DcFunction::relu(0.0);
        assert_eq!(f.jf_increment(-1.0, 2.0), 2.0);
        assert_eq!(f.jf_measure(-1.0, 2.0), 2.0);
        assert_eq!(f.jf_increment(2.0, -1.0), 1.0);
        assert_eq!(f.jf_measure(2.0, -1.0), 1.0);
    }

    #[test]
    fn bump_has_unit_mass_and_closed_forms_agree() {
        let f = DcFunction::bump(0.2, 0.7);
        let mass = f.second().density_mass(-1.0, 1.5);
        assert!((mass - 1.0).abs() < 1e-13);
        // f' differences equal density mass; f differences equal ∫ f'
        for (a, b) in [(-0.6, 0.1), (0.0, 0.85), (-2.0, 2.0)] {
            let dm = f.second().density_mass(a, b);
            assert!((f.deriv(b) - f.deriv(a) - dm).abs() < 1e-13);
            let df = quad::integrate_split(|u| f.deriv(u), a, b, &[-0.5, 0.9], 8);
            assert!((f.eval(b) - f.eval(a) - df).abs() < 1e-12);
        }
    }

    #[test]
    fn suite_shapes() {
        let suite = builtin_suite();
        assert!(suite.iter().any(|f| !f.second().has_density() && !f.second().atoms().is_empty()));
        assert!(suite.iter().any(|f| f.second().has_density() && f.second().atoms().is_empty()));
        assert!(suite.iter().any(|f| f.second().has_density() && !f.second().atoms().is_empty()));
    }

    #[test]
    fn binned_integration_uses_containing_cell_for_atoms() {
        let grid = LevelGrid::new(-5, 0.1, 11).unwrap();
        let vals: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let f = DcFunction::half_abs(0.04);
        // 0.04 lies in the cell centred on node 0 (index 5)
        assert_eq!(integrate_binned_against_f2(&vals, &grid, &f).unwrap(), 5.0);
        let far = DcFunction::half_abs(3.0);
        assert!(integrate_binned_against_f2(&vals, &grid, &far).is_err());
        assert!(integrate_binned_against_f2(&vals[..3], &grid, &f).is_err());
    }

    #[test]
    fn mollifiers_have_unit_mass() {
        for rho in [Mollifier::symmetric(), Mollifier::one_sided()] {
            let (lo, hi) = rho.support();
            // independent composite Simpson
            let n = 1 << 16;
            let h = (hi - lo) / n as f64;
            let mut s = rho.eval(lo) + rho.eval(hi);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * rho.eval(lo + k as f64 * h);
            }
            let mass = s * h / 3.0;
            assert!((mass - 1.0).abs() <= 1e-10, "mass {mass}");
            assert!((lo..hi).step_by_f64(1e-3).all(|u| rho.eval(u) >= 0.0));
        }
    }

    trait StepF64 {
        fn step_by_f64(self, h: f64) -> Box<dyn Iterator<Item = f64>>;
    }
    impl StepF64 for std::ops::Range<f64> {
        fn step_by_f64(self, h: f64) -> Box<dyn Iterator<Item = f64>> {
            let n = ((self.end - self.start) / h) as usize;
            let s = self.start;
            Box::new((0..=n).map(move |k| s + k as f64 * h))
        }
    }

    #[test]
    fn mollify_preserves_affine() {
        let f = DcFunction::affine(0.3, -1.7);
        let g = mollify(&f, 3, &Mollifier::symmetric()).unwrap();
        for u in [-2.0, 0.0, 0.77] {
            assert!((g.eval(u) - f.eval(u)).abs() < 1e-12, "{}", g.eval(u) - f.eval(u));
            assert!((g.deriv(u) - f.deriv(u)).abs() < 1e-12);
        }
        // the one-sided kernel has mean 1/2, so it shifts by 1/(2n)
        let g = mollify(&f, 3, &Mollifier::one_sided()).unwrap();
        for u in [-2.0, 0.0, 0.77] {
            assert!((g.eval(u) - f.eval(u - 1.0 / 6.0)).abs() < 1e-12);
            assert!((g.deriv(u) - f.deriv(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn mollified_abs_converges() {
        // |·| = 2 · half_abs(0); oracle: direct convolution by a fine
        // midpoint rule in the mollifier variable
        let abs = DcFunction::from_measure(
            "abs",
            0.0,
            -1.0,
            SecondDerivativeMeasure::new(0.0, vec![], vec![Atom { loc: 0.0, weight: 2.0 }]).unwrap(),
        );
        let rho = Mollifier::symmetric();
        let mut prev = f64::INFINITY;
        for n in [1u32, 4, 16, 64] {
            let g = mollify(&abs, n, &rho).unwrap();
            let m = 200_000;
            let oracle: f64 = (0..m)
                .map(|k| {
                    let v = -1.0 + (k as f64 + 0.5) * 2.0 / m as f64;
                    rho.eval(v) * (v / n as f64).abs() * 2.0 / m as f64
                })
                .sum();
            // tabulation error of f_n'', second order in the spacing
            assert!((g.eval(0.0) - oracle).abs() < 2e-5 / n as f64, "n={n}");
            assert!(g.eval(0.0) < prev);
            prev = g.eval(0.0);
            if n >= 4 {
                assert!((g.deriv(1.0) - 1.0).abs() < 1e-12);
                assert!((g.deriv(-1.0) + 1.0).abs() < 1e-12);
            }
            // f_n'' mass over the window tends to f'' mass (= 2)
            let mass = g.second().density_mass(-3.0, 3.0);
            assert!((mass - 2.0).abs() < 1e-3, "n={n} mass={mass}");
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn one_sided_mollification_converges_pointwise() {
        let f = DcFunction::default_mixture();
        let rho = Mollifier::one_sided();
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.1 + 0.013).collect();
        let mut errs = Vec::new();
        for n in [2u32, 8, 32, 128] {
            let g = mollify(&f, n, &rho).unwrap();
            errs.push(grid.iter().map(|&u| (g.eval(u) - f.eval(u)).abs()).fold(0.0, f64::max));
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 1e-2);
    }

    #[test]
    fn descriptor_round_trip() {
        let d: FunctionDescriptor = serde_json::from_str(r#"{"kind":"bump","center":0.5}"#).unwrap();
        let f = d.build().unwrap();
        assert!((f.second().density_mass(-1.0, 2.0) - 1.0).abs() < 1e-13);
        let m: FunctionDescriptor =
            serde_json::from_str(r#"{"kind":"mix","atoms":[[0.0,1.0]],"density":[[0,1,2]]}"#).unwrap();
        let g = m.build().unwrap();
        assert_eq!(g.second().atoms().len(), 1);
        assert!(serde_json::from_str::<FunctionDescriptor>(r#"{"kind":"nope"}"#).is_err());
    }
}

//! Gauss–Legendre quadrature and a small dense polynomial type.

use std::sync::OnceLock;

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// 16-point Gauss–Legendre on `[a, b]`; exact for polynomials of degree ≤ 31.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (x, w) = gl16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Composite 16-point rule with `panels` equal panels.
pub fn integrate_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| integrate(&f, a + k as f64 * h, if k + 1 == panels { b } else { a + (k + 1) as f64 * h }))
        .sum()
}

/// Composite rule over `[a, b]` split at every breakpoint strictly inside.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], panels: usize) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2).map(|w| integrate_composite(&f, w[0], w[1], panels)).sum()
}

/// Dense polynomial `Σ c_k u^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// Polynomial through `(a, ya)` and `(b, yb)`.
    pub fn linear_through(a: f64, ya: f64, b: f64, yb: f64) -> Self {
        let slope = (yb - ya) / (b - a);
        Poly(vec![ya - slope * a, slope])
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(k, a)| a / (k + 1) as f64));
        Poly(c)
    }

    /// `u ↦ u · p(u)`.
    pub fn times_u(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend_from_slice(&self.0);
        Poly(c)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// `p(u - shift)` expanded, used to recentre pieces.
    pub fn shifted(&self, shift: f64) -> Poly {
        // Horner composition with (u - shift)
        let mut out = vec![0.0; self.0.len()];
        for &c in self.0.iter().rev() {
            // out = out * (u - shift) + c
            let mut next = vec![0.0; out.len()];
            for k in 0..out.len() {
                if k + 1 < next.len() {
                    next[k + 1] += out[k];
                }
                next[k] -= shift * out[k];
            }
            next[0] += c;
            out = next;
        }
        Poly(out)
    }
}

//! Radial trapping potentials, their derivatives, and the critical-point
//! analysis of r ↦ r²V(r).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A radial potential with two analytic (or spline) derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialPotential {
    /// V(r) = A·exp(−(r−c)²/w²)
    GaussianBump { a: f64, c: f64, w: f64 },
    /// V(r) = A·r^p·exp(−(r/w)²)
    PowerWindow { a: f64, p: f64, w: f64 },
    /// Natural cubic spline through (r_i, V_i) knots.
    Tabulated(CubicSpline),
}

impl RadialPotential {
    /// Value and first two derivatives at r > 0.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::parameter(format!("r = {r} must be positive")));
        }
        Ok(match self {
            RadialPotential::GaussianBump { a, c, w } => {
                let z = (r - c) / w;
                let e = a * (-z * z).exp();
                let d1 = -2.0 * z / w * e;
                let d2 = (4.0 * z * z - 2.0) / (w * w) * e;
                (e, d1, d2)
            }
            RadialPotential::PowerWindow { a, p, w } => {
                let z = (r / w) * (r / w);
                let e = a * r.powf(*p) * (-z).exp();
                let d1 = e * (p / r - 2.0 * r / (w * w));
                let d2 = e
                    * ((p * (p - 1.0)) / (r * r) - 2.0 * (2.0 * p + 1.0) / (w * w)
                        + 4.0 * r * r / (w * w * w * w));
                (e, d1, d2)
            }
            RadialPotential::Tabulated(spline) => spline.eval(r)?,
        })
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).map(|(v, _, _)| v).unwrap_or(f64::NAN)
    }

    /// d/dr of r²V(r).
    pub fn ring_energy_slope(&self, r: f64) -> Result<f64> {
        let (v, dv, _) = self.eval(r)?;
        Ok(2.0 * r * v + r * r * dv)
    }

    /// d²/dr² of r²V(r).
    pub fn ring_energy_curvature(&self, r: f64) -> Result<f64> {
        let (v, dv, ddv) = self.eval(r)?;
        Ok(2.0 * v + 4.0 * r * dv + r * r * ddv)
    }

    /// Checks positivity of V on [lo, hi] by dense sampling.
    pub fn positive_on(&self, lo: f64, hi: f64) -> Result<bool> {
        let n = 256;
        for i in 0..=n {
            let r = lo + (hi - lo) * i as f64 / n as f64;
            if r <= 0.0 {
                continue;
            }
            if self.eval(r)?.0 <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Natural cubic spline interpolant with analytic derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m2: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::parameter("spline needs >= 3 matching knots"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::parameter("spline knots must be strictly increasing"));
        }
        // Thomas algorithm on the natural-spline tridiagonal system
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = (rhs[i] - sup[i] * m2[i + 1]) / diag[i];
        }
        Ok(CubicSpline { xs, ys, m2 })
    }

    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return Err(Error::parameter(format!(
                "x = {x} outside tabulated range [{}, {}]",
                self.xs[0],
                self.xs[n - 1]
            )));
        }
        let j = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.xs[j + 1] - self.xs[j];
        let a = (self.xs[j + 1] - x) / h;
        let b = (x - self.xs[j]) / h;
        let v = a * self.ys[j]
            + b * self.ys[j + 1]
            + ((a * a * a - a) * self.m2[j] + (b * b * b - b) * self.m2[j + 1]) * h * h / 6.0;
        let d1 = (self.ys[j + 1] - self.ys[j]) / h
            + (-(3.0 * a * a - 1.0) * self.m2[j] + (3.0 * b * b - 1.0) * self.m2[j + 1]) * h / 6.0;
        let d2 = a * self.m2[j] + b * self.m2[j + 1];
        Ok((v, d1, d2))
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }
}

/// Outcome of the critical-point search for r ↦ r²V(r).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub r0: f64,
    /// d²/dr²[r²V] at r0.
    pub f_second: f64,
    pub nondegenerate: bool,
    pub positive_at_r0: bool,
}

/// Locates a critical point of f(r) = r²V(r) inside the bracket.
///
/// Bisection on f′ down to width 1e-6, then Newton with f″ until
/// |f′(r0)| < 1e-12·max(1, |f(r0)|). The bracket endpoints must produce a
/// sign change of f′.
pub fn find_r0(potential: &RadialPotential, bracket: (f64, f64)) -> Result<CriticalPointReport> {
    let (report, _) = find_r0_with_trail(potential, bracket)?;
    Ok(report)
}

/// As [`find_r0`], also returning the Newton residual history |f′(r)|.
pub fn find_r0_with_trail(
    potential: &RadialPotential,
    bracket: (f64, f64),
) -> Result<(CriticalPointReport, Vec<f64>)> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Bracket(format!(
            "bracket ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }
    let fp = |r: f64| potential.ring_energy_slope(r);
    let mut flo = fp(lo)?;
    let fhi = fp(hi)?;
    if flo == 0.0 {
        // lands exactly on the root; fall through with a degenerate bracket
        hi = lo;
    } else if flo * fhi > 0.0 {
        return Err(Error::Bracket(format!(
            "f'(r) = d/dr[r^2 V] does not change sign on ({lo}, {hi}): f'({lo}) = {flo:.6e}, f'({hi}) = {fhi:.6e}"
        )));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let fmid = fp(mid)?;
        if fmid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    let mut r = 0.5 * (lo + hi);
    let mut trail = Vec::new();
    let f_at = |r: f64| -> Result<f64> {
        let (v, _, _) = potential.eval(r)?;
        Ok(r * r * v)
    };
    for _ in 0..60 {
        let slope = fp(r)?;
        trail.push(slope.abs());
        if slope.abs() < 1e-12 * f_at(r)?.abs().max(1.0) {
            break;
        }
        let curv = potential.ring_energy_curvature(r)?;
        if curv.abs() < 1e-300 {
            break;
        }
        r -= slope / curv;
    }
    let slope = fp(r)?;
    let f0 = f_at(r)?;
    if slope.abs() >= 1e-12 * f0.abs().max(1.0) {
        return Err(Error::Bracket(format!(
            "Newton polish did not converge: |f'({r})| = {:.3e}",
            slope.abs()
        )));
    }
    let f_second = potential.ring_energy_curvature(r)?;
    let tol = 1e-8 * f0.abs();
    Ok((
        CriticalPointReport {
            r0: r,
            f_second,
            nondegenerate: f_second.abs() > tol,
            positive_at_r0: potential.eval(r)?.0 > 0.0,
        },
        trail,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_bump_peak_values() {
        let v = RadialPotential::GaussianBump { a: 1.0, c: 1.0, w: 1.0 };
        let (val, d1, d2) = v.eval(1.0).unwrap();
        assert_relative_eq!(val, 1.0, epsilon = 1e-15);
        assert_relative_eq!(d1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d2, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let pots = [
            RadialPotential::GaussianBump { a: 0.7, c: 1.3, w: 0.8 },
            RadialPotential::PowerWindow { a: 1.1, p: 2.0, w: 1.5 },
        ];
        for pot in &pots {
            for i in 0..100 {
                let r = 0.3 + 2.4 * i as f64 / 99.0;
                let (_, d1, d2) = pot.eval(r).unwrap();
                let h = 1e-5;
                let f = |r: f64| pot.eval(r).unwrap().0;
                let fd1 = crate::numeric::central_diff(&f, r, h);
                let fd2 = crate::numeric::second_diff(&f, r, h);
                assert_relative_eq!(d1, fd1, max_relative = 1e-6, epsilon = 1e-8);
                assert_relative_eq!(d2, fd2, max_relative = 1e-4, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn spline_reproduces_knots_exactly() {
        let xs: Vec<f64> = (0..12).map(|i| 0.5 + 0.25 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x - 1.4).cos()).collect();
        let sp = CubicSpline::natural(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (v, _, _) = sp.eval(*x).unwrap();
            assert_relative_eq!(v, *y, epsilon = 1e-14);
        }
    }

    #[test]
    fn golden_ratio_critical_point() {
        // V = exp(−(r−1)²): f' = 0 reduces to r² − r − 1 = 0
        let v = RadialPotential::GaussianBump { a: 1.0, c: 1.0, w: 1.0 };
        let rep = find_r0(&v, (0.5, 3.0)).unwrap();
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(rep.r0, golden, epsilon = 1e-10);
        assert!(rep.nondegenerate);
        assert!(rep.positive_at_r0);
        assert!(rep.f_second < 0.0);
    }

    #[test]
    fn constant_potential_has_no_critical_point() {
        // f = r² is monotone for r > 0
        let xs: Vec<f64> = (0..16).map(|i| 0.2 + 0.2 * i as f64).collect();
        let ys = vec![1.0; 16];
        let v = RadialPotential::Tabulated(CubicSpline::natural(xs, ys).unwrap());
        assert!(matches!(find_r0(&v, (0.3, 3.0)), Err(Error::Bracket(_))));
    }

    #[test]
    fn inverse_potential_is_monotone() {
        // V = 1/r on a window: f = r, f' = 1, no sign change
        let xs: Vec<f64> = (0..40).map(|i| 0.5 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let v = RadialPotential::Tabulated(CubicSpline::natural(xs, ys).unwrap());
        assert!(matches!(find_r0(&v, (0.6, 4.0)), Err(Error::Bracket(_))));
    }

    #[test]
    fn bracket_perturbation_stability() {
        let v = RadialPotential::GaussianBump { a: 1.0, c: 1.0, w: 1.0 };
        let base = find_r0(&v, (0.5, 3.0)).unwrap().r0;
        for (lo, hi) in [(0.4, 3.6), (0.6, 2.4), (0.405, 2.9)] {
            let r = find_r0(&v, (lo, hi)).unwrap().r0;
            assert_relative_eq!(r, base, epsilon = 1e-10);
        }
    }

    #[test]
    fn newton_residual_trail_decreases() {
        let v = RadialPotential::GaussianBump { a: 1.0, c: 1.0, w: 1.0 };
        let (_, trail) = find_r0_with_trail(&v, (0.5, 3.0)).unwrap();
        let tail: Vec<_> = trail.iter().rev().take(3).rev().collect();
        for w in tail.windows(2) {
            assert!(w[1] <= w[0], "residuals not monotone: {trail:?}");
        }
    }

    #[test]
    fn power_window_critical_point_closed_form() {
        // f = A r^{p+2} exp(−r²/w²): r0 = w sqrt((p+2)/2)
        let v = RadialPotential::PowerWindow { a: 2.0, p: 1.5, w: 1.2 };
        let rep = find_r0(&v, (0.5, 4.0)).unwrap();
        assert_relative_eq!(rep.r0, 1.2 * (3.5f64 / 2.0).sqrt(), epsilon = 1e-9);
    }
}

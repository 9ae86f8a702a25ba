//! Shared numerical utilities: deterministic summation, low-discrepancy
//! sequences, 1D quadrature and small least-squares fits.

/// Pairwise (tree) summation over a slice. Deterministic for a fixed slice
/// order, independent of how the slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Generalized golden ratio for the rank-d Kronecker sequence: the unique
/// positive root of x^(d+1) = x + 1.
fn kronecker_base(d: u32) -> f64 {
    let mut x = 2.0_f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// Deterministic low-discrepancy sequence in the unit cube [0,1)^3.
#[derive(Clone, Copy, Debug)]
pub struct Kronecker3 {
    alpha: [f64; 3],
}

impl Kronecker3 {
    pub fn new() -> Self {
        let g = kronecker_base(3);
        Kronecker3 {
            alpha: [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)],
        }
    }

    /// n-th element of the stream starting at `offset`.
    pub fn at(&self, offset: u64, n: u64) -> [f64; 3] {
        let idx = (offset + n + 1) as f64;
        let f = |a: f64| (0.5 + idx * a).fract();
        [f(self.alpha[0]), f(self.alpha[1]), f(self.alpha[2])]
    }
}

impl Default for Kronecker3 {
    fn default() -> Self {
        Self::new()
    }
}

/// Adaptive Simpson quadrature on [a, b].
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Central difference approximation of f'(x).
pub fn central_diff(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central difference approximation of f''(x).
pub fn second_diff(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Least-squares line through (x_i, y_i); returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// Least squares fit of y = a + b/x + c/x^2; returns (a, b, c).
pub fn inverse_poly_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert!(xs.len() >= 3);
    // normal equations for the basis {1, 1/x, 1/x^2}
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let phi = [1.0, 1.0 / x, 1.0 / (x * x)];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += phi[i] * phi[j];
            }
            atb[i] += phi[i] * y;
        }
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
    let b = nalgebra::Vector3::new(atb[0], atb[1], atb[2]);
    let sol = m.lu().solve(&b).expect("normal equations singular");
    (sol[0], sol[1], sol[2])
}

//! Property-check harness: fitted-constant verification of the two weighted
//! interaction inequalities, interaction-sum asymptotics, analytic bubble and
//! eigenfunction identities, and symmetry-class checks.

use crate::bubbles::{Bubble, SecondEigenfunction};
use crate::error::{Error, Result};
use crate::fields::{pair_sign_flip, plane_swap, Field, Point};
use crate::geometry::{LatticeMode, OrthogonalMap4, PeakLattice};
use crate::numeric::{linear_fit, pairwise_sum, Kronecker3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Outcome of one property check. `measured` carries the check-specific
/// numbers (fitted constants, slopes, worst deviations).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: Vec<f64>,
    pub threshold: f64,
    pub samples: usize,
    pub seed: u64,
}

fn random_point(rng: &mut StdRng, scale: f64) -> Point {
    Point::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// Fits the smallest constant C in the two-peak weight inequality
///   (1+|x−x_i|)^(−α₁)(1+|x−x_j|)^(−α₂)
///     ≤ C·|x_i−x_j|^(−α)·[(1+|x−x_i|)^(−α₁−α₂+α) + (1+|x−x_j|)^(−α₁−α₂+α)]
/// over random (x, x_i, x_j) triples in a box of side 10, and checks the fit
/// is stable when the sample count doubles.
pub fn check_two_peak_inequality(
    alpha1: f64,
    alpha2: f64,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CheckResult> {
    if !(alpha > 0.0 && alpha <= alpha1.min(alpha2)) {
        return Err(Error::parameter(format!(
            "need 0 < alpha <= min(alpha1, alpha2); got alpha = {alpha}"
        )));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let ratio = |x: &Point, xi: &Point, xj: &Point| -> f64 {
        let di = 1.0 + (x - xi).norm();
        let dj = 1.0 + (x - xj).norm();
        let lhs = di.powf(-alpha1) * dj.powf(-alpha2);
        let rhs = (xi - xj).norm().powf(-alpha)
            * (di.powf(-(alpha1 + alpha2 - alpha)) + dj.powf(-(alpha1 + alpha2 - alpha)));
        lhs / rhs
    };
    let draw = |rng: &mut StdRng| loop {
        let xi = random_point(rng, 5.0);
        let xj = random_point(rng, 5.0);
        if (xi - xj).norm() > 1e-3 {
            return (random_point(rng, 5.0), xi, xj);
        }
    };
    let mut c_half = 0.0f64;
    for _ in 0..n_samples {
        let (x, xi, xj) = draw(&mut rng);
        c_half = c_half.max(ratio(&x, &xi, &xj));
    }
    let mut c_full = c_half;
    for _ in 0..n_samples {
        let (x, xi, xj) = draw(&mut rng);
        c_full = c_full.max(ratio(&x, &xi, &xj));
    }
    let growth = (c_full - c_half) / c_half;
    Ok(CheckResult {
        name: format!("two_peak_inequality(a1={alpha1},a2={alpha2},a={alpha})"),
        passed: c_full.is_finite() && growth < 0.2,
        measured: vec![c_half, c_full, growth],
        threshold: 0.2,
        samples: 2 * n_samples,
        seed,
    })
}

/// Evaluates ∫ |z−x|^(−2) (1+|z|)^(−2−α) dz by a singularity-centered radial
/// rule with an analytic far tail.
fn kernel_decay_integral(x_norm: f64, alpha: f64, shells_per_decade: usize, nang: usize) -> f64 {
    let x = Point::new(x_norm, 0.0, 0.0, 0.0);
    let seq = Kronecker3::new();
    let lo = 1e-6 * (1.0 + x_norm);
    let hi = 1e4 * (1.0 + x_norm);
    let decades = (hi / lo).log10();
    let cells = (shells_per_decade as f64 * decades).ceil() as usize;
    let g = |z: &Point| (1.0 + z.norm()).powf(-(2.0 + alpha));
    let mut terms = Vec::with_capacity(cells + 1);
    let mut prev = 0.0f64;
    for c in 0..=cells {
        let edge = if c == cells {
            hi
        } else {
            lo * (hi / lo).powf(c as f64 / cells as f64)
        };
        // cell weight exact for the measure t·dt (the |z−x|^(−2) factor
        // cancels two powers of the 4D volume element)
        let w = 0.5 * (edge * edge - prev * prev);
        let t = if prev == 0.0 { 0.5 * edge } else { (prev * edge).sqrt() };
        let mut acc = 0.0;
        let half = nang / 2;
        for b in 0..half {
            let u = seq.at((c as u64) * half as u64, b as u64);
            let (v, p1, p2) = (u[0], 2.0 * PI * u[1], 2.0 * PI * u[2]);
            let ce = (1.0 - v).sqrt();
            let se = v.sqrt();
            let d = Point::new(ce * p1.cos(), ce * p1.sin(), se * p2.cos(), se * p2.sin());
            acc += g(&(x + d * t)) + g(&(x - d * t));
        }
        terms.push(w * acc * 2.0 * PI * PI / (2.0 * half as f64));
        prev = edge;
    }
    // tail: for t >> max(1, |x|), the angular average is ~ t^(−2−α)
    let tail = 2.0 * PI * PI * hi.powf(-alpha) / alpha;
    pairwise_sum(&terms) + tail
}

/// Fits C in ∫ |z−x|^(−2)(1+|z|)^(−2−α) dz ≤ C (1+|x|)^(−α) over sample
/// points with |x| log-spaced in [0, 10³], and checks refinement stability.
pub fn check_kernel_decay(alpha: f64, n_samples: usize, seed: u64) -> Result<CheckResult> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::parameter(format!(
            "need 0 < alpha < 2 (open interval); got {alpha}"
        )));
    }
    let n = n_samples.max(4);
    let mut positions = vec![0.0f64];
    for i in 0..n - 1 {
        positions.push(1e-1 * (1e4f64).powf(i as f64 / (n - 2).max(1) as f64));
    }
    let fit = |spd: usize, nang: usize| -> f64 {
        positions
            .iter()
            .map(|&r| kernel_decay_integral(r, alpha, spd, nang) * (1.0 + r).powf(alpha))
            .fold(0.0f64, f64::max)
    };
    let coarse = fit(8, 32);
    let fine = fit(16, 64);
    let change = (fine - coarse).abs() / fine;
    Ok(CheckResult {
        name: format!("kernel_decay(alpha={alpha})"),
        passed: fine.is_finite() && change < 0.2,
        measured: vec![coarse, fine, change],
        threshold: 0.2,
        samples: positions.len(),
        seed,
    })
}

/// Regression check of the interaction-sum growth in the polygon size: the
/// exact sums follow k^α for α > 1, k·ln k at α = 1, and k^(1+α) for α < 1.
pub fn check_interaction_asymptotics(
    alphas: &[f64],
    ks: &[usize],
    m: usize,
) -> Result<CheckResult> {
    if ks.len() < 3 {
        return Err(Error::parameter("need at least 3 polygon sizes"));
    }
    let rho = 1.0;
    let mut measured = Vec::new();
    let mut passed = true;
    for &alpha in alphas {
        let mut logs = Vec::new();
        let mut logk = Vec::new();
        let mut lnk_ratios = Vec::new();
        for &k in ks {
            let lat = PeakLattice::new(k, m, rho, LatticeMode::CounterRotating)?;
            let sum = lat.interaction_sum(alpha, (1, 1))?;
            logk.push((k as f64).ln());
            logs.push(sum.ln());
            lnk_ratios.push(sum / (k as f64 * (k as f64).ln()));
        }
        if (alpha - 1.0).abs() < 1e-12 {
            // bounded ratio to k ln k
            let lo = lnk_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = lnk_ratios.iter().cloned().fold(0.0f64, f64::max);
            measured.push(hi / lo);
            passed &= hi.is_finite() && hi / lo < 2.0;
        } else {
            let (slope, _) = linear_fit(&logk, &logs);
            measured.push(slope);
            let (target, tol) = if alpha > 1.0 {
                (alpha, 0.05)
            } else {
                (1.0 + alpha, 0.1)
            };
            passed &= (slope - target).abs() <= tol;
        }
    }
    Ok(CheckResult {
        name: format!("interaction_asymptotics(m={m})"),
        passed,
        measured,
        threshold: 0.1,
        samples: ks.len() * alphas.len(),
        seed: 0,
    })
}

/// Analytic identities of the bubble and the eigenfunctions at random points:
/// −ΔU = U³ and −ΔZ_l = 3U²Z_l for l = 0..4.
pub fn check_bubble_and_eigen(n_samples: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = StdRng::seed_from_u64(seed);
    let u = Bubble::new(1.0, Point::zeros())?;
    let mut worst_u = 0.0f64;
    let mut worst_z = 0.0f64;
    use crate::fields::SmoothField;
    for _ in 0..n_samples {
        let x = random_point(&mut rng, 4.0);
        let j = u.jet(&x);
        worst_u = worst_u.max((-j.lap - j.value.powi(3)).abs() / j.value.powi(3));
        let u2 = j.value * j.value;
        for l in 0..=4 {
            let z = SecondEigenfunction::new(l)?;
            let zj = z.jet(&x);
            let resid = -zj.lap - 3.0 * u2 * zj.value;
            let scale = zj.lap.abs().max((3.0 * u2 * zj.value).abs()).max(1e-12);
            worst_z = worst_z.max(resid.abs() / scale);
        }
    }
    let threshold = 1e-10;
    Ok(CheckResult {
        name: "bubble_and_eigenfunction_identities".into(),
        passed: worst_u < threshold && worst_z < threshold,
        measured: vec![worst_u, worst_z],
        threshold,
        samples: n_samples,
        seed,
    })
}

/// Verifies a field's declared symmetry relations at random points.
pub fn check_symmetry_class(field: &dyn Field, n_samples: usize, seed: u64) -> Result<CheckResult> {
    let sym = field.symmetry();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let x = random_point(&mut rng, 2.5);
        let v = field.value(&x);
        let scale = v.abs().max(1e-300);
        if sym.pair_sign_flip {
            worst = worst.max((field.value(&pair_sign_flip(&x)) - v).abs() / scale);
        }
        if sym.plane_swap {
            worst = worst.max((field.value(&plane_swap(&x)) - v).abs() / scale);
        }
        if let Some(k) = sym.polygon {
            for i in [2, k / 2 + 1, k] {
                let map = OrthogonalMap4::vertex_rotation(i, k)?;
                worst = worst.max((field.value(&map.apply(&x)) - v).abs() / scale);
            }
        }
    }
    let threshold = 1e-12;
    Ok(CheckResult {
        name: "symmetry_class".into(),
        passed: worst < threshold,
        measured: vec![worst],
        threshold,
        samples: n_samples,
        seed,
    })
}

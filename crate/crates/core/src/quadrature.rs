//! 4D integration of bubble-peaked integrands over the cut-off annulus, and
//! structured-sample estimation of the weighted sup-norms.
//!
//! The plan tiles the annulus D_ε = {| |x| − r0 | ≤ ε} into disjoint balls
//! around every blow-up point plus the remaining background. Ball integrals
//! use log-spaced radial cells — each carrying a two-point Gaussian rule for
//! the measure s³ds, so constants integrate exactly — crossed with
//! equal-weight direction sets on the unit 3-sphere. Direction sets are
//! low-discrepancy bases expanded into orbits of the lattice's component
//! rotations and anchored to the lattice frame, so the whole node family
//! transforms rigidly with the lattice.

use crate::error::{Error, Result};
use crate::fields::{Field, Point};
use crate::geometry::{LatticeMode, OrthogonalMap4, PeakLattice};
use crate::numeric::{pairwise_sum, Kronecker3};
use nalgebra::Matrix4;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Surface area of the unit 3-sphere.
const S3_AREA: f64 = 2.0 * PI * PI;

/// Node-count knobs of a plan. `doubled` doubles both the radial levels and
/// the angular nodes, which is the refinement used for error estimates.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct PlanResolution {
    pub shells_per_decade: usize,
    pub angular_per_shell: usize,
    pub background_radial: usize,
    pub background_angular: usize,
}

impl Default for PlanResolution {
    fn default() -> Self {
        PlanResolution {
            shells_per_decade: 16,
            angular_per_shell: 192,
            background_radial: 48,
            background_angular: 1536,
        }
    }
}

impl PlanResolution {
    pub fn doubled(&self) -> Self {
        PlanResolution {
            shells_per_decade: self.shells_per_decade * 2,
            angular_per_shell: self.angular_per_shell * 2,
            background_radial: self.background_radial * 2,
            background_angular: self.background_angular * 2,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(4);
        PlanResolution {
            shells_per_decade: s(self.shells_per_decade),
            angular_per_shell: s(self.angular_per_shell),
            background_radial: s(self.background_radial),
            background_angular: s(self.background_angular),
        }
    }
}

/// Two-point Gaussian rule for ∫_a^b g(s) s³ ds, exact for cubic g.
/// Returns [(node, weight); 2] with positive weights summing to the exact
/// cell measure (b⁴ − a⁴)/4.
fn gauss2_cell(a: f64, b: f64) -> [(f64, f64); 2] {
    debug_assert!(b > a && a >= 0.0);
    let (m, scale) = if a == 0.0 {
        ([0.25, 0.2, 1.0 / 6.0, 1.0 / 7.0], b)
    } else {
        let g = b / a;
        let mut m = [0.0; 4];
        for (j, mj) in m.iter_mut().enumerate() {
            *mj = (g.powi(4 + j as i32) - 1.0) / (4 + j) as f64;
        }
        (m, a)
    };
    let det = m[1] * m[1] - m[0] * m[2];
    let beta = (m[0] * m[3] - m[1] * m[2]) / det;
    let gamma = (m[2] * m[2] - m[1] * m[3]) / det;
    let disc = (beta * beta - 4.0 * gamma).max(0.0).sqrt();
    let s1 = 0.5 * (-beta - disc);
    let s2 = 0.5 * (-beta + disc);
    let w1 = (m[1] - s2 * m[0]) / (s1 - s2);
    let w2 = m[0] - w1;
    let s4 = scale.powi(4);
    [(s1 * scale, w1 * s4), (s2 * scale, w2 * s4)]
}

/// Direction generator: low-discrepancy base points expanded into the orbit
/// of the lattice's component rotations, rotated into the lattice frame.
#[derive(Clone)]
struct DirectionSet {
    frame: Matrix4<f64>,
    orbit: Vec<Matrix4<f64>>,
    seq: Kronecker3,
}

impl DirectionSet {
    fn new(lattice: &PeakLattice) -> Self {
        let m = lattice.m();
        let orbit: Vec<Matrix4<f64>> = match lattice.mode() {
            LatticeMode::CounterRotating => (0..2 * m)
                .map(|j| *OrthogonalMap4::counter_rotation(j as f64 * PI / m as f64).matrix())
                .collect(),
            LatticeMode::PlanarRotating => (0..m)
                .flat_map(|j| {
                    let t = *OrthogonalMap4::first_plane_rotation(j as f64 * PI / m as f64)
                        .matrix();
                    [t, -t]
                })
                .collect(),
        };
        DirectionSet {
            frame: *lattice.frame(),
            orbit,
            seq: Kronecker3::new(),
        }
    }

    fn orbit_len(&self) -> usize {
        self.orbit.len()
    }

    fn base_count(&self, requested: usize) -> usize {
        (requested + self.orbit_len() - 1) / self.orbit_len()
    }

    /// Emits `base_count(requested) * orbit_len()` unit directions for the
    /// stream `offset`.
    fn emit(&self, requested: usize, offset: u64, out: &mut Vec<Point>) {
        out.clear();
        let nb = self.base_count(requested);
        for b in 0..nb {
            let u = self.seq.at(offset.wrapping_mul(nb as u64), b as u64);
            let v = u[0];
            let p1 = 2.0 * PI * u[1];
            let p2 = 2.0 * PI * u[2];
            let ce = (1.0 - v).sqrt();
            let se = v.sqrt();
            let w0 = self.frame
                * Point::new(ce * p1.cos(), ce * p1.sin(), se * p2.cos(), se * p2.sin());
            for g in &self.orbit {
                out.push(g * w0);
            }
        }
    }
}

/// Peak-adapted integration plan over the annulus D_ε around radius r0.
#[derive(Clone)]
pub struct PeakedIntegrationPlan {
    peaks: Vec<Point>,
    dirs: DirectionSet,
    delta: f64,
    r0: f64,
    eps: f64,
    ball_radius: f64,
    resolution: PlanResolution,
}

enum Task {
    /// One radial level of one peak ball: (peak index, shell index, radius, radial weight)
    Shell(usize, usize, f64, f64),
    /// One radial level of the background annulus rule.
    Background(usize, f64, f64),
}

impl PeakedIntegrationPlan {
    pub fn new(
        lattice: &PeakLattice,
        delta: f64,
        r0: f64,
        eps: f64,
        resolution: PlanResolution,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::parameter("delta must be positive"));
        }
        if !(eps > 0.0 && r0 > eps) {
            return Err(Error::parameter(format!(
                "annulus requires 0 < eps < r0 (eps = {eps}, r0 = {r0})"
            )));
        }
        let rho_offset = (lattice.rho() - r0).abs();
        if rho_offset >= eps {
            return Err(Error::parameter(
                "lattice circle lies outside the annulus".to_string(),
            ));
        }
        let ball_radius = (lattice.min_separation_all() / 3.0).min(0.999 * (eps - rho_offset));
        if ball_radius <= 0.5 * delta {
            return Err(Error::parameter(format!(
                "concentration scale delta = {delta} too large for ball radius {ball_radius:.3e}"
            )));
        }
        Ok(PeakedIntegrationPlan {
            peaks: lattice.points().to_vec(),
            dirs: DirectionSet::new(lattice),
            delta,
            r0,
            eps,
            ball_radius,
            resolution,
        })
    }

    pub fn resolution(&self) -> PlanResolution {
        self.resolution
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    /// Lebesgue measure of the annulus D_ε.
    pub fn annulus_measure(&self) -> f64 {
        S3_AREA * ((self.r0 + self.eps).powi(4) - (self.r0 - self.eps).powi(4)) / 4.0
    }

    fn ball_measure_total(&self) -> f64 {
        self.peaks.len() as f64 * 0.5 * PI * PI * self.ball_radius.powi(4)
    }

    fn radial_levels(&self, res: &PlanResolution) -> Vec<(f64, f64)> {
        let lo = self.delta / 10.0;
        let hi = self.ball_radius;
        let decades = (hi / lo).log10().max(0.25);
        let cells = ((res.shells_per_decade as f64 * decades).ceil() as usize).max(4);
        let mut levels = Vec::with_capacity(2 * (cells + 1));
        let mut prev = 0.0f64;
        for c in 0..=cells {
            let edge = if c == cells {
                hi
            } else {
                lo * (hi / lo).powf(c as f64 / cells as f64)
            };
            for (s, w) in gauss2_cell(prev, edge) {
                levels.push((s, w));
            }
            prev = edge;
        }
        levels
    }

    fn background_levels(&self, res: &PlanResolution) -> Vec<(f64, f64)> {
        let lo = self.r0 - self.eps;
        let hi = self.r0 + self.eps;
        let n = res.background_radial.max(4);
        let mut levels = Vec::with_capacity(2 * n);
        for c in 0..n {
            let a = lo + (hi - lo) * c as f64 / n as f64;
            let b = lo + (hi - lo) * (c + 1) as f64 / n as f64;
            for (s, w) in gauss2_cell(a, b) {
                levels.push((s, w));
            }
        }
        levels
    }

    fn tasks(&self, res: &PlanResolution) -> Vec<Task> {
        let mut tasks = Vec::new();
        let radial = self.radial_levels(res);
        for p in 0..self.peaks.len() {
            for (j, &(s, w)) in radial.iter().enumerate() {
                tasks.push(Task::Shell(p, j, s, w));
            }
        }
        for (j, &(s, w)) in self.background_levels(res).iter().enumerate() {
            tasks.push(Task::Background(j, s, w));
        }
        tasks
    }

    fn inside_ball(&self, x: &Point) -> bool {
        let r2 = self.ball_radius * self.ball_radius;
        self.peaks.iter().any(|p| (x - p).norm_squared() < r2)
    }

    /// Sum of background weights that survive ball excision, used to rescale
    /// the background rule so constants integrate exactly.
    fn background_kept_weight(&self, res: &PlanResolution) -> f64 {
        let levels = self.background_levels(res);
        let parts: Vec<f64> = levels
            .par_iter()
            .enumerate()
            .map(|(j, &(s, w))| {
                let mut dirs = Vec::new();
                self.dirs
                    .emit(res.background_angular, (1 << 32) + j as u64, &mut dirs);
                let per = w * S3_AREA / dirs.len() as f64;
                let mut kept = 0.0;
                for d in &dirs {
                    if !self.inside_ball(&(d * s)) {
                        kept += per;
                    }
                }
                kept
            })
            .collect();
        pairwise_sum(&parts)
    }

    fn eval_pass(
        &self,
        res: &PlanResolution,
        n: usize,
        f: &(impl Fn(&Point, &mut [f64]) + Sync),
    ) -> Result<Vec<f64>> {
        let kept = self.background_kept_weight(res);
        let bg_target = self.annulus_measure() - self.ball_measure_total();
        if !(kept > 0.0) {
            return Err(Error::parameter("background rule has no surviving nodes"));
        }
        let bg_scale = bg_target / kept;
        let tasks = self.tasks(res);
        let partials: Vec<Result<Vec<f64>>> = tasks
            .par_iter()
            .map(|task| {
                let mut dirs = Vec::new();
                let mut acc = vec![0.0f64; n];
                let mut vals = vec![0.0f64; n];
                fn absorb(x: &Point, per: f64, vals: &[f64], acc: &mut [f64]) -> Result<()> {
                    for (a, v) in acc.iter_mut().zip(vals) {
                        if !v.is_finite() {
                            return Err(Error::NonFiniteSample {
                                value: *v,
                                at: [x[0], x[1], x[2], x[3]],
                            });
                        }
                        *a += per * v;
                    }
                    Ok(())
                }
                match *task {
                    Task::Shell(p, j, s, w) => {
                        self.dirs.emit(res.angular_per_shell, j as u64, &mut dirs);
                        let per = w * S3_AREA / dirs.len() as f64;
                        let center = self.peaks[p];
                        for d in &dirs {
                            let x = center + d * s;
                            f(&x, &mut vals);
                            absorb(&x, per, &vals, &mut acc)?;
                        }
                    }
                    Task::Background(j, s, w) => {
                        self.dirs
                            .emit(res.background_angular, (1 << 32) + j as u64, &mut dirs);
                        let per = w * S3_AREA / dirs.len() as f64 * bg_scale;
                        for d in &dirs {
                            let x = d * s;
                            if self.inside_ball(&x) {
                                continue;
                            }
                            f(&x, &mut vals);
                            absorb(&x, per, &vals, &mut acc)?;
                        }
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut columns = vec![Vec::with_capacity(partials.len()); n];
        for part in partials {
            let vals = part?;
            for (col, v) in columns.iter_mut().zip(&vals) {
                col.push(*v);
            }
        }
        Ok(columns.iter().map(|col| pairwise_sum(col)).collect())
    }

    /// Integrates `n` integrand components at once over D_ε; `f` writes the
    /// component values at a node into the provided slice. Returns the
    /// refined values and per-component error estimates |base − refined|.
    pub fn integrate_slices(
        &self,
        n: usize,
        f: &(impl Fn(&Point, &mut [f64]) + Sync),
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let base = self.eval_pass(&self.resolution, n, f)?;
        let refined = self.eval_pass(&self.resolution.doubled(), n, f)?;
        let err = base
            .iter()
            .zip(&refined)
            .map(|(b, r)| (b - r).abs())
            .collect();
        Ok((refined, err))
    }

    /// Array-typed convenience wrapper around [`integrate_slices`](Self::integrate_slices).
    pub fn integrate_multi<const N: usize>(
        &self,
        f: &(impl Fn(&Point) -> [f64; N] + Sync),
    ) -> Result<([f64; N], [f64; N])> {
        let (v, e) = self.integrate_slices(N, &|x: &Point, out: &mut [f64]| {
            out.copy_from_slice(&f(x));
        })?;
        let mut values = [0.0f64; N];
        let mut errors = [0.0f64; N];
        values.copy_from_slice(&v);
        errors.copy_from_slice(&e);
        Ok((values, errors))
    }

    /// Integrates a scalar field over D_ε; returns (value, error estimate).
    pub fn integrate(&self, f: &dyn Field) -> Result<(f64, f64)> {
        let ([v], [e]) = self.integrate_multi(&|x: &Point| [f.value(x)])?;
        Ok((v, e))
    }
}

/// Exponent family of the bubble-adapted weighted sup norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormExponent {
    /// Weight Σ (δ + |x−ξ|)^(−1).
    Star,
    /// Weight Σ (δ + |x−ξ|)^(−3).
    StarStar,
}

/// The weight function w(x) = Σ_{q,i} (δ + |x − ξ_i^q|)^(−p).
#[derive(Clone, Debug)]
pub struct NormWeight {
    peaks: Vec<Point>,
    delta: f64,
    exponent: NormExponent,
}

impl NormWeight {
    pub fn new(lattice: &PeakLattice, delta: f64, exponent: NormExponent) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::parameter("delta must be positive"));
        }
        Ok(NormWeight {
            peaks: lattice.points().to_vec(),
            delta,
            exponent,
        })
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let mut acc = 0.0;
        for p in &self.peaks {
            let d = self.delta + (x - p).norm();
            acc += match self.exponent {
                NormExponent::Star => 1.0 / d,
                NormExponent::StarStar => 1.0 / (d * d * d),
            };
        }
        acc
    }
}

/// Sample-density knobs for sup-norm estimation.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct SupSampling {
    pub shells_per_decade: usize,
    pub angular_per_shell: usize,
    pub annulus_radial: usize,
    pub annulus_angular: usize,
}

impl Default for SupSampling {
    fn default() -> Self {
        SupSampling {
            shells_per_decade: 12,
            angular_per_shell: 64,
            annulus_radial: 32,
            annulus_angular: 1024,
        }
    }
}

impl SupSampling {
    pub fn doubled(&self) -> Self {
        SupSampling {
            shells_per_decade: self.shells_per_decade * 2,
            angular_per_shell: self.angular_per_shell * 2,
            annulus_radial: self.annulus_radial * 2,
            annulus_angular: self.annulus_angular * 2,
        }
    }
}

/// Result of a structured-sample sup estimate.
#[derive(Clone, Copy, Debug)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: Point,
    /// |value − value at half sampling density|.
    pub refinement_delta: f64,
}

fn sup_pass(
    f: &dyn Field,
    weight: &NormWeight,
    lattice: &PeakLattice,
    r0: f64,
    sigma: f64,
    delta: f64,
    s: &SupSampling,
) -> Result<(f64, Point)> {
    let dirs = DirectionSet::new(lattice);
    let lo = delta / 10.0;
    let hi = 3.0 * sigma;
    let decades = (hi / lo).log10().max(0.5);
    let shells = ((s.shells_per_decade as f64 * decades).ceil() as usize).max(4);

    enum SupTask {
        Peak(usize, usize, f64),
        Annulus(usize, f64),
    }
    let mut tasks = Vec::new();
    for p in 0..lattice.len() {
        for j in 0..shells {
            let t = lo * (hi / lo).powf(j as f64 / (shells - 1).max(1) as f64);
            tasks.push(SupTask::Peak(p, j, t));
        }
    }
    for j in 0..s.annulus_radial {
        let r = r0 - 2.2 * sigma + 4.4 * sigma * (j as f64 + 0.5) / s.annulus_radial as f64;
        tasks.push(SupTask::Annulus(j, r));
    }

    let peaks = lattice.points();
    let results: Vec<Result<(f64, Point)>> = tasks
        .par_iter()
        .map(|task| {
            let mut best = (f64::NEG_INFINITY, Point::zeros());
            let mut ds = Vec::new();
            let mut consider = |x: Point| -> Result<()> {
                let ratio = f.value(&x).abs() / weight.eval(&x);
                if !ratio.is_finite() {
                    return Err(Error::NonFiniteSample {
                        value: ratio,
                        at: [x[0], x[1], x[2], x[3]],
                    });
                }
                if ratio > best.0 {
                    best = (ratio, x);
                }
                Ok(())
            };
            match *task {
                SupTask::Peak(p, j, t) => {
                    dirs.emit(s.angular_per_shell, j as u64, &mut ds);
                    for d in &ds {
                        consider(peaks[p] + d * t)?;
                    }
                }
                SupTask::Annulus(j, r) => {
                    dirs.emit(s.annulus_angular, (1 << 33) + j as u64, &mut ds);
                    for d in &ds {
                        consider(d * r)?;
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, Point::zeros());
    for r in results {
        let (v, x) = r?;
        if v > best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}

/// Estimates sup |f| / w over the structured sample set: log-radial shells
/// around every blow-up point plus a coarse annulus lattice. Reports the
/// argmax and the change under halving the sampling density.
pub fn weighted_sup(
    f: &dyn Field,
    weight: &NormWeight,
    lattice: &PeakLattice,
    r0: f64,
    sigma: f64,
    sampling: &SupSampling,
) -> Result<SupEstimate> {
    let delta = weight.delta;
    let (coarse, _) = sup_pass(f, weight, lattice, r0, sigma, delta, sampling)?;
    let (value, argmax) = sup_pass(f, weight, lattice, r0, sigma, delta, &sampling.doubled())?;
    Ok(SupEstimate {
        value,
        argmax,
        refinement_delta: (value - coarse).abs(),
    })
}

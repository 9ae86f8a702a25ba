//! Symmetry group elements, blow-up point lattices, pairwise distances,
//! interaction sums, and the linking invariant of the concentration circles.
//!
//! All indices on the public surface are 1-based: component circles are
//! `q = 1..=m`, polygon vertices are `i = 1..=k`.

mod linking;

pub use linking::{gauss_linking_3d, linking_number};

use crate::error::{Error, Result};
use crate::fields::Point;
use crate::numeric::{inverse_poly_fit, pairwise_sum};
use nalgebra::Matrix4;
use std::f64::consts::PI;

/// A 4x4 orthogonal matrix (an element of O(4)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalMap4 {
    m: Matrix4<f64>,
}

impl OrthogonalMap4 {
    pub fn identity() -> Self {
        OrthogonalMap4 {
            m: Matrix4::identity(),
        }
    }

    /// Counter-rotating double rotation: angle `theta` in the (x1,x2)-plane
    /// and `-theta` in the (x3,x4)-plane.
    pub fn counter_rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OrthogonalMap4 {
            m: Matrix4::new(
                c, -s, 0.0, 0.0, //
                s, c, 0.0, 0.0, //
                0.0, 0.0, c, s, //
                0.0, 0.0, -s, c,
            ),
        }
    }

    /// Co-rotating double rotation: the same angle, with the same handedness,
    /// in both coordinate planes.
    pub fn co_rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OrthogonalMap4 {
            m: Matrix4::new(
                c, s, 0.0, 0.0, //
                -s, c, 0.0, 0.0, //
                0.0, 0.0, c, s, //
                0.0, 0.0, -s, c,
            ),
        }
    }

    /// Rotation by `theta` in the (x1,x2)-plane only.
    pub fn first_plane_rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OrthogonalMap4 {
            m: Matrix4::new(
                c, -s, 0.0, 0.0, //
                s, c, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ),
        }
    }

    /// The rotation carrying component 1 onto component `q` of an
    /// `m`-component family: counter-rotating blocks with angle `(q-1)π/m`.
    pub fn component_rotation(q: usize, m: usize) -> Result<Self> {
        check_component_index(q, m)?;
        Ok(Self::counter_rotation((q - 1) as f64 * PI / m as f64))
    }

    /// Variant of [`component_rotation`](Self::component_rotation) with the
    /// angle divided by `k`. Not used by any default code path; provided for
    /// side-by-side comparison only.
    pub fn component_rotation_fine(q: usize, m: usize, k: usize) -> Result<Self> {
        check_component_index(q, m)?;
        if k == 0 {
            return Err(Error::parameter("k must be positive"));
        }
        Ok(Self::counter_rotation(
            (q - 1) as f64 * PI / (m as f64 * k as f64),
        ))
    }

    /// The rotation cycling vertex 1 of a regular k-gon onto vertex `i`:
    /// co-rotating blocks with angle `2π(i-1)/k`. Requires even `k` so that
    /// `i = k/2 + 1` realizes the antipodal map.
    pub fn vertex_rotation(i: usize, k: usize) -> Result<Self> {
        check_vertex_index(i, k)?;
        Ok(Self::co_rotation(2.0 * PI * (i - 1) as f64 / k as f64))
    }

    /// Single-plane variant of the component rotation (lower-right block is
    /// the identity).
    pub fn component_rotation_planar(q: usize, m: usize) -> Result<Self> {
        check_component_index(q, m)?;
        Ok(Self::first_plane_rotation((q - 1) as f64 * PI / m as f64))
    }

    pub fn apply(&self, x: &Point) -> Point {
        self.m * x
    }

    /// Inverse map; equals the transpose for an orthogonal matrix.
    pub fn inverse(&self) -> Self {
        OrthogonalMap4 { m: self.m.transpose() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        OrthogonalMap4 { m: self.m * other.m }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    /// Largest entry of |MᵀM − I|.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.m.transpose() * self.m - Matrix4::identity();
        d.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Largest entrywise difference to `other`.
    pub fn max_entry_diff(&self, other: &Self) -> f64 {
        (self.m - other.m).iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        let map = OrthogonalMap4 { m };
        if map.orthogonality_defect() > 1e-12 {
            return Err(Error::Geometry(format!(
                "matrix is not orthogonal (defect {:.3e})",
                map.orthogonality_defect()
            )));
        }
        Ok(map)
    }
}

fn check_component_index(q: usize, m: usize) -> Result<()> {
    if m < 1 {
        return Err(Error::parameter(format!("m = {m} must be >= 1")));
    }
    if q < 1 || q > m + 1 {
        return Err(Error::parameter(format!(
            "component index q = {q} out of range 1..={}",
            m + 1
        )));
    }
    Ok(())
}

fn check_vertex_index(i: usize, k: usize) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::parameter(format!("k = {k} must be even and >= 2")));
    }
    if i < 1 || i > k {
        return Err(Error::parameter(format!(
            "vertex index i = {i} out of range 1..={k}"
        )));
    }
    Ok(())
}

/// Placement rule for the blow-up points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LatticeMode {
    /// Counter-rotating components; every point has norm `rho` and the
    /// component circles are pairwise Hopf-linked.
    #[serde(rename = "s")]
    CounterRotating,
    /// Single-plane rotated components; all circles lie in the (x1,x2)-plane.
    #[serde(rename = "t")]
    PlanarRotating,
}

/// The k·m blow-up points: k vertices of a regular polygon on each of m
/// circles, the circles related by component rotations.
#[derive(Clone, Debug)]
pub struct PeakLattice {
    k: usize,
    m: usize,
    rho: f64,
    mode: LatticeMode,
    /// Row-major by component: index (q-1)*k + (i-1).
    points: Vec<Point>,
    /// Orthogonal frame anchored to the first vertex; rotates rigidly with
    /// the lattice so that dependent node constructions rotate with it.
    frame: Matrix4<f64>,
}

impl PeakLattice {
    pub fn new(k: usize, m: usize, rho: f64, mode: LatticeMode) -> Result<Self> {
        if k < 2 || k % 2 != 0 {
            return Err(Error::parameter(format!("k = {k} must be even and >= 2")));
        }
        if m < 1 {
            return Err(Error::parameter(format!("m = {m} must be >= 1")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::parameter(format!("rho = {rho} must be positive")));
        }
        let mut points = Vec::with_capacity(k * m);
        for q in 1..=m {
            let a = (q - 1) as f64 * PI / m as f64;
            for i in 1..=k {
                let th = 2.0 * PI * (i - 1) as f64 / k as f64;
                let p = match mode {
                    LatticeMode::CounterRotating => {
                        let (s1, c1) = (th - a).sin_cos();
                        let (s2, c2) = (th + a).sin_cos();
                        Point::new(c1, s1, c2, s2) * (rho / 2.0f64.sqrt())
                    }
                    LatticeMode::PlanarRotating => {
                        let (s1, c1) = (th - a).sin_cos();
                        Point::new(c1, s1, 0.0, 0.0) * rho
                    }
                };
                points.push(p);
            }
        }
        let frame = match mode {
            LatticeMode::CounterRotating => {
                let r = 1.0 / 2.0f64.sqrt();
                // columns: radial direction at vertex 1, circle tangent, and
                // the orthogonal plane pair
                Matrix4::from_columns(&[
                    Point::new(r, 0.0, r, 0.0),
                    Point::new(0.0, r, 0.0, r),
                    Point::new(r, 0.0, -r, 0.0),
                    Point::new(0.0, r, 0.0, -r),
                ])
            }
            LatticeMode::PlanarRotating => Matrix4::identity(),
        };
        Ok(PeakLattice {
            k,
            m,
            rho,
            mode,
            points,
            frame,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mode(&self) -> LatticeMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Blow-up point for component `q`, vertex `i` (both 1-based).
    pub fn point(&self, q: usize, i: usize) -> Result<Point> {
        self.check_index(q, i)?;
        Ok(self.points[(q - 1) * self.k + (i - 1)])
    }

    /// All points, component-major.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Points of one component circle.
    pub fn circle_points(&self, q: usize) -> Result<&[Point]> {
        self.check_index(q, 1)?;
        Ok(&self.points[(q - 1) * self.k..q * self.k])
    }

    /// Blow-up point rescaled by the concentration scale `delta`.
    pub fn rescaled_point(&self, q: usize, i: usize, delta: f64) -> Result<Point> {
        if !(delta > 0.0) {
            return Err(Error::parameter("delta must be positive"));
        }
        Ok(self.point(q, i)? / delta)
    }

    pub fn frame(&self) -> &Matrix4<f64> {
        &self.frame
    }

    /// Rigidly rotated copy (points and frame).
    pub fn rotated(&self, map: &OrthogonalMap4) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            *p = map.apply(p);
        }
        out.frame = map.matrix() * out.frame;
        out
    }

    fn check_index(&self, q: usize, i: usize) -> Result<()> {
        if q < 1 || q > self.m {
            return Err(Error::parameter(format!(
                "component index q = {q} out of range 1..={}",
                self.m
            )));
        }
        if i < 1 || i > self.k {
            return Err(Error::parameter(format!(
                "vertex index i = {i} out of range 1..={}",
                self.k
            )));
        }
        Ok(())
    }

    /// Squared distance between lattice points, evaluated in a form free of
    /// catastrophic cancellation for nearby vertices.
    pub fn distance_sq(&self, p: usize, j: usize, q: usize, i: usize) -> Result<f64> {
        self.check_index(p, j)?;
        self.check_index(q, i)?;
        let dd = 2.0 * PI * (j as f64 - i as f64) / self.k as f64;
        let da = (p as f64 - q as f64) * PI / self.m as f64;
        Ok(match self.mode {
            LatticeMode::CounterRotating => {
                let s1 = (0.5 * (dd - da)).sin();
                let s2 = (0.5 * (dd + da)).sin();
                2.0 * self.rho * self.rho * (s1 * s1 + s2 * s2)
            }
            LatticeMode::PlanarRotating => {
                let s = (0.5 * (dd - da)).sin();
                4.0 * self.rho * self.rho * s * s
            }
        })
    }

    /// Exact finite sum of |ξ_j^p − ξ_i^q|^(−α) over all lattice points
    /// except the base (p, j) itself.
    pub fn interaction_sum(&self, alpha: f64, base: (usize, usize)) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::parameter(format!("alpha = {alpha} must be > 0")));
        }
        let (p, j) = base;
        self.check_index(p, j)?;
        let mut terms = Vec::with_capacity(self.k * self.m - 1);
        for q in 1..=self.m {
            for i in 1..=self.k {
                if (q, i) == (p, j) {
                    continue;
                }
                let d2 = self.distance_sq(p, j, q, i)?;
                if d2 == 0.0 {
                    return Err(Error::Geometry(format!(
                        "coincident lattice points ({p},{j}) and ({q},{i})"
                    )));
                }
                terms.push(d2.powf(-0.5 * alpha));
            }
        }
        Ok(pairwise_sum(&terms))
    }

    /// Minimum cross-circle and same-circle point separations.
    /// `cross` is absent when the lattice has a single component.
    pub fn min_separation(&self) -> (Option<f64>, f64) {
        let mut same = f64::INFINITY;
        let mut cross = f64::INFINITY;
        for q in 1..=self.m {
            for i in 1..=self.k {
                for p in q..=self.m {
                    let i0 = if p == q { i + 1 } else { 1 };
                    for j in i0..=self.k {
                        let d2 = self.distance_sq(p, j, q, i).expect("indices in range");
                        if p == q {
                            same = same.min(d2);
                        } else {
                            cross = cross.min(d2);
                        }
                    }
                }
            }
        }
        let cross = if self.m >= 2 { Some(cross.sqrt()) } else { None };
        (cross, same.sqrt())
    }

    /// Overall minimum separation between distinct lattice points.
    pub fn min_separation_all(&self) -> f64 {
        let (cross, same) = self.min_separation();
        match cross {
            Some(c) => c.min(same),
            None => same,
        }
    }

    /// The great circle through the vertices of component `q`, sampled with
    /// `n` points.
    pub fn circle(&self, q: usize, n: usize) -> Result<GreatCircle> {
        self.check_index(q, 1)?;
        let map = match self.mode {
            LatticeMode::CounterRotating => OrthogonalMap4::component_rotation(q, self.m)?,
            LatticeMode::PlanarRotating => OrthogonalMap4::component_rotation_planar(q, self.m)?,
        };
        GreatCircle::new(self.rho, self.mode, map.inverse(), n)
    }
}

/// Fit of the leading coefficient C in Σ ≈ C·k²/ρ² for the α=2 same-circle
/// interaction sum, over a sweep of polygon sizes. Returns the fitted
/// constant (the 1/k and 1/k² corrections are absorbed by the fit basis).
pub fn interaction_coefficient_fit(ks: &[usize], rho: f64) -> Result<f64> {
    if ks.len() < 3 {
        return Err(Error::parameter("need at least 3 polygon sizes"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &k in ks {
        let lat = PeakLattice::new(k, 1, rho, LatticeMode::CounterRotating)?;
        let sum = lat.interaction_sum(2.0, (1, 1))?;
        xs.push(k as f64);
        ys.push(sum * rho * rho / (k as f64 * k as f64));
    }
    let (a, _, _) = inverse_poly_fit(&xs, &ys);
    Ok(a)
}

/// A great circle on the sphere of radius `rho`, stored as an ordered closed
/// polyline plus the parametrization that produced it.
#[derive(Clone, Debug)]
pub struct GreatCircle {
    rho: f64,
    mode: LatticeMode,
    map: OrthogonalMap4,
    n: usize,
    samples: Vec<Point>,
}

impl GreatCircle {
    fn base_point(rho: f64, mode: LatticeMode, theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        match mode {
            LatticeMode::CounterRotating => Point::new(c, s, c, s) * (rho / 2.0f64.sqrt()),
            LatticeMode::PlanarRotating => Point::new(c, s, 0.0, 0.0) * rho,
        }
    }

    pub fn new(rho: f64, mode: LatticeMode, map: OrthogonalMap4, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::parameter("need at least 8 samples on a circle"));
        }
        if !(rho > 0.0) {
            return Err(Error::parameter("rho must be positive"));
        }
        let samples = (0..n)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                map.apply(&Self::base_point(rho, mode, theta))
            })
            .collect();
        Ok(GreatCircle {
            rho,
            mode,
            map,
            n,
            samples,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    /// Same circle resampled with a different point count.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        GreatCircle::new(self.rho, self.mode, self.map, n)
    }

    pub fn sample_count(&self) -> usize {
        self.n
    }
}

//! Linking number of two closed curves on a 3-sphere, via stereographic
//! projection to R^3 and the Gauss linking integral on polylines.

use super::GreatCircle;
use crate::error::{Error, Result};
use crate::fields::Point;
use crate::numeric::{pairwise_sum, Kronecker3};
use nalgebra::Vector3;
use std::f64::consts::PI;

/// Gauss linking integral over two closed polylines in R^3 (midpoint rule on
/// every segment pair). Exact linking numbers are integers; the returned
/// value is the raw double sum divided by 4π.
pub fn gauss_linking_3d(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let seg = |pts: &[Vector3<f64>]| -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        let n = pts.len();
        let mut mids = Vec::with_capacity(n);
        let mut tans = Vec::with_capacity(n);
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            mids.push(0.5 * (p + q));
            tans.push(q - p);
        }
        (mids, tans)
    };
    let (ma, ta) = seg(a);
    let (mb, tb) = seg(b);
    let rows: Vec<f64> = ma
        .iter()
        .zip(&ta)
        .map(|(x, t1)| {
            let terms: Vec<f64> = mb
                .iter()
                .zip(&tb)
                .map(|(y, t2)| {
                    let r = x - y;
                    let d = r.norm();
                    r.dot(&t1.cross(t2)) / (d * d * d)
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows) / (4.0 * PI)
}

fn s3_direction(u: [f64; 3]) -> Point {
    let (v, p1, p2) = (u[0], 2.0 * PI * u[1], 2.0 * PI * u[2]);
    let ce = (1.0 - v).sqrt();
    let se = v.sqrt();
    Point::new(ce * p1.cos(), ce * p1.sin(), se * p2.cos(), se * p2.sin())
}

/// Stereographic projection from the pole `p` (a point of the radius-rho
/// sphere) to R^3, expressed in an orthonormal basis of the complement of p.
fn stereographic(points: &[Point], pole: &Point, rho: f64) -> Result<Vec<Vector3<f64>>> {
    let phat = pole / pole.norm();
    // Gram-Schmidt a basis orthogonal to the pole
    let mut basis: Vec<Point> = Vec::new();
    for e in [
        Point::new(1.0, 0.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0, 0.0),
        Point::new(0.0, 0.0, 1.0, 0.0),
        Point::new(0.0, 0.0, 0.0, 1.0),
    ] {
        let mut v = e - phat * e.dot(&phat);
        for b in &basis {
            v -= b * v.dot(b);
        }
        let n = v.norm();
        if n > 1e-6 {
            basis.push(v / n);
        }
        if basis.len() == 3 {
            break;
        }
    }
    if basis.len() != 3 {
        return Err(Error::Geometry("failed to build projection basis".into()));
    }
    points
        .iter()
        .map(|x| {
            let t = x.dot(&phat) / rho;
            if 1.0 - t < 1e-9 {
                return Err(Error::Geometry(
                    "projection pole collides with a curve sample".into(),
                ));
            }
            let scale = 1.0 / (1.0 - t);
            Ok(Vector3::new(
                x.dot(&basis[0]) * scale,
                x.dot(&basis[1]) * scale,
                x.dot(&basis[2]) * scale,
            ))
        })
        .collect()
}

fn min_dist_to_samples(p: &Point, samples: &[Point], stride: usize) -> f64 {
    samples
        .iter()
        .step_by(stride.max(1))
        .map(|s| (p - s).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Pole on the radius-rho sphere maximizing the distance to both curves,
/// found by a deterministic coarse search.
fn select_pole(c1: &GreatCircle, c2: &GreatCircle, rho: f64) -> Point {
    let seq = Kronecker3::new();
    let mut best = (f64::NEG_INFINITY, Point::zeros());
    for n in 0..2048u64 {
        let cand = s3_direction(seq.at(0, n)) * rho;
        let d = min_dist_to_samples(&cand, c1.samples(), 8)
            .min(min_dist_to_samples(&cand, c2.samples(), 8));
        if d > best.0 {
            best = (d, cand);
        }
    }
    best.1
}

fn linking_value(c1: &GreatCircle, c2: &GreatCircle, pole: &Point, n: usize) -> Result<f64> {
    let a = c1.resampled(n)?;
    let b = c2.resampled(n)?;
    let rho = c1.rho();
    let pa = stereographic(a.samples(), pole, rho)?;
    let pb = stereographic(b.samples(), pole, rho)?;
    Ok(gauss_linking_3d(&pa, &pb))
}

/// Linking number of two disjoint circles on the same radius-rho sphere.
///
/// The circles are projected stereographically from a pole chosen away from
/// both, and the Gauss integral is evaluated with the midpoint rule, doubling
/// the sample count until the value stabilizes below 1e-4. Errors if the
/// curves (nearly) intersect or the value does not settle near an integer.
pub fn linking_number(c1: &GreatCircle, c2: &GreatCircle) -> Result<i64> {
    if (c1.rho() - c2.rho()).abs() > 1e-9 * c1.rho() {
        return Err(Error::Geometry(
            "circles lie on spheres of different radii".into(),
        ));
    }
    let rho = c1.rho();
    let gap = c1
        .samples()
        .iter()
        .map(|p| min_dist_to_samples(p, c2.samples(), 1))
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-6 * rho {
        return Err(Error::Geometry(format!(
            "circles intersect or nearly intersect (gap {gap:.3e})"
        )));
    }
    let pole = select_pole(c1, c2, rho);

    let mut n = 2048usize;
    let mut value = linking_value(c1, c2, &pole, n)?;
    for _ in 0..4 {
        let refined = linking_value(c1, c2, &pole, 2 * n)?;
        let change = (refined - value).abs();
        value = refined;
        n *= 2;
        if change < 1e-4 {
            break;
        }
    }
    let rounded = value.round();
    if (value - rounded).abs() > 1e-3 {
        return Err(Error::Geometry(format!(
            "linking integral {value} is not within 1e-3 of an integer"
        )));
    }
    Ok(rounded as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LatticeMode, PeakLattice};

    fn planar_circle(radius: f64, z: f64, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                Vector3::new(radius * t.cos(), radius * t.sin(), z)
            })
            .collect()
    }

    #[test]
    fn parallel_translates_are_unlinked() {
        let a = planar_circle(1.0, 0.0, 512);
        let b = planar_circle(1.0, 0.7, 512);
        let lk = gauss_linking_3d(&a, &b);
        assert!(lk.abs() < 1e-3, "lk = {lk}");
    }

    #[test]
    fn chain_links_once() {
        // two circles through each other, classic chain configuration
        let a = planar_circle(1.0, 0.0, 1024);
        let b: Vec<_> = (0..1024)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / 1024.0;
                Vector3::new(1.0 + t.cos(), 0.0, t.sin())
            })
            .collect();
        let lk = gauss_linking_3d(&a, &b);
        assert!((lk.abs() - 1.0).abs() < 1e-3, "lk = {lk}");
    }

    #[test]
    fn component_circles_are_hopf_linked() {
        let lat = PeakLattice::new(8, 2, 1.3, LatticeMode::CounterRotating).unwrap();
        let c1 = lat.circle(1, 2048).unwrap();
        let c2 = lat.circle(2, 2048).unwrap();
        let lk = linking_number(&c1, &c2).unwrap();
        assert_eq!(lk.abs(), 1);
    }

    #[test]
    fn m3_pairs_linked() {
        let lat = PeakLattice::new(4, 3, 1.0, LatticeMode::CounterRotating).unwrap();
        let c1 = lat.circle(1, 2048).unwrap();
        let c3 = lat.circle(3, 2048).unwrap();
        assert_eq!(linking_number(&c1, &c3).unwrap().abs(), 1);
    }

    #[test]
    fn coincident_circles_rejected() {
        let lat = PeakLattice::new(4, 2, 1.0, LatticeMode::PlanarRotating).unwrap();
        // planar-mode circles all lie in the (x1,x2) plane and intersect
        let c1 = lat.circle(1, 512).unwrap();
        let c2 = lat.circle(2, 512).unwrap();
        assert!(linking_number(&c1, &c2).is_err());
    }
}

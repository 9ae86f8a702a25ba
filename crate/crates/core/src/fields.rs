//! Scalar fields on R^4: evaluation contract, analytic jets (value, gradient,
//! Laplacian), declared symmetry metadata, and pullbacks by orthogonal maps.

use crate::geometry::OrthogonalMap4;
use nalgebra::Vector4;

pub type Point = Vector4<f64>;

/// Value, gradient and Laplacian of a field at one point.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub value: f64,
    pub grad: Point,
    pub lap: f64,
}

impl Jet {
    pub fn zero() -> Self {
        Jet {
            value: 0.0,
            grad: Point::zeros(),
            lap: 0.0,
        }
    }
}

/// Symmetry relations a field claims to satisfy.
///
/// `pair_sign_flip`: u(x1,x2,x3,x4) = u(x1,−x2,x3,−x4);
/// `plane_swap`: u(x1,x2,x3,x4) = u(x3,x4,x1,x2);
/// `polygon`: invariance under the co-rotating vertex rotations of order k.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SymmetryClass {
    pub pair_sign_flip: bool,
    pub plane_swap: bool,
    pub polygon: Option<usize>,
}

impl SymmetryClass {
    /// The full symmetry class of the construction.
    pub fn full(k: usize) -> Self {
        SymmetryClass {
            pair_sign_flip: true,
            plane_swap: true,
            polygon: Some(k),
        }
    }
}

/// A scalar field with pointwise evaluation.
pub trait Field: Sync {
    fn value(&self, x: &Point) -> f64;

    fn symmetry(&self) -> SymmetryClass {
        SymmetryClass::default()
    }
}

/// A field with analytic first and second derivatives.
pub trait SmoothField: Field {
    fn jet(&self, x: &Point) -> Jet;
}

impl<F: Field + ?Sized> Field for &F {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn symmetry(&self) -> SymmetryClass {
        (**self).symmetry()
    }
}

impl<F: SmoothField + ?Sized> SmoothField for &F {
    fn jet(&self, x: &Point) -> Jet {
        (**self).jet(x)
    }
}

/// Pullback of a field by an orthogonal map: (u ∘ S)(x) = u(Sx).
///
/// The gradient transforms by the chain rule ∇(u∘S)(x) = Sᵀ∇u(Sx) and the
/// Laplacian is invariant.
#[derive(Clone, Debug)]
pub struct Rotated<F> {
    inner: F,
    map: OrthogonalMap4,
}

impl<F> Rotated<F> {
    pub fn new(inner: F, map: OrthogonalMap4) -> Self {
        Rotated { inner, map }
    }

    pub fn map(&self) -> &OrthogonalMap4 {
        &self.map
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: Field> Field for Rotated<F> {
    fn value(&self, x: &Point) -> f64 {
        self.inner.value(&self.map.apply(x))
    }
}

impl<F: SmoothField> SmoothField for Rotated<F> {
    fn jet(&self, x: &Point) -> Jet {
        let y = self.map.apply(x);
        let j = self.inner.jet(&y);
        Jet {
            value: j.value,
            grad: self.map.matrix().transpose() * j.grad,
            lap: j.lap,
        }
    }
}

/// The three symmetry transformations, applied to a point.
pub fn pair_sign_flip(x: &Point) -> Point {
    Point::new(x[0], -x[1], x[2], -x[3])
}

pub fn plane_swap(x: &Point) -> Point {
    Point::new(x[2], x[3], x[0], x[1])
}


#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl Field for Quadratic {
        fn value(&self, x: &Point) -> f64 {
            x.norm_squared() + 2.0 * x[0]
        }
    }
    impl SmoothField for Quadratic {
        fn jet(&self, x: &Point) -> Jet {
            Jet {
                value: self.value(x),
                grad: 2.0 * x + Point::new(2.0, 0.0, 0.0, 0.0),
                lap: 8.0,
            }
        }
    }

    #[test]
    fn rotated_chain_rule() {
        let map = OrthogonalMap4::counter_rotation(0.83);
        let f = Rotated::new(Quadratic, map);
        let x = Point::new(0.3, -1.2, 0.5, 2.0);
        let j = f.jet(&x);
        // |Sx|² + 2(Sx)_1
        let y = map.apply(&x);
        assert!((j.value - (y.norm_squared() + 2.0 * y[0])).abs() < 1e-14);
        let fd = testutil::jet_fd_error(&f, &x, 1e-4);
        assert!(fd < 1e-5, "fd error {fd}");
    }

    #[test]
    fn radial_pullback_identity() {
        // <x, grad (u∘S)(x)> = <y, grad u(y)> at y = Sx
        let map = OrthogonalMap4::co_rotation(1.21);
        let f = Rotated::new(Quadratic, map);
        let x = Point::new(1.0, 0.25, -0.7, 0.4);
        let y = map.apply(&x);
        let lhs = x.dot(&f.jet(&x).grad);
        let rhs = y.dot(&Quadratic.jet(&y).grad);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

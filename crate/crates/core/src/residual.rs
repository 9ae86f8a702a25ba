//! Pointwise evaluation of the ansatz error term, the linearized and
//! nonlinear operators, the full non-local residual, and the weighted-norm
//! error report.

use crate::bubbles::{Ansatz, AnsatzConfig};
use crate::error::Result;
use crate::fields::{Field, Point, SmoothField, SymmetryClass};
use crate::geometry::OrthogonalMap4;
use crate::quadrature::{weighted_sup, NormExponent, NormWeight, SupSampling};
use serde::{Deserialize, Serialize};

/// Shared evaluation context: the ansatz, its component rotations, the
/// coupling and the potential.
#[derive(Clone, Debug)]
pub struct ResidualBundle {
    cfg: AnsatzConfig,
    w: Ansatz,
    /// Component rotations S_q for q = 2..=m.
    maps: Vec<OrthogonalMap4>,
}

impl ResidualBundle {
    pub fn new(cfg: &AnsatzConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(ResidualBundle {
            w: cfg.ansatz()?,
            maps: cfg.component_maps()?,
            cfg: cfg.clone(),
        })
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.w
    }

    pub fn config(&self) -> &AnsatzConfig {
        &self.cfg
    }

    pub fn component_maps(&self) -> &[OrthogonalMap4] {
        &self.maps
    }

    fn potential_at(&self, x: &Point) -> f64 {
        let r = x.norm();
        if r <= 0.0 {
            return self.cfg.potential.value(1e-12);
        }
        self.cfg.potential.value(r)
    }

    /// Σ_{q≥2} W(S_q x)², the non-local coupling factor.
    fn rotated_square_sum(&self, x: &Point) -> f64 {
        self.maps
            .iter()
            .map(|s| self.w.value(&s.apply(x)).powi(2))
            .sum()
    }

    /// The error term of the ansatz:
    /// E = W³ + ΔW − V(x)W + βW Σ_{q≥2} W²(S_q x).
    pub fn error_term(&self) -> ErrorTerm<'_> {
        ErrorTerm { bundle: self }
    }

    /// The full residual of the non-local equation at a field u:
    /// −Δu + V(x)u − u³ − βu Σ_{q≥2} u²(S_q x).
    pub fn nonlocal_residual<'a, F: SmoothField>(&'a self, u: &'a F) -> NonlocalResidual<'a, F> {
        NonlocalResidual { bundle: self, u }
    }

    /// The linearized operator at the ansatz, applied to φ:
    /// L(φ) = −Δφ + V(x)φ − 3W²φ − βφ Σ_{q≥2} W²(S_q x).
    pub fn linear_op<'a, F: SmoothField>(&'a self, phi: &'a F) -> LinearApplied<'a, F> {
        LinearApplied { bundle: self, phi }
    }

    /// The nonlinear remainder operator applied to φ (all six terms):
    /// N(φ) = φ³ + 3Wφ² + βφΣφ²(S_q x) + 2βφΣW(S_q x)φ(S_q x)
    ///        + βWΣφ²(S_q x) + 2βWΣW(S_q x)φ(S_q x).
    pub fn nonlinear_op<'a, F: SmoothField>(&'a self, phi: &'a F) -> NonlinearApplied<'a, F> {
        NonlinearApplied { bundle: self, phi }
    }

    /// Weighted sup-norm of the error term against the cube-exponent weight,
    /// with its ratio to δ.
    pub fn error_norm_report(&self, sampling: &SupSampling) -> Result<ResidualNormReport> {
        let lat = self.cfg.lattice()?;
        let weight = NormWeight::new(&lat, self.cfg.delta, NormExponent::StarStar)?;
        let e = self.error_term();
        let est = weighted_sup(&e, &weight, &lat, self.cfg.r0, self.cfg.sigma, sampling)?;
        Ok(ResidualNormReport {
            k: self.cfg.k,
            m: self.cfg.m,
            beta: self.cfg.beta,
            delta: self.cfg.delta,
            rho: self.cfg.rho,
            norm: est.value,
            ratio_to_delta: est.value / self.cfg.delta,
            argmax: [est.argmax[0], est.argmax[1], est.argmax[2], est.argmax[3]],
            refinement_delta: est.refinement_delta,
        })
    }
}

/// E(x), assembled from the analytic ansatz jet and the rotated values.
pub struct ErrorTerm<'a> {
    bundle: &'a ResidualBundle,
}

impl Field for ErrorTerm<'_> {
    fn value(&self, x: &Point) -> f64 {
        let b = self.bundle;
        let j = b.w.jet(x);
        if j.value == 0.0 && j.lap == 0.0 {
            return 0.0;
        }
        let mut e = j.value.powi(3) + j.lap - b.potential_at(x) * j.value;
        if b.cfg.beta != 0.0 && !b.maps.is_empty() {
            e += b.cfg.beta * j.value * b.rotated_square_sum(x);
        }
        e
    }

    fn symmetry(&self) -> SymmetryClass {
        self.bundle.w.symmetry()
    }
}

/// The non-local equation residual at u.
pub struct NonlocalResidual<'a, F> {
    bundle: &'a ResidualBundle,
    u: &'a F,
}

impl<F: SmoothField> Field for NonlocalResidual<'_, F> {
    fn value(&self, x: &Point) -> f64 {
        let b = self.bundle;
        let j = self.u.jet(x);
        let mut r = -j.lap + b.potential_at(x) * j.value - j.value.powi(3);
        if b.cfg.beta != 0.0 && !b.maps.is_empty() {
            let coupling: f64 = b
                .maps
                .iter()
                .map(|s| self.u.value(&s.apply(x)).powi(2))
                .sum();
            r -= b.cfg.beta * j.value * coupling;
        }
        r
    }
}

/// L(φ) pointwise.
pub struct LinearApplied<'a, F> {
    bundle: &'a ResidualBundle,
    phi: &'a F,
}

impl<F: SmoothField> Field for LinearApplied<'_, F> {
    fn value(&self, x: &Point) -> f64 {
        let b = self.bundle;
        let j = self.phi.jet(x);
        let w = b.w.value(x);
        let mut r = -j.lap + b.potential_at(x) * j.value - 3.0 * w * w * j.value;
        if b.cfg.beta != 0.0 && !b.maps.is_empty() {
            r -= b.cfg.beta * j.value * b.rotated_square_sum(x);
        }
        r
    }
}

/// N(φ) pointwise.
pub struct NonlinearApplied<'a, F> {
    bundle: &'a ResidualBundle,
    phi: &'a F,
}

impl<F: SmoothField> Field for NonlinearApplied<'_, F> {
    fn value(&self, x: &Point) -> f64 {
        let b = self.bundle;
        let p = self.phi.value(x);
        let w = b.w.value(x);
        let mut r = p.powi(3) + 3.0 * w * p * p;
        if b.cfg.beta != 0.0 && !b.maps.is_empty() {
            let beta = b.cfg.beta;
            let mut phi_sq = 0.0;
            let mut wphi = 0.0;
            for s in &b.maps {
                let y = s.apply(x);
                let pq = self.phi.value(&y);
                let wq = b.w.value(&y);
                phi_sq += pq * pq;
                wphi += wq * pq;
            }
            r += beta * p * phi_sq
                + 2.0 * beta * p * wphi
                + beta * w * phi_sq
                + 2.0 * beta * w * wphi;
        }
        r
    }
}

/// JSON-facing error-norm report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualNormReport {
    pub k: usize,
    pub m: usize,
    pub beta: f64,
    pub delta: f64,
    pub rho: f64,
    pub norm: f64,
    pub ratio_to_delta: f64,
    pub argmax: [f64; 4],
    pub refinement_delta: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::{Bubble, ParamDeriv, ScaledEigenPerturbation};
    use crate::fields::{pair_sign_flip, plane_swap};
    use crate::geometry::LatticeMode;
    use crate::potential::RadialPotential;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn golden() -> f64 {
        (1.0 + 5.0f64.sqrt()) / 2.0
    }

    fn cfg(k: usize, m: usize, beta: f64, delta: f64) -> AnsatzConfig {
        let r0 = golden();
        AnsatzConfig {
            k,
            m,
            beta,
            delta,
            rho: r0,
            r0,
            sigma: r0 / 10.0,
            vartheta: 0.1,
            lattice_mode: LatticeMode::CounterRotating,
            potential: RadialPotential::GaussianBump { a: 1.0, c: 1.0, w: 1.0 },
        }
    }

    fn random_point(rng: &mut StdRng, scale: f64) -> Point {
        Point::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn error_vanishes_outside_support() {
        let c = cfg(8, 2, 1.0, 1e-3);
        let bundle = ResidualBundle::new(&c).unwrap();
        let e = bundle.error_term();
        let x = Point::new(c.r0 + 2.0 * c.sigma + 0.1, 0.0, 0.0, 0.0);
        assert_eq!(e.value(&x), 0.0);
    }

    #[test]
    fn single_bubble_error_is_tiny_near_peak() {
        // one bubble, plateau region, V and beta off: W³ + ΔW = U³ + ΔU = 0
        let c = cfg(2, 1, 0.0, 1e-3);
        let lat = c.lattice().unwrap();
        let xi = lat.point(1, 1).unwrap();
        let w = crate::bubbles::Ansatz::single(c.delta, xi, c.cutoff()).unwrap();
        let b = Bubble::new(c.delta, xi).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        use crate::fields::SmoothField;
        for _ in 0..50 {
            let x = xi + random_point(&mut rng, 5.0 * c.delta);
            let j = w.jet(&x);
            let e = j.value.powi(3) + j.lap;
            let u3 = b.value(&x).powi(3);
            assert!(e.abs() / u3 < 1e-10, "x={x:?} rel={}", e.abs() / u3);
        }
    }

    #[test]
    fn error_respects_symmetry_class() {
        let c = cfg(8, 2, -1.0, 1e-3);
        let bundle = ResidualBundle::new(&c).unwrap();
        let e = bundle.error_term();
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..50 {
            let x = random_point(&mut rng, 2.0);
            let v = e.value(&x);
            for i in [2usize, 5] {
                let map = OrthogonalMap4::vertex_rotation(i, c.k).unwrap();
                assert_relative_eq!(v, e.value(&map.apply(&x)), max_relative = 1e-10, epsilon = 1e-300);
            }
            assert_relative_eq!(v, e.value(&pair_sign_flip(&x)), max_relative = 1e-10, epsilon = 1e-300);
            assert_relative_eq!(v, e.value(&plane_swap(&x)), max_relative = 1e-10, epsilon = 1e-300);
        }
    }

    #[test]
    fn nonlocal_residual_of_ansatz_is_minus_error() {
        let c = cfg(4, 2, 1.0, 1e-2);
        let bundle = ResidualBundle::new(&c).unwrap();
        let e = bundle.error_term();
        let w = bundle.ansatz().clone();
        let resid = bundle.nonlocal_residual(&w);
        let mut rng = StdRng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 1000 {
            let x = random_point(&mut rng, 2.0);
            let ev = e.value(&x);
            if ev.abs() < 1e-280 {
                continue;
            }
            let rv = resid.value(&x);
            assert_relative_eq!(rv, -ev, max_relative = 1e-10);
            checked += 1;
        }
    }

    #[test]
    fn zero_field_residuals() {
        let c = cfg(4, 2, 1.0, 1e-2);
        let bundle = ResidualBundle::new(&c).unwrap();
        struct Zero;
        impl Field for Zero {
            fn value(&self, _: &Point) -> f64 {
                0.0
            }
        }
        impl SmoothField for Zero {
            fn jet(&self, _: &Point) -> crate::fields::Jet {
                crate::fields::Jet::zero()
            }
        }
        let z = Zero;
        assert_eq!(bundle.linear_op(&z).value(&Point::new(1.6, 0.0, 0.0, 0.0)), 0.0);
        assert_eq!(bundle.nonlinear_op(&z).value(&Point::new(1.6, 0.0, 0.0, 0.0)), 0.0);
        assert_eq!(bundle.nonlocal_residual(&z).value(&Point::new(1.6, 0.0, 0.0, 0.0)), 0.0);
    }

    /// Sum field for the expansion u = W + φ.
    struct SumField<'a, A, B>(&'a A, &'a B);
    impl<A: Field, B: Field> Field for SumField<'_, A, B> {
        fn value(&self, x: &Point) -> f64 {
            self.0.value(x) + self.1.value(x)
        }
    }
    impl<A: SmoothField, B: SmoothField> SmoothField for SumField<'_, A, B> {
        fn jet(&self, x: &Point) -> crate::fields::Jet {
            let a = self.0.jet(x);
            let b = self.1.jet(x);
            crate::fields::Jet {
                value: a.value + b.value,
                grad: a.grad + b.grad,
                lap: a.lap + b.lap,
            }
        }
    }

    #[test]
    fn operator_expansion_identity() {
        // L(φ) − E − N(φ) = nonlocal_residual(W + φ) pointwise
        let c = cfg(4, 2, 1.0, 1e-2);
        let bundle = ResidualBundle::new(&c).unwrap();
        let lat = c.lattice().unwrap();
        let xi = lat.point(1, 1).unwrap();
        let phi = ScaledEigenPerturbation::new(0.01, c.delta, xi, 0, c.cutoff()).unwrap();
        let w = bundle.ansatz().clone();
        let u = SumField(&w, &phi);
        let resid_u = bundle.nonlocal_residual(&u);
        let l = bundle.linear_op(&phi);
        let e = bundle.error_term();
        let n = bundle.nonlinear_op(&phi);
        let mut rng = StdRng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 50 {
            let x = xi + random_point(&mut rng, 0.2);
            let lhs = l.value(&x) - e.value(&x) - n.value(&x);
            let rhs = resid_u.value(&x);
            if rhs.abs() < 1e-12 {
                continue;
            }
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
            checked += 1;
        }
    }

    #[test]
    fn nonlinear_op_is_quadratic_at_small_amplitude() {
        let c = cfg(4, 2, 1.0, 1e-2);
        let bundle = ResidualBundle::new(&c).unwrap();
        let lat = c.lattice().unwrap();
        let xi = lat.point(1, 1).unwrap();
        let x = xi + Point::new(0.01, -0.02, 0.015, 0.3) * c.delta;
        let mut log_t = Vec::new();
        let mut log_n = Vec::new();
        for &t in &[1e-2, 1e-3, 1e-4] {
            let phi = ScaledEigenPerturbation::new(t, c.delta, xi, 0, c.cutoff()).unwrap();
            let n = bundle.nonlinear_op(&phi);
            log_t.push(t.ln());
            log_n.push(n.value(&x).abs().ln());
        }
        let (slope, _) = crate::numeric::linear_fit(&log_t, &log_n);
        assert!((slope - 2.0).abs() < 0.05, "slope = {slope}");
    }

    #[test]
    fn error_norm_scales_with_delta() {
        let sampling = SupSampling {
            shells_per_decade: 8,
            angular_per_shell: 32,
            annulus_radial: 16,
            annulus_angular: 256,
        };
        let mut ratios = Vec::new();
        for &d in &[1e-2, 1e-3] {
            let c = cfg(4, 1, 0.0, d);
            let bundle = ResidualBundle::new(&c).unwrap();
            let rep = bundle.error_norm_report(&sampling).unwrap();
            assert!(rep.norm.is_finite() && rep.norm > 0.0);
            ratios.push(rep.ratio_to_delta);
        }
        let spread = ratios[0].max(ratios[1]) / ratios[0].min(ratios[1]);
        assert!(spread < 3.0, "ratios {ratios:?}");
    }
}

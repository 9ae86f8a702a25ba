//! The standard bubble and its scaled copies, the radial cut-off, the full
//! ansatz field and its parameter derivatives, component pullbacks, and the
//! second-eigenspace functions of the linearized bubble equation.

use crate::error::{Error, Result};
use crate::fields::{Field, Jet, Point, Rotated, SmoothField, SymmetryClass};
use crate::geometry::{LatticeMode, OrthogonalMap4, PeakLattice};
use crate::potential::RadialPotential;

/// Amplitude of the standard bubble profile c/(1+|x|²).
pub const BUBBLE_AMPLITUDE: f64 = 2.828427124746190097603377448419396157; // 2*sqrt(2)

/// One bubble: the profile c/(1+|y|²) concentrated at `center` with scale
/// `delta`, normalized as (1/δ)·U((x−ξ)/δ).
#[derive(Clone, Copy, Debug)]
pub struct Bubble {
    pub delta: f64,
    pub center: Point,
}

/// Shared powers of the regularized distance, computed once per evaluation.
/// All denominators are expressed through `a = δ/scale`, `b = s/scale` with
/// `scale = max(δ, s)`, so that no intermediate under- or overflows for any
/// representable positive δ.
#[derive(Clone, Copy)]
struct BubbleKernel {
    dvec: Point,
    /// c·δ/(δ²+s²)
    value: f64,
    /// −2cδ/(δ²+s²)²; gradient = gfac·(x−ξ)
    gfac: f64,
    /// Laplacian −8cδ³/(δ²+s²)³
    lap: f64,
}

impl Bubble {
    pub fn new(delta: f64, center: Point) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() || delta < 1e-300 {
            return Err(Error::parameter(format!(
                "bubble scale delta = {delta} must be positive, finite and >= 1e-300"
            )));
        }
        Ok(Bubble { delta, center })
    }

    fn kernel(&self, x: &Point) -> BubbleKernel {
        let c = BUBBLE_AMPLITUDE;
        let dvec = x - self.center;
        let s = dvec.norm();
        let scale = self.delta.max(s);
        let a = self.delta / scale;
        let b = s / scale;
        let den = a * a + b * b; // in [1, 2]
        let inv = 1.0 / (scale * den);
        let inv2 = inv * inv;
        BubbleKernel {
            dvec,
            value: c * a * inv,
            gfac: -2.0 * c * a * inv2 / scale,
            lap: -8.0 * c * a * a * a * inv2 * inv,
        }
    }

    /// Value-only variant of [`scale_derivative_jet`](Self::scale_derivative_jet).
    pub fn scale_derivative_value(&self, x: &Point) -> f64 {
        let c = BUBBLE_AMPLITUDE;
        let dvec = x - self.center;
        let s = dvec.norm();
        let scale = self.delta.max(s);
        let a = self.delta / scale;
        let b = s / scale;
        let den = a * a + b * b;
        c * (b * b - a * a) / (scale * scale * den * den)
    }

    /// Jet of the scale derivative ∂U_{δ,ξ}/∂δ = c(s²−δ²)/(δ²+s²)².
    pub fn scale_derivative_jet(&self, x: &Point) -> Jet {
        let c = BUBBLE_AMPLITUDE;
        let dvec = x - self.center;
        let s = dvec.norm();
        let scale = self.delta.max(s);
        let a = self.delta / scale;
        let b = s / scale;
        let den = a * a + b * b;
        let inv = 1.0 / (scale * scale * den);
        let inv2 = inv * inv;
        // ∂δU = c(s²−δ²)/(δ²+s²)²
        let value = c * (b * b - a * a) * inv2 * (scale * scale);
        // ∇(∂δU) = 2c(3δ²−s²)(x−ξ)/(δ²+s²)³
        let gfac = 2.0 * c * (3.0 * a * a - b * b) * inv2 * inv * (scale * scale);
        // Δ(∂δU) = −24cδ²(s²−δ²)/(δ²+s²)⁴
        let lap = -24.0 * c * a * a * (b * b - a * a) * inv2 * inv2 * (scale * scale * scale * scale);
        Jet {
            value,
            grad: gfac * dvec,
            lap,
        }
    }

    /// Directional pieces for the lattice-radius derivative along `dir`
    /// (= −∂ξ/∂ρ): value −⟨∇U, dir⟩... see [`AnsatzParamDeriv`].
    fn radius_derivative_jet(&self, x: &Point, dxi_drho: &Point) -> Jet {
        let c = BUBBLE_AMPLITUDE;
        let k = self.kernel(x);
        let dvec = k.dvec;
        let s = dvec.norm();
        let scale = self.delta.max(s);
        let a = self.delta / scale;
        let den = a * a + (s / scale) * (s / scale);
        // hessian H = gfac·I + hfac·(x−ξ)(x−ξ)ᵀ, hfac = 8cδ/(δ²+s²)³
        let hfac = 8.0 * c * a / (scale * den).powi(3) / (scale * scale);
        // ∇ΔU = 48cδ³(x−ξ)/(δ²+s²)⁴
        let glap = 48.0 * c * a * a * a / (scale * den).powi(4) / scale;
        let proj = dvec.dot(dxi_drho);
        Jet {
            value: -k.gfac * proj,
            grad: -(k.gfac * dxi_drho + hfac * proj * dvec),
            lap: -glap * proj,
        }
    }
}

impl Field for Bubble {
    fn value(&self, x: &Point) -> f64 {
        self.kernel(x).value
    }
}

impl SmoothField for Bubble {
    fn jet(&self, x: &Point) -> Jet {
        let k = self.kernel(x);
        Jet {
            value: k.value,
            grad: k.gfac * k.dvec,
            lap: k.lap,
        }
    }
}

/// Radial cut-off: identically 1 on |r−r0| ≤ σ, identically 0 on
/// |r−r0| ≥ 2σ, quintic-smoothstep transition (C² everywhere).
#[derive(Clone, Copy, Debug)]
pub struct RadialCutoff {
    pub r0: f64,
    pub sigma: f64,
}

impl RadialCutoff {
    pub fn new(r0: f64, sigma: f64) -> Result<Self> {
        if !(r0 > 0.0 && sigma > 0.0) {
            return Err(Error::parameter("cutoff needs r0 > 0 and sigma > 0"));
        }
        if sigma >= r0 / 2.0 {
            return Err(Error::parameter(format!(
                "sigma = {sigma} must be below r0/2 = {} so the support avoids the origin",
                r0 / 2.0
            )));
        }
        Ok(RadialCutoff { r0, sigma })
    }

    /// (χ, χ′, χ″) at radius r ≥ 0.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let a = (r - self.r0).abs();
        if a <= self.sigma {
            return (1.0, 0.0, 0.0);
        }
        if a >= 2.0 * self.sigma {
            return (0.0, 0.0, 0.0);
        }
        let t = (a - self.sigma) / self.sigma;
        let s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        let sign = if r >= self.r0 { 1.0 } else { -1.0 };
        (
            1.0 - s,
            -ds / self.sigma * sign,
            -dds / (self.sigma * self.sigma),
        )
    }

    /// Outer support radius r0 + 2σ.
    pub fn outer_radius(&self) -> f64 {
        self.r0 + 2.0 * self.sigma
    }
}

/// Everything defining the explicit ansatz: lattice shape, coupling, scale,
/// cut-off and potential.
#[derive(Clone, Debug)]
pub struct AnsatzConfig {
    pub k: usize,
    pub m: usize,
    pub beta: f64,
    pub delta: f64,
    pub rho: f64,
    pub r0: f64,
    pub sigma: f64,
    /// Allowed window |ρ − r0| ≤ vartheta for expansion checks.
    pub vartheta: f64,
    pub lattice_mode: LatticeMode,
    pub potential: RadialPotential,
}

impl AnsatzConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k % 2 != 0 {
            return Err(Error::parameter(format!("k = {} must be even >= 2", self.k)));
        }
        if self.m < 1 {
            return Err(Error::parameter("m must be >= 1"));
        }
        if !(self.delta > 0.0) || self.delta < 1e-300 {
            return Err(Error::parameter(format!(
                "delta = {} out of range",
                self.delta
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::parameter("rho must be positive"));
        }
        if (self.rho - self.r0).abs() > self.vartheta {
            return Err(Error::parameter(format!(
                "rho = {} outside the window r0 ± {} around r0 = {}",
                self.rho, self.vartheta, self.r0
            )));
        }
        RadialCutoff::new(self.r0, self.sigma)?;
        if !self.beta.is_finite() {
            return Err(Error::parameter("beta must be finite"));
        }
        Ok(())
    }

    pub fn cutoff(&self) -> RadialCutoff {
        RadialCutoff {
            r0: self.r0,
            sigma: self.sigma,
        }
    }

    /// The full lattice of blow-up points (all m component circles).
    pub fn lattice(&self) -> Result<PeakLattice> {
        PeakLattice::new(self.k, self.m, self.rho, self.lattice_mode)
    }

    /// The ansatz field built on the first component circle.
    pub fn ansatz(&self) -> Result<Ansatz> {
        Ansatz::from_config(self)
    }

    /// Parameter derivative of the ansatz.
    pub fn ansatz_derivative(&self, which: ParamDeriv) -> Result<AnsatzParamDeriv> {
        Ok(AnsatzParamDeriv {
            ansatz: self.ansatz()?,
            which,
        })
    }

    /// Component rotations S_q for q = 2..=m.
    pub fn component_maps(&self) -> Result<Vec<OrthogonalMap4>> {
        (2..=self.m)
            .map(|q| match self.lattice_mode {
                LatticeMode::CounterRotating => OrthogonalMap4::component_rotation(q, self.m),
                LatticeMode::PlanarRotating => OrthogonalMap4::component_rotation_planar(q, self.m),
            })
            .collect()
    }
}

/// The cut-off sum of bubbles on the first component circle:
/// W(x) = χ(|x|) Σ_i U_{δ,ξ_i}(x).
#[derive(Clone, Debug)]
pub struct Ansatz {
    bubbles: Vec<Bubble>,
    cutoff: RadialCutoff,
    symmetry: SymmetryClass,
    rho: f64,
}

impl Ansatz {
    pub fn from_config(cfg: &AnsatzConfig) -> Result<Self> {
        cfg.validate()?;
        let lat = cfg.lattice()?;
        Self::from_lattice(&lat, cfg.delta, cfg.cutoff())
    }

    /// A one-bubble ansatz χ·U_{δ,ξ} (no polygon symmetry claimed).
    pub fn single(delta: f64, center: Point, cutoff: RadialCutoff) -> Result<Self> {
        Ok(Ansatz {
            bubbles: vec![Bubble::new(delta, center)?],
            cutoff,
            symmetry: SymmetryClass::default(),
            rho: center.norm(),
        })
    }

    /// Builds W from the q = 1 circle of the given lattice.
    pub fn from_lattice(lat: &PeakLattice, delta: f64, cutoff: RadialCutoff) -> Result<Self> {
        let bubbles = lat
            .circle_points(1)?
            .iter()
            .map(|&center| Bubble::new(delta, center))
            .collect::<Result<Vec<_>>>()?;
        let symmetry = match lat.mode() {
            LatticeMode::CounterRotating => SymmetryClass::full(lat.k()),
            LatticeMode::PlanarRotating => SymmetryClass {
                pair_sign_flip: true,
                plane_swap: false,
                polygon: None,
            },
        };
        Ok(Ansatz {
            bubbles,
            cutoff,
            symmetry,
            rho: lat.rho(),
        })
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn cutoff(&self) -> &RadialCutoff {
        &self.cutoff
    }

    pub fn delta(&self) -> f64 {
        self.bubbles[0].delta
    }

    /// Jet of the plain bubble sum S = Σ U_i (no cut-off).
    fn sum_jet(&self, x: &Point) -> Jet {
        let mut j = Jet::zero();
        for b in &self.bubbles {
            let bj = b.jet(x);
            j.value += bj.value;
            j.grad += bj.grad;
            j.lap += bj.lap;
        }
        j
    }

    /// Σ U_i³ (the per-bubble cubes, used by the residual decomposition).
    pub fn sum_cubes(&self, x: &Point) -> f64 {
        self.bubbles.iter().map(|b| b.value(x).powi(3)).sum()
    }

    /// One-pass evaluation of everything the expansion integrands need at a
    /// node: the W jet, the cut-off commutator part of ΔW, the per-bubble
    /// cube sum, and the scale derivative ∂W/∂δ.
    pub fn node_eval(&self, x: &Point) -> AnsatzNodeEval {
        let r = x.norm();
        let (chi, dchi, ddchi) = self.cutoff.eval(r);
        if chi == 0.0 && dchi == 0.0 {
            return AnsatzNodeEval::zero();
        }
        let c = BUBBLE_AMPLITUDE;
        let mut s = Jet::zero();
        let mut cubes = 0.0;
        let mut dsum = 0.0;
        for bubble in &self.bubbles {
            let dvec = x - bubble.center;
            let dist = dvec.norm();
            let scale = bubble.delta.max(dist);
            let a = bubble.delta / scale;
            let b = dist / scale;
            let den = a * a + b * b;
            let inv = 1.0 / (scale * den);
            let inv2 = inv * inv;
            let value = c * a * inv;
            s.value += value;
            s.grad += (-2.0 * c * a * inv2 / scale) * dvec;
            s.lap += -8.0 * c * a * a * a * inv2 * inv;
            cubes += value * value * value;
            dsum += c * (b * b - a * a) / (scale * scale * den * den);
        }
        let rhat = if r > 0.0 { x / r } else { Point::zeros() };
        let lap_chi = ddchi + if r > 0.0 { 3.0 * dchi / r } else { 0.0 };
        let radial = rhat.dot(&s.grad);
        AnsatzNodeEval {
            chi,
            w: Jet {
                value: chi * s.value,
                grad: dchi * s.value * rhat + chi * s.grad,
                lap: lap_chi * s.value + 2.0 * dchi * radial + chi * s.lap,
            },
            cutoff_commutator: lap_chi * s.value + 2.0 * dchi * radial,
            sum_cubes: cubes,
            scale_deriv: chi * dsum,
        }
    }

    /// Value, jet pieces, and decomposition data at one point.
    pub fn parts(&self, x: &Point) -> AnsatzParts {
        let r = x.norm();
        let (chi, dchi, ddchi) = self.cutoff.eval(r);
        if chi == 0.0 && dchi == 0.0 {
            return AnsatzParts::zero();
        }
        let s = self.sum_jet(x);
        let rhat = if r > 0.0 { x / r } else { Point::zeros() };
        let lap_chi = ddchi + if r > 0.0 { 3.0 * dchi / r } else { 0.0 };
        let radial_grad_s = rhat.dot(&s.grad);
        AnsatzParts {
            chi,
            dchi,
            rhat,
            sum: s,
            value: chi * s.value,
            grad: dchi * s.value * rhat + chi * s.grad,
            lap: lap_chi * s.value + 2.0 * dchi * radial_grad_s + chi * s.lap,
            cutoff_commutator: lap_chi * s.value + 2.0 * dchi * radial_grad_s,
        }
    }
}

/// Node evaluation bundle used by the expansion integrands.
#[derive(Clone, Copy, Debug)]
pub struct AnsatzNodeEval {
    pub chi: f64,
    /// Full jet of W.
    pub w: Jet,
    /// Δχ·ΣU + 2∇χ·Σ∇U — the cut-off part of ΔW.
    pub cutoff_commutator: f64,
    /// Σ U_i³.
    pub sum_cubes: f64,
    /// ∂W/∂δ.
    pub scale_deriv: f64,
}

impl AnsatzNodeEval {
    fn zero() -> Self {
        AnsatzNodeEval {
            chi: 0.0,
            w: Jet::zero(),
            cutoff_commutator: 0.0,
            sum_cubes: 0.0,
            scale_deriv: 0.0,
        }
    }
}

/// Decomposed evaluation of the ansatz at a point.
#[derive(Clone, Copy, Debug)]
pub struct AnsatzParts {
    pub chi: f64,
    pub dchi: f64,
    pub rhat: Point,
    /// Jet of the bare bubble sum Σ U_i.
    pub sum: Jet,
    pub value: f64,
    pub grad: Point,
    pub lap: f64,
    /// Δχ·ΣU + 2∇χ·Σ∇U — the part of ΔW produced by the cut-off.
    pub cutoff_commutator: f64,
}

impl AnsatzParts {
    fn zero() -> Self {
        AnsatzParts {
            chi: 0.0,
            dchi: 0.0,
            rhat: Point::zeros(),
            sum: Jet::zero(),
            value: 0.0,
            grad: Point::zeros(),
            lap: 0.0,
            cutoff_commutator: 0.0,
        }
    }
}

impl Field for Ansatz {
    fn value(&self, x: &Point) -> f64 {
        let r = x.norm();
        let (chi, _, _) = self.cutoff.eval(r);
        if chi == 0.0 {
            return 0.0;
        }
        chi * self.bubbles.iter().map(|b| b.value(x)).sum::<f64>()
    }

    fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }
}

impl SmoothField for Ansatz {
    fn jet(&self, x: &Point) -> Jet {
        let p = self.parts(x);
        Jet {
            value: p.value,
            grad: p.grad,
            lap: p.lap,
        }
    }
}

/// Which ansatz parameter a derivative field differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamDeriv {
    /// ∂/∂δ of Σ χU_{δ,ξ_i} (the cut-off does not depend on δ).
    Scale,
    /// ∂/∂ρ, moving every vertex along ξ_i/ρ (the cut-off does not depend on ρ).
    Radius,
}

/// Analytic parameter derivative of the ansatz field.
#[derive(Clone, Debug)]
pub struct AnsatzParamDeriv {
    ansatz: Ansatz,
    which: ParamDeriv,
}

impl AnsatzParamDeriv {
    pub fn which(&self) -> ParamDeriv {
        self.which
    }

    fn inner_jet(&self, x: &Point) -> Jet {
        let mut j = Jet::zero();
        match self.which {
            ParamDeriv::Scale => {
                for b in &self.ansatz.bubbles {
                    let bj = b.scale_derivative_jet(x);
                    j.value += bj.value;
                    j.grad += bj.grad;
                    j.lap += bj.lap;
                }
            }
            ParamDeriv::Radius => {
                for b in &self.ansatz.bubbles {
                    let dir = b.center / self.ansatz.rho;
                    let bj = b.radius_derivative_jet(x, &dir);
                    j.value += bj.value;
                    j.grad += bj.grad;
                    j.lap += bj.lap;
                }
            }
        }
        j
    }
}

impl Field for AnsatzParamDeriv {
    fn value(&self, x: &Point) -> f64 {
        let r = x.norm();
        let (chi, _, _) = self.ansatz.cutoff.eval(r);
        if chi == 0.0 {
            return 0.0;
        }
        chi * self.inner_jet(x).value
    }

    fn symmetry(&self) -> SymmetryClass {
        self.ansatz.symmetry
    }
}

impl SmoothField for AnsatzParamDeriv {
    fn jet(&self, x: &Point) -> Jet {
        let r = x.norm();
        let (chi, dchi, ddchi) = self.ansatz.cutoff.eval(r);
        if chi == 0.0 && dchi == 0.0 {
            return Jet::zero();
        }
        let inner = self.inner_jet(x);
        let rhat = if r > 0.0 { x / r } else { Point::zeros() };
        let lap_chi = ddchi + if r > 0.0 { 3.0 * dchi / r } else { 0.0 };
        Jet {
            value: chi * inner.value,
            grad: dchi * inner.value * rhat + chi * inner.grad,
            lap: lap_chi * inner.value + 2.0 * dchi * rhat.dot(&inner.grad) + chi * inner.lap,
        }
    }
}

/// Pullback u(S_q x) of a field by a component rotation.
pub fn component_field<F: SmoothField>(
    field: F,
    q: usize,
    cfg: &AnsatzConfig,
) -> Result<Rotated<F>> {
    let map = match cfg.lattice_mode {
        LatticeMode::CounterRotating => OrthogonalMap4::component_rotation(q, cfg.m)?,
        LatticeMode::PlanarRotating => OrthogonalMap4::component_rotation_planar(q, cfg.m)?,
    };
    Ok(Rotated::new(field, map))
}

/// Eigenfunctions of the linearized bubble equation at eigenvalue 3:
/// Z_0 = (1−|x|²)/(1+|x|²)², Z_l = x_l/(1+|x|²)² for l = 1..4.
#[derive(Clone, Copy, Debug)]
pub struct SecondEigenfunction {
    l: usize,
}

impl SecondEigenfunction {
    pub fn new(l: usize) -> Result<Self> {
        if l > 4 {
            return Err(Error::parameter(format!("eigenfunction index {l} > 4")));
        }
        Ok(SecondEigenfunction { l })
    }

    pub fn index(&self) -> usize {
        self.l
    }
}

impl Field for SecondEigenfunction {
    fn value(&self, x: &Point) -> f64 {
        let w = 1.0 + x.norm_squared();
        match self.l {
            0 => (1.0 - x.norm_squared()) / (w * w),
            l => x[l - 1] / (w * w),
        }
    }
}

impl SmoothField for SecondEigenfunction {
    fn jet(&self, x: &Point) -> Jet {
        let r2 = x.norm_squared();
        let w = 1.0 + r2;
        let w2 = w * w;
        let w3 = w2 * w;
        let w4 = w2 * w2;
        match self.l {
            0 => Jet {
                value: (1.0 - r2) / w2,
                grad: (2.0 * r2 - 6.0) / w3 * x,
                lap: -24.0 * (1.0 - r2) / w4,
            },
            l => {
                let xl = x[l - 1];
                let mut grad = -4.0 * xl / w3 * x;
                grad[l - 1] += 1.0 / w2;
                Jet {
                    value: xl / w2,
                    grad,
                    lap: -24.0 * xl / w4,
                }
            }
        }
    }
}

/// Test field: a scaled second eigenfunction localized at a vertex and cut
/// off radially — a stand-in remainder with an analytic jet.
#[derive(Clone, Debug)]
pub struct ScaledEigenPerturbation {
    pub amplitude: f64,
    pub delta: f64,
    pub center: Point,
    pub eigen: SecondEigenfunction,
    pub cutoff: RadialCutoff,
}

impl ScaledEigenPerturbation {
    pub fn new(
        amplitude: f64,
        delta: f64,
        center: Point,
        l: usize,
        cutoff: RadialCutoff,
    ) -> Result<Self> {
        Ok(ScaledEigenPerturbation {
            amplitude,
            delta,
            center,
            eigen: SecondEigenfunction::new(l)?,
            cutoff,
        })
    }
}

impl Field for ScaledEigenPerturbation {
    fn value(&self, x: &Point) -> f64 {
        let (chi, _, _) = self.cutoff.eval(x.norm());
        if chi == 0.0 {
            return 0.0;
        }
        let y = (x - self.center) / self.delta;
        self.amplitude * chi * self.eigen.value(&y)
    }
}

impl SmoothField for ScaledEigenPerturbation {
    fn jet(&self, x: &Point) -> Jet {
        let r = x.norm();
        let (chi, dchi, ddchi) = self.cutoff.eval(r);
        if chi == 0.0 && dchi == 0.0 {
            return Jet::zero();
        }
        let y = (x - self.center) / self.delta;
        let ej = self.eigen.jet(&y);
        let val = ej.value;
        let grad = ej.grad / self.delta;
        let lap = ej.lap / (self.delta * self.delta);
        let rhat = if r > 0.0 { x / r } else { Point::zeros() };
        let lap_chi = ddchi + if r > 0.0 { 3.0 * dchi / r } else { 0.0 };
        Jet {
            value: self.amplitude * chi * val,
            grad: self.amplitude * (dchi * val * rhat + chi * grad),
            lap: self.amplitude * (lap_chi * val + 2.0 * dchi * rhat.dot(&grad) + chi * lap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::testutil::jet_fd_error;
    use crate::fields::{pair_sign_flip, plane_swap};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn test_cfg(k: usize, m: usize, delta: f64) -> AnsatzConfig {
        let r0 = (1.0 + 5.0f64.sqrt()) / 2.0;
        AnsatzConfig {
            k,
            m,
            beta: 1.0,
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
    fn bubble_center_values() {
        let b = Bubble::new(1.0, Point::zeros()).unwrap();
        assert_relative_eq!(b.value(&Point::zeros()), BUBBLE_AMPLITUDE, epsilon = 1e-15);
        // −ΔU(0) = 8c = U(0)³
        let j = b.jet(&Point::zeros());
        assert_relative_eq!(-j.lap, 8.0 * BUBBLE_AMPLITUDE, epsilon = 1e-12);
        assert_relative_eq!(-j.lap, BUBBLE_AMPLITUDE.powi(3), epsilon = 1e-12);
    }

    #[test]
    fn bubble_equation_holds_everywhere() {
        let mut rng = StdRng::seed_from_u64(7);
        let b = Bubble::new(1.0, Point::zeros()).unwrap();
        for _ in 0..10_000 {
            let x = random_point(&mut rng, 4.0);
            let j = b.jet(&x);
            let rel = (-j.lap - j.value.powi(3)).abs() / j.value.powi(3);
            assert!(rel < 1e-12, "rel = {rel} at {x:?}");
        }
    }

    #[test]
    fn bubble_scaling_relation() {
        let mut rng = StdRng::seed_from_u64(8);
        let delta = 0.37;
        let b = Bubble::new(delta, Point::zeros()).unwrap();
        let unit = Bubble::new(1.0, Point::zeros()).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut rng, 2.0);
            assert_relative_eq!(
                b.value(&x),
                unit.value(&(x / delta)) / delta,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn bubble_survives_extreme_scales() {
        let b = Bubble::new(1e-300, Point::zeros()).unwrap();
        let v = b.value(&Point::zeros());
        assert!(v.is_finite() && v > 0.0);
        let far = b.value(&Point::new(1.0, 0.0, 0.0, 0.0));
        assert!(far.is_finite() && far >= 0.0);
    }

    #[test]
    fn scale_derivative_at_center() {
        let delta = 1e-3;
        let b = Bubble::new(delta, Point::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        let j = b.scale_derivative_jet(&Point::new(1.0, 0.0, 0.0, 0.0));
        assert_relative_eq!(j.value, -BUBBLE_AMPLITUDE / (delta * delta), max_relative = 1e-13);
    }

    #[test]
    fn scale_derivative_matches_finite_difference() {
        let mut rng = StdRng::seed_from_u64(9);
        let center = Point::new(0.9, 0.1, -0.4, 0.2);
        let delta = 0.05;
        for _ in 0..50 {
            let x = center + random_point(&mut rng, 0.3);
            let h = 1e-6;
            let vp = Bubble::new(delta + h, center).unwrap().value(&x);
            let vm = Bubble::new(delta - h, center).unwrap().value(&x);
            let fd = (vp - vm) / (2.0 * h);
            let j = Bubble::new(delta, center).unwrap().scale_derivative_jet(&x);
            assert_relative_eq!(j.value, fd, max_relative = 1e-5);
        }
    }

    #[test]
    fn cutoff_plateau_and_support() {
        let c = RadialCutoff::new(1.6, 0.16).unwrap();
        assert_eq!(c.eval(1.6), (1.0, 0.0, 0.0));
        assert_eq!(c.eval(1.6 + 3.0 * 0.16), (0.0, 0.0, 0.0));
        assert_eq!(c.eval(1.6 - 3.0 * 0.16), (0.0, 0.0, 0.0));
        // derivative matches finite differences in the transition band
        let r = 1.6 + 1.5 * 0.16;
        let f = |r: f64| c.eval(r).0;
        let fd = crate::numeric::central_diff(&f, r, 1e-7);
        assert_relative_eq!(c.eval(r).1, fd, max_relative = 1e-7);
        // χ'' vanishes at the transition midpoint; probe a quarter point
        let rq = 1.6 + 1.25 * 0.16;
        let fd2 = crate::numeric::second_diff(&f, rq, 1e-5);
        assert_relative_eq!(c.eval(rq).2, fd2, max_relative = 1e-4);
        // range
        for i in 0..200 {
            let r = 1.0 + i as f64 * 0.006;
            let (chi, _, _) = c.eval(r);
            assert!((0.0..=1.0).contains(&chi));
        }
    }

    #[test]
    fn cutoff_rejects_wide_sigma() {
        assert!(RadialCutoff::new(1.0, 0.6).is_err());
    }

    #[test]
    fn ansatz_self_peak_dominates() {
        let cfg = test_cfg(8, 1, 1e-3);
        let w = cfg.ansatz().unwrap();
        let xi1 = cfg.lattice().unwrap().point(1, 1).unwrap();
        let peak = w.value(&xi1);
        let self_peak = BUBBLE_AMPLITUDE / cfg.delta;
        assert!(peak >= self_peak * (1.0 - 1e-3));
        assert!(peak <= self_peak * (1.0 + 1e-3));
    }

    #[test]
    fn ansatz_vanishes_outside_cutoff() {
        let cfg = test_cfg(8, 1, 1e-3);
        let w = cfg.ansatz().unwrap();
        let x = Point::new(cfg.r0 + 2.0 * cfg.sigma + 0.05, 0.0, 0.0, 0.0);
        assert_eq!(w.value(&x), 0.0);
        assert_eq!(w.jet(&x).lap, 0.0);
    }

    #[test]
    fn ansatz_polygon_symmetry() {
        let cfg = test_cfg(8, 1, 1e-2);
        let w = cfg.ansatz().unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_point(&mut rng, 2.0);
            let v = w.value(&x);
            for i in 1..=cfg.k {
                let map = OrthogonalMap4::vertex_rotation(i, cfg.k).unwrap();
                let vr = w.value(&map.apply(&x));
                assert_relative_eq!(v, vr, max_relative = 1e-12, epsilon = 1e-300);
            }
            // the two reflection-type symmetries of the class
            assert_relative_eq!(v, w.value(&pair_sign_flip(&x)), max_relative = 1e-12, epsilon = 1e-300);
            assert_relative_eq!(v, w.value(&plane_swap(&x)), max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn ansatz_jets_match_finite_differences() {
        let cfg = test_cfg(4, 1, 0.05);
        let w = cfg.ansatz().unwrap();
        let dd = cfg.ansatz_derivative(ParamDeriv::Scale).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        let lat = cfg.lattice().unwrap();
        let xi1 = lat.point(1, 1).unwrap();
        for _ in 0..40 {
            // sample near the first peak and in the transition band
            let x = xi1 + random_point(&mut rng, 0.2);
            assert!(jet_fd_error(&w, &x, 2e-6) < 1e-5);
            assert!(jet_fd_error(&dd, &x, 2e-6) < 1e-5);
        }
    }

    #[test]
    fn scale_derivative_of_ansatz_matches_fd_in_delta() {
        let cfg = test_cfg(8, 1, 0.01);
        let mut rng = StdRng::seed_from_u64(13);
        let dd = cfg.ansatz_derivative(ParamDeriv::Scale).unwrap();
        let h = 1e-6;
        let mut up = cfg.clone();
        up.delta += h;
        let mut dn = cfg.clone();
        dn.delta -= h;
        let wu = up.ansatz().unwrap();
        let wd = dn.ansatz().unwrap();
        let xi1 = cfg.lattice().unwrap().point(1, 1).unwrap();
        for _ in 0..50 {
            let x = xi1 + random_point(&mut rng, 0.3);
            let fd = (wu.value(&x) - wd.value(&x)) / (2.0 * h);
            let an = dd.value(&x);
            if fd.abs() > 1e-8 {
                assert_relative_eq!(an, fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn radius_derivative_matches_fd_rebuilding_lattice() {
        let cfg = test_cfg(8, 1, 0.01);
        let mut rng = StdRng::seed_from_u64(14);
        let dr = cfg.ansatz_derivative(ParamDeriv::Radius).unwrap();
        let h = 1e-6;
        let mut up = cfg.clone();
        up.rho += h;
        let mut dn = cfg.clone();
        dn.rho -= h;
        let wu = up.ansatz().unwrap();
        let wd = dn.ansatz().unwrap();
        let xi1 = cfg.lattice().unwrap().point(1, 1).unwrap();
        for _ in 0..50 {
            let x = xi1 + random_point(&mut rng, 0.3);
            let fd = (wu.value(&x) - wd.value(&x)) / (2.0 * h);
            let an = dr.value(&x);
            if fd.abs() > 1e-8 {
                assert_relative_eq!(an, fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn component_pullback_radial_pairing() {
        // <x, ∇(u∘S_q)(x)> = <y, ∇u(y)> at y = S_q x
        let cfg = test_cfg(4, 3, 0.05);
        let w = cfg.ansatz().unwrap();
        let uq = component_field(w.clone(), 2, &cfg).unwrap();
        let mut rng = StdRng::seed_from_u64(15);
        for _ in 0..100 {
            let x = random_point(&mut rng, 2.0);
            let y = uq.map().apply(&x);
            let lhs = x.dot(&uq.jet(&x).grad);
            let rhs = y.dot(&w.jet(&y).grad);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-11, epsilon = 1e-14);
        }
    }

    #[test]
    fn component_q1_and_antipodal() {
        let cfg = test_cfg(4, 2, 0.05);
        let w = cfg.ansatz().unwrap();
        let u1 = component_field(w.clone(), 1, &cfg).unwrap();
        let um = component_field(w.clone(), cfg.m + 1, &cfg).unwrap();
        let mut rng = StdRng::seed_from_u64(16);
        for _ in 0..50 {
            let x = random_point(&mut rng, 2.0);
            assert_eq!(u1.value(&x), w.value(&x));
            // q = m+1 is the antipodal map; W is even
            assert_relative_eq!(um.value(&x), w.value(&-x), epsilon = 1e-300, max_relative = 1e-13);
            assert_relative_eq!(um.value(&x), w.value(&x), epsilon = 1e-300, max_relative = 1e-12);
        }
    }

    #[test]
    fn eigenfunctions_satisfy_eigenvalue_three() {
        let mut rng = StdRng::seed_from_u64(17);
        let u = Bubble::new(1.0, Point::zeros()).unwrap();
        for l in 0..=4 {
            let z = SecondEigenfunction::new(l).unwrap();
            assert_relative_eq!(
                SecondEigenfunction::new(0).unwrap().value(&Point::zeros()),
                1.0
            );
            for _ in 0..200 {
                let x = random_point(&mut rng, 3.0);
                let j = z.jet(&x);
                let u2 = u.value(&x).powi(2);
                let resid = -j.lap - 3.0 * u2 * j.value;
                let scale = (3.0 * u2 * j.value).abs().max(1e-14);
                assert!(resid.abs() / scale < 1e-10, "l={l} resid={resid}");
            }
        }
    }

    #[test]
    fn eigen_jets_match_fd() {
        let mut rng = StdRng::seed_from_u64(18);
        for l in 0..=4 {
            let z = SecondEigenfunction::new(l).unwrap();
            for _ in 0..20 {
                let x = random_point(&mut rng, 2.0);
                assert!(jet_fd_error(&z, &x, 1e-5) < 1e-7);
            }
        }
    }

    #[test]
    fn planar_lattice_ansatz_keeps_first_plane_rotations() {
        let r0 = (1.0 + 5.0f64.sqrt()) / 2.0;
        let lat = PeakLattice::new(8, 1, r0, LatticeMode::PlanarRotating).unwrap();
        let w = Ansatz::from_lattice(&lat, 1e-2, RadialCutoff::new(r0, r0 / 10.0).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(19);
        for i in 1..=8 {
            let th = 2.0 * std::f64::consts::PI * (i - 1) as f64 / 8.0;
            let map = OrthogonalMap4::first_plane_rotation(th);
            for _ in 0..20 {
                let x = random_point(&mut rng, 2.0);
                let v = w.value(&x);
                let vr = w.value(&map.apply(&x));
                assert_relative_eq!(v, vr, max_relative = 1e-11, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn scaled_eigen_perturbation_jet() {
        let cfg = test_cfg(4, 1, 0.05);
        let xi1 = cfg.lattice().unwrap().point(1, 1).unwrap();
        let phi =
            ScaledEigenPerturbation::new(0.01, cfg.delta, xi1, 0, cfg.cutoff()).unwrap();
        let mut rng = StdRng::seed_from_u64(20);
        for _ in 0..30 {
            let x = xi1 + random_point(&mut rng, 0.1);
            assert!(jet_fd_error(&phi, &x, 1e-6) < 1e-5);
        }
    }
}

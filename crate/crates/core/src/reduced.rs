//! The reduced algebraic system: concentration radius from the potential's
//! ring-energy critical point, log blow-up rate from the expansion constants.

use crate::error::{Error, Result};
use crate::expansions::{ConstantConvention, ExpansionConstants};
use crate::potential::{find_r0, CriticalPointReport, RadialPotential};
use serde::{Deserialize, Serialize};

/// Solution of the leading-order reduced system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedSolution {
    /// Concentration radius (the critical point of r²V).
    pub rho: f64,
    /// Log-rate: δ = exp(−d·k²).
    pub d: f64,
    /// ln δ = −d·k²; δ itself is never materialized here.
    pub log_delta: f64,
    pub k: usize,
    pub convention: ConstantConvention,
    pub a_used: f64,
    pub b_used: f64,
    /// The same rate under the other constant convention.
    pub d_other_convention: f64,
    pub nondegeneracy: CriticalPointReport,
    /// Set when the critical point is degenerate (solution unreliable).
    pub degenerate_warning: bool,
}

/// Solves the reduced system for (d, ρ): ρ is the bracketed critical point of
/// r²V(r), and d = b/(a·ρ²·V(ρ)). Requires V(ρ) > 0.
pub fn solve_reduced(
    potential: &RadialPotential,
    k: usize,
    bracket: (f64, f64),
    consts: &ExpansionConstants,
    convention: ConstantConvention,
) -> Result<ReducedSolution> {
    if k == 0 {
        return Err(Error::parameter("k must be positive"));
    }
    let report = find_r0(potential, bracket)?;
    let rho = report.r0;
    let v = potential.eval(rho)?.0;
    if v <= 0.0 {
        return Err(Error::Model(format!(
            "V(r0) = {v} must be positive at the concentration radius"
        )));
    }
    let a = consts.a(convention);
    let other = match convention {
        ConstantConvention::Bare => ConstantConvention::Measured,
        ConstantConvention::Measured => ConstantConvention::Bare,
    };
    let d = consts.b / (a * rho * rho * v);
    let d_other = consts.b / (consts.a(other) * rho * rho * v);
    let k2 = (k as f64) * (k as f64);
    Ok(ReducedSolution {
        rho,
        d,
        log_delta: -d * k2,
        k,
        convention,
        a_used: a,
        b_used: consts.b,
        d_other_convention: d_other,
        degenerate_warning: !report.nondegenerate,
        nondegeneracy: report,
    })
}

impl ReducedSolution {
    /// δ as a float, when representable; otherwise an error that reports
    /// log10 δ.
    pub fn materialize_delta(&self) -> Result<f64> {
        if self.log_delta < 1e-300f64.ln() {
            return Err(Error::Model(format!(
                "delta underflows double precision: log10(delta) = {:.3}",
                self.log_delta / std::f64::consts::LN_10
            )));
        }
        Ok(self.log_delta.exp())
    }
}

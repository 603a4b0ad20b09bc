//! Hamiltonians, potentials, initial data and the assumption audit.

pub mod audit;
pub mod hamiltonian;
pub mod initial;
pub mod potential;

pub use audit::{audit_assumptions, default_r_grid, AssumptionCheck, AssumptionReport, Witness};
pub use hamiltonian::{build_hamiltonian, Branch, BranchMaps, CustomHamiltonian, Hamiltonian, HamiltonianKind, Legendre};
pub use initial::InitialData;
pub use potential::{CellProfile, Potential, XProfile};

use crate::error::Result;

/// Everything that defines `H(x, y, p) = H(p) + V(x, y) + C0` and the Cauchy datum.
#[derive(Clone, Debug)]
pub struct Models {
    pub hamiltonian: Hamiltonian,
    pub potential: Potential,
    pub u0: InitialData,
    /// The additive constant `C0`; all internal computations use `C0 = 0`.
    pub c0_shift: f64,
}

impl Models {
    /// Builds and validates the Hamiltonian. `grad_bound` defaults to
    /// [`Models::default_grad_bound`].
    pub fn new(
        kind: HamiltonianKind,
        potential: Potential,
        u0: InitialData,
        c0_shift: f64,
        grad_bound: Option<f64>,
    ) -> Result<Self> {
        let m = match grad_bound {
            Some(m) => m,
            None => Self::default_grad_bound(&kind, &potential, &u0)?,
        };
        Ok(Self {
            hamiltonian: build_hamiltonian(kind, m)?,
            potential,
            u0,
            c0_shift,
        })
    }

    /// Like [`Models::new`] but keeps Hamiltonians that fail the admissibility
    /// checks, so that the audit can report on them.
    pub fn new_unchecked(
        kind: HamiltonianKind,
        potential: Potential,
        u0: InitialData,
        c0_shift: f64,
        grad_bound: Option<f64>,
    ) -> Result<Self> {
        let m = match grad_bound {
            Some(m) => m,
            None => Self::default_grad_bound(&kind, &potential, &u0)?,
        };
        Ok(Self {
            hamiltonian: Hamiltonian::build_unchecked(kind, m)?,
            potential,
            u0,
            c0_shift,
        })
    }

    /// A priori bound on `|u^eps_x|`: from `|u_t| <= C̄` the equation gives
    /// `H(u_x) <= C̄ + ||V||`, so `|u_x| <= max_i |H_i^{-1}(C̄ + ||V||)|`.
    pub fn default_grad_bound(kind: &HamiltonianKind, potential: &Potential, u0: &InitialData) -> Result<f64> {
        let probe = Hamiltonian::build_unchecked(kind.clone(), 1.0)?;
        let level = c_bar_of(&probe, potential, u0) + potential.sup_norm();
        let m = Branch::BOTH
            .iter()
            .map(|&b| probe.inverse(b, level).abs())
            .fold(u0.lip(), f64::max);
        Ok(if m > 0.0 { m } else { 1.0 })
    }

    /// `C̄ = max_{|p| <= Lip(u0)} H(p) + ||V||`, which bounds `|H(x, y, p)|` there.
    pub fn c_bar(&self) -> f64 {
        c_bar_of(&self.hamiltonian, &self.potential, &self.u0)
    }

    pub fn lip(&self) -> f64 {
        self.u0.lip()
    }

    pub fn sup_v(&self) -> f64 {
        self.potential.sup_norm()
    }
}

fn c_bar_of(h: &Hamiltonian, v: &Potential, u0: &InitialData) -> f64 {
    let lip = u0.lip();
    h.h(lip).max(h.h(-lip)) + v.sup_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_bar_examples() {
        let v = Potential::separable(XProfile::Constant(0.5), CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let m = Models::new(HamiltonianKind::Quadratic, v.clone(), InitialData::Clamp, 0.0, None).unwrap();
        assert_eq!(m.c_bar(), 1.5);
        let m0 = Models::new(HamiltonianKind::Quadratic, v, InitialData::Constant(0.0), 0.0, None).unwrap();
        assert_eq!(m0.c_bar(), 1.0);
    }

    #[test]
    fn default_gradient_bound_covers_lipschitz_constant() {
        let m = Models::new(HamiltonianKind::Quadratic, Potential::zero(), InitialData::Clamp, 0.0, None).unwrap();
        assert_eq!(m.hamiltonian.grad_bound(), 1.0);
        let v = Potential::separable(XProfile::Constant(1.0), CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let m = Models::new(HamiltonianKind::Quadratic, v, InitialData::Clamp, 0.0, None).unwrap();
        // C̄ + ||V|| = 0.5 + 2 + 2
        assert!((m.hamiltonian.grad_bound() - 3.0).abs() < 1e-12);
    }
}

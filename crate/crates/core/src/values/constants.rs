//! Explicit constants in the `O(eps)` rate.

use crate::model::{audit_assumptions, Branch, Models, XProfile};
use crate::trajectories::{Query, Window};

/// Constants of the rate `|u^eps - u| <= C_total eps` on the window of a query.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedConstants {
    pub window: Window,
    /// `min a` and `max a` on `I0`; quadratic separable case only.
    pub alpha_t: Option<f64>,
    pub beta_t: Option<f64>,
    /// Bound on `|eps eta(t0 / eps) - c_{i,r}| / eps`.
    pub c_k: f64,
    /// Bound on the averaging error of the momentum integral, over `eps`.
    pub c_f: f64,
    pub c_total: f64,
    /// `2 (Lip(u0) + 4 sqrt(max |V|))`, when `V` does not depend on `x`.
    pub c_uniform: Option<f64>,
    /// True when the constants come from sampled suprema rather than
    /// closed forms.
    pub sample_based: bool,
    /// False when a sampled supremum failed to settle.
    pub certified: bool,
}

/// Rate constants for `models` on the window of `q`.
///
/// Quadratic `H` with `V = a(x) b(y)` uses the closed forms in `min a`,
/// `max a` and `max |a'/a|` on `I0`. Other Hamiltonians use the sampled
/// suprema reported by the assumption audit on `I0`.
pub fn certified_constants(models: &Models, q: &Query) -> CertifiedConstants {
    let window = q.window(models);
    let pot = &models.potential;
    let lip = models.lip();
    let sup_v = models.sup_v();
    let c0 = window.c0;

    if models.hamiltonian.is_quadratic() && pot.shift == 0.0 {
        let (alpha, beta) = pot.a.range(window.lo, window.hi);
        let log_deriv = pot.a.max_log_deriv(window.lo, window.hi);
        let rho = (beta / alpha).sqrt();
        let c_k = rho * (2.0 + 0.5 * c0 * log_deriv);
        let c_f = sup_v.sqrt() * (2.0 + 2.0 * rho + c0 * (3.0 / (2.0 * 2f64.sqrt()) + 0.5 * rho) * log_deriv);
        let c_total = ((2.0 * sup_v).sqrt() + lip).max(2.0 * c_f + c_k * lip);
        let c_uniform = pot
            .is_x_independent()
            .then(|| 2.0 * (lip + 4.0 * sup_v.sqrt()));
        return CertifiedConstants {
            window,
            alpha_t: Some(alpha),
            beta_t: Some(beta),
            c_k,
            c_f,
            c_total,
            c_uniform,
            sample_based: false,
            certified: c_total.is_finite(),
        };
    }

    let ham = &models.hamiltonian;
    let r_grid: Vec<f64> = (0..=40).map(|k| window.r0 * 2f64.powi(-k)).collect();
    let report = audit_assumptions(models, (window.lo, window.hi), &r_grid);
    let stat = |name: &str| report.get(name).map(|c| (c.statistic, c.passed)).unwrap_or((f64::INFINITY, false));
    let (k_tilde, ok_a2) = stat("A2");
    let (f2, ok_a3) = stat("A3");
    let (ratio, ok_a4) = stat("A4");
    let f1 = Branch::BOTH
        .iter()
        .map(|&b| ham.inverse(b, window.r0 + sup_v).abs())
        .fold(0.0, f64::max);
    let p_sup = Branch::BOTH
        .iter()
        .map(|&b| ham.inverse(b, sup_v).abs())
        .fold(0.0, f64::max);
    let c_k = 2.0 * (1.0 + 2.0 * c0 * k_tilde) * ratio;
    let c_f = 2.0 * f1 + c0 * f2 + c_k * f1;
    let c_total = (p_sup + lip).max(c_f + c_k * lip);
    let separable_range = match pot.a {
        XProfile::Constant(_) | XProfile::TwoPlusSin => Some(pot.a.range(window.lo, window.hi)),
    };
    CertifiedConstants {
        window,
        alpha_t: separable_range.map(|r| r.0),
        beta_t: separable_range.map(|r| r.1),
        c_k,
        c_f,
        c_total,
        c_uniform: None,
        sample_based: true,
        certified: ok_a2 && ok_a3 && ok_a4 && c_total.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellProfile, HamiltonianKind, InitialData, Potential};

    fn models(kind: HamiltonianKind, a: XProfile, scale: f64) -> Models {
        let v = Potential::separable(a, CellProfile::Cos2PiMinus1 { scale });
        Models::new(kind, v, InitialData::Clamp, 0.0, None).unwrap()
    }

    #[test]
    fn uniform_constant_for_cell_potentials() {
        let m = models(HamiltonianKind::Quadratic, XProfile::Constant(1.0), 1.0);
        let q = Query::new(0.0, 1.0, 0.1, 1.0, 1.0).unwrap();
        let c = certified_constants(&m, &q);
        let expected = 2.0 * (1.0 + 4.0 * 2f64.sqrt());
        assert!((c.c_uniform.unwrap() - expected).abs() < 1e-12);
        assert_eq!(c.c_k, 2.0);
        assert!((c.c_total - expected).abs() < 1e-12);
    }

    #[test]
    fn x_dependent_amplitude_has_finite_constants() {
        let m = models(HamiltonianKind::Quadratic, XProfile::TwoPlusSin, 1.0);
        let q = Query::new(0.0, 1.0, 0.1, 1.0, 1.0).unwrap();
        let c = certified_constants(&m, &q);
        assert!(c.c_uniform.is_none());
        let (alpha, beta) = (c.alpha_t.unwrap(), c.beta_t.unwrap());
        assert!(alpha >= 1.0 && beta <= 3.0 && alpha < beta);
        assert!(c.c_k > 2.0 && c.c_total.is_finite() && c.certified);
    }

    #[test]
    fn power_hamiltonian_uses_sampled_constants() {
        let m = models(HamiltonianKind::Power { gamma: 4.0 }, XProfile::Constant(1.0), 1.0);
        let q = Query::new(0.0, 1.0, 0.1, 1.0, 1.0).unwrap();
        let c = certified_constants(&m, &q);
        assert!(c.sample_based && c.certified, "{c:?}");
        assert!((c.c_k - 2.0).abs() < 1e-9);
    }
}

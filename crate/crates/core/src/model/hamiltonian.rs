//! Strictly convex momentum Hamiltonians `H(p)`, their Legendre transforms
//! and the branch maps `H_i^{-1}`, `G_i = H' ∘ H_i^{-1}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::roots::{expand_upper, newton_bisect};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user supplied Hamiltonian with its first two derivatives.
#[derive(Clone)]
pub struct CustomHamiltonian {
    pub name: String,
    pub h: ScalarFn,
    pub dh: ScalarFn,
    pub d2h: ScalarFn,
}

impl CustomHamiltonian {
    pub fn new<H, D, D2>(name: impl Into<String>, h: H, dh: D, d2h: D2) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            h: Arc::new(h),
            dh: Arc::new(dh),
            d2h: Arc::new(d2h),
        }
    }

    /// `H(p) = cosh p - 1`.
    pub fn cosh() -> Self {
        Self::new("cosh", |p: f64| p.cosh() - 1.0, f64::sinh, f64::cosh)
    }

    /// `H(p) = |p|^gamma` without the `gamma >= 2` restriction of the power kind.
    pub fn abs_power(gamma: f64) -> Self {
        Self::new(
            format!("abs_power({gamma})"),
            move |p: f64| p.abs().powf(gamma),
            move |p: f64| gamma * p.signum() * p.abs().powf(gamma - 1.0),
            move |p: f64| gamma * (gamma - 1.0) * p.abs().powf(gamma - 2.0),
        )
    }
}

impl fmt::Debug for CustomHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomHamiltonian").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub enum HamiltonianKind {
    /// `H(p) = p^2 / 2`.
    Quadratic,
    /// `H(p) = |p|^gamma`, `gamma >= 2`.
    Power { gamma: f64 },
    Custom(CustomHamiltonian),
}

impl HamiltonianKind {
    pub fn label(&self) -> String {
        match self {
            HamiltonianKind::Quadratic => "quadratic".into(),
            HamiltonianKind::Power { gamma } => format!("power({gamma})"),
            HamiltonianKind::Custom(c) => format!("custom({})", c.name),
        }
    }
}

/// Monotone branch of `H`: `Right` is `p >= 0` (index 1), `Left` is `p <= 0` (index 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Right,
    Left,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Right, Branch::Left];

    pub fn index(self) -> usize {
        match self {
            Branch::Right => 1,
            Branch::Left => 2,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Branch::Right => 1.0,
            Branch::Left => -1.0,
        }
    }
}

const ROOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    kind: HamiltonianKind,
    k0: f64,
    grad_bound: f64,
}

/// Builds a Hamiltonian, rejecting `gamma < 2` power kinds and samples that
/// break strict convexity or the normalization `H(0) = H'(0) = 0`.
pub fn build_hamiltonian(kind: HamiltonianKind, grad_bound: f64) -> Result<Hamiltonian> {
    if let HamiltonianKind::Power { gamma } = kind {
        if !(gamma >= 2.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("power Hamiltonian needs gamma >= 2, got {gamma}")));
        }
    }
    if !(grad_bound > 0.0) || !grad_bound.is_finite() {
        return Err(Error::InvalidParameter(format!("gradient bound must be positive, got {grad_bound}")));
    }
    let mut ham = Hamiltonian {
        kind,
        k0: 0.0,
        grad_bound,
    };
    ham.check_convexity()?;
    ham.k0 = ham.fit_k0()?;
    Ok(ham)
}

impl Hamiltonian {
    /// Builds without the admissibility checks; used when auditing models
    /// that are expected to violate the assumptions.
    pub fn build_unchecked(kind: HamiltonianKind, grad_bound: f64) -> Result<Self> {
        if !(grad_bound > 0.0) || !grad_bound.is_finite() {
            return Err(Error::InvalidParameter(format!("gradient bound must be positive, got {grad_bound}")));
        }
        let mut ham = Hamiltonian {
            kind,
            k0: 0.0,
            grad_bound,
        };
        ham.k0 = ham.fit_k0()?;
        Ok(ham)
    }

    pub fn kind(&self) -> &HamiltonianKind {
        &self.kind
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, HamiltonianKind::Quadratic)
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    pub fn h(&self, p: f64) -> f64 {
        match &self.kind {
            HamiltonianKind::Quadratic => 0.5 * p * p,
            HamiltonianKind::Power { gamma } => p.abs().powf(*gamma),
            HamiltonianKind::Custom(c) => (c.h)(p),
        }
    }

    pub fn dh(&self, p: f64) -> f64 {
        match &self.kind {
            HamiltonianKind::Quadratic => p,
            HamiltonianKind::Power { gamma } => gamma * p.signum() * p.abs().powf(gamma - 1.0),
            HamiltonianKind::Custom(c) => (c.dh)(p),
        }
    }

    pub fn d2h(&self, p: f64) -> f64 {
        match &self.kind {
            HamiltonianKind::Quadratic => 1.0,
            HamiltonianKind::Power { gamma } => gamma * (gamma - 1.0) * p.abs().powf(gamma - 2.0),
            HamiltonianKind::Custom(c) => (c.d2h)(p),
        }
    }

    /// `H_i^{-1}(r)`; negative `r` is clamped to zero.
    pub fn inverse(&self, b: Branch, r: f64) -> f64 {
        let r = r.max(0.0);
        let p = match &self.kind {
            HamiltonianKind::Quadratic => (2.0 * r).sqrt(),
            HamiltonianKind::Power { gamma } => r.powf(1.0 / gamma),
            HamiltonianKind::Custom(_) => return self.numeric_inverse(b, r).unwrap_or(f64::NAN),
        };
        b.sign() * p
    }

    /// `G_i(r) = H'(H_i^{-1}(r))`; negative `r` is clamped to zero.
    pub fn g(&self, b: Branch, r: f64) -> f64 {
        let r = r.max(0.0);
        let speed = match &self.kind {
            HamiltonianKind::Quadratic => (2.0 * r).sqrt(),
            HamiltonianKind::Power { gamma } => gamma * r.powf(1.0 - 1.0 / gamma),
            HamiltonianKind::Custom(_) => return self.dh(self.inverse(b, r)),
        };
        b.sign() * speed
    }

    /// `G_i'(r) = H''(p) / H'(p)` at `p = H_i^{-1}(r)`, `r > 0`.
    pub fn g_prime(&self, b: Branch, r: f64) -> f64 {
        match &self.kind {
            HamiltonianKind::Quadratic => b.sign() / (2.0 * r).sqrt(),
            HamiltonianKind::Power { gamma } => b.sign() * (gamma - 1.0) * r.powf(-1.0 / gamma),
            HamiltonianKind::Custom(_) => {
                let p = self.inverse(b, r);
                self.d2h(p) / self.dh(p)
            }
        }
    }

    /// Checked `H_i^{-1}`.
    pub fn branch_inverse(&self, b: Branch, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("branch inverse needs r >= 0, got {r}")));
        }
        match &self.kind {
            HamiltonianKind::Custom(_) => self.numeric_inverse(b, r),
            _ => Ok(self.inverse(b, r)),
        }
    }

    fn numeric_inverse(&self, b: Branch, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let s = b.sign();
        let hi = expand_upper(|q| self.h(s * q), 1.0, r, 200)?;
        let q = newton_bisect(
            |q| (self.h(s * q) - r, s * self.dh(s * q)),
            0.0,
            hi,
            1e-15,
            ROOT_TOL * r.max(1.0),
        )?;
        Ok(s * q)
    }

    /// `(H')^{-1}(v)`, the momentum conjugate to velocity `v`.
    pub fn momentum(&self, v: f64) -> Result<f64> {
        match &self.kind {
            HamiltonianKind::Quadratic => Ok(v),
            HamiltonianKind::Power { gamma } => Ok(v.signum() * (v.abs() / gamma).powf(1.0 / (gamma - 1.0))),
            HamiltonianKind::Custom(_) => {
                if v == 0.0 {
                    return Ok(0.0);
                }
                let s = v.signum();
                let target = v.abs();
                let hi = expand_upper(|q| s * self.dh(s * q), 1.0, target, 200)
                    .map_err(|_| Error::NoConvergence(format!("Legendre maximizer for v = {v} not bracketed")))?;
                let q = newton_bisect(
                    |q| (s * self.dh(s * q) - target, self.d2h(s * q)),
                    0.0,
                    hi,
                    1e-15,
                    ROOT_TOL * target.max(1.0),
                )?;
                Ok(s * q)
            }
        }
    }

    pub fn legendre(&self) -> Legendre<'_> {
        Legendre { ham: self }
    }

    pub fn branches(&self) -> BranchMaps<'_> {
        BranchMaps { ham: self }
    }

    /// Smallest sampled `K0` making the quadratic growth sandwich hold for
    /// both `H` on `[-2M, 2M]` and `L` on the matching velocity range.
    fn fit_k0(&self) -> Result<f64> {
        if self.is_quadratic() {
            return Ok(0.0);
        }
        let span = 2.0 * self.grad_bound;
        let n = 4000;
        let deviation = |s: f64, f: f64| (f - 0.5 * s * s).abs() * if s.abs() < 1.0 { 1.0 / s.abs() } else { 1.0 };
        let mut k0: f64 = 0.0;
        for k in 0..=n {
            let p = -span + 2.0 * span * k as f64 / n as f64;
            if p != 0.0 {
                k0 = k0.max(deviation(p, self.h(p)));
            }
        }
        let (v_lo, v_hi) = (self.dh(-span), self.dh(span));
        let legendre = self.legendre();
        for k in 0..=n {
            let v = v_lo + (v_hi - v_lo) * k as f64 / n as f64;
            if v != 0.0 {
                k0 = k0.max(deviation(v, legendre.l(v)?));
            }
        }
        Ok(k0)
    }

    fn check_convexity(&self) -> Result<()> {
        let reject = |witness: f64, reason: &str| {
            Err(Error::NonConvex {
                witness,
                reason: reason.to_string(),
            })
        };
        if self.h(0.0).abs() > 1e-12 {
            return reject(0.0, "H(0) != 0");
        }
        if self.dh(0.0).abs() > 1e-12 {
            return reject(0.0, "H'(0) != 0");
        }
        let span = 2.0 * self.grad_bound + 1.0;
        let n = 4000;
        let mut prev_dh = f64::NEG_INFINITY;
        for k in 0..=n {
            let p = -span + 2.0 * span * k as f64 / n as f64;
            let (h, dh, d2h) = (self.h(p), self.dh(p), self.d2h(p));
            if !(h.is_finite() && dh.is_finite()) {
                return reject(p, "non-finite value");
            }
            if h < 0.0 {
                return reject(p, "H(p) < 0");
            }
            if p != 0.0 && !(d2h > 0.0) {
                return reject(p, "H''(p) <= 0");
            }
            if dh <= prev_dh {
                return reject(p, "H' not strictly increasing");
            }
            prev_dh = dh;
        }
        Ok(())
    }
}

/// View of the Legendre transform `L(v) = sup_p (p v - H(p))`.
#[derive(Clone, Copy, Debug)]
pub struct Legendre<'a> {
    ham: &'a Hamiltonian,
}

impl Legendre<'_> {
    pub fn l(&self, v: f64) -> Result<f64> {
        match &self.ham.kind {
            HamiltonianKind::Quadratic => Ok(0.5 * v * v),
            HamiltonianKind::Power { gamma } => Ok((gamma - 1.0) * (v.abs() / gamma).powf(gamma / (gamma - 1.0))),
            HamiltonianKind::Custom(_) => {
                let p = self.ham.momentum(v)?;
                Ok(p * v - self.ham.h(p))
            }
        }
    }

    /// `L'(v) = (H')^{-1}(v)`.
    pub fn dl(&self, v: f64) -> Result<f64> {
        self.ham.momentum(v)
    }

    /// `L''(v) = 1 / H''(L'(v))`.
    pub fn d2l(&self, v: f64) -> Result<f64> {
        Ok(1.0 / self.ham.d2h(self.ham.momentum(v)?))
    }

    /// Inverse of `L'` restricted to `[0, inf)` (`Right`) or `(-inf, 0]` (`Left`),
    /// which is `H'` on the matching half line.
    pub fn dl_inverse(&self, b: Branch, p: f64) -> Result<f64> {
        if p * b.sign() < 0.0 {
            return Err(Error::Domain(format!("momentum {p} is not on branch {}", b.index())));
        }
        Ok(self.ham.dh(p))
    }
}

/// View of `H_i^{-1}` and `G_i`.
#[derive(Clone, Copy, Debug)]
pub struct BranchMaps<'a> {
    ham: &'a Hamiltonian,
}

impl BranchMaps<'_> {
    pub fn h_inv(&self, b: Branch, r: f64) -> Result<f64> {
        self.ham.branch_inverse(b, r)
    }

    pub fn g(&self, b: Branch, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("G_i needs r >= 0, got {r}")));
        }
        Ok(self.ham.g(b, r))
    }

    pub fn g_prime(&self, b: Branch, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("G_i' needs r > 0, got {r}")));
        }
        Ok(self.ham.g_prime(b, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> Hamiltonian {
        build_hamiltonian(HamiltonianKind::Quadratic, 2.0).unwrap()
    }

    #[test]
    fn quadratic_closed_forms() {
        let h = quad();
        assert_eq!(h.g(Branch::Right, 2.0), 2.0);
        assert_eq!(h.inverse(Branch::Right, 2.0), 2.0);
        assert_eq!(h.branch_inverse(Branch::Right, 8.0).unwrap(), 4.0);
        assert_eq!(h.branch_inverse(Branch::Left, 0.0).unwrap(), 0.0);
        assert_eq!(h.legendre().l(3.0).unwrap(), 4.5);
        assert_eq!(h.k0(), 0.0);
    }

    #[test]
    fn power_branch_values() {
        let h = build_hamiltonian(HamiltonianKind::Power { gamma: 4.0 }, 2.0).unwrap();
        assert!((h.g(Branch::Right, 16.0) - 32.0).abs() < 1e-12);
        assert!((h.g(Branch::Left, 16.0) + 32.0).abs() < 1e-12);
        // independent: bisection on p^4 = 81
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(4) < 81.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((h.branch_inverse(Branch::Right, 81.0).unwrap() - lo).abs() < 1e-12);
    }

    #[test]
    fn power_two_legendre_matches_grid_maximization() {
        let h = build_hamiltonian(HamiltonianKind::Power { gamma: 2.0 }, 2.0).unwrap();
        let grid_max = (0..=200_000)
            .map(|k| -5.0 + 10.0 * k as f64 / 200_000.0)
            .map(|p| 2.0 * p - p * p)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((h.legendre().l(2.0).unwrap() - grid_max).abs() < 1e-8);
        assert!((h.legendre().l(2.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cosh_legendre_matches_closed_form() {
        let h = build_hamiltonian(HamiltonianKind::Custom(CustomHamiltonian::cosh()), 2.0).unwrap();
        let lg = h.legendre();
        assert_eq!(lg.l(0.0).unwrap(), 0.0);
        for &v in &[-3.0, -0.5, 0.1, 1.0, 4.0] {
            let exact = v * f64::asinh(v) - (1.0 + v * v).sqrt() + 1.0;
            assert!((lg.l(v).unwrap() - exact).abs() < 1e-10, "v = {v}");
        }
        // H_1^{-1}(r) = acosh(1 + r), G_1(r) = sqrt((1+r)^2 - 1)
        for &r in &[1e-6, 0.3, 2.0, 10.0] {
            let p = h.branch_inverse(Branch::Right, r).unwrap();
            assert!((p - (1.0 + r).acosh()).abs() < 1e-9 * p.max(1e-3));
            let g = h.g(Branch::Left, r);
            assert!((g + ((1.0 + r) * (1.0 + r) - 1.0).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn gamma_below_two_rejected() {
        assert!(matches!(
            build_hamiltonian(HamiltonianKind::Power { gamma: 1.5 }, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn nonconvex_custom_rejected_with_witness() {
        let wavy = CustomHamiltonian::new(
            "wavy",
            |p: f64| 0.5 * p * p + 0.4 * (1.0 - (2.0 * p).cos()) - 0.8 * p * p,
            |p: f64| p + 0.8 * (2.0 * p).sin() - 1.6 * p,
            |p: f64| 1.0 + 1.6 * (2.0 * p).cos() - 1.6,
        );
        match build_hamiltonian(HamiltonianKind::Custom(wavy), 1.0) {
            Err(Error::NonConvex { witness, .. }) => assert!(witness.is_finite()),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn negative_energy_is_domain_error() {
        assert!(matches!(quad().branch_inverse(Branch::Right, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fenchel_young_equality_on_samples() {
        for kind in [
            HamiltonianKind::Quadratic,
            HamiltonianKind::Power { gamma: 3.0 },
            HamiltonianKind::Custom(CustomHamiltonian::cosh()),
        ] {
            let h = build_hamiltonian(kind, 2.0).unwrap();
            let m = h.grad_bound();
            for k in 0..200 {
                let p = -m + 2.0 * m * (k as f64 + 0.5) / 200.0;
                let v = h.dh(p);
                let gap = p * v - h.h(p) - h.legendre().l(v).unwrap();
                assert!(gap.abs() < 1e-8, "{} at p = {p}: {gap}", h.kind().label());
            }
        }
    }

    #[test]
    fn growth_sandwich_holds_after_fit() {
        for kind in [HamiltonianKind::Power { gamma: 3.0 }, HamiltonianKind::Custom(CustomHamiltonian::cosh())] {
            let h = build_hamiltonian(kind, 1.5).unwrap();
            let k0 = h.k0();
            for k in 0..=999 {
                let p = -3.0 + 6.0 * k as f64 / 999.0;
                let q = 0.5 * p * p;
                let lower = (q - k0).max(q - k0 * p.abs());
                let upper = (q + k0).min(q + k0 * p.abs());
                assert!(lower - 1e-9 <= h.h(p) && h.h(p) <= upper + 1e-9, "p = {p}");
            }
        }
    }

    #[test]
    fn inverse_derivative_is_reciprocal_speed() {
        let h = build_hamiltonian(HamiltonianKind::Custom(CustomHamiltonian::cosh()), 2.0).unwrap();
        for &x in &[0.1, 1.0, 3.0] {
            let d = 1e-5;
            let fd = (h.inverse(Branch::Right, x + d) - h.inverse(Branch::Right, x - d)) / (2.0 * d);
            assert!((fd - 1.0 / h.g(Branch::Right, x)).abs() < 1e-6);
        }
    }
}

//! Separable periodic potentials `V(x, y) = a(x) b(y) + shift`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Slow profile `a(x) > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum XProfile {
    Constant(f64),
    /// `a(x) = 2 + sin x`.
    TwoPlusSin,
}

impl XProfile {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            XProfile::Constant(c) => *c,
            XProfile::TwoPlusSin => 2.0 + x.sin(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            XProfile::Constant(_) => 0.0,
            XProfile::TwoPlusSin => x.cos(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, XProfile::Constant(_))
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            XProfile::Constant(c) => c.abs(),
            XProfile::TwoPlusSin => 3.0,
        }
    }

    /// Points of `[lo, hi]` where `a` or `a'/a` can attain an extremum.
    fn candidates(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        if let XProfile::TwoPlusSin = self {
            // a' = 0 at pi/2 + k pi; (a'/a)' = 0 where sin x = -1/2
            for base in [0.5 * PI, -PI / 6.0, 7.0 * PI / 6.0] {
                let period = if base == 0.5 * PI { PI } else { TWO_PI };
                let mut k = ((lo - base) / period).floor();
                loop {
                    let x = base + k * period;
                    if x > hi {
                        break;
                    }
                    if x >= lo {
                        pts.push(x);
                    }
                    k += 1.0;
                }
            }
        }
        pts
    }

    /// `(min a, max a)` over `[lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> (f64, f64) {
        self.candidates(lo, hi)
            .into_iter()
            .map(|x| self.value(x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(m, mx), v| (m.min(v), mx.max(v)))
    }

    /// `max |a'/a|` over `[lo, hi]`.
    pub fn max_log_deriv(&self, lo: f64, hi: f64) -> f64 {
        self.candidates(lo, hi)
            .into_iter()
            .map(|x| (self.deriv(x) / self.value(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Cell profile `b(y)`, 1-periodic with `max b = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum CellProfile {
    Zero,
    /// `scale * (cos 2 pi y - 1)`.
    Cos2PiMinus1 { scale: f64 },
    /// `-min(1, 6 dist(y, 1/2 + Z))`.
    TentProp43,
    /// Linear interpolation of samples at `y = k / n`, `k = 0..n`.
    Table(Vec<f64>),
}

fn frac(y: f64) -> f64 {
    let f = y - y.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

impl CellProfile {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            CellProfile::Zero => 0.0,
            CellProfile::Cos2PiMinus1 { scale } => scale * ((TWO_PI * y).cos() - 1.0),
            CellProfile::TentProp43 => {
                let f = frac(y - 0.5);
                let d = f.min(1.0 - f);
                -(6.0 * d).min(1.0)
            }
            CellProfile::Table(vals) => {
                let n = vals.len() as f64;
                let s = frac(y) * n;
                let k = (s.floor() as usize).min(vals.len() - 1);
                let t = s - k as f64;
                let next = vals[(k + 1) % vals.len()];
                vals[k] * (1.0 - t) + next * t
            }
        }
    }

    pub fn deriv(&self, y: f64) -> f64 {
        match self {
            CellProfile::Zero => 0.0,
            CellProfile::Cos2PiMinus1 { scale } => -scale * TWO_PI * (TWO_PI * y).sin(),
            CellProfile::TentProp43 => {
                let f = frac(y - 0.5);
                let (d, dd) = if f < 0.5 { (f, 1.0) } else { (1.0 - f, -1.0) };
                if 6.0 * d < 1.0 {
                    -6.0 * dd
                } else {
                    0.0
                }
            }
            CellProfile::Table(vals) => {
                let n = vals.len();
                let k = ((frac(y) * n as f64).floor() as usize).min(n - 1);
                (vals[(k + 1) % n] - vals[k]) * n as f64
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            CellProfile::Zero => 0.0,
            CellProfile::Cos2PiMinus1 { scale } => 2.0 * scale.abs(),
            CellProfile::TentProp43 => 1.0,
            CellProfile::Table(vals) => vals.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            CellProfile::Zero | CellProfile::TentProp43 => 0.0,
            CellProfile::Cos2PiMinus1 { scale } => {
                if *scale >= 0.0 {
                    0.0
                } else {
                    -2.0 * scale
                }
            }
            CellProfile::Table(vals) => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Zeros of `b` in `[0, 1)`. Empty for `Zero`, which vanishes everywhere.
    pub fn zeros(&self) -> Vec<f64> {
        match self {
            CellProfile::Zero => Vec::new(),
            CellProfile::Cos2PiMinus1 { .. } => vec![0.0],
            CellProfile::TentProp43 => vec![0.5],
            CellProfile::Table(vals) => {
                let n = vals.len() as f64;
                vals.iter()
                    .enumerate()
                    .filter(|(_, v)| **v == 0.0)
                    .map(|(k, _)| k as f64 / n)
                    .collect()
            }
        }
    }

    /// Kinks and zeros of `b` in `[0, 1)`, sorted.
    pub fn breaks(&self) -> Vec<f64> {
        let mut pts = match self {
            CellProfile::Zero => Vec::new(),
            CellProfile::Cos2PiMinus1 { .. } => vec![0.0, 0.5],
            CellProfile::TentProp43 => vec![1.0 / 3.0, 0.5, 2.0 / 3.0],
            CellProfile::Table(vals) => (0..vals.len()).map(|k| k as f64 / vals.len() as f64).collect(),
        };
        pts.extend(self.zeros());
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts
    }

    /// Whether `b` is twice continuously differentiable.
    pub fn is_smooth(&self) -> bool {
        matches!(self, CellProfile::Zero | CellProfile::Cos2PiMinus1 { .. })
    }

    pub fn label(&self) -> String {
        match self {
            CellProfile::Zero => "zero".into(),
            CellProfile::Cos2PiMinus1 { scale } => format!("cos2pi_minus1(scale={scale})"),
            CellProfile::TentProp43 => "tent_prop43".into(),
            CellProfile::Table(v) => format!("table({} samples)", v.len()),
        }
    }
}

/// `V(x, y) = a(x) b(y) + shift`. A nonzero `shift` is kept as part of `V`
/// (not folded into `C0`) so that a broken zero line stays observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub a: XProfile,
    pub b: CellProfile,
    pub shift: f64,
}

impl Potential {
    pub fn new(a: XProfile, b: CellProfile) -> Result<Self> {
        if let XProfile::Constant(c) = a {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!("a(x) must be positive, got constant {c}")));
            }
        }
        if let CellProfile::Table(v) = &b {
            if v.len() < 2 || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("b table needs at least two finite samples".into()));
            }
        }
        Ok(Self { a, b, shift: 0.0 })
    }

    pub fn zero() -> Self {
        Self {
            a: XProfile::Constant(1.0),
            b: CellProfile::Zero,
            shift: 0.0,
        }
    }

    pub fn separable(a: XProfile, b: CellProfile) -> Self {
        Self::new(a, b).expect("valid separable potential")
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        self.a.value(x) * self.b.value(y) + self.shift
    }

    pub fn vx(&self, x: f64, y: f64) -> f64 {
        self.a.deriv(x) * self.b.value(y)
    }

    pub fn vy(&self, x: f64, y: f64) -> f64 {
        self.a.value(x) * self.b.deriv(y)
    }

    /// `||V||_inf` over `R x T`.
    pub fn sup_norm(&self) -> f64 {
        if self.is_zero() {
            return self.shift.abs();
        }
        let base = self.a.sup_abs() * self.b.max_abs();
        if self.shift == 0.0 {
            base
        } else {
            (base + self.shift.abs()).max((self.a.sup_abs() * self.b.max_value() + self.shift).abs())
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.b, CellProfile::Zero)
    }

    pub fn is_x_independent(&self) -> bool {
        self.a.is_constant() || self.is_zero()
    }

    /// Kinks and zeros of `y -> V(x, y)` in `[0, 1)`.
    pub fn cell_breaks(&self) -> Vec<f64> {
        self.b.breaks()
    }

    /// Zeros of `y -> V(x, y)` in `[0, 1)`, shared by every `x`.
    /// `None` when `V` vanishes identically.
    pub fn zero_line(&self) -> Option<Vec<f64>> {
        if self.shift != 0.0 {
            return Some(Vec::new());
        }
        if self.is_zero() {
            None
        } else {
            Some(self.b.zeros())
        }
    }

    /// Smallest zero `>= y` and largest zero `<= y` of `V(x, .)`.
    pub fn bracketing_zeros(&self, y: f64) -> Result<(f64, f64)> {
        let zeros = match self.zero_line() {
            None => return Ok((y, y)),
            Some(z) => z,
        };
        if zeros.is_empty() {
            return Err(Error::ZeroLineMissing(format!(
                "V(x, .) has no zero in the cell (max sampled V = {:.6})",
                self.a.sup_abs() * self.b.max_value() + self.shift
            )));
        }
        let cell = y.floor();
        let mut upper = f64::INFINITY;
        let mut lower = f64::NEG_INFINITY;
        for &z in &zeros {
            for shift in [-1.0, 0.0, 1.0] {
                let c = cell + shift + z;
                if c >= y {
                    upper = upper.min(c);
                }
                if c <= y {
                    lower = lower.max(c);
                }
            }
        }
        Ok((upper, lower))
    }

    pub fn label(&self) -> String {
        let a = match self.a {
            XProfile::Constant(c) => format!("{c}"),
            XProfile::TwoPlusSin => "(2+sin x)".into(),
        };
        if self.shift == 0.0 {
            format!("{a}*{}", self.b.label())
        } else {
            format!("{a}*{} + {}", self.b.label(), self.shift)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_shape() {
        let b = CellProfile::TentProp43;
        assert_eq!(b.value(0.5), 0.0);
        assert_eq!(b.value(0.0), -1.0);
        assert_eq!(b.value(1.0 / 3.0 - 0.01), -1.0);
        assert!((b.value(0.55) + 0.3).abs() < 1e-12);
        assert!((b.value(0.45) + 0.3).abs() < 1e-12);
        assert_eq!(b.deriv(0.45), 6.0);
        assert_eq!(b.deriv(0.55), -6.0);
        assert_eq!(b.deriv(0.9), 0.0);
    }

    #[test]
    fn periodicity() {
        let p = Potential::separable(XProfile::TwoPlusSin, CellProfile::Table(vec![0.0, -0.5, -2.0, -0.25]));
        for k in 0..50 {
            let y = -3.0 + 0.137 * k as f64;
            assert!((p.v(0.3, y) - p.v(0.3, y + 1.0)).abs() < 1e-12);
            assert!((p.v(0.3, y) - p.v(0.3, y - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let p = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
        let d = 1e-6;
        for &(x, y) in &[(0.3, 0.1), (-1.0, 0.77), (2.0, 0.4)] {
            let fx = (p.v(x + d, y) - p.v(x - d, y)) / (2.0 * d);
            let fy = (p.v(x, y + d) - p.v(x, y - d)) / (2.0 * d);
            assert!((fx - p.vx(x, y)).abs() < 1e-7);
            assert!((fy - p.vy(x, y)).abs() < 1e-6);
        }
    }

    #[test]
    fn bracketing_zeros_for_cosine() {
        let p = Potential::separable(XProfile::Constant(1.0), CellProfile::Cos2PiMinus1 { scale: 1.0 });
        assert_eq!(p.bracketing_zeros(0.25).unwrap(), (1.0, 0.0));
        assert_eq!(p.bracketing_zeros(-0.25).unwrap(), (0.0, -1.0));
        assert_eq!(p.bracketing_zeros(2.0).unwrap(), (2.0, 2.0));
    }

    #[test]
    fn shifted_potential_has_no_zero_line() {
        let p = Potential::separable(XProfile::Constant(1.0), CellProfile::Cos2PiMinus1 { scale: 1.0 }).with_shift(-0.5);
        assert!(matches!(p.bracketing_zeros(0.3), Err(Error::ZeroLineMissing(_))));
    }

    #[test]
    fn profile_range_and_log_derivative() {
        let a = XProfile::TwoPlusSin;
        let (lo, hi) = a.range(-1.0, 4.0);
        assert!((hi - 3.0).abs() < 1e-15);
        assert!((lo - (2.0 + (-1f64).sin())).abs() < 1e-15);
        // max |cos/(2+sin)| is 1/sqrt(3), attained at sin x = -1/2
        let m = a.max_log_deriv(-2.0, 5.0);
        assert!((m - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let brute = (0..=100_000)
            .map(|k| -2.0 + 7.0 * k as f64 / 100_000.0)
            .map(|x| (x.cos() / (2.0 + x.sin())).abs())
            .fold(0.0, f64::max);
        assert!(m >= brute - 1e-12);
    }

    #[test]
    fn sup_norms() {
        let p = Potential::separable(XProfile::TwoPlusSin, CellProfile::Cos2PiMinus1 { scale: 1.0 });
        assert_eq!(p.sup_norm(), 6.0);
        let q = Potential::separable(XProfile::Constant(1.0), CellProfile::Cos2PiMinus1 { scale: 1.0 }).with_shift(-0.5);
        assert_eq!(q.sup_norm(), 2.5);
    }
}

//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The integrand may be vector valued (`[f64; N]`); all components share the
//! same nodes and the interval with the largest component error is split
//! first. Endpoints are never evaluated, so integrable endpoint spikes are
//! acceptable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate_vec`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }
}

/// Integral estimate together with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub evaluations: usize,
}

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl<const N: usize> Eq for Segment<N> {}

impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn check_finite<const N: usize>(x: f64, v: &[f64; N]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { x })
    }
}

fn kronrod<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Result<Segment<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    check_finite(center, &fc)?;
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for c in 0..N {
        kron[c] = fc[c] * WGK[7];
        gauss[c] = fc[c] * WG[3];
    }
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (xl, xr) = (center - dx, center + dx);
        let fl = f(xl);
        check_finite(xl, &fl)?;
        let fr = f(xr);
        check_finite(xr, &fr)?;
        for c in 0..N {
            let s = fl[c] + fr[c];
            kron[c] += w * s;
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * s;
            }
        }
    }
    let mut error: f64 = 0.0;
    let mut value = [0.0; N];
    for c in 0..N {
        value[c] = kron[c] * half;
        let diff = ((kron[c] - gauss[c]) * half).abs();
        // QUADPACK-style sharpening of the raw Gauss/Kronrod difference.
        let scaled = if diff > 0.0 {
            let ratio = (200.0 * diff / (value[c].abs() + f64::MIN_POSITIVE)).powf(1.5);
            diff * ratio.min(1.0)
        } else {
            0.0
        };
        error = error.max(scaled.max(diff * 1e-3)).max(50.0 * f64::EPSILON * value[c].abs());
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates a vector-valued function over `[a, b]` (`a > b` flips the sign).
pub fn integrate_vec<const N: usize, F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("non-finite integration limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate {
            value: [0.0; N],
            error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let first = kronrod(&mut f, lo, hi)?;
    let mut evaluations = 15;
    let mut total = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let tolerance = |total: &[f64; N]| {
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        opts.abs_tol.max(opts.rel_tol * scale)
    };

    while total_error > tolerance(&total) && heap.len() < opts.max_intervals {
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let left = kronrod(&mut f, worst.a, mid)?;
        let right = kronrod(&mut f, mid, worst.b)?;
        evaluations += 30;
        for c in 0..N {
            total[c] += left.value[c] + right.value[c] - worst.value[c];
        }
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    let mut value = [0.0; N];
    let mut error = 0.0;
    for seg in heap.iter() {
        for c in 0..N {
            value[c] += seg.value[c];
        }
        error += seg.error;
    }
    for v in value.iter_mut() {
        *v *= sign;
    }
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x| [f(x)], a, b, opts).map(|e| e.value[0])
}

/// Integrates over `[a, b]` after splitting at the interior `breaks`.
pub fn integrate_vec_with_breaks<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<[f64; N]>
where
    F: FnMut(f64) -> [f64; N],
{
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    points.push(lo);
    points.extend(breaks.iter().copied().filter(|&p| p > lo && p < hi));
    points.push(hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut total = [0.0; N];
    for w in points.windows(2) {
        let est = integrate_vec(&mut f, w[0], w[1], opts)?;
        for c in 0..N {
            total[c] += est.value[c];
        }
    }
    for v in total.iter_mut() {
        *v *= sign;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - (8.0 + 1.0 - 1.5 + 6.0)).abs() < 1e-13, "{v}");
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let o = QuadOptions::default();
        let a = integrate(f64::exp, 0.0, 1.0, &o).unwrap();
        let b = integrate(f64::exp, 1.0, 0.0, &o).unwrap();
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let o = QuadOptions::default().with_abs_tol(1e-10);
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &o).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn sharp_peak_with_break() {
        // ∫_{-1}^{1} 1/sqrt(r + x^2) dx = 2 asinh(1/sqrt(r))
        let r: f64 = 1e-8;
        let o = QuadOptions::default().with_abs_tol(1e-11);
        let v = integrate_vec_with_breaks(|x| [1.0 / (r + x * x).sqrt()], -1.0, 1.0, &[0.0], &o).unwrap()[0];
        let exact = 2.0 * (1.0 / r.sqrt()).asinh();
        assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
    }

    #[test]
    fn non_finite_reports_location() {
        let err = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &QuadOptions::default()).unwrap_err();
        match err {
            Error::NonFinite { x } => assert!(x > 0.5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn vector_components_share_nodes() {
        let est = integrate_vec(|x| [x.sin(), x.cos()], 0.0, std::f64::consts::PI, &QuadOptions::default()).unwrap();
        assert!((est.value[0] - 2.0).abs() < 1e-13);
        assert!(est.value[1].abs() < 1e-13);
    }
}

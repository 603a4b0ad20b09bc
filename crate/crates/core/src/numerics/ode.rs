//! Classical RK4 with step-doubling error control for autonomous systems.

use crate::error::{Error, Result};

/// Step-size policy for [`rk4_adaptive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub h_max: f64,
    pub h_min: f64,
    /// Local error bound per accepted step (max norm).
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeSample<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

/// Returned by the event hook after each accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

fn rk4_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end`.
///
/// After every accepted step `event(prev, next)` may adjust `next` in place
/// (for clamping) and request a stop; the adjusted state is recorded.
pub fn rk4_adaptive<const N: usize, F, E>(
    f: F,
    y0: [f64; N],
    t_end: f64,
    ctl: &StepControl,
    mut event: E,
) -> Result<Vec<OdeSample<N>>>
where
    F: Fn(&[f64; N]) -> [f64; N],
    E: FnMut(&[f64; N], &mut [f64; N]) -> Flow,
{
    let mut samples = vec![OdeSample { t: 0.0, y: y0 }];
    if t_end <= 0.0 {
        return Ok(samples);
    }
    let mut t = 0.0;
    let mut y = y0;
    let mut h = ctl.h_max.min(t_end);
    while t < t_end {
        let h_try = h.min(t_end - t);
        let full = rk4_step(&f, &y, h_try);
        let mid = rk4_step(&f, &y, 0.5 * h_try);
        let half = rk4_step(&f, &mid, 0.5 * h_try);
        let mut err: f64 = 0.0;
        for i in 0..N {
            err = err.max((half[i] - full[i]).abs() / 15.0);
        }
        if !err.is_finite() {
            return Err(Error::NonFinite { x: t });
        }
        if err > ctl.tol && h_try > ctl.h_min {
            h = (h_try * (0.9 * (ctl.tol / err).powf(0.2)).max(0.1)).max(ctl.h_min);
            continue;
        }
        let mut next = half;
        for i in 0..N {
            next[i] += (half[i] - full[i]) / 15.0;
        }
        // Snap the final step onto t_end exactly.
        t = if t_end - t <= h_try { t_end } else { t + h_try };
        let flow = event(&y, &mut next);
        y = next;
        samples.push(OdeSample { t, y });
        if flow == Flow::Stop {
            break;
        }
        let grow = if err > 0.0 { (0.9 * (ctl.tol / err).powf(0.2)).clamp(0.2, 2.0) } else { 2.0 };
        h = (h_try * grow).min(ctl.h_max).max(ctl.h_min);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CTL: StepControl = StepControl {
        h_max: 0.1,
        h_min: 1e-12,
        tol: 1e-12,
    };

    #[test]
    fn exponential_decay() {
        let s = rk4_adaptive(|y: &[f64; 1]| [-y[0]], [1.0], 3.0, &CTL, |_, _| Flow::Continue).unwrap();
        let last = s.last().unwrap();
        assert_eq!(last.t, 3.0);
        assert!((last.y[0] - (-3f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let s = rk4_adaptive(|y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], 20.0, &CTL, |_, _| Flow::Continue).unwrap();
        for p in &s {
            assert!((p.y[0] * p.y[0] + p.y[1] * p.y[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn event_can_clamp_and_stop() {
        let s = rk4_adaptive(
            |_: &[f64; 1]| [1.0],
            [0.0],
            10.0,
            &CTL,
            |_, next| {
                if next[0] >= 0.55 {
                    next[0] = 0.55;
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            },
        )
        .unwrap();
        assert_eq!(s.last().unwrap().y[0], 0.55);
        assert!(s.last().unwrap().t < 1.0);
    }
}

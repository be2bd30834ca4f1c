//! Dormand–Prince 5(4) with an optional extra error term, used for the
//! geodesic flow where step control also watches first integrals.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rtol: 1e-11,
            atol: 1e-13,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// The observer asked to stop before `t_end`.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, ks: &[[f64; N]], coeffs: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (k, a) in ks.iter().zip(coeffs) {
        if *a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// A step is accepted when the embedded error, measured in the usual
/// `atol + rtol|y|` norm, and `extra(h, y_old, y_new)` are both at most 1.
/// A failed evaluation of `f` inside a step is treated as a rejection.
/// `observer` sees every accepted step and may stop the integration.
pub fn integrate<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    extra: impl Fn(f64, &[f64; N], &[f64; N]) -> f64,
    mut observer: impl FnMut(f64, &[f64; N]) -> ControlFlow<()>,
) -> Result<Outcome<N>> {
    if !t_end.is_finite() || !t0.is_finite() {
        return Err(Error::domain("integration bounds must be finite"));
    }
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = opts.h_init.min(opts.h_max).min((t_end - t0).abs().max(opts.h_min));
    let mut out = Outcome {
        t,
        y,
        accepted: 0,
        rejected: 0,
        stopped: false,
    };
    while dir * (t_end - t) > 0.0 {
        if out.accepted + out.rejected >= opts.max_steps {
            return Err(Error::Convergence {
                what: format!("ODE integration stalled at t = {t}"),
                n_max: opts.max_steps,
                tail_bound: h,
            });
        }
        let last = h >= (t_end - t).abs();
        let step = if last { t_end - t } else { dir * h };
        let attempt = (|| -> Result<([f64; N], [f64; N], f64)> {
            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            for s in 1..7 {
                k[s] = f(t + C[s] * step, &axpy(&y, step, &k[..s], &A[s][..s]))?;
            }
            let y_new = axpy(&y, step, &k[..6], &A[6]);
            let mut err: f64 = 0.0;
            for i in 0..N {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * step;
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            Ok((y_new, k[6], err))
        })();
        let (y_new, k7, err) = match attempt {
            Ok((y_new, k7, err)) => {
                let err = err.max(extra(step, &y, &y_new));
                (y_new, k7, if err.is_finite() { err } else { f64::INFINITY })
            }
            Err(_) => (y, k1, f64::INFINITY),
        };
        if err <= 1.0 {
            t = if last { t_end } else { t + step };
            y = y_new;
            k1 = k7;
            out.accepted += 1;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !last {
                h = (h * factor).min(opts.h_max);
            }
            if observer(t, &y).is_break() {
                out.stopped = true;
                break;
            }
        } else {
            out.rejected += 1;
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h = step.abs() * factor;
            if h < opts.h_min {
                return Err(Error::Convergence {
                    what: format!("ODE step size underflow at t = {t}"),
                    n_max: out.accepted,
                    tail_bound: h,
                });
            }
        }
    }
    out.t = t;
    out.y = y;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let out = integrate(
            |_, y: &[f64; 1]| Ok([-y[0]]),
            0.0,
            [1.0],
            5.0,
            &Options::default(),
            |_, _, _| 0.0,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert_eq!(out.t, 5.0);
        assert!((out.y[0] - (-5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backwards_and_energy() {
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let fwd = integrate(
            f,
            0.0,
            [1.0, 0.0],
            20.0,
            &Options::default(),
            |_, _, _| 0.0,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert!((fwd.y[0] - 20f64.cos()).abs() < 1e-9);
        let back = integrate(
            f,
            20.0,
            fwd.y,
            0.0,
            &Options::default(),
            |_, _, _| 0.0,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert!((back.y[0] - 1.0).abs() < 1e-9 && back.y[1].abs() < 1e-9);
    }

    #[test]
    fn extra_error_shrinks_steps() {
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let energy = |y: &[f64; 2]| y[0] * y[0] + y[1] * y[1];
        let loose = Options {
            rtol: 1e-6,
            atol: 1e-6,
            ..Options::default()
        };
        let plain = integrate(
            f,
            0.0,
            [1.0, 0.0],
            10.0,
            &loose,
            |_, _, _| 0.0,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        let guarded = integrate(
            f,
            0.0,
            [1.0, 0.0],
            10.0,
            &loose,
            |_, a, b| (energy(b) - energy(a)).abs() / 1e-13,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert!(guarded.accepted > plain.accepted);
        assert!((energy(&guarded.y) - 1.0).abs() < (energy(&plain.y) - 1.0).abs());
    }

    #[test]
    fn observer_stops_and_failures_reject() {
        let out = integrate(
            |_, y: &[f64; 1]| {
                if y[0] > 2.0 {
                    Err(Error::domain("outside"))
                } else {
                    Ok([1.0])
                }
            },
            0.0,
            [0.0],
            10.0,
            &Options::default(),
            |_, _, _| 0.0,
            |_, y| {
                if y[0] > 1.5 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
        .unwrap();
        assert!(out.stopped && out.y[0] > 1.5 && out.y[0] <= 2.0);
    }
}

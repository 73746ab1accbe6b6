//! Dormand-Prince 5(4) embedded Runge-Kutta with adaptive step control.

use nalgebra::SVector;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 5_000_000;

/// Tolerances for the adaptive integrator. Absolute and relative tolerance
/// share one value; the local error target is a tenth of the requested
/// accuracy so that accumulated error over a few TU stays near `tol`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Self { rel: 0.1 * tol, abs: 0.1 * tol }
    }
}

/// Stateful stepper that remembers its last accepted step size, so a chain of
/// short integrations (dense sampling) does not restart step selection.
pub struct DormandPrince<const N: usize, F> {
    rhs: F,
    tol: Tolerance,
    step: Option<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<const N: usize, F> DormandPrince<N, F>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    pub fn new(rhs: F, tol: Tolerance) -> Self {
        Self {
            rhs,
            tol,
            step: None,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Use `h` as the first trial step of the next integration.
    pub fn seed_step(&mut self, h: f64) {
        if h > 0.0 {
            self.step = Some(h);
        }
    }

    pub fn last_step(&self) -> Option<f64> {
        self.step
    }

    fn initial_step(&mut self, t0: f64, y0: &SVector<f64, N>, f0: &SVector<f64, N>, dir: f64) -> Result<f64> {
        // Hairer, Norsett & Wanner starting-step heuristic.
        let scale = |y: &SVector<f64, N>, i: usize| self.tol.abs + self.tol.rel * y[i].abs();
        let d0 = rms((0..N).map(|i| y0[i] / scale(y0, i)));
        let d1 = rms((0..N).map(|i| f0[i] / scale(y0, i)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = y0 + f0 * (h0 * dir);
        let f1 = (self.rhs)(t0 + h0 * dir, &y1)?;
        let d2 = rms((0..N).map(|i| (f1[i] - f0[i]) / scale(y0, i))) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        Ok((100.0 * h0).min(h1))
    }

    /// Integrate from `t0` to `t1` (either direction).
    pub fn integrate(&mut self, t0: f64, y0: SVector<f64, N>, t1: f64) -> Result<SVector<f64, N>> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = (self.rhs)(t, &y)?;
        let mut h = match self.step {
            Some(h) => h,
            None => self.initial_step(t0, &y0, &k1, dir)?,
        };
        let mut steps = 0usize;
        // Kahan compensation for the state accumulation
        let mut carry = SVector::<f64, N>::zeros();

        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let hs = h_try * dir;

            let k2 = (self.rhs)(t + C2 * hs, &(y + k1 * (A21 * hs)))?;
            let k3 = (self.rhs)(t + C3 * hs, &(y + (k1 * A31 + k2 * A32) * hs))?;
            let k4 = (self.rhs)(t + C4 * hs, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * hs))?;
            let k5 = (self.rhs)(
                t + C5 * hs,
                &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs),
            )?;
            let k6 = (self.rhs)(
                t + hs,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs),
            )?;
            let increment = (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * hs;
            let y_new = y + increment;
            let k7 = (self.rhs)(t + hs, &y_new)?;
            let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;

            let err = rms((0..N).map(|i| {
                let sc = self.tol.abs + self.tol.rel * y[i].abs().max(y_new[i].abs());
                err_vec[i] / sc
            }));

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };

            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                let corrected = increment - carry;
                let sum = y + corrected;
                carry = (sum - y) - corrected;
                y = sum;
                k1 = k7;
                self.accepted += 1;
                // keep the natural step size rather than the truncated final one
                if !last || factor < 1.0 {
                    h = h_try * factor;
                }
                if last {
                    break;
                }
            } else {
                self.rejected += 1;
                h = h_try * factor.min(1.0);
            }

            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "maximum number of steps exceeded".into(),
                });
            }
            if h <= f64::EPSILON * t.abs().max(1.0) * 4.0 {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "non-finite state".into(),
                });
            }
        }
        self.step = Some(h);
        Ok(y)
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v * v;
        count += 1;
    }
    (sum / count as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let rhs = |_t: f64, y: &SVector<f64, 1>| Ok(-*y);
        let mut dp = DormandPrince::new(rhs, Tolerance::new(1e-12));
        let y = dp.integrate(0.0, SVector::<f64, 1>::new(1.0), 3.0).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backward_and_forward() {
        let rhs = |_t: f64, y: &SVector<f64, 2>| Ok(SVector::<f64, 2>::new(y[1], -y[0]));
        let mut dp = DormandPrince::new(rhs, Tolerance::new(1e-12));
        let y0 = SVector::<f64, 2>::new(1.0, 0.0);
        let y1 = dp.integrate(0.0, y0, std::f64::consts::TAU).unwrap();
        assert!((y1 - y0).amax() < 1e-10);
        let back = dp.integrate(0.0, y0, -1.0).unwrap();
        assert!((back[0] - 1.0f64.cos()).abs() < 1e-11);
        assert!((back[1] - 1.0f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn zero_span_is_identity() {
        let rhs = |_t: f64, y: &SVector<f64, 1>| Ok(*y);
        let mut dp = DormandPrince::new(rhs, Tolerance::new(1e-9));
        let y = dp.integrate(2.0, SVector::<f64, 1>::new(4.0), 2.0).unwrap();
        assert_eq!(y[0], 4.0);
        assert_eq!(dp.accepted, 0);
    }
}

//! Adaptive Dormand–Prince 5(4) integration of complex linear systems.
//!
//! Steps are clipped so that every requested output abscissa is hit exactly;
//! the accepted step size carries over between output intervals.

use crate::error::{Error, Result};
use crate::types::Complex;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

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
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 5_000_000;

/// Integrates `y' = f(x, y)` from `xs[0]` through the monotone sequence `xs`
/// (increasing or decreasing) starting at `y0`, returning `y` at every `xs[k]`.
/// `f(x, y, dy)` writes the derivative into `dy`.
pub fn integrate<F>(f: F, y0: &[Complex], xs: &[f64], tol: Tolerance) -> Result<Vec<Vec<Complex>>>
where
    F: Fn(f64, &[Complex], &mut [Complex]),
{
    let n = y0.len();
    let mut out = Vec::with_capacity(xs.len());
    out.push(y0.to_vec());
    if xs.len() < 2 {
        return Ok(out);
    }
    let dir = if xs[xs.len() - 1] >= xs[0] { 1.0 } else { -1.0 };
    let span = (xs[xs.len() - 1] - xs[0]).abs();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<Complex>> = vec![vec![Complex::new(0.0, 0.0); n]; 7];
    let mut stage = vec![Complex::new(0.0, 0.0); n];
    let mut y_new = vec![Complex::new(0.0, 0.0); n];
    let mut x = xs[0];
    let mut h = (span / xs.len() as f64).min(0.05).max(1e-6);
    let h_min = 1e-13 * span.max(1.0);
    let mut steps = 0usize;
    f(x, &y, &mut k[0]);

    for &target in &xs[1..] {
        while dir * (target - x) > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::StiffnessFailure { x });
            }
            let remaining = (target - x).abs();
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let hs = dir * step;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = Complex::new(0.0, 0.0);
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        if *a != 0.0 {
                            acc += k[j][i] * *a;
                        }
                    }
                    stage[i] = y[i] + acc * hs;
                }
                f(x + C[s] * hs, &stage, &mut k[s]);
            }
            // stage 6 is the fifth-order solution (FSAL)
            y_new.copy_from_slice(&stage);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = Complex::new(0.0, 0.0);
                for (s, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += k[s][i] * *w;
                    }
                }
                let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
                let ratio = (e * hs).norm() / scale;
                if !ratio.is_finite() || !y_new[i].is_finite() {
                    return Err(Error::StiffnessFailure { x });
                }
                err = err.max(ratio);
            }
            if err <= 1.0 {
                x = if last { target } else { x + hs };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a step clipped to hit the target says nothing about the natural size
                if !last || step >= h {
                    h *= grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::StiffnessFailure { x });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::I;

    #[test]
    fn exponential_growth_forward_and_backward() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let out = integrate(
            |_, y, dy| dy[0] = y[0],
            &[Complex::new(1.0, 0.0)],
            &xs,
            Tolerance::default(),
        )
        .unwrap();
        for (x, y) in xs.iter().zip(&out) {
            assert!((y[0].re - x.exp()).abs() <= 1e-9 * x.exp());
        }
        let back: Vec<f64> = xs.iter().rev().copied().collect();
        let out = integrate(
            |_, y, dy| dy[0] = y[0],
            &[Complex::new(3.0f64.exp(), 0.0)],
            &back,
            Tolerance::default(),
        )
        .unwrap();
        assert!((out.last().unwrap()[0].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oscillator_keeps_modulus() {
        let xs: Vec<f64> = (0..=200).map(|k| k as f64 * 0.5).collect();
        let out = integrate(
            |_, y, dy| dy[0] = I * 3.0 * y[0],
            &[Complex::new(1.0, 0.0)],
            &xs,
            Tolerance::default(),
        )
        .unwrap();
        let y = out.last().unwrap()[0];
        let exact = (I * 300.0).exp();
        assert!((y - exact).norm() < 1e-7, "{}", (y - exact).norm());
    }

    #[test]
    fn step_underflow_is_reported() {
        // blow-up at x = 1
        let xs = [0.0, 2.0];
        let r = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            &[Complex::new(1.0, 0.0)],
            &xs,
            Tolerance::default(),
        );
        assert!(matches!(r, Err(Error::StiffnessFailure { .. })));
    }
}

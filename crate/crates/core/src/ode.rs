//! Dormand-Prince 5(4) integration with continuous (dense) output.
//!
//! The stepper works on two-component systems, which is all the radial
//! solver needs: state `[u, u']`. Each accepted step stores the
//! coefficients of the 4th-degree interpolation polynomial, so the
//! solution and its first derivative can be evaluated anywhere inside
//! the integration range after the fact.

use std::fmt;

pub type State = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Step size underflow: the controller could not meet the tolerance.
    StepSizeUnderflow { t: f64 },
    /// State stopped being finite.
    NotFinite { t: f64 },
    /// Exceeded the step budget.
    MaxStepsExceeded { t: f64, max_steps: usize },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StepSizeUnderflow { t } => write!(f, "step size underflow at t = {t}"),
            Self::NotFinite { t } => write!(f, "non-finite state at t = {t}"),
            Self::MaxStepsExceeded { t, max_steps } => {
                write!(f, "exceeded {max_steps} steps at t = {t}")
            }
        }
    }
}

impl std::error::Error for OdeError {}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat, for the embedded error estimate
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output weights
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its interpolation coefficients.
#[derive(Debug, Clone)]
pub struct Step {
    pub t: f64,
    pub h: f64,
    cont: [[f64; 5]; 2],
}

impl Step {
    /// Interpolated state at `t` inside `[self.t, self.t + self.h]`.
    pub fn eval(&self, t: f64) -> State {
        let theta = (t - self.t) / self.h;
        let mut out = [0.0; 2];
        for (i, c) in self.cont.iter().enumerate() {
            out[i] = c[0]
                + theta * (c[1] + (1.0 - theta) * (c[2] + theta * (c[3] + (1.0 - theta) * c[4])));
        }
        out
    }

    /// Derivative of the interpolant with respect to `t`.
    pub fn eval_derivative(&self, t: f64) -> State {
        let theta = (t - self.t) / self.h;
        let mut out = [0.0; 2];
        for (i, c) in self.cont.iter().enumerate() {
            let d = c[1]
                + (1.0 - 2.0 * theta) * c[2]
                + theta * (2.0 - 3.0 * theta) * c[3]
                + 2.0 * theta * (1.0 - theta) * (1.0 - 2.0 * theta) * c[4];
            out[i] = d / self.h;
        }
        out
    }
}

/// Stored dense output over the whole integration range.
#[derive(Debug, Clone, Default)]
pub struct DenseOutput {
    steps: Vec<Step>,
}

impl DenseOutput {
    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(f64::NAN, |s| s.t)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.t + s.h)
    }

    fn locate(&self, t: f64) -> &Step {
        let idx = self
            .steps
            .partition_point(|s| s.t + s.h < t)
            .min(self.steps.len() - 1);
        &self.steps[idx]
    }

    /// Interpolated state; `t` is clamped to the integration range.
    pub fn eval(&self, t: f64) -> State {
        self.locate(t).eval(t)
    }

    pub fn eval_derivative(&self, t: f64) -> State {
        self.locate(t).eval_derivative(t)
    }
}

/// Adaptive Dormand-Prince stepper driven by the caller.
pub struct Dopri5<F: Fn(f64, State) -> State> {
    f: F,
    pub t: f64,
    pub y: State,
    k1: State,
    h: f64,
    rtol: f64,
    atol: f64,
    steps_taken: usize,
    max_steps: usize,
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

impl<F: Fn(f64, State) -> State> Dopri5<F> {
    pub fn new(f: F, t0: f64, y0: State, rtol: f64, atol: f64) -> Self {
        let k1 = f(t0, y0);
        // crude initial step from the scale of y and f
        let sy = y0[0].abs().max(y0[1].abs()).max(atol);
        let sf = k1[0].abs().max(k1[1].abs()).max(1e-10);
        let h = (0.01 * sy / sf).clamp(1e-8, 0.1);
        Self { f, t: t0, y: y0, k1, h, rtol, atol, steps_taken: 0, max_steps: 50_000_000 }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Advance by one accepted step and return it with its dense
    /// coefficients. Never steps past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<Step, OdeError> {
        loop {
            self.steps_taken += 1;
            if self.steps_taken > self.max_steps {
                return Err(OdeError::MaxStepsExceeded { t: self.t, max_steps: self.max_steps });
            }
            // relative step cap: keeps the interpolant tight on the long
            // slowly-varying stretches where error control alone would
            // take enormous steps
            let cap = 0.08 * (self.t.abs() + 0.5);
            let mut h = self.h.min(t_limit - self.t).min(cap);
            if h <= 0.0 {
                h = self.h.min(cap);
            }
            if h < 1e-14 * (1.0 + self.t.abs()) {
                return Err(OdeError::StepSizeUnderflow { t: self.t });
            }

            let (t, y, k1) = (self.t, self.y, self.k1);
            let f = &self.f;
            let k2 = f(t + C[1] * h, add(y, h, &[(A21, k1)]));
            let k3 = f(t + C[2] * h, add(y, h, &[(A31, k1), (A32, k2)]));
            let k4 = f(t + C[3] * h, add(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
            let k5 = f(t + C[4] * h, add(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
            let k6 = f(
                t + C[5] * h,
                add(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
            );
            let y_new = add(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
            let k7 = f(t + h, y_new);

            let mut err = 0.0_f64;
            for i in 0..2 {
                let e = E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i];
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (h * e / sc).powi(2);
            }
            err = (err / 2.0).sqrt();

            if !err.is_finite() || !y_new[0].is_finite() || !y_new[1].is_finite() {
                return Err(OdeError::NotFinite { t });
            }

            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if err <= 1.0 {
                let mut cont = [[0.0; 5]; 2];
                for i in 0..2 {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[i][0] = y[i];
                    cont[i][1] = ydiff;
                    cont[i][2] = bspl;
                    cont[i][3] = ydiff - h * k7[i] - bspl;
                    cont[i][4] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = Step { t, h, cont };
                self.t = t + h;
                self.y = y_new;
                self.k1 = k7; // FSAL
                self.h = h * fac;
                return Ok(step);
            }
            self.h = h * fac.min(1.0);
        }
    }
}

fn add(y: State, h: f64, terms: &[(f64, State)]) -> State {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate from `t0` to `t_end`, collecting dense output.
pub fn integrate<F: Fn(f64, State) -> State>(
    f: F,
    t0: f64,
    y0: State,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<(DenseOutput, State), OdeError> {
    let mut stepper = Dopri5::new(f, t0, y0, rtol, atol);
    let mut dense = DenseOutput::default();
    while stepper.t < t_end {
        dense.push(stepper.step(t_end)?);
    }
    Ok((dense, stepper.y))
}

//! Adaptive Dormand–Prince 5(4) integrator with 4th-order dense output.
//!
//! The stepper is driven one accepted step at a time so that callers can
//! inspect each step (events, escape checks, sampling) without callbacks.

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible |h|; rejecting below it is a step underflow.
    pub h_min: f64,
    /// Largest admissible |h|.
    pub h_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-9, atol: 1e-12, h_min: 0.0, h_max: f64::INFINITY }
    }
}

/// A right-hand side `dy/dt = f(t, y)` on a fixed-size state.
pub trait System<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];

    /// Per-component absolute tolerance. Defaults to the scalar tolerance.
    fn atol(&self, _i: usize, tol: &Tolerances) -> f64 {
        tol.atol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    Underflow,
    NonFinite,
}

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

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over the last accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r1: [f64; N],
    r2: [f64; N],
    r3: [f64; N],
    r4: [f64; N],
    r5: [f64; N],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        std::array::from_fn(|i| {
            self.r1[i]
                + th * (self.r2[i] + th1 * (self.r3[i] + th * (self.r4[i] + th1 * self.r5[i])))
        })
    }

    /// Locates `g(t, y(t)) = 0` inside the step by bisection on the dense
    /// output, given that `g` changes sign between the step ends.
    pub fn locate<G: Fn(f64, &[f64; N]) -> f64>(&self, g: G) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t1());
        let g_lo = g(lo, &self.eval(lo));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let g_mid = g(mid, &self.eval(mid));
            if (g_mid > 0.0) == (g_lo > 0.0) && g_mid != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    tol: Tolerances,
    pub t: f64,
    pub y: [f64; N],
    k1: [f64; N],
    h: f64,
    direction: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<'a, S: System<N>, const N: usize> Stepper<'a, S, N> {
    /// `h0` sets the initial step and the integration direction (sign).
    pub fn new(sys: &'a S, t0: f64, y0: [f64; N], h0: f64, tol: Tolerances) -> Self {
        let k1 = sys.rhs(t0, &y0);
        let direction = if h0 < 0.0 { -1.0 } else { 1.0 };
        let h = h0.abs().clamp(tol.h_min.max(f64::MIN_POSITIVE), tol.h_max) * direction;
        Stepper { sys, tol, t: t0, y: y0, k1, h, direction, accepted: 0, rejected: 0 }
    }

    pub fn current_step(&self) -> f64 {
        self.h
    }

    /// Takes one accepted step, never stepping past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep<N>, StepError> {
        let sys = self.sys;
        let (t, y, k1) = (self.t, self.y, self.k1);
        loop {
            let remaining = (t_end - t) * self.direction;
            let mut h = self.h;
            let mut last = false;
            if h.abs() >= remaining {
                h = remaining * self.direction;
                last = true;
            }

            let stage = |coef: &[(f64, &[f64; N])]| -> [f64; N] {
                std::array::from_fn(|i| y[i] + h * coef.iter().map(|(c, k)| c * k[i]).sum::<f64>())
            };
            let k2 = sys.rhs(t + C2 * h, &stage(&[(A21, &k1)]));
            let k3 = sys.rhs(t + C3 * h, &stage(&[(A31, &k1), (A32, &k2)]));
            let k4 = sys.rhs(t + C4 * h, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = sys.rhs(
                t + C5 * h,
                &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = sys.rhs(
                t + h,
                &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t_end } else { t + h };
            let k7 = sys.rhs(t_new, &y_new);

            let mut err2 = 0.0;
            let mut finite = true;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = sys.atol(i, &self.tol)
                    + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                let r = e / sc;
                err2 += r * r;
                finite &= y_new[i].is_finite();
            }
            let err = (err2 / N as f64).sqrt();

            if !finite || !err.is_finite() {
                let shrunk = h * 0.1;
                if shrunk.abs() < self.tol.h_min || shrunk.abs() < f64::EPSILON * t.abs() {
                    return Err(StepError::NonFinite);
                }
                self.h = shrunk;
                self.rejected += 1;
                continue;
            }

            if err <= 1.0 {
                let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
                let dense = DenseStep {
                    t0: t,
                    h: t_new - t,
                    r1: y,
                    r2: ydiff,
                    r3: bspl,
                    r4: std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                    r5: std::array::from_fn(|i| {
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i])
                    }),
                };
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let next = (h.abs() * factor).min(self.tol.h_max).max(self.tol.h_min);
                if !last || next > self.h.abs() {
                    self.h = next * self.direction;
                }
                self.t = t_new;
                self.y = y_new;
                self.k1 = k7;
                self.accepted += 1;
                return Ok(dense);
            }

            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            let shrunk = h.abs() * factor;
            if shrunk < self.tol.h_min || shrunk <= f64::EPSILON * t.abs() {
                return Err(StepError::Underflow);
            }
            self.h = shrunk * self.direction;
            self.rejected += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic(f64);
    impl System<2> for Harmonic {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -self.0 * self.0 * y[0]]
        }
    }

    struct Decay;
    impl System<1> for Decay {
        fn rhs(&self, t: f64, y: &[f64; 1]) -> [f64; 1] {
            [-2.0 * t * y[0]]
        }
    }

    fn run<S: System<N>, const N: usize>(s: &S, y0: [f64; N], t1: f64, tol: Tolerances) -> [f64; N] {
        let mut st = Stepper::new(s, 0.0, y0, 1e-3 * t1.signum(), tol);
        while (st.t - t1).abs() > 0.0 {
            st.step(t1).unwrap();
        }
        st.y
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let tol = Tolerances { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let y = run(&Harmonic(3.0), [1.0, 0.0], 10.0, tol);
        assert!((y[0] - (30.0f64).cos()).abs() < 1e-8);
        assert!((y[1] + 3.0 * (30.0f64).sin()).abs() < 3e-8);
    }

    #[test]
    fn backward_integration() {
        let tol = Tolerances { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let y = run(&Decay, [1.0], -1.5, tol);
        assert!((y[0] - (-2.25f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_matches_solution_inside_steps() {
        let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let sys = Harmonic(1.0);
        let mut st = Stepper::new(&sys, 0.0, [1.0, 0.0], 0.1, tol);
        let mut worst: f64 = 0.0;
        while st.t < 20.0 {
            let d = st.step(20.0).unwrap();
            for j in 1..10 {
                let t = d.t0 + d.h * j as f64 / 10.0;
                worst = worst.max((d.eval(t)[0] - t.cos()).abs());
            }
        }
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn event_location_in_step() {
        let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let sys = Harmonic(1.0);
        let mut st = Stepper::new(&sys, 0.0, [1.0, 0.0], 0.1, tol);
        loop {
            let d = st.step(10.0).unwrap();
            if d.eval(d.t0)[0] > 0.0 && st.y[0] <= 0.0 {
                let tz = d.locate(|_, y| y[0]);
                assert!((tz - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
                break;
            }
        }
    }

    #[test]
    fn step_floor_reports_underflow() {
        struct Blowup;
        impl System<1> for Blowup {
            fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
                [y[0] * y[0]]
            }
        }
        let tol = Tolerances { rtol: 1e-9, atol: 1e-12, h_min: 1e-9, h_max: 1.0 };
        let mut st = Stepper::new(&Blowup, 0.0, [1.0], 1e-3, tol);
        let mut res = Ok(());
        while st.t < 2.0 {
            if let Err(e) = st.step(2.0) {
                res = Err(e);
                break;
            }
        }
        assert!(res.is_err());
        assert!(st.t < 1.0);
    }
}

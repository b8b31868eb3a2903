//! Discrete-time controller primitives: Park/Clarke transforms, SRF-PLL,
//! PI controller with anti-windup, discrete low-pass filter, power
//! calculators, current-reference generation, droop and secondary control.
//!
//! The transform convention is amplitude-invariant (2/3 factor) with the
//! q-axis sign chosen so that Ps = 3/2 (Vsd id + Vsq iq) and
//! Qs = 3/2 (-Vsd iq + Vsq id) hold verbatim.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::power::ThreePhaseFrame;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("vsd {0} below floor {1}; current references unavailable")]
    VsdTooSmall(f64, f64),
}

/// Wrap an angle into [0, 2*pi).
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta % TAU;
    if t < 0.0 {
        t + TAU
    } else {
        t
    }
}

/// Rotating-frame image of a three-phase quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DqFrame {
    pub d: f64,
    pub q: f64,
    pub zero: f64,
    /// Frame angle used for the transform, wrapped to [0, 2*pi).
    pub theta: f64,
}

/// Amplitude-invariant Park transform.
pub fn abc_to_dq0(f: &ThreePhaseFrame, theta: f64) -> DqFrame {
    let t = wrap_angle(theta);
    let (c0, c1, c2) = (t.cos(), (t - TAU / 3.0).cos(), (t + TAU / 3.0).cos());
    let (s0, s1, s2) = (t.sin(), (t - TAU / 3.0).sin(), (t + TAU / 3.0).sin());
    DqFrame {
        d: 2.0 / 3.0 * (f.a * c0 + f.b * c1 + f.c * c2),
        q: -2.0 / 3.0 * (f.a * s0 + f.b * s1 + f.c * s2),
        zero: (f.a + f.b + f.c) / 3.0,
        theta: t,
    }
}

/// Inverse Park transform under the same convention.
pub fn dq0_to_abc(f: &DqFrame, theta: f64) -> ThreePhaseFrame {
    let t = wrap_angle(theta);
    let (c0, c1, c2) = (t.cos(), (t - TAU / 3.0).cos(), (t + TAU / 3.0).cos());
    let (s0, s1, s2) = (t.sin(), (t - TAU / 3.0).sin(), (t + TAU / 3.0).sin());
    ThreePhaseFrame {
        a: f.d * c0 - f.q * s0 + f.zero,
        b: f.d * c1 - f.q * s1 + f.zero,
        c: f.d * c2 - f.q * s2 + f.zero,
        time: 0.0,
    }
}

/// Discrete PI controller with conditional-integration anti-windup.
#[derive(Debug, Clone)]
pub struct PiController {
    pub kp: f64,
    pub ki: f64,
    pub dt: f64,
    pub integrator: f64,
    /// Optional (lo, hi) output clamp.
    pub limits: Option<(f64, f64)>,
}

impl PiController {
    pub fn new(kp: f64, ki: f64, dt: f64) -> Self {
        assert!(dt > 0.0);
        Self { kp, ki, dt, integrator: 0.0, limits: None }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.limits = Some((lo, hi));
        self
    }

    /// u = kp*e + integrator after accumulating ki*e*dt; the accumulation is
    /// discarded when the output sits at a limit and the error drives
    /// further into it.
    pub fn step(&mut self, error: f64) -> f64 {
        let tentative = self.integrator + self.ki * error * self.dt;
        let unclamped = self.kp * error + tentative;
        let output = match self.limits {
            Some((lo, hi)) => unclamped.clamp(lo, hi),
            None => unclamped,
        };
        let clamped_same_sign = output != unclamped && (unclamped - output) * error > 0.0;
        if !clamped_same_sign {
            self.integrator = tentative;
        }
        output
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
    }
}

/// First-order discrete low-pass filter y[k] = a1*y[k-1] + b0*u[k-1].
///
/// Defaults are the unity-DC-gain pair b0 = 0.0609, a1 = 0.9391 at 1 kHz.
#[derive(Debug, Clone)]
pub struct LowPassFilter {
    pub b0: f64,
    pub a1: f64,
    pub fs: f64,
    y_prev: f64,
    u_prev: f64,
}

impl LowPassFilter {
    pub fn new(b0: f64, a1: f64, fs: f64) -> Self {
        assert!(a1.abs() < 1.0, "filter pole must be inside the unit circle");
        assert!(fs > 0.0);
        Self { b0, a1, fs, y_prev: 0.0, u_prev: 0.0 }
    }

    pub fn power_filter_1khz() -> Self {
        Self::new(0.0609, 0.9391, 1000.0)
    }

    pub fn step(&mut self, u: f64) -> f64 {
        let y = self.a1 * self.y_prev + self.b0 * self.u_prev;
        self.y_prev = y;
        self.u_prev = u;
        y
    }

    pub fn output(&self) -> f64 {
        self.y_prev
    }
}

/// Synchronous-reference-frame PLL: Park on the measured voltage, PI on the
/// normalized q component, integrate omega into theta.
#[derive(Debug, Clone)]
pub struct SrfPll {
    pub theta: f64,
    pub omega: f64,
    pub nominal_omega: f64,
    pub pi: PiController,
    dt: f64,
    last_dq: DqFrame,
}

impl SrfPll {
    /// Default gains lock a 60 Hz grid in roughly 0.1 s at a 1 kHz rate.
    pub fn new(nominal_omega: f64, dt: f64) -> Self {
        Self::with_gains(nominal_omega, dt, 50.0, 900.0)
    }

    pub fn with_gains(nominal_omega: f64, dt: f64, kp: f64, ki: f64) -> Self {
        Self {
            theta: 0.0,
            omega: nominal_omega,
            nominal_omega,
            pi: PiController::new(kp, ki, dt),
            dt,
            last_dq: DqFrame::default(),
        }
    }

    pub fn step(&mut self, v: &ThreePhaseFrame) -> DqFrame {
        let dq = abc_to_dq0(v, self.theta);
        let mag = (dq.d * dq.d + dq.q * dq.q).sqrt();
        // Normalizing by the voltage magnitude keeps the loop gain, and
        // therefore the lock time, independent of the grid amplitude. A dead
        // grid (zero magnitude) contributes zero error and omega holds
        // nominal.
        let error = if mag > 1e-9 { dq.q / mag } else { 0.0 };
        self.omega = self.nominal_omega + self.pi.step(error);
        self.theta = wrap_angle(self.theta + self.omega * self.dt);
        self.last_dq = dq;
        dq
    }

    /// Locked when the q component is nulled to under 1 % of the d component.
    pub fn locked(&self) -> bool {
        self.last_dq.d > 1.0 && self.last_dq.q.abs() < 0.01 * self.last_dq.d.abs()
    }

    pub fn voltage_dq(&self) -> DqFrame {
        self.last_dq
    }
}

/// Active/reactive power from dq components (both frames at the same angle):
/// Ps = 3/2 (Vsd id + Vsq iq), Qs = 3/2 (-Vsd iq + Vsq id).
pub fn dq_power(v: &DqFrame, i: &DqFrame) -> (f64, f64) {
    let ps = 1.5 * (v.d * i.d + v.q * i.q);
    let qs = 1.5 * (-v.d * i.q + v.q * i.d);
    (ps, qs)
}

/// Instantaneous active and reactive power from phase quantities:
/// P = Va Ia + Vb Ib + Vc Ic,
/// Q = (1/sqrt3) [(Va-Vb) Ic + (Vb-Vc) Ia + (Vc-Va) Ib].
pub fn instantaneous_pq(v: &ThreePhaseFrame, i: &ThreePhaseFrame) -> (f64, f64) {
    let p = v.a * i.a + v.b * i.b + v.c * i.c;
    let q = ((v.a - v.b) * i.c + (v.b - v.c) * i.a + (v.c - v.a) * i.b) / 3f64.sqrt();
    (p, q)
}

/// Division guard for the current-reference feedforward at startup.
pub const VSD_FLOOR: f64 = 1.0;

/// id_ref = 2 Pref / (3 Vsd), iq_ref = -2 Qref / (3 Vsd).
pub fn current_refs(p_ref: f64, q_ref: f64, vsd: f64) -> Result<(f64, f64), ControlError> {
    if vsd < VSD_FLOOR {
        return Err(ControlError::VsdTooSmall(vsd, VSD_FLOOR));
    }
    Ok((2.0 * p_ref / (3.0 * vsd), -2.0 * q_ref / (3.0 * vsd)))
}

/// Primary droop law: Vref = Vn - k*i.
pub fn droop(vn: f64, k: f64, i: f64) -> f64 {
    vn - k * i
}

/// Secondary voltage-restoration integrator:
/// delta += ks * (Vn - Vref) * dt (forward Euler at the secondary rate).
pub fn secondary_step(delta: f64, vref: f64, vn: f64, ks: f64, dt: f64) -> f64 {
    delta + ks * (vn - vref) * dt
}

/// Piecewise-constant reference profile with left-closed step intervals.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StepProfile {
    /// (time, value) pairs; times strictly increasing; the first entry's
    /// value also applies before its time.
    pub steps: Vec<(f64, f64)>,
}

impl StepProfile {
    pub fn constant(value: f64) -> Self {
        Self { steps: vec![(0.0, value)] }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.steps.is_empty() {
            return Err("profile needs at least one step".into());
        }
        if self.steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("profile step times must be strictly increasing".into());
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> f64 {
        let mut value = self.steps[0].1;
        for &(ts, v) in &self.steps {
            if t >= ts {
                value = v;
            } else {
                break;
            }
        }
        value
    }

    /// Step times after the first entry (the actual reference changes).
    pub fn change_times(&self) -> Vec<f64> {
        self.steps.iter().skip(1).map(|&(t, _)| t).collect()
    }
}

/// Lumped single-bus DC microgrid parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DcMicrogridParams {
    pub l: f64,
    pub c: f64,
    pub r_load: f64,
    /// Droop gain, V/A.
    pub k: f64,
    /// Secondary gain, 1/s.
    pub ks: f64,
    /// Nominal voltage, V.
    pub vn: f64,
}

impl Default for DcMicrogridParams {
    fn default() -> Self {
        Self { l: 1e-3, c: 2e-3, r_load: 10.0, k: 0.2, ks: 0.75, vn: 200.0 }
    }
}

impl DcMicrogridParams {
    /// Steady-state bus voltage without secondary control:
    /// V = Vn * R / (R + k).
    pub fn droop_fixed_point(&self) -> f64 {
        self.vn * self.r_load / (self.r_load + self.k)
    }
}

/// DC microgrid state; V0 = Vref by the converter inner-loop assumption.
#[derive(Debug, Clone, Copy, Default)]
pub struct DcMicrogridState {
    /// Inductor current, A.
    pub i: f64,
    /// Capacitor (bus) voltage, V.
    pub v: f64,
    /// Secondary correction, V.
    pub delta: f64,
    /// Droop reference voltage (= converter output V0), V.
    pub vref: f64,
}

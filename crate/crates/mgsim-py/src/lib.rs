//! Python bindings: scenario runners, waveform containers, control blocks
//! and the analysis helpers, exposed as the `mgsim_py` extension module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mgsim::analysis::{self, SpectrumConfig};
use mgsim::config::{self, ScenarioConfig, ScenarioKind};
use mgsim::control;
use mgsim::eln;
use mgsim::power::ThreePhaseFrame;
use mgsim::scenario;
use mgsim::waveform;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Uniformly sampled named signal.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Waveform {
    inner: waveform::Waveform,
}

#[pymethods]
impl Waveform {
    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn start(&self) -> f64 {
        self.inner.start
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples.clone()
    }

    /// Sample times matching `samples`.
    fn times(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|k| self.inner.time_of(k)).collect()
    }

    /// Mean over `[t0, t1)`.
    fn mean(&self, t0: f64, t1: f64) -> f64 {
        self.inner.mean(t0, t1)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Waveform(name='{}', start={}, period={}, len={})",
            self.inner.name,
            self.inner.start,
            self.inner.period,
            self.inner.len()
        )
    }
}

/// First-order discrete low-pass filter y[k] = a1*y[k-1] + b0*u[k-1].
#[pyclass]
struct LowPassFilter {
    inner: control::LowPassFilter,
}

#[pymethods]
impl LowPassFilter {
    #[new]
    #[pyo3(signature = (b0=0.0609, a1=0.9391, fs=1000.0))]
    fn new(b0: f64, a1: f64, fs: f64) -> Self {
        Self { inner: control::LowPassFilter::new(b0, a1, fs) }
    }

    fn step(&mut self, u: f64) -> f64 {
        self.inner.step(u)
    }

    fn output(&self) -> f64 {
        self.inner.output()
    }
}

/// PI controller with conditional-integration anti-windup.
#[pyclass]
struct PiController {
    inner: control::PiController,
}

#[pymethods]
impl PiController {
    #[new]
    #[pyo3(signature = (kp, ki, dt, limits=None))]
    fn new(kp: f64, ki: f64, dt: f64, limits: Option<(f64, f64)>) -> Self {
        let mut inner = control::PiController::new(kp, ki, dt);
        if let Some((lo, hi)) = limits {
            inner = inner.with_limits(lo, hi);
        }
        Self { inner }
    }

    fn step(&mut self, error: f64) -> f64 {
        self.inner.step(error)
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// Synchronous-reference-frame PLL tracking a three-phase voltage.
#[pyclass]
struct SrfPll {
    inner: control::SrfPll,
}

#[pymethods]
impl SrfPll {
    #[new]
    #[pyo3(signature = (nominal_omega, dt, kp=50.0, ki=900.0))]
    fn new(nominal_omega: f64, dt: f64, kp: f64, ki: f64) -> Self {
        Self { inner: control::SrfPll::with_gains(nominal_omega, dt, kp, ki) }
    }

    /// Advance on one three-phase sample; returns (d, q) of the voltage.
    fn step(&mut self, a: f64, b: f64, c: f64) -> (f64, f64) {
        let dq = self.inner.step(&ThreePhaseFrame { a, b, c, time: 0.0 });
        (dq.d, dq.q)
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    fn locked(&self) -> bool {
        self.inner.locked()
    }
}

/// (tau, omega0, period) of the series R between two capacitors fed
/// through an inductor, for the given element values.
#[pyfunction]
fn time_constants(r: f64, c1: f64, c2: f64, l: f64) -> (f64, f64, f64) {
    let tc = eln::compute_time_constants(&eln::EmtCircuitParams { r, c1, c2, l });
    (tc.tau, tc.omega0, tc.period)
}

/// Amplitude-invariant Park transform; returns (d, q, zero).
#[pyfunction]
fn abc_to_dq0(a: f64, b: f64, c: f64, theta: f64) -> (f64, f64, f64) {
    let dq = control::abc_to_dq0(&ThreePhaseFrame { a, b, c, time: 0.0 }, theta);
    (dq.d, dq.q, dq.zero)
}

/// Inverse Park transform; returns (a, b, c).
#[pyfunction]
#[pyo3(signature = (d, q, zero, theta))]
fn dq0_to_abc(d: f64, q: f64, zero: f64, theta: f64) -> (f64, f64, f64) {
    let f = control::dq0_to_abc(&control::DqFrame { d, q, zero, theta }, theta);
    (f.a, f.b, f.c)
}

/// Instantaneous (P, Q) from three-phase voltage and current samples.
#[pyfunction]
fn instantaneous_pq(
    va: f64,
    vb: f64,
    vc: f64,
    ia: f64,
    ib: f64,
    ic: f64,
) -> (f64, f64) {
    control::instantaneous_pq(
        &ThreePhaseFrame { a: va, b: vb, c: vc, time: 0.0 },
        &ThreePhaseFrame { a: ia, b: ib, c: ic, time: 0.0 },
    )
}

/// Droop law Vref = Vn - k*i.
#[pyfunction]
fn droop(vn: f64, k: f64, i: f64) -> f64 {
    control::droop(vn, k, i)
}

/// One secondary-restoration integration step.
#[pyfunction]
fn secondary_step(delta: f64, vref: f64, vn: f64, ks: f64, dt: f64) -> f64 {
    control::secondary_step(delta, vref, vn, ks, dt)
}

/// d/q current references for the requested powers at the given Vsd.
#[pyfunction]
fn current_refs(p_ref: f64, q_ref: f64, vsd: f64) -> PyResult<(f64, f64)> {
    control::current_refs(p_ref, q_ref, vsd).map_err(value_err)
}

/// Duration string with optional ns/us/ms/s suffix, in seconds.
#[pyfunction]
fn parse_duration(text: &str) -> PyResult<f64> {
    config::parse_duration(text).map_err(value_err)
}

/// Angular frequency (rad/s) of the strongest non-DC component of the
/// waveform over `[t0, t1]`, or None when nothing rises above the noise.
#[pyfunction]
fn dominant_frequency(w: &Waveform, t0: f64, t1: f64) -> Option<f64> {
    analysis::dominant_frequency(&w.inner, t0, t1, &SpectrumConfig::default())
}

/// Earliest time after which the waveform stays within `band` (relative)
/// of `target`, or None if it never settles.
#[pyfunction]
fn settling_time(w: &Waveform, target: f64, band: f64) -> Option<f64> {
    analysis::settling_time(&w.inner, target, band)
}

fn scenario_config(
    kind: ScenarioKind,
    dt: Option<f64>,
    duration: Option<f64>,
) -> PyResult<ScenarioConfig> {
    let mut cfg = ScenarioConfig::defaults(kind);
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    if let Some(duration) = duration {
        cfg.duration = duration;
    }
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

fn wrap(ws: Vec<waveform::Waveform>) -> Vec<Waveform> {
    ws.into_iter().map(|inner| Waveform { inner }).collect()
}

/// Switched-mode transient circuit: returns [v_C1, input] waveforms.
#[pyfunction]
#[pyo3(signature = (dt=None, duration=None))]
fn run_emt(dt: Option<f64>, duration: Option<f64>) -> PyResult<Vec<Waveform>> {
    let cfg = scenario_config(ScenarioKind::Emt, dt, duration)?;
    Ok(wrap(scenario::emt::run_emt(&cfg).map_err(value_err)?))
}

/// Grid-following inverter microgrid: returns [P, Q, P_ref, Q_ref, V_g, I_g].
#[pyfunction]
#[pyo3(signature = (dt=None, duration=None))]
fn run_gfl(dt: Option<f64>, duration: Option<f64>) -> PyResult<Vec<Waveform>> {
    let cfg = scenario_config(ScenarioKind::Gfl, dt, duration)?;
    Ok(wrap(scenario::gfl::run_gfl(&cfg).map_err(value_err)?))
}

/// Droop + secondary DC microgrid: returns [V0, Vref, delta, i].
#[pyfunction]
#[pyo3(signature = (dt=None, duration=None, secondary_enabled=true))]
fn run_dc(
    dt: Option<f64>,
    duration: Option<f64>,
    secondary_enabled: bool,
) -> PyResult<Vec<Waveform>> {
    let mut cfg = scenario_config(ScenarioKind::Dc, dt, duration)?;
    cfg.dc.secondary_enabled = secondary_enabled;
    Ok(wrap(scenario::dc::run_dc(&cfg).map_err(value_err)?))
}

#[pymodule]
fn mgsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Waveform>()?;
    m.add_class::<LowPassFilter>()?;
    m.add_class::<PiController>()?;
    m.add_class::<SrfPll>()?;
    m.add_function(wrap_pyfunction!(time_constants, m)?)?;
    m.add_function(wrap_pyfunction!(abc_to_dq0, m)?)?;
    m.add_function(wrap_pyfunction!(dq0_to_abc, m)?)?;
    m.add_function(wrap_pyfunction!(instantaneous_pq, m)?)?;
    m.add_function(wrap_pyfunction!(droop, m)?)?;
    m.add_function(wrap_pyfunction!(secondary_step, m)?)?;
    m.add_function(wrap_pyfunction!(current_refs, m)?)?;
    m.add_function(wrap_pyfunction!(parse_duration, m)?)?;
    m.add_function(wrap_pyfunction!(dominant_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(settling_time, m)?)?;
    m.add_function(wrap_pyfunction!(run_emt, m)?)?;
    m.add_function(wrap_pyfunction!(run_gfl, m)?)?;
    m.add_function(wrap_pyfunction!(run_dc, m)?)?;
    Ok(())
}

//! Open-loop EMT study: a sinusoidal source switched on at t = 0 drives a
//! series L into a C1 - R - C2 capacitor bank; the C1 voltage rings at the
//! natural frequency omega0 = 1/sqrt(L (C1 + C2)) when the time step
//! resolves it.

use std::f64::consts::TAU;

use crate::config::ScenarioConfig;
use crate::eln::{assemble, ElnNetlist, ElnSystem, Integration};
use crate::tdf::{PortSpec, TdfCluster, TdfExecutor, TdfIo, TdfModule};
use crate::waveform::Waveform;

use super::ScenarioError;

/// Sinusoid switched on at t = 0 (zero before the run starts).
struct Stimulus {
    amplitude: f64,
    omega: f64,
    phase: f64,
    trace: Waveform,
}

impl TdfModule for Stimulus {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
        let v = self.amplitude * (self.omega * io.time() + self.phase).sin();
        self.trace.push(v);
        io.write(0, v);
        Ok(())
    }
}

/// ELN circuit wrapped as a dataflow block: reads the source voltage, steps
/// the network, emits the C1 voltage.
struct Plant {
    sys: ElnSystem,
    out: Vec<f64>,
    trace: Waveform,
}

impl TdfModule for Plant {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
        let v_in = io.read(0);
        self.sys.step(&[v_in], &mut self.out).map_err(|e| e.to_string())?;
        let v_c1 = self.out[0];
        self.trace.push(v_c1);
        io.write(0, v_c1);
        Ok(())
    }
}

pub fn run_emt(cfg: &ScenarioConfig) -> Result<Vec<Waveform>, ScenarioError> {
    let p = &cfg.emt;
    let mut net = ElnNetlist::new();
    let src = net.node("src");
    let n1 = net.node("n1");
    let n2 = net.node("n2");
    let drive = net.controlled_voltage_source("vsrc", src, ElnNetlist::GROUND);
    net.inductor("l", src, n1, p.circuit.l);
    net.capacitor("c1", n1, ElnNetlist::GROUND, p.circuit.c1);
    net.resistor("r", n1, n2, p.circuit.r);
    net.capacitor("c2", n2, ElnNetlist::GROUND, p.circuit.c2);
    let meter = net.voltage_sink("v_c1", n1, ElnNetlist::GROUND);
    debug_assert_eq!(drive.0, 0);
    debug_assert_eq!(meter.0, 0);
    let method = if p.backward_euler { Integration::BackwardEuler } else { Integration::Trapezoidal };
    let sys = assemble(&net, cfg.dt, method)?;

    let mut cluster = TdfCluster::new(cfg.dt);
    let stim = cluster.add_module(
        "stimulus",
        Box::new(Stimulus {
            amplitude: p.stimulus_amplitude,
            omega: TAU * p.stimulus_frequency,
            phase: p.stimulus_phase,
            trace: Waveform::new("input", 0.0, cfg.dt),
        }),
        vec![],
        vec![PortSpec::new(1)],
    );
    let plant = cluster.add_module(
        "plant",
        Box::new(Plant {
            sys,
            out: vec![0.0; net.n_outputs()],
            trace: Waveform::new("v_C1", 0.0, cfg.dt),
        }),
        vec![PortSpec::new(1)],
        vec![PortSpec::new(1)],
    );
    cluster.connect(stim, 0, plant, 0)?;

    let mut exec = TdfExecutor::new(cluster)?;
    exec.run_for(cfg.duration)?;

    let v_c1 = exec.module::<Plant>(plant).unwrap().trace.clone();
    let input = exec.module::<Stimulus>(stim).unwrap().trace.clone();
    Ok(vec![v_c1, input])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{dominant_frequency, SpectrumConfig};
    use crate::config::{ScenarioConfig, ScenarioKind};
    use crate::eln::compute_time_constants;

    #[test]
    fn zero_stimulus_gives_zero_output() {
        let mut cfg = ScenarioConfig::defaults(ScenarioKind::Emt);
        cfg.emt.stimulus_amplitude = 0.0;
        cfg.duration = 0.01;
        let ws = run_emt(&cfg).unwrap();
        assert!(ws[0].samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fine_step_shows_natural_frequency_ringing() {
        let mut cfg = ScenarioConfig::defaults(ScenarioKind::Emt);
        cfg.duration = 0.01;
        let ws = run_emt(&cfg).unwrap();
        let omega0 = compute_time_constants(&cfg.emt.circuit).omega0;
        let f = dominant_frequency(&ws[0], 0.0, 0.01, &SpectrumConfig::default())
            .expect("ringing expected at dt = 50 us");
        assert!((f - omega0).abs() / omega0 < 0.05, "detected {f}, expected {omega0}");
    }

    #[test]
    fn coarse_step_suppresses_ringing() {
        let mut cfg = ScenarioConfig::defaults(ScenarioKind::Emt);
        cfg.dt = 5e-3;
        cfg.duration = 0.01;
        let ws = run_emt(&cfg).unwrap();
        assert_eq!(dominant_frequency(&ws[0], 0.0, 0.01, &SpectrumConfig::default()), None);
    }
}

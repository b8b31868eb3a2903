//! DC microgrid: a droop-controlled converter (modeled as an ideal voltage
//! source at its reference) feeds an L-C bus with a resistive load; a slow
//! secondary integrator restores the droop-sagged bus voltage to nominal.

use crate::config::ScenarioConfig;
use crate::control::{droop, secondary_step, DcMicrogridParams};
use crate::eln::{assemble, ElnNetlist, ElnSystem, Integration};
use crate::tdf::{PortSpec, TdfCluster, TdfExecutor, TdfIo, TdfModule};
use crate::waveform::Waveform;

use super::ScenarioError;

/// Plant at the fast (1 ms) rate. Input: secondary correction delta.
/// Output: the droop reference voltage for the secondary controller.
/// The droop law uses the previous-step measured current, so the
/// converter-side algebraic loop is broken locally by one plant step.
struct DcPlant {
    sys: ElnSystem,
    p: DcMicrogridParams,
    i_prev: f64,
    out: Vec<f64>,
    v0: Waveform,
    vref: Waveform,
    delta: Waveform,
    i: Waveform,
}

impl TdfModule for DcPlant {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
        let delta = io.read(0);
        let vref = droop(self.p.vn + delta, self.p.k, self.i_prev);
        self.sys.step(&[vref], &mut self.out).map_err(|e| e.to_string())?;
        let i = self.out[0];
        let v_bus = self.out[1];
        self.i_prev = i;
        io.write(0, vref);
        self.v0.push(v_bus);
        self.vref.push(vref);
        self.delta.push(delta);
        self.i.push(i);
        Ok(())
    }
}

/// Secondary restoration integrator at the slow (100 ms) rate, gated by an
/// enable flag and a start delay.
struct Secondary {
    vn: f64,
    ks: f64,
    period: f64,
    start_delay: f64,
    enabled: bool,
    delta: f64,
}

impl TdfModule for Secondary {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
        let vref = io.read(0);
        if self.enabled && io.time() >= self.start_delay {
            self.delta = secondary_step(self.delta, vref, self.vn, self.ks, self.period);
        }
        io.write(0, self.delta);
        Ok(())
    }
}

/// Converter-fed L-C bus with a resistive load. Controlled input 0 is the
/// converter voltage; outputs are [inductor current, bus voltage].
pub(crate) fn build_dc_system(
    p: &crate::control::DcMicrogridParams,
    dt: f64,
) -> Result<ElnSystem, crate::eln::ElnError> {
    let mut net = ElnNetlist::new();
    let conv = net.node("conv");
    let mid = net.node("mid");
    let bus = net.node("bus");
    net.controlled_voltage_source("v0", conv, ElnNetlist::GROUND);
    net.inductor("l", conv, mid, p.l);
    let amp = net.current_sink("i", mid, bus);
    // The bus capacitor starts at nominal so the run begins from an
    // energized grid rather than black start.
    net.capacitor_ic("c", bus, ElnNetlist::GROUND, p.c, p.vn);
    net.resistor("r_load", bus, ElnNetlist::GROUND, p.r_load);
    let vm = net.voltage_sink("v_bus", bus, ElnNetlist::GROUND);
    debug_assert_eq!((amp.0, vm.0), (0, 1));
    assemble(&net, dt, Integration::Trapezoidal)
}

pub fn run_dc(cfg: &ScenarioConfig) -> Result<Vec<Waveform>, ScenarioError> {
    let p = cfg.dc.plant;
    let sys = build_dc_system(&p, cfg.dt)?;

    let mut cluster = TdfCluster::new(cfg.dt);
    let plant = cluster.add_module(
        "plant",
        Box::new(DcPlant {
            sys,
            p,
            i_prev: 0.0,
            out: vec![0.0; 2],
            v0: Waveform::new("V0", 0.0, cfg.dt),
            vref: Waveform::new("Vref", 0.0, cfg.dt),
            delta: Waveform::new("delta", 0.0, cfg.dt),
            i: Waveform::new("i", 0.0, cfg.dt),
        }),
        vec![PortSpec::new(1).with_period(cfg.dt)],
        vec![PortSpec::new(1).with_period(cfg.dt)],
    );
    let secondary = cluster.add_module(
        "secondary",
        Box::new(Secondary {
            vn: p.vn,
            ks: p.ks,
            period: cfg.dc.secondary_period,
            start_delay: cfg.dc.secondary_start_delay,
            enabled: cfg.dc.secondary_enabled,
            delta: 0.0,
        }),
        vec![PortSpec::new(1).with_period(cfg.dc.secondary_period)],
        // z^-1 on the correction output breaks the plant/secondary loop.
        vec![PortSpec::new(1).with_period(cfg.dc.secondary_period).with_delay(1)],
    );
    cluster.connect(plant, 0, secondary, 0)?;
    cluster.connect(secondary, 0, plant, 0)?;

    let mut exec = TdfExecutor::new(cluster)?;
    exec.run_for(cfg.duration)?;

    let pl = exec.module::<DcPlant>(plant).unwrap();
    Ok(vec![pl.v0.clone(), pl.vref.clone(), pl.delta.clone(), pl.i.clone()])
}

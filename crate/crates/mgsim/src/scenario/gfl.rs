//! Grid-following inverter microgrid: ideal grid behind a lossy line feeds
//! a bus with a resistive load; a controlled current injector on the bus is
//! commanded by a discrete controller (PLL + filtered power feedback + PI
//! current references) running at its own, slower rate.

use std::f64::consts::TAU;

use crate::config::{GflParams, ScenarioConfig};
use crate::control::{
    current_refs, dq0_to_abc, instantaneous_pq, DqFrame, LowPassFilter, PiController, SrfPll,
    StepProfile, VSD_FLOOR,
};
use crate::eln::{assemble, ElnNetlist, ElnSystem, Integration, NodeId, OutputId};
use crate::power::{
    add_controlled_injector, add_grid_source, add_resistive_load, add_transmission_line,
    add_voltage_measurement, grid_source_sample, GridSourceParams, ThreePhaseFrame,
};
use crate::tdf::{PortSpec, TdfCluster, TdfExecutor, TdfIo, TdfModule};
use crate::waveform::Waveform;

use super::ScenarioError;

/// ELN plant: grid source -> line -> bus with load and current injector.
/// Inputs: injected phase currents a, b, c. Outputs: bus voltages a, b, c
/// then delivered injector currents a, b, c.
struct GflPlant {
    sys: ElnSystem,
    grid: GridSourceParams,
    n_inputs: usize,
    out: Vec<f64>,
    bus_v: [usize; 3],
    inj_i: [usize; 3],
    v_g: Waveform,
    i_g: Waveform,
}

impl TdfModule for GflPlant {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
        let g = grid_source_sample(&self.grid, io.time());
        let mut inputs = vec![0.0; self.n_inputs];
        // Grid phase voltages occupy input slots 0..3 (registered first),
        // injector commands 3..6.
        inputs[0] = g.a;
        inputs[1] = g.b;
        inputs[2] = g.c;
        for k in 0..3 {
            inputs[3 + k] = io.read(k);
        }
        self.sys.step(&inputs, &mut self.out).map_err(|e| e.to_string())?;
        for k in 0..3 {
            io.write(k, self.out[self.bus_v[k]]);
            io.write(3 + k, self.out[self.inj_i[k]]);
        }
        self.v_g.push(self.out[self.bus_v[0]]);
        self.i_g.push(self.out[self.inj_i[0]]);
        Ok(())
    }
}

/// Discrete power controller: SRF-PLL on the bus voltage, filtered
/// instantaneous power feedback, PI + feedforward current references,
/// inverse Park to phase-current commands.
struct GflController {
    pll: SrfPll,
    lpf_p: LowPassFilter,
    lpf_q: LowPassFilter,
    /// Smooths the d-axis voltage used in the reference feedforward, so
    /// sampled switching/resonance ripple cannot close a fast loop through
    /// the 1/Vsd division.
    lpf_vsd: LowPassFilter,
    pi_p: PiController,
    pi_q: PiController,
    p_profile: StepProfile,
    q_profile: StepProfile,
    /// Latched on first PLL lock: transient q-axis excursions afterwards
    /// must not drop the injection back to zero.
    synchronized: bool,
    p: Waveform,
    q: Waveform,
    p_ref: Waveform,
    q_ref: Waveform,
}

impl TdfModule for GflController {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
        let t = io.time();
        let v = ThreePhaseFrame { a: io.read(0), b: io.read(1), c: io.read(2), time: t };
        let i = ThreePhaseFrame { a: io.read(3), b: io.read(4), c: io.read(5), time: t };

        let theta = self.pll.theta;
        let vdq = self.pll.step(&v);
        let vsd_f = self.lpf_vsd.step(vdq.d);
        let (p_inst, q_inst) = instantaneous_pq(&v, &i);
        let p_meas = self.lpf_p.step(p_inst);
        let q_meas = self.lpf_q.step(q_inst);

        let p_ref = self.p_profile.sample(t);
        let q_ref = self.q_profile.sample(t);

        // Hold zero commands (and integrators) until the PLL has locked and
        // the d-axis voltage clears the division guard.
        self.synchronized = self.synchronized || self.pll.locked();
        let (id_cmd, iq_cmd) = if self.synchronized && vsd_f >= VSD_FLOOR {
            let (id_ff, iq_ff) =
                current_refs(p_ref, q_ref, vsd_f).map_err(|e| e.to_string())?;
            let id = id_ff + self.pi_p.step(p_ref - p_meas);
            // dQ/diq = -(3/2) Vsd is negative, so the q-axis correction
            // enters with a minus sign.
            let iq = iq_ff - self.pi_q.step(q_ref - q_meas);
            (id, iq)
        } else {
            (0.0, 0.0)
        };

        let cmd = dq0_to_abc(&DqFrame { d: id_cmd, q: iq_cmd, zero: 0.0, theta }, theta);
        io.write(0, cmd.a);
        io.write(1, cmd.b);
        io.write(2, cmd.c);

        self.p.push(p_meas);
        self.q.push(q_meas);
        self.p_ref.push(p_ref);
        self.q_ref.push(q_ref);
        Ok(())
    }
}

fn three_nodes(net: &mut ElnNetlist, prefix: &str) -> [NodeId; 3] {
    [
        net.node(&format!("{prefix}_a")),
        net.node(&format!("{prefix}_b")),
        net.node(&format!("{prefix}_c")),
    ]
}

fn build_network(p: &GflParams) -> (ElnNetlist, [OutputId; 3], [OutputId; 3]) {
    let mut net = ElnNetlist::new();
    let src = three_nodes(&mut net, "src");
    let bus = three_nodes(&mut net, "bus");
    // Grid source registers inputs 0..3, the injector inputs 3..6.
    add_grid_source(&mut net, src, "grid");
    add_transmission_line(&mut net, &p.line, src, bus, "line");
    add_resistive_load(&mut net, bus, p.load_r, "load");
    let (_inj_in, inj_i) = add_controlled_injector(&mut net, &p.snubber, bus, "inv");
    let bus_v = add_voltage_measurement(&mut net, bus, "meas");
    (net, bus_v, inj_i)
}

pub fn run_gfl(cfg: &ScenarioConfig) -> Result<Vec<Waveform>, ScenarioError> {
    let p = &cfg.gfl;
    let dt_ctrl = 1.0 / p.controller_rate_hz;
    let (net, bus_v, inj_i) = build_network(p);
    let sys = assemble(&net, cfg.dt, Integration::Trapezoidal)?;

    let mut cluster = TdfCluster::new(cfg.dt);
    let plant_ports_in: Vec<PortSpec> =
        (0..3).map(|_| PortSpec::new(1).with_period(cfg.dt)).collect();
    let plant_ports_out: Vec<PortSpec> =
        (0..6).map(|_| PortSpec::new(1).with_period(cfg.dt)).collect();
    let plant = cluster.add_module(
        "plant",
        Box::new(GflPlant {
            sys,
            grid: p.grid,
            n_inputs: net.n_inputs(),
            out: vec![0.0; net.n_outputs()],
            bus_v: [bus_v[0].0, bus_v[1].0, bus_v[2].0],
            inj_i: [inj_i[0].0, inj_i[1].0, inj_i[2].0],
            v_g: Waveform::new("V_g", 0.0, cfg.dt),
            i_g: Waveform::new("I_g", 0.0, cfg.dt),
        }),
        plant_ports_in,
        plant_ports_out,
    );

    let ctrl_ports_in: Vec<PortSpec> =
        (0..6).map(|_| PortSpec::new(1).with_period(dt_ctrl)).collect();
    // One-sample delay on the command outputs breaks the plant/controller
    // algebraic loop.
    let ctrl_ports_out: Vec<PortSpec> =
        (0..3).map(|_| PortSpec::new(1).with_period(dt_ctrl).with_delay(1)).collect();
    let nominal_omega = TAU * p.grid.frequency;
    let ctrl = cluster.add_module(
        "controller",
        Box::new(GflController {
            pll: SrfPll::with_gains(nominal_omega, dt_ctrl, p.pll_kp, p.pll_ki),
            lpf_p: LowPassFilter::power_filter_1khz(),
            lpf_q: LowPassFilter::power_filter_1khz(),
            lpf_vsd: LowPassFilter::power_filter_1khz(),
            pi_p: PiController::new(p.power_kp, p.power_ki, dt_ctrl),
            pi_q: PiController::new(p.power_kp, p.power_ki, dt_ctrl),
            p_profile: p.p_ref.clone(),
            q_profile: p.q_ref.clone(),
            synchronized: false,
            p: Waveform::new("P", 0.0, dt_ctrl),
            q: Waveform::new("Q", 0.0, dt_ctrl),
            p_ref: Waveform::new("P_ref", 0.0, dt_ctrl),
            q_ref: Waveform::new("Q_ref", 0.0, dt_ctrl),
        }),
        ctrl_ports_in,
        ctrl_ports_out,
    );

    for k in 0..6 {
        cluster.connect(plant, k, ctrl, k)?;
    }
    for k in 0..3 {
        cluster.connect(ctrl, k, plant, k)?;
    }

    let mut exec = TdfExecutor::new(cluster)?;
    exec.run_for(cfg.duration)?;

    let c = exec.module::<GflController>(ctrl).unwrap();
    let mut ws =
        vec![c.p.clone(), c.q.clone(), c.p_ref.clone(), c.q_ref.clone()];
    let pl = exec.module::<GflPlant>(plant).unwrap();
    ws.push(pl.v_g.clone());
    ws.push(pl.i_g.clone());
    Ok(ws)
}

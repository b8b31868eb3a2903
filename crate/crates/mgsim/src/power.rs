//! Reusable three-phase grid building blocks assembled from ELN primitives:
//! ideal grid source, lossy transmission line, resistive load, controlled
//! current injection with snubber, and VI measurement.

use std::f64::consts::TAU;

use crate::eln::{ElnNetlist, InputId, NodeId, OutputId};

/// Instantaneous values of the three phases (V or A).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreePhaseFrame {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub time: f64,
}

impl ThreePhaseFrame {
    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

/// Ideal balanced three-phase source.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GridSourceParams {
    /// Line-to-line RMS voltage, V.
    pub vll_rms: f64,
    pub frequency: f64,
    /// Common phase offset added to all three phases, rad.
    pub phase_offset: f64,
}

impl Default for GridSourceParams {
    fn default() -> Self {
        Self { vll_rms: 480.0, frequency: 60.0, phase_offset: 0.0 }
    }
}

impl GridSourceParams {
    /// Peak phase voltage Vpk = Vll_rms * sqrt(2) / sqrt(3).
    pub fn peak_phase_voltage(&self) -> f64 {
        self.vll_rms * 2f64.sqrt() / 3f64.sqrt()
    }
}

/// Phase a = Vpk cos(2*pi*f*t + offset), b and c shifted by -+ 2*pi/3.
pub fn grid_source_sample(p: &GridSourceParams, t: f64) -> ThreePhaseFrame {
    let vpk = p.peak_phase_voltage();
    let angle = TAU * p.frequency * t + p.phase_offset;
    ThreePhaseFrame {
        a: vpk * angle.cos(),
        b: vpk * (angle - TAU / 3.0).cos(),
        c: vpk * (angle + TAU / 3.0).cos(),
        time: t,
    }
}

/// Single-section lossy line: series R-L per phase, with a damped shunt
/// branch (R in series with C) to ground at the receiving end.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct LineParams {
    pub r_series: f64,
    pub l_series: f64,
    pub r_shunt: f64,
    pub c_shunt: f64,
}

impl Default for LineParams {
    fn default() -> Self {
        Self { r_series: 0.01, l_series: 1e-4, r_shunt: 0.15, c_shunt: 80e-6 }
    }
}

/// Controlled current injection branch: per phase a TDF-driven current
/// source in parallel with a parasitic resistance and a snubber capacitor.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SnubberParams {
    pub r_parasitic: f64,
    pub c_snubber: f64,
}

impl Default for SnubberParams {
    fn default() -> Self {
        Self { r_parasitic: 10e3, c_snubber: 10e-6 }
    }
}

/// Three controlled voltage sources against ground, one per phase; feed them
/// from [`grid_source_sample`] each step.
pub fn add_grid_source(net: &mut ElnNetlist, nodes: [NodeId; 3], prefix: &str) -> [InputId; 3] {
    let mut ids = [InputId(0); 3];
    for (k, phase) in ["a", "b", "c"].iter().enumerate() {
        ids[k] = net.controlled_voltage_source(
            &format!("{prefix}_v{phase}"),
            nodes[k],
            ElnNetlist::GROUND,
        );
    }
    ids
}

/// Series R-L from `input` to `output` per phase, with the damped R-C shunt
/// branch from the output (receiving) end to ground. Returns the per-phase
/// ammeter outputs reading the line current delivered to the receiving end.
pub fn add_transmission_line(
    net: &mut ElnNetlist,
    p: &LineParams,
    input: [NodeId; 3],
    output: [NodeId; 3],
    prefix: &str,
) -> [OutputId; 3] {
    let mut currents = [OutputId(0); 3];
    for (k, phase) in ["a", "b", "c"].iter().enumerate() {
        let mid = net.node(&format!("{prefix}_mid_{phase}"));
        let tap = net.node(&format!("{prefix}_tap_{phase}"));
        net.resistor(&format!("{prefix}_rs_{phase}"), input[k], mid, p.r_series);
        net.inductor(&format!("{prefix}_ls_{phase}"), mid, tap, p.l_series);
        // Ammeter in series at the receiving end.
        currents[k] = net.current_sink(&format!("{prefix}_i_{phase}"), tap, output[k]);
        let shn = net.node(&format!("{prefix}_shn_{phase}"));
        net.resistor(&format!("{prefix}_rsh_{phase}"), output[k], shn, p.r_shunt);
        net.capacitor(&format!("{prefix}_csh_{phase}"), shn, ElnNetlist::GROUND, p.c_shunt);
    }
    currents
}

/// Wye-connected, solidly grounded resistive load, `r_phase` per phase.
pub fn add_resistive_load(net: &mut ElnNetlist, bus: [NodeId; 3], r_phase: f64, prefix: &str) {
    for (k, phase) in ["a", "b", "c"].iter().enumerate() {
        net.resistor(&format!("{prefix}_r_{phase}"), bus[k], ElnNetlist::GROUND, r_phase);
    }
}

/// Controlled three-phase current injector with parasitic R and snubber C.
/// Returns (control inputs, delivered-current ammeter outputs); the ammeter
/// reads the net current flowing from the injector into the bus, snubber
/// current included.
pub fn add_controlled_injector(
    net: &mut ElnNetlist,
    snubber: &SnubberParams,
    bus: [NodeId; 3],
    prefix: &str,
) -> ([InputId; 3], [OutputId; 3]) {
    let mut inputs = [InputId(0); 3];
    let mut outputs = [OutputId(0); 3];
    for (k, phase) in ["a", "b", "c"].iter().enumerate() {
        let inj = net.node(&format!("{prefix}_inj_{phase}"));
        inputs[k] =
            net.controlled_current_source(&format!("{prefix}_src_{phase}"), inj, ElnNetlist::GROUND);
        net.resistor(&format!("{prefix}_rp_{phase}"), inj, ElnNetlist::GROUND, snubber.r_parasitic);
        net.capacitor(&format!("{prefix}_cs_{phase}"), inj, ElnNetlist::GROUND, snubber.c_snubber);
        outputs[k] = net.current_sink(&format!("{prefix}_i_{phase}"), inj, bus[k]);
    }
    (inputs, outputs)
}

/// Voltmeter per phase across (nodes, ground).
pub fn add_voltage_measurement(
    net: &mut ElnNetlist,
    nodes: [NodeId; 3],
    prefix: &str,
) -> [OutputId; 3] {
    let mut outputs = [OutputId(0); 3];
    for (k, phase) in ["a", "b", "c"].iter().enumerate() {
        outputs[k] =
            net.voltage_sink(&format!("{prefix}_v_{phase}"), nodes[k], ElnNetlist::GROUND);
    }
    outputs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::instantaneous_pq;
    use crate::eln::{assemble, Integration};
    use approx::assert_relative_eq;

    #[test]
    fn grid_source_peak_and_balance() {
        let p = GridSourceParams::default();
        let f0 = grid_source_sample(&p, 0.0);
        assert!((f0.a - 391.92).abs() < 0.01, "peak = {}", f0.a);
        for n in 0..100 {
            let f = grid_source_sample(&p, n as f64 * 1.7e-4);
            assert!((f.a + f.b + f.c).abs() < 1e-9 * p.peak_phase_voltage());
        }
        let f_cycle = grid_source_sample(&p, 1.0 / 60.0);
        assert!((f_cycle.a - f0.a).abs() < 1e-9);
        assert!((f_cycle.b - f0.b).abs() < 1e-9);
    }

    fn bus_nodes(net: &mut ElnNetlist, prefix: &str) -> [NodeId; 3] {
        [
            net.node(&format!("{prefix}_a")),
            net.node(&format!("{prefix}_b")),
            net.node(&format!("{prefix}_c")),
        ]
    }

    /// Grid + line + load testbench; returns (P, Q, source P) in late steady
    /// state plus per-step ripple extrema of P.
    fn run_grid_load(line: LineParams, r_load: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut net = ElnNetlist::new();
        let src = bus_nodes(&mut net, "src");
        let bus = bus_nodes(&mut net, "bus");
        let grid_in = add_grid_source(&mut net, src, "grid");
        let line_i = add_transmission_line(&mut net, &line, src, bus, "line");
        add_resistive_load(&mut net, bus, r_load, "load");
        let bus_v = add_voltage_measurement(&mut net, bus, "meas");
        let src_v = add_voltage_measurement(&mut net, src, "srcmeas");
        let dt = 50e-6;
        let mut sys = assemble(&net, dt, Integration::Trapezoidal).unwrap();
        let n_out = net.n_outputs();
        let gp = GridSourceParams::default();
        let mut out = vec![0.0; n_out];
        let (mut ps, mut qs, mut psrc, mut res) = (vec![], vec![], vec![], vec![]);
        let steps = (0.3 / dt) as usize;
        for k in 0..steps {
            let t = k as f64 * dt;
            let g = grid_source_sample(&gp, t);
            let mut inputs = [0.0; 3];
            for (id, v) in grid_in.iter().zip(g.as_array()) {
                inputs[id.0] = v;
            }
            sys.step(&inputs, &mut out).unwrap();
            res.push(sys.kcl_residual());
            if t > 0.2 {
                let v = ThreePhaseFrame {
                    a: out[bus_v[0].0],
                    b: out[bus_v[1].0],
                    c: out[bus_v[2].0],
                    time: t,
                };
                let i = ThreePhaseFrame {
                    a: out[line_i[0].0],
                    b: out[line_i[1].0],
                    c: out[line_i[2].0],
                    time: t,
                };
                let (p, q) = instantaneous_pq(&v, &i);
                // Source-side power uses the same line current at the
                // sending terminals.
                let vsrc = ThreePhaseFrame {
                    a: out[src_v[0].0],
                    b: out[src_v[1].0],
                    c: out[src_v[2].0],
                    time: t,
                };
                let (p_in, _) = instantaneous_pq(&vsrc, &i);
                ps.push(p);
                qs.push(q);
                psrc.push(p_in);
            }
        }
        (ps, qs, psrc, res)
    }

    #[test]
    fn balanced_load_constant_power_and_conservation() {
        let (ps, qs, psrc, res) = run_grid_load(LineParams::default(), 10.0);
        let mean_p = ps.iter().sum::<f64>() / ps.len() as f64;
        // (3/2) Vpk^2 / R, with small series-drop and shunt-loss corrections.
        let ideal = 1.5 * 391.92f64.powi(2) / 10.0;
        assert!((mean_p - ideal).abs() / ideal < 0.01, "P = {mean_p}, ideal {ideal}");
        let ripple = ps.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        assert!(
            (ripple.1 - ripple.0) < 2e-2 * mean_p,
            "P ripple {} of {mean_p}",
            ripple.1 - ripple.0
        );
        // The resistive load consumes no vars, so the measured reactive
        // power is the shunt capacitor's generation: Q = -(3/2) Vpk^2 w C.
        let mean_q = qs.iter().sum::<f64>() / qs.len() as f64;
        let q_shunt = -1.5 * 391.92f64.powi(2) * TAU * 60.0 * 80e-6;
        assert!(
            (mean_q - q_shunt).abs() < 0.1 * q_shunt.abs(),
            "Q = {mean_q}, shunt prediction {q_shunt}"
        );
        // Source power = line loss + receiving-end power; the series R is
        // tiny, so the two agree closely.
        let mean_src = psrc.iter().sum::<f64>() / psrc.len() as f64;
        assert!(mean_src >= mean_p - 1e-9);
        assert!((mean_src - mean_p) / mean_src < 0.005);
        assert!(res.iter().all(|&r| r < 1e-9), "KCL residual too large");
    }

    #[test]
    fn near_zero_length_line_passes_voltage_through() {
        let line =
            LineParams { r_series: 1e-6, l_series: 1e-9, r_shunt: 1e6, c_shunt: 1e-12 };
        let mut net = ElnNetlist::new();
        let src = bus_nodes(&mut net, "src");
        let bus = bus_nodes(&mut net, "bus");
        add_grid_source(&mut net, src, "grid");
        add_transmission_line(&mut net, &line, src, bus, "line");
        add_resistive_load(&mut net, bus, 1000.0, "load");
        let bus_v = add_voltage_measurement(&mut net, bus, "meas");
        let mut sys = assemble(&net, 50e-6, Integration::Trapezoidal).unwrap();
        let gp = GridSourceParams::default();
        let mut out = vec![0.0; net.n_outputs()];
        for k in 0..200 {
            let t = k as f64 * 50e-6;
            let g = grid_source_sample(&gp, t);
            sys.step(&[g.a, g.b, g.c], &mut out).unwrap();
            assert!((out[bus_v[0].0] - g.a).abs() < 1e-2 * 391.92);
        }
    }

    #[test]
    fn injector_with_zero_command_is_passive() {
        let mut net = ElnNetlist::new();
        let bus = bus_nodes(&mut net, "bus");
        let (inputs, delivered) =
            add_controlled_injector(&mut net, &SnubberParams::default(), bus, "pv");
        add_resistive_load(&mut net, bus, 1000.0, "load");
        let mut sys = assemble(&net, 50e-6, Integration::Trapezoidal).unwrap();
        let mut out = vec![0.0; net.n_outputs()];
        let zeros = vec![0.0; inputs.len()];
        for _ in 0..100 {
            sys.step(&zeros, &mut out).unwrap();
            for d in delivered {
                assert!(out[d.0].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn injector_dc_command_reaches_load_after_snubber_charge() {
        let mut net = ElnNetlist::new();
        let bus = bus_nodes(&mut net, "bus");
        let (_inputs, delivered) =
            add_controlled_injector(&mut net, &SnubberParams::default(), bus, "pv");
        add_resistive_load(&mut net, bus, 10.0, "load");
        let mut sys = assemble(&net, 50e-6, Integration::Trapezoidal).unwrap();
        let mut out = vec![0.0; net.n_outputs()];
        // 1 A DC per phase; after the snubber settles the load carries
        // nearly all of it (r_parasitic >> r_load).
        for _ in 0..2000 {
            sys.step(&[1.0, 1.0, 1.0], &mut out).unwrap();
        }
        for d in delivered {
            assert_relative_eq!(out[d.0], 1.0, max_relative = 2e-3);
        }
    }

    #[test]
    fn vi_measurement_reads_source_and_ohms_law_current() {
        let mut net = ElnNetlist::new();
        let bus = bus_nodes(&mut net, "bus");
        add_grid_source(&mut net, bus, "grid");
        let load_mid = bus_nodes(&mut net, "mid");
        let mut amps = [OutputId(0); 3];
        for k in 0..3 {
            amps[k] = net.current_sink(&format!("am_{k}"), bus[k], load_mid[k]);
            net.resistor(&format!("r_{k}"), load_mid[k], ElnNetlist::GROUND, 1000.0);
        }
        let volts = add_voltage_measurement(&mut net, bus, "vm");
        let mut sys = assemble(&net, 50e-6, Integration::Trapezoidal).unwrap();
        let gp = GridSourceParams::default();
        let mut out = vec![0.0; net.n_outputs()];
        let mut peak_i: f64 = 0.0;
        for k in 0..400 {
            let t = k as f64 * 50e-6;
            let g = grid_source_sample(&gp, t);
            sys.step(&[g.a, g.b, g.c], &mut out).unwrap();
            assert_relative_eq!(out[volts[0].0], g.a, max_relative = 1e-9, epsilon = 1e-9);
            peak_i = peak_i.max(out[amps[0].0].abs());
        }
        assert!((peak_i - 0.3919).abs() < 1e-3, "peak current {peak_i}");
    }
}

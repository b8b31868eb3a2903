//! Electrical linear network solver.
//!
//! A netlist of linear primitives is assembled by modified nodal analysis:
//! node voltages plus one branch current per voltage-defined element.
//! Dynamic elements are replaced by their discrete companion models
//! (trapezoidal by default, backward Euler as a startup-damping fallback)
//! and the system matrix is factorized once per (netlist, dt).
//!
//! Controlled sources take their value from a named input each step; sinks
//! report node voltages and branch currents. Networks here stay small
//! (tens of nodes), so a dense direct solve is used throughout.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ElnError {
    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),
    #[error("singular MNA system: {0}")]
    SingularSystem(String),
    #[error("non-finite solution at t={0}s")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Index into the per-step controlled-source input slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputId(pub usize);

/// Index into the per-step sink-reading slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputId(pub usize);

#[derive(Debug, Clone)]
pub enum Element {
    Resistor { name: String, a: NodeId, b: NodeId, ohms: f64 },
    Capacitor { name: String, a: NodeId, b: NodeId, farads: f64, v0: f64 },
    Inductor { name: String, a: NodeId, b: NodeId, henries: f64, i0: f64 },
    /// Constant source; `pos` is held `volts` above `neg`.
    VoltageSource { name: String, pos: NodeId, neg: NodeId, volts: f64 },
    /// Constant source injecting `amps` into `pos`, out of `neg`.
    CurrentSource { name: String, pos: NodeId, neg: NodeId, amps: f64 },
    ControlledVoltageSource { name: String, pos: NodeId, neg: NodeId, input: InputId },
    ControlledCurrentSource { name: String, pos: NodeId, neg: NodeId, input: InputId },
    /// Voltmeter across (pos, neg); no electrical effect.
    VoltageSink { name: String, pos: NodeId, neg: NodeId, output: OutputId },
    /// Ammeter in series: a zero-volt branch from `pos` to `neg`, reading the
    /// current flowing pos -> neg.
    CurrentSink { name: String, pos: NodeId, neg: NodeId, output: OutputId },
}

impl Element {
    fn name(&self) -> &str {
        match self {
            Element::Resistor { name, .. }
            | Element::Capacitor { name, .. }
            | Element::Inductor { name, .. }
            | Element::VoltageSource { name, .. }
            | Element::CurrentSource { name, .. }
            | Element::ControlledVoltageSource { name, .. }
            | Element::ControlledCurrentSource { name, .. }
            | Element::VoltageSink { name, .. }
            | Element::CurrentSink { name, .. } => name,
        }
    }
}

/// Node/branch circuit description. Ground is created up front as node 0.
#[derive(Debug, Clone, Default)]
pub struct ElnNetlist {
    node_names: Vec<String>,
    elements: Vec<Element>,
    n_inputs: usize,
    n_outputs: usize,
}

impl ElnNetlist {
    pub fn new() -> Self {
        Self { node_names: vec!["gnd".to_string()], ..Default::default() }
    }

    pub const GROUND: NodeId = NodeId(0);

    /// Declare (or look up) a named node.
    pub fn node(&mut self, name: &str) -> NodeId {
        if let Some(i) = self.node_names.iter().position(|n| n == name) {
            NodeId(i)
        } else {
            self.node_names.push(name.to_string());
            NodeId(self.node_names.len() - 1)
        }
    }

    /// Register a controlled-source input slot.
    pub fn input(&mut self) -> InputId {
        self.n_inputs += 1;
        InputId(self.n_inputs - 1)
    }

    /// Register a sink output slot.
    pub fn output(&mut self) -> OutputId {
        self.n_outputs += 1;
        OutputId(self.n_outputs - 1)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn resistor(&mut self, name: &str, a: NodeId, b: NodeId, ohms: f64) {
        self.elements.push(Element::Resistor { name: name.into(), a, b, ohms });
    }

    pub fn capacitor(&mut self, name: &str, a: NodeId, b: NodeId, farads: f64) {
        self.capacitor_ic(name, a, b, farads, 0.0);
    }

    pub fn capacitor_ic(&mut self, name: &str, a: NodeId, b: NodeId, farads: f64, v0: f64) {
        self.elements.push(Element::Capacitor { name: name.into(), a, b, farads, v0 });
    }

    pub fn inductor(&mut self, name: &str, a: NodeId, b: NodeId, henries: f64) {
        self.inductor_ic(name, a, b, henries, 0.0);
    }

    pub fn inductor_ic(&mut self, name: &str, a: NodeId, b: NodeId, henries: f64, i0: f64) {
        self.elements.push(Element::Inductor { name: name.into(), a, b, henries, i0 });
    }

    pub fn voltage_source(&mut self, name: &str, pos: NodeId, neg: NodeId, volts: f64) {
        self.elements.push(Element::VoltageSource { name: name.into(), pos, neg, volts });
    }

    pub fn current_source(&mut self, name: &str, pos: NodeId, neg: NodeId, amps: f64) {
        self.elements.push(Element::CurrentSource { name: name.into(), pos, neg, amps });
    }

    pub fn controlled_voltage_source(&mut self, name: &str, pos: NodeId, neg: NodeId) -> InputId {
        let input = self.input();
        self.elements.push(Element::ControlledVoltageSource { name: name.into(), pos, neg, input });
        input
    }

    pub fn controlled_current_source(&mut self, name: &str, pos: NodeId, neg: NodeId) -> InputId {
        let input = self.input();
        self.elements.push(Element::ControlledCurrentSource { name: name.into(), pos, neg, input });
        input
    }

    pub fn voltage_sink(&mut self, name: &str, pos: NodeId, neg: NodeId) -> OutputId {
        let output = self.output();
        self.elements.push(Element::VoltageSink { name: name.into(), pos, neg, output });
        output
    }

    pub fn current_sink(&mut self, name: &str, pos: NodeId, neg: NodeId) -> OutputId {
        let output = self.output();
        self.elements.push(Element::CurrentSink { name: name.into(), pos, neg, output });
        output
    }

    fn validate(&self) -> Result<(), ElnError> {
        for e in &self.elements {
            let bad = |what: &str| {
                Err(ElnError::InvalidNetlist(format!("{} on element {}", what, e.name())))
            };
            match e {
                Element::Resistor { ohms, .. } if *ohms <= 0.0 => return bad("R must be > 0"),
                Element::Capacitor { farads, .. } if *farads <= 0.0 => return bad("C must be > 0"),
                Element::Inductor { henries, .. } if *henries <= 0.0 => return bad("L must be > 0"),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Integration rule for the dynamic-element companion models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integration {
    #[default]
    Trapezoidal,
    BackwardEuler,
}

struct CapState {
    a: usize,
    b: usize,
    g: f64,
    v: f64,
    i: f64,
}

struct IndState {
    a: usize,
    b: usize,
    g: f64,
    v: f64,
    i: f64,
}

enum RhsEntry {
    /// Constant current injected into node (index, amps) / out of (index).
    FixedCurrent { pos: usize, neg: usize, amps: f64 },
    ControlledCurrent { pos: usize, neg: usize, input: usize },
    FixedVoltage { row: usize, volts: f64 },
    ControlledVoltage { row: usize, input: usize },
}

enum SinkEntry {
    Voltage { pos: usize, neg: usize, output: usize },
    Current { row: usize, output: usize },
}

/// Solver-ready system: factorized MNA matrix plus dynamic-element state.
pub struct ElnSystem {
    dt: f64,
    method: Integration,
    n_nodes: usize, // including ground at index 0
    dim: usize,
    a_mat: DMatrix<f64>,
    lu: nalgebra::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    caps: Vec<CapState>,
    inds: Vec<IndState>,
    rhs_entries: Vec<RhsEntry>,
    sinks: Vec<SinkEntry>,
    n_inputs: usize,
    n_outputs: usize,
    node_names: Vec<String>,
    time: f64,
    steps: u64,
    solution: DVector<f64>,
    last_rhs: DVector<f64>,
}

/// Assemble the MNA system for a fixed step `dt` and factorize it once.
pub fn assemble(netlist: &ElnNetlist, dt: f64, method: Integration) -> Result<ElnSystem, ElnError> {
    if dt <= 0.0 {
        return Err(ElnError::InvalidNetlist("dt must be positive".into()));
    }
    netlist.validate()?;

    let n_nodes = netlist.node_names.len();
    let n_branches = netlist
        .elements
        .iter()
        .filter(|e| {
            matches!(
                e,
                Element::VoltageSource { .. }
                    | Element::ControlledVoltageSource { .. }
                    | Element::CurrentSink { .. }
            )
        })
        .count();
    // Unknowns: voltages of non-ground nodes, then branch currents. Row/col
    // index of node k is k-1; ground contributions are dropped.
    let nv = n_nodes - 1;
    let dim = nv + n_branches;
    if dim == 0 {
        return Err(ElnError::InvalidNetlist("empty network".into()));
    }
    let mut a_mat = DMatrix::<f64>::zeros(dim, dim);

    let node = |n: NodeId| -> Option<usize> { if n.0 == 0 { None } else { Some(n.0 - 1) } };
    let stamp_g = |a_mat: &mut DMatrix<f64>, na: Option<usize>, nb: Option<usize>, g: f64| {
        if let Some(i) = na {
            a_mat[(i, i)] += g;
        }
        if let Some(j) = nb {
            a_mat[(j, j)] += g;
        }
        if let (Some(i), Some(j)) = (na, nb) {
            a_mat[(i, j)] -= g;
            a_mat[(j, i)] -= g;
        }
    };

    let mut caps = Vec::new();
    let mut inds = Vec::new();
    let mut rhs_entries = Vec::new();
    let mut sinks = Vec::new();
    let mut branch = 0usize;

    for e in &netlist.elements {
        match e {
            Element::Resistor { a, b, ohms, .. } => {
                stamp_g(&mut a_mat, node(*a), node(*b), 1.0 / ohms);
            }
            Element::Capacitor { a, b, farads, v0, .. } => {
                let g = match method {
                    Integration::Trapezoidal => 2.0 * farads / dt,
                    Integration::BackwardEuler => farads / dt,
                };
                stamp_g(&mut a_mat, node(*a), node(*b), g);
                caps.push(CapState { a: a.0, b: b.0, g, v: *v0, i: 0.0 });
            }
            Element::Inductor { a, b, henries, i0, .. } => {
                let g = match method {
                    Integration::Trapezoidal => dt / (2.0 * henries),
                    Integration::BackwardEuler => dt / henries,
                };
                stamp_g(&mut a_mat, node(*a), node(*b), g);
                inds.push(IndState { a: a.0, b: b.0, g, v: 0.0, i: *i0 });
            }
            Element::VoltageSource { pos, neg, .. }
            | Element::ControlledVoltageSource { pos, neg, .. }
            | Element::CurrentSink { pos, neg, .. } => {
                let row = nv + branch;
                if let Some(i) = node(*pos) {
                    a_mat[(i, row)] += 1.0;
                    a_mat[(row, i)] += 1.0;
                }
                if let Some(j) = node(*neg) {
                    a_mat[(j, row)] -= 1.0;
                    a_mat[(row, j)] -= 1.0;
                }
                match e {
                    Element::VoltageSource { volts, .. } => {
                        rhs_entries.push(RhsEntry::FixedVoltage { row, volts: *volts });
                    }
                    Element::ControlledVoltageSource { input, .. } => {
                        rhs_entries.push(RhsEntry::ControlledVoltage { row, input: input.0 });
                    }
                    Element::CurrentSink { output, .. } => {
                        rhs_entries.push(RhsEntry::FixedVoltage { row, volts: 0.0 });
                        sinks.push(SinkEntry::Current { row, output: output.0 });
                    }
                    _ => unreachable!(),
                }
                branch += 1;
            }
            Element::CurrentSource { pos, neg, amps, .. } => {
                rhs_entries.push(RhsEntry::FixedCurrent { pos: pos.0, neg: neg.0, amps: *amps });
            }
            Element::ControlledCurrentSource { pos, neg, input, .. } => {
                rhs_entries.push(RhsEntry::ControlledCurrent {
                    pos: pos.0,
                    neg: neg.0,
                    input: input.0,
                });
            }
            Element::VoltageSink { pos, neg, output, .. } => {
                sinks.push(SinkEntry::Voltage { pos: pos.0, neg: neg.0, output: output.0 });
            }
        }
    }

    let lu = a_mat.clone().full_piv_lu();
    // A floating subcircuit or a source loop shows up as a (near-)zero pivot.
    let diag = lu.u().diagonal();
    let max_pivot = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let min_pivot = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if !(min_pivot > max_pivot * 1e-12) {
        return Err(ElnError::SingularSystem(
            "MNA matrix is not invertible (floating node or inconsistent sources)".into(),
        ));
    }

    Ok(ElnSystem {
        dt,
        method,
        n_nodes,
        dim,
        a_mat,
        lu,
        caps,
        inds,
        rhs_entries,
        sinks,
        n_inputs: netlist.n_inputs,
        n_outputs: netlist.n_outputs,
        node_names: netlist.node_names.clone(),
        time: 0.0,
        steps: 0,
        solution: DVector::zeros(dim),
        last_rhs: DVector::zeros(dim),
    })
}

impl ElnSystem {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Advance one step. `inputs` feeds the controlled sources in
    /// registration order; sink readings come back in registration order.
    pub fn step(&mut self, inputs: &[f64], outputs: &mut [f64]) -> Result<(), ElnError> {
        assert_eq!(inputs.len(), self.n_inputs, "controlled-input count mismatch");
        assert_eq!(outputs.len(), self.n_outputs, "sink-reading count mismatch");

        let mut z = DVector::<f64>::zeros(self.dim);
        let inject = |z: &mut DVector<f64>, node: usize, amps: f64| {
            if node > 0 {
                z[node - 1] += amps;
            }
        };

        for e in &self.rhs_entries {
            match e {
                RhsEntry::FixedCurrent { pos, neg, amps } => {
                    inject(&mut z, *pos, *amps);
                    inject(&mut z, *neg, -*amps);
                }
                RhsEntry::ControlledCurrent { pos, neg, input } => {
                    inject(&mut z, *pos, inputs[*input]);
                    inject(&mut z, *neg, -inputs[*input]);
                }
                RhsEntry::FixedVoltage { row, volts } => z[*row] = *volts,
                RhsEntry::ControlledVoltage { row, input } => z[*row] = inputs[*input],
            }
        }
        // Companion history sources. Capacitor: i = g*v - Ih with
        // Ih = g*v_n + i_n (trapezoidal) or g*v_n (backward Euler); the
        // history current injects into node a. Inductor: i = g*v + Ih with
        // Ih = i_n + g*v_n (trapezoidal) or i_n; injects into node b.
        for c in &self.caps {
            let ih = match self.method {
                Integration::Trapezoidal => c.g * c.v + c.i,
                Integration::BackwardEuler => c.g * c.v,
            };
            inject(&mut z, c.a, ih);
            inject(&mut z, c.b, -ih);
        }
        for l in &self.inds {
            let ih = match self.method {
                Integration::Trapezoidal => l.i + l.g * l.v,
                Integration::BackwardEuler => l.i,
            };
            inject(&mut z, l.a, -ih);
            inject(&mut z, l.b, ih);
        }

        let x = self
            .lu
            .solve(&z)
            .ok_or_else(|| ElnError::SingularSystem("factorized solve failed".into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ElnError::NonFinite(self.time));
        }

        let v_of = |node: usize| if node == 0 { 0.0 } else { x[node - 1] };
        for c in &mut self.caps {
            let v = v_of(c.a) - v_of(c.b);
            let ih = match self.method {
                Integration::Trapezoidal => c.g * c.v + c.i,
                Integration::BackwardEuler => c.g * c.v,
            };
            c.i = c.g * v - ih;
            c.v = v;
        }
        for l in &mut self.inds {
            let v = v_of(l.a) - v_of(l.b);
            let ih = match self.method {
                Integration::Trapezoidal => l.i + l.g * l.v,
                Integration::BackwardEuler => l.i,
            };
            l.i = l.g * v + ih;
            l.v = v;
        }
        for s in &self.sinks {
            match s {
                SinkEntry::Voltage { pos, neg, output } => {
                    outputs[*output] = v_of(*pos) - v_of(*neg);
                }
                SinkEntry::Current { row, output } => outputs[*output] = x[*row],
            }
        }
        self.solution = x;
        self.last_rhs = z;
        self.steps += 1;
        self.time = self.steps as f64 * self.dt;
        Ok(())
    }

    /// Worst KCL residual over non-ground nodes after the last solve,
    /// relative to the norm of the injected currents.
    pub fn kcl_residual(&self) -> f64 {
        let r = &self.a_mat * &self.solution - &self.last_rhs;
        let nv = self.n_nodes - 1;
        let max_node = (0..nv).fold(0.0f64, |m, i| m.max(r[i].abs()));
        let scale = self.last_rhs.rows(0, nv).norm().max(self.solution.norm()).max(1.0);
        max_node / scale
    }

    pub fn node_voltage(&self, name: &str) -> Option<f64> {
        let idx = self.node_names.iter().position(|n| n == name)?;
        Some(if idx == 0 { 0.0 } else { self.solution[idx - 1] })
    }

    pub fn capacitor_voltages(&self) -> Vec<f64> {
        self.caps.iter().map(|c| c.v).collect()
    }

    pub fn inductor_currents(&self) -> Vec<f64> {
        self.inds.iter().map(|l| l.i).collect()
    }

    /// Total stored energy given the element values (the compact state keeps
    /// only companion conductances), for conservation checks.
    pub fn stored_energy_with(&self, cap_farads: &[f64], ind_henries: &[f64]) -> f64 {
        let e_c: f64 = self
            .caps
            .iter()
            .zip(cap_farads)
            .map(|(c, &farads)| 0.5 * farads * c.v * c.v)
            .sum();
        let e_l: f64 = self
            .inds
            .iter()
            .zip(ind_henries)
            .map(|(l, &henries)| 0.5 * henries * l.i * l.i)
            .sum();
        e_c + e_l
    }
}

/// Parameters of the open-loop EMT study circuit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmtCircuitParams {
    pub r: f64,
    pub c1: f64,
    pub c2: f64,
    pub l: f64,
}

impl Default for EmtCircuitParams {
    fn default() -> Self {
        // Series resistance is back-solved from the published charge-transfer
        // time constant; see `compute_time_constants`.
        Self { r: 0.0981, c1: 5.12e-6, c2: 10.24e-6, l: 2.2e-3 }
    }
}

/// Derived timing constants of the EMT circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConstants {
    /// Charge-transfer time constant, s.
    pub tau: f64,
    /// Natural angular frequency, rad/s.
    pub omega0: f64,
    /// Natural period, s.
    pub period: f64,
}

/// tau = R*C1*C2/(C1+C2); omega0 = 1/sqrt(L*(C1+C2)); T = 2*pi/omega0.
pub fn compute_time_constants(p: &EmtCircuitParams) -> TimeConstants {
    assert!(p.r > 0.0 && p.c1 > 0.0 && p.c2 > 0.0 && p.l > 0.0);
    let tau = p.r * p.c1 * p.c2 / (p.c1 + p.c2);
    let omega0 = 1.0 / (p.l * (p.c1 + p.c2)).sqrt();
    TimeConstants { tau, omega0, period: std::f64::consts::TAU / omega0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn voltage_divider_midpoint() {
        let mut net = ElnNetlist::new();
        let top = net.node("top");
        let mid = net.node("mid");
        net.voltage_source("v", top, ElnNetlist::GROUND, 10.0);
        net.resistor("r1", top, mid, 1000.0);
        net.resistor("r2", mid, ElnNetlist::GROUND, 1000.0);
        let vm = net.voltage_sink("meter", mid, ElnNetlist::GROUND);
        let mut sys = assemble(&net, 1e-6, Integration::Trapezoidal).unwrap();
        let mut out = vec![0.0; 1];
        sys.step(&[], &mut out).unwrap();
        assert_relative_eq!(out[vm.0], 5.0, max_relative = 1e-12);
    }

    #[test]
    fn floating_capacitor_node_is_singular() {
        let mut net = ElnNetlist::new();
        let top = net.node("top");
        let float = net.node("float");
        net.voltage_source("v", top, ElnNetlist::GROUND, 1.0);
        net.resistor("r", top, ElnNetlist::GROUND, 10.0);
        // Node `float` is only observed, never driven: its KCL row is empty.
        net.voltage_sink("probe", float, ElnNetlist::GROUND);
        match assemble(&net, 1e-6, Integration::Trapezoidal) {
            Err(ElnError::SingularSystem(_)) => {}
            other => panic!("expected SingularSystem, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn rc_step_matches_closed_form() {
        // R = 1 kOhm, C = 1 uF, 1 V step: v_C(1 ms) = 1 - e^-1.
        let mut net = ElnNetlist::new();
        let top = net.node("top");
        let cap = net.node("cap");
        net.voltage_source("v", top, ElnNetlist::GROUND, 1.0);
        net.resistor("r", top, cap, 1000.0);
        net.capacitor("c", cap, ElnNetlist::GROUND, 1e-6);
        let vm = net.voltage_sink("meter", cap, ElnNetlist::GROUND);
        let mut sys = assemble(&net, 1e-6, Integration::Trapezoidal).unwrap();
        let mut out = vec![0.0; 1];
        for _ in 0..1000 {
            sys.step(&[], &mut out).unwrap();
        }
        let expected = 1.0 - (-1.0f64).exp();
        assert!((out[vm.0] - expected).abs() < 1e-3, "v_C = {}", out[vm.0]);
    }

    #[test]
    fn lc_oscillation_energy_drift_below_point1_percent() {
        let mut net = ElnNetlist::new();
        let n = net.node("n");
        net.capacitor_ic("c", n, ElnNetlist::GROUND, 1e-6, 1.0);
        net.inductor("l", n, ElnNetlist::GROUND, 1e-3);
        let vm = net.voltage_sink("meter", n, ElnNetlist::GROUND);
        // ~200 steps per natural period.
        let mut sys = assemble(&net, 1e-6, Integration::Trapezoidal).unwrap();
        let e0 = sys.stored_energy_with(&[1e-6], &[1e-3]);
        let mut out = vec![0.0; 1];
        let mut vmax: f64 = 0.0;
        for _ in 0..10_000 {
            sys.step(&[], &mut out).unwrap();
            vmax = vmax.max(out[vm.0].abs());
        }
        let e1 = sys.stored_energy_with(&[1e-6], &[1e-3]);
        assert!((e1 - e0).abs() / e0 < 1e-3, "energy drift {}", (e1 - e0).abs() / e0);
        assert!(vmax <= 1.0 + 1e-3);
    }

    #[test]
    fn controlled_current_source_into_resistor() {
        let mut net = ElnNetlist::new();
        let n = net.node("n");
        let input = net.controlled_current_source("inj", n, ElnNetlist::GROUND);
        net.resistor("r", n, ElnNetlist::GROUND, 50.0);
        let vm = net.voltage_sink("meter", n, ElnNetlist::GROUND);
        let mut sys = assemble(&net, 1e-6, Integration::Trapezoidal).unwrap();
        let mut out = vec![0.0; 1];
        sys.step(&[2.0], &mut out).unwrap();
        let _ = input;
        assert_relative_eq!(out[vm.0], 100.0, max_relative = 1e-12);
    }

    #[test]
    fn current_sink_reads_branch_current() {
        let mut net = ElnNetlist::new();
        let top = net.node("top");
        let mid = net.node("mid");
        net.voltage_source("v", top, ElnNetlist::GROUND, 10.0);
        net.resistor("r", top, mid, 1000.0);
        let am = net.current_sink("ammeter", mid, ElnNetlist::GROUND);
        let mut sys = assemble(&net, 1e-6, Integration::Trapezoidal).unwrap();
        let mut out = vec![0.0; 1];
        sys.step(&[], &mut out).unwrap();
        assert_relative_eq!(out[am.0], 0.01, max_relative = 1e-12);
    }

    #[test]
    fn paper_circuit_time_constants() {
        let p = EmtCircuitParams::default();
        let tc = compute_time_constants(&p);
        assert!((tc.omega0 - 5440.0).abs() / 5440.0 < 0.005, "omega0 = {}", tc.omega0);
        assert!((tc.period - 1.15e-3).abs() / 1.15e-3 < 0.01, "T = {}", tc.period);
        assert!((tc.tau - 3.35e-7).abs() / 3.35e-7 < 0.02, "tau = {}", tc.tau);
    }

    #[test]
    fn symmetric_capacitors_give_tau_half_c() {
        let p = EmtCircuitParams { r: 1.0, c1: 4e-6, c2: 4e-6, l: 1e-3 };
        let tc = compute_time_constants(&p);
        assert_relative_eq!(tc.tau, 2e-6, max_relative = 1e-12);
    }
}

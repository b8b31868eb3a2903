//! Static-scheduled multirate discrete-time dataflow kernel.
//!
//! Modules declare rate/delay-annotated ports and a processing function.
//! Connected modules form a cluster; [`build_schedule`] resolves sample
//! periods, solves the balance conditions and produces a static activation
//! sequence for one hyperperiod. Port delays (`z^-1` units) break algebraic
//! loops; a zero-delay cycle is rejected at schedule-build time.
//!
//! Multirate couplings resample at the connection: a slow producer feeding a
//! fast consumer is held zero-order, a fast producer feeding a slow consumer
//! is read most-recent-sample. Initial delay samples read as the port's
//! configured initial value (0.0 by default; the upstream tooling this kernel
//! is modeled after leaves the choice open, so 0-initialization is a
//! convention of this crate).

use std::any::Any;
use std::collections::VecDeque;

use thiserror::Error;

/// Femtoseconds per second; all schedule arithmetic is exact in integer fs.
const FS_PER_SEC: f64 = 1e15;

#[derive(Debug, Error)]
pub enum TdfError {
    #[error("algebraic loop: no runnable activation among [{0}]")]
    AlgebraicLoop(String),
    #[error("rate inconsistency: {0}")]
    RateInconsistency(String),
    #[error("bad connection: {0}")]
    BadConnection(String),
    #[error("invalid port spec on {0}: {1}")]
    InvalidPort(String, String),
}

/// Processing-function failure, reported with module identity and time.
#[derive(Debug, Error)]
#[error("simulation abort in module `{module}` at t={time}s: {reason}")]
pub struct SimAbort {
    pub module: String,
    pub time: f64,
    pub reason: String,
}

/// Rate/delay/period annotation for one port.
#[derive(Debug, Clone)]
pub struct PortSpec {
    /// Samples read or written per activation.
    pub rate: usize,
    /// Initial samples inserted on the channel (z^-1 units).
    pub delay: usize,
    /// Seconds between samples at this port; inferred from the peer or the
    /// cluster base step when `None`.
    pub period: Option<f64>,
    /// Value returned for initial-delay reads.
    pub initial: f64,
}

impl PortSpec {
    pub fn new(rate: usize) -> Self {
        Self { rate, delay: 0, period: None, initial: 0.0 }
    }

    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_period(mut self, seconds: f64) -> Self {
        self.period = Some(seconds);
        self
    }

    pub fn with_initial(mut self, value: f64) -> Self {
        self.initial = value;
        self
    }
}

/// Object-safe downcast support so scenario code can take results back out of
/// an executor after a run.
pub trait AsAny {
    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

impl<T: Any> AsAny for T {
    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Sample access for one activation of a module.
pub struct TdfIo<'a> {
    inputs: &'a [Vec<f64>],
    outputs: &'a mut [Vec<f64>],
    time: f64,
}

impl TdfIo<'_> {
    /// Samples available on input port `port` for this activation
    /// (length equals the port rate).
    pub fn input(&self, port: usize) -> &[f64] {
        &self.inputs[port]
    }

    /// First sample on input port `port`.
    pub fn read(&self, port: usize) -> f64 {
        self.inputs[port][0]
    }

    /// Write sample `idx` of output port `port`.
    pub fn write_at(&mut self, port: usize, idx: usize, value: f64) {
        self.outputs[port][idx] = value;
    }

    /// Write the single sample of a rate-1 output port.
    pub fn write(&mut self, port: usize, value: f64) {
        self.outputs[port][0] = value;
    }

    /// Simulated time of this activation, seconds.
    pub fn time(&self) -> f64 {
        self.time
    }
}

/// A dataflow block: declared ports plus a processing function.
pub trait TdfModule: AsAny + Send {
    fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModuleId(pub usize);

struct Entry {
    name: String,
    inputs: Vec<PortSpec>,
    outputs: Vec<PortSpec>,
}

#[derive(Debug, Clone, Copy)]
struct Conn {
    from: (usize, usize),
    to: (usize, usize),
}

/// Dataflow graph of rate/delay-annotated modules.
pub struct TdfCluster {
    base_step: f64,
    entries: Vec<Entry>,
    modules: Vec<Box<dyn TdfModule>>,
    connections: Vec<Conn>,
}

impl TdfCluster {
    pub fn new(base_step: f64) -> Self {
        assert!(base_step > 0.0, "base step must be positive");
        Self { base_step, entries: Vec::new(), modules: Vec::new(), connections: Vec::new() }
    }

    pub fn add_module(
        &mut self,
        name: &str,
        module: Box<dyn TdfModule>,
        inputs: Vec<PortSpec>,
        outputs: Vec<PortSpec>,
    ) -> ModuleId {
        let id = ModuleId(self.entries.len());
        self.entries.push(Entry { name: name.to_string(), inputs, outputs });
        self.modules.push(module);
        id
    }

    /// Connect an output port to an input port. Every input may be driven by
    /// exactly one output.
    pub fn connect(
        &mut self,
        from: ModuleId,
        out_port: usize,
        to: ModuleId,
        in_port: usize,
    ) -> Result<(), TdfError> {
        let src = self
            .entries
            .get(from.0)
            .ok_or_else(|| TdfError::BadConnection("unknown source module".into()))?;
        if out_port >= src.outputs.len() {
            return Err(TdfError::BadConnection(format!(
                "{} has no output port {out_port}",
                src.name
            )));
        }
        let dst = self
            .entries
            .get(to.0)
            .ok_or_else(|| TdfError::BadConnection("unknown destination module".into()))?;
        if in_port >= dst.inputs.len() {
            return Err(TdfError::BadConnection(format!(
                "{} has no input port {in_port}",
                dst.name
            )));
        }
        if self.connections.iter().any(|c| c.to == (to.0, in_port)) {
            return Err(TdfError::BadConnection(format!(
                "input port {in_port} of {} already driven",
                dst.name
            )));
        }
        self.connections.push(Conn { from: (from.0, out_port), to: (to.0, in_port) });
        Ok(())
    }
}

/// One activation in the static schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation {
    pub module: usize,
    pub time_fs: u128,
}

/// Static activation sequence for one hyperperiod.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub order: Vec<Activation>,
    /// Activations per module per hyperperiod.
    pub repetitions: Vec<u64>,
    pub hyperperiod_fs: u128,
    /// Resolved activation period per module, fs.
    pub activation_period_fs: Vec<u128>,
}

impl Schedule {
    pub fn hyperperiod(&self) -> f64 {
        self.hyperperiod_fs as f64 / FS_PER_SEC
    }

    /// Module names in activation order, for test assertions.
    pub fn order_names(&self, cluster: &TdfCluster) -> Vec<String> {
        self.order.iter().map(|a| cluster.entries[a.module].name.clone()).collect()
    }
}

fn to_fs(seconds: f64) -> u128 {
    (seconds * FS_PER_SEC).round() as u128
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

/// Resolved per-connection sampling relation.
#[derive(Debug, Clone, Copy)]
struct ConnInfo {
    producer_sample_fs: u128,
    consumer_sample_fs: u128,
    delay: i64,
    initial: f64,
    out_rate: usize,
    in_rate: usize,
}

fn resolve_periods(cluster: &TdfCluster) -> Result<Vec<u128>, TdfError> {
    let n = cluster.entries.len();
    // Sample period per (module, dir, port); dir 0 = input, 1 = output.
    let mut sample_fs: Vec<[Vec<Option<u128>>; 2]> = cluster
        .entries
        .iter()
        .map(|e| [vec![None; e.inputs.len()], vec![None; e.outputs.len()]])
        .collect();

    for (m, e) in cluster.entries.iter().enumerate() {
        for (dir, ports) in [(0usize, &e.inputs), (1usize, &e.outputs)] {
            for (p, spec) in ports.iter().enumerate() {
                if spec.rate == 0 {
                    return Err(TdfError::InvalidPort(e.name.clone(), "rate must be >= 1".into()));
                }
                if let Some(period) = spec.period {
                    if period <= 0.0 {
                        return Err(TdfError::InvalidPort(
                            e.name.clone(),
                            "period must be positive".into(),
                        ));
                    }
                    sample_fs[m][dir][p] = Some(to_fs(period));
                }
            }
        }
    }

    // Activation period of a module ties its ports together: each port's
    // sample period times its rate must equal the module activation period.
    // Iterate module-level unification and cross-connection inheritance until
    // nothing changes; remaining unknowns default to the cluster base step.
    let mut act_fs: Vec<Option<u128>> = vec![None; n];
    loop {
        let mut changed = false;
        for (m, e) in cluster.entries.iter().enumerate() {
            for (dir, ports) in [(0usize, &e.inputs), (1usize, &e.outputs)] {
                for (p, spec) in ports.iter().enumerate() {
                    if let Some(s) = sample_fs[m][dir][p] {
                        let implied = s * spec.rate as u128;
                        match act_fs[m] {
                            None => {
                                act_fs[m] = Some(implied);
                                changed = true;
                            }
                            Some(a) if a != implied => {
                                return Err(TdfError::RateInconsistency(format!(
                                    "module {} ports imply activation periods {a} fs and {implied} fs",
                                    e.name
                                )));
                            }
                            _ => {}
                        }
                    } else if let Some(a) = act_fs[m] {
                        if a % spec.rate as u128 != 0 {
                            return Err(TdfError::RateInconsistency(format!(
                                "module {} activation period {a} fs not divisible by rate {}",
                                e.name, spec.rate
                            )));
                        }
                        sample_fs[m][dir][p] = Some(a / spec.rate as u128);
                        changed = true;
                    }
                }
            }
        }
        // A port with no declared period inherits the sample period of its
        // peer across the connection.
        for c in &cluster.connections {
            let (pm, pp) = c.from;
            let (cm, cp) = c.to;
            let prod = sample_fs[pm][1][pp];
            let cons = sample_fs[cm][0][cp];
            match (prod, cons) {
                (Some(s), None) => {
                    sample_fs[cm][0][cp] = Some(s);
                    changed = true;
                }
                (None, Some(s)) => {
                    sample_fs[pm][1][pp] = Some(s);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    let base = to_fs(cluster.base_step);
    Ok((0..n)
        .map(|m| {
            act_fs[m].unwrap_or_else(|| {
                // No period anywhere in this module's component of the graph:
                // the port sample period defaults to the cluster base step.
                let max_rate = cluster.entries[m]
                    .inputs
                    .iter()
                    .chain(&cluster.entries[m].outputs)
                    .map(|p| p.rate)
                    .max()
                    .unwrap_or(1);
                base * max_rate as u128
            })
        })
        .collect())
}

fn conn_infos(cluster: &TdfCluster, act_fs: &[u128]) -> Result<Vec<ConnInfo>, TdfError> {
    cluster
        .connections
        .iter()
        .map(|c| {
            let (pm, pp) = c.from;
            let (cm, cp) = c.to;
            let out_spec = &cluster.entries[pm].outputs[pp];
            let in_spec = &cluster.entries[cm].inputs[cp];
            let producer_sample_fs = act_fs[pm] / out_spec.rate as u128;
            let consumer_sample_fs = act_fs[cm] / in_spec.rate as u128;
            // The initial value is taken from whichever port declares a
            // nonzero delay; the reader wins on a tie.
            let initial = if in_spec.delay > 0 { in_spec.initial } else { out_spec.initial };
            Ok(ConnInfo {
                producer_sample_fs,
                consumer_sample_fs,
                delay: (out_spec.delay + in_spec.delay) as i64,
                initial,
                out_rate: out_spec.rate,
                in_rate: in_spec.rate,
            })
        })
        .collect()
}

impl ConnInfo {
    /// Producer sample index feeding consumer sample `i`.
    fn producer_index(&self, i: i64) -> i64 {
        let t = i as i128 * self.consumer_sample_fs as i128;
        (t / self.producer_sample_fs as i128) as i64 - self.delay
    }
}

/// Build the static activation schedule for one hyperperiod.
///
/// Deterministic: ready activations are taken in (time, declaration order).
pub fn build_schedule(cluster: &TdfCluster) -> Result<Schedule, TdfError> {
    let act_fs = resolve_periods(cluster)?;
    let infos = conn_infos(cluster, &act_fs)?;

    let hyper = act_fs.iter().copied().fold(1u128, lcm);
    let reps: Vec<u64> = act_fs.iter().map(|a| (hyper / a) as u64).collect();

    // Pending activations sorted by (time, declaration index).
    let mut pending: Vec<Activation> = Vec::new();
    for (m, &r) in reps.iter().enumerate() {
        for k in 0..r {
            pending.push(Activation { module: m, time_fs: k as u128 * act_fs[m] });
        }
    }
    pending.sort_by_key(|a| (a.time_fs, a.module));

    // Greedy dependency-driven selection. produced[c] counts tokens emitted on
    // connection c, done[m] counts completed activations.
    let mut produced: Vec<i64> = vec![0; infos.len()];
    let mut done: Vec<i64> = vec![0; cluster.entries.len()];
    let in_conns: Vec<Vec<usize>> = (0..cluster.entries.len())
        .map(|m| {
            cluster
                .connections
                .iter()
                .enumerate()
                .filter(|(_, c)| c.to.0 == m)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let out_conns: Vec<Vec<usize>> = (0..cluster.entries.len())
        .map(|m| {
            cluster
                .connections
                .iter()
                .enumerate()
                .filter(|(_, c)| c.from.0 == m)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut order = Vec::with_capacity(pending.len());
    let mut remaining: VecDeque<Activation> = pending.into();
    while !remaining.is_empty() {
        let mut fired = None;
        for (slot, act) in remaining.iter().enumerate() {
            let m = act.module;
            let a = done[m];
            let ready = in_conns[m].iter().all(|&ci| {
                let info = &infos[ci];
                let last_sample = (a + 1) * info.in_rate as i64 - 1;
                info.producer_index(last_sample) < produced[ci]
            });
            if ready {
                fired = Some(slot);
                break;
            }
        }
        match fired {
            Some(slot) => {
                let act = remaining.remove(slot).unwrap();
                done[act.module] += 1;
                for &ci in &out_conns[act.module] {
                    produced[ci] += infos[ci].out_rate as i64;
                }
                order.push(act);
            }
            None => {
                let stuck: Vec<&str> = remaining
                    .iter()
                    .map(|a| cluster.entries[a.module].name.as_str())
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                return Err(TdfError::AlgebraicLoop(stuck.join(", ")));
            }
        }
    }

    Ok(Schedule { order, repetitions: reps, hyperperiod_fs: hyper, activation_period_fs: act_fs })
}

struct ChannelBuf {
    /// Producer sample index of `deque[0]`.
    first: i64,
    deque: VecDeque<f64>,
    produced: i64,
    consumer_next: i64,
    info: ConnInfo,
}

impl ChannelBuf {
    fn read(&self, consumer_sample: i64) -> f64 {
        let j = self.info.producer_index(consumer_sample);
        if j < 0 {
            self.info.initial
        } else {
            debug_assert!(j < self.produced, "schedule violated producer availability");
            self.deque[(j - self.first) as usize]
        }
    }

    fn push(&mut self, value: f64) {
        self.deque.push_back(value);
        self.produced += 1;
    }

    fn trim(&mut self) {
        // Nothing below the index needed by the next consumer sample can be
        // read again.
        let min_needed = self.info.producer_index(self.consumer_next).max(0);
        while self.first < min_needed && !self.deque.is_empty() {
            self.deque.pop_front();
            self.first += 1;
        }
    }
}

/// Executes a cluster according to its static schedule.
pub struct TdfExecutor {
    cluster: TdfCluster,
    schedule: Schedule,
    channels: Vec<ChannelBuf>,
    in_conns: Vec<Vec<(usize, usize)>>,
    out_conns: Vec<Vec<(usize, usize)>>,
    activations_done: Vec<u64>,
    hyperperiods_done: u64,
    in_scratch: Vec<Vec<Vec<f64>>>,
    out_scratch: Vec<Vec<Vec<f64>>>,
}

impl TdfExecutor {
    pub fn new(cluster: TdfCluster) -> Result<Self, TdfError> {
        let schedule = build_schedule(&cluster)?;
        let act_fs = &schedule.activation_period_fs;
        let infos = conn_infos(&cluster, act_fs)?;
        let channels = infos
            .iter()
            .map(|info| ChannelBuf {
                first: 0,
                deque: VecDeque::new(),
                produced: 0,
                consumer_next: 0,
                info: *info,
            })
            .collect();
        let n = cluster.entries.len();
        let mut in_conns = vec![Vec::new(); n];
        let mut out_conns = vec![Vec::new(); n];
        for (ci, c) in cluster.connections.iter().enumerate() {
            out_conns[c.from.0].push((ci, c.from.1));
            in_conns[c.to.0].push((ci, c.to.1));
        }
        let in_scratch = cluster
            .entries
            .iter()
            .map(|e| e.inputs.iter().map(|p| vec![p.initial; p.rate]).collect())
            .collect();
        let out_scratch = cluster
            .entries
            .iter()
            .map(|e| e.outputs.iter().map(|p| vec![0.0; p.rate]).collect())
            .collect();
        Ok(Self {
            cluster,
            schedule,
            channels,
            in_conns,
            out_conns,
            activations_done: vec![0; n],
            hyperperiods_done: 0,
            in_scratch,
            out_scratch,
        })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Simulated time at the start of the next hyperperiod.
    pub fn time(&self) -> f64 {
        (self.hyperperiods_done as u128 * self.schedule.hyperperiod_fs) as f64 / FS_PER_SEC
    }

    /// Execute one hyperperiod of the static schedule.
    pub fn step_hyperperiod(&mut self) -> Result<(), SimAbort> {
        let base_fs = self.hyperperiods_done as u128 * self.schedule.hyperperiod_fs;
        for idx in 0..self.schedule.order.len() {
            let act = self.schedule.order[idx];
            let m = act.module;
            let a = self.activations_done[m] as i64;

            // Gather inputs.
            for &(ci, port) in &self.in_conns[m] {
                let rate = self.cluster.entries[m].inputs[port].rate;
                for s in 0..rate {
                    let sample = a * rate as i64 + s as i64;
                    self.in_scratch[m][port][s] = self.channels[ci].read(sample);
                }
                self.channels[ci].consumer_next = (a + 1) * rate as i64;
            }

            let time = (base_fs + act.time_fs) as f64 / FS_PER_SEC;
            {
                let (inputs, outputs) = (&self.in_scratch[m], &mut self.out_scratch[m]);
                let mut io = TdfIo { inputs, outputs, time };
                self.cluster.modules[m].process(&mut io).map_err(|reason| SimAbort {
                    module: self.cluster.entries[m].name.clone(),
                    time,
                    reason,
                })?;
            }

            // Publish outputs.
            for &(ci, port) in &self.out_conns[m] {
                let rate = self.cluster.entries[m].outputs[port].rate;
                for s in 0..rate {
                    let v = self.out_scratch[m][port][s];
                    self.channels[ci].push(v);
                }
                self.channels[ci].trim();
            }
            self.activations_done[m] += 1;
        }
        self.hyperperiods_done += 1;
        Ok(())
    }

    /// Run whole hyperperiods until at least `duration` seconds are covered.
    pub fn run_for(&mut self, duration: f64) -> Result<(), SimAbort> {
        let hyper = self.schedule.hyperperiod_fs;
        let target = to_fs(duration);
        let needed = target.div_ceil(hyper);
        while (self.hyperperiods_done as u128) < needed {
            self.step_hyperperiod()?;
        }
        Ok(())
    }

    /// Buffer occupancy of each channel (tokens produced but not yet consumed
    /// or trimmed), for balance checks.
    pub fn channel_occupancy(&self) -> Vec<usize> {
        self.channels.iter().map(|c| c.deque.len()).collect()
    }

    pub fn module<T: Any>(&self, id: ModuleId) -> Option<&T> {
        self.cluster.modules[id.0].as_ref().as_any().downcast_ref()
    }

    pub fn module_mut<T: Any>(&mut self, id: ModuleId) -> Option<&mut T> {
        self.cluster.modules[id.0].as_mut().as_any_mut().downcast_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pushes a constant or a preset sequence, one sample per activation.
    struct Source {
        samples: Vec<f64>,
        k: usize,
    }

    impl TdfModule for Source {
        fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
            let v = self.samples.get(self.k).copied().unwrap_or(0.0);
            self.k += 1;
            io.write(0, v);
            Ok(())
        }
    }

    /// Records everything it reads on port 0.
    struct Probe {
        seen: Vec<f64>,
    }

    impl TdfModule for Probe {
        fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
            for &v in io.input(0) {
                self.seen.push(v);
            }
            Ok(())
        }
    }

    /// out = in + feedback, with feedback wired externally through z^-1.
    struct Adder;

    impl TdfModule for Adder {
        fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
            let v = io.read(0) + io.read(1);
            io.write(0, v);
            Ok(())
        }
    }

    #[test]
    fn single_module_identity_schedule() {
        let mut cluster = TdfCluster::new(1e-3);
        cluster.add_module(
            "a",
            Box::new(Source { samples: vec![], k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        let schedule = build_schedule(&cluster).unwrap();
        assert_eq!(schedule.order_names(&cluster), ["a"]);
        assert!((schedule.hyperperiod() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn rate_two_consumer_schedules_a_a_b() {
        let mut cluster = TdfCluster::new(1e-3);
        let a = cluster.add_module(
            "a",
            Box::new(Source { samples: vec![1.0, 2.0], k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        let b =
            cluster.add_module("b", Box::new(Probe { seen: vec![] }), vec![PortSpec::new(2)], vec![]);
        cluster.connect(a, 0, b, 0).unwrap();
        let schedule = build_schedule(&cluster).unwrap();
        assert_eq!(schedule.order_names(&cluster), ["a", "a", "b"]);
        assert_eq!(schedule.repetitions, vec![2, 1]);
        assert!((schedule.hyperperiod() - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn zero_delay_cycle_is_algebraic_loop() {
        let mut cluster = TdfCluster::new(1e-3);
        let a = cluster.add_module(
            "a",
            Box::new(Adder),
            vec![PortSpec::new(1), PortSpec::new(1)],
            vec![PortSpec::new(1)],
        );
        let b = cluster.add_module(
            "b",
            Box::new(Adder),
            vec![PortSpec::new(1), PortSpec::new(1)],
            vec![PortSpec::new(1)],
        );
        let src = cluster.add_module(
            "src",
            Box::new(Source { samples: vec![], k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        cluster.connect(a, 0, b, 0).unwrap();
        cluster.connect(b, 0, a, 0).unwrap();
        cluster.connect(src, 0, a, 1).unwrap();
        let src2 = cluster.add_module(
            "src2",
            Box::new(Source { samples: vec![], k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        cluster.connect(src2, 0, b, 1).unwrap();
        match build_schedule(&cluster) {
            Err(TdfError::AlgebraicLoop(_)) => {}
            other => panic!("expected AlgebraicLoop, got {other:?}"),
        }
    }

    #[test]
    fn delay_one_feedback_reads_shifted_input() {
        // adder computes y = u + z^-1 y; with u = [1,2,3] the feedback port
        // must see [0, 1, 3] (accumulator).
        let mut cluster = TdfCluster::new(1e-3);
        let src = cluster.add_module(
            "src",
            Box::new(Source { samples: vec![1.0, 2.0, 3.0], k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        let add = cluster.add_module(
            "add",
            Box::new(Adder),
            vec![PortSpec::new(1), PortSpec::new(1).with_delay(1)],
            vec![PortSpec::new(1)],
        );
        let probe =
            cluster.add_module("probe", Box::new(Probe { seen: vec![] }), vec![PortSpec::new(1)], vec![]);
        cluster.connect(src, 0, add, 0).unwrap();
        cluster.connect(add, 0, add, 1).unwrap();
        cluster.connect(add, 0, probe, 0).unwrap();
        let mut exec = TdfExecutor::new(cluster).unwrap();
        for _ in 0..3 {
            exec.step_hyperperiod().unwrap();
        }
        let probe: &Probe = exec.module(probe).unwrap();
        assert_eq!(probe.seen, vec![1.0, 3.0, 6.0]);
    }

    #[test]
    fn pure_delay_shifts_by_d_with_leading_initial_values() {
        struct Pass;
        impl TdfModule for Pass {
            fn process(&mut self, io: &mut TdfIo<'_>) -> Result<(), String> {
                let v = io.read(0);
                io.write(0, v);
                Ok(())
            }
        }
        let mut cluster = TdfCluster::new(1e-3);
        let src = cluster.add_module(
            "src",
            Box::new(Source { samples: vec![1.0, 2.0, 3.0, 4.0, 5.0], k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        let pass =
            cluster.add_module("pass", Box::new(Pass), vec![PortSpec::new(1)], vec![PortSpec::new(1).with_delay(2)]);
        let probe =
            cluster.add_module("probe", Box::new(Probe { seen: vec![] }), vec![PortSpec::new(1)], vec![]);
        cluster.connect(src, 0, pass, 0).unwrap();
        cluster.connect(pass, 0, probe, 0).unwrap();
        let mut exec = TdfExecutor::new(cluster).unwrap();
        for _ in 0..5 {
            exec.step_hyperperiod().unwrap();
        }
        let probe: &Probe = exec.module(probe).unwrap();
        assert_eq!(probe.seen, vec![0.0, 0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn slow_to_fast_holds_each_sample() {
        // 1 kHz source into 20 kHz probe: each source sample is read 20 times.
        let mut cluster = TdfCluster::new(50e-6);
        let src = cluster.add_module(
            "ctrl",
            Box::new(Source { samples: vec![10.0, 20.0, 30.0], k: 0 }),
            vec![],
            vec![PortSpec::new(1).with_period(1e-3)],
        );
        let probe = cluster.add_module(
            "plant",
            Box::new(Probe { seen: vec![] }),
            vec![PortSpec::new(1).with_period(50e-6)],
            vec![],
        );
        cluster.connect(src, 0, probe, 0).unwrap();
        let mut exec = TdfExecutor::new(cluster).unwrap();
        exec.step_hyperperiod().unwrap();
        exec.step_hyperperiod().unwrap();
        let probe: &Probe = exec.module(probe).unwrap();
        assert_eq!(probe.seen.len(), 40);
        assert!(probe.seen[..20].iter().all(|&v| v == 10.0));
        assert!(probe.seen[20..].iter().all(|&v| v == 20.0));
    }

    #[test]
    fn fast_to_slow_reads_most_recent() {
        let mut cluster = TdfCluster::new(50e-6);
        let src = cluster.add_module(
            "plant",
            Box::new(Source { samples: (0..40).map(f64::from).collect(), k: 0 }),
            vec![],
            vec![PortSpec::new(1).with_period(50e-6)],
        );
        let probe = cluster.add_module(
            "ctrl",
            Box::new(Probe { seen: vec![] }),
            vec![PortSpec::new(1).with_period(1e-3)],
            vec![],
        );
        cluster.connect(src, 0, probe, 0).unwrap();
        let mut exec = TdfExecutor::new(cluster).unwrap();
        exec.step_hyperperiod().unwrap();
        exec.step_hyperperiod().unwrap();
        let probe: &Probe = exec.module(probe).unwrap();
        // Controller activation at t = k ms reads the plant sample of the
        // same timestamp, i.e. sample 20k.
        assert_eq!(probe.seen, vec![0.0, 20.0]);
    }

    #[test]
    fn buffer_occupancy_returns_to_initial_after_hyperperiods() {
        let mut cluster = TdfCluster::new(1e-3);
        let a = cluster.add_module(
            "a",
            Box::new(Source { samples: (0..100).map(f64::from).collect(), k: 0 }),
            vec![],
            vec![PortSpec::new(1)],
        );
        let b =
            cluster.add_module("b", Box::new(Probe { seen: vec![] }), vec![PortSpec::new(2)], vec![]);
        cluster.connect(a, 0, b, 0).unwrap();
        let mut exec = TdfExecutor::new(cluster).unwrap();
        exec.step_hyperperiod().unwrap();
        let occ1 = exec.channel_occupancy();
        for _ in 0..5 {
            exec.step_hyperperiod().unwrap();
        }
        assert_eq!(exec.channel_occupancy(), occ1);
    }

    #[test]
    fn determinism_two_identical_runs() {
        let build = || {
            let mut cluster = TdfCluster::new(1e-3);
            let src = cluster.add_module(
                "src",
                Box::new(Source { samples: (0..50).map(|i| (i as f64).sin()).collect(), k: 0 }),
                vec![],
                vec![PortSpec::new(1)],
            );
            let add = cluster.add_module(
                "add",
                Box::new(Adder),
                vec![PortSpec::new(1), PortSpec::new(1).with_delay(1)],
                vec![PortSpec::new(1)],
            );
            let probe = cluster.add_module(
                "probe",
                Box::new(Probe { seen: vec![] }),
                vec![PortSpec::new(1)],
                vec![],
            );
            cluster.connect(src, 0, add, 0).unwrap();
            cluster.connect(add, 0, add, 1).unwrap();
            cluster.connect(add, 0, probe, 0).unwrap();
            let mut exec = TdfExecutor::new(cluster).unwrap();
            for _ in 0..50 {
                exec.step_hyperperiod().unwrap();
            }
            exec.module::<Probe>(probe).unwrap().seen.clone()
        };
        let r1 = build();
        let r2 = build();
        assert_eq!(r1, r2);
        assert!(r1.iter().zip(&r2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn processing_error_reports_module_identity() {
        struct Failing;
        impl TdfModule for Failing {
            fn process(&mut self, _io: &mut TdfIo<'_>) -> Result<(), String> {
                Err("boom".into())
            }
        }
        let mut cluster = TdfCluster::new(1e-3);
        cluster.add_module("bad", Box::new(Failing), vec![], vec![]);
        let mut exec = TdfExecutor::new(cluster).unwrap();
        let err = exec.step_hyperperiod().unwrap_err();
        assert_eq!(err.module, "bad");
        assert!(err.reason.contains("boom"));
    }
}

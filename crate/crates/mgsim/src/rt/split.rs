//! Split-process DC microgrid: the plant (ELN + droop, fast step) and the
//! secondary controller (slow step) run in separate processes, each pacing
//! itself to wall time and exchanging framed samples over the relays. The
//! algebraic loop is broken by the hold-last subscriber: each side uses the
//! other's most recent published sample.

use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::control::{droop, secondary_step};
use crate::eln::ElnError;
use crate::rt::codec::RelayMessage;
use crate::rt::pacing::{IntervalLog, Pacer};
use crate::rt::relay::{Publisher, Subscriber};
use crate::scenario::dc::build_dc_system;
use crate::waveform::Waveform;

pub const PLANT_TOPIC: &str = "plant";
pub const DELTA_TOPIC: &str = "delta";

#[derive(Debug, Error)]
pub enum RtError {
    #[error("network build failed: {0}")]
    Network(#[from] ElnError),
    #[error("solver failed: {0}")]
    Solver(ElnError),
    #[error("connection failed: {0}")]
    Connection(std::io::Error),
    #[error("publish failed: {0}")]
    Publish(#[from] crate::rt::codec::CodecError),
}

/// Waveforms, publish-interval log and deadline-miss count of one side.
pub struct RtRunResult {
    pub waveforms: Vec<Waveform>,
    pub log: IntervalLog,
    pub deadline_misses: u64,
}

const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);
const STALE_AFTER: Duration = Duration::from_secs(1);

fn duration_from_secs(step: f64) -> Duration {
    Duration::from_nanos((step * 1e9).round() as u64)
}

/// Plant process: droop + ELN at `cfg.dt`, publishing (Vref, V0, i) each
/// step and applying the controller's most recent correction.
pub fn run_rt_plant(cfg: &ScenarioConfig, bind: &str, connect: &str) -> Result<RtRunResult, RtError> {
    let p = cfg.dc.plant;
    let mut sys = build_dc_system(&p, cfg.dt)?;
    let publisher = Publisher::bind(bind).map_err(RtError::Connection)?;
    let subscriber = Subscriber::connect(connect, CONNECT_TIMEOUT, STALE_AFTER)
        .map_err(RtError::Connection)?;

    let n_steps = (cfg.duration / cfg.dt).round() as u64;
    if !crate::rt::pacing::try_elevate_priority() {
        eprintln!("plant: real-time scheduling unavailable, pacing at normal priority");
    }
    let mut pacer = Pacer::new(duration_from_secs(cfg.dt));
    let epoch = pacer.epoch();
    let mut log = IntervalLog::new(PLANT_TOPIC);
    let mut v0 = Waveform::new("V0", 0.0, cfg.dt);
    let mut vref_w = Waveform::new("Vref", 0.0, cfg.dt);
    let mut delta_w = Waveform::new("delta", 0.0, cfg.dt);
    let mut i_w = Waveform::new("i", 0.0, cfg.dt);
    let mut out = [0.0f64; 2];
    let mut i_prev = 0.0;

    for k in 0..n_steps {
        let delta = subscriber
            .latest(DELTA_TOPIC)
            .message
            .and_then(|m| m.values.first().copied())
            .unwrap_or(0.0);
        let vref = droop(p.vn + delta, p.k, i_prev);
        sys.step(&[vref], &mut out).map_err(RtError::Solver)?;
        let (i, v_bus) = (out[0], out[1]);
        i_prev = i;
        v0.push(v_bus);
        vref_w.push(vref);
        delta_w.push(delta);
        i_w.push(i);

        pacer.wait();
        log.record(epoch);
        publisher.publish(&RelayMessage {
            topic: PLANT_TOPIC.into(),
            seq: k,
            sim_time: k as f64 * cfg.dt,
            wall_ns: *log.wall_ns.last().unwrap(),
            values: vec![vref, v_bus, i],
        })?;
    }

    Ok(RtRunResult {
        waveforms: vec![v0, vref_w, delta_w, i_w],
        log,
        deadline_misses: pacer.misses,
    })
}

/// Controller process: secondary integrator at the secondary period,
/// publishing the correction delta.
pub fn run_rt_controller(
    cfg: &ScenarioConfig,
    bind: &str,
    connect: &str,
) -> Result<RtRunResult, RtError> {
    let p = cfg.dc.plant;
    let period = cfg.dc.secondary_period;
    let publisher = Publisher::bind(bind).map_err(RtError::Connection)?;
    let subscriber = Subscriber::connect(connect, CONNECT_TIMEOUT, STALE_AFTER)
        .map_err(RtError::Connection)?;

    let n_steps = (cfg.duration / period).round() as u64;
    if !crate::rt::pacing::try_elevate_priority() {
        eprintln!("controller: real-time scheduling unavailable, pacing at normal priority");
    }
    let mut pacer = Pacer::new(duration_from_secs(period));
    let epoch = pacer.epoch();
    let mut log = IntervalLog::new(DELTA_TOPIC);
    let mut delta_w = Waveform::new("delta", 0.0, period);
    let mut delta = 0.0;

    for k in 0..n_steps {
        pacer.wait();
        let t = k as f64 * period;
        if cfg.dc.secondary_enabled && t >= cfg.dc.secondary_start_delay {
            if let Some(m) = subscriber.latest(PLANT_TOPIC).message {
                if let Some(&vref) = m.values.first() {
                    delta = secondary_step(delta, vref, p.vn, p.ks, period);
                }
            }
        }
        delta_w.push(delta);
        log.record(epoch);
        publisher.publish(&RelayMessage {
            topic: DELTA_TOPIC.into(),
            seq: k,
            sim_time: t,
            wall_ns: *log.wall_ns.last().unwrap(),
            values: vec![delta],
        })?;
    }

    Ok(RtRunResult { waveforms: vec![delta_w], log, deadline_misses: pacer.misses })
}

/// Interval log as CSV: `topic,seq,wall_ns`.
pub fn write_interval_log(log: &IntervalLog, path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "topic,seq,wall_ns")?;
    for (seq, ns) in log.wall_ns.iter().enumerate() {
        writeln!(f, "{},{seq},{ns}", log.topic)?;
    }
    f.flush()
}

/// Read back an interval log CSV written by [`write_interval_log`].
pub fn read_interval_log(path: &Path) -> std::io::Result<IntervalLog> {
    let text = std::fs::read_to_string(path)?;
    let mut log = IntervalLog::default();
    for line in text.lines().skip(1) {
        let mut fields = line.split(',');
        let topic = fields.next().unwrap_or_default();
        let _seq = fields.next();
        let ns: u64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "bad wall_ns"))?;
        if log.topic.is_empty() {
            log.topic = topic.to_string();
        }
        log.wall_ns.push(ns);
    }
    Ok(log)
}

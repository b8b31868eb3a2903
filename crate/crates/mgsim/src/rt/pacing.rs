//! Wall-clock pacing against absolute deadlines and publish-interval
//! statistics.

use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least 2 timestamps, got {0}")]
    InsufficientData(usize),
}

/// How much of the tail of each wait is spent spinning on the monotonic
/// clock instead of sleeping, to stay under OS timer granularity.
const SPIN_MARGIN: Duration = Duration::from_micros(200);

/// Outcome of one pacing wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaceOutcome {
    OnTime,
    /// Compute already exceeded the step; logged, never fatal.
    DeadlineMiss,
}

/// Paces a loop to one absolute deadline per step: deadlines advance by
/// exactly `step` each iteration, so jitter does not accumulate. A miss of
/// more than one full step resynchronizes to the current instant.
pub struct Pacer {
    step: Duration,
    next_deadline: Instant,
    epoch: Instant,
    pub misses: u64,
}

impl Pacer {
    pub fn new(step: Duration) -> Self {
        assert!(!step.is_zero());
        let now = Instant::now();
        Self { step, next_deadline: now + step, epoch: now, misses: 0 }
    }

    /// Monotonic epoch of this pacer (run start).
    pub fn epoch(&self) -> Instant {
        self.epoch
    }

    /// Block until the next deadline, then advance it by one step.
    pub fn wait(&mut self) -> PaceOutcome {
        let now = Instant::now();
        let outcome = if now > self.next_deadline {
            self.misses += 1;
            if now > self.next_deadline + self.step {
                // Too far behind to amortize: resynchronize.
                self.next_deadline = now;
            }
            PaceOutcome::DeadlineMiss
        } else {
            if let Some(sleep) = (self.next_deadline - now).checked_sub(SPIN_MARGIN) {
                std::thread::sleep(sleep);
            }
            while Instant::now() < self.next_deadline {
                std::hint::spin_loop();
            }
            PaceOutcome::OnTime
        };
        self.next_deadline += self.step;
        outcome
    }
}

/// Move the calling thread to the real-time FIFO scheduling class so other
/// workloads on the host cannot preempt the paced loop mid-step. Requires
/// CAP_SYS_NICE (or an appropriate rtprio limit); returns whether it took
/// effect, and the loop runs unchanged at normal priority when it does not.
#[cfg(target_os = "linux")]
pub fn try_elevate_priority() -> bool {
    let param = libc::sched_param { sched_priority: 10 };
    unsafe { libc::pthread_setschedparam(libc::pthread_self(), libc::SCHED_FIFO, &param) == 0 }
}

#[cfg(not(target_os = "linux"))]
pub fn try_elevate_priority() -> bool {
    false
}

/// Wall-clock publish timestamps, one entry per published message.
#[derive(Debug, Clone, Default)]
pub struct IntervalLog {
    pub topic: String,
    /// Nanoseconds since the pacer epoch; non-decreasing.
    pub wall_ns: Vec<u64>,
}

impl IntervalLog {
    pub fn new(topic: &str) -> Self {
        Self { topic: topic.to_string(), wall_ns: Vec::new() }
    }

    pub fn record(&mut self, epoch: Instant) {
        self.wall_ns.push(epoch.elapsed().as_nanos() as u64);
    }
}

/// Sample statistics over successive timestamp differences, seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

pub fn interval_stats(log: &IntervalLog) -> Result<IntervalStats, StatsError> {
    if log.wall_ns.len() < 2 {
        return Err(StatsError::InsufficientData(log.wall_ns.len()));
    }
    let mut diffs: Vec<f64> = log
        .wall_ns
        .windows(2)
        .map(|w| (w[1].saturating_sub(w[0])) as f64 * 1e-9)
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    diffs.sort_by(|a, b| a.total_cmp(b));
    let median = if diffs.len() % 2 == 1 {
        diffs[diffs.len() / 2]
    } else {
        0.5 * (diffs[diffs.len() / 2 - 1] + diffs[diffs.len() / 2])
    };
    Ok(IntervalStats {
        mean,
        median,
        std: var.sqrt(),
        min: diffs[0],
        max: diffs[diffs.len() - 1],
        count: diffs.len(),
    })
}

/// Histogram of successive differences with the given bin width (seconds):
/// (bin lower edge, count) pairs for non-empty bins.
pub fn histogram(log: &IntervalLog, bin_width: f64) -> Vec<(f64, usize)> {
    assert!(bin_width > 0.0);
    let mut bins: std::collections::BTreeMap<u64, usize> = Default::default();
    for w in log.wall_ns.windows(2) {
        let d = (w[1].saturating_sub(w[0])) as f64 * 1e-9;
        *bins.entry((d / bin_width).floor() as u64).or_default() += 1;
    }
    bins.into_iter().map(|(b, c)| (b as f64 * bin_width, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_ms(stamps_ms: &[u64]) -> IntervalLog {
        IntervalLog { topic: "t".into(), wall_ns: stamps_ms.iter().map(|&m| m * 1_000_000).collect() }
    }

    #[test]
    fn uniform_stamps_have_zero_std() {
        let s = interval_stats(&log_ms(&[0, 1, 2, 3])).unwrap();
        assert_eq!(s.mean, 1e-3);
        assert_eq!(s.median, 1e-3);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.count, 3);
    }

    #[test]
    fn uneven_stamps_mean_and_median() {
        let s = interval_stats(&log_ms(&[0, 1, 3])).unwrap();
        assert!((s.mean - 1.5e-3).abs() < 1e-12);
        assert!((s.median - 1.5e-3).abs() < 1e-12);
    }

    #[test]
    fn single_stamp_is_insufficient() {
        assert!(matches!(
            interval_stats(&log_ms(&[5])),
            Err(StatsError::InsufficientData(1))
        ));
    }

    #[test]
    fn histogram_bins_intervals() {
        let h = histogram(&log_ms(&[0, 1, 2, 4]), 1e-3);
        assert_eq!(h, vec![(1e-3, 2), (2e-3, 1)]);
    }

    #[test]
    fn pacer_holds_one_millisecond_cadence() {
        let step = Duration::from_millis(1);
        let mut pacer = Pacer::new(step);
        let mut log = IntervalLog::new("t");
        let epoch = pacer.epoch();
        for _ in 0..50 {
            pacer.wait();
            log.record(epoch);
        }
        let s = interval_stats(&log).unwrap();
        assert!(
            s.mean > 0.9e-3 && s.mean < 1.3e-3,
            "mean interval {} s",
            s.mean
        );
    }

    #[test]
    fn overrunning_compute_flags_every_deadline() {
        let mut pacer = Pacer::new(Duration::from_millis(1));
        let mut misses = 0;
        for _ in 0..5 {
            std::thread::sleep(Duration::from_millis(2));
            if pacer.wait() == PaceOutcome::DeadlineMiss {
                misses += 1;
            }
        }
        assert!(misses >= 4, "only {misses} misses flagged");
    }
}

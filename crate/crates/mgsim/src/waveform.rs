//! Uniformly sampled named trace recorded by a scenario run.

/// Uniformly sampled signal with a start time.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub name: String,
    pub start: f64,
    /// Sample period, seconds.
    pub period: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(name: &str, start: f64, period: f64) -> Self {
        assert!(period > 0.0);
        Self { name: name.to_string(), start, period, samples: Vec::new() }
    }

    pub fn push(&mut self, value: f64) {
        self.samples.push(value);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_of(&self, idx: usize) -> f64 {
        self.start + idx as f64 * self.period
    }

    pub fn end_time(&self) -> f64 {
        self.time_of(self.samples.len().saturating_sub(1))
    }

    /// Samples with time in [t0, t1).
    pub fn window(&self, t0: f64, t1: f64) -> &[f64] {
        let lo = (((t0 - self.start) / self.period).ceil().max(0.0)) as usize;
        let hi = ((((t1 - self.start) / self.period).ceil()).max(0.0) as usize).min(self.samples.len());
        &self.samples[lo.min(hi)..hi]
    }

    pub fn mean(&self, t0: f64, t1: f64) -> f64 {
        let w = self.window(t0, t1);
        if w.is_empty() {
            f64::NAN
        } else {
            w.iter().sum::<f64>() / w.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_selects_half_open_interval() {
        let mut w = Waveform::new("x", 0.0, 0.5);
        for k in 0..10 {
            w.push(k as f64);
        }
        assert_eq!(w.window(1.0, 2.5), &[2.0, 3.0, 4.0]);
        assert_eq!(w.window(0.0, 0.5), &[0.0]);
        assert!(w.window(10.0, 20.0).is_empty());
    }

    #[test]
    fn mean_over_window() {
        let mut w = Waveform::new("x", 0.0, 1.0);
        for v in [1.0, 2.0, 3.0, 4.0] {
            w.push(v);
        }
        assert_eq!(w.mean(0.0, 4.0), 2.5);
    }
}

//! Waveform analyzers: settling time against a target band and dominant
//! spectral component of a trace window.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::waveform::Waveform;

/// Earliest time (relative to the waveform start) after which every sample
/// stays within `target * (1 +- band)`. `None` if the trace never stays in
/// the band.
pub fn settling_time(w: &Waveform, target: f64, band: f64) -> Option<f64> {
    assert!(band > 0.0 && band < 0.5, "band must be in (0, 0.5)");
    let lo = target - band * target.abs();
    let hi = target + band * target.abs();
    let mut last_out = None;
    for (k, &v) in w.samples.iter().enumerate() {
        if v < lo || v > hi {
            last_out = Some(k);
        }
    }
    match last_out {
        None => Some(0.0),
        Some(k) if k + 1 >= w.samples.len() => None,
        Some(k) => Some((k + 1) as f64 * w.period),
    }
}

/// Spectral-peak search configuration.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumConfig {
    /// Zero-padding factor applied after Hann windowing (>= 1).
    pub zero_pad: usize,
    /// A peak must exceed `threshold` times the median spectral magnitude.
    pub threshold: f64,
    /// Components below `min_cycles / window_length` are treated as leakage
    /// of the detrended near-DC content and skipped.
    pub min_cycles: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { zero_pad: 4, threshold: 5.0, min_cycles: 4.0 }
    }
}

/// Angular frequency (rad/s) of the strongest non-DC spectral component in
/// `[t0, t1)`, or `None` when no component clears the noise floor.
///
/// The window is linearly detrended, Hann-windowed and zero-padded; the peak
/// bin is refined by parabolic interpolation.
pub fn dominant_frequency(w: &Waveform, t0: f64, t1: f64, cfg: &SpectrumConfig) -> Option<f64> {
    let data = w.window(t0, t1);
    if data.len() < 16 {
        return None;
    }
    let n = data.len();

    // Least-squares linear detrend.
    let xm = (n as f64 - 1.0) / 2.0;
    let ym = data.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (k, &y) in data.iter().enumerate() {
        let dx = k as f64 - xm;
        sxx += dx * dx;
        sxy += dx * (y - ym);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };

    let padded = (n * cfg.zero_pad.max(1)).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..padded)
        .map(|k| {
            if k < n {
                let hann = 0.5
                    - 0.5 * (std::f64::consts::TAU * k as f64 / (n as f64 - 1.0)).cos();
                let detrended = data[k] - ym - slope * (k as f64 - xm);
                Complex::new(detrended * hann, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();

    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);

    let half = padded / 2;
    let mags: Vec<f64> = buf[..half].iter().map(|c| c.norm()).collect();
    let bin_hz = 1.0 / (padded as f64 * w.period);
    let window_len = n as f64 * w.period;
    let min_bin = ((cfg.min_cycles / window_len) / bin_hz).ceil() as usize;

    let (peak_bin, peak_mag) = mags
        .iter()
        .enumerate()
        .skip(min_bin.max(1))
        .fold((0usize, 0.0f64), |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) });
    if peak_bin == 0 {
        return None;
    }

    let mut sorted: Vec<f64> = mags[min_bin.max(1)..].to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    // Absolute floor keeps float noise on a flat trace from ever counting as
    // a peak.
    let scale = data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak_mag <= cfg.threshold * median || peak_mag < 1e-9 * n as f64 * scale {
        return None;
    }

    // Parabolic refinement around the peak bin.
    let refined = if peak_bin > 0 && peak_bin + 1 < half {
        let (ym1, y0, yp1) = (mags[peak_bin - 1], mags[peak_bin], mags[peak_bin + 1]);
        let denom = ym1 - 2.0 * y0 + yp1;
        if denom.abs() > 1e-300 {
            peak_bin as f64 + 0.5 * (ym1 - yp1) / denom
        } else {
            peak_bin as f64
        }
    } else {
        peak_bin as f64
    };

    Some(std::f64::consts::TAU * refined * bin_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settling_constant_trace_is_zero() {
        let mut w = Waveform::new("x", 0.0, 0.1);
        for _ in 0..10 {
            w.push(5.0);
        }
        assert_eq!(settling_time(&w, 5.0, 0.02), Some(0.0));
    }

    #[test]
    fn settling_first_order_rise_matches_log_band() {
        // v(t) = target (1 - e^{-t/tau}): enters a 2 % band at t = tau ln 50.
        let tau = 0.1;
        let dt = 1e-4;
        let mut w = Waveform::new("v", 0.0, dt);
        for k in 0..20_000 {
            let t = k as f64 * dt;
            w.push(1.0 - (-t / tau).exp());
        }
        let ts = settling_time(&w, 1.0, 0.02).unwrap();
        let expected = tau * (1.0f64 / 0.02).ln();
        assert!((ts - expected).abs() < 0.01 * expected, "ts = {ts}, expected {expected}");
    }

    #[test]
    fn settling_never_in_band_is_none() {
        let mut w = Waveform::new("x", 0.0, 0.1);
        for k in 0..10 {
            w.push(k as f64);
        }
        assert_eq!(settling_time(&w, 100.0, 0.02), None);
    }

    #[test]
    fn dominant_frequency_pure_sine() {
        let dt = 10e-6;
        let omega = 5440.0;
        let mut w = Waveform::new("x", 0.0, dt);
        for k in 0..5000 {
            w.push((omega * k as f64 * dt).sin());
        }
        let f = dominant_frequency(&w, 0.0, 0.05, &SpectrumConfig::default()).unwrap();
        assert!((f - omega).abs() / omega < 0.01, "detected {f}");
    }

    #[test]
    fn dominant_frequency_dc_trace_is_none() {
        let mut w = Waveform::new("x", 0.0, 1e-4);
        for _ in 0..1000 {
            w.push(3.0);
        }
        assert_eq!(dominant_frequency(&w, 0.0, 0.1, &SpectrumConfig::default()), None);
    }

    #[test]
    fn dominant_frequency_too_few_samples_is_none() {
        let mut w = Waveform::new("x", 0.0, 5e-3);
        for k in 0..3 {
            w.push(k as f64);
        }
        assert_eq!(dominant_frequency(&w, 0.0, 0.015, &SpectrumConfig::default()), None);
    }
}

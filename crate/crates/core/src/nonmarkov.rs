//! Non-Markovianity quantifier and spectral analysis of the Loschmidt echo.
//!
//! Coherence revivals (time windows where `|q|` grows) witness information
//! backflow. Their time-averaged accumulation
//!
//! ```text
//! N_T = (1/T) * integral over { t : dL/dt > 0 } of d sqrt(L)/dt
//! ```
//!
//! is evaluated here as the rectified-increment sum
//! `sum_i max(0, s_{i+1} - s_i) / T` over the sampled signal `s = sqrt(L)`,
//! which is exact for segments monotone between samples and needs no
//! smoothing parameter. For the dissipative scheme the same estimator runs
//! on `|q|` (the identical samples) after discarding an initial transient.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::CoherenceTrace;
use crate::error::{Error, Result};

/// Which provenance the rectified signal carries. `SqrtL` and `AbsQ` are
/// numerically identical on any trace (`|q| = sqrt(L)`); the tag records
/// which definition a result was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    SqrtL,
    AbsQ,
}

/// Time-averaged non-Markovianity over a finite window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonMarkovResult {
    /// The quantifier, in units of `t1`.
    pub n_t: f64,
    /// Integration window `(t_burn, T)`.
    pub window: (f64, f64),
    /// Maximal time intervals with strictly increasing signal.
    pub recoherence_intervals: Vec<(f64, f64)>,
    pub signal: SignalKind,
}

/// `N_T` over `[0, T]`.
pub fn compute_n_t(trace: &CoherenceTrace, t_end: f64) -> Result<NonMarkovResult> {
    compute_n_t_windowed(trace, 0.0, t_end)
}

/// `N_T` over `[t_burn, T]`, normalized by `T - t_burn`. A burn-in is the
/// convention for the dissipative scheme, where the initial transient decay
/// would otherwise dominate the average.
pub fn compute_n_t_windowed(trace: &CoherenceTrace, t_burn: f64, t_end: f64) -> Result<NonMarkovResult> {
    let dt = trace.dt;
    if t_end - t_burn < 10.0 * dt {
        return Err(Error::invalid(format!(
            "window [{t_burn}, {t_end}] shorter than 10 dt is a meaningless average"
        )));
    }
    let t_last = *trace.times.last().unwrap_or(&0.0);
    if t_end > t_last + 0.5 * dt {
        return Err(Error::invalid(format!(
            "T = {t_end} exceeds the trace horizon {t_last}"
        )));
    }
    let i0 = trace
        .index_of(t_burn)
        .ok_or_else(|| Error::invalid(format!("t_burn = {t_burn} is not on the trace grid")))?;
    let i1 = trace
        .index_of(t_end)
        .ok_or_else(|| Error::invalid(format!("T = {t_end} is not on the trace grid")))?;
    let s: Vec<f64> = trace.l[i0..=i1].iter().map(|l| l.sqrt()).collect();

    let mut total_rise = 0.0;
    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..s.len() - 1 {
        let inc = s[i + 1] - s[i];
        if inc > 0.0 {
            total_rise += inc;
            if run_start.is_none() {
                run_start = Some(i);
            }
        } else if let Some(start) = run_start.take() {
            intervals.push((trace.times[i0 + start], trace.times[i0 + i]));
        }
    }
    if let Some(start) = run_start {
        intervals.push((trace.times[i0 + start], trace.times[i1]));
    }

    Ok(NonMarkovResult {
        n_t: total_rise / (t_end - t_burn),
        window: (t_burn, t_end),
        recoherence_intervals: intervals,
        signal: SignalKind::SqrtL,
    })
}

/// Taper applied before the discrete transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralWindow {
    /// No taper. Keeps weak sharp features (band-edge beats) above
    /// log-scale thresholds; the default.
    #[default]
    Rectangular,
    /// Hann taper, for leakage-sensitive work.
    Hann,
}

/// One detected spectral peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub frequency: f64,
    pub magnitude: f64,
}

/// One-sided magnitude spectrum of the mean-removed Loschmidt echo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EchoSpectrum {
    /// Angular frequencies `0 ..= pi/dt` (Nyquist).
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Angular-frequency spacing of one bin.
    pub bin_width: f64,
    /// Peaks at the default relative threshold of 1e-3.
    pub peaks: Vec<SpectralPeak>,
}

/// Default relative peak threshold; the echo spectra of interest show their
/// physical peaks orders of magnitude above the continuum background.
pub const PEAK_THRESHOLD_REL: f64 = 1e-3;

/// Discrete Fourier magnitude of `L(t) - mean(L)`, one-sided.
pub fn echo_spectrum(trace: &CoherenceTrace, window: SpectralWindow) -> Result<EchoSpectrum> {
    let n = trace.l.len();
    if n < 256 {
        return Err(Error::invalid(format!(
            "need at least 256 samples for a spectrum, got {n}"
        )));
    }
    let mean = trace.l.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = trace
        .l
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let w = match window {
                SpectralWindow::Rectangular => 1.0,
                SpectralWindow::Hann => {
                    let phase = std::f64::consts::TAU * i as f64 / (n - 1) as f64;
                    0.5 * (1.0 - phase.cos())
                }
            };
            Complex64::new((l - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bin_width = std::f64::consts::TAU / (n as f64 * trace.dt);
    let half = n / 2;
    let frequencies: Vec<f64> = (0..=half).map(|k| k as f64 * bin_width).collect();
    let magnitudes: Vec<f64> = buf[..=half].iter().map(|z| z.norm()).collect();
    let peaks = detect_peaks(&frequencies, &magnitudes, PEAK_THRESHOLD_REL);
    Ok(EchoSpectrum {
        frequencies,
        magnitudes,
        bin_width,
        peaks,
    })
}

fn detect_peaks(frequencies: &[f64], magnitudes: &[f64], rel_threshold: f64) -> Vec<SpectralPeak> {
    let max = magnitudes.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let threshold = rel_threshold * max;
    let mut kept: Vec<usize> = Vec::new();
    for i in 1..magnitudes.len().saturating_sub(1) {
        if magnitudes[i] > magnitudes[i - 1]
            && magnitudes[i] >= magnitudes[i + 1]
            && magnitudes[i] >= threshold
        {
            // merge maxima within one bin of each other, keeping the larger
            if let Some(&last) = kept.last() {
                if i - last <= 1 {
                    if magnitudes[i] > magnitudes[last] {
                        *kept.last_mut().unwrap() = i;
                    }
                    continue;
                }
            }
            kept.push(i);
        }
    }
    kept.into_iter()
        .map(|i| SpectralPeak {
            frequency: frequencies[i],
            magnitude: magnitudes[i],
        })
        .collect()
}

/// Count spectral peaks above `rel_threshold` times the global maximum.
pub fn count_peaks(spectrum: &EchoSpectrum, rel_threshold: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&rel_threshold) || rel_threshold == 0.0 {
        return Err(Error::invalid(format!(
            "relative threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    Ok(detect_peaks(&spectrum.frequencies, &spectrum.magnitudes, rel_threshold).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, ChainSpec, Model};
    use approx::assert_abs_diff_eq;

    fn synthetic_trace(s: impl Fn(f64) -> f64, t_max: f64, dt: f64) -> CoherenceTrace {
        let steps = (t_max / dt).round() as usize;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let q: Vec<Complex64> = times.iter().map(|&t| Complex64::new(s(t), 0.0)).collect();
        let l = q.iter().map(|q| q.norm_sqr()).collect();
        CoherenceTrace {
            times,
            q,
            l,
            dt,
            model: Model::Dephasing,
            spec: ChainSpec {
                n_cells: 2,
                t1: 1.0,
                t2: 1.0,
                gamma: 0.0,
                model: Model::Dephasing,
                boundary: Boundary::Periodic,
                disorder: None,
            },
            warnings: Vec::new(),
        }
    }

    #[test]
    fn constant_signal_gives_zero() {
        let trace = synthetic_trace(|_| 0.7, 10.0, 0.01);
        let r = compute_n_t(&trace, 10.0).unwrap();
        assert_eq!(r.n_t, 0.0);
        assert!(r.recoherence_intervals.is_empty());
    }

    #[test]
    fn monotone_decay_gives_zero() {
        let trace = synthetic_trace(|t| (-0.3 * t).exp(), 10.0, 0.01);
        let r = compute_n_t(&trace, 10.0).unwrap();
        assert_eq!(r.n_t, 0.0);
    }

    #[test]
    fn cosine_signal_matches_analytic_rate() {
        // sqrt(L) = (1 + cos(Omega t))/2 over k whole periods accumulates k
        // unit rises: N_T = Omega / (2 pi), within 0.1% at dt = 1e-3 periods
        let omega = 3.7;
        let period = std::f64::consts::TAU / omega;
        let k = 5;
        let t_max = k as f64 * period;
        let dt = 0.001 * period;
        let trace = synthetic_trace(|t| (1.0 + (omega * t).cos()) / 2.0, t_max, dt);
        let r = compute_n_t(&trace, t_max).unwrap();
        let expect = omega / std::f64::consts::TAU;
        assert!(
            (r.n_t - expect).abs() < 1e-3 * expect,
            "N_T = {}, expected {expect}",
            r.n_t
        );
        assert_eq!(r.recoherence_intervals.len(), k);
        for (a, b) in &r.recoherence_intervals {
            assert!(a < b);
        }
    }

    #[test]
    fn windowed_average_excludes_burn_in() {
        // decay for t < 5, then a clean oscillation
        let trace = synthetic_trace(
            |t| {
                if t < 5.0 {
                    1.0 - 0.1 * t
                } else {
                    0.5 + 0.2 * (2.0 * (t - 5.0)).sin()
                }
            },
            25.0,
            0.01,
        );
        let full = compute_n_t(&trace, 25.0).unwrap();
        let burned = compute_n_t_windowed(&trace, 5.0, 25.0).unwrap();
        assert_eq!(burned.window, (5.0, 25.0));
        assert!(burned.n_t > 0.0);
        // same total rise, tighter window
        assert_abs_diff_eq!(full.n_t * 25.0, burned.n_t * 20.0, epsilon = 1e-9);
        assert!(burned
            .recoherence_intervals
            .iter()
            .all(|(a, b)| *a >= 5.0 && *b <= 25.0));
    }

    #[test]
    fn rejects_degenerate_windows() {
        let trace = synthetic_trace(|_| 1.0, 1.0, 0.05);
        assert!(compute_n_t(&trace, 0.2).is_err()); // < 10 dt
        assert!(compute_n_t(&trace, 2.0).is_err()); // beyond horizon
    }

    #[test]
    fn phase_invariance_of_n_t() {
        // N_T depends on |q| only
        let omega = 2.0;
        let base = synthetic_trace(|t| 0.6 + 0.3 * (omega * t).cos(), 20.0, 0.01);
        let mut rotated = base.clone();
        for (i, q) in rotated.q.iter_mut().enumerate() {
            *q *= Complex64::from_polar(1.0, 1.3 * rotated.times[i]);
        }
        let a = compute_n_t(&base, 20.0).unwrap();
        let b = compute_n_t(&rotated, 20.0).unwrap();
        assert_abs_diff_eq!(a.n_t, b.n_t, epsilon = 1e-12);
    }

    #[test]
    fn constant_echo_has_empty_spectrum() {
        let trace = synthetic_trace(|_| 0.8, 30.0, 0.05);
        let spec = echo_spectrum(&trace, SpectralWindow::Rectangular).unwrap();
        assert!(spec
            .magnitudes
            .iter()
            .skip(1)
            .all(|m| *m < 1e-10 * trace.l.len() as f64));
        assert!(spec.peaks.is_empty());
    }

    #[test]
    fn cosine_sqrt_l_shows_fundamental_and_harmonic() {
        // squaring c + d cos generates exactly the frequencies Omega and
        // 2 Omega
        let omega = 1.5;
        let trace = synthetic_trace(|t| 0.6 + 0.3 * (omega * t).cos(), 400.0, 0.02);
        let spec = echo_spectrum(&trace, SpectralWindow::Rectangular).unwrap();
        let n = count_peaks(&spec, 0.05).unwrap();
        assert_eq!(n, 2);
        let peaks = detect_peaks(&spec.frequencies, &spec.magnitudes, 0.05);
        assert_abs_diff_eq!(peaks[0].frequency, omega, epsilon = spec.bin_width);
        assert_abs_diff_eq!(peaks[1].frequency, 2.0 * omega, epsilon = spec.bin_width);
    }

    #[test]
    fn spectrum_requires_enough_samples() {
        let trace = synthetic_trace(|_| 1.0, 1.0, 0.05);
        assert!(echo_spectrum(&trace, SpectralWindow::Rectangular).is_err());
    }

    #[test]
    fn count_peaks_validates_threshold() {
        let trace = synthetic_trace(|t| 0.5 + 0.1 * t.cos(), 100.0, 0.05);
        let spec = echo_spectrum(&trace, SpectralWindow::Rectangular).unwrap();
        assert!(count_peaks(&spec, 0.0).is_err());
        assert!(count_peaks(&spec, 1.0).is_err());
        assert!(count_peaks(&spec, 0.5).is_ok());
    }

    #[test]
    fn frequencies_reach_nyquist() {
        let dt = 0.05;
        let trace = synthetic_trace(|t| 0.5 + 0.1 * t.cos(), 100.0, dt);
        let spec = echo_spectrum(&trace, SpectralWindow::Hann).unwrap();
        let nyquist = std::f64::consts::PI / dt;
        let top = *spec.frequencies.last().unwrap();
        assert!(top <= nyquist + 1e-9);
        assert!(top > nyquist - 2.0 * spec.bin_width);
        assert!(spec.frequencies.windows(2).all(|w| w[1] > w[0]));
    }
}

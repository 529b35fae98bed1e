//! Waveforms and pulse sequences.
//!
//! A waveform maps time (ns) to an angular frequency (rad/μs). Pulse areas
//! are therefore ∫Ω(t)dt with t in μs, i.e. the ns-integral times 1e-3.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Conversion factor from ns to μs.
pub const NS_TO_US: f64 = 1e-3;

/// Shape of a single waveform segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformShape {
    /// Constant value, rad/μs.
    Constant { value: f64 },
    /// Linear ramp between two endpoint values, rad/μs.
    Ramp { start: f64, end: f64 },
    /// Truncated Gaussian centered at T/2 with σ = T/6, scaled so the pulse
    /// area (rad) equals `area`. The 3σ truncation keeps the endpoint values
    /// below 1.2% of the peak.
    Gaussian { area: f64 },
    /// Uniformly spaced samples (rad/μs) linearly interpolated over the
    /// duration; at least two samples.
    Sampled { values: Vec<f64> },
}

/// A waveform with a fixed duration in ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    shape: WaveformShape,
    duration_ns: f64,
    /// Peak value of a Gaussian shape; precomputed at construction so that
    /// the numerically integrated area matches the request.
    #[serde(skip)]
    gaussian_peak: f64,
}

impl Waveform {
    pub fn constant(value: f64, duration_ns: f64) -> Result<Self> {
        Self::new(WaveformShape::Constant { value }, duration_ns)
    }

    pub fn ramp(start: f64, end: f64, duration_ns: f64) -> Result<Self> {
        Self::new(WaveformShape::Ramp { start, end }, duration_ns)
    }

    /// Gaussian with total area in rad.
    pub fn gaussian(area: f64, duration_ns: f64) -> Result<Self> {
        Self::new(WaveformShape::Gaussian { area }, duration_ns)
    }

    pub fn sampled(values: Vec<f64>, duration_ns: f64) -> Result<Self> {
        Self::new(WaveformShape::Sampled { values }, duration_ns)
    }

    pub fn new(shape: WaveformShape, duration_ns: f64) -> Result<Self> {
        if !(duration_ns > 0.0) || !duration_ns.is_finite() {
            return Err(CoreError::Pulse(format!(
                "waveform duration must be positive, got {duration_ns} ns"
            )));
        }
        if let WaveformShape::Sampled { values } = &shape {
            if values.len() < 2 {
                return Err(CoreError::Pulse(
                    "sampled waveform needs at least two samples".into(),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::Pulse("sampled waveform has non-finite values".into()));
            }
        }
        let mut wf = Self {
            shape,
            duration_ns,
            gaussian_peak: 0.0,
        };
        if let WaveformShape::Gaussian { area } = wf.shape {
            if !area.is_finite() {
                return Err(CoreError::Pulse("gaussian area must be finite".into()));
            }
            // Normalize numerically: peak = area / ∫ profile dt. Simpson on
            // the smooth truncated profile converges far below 1e-9 relative.
            wf.gaussian_peak = 1.0;
            let raw_area = simpson(|t| wf.gaussian_profile(t), 0.0, duration_ns, 4000) * NS_TO_US;
            wf.gaussian_peak = area / raw_area;
        }
        Ok(wf)
    }

    pub fn shape(&self) -> &WaveformShape {
        &self.shape
    }

    pub fn duration_ns(&self) -> f64 {
        self.duration_ns
    }

    /// True when the waveform never goes negative (required for Rabi drives).
    pub fn is_non_negative(&self) -> bool {
        match &self.shape {
            WaveformShape::Constant { value } => *value >= 0.0,
            WaveformShape::Ramp { start, end } => *start >= 0.0 && *end >= 0.0,
            WaveformShape::Gaussian { area } => *area >= 0.0,
            WaveformShape::Sampled { values } => values.iter().all(|v| *v >= 0.0),
        }
    }

    fn gaussian_profile(&self, t_ns: f64) -> f64 {
        let center = self.duration_ns / 2.0;
        let sigma = self.duration_ns / 6.0;
        let z = (t_ns - center) / sigma;
        self.gaussian_peak * (-0.5 * z * z).exp()
    }

    /// Value at `t_ns`, rad/μs. Times are clamped into [0, duration].
    pub fn sample(&self, t_ns: f64) -> f64 {
        let t = t_ns.clamp(0.0, self.duration_ns);
        match &self.shape {
            WaveformShape::Constant { value } => *value,
            WaveformShape::Ramp { start, end } => {
                start + (end - start) * (t / self.duration_ns)
            }
            WaveformShape::Gaussian { .. } => self.gaussian_profile(t),
            WaveformShape::Sampled { values } => {
                let pos = t / self.duration_ns * (values.len() - 1) as f64;
                let i = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// Integral of the waveform over its duration, in rad (Simpson rule).
    pub fn area(&self) -> f64 {
        simpson(|t| self.sample(t), 0.0, self.duration_ns, 4000) * NS_TO_US
    }
}

// Serde skips `gaussian_peak`, so rebuild it after deserializing.
impl Waveform {
    fn renormalize(&mut self) {
        if let WaveformShape::Gaussian { area } = self.shape {
            self.gaussian_peak = 1.0;
            let raw = simpson(|t| self.gaussian_profile(t), 0.0, self.duration_ns, 4000) * NS_TO_US;
            self.gaussian_peak = area / raw;
        }
    }
}

/// One segment of a pulse sequence: a Rabi drive and a detuning waveform of
/// equal duration applied globally to all atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub rabi: Waveform,
    pub detuning: Waveform,
}

/// An ordered list of pulse segments. An empty sequence is the zero-duration
/// pulse (identity evolution).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSequence {
    segments: Vec<PulseSegment>,
}

impl PulseSequence {
    pub fn new(segments: Vec<PulseSegment>) -> Result<Self> {
        for (k, seg) in segments.iter().enumerate() {
            if (seg.rabi.duration_ns() - seg.detuning.duration_ns()).abs() > 1e-9 {
                return Err(CoreError::Pulse(format!(
                    "segment {k}: rabi duration {} ns != detuning duration {} ns",
                    seg.rabi.duration_ns(),
                    seg.detuning.duration_ns()
                )));
            }
            if !seg.rabi.is_non_negative() {
                return Err(CoreError::Pulse(format!(
                    "segment {k}: Rabi waveform must be non-negative"
                )));
            }
        }
        Ok(Self { segments })
    }

    /// The zero-duration pulse.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Single-segment sequence.
    pub fn single(rabi: Waveform, detuning: Waveform) -> Result<Self> {
        Self::new(vec![PulseSegment { rabi, detuning }])
    }

    /// Appends another sequence's segments after this one's.
    pub fn then(&self, other: &PulseSequence) -> Self {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Self { segments }
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.rabi.duration_ns()).sum()
    }

    /// Global (Ω, δ) at `t_ns`, rad/μs. Between segments the later segment
    /// wins; beyond the total duration the last segment's endpoint values.
    pub fn sample(&self, t_ns: f64) -> (f64, f64) {
        if self.segments.is_empty() {
            return (0.0, 0.0);
        }
        let mut t = t_ns.max(0.0);
        for (k, seg) in self.segments.iter().enumerate() {
            let d = seg.rabi.duration_ns();
            if t <= d || k == self.segments.len() - 1 {
                return (seg.rabi.sample(t), seg.detuning.sample(t));
            }
            t -= d;
        }
        unreachable!()
    }

    /// Constant Rabi drive at 2π rad/μs, zero detuning, 660 ns: the pulse
    /// used for the single-parameter characterization runs.
    pub fn constant_rabi_660ns() -> Self {
        let rabi = Waveform::constant(2.0 * std::f64::consts::PI, 660.0).unwrap();
        let det = Waveform::constant(0.0, 660.0).unwrap();
        Self::single(rabi, det).unwrap()
    }

    /// 500 ns Gaussian Rabi profile of area π/2 with a detuning ramp from
    /// −20 to +20 rad/μs: the base pulse `P` of the correction loop, also
    /// the default drive for multi-parameter runs.
    pub fn gaussian_sweep_500ns() -> Self {
        let rabi = Waveform::gaussian(std::f64::consts::FRAC_PI_2, 500.0).unwrap();
        let det = Waveform::ramp(-20.0, 20.0, 500.0).unwrap();
        Self::single(rabi, det).unwrap()
    }

    /// Rebuild derived waveform state after deserialization.
    pub fn normalized(mut self) -> Result<Self> {
        for seg in &mut self.segments {
            seg.rabi.renormalize();
            seg.detuning.renormalize();
        }
        Self::new(self.segments)
    }
}

/// Composite Simpson rule with `n` (even) subintervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn rejects_nonpositive_duration() {
        assert!(Waveform::constant(1.0, 0.0).is_err());
        assert!(Waveform::constant(1.0, -5.0).is_err());
    }

    #[test]
    fn constant_and_ramp_sampling() {
        let c = Waveform::constant(3.0, 100.0).unwrap();
        assert_eq!(c.sample(0.0), 3.0);
        assert_eq!(c.sample(100.0), 3.0);
        let r = Waveform::ramp(-20.0, 20.0, 500.0).unwrap();
        assert_eq!(r.sample(0.0), -20.0);
        assert_eq!(r.sample(250.0), 0.0);
        assert_eq!(r.sample(500.0), 20.0);
    }

    #[test]
    fn sampled_waveform_interpolates() {
        let w = Waveform::sampled(vec![0.0, 2.0, 1.0], 100.0).unwrap();
        assert_eq!(w.sample(0.0), 0.0);
        assert_relative_eq!(w.sample(25.0), 1.0, max_relative = 1e-12);
        assert_eq!(w.sample(50.0), 2.0);
        assert_eq!(w.sample(100.0), 1.0);
        assert!(Waveform::sampled(vec![1.0], 100.0).is_err());
    }

    #[test]
    fn gaussian_area_matches_request() {
        for &(area, dur) in &[(PI / 2.0, 500.0), (PI, 660.0), (0.3, 120.0)] {
            let w = Waveform::gaussian(area, dur).unwrap();
            // Independent integration of sample() must reproduce the area.
            let integ = simpson(|t| w.sample(t), 0.0, dur, 20_000) * NS_TO_US;
            assert_relative_eq!(integ, area, max_relative = 1e-9);
        }
    }

    #[test]
    fn gaussian_endpoints_are_small() {
        let w = Waveform::gaussian(PI / 2.0, 500.0).unwrap();
        let peak = w.sample(250.0);
        assert!(w.sample(0.0) < 0.012 * peak);
        assert!(w.sample(500.0) < 0.012 * peak);
    }

    #[test]
    fn pulse_sequence_durations_and_sampling() {
        let p = PulseSequence::constant_rabi_660ns();
        assert_eq!(p.total_duration_ns(), 660.0);
        let (omega, delta) = p.sample(330.0);
        assert_relative_eq!(omega, 2.0 * PI, max_relative = 1e-12);
        assert_eq!(delta, 0.0);

        let two = p.then(&PulseSequence::gaussian_sweep_500ns());
        assert_eq!(two.total_duration_ns(), 1160.0);
        let (_, d) = two.sample(660.0 + 250.0);
        assert_relative_eq!(d, 0.0, epsilon = 1e-12);

        assert_eq!(PulseSequence::empty().total_duration_ns(), 0.0);
        assert_eq!(PulseSequence::empty().sample(10.0), (0.0, 0.0));
    }

    #[test]
    fn pulse_rejects_mismatched_or_negative_segments() {
        let rabi = Waveform::constant(1.0, 100.0).unwrap();
        let det = Waveform::constant(0.0, 90.0).unwrap();
        assert!(PulseSequence::single(rabi, det).is_err());

        let neg = Waveform::constant(-1.0, 100.0).unwrap();
        let det = Waveform::constant(0.0, 100.0).unwrap();
        assert!(PulseSequence::single(neg, det).is_err());
    }

    #[test]
    fn serde_round_trip_restores_gaussian_peak() {
        let p = PulseSequence::gaussian_sweep_500ns();
        let json = serde_json::to_string(&p).unwrap();
        let q: PulseSequence = serde_json::from_str(&json).unwrap();
        let q = q.normalized().unwrap();
        assert_relative_eq!(
            q.sample(250.0).0,
            p.sample(250.0).0,
            max_relative = 1e-12
        );
    }
}

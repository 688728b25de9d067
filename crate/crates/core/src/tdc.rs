//! Behavioral model of the time-to-digital converter front end.
//!
//! Three measurements are modelled on a sampled receiver waveform:
//!
//! * comparator threshold crossings, linearly interpolated between samples
//!   and quantized to the TDC resolution;
//! * First Wave Mode: width of the first half-wave above a programmable
//!   threshold divided by the width of a later half-wave at zero level;
//! * peak-detector amplitude measurement, where the held peak discharges
//!   linearly and the discharge time is turned back into millivolts through
//!   the two-point AMC calibration.
//!
//! [`Tdc::measure_echo_pair`] combines them into the two-echo measurement
//! used for sound speed and attenuation.

use serde::{Deserialize, Serialize};

use crate::acoustics::SensorGeometry;
use crate::error::{Error, Result};
use crate::waveform::Waveform;

/// Smallest carrier coherence accepted for an echo window. A raised-cosine
/// burst scores about 0.6, white noise about 2/N for N samples.
pub const MIN_CARRIER_COHERENCE: f64 = 0.25;

/// Default TDC resolution, s.
pub const DEFAULT_LSB: f64 = 90.0e-12;

/// Highest programmable comparator threshold, mV.
pub const MAX_THRESHOLD_MV: u8 = 35;

/// Level down to which the peak detector discharges, as a fraction of the held peak.
pub const DISCHARGE_LEVEL: f64 = 0.7;

/// Comparator threshold, programmable in 1 mV steps over 0..=35 mV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ComparatorConfig {
    threshold_mv: u8,
}

impl ComparatorConfig {
    pub fn new(threshold_mv: u8) -> Result<Self> {
        if threshold_mv > MAX_THRESHOLD_MV {
            return Err(Error::Domain(format!(
                "comparator threshold {threshold_mv} mV exceeds {MAX_THRESHOLD_MV} mV"
            )));
        }
        Ok(ComparatorConfig { threshold_mv })
    }

    pub fn threshold_mv(&self) -> u8 {
        self.threshold_mv
    }

    /// Threshold as a voltage in mV.
    pub fn threshold(&self) -> f64 {
        self.threshold_mv as f64
    }

    /// One step (1 mV) lower, or `None` at 0 mV.
    pub fn step_down(&self) -> Option<Self> {
        self.threshold_mv.checked_sub(1).map(|threshold_mv| ComparatorConfig { threshold_mv })
    }
}

impl Default for ComparatorConfig {
    fn default() -> Self {
        ComparatorConfig { threshold_mv: 8 }
    }
}

impl TryFrom<u8> for ComparatorConfig {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        ComparatorConfig::new(value)
    }
}

impl From<ComparatorConfig> for u8 {
    fn from(cfg: ComparatorConfig) -> u8 {
        cfg.threshold_mv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// s, a multiple of the TDC LSB.
    pub time: f64,
    pub edge: Edge,
}

/// First Wave Mode result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdcMeasurement {
    /// s
    pub first_halfwave_width: f64,
    /// s
    pub reference_halfwave_width: f64,
    /// first / reference, clamped to [0, 1].
    pub first_wave_ratio: f64,
    /// Rising and falling threshold crossings of the first half-wave, then
    /// rising and falling zero crossings of the reference half-wave.
    pub echo_times: Vec<f64>,
    /// TDC LSB, s.
    pub quantization: f64,
}

impl TdcMeasurement {
    /// False when the triggering half-wave came out wider than the reference,
    /// i.e. the unclamped ratio exceeded 1.
    pub fn ratio_in_range(&self) -> bool {
        self.first_halfwave_width <= self.reference_halfwave_width
    }
}

/// Two-point calibration of the peak-detector discharge timing.
///
/// `amc_low` and `amc_high` are the discharge times (ns) measured for the
/// reference voltages `v_cal` and `2·v_cal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeCalibration {
    /// AMC_H, ns
    pub amc_high: f64,
    /// AMC_L, ns
    pub amc_low: f64,
    /// V_CAL, mV; nominally half the internal reference.
    pub v_cal: f64,
}

impl Default for AmplitudeCalibration {
    fn default() -> Self {
        AmplitudeCalibration {
            amc_high: 8000.0,
            amc_low: 4000.0,
            v_cal: 350.0,
        }
    }
}

impl AmplitudeCalibration {
    pub fn new(amc_high: f64, amc_low: f64, v_cal: f64) -> Result<Self> {
        let cal = AmplitudeCalibration {
            amc_high,
            amc_low,
            v_cal,
        };
        cal.check()?;
        Ok(cal)
    }

    pub fn check(&self) -> Result<()> {
        if self.amc_high == self.amc_low {
            return Err(Error::Calibration("AMC_H equals AMC_L".into()));
        }
        if !(self.amc_high > self.amc_low && self.amc_low > 0.0 && self.amc_high.is_finite()) {
            return Err(Error::Calibration(format!(
                "need AMC_H > AMC_L > 0, got AMC_H = {} ns, AMC_L = {} ns",
                self.amc_high, self.amc_low
            )));
        }
        if !(self.v_cal > 0.0 && self.v_cal.is_finite()) {
            return Err(Error::Calibration(format!("V_CAL {} mV must be positive", self.v_cal)));
        }
        Ok(())
    }

    /// AMC_Gradient = V_CAL / (AMC_H − AMC_L), mV/ns.
    pub fn gradient(&self) -> f64 {
        self.v_cal / (self.amc_high - self.amc_low)
    }

    /// AMC_Offset = (2·AMC_L − AMC_H) · AMC_Gradient, mV.
    pub fn offset(&self) -> f64 {
        (2.0 * self.amc_low - self.amc_high) * self.gradient()
    }

    /// V = AMC_Gradient · AM − AMC_Offset, with AM in ns.
    pub fn voltage(&self, am: f64) -> f64 {
        self.gradient() * am - self.offset()
    }

    /// Inverse of [`Self::voltage`]: the timing reading that maps to `v`.
    pub fn timing_for(&self, v: f64) -> f64 {
        (v + self.offset()) / self.gradient()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMeasurement {
    /// AM_Up, ns
    pub am_up: f64,
    /// AM_Down, ns
    pub am_down: f64,
    /// V_Up, mV: positive peak.
    pub v_up: f64,
    /// V_Down, mV: magnitude of the negative peak.
    pub v_down: f64,
}

/// How the matched-phase timing point is chosen inside each echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EchoTiming {
    /// Which rising zero crossing after the echo trigger is timed (1-based).
    /// The timed crossing has to fall inside the strong part of the burst,
    /// so with the default of 2 the burst needs at least 4 cycles.
    pub zero_crossing_index: u8,
    /// Timing trigger level as a fraction of the echo's measured V_Up.
    pub trigger_fraction: f64,
    /// Silence, in carrier periods, that ends an echo.
    pub quiet_periods: f64,
}

impl Default for EchoTiming {
    fn default() -> Self {
        EchoTiming {
            zero_crossing_index: 2,
            trigger_fraction: 0.25,
            quiet_periods: 2.0,
        }
    }
}

impl EchoTiming {
    pub fn check(&self) -> Result<()> {
        if self.zero_crossing_index == 0 {
            return Err(Error::Domain("zero crossing index is 1-based".into()));
        }
        if !(self.trigger_fraction > 0.0 && self.trigger_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "trigger fraction {} outside (0, 1)",
                self.trigger_fraction
            )));
        }
        if !(self.quiet_periods > 0.0 && self.quiet_periods.is_finite()) {
            return Err(Error::Domain("quiet period count must be positive".into()));
        }
        Ok(())
    }
}

/// One located echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoMeasurement {
    /// Span handed to the peak detector, s.
    pub window: (f64, f64),
    /// Comparator trigger time, s.
    pub trigger_time: f64,
    /// Matched-phase zero crossing used for timing, s.
    pub timing_crossing: f64,
    pub amplitude: AmplitudeMeasurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoPair {
    /// Far minus near matched-phase crossing, s.
    pub delta_t: f64,
    /// Near-echo V_Up scaled by the squared first-reflector transmission, mV.
    pub u_near: f64,
    /// Far-echo V_Up, mV.
    pub u_far: f64,
    /// Near-echo V_Up as measured, mV.
    pub raw_near: f64,
    pub near: EchoMeasurement,
    pub far: EchoMeasurement,
}

impl EchoPair {
    pub fn sound_speed(&self, geometry: &SensorGeometry) -> Result<f64> {
        crate::acoustics::sound_speed_from_tof(self.delta_t, geometry.base_length)
    }

    pub fn attenuation(&self, geometry: &SensorGeometry) -> Result<f64> {
        crate::acoustics::attenuation_coefficient(self.u_near, self.u_far, geometry.base_length)
    }
}

/// Interpolated crossing of `level` between samples `i − 1` and `i`, in
/// fractional sample units.
fn interpolate(samples: &[f64], i: usize, level: f64) -> f64 {
    let (a, b) = (samples[i - 1], samples[i]);
    (i - 1) as f64 + (level - a) / (b - a)
}

/// Alternating rising/falling crossings of `level` over `samples[start..end]`,
/// beginning with the first rising one. Positions in fractional samples.
struct Crossings<'a> {
    samples: &'a [f64],
    level: f64,
    next: usize,
    end: usize,
    want: Edge,
}

impl<'a> Crossings<'a> {
    fn new(samples: &'a [f64], level: f64, start: usize, end: usize) -> Self {
        Crossings {
            samples,
            level,
            next: start.max(1),
            end: end.min(samples.len()),
            want: Edge::Rising,
        }
    }

    fn rising_only(self) -> impl Iterator<Item = f64> + 'a {
        self.filter(|(_, e)| *e == Edge::Rising).map(|(p, _)| p)
    }
}

impl Iterator for Crossings<'_> {
    type Item = (f64, Edge);

    fn next(&mut self) -> Option<Self::Item> {
        while self.next < self.end {
            let i = self.next;
            self.next += 1;
            let (prev, cur) = (self.samples[i - 1], self.samples[i]);
            let hit = match self.want {
                Edge::Rising => prev < self.level && cur >= self.level,
                Edge::Falling => prev >= self.level && cur < self.level,
            };
            if hit {
                let edge = self.want;
                self.want = match edge {
                    Edge::Rising => Edge::Falling,
                    Edge::Falling => Edge::Rising,
                };
                return Some((interpolate(self.samples, i, self.level), edge));
            }
        }
        None
    }
}

/// Vertex of a least-squares parabola through the samples around the
/// extremum at `peak`: the contiguous run of samples at or above
/// `0.9 × samples[peak]`, kept inside `[lo, hi)`.
fn refine_peak(samples: &[f64], peak: usize, lo: usize, hi: usize) -> f64 {
    let top = samples[peak];
    if top <= 0.0 {
        return top;
    }
    let floor = 0.9 * top;
    let mut a = peak;
    while a > lo && samples[a - 1] >= floor {
        a -= 1;
    }
    let mut b = peak;
    while b + 1 < hi && samples[b + 1] >= floor {
        b += 1;
    }
    // Symmetric about the peak sample so an off-grid vertex is not pulled sideways.
    let half = (peak - a).min(b - peak);
    if half == 0 {
        return top;
    }
    let (a, b) = (peak - half, peak + half);

    // Fit y = c0 + c1·x + c2·x² with x centred on the peak sample.
    let (mut s0, mut s2, mut s4) = (0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for (j, &y) in samples[a..=b].iter().enumerate() {
        let x = j as f64 - half as f64;
        let x2 = x * x;
        s0 += 1.0;
        s2 += x2;
        s4 += x2 * x2;
        t0 += y;
        t1 += x * y;
        t2 += x2 * y;
    }
    // Odd moments vanish on a symmetric grid, so the system decouples.
    let c1 = t1 / s2;
    let det = s0 * s4 - s2 * s2;
    let c2 = (s0 * t2 - s2 * t0) / det;
    let c0 = (s4 * t0 - s2 * t2) / det;
    if c2 >= 0.0 {
        return top;
    }
    let x_v = -c1 / (2.0 * c2);
    if x_v.abs() > half as f64 {
        return top;
    }
    c0 - c1 * c1 / (4.0 * c2)
}

/// Behavioral time-to-digital converter with a fixed resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tdc {
    lsb: f64,
}

impl Default for Tdc {
    fn default() -> Self {
        Tdc { lsb: DEFAULT_LSB }
    }
}

impl Tdc {
    pub fn new(lsb: f64) -> Result<Self> {
        if !(lsb > 0.0 && lsb.is_finite()) {
            return Err(Error::Domain(format!("TDC LSB {lsb} s must be positive")));
        }
        Ok(Tdc { lsb })
    }

    pub fn lsb(&self) -> f64 {
        self.lsb
    }

    /// Nearest multiple of the LSB.
    pub fn quantize(&self, t: f64) -> f64 {
        (t / self.lsb).round() * self.lsb
    }

    fn quantize_ns(&self, t_ns: f64) -> f64 {
        let lsb_ns = self.lsb * 1e9;
        (t_ns / lsb_ns).round() * lsb_ns
    }

    /// Threshold crossings after `arm_time`, alternating rising/falling and
    /// starting with a rising edge.
    pub fn detect_crossings(&self, w: &Waveform, cfg: ComparatorConfig, arm_time: f64) -> Result<Vec<Crossing>> {
        if !(arm_time >= w.t0() && arm_time < w.end_time()) {
            return Err(Error::Domain(format!(
                "arm time {arm_time} s outside the record [{}, {}) s",
                w.t0(),
                w.end_time()
            )));
        }
        let start = w.index_at(arm_time).ceil() as usize;
        let crossings: Vec<Crossing> = Crossings::new(w.samples(), cfg.threshold(), start, w.len())
            .map(|(pos, edge)| Crossing {
                time: self.quantize(w.time_at(pos)),
                edge,
            })
            .collect();
        if crossings.is_empty() {
            return Err(Error::NoTrigger {
                threshold_mv: cfg.threshold(),
            });
        }
        Ok(crossings)
    }

    /// First Wave Mode over the whole record.
    ///
    /// The first half-wave that reaches the threshold is timed between its
    /// rising and falling threshold crossings. The comparator then drops to
    /// zero and the next positive half-wave, one carrier period later, is
    /// timed between its zero crossings as the reference.
    pub fn first_wave_ratio(&self, w: &Waveform, cfg: ComparatorConfig) -> Result<TdcMeasurement> {
        let samples = w.samples();
        let mut at_threshold = Crossings::new(samples, cfg.threshold(), 1, samples.len());
        let (rise, _) = at_threshold.next().ok_or(Error::NoTrigger {
            threshold_mv: cfg.threshold(),
        })?;
        let (fall, _) = at_threshold.next().ok_or(Error::Truncated)?;

        let mut at_zero = Crossings::new(samples, 0.0, fall.ceil() as usize, samples.len());
        let (ref_rise, _) = at_zero.next().ok_or(Error::Truncated)?;
        let (ref_fall, _) = at_zero.next().ok_or(Error::Truncated)?;

        let times: Vec<f64> = [rise, fall, ref_rise, ref_fall]
            .iter()
            .map(|&p| self.quantize(w.time_at(p)))
            .collect();
        let first = times[1] - times[0];
        let reference = times[3] - times[2];
        if !(reference > 0.0) {
            return Err(Error::Truncated);
        }
        Ok(TdcMeasurement {
            first_halfwave_width: first,
            reference_halfwave_width: reference,
            first_wave_ratio: (first / reference).clamp(0.0, 1.0),
            echo_times: times,
            quantization: self.lsb,
        })
    }

    /// Peak-detector amplitude measurement over `echo_window` (start, end) in s.
    ///
    /// The detector holds the positive (and, for AM_Down, the negative) peak
    /// of the signal in the window. The held voltage discharges linearly at
    /// the calibration gradient; the reported timing is the discharge time
    /// from the peak to `0.7 × peak` plus the baseline time of that settled
    /// level, so the calibration formulas return the held peak.
    pub fn measure_amplitude(
        &self,
        w: &Waveform,
        cal: &AmplitudeCalibration,
        echo_window: (f64, f64),
    ) -> Result<AmplitudeMeasurement> {
        cal.check()?;
        let (lo, hi) = w.index_span(echo_window.0, echo_window.1);
        if lo >= hi {
            return Err(Error::Domain(format!(
                "echo window {:?} s holds no samples",
                echo_window
            )));
        }
        let samples = w.samples();
        let up = held_peak(samples, lo, hi, 1.0);
        let down = held_peak(samples, lo, hi, -1.0);

        let gradient = cal.gradient();
        let timing = |peak: f64| {
            let peak = peak.max(0.0);
            let discharge = (1.0 - DISCHARGE_LEVEL) * peak / gradient;
            let baseline = cal.timing_for(DISCHARGE_LEVEL * peak);
            self.quantize_ns((discharge + baseline).max(0.0))
        };
        let am_up = timing(up);
        let am_down = timing(down);
        Ok(AmplitudeMeasurement {
            am_up,
            am_down,
            v_up: cal.voltage(am_up),
            v_down: cal.voltage(am_down),
        })
    }

    /// Sample spans (first, last active index) of up to `max` echoes that
    /// trigger the comparator. Candidates whose window does not look like a
    /// carrier burst (isolated noise spikes) are skipped.
    fn echo_spans(
        &self,
        w: &Waveform,
        geometry: &SensorGeometry,
        cfg: ComparatorConfig,
        timing: &EchoTiming,
        max: usize,
    ) -> Vec<(usize, usize)> {
        let samples = w.samples();
        let period = w.sample_rate() / geometry.carrier_frequency;
        let gap = (timing.quiet_periods * period).ceil() as usize;
        let f = geometry.carrier_frequency / w.sample_rate();
        locate_echoes(samples, cfg.threshold(), gap, max, |start, last| {
            let win = echo_window(w, period, start, last);
            let (lo, hi) = w.index_span(win.0, win.1);
            carrier_coherence(&samples[lo..hi], f) >= MIN_CARRIER_COHERENCE
        })
    }

    /// Number of echoes (at most `max`) that trigger the comparator at `cfg`.
    pub fn count_echoes(
        &self,
        w: &Waveform,
        geometry: &SensorGeometry,
        cfg: ComparatorConfig,
        timing: &EchoTiming,
        max: usize,
    ) -> usize {
        self.echo_spans(w, geometry, cfg, timing, max).len()
    }

    /// Locate the two echoes, time them at matched phase and measure both
    /// amplitudes.
    ///
    /// Echoes are found with the comparator threshold: an echo starts at a
    /// rising crossing and ends once the signal stays inside ±threshold for
    /// `timing.quiet_periods` carrier periods. Each echo is then re-triggered
    /// at `timing.trigger_fraction` of its own V_Up, and the
    /// `timing.zero_crossing_index`-th rising zero crossing after that point
    /// is its timestamp, so both echoes are timed on the same carrier cycle
    /// regardless of their amplitudes.
    pub fn measure_echo_pair(
        &self,
        w: &Waveform,
        geometry: &SensorGeometry,
        cfg: ComparatorConfig,
        cal: &AmplitudeCalibration,
        timing: &EchoTiming,
    ) -> Result<EchoPair> {
        geometry.check()?;
        cal.check()?;
        timing.check()?;
        let samples = w.samples();
        let period = w.sample_rate() / geometry.carrier_frequency;
        let spans = self.echo_spans(w, geometry, cfg, timing, 2);
        if spans.len() < 2 {
            return Err(Error::MissingEcho { found: spans.len() });
        }

        let window = |(start, last): (usize, usize)| echo_window(w, period, start, last);
        let (near_win, far_win) = (window(spans[0]), window(spans[1]));
        if near_win.1 > far_win.0 {
            return Err(Error::WindowsOverlap);
        }

        // `floor`: first sample this echo may claim.
        let measure = |span: (usize, usize), win: (f64, f64), floor: usize| -> Result<EchoMeasurement> {
            let first = self.measure_amplitude(w, cal, win)?;
            if !(first.v_up > 0.0) {
                return Err(Error::NoTrigger { threshold_mv: 0.0 });
            }
            let level = timing.trigger_fraction * first.v_up;
            // Gate opens where the signal last stayed under the re-trigger
            // level for a full period, so the onset lobes are never cut off.
            let onset = quiet_before(samples, span.0, level, period.ceil() as usize, floor);
            let (_, hi) = w.index_span(win.0, win.1);
            let win = (w.time_at(onset as f64), win.1);
            let amplitude = self.measure_amplitude(w, cal, win)?;
            let cf_trigger = Crossings::new(samples, level, onset.max(1), hi)
                .rising_only()
                .next()
                .ok_or(Error::NoTrigger { threshold_mv: level })?;
            let crossing = Crossings::new(samples, 0.0, cf_trigger.ceil() as usize, hi)
                .rising_only()
                .nth(timing.zero_crossing_index as usize - 1)
                .ok_or(Error::Truncated)?;
            // The timed crossing must sit inside the strong part of the burst.
            let strong_end = (onset..hi).rev().find(|&i| samples[i] >= level).unwrap_or(onset);
            if crossing > strong_end as f64 {
                return Err(Error::Truncated);
            }
            Ok(EchoMeasurement {
                window: win,
                trigger_time: self.quantize(w.time_at(span.0 as f64)),
                timing_crossing: self.quantize(w.time_at(crossing)),
                amplitude,
            })
        };
        let near = measure(spans[0], near_win, 0)?;
        let near_end = w.index_span(near.window.0, near.window.1).1;
        let far = measure(spans[1], far_win, near_end)?;

        let transmission = geometry.first_reflector_transmission;
        let raw_near = near.amplitude.v_up;
        Ok(EchoPair {
            delta_t: far.timing_crossing - near.timing_crossing,
            u_near: raw_near * transmission * transmission,
            u_far: far.amplitude.v_up,
            raw_near,
            near,
            far,
        })
    }
}

/// Start of the last run of `quiet` consecutive samples below `level` that
/// ends before `start`, not earlier than `floor`.
fn quiet_before(samples: &[f64], start: usize, level: f64, quiet: usize, floor: usize) -> usize {
    let mut run = 0;
    for i in (floor..start).rev() {
        if samples[i] < level {
            run += 1;
            if run >= quiet {
                return i;
            }
        } else {
            run = 0;
        }
    }
    floor
}

/// Share of the energy in `samples` that sits at the normalized carrier
/// frequency `f` (cycles per sample): |Σ s·e^(−j2πfn)|² / (N/2 · Σ s²).
fn carrier_coherence(samples: &[f64], f: f64) -> f64 {
    let energy: f64 = samples.iter().map(|s| s * s).sum();
    if samples.is_empty() || energy <= 0.0 {
        return 0.0;
    }
    let w = 2.0 * std::f64::consts::PI * f;
    let (re, im) = samples.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &s)| {
        let phase = w * n as f64;
        (re + s * phase.cos(), im - s * phase.sin())
    });
    (re * re + im * im) / (0.5 * samples.len() as f64 * energy)
}

/// Peak of `polarity × samples` over `[lo, hi)`, refined between samples.
fn held_peak(samples: &[f64], lo: usize, hi: usize, polarity: f64) -> f64 {
    let signed: Vec<f64> = samples[lo..hi].iter().map(|s| polarity * s).collect();
    let (idx, _) = signed
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    refine_peak(&signed, idx, 0, signed.len())
}

/// Window handed to the peak detector for an echo spanning samples
/// `start..=last`: one period of lead-in, half a period of run-out. In s.
fn echo_window(w: &Waveform, period: f64, start: usize, last: usize) -> (f64, f64) {
    let a = (start as f64 - period).max(0.0);
    let b = (last as f64 + 0.5 * period).min(w.len() as f64);
    (w.time_at(a), w.time_at(b))
}

/// Echo extents as (first index at/above threshold on a rising crossing,
/// last index with |s| ≥ threshold), up to `max` of them that `accept`.
fn locate_echoes(
    samples: &[f64],
    threshold: f64,
    gap: usize,
    max: usize,
    mut accept: impl FnMut(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    let active = |s: f64| s != 0.0 && s.abs() >= threshold;
    let mut echoes = Vec::new();
    let mut i = 1;
    while i < samples.len() && echoes.len() < max {
        if samples[i - 1] < threshold && samples[i] >= threshold && active(samples[i]) {
            let start = i;
            let mut last = i;
            let mut j = i + 1;
            while j < samples.len() && j - last <= gap {
                if active(samples[j]) {
                    last = j;
                }
                j += 1;
            }
            if j - last <= gap {
                // ran off the end of the record while still active
                break;
            }
            if accept(start, last) {
                echoes.push((start, last));
            }
            i = j;
        } else {
            i += 1;
        }
    }
    echoes
}

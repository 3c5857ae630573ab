//! Deterministic synthetic gaze traces with ground-truth events.
//!
//! Traces are built segment by segment: stationary fixations, linear
//! saccade sweeps, invalid blink runs, and linear pursuit sweeps.
//! Positional noise is isotropic Gaussian with a fixed seed, so a given
//! spec always reproduces byte-identical recordings. Detector tests use
//! the ground-truth event list as their reference.

use crate::error::{Error, Result};
use crate::kv::{parse_duration_ms, KvDocument};
use crate::model::{
    visual_angle_to_pixels, DisplayGeometry, GazeSample, Recording,
};

/// SplitMix64 pseudo-random generator.
///
/// state' = state + 0x9E3779B97F4A7C15; the output mixes the new state
/// with xor-shifts and the multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB. Small enough to re-implement in any language,
/// which keeps fixture corpora reproducible outside this crate.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1): the top 53 bits scaled by 2^-53.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the Marsaglia polar method. Draws uniform
    /// pairs in (-1, 1)^2 until one lands inside the unit disc; the spare
    /// variate is cached for the next call.
    pub fn next_gaussian(&mut self, spare: &mut Option<f64>) -> f64 {
        if let Some(v) = spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                *spare = Some(v * factor);
                return u * factor;
            }
        }
    }
}

/// One trace segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentSpec {
    /// Hold gaze at a point.
    Fixate { x: f64, y: f64, duration_ms: f64 },
    /// Sweep linearly from the previous position to a target.
    SaccadeTo { x: f64, y: f64, duration_ms: f64 },
    /// Emit invalid samples.
    Blink { duration_ms: f64 },
    /// Slow linear tracking sweep between two points. Generated for
    /// negative tests; detectors are not expected to emit it as a clean
    /// fixation.
    Pursuit {
        from_x: f64,
        from_y: f64,
        to_x: f64,
        to_y: f64,
        duration_ms: f64,
    },
}

impl SegmentSpec {
    pub fn duration_ms(&self) -> f64 {
        match self {
            SegmentSpec::Fixate { duration_ms, .. }
            | SegmentSpec::SaccadeTo { duration_ms, .. }
            | SegmentSpec::Blink { duration_ms }
            | SegmentSpec::Pursuit { duration_ms, .. } => *duration_ms,
        }
    }
}

/// Declarative description of a synthetic trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub segments: Vec<SegmentSpec>,
    pub sampling_rate_hz: f64,
    /// Gaussian position noise, in degrees when geometry is present,
    /// otherwise in pixels.
    pub noise_sigma: f64,
    pub seed: u64,
    pub geometry: Option<DisplayGeometry>,
}

impl TraceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sampling_rate_hz <= 0.0 {
            return Err(Error::invalid("sampling rate must be > 0"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::invalid("noise sigma must be >= 0"));
        }
        if self.segments.is_empty() {
            return Err(Error::invalid("trace spec has no segments"));
        }
        for seg in &self.segments {
            if seg.duration_ms() <= 0.0 {
                return Err(Error::invalid("segment durations must be > 0"));
            }
        }
        Ok(())
    }

    /// Reads a spec from the kv grammar. Segments are repeatable
    /// `segment =` entries under `[trace]`:
    ///
    /// ```text
    /// [trace]
    /// sampling_rate_hz = 250
    /// noise_sigma = 0.1
    /// seed = 7
    /// segment = fixate 960 540 200ms
    /// segment = saccade_to 400 300 40ms
    /// segment = blink 150ms
    /// segment = pursuit 100 100 500 500 1s
    /// ```
    pub fn from_kv(doc: &KvDocument) -> Result<Self> {
        let mut segments = Vec::new();
        for raw in doc.get_all("trace", "segment") {
            segments.push(parse_segment(raw)?);
        }
        let geometry = if doc.has_section("geometry") {
            Some(geometry_from_kv(doc)?)
        } else {
            None
        };
        let spec = TraceSpec {
            segments,
            sampling_rate_hz: doc
                .get_f64("trace", "sampling_rate_hz")?
                .unwrap_or(250.0),
            noise_sigma: doc.get_f64("trace", "noise_sigma")?.unwrap_or(0.0),
            seed: doc.get_u64("trace", "seed")?.unwrap_or(0),
            geometry,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn geometry_from_kv(doc: &KvDocument) -> Result<DisplayGeometry> {
    let need = |key: &str| -> Result<f64> {
        doc.get_f64("geometry", key)?
            .ok_or_else(|| Error::parse(format!("[geometry] missing `{key}`")))
    };
    DisplayGeometry::new(
        need("width_mm")?,
        need("height_mm")?,
        need("width_px")? as u32,
        need("height_px")? as u32,
        need("viewing_distance_mm")?,
    )
}

fn parse_segment(raw: &str) -> Result<SegmentSpec> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::parse(format!("segment `{raw}`: `{s}` is not a number")))
    };
    match parts.as_slice() {
        ["fixate", x, y, d] => Ok(SegmentSpec::Fixate {
            x: num(x)?,
            y: num(y)?,
            duration_ms: parse_duration_ms(d)?,
        }),
        ["saccade_to", x, y, d] => Ok(SegmentSpec::SaccadeTo {
            x: num(x)?,
            y: num(y)?,
            duration_ms: parse_duration_ms(d)?,
        }),
        ["blink", d] => Ok(SegmentSpec::Blink {
            duration_ms: parse_duration_ms(d)?,
        }),
        ["pursuit", fx, fy, tx, ty, d] => Ok(SegmentSpec::Pursuit {
            from_x: num(fx)?,
            from_y: num(fy)?,
            to_x: num(tx)?,
            to_y: num(ty)?,
            duration_ms: parse_duration_ms(d)?,
        }),
        _ => Err(Error::parse(format!(
            "segment `{raw}`: expected fixate|saccade_to|blink|pursuit"
        ))),
    }
}

/// Kind tag for ground-truth events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthKind {
    Fixation,
    Saccade,
    Blink,
    Pursuit,
}

/// One ground-truth event with exact segment boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthEvent {
    pub kind: TruthKind,
    pub onset_us: i64,
    pub duration_us: i64,
    /// Fixation point or sweep endpoint, when meaningful.
    pub x: f64,
    pub y: f64,
}

/// Synthesizes a recording and its ground-truth event list.
///
/// Samples sit at integer multiples of the sampling period; a sample
/// belongs to the segment whose half-open interval contains its
/// timestamp. Identical specs produce identical output.
pub fn generate(spec: &TraceSpec) -> Result<(Recording, Vec<TruthEvent>)> {
    spec.validate()?;
    let period_us = 1_000_000.0 / spec.sampling_rate_hz;

    let noise_px = if spec.noise_sigma == 0.0 {
        0.0
    } else {
        match &spec.geometry {
            Some(g) => visual_angle_to_pixels(spec.noise_sigma, g)?,
            None => spec.noise_sigma,
        }
    };

    // Segment boundaries in microseconds.
    let mut boundaries = Vec::with_capacity(spec.segments.len() + 1);
    let mut t = 0.0_f64;
    boundaries.push(0_i64);
    for seg in &spec.segments {
        t += seg.duration_ms() * 1000.0;
        boundaries.push(t.round() as i64);
    }
    let total_us = *boundaries.last().unwrap();

    let mut truth = Vec::with_capacity(spec.segments.len());
    let mut cursor = (0.0, 0.0);
    for (i, seg) in spec.segments.iter().enumerate() {
        let onset = boundaries[i];
        let duration = boundaries[i + 1] - boundaries[i];
        let (kind, x, y) = match *seg {
            SegmentSpec::Fixate { x, y, .. } => (TruthKind::Fixation, x, y),
            SegmentSpec::SaccadeTo { x, y, .. } => (TruthKind::Saccade, x, y),
            SegmentSpec::Blink { .. } => (TruthKind::Blink, cursor.0, cursor.1),
            SegmentSpec::Pursuit { to_x, to_y, .. } => (TruthKind::Pursuit, to_x, to_y),
        };
        truth.push(TruthEvent {
            kind,
            onset_us: onset,
            duration_us: duration,
            x,
            y,
        });
        cursor = match *seg {
            SegmentSpec::Fixate { x, y, .. } => (x, y),
            SegmentSpec::SaccadeTo { x, y, .. } => (x, y),
            SegmentSpec::Blink { .. } => cursor,
            SegmentSpec::Pursuit { to_x, to_y, .. } => (to_x, to_y),
        };
    }

    let mut rng = SplitMix64::new(spec.seed);
    let mut spare = None;
    let mut samples = Vec::new();
    let mut pos = (0.0, 0.0);
    let mut k = 0_i64;
    loop {
        let ts = (k as f64 * period_us).round() as i64;
        if ts >= total_us {
            break;
        }
        let seg_idx = match boundaries[1..].iter().position(|&b| ts < b) {
            Some(i) => i,
            None => break,
        };
        let seg = &spec.segments[seg_idx];
        let seg_start = boundaries[seg_idx];
        let seg_len = (boundaries[seg_idx + 1] - seg_start) as f64;
        let frac = (ts - seg_start) as f64 / seg_len;

        let sample = match *seg {
            SegmentSpec::Fixate { x, y, .. } => {
                pos = (x, y);
                valid_sample(ts, x, y, noise_px, &mut rng, &mut spare)
            }
            SegmentSpec::SaccadeTo { x, y, .. } => {
                let from = segment_entry_position(&spec.segments, seg_idx);
                let px = from.0 + (x - from.0) * frac;
                let py = from.1 + (y - from.1) * frac;
                pos = (px, py);
                valid_sample(ts, px, py, noise_px, &mut rng, &mut spare)
            }
            SegmentSpec::Pursuit {
                from_x,
                from_y,
                to_x,
                to_y,
                ..
            } => {
                let px = from_x + (to_x - from_x) * frac;
                let py = from_y + (to_y - from_y) * frac;
                pos = (px, py);
                valid_sample(ts, px, py, noise_px, &mut rng, &mut spare)
            }
            SegmentSpec::Blink { .. } => {
                let _ = pos;
                GazeSample::new(ts, None, false)
            }
        };
        samples.push(sample);
        k += 1;
    }

    if samples.is_empty() {
        return Err(Error::invalid("spec too short to produce any samples"));
    }

    let recording = Recording::new(samples, spec.geometry, spec.sampling_rate_hz, vec![])?;
    Ok((recording, truth))
}

/// Gaze position at the start of segment `idx` (end state of everything
/// before it).
fn segment_entry_position(segments: &[SegmentSpec], idx: usize) -> (f64, f64) {
    let mut pos = (0.0, 0.0);
    for seg in &segments[..idx] {
        pos = match *seg {
            SegmentSpec::Fixate { x, y, .. } => (x, y),
            SegmentSpec::SaccadeTo { x, y, .. } => (x, y),
            SegmentSpec::Blink { .. } => pos,
            SegmentSpec::Pursuit { to_x, to_y, .. } => (to_x, to_y),
        };
    }
    pos
}

fn valid_sample(
    ts: i64,
    x: f64,
    y: f64,
    noise_px: f64,
    rng: &mut SplitMix64,
    spare: &mut Option<f64>,
) -> GazeSample {
    let (nx, ny) = if noise_px > 0.0 {
        (
            x + noise_px * rng.next_gaussian(spare),
            y + noise_px * rng.next_gaussian(spare),
        )
    } else {
        (x, y)
    };
    let mut s = GazeSample::new(ts, Some((nx, ny)), true);
    s.pupil_left = Some(3.0);
    s.pupil_right = Some(3.0);
    s
}

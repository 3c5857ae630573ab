//! Core domain types shared by every processing stage.
//!
//! Canonical internal units: microseconds for time, stimulus pixels for
//! position, millimeters for pupil diameter. Angular quantities are
//! computed on demand from [`DisplayGeometry`]. All types are immutable
//! value data after construction.

use crate::error::{Error, Result};

/// One timestamped eye-tracker frame.
///
/// `gaze` is absent when the tracker reported no usable position for the
/// frame. `gaze_z` is preserved from 3-D capable logs but unused by any
/// processing stage.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeSample {
    /// Microseconds since recording start.
    pub timestamp_us: i64,
    /// Stimulus-space position in pixels, absent when invalid.
    pub gaze: Option<(f64, f64)>,
    /// Optional depth coordinate, parsed and carried through unused.
    pub gaze_z: Option<f64>,
    /// Pupil diameter of the left eye in millimeters.
    pub pupil_left: Option<f64>,
    /// Pupil diameter of the right eye in millimeters.
    pub pupil_right: Option<f64>,
    pub valid_left: bool,
    pub valid_right: bool,
}

impl GazeSample {
    pub fn new(timestamp_us: i64, gaze: Option<(f64, f64)>, valid: bool) -> Self {
        GazeSample {
            timestamp_us,
            gaze,
            gaze_z: None,
            pupil_left: None,
            pupil_right: None,
            valid_left: valid,
            valid_right: valid,
        }
    }

    /// Whether this sample counts as tracked under the given policy.
    ///
    /// A sample without gaze coordinates is never valid.
    pub fn is_valid(&self, policy: EyeSelection) -> bool {
        if self.gaze.is_none() {
            return false;
        }
        match policy {
            EyeSelection::Left => self.valid_left,
            EyeSelection::Right => self.valid_right,
            EyeSelection::Average => self.valid_left || self.valid_right,
            EyeSelection::StrictBoth => self.valid_left && self.valid_right,
        }
    }

    /// Pupil diameter combined across eyes under the given policy.
    pub fn pupil(&self, policy: EyeSelection) -> Option<f64> {
        let l = if self.valid_left { self.pupil_left } else { None };
        let r = if self.valid_right { self.pupil_right } else { None };
        match policy {
            EyeSelection::Left => l,
            EyeSelection::Right => r,
            EyeSelection::Average => match (l, r) {
                (Some(a), Some(b)) => Some((a + b) / 2.0),
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(b),
                (None, None) => None,
            },
            EyeSelection::StrictBoth => match (l, r) {
                (Some(a), Some(b)) => Some((a + b) / 2.0),
                _ => None,
            },
        }
    }
}

/// How binocular validity and pupil columns are combined into one signal.
///
/// Default is `Average`: a sample is valid when either eye is valid, and
/// per-eye values are averaged over the valid eyes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EyeSelection {
    Left,
    Right,
    #[default]
    Average,
    StrictBoth,
}

impl EyeSelection {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(EyeSelection::Left),
            "right" => Ok(EyeSelection::Right),
            "average" => Ok(EyeSelection::Average),
            "strict-both" | "strict_both" | "both" => Ok(EyeSelection::StrictBoth),
            other => Err(Error::invalid(format!(
                "unknown eye selection `{other}` (expected left|right|average|strict-both)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EyeSelection::Left => "left",
            EyeSelection::Right => "right",
            EyeSelection::Average => "average",
            EyeSelection::StrictBoth => "strict-both",
        }
    }
}

/// Physical display dimensions, resolution, and viewing distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayGeometry {
    pub width_mm: f64,
    pub height_mm: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub viewing_distance_mm: f64,
}

impl DisplayGeometry {
    pub fn new(
        width_mm: f64,
        height_mm: f64,
        width_px: u32,
        height_px: u32,
        viewing_distance_mm: f64,
    ) -> Result<Self> {
        if width_mm <= 0.0 || height_mm <= 0.0 || viewing_distance_mm <= 0.0 {
            return Err(Error::invalid("display dimensions and distance must be > 0"));
        }
        if width_px == 0 || height_px == 0 {
            return Err(Error::invalid("display resolution must be > 0"));
        }
        Ok(DisplayGeometry {
            width_mm,
            height_mm,
            width_px,
            height_px,
            viewing_distance_mm,
        })
    }

    pub fn mm_per_px_x(&self) -> f64 {
        self.width_mm / self.width_px as f64
    }

    pub fn mm_per_px_y(&self) -> f64 {
        self.height_mm / self.height_px as f64
    }

    /// True when the horizontal and vertical pixel pitches differ by more
    /// than 1%. Angular conversions use the horizontal pitch only, so
    /// callers should surface a warning for anisotropic displays.
    pub fn is_anisotropic(&self) -> bool {
        let x = self.mm_per_px_x();
        let y = self.mm_per_px_y();
        (x - y).abs() / x > 0.01
    }
}

/// Convert a pixel displacement to degrees of visual angle.
///
/// The displacement magnitude is converted to millimeters with the
/// horizontal pixel pitch, then `atan(chord / distance)` gives the angle.
/// Symmetric in the sign of both inputs.
pub fn pixels_to_degrees(dx_px: f64, dy_px: f64, geometry: &DisplayGeometry) -> f64 {
    let chord_mm = (dx_px.hypot(dy_px)) * geometry.mm_per_px_x();
    (chord_mm / geometry.viewing_distance_mm).atan().to_degrees()
}

/// Convert a visual angle to a horizontal pixel distance.
///
/// Returns `tan(theta) * viewing_distance` divided by the horizontal
/// pixel pitch. Requires `0 < theta_deg < 90`.
pub fn visual_angle_to_pixels(theta_deg: f64, geometry: &DisplayGeometry) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg < 90.0) {
        return Err(Error::invalid(format!(
            "visual angle must be in (0, 90) degrees, got {theta_deg}"
        )));
    }
    let chord_mm = theta_deg.to_radians().tan() * geometry.viewing_distance_mm;
    Ok(chord_mm / geometry.mm_per_px_x())
}

/// A timestamped event marker attached to a recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub timestamp_us: i64,
    pub label: String,
}

/// An ordered gaze-sample sequence with its capture metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Vec<GazeSample>,
    pub geometry: Option<DisplayGeometry>,
    pub sampling_rate_hz: f64,
    pub annotations: Vec<Annotation>,
}

impl Recording {
    /// Builds a recording, enforcing strictly increasing timestamps,
    /// a positive sampling rate, and (when there are enough samples)
    /// consistency between the declared rate and the median inter-sample
    /// interval within 10%.
    pub fn new(
        samples: Vec<GazeSample>,
        geometry: Option<DisplayGeometry>,
        sampling_rate_hz: f64,
        annotations: Vec<Annotation>,
    ) -> Result<Self> {
        if sampling_rate_hz <= 0.0 {
            return Err(Error::invalid("sampling rate must be > 0"));
        }
        for pair in samples.windows(2) {
            if pair[1].timestamp_us <= pair[0].timestamp_us {
                return Err(Error::invalid(format!(
                    "timestamps must strictly increase ({} then {})",
                    pair[0].timestamp_us, pair[1].timestamp_us
                )));
            }
        }
        if samples.len() >= 3 {
            let median = median_interval_us(&samples);
            let declared = 1_000_000.0 / sampling_rate_hz;
            if (median - declared).abs() / declared > 0.10 {
                return Err(Error::invalid(format!(
                    "declared rate {sampling_rate_hz} Hz implies {declared:.1} us intervals, \
                     but the median observed interval is {median:.1} us"
                )));
            }
        }
        Ok(Recording {
            samples,
            geometry,
            sampling_rate_hz,
            annotations,
        })
    }

    /// Nominal inter-sample period in microseconds.
    pub fn period_us(&self) -> f64 {
        1_000_000.0 / self.sampling_rate_hz
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
}

fn median_interval_us(samples: &[GazeSample]) -> f64 {
    let mut deltas: Vec<i64> = samples
        .windows(2)
        .map(|p| p[1].timestamp_us - p[0].timestamp_us)
        .collect();
    deltas.sort_unstable();
    let n = deltas.len();
    if n % 2 == 1 {
        deltas[n / 2] as f64
    } else {
        (deltas[n / 2 - 1] + deltas[n / 2]) as f64 / 2.0
    }
}

/// A detected fixation: gaze stabilized on a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixation {
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub onset_us: i64,
    pub duration_us: i64,
    pub mean_pupil_mm: Option<f64>,
}

impl Fixation {
    pub fn end_us(&self) -> i64 {
        self.onset_us + self.duration_us
    }

    /// Whether the centroid lies inside the stimulus rectangle.
    pub fn is_within(&self, width_px: f64, height_px: f64) -> bool {
        self.centroid_x >= 0.0
            && self.centroid_x < width_px
            && self.centroid_y >= 0.0
            && self.centroid_y < height_px
    }
}

/// A detected saccade: a rapid gaze shift between fixations.
///
/// `amplitude` and `peak_velocity` are in degrees (and degrees/second)
/// when display geometry was available to the detector, otherwise in
/// pixels (and pixels/second).
#[derive(Debug, Clone, PartialEq)]
pub struct Saccade {
    pub start_x: f64,
    pub start_y: f64,
    pub end_x: f64,
    pub end_y: f64,
    pub onset_us: i64,
    pub duration_us: i64,
    pub amplitude: f64,
    pub peak_velocity: f64,
}

/// A detected blink interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blink {
    pub onset_us: i64,
    pub duration_us: i64,
}

impl Blink {
    pub fn end_us(&self) -> i64 {
        self.onset_us + self.duration_us
    }
}

/// An ordered fixation sequence over one stimulus.
#[derive(Debug, Clone, PartialEq)]
pub struct Scanpath {
    pub fixations: Vec<Fixation>,
    pub stimulus_id: String,
}

impl Scanpath {
    /// Builds a scanpath, enforcing strictly increasing fixation onsets.
    pub fn new(fixations: Vec<Fixation>, stimulus_id: impl Into<String>) -> Result<Self> {
        for pair in fixations.windows(2) {
            if pair[1].onset_us <= pair[0].onset_us {
                return Err(Error::invalid("fixation onsets must strictly increase"));
            }
        }
        Ok(Scanpath {
            fixations,
            stimulus_id: stimulus_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }
}

//! Raw gaze-log ingestion, quality metrics, and exclusion rules.
//!
//! Input is delimiter-separated text with a header row; a [`ColumnMap`]
//! names which columns hold timestamps, gaze, pupil, and validity data.
//! Parsing normalizes everything into [`Recording`]s: timestamps become
//! microseconds since recording start, blank cells become absent values,
//! and non-monotone rows are dropped and counted.

use crate::error::{Error, Result};
use crate::kv::KvDocument;
use crate::model::{Annotation, DisplayGeometry, EyeSelection, GazeSample, Recording};
use std::io::{BufRead, Read, Write};

/// Timestamp unit of the raw log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimestampUnit {
    /// Detect by magnitude of the median inter-row delta: below 0.5 it
    /// is seconds, below 500 milliseconds, otherwise microseconds.
    #[default]
    Auto,
    Seconds,
    Milliseconds,
    Microseconds,
}

impl TimestampUnit {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(TimestampUnit::Auto),
            "s" | "seconds" => Ok(TimestampUnit::Seconds),
            "ms" | "milliseconds" => Ok(TimestampUnit::Milliseconds),
            "us" | "microseconds" => Ok(TimestampUnit::Microseconds),
            other => Err(Error::invalid(format!("unknown timestamp unit `{other}`"))),
        }
    }
}

/// Maps logical fields to column names of the raw log.
///
/// Gaze can come from combined `gaze_x`/`gaze_y` columns or per-eye
/// columns; with per-eye columns the eye-selection policy decides how
/// they merge. When validity columns are absent, validity is inferred
/// from the presence of gaze coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub timestamp: String,
    pub timestamp_unit: TimestampUnit,
    pub gaze_x: Option<String>,
    pub gaze_y: Option<String>,
    pub gaze_left_x: Option<String>,
    pub gaze_left_y: Option<String>,
    pub gaze_right_x: Option<String>,
    pub gaze_right_y: Option<String>,
    pub gaze_z: Option<String>,
    pub pupil_left: Option<String>,
    pub pupil_right: Option<String>,
    pub validity_left: Option<String>,
    pub validity_right: Option<String>,
    pub annotation: Option<String>,
    /// Cell values that count as "valid" in validity columns
    /// (case-insensitive). Anything else is invalid.
    pub validity_true_values: Vec<String>,
    pub delimiter: u8,
    pub eye_selection: EyeSelection,
    /// Declared sampling rate; inferred from the median interval when
    /// absent.
    pub sampling_rate_hz: Option<f64>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            timestamp: "timestamp".into(),
            timestamp_unit: TimestampUnit::Auto,
            gaze_x: Some("gaze_x".into()),
            gaze_y: Some("gaze_y".into()),
            gaze_left_x: None,
            gaze_left_y: None,
            gaze_right_x: None,
            gaze_right_y: None,
            gaze_z: None,
            pupil_left: None,
            pupil_right: None,
            validity_left: None,
            validity_right: None,
            annotation: None,
            validity_true_values: vec!["1".into(), "true".into(), "valid".into()],
            delimiter: b'\t',
            eye_selection: EyeSelection::Average,
            sampling_rate_hz: None,
        }
    }
}

impl ColumnMap {
    /// Reads a column map from the kv grammar's `[input]` section.
    pub fn from_kv(doc: &KvDocument) -> Result<Self> {
        let mut map = ColumnMap::default();
        let sec = "input";
        let col = |key: &str| doc.get(sec, key).map(str::to_string);
        if let Some(t) = col("timestamp") {
            map.timestamp = t;
        }
        if let Some(u) = doc.get(sec, "timestamp_unit") {
            map.timestamp_unit = TimestampUnit::parse(u)?;
        }
        map.gaze_x = col("gaze_x").or(map.gaze_x);
        map.gaze_y = col("gaze_y").or(map.gaze_y);
        map.gaze_left_x = col("gaze_left_x");
        map.gaze_left_y = col("gaze_left_y");
        map.gaze_right_x = col("gaze_right_x");
        map.gaze_right_y = col("gaze_right_y");
        map.gaze_z = col("gaze_z");
        map.pupil_left = col("pupil_left");
        map.pupil_right = col("pupil_right");
        map.validity_left = col("validity_left");
        map.validity_right = col("validity_right");
        map.annotation = col("annotation");
        if map.gaze_left_x.is_some() {
            // Per-eye columns supersede the combined default names.
            map.gaze_x = col("gaze_x");
            map.gaze_y = col("gaze_y");
        }
        if let Some(v) = doc.get(sec, "validity_true") {
            map.validity_true_values = v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
        if let Some(d) = doc.get(sec, "delimiter") {
            map.delimiter = match d.to_ascii_lowercase().as_str() {
                "tab" | "\\t" => b'\t',
                "comma" | "," => b',',
                ";" | "semicolon" => b';',
                other => {
                    return Err(Error::invalid(format!("unknown delimiter `{other}`")));
                }
            };
        }
        if let Some(e) = doc.get(sec, "eye_selection") {
            map.eye_selection = EyeSelection::parse(e)?;
        }
        map.sampling_rate_hz = doc.get_f64(sec, "sampling_rate_hz")?;
        Ok(map)
    }

    fn is_true(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.validity_true_values
            .iter()
            .any(|t| t.eq_ignore_ascii_case(cell))
    }
}

/// Result of parsing one raw log.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub recording: Recording,
    /// Rows dropped because their timestamp did not increase.
    pub dropped_non_monotone: usize,
    pub warnings: Vec<String>,
}

/// Parses a raw delimiter-separated gaze log.
///
/// Missing or blank numeric cells become absent values; rows whose
/// timestamps do not strictly increase are dropped and counted.
pub fn parse_recording<R: Read>(
    source: R,
    map: &ColumnMap,
    geometry: Option<DisplayGeometry>,
) -> Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(map.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| Error::parse(format!("header: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let find_opt = |name: &Option<String>| -> Result<Option<usize>> {
        name.as_deref().map(find).transpose()
    };

    let ts_idx = find(&map.timestamp)?;
    let gaze_x = find_opt(&map.gaze_x)?;
    let gaze_y = find_opt(&map.gaze_y)?;
    let left_x = find_opt(&map.gaze_left_x)?;
    let left_y = find_opt(&map.gaze_left_y)?;
    let right_x = find_opt(&map.gaze_right_x)?;
    let right_y = find_opt(&map.gaze_right_y)?;
    let gaze_z = find_opt(&map.gaze_z)?;
    let pupil_l = find_opt(&map.pupil_left)?;
    let pupil_r = find_opt(&map.pupil_right)?;
    let valid_l = find_opt(&map.validity_left)?;
    let valid_r = find_opt(&map.validity_right)?;
    let annot = find_opt(&map.annotation)?;

    if gaze_x.is_none() && left_x.is_none() && right_x.is_none() {
        return Err(Error::invalid(
            "column map names no gaze columns (gaze_x/gaze_y or per-eye)",
        ));
    }

    struct RawRow {
        ts: f64,
        gaze: Option<(f64, f64)>,
        gaze_z: Option<f64>,
        pupil_l: Option<f64>,
        pupil_r: Option<f64>,
        valid_l: bool,
        valid_r: bool,
        annotation: Option<String>,
    }

    let cell = |rec: &csv::StringRecord, idx: usize| -> Option<String> {
        rec.get(idx).map(str::to_string).filter(|s| !s.is_empty())
    };
    let num = |rec: &csv::StringRecord, idx: Option<usize>| -> Option<f64> {
        idx.and_then(|i| cell(rec, i)).and_then(|s| s.parse().ok())
    };

    let mut rows: Vec<RawRow> = Vec::new();
    for (lineno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(format!("row {}: {e}", lineno + 2)))?;
        let ts: f64 = match cell(&record, ts_idx).and_then(|s| s.parse().ok()) {
            Some(t) => t,
            None => continue, // unparseable timestamp: skip row
        };

        let lx = num(&record, left_x);
        let ly = num(&record, left_y);
        let rx = num(&record, right_x);
        let ry = num(&record, right_y);
        let cx = num(&record, gaze_x);
        let cy = num(&record, gaze_y);

        let vl = match valid_l {
            Some(i) => cell(&record, i).map(|s| map.is_true(&s)).unwrap_or(false),
            // Validity inferred from coordinate presence.
            None => lx.is_some() && ly.is_some() || cx.is_some() && cy.is_some(),
        };
        let vr = match valid_r {
            Some(i) => cell(&record, i).map(|s| map.is_true(&s)).unwrap_or(false),
            None => rx.is_some() && ry.is_some() || cx.is_some() && cy.is_some(),
        };

        // Combine per-eye positions under the eye-selection policy.
        let left = lx.zip(ly).filter(|_| vl);
        let right = rx.zip(ry).filter(|_| vr);
        let gaze = match (cx.zip(cy), left, right) {
            (Some(c), _, _) => Some(c),
            (None, l, r) => match map.eye_selection {
                EyeSelection::Left => l,
                EyeSelection::Right => r,
                EyeSelection::Average => match (l, r) {
                    (Some(a), Some(b)) => Some(((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)),
                    (Some(a), None) => Some(a),
                    (None, Some(b)) => Some(b),
                    (None, None) => None,
                },
                EyeSelection::StrictBoth => match (l, r) {
                    (Some(a), Some(b)) => Some(((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)),
                    _ => None,
                },
            },
        };

        rows.push(RawRow {
            ts,
            gaze,
            gaze_z: num(&record, gaze_z),
            pupil_l: num(&record, pupil_l),
            pupil_r: num(&record, pupil_r),
            valid_l: vl,
            valid_r: vr,
            annotation: annot.and_then(|i| cell(&record, i)),
        });
    }

    if rows.is_empty() {
        return Err(Error::EmptyRecording("no parseable rows".into()));
    }

    // Resolve the timestamp unit before monotonicity filtering.
    let unit_scale = match map.timestamp_unit {
        TimestampUnit::Seconds => 1e6,
        TimestampUnit::Milliseconds => 1e3,
        TimestampUnit::Microseconds => 1.0,
        TimestampUnit::Auto => {
            let mut deltas: Vec<f64> = rows
                .windows(2)
                .map(|p| p[1].ts - p[0].ts)
                .filter(|d| *d > 0.0)
                .collect();
            deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = deltas.get(deltas.len() / 2).copied().unwrap_or(1000.0);
            if median < 0.5 {
                1e6
            } else if median < 500.0 {
                1e3
            } else {
                1.0
            }
        }
    };

    let t0 = rows[0].ts;
    let mut samples = Vec::with_capacity(rows.len());
    let mut annotations = Vec::new();
    let mut dropped = 0usize;
    let mut last_ts = i64::MIN;
    for row in &rows {
        let ts_us = ((row.ts - t0) * unit_scale).round() as i64;
        if ts_us <= last_ts {
            dropped += 1;
            continue;
        }
        last_ts = ts_us;
        let mut s = GazeSample::new(ts_us, row.gaze, false);
        s.gaze_z = row.gaze_z;
        s.pupil_left = row.pupil_l;
        s.pupil_right = row.pupil_r;
        s.valid_left = row.valid_l;
        s.valid_right = row.valid_r;
        samples.push(s);
        if let Some(label) = &row.annotation {
            annotations.push(Annotation {
                timestamp_us: ts_us,
                label: label.clone(),
            });
        }
    }

    if samples.is_empty() {
        return Err(Error::EmptyRecording("all rows dropped".into()));
    }

    let rate = match map.sampling_rate_hz {
        Some(r) => r,
        None => infer_rate_hz(&samples),
    };

    let mut warnings = Vec::new();
    if let Some(g) = &geometry {
        if g.is_anisotropic() {
            warnings.push(format!(
                "display is anisotropic ({:.4} vs {:.4} mm/px); angular conversions use the horizontal pitch",
                g.mm_per_px_x(),
                g.mm_per_px_y()
            ));
        }
    }

    let recording = Recording::new(samples, geometry, rate, annotations)?;
    Ok(ParseOutcome {
        recording,
        dropped_non_monotone: dropped,
        warnings,
    })
}

fn infer_rate_hz(samples: &[GazeSample]) -> f64 {
    if samples.len() < 2 {
        return 1.0;
    }
    let mut deltas: Vec<i64> = samples
        .windows(2)
        .map(|p| p[1].timestamp_us - p[0].timestamp_us)
        .collect();
    deltas.sort_unstable();
    let median = deltas[deltas.len() / 2] as f64;
    1e6 / median
}

/// Fraction of samples valid under the eye-selection policy.
pub fn tracking_ratio(rec: &Recording, policy: EyeSelection) -> Result<f64> {
    if rec.is_empty() {
        return Err(Error::EmptyRecording("tracking ratio of empty recording".into()));
    }
    let valid = rec.samples.iter().filter(|s| s.is_valid(policy)).count();
    Ok(valid as f64 / rec.len() as f64)
}

/// Why a recording was excluded, if it was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExclusionReason {
    #[default]
    None,
    LowTrackingRatio,
    MarkedBadCalibration,
    MarkedInvalidTrial,
}

impl ExclusionReason {
    pub fn name(&self) -> &'static str {
        match self {
            ExclusionReason::None => "none",
            ExclusionReason::LowTrackingRatio => "low_tracking_ratio",
            ExclusionReason::MarkedBadCalibration => "marked_bad_calibration",
            ExclusionReason::MarkedInvalidTrial => "marked_invalid_trial",
        }
    }
}

/// Manual per-recording exclusion marks set by the experimenter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExclusionFlags {
    pub marked_bad_calibration: bool,
    pub marked_invalid_trial: bool,
}

/// Gap-duration histogram bucket edges in milliseconds.
pub const GAP_BUCKET_EDGES_MS: [f64; 5] = [50.0, 100.0, 200.0, 500.0, 1000.0];

/// Quality report for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub tracking_ratio: f64,
    pub sample_count: usize,
    /// Invalid-run durations bucketed by [`GAP_BUCKET_EDGES_MS`]: one
    /// count per bucket below each edge plus a final overflow bucket.
    pub gap_histogram: Vec<(String, usize)>,
    pub excluded: bool,
    pub exclusion_reason: ExclusionReason,
}

/// Applies the exclusion rules in priority order: calibration mark,
/// then invalid-trial mark, then tracking ratio strictly below the
/// threshold.
pub fn apply_exclusion_rules(
    rec: &Recording,
    min_tracking_ratio: f64,
    flags: ExclusionFlags,
    policy: EyeSelection,
) -> Result<IngestReport> {
    if !(0.0..=1.0).contains(&min_tracking_ratio) {
        return Err(Error::invalid("min tracking ratio must be in [0, 1]"));
    }
    let ratio = tracking_ratio(rec, policy)?;
    let reason = if flags.marked_bad_calibration {
        ExclusionReason::MarkedBadCalibration
    } else if flags.marked_invalid_trial {
        ExclusionReason::MarkedInvalidTrial
    } else if ratio < min_tracking_ratio {
        ExclusionReason::LowTrackingRatio
    } else {
        ExclusionReason::None
    };
    Ok(IngestReport {
        tracking_ratio: ratio,
        sample_count: rec.len(),
        gap_histogram: gap_histogram(rec, policy),
        excluded: reason != ExclusionReason::None,
        exclusion_reason: reason,
    })
}

fn gap_histogram(rec: &Recording, policy: EyeSelection) -> Vec<(String, usize)> {
    let period = rec.period_us();
    let mut counts = vec![0usize; GAP_BUCKET_EDGES_MS.len() + 1];
    let mut run_start: Option<usize> = None;
    let n = rec.len();
    for i in 0..=n {
        let invalid = i < n && !rec.samples[i].is_valid(policy);
        match (run_start, invalid) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                let span = rec.samples[i - 1].timestamp_us - rec.samples[s].timestamp_us;
                let ms = (span as f64 + period) / 1000.0;
                let bucket = GAP_BUCKET_EDGES_MS
                    .iter()
                    .position(|&e| ms < e)
                    .unwrap_or(GAP_BUCKET_EDGES_MS.len());
                counts[bucket] += 1;
                run_start = None;
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    let mut lo = 0.0;
    for (i, &edge) in GAP_BUCKET_EDGES_MS.iter().enumerate() {
        out.push((format!("{lo}-{edge}ms"), counts[i]));
        lo = edge;
    }
    out.push((format!(">{lo}ms"), counts[GAP_BUCKET_EDGES_MS.len()]));
    out
}

/// Segmentation scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentScheme {
    /// Fixed half-open intervals of the given length from the first
    /// sample; a sample on a boundary belongs to the following segment.
    FixedIntervals { duration_us: i64 },
    /// Boundaries at annotations whose label matches the filter (all
    /// annotations when absent).
    AtAnnotations { label_filter: Option<String> },
    /// Annotation boundaries first, then fixed sub-intervals inside
    /// each span.
    Hybrid {
        label_filter: Option<String>,
        sub_duration_us: i64,
    },
}

/// Splits a recording into segments that partition its sample range.
/// Segments inherit geometry and rate; empty intervals are skipped.
pub fn segment(rec: &Recording, scheme: &SegmentScheme) -> Result<Vec<Recording>> {
    if rec.is_empty() {
        return Err(Error::EmptyRecording("cannot segment empty recording".into()));
    }
    let t0 = rec.samples[0].timestamp_us;
    let t_end = rec.samples[rec.len() - 1].timestamp_us;

    let boundaries: Vec<i64> = match scheme {
        SegmentScheme::FixedIntervals { duration_us } => {
            if *duration_us <= 0 {
                return Err(Error::invalid("interval duration must be > 0"));
            }
            fixed_boundaries(t0, t_end, *duration_us)
        }
        SegmentScheme::AtAnnotations { label_filter } => {
            annotation_boundaries(rec, label_filter.as_deref())?
        }
        SegmentScheme::Hybrid {
            label_filter,
            sub_duration_us,
        } => {
            if *sub_duration_us <= 0 {
                return Err(Error::invalid("sub-interval duration must be > 0"));
            }
            let marks = annotation_boundaries(rec, label_filter.as_deref())?;
            let mut all = Vec::new();
            for (i, &b) in marks.iter().enumerate() {
                let span_end = marks.get(i + 1).copied().unwrap_or(t_end + 1);
                let mut t = b;
                while t < span_end {
                    all.push(t);
                    t += sub_duration_us;
                }
            }
            all
        }
    };

    let mut segments = Vec::new();
    for (i, &start) in boundaries.iter().enumerate() {
        let end = boundaries.get(i + 1).copied().unwrap_or(i64::MAX);
        let samples: Vec<GazeSample> = rec
            .samples
            .iter()
            .filter(|s| s.timestamp_us >= start && s.timestamp_us < end)
            .cloned()
            .collect();
        if samples.is_empty() {
            continue;
        }
        let annotations: Vec<Annotation> = rec
            .annotations
            .iter()
            .filter(|a| a.timestamp_us >= start && a.timestamp_us < end)
            .cloned()
            .collect();
        segments.push(Recording {
            samples,
            geometry: rec.geometry,
            sampling_rate_hz: rec.sampling_rate_hz,
            annotations,
        });
    }
    Ok(segments)
}

fn fixed_boundaries(t0: i64, t_end: i64, duration_us: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut t = t0;
    while t <= t_end {
        out.push(t);
        t += duration_us;
    }
    out
}

fn annotation_boundaries(rec: &Recording, filter: Option<&str>) -> Result<Vec<i64>> {
    let mut marks: Vec<i64> = rec
        .annotations
        .iter()
        .filter(|a| filter.map_or(true, |f| a.label == f))
        .map(|a| a.timestamp_us)
        .collect();
    if marks.is_empty() {
        let mut available: Vec<&str> = rec
            .annotations
            .iter()
            .map(|a| a.label.as_str())
            .collect();
        available.sort_unstable();
        available.dedup();
        return Err(Error::invalid(format!(
            "no annotations match{}; available labels: [{}]",
            filter.map(|f| format!(" `{f}`")).unwrap_or_default(),
            available.join(", ")
        )));
    }
    marks.sort_unstable();
    marks.dedup();
    Ok(marks)
}

/// Normalized recording interchange format.
///
/// Metadata as leading `#key=value` comment lines (sampling rate,
/// geometry, annotations), then a header and one tab-separated row per
/// sample with the fixed field order `timestamp_us, x, y, pupil_l,
/// pupil_r, valid_l, valid_r`. Absent values are empty cells; validity
/// is 1/0. `gaze_z` is not carried by this format.
pub const NORMALIZED_HEADER: &str = "timestamp_us\tx\ty\tpupil_l\tpupil_r\tvalid_l\tvalid_r";

pub fn write_normalized<W: Write>(mut w: W, rec: &Recording) -> Result<()> {
    writeln!(w, "#sampling_rate_hz={}", rec.sampling_rate_hz)?;
    if let Some(g) = &rec.geometry {
        writeln!(
            w,
            "#geometry={},{},{},{},{}",
            g.width_mm, g.height_mm, g.width_px, g.height_px, g.viewing_distance_mm
        )?;
    }
    for a in &rec.annotations {
        writeln!(w, "#annotation={},{}", a.timestamp_us, a.label)?;
    }
    writeln!(w, "{NORMALIZED_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &rec.samples {
        let (x, y) = match s.gaze {
            Some((x, y)) => (x.to_string(), y.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.timestamp_us,
            x,
            y,
            opt(s.pupil_left),
            opt(s.pupil_right),
            s.valid_left as u8,
            s.valid_right as u8
        )?;
    }
    Ok(())
}

pub fn read_normalized<R: BufRead>(r: R) -> Result<Recording> {
    let mut rate: Option<f64> = None;
    let mut geometry: Option<DisplayGeometry> = None;
    let mut annotations: Vec<Annotation> = Vec::new();
    let mut samples: Vec<GazeSample> = Vec::new();
    let mut saw_header = false;

    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once('=') {
                match key.trim() {
                    "sampling_rate_hz" => {
                        rate = Some(value.trim().parse().map_err(|_| {
                            Error::parse(format!("bad sampling rate `{value}`"))
                        })?)
                    }
                    "geometry" => {
                        let parts: Vec<f64> = value
                            .split(',')
                            .map(|p| p.trim().parse())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| Error::parse(format!("bad geometry `{value}`")))?;
                        if parts.len() != 5 {
                            return Err(Error::parse("geometry needs 5 values"));
                        }
                        geometry = Some(DisplayGeometry::new(
                            parts[0],
                            parts[1],
                            parts[2] as u32,
                            parts[3] as u32,
                            parts[4],
                        )?);
                    }
                    "annotation" => {
                        let (t, label) = value.split_once(',').ok_or_else(|| {
                            Error::parse(format!("bad annotation `{value}`"))
                        })?;
                        annotations.push(Annotation {
                            timestamp_us: t.trim().parse().map_err(|_| {
                                Error::parse(format!("bad annotation time `{t}`"))
                            })?,
                            label: label.to_string(),
                        });
                    }
                    _ => {} // unknown metadata is ignored
                }
            }
            continue;
        }
        if !saw_header {
            if trimmed != NORMALIZED_HEADER {
                return Err(Error::parse(format!(
                    "line {}: expected normalized header",
                    no + 1
                )));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(Error::parse(format!(
                "line {}: expected 7 columns, got {}",
                no + 1,
                cols.len()
            )));
        }
        let opt_num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| {
                    Error::parse(format!("line {}: bad number `{s}`", no + 1))
                })
            }
        };
        let ts: i64 = cols[0]
            .parse()
            .map_err(|_| Error::parse(format!("line {}: bad timestamp", no + 1)))?;
        let gaze = match (opt_num(cols[1])?, opt_num(cols[2])?) {
            (Some(x), Some(y)) => Some((x, y)),
            _ => None,
        };
        let mut s = GazeSample::new(ts, gaze, false);
        s.pupil_left = opt_num(cols[3])?;
        s.pupil_right = opt_num(cols[4])?;
        s.valid_left = cols[5] == "1";
        s.valid_right = cols[6] == "1";
        samples.push(s);
    }

    if samples.is_empty() {
        return Err(Error::EmptyRecording("normalized file has no samples".into()));
    }
    let rate = rate.unwrap_or_else(|| infer_rate_hz(&samples));
    Recording::new(samples, geometry, rate, annotations)
}

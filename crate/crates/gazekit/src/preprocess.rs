//! Signal conditioning for gaze and pupil traces.
//!
//! Everything operates on [`Series`], a timestamped scalar sequence in
//! which values may be absent (untracked) and filled values are marked
//! synthetic. Operations never fabricate data silently: smoothing leaves
//! absent points absent, interpolation marks what it fills, and nothing
//! extrapolates past the first or last valid point.

use crate::error::{Error, Result};
use crate::model::Blink;

/// One point of a scalar series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub timestamp_us: i64,
    pub value: Option<f64>,
    /// True when the value was synthesized (interpolated or replaced)
    /// rather than measured.
    pub synthetic: bool,
}

impl SeriesPoint {
    pub fn measured(timestamp_us: i64, value: Option<f64>) -> Self {
        SeriesPoint {
            timestamp_us,
            value,
            synthetic: false,
        }
    }
}

/// A timestamped scalar sequence (pupil diameter, one gaze axis, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub points: Vec<SeriesPoint>,
}

impl Series {
    pub fn new(points: Vec<SeriesPoint>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[1].timestamp_us <= pair[0].timestamp_us {
                return Err(Error::invalid("series timestamps must strictly increase"));
            }
        }
        Ok(Series { points })
    }

    pub fn from_values(timestamps_us: &[i64], values: &[Option<f64>]) -> Result<Self> {
        if timestamps_us.len() != values.len() {
            return Err(Error::invalid("timestamp/value length mismatch"));
        }
        Series::new(
            timestamps_us
                .iter()
                .zip(values)
                .map(|(&t, &v)| SeriesPoint::measured(t, v))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.value).collect()
    }

    fn valid_count(&self) -> usize {
        self.points.iter().filter(|p| p.value.is_some()).count()
    }

    /// Median inter-point interval, used to convert durations to sample
    /// counts.
    fn median_interval_us(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut deltas: Vec<i64> = self
            .points
            .windows(2)
            .map(|p| p[1].timestamp_us - p[0].timestamp_us)
            .collect();
        deltas.sort_unstable();
        let n = deltas.len();
        Some(if n % 2 == 1 {
            deltas[n / 2] as f64
        } else {
            (deltas[n / 2 - 1] + deltas[n / 2]) as f64 / 2.0
        })
    }
}

/// Smoothing filter choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    None,
    /// Each point replaced by the mean of its window.
    MovingAverage { window: usize },
    /// Each point replaced by the median of its window.
    Median { window: usize },
}

/// Gap-fill method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpolation {
    None,
    Linear,
    NearestNeighbor,
    /// Triangular-kernel weighted average of valid points within
    /// `kernel_width` samples on each side.
    WeightedAverage { kernel_width: usize },
}

/// Replacement strategy for blink windows in pupil traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlinkStrategy {
    /// Linear bridge between the last valid point before and the first
    /// after the padded window.
    Interpolate,
    /// Fill with the mean of the two neighbor-window means (100 ms on
    /// each side by default).
    AverageNeighbors { neighbor_window_ms: f64 },
    /// Moving-average low-pass over the whole series with blink samples
    /// masked out; the window spans roughly `window_ms`.
    LowPass { window_ms: f64 },
}

/// Whether interpolation runs before smoothing or after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CleanOrder {
    #[default]
    InterpolateThenSmooth,
    SmoothThenInterpolate,
}

/// Full cleaning configuration for one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    pub smoothing: Smoothing,
    pub interpolation: Interpolation,
    /// Gaps at least this long are left untouched. Default 75 ms, below
    /// typical blink duration so real blinks are not silently erased.
    pub max_interp_gap_ms: f64,
    pub order: CleanOrder,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            smoothing: Smoothing::None,
            interpolation: Interpolation::Linear,
            max_interp_gap_ms: 75.0,
            order: CleanOrder::InterpolateThenSmooth,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<()> {
        match self.smoothing {
            Smoothing::MovingAverage { window } | Smoothing::Median { window } => {
                check_window(window, usize::MAX)?;
            }
            Smoothing::None => {}
        }
        if self.max_interp_gap_ms <= 0.0 {
            return Err(Error::invalid("max_interp_gap must be > 0"));
        }
        Ok(())
    }
}

fn check_window(window: usize, len: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::invalid(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    if window > len {
        return Err(Error::invalid(format!(
            "window {window} exceeds series length {len}"
        )));
    }
    Ok(())
}

/// Applies a cleaning config to a series: gap interpolation and
/// smoothing, in the configured order.
pub fn clean(series: &Series, cfg: &CleanConfig) -> Result<Series> {
    cfg.validate()?;
    let interp = |s: &Series| -> Result<Series> {
        match cfg.interpolation {
            Interpolation::None => Ok(s.clone()),
            method => {
                if s.valid_count() < 2 {
                    // Nothing to anchor a fill on; pass through.
                    Ok(s.clone())
                } else {
                    interpolate_gaps(s, method, cfg.max_interp_gap_ms)
                }
            }
        }
    };
    let smoothed = |s: &Series| -> Result<Series> {
        match cfg.smoothing {
            Smoothing::None => Ok(s.clone()),
            method => smooth(s, method),
        }
    };
    match cfg.order {
        CleanOrder::InterpolateThenSmooth => smoothed(&interp(series)?),
        CleanOrder::SmoothThenInterpolate => interp(&smoothed(series)?),
    }
}

/// Sliding-window smoothing.
///
/// The window must be odd, at least 3, and no longer than the series.
/// Edges use symmetric shrunken windows (the half-width shrinks to what
/// fits on both sides). Absent input points stay absent, and absent
/// neighbors simply drop out of the window statistics.
pub fn smooth(series: &Series, method: Smoothing) -> Result<Series> {
    let window = match method {
        Smoothing::None => return Ok(series.clone()),
        Smoothing::MovingAverage { window } | Smoothing::Median { window } => window,
    };
    check_window(window, series.len())?;
    let n = series.len();
    let half = window / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let p = series.points[i];
        if p.value.is_none() {
            out.push(p);
            continue;
        }
        let reach = half.min(i).min(n - 1 - i);
        let mut vals: Vec<f64> = series.points[i - reach..=i + reach]
            .iter()
            .filter_map(|q| q.value)
            .collect();
        let value = match method {
            Smoothing::MovingAverage { .. } => {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
            Smoothing::Median { .. } => {
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let m = vals.len();
                if m % 2 == 1 {
                    vals[m / 2]
                } else {
                    (vals[m / 2 - 1] + vals[m / 2]) / 2.0
                }
            }
            Smoothing::None => unreachable!(),
        };
        out.push(SeriesPoint {
            timestamp_us: p.timestamp_us,
            value: Some(value),
            synthetic: p.synthetic,
        });
    }
    Series::new(out)
}

/// Fills gaps of absent values that are shorter than `max_gap_ms`.
///
/// A gap's duration is the time between its bounding valid points.
/// Filled points are marked synthetic; gaps at or over the limit stay
/// untouched, and nothing is filled before the first or after the last
/// valid point.
pub fn interpolate_gaps(
    series: &Series,
    method: Interpolation,
    max_gap_ms: f64,
) -> Result<Series> {
    if series.valid_count() < 2 {
        return Err(Error::InsufficientData(
            "interpolation needs at least 2 valid points".into(),
        ));
    }
    if let Interpolation::None = method {
        return Ok(series.clone());
    }
    let max_gap_us = max_gap_ms * 1000.0;
    let pts = &series.points;
    let mut out = pts.clone();

    let valid_idx: Vec<usize> = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.value.is_some())
        .map(|(i, _)| i)
        .collect();

    for pair in valid_idx.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b == a + 1 {
            continue;
        }
        let (ta, tb) = (pts[a].timestamp_us, pts[b].timestamp_us);
        if (tb - ta) as f64 >= max_gap_us {
            continue;
        }
        let (va, vb) = (pts[a].value.unwrap(), pts[b].value.unwrap());
        for i in a + 1..b {
            let t = pts[i].timestamp_us;
            let value = match method {
                Interpolation::Linear => {
                    let frac = (t - ta) as f64 / (tb - ta) as f64;
                    va + (vb - va) * frac
                }
                Interpolation::NearestNeighbor => {
                    // Ties go to the earlier point.
                    if t - ta <= tb - t {
                        va
                    } else {
                        vb
                    }
                }
                Interpolation::WeightedAverage { kernel_width } => {
                    weighted_average(series, i, kernel_width)
                        .unwrap_or_else(|| {
                            let frac = (t - ta) as f64 / (tb - ta) as f64;
                            va + (vb - va) * frac
                        })
                }
                Interpolation::None => unreachable!(),
            };
            out[i] = SeriesPoint {
                timestamp_us: t,
                value: Some(value),
                synthetic: true,
            };
        }
    }
    Series::new(out)
}

/// Triangular-kernel average of measured values within `kernel_width`
/// samples on each side of index `i`: weight = 1 - |dt| / W where W is
/// the kernel half-width in time.
fn weighted_average(series: &Series, i: usize, kernel_width: usize) -> Option<f64> {
    let period = series.median_interval_us()?;
    let width_us = kernel_width.max(1) as f64 * period;
    let t = series.points[i].timestamp_us;
    let lo = i.saturating_sub(kernel_width);
    let hi = (i + kernel_width).min(series.len() - 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for p in &series.points[lo..=hi] {
        if let Some(v) = p.value {
            let dt = (p.timestamp_us - t).abs() as f64;
            let w = 1.0 - dt / width_us;
            if w > 0.0 {
                num += w * v;
                den += w;
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Replaces pupil samples inside blink windows (padded by `pad_ms` on
/// each side). Overlapping padded windows are merged first. Replaced
/// samples are marked synthetic.
pub fn remove_blinks_from_pupil(
    pupil: &Series,
    blinks: &[Blink],
    pad_ms: f64,
    strategy: BlinkStrategy,
) -> Result<Series> {
    if blinks.is_empty() {
        return Ok(pupil.clone());
    }
    let pad_us = (pad_ms * 1000.0) as i64;
    let mut windows: Vec<(i64, i64)> = blinks
        .iter()
        .map(|b| (b.onset_us - pad_us, b.end_us() + pad_us))
        .collect();
    windows.sort_by_key(|w| w.0);
    let mut merged: Vec<(i64, i64)> = Vec::new();
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }

    let in_window =
        |t: i64| -> bool { merged.iter().any(|&(s, e)| t >= s && t <= e) };

    match strategy {
        BlinkStrategy::Interpolate => {
            let mut out = pupil.points.clone();
            for &(ws, we) in &merged {
                let before = pupil
                    .points
                    .iter()
                    .rev()
                    .find(|p| p.timestamp_us < ws && p.value.is_some());
                let after = pupil
                    .points
                    .iter()
                    .find(|p| p.timestamp_us > we && p.value.is_some());
                for (i, p) in pupil.points.iter().enumerate() {
                    if p.timestamp_us < ws || p.timestamp_us > we {
                        continue;
                    }
                    let value = match (before, after) {
                        (Some(a), Some(b)) => {
                            let frac = (p.timestamp_us - a.timestamp_us) as f64
                                / (b.timestamp_us - a.timestamp_us) as f64;
                            Some(a.value.unwrap() + (b.value.unwrap() - a.value.unwrap()) * frac)
                        }
                        // No anchor on one side: nothing to bridge with.
                        _ => None,
                    };
                    out[i] = SeriesPoint {
                        timestamp_us: p.timestamp_us,
                        value,
                        synthetic: value.is_some(),
                    };
                }
            }
            Series::new(out)
        }
        BlinkStrategy::AverageNeighbors { neighbor_window_ms } => {
            let nb_us = (neighbor_window_ms * 1000.0) as i64;
            let mut out = pupil.points.clone();
            for &(ws, we) in &merged {
                let pre: Vec<f64> = pupil
                    .points
                    .iter()
                    .filter(|p| p.timestamp_us >= ws - nb_us && p.timestamp_us < ws)
                    .filter_map(|p| p.value)
                    .collect();
                let post: Vec<f64> = pupil
                    .points
                    .iter()
                    .filter(|p| p.timestamp_us > we && p.timestamp_us <= we + nb_us)
                    .filter_map(|p| p.value)
                    .collect();
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                // Fill = mean of the two window means; one-sided when a
                // window is empty, absent when both are.
                let fill = match (pre.is_empty(), post.is_empty()) {
                    (false, false) => Some((mean(&pre) + mean(&post)) / 2.0),
                    (false, true) => Some(mean(&pre)),
                    (true, false) => Some(mean(&post)),
                    (true, true) => None,
                };
                for (i, p) in pupil.points.iter().enumerate() {
                    if p.timestamp_us >= ws && p.timestamp_us <= we {
                        out[i] = SeriesPoint {
                            timestamp_us: p.timestamp_us,
                            value: fill,
                            synthetic: fill.is_some(),
                        };
                    }
                }
            }
            Series::new(out)
        }
        BlinkStrategy::LowPass { window_ms } => {
            // Mask blink windows, then moving-average the whole series.
            let masked = Series::new(
                pupil
                    .points
                    .iter()
                    .map(|p| {
                        if in_window(p.timestamp_us) {
                            SeriesPoint {
                                timestamp_us: p.timestamp_us,
                                value: None,
                                synthetic: false,
                            }
                        } else {
                            *p
                        }
                    })
                    .collect(),
            )?;
            let period = masked
                .median_interval_us()
                .ok_or_else(|| Error::InsufficientData("series too short".into()))?;
            let mut window = ((window_ms * 1000.0 / period).round() as usize).max(3);
            if window % 2 == 0 {
                window += 1;
            }
            let window = window.min(if masked.len() % 2 == 1 {
                masked.len()
            } else {
                masked.len().saturating_sub(1)
            });
            check_window(window, masked.len())?;
            // Blink samples get the filtered estimate from their shrunken
            // window; fall back to linear bridging where the whole window
            // was masked.
            let half = window / 2;
            let n = masked.len();
            let mut out = Vec::with_capacity(n);
            for (i, p) in masked.points.iter().enumerate() {
                let reach = half.min(i).min(n - 1 - i);
                let vals: Vec<f64> = masked.points[i - reach..=i + reach]
                    .iter()
                    .filter_map(|q| q.value)
                    .collect();
                let blinked = in_window(p.timestamp_us);
                let value = if vals.is_empty() {
                    None
                } else {
                    Some(vals.iter().sum::<f64>() / vals.len() as f64)
                };
                out.push(SeriesPoint {
                    timestamp_us: p.timestamp_us,
                    value,
                    synthetic: blinked && value.is_some(),
                });
            }
            let bridged = Series::new(out)?;
            if bridged.valid_count() >= 2 {
                interpolate_gaps(&bridged, Interpolation::Linear, f64::INFINITY)
            } else {
                Ok(bridged)
            }
        }
    }
}

/// Baseline-correction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    /// Subtract the baseline statistic from every value.
    Subtractive,
    /// Divide every value by the baseline statistic.
    Divisive,
}

/// Statistic summarizing the baseline window. Median is the default
/// choice: it tolerates outliers in the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineStatistic {
    #[default]
    Median,
    Mean,
}

/// Normalizes a pupil series against a baseline window.
///
/// The window is half-open `[start, end)`, at most 1 second long, and
/// must contain at least one valid sample. Divisive mode additionally
/// requires a positive baseline statistic.
pub fn baseline_correct(
    pupil: &Series,
    baseline_window_us: (i64, i64),
    mode: BaselineMode,
    statistic: BaselineStatistic,
) -> Result<Series> {
    let (start, end) = baseline_window_us;
    if end <= start {
        return Err(Error::invalid("baseline window must have positive length"));
    }
    if end - start > 1_000_000 {
        return Err(Error::invalid("baseline window must be at most 1 second"));
    }
    let mut base: Vec<f64> = pupil
        .points
        .iter()
        .filter(|p| p.timestamp_us >= start && p.timestamp_us < end)
        .filter_map(|p| p.value)
        .collect();
    if base.is_empty() {
        return Err(Error::InsufficientData(
            "baseline window contains no valid samples".into(),
        ));
    }
    let stat = match statistic {
        BaselineStatistic::Mean => base.iter().sum::<f64>() / base.len() as f64,
        BaselineStatistic::Median => {
            base.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = base.len();
            if m % 2 == 1 {
                base[m / 2]
            } else {
                (base[m / 2 - 1] + base[m / 2]) / 2.0
            }
        }
    };
    if let BaselineMode::Divisive = mode {
        if stat <= 0.0 {
            return Err(Error::invalid(format!(
                "divisive baseline requires a positive statistic, got {stat}"
            )));
        }
    }
    let out = pupil
        .points
        .iter()
        .map(|p| SeriesPoint {
            timestamp_us: p.timestamp_us,
            value: p.value.map(|v| match mode {
                BaselineMode::Subtractive => v - stat,
                BaselineMode::Divisive => v / stat,
            }),
            synthetic: p.synthetic,
        })
        .collect();
    Series::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[Option<f64>]) -> Series {
        let ts: Vec<i64> = (0..values.len() as i64).map(|i| i * 4000).collect();
        Series::from_values(&ts, values).unwrap()
    }

    fn all(values: &[f64]) -> Series {
        series(&values.iter().map(|&v| Some(v)).collect::<Vec<_>>())
    }

    #[test]
    fn smoothing_constant_is_identity() {
        let s = all(&[2.5; 20]);
        for method in [
            Smoothing::MovingAverage { window: 5 },
            Smoothing::Median { window: 5 },
        ] {
            let out = smooth(&s, method).unwrap();
            assert!(out.points.iter().all(|p| p.value == Some(2.5)));
        }
    }

    #[test]
    fn moving_average_center() {
        let s = all(&[1.0, 10.0, 1.0]);
        let out = smooth(&s, Smoothing::MovingAverage { window: 3 }).unwrap();
        assert_eq!(out.points[1].value, Some(4.0));
        // Edges use shrunken symmetric windows: just the point itself.
        assert_eq!(out.points[0].value, Some(1.0));
        assert_eq!(out.points[2].value, Some(1.0));
    }

    #[test]
    fn median_matches_bruteforce_oracle() {
        // Noisy sine; per-index brute-force median over the same window.
        let mut rng = crate::synth::SplitMix64::new(11);
        let values: Vec<f64> = (0..500)
            .map(|i| (i as f64 * 0.05).sin() + rng.next_f64() * 0.4)
            .collect();
        let s = all(&values);
        let out = smooth(&s, Smoothing::Median { window: 5 }).unwrap();
        for i in 0..values.len() {
            let reach = 2.min(i).min(values.len() - 1 - i);
            let mut w: Vec<f64> = values[i - reach..=i + reach].to_vec();
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect = if w.len() % 2 == 1 {
                w[w.len() / 2]
            } else {
                (w[w.len() / 2 - 1] + w[w.len() / 2]) / 2.0
            };
            assert_eq!(out.points[i].value, Some(expect), "index {i}");
        }
    }

    #[test]
    fn smoothing_preserves_absent_and_length() {
        let s = series(&[Some(1.0), None, Some(2.0), Some(3.0), None]);
        let out = smooth(&s, Smoothing::MovingAverage { window: 3 }).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.points[1].value.is_none());
        assert!(out.points[4].value.is_none());
        // Window around index 2 sees only the valid neighbors.
        assert_eq!(out.points[2].value, Some(2.5));
    }

    #[test]
    fn smoothing_window_validation() {
        let s = all(&[1.0, 2.0, 3.0]);
        assert!(smooth(&s, Smoothing::MovingAverage { window: 4 }).is_err());
        assert!(smooth(&s, Smoothing::MovingAverage { window: 1 }).is_err());
        assert!(smooth(&s, Smoothing::MovingAverage { window: 5 }).is_err());
    }

    #[test]
    fn linear_fill_midpoint() {
        let s = series(&[Some(2.0), None, Some(4.0)]);
        let out = interpolate_gaps(&s, Interpolation::Linear, 100.0).unwrap();
        assert_eq!(out.points[1].value, Some(3.0));
        assert!(out.points[1].synthetic);
        assert!(!out.points[0].synthetic);
    }

    #[test]
    fn nearest_neighbor_takes_closer_endpoint() {
        let s = Series::from_values(
            &[0, 1000, 10000],
            &[Some(2.0), None, Some(4.0)],
        )
        .unwrap();
        let out = interpolate_gaps(&s, Interpolation::NearestNeighbor, 100.0).unwrap();
        assert_eq!(out.points[1].value, Some(2.0));
    }

    #[test]
    fn long_gaps_left_alone() {
        let s = series(&[Some(1.0), None, None, None, Some(5.0)]);
        // Gap spans 16 ms; limit of 10 ms leaves it untouched.
        let out = interpolate_gaps(&s, Interpolation::Linear, 10.0).unwrap();
        assert!(out.points[1..4].iter().all(|p| p.value.is_none()));
    }

    #[test]
    fn no_extrapolation_outside_valid_range() {
        let s = series(&[None, Some(1.0), None, Some(2.0), None]);
        let out = interpolate_gaps(&s, Interpolation::Linear, 100.0).unwrap();
        assert!(out.points[0].value.is_none());
        assert!(out.points[4].value.is_none());
        assert_eq!(out.points[2].value, Some(1.5));
    }

    #[test]
    fn linear_fill_matches_two_point_oracle() {
        // Random dropout; oracle re-derives each fill from its anchors.
        let mut rng = crate::synth::SplitMix64::new(3);
        let values: Vec<Option<f64>> = (0..300)
            .map(|i| {
                if rng.next_f64() < 0.25 && i % 50 != 0 {
                    None
                } else {
                    Some((i as f64 * 0.13).cos() * 2.0 + 3.0)
                }
            })
            .collect();
        let s = series(&values);
        let out = interpolate_gaps(&s, Interpolation::Linear, 1_000.0).unwrap();

        let valid: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_some())
            .map(|(i, _)| i)
            .collect();
        for pair in valid.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for i in a + 1..b {
                let ta = s.points[a].timestamp_us as f64;
                let tb = s.points[b].timestamp_us as f64;
                let t = s.points[i].timestamp_us as f64;
                let expect = values[a].unwrap()
                    + (values[b].unwrap() - values[a].unwrap()) * (t - ta) / (tb - ta);
                let got = out.points[i].value.unwrap();
                assert!((got - expect).abs() < 1e-12, "i={i}");
            }
        }
    }

    #[test]
    fn interpolation_needs_two_valid_points() {
        let s = series(&[Some(1.0), None, None]);
        assert!(interpolate_gaps(&s, Interpolation::Linear, 100.0).is_err());
    }

    #[test]
    fn blink_removal_noop_without_blinks() {
        let s = all(&[3.0, 3.1, 3.2]);
        let out = remove_blinks_from_pupil(&s, &[], 50.0, BlinkStrategy::Interpolate).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn average_neighbors_uses_mean_of_window_means() {
        // 4 ms sampling; blink at [40 ms, 60 ms); pad 0 for arithmetic
        // clarity. Pre-window mean 3.0, post-window mean 3.4 -> fill 3.2.
        let mut values = vec![Some(3.0); 10]; // t = 0..36 ms
        values.extend(vec![Some(10.0); 5]); // t = 40..56 ms (blinky garbage)
        values.extend(vec![Some(3.4); 10]); // t = 60..96 ms
        let s = series(&values);
        let blink = Blink {
            onset_us: 40_000,
            duration_us: 16_000,
        };
        let out = remove_blinks_from_pupil(
            &s,
            &[blink],
            0.0,
            BlinkStrategy::AverageNeighbors {
                neighbor_window_ms: 100.0,
            },
        )
        .unwrap();
        for p in &out.points[10..15] {
            assert!((p.value.unwrap() - 3.2).abs() < 1e-12);
            assert!(p.synthetic);
        }
        // Outside the blink window nothing changed.
        assert_eq!(out.points[9].value, Some(3.0));
        assert!(!out.points[9].synthetic);
        assert_eq!(out.points[15].value, Some(3.4));
    }

    #[test]
    fn interpolate_strategy_matches_gap_oracle() {
        // A dip injected into a linear ramp; replacement must equal the
        // linear bridge between the anchor samples.
        let values: Vec<Option<f64>> = (0..50)
            .map(|i| {
                if (20..25).contains(&i) {
                    Some(0.5)
                } else {
                    Some(3.0 + i as f64 * 0.01)
                }
            })
            .collect();
        let s = series(&values);
        let blink = Blink {
            onset_us: 20 * 4000,
            duration_us: 4 * 4000,
        };
        let out =
            remove_blinks_from_pupil(&s, &[blink], 0.0, BlinkStrategy::Interpolate).unwrap();

        // Oracle: mask the window and linearly fill the gap.
        let masked: Vec<Option<f64>> = values
            .iter()
            .enumerate()
            .map(|(i, v)| if (20..=24).contains(&i) { None } else { *v })
            .collect();
        let oracle =
            interpolate_gaps(&series(&masked), Interpolation::Linear, f64::INFINITY).unwrap();
        for i in 20..=24 {
            let got = out.points[i].value.unwrap();
            let expect = oracle.points[i].value.unwrap();
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_blinks_merge() {
        let s = all(&[3.0; 40]);
        let blinks = [
            Blink {
                onset_us: 20_000,
                duration_us: 20_000,
            },
            Blink {
                onset_us: 30_000,
                duration_us: 30_000,
            },
        ];
        let out =
            remove_blinks_from_pupil(&s, &blinks, 4.0, BlinkStrategy::Interpolate).unwrap();
        // One merged window [16 ms, 64 ms]; constant series bridges to 3.0.
        let synthetic: Vec<usize> = out
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.synthetic)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(synthetic.first(), Some(&4));
        assert_eq!(synthetic.last(), Some(&16));
        assert!(out.points.iter().all(|p| p.value == Some(3.0)));
    }

    #[test]
    fn baseline_subtractive_constant_to_zero() {
        let s = all(&[3.5; 20]);
        let out = baseline_correct(
            &s,
            (0, 40_000),
            BaselineMode::Subtractive,
            BaselineStatistic::Median,
        )
        .unwrap();
        assert!(out.points.iter().all(|p| p.value == Some(0.0)));
    }

    #[test]
    fn baseline_divisive_constant_to_one() {
        let s = all(&[3.5; 20]);
        let out = baseline_correct(
            &s,
            (0, 40_000),
            BaselineMode::Divisive,
            BaselineStatistic::Median,
        )
        .unwrap();
        assert!(out.points.iter().all(|p| p.value == Some(1.0)));
    }

    #[test]
    fn baseline_median_of_first_three() {
        let s = all(&[3.0, 3.2, 3.1, 3.6, 3.8]);
        // First three samples: t in [0, 12 ms); median(3.0, 3.2, 3.1) = 3.1.
        let out = baseline_correct(
            &s,
            (0, 12_000),
            BaselineMode::Subtractive,
            BaselineStatistic::Median,
        )
        .unwrap();
        let expect = [-0.1, 0.1, 0.0, 0.5, 0.7];
        for (p, e) in out.points.iter().zip(expect) {
            assert!((p.value.unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_errors() {
        let s = all(&[3.5; 20]);
        // Empty window (before any sample).
        assert!(baseline_correct(
            &series(&[None, None, Some(1.0)]),
            (0, 8000),
            BaselineMode::Subtractive,
            BaselineStatistic::Mean,
        )
        .is_err());
        // Over one second.
        assert!(baseline_correct(
            &s,
            (0, 1_200_000),
            BaselineMode::Subtractive,
            BaselineStatistic::Median,
        )
        .is_err());
        // Divisive with zero baseline.
        let zeros = all(&[0.0; 20]);
        assert!(baseline_correct(
            &zeros,
            (0, 40_000),
            BaselineMode::Divisive,
            BaselineStatistic::Median,
        )
        .is_err());
    }

    #[test]
    fn baseline_median_resists_minority_outliers() {
        // Corrupt 2 of 5 baseline samples by pushing one value on each
        // side of the median further out; the median is unchanged.
        let clean = all(&[2.9, 3.4, 3.2, 3.0, 3.1, 4.0, 4.1]);
        let dirty = all(&[-500.0, 900.0, 3.2, 3.0, 3.1, 4.0, 4.1]);
        let window = (0, 20_000);
        let a = baseline_correct(
            &clean,
            window,
            BaselineMode::Subtractive,
            BaselineStatistic::Median,
        )
        .unwrap();
        let b = baseline_correct(
            &dirty,
            window,
            BaselineMode::Subtractive,
            BaselineStatistic::Median,
        )
        .unwrap();
        // Same statistic (3.1) subtracted in both runs.
        assert_eq!(a.points[5].value, b.points[5].value);
        assert_eq!(a.points[6].value, b.points[6].value);
    }
}

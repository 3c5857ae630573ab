//! Pipeline configuration: the kv config file plus command-line
//! overrides, resolved into one validated structure.
//!
//! Layering is flag > file > default: `--set section.key=value` appends
//! entries after the file's, and lookups take the last value.

use anyhow::{anyhow, bail, Context, Result};
use gazekit::ingest::ColumnMap;
use gazekit::kv::{parse_duration_ms, KvDocument};
use gazekit::model::DisplayGeometry;
use gazekit::preprocess::{BlinkStrategy, CleanConfig, CleanOrder, Interpolation, Smoothing};
use gazekit::synth::geometry_from_kv;
use gazekit::viz::{Normalization, RenderStyle, SaliencyConfig, SigmaSpec};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Which detector the pipeline runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Ivt(gazekit::events::IvtConfig),
    Idt(gazekit::events::IdtConfig),
}

/// ROI grid specification, fitted lazily for percentile grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub percentile: bool,
    pub cols: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlinkRemoval {
    pub pad_ms: f64,
    pub strategy: BlinkStrategy,
}

/// Raster format for saliency output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    PgmText,
    PgmBinary,
    PpmText,
    PpmBinary,
}

impl RasterFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            RasterFormat::PgmText | RasterFormat::PgmBinary => "pgm",
            RasterFormat::PpmText | RasterFormat::PpmBinary => "ppm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub columns: ColumnMap,
    pub geometry: Option<DisplayGeometry>,
    pub min_tracking_ratio: f64,
    pub marked_bad_calibration: Vec<String>,
    pub marked_invalid_trial: Vec<String>,
    pub clean: CleanConfig,
    pub blink_removal: BlinkRemoval,
    pub blink_min_ms: f64,
    pub blink_max_ms: f64,
    pub detector: Detector,
    pub encode_enabled: bool,
    pub grid: GridSpec,
    pub bin_ms: Option<f64>,
    pub saliency_enabled: bool,
    pub saliency: SaliencyConfig,
    pub raster_format: RasterFormat,
    pub render_enabled: bool,
    pub render_style: RenderStyle,
    pub stimulus_px: Option<(usize, usize)>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            columns: ColumnMap::default(),
            geometry: None,
            min_tracking_ratio: 0.75,
            marked_bad_calibration: Vec::new(),
            marked_invalid_trial: Vec::new(),
            clean: CleanConfig::default(),
            blink_removal: BlinkRemoval {
                pad_ms: 50.0,
                strategy: BlinkStrategy::Interpolate,
            },
            blink_min_ms: 75.0,
            blink_max_ms: 500.0,
            detector: Detector::Ivt(gazekit::events::IvtConfig::default()),
            encode_enabled: true,
            grid: GridSpec {
                percentile: false,
                cols: 4,
                rows: 2,
            },
            bin_ms: None,
            saliency_enabled: true,
            saliency: SaliencyConfig::default(),
            raster_format: RasterFormat::PgmText,
            render_enabled: true,
            render_style: RenderStyle::default(),
            stimulus_px: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Loads the config file (if any), appends `--set` overrides, and
/// resolves the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            KvDocument::parse(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => KvDocument::new(),
    };
    for spec in overrides {
        let (key_path, value) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects section.key=value, got `{spec}`"))?;
        let (section, key) = key_path
            .split_once('.')
            .ok_or_else(|| anyhow!("--set expects section.key=value, got `{spec}`"))?;
        doc.push(section.trim(), key.trim(), value.trim());
    }
    resolve(&doc)
}

fn resolve(doc: &KvDocument) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();

    cfg.columns = ColumnMap::from_kv(doc)?;
    if doc.has_section("geometry") {
        cfg.geometry = Some(geometry_from_kv(doc)?);
    }

    if let Some(r) = doc.get_f64("exclude", "min_tracking_ratio")? {
        if !(0.0..=1.0).contains(&r) {
            bail!("min_tracking_ratio must be in [0, 1], got {r}");
        }
        cfg.min_tracking_ratio = r;
    }
    cfg.marked_bad_calibration = doc
        .get_all("exclude", "mark_bad_calibration")
        .into_iter()
        .map(str::to_string)
        .collect();
    cfg.marked_invalid_trial = doc
        .get_all("exclude", "mark_invalid_trial")
        .into_iter()
        .map(str::to_string)
        .collect();

    if let Some(v) = doc.get("clean", "interpolation") {
        cfg.clean.interpolation = parse_interpolation(v)?;
    }
    if let Some(v) = doc.get("clean", "smoothing") {
        cfg.clean.smoothing = parse_smoothing(v)?;
    }
    if let Some(v) = doc.get("clean", "max_interp_gap_ms") {
        cfg.clean.max_interp_gap_ms = parse_duration_ms(v)?;
    }
    if let Some(v) = doc.get("clean", "order") {
        cfg.clean.order = match v {
            "interpolate_then_smooth" => CleanOrder::InterpolateThenSmooth,
            "smooth_then_interpolate" => CleanOrder::SmoothThenInterpolate,
            other => bail!("unknown clean order `{other}`"),
        };
    }
    if let Some(v) = doc.get("clean", "blink_pad_ms") {
        cfg.blink_removal.pad_ms = parse_duration_ms(v)?;
    }
    if let Some(v) = doc.get("clean", "blink_strategy") {
        cfg.blink_removal.strategy = match v {
            "interpolate" => BlinkStrategy::Interpolate,
            "average" | "average_neighbors" => BlinkStrategy::AverageNeighbors {
                neighbor_window_ms: doc
                    .get_f64("clean", "blink_neighbor_window_ms")?
                    .unwrap_or(100.0),
            },
            "low_pass" | "lowpass" => BlinkStrategy::LowPass {
                window_ms: doc.get_f64("clean", "blink_lowpass_window_ms")?.unwrap_or(200.0),
            },
            other => bail!("unknown blink strategy `{other}`"),
        };
    }

    if let Some(v) = doc.get_f64("detect", "blink_min_ms")? {
        cfg.blink_min_ms = v;
    }
    if let Some(v) = doc.get_f64("detect", "blink_max_ms")? {
        cfg.blink_max_ms = v;
    }
    let algorithm = doc.get("detect", "algorithm").unwrap_or("ivt");
    cfg.detector = match algorithm {
        "ivt" => {
            let mut ivt = gazekit::events::IvtConfig::default();
            if let Some(v) = doc.get_f64("detect", "velocity_threshold")? {
                ivt.velocity_threshold = v;
            }
            if let Some(v) = doc.get("detect", "min_fixation_ms") {
                ivt.min_fixation_duration_ms = parse_duration_ms(v)?;
            }
            if let Some(v) = doc.get_bool("detect", "amplitude_between_centroids")? {
                ivt.amplitude_between_centroids = v;
            }
            ivt.validate()?;
            Detector::Ivt(ivt)
        }
        "idt" => {
            let mut idt = gazekit::events::IdtConfig::default();
            if let Some(v) = doc.get_f64("detect", "dispersion_threshold")? {
                idt.dispersion_threshold = v;
            }
            if let Some(v) = doc.get("detect", "duration_threshold_ms") {
                idt.duration_threshold_ms = parse_duration_ms(v)?;
            }
            idt.validate()?;
            Detector::Idt(idt)
        }
        other => bail!("unknown detector `{other}` (expected ivt or idt)"),
    };

    if let Some(v) = doc.get_bool("encode", "enabled")? {
        cfg.encode_enabled = v;
    }
    if let Some(v) = doc.get("encode", "grid") {
        cfg.grid = parse_grid(v)?;
    }
    if let Some(v) = doc.get("encode", "bin_ms") {
        cfg.bin_ms = if v == "none" {
            None
        } else {
            Some(parse_duration_ms(v)?)
        };
    }

    if let Some(v) = doc.get_bool("saliency", "enabled")? {
        cfg.saliency_enabled = v;
    }
    match (
        doc.get_f64("saliency", "sigma_px")?,
        doc.get_f64("saliency", "sigma_deg")?,
    ) {
        (Some(px), None) => cfg.saliency.sigma = SigmaSpec::Pixels(px),
        (None, Some(deg)) => {
            let geometry = cfg
                .geometry
                .ok_or_else(|| anyhow!("sigma_deg requires a [geometry] section"))?;
            cfg.saliency.sigma = SigmaSpec::FromAngle {
                degrees: deg,
                geometry,
            };
        }
        (Some(_), Some(_)) => bail!("set either sigma_px or sigma_deg, not both"),
        (None, None) => {}
    }
    if let Some(v) = doc.get_bool("saliency", "weight_by_duration")? {
        cfg.saliency.weight_by_duration = v;
    }
    if let Some(v) = doc.get("saliency", "normalization") {
        cfg.saliency.normalization = match v {
            "max" | "max_to_one" => Normalization::MaxToOne,
            "sum" | "sum_to_one" => Normalization::SumToOne,
            other => bail!("unknown normalization `{other}`"),
        };
    }
    if let Some(v) = doc.get("saliency", "format") {
        cfg.raster_format = match v {
            "pgm" | "pgm-text" => RasterFormat::PgmText,
            "pgm-binary" => RasterFormat::PgmBinary,
            "ppm" | "ppm-text" => RasterFormat::PpmText,
            "ppm-binary" => RasterFormat::PpmBinary,
            other => bail!("unknown raster format `{other}`"),
        };
    }

    if let Some(v) = doc.get_bool("render", "enabled")? {
        cfg.render_enabled = v;
    }
    if let Some(v) = doc.get_f64("render", "radius_scale")? {
        cfg.render_style.radius_scale = v;
    }
    if let Some(v) = doc.get_bool("render", "dots")? {
        cfg.render_style.show_duration_dots = v;
    }

    match (
        doc.get_u64("stimulus", "width_px")?,
        doc.get_u64("stimulus", "height_px")?,
    ) {
        (Some(w), Some(h)) => cfg.stimulus_px = Some((w as usize, h as usize)),
        (None, None) => {}
        _ => bail!("[stimulus] needs both width_px and height_px"),
    }

    if let Some(v) = doc.get("output", "dir") {
        cfg.output_dir = PathBuf::from(v);
    }

    Ok(cfg)
}

fn parse_interpolation(v: &str) -> Result<Interpolation> {
    Ok(match v {
        "none" => Interpolation::None,
        "linear" => Interpolation::Linear,
        "nearest" | "nearest_neighbor" => Interpolation::NearestNeighbor,
        other => match other.strip_prefix("weighted:") {
            Some(k) => Interpolation::WeightedAverage {
                kernel_width: k
                    .parse()
                    .map_err(|_| anyhow!("bad weighted kernel width `{k}`"))?,
            },
            None => bail!("unknown interpolation `{other}`"),
        },
    })
}

fn parse_smoothing(v: &str) -> Result<Smoothing> {
    if v == "none" {
        return Ok(Smoothing::None);
    }
    let (name, window) = v
        .split_once(':')
        .ok_or_else(|| anyhow!("smoothing needs a window, e.g. moving_average:5"))?;
    let window: usize = window
        .parse()
        .map_err(|_| anyhow!("bad smoothing window `{window}`"))?;
    Ok(match name {
        "moving_average" | "mean" => Smoothing::MovingAverage { window },
        "median" => Smoothing::Median { window },
        other => bail!("unknown smoothing `{other}`"),
    })
}

fn parse_grid(v: &str) -> Result<GridSpec> {
    let (scheme, dims) = v
        .split_once(':')
        .ok_or_else(|| anyhow!("grid spec looks like regular:4x2 or percentile:4x2"))?;
    let (cols, rows) = dims
        .split_once('x')
        .ok_or_else(|| anyhow!("grid dims look like 4x2"))?;
    let spec = GridSpec {
        percentile: match scheme {
            "regular" => false,
            "percentile" => true,
            other => bail!("unknown grid scheme `{other}`"),
        },
        cols: cols.parse().map_err(|_| anyhow!("bad grid cols `{cols}`"))?,
        rows: rows.parse().map_err(|_| anyhow!("bad grid rows `{rows}`"))?,
    };
    if spec.cols * spec.rows == 0 {
        bail!("grid needs at least one cell");
    }
    Ok(spec)
}

impl PipelineConfig {
    /// Stimulus pixel dimensions for encoding and visualization, from
    /// the explicit [stimulus] section or the display geometry.
    pub fn stimulus_dims(&self) -> Result<(usize, usize)> {
        if let Some(dims) = self.stimulus_px {
            return Ok(dims);
        }
        if let Some(g) = &self.geometry {
            return Ok((g.width_px as usize, g.height_px as usize));
        }
        bail!("no stimulus dimensions: provide [stimulus] width_px/height_px or a [geometry] section")
    }

    /// Canonical serialization of every semantically meaningful field,
    /// hashed into the manifest. The output directory is deliberately
    /// not part of it.
    pub fn semantic_fingerprint(&self) -> String {
        let mut s = String::new();
        let c = &self.columns;
        let _ = writeln!(
            s,
            "columns={}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}|{:?}",
            c.timestamp,
            c.timestamp_unit,
            c.gaze_x,
            c.gaze_y,
            c.gaze_left_x,
            c.gaze_left_y,
            c.gaze_right_x,
            c.gaze_right_y,
            c.gaze_z,
            c.pupil_left,
            c.pupil_right,
            c.validity_left,
            c.validity_right,
            c.annotation,
            c.validity_true_values,
            c.delimiter,
            c.sampling_rate_hz
        );
        let _ = writeln!(s, "eye_selection={}", c.eye_selection.name());
        let _ = writeln!(s, "geometry={:?}", self.geometry);
        let _ = writeln!(s, "min_tracking_ratio={}", self.min_tracking_ratio);
        let _ = writeln!(s, "marked_bad_calibration={:?}", self.marked_bad_calibration);
        let _ = writeln!(s, "marked_invalid_trial={:?}", self.marked_invalid_trial);
        let _ = writeln!(s, "clean={:?}", self.clean);
        let _ = writeln!(s, "blink_removal={:?}", self.blink_removal);
        let _ = writeln!(s, "blink_window={}..{}", self.blink_min_ms, self.blink_max_ms);
        let _ = writeln!(s, "detector={:?}", self.detector);
        let _ = writeln!(
            s,
            "encode={} grid={:?} bin={:?}",
            self.encode_enabled, self.grid, self.bin_ms
        );
        let _ = writeln!(
            s,
            "saliency={} cfg={:?} format={:?}",
            self.saliency_enabled, self.saliency, self.raster_format
        );
        let _ = writeln!(
            s,
            "render={} style={:?}",
            self.render_enabled, self.render_style
        );
        let _ = writeln!(s, "stimulus={:?}", self.stimulus_px);
        s
    }

    pub fn config_hash(&self) -> String {
        format!("{:016x}", crate::util::fnv1a64(self.semantic_fingerprint().as_bytes()))
    }
}

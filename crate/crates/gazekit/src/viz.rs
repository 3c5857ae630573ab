//! Visualization emitters: saliency maps, scanpath drawings, and gaze
//! plots.
//!
//! Saliency maps accumulate one Gaussian per fixation (optionally
//! duration-weighted) on a dense pixel grid. Rasters are written as
//! portable graymaps/pixmaps; drawings are written as minimal SVG with a
//! fixed element and attribute order so outputs are stable for golden
//! tests.

use crate::error::{Error, Result};
use crate::model::{visual_angle_to_pixels, DisplayGeometry, Fixation, Scanpath};
use std::fmt::Write as _;
use std::io::Write;

/// Where the Gaussian width comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    /// Explicit width in pixels.
    Pixels(f64),
    /// Derived from a visual angle and display geometry.
    FromAngle {
        degrees: f64,
        geometry: DisplayGeometry,
    },
}

/// Map normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Scale so the global maximum is 1.
    #[default]
    MaxToOne,
    /// Scale so the values sum to 1.
    SumToOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyConfig {
    pub sigma: SigmaSpec,
    /// Weight each fixation's Gaussian by its duration in seconds
    /// (default) instead of uniformly.
    pub weight_by_duration: bool,
    pub normalization: Normalization,
}

impl Default for SaliencyConfig {
    fn default() -> Self {
        SaliencyConfig {
            sigma: SigmaSpec::Pixels(75.0),
            weight_by_duration: true,
            normalization: Normalization::MaxToOne,
        }
    }
}

/// Resolves the Gaussian width in pixels: explicit values pass through,
/// angle-derived widths convert via the display geometry.
pub fn resolve_sigma(cfg: &SaliencyConfig) -> Result<f64> {
    let sigma = match &cfg.sigma {
        SigmaSpec::Pixels(px) => *px,
        SigmaSpec::FromAngle { degrees, geometry } => {
            visual_angle_to_pixels(*degrees, geometry)?
        }
    };
    if sigma <= 0.0 {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(sigma)
}

/// Dense non-negative attention map aligned to stimulus pixels,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SaliencyMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Gaussians are truncated at this many sigmas from their center; beyond
/// it the kernel contributes less than ~3.4e-4 of its peak.
pub const TRUNCATION_RADIUS_SIGMAS: f64 = 4.0;

/// Raw Gaussian accumulation without normalization.
///
/// Each fixation adds `w * exp(-((x-cx)^2 + (y-cy)^2) / (2 sigma^2))`
/// over the pixels within the truncation box, with `w` the duration in
/// seconds when duration weighting is on and 1 otherwise. Accumulation
/// is linear: the raw map of a union of fixation sets equals the sum of
/// their raw maps.
pub fn accumulate_saliency(
    fixations: &[Fixation],
    width: usize,
    height: usize,
    sigma: f64,
    weight_by_duration: bool,
) -> Result<SaliencyMap> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("stimulus dimensions must be > 0"));
    }
    if sigma <= 0.0 {
        return Err(Error::invalid("sigma must be > 0"));
    }
    let mut map = SaliencyMap {
        width,
        height,
        values: vec![0.0; width * height],
    };
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let reach = TRUNCATION_RADIUS_SIGMAS * sigma;
    for f in fixations {
        let w = if weight_by_duration {
            f.duration_us as f64 / 1e6
        } else {
            1.0
        };
        if f.centroid_x + reach < 0.0 || f.centroid_y + reach < 0.0 {
            continue;
        }
        let x_lo = ((f.centroid_x - reach).floor().max(0.0)) as usize;
        let x_hi = ((f.centroid_x + reach).ceil().min(width as f64 - 1.0)) as usize;
        let y_lo = ((f.centroid_y - reach).floor().max(0.0)) as usize;
        let y_hi = ((f.centroid_y + reach).ceil().min(height as f64 - 1.0)) as usize;
        for y in y_lo..=y_hi {
            let dy = y as f64 - f.centroid_y;
            for x in x_lo..=x_hi {
                let dx = x as f64 - f.centroid_x;
                map.values[y * width + x] +=
                    w * (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp();
            }
        }
    }
    Ok(map)
}

/// Accumulates one Gaussian per fixation and normalizes per the config.
/// An empty fixation list yields an all-zero map.
pub fn saliency_map(
    fixations: &[Fixation],
    width: usize,
    height: usize,
    cfg: &SaliencyConfig,
) -> Result<SaliencyMap> {
    let sigma = resolve_sigma(cfg)?;
    let mut map = accumulate_saliency(fixations, width, height, sigma, cfg.weight_by_duration)?;
    match cfg.normalization {
        Normalization::MaxToOne => {
            let max = map.max();
            if max > 0.0 {
                for v in &mut map.values {
                    *v /= max;
                }
            }
        }
        Normalization::SumToOne => {
            let sum = map.sum();
            if sum > 0.0 {
                for v in &mut map.values {
                    *v /= sum;
                }
            }
        }
    }
    Ok(map)
}

/// Writes the map as a plain-text portable graymap (P2) with 16-bit
/// depth; values scale linearly so the map maximum hits 65535.
pub fn write_pgm_text<W: Write>(mut w: W, map: &SaliencyMap) -> Result<()> {
    let max = map.max();
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    writeln!(w, "P2")?;
    writeln!(w, "{} {}", map.width, map.height)?;
    writeln!(w, "65535")?;
    for y in 0..map.height {
        let row: Vec<String> = (0..map.width)
            .map(|x| ((map.get(x, y) * scale).round() as u32).to_string())
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Binary (P5) variant of [`write_pgm_text`], big-endian 16-bit.
pub fn write_pgm_binary<W: Write>(mut w: W, map: &SaliencyMap) -> Result<()> {
    let max = map.max();
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    write!(w, "P5\n{} {}\n65535\n", map.width, map.height)?;
    for y in 0..map.height {
        for x in 0..map.width {
            let v = (map.get(x, y) * scale).round() as u16;
            w.write_all(&v.to_be_bytes())?;
        }
    }
    Ok(())
}

/// The 256-entry blue-to-red lookup table shipped with the crate.
///
/// Entry i (for t = i/255) is `round(255 * clamp(1.5 - |4t - c|))` per
/// channel with c = 3, 2, 1 for red, green, blue: low weights map to
/// blue, high weights to red.
pub const COLORMAP_DATA: &str = include_str!("../data/thermal.lut");

fn colormap() -> Vec<(u8, u8, u8)> {
    COLORMAP_DATA
        .lines()
        .map(|line| {
            let mut it = line.split_whitespace().map(|v| v.parse::<u8>().unwrap());
            (
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
            )
        })
        .collect()
}

/// Writes the map colorized through the lookup table as a plain-text
/// portable pixmap (P3).
pub fn write_ppm_text<W: Write>(mut w: W, map: &SaliencyMap) -> Result<()> {
    let lut = colormap();
    let max = map.max();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    writeln!(w, "P3")?;
    writeln!(w, "{} {}", map.width, map.height)?;
    writeln!(w, "255")?;
    for y in 0..map.height {
        let mut row = String::new();
        for x in 0..map.width {
            let idx = (map.get(x, y) * scale).round() as usize;
            let (r, g, b) = lut[idx.min(255)];
            if x > 0 {
                row.push(' ');
            }
            let _ = write!(row, "{r} {g} {b}");
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Binary (P6) variant of [`write_ppm_text`].
pub fn write_ppm_binary<W: Write>(mut w: W, map: &SaliencyMap) -> Result<()> {
    let lut = colormap();
    let max = map.max();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    write!(w, "P6\n{} {}\n255\n", map.width, map.height)?;
    for y in 0..map.height {
        for x in 0..map.width {
            let idx = (map.get(x, y) * scale).round() as usize;
            let (r, g, b) = lut[idx.min(255)];
            w.write_all(&[r, g, b])?;
        }
    }
    Ok(())
}

/// Scanpath drawing style.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Dot radius = `radius_scale * sqrt(duration in ms)`, so dot area
    /// is proportional to fixation duration.
    pub radius_scale: f64,
    /// With dots off only the saccade lines are drawn, which suits
    /// overlaying several scanpaths.
    pub show_duration_dots: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            radius_scale: 1.0,
            show_duration_dots: true,
        }
    }
}

fn fmt_num(v: f64) -> String {
    // Fixed 2-decimal formatting keeps documents byte-stable.
    format!("{v:.2}")
}

/// Renders a scanpath as an SVG document: saccade lines in temporal
/// order, then duration-scaled circles, then ordinal labels. Errors on
/// an empty scanpath.
pub fn render_scanpath(
    sp: &Scanpath,
    width: usize,
    height: usize,
    style: &RenderStyle,
) -> Result<String> {
    if sp.is_empty() {
        return Err(Error::Sequence("cannot render an empty scanpath".into()));
    }
    render_fixations(&sp.fixations, width, height, style)
}

fn render_fixations(
    fixations: &[Fixation],
    width: usize,
    height: usize,
    style: &RenderStyle,
) -> Result<String> {
    let mut doc = String::new();
    let _ = writeln!(
        doc,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    for pair in fixations.windows(2) {
        let _ = writeln!(
            doc,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#3366cc\" stroke-width=\"2\"/>",
            fmt_num(pair[0].centroid_x),
            fmt_num(pair[0].centroid_y),
            fmt_num(pair[1].centroid_x),
            fmt_num(pair[1].centroid_y)
        );
    }
    if style.show_duration_dots {
        for f in fixations {
            let radius = style.radius_scale * (f.duration_us as f64 / 1000.0).sqrt();
            let _ = writeln!(
                doc,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#cc3333\" fill-opacity=\"0.6\" stroke=\"#801a1a\" stroke-width=\"1\"/>",
                fmt_num(f.centroid_x),
                fmt_num(f.centroid_y),
                fmt_num(radius)
            );
        }
        for (i, f) in fixations.iter().enumerate() {
            let _ = writeln!(
                doc,
                "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#000000\">{}</text>",
                fmt_num(f.centroid_x),
                fmt_num(f.centroid_y),
                i + 1
            );
        }
    }
    doc.push_str("</svg>\n");
    Ok(doc)
}

/// Renders the gaze plot for a time window: the scanpath restricted to
/// fixations whose onset lies in `[start, end)`, with ordinals restarted
/// at 1. Errors when the window misses the scanpath entirely, naming the
/// actual span.
pub fn render_gaze_plot(
    sp: &Scanpath,
    window_us: (i64, i64),
    width: usize,
    height: usize,
    style: &RenderStyle,
) -> Result<String> {
    if sp.is_empty() {
        return Err(Error::Sequence("cannot render an empty scanpath".into()));
    }
    let (start, end) = window_us;
    let selected: Vec<Fixation> = sp
        .fixations
        .iter()
        .filter(|f| f.onset_us >= start && f.onset_us < end)
        .cloned()
        .collect();
    if selected.is_empty() {
        let first = sp.fixations.first().unwrap().onset_us;
        let last = sp.fixations.last().unwrap();
        return Err(Error::invalid(format!(
            "window [{start}, {end}) us misses the scanpath, which spans [{}, {}] us",
            first,
            last.end_us()
        )));
    }
    render_fixations(&selected, width, height, style)
}

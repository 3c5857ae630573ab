//! `gazekit`: command-line pipeline for eye-tracking gaze logs.
//!
//! Stages compose through documented text formats, so each subcommand
//! can be run alone or chained, and `run` drives the whole pipeline with
//! a manifest. Exit codes: 0 success, 1 partial per-file failure,
//! 2 configuration or usage error.

mod config;
mod runner;
mod util;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gazekit::events::{summarize_events, validation_metrics, write_events};
use gazekit::ingest::{
    apply_exclusion_rules, parse_recording, read_normalized, segment, write_normalized,
    ExclusionFlags, SegmentScheme,
};
use gazekit::kv::KvDocument;
use gazekit::model::Scanpath;
use gazekit::scanpath::{
    encode, eyenalysis, fit_percentile_grid, fixation_vectors, hamming, histogram_distance,
    ngram_histogram, read_encoded, scanmatch_score, write_encoded, write_score_matrix, Bounds,
    EncodedScanpath, RoiGrid, SubstitutionMatrix,
};
use gazekit::synth::{generate, TraceSpec};
use gazekit::viz::{render_gaze_plot, render_scanpath};
use runner::{fixations_of, scanpath_from_events};
use std::path::{Path, PathBuf};
use util::{artifact_path, atomic_write, stem_of};

/// Shared config-selection flags. The config file comes from --config,
/// the GAZEKIT_CONFIG environment variable, or defaults; --set
/// section.key=value overrides individual keys (flag > file > default).
#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Config file in the key-value grammar.
    #[arg(long, env = "GAZEKIT_CONFIG")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set detect.algorithm=idt.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<config::PipelineConfig> {
        let mut cfg = config::load(self.config.as_deref(), &self.overrides)?;
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Parser, Debug)]
#[command(name = "gazekit", version, about = "Eye-tracking data processing pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse raw gaze logs into the normalized recording format.
    Ingest {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Raw delimiter-separated log files.
        inputs: Vec<PathBuf>,
    },
    /// Clean normalized recordings (gap interpolation, smoothing, pupil
    /// blink removal).
    Clean {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Normalized recordings.
        inputs: Vec<PathBuf>,
    },
    /// Detect fixations, saccades, and blinks in normalized recordings.
    Detect {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Normalized recordings.
        inputs: Vec<PathBuf>,
    },
    /// Summarize event files; optionally compute accuracy/precision of a
    /// validation recording against a known target.
    Stats {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Event files.
        inputs: Vec<PathBuf>,
        /// Normalized validation recording for accuracy/precision.
        #[arg(long)]
        validate_recording: Option<PathBuf>,
        /// Validation target as `x,y` pixels.
        #[arg(long)]
        target: Option<String>,
    },
    /// Segment normalized recordings into intervals or annotation spans.
    Segment {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Normalized recordings.
        inputs: Vec<PathBuf>,
        /// Fixed interval length, e.g. 2s or 500ms.
        #[arg(long, conflicts_with = "at_annotations")]
        every: Option<String>,
        /// Split at annotations (optionally filtered by label).
        #[arg(long)]
        at_annotations: bool,
        /// Annotation label filter.
        #[arg(long)]
        label: Option<String>,
        /// Sub-interval length inside annotation spans (hybrid scheme).
        #[arg(long, requires = "at_annotations")]
        sub_every: Option<String>,
    },
    /// Encode event files into ROI token strings.
    Encode {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Event files.
        inputs: Vec<PathBuf>,
        /// Also write the default distance-based substitution matrix for
        /// the grid to this path.
        #[arg(long)]
        emit_matrix: Option<PathBuf>,
    },
    /// Pairwise scanpath comparison into a score matrix.
    Compare {
        /// Comparison method.
        #[arg(long, value_parser = ["hamming", "scanmatch", "eyenalysis", "ngram"])]
        method: String,
        /// Inputs: encoded files (hamming/scanmatch/ngram) or event
        /// files (eyenalysis).
        inputs: Vec<PathBuf>,
        /// Substitution matrix file (scanmatch).
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Gap penalty override (scanmatch; defaults to the matrix
        /// file's value).
        #[arg(long)]
        gap_penalty: Option<f64>,
        /// n-gram length (ngram).
        #[arg(long, default_value_t = 2)]
        ngram: usize,
        /// Add fixation duration as a third dimension with this scale
        /// (eyenalysis).
        #[arg(long)]
        duration_scale: Option<f64>,
        /// Output matrix file.
        #[arg(long)]
        output: PathBuf,
    },
    /// Render saliency maps from event files.
    Saliency {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Event files.
        inputs: Vec<PathBuf>,
    },
    /// Render a scanpath drawing or gaze plot from an event file.
    Render {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Event file.
        input: PathBuf,
        /// Restrict to a time window `start..end` (durations, e.g.
        /// 0ms..2s) and restart ordinals: a gaze plot.
        #[arg(long)]
        window: Option<String>,
        /// Output SVG path (defaults next to the input).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline: ingest, gate, clean, detect, stats, and
    /// the enabled emitters, with a run manifest.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Raw gaze logs.
        inputs: Vec<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Generate a synthetic recording (and optional ground truth) from a
    /// trace spec.
    Synth {
        /// Trace spec in the key-value grammar.
        #[arg(long)]
        spec: PathBuf,
        /// Output normalized recording.
        #[arg(long)]
        output: PathBuf,
        /// Also write ground-truth fixation/blink events here.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    });
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Ingest { cfg, inputs } => cmd_ingest(&cfg.load()?, &inputs),
        Command::Clean { cfg, inputs } => cmd_clean(&cfg.load()?, &inputs),
        Command::Detect { cfg, inputs } => cmd_detect(&cfg.load()?, &inputs),
        Command::Stats {
            cfg,
            inputs,
            validate_recording,
            target,
        } => cmd_stats(&cfg.load()?, &inputs, validate_recording, target),
        Command::Segment {
            cfg,
            inputs,
            every,
            at_annotations,
            label,
            sub_every,
        } => cmd_segment(&cfg.load()?, &inputs, every, at_annotations, label, sub_every),
        Command::Encode {
            cfg,
            inputs,
            emit_matrix,
        } => cmd_encode(&cfg.load()?, &inputs, emit_matrix),
        Command::Compare {
            method,
            inputs,
            matrix,
            gap_penalty,
            ngram,
            duration_scale,
            output,
        } => cmd_compare(&method, &inputs, matrix, gap_penalty, ngram, duration_scale, &output),
        Command::Saliency { cfg, inputs } => cmd_saliency(&cfg.load()?, &inputs),
        Command::Render {
            cfg,
            input,
            window,
            output,
        } => cmd_render(&cfg.load()?, &input, window, output),
        Command::Run { cfg, inputs, jobs } => {
            let cfg = cfg.load()?;
            let outcome = runner::run_pipeline(&cfg, &inputs, jobs)?;
            eprintln!("manifest: {}", outcome.manifest_path.display());
            Ok(if outcome.failed_count() > 0 { 1 } else { 0 })
        }
        Command::Synth {
            spec,
            output,
            truth,
        } => cmd_synth(&spec, &output, truth),
    }
}

/// Runs `f` per input, reporting failures without stopping; exit code 1
/// when some inputs failed.
fn for_each_input(
    inputs: &[PathBuf],
    mut f: impl FnMut(&Path) -> Result<()>,
) -> Result<i32> {
    if inputs.is_empty() {
        bail!("no inputs given");
    }
    let mut failures = 0usize;
    for path in inputs {
        if let Err(e) = f(path) {
            eprintln!("failed   {}: {e:#}", path.display());
            failures += 1;
        } else {
            eprintln!("ok       {}", path.display());
        }
    }
    Ok(if failures > 0 { 1 } else { 0 })
}

fn cmd_ingest(cfg: &config::PipelineConfig, inputs: &[PathBuf]) -> Result<i32> {
    for_each_input(inputs, |path| {
        let file = std::fs::File::open(path)?;
        let parsed =
            parse_recording(std::io::BufReader::new(file), &cfg.columns, cfg.geometry)?;
        for w in &parsed.warnings {
            eprintln!("  warning: {w}");
        }
        let report = apply_exclusion_rules(
            &parsed.recording,
            cfg.min_tracking_ratio,
            ExclusionFlags::default(),
            cfg.columns.eye_selection,
        )?;
        eprintln!(
            "  samples {}  dropped {}  tracking ratio {:.3}  {}",
            report.sample_count,
            parsed.dropped_non_monotone,
            report.tracking_ratio,
            if report.excluded {
                report.exclusion_reason.name()
            } else {
                "pass"
            }
        );
        let out = artifact_path(&cfg.output_dir, &stem_of(path), "norm.tsv");
        let mut buf = Vec::new();
        write_normalized(&mut buf, &parsed.recording)?;
        atomic_write(&out, &buf)
    })
}

fn read_recording(path: &Path) -> Result<gazekit::model::Recording> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_normalized(std::io::BufReader::new(file))?)
}

fn cmd_clean(cfg: &config::PipelineConfig, inputs: &[PathBuf]) -> Result<i32> {
    for_each_input(inputs, |path| {
        let rec = read_recording(path)?;
        let policy = cfg.columns.eye_selection;
        let blinks =
            gazekit::events::detect_blinks(&rec, cfg.blink_min_ms, cfg.blink_max_ms, policy)?;
        let cleaned = runner::clean_recording(cfg, &rec, &blinks, policy)?;
        let out = artifact_path(&cfg.output_dir, &stem_of(path), "clean.tsv");
        let mut buf = Vec::new();
        write_normalized(&mut buf, &cleaned)?;
        atomic_write(&out, &buf)
    })
}

fn cmd_detect(cfg: &config::PipelineConfig, inputs: &[PathBuf]) -> Result<i32> {
    for_each_input(inputs, |path| {
        let rec = read_recording(path)?;
        let policy = cfg.columns.eye_selection;
        let blinks =
            gazekit::events::detect_blinks(&rec, cfg.blink_min_ms, cfg.blink_max_ms, policy)?;
        let (fixations, saccades) = match &cfg.detector {
            config::Detector::Ivt(ivt) => gazekit::events::detect_ivt(&rec, ivt, policy)?,
            config::Detector::Idt(idt) => {
                (gazekit::events::detect_idt(&rec, idt, policy)?, Vec::new())
            }
        };
        eprintln!(
            "  {} fixations, {} saccades, {} blinks",
            fixations.len(),
            saccades.len(),
            blinks.len()
        );
        let out = artifact_path(&cfg.output_dir, &stem_of(path), "events.tsv");
        let mut buf = Vec::new();
        write_events(&mut buf, &fixations, &saccades, &blinks)?;
        atomic_write(&out, &buf)
    })
}

fn cmd_stats(
    cfg: &config::PipelineConfig,
    inputs: &[PathBuf],
    validate_recording: Option<PathBuf>,
    target: Option<String>,
) -> Result<i32> {
    if let Some(rec_path) = validate_recording {
        let target = target.ok_or_else(|| anyhow!("--validate-recording needs --target x,y"))?;
        let (tx, ty) = target
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| anyhow!("--target expects `x,y` pixels"))?;
        let rec = read_recording(&rec_path)?;
        let geometry = rec
            .geometry
            .or(cfg.geometry)
            .ok_or_else(|| anyhow!("validation metrics need display geometry"))?;
        let (accuracy, precision) = validation_metrics(
            &rec.samples,
            (tx, ty),
            &geometry,
            cfg.columns.eye_selection,
        )?;
        println!("accuracy_deg = {accuracy}");
        println!("precision_rms_deg = {precision}");
    }
    if inputs.is_empty() {
        return Ok(0);
    }
    for_each_input(inputs, |path| {
        let (sp, saccades, _) = scanpath_from_events(path)?;
        let summary = summarize_events(&sp.fixations, &saccades);
        print!("{}", runner::summary_to_kv(&summary).to_string());
        Ok(())
    })
}

fn cmd_segment(
    cfg: &config::PipelineConfig,
    inputs: &[PathBuf],
    every: Option<String>,
    at_annotations: bool,
    label: Option<String>,
    sub_every: Option<String>,
) -> Result<i32> {
    let scheme = match (every, at_annotations, sub_every) {
        (Some(d), false, None) => SegmentScheme::FixedIntervals {
            duration_us: (gazekit::kv::parse_duration_ms(&d)? * 1000.0) as i64,
        },
        (None, true, None) => SegmentScheme::AtAnnotations {
            label_filter: label,
        },
        (None, true, Some(d)) => SegmentScheme::Hybrid {
            label_filter: label,
            sub_duration_us: (gazekit::kv::parse_duration_ms(&d)? * 1000.0) as i64,
        },
        _ => bail!("choose --every DURATION or --at-annotations [--sub-every DURATION]"),
    };
    for_each_input(inputs, |path| {
        let rec = read_recording(path)?;
        let segments = segment(&rec, &scheme)?;
        eprintln!("  {} segments", segments.len());
        for (i, seg) in segments.iter().enumerate() {
            let out = artifact_path(&cfg.output_dir, &stem_of(path), &format!("seg{i}.tsv"));
            let mut buf = Vec::new();
            write_normalized(&mut buf, seg)?;
            atomic_write(&out, &buf)?;
        }
        Ok(())
    })
}

fn grid_for(cfg: &config::PipelineConfig, fixations: &[gazekit::model::Fixation]) -> Result<RoiGrid> {
    let (width, height) = cfg.stimulus_dims()?;
    let bounds = Bounds::of_stimulus(width as f64, height as f64);
    Ok(if cfg.grid.percentile {
        let points: Vec<(f64, f64)> = fixations
            .iter()
            .map(|f| (f.centroid_x, f.centroid_y))
            .collect();
        fit_percentile_grid(&points, cfg.grid.cols, cfg.grid.rows, bounds)?
    } else {
        RoiGrid::regular(cfg.grid.cols, cfg.grid.rows, bounds)?
    })
}

fn cmd_encode(
    cfg: &config::PipelineConfig,
    inputs: &[PathBuf],
    emit_matrix: Option<PathBuf>,
) -> Result<i32> {
    if let Some(matrix_path) = &emit_matrix {
        if cfg.grid.percentile {
            bail!("--emit-matrix needs a regular grid (percentile grids are per-input)");
        }
        let grid = grid_for(cfg, &[])?;
        let matrix = SubstitutionMatrix::distance_based(&grid, 1.0, 0.5, 0.0)?;
        let mut buf = Vec::new();
        matrix.write(&mut buf)?;
        atomic_write(matrix_path, &buf)?;
        eprintln!("matrix   {}", matrix_path.display());
    }
    for_each_input(inputs, |path| {
        let fixations = fixations_of(path)?;
        let sp = Scanpath::new(fixations.clone(), stem_of(path)).map_err(|e| anyhow!("{e}"))?;
        let grid = grid_for(cfg, &fixations)?;
        let (encoded, clamped) = encode(&sp, &grid, cfg.bin_ms)?;
        if clamped > 0 {
            eprintln!("  warning: {clamped} fixations clamped to grid bounds");
        }
        let out = artifact_path(&cfg.output_dir, &stem_of(path), "enc.txt");
        let mut buf = Vec::new();
        write_encoded(&mut buf, &encoded)?;
        atomic_write(&out, &buf)
    })
}

fn cmd_compare(
    method: &str,
    inputs: &[PathBuf],
    matrix: Option<PathBuf>,
    gap_penalty: Option<f64>,
    ngram: usize,
    duration_scale: Option<f64>,
    output: &Path,
) -> Result<i32> {
    if inputs.len() < 2 {
        bail!("compare needs at least 2 inputs");
    }
    let ids: Vec<String> = inputs
        .iter()
        .map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .collect::<Option<_>>()
        .ok_or_else(|| anyhow!("inputs must be files"))?;
    let n = inputs.len();
    let mut values = vec![vec![None; n]; n];
    let mut pair_failures = Vec::new();

    match method {
        "hamming" => {
            let encoded = read_all_encoded(inputs)?;
            for i in 0..n {
                for j in i..n {
                    match hamming(&encoded[i], &encoded[j]) {
                        Ok(d) => {
                            values[i][j] = Some(d as f64);
                            values[j][i] = Some(d as f64);
                        }
                        Err(e) => pair_failures.push(format!("{} vs {}: {e}", ids[i], ids[j])),
                    }
                }
            }
        }
        "scanmatch" => {
            let matrix_path =
                matrix.ok_or_else(|| anyhow!("scanmatch needs --matrix FILE"))?;
            let file = std::fs::File::open(&matrix_path)
                .with_context(|| format!("opening {}", matrix_path.display()))?;
            let matrix = SubstitutionMatrix::from_reader(std::io::BufReader::new(file))?;
            let gap = gap_penalty.unwrap_or(matrix.gap_penalty);
            if gap > 0.0 {
                eprintln!(
                    "warning: positive gap penalty {gap} makes normalized scores exceed their nominal bounds"
                );
            }
            let encoded = read_all_encoded(inputs)?;
            for i in 0..n {
                for j in i..n {
                    match scanmatch_score(&encoded[i], &encoded[j], &matrix, gap) {
                        Ok(s) => {
                            values[i][j] = Some(s);
                            values[j][i] = Some(s);
                        }
                        Err(e) => pair_failures.push(format!("{} vs {}: {e}", ids[i], ids[j])),
                    }
                }
            }
        }
        "eyenalysis" => {
            let vectors: Vec<Vec<Vec<f64>>> = inputs
                .iter()
                .map(|p| {
                    let (sp, _, _) = scanpath_from_events(p)?;
                    Ok(fixation_vectors(&sp, duration_scale))
                })
                .collect::<Result<_>>()?;
            for i in 0..n {
                for j in i..n {
                    match eyenalysis(&vectors[i], &vectors[j]) {
                        Ok(d) => {
                            values[i][j] = Some(d);
                            values[j][i] = Some(d);
                        }
                        Err(e) => pair_failures.push(format!("{} vs {}: {e}", ids[i], ids[j])),
                    }
                }
            }
        }
        "ngram" => {
            let encoded = read_all_encoded(inputs)?;
            let histograms: Vec<_> = encoded
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    ngram_histogram(e, ngram)
                        .with_context(|| format!("n-gram histogram of {}", ids[i]))
                })
                .collect::<Result<_>>()?;
            for i in 0..n {
                for j in i..n {
                    match histogram_distance(&histograms[i], &histograms[j]) {
                        Ok(d) => {
                            values[i][j] = Some(d);
                            values[j][i] = Some(d);
                        }
                        Err(e) => pair_failures.push(format!("{} vs {}: {e}", ids[i], ids[j])),
                    }
                }
            }
        }
        other => bail!("unknown method `{other}`"),
    }

    for f in &pair_failures {
        eprintln!("pair skipped: {f}");
    }
    let mut buf = Vec::new();
    write_score_matrix(&mut buf, &ids, &values)?;
    atomic_write(output, &buf)?;
    eprintln!("matrix   {}", output.display());
    Ok(0)
}

fn read_all_encoded(inputs: &[PathBuf]) -> Result<Vec<EncodedScanpath>> {
    inputs
        .iter()
        .map(|p| {
            let file =
                std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(read_encoded(std::io::BufReader::new(file))?)
        })
        .collect()
}

fn cmd_saliency(cfg: &config::PipelineConfig, inputs: &[PathBuf]) -> Result<i32> {
    for_each_input(inputs, |path| {
        let fixations = fixations_of(path)?;
        let (width, height) = cfg.stimulus_dims()?;
        let map = gazekit::viz::saliency_map(&fixations, width, height, &cfg.saliency)?;
        let out = artifact_path(&cfg.output_dir, &stem_of(path), cfg.raster_format.extension());
        let mut buf = Vec::new();
        match cfg.raster_format {
            config::RasterFormat::PgmText => gazekit::viz::write_pgm_text(&mut buf, &map)?,
            config::RasterFormat::PgmBinary => gazekit::viz::write_pgm_binary(&mut buf, &map)?,
            config::RasterFormat::PpmText => gazekit::viz::write_ppm_text(&mut buf, &map)?,
            config::RasterFormat::PpmBinary => gazekit::viz::write_ppm_binary(&mut buf, &map)?,
        }
        atomic_write(&out, &buf)
    })
}

fn cmd_render(
    cfg: &config::PipelineConfig,
    input: &Path,
    window: Option<String>,
    output: Option<PathBuf>,
) -> Result<i32> {
    let (sp, _, _) = scanpath_from_events(input)?;
    let (width, height) = cfg.stimulus_dims()?;
    let doc = match window {
        None => render_scanpath(&sp, width, height, &cfg.render_style)?,
        Some(w) => {
            let (start, end) = w
                .split_once("..")
                .ok_or_else(|| anyhow!("--window expects start..end, e.g. 0ms..2s"))?;
            let start_us = (gazekit::kv::parse_duration_ms(start)? * 1000.0) as i64;
            let end_us = (gazekit::kv::parse_duration_ms(end)? * 1000.0) as i64;
            render_gaze_plot(&sp, (start_us, end_us), width, height, &cfg.render_style)?
        }
    };
    let out = output.unwrap_or_else(|| artifact_path(&cfg.output_dir, &stem_of(input), "svg"));
    atomic_write(&out, doc.as_bytes())?;
    eprintln!("svg      {}", out.display());
    Ok(0)
}

fn cmd_synth(spec_path: &Path, output: &Path, truth: Option<PathBuf>) -> Result<i32> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let doc = KvDocument::parse(&text)?;
    let spec = TraceSpec::from_kv(&doc)?;
    let (rec, truth_events) = generate(&spec)?;
    let mut buf = Vec::new();
    write_normalized(&mut buf, &rec)?;
    atomic_write(output, &buf)?;
    eprintln!("recording {}", output.display());

    if let Some(truth_path) = truth {
        // Ground truth as an events file: fixate and blink segments only
        // (sweep segments have no single anchor point).
        let fixations: Vec<_> = truth_events
            .iter()
            .filter(|t| t.kind == gazekit::synth::TruthKind::Fixation)
            .map(|t| gazekit::model::Fixation {
                centroid_x: t.x,
                centroid_y: t.y,
                onset_us: t.onset_us,
                duration_us: t.duration_us,
                mean_pupil_mm: None,
            })
            .collect();
        let blinks: Vec<_> = truth_events
            .iter()
            .filter(|t| t.kind == gazekit::synth::TruthKind::Blink)
            .map(|t| gazekit::model::Blink {
                onset_us: t.onset_us,
                duration_us: t.duration_us,
            })
            .collect();
        let mut buf = Vec::new();
        write_events(&mut buf, &fixations, &[], &blinks)?;
        atomic_write(&truth_path, &buf)?;
        eprintln!("truth     {}", truth_path.display());
    }
    Ok(0)
}

//! End-to-end pipeline execution and the run manifest.
//!
//! Each input flows through ingest, the exclusion gate, cleaning, event
//! detection, statistics, and the optional encoding/visual emitters.
//! Inputs are independent: a failure is recorded in the manifest and
//! processing of the others continues. All artifacts are written
//! atomically and deterministically.

use crate::config::{Detector, PipelineConfig, RasterFormat};
use crate::util::{artifact_path, atomic_write, stem_of};
use anyhow::{anyhow, Context, Result};
use gazekit::events::{
    detect_blinks, detect_idt, detect_ivt, summarize_events, write_events, ClassStats,
    EventSummary,
};
use gazekit::ingest::{
    apply_exclusion_rules, parse_recording, write_normalized, ExclusionFlags, IngestReport,
};
use gazekit::kv::KvDocument;
use gazekit::model::{Blink, EyeSelection, Fixation, Recording, Saccade, Scanpath};
use gazekit::preprocess::{clean, remove_blinks_from_pupil, Series, SeriesPoint};
use gazekit::scanpath::{encode, fit_percentile_grid, write_encoded, Bounds, RoiGrid};
use gazekit::viz::{
    render_scanpath, saliency_map, write_pgm_binary, write_pgm_text, write_ppm_binary,
    write_ppm_text,
};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Outcome of one input file.
#[derive(Debug)]
pub enum FileStatus {
    Ok {
        report: IngestReport,
        dropped_rows: usize,
        artifacts: Vec<PathBuf>,
        warnings: Vec<String>,
    },
    Excluded {
        report: IngestReport,
        dropped_rows: usize,
    },
    Failed {
        error: String,
    },
}

pub struct RunOutcome {
    pub statuses: Vec<(PathBuf, FileStatus)>,
    pub manifest_path: PathBuf,
}

impl RunOutcome {
    pub fn failed_count(&self) -> usize {
        self.statuses
            .iter()
            .filter(|(_, s)| matches!(s, FileStatus::Failed { .. }))
            .count()
    }
}

/// Runs the full pipeline over the inputs with up to `jobs` workers and
/// writes the manifest.
pub fn run_pipeline(cfg: &PipelineConfig, inputs: &[PathBuf], jobs: usize) -> Result<RunOutcome> {
    if inputs.is_empty() {
        anyhow::bail!("no inputs given");
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let statuses: Vec<(PathBuf, FileStatus)> = pool.install(|| {
        inputs
            .par_iter()
            .map(|path| {
                let status = match process_one(cfg, path) {
                    Ok(status) => status,
                    Err(e) => FileStatus::Failed {
                        error: format!("{e:#}"),
                    },
                };
                (path.clone(), status)
            })
            .collect()
    });

    for (path, status) in &statuses {
        match status {
            FileStatus::Ok { warnings, .. } => {
                eprintln!("ok       {}", path.display());
                for w in warnings {
                    eprintln!("  warning: {w}");
                }
            }
            FileStatus::Excluded { report, .. } => eprintln!(
                "excluded {} ({}, tracking ratio {:.3})",
                path.display(),
                report.exclusion_reason.name(),
                report.tracking_ratio
            ),
            FileStatus::Failed { error } => {
                eprintln!("failed   {}: {error}", path.display())
            }
        }
    }

    let manifest = build_manifest(cfg, &statuses);
    let manifest_path = cfg.output_dir.join("manifest.kv");
    atomic_write(&manifest_path, manifest.to_string().as_bytes())?;
    Ok(RunOutcome {
        statuses,
        manifest_path,
    })
}

fn process_one(cfg: &PipelineConfig, path: &Path) -> Result<FileStatus> {
    let stem = stem_of(path);
    let policy = cfg.columns.eye_selection;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let parsed = parse_recording(std::io::BufReader::new(file), &cfg.columns, cfg.geometry)?;
    let mut warnings = parsed.warnings.clone();

    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let flags = ExclusionFlags {
        marked_bad_calibration: cfg.marked_bad_calibration.iter().any(|m| *m == name),
        marked_invalid_trial: cfg.marked_invalid_trial.iter().any(|m| *m == name),
    };
    let report = apply_exclusion_rules(&parsed.recording, cfg.min_tracking_ratio, flags, policy)?;
    if report.excluded {
        return Ok(FileStatus::Excluded {
            report,
            dropped_rows: parsed.dropped_non_monotone,
        });
    }

    let mut artifacts = Vec::new();

    // Raw normalized recording.
    let norm_path = artifact_path(&cfg.output_dir, &stem, "norm.tsv");
    let mut buf = Vec::new();
    write_normalized(&mut buf, &parsed.recording)?;
    atomic_write(&norm_path, &buf)?;
    artifacts.push(norm_path);

    // Blink detection runs on raw validity runs, before any filling.
    let blinks = detect_blinks(&parsed.recording, cfg.blink_min_ms, cfg.blink_max_ms, policy)?;

    let cleaned = clean_recording(cfg, &parsed.recording, &blinks, policy)?;
    let clean_path = artifact_path(&cfg.output_dir, &stem, "clean.tsv");
    let mut buf = Vec::new();
    write_normalized(&mut buf, &cleaned)?;
    atomic_write(&clean_path, &buf)?;
    artifacts.push(clean_path);

    // Event detection on the cleaned recording.
    let (fixations, saccades) = match &cfg.detector {
        Detector::Ivt(ivt) => detect_ivt(&cleaned, ivt, policy)?,
        Detector::Idt(idt) => (detect_idt(&cleaned, idt, policy)?, Vec::new()),
    };
    let events_path = artifact_path(&cfg.output_dir, &stem, "events.tsv");
    let mut buf = Vec::new();
    write_events(&mut buf, &fixations, &saccades, &blinks)?;
    atomic_write(&events_path, &buf)?;
    artifacts.push(events_path);

    // Summary statistics.
    let summary = summarize_events(&fixations, &saccades);
    let stats_path = artifact_path(&cfg.output_dir, &stem, "stats.kv");
    atomic_write(&stats_path, summary_to_kv(&summary).to_string().as_bytes())?;
    artifacts.push(stats_path);

    let scanpath = Scanpath::new(fixations.clone(), stem.clone())
        .map_err(|e| anyhow!("building scanpath: {e}"))?;

    if cfg.encode_enabled && !scanpath.is_empty() {
        let (width, height) = cfg.stimulus_dims()?;
        let bounds = Bounds::of_stimulus(width as f64, height as f64);
        let grid = if cfg.grid.percentile {
            let points: Vec<(f64, f64)> = fixations
                .iter()
                .map(|f| (f.centroid_x, f.centroid_y))
                .collect();
            fit_percentile_grid(&points, cfg.grid.cols, cfg.grid.rows, bounds)?
        } else {
            RoiGrid::regular(cfg.grid.cols, cfg.grid.rows, bounds)?
        };
        let (encoded, clamped) = encode(&scanpath, &grid, cfg.bin_ms)?;
        if clamped > 0 {
            warnings.push(format!("{clamped} fixations outside stimulus bounds were clamped"));
        }
        let enc_path = artifact_path(&cfg.output_dir, &stem, "enc.txt");
        let mut buf = Vec::new();
        write_encoded(&mut buf, &encoded)?;
        atomic_write(&enc_path, &buf)?;
        artifacts.push(enc_path);
    }

    if cfg.saliency_enabled {
        let (width, height) = cfg.stimulus_dims()?;
        let map = saliency_map(&fixations, width, height, &cfg.saliency)?;
        let raster_path =
            artifact_path(&cfg.output_dir, &stem, cfg.raster_format.extension());
        let mut buf = Vec::new();
        match cfg.raster_format {
            RasterFormat::PgmText => write_pgm_text(&mut buf, &map)?,
            RasterFormat::PgmBinary => write_pgm_binary(&mut buf, &map)?,
            RasterFormat::PpmText => write_ppm_text(&mut buf, &map)?,
            RasterFormat::PpmBinary => write_ppm_binary(&mut buf, &map)?,
        }
        atomic_write(&raster_path, &buf)?;
        artifacts.push(raster_path);
    }

    if cfg.render_enabled && !scanpath.is_empty() {
        let (width, height) = cfg.stimulus_dims()?;
        let doc = render_scanpath(&scanpath, width, height, &cfg.render_style)?;
        let svg_path = artifact_path(&cfg.output_dir, &stem, "svg");
        atomic_write(&svg_path, doc.as_bytes())?;
        artifacts.push(svg_path);
    }

    Ok(FileStatus::Ok {
        report,
        dropped_rows: parsed.dropped_non_monotone,
        artifacts,
        warnings,
    })
}

/// Applies pupil blink removal and the configured gap/smoothing pass to
/// one recording, rebuilding it with cleaned positions and pupils.
///
/// Samples whose gaze was filled synthetically become valid under every
/// policy; blink runs longer than the interpolation limit stay invalid.
/// The cleaned combined pupil is written to both per-eye fields.
pub fn clean_recording(
    cfg: &PipelineConfig,
    rec: &Recording,
    blinks: &[Blink],
    policy: EyeSelection,
) -> Result<Recording> {
    let ts: Vec<i64> = rec.samples.iter().map(|s| s.timestamp_us).collect();
    let series_of = |values: Vec<Option<f64>>| -> Result<Series> {
        Ok(Series::new(
            ts.iter()
                .zip(values)
                .map(|(&t, v)| SeriesPoint::measured(t, v))
                .collect(),
        )?)
    };

    let x = series_of(
        rec.samples
            .iter()
            .map(|s| s.is_valid(policy).then(|| s.gaze.unwrap().0))
            .collect(),
    )?;
    let y = series_of(
        rec.samples
            .iter()
            .map(|s| s.is_valid(policy).then(|| s.gaze.unwrap().1))
            .collect(),
    )?;
    let pupil = series_of(rec.samples.iter().map(|s| s.pupil(policy)).collect())?;

    let x = clean(&x, &cfg.clean)?;
    let y = clean(&y, &cfg.clean)?;
    let pupil = if blinks.is_empty() {
        pupil
    } else {
        remove_blinks_from_pupil(
            &pupil,
            blinks,
            cfg.blink_removal.pad_ms,
            cfg.blink_removal.strategy,
        )?
    };
    let pupil = clean(&pupil, &cfg.clean)?;

    let mut samples = rec.samples.clone();
    for (i, s) in samples.iter_mut().enumerate() {
        let filled = x.points[i].synthetic || y.points[i].synthetic;
        s.gaze = match (x.points[i].value, y.points[i].value) {
            (Some(px), Some(py)) => Some((px, py)),
            _ => None,
        };
        if s.gaze.is_some() && filled {
            s.valid_left = true;
            s.valid_right = true;
        }
        if s.gaze.is_none() {
            s.valid_left = false;
            s.valid_right = false;
        }
        let p = pupil.points[i].value;
        s.pupil_left = p;
        s.pupil_right = p;
    }
    Ok(Recording {
        samples,
        geometry: rec.geometry,
        sampling_rate_hz: rec.sampling_rate_hz,
        annotations: rec.annotations.clone(),
    })
}

fn stats_section(doc: &mut KvDocument, section: &str, stats: &ClassStats) {
    doc.push(section, "count", stats.count);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    doc.push(section, "mean", opt(stats.mean));
    doc.push(section, "median", opt(stats.median));
    doc.push(section, "std_dev", opt(stats.std_dev));
    doc.push(section, "variance", opt(stats.variance));
}

pub fn summary_to_kv(summary: &EventSummary) -> KvDocument {
    let mut doc = KvDocument::new();
    stats_section(&mut doc, "fixation_duration_ms", &summary.fixation_duration_ms);
    stats_section(&mut doc, "saccade_amplitude", &summary.saccade_amplitude);
    stats_section(
        &mut doc,
        "saccade_peak_velocity",
        &summary.saccade_peak_velocity,
    );
    doc
}

fn build_manifest(cfg: &PipelineConfig, statuses: &[(PathBuf, FileStatus)]) -> KvDocument {
    let mut doc = KvDocument::new();
    doc.push("run", "tool", format!("gazekit {}", env!("CARGO_PKG_VERSION")));
    doc.push("run", "config_hash", cfg.config_hash());
    doc.push("run", "inputs", statuses.len());
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    doc.push("run", "generated_at", now);

    for (i, (path, status)) in statuses.iter().enumerate() {
        let section = format!("input.{i}");
        doc.push(&section, "file", path.display());
        match status {
            FileStatus::Ok {
                report,
                dropped_rows,
                artifacts,
                warnings,
            } => {
                doc.push(&section, "status", "ok");
                push_report(&mut doc, &section, report, *dropped_rows);
                for a in artifacts {
                    // Paths are relative to the manifest's directory, so
                    // manifests are relocatable and runs into different
                    // directories stay comparable.
                    let rel = a.strip_prefix(&cfg.output_dir).unwrap_or(a);
                    doc.push(&section, "artifact", rel.display());
                }
                for w in warnings {
                    doc.push(&section, "warning", w);
                }
            }
            FileStatus::Excluded {
                report,
                dropped_rows,
            } => {
                doc.push(&section, "status", "excluded");
                push_report(&mut doc, &section, report, *dropped_rows);
            }
            FileStatus::Failed { error } => {
                doc.push(&section, "status", "failed");
                doc.push(&section, "error", error);
            }
        }
    }
    doc
}

fn push_report(doc: &mut KvDocument, section: &str, report: &IngestReport, dropped: usize) {
    doc.push(section, "tracking_ratio", report.tracking_ratio);
    doc.push(section, "sample_count", report.sample_count);
    doc.push(section, "dropped_rows", dropped);
    doc.push(section, "exclusion_reason", report.exclusion_reason.name());
    for (bucket, count) in &report.gap_histogram {
        doc.push(section, "gaps", format!("{bucket} {count}"));
    }
}

/// Builds a scanpath from an events file's fixations.
pub fn scanpath_from_events(path: &Path) -> Result<(Scanpath, Vec<Saccade>, Vec<Blink>)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (fixations, saccades, blinks) = gazekit::events::read_events(std::io::BufReader::new(file))?;
    let sp = Scanpath::new(fixations, stem_of(path)).map_err(|e| anyhow!("{e}"))?;
    Ok((sp, saccades, blinks))
}

pub fn fixations_of(path: &Path) -> Result<Vec<Fixation>> {
    Ok(scanpath_from_events(path)?.0.fixations)
}

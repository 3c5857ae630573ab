//! Scanpath encoding and pairwise comparison.
//!
//! Fixation sequences are encoded into ROI token strings over a grid
//! ([`RoiGrid`]), then compared with Hamming distance, global sequence
//! alignment ([`align_nw`], [`scanmatch_score`]), nearest-neighbor double
//! mapping ([`eyenalysis`]), or n-gram transition histograms.
//!
//! Cell labels compose a lowercase row letter with an uppercase column
//! letter ("aA" is the top-left cell of a grid). Grids larger than 26
//! rows or columns extend spreadsheet-style ("aa", "ab", ...), so tokens
//! are compared as whole strings, never per character.

use crate::error::{Error, Result};
use crate::model::Scanpath;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

/// Rectangular stimulus region in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn of_stimulus(width: f64, height: f64) -> Self {
        Bounds {
            x0: 0.0,
            y0: 0.0,
            width,
            height,
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }
}

/// ROI grid over a stimulus: regular cells or percentile bands fitted to
/// a fixation set.
#[derive(Debug, Clone, PartialEq)]
pub enum RoiGrid {
    Regular {
        cols: usize,
        rows: usize,
        bounds: Bounds,
    },
    Percentile {
        /// Interior column boundaries (`cols - 1` ascending x values).
        col_edges: Vec<f64>,
        /// Interior row boundaries (`rows - 1` ascending y values).
        row_edges: Vec<f64>,
        bounds: Bounds,
    },
}

/// Bijective base-26 letters: 0 -> a, 25 -> z, 26 -> aa, ...
fn letters(mut n: usize, upper: bool) -> String {
    let base = if upper { b'A' } else { b'a' };
    let mut out = Vec::new();
    loop {
        out.push(base + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

impl RoiGrid {
    pub fn regular(cols: usize, rows: usize, bounds: Bounds) -> Result<Self> {
        if cols * rows == 0 {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        if bounds.width <= 0.0 || bounds.height <= 0.0 {
            return Err(Error::invalid("grid bounds must have positive size"));
        }
        Ok(RoiGrid::Regular { cols, rows, bounds })
    }

    pub fn cols(&self) -> usize {
        match self {
            RoiGrid::Regular { cols, .. } => *cols,
            RoiGrid::Percentile { col_edges, .. } => col_edges.len() + 1,
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            RoiGrid::Regular { rows, .. } => *rows,
            RoiGrid::Percentile { row_edges, .. } => row_edges.len() + 1,
        }
    }

    pub fn bounds(&self) -> Bounds {
        match self {
            RoiGrid::Regular { bounds, .. } | RoiGrid::Percentile { bounds, .. } => *bounds,
        }
    }

    /// Label of cell (col, row): lowercase row letters then uppercase
    /// column letters.
    pub fn label(&self, col: usize, row: usize) -> String {
        format!("{}{}", letters(row, false), letters(col, true))
    }

    /// All labels in row-major order.
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.cols() * self.rows());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.label(c, r));
            }
        }
        out
    }

    /// Cell of a point. Regular grids use half-open cells (a point on an
    /// interior boundary belongs to the following cell) and clamp
    /// out-of-bounds points to the nearest edge cell.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        match self {
            RoiGrid::Regular { cols, rows, bounds } => {
                let cw = bounds.width / *cols as f64;
                let ch = bounds.height / *rows as f64;
                let col = (((x - bounds.x0) / cw).floor() as i64).clamp(0, *cols as i64 - 1);
                let row = (((y - bounds.y0) / ch).floor() as i64).clamp(0, *rows as i64 - 1);
                (col as usize, row as usize)
            }
            RoiGrid::Percentile {
                col_edges,
                row_edges,
                ..
            } => {
                let col = col_edges.iter().filter(|&&e| x >= e).count();
                let row = row_edges.iter().filter(|&&e| y >= e).count();
                (col, row)
            }
        }
    }

    /// Center of a cell, used to build distance-based substitution
    /// scores.
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        match self {
            RoiGrid::Regular { cols, rows, bounds } => {
                let cw = bounds.width / *cols as f64;
                let ch = bounds.height / *rows as f64;
                (
                    bounds.x0 + (col as f64 + 0.5) * cw,
                    bounds.y0 + (row as f64 + 0.5) * ch,
                )
            }
            RoiGrid::Percentile {
                col_edges,
                row_edges,
                bounds,
            } => {
                let lo_x = if col == 0 {
                    bounds.x0
                } else {
                    col_edges[col - 1]
                };
                let hi_x = if col == col_edges.len() {
                    bounds.x0 + bounds.width
                } else {
                    col_edges[col]
                };
                let lo_y = if row == 0 {
                    bounds.y0
                } else {
                    row_edges[row - 1]
                };
                let hi_y = if row == row_edges.len() {
                    bounds.y0 + bounds.height
                } else {
                    row_edges[row]
                };
                ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0)
            }
        }
    }
}

/// Linear-interpolation percentile of sorted values at fraction `p`.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let idx = p * (n - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = idx - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Fits a percentile grid to a point set: column boundaries at the
/// x-percentiles i/cols, row boundaries at the y-percentiles j/rows, so
/// each band holds an approximately equal share of points. Degenerate
/// point sets collapse every boundary onto the shared coordinate.
pub fn fit_percentile_grid(
    points: &[(f64, f64)],
    cols: usize,
    rows: usize,
    bounds: Bounds,
) -> Result<RoiGrid> {
    if cols * rows == 0 {
        return Err(Error::invalid("grid needs at least one cell"));
    }
    if points.is_empty() {
        return Err(Error::InsufficientData(
            "percentile grid needs at least one point".into(),
        ));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let col_edges: Vec<f64> = (1..cols)
        .map(|i| percentile_sorted(&xs, i as f64 / cols as f64))
        .collect();
    let row_edges: Vec<f64> = (1..rows)
        .map(|j| percentile_sorted(&ys, j as f64 / rows as f64))
        .collect();
    Ok(RoiGrid::Percentile {
        col_edges,
        row_edges,
        bounds,
    })
}

/// A scanpath rendered as an ROI token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedScanpath {
    pub tokens: Vec<String>,
    pub bin_ms: Option<f64>,
}

impl EncodedScanpath {
    pub fn from_tokens(tokens: Vec<String>, bin_ms: Option<f64>) -> Self {
        EncodedScanpath { tokens, bin_ms }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined without separators, as the paper-style compact
    /// rendering ("aAaDbB").
    pub fn compact(&self) -> String {
        self.tokens.concat()
    }
}

/// Encodes a scanpath over a grid. Without binning each fixation yields
/// one token; with a bin width each fixation repeats its token
/// `ceil(duration / bin_ms)` times. Returns the encoding and the number
/// of fixations that fell outside the grid bounds (they are clamped to
/// the nearest edge cell).
pub fn encode(sp: &Scanpath, grid: &RoiGrid, bin_ms: Option<f64>) -> Result<(EncodedScanpath, usize)> {
    if let Some(b) = bin_ms {
        if b <= 0.0 {
            return Err(Error::invalid("bin width must be > 0"));
        }
    }
    let mut tokens = Vec::new();
    let mut clamped = 0usize;
    for f in &sp.fixations {
        if !grid.bounds().contains(f.centroid_x, f.centroid_y) {
            clamped += 1;
        }
        let (col, row) = grid.cell_of(f.centroid_x, f.centroid_y);
        let label = grid.label(col, row);
        let repeats = match bin_ms {
            None => 1,
            Some(bin) => {
                let duration_ms = f.duration_us as f64 / 1000.0;
                (duration_ms / bin).ceil().max(1.0) as usize
            }
        };
        tokens.extend(std::iter::repeat(label).take(repeats));
    }
    Ok((EncodedScanpath::from_tokens(tokens, bin_ms), clamped))
}

/// Hamming distance: number of positions whose tokens differ. Both
/// encodings must have the same length.
pub fn hamming(a: &EncodedScanpath, b: &EncodedScanpath) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Sequence(format!(
            "hamming requires equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.tokens
        .iter()
        .zip(&b.tokens)
        .filter(|(x, y)| x != y)
        .count())
}

/// Square token-pair score table plus a gap penalty.
///
/// Score orientation depends on the alignment mode it is used with:
/// similarity alignment treats higher entries as more similar, cost
/// alignment treats entries as costs (lower is better).
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionMatrix {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    scores: Vec<f64>,
    pub gap_penalty: f64,
}

impl SubstitutionMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>, gap_penalty: f64) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::invalid("substitution matrix needs labels"));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "substitution matrix must be {n}x{n}"
            )));
        }
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate label `{l}`")));
            }
        }
        Ok(SubstitutionMatrix {
            labels,
            index,
            scores: rows.into_iter().flatten().collect(),
            gap_penalty,
        })
    }

    /// Same score on the diagonal, another everywhere else.
    pub fn uniform(
        labels: Vec<String>,
        diagonal: f64,
        off_diagonal: f64,
        gap_penalty: f64,
    ) -> Result<Self> {
        let n = labels.len();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { diagonal } else { off_diagonal })
                    .collect()
            })
            .collect();
        SubstitutionMatrix::new(labels, rows, gap_penalty)
    }

    /// Distance-based similarity scores over a grid's cells:
    /// `score = max_score * (cutoff_fraction - d / diagonal)` where `d`
    /// is the cell-center distance and `diagonal` the grid diagonal.
    /// Identical cells take the largest score, and pairs farther apart
    /// than `cutoff_fraction` of the diagonal score negative. Default
    /// cutoff is half the diagonal.
    pub fn distance_based(
        grid: &RoiGrid,
        max_score: f64,
        cutoff_fraction: f64,
        gap_penalty: f64,
    ) -> Result<Self> {
        if max_score <= 0.0 {
            return Err(Error::invalid("max score must be > 0"));
        }
        let b = grid.bounds();
        let diag = b.width.hypot(b.height);
        let labels = grid.labels();
        let centers: Vec<(f64, f64)> = (0..grid.rows())
            .flat_map(|r| (0..grid.cols()).map(move |c| (c, r)))
            .map(|(c, r)| grid.cell_center(c, r))
            .collect();
        let n = labels.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = (centers[i].0 - centers[j].0).hypot(centers[i].1 - centers[j].1);
                        max_score * (cutoff_fraction - d / diag)
                    })
                    .collect()
            })
            .collect();
        SubstitutionMatrix::new(labels, rows, gap_penalty)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn score(&self, a: &str, b: &str) -> Result<f64> {
        let i = self
            .index
            .get(a)
            .ok_or_else(|| Error::UnknownToken(a.to_string()))?;
        let j = self
            .index
            .get(b)
            .ok_or_else(|| Error::UnknownToken(b.to_string()))?;
        Ok(self.scores[i * self.labels.len() + j])
    }

    pub fn max_score(&self) -> f64 {
        self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// File format: optional comments, an optional `gap_penalty` line, a
    /// header row of labels with an empty leading cell, then one row per
    /// label. Tab-separated.
    ///
    /// ```text
    /// gap_penalty	0
    /// 	aA	aB
    /// aA	1	0
    /// aB	0	1
    /// ```
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self> {
        let mut gap_penalty = 0.0;
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut row_labels: Vec<String> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if header.is_none() && cells[0].trim() == "gap_penalty" {
                gap_penalty = cells
                    .get(1)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::parse("bad gap_penalty value"))?;
                continue;
            }
            match &header {
                None => {
                    if !cells[0].trim().is_empty() {
                        return Err(Error::parse(
                            "matrix header must start with an empty cell",
                        ));
                    }
                    header = Some(cells[1..].iter().map(|s| s.trim().to_string()).collect());
                }
                Some(labels) => {
                    if cells.len() != labels.len() + 1 {
                        return Err(Error::parse(format!(
                            "matrix row `{}` has {} cells, expected {}",
                            cells[0],
                            cells.len() - 1,
                            labels.len()
                        )));
                    }
                    row_labels.push(cells[0].trim().to_string());
                    rows.push(
                        cells[1..]
                            .iter()
                            .map(|s| {
                                s.trim().parse().map_err(|_| {
                                    Error::parse(format!("bad score `{s}`"))
                                })
                            })
                            .collect::<Result<Vec<f64>>>()?,
                    );
                }
            }
        }
        let labels = header.ok_or_else(|| Error::parse("matrix file has no header"))?;
        if row_labels != labels {
            return Err(Error::parse(
                "matrix row labels must match header labels in order",
            ));
        }
        SubstitutionMatrix::new(labels, rows, gap_penalty)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "gap_penalty\t{}", self.gap_penalty)?;
        writeln!(w, "\t{}", self.labels.join("\t"))?;
        let n = self.labels.len();
        for (i, label) in self.labels.iter().enumerate() {
            let row: Vec<String> = self.scores[i * n..(i + 1) * n]
                .iter()
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{label}\t{}", row.join("\t"))?;
        }
        Ok(())
    }
}

/// Global alignment mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignMode {
    /// Cost-minimizing dynamic program: the substitution matrix holds
    /// costs, the first column is `i * deletion_cost`, the first row
    /// `j * insertion_cost`, and each cell takes the minimum of the
    /// diagonal, up, and left moves.
    CostMin {
        insertion_cost: f64,
        deletion_cost: f64,
    },
    /// Score-maximizing classical variant with an additive gap penalty;
    /// the substitution matrix holds similarity scores.
    SimilarityMax { gap_penalty: f64 },
}

/// One recovered optimal alignment: index pairs into the two token
/// sequences, `None` marking a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub score: f64,
    pub pairs: Vec<(Option<usize>, Option<usize>)>,
}

impl Alignment {
    /// Renders the aligned pair as two gapped token rows ("-" for gaps).
    pub fn rows(&self, a: &EncodedScanpath, b: &EncodedScanpath) -> (String, String) {
        let fmt = |side: &[Option<usize>], tokens: &[String]| {
            side.iter()
                .map(|i| i.map(|k| tokens[k].as_str()).unwrap_or("-"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let left: Vec<Option<usize>> = self.pairs.iter().map(|p| p.0).collect();
        let right: Vec<Option<usize>> = self.pairs.iter().map(|p| p.1).collect();
        (fmt(&left, &a.tokens), fmt(&right, &b.tokens))
    }
}

/// Global token-sequence alignment.
///
/// Every token must be present in the substitution matrix. Traceback
/// tie-break is diagonal, then up (consume from `a`), then left, which
/// keeps recovered alignments deterministic.
pub fn align_nw(
    a: &EncodedScanpath,
    b: &EncodedScanpath,
    matrix: &SubstitutionMatrix,
    mode: AlignMode,
) -> Result<Alignment> {
    for t in a.tokens.iter().chain(&b.tokens) {
        if !matrix.index.contains_key(t) {
            return Err(Error::UnknownToken(t.clone()));
        }
    }
    if let AlignMode::SimilarityMax { .. } = mode {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Sequence(
                "similarity alignment requires non-empty sequences".into(),
            ));
        }
    }
    let n = a.len();
    let m = b.len();
    let (gap_down, gap_right, better) = match mode {
        AlignMode::CostMin {
            insertion_cost,
            deletion_cost,
        } => (
            deletion_cost,
            insertion_cost,
            (|x: f64, y: f64| x < y) as fn(f64, f64) -> bool,
        ),
        AlignMode::SimilarityMax { gap_penalty } => (
            gap_penalty,
            gap_penalty,
            (|x: f64, y: f64| x > y) as fn(f64, f64) -> bool,
        ),
    };

    let idx = |i: usize, j: usize| i * (m + 1) + j;
    let mut dp = vec![0.0f64; (n + 1) * (m + 1)];
    // Moves: 0 = diagonal, 1 = up (gap in b), 2 = left (gap in a).
    let mut moves = vec![0u8; (n + 1) * (m + 1)];
    for i in 1..=n {
        dp[idx(i, 0)] = i as f64 * gap_down;
        moves[idx(i, 0)] = 1;
    }
    for j in 1..=m {
        dp[idx(0, j)] = j as f64 * gap_right;
        moves[idx(0, j)] = 2;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = dp[idx(i - 1, j - 1)] + matrix.score(&a.tokens[i - 1], &b.tokens[j - 1])?;
            let up = dp[idx(i - 1, j)] + gap_down;
            let left = dp[idx(i, j - 1)] + gap_right;
            let mut best = diag;
            let mut mv = 0u8;
            if better(up, best) {
                best = up;
                mv = 1;
            }
            if better(left, best) {
                best = left;
                mv = 2;
            }
            dp[idx(i, j)] = best;
            moves[idx(i, j)] = mv;
        }
    }

    let mut pairs = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match moves[idx(i, j)] {
            0 => {
                pairs.push((Some(i - 1), Some(j - 1)));
                i -= 1;
                j -= 1;
            }
            1 => {
                pairs.push((Some(i - 1), None));
                i -= 1;
            }
            _ => {
                pairs.push((None, Some(j - 1)));
                j -= 1;
            }
        }
    }
    pairs.reverse();
    Ok(Alignment {
        score: dp[idx(n, m)],
        pairs,
    })
}

/// Length-normalized similarity: the maximizing alignment score divided
/// by `max(substitution matrix) * length of the longest sequence`. The
/// result is 1 for identical sequences when all diagonal entries equal
/// the matrix maximum. A positive gap penalty makes the normalization
/// exceed its nominal bounds; callers should warn on one.
pub fn scanmatch_score(
    a: &EncodedScanpath,
    b: &EncodedScanpath,
    matrix: &SubstitutionMatrix,
    gap_penalty: f64,
) -> Result<f64> {
    let max = matrix.max_score();
    if max <= 0.0 {
        return Err(Error::invalid(
            "normalization needs a positive matrix maximum",
        ));
    }
    let alignment = align_nw(a, b, matrix, AlignMode::SimilarityMax { gap_penalty })?;
    Ok(alignment.score / (max * a.len().max(b.len()) as f64))
}

/// Euclidean distance between two equal-dimension vectors.
fn point_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Nearest-neighbor double-mapping distance between two scanpaths given
/// as vector sequences (any dimension, equal across both).
///
/// Every point of each scanpath maps to its Euclidean-nearest point of
/// the other; the two mapping-distance sums are added and divided by the
/// longer length. Symmetric by construction; nearest-neighbor ties take
/// the earliest index.
pub fn eyenalysis(s: &[Vec<f64>], t: &[Vec<f64>]) -> Result<f64> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::Sequence("eyenalysis requires non-empty scanpaths".into()));
    }
    let dim = s[0].len();
    if s.iter().chain(t).any(|p| p.len() != dim) {
        return Err(Error::Sequence(
            "eyenalysis requires equal vector dimensions".into(),
        ));
    }
    let nearest_sum = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| point_distance(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
    };
    let forward = nearest_sum(s, t);
    let backward = nearest_sum(t, s);
    Ok((forward + backward) / s.len().max(t.len()) as f64)
}

/// Fixation vectors for [`eyenalysis`]: `(x, y)` by default, with the
/// duration in milliseconds times `duration_scale` as an optional third
/// dimension.
pub fn fixation_vectors(sp: &Scanpath, duration_scale: Option<f64>) -> Vec<Vec<f64>> {
    sp.fixations
        .iter()
        .map(|f| match duration_scale {
            None => vec![f.centroid_x, f.centroid_y],
            Some(scale) => vec![
                f.centroid_x,
                f.centroid_y,
                f.duration_us as f64 / 1000.0 * scale,
            ],
        })
        .collect()
}

/// Sliding-window n-gram frequencies, normalized to sum 1. Keys are the
/// token windows themselves.
pub fn ngram_histogram(
    e: &EncodedScanpath,
    n: usize,
) -> Result<BTreeMap<Vec<String>, f64>> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if e.len() < n {
        return Err(Error::Sequence(format!(
            "sequence of {} tokens is shorter than n = {n}",
            e.len()
        )));
    }
    let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for window in e.tokens.windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    let total = (e.len() - n + 1) as f64;
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total))
        .collect())
}

/// Total-variation distance between two normalized histograms: half the
/// L1 distance over the union of keys. 0 iff identical, 1 iff the
/// supports are disjoint.
pub fn histogram_distance(
    h1: &BTreeMap<Vec<String>, f64>,
    h2: &BTreeMap<Vec<String>, f64>,
) -> Result<f64> {
    for (name, h) in [("first", h1), ("second", h2)] {
        let sum: f64 = h.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "{name} histogram is not normalized (sums to {sum})"
            )));
        }
    }
    let mut keys: Vec<&Vec<String>> = h1.keys().chain(h2.keys()).collect();
    keys.sort();
    keys.dedup();
    let l1: f64 = keys
        .iter()
        .map(|k| {
            let a = h1.get(*k).copied().unwrap_or(0.0);
            let b = h2.get(*k).copied().unwrap_or(0.0);
            (a - b).abs()
        })
        .sum();
    Ok(l1 / 2.0)
}

/// Encoded-scanpath interchange format: optional `#bin_ms=` comment,
/// then the tokens space-separated on one line.
pub fn write_encoded<W: Write>(mut w: W, e: &EncodedScanpath) -> Result<()> {
    if let Some(bin) = e.bin_ms {
        writeln!(w, "#bin_ms={bin}")?;
    }
    writeln!(w, "{}", e.tokens.join(" "))?;
    Ok(())
}

pub fn read_encoded<R: BufRead>(r: R) -> Result<EncodedScanpath> {
    let mut bin_ms = None;
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once('=') {
                if key.trim() == "bin_ms" {
                    bin_ms = Some(value.trim().parse().map_err(|_| {
                        Error::parse(format!("bad bin_ms `{value}`"))
                    })?);
                }
            }
            continue;
        }
        tokens.extend(trimmed.split_whitespace().map(str::to_string));
    }
    Ok(EncodedScanpath::from_tokens(tokens, bin_ms))
}

/// Writes a pairwise result matrix with row/column identifiers. Absent
/// cells (per-pair failures) are left empty.
pub fn write_score_matrix<W: Write>(
    mut w: W,
    ids: &[String],
    values: &[Vec<Option<f64>>],
) -> Result<()> {
    writeln!(w, "id\t{}", ids.join("\t"))?;
    for (i, id) in ids.iter().enumerate() {
        let row: Vec<String> = values[i]
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        writeln!(w, "{id}\t{}", row.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Fixation;

    fn fixation(x: f64, y: f64, onset_ms: i64, duration_ms: i64) -> Fixation {
        Fixation {
            centroid_x: x,
            centroid_y: y,
            onset_us: onset_ms * 1000,
            duration_us: duration_ms * 1000,
            mean_pupil_mm: None,
        }
    }

    /// The worked-example scanpath: a 4x2 grid over an 800x400 stimulus
    /// with fixations in cells aA, aD, bB and durations 50/150/100 ms.
    fn example_scanpath() -> (Scanpath, RoiGrid) {
        let sp = Scanpath::new(
            vec![
                fixation(100.0, 100.0, 0, 50),
                fixation(700.0, 100.0, 60, 150),
                fixation(300.0, 300.0, 220, 100),
            ],
            "stimulus",
        )
        .unwrap();
        let grid = RoiGrid::regular(4, 2, Bounds::of_stimulus(800.0, 400.0)).unwrap();
        (sp, grid)
    }

    #[test]
    fn labels_compose_row_and_column() {
        let grid = RoiGrid::regular(4, 2, Bounds::of_stimulus(800.0, 400.0)).unwrap();
        assert_eq!(grid.label(0, 0), "aA");
        assert_eq!(grid.label(3, 0), "aD");
        assert_eq!(grid.label(1, 1), "bB");
        assert_eq!(
            grid.labels(),
            vec!["aA", "aB", "aC", "aD", "bA", "bB", "bC", "bD"]
        );
    }

    #[test]
    fn letters_extend_past_26() {
        assert_eq!(letters(25, true), "Z");
        assert_eq!(letters(26, true), "AA");
        assert_eq!(letters(27, false), "ab");
        assert_eq!(letters(26 * 27, false), "aaa");
    }

    #[test]
    fn encode_without_binning() {
        let (sp, grid) = example_scanpath();
        let (e, clamped) = encode(&sp, &grid, None).unwrap();
        assert_eq!(e.tokens, vec!["aA", "aD", "bB"]);
        assert_eq!(e.compact(), "aAaDbB");
        assert_eq!(clamped, 0);
    }

    #[test]
    fn encode_with_50ms_bins() {
        let (sp, grid) = example_scanpath();
        let (e, _) = encode(&sp, &grid, Some(50.0)).unwrap();
        assert_eq!(e.tokens, vec!["aA", "aD", "aD", "aD", "bB", "bB"]);
        assert_eq!(e.compact(), "aAaDaDaDbBbB");
    }

    #[test]
    fn encode_binning_rounds_up() {
        let sp = Scanpath::new(vec![fixation(10.0, 10.0, 0, 120)], "s").unwrap();
        let grid = RoiGrid::regular(2, 2, Bounds::of_stimulus(100.0, 100.0)).unwrap();
        let (e, _) = encode(&sp, &grid, Some(50.0)).unwrap();
        assert_eq!(e.len(), 3); // ceil(120 / 50)
    }

    #[test]
    fn encode_empty_scanpath_is_empty() {
        let sp = Scanpath::new(vec![], "s").unwrap();
        let grid = RoiGrid::regular(2, 2, Bounds::of_stimulus(100.0, 100.0)).unwrap();
        let (e, clamped) = encode(&sp, &grid, None).unwrap();
        assert!(e.is_empty());
        assert_eq!(clamped, 0);
    }

    #[test]
    fn encode_clamps_outside_fixations() {
        let sp = Scanpath::new(vec![fixation(-50.0, 20.0, 0, 100)], "s").unwrap();
        let grid = RoiGrid::regular(2, 2, Bounds::of_stimulus(100.0, 100.0)).unwrap();
        let (e, clamped) = encode(&sp, &grid, None).unwrap();
        assert_eq!(e.tokens, vec!["aA"]);
        assert_eq!(clamped, 1);
    }

    #[test]
    fn binned_length_matches_ceil_sum() {
        let mut rng = crate::synth::SplitMix64::new(4);
        for _ in 0..50 {
            let n = 1 + (rng.next_u64() % 8) as usize;
            let mut fixations = Vec::new();
            let mut onset = 0i64;
            for _ in 0..n {
                let d = 20 + (rng.next_u64() % 300) as i64;
                fixations.push(fixation(
                    rng.next_f64() * 100.0,
                    rng.next_f64() * 100.0,
                    onset,
                    d,
                ));
                onset += d + 10;
            }
            let sp = Scanpath::new(fixations.clone(), "s").unwrap();
            let grid = RoiGrid::regular(3, 3, Bounds::of_stimulus(100.0, 100.0)).unwrap();
            let bin = 50.0;
            let (e, _) = encode(&sp, &grid, Some(bin)).unwrap();
            let expect: usize = fixations
                .iter()
                .map(|f| ((f.duration_us as f64 / 1000.0) / bin).ceil() as usize)
                .sum();
            assert_eq!(e.len(), expect);
            let (plain, _) = encode(&sp, &grid, None).unwrap();
            assert_eq!(plain.len(), n);
        }
    }

    #[test]
    fn percentile_grid_median_boundaries() {
        // A uniform lattice of points: 2x2 boundaries sit at the medians.
        let mut points = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                points.push((i as f64 * 10.0, j as f64 * 10.0));
            }
        }
        let grid =
            fit_percentile_grid(&points, 2, 2, Bounds::of_stimulus(100.0, 100.0)).unwrap();
        match &grid {
            RoiGrid::Percentile {
                col_edges,
                row_edges,
                ..
            } => {
                assert_eq!(col_edges.as_slice(), &[45.0]);
                assert_eq!(row_edges.as_slice(), &[45.0]);
            }
            _ => panic!("expected percentile grid"),
        }
    }

    #[test]
    fn percentile_grid_degenerate_points() {
        let points = vec![(5.0, 5.0); 20];
        let grid =
            fit_percentile_grid(&points, 3, 2, Bounds::of_stimulus(100.0, 100.0)).unwrap();
        let cells: Vec<(usize, usize)> =
            points.iter().map(|&(x, y)| grid.cell_of(x, y)).collect();
        assert!(cells.iter().all(|&c| c == cells[0]));
    }

    #[test]
    fn percentile_bands_balance_counts() {
        let mut rng = crate::synth::SplitMix64::new(12);
        let points: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.next_f64() * 500.0, rng.next_f64() * 300.0))
            .collect();
        let grid =
            fit_percentile_grid(&points, 4, 2, Bounds::of_stimulus(500.0, 300.0)).unwrap();
        let mut col_counts = [0usize; 4];
        let mut row_counts = [0usize; 2];
        for &(x, y) in &points {
            let (c, r) = grid.cell_of(x, y);
            col_counts[c] += 1;
            row_counts[r] += 1;
        }
        for c in col_counts {
            assert!((c as i64 - 25).abs() <= 1, "col counts {col_counts:?}");
        }
        for r in row_counts {
            assert!((r as i64 - 50).abs() <= 1, "row counts {row_counts:?}");
        }
    }

    fn enc(tokens: &[&str]) -> EncodedScanpath {
        EncodedScanpath::from_tokens(tokens.iter().map(|s| s.to_string()).collect(), None)
    }

    #[test]
    fn hamming_basics() {
        assert_eq!(hamming(&enc(&["aA", "aD"]), &enc(&["aA", "aD"])).unwrap(), 0);
        assert_eq!(hamming(&enc(&["aA", "aD"]), &enc(&["aA", "bB"])).unwrap(), 1);
        assert!(hamming(&enc(&["aA"]), &enc(&["aA", "bB"])).is_err());
    }

    #[test]
    fn hamming_matches_positional_oracle() {
        let alphabet = ["A", "B", "C"];
        let mut rng = crate::synth::SplitMix64::new(6);
        for _ in 0..100 {
            let len = 1 + (rng.next_u64() % 12) as usize;
            let mk = |rng: &mut crate::synth::SplitMix64| {
                EncodedScanpath::from_tokens(
                    (0..len)
                        .map(|_| alphabet[(rng.next_u64() % 3) as usize].to_string())
                        .collect(),
                    None,
                )
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let mut expect = 0;
            for i in 0..len {
                if a.tokens[i] != b.tokens[i] {
                    expect += 1;
                }
            }
            assert_eq!(hamming(&a, &b).unwrap(), expect);
        }
    }

    fn unit_cost_matrix(labels: &[&str]) -> SubstitutionMatrix {
        SubstitutionMatrix::uniform(
            labels.iter().map(|s| s.to_string()).collect(),
            0.0,
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn cost_mode_first_column_initialization() {
        let m = unit_cost_matrix(&["A", "B"]);
        let out = align_nw(
            &enc(&["A"]),
            &enc(&[]),
            &m,
            AlignMode::CostMin {
                insertion_cost: 2.0,
                deletion_cost: 3.0,
            },
        )
        .unwrap();
        assert_eq!(out.score, 3.0);
        assert_eq!(out.pairs, vec![(Some(0), None)]);
    }

    #[test]
    fn similarity_identical_strings_score_k_times_s() {
        let m = SubstitutionMatrix::uniform(
            vec!["A".into(), "B".into()],
            2.5,
            -1.0,
            0.0,
        )
        .unwrap();
        let a = enc(&["A", "B", "A", "A"]);
        let out = align_nw(&a, &a, &m, AlignMode::SimilarityMax { gap_penalty: -1.0 }).unwrap();
        assert_eq!(out.score, 10.0);
        // All-diagonal alignment.
        assert!(out.pairs.iter().all(|p| p.0.is_some() && p.1.is_some()));
    }

    #[test]
    fn cost_mode_reduces_to_levenshtein() {
        // Independent two-row reference implementation.
        fn levenshtein(a: &[String], b: &[String]) -> usize {
            let mut prev: Vec<usize> = (0..=b.len()).collect();
            for (i, ca) in a.iter().enumerate() {
                let mut cur = vec![i + 1];
                for (j, cb) in b.iter().enumerate() {
                    let sub = prev[j] + usize::from(ca != cb);
                    cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
                }
                prev = cur;
            }
            prev[b.len()]
        }

        let alphabet = ["A", "B", "C"];
        let m = unit_cost_matrix(&alphabet);
        let mut rng = crate::synth::SplitMix64::new(77);
        for _ in 0..300 {
            let mk = |rng: &mut crate::synth::SplitMix64| {
                let len = (rng.next_u64() % 9) as usize;
                EncodedScanpath::from_tokens(
                    (0..len)
                        .map(|_| alphabet[(rng.next_u64() % 3) as usize].to_string())
                        .collect(),
                    None,
                )
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let out = align_nw(
                &a,
                &b,
                &m,
                AlignMode::CostMin {
                    insertion_cost: 1.0,
                    deletion_cost: 1.0,
                },
            )
            .unwrap();
            assert_eq!(out.score as usize, levenshtein(&a.tokens, &b.tokens));
        }
    }

    #[test]
    fn unknown_token_is_named() {
        let m = unit_cost_matrix(&["A"]);
        let err = align_nw(
            &enc(&["A", "Q"]),
            &enc(&["A"]),
            &m,
            AlignMode::SimilarityMax { gap_penalty: 0.0 },
        )
        .unwrap_err();
        match err {
            Error::UnknownToken(t) => assert_eq!(t, "Q"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scanmatch_identical_is_one() {
        let m = SubstitutionMatrix::uniform(
            vec!["A".into(), "B".into(), "C".into()],
            1.0,
            0.2,
            0.0,
        )
        .unwrap();
        let a = enc(&["A", "C", "B", "B"]);
        assert_eq!(scanmatch_score(&a, &a, &m, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn scanmatch_doubled_sequence_is_half() {
        let m = SubstitutionMatrix::uniform(
            vec!["A".into(), "B".into()],
            1.0,
            -1.0,
            0.0,
        )
        .unwrap();
        let b = enc(&["A", "B", "A"]);
        let mut doubled = b.tokens.clone();
        doubled.extend(b.tokens.clone());
        let a = EncodedScanpath::from_tokens(doubled, None);
        let score = scanmatch_score(&a, &b, &m, 0.0).unwrap();
        assert!((score - 0.5).abs() < 1e-12, "got {score}");
    }

    #[test]
    fn scanmatch_symmetric_for_symmetric_matrix() {
        let labels: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let mut rng = crate::synth::SplitMix64::new(42);
        for _ in 0..50 {
            // Random symmetric matrix with positive diagonal max.
            let mut rows = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.next_f64() * 2.0 - 0.5;
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
                rows[i][i] = rows[i][i].abs() + 0.1;
            }
            let m = SubstitutionMatrix::new(labels.clone(), rows, 0.0).unwrap();
            let mk = |rng: &mut crate::synth::SplitMix64| {
                let len = 1 + (rng.next_u64() % 6) as usize;
                EncodedScanpath::from_tokens(
                    (0..len)
                        .map(|_| labels[(rng.next_u64() % 3) as usize].clone())
                        .collect(),
                    None,
                )
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let gap = -rng.next_f64();
            let ab = scanmatch_score(&a, &b, &m, gap).unwrap();
            let ba = scanmatch_score(&b, &a, &m, gap).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn scanmatch_requires_positive_max() {
        let m = SubstitutionMatrix::uniform(vec!["A".into()], -1.0, -2.0, 0.0).unwrap();
        assert!(scanmatch_score(&enc(&["A"]), &enc(&["A"]), &m, 0.0).is_err());
    }

    #[test]
    fn distance_based_matrix_shape() {
        let grid = RoiGrid::regular(4, 2, Bounds::of_stimulus(800.0, 400.0)).unwrap();
        let m = SubstitutionMatrix::distance_based(&grid, 1.0, 0.5, 0.0).unwrap();
        // Identical cells take the maximum entry.
        let self_score = m.score("aA", "aA").unwrap();
        assert_eq!(self_score, m.max_score());
        assert_eq!(self_score, 0.5);
        // Far corners are negative (beyond half the diagonal).
        assert!(m.score("aA", "bD").unwrap() < 0.0);
        // Symmetric and decreasing with distance.
        assert_eq!(m.score("aA", "aB").unwrap(), m.score("aB", "aA").unwrap());
        assert!(m.score("aA", "aB").unwrap() > m.score("aA", "aC").unwrap());
    }

    #[test]
    fn eyenalysis_identity_and_symmetry() {
        let s = vec![vec![10.0, 20.0], vec![30.0, 40.0], vec![50.0, 60.0]];
        assert_eq!(eyenalysis(&s, &s).unwrap(), 0.0);
        let t = vec![vec![12.0, 25.0], vec![33.0, 47.0]];
        assert_eq!(eyenalysis(&s, &t).unwrap(), eyenalysis(&t, &s).unwrap());
    }

    #[test]
    fn eyenalysis_worked_example() {
        // Collinear layout whose mapping distances are forward
        // (30, 25, 10, 30) and backward (30, 25, 30, 10, 50):
        // ((30+25+10+30) + (30+25+30+10+50)) / max(4, 5) = 48.
        let s = vec![
            vec![30.0, 0.0],
            vec![225.0, 0.0],
            vec![410.0, 0.0],
            vec![630.0, 0.0],
        ];
        let t = vec![
            vec![0.0, 0.0],
            vec![200.0, 0.0],
            vec![400.0, 0.0],
            vec![600.0, 0.0],
            vec![680.0, 0.0],
        ];
        assert_eq!(eyenalysis(&s, &t).unwrap(), 48.0);
    }

    #[test]
    fn eyenalysis_matches_exhaustive_oracle() {
        let mut rng = crate::synth::SplitMix64::new(52);
        for _ in 0..100 {
            let mk = |rng: &mut crate::synth::SplitMix64| {
                let n = 1 + (rng.next_u64() % 8) as usize;
                (0..n)
                    .map(|_| vec![rng.next_f64() * 100.0, rng.next_f64() * 100.0])
                    .collect::<Vec<_>>()
            };
            let s = mk(&mut rng);
            let t = mk(&mut rng);
            // O(n^2) oracle with explicit loops.
            let mut forward = 0.0;
            for p in &s {
                let mut best = f64::INFINITY;
                for q in &t {
                    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    if d < best {
                        best = d;
                    }
                }
                forward += best;
            }
            let mut backward = 0.0;
            for q in &t {
                let mut best = f64::INFINITY;
                for p in &s {
                    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    if d < best {
                        best = d;
                    }
                }
                backward += best;
            }
            let expect = (forward + backward) / s.len().max(t.len()) as f64;
            assert!((eyenalysis(&s, &t).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn eyenalysis_errors() {
        let s = vec![vec![0.0, 0.0]];
        assert!(eyenalysis(&s, &[]).is_err());
        assert!(eyenalysis(&s, &[vec![1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn ngram_histogram_counts_windows() {
        let e = enc(&["A", "B", "A", "B"]);
        let h = ngram_histogram(&e, 2).unwrap();
        assert_eq!(h.len(), 2);
        let ab = h.get(&vec!["A".to_string(), "B".to_string()]).unwrap();
        let ba = h.get(&vec!["B".to_string(), "A".to_string()]).unwrap();
        assert!((ab - 2.0 / 3.0).abs() < 1e-12);
        assert!((ba - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unigram_is_token_frequency() {
        let e = enc(&["A", "A", "B", "C"]);
        let h = ngram_histogram(&e, 1).unwrap();
        assert_eq!(h.get(&vec!["A".to_string()]), Some(&0.5));
        assert_eq!(h.get(&vec!["B".to_string()]), Some(&0.25));
    }

    #[test]
    fn ngram_too_short_errors() {
        let e = enc(&["A"]);
        assert!(ngram_histogram(&e, 2).is_err());
        assert!(ngram_histogram(&e, 0).is_err());
    }

    #[test]
    fn ngram_sums_to_one_and_matches_oracle() {
        let alphabet = ["A", "B", "C", "D"];
        let mut rng = crate::synth::SplitMix64::new(91);
        for _ in 0..100 {
            let len = 2 + (rng.next_u64() % 20) as usize;
            let tokens: Vec<String> = (0..len)
                .map(|_| alphabet[(rng.next_u64() % 4) as usize].to_string())
                .collect();
            let e = EncodedScanpath::from_tokens(tokens.clone(), None);
            let n = 1 + (rng.next_u64() % 2) as usize;
            let h = ngram_histogram(&e, n).unwrap();
            let sum: f64 = h.values().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            // Naive window count.
            let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
            for i in 0..=len - n {
                *counts.entry(tokens[i..i + n].to_vec()).or_insert(0) += 1;
            }
            for (k, c) in counts {
                let expect = c as f64 / (len - n + 1) as f64;
                assert!((h[&k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn histogram_distance_bounds() {
        let mut a = BTreeMap::new();
        a.insert(vec!["A".to_string()], 1.0);
        let mut b = BTreeMap::new();
        b.insert(vec!["B".to_string()], 1.0);
        assert_eq!(histogram_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(histogram_distance(&a, &b).unwrap(), 1.0);

        let mut bad = BTreeMap::new();
        bad.insert(vec!["A".to_string()], 0.7);
        assert!(histogram_distance(&a, &bad).is_err());
    }

    #[test]
    fn matrix_file_round_trip() {
        let grid = RoiGrid::regular(3, 2, Bounds::of_stimulus(300.0, 200.0)).unwrap();
        let m = SubstitutionMatrix::distance_based(&grid, 2.0, 0.5, -0.25).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = SubstitutionMatrix::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_file_rejects_bad_shapes() {
        let text = "\tA\tB\nA\t1\t2\n";
        assert!(SubstitutionMatrix::from_reader(text.as_bytes()).is_err());
        let text = "\tA\tB\nA\t1\t2\nB\t3\n";
        assert!(SubstitutionMatrix::from_reader(text.as_bytes()).is_err());
    }

    #[test]
    fn encoded_file_round_trip() {
        let e = EncodedScanpath::from_tokens(
            vec!["aA".into(), "aD".into(), "bB".into()],
            Some(50.0),
        );
        let mut buf = Vec::new();
        write_encoded(&mut buf, &e).unwrap();
        let back = read_encoded(buf.as_slice()).unwrap();
        assert_eq!(back, e);
    }
}

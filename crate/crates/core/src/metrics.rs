//! Scoring model answers against emitted ground truth: answer parsers, grid
//! and 7-DoF error summaries, and histogram CSVs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_yaw, Box7DoF};
use crate::localcogmap::GridCoord;
use crate::qa::{GroundTruth, QARecord, Task};
use crate::scene::Vec3;

pub const DEFAULT_COGMAP_BIN: f64 = 0.5;
pub const DEFAULT_CENTER_BIN: f64 = 0.1;
pub const DEFAULT_SIZE_BIN: f64 = 0.1;
pub const DEFAULT_YAW_BIN: f64 = 0.1;

const NUM: &str = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?";

static GRID_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\s*([-+]?\d+)\s*,\s*([-+]?\d+)\s*\]").unwrap());
static BOX_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"[(\[]\s*{NUM}(?:\s*,\s*{NUM}){{6}}\s*[)\]]")).unwrap()
});
static NUM_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(NUM).unwrap());

/// Extracts the first bracketed integer pair, e.g. `[7, 3]`.
pub fn parse_grid_answer(text: &str) -> Result<GridCoord> {
    let caps = GRID_RE
        .captures(text)
        .ok_or_else(|| Error::NoParse(format!("no [u, v] pair in {text:?}")))?;
    let num = |i: usize| {
        let s = &caps[i];
        s.parse::<i64>()
            .unwrap_or(if s.starts_with('-') { i64::MIN } else { i64::MAX })
    };
    GridCoord::new(num(1), num(2))
}

/// Extracts the first 7-tuple of reals, wrapping the yaw into (-pi, pi].
pub fn parse_box7_answer(text: &str) -> Result<Box7DoF> {
    let m = BOX_RE
        .find(text)
        .ok_or_else(|| Error::NoParse(format!("no 7-tuple in {text:?}")))?;
    let v: Vec<f64> = NUM_RE
        .find_iter(m.as_str())
        .map(|n| n.as_str().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::NoParse(e.to_string()))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoParse("non-finite value".into()));
    }
    for (k, &s) in v[3..6].iter().enumerate() {
        if s <= 0.0 {
            return Err(Error::InvalidSize {
                id: "answer".into(),
                path: format!("size[{k}]"),
                detail: format!("extent must be positive, got {s}"),
            });
        }
    }
    Ok(Box7DoF::new(
        Vec3::new(v[0], v[1], v[2]),
        [v[3], v[4], v[5]],
        wrap_yaw(v[6])?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub count: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub bin_width: f64,
    /// Non-empty bins as (lower bound, count), ascending.
    pub histogram: Vec<(f64, usize)>,
}

/// Summarizes non-negative errors into mean, median and a fixed-width
/// histogram.
pub fn summarize(errors: &[f64], bin_width: f64) -> Result<EvalSummary> {
    if errors.is_empty() {
        return Err(Error::Empty);
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidField {
            path: "bin_width".into(),
            detail: format!("must be positive, got {bin_width}"),
        });
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for &e in &sorted {
        // The small bias keeps values such as 0.3 / 0.1 in their own bin.
        let idx = (e / bin_width + 1e-9).floor() as i64;
        *bins.entry(idx).or_default() += 1;
    }
    Ok(EvalSummary {
        count: n,
        mean_error: mean,
        median_error: median,
        bin_width,
        histogram: bins
            .into_iter()
            .map(|(i, c)| (i as f64 * bin_width, c))
            .collect(),
    })
}

fn check_lengths(preds: usize, gts: usize) -> Result<()> {
    if preds != gts {
        return Err(Error::LengthMismatch { preds, gts });
    }
    if preds == 0 {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Euclidean grid-cell distance between predicted and true cells.
pub fn cogmap_error(preds: &[GridCoord], gts: &[GridCoord], bin_width: f64) -> Result<EvalSummary> {
    check_lengths(preds.len(), gts.len())?;
    let errors: Vec<f64> = preds.iter().zip(gts).map(|(p, g)| p.distance(*g)).collect();
    summarize(&errors, bin_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingBins {
    pub center: f64,
    pub size: f64,
    pub yaw: f64,
}

impl Default for GroundingBins {
    fn default() -> Self {
        Self {
            center: DEFAULT_CENTER_BIN,
            size: DEFAULT_SIZE_BIN,
            yaw: DEFAULT_YAW_BIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingSummary {
    /// 3D center distance, meters.
    pub center: EvalSummary,
    /// Mean absolute extent difference, meters.
    pub size: EvalSummary,
    /// Absolute wrapped yaw difference, radians.
    pub yaw: EvalSummary,
}

pub fn yaw_error(pred: f64, gt: f64) -> Result<f64> {
    Ok(wrap_yaw(pred - gt)?.abs())
}

pub fn grounding_errors(preds: &[Box7DoF], gts: &[Box7DoF], bins: GroundingBins) -> Result<GroundingSummary> {
    check_lengths(preds.len(), gts.len())?;
    let mut center = Vec::with_capacity(preds.len());
    let mut size = Vec::with_capacity(preds.len());
    let mut yaw = Vec::with_capacity(preds.len());
    for (p, g) in preds.iter().zip(gts) {
        center.push(p.center.distance(g.center));
        size.push(p.size.iter().zip(&g.size).map(|(a, b)| (a - b).abs()).sum::<f64>() / 3.0);
        yaw.push(yaw_error(p.yaw, g.yaw)?);
    }
    Ok(GroundingSummary {
        center: summarize(&center, bins.center)?,
        size: summarize(&size, bins.size)?,
        yaw: summarize(&yaw, bins.yaw)?,
    })
}

/// Decimal places needed to print multiples of `width` exactly (at least 1).
fn decimals_for(width: f64) -> usize {
    (1..=9)
        .find(|&d| {
            let scaled = width * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-6
        })
        .unwrap_or(9)
}

/// `bin_lower,count` rows in ascending order, then `mean` and `median`.
pub fn write_histogram_csv(summary: &EvalSummary) -> String {
    let prec = decimals_for(summary.bin_width);
    let mut out = String::from("bin_lower,count\n");
    for &(lower, count) in &summary.histogram {
        let _ = writeln!(out, "{lower:.prec$},{count}");
    }
    let _ = writeln!(out, "mean,{}", summary.mean_error);
    let _ = writeln!(out, "median,{}", summary.median_error);
    out
}

/// One model answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub answer_text: String,
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::Malformed(format!("prediction line {}: {e}", n + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParseStats {
    pub total: usize,
    pub no_parse: usize,
}

impl ParseStats {
    pub fn no_parse_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.no_parse as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinWidths {
    pub cogmap: f64,
    pub grounding: GroundingBins,
}

impl Default for BinWidths {
    fn default() -> Self {
        Self {
            cogmap: DEFAULT_COGMAP_BIN,
            grounding: GroundingBins::default(),
        }
    }
}

impl BinWidths {
    /// Same width for every histogram.
    pub fn uniform(width: f64) -> Self {
        Self {
            cogmap: width,
            grounding: GroundingBins {
                center: width,
                size: width,
                yaw: width,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cogmap_answers: ParseStats,
    pub grounding_answers: ParseStats,
    pub cogmap: Option<EvalSummary>,
    pub grounding: Option<GroundingSummary>,
}

impl EvalReport {
    pub fn no_parse_rate(&self) -> f64 {
        let total = self.cogmap_answers.total + self.grounding_answers.total;
        let bad = self.cogmap_answers.no_parse + self.grounding_answers.no_parse;
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    }
}

enum Parsed {
    Grid(GridCoord, GridCoord),
    Box(Box7DoF, Box7DoF),
    GridFailed,
    BoxFailed,
}

/// Matches predictions to ground-truth records by id and scores them.
/// Unparseable answers are counted per task and left out of the error
/// summaries.
pub fn evaluate(preds: &[Prediction], gts: &[QARecord], bins: BinWidths) -> Result<EvalReport> {
    let by_id: HashMap<&str, &QARecord> = gts.iter().map(|r| (r.id.as_str(), r)).collect();
    let parsed: Vec<Parsed> = preds
        .par_iter()
        .map(|p| {
            let gt = by_id
                .get(p.id.as_str())
                .ok_or_else(|| Error::SchemaMismatch(format!("prediction `{}` has no ground truth", p.id)))?;
            match (gt.task, &gt.ground_truth) {
                (Task::ScenegraphQa, GroundTruth::Grid(g)) => Ok(match parse_grid_answer(&p.answer_text) {
                    Ok(v) => Parsed::Grid(v, *g),
                    Err(_) => Parsed::GridFailed,
                }),
                (Task::GroundingQa, GroundTruth::Box(g)) => Ok(match parse_box7_answer(&p.answer_text) {
                    Ok(v) => Parsed::Box(v, *g),
                    Err(_) => Parsed::BoxFailed,
                }),
                _ => Err(Error::SchemaMismatch(format!(
                    "record `{}` ground truth does not match task {}",
                    gt.id,
                    gt.task.name()
                ))),
            }
        })
        .collect::<Result<_>>()?;

    let mut cog_stats = ParseStats::default();
    let mut box_stats = ParseStats::default();
    let (mut gp, mut gg, mut bp, mut bg) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for p in parsed {
        match p {
            Parsed::Grid(p, g) => {
                cog_stats.total += 1;
                gp.push(p);
                gg.push(g);
            }
            Parsed::GridFailed => {
                cog_stats.total += 1;
                cog_stats.no_parse += 1;
            }
            Parsed::Box(p, g) => {
                box_stats.total += 1;
                bp.push(p);
                bg.push(g);
            }
            Parsed::BoxFailed => {
                box_stats.total += 1;
                box_stats.no_parse += 1;
            }
        }
    }
    Ok(EvalReport {
        cogmap_answers: cog_stats,
        grounding_answers: box_stats,
        cogmap: (!gp.is_empty())
            .then(|| cogmap_error(&gp, &gg, bins.cogmap))
            .transpose()?,
        grounding: (!bp.is_empty())
            .then(|| grounding_errors(&bp, &bg, bins.grounding))
            .transpose()?,
    })
}

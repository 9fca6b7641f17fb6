//! Ingestion of raw positive bivariate data (loss/expense pairs and the
//! like) and its reduction to the joint threshold exceedances the
//! estimation procedures are built for: keep the rows where both
//! coordinates reach their thresholds, then divide each coordinate by a
//! fixed scale so the fits work near the origin.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BvpaError, Result};
use crate::model::BivariatePoint;
use crate::numeric::quantile_type7;

/// A loaded two-column dataset. All values are strictly positive and
/// finite; `source` records where it came from for error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub rows: Vec<(f64, f64)>,
    pub source: String,
}

/// Joint-exceedance reduction: retain rows with both coordinates at or
/// above their thresholds, then divide the coordinates by the scale
/// divisors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PotConfig {
    pub threshold1: f64,
    pub threshold2: f64,
    pub scale_divisors: (f64, f64),
}

/// Loads a CSV with one header row and exactly two positive numeric
/// columns. Any malformed row fails the load with its 1-based line number;
/// a file whose first row already looks numeric is rejected instead of
/// silently swallowing a data row as the header.
pub fn load_csv(path: &Path) -> Result<RawDataset> {
    let file = std::fs::File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    {
        let header = reader.headers().map_err(csv_error)?;
        if header.len() >= 2
            && header.iter().take(2).all(|f| f.trim().parse::<f64>().is_ok())
        {
            return Err(BvpaError::Parse {
                line: 1,
                message: "first row is numeric; expected a header row".into(),
            });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 2 {
            return Err(BvpaError::Parse {
                line,
                message: format!("expected exactly two columns, got {}", record.len()),
            });
        }
        let mut pair = [0.0f64; 2];
        for (slot, field) in pair.iter_mut().zip(record.iter()) {
            let value: f64 = field.trim().parse().map_err(|_| BvpaError::Parse {
                line,
                message: format!("'{field}' is not a number"),
            })?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(BvpaError::Parse {
                    line,
                    message: format!("value {value} is not strictly positive and finite"),
                });
            }
            *slot = value;
        }
        rows.push((pair[0], pair[1]));
    }
    if rows.is_empty() {
        return Err(BvpaError::EmptyData);
    }
    Ok(RawDataset {
        rows,
        source: path.display().to_string(),
    })
}

fn csv_error(e: csv::Error) -> BvpaError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => BvpaError::Io(io),
        other => BvpaError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Applies the joint-exceedance reduction. Retention is inclusive (a row
/// exactly at both thresholds is kept), so re-running with thresholds at
/// the retained minima is a no-op. Errors when nothing is retained.
pub fn pot_transform(data: &RawDataset, config: &PotConfig) -> Result<Vec<BivariatePoint>> {
    for (value, name) in [
        (config.threshold1, "threshold1"),
        (config.threshold2, "threshold2"),
        (config.scale_divisors.0, "scale divisor 1"),
        (config.scale_divisors.1, "scale divisor 2"),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(BvpaError::InvalidParams(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    let retained: Vec<BivariatePoint> = data
        .rows
        .iter()
        .filter(|(a, b)| *a >= config.threshold1 && *b >= config.threshold2)
        .map(|(a, b)| BivariatePoint {
            x1: a / config.scale_divisors.0,
            x2: b / config.scale_divisors.1,
        })
        .collect();
    if retained.is_empty() {
        return Err(BvpaError::EmptyResult(
            "no rows at or above both thresholds".into(),
        ));
    }
    Ok(retained)
}

/// Empirical survival table: for each distinct value `x` in ascending
/// order, the fraction of observations at or above `x`. The smallest value
/// maps to 1 and the largest to `1/n`.
pub fn empirical_survival(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(BvpaError::EmptyData);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut table = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        table.push((x, (sorted.len() - i) as f64 / n));
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
    }
    Ok(table)
}

/// Kolmogorov distance between the empirical survival step function of
/// `values` and a model survival function: the largest absolute gap,
/// checked on both sides of every jump.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], sf: F) -> Result<f64> {
    let table = empirical_survival(values)?;
    let mut d: f64 = 0.0;
    for (k, &(x, level)) in table.iter().enumerate() {
        let model = sf(x);
        let next_level = table.get(k + 1).map_or(0.0, |t| t.1);
        d = d.max((model - level).abs()).max((model - next_level).abs());
    }
    Ok(d)
}

/// One histogram cell: half-open box `[x1_lo, x1_hi) x [x2_lo, x2_hi)`
/// (closed on the far edge of the last bin) and the fraction of the sample
/// inside it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridCell {
    pub x1_lo: f64,
    pub x1_hi: f64,
    pub x2_lo: f64,
    pub x2_hi: f64,
    /// Relative frequency; all cells of a grid sum to 1.
    pub mass: f64,
}

/// Two-dimensional histogram over the sample's bounding box with
/// `bins = (b1, b2)` equal-width bins per axis (at least 2 each). Points on
/// the top edge fall into the last bin; a degenerate axis (all values
/// equal) puts everything into bin 0 of that axis. Cells are emitted with
/// the first axis outermost.
pub fn density_grid_2d(data: &[BivariatePoint], bins: (usize, usize)) -> Result<Vec<GridCell>> {
    if data.is_empty() {
        return Err(BvpaError::EmptyData);
    }
    let (b1, b2) = bins;
    if b1 < 2 || b2 < 2 {
        return Err(BvpaError::Precondition(format!(
            "at least 2 bins per axis are required, got ({b1}, {b2})"
        )));
    }
    let min1 = data.iter().map(|p| p.x1).fold(f64::INFINITY, f64::min);
    let max1 = data.iter().map(|p| p.x1).fold(f64::NEG_INFINITY, f64::max);
    let min2 = data.iter().map(|p| p.x2).fold(f64::INFINITY, f64::min);
    let max2 = data.iter().map(|p| p.x2).fold(f64::NEG_INFINITY, f64::max);
    let w1 = (max1 - min1) / b1 as f64;
    let w2 = (max2 - min2) / b2 as f64;
    let index = |value: f64, min: f64, width: f64, count: usize| -> usize {
        if width > 0.0 {
            (((value - min) / width) as usize).min(count - 1)
        } else {
            0
        }
    };
    let mut counts = vec![0usize; b1 * b2];
    for point in data {
        let i1 = index(point.x1, min1, w1, b1);
        let i2 = index(point.x2, min2, w2, b2);
        counts[i1 * b2 + i2] += 1;
    }
    let n = data.len() as f64;
    let mut cells = Vec::with_capacity(b1 * b2);
    for i1 in 0..b1 {
        for i2 in 0..b2 {
            cells.push(GridCell {
                x1_lo: min1 + i1 as f64 * w1,
                x1_hi: min1 + (i1 + 1) as f64 * w1,
                x2_lo: min2 + i2 as f64 * w2,
                x2_hi: min2 + (i2 + 1) as f64 * w2,
                mass: counts[i1 * b2 + i2] as f64 / n,
            });
        }
    }
    Ok(cells)
}

/// One row of a threshold scan: the quantile pair tried, the thresholds it
/// maps to, and how many rows survive the joint exceedance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdScanRow {
    pub q1: f64,
    pub q2: f64,
    pub threshold1: f64,
    pub threshold2: f64,
    pub retained: usize,
}

/// Tries every pair from `quantiles` as per-coordinate threshold levels and
/// reports the retention of each, so a threshold pair can be picked to hit
/// a target exceedance count. Quantiles must lie in `[0, 1]`.
pub fn threshold_scan(data: &RawDataset, quantiles: &[f64]) -> Result<Vec<ThresholdScanRow>> {
    if data.rows.is_empty() {
        return Err(BvpaError::EmptyData);
    }
    if quantiles.is_empty() {
        return Err(BvpaError::Precondition(
            "at least one quantile level is required".into(),
        ));
    }
    for &q in quantiles {
        if !(0.0..=1.0).contains(&q) {
            return Err(BvpaError::Domain(format!(
                "quantile level must lie in [0, 1], got {q}"
            )));
        }
    }
    let mut sorted1: Vec<f64> = data.rows.iter().map(|r| r.0).collect();
    let mut sorted2: Vec<f64> = data.rows.iter().map(|r| r.1).collect();
    sorted1.sort_by(f64::total_cmp);
    sorted2.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(quantiles.len() * quantiles.len());
    for &q1 in quantiles {
        let threshold1 = quantile_type7(&sorted1, q1);
        for &q2 in quantiles {
            let threshold2 = quantile_type7(&sorted2, q2);
            let retained = data
                .rows
                .iter()
                .filter(|(a, b)| *a >= threshold1 && *b >= threshold2)
                .count();
            rows.push(ThresholdScanRow {
                q1,
                q2,
                threshold1,
                threshold2,
                retained,
            });
        }
    }
    Ok(rows)
}

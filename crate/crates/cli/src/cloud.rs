//! Point clouds stored as CSV with header `x1,...,xd[,w]`.

use std::path::Path;

use ergorate::transport::{Metric, PointCloud};

/// Reads a Euclidean point cloud. A trailing `w` column gives nonnegative
/// weights, normalised to unit mass; without it every point weighs the same.
pub fn read_cloud(path: &Path) -> Result<PointCloud, String> {
    let ctx = |msg: String| format!("{}: {msg}", path.display());
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| ctx(e.to_string()))?;
    let header = reader.headers().map_err(|e| ctx(e.to_string()))?.clone();
    let weighted = header.iter().next_back() == Some("w");
    let dim = header.len() - usize::from(weighted);
    if dim == 0 {
        return Err(ctx("header names no coordinate columns".into()));
    }
    for (k, name) in header.iter().take(dim).enumerate() {
        if name != format!("x{}", k + 1) {
            return Err(ctx(format!("column {} must be named x{}, found `{name}`", k + 1, k + 1)));
        }
    }

    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ctx(e.to_string()))?;
        let line = row + 2;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| ctx(format!("line {line}: {e}")))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ctx(format!("line {line}: values must be finite")));
        }
        if weighted {
            let w = values[dim];
            if w < 0.0 {
                return Err(ctx(format!("line {line}: negative weight {w}")));
            }
            weights.push(w);
        }
        points.push(values[..dim].to_vec());
    }
    if points.is_empty() {
        return Err(ctx("no points".into()));
    }

    let cloud = if weighted {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(ctx("weights sum to zero".into()));
        }
        let mut w: Vec<f64> = weights.iter().map(|x| x / total).collect();
        let heaviest = (0..w.len()).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap_or(0);
        w[heaviest] += 1.0 - w.iter().sum::<f64>();
        PointCloud::new(points, w, Metric::Euclidean)
    } else {
        PointCloud::uniform(points, Metric::Euclidean)
    };
    cloud.map_err(|e| ctx(e.to_string()))
}

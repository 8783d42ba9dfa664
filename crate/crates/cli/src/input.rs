//! CSV readers. Every file may open with one header row; a first row with a
//! non-numeric field is taken as the header. Lines starting with `#` are
//! skipped. Errors carry `path:line`.

use std::path::Path;

use ndarray::{Array2, Array3};
use otecon::{DiscreteMeasure, GaussianMeasure, MatchingTable, Sample1D, SurplusBasis};

use crate::CliError;

struct Row {
    line: u64,
    values: Vec<f64>,
}

fn at(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}:{line}: {msg}", path.display()))
}

fn read_rows(path: &Path) -> Result<Vec<Row>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut width = None;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            at(path, line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parsed: Result<Vec<f64>, (usize, String)> = record
            .iter()
            .enumerate()
            .map(|(k, f)| f.parse::<f64>().map_err(|_| (k + 1, f.to_string())))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if index == 0 => continue,
            Err((k, f)) => return Err(at(path, line, format!("field {k}: cannot parse {f:?} as a number"))),
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(at(path, line, format!("non-finite value {v}")));
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(at(path, line, format!("expected {w} fields, found {}", values.len())))
            }
            _ => {}
        }
        rows.push(Row { line, values });
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Atoms as rows `w,x1..xd`; `d = 0` gives a weights-only measure.
pub fn measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let rows = read_rows(path)?;
    let d = rows[0].values.len() - 1;
    let weights = rows.iter().map(|r| r.values[0]).collect();
    let m = DiscreteMeasure::new(weights).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if d == 0 {
        return Ok(m);
    }
    let pts = Array2::from_shape_fn((rows.len(), d), |(i, k)| rows[i].values[k + 1]);
    m.with_points(pts).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Rows of equal width.
pub fn matrix(path: &Path) -> Result<Array2<f64>, CliError> {
    let rows = read_rows(path)?;
    let n = rows[0].values.len();
    Ok(Array2::from_shape_fn((rows.len(), n), |(i, j)| rows[i].values[j]))
}

/// One value per row.
pub fn sample(path: &Path) -> Result<Sample1D, CliError> {
    let rows = read_rows(path)?;
    if rows[0].values.len() != 1 {
        return Err(at(path, rows[0].line, "expected one value per row"));
    }
    Sample1D::new(rows.iter().map(|r| r.values[0]).collect()).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// The mean on the first row, then `d` covariance rows.
pub fn gaussian(path: &Path) -> Result<GaussianMeasure, CliError> {
    let rows = read_rows(path)?;
    let d = rows[0].values.len();
    if rows.len() != d + 1 {
        return Err(at(path, rows[0].line, format!("expected a mean row and {d} covariance rows, found {} rows", rows.len())));
    }
    let cov: Vec<f64> = rows[1..].iter().flat_map(|r| r.values.iter().copied()).collect();
    GaussianMeasure::from_slices(&rows[0].values, &cov).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn index(path: &Path, line: u64, v: f64, name: &str) -> Result<usize, CliError> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(at(path, line, format!("{name} must be a nonnegative integer, got {v}")));
    }
    Ok(v as usize)
}

/// Rows `x,y,count` with types numbered from 1; `y = 0` rows hold the
/// singles of type `x`, `x = 0` rows the singles of type `y`.
pub fn table(path: &Path) -> Result<MatchingTable, CliError> {
    let rows = read_rows(path)?;
    if rows[0].values.len() != 3 {
        return Err(at(path, rows[0].line, "expected columns x,y,count"));
    }
    let mut cells = Vec::new();
    let (mut nx, mut ny) = (0, 0);
    for r in &rows {
        let x = index(path, r.line, r.values[0], "x")?;
        let y = index(path, r.line, r.values[1], "y")?;
        if x == 0 && y == 0 {
            return Err(at(path, r.line, "x and y cannot both be 0"));
        }
        nx = nx.max(x);
        ny = ny.max(y);
        cells.push((r.line, x, y, r.values[2]));
    }
    if nx == 0 || ny == 0 {
        return Err(CliError::Input(format!("{}: table has no matched cells", path.display())));
    }
    let mut full = Array2::from_elem((nx + 1, ny + 1), f64::NAN);
    for (line, x, y, c) in cells {
        if !full[(x, y)].is_nan() {
            return Err(at(path, line, format!("duplicate entry for ({x},{y})")));
        }
        full[(x, y)] = c;
    }
    if let Some(((x, y), _)) = full.indexed_iter().find(|((x, y), v)| (*x, *y) != (0, 0) && v.is_nan()) {
        return Err(CliError::Input(format!("{}: missing entry for ({x},{y})", path.display())));
    }
    let flows = full.slice(ndarray::s![1.., 1..]).to_owned();
    let sx = (1..=nx).map(|x| full[(x, 0)]).collect();
    let sy = (1..=ny).map(|y| full[(0, y)]).collect();
    MatchingTable::new(flows, sx, sy).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Rows `x,y,k,value` with 1-based indices; absent entries are zero.
pub fn basis(path: &Path, nx: usize, ny: usize) -> Result<SurplusBasis, CliError> {
    let rows = read_rows(path)?;
    if rows[0].values.len() != 4 {
        return Err(at(path, rows[0].line, "expected columns x,y,k,value"));
    }
    let mut entries = Vec::new();
    let mut nk = 0;
    for r in &rows {
        let x = index(path, r.line, r.values[0], "x")?;
        let y = index(path, r.line, r.values[1], "y")?;
        let k = index(path, r.line, r.values[2], "k")?;
        if !(1..=nx).contains(&x) || !(1..=ny).contains(&y) || k == 0 {
            return Err(at(path, r.line, format!("index ({x},{y},{k}) outside 1..={nx} x 1..={ny} x 1..")));
        }
        nk = nk.max(k);
        entries.push((x - 1, y - 1, k - 1, r.values[3]));
    }
    let mut b = Array3::zeros((nx, ny, nk));
    for (x, y, k, v) in entries {
        b[(x, y, k)] = v;
    }
    SurplusBasis::new(b).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// One value per row, as a plain vector.
pub fn values(path: &Path) -> Result<Vec<f64>, CliError> {
    let rows = read_rows(path)?;
    if rows[0].values.len() != 1 {
        return Err(at(path, rows[0].line, "expected one value per row"));
    }
    Ok(rows.into_iter().map(|r| r.values[0]).collect())
}

//! Test signals, noise injection and file formats.
//!
//! Signals are stored as CSV with header `index,re,im`. Systems are exchanged
//! as Matrix Market files (coordinate or array, real or complex); vectors are
//! `q x 1` or `1 x q` matrices.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::identification::Realization;
use crate::stochastics::{sample_noise, NoiseModel, SeededGenerator};

/// Parameters of the eleven-peak NMR benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct NmrParameters {
    pub amplitudes: Vec<f64>,
    /// Hz.
    pub frequencies: Vec<f64>,
    /// 1/s.
    pub dampings: Vec<f64>,
    /// Radians.
    pub phase: f64,
    /// Sampling interval in seconds.
    pub delta: f64,
    pub n: usize,
}

impl Default for NmrParameters {
    fn default() -> Self {
        NmrParameters {
            amplitudes: vec![
                75.0, 150.0, 75.0, 150.0, 150.0, 150.0, 150.0, 150.0, 1400.0, 60.0, 500.0,
            ],
            frequencies: vec![
                -86.0, -70.0, -54.0, 152.0, 168.0, 292.0, 308.0, 360.0, 440.0, 490.0, 530.0,
            ],
            dampings: vec![
                50.0, 50.0, 50.0, 50.0, 50.0, 50.0, 50.0, 25.0, 285.7, 25.0, 200.0,
            ],
            phase: 135.0 * PI / 180.0,
            delta: 1.0 / 3000.0,
            n: 256,
        }
    }
}

/// `y_j = sum_k a_k e^{i phase} e^{(2 pi i f_k - d_k) j delta}`, `j = 0..n`.
pub fn nmr_signal(p: &NmrParameters) -> Result<Vec<Complex64>> {
    let k = p.amplitudes.len();
    for len in [p.frequencies.len(), p.dampings.len()] {
        if len != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: len,
            });
        }
    }
    if p.n == 0 {
        return Err(Error::domain("signal length must be at least 1"));
    }
    let rot = Complex64::from_polar(1.0, p.phase);
    Ok((0..p.n)
        .map(|j| {
            let t = j as f64 * p.delta;
            let s: Complex64 = (0..k)
                .map(|i| {
                    p.amplitudes[i]
                        * Complex64::new(-p.dampings[i] * t, 2.0 * PI * p.frequencies[i] * t).exp()
                })
                .sum();
            rot * s
        })
        .collect())
}

/// Diagonal system of order `q` with distinct eigenvalues drawn uniformly
/// (by area) from the annulus `radius^2 <= |z| <= radius`; `c` and `x0` have
/// unit-modulus entries.
pub fn random_modal_system(q: usize, radius: f64, seed: u64) -> Result<Realization> {
    if q == 0 {
        return Err(Error::domain("model order must be at least 1"));
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::domain(format!(
            "radius must lie in (0, 1), got {radius}"
        )));
    }
    let mut gen = SeededGenerator::new(seed, 0);
    let rng = gen.rng();
    let (r_lo2, r_hi2) = (radius.powi(4), radius * radius);
    let mut modes: Vec<Complex64> = Vec::with_capacity(q);
    while modes.len() < q {
        let r = rng.random_range(r_lo2..=r_hi2).sqrt();
        let z = Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI));
        if modes.iter().all(|w| (w - z).norm() >= 1e-6) {
            modes.push(z);
        }
    }
    let mut unit = |_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
    let c: Vec<Complex64> = (0..q).map(&mut unit).collect();
    let x0: Vec<Complex64> = (0..q).map(&mut unit).collect();
    Realization::new(CMatrix::from_diagonal(&modes), c, x0)
}

/// `y + eps * g` with `g` drawn from `model` at unit scale.
pub fn add_noise(
    y: &[Complex64],
    eps: f64,
    model: &NoiseModel,
    gen: &mut SeededGenerator,
) -> Result<Vec<Complex64>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    let g = sample_noise(model, y.len(), gen)?;
    Ok(y.iter().zip(&g).map(|(a, b)| a + eps * b).collect())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `y` as `index,re,im` CSV.
pub fn save_signal_csv(path: impl AsRef<Path>, y: &[Complex64]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = String::with_capacity(48 * (y.len() + 1));
    write_signal_csv(&mut buf, y);
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// CSV text of `y`, as written by [`save_signal_csv`].
pub fn write_signal_csv(out: &mut String, y: &[Complex64]) {
    out.push_str("index,re,im\n");
    for (j, z) in y.iter().enumerate() {
        out.push_str(&format!("{j},{},{}\n", fmt_f64(z.re), fmt_f64(z.im)));
    }
}

/// Reads an `index,re,im` CSV; rows must appear in index order `0..n`.
pub fn load_signal_csv(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let y = parse_signal_csv(&text).map_err(|(line, message)| Error::parse(path, line, message))?;
    if y.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(y)
}

/// Parses signal CSV text (possibly with no data rows); errors carry a 1-based
/// line number.
pub fn parse_signal_csv(text: &str) -> std::result::Result<Vec<Complex64>, (u64, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    match records.next() {
        None => return Err((1, "missing header \"index,re,im\"".into())),
        Some(Err(e)) => return Err((1, e.to_string())),
        Some(Ok(h)) => {
            if h.iter().collect::<Vec<_>>() != ["index", "re", "im"] {
                return Err((
                    1,
                    format!(
                        "expected header \"index,re,im\", found {:?}",
                        h.iter().collect::<Vec<_>>().join(",")
                    ),
                ));
            }
        }
    }
    let mut y = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| (e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err((line, format!("expected 3 columns, found {}", rec.len())));
        }
        let index: usize = rec[0]
            .parse()
            .map_err(|_| (line, format!("invalid index {:?}", &rec[0])))?;
        let num = |s: &str| -> std::result::Result<f64, (u64, String)> {
            let v: f64 = s
                .parse()
                .map_err(|_| (line, format!("invalid number {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err((line, format!("non-finite value {s:?}")))
            }
        };
        let z = Complex64::new(num(&rec[1])?, num(&rec[2])?);
        match index.cmp(&y.len()) {
            std::cmp::Ordering::Equal => y.push(z),
            std::cmp::Ordering::Less => return Err((line, format!("duplicate index {index}"))),
            std::cmp::Ordering::Greater => {
                return Err((line, format!("missing index {} (found {index})", y.len())))
            }
        }
    }
    Ok(y)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    Skew,
}

/// Reads a dense matrix from a Matrix Market file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text).map_err(|(line, message)| Error::parse(path, line, message))
}

/// Parses Matrix Market text (coordinate or array; real, integer or complex).
pub fn parse_matrix_market(text: &str) -> std::result::Result<CMatrix, (u64, String)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()));
    let (_, header) = lines.next().ok_or((1, "empty file".to_string()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err((
            1,
            "expected \"%%MatrixMarket matrix <format> <field> <symmetry>\"".into(),
        ));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err((1, format!("unsupported format {f:?}"))),
    };
    let complex = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "complex" => true,
        f => return Err((1, format!("unsupported field {f:?}"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err((1, format!("unsupported symmetry {s:?}"))),
    };
    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));

    let (size_line, size) = data.next().ok_or((1, "missing size line".to_string()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| (size_line, format!("invalid size entry {t:?}")))
        })
        .collect::<std::result::Result<_, _>>()?;
    let want = if coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err((size_line, format!("size line needs {want} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err((
            size_line,
            "symmetric storage requires a square matrix".into(),
        ));
    }
    let mut a = CMatrix::zeros(rows, cols);

    let parse_value = |line: u64, toks: &[&str]| -> std::result::Result<Complex64, (u64, String)> {
        let num = |s: &str| -> std::result::Result<f64, (u64, String)> {
            let v: f64 = s
                .parse()
                .map_err(|_| (line, format!("invalid number {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err((line, format!("non-finite value {s:?}")))
            }
        };
        Ok(if complex {
            Complex64::new(num(toks[0])?, num(toks[1])?)
        } else {
            Complex64::new(num(toks[0])?, 0.0)
        })
    };
    let value_width = if complex { 2 } else { 1 };
    let mut place = |i: usize, j: usize, v: Complex64| {
        a[(i, j)] = v;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => a[(j, i)] = v,
                Symmetry::Hermitian => a[(j, i)] = v.conj(),
                Symmetry::Skew => a[(j, i)] = -v,
            }
        }
    };

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in data {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 + value_width {
                return Err((
                    line,
                    format!("expected {} fields, found {}", 2 + value_width, toks.len()),
                ));
            }
            let idx = |s: &str, bound: usize| -> std::result::Result<usize, (u64, String)> {
                match s.parse::<usize>() {
                    Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                    _ => Err((line, format!("index {s:?} outside 1..={bound}"))),
                }
            };
            let (i, j) = (idx(toks[0], rows)?, idx(toks[1], cols)?);
            if symmetry != Symmetry::General && i < j {
                return Err((
                    line,
                    "symmetric storage lists only the lower triangle".into(),
                ));
            }
            place(i, j, parse_value(line, &toks[2..])?);
            seen += 1;
            if seen > nnz {
                return Err((line, format!("more than the declared {nnz} entries")));
            }
        }
        if seen != nnz {
            return Err((size_line, format!("declared {nnz} entries, found {seen}")));
        }
    } else {
        // column-major; symmetric variants store the lower triangle only
        let slots: Vec<(usize, usize)> = (0..cols)
            .flat_map(|j| {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Skew => j + 1,
                    _ => j,
                };
                (start..rows).map(move |i| (i, j))
            })
            .collect();
        let mut k = 0;
        for (line, l) in data {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != value_width {
                return Err((
                    line,
                    format!("expected {value_width} fields, found {}", toks.len()),
                ));
            }
            let &(i, j) = slots.get(k).ok_or_else(|| {
                (
                    line,
                    format!("more than the expected {} entries", slots.len()),
                )
            })?;
            place(i, j, parse_value(line, &toks)?);
            k += 1;
        }
        if k != slots.len() {
            return Err((
                size_line,
                format!("expected {} entries, found {k}", slots.len()),
            ));
        }
    }
    Ok(a)
}

/// Matrix Market array text for `a`; the field is `real` when every entry is real.
pub fn format_matrix_market(a: &CMatrix) -> String {
    let real = a.is_real();
    let mut out = format!(
        "%%MatrixMarket matrix array {} general\n{} {}\n",
        if real { "real" } else { "complex" },
        a.rows(),
        a.cols()
    );
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let z = a[(i, j)];
            if real {
                out.push_str(&format!("{}\n", fmt_f64(z.re)));
            } else {
                out.push_str(&format!("{} {}\n", fmt_f64(z.re), fmt_f64(z.im)));
            }
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &CMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(format_matrix_market(a).as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn read_vector(path: &Path) -> Result<Vec<Complex64>> {
    let m = read_matrix_market(path)?;
    if m.cols() == 1 {
        Ok(m.column(0))
    } else if m.rows() == 1 {
        Ok(m.row(0).to_vec())
    } else {
        Err(Error::parse(
            path,
            2,
            format!(
                "expected a vector, found a {}x{} matrix",
                m.rows(),
                m.cols()
            ),
        ))
    }
}

/// Loads `A`, `c` and `x0` of a discrete-time system.
pub fn load_system_matrix_market(
    path_a: impl AsRef<Path>,
    path_c: impl AsRef<Path>,
    path_x0: impl AsRef<Path>,
) -> Result<Realization> {
    let a = read_matrix_market(path_a.as_ref())?;
    if a.rows() != a.cols() {
        return Err(Error::domain(format!(
            "A must be square, found {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let c = read_vector(path_c.as_ref())?;
    let x0 = read_vector(path_x0.as_ref())?;
    Realization::new(a, c, x0)
}

/// Writes the three files read by [`load_system_matrix_market`].
pub fn save_system_matrix_market(
    r: &Realization,
    path_a: impl AsRef<Path>,
    path_c: impl AsRef<Path>,
    path_x0: impl AsRef<Path>,
) -> Result<()> {
    let q = r.order();
    write_matrix_market(path_a, &r.a)?;
    write_matrix_market(path_c, &CMatrix::from_row_major(q, 1, r.c.clone()))?;
    write_matrix_market(path_x0, &CMatrix::from_row_major(q, 1, r.x0.clone()))
}

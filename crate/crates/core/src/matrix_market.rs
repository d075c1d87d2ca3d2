//! Matrix Market coordinate-format reader and writer.
//!
//! The reader accepts `real` `coordinate` files with `general` or
//! `symmetric` symmetry. Symmetric files are expanded to full storage on
//! read. The writer detects exact symmetry and stores the lower triangle
//! only in that case, so writing and re-reading round-trips both layouts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a Matrix Market file from disk.
///
/// # Errors
///
/// [`Error::Io`] on filesystem failures and [`Error::Parse`] (naming the
/// offending line) on malformed content. Duplicate entries surface as
/// [`Error::DuplicateEntry`].
pub fn read_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<CsrMatrix<T>, Error> {
    read_matrix_market_from(BufReader::new(File::open(path)?))
}

/// Reads a Matrix Market stream. See [`read_matrix_market`].
pub fn read_matrix_market_from<T: Scalar>(reader: impl BufRead) -> Result<CsrMatrix<T>, Error> {
    let mut lines = reader.lines().enumerate();

    let (idx, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let line_no = idx + 1;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" {
        return Err(parse_err(line_no, "expected a %%MatrixMarket header"));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err(
            line_no,
            format!("unsupported object/format '{} {}'", fields[1], fields[2]),
        ));
    }
    if fields[3] != "real" {
        return Err(parse_err(
            line_no,
            format!("unsupported field type '{}', only real is handled", fields[3]),
        ));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                line_no,
                format!("unsupported symmetry '{other}'"),
            ))
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(usize, usize, T)> = Vec::new();
    let mut seen = 0usize;
    let mut last_line = line_no;

    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        last_line = line_no;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        match size {
            None => {
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, "size line must be 'rows cols nnz'"));
                }
                let dims: Vec<usize> = tokens
                    .iter()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| parse_err(line_no, format!("bad integer '{t}'")))
                    })
                    .collect::<Result<_, _>>()?;
                size = Some((dims[0], dims[1], dims[2]));
                entries.reserve(dims[2]);
            }
            Some((n_rows, n_cols, nnz)) => {
                if seen == nnz {
                    return Err(parse_err(
                        line_no,
                        format!("more than the declared {nnz} entries"),
                    ));
                }
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, "entry line must be 'row col value'"));
                }
                let r: usize = tokens[0]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad row index '{}'", tokens[0])))?;
                let c: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad column index '{}'", tokens[1])))?;
                let v: f64 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad value '{}'", tokens[2])))?;
                if r < 1 || r > n_rows || c < 1 || c > n_cols {
                    return Err(parse_err(
                        line_no,
                        format!("entry ({r}, {c}) outside the declared {n_rows}x{n_cols} shape"),
                    ));
                }
                let (r, c) = (r - 1, c - 1);
                entries.push((r, c, T::from_f64(v)));
                if symmetric && r != c {
                    entries.push((c, r, T::from_f64(v)));
                }
                seen += 1;
            }
        }
    }

    let (n_rows, n_cols, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            last_line,
            format!("declared {nnz} entries but found {seen}"),
        ));
    }
    CsrMatrix::from_coo(n_rows, n_cols, &entries)
}

/// Writes a matrix to disk in Matrix Market coordinate format.
///
/// Exactly symmetric matrices are stored as `symmetric` with the lower
/// triangle only; everything else is stored as `general`.
pub fn write_matrix_market<T: Scalar>(
    path: impl AsRef<Path>,
    a: &CsrMatrix<T>,
) -> Result<(), Error> {
    write_matrix_market_to(&mut BufWriter::new(File::create(path)?), a)
}

/// Writes a matrix to a stream. See [`write_matrix_market`].
pub fn write_matrix_market_to<T: Scalar>(
    w: &mut impl Write,
    a: &CsrMatrix<T>,
) -> Result<(), Error> {
    let symmetric = a.is_symmetric();
    let symmetry = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {symmetry}")?;
    let stored = if symmetric {
        (0..a.n_rows())
            .map(|i| {
                let (cols, _) = a.row(i);
                cols.iter().filter(|&&c| c <= i).count()
            })
            .sum()
    } else {
        a.nnz()
    };
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), stored)?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            if symmetric && c > i {
                continue;
            }
            writeln!(w, "{} {} {:e}", i + 1, c + 1, v)?;
        }
    }
    Ok(())
}

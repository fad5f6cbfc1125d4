//! Readers for distance matrices and sample metadata, and result writers.
//!
//! Two matrix formats are supported:
//!
//! * lsmat: tab-separated text. The first line lists the N sample ids,
//!   optionally preceded by an empty cell; each following line holds an id
//!   and N distances. Rows are re-aligned to header order.
//! * raw binary: N² little-endian `f32` values in row-major order with no
//!   header. N is supplied by the caller.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grouping::{build_grouping, Grouping};
use crate::matrix::{validate_matrix, DistanceMatrix};
use crate::stats::PermanovaResult;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

/// Non-empty lines with their 1-based line numbers, `\r` stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn read_lsmat(path: impl AsRef<Path>) -> Result<(Vec<String>, DistanceMatrix)> {
    let path = path.as_ref();
    parse_lsmat(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn parse_lsmat(text: &str) -> Result<(Vec<String>, DistanceMatrix)> {
    let mut lines = content_lines(text);
    let (_, header) = lines.next().ok_or(Error::Malformed { line: 1, message: "empty file".into() })?;
    let mut ids: Vec<String> = header.split('\t').map(str::to_owned).collect();
    if ids.first().is_some_and(|c| c.is_empty()) {
        ids.remove(0);
    }
    let n = ids.len();
    let mut position = HashMap::with_capacity(n);
    for (i, id) in ids.iter().enumerate() {
        if position.insert(id.as_str(), i).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }

    let mut data = vec![0f32; n * n];
    let mut seen = vec![false; n];
    let mut rows = 0usize;
    for (line, text) in lines {
        let mut fields = text.split('\t');
        let id = fields.next().unwrap_or_default();
        let &target = position.get(id).ok_or_else(|| Error::IdMismatch(id.to_owned()))?;
        if std::mem::replace(&mut seen[target], true) {
            return Err(Error::DuplicateId(id.to_owned()));
        }
        let out = &mut data[target * n..(target + 1) * n];
        let mut count = 0usize;
        for field in fields {
            if count < n {
                out[count] = field.trim().parse::<f32>().map_err(|_| Error::Malformed {
                    line,
                    message: format!("'{field}' is not a number"),
                })?;
            }
            count += 1;
        }
        if count != n {
            return Err(Error::Malformed {
                line,
                message: format!("row '{id}' has {count} values, expected {n}"),
            });
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Malformed {
            line: 1,
            message: format!("header lists {n} ids but {rows} rows follow"),
        });
    }
    Ok((ids, validate_matrix(n, data)?))
}

/// Renders a matrix in lsmat form. `f32` values use the shortest
/// representation that parses back to the same bits.
pub fn write_lsmat(ids: &[String], mat: &DistanceMatrix) -> String {
    assert_eq!(ids.len(), mat.n_dims());
    let mut out = String::new();
    for id in ids {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in mat.row(i) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a metadata TSV and builds the grouping for `ids`, in that order.
///
/// Metadata rows for ids not in `ids` are ignored; their count is logged.
pub fn read_grouping(path: impl AsRef<Path>, id_column: &str, group_column: &str, ids: &[String]) -> Result<Grouping> {
    let path = path.as_ref();
    parse_grouping(&read_text(path)?, id_column, group_column, ids).map_err(|e| e.in_file(path))
}

pub fn parse_grouping(text: &str, id_column: &str, group_column: &str, ids: &[String]) -> Result<Grouping> {
    let mut lines = content_lines(text).filter(|(_, l)| !l.starts_with("#q2:"));
    let (_, header) = lines.next().ok_or(Error::Malformed { line: 1, message: "empty file".into() })?;
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    let find = |name: &str| {
        columns.iter().position(|&c| c == name).ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let (id_idx, group_idx) = (find(id_column)?, find(group_column)?);

    let wanted: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut groups: Vec<Option<String>> = vec![None; ids.len()];
    let mut unknown = 0usize;
    for (line, text) in lines {
        let fields: Vec<&str> = text.split('\t').collect();
        let (Some(id), Some(group)) = (fields.get(id_idx), fields.get(group_idx)) else {
            return Err(Error::Malformed {
                line,
                message: format!("expected at least {} fields, found {}", id_idx.max(group_idx) + 1, fields.len()),
            });
        };
        match wanted.get(id.trim()) {
            Some(&i) => {
                if groups[i].replace(group.trim().to_owned()).is_some() {
                    return Err(Error::DuplicateSample(id.trim().to_owned()));
                }
            }
            None => unknown += 1,
        }
    }
    if unknown > 0 {
        log::warn!("ignored {unknown} metadata row(s) for samples not in the distance matrix");
    }
    let categories = groups
        .into_iter()
        .zip(ids)
        .map(|(g, id)| g.ok_or_else(|| Error::MissingSample(id.clone())))
        .collect::<Result<Vec<String>>>()?;
    build_grouping(&categories)
}

pub fn read_binary_matrix(path: impl AsRef<Path>, n_dims: usize) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    read_binary_inner(path, n_dims).map_err(|e| e.in_file(path))
}

fn read_binary_inner(path: &Path, n_dims: usize) -> Result<DistanceMatrix> {
    let mut file = File::open(path)?;
    let actual = file.metadata()?.len();
    let expected = (n_dims as u64).checked_mul(n_dims as u64).and_then(|c| c.checked_mul(4));
    if expected != Some(actual) {
        return Err(Error::SizeMismatch { n_dims, expected: expected.unwrap_or(u64::MAX), actual });
    }
    let count = n_dims * n_dims;
    let mut data = Vec::new();
    data.try_reserve_exact(count).map_err(|_| Error::AllocationFailure { bytes: count * 4 })?;
    let mut buf = vec![0u8; 1 << 20];
    let mut remaining = count * 4;
    while remaining > 0 {
        let chunk = &mut buf[..remaining.min(1 << 20)];
        file.read_exact(chunk)?;
        data.extend(chunk.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
        remaining -= chunk.len();
    }
    validate_matrix(n_dims, data)
}

pub fn write_binary_matrix(path: impl AsRef<Path>, mat: &DistanceMatrix) -> Result<()> {
    let path = path.as_ref();
    let write = || -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for v in mat.data() {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    };
    write().map_err(|e| e.in_file(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Json,
    Tsv,
}

/// Formats `x` with 17 significant digits, positional for decimal exponents
/// in `-5..=16` and scientific otherwise. Non-finite values render as
/// `inf`, `-inf` or `NaN`.
pub fn format_sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..=16).contains(&exp) {
        format!("{x:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

fn json_number(x: f64) -> String {
    if x.is_finite() {
        format_sig17(x)
    } else {
        format!("\"{}\"", format_sig17(x))
    }
}

/// Renders a result as a JSON object or as a two-line TSV table.
///
/// The TSV carries every JSON field except the constant `method`.
pub fn write_result(result: &PermanovaResult, format: ResultFormat) -> String {
    match format {
        ResultFormat::Json => format!(
            "{{\"method\": \"PERMANOVA\", \"test_statistic_name\": \"pseudo-F\", \"sample_size\": {}, \
             \"number_of_groups\": {}, \"test_statistic\": {}, \"p_value\": {}, \"number_of_permutations\": {}}}\n",
            result.n_dims,
            result.n_groups,
            json_number(result.f_observed),
            json_number(result.p_value),
            result.n_perms,
        ),
        ResultFormat::Tsv => format!(
            "test_statistic_name\tsample_size\tnumber_of_groups\ttest_statistic\tp_value\tnumber_of_permutations\n\
             pseudo-F\t{}\t{}\t{}\t{}\t{}\n",
            result.n_dims,
            result.n_groups,
            format_sig17(result.f_observed),
            format_sig17(result.p_value),
            result.n_perms,
        ),
    }
}

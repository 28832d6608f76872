//! Plain-text model files.
//!
//! One `key = value` pair per line, `#` starts a comment, and a line without
//! `=` continues the previous matrix. Keys are `n`, `Q` and `B` (row-major,
//! whitespace or comma separated), or `lambdas` for a diagonal model with
//! `Q = I`. An optional `name` is kept for display.
//!
//! ```
//! use ou_semigroup::model_file::parse_model;
//!
//! let text = "n = 2\nQ = 1 0 0 1\nB = -1 3 -3 -1\n";
//! let spec = parse_model(text).unwrap();
//! assert_eq!(spec.model.dim(), 2);
//! ```

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::OUModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: Option<String>,
    pub model: OUModel,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_numbers(value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| parse_error(line, format!("`{s}` is not a number"))))
        .collect()
}

fn square(entries: &[f64], n: usize, key: &str, line: usize) -> Result<DMatrix<f64>> {
    if entries.len() != n * n {
        return Err(parse_error(line, format!("{key} needs {} entries for n = {n}, found {}", n * n, entries.len())));
    }
    Ok(DMatrix::from_row_slice(n, n, entries))
}

/// Parses a model file. Structural problems are `Error::Parse`; a model that
/// parses but fails validation returns the validation error.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            // Continuation of a matrix spread over several lines.
            match current.as_ref().and_then(|k| fields.get_mut(k)) {
                Some((_, value)) if current.as_deref() != Some("name") => {
                    value.push(' ');
                    value.push_str(content);
                    continue;
                }
                _ => return Err(parse_error(line, "expected `key = value`")),
            }
        };
        let key = key.trim();
        if !matches!(key, "name" | "n" | "Q" | "B" | "lambdas") {
            return Err(parse_error(line, format!("unknown key `{key}`")));
        }
        if fields.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
            return Err(parse_error(line, format!("duplicate key `{key}`")));
        }
        current = Some(key.to_string());
    }
    let name = fields.get("name").map(|(_, v)| v.clone());
    if let Some((line, value)) = fields.get("lambdas") {
        if fields.contains_key("Q") || fields.contains_key("B") {
            return Err(parse_error(*line, "`lambdas` excludes `Q` and `B`"));
        }
        let rates = parse_numbers(value, *line)?;
        if rates.is_empty() {
            return Err(parse_error(*line, "`lambdas` is empty"));
        }
        if let Some((nline, n)) = fields.get("n") {
            let n: usize = n.parse().map_err(|_| parse_error(*nline, "`n` must be a positive integer"))?;
            if n != rates.len() {
                return Err(parse_error(*nline, format!("n = {n} but {} lambdas given", rates.len())));
            }
        }
        return Ok(ModelSpec { name, model: OUModel::diagonal(&rates)? });
    }
    let (nline, n) = fields.get("n").ok_or_else(|| parse_error(0, "missing `n`"))?;
    let n: usize = n.parse().ok().filter(|&n| n > 0).ok_or_else(|| parse_error(*nline, "`n` must be a positive integer"))?;
    let (qline, q) = fields.get("Q").ok_or_else(|| parse_error(0, "missing `Q`"))?;
    let (bline, b) = fields.get("B").ok_or_else(|| parse_error(0, "missing `B`"))?;
    let diffusion = square(&parse_numbers(q, *qline)?, n, "Q", *qline)?;
    let drift = square(&parse_numbers(b, *bline)?, n, "B", *bline)?;
    Ok(ModelSpec { name, model: OUModel::new(diffusion, drift)? })
}

fn row_major(m: &DMatrix<f64>) -> String {
    let mut parts = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            parts.push(format!("{:?}", m[(i, j)]));
        }
    }
    parts.join(" ")
}

/// Writes a model in the format read by [`parse_model`]. Numbers use the
/// shortest representation that round-trips.
pub fn emit_model(spec: &ModelSpec) -> String {
    let mut out = String::new();
    if let Some(name) = &spec.name {
        out.push_str(&format!("name = {name}\n"));
    }
    out.push_str(&format!("n = {}\n", spec.model.dim()));
    out.push_str(&format!("Q = {}\n", row_major(spec.model.diffusion())));
    out.push_str(&format!("B = {}\n", row_major(spec.model.drift())));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_shorthand() {
        let spec = parse_model("# two rates\nlambdas = 1, 2\n").unwrap();
        assert_eq!(spec.model.diagonal_rates().unwrap().rates(), &[1.0, 2.0]);
    }

    #[test]
    fn matrices_may_span_lines() {
        let spec = parse_model("n = 2\nQ = 1 0\n    0 1\nB = -1 3\n    -3 -1\n").unwrap();
        assert_eq!(spec.model.drift()[(1, 0)], -3.0);
    }

    #[test]
    fn roundtrip_is_exact() {
        let text = "name = skew\nn = 2\nQ = 2 0.5 0.5 1\nB = -1.25 0.3 -0.7 -2\n";
        let spec = parse_model(text).unwrap();
        let again = parse_model(&emit_model(&spec)).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn structural_errors_carry_lines() {
        assert!(matches!(parse_model("n = 2\nQ = 1 0 0\nB = -1 0 0 -1"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_model("n = 1\nfoo = 3"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_model("1 2 3"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_model("lambdas = 1 x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_model("n = 1\nQ = 1\nB = 1"), Err(Error::NotHurwitz { .. })));
    }
}

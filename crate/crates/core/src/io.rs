//! Plain-text formats.
//!
//! ```text
//! # comment
//! tensor <m> <n>
//! <i1> ... <im> <value>      (1-based indices; unspecified slots are zero)
//! ```
//!
//! Several `tensor` blocks may follow one another (a decomposition is written
//! as `B⁺` then `C`). A scaling vector is `scaling <n>` followed by one line
//! of `n` values.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::transform::ScalingVector;

/// Shortest decimal that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn format_list(values: &[f64]) -> String {
    values.iter().map(|v| format_real(*v)).collect::<Vec<_>>().join(",")
}

/// Renders a tensor block listing its nonzero entries in offset order.
pub fn write_tensor(t: &Tensor) -> String {
    let mut out = format!("tensor {} {}\n", t.order(), t.dim());
    for (idx, v) in t.nonzeros() {
        for i in idx {
            write!(out, "{} ", i + 1).unwrap();
        }
        out.push_str(&format_real(v));
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Block {
    order: usize,
    dim: usize,
    header_line: usize,
    entries: Vec<(Vec<usize>, f64, usize)>,
}

impl Block {
    fn finish(self) -> Result<Tensor> {
        let mut t = Tensor::zeros(self.order, self.dim).map_err(|e| parse_err(self.header_line, e.to_string()))?;
        let mut seen = vec![false; t.values().len()];
        for (idx, v, line) in self.entries {
            let offset = t.offset(&idx).map_err(|e| parse_err(line, e.to_string()))?;
            if seen[offset] {
                return Err(parse_err(
                    line,
                    format!("duplicate entry {}", crate::error::one_based(&idx)),
                ));
            }
            seen[offset] = true;
            t.set(&idx, v).map_err(|e| parse_err(line, e.to_string()))?;
        }
        Ok(t)
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Parses every tensor block in `text`.
pub fn parse_tensors(text: &str) -> Result<Vec<Tensor>> {
    let mut blocks: Vec<Block> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks[0] == "tensor" {
            if toks.len() != 3 {
                return Err(parse_err(line, "expected `tensor <order> <dim>`"));
            }
            blocks.push(Block {
                order: parse_usize(toks[1], line, "order")?,
                dim: parse_usize(toks[2], line, "dimension")?,
                header_line: line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            return Err(parse_err(line, "entry before `tensor` header"));
        };
        if toks.len() != block.order + 1 {
            return Err(parse_err(
                line,
                format!("expected {} indices and a value, got {} fields", block.order, toks.len()),
            ));
        }
        let mut idx = Vec::with_capacity(block.order);
        for tok in &toks[..block.order] {
            let i = parse_usize(tok, line, "index")?;
            if i == 0 || i > block.dim {
                return Err(parse_err(
                    line,
                    format!("index {i} out of range 1..={}", block.dim),
                ));
            }
            idx.push(i - 1);
        }
        let v = parse_real(toks[block.order], line)?;
        block.entries.push((idx, v, line));
    }
    if blocks.is_empty() {
        return Err(parse_err(1, "no `tensor` header found"));
    }
    blocks.into_iter().map(Block::finish).collect()
}

/// Parses a file holding exactly one tensor block.
pub fn parse_tensor(text: &str) -> Result<Tensor> {
    let mut all = parse_tensors(text)?;
    if all.len() != 1 {
        return Err(parse_err(1, format!("expected one tensor block, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// Parses `1,-2,0.5` or whitespace-separated values.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        for tok in content.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            out.push(parse_real(tok, k + 1)?);
        }
    }
    if out.is_empty() {
        return Err(parse_err(1, "empty vector"));
    }
    Ok(out)
}

pub fn write_scaling(w: &ScalingVector) -> String {
    let vals: Vec<String> = w.iter().map(|v| format_real(*v)).collect();
    format!("scaling {}\n{}\n", w.dim(), vals.join(" "))
}

pub fn parse_scaling(text: &str) -> Result<ScalingVector> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing `scaling` header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 || toks[0] != "scaling" {
        return Err(parse_err(hl + 1, "expected `scaling <n>`"));
    }
    let n = parse_usize(toks[1], hl + 1, "dimension")?;
    let (vl, body) = lines.next().ok_or_else(|| parse_err(hl + 2, "missing scaling values"))?;
    let values = body
        .split_whitespace()
        .map(|t| parse_real(t, vl + 1))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        return Err(parse_err(vl + 1, format!("expected {n} values, got {}", values.len())));
    }
    ScalingVector::new(values).map_err(|e| parse_err(vl + 1, e.to_string()))
}

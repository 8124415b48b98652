//! Flat `key=value` reports, one key per line. Booleans print as
//! `true`/`false`, arrays comma-separated, indices 1-based.

use std::fmt::Write as _;

use crate::classify::{ClassReport, PWitness, SpectralEstimate};
use crate::io::{format_list, format_real};
use crate::tcp::TcpSolution;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    lines: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn real(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, format_real(value))
    }

    pub fn reals(&mut self, key: &str, values: &[f64]) -> &mut Self {
        self.push(key, format_list(values))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn extend(&mut self, other: KeyValues) -> &mut Self {
        self.lines.extend(other.lines);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }
}

fn bools(values: &[bool]) -> String {
    values.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
}

fn index_tuple(idx: &[usize]) -> String {
    idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn opt_row(row: Option<usize>) -> String {
    row.map_or_else(|| "none".to_string(), |r| (r + 1).to_string())
}

impl ClassReport {
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("order", self.order)
            .push("dim", self.dim)
            .push("is_z", self.is_z)
            .push("is_dd", self.is_dd)
            .push("is_sdd", self.is_sdd)
            .push("is_nekrasov", self.is_nekrasov)
            .push("is_nekrasov_z", self.is_nekrasov_z)
            .push("positive_diagonal", self.positive_diagonal)
            .push("even_order", self.even_order)
            .push("predicted_p", self.predicted_p)
            .push(
                "z_witness",
                self.z_witness.as_deref().map_or_else(|| "none".to_string(), index_tuple),
            )
            .push("dd_witness", opt_row(self.dd_witness))
            .push("sdd_witness", opt_row(self.sdd_witness))
            .push("nekrasov_witness", opt_row(self.nekrasov_witness))
            .push("reason", self.reason.as_deref().unwrap_or("none"))
            .reals("row_excess", &self.row_excess);
        match &self.profile {
            Some(p) => {
                kv.reals("lambda", &p.lambda)
                    .reals("diag", &p.diag)
                    .push("per_row_strict", bools(&p.per_row_strict));
            }
            None => {
                kv.push("lambda", "none").push("diag", "none").push("per_row_strict", "none");
            }
        }
        kv
    }
}

impl SpectralEstimate {
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.real("value", self.value)
            .real("lower", self.lower)
            .real("upper", self.upper)
            .push("iterations", self.iterations)
            .push("converged", self.converged)
            .reals("eigenvector", &self.eigenvector);
        kv
    }
}

impl TcpSolution {
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.reals("x", &self.x)
            .reals("w", &self.w)
            .real("residual", self.residual)
            .real("complementarity_gap", self.complementarity_gap)
            .push("iterations", self.iterations)
            .push("status", self.status.as_str());
        kv
    }
}

/// `p_witness=...` line(s) for a falsifier outcome over `samples` draws.
pub fn p_search(witness: Option<&PWitness>, samples: usize) -> KeyValues {
    let mut kv = KeyValues::new();
    match witness {
        Some(w) => {
            kv.push("p_counterexample", "found")
                .reals("p_witness_x", &w.x)
                .reals("p_witness_products", &w.products);
        }
        None => {
            kv.push("p_counterexample", format!("none in {samples} samples"));
        }
    }
    kv
}

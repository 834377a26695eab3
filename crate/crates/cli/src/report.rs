//! Report records and their serialization.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

/// One measured identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub family: &'static str,
    pub name: String,
    /// The identity being measured, as a formula.
    pub anchor: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    /// `measured ≤ tolerance`, or `≥` for lower bounds.
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

impl Check {
    pub fn upper(
        family: &'static str,
        name: impl Into<String>,
        anchor: &'static str,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            family,
            name: name.into(),
            anchor,
            measured,
            tolerance,
            bound: Bound::Upper,
            pass: measured <= tolerance,
        }
    }

    pub fn lower(
        family: &'static str,
        name: impl Into<String>,
        anchor: &'static str,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            family,
            name: name.into(),
            anchor,
            measured,
            tolerance,
            bound: Bound::Lower,
            pass: measured >= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn push(&mut self, c: Check) {
        self.0.push(c);
    }

    pub fn all_pass(&self) -> bool {
        self.0.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.0.iter().filter(|c| !c.pass).collect()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.0.iter().find(|c| c.name == name)
    }
}

/// Pretty JSON with a trailing newline; key order follows field order.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> std::io::Result<()> {
    std::fs::write(path, to_json(value))
}

/// Rows of `x,y,re,im`.
pub fn write_csv(path: &Path, rows: impl Iterator<Item = [f64; 4]>) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,re,im")?;
    for [x, y, re, im] in rows {
        writeln!(out, "{x},{y},{re},{im}")?;
    }
    out.flush()
}

//! Tabular results with stable CSV and JSON renderings.
//!
//! CSV prints numbers with 17 significant digits so values round-trip
//! exactly; the JSON payload carries the same numbers, so the two formats
//! are interconvertible without loss.

use serde::Serialize;

/// How a value in a row was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Series,
    Quadrature,
    MonteCarlo,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::ClosedForm => write!(f, "closed_form"),
            Provenance::Series => write!(f, "series"),
            Provenance::Quadrature => write!(f, "quadrature"),
            Provenance::MonteCarlo => write!(f, "montecarlo"),
        }
    }
}

/// One labelled result with echoed inputs and an error estimate
/// (0 for exact closed forms).
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub label: String,
    pub inputs: Vec<(String, String)>,
    pub values: Vec<(String, f64)>,
    pub provenance: Provenance,
    pub error_estimate: f64,
}

impl ResultRow {
    pub fn new(label: impl Into<String>, provenance: Provenance) -> Self {
        ResultRow {
            label: label.into(),
            inputs: Vec::new(),
            values: Vec::new(),
            provenance,
            error_estimate: 0.0,
        }
    }

    pub fn input(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.inputs.push((key.into(), value.to_string()));
        self
    }

    pub fn value(mut self, name: impl Into<String>, v: f64) -> Self {
        self.values.push((name.into(), v));
        self
    }

    pub fn error(mut self, err: f64) -> Self {
        self.error_estimate = err;
        self
    }

    /// First value with the given name.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

/// An ordered collection of rows; the unit of CLI output.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    pub rows: Vec<ResultRow>,
}

impl Table {
    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn find(&self, label: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Stable CSV: one line per (row, value) pair, 17-significant-digit
    /// numbers, `;`-joined `key=value` input echo.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,inputs,name,value,provenance,error_estimate\n");
        for row in &self.rows {
            let inputs = row
                .inputs
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            for (name, v) in &row.values {
                out.push_str(&format!(
                    "{},{},{},{:.16e},{},{:.16e}\n",
                    row.label, inputs, name, v, row.provenance, row.error_estimate
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }

    /// Render in the requested format.
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

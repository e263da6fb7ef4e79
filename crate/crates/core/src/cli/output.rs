//! CSV and JSON result writers.
//!
//! CSV: UTF-8, `,` delimiter, a `#` header block with the run description,
//! one column-name row, then data rows. Probabilities use 17 significant
//! digits so every value round-trips exactly; missing values are empty cells.

use serde::Serialize;
use serde_json::{json, Value};

use super::RunSpec;

pub const SER_COLUMNS: &[&str] = &[
    "ebn0_db",
    "method",
    "alpha",
    "p_e",
    "se",
    "var_bound",
    "p_bar_mean",
    "wall_time_s",
    "warning",
];
pub const COMPARE_COLUMNS: &[&str] = &[
    "ebn0_db",
    "method",
    "alpha",
    "rrmse",
    "p_ref",
    "ref_source",
    "mean_estimate",
    "rrmse_mc_analytic",
];
pub const CELL_COLUMNS: &[&str] = &[
    "facet", "gamma_x", "gamma_y", "beta", "tau", "p_k", "alpha_k",
];
pub const SAMPLE_COLUMNS: &[&str] = &["x", "y", "component", "count"];

/// A table cell.
#[derive(Debug, Clone)]
pub enum Field {
    Prob(f64),
    Plain(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Field {
    pub fn opt_prob(v: Option<f64>) -> Field {
        v.map_or(Field::Missing, Field::Prob)
    }

    pub fn opt_plain(v: Option<f64>) -> Field {
        v.map_or(Field::Missing, Field::Plain)
    }

    fn csv(&self) -> String {
        match self {
            Field::Prob(v) => format_prob(*v),
            Field::Plain(v) => format!("{v}"),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Prob(v) | Field::Plain(v) => {
                serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number)
            }
            Field::Int(v) => json!(v),
            Field::Text(s) => json!(s),
            Field::Missing => Value::Null,
        }
    }
}

pub fn format_prob(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: &'static [&'static str],
    /// Extra `# key: value` lines after the run description.
    pub notes: Vec<(String, String)>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    run: &'a RunSpec,
}

fn header(spec: &RunSpec) -> Header<'_> {
    Header {
        tool: "aloe-ser",
        version: env!("CARGO_PKG_VERSION"),
        run: spec,
    }
}

pub fn render_csv(spec: &RunSpec, table: &Table) -> String {
    let mut out = String::new();
    let h = header(spec);
    out.push_str(&format!("# {} {}\n", h.tool, h.version));
    out.push_str(&format!(
        "# run: {}\n",
        serde_json::to_string(spec).expect("run spec serializes")
    ));
    for (k, v) in &table.notes {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Field::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(spec: &RunSpec, table: &Table) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, f)| (c.to_string(), f.json()))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let notes: serde_json::Map<String, Value> = table
        .notes
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    let doc = json!({
        "header": header(spec),
        "notes": notes,
        "columns": table.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json document serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            4.499_826_953_926_988_5e-2,
            1e-300,
            5e-324,
            0.0,
        ] {
            let s = format_prob(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_prob(0.5), "5.0000000000000000e-1");
        assert_eq!(format_prob(f64::NAN), "NaN");
    }
}

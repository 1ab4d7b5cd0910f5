//! CSV ingestion: header-checked tables, schema inference, and assembly
//! of a [`Design`] plus covariate columns from a model formula.
//!
//! Factor levels are ordered lexicographically on their labels so that
//! cell indexing is deterministic; declared-but-unobserved levels simply
//! produce empty cells. Missing values are not handled: any empty field is
//! an error, since silently dropping rows would change the cell counts.

use std::collections::BTreeSet;
use std::path::Path;

use crate::design::{Covariates, Design, FactorSpace};
use crate::error::{Error, Result};
use crate::formula::{parse_raw, ColumnKind, ColumnSchema, Formula, RawFormula};
use crate::linalg::Col;

/// A CSV file read into string columns.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn column(&self, name: &str) -> Option<&Vec<String>> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| &self.columns[i])
    }
}

/// Read a CSV file (RFC-4180 quoting, UTF-8, header row required).
pub fn read_table(path: impl AsRef<Path>) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.clone()) {
            return Err(Error::input(format!("duplicate header name {h}")));
        }
    }
    let mut columns: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        for (col, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::input(format!(
                    "empty field in column {} at data row {}",
                    headers[col],
                    row_idx + 1
                )));
            }
            columns[col].push(field.to_string());
        }
    }
    if columns.first().map_or(0, |c| c.len()) == 0 {
        return Err(Error::input("csv file has no data rows"));
    }
    Ok(RawTable { headers, columns })
}

/// Caller-supplied overrides for schema inference.
#[derive(Debug, Clone, Default)]
pub struct SchemaOverrides {
    pub factors: Vec<String>,
    pub covariates: Vec<String>,
}

/// Decide the role of every column the formula mentions. Without an
/// override, a column whose values all parse as numbers is a covariate and
/// anything else is a factor; the response must be numeric.
pub fn infer_schema(
    table: &RawTable,
    raw: &RawFormula,
    overrides: &SchemaOverrides,
) -> Result<Vec<ColumnSchema>> {
    for name in overrides.factors.iter().chain(&overrides.covariates) {
        if table.column(name).is_none() {
            return Err(Error::input(format!(
                "override names unknown column {name}"
            )));
        }
        if overrides.factors.contains(name) && overrides.covariates.contains(name) {
            return Err(Error::input(format!(
                "column {name} declared both factor and covariate"
            )));
        }
    }

    let mut schema = Vec::new();
    let response_col = table
        .column(&raw.response)
        .ok_or_else(|| Error::input(format!("missing column {}", raw.response)))?;
    if !all_numeric(response_col) {
        return Err(Error::input(format!(
            "response column {} must be numeric",
            raw.response
        )));
    }
    schema.push(ColumnSchema::response(&raw.response));

    for name in raw.rhs_idents() {
        let col = table
            .column(&name)
            .ok_or_else(|| Error::input(format!("missing column {name}")))?;
        let kind = if overrides.factors.contains(&name) {
            ColumnKind::Factor
        } else if overrides.covariates.contains(&name) {
            if !all_numeric(col) {
                return Err(Error::input(format!(
                    "covariate column {name} has non-numeric values"
                )));
            }
            ColumnKind::Covariate
        } else if all_numeric(col) {
            ColumnKind::Covariate
        } else {
            ColumnKind::Factor
        };
        schema.push(ColumnSchema {
            name,
            kind,
            levels: None,
        });
    }
    Ok(schema)
}

fn all_numeric(col: &[String]) -> bool {
    col.iter().all(|v| v.trim().parse::<f64>().is_ok())
}

fn parse_numeric(col: &[String], name: &str) -> Result<Vec<f64>> {
    col.iter()
        .map(|v| {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("non-numeric value {v} in column {name}")))?;
            if !x.is_finite() {
                return Err(Error::input(format!(
                    "non-finite value {v} in column {name}"
                )));
            }
            Ok(x)
        })
        .collect()
}

/// A dataset ready for the engine: the design, the response, covariate
/// columns, and the labels needed to render cell-level output.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub design: Design,
    pub y: Col,
    pub covariates: Covariates,
    pub factor_names: Vec<String>,
    pub factor_levels: Vec<Vec<String>>,
    pub response_name: String,
}

impl Dataset {
    /// Human-readable label of one cell, like `A=a1,B=b2`.
    pub fn cell_label(&self, cell: usize) -> String {
        let combo = self.design.space().cell_levels(cell);
        combo
            .iter()
            .enumerate()
            .map(|(k, &l)| format!("{}={}", self.factor_names[k], self.factor_levels[k][l]))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn cell_labels(&self) -> Vec<String> {
        (0..self.design.space().a_star())
            .map(|c| self.cell_label(c))
            .collect()
    }
}

/// Assemble a dataset from a table and a resolved formula. Factors keep
/// the order of first mention in the formula; levels are sorted label
/// order, with declared levels honored (and unobserved ones left empty).
pub fn build_dataset(
    table: &RawTable,
    formula: &Formula,
    schema: &[ColumnSchema],
) -> Result<Dataset> {
    let n = table.n_rows();

    let mut factor_names: Vec<String> = Vec::new();
    let mut covariate_names: Vec<String> = Vec::new();
    for col in schema {
        match col.kind {
            ColumnKind::Factor => factor_names.push(col.name.clone()),
            ColumnKind::Covariate => covariate_names.push(col.name.clone()),
            ColumnKind::Response => {}
        }
    }
    if factor_names.is_empty() {
        return Err(Error::input("the model must reference at least one factor"));
    }

    let mut factor_levels: Vec<Vec<String>> = Vec::new();
    let mut level_counts = Vec::new();
    for name in &factor_names {
        let col = table
            .column(name)
            .ok_or_else(|| Error::input(format!("missing column {name}")))?;
        let declared = schema
            .iter()
            .find(|c| &c.name == name)
            .and_then(|c| c.levels.clone());
        let levels = match declared {
            Some(levels) => {
                let set: BTreeSet<&String> = levels.iter().collect();
                if let Some(bad) = col.iter().find(|v| !set.contains(v)) {
                    return Err(Error::input(format!(
                        "value {bad} in column {name} is not among its declared levels"
                    )));
                }
                let mut sorted = levels.clone();
                sorted.sort();
                sorted
            }
            None => {
                let set: BTreeSet<String> = col.iter().cloned().collect();
                set.into_iter().collect()
            }
        };
        if levels.len() < 2 {
            return Err(Error::input(format!(
                "factor {name} needs at least 2 levels, found {}",
                levels.len()
            )));
        }
        level_counts.push(levels.len());
        factor_levels.push(levels);
    }

    let space = FactorSpace::new(level_counts)?;
    let mut row_cells = Vec::with_capacity(n);
    for r in 0..n {
        let mut combo = Vec::with_capacity(factor_names.len());
        for (k, name) in factor_names.iter().enumerate() {
            let value = &table.column(name).expect("checked above")[r];
            let level = factor_levels[k]
                .iter()
                .position(|l| l == value)
                .expect("level membership checked above");
            combo.push(level);
        }
        row_cells.push(space.cell_index(&combo)?);
    }
    let design = Design::new(space, row_cells)?;

    let y_raw = table
        .column(&formula.response)
        .ok_or_else(|| Error::input(format!("missing column {}", formula.response)))?;
    let y = Col::from_vec(parse_numeric(y_raw, &formula.response)?);

    let mut covariates = Covariates::new();
    for name in &covariate_names {
        let col = table
            .column(name)
            .ok_or_else(|| Error::input(format!("missing column {name}")))?;
        covariates.insert(name.clone(), parse_numeric(col, name)?);
    }

    Ok(Dataset {
        design,
        y,
        covariates,
        factor_names,
        factor_levels,
        response_name: formula.response.clone(),
    })
}

/// One-call loader: parse the formula, infer the schema from the file,
/// and build the dataset. Returns the resolved formula alongside.
pub fn load_csv(
    path: impl AsRef<Path>,
    formula_text: &str,
    overrides: &SchemaOverrides,
) -> Result<(Dataset, Formula)> {
    let table = read_table(path)?;
    let raw = parse_raw(formula_text)?;
    let schema = infer_schema(&table, &raw, overrides)?;
    let formula = crate::formula::parse_formula(formula_text, &schema)?;
    let dataset = build_dataset(&table, &formula, &schema)?;
    Ok((dataset, formula))
}

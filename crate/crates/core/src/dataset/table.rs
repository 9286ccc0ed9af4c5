use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use super::schema::{self, ID_COLUMN, SOLVENT_COLUMNS};
use super::DatasetError;

/// Column-major numeric table with an optional identifier column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    ids: Option<Vec<String>>,
    n_rows: usize,
}

impl DataTable {
    pub fn new(n_rows: usize) -> Self {
        DataTable {
            n_rows,
            ..Default::default()
        }
    }

    pub fn from_columns<S: Into<String>>(
        columns: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, DatasetError> {
        let mut iter = columns.into_iter().peekable();
        let n_rows = iter.peek().map(|(_, c)| c.len()).unwrap_or(0);
        let mut t = DataTable::new(n_rows);
        for (name, col) in iter {
            t.add_column(name, col)?;
        }
        Ok(t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn set_ids(&mut self, ids: Vec<String>) -> Result<(), DatasetError> {
        if ids.len() != self.n_rows {
            return Err(DatasetError::Shape(format!(
                "identifier column has {} rows, table has {}",
                ids.len(),
                self.n_rows
            )));
        }
        self.ids = Some(ids);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64], DatasetError> {
        self.column(name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), DatasetError> {
        let name = name.into();
        if self.column_index(&name).is_some() {
            return Err(DatasetError::DuplicateColumn(name));
        }
        if self.names.is_empty() && self.ids.is_none() && self.n_rows == 0 {
            self.n_rows = values.len();
        }
        if values.len() != self.n_rows {
            return Err(DatasetError::Shape(format!(
                "column `{name}` has {} rows, table has {}",
                values.len(),
                self.n_rows
            )));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    /// Adds or overwrites a column.
    pub fn set_column(
        &mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), DatasetError> {
        let name = name.into();
        match self.column_index(&name) {
            Some(i) if values.len() == self.n_rows => {
                self.columns[i] = values;
                Ok(())
            }
            Some(_) => Err(DatasetError::Shape(format!(
                "column `{name}` has the wrong length"
            ))),
            None => self.add_column(name, values),
        }
    }

    pub fn remove_column(&mut self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        self.names.remove(i);
        Some(self.columns.remove(i))
    }

    /// Values of `names` at `row`, in the given order.
    pub fn row_values(&self, row: usize, names: &[&str]) -> Result<Vec<f64>, DatasetError> {
        names
            .iter()
            .map(|n| self.require(n).map(|c| c[row]))
            .collect()
    }

    /// Row `i` over all columns, in column order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Subset of rows, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            ids: self
                .ids
                .as_ref()
                .map(|ids| rows.iter().map(|&r| ids[r].clone()).collect()),
            n_rows: rows.len(),
        }
    }

    /// Writes the table as CSV (header row, LF line endings, shortest
    /// round-trip decimal formatting). The identifier column, if present,
    /// comes first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header: Vec<&str> = Vec::with_capacity(self.n_cols() + 1);
        if self.ids.is_some() {
            header.push(ID_COLUMN);
        }
        header.extend(self.names.iter().map(String::as_str));
        w.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for r in 0..self.n_rows {
            record.clear();
            if let Some(ids) = &self.ids {
                record.push(ids[r].clone());
            }
            record.extend(self.columns.iter().map(|c| format!("{}", c[r])));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Reads an arbitrary numeric CSV. A column named `compound` is kept as
    /// identifiers; every other cell must parse as a number.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, DatasetError> {
        let raw = RawCsv::read(input)?;
        let mut t = DataTable::new(raw.rows.len());
        for (j, name) in raw.header.iter().enumerate() {
            if name == ID_COLUMN {
                t.set_ids(raw.rows.iter().map(|r| r[j].clone()).collect())?;
                continue;
            }
            let col = raw.numeric_column(j, name)?;
            t.add_column(name.clone(), col)?;
        }
        Ok(t)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let f =
            std::fs::File::open(path.as_ref()).map_err(|e| DatasetError::io(path.as_ref(), e))?;
        Self::read_csv(f)
    }
}

struct RawCsv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RawCsv {
    fn read<R: Read>(input: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let header: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(DatasetError::RaggedRow {
                    row: i + 1,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
        }
        Ok(RawCsv { header, rows })
    }

    fn numeric_column(&self, j: usize, name: &str) -> Result<Vec<f64>, DatasetError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = &r[j];
                if cell.is_empty() {
                    return Err(DatasetError::MissingValue {
                        row: i + 1,
                        column: name.to_string(),
                    });
                }
                cell.parse::<f64>().map_err(|_| DatasetError::NonNumeric {
                    row: i + 1,
                    column: name.to_string(),
                    value: cell.clone(),
                })
            })
            .collect()
    }
}

/// Summary of a validated TLC table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub rows: usize,
    pub distinct_compounds: Option<usize>,
    /// Rows whose solvent fractions do not sum to 1 within 1e-6 (1-based).
    pub solvent_sum_warnings: Vec<usize>,
}

/// Tolerance on the per-row solvent fraction sum.
pub const SOLVENT_SUM_TOLERANCE: f64 = 1e-6;

/// Reads and validates a TLC feature table. The header must name exactly
/// the 24 feature columns and `Rf` (aliases accepted, any order), plus an
/// optional `compound` column. Columns are stored in canonical order.
pub fn read_tlc<R: Read>(input: R) -> Result<(DataTable, LoadReport), DatasetError> {
    let raw = RawCsv::read(input)?;
    let canonical: Vec<String> = raw
        .header
        .iter()
        .map(|h| schema::canonical_name(h).to_string())
        .collect();

    let mut seen = BTreeSet::new();
    for name in &canonical {
        if !seen.insert(name.as_str()) {
            return Err(DatasetError::DuplicateColumn(name.clone()));
        }
        if name != ID_COLUMN && schema::column_kind(name).is_none() {
            return Err(DatasetError::UnknownColumn(name.clone()));
        }
    }
    for required in schema::schema_columns() {
        if !seen.contains(required) {
            return Err(DatasetError::MissingColumn(required.to_string()));
        }
    }

    let mut table = DataTable::new(raw.rows.len());
    for name in schema::schema_columns() {
        let j = canonical
            .iter()
            .position(|c| c == name)
            .expect("checked above");
        let col = raw.numeric_column(j, name)?;
        let kind = schema::column_kind(name).expect("schema column");
        for (i, &v) in col.iter().enumerate() {
            kind.check(v).map_err(|reason| DatasetError::OutOfRange {
                row: i + 1,
                column: name.to_string(),
                value: v,
                reason,
            })?;
        }
        table.add_column(name, col)?;
    }
    let mut distinct = None;
    if let Some(j) = canonical.iter().position(|c| c == ID_COLUMN) {
        let ids: Vec<String> = raw.rows.iter().map(|r| r[j].clone()).collect();
        distinct = Some(ids.iter().collect::<BTreeSet<_>>().len());
        table.set_ids(ids)?;
    }

    let mut warnings = Vec::new();
    for i in 0..table.n_rows() {
        let sum: f64 = SOLVENT_COLUMNS
            .iter()
            .map(|c| table.column(c).expect("present")[i])
            .sum();
        if (sum - 1.0).abs() > SOLVENT_SUM_TOLERANCE {
            warnings.push(i + 1);
        }
    }
    if !warnings.is_empty() {
        log::warn!(
            "{} row(s) have solvent fractions not summing to 1 (first: row {})",
            warnings.len(),
            warnings[0]
        );
    }
    let report = LoadReport {
        rows: table.n_rows(),
        distinct_compounds: distinct,
        solvent_sum_warnings: warnings,
    };
    Ok((table, report))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<(DataTable, LoadReport), DatasetError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
    read_tlc(f)
}

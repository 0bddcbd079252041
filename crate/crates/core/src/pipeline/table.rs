use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Continuous(_) => ColumnKind::Continuous,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Continuous(values),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values.into_iter().map(Into::into).collect()),
        }
    }
}

/// `T` rows of named feature columns with optional labels and timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    pub columns: Vec<Column>,
    pub labels: Option<Vec<u8>>,
    pub timestamps: Option<Vec<String>>,
}

impl TimeSeriesTable {
    pub fn new(columns: Vec<Column>, labels: Option<Vec<u8>>, timestamps: Option<Vec<String>>) -> Result<Self> {
        let rows = columns
            .first()
            .map(|c| c.data.len())
            .or(labels.as_ref().map(Vec::len))
            .unwrap_or(0);
        for c in &columns {
            if c.data.len() != rows {
                return Err(Error::Data(format!(
                    "column '{}' has {} rows, expected {rows}",
                    c.name,
                    c.data.len()
                )));
            }
        }
        if labels.as_ref().is_some_and(|l| l.len() != rows || l.iter().any(|&v| v > 1)) {
            return Err(Error::Data("labels must be 0/1, one per row".into()));
        }
        if timestamps.as_ref().is_some_and(|t| t.len() != rows) {
            return Err(Error::Data("timestamps must have one entry per row".into()));
        }
        Ok(Self {
            columns,
            labels,
            timestamps,
        })
    }

    pub fn rows(&self) -> usize {
        self.columns
            .first()
            .map(|c| c.data.len())
            .or(self.labels.as_ref().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

/// Optional sidecar: `{"columns": {"<name>": "continuous"|"categorical"},
/// "units": {"<name>": "<unit>"}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default)]
    pub columns: HashMap<String, ColumnKind>,
    #[serde(default)]
    pub units: HashMap<String, String>,
}

impl Schema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn read_csv(path: &Path, schema: Option<&Schema>) -> Result<TimeSeriesTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, schema)
}

/// Parses a headed CSV. `timestamp` and `label` columns are recognised by
/// name; other columns are continuous when every value parses as a finite
/// number, unless the schema says otherwise. Missing values are rejected.
pub fn parse_csv<R: Read>(reader: R, schema: Option<&Schema>) -> Result<TimeSeriesTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut seen = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if seen.insert(h.as_str(), i).is_some() {
            return Err(Error::Data(format!("duplicate column '{h}'")));
        }
    }
    if let Some(schema) = schema {
        if let Some(missing) = schema.columns.keys().find(|k| !seen.contains_key(k.as_str())) {
            return Err(Error::Data(format!("schema names unknown column '{missing}'")));
        }
    }

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = r + 2;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: line,
                column: String::new(),
                message: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::Parse {
                    row: line,
                    column: headers[c].clone(),
                    message: "missing value".into(),
                });
            }
            raw[c].push(field.to_owned());
        }
    }

    let mut columns = Vec::new();
    let mut labels = None;
    let mut timestamps = None;
    for (name, values) in headers.into_iter().zip(raw) {
        match name.as_str() {
            "label" => labels = Some(parse_labels(&values)?),
            "timestamp" => timestamps = Some(values),
            _ => {
                let declared = schema.and_then(|s| s.columns.get(&name)).copied();
                columns.push(parse_column(name, values, declared)?);
            }
        }
    }
    TimeSeriesTable::new(columns, labels, timestamps)
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_column(name: String, values: Vec<String>, declared: Option<ColumnKind>) -> Result<Column> {
    let kind = declared.unwrap_or_else(|| {
        if values.iter().all(|v| parse_number(v).is_some()) {
            ColumnKind::Continuous
        } else {
            ColumnKind::Categorical
        }
    });
    match kind {
        ColumnKind::Categorical => Ok(Column::categorical(name, values)),
        ColumnKind::Continuous => {
            let mut parsed = Vec::with_capacity(values.len());
            for (r, v) in values.iter().enumerate() {
                parsed.push(parse_number(v).ok_or_else(|| Error::Parse {
                    row: r + 2,
                    column: name.clone(),
                    message: format!("'{v}' is not a finite number"),
                })?);
            }
            Ok(Column::continuous(name, parsed))
        }
    }
}

fn parse_labels(values: &[String]) -> Result<Vec<u8>> {
    values
        .iter()
        .enumerate()
        .map(|(r, v)| match parse_number(v) {
            Some(0.0) => Ok(0),
            Some(1.0) => Ok(1),
            _ => Err(Error::Parse {
                row: r + 2,
                column: "label".into(),
                message: format!("label '{v}' is not 0 or 1"),
            }),
        })
        .collect()
}

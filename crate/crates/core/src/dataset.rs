//! Labeled instances, CSV persistence and background sampling.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ColumnKind, FEATURE_COLUMNS, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Ponzi scheme.
    #[serde(rename = "P")]
    P,
    /// Anything else.
    #[serde(rename = "nP")]
    NP,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::P => "P",
            Label::NP => "nP",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" => Ok(Label::P),
            "nP" => Ok(Label::NP),
            other => Err(format!("label must be P or nP, got {:?}", other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub integer: bool,
}

/// Versioned, ordered list of feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub version: String,
    pub columns: Vec<Column>,
}

impl Schema {
    /// The cluster feature schema.
    pub fn v1() -> Self {
        Schema {
            version: SCHEMA_VERSION.to_string(),
            columns: FEATURE_COLUMNS
                .iter()
                .map(|(name, kind)| Column {
                    name: name.to_string(),
                    integer: *kind == ColumnKind::Integer,
                })
                .collect(),
        }
    }

    /// An ad-hoc schema of real-valued columns.
    pub fn real(version: &str, names: &[&str]) -> Self {
        Schema {
            version: version.to_string(),
            columns: names
                .iter()
                .map(|n| Column {
                    name: n.to_string(),
                    integer: false,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("instance {id} has {got} values, schema has {expected} columns")]
    Arity { id: String, got: usize, expected: usize },
    #[error("label given for unknown cluster {0}")]
    UnknownCluster(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("requested {requested} background clusters but only {available} are available")]
    SampleTooLarge { requested: usize, available: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub label: Label,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub p: usize,
    pub np: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.p + self.np
    }

    pub fn of(&self, label: Label) -> usize {
        match label {
            Label::P => self.p,
            Label::NP => self.np,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    instances: Vec<Instance>,
    counts: ClassCounts,
}

impl Dataset {
    pub fn new(schema: Schema, instances: Vec<Instance>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(instances.len());
        let mut counts = ClassCounts::default();
        for inst in &instances {
            if inst.values.len() != schema.len() {
                return Err(DatasetError::Arity {
                    id: inst.id.clone(),
                    got: inst.values.len(),
                    expected: schema.len(),
                });
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(DatasetError::DuplicateId(inst.id.clone()));
            }
            match inst.label {
                Label::P => counts.p += 1,
                Label::NP => counts.np += 1,
            }
        }
        Ok(Dataset {
            schema,
            instances,
            counts,
        })
    }

    pub fn empty(schema: Schema) -> Self {
        Dataset {
            schema,
            instances: Vec::new(),
            counts: ClassCounts::default(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn labels(&self) -> Vec<Label> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.instances.iter().map(|i| i.values[feature]).collect()
    }

    /// Indices of instances carrying `label`, in dataset order.
    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        self.instances
            .iter()
            .enumerate()
            .filter(|(_, i)| i.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// The instances at `indices`, in that order. Ids stay unique as long as the indices do.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let instances: Vec<Instance> = indices.iter().map(|&i| self.instances[i].clone()).collect();
        let mut counts = ClassCounts::default();
        for inst in &instances {
            match inst.label {
                Label::P => counts.p += 1,
                Label::NP => counts.np += 1,
            }
        }
        Dataset {
            schema: self.schema.clone(),
            instances,
            counts,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(header(&self.schema, true))?;
        for inst in &self.instances {
            let mut row = vec![String::new(), inst.id.clone(), inst.label.to_string()];
            row.extend(format_values(&self.schema, &inst.values));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, DatasetError> {
        let rows = read_rows(reader, schema, true)?;
        let instances = rows
            .into_iter()
            .map(|r| Instance {
                id: r.id,
                label: r.label.expect("labeled table"),
                values: r.values,
            })
            .collect();
        Dataset::new(schema.clone(), instances)
    }
}

/// Unlabeled feature rows as produced by feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: Schema,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl FeatureTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(header(&self.schema, false))?;
        for (id, values) in &self.rows {
            let mut row = vec![String::new(), id.clone()];
            row.extend(format_values(&self.schema, values));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<FeatureTable, DatasetError> {
        let rows = read_rows(reader, schema, false)?;
        Ok(FeatureTable {
            schema: schema.clone(),
            rows: rows.into_iter().map(|r| (r.id, r.values)).collect(),
        })
    }
}

fn header(schema: &Schema, labeled: bool) -> Vec<String> {
    let mut h = vec![format!("schema={}", schema.version), "id".to_string()];
    if labeled {
        h.push("label".to_string());
    }
    h.extend(schema.names().map(str::to_string));
    h
}

/// Integers print exactly; reals print with 17 significant digits.
pub fn format_value(value: f64, integer: bool) -> String {
    if integer && value.fract() == 0.0 && value.abs() < 9.0e15 {
        format!("{}", value as i64)
    } else {
        format!("{:.16e}", value)
    }
}

fn format_values(schema: &Schema, values: &[f64]) -> Vec<String> {
    schema
        .columns
        .iter()
        .zip(values)
        .map(|(c, &v)| format_value(v, c.integer))
        .collect()
}

struct Row {
    id: String,
    label: Option<Label>,
    values: Vec<f64>,
}

fn read_rows<R: Read>(reader: R, schema: &Schema, labeled: bool) -> Result<Vec<Row>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let found = rdr.headers()?.clone();
    let expected = header(schema, labeled);
    if found.iter().ne(expected.iter().map(String::as_str)) {
        let version = found.get(0).unwrap_or("");
        return Err(DatasetError::SchemaMismatch(if version != expected[0] {
            format!("file declares {:?}, expected {:?}", version, expected[0])
        } else {
            "column layout differs from the declared schema".to_string()
        }));
    }
    let offset = if labeled { 3 } else { 2 };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DatasetError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let label = if labeled {
            Some(rec[2].parse::<Label>().map_err(|message| DatasetError::Malformed { row, message })?)
        } else {
            None
        };
        let mut values = Vec::with_capacity(schema.len());
        for (j, cell) in rec.iter().skip(offset).enumerate() {
            let v: f64 = cell.parse().map_err(|_| DatasetError::Malformed {
                row,
                message: format!("column {} value {:?} is not a number", schema.columns[j].name, cell),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::Malformed {
                    row,
                    message: format!("column {} is not finite", schema.columns[j].name),
                });
            }
            values.push(v);
        }
        rows.push(Row {
            id: rec[1].to_string(),
            label,
            values,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Labels the instances in `positives` as P and every other supplied row as nP.
pub fn assemble(
    schema: Schema,
    rows: Vec<(String, Vec<f64>)>,
    positives: &BTreeSet<String>,
) -> Result<Assembled, DatasetError> {
    let ids: HashSet<&str> = rows.iter().map(|(id, _)| id.as_str()).collect();
    if let Some(unknown) = positives.iter().find(|p| !ids.contains(p.as_str())) {
        return Err(DatasetError::UnknownCluster(unknown.clone()));
    }
    let instances = rows
        .into_iter()
        .map(|(id, values)| Instance {
            label: if positives.contains(&id) { Label::P } else { Label::NP },
            id,
            values,
        })
        .collect();
    let dataset = Dataset::new(schema, instances)?;
    let mut warnings = Vec::new();
    let counts = dataset.counts();
    if counts.p == 0 || counts.np == 0 {
        warnings.push(format!(
            "dataset has {} P and {} nP instances; both classes are needed for training",
            counts.p, counts.np
        ));
    }
    Ok(Assembled { dataset, warnings })
}

/// Reads a `cluster_seed_address,label` file.
pub fn read_labels<R: Read>(reader: R) -> Result<Vec<(String, Label)>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["cluster_seed_address", "label"] {
        return Err(DatasetError::Malformed {
            row: 1,
            message: "label file header must be `cluster_seed_address,label`".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let label = rec[1].parse().map_err(|e: String| DatasetError::Malformed {
            row: i + 2,
            message: e,
        })?;
        out.push((rec[0].to_string(), label));
    }
    Ok(out)
}

/// Uniform sample of `n` cluster indices from `0..population` without
/// replacement, never selecting `exclude`. Returned in ascending order.
pub fn sample_background(
    population: usize,
    n: usize,
    seed: u64,
    exclude: &HashSet<usize>,
) -> Result<Vec<usize>, DatasetError> {
    let available: Vec<usize> = (0..population).filter(|c| !exclude.contains(c)).collect();
    if n > available.len() {
        return Err(DatasetError::SampleTooLarge {
            requested: n,
            available: available.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, available.len(), n)
        .into_iter()
        .map(|i| available[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

//! Labelled feature matrices: CSV ingestion, min-max scaling and seeded
//! train/test splitting.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Stable identifier of an instance. Assigned `0..n` in file order on load and
/// carried unchanged through splits, subsets and reductions.
pub type InstanceId = usize;

/// Class identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum IdLookup {
    Sorted,
    Map(HashMap<InstanceId, usize>),
}

/// Dense row-major feature matrix with one label and one id per row.
///
/// Immutable once built; every transformation returns a new dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    features: Vec<T>,
    dim: usize,
    labels: Vec<Label>,
    ids: Vec<InstanceId>,
    n_classes: usize,
    feature_names: Vec<String>,
    label_name: String,
    lookup: IdLookup,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset with ids `0..n` and as many classes as the largest label
    /// implies.
    pub fn new(features: Vec<T>, dim: usize, labels: Vec<Label>) -> Result<Self> {
        let ids = (0..labels.len()).collect();
        Self::with_ids(features, dim, labels, ids)
    }

    pub fn with_ids(
        features: Vec<T>,
        dim: usize,
        labels: Vec<Label>,
        ids: Vec<InstanceId>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be >= 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not fill {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if ids.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} ids for {} rows",
                ids.len(),
                labels.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value in row {}",
                pos / dim
            )));
        }
        let lookup = build_lookup(&ids)?;
        let n_classes = labels.iter().map(|l| l.index() + 1).max().unwrap_or(0);
        Ok(Dataset {
            features,
            dim,
            labels,
            ids,
            n_classes,
            feature_names: (0..dim).map(|j| format!("f{j}")).collect(),
            label_name: "label".into(),
            lookup,
        })
    }

    /// Declares the number of classes explicitly (must cover every label).
    pub fn with_class_count(mut self, n_classes: usize) -> Result<Self> {
        if n_classes < self.n_classes {
            return Err(Error::InvalidDataset(format!(
                "{n_classes} classes declared but label {} present",
                self.n_classes - 1
            )));
        }
        self.n_classes = n_classes;
        Ok(self)
    }

    pub fn with_names(mut self, feature_names: Vec<String>, label_name: String) -> Result<Self> {
        if feature_names.len() != self.dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for dimension {}",
                feature_names.len(),
                self.dim
            )));
        }
        self.feature_names = feature_names;
        self.label_name = label_name;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    #[inline]
    pub fn id(&self, i: usize) -> InstanceId {
        self.ids[i]
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn ids(&self) -> &[InstanceId] {
        &self.ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Row position of an instance id.
    pub fn row_of(&self, id: InstanceId) -> Option<usize> {
        match &self.lookup {
            IdLookup::Sorted => self.ids.binary_search(&id).ok(),
            IdLookup::Map(map) => map.get(&id).copied(),
        }
    }

    pub fn rows_of(&self, ids: &[InstanceId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.row_of(id)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown instance id {id}")))
            })
            .collect()
    }

    /// Instance counts per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Number of labels that actually occur.
    pub fn distinct_labels(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Copies the given rows (in the given order) into a new dataset that keeps
    /// ids, class count and column names.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        let ids: Vec<InstanceId> = rows.iter().map(|&r| self.ids[r]).collect();
        Dataset {
            features,
            dim: self.dim,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            lookup: build_lookup(&ids).expect("a subset of unique ids is unique"),
            ids,
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    pub fn select_ids(&self, ids: &[InstanceId]) -> Result<Self> {
        Ok(self.select_rows(&self.rows_of(ids)?))
    }

    /// Same instances with a different feature matrix (used by scaling).
    fn with_features(&self, features: Vec<T>) -> Self {
        Dataset {
            features,
            ..self.clone()
        }
    }
}

fn build_lookup(ids: &[InstanceId]) -> Result<IdLookup> {
    if ids.windows(2).all(|w| w[0] < w[1]) {
        return Ok(IdLookup::Sorted);
    }
    let mut map = HashMap::with_capacity(ids.len());
    for (row, &id) in ids.iter().enumerate() {
        if map.insert(id, row).is_some() {
            return Err(Error::InvalidDataset(format!("duplicate instance id {id}")));
        }
    }
    Ok(IdLookup::Map(map))
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by position, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) if s.eq_ignore_ascii_case("last") => LabelColumn::Last,
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Raw CSV contents: header plus unparsed records with their line numbers.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: csv::StringRecord,
    pub records: Vec<csv::StringRecord>,
    lines: Vec<u64>,
}

impl CsvTable {
    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let table = Self::from_reader(file)?;
        if table.records.is_empty() {
            return Err(Error::EmptyFile(path.to_path_buf()));
        }
        Ok(table)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let mut records = Vec::new();
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != header.len() {
                return Err(Error::RaggedRow {
                    row: line,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            records.push(rec);
            lines.push(line);
        }
        Ok(CsvTable {
            header,
            records,
            lines,
        })
    }

    pub fn label_index(&self, column: &LabelColumn) -> Result<usize> {
        let width = self.header.len();
        match column {
            LabelColumn::Last if width > 0 => Ok(width - 1),
            LabelColumn::Last => Err(Error::UnknownColumn("last".into())),
            LabelColumn::Index(i) if *i < width => Ok(*i),
            LabelColumn::Index(i) => Err(Error::UnknownColumn(i.to_string())),
            LabelColumn::Name(name) => self
                .header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::UnknownColumn(name.clone())),
        }
    }

    /// Parses the table into a dataset; `ids` follow record order.
    pub fn to_dataset<T: Scalar>(&self, column: &LabelColumn) -> Result<Dataset<T>> {
        if self.records.is_empty() {
            return Err(Error::InvalidDataset("no data rows".into()));
        }
        let label_col = self.label_index(column)?;
        let dim = self.header.len() - 1;
        if dim == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        let mut features = Vec::with_capacity(self.records.len() * dim);
        let mut labels = Vec::with_capacity(self.records.len());
        for (rec, &line) in self.records.iter().zip(&self.lines) {
            for (j, cell) in rec.iter().enumerate() {
                let cell = cell.trim();
                if j == label_col {
                    let label = cell.parse::<u32>().map_err(|_| Error::BadLabel {
                        row: line,
                        column: self.header[j].to_string(),
                        value: cell.to_string(),
                    })?;
                    labels.push(Label(label));
                } else {
                    let v = cell
                        .parse::<T>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::NonNumeric {
                            row: line,
                            column: self.header[j].to_string(),
                            value: cell.to_string(),
                        })?;
                    features.push(v);
                }
            }
        }
        let names = self
            .header
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_col)
            .map(|(_, h)| h.to_string())
            .collect();
        Dataset::new(features, dim, labels)?.with_names(names, self.header[label_col].to_string())
    }
}

/// Loads a headed CSV file. Ids are assigned `0..n` in file row order.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Dataset<T>> {
    CsvTable::read_path(path.as_ref())?.to_dataset(label_column)
}

/// Writes features followed by the label column. Values use the shortest
/// representation that parses back to the same number.
pub fn write_csv<T: Scalar, W: Write>(ds: &Dataset<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(&ds.label_name);
    wtr.write_record(&header)?;
    let mut fields = Vec::with_capacity(ds.dim + 1);
    for i in 0..ds.len() {
        fields.clear();
        fields.extend(ds.row(i).iter().map(|v| v.to_string()));
        fields.push(ds.label(i).to_string());
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

/// Per-column minimum and maximum, fitted on one dataset and applicable to
/// another (e.g. fitted on a training split, applied to its test split).
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler<T = f64> {
    min: Vec<T>,
    max: Vec<T>,
}

impl<T: Scalar> MinMaxScaler<T> {
    pub fn fit(ds: &Dataset<T>) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::InvalidDataset("cannot fit scaling on an empty dataset".into()));
        }
        let mut min = ds.row(0).to_vec();
        let mut max = min.clone();
        for i in 1..ds.len() {
            for (j, &v) in ds.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    /// Maps `v` to `(v - min) / (max - min)`; constant columns map to zero.
    /// Values outside the fitted range are not clamped.
    pub fn transform(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        if ds.dim() != self.min.len() {
            return Err(Error::DimensionMismatch {
                left: self.min.len(),
                right: ds.dim(),
            });
        }
        let dim = ds.dim();
        let features = ds
            .features()
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                let j = pos % dim;
                let span = self.max[j] - self.min[j];
                if span > T::zero() {
                    (v - self.min[j]) / span
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(ds.with_features(features))
    }
}

/// Min-max normalizes every column into `[0, 1]`.
pub fn normalize<T: Scalar>(ds: &Dataset<T>) -> Result<Dataset<T>> {
    MinMaxScaler::fit(ds)?.transform(ds)
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64, stratified: bool) -> Self {
        SplitSpec {
            train_fraction,
            seed,
            stratified,
        }
    }
}

fn train_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Seeded random train/test partition.
///
/// The training part receives `round(fraction * n)` instances (per class when
/// stratified), clamped so both parts are non-empty. Both parts keep the
/// input's row order.
pub fn split<T: Scalar>(ds: &Dataset<T>, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie strictly between 0 and 1, got {}",
            spec.train_fraction
        )));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::InvalidDataset(format!("cannot split {n} instances")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; n];
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
        for i in 0..n {
            by_class[ds.label(i).index()].push(i);
        }
        for (c, members) in by_class.iter_mut().enumerate() {
            if members.is_empty() {
                continue;
            }
            if members.len() < 2 {
                return Err(Error::ClassTooSmall(Label(c as u32)));
            }
            members.shuffle(&mut rng);
            for &r in &members[..train_count(members.len(), spec.train_fraction)] {
                in_train[r] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &r in &order[..train_count(n, spec.train_fraction)] {
            in_train[r] = true;
        }
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_train[i]);
    Ok((ds.select_rows(&train), ds.select_rows(&test)))
}

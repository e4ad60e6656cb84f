//! Tabular ingestion, encoding and seeded partitioning.
//!
//! Continuous columns are z-normalised and categorical/ordinal columns are
//! one-hot encoded, with every statistic fitted on the training partition
//! only. Reading the test partition is recorded so callers can prove it was
//! untouched until predictions are written.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::ops::Range;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::Matrix;

pub const MIN_ROWS: usize = 10;
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column `{column}`: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("need at least {MIN_ROWS} rows, found {0}")]
    TooFewRows(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Ordinal,
    Target,
}

/// Column name → kind, read from a key-value file such as
///
/// ```text
/// age = "continuous"
/// colour = "categorical"
/// approved = "target"
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: BTreeMap<String, ColumnKind>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let schema: Schema =
            toml::from_str(text).map_err(|e| DataError::SchemaMismatch(format!("bad schema file: {e}")))?;
        let targets = schema.columns.values().filter(|&&k| k == ColumnKind::Target).count();
        if targets != 1 {
            return Err(DataError::SchemaMismatch(format!(
                "expected exactly one target column, found {targets}"
            )));
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("schema serialises")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Number(f64),
    Category(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Parsed table: feature columns in file order plus a binary target.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub features: Vec<Column>,
    pub target_name: String,
    pub rows: Vec<Vec<Cell>>,
    pub targets: Vec<f64>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn schema(&self) -> Schema {
        let mut columns: BTreeMap<String, ColumnKind> =
            self.features.iter().map(|c| (c.name.clone(), c.kind)).collect();
        columns.insert(self.target_name.clone(), ColumnKind::Target);
        Schema { columns }
    }

    /// CSV text with a header row; the target is the last column.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.features.iter().map(|c| c.name.as_str()).collect();
        header.push(&self.target_name);
        w.write_record(&header).expect("in-memory write");
        for (row, &y) in self.rows.iter().zip(&self.targets) {
            let mut rec: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Number(v) => v.to_string(),
                    Cell::Category(s) => s.clone(),
                })
                .collect();
            rec.push(format!("{}", y as u8));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<RawDataset, DataError> {
    let file = fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(file, schema)
}

pub fn parse_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Parse {
            line: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();

    let header_set: BTreeSet<&str> = header.iter().map(String::as_str).collect();
    if header_set.len() != header.len() {
        return Err(DataError::SchemaMismatch("duplicate column names in header".into()));
    }
    for name in schema.columns.keys() {
        if !header_set.contains(name.as_str()) {
            return Err(DataError::SchemaMismatch(format!("column `{name}` missing from file")));
        }
    }
    let mut kinds = Vec::with_capacity(header.len());
    for name in &header {
        let kind = schema
            .columns
            .get(name)
            .ok_or_else(|| DataError::SchemaMismatch(format!("column `{name}` not in schema")))?;
        kinds.push(*kind);
    }
    let target_col = kinds
        .iter()
        .position(|&k| k == ColumnKind::Target)
        .ok_or_else(|| DataError::SchemaMismatch("no target column".into()))?;

    let features: Vec<Column> = header
        .iter()
        .zip(&kinds)
        .filter(|(_, &k)| k != ColumnKind::Target)
        .map(|(n, &k)| Column {
            name: n.clone(),
            kind: k,
        })
        .collect();

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| DataError::Parse {
            line,
            column: String::new(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(features.len());
        for (j, value) in record.iter().enumerate() {
            let column = &header[j];
            match kinds[j] {
                ColumnKind::Target => {
                    let y: f64 = value.parse().map_err(|_| {
                        DataError::SchemaMismatch(format!("line {line}: target `{value}` is not 0 or 1"))
                    })?;
                    if y != 0.0 && y != 1.0 {
                        return Err(DataError::SchemaMismatch(format!(
                            "line {line}: target `{value}` is not 0 or 1"
                        )));
                    }
                    targets.push(y);
                }
                ColumnKind::Continuous => {
                    let v: f64 = value.parse().map_err(|_| DataError::Parse {
                        line,
                        column: column.clone(),
                        message: format!("`{value}` is not a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(DataError::Parse {
                            line,
                            column: column.clone(),
                            message: format!("`{value}` is not finite"),
                        });
                    }
                    row.push(Cell::Number(v));
                }
                ColumnKind::Categorical | ColumnKind::Ordinal => row.push(Cell::Category(value.to_owned())),
            }
        }
        debug_assert_eq!(targets.len(), rows.len() + 1, "target column {target_col}");
        rows.push(row);
    }

    Ok(RawDataset {
        features,
        target_name: header[target_col].clone(),
        rows,
        targets,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Fraction of the non-test rows held out for validation.
    pub validation_fraction: f64,
    pub stratify: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.3,
            validation_fraction: 0.2,
            stratify: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnEncoding {
    /// `(x - mean) / max(std, STD_FLOOR)`, population std.
    Continuous { mean: f64, std: f64 },
    /// One indicator per training-set category, sorted; unseen categories
    /// encode as all zeros.
    OneHot { vocabulary: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub name: String,
    pub encoding: ColumnEncoding,
    pub range: Range<usize>,
}

/// Feature-major batch: `x` is `features × samples`.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl Samples {
    /// Builds from per-sample feature rows.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Self {
        let x = Matrix::from_rows(rows).expect("rectangular rows").transpose();
        assert_eq!(x.cols(), y.len(), "one target per row");
        Self { x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn select(&self, idx: &[usize]) -> Samples {
        Samples {
            x: self.x.select_cols(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn sample(&self, j: usize) -> Vec<f64> {
        self.x.col(j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
}

/// Encoded, split dataset. Immutable after construction.
#[derive(Debug)]
pub struct PreparedDataset {
    encoded: Matrix,
    targets: Vec<f64>,
    pub columns: Vec<EncodedColumn>,
    pub feature_names: Vec<String>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    train_samples: Samples,
    validation_samples: Samples,
    test_accessed: AtomicBool,
}

impl PreparedDataset {
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn samples(&self, p: Partition) -> &Samples {
        match p {
            Partition::Train => &self.train_samples,
            Partition::Validation => &self.validation_samples,
        }
    }

    /// Train and validation rows together.
    pub fn train_side(&self) -> Samples {
        let mut idx = self.train.clone();
        idx.extend(&self.validation);
        idx.sort_unstable();
        self.gather(&idx)
    }

    /// The held-out rows. Marks the dataset as having exposed its test set.
    pub fn test_samples(&self) -> Samples {
        self.test_accessed.store(true, Ordering::SeqCst);
        self.gather(&self.test)
    }

    pub fn test_accessed(&self) -> bool {
        self.test_accessed.load(Ordering::SeqCst)
    }

    /// Encoded feature row `i` (any partition). Does not mark test access.
    pub fn encoded_row(&self, i: usize) -> &[f64] {
        self.encoded.row(i)
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    fn gather(&self, idx: &[usize]) -> Samples {
        let d = self.dim();
        let mut x = Matrix::zeros(d, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            for (f, &v) in self.encoded.row(i).iter().enumerate() {
                x.set(f, j, v);
            }
        }
        Samples {
            x,
            y: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Largest-remainder apportionment of `total` across groups of `sizes`.
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut out: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut rest: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, &s)| (i, (s * total) % n)).collect();
    rest.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut missing = total - out.iter().sum::<usize>();
    for (i, _) in rest {
        if missing == 0 {
            break;
        }
        if out[i] < sizes[i] {
            out[i] += 1;
            missing -= 1;
        }
    }
    out
}

/// Splits `pool` into `(held_out, kept)` with `round(len * fraction)` held out.
fn split_pool(
    pool: &[usize],
    targets: &[f64],
    fraction: f64,
    stratify: bool,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let total = (pool.len() as f64 * fraction).round() as usize;
    let groups: Vec<Vec<usize>> = if stratify {
        let mut neg: Vec<usize> = pool.iter().copied().filter(|&i| targets[i] == 0.0).collect();
        let mut pos: Vec<usize> = pool.iter().copied().filter(|&i| targets[i] != 0.0).collect();
        neg.shuffle(rng);
        pos.shuffle(rng);
        vec![neg, pos]
    } else {
        let mut all = pool.to_vec();
        all.shuffle(rng);
        vec![all]
    };
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let quotas = apportion(total, &sizes);
    let mut held = Vec::new();
    let mut kept = Vec::new();
    for (g, q) in groups.into_iter().zip(quotas) {
        held.extend_from_slice(&g[..q]);
        kept.extend_from_slice(&g[q..]);
    }
    held.sort_unstable();
    kept.sort_unstable();
    (held, kept)
}

/// Seeded split followed by encoding fitted on the training rows.
pub fn prepare(raw: &RawDataset, seed: u64, split: SplitConfig) -> Result<PreparedDataset, DataError> {
    let n = raw.len();
    if n < MIN_ROWS {
        return Err(DataError::TooFewRows(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..n).collect();
    let (test, train_side) = split_pool(&all, &raw.targets, split.test_fraction, split.stratify, &mut rng);
    let (validation, train) = split_pool(
        &train_side,
        &raw.targets,
        split.validation_fraction,
        split.stratify,
        &mut rng,
    );

    let mut columns = Vec::with_capacity(raw.features.len());
    let mut feature_names = Vec::new();
    for (j, col) in raw.features.iter().enumerate() {
        let start = feature_names.len();
        let encoding = match col.kind {
            ColumnKind::Continuous => {
                let vals: Vec<f64> = train
                    .iter()
                    .map(|&i| match &raw.rows[i][j] {
                        Cell::Number(v) => *v,
                        Cell::Category(_) => unreachable!("continuous cells are numbers"),
                    })
                    .collect();
                let (mean, std) = mean_std(&vals);
                feature_names.push(col.name.clone());
                ColumnEncoding::Continuous { mean, std }
            }
            ColumnKind::Categorical | ColumnKind::Ordinal => {
                let vocab: BTreeSet<String> = train
                    .iter()
                    .map(|&i| match &raw.rows[i][j] {
                        Cell::Category(s) => s.clone(),
                        Cell::Number(v) => v.to_string(),
                    })
                    .collect();
                let vocabulary: Vec<String> = vocab.into_iter().collect();
                feature_names.extend(vocabulary.iter().map(|v| format!("{}={v}", col.name)));
                ColumnEncoding::OneHot { vocabulary }
            }
            ColumnKind::Target => unreachable!("target is not a feature"),
        };
        columns.push(EncodedColumn {
            name: col.name.clone(),
            encoding,
            range: start..feature_names.len(),
        });
    }

    let d = feature_names.len();
    let mut encoded = Matrix::zeros(n, d);
    for (i, row) in raw.rows.iter().enumerate() {
        let out = encoded.row_mut(i);
        for (col, cell) in columns.iter().zip(row) {
            match (&col.encoding, cell) {
                (ColumnEncoding::Continuous { mean, std }, Cell::Number(v)) => {
                    out[col.range.start] = (v - mean) / std.max(STD_FLOOR);
                }
                (ColumnEncoding::OneHot { vocabulary }, cell) => {
                    let key = match cell {
                        Cell::Category(s) => s.clone(),
                        Cell::Number(v) => v.to_string(),
                    };
                    if let Ok(k) = vocabulary.binary_search(&key) {
                        out[col.range.start + k] = 1.0;
                    }
                }
                (ColumnEncoding::Continuous { .. }, Cell::Category(_)) => {
                    unreachable!("continuous cells are numbers")
                }
            }
        }
    }

    let mut ds = PreparedDataset {
        encoded,
        targets: raw.targets.clone(),
        columns,
        feature_names,
        train,
        validation,
        test,
        train_samples: Samples {
            x: Matrix::zeros(d, 0),
            y: Vec::new(),
        },
        validation_samples: Samples {
            x: Matrix::zeros(d, 0),
            y: Vec::new(),
        },
        test_accessed: AtomicBool::new(false),
    };
    ds.train_samples = ds.gather(&ds.train);
    ds.validation_samples = ds.gather(&ds.validation);
    Ok(ds)
}

/// Mean and population standard deviation. A constant column yields its
/// value exactly and a zero deviation.
fn mean_std(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (0.0, 0.0);
    }
    if vals.iter().all(|&v| v == vals[0]) {
        return (vals[0], 0.0);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = "x = \"continuous\"\ncolour = \"categorical\"\nsize = \"ordinal\"\ny = \"target\"\n";

    fn raw(n: usize) -> RawDataset {
        let mut csv = String::from("x,colour,size,y\n");
        for i in 0..n {
            let colour = ["red", "green", "blue"][i % 3];
            let size = ["s", "m"][i % 2];
            csv.push_str(&format!(
                "{},{colour},{size},{}\n",
                i as f64 * 0.5 - 3.0,
                (i * 7 % 5 < 2) as u8
            ));
        }
        parse_csv(csv.as_bytes(), &Schema::parse(SCHEMA).unwrap()).unwrap()
    }

    #[test]
    fn parses_rows() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let d = parse_csv(
            "x,colour,size,y\n1.5,red,s,1\n2,blue,m,0\n-3e2,red,m,1\n".as_bytes(),
            &schema,
        )
        .unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.targets, vec![1.0, 0.0, 1.0]);
        assert_eq!(d.rows[2][0], Cell::Number(-300.0));
        assert_eq!(d.target_name, "y");
    }

    #[test]
    fn non_binary_target_rejected() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let err = parse_csv("x,colour,size,y\n1,red,s,2\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch(_)));
    }

    #[test]
    fn missing_column_rejected() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let err = parse_csv("x,colour,y\n1,red,1\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch(m) if m.contains("size")));
        let err = parse_csv("x,colour,size,extra,y\n1,red,s,4,1\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch(m) if m.contains("extra")));
    }

    #[test]
    fn unparseable_value_names_line() {
        let schema = Schema::parse(SCHEMA).unwrap();
        let err = parse_csv("x,colour,size,y\n1,red,s,1\nabc,red,s,0\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }));
    }

    #[test]
    fn schema_needs_one_target() {
        assert!(Schema::parse("a = \"continuous\"\n").is_err());
        assert!(Schema::parse("a = \"target\"\nb = \"target\"\n").is_err());
        assert!(Schema::parse("a = \"weird\"\nb = \"target\"\n").is_err());
    }

    #[test]
    fn split_sizes() {
        let ds = prepare(&raw(100), 3, SplitConfig::default()).unwrap();
        assert_eq!((ds.train.len(), ds.validation.len(), ds.test.len()), (56, 14, 30));
        let mut all: Vec<usize> = ds.train.iter().chain(&ds.validation).chain(&ds.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(!ds.test_accessed());
    }

    #[test]
    fn stratified_split_keeps_class_balance() {
        let r = raw(100);
        let positives = r.targets.iter().filter(|&&y| y == 1.0).count();
        let ds = prepare(&r, 3, SplitConfig::default()).unwrap();
        let test_pos = ds.test.iter().filter(|&&i| r.targets[i] == 1.0).count();
        assert_eq!(test_pos, (positives as f64 * 0.3).round() as usize);
    }

    #[test]
    fn deterministic_given_seed() {
        let r = raw(60);
        let a = prepare(&r, 11, SplitConfig::default()).unwrap();
        let b = prepare(&r, 11, SplitConfig::default()).unwrap();
        assert_eq!(
            (a.train.clone(), a.validation.clone(), a.test.clone()),
            (b.train, b.validation, b.test)
        );
        let c = prepare(&r, 12, SplitConfig::default()).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            prepare(&raw(9), 0, SplitConfig::default()),
            Err(DataError::TooFewRows(9))
        ));
    }

    #[test]
    fn train_partition_is_standardised() {
        let ds = prepare(&raw(80), 5, SplitConfig::default()).unwrap();
        let x = &ds.samples(Partition::Train).x;
        let row = x.row(0);
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let std = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
        assert_eq!(ds.dim(), 1 + 3 + 2);
        for j in 0..x.cols() {
            let colour: f64 = (1..4).map(|f| x.get(f, j)).sum();
            let size: f64 = (4..6).map(|f| x.get(f, j)).sum();
            assert_eq!((colour, size), (1.0, 1.0));
        }
    }

    #[test]
    fn constant_column_encodes_to_zero() {
        let schema = Schema::parse("k = \"continuous\"\ny = \"target\"\n").unwrap();
        let mut csv = String::from("k,y\n");
        for i in 0..20 {
            csv.push_str(&format!("0.1,{}\n", i % 2));
        }
        let ds = prepare(&parse_csv(csv.as_bytes(), &schema).unwrap(), 0, SplitConfig::default()).unwrap();
        assert!(ds.samples(Partition::Train).x.as_slice().iter().all(|&v| v == 0.0));
        assert!(ds.test_samples().x.as_slice().iter().all(|&v| v == 0.0));
        assert!(ds.test_accessed());
    }

    #[test]
    fn unseen_category_is_all_zero() {
        let mut r = raw(40);
        let ds = prepare(&r, 1, SplitConfig::default()).unwrap();
        let t = ds.test[0];
        r.rows[t][1] = Cell::Category("violet".into());
        let ds2 = prepare(&r, 1, SplitConfig::default()).unwrap();
        assert_eq!(ds.columns, ds2.columns);
        assert_eq!(&ds2.encoded_row(t)[1..4], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn preprocessing_ignores_held_out_rows() {
        let mut r = raw(50);
        let ds = prepare(&r, 9, SplitConfig::default()).unwrap();
        for &i in ds.test.iter().chain(&ds.validation) {
            r.rows[i][0] = Cell::Number(1e6);
            r.rows[i][2] = Cell::Category("xl".into());
        }
        let ds2 = prepare(&r, 9, SplitConfig::default()).unwrap();
        assert_eq!(ds.columns, ds2.columns);
    }

    #[test]
    fn apportion_exact() {
        assert_eq!(apportion(30, &[60, 40]), vec![18, 12]);
        assert_eq!(apportion(3, &[1, 1, 1, 1]).iter().sum::<usize>(), 3);
        assert_eq!(apportion(5, &[0, 10]), vec![0, 5]);
    }

    #[test]
    fn csv_roundtrip() {
        let r = raw(12);
        let back = parse_csv(r.to_csv().as_bytes(), &r.schema()).unwrap();
        assert_eq!(back, r);
    }
}

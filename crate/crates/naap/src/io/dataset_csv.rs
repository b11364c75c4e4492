//! The dataset CSV: one row per architecture with `id`, the eight scheme
//! features, `epoch{e}_{train_loss,train_acc,test_acc}` for each available
//! epoch and `gt_accuracy`. Columns are matched by normalized header name,
//! so order does not matter.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use naap_core::dataset::{ArchRecord, Dataset, EpochMetrics, EPOCH_FEATURE_SUFFIXES};
use naap_core::scheme::{
    count_lost_rf_layers, count_skip_connections, scheme_feature_vector, ArchitectureScheme,
    SchemeFeatures, StageRule, SCHEME_FEATURE_NAMES,
};

use super::{read_to_string, write_file};
use crate::error::{DataError, Error, Result};

/// Scheme columns absent from the original six-feature table.
pub const NEW_SCHEME_COLUMNS: [&str; 2] = ["num_skip_connections", "num_lost_rf_layers"];

const EXTEND_HINT: &str = "run `naap extend` with the scheme documents to derive them";

/// Lowercases, trims, maps spaces and dashes to underscores and spells out
/// `_train_accuracy` / `_test_accuracy` as `_train_acc` / `_test_acc`.
pub fn normalize_header(header: &str) -> String {
    let mut s: String = header
        .trim()
        .trim_start_matches('\u{feff}')
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect();
    for (long, short) in [
        ("_train_accuracy", "_train_acc"),
        ("_test_accuracy", "_test_acc"),
    ] {
        if let Some(stem) = s.strip_suffix(long) {
            s = format!("{stem}{short}");
        }
    }
    s
}

/// Extra header renames applied after normalization, e.g. loaded from a
/// JSON object `{"val_acc_final": "gt_accuracy"}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable(BTreeMap<String, String>);

impl AliasTable {
    pub fn insert(&mut self, alias: &str, canonical: &str) {
        self.0
            .insert(normalize_header(alias), normalize_header(canonical));
    }

    pub fn from_json_file(path: &Path) -> Result<Self, DataError> {
        let text = read_to_string(path)?;
        let map: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| DataError::Invalid {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let mut table = Self::default();
        for (alias, canonical) in &map {
            table.insert(alias, canonical);
        }
        Ok(table)
    }

    fn resolve(&self, header: &str) -> String {
        let n = normalize_header(header);
        self.0.get(&n).cloned().unwrap_or(n)
    }
}

/// Which scheme columns [`write_csv`] emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// All eight scheme features.
    Full,
    /// Without [`NEW_SCHEME_COLUMNS`], as consumed by [`extend`].
    Base,
}

fn epoch_column(epoch: usize, suffix: &str) -> String {
    format!("epoch{epoch}_{suffix}")
}

struct Table<'a> {
    path: &'a Path,
    columns: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl<'a> Table<'a> {
    fn read(reader: impl Read, path: &'a Path, aliases: &AliasTable) -> Result<Self, DataError> {
        let csv_err = |source| DataError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut columns = HashMap::new();
        for (i, h) in rdr.headers().map_err(csv_err)?.iter().enumerate() {
            let name = aliases.resolve(h);
            if columns.insert(name.clone(), i).is_some() {
                return Err(DataError::Invalid {
                    path: path.to_path_buf(),
                    message: format!("duplicate column `{name}`"),
                });
            }
        }
        let rows = rdr
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(csv_err)?;
        Ok(Self {
            path,
            columns,
            rows,
        })
    }

    fn missing(&self, names: &[&str], hint: Option<&'static str>) -> Result<(), DataError> {
        let columns: Vec<String> = names
            .iter()
            .filter(|n| !self.columns.contains_key(**n))
            .map(|n| n.to_string())
            .collect();
        if columns.is_empty() {
            Ok(())
        } else {
            Err(DataError::MissingColumns {
                path: self.path.to_path_buf(),
                columns,
                hint,
            })
        }
    }

    /// Number of leading epochs with all three columns present.
    fn epoch_count(&self) -> Result<usize, DataError> {
        let mut e = 0;
        loop {
            let names: Vec<String> = EPOCH_FEATURE_SUFFIXES
                .iter()
                .map(|s| epoch_column(e + 1, s))
                .collect();
            let present = names
                .iter()
                .filter(|n| self.columns.contains_key(*n))
                .count();
            if present == 0 {
                return Ok(e);
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            self.missing(&refs, None)?;
            e += 1;
        }
    }

    fn cell_error(&self, row: usize, column: &str, message: String) -> DataError {
        DataError::Cell {
            path: self.path.to_path_buf(),
            row: row + 1,
            column: column.to_string(),
            message,
        }
    }

    fn text(&self, row: usize, column: &str) -> &str {
        self.rows[row].get(self.columns[column]).unwrap_or("")
    }

    fn real(&self, row: usize, column: &str) -> Result<f64, DataError> {
        let raw = self.text(row, column);
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.cell_error(row, column, format!("`{raw}` is not a finite number"))),
        }
    }

    fn count(&self, row: usize, column: &str) -> Result<u64, DataError> {
        let v = self.real(row, column)?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(self.cell_error(row, column, format!("{v} is not a non-negative integer")));
        }
        Ok(v as u64)
    }

    fn unit(&self, row: usize, column: &str) -> Result<f64, DataError> {
        let v = self.real(row, column)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(self.cell_error(row, column, format!("{v} outside [0, 1]")));
        }
        Ok(v)
    }

    fn scheme(
        &self,
        row: usize,
        derived: Option<&ArchitectureScheme>,
    ) -> Result<SchemeFeatures, DataError> {
        let c = |name| self.count(row, name);
        let (skips, lost) = match derived {
            Some(s) => (count_skip_connections(s), count_lost_rf_layers(s)),
            None => (c(NEW_SCHEME_COLUMNS[0])?, c(NEW_SCHEME_COLUMNS[1])?),
        };
        Ok(SchemeFeatures {
            depth: c("depth")?,
            num_stages: c("num_stages")?,
            first_width: c("first_width")?,
            last_width: c("last_width")?,
            num_params: c("num_params")?,
            num_macs: c("num_macs")?,
            num_skip_connections: skips,
            num_lost_rf_layers: lost,
        })
    }

    fn epochs(&self, row: usize, n_epochs: usize) -> Result<Vec<EpochMetrics>, DataError> {
        (1..=n_epochs)
            .map(|e| {
                let loss_col = epoch_column(e, EPOCH_FEATURE_SUFFIXES[0]);
                let train_loss = self.real(row, &loss_col)?;
                if train_loss < 0.0 {
                    return Err(self.cell_error(
                        row,
                        &loss_col,
                        format!("negative loss {train_loss}"),
                    ));
                }
                Ok(EpochMetrics {
                    train_loss,
                    train_accuracy: self.unit(row, &epoch_column(e, EPOCH_FEATURE_SUFFIXES[1]))?,
                    test_accuracy: self.unit(row, &epoch_column(e, EPOCH_FEATURE_SUFFIXES[2]))?,
                })
            })
            .collect()
    }

    /// Builds records; with `schemes`, the two new scheme columns are
    /// derived from the scheme with the row's id instead of read.
    fn records(
        &self,
        schemes: Option<&HashMap<&str, &ArchitectureScheme>>,
    ) -> Result<Vec<ArchRecord>, DataError> {
        let base: Vec<&str> = ["id"]
            .into_iter()
            .chain(
                SCHEME_FEATURE_NAMES
                    .iter()
                    .copied()
                    .filter(|n| !NEW_SCHEME_COLUMNS.contains(n)),
            )
            .chain(["gt_accuracy"])
            .collect();
        self.missing(&base, None)?;
        if schemes.is_none() {
            self.missing(&NEW_SCHEME_COLUMNS, Some(EXTEND_HINT))?;
        }
        let n_epochs = self.epoch_count()?;
        let mut mismatched = 0usize;
        let mut records = Vec::with_capacity(self.rows.len());
        for row in 0..self.rows.len() {
            let id = self.text(row, "id").to_string();
            let derived = match schemes {
                Some(map) => Some(*map.get(id.as_str()).ok_or_else(|| {
                    self.cell_error(row, "id", format!("no scheme document for `{id}`"))
                })?),
                None => None,
            };
            let scheme = self.scheme(row, derived)?;
            if let Some(s) = derived {
                let f = scheme_feature_vector(s, StageRule::default());
                if f.to_array()[..6] != scheme.to_array()[..6] {
                    mismatched += 1;
                    log::debug!("{id}: table scheme features differ from the scheme document");
                }
            }
            records.push(ArchRecord {
                id,
                scheme,
                epochs: self.epochs(row, n_epochs)?,
                gt_accuracy: self.unit(row, "gt_accuracy")?,
            });
        }
        if mismatched > 0 {
            log::warn!(
                "{}: {mismatched} row(s) whose six table features disagree with their scheme documents; table values kept",
                self.path.display()
            );
        }
        Ok(records)
    }
}

/// Parses a dataset CSV; `path` only labels errors.
pub fn read_csv(
    reader: impl Read,
    path: &Path,
    aliases: &AliasTable,
) -> Result<Dataset, DataError> {
    let table = Table::read(reader, path, aliases)?;
    Ok(Dataset::new(table.records(None)?)?)
}

pub fn load_csv(path: &Path, aliases: &AliasTable) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(std::io::BufReader::new(file), path, aliases)
}

/// Adds the skip-connection and lost-receptive-field columns to a
/// six-feature table, matching rows to scheme documents by id.
pub fn extend(
    base_csv: &Path,
    schemes: &[ArchitectureScheme],
    aliases: &AliasTable,
) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(base_csv).map_err(|source| DataError::Read {
        path: base_csv.to_path_buf(),
        source,
    })?;
    let table = Table::read(std::io::BufReader::new(file), base_csv, aliases)?;
    let by_id: HashMap<&str, &ArchitectureScheme> = schemes.iter().map(|s| (s.name(), s)).collect();
    Ok(Dataset::new(table.records(Some(&by_id))?)?)
}

pub fn write_csv(dataset: &Dataset, path: &Path, layout: CsvLayout) -> Result<()> {
    let level = dataset.max_level();
    let keep: Vec<usize> = (0..SCHEME_FEATURE_NAMES.len())
        .filter(|&i| {
            layout == CsvLayout::Full || !NEW_SCHEME_COLUMNS.contains(&SCHEME_FEATURE_NAMES[i])
        })
        .collect();
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| Error::Internal(e.to_string());
    let mut header = vec![String::from("id")];
    header.extend(keep.iter().map(|&i| SCHEME_FEATURE_NAMES[i].to_string()));
    for e in 1..=level {
        header.extend(EPOCH_FEATURE_SUFFIXES.iter().map(|s| epoch_column(e, s)));
    }
    header.push("gt_accuracy".into());
    wtr.write_record(&header).map_err(internal)?;
    for r in dataset.records() {
        let scheme = r.scheme.to_array();
        let mut fields = vec![r.id.clone()];
        fields.extend(keep.iter().map(|&i| (scheme[i] as u64).to_string()));
        for m in &r.epochs[..level] {
            fields.extend(m.to_array().iter().map(f64::to_string));
        }
        fields.push(r.gt_accuracy.to_string());
        wtr.write_record(&fields).map_err(internal)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Internal(e.to_string()))?;
    write_file(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use naap_core::dataset::generate_naap_like;

    fn header(level: usize, skip: &[&str]) -> String {
        let mut h: Vec<String> = vec!["id".into()];
        h.extend(
            SCHEME_FEATURE_NAMES
                .iter()
                .filter(|n| !skip.contains(n))
                .map(|s| s.to_string()),
        );
        for e in 1..=level {
            h.extend(EPOCH_FEATURE_SUFFIXES.iter().map(|s| epoch_column(e, s)));
        }
        h.push("gt_accuracy".into());
        h.join(",")
    }

    fn row(gt: &str) -> String {
        format!("a,4,3,16,32,1000,20000,1,0,0.9,0.5,0.45,{gt}")
    }

    fn parse(text: &str) -> Result<Dataset, DataError> {
        read_csv(text.as_bytes(), Path::new("t.csv"), &AliasTable::default())
    }

    #[test]
    fn parses_by_header_name() {
        let ds = parse(&format!("{}\n{}\n", header(1, &[]), row("0.7"))).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.max_level(), 1);
        assert_eq!(ds.records()[0].scheme.num_skip_connections, 1);
        assert_eq!(ds.records()[0].epochs[0].test_accuracy, 0.45);
        // reordered, upper-cased, long accuracy names
        let text = "GT Accuracy,id,depth,num-stages,first_width,last_width,num_params,num_macs,num_skip_connections,num_lost_rf_layers,epoch1_train_loss,Epoch1_Train_Accuracy,epoch1_test_accuracy\n0.7,a,4,3,16,32,1000,20000,1,0,0.9,0.5,0.45\n";
        assert_eq!(parse(text).unwrap(), ds);
    }

    #[test]
    fn load_errors_name_row_and_column() {
        let msg = parse(&format!("{}\n{}\n", header(1, &[]), row("1.2")))
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("row 1") && msg.contains("gt_accuracy") && msg.contains("outside"),
            "{msg}"
        );
        let msg = parse(&format!("{}\n{}\n", header(1, &[]), row("x")))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("not a finite number"), "{msg}");
        let text = format!("{}\n", header(0, &["num_params"]));
        assert!(parse(&text).unwrap_err().to_string().contains("num_params"));
    }

    #[test]
    fn missing_new_columns_point_to_extend() {
        let err = parse(&format!("{}\n", header(1, &NEW_SCHEME_COLUMNS))).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("num_skip_connections") && msg.contains("extend"),
            "{msg}"
        );
    }

    #[test]
    fn partial_epoch_is_an_error() {
        let text = format!("{},epoch2_train_loss\n{},0.3\n", header(1, &[]), row("0.7"));
        assert!(parse(&text)
            .unwrap_err()
            .to_string()
            .contains("epoch2_train_acc"));
    }

    #[test]
    fn user_aliases() {
        let text = header(0, &[]).replace("gt_accuracy", "final_acc")
            + "\na,4,3,16,32,1000,20000,1,0,0.7\n";
        assert!(parse(&text).is_err());
        let mut aliases = AliasTable::default();
        aliases.insert("Final Acc", "gt_accuracy");
        let ds = read_csv(text.as_bytes(), Path::new("t.csv"), &aliases).unwrap();
        assert_eq!(ds.records()[0].gt_accuracy, 0.7);
    }

    #[test]
    fn write_then_read_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_naap_like(30, 4);
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path, CsvLayout::Full).unwrap();
        assert_eq!(load_csv(&path, &AliasTable::default()).unwrap(), ds);
    }
}

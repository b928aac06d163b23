//! Append-only JSON-lines journal of count results.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::CountResult;
use crate::systems::SystemSpec;

pub const JOURNAL_FILE: &str = "counts.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt journal line {line}: {msg}")]
    Corrupt { line: usize, msg: String },
    #[error("integrity error for {key}: {detail}")]
    Integrity { key: String, detail: String },
}

#[derive(Clone, Debug)]
pub struct Journal {
    path: PathBuf,
}

fn key_string(spec: &SystemSpec, p: u64, version: &str) -> String {
    format!("{spec} P={p} version={version}")
}

impl Journal {
    /// Opens (creating if needed) the journal inside `dir`.
    pub fn open(dir: &Path) -> Result<Self, CacheError> {
        fs::create_dir_all(dir)?;
        Ok(Journal {
            path: dir.join(JOURNAL_FILE),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All records in file order.
    pub fn records(&self) -> Result<Vec<CountResult>, CacheError> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
                line: i + 1,
                msg: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    fn matching(
        &self,
        spec: &SystemSpec,
        p: u64,
        version: &str,
    ) -> Result<Option<CountResult>, CacheError> {
        let mut found: Option<CountResult> = None;
        for rec in self.records()? {
            if rec.spec != *spec || rec.p != p || rec.tool_version != version {
                continue;
            }
            if let Some(prev) = &found {
                if !prev.agrees_with(&rec) {
                    return Err(CacheError::Integrity {
                        key: key_string(spec, p, version),
                        detail: format!(
                            "journal holds V={} L={} and V={} L={}",
                            prev.v, prev.l, rec.v, rec.l
                        ),
                    });
                }
            }
            found = Some(rec);
        }
        Ok(found)
    }

    /// Latest record for the key, after checking all duplicates agree.
    pub fn get(
        &self,
        spec: &SystemSpec,
        p: u64,
        version: &str,
    ) -> Result<Option<CountResult>, CacheError> {
        self.matching(spec, p, version)
    }

    /// Appends a record. A record contradicting an existing one is refused.
    pub fn put(&self, rec: &CountResult) -> Result<(), CacheError> {
        if let Some(prev) = self.matching(&rec.spec, rec.p, &rec.tool_version)? {
            if !prev.agrees_with(rec) {
                return Err(CacheError::Integrity {
                    key: key_string(&rec.spec, rec.p, &rec.tool_version),
                    detail: format!(
                        "new record V={} L={} disagrees with V={} L={}",
                        rec.v, rec.l, prev.v, prev.l
                    ),
                });
            }
        }
        let mut line = serde_json::to_string(rec).expect("count records serialize");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{count, EnumConfig};
    use num_bigint::BigInt;

    fn record(p: u64) -> CountResult {
        count(&SystemSpec::positive(2, 1).unwrap(), p, &EnumConfig::default()).unwrap()
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let j = Journal::open(dir.path()).unwrap();
        let spec = SystemSpec::positive(2, 1).unwrap();
        assert!(j.get(&spec, 6, crate::TOOL_VERSION).unwrap().is_none());
        let r = record(6);
        j.put(&r).unwrap();
        j.put(&record(6)).unwrap();
        let got = j.get(&spec, 6, crate::TOOL_VERSION).unwrap().unwrap();
        assert!(got.agrees_with(&r));
        assert!(j.get(&spec, 6, "0.0.0-other").unwrap().is_none());
        assert_eq!(j.records().unwrap().len(), 2);
    }

    #[test]
    fn record_json_uses_decimal_strings() {
        let line = serde_json::to_string(&record(6)).unwrap();
        assert!(line.contains("\"V\":\"") && line.contains("\"delta\":\"36\""), "{line}");
        assert!(line.contains("\"variant\":\"positive\"") && line.contains("\"P\":6"));
    }

    #[test]
    fn contradicting_records_are_an_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let j = Journal::open(dir.path()).unwrap();
        let r = record(6);
        j.put(&r).unwrap();
        let mut bad = r.clone();
        bad.v += BigInt::from(1);
        bad.delta += BigInt::from(1);
        assert!(matches!(j.put(&bad), Err(CacheError::Integrity { .. })));

        // a tampered file is also caught on read
        let mut text = fs::read_to_string(j.path()).unwrap();
        text.push_str(&serde_json::to_string(&bad).unwrap());
        text.push('\n');
        fs::write(j.path(), text).unwrap();
        assert!(matches!(
            j.get(&r.spec, 6, crate::TOOL_VERSION),
            Err(CacheError::Integrity { .. })
        ));
    }

    #[test]
    fn garbage_is_reported_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let j = Journal::open(dir.path()).unwrap();
        j.put(&record(3)).unwrap();
        let mut f = OpenOptions::new().append(true).open(j.path()).unwrap();
        writeln!(f, "not json").unwrap();
        assert!(matches!(j.records(), Err(CacheError::Corrupt { line: 2, .. })));
    }
}

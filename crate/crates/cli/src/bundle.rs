//! Report bundles: every command collects named JSON reports and CSV tables
//! in memory, and nothing is written until the whole command has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "expspan.bundle/1";

pub struct Report {
    pub name: String,
    pub description: String,
    pub data: Value,
}

pub struct Table {
    pub name: String,
    pub description: String,
    /// `(header, meaning)` per column.
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, description: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.into(),
            description: description.into(),
            columns: columns.iter().map(|(h, m)| (h.to_string(), m.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::io(format!("csv: {e}"));
        w.write_record(self.columns.iter().map(|c| c.0.as_str())).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| CliError::io(format!("csv: {e}")))
    }
}

pub struct Bundle {
    pub command: String,
    pub config: Value,
    pub reports: Vec<Report>,
    pub tables: Vec<Table>,
}

impl Bundle {
    pub fn new(command: &str, config: Value) -> Self {
        Bundle {
            command: command.into(),
            config,
            reports: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn report(&mut self, name: &str, description: &str, data: impl Serialize) -> CliResult<()> {
        if self.reports.iter().any(|r| r.name == name) {
            return Err(CliError::invalid(format!("duplicate report {name:?}")));
        }
        self.reports.push(Report {
            name: name.into(),
            description: description.into(),
            data: serde_json::to_value(data)?,
        });
        Ok(())
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    fn check_nonempty(&self) -> CliResult<()> {
        if self.reports.is_empty() && self.tables.is_empty() {
            return Err(CliError::invalid("refusing to emit an empty report bundle"));
        }
        Ok(())
    }

    fn manifest(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "reports": self.reports.iter().map(|r| json!({
                "name": r.name,
                "file": format!("{}.json", r.name),
                "description": r.description,
            })).collect::<Vec<_>>(),
            "tables": self.tables.iter().map(|t| json!({
                "name": t.name,
                "file": format!("{}.csv", t.name),
                "description": t.description,
                "columns": t.columns.iter().map(|(h, m)| json!({"name": h, "description": m})).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    /// The whole bundle as one JSON document (the stdout form).
    pub fn to_document(&self) -> CliResult<String> {
        self.check_nonempty()?;
        let mut doc = self.manifest();
        doc["reports"] = Value::Array(
            self.reports
                .iter()
                .map(|r| json!({"name": r.name, "description": r.description, "data": r.data}))
                .collect(),
        );
        doc["tables"] = Value::Array(
            self.tables
                .iter()
                .map(|t| {
                    json!({
                        "name": t.name,
                        "description": t.description,
                        "columns": t.columns.iter().map(|c| c.0.clone()).collect::<Vec<_>>(),
                        "rows": t.rows,
                    })
                })
                .collect(),
        );
        pretty(&doc)
    }

    /// All tables as CSV, each preceded by a `# name` line when there are several.
    pub fn to_csv(&self) -> CliResult<String> {
        self.check_nonempty()?;
        if self.tables.is_empty() {
            return Err(CliError::invalid(format!("`{}` produces no CSV tables", self.command)));
        }
        let mut out = String::new();
        let many = self.tables.len() > 1;
        for (i, t) in self.tables.iter().enumerate() {
            if many {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&format!("# {}\n", t.name));
            }
            out.push_str(&t.to_csv()?);
        }
        Ok(out)
    }

    /// Writes `manifest.json`, one `<name>.json` per report and one
    /// `<name>.csv` per table into `dir`.
    ///
    /// Files are staged in a sibling directory first; an existing `dir` is
    /// replaced only if it is empty or holds an earlier bundle.
    pub fn write_dir(&self, dir: &Path) -> CliResult<()> {
        self.check_nonempty()?;
        let mut files: Vec<(String, String)> = vec![("manifest.json".into(), pretty(&self.manifest())?)];
        for r in &self.reports {
            files.push((format!("{}.json", r.name), pretty(&r.data)?));
        }
        for t in &self.tables {
            files.push((format!("{}.csv", t.name), t.to_csv()?));
        }
        if dir.exists() {
            let ok = dir.is_dir()
                && (dir.join("manifest.json").is_file()
                    || fs::read_dir(dir).map(|mut d| d.next().is_none()).unwrap_or(false));
            if !ok {
                return Err(CliError::io(format!(
                    "{} exists and is not an earlier report bundle; refusing to overwrite",
                    dir.display()
                )));
            }
        }
        let stage = sibling(dir, "partial")?;
        let io = |what: &str, p: &Path, e: std::io::Error| CliError::io(format!("{what} {}: {e}", p.display()));
        fs::create_dir_all(&stage).map_err(|e| io("cannot create", &stage, e))?;
        let staged = files.iter().try_for_each(|(name, body)| {
            let p = stage.join(name);
            fs::write(&p, body).map_err(|e| io("cannot write", &p, e))
        });
        if let Err(e) = staged {
            let _ = fs::remove_dir_all(&stage);
            return Err(e);
        }
        let old = sibling(dir, "old")?;
        if dir.exists() {
            fs::rename(dir, &old).map_err(|e| {
                let _ = fs::remove_dir_all(&stage);
                io("cannot move aside", dir, e)
            })?;
        }
        if let Err(e) = fs::rename(&stage, dir) {
            let _ = fs::rename(&old, dir);
            let _ = fs::remove_dir_all(&stage);
            return Err(io("cannot move into place", dir, e));
        }
        let _ = fs::remove_dir_all(&old);
        Ok(())
    }
}

fn sibling(dir: &Path, tag: &str) -> CliResult<PathBuf> {
    let name = dir
        .file_name()
        .ok_or_else(|| CliError::io(format!("{} has no final path component", dir.display())))?;
    let mut s = name.to_os_string();
    s.push(format!(".{tag}-{}", std::process::id()));
    Ok(dir.with_file_name(s))
}

fn pretty(v: &Value) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

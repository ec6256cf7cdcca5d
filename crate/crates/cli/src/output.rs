//! Artifact files: `manifest.json`, `norms.csv`, `report.json`, `series/*.dat`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use twofluid::decay_lab::NormSeries;

use crate::config::RunConfig;

/// One pass/fail check with the measured value and its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub key: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// `value <= tolerance`
    pub fn at_most(key: &str, value: f64, tolerance: f64) -> Self {
        Self { key: key.into(), value, tolerance, pass: value <= tolerance, detail: None }
    }

    /// `value >= tolerance`
    pub fn at_least(key: &str, value: f64, tolerance: f64) -> Self {
        Self { key: key.into(), value, tolerance, pass: value >= tolerance, detail: None }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub command: String,
    pub entries: Vec<Check>,
    pub all_pass: bool,
}

impl CheckReport {
    pub fn new(command: &str, entries: Vec<Check>) -> Self {
        let all_pass = entries.iter().all(|c| c.pass);
        Self { command: command.into(), entries, all_pass }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.entries {
            out.push_str(&format!(
                "{} {:<36} {:.4e} (bound {:e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.key,
                c.value,
                c.tolerance
            ));
            if let Some(d) = &c.detail {
                out.push_str(&format!("  [{d}]"));
            }
            out.push('\n');
        }
        out
    }

    pub fn failing_keys(&self) -> Vec<String> {
        self.entries.iter().filter(|c| !c.pass).map(|c| c.key.clone()).collect()
    }
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        fs::write(self.path(name), text + "\n")?;
        self.record(name);
        Ok(())
    }

    /// Long-format `t, quantity, ell, value`.
    pub fn write_norms(&mut self, series: &[NormSeries]) -> std::io::Result<()> {
        let file = BufWriter::new(fs::File::create(self.path("norms.csv"))?);
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["t", "quantity", "ell", "value"])?;
        for s in series {
            let quantity = quantity_name(s);
            let ell = s.tag.ell.to_string();
            for (t, v) in s.times.iter().zip(&s.values) {
                w.write_record([format!("{t:.9e}"), quantity.clone(), ell.clone(), format!("{v:.12e}")])?;
            }
        }
        w.flush()?;
        self.record("norms.csv");
        Ok(())
    }

    pub fn write_series(&mut self, series: &[NormSeries]) -> std::io::Result<()> {
        fs::create_dir_all(self.path("series"))?;
        for s in series {
            let name = format!("series/{}_ell{}.dat", quantity_name(s), s.tag.ell);
            let file = BufWriter::new(fs::File::create(self.path(&name))?);
            s.write_dat(file)?;
            self.record(&name);
        }
        Ok(())
    }

    /// Manifest echoing the resolved configuration; written last so it lists every artifact.
    pub fn write_manifest(&mut self, command: &str, config: &RunConfig, extra: serde_json::Value) -> std::io::Result<()> {
        self.record("manifest.json");
        let manifest = serde_json::json!({
            "command": command,
            "config": config,
            "versions": { "twofluid": env!("CARGO_PKG_VERSION") },
            "outputs": self.written,
            "run": extra,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        fs::write(self.path("manifest.json"), text + "\n")
    }
}

fn quantity_name(s: &NormSeries) -> String {
    use twofluid::decay_lab::NormKind;
    let norm = match s.tag.norm {
        NormKind::L2 => String::new(),
        NormKind::Besov { s, .. } => format!("_besov{s}"),
    };
    format!("{}{norm}", s.tag.group.name())
}

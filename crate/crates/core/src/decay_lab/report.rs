//! Verdicts comparing fitted and predicted exponents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::theory::TheoryTable;
use super::DecayFit;
use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub key: String,
    pub predicted: f64,
    pub fitted: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
    pub all_pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{} {:<40} predicted {:+.4} fitted {:+.4} +- {:.1e} dev {:.4} (tol {}) on [{}, {}]",
                if e.pass { "PASS" } else { "FAIL" },
                e.key,
                e.predicted,
                e.fitted,
                e.stderr,
                e.deviation,
                e.tolerance,
                e.window.0,
                e.window.1
            );
            if let Some(c) = &e.caveat {
                let _ = writeln!(out, "     note: {c}");
            }
        }
        let failed = self.entries.iter().filter(|e| !e.pass).count();
        let _ = writeln!(out, "{} of {} checks passed", self.entries.len() - failed, self.entries.len());
        out
    }

    pub fn failing_keys(&self) -> Vec<String> {
        self.entries.iter().filter(|e| !e.pass).map(|e| e.key.clone()).collect()
    }
}

/// Pairs fits with predictions key by key; `|fitted - predicted| <= tolerance` passes.
pub fn compile_report(fits: &BTreeMap<String, DecayFit>, table: &TheoryTable, tolerance: f64) -> Result<Report, LabError> {
    if fits.is_empty() {
        return Err(LabError::Empty);
    }
    let mut missing: Vec<String> = fits.keys().filter(|k| !table.entries.contains_key(*k)).cloned().collect();
    missing.extend(table.entries.keys().filter(|k| !fits.contains_key(*k)).cloned());
    if !missing.is_empty() {
        return Err(LabError::MissingKeys(missing));
    }
    let entries: Vec<ReportEntry> = fits
        .iter()
        .map(|(key, fit)| {
            let predicted = table.entries[key];
            let deviation = (fit.value - predicted).abs();
            let caveat = fit.crossover.map(|c| {
                format!("periodic box: algebraic decay is observable only before t ~ {c:.1}; corroborative only")
            });
            ReportEntry {
                key: key.clone(),
                predicted,
                fitted: fit.value,
                stderr: fit.stderr,
                window: fit.window,
                deviation,
                tolerance,
                pass: deviation <= tolerance,
                caveat,
            }
        })
        .collect();
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(Report { entries, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay_lab::{FitModel, Group, NormKind, QuantityTag};

    fn fit(value: f64) -> DecayFit {
        DecayFit {
            model: FitModel::Power,
            value,
            stderr: 1e-3,
            intercept: 0.0,
            r_squared: 1.0,
            window: (1e2, 1e4),
            points: 40,
            crossover: None,
            tag: QuantityTag { group: Group::Densities, ell: 0.0, norm: NormKind::L2 },
        }
    }

    fn table(v: f64) -> TheoryTable {
        TheoryTable { entries: [("densities:ell=0:s=1.5".to_string(), v)].into_iter().collect() }
    }

    #[test]
    fn verdicts() {
        let key = "densities:ell=0:s=1.5".to_string();
        let pass = compile_report(&[(key.clone(), fit(-0.76))].into_iter().collect(), &table(-0.75), 0.05).unwrap();
        assert!(pass.all_pass);
        let fail = compile_report(&[(key, fit(-0.50))].into_iter().collect(), &table(-0.75), 0.05).unwrap();
        assert!(!fail.all_pass);
        assert!((fail.entries[0].deviation - 0.25).abs() < 1e-12);
        let json: serde_json::Value = serde_json::from_str(&fail.to_json()).unwrap();
        for k in ["key", "predicted", "fitted", "stderr", "window", "pass"] {
            assert!(json["entries"][0].get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn empty_and_missing() {
        assert_eq!(compile_report(&BTreeMap::new(), &table(-0.75), 0.05), Err(LabError::Empty));
        let fits = [("velocities:ell=0:s=1.5".to_string(), fit(-1.25))].into_iter().collect();
        match compile_report(&fits, &table(-0.75), 0.05) {
            Err(LabError::MissingKeys(k)) => assert_eq!(k.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}

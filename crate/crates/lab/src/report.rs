//! Reports and their on-disk form.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};

/// Metrics and check outcomes for one seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
}

impl SeedResult {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.insert(name.into(), passed);
    }
}

/// How per-seed outcomes of one check combine into a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", content = "fraction", rename_all = "snake_case")]
pub enum Rule {
    /// Every seed must pass.
    All,
    /// At least this fraction of seeds.
    AtLeast(f64),
    /// Strictly more than this fraction of seeds.
    MoreThan(f64),
}

impl Rule {
    pub fn holds(self, passed: usize, total: usize) -> bool {
        if total == 0 {
            return false;
        }
        let frac = passed as f64 / total as f64;
        match self {
            Rule::All => passed == total,
            Rule::AtLeast(f) => frac >= f,
            Rule::MoreThan(f) => frac > f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub rule: Rule,
    pub seeds_passed: usize,
    pub seeds_total: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub seed: Option<u64>,
    pub message: String,
}

/// CSV plot data destined for `file` in the output directory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plot {
    pub file: String,
    #[serde(skip)]
    pub content: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub per_seed_ms: BTreeMap<u64, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: Experiment,
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub results: Vec<SeedResult>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub verdicts: Vec<Verdict>,
    pub plots: Vec<Plot>,
    pub errors: Vec<ErrorRecord>,
    pub timings: Timings,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
            && !self.verdicts.is_empty()
            && self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    /// Everything except wall-clock timings.
    pub fn same_results(&self, other: &Report) -> bool {
        let strip = |r: &Report| Report {
            timings: Timings::default(),
            ..r.clone()
        };
        strip(self) == strip(other)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Long-form results: one `seed,kind,name,value` row per metric or check.
    pub fn results_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["seed", "kind", "name", "value"])
            .expect("in-memory write");
        for r in &self.results {
            let seed = r.seed.to_string();
            for (k, v) in &r.metrics {
                w.write_record([seed.as_str(), "metric", k, &v.to_string()])
                    .expect("in-memory write");
            }
            for (k, v) in &r.checks {
                w.write_record([seed.as_str(), "check", k, if *v { "1" } else { "0" }])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

/// Combines per-seed checks into verdicts using `rules` (checks without a
/// rule default to `fallback`) and summarizes metrics.
pub(crate) fn assemble(
    results: &[SeedResult],
    rules: &[(&str, Rule)],
    fallback: Rule,
) -> (BTreeMap<String, Aggregate>, Vec<Verdict>) {
    let mut aggregates = BTreeMap::new();
    let mut names: Vec<&String> = results.iter().flat_map(|r| r.metrics.keys()).collect();
    names.sort();
    names.dedup();
    for name in names {
        let vals: Vec<f64> = results
            .iter()
            .filter_map(|r| r.metrics.get(name).copied())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        aggregates.insert(name.clone(), Aggregate { mean, min, max });
    }
    let mut checks: Vec<&String> = results.iter().flat_map(|r| r.checks.keys()).collect();
    checks.sort();
    checks.dedup();
    let verdicts = checks
        .into_iter()
        .map(|name| {
            let rule = rules
                .iter()
                .find(|(n, _)| n == name)
                .map_or(fallback, |(_, r)| *r);
            let outcomes: Vec<bool> = results
                .iter()
                .filter_map(|r| r.checks.get(name).copied())
                .collect();
            let passed = outcomes.iter().filter(|&&b| b).count();
            Verdict {
                check: name.clone(),
                rule,
                seeds_passed: passed,
                seeds_total: outcomes.len(),
                passed: rule.holds(passed, outcomes.len()),
            }
        })
        .collect();
    (aggregates, verdicts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Writes `report.json` or `results.csv`, plus every plot CSV, into `dir`.
/// Returns the written paths in order.
pub fn emit_report(report: &Report, format: Format, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let (name, body) = match format {
        Format::Json => ("report.json", report.to_json()),
        Format::Csv => ("results.csv", report.results_csv()),
    };
    let path = dir.join(name);
    fs::write(&path, body)?;
    written.push(path);
    for p in &report.plots {
        let path = dir.join(&p.file);
        fs::write(&path, &p.content)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> Report {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"born\"\ndim = 1\nseeds = [0]\n[field]\ncovariance = [[1.0]]\n",
        )
        .unwrap();
        Report {
            experiment: Experiment::Born,
            config_digest: cfg.digest(),
            config: cfg,
            results: vec![],
            aggregates: BTreeMap::new(),
            verdicts: vec![],
            plots: vec![],
            errors: vec![],
            timings: Timings::default(),
        }
    }

    #[test]
    fn empty_report_is_valid_json_with_empty_results() {
        let v: serde_json::Value = serde_json::from_str(&empty().to_json()).unwrap();
        assert_eq!(v["results"], serde_json::json!([]));
        assert!(!empty().passed());
    }

    #[test]
    fn rules() {
        assert!(Rule::All.holds(3, 3) && !Rule::All.holds(2, 3));
        assert!(Rule::AtLeast(0.95).holds(19, 20) && !Rule::AtLeast(0.95).holds(18, 20));
        assert!(Rule::MoreThan(0.5).holds(11, 20) && !Rule::MoreThan(0.5).holds(10, 20));
        assert!(!Rule::All.holds(0, 0));
    }

    #[test]
    fn assemble_combines_seeds() {
        let mut a = SeedResult::new(0);
        a.metric("x", 1.0);
        a.check("c", true);
        a.check("exact", true);
        let mut b = SeedResult::new(1);
        b.metric("x", 3.0);
        b.check("c", false);
        b.check("exact", true);
        let (agg, verdicts) = assemble(&[a, b], &[("exact", Rule::All)], Rule::AtLeast(0.5));
        assert_eq!(
            agg["x"],
            Aggregate {
                mean: 2.0,
                min: 1.0,
                max: 3.0
            }
        );
        assert_eq!(verdicts.len(), 2);
        assert!(verdicts.iter().all(|v| v.passed));
        assert_eq!(verdicts[0].check, "c");
        assert_eq!(verdicts[0].seeds_passed, 1);
    }

    #[test]
    fn emitting_twice_gives_identical_bytes() {
        let dir = std::env::temp_dir().join(format!("pcsft-report-{}", std::process::id()));
        let mut r = empty();
        r.plots.push(Plot {
            file: "p.csv".into(),
            content: "a,b\n1,2\n".into(),
        });
        let first = emit_report(&r, Format::Json, &dir).unwrap();
        let bytes: Vec<Vec<u8>> = first.iter().map(|p| fs::read(p).unwrap()).collect();
        let second = emit_report(&r, Format::Json, &dir).unwrap();
        assert_eq!(first, second);
        for (p, b) in second.iter().zip(&bytes) {
            assert_eq!(&fs::read(p).unwrap(), b);
        }
        emit_report(&r, Format::Csv, &dir).unwrap();
        assert_eq!(
            fs::read_to_string(dir.join("results.csv")).unwrap(),
            "seed,kind,name,value\n"
        );
        fs::remove_dir_all(&dir).unwrap();
    }
}

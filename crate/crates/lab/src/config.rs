//! Experiment configuration: a strict TOML schema.
//!
//! Unknown keys anywhere in the file are errors, and validation reports every
//! offending key at once rather than stopping at the first.

use std::fmt;

use num_complex::Complex;
use pcsft_core::{Basis, FieldSpec, Operator, StateVector, Superposition};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Sample a Gaussian field, estimate its state and compare detection
    /// probabilities with the Born rule.
    Born,
    /// Support of pure-field ensembles and the rank-one converse.
    Purestate,
    /// Common-driver superposition and its rank-one covariance.
    Superposition,
    /// Correlation decay under phase noise.
    Decoherence,
    /// Threshold race over a sweep of thresholds.
    DetectionSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Born => "born",
            Experiment::Purestate => "purestate",
            Experiment::Superposition => "superposition",
            Experiment::Decoherence => "decoherence",
            Experiment::DetectionSweep => "detection_sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_n() -> usize {
    100_000
}

fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}

fn default_out() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    /// Ensemble size per seed.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Race trials per threshold (detection_sweep only; default 10000).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default)]
    pub field: FieldParams,
    #[serde(default)]
    pub detector: DetectorParams,
    #[serde(default)]
    pub decoherence: DecoherenceParams,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Exactly one of `covariance`, `psi` or `coefficients` selects the field.
/// Matrices are lists of rows; `*_im` give optional imaginary parts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_im: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver_sigma2: Option<f64>,
    /// Rows are basis vectors (real). Used as the superposition basis and as
    /// the detector channels; the standard basis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    /// Thresholds in units of mean per-step channel energy, increasing.
    pub multiples: Vec<f64>,
    pub kappa: f64,
    pub max_steps: usize,
    pub dt: f64,
    /// Sweep point used for the label-symmetry check.
    pub symmetry_multiple: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            multiples: vec![5.0, 10.0, 20.0, 40.0],
            kappa: 0.1,
            max_steps: 100_000,
            dt: 1.0,
            symmetry_multiple: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoherenceParams {
    pub gammas: Vec<f64>,
}

impl Default for DecoherenceParams {
    fn default() -> Self {
        Self {
            gammas: vec![0.25, 0.5, 1.0, 2.0],
        }
    }
}

/// Every pass/fail threshold used by any experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Fraction of seeds a Monte Carlo check must pass.
    pub min_pass_fraction: f64,
    /// Fraction of seeds a monotonicity check must strictly exceed.
    pub monotone_majority: f64,
    /// Frobenius distance of the estimated state from the exact one.
    pub roundtrip_frobenius: f64,
    /// Same-data gap between ensemble and Born probabilities.
    pub identity_abs: f64,
    /// Gap between estimated and analytic probabilities.
    pub born_abs: f64,
    /// Largest off-line residual relative to sample norm for pure fields.
    pub support_rel: f64,
    /// Rank-one test used for the converse direction.
    pub converse_rank_one: f64,
    /// Rank-one test for superposition ensembles.
    pub rank_one: f64,
    pub min_abs_cor: f64,
    /// Frobenius distance of the empirical from the analytic covariance.
    pub cov_frobenius: f64,
    /// Relative error of nonzero off-diagonal covariance entries.
    pub offdiag_rel: f64,
    /// Deviation of decohered correlations from `e^{−γ}` times the original.
    pub decay_abs: f64,
    /// Same, for off-diagonals of the normalized state.
    pub image_abs: f64,
    /// Coincidence fraction required at the largest threshold.
    pub max_top_coincidence: f64,
    /// Binomial standard errors allowed between symmetric channels.
    pub symmetry_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            min_pass_fraction: 0.95,
            monotone_majority: 0.5,
            roundtrip_frobenius: 0.05,
            identity_abs: 1e-12,
            born_abs: 0.01,
            support_rel: 1e-15,
            converse_rank_one: 0.01,
            rank_one: 0.02,
            min_abs_cor: 0.99,
            cov_frobenius: 0.05,
            offdiag_rel: 0.02,
            decay_abs: 0.03,
            image_abs: 0.03,
            max_top_coincidence: 0.01,
            symmetry_se: 3.0,
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "experiment",
    "dim",
    "n",
    "n_trials",
    "seeds",
    "out",
    "field",
    "detector",
    "decoherence",
    "tolerances",
];
const FIELD_KEYS: &[&str] = &[
    "covariance",
    "covariance_im",
    "psi",
    "psi_im",
    "sigma2",
    "coefficients",
    "coefficients_im",
    "driver_sigma2",
    "basis",
];
const DETECTOR_KEYS: &[&str] = &["multiples", "kappa", "max_steps", "dt", "symmetry_multiple"];
const DECOHERENCE_KEYS: &[&str] = &["gammas"];
const TOLERANCE_KEYS: &[&str] = &[
    "min_pass_fraction",
    "monotone_majority",
    "roundtrip_frobenius",
    "identity_abs",
    "born_abs",
    "support_rel",
    "converse_rank_one",
    "rank_one",
    "min_abs_cor",
    "cov_frobenius",
    "offdiag_rel",
    "decay_abs",
    "image_abs",
    "max_top_coincidence",
    "symmetry_se",
];

/// One problem with a config, tied to a dotted key path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    pub fn keys(&self) -> Vec<&str> {
        self.issues.iter().map(|i| i.key.as_str()).collect()
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid config ({} problem(s)):", self.issues.len())?;
        for i in &self.issues {
            writeln!(f, "  {}: {}", i.key, i.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            key: key.into(),
            message: message.into(),
        });
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues: self.0 })
        }
    }
}

fn unknown_keys(table: &toml::Table, allowed: &[&str], prefix: &str, issues: &mut Issues) {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            issues.push(format!("{prefix}{key}"), "unknown key");
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
            issues: vec![ConfigIssue {
                key: "<file>".into(),
                message: e.message().to_string(),
            }],
        })?;
        let mut issues = Issues(Vec::new());
        unknown_keys(&table, TOP_KEYS, "", &mut issues);
        for (section, keys) in [
            ("field", FIELD_KEYS),
            ("detector", DETECTOR_KEYS),
            ("decoherence", DECOHERENCE_KEYS),
            ("tolerances", TOLERANCE_KEYS),
        ] {
            match table.get(section) {
                Some(toml::Value::Table(t)) => {
                    unknown_keys(t, keys, &format!("{section}."), &mut issues)
                }
                Some(_) => issues.push(section, "must be a table"),
                None => {}
            }
        }
        issues.finish()?;
        let cfg: ExperimentConfig =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError {
                    issues: vec![ConfigIssue {
                        key: "<file>".into(),
                        message: e.message().to_string(),
                    }],
                })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn n_trials(&self) -> usize {
        self.n_trials.unwrap_or(10_000)
    }

    /// Checks ranges and cross-field consistency; reports every problem.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Issues(Vec::new());
        if !(1..=256).contains(&self.dim) {
            issues.push("dim", format!("must be in 1..=256, got {}", self.dim));
        }
        if !(1..=100_000_000).contains(&self.n) {
            issues.push("n", format!("must be in 1..=1e8, got {}", self.n));
        }
        if let Some(t) = self.n_trials {
            if !(1..=10_000_000).contains(&t) {
                issues.push("n_trials", format!("must be in 1..=1e7, got {t}"));
            }
            if self.experiment != Experiment::DetectionSweep {
                issues.push("n_trials", "only used by detection_sweep");
            }
        }
        if self.seeds.is_empty() {
            issues.push("seeds", "need at least one seed");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            issues.push("seeds", "seeds must be distinct");
        }
        if self.out.is_empty() {
            issues.push("out", "must not be empty");
        }
        self.validate_field(&mut issues);
        self.validate_tolerances(&mut issues);
        match self.experiment {
            Experiment::Decoherence => {
                if self.decoherence.gammas.is_empty() {
                    issues.push("decoherence.gammas", "need at least one value");
                }
                if self
                    .decoherence
                    .gammas
                    .iter()
                    .any(|g| !(g.is_finite() && *g >= 0.0))
                {
                    issues.push("decoherence.gammas", "values must be finite and >= 0");
                }
            }
            Experiment::DetectionSweep => self.validate_detector(&mut issues),
            _ => {}
        }
        issues.finish()
    }

    fn validate_field(&self, issues: &mut Issues) {
        let f = &self.field;
        let given: Vec<&str> = [
            ("covariance", f.covariance.is_some()),
            ("psi", f.psi.is_some()),
            ("coefficients", f.coefficients.is_some()),
        ]
        .into_iter()
        .filter_map(|(k, on)| on.then_some(k))
        .collect();
        let allowed: &[&str] = match self.experiment {
            Experiment::Born => &["covariance"],
            Experiment::Purestate => &["psi"],
            Experiment::Superposition | Experiment::Decoherence => &["coefficients"],
            Experiment::DetectionSweep => &["covariance", "psi", "coefficients"],
        };
        match given.as_slice() {
            [] => issues.push(
                format!("field.{}", allowed[0]),
                format!("required for {}", self.experiment),
            ),
            [one] if allowed.contains(one) => {}
            [one] => issues.push(
                format!("field.{one}"),
                format!("not used by {}", self.experiment),
            ),
            many => {
                for k in many {
                    issues.push(
                        format!("field.{k}"),
                        "give exactly one of covariance, psi, coefficients",
                    );
                }
            }
        }
        let d = self.dim;
        for (key, m) in [
            ("field.covariance", &f.covariance),
            ("field.covariance_im", &f.covariance_im),
            ("field.basis", &f.basis),
        ] {
            if let Some(m) = m {
                if m.len() != d || m.iter().any(|r| r.len() != d) {
                    issues.push(key, format!("must be {d}x{d}"));
                } else if m.iter().flatten().any(|x| !x.is_finite()) {
                    issues.push(key, "entries must be finite");
                }
            }
        }
        for (key, v) in [
            ("field.psi", &f.psi),
            ("field.psi_im", &f.psi_im),
            ("field.coefficients", &f.coefficients),
            ("field.coefficients_im", &f.coefficients_im),
        ] {
            if let Some(v) = v {
                if v.len() != d {
                    issues.push(key, format!("must have {d} entries"));
                } else if v.iter().any(|x| !x.is_finite()) {
                    issues.push(key, "entries must be finite");
                }
            }
        }
        for (key, parent, im) in [
            (
                "field.covariance_im",
                f.covariance.is_some(),
                f.covariance_im.is_some(),
            ),
            ("field.psi_im", f.psi.is_some(), f.psi_im.is_some()),
            (
                "field.coefficients_im",
                f.coefficients.is_some(),
                f.coefficients_im.is_some(),
            ),
        ] {
            if im && !parent {
                issues.push(key, "given without its real part");
            }
        }
        for (key, v) in [
            ("field.sigma2", f.sigma2),
            ("field.driver_sigma2", f.driver_sigma2),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    issues.push(key, format!("must be > 0, got {v}"));
                }
            }
        }
        if issues.0.iter().any(|i| i.key.starts_with("field.")) {
            return;
        }
        if let Err(e) = self.basis() {
            issues.push("field.basis", e.to_string());
        }
        if let Err(e) = self.field_spec() {
            issues.push(
                format!("field.{}", given.first().copied().unwrap_or("covariance")),
                e.to_string(),
            );
        }
    }

    fn validate_tolerances(&self, issues: &mut Issues) {
        let t = &self.tolerances;
        for (key, v) in [
            ("min_pass_fraction", t.min_pass_fraction),
            ("monotone_majority", t.monotone_majority),
        ] {
            if !(0.0..=1.0).contains(&v) {
                issues.push(
                    format!("tolerances.{key}"),
                    format!("must be in [0, 1], got {v}"),
                );
            }
        }
        for (key, v) in [
            ("roundtrip_frobenius", t.roundtrip_frobenius),
            ("identity_abs", t.identity_abs),
            ("born_abs", t.born_abs),
            ("support_rel", t.support_rel),
            ("converse_rank_one", t.converse_rank_one),
            ("rank_one", t.rank_one),
            ("min_abs_cor", t.min_abs_cor),
            ("cov_frobenius", t.cov_frobenius),
            ("offdiag_rel", t.offdiag_rel),
            ("decay_abs", t.decay_abs),
            ("image_abs", t.image_abs),
            ("max_top_coincidence", t.max_top_coincidence),
            ("symmetry_se", t.symmetry_se),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                issues.push(
                    format!("tolerances.{key}"),
                    format!("must be finite and >= 0, got {v}"),
                );
            }
        }
    }

    fn validate_detector(&self, issues: &mut Issues) {
        let d = &self.detector;
        if d.multiples.is_empty() {
            issues.push("detector.multiples", "need at least one threshold");
        }
        if d.multiples.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            issues.push("detector.multiples", "values must be > 0");
        }
        if d.multiples.windows(2).any(|w| w[1] <= w[0]) {
            issues.push("detector.multiples", "must be strictly increasing");
        }
        if !(d.kappa.is_finite() && d.kappa >= 0.0) {
            issues.push("detector.kappa", format!("must be >= 0, got {}", d.kappa));
        }
        if d.max_steps == 0 {
            issues.push("detector.max_steps", "must be >= 1");
        }
        if !(d.dt.is_finite() && d.dt > 0.0) {
            issues.push("detector.dt", format!("must be > 0, got {}", d.dt));
        }
        if !d.multiples.contains(&d.symmetry_multiple) {
            issues.push(
                "detector.symmetry_multiple",
                "must be one of detector.multiples",
            );
        }
    }

    /// Channel / construction basis.
    pub fn basis(&self) -> pcsft_core::Result<Basis<f64>> {
        match &self.field.basis {
            None => Ok(Basis::standard(self.dim)),
            Some(rows) => Basis::new(
                rows.iter()
                    .map(|r| StateVector::from_real(r))
                    .collect::<Result<_, _>>()?,
            ),
        }
    }

    fn vector(re: &[f64], im: Option<&Vec<f64>>) -> pcsft_core::Result<StateVector<f64>> {
        let zeros = vec![0.0; re.len()];
        let im = im.map(Vec::as_slice).unwrap_or(&zeros);
        StateVector::new(
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex::new(a, b))
                .collect(),
        )
    }

    pub fn covariance(&self) -> Option<pcsft_core::Result<Operator>> {
        let re = self.field.covariance.as_ref()?;
        let d = self.dim;
        let entries = (0..d * d)
            .map(|i| {
                let (r, c) = (i / d, i % d);
                let im = self.field.covariance_im.as_ref().map_or(0.0, |m| m[r][c]);
                Complex::new(re[r][c], im)
            })
            .collect();
        Some(Operator::from_entries(d, entries))
    }

    pub fn superposition(&self) -> Option<pcsft_core::Result<Superposition>> {
        let c = self.field.coefficients.as_ref()?;
        Some((|| {
            let coeffs = Self::vector(c, self.field.coefficients_im.as_ref())?;
            Superposition::new(
                coeffs,
                self.field.driver_sigma2.unwrap_or(1.0),
                self.basis()?,
            )
        })())
    }

    /// The generative field the config describes.
    pub fn field_spec(&self) -> pcsft_core::Result<FieldSpec<f64>> {
        if let Some(b) = self.covariance() {
            return FieldSpec::gaussian(b?);
        }
        if let Some(psi) = &self.field.psi {
            let psi = Self::vector(psi, self.field.psi_im.as_ref())?;
            return FieldSpec::pure(psi, self.field.sigma2.unwrap_or(1.0));
        }
        if let Some(s) = self.superposition() {
            return Ok(FieldSpec::superposition(s?));
        }
        Err(pcsft_core::Error::InvalidInput("no field given".into()))
    }
}

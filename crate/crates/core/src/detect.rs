//! Detection: channel energies, a threshold race and second-order coherence.
//!
//! The ensemble layer turns channel energies into probabilities. The race
//! layer produces discrete clicks: in every trial each channel `k` integrates
//! `dt·|⟨e_k|φ(t)⟩ + n_k(t)|²` over a fresh field stream, where `n_k` is
//! independent background noise of variance `κ`. The first channel to exceed
//! the threshold clicks; several crossing on the same step is a coincidence.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::fieldsim::{FieldEnsemble, FieldSpec, Sampler};
use crate::linops::Basis;
use crate::rng::{circular_normal, substream, Purpose, CHUNK};
use crate::scalar::Real;

/// `p(k) = Σᵢ|⟨e_k|φᵢ⟩|² / Σ_k Σᵢ|⟨e_k|φᵢ⟩|²`.
pub fn ensemble_detection_probs<T: Real>(e: &FieldEnsemble<T>, basis: &Basis<T>) -> Result<Vec<T>> {
    check_dim(basis.dim(), e.dim())?;
    let d = e.dim();
    let partial: Vec<Vec<T>> = e
        .flat()
        .par_chunks(CHUNK * d)
        .map(|block| {
            let mut acc = vec![T::zero(); d];
            let mut xi = vec![Complex::new(T::zero(), T::zero()); d];
            for row in block.chunks_exact(d) {
                basis.coordinates_into(row, &mut xi);
                for (a, x) in acc.iter_mut().zip(&xi) {
                    *a = *a + x.norm_sqr();
                }
            }
            acc
        })
        .collect();
    let mut num = vec![T::zero(); d];
    for p in &partial {
        for (n, x) in num.iter_mut().zip(p) {
            *n = *n + *x;
        }
    }
    let total = num.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Err(Error::ZeroField {
            trace: total.as_f64(),
        });
    }
    Ok(num.into_iter().map(|x| x / total).collect())
}

/// Threshold-race detector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorConfig<T: Real> {
    pub basis: Basis<T>,
    /// Absolute energy a channel must exceed.
    pub threshold: T,
    /// Variance of the independent per-channel background.
    pub background_kappa: T,
    pub max_steps: usize,
    pub dt: T,
}

impl<T: Real> DetectorConfig<T> {
    pub fn new(
        basis: Basis<T>,
        threshold: T,
        background_kappa: T,
        max_steps: usize,
        dt: T,
    ) -> Result<Self> {
        let cfg = Self {
            basis,
            threshold,
            background_kappa,
            max_steps,
            dt,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Threshold given as a multiple of [`mean_step_energy`].
    pub fn with_multiple(
        spec: &FieldSpec<T>,
        basis: Basis<T>,
        multiple: T,
        background_kappa: T,
        max_steps: usize,
        dt: T,
    ) -> Result<Self> {
        let unit = mean_step_energy(spec, background_kappa, dt);
        Self::new(basis, multiple * unit, background_kappa, max_steps, dt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > T::zero()) || !self.threshold.is_finite() {
            return Err(invalid(format!(
                "threshold must be > 0, got {}",
                self.threshold
            )));
        }
        if !(self.background_kappa >= T::zero()) || !self.background_kappa.is_finite() {
            return Err(invalid(format!(
                "background_kappa must be >= 0, got {}",
                self.background_kappa
            )));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps must be >= 1"));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Average energy one channel collects per step: `(Tr B / dim + κ)·dt`.
pub fn mean_step_energy<T: Real>(spec: &FieldSpec<T>, kappa: T, dt: T) -> T {
    let d = T::from_usize(spec.dim()).expect("dim fits");
    (spec.covariance().trace() / d + kappa) * dt
}

/// Integer tallies from threshold trials. Merging is plain addition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DetectionStats {
    pub trials: u64,
    /// Trials won by exactly this channel.
    pub clicks_per_channel: Vec<u64>,
    /// Trials where two or more channels crossed on the deciding step.
    pub coincidences: u64,
    pub no_click_trials: u64,
    /// Trials in which this channel crossed (alone or in a coincidence).
    pub crossings_per_channel: Vec<u64>,
    /// Row-major `dim × dim`; entry `(k, m)` counts trials where both crossed.
    pub joint_crossings: Vec<u64>,
}

impl DetectionStats {
    pub fn new(channels: usize) -> Self {
        Self {
            trials: 0,
            clicks_per_channel: vec![0; channels],
            coincidences: 0,
            no_click_trials: 0,
            crossings_per_channel: vec![0; channels],
            joint_crossings: vec![0; channels * channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.clicks_per_channel.len()
    }

    /// Classifies one trial from its crossing indicators.
    pub fn record(&mut self, crossed: &[bool]) {
        let d = self.channels();
        assert_eq!(crossed.len(), d, "indicator length");
        self.trials += 1;
        let hits: Vec<usize> = (0..d).filter(|&k| crossed[k]).collect();
        match hits.len() {
            0 => self.no_click_trials += 1,
            1 => self.clicks_per_channel[hits[0]] += 1,
            _ => self.coincidences += 1,
        }
        for &k in &hits {
            self.crossings_per_channel[k] += 1;
            for &m in &hits {
                self.joint_crossings[k * d + m] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &DetectionStats) {
        assert_eq!(self.channels(), other.channels(), "channel count");
        self.trials += other.trials;
        self.coincidences += other.coincidences;
        self.no_click_trials += other.no_click_trials;
        for (a, b) in self
            .clicks_per_channel
            .iter_mut()
            .zip(&other.clicks_per_channel)
        {
            *a += b;
        }
        for (a, b) in self
            .crossings_per_channel
            .iter_mut()
            .zip(&other.crossings_per_channel)
        {
            *a += b;
        }
        for (a, b) in self.joint_crossings.iter_mut().zip(&other.joint_crossings) {
            *a += b;
        }
    }

    pub fn single_clicks(&self) -> u64 {
        self.clicks_per_channel.iter().sum()
    }

    /// Trials with at least one crossing.
    pub fn clicking_trials(&self) -> u64 {
        self.single_clicks() + self.coincidences
    }

    /// Single-click frequency per channel, conditional on a click. All zero if
    /// nothing clicked.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.clicking_trials();
        self.clicks_per_channel
            .iter()
            .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect()
    }

    pub fn coincidence_fraction(&self) -> f64 {
        ratio(self.coincidences, self.trials)
    }

    pub fn no_click_fraction(&self) -> f64 {
        ratio(self.no_click_trials, self.trials)
    }

    pub fn is_partition(&self) -> bool {
        self.single_clicks() + self.coincidences + self.no_click_trials == self.trials
    }

    /// Counts plus derived fractions and every defined pairwise `g²`.
    pub fn report(&self) -> DetectionReport<'_> {
        let d = self.channels();
        let mut g2 = Vec::new();
        for k in 0..d {
            for m in (k + 1)..d {
                g2.push(PairG2 {
                    k,
                    m,
                    g2: g2_zero(self, (k, m)).ok(),
                });
            }
        }
        DetectionReport {
            stats: self,
            frequencies: self.frequencies(),
            coincidence_fraction: self.coincidence_fraction(),
            no_click_fraction: self.no_click_fraction(),
            g2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.report()).expect("report serializes")
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairG2 {
    pub k: usize,
    pub m: usize,
    /// `None` when a marginal is zero.
    pub g2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionReport<'a> {
    #[serde(flatten)]
    pub stats: &'a DetectionStats,
    pub frequencies: Vec<f64>,
    pub coincidence_fraction: f64,
    pub no_click_fraction: f64,
    pub g2: Vec<PairG2>,
}

/// `g² = P̂(k and m cross) / (P̂(k)·P̂(m))` from per-trial indicators.
pub fn g2_zero(stats: &DetectionStats, pair: (usize, usize)) -> Result<f64> {
    let (k, m) = pair;
    let d = stats.channels();
    if k >= d || m >= d || k == m {
        return Err(invalid(format!(
            "channel pair ({k}, {m}) invalid for {d} channels"
        )));
    }
    for c in [k, m] {
        if stats.crossings_per_channel[c] == 0 {
            return Err(Error::UndefinedG2 { channel: c });
        }
    }
    let n = stats.trials as f64;
    let pk = stats.crossings_per_channel[k] as f64 / n;
    let pm = stats.crossings_per_channel[m] as f64 / n;
    let pkm = stats.joint_crossings[k * d + m] as f64 / n;
    Ok(pkm / (pk * pm))
}

/// Runs `n_trials` independent races. Trial `i` draws from its own substream,
/// so results are identical for any thread count.
pub fn run_threshold_trials<T: Real>(
    spec: &FieldSpec<T>,
    cfg: &DetectorConfig<T>,
    n_trials: usize,
    seed: u64,
) -> Result<DetectionStats> {
    cfg.validate()?;
    check_dim(cfg.basis.dim(), spec.dim())?;
    if n_trials == 0 {
        return Err(invalid("n_trials must be >= 1"));
    }
    let sampler = Sampler::compile(spec)?;
    let d = spec.dim();
    let kappa = cfg.background_kappa.as_f64();
    let n_chunks = n_trials.div_ceil(CHUNK);
    let parts: Vec<DetectionStats> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut stats = DetectionStats::new(d);
            let mut scratch = sampler.scratch();
            let zero = Complex::new(T::zero(), T::zero());
            let mut phi = vec![zero; d];
            let mut xi = vec![zero; d];
            let mut acc = vec![T::zero(); d];
            let mut crossed = vec![false; d];
            for i in c * CHUNK..n_trials.min((c + 1) * CHUNK) {
                let mut rng = substream(seed, Purpose::Detection, i as u64);
                acc.iter_mut().for_each(|a| *a = T::zero());
                crossed.iter_mut().for_each(|x| *x = false);
                for _ in 0..cfg.max_steps {
                    sampler.draw(&mut rng, &mut phi, &mut scratch);
                    cfg.basis.coordinates_into(&phi, &mut xi);
                    if kappa > 0.0 {
                        for x in xi.iter_mut() {
                            *x = *x + circular_normal::<T, _>(&mut rng, kappa);
                        }
                    }
                    let mut any = false;
                    for k in 0..d {
                        acc[k] = acc[k] + cfg.dt * xi[k].norm_sqr();
                        if acc[k] > cfg.threshold {
                            crossed[k] = true;
                            any = true;
                        }
                    }
                    if any {
                        break;
                    }
                }
                stats.record(&crossed);
            }
            stats
        })
        .collect();
    let mut total = DetectionStats::new(d);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// One threshold of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Threshold in units of the mean per-step channel energy.
    pub multiple: f64,
    pub threshold: f64,
    pub stats: DetectionStats,
}

impl SweepPoint {
    pub fn g2(&self, pair: (usize, usize)) -> Option<f64> {
        g2_zero(&self.stats, pair).ok()
    }
}

/// Runs the race at each threshold multiple with the same seed.
#[allow(clippy::too_many_arguments)]
pub fn threshold_sweep<T: Real>(
    spec: &FieldSpec<T>,
    basis: &Basis<T>,
    multiples: &[T],
    background_kappa: T,
    max_steps: usize,
    dt: T,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    multiples
        .iter()
        .map(|&m| {
            let cfg = DetectorConfig::with_multiple(
                spec,
                basis.clone(),
                m,
                background_kappa,
                max_steps,
                dt,
            )?;
            let stats = run_threshold_trials(spec, &cfg, n_trials, seed)?;
            Ok(SweepPoint {
                multiple: m.as_f64(),
                threshold: cfg.threshold.as_f64(),
                stats,
            })
        })
        .collect()
}

/// CSV with columns `threshold, freq_1..freq_k, coincidence, g2, noclick`.
/// `threshold` is the multiple of mean step energy; `g2` is for channels
/// 1 and 2 and left empty when undefined.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut w: W) -> Result<()> {
    let d = points
        .first()
        .map(|p| p.stats.channels())
        .ok_or_else(|| invalid("empty sweep"))?;
    let mut header = vec!["threshold".to_string()];
    header.extend((1..=d).map(|k| format!("freq_{k}")));
    header.extend(["coincidence", "g2", "noclick"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for p in points {
        let mut row = vec![p.multiple.to_string()];
        row.extend(p.stats.frequencies().iter().map(f64::to_string));
        row.push(p.stats.coincidence_fraction().to_string());
        row.push(if d >= 2 {
            p.g2((0, 1)).map(|g| g.to_string()).unwrap_or_default()
        } else {
            String::new()
        });
        row.push(p.stats.no_click_fraction().to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{HermitianOperator, StateVector};
    use crate::superpos::SuperpositionSpec;
    use rand::Rng;

    fn sym_spec() -> FieldSpec<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        FieldSpec::superposition(
            SuperpositionSpec::standard(StateVector::from_real(&[h, h]).unwrap(), 1.0).unwrap(),
        )
    }

    #[test]
    fn ensemble_probs_examples() {
        let e = FieldEnsemble::from_samples(&[
            StateVector::from_real(&[1.0, 0.0]).unwrap(),
            StateVector::from_real(&[0.0, 2.0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            ensemble_detection_probs(&e, &Basis::standard(2)).unwrap(),
            vec![0.2, 0.8]
        );

        let z = FieldEnsemble::from_samples(&[StateVector::<f64>::zeros(2)]).unwrap();
        assert!(matches!(
            ensemble_detection_probs(&z, &Basis::standard(2)),
            Err(Error::ZeroField { .. })
        ));
    }

    #[test]
    fn ensemble_probs_converge() {
        let b = HermitianOperator::diagonal(&[1.0, 3.0]);
        let e = FieldSpec::gaussian(b).unwrap().sample(100_000, 5).unwrap();
        let p: Vec<f64> = ensemble_detection_probs(&e, &Basis::standard(2)).unwrap();
        assert!((p[0] - 0.25).abs() < 0.01 && (p[1] - 0.75).abs() < 0.01);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let b = Basis::<f64>::standard(2);
        assert!(DetectorConfig::new(b.clone(), 0.0, 0.1, 10, 1.0).is_err());
        assert!(DetectorConfig::new(b.clone(), 1.0, -0.1, 10, 1.0).is_err());
        assert!(DetectorConfig::new(b.clone(), 1.0, 0.1, 0, 1.0).is_err());
        assert!(DetectorConfig::new(b.clone(), 1.0, 0.1, 10, 0.0).is_err());
        assert!(DetectorConfig::new(b, 1.0, 0.0, 10, 1.0).is_ok());
    }

    #[test]
    fn mean_step_energy_example() {
        let e = mean_step_energy(&sym_spec(), 0.1, 1.0);
        assert!((e - 0.6).abs() < 1e-15);
    }

    #[test]
    fn pure_field_clicks_only_its_channel() {
        let spec = FieldSpec::pure(StateVector::<f64>::basis(2, 0), 1.0).unwrap();
        let cfg = DetectorConfig::with_multiple(&spec, Basis::standard(2), 10.0, 0.0, 1_000, 1.0)
            .unwrap();
        let s = run_threshold_trials(&spec, &cfg, 2_000, 3).unwrap();
        assert_eq!(s.clicks_per_channel[1], 0);
        assert_eq!(s.coincidences, 0);
        assert_eq!(s.clicks_per_channel[0] + s.no_click_trials, 2_000);
        assert!(s.clicks_per_channel[0] > 0);
    }

    #[test]
    fn symmetric_superposition_frequencies() {
        let spec = sym_spec();
        let cfg = DetectorConfig::with_multiple(&spec, Basis::standard(2), 20.0, 0.1, 10_000, 1.0)
            .unwrap();
        let s = run_threshold_trials(&spec, &cfg, 10_000, 11).unwrap();
        assert!(s.is_partition());
        let f = s.frequencies();
        let n = s.clicking_trials() as f64;
        let mean = 0.5 * (f[0] + f[1]);
        let se = (mean * (1.0 - mean) / n).sqrt();
        assert!((f[0] - f[1]).abs() <= 3.0 * se * 2f64.sqrt(), "{f:?}");
    }

    #[test]
    fn determinism_and_thread_invariance() {
        let spec = sym_spec();
        let cfg =
            DetectorConfig::with_multiple(&spec, Basis::standard(2), 5.0, 0.1, 1_000, 1.0).unwrap();
        let a = run_threshold_trials(&spec, &cfg, 9_000, 4).unwrap();
        let b = run_threshold_trials(&spec, &cfg, 9_000, 4).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| run_threshold_trials(&spec, &cfg, 9_000, 4).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn g2_examples() {
        let mut s = DetectionStats::new(2);
        s.record(&[true, false]);
        s.record(&[false, true]);
        assert_eq!(g2_zero(&s, (0, 1)).unwrap(), 0.0);

        let mut s = DetectionStats::new(2);
        for _ in 0..5 {
            s.record(&[true, true]);
            s.record(&[false, false]);
        }
        assert_eq!(g2_zero(&s, (0, 1)).unwrap(), 2.0);
        assert!(s.is_partition());

        let mut s = DetectionStats::new(2);
        s.record(&[true, false]);
        assert!(matches!(
            g2_zero(&s, (0, 1)),
            Err(Error::UndefinedG2 { channel: 1 })
        ));
        assert!(g2_zero(&s, (0, 0)).is_err());
    }

    #[test]
    fn g2_of_independent_indicators_tends_to_one() {
        let mut rng = substream(1, Purpose::Detection, 0);
        let mut s = DetectionStats::new(2);
        for _ in 0..400_000 {
            s.record(&[rng.random_bool(0.3), rng.random_bool(0.3)]);
        }
        assert!((g2_zero(&s, (0, 1)).unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = DetectionStats::new(2);
        a.record(&[true, false]);
        let mut b = DetectionStats::new(2);
        b.record(&[true, true]);
        b.record(&[false, false]);
        a.merge(&b);
        assert_eq!(a.trials, 3);
        assert_eq!(a.clicks_per_channel, vec![1, 0]);
        assert_eq!((a.coincidences, a.no_click_trials), (1, 1));
        assert_eq!(a.crossings_per_channel, vec![2, 1]);
        assert!(a.is_partition());
    }

    #[test]
    fn sweep_csv_schema() {
        let spec = sym_spec();
        let pts = threshold_sweep(
            &spec,
            &Basis::standard(2),
            &[5.0, 10.0],
            0.1,
            1_000,
            1.0,
            500,
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "threshold,freq_1,freq_2,coincidence,g2,noclick"
        );
        assert!(lines.next().unwrap().starts_with("5,"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn report_json_has_derived_fields() {
        let mut s = DetectionStats::new(2);
        s.record(&[true, false]);
        s.record(&[true, true]);
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["trials"], 2);
        assert_eq!(v["coincidence_fraction"], 0.5);
        assert_eq!(v["g2"][0]["g2"], 1.0);
    }
}

//! The five experiment pipelines.

use std::time::Instant;

use pcsft_core::detect::write_sweep_csv;
use pcsft_core::{
    born_probabilities, correlation_matrix, decohere, energy_along, ensemble_detection_probs,
    ensemble_stats, frobenius_distance, rank_one_check, superpose_max_correlated, threshold_sweep,
    to_epistemic, Basis, ComponentSignals, FieldSpec, StateVector,
};
use rayon::prelude::*;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::report::{assemble, ErrorRecord, Plot, Report, Rule, SeedResult, Timings};

type CoreResult<T> = pcsft_core::Result<T>;

/// Rows contributed by one seed to a plot file.
struct PlotPart {
    file: String,
    header: String,
    rows: String,
}

struct SeedOutput {
    result: SeedResult,
    plots: Vec<PlotPart>,
}

/// Runs every seed of `cfg` and assembles the report. Seeds that fail at
/// runtime are recorded in `errors`; the remaining seeds still report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, ConfigError> {
    cfg.validate()?;
    let start = Instant::now();
    let outcomes: Vec<(u64, f64, CoreResult<SeedOutput>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let t = Instant::now();
            let out = run_seed(cfg, seed);
            (seed, t.elapsed().as_secs_f64() * 1e3, out)
        })
        .collect();

    let mut results = Vec::new();
    let mut errors = Vec::new();
    let mut timings = Timings::default();
    let mut plots: Vec<Plot> = Vec::new();
    for (seed, ms, out) in outcomes {
        timings.per_seed_ms.insert(seed, ms);
        match out {
            Ok(o) => {
                results.push(o.result);
                for part in o.plots {
                    match plots.iter_mut().find(|p| p.file == part.file) {
                        Some(p) => p.content.push_str(&part.rows),
                        None => plots.push(Plot {
                            file: part.file,
                            content: part.header + &part.rows,
                        }),
                    }
                }
            }
            Err(e) => errors.push(ErrorRecord {
                seed: Some(seed),
                message: e.to_string(),
            }),
        }
    }
    let t = &cfg.tolerances;
    let stat = Rule::AtLeast(t.min_pass_fraction);
    let rules: Vec<(&str, Rule)> = vec![
        ("identity", Rule::All),
        ("support", Rule::All),
        ("converse", Rule::All),
        ("partition", Rule::All),
        ("coincidence_monotone", Rule::MoreThan(t.monotone_majority)),
        ("g2_monotone", Rule::MoreThan(t.monotone_majority)),
    ];
    let (aggregates, verdicts) = assemble(&results, &rules, stat);
    timings.total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(Report {
        experiment: cfg.experiment,
        config_digest: cfg.digest(),
        config: cfg.clone(),
        results,
        aggregates,
        verdicts,
        plots,
        errors,
        timings,
    })
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> CoreResult<SeedOutput> {
    match cfg.experiment {
        Experiment::Born => born(cfg, seed),
        Experiment::Purestate => purestate(cfg, seed),
        Experiment::Superposition => superposition(cfg, seed),
        Experiment::Decoherence => decoherence(cfg, seed),
        Experiment::DetectionSweep => detection_sweep(cfg, seed),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Empirical state against the exact one, and detection probabilities
/// computed from channel energies against the Born rule.
fn born(cfg: &ExperimentConfig, seed: u64) -> CoreResult<SeedOutput> {
    let t = &cfg.tolerances;
    let spec = cfg.field_spec()?;
    let basis = cfg.basis()?;
    let rho = to_epistemic(&spec.covariance())?.rho;
    let e = spec.sample(cfg.n, seed)?;
    let stats = ensemble_stats(&e)?;
    let rho_hat = to_epistemic(&stats.covariance)?.rho;

    let p_ens = ensemble_detection_probs(&e, &basis)?;
    let p_hat = born_probabilities(&rho_hat, &basis)?;
    let p_exact = born_probabilities(&rho, &basis)?;
    let p_energy = basis
        .vectors()
        .iter()
        .map(|v| Ok(energy_along(&e, v)? / stats.dispersion))
        .collect::<CoreResult<Vec<f64>>>()?;

    let mut r = SeedResult::new(seed);
    let rho_distance = frobenius_distance(rho_hat.operator(), rho.operator())?;
    let identity_gap = max_abs_diff(&p_ens, &p_hat);
    let born_gap = max_abs_diff(&p_ens, &p_exact).max(max_abs_diff(&p_hat, &p_exact));
    let energy_gap = max_abs_diff(&p_energy, &p_exact);
    for k in 0..basis.dim() {
        r.metric(format!("p_ensemble_{}", k + 1), p_ens[k]);
        r.metric(format!("p_born_empirical_{}", k + 1), p_hat[k]);
        r.metric(format!("p_born_exact_{}", k + 1), p_exact[k]);
        r.metric(format!("p_energy_{}", k + 1), p_energy[k]);
    }
    r.metric("rho_distance", rho_distance);
    r.metric("identity_gap", identity_gap);
    r.metric("born_gap", born_gap);
    r.metric("energy_gap", energy_gap);
    r.metric("dispersion", stats.dispersion);
    r.check("roundtrip", rho_distance <= t.roundtrip_frobenius);
    r.check("identity", identity_gap <= t.identity_abs);
    r.check("born", born_gap <= t.born_abs);
    r.check("energy_path", energy_gap <= t.born_abs);
    Ok(SeedOutput {
        result: r,
        plots: vec![],
    })
}

/// Pure fields stay on their line; rank-one estimates imply maximal
/// correlation between components.
fn purestate(cfg: &ExperimentConfig, seed: u64) -> CoreResult<SeedOutput> {
    let t = &cfg.tolerances;
    let spec = cfg.field_spec()?;
    let psi = match spec.kind() {
        pcsft_core::fieldsim::FieldKind::Pure { psi, .. } => psi.normalized()?,
        _ => unreachable!("validated: purestate uses psi"),
    };
    let e = spec.sample(cfg.n, seed)?;
    let mut worst: f64 = 0.0;
    for phi in e.samples() {
        let along = psi.inner(&StateVector::new(phi.to_vec())?)?;
        let off: f64 = phi
            .iter()
            .zip(psi.amplitudes())
            .map(|(p, a)| (p - a * along).norm_sqr())
            .sum();
        let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        if norm > 0.0 {
            worst = worst.max((off / norm).sqrt());
        }
    }
    let mut r = SeedResult::new(seed);
    r.metric("off_line_residual", worst);
    r.check("support", worst <= t.support_rel);

    let b_hat = ensemble_stats(&e)?.covariance;
    let rk = rank_one_check(&b_hat, t.converse_rank_one)?;
    r.metric("rank_one_ratio", rk.ratio);
    let cs = ComponentSignals::from_ensemble(&e, &Basis::standard(e.dim()))?;
    let min_cor = correlation_matrix(&cs).min_offdiag_modulus();
    if let Some(c) = min_cor {
        r.metric("min_abs_cor", c);
    }
    r.check("rank_one", rk.is_rank_one);
    r.check(
        "converse",
        !rk.is_rank_one || min_cor.is_none_or(|c| c >= t.min_abs_cor),
    );
    Ok(SeedOutput {
        result: r,
        plots: vec![],
    })
}

/// Common-driver construction: covariance, rank one, correlation, and
/// off-diagonal entries against `σ²_η c_k c̄_m`.
fn superposition(cfg: &ExperimentConfig, seed: u64) -> CoreResult<SeedOutput> {
    let t = &cfg.tolerances;
    let spec = cfg.superposition().expect("validated")?;
    let (e, cs) = superpose_max_correlated(&spec, cfg.n, seed)?;
    let b = spec.analytic_covariance();
    let b_hat = ensemble_stats(&e)?.covariance;
    let mut r = SeedResult::new(seed);

    let dist = frobenius_distance(&b_hat, &b)?;
    r.metric("cov_distance", dist);
    r.check("covariance", dist <= t.cov_frobenius);

    let rk = rank_one_check(&b_hat, t.rank_one)?;
    r.metric("rank_one_ratio", rk.ratio);
    r.metric(
        "psi_overlap",
        rk.psi_hat.inner(&spec.psi().normalized()?)?.norm(),
    );
    r.check("rank_one", rk.is_rank_one);

    if let Some(c) = correlation_matrix(&cs).min_offdiag_modulus() {
        r.metric("min_abs_cor", c);
        r.check("correlation", c >= t.min_abs_cor);
    }

    let scale = b.matrix().max_abs();
    let mut worst: Option<f64> = None;
    for k in 0..b.dim() {
        for m in 0..b.dim() {
            let want = b.get(k, m);
            if k != m && want.norm() > 1e-12 * scale {
                let rel = (b_hat.get(k, m) - want).norm() / want.norm();
                worst = Some(worst.map_or(rel, |w| w.max(rel)));
            }
        }
    }
    if let Some(w) = worst {
        r.metric("offdiag_rel_err", w);
        r.check("offdiag", w <= t.offdiag_rel);
    }
    for k in 0..b.dim() {
        for m in (k + 1)..b.dim() {
            r.metric(format!("b_{}{}_re", k + 1, m + 1), b_hat.get(k, m).re);
            r.metric(format!("b_{}{}_im", k + 1, m + 1), b_hat.get(k, m).im);
        }
    }
    Ok(SeedOutput {
        result: r,
        plots: vec![],
    })
}

/// Phase noise of strength γ: correlations and state off-diagonals should
/// shrink by `e^{−γ}`.
fn decoherence(cfg: &ExperimentConfig, seed: u64) -> CoreResult<SeedOutput> {
    let t = &cfg.tolerances;
    let spec = cfg.superposition().expect("validated")?;
    let (_, cs) = superpose_max_correlated(&spec, cfg.n, seed)?;
    let d = cs.dim();
    let cor0 = correlation_matrix(&cs);
    let rho0 = to_epistemic(&cs.covariance())?.rho;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|k| ((k + 1)..d).map(move |m| (k, m)))
        .filter(|&(k, m)| cor0.get(k, m).is_some_and(|z| z.norm() > 0.0))
        .collect();

    let mut r = SeedResult::new(seed);
    let mut rows = String::new();
    let mut decay_err: f64 = 0.0;
    let mut image_err: f64 = 0.0;
    for &gamma in &cfg.decoherence.gammas {
        let out = decohere(&cs, gamma, seed)?;
        let cor = correlation_matrix(&out);
        let rho = to_epistemic(&out.covariance())?.rho;
        let damp = (-gamma).exp();
        let (mut cor_sum, mut factor_sum, mut img_sum) = (0.0, 0.0, 0.0);
        for &(k, m) in &pairs {
            let before = cor0.get(k, m).expect("filtered").norm();
            let after = cor.get(k, m).map_or(0.0, |z| z.norm());
            let img_before = rho0.operator().get(k, m).norm();
            let img_after = rho.operator().get(k, m).norm();
            decay_err = decay_err.max((after - damp * before).abs());
            image_err = image_err.max((img_after - damp * img_before).abs());
            cor_sum += after;
            factor_sum += after / before;
            img_sum += img_after;
        }
        if !pairs.is_empty() {
            let np = pairs.len() as f64;
            r.metric(format!("cor@{gamma}"), cor_sum / np);
            r.metric(format!("factor@{gamma}"), factor_sum / np);
            r.metric(format!("image_offdiag@{gamma}"), img_sum / np);
            rows.push_str(&format!(
                "{seed},{gamma},{damp},{},{},{}\n",
                cor_sum / np,
                factor_sum / np,
                img_sum / np
            ));
        }
    }
    if !pairs.is_empty() {
        r.metric("decay_error", decay_err);
        r.metric("image_error", image_err);
        r.check("decay", decay_err <= t.decay_abs);
        r.check("image", image_err <= t.image_abs);
    }
    Ok(SeedOutput {
        result: r,
        plots: vec![PlotPart {
            file: "decoherence.csv".into(),
            header: "seed,gamma,expected_factor,cor,factor,image_offdiag\n".into(),
            rows,
        }],
    })
}

/// Whether every channel carries the same Born weight, the condition under
/// which relabelling channels should leave click statistics unchanged.
fn symmetric_channels(spec: &FieldSpec<f64>, basis: &Basis<f64>) -> CoreResult<bool> {
    let p = born_probabilities(&to_epistemic(&spec.covariance())?.rho, basis)?;
    Ok(p.iter().all(|x| (x - p[0]).abs() <= 1e-12))
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Threshold race over the configured multiples of mean step energy.
fn detection_sweep(cfg: &ExperimentConfig, seed: u64) -> CoreResult<SeedOutput> {
    let t = &cfg.tolerances;
    let det = &cfg.detector;
    let spec = cfg.field_spec()?;
    let basis = cfg.basis()?;
    let pts = threshold_sweep(
        &spec,
        &basis,
        &det.multiples,
        det.kappa,
        det.max_steps,
        det.dt,
        cfg.n_trials(),
        seed,
    )?;

    let mut r = SeedResult::new(seed);
    let mut coinc = Vec::new();
    let mut g2s = Vec::new();
    for p in &pts {
        let m = p.multiple;
        let s = &p.stats;
        r.metric(format!("coincidence@{m}"), s.coincidence_fraction());
        r.metric(format!("noclick@{m}"), s.no_click_fraction());
        r.metric(format!("clicking@{m}"), s.clicking_trials() as f64);
        for (k, f) in s.frequencies().iter().enumerate() {
            r.metric(format!("freq_{}@{m}", k + 1), *f);
        }
        if let Some(g) = p.g2((0, 1)).filter(|_| s.channels() >= 2) {
            r.metric(format!("g2@{m}"), g);
            g2s.push(g);
        }
        coinc.push(s.coincidence_fraction());
    }
    r.check("partition", pts.iter().all(|p| p.stats.is_partition()));
    if coinc.len() >= 2 {
        r.check("coincidence_monotone", non_increasing(&coinc));
    }
    if g2s.len() >= 2 && g2s.len() == pts.len() {
        r.check("g2_monotone", non_increasing(&g2s));
    }
    let top = *coinc.last().expect("validated non-empty");
    r.check("top_coincidence", top < t.max_top_coincidence);

    if basis.dim() >= 2 && symmetric_channels(&spec, &basis)? {
        let p = pts
            .iter()
            .find(|p| p.multiple == det.symmetry_multiple)
            .expect("validated");
        let singles = p.stats.single_clicks() as f64;
        let q = 1.0 / basis.dim() as f64;
        let se = (q * (1.0 - q) / singles).sqrt();
        let z = p
            .stats
            .clicks_per_channel
            .iter()
            .map(|&c| (c as f64 / singles - q).abs() / se)
            .fold(0.0, f64::max);
        r.metric("symmetry_z", z);
        r.check("symmetry", z <= t.symmetry_se);
    }

    let mut buf = Vec::new();
    write_sweep_csv(&pts, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv is utf8");
    let (header, rows) = text.split_once('\n').expect("header line");
    Ok(SeedOutput {
        result: r,
        plots: vec![PlotPart {
            file: format!("sweep_seed{seed}.csv"),
            header: format!("{header}\n"),
            rows: rows.into(),
        }],
    })
}

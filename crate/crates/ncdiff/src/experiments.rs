//! Monte Carlo harnesses turning the qualitative theorems into checkable
//! numbers: uniform-in-eps moment bounds, time-shift modulus scaling,
//! analytic Ornstein-Uhlenbeck validation, and the inviscid-limit
//! convergence study.
//!
//! Samples are independent tasks keyed by (master seed, sample index);
//! results are collected in index order and reduced sequentially, so every
//! report is byte-identical regardless of worker count or schedule.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{bochner_norm, shift_modulus, sup_energy};
use crate::dynamics::{NoiseModel, NonlinearityMode};
use crate::error::{Error, Result};
use crate::integrators::{simulate, Scheme, SimConfig, Trajectory};
use crate::spectral::{norm, SobolevSpace, SpectralField};
use crate::stochastic::{derive_seed, sample_path, BrownianPath};

/// Hex SHA-256 of the canonical JSON serialization of a config.
pub fn config_hash(config: &SimConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&json);
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Monte Carlo samples may be excluded on blow-up; more than this fraction
/// of exclusions fails the whole run.
const EXCLUSION_BUDGET: f64 = 0.05;

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Runs one closure per sample in parallel, preserving index order.
/// Blow-ups become `None`; any other error aborts. Errors out when the
/// exclusion budget is exceeded.
fn run_samples<T: Send>(
    samples: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<(Vec<T>, usize)> {
    let raw: Vec<Result<Option<T>>> = (0..samples)
        .into_par_iter()
        .map(|i| match f(i) {
            Ok(v) => Ok(Some(v)),
            Err(Error::BlowUp { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    let mut excluded = 0usize;
    for r in raw {
        match r? {
            Some(v) => out.push(v),
            None => excluded += 1,
        }
    }
    if (excluded as f64) > EXCLUSION_BUDGET * samples as f64 {
        return Err(Error::ExclusionBudget { excluded, total: samples });
    }
    Ok((out, excluded))
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsStat {
    pub eps: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentQuantity {
    pub name: String,
    pub p: f64,
    pub per_eps: Vec<EpsStat>,
    /// max-over-eps mean divided by min-over-eps mean.
    pub uniformity_factor: f64,
}

impl MomentQuantity {
    /// True when the estimate rises monotonically as eps decreases with
    /// every increment exceeding the combined 2-standard-error band.
    pub fn has_upward_trend(&self) -> bool {
        let mut ordered = self.per_eps.clone();
        ordered.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap());
        ordered.len() >= 2
            && ordered.windows(2).all(|w| {
                let band = 2.0 * (w[0].std_error.hypot(w[1].std_error));
                w[1].mean > w[0].mean + band
            })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub master_seed: u64,
    pub config_hash: String,
    pub epsilons: Vec<f64>,
    pub p_values: Vec<f64>,
    pub samples: usize,
    pub excluded: usize,
    pub quantities: Vec<MomentQuantity>,
}

impl MomentReport {
    pub fn quantity(&self, name: &str, p: f64) -> Option<&MomentQuantity> {
        self.quantities.iter().find(|q| q.name == name && q.p == p)
    }
}

/// Per-sample functionals aggregated by `mc_moments`.
struct MomentSample {
    /// (sup energy)^(p/2) per requested p.
    sup_energy: Vec<f64>,
    /// (sup ||u||^2)^(p/2) per requested p (no eps gradient term).
    sup_l2: Vec<f64>,
    /// (int ||u_x||^2 + ||u||_L4^4 dt)^(p/2) per requested p.
    dissipation: Vec<f64>,
    /// int ||u_xx||^2 dt.
    h2_bochner_sq: f64,
}

fn dissipation_integral(traj: &Trajectory) -> f64 {
    // Trapezoid over the saved grid of 2nd-order accurate node values.
    let mut total = 0.0;
    for j in 0..traj.len() - 1 {
        let h = traj.times[j + 1] - traj.times[j];
        let v = |i: usize| {
            let h1s = norm(&traj.fields[i], SobolevSpace::H1semi, None).unwrap();
            let l4 = norm(&traj.fields[i], SobolevSpace::L4, None).unwrap();
            h1s * h1s + l4.powi(4)
        };
        total += 0.5 * h * (v(j) + v(j + 1));
    }
    total
}

/// Estimates the theorem-level moment functionals on an eps grid and
/// quantifies how far they are from eps-independence.
pub fn mc_moments(
    template: &SimConfig,
    eps_grid: &[f64],
    p_list: &[f64],
    samples: usize,
) -> Result<MomentReport> {
    if samples < 16 {
        return Err(Error::Validation("mc_moments needs >= 16 samples".into()));
    }
    if eps_grid.is_empty() || p_list.is_empty() {
        return Err(Error::Validation("empty eps grid or p list".into()));
    }
    template.validate()?;

    let mut quantities: Vec<MomentQuantity> = Vec::new();
    let mut total_excluded = 0usize;
    let mut per_eps_stats: Vec<Vec<MomentSample>> = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let cfg = SimConfig { epsilon: eps, ..template.clone() };
        cfg.validate()?;
        let (results, excluded) = run_samples(samples, |i| {
            let seed = derive_seed(template.seed, i as u64, 0);
            let path = sample_path(cfg.t_final, cfg.dt, seed)?;
            let traj = simulate(&cfg, &path)?;
            let sup2 = {
                // Base statistic; powers of it give every requested p.
                let s = sup_energy(&traj, 2.0, eps);
                p_list.iter().map(|p| s.powf(p / 2.0)).collect::<Vec<f64>>()
            };
            let supl2 = {
                let s = sup_energy(&traj, 2.0, 0.0);
                p_list.iter().map(|p| s.powf(p / 2.0)).collect::<Vec<f64>>()
            };
            let d = dissipation_integral(&traj);
            let dp = p_list.iter().map(|p| d.powf(p / 2.0)).collect::<Vec<f64>>();
            let h2 = {
                let mut total = 0.0;
                for j in 0..traj.len() - 1 {
                    let h = traj.times[j + 1] - traj.times[j];
                    let a = norm(&traj.fields[j], SobolevSpace::H2, None).unwrap();
                    let b = norm(&traj.fields[j + 1], SobolevSpace::H2, None).unwrap();
                    total += 0.5 * h * (a * a + b * b);
                }
                total
            };
            Ok(MomentSample { sup_energy: sup2, sup_l2: supl2, dissipation: dp, h2_bochner_sq: h2 })
        })?;
        total_excluded += excluded;
        per_eps_stats.push(results);
    }

    let build = |name: &str, p: f64, extract: &dyn Fn(&MomentSample) -> f64| {
        let per_eps: Vec<EpsStat> = eps_grid
            .iter()
            .zip(&per_eps_stats)
            .map(|(&eps, stats)| {
                let vals: Vec<f64> = stats.iter().map(|s| extract(s)).collect();
                let (mean, std_error) = mean_and_se(&vals);
                EpsStat { eps, mean, std_error }
            })
            .collect();
        let max = per_eps.iter().map(|s| s.mean).fold(f64::MIN, f64::max);
        let min = per_eps.iter().map(|s| s.mean).fold(f64::MAX, f64::min);
        MomentQuantity {
            name: name.to_string(),
            p,
            per_eps,
            uniformity_factor: if min > 0.0 { max / min } else { f64::INFINITY },
        }
    };

    for (pi, &p) in p_list.iter().enumerate() {
        quantities.push(build("sup_energy", p, &|s: &MomentSample| s.sup_energy[pi]));
        quantities.push(build("sup_l2", p, &|s: &MomentSample| s.sup_l2[pi]));
        quantities.push(build("dissipation", p, &|s: &MomentSample| s.dissipation[pi]));
    }
    quantities.push(build("h2_bochner_sq", 1.0, &|s: &MomentSample| s.h2_bochner_sq));

    Ok(MomentReport {
        master_seed: template.seed,
        config_hash: config_hash(template),
        epsilons: eps_grid.to_vec(),
        p_values: p_list.to_vec(),
        samples,
        excluded: total_excluded,
        quantities,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OuReport {
    pub master_seed: u64,
    pub eps: f64,
    pub mode: usize,
    pub gamma: f64,
    pub c0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub samples: usize,
    pub mc_mean: f64,
    pub mc_var: f64,
    pub exact_mean: f64,
    pub exact_var: f64,
    pub mean_std_error: f64,
    pub var_std_error: f64,
    /// max of the two relative deviations.
    pub max_rel_deviation: f64,
}

/// Validates the linear/forced regime against the closed-form scalar OU
/// moments: mode k follows dc = -mu c dt + sigma dB with
/// mu = lambda_k / (1 + eps lambda_k), sigma = gamma / (1 + eps lambda_k).
#[allow(clippy::too_many_arguments)]
pub fn ou_oracle_check(
    eps: f64,
    k: usize,
    gamma: f64,
    c0: f64,
    t_final: f64,
    dt: f64,
    samples: usize,
    master_seed: u64,
) -> Result<OuReport> {
    if k == 0 {
        return Err(Error::Validation("mode index must be >= 1".into()));
    }
    let mut u0 = SpectralField::zeros(k);
    u0.coeffs_mut()[k - 1] = c0;
    let cfg = SimConfig {
        epsilon: eps,
        n_modes: k,
        dt,
        t_final,
        // Explicit stepping: for the linear regime the tamed scheme is
        // plain Euler-Maruyama, whose stationary-variance bias (~mu dt/2)
        // is three times smaller than the backward-Euler one.
        scheme: Scheme::TamedEM,
        nonlinearity: NonlinearityMode::linear_unforced(),
        noise: NoiseModel::Additive { profile: SpectralField::basis(k, k), gamma },
        u0,
        save_stride: crate::stochastic::step_count(t_final, dt)?.max(1),
        seed: master_seed,
        ..SimConfig::default()
    };
    cfg.validate()?;

    let (endpoints, _) = run_samples(samples, |i| {
        let seed = derive_seed(master_seed, i as u64, 0);
        let path = sample_path(t_final, dt, seed)?;
        let traj = simulate(&cfg, &path)?;
        Ok(traj.endpoint().coeff(k))
    })?;

    let n = endpoints.len() as f64;
    let mc_mean = endpoints.iter().sum::<f64>() / n;
    let mc_var =
        endpoints.iter().map(|v| (v - mc_mean) * (v - mc_mean)).sum::<f64>() / (n - 1.0);

    let lam = crate::spectral::eigenvalue(k);
    let mu = lam / (1.0 + eps * lam);
    let sigma = gamma / (1.0 + eps * lam);
    let exact_mean = c0 * (-mu * t_final).exp();
    let exact_var = sigma * sigma * (1.0 - (-2.0 * mu * t_final).exp()) / (2.0 * mu);

    let mean_std_error = (mc_var / n).sqrt();
    let var_std_error = mc_var * (2.0 / (n - 1.0)).sqrt();

    let rel = |got: f64, want: f64| -> f64 {
        let scale = want.abs().max(1e-12);
        (got - want).abs() / scale
    };
    let max_rel_deviation = rel(mc_mean, exact_mean).max(rel(mc_var, exact_var));

    Ok(OuReport {
        master_seed,
        eps,
        mode: k,
        gamma,
        c0,
        t_final,
        dt,
        samples,
        mc_mean,
        mc_var,
        exact_mean,
        exact_var,
        mean_std_error,
        var_std_error,
        max_rel_deviation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusReport {
    pub master_seed: u64,
    pub config_hash: String,
    pub space: SobolevSpace,
    pub deltas: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// least-squares slope of log mean modulus against log delta.
    pub slope: f64,
    pub samples: usize,
    pub excluded: usize,
}

/// MC mean of the time-shift modulus per delta, with its log-log slope.
pub fn modulus_scaling(
    config: &SimConfig,
    deltas: &[f64],
    space: SobolevSpace,
    samples: usize,
) -> Result<ModulusReport> {
    if deltas.len() < 3 {
        return Err(Error::Validation("modulus needs >= 3 delta values".into()));
    }
    if deltas.iter().any(|d| *d <= 0.0 || *d > 1.0) {
        return Err(Error::Validation("delta grid must lie in (0, 1]".into()));
    }
    config.validate()?;

    let (per_sample, excluded) = run_samples(samples, |i| {
        let seed = derive_seed(config.seed, i as u64, 0);
        let path = sample_path(config.t_final, config.dt, seed)?;
        let traj = simulate(config, &path)?;
        deltas
            .iter()
            .map(|&d| shift_modulus(&traj, d, space))
            .collect::<Result<Vec<f64>>>()
    })?;

    let mut means = Vec::with_capacity(deltas.len());
    let mut std_errors = Vec::with_capacity(deltas.len());
    for di in 0..deltas.len() {
        let vals: Vec<f64> = per_sample.iter().map(|s| s[di]).collect();
        let (m, se) = mean_and_se(&vals);
        means.push(m);
        std_errors.push(se);
    }
    let slope = loglog_slope(deltas, &means);

    Ok(ModulusReport {
        master_seed: config.seed,
        config_hash: config_hash(config),
        space,
        deltas: deltas.to_vec(),
        means,
        std_errors,
        slope,
        samples,
        excluded,
    })
}

/// H1 Bochner gap between u^eps and the eps=0 run on the same path.
pub fn inviscid_gap(config: &SimConfig, eps: f64, path: &BrownianPath) -> Result<f64> {
    if eps == 0.0 {
        return Ok(0.0);
    }
    let cfg_eps = SimConfig { epsilon: eps, ..config.clone() };
    let cfg_zero = SimConfig { epsilon: 0.0, ..config.clone() };
    let u_eps = simulate(&cfg_eps, path)?;
    let z = simulate(&cfg_zero, path)?;
    Ok(gap_between(&u_eps, &z))
}

/// ||u - z||_{L2(0,T; H1)} on the shared saved grid (full H1 norm).
fn gap_between(a: &Trajectory, b: &Trajectory) -> f64 {
    debug_assert_eq!(a.times, b.times);
    let diff_fields: Vec<SpectralField> =
        a.fields.iter().zip(&b.fields).map(|(x, y)| x.sub(y)).collect();
    let diff = Trajectory { times: a.times.clone(), fields: diff_fields, config: a.config.clone() };
    bochner_norm(&diff, SobolevSpace::H1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub median_gap: f64,
    pub mean_gap: f64,
    /// empirical P(gap > delta).
    pub exceedance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub master_seed: u64,
    pub config_hash: String,
    /// Norm used for the gap (full H1 inside the time integral).
    pub gap_norm: &'static str,
    pub delta: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Fraction of seeds with gap(eps_{i+1}) < gap(eps_i), per grid pair.
    pub pairwise_monotone_fraction: Vec<f64>,
    pub samples: usize,
    pub excluded: usize,
    /// Path checksums per sample, witnessing shared-path coupling.
    pub path_checksums: Vec<u64>,
}

impl ConvergenceReport {
    /// Built-in property check: medians strictly decreasing along the grid
    /// and terminal exceedance at most `threshold`.
    pub fn check(&self, threshold: f64) -> Result<()> {
        if self.rows.len() >= 2 {
            for w in self.rows.windows(2) {
                if w[1].median_gap >= w[0].median_gap {
                    return Err(Error::PropertyCheck(format!(
                        "median gap not decreasing: {} at eps={} vs {} at eps={}",
                        w[0].median_gap, w[0].eps, w[1].median_gap, w[1].eps
                    )));
                }
            }
            let last = self.rows.last().unwrap();
            if last.exceedance > threshold {
                return Err(Error::PropertyCheck(format!(
                    "exceedance {} at eps={} above threshold {threshold}",
                    last.exceedance, last.eps
                )));
            }
        }
        Ok(())
    }
}

/// Shared-path convergence study over a strictly decreasing eps grid.
///
/// `delta` defaults to half the median gap at the largest eps.
pub fn convergence_study(
    config: &SimConfig,
    eps_grid: &[f64],
    delta: Option<f64>,
    samples: usize,
) -> Result<ConvergenceReport> {
    if eps_grid.is_empty() {
        return Err(Error::Validation("empty eps grid".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) || eps_grid.iter().any(|e| *e <= 0.0) {
        return Err(Error::Validation(
            "eps grid must be strictly decreasing and positive".into(),
        ));
    }
    config.validate()?;

    struct SampleGaps {
        gaps: Vec<f64>,
        checksum: u64,
    }

    let (per_sample, excluded) = run_samples(samples, |i| {
        let seed = derive_seed(config.seed, i as u64, 0);
        let path = sample_path(config.t_final, config.dt, seed)?;
        let cfg_zero = SimConfig { epsilon: 0.0, ..config.clone() };
        let z = simulate(&cfg_zero, &path)?;
        let gaps = eps_grid
            .iter()
            .map(|&eps| {
                let cfg = SimConfig { epsilon: eps, ..config.clone() };
                let u_eps = simulate(&cfg, &path)?;
                Ok(gap_between(&u_eps, &z))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(SampleGaps { gaps, checksum: path.checksum() })
    })?;

    let mut rows = Vec::with_capacity(eps_grid.len());
    let mut medians = Vec::with_capacity(eps_grid.len());
    for (ei, &eps) in eps_grid.iter().enumerate() {
        let mut vals: Vec<f64> = per_sample.iter().map(|s| s.gaps[ei]).collect();
        let med = median(&mut vals);
        medians.push(med);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        rows.push(ConvergenceRow { eps, median_gap: med, mean_gap: mean, exceedance: 0.0 });
    }
    let delta = delta.unwrap_or(0.5 * medians[0]);
    for (ei, row) in rows.iter_mut().enumerate() {
        let over = per_sample.iter().filter(|s| s.gaps[ei] > delta).count();
        row.exceedance = over as f64 / per_sample.len() as f64;
    }

    let pairwise_monotone_fraction = (0..eps_grid.len().saturating_sub(1))
        .map(|ei| {
            let better = per_sample.iter().filter(|s| s.gaps[ei + 1] < s.gaps[ei]).count();
            better as f64 / per_sample.len() as f64
        })
        .collect();

    Ok(ConvergenceReport {
        master_seed: config.seed,
        config_hash: config_hash(config),
        gap_norm: "L2(0,T;H1) with the full (1 + lambda_k) H1 weight",
        delta,
        rows,
        pairwise_monotone_fraction,
        samples,
        excluded,
        path_checksums: per_sample.iter().map(|s| s.checksum).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyCheckReport {
    pub master_seed: u64,
    pub config_hash: String,
    /// Max per-step residual of the deterministic (gamma = 0) run at dt.
    pub deterministic_residual_coarse: f64,
    /// Same at dt/2.
    pub deterministic_residual_fine: f64,
    /// coarse / fine; ~4 for a second-order-consistent energy balance.
    pub deterministic_factor: f64,
    /// RMS over paths of the cumulative residual at dt.
    pub stochastic_rms_coarse: f64,
    pub stochastic_rms_fine: f64,
    pub stochastic_factor: f64,
    pub paths: usize,
}

/// Verifies the discrete energy identity two ways: the deterministic
/// per-step residual must shrink ~4x under dt halving, and the stochastic
/// cumulative residual RMS must shrink by ~sqrt(2) on bridge-refined paths.
pub fn energy_check(config: &SimConfig, paths: usize) -> Result<EnergyCheckReport> {
    use crate::analysis::EnergyLedger;
    use crate::stochastic::refine;

    let base = SimConfig { save_stride: 1, ..config.clone() };
    base.validate()?;

    // Deterministic branch: switch the noise off.
    let det = SimConfig { noise: NoiseModel::LinearMult { gamma: 0.0 }, ..base.clone() };
    let mut det_residuals = Vec::with_capacity(2);
    for halvings in 0..2 {
        let cfg = SimConfig { dt: det.dt / f64::powi(2.0, halvings), ..det.clone() };
        let path = sample_path(cfg.t_final, cfg.dt, cfg.seed)?;
        let traj = simulate(&cfg, &path)?;
        det_residuals.push(EnergyLedger::compute(&traj, &path, &cfg)?.max_abs_residual());
    }

    // Stochastic branch: cumulative residual on common refined paths.
    let fine_cfg = SimConfig { dt: base.dt * 0.5, ..base.clone() };
    let (pairs, _) = run_samples(paths, |i| {
        let seed = derive_seed(base.seed, i as u64, 0);
        let coarse_path = sample_path(base.t_final, base.dt, seed)?;
        let coarse = simulate(&base, &coarse_path)?;
        let coarse_res = EnergyLedger::compute(&coarse, &coarse_path, &base)?.cumulative_residual();
        let fine_path = refine(&coarse_path);
        let fine = simulate(&fine_cfg, &fine_path)?;
        let fine_res = EnergyLedger::compute(&fine, &fine_path, &fine_cfg)?.cumulative_residual();
        Ok((coarse_res, fine_res))
    })?;
    let rms = |vals: &[f64]| -> f64 {
        (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt()
    };
    let coarse_rms = rms(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let fine_rms = rms(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());

    Ok(EnergyCheckReport {
        master_seed: base.seed,
        config_hash: config_hash(config),
        deterministic_residual_coarse: det_residuals[0],
        deterministic_residual_fine: det_residuals[1],
        deterministic_factor: det_residuals[0] / det_residuals[1],
        stochastic_rms_coarse: coarse_rms,
        stochastic_rms_fine: fine_rms,
        stochastic_factor: coarse_rms / fine_rms,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::Scheme;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ou_variance_matches_closed_form_small_run() {
        let r = ou_oracle_check(0.0, 1, 1.0, 0.0, 1.0, 1e-3, 2000, 7).unwrap();
        assert_abs_diff_eq!(r.exact_var, 0.0506605918, epsilon = 1e-9);
        let tol = 3.0 * r.var_std_error + 0.02 * r.exact_var;
        assert!(
            (r.mc_var - r.exact_var).abs() <= tol,
            "var {} vs {} (tol {tol})",
            r.mc_var,
            r.exact_var
        );
    }

    #[test]
    fn ou_deterministic_mean_decay() {
        let r = ou_oracle_check(0.0, 1, 0.0, 1.0, 0.5, 1e-3, 16, 1).unwrap();
        // Identical deterministic samples; the sample variance only picks
        // up mean-rounding dust.
        assert!(r.mc_var < 1e-30, "{}", r.mc_var);
        // Backward Euler carries an O(dt) bias of about mu^2 dt T / 2,
        // roughly 2.5% here.
        assert!((r.mc_mean - r.exact_mean).abs() < 0.04 * r.exact_mean.abs().max(1e-6));
    }

    #[test]
    fn ou_eps_slows_decay() {
        let fast = ou_oracle_check(0.0, 1, 0.0, 1.0, 0.5, 1e-3, 16, 1).unwrap();
        let slow = ou_oracle_check(0.1, 1, 0.0, 1.0, 0.5, 1e-3, 16, 1).unwrap();
        assert!(slow.mc_mean > fast.mc_mean);
        assert_abs_diff_eq!(
            crate::spectral::eigenvalue(1) / (1.0 + 0.1 * crate::spectral::eigenvalue(1)),
            4.9671871678,
            epsilon = 1e-6
        );
    }

    #[test]
    fn ou_rejects_zero_mode() {
        assert!(ou_oracle_check(0.0, 0, 1.0, 0.0, 1.0, 1e-3, 16, 1).is_err());
    }

    #[test]
    fn inviscid_gap_zero_eps_and_eps_ordering() {
        let cfg = SimConfig { n_modes: 8, t_final: 0.2, dt: 1e-3, ..SimConfig::default() };
        let path = sample_path(0.2, 1e-3, 5).unwrap();
        assert_eq!(inviscid_gap(&cfg, 0.0, &path).unwrap(), 0.0);
        let g1 = inviscid_gap(&cfg, 0.1, &path).unwrap();
        let g2 = inviscid_gap(&cfg, 0.2, &path).unwrap();
        assert!(g1 > 0.0 && g2 > g1);
    }

    #[test]
    fn inviscid_gap_linear_deterministic_decreases_with_eps() {
        // gamma=0, linear, u0=e1: exact mode-wise exponentials.
        let cfg = SimConfig {
            n_modes: 1,
            t_final: 0.5,
            dt: 1e-3,
            nonlinearity: NonlinearityMode::linear_unforced(),
            noise: NoiseModel::LinearMult { gamma: 0.0 },
            u0: SpectralField::basis(1, 1),
            scheme: Scheme::SemiImplicitEM,
            ..SimConfig::default()
        };
        let path = sample_path(0.5, 1e-3, 1).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let g = inviscid_gap(&cfg, eps, &path).unwrap();
            assert!(g < last, "gap {g} not below {last} at eps {eps}");
            last = g;
        }
    }

    #[test]
    fn convergence_single_eps_row() {
        let cfg = SimConfig { n_modes: 4, t_final: 0.1, dt: 1e-3, save_stride: 10, ..SimConfig::default() };
        let r = convergence_study(&cfg, &[0.2], None, 16).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].median_gap > 0.0);
        assert_eq!(r.path_checksums.len(), 16);
    }

    #[test]
    fn convergence_rejects_bad_grid() {
        let cfg = SimConfig::default();
        assert!(convergence_study(&cfg, &[0.1, 0.2], None, 16).is_err());
        assert!(convergence_study(&cfg, &[], None, 16).is_err());
    }

    #[test]
    fn moments_deterministic_run_has_zero_std_errors() {
        let cfg = SimConfig {
            n_modes: 4,
            t_final: 0.1,
            dt: 1e-3,
            save_stride: 10,
            noise: NoiseModel::LinearMult { gamma: 0.0 },
            ..SimConfig::default()
        };
        let r = mc_moments(&cfg, &[0.0, 0.1], &[2.0], 16).unwrap();
        for q in &r.quantities {
            for s in &q.per_eps {
                assert_abs_diff_eq!(s.std_error, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn moments_jensen_across_p() {
        let cfg = SimConfig { n_modes: 4, t_final: 0.1, dt: 1e-3, save_stride: 10, ..SimConfig::default() };
        let r = mc_moments(&cfg, &[0.0, 0.1], &[2.0, 4.0], 16).unwrap();
        for &eps in &[0.0, 0.1] {
            let m2 = r
                .quantity("sup_energy", 2.0)
                .unwrap()
                .per_eps
                .iter()
                .find(|s| s.eps == eps)
                .unwrap()
                .mean;
            let m4 = r
                .quantity("sup_energy", 4.0)
                .unwrap()
                .per_eps
                .iter()
                .find(|s| s.eps == eps)
                .unwrap()
                .mean;
            assert!(m4 >= m2 * m2 - 1e-12);
        }
    }

    #[test]
    fn moments_rejects_small_sample_count() {
        let cfg = SimConfig::default();
        assert!(mc_moments(&cfg, &[0.1], &[2.0], 4).is_err());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = SimConfig::default();
        let b = SimConfig { epsilon: 0.2, ..SimConfig::default() };
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}

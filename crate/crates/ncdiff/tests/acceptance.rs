//! End-to-end acceptance suite: one test per shipped guarantee, each
//! printing a single pass/fail line (visible with `--nocapture`).

use ncdiff::analysis::shift_modulus;
use ncdiff::dynamics::{cubic_projection, NoiseModel, NonlinearityMode};
use ncdiff::experiments::{convergence_study, energy_check, mc_moments, modulus_scaling, ou_oracle_check};
use ncdiff::integrators::{simulate, strong_order, SimConfig};
use ncdiff::spectral::{analyze, eval_basis, norm, synthesize, SobolevSpace, SpectralField};
use ncdiff::stochastic::sample_path;

fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "{criterion}: {detail}");
}

/// Criterion 1: orthonormality, round-trip, and Parseval to 1e-10 for
/// n <= 64 on the 4n-node grid.
#[test]
fn c01_spectral_exactness() {
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 7, 16, 33, 64] {
        let m = 4 * n;
        // Orthonormality through the transform pair: analyze(e_k) = delta_k.
        for k in 1..=n {
            let e = SpectralField::basis(k, n);
            let back = analyze(&synthesize(&e, m), n).unwrap();
            for (i, c) in back.coeffs().iter().enumerate() {
                let expect = if i + 1 == k { 1.0 } else { 0.0 };
                worst = worst.max((c - expect).abs());
            }
        }
        // Round-trip and Parseval on a deterministic full-band field.
        let coeffs: Vec<f64> = (1..=n).map(|k| (k as f64 * 0.7).sin() / k as f64).collect();
        let f = SpectralField::from_coeffs(coeffs.clone()).unwrap();
        let g = synthesize(&f, m);
        let back = analyze(&g, n).unwrap();
        for (a, b) in back.coeffs().iter().zip(&coeffs) {
            worst = worst.max((a - b).abs());
        }
        let grid_sq: f64 =
            g.values().iter().map(|v| v * v).sum::<f64>() / (m as f64 + 1.0);
        let coeff_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        worst = worst.max((grid_sq - coeff_sq).abs());
    }
    verdict(
        "1 spectral exactness",
        worst < 1e-10,
        &format!("max defect {worst:.3e}"),
    );
}

/// Criterion 2: P_n(e_1^3) = (3/2, 0, -1/2, 0, ...) against the sin^3
/// identity and an independent Simpson quadrature oracle.
#[test]
fn c02_cubic_oracle() {
    let n = 6;
    let p = cubic_projection(&SpectralField::basis(1, n));
    let identity = [1.5, 0.0, -0.5, 0.0, 0.0, 0.0];
    let mut worst: f64 = 0.0;
    for (c, e) in p.coeffs().iter().zip(&identity) {
        worst = worst.max((c - e).abs());
    }
    // Simpson oracle for (sqrt(2) sin(pi x))^3 projected on e_k.
    for k in 1..=n {
        let panels = 4096;
        let h = 1.0 / panels as f64;
        let f = |x: f64| eval_basis(1, x).powi(3) * eval_basis(k, x);
        let mut integral = f(0.0) + f(1.0);
        for j in 1..panels {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * f(j as f64 * h);
        }
        integral *= h / 3.0;
        worst = worst.max((p.coeff(k) - integral).abs());
    }
    verdict("2 cubic oracle", worst < 1e-9, &format!("max defect {worst:.3e}"));
}

/// Criterion 3: MC mean and variance of the linear (OU) regime match the
/// closed forms within 3 SE + 2% at T=1, dt=1e-3, 1e4 samples.
#[test]
fn c03_ou_analytic_validation() {
    let mut ok = true;
    let mut detail = String::new();
    for &eps in &[0.0, 0.1, 0.5] {
        for k in [1usize, 2] {
            let r = ou_oracle_check(eps, k, 1.0, 0.0, 1.0, 1e-3, 10_000, 42).unwrap();
            let mean_tol = 3.0 * r.mean_std_error + 0.02 * r.exact_mean.abs();
            let var_tol = 3.0 * r.var_std_error + 0.02 * r.exact_var.abs();
            let mean_ok = (r.mc_mean - r.exact_mean).abs() <= mean_tol.max(1e-12);
            let var_ok = (r.mc_var - r.exact_var).abs() <= var_tol.max(1e-12);
            if !(mean_ok && var_ok) {
                ok = false;
                detail = format!(
                    "eps={eps} k={k}: mean {} vs {}, var {} vs {}",
                    r.mc_mean, r.exact_mean, r.mc_var, r.exact_var
                );
            }
        }
    }
    if detail.is_empty() {
        detail = "6 regimes within 3 SE + 2%".into();
    }
    verdict("3 OU analytic validation", ok, &detail);
}

/// Criterion 4: discrete energy-identity residuals shrink by a factor in
/// [3.5, 4.5] (deterministic) and >= 1.3 (stochastic RMS, 100 paths)
/// under dt halving.
#[test]
fn c04_energy_identity_residual() {
    let cfg = SimConfig::default();
    let report = energy_check(&cfg, 100).unwrap();
    let det_ok = (3.5..=4.5).contains(&report.deterministic_factor);
    let sto_ok = report.stochastic_factor >= 1.3;
    verdict(
        "4 energy identity",
        det_ok && sto_ok,
        &format!(
            "deterministic factor {:.3}, stochastic factor {:.3}",
            report.deterministic_factor, report.stochastic_factor
        ),
    );
}

/// Criterion 5: eps-uniform moment bounds — uniformity factor <= 2 for
/// the p=2 sup-energy moment, <= 3 at p=4, and no upward trend as
/// eps decreases beyond 2 SE.
#[test]
fn c05_uniform_moments() {
    let cfg = SimConfig::default();
    let report = mc_moments(&cfg, &[0.0, 0.01, 0.1, 0.5], &[2.0, 4.0], 64).unwrap();
    let q2 = report.quantity("sup_l2", 2.0).unwrap();
    let q4 = report.quantity("sup_l2", 4.0).unwrap();
    let ok = q2.uniformity_factor <= 2.0
        && q4.uniformity_factor <= 3.0
        && !q2.has_upward_trend()
        && !q4.has_upward_trend()
        && report.excluded == 0;
    verdict(
        "5 uniform-in-eps moments",
        ok,
        &format!(
            "factors p=2: {:.3}, p=4: {:.3}, excluded {}",
            q2.uniformity_factor, q4.uniformity_factor, report.excluded
        ),
    );
}

/// Criterion 6: time-shift modulus log-log slope in [0.8, 1.2] for both
/// the H^-1 and L2 variants; deterministic control slope >= 1.6.
#[test]
fn c06_shift_modulus_scaling() {
    // Noise-driven regime: u0 = 0 so the C delta shift law is not masked
    // by the O(delta^2) deterministic relaxation transient.
    let cfg = SimConfig { u0: SpectralField::zeros(1), ..SimConfig::default() };
    let deltas = [0.02, 0.04, 0.08, 0.16];
    let h = modulus_scaling(&cfg, &deltas, SobolevSpace::Hneg1, 32).unwrap();
    let l = modulus_scaling(&cfg, &deltas, SobolevSpace::L2, 32).unwrap();

    let det_cfg = SimConfig {
        noise: NoiseModel::Additive { profile: SpectralField::basis(1, 1), gamma: 0.0 },
        ..SimConfig::default()
    };
    let path = sample_path(det_cfg.t_final, det_cfg.dt, det_cfg.seed).unwrap();
    let traj = simulate(&det_cfg, &path).unwrap();
    let moduli: Vec<f64> = deltas
        .iter()
        .map(|&d| shift_modulus(&traj, d, SobolevSpace::Hneg1).unwrap())
        .collect();
    let det_slope = loglog_slope(&deltas, &moduli);

    let ok = (0.8..=1.2).contains(&h.slope)
        && (0.8..=1.2).contains(&l.slope)
        && det_slope >= 1.6;
    verdict(
        "6 shift modulus",
        ok,
        &format!(
            "H^-1 slope {:.3}, L2 slope {:.3}, deterministic slope {:.3}",
            h.slope, l.slope, det_slope
        ),
    );
}

/// Criterion 7: inviscid limit — strictly decreasing median gaps over the
/// eps grid, per-seed monotone in >= 90% of seeds, exceedance at the
/// smallest eps <= 0.05.
#[test]
fn c07_inviscid_limit() {
    let cfg = SimConfig::default();
    let report = convergence_study(&cfg, &[0.2, 0.1, 0.05, 0.025], None, 64).unwrap();
    let medians: Vec<f64> = report.rows.iter().map(|r| r.median_gap).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let monotone = report.pairwise_monotone_fraction.iter().all(|f| *f >= 0.9);
    let exceedance = report.rows.last().unwrap().exceedance;
    let ok = decreasing && monotone && exceedance <= 0.05 && report.excluded == 0;
    verdict(
        "7 inviscid limit",
        ok,
        &format!(
            "medians {medians:?}, monotone {:?}, final exceedance {exceedance:.3}",
            report.pairwise_monotone_fraction
        ),
    );
}

/// Criterion 8: strong order 1.0 +/- 0.2 for additive noise and
/// 0.5 +/- 0.2 for multiplicative, 32 samples, 4 levels from dt = 2^-8.
#[test]
fn c08_strong_order() {
    let base = SimConfig { dt: 2f64.powi(-8), ..SimConfig::default() };
    let additive = strong_order(&base, 4, 32).unwrap();
    // Strong enough multiplicative noise that the missing Milstein term,
    // not the O(dt) drift error, dominates the level gaps.
    let mult_cfg = SimConfig {
        noise: NoiseModel::LinearMult { gamma: 1.0 },
        ..base.clone()
    };
    let mult = strong_order(&mult_cfg, 4, 32).unwrap();
    let ok = (additive.ensemble_slope - 1.0).abs() <= 0.2
        && (mult.ensemble_slope - 0.5).abs() <= 0.2;
    verdict(
        "8 strong order",
        ok,
        &format!(
            "additive slope {:.3}, multiplicative slope {:.3}",
            additive.ensemble_slope, mult.ensemble_slope
        ),
    );
}

/// Criterion 9: byte-identical JSON reports at worker counts 1 and 8.
#[test]
fn c09_determinism_across_workers() {
    let out1 = tempfile::tempdir().unwrap();
    let out8 = tempfile::tempdir().unwrap();
    let mut names = Vec::new();
    for (workers, dir) in [("1", &out1), ("8", &out8)] {
        let args = vec![
            "ncdiff".to_string(),
            "moments".to_string(),
            "--seed".to_string(),
            "11".to_string(),
            "--workers".to_string(),
            workers.to_string(),
            "--out".to_string(),
            dir.path().display().to_string(),
            "--sim.t_final=0.25".to_string(),
            "--sim.n_modes=16".to_string(),
            "--moments.samples=16".to_string(),
        ];
        let code = ncdiff::cli::run(args);
        assert_eq!(code, 0, "moments run failed at workers={workers}");
        let mut jsons: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        assert_eq!(jsons.len(), 1);
        names.push(jsons.pop().unwrap());
    }
    assert_eq!(names[0].file_name(), names[1].file_name());
    let a = std::fs::read(&names[0]).unwrap();
    let b = std::fs::read(&names[1]).unwrap();
    verdict(
        "9 determinism across workers",
        a == b,
        &format!("{} bytes vs {} bytes", a.len(), b.len()),
    );
}

/// Criterion 10: Truncated(R) trajectories are bit-for-bit identical to
/// Cubic ones whenever the running H1 norm stays below R (16 samples,
/// R = 10x the observed max).
#[test]
fn c10_truncation_consistency() {
    let cfg = SimConfig { t_final: 0.25, ..SimConfig::default() };
    let mut ok = true;
    for sample in 0..16u64 {
        let seed = 1000 + sample;
        let path = sample_path(cfg.t_final, cfg.dt, seed).unwrap();
        let cubic = simulate(&cfg, &path).unwrap();
        let max_h1 = cubic
            .fields
            .iter()
            .map(|f| norm(f, SobolevSpace::H1, None).unwrap())
            .fold(0.0, f64::max);
        let trunc_cfg = SimConfig {
            nonlinearity: NonlinearityMode::Truncated { radius: 10.0 * max_h1 },
            ..cfg.clone()
        };
        let truncated = simulate(&trunc_cfg, &path).unwrap();
        for (a, b) in cubic.fields.iter().zip(&truncated.fields) {
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                if x.to_bits() != y.to_bits() {
                    ok = false;
                }
            }
        }
    }
    verdict("10 truncation consistency", ok, "16 samples, R = 10x max H1");
}

/// Least-squares slope of log(y) against log(x).
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

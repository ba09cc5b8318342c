//! Time stepping for the mode-wise Galerkin SDE system and trajectory
//! production.
//!
//! Two schemes: a tamed explicit Euler-Maruyama (the taming normalizer
//! keeps the cubic drift from diverging) and a semi-implicit variant with
//! the stiff linear part treated implicitly, which removes the
//! dt <~ 1/lambda_n stability constraint. The semi-implicit scheme is the
//! default.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    diffusion, drift, reaction_projection, GalerkinState, NoiseModel, NonlinearityMode,
};
use crate::error::{Error, Result};
use crate::spectral::{eigenvalue, norm, SobolevSpace, SpectralField};
use crate::stochastic::{derive_seed, refine, sample_path, step_count, BrownianPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TamedEM,
    SemiImplicitEM,
}

/// L2 norm past which a trajectory is declared blown up even before the
/// floats overflow to infinity.
const BLOWUP_L2: f64 = 1e12;

/// Full description of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub epsilon: f64,
    pub n_modes: usize,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub nonlinearity: NonlinearityMode,
    pub noise: NoiseModel,
    /// Initial coefficients, zero-padded to `n_modes`.
    pub u0: SpectralField,
    pub save_stride: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            epsilon: 0.1,
            n_modes: 32,
            dt: 1e-3,
            t_final: 1.0,
            scheme: Scheme::SemiImplicitEM,
            nonlinearity: NonlinearityMode::Cubic,
            noise: NoiseModel::Additive {
                profile: SpectralField::basis(1, 1),
                gamma: 0.3,
            },
            // u0 = sin(pi x) = e_1 / sqrt(2).
            u0: SpectralField::from_coeffs_unchecked(vec![std::f64::consts::FRAC_1_SQRT_2]),
            save_stride: 1,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.epsilon) {
            return Err(Error::Validation(format!(
                "epsilon = {} outside the hypothesis range [0, 1/2]",
                self.epsilon
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::Validation("n_modes must be >= 1".into()));
        }
        if self.save_stride == 0 {
            return Err(Error::Validation("save_stride must be >= 1".into()));
        }
        if self.u0.n_modes() > self.n_modes {
            return Err(Error::Validation(format!(
                "u0 has {} modes but n_modes = {}",
                self.u0.n_modes(),
                self.n_modes
            )));
        }
        step_count(self.t_final, self.dt)?;
        self.nonlinearity.validate(self.n_modes)?;
        self.noise.validate(self.n_modes)?;
        Ok(())
    }

    /// Initial field zero-padded to the simulation width.
    pub fn initial_field(&self) -> SpectralField {
        self.u0.resized(self.n_modes)
    }

    pub fn steps(&self) -> usize {
        step_count(self.t_final, self.dt).expect("validated")
    }
}

/// Time-stamped sequence of saved states.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn endpoint(&self) -> &SpectralField {
        self.fields.last().expect("trajectory holds at least u0")
    }
}

fn check_state(field: &SpectralField, t: f64) -> Result<()> {
    let l2 = norm(field, SobolevSpace::L2, None).expect("coefficient norm");
    if !l2.is_finite() || l2 > BLOWUP_L2 {
        return Err(Error::BlowUp { t, norm_name: "L2", norm_value: l2 });
    }
    Ok(())
}

/// Advances the state by one step of the chosen scheme.
pub fn step(
    state: &GalerkinState,
    db: f64,
    dt: f64,
    scheme: Scheme,
    mode: &NonlinearityMode,
    noise: &NoiseModel,
) -> Result<GalerkinState> {
    assert!(dt > 0.0);
    let eps = state.eps;
    let b = diffusion(state, noise);
    let next = match scheme {
        Scheme::TamedEM => {
            let a = drift(state, mode);
            let a_l2 = norm(&a, SobolevSpace::L2, None).expect("coefficient norm");
            let tame = 1.0 + dt * a_l2;
            let coeffs = state
                .field
                .coeffs()
                .iter()
                .zip(a.coeffs())
                .zip(b.coeffs())
                .map(|((c, ak), bk)| c + dt * ak / tame + bk * db)
                .collect();
            SpectralField::from_coeffs_unchecked(coeffs)
        }
        Scheme::SemiImplicitEM => {
            let reaction = reaction_projection(&state.field, mode);
            let coeffs = (1..=state.field.n_modes())
                .map(|k| {
                    let lam = eigenvalue(k);
                    let helm = 1.0 + eps * lam;
                    let c = state.field.coeff(k);
                    let explicit = match (&reaction, mode) {
                        (Some(cube), _) => c + dt * (c - cube.coeff(k)) / helm,
                        (None, NonlinearityMode::Linear { forcing }) => {
                            let fk = forcing.as_ref().map_or(0.0, |g| g.coeff(k));
                            c - dt * fk / helm
                        }
                        _ => unreachable!(),
                    };
                    (explicit + b.coeff(k) * db) / (1.0 + dt * lam / helm)
                })
                .collect();
            SpectralField::from_coeffs_unchecked(coeffs)
        }
    };
    let t = state.t + dt;
    check_state(&next, t)?;
    Ok(GalerkinState { field: next, t, eps })
}

/// Runs the full time loop, recording every `save_stride`-th state.
/// Deterministic given (config, path).
pub fn simulate(config: &SimConfig, path: &BrownianPath) -> Result<Trajectory> {
    config.validate()?;
    if (path.dt - config.dt).abs() > 1e-12 * config.dt.max(1.0) {
        return Err(Error::Validation(format!(
            "path dt {} does not match config dt {}",
            path.dt, config.dt
        )));
    }
    let steps = config.steps();
    if path.increments.len() < steps {
        return Err(Error::Validation(format!(
            "path has {} increments, simulation needs {steps}",
            path.increments.len()
        )));
    }

    let mut state = GalerkinState::new(config.initial_field(), 0.0, config.epsilon)?;
    check_state(&state.field, 0.0)?;
    let mut times = vec![0.0];
    let mut fields = vec![state.field.clone()];
    for i in 0..steps {
        state = step(
            &state,
            path.increments[i],
            config.dt,
            config.scheme,
            &config.nonlinearity,
            &config.noise,
        )?;
        if (i + 1) % config.save_stride == 0 || i + 1 == steps {
            times.push((i + 1) as f64 * config.dt);
            fields.push(state.field.clone());
        }
    }
    Ok(Trajectory { times, fields, config: config.clone() })
}

/// Strong-order study against bridge-refined common paths.
#[derive(Clone, Debug, Serialize)]
pub struct StrongOrderReport {
    /// Mean over samples of each sample's least-squares log2-gap slope.
    pub mean_slope: f64,
    /// Slope fitted on the ensemble-mean gap per level.
    pub ensemble_slope: f64,
    /// Ensemble-mean endpoint L2 gap between consecutive levels.
    pub mean_gaps: Vec<f64>,
    pub samples: usize,
    pub excluded: usize,
}

/// Estimates the strong convergence order of the configured scheme.
///
/// Each sample runs at dt, dt/2, ..., dt/2^(levels-1) on a common
/// bridge-refined path; the slope of log2(endpoint gap) against level is
/// the order estimate. Blown-up samples are excluded and counted.
pub fn strong_order(config: &SimConfig, levels: usize, samples: usize) -> Result<StrongOrderReport> {
    if levels < 3 {
        return Err(Error::Validation("strong_order needs levels >= 3".into()));
    }
    config.validate()?;

    let mut slopes = Vec::with_capacity(samples);
    let mut gap_sums = vec![0.0; levels - 1];
    let mut excluded = 0usize;
    for sample in 0..samples {
        let seed = derive_seed(config.seed, sample as u64, 0);
        let mut path = sample_path(config.t_final, config.dt, seed)?;
        let mut endpoints = Vec::with_capacity(levels);
        let mut blew_up = false;
        let mut cfg = config.clone();
        for _ in 0..levels {
            match simulate(&cfg, &path) {
                Ok(traj) => endpoints.push(traj.endpoint().clone()),
                Err(Error::BlowUp { .. }) => {
                    blew_up = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            path = refine(&path);
            cfg.dt *= 0.5;
        }
        if blew_up {
            excluded += 1;
            continue;
        }
        let gaps: Vec<f64> = endpoints
            .windows(2)
            .map(|w| norm(&w[0].sub(&w[1]), SobolevSpace::L2, None).unwrap())
            .collect();
        for (s, g) in gap_sums.iter_mut().zip(&gaps) {
            *s += g;
        }
        slopes.push(log2_gap_slope(&gaps));
    }
    if slopes.is_empty() {
        return Err(Error::ExclusionBudget { excluded, total: samples });
    }
    let included = slopes.len();
    let mean_gaps: Vec<f64> = gap_sums.iter().map(|s| s / included as f64).collect();
    Ok(StrongOrderReport {
        mean_slope: slopes.iter().sum::<f64>() / included as f64,
        ensemble_slope: log2_gap_slope(&mean_gaps),
        mean_gaps,
        samples,
        excluded,
    })
}

/// Least-squares slope of log2(gap) against refinement level, negated so a
/// halving-per-level decay reads as +1.
fn log2_gap_slope(gaps: &[f64]) -> f64 {
    let logs: Vec<f64> = gaps.iter().map(|g| g.max(1e-300).log2()).collect();
    let n = logs.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - mean_x;
        num += dx * (y - mean_y);
        den += dx * dx;
    }
    -num / den
}

//! Galerkin drift and diffusion assembly for the nonclassical diffusion
//! system: mode-wise
//!
//! ```text
//! dc_k = -(lambda_k c_k + (P_n u^3, e_k) - c_k) / (1 + eps lambda_k) dt
//!        + (P_n g(u), e_k) / (1 + eps lambda_k) dB
//! ```
//!
//! with the cubic projected through a dealiased grid (M = 4n), the truncated
//! variant rho(||u||_H1 / R) * P_n u^3, and a linear/forced variant in which
//! the reaction term -u is absent.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{
    self, eigenvalue, helmholtz_solve, norm, SobolevSpace, SpectralField,
};

/// Reaction term selector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityMode {
    /// u^3 - u.
    Cubic,
    /// rho(||u||_H1 / radius) u^3 - u; coincides with `Cubic` while the
    /// H1 norm stays below `radius`.
    Truncated { radius: f64 },
    /// Pure linear dynamics with a fixed forcing f (no -u term):
    /// dc_k = -(lambda_k c_k + f_k) / (1 + eps lambda_k) dt + ...
    Linear {
        #[serde(default)]
        forcing: Option<SpectralField>,
    },
}

impl NonlinearityMode {
    pub fn linear_unforced() -> Self {
        NonlinearityMode::Linear { forcing: None }
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        match self {
            NonlinearityMode::Truncated { radius } if *radius <= 0.0 => Err(
                crate::error::Error::Validation(format!(
                    "truncation radius must be positive, got {radius}"
                )),
            ),
            NonlinearityMode::Linear { forcing: Some(f) } if f.n_modes() != n_modes => {
                Err(crate::error::Error::Validation(format!(
                    "forcing has {} modes, simulation has {n_modes}",
                    f.n_modes()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Built-in diffusion coefficients g(u) driven by the scalar Brownian motion.
///
/// `Additive` and `LinearMult` satisfy the linear-growth and Lipschitz
/// bounds with L = max(|gamma|, |gamma| * ||profile||_L2). `SineMult` is a
/// stress model: globally Lipschitz in L2 but only locally so in H1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseModel {
    /// g(u) = gamma * profile, state-independent.
    Additive { profile: SpectralField, gamma: f64 },
    /// g(u) = gamma * u.
    LinearMult { gamma: f64 },
    /// g(u) = gamma * sin(u) pointwise.
    SineMult { gamma: f64 },
}

impl NoiseModel {
    /// The documented growth constant L of assumption-style bounds.
    pub fn growth_constant(&self) -> f64 {
        match self {
            NoiseModel::Additive { profile, gamma } => {
                let pn = norm(profile, SobolevSpace::L2, None).unwrap_or(f64::INFINITY);
                gamma.abs().max(gamma.abs() * pn)
            }
            NoiseModel::LinearMult { gamma } | NoiseModel::SineMult { gamma } => gamma.abs(),
        }
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if let NoiseModel::Additive { profile, .. } = self {
            if profile.n_modes() > n_modes {
                return Err(crate::error::Error::Validation(format!(
                    "noise profile has {} modes, simulation has {n_modes}",
                    profile.n_modes()
                )));
            }
        }
        Ok(())
    }
}

/// Instantaneous state of the Galerkin system.
#[derive(Clone, Debug)]
pub struct GalerkinState {
    pub field: SpectralField,
    pub t: f64,
    pub eps: f64,
}

impl GalerkinState {
    pub fn new(field: SpectralField, t: f64, eps: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&eps) {
            return Err(crate::error::Error::Validation(format!(
                "eps = {eps} outside [0, 1/2]"
            )));
        }
        Ok(Self { field, t, eps })
    }
}

/// Dealiased grid size for the cubic: products of three modes reach
/// wavenumber 3n, and M = 4n keeps both the cube and its L2 projection exact.
pub fn dealiased_nodes(n_modes: usize) -> usize {
    4 * n_modes
}

/// Coefficients of P_n(u^3): synthesize on 4n nodes, cube pointwise,
/// project back. Exact for band-limited u.
pub fn cubic_projection(f: &SpectralField) -> SpectralField {
    let n = f.n_modes();
    let plan = spectral::plan(n, dealiased_nodes(n));
    let mut grid = plan.synthesize(f);
    for v in grid.values_mut() {
        *v = *v * *v * *v;
    }
    plan.analyze(&grid, n).expect("4n nodes always satisfy M >= 2n")
}

/// Cut-off factor rho(||f||_H1 / R): 1 on [0, R], 0 beyond 2R, and the
/// C1 smoothstep 1 - 3 s^2 + 2 s^3 (s = r - 1) in between.
pub fn truncation_factor(f: &SpectralField, radius: f64) -> f64 {
    assert!(radius > 0.0);
    let r = norm(f, SobolevSpace::H1, None).unwrap() / radius;
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let s = r - 1.0;
        1.0 - 3.0 * s * s + 2.0 * s * s * s
    }
}

/// The projected reaction term N with the convention that the drift reads
/// -(lambda_k c_k + N_k - c_k) / (1 + eps lambda_k) for Cubic/Truncated.
/// Returns `None` in Linear mode (no reaction; forcing handled separately).
pub fn reaction_projection(f: &SpectralField, mode: &NonlinearityMode) -> Option<SpectralField> {
    match mode {
        NonlinearityMode::Cubic => Some(cubic_projection(f)),
        NonlinearityMode::Truncated { radius } => {
            let rho = truncation_factor(f, *radius);
            // rho == 1 must reproduce Cubic bit-for-bit.
            if rho == 1.0 {
                Some(cubic_projection(f))
            } else if rho == 0.0 {
                Some(SpectralField::zeros(f.n_modes()))
            } else {
                Some(cubic_projection(f).scaled(rho))
            }
        }
        NonlinearityMode::Linear { .. } => None,
    }
}

/// Drift vector a_k of the Galerkin system under the given reaction mode.
pub fn drift(state: &GalerkinState, mode: &NonlinearityMode) -> SpectralField {
    let f = &state.field;
    let n = f.n_modes();
    let nonlinear = reaction_projection(f, mode);

    let coeffs = (1..=n)
        .map(|k| {
            let lam = eigenvalue(k);
            let c = f.coeff(k);
            let numerator = match (&nonlinear, mode) {
                (Some(cube), _) => lam * c + cube.coeff(k) - c,
                (None, NonlinearityMode::Linear { forcing }) => {
                    let fk = forcing.as_ref().map_or(0.0, |g| g.coeff(k));
                    lam * c + fk
                }
                _ => unreachable!(),
            };
            -numerator / (1.0 + state.eps * lam)
        })
        .collect();
    SpectralField::from_coeffs_unchecked(coeffs)
}

/// P_n g(u) before the Helmholtz factor is applied.
pub fn noise_projection(f: &SpectralField, model: &NoiseModel, nodes: usize) -> SpectralField {
    let n = f.n_modes();
    match model {
        NoiseModel::Additive { profile, gamma } => profile.resized(n).scaled(*gamma),
        NoiseModel::LinearMult { gamma } => f.scaled(*gamma),
        NoiseModel::SineMult { gamma } => {
            let plan = spectral::plan(n, nodes);
            let mut grid = plan.synthesize(f);
            for v in grid.values_mut() {
                *v = gamma * v.sin();
            }
            plan.analyze(&grid, n).expect("caller supplies nodes >= 2n")
        }
    }
}

/// Diffusion vector b_k = (P_n g(u), e_k) / (1 + eps lambda_k).
pub fn diffusion(state: &GalerkinState, model: &NoiseModel) -> SpectralField {
    let n = state.field.n_modes();
    let projected = noise_projection(&state.field, model, 2 * n);
    helmholtz_solve(&projected, state.eps).expect("eps validated nonnegative")
}

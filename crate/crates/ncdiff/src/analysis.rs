//! Trajectory functionals: Bochner norms in time, the pathwise discrete
//! energy identity, the time-shift modulus, and the sup-energy statistic.
//!
//! Time integrals use the trapezoid rule on the saved grid. The shift
//! modulus integrates over t in [0, T - theta]; the integrand is symmetric
//! under theta -> -theta after a change of variables, so positive shifts
//! suffice.

use serde::Serialize;

use crate::dynamics::noise_projection;
use crate::error::{Error, Result};
use crate::integrators::{SimConfig, Trajectory};
use crate::spectral::{eigenvalue, norm, SobolevSpace, SpectralField};
use crate::stochastic::BrownianPath;

/// Trapezoid weights for a (possibly nonuniform) time grid.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = times[i + 1] - times[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// (int_0^T ||u(t)||_s^2 dt)^(1/2) by trapezoid on the saved grid.
pub fn bochner_norm(traj: &Trajectory, s: SobolevSpace) -> f64 {
    assert!(!traj.is_empty());
    let w = trapezoid_weights(&traj.times);
    let sum: f64 = traj
        .fields
        .iter()
        .zip(&w)
        .map(|(f, wj)| {
            let v = norm(f, s, None).expect("trajectory fields are finite");
            wj * v * v
        })
        .sum();
    sum.sqrt()
}

/// All terms of the discrete Ito energy identity, aligned with the saved
/// grid (stride 1 required).
#[derive(Clone, Debug, Serialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    /// ||u||^2 + eps ||u_x||^2 at each time.
    pub energy: Vec<f64>,
    /// 2 (||u_x||^2 + ||u||_L4^4) at each time.
    pub dissipation: Vec<f64>,
    /// 2 ||u||^2 + sum_k (P_n g, e_k)^2 / (1 + eps lambda_k) at each time.
    pub growth: Vec<f64>,
    /// 2 (u, P_n g(u)) dB per step (one fewer entry than times).
    pub martingale_increments: Vec<f64>,
    /// residual_j = dE_j + dissipation_j dt - growth_j dt - martingale_j.
    pub residuals: Vec<f64>,
}

impl EnergyLedger {
    pub fn compute(traj: &Trajectory, path: &BrownianPath, config: &SimConfig) -> Result<Self> {
        if config.save_stride != 1 {
            return Err(Error::Validation(
                "energy ledger requires save_stride = 1".into(),
            ));
        }
        if path.increments.len() + 1 < traj.len() {
            return Err(Error::Validation("path shorter than trajectory".into()));
        }
        let eps = config.epsilon;
        let n = config.n_modes;
        let noise = &config.noise;

        let mut energy = Vec::with_capacity(traj.len());
        let mut dissipation = Vec::with_capacity(traj.len());
        let mut growth = Vec::with_capacity(traj.len());
        let mut projected_noise: Vec<SpectralField> = Vec::with_capacity(traj.len());
        for f in &traj.fields {
            let l2 = norm(f, SobolevSpace::L2, None)?;
            let h1s = norm(f, SobolevSpace::H1semi, None)?;
            let l4 = norm(f, SobolevSpace::L4, None)?;
            energy.push(l2 * l2 + eps * h1s * h1s);
            dissipation.push(2.0 * (h1s * h1s + l4.powi(4)));
            let g = noise_projection(f, noise, 2 * n);
            let ito: f64 = g
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, gk)| gk * gk / (1.0 + eps * eigenvalue(i + 1)))
                .sum();
            growth.push(2.0 * l2 * l2 + ito);
            projected_noise.push(g);
        }

        let dt = config.dt;
        let mut martingale_increments = Vec::with_capacity(traj.len() - 1);
        let mut residuals = Vec::with_capacity(traj.len().saturating_sub(1));
        for j in 0..traj.len() - 1 {
            let mart = 2.0 * traj.fields[j].inner(&projected_noise[j]) * path.increments[j];
            martingale_increments.push(mart);
            let de = energy[j + 1] - energy[j];
            residuals.push(de + dissipation[j] * dt - growth[j] * dt - mart);
        }

        Ok(EnergyLedger {
            times: traj.times.clone(),
            energy,
            dissipation,
            growth,
            martingale_increments,
            residuals,
        })
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn cumulative_residual(&self) -> f64 {
        self.residuals.iter().sum()
    }
}

/// Max absolute per-step residual of the energy identity.
pub fn energy_residual(traj: &Trajectory, path: &BrownianPath, config: &SimConfig) -> Result<f64> {
    Ok(EnergyLedger::compute(traj, path, config)?.max_abs_residual())
}

/// sup over grid shifts theta <= delta of
/// int_0^{T-theta} ||u(t+theta) - u(t)||_s^2 dt (trapezoid on the grid).
pub fn shift_modulus(traj: &Trajectory, delta: f64, s: SobolevSpace) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::Validation("trajectory too short for a shift".into()));
    }
    let grid_dt = traj.times[1] - traj.times[0];
    if delta > 1.0 {
        return Err(Error::Validation(format!("delta = {delta} > 1")));
    }
    if delta < grid_dt - 1e-12 {
        return Err(Error::Validation(format!(
            "delta = {delta} below the save interval {grid_dt}"
        )));
    }
    let max_shift = ((delta / grid_dt) + 1e-9).floor() as usize;
    let mut sup = 0.0f64;
    for shift in 1..=max_shift.min(traj.len() - 1) {
        // Integrand on the restricted grid t_0 .. t_{N-shift}.
        let m = traj.len() - shift;
        let times = &traj.times[..m];
        let w = trapezoid_weights(times);
        let mut integral = 0.0;
        for j in 0..m {
            let diff = traj.fields[j + shift].sub(&traj.fields[j]);
            let v = norm(&diff, s, None)?;
            integral += w[j] * v * v;
        }
        sup = sup.max(integral);
    }
    Ok(sup)
}

/// max over saved times of (||u||^2 + eps ||u_x||^2)^(p/2).
pub fn sup_energy(traj: &Trajectory, p: f64, eps: f64) -> f64 {
    assert!(p >= 1.0);
    traj.fields
        .iter()
        .map(|f| {
            let l2 = norm(f, SobolevSpace::L2, None).unwrap();
            let h1s = norm(f, SobolevSpace::H1semi, None).unwrap();
            (l2 * l2 + eps * h1s * h1s).powf(p / 2.0)
        })
        .fold(0.0, f64::max)
}

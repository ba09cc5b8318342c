//! Dirichlet sine eigenbasis on I = [0,1]: spectral fields, Sobolev norms,
//! grid transforms and the Helmholtz regularization (1 - eps * d_xx)^-1.
//!
//! The basis is e_k(x) = sqrt(2) sin(k pi x) with eigenvalues
//! lambda_k = (k pi)^2 of -d_xx under homogeneous Dirichlet conditions.
//! Grid fields live on the interior uniform nodes x_j = j/(M+1), j = 1..M,
//! which carry the discrete sine-transform orthogonality
//! sum_j e_k(x_j) e_l(x_j) / (M+1) = delta_kl for k, l <= M.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue lambda_k = (k pi)^2 of the Dirichlet Laplacian on [0,1].
///
/// Panics if `k == 0`: there is no constant mode under Dirichlet conditions.
pub fn eigenvalue(k: usize) -> f64 {
    assert!(k >= 1, "mode index must be >= 1 (no constant Dirichlet mode)");
    let kpi = k as f64 * PI;
    kpi * kpi
}

/// Basis function e_k(x) = sqrt(2) sin(k pi x).
///
/// Panics if `k == 0` or `x` lies outside [0,1].
pub fn eval_basis(k: usize, x: f64) -> f64 {
    assert!(k >= 1, "mode index must be >= 1");
    assert!((0.0..=1.0).contains(&x), "x = {x} outside [0,1]");
    std::f64::consts::SQRT_2 * (k as f64 * PI * x).sin()
}

/// Coefficient vector c_1..c_n of u = sum_k c_k e_k. The simulation state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    /// Builds a field from raw coefficients; rejects non-finite entries.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation("spectral field needs >= 1 mode".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Validation(format!("non-finite coefficient {c}")));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(n_modes: usize) -> Self {
        assert!(n_modes >= 1);
        Self { coeffs: vec![0.0; n_modes] }
    }

    /// The pure mode e_k embedded in an n-mode field.
    pub fn basis(k: usize, n_modes: usize) -> Self {
        assert!(k >= 1 && k <= n_modes);
        let mut f = Self::zeros(n_modes);
        f.coeffs[k - 1] = 1.0;
        f
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of e_k (1-based).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs[k - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Zero-pads or truncates to `n_modes` entries.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n_modes, 0.0);
        Self { coeffs }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_modes(), other.n_modes());
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n_modes(), other.n_modes());
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// L2 inner product (u, w) = sum_k c_k d_k (orthonormal basis).
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.n_modes(), other.n_modes());
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Direct access used by the integrators' hot loop.
    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub(crate) fn from_coeffs_unchecked(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }
}

/// Physical-space samples at the interior nodes x_j = j/(M+1), j = 1..M.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        Self { values }
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// j-th interior node x_j = j/(M+1), 1-based.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / (self.values.len() as f64 + 1.0)
    }
}

/// Norm selector. L4 is grid-computed; the others come from coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevSpace {
    L2,
    H1semi,
    H1,
    H2,
    Hneg1,
    L4,
}

/// Precomputed sine-transform plan between n modes and an M-node grid.
///
/// Stores the table e_k(x_j) so repeated transforms in the time loop avoid
/// re-evaluating sines.
pub struct SineTransform {
    n_modes: usize,
    nodes: usize,
    /// Row-major [j][k] table of e_{k+1}(x_{j+1}).
    table: Vec<f64>,
}

impl SineTransform {
    pub fn new(n_modes: usize, nodes: usize) -> Self {
        assert!(n_modes >= 1 && nodes >= 1);
        let mut table = Vec::with_capacity(n_modes * nodes);
        for j in 1..=nodes {
            let x = j as f64 / (nodes as f64 + 1.0);
            for k in 1..=n_modes {
                table.push(std::f64::consts::SQRT_2 * (k as f64 * PI * x).sin());
            }
        }
        Self { n_modes, nodes, table }
    }

    /// Evaluates u = sum c_k e_k at the interior nodes.
    pub fn synthesize(&self, f: &SpectralField) -> GridField {
        assert!(f.n_modes() <= self.n_modes);
        let n = f.n_modes();
        let mut values = vec![0.0; self.nodes];
        for (j, v) in values.iter_mut().enumerate() {
            let row = &self.table[j * self.n_modes..j * self.n_modes + n];
            *v = row.iter().zip(f.coeffs()).map(|(e, c)| e * c).sum();
        }
        GridField::new(values)
    }

    /// Discrete L2 projection onto the first `n` modes:
    /// c_k = sum_j v_j e_k(x_j) / (M+1).
    pub fn analyze(&self, g: &GridField, n: usize) -> Result<SpectralField> {
        assert_eq!(g.node_count(), self.nodes);
        assert!(n <= self.n_modes);
        if self.nodes < 2 * n {
            return Err(Error::Aliasing { nodes: self.nodes, required: 2 * n });
        }
        let w = 1.0 / (self.nodes as f64 + 1.0);
        let mut coeffs = vec![0.0; n];
        for (j, v) in g.values().iter().enumerate() {
            let row = &self.table[j * self.n_modes..j * self.n_modes + n];
            for (c, e) in coeffs.iter_mut().zip(row) {
                *c += v * e;
            }
        }
        for c in &mut coeffs {
            *c *= w;
        }
        // Non-finite values are allowed to pass through so that a diverging
        // state is caught by the integrator's blow-up check, not a panic.
        Ok(SpectralField::from_coeffs_unchecked(coeffs))
    }
}

static PLAN_CACHE: Lazy<Mutex<HashMap<(usize, usize), Arc<SineTransform>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared, memoized transform plan for (n_modes, nodes).
pub fn plan(n_modes: usize, nodes: usize) -> Arc<SineTransform> {
    let mut cache = PLAN_CACHE.lock().unwrap();
    cache
        .entry((n_modes, nodes))
        .or_insert_with(|| Arc::new(SineTransform::new(n_modes, nodes)))
        .clone()
}

/// Evaluates `f` on the M-node interior grid by direct summation.
pub fn synthesize(f: &SpectralField, nodes: usize) -> GridField {
    plan(f.n_modes(), nodes).synthesize(f)
}

/// Projects a grid field onto the first `n` modes. Requires M >= 2n.
pub fn analyze(g: &GridField, n: usize) -> Result<SpectralField> {
    plan(n, g.node_count()).analyze(g, n)
}

/// Sobolev / Lebesgue norm of a spectral field.
///
/// Coefficient formulas for L2, H1semi, H1, H2, Hneg1; L4 goes through the
/// grid with weight 1/(M+1), exact for band-limited u when M >= 4 n_modes.
/// `l4_nodes` defaults to 4 * n_modes.
pub fn norm(f: &SpectralField, s: SobolevSpace, l4_nodes: Option<usize>) -> Result<f64> {
    match s {
        SobolevSpace::L4 => {
            let m = l4_nodes.unwrap_or(4 * f.n_modes());
            if m < 4 * f.n_modes() {
                return Err(Error::Aliasing { nodes: m, required: 4 * f.n_modes() });
            }
            let grid = synthesize(f, m);
            let w = 1.0 / (m as f64 + 1.0);
            let quartic: f64 = grid.values().iter().map(|v| v * v * v * v).sum();
            Ok((w * quartic).powf(0.25))
        }
        _ => {
            let sum: f64 = f
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let lam = eigenvalue(i + 1);
                    let weight = match s {
                        SobolevSpace::L2 => 1.0,
                        SobolevSpace::H1semi => lam,
                        SobolevSpace::H1 => 1.0 + lam,
                        SobolevSpace::H2 => lam * lam,
                        SobolevSpace::Hneg1 => 1.0 / lam,
                        SobolevSpace::L4 => unreachable!(),
                    };
                    weight * c * c
                })
                .sum();
            Ok(sum.sqrt())
        }
    }
}

/// Solves u - eps * u_xx = v in the sine basis: c_k -> c_k / (1 + eps lambda_k).
///
/// The identity for eps = 0; an L2 (and H1semi, Hneg1) contraction for eps > 0.
pub fn helmholtz_solve(f: &SpectralField, eps: f64) -> Result<SpectralField> {
    if eps < 0.0 {
        return Err(Error::Validation(format!("helmholtz eps = {eps} < 0")));
    }
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c / (1.0 + eps * eigenvalue(i + 1)))
        .collect();
    Ok(SpectralField::from_coeffs_unchecked(coeffs))
}

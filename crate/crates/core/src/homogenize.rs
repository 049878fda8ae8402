//! Effective Hooke tensor from three load cases, and its isotropic part.

use crate::beam::{self, BeamConfig};
use crate::domain::Domain;
use crate::experiment::ResultRow;
use crate::solver::{solve_spd, SolveReport, SolverConfig, SolverError};
use crate::spring::{self, SpringConfig};
use crate::system::{tensor_to_voigt_stress, AssembledSystem, MacroStrain, MechError, Tensor2};
use serde::{Deserialize, Serialize};

pub type Voigt3 = [[f64; 3]; 3];

/// Relative asymmetry above which a Hooke matrix is rejected.
pub const ASYMMETRY_LIMIT: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum HomogenizeError {
    #[error(transparent)]
    Mech(#[from] MechError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("Hooke matrix asymmetry {0:e} exceeds {ASYMMETRY_LIMIT:e}")]
    Asymmetric(f64),
    #[error("anisotropy index undefined for the zero tensor")]
    ZeroTensor,
    #[error("cannot average: {0}")]
    Average(String),
}

/// Voigt Hooke matrix mapping `(E11, E22, 2E12)` to `(S11, S22, S12)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HookeVoigt {
    pub h: Voigt3,
    /// `max|H - Hᵀ| / max|H|` before symmetrization.
    pub asymmetry: f64,
}

impl HookeVoigt {
    /// Symmetrize `raw`, recording its asymmetry.
    pub fn from_columns(raw: Voigt3) -> Self {
        let scale = raw.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut asym: f64 = 0.0;
        let mut h = raw;
        for i in 0..3 {
            for j in 0..3 {
                asym = asym.max((raw[i][j] - raw[j][i]).abs());
                h[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
            }
        }
        Self { h, asymmetry: if scale > 0.0 { asym / scale } else { 0.0 } }
    }

    pub fn symmetric(h: Voigt3) -> Self {
        Self::from_columns(h)
    }

    /// Isotropic matrix with Lamé constants `(λ, μ)`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        Self::symmetric([[lambda + 2.0 * mu, lambda, 0.0], [lambda, lambda + 2.0 * mu, 0.0], [0.0, 0.0, mu]])
    }

    pub fn h11(&self) -> f64 {
        self.h[0][0]
    }
    pub fn h12(&self) -> f64 {
        self.h[0][1]
    }
    pub fn h16(&self) -> f64 {
        self.h[0][2]
    }
    pub fn h22(&self) -> f64 {
        self.h[1][1]
    }
    pub fn h26(&self) -> f64 {
        self.h[1][2]
    }
    pub fn h66(&self) -> f64 {
        self.h[2][2]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut h = self.h;
        h.iter_mut().flatten().for_each(|v| *v *= s);
        Self { h, asymmetry: self.asymmetry }
    }
}

/// Fourth-order inner product `A::B` of two Voigt Hooke matrices.
pub fn inner(a: &Voigt3, b: &Voigt3) -> f64 {
    a[0][0] * b[0][0]
        + a[1][1] * b[1][1]
        + 2.0 * a[0][1] * b[0][1]
        + 4.0 * (a[0][2] * b[0][2] + a[1][2] * b[1][2] + a[2][2] * b[2][2])
}

/// `√(H::H)`.
pub fn tensor_norm(h: &Voigt3) -> f64 {
    inner(h, h).sqrt()
}

/// First isotropic basis tensor.
pub fn basis_h1() -> Voigt3 {
    [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]]
}

/// Second isotropic basis tensor.
pub fn basis_h2() -> Voigt3 {
    let c = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    [[c, -c, 0.0], [-c, c, 0.0], [0.0, 0.0, c]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropyDecomposition {
    pub alpha1: f64,
    pub alpha2: f64,
    pub hperp: Voigt3,
    /// Closed-form anisotropy index.
    pub index: f64,
    /// `‖H⊥‖/‖H‖` from the explicit projection.
    pub index_projection: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
}

/// Closed-form anisotropy index.
pub fn anisotropy_index(h: &Voigt3) -> Result<f64, HomogenizeError> {
    let n = tensor_norm(h);
    if n == 0.0 {
        return Err(HomogenizeError::ZeroTensor);
    }
    let (h11, h12, h16, h22, h26, h66) = (h[0][0], h[0][1], h[0][2], h[1][1], h[1][2], h[2][2]);
    let s =
        4.0 * (h16 * h16 + h26 * h26) + 0.5 * (h11 - h22).powi(2) + 0.125 * (h11 + h22 - 2.0 * h12 - 4.0 * h66).powi(2);
    Ok(s.sqrt() / n)
}

pub fn decompose(hv: &HookeVoigt) -> Result<IsotropyDecomposition, HomogenizeError> {
    let h = &hv.h;
    let index = anisotropy_index(h)?;
    let (b1, b2) = (basis_h1(), basis_h2());
    let alpha1 = inner(h, &b1);
    let alpha2 = inner(h, &b2);
    let mut hperp = *h;
    for i in 0..3 {
        for j in 0..3 {
            hperp[i][j] -= alpha1 * b1[i][j] + alpha2 * b2[i][j];
        }
    }
    let lambda = hv.h12();
    let mu = hv.h66();
    Ok(IsotropyDecomposition {
        alpha1,
        alpha2,
        hperp,
        index,
        index_projection: tensor_norm(&hperp) / tensor_norm(h),
        lambda,
        mu,
        nu: lambda / (lambda + 2.0 * mu),
    })
}

/// Solved load cases of one realization.
#[derive(Debug, Clone)]
pub struct Homogenization {
    pub hooke: HookeVoigt,
    /// Free-DOF solutions for the three load cases.
    pub solutions: [Vec<f64>; 3],
    pub report: SolveReport,
    pub system: AssembledSystem,
}

/// Solve the three load cases against one factorization and collect the
/// Voigt stress columns given by `stress`.
pub fn run_load_cases(
    system: AssembledSystem,
    solver: &SolverConfig,
    stress: impl Fn(&AssembledSystem, &MacroStrain, &[f64]) -> Result<Tensor2, MechError>,
) -> Result<Homogenization, HomogenizeError> {
    let cases = MacroStrain::load_cases();
    let rhs: Vec<Vec<f64>> = cases.iter().map(|e| system.load_vector(e)).collect();
    let (sols, report) = solve_spd(&system.k, &rhs, solver)?;
    let mut raw = [[0.0; 3]; 3];
    for (c, (e, u)) in cases.iter().zip(&sols).enumerate() {
        let s = tensor_to_voigt_stress(stress(&system, e, u)?);
        for r in 0..3 {
            raw[r][c] = s[r];
        }
    }
    let hooke = HookeVoigt::from_columns(raw);
    if !(hooke.asymmetry <= ASYMMETRY_LIMIT) {
        return Err(HomogenizeError::Asymmetric(hooke.asymmetry));
    }
    let mut it = sols.into_iter();
    let solutions = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    Ok(Homogenization { hooke, solutions, report, system })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelRef<'a> {
    Spring(&'a SpringConfig),
    Beam(&'a BeamConfig),
}

/// Assemble and homogenize one domain with the model's explicit stress formula.
pub fn homogenize(d: &Domain, model: ModelRef<'_>, solver: &SolverConfig) -> Result<Homogenization, HomogenizeError> {
    let tol = solver.tolerance;
    match model {
        ModelRef::Spring(cfg) => run_load_cases(spring::assemble(d, cfg)?, solver, |sys, e, u| {
            spring::macroscopic_stress_checked(d, cfg, sys, e, u, tol)
        }),
        ModelRef::Beam(cfg) => run_load_cases(beam::assemble_beam(d, cfg)?, solver, |sys, e, u| {
            beam::macroscopic_stress_beam_checked(d, cfg, sys, e, u, tol)
        }),
    }
}

/// Means and spread over the realizations of one `(model, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetAverage {
    pub model: String,
    pub n: u32,
    pub count: usize,
    pub failures: usize,
    pub mean_lambda: f64,
    pub mean_mu: f64,
    pub mean_index: f64,
    /// `⟨λ⟩/(⟨λ⟩ + 2⟨μ⟩)`.
    pub nu_of_means: f64,
    /// `⟨λ/(λ + 2μ)⟩`.
    pub mean_nu: f64,
    pub min_index: f64,
    pub max_index: f64,
    pub std_index: f64,
}

pub fn set_average(rows: &[ResultRow]) -> Result<SetAverage, HomogenizeError> {
    let first = rows.first().ok_or_else(|| HomogenizeError::Average("no rows".into()))?;
    if let Some(r) = rows.iter().find(|r| r.n != first.n || r.model != first.model) {
        return Err(HomogenizeError::Average(format!(
            "mixed sets: ({}, {}) and ({}, {})",
            first.model, first.n, r.model, r.n
        )));
    }
    let k = rows.len() as f64;
    let mean = |f: &dyn Fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / k;
    let mean_lambda = mean(&|r| r.lambda);
    let mean_mu = mean(&|r| r.mu);
    let mean_index = mean(&|r| r.index);
    let var = rows.iter().map(|r| (r.index - mean_index).powi(2)).sum::<f64>() / k;
    Ok(SetAverage {
        model: first.model.clone(),
        n: first.n,
        count: rows.len(),
        failures: 0,
        mean_lambda,
        mean_mu,
        mean_index,
        nu_of_means: mean_lambda / (mean_lambda + 2.0 * mean_mu),
        mean_nu: mean(&|r| r.nu),
        min_index: rows.iter().map(|r| r.index).fold(f64::INFINITY, f64::min),
        max_index: rows.iter().map(|r| r.index).fold(f64::NEG_INFINITY, f64::max),
        std_index: var.sqrt(),
    })
}

//! Pair and angular (Kirkwood-Keating) spring network.

use crate::domain::{AngleTriple, Domain, Edge};
use crate::system::{
    add_t, bilinear_voigt, dyad_sym, outer_scaled, scale_t, AssembledSystem, DofMap, ElementMatrix, MacroStrain,
    MechError, Tensor2,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpringConfig {
    /// Force scale of the pair stiffness `k1 = khat1 / |r0|`.
    pub khat1: f64,
    /// Non-dimensional angular stiffness `a·k2 / khat1`.
    pub k2_ratio: f64,
    /// Length unit `a` in shortest-edge units.
    pub unit_length: f64,
}

impl Default for SpringConfig {
    fn default() -> Self {
        Self { khat1: 1.0, k2_ratio: 1.0, unit_length: crate::lattice::UNIT_A }
    }
}

impl SpringConfig {
    pub fn k2(&self) -> f64 {
        self.k2_ratio * self.khat1 / self.unit_length
    }

    pub fn k1(&self, length: f64) -> f64 {
        self.khat1 / length
    }

    pub fn validate(&self) -> Result<(), MechError> {
        if !(self.khat1 > 0.0 && self.khat1.is_finite()) {
            return Err(MechError::Config(format!("khat1 must be positive, got {}", self.khat1)));
        }
        if !(self.k2_ratio >= 0.0 && self.k2_ratio.is_finite()) {
            return Err(MechError::Config(format!("k2_ratio must be >= 0, got {}", self.k2_ratio)));
        }
        if !(self.unit_length > 0.0 && self.unit_length.is_finite()) {
            return Err(MechError::Config(format!("unit_length must be positive, got {}", self.unit_length)));
        }
        Ok(())
    }

    /// Same configuration with every stiffness multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { khat1: self.khat1 * s, ..*self }
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// `k1/2 [((E r0) + Δû)·N]²`.
pub fn pair_energy(e: &Edge, cfg: &SpringConfig, strain: &MacroStrain, du: [f64; 2]) -> f64 {
    let r0 = e.r0_xy();
    let n = e.unit_dir();
    let s = dot(strain.apply(r0), n) + dot(du, n);
    0.5 * cfg.k1(e.length()) * s * s
}

/// `k2 / (2|r_ij||r_ik|) [Δû_j·r_ik + Δû_k·r_ij + 2(E r_ij)·r_ik]²`.
pub fn angle_energy(t: &AngleTriple, cfg: &SpringConfig, strain: &MacroStrain, du_j: [f64; 2], du_k: [f64; 2]) -> f64 {
    let (rij, rik) = (t.r0_ij.to_xy(), t.r0_ik.to_xy());
    let s = dot(du_j, rik) + dot(du_k, rij) + 2.0 * dot(strain.apply(rij), rik);
    0.5 * cfg.k2() / (t.r0_ij.norm() * t.r0_ik.norm()) * s * s
}

/// `k1 [(E r0)·r0 + Δû·r0] N⊗N`, not divided by area.
pub fn pair_stress_term(e: &Edge, cfg: &SpringConfig, strain: &MacroStrain, du: [f64; 2]) -> Tensor2 {
    let r0 = e.r0_xy();
    let n = e.unit_dir();
    let s = dot(strain.apply(r0), r0) + dot(du, r0);
    scale_t(dyad_sym(n, n), 0.5 * cfg.k1(e.length()) * s)
}

/// `k2 [2(E r_ij)·r_ik + Δû_j·r_ik + Δû_k·r_ij] (N_ij⊗N_ik + N_ik⊗N_ij)`.
pub fn angle_stress_term(
    t: &AngleTriple,
    cfg: &SpringConfig,
    strain: &MacroStrain,
    du_j: [f64; 2],
    du_k: [f64; 2],
) -> Tensor2 {
    let (rij, rik) = (t.r0_ij.to_xy(), t.r0_ik.to_xy());
    let (lj, lk) = (t.r0_ij.norm(), t.r0_ik.norm());
    let nij = [rij[0] / lj, rij[1] / lj];
    let nik = [rik[0] / lk, rik[1] / lk];
    let s = 2.0 * dot(strain.apply(rij), rik) + dot(du_j, rik) + dot(du_k, rij);
    scale_t(dyad_sym(nij, nik), cfg.k2() * s)
}

fn pair_element(e: &Edge, cfg: &SpringConfig, map: &DofMap) -> ElementMatrix {
    let r0 = e.r0_xy();
    let n = e.unit_dir();
    let c = bilinear_voigt(r0, n);
    let a = [-n[0], -n[1], n[0], n[1], c[0], c[1], c[2]];
    ElementMatrix { dofs: map.local(&[e.i, e.j]), m: outer_scaled(&a, cfg.k1(e.length())) }
}

fn angle_element(t: &AngleTriple, cfg: &SpringConfig, map: &DofMap) -> ElementMatrix {
    let (rij, rik) = (t.r0_ij.to_xy(), t.r0_ik.to_xy());
    let c = bilinear_voigt(rij, rik);
    let a = [-rij[0] - rik[0], -rij[1] - rik[1], rik[0], rik[1], rij[0], rij[1], 2.0 * c[0], 2.0 * c[1], 2.0 * c[2]];
    let scale = cfg.k2() / (t.r0_ij.norm() * t.r0_ik.norm());
    ElementMatrix { dofs: map.local(&[t.apex, t.j, t.k]), m: outer_scaled(&a, scale) }
}

/// Assemble on an explicit DOF map.
pub fn assemble_on(d: &Domain, cfg: &SpringConfig, map: DofMap) -> Result<AssembledSystem, MechError> {
    cfg.validate()?;
    if map.n_free == 0 {
        return Err(MechError::EmptyFreeSet);
    }
    enum El<'a> {
        Pair(&'a Edge),
        Angle(&'a AngleTriple),
    }
    let mut items: Vec<El> = d.edges.iter().map(El::Pair).collect();
    if cfg.k2() != 0.0 {
        items.extend(d.triples.iter().map(El::Angle));
    }
    let mut sys = AssembledSystem::assemble_with(map, &items, |el, map| match el {
        El::Pair(e) => pair_element(e, cfg, map),
        El::Angle(t) => angle_element(t, cfg, map),
    });
    sys.potentially_singular = cfg.k2() == 0.0;
    Ok(sys)
}

/// Assemble with two DOFs per interior vertex, boundary fluctuations eliminated.
pub fn assemble(d: &Domain, cfg: &SpringConfig) -> Result<AssembledSystem, MechError> {
    assemble_on(d, cfg, DofMap::interior(d, 2))
}

/// Direct summation of all pair and angular energies for per-vertex
/// fluctuations `u`.
pub fn total_energy(d: &Domain, cfg: &SpringConfig, strain: &MacroStrain, u: &[[f64; 3]]) -> f64 {
    let pairs: f64 = d.edges.iter().map(|e| pair_energy(e, cfg, strain, sub(u[e.j], u[e.i]))).sum();
    let angles: f64 =
        d.triples.iter().map(|t| angle_energy(t, cfg, strain, sub(u[t.j], u[t.apex]), sub(u[t.k], u[t.apex]))).sum();
    pairs + angles
}

/// Sum of pair stress terms only.
pub fn pair_stress_sum(d: &Domain, cfg: &SpringConfig, strain: &MacroStrain, u: &[[f64; 3]]) -> Tensor2 {
    d.edges.iter().fold([[0.0; 2]; 2], |s, e| add_t(s, pair_stress_term(e, cfg, strain, sub(u[e.j], u[e.i]))))
}

/// `(1/area) [Σ pair terms + Σ angular terms]` for per-vertex fluctuations `u`.
pub fn macroscopic_stress(d: &Domain, cfg: &SpringConfig, strain: &MacroStrain, u: &[[f64; 3]]) -> Tensor2 {
    let mut s = pair_stress_sum(d, cfg, strain, u);
    if cfg.k2() != 0.0 {
        for t in &d.triples {
            let term = angle_stress_term(t, cfg, strain, sub(u[t.j], u[t.apex]), sub(u[t.k], u[t.apex]));
            s = add_t(s, term);
        }
    }
    scale_t(s, 1.0 / d.area)
}

/// [`macroscopic_stress`] for a free-DOF solution, refusing solutions whose
/// relative residual exceeds `tol`.
pub fn macroscopic_stress_checked(
    d: &Domain,
    cfg: &SpringConfig,
    sys: &AssembledSystem,
    strain: &MacroStrain,
    u_free: &[f64],
    tol: f64,
) -> Result<Tensor2, MechError> {
    let residual = sys.relative_residual(strain, u_free);
    if !(residual <= tol) {
        return Err(MechError::NotConverged { residual, tol });
    }
    Ok(macroscopic_stress(d, cfg, strain, &sys.dof_map.expand(u_free)))
}

//! Timoshenko frame model: every edge is a beam with axial, shear and bending
//! energy; joints are welded so the rotation `ω` is shared at a vertex.
//!
//! Along an edge of length `L` the axial displacement and the rotation are
//! linear, the transverse displacement is quadratic. The quadratic part is an
//! internal bubble `b·4ξ(1-ξ)` eliminated by static condensation.

use crate::domain::{Domain, Edge, VertexClass};
use crate::system::{
    add_t, bilinear_voigt, dyad_sym, scale_t, AssembledSystem, DofMap, ElementMatrix, MacroStrain, MechError, Tensor2,
};
use nalgebra::{DMatrix, DVector, SMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryRotation {
    /// `ω = 0` on boundary vertices.
    #[default]
    Clamped,
    /// `ω` left free on boundary vertices (zero moment, natural condition).
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    /// Axial stiffness `ES`.
    pub es: f64,
    /// Shear stiffness `GS₂`.
    pub gs2: f64,
    /// Bending stiffness `EJ`.
    pub ej: f64,
    #[serde(skip)]
    pub boundary_rotation: BoundaryRotation,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self::with_unit(crate::lattice::UNIT_A)
    }
}

impl BeamConfig {
    /// `ES = 1`, `ES/GS₂ = 1/2` and `√(J/S) = a/2` for a length unit `a`.
    pub fn with_unit(a: f64) -> Self {
        Self { es: 1.0, gs2: 2.0, ej: 0.25 * a * a, boundary_rotation: BoundaryRotation::Clamped }
    }

    /// `√(EJ/ES)`.
    pub fn length_scale(&self) -> f64 {
        (self.ej / self.es).sqrt()
    }

    pub fn validate(&self) -> Result<(), MechError> {
        for (name, v) in [("es", self.es), ("gs2", self.gs2), ("ej", self.ej)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MechError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { es: self.es * s, gs2: self.gs2 * s, ej: self.ej * s, ..*self }
    }
}

/// Which shear expression [`macroscopic_stress_beam`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearStress {
    /// Exact `∂Ŵ/∂E`, including the mean rotation of the edge.
    Exact,
    /// Shear bracket without the rotation term.
    WithoutRotation,
}

/// Local variable order: `[uτ_i, ut_i, ω_i, uτ_j, ut_j, ω_j, b, e1, e2, e3]`.
pub type Full = SMatrix<f64, 10, 10>;
/// Condensed variable order: `[ux_i, uy_i, ω_i, ux_j, uy_j, ω_j, e1, e2, e3]` (global axes).
pub type Condensed = SMatrix<f64, 9, 9>;

#[derive(Debug, Clone)]
pub struct BeamElementStiffness {
    pub length: f64,
    pub tau: [f64; 2],
    pub normal: [f64; 2],
    /// Energy matrix over local variables, bubble included.
    pub full: Full,
    /// Energy matrix with the bubble condensed, in global axes.
    pub condensed: Condensed,
    /// `b = recovery · z` with `z` in condensed variable order.
    pub recovery: [f64; 9],
}

const GAUSS: [(f64, f64); 2] = [(0.5 - 0.288_675_134_594_812_9, 0.5), (0.5 + 0.288_675_134_594_812_9, 0.5)];

/// Element matrices for a straight edge with reference vector `r0`.
pub fn element_stiffness(r0: [f64; 2], cfg: &BeamConfig) -> BeamElementStiffness {
    let l = r0[0].hypot(r0[1]);
    let tau = [r0[0] / l, r0[1] / l];
    let normal = [-tau[1], tau[0]];
    let ct = bilinear_voigt(tau, tau);
    let cn = bilinear_voigt(tau, normal);
    let mut full = Full::zeros();
    for (xi, w) in GAUSS {
        let axial = [-1.0 / l, 0.0, 0.0, 1.0 / l, 0.0, 0.0, 0.0, ct[0], ct[1], ct[2]];
        let shear = [0.0, -1.0 / l, -(1.0 - xi), 0.0, 1.0 / l, -xi, 4.0 * (1.0 - 2.0 * xi) / l, cn[0], cn[1], cn[2]];
        let bend = [0.0, 0.0, -1.0 / l, 0.0, 0.0, 1.0 / l, 0.0, 0.0, 0.0, 0.0];
        for (a, k) in [(axial, cfg.es), (shear, cfg.gs2), (bend, cfg.ej)] {
            let v = SMatrix::<f64, 10, 1>::from_column_slice(&a);
            full += v * v.transpose() * (k * w * l);
        }
    }

    // local -> global for kinematic entries, bubble dropped
    let mut t = SMatrix::<f64, 9, 10>::zeros();
    for node in 0..2 {
        let (g, lo) = (3 * node, 3 * node);
        t[(g, lo)] = tau[0];
        t[(g + 1, lo)] = tau[1];
        t[(g, lo + 1)] = normal[0];
        t[(g + 1, lo + 1)] = normal[1];
        t[(g + 2, lo + 2)] = 1.0;
    }
    for s in 0..3 {
        t[(6 + s, 7 + s)] = 1.0;
    }
    let kbb = full[(6, 6)];
    let kbr = SMatrix::<f64, 1, 10>::from_fn(|_, c| if c == 6 { 0.0 } else { full[(6, c)] });
    let schur = full - kbr.transpose() * kbr / kbb;
    let condensed: Condensed = t * schur * t.transpose();
    let rec_local = -kbr / kbb;
    let rec = rec_local * t.transpose();
    let mut recovery = [0.0; 9];
    for (c, r) in recovery.iter_mut().enumerate() {
        *r = rec[(0, c)];
    }
    BeamElementStiffness { length: l, tau, normal, full, condensed, recovery }
}

impl BeamElementStiffness {
    /// Local variables from global end DOFs, strain and bubble amplitude.
    pub fn local_vector(&self, z: &[f64; 9], b: f64) -> SMatrix<f64, 10, 1> {
        let mut v = SMatrix::<f64, 10, 1>::zeros();
        for node in 0..2 {
            let (ux, uy, w) = (z[3 * node], z[3 * node + 1], z[3 * node + 2]);
            v[3 * node] = ux * self.tau[0] + uy * self.tau[1];
            v[3 * node + 1] = ux * self.normal[0] + uy * self.normal[1];
            v[3 * node + 2] = w;
        }
        v[6] = b;
        for s in 0..3 {
            v[7 + s] = z[6 + s];
        }
        v
    }

    pub fn bubble(&self, z: &[f64; 9]) -> f64 {
        self.recovery.iter().zip(z).map(|(r, x)| r * x).sum()
    }

    pub fn energy_full(&self, z: &[f64; 9], b: f64) -> f64 {
        let v = self.local_vector(z, b);
        0.5 * (v.transpose() * self.full * v)[(0, 0)]
    }

    pub fn energy_condensed(&self, z: &[f64; 9]) -> f64 {
        let v = SMatrix::<f64, 9, 1>::from_column_slice(z);
        0.5 * (v.transpose() * self.condensed * v)[(0, 0)]
    }

    /// Kinematic 6×6 block of the condensed matrix.
    pub fn kinematic(&self) -> SMatrix<f64, 6, 6> {
        self.condensed.fixed_view::<6, 6>(0, 0).into_owned()
    }
}

fn element_on(e: &Edge, cfg: &BeamConfig, map: &DofMap) -> ElementMatrix {
    let el = element_stiffness(e.r0_xy(), cfg);
    ElementMatrix { dofs: map.local(&[e.i, e.j]), m: el.condensed.transpose().as_slice().to_vec() }
}

/// Free DOFs for the configured boundary rotation.
pub fn dof_map(d: &Domain, cfg: &BeamConfig) -> DofMap {
    let mut order = d.interior_bfs_order();
    order.extend((0..d.vertices.len()).filter(|&v| d.classes[v] == VertexClass::ActiveBoundary));
    let free_rot = cfg.boundary_rotation == BoundaryRotation::Free;
    DofMap::build(d.vertices.len(), 3, &order, |v, c| match d.classes[v] {
        VertexClass::Interior => true,
        VertexClass::ActiveBoundary => free_rot && c == 2,
        VertexClass::Discarded => false,
    })
}

pub fn assemble_beam_on(d: &Domain, cfg: &BeamConfig, map: DofMap) -> Result<AssembledSystem, MechError> {
    cfg.validate()?;
    if map.n_free == 0 {
        return Err(MechError::EmptyFreeSet);
    }
    Ok(AssembledSystem::assemble_with(map, &d.edges, |e, m| element_on(e, cfg, m)))
}

/// Three DOFs `(ux, uy, ω)` per free vertex; retained edges only.
pub fn assemble_beam(d: &Domain, cfg: &BeamConfig) -> Result<AssembledSystem, MechError> {
    assemble_beam_on(d, cfg, dof_map(d, cfg))
}

/// Edge energy under the affine field `u = EX`, `ω = 0`, by direct quadrature.
pub fn affine_edge_energy(e: &Edge, cfg: &BeamConfig, strain: &MacroStrain) -> f64 {
    let l = e.length();
    let tau = e.unit_dir();
    let normal = [-tau[1], tau[0]];
    let et = strain.apply(tau);
    let axial = et[0] * tau[0] + et[1] * tau[1];
    let shear = et[0] * normal[0] + et[1] * normal[1];
    GAUSS.iter().map(|&(_, w)| 0.5 * w * l * (cfg.es * axial * axial + cfg.gs2 * shear * shear)).sum()
}

/// `(1/area) Σ_edges` of the extension and shear contributions for
/// per-vertex `(ûx, ûy, ω)`.
pub fn macroscopic_stress_beam(
    d: &Domain,
    cfg: &BeamConfig,
    strain: &MacroStrain,
    u: &[[f64; 3]],
    variant: ShearStress,
) -> Tensor2 {
    let mut s = [[0.0; 2]; 2];
    for e in &d.edges {
        let l = e.length();
        let tau = e.unit_dir();
        let normal = [-tau[1], tau[0]];
        let er = strain.apply(e.r0_xy());
        let delta = [er[0] + u[e.j][0] - u[e.i][0], er[1] + u[e.j][1] - u[e.i][1]];
        let axial = delta[0] * tau[0] + delta[1] * tau[1];
        let mut shear = delta[0] * normal[0] + delta[1] * normal[1];
        if variant == ShearStress::Exact {
            shear -= 0.5 * l * (u[e.i][2] + u[e.j][2]);
        }
        s = add_t(s, scale_t(dyad_sym(tau, tau), 0.5 * cfg.es * axial));
        s = add_t(s, scale_t(dyad_sym(tau, normal), 0.5 * cfg.gs2 * shear));
    }
    scale_t(s, 1.0 / d.area)
}

pub fn macroscopic_stress_beam_checked(
    d: &Domain,
    cfg: &BeamConfig,
    sys: &AssembledSystem,
    strain: &MacroStrain,
    u_free: &[f64],
    tol: f64,
) -> Result<Tensor2, MechError> {
    let residual = sys.relative_residual(strain, u_free);
    if !(residual <= tol) {
        return Err(MechError::NotConverged { residual, tol });
    }
    Ok(macroscopic_stress_beam(d, cfg, strain, &sys.dof_map.expand(u_free), ShearStress::Exact))
}

/// Tip deflection of a straight cantilever of length `length` split into
/// `elements` beams, clamped at one end, under a transverse tip load `load`.
pub fn cantilever_tip_deflection(elements: usize, cfg: &BeamConfig, length: f64, load: f64) -> f64 {
    let h = length / elements as f64;
    let el = element_stiffness([h, 0.0], cfg).kinematic();
    let n = 3 * elements;
    let mut k = DMatrix::<f64>::zeros(n, n);
    for e in 0..elements {
        for a in 0..6 {
            for b in 0..6 {
                let (ga, gb) = (3 * e + a, 3 * e + b);
                if ga >= 3 && gb >= 3 {
                    k[(ga - 3, gb - 3)] += el[(a, b)];
                }
            }
        }
    }
    let mut f = DVector::<f64>::zeros(n);
    f[n - 2] = load;
    let u = k.cholesky().expect("cantilever stiffness is SPD").solve(&f);
    u[n - 2]
}

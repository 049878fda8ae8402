//! Quadratic energies in fluctuation form, assembled on free degrees of freedom.
//!
//! Every model element contributes `½ zᵀ M z` with `z = [local DOFs; e]`,
//! where `e = (E11, E22, 2E12)` is the Voigt macroscopic strain. Prescribed
//! DOFs carry zero fluctuation and drop out.

use crate::domain::{Domain, VertexClass};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum MechError {
    #[error("no free degrees of freedom")]
    EmptyFreeSet,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solution not converged: relative residual {residual:e} above {tol:e}")]
    NotConverged { residual: f64, tol: f64 },
}

/// Voigt strain vector `(E11, E22, 2E12)`.
pub type Voigt = [f64; 3];

/// Symmetric macroscopic strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroStrain {
    pub e11: f64,
    pub e22: f64,
    pub e12: f64,
}

impl MacroStrain {
    pub const ZERO: Self = Self { e11: 0.0, e22: 0.0, e12: 0.0 };

    pub fn new(e11: f64, e22: f64, e12: f64) -> Self {
        Self { e11, e22, e12 }
    }

    pub fn from_voigt(v: Voigt) -> Self {
        Self { e11: v[0], e22: v[1], e12: 0.5 * v[2] }
    }

    pub fn voigt(&self) -> Voigt {
        [self.e11, self.e22, 2.0 * self.e12]
    }

    /// `E r`.
    pub fn apply(&self, r: [f64; 2]) -> [f64; 2] {
        [self.e11 * r[0] + self.e12 * r[1], self.e12 * r[0] + self.e22 * r[1]]
    }

    /// The three load cases: unit Voigt vectors, the last one being `E12 = 1/2`.
    pub fn load_cases() -> [Self; 3] {
        [Self::new(1.0, 0.0, 0.0), Self::new(0.0, 1.0, 0.0), Self::new(0.0, 0.0, 0.5)]
    }
}

/// Coefficients of `(E a)·b` with respect to the Voigt strain.
pub fn bilinear_voigt(a: [f64; 2], b: [f64; 2]) -> Voigt {
    [a[0] * b[0], a[1] * b[1], 0.5 * (a[0] * b[1] + a[1] * b[0])]
}

/// Symmetric 2×2 tensor stored as `[[xx, xy], [yx, yy]]`.
pub type Tensor2 = [[f64; 2]; 2];

pub fn dyad_sym(a: [f64; 2], b: [f64; 2]) -> Tensor2 {
    [[2.0 * a[0] * b[0], a[0] * b[1] + a[1] * b[0]], [a[0] * b[1] + a[1] * b[0], 2.0 * a[1] * b[1]]]
}

pub fn scale_t(t: Tensor2, s: f64) -> Tensor2 {
    [[t[0][0] * s, t[0][1] * s], [t[1][0] * s, t[1][1] * s]]
}

pub fn add_t(a: Tensor2, b: Tensor2) -> Tensor2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

/// `(S11, S22, S12)`.
pub fn tensor_to_voigt_stress(t: Tensor2) -> Voigt {
    [t[0][0], t[1][1], 0.5 * (t[0][1] + t[1][0])]
}

/// Compressed sparse column storage of a symmetric matrix (both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Build from triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self { n, col_ptr, row_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                if self.row_idx[k] == c {
                    d[c] += self.values[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                m[self.row_idx[k]][c] += self.values[k];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.to_dense();
        let mut a: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                a = a.max((d[i][j] - d[j][i]).abs());
            }
        }
        a
    }
}

/// One element: global indices of its local DOFs (or `None` when prescribed)
/// and the dense `(m+3)×(m+3)` matrix over `[local DOFs; e]`.
#[derive(Debug, Clone)]
pub struct ElementMatrix {
    pub dofs: Vec<Option<usize>>,
    pub m: Vec<f64>,
}

impl ElementMatrix {
    pub fn size(&self) -> usize {
        self.dofs.len() + 3
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.m[r * self.size() + c]
    }
}

/// Map from `(vertex, component)` to free DOF index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub per_vertex: usize,
    pub index: Vec<[Option<usize>; 3]>,
    pub n_free: usize,
}

impl DofMap {
    /// Number the components listed by `free` for each vertex in `order`.
    pub fn build(n_vertices: usize, per_vertex: usize, order: &[usize], free: impl Fn(usize, usize) -> bool) -> Self {
        let mut index = vec![[None; 3]; n_vertices];
        let mut next = 0;
        for &v in order {
            for c in 0..per_vertex {
                if free(v, c) {
                    index[v][c] = Some(next);
                    next += 1;
                }
            }
        }
        Self { per_vertex, index, n_free: next }
    }

    /// Interior vertices free in every component, in breadth-first order.
    pub fn interior(d: &Domain, per_vertex: usize) -> Self {
        Self::build(d.vertices.len(), per_vertex, &d.interior_bfs_order(), |_, _| true)
    }

    /// Every non-discarded vertex free; used for invariance checks before
    /// boundary elimination.
    pub fn unconstrained(d: &Domain, per_vertex: usize) -> Self {
        let order: Vec<usize> = (0..d.vertices.len()).filter(|&v| d.classes[v] != VertexClass::Discarded).collect();
        Self::build(d.vertices.len(), per_vertex, &order, |_, _| true)
    }

    pub fn dof(&self, v: usize, c: usize) -> Option<usize> {
        self.index[v][c]
    }

    pub fn local(&self, vertices: &[usize]) -> Vec<Option<usize>> {
        vertices.iter().flat_map(|&v| (0..self.per_vertex).map(move |c| self.index[v][c])).collect()
    }

    /// Spread a free-DOF vector to per-vertex components, zero where prescribed.
    pub fn expand(&self, u: &[f64]) -> Vec<[f64; 3]> {
        self.index
            .iter()
            .map(|ix| {
                let mut out = [0.0; 3];
                for c in 0..self.per_vertex {
                    if let Some(k) = ix[c] {
                        out[c] = u[k];
                    }
                }
                out
            })
            .collect()
    }
}

/// `Ŵ(e, û) = ½ ûᵀKû + ûᵀG e + ½ eᵀC₀e` on the free DOFs.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: CscMatrix,
    /// Columns of the coupling `G`, one per Voigt component.
    pub g: [Vec<f64>; 3],
    pub c0: [[f64; 3]; 3],
    pub dof_map: DofMap,
    /// Set when the configuration admits zero-energy modes.
    pub potentially_singular: bool,
}

impl AssembledSystem {
    pub fn assemble(dof_map: DofMap, elements: &[ElementMatrix]) -> Self {
        let n = dof_map.n_free;
        let mut trip = Vec::new();
        let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut c0 = [[0.0; 3]; 3];
        for el in elements {
            let m = el.dofs.len();
            for (a, da) in el.dofs.iter().enumerate() {
                let Some(ra) = *da else { continue };
                for (b, db) in el.dofs.iter().enumerate() {
                    if let Some(cb) = *db {
                        trip.push((ra, cb, el.at(a, b)));
                    }
                }
                for (s, gs) in g.iter_mut().enumerate() {
                    gs[ra] += el.at(a, m + s);
                }
            }
            for (s, row) in c0.iter_mut().enumerate() {
                for (t, v) in row.iter_mut().enumerate() {
                    *v += el.at(m + s, m + t);
                }
            }
        }
        Self { k: CscMatrix::from_triplets(n, trip), g, c0, dof_map, potentially_singular: false }
    }

    /// Assemble elements produced in parallel; summation order is fixed.
    pub fn assemble_with<T: Sync>(
        dof_map: DofMap,
        items: &[T],
        element: impl Fn(&T, &DofMap) -> ElementMatrix + Sync,
    ) -> Self {
        let els: Vec<ElementMatrix> = items.par_iter().map(|t| element(t, &dof_map)).collect();
        Self::assemble(dof_map, &els)
    }

    pub fn n_free(&self) -> usize {
        self.dof_map.n_free
    }

    /// `G e`.
    pub fn coupling(&self, e: Voigt) -> Vec<f64> {
        (0..self.n_free()).map(|i| self.g[0][i] * e[0] + self.g[1][i] * e[1] + self.g[2][i] * e[2]).collect()
    }

    /// Right-hand side `B(E) = -G e` of the equilibrium equations.
    pub fn load_vector(&self, e: &MacroStrain) -> Vec<f64> {
        self.coupling(e.voigt()).into_iter().map(|v| -v).collect()
    }

    pub fn energy(&self, e: &MacroStrain, u: &[f64]) -> f64 {
        let v = e.voigt();
        let ku = self.k.matvec(u);
        let ge = self.coupling(v);
        let mut w = 0.0;
        for i in 0..u.len() {
            w += 0.5 * u[i] * ku[i] + u[i] * ge[i];
        }
        for s in 0..3 {
            for t in 0..3 {
                w += 0.5 * v[s] * self.c0[s][t] * v[t];
            }
        }
        w
    }

    /// `∂Ŵ/∂e = Gᵀû + C₀e`, i.e. the unnormalized Voigt stress `(S11, S22, S12)`.
    pub fn strain_gradient(&self, e: &MacroStrain, u: &[f64]) -> Voigt {
        let v = e.voigt();
        let mut s = [0.0; 3];
        for (c, sc) in s.iter_mut().enumerate() {
            *sc = self.g[c].iter().zip(u).map(|(g, x)| g * x).sum::<f64>()
                + (0..3).map(|t| self.c0[c][t] * v[t]).sum::<f64>();
        }
        s
    }

    /// `‖K u - B(E)‖ / ‖B(E)‖`, or the absolute residual when `B(E) = 0`.
    pub fn relative_residual(&self, e: &MacroStrain, u: &[f64]) -> f64 {
        relative_residual(&self.k, u, &self.load_vector(e))
    }
}

pub fn relative_residual(k: &CscMatrix, u: &[f64], f: &[f64]) -> f64 {
    let ku = k.matvec(u);
    let r: f64 = ku.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let nf: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nf > 0.0 {
        r / nf
    } else {
        r
    }
}

/// Dense `a aᵀ · s` as a row-major square matrix.
pub fn outer_scaled(a: &[f64], s: f64) -> Vec<f64> {
    let n = a.len();
    let mut m = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            m[r * n + c] = s * a[r] * a[c];
        }
    }
    m
}

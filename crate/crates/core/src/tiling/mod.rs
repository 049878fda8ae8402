//! Hat prototile, substitution patches and their exact vertex tables.

mod io;
pub mod metatile;

pub use io::{load_tiling, save_tiling, TILING_FORMAT};
pub use metatile::h_supertile_hat_count;

use crate::lattice::{shoelace_x8_over_sqrt3, LatticeCoord};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Default upper bound on the number of polygons a generated patch may hold.
pub const DEFAULT_POLYGON_BUDGET: usize = 2_000_000;

/// `4·|e|²` for the three hat edge lengths 1, √3 and 2.
pub const HAT_EDGE_NORMS_X4: [i64; 3] = [4, 12, 16];

/// Shoelace sum (`8·area/√3`) of one hat: area `8√3` in shortest-edge units.
pub const HAT_SHOELACE: i64 = 64;

#[derive(Debug, Error)]
pub enum TilingError {
    #[error("inflation step count must be non-negative, got {0}")]
    NegativeSteps(i64),
    #[error("{steps} inflation steps would produce {polygons} polygons, above the budget of {budget}")]
    BudgetExceeded { steps: u32, polygons: u128, budget: usize },
    #[error("patch is not a seed cluster of the substitution system: {0}")]
    NotASeedCluster(String),
    #[error("substitution produced an off-lattice hat (snap error {0:e})")]
    OffLattice(f64),
    #[error("invalid tiling: {0}")]
    Invalid(String),
    #[error("unsupported tiling format {found:?} (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },
    #[error("malformed tiling file: {0}")]
    Malformed(String),
    #[error("checksum mismatch: file says {stored}, content hashes to {computed}")]
    Checksum { stored: String, computed: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolygonKind {
    Hat13,
    Repaired14,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polygon {
    pub kind: PolygonKind,
    #[serde(rename = "v")]
    pub vertex_ids: Vec<usize>,
}

impl Polygon {
    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    /// Undirected edges `(a, b)` with `a` preceding `b` along the cycle.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.vertex_ids.len();
        (0..n).map(move |i| (self.vertex_ids[i], self.vertex_ids[(i + 1) % n]))
    }

    pub fn coords(&self, vertices: &[LatticeCoord]) -> Vec<LatticeCoord> {
        self.vertex_ids.iter().map(|&i| vertices[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub inflation_steps: u32,
    pub seed: String,
}

/// An immutable patch of hat polygons on the half-integer lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tiling {
    vertices: Vec<LatticeCoord>,
    polygons: Vec<Polygon>,
    meta: GenerationMeta,
}

/// Seed description stored in generated patches.
pub const SEED_DESCRIPTION: &str = "hat-prototile; H-supertile substitution";

impl Tiling {
    /// Build a tiling from raw parts, checking its invariants.
    pub fn new(vertices: Vec<LatticeCoord>, polygons: Vec<Polygon>, meta: GenerationMeta) -> Result<Self, TilingError> {
        let t = Self { vertices, polygons, meta };
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn new_unchecked(vertices: Vec<LatticeCoord>, polygons: Vec<Polygon>, meta: GenerationMeta) -> Self {
        Self { vertices, polygons, meta }
    }

    /// The single-hat seed cluster (zero inflation steps).
    pub fn seed() -> Self {
        let (vertices, poly) = hat_prototype();
        Self::new_unchecked(vertices, vec![poly], GenerationMeta { inflation_steps: 0, seed: SEED_DESCRIPTION.into() })
    }

    pub fn vertices(&self) -> &[LatticeCoord] {
        &self.vertices
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn meta(&self) -> &GenerationMeta {
        &self.meta
    }

    pub fn polygon_coords(&self, i: usize) -> Vec<LatticeCoord> {
        self.polygons[i].coords(&self.vertices)
    }

    /// Check every structural and geometric invariant that does not require
    /// pairwise polygon intersection.
    pub fn validate(&self) -> Result<(), TilingError> {
        let bad = |m: String| Err(TilingError::Invalid(m));
        let mut seen = HashMap::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.on_triangular_lattice() {
                return bad(format!("vertex {i} {v:?} is off the triangular lattice"));
            }
            if let Some(j) = seen.insert(*v, i) {
                return bad(format!("vertices {j} and {i} coincide at {v:?}"));
            }
        }
        let mut edge_use: HashMap<(usize, usize), u8> = HashMap::new();
        for (pi, poly) in self.polygons.iter().enumerate() {
            if let Some(&id) = poly.vertex_ids.iter().find(|&&id| id >= self.vertices.len()) {
                return bad(format!("polygon {pi} references missing vertex {id}"));
            }
            check_polygon_shape(&poly.coords(&self.vertices), poly.kind)
                .or_else(|m| bad(format!("polygon {pi}: {m}")))?;
            for (a, b) in poly.edges() {
                let key = (a.min(b), a.max(b));
                let c = edge_use.entry(key).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return bad(format!("edge {key:?} is shared by more than two polygons"));
                }
            }
        }
        Ok(())
    }
}

/// Geometric checks for one polygon cycle.
pub(crate) fn check_polygon_shape(c: &[LatticeCoord], kind: PolygonKind) -> Result<(), String> {
    let n = c.len();
    let expected = match kind {
        PolygonKind::Hat13 => 13,
        PolygonKind::Repaired14 => 14,
    };
    if n != expected {
        return Err(format!("{kind:?} with {n} vertices"));
    }
    let mut collinear = 0;
    for i in 0..n {
        let e = c[(i + 1) % n] - c[i];
        let Some(_) = e.direction_index() else {
            return Err(format!("edge {i} is not along a multiple of π/6"));
        };
        if !HAT_EDGE_NORMS_X4.contains(&e.norm2_x4()) {
            return Err(format!("edge {i} has length² {}/4", e.norm2_x4()));
        }
        let next = c[(i + 2) % n] - c[(i + 1) % n];
        if e.cross(next) == 0 {
            collinear += 1;
        }
    }
    let s = shoelace_x8_over_sqrt3(c);
    if s <= 0 {
        return Err("not counter-clockwise".into());
    }
    if s != HAT_SHOELACE {
        return Err(format!("area {s}·√3/8 differs from a hat"));
    }
    let want_collinear = usize::from(kind == PolygonKind::Repaired14);
    if collinear != want_collinear {
        return Err(format!("{collinear} collinear adjacent edge pairs"));
    }
    Ok(())
}

/// The hat prototile: 13 vertices counter-clockwise in shortest-edge units.
pub fn hat_prototype() -> (Vec<LatticeCoord>, Polygon) {
    const CYCLE: [(i64, i64); 13] = [
        (0, 0),
        (3, -1),
        (6, 0),
        (5, 1),
        (3, 1),
        (3, 3),
        (0, 4),
        (-1, 3),
        (-3, 3),
        (-3, 1),
        (-6, 0),
        (-5, -1),
        (-1, -1),
    ];
    let vertices = CYCLE.iter().map(|&c| LatticeCoord::from(c)).collect();
    let poly = Polygon { vertex_ids: (0..13).collect(), kind: PolygonKind::Hat13 };
    (vertices, poly)
}

/// Number of polygons in the canonical patch after `steps` inflation steps.
pub fn canonical_polygon_count(steps: u32) -> u128 {
    match steps {
        0 => 1,
        s => h_supertile_hat_count(s - 1),
    }
}

/// Generate the canonical patch after `steps` inflation steps from the seed.
pub fn generate(steps: u32, budget: usize) -> Result<Tiling, TilingError> {
    let count = canonical_polygon_count(steps);
    if count > budget as u128 {
        return Err(TilingError::BudgetExceeded { steps, polygons: count, budget });
    }
    if steps == 0 {
        return Ok(Tiling::seed());
    }
    let root = metatile::h_supertile(steps - 1);
    let mut placements = Vec::with_capacity(count as usize);
    root.collect_hats(&metatile::IDENT, &mut placements);

    let outline = metatile::hat_outline();
    // hats sit at half scale inside metatiles
    let world = |t: &metatile::Affine, i: usize| {
        let p = metatile::apply(t, outline[i]);
        (2.0 * p.x, 2.0 * p.y)
    };
    let (rx, ry) = world(&placements[0], 0);

    let mut cycles: Vec<Vec<LatticeCoord>> = Vec::with_capacity(placements.len());
    let mut worst = 0.0f64;
    for t in &placements {
        let mut cyc = Vec::with_capacity(13);
        for i in 0..13 {
            let (x, y) = world(t, i);
            let (c, err) = LatticeCoord::snap(x - rx, y - ry);
            worst = worst.max(err);
            cyc.push(c);
        }
        if shoelace_x8_over_sqrt3(&cyc) < 0 {
            cyc.reverse();
        }
        cycles.push(cyc);
    }
    if worst > 1e-6 || cycles.iter().flatten().any(|c| !c.on_triangular_lattice()) {
        return Err(TilingError::OffLattice(worst));
    }

    // shift so the origin sits near the patch barycentre
    let n = (cycles.len() * 13) as f64;
    let (sx, sy) = cycles.iter().flatten().fold((0.0, 0.0), |(a, b), c| (a + c.x(), b + c.y()));
    let (mut shift, _) = LatticeCoord::snap(sx / n, sy / n);
    if !shift.on_triangular_lattice() {
        shift.p += 1;
    }

    let mut index: HashMap<LatticeCoord, usize> = HashMap::with_capacity(cycles.len() * 7);
    let mut vertices = Vec::with_capacity(cycles.len() * 7);
    let mut polygons = Vec::with_capacity(cycles.len());
    for cyc in cycles {
        let ids = cyc
            .into_iter()
            .map(|c| {
                let c = c - shift;
                *index.entry(c).or_insert_with(|| {
                    vertices.push(c);
                    vertices.len() - 1
                })
            })
            .collect();
        polygons.push(Polygon { vertex_ids: ids, kind: PolygonKind::Hat13 });
    }
    let tiling = Tiling::new_unchecked(
        vertices,
        polygons,
        GenerationMeta { inflation_steps: steps, seed: SEED_DESCRIPTION.into() },
    );
    tiling.validate()?;
    Ok(tiling)
}

/// Apply `steps` further substitution steps to a canonical patch.
pub fn inflate(patch: &Tiling, steps: i64) -> Result<Tiling, TilingError> {
    inflate_with_budget(patch, steps, DEFAULT_POLYGON_BUDGET)
}

pub fn inflate_with_budget(patch: &Tiling, steps: i64, budget: usize) -> Result<Tiling, TilingError> {
    if steps < 0 {
        return Err(TilingError::NegativeSteps(steps));
    }
    if steps == 0 {
        return Ok(patch.clone());
    }
    let level = patch.meta.inflation_steps;
    if patch.meta.seed != SEED_DESCRIPTION {
        return Err(TilingError::NotASeedCluster(format!("unknown seed {:?}", patch.meta.seed)));
    }
    if patch.polygons.len() as u128 != canonical_polygon_count(level) {
        return Err(TilingError::NotASeedCluster(format!(
            "{} polygons at level {level}, expected {}",
            patch.polygons.len(),
            canonical_polygon_count(level)
        )));
    }
    let total = u32::try_from(level as i64 + steps).map_err(|_| TilingError::BudgetExceeded {
        steps: u32::MAX,
        polygons: u128::MAX,
        budget,
    })?;
    generate(total, budget)
}

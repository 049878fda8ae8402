//! Circular computational domains cut from a tiling.
//!
//! A domain is the union of every polygon whose area centroid lies in a
//! closed disk. Construction runs in three stages: [`extract_disk`],
//! [`repair_tjunctions`] and [`classify_and_connect`].

use crate::lattice::{area_from_shoelace, centroid_xy, shoelace_x8_over_sqrt3, LatticeCoord};
use crate::tiling::{Polygon, PolygonKind, Tiling};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error(
        "disk of radius {radius} at ({cx}, {cy}) leaves the safe interior \
         (distance to tiling boundary {clearance}, required {required})"
    )]
    Margin { cx: f64, cy: f64, radius: f64, clearance: f64, required: f64 },
    #[error("degenerate domain: {polygons} polygons, {vertices} vertices, no interior vertex")]
    Degenerate { polygons: usize, vertices: usize },
    #[error("tiling too small for radius {radius}: safe sampling half-width is {half_width}")]
    TooSmall { radius: f64, half_width: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("domain serialization: {0}")]
    Serialize(String),
}

/// A bag of polygons with a compact vertex table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolygonSet {
    pub vertices: Vec<LatticeCoord>,
    pub polygons: Vec<Polygon>,
}

impl PolygonSet {
    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn from_tiling(t: &Tiling) -> Self {
        Self::select(t, 0..t.polygons().len())
    }

    fn select(t: &Tiling, which: impl IntoIterator<Item = usize>) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut polygons = Vec::new();
        for pi in which {
            let src = &t.polygons()[pi];
            let ids = src
                .vertex_ids
                .iter()
                .map(|&v| {
                    *remap.entry(v).or_insert_with(|| {
                        vertices.push(t.vertices()[v]);
                        vertices.len() - 1
                    })
                })
                .collect();
            polygons.push(Polygon { kind: src.kind, vertex_ids: ids });
        }
        Self { vertices, polygons }
    }

    /// Polygon cycles as coordinates.
    pub fn cycle(&self, i: usize) -> Vec<LatticeCoord> {
        self.polygons[i].coords(&self.vertices)
    }

    /// Every `(vertex, polygon edge)` pair with the vertex strictly inside the
    /// edge. Quadratic; intended for audits.
    pub fn strict_edge_incidences(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (pi, poly) in self.polygons.iter().enumerate() {
            for (ei, (a, b)) in poly.edges().enumerate() {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                for (vi, &c) in self.vertices.iter().enumerate() {
                    if crate::lattice::strictly_inside_segment(c, pa, pb) {
                        out.push((vi, pi, ei));
                    }
                }
            }
        }
        out
    }
}

/// Precomputed centroids and boundary of a large tiling, used to cut many
/// disks from the same patch.
#[derive(Debug, Clone)]
pub struct TilingIndex<'a> {
    tiling: &'a Tiling,
    centroids: Vec<[f64; 2]>,
    boundary: Vec<([f64; 2], [f64; 2])>,
    tile_diameter: f64,
    hull_center: [f64; 2],
}

impl<'a> TilingIndex<'a> {
    pub fn new(tiling: &'a Tiling) -> Self {
        let centroids: Vec<_> = (0..tiling.polygons().len()).map(|i| centroid_xy(&tiling.polygon_coords(i))).collect();
        let whole = repair_tjunctions(&PolygonSet::from_tiling(tiling));
        let boundary = perimeter_edges(&whole)
            .into_iter()
            .map(|(a, b)| (whole.vertices[a].to_xy(), whole.vertices[b].to_xy()))
            .collect();
        let hull_center = if centroids.is_empty() {
            [0.0, 0.0]
        } else {
            let n = centroids.len() as f64;
            let s = centroids.iter().fold([0.0, 0.0], |s, c| [s[0] + c[0], s[1] + c[1]]);
            [s[0] / n, s[1] / n]
        };
        Self { tiling, centroids, boundary, tile_diameter: hat_diameter(), hull_center }
    }

    pub fn tiling(&self) -> &'a Tiling {
        self.tiling
    }

    pub fn centroids(&self) -> &[[f64; 2]] {
        &self.centroids
    }

    /// Largest distance between two vertices of one hat.
    pub fn tile_diameter(&self) -> f64 {
        self.tile_diameter
    }

    /// Mean of the polygon centroids; the natural sampling origin.
    pub fn patch_center(&self) -> [f64; 2] {
        self.hull_center
    }

    /// Distance from `c` to the nearest boundary edge of the whole patch.
    pub fn clearance(&self, c: [f64; 2]) -> f64 {
        self.boundary.iter().map(|&(a, b)| point_segment_distance(c, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Clearance needed by a disk of `radius`.
    pub fn required_clearance(&self, radius: f64) -> f64 {
        radius + self.tile_diameter
    }

    /// Half-width of the axis-aligned square around [`Self::patch_center`]
    /// whose points all admit a disk of `radius`.
    pub fn safe_half_width(&self, radius: f64) -> f64 {
        let free = self.clearance(self.hull_center) - self.required_clearance(radius);
        free / std::f64::consts::SQRT_2
    }
}

/// Longest chord of the hat prototile.
pub fn hat_diameter() -> f64 {
    let (v, _) = crate::tiling::hat_prototype();
    let mut d: f64 = 0.0;
    for a in &v {
        for b in &v {
            d = d.max((*a - *b).norm());
        }
    }
    d
}

fn point_segment_distance(c: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ac[0] * ab[0] + ac[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ac[0] - t * ab[0]).hypot(ac[1] - t * ab[1])
}

/// Polygons whose centroid lies within `radius` of `center`.
pub fn extract_disk(index: &TilingIndex<'_>, center: [f64; 2], radius: f64) -> Result<PolygonSet, DomainError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(DomainError::BadRadius(radius));
    }
    let clearance = index.clearance(center);
    let required = index.required_clearance(radius);
    if clearance < required {
        return Err(DomainError::Margin { cx: center[0], cy: center[1], radius, clearance, required });
    }
    let r2 = radius * radius;
    let which = index.centroids.iter().enumerate().filter_map(|(i, c)| {
        let (dx, dy) = (c[0] - center[0], c[1] - center[1]);
        (dx * dx + dy * dy <= r2).then_some(i)
    });
    Ok(PolygonSet::select(index.tiling, which))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Split every polygon edge that has a vertex of the set in its relative
/// interior. Idempotent.
pub fn repair_tjunctions(ps: &PolygonSet) -> PolygonSet {
    let lookup: HashMap<LatticeCoord, usize> = ps.vertices.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let polygons = ps
        .polygons
        .iter()
        .map(|poly| {
            let mut ids = Vec::with_capacity(poly.len() + 1);
            for (a, b) in poly.edges() {
                ids.push(a);
                let (pa, pb) = (ps.vertices[a], ps.vertices[b]);
                let d = pb - pa;
                let g = gcd(d.p, d.q);
                let step = LatticeCoord::new(d.p / g.max(1), d.q / g.max(1));
                let mut c = pa;
                for _ in 1..g {
                    c = c + step;
                    if !c.on_triangular_lattice() {
                        continue;
                    }
                    if let Some(&v) = lookup.get(&c) {
                        ids.push(v);
                    }
                }
            }
            let kind = if ids.len() > poly.len() { PolygonKind::Repaired14 } else { poly.kind };
            Polygon { kind, vertex_ids: ids }
        })
        .collect();
    PolygonSet { vertices: ps.vertices.clone(), polygons }
}

/// Undirected edges used by exactly one polygon, as `(a, b)` in cycle order.
fn perimeter_edges(ps: &PolygonSet) -> Vec<(usize, usize)> {
    let mut uses: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
    let mut order = Vec::new();
    for poly in &ps.polygons {
        for (a, b) in poly.edges() {
            let key = (a.min(b), a.max(b));
            let e = uses.entry(key).or_insert_with(|| {
                order.push(key);
                (0, (a, b))
            });
            e.0 += 1;
        }
    }
    order
        .into_iter()
        .filter_map(|k| {
            let (n, ab) = uses[&k];
            (n == 1).then_some(ab)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexClass {
    Interior,
    ActiveBoundary,
    Discarded,
}

/// A retained edge between vertices `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// `X^j - X^i`, exact.
    pub r0: LatticeCoord,
}

impl Edge {
    pub fn r0_xy(&self) -> [f64; 2] {
        self.r0.to_xy()
    }

    pub fn length(&self) -> f64 {
        self.r0.norm()
    }

    pub fn unit_dir(&self) -> [f64; 2] {
        let [x, y] = self.r0_xy();
        let l = self.length();
        [x / l, y / l]
    }
}

/// Consecutive polygon edges `(i, j)` and `(i, k)` meeting at apex `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleTriple {
    pub apex: usize,
    pub j: usize,
    pub k: usize,
    pub r0_ij: LatticeCoord,
    pub r0_ik: LatticeCoord,
    pub polygon: usize,
}

impl AngleTriple {
    /// Apex at the midpoint of `j`–`k`.
    pub fn is_collinear_midpoint(&self) -> bool {
        self.r0_ij + self.r0_ik == LatticeCoord::ORIGIN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationId {
    pub master_seed: u64,
    pub n: u32,
    pub index: u32,
}

impl std::fmt::Display for RealizationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.master_seed, self.n, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectOptions {
    /// Keep angular triples whose apex is an active boundary vertex.
    pub boundary_apex_triples: bool,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        Self { boundary_apex_triples: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Domain {
    pub vertices: Vec<LatticeCoord>,
    pub classes: Vec<VertexClass>,
    pub polygons: Vec<Polygon>,
    pub edges: Vec<Edge>,
    pub triples: Vec<AngleTriple>,
    /// Distinct undirected vertex pairs over all polygon boundaries.
    pub distinct_edge_count: usize,
    pub shoelace_x8_over_sqrt3: i64,
    pub area: f64,
    pub center: [f64; 2],
    pub radius: f64,
    pub realization: Option<RealizationId>,
}

impl Domain {
    pub fn count(&self, class: VertexClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn position(&self, v: usize) -> [f64; 2] {
        self.vertices[v].to_xy()
    }

    /// Interior vertices in breadth-first order over retained edges, starting
    /// from the interior vertex nearest to the domain center.
    pub fn interior_bfs_order(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let dist2 = |v: usize| {
            let [x, y] = self.position(v);
            (x - self.center[0]).powi(2) + (y - self.center[1]).powi(2)
        };
        let mut interior: Vec<usize> = (0..n).filter(|&v| self.classes[v] == VertexClass::Interior).collect();
        interior.sort_by(|&a, &b| dist2(a).total_cmp(&dist2(b)).then(a.cmp(&b)));
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(interior.len());
        for &start in &interior {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                if self.classes[v] == VertexClass::Interior {
                    order.push(v);
                }
                for &w in &adj[v] {
                    if !seen[w] && self.classes[w] == VertexClass::Interior {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        order
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), DomainError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self).map_err(|e| DomainError::Serialize(e.to_string()))
    }
}

/// Classify vertices and enumerate retained edges and angular triples.
pub fn classify_and_connect(ps: &PolygonSet, opts: ConnectOptions) -> Result<Domain, DomainError> {
    let n = ps.vertices.len();
    let mut on_perimeter = vec![false; n];
    for (a, b) in perimeter_edges(ps) {
        on_perimeter[a] = true;
        on_perimeter[b] = true;
    }
    let interior: Vec<bool> = on_perimeter.iter().map(|&p| !p).collect();
    if !interior.iter().any(|&i| i) {
        return Err(DomainError::Degenerate { polygons: ps.polygons.len(), vertices: n });
    }

    let mut pair_index: HashMap<(usize, usize), Option<usize>> = HashMap::new();
    let mut edges = Vec::new();
    for poly in &ps.polygons {
        for (a, b) in poly.edges() {
            let (i, j) = (a.min(b), a.max(b));
            pair_index.entry((i, j)).or_insert_with(|| {
                (interior[i] || interior[j]).then(|| {
                    edges.push(Edge { i, j, r0: ps.vertices[j] - ps.vertices[i] });
                    edges.len() - 1
                })
            });
        }
    }
    let distinct_edge_count = pair_index.len();

    let mut classes: Vec<VertexClass> =
        interior.iter().map(|&i| if i { VertexClass::Interior } else { VertexClass::Discarded }).collect();
    for e in &edges {
        for v in [e.i, e.j] {
            if classes[v] == VertexClass::Discarded {
                classes[v] = VertexClass::ActiveBoundary;
            }
        }
    }

    let retained = |a: usize, b: usize| matches!(pair_index.get(&(a.min(b), a.max(b))), Some(Some(_)));
    let mut triples = Vec::new();
    for (pi, poly) in ps.polygons.iter().enumerate() {
        let m = poly.len();
        for t in 0..m {
            let apex = poly.vertex_ids[t];
            let j = poly.vertex_ids[(t + m - 1) % m];
            let k = poly.vertex_ids[(t + 1) % m];
            if !(retained(apex, j) && retained(apex, k)) {
                continue;
            }
            if !opts.boundary_apex_triples && classes[apex] != VertexClass::Interior {
                continue;
            }
            triples.push(AngleTriple {
                apex,
                j,
                k,
                r0_ij: ps.vertices[j] - ps.vertices[apex],
                r0_ik: ps.vertices[k] - ps.vertices[apex],
                polygon: pi,
            });
        }
    }

    let shoelace: i64 = (0..ps.polygons.len()).map(|i| shoelace_x8_over_sqrt3(&ps.cycle(i))).sum();
    Ok(Domain {
        vertices: ps.vertices.clone(),
        classes,
        polygons: ps.polygons.clone(),
        edges,
        triples,
        distinct_edge_count,
        shoelace_x8_over_sqrt3: shoelace,
        area: area_from_shoelace(shoelace),
        center: [0.0, 0.0],
        radius: 0.0,
        realization: None,
    })
}

/// Extract, repair and classify in one call.
pub fn build_domain(
    index: &TilingIndex<'_>,
    center: [f64; 2],
    radius: f64,
    opts: ConnectOptions,
) -> Result<Domain, DomainError> {
    let ps = repair_tjunctions(&extract_disk(index, center, radius)?);
    let mut d = classify_and_connect(&ps, opts)?;
    d.center = center;
    d.radius = radius;
    Ok(d)
}

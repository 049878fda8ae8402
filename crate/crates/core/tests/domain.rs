use hatlab::domain::{
    build_domain, extract_disk, repair_tjunctions, ConnectOptions, Domain, PolygonSet, RealizationId, TilingIndex,
    VertexClass,
};
use hatlab::experiment::realization_center;
use hatlab::lattice::{centroid_xy, shoelace_x8_over_sqrt3};
use hatlab::tiling::{generate, PolygonKind, Tiling, DEFAULT_POLYGON_BUDGET, HAT_SHOELACE};
use proptest::prelude::*;
use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn master() -> &'static Tiling {
    static T: OnceLock<Tiling> = OnceLock::new();
    T.get_or_init(|| generate(5, DEFAULT_POLYGON_BUDGET).unwrap())
}

fn index() -> &'static TilingIndex<'static> {
    static I: OnceLock<TilingIndex<'static>> = OnceLock::new();
    I.get_or_init(|| TilingIndex::new(master()))
}

fn hat_area() -> f64 {
    8.0 * 3f64.sqrt()
}

fn centers(radius: f64, n: u32, count: u32) -> Vec<[f64; 2]> {
    (0..count)
        .map(|i| realization_center(index(), RealizationId { master_seed: 7, n, index: i }, radius).unwrap())
        .collect()
}

fn domain_at(c: [f64; 2], radius: f64) -> Domain {
    build_domain(index(), c, radius, ConnectOptions::default()).unwrap()
}

#[test]
fn area_fill() {
    for r in [20.0, 30.0, 40.0] {
        for c in centers(r, r as u32, 5) {
            let ps = extract_disk(index(), c, r).unwrap();
            let fill = ps.len() as f64 * hat_area() / (PI * r * r);
            assert!((0.9..=1.1).contains(&fill), "r {r}: fill {fill}");
        }
    }
}

#[test]
fn centroid_membership_is_exact() {
    let t = master();
    let r = 25.0;
    for c in centers(r, 1, 3) {
        let ps = extract_disk(index(), c, r).unwrap();
        let brute = (0..t.polygons().len())
            .filter(|&i| {
                let g = centroid_xy(&t.polygon_coords(i));
                (g[0] - c[0]).hypot(g[1] - c[1]) <= r
            })
            .count();
        assert_eq!(ps.len(), brute);
    }
}

#[test]
fn forty_unit_disk_matches_reference_size() {
    // 363 polygons and 2231 vertices at this scale
    let r = 40.0;
    let mut polys = 0.0;
    let mut verts = 0.0;
    let cs = centers(r, 40, 10);
    for &c in &cs {
        let d = domain_at(c, r);
        polys += d.polygons.len() as f64;
        verts += d.vertices.len() as f64;
        assert!(d.count(VertexClass::Discarded) > 0);
        assert!(d.count(VertexClass::Interior) + d.count(VertexClass::ActiveBoundary) < d.vertices.len());
    }
    polys /= cs.len() as f64;
    verts /= cs.len() as f64;
    assert!((polys / 363.0 - 1.0).abs() < 0.05, "mean polygons {polys}");
    assert!((verts / polys / (2231.0 / 363.0) - 1.0).abs() < 0.05, "vertices per polygon {}", verts / polys);
}

fn audit(d: &Domain) {
    let ps = PolygonSet { vertices: d.vertices.clone(), polygons: d.polygons.clone() };
    assert!(ps.strict_edge_incidences().is_empty());

    let mut pairs = HashSet::new();
    let mut area = 0;
    for (i, poly) in d.polygons.iter().enumerate() {
        for (a, b) in poly.edges() {
            pairs.insert((a.min(b), a.max(b)));
        }
        assert_eq!(poly.kind == PolygonKind::Repaired14, poly.len() == 14);
        area += shoelace_x8_over_sqrt3(&ps.cycle(i));
    }
    assert_eq!(d.distinct_edge_count, pairs.len());
    assert_eq!(area, d.shoelace_x8_over_sqrt3);
    assert_eq!(area, HAT_SHOELACE * d.polygons.len() as i64);
    assert!((d.area - d.polygons.len() as f64 * hat_area()).abs() < 1e-9 * d.area);

    let retained: HashSet<(usize, usize)> = d.edges.iter().map(|e| (e.i, e.j)).collect();
    assert_eq!(retained.len(), d.edges.len(), "duplicate retained edge");
    let interior = |v: usize| d.classes[v] == VertexClass::Interior;
    let mut to_interior = vec![0usize; d.vertices.len()];
    let mut degree = vec![0usize; d.vertices.len()];
    for e in &d.edges {
        assert!(e.i < e.j);
        assert!(pairs.contains(&(e.i, e.j)));
        assert_eq!(e.r0, d.vertices[e.j] - d.vertices[e.i]);
        assert!(interior(e.i) || interior(e.j));
        degree[e.i] += 1;
        degree[e.j] += 1;
        if interior(e.j) {
            to_interior[e.i] += 1;
        }
        if interior(e.i) {
            to_interior[e.j] += 1;
        }
    }
    // every pair not retained joins two non-interior vertices
    for &(a, b) in &pairs {
        if !retained.contains(&(a, b)) {
            assert!(!interior(a) && !interior(b));
        }
    }
    for (v, class) in d.classes.iter().enumerate() {
        match class {
            VertexClass::Discarded => assert_eq!(degree[v], 0),
            VertexClass::ActiveBoundary => assert!(to_interior[v] >= 1),
            VertexClass::Interior => {}
        }
    }
    for t in &d.triples {
        for arm in [t.j, t.k] {
            assert!(retained.contains(&(t.apex.min(arm), t.apex.max(arm))));
        }
        assert_ne!(d.classes[t.apex], VertexClass::Discarded);
    }
    let order = d.interior_bfs_order();
    assert_eq!(order.len(), d.count(VertexClass::Interior));
    assert_eq!(order.iter().copied().collect::<HashSet<_>>().len(), order.len());
}

#[test]
fn incidence_audit_over_ten_domains() {
    for (k, c) in centers(10.0, 10, 5).into_iter().chain(centers(20.0, 20, 5)).enumerate() {
        let r = if k < 5 { 10.0 } else { 20.0 };
        audit(&domain_at(c, r));
    }
}

#[test]
fn repair_preserves_area_and_is_idempotent() {
    let c = centers(30.0, 30, 1)[0];
    let raw = extract_disk(index(), c, 30.0).unwrap();
    let fixed = repair_tjunctions(&raw);
    let area = |ps: &PolygonSet| (0..ps.len()).map(|i| shoelace_x8_over_sqrt3(&ps.cycle(i))).sum::<i64>();
    assert_eq!(area(&raw), area(&fixed));
    assert_eq!(repair_tjunctions(&fixed), fixed);
    let added: usize =
        fixed.polygons.iter().map(|p| p.len()).sum::<usize>() - raw.polygons.iter().map(|p| p.len()).sum::<usize>();
    assert_eq!(added, fixed.polygons.iter().filter(|p| p.kind == PolygonKind::Repaired14).count());
}

#[test]
fn midpoint_triples_come_from_repaired_polygons() {
    let d = domain_at(centers(30.0, 30, 1)[0], 30.0);
    let mid: Vec<_> = d.triples.iter().filter(|t| t.is_collinear_midpoint()).collect();
    assert!(!mid.is_empty());
    for t in mid {
        assert_eq!(d.polygons[t.polygon].kind, PolygonKind::Repaired14);
        assert_eq!(t.r0_ij.norm2_x4(), 4);
    }
}

#[test]
fn boundary_apex_toggle_only_removes_boundary_apexes() {
    let c = centers(20.0, 20, 1)[0];
    let with = domain_at(c, 20.0);
    let without = build_domain(index(), c, 20.0, ConnectOptions { boundary_apex_triples: false }).unwrap();
    assert_eq!(with.edges, without.edges);
    assert!(without.triples.len() < with.triples.len());
    assert!(without.triples.iter().all(|t| without.classes[t.apex] == VertexClass::Interior));
    let kept: Vec<_> = with.triples.iter().filter(|t| with.classes[t.apex] == VertexClass::Interior).collect();
    assert_eq!(kept.len(), without.triples.len());
}

#[test]
fn domain_dump_is_json() {
    let d = domain_at(centers(10.0, 10, 1)[0], 10.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    d.save_json(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), d.edges.len());
    assert_eq!(v["classes"].as_array().unwrap().len(), d.vertices.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_domains_satisfy_invariants(u in -1.0f64..1.0, v in -1.0f64..1.0, r in 6.0f64..24.0) {
        let w = index().safe_half_width(r);
        let c = index().patch_center();
        audit(&domain_at([c[0] + u * w, c[1] + v * w], r));
    }
}

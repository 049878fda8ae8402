#![allow(dead_code)]

use hatlab::domain::{build_domain, ConnectOptions, Domain, RealizationId, TilingIndex};
use hatlab::experiment::realization_center;
use hatlab::solver::{solve_spd, SolverConfig};
use hatlab::system::{AssembledSystem, MacroStrain};
use hatlab::tiling::{generate, Tiling, DEFAULT_POLYGON_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::OnceLock;

pub fn master() -> &'static Tiling {
    static T: OnceLock<Tiling> = OnceLock::new();
    T.get_or_init(|| generate(5, DEFAULT_POLYGON_BUDGET).unwrap())
}

pub fn index() -> &'static TilingIndex<'static> {
    static I: OnceLock<TilingIndex<'static>> = OnceLock::new();
    I.get_or_init(|| TilingIndex::new(master()))
}

/// Domain of radius `radius` at keyed realization `i`.
pub fn domain(radius: f64, i: u32) -> Domain {
    let id = RealizationId { master_seed: 11, n: radius as u32, index: i };
    let c = realization_center(index(), id, radius).unwrap();
    build_domain(index(), c, radius, ConnectOptions::default()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in `[-1, 1)`.
pub fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn rel_close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

/// Even-odd point-in-polygon in lattice coordinates `(p, q)`; the affine map
/// to Cartesian coordinates preserves containment.
fn contains(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % n];
        if (y1 > y) != (y2 > y) {
            let xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// Sample offsets chosen so no sample lies on a line `q = c`, `p = c`,
/// `p ± q = c` or `p ± 3q = c` through lattice points.
pub const OFFSETS: [(f64, f64); 4] = [(0.2, 1.0 / 7.0), (0.6, 3.0 / 7.0), (0.4, 5.0 / 7.0), (0.8, 6.0 / 7.0)];

/// Samples every lattice cell at `OFFSETS` and fails if two polygons claim
/// the same sample or a polygon receives none.
pub fn check_no_overlap(t: &Tiling) -> Result<(), String> {
    let mut owner: HashMap<(i64, i64, usize), usize> = HashMap::new();
    for pi in 0..t.polygons().len() {
        let c = t.polygon_coords(pi);
        let poly: Vec<(f64, f64)> = c.iter().map(|v| (v.p as f64, v.q as f64)).collect();
        let (p0, p1) = (c.iter().map(|v| v.p).min().unwrap(), c.iter().map(|v| v.p).max().unwrap());
        let (q0, q1) = (c.iter().map(|v| v.q).min().unwrap(), c.iter().map(|v| v.q).max().unwrap());
        let mut hits = 0;
        for p in p0..p1 {
            for q in q0..q1 {
                for (s, (a, b)) in OFFSETS.iter().enumerate() {
                    if contains(&poly, p as f64 + a, q as f64 + b) {
                        hits += 1;
                        if let Some(other) = owner.insert((p, q, s), pi) {
                            return Err(format!("polygons {other} and {pi} overlap near ({p}, {q})"));
                        }
                    }
                }
            }
        }
        if hits == 0 {
            return Err(format!("polygon {pi} holds no sample"));
        }
    }
    Ok(())
}

/// Largest relative gap between the explicit Voigt stress and the central
/// difference of the minimized energy density, over the three load cases.
pub fn hill_error(d: &Domain, sys: &AssembledSystem, stress: impl Fn(&MacroStrain, &[[f64; 3]]) -> [f64; 3]) -> f64 {
    let solver = SolverConfig::default();
    let solve = |e: &MacroStrain| solve_spd(&sys.k, &[sys.load_vector(e)], &solver).unwrap().0.remove(0);
    let minimized = |e: &MacroStrain| sys.energy(e, &solve(e));
    let mut worst: f64 = 0.0;
    for e in MacroStrain::load_cases() {
        let v = e.voigt();
        let s = stress(&e, &sys.dof_map.expand(&solve(&e)));
        let h = 1e-3;
        let mut fd = [0.0; 3];
        for c in 0..3 {
            let (mut p, mut m) = (v, v);
            p[c] += h;
            m[c] -= h;
            fd[c] =
                (minimized(&MacroStrain::from_voigt(p)) - minimized(&MacroStrain::from_voigt(m))) / (2.0 * h) / d.area;
        }
        let scale = fd.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for c in 0..3 {
            worst = worst.max((s[c] - fd[c]).abs() / scale);
        }
    }
    worst
}

mod common;

use common::{domain, hill_error, rng, uniform};
use hatlab::beam::{
    affine_edge_energy, assemble_beam, assemble_beam_on, cantilever_tip_deflection, element_stiffness,
    macroscopic_stress_beam, BeamConfig, BoundaryRotation, ShearStress,
};
use hatlab::domain::Domain;
use hatlab::homogenize::{homogenize, ModelRef};
use hatlab::solver::{dense_eigen_range, SolverConfig};
use hatlab::system::{tensor_to_voigt_stress, AssembledSystem, DofMap, MacroStrain};
use proptest::prelude::*;

fn edge_vector() -> impl Strategy<Value = [f64; 2]> {
    (0usize..12, prop::sample::select(vec![1.0, 3f64.sqrt(), 2.0])).prop_map(|(k, l)| {
        let a = k as f64 * std::f64::consts::PI / 6.0;
        [l * a.cos(), l * a.sin()]
    })
}

fn config() -> impl Strategy<Value = BeamConfig> {
    (0.1f64..10.0, 0.1f64..10.0, 0.01f64..4.0).prop_map(|(es, gs2, ej)| BeamConfig {
        es,
        gs2,
        ej,
        ..BeamConfig::default()
    })
}

proptest! {
    #[test]
    fn element_rigid_modes_have_no_energy(r0 in edge_vector(), cfg in config(), tx in -1.0f64..1.0, ty in -1.0f64..1.0, th in -1.0f64..1.0) {
        let el = element_stiffness(r0, &cfg);
        let trace: f64 = (0..9).map(|i| el.condensed[(i, i)]).sum();
        let z = [tx, ty, th, tx - th * r0[1], ty + th * r0[0], th, 0.0, 0.0, 0.0];
        prop_assert!(el.energy_condensed(&z).abs() <= 1e-12 * trace);
        prop_assert!(el.energy_full(&z, 0.0).abs() <= 1e-12 * trace);
        let v = nalgebra::SVector::<f64, 9>::from_column_slice(&z);
        let f = el.condensed * v;
        prop_assert!(f.amax() <= 1e-12 * trace);
    }

    #[test]
    fn condensation_is_exact_minimization(r0 in edge_vector(), cfg in config(), z in prop::array::uniform9(-1.0f64..1.0)) {
        let el = element_stiffness(r0, &cfg);
        let b = el.bubble(&z);
        let e = el.energy_full(&z, b);
        prop_assert!((e - el.energy_condensed(&z)).abs() <= 1e-12 * e.abs().max(1e-12));
        let h = 1e-3;
        let slope = (el.energy_full(&z, b + h) - el.energy_full(&z, b - h)) / (2.0 * h);
        let curv = el.full[(6, 6)];
        prop_assert!(slope.abs() <= 1e-9 * curv.max(1.0));
        prop_assert!(el.energy_full(&z, b + h) >= e);
    }

    #[test]
    fn condensed_matrix_is_symmetric_psd(r0 in edge_vector(), cfg in config()) {
        let el = element_stiffness(r0, &cfg);
        prop_assert!((el.condensed - el.condensed.transpose()).amax() <= 1e-13 * el.condensed.amax());
        let ev = el.condensed.symmetric_eigenvalues();
        prop_assert!(ev.min() >= -1e-12 * ev.max());
    }
}

#[test]
fn assembled_c0_is_affine_energy() {
    let d = domain(10.0, 0);
    let cfg = BeamConfig::default();
    let sys = assemble_beam(&d, &cfg).unwrap();
    let zero = vec![0.0; sys.n_free()];
    let mut r = rng(5);
    for _ in 0..20 {
        let v = uniform(&mut r, 3);
        let e = MacroStrain::new(v[0], v[1], v[2]);
        let direct: f64 = d.edges.iter().map(|ed| affine_edge_energy(ed, &cfg, &e)).sum();
        let assembled = sys.energy(&e, &zero);
        assert!((direct - assembled).abs() <= 1e-12 * direct.max(1e-12), "{direct} vs {assembled}");
    }
}

#[test]
fn frame_rigid_motions_are_null() {
    let d = domain(10.0, 1);
    let sys = assemble_beam_on(&d, &BeamConfig::default(), DofMap::unconstrained(&d, 3)).unwrap();
    let scale = sys.k.max_abs();
    let c = d.center;
    let modes: [Box<dyn Fn([f64; 2]) -> [f64; 3]>; 3] = [
        Box::new(|_| [1.0, 0.0, 0.0]),
        Box::new(|_| [0.0, 1.0, 0.0]),
        Box::new(move |x| [-(x[1] - c[1]), x[0] - c[0], 1.0]),
    ];
    for mode in modes {
        let mut u = vec![0.0; sys.n_free()];
        for v in 0..d.vertices.len() {
            let m = mode(d.position(v));
            for comp in 0..3 {
                if let Some(k) = sys.dof_map.dof(v, comp) {
                    u[k] = m[comp];
                }
            }
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ku = sys.k.matvec(&u);
        assert!(ku.iter().all(|x| x.abs() <= 1e-12 * scale * norm));
    }
}

fn hill_check(d: &Domain, cfg: &BeamConfig, sys: &AssembledSystem, variant: ShearStress) -> f64 {
    hill_error(d, sys, |e, u| tensor_to_voigt_stress(macroscopic_stress_beam(d, cfg, e, u, variant)))
}

#[test]
fn exact_stress_is_derivative_of_minimized_energy() {
    let d = domain(10.0, 2);
    for rot in [BoundaryRotation::Clamped, BoundaryRotation::Free] {
        let cfg = BeamConfig { boundary_rotation: rot, ..BeamConfig::default() };
        let sys = assemble_beam(&d, &cfg).unwrap();
        let err = hill_check(&d, &cfg, &sys, ShearStress::Exact);
        assert!(err < 1e-6, "{rot:?}: {err}");
    }
}

#[test]
fn shear_without_rotation_is_not_energy_consistent() {
    let d = domain(10.0, 2);
    let cfg = BeamConfig::default();
    let sys = assemble_beam(&d, &cfg).unwrap();
    assert!(hill_check(&d, &cfg, &sys, ShearStress::WithoutRotation) > 1e-3);
}

#[test]
fn extension_terms_alone_obey_cauchy_relation() {
    let d = domain(20.0, 0);
    let cfg = BeamConfig { gs2: 0.0, ..BeamConfig::default() };
    let zero = vec![[0.0; 3]; d.vertices.len()];
    let mut h = [[0.0; 3]; 3];
    for (c, e) in MacroStrain::load_cases().iter().enumerate() {
        let s = tensor_to_voigt_stress(macroscopic_stress_beam(&d, &cfg, e, &zero, ShearStress::Exact));
        for r in 0..3 {
            h[r][c] = s[r];
        }
    }
    assert!((h[0][1] - h[2][2]).abs() < 1e-12 * h[0][0]);
}

#[test]
fn beam_system_is_definite_and_hooke_symmetric() {
    let d = domain(10.0, 3);
    let cfg = BeamConfig::default();
    let sys = assemble_beam(&d, &cfg).unwrap();
    let (lo, hi) = dense_eigen_range(&sys.k).unwrap();
    assert!(lo > 1e-10 * hi);
    let hom = homogenize(&d, ModelRef::Beam(&cfg), &SolverConfig::default()).unwrap();
    assert!(hom.hooke.asymmetry < 1e-10, "asymmetry {}", hom.hooke.asymmetry);
}

#[test]
fn cantilever_follows_refinement_law() {
    let cfg = BeamConfig { es: 1.0, gs2: 2.0, ej: 0.25, ..BeamConfig::default() };
    let exact = 11.0 / 6.0;
    let mut prev = 0.0;
    for n in [1usize, 2, 4, 8, 16, 64] {
        let w = cantilever_tip_deflection(n, &cfg, 1.0, 1.0);
        let law = exact - 1.0 / (3.0 * (n * n) as f64);
        assert!((w - law).abs() < 1e-10, "{n} elements: {w} vs {law}");
        assert!(w > prev && w < exact);
        prev = w;
    }
}

#[test]
fn cantilever_shear_part_is_exact() {
    // with very stiff bending only the shear compliance L/GS₂ remains
    let cfg = BeamConfig { es: 1.0, gs2: 2.0, ej: 1e8, ..BeamConfig::default() };
    let w = cantilever_tip_deflection(3, &cfg, 1.0, 1.0);
    assert!((w - 0.5).abs() < 1e-7);
}

mod common;

use common::{assert_close, rng};
use rand::Rng;
use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::sync::Arc;
use udcs::densities::{
    builtin_bell_cosine, builtin_bell_unit, builtin_gaussian1d, builtin_shifted_exponential,
    builtin_uniform_on, Density, SuperlevelRegion,
};
use udcs::dyadic::{
    cube_box, enumerate_density, enumerate_uniform, in_decomposition, locate, Cube, EnumStats,
    MassAtom,
};
use udcs::regions::{AxisBox, Ellipsoid, GenericRegion, Region};
use udcs::Error;

fn cube(k: i32, v: &[i64]) -> Cube {
    Cube::new(k, v)
}

fn example_ellipse() -> Ellipsoid<f64> {
    Ellipsoid::new(2, &[4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0]).unwrap()
}

fn collect_uniform(r: &dyn Region<f64>, k_max: i32) -> (Vec<MassAtom<f64>>, EnumStats<f64>) {
    let mut atoms = Vec::new();
    let stats = enumerate_uniform(r, k_max, &mut |a| atoms.push(a)).unwrap();
    (atoms, stats)
}

fn collect_density(f: &dyn Density<f64>, k_max: i32) -> (Vec<MassAtom<f64>>, EnumStats<f64>) {
    let mut atoms = Vec::new();
    let stats = enumerate_density(f, k_max, &mut |a| atoms.push(a)).unwrap();
    (atoms, stats)
}

#[test]
fn cube_box_matches_dyadic_geometry() {
    let b = cube_box::<f64>(&cube(0, &[0, 0]));
    assert_eq!(b.lower(), &[0.0, 0.0]);
    assert_eq!(b.upper(), &[1.0, 1.0]);

    let b = cube_box::<f64>(&cube(2, &[2, 3]));
    assert_eq!(b.lower(), &[0.5, 0.75]);
    assert_eq!(b.upper(), &[0.75, 1.0]);

    let b = cube_box::<f64>(&cube(-1, &[0]));
    assert_eq!(b.lower(), &[0.0]);
    assert_eq!(b.upper(), &[2.0]);

    let b = cube_box::<f64>(&cube(3, &[-8]));
    assert_eq!(b.lower(), &[-1.0]);
    assert_eq!(b.upper(), &[-0.875]);
}

#[test]
fn parent_halves_the_grid_with_floor_semantics() {
    assert_eq!(cube(2, &[2, 3]).parent(), cube(1, &[1, 1]));
    assert_eq!(cube(0, &[0]).parent(), cube(-1, &[0]));
    assert_eq!(cube(0, &[-1]).parent(), cube(-1, &[-1]));
    assert_eq!(cube(3, &[-8]).parent(), cube(2, &[-4]));
    assert_eq!(cube(1, &[-3]).parent(), cube(0, &[-2]));
    // The parent's box contains the child's box.
    let c = cube(5, &[-13, 27]);
    let cb = cube_box::<f64>(&c);
    let pb = cube_box::<f64>(&c.parent());
    for i in 0..2 {
        assert!(pb.lower()[i] <= cb.lower()[i] && cb.upper()[i] <= pb.upper()[i]);
    }
}

#[test]
fn decomposition_membership_examples() {
    let square = AxisBox::<f64>::unit_cube(2);
    assert!(in_decomposition(&cube(0, &[0, 0]), &square).unwrap());
    assert!(!in_decomposition(&cube(1, &[0, 0]), &square).unwrap());

    let seg = AxisBox::new(&[0.0], &[0.75]).unwrap();
    assert!(in_decomposition(&cube(1, &[0]), &seg).unwrap());
    assert!(in_decomposition(&cube(2, &[2]), &seg).unwrap());
    assert!(!in_decomposition(&cube(2, &[0]), &seg).unwrap(), "parent already inside");
    assert!(!in_decomposition(&cube(1, &[1]), &seg).unwrap(), "not contained at all");

    let opaque = GenericRegion::new(
        AxisBox::<f64>::unit_cube(1),
        Box::new(|x: &[f64]| x[0] < 0.5),
    );
    assert!(matches!(
        in_decomposition(&cube(2, &[0]), &opaque),
        Err(Error::UnsoundClassification(_))
    ));
}

#[test]
fn locate_finds_the_decomposition_cube() {
    let square = AxisBox::<f64>::unit_cube(2);
    assert_eq!(locate(&[0.3, 0.7], &square, 40).unwrap(), cube(0, &[0, 0]));

    let seg = AxisBox::new(&[0.0], &[0.75]).unwrap();
    assert_eq!(locate(&[0.6], &seg, 40).unwrap(), cube(2, &[2]));
    assert_eq!(locate(&[0.2], &seg, 40).unwrap(), cube(1, &[0]));
    assert_eq!(locate(&[0.7499999], &seg, 40).unwrap(), cube(2, &[2]));

    // Located cubes are decomposition members containing the point.
    let mut r = rng(61);
    let ell = example_ellipse();
    for _ in 0..200 {
        let x = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        if !ell.contains(&x) {
            continue;
        }
        match locate(&x, &ell, 40) {
            Ok(c) => {
                assert!(in_decomposition(&c, &ell).unwrap());
                let b = cube_box::<f64>(&c);
                assert!(b.contains_point(&x));
            }
            Err(e) => assert!(e.retriable()),
        }
    }
}

#[test]
fn locate_reports_boundary_and_outside_points() {
    let seg = AxisBox::new(&[0.0], &[0.75]).unwrap();
    assert!(matches!(locate(&[0.75], &seg, 40), Err(Error::PointOutsideRegion)));
    let square = AxisBox::<f64>::unit_cube(2);
    assert!(matches!(locate(&[2.0, 0.0], &square, 40), Err(Error::PointOutsideRegion)));

    // A point exactly on the ellipse boundary straddles at every depth.
    let ell = example_ellipse();
    let on_boundary = [3.0f64.sqrt() / 2.0, 0.0];
    match locate(&on_boundary, &ell, 40) {
        Err(Error::DepthExhausted { k_max, deepest }) => {
            assert_eq!(k_max, 40);
            assert_eq!(deepest.k, 40);
            assert!(cube_box::<f64>(&deepest).contains_point(&on_boundary));
            assert!(Error::DepthExhausted { k_max, deepest }.retriable());
        }
        other => panic!("expected depth exhaustion, got {other:?}"),
    }
}

#[test]
fn enumerate_uniform_closed_forms() {
    let square = AxisBox::<f64>::unit_cube(2);
    let (atoms, stats) = collect_uniform(&square, 16);
    assert_eq!(atoms.len(), 1);
    assert_eq!(atoms[0].cube, cube(0, &[0, 0]));
    assert_close(atoms[0].mass, 1.0, 1e-12, "whole-square atom");
    assert_close(stats.emitted_mass, 1.0, 1e-12, "emitted");
    assert!(stats.residual_mass().abs() < 1e-12);
    assert_eq!(stats.straddle_count, 0);

    let seg = AxisBox::new(&[0.0], &[0.75]).unwrap();
    let (atoms, stats) = collect_uniform(&seg, 16);
    let by_cube: HashMap<Cube, f64> = atoms.iter().map(|a| (a.cube.clone(), a.mass)).collect();
    assert_eq!(by_cube.len(), 2);
    assert_close(by_cube[&cube(1, &[0])], 2.0 / 3.0, 1e-12, "left half");
    assert_close(by_cube[&cube(2, &[2])], 1.0 / 3.0, 1e-12, "right quarter");
    assert!(stats.residual_mass().abs() < 1e-12);
}

#[test]
fn enumerate_uniform_converges_and_is_ancestor_free() {
    let seg = AxisBox::new(&[0.0], &[0.7]).unwrap();
    let (atoms, stats) = collect_uniform(&seg, 20);
    assert_eq!(atoms.len() as u64, stats.atom_count);
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    assert_close(total, stats.emitted_mass, 1e-12, "sink sees everything");
    assert!(stats.residual_mass() > 0.0, "0.7 is not dyadic");
    assert!(stats.residual_mass() < 2e-6);

    let cubes: HashSet<Cube> = atoms.iter().map(|a| a.cube.clone()).collect();
    assert_eq!(cubes.len(), atoms.len(), "no duplicates");
    for c in &cubes {
        let mut p = c.clone();
        while p.k > -4 {
            p = p.parent();
            assert!(!cubes.contains(&p), "ancestor of {c:?} also emitted");
        }
    }

    let ell = example_ellipse();
    let (atoms10, s10) = collect_uniform(&ell, 10);
    assert!(s10.emitted_mass >= 0.99, "emitted {}", s10.emitted_mass);
    let (_, s12) = collect_uniform(&ell, 12);
    assert!(s12.emitted_mass > s10.emitted_mass);
    assert!(s10.straddle_count > 0);
    // Straddle frontier bounds the residual: each unresolved cell carries at
    // most its own share of the uniform mass.
    let v = PI / (4.0f64 / 3.0).sqrt();
    let bound = s10.straddle_count as f64 * 2.0f64.powi(-20) / v;
    assert!(s10.residual_mass() <= bound + 1e-12);
    for a in &atoms10 {
        assert!(in_decomposition(&a.cube, &ell).unwrap());
    }
}

#[test]
fn density_enumeration_of_a_uniform_matches_region_enumeration() {
    let ell = Arc::new(example_ellipse());
    let u = builtin_uniform_on(ell as Arc<dyn Region<f64>>).unwrap();
    let (da, ds) = collect_density(&u, 10);
    let (ra, rs) = collect_uniform(&example_ellipse(), 10);
    let dm: HashMap<Cube, f64> = da.iter().map(|a| (a.cube.clone(), a.mass)).collect();
    let rm: HashMap<Cube, f64> = ra.iter().map(|a| (a.cube.clone(), a.mass)).collect();
    assert_eq!(dm.len(), rm.len());
    for (c, m) in &rm {
        let got = dm.get(c).unwrap_or_else(|| panic!("missing atom {c:?}"));
        assert_close(*got, *m, 1e-12, "atom mass");
    }
    assert_close(ds.emitted_mass, rs.emitted_mass, 1e-12, "emitted");
    assert_eq!(ds.straddle_count, rs.straddle_count);
}

#[test]
fn density_enumeration_conserves_mass_against_flat_sum() {
    let square = Arc::new(AxisBox::<f64>::unit_cube(2));
    let densities: Vec<Box<dyn Density<f64>>> = vec![
        Box::new(builtin_gaussian1d::<f64>()),
        Box::new(builtin_shifted_exponential::<f64>(3.0).unwrap()),
        Box::new(builtin_bell_cosine::<f64>(PI, 1).unwrap()),
        Box::new(builtin_bell_unit::<f64>(0.37).unwrap()),
        Box::new(builtin_bell_unit::<f64>(0.05).unwrap()),
        Box::new(builtin_uniform_on(square as Arc<dyn Region<f64>>).unwrap()),
    ];
    for f in &densities {
        let n = f.dim();
        let k = if n == 1 { 12 } else { 8 };
        let (atoms, stats) = collect_density(f.as_ref(), k);
        assert_eq!(atoms.len() as u64, stats.atom_count);
        for a in &atoms {
            assert!(a.mass > 0.0, "zero-mass atom {:?}", a.cube);
            assert!(a.cube.k <= k);
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        assert_close(total, stats.emitted_mass, 1e-9, "sink total");

        // Independent flat Riemann sum at the cap level: the tree masses
        // telescope to exactly the level-k lower sum.
        let bb = f.support_box();
        let scale = 2.0f64.powi(k);
        let v_lo: Vec<i64> = (0..n).map(|i| (bb.lower()[i] * scale).floor() as i64).collect();
        let v_hi: Vec<i64> = (0..n).map(|i| (bb.upper()[i] * scale).floor() as i64).collect();
        let cell = 2.0f64.powi(-k * n as i32);
        let mut flat = 0.0;
        let mut v = v_lo.clone();
        'grid: loop {
            flat += f.cube_inf(&cube_box::<f64>(&cube(k, &v))) * cell;
            for i in 0..n {
                if v[i] < v_hi[i] {
                    v[i] += 1;
                    continue 'grid;
                }
                v[i] = v_lo[i];
            }
            break;
        }
        assert_close(flat, stats.emitted_mass, 1e-9, "flat lower sum");
        assert!(stats.residual_mass() < 1e-3, "residual at cap");
    }
}

#[test]
fn density_enumeration_residual_shrinks_with_depth() {
    let g = builtin_gaussian1d::<f64>();
    let mut sink = |_: MassAtom<f64>| {};
    let s12 = enumerate_density(&g, 12, &mut sink).unwrap();
    let s17 = enumerate_density(&g, 17, &mut sink).unwrap();
    assert!(s17.residual_mass() < s12.residual_mass());
    assert!(s17.residual_mass() < 2e-5, "residual {}", s17.residual_mass());
    assert!(s17.emitted_mass <= 1.0 + 1e-12);
}

#[test]
fn two_step_scheme_frequencies_match_atom_masses() {
    // Monte Carlo of the literal generation scheme: draw x from f, then a
    // level z uniform under f(x), then locate x in the superlevel set.
    let g = builtin_gaussian1d::<f64>();
    let k_cap = 8;
    let (atoms, stats) = collect_density(&g, k_cap);
    let masses: HashMap<Cube, f64> = atoms.iter().map(|a| (a.cube.clone(), a.mass)).collect();

    let mut r = rng(62);
    let n = 200_000usize;
    let mut counts: HashMap<Cube, u64> = HashMap::new();
    let mut deep_or_residual = 0u64;
    let mut x = [0.0f64];
    for _ in 0..n {
        g.sample(&mut r, &mut x).unwrap();
        let fx = g.eval(&x);
        if fx <= 0.0 {
            deep_or_residual += 1;
            continue;
        }
        let mut u: f64 = r.random();
        while u == 0.0 {
            u = r.random();
        }
        let z = u * fx;
        let level = SuperlevelRegion::new(&g, z);
        match locate(&x, &level, 40) {
            Ok(c) if c.k <= k_cap => *counts.entry(c).or_insert(0) += 1,
            Ok(_) => deep_or_residual += 1,
            Err(e) => {
                assert!(e.retriable());
                deep_or_residual += 1;
            }
        }
    }

    let mut checked = 0;
    for (c, m) in &masses {
        let expected = m * n as f64;
        if expected < 100.0 {
            continue;
        }
        checked += 1;
        let got = *counts.get(c).unwrap_or(&0) as f64;
        let sigma = (expected * (1.0 - m)).sqrt();
        assert!(
            (got - expected).abs() <= 4.0 * sigma,
            "cube {c:?}: observed {got}, expected {expected} (4 sigma = {:.1})",
            4.0 * sigma
        );
    }
    assert!(checked >= 20, "only {checked} cubes had enough expected mass");

    // Events falling below the cap match the residual mass.
    let expected_residual = stats.residual_mass() * n as f64;
    let sigma = (expected_residual * (1.0 - stats.residual_mass())).sqrt();
    assert!(
        (deep_or_residual as f64 - expected_residual).abs() <= 4.0 * sigma + 1.0,
        "residual bucket {deep_or_residual} vs {expected_residual}"
    );

    // Every located cube (within cap) must be an emitted atom.
    for c in counts.keys() {
        assert!(masses.contains_key(c), "located cube {c:?} missing from enumeration");
    }
}

#[test]
fn located_cubes_have_positive_slab_mass() {
    let g = builtin_gaussian1d::<f64>();
    let mut r = rng(63);
    let mut x = [0.0f64];
    let mut tested = 0;
    while tested < 200 {
        g.sample(&mut r, &mut x).unwrap();
        let fx = g.eval(&x);
        if fx <= 0.0 {
            continue;
        }
        let z = r.random_range(f64::MIN_POSITIVE..1.0) * fx;
        let level = SuperlevelRegion::new(&g, z);
        let Ok(c) = locate(&x, &level, 40) else { continue };
        tested += 1;
        assert!(in_decomposition(&c, &level).unwrap());
        let b = cube_box::<f64>(&c);
        let parent_b = cube_box::<f64>(&c.parent());
        let slab = g.cube_inf(&b) - g.cube_inf(&parent_b);
        assert!(slab > 0.0, "located cube has empty level slab");
    }
}

mod common;

use common::{assert_close, ks_statistic, rng, standard_normal_cdf};
use rand::Rng;
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;
use udcs::densities::{
    builtin_bell_cosine, builtin_bell_unit, builtin_gaussian1d, builtin_shifted_exponential,
    builtin_uniform_on, level_density_and_entropy, Density, SuperlevelRegion,
};
use udcs::regions::{AxisBox, CubeClass, Ellipsoid, Region};

const PHI0: f64 = 0.3989422804014327; // standard normal density at 0
const PHI1: f64 = 0.24197072451914337;
const PHI2: f64 = 0.05399096651318806;

fn ibox(lo: f64, hi: f64) -> AxisBox<f64> {
    AxisBox::new(&[lo], &[hi]).unwrap()
}

fn example_ellipse() -> Ellipsoid<f64> {
    Ellipsoid::new(2, &[4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0]).unwrap()
}

/// Simpson integration of a smooth 1d slice of a density.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn gaussian_pointwise_and_cube_bounds() {
    let g = builtin_gaussian1d::<f64>();
    assert_eq!(g.dim(), 1);
    assert_close(g.eval(&[0.0]), PHI0, 1e-15, "phi(0)");
    assert_close(g.eval(&[1.0]), PHI1, 1e-15, "phi(1)");
    assert_close(g.eval(&[-1.0]), PHI1, 1e-15, "phi(-1)");
    assert_eq!(g.eval(&[-9.0]), 0.0, "outside the truncated support");
    assert_close(g.sup(), PHI0, 1e-15, "sup");

    assert_close(g.cube_inf(&ibox(1.0, 2.0)), PHI2, 1e-15, "inf over [1,2]");
    assert_close(g.cube_inf(&ibox(-1.0, 1.0)), PHI1, 1e-15, "inf over [-1,1]");
    assert_eq!(g.cube_inf(&ibox(-9.0, 0.0)), 0.0, "pokes outside support");

    assert_close(g.cube_sup(&ibox(-1.0, 2.0)), PHI0, 1e-15, "mode inside");
    assert_close(g.cube_sup(&ibox(1.0, 2.0)), PHI1, 1e-15, "sup over [1,2]");
    assert_close(g.cube_sup(&ibox(-3.0, -2.0)), PHI2, 1e-15, "sup over [-3,-2]");

    let bb = g.support_box();
    assert_eq!(bb.lower(), &[-8.0]);
    assert_eq!(bb.upper(), &[8.0]);
    let trunc: f64 = g.truncated_mass();
    assert!((trunc / 1.2441921148543639e-15 - 1.0).abs() < 1e-3);
}

#[test]
fn shifted_exponential_pointwise_and_cube_bounds() {
    assert!(builtin_shifted_exponential::<f64>(-0.5).is_err());
    let a = 3.0;
    let e = builtin_shifted_exponential::<f64>(a).unwrap();
    assert_close(e.eval(&[a]), 1.0, 1e-15, "density at the support edge");
    assert_close(e.eval(&[a + 2.0]), (-2.0f64).exp(), 1e-15, "two units in");
    assert_eq!(e.eval(&[a - 0.1]), 0.0);
    assert_close(e.sup(), 1.0, 1e-15, "sup");

    assert_close(e.cube_inf(&ibox(a + 1.0, a + 2.0)), (-2.0f64).exp(), 1e-15, "inf right endpoint");
    assert_eq!(e.cube_inf(&ibox(a - 1.0, a + 1.0)), 0.0, "crosses the support edge");
    assert_close(e.cube_sup(&ibox(a + 1.0, a + 2.0)), (-1.0f64).exp(), 1e-15, "sup left endpoint");
    assert_eq!(e.cube_sup(&ibox(a - 2.0, a - 1.0)), 0.0);

    let bb = e.support_box();
    assert_close(bb.lower()[0], a, 1e-15, "support starts at a");
    assert_close(bb.upper()[0], a + 49.0 * LN_2, 1e-12, "truncated tail");
    assert_close(e.truncated_mass(), 2.0f64.powi(-49), 1e-18, "tail mass");
}

#[test]
fn bell_cosine_sign_reading_and_cube_bounds() {
    let plus = builtin_bell_cosine::<f64>(0.0, 1).unwrap();
    assert_close(plus.eval(&[0.0]), 0.5, 1e-15, "peak");
    assert_eq!(plus.eval(&[PI]), 0.0);
    assert!(plus.eval(&[PI / 2.0]).abs() < 1e-15, "clipped at the arc edge");
    let minus = builtin_bell_cosine::<f64>(0.0, -1).unwrap();
    assert_close(minus.eval(&[PI]), 0.5, 1e-15, "sign flip is a half-turn");
    assert!(builtin_bell_cosine::<f64>(0.0, 2).is_err());

    // Centered arc: support is a plain interval.
    let c = builtin_bell_cosine::<f64>(PI, 1).unwrap();
    let bb = c.support_box();
    assert_close(bb.lower()[0], PI / 2.0, 1e-12, "arc start");
    assert_close(bb.upper()[0], 3.0 * PI / 2.0, 1e-12, "arc end");
    assert_close(
        c.cube_inf(&ibox(PI - 0.5, PI + 0.5)),
        0.5f64.cos() / 2.0,
        1e-15,
        "inf at box edge",
    );
    assert_close(c.cube_sup(&ibox(PI - 0.5, PI + 0.5)), 0.5, 1e-15, "peak inside");
    assert_close(
        c.cube_sup(&ibox(PI + 0.2, PI + 0.7)),
        0.2f64.cos() / 2.0,
        1e-15,
        "sup at box edge",
    );

    // Wrapped arc: two pieces, inf still exact inside a piece.
    let w = builtin_bell_cosine::<f64>(0.0, 1).unwrap();
    let bb = w.support_box();
    assert_eq!(bb.lower(), &[0.0]);
    assert_close(bb.upper()[0], 2.0 * PI, 1e-12, "wrapped support spans the circle");
    assert_close(w.cube_inf(&ibox(0.0, 0.3)), 0.3f64.cos() / 2.0, 1e-15, "inside right piece");
    assert_close(
        w.cube_inf(&ibox(2.0 * PI - 0.4, 2.0 * PI)),
        0.4f64.cos() / 2.0,
        1e-15,
        "inside left piece",
    );
    assert_eq!(w.cube_inf(&ibox(PI / 2.0 - 0.1, PI / 2.0 + 0.1)), 0.0, "crosses arc edge");
    assert_eq!(w.cube_inf(&ibox(0.2, 2.0 * PI - 0.2)), 0.0, "spans the dead zone");
}

#[test]
fn bell_unit_pointwise_and_wrap_flag() {
    let b = builtin_bell_unit::<f64>(0.5).unwrap();
    assert_close(b.eval(&[0.5]), PI, 1e-15, "peak");
    assert_close(b.eval(&[0.3]), PI * (0.4 * PI).cos(), 1e-15, "direct formula");
    assert_close(b.eval(&[0.3]), 0.9708055193627333, 1e-12, "frozen value");
    assert_eq!(b.eval(&[0.76]), 0.0);
    assert!(!b.wraps());
    assert!(builtin_bell_unit::<f64>(0.0).unwrap().wraps());
    assert!(builtin_bell_unit::<f64>(0.9).unwrap().wraps());
    assert!(!builtin_bell_unit::<f64>(0.37).unwrap().wraps());
    assert!(builtin_bell_unit::<f64>(1.0).is_err());
    assert!(builtin_bell_unit::<f64>(-0.1).is_err());

    let bb = builtin_bell_unit::<f64>(0.37).unwrap().support_box();
    assert_close(bb.lower()[0], 0.12, 1e-12, "arc start");
    assert_close(bb.upper()[0], 0.62, 1e-12, "arc end");

    let w = builtin_bell_unit::<f64>(0.05).unwrap();
    assert_close(w.cube_inf(&ibox(0.0, 0.35)), 0.0, 1e-15, "crosses the arc edge at 0.3");
    assert_close(
        w.cube_inf(&ibox(0.0, 0.125)),
        PI * (2.0 * PI * 0.075).cos(),
        1e-12,
        "inf at the far endpoint from the peak",
    );
}

#[test]
fn bell_densities_integrate_to_one() {
    // Non-wrapping arc: single smooth piece.
    let b = builtin_bell_unit::<f64>(0.5).unwrap();
    let m = simpson(|x| b.eval(&[x]), 0.25, 0.75, 1 << 12);
    assert_close(m, 1.0, 1e-9, "bell unit mass");

    // Wrapping arc: integrate the two pieces separately.
    let w = builtin_bell_unit::<f64>(0.05).unwrap();
    let m = simpson(|x| w.eval(&[x]), 0.0, 0.3, 1 << 12)
        + simpson(|x| w.eval(&[x]), 0.8, 1.0, 1 << 12);
    assert_close(m, 1.0, 1e-9, "wrapped bell unit mass");

    // Sign-flipped coin, picked so the flipped arc still does not wrap.
    let c = builtin_bell_cosine::<f64>(1.0, -1).unwrap();
    let bb = c.support_box();
    assert!(bb.lower()[0] > 0.0 && bb.upper()[0] < 2.0 * PI);
    let m = simpson(|x| c.eval(&[x]), bb.lower()[0], bb.upper()[0], 1 << 12);
    assert_close(m, 1.0, 1e-9, "bell cosine mass");
}

#[test]
fn uniform_density_reflects_region() {
    let square = Arc::new(AxisBox::<f64>::unit_cube(2));
    let u = builtin_uniform_on(square as Arc<dyn Region<f64>>).unwrap();
    assert_close(u.eval(&[0.2, 0.9]), 1.0, 1e-15, "uniform on the square");
    assert_eq!(u.eval(&[1.2, 0.9]), 0.0);
    assert_close(u.sup(), 1.0, 1e-15, "sup");
    let inside = AxisBox::new(&[0.25, 0.25], &[0.75, 0.75]).unwrap();
    assert_close(u.cube_inf(&inside), 1.0, 1e-15, "certified inside");
    let straddling = AxisBox::new(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
    assert_eq!(u.cube_inf(&straddling), 0.0);

    let ell = Arc::new(example_ellipse());
    let u = builtin_uniform_on(ell as Arc<dyn Region<f64>>).unwrap();
    assert_close(u.eval(&[0.0, 0.0]), 0.36755259694786135, 1e-12, "1/V of the ellipse");

    let degenerate = Arc::new(AxisBox::new(&[0.0, 0.0], &[1.0, 0.0]).unwrap());
    assert!(builtin_uniform_on(degenerate as Arc<dyn Region<f64>>).is_err());
}

#[test]
fn cube_bounds_are_sound_on_random_boxes() {
    let mut rng = rng(51);
    let square = Arc::new(AxisBox::<f64>::unit_cube(2));
    let ell = Arc::new(example_ellipse());
    let densities: Vec<Box<dyn Density<f64>>> = vec![
        Box::new(builtin_gaussian1d::<f64>()),
        Box::new(builtin_shifted_exponential::<f64>(3.0).unwrap()),
        Box::new(builtin_bell_cosine::<f64>(1.0, 1).unwrap()),
        Box::new(builtin_bell_cosine::<f64>(0.0, -1).unwrap()),
        Box::new(builtin_bell_unit::<f64>(0.37).unwrap()),
        Box::new(builtin_bell_unit::<f64>(0.05).unwrap()),
        Box::new(builtin_uniform_on(square as Arc<dyn Region<f64>>).unwrap()),
        Box::new(builtin_uniform_on(ell as Arc<dyn Region<f64>>).unwrap()),
    ];
    let mut x = [0.0f64; 2];
    for f in &densities {
        let n = f.dim();
        let bb = f.support_box();
        for _ in 0..1250 {
            let mut lo = [0.0f64; 2];
            let mut hi = [0.0f64; 2];
            for i in 0..n {
                let w = bb.width(i);
                let a = rng.random_range(bb.lower()[i] - 0.2 * w..bb.upper()[i] + 0.1 * w);
                let b = rng.random_range(a..a + 0.5 * w);
                lo[i] = a;
                hi[i] = b;
            }
            let b = AxisBox::new(&lo[..n], &hi[..n]).unwrap();
            let inf = f.cube_inf(&b);
            let sup = f.cube_sup(&b);
            assert!(inf >= 0.0 && sup <= f.sup() + 1e-12);
            assert!(inf <= sup + 1e-12, "inf {inf} > sup {sup} on {b:?}");
            for _ in 0..8 {
                for i in 0..n {
                    x[i] = rng.random_range(lo[i]..hi[i]);
                }
                let v = f.eval(&x[..n]);
                assert!(
                    v >= inf - 1e-12 && v <= sup + 1e-12,
                    "f({:?}) = {v} outside [{inf}, {sup}] on {b:?}",
                    &x[..n]
                );
            }
        }
    }
}

#[test]
fn samplers_match_analytic_cdfs() {
    let mut r = rng(52);
    let n_samples = 100_000;
    let mut buf = [0.0f64; 2];

    let g = builtin_gaussian1d::<f64>();
    let mut xs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        g.sample(&mut r, &mut buf[..1]).unwrap();
        xs.push(buf[0]);
    }
    assert!(ks_statistic(&mut xs, standard_normal_cdf) < 0.01, "gaussian sampler");

    let e = builtin_shifted_exponential::<f64>(3.0).unwrap();
    let mut xs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        e.sample(&mut r, &mut buf[..1]).unwrap();
        assert!(buf[0] >= 3.0);
        xs.push(buf[0]);
    }
    assert!(
        ks_statistic(&mut xs, |x| 1.0 - (-(x - 3.0)).exp()) < 0.01,
        "shifted exponential sampler"
    );

    // Bell samplers: compare the wrapped offset from the peak against its
    // closed-form CDF (sin(d)+1)/2 on [-pi/2, pi/2] (scaled for the unit one).
    let c = builtin_bell_cosine::<f64>(0.3, -1).unwrap();
    let peak = 0.3 + PI;
    let mut ds = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        c.sample(&mut r, &mut buf[..1]).unwrap();
        assert!((0.0..=2.0 * PI).contains(&buf[0]));
        let mut d = buf[0] - peak;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        ds.push(d);
    }
    assert!(ks_statistic(&mut ds, |d| (d.sin() + 1.0) / 2.0) < 0.01, "bell cosine sampler");

    let b = builtin_bell_unit::<f64>(0.05).unwrap();
    let mut ds = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        b.sample(&mut r, &mut buf[..1]).unwrap();
        assert!((0.0..=1.0).contains(&buf[0]));
        let mut d = buf[0] - 0.05;
        if d > 0.5 {
            d -= 1.0;
        }
        if d < -0.5 {
            d += 1.0;
        }
        ds.push(d);
    }
    assert!(
        ks_statistic(&mut ds, |d| ((2.0 * PI * d).sin() + 1.0) / 2.0) < 0.01,
        "bell unit sampler"
    );

    // Uniform on the ellipse: the quadratic form of a uniform draw is U[0,1].
    let ell = Arc::new(example_ellipse());
    let u = builtin_uniform_on(ell as Arc<dyn Region<f64>>).unwrap();
    let mut qs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        u.sample(&mut r, &mut buf).unwrap();
        let (x, y) = (buf[0], buf[1]);
        qs.push((4.0 / 3.0) * (x * x - x * y + y * y));
    }
    assert!(ks_statistic(&mut qs, |q| q.clamp(0.0, 1.0)) < 0.01, "uniform ellipse sampler");
}

#[test]
fn superlevel_region_classifies_through_cube_bounds() {
    let g = builtin_gaussian1d::<f64>();
    let lz = SuperlevelRegion::new(&g, 0.2);
    assert_eq!(Region::dim(&lz), 1);
    assert!(lz.contains(&[0.0]));
    assert!(!lz.contains(&[2.0]));
    assert_eq!(lz.classify_cube(&ibox(-1.0, 1.0)).unwrap(), CubeClass::Inside);
    assert_eq!(lz.classify_cube(&ibox(-2.0, 2.0)).unwrap(), CubeClass::Straddles);
    assert_eq!(lz.classify_cube(&ibox(2.0, 3.0)).unwrap(), CubeClass::Outside);
    let expect = 2.0 * (-2.0 * (0.2 * (2.0 * PI).sqrt()).ln()).sqrt();
    assert_close(lz.volume_hint().unwrap(), expect, 1e-12, "level volume closed form");

    // The flat top of a uniform density: at z = 1/V the whole region is the
    // superlevel set; just above it the set is empty.
    let square = Arc::new(AxisBox::<f64>::unit_cube(2));
    let u = builtin_uniform_on(square as Arc<dyn Region<f64>>).unwrap();
    let at_top = SuperlevelRegion::new(&u, 1.0);
    let inside = AxisBox::new(&[0.25, 0.25], &[0.75, 0.75]).unwrap();
    assert_eq!(at_top.classify_cube(&inside).unwrap(), CubeClass::Inside);
    let above = SuperlevelRegion::new(&u, 1.0 + 1e-9);
    assert_eq!(above.classify_cube(&inside).unwrap(), CubeClass::Outside);

    // Level volumes shrink with z.
    let mut last = f64::INFINITY;
    for i in 1..=40 {
        let z = g.sup() * i as f64 / 40.0;
        let v = SuperlevelRegion::new(&g, z).volume_hint().unwrap();
        assert!(v <= last + 1e-12, "level volume must shrink");
        last = v;
    }
}

#[test]
fn level_entropy_uniform_cases_are_exact() {
    let square = Arc::new(AxisBox::<f64>::unit_cube(2));
    let u = builtin_uniform_on(square as Arc<dyn Region<f64>>).unwrap();
    let ld = level_density_and_entropy(&u, 4096).unwrap();
    assert_close(ld.mass, 1.0, 1e-9, "square level mass");
    assert_close(ld.entropy, 0.0, 1e-9, "square level entropy");
    assert!(ld.f_z.iter().all(|&v| (v - 1.0).abs() < 1e-12));

    let ell = Arc::new(example_ellipse());
    let u = builtin_uniform_on(ell as Arc<dyn Region<f64>>).unwrap();
    let ld = level_density_and_entropy(&u, 4096).unwrap();
    assert_close(ld.mass, 1.0, 1e-9, "ellipse level mass");
    assert_close(ld.entropy, -1.443977379832897, 1e-9, "minus log of the volume");
}

#[test]
fn level_entropy_matches_frozen_values() {
    let g = builtin_gaussian1d::<f64>();
    let ld = level_density_and_entropy(&g, 32768).unwrap();
    assert_close(ld.mass, 1.0, 1e-3, "gaussian level mass");
    assert_close(ld.entropy, -1.526321, 2e-3, "gaussian level entropy");
    assert!(ld.error_estimate < 2e-3);
    assert_eq!(ld.z.len(), 32768);
    assert_eq!(ld.f_z.len(), 32768);

    let e = builtin_shifted_exponential::<f64>(3.0).unwrap();
    let ld = level_density_and_entropy(&e, 32768).unwrap();
    assert_close(ld.mass, 1.0, 1e-3, "exponential level mass");
    assert_close(ld.entropy, -0.609944, 2e-3, "exponential level entropy");

    let c = builtin_bell_cosine::<f64>(PI, 1).unwrap();
    let ld = level_density_and_entropy(&c, 32768).unwrap();
    assert_close(ld.mass, 1.0, 1e-3, "bell cosine level mass");
    assert_close(ld.entropy, -1.116599, 2e-3, "bell cosine level entropy");

    let b = builtin_bell_unit::<f64>(0.37).unwrap();
    let ld = level_density_and_entropy(&b, 32768).unwrap();
    assert_close(ld.mass, 1.0, 1e-3, "bell unit level mass");
    assert_close(ld.entropy, 1.534897, 2e-3, "bell unit level entropy");
    assert!(ld.entropy <= PI.log2(), "entropy cannot exceed log of the sup");

    // Same arc shape wherever the phase sits.
    let b2 = builtin_bell_unit::<f64>(0.05).unwrap();
    let ld2 = level_density_and_entropy(&b2, 32768).unwrap();
    assert_close(ld2.entropy, ld.entropy, 1e-9, "level entropy is phase invariant");
}

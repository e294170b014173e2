//! Length accounting for the coding schemes: exact expected codeword length
//! and codeword entropy from enumerated atoms, Monte Carlo cross-checks,
//! closed-form mean-length upper bounds, and the implied distribution of the
//! code together with the relative-entropy lower bound it induces.

use crate::codec::{codeword_length, encode_density, SchemeConfig, Variant};
use crate::densities::Density;
use crate::dyadic::{enumerate_density, Cube};
use crate::entropy_codes::delta_signed_length;
use crate::real::Real;
use crate::regions::MAX_DIM;
use crate::{Error, Result};
use rand::RngCore;

/// Length and entropy of the cube message, measured from the atom masses.
/// The lower mean drops everything below the depth cap; the upper mean
/// pessimistically prices the residual at the longest codeword a depth-cap
/// cube inside the support can have.
#[derive(Clone, Debug)]
pub struct LengthReport<F> {
    pub mean_length_lower: F,
    pub mean_length_upper: F,
    pub codeword_entropy: F,
    pub atom_count: u64,
    pub residual_mass: F,
}

fn far_corner_length<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    variant: Variant,
    k_max: i32,
) -> Result<usize> {
    let bb = f.support_box();
    match variant {
        Variant::Bounded => codeword_length(&Cube::new(k_max, &vec![0; f.dim()]), variant),
        Variant::Unbounded => {
            let scale = 2f64.powi(k_max);
            let v: Vec<i64> = (0..f.dim())
                .map(|i| {
                    let m = bb.lower()[i].abs().max(bb.upper()[i].abs()).as_f64();
                    (m * scale).floor() as i64
                })
                .collect();
            codeword_length(&Cube::new(k_max, &v), variant)
        }
    }
}

/// Expected codeword length and codeword entropy by exact enumeration down
/// to `k_max`.
pub fn expected_length<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    variant: Variant,
    k_max: i32,
) -> Result<LengthReport<F>> {
    if variant == Variant::Bounded {
        let bb = f.support_box();
        for i in 0..bb.dim() {
            if bb.lower()[i] < F::zero() || bb.upper()[i] > F::one() {
                return Err(Error::domain(
                    "bounded variant requires support inside the unit cube",
                ));
            }
        }
    }
    let mut sum_len = F::zero();
    let mut neg_mlogm = F::zero();
    let mut failure: Option<Error> = None;
    let stats = enumerate_density(f, k_max, &mut |atom| {
        if failure.is_some() {
            return;
        }
        match codeword_length(&atom.cube, variant) {
            Ok(len) => {
                sum_len = sum_len + atom.mass * F::of(len as f64);
                neg_mlogm = neg_mlogm - atom.mass * atom.mass.log2();
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let covered = stats.emitted_mass;
    if covered <= F::zero() {
        return Err(Error::BadVolume);
    }
    // H over the conditional (normalized) cube distribution.
    let entropy = neg_mlogm / covered + covered.log2();
    let residual = stats.residual_mass().max(F::zero());
    let far = F::of(far_corner_length(f, variant, k_max)? as f64);
    Ok(LengthReport {
        mean_length_lower: sum_len,
        mean_length_upper: sum_len + residual * far,
        codeword_entropy: entropy,
        atom_count: stats.atom_count,
        residual_mass: residual,
    })
}

/// Sample mean and standard error of encoder output lengths.
#[derive(Clone, Debug)]
pub struct McLength<F> {
    pub mean: F,
    pub stderr: F,
    pub retries: u64,
}

pub fn mc_expected_length<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    variant: Variant,
    rounds: u64,
    rng: &mut dyn RngCore,
) -> Result<McLength<F>> {
    if rounds < 1 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let cfg = SchemeConfig::new(variant, f.dim())?;
    let mut retries = 0u64;
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    for _ in 0..rounds {
        let len = loop {
            match encode_density(f, &cfg, rng) {
                Ok(enc) => break enc.bits.len() as f64,
                Err(e) if e.retriable() => {
                    retries += 1;
                    if retries > rounds + 1000 {
                        return Err(e);
                    }
                }
                Err(e) => return Err(e),
            }
        };
        sum += len;
        sumsq += len * len;
    }
    let n = rounds as f64;
    let mean = sum / n;
    let var = ((sumsq - sum * sum / n) / (n - 1.0).max(1.0)).max(0.0);
    Ok(McLength {
        mean: F::of(mean),
        stderr: F::of((var / n).sqrt()),
        retries,
    })
}

/// The per-coordinate length envelope t + 2 log t of the signed universal
/// code, in bits.
pub fn delta_length_envelope<F: Real>(t: F) -> Result<F> {
    if t <= F::zero() {
        return Err(Error::domain("length envelope needs t > 0"));
    }
    Ok(t + F::two() * t.log2())
}

fn log2_pos<F: Real>(x: F, what: &str) -> Result<F> {
    if x <= F::zero() {
        return Err(Error::domain(format!("{what} must be positive")));
    }
    Ok(x.log2())
}

fn check_dim(n: usize) -> Result<()> {
    if n < 1 || n > MAX_DIM {
        return Err(Error::domain(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Mean-length bound for the uniform scheme from the erosion entropy `h` of
/// the region and the mean sup-norm of its points.
pub fn uniform_region_bound<F: Real>(n: usize, h: F, mean_norm: F) -> Result<F> {
    check_dim(n)?;
    let log_mn = log2_pos(mean_norm, "mean norm")?;
    let nf = F::of(n as f64);
    let first = delta_length_envelope(h + log_mn + F::of(8.0))?;
    let inner = log2_pos(
        h + F::two() * log_mn.max(F::zero()) + F::of(9.0),
        "envelope argument",
    )?;
    let second = delta_length_envelope(inner + F::two())?;
    Ok(nf * first + second)
}

/// Mean-length bound for the uniform scheme on an orthogonally convex
/// region, from its volume and the mean sup-norm distance to a reference
/// point with sup-norm `xhat_norm`.
pub fn orthoconvex_region_bound<F: Real>(n: usize, r: F, xhat_norm: F, volume: F) -> Result<F> {
    check_dim(n)?;
    let log_r = log2_pos(r, "mean deviation")?;
    let log_v = log2_pos(volume, "volume")?;
    let nf = F::of(n as f64);
    let nm1 = F::of((n - 1) as f64);
    let first = delta_length_envelope(
        nm1 * log_r + log2_pos(xhat_norm + r, "reference offset")? - log_v
            + F::of(4.0) * nf
            + F::of(8.0),
    )?;
    let inner = log2_pos(
        nm1 * log_r + F::two() * r.max(F::zero()) - log_v + F::of(4.0) * nf + F::of(9.0),
        "envelope argument",
    )?;
    let second = delta_length_envelope(inner + F::two())?;
    Ok(nf * first + second)
}

/// Mean-length bound for the general scheme from the mean erosion entropy
/// over levels, E_Z[h], and the mean sup-norm.
pub fn density_level_bound<F: Real>(n: usize, ez_h: F, mean_norm: F) -> Result<F> {
    check_dim(n)?;
    let log_mn = log2_pos(mean_norm, "mean norm")?;
    let nf = F::of(n as f64);
    let first = delta_length_envelope(ez_h + log_mn + F::of(8.0))?;
    let inner = log2_pos(
        ez_h + F::two() * log_mn.max(F::zero()) + F::of(10.0),
        "envelope argument",
    )?;
    let second = delta_length_envelope(inner + F::two())?;
    Ok(nf * first + second)
}

/// Mean-length bound for the general scheme on an orthogonally concave
/// density; `t` is h(Z) or log sup f, whichever is at hand.
pub fn orthoconcave_density_bound<F: Real>(n: usize, r: F, xhat_norm: F, t: F) -> Result<F> {
    check_dim(n)?;
    let log_r = log2_pos(r, "mean deviation")?;
    let nf = F::of(n as f64);
    let nm1 = F::of((n - 1) as f64);
    let four_n = F::of(4.0) * nf;
    let first = delta_length_envelope(
        nm1 * log_r + log2_pos(xhat_norm + r, "reference offset")? + t + four_n + F::of(8.0),
    )?;
    let inner = log2_pos(
        nm1 * log_r + F::two() * log_r.max(F::zero()) + t + four_n + F::of(10.0),
        "envelope argument",
    )?;
    let second = delta_length_envelope(inner + F::two())?;
    Ok(nf * first + second)
}

/// Mean-length bound for the bounded scheme on [0,1]^n; `t` is h(Z) or
/// log sup f.
pub fn unit_support_bound<F: Real>(n: usize, t: F) -> Result<F> {
    check_dim(n)?;
    let nf = F::of(n as f64);
    let s = t + nf.log2() + F::log2_e();
    let log_arg = log2_pos(s + F::of(3.0), "depth argument")?;
    Ok(nf * (s + F::two()) + F::two() * log_arg + F::one())
}

/// Mean-length budget for encoding an exponential arrival time that starts
/// at `a`.
pub fn shifted_exponential_bound<F: Real>(a: F) -> Result<F> {
    if a < F::zero() {
        return Err(Error::domain("shift must be non-negative"));
    }
    let la = (a + F::one()).log2();
    Ok(la + F::two() * (la + F::of(12.0)).log2() + F::of(23.0))
}

/// Lazily evaluated mixture density of the code: each codeword within the
/// truncation ranges contributes 2^{-L(w)} spread uniformly over its cube.
/// `density` returns the unnormalized mixture; the Kraft sum over included
/// codewords is `normalizer`.
#[derive(Clone, Debug)]
pub struct ImpliedDistribution<F> {
    pub variant: Variant,
    pub n: usize,
    pub k_lo: i32,
    pub k_hi: i32,
    pub v_max: i64,
    pub normalizer: F,
}

/// Kraft mass of one axis's index field: sum of 2^{-L(v)} over |v| <= v_max,
/// grouped by bit-length class (the length is constant within a class).
fn signed_index_kraft(v_max: i64) -> f64 {
    let mut total = 2f64.powi(-(delta_signed_length(0) as i32));
    let mut j = 0u32;
    while (1i64 << j) <= v_max {
        let class_lo = 1i64 << j;
        let class_hi = if j >= 62 {
            v_max
        } else {
            ((1i64 << (j + 1)) - 1).min(v_max)
        };
        let count = (class_hi - class_lo + 1) as f64;
        let len = delta_signed_length(class_lo) as i32;
        total += 2.0 * count * 2f64.powi(-len);
        if j >= 62 {
            break;
        }
        j += 1;
    }
    total
}

fn bounded_level_length(k: i32, n: usize) -> i32 {
    n as i32 * k + 2 * (k as u32 + 1).ilog2() as i32 + 1
}

pub fn implied_distribution<F: Real>(
    variant: Variant,
    n: usize,
    k_lo: i32,
    k_hi: i32,
    v_max: i64,
) -> Result<ImpliedDistribution<F>> {
    check_dim(n)?;
    if v_max < 0 {
        return Err(Error::InvalidParameter("v_max must be non-negative".into()));
    }
    let k_lo = match variant {
        Variant::Unbounded => k_lo,
        Variant::Bounded => k_lo.max(0),
    };
    if k_lo > k_hi {
        return Err(Error::EmptyRange);
    }
    if k_hi > 62 {
        return Err(Error::InvalidParameter("depth cap above 62".into()));
    }
    let mut normalizer = 0.0f64;
    match variant {
        Variant::Unbounded => {
            let per_axis = signed_index_kraft(v_max);
            for k in k_lo..=k_hi {
                normalizer += 2f64.powi(-(delta_signed_length(k as i64) as i32))
                    * per_axis.powi(n as i32);
            }
        }
        Variant::Bounded => {
            for k in k_lo..=k_hi {
                // Indices run over [0, 2^k) clipped by the cap.
                let cells = if k < 63 { 1i64 << k } else { i64::MAX };
                let included = cells.min(v_max.saturating_add(1)) as f64;
                let ratio = included / cells as f64;
                normalizer +=
                    ratio.powi(n as i32) * 2f64.powi(-(2 * (k as u32 + 1).ilog2() as i32 + 1));
            }
        }
    }
    Ok(ImpliedDistribution {
        variant,
        n,
        k_lo,
        k_hi,
        v_max,
        normalizer: F::of(normalizer),
    })
}

impl<F: Real> ImpliedDistribution<F> {
    /// Unnormalized mixture density at x.
    pub fn density(&self, x: &[F]) -> F {
        assert_eq!(x.len(), self.n);
        let mut total = 0.0f64;
        'levels: for k in self.k_lo..=self.k_hi {
            let scale = 2f64.powi(k);
            let mut len = match self.variant {
                Variant::Unbounded => delta_signed_length(k as i64) as i64,
                Variant::Bounded => bounded_level_length(k, self.n) as i64,
            };
            for xi in x {
                let v = (xi.as_f64() * scale).floor() as i64;
                match self.variant {
                    Variant::Unbounded => {
                        if v.abs() > self.v_max {
                            continue 'levels;
                        }
                        len += delta_signed_length(v) as i64;
                    }
                    Variant::Bounded => {
                        if v < 0 || v >= (1i64 << k) || v > self.v_max {
                            continue 'levels;
                        }
                    }
                }
            }
            total += 2f64.powi((self.n as i64 * k as i64 - len) as i32);
        }
        F::of(total)
    }
}

/// Numeric relative entropy D(f || mu) in bits against the unnormalized
/// implied mixture, by midpoint quadrature over the density's support box.
#[derive(Clone, Debug)]
pub struct RelativeEntropy<F> {
    pub value: F,
    pub error_estimate: F,
    /// Probability mass of f falling where the table has no density.
    pub leakage: F,
}

fn midpoint_divergence<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    imp: &ImpliedDistribution<F>,
    cells_per_axis: usize,
) -> (f64, f64) {
    let n = f.dim();
    let bb = f.support_box();
    let widths: Vec<f64> = (0..n)
        .map(|i| (bb.upper()[i] - bb.lower()[i]).as_f64() / cells_per_axis as f64)
        .collect();
    let cell_vol: f64 = widths.iter().product();
    let mut idx = vec![0usize; n];
    let mut x = vec![F::zero(); n];
    let mut total = 0.0f64;
    let mut leak = 0.0f64;
    'grid: loop {
        for i in 0..n {
            x[i] = bb.lower()[i] + F::of((idx[i] as f64 + 0.5) * widths[i]);
        }
        let fx = f.eval(&x).as_f64();
        if fx > 0.0 {
            let mu = imp.density(&x).as_f64();
            if mu > 0.0 {
                total += fx * (fx / mu).log2() * cell_vol;
            } else {
                leak += fx * cell_vol;
            }
        }
        for i in 0..n {
            idx[i] += 1;
            if idx[i] < cells_per_axis {
                continue 'grid;
            }
            idx[i] = 0;
        }
        break;
    }
    (total, leak)
}

pub fn relative_entropy_lower_bound<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    imp: &ImpliedDistribution<F>,
    steps: usize,
) -> Result<RelativeEntropy<F>> {
    if f.dim() != imp.n {
        return Err(Error::domain("density and table dimensions differ"));
    }
    if steps < 4 {
        return Err(Error::InvalidParameter("too few quadrature steps".into()));
    }
    let cells = if f.dim() == 1 {
        steps
    } else {
        (steps as f64).powf(1.0 / f.dim() as f64).floor() as usize
    };
    let (coarse, _) = midpoint_divergence(f, imp, (cells / 2).max(2));
    let (value, leak) = midpoint_divergence(f, imp, cells);
    if leak > 1e-3 {
        return Err(Error::Coverage { leakage: leak });
    }
    Ok(RelativeEntropy {
        value: F::of(value),
        error_estimate: F::of((value - coarse).abs()),
        leakage: F::of(leak),
    })
}

/// Log-log regression slope of the implied density along the diagonal,
/// after dividing out its polylog factor: the fit of
/// log2(mu(x) (log2 ||x||)^{2n}) against log2 ||x||.
pub fn decay_slope<F: Real>(
    imp: &ImpliedDistribution<F>,
    x_lo: F,
    x_hi: F,
    points: usize,
) -> Result<F> {
    if points < 2 || x_lo <= F::one() || x_hi <= x_lo {
        return Err(Error::InvalidParameter(
            "need at least two abscissas above 1".into(),
        ));
    }
    let (l0, l1) = (x_lo.as_f64().log2(), x_hi.as_f64().log2());
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for j in 0..points {
        let lx = l0 + (l1 - l0) * j as f64 / (points - 1) as f64;
        let t = F::of(lx.exp2());
        let point = vec![t; imp.n];
        let mu = imp.density(&point).as_f64();
        if mu <= 0.0 {
            return Err(Error::domain("implied density vanishes on the grid"));
        }
        xs.push(lx);
        ys.push(mu.log2() + 2.0 * imp.n as f64 * lx.log2());
    }
    let mx = xs.iter().sum::<f64>() / points as f64;
    let my = ys.iter().sum::<f64>() / points as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..points {
        num += (xs[j] - mx) * (ys[j] - my);
        den += (xs[j] - mx) * (xs[j] - mx);
    }
    Ok(F::of(num / den))
}

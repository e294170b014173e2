//! Built-in probability densities with exact per-cube infima and suprema.
//!
//! The decomposition machinery only ever touches a density through
//! `cube_inf`/`cube_sup`, so those two must be sound; for the built-ins they
//! are exact, which makes superlevel-set classification exact as well.
//! Unbounded supports are truncated to a finite box and the clipped
//! probability is reported through `truncated_mass`, never silently dropped.

use crate::real::Real;
use crate::regions::{volume, AxisBox, CubeClass, Region};
use crate::{Error, Result};
use rand::RngCore;
use rand_distr::{Distribution, Exp1, StandardNormal};
use smallvec::SmallVec;
use std::sync::Arc;

/// A probability density the pipeline can decompose and sample.
pub trait Density<F: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// Pointwise density. Zero outside the support box: truncation is part
    /// of the density, so mass accounting stays consistent everywhere.
    fn eval(&self, x: &[F]) -> F;

    /// Supremum of the density.
    fn sup(&self) -> F;

    /// Finite box outside of which the density is (treated as) zero.
    fn support_box(&self) -> AxisBox<F>;

    /// Exact infimum of the density over a closed box.
    fn cube_inf(&self, b: &AxisBox<F>) -> F;

    /// Upper bound for the density over a closed box; tight for built-ins.
    fn cube_sup(&self, b: &AxisBox<F>) -> F {
        let _ = b;
        self.sup()
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [F]) -> Result<()>;

    /// Probability mass removed by support truncation.
    fn truncated_mass(&self) -> F {
        F::zero()
    }

    /// Closed-form volume of the superlevel set `{f >= z}`, if known.
    fn level_volume(&self, z: F) -> Option<F> {
        let _ = z;
        None
    }
}

fn uniform_in<F: Real>(lo: F, hi: F, rng: &mut dyn RngCore) -> F {
    lo + (hi - lo) * F::of(rand::Rng::random::<f64>(rng))
}

// ---------------------------------------------------------------------------
// Standard normal, truncated to |x| <= 8 for decomposition purposes.

const GAUSS_HALF_WIDTH: f64 = 8.0;
/// Two-tail mass beyond |x| = 8, i.e. erfc(8/sqrt(2)).
const GAUSS_TAIL_MASS: f64 = 1.2441921148543639e-15;
const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

#[derive(Debug, Clone)]
pub struct Gaussian1d<F> {
    half_width: F,
}

pub fn builtin_gaussian1d<F: Real>() -> Gaussian1d<F> {
    Gaussian1d { half_width: F::of(GAUSS_HALF_WIDTH) }
}

impl<F: Real> Gaussian1d<F> {
    fn phi(&self, x: F) -> F {
        (-(x * x) * F::half()).exp() * F::of(FRAC_1_SQRT_2PI)
    }
}

impl<F: Real> Density<F> for Gaussian1d<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[F]) -> F {
        assert_eq!(x.len(), 1);
        if x[0].abs() > self.half_width {
            F::zero()
        } else {
            self.phi(x[0])
        }
    }

    fn sup(&self) -> F {
        F::of(FRAC_1_SQRT_2PI)
    }

    fn support_box(&self) -> AxisBox<F> {
        AxisBox::new(&[-self.half_width], &[self.half_width]).expect("finite bounds")
    }

    fn cube_inf(&self, b: &AxisBox<F>) -> F {
        let (lo, hi) = (b.lower()[0], b.upper()[0]);
        if lo < -self.half_width || hi > self.half_width {
            return F::zero();
        }
        // Unimodal: the minimum sits at the endpoint farther from the mode.
        self.phi(lo.abs().max(hi.abs()))
    }

    fn cube_sup(&self, b: &AxisBox<F>) -> F {
        let lo = b.lower()[0].max(-self.half_width);
        let hi = b.upper()[0].min(self.half_width);
        if lo > hi {
            return F::zero();
        }
        if lo <= F::zero() && hi >= F::zero() {
            self.sup()
        } else {
            self.phi(lo.abs().min(hi.abs()))
        }
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [F]) -> Result<()> {
        assert_eq!(out.len(), 1);
        let v: f64 = StandardNormal.sample(rng);
        out[0] = F::of(v);
        Ok(())
    }

    fn truncated_mass(&self) -> F {
        F::of(GAUSS_TAIL_MASS)
    }

    fn level_volume(&self, z: F) -> Option<F> {
        if z > self.sup() {
            return Some(F::zero());
        }
        let x = (-F::two() * (z / F::of(FRAC_1_SQRT_2PI)).ln()).sqrt();
        Some(F::two() * x.min(self.half_width))
    }
}

// ---------------------------------------------------------------------------
// Shifted exponential e^{-(x-a)} on [a, a + 49 ln 2].

/// At 49 halvings the density is below 2^-49 of its sup; the clipped tail
/// mass is exactly 2^-49.
const EXP_WIDTH_HALVINGS: f64 = 49.0;

#[derive(Debug, Clone)]
pub struct ShiftedExponential<F> {
    a: F,
    width: F,
}

pub fn builtin_shifted_exponential<F: Real>(a: F) -> Result<ShiftedExponential<F>> {
    if !a.is_finite() || a < F::zero() {
        return Err(Error::domain("shift must be a finite nonnegative real"));
    }
    Ok(ShiftedExponential { a, width: F::of(EXP_WIDTH_HALVINGS * std::f64::consts::LN_2) })
}

impl<F: Real> Density<F> for ShiftedExponential<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[F]) -> F {
        assert_eq!(x.len(), 1);
        if x[0] < self.a || x[0] > self.a + self.width {
            F::zero()
        } else {
            (self.a - x[0]).exp()
        }
    }

    fn sup(&self) -> F {
        F::one()
    }

    fn support_box(&self) -> AxisBox<F> {
        AxisBox::new(&[self.a], &[self.a + self.width]).expect("finite bounds")
    }

    fn cube_inf(&self, b: &AxisBox<F>) -> F {
        let (lo, hi) = (b.lower()[0], b.upper()[0]);
        if lo < self.a || hi > self.a + self.width {
            return F::zero();
        }
        (self.a - hi).exp()
    }

    fn cube_sup(&self, b: &AxisBox<F>) -> F {
        let lo = b.lower()[0].max(self.a);
        let hi = b.upper()[0].min(self.a + self.width);
        if lo > hi {
            return F::zero();
        }
        (self.a - lo).exp()
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [F]) -> Result<()> {
        assert_eq!(out.len(), 1);
        let v: f64 = Exp1.sample(rng);
        out[0] = self.a + F::of(v);
        Ok(())
    }

    fn truncated_mass(&self) -> F {
        (-self.width).exp()
    }

    fn level_volume(&self, z: F) -> Option<F> {
        if z > F::one() {
            return Some(F::zero());
        }
        Some((-z.ln()).min(self.width))
    }
}

// ---------------------------------------------------------------------------
// Clipped-cosine bells. Both variants are the same shape: amp * cos(scale *
// (x - peak)) clipped at zero, on a domain of exactly one period, so the
// support is an arc of half a period that may wrap around the domain ends.

#[derive(Debug, Clone)]
struct WrappedCosine<F> {
    peak: F,
    scale: F,
    amp: F,
    domain_hi: F,
}

impl<F: Real> WrappedCosine<F> {
    fn new(peak: F, scale: F, amp: F, domain_hi: F) -> Self {
        Self { peak, scale, amp, domain_hi }
    }

    fn half_arc(&self) -> F {
        F::pi() * F::half() / self.scale
    }

    fn value(&self, x: F) -> F {
        if x < F::zero() || x > self.domain_hi {
            return F::zero();
        }
        (self.scale * (x - self.peak)).cos().max(F::zero()) * self.amp
    }

    /// Closed intervals of positive density within the domain; one arc, or
    /// two when the support wraps around an end of the domain.
    fn pieces(&self) -> SmallVec<[(F, F); 2]> {
        let w = self.half_arc();
        let (lo, hi) = (self.peak - w, self.peak + w);
        let mut out = SmallVec::new();
        if lo < F::zero() {
            out.push((F::zero(), hi));
            out.push((lo + self.domain_hi, self.domain_hi));
        } else if hi > self.domain_hi {
            out.push((F::zero(), hi - self.domain_hi));
            out.push((lo, self.domain_hi));
        } else {
            out.push((lo, hi));
        }
        out
    }

    fn wraps(&self) -> bool {
        self.pieces().len() == 2
    }

    fn support_box(&self) -> AxisBox<F> {
        let pieces = self.pieces();
        let (lo, hi) = if pieces.len() == 1 { pieces[0] } else { (F::zero(), self.domain_hi) };
        AxisBox::new(&[lo], &[hi]).expect("finite bounds")
    }

    /// Exact infimum: positive only when the box sits inside one arc piece,
    /// where the density is unimodal, putting the minimum at an endpoint.
    fn cube_inf(&self, lo: F, hi: F) -> F {
        for &(plo, phi) in &self.pieces() {
            if lo >= plo && hi <= phi {
                return self.value(lo).min(self.value(hi));
            }
        }
        F::zero()
    }

    fn cube_sup(&self, lo: F, hi: F) -> F {
        let mut best = F::zero();
        for &(plo, phi) in &self.pieces() {
            let l = lo.max(plo);
            let h = hi.min(phi);
            if l > h {
                continue;
            }
            if self.peak >= l && self.peak <= h {
                return self.amp;
            }
            best = best.max(self.value(l)).max(self.value(h));
        }
        best
    }

    fn level_volume(&self, z: F) -> F {
        if z > self.amp {
            return F::zero();
        }
        F::two() * (z / self.amp).acos() / self.scale
    }

    fn sample(&self, rng: &mut dyn RngCore) -> F {
        // If U is uniform, arcsin(2U-1) has the half-period cosine law.
        let u = F::of(rand::Rng::random::<f64>(rng));
        let d = (F::two() * u - F::one()).asin() / self.scale;
        let mut x = self.peak + d;
        if x < F::zero() {
            x += self.domain_hi;
        }
        if x > self.domain_hi {
            x -= self.domain_hi;
        }
        x
    }
}

/// `(1/2) max{y_A cos(x - theta), 0}` on `[0, 2pi]`.
#[derive(Debug, Clone)]
pub struct BellCosine<F> {
    arc: WrappedCosine<F>,
}

pub fn builtin_bell_cosine<F: Real>(theta: F, y_a: i8) -> Result<BellCosine<F>> {
    if y_a != 1 && y_a != -1 {
        return Err(Error::domain("coin value must be +1 or -1"));
    }
    if !theta.is_finite() {
        return Err(Error::domain("phase must be finite"));
    }
    // The negative coin flips the sign under the clipped cosine, which is
    // the same bell shifted by half a turn.
    let mut peak = theta;
    if y_a == -1 {
        peak += F::pi();
    }
    let two_pi = F::two_pi();
    peak = peak - (peak / two_pi).floor() * two_pi;
    Ok(BellCosine { arc: WrappedCosine::new(peak, F::one(), F::half(), two_pi) })
}

impl<F: Real> Density<F> for BellCosine<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[F]) -> F {
        assert_eq!(x.len(), 1);
        self.arc.value(x[0])
    }

    fn sup(&self) -> F {
        F::half()
    }

    fn support_box(&self) -> AxisBox<F> {
        self.arc.support_box()
    }

    fn cube_inf(&self, b: &AxisBox<F>) -> F {
        self.arc.cube_inf(b.lower()[0], b.upper()[0])
    }

    fn cube_sup(&self, b: &AxisBox<F>) -> F {
        self.arc.cube_sup(b.lower()[0], b.upper()[0])
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [F]) -> Result<()> {
        assert_eq!(out.len(), 1);
        out[0] = self.arc.sample(rng);
        Ok(())
    }

    fn level_volume(&self, z: F) -> Option<F> {
        Some(self.arc.level_volume(z))
    }
}

/// `pi max{cos(2 pi (x - theta)), 0}` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BellUnit<F> {
    arc: WrappedCosine<F>,
}

pub fn builtin_bell_unit<F: Real>(theta: F) -> Result<BellUnit<F>> {
    if !(theta >= F::zero() && theta < F::one()) {
        return Err(Error::domain("phase must lie in [0, 1)"));
    }
    Ok(BellUnit { arc: WrappedCosine::new(theta, F::two_pi(), F::pi(), F::one()) })
}

impl<F: Real> BellUnit<F> {
    /// Whether the support arc wraps around the ends of `[0, 1]`.
    pub fn wraps(&self) -> bool {
        self.arc.wraps()
    }

    /// The support arc as closed subintervals of `[0, 1]` (two when wrapped).
    pub fn support_pieces(&self) -> Vec<(F, F)> {
        self.arc.pieces().to_vec()
    }

    pub fn phase(&self) -> F {
        self.arc.peak
    }

    /// Probability mass of `[lo, hi]` (closed form).
    pub fn interval_mass(&self, lo: F, hi: F) -> F {
        let s = |x: F| {
            let d = (self.arc.scale * (x - self.arc.peak)).max(-F::pi() * F::half()).min(F::pi() * F::half());
            d.sin()
        };
        ((s(hi) - s(lo)) * F::half()).max(F::zero())
    }
}

impl<F: Real> Density<F> for BellUnit<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[F]) -> F {
        assert_eq!(x.len(), 1);
        self.arc.value(x[0])
    }

    fn sup(&self) -> F {
        F::pi()
    }

    fn support_box(&self) -> AxisBox<F> {
        self.arc.support_box()
    }

    fn cube_inf(&self, b: &AxisBox<F>) -> F {
        self.arc.cube_inf(b.lower()[0], b.upper()[0])
    }

    fn cube_sup(&self, b: &AxisBox<F>) -> F {
        self.arc.cube_sup(b.lower()[0], b.upper()[0])
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [F]) -> Result<()> {
        assert_eq!(out.len(), 1);
        out[0] = self.arc.sample(rng);
        Ok(())
    }

    fn level_volume(&self, z: F) -> Option<F> {
        Some(self.arc.level_volume(z))
    }
}

// ---------------------------------------------------------------------------
// Uniform density over a region.

pub struct UniformOn<F> {
    region: Arc<dyn Region<F>>,
    volume: F,
    bounding_box: AxisBox<F>,
}

pub fn builtin_uniform_on<F: Real>(region: Arc<dyn Region<F>>) -> Result<UniformOn<F>> {
    let v = match region.volume_hint() {
        Some(v) => v,
        None => {
            let res = region.bounding_box().max_width() / F::of(512.0);
            volume(region.as_ref(), res)?.value
        }
    };
    if !(v > F::zero()) || !v.is_finite() {
        return Err(Error::BadVolume);
    }
    let bounding_box = region.bounding_box();
    Ok(UniformOn { region, volume: v, bounding_box })
}

impl<F: Real> UniformOn<F> {
    pub fn region(&self) -> &dyn Region<F> {
        self.region.as_ref()
    }

    pub fn region_volume(&self) -> F {
        self.volume
    }
}

impl<F: Real> Density<F> for UniformOn<F> {
    fn dim(&self) -> usize {
        self.bounding_box.dim()
    }

    fn eval(&self, x: &[F]) -> F {
        if self.region.contains(x) {
            self.volume.recip()
        } else {
            F::zero()
        }
    }

    fn sup(&self) -> F {
        self.volume.recip()
    }

    fn support_box(&self) -> AxisBox<F> {
        self.bounding_box.clone()
    }

    fn cube_inf(&self, b: &AxisBox<F>) -> F {
        // Only a containment certificate lifts the infimum off zero; zero is
        // always sound, including for regions that cannot classify.
        match self.region.classify_cube(b) {
            Ok(CubeClass::Inside) => self.volume.recip(),
            _ => F::zero(),
        }
    }

    fn cube_sup(&self, b: &AxisBox<F>) -> F {
        match self.region.classify_cube(b) {
            Ok(CubeClass::Outside) => F::zero(),
            _ => self.volume.recip(),
        }
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [F]) -> Result<()> {
        let n = self.dim();
        assert_eq!(out.len(), n);
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            if attempts > 1_000_000 {
                return Err(Error::SamplingFailure);
            }
            for i in 0..n {
                out[i] = uniform_in(self.bounding_box.lower()[i], self.bounding_box.upper()[i], rng);
            }
            if self.region.contains(out) {
                return Ok(());
            }
        }
    }

    fn level_volume(&self, z: F) -> Option<F> {
        Some(if z <= self.volume.recip() { self.volume } else { F::zero() })
    }
}

// ---------------------------------------------------------------------------
// Superlevel sets as regions.

/// The superlevel set `{x : f(x) >= z}`, viewed as a region. Classification
/// goes through the density's cube bounds: exact bounds give exact classes.
pub struct SuperlevelRegion<'a, F, D: ?Sized = dyn Density<F>> {
    density: &'a D,
    level: F,
}

impl<'a, F: Real, D: Density<F> + ?Sized> SuperlevelRegion<'a, F, D> {
    pub fn new(density: &'a D, level: F) -> Self {
        debug_assert!(level > F::zero(), "superlevel threshold must be positive");
        Self { density, level }
    }
}

impl<F: Real, D: Density<F> + ?Sized> Region<F> for SuperlevelRegion<'_, F, D> {
    fn dim(&self) -> usize {
        self.density.dim()
    }

    fn bounding_box(&self) -> AxisBox<F> {
        self.density.support_box()
    }

    fn contains(&self, x: &[F]) -> bool {
        self.density.eval(x) >= self.level
    }

    fn classify_cube(&self, b: &AxisBox<F>) -> Result<CubeClass> {
        if self.density.cube_inf(b) >= self.level {
            return Ok(CubeClass::Inside);
        }
        if self.density.cube_sup(b) < self.level {
            return Ok(CubeClass::Outside);
        }
        Ok(CubeClass::Straddles)
    }

    fn volume_hint(&self) -> Option<F> {
        self.density.level_volume(self.level)
    }
}

// ---------------------------------------------------------------------------
// Level-variable density and entropy.

/// Tabulated density of the level variable `Z` with `f_Z(z)` equal to the
/// superlevel-set volume at `z`, plus its differential entropy in bits.
#[derive(Debug, Clone)]
pub struct LevelDensity<F> {
    /// Midpoint grid over `(0, sup f]`.
    pub z: Vec<F>,
    /// Superlevel-set volumes at those levels.
    pub f_z: Vec<F>,
    /// `h(Z) = -int f_Z log2 f_Z`.
    pub entropy: F,
    /// Step-halving estimate of the quadrature error in `entropy`.
    pub error_estimate: F,
    /// `int f_Z dz`; must come out as 1 (layer-cake identity).
    pub mass: F,
}

pub fn level_density_and_entropy<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    z_steps: usize,
) -> Result<LevelDensity<F>> {
    if z_steps < 16 {
        return Err(Error::InvalidParameter("need at least 16 level steps".into()));
    }
    let sup = f.sup();
    if !sup.is_finite() || sup <= F::zero() {
        return Err(Error::domain("level tabulation requires a finite positive sup"));
    }
    let level_volume = |z: F| -> Result<F> {
        if let Some(v) = f.level_volume(z) {
            return Ok(v);
        }
        let region = SuperlevelRegion::new(f, z);
        let res = f.support_box().max_width() / F::of(512.0);
        Ok(volume(&region, res)?.value)
    };
    let pass = |steps: usize| -> Result<(Vec<F>, Vec<F>, F, F)> {
        let h = sup / F::from_usize(steps).unwrap();
        let mut z = Vec::with_capacity(steps);
        let mut f_z = Vec::with_capacity(steps);
        let mut mass = F::zero();
        let mut entropy = F::zero();
        for j in 0..steps {
            let zj = h * (F::from_usize(j).unwrap() + F::half());
            let v = level_volume(zj)?;
            if !v.is_finite() || v < F::zero() {
                return Err(Error::QuadratureFailure(format!(
                    "superlevel volume at z={} is not finite",
                    zj.as_f64()
                )));
            }
            mass += v * h;
            if v > F::zero() {
                entropy -= v * v.log2() * h;
            }
            z.push(zj);
            f_z.push(v);
        }
        Ok((z, f_z, mass, entropy))
    };

    let (z, f_z, mass, entropy) = pass(z_steps)?;
    let (_, _, _, coarse) = pass(z_steps / 2)?;
    if (mass - F::one()).abs() > F::of(1e-3) {
        return Err(Error::QuadratureFailure(format!(
            "level density integrates to {} instead of 1",
            mass.as_f64()
        )));
    }
    Ok(LevelDensity {
        z,
        f_z,
        entropy,
        error_estimate: (entropy - coarse).abs(),
        mass,
    })
}

//! Regions of `R^n` and the geometric functionals the encoder needs:
//! conservative cube classification, volume estimation, Minkowski erosion by
//! scaled cubes, and the erosion-entropy integral.
//!
//! Classification must never lie: `Inside`/`Outside` are certificates, and a
//! region that cannot certify a cube returns `Straddles` (or an error when no
//! sound procedure exists at all). Everything downstream — encoding, mass
//! accounting, the length bounds — leans on that contract.

use crate::real::Real;
use crate::{Error, Estimate, Result};
use rand::{Rng, RngCore};
use smallvec::SmallVec;

/// Dimensions above this are rejected outright; corner enumeration is 2^n.
pub const MAX_DIM: usize = 24;

/// Exact-cover dimension cap for the ellipsoid outside test (3^n patterns).
const ELLIPSOID_EXACT_DIM: usize = 8;

/// How a closed axis-aligned box sits relative to a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubeClass {
    /// Every point of the box belongs to the region.
    Inside,
    /// The box and the region share at most a measure-zero set.
    Outside,
    /// Neither containment could be certified.
    Straddles,
}

/// Closed axis-aligned box `[lower_1, upper_1] x ... x [lower_n, upper_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox<F> {
    lower: SmallVec<[F; 4]>,
    upper: SmallVec<[F; 4]>,
}

impl<F: Real> AxisBox<F> {
    pub fn new(lower: &[F], upper: &[F]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidParameter(format!(
                "box bounds disagree on dimension: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() || lower.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "box dimension must be 1..={MAX_DIM}, got {}",
                lower.len()
            )));
        }
        for (&lo, &hi) in lower.iter().zip(upper) {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidParameter(
                    "box bounds must be finite with lower <= upper".into(),
                ));
            }
        }
        Ok(Self { lower: SmallVec::from_slice(lower), upper: SmallVec::from_slice(upper) })
    }

    pub fn unit_cube(n: usize) -> Self {
        let lower = vec![F::zero(); n];
        let upper = vec![F::one(); n];
        Self::new(&lower, &upper).expect("unit cube dimensions are valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[F] {
        &self.lower
    }

    pub fn upper(&self) -> &[F] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> F {
        self.upper[i] - self.lower[i]
    }

    pub fn max_width(&self) -> F {
        let mut w = F::zero();
        for i in 0..self.dim() {
            w = w.max(self.width(i));
        }
        w
    }

    pub fn min_width(&self) -> F {
        let mut w = F::infinity();
        for i in 0..self.dim() {
            w = w.min(self.width(i));
        }
        w
    }

    pub fn volume(&self) -> F {
        let mut v = F::one();
        for i in 0..self.dim() {
            v = v * self.width(i);
        }
        v
    }

    /// Closed-box membership.
    pub fn contains_point(&self, x: &[F]) -> bool {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    /// Visits all 2^n corners, reusing one scratch buffer.
    pub(crate) fn for_each_corner(&self, mut visit: impl FnMut(&[F])) {
        let n = self.dim();
        let mut x: SmallVec<[F; 4]> = SmallVec::from_slice(&self.lower);
        for mask in 0u32..(1u32 << n) {
            for i in 0..n {
                x[i] = if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] };
            }
            visit(&x);
        }
    }

    /// The box grown by `s` along every upper face: `[lo, hi + s]`.
    pub(crate) fn inflated(&self, s: F) -> Self {
        let mut out = self.clone();
        for hi in out.upper.iter_mut() {
            *hi = *hi + s;
        }
        out
    }

    /// The box translated by `t` along every axis for which `mask` has a bit.
    pub(crate) fn translated_by_mask(&self, t: F, mask: u32) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            if mask >> i & 1 == 1 {
                out.lower[i] = out.lower[i] + t;
                out.upper[i] = out.upper[i] + t;
            }
        }
        out
    }

    /// Pushes the 2^n children obtained by bisecting every axis.
    pub(crate) fn bisect_into(&self, out: &mut Vec<AxisBox<F>>) {
        let n = self.dim();
        let mut mid: SmallVec<[F; 4]> = SmallVec::with_capacity(n);
        for i in 0..n {
            mid.push((self.lower[i] + self.upper[i]) * F::half());
        }
        for mask in 0u32..(1u32 << n) {
            let mut child = self.clone();
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    child.lower[i] = mid[i];
                } else {
                    child.upper[i] = mid[i];
                }
            }
            out.push(child);
        }
    }
}

/// A measurable subset of `R^n` the pipeline can encode over.
///
/// `classify_cube` is the load-bearing method: it may be conservative
/// (returning `Straddles` when unsure) but must never claim `Inside` or
/// `Outside` falsely.
pub trait Region<F: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// A box guaranteed to contain the region.
    fn bounding_box(&self) -> AxisBox<F>;

    /// Pointwise membership. Must be total on all of `R^n`.
    fn contains(&self, x: &[F]) -> bool;

    fn classify_cube(&self, b: &AxisBox<F>) -> Result<CubeClass>;

    /// Exact volume when one is known in closed form.
    fn volume_hint(&self) -> Option<F> {
        None
    }

    /// Whether every axis-parallel line meets the region in an interval.
    /// Declaring this truthfully lets corner probes certify containment.
    fn orthogonally_convex(&self) -> bool {
        false
    }

    /// Volume of the erosion `{x : x + [0,s]^n subset of region}`.
    fn eroded_volume(&self, s: F) -> Result<F> {
        eroded_volume_by_classification(self, s)
    }
}

fn check_dims<F: Real>(region_dim: usize, b: &AxisBox<F>) -> Result<()> {
    if region_dim != b.dim() {
        return Err(Error::domain(format!(
            "cube dimension {} does not match region dimension {}",
            b.dim(),
            region_dim
        )));
    }
    Ok(())
}

impl<F: Real> Region<F> for AxisBox<F> {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn bounding_box(&self) -> AxisBox<F> {
        self.clone()
    }

    fn contains(&self, x: &[F]) -> bool {
        self.contains_point(x)
    }

    fn classify_cube(&self, b: &AxisBox<F>) -> Result<CubeClass> {
        check_dims(Region::dim(self), b)?;
        let mut inside = true;
        let mut outside = false;
        for i in 0..self.dim() {
            inside &= b.lower[i] >= self.lower[i] && b.upper[i] <= self.upper[i];
            outside |= b.upper[i] <= self.lower[i] || b.lower[i] >= self.upper[i];
        }
        Ok(if outside {
            CubeClass::Outside
        } else if inside {
            CubeClass::Inside
        } else {
            CubeClass::Straddles
        })
    }

    fn volume_hint(&self) -> Option<F> {
        Some(self.volume())
    }

    fn orthogonally_convex(&self) -> bool {
        true
    }

    fn eroded_volume(&self, s: F) -> Result<F> {
        check_erosion_scale(s)?;
        let mut v = F::one();
        for i in 0..self.dim() {
            v = v * (self.width(i) - s).max(F::zero());
        }
        Ok(v)
    }
}

/// Open ellipsoid `{x : x^T K x < 1}` for symmetric positive-definite `K`.
#[derive(Debug, Clone)]
pub struct Ellipsoid<F> {
    n: usize,
    k: Vec<F>,
    half_widths: Vec<F>,
    volume: F,
}

impl<F: Real> Ellipsoid<F> {
    /// `entries` is the row-major `n x n` quadratic form.
    pub fn new(n: usize, entries: &[F]) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid dimension must be 1..={MAX_DIM}, got {n}"
            )));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "quadratic form needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for &e in entries {
            if !e.is_finite() {
                return Err(Error::InvalidParameter("quadratic form must be finite".into()));
            }
        }
        let tol = F::of(1e-9);
        for i in 0..n {
            for j in 0..i {
                let a = entries[i * n + j];
                let b = entries[j * n + i];
                if (a - b).abs() > tol * (F::one() + a.abs()) {
                    return Err(Error::InvalidParameter("quadratic form must be symmetric".into()));
                }
            }
        }

        // Cholesky: proves positive-definiteness and yields det and K^{-1}.
        let mut l = vec![F::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = entries[i * n + j];
                for t in 0..j {
                    sum = sum - l[i * n + t] * l[j * n + t];
                }
                if i == j {
                    if sum <= F::of(1e-300) {
                        return Err(Error::InvalidParameter(
                            "quadratic form must be positive definite".into(),
                        ));
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        let mut det = F::one();
        for i in 0..n {
            det = det * l[i * n + i] * l[i * n + i];
        }

        // (K^{-1})_ii = |L^{-1} e_i|^2 gives the support extents.
        let mut half_widths = vec![F::zero(); n];
        for i in 0..n {
            let mut y = vec![F::zero(); n];
            for r in i..n {
                let mut sum = if r == i { F::one() } else { F::zero() };
                for t in i..r {
                    sum = sum - l[r * n + t] * y[t];
                }
                y[r] = sum / l[r * n + r];
            }
            let mut sq = F::zero();
            for &yi in &y {
                sq += yi * yi;
            }
            half_widths[i] = sq.sqrt();
        }

        let mut ball = F::one(); // unit-ball volume via v_n = v_{n-2} * 2*pi/n
        if n % 2 == 1 {
            ball = F::two();
        }
        let mut m = if n % 2 == 1 { 1 } else { 0 };
        while m < n {
            m += 2;
            ball = ball * F::two_pi() / F::from_usize(m).unwrap();
        }
        let volume = ball / det.sqrt();

        Ok(Self { n, k: entries.to_vec(), half_widths, volume })
    }

    fn q(&self, x: &[F]) -> F {
        let n = self.n;
        let mut acc = F::zero();
        for i in 0..n {
            let mut row = F::zero();
            for j in 0..n {
                row += self.k[i * n + j] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    fn corner_max(&self, b: &AxisBox<F>) -> F {
        let mut m = F::neg_infinity();
        b.for_each_corner(|x| {
            let v = self.q(x);
            if v > m {
                m = v;
            }
        });
        m
    }

    /// Exact minimum of the quadratic form over a closed box, by enumerating
    /// all face patterns (each coordinate clamped low, clamped high, or free)
    /// and solving the free coordinates from the stationarity equations.
    fn box_min(&self, b: &AxisBox<F>) -> F {
        let n = self.n;
        let mut best = F::infinity();
        let patterns = 3usize.pow(n as u32);
        let mut x: SmallVec<[F; 4]> = SmallVec::from_slice(b.lower());
        let mut free: SmallVec<[usize; 4]> = SmallVec::new();
        for code in 0..patterns {
            free.clear();
            let mut c = code;
            for i in 0..n {
                match c % 3 {
                    0 => x[i] = b.lower[i],
                    1 => x[i] = b.upper[i],
                    _ => free.push(i),
                }
                c /= 3;
            }
            let m = free.len();
            if m > 0 {
                let mut a: SmallVec<[F; 16]> = SmallVec::from_elem(F::zero(), m * m);
                let mut rhs: SmallVec<[F; 4]> = SmallVec::from_elem(F::zero(), m);
                for (r, &fr) in free.iter().enumerate() {
                    for (cidx, &fc) in free.iter().enumerate() {
                        a[r * m + cidx] = self.k[fr * n + fc];
                    }
                    let mut s = F::zero();
                    for j in 0..n {
                        if !free.contains(&j) {
                            s += self.k[fr * n + j] * x[j];
                        }
                    }
                    rhs[r] = -s;
                }
                if !solve_dense(&mut a, &mut rhs, m) {
                    continue;
                }
                let mut feasible = true;
                for (r, &fr) in free.iter().enumerate() {
                    if rhs[r] < b.lower[fr] || rhs[r] > b.upper[fr] {
                        feasible = false;
                        break;
                    }
                    x[fr] = rhs[r];
                }
                if !feasible {
                    continue;
                }
            }
            let v = self.q(&x);
            if v < best {
                best = v;
            }
        }
        best
    }
}

/// Row-major Gaussian elimination with partial pivoting; solution lands in `rhs`.
fn solve_dense<F: Real>(a: &mut [F], rhs: &mut [F], m: usize) -> bool {
    for col in 0..m {
        let mut p = col;
        for r in col + 1..m {
            if a[r * m + col].abs() > a[p * m + col].abs() {
                p = r;
            }
        }
        if a[p * m + col].abs() <= F::of(1e-300) {
            return false;
        }
        if p != col {
            for c in 0..m {
                a.swap(p * m + c, col * m + c);
            }
            rhs.swap(p, col);
        }
        let piv = a[col * m + col];
        for r in col + 1..m {
            let f = a[r * m + col] / piv;
            if f != F::zero() {
                for c in col..m {
                    a[r * m + c] = a[r * m + c] - f * a[col * m + c];
                }
                rhs[r] = rhs[r] - f * rhs[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut s = rhs[col];
        for c in col + 1..m {
            s = s - a[col * m + c] * rhs[c];
        }
        rhs[col] = s / a[col * m + col];
    }
    true
}

impl<F: Real> Region<F> for Ellipsoid<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn bounding_box(&self) -> AxisBox<F> {
        let lower: Vec<F> = self.half_widths.iter().map(|&w| -w).collect();
        AxisBox::new(&lower, &self.half_widths).expect("support extents are finite")
    }

    fn contains(&self, x: &[F]) -> bool {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        self.q(x) < F::one()
    }

    fn classify_cube(&self, b: &AxisBox<F>) -> Result<CubeClass> {
        check_dims(self.n, b)?;
        // Slab reject: the region lies strictly inside +-half_widths.
        for i in 0..self.n {
            if b.lower[i] >= self.half_widths[i] || b.upper[i] <= -self.half_widths[i] {
                return Ok(CubeClass::Outside);
            }
        }
        // The form is convex, so its box maximum sits at a corner.
        if self.corner_max(b) < F::one() {
            return Ok(CubeClass::Inside);
        }
        if self.n <= ELLIPSOID_EXACT_DIM && self.box_min(b) >= F::one() {
            return Ok(CubeClass::Outside);
        }
        Ok(CubeClass::Straddles)
    }

    fn volume_hint(&self) -> Option<F> {
        Some(self.volume)
    }

    fn orthogonally_convex(&self) -> bool {
        true
    }

    fn eroded_volume(&self, s: F) -> Result<F> {
        check_erosion_scale(s)?;
        match self.n {
            1 => Ok((F::two() * self.half_widths[0] - s).max(F::zero())),
            2 => {
                // Slice quadrature. Concavity of the upper boundary (and
                // convexity of the lower) makes the eroded slice at x exactly
                // the endpoint intersection, so only the x-integral is
                // approximate.
                let (k00, k01, k11) = (self.k[0], self.k[1], self.k[3]);
                let det = k00 * k11 - k01 * k01;
                let xmax = (k11 / det).sqrt();
                let a = -xmax;
                let b = xmax - s;
                if b <= a {
                    return Ok(F::zero());
                }
                let slice = |x: F| -> Option<(F, F)> {
                    let disc = k11 - det * x * x;
                    if disc <= F::zero() {
                        return None;
                    }
                    let root = disc.sqrt();
                    Some(((-k01 * x - root) / k11, (-k01 * x + root) / k11))
                };
                let m = 4096;
                let h = (b - a) / F::from_usize(m).unwrap();
                let mut acc = F::zero();
                for i in 0..m {
                    let x = a + h * (F::from_usize(i).unwrap() + F::half());
                    if let (Some((lo0, hi0)), Some((lo1, hi1))) = (slice(x), slice(x + s)) {
                        let lo = lo0.max(lo1);
                        let hi = hi0.min(hi1) - s;
                        if hi > lo {
                            acc += hi - lo;
                        }
                    }
                }
                Ok(acc * h)
            }
            _ => eroded_volume_by_classification(self, s),
        }
    }
}

pub type Membership<F> = Box<dyn Fn(&[F]) -> bool + Send + Sync>;
pub type CubeClassifier<F> = Box<dyn Fn(&AxisBox<F>) -> CubeClass + Send + Sync>;

/// A region given by a membership oracle, with optional upgrades: an exact
/// cube classifier, an orthogonal-convexity declaration (enables corner
/// certification of containment), and a known volume.
pub struct GenericRegion<F> {
    bounding_box: AxisBox<F>,
    member: Membership<F>,
    classifier: Option<CubeClassifier<F>>,
    ortho_convex: bool,
    volume_hint: Option<F>,
}

impl<F: Real> GenericRegion<F> {
    pub fn new(bounding_box: AxisBox<F>, member: Membership<F>) -> Self {
        Self { bounding_box, member, classifier: None, ortho_convex: false, volume_hint: None }
    }

    /// Attach a sound classifier; it is trusted unconditionally.
    pub fn with_classifier(mut self, classifier: CubeClassifier<F>) -> Self {
        self.classifier = Some(classifier);
        self
    }

    /// Caller asserts every axis-parallel line meets the set in an interval.
    pub fn declare_orthogonally_convex(mut self) -> Self {
        self.ortho_convex = true;
        self
    }

    pub fn with_volume_hint(mut self, volume: F) -> Self {
        self.volume_hint = Some(volume);
        self
    }
}

impl<F: Real> Region<F> for GenericRegion<F> {
    fn dim(&self) -> usize {
        self.bounding_box.dim()
    }

    fn bounding_box(&self) -> AxisBox<F> {
        self.bounding_box.clone()
    }

    fn contains(&self, x: &[F]) -> bool {
        (self.member)(x)
    }

    fn classify_cube(&self, b: &AxisBox<F>) -> Result<CubeClass> {
        check_dims(self.dim(), b)?;
        if let Some(cls) = &self.classifier {
            return Ok(cls(b));
        }
        if self.ortho_convex {
            // All corners in an orthogonally convex set certify the box, by
            // induction on the dimension (edges, then faces, then the box).
            // Membership probes can never certify the complement, so the
            // negative answer stays conservative.
            let mut all = true;
            b.for_each_corner(|x| {
                if all && !(self.member)(x) {
                    all = false;
                }
            });
            return Ok(if all { CubeClass::Inside } else { CubeClass::Straddles });
        }
        Err(Error::UnsoundClassification(
            "region has no classifier and was not declared orthogonally convex".into(),
        ))
    }

    fn volume_hint(&self) -> Option<F> {
        self.volume_hint
    }

    fn orthogonally_convex(&self) -> bool {
        self.ortho_convex
    }
}

/// Volume bracket from dyadic refinement: `lower` counts certified-inside
/// mass, `upper` adds every unresolved cell, `value` splits the difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate<F> {
    pub value: F,
    pub lower: F,
    pub upper: F,
}

/// Refines straddling cells until `max_width <= target`, returning
/// (certified-inside volume, unresolved volume).
fn refine<F: Real>(
    start: AxisBox<F>,
    classify: &mut dyn FnMut(&AxisBox<F>) -> Result<CubeClass>,
    target: F,
) -> Result<(F, F)> {
    let mut inside = F::zero();
    let mut straddle = F::zero();
    let mut stack = vec![start];
    while let Some(b) = stack.pop() {
        match classify(&b)? {
            CubeClass::Inside => inside += b.volume(),
            CubeClass::Outside => {}
            CubeClass::Straddles => {
                if b.max_width() <= target {
                    straddle += b.volume();
                } else {
                    b.bisect_into(&mut stack);
                }
            }
        }
    }
    Ok((inside, straddle))
}

/// Volume of a region, exact when the region knows it, otherwise bracketed by
/// dyadic refinement down to cells of width `resolution`.
pub fn volume<F: Real, R: Region<F> + ?Sized>(r: &R, resolution: F) -> Result<VolumeEstimate<F>> {
    if let Some(v) = r.volume_hint() {
        return Ok(VolumeEstimate { value: v, lower: v, upper: v });
    }
    if !resolution.is_finite() || resolution <= F::zero() {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let (inside, straddle) =
        refine(r.bounding_box(), &mut |b| r.classify_cube(b), resolution)?;
    Ok(VolumeEstimate {
        value: inside + straddle * F::half(),
        lower: inside,
        upper: inside + straddle,
    })
}

fn check_erosion_scale<F: Real>(s: F) -> Result<()> {
    if !s.is_finite() || s <= F::zero() {
        return Err(Error::InvalidParameter("erosion scale must be positive".into()));
    }
    Ok(())
}

/// Erosion volume through the classifier: a cell lies inside the erosion iff
/// its inflation by `s` lies inside the region, and lies outside whenever
/// some corner translate of it misses the region entirely. Unresolved floor
/// cells are settled by an exact point test at their center.
fn eroded_volume_by_classification<F: Real, R: Region<F> + ?Sized>(r: &R, s: F) -> Result<F> {
    check_erosion_scale(s)?;
    let bb = r.bounding_box();
    if s >= bb.min_width() {
        return Ok(F::zero());
    }
    let n = bb.dim();
    let target = bb.max_width() / F::of(1024.0);
    let mut acc = F::zero();
    let mut stack = vec![bb];
    'cells: while let Some(b) = stack.pop() {
        match r.classify_cube(&b.inflated(s))? {
            CubeClass::Inside => {
                acc += b.volume();
                continue;
            }
            CubeClass::Outside => continue,
            CubeClass::Straddles => {}
        }
        for mask in 0u32..(1u32 << n) {
            if r.classify_cube(&b.translated_by_mask(s, mask))? == CubeClass::Outside {
                continue 'cells;
            }
        }
        if b.max_width() <= target {
            // x is in the erosion iff [x, x+s]^n is inside; exact point test.
            let mut center: SmallVec<[F; 4]> = SmallVec::with_capacity(n);
            let mut outer: SmallVec<[F; 4]> = SmallVec::with_capacity(n);
            for i in 0..n {
                let c = (b.lower[i] + b.upper[i]) * F::half();
                center.push(c);
                outer.push(c + s);
            }
            let probe = AxisBox::new(&center, &outer)?;
            if r.classify_cube(&probe)? == CubeClass::Inside {
                acc += b.volume();
            }
        } else {
            b.bisect_into(&mut stack);
        }
    }
    Ok(acc)
}

/// The erosion-entropy integral with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErosionEntropy<F> {
    pub value: F,
    pub error_estimate: F,
}

pub(crate) fn region_volume_for_normalizing<F: Real, R: Region<F> + ?Sized>(r: &R) -> Result<F> {
    let v = match r.volume_hint() {
        Some(v) => v,
        None => {
            let res = r.bounding_box().max_width() / F::of(512.0);
            volume(r, res)?.value
        }
    };
    if !(v > F::zero()) || !v.is_finite() {
        return Err(Error::BadVolume);
    }
    Ok(v)
}

/// Integrates `indicator(t >= 0) - V(erosion by 2^-t)/V` over `[t_lo, t_hi]`
/// by composite trapezoid, splitting at the indicator jump at `t = 0`.
/// The error estimate comes from comparing against half the step count.
pub fn erosion_entropy<F: Real, R: Region<F> + ?Sized>(
    r: &R,
    t_lo: F,
    t_hi: F,
    steps: usize,
) -> Result<ErosionEntropy<F>> {
    if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(Error::InvalidParameter("need finite t_lo < t_hi".into()));
    }
    if steps < 16 {
        return Err(Error::InvalidParameter("need at least 16 quadrature steps".into()));
    }
    let v = region_volume_for_normalizing(r)?;

    let g = |t: F, indicator: F| -> Result<F> {
        let s = (-t).exp2();
        Ok(indicator - r.eroded_volume(s)? / v)
    };
    let trapezoid = |a: F, b: F, m: usize, indicator: F| -> Result<F> {
        let h = (b - a) / F::from_usize(m).unwrap();
        let mut acc = (g(a, indicator)? + g(b, indicator)?) * F::half();
        for i in 1..m {
            acc += g(a + h * F::from_usize(i).unwrap(), indicator)?;
        }
        Ok(acc * h)
    };
    let integrate = |steps: usize| -> Result<F> {
        if t_lo >= F::zero() {
            trapezoid(t_lo, t_hi, steps, F::one())
        } else if t_hi <= F::zero() {
            trapezoid(t_lo, t_hi, steps, F::zero())
        } else {
            let span = (t_hi - t_lo).as_f64();
            let m_neg = ((steps as f64) * (-t_lo).as_f64() / span).round() as usize;
            let m_neg = m_neg.clamp(8, steps - 8);
            let m_pos = steps - m_neg;
            let neg = trapezoid(t_lo, F::zero(), m_neg, F::zero())?;
            let pos = trapezoid(F::zero(), t_hi, m_pos, F::one())?;
            Ok(neg + pos)
        }
    };

    let full = integrate(steps)?;
    let halved = integrate(steps / 2)?;
    Ok(ErosionEntropy { value: full, error_estimate: (full - halved).abs() })
}

/// Default window: starts where the eroding cube still swallows the region
/// (`2^-t` above the largest box width) and stops at `t = 30`, where the
/// erosion deficit of any nondegenerate region is negligible.
pub fn erosion_entropy_default<F: Real, R: Region<F> + ?Sized>(r: &R) -> Result<ErosionEntropy<F>> {
    let t_lo = -r.bounding_box().max_width().log2() - F::two();
    erosion_entropy(r, t_lo, F::of(30.0), 4096)
}

/// Monte-Carlo mean of `max_i |X_i - xhat_i|` for `X` uniform on the region,
/// by rejection from the bounding box.
pub fn mean_inf_norm<F: Real, R: Region<F> + ?Sized>(
    r: &R,
    xhat: &[F],
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<Estimate<F>> {
    let n = r.dim();
    if xhat.len() != n {
        return Err(Error::domain(format!(
            "reference point dimension {} does not match region dimension {n}",
            xhat.len()
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let bb = r.bounding_box();
    let mut x: SmallVec<[F; 4]> = SmallVec::from_elem(F::zero(), n);
    let mut sum = F::zero();
    let mut sum_sq = F::zero();
    let mut accepted = 0usize;
    let mut attempts = 0u64;
    while accepted < samples {
        attempts += 1;
        if attempts >= 1_000_000 && (accepted as f64) < 1e-6 * attempts as f64 {
            return Err(Error::SamplingFailure);
        }
        for i in 0..n {
            x[i] = bb.lower[i] + bb.width(i) * F::of(rng.random::<f64>());
        }
        if !r.contains(&x) {
            continue;
        }
        accepted += 1;
        let mut norm = F::zero();
        for i in 0..n {
            norm = norm.max((x[i] - xhat[i]).abs());
        }
        sum += norm;
        sum_sq += norm * norm;
    }
    let count = F::from_usize(samples).unwrap();
    let mean = sum / count;
    let var = ((sum_sq - mean * mean * count) / (count - F::one())).max(F::zero());
    Ok(Estimate { value: mean, stderr: (var / count).sqrt() })
}

/// Both sides of the erosion-entropy/norm inequality
/// `h <= (n-1) log2 E|X|_inf - log2 V + 4n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormInequality<F> {
    pub lhs: F,
    pub rhs: F,
    pub holds: bool,
}

pub fn erosion_norm_inequality<F: Real, R: Region<F> + ?Sized>(
    r: &R,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<NormInequality<F>> {
    let n = r.dim();
    let lhs = erosion_entropy_default(r)?.value;
    let origin = vec![F::zero(); n];
    let mean = mean_inf_norm(r, &origin, samples, rng)?;
    let v = region_volume_for_normalizing(r)?;
    let n_minus_1 = F::from_usize(n - 1).unwrap();
    let rhs = n_minus_1 * mean.value.log2() - v.log2() + F::of(4.0) * F::from_usize(n).unwrap();
    // Allow for Monte-Carlo wobble in the mean-norm term when judging.
    let slack = F::of(1e-6)
        + F::of(4.0) * n_minus_1 * mean.stderr / (mean.value * F::of(std::f64::consts::LN_2));
    Ok(NormInequality { lhs, rhs, holds: lhs <= rhs + slack })
}

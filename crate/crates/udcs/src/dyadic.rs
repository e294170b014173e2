//! Dyadic cubes and the decomposition of regions and superlevel sets into
//! maximal cubes, driving both the encoders and exact length analysis.

use crate::densities::Density;
use crate::real::Real;
use crate::regions::{region_volume_for_normalizing, AxisBox, CubeClass, Region};
use crate::{Error, Result};
use smallvec::SmallVec;

/// The cube 2^{-k}([0,1]^n + v): side 2^{-k}, lower corner v * 2^{-k}.
/// `k` may be negative (sides larger than 1); `v` has one entry per axis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cube {
    pub k: i32,
    pub v: SmallVec<[i64; 2]>,
}

impl Cube {
    pub fn new(k: i32, v: &[i64]) -> Self {
        Cube {
            k,
            v: SmallVec::from_slice(v),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// The containing cube one level coarser: (k-1, floor(v/2)).
    pub fn parent(&self) -> Cube {
        Cube {
            k: self.k - 1,
            // Arithmetic shift is floor division, also for negative indices.
            v: self.v.iter().map(|&vi| vi >> 1).collect(),
        }
    }

    /// The child cube selected by one bit per axis (bit i set = upper half
    /// along axis i).
    pub(crate) fn child(&self, bits: u32) -> Cube {
        Cube {
            k: self.k + 1,
            v: self
                .v
                .iter()
                .enumerate()
                .map(|(i, &vi)| 2 * vi + ((bits >> i) & 1) as i64)
                .collect(),
        }
    }
}

impl std::fmt::Debug for Cube {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cube(k={}, v={:?})", self.k, &self.v[..])
    }
}

/// A cube together with the probability that the scheme emits it.
#[derive(Clone, Debug, PartialEq)]
pub struct MassAtom<F> {
    pub cube: Cube,
    pub mass: F,
}

/// Totals accumulated by an enumeration pass. Whatever probability was not
/// emitted as atoms — unresolved cells at the depth cap plus any mass the
/// density itself truncates away — is the residual.
#[derive(Clone, Debug)]
pub struct EnumStats<F> {
    pub emitted_mass: F,
    pub atom_count: u64,
    pub straddle_count: u64,
}

impl<F: Real> EnumStats<F> {
    pub fn residual_mass(&self) -> F {
        F::one() - self.emitted_mass
    }
}

impl<F: Real> Default for EnumStats<F> {
    fn default() -> Self {
        EnumStats {
            emitted_mass: F::zero(),
            atom_count: 0,
            straddle_count: 0,
        }
    }
}

/// The closed axis box spanned by a cube. Exact: corners are dyadic
/// rationals well inside f64 range for every depth the library uses.
pub fn cube_box<F: Real>(c: &Cube) -> AxisBox<F> {
    let side = 2f64.powi(-c.k);
    let lower: SmallVec<[F; 4]> = c.v.iter().map(|&vi| F::of(vi as f64 * side)).collect();
    let upper: SmallVec<[F; 4]> = c.v.iter().map(|&vi| F::of((vi + 1) as f64 * side)).collect();
    AxisBox::new(&lower, &upper).expect("dyadic cube is a well-formed box")
}

/// Coarsest level used when scanning a bounded set: one level above the
/// finest grid whose cells are still wider than the set, so a scan starts
/// from cells that can never be fully inside it.
fn start_level<F: Real>(bb: &AxisBox<F>) -> i32 {
    let maxw = bb.max_width().as_f64();
    (-maxw.log2()).floor() as i32 - 1
}

/// Grid index of the half-open level-k cell containing x.
fn index_at_level<F: Real>(x: &[F], k: i32) -> Cube {
    let scale = 2f64.powi(k);
    Cube {
        k,
        v: x.iter()
            .map(|xi| (xi.as_f64() * scale).floor() as i64)
            .collect(),
    }
}

/// All level-k cells whose closure meets the box. At the start level each
/// axis spans at most two cells, so this is at most 2^n cubes.
fn cells_covering<F: Real>(bb: &AxisBox<F>, k: i32) -> Vec<Cube> {
    let scale = 2f64.powi(k);
    let n = bb.dim();
    let lo: Vec<i64> = (0..n)
        .map(|i| (bb.lower()[i].as_f64() * scale).floor() as i64)
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|i| (bb.upper()[i].as_f64() * scale).floor() as i64)
        .collect();
    let mut out = Vec::new();
    let mut v: Vec<i64> = lo.clone();
    'fill: loop {
        out.push(Cube {
            k,
            v: SmallVec::from_slice(&v),
        });
        for i in 0..n {
            if v[i] < hi[i] {
                v[i] += 1;
                continue 'fill;
            }
            v[i] = lo[i];
        }
        break;
    }
    out
}

/// Whether the cube belongs to the decomposition of the region: it is
/// contained in the region but its parent is not.
pub fn in_decomposition<F: Real, R: Region<F> + ?Sized>(c: &Cube, r: &R) -> Result<bool> {
    if c.dim() != r.dim() {
        return Err(Error::domain("cube and region dimensions differ"));
    }
    if r.classify_cube(&cube_box(c))? != CubeClass::Inside {
        return Ok(false);
    }
    Ok(r.classify_cube(&cube_box(&c.parent()))? != CubeClass::Inside)
}

/// Finds the unique decomposition cube containing x by walking the nested
/// half-open cells around x from the coarsest level downward. Fails with a
/// retriable error if x sits in a cell certified outside the region, or if
/// the cells around x still straddle the boundary at `k_max` (the deepest
/// straddling cell is reported).
pub fn locate<F: Real, R: Region<F> + ?Sized>(x: &[F], r: &R, k_max: i32) -> Result<Cube> {
    if x.len() != r.dim() {
        return Err(Error::domain("point and region dimensions differ"));
    }
    // Sets narrower than the deepest grid would otherwise start below the
    // cap and skip the scan entirely.
    let k0 = start_level(&r.bounding_box()).min(k_max);
    let mut deepest = index_at_level(x, k0);
    for k in k0..=k_max {
        let c = index_at_level(x, k);
        match r.classify_cube(&cube_box(&c))? {
            // The previous iteration saw this cube's parent and did not
            // return, so the parent is not inside: c is the decomposition cube.
            CubeClass::Inside => return Ok(c),
            CubeClass::Outside => return Err(Error::PointOutsideRegion),
            CubeClass::Straddles => deepest = c,
        }
    }
    Err(Error::DepthExhausted { k_max, deepest })
}

/// Enumerates the decomposition of a region down to level `k_max`, feeding
/// each cube and its share of the uniform distribution on the region to
/// `sink`. Cells still straddling the boundary at the cap are counted, not
/// emitted; their mass is the residual.
pub fn enumerate_uniform<F: Real, R: Region<F> + ?Sized>(
    r: &R,
    k_max: i32,
    sink: &mut dyn FnMut(MassAtom<F>),
) -> Result<EnumStats<F>> {
    let volume = region_volume_for_normalizing(r)?;
    let n = r.dim() as i32;
    let bb = r.bounding_box();
    let k0 = start_level(&bb);
    let mut stats = EnumStats::default();
    let mut stack = cells_covering(&bb, k0);
    while let Some(c) = stack.pop() {
        match r.classify_cube(&cube_box(&c))? {
            CubeClass::Outside => {}
            CubeClass::Inside => {
                if c.k == k0 {
                    // Start-level cells are wider than the region on some
                    // axis, so a containment certificate here is a lie.
                    return Err(Error::UnsoundClassification(
                        "cell wider than the bounding box classified as inside".into(),
                    ));
                }
                let mass = F::of(2f64.powi(-n * c.k)) / volume;
                stats.emitted_mass = stats.emitted_mass + mass;
                stats.atom_count += 1;
                sink(MassAtom { cube: c, mass });
            }
            CubeClass::Straddles => {
                if c.k >= k_max {
                    stats.straddle_count += 1;
                } else {
                    for bits in 0..(1u32 << n) {
                        stack.push(c.child(bits));
                    }
                }
            }
        }
    }
    Ok(stats)
}

/// Enumerates the atoms of a density down to level `k_max`: cube c gets mass
/// 2^{-nk} * (inf over c - inf over parent(c)), the thickness of the slab of
/// levels whose superlevel-set decomposition contains c. Subtrees where the
/// cube bounds pinch (sup <= inf) cannot add mass below and are pruned;
/// cells at the cap whose bounds are still open are counted as straddling.
pub fn enumerate_density<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    k_max: i32,
    sink: &mut dyn FnMut(MassAtom<F>),
) -> Result<EnumStats<F>> {
    if !f.sup().is_finite() || f.sup() <= F::zero() {
        return Err(Error::domain("density needs a positive finite sup"));
    }
    let n = f.dim() as i32;
    let bb = f.support_box();
    let k0 = start_level(&bb);
    let mut stats = EnumStats::default();
    // Start cells are wider than the support box, so their parents poke out
    // of it and carry inf 0: the telescoping chain starts at zero.
    let mut stack: Vec<(Cube, F)> = cells_covering(&bb, k0)
        .into_iter()
        .map(|c| (c, F::zero()))
        .collect();
    while let Some((c, parent_inf)) = stack.pop() {
        let b = cube_box(&c);
        let inf = f.cube_inf(&b);
        let sup = f.cube_sup(&b);
        // Below this cube every inf is trapped in [inf, sup]: once the two
        // bounds meet, descendants can contribute nothing.
        if sup > inf {
            if c.k >= k_max {
                stats.straddle_count += 1;
            } else {
                for bits in 0..(1u32 << n) {
                    stack.push((c.child(bits), inf));
                }
            }
        }
        if inf > parent_inf {
            let mass = F::of(2f64.powi(-n * c.k)) * (inf - parent_inf);
            stats.emitted_mass = stats.emitted_mass + mass;
            stats.atom_count += 1;
            sink(MassAtom { cube: c, mass });
        }
    }
    Ok(stats)
}

//! One-way classical simulation of the Bell measurement correlation
//! E[Y_A Y_B] = -cos(theta_A - theta_B): Alice draws her outcome, encodes a
//! sample of the matching half-cosine density on the unit circle with the
//! bounded scheme, and Bob thresholds a decoded sample against his angle.
//! Also the expected-length phase sweep of that density family.

use crate::analysis::expected_length;
use crate::codec::{decode, encode_density, SchemeConfig, Variant};
use crate::densities::builtin_bell_unit;
use crate::entropy_codes::{BitReader, BitString};
use crate::real::Real;
use crate::{Error, Result};
use rand::RngCore;

/// One protocol message: Alice's outcome stays local; `bits` is what travels
/// (a piece-selector bit, then one bounded-scheme codeword).
#[derive(Clone, Debug)]
pub struct AliceMessage {
    pub y_a: i8,
    pub bits: BitString,
}

impl AliceMessage {
    pub fn bits_used(&self) -> usize {
        self.bits.len()
    }
}

/// Phase of the conditional density of X given y_a, as a point of [0, 1):
/// theta_A rescaled from radians, shifted by a half-turn when y_a = -1.
fn unit_phase<F: Real>(theta_a: F, y_a: i8) -> F {
    let mut p = theta_a / F::two_pi();
    if y_a < 0 {
        p = p + F::half();
    }
    let frac = p - p.floor();
    if frac >= F::one() || frac < F::zero() {
        return F::zero();
    }
    frac
}

pub fn alice_round<F: Real>(theta_a: F, rng: &mut dyn RngCore) -> Result<AliceMessage> {
    let y_a: i8 = if rand::Rng::random::<bool>(rng) { 1 } else { -1 };
    let f = builtin_bell_unit(unit_phase(theta_a, y_a))?;
    let cfg = SchemeConfig::new(Variant::Bounded, 1)?;
    let enc = encode_density(&f, &cfg, rng)?;
    // The piece bit makes the split-support message self-describing without
    // Bob knowing theta_A; it is pinned to 0 when the support is one piece.
    let piece = f.wraps() && {
        let (lo, hi) = f.support_pieces()[1];
        enc.x_internal[0] >= lo && enc.x_internal[0] <= hi
    };
    let mut bits = BitString::with_capacity(enc.bits.len() + 1);
    bits.push(piece);
    bits.extend_from(&enc.bits);
    Ok(AliceMessage { y_a, bits })
}

pub fn bob_round<F: Real>(msg: &AliceMessage, theta_b: F, rng: &mut dyn RngCore) -> Result<i8> {
    let cfg = SchemeConfig::new(Variant::Bounded, 1)?;
    let mut reader = BitReader::from_bits(&msg.bits);
    // Cube indices are absolute in [0,1], so the piece bit needs no action.
    let _piece = reader.read_bit()?;
    let dec = decode::<F>(&mut reader, &cfg, rng)?;
    let x = dec.x[0] * F::two_pi();
    let c = (x - theta_b).cos();
    // -sgn(cos), with sgn(0) resolved to +1.
    Ok(if c >= F::zero() { -1 } else { 1 })
}

#[derive(Clone, Debug)]
pub struct CorrelationResult<F> {
    pub estimate: F,
    pub stderr: F,
    pub mean_bits: F,
    pub mean_y_a: F,
    pub mean_y_b: F,
}

pub fn correlation_experiment<F: Real>(
    theta_a: F,
    theta_b: F,
    rounds: u64,
    rng: &mut dyn RngCore,
) -> Result<CorrelationResult<F>> {
    if rounds < 1 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let mut retries = 0u64;
    let mut sum_prod = 0.0f64;
    let mut sum_prod_sq = 0.0f64;
    let mut sum_bits = 0.0f64;
    let mut sum_a = 0.0f64;
    let mut sum_b = 0.0f64;
    for _ in 0..rounds {
        let msg = loop {
            match alice_round(theta_a, rng) {
                Ok(m) => break m,
                Err(e) if e.retriable() => {
                    retries += 1;
                    if retries > rounds + 1000 {
                        return Err(e);
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let y_b = bob_round(&msg, theta_b, rng)?;
        let prod = (msg.y_a as i32 * y_b as i32) as f64;
        sum_prod += prod;
        sum_prod_sq += prod * prod;
        sum_bits += msg.bits_used() as f64;
        sum_a += msg.y_a as f64;
        sum_b += y_b as f64;
    }
    let n = rounds as f64;
    let mean = sum_prod / n;
    let var = ((sum_prod_sq - sum_prod * sum_prod / n) / (n - 1.0).max(1.0)).max(0.0);
    Ok(CorrelationResult {
        estimate: F::of(mean),
        stderr: F::of((var / n).sqrt()),
        mean_bits: F::of(sum_bits / n),
        mean_y_a: F::of(sum_a / n),
        mean_y_b: F::of(sum_b / n),
    })
}

#[derive(Clone, Debug)]
pub struct SweepPoint<F> {
    pub theta: F,
    pub mean_length_lower: F,
    pub mean_length_upper: F,
}

#[derive(Clone, Debug)]
pub struct SweepResult<F> {
    pub points: Vec<SweepPoint<F>>,
    pub max_lower: F,
    pub max_upper: F,
    /// First grid phase attaining `max_lower`.
    pub argmax_theta: F,
}

/// Expected codeword length of the bounded scheme across half-cosine phases.
/// This is the plain enumerated length of the (possibly split-support)
/// density; the protocol's piece bit is accounted separately by its caller.
pub fn length_sweep<F: Real>(theta_grid: &[F], k_max: i32) -> Result<SweepResult<F>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidParameter("empty phase grid".into()));
    }
    let mut points = Vec::with_capacity(theta_grid.len());
    let mut max_lower = F::of(f64::NEG_INFINITY);
    let mut max_upper = F::of(f64::NEG_INFINITY);
    let mut argmax_theta = theta_grid[0];
    for &theta in theta_grid {
        let f = builtin_bell_unit(theta)?;
        let rep = expected_length(&f, Variant::Bounded, k_max)?;
        if rep.mean_length_lower > max_lower {
            max_lower = rep.mean_length_lower;
            argmax_theta = theta;
        }
        max_upper = max_upper.max(rep.mean_length_upper);
        points.push(SweepPoint {
            theta,
            mean_length_lower: rep.mean_length_lower,
            mean_length_upper: rep.mean_length_upper,
        });
    }
    Ok(SweepResult {
        points,
        max_lower,
        max_upper,
        argmax_theta,
    })
}

//! The encoder/decoder pair: sample a point, name the decomposition cube it
//! falls in, ship the cube over a self-delimiting bit format, and let the
//! receiver redraw a point inside that cube. Two wire variants: a signed
//! universal code for arbitrary supports, and a shorter grid-index code for
//! supports inside the unit cube.

use crate::densities::{Density, SuperlevelRegion};
use crate::dyadic::{cube_box, locate, Cube};
use crate::entropy_codes::{
    decode_delta_signed, decode_fixed, decode_gamma_plus, elias_delta_signed, elias_gamma_plus,
    fixed_binary, BitReader, BitString,
};
use crate::real::Real;
use crate::regions::{AxisBox, Region, MAX_DIM};
use crate::{Error, Result};
use rand::RngCore;
use std::io::Write;

pub const STREAM_MAGIC: &[u8; 4] = b"UDCS";
pub const STREAM_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Signed universal codes for depth and grid indices; any support.
    Unbounded,
    /// Depth-prefixed fixed-width indices; support must lie in [0,1]^n.
    Bounded,
}

impl Variant {
    pub fn tag(self) -> u8 {
        match self {
            Variant::Unbounded => 0,
            Variant::Bounded => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Variant> {
        match tag {
            0 => Ok(Variant::Unbounded),
            1 => Ok(Variant::Bounded),
            _ => Err(Error::BadHeader(format!("unknown variant tag {tag}"))),
        }
    }
}

/// Everything encoder and decoder must agree on out of band.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub variant: Variant,
    pub n: usize,
    /// Deepest level the encoder will resolve before giving up retriably.
    pub k_max: i32,
    /// Leading-zero cap handed to the universal decoders.
    pub decode_zero_cap: u32,
}

impl SchemeConfig {
    pub fn new(variant: Variant, n: usize) -> Result<SchemeConfig> {
        if n < 1 || n > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        Ok(SchemeConfig {
            variant,
            n,
            k_max: 40,
            decode_zero_cap: 64,
        })
    }
}

/// One encoder round: the wire bits, the cube they name, and the sample the
/// encoder privately used to pick that cube.
#[derive(Clone, Debug)]
pub struct Encoded<F> {
    pub bits: BitString,
    pub cube: Cube,
    pub x_internal: Vec<F>,
}

/// One decoder round: the recovered cube and a fresh point inside it.
#[derive(Clone, Debug)]
pub struct Decoded<F> {
    pub x: Vec<F>,
    pub cube: Cube,
}

/// Depth then each grid index, all as signed universal codewords.
pub fn serialize_unbounded(c: &Cube) -> BitString {
    let mut bits = elias_delta_signed(c.k as i64);
    for &vi in &c.v {
        bits.extend_from(&elias_delta_signed(vi));
    }
    bits
}

/// Depth as gamma(k+1), then each grid index as a plain k-bit field.
pub fn serialize_bounded(c: &Cube) -> Result<BitString> {
    if c.k < 0 {
        return Err(Error::domain("bounded codewords need depth k >= 0"));
    }
    let mut bits = elias_gamma_plus(c.k as u64 + 1)?;
    for &vi in &c.v {
        if vi < 0 || vi >= (1i64 << c.k) {
            return Err(Error::domain(format!(
                "grid index {vi} outside [0, 2^{})",
                c.k
            )));
        }
        bits.extend_from(&fixed_binary(vi as u64, c.k as u32)?);
    }
    Ok(bits)
}

/// Exact codeword length without materializing the bits.
pub fn codeword_length(c: &Cube, variant: Variant) -> Result<usize> {
    match variant {
        Variant::Unbounded => Ok(crate::entropy_codes::delta_signed_length(c.k as i64)
            + c.v
                .iter()
                .map(|&vi| crate::entropy_codes::delta_signed_length(vi))
                .sum::<usize>()),
        Variant::Bounded => {
            if c.k < 0 {
                return Err(Error::domain("bounded codewords need depth k >= 0"));
            }
            let k = c.k as usize;
            Ok(c.dim() * k + 2 * (k + 1).ilog2() as usize + 1)
        }
    }
}

/// Reads one cube off the bit source.
pub fn decode_cube(r: &mut BitReader, cfg: &SchemeConfig) -> Result<Cube> {
    match cfg.variant {
        Variant::Unbounded => {
            let k = decode_delta_signed(r, cfg.decode_zero_cap)?;
            if k < i32::MIN as i64 || k > i32::MAX as i64 {
                return Err(Error::MalformedCodeword {
                    offset: r.offset(),
                    reason: "depth exceeds representable range".into(),
                });
            }
            let mut v = Vec::with_capacity(cfg.n);
            for _ in 0..cfg.n {
                v.push(decode_delta_signed(r, cfg.decode_zero_cap)?);
            }
            Ok(Cube::new(k as i32, &v))
        }
        Variant::Bounded => {
            let k1 = decode_gamma_plus(r, cfg.decode_zero_cap)?;
            if k1 == 0 || k1 > 63 {
                return Err(Error::MalformedCodeword {
                    offset: r.offset(),
                    reason: format!("implausible depth field {k1}"),
                });
            }
            let k = (k1 - 1) as i32;
            let mut v = Vec::with_capacity(cfg.n);
            for _ in 0..cfg.n {
                v.push(decode_fixed(r, k as u32)? as i64);
            }
            Ok(Cube::new(k, &v))
        }
    }
}

/// A point uniform in the cube, one draw per coordinate.
pub fn sample_in_cube<F: Real>(c: &Cube, rng: &mut dyn RngCore) -> Vec<F> {
    let b = cube_box::<F>(c);
    (0..c.dim())
        .map(|i| {
            let (lo, hi) = (b.lower()[i], b.upper()[i]);
            lo + (hi - lo) * F::of(rand::Rng::random::<f64>(rng))
        })
        .collect()
}

/// Reads one cube and redraws a point inside it.
pub fn decode<F: Real>(
    r: &mut BitReader,
    cfg: &SchemeConfig,
    rng: &mut dyn RngCore,
) -> Result<Decoded<F>> {
    let cube = decode_cube(r, cfg)?;
    let x = sample_in_cube(&cube, rng);
    Ok(Decoded { x, cube })
}

fn serialize(c: &Cube, variant: Variant) -> Result<BitString> {
    match variant {
        Variant::Unbounded => Ok(serialize_unbounded(c)),
        Variant::Bounded => serialize_bounded(c),
    }
}

fn check_bounded_support<F: Real>(bb: &AxisBox<F>, variant: Variant) -> Result<()> {
    if variant == Variant::Bounded {
        for i in 0..bb.dim() {
            if bb.lower()[i] < F::zero() || bb.upper()[i] > F::one() {
                return Err(Error::domain(
                    "bounded variant requires support inside the unit cube",
                ));
            }
        }
    }
    Ok(())
}

/// One round of the uniform scheme: draw x uniform on the region, name its
/// decomposition cube. Depth exhaustion (the draw landed too close to the
/// boundary) is retriable.
pub fn encode_uniform<F: Real, R: Region<F> + ?Sized>(
    r: &R,
    cfg: &SchemeConfig,
    rng: &mut dyn RngCore,
) -> Result<Encoded<F>> {
    if r.dim() != cfg.n {
        return Err(Error::domain("region dimension does not match config"));
    }
    let bb = r.bounding_box();
    check_bounded_support(&bb, cfg.variant)?;
    let mut x = vec![F::zero(); cfg.n];
    let mut attempts = 0u64;
    loop {
        for (i, xi) in x.iter_mut().enumerate() {
            let (lo, hi) = (bb.lower()[i], bb.upper()[i]);
            *xi = lo + (hi - lo) * F::of(rand::Rng::random::<f64>(rng));
        }
        if r.contains(&x) {
            break;
        }
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(Error::SamplingFailure);
        }
    }
    let cube = locate(&x, r, cfg.k_max)?;
    let bits = serialize(&cube, cfg.variant)?;
    Ok(Encoded {
        bits,
        cube,
        x_internal: x,
    })
}

/// One round of the general scheme: draw x from the density and a level z
/// uniform under f(x), then name the decomposition cube of the superlevel
/// set that contains x. Depth exhaustion is retriable.
pub fn encode_density<F: Real, D: Density<F> + ?Sized>(
    f: &D,
    cfg: &SchemeConfig,
    rng: &mut dyn RngCore,
) -> Result<Encoded<F>> {
    if f.dim() != cfg.n {
        return Err(Error::domain("density dimension does not match config"));
    }
    check_bounded_support(&f.support_box(), cfg.variant)?;
    let mut x = vec![F::zero(); cfg.n];
    let mut fx = F::zero();
    for _ in 0..1024 {
        f.sample(rng, &mut x)?;
        fx = f.eval(&x);
        if fx > F::zero() {
            break;
        }
    }
    if fx <= F::zero() {
        return Err(Error::SamplingFailure);
    }
    let mut u = F::of(rand::Rng::random::<f64>(rng));
    while u <= F::zero() {
        u = F::of(rand::Rng::random::<f64>(rng));
    }
    let z = u * fx;
    let level = SuperlevelRegion::new(f, z);
    let cube = locate(&x, &level, cfg.k_max)?;
    let bits = serialize(&cube, cfg.variant)?;
    Ok(Encoded {
        bits,
        cube,
        x_internal: x,
    })
}

/// Writes the stream header up front, packs codewords MSB-first, and
/// zero-pads the final byte on `finish`.
pub struct StreamWriter<W: Write> {
    out: W,
    pending: BitString,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(mut out: W, cfg: &SchemeConfig) -> Result<StreamWriter<W>> {
        out.write_all(STREAM_MAGIC)?;
        out.write_all(&[STREAM_VERSION, cfg.variant.tag(), cfg.n as u8])?;
        Ok(StreamWriter {
            out,
            pending: BitString::new(),
        })
    }

    pub fn write_codeword(&mut self, bits: &BitString) -> Result<()> {
        self.pending.extend_from(bits);
        // Flush whole bytes as they complete; the tail stays pending so the
        // zero padding lands only at the very end.
        while self.pending.len() >= 8 {
            let bytes = self.pending.to_bytes();
            let whole = self.pending.len() / 8;
            self.out.write_all(&bytes[..whole])?;
            let mut rest = BitString::new();
            for i in whole * 8..self.pending.len() {
                rest.push(self.pending.get(i).unwrap());
            }
            self.pending = rest;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if !self.pending.is_empty() {
            self.out.write_all(&self.pending.to_bytes())?;
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Reads the header, then yields cubes until the zero padding.
pub struct StreamReader<'a> {
    reader: BitReader<'a>,
    cfg: SchemeConfig,
}

impl<'a> StreamReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<StreamReader<'a>> {
        if bytes.len() < 7 {
            return Err(Error::BadHeader("stream shorter than its header".into()));
        }
        if &bytes[..4] != STREAM_MAGIC {
            return Err(Error::BadHeader("bad magic".into()));
        }
        if bytes[4] != STREAM_VERSION {
            return Err(Error::BadHeader(format!("unknown version {}", bytes[4])));
        }
        let variant = Variant::from_tag(bytes[5])?;
        let cfg = SchemeConfig::new(variant, bytes[6] as usize)
            .map_err(|e| Error::BadHeader(e.to_string()))?;
        Ok(StreamReader {
            reader: BitReader::from_bytes(&bytes[7..]),
            cfg,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    /// Bit offset into the codeword body (header excluded).
    pub fn offset(&self) -> usize {
        self.reader.offset()
    }

    /// `None` once only zero padding remains.
    pub fn next_cube(&mut self) -> Result<Option<Cube>> {
        if self.reader.remaining() == 0 || self.reader.at_padding() {
            return Ok(None);
        }
        decode_cube(&mut self.reader, &self.cfg).map(Some)
    }
}

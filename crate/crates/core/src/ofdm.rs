//! OFDM-IM framing: bit split, subblock creation, block assembly with an
//! optional G×N interleaver, unitary IFFT and cyclic prefix.
//!
//! Three subblock variants are supported:
//! * `im`: K of N subcarriers active, `⌊log2 C(N,K)⌋` index bits plus
//!   `K log2 M` symbol bits.
//! * `gim-i`: any number of active subcarriers (0..=N); realizations are
//!   ordered by K ascending, pattern lexicographic within K, then symbol
//!   labels, and the first `2^⌊log2 (1+M)^N⌋` of them form the codebook.
//! * `gim-ii`: independent IM on the in-phase and quadrature rails, each
//!   rail carrying `√M`-PAM amplitudes scaled by `1/√2`. Rail bit order is
//!   I pattern, I symbols, Q pattern, Q symbols.
//!
//! Active subcarriers carry unit-energy symbols; there is no N/K power
//! boost.

use std::io::Write;
use std::sync::Arc;

use num_bigint::BigUint;
use num_complex::Complex;
use num_traits::{One, ToPrimitive};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bits::{self, exact_log2};
use crate::combinatorics::{self, binomial, floor_log2, ActivationPattern, IndexSelector};
use crate::constellation::{Constellation, ConstellationKind, ConstellationSpec};
use crate::error::usage;
use crate::linalg::CMatrix;
use crate::{Error, Real, Result};

/// Largest per-subblock bit count for which all realizations are cached.
const REALIZATION_CACHE_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OfdmVariant {
    #[serde(rename = "im")]
    Im,
    #[serde(rename = "gim-i")]
    GimI,
    #[serde(rename = "gim-ii")]
    GimII,
}

impl OfdmVariant {
    pub fn name(self) -> &'static str {
        match self {
            OfdmVariant::Im => "ofdm-im",
            OfdmVariant::GimI => "ofdm-gim-i",
            OfdmVariant::GimII => "ofdm-gim-ii",
        }
    }
}

/// Lookup-table file: `{"N": 4, "K": 2, "entries": [{"bits": "00", "positions": [0, 1]}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupTableDocument {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub entries: Vec<LookupEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupEntry {
    pub bits: String,
    pub positions: Vec<usize>,
}

impl LookupTableDocument {
    pub fn to_selector(&self) -> Result<IndexSelector> {
        let p1 = combinatorics::index_bits(self.n as u64, self.k as u64)?;
        let size = 1usize << p1;
        if self.entries.len() != size {
            return Err(Error::InvalidTable(format!(
                "({}, {}) table needs {size} entries, got {}",
                self.n,
                self.k,
                self.entries.len()
            )));
        }
        let mut slots: Vec<Option<ActivationPattern>> = vec![None; size];
        for e in &self.entries {
            let b = bits::parse(&e.bits).map_err(|_| Error::InvalidTable(format!("bad bits {:?}", e.bits)))?;
            if b.len() != p1 {
                return Err(Error::InvalidTable(format!("bits {:?} should have length {p1}", e.bits)));
            }
            let pattern = ActivationPattern::new(self.n, e.positions.clone())
                .map_err(|err| Error::InvalidTable(err.to_string()))?;
            let slot = &mut slots[bits::to_u64(&b) as usize];
            if slot.replace(pattern).is_some() {
                return Err(Error::InvalidTable(format!("bits {:?} listed twice", e.bits)));
            }
        }
        IndexSelector::lookup(self.n, self.k, slots.into_iter().map(Option::unwrap).collect())
    }

    /// The combinadic table for `(n, k)`, in lookup-file form.
    pub fn combinadic(n: usize, k: usize) -> Result<Self> {
        let sel = IndexSelector::combinadic(n, k)?;
        let patterns = sel.patterns().ok_or_else(|| usage("table too large to list"))?;
        Ok(Self {
            n,
            k,
            entries: patterns
                .iter()
                .enumerate()
                .map(|(i, p)| LookupEntry {
                    bits: bits::format(&bits::from_u64(i as u64, sel.p1())),
                    positions: p.positions().to_vec(),
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmImConfig {
    pub n_f: usize,
    /// Subblock size N.
    pub n: usize,
    /// Active subcarriers per subblock (ignored by `gim-i`).
    pub k: usize,
    /// Constellation order M.
    pub m: usize,
    pub variant: OfdmVariant,
    #[serde(default)]
    pub interleave: bool,
    #[serde(default)]
    pub cp_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellation: Option<ConstellationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookup_table: Option<LookupTableDocument>,
}

impl OfdmImConfig {
    pub fn im(n_f: usize, n: usize, k: usize, m: usize) -> Self {
        Self {
            n_f,
            n,
            k,
            m,
            variant: OfdmVariant::Im,
            interleave: false,
            cp_len: 0,
            constellation: None,
            lookup_table: None,
        }
    }

    pub fn with_variant(mut self, variant: OfdmVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_interleave(mut self, on: bool) -> Self {
        self.interleave = on;
        self
    }

    pub fn with_cp(mut self, cp_len: usize) -> Self {
        self.cp_len = cp_len;
        self
    }

    /// Number of subblocks G.
    pub fn g(&self) -> usize {
        self.n_f / self.n.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_f == 0 || self.n_f % self.n != 0 {
            return Err(usage(format!("N_F = {} must be a positive multiple of N = {}", self.n_f, self.n)));
        }
        if self.variant != OfdmVariant::GimI && (self.k == 0 || self.k > self.n) {
            return Err(usage(format!("need 1 <= K <= N, got K = {}, N = {}", self.k, self.n)));
        }
        if self.cp_len >= self.n_f {
            return Err(usage(format!("cp_len = {} must be below N_F = {}", self.cp_len, self.n_f)));
        }
        let log_m = exact_log2(self.m).filter(|&b| b >= 1).ok_or(Error::InvalidOrder {
            order: self.m,
            reason: "order must be a power of two >= 2",
        })?;
        if self.variant == OfdmVariant::GimII && (log_m % 2 != 0) {
            return Err(usage(format!("gim-ii needs a square QAM order, got M = {}", self.m)));
        }
        if let Some(t) = &self.lookup_table {
            if self.variant == OfdmVariant::GimI || t.n != self.n || t.k != self.k {
                return Err(usage("lookup table does not match the subblock parameters"));
            }
        }
        Ok(())
    }

    pub fn constellation_spec(&self) -> ConstellationSpec {
        match (&self.constellation, self.variant) {
            (Some(c), _) => c.clone(),
            (None, OfdmVariant::GimII) => ConstellationSpec::qam(self.m),
            (None, _) => ConstellationSpec::default_for_order(self.m),
        }
    }

    /// Bits carried by one subblock.
    pub fn subblock_bits(&self) -> Result<usize> {
        self.validate()?;
        let (n, k) = (self.n as u64, self.k as u64);
        let log_m = exact_log2(self.m).unwrap();
        Ok(match self.variant {
            OfdmVariant::Im => combinatorics::index_bits(n, k)? + self.k * log_m,
            OfdmVariant::GimI => floor_log2(&gim1_realizations(self.n, self.m)),
            // each rail separately: ⌊log2 C(N,K)⌋ + K log2 √M
            OfdmVariant::GimII => 2 * (combinatorics::index_bits(n, k)? + self.k * log_m / 2),
        })
    }

    /// Bits per frame, `m = G p`.
    pub fn frame_bits(&self) -> Result<usize> {
        Ok(self.g() * self.subblock_bits()?)
    }

    /// Index of subblock `g`, element `pos` in the transmitted frame.
    pub fn frame_position(&self, g: usize, pos: usize) -> usize {
        if self.interleave {
            g + self.g() * pos
        } else {
            g * self.n + pos
        }
    }
}

/// `Σ_K C(N,K) M^K = (1+M)^N` realizations of a variable-activation subblock.
pub fn gim1_realizations(n: usize, m: usize) -> BigUint {
    BigUint::from(m as u64 + 1).pow(n as u32)
}

/// One rail of a subblock: which positions are active and their labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RailContent {
    pub pattern: ActivationPattern,
    pub labels: Vec<usize>,
}

/// Logical content of a subblock: one rail for IM and GIM-I, two (I then Q)
/// for GIM-II.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubblockContent {
    pub rails: Vec<RailContent>,
}

/// Bits ↔ subblock mapping for one configuration.
#[derive(Debug, Clone)]
pub struct SubblockCodec<T> {
    variant: OfdmVariant,
    n: usize,
    k: usize,
    bits: usize,
    constellation: Constellation<T>,
    rail: Option<Constellation<T>>,
    selector: Option<IndexSelector>,
    realizations: Option<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> SubblockCodec<T> {
    pub fn new(config: &OfdmImConfig) -> Result<Self> {
        config.validate()?;
        let bits = config.subblock_bits()?;
        let constellation = config.constellation_spec().build::<T>()?;
        if constellation.order() != config.m {
            return Err(usage("constellation order disagrees with m"));
        }
        let rail = if config.variant == OfdmVariant::GimII {
            if constellation.kind() != ConstellationKind::Qam {
                return Err(usage("gim-ii rails are derived from square QAM"));
            }
            Some(Constellation::pam(1 << (constellation.bits_per_symbol() / 2))?)
        } else {
            None
        };
        let selector = match (config.variant, &config.lookup_table) {
            (OfdmVariant::GimI, _) => None,
            (_, Some(t)) => Some(t.to_selector()?),
            (_, None) => Some(IndexSelector::combinadic(config.n, config.k)?),
        };
        if config.variant == OfdmVariant::GimI && bits > 120 {
            return Err(Error::Capacity(format!("gim-i subblock with {bits} bits is too large")));
        }
        let mut codec = Self {
            variant: config.variant,
            n: config.n,
            k: config.k,
            bits,
            constellation,
            rail,
            selector,
            realizations: None,
        };
        if bits <= REALIZATION_CACHE_BITS {
            let all = (0..1u64 << bits)
                .map(|v| codec.build(&bits::from_u64(v, bits)))
                .collect::<Result<Vec<_>>>()?;
            codec.realizations = Some(all);
        }
        Ok(codec)
    }

    pub fn variant(&self) -> OfdmVariant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    pub fn selector(&self) -> Option<&IndexSelector> {
        self.selector.as_ref()
    }

    /// All `2^p` subblock vectors, indexed by the integer value of their bits.
    pub fn realizations(&self) -> Option<&[Vec<Complex<T>>]> {
        self.realizations.as_deref()
    }

    /// Mean energy per subcarrier over the codebook.
    pub fn energy_per_subcarrier(&self) -> T {
        let n = T::from_usize(self.n).unwrap();
        match (&self.realizations, self.variant) {
            (_, OfdmVariant::Im) | (_, OfdmVariant::GimII) => T::from_usize(self.k).unwrap() / n,
            (Some(all), OfdmVariant::GimI) => {
                let total = all.iter().flatten().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
                total / (n * T::from_usize(all.len()).unwrap())
            }
            (None, OfdmVariant::GimI) => T::one(),
        }
    }

    fn rail_scale(&self) -> T {
        T::lit(2.0).sqrt().recip()
    }

    fn symbol_labels(chunk: &[u8], count: usize, width: usize) -> Vec<usize> {
        (0..count).map(|i| bits::to_u64(&chunk[i * width..(i + 1) * width]) as usize).collect()
    }

    /// Splits `p` bits into pattern and labels.
    pub fn content_of(&self, input: &[u8]) -> Result<SubblockContent> {
        if input.len() != self.bits {
            return Err(usage(format!("subblock expects {} bits, got {}", self.bits, input.len())));
        }
        let mb = self.constellation.bits_per_symbol();
        match self.variant {
            OfdmVariant::Im => {
                let sel = self.selector.as_ref().unwrap();
                let (idx, sym) = input.split_at(sel.p1());
                let pattern = sel.select_pattern(idx)?;
                Ok(SubblockContent { rails: vec![RailContent { pattern, labels: Self::symbol_labels(sym, self.k, mb) }] })
            }
            OfdmVariant::GimII => {
                let sel = self.selector.as_ref().unwrap();
                let rb = self.rail.as_ref().unwrap().bits_per_symbol();
                let half = self.bits / 2;
                let rails = input
                    .chunks(half)
                    .map(|rail| {
                        let (idx, sym) = rail.split_at(sel.p1());
                        Ok(RailContent { pattern: sel.select_pattern(idx)?, labels: Self::symbol_labels(sym, self.k, rb) })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SubblockContent { rails })
            }
            OfdmVariant::GimI => {
                let mut r = BigUint::from_radix_be(input, 2).unwrap_or_default();
                for k in 0..=self.n {
                    let per_pattern = BigUint::from(self.constellation.order() as u64).pow(k as u32);
                    let count = binomial(self.n as u64, k as u64)? * &per_pattern;
                    if r < count {
                        let rank = &r / &per_pattern;
                        let labels_value = &r % &per_pattern;
                        let pattern = combinatorics::unrank(&rank, self.n, k)?;
                        let lv = labels_value.to_u128().unwrap_or(0);
                        let labels = (0..k).map(|i| ((lv >> ((k - 1 - i) * mb)) as usize) & ((1 << mb) - 1)).collect();
                        return Ok(SubblockContent { rails: vec![RailContent { pattern, labels }] });
                    }
                    r -= count;
                }
                unreachable!("index below (1+M)^N always lands in some K")
            }
        }
    }

    /// Frequency-domain subblock values for a content.
    pub fn values(&self, content: &SubblockContent) -> Vec<Complex<T>> {
        let mut x = vec![Complex::new(T::zero(), T::zero()); self.n];
        match self.variant {
            OfdmVariant::Im | OfdmVariant::GimI => {
                let rail = &content.rails[0];
                for (&p, &l) in rail.pattern.positions().iter().zip(&rail.labels) {
                    x[p] = self.constellation.point(l);
                }
            }
            OfdmVariant::GimII => {
                let pam = self.rail.as_ref().unwrap();
                let s = self.rail_scale();
                for (&p, &l) in content.rails[0].pattern.positions().iter().zip(&content.rails[0].labels) {
                    x[p].re = pam.point(l).re * s;
                }
                for (&p, &l) in content.rails[1].pattern.positions().iter().zip(&content.rails[1].labels) {
                    x[p].im = pam.point(l).re * s;
                }
            }
        }
        x
    }

    /// Subblock creator: bits to the N subcarrier values.
    pub fn build(&self, input: &[u8]) -> Result<Vec<Complex<T>>> {
        Ok(self.values(&self.content_of(input)?))
    }

    /// Inverse of [`content_of`](Self::content_of); `None` when the content
    /// lies outside the `2^p` codebook.
    pub fn bits_of(&self, content: &SubblockContent) -> Option<Vec<u8>> {
        let mb = self.constellation.bits_per_symbol();
        let mut out = Vec::with_capacity(self.bits);
        match self.variant {
            OfdmVariant::Im | OfdmVariant::GimII => {
                let sel = self.selector.as_ref().unwrap();
                let width = if self.variant == OfdmVariant::Im { mb } else { self.rail.as_ref().unwrap().bits_per_symbol() };
                for rail in &content.rails {
                    if rail.labels.len() != self.k {
                        return None;
                    }
                    bits::push_u64(&mut out, sel.index_of(&rail.pattern)?, sel.p1());
                    for &l in &rail.labels {
                        bits::push_u64(&mut out, l as u64, width);
                    }
                }
            }
            OfdmVariant::GimI => {
                let rail = &content.rails[0];
                let k = rail.pattern.k();
                let m = self.constellation.order() as u64;
                let mut r = BigUint::default();
                for j in 0..k {
                    r += binomial(self.n as u64, j as u64).ok()? * BigUint::from(m).pow(j as u32);
                }
                let mut lv = BigUint::default();
                for &l in &rail.labels {
                    lv = (lv << mb) + BigUint::from(l as u64);
                }
                r += combinatorics::rank(&rail.pattern) * BigUint::from(m).pow(k as u32) + lv;
                if r >= (BigUint::one() << self.bits) {
                    return None;
                }
                let digits = if r.bits() == 0 { Vec::new() } else { r.to_radix_be(2) };
                out = vec![0; self.bits - digits.len()];
                out.extend(digits);
            }
        }
        Some(out)
    }

    /// Content whose values match `x` exactly (noiseless inversion).
    pub fn content_from_values(&self, x: &[Complex<T>]) -> Option<SubblockContent> {
        let tol = T::lit(T::MATCH_TOL);
        let collect = |part: &dyn Fn(Complex<T>) -> Option<Complex<T>>, c: &Constellation<T>| -> Option<RailContent> {
            let mut pos = Vec::new();
            let mut labels = Vec::new();
            for (i, &z) in x.iter().enumerate() {
                if let Some(v) = part(z) {
                    pos.push(i);
                    labels.push(c.label_of(v)?);
                }
            }
            Some(RailContent { pattern: ActivationPattern::new(self.n, pos).ok()?, labels })
        };
        match self.variant {
            OfdmVariant::Im | OfdmVariant::GimI => {
                let rail = collect(&|z| (z.norm() > tol).then_some(z), &self.constellation)?;
                Some(SubblockContent { rails: vec![rail] })
            }
            OfdmVariant::GimII => {
                let pam = self.rail.as_ref().unwrap();
                let s = self.rail_scale().recip();
                let zero = T::zero();
                let i = collect(&|z| (z.re.abs() > tol).then(|| Complex::new(z.re * s, zero)), pam)?;
                let q = collect(&|z| (z.im.abs() > tol).then(|| Complex::new(z.im * s, zero)), pam)?;
                Some(SubblockContent { rails: vec![i, q] })
            }
        }
    }
}

/// Frequency-domain frame and its parts.
#[derive(Debug, Clone)]
pub struct OfdmImFrame<T> {
    pub subblocks: Vec<Vec<Complex<T>>>,
    pub contents: Vec<SubblockContent>,
    pub x: Vec<Complex<T>>,
}

/// Concatenates G subblocks into the N_F-long frame, interleaving if configured.
pub fn assemble_frame<T: Real>(subblocks: &[Vec<Complex<T>>], config: &OfdmImConfig) -> Result<Vec<Complex<T>>> {
    if subblocks.len() != config.g() || subblocks.iter().any(|s| s.len() != config.n) {
        return Err(usage(format!("need {} subblocks of length {}", config.g(), config.n)));
    }
    let mut x = vec![Complex::new(T::zero(), T::zero()); config.n_f];
    for (g, sb) in subblocks.iter().enumerate() {
        for (pos, v) in sb.iter().enumerate() {
            x[config.frame_position(g, pos)] = *v;
        }
    }
    Ok(x)
}

/// Undoes [`assemble_frame`]: de-interleaves and splits into subblocks.
pub fn split_frame<T: Real>(x: &[Complex<T>], config: &OfdmImConfig) -> Result<Vec<Vec<Complex<T>>>> {
    if x.len() != config.n_f {
        return Err(usage(format!("frame has {} subcarriers, expected {}", x.len(), config.n_f)));
    }
    Ok((0..config.g()).map(|g| (0..config.n).map(|pos| x[config.frame_position(g, pos)]).collect()).collect())
}

/// Bits → frame for a whole OFDM-IM symbol.
#[derive(Debug, Clone)]
pub struct Framer<T> {
    config: OfdmImConfig,
    codec: SubblockCodec<T>,
}

impl<T: Real> Framer<T> {
    pub fn new(config: OfdmImConfig) -> Result<Self> {
        let codec = SubblockCodec::new(&config)?;
        Ok(Self { config, codec })
    }

    pub fn config(&self) -> &OfdmImConfig {
        &self.config
    }

    pub fn codec(&self) -> &SubblockCodec<T> {
        &self.codec
    }

    pub fn frame_bits(&self) -> usize {
        self.config.g() * self.codec.bits()
    }

    pub fn frame(&self, input: &[u8]) -> Result<OfdmImFrame<T>> {
        if input.len() != self.frame_bits() {
            return Err(usage(format!("frame expects {} bits, got {}", self.frame_bits(), input.len())));
        }
        let contents =
            input.chunks(self.codec.bits().max(1)).take(self.config.g()).map(|c| self.codec.content_of(c)).collect::<Result<Vec<_>>>()?;
        let contents = if self.codec.bits() == 0 {
            vec![self.codec.content_of(&[])?; self.config.g()]
        } else {
            contents
        };
        let subblocks: Vec<_> = contents.iter().map(|c| self.codec.values(c)).collect();
        let x = assemble_frame(&subblocks, &self.config)?;
        Ok(OfdmImFrame { subblocks, contents, x })
    }

    /// Detected per-subblock contents back to bits. Contents outside the
    /// codebook are counted; their index bits are emitted as zeros.
    pub fn deframe(&self, decisions: &[SubblockContent]) -> Result<(Vec<u8>, usize)> {
        if decisions.len() != self.config.g() {
            return Err(usage(format!("need {} subblock decisions, got {}", self.config.g(), decisions.len())));
        }
        let mut out = Vec::with_capacity(self.frame_bits());
        let mut illegal = 0;
        for d in decisions {
            match self.codec.bits_of(d) {
                Some(b) => out.extend(b),
                None => {
                    illegal += 1;
                    out.extend(std::iter::repeat_n(0u8, self.codec.bits()));
                }
            }
        }
        Ok((out, illegal))
    }
}

/// Unitary IFFT/FFT pair with cyclic prefix handling.
#[derive(Clone)]
pub struct OfdmModem<T: Real> {
    n_f: usize,
    cp_len: usize,
    ifft: Arc<dyn Fft<T>>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for OfdmModem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem").field("n_f", &self.n_f).field("cp_len", &self.cp_len).finish()
    }
}

impl<T: Real> OfdmModem<T> {
    pub fn new(n_f: usize, cp_len: usize) -> Result<Self> {
        if n_f == 0 || cp_len >= n_f {
            return Err(usage(format!("cp_len = {cp_len} must be below N_F = {n_f}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { n_f, cp_len, ifft: planner.plan_fft_inverse(n_f), fft: planner.plan_fft_forward(n_f) })
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    fn scale(&self) -> T {
        T::from_usize(self.n_f).unwrap().sqrt().recip()
    }

    /// Unitary IDFT followed by the cyclic prefix.
    pub fn modulate(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if x.len() != self.n_f {
            return Err(usage(format!("frame has {} subcarriers, expected {}", x.len(), self.n_f)));
        }
        let mut buf = x.to_vec();
        self.ifft.process(&mut buf);
        let s = self.scale();
        let mut out = Vec::with_capacity(self.n_f + self.cp_len);
        out.extend(buf[self.n_f - self.cp_len..].iter().map(|v| v * s));
        out.extend(buf.iter().map(|v| v * s));
        Ok(out)
    }

    /// Drops the cyclic prefix and applies the unitary DFT.
    pub fn demodulate(&self, samples: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if samples.len() < self.n_f + self.cp_len {
            return Err(usage("received block shorter than one OFDM symbol"));
        }
        let mut buf = samples[self.cp_len..self.cp_len + self.n_f].to_vec();
        self.fft.process(&mut buf);
        let s = self.scale();
        for v in &mut buf {
            *v = *v * s;
        }
        Ok(buf)
    }

    pub fn channel_response(&self, ch: &crate::channel::SelectiveChannel<T>) -> Vec<CMatrix<T>> {
        ch.frequency_response_with(self.fft.as_ref())
    }
}

/// Writes `subcarrier,real,imag` rows.
pub fn write_frame_csv<T: Real, W: Write>(mut w: W, x: &[Complex<T>]) -> Result<()> {
    writeln!(w, "subcarrier,real,imag")?;
    for (i, v) in x.iter().enumerate() {
        writeln!(w, "{},{},{}", i, crate::fmt::sig12(v.re.to_f64_lossy()), crate::fmt::sig12(v.im.to_f64_lossy()))?;
    }
    Ok(())
}

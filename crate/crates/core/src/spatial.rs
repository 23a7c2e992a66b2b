//! Bit-to-vector mapping for spatial-modulation schemes.
//!
//! In every scheme the spatial (index) bits come first in the input string,
//! followed by the constellation bits. Antenna indices are 0-based here.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bits::{self, exact_log2};
use crate::combinatorics::{ActivationPattern, IndexSelector};
use crate::constellation::{Constellation, ConstellationSpec};
use crate::error::usage;
use crate::{Error, Real, Result};

/// Largest bits-per-use for which a codebook may be enumerated.
pub const ENUMERATION_LIMIT_BITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Sm,
    Gsm,
    MaSm,
    Esm,
    Qsm,
    Simo,
    Vblast,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Sm => "sm",
            SchemeKind::Gsm => "gsm",
            SchemeKind::MaSm => "ma-sm",
            SchemeKind::Esm => "esm",
            SchemeKind::Qsm => "qsm",
            SchemeKind::Simo => "simo",
            SchemeKind::Vblast => "vblast",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sm" => SchemeKind::Sm,
            "gsm" => SchemeKind::Gsm,
            "ma-sm" | "masm" => SchemeKind::MaSm,
            "esm" => SchemeKind::Esm,
            "qsm" => SchemeKind::Qsm,
            "simo" => SchemeKind::Simo,
            "vblast" | "v-blast" => SchemeKind::Vblast,
            other => return Err(usage(format!("unknown spatial scheme {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCodeword<T> {
    pub vector: Vec<Complex<T>>,
    pub bits: Vec<u8>,
    pub active: ActivationPattern,
}

impl<T: Real> SpatialCodeword<T> {
    pub fn energy(&self) -> T {
        self.vector.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }
}

/// One row of an ESM combination table: which antennas transmit, from which
/// constellation each draws its symbol, and a common rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct EsmEntry<T> {
    pub antennas: Vec<usize>,
    pub constellations: Vec<usize>,
    pub rotation: T,
}

/// ESM combination alphabet. Entry `i` is selected by spatial bits equal to `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EsmTable<T> {
    n_t: usize,
    names: Vec<String>,
    specs: Vec<ConstellationSpec>,
    constellations: Vec<Constellation<T>>,
    entries: Vec<EsmEntry<T>>,
    spatial_bits: usize,
    symbol_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsmEntryDocument {
    pub spatial_bits: String,
    pub antennas: Vec<usize>,
    pub constellations: Vec<String>,
    #[serde(default)]
    pub rotation: f64,
}

/// JSON form of an [`EsmTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsmTableDocument {
    pub n_t: usize,
    pub constellations: BTreeMap<String, ConstellationSpec>,
    pub entries: Vec<EsmEntryDocument>,
}

impl<T: Real> EsmTable<T> {
    /// Single-antenna entries with the primary constellation on each antenna,
    /// then every antenna pair with the secondary constellation, unrotated,
    /// then every pair again rotated by `rotation`. Pairs are lexicographic.
    ///
    /// For two antennas with QPSK/BPSK and a rotation of π/2 this is the
    /// classic 4-bpcu ESM alphabet.
    pub fn standard(n_t: usize, primary: ConstellationSpec, secondary: ConstellationSpec, rotation: f64) -> Result<Self> {
        let mut constellations = BTreeMap::new();
        constellations.insert("primary".to_string(), primary);
        constellations.insert("secondary".to_string(), secondary);
        let spatial = exact_log2(n_t * n_t)
            .ok_or_else(|| usage(format!("standard ESM table needs n_T a power of two, got {n_t}")))?;
        let mut entries = Vec::new();
        let mut push = |antennas: Vec<usize>, name: &str, rot: f64| {
            let value = entries.len() as u64;
            entries.push(EsmEntryDocument {
                spatial_bits: bits::format(&bits::from_u64(value, spatial)),
                constellations: vec![name.to_string(); antennas.len()],
                antennas,
                rotation: rot,
            });
        };
        for a in 0..n_t {
            push(vec![a], "primary", 0.0);
        }
        for rot in [0.0, rotation] {
            for a in 0..n_t {
                for b in a + 1..n_t {
                    push(vec![a, b], "secondary", rot);
                }
            }
        }
        Self::from_document(&EsmTableDocument { n_t, constellations, entries })
    }

    /// Two antennas, QPSK (π/4) single-antenna symbols, BPSK pairs and
    /// π/2-rotated BPSK pairs.
    pub fn two_antenna_qpsk_bpsk() -> Self {
        Self::standard(2, ConstellationSpec::psk(4, std::f64::consts::FRAC_PI_4), ConstellationSpec::psk(2, 0.0), std::f64::consts::FRAC_PI_2)
            .expect("built-in table is valid")
    }

    /// Shipped alphabet for `n_t` antennas and a given primary order:
    /// QPSK/BPSK (rotation π/2), 16-QAM/QPSK (π/4), 64-QAM/star 8-QAM (π/4).
    /// The last two are not normative; any table can be loaded instead.
    pub fn shipped(n_t: usize, primary_order: usize) -> Result<Self> {
        use crate::constellation::ConstellationKind;
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        let (primary, secondary, rot) = match primary_order {
            4 => (ConstellationSpec::psk(4, FRAC_PI_4), ConstellationSpec::psk(2, 0.0), FRAC_PI_2),
            16 => (ConstellationSpec::qam(16), ConstellationSpec::psk(4, FRAC_PI_4), FRAC_PI_4),
            64 => (
                ConstellationSpec::qam(64),
                ConstellationSpec { kind: ConstellationKind::StarQam, order: 8, phase_offset: None },
                FRAC_PI_4,
            ),
            m => return Err(usage(format!("no shipped ESM table for primary order {m}; supply one as JSON"))),
        };
        Self::standard(n_t, primary, secondary, rot)
    }

    pub fn from_document(doc: &EsmTableDocument) -> Result<Self> {
        let bad = |msg: String| Error::InvalidTable(msg);
        let n_t = doc.n_t;
        if n_t == 0 {
            return Err(bad("n_t must be positive".into()));
        }
        let names: Vec<String> = doc.constellations.keys().cloned().collect();
        let specs: Vec<ConstellationSpec> = doc.constellations.values().cloned().collect();
        let constellations = specs.iter().map(|s| s.build::<T>()).collect::<Result<Vec<_>>>()?;
        let spatial_bits = exact_log2(doc.entries.len())
            .ok_or_else(|| bad(format!("entry count {} is not a power of two", doc.entries.len())))?;
        let mut entries: Vec<Option<EsmEntry<T>>> = vec![None; doc.entries.len()];
        let mut symbol_bits = None;
        for e in &doc.entries {
            let key = bits::parse(&e.spatial_bits).map_err(|_| bad(format!("bad spatial bits {:?}", e.spatial_bits)))?;
            if key.len() != spatial_bits {
                return Err(bad(format!("spatial bits {:?} should have length {spatial_bits}", e.spatial_bits)));
            }
            if e.antennas.is_empty() || e.antennas.len() != e.constellations.len() {
                return Err(bad(format!("entry {:?}: antennas and constellations must pair up", e.spatial_bits)));
            }
            if e.antennas.windows(2).any(|w| w[0] >= w[1]) || e.antennas.iter().any(|&a| a >= n_t) {
                return Err(bad(format!("entry {:?}: antennas must be increasing and < n_t", e.spatial_bits)));
            }
            let ids = e
                .constellations
                .iter()
                .map(|name| names.iter().position(|n| n == name).ok_or_else(|| bad(format!("unknown constellation {name:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let nbits: usize = ids.iter().map(|&i| constellations[i].bits_per_symbol()).sum();
            match symbol_bits {
                None => symbol_bits = Some(nbits),
                Some(b) if b != nbits => {
                    return Err(bad(format!("entry {:?} carries {nbits} symbol bits, others {b}", e.spatial_bits)))
                }
                _ => {}
            }
            let slot = &mut entries[bits::to_u64(&key) as usize];
            if slot.is_some() {
                return Err(bad(format!("duplicate spatial bits {:?}", e.spatial_bits)));
            }
            *slot = Some(EsmEntry { antennas: e.antennas.clone(), constellations: ids, rotation: T::lit(e.rotation) });
        }
        let table = Self {
            n_t,
            names,
            specs,
            constellations,
            entries: entries.into_iter().map(|e| e.expect("all slots filled")).collect(),
            spatial_bits,
            symbol_bits: symbol_bits.unwrap_or(0),
        };
        table.validate_codebook()?;
        Ok(table)
    }

    fn validate_codebook(&self) -> Result<()> {
        let total = self.spatial_bits + self.symbol_bits;
        if total > 16 {
            return Err(Error::InvalidTable(format!("{total} bits per use is too large to validate")));
        }
        let scheme = SpatialScheme::esm(self.clone());
        let book = scheme.enumerate_codebook()?;
        let mean = book.iter().map(|c| c.energy()).fold(T::zero(), |a, b| a + b) / T::from_usize(book.len()).unwrap();
        if (mean - T::one()).abs() > T::lit(1e-9_f64.max(T::MATCH_TOL)) {
            return Err(Error::InvalidTable(format!("average codeword energy {mean} is not 1")));
        }
        let tol = T::lit(T::MATCH_TOL);
        for (i, a) in book.iter().enumerate() {
            for b in &book[i + 1..] {
                let d = a.vector.iter().zip(&b.vector).map(|(x, y)| (x - y).norm_sqr()).fold(T::zero(), |s, v| s + v);
                if d <= tol * tol {
                    return Err(Error::InvalidTable(format!(
                        "codewords {} and {} coincide",
                        bits::format(&a.bits),
                        bits::format(&b.bits)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> EsmTableDocument {
        EsmTableDocument {
            n_t: self.n_t,
            constellations: self.names.iter().cloned().zip(self.specs.iter().cloned()).collect(),
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| EsmEntryDocument {
                    spatial_bits: bits::format(&bits::from_u64(i as u64, self.spatial_bits)),
                    antennas: e.antennas.clone(),
                    constellations: e.constellations.iter().map(|&c| self.names[c].clone()).collect(),
                    rotation: e.rotation.to_f64_lossy(),
                })
                .collect(),
        }
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn entries(&self) -> &[EsmEntry<T>] {
        &self.entries
    }

    pub fn constellation(&self, id: usize) -> &Constellation<T> {
        &self.constellations[id]
    }

    pub fn spatial_bits(&self) -> usize {
        self.spatial_bits
    }

    pub fn symbol_bits(&self) -> usize {
        self.symbol_bits
    }

    fn largest_constellation(&self) -> usize {
        self.constellations.iter().map(|c| c.order()).max().unwrap_or(1)
    }
}

/// A spatial-modulation transmitter description.
#[derive(Debug, Clone)]
pub struct SpatialScheme<T> {
    kind: SchemeKind,
    n_t: usize,
    n_a: usize,
    constellation: Constellation<T>,
    selector: Option<IndexSelector>,
    esm: Option<EsmTable<T>>,
    spatial_bits: usize,
    symbol_bits: usize,
}

impl<T: Real> SpatialScheme<T> {
    fn base(kind: SchemeKind, n_t: usize, n_a: usize, constellation: Constellation<T>, spatial_bits: usize) -> Self {
        let symbol_bits = match kind {
            SchemeKind::MaSm | SchemeKind::Vblast => n_a * constellation.bits_per_symbol(),
            _ => constellation.bits_per_symbol(),
        };
        Self { kind, n_t, n_a, constellation, selector: None, esm: None, spatial_bits, symbol_bits }
    }

    pub fn sm(n_t: usize, constellation: Constellation<T>) -> Result<Self> {
        let sb = exact_log2(n_t).filter(|&b| b >= 1).ok_or_else(|| usage(format!("SM needs n_T a power of two >= 2, got {n_t}")))?;
        Ok(Self::base(SchemeKind::Sm, n_t, 1, constellation, sb))
    }

    pub fn qsm(n_t: usize, constellation: Constellation<T>) -> Result<Self> {
        let sb = exact_log2(n_t).filter(|&b| b >= 1).ok_or_else(|| usage(format!("QSM needs n_T a power of two >= 2, got {n_t}")))?;
        let tol = T::lit(T::MATCH_TOL);
        if constellation.points().iter().any(|p| p.re.abs() <= tol || p.im.abs() <= tol) {
            return Err(usage("QSM needs a constellation with nonzero real and imaginary parts on every point"));
        }
        Ok(Self::base(SchemeKind::Qsm, n_t, 2, constellation, 2 * sb))
    }

    pub fn gsm(n_t: usize, n_a: usize, constellation: Constellation<T>) -> Result<Self> {
        let selector = Self::antenna_selector(n_t, n_a)?;
        if selector.p1() == 0 {
            return Err(usage(format!("GSM with n_T = {n_t}, n_A = {n_a} carries no spatial bits")));
        }
        let mut s = Self::base(SchemeKind::Gsm, n_t, n_a, constellation, selector.p1());
        s.selector = Some(selector);
        Ok(s)
    }

    /// Multiple-active SM; `n_a = 1` behaves as SM, `n_a = n_t` as V-BLAST.
    pub fn ma_sm(n_t: usize, n_a: usize, constellation: Constellation<T>) -> Result<Self> {
        let selector = Self::antenna_selector(n_t, n_a)?;
        let mut s = Self::base(SchemeKind::MaSm, n_t, n_a, constellation, selector.p1());
        s.selector = Some(selector);
        Ok(s)
    }

    pub fn esm(table: EsmTable<T>) -> Self {
        let c = table.constellations[0].clone();
        Self {
            kind: SchemeKind::Esm,
            n_t: table.n_t,
            n_a: table.entries.iter().map(|e| e.antennas.len()).max().unwrap_or(1),
            constellation: c,
            selector: None,
            spatial_bits: table.spatial_bits,
            symbol_bits: table.symbol_bits,
            esm: Some(table),
        }
    }

    pub fn simo(constellation: Constellation<T>) -> Self {
        Self::base(SchemeKind::Simo, 1, 1, constellation, 0)
    }

    /// Spatial multiplexing baseline: independent symbols on all antennas.
    pub fn vblast(n_t: usize, constellation: Constellation<T>) -> Result<Self> {
        if n_t == 0 {
            return Err(usage("V-BLAST needs at least one antenna"));
        }
        Ok(Self::base(SchemeKind::Vblast, n_t, n_t, constellation, 0))
    }

    fn antenna_selector(n_t: usize, n_a: usize) -> Result<IndexSelector> {
        if n_a == 0 || n_a > n_t {
            return Err(usage(format!("need 1 <= n_A <= n_T, got n_A = {n_a}, n_T = {n_t}")));
        }
        IndexSelector::combinadic(n_t, n_a)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    pub fn esm_table(&self) -> Option<&EsmTable<T>> {
        self.esm.as_ref()
    }

    pub fn spatial_bits(&self) -> usize {
        self.spatial_bits
    }

    pub fn symbol_bits(&self) -> usize {
        self.symbol_bits
    }

    pub fn bits_per_use(&self) -> usize {
        self.spatial_bits + self.symbol_bits
    }

    /// Short identifier such as `qsm-nt2-psk4`.
    pub fn id(&self) -> String {
        let c = self.constellation.name();
        match self.kind {
            SchemeKind::Gsm | SchemeKind::MaSm => format!("{}-nt{}-na{}-{}", self.kind.name(), self.n_t, self.n_a, c),
            SchemeKind::Esm => {
                let t = self.esm.as_ref().unwrap();
                let parts: Vec<String> = t.constellations.iter().map(Constellation::name).collect();
                format!("esm-nt{}-{}", self.n_t, parts.join("/"))
            }
            _ => format!("{}-nt{}-{}", self.kind.name(), self.n_t, c),
        }
    }

    fn zeros(&self) -> Vec<Complex<T>> {
        vec![Complex::new(T::zero(), T::zero()); self.n_t]
    }

    pub fn encode(&self, input: &[u8]) -> Result<SpatialCodeword<T>> {
        if input.len() != self.bits_per_use() {
            return Err(usage(format!("{} expects {} bits per use, got {}", self.id(), self.bits_per_use(), input.len())));
        }
        let (spatial, symbols) = input.split_at(self.spatial_bits);
        let c = &self.constellation;
        let mb = c.bits_per_symbol();
        let mut x = self.zeros();
        let active = match self.kind {
            SchemeKind::Sm => {
                let a = bits::to_u64(spatial) as usize;
                x[a] = c.point(bits::to_u64(symbols) as usize);
                ActivationPattern::new(self.n_t, vec![a])?
            }
            SchemeKind::Simo => {
                x[0] = c.point(bits::to_u64(symbols) as usize);
                ActivationPattern::full(1)
            }
            SchemeKind::Gsm => {
                let pattern = self.selector.as_ref().unwrap().select_pattern(spatial)?;
                let s = c.point(bits::to_u64(symbols) as usize) * self.scale(pattern.k());
                for &a in pattern.positions() {
                    x[a] = s;
                }
                pattern
            }
            SchemeKind::MaSm | SchemeKind::Vblast => {
                let pattern = match &self.selector {
                    Some(sel) => sel.select_pattern(spatial)?,
                    None => ActivationPattern::full(self.n_t),
                };
                let scale = self.scale(pattern.k());
                for (&a, chunk) in pattern.positions().iter().zip(symbols.chunks(mb)) {
                    x[a] = c.point(bits::to_u64(chunk) as usize) * scale;
                }
                pattern
            }
            SchemeKind::Qsm => {
                let half = self.spatial_bits / 2;
                let re_at = bits::to_u64(&spatial[..half]) as usize;
                let im_at = bits::to_u64(&spatial[half..]) as usize;
                let s = c.point(bits::to_u64(symbols) as usize);
                x[re_at].re = s.re;
                x[im_at].im = s.im;
                let mut pos = vec![re_at, im_at];
                pos.sort_unstable();
                pos.dedup();
                ActivationPattern::new(self.n_t, pos)?
            }
            SchemeKind::Esm => {
                let table = self.esm.as_ref().unwrap();
                let entry = &table.entries[bits::to_u64(spatial) as usize];
                let rot = Complex::from_polar(T::one(), entry.rotation) * self.scale(entry.antennas.len());
                let mut offset = 0;
                for (&a, &cid) in entry.antennas.iter().zip(&entry.constellations) {
                    let con = &table.constellations[cid];
                    let nb = con.bits_per_symbol();
                    x[a] = con.point(bits::to_u64(&symbols[offset..offset + nb]) as usize) * rot;
                    offset += nb;
                }
                ActivationPattern::new(self.n_t, entry.antennas.clone())?
            }
        };
        Ok(SpatialCodeword { vector: x, bits: input.to_vec(), active })
    }

    fn scale(&self, active: usize) -> T {
        T::from_usize(active).unwrap().sqrt().recip()
    }

    /// Every codeword, in increasing order of its bit string.
    pub fn enumerate_codebook(&self) -> Result<Vec<SpatialCodeword<T>>> {
        let b = self.bits_per_use();
        if b > ENUMERATION_LIMIT_BITS {
            return Err(Error::Capacity(format!(
                "{} has {b} bits per use; enumeration is limited to {ENUMERATION_LIMIT_BITS}",
                self.id()
            )));
        }
        (0..1u64 << b).map(|v| self.encode(&bits::from_u64(v, b))).collect()
    }

    /// Exact inverse of [`encode`](Self::encode) for noiseless vectors.
    pub fn decode(&self, x: &[Complex<T>]) -> Result<Vec<u8>> {
        let not_member = || Error::NotACodeword { scheme: self.id() };
        if x.len() != self.n_t {
            return Err(usage(format!("expected a length-{} vector, got {}", self.n_t, x.len())));
        }
        let tol = T::lit(T::MATCH_TOL);
        let nonzero: Vec<usize> = (0..self.n_t).filter(|&i| x[i].norm() > tol).collect();
        let c = &self.constellation;
        let mb = c.bits_per_symbol();
        let mut out = Vec::with_capacity(self.bits_per_use());
        match self.kind {
            SchemeKind::Sm | SchemeKind::Simo => {
                let [a] = nonzero[..] else { return Err(not_member()) };
                let label = c.label_of(x[a]).ok_or_else(not_member)?;
                bits::push_u64(&mut out, a as u64, self.spatial_bits);
                bits::push_u64(&mut out, label as u64, mb);
            }
            SchemeKind::Gsm | SchemeKind::MaSm | SchemeKind::Vblast => {
                let pattern = ActivationPattern::new(self.n_t, nonzero)?;
                if pattern.k() != self.n_a {
                    return Err(not_member());
                }
                if let Some(sel) = &self.selector {
                    let idx = sel.index_of(&pattern).ok_or_else(not_member)?;
                    bits::push_u64(&mut out, idx, self.spatial_bits);
                }
                let unscale = T::from_usize(self.n_a).unwrap().sqrt();
                let labels = pattern
                    .positions()
                    .iter()
                    .map(|&a| c.label_of(x[a] * unscale).ok_or_else(not_member))
                    .collect::<Result<Vec<_>>>()?;
                if self.kind == SchemeKind::Gsm {
                    if labels.windows(2).any(|w| w[0] != w[1]) {
                        return Err(not_member());
                    }
                    bits::push_u64(&mut out, labels[0] as u64, mb);
                } else {
                    for l in labels {
                        bits::push_u64(&mut out, l as u64, mb);
                    }
                }
            }
            SchemeKind::Qsm => {
                let re_pos: Vec<usize> = (0..self.n_t).filter(|&i| x[i].re.abs() > tol).collect();
                let im_pos: Vec<usize> = (0..self.n_t).filter(|&i| x[i].im.abs() > tol).collect();
                let ([r], [i]) = (&re_pos[..], &im_pos[..]) else { return Err(not_member()) };
                let label = c.label_of(Complex::new(x[*r].re, x[*i].im)).ok_or_else(not_member)?;
                let half = self.spatial_bits / 2;
                bits::push_u64(&mut out, *r as u64, half);
                bits::push_u64(&mut out, *i as u64, half);
                bits::push_u64(&mut out, label as u64, mb);
            }
            SchemeKind::Esm => {
                let table = self.esm.as_ref().unwrap();
                let found = table.entries.iter().enumerate().find_map(|(idx, e)| {
                    if e.antennas != nonzero {
                        return None;
                    }
                    let undo = Complex::from_polar(T::one(), -e.rotation) * T::from_usize(e.antennas.len()).unwrap().sqrt();
                    let labels: Option<Vec<(usize, usize)>> = e
                        .antennas
                        .iter()
                        .zip(&e.constellations)
                        .map(|(&a, &cid)| {
                            let con = &table.constellations[cid];
                            con.label_of(x[a] * undo).map(|l| (l, con.bits_per_symbol()))
                        })
                        .collect();
                    labels.map(|l| (idx, l))
                });
                let (idx, labels) = found.ok_or_else(not_member)?;
                bits::push_u64(&mut out, idx as u64, self.spatial_bits);
                for (l, nb) in labels {
                    bits::push_u64(&mut out, l as u64, nb);
                }
            }
        }
        Ok(out)
    }

    /// Size of the largest per-antenna alphabet (M for most schemes).
    pub fn alphabet_size(&self) -> usize {
        match &self.esm {
            Some(t) => t.largest_constellation(),
            None => self.constellation.order(),
        }
    }
}

/// Serializable scheme description used by configs and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    #[serde(default = "one")]
    pub n_t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<usize>,
    /// Constellation order; the default constellation for an order is
    /// BPSK / QPSK(π/4) / 8-PSK / square QAM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellation: Option<ConstellationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esm_table: Option<EsmTableDocument>,
}

fn one() -> usize {
    1
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, n_t: usize, m: usize) -> Self {
        Self { kind, n_t, n_a: None, m: Some(m), constellation: None, esm_table: None }
    }

    pub fn with_n_a(mut self, n_a: usize) -> Self {
        self.n_a = Some(n_a);
        self
    }

    fn constellation_spec(&self) -> Result<ConstellationSpec> {
        match (&self.constellation, self.m) {
            (Some(c), _) => Ok(c.clone()),
            (None, Some(m)) => Ok(ConstellationSpec::default_for_order(m)),
            (None, None) => Err(usage("scheme needs a constellation order m")),
        }
    }

    pub fn build<T: Real>(&self) -> Result<SpatialScheme<T>> {
        let n_a = || self.n_a.ok_or_else(|| usage(format!("{} needs n_a", self.kind.name())));
        match self.kind {
            SchemeKind::Esm => {
                let table = match (&self.esm_table, self.m) {
                    (Some(doc), _) => EsmTable::from_document(doc)?,
                    (None, Some(m)) => EsmTable::shipped(self.n_t, m)?,
                    (None, None) => return Err(usage("esm needs either m or esm_table")),
                };
                if table.n_t() != self.n_t {
                    return Err(usage(format!("ESM table is for n_T = {}, scheme says {}", table.n_t(), self.n_t)));
                }
                Ok(SpatialScheme::esm(table))
            }
            kind => {
                let c = self.constellation_spec()?.build::<T>()?;
                match kind {
                    SchemeKind::Sm => SpatialScheme::sm(self.n_t, c),
                    SchemeKind::Qsm => SpatialScheme::qsm(self.n_t, c),
                    SchemeKind::Gsm => SpatialScheme::gsm(self.n_t, n_a()?, c),
                    SchemeKind::MaSm => SpatialScheme::ma_sm(self.n_t, n_a()?, c),
                    SchemeKind::Vblast => SpatialScheme::vblast(self.n_t, c),
                    SchemeKind::Simo => {
                        if self.n_t != 1 {
                            return Err(usage("SIMO has one transmit antenna"));
                        }
                        Ok(SpatialScheme::simo(c))
                    }
                    SchemeKind::Esm => unreachable!(),
                }
            }
        }
    }
}

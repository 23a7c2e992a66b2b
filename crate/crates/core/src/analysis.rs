//! Codebook distance, rate and detection-complexity reports.

use std::io::Write;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_bigint::BigUint;

use crate::channel::{complex_normal, FlatChannel};
use crate::combinatorics::binomial;
use crate::ofdm::{gim1_realizations, OfdmImConfig, OfdmVariant};
use crate::error::usage;
use crate::fmt::sig12;
use crate::spatial::{EsmTable, SchemeKind, SchemeSpec, SpatialCodeword, SpatialScheme};
use crate::{detection, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DminReport {
    pub scheme: String,
    pub bpcu: usize,
    pub n_t: usize,
    pub d_min: f64,
    /// Lowest-index pair attaining the minimum.
    pub pair: (usize, usize),
}

/// Exact minimum squared distance over all unordered pairs of vectors.
pub fn d_min_vectors<T: Real>(vectors: &[Vec<Complex<T>>]) -> Result<(T, (usize, usize))> {
    if vectors.len() < 2 {
        return Err(usage("d_min needs at least two codewords"));
    }
    let dist = |a: &[Complex<T>], b: &[Complex<T>]| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).fold(T::zero(), |s, v| s + v);
    let n = vectors.len();
    // per-row minimum, then a sequential reduction so the lowest pair wins ties
    let rows: Vec<(T, (usize, usize))> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = (T::infinity(), (i, i + 1));
            for j in i + 1..n {
                let d = dist(&vectors[i], &vectors[j]);
                if d < best.0 {
                    best = (d, (i, j));
                }
            }
            best
        })
        .collect();
    Ok(rows.into_iter().fold((T::infinity(), (0, 1)), |best, r| if r.0 < best.0 { r } else { best }))
}

pub fn d_min_codebook<T: Real>(codebook: &[SpatialCodeword<T>]) -> Result<(T, (usize, usize))> {
    let v: Vec<Vec<Complex<T>>> = codebook.iter().map(|c| c.vector.clone()).collect();
    d_min_vectors(&v)
}

pub fn d_min<T: Real>(scheme: &SpatialScheme<T>) -> Result<DminReport> {
    let (d, pair) = d_min_codebook(&scheme.enumerate_codebook()?)?;
    Ok(DminReport { scheme: scheme.id(), bpcu: scheme.bits_per_use(), n_t: scheme.n_t(), d_min: d.to_f64_lossy(), pair })
}

/// Bit budget of one OFDM-IM configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmRate {
    pub variant: OfdmVariant,
    /// Subblock realizations before truncation to a power of two:
    /// `C(N,K)` patterns for IM and GIM-II, `(1+M)^N` for GIM-I.
    pub realizations: BigUint,
    pub index_bits: usize,
    pub subblock_bits: usize,
    pub subblocks: usize,
    pub frame_bits: usize,
    pub n_f: usize,
    pub cp_len: usize,
    /// Bits of plain OFDM-IM with the same N, K, M (GIM variants only).
    pub im_equivalent_bits: Option<usize>,
}

impl OfdmRate {
    pub fn new(config: &OfdmImConfig) -> Result<Self> {
        config.validate()?;
        let (n, k) = (config.n as u64, config.k as u64);
        let realizations = match config.variant {
            OfdmVariant::GimI => gim1_realizations(config.n, config.m),
            _ => binomial(n, k)?,
        };
        let index_bits = match config.variant {
            OfdmVariant::GimI => 0,
            _ => crate::combinatorics::index_bits(n, k)?,
        };
        let im_equivalent_bits = match config.variant {
            OfdmVariant::Im => None,
            _ if config.k == 0 => None,
            _ => Some(OfdmImConfig { variant: OfdmVariant::Im, lookup_table: None, ..config.clone() }.subblock_bits()?),
        };
        Ok(Self {
            variant: config.variant,
            realizations,
            index_bits,
            subblock_bits: config.subblock_bits()?,
            subblocks: config.g(),
            frame_bits: config.frame_bits()?,
            n_f: config.n_f,
            cp_len: config.cp_len,
            im_equivalent_bits,
        })
    }

    /// Fraction of channel uses carrying data: `N_F / (N_F + cp)`.
    pub fn cp_factor(&self) -> f64 {
        self.n_f as f64 / (self.n_f + self.cp_len) as f64
    }

    /// Bits per channel use including the cyclic prefix overhead.
    pub fn spectral_efficiency(&self) -> f64 {
        self.frame_bits as f64 / (self.n_f + self.cp_len) as f64
    }

    /// Percentage gain in subblock bits over plain OFDM-IM.
    pub fn gain_over_im(&self) -> Option<f64> {
        self.im_equivalent_bits.filter(|&b| b > 0).map(|b| 100.0 * (self.subblock_bits as f64 - b as f64) / b as f64)
    }
}

/// Percentage ML complexity reduction of SM over V-BLAST: `200(n_T−1)/(2n_T+1)`.
pub fn complexity_reduction_vs_vblast(n_t: usize) -> Result<f64> {
    if n_t == 0 {
        return Err(usage("n_T must be at least 1"));
    }
    let n = n_t as f64;
    Ok(200.0 * (n - 1.0) / (2.0 * n + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Ml,
    TwoStage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub detector: DetectorKind,
    pub real_mults: u64,
    pub search_space: usize,
}

/// Instrumented real-multiplication count of one detection on a seeded
/// random channel and received vector.
pub fn count_real_multiplications(detector: DetectorKind, scheme: &SpatialScheme<f64>, n_r: usize) -> Result<ComplexityReport> {
    if n_r == 0 {
        return Err(usage("n_R must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let h = FlatChannel::draw(n_r, scheme.n_t(), &mut rng);
    let y: Vec<Complex<f64>> = (0..n_r).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let mut counter = detection::MulCounter::default();
    match detector {
        DetectorKind::Ml => {
            detection::ml_spatial_counted(&y, &h, &scheme.enumerate_codebook()?, &mut counter)?;
        }
        DetectorKind::TwoStage => {
            detection::two_stage_sm_counted(&y, &h, scheme, &mut counter)?;
        }
    }
    let search_space = counter.candidates as usize;
    Ok(ComplexityReport { detector, real_mults: counter.real_mults, search_space })
}

/// One Fig. 2 configuration: the same spectral efficiency for SIMO, SM, ESM and QSM.
#[derive(Debug, Clone, PartialEq)]
pub struct DminConfig {
    pub label: char,
    pub bpcu: usize,
    pub schemes: [SchemeSpec; 4],
}

/// The four Fig. 2 configurations (a)-(d), each listing SIMO, SM, ESM, QSM.
pub fn fig2_configs() -> Vec<DminConfig> {
    let row = |label, bpcu, n_t, simo, sm, esm, qsm| DminConfig {
        label,
        bpcu,
        schemes: [
            SchemeSpec::new(SchemeKind::Simo, 1, simo),
            SchemeSpec::new(SchemeKind::Sm, n_t, sm),
            SchemeSpec::new(SchemeKind::Esm, n_t, esm),
            SchemeSpec::new(SchemeKind::Qsm, n_t, qsm),
        ],
    };
    vec![
        row('a', 4, 2, 16, 8, 4, 4),
        row('b', 6, 4, 64, 16, 4, 4),
        row('c', 8, 4, 256, 64, 16, 16),
        row('d', 10, 4, 1024, 256, 64, 64),
    ]
}

pub fn fig2_reports() -> Result<Vec<DminReport>> {
    let mut out = Vec::with_capacity(16);
    for cfg in fig2_configs() {
        for spec in &cfg.schemes {
            let r = d_min(&spec.build::<f64>()?)?;
            debug_assert_eq!(r.bpcu, cfg.bpcu);
            out.push(r);
        }
    }
    Ok(out)
}

pub fn write_dmin_csv<W: Write>(mut w: W, reports: &[DminReport]) -> Result<()> {
    writeln!(w, "scheme,bpcu,n_T,d_min")?;
    for r in reports {
        writeln!(w, "{},{},{},{}", r.scheme, r.bpcu, r.n_t, sig12(r.d_min))?;
    }
    Ok(())
}

/// Shipped ESM alphabet for a scheme spec, if any; used by reports that
/// label the convention in force.
pub fn esm_table_label(spec: &SchemeSpec) -> Option<String> {
    if spec.kind != SchemeKind::Esm || spec.esm_table.is_some() {
        return None;
    }
    let table = EsmTable::<f64>::shipped(spec.n_t, spec.m?).ok()?;
    Some(table.to_document().constellations.keys().cloned().collect::<Vec<_>>().join("/"))
}

//! Seeded Monte Carlo BER engine.
//!
//! A point runs in rounds of [`ROUND_BATCHES`] batches. Every batch owns a
//! ChaCha8 stream keyed on (master seed, SNR value, batch index), and the
//! stopping rule is checked only between rounds, so records do not depend
//! on the number of worker threads.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::channel::{apply_flat, apply_selective, FlatChannel, NoiseSpec, SelectiveChannel};
use crate::constellation::{Constellation, ConstellationSpec};
use crate::detection::{self, LlrMode};
use crate::error::usage;
use crate::fmt::sig12;
use crate::linalg::CMatrix;
use crate::ofdm::{Framer, OfdmImConfig, OfdmModem, OfdmVariant, SubblockContent};
use crate::spatial::{SchemeSpec, SpatialCodeword, SpatialScheme};
use crate::{Error, Result};

/// Batches evaluated between two checks of the stopping rule.
pub const ROUND_BATCHES: u64 = 16;

pub const CSV_HEADER: &str = "scheme,n_T,n_R,snr_db,ebn0_db,trials,bit_errors,ber,stderr,illegal_patterns,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialDetector {
    #[default]
    Ml,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OfdmDetector {
    Ml,
    Llr,
    #[default]
    MmseLlr,
}

/// How OFDM-IM frames are scaled before transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerNormalization {
    /// Active subcarriers carry unit-energy symbols; idle ones carry nothing.
    #[default]
    ActiveUnit,
    /// The frame is scaled to unit average energy per subcarrier.
    Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinkSpec {
    /// One channel use per trial over a fresh flat Rayleigh channel.
    Spatial {
        scheme: SchemeSpec,
        #[serde(default = "one")]
        n_r: usize,
        #[serde(default)]
        detector: SpatialDetector,
    },
    /// One OFDM-IM symbol per transmit antenna per trial over a fresh
    /// frequency-selective channel.
    OfdmIm {
        config: OfdmImConfig,
        #[serde(default = "one")]
        n_t: usize,
        #[serde(default = "one")]
        n_r: usize,
        taps: usize,
        #[serde(default)]
        detector: OfdmDetector,
        #[serde(default)]
        llr_mode: LlrMode,
        #[serde(default)]
        power: PowerNormalization,
    },
    /// V-BLAST MIMO-OFDM with per-subcarrier successive MMSE detection.
    VblastOfdm {
        n_f: usize,
        #[serde(default)]
        cp_len: usize,
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constellation: Option<ConstellationSpec>,
        n_t: usize,
        n_r: usize,
        taps: usize,
    },
}

fn one() -> usize {
    1
}

fn default_min_errors() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    pub link: LinkSpec,
    /// Strictly increasing SNR grid in dB.
    pub snr_db: Vec<f64>,
    pub max_trials: u64,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default)]
    pub seed: u64,
    /// Trials per batch; defaults to 4096 channel uses or 4 frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u64>,
    /// Record wall time in the CSV `seconds` column (breaks byte stability).
    #[serde(default)]
    pub timing: bool,
}

/// Modelling conventions in force, echoed into every run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub snr_definition: &'static str,
    pub ebn0_definition: &'static str,
    pub noise: &'static str,
    pub channel: &'static str,
    pub bit_labeling: &'static str,
    pub stopping_rule: &'static str,
    pub rng: &'static str,
    pub gim1_order: &'static str,
    pub gim2_rails: &'static str,
    pub interleaver: &'static str,
    pub llr: &'static str,
    pub illegal_patterns: &'static str,
    pub two_stage_statistic: &'static str,
    pub mmse: &'static str,
    pub mmse_effective_noise: &'static str,
    pub sic_order: &'static str,
    pub power_normalization: Option<PowerNormalization>,
}

impl Metadata {
    pub fn for_link(link: &LinkSpec) -> Self {
        Self {
            snr_definition: "unit-energy symbol (or codeword) energy per transmit antenna over N0; N0 = 10^(-snr_db/10)",
            ebn0_definition: "snr_db + 10log10(mean transmitted energy per channel use) - 10log10(bits per channel use); OFDM channel uses include the cyclic prefix",
            noise: "CN(0, N0) per receive antenna and sample",
            channel: "flat: i.i.d. CN(0,1) per use; selective: L i.i.d. CN(0,1/L) taps (uniform profile), redrawn per frame",
            bit_labeling: "natural binary; spatial/index bits first, then symbol bits",
            stopping_rule: "stop at >= min_errors bit errors or max_trials, checked after each round of 16 batches",
            rng: "ChaCha8 per batch, keyed on (seed, snr_db bits, batch index)",
            gim1_order: "K ascending, patterns lexicographic, labels natural order; first 2^p realizations",
            gim2_rails: "sqrt(M)-PAM per rail scaled by 1/sqrt(2); I pattern, I symbols, Q pattern, Q symbols",
            interleaver: "G x N row-write/column-read: subblock g element n at subcarrier g + G n",
            llr: "ln(K/(N-K)) + |y|^2/v + ln sum_s exp(-|y - g s|^2/v); K largest active, ties to lower index",
            illegal_patterns: "repaired to the legal pattern with maximum sum of LLRs; event counted",
            two_stage_statistic: "|h_n^H y| / ||h_n||",
            mmse: "W = (H^H H + (N0/Es) I)^-1 H^H, best-SINR-first with hard cancellation; 1e-9 diagonal floor when singular",
            mmse_effective_noise: "gain w^H h_t, variance Es sum_{j!=t} |w^H h_j|^2 + N0 ||w||^2",
            sic_order: "OFDM-IM: highest harmonic-mean post-MMSE SINR over the subblock first; V-BLAST: highest per-subcarrier SINR first",
            power_normalization: match link {
                LinkSpec::OfdmIm { power, .. } => Some(*power),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: String,
    pub n_t: usize,
    pub n_r: usize,
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub trials: u64,
    pub bits_per_trial: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub stderr: f64,
    pub illegal_patterns: u64,
    /// Max trials reached without a single error.
    pub below_resolution: bool,
    pub regularized: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    trials: u64,
    errors: u64,
    illegal: u64,
    regularized: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            errors: self.errors + o.errors,
            illegal: self.illegal + o.illegal,
            regularized: self.regularized + o.regularized,
        }
    }
}

/// Immutable, fully built link shared by all batches of a sweep.
enum Link {
    Spatial {
        scheme: SpatialScheme<f64>,
        codebook: Option<Vec<SpatialCodeword<f64>>>,
        n_r: usize,
        detector: SpatialDetector,
    },
    OfdmIm {
        framer: Framer<f64>,
        modem: OfdmModem<f64>,
        n_t: usize,
        n_r: usize,
        taps: usize,
        detector: OfdmDetector,
        llr_mode: LlrMode,
        scale: f64,
    },
    Vblast {
        constellation: Constellation<f64>,
        modem: OfdmModem<f64>,
        n_t: usize,
        n_r: usize,
        taps: usize,
    },
}

impl Link {
    fn build(spec: &LinkSpec) -> Result<Self> {
        match spec {
            LinkSpec::Spatial { scheme, n_r, detector } => {
                if *n_r == 0 {
                    return Err(usage("n_r must be at least 1"));
                }
                let scheme = scheme.build::<f64>()?;
                let codebook = match detector {
                    SpatialDetector::Ml => Some(scheme.enumerate_codebook()?),
                    SpatialDetector::TwoStage => {
                        if scheme.kind() != crate::spatial::SchemeKind::Sm {
                            return Err(usage("two-stage detection needs an SM scheme"));
                        }
                        None
                    }
                };
                Ok(Link::Spatial { scheme, codebook, n_r: *n_r, detector: *detector })
            }
            LinkSpec::OfdmIm { config, n_t, n_r, taps, detector, llr_mode, power } => {
                if *n_t == 0 || *n_r == 0 || *taps == 0 {
                    return Err(usage("n_t, n_r and taps must be at least 1"));
                }
                if *taps > config.cp_len + 1 {
                    return Err(usage(format!("{taps} taps need cp_len >= {}", taps - 1)));
                }
                let framer = Framer::<f64>::new(config.clone())?;
                let mimo = *n_t > 1;
                match detector {
                    OfdmDetector::Ml | OfdmDetector::Llr if mimo => {
                        return Err(usage("ml and llr detectors need n_t = 1; use mmse-llr"));
                    }
                    OfdmDetector::Ml if framer.codec().realizations().is_none() => {
                        return Err(usage("subblock codebook too large for ML"));
                    }
                    OfdmDetector::Llr if config.variant != OfdmVariant::Im => {
                        return Err(usage("llr detection is defined for the ofdm-im variant"));
                    }
                    _ => {}
                }
                let scale = match power {
                    PowerNormalization::ActiveUnit => 1.0,
                    PowerNormalization::Frame => framer.codec().energy_per_subcarrier().sqrt().recip(),
                };
                let modem = OfdmModem::new(config.n_f, config.cp_len)?;
                Ok(Link::OfdmIm {
                    framer,
                    modem,
                    n_t: *n_t,
                    n_r: *n_r,
                    taps: *taps,
                    detector: *detector,
                    llr_mode: *llr_mode,
                    scale,
                })
            }
            LinkSpec::VblastOfdm { n_f, cp_len, m, constellation, n_t, n_r, taps } => {
                if *n_t == 0 || *n_r == 0 || *taps == 0 {
                    return Err(usage("n_t, n_r and taps must be at least 1"));
                }
                if *taps > cp_len + 1 {
                    return Err(usage(format!("{taps} taps need cp_len >= {}", taps - 1)));
                }
                let constellation = constellation.clone().unwrap_or_else(|| ConstellationSpec::default_for_order(*m)).build()?;
                if constellation.order() != *m {
                    return Err(usage("constellation order disagrees with m"));
                }
                Ok(Link::Vblast { constellation, modem: OfdmModem::new(*n_f, *cp_len)?, n_t: *n_t, n_r: *n_r, taps: *taps })
            }
        }
    }

    fn name(&self, spec: &LinkSpec) -> String {
        match (self, spec) {
            (Link::Spatial { scheme, detector, .. }, _) => match detector {
                SpatialDetector::Ml => scheme.id(),
                SpatialDetector::TwoStage => format!("{}-two-stage", scheme.id()),
            },
            (Link::OfdmIm { framer, n_t, .. }, _) => {
                let c = framer.config();
                let prefix = if *n_t > 1 { "mimo-" } else { "" };
                let k = if c.variant == OfdmVariant::GimI { String::new() } else { format!("k{}", c.k) };
                let il = if c.interleave { "-il" } else { "" };
                format!("{prefix}{}-n{}{k}-{}{il}", c.variant.name(), c.n, framer.codec().constellation().name())
            }
            (Link::Vblast { constellation, .. }, _) => format!("vblast-ofdm-{}", constellation.name()),
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Link::Spatial { scheme, n_r, .. } => (scheme.n_t(), *n_r),
            Link::OfdmIm { n_t, n_r, .. } | Link::Vblast { n_t, n_r, .. } => (*n_t, *n_r),
        }
    }

    pub fn bits_per_trial(&self) -> u64 {
        match self {
            Link::Spatial { scheme, .. } => scheme.bits_per_use() as u64,
            Link::OfdmIm { framer, n_t, .. } => (framer.frame_bits() * n_t) as u64,
            Link::Vblast { constellation, modem, n_t, .. } => (modem.n_f() * constellation.bits_per_symbol() * n_t) as u64,
        }
    }

    /// (mean transmitted energy, bits) per channel use, per transmit antenna.
    fn energy_and_rate(&self) -> (f64, f64) {
        match self {
            Link::Spatial { scheme, .. } => (1.0, scheme.bits_per_use() as f64),
            Link::OfdmIm { framer, modem, n_t, scale, .. } => {
                let uses = (modem.n_f() + modem.cp_len()) as f64;
                let e = framer.codec().energy_per_subcarrier() * scale * scale * *n_t as f64;
                (e, framer.frame_bits() as f64 * *n_t as f64 / uses)
            }
            Link::Vblast { constellation, modem, n_t, .. } => {
                let uses = (modem.n_f() + modem.cp_len()) as f64;
                (*n_t as f64, (modem.n_f() * constellation.bits_per_symbol() * n_t) as f64 / uses)
            }
        }
    }

    fn ebn0_db(&self, snr_db: f64) -> f64 {
        let (e, r) = self.energy_and_rate();
        snr_db + 10.0 * e.log10() - 10.0 * r.log10()
    }

    fn trial<R: Rng + ?Sized>(&self, noise: &NoiseSpec, rng: &mut R) -> Result<Tally> {
        let n0 = noise.n0;
        match self {
            Link::Spatial { scheme, codebook, n_r, detector } => {
                let b = bits::random(rng, scheme.bits_per_use());
                let cw = scheme.encode(&b)?;
                let h = FlatChannel::draw(*n_r, scheme.n_t(), rng);
                let y = apply_flat(&h, &cw.vector, noise, rng)?;
                let d = match (detector, codebook) {
                    (SpatialDetector::Ml, Some(book)) => detection::ml_spatial(&y, &h, book)?,
                    _ => detection::two_stage_sm(&y, &h, scheme)?,
                };
                Ok(Tally { trials: 1, errors: bits::hamming(&b, &d.bits) as u64, ..Tally::default() })
            }
            Link::OfdmIm { framer, modem, n_t, n_r, taps, detector, llr_mode, scale } => {
                let sent: Vec<Vec<u8>> = (0..*n_t).map(|_| bits::random(rng, framer.frame_bits())).collect();
                let mut tx = Vec::with_capacity(*n_t);
                for b in &sent {
                    let x: Vec<Complex<f64>> = framer.frame(b)?.x.into_iter().map(|v| v * scale).collect();
                    tx.push(modem.modulate(&x)?);
                }
                let ch = SelectiveChannel::draw(*n_r, *n_t, *taps, rng);
                let rx = apply_selective(&ch, &tx, noise, rng)?;
                let y: Vec<Vec<Complex<f64>>> = rx.iter().map(|s| modem.demodulate(s)).collect::<Result<_>>()?;
                let mut h = modem.channel_response(&ch);
                if *scale != 1.0 {
                    for m in &mut h {
                        for r in 0..m.rows() {
                            for t in 0..m.cols() {
                                m[(r, t)] = m[(r, t)] * scale;
                            }
                        }
                    }
                }
                let (contents, mut tally) = detect_ofdm_im(framer, &y, &h, n0, *detector, *llr_mode)?;
                for (t, b) in sent.iter().enumerate() {
                    let (got, illegal) = framer.deframe(&contents[t])?;
                    tally.errors += bits::hamming(b, &got) as u64;
                    tally.illegal += illegal as u64;
                }
                tally.trials = 1;
                Ok(tally)
            }
            Link::Vblast { constellation, modem, n_t, n_r, taps } => {
                let bps = constellation.bits_per_symbol();
                let n_f = modem.n_f();
                let sent: Vec<Vec<usize>> = (0..*n_t).map(|_| (0..n_f).map(|_| rng.random_range(0..constellation.order())).collect()).collect();
                let tx = sent
                    .iter()
                    .map(|labels| modem.modulate(&labels.iter().map(|&l| constellation.point(l)).collect::<Vec<_>>()))
                    .collect::<Result<Vec<_>>>()?;
                let ch = SelectiveChannel::draw(*n_r, *n_t, *taps, rng);
                let rx = apply_selective(&ch, &tx, noise, rng)?;
                let y: Vec<Vec<Complex<f64>>> = rx.iter().map(|s| modem.demodulate(s)).collect::<Result<_>>()?;
                let h = modem.channel_response(&ch);
                let mut tally = Tally { trials: 1, ..Tally::default() };
                for k in 0..n_f {
                    let yk: Vec<Complex<f64>> = y.iter().map(|v| v[k]).collect();
                    let (labels, reg) = detection::mmse_sic(&yk, &h[k], constellation, n0)?;
                    tally.regularized += reg as u64;
                    for t in 0..*n_t {
                        tally.errors += (labels[t] ^ sent[t][k]).count_ones() as u64;
                    }
                }
                debug_assert!(bps > 0);
                Ok(tally)
            }
        }
    }
}

/// Per-stream subblock decisions for one received OFDM-IM frame.
fn detect_ofdm_im(
    framer: &Framer<f64>,
    y: &[Vec<Complex<f64>>],
    h: &[CMatrix<f64>],
    n0: f64,
    detector: OfdmDetector,
    llr_mode: LlrMode,
) -> Result<(Vec<Vec<SubblockContent>>, Tally)> {
    let config = framer.config();
    let codec = framer.codec();
    let (n, g_count) = (config.n, config.g());
    let n_t = h[0].cols();
    let n_r = h[0].rows();
    let mut out: Vec<Vec<SubblockContent>> = vec![Vec::with_capacity(g_count); n_t];
    let mut tally = Tally::default();
    for g in 0..g_count {
        let idx: Vec<usize> = (0..n).map(|p| config.frame_position(g, p)).collect();
        if detector == OfdmDetector::MmseLlr {
            let ys: Vec<Vec<Complex<f64>>> = idx.iter().map(|&k| (0..n_r).map(|r| y[r][k]).collect()).collect();
            let hs: Vec<CMatrix<f64>> = idx.iter().map(|&k| h[k].clone()).collect();
            let d = if codec.variant() == OfdmVariant::Im {
                detection::mmse_llr_mimo(&ys, &hs, codec, n0, llr_mode)?
            } else {
                detection::mmse_ml_mimo(&ys, &hs, codec, n0)?
            };
            tally.regularized += d.regularized as u64;
            for (t, s) in d.streams.into_iter().enumerate() {
                tally.illegal += s.illegal_pattern as u64;
                out[t].push(s.content);
            }
        } else {
            // single stream: maximum-ratio combining is a sufficient statistic
            let mut z = Vec::with_capacity(n);
            let mut gain = Vec::with_capacity(n);
            for &k in &idx {
                let norm = (0..n_r).map(|r| h[k][(r, 0)].norm_sqr()).sum::<f64>().sqrt();
                let corr: Complex<f64> = (0..n_r).map(|r| h[k][(r, 0)].conj() * y[r][k]).sum();
                z.push(if norm > 0.0 { corr / norm } else { Complex::new(0.0, 0.0) });
                gain.push(Complex::new(norm, 0.0));
            }
            let d = match detector {
                OfdmDetector::Ml => detection::ml_subblock(&z, &gain, codec)?,
                _ => detection::llr_subblock_weighted(&z, &gain, &vec![n0.max(f64::MIN_POSITIVE); n], codec, llr_mode)?,
            };
            tally.illegal += d.illegal_pattern as u64;
            out[0].push(d.content);
        }
    }
    Ok((out, tally))
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.max_trials == 0 {
            return Err(usage("max_trials must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(usage("batch_size must be at least 1"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(usage("SNR grid values must be finite"));
        }
        if self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(usage("SNR grid must be strictly increasing"));
        }
        Ok(())
    }

    pub fn metadata(&self) -> Metadata {
        Metadata::for_link(&self.link)
    }

    fn batch_size(&self) -> u64 {
        self.batch_size.unwrap_or(match self.link {
            LinkSpec::Spatial { .. } => 4096,
            _ => 4,
        })
    }
}

fn batch_rng(seed: u64, snr_db: f64, batch: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&snr_db.to_bits().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(batch);
    rng
}

fn run_batch(link: &Link, exp: &Experiment, noise: &NoiseSpec, batch: u64, trials: u64) -> Result<Tally> {
    let mut rng = batch_rng(exp.seed, noise.snr_db, batch);
    let mut t = Tally::default();
    for _ in 0..trials {
        t = t + link.trial(noise, &mut rng)?;
    }
    Ok(t)
}

fn point(link: &Link, name: &str, exp: &Experiment, snr_db: f64) -> Result<BerRecord> {
    let start = Instant::now();
    let noise = NoiseSpec::from_snr_db(snr_db, 1.0);
    let noise = NoiseSpec { ebn0_db: link.ebn0_db(snr_db), ..noise };
    let size = exp.batch_size();
    let mut total = Tally::default();
    let mut next_batch = 0u64;
    while total.errors < exp.min_errors && total.trials < exp.max_trials {
        let remaining = exp.max_trials - total.trials;
        let jobs: Vec<(u64, u64)> = (0..ROUND_BATCHES)
            .map(|i| (next_batch + i, size.min(remaining.saturating_sub(i * size))))
            .filter(|&(_, n)| n > 0)
            .collect();
        next_batch += ROUND_BATCHES;
        let tallies = jobs.par_iter().map(|&(b, n)| run_batch(link, exp, &noise, b, n)).collect::<Result<Vec<_>>>()?;
        total = tallies.into_iter().fold(total, |a, b| a + b);
    }
    let bits_per_trial = link.bits_per_trial();
    let n_bits = (total.trials * bits_per_trial) as f64;
    let ber = if n_bits > 0.0 { total.errors as f64 / n_bits } else { 0.0 };
    let stderr = if n_bits > 0.0 { (ber * (1.0 - ber) / n_bits).sqrt() } else { 0.0 };
    let (n_t, n_r) = link.dims();
    Ok(BerRecord {
        scheme: name.to_string(),
        n_t,
        n_r,
        snr_db,
        ebn0_db: noise.ebn0_db,
        trials: total.trials,
        bits_per_trial,
        bit_errors: total.errors,
        ber,
        stderr,
        illegal_patterns: total.illegal,
        below_resolution: total.errors == 0,
        regularized: total.regularized,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Worker pool honoring `IMPHY_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("IMPHY_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| usage(format!("IMPHY_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(usage("IMPHY_THREADS must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Usage(format!("thread pool: {e}")))
}

pub fn run_point(exp: &Experiment, snr_db: f64) -> Result<BerRecord> {
    exp.validate()?;
    let link = Link::build(&exp.link)?;
    let name = link.name(&exp.link);
    thread_pool()?.install(|| point(&link, &name, exp, snr_db))
}

/// One record per grid point, in grid order.
pub fn run_sweep(exp: &Experiment) -> Result<Vec<BerRecord>> {
    exp.validate()?;
    let link = Link::build(&exp.link)?;
    let name = link.name(&exp.link);
    thread_pool()?.install(|| exp.snr_db.par_iter().map(|&s| point(&link, &name, exp, s)).collect())
}

/// Bits carried by one trial of the experiment's link.
pub fn bits_per_trial(link: &LinkSpec) -> Result<u64> {
    Ok(Link::build(link)?.bits_per_trial())
}

pub fn scheme_name(link: &LinkSpec) -> Result<String> {
    Ok(Link::build(link)?.name(link))
}

pub fn write_csv<W: Write>(mut w: W, records: &[BerRecord], timing: bool) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.n_t,
            r.n_r,
            sig12(r.snr_db),
            sig12(r.ebn0_db),
            r.trials,
            r.bit_errors,
            sig12(r.ber),
            sig12(r.stderr),
            r.illegal_patterns,
            if timing { sig12(r.seconds) } else { "0".to_string() },
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub config: &'a C,
    pub experiments: Vec<ManifestEntry<'a>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry<'a> {
    pub experiment: &'a Experiment,
    pub metadata: Metadata,
    pub records: &'a [BerRecord],
}

/// Closed-form BER of BPSK over flat Rayleigh fading at mean SNR `gamma`.
pub fn rayleigh_bpsk_ber(gamma: f64) -> f64 {
    0.5 * (1.0 - (gamma / (1.0 + gamma)).sqrt())
}

/// SNR grid of the MIMO-OFDM-IM comparison: 0 to 24 dB in 4 dB steps.
pub fn fig6_grid() -> Vec<f64> {
    (0..=6).map(|i| 4.0 * i as f64).collect()
}

/// Parameters of the MIMO-OFDM-IM comparison: BPSK, N = 4, K = 2,
/// N_F = 512, CP 16, 10 uniform taps, successive MMSE detection.
pub fn fig6_experiments(n: usize, snr_db: Vec<f64>, max_trials: u64, seed: u64, interleave: bool) -> Vec<Experiment> {
    let config = OfdmImConfig::im(512, 4, 2, 2).with_cp(16).with_interleave(interleave);
    let im = Experiment {
        name: format!("fig6-{n}x{n}-ofdm-im"),
        link: LinkSpec::OfdmIm {
            config,
            n_t: n,
            n_r: n,
            taps: 10,
            detector: OfdmDetector::MmseLlr,
            llr_mode: LlrMode::ExactLog,
            power: PowerNormalization::ActiveUnit,
        },
        snr_db: snr_db.clone(),
        max_trials,
        min_errors: 100,
        seed,
        batch_size: None,
        timing: false,
    };
    let baseline = Experiment {
        name: format!("fig6-{n}x{n}-vblast-ofdm"),
        link: LinkSpec::VblastOfdm { n_f: 512, cp_len: 16, m: 2, constellation: None, n_t: n, n_r: n, taps: 10 },
        ..im.clone()
    };
    vec![im, baseline]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::SchemeKind;

    fn siso(snr: Vec<f64>, max_trials: u64, seed: u64) -> Experiment {
        Experiment {
            name: "siso".into(),
            link: LinkSpec::Spatial { scheme: SchemeSpec::new(SchemeKind::Simo, 1, 2), n_r: 1, detector: SpatialDetector::Ml },
            snr_db: snr,
            max_trials,
            min_errors: 100,
            seed,
            batch_size: None,
            timing: false,
        }
    }

    #[test]
    fn validation() {
        assert!(siso(vec![0.0, 0.0], 10, 0).validate().is_err());
        assert!(siso(vec![1.0], 0, 0).validate().is_err());
        assert!(run_sweep(&siso(vec![], 10, 0)).unwrap().is_empty());
    }

    #[test]
    fn seeds_key_on_snr_value() {
        let a = batch_rng(3, 10.0, 0).random::<u64>();
        assert_eq!(a, batch_rng(3, 10.0, 0).random::<u64>());
        assert_ne!(a, batch_rng(3, 10.0, 1).random::<u64>());
        assert_ne!(a, batch_rng(3, 12.0, 0).random::<u64>());
        assert_ne!(a, batch_rng(4, 10.0, 0).random::<u64>());
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let exp = siso(vec![5.0], 50_000, 11);
        let a = run_point(&exp, 5.0).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| {
            let link = Link::build(&exp.link).unwrap();
            point(&link, "simo-nt1-psk2", &exp, 5.0).unwrap()
        });
        assert_eq!((a.trials, a.bit_errors), (b.trials, b.bit_errors));
        assert_eq!(a.scheme, "simo-nt1-psk2");
    }

    #[test]
    fn max_trials_caps_and_flags() {
        let r = run_point(&siso(vec![200.0], 1000, 0), 200.0).unwrap();
        assert_eq!(r.trials, 1000);
        assert_eq!(r.bit_errors, 0);
        assert!(r.below_resolution);
    }

    #[test]
    fn csv_header_and_zero_seconds() {
        let r = run_point(&siso(vec![0.0], 100, 0), 0.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[r], false).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with(CSV_HEADER));
        assert!(s.trim_end().ends_with(",0"));
    }

    #[test]
    fn ofdm_bits_per_trial() {
        let exps = fig6_experiments(2, vec![10.0], 1, 0, true);
        assert_eq!(bits_per_trial(&exps[0].link).unwrap(), 1024);
        assert_eq!(bits_per_trial(&exps[1].link).unwrap(), 1024);
        assert_eq!(scheme_name(&exps[0].link).unwrap(), "mimo-ofdm-im-n4k2-psk2-il");
    }

    #[test]
    fn bad_links_rejected() {
        let mut exp = fig6_experiments(2, vec![10.0], 1, 0, false).remove(0);
        if let LinkSpec::OfdmIm { detector, .. } = &mut exp.link {
            *detector = OfdmDetector::Llr;
        }
        assert!(run_sweep(&exp).is_err());
        if let LinkSpec::OfdmIm { detector, taps, .. } = &mut exp.link {
            *detector = OfdmDetector::MmseLlr;
            *taps = 40;
        }
        assert!(run_sweep(&exp).is_err());
    }

    #[test]
    fn noiseless_loopback_all_links() {
        let n0_snr = 120.0;
        let mut links = vec![
            LinkSpec::Spatial { scheme: SchemeSpec::new(SchemeKind::Qsm, 2, 4), n_r: 2, detector: SpatialDetector::Ml },
            LinkSpec::Spatial { scheme: SchemeSpec::new(SchemeKind::Sm, 4, 8), n_r: 2, detector: SpatialDetector::TwoStage },
        ];
        for variant in [OfdmVariant::Im, OfdmVariant::GimI] {
            let config = OfdmImConfig::im(64, 4, 2, 2).with_variant(variant).with_cp(4);
            for (detector, n_t) in [(OfdmDetector::Ml, 1), (OfdmDetector::MmseLlr, 2)] {
                links.push(LinkSpec::OfdmIm {
                    config: config.clone(),
                    n_t,
                    n_r: 2,
                    taps: 3,
                    detector,
                    llr_mode: LlrMode::ExactLog,
                    power: PowerNormalization::Frame,
                });
            }
        }
        links.push(LinkSpec::VblastOfdm { n_f: 64, cp_len: 4, m: 4, constellation: None, n_t: 2, n_r: 2, taps: 3 });
        for link in links {
            let exp = Experiment { link, batch_size: Some(8), ..siso(vec![n0_snr], 64, 1) };
            let r = run_point(&exp, n0_snr).unwrap();
            assert_eq!(r.bit_errors, 0, "{}", r.scheme);
        }
    }
}

//! Receivers: joint ML over spatial codebooks, the two-stage SM detector,
//! per-subblock ML and LLR detection for OFDM-IM, and successive MMSE
//! detection for MIMO-OFDM(-IM).
//!
//! All detectors are deterministic; ties always resolve to the lowest index.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::channel::FlatChannel;
use crate::combinatorics::ActivationPattern;
use crate::constellation::Constellation;
use crate::error::usage;
use crate::linalg::CMatrix;
use crate::ofdm::{OfdmVariant, RailContent, SubblockCodec, SubblockContent};
use crate::spatial::{SchemeKind, SpatialCodeword, SpatialScheme};
use crate::{Real, Result};

/// Diagonal loading used when the MMSE Gram matrix is numerically singular.
const REGULARIZATION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Decision<T> {
    pub bits: Vec<u8>,
    /// Codeword index for ML; antenna index for the two-stage detector.
    pub index: usize,
    pub metric: T,
    /// Stage-1 statistic per antenna (two-stage SM only).
    pub branch_metrics: Option<Vec<T>>,
}

/// Counts real multiplications performed by an instrumented detector run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MulCounter {
    pub real_mults: u64,
    /// Candidate hypotheses whose metric was evaluated.
    pub candidates: u64,
}

impl MulCounter {
    fn cmul(&mut self, n: u64) {
        self.real_mults += 4 * n;
    }

    fn norm(&mut self, n: u64) {
        self.real_mults += 2 * n;
    }
}

/// Joint ML detection: `argmin_x ‖y − Hx‖²` over the codebook.
pub fn ml_spatial<T: Real>(y: &[Complex<T>], h: &FlatChannel<T>, codebook: &[SpatialCodeword<T>]) -> Result<Decision<T>> {
    ml_spatial_counted(y, h, codebook, &mut MulCounter::default())
}

pub fn ml_spatial_counted<T: Real>(
    y: &[Complex<T>],
    h: &FlatChannel<T>,
    codebook: &[SpatialCodeword<T>],
    counter: &mut MulCounter,
) -> Result<Decision<T>> {
    if codebook.is_empty() {
        return Err(usage("empty codebook"));
    }
    if y.len() != h.n_r() || codebook[0].vector.len() != h.n_t() {
        return Err(usage("received vector, channel and codebook dimensions disagree"));
    }
    let n_r = h.n_r();
    let mut residual = vec![Complex::new(T::zero(), T::zero()); n_r];
    let mut best = (0usize, T::infinity());
    for (i, cw) in codebook.iter().enumerate() {
        residual.copy_from_slice(y);
        for t in cw.active.positions() {
            let x = cw.vector[*t];
            for (r, v) in residual.iter_mut().enumerate() {
                *v = *v - h.gain(r, *t) * x;
            }
            counter.cmul(n_r as u64);
        }
        let d = residual.iter().map(|v| v.norm_sqr()).fold(T::zero(), |a, b| a + b);
        counter.norm(n_r as u64);
        counter.candidates += 1;
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(Decision { bits: codebook[best.0].bits.clone(), index: best.0, metric: best.1, branch_metrics: None })
}

/// Two-stage SM detector: the antenna maximizing `|h_nᴴ y| / ‖h_n‖`, then
/// M-ary ML on that antenna alone.
pub fn two_stage_sm<T: Real>(y: &[Complex<T>], h: &FlatChannel<T>, scheme: &SpatialScheme<T>) -> Result<Decision<T>> {
    two_stage_sm_counted(y, h, scheme, &mut MulCounter::default())
}

pub fn two_stage_sm_counted<T: Real>(
    y: &[Complex<T>],
    h: &FlatChannel<T>,
    scheme: &SpatialScheme<T>,
    counter: &mut MulCounter,
) -> Result<Decision<T>> {
    if scheme.kind() != SchemeKind::Sm {
        return Err(usage(format!("two-stage detection needs SM, got {}", scheme.kind().name())));
    }
    if y.len() != h.n_r() || h.n_t() != scheme.n_t() {
        return Err(usage("received vector, channel and scheme dimensions disagree"));
    }
    let n_r = h.n_r();
    let stats: Vec<T> = (0..h.n_t())
        .map(|t| {
            let mut corr = Complex::new(T::zero(), T::zero());
            let mut energy = T::zero();
            for (r, v) in y.iter().enumerate() {
                let g = h.gain(r, t);
                corr = corr + g.conj() * v;
                energy = energy + g.norm_sqr();
            }
            counter.cmul(n_r as u64);
            counter.norm(n_r as u64 + 1);
            counter.candidates += 1;
            corr.norm() / energy.sqrt()
        })
        .collect();
    let antenna = stats.iter().enumerate().fold(0, |best, (t, s)| if *s > stats[best] { t } else { best });
    let c = scheme.constellation();
    let mut best = (0usize, T::infinity());
    for (label, s) in c.points().iter().enumerate() {
        let d = y.iter().enumerate().map(|(r, v)| (v - h.gain(r, antenna) * s).norm_sqr()).fold(T::zero(), |a, b| a + b);
        counter.cmul(n_r as u64);
        counter.norm(n_r as u64);
        counter.candidates += 1;
        if d < best.1 {
            best = (label, d);
        }
    }
    let mut out = bits::from_u64(antenna as u64, scheme.spatial_bits());
    bits::push_u64(&mut out, best.0 as u64, c.bits_per_symbol());
    Ok(Decision { bits: out, index: antenna, metric: best.1, branch_metrics: Some(stats) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LlrMode {
    #[default]
    ExactLog,
    MaxLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubblockDecision<T> {
    pub content: SubblockContent,
    pub bits: Vec<u8>,
    pub metric: T,
    pub illegal_pattern: bool,
}

/// Per-subblock ML: `argmin Σ_n |y_n − h_n x_n|²` over all `2^p` realizations.
pub fn ml_subblock<T: Real>(y: &[Complex<T>], h: &[Complex<T>], codec: &SubblockCodec<T>) -> Result<SubblockDecision<T>> {
    ml_subblock_weighted(y, h, None, codec)
}

/// ML with an optional per-subcarrier noise variance (metric terms divided by it).
pub fn ml_subblock_weighted<T: Real>(
    y: &[Complex<T>],
    h: &[Complex<T>],
    noise_var: Option<&[T]>,
    codec: &SubblockCodec<T>,
) -> Result<SubblockDecision<T>> {
    check_subblock_dims(y, h, codec)?;
    let all = codec.realizations().ok_or_else(|| usage("subblock codebook too large for exhaustive ML"))?;
    let mut best = (0usize, T::infinity());
    for (i, x) in all.iter().enumerate() {
        let mut d = T::zero();
        for n in 0..y.len() {
            let e = (y[n] - h[n] * x[n]).norm_sqr();
            d = d + noise_var.map_or(e, |v| e / v[n]);
        }
        if d < best.1 {
            best = (i, d);
        }
    }
    let b = bits::from_u64(best.0 as u64, codec.bits());
    let content = codec.content_of(&b)?;
    Ok(SubblockDecision { content, bits: b, metric: best.1, illegal_pattern: false })
}

fn check_subblock_dims<T: Real>(y: &[Complex<T>], h: &[Complex<T>], codec: &SubblockCodec<T>) -> Result<()> {
    if y.len() != codec.n() || h.len() != codec.n() {
        return Err(usage(format!("subblock has {} subcarriers, got y: {}, h: {}", codec.n(), y.len(), h.len())));
    }
    Ok(())
}

fn log_sum_exp<T: Real>(xs: impl Iterator<Item = T>, mode: LlrMode) -> T {
    let xs: Vec<T> = xs.collect();
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    match mode {
        LlrMode::MaxLog => max,
        LlrMode::ExactLog => max + xs.iter().map(|&x| (x - max).exp()).fold(T::zero(), |a, b| a + b).ln(),
    }
}

/// Active-status log-likelihood ratios
/// `λ(n) = ln(K/(N−K)) + |y_n|²/v_n + ln Σ_s exp(−|y_n − g_n s|²/v_n)`.
pub fn llr_values<T: Real>(
    y: &[Complex<T>],
    gain: &[Complex<T>],
    noise_var: &[T],
    k: usize,
    constellation: &Constellation<T>,
    mode: LlrMode,
) -> Vec<T> {
    let n = y.len();
    let prior = if k >= n {
        T::infinity()
    } else {
        (T::from_usize(k).unwrap() / T::from_usize(n - k).unwrap()).ln()
    };
    (0..n)
        .map(|i| {
            let v = noise_var[i];
            let lse = log_sum_exp(constellation.points().iter().map(|s| -(y[i] - gain[i] * s).norm_sqr() / v), mode);
            prior + y[i].norm_sqr() / v + lse
        })
        .collect()
}

/// Positions of the `k` largest values, ties to the lower index, ascending.
pub fn largest_k<T: Real>(values: &[T], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut top = idx[..k].to_vec();
    top.sort_unstable();
    top
}

/// Near-optimal LLR detector for fixed-K OFDM-IM subblocks.
pub fn llr_subblock<T: Real>(
    y: &[Complex<T>],
    h: &[Complex<T>],
    codec: &SubblockCodec<T>,
    n0: T,
    mode: LlrMode,
) -> Result<SubblockDecision<T>> {
    if n0 <= T::zero() {
        return Err(usage("LLR detection needs N0 > 0"));
    }
    llr_subblock_weighted(y, h, &vec![n0; y.len()], codec, mode)
}

/// LLR detection with per-subcarrier effective gains and noise variances.
///
/// If the K most likely positions form a pattern outside the selector's
/// codebook, the legal pattern with the largest `Σ λ` is used instead and
/// the decision is flagged.
pub fn llr_subblock_weighted<T: Real>(
    y: &[Complex<T>],
    gain: &[Complex<T>],
    noise_var: &[T],
    codec: &SubblockCodec<T>,
    mode: LlrMode,
) -> Result<SubblockDecision<T>> {
    check_subblock_dims(y, gain, codec)?;
    if codec.variant() != OfdmVariant::Im {
        return Err(usage("LLR detection is defined for fixed-K OFDM-IM subblocks"));
    }
    if noise_var.len() != y.len() || noise_var.iter().any(|v| *v <= T::zero()) {
        return Err(usage("noise variances must be positive, one per subcarrier"));
    }
    let sel = codec.selector().expect("IM codec has a selector");
    let c = codec.constellation();
    let lambda = llr_values(y, gain, noise_var, codec.k(), c, mode);
    let mut pattern = ActivationPattern::new(codec.n(), largest_k(&lambda, codec.k()))?;
    let illegal = sel.index_of(&pattern).is_none();
    if illegal {
        let legal = sel.patterns().ok_or_else(|| usage("selector too large for pattern repair"))?;
        let score = |p: &ActivationPattern| p.positions().iter().map(|&i| lambda[i]).fold(T::zero(), |a, b| a + b);
        let mut best = (0usize, T::neg_infinity());
        for (i, p) in legal.iter().enumerate() {
            let s = score(p);
            if s > best.1 {
                best = (i, s);
            }
        }
        pattern = legal[best.0].clone();
    }
    let mut metric = T::zero();
    let mut labels = Vec::with_capacity(codec.k());
    for i in 0..codec.n() {
        if pattern.contains(i) {
            let (l, d) = c.nearest(y[i], gain[i]);
            labels.push(l);
            metric = metric + d / noise_var[i];
        } else {
            metric = metric + y[i].norm_sqr() / noise_var[i];
        }
    }
    let content = SubblockContent { rails: vec![RailContent { pattern, labels }] };
    let b = codec.bits_of(&content).expect("repaired pattern is legal");
    Ok(SubblockDecision { content, bits: b, metric, illegal_pattern: illegal })
}

/// Linear MMSE filter rows for the listed streams, with effective gain and
/// post-filter noise-plus-interference variance per stream.
struct MmseStage<T> {
    /// `w[j]` filters stream `active[j]`.
    w: Vec<Vec<Complex<T>>>,
    gain: Vec<Complex<T>>,
    var: Vec<T>,
    regularized: bool,
}

fn mmse_stage<T: Real>(h: &CMatrix<T>, active: &[usize], n0: T, es: T) -> MmseStage<T> {
    let hs = h.select_columns(active);
    let hh = hs.adjoint();
    let mut gram = hh.matmul(&hs);
    let load = n0 / es;
    gram.add_diagonal(load);
    let tiny = T::epsilon() * T::lit(16.0);
    let (filter, regularized) = match gram.solve(&hh, tiny) {
        Some(f) => (f, false),
        None => {
            gram.add_diagonal(T::lit(REGULARIZATION_FLOOR) - load.min(T::lit(REGULARIZATION_FLOOR)));
            (gram.solve(&hh, T::zero()).expect("regularized Gram matrix is invertible"), true)
        }
    };
    let n_r = h.rows();
    let cols: Vec<Vec<Complex<T>>> = (0..active.len()).map(|j| hs.column(j)).collect();
    let dot = |w: &[Complex<T>], v: &[Complex<T>]| {
        w.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |a, (x, y)| a + x * y)
    };
    let mut w_rows = Vec::with_capacity(active.len());
    let mut gain = Vec::with_capacity(active.len());
    let mut var = Vec::with_capacity(active.len());
    for j in 0..active.len() {
        let w: Vec<Complex<T>> = (0..n_r).map(|r| filter[(j, r)]).collect();
        let g = dot(&w, &cols[j]);
        let interference = (0..active.len())
            .filter(|&i| i != j)
            .map(|i| dot(&w, &cols[i]).norm_sqr())
            .fold(T::zero(), |a, b| a + b);
        let wn = w.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
        let v = (es * interference + n0 * wn).max(T::min_positive_value().sqrt());
        w_rows.push(w);
        gain.push(g);
        var.push(v);
    }
    MmseStage { w: w_rows, gain, var, regularized }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoSubblockDecision<T> {
    /// One decision per transmit antenna, in antenna order.
    pub streams: Vec<SubblockDecision<T>>,
    /// Order in which antennas were detected.
    pub order: Vec<usize>,
    /// Filter inversions that needed the regularization floor.
    pub regularized: usize,
}

/// Successive MMSE detection of one subblock position across all transmit
/// antennas of a MIMO-OFDM-IM link, with LLR detection per stream.
///
/// `y[n]` is the `n_r`-vector received on the n-th subcarrier of the
/// subblock and `h[n]` its `n_r × n_t` channel. At each stage the stream
/// with the highest harmonic-mean post-filter SINR is detected from the filter
/// output `z = wᴴy`, using the effective gain `wᴴh_t` and variance
/// `Es Σ_{j≠t} |wᴴh_j|² + N0 ‖w‖²`; its reconstruction is then subtracted.
pub fn mmse_llr_mimo<T: Real>(
    y: &[Vec<Complex<T>>],
    h: &[CMatrix<T>],
    codec: &SubblockCodec<T>,
    n0: T,
    mode: LlrMode,
) -> Result<MimoSubblockDecision<T>> {
    successive_mmse(y, h, codec, n0, |z, g, v| llr_subblock_weighted(z, g, v, codec, mode))
}

/// Same as [`mmse_llr_mimo`] with per-stream ML subblock decisions on the
/// filter outputs; used for variants without an LLR rule.
pub fn mmse_ml_mimo<T: Real>(
    y: &[Vec<Complex<T>>],
    h: &[CMatrix<T>],
    codec: &SubblockCodec<T>,
    n0: T,
) -> Result<MimoSubblockDecision<T>> {
    successive_mmse(y, h, codec, n0, |z, g, v| ml_subblock_weighted(z, g, Some(v), codec))
}

fn successive_mmse<T: Real>(
    y: &[Vec<Complex<T>>],
    h: &[CMatrix<T>],
    codec: &SubblockCodec<T>,
    n0: T,
    mut detect: impl FnMut(&[Complex<T>], &[Complex<T>], &[T]) -> Result<SubblockDecision<T>>,
) -> Result<MimoSubblockDecision<T>> {
    let n = codec.n();
    if y.len() != n || h.len() != n {
        return Err(usage(format!("subblock has {n} subcarriers, got {} observations and {} channels", y.len(), h.len())));
    }
    if n0 < T::zero() {
        return Err(usage("N0 must be non-negative"));
    }
    let n_t = h[0].cols();
    let n_r = h[0].rows();
    if y.iter().any(|v| v.len() != n_r) || h.iter().any(|m| m.rows() != n_r || m.cols() != n_t) {
        return Err(usage("inconsistent MIMO dimensions"));
    }
    let es = codec.energy_per_subcarrier();
    let mut work: Vec<Vec<Complex<T>>> = y.to_vec();
    let mut remaining: Vec<usize> = (0..n_t).collect();
    let mut decided: Vec<Option<SubblockDecision<T>>> = vec![None; n_t];
    let mut order = Vec::with_capacity(n_t);
    let mut regularized = 0;
    while !remaining.is_empty() {
        let stages: Vec<MmseStage<T>> = h.iter().map(|m| mmse_stage(m, &remaining, n0, es)).collect();
        regularized += stages.iter().filter(|s| s.regularized).count();
        // harmonic mean over the subblock: the weakest subcarrier dominates errors
        let mean_sinr = |j: usize| {
            stages.iter().map(|s| s.var[j] / (es * s.gain[j].norm_sqr())).fold(T::zero(), |a, b| a + b).recip()
        };
        let mut pick = 0;
        for j in 1..remaining.len() {
            if mean_sinr(j) > mean_sinr(pick) {
                pick = j;
            }
        }
        let antenna = remaining[pick];
        let z: Vec<Complex<T>> = (0..n)
            .map(|i| stages[i].w[pick].iter().zip(&work[i]).fold(Complex::new(T::zero(), T::zero()), |a, (w, v)| a + w * v))
            .collect();
        let g: Vec<Complex<T>> = stages.iter().map(|s| s.gain[pick]).collect();
        let v: Vec<T> = stages.iter().map(|s| s.var[pick]).collect();
        let d = detect(&z, &g, &v)?;
        let xhat = codec.values(&d.content);
        for i in 0..n {
            if xhat[i].norm_sqr() == T::zero() {
                continue;
            }
            for r in 0..n_r {
                work[i][r] = work[i][r] - h[i][(r, antenna)] * xhat[i];
            }
        }
        decided[antenna] = Some(d);
        order.push(antenna);
        remaining.remove(pick);
    }
    Ok(MimoSubblockDecision { streams: decided.into_iter().map(Option::unwrap).collect(), order, regularized })
}

/// Successive MMSE with hard symbol decisions for one subcarrier of a
/// V-BLAST-OFDM link. Returns one label per transmit antenna and the number
/// of regularized inversions.
pub fn mmse_sic<T: Real>(y: &[Complex<T>], h: &CMatrix<T>, constellation: &Constellation<T>, n0: T) -> Result<(Vec<usize>, usize)> {
    if y.len() != h.rows() {
        return Err(usage("received vector and channel dimensions disagree"));
    }
    let es = T::one();
    let mut work = y.to_vec();
    let mut remaining: Vec<usize> = (0..h.cols()).collect();
    let mut labels = vec![0; h.cols()];
    let mut regularized = 0;
    while !remaining.is_empty() {
        let s = mmse_stage(h, &remaining, n0, es);
        regularized += s.regularized as usize;
        let mut pick = 0;
        for j in 1..remaining.len() {
            if s.gain[j].norm_sqr() / s.var[j] > s.gain[pick].norm_sqr() / s.var[pick] {
                pick = j;
            }
        }
        let antenna = remaining[pick];
        let z = s.w[pick].iter().zip(&work).fold(Complex::new(T::zero(), T::zero()), |a, (w, v)| a + w * v);
        let (label, _) = constellation.nearest(z, s.gain[pick]);
        let x = constellation.point(label);
        for (r, v) in work.iter_mut().enumerate() {
            *v = *v - h[(r, antenna)] * x;
        }
        labels[antenna] = label;
        remaining.remove(pick);
    }
    Ok((labels, regularized))
}

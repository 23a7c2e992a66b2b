//! Rayleigh fading channels and additive noise.
//!
//! All randomness is drawn from a caller-supplied generator so a fixed seed
//! reproduces every realization exactly.

use num_complex::Complex;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::usage;
use crate::linalg::CMatrix;
use crate::{Real, Result};

/// One `CN(0, variance)` sample.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    let sd = (variance / T::lit(2.0)).sqrt();
    let re = T::standard_normal(rng);
    let im = T::standard_normal(rng);
    Complex::new(re * sd, im * sd)
}

/// Flat Rayleigh channel, `n_r × n_t`, i.i.d. `CN(0,1)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatChannel<T> {
    h: CMatrix<T>,
}

impl<T: Real> FlatChannel<T> {
    pub fn draw<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> Self {
        let data = (0..n_r * n_t).map(|_| complex_normal(rng, T::one())).collect();
        Self { h: CMatrix::from_vec(n_r, n_t, data) }
    }

    pub fn from_matrix(h: CMatrix<T>) -> Self {
        Self { h }
    }

    pub fn identity(n: usize) -> Self {
        Self { h: CMatrix::identity(n) }
    }

    pub fn n_r(&self) -> usize {
        self.h.rows()
    }

    pub fn n_t(&self) -> usize {
        self.h.cols()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.h
    }

    pub fn gain(&self, r: usize, t: usize) -> Complex<T> {
        self.h[(r, t)]
    }
}

/// Frequency-selective Rayleigh channel with a uniform power delay profile:
/// every tap of every antenna pair is `CN(0, 1/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveChannel<T> {
    n_r: usize,
    n_t: usize,
    /// `taps[r * n_t + t]` is the impulse response from `t` to `r`.
    taps: Vec<Vec<Complex<T>>>,
}

impl<T: Real> SelectiveChannel<T> {
    pub fn draw<R: Rng + ?Sized>(n_r: usize, n_t: usize, taps: usize, rng: &mut R) -> Self {
        assert!(taps >= 1, "a channel needs at least one tap");
        let var = T::from_usize(taps).unwrap().recip();
        let taps = (0..n_r * n_t).map(|_| (0..taps).map(|_| complex_normal(rng, var)).collect()).collect();
        Self { n_r, n_t, taps }
    }

    pub fn from_taps(n_r: usize, n_t: usize, taps: Vec<Vec<Complex<T>>>) -> Result<Self> {
        if taps.len() != n_r * n_t || taps.iter().any(|t| t.is_empty()) {
            return Err(usage("need one non-empty impulse response per antenna pair"));
        }
        Ok(Self { n_r, n_t, taps })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn len(&self) -> usize {
        self.taps.iter().map(|t| t.len()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn taps(&self, r: usize, t: usize) -> &[Complex<T>] {
        &self.taps[r * self.n_t + t]
    }

    /// Per-subcarrier `n_r × n_t` gain matrices `H_k = Σ_l h_l e^{-j2πkl/n}`,
    /// using a forward FFT of the required length.
    pub fn frequency_response_with(&self, fft: &dyn Fft<T>) -> Vec<CMatrix<T>> {
        let n = fft.len();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![CMatrix::zeros(self.n_r, self.n_t); n];
        let mut buf = vec![zero; n];
        for r in 0..self.n_r {
            for t in 0..self.n_t {
                buf.fill(zero);
                let h = self.taps(r, t);
                assert!(h.len() <= n, "channel longer than the transform");
                buf[..h.len()].copy_from_slice(h);
                fft.process(&mut buf);
                for (k, v) in buf.iter().enumerate() {
                    out[k][(r, t)] = *v;
                }
            }
        }
        out
    }

    pub fn frequency_response(&self, n: usize) -> Vec<CMatrix<T>> {
        let fft = FftPlanner::new().plan_fft_forward(n);
        self.frequency_response_with(fft.as_ref())
    }
}

/// Noise level and the SNR bookkeeping that produced it.
///
/// `snr_db` is the average energy of one unit-energy transmitted symbol (or
/// one unit-energy codeword) at a receive antenna over `n0`; `ebn0_db`
/// subtracts `10 log10` of the bits carried per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n0: f64,
    pub snr_db: f64,
    pub ebn0_db: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64, bits_per_channel_use: f64) -> Self {
        Self { n0: 10f64.powf(-snr_db / 10.0), snr_db, ebn0_db: snr_db - 10.0 * bits_per_channel_use.log10() }
    }

    pub fn from_n0(n0: f64) -> Self {
        let snr_db = -10.0 * n0.log10();
        Self { n0, snr_db, ebn0_db: snr_db }
    }

    pub fn n0<T: Real>(&self) -> T {
        T::lit(self.n0)
    }
}

/// `y = Hx + w` with `w ~ CN(0, n0 I)`.
pub fn apply_flat<T: Real, R: Rng + ?Sized>(
    ch: &FlatChannel<T>,
    x: &[Complex<T>],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    if x.len() != ch.n_t() {
        return Err(usage(format!("channel has {} inputs, signal has {}", ch.n_t(), x.len())));
    }
    let n0 = noise.n0::<T>();
    let mut y = ch.h.matvec(x);
    for v in &mut y {
        *v = *v + complex_normal(rng, n0);
    }
    Ok(y)
}

/// Linear convolution of each transmit stream with its impulse responses,
/// summed per receive antenna, plus noise. Outputs keep the input length;
/// the convolution tail spilling past the block is dropped.
pub fn apply_selective<T: Real, R: Rng + ?Sized>(
    ch: &SelectiveChannel<T>,
    tx: &[Vec<Complex<T>>],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Vec<Complex<T>>>> {
    if tx.len() != ch.n_t {
        return Err(usage(format!("channel has {} inputs, got {} streams", ch.n_t, tx.len())));
    }
    let len = tx.first().map_or(0, |s| s.len());
    if tx.iter().any(|s| s.len() != len) {
        return Err(usage("transmit streams differ in length"));
    }
    let n0 = noise.n0::<T>();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![vec![zero; len]; ch.n_r];
    for (r, y) in out.iter_mut().enumerate() {
        for (t, s) in tx.iter().enumerate() {
            let h = ch.taps(r, t);
            for (n, v) in y.iter_mut().enumerate() {
                let mut acc = zero;
                for (l, g) in h.iter().enumerate().take(n + 1) {
                    acc = acc + g * s[n - l];
                }
                *v = *v + acc;
            }
        }
        for v in y.iter_mut() {
            *v = *v + complex_normal(rng, n0);
        }
    }
    Ok(out)
}

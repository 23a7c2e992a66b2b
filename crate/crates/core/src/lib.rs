//! Index-modulation link-level simulation.
//!
//! Transmitters, receivers and analysis tools for spatial modulation (SM) and
//! its generalizations (GSM, MA-SM, ESM, QSM), and for OFDM with index
//! modulation (OFDM-IM, OFDM-GIM-I/II, MIMO-OFDM-IM). Everything numeric is
//! generic over [`Real`] (`f32` or `f64`); the `*64` aliases at the bottom of
//! this file are what the harness and the CLI use.

pub mod analysis;
pub mod bits;
pub mod channel;
pub mod combinatorics;
pub mod constellation;
pub mod detection;
pub mod fmt;
mod error;
pub mod harness;
pub mod linalg;
pub mod ofdm;
pub mod spatial;

pub use error::{Error, Result};

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Scalar type the simulation is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + rustfft::FftNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when matching noiseless vectors back to codewords.
    const MATCH_TOL: f64;

    /// Draws one standard normal sample.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const MATCH_TOL: f64 = 1e-9;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    const MATCH_TOL: f64 = 1e-4;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Complex baseband sample.
pub type C<T> = Complex<T>;

pub type Constellation64 = constellation::Constellation<f64>;
pub type SpatialScheme64 = spatial::SpatialScheme<f64>;
pub type SpatialCodeword64 = spatial::SpatialCodeword<f64>;
pub type EsmTable64 = spatial::EsmTable<f64>;
pub type FlatChannel64 = channel::FlatChannel<f64>;
pub type SelectiveChannel64 = channel::SelectiveChannel<f64>;
pub type SubblockCodec64 = ofdm::SubblockCodec<f64>;
pub type OfdmModem64 = ofdm::OfdmModem<f64>;

pub type Constellation32 = constellation::Constellation<f32>;
pub type SpatialScheme32 = spatial::SpatialScheme<f32>;

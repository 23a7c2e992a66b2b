//! PSK, square QAM and PAM constellations with natural binary labeling.
//!
//! Label `b` of an `M`-ary constellation is the integer value of its
//! `log2 M` bits (MSB first). PSK label `b` sits at `phase_offset + 2πb/M`.
//! Square QAM splits the label evenly: the high half indexes the in-phase
//! level, the low half the quadrature level, levels ascending from the most
//! negative amplitude. PAM uses the same ascending level order.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bits::exact_log2;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstellationKind {
    Psk,
    Qam,
    Pam,
    /// 8-point two-ring constellation (4 inner points on the axes, 4 outer
    /// on the diagonals, ring ratio 1+√3).
    StarQam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    kind: ConstellationKind,
    points: Vec<Complex<T>>,
    phase_offset: T,
    bits: usize,
}

fn check_order(order: usize, min: usize) -> Result<usize> {
    match exact_log2(order) {
        Some(b) if order >= min => Ok(b),
        _ => Err(Error::InvalidOrder {
            order,
            reason: "order must be a power of two >= 2",
        }),
    }
}

fn normalized<T: Real>(mut points: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let m = T::from_usize(points.len()).unwrap();
    let energy = points.iter().map(|p| p.norm_sqr()).fold(T::zero(), |a, b| a + b) / m;
    let scale = energy.sqrt().recip();
    for p in &mut points {
        *p = *p * scale;
    }
    points
}

/// Ascending amplitude levels `-(k-1), ..., -1, 1, ..., k-1`.
fn levels<T: Real>(k: usize) -> impl Iterator<Item = T> {
    (0..k).map(move |i| T::from_usize(2 * i).unwrap() - T::from_usize(k - 1).unwrap())
}

impl<T: Real> Constellation<T> {
    /// M-PSK with the given phase offset; label `b` maps to `exp(j(θ + 2πb/M))`.
    pub fn psk(order: usize, phase_offset: T) -> Result<Self> {
        let bits = check_order(order, 2)?;
        let two_pi = T::TAU();
        let m = T::from_usize(order).unwrap();
        // sin/cos leave ~1e-16 residue on the axes; snap it so axis points are exact
        let snap = |v: T| if v.abs() < T::epsilon() * T::lit(8.0) { T::zero() } else { v };
        let points = (0..order)
            .map(|b| Complex::from_polar(T::one(), phase_offset + two_pi * T::from_usize(b).unwrap() / m))
            .map(|z: Complex<T>| Complex::new(snap(z.re), snap(z.im)))
            .collect();
        Ok(Self { kind: ConstellationKind::Psk, points, phase_offset, bits })
    }

    /// Square M-QAM, unit average energy.
    pub fn qam(order: usize) -> Result<Self> {
        let bits = check_order(order, 4)?;
        if bits % 2 != 0 {
            return Err(Error::InvalidOrder { order, reason: "QAM order must be a square power of two" });
        }
        let side = 1usize << (bits / 2);
        let lv: Vec<T> = levels(side).collect();
        let points = lv
            .iter()
            .flat_map(|&i| lv.iter().map(move |&q| Complex::new(i, q)))
            .collect();
        Ok(Self { kind: ConstellationKind::Qam, points: normalized(points), phase_offset: T::zero(), bits })
    }

    /// Real-valued M-PAM, unit average energy.
    pub fn pam(order: usize) -> Result<Self> {
        let bits = check_order(order, 2)?;
        let points = levels(order).map(|a| Complex::new(a, T::zero())).collect();
        Ok(Self { kind: ConstellationKind::Pam, points: normalized(points), phase_offset: T::zero(), bits })
    }

    /// Two-ring 8-point constellation: labels 0..4 on the inner ring at
    /// angles kπ/2, labels 4..8 on the outer ring (radius ratio 1+√3) at
    /// π/4 + kπ/2.
    pub fn star_8qam() -> Self {
        let half_pi = T::FRAC_PI_2();
        let outer = T::one() + T::lit(3.0).sqrt();
        let inner = (0..4).map(|k| Complex::from_polar(T::one(), half_pi * T::from_usize(k).unwrap()));
        let outer = (0..4).map(|k| Complex::from_polar(outer, T::FRAC_PI_4() + half_pi * T::from_usize(k).unwrap()));
        Self {
            kind: ConstellationKind::StarQam,
            points: normalized(inner.chain(outer).collect()),
            phase_offset: T::zero(),
            bits: 3,
        }
    }

    /// Same labeling with every point multiplied by `exp(jθ)`.
    pub fn rotated(&self, theta: T) -> Self {
        let r = Complex::from_polar(T::one(), theta);
        Self {
            kind: self.kind,
            points: self.points.iter().map(|p| p * r).collect(),
            phase_offset: self.phase_offset + theta,
            bits: self.bits,
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn phase_offset(&self) -> T {
        self.phase_offset
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex<T> {
        self.points[label]
    }

    pub fn average_energy(&self) -> T {
        self.points.iter().map(|p| p.norm_sqr()).fold(T::zero(), |a, b| a + b)
            / T::from_usize(self.points.len()).unwrap()
    }

    /// Label of the point within [`Real::MATCH_TOL`] of `z`.
    /// Short identifier such as `psk8` or `qam16`.
    pub fn name(&self) -> String {
        format!("{:?}{}", self.kind, self.order()).to_lowercase()
    }

    pub fn label_of(&self, z: Complex<T>) -> Option<usize> {
        let tol = T::lit(T::MATCH_TOL);
        self.points.iter().position(|p| (p - z).norm() <= tol)
    }

    /// ML slicer: `argmin_s |y - g s|²`, ties to the lowest label.
    pub fn nearest(&self, y: Complex<T>, gain: Complex<T>) -> (usize, T) {
        let mut best = (0, T::infinity());
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - gain * p).norm_sqr();
            if d < best.1 {
                best = (label, d);
            }
        }
        best
    }

    /// Smallest squared distance between two distinct points.
    pub fn min_distance_sq(&self) -> T {
        let mut best = T::infinity();
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm_sqr());
            }
        }
        best
    }
}

/// Serializable description of a constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub kind: ConstellationKind,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_offset: Option<f64>,
}

impl ConstellationSpec {
    pub fn psk(order: usize, phase_offset: f64) -> Self {
        Self { kind: ConstellationKind::Psk, order, phase_offset: Some(phase_offset) }
    }

    pub fn qam(order: usize) -> Self {
        Self { kind: ConstellationKind::Qam, order, phase_offset: None }
    }

    /// BPSK for M=2, QPSK (π/4 offset) for M=4, 8-PSK for M=8, square QAM above.
    pub fn default_for_order(order: usize) -> Self {
        match order {
            2 | 8 => Self::psk(order, 0.0),
            4 => Self::psk(4, std::f64::consts::FRAC_PI_4),
            _ => Self::qam(order),
        }
    }

    pub fn build<T: Real>(&self) -> Result<Constellation<T>> {
        let offset = T::lit(self.phase_offset.unwrap_or(0.0));
        let c = match self.kind {
            ConstellationKind::Psk => Constellation::psk(self.order, offset)?,
            ConstellationKind::Qam => Constellation::qam(self.order)?,
            ConstellationKind::Pam => Constellation::pam(self.order)?,
            ConstellationKind::StarQam => {
                if self.order != 8 {
                    return Err(Error::InvalidOrder { order: self.order, reason: "star QAM is 8-ary only" });
                }
                Constellation::star_8qam()
            }
        };
        Ok(match (self.kind, self.phase_offset) {
            (ConstellationKind::Psk, _) | (_, None) => c,
            (_, Some(theta)) => c.rotated(T::lit(theta)),
        })
    }
}

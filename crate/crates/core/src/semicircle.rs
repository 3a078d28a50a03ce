//! Closed-form quantities of the semicircle law.
//!
//! Every square root that selects a branch goes through [`sqrt_upper`]; the
//! Stieltjes transform and the reconstruction of `m - m_sc` from the error
//! term both rely on that single convention.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `z = E + i eta` in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    energy: f64,
    eta: f64,
}

impl SpectralPoint {
    /// Rejects `eta <= 0` and non-finite coordinates.
    pub fn new(energy: f64, eta: f64) -> Result<Self> {
        if !energy.is_finite() || !eta.is_finite() {
            return Err(Error::NonFiniteSpectralPoint { energy, eta });
        }
        if eta <= 0.0 {
            return Err(Error::NonPositiveEta { eta });
        }
        Ok(Self { energy, eta })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Distance of the energy to the nearest spectral edge, `||E| - 2|`.
    pub fn kappa(&self) -> f64 {
        (self.energy.abs() - 2.0).abs()
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.energy, self.eta)
    }
}

/// Square root with nonnegative imaginary part.
///
/// On the positive real axis the nonnegative real root is returned. The
/// function is discontinuous across the positive real axis; its imaginary
/// part is continuous everywhere.
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Stieltjes transform of the semicircle law, `-z/2 + sqrt_upper(z^2/4 - 1)`.
///
/// The two roots of `m^2 + z m + 1 = 0` multiply to one, so whichever of
/// `-z/2 +- s` is smaller in modulus is computed as the reciprocal of the
/// other. This avoids cancellation for large `|z|` without changing which
/// root is selected.
pub fn msc(z: SpectralPoint) -> Complex64 {
    let z = z.z();
    let half = z / 2.0;
    let s = sqrt_upper(half * half - 1.0);
    let selected = -half + s;
    let other = -half - s;
    if selected.norm() < other.norm() {
        1.0 / other
    } else {
        selected
    }
}

/// Residual `|m + 1/(z + m)|` of the self-consistent equation.
pub fn fixed_point_residual(z: SpectralPoint, m: Complex64) -> f64 {
    (m + 1.0 / (z.z() + m)).norm()
}

/// Semicircle density `(1/pi) sqrt(1 - x^2/4)` on `[-2, 2]`, zero outside.
pub fn rho_sc(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (1.0 - x * x / 4.0).sqrt() / PI
    }
}

/// Cumulative distribution of the semicircle law.
///
/// Uses the antiderivative `1/2 + x sqrt(4 - x^2)/(4 pi) + asin(x/2)/pi`.
pub fn n_sc_cdf(energy: f64) -> f64 {
    if energy <= -2.0 {
        return 0.0;
    }
    if energy >= 2.0 {
        return 1.0;
    }
    let value = 0.5 + energy * (4.0 - energy * energy).sqrt() / (4.0 * PI) + (energy / 2.0).asin() / PI;
    value.clamp(0.0, 1.0)
}

const BISECTION_WIDTH: f64 = 1e-12;

/// Classical location `gamma_alpha`: the solution of `n_sc(gamma) = alpha/N`.
pub fn classical_location(n: usize, alpha: usize) -> Result<f64> {
    if alpha == 0 || alpha > n {
        return Err(Error::AlphaOutOfRange { alpha, n });
    }
    if alpha == n {
        return Ok(2.0);
    }
    let target = alpha as f64 / n as f64;
    let (mut lo, mut hi) = (-2.0_f64, 2.0_f64);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let value = n_sc_cdf(mid);
        if value == target {
            return Ok(mid);
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All classical locations `gamma_1 <= ... <= gamma_N`.
pub fn classical_locations(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|alpha| classical_location(n, alpha).expect("alpha in range"))
        .collect()
}

/// Evaluated bounds on `m_sc(z)` at one spectral point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicircleReport {
    pub msc: Complex64,
    /// `(1 + |z|)^{-1} < |m_sc|`
    pub bound_lower_ok: bool,
    /// `|m_sc| < 1`
    pub bound_upper_ok: bool,
    /// `Im m_sc / |m_sc^2 - 1| <= 1`
    pub ratio_im_ok: bool,
    /// `eta / |m_sc^2 - 1| <= sqrt(eta) (1 + sqrt(eta))`
    pub ratio_eta_ok: bool,
    /// `|1 - m_sc^2| / sqrt(kappa + eta)`; bounded above and below near the edges.
    pub edge_ratio: f64,
    pub fixed_point_residual: f64,
}

impl SemicircleReport {
    pub fn all_ok(&self) -> bool {
        self.bound_lower_ok && self.bound_upper_ok && self.ratio_im_ok && self.ratio_eta_ok
    }
}

pub fn check_msc_bounds(z: SpectralPoint) -> SemicircleReport {
    let m = msc(z);
    let modulus = m.norm();
    let gap = (m * m - 1.0).norm();
    let eta = z.eta();
    SemicircleReport {
        msc: m,
        bound_lower_ok: 1.0 / (1.0 + z.z().norm()) < modulus,
        bound_upper_ok: modulus < 1.0,
        ratio_im_ok: m.im / gap <= 1.0,
        ratio_eta_ok: eta / gap <= eta.sqrt() * (1.0 + eta.sqrt()),
        edge_ratio: gap / (z.kappa() + eta).sqrt(),
        fixed_point_residual: fixed_point_residual(z, m),
    }
}

//! Units, conversions, and the closed-form scalar calculators.
//!
//! Unit convention used throughout the crate: linewidths are ordinary-frequency
//! full widths at half maximum in MHz (never angular), times are in ns, and a
//! frequency `f` in MHz advances phase by `2*pi*f*t/1000` over `t` ns. The only
//! angular quantities live inside the time-domain solver, which converts at its
//! boundary via [`angular_rate_per_ns`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase advance in rad/ns contributed by 1 MHz of ordinary frequency.
pub const RAD_PER_NS_PER_MHZ: f64 = TAU * 1e-3;

/// Angular rate in rad/ns for an ordinary frequency in MHz.
pub fn angular_rate_per_ns(f_mhz: f64) -> f64 {
    f_mhz * RAD_PER_NS_PER_MHZ
}

/// Ordinary-frequency FWHM of a spectral line, MHz. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Linewidth {
    fwhm_mhz: f64,
}

impl Linewidth {
    pub fn from_mhz(fwhm_mhz: f64) -> Result<Self> {
        if !fwhm_mhz.is_finite() || fwhm_mhz <= 0.0 {
            return Err(Error::Domain(format!(
                "linewidth must be a positive FWHM in MHz, got {fwhm_mhz}"
            )));
        }
        Ok(Self { fwhm_mhz })
    }

    pub fn mhz(&self) -> f64 {
        self.fwhm_mhz
    }
}

/// 1/e decay time of the corresponding intensity, ns. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lifetime {
    tau_ns: f64,
}

impl Lifetime {
    pub fn from_ns(tau_ns: f64) -> Result<Self> {
        if !tau_ns.is_finite() || tau_ns <= 0.0 {
            return Err(Error::Domain(format!(
                "lifetime must be a positive 1/e time in ns, got {tau_ns}"
            )));
        }
        Ok(Self { tau_ns })
    }

    pub fn ns(&self) -> f64 {
        self.tau_ns
    }
}

/// Lifetime of a lifetime-limited line: `tau = 1/(2*pi*fwhm)`, MHz -> ns.
pub fn fwhm_to_lifetime(g: Linewidth) -> Lifetime {
    Lifetime {
        tau_ns: 1e3 / (TAU * g.mhz()),
    }
}

/// Inverse of [`fwhm_to_lifetime`].
pub fn lifetime_to_fwhm(t: Lifetime) -> Linewidth {
    Linewidth {
        fwhm_mhz: 1e3 / (TAU * t.ns()),
    }
}

/// Inputs of the extinction cross-section formula.
#[derive(Debug, Clone, Copy)]
pub struct CrossSectionInput {
    /// Transition wavelength, m.
    pub wavelength_m: f64,
    /// Natural linewidth of the transition.
    pub gamma0: Linewidth,
    /// Homogeneous width; at least the natural width.
    pub gamma_hom: Linewidth,
}

/// Extinction cross section `3*lambda^2/(2*pi) * gamma0/gamma_hom`, m^2.
///
/// A homogeneous width below the natural width is rejected: that would mean a
/// sub-lifetime-limited line.
pub fn cross_section(input: &CrossSectionInput) -> Result<f64> {
    if !input.wavelength_m.is_finite() || input.wavelength_m <= 0.0 {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {} m",
            input.wavelength_m
        )));
    }
    if input.gamma_hom.mhz() < input.gamma0.mhz() {
        return Err(Error::Domain(format!(
            "homogeneous width {} MHz below natural width {} MHz",
            input.gamma_hom.mhz(),
            input.gamma0.mhz()
        )));
    }
    let lambda2 = input.wavelength_m * input.wavelength_m;
    Ok(3.0 * lambda2 / TAU * (input.gamma0.mhz() / input.gamma_hom.mhz()))
}

/// Minimum Poisson-limited photon flux (photons/s) needed to resolve an
/// extinction dip of relative depth `dip_depth` at `target_snr` within
/// `integration_time_s`: `(snr/depth)^2 / t`.
pub fn shot_noise_flux(dip_depth: f64, integration_time_s: f64, target_snr: f64) -> Result<f64> {
    if !dip_depth.is_finite() || dip_depth <= 0.0 || dip_depth > 1.0 {
        return Err(Error::Domain(format!(
            "dip depth must lie in (0, 1], got {dip_depth}"
        )));
    }
    if !integration_time_s.is_finite() || integration_time_s <= 0.0 {
        return Err(Error::Domain(format!(
            "integration time must be positive, got {integration_time_s} s"
        )));
    }
    if !target_snr.is_finite() || target_snr <= 0.0 {
        return Err(Error::Domain(format!(
            "target SNR must be positive, got {target_snr}"
        )));
    }
    let ratio = target_snr / dip_depth;
    Ok(ratio * ratio / integration_time_s)
}

//! Closed-form scattering of a photon off a perfectly coupled 1D two-level
//! emitter: reflection/transmission amplitudes, scattered spectra, and
//! integrated channel fractions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantities::Linewidth;
use crate::wavepacket::Spectrum;

/// How far a spectrum integral may sit from 1 and still count as normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Two-level target parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Transition frequency, MHz (same frame as the incident spectrum axis).
    pub transition_frequency_mhz: f64,
    /// Natural linewidth of the transition.
    pub natural_linewidth: Linewidth,
    /// Scalar in [0, 1] multiplying the scattered amplitude; folds mode
    /// matching, branching, and polarization losses into one number. 1 is the
    /// ideal lossless model.
    pub coupling_efficiency: f64,
}

impl EmitterParams {
    pub fn new(
        transition_frequency_mhz: f64,
        natural_linewidth: Linewidth,
        coupling_efficiency: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&coupling_efficiency) {
            return Err(Error::Domain(format!(
                "coupling efficiency must lie in [0, 1], got {coupling_efficiency}"
            )));
        }
        if !transition_frequency_mhz.is_finite() {
            return Err(Error::Domain("transition frequency must be finite".into()));
        }
        Ok(Self {
            transition_frequency_mhz,
            natural_linewidth,
            coupling_efficiency,
        })
    }

    /// Ideal, perfectly coupled emitter.
    pub fn ideal(transition_frequency_mhz: f64, natural_linewidth: Linewidth) -> Self {
        Self {
            transition_frequency_mhz,
            natural_linewidth,
            coupling_efficiency: 1.0,
        }
    }
}

/// Energy fractions scattered into the two half-spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterFractions {
    pub reflected: f64,
    pub transmitted: f64,
}

/// Reflection amplitude of the ideal 1D two-level emitter,
/// `r(detuning) = -a/(a + i*detuning)` with `a = gamma/2`.
///
/// On resonance `r = -1` (full reflection); `|r|^2 + |1 + r|^2 = 1` holds
/// exactly at every detuning.
pub fn reflection_amplitude(detuning_mhz: f64, gamma: Linewidth) -> Complex64 {
    let a = 0.5 * gamma.mhz();
    -a / Complex64::new(a, detuning_mhz)
}

/// Transmission amplitude `t = 1 + r`.
pub fn transmission_amplitude(detuning_mhz: f64, gamma: Linewidth) -> Complex64 {
    1.0 + reflection_amplitude(detuning_mhz, gamma)
}

fn amplitudes_for(emitter: &EmitterParams, f_mhz: f64) -> (Complex64, Complex64) {
    let detuning = f_mhz - emitter.transition_frequency_mhz;
    let r = emitter.coupling_efficiency
        * reflection_amplitude(detuning, emitter.natural_linewidth);
    (r, 1.0 + r)
}

fn require_normalized(incident: &Spectrum) -> Result<()> {
    let total = incident.integral();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Domain(format!(
            "incident spectrum must integrate to 1, got {total}"
        )));
    }
    Ok(())
}

/// Trapezoidal quadrature of `weight(f) * density(f)` over the spectrum grid.
fn integrate_weighted(incident: &Spectrum, weight: impl Fn(f64) -> f64) -> f64 {
    let f = incident.f_grid_mhz();
    let d = incident.density();
    let df = incident.df_mhz();
    let n = d.len();
    let mut acc = 0.5 * (weight(f[0]) * d[0] + weight(f[n - 1]) * d[n - 1]);
    for i in 1..n - 1 {
        acc += weight(f[i]) * d[i];
    }
    acc * df
}

/// Integrated reflected/transmitted fractions of a normalized incident
/// spectrum. For a unit coupling efficiency the two fractions sum to 1 within
/// quadrature accuracy; below unity the missing weight is lost to unguided
/// scattering.
pub fn scatter_fractions(incident: &Spectrum, emitter: &EmitterParams) -> Result<ScatterFractions> {
    require_normalized(incident)?;
    let reflected = integrate_weighted(incident, |f| amplitudes_for(emitter, f).0.norm_sqr());
    let transmitted = integrate_weighted(incident, |f| amplitudes_for(emitter, f).1.norm_sqr());
    Ok(ScatterFractions { reflected, transmitted })
}

/// Pointwise scattered spectra `(|r|^2 * S, |t|^2 * S)` on the incident grid.
/// For unit coupling they add back to the incident spectrum exactly.
pub fn output_spectra(incident: &Spectrum, emitter: &EmitterParams) -> Result<(Spectrum, Spectrum)> {
    require_normalized(incident)?;
    let f = incident.f_grid_mhz().to_vec();
    let mut refl = Vec::with_capacity(f.len());
    let mut trans = Vec::with_capacity(f.len());
    for (i, &fi) in f.iter().enumerate() {
        let (r, t) = amplitudes_for(emitter, fi);
        refl.push(r.norm_sqr() * incident.density()[i]);
        trans.push(t.norm_sqr() * incident.density()[i]);
    }
    Ok((Spectrum::new(f.clone(), refl)?, Spectrum::new(f, trans)?))
}

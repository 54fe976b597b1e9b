//! Single-photon temporal envelopes and their frequency spectra.
//!
//! Envelopes are stored in a rotating frame at the wavepacket's central
//! frequency; no optical carrier is resolved on the grid. The carrier only
//! reappears in the field-snapshot export of the time-domain solver, where a
//! small visualization frequency makes the standing-wave pattern visible.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::quantities::{lifetime_to_fwhm, Lifetime, Linewidth};

/// Relative norm that may be lost to grid truncation before construction fails.
pub const TRUNCATION_BUDGET: f64 = 1e-6;

/// Uniform time grid for envelope construction, in units of the pulse
/// lifetime: `n` samples spanning `[-before_peak*tau, after_peak*tau]`.
#[derive(Debug, Clone, Copy)]
pub struct TimeGridSpec {
    pub n: usize,
    pub before_peak: f64,
    pub after_peak: f64,
}

impl Default for TimeGridSpec {
    /// 2^14 points, 40 lifetimes of rise and 24 of trailing room; keeps the
    /// truncated norm within 1e-6 and samples a lifetime-limited line more
    /// than ten times across its width.
    fn default() -> Self {
        Self {
            n: 1 << 14,
            before_peak: 40.0,
            after_peak: 24.0,
        }
    }
}

/// A single-photon pulse: complex envelope samples on a uniform time grid,
/// unit-normalized so that `sum |envelope|^2 * dt = 1`.
#[derive(Debug, Clone)]
pub struct Wavepacket {
    t_grid_ns: Vec<f64>,
    envelope: Vec<Complex64>,
    central_frequency_mhz: f64,
    spectral_fwhm: Linewidth,
}

impl Wavepacket {
    /// Wrap existing samples, validating grid uniformity and normalizing.
    pub fn from_samples(
        t_grid_ns: Vec<f64>,
        mut envelope: Vec<Complex64>,
        central_frequency_mhz: f64,
        spectral_fwhm: Linewidth,
    ) -> Result<Self> {
        if t_grid_ns.len() < 2 || t_grid_ns.len() != envelope.len() {
            return Err(Error::Grid(format!(
                "need matching grids of at least 2 samples, got {} times and {} amplitudes",
                t_grid_ns.len(),
                envelope.len()
            )));
        }
        let n = t_grid_ns.len();
        let span = t_grid_ns[n - 1] - t_grid_ns[0];
        if span <= 0.0 {
            return Err(Error::Grid("time grid must be strictly increasing".into()));
        }
        // uniform to 1e-12 of the span: compare against the affine grid
        let dt = span / (n - 1) as f64;
        for (i, &t) in t_grid_ns.iter().enumerate() {
            let ideal = t_grid_ns[0] + i as f64 * dt;
            if (t - ideal).abs() > 1e-12 * span {
                return Err(Error::Grid(format!(
                    "time grid not uniform: sample {i} at {t} deviates from {ideal}"
                )));
            }
        }
        let norm2: f64 = envelope.iter().map(|a| a.norm_sqr()).sum::<f64>() * dt;
        if norm2 <= 0.0 {
            return Err(Error::Domain("envelope has zero norm".into()));
        }
        let scale = 1.0 / norm2.sqrt();
        for a in &mut envelope {
            *a *= scale;
        }
        Ok(Self {
            t_grid_ns,
            envelope,
            central_frequency_mhz,
            spectral_fwhm,
        })
    }

    pub fn t_grid_ns(&self) -> &[f64] {
        &self.t_grid_ns
    }

    pub fn envelope(&self) -> &[Complex64] {
        &self.envelope
    }

    pub fn dt_ns(&self) -> f64 {
        self.t_grid_ns[1] - self.t_grid_ns[0]
    }

    pub fn central_frequency_mhz(&self) -> f64 {
        self.central_frequency_mhz
    }

    pub fn spectral_fwhm(&self) -> Linewidth {
        self.spectral_fwhm
    }

    /// `sum |envelope|^2 dt`; 1 by construction.
    pub fn norm_squared(&self) -> f64 {
        self.envelope.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dt_ns()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.envelope.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Non-negative spectral density on a uniform frequency grid (MHz).
#[derive(Debug, Clone)]
pub struct Spectrum {
    f_grid_mhz: Vec<f64>,
    density: Vec<f64>,
}

impl Spectrum {
    pub fn new(f_grid_mhz: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if f_grid_mhz.len() < 2 || f_grid_mhz.len() != density.len() {
            return Err(Error::Grid(
                "spectrum needs matching grids of at least 2 samples".into(),
            ));
        }
        let n = f_grid_mhz.len();
        let span = f_grid_mhz[n - 1] - f_grid_mhz[0];
        if span <= 0.0 {
            return Err(Error::Grid("frequency grid must be increasing".into()));
        }
        let df = span / (n - 1) as f64;
        for (i, &f) in f_grid_mhz.iter().enumerate() {
            let ideal = f_grid_mhz[0] + i as f64 * df;
            if (f - ideal).abs() > 1e-9 * span {
                return Err(Error::Grid("frequency grid not uniform".into()));
            }
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Domain(
                "spectral density must be finite and non-negative".into(),
            ));
        }
        Ok(Self { f_grid_mhz, density })
    }

    /// Unit-normalized Lorentzian line sampled on `n` points spanning
    /// `center ± half_span`.
    pub fn lorentzian(center_mhz: f64, fwhm_mhz: f64, half_span_mhz: f64, n: usize) -> Result<Self> {
        if fwhm_mhz <= 0.0 || half_span_mhz <= 0.0 || n < 3 {
            return Err(Error::Domain(format!(
                "lorentzian spectrum needs fwhm > 0, span > 0 and n >= 3, got ({fwhm_mhz}, {half_span_mhz}, {n})"
            )));
        }
        let hwhm = 0.5 * fwhm_mhz;
        let step = 2.0 * half_span_mhz / (n - 1) as f64;
        let f_grid: Vec<f64> = (0..n)
            .map(|i| center_mhz - half_span_mhz + i as f64 * step)
            .collect();
        let density: Vec<f64> = f_grid
            .iter()
            .map(|f| {
                let d = f - center_mhz;
                hwhm / (std::f64::consts::PI * (d * d + hwhm * hwhm))
            })
            .collect();
        let mut s = Self::new(f_grid, density)?;
        s.normalize();
        Ok(s)
    }

    pub fn f_grid_mhz(&self) -> &[f64] {
        &self.f_grid_mhz
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn df_mhz(&self) -> f64 {
        self.f_grid_mhz[1] - self.f_grid_mhz[0]
    }

    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        let df = self.df_mhz();
        let inner: f64 = self.density[1..self.density.len() - 1].iter().sum();
        (inner + 0.5 * (self.density[0] + self.density[self.density.len() - 1])) * df
    }

    /// Rescale so that [`Self::integral`] equals 1.
    pub fn normalize(&mut self) {
        let total = self.integral();
        if total > 0.0 {
            for d in &mut self.density {
                *d /= total;
            }
        }
    }

    /// Grid location of the density maximum.
    pub fn peak_frequency_mhz(&self) -> f64 {
        let mut best = 0;
        for (i, d) in self.density.iter().enumerate() {
            if *d > self.density[best] {
                best = i;
            }
        }
        self.f_grid_mhz[best]
    }
}

/// Rising-exponential envelope `exp(t/(2*tau))` up to a sharp cutoff at the
/// peak, the time-reverse of spontaneous emission. The intensity 1/e time is
/// `tau`; the power spectrum is a Lorentzian of FWHM `1/(2*pi*tau)`.
pub fn make_rising_exponential(
    central_frequency_mhz: f64,
    tau: Lifetime,
    grid: &TimeGridSpec,
) -> Result<Wavepacket> {
    if grid.n < 16 {
        return Err(Error::Grid(format!("need at least 16 samples, got {}", grid.n)));
    }
    if grid.before_peak <= 0.0 || grid.after_peak < 0.0 {
        return Err(Error::Grid(format!(
            "grid must extend before the peak (got before={}, after={})",
            grid.before_peak, grid.after_peak
        )));
    }
    // Truncated fraction of the ideal norm, checked before renormalization.
    let truncated = (-grid.before_peak).exp();
    if truncated > TRUNCATION_BUDGET {
        return Err(Error::Grid(format!(
            "grid truncates {truncated:.3e} of the pulse norm; extend before_peak to at least {:.1} lifetimes",
            -TRUNCATION_BUDGET.ln()
        )));
    }
    let tau_ns = tau.ns();
    let span = (grid.before_peak + grid.after_peak) * tau_ns;
    let dt = span / (grid.n - 1) as f64;
    let t_start = -grid.before_peak * tau_ns;
    let t_grid: Vec<f64> = (0..grid.n).map(|i| t_start + i as f64 * dt).collect();
    let envelope: Vec<Complex64> = t_grid
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                Complex64::new((0.5 * t / tau_ns).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Wavepacket::from_samples(
        t_grid,
        envelope,
        central_frequency_mhz,
        lifetime_to_fwhm(tau),
    )
}

/// Power spectrum `|FT envelope|^2` on a frequency axis centered at the
/// wavepacket's central frequency. Satisfies the discrete Parseval identity
/// `sum density * df = sum |envelope|^2 * dt`.
pub fn spectrum_of(w: &Wavepacket) -> Spectrum {
    let n = w.envelope().len();
    let dt = w.dt_ns();
    let mut buf: Vec<Complex64> = w.envelope().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    // fftshift: bin k holds frequency k/(n*dt) cycles/ns for k < n/2 and
    // (k-n)/(n*dt) above. The 1e3 factor converts 1/ns to MHz; the extra
    // 1e-3 in the density keeps MHz-integrals equal to ns-integrals.
    let df_mhz = 1e3 / (n as f64 * dt);
    let half = n / 2;
    let mut f_grid = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let k = i as i64 - half as i64;
        let bin = ((k + n as i64) % n as i64) as usize;
        f_grid.push(w.central_frequency_mhz() + k as f64 * df_mhz);
        density.push(buf[bin].norm_sqr() * dt * dt * 1e-3);
    }
    Spectrum { f_grid_mhz: f_grid, density }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantities::fwhm_to_lifetime;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn tau_8ns() -> Lifetime {
        Lifetime::from_ns(8.0).unwrap()
    }

    #[test]
    fn construction_is_unit_norm() {
        let w = make_rising_exponential(0.0, tau_8ns(), &TimeGridSpec::default()).unwrap();
        assert_relative_eq!(w.norm_squared(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn intensity_one_lifetime_before_peak_is_1_over_e() {
        let w = make_rising_exponential(0.0, tau_8ns(), &TimeGridSpec::default()).unwrap();
        // grid spacing is 64*tau/(n-1); pick the samples nearest t=0 and t=-tau
        let dt = w.dt_ns();
        let idx_of = |t: f64| {
            w.t_grid_ns()
                .iter()
                .position(|&x| (x - t).abs() < 0.5 * dt)
                .unwrap()
        };
        let peak = w.envelope()[idx_of(0.0)].norm_sqr();
        let earlier = w.envelope()[idx_of(-8.0)].norm_sqr();
        // grid samples sit within dt/2 of the nominal times
        assert_relative_eq!(earlier / peak, (-1.0f64).exp(), max_relative = 2e-3);
    }

    #[test]
    fn too_short_grid_reports_truncation() {
        let res = make_rising_exponential(
            0.0,
            tau_8ns(),
            &TimeGridSpec { n: 4096, before_peak: 6.0, after_peak: 4.0 },
        );
        assert!(matches!(res, Err(Error::Grid(_))));
    }

    #[test]
    fn rising_exponential_spectral_fwhm_matches_lifetime() {
        // half-maximum crossings of the transform, independent of the fitter
        let tau = tau_8ns();
        let w = make_rising_exponential(100.0, tau, &TimeGridSpec::default()).unwrap();
        let s = spectrum_of(&w);
        let expected_fwhm = lifetime_to_fwhm(tau).mhz();
        assert_abs_diff_eq!(expected_fwhm, 19.894, epsilon = 1e-3);

        let peak = s.density().iter().cloned().fold(f64::MIN, f64::max);
        let half = 0.5 * peak;
        let f = s.f_grid_mhz();
        let d = s.density();
        let mut left = None;
        let mut right = None;
        for i in 1..d.len() {
            if d[i - 1] < half && d[i] >= half && left.is_none() {
                let frac = (half - d[i - 1]) / (d[i] - d[i - 1]);
                left = Some(f[i - 1] + frac * (f[i] - f[i - 1]));
            }
            if d[i - 1] >= half && d[i] < half {
                let frac = (d[i - 1] - half) / (d[i - 1] - d[i]);
                right = Some(f[i - 1] + frac * (f[i] - f[i - 1]));
            }
        }
        let fwhm = right.unwrap() - left.unwrap();
        assert_relative_eq!(fwhm, expected_fwhm, max_relative = 0.01);
        // peak sits at the central frequency
        assert_abs_diff_eq!(s.peak_frequency_mhz(), 100.0, epsilon = s.df_mhz());
    }

    #[test]
    fn time_shift_leaves_density_unchanged() {
        let w = make_rising_exponential(0.0, tau_8ns(), &TimeGridSpec::default()).unwrap();
        let shifted = Wavepacket::from_samples(
            w.t_grid_ns().iter().map(|t| t + 37.5).collect(),
            w.envelope().to_vec(),
            0.0,
            w.spectral_fwhm(),
        )
        .unwrap();
        let s0 = spectrum_of(&w);
        let s1 = spectrum_of(&shifted);
        for (a, b) in s0.density().iter().zip(s1.density()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn real_envelope_density_is_even() {
        // two-sided symmetric exponential
        let tau = 8.0;
        let n = 8192;
        let dt = 160.0 / (n - 1) as f64;
        let t_grid: Vec<f64> = (0..n).map(|i| -80.0 + i as f64 * dt).collect();
        let env: Vec<Complex64> = t_grid
            .iter()
            .map(|&t| Complex64::new((-(t.abs()) / (2.0 * tau)).exp(), 0.0))
            .collect();
        let w = Wavepacket::from_samples(
            t_grid,
            env,
            0.0,
            Linewidth::from_mhz(19.9).unwrap(),
        )
        .unwrap();
        let s = spectrum_of(&w);
        let d = s.density();
        let n = d.len();
        // bins k and -k mirror about the center bin n/2
        for k in 1..n / 2 {
            let lo = d[n / 2 - k];
            let hi = d[n / 2 + k];
            assert_abs_diff_eq!(lo, hi, epsilon = 1e-9 * d[n / 2].max(1e-30));
        }
    }

    #[test]
    fn nonuniform_grid_rejected() {
        let mut t: Vec<f64> = (0..64).map(|i| i as f64).collect();
        t[10] += 0.1;
        let env = vec![Complex64::new(1.0, 0.0); 64];
        let res = Wavepacket::from_samples(t, env, 0.0, Linewidth::from_mhz(1.0).unwrap());
        assert!(matches!(res, Err(Error::Grid(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn parseval_holds_for_all_pulses(tau_ns in 0.5f64..50.0, n_exp in 11u32..14) {
            let grid = TimeGridSpec { n: 1usize << n_exp, ..TimeGridSpec::default() };
            let w = make_rising_exponential(0.0, Lifetime::from_ns(tau_ns).unwrap(), &grid).unwrap();
            let s = spectrum_of(&w);
            let time_norm = w.norm_squared();
            let freq_norm: f64 = s.density().iter().sum::<f64>() * s.df_mhz();
            prop_assert!((freq_norm - time_norm).abs() <= 1e-6 * time_norm);
            prop_assert!(s.density().iter().all(|d| *d >= 0.0));
        }
    }
}

//! Nonlinear least squares for the two lineshape families used throughout:
//! Lorentzian peaks/dips and double-sided exponential correlation functions,
//! plus a small linear fit used for rate extraction and Stark-map work.
//!
//! The refinement is damped least squares: the damping factor grows tenfold on
//! a rejected step and halves on an accepted one; convergence is declared when
//! the relative parameter step of an accepted iteration falls below 1e-8.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Iteration cap of the damped refinement.
pub const MAX_ITERATIONS: usize = 200;
/// Relative parameter step below which an accepted iteration converges.
pub const STEP_TOLERANCE: f64 = 1e-8;

/// Outcome of a least-squares refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    /// Identifier of the fitted model family.
    pub model: String,
    /// Parameter names, in estimate order.
    pub parameter_names: Vec<String>,
    /// Parameter estimates.
    pub estimates: Vec<f64>,
    /// One-sigma uncertainties from the linearized covariance.
    pub uncertainties: Vec<f64>,
    /// Euclidean norm of the (weighted) residual at the solution.
    pub residual_norm: f64,
    /// Accepted iterations performed.
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after each accepted iteration; never increases.
    pub residual_history: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameter_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.estimates[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.parameter_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.uncertainties[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serialization")
    }
}

/// Lorentzian with a free baseline: `y = baseline + amplitude * (G/2)^2 /
/// ((x-center)^2 + (G/2)^2)`. A negative amplitude is a dip.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LorentzianModel {
    pub baseline: f64,
    pub amplitude: f64,
    pub center: f64,
    pub fwhm: f64,
}

impl LorentzianModel {
    pub fn eval(&self, x: f64) -> f64 {
        let hw = 0.5 * self.fwhm;
        let d = x - self.center;
        self.baseline + self.amplitude * hw * hw / (d * d + hw * hw)
    }

    pub fn from_result(fit: &FitResult) -> Self {
        Self {
            baseline: fit.get("baseline").unwrap(),
            amplitude: fit.get("amplitude").unwrap(),
            center: fit.get("center").unwrap(),
            fwhm: fit.get("fwhm").unwrap(),
        }
    }
}

/// Intensity autocorrelation dip: `g2(tau) = baseline * (1 - contrast *
/// exp(-|tau|/time_constant))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DoubleExponentialModel {
    pub baseline: f64,
    pub contrast: f64,
    pub time_constant: f64,
}

impl DoubleExponentialModel {
    pub fn eval(&self, tau: f64) -> f64 {
        self.baseline * (1.0 - self.contrast * (-tau.abs() / self.time_constant).exp())
    }

    pub fn from_result(fit: &FitResult) -> Self {
        Self {
            baseline: fit.get("baseline").unwrap(),
            contrast: fit.get("contrast").unwrap(),
            time_constant: fit.get("time_constant").unwrap(),
        }
    }

    /// `g2(0) = baseline * (1 - contrast)`.
    pub fn g2_at_zero(&self) -> f64 {
        self.baseline * (1.0 - self.contrast)
    }

    /// A normalized correlation dip below 0.5 certifies a single-photon
    /// stream.
    pub fn single_photon_signature(&self) -> bool {
        1.0 - self.contrast < 0.5
    }

    /// Linewidth implied by the correlation time, `1/(2*pi*tc)` in MHz for
    /// `tc` in ns.
    pub fn implied_linewidth_mhz(&self) -> f64 {
        1e3 / (TAU * self.time_constant)
    }
}

trait Model {
    const NAME: &'static str;
    const PARAMS: &'static [&'static str];
    fn eval(params: &[f64], x: f64) -> f64;
    fn jacobian_row(params: &[f64], x: f64, out: &mut [f64]);
}

struct Lorentzian;

impl Model for Lorentzian {
    const NAME: &'static str = "lorentzian";
    const PARAMS: &'static [&'static str] = &["baseline", "amplitude", "center", "fwhm"];

    fn eval(p: &[f64], x: f64) -> f64 {
        let hw = 0.5 * p[3];
        let d = x - p[2];
        p[0] + p[1] * hw * hw / (d * d + hw * hw)
    }

    fn jacobian_row(p: &[f64], x: f64, out: &mut [f64]) {
        let hw = 0.5 * p[3];
        let d = x - p[2];
        let den = d * d + hw * hw;
        let shape = hw * hw / den;
        out[0] = 1.0;
        out[1] = shape;
        // d/d(center): amplitude * hw^2 * 2d / den^2
        out[2] = p[1] * shape * 2.0 * d / den;
        // d/d(fwhm): amplitude * hw * d^2 / den^2 (chain rule through hw)
        out[3] = p[1] * hw * d * d / (den * den);
    }
}

struct DoubleExponential;

impl Model for DoubleExponential {
    const NAME: &'static str = "double_exponential";
    const PARAMS: &'static [&'static str] = &["baseline", "contrast", "time_constant"];

    fn eval(p: &[f64], x: f64) -> f64 {
        p[0] * (1.0 - p[1] * (-x.abs() / p[2]).exp())
    }

    fn jacobian_row(p: &[f64], x: f64, out: &mut [f64]) {
        let e = (-x.abs() / p[2]).exp();
        out[0] = 1.0 - p[1] * e;
        out[1] = -p[0] * e;
        out[2] = -p[0] * p[1] * e * x.abs() / (p[2] * p[2]);
    }
}

/// Solve the symmetric positive system `A x = b` in place by Gaussian
/// elimination with partial pivoting. Systems here are at most 4x4.
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Inverse of a small symmetric matrix via column-by-column solves.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_linear(&mut m, &mut e)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

fn chi2<M: Model>(params: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - M::eval(params, xi);
            wi * r * r
        })
        .sum()
}

fn lm_fit<M: Model>(
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    initial: Vec<f64>,
) -> Result<FitResult> {
    let n = x.len();
    let np = M::PARAMS.len();
    if n < 2 * np {
        return Err(Error::DegenerateData(format!(
            "{} points cannot constrain {} parameters",
            n, np
        )));
    }
    let unit_weights = vec![1.0; n];
    let w = weights.unwrap_or(&unit_weights);
    let weighted = weights.is_some();

    let mut params = initial;
    let mut cost = chi2::<M>(&params, x, y, w);
    let mut lambda = 1e-3;
    let mut history = vec![cost.sqrt()];
    let mut converged = false;
    let mut iterations = 0;
    let mut row = vec![0.0; np];

    'outer: for _ in 0..MAX_ITERATIONS {
        // normal equations J^T W J and J^T W r at the current point
        let mut jtj = vec![vec![0.0; np]; np];
        let mut jtr = vec![0.0; np];
        for i in 0..n {
            M::jacobian_row(&params, x[i], &mut row);
            let r = y[i] - M::eval(&params, x[i]);
            for a in 0..np {
                jtr[a] += w[i] * row[a] * r;
                for b in a..np {
                    jtj[a][b] += w[i] * row[a] * row[b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        // try increasingly damped steps until one lowers the cost
        loop {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-300);
            }
            let mut rhs = jtr.clone();
            let step = solve_linear(&mut damped, &mut rhs)
                .ok_or_else(|| Error::DegenerateData("singular normal equations".into()))?;

            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let trial_cost = chi2::<M>(&trial, x, y, w);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel_step = step
                    .iter()
                    .zip(&trial)
                    .map(|(s, p)| (s / p.abs().max(1e-12)).abs())
                    .fold(0.0f64, f64::max);
                params = trial;
                cost = trial_cost;
                lambda = (lambda * 0.5).max(1e-14);
                history.push(cost.sqrt());
                iterations += 1;
                if rel_step < STEP_TOLERANCE {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break 'outer;
            }
        }
    }

    if !converged {
        return Err(Error::NoConvergence(MAX_ITERATIONS));
    }

    // covariance: (J^T W J)^-1, scaled by chi2/(n-p) for unit weights
    let mut jtj = vec![vec![0.0; np]; np];
    for i in 0..n {
        M::jacobian_row(&params, x[i], &mut row);
        for a in 0..np {
            for b in a..np {
                jtj[a][b] += w[i] * row[a] * row[b];
            }
        }
    }
    for a in 0..np {
        for b in 0..a {
            jtj[a][b] = jtj[b][a];
        }
    }
    let scale = if weighted {
        1.0
    } else {
        cost / (n - np) as f64
    };
    let uncertainties = match invert(&jtj) {
        Some(cov) => (0..np).map(|a| (cov[a][a] * scale).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; np],
    };

    Ok(FitResult {
        model: M::NAME.to_string(),
        parameter_names: M::PARAMS.iter().map(|s| s.to_string()).collect(),
        estimates: params,
        uncertainties,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        residual_history: history,
    })
}

fn validate_xy(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.len() < 8 {
        return Err(Error::DegenerateData(format!(
            "need at least 8 matching samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite sample".into()));
    }
    let (ymin, ymax) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if ymax - ymin <= 0.0 {
        return Err(Error::DegenerateData("constant samples".into()));
    }
    Ok(())
}

/// Moment-based starting point for a Lorentzian: extremum location for the
/// center, half-depth crossings for the width, outer-sample median for the
/// baseline. Falls back to a quarter of the span when the half crossings are
/// not bracketed.
fn lorentzian_guess(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let (imin, imax) = {
        let mut imin = 0;
        let mut imax = 0;
        for i in 0..n {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        (imin, imax)
    };
    // a dip deviates farther below the mean than a peak above it
    let is_dip = (mean - y[imin]) > (y[imax] - mean);
    let iext = if is_dip { imin } else { imax };

    // baseline from the ends of the record
    let edge = (n / 8).max(1);
    let baseline = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>())
        / (2 * edge) as f64;
    let amplitude = y[iext] - baseline;
    let center = x[iext];

    let half = baseline + 0.5 * amplitude;
    let crossed = |a: f64, b: f64| (a - half) * (b - half) <= 0.0;
    let mut left = None;
    for i in (1..=iext).rev() {
        if crossed(y[i - 1], y[i]) {
            left = Some(0.5 * (x[i - 1] + x[i]));
            break;
        }
    }
    let mut right = None;
    for i in iext..n - 1 {
        if crossed(y[i], y[i + 1]) {
            right = Some(0.5 * (x[i] + x[i + 1]));
            break;
        }
    }
    let span = (x[n - 1] - x[0]).abs();
    let fwhm = match (left, right) {
        (Some(l), Some(r)) if r > l => r - l,
        _ => span / 4.0,
    };
    vec![baseline, amplitude, center, fwhm.max(span / n as f64)]
}

/// Fit a Lorentzian peak or dip. Optional `weights` are inverse variances;
/// use `poisson_weights` for raw count data.
pub fn fit_lorentzian(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<FitResult> {
    validate_xy(x, y)?;
    lm_fit::<Lorentzian>(x, y, weights, lorentzian_guess(x, y))
}

/// Fit a double-sided exponential correlation dip. The delay grid must cover
/// the zero-delay region and tails well past the correlation time.
pub fn fit_double_exponential(tau: &[f64], g2: &[f64]) -> Result<FitResult> {
    validate_xy(tau, g2)?;
    let n = g2.len();
    let edge = (n / 8).max(1);
    let baseline = (g2[..edge].iter().sum::<f64>() + g2[n - edge..].iter().sum::<f64>())
        / (2 * edge) as f64;
    // deepest point approximates g2(0)
    let imin = (0..n).min_by(|&a, &b| g2[a].partial_cmp(&g2[b]).unwrap()).unwrap();
    let contrast = if baseline.abs() > 1e-300 {
        (1.0 - g2[imin] / baseline).clamp(0.05, 1.0)
    } else {
        0.5
    };
    // width where the dip has recovered to within 1/e of its depth
    let target = baseline - (baseline - g2[imin]) / std::f64::consts::E;
    let mut tc = (tau[n - 1] - tau[0]).abs() / 10.0;
    for i in imin..n {
        if g2[i] >= target {
            let width = (tau[i] - tau[imin]).abs();
            if width > 0.0 {
                tc = width;
            }
            break;
        }
    }
    lm_fit::<DoubleExponential>(tau, g2, None, vec![baseline, contrast, tc])
}

/// Ordinary least squares line `y = slope*x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateData("need at least two samples".into()));
    }
    let n = x.len() as f64;
    let sx = x.iter().sum::<f64>();
    let sy = y.iter().sum::<f64>();
    let sxx = x.iter().map(|v| v * v).sum::<f64>();
    let sxy = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::DegenerateData("degenerate abscissa".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}

/// Inverse-variance weights for Poisson counts, `1/max(counts, 1)`.
pub fn poisson_weights(counts: &[f64]) -> Vec<f64> {
    counts.iter().map(|c| 1.0 / c.max(1.0)).collect()
}

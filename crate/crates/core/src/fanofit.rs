//! Sums of Fano-like resonance lines: evaluation, damped Gauss-Newton
//! (Levenberg-Marquardt) fitting with an analytic Jacobian, deterministic
//! seeding, and temperature tracking of fitted amplitudes.
//!
//! Each line contributes
//! `(A dB^2 + Q (B - B0) dB) / ((B - B0)^2 + dB^2)`
//! on top of an optional constant baseline. Widths are parameterized as
//! log(dB) internally so they stay positive; results are reported as dB.

use crate::linalg::{invert_dense, solve_dense, LinalgError};
use crate::spectra::Spectrum;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {needed} data points for {lines} lines, got {got}")]
    TooFewPoints { needed: usize, lines: usize, got: usize },
    #[error("seed width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("singular Jacobian: resonance centers {b0} and {b1} collapsed within 1e-6 mT")]
    CollapsedCenters { b0: f64, b1: f64 },
    #[error("fit did not converge within {max_iterations} iterations")]
    NotConverged { max_iterations: usize, best: Box<FitResult> },
    #[error("found only {found} usable extrema for {requested} lines")]
    TooFewExtrema { found: usize, requested: usize },
    #[error("reference line amplitude {0:e} is below 1e-12; cannot normalize")]
    NormalizerTooSmall(f64),
    #[error("fit results have inconsistent line counts: {0} vs {1}")]
    InconsistentFits(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One Fano-like resonance line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanoResonance {
    /// Symmetric amplitude A.
    pub a: f64,
    /// Antisymmetric amplitude Q.
    pub q: f64,
    /// Center B_0, mT.
    pub b0: f64,
    /// Width dB, mT; positive.
    pub width: f64,
}

/// Result of a least-squares fit.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub resonances: Vec<FanoResonance>,
    pub baseline: f64,
    /// Covariance over all free parameters in the order
    /// [a, q, b0, width] per line, then the baseline when fitted;
    /// row-major symmetric matrix.
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Evaluates the sum of lines plus baseline at field `b`.
pub fn fano_eval(lines: &[FanoResonance], baseline: f64, b: f64) -> f64 {
    let mut acc = baseline;
    for l in lines {
        let x = b - l.b0;
        acc += (l.a * l.width * l.width + l.q * x * l.width) / (x * x + l.width * l.width);
    }
    acc
}

/// Gradient of one line's value at `b` with respect to (a, q, b0, width).
pub fn fano_gradient(line: &FanoResonance, b: f64) -> [f64; 4] {
    let x = b - line.b0;
    let w = line.width;
    let den = x * x + w * w;
    let num = line.a * w * w + line.q * x * w;
    [
        w * w / den,
        x * w / den,
        -line.q * w / den + 2.0 * x * num / (den * den),
        (2.0 * line.a * w + line.q * x) / den - 2.0 * w * num / (den * den),
    ]
}

const MAX_ITERATIONS: usize = 200;
const REL_TOL: f64 = 1e-10;
const LAMBDA_START: f64 = 1e-3;
const CENTER_COLLAPSE_MT: f64 = 1e-6;

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    n_lines: usize,
    fit_baseline: bool,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        4 * self.n_lines + usize::from(self.fit_baseline)
    }

    fn unpack(&self, p: &[f64]) -> (Vec<FanoResonance>, f64) {
        let lines = (0..self.n_lines)
            .map(|j| FanoResonance {
                a: p[4 * j],
                q: p[4 * j + 1],
                b0: p[4 * j + 2],
                width: p[4 * j + 3].exp(),
            })
            .collect();
        let baseline = if self.fit_baseline { p[4 * self.n_lines] } else { 0.0 };
        (lines, baseline)
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let (lines, baseline) = self.unpack(p);
        self.x
            .iter()
            .zip(self.y.iter())
            .map(|(b, y)| fano_eval(&lines, baseline, *b) - y)
            .collect()
    }

    /// Analytic Jacobian of the residuals, row-major len(x) x n_params.
    /// The width column is with respect to u = log(dB).
    fn jacobian(&self, p: &[f64]) -> Vec<f64> {
        let (lines, _) = self.unpack(p);
        let np = self.n_params();
        let mut jac = vec![0.0; self.x.len() * np];
        for (i, b) in self.x.iter().enumerate() {
            let row = &mut jac[i * np..(i + 1) * np];
            for (j, l) in lines.iter().enumerate() {
                let g = fano_gradient(l, *b);
                row[4 * j] = g[0];
                row[4 * j + 1] = g[1];
                row[4 * j + 2] = g[2];
                // chain rule through w = e^u
                row[4 * j + 3] = g[3] * l.width;
            }
            if self.fit_baseline {
                row[np - 1] = 1.0;
            }
        }
        jac
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits a sum of Fano lines to a spectrum by damped Gauss-Newton with the
/// Levenberg-Marquardt schedule: lambda starts at 1e-3, x10 on a rejected
/// step, /10 on an accepted one. Converges when the relative change of the
/// residual norm drops below 1e-10; gives up after 200 iterations and
/// returns the best state inside [`FitError::NotConverged`].
pub fn fit(
    spec: &Spectrum,
    seeds: &[FanoResonance],
    fit_baseline: bool,
) -> Result<FitResult, FitError> {
    let n_lines = seeds.len();
    let needed = 4 * n_lines + 1;
    if spec.x.len() < needed {
        return Err(FitError::TooFewPoints { needed, lines: n_lines, got: spec.x.len() });
    }
    for s in seeds {
        if !(s.width > 0.0) {
            return Err(FitError::NonPositiveWidth(s.width));
        }
    }

    // Work on amplitude-normalized data so the normal equations stay well
    // scaled whatever the physical signal magnitude; everything is scaled
    // back before returning.
    let y_scale = spec.y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let y_scaled: Vec<f64> = spec.y.iter().map(|v| v / y_scale).collect();

    let prob = Problem { x: &spec.x, y: &y_scaled, n_lines, fit_baseline };
    let np = prob.n_params();

    let mut p: Vec<f64> = Vec::with_capacity(np);
    for s in seeds {
        p.extend_from_slice(&[s.a / y_scale, s.q / y_scale, s.b0, s.width.ln()]);
    }
    if fit_baseline {
        // median of y as the starting offset
        p.push(median(&y_scaled));
    }

    let mut r = prob.residuals(&p);
    let mut rnorm = norm(&r);
    let mut lambda = LAMBDA_START;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        check_centers(&prob.unpack(&p).0)?;
        let jac = prob.jacobian(&p);
        // Normal equations J^T J and J^T r.
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for i in 0..prob.x.len() {
            let row = &jac[i * np..(i + 1) * np];
            for a in 0..np {
                jtr[a] += row[a] * r[i];
                for b in a..np {
                    jtj[a * np + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[a * np + b] = jtj[b * np + a];
            }
        }

        // Inner damping loop: retry with larger lambda until a step is
        // accepted or the quadratic model says we are at the optimum.
        let mut accepted = false;
        loop {
            let mut m = jtj.clone();
            for a in 0..np {
                let d = jtj[a * np + a];
                m[a * np + a] += lambda * if d > 1e-12 { d } else { 1e-12 };
            }
            let mut rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let step = match solve_dense(&mut m, &mut rhs, np) {
                Ok(s) => s,
                Err(LinalgError::SingularSystem { .. }) => {
                    let (lines, _) = prob.unpack(&p);
                    check_centers(&lines)?;
                    return Err(FitError::Linalg(LinalgError::SingularSystem { cond: f64::INFINITY }));
                }
                Err(e) => return Err(FitError::Linalg(e)),
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let tr = prob.residuals(&trial);
            let tnorm = norm(&tr);

            let rel_change = (rnorm - tnorm).abs() / rnorm.max(f64::MIN_POSITIVE);
            if tnorm <= rnorm {
                // accepted step; residual norm is non-increasing by
                // construction
                p = trial;
                r = tr;
                let prev = rnorm;
                rnorm = tnorm;
                lambda = (lambda / 10.0).max(1e-14);
                iterations += 1;
                accepted = true;
                if (prev - rnorm) / prev.max(f64::MIN_POSITIVE) < REL_TOL {
                    converged = true;
                }
                break;
            }
            if rel_change < REL_TOL {
                // flat to machine precision: already at the optimum
                converged = true;
                iterations += 1;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                // damping exhausted without improvement
                converged = true;
                iterations += 1;
                break;
            }
        }
        let _ = accepted;
        if converged {
            break;
        }
    }

    let result = finalize(&prob, &p, rnorm, iterations, converged, y_scale)?;
    if !converged {
        return Err(FitError::NotConverged { max_iterations: MAX_ITERATIONS, best: Box::new(result) });
    }
    Ok(result)
}

fn check_centers(lines: &[FanoResonance]) -> Result<(), FitError> {
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            if (lines[i].b0 - lines[j].b0).abs() < CENTER_COLLAPSE_MT {
                return Err(FitError::CollapsedCenters { b0: lines[i].b0, b1: lines[j].b0 });
            }
        }
    }
    Ok(())
}

fn finalize(
    prob: &Problem<'_>,
    p: &[f64],
    rnorm: f64,
    iterations: usize,
    converged: bool,
    y_scale: f64,
) -> Result<FitResult, FitError> {
    let np = prob.n_params();
    let (lines, baseline) = prob.unpack(p);

    // Covariance = sigma^2 (J^T J)^-1 in external units: the width column is
    // rescaled from log-space by dB, the amplitude-like columns by y_scale.
    let jac = prob.jacobian(p);
    let mut jtj = vec![0.0; np * np];
    for i in 0..prob.x.len() {
        let row = &jac[i * np..(i + 1) * np];
        for a in 0..np {
            for b in 0..np {
                jtj[a * np + b] += row[a] * row[b];
            }
        }
    }
    let dof = prob.x.len().saturating_sub(np).max(1);
    let sigma2 = rnorm * rnorm / dof as f64;
    let cov_int = invert_dense(&jtj, np)?;
    let mut scale = vec![1.0; np];
    for j in 0..prob.n_lines {
        scale[4 * j] = y_scale;
        scale[4 * j + 1] = y_scale;
        scale[4 * j + 3] = lines[j].width;
    }
    if prob.fit_baseline {
        scale[np - 1] = y_scale;
    }
    let mut covariance = vec![vec![0.0; np]; np];
    for a in 0..np {
        for b in 0..np {
            covariance[a][b] = sigma2 * cov_int[a * np + b] * scale[a] * scale[b];
        }
    }
    // symmetrize against round-off
    for a in 0..np {
        for b in (a + 1)..np {
            let m = 0.5 * (covariance[a][b] + covariance[b][a]);
            covariance[a][b] = m;
            covariance[b][a] = m;
        }
    }

    let resonances = lines
        .iter()
        .map(|l| FanoResonance { a: l.a * y_scale, q: l.q * y_scale, b0: l.b0, width: l.width })
        .collect();
    Ok(FitResult {
        resonances,
        baseline: baseline * y_scale,
        covariance,
        residual_norm: rnorm * y_scale,
        iterations,
        converged,
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Deterministic extrema-based seeding: the `n_lines` strongest local extrema
/// of |y - median| become line centers; widths come from the half-prominence
/// span, A from the extremum height over the median, Q = 0.
pub fn seed_guess(spec: &Spectrum, n_lines: usize) -> Result<Vec<FanoResonance>, FitError> {
    let y = &spec.y;
    let x = &spec.x;
    let med = median(y);
    let mut extrema: Vec<(usize, f64)> = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let strict_max = y[i] > y[i - 1] && y[i] > y[i + 1];
        let strict_min = y[i] < y[i - 1] && y[i] < y[i + 1];
        if strict_max || strict_min {
            extrema.push((i, (y[i] - med).abs()));
        }
    }
    extrema.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    if extrema.len() < n_lines {
        return Err(FitError::TooFewExtrema { found: extrema.len(), requested: n_lines });
    }

    let mut seeds: Vec<FanoResonance> = extrema[..n_lines]
        .iter()
        .map(|&(i, prominence)| {
            let half = prominence / 2.0;
            // walk until |y - med| falls below half prominence
            let mut left = i;
            while left > 0 && (y[left] - med).abs() > half {
                left -= 1;
            }
            let mut right = i;
            while right + 1 < y.len() && (y[right] - med).abs() > half {
                right += 1;
            }
            let grid_step = if x.len() > 1 { x[1] - x[0] } else { 1.0 };
            let width = ((x[right] - x[left]) / 2.0).max(grid_step);
            FanoResonance { a: y[i] - med, q: 0.0, b0: x[i], width }
        })
        .collect();
    seeds.sort_by(|a, b| a.b0.partial_cmp(&b.b0).unwrap());
    Ok(seeds)
}

/// One row of the amplitude-versus-temperature table.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeRow {
    pub temperature: f64,
    /// Per-line (A / A_ref, Q / A_ref), ordered as in the fits.
    pub normalized: Vec<(f64, f64)>,
}

/// Tracks symmetric and antisymmetric amplitudes across a series of fits
/// (one per temperature), normalized by the symmetric amplitude of the
/// reference line.
pub fn amplitude_track(
    fits: &[(f64, FitResult)],
    normalizer_line: usize,
) -> Result<Vec<AmplitudeRow>, FitError> {
    let mut rows = Vec::with_capacity(fits.len());
    let mut n_lines: Option<usize> = None;
    for (t, f) in fits {
        if let Some(n) = n_lines {
            if f.resonances.len() != n {
                return Err(FitError::InconsistentFits(n, f.resonances.len()));
            }
        } else {
            n_lines = Some(f.resonances.len());
        }
        let a_ref = f.resonances[normalizer_line].a;
        if a_ref.abs() < 1e-12 {
            return Err(FitError::NormalizerTooSmall(a_ref));
        }
        rows.push(AmplitudeRow {
            temperature: *t,
            normalized: f.resonances.iter().map(|l| (l.a / a_ref, l.q / a_ref)).collect(),
        });
    }
    Ok(rows)
}

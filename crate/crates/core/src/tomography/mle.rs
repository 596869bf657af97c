//! Iterative maximum-likelihood reconstruction (the `RρR` map).
//!
//! Samples sharing an LO phase `θ` share the diagonal phase matrix
//! `D = diag(e^{inθ})`, so the Born probability of each sample reduces to
//! a real quadratic form `hᵀ·Re(D†ρD)·h` in the Hermite–Gauss vector `h`,
//! and `R` accumulates per phase group as `D·(Σ w·h·hᵀ)·D†`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::density::DensityMatrix;
use super::projector::hermite_gauss;
use super::PhaseTaggedSamples;
use crate::error::{invalid, Result};

/// Probabilities below this are floored before taking logs or dividing.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Smallest dilution tried before a non-improving step is declared stationary.
const MIN_DILUTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MleOptions {
    /// Fock cutoff + 1.
    pub dim: usize,
    pub max_iter: usize,
    /// Stop once the mean log-likelihood gains less than this per iteration.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { dim: 25, max_iter: 2000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// Mean log-likelihood of the initial state and after every accepted step.
    pub log_likelihood: Vec<f64>,
    /// Number of probability evaluations that hit [`PROBABILITY_FLOOR`].
    pub floored: usize,
    /// Steps where the plain `RρR` update lowered the likelihood and a
    /// diluted update `(I + εR)ρ(I + εR)` was taken instead.
    pub diluted_steps: usize,
}

struct PhaseGroup {
    theta: f64,
    start: usize,
    /// Hermite–Gauss rows of the group's samples, `n_g × dim`.
    h: DMatrix<f64>,
}

/// Samples sorted by LO phase and grouped by identical phase.
struct Design {
    dim: usize,
    groups: Vec<PhaseGroup>,
    n: usize,
}

impl Design {
    fn new(samples: &PhaseTaggedSamples, dim: usize) -> Self {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples.theta()[a].total_cmp(&samples.theta()[b]));
        let mut groups = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let theta = samples.theta()[order[start]];
            let end = start + order[start..].iter().take_while(|&&i| samples.theta()[i] == theta).count();
            let mut h = DMatrix::zeros(end - start, dim);
            for (r, &i) in order[start..end].iter().enumerate() {
                for (c, v) in hermite_gauss(samples.x()[i], dim).into_iter().enumerate() {
                    h[(r, c)] = v;
                }
            }
            groups.push(PhaseGroup { theta, start, h });
            start = end;
        }
        Self { dim, groups, n: order.len() }
    }

    /// `e^{−ikθ}` for `k = 0..dim`.
    fn phase_powers(&self, theta: f64) -> Vec<Complex64> {
        (0..self.dim).map(|k| Complex64::from_polar(1.0, -(k as f64) * theta)).collect()
    }

    /// Born probabilities for every (sorted) sample; returns the count floored.
    fn probabilities(&self, rho: &DMatrix<Complex64>, out: &mut [f64]) -> usize {
        let d = self.dim;
        let mut floored = 0;
        let mut s = DMatrix::<f64>::zeros(d, d);
        for g in &self.groups {
            // Re(ρ_mn e^{−i(m−n)θ}), symmetric
            let pw = self.phase_powers(g.theta);
            for m in 0..d {
                s[(m, m)] = rho[(m, m)].re;
                for n in m + 1..d {
                    let v = (rho[(m, n)] * pw[n - m].conj()).re;
                    s[(m, n)] = v;
                    s[(n, m)] = v;
                }
            }
            let y = &g.h * &s;
            let probs = &mut out[g.start..g.start + g.h.nrows()];
            probs.iter_mut().for_each(|p| *p = 0.0);
            for c in 0..d {
                for ((p, a), b) in probs.iter_mut().zip(y.column(c).iter()).zip(g.h.column(c).iter()) {
                    *p += a * b;
                }
            }
            for p in probs.iter_mut() {
                if !(*p > PROBABILITY_FLOOR) {
                    *p = PROBABILITY_FLOOR;
                    floored += 1;
                }
            }
        }
        floored
    }

    fn mean_log_likelihood(&self, probs: &[f64]) -> f64 {
        probs.iter().map(|p| p.ln()).sum::<f64>() / self.n as f64
    }

    /// `R = (1/N)·Σ Π_i / p_i`.
    fn r_operator(&self, probs: &[f64]) -> DMatrix<Complex64> {
        let d = self.dim;
        let mut r = DMatrix::<Complex64>::zeros(d, d);
        for g in &self.groups {
            let mut wh = g.h.clone();
            for (mut row, p) in wh.row_iter_mut().zip(&probs[g.start..]) {
                row /= *p;
            }
            let acc = g.h.tr_mul(&wh);
            let pw = self.phase_powers(g.theta);
            for m in 0..d {
                for n in m..d {
                    let z = pw[n - m] * acc[(m, n)];
                    r[(m, n)] += z;
                    if n != m {
                        r[(n, m)] += z.conj();
                    }
                }
            }
        }
        r / Complex64::new(self.n as f64, 0.0)
    }
}

fn sandwich(op: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let next = op * rho * op;
    Ok(DensityMatrix::from_unnormalised(next)?.matrix().clone())
}

/// Reconstructs the most likely density matrix for `samples`.
///
/// Starts from `I/dim` and iterates `ρ ← N[RρR]`. Any step that would lower
/// the likelihood is replaced by a diluted step with halving `ε`, so the
/// recorded log-likelihood never decreases. Hitting `max_iter` returns the
/// current iterate with `converged = false`.
pub fn mle_reconstruct(samples: &PhaseTaggedSamples, opts: &MleOptions) -> Result<MleResult> {
    if opts.dim == 0 {
        return Err(invalid("MLE dimension must be >= 1"));
    }
    if !(opts.tol >= 0.0) {
        return Err(invalid("MLE tolerance must be >= 0"));
    }
    let design = Design::new(samples, opts.dim);
    let mut rho = DensityMatrix::maximally_mixed(opts.dim)?.matrix().clone();
    let mut probs = vec![0.0; design.n];
    let mut floored = design.probabilities(&rho, &mut probs);
    let mut ll = design.mean_log_likelihood(&probs);
    let mut history = vec![ll];
    let mut converged = false;
    let mut diluted_steps = 0;
    let mut iterations = 0;
    let mut trial_probs = vec![0.0; design.n];
    let identity = DMatrix::<Complex64>::identity(opts.dim, opts.dim);

    while iterations < opts.max_iter {
        let r = design.r_operator(&probs);
        let mut candidate = sandwich(&r, &rho)?;
        let mut trial_floored = design.probabilities(&candidate, &mut trial_probs);
        let mut trial_ll = design.mean_log_likelihood(&trial_probs);

        if trial_ll < ll {
            diluted_steps += 1;
            let mut eps = 0.5;
            while trial_ll < ll && eps >= MIN_DILUTION {
                let op = (&identity + &r * Complex64::new(eps, 0.0)) / Complex64::new(1.0 + eps, 0.0);
                candidate = sandwich(&op, &rho)?;
                trial_floored = design.probabilities(&candidate, &mut trial_probs);
                trial_ll = design.mean_log_likelihood(&trial_probs);
                eps *= 0.5;
            }
            if trial_ll < ll {
                // no ascent direction left: stationary point
                converged = true;
                break;
            }
        }

        iterations += 1;
        let gain = trial_ll - ll;
        rho = candidate;
        std::mem::swap(&mut probs, &mut trial_probs);
        floored += trial_floored;
        ll = trial_ll;
        history.push(ll);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(MleResult {
        rho: DensityMatrix::from_unnormalised(rho)?,
        converged,
        iterations,
        log_likelihood: history,
        floored,
        diluted_steps,
    })
}

//! ARMA-GARCH specification, one-step recursion, and quasi-maximum-likelihood
//! fitting.
//!
//! The conditional variance follows
//! `σ²_t = α0 + Σ αᵢ ε²_{t−i} + Σ βⱼ σ²_{t−j}` and the conditional mean is
//! `μ + Σ φᵢ x_{t−i} + Σ θⱼ ε_{t−j}` over lagged returns and innovations.
//! Fitting maximizes the Gaussian quasi-likelihood with a derivative-free
//! simplex search; stationarity (`Σα + Σβ < 1`) and positivity are enforced
//! through a logistic reparameterization, so an invalid specification can
//! never leave the fitter.

use serde::{Deserialize, Serialize};

use crate::detmath::{exp, ln};
use crate::price::PriceModelError;

/// Persistence is capped just under one to keep the fitted process inside
/// the covariance-stationary region.
const MAX_PERSISTENCE: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    /// Mean return per step.
    pub mu: f64,
    /// Autoregressive coefficients on lagged returns.
    #[serde(default)]
    pub ar: Vec<f64>,
    /// Moving-average coefficients on lagged innovations.
    #[serde(default)]
    pub ma: Vec<f64>,
    /// Variance intercept (> 0).
    pub alpha0: f64,
    /// ARCH coefficients on lagged squared innovations.
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// GARCH coefficients on lagged variances.
    #[serde(default)]
    pub beta: Vec<f64>,
}

impl GarchSpec {
    /// White-noise spec with per-step variance `var`.
    pub fn constant_variance(mu: f64, var: f64) -> Self {
        GarchSpec {
            mu,
            ar: vec![],
            ma: vec![],
            alpha0: var,
            alpha: vec![],
            beta: vec![],
        }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// `α0 / (1 − Σα − Σβ)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.persistence())
    }

    pub fn validate(&self) -> Result<(), PriceModelError> {
        let finite = self.mu.is_finite()
            && self.alpha0.is_finite()
            && self.ar.iter().all(|v| v.is_finite())
            && self.ma.iter().all(|v| v.is_finite())
            && self.alpha.iter().all(|v| v.is_finite())
            && self.beta.iter().all(|v| v.is_finite());
        if !finite {
            return Err(PriceModelError::InvalidSpec("non-finite coefficient".into()));
        }
        if self.alpha0 <= 0.0 {
            return Err(PriceModelError::InvalidSpec("alpha0 must be positive".into()));
        }
        if self.alpha.iter().chain(self.beta.iter()).any(|&v| v < 0.0) {
            return Err(PriceModelError::InvalidSpec(
                "alpha and beta coefficients must be nonnegative".into(),
            ));
        }
        let p = self.persistence();
        if p >= 1.0 {
            return Err(PriceModelError::Stationarity(p));
        }
        Ok(())
    }
}

/// Recursion state: most-recent-first lag buffers sized to the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchState {
    x_lags: Vec<f64>,
    eps_lags: Vec<f64>,
    sigma2_lags: Vec<f64>,
}

impl GarchState {
    /// Stationary start: zero return and innovation history, variance at its
    /// unconditional level.
    pub fn new(spec: &GarchSpec) -> Self {
        let v = if spec.persistence() < 1.0 {
            spec.unconditional_variance()
        } else {
            spec.alpha0
        };
        GarchState {
            x_lags: vec![0.0; spec.ar.len()],
            eps_lags: vec![0.0; spec.ma.len().max(spec.alpha.len())],
            sigma2_lags: vec![v; spec.beta.len()],
        }
    }

    /// Explicit lag values, most recent first. Lengths must match the spec.
    pub fn with_lags(
        spec: &GarchSpec,
        x_lags: Vec<f64>,
        eps_lags: Vec<f64>,
        sigma2_lags: Vec<f64>,
    ) -> Result<Self, PriceModelError> {
        if x_lags.len() != spec.ar.len()
            || eps_lags.len() != spec.ma.len().max(spec.alpha.len())
            || sigma2_lags.len() != spec.beta.len()
        {
            return Err(PriceModelError::DimensionMismatch(
                "lag buffer lengths do not match spec orders".into(),
            ));
        }
        if sigma2_lags.iter().any(|&v| v <= 0.0) {
            return Err(PriceModelError::InvalidSpec(
                "lagged variances must be positive".into(),
            ));
        }
        Ok(GarchState {
            x_lags,
            eps_lags,
            sigma2_lags,
        })
    }

    fn push(buf: &mut [f64], value: f64) {
        if !buf.is_empty() {
            buf.rotate_right(1);
            buf[0] = value;
        }
    }
}

/// Advances the recursion one step with standard-normal innovation `z`.
/// Returns the log return for the step.
pub fn garch_step(spec: &GarchSpec, state: &mut GarchState, z: f64) -> f64 {
    let mut sigma2 = spec.alpha0;
    for (a, e) in spec.alpha.iter().zip(state.eps_lags.iter()) {
        sigma2 += a * e * e;
    }
    for (b, s2) in spec.beta.iter().zip(state.sigma2_lags.iter()) {
        sigma2 += b * s2;
    }
    let eps = sigma2.sqrt() * z;
    let mut ret = spec.mu + eps;
    for (phi, x) in spec.ar.iter().zip(state.x_lags.iter()) {
        ret += phi * x;
    }
    for (theta, e) in spec.ma.iter().zip(state.eps_lags.iter()) {
        ret += theta * e;
    }
    GarchState::push(&mut state.x_lags, ret);
    GarchState::push(&mut state.eps_lags, eps);
    GarchState::push(&mut state.sigma2_lags, sigma2);
    ret
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

fn tanh_clamped(x: f64) -> f64 {
    let x = x.clamp(-20.0, 20.0);
    let e = exp(2.0 * x);
    (e - 1.0) / (e + 1.0)
}

/// Free-parameter layout: `[mu, ln α0, logit(s), split logits…, ar…, ma…]`
/// where `s` is total persistence and the split logits apportion it across
/// the α and β coefficients through a softmax (last logit pinned to zero).
struct ParamMap {
    p: usize,
    q: usize,
    arma_p: usize,
    arma_q: usize,
}

impl ParamMap {
    fn dims(&self) -> usize {
        let coeffs = self.p + self.q;
        3 + coeffs.saturating_sub(1) + self.arma_p + self.arma_q
    }

    fn decode(&self, theta: &[f64]) -> GarchSpec {
        let coeffs = self.p + self.q;
        let mu = theta[0];
        let alpha0 = exp(theta[1].clamp(-200.0, 100.0));
        let s = MAX_PERSISTENCE * sigmoid(theta[2]);
        let mut weights = Vec::with_capacity(coeffs);
        if coeffs > 0 {
            let logits = &theta[3..3 + coeffs - 1];
            let mut exps: Vec<f64> = logits
                .iter()
                .map(|&l| exp(l.clamp(-30.0, 30.0)))
                .collect();
            exps.push(1.0);
            let total: f64 = exps.iter().sum();
            weights.extend(exps.into_iter().map(|e| e / total));
        }
        let alpha: Vec<f64> = weights[..self.p].iter().map(|w| s * w).collect();
        let beta: Vec<f64> = weights[self.p..].iter().map(|w| s * w).collect();
        let arma_base = 3 + coeffs.saturating_sub(1);
        let ar: Vec<f64> = theta[arma_base..arma_base + self.arma_p]
            .iter()
            .map(|&w| 0.99 * tanh_clamped(w))
            .collect();
        let ma: Vec<f64> = theta[arma_base + self.arma_p..arma_base + self.arma_p + self.arma_q]
            .iter()
            .map(|&w| 0.99 * tanh_clamped(w))
            .collect();
        GarchSpec {
            mu,
            ar,
            ma,
            alpha0,
            alpha,
            beta,
        }
    }

    fn encode(&self, mu: f64, alpha0: f64, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let coeffs = self.p + self.q;
        let mut theta = vec![0.0; self.dims()];
        theta[0] = mu;
        theta[1] = ln(alpha0.max(1e-300));
        let s: f64 = alpha.iter().sum::<f64>() + beta.iter().sum::<f64>();
        let s = (s / MAX_PERSISTENCE).clamp(1e-6, 1.0 - 1e-6);
        theta[2] = logit(s);
        if coeffs > 1 {
            let mut weights: Vec<f64> = alpha.iter().chain(beta.iter()).copied().collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w = (*w / total).max(1e-6);
            }
            let last = weights[coeffs - 1];
            for (i, w) in weights[..coeffs - 1].iter().enumerate() {
                theta[3 + i] = ln(w / last);
            }
        }
        theta
    }
}

/// Negative Gaussian quasi-log-likelihood (up to an additive constant).
fn negative_log_likelihood(
    spec: &GarchSpec,
    returns: &[f64],
    presample_mean: f64,
    presample_var: f64,
) -> f64 {
    let mut x_lags = vec![presample_mean; spec.ar.len()];
    let mut eps_lags = vec![0.0; spec.ma.len().max(spec.alpha.len())];
    let mut sigma2_lags = vec![presample_var; spec.beta.len()];
    let mut nll = 0.0;
    for &r in returns {
        let mut sigma2 = spec.alpha0;
        for (a, e) in spec.alpha.iter().zip(eps_lags.iter()) {
            sigma2 += a * e * e;
        }
        for (b, s2) in spec.beta.iter().zip(sigma2_lags.iter()) {
            sigma2 += b * s2;
        }
        let mut mean = spec.mu;
        for (phi, x) in spec.ar.iter().zip(x_lags.iter()) {
            mean += phi * x;
        }
        for (theta, e) in spec.ma.iter().zip(eps_lags.iter()) {
            mean += theta * e;
        }
        let eps = r - mean;
        nll += ln(sigma2) + eps * eps / sigma2;
        GarchState::push(&mut x_lags, r);
        GarchState::push(&mut eps_lags, eps);
        GarchState::push(&mut sigma2_lags, sigma2);
    }
    0.5 * nll
}

/// Nelder–Mead simplex minimizer. Deterministic: ties in the ordering are
/// broken by vertex index.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    steps: &[f64],
    max_iter: u32,
    tol: f64,
) -> (Vec<f64>, f64, u32, bool) {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if (values[worst] - values[best]).abs() < tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for &i in &order[..dim] {
            for (c, x) in centroid.iter_mut().zip(simplex[i].iter()) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(simplex[worst].iter())
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < values[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(simplex[worst].iter())
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = f(&expand);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(simplex[worst].iter())
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect();
            let f_contract = f(&contract);
            if f_contract < values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for (i, vertex) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, b) in vertex.iter_mut().zip(best_point.iter()) {
                        *x = b + 0.5 * (*x - b);
                    }
                    values[i] = f(vertex);
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..values.len() {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    (
        simplex[best_idx].clone(),
        values[best_idx],
        iterations,
        converged,
    )
}

fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

fn autocorr(xs: &[f64], lag: usize) -> f64 {
    let (mean, var) = sample_mean_var(xs);
    if var <= 0.0 {
        return 0.0;
    }
    let n = xs.len();
    let mut c = 0.0;
    for t in lag..n {
        c += (xs[t] - mean) * (xs[t - lag] - mean);
    }
    c / (n as f64 * var)
}

/// Fits an ARMA(`arma_p`,`arma_q`)-GARCH(`p`,`q`) spec to a return series by
/// Gaussian quasi-maximum likelihood.
///
/// Initialization is moment-based: total persistence from the decay of the
/// squared-return autocorrelation, the ARCH share from its first lag. The
/// search runs a simplex pass plus a polish restart from the incumbent.
pub fn fit_garch(
    returns: &[f64],
    p: usize,
    q: usize,
    arma_p: usize,
    arma_q: usize,
) -> Result<GarchSpec, PriceModelError> {
    let min_len = 50 * (p + q + 1);
    if returns.len() < min_len {
        return Err(PriceModelError::SeriesTooShort {
            needed: min_len,
            got: returns.len(),
        });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(PriceModelError::InvalidSpec(
            "return series contains non-finite values".into(),
        ));
    }
    let (mean, var) = sample_mean_var(returns);
    if var < 1e-300 {
        return Err(PriceModelError::ConstantSeries);
    }

    // Moment-based initialization from squared-return autocorrelations:
    // for GARCH(1,1), ρ_{k+1}/ρ_k ≈ α + β.
    let sq: Vec<f64> = returns.iter().map(|r| (r - mean) * (r - mean)).collect();
    let rho1 = autocorr(&sq, 1);
    let rho2 = autocorr(&sq, 2);
    let significant = rho1 > 2.0 / (returns.len() as f64).sqrt();
    let (alpha_share, persistence) = if significant && p > 0 && q > 0 {
        let s = (rho2 / rho1).clamp(0.1, 0.98);
        let a = rho1.clamp(0.02, 0.5 * s);
        (a, s)
    } else {
        (0.025, 0.05)
    };
    let map = ParamMap {
        p,
        q,
        arma_p,
        arma_q,
    };
    let init_alpha = if p > 0 {
        vec![alpha_share / p as f64; p]
    } else {
        vec![]
    };
    let init_beta = if q > 0 {
        vec![(persistence - if p > 0 { alpha_share } else { 0.0 }).max(0.01) / q as f64; q]
    } else {
        vec![]
    };
    let init_s: f64 = init_alpha.iter().sum::<f64>() + init_beta.iter().sum::<f64>();
    let init_alpha0 = (var * (1.0 - init_s)).max(1e-300);
    let x0 = map.encode(mean, init_alpha0, &init_alpha, &init_beta);

    let std = var.sqrt();
    let mut steps = vec![0.3; map.dims()];
    steps[0] = 0.25 * std; // mean moves on the scale of the data

    let objective = |theta: &[f64]| -> f64 {
        let spec = map.decode(theta);
        negative_log_likelihood(&spec, returns, mean, var)
    };

    let (x1, f1, it1, conv1) = nelder_mead(&objective, &x0, &steps, 2000, 1e-8);
    // Polish from the incumbent with a tighter simplex.
    let mut polish_steps = vec![0.05; map.dims()];
    polish_steps[0] = 0.02 * std;
    let (x2, f2, it2, conv2) = nelder_mead(&objective, &x1, &polish_steps, 2000, 1e-8);
    let (best_x, _best_f, converged) = if f2 <= f1 {
        (x2, f2, conv2)
    } else {
        (x1, f1, conv1)
    };

    let spec = map.decode(&best_x);
    spec.validate()?;
    if !converged {
        return Err(PriceModelError::FitNonConvergence {
            best: Box::new(spec),
            iterations: it1 + it2,
        });
    }
    Ok(spec)
}

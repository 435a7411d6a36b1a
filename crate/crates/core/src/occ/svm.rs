//! One-class SVM with an RBF kernel, solved in the dual by SMO.
//!
//! The dual is `min ½ αᵀQα` subject to `0 ≤ α_i ≤ 1/(νn)` and `Σα = 1`, with
//! `Q_ij = exp(-γ‖x_i − x_j‖²)`. Pairs are chosen with second-order working
//! set selection; iteration order is fixed, so training is deterministic.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// KKT gap tolerance, measured on `α / C`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tolerance: 1e-4, max_iterations: 1_000_000 }
    }
}

/// Trained detector: `f(x) = Σ α_i exp(-γ‖x − sv_i‖²) − ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    pub n_train: usize,
    pub iterations: usize,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl OcsvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * (-self.gamma * sq_dist(sv, x)).exp())
            .sum::<f64>()
            - self.rho
    }

    pub fn try_decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.decision(x))
    }

    pub fn upper_bound(&self) -> f64 {
        1.0 / (self.nu * self.n_train as f64)
    }
}

/// `1 / (d · Var(X))` over all entries, or `1/d` for (near-)constant data.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(1, Vec::len).max(1) as f64;
    let count = x.iter().map(Vec::len).sum::<usize>();
    if count == 0 {
        return 1.0 / d;
    }
    let mean = x.iter().flatten().sum::<f64>() / count as f64;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    if var < 1e-12 {
        1.0 / d
    } else {
        1.0 / (d * var)
    }
}

pub fn train_ocsvm(x: &[Vec<f64>], nu: f64, gamma: f64) -> Result<OcsvmModel> {
    train_ocsvm_with(x, nu, gamma, &SolverParams::default())
}

pub fn train_ocsvm_with(x: &[Vec<f64>], nu: f64, gamma: f64, params: &SolverParams) -> Result<OcsvmModel> {
    let n = x.len();
    if n == 0 {
        return Err(Error::invalid("one-class SVM needs at least one training row"));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("training rows differ in dimension"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid(format!("nu = {nu} outside (0, 1]")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma = {gamma} must be positive")));
    }
    if nu * (n as f64) < 1.0 {
        return Err(Error::InfeasibleNu(nu * n as f64));
    }

    let q = kernel_matrix(x, gamma);
    let c = 1.0 / (nu * n as f64);

    // Fill the first floor(νn) multipliers to the bound, the next with the remainder.
    let mut alpha = vec![0.0; n];
    let mut left = 1.0;
    for a in alpha.iter_mut() {
        if left <= 0.0 {
            break;
        }
        *a = c.min(left);
        left -= *a;
    }

    let mut grad = vec![0.0; n];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            for (g, qi) in grad.iter_mut().zip(&q[i * n..(i + 1) * n]) {
                *g += a * qi;
            }
        }
    }

    let eps = params.tolerance * c;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        let Some((i, j)) = select_pair(&q, &grad, &alpha, c, eps, n) else {
            break;
        };
        iterations += 1;
        let quad = (q[i * n + i] + q[j * n + j] - 2.0 * q[i * n + j]).max(1e-12);
        let mut delta = (grad[j] - grad[i]) / quad;
        // Move mass from j to i within the box.
        delta = delta.min(c - alpha[i]).min(alpha[j]);
        if delta <= 0.0 {
            break;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        alpha[i] = if c - alpha[i] - delta <= 0.0 { c } else { alpha[i] + delta };
        alpha[j] = if alpha[j] - delta <= 0.0 { 0.0 } else { alpha[j] - delta };
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (qi, qj) = (&q[i * n..(i + 1) * n], &q[j * n..(j + 1) * n]);
        for t in 0..n {
            grad[t] += di * qi[t] + dj * qj[t];
        }
    }
    if iterations >= params.max_iterations {
        log::warn!("one-class SVM stopped at the iteration cap ({iterations})");
    }

    let rho = compute_rho(&grad, &alpha, c);
    let (support_vectors, alphas) =
        x.iter().zip(&alpha).filter(|(_, &a)| a > 0.0).map(|(r, &a)| (r.clone(), a)).unzip();
    Ok(OcsvmModel { support_vectors, alphas, rho, gamma, nu, n_train: n, iterations })
}

fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
        for j in 0..i {
            let k = (-gamma * sq_dist(&x[i], &x[j])).exp();
            q[i * n + j] = k;
            q[j * n + i] = k;
        }
    }
    q
}

/// Second-order working set selection. Returns `None` once the KKT gap is below `eps`.
fn select_pair(q: &[f64], grad: &[f64], alpha: &[f64], c: f64, eps: f64, n: usize) -> Option<(usize, usize)> {
    // i: largest −G among variables that can grow.
    let mut i = None;
    let mut gmax = f64::NEG_INFINITY;
    for t in 0..n {
        if alpha[t] < c && -grad[t] > gmax {
            gmax = -grad[t];
            i = Some(t);
        }
    }
    let i = i?;
    let mut gmin = f64::INFINITY;
    let mut j = None;
    let mut best = f64::INFINITY;
    for t in 0..n {
        if alpha[t] > 0.0 {
            gmin = gmin.min(-grad[t]);
            let b = gmax + grad[t];
            if b > 0.0 {
                let a = (q[i * n + i] + q[t * n + t] - 2.0 * q[i * n + t]).max(1e-12);
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = Some(t);
                }
            }
        }
    }
    if gmax - gmin < eps {
        return None;
    }
    j.map(|j| (i, j))
}

/// ρ from the KKT conditions: free multipliers pin it exactly; otherwise the
/// midpoint of the feasible interval between bound and zero multipliers.
fn compute_rho(grad: &[f64], alpha: &[f64], c: f64) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    let mut lower = f64::NEG_INFINITY; // max G over α = C
    let mut upper = f64::INFINITY; // min G over α = 0
    for (&g, &a) in grad.iter().zip(alpha) {
        if a >= c {
            lower = lower.max(g);
        } else if a <= 0.0 {
            upper = upper.min(g);
        } else {
            sum += g;
            count += 1;
        }
    }
    if count > 0 {
        sum / count as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else {
        upper
    }
}

//! Pathwise losses of a reduced model against full-model data, and fitting
//! of the reduced parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{default_rtol, pseudo_inverse, Matrix};
use crate::network::ReactionNetwork;
use crate::reduce::{ReducedFile, ReducedModel};
use crate::scalar::{cast_slice, Scalar};
use crate::simulate::TimeSeries;

/// One data point of the loss, with everything that does not depend on
/// `theta` precomputed.
#[derive(Debug, Clone)]
pub struct LossSample<T> {
    /// `Pi x_i`.
    pub x_bar: Vec<T>,
    /// `Pi b(x_i; c)`.
    pub target: Vec<T>,
    /// `Pi Sigma(x_i; c) Pi^T`.
    pub sigma: Matrix<T>,
    /// Pseudo-inverse of `sigma`.
    pub metric: Matrix<T>,
    pub dt: T,
}

/// Loss samples over a series, left-endpoint in time.
#[derive(Debug, Clone)]
pub struct LossData<T = f64> {
    pub samples: Vec<LossSample<T>>,
    network: ReactionNetwork,
}

impl<T: Scalar> LossData<T> {
    pub fn new(reduced: &ReducedModel, net: &ReactionNetwork, c: &[T], ts: &TimeSeries<T>) -> Result<Self> {
        if ts.dim() != net.num_species() {
            return Err(Error::Dimension(format!(
                "series has {} species, network has {}",
                ts.dim(),
                net.num_species()
            )));
        }
        if c.len() != net.num_parameters() {
            return Err(Error::Dimension("parameter vector length".into()));
        }
        let pi = &reduced.maps.pi;
        let steps: Vec<(&[T], T)> = ts.steps().collect();
        let samples = steps
            .par_iter()
            .map(|&(x, dt)| {
                let a = net.propensities(x, c)?;
                let mut b = vec![T::zero(); net.num_species()];
                net.drift_from(&a, &mut b);
                let full = net.diffusion_from(&a);
                let sigma = full.select(pi);
                let pinv = pseudo_inverse(&sigma, default_rtol::<T>(pi.len()))?;
                Ok(LossSample {
                    x_bar: pi.iter().map(|&i| x[i]).collect(),
                    target: pi.iter().map(|&i| b[i]).collect(),
                    sigma,
                    metric: pinv.inverse,
                    dt,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if !samples.is_empty() && samples.iter().all(|s| s.metric.frobenius() == T::zero()) {
            return Err(Error::DegenerateMetric);
        }
        Ok(Self { samples, network: reduced.network.clone() })
    }

    pub fn num_parameters(&self) -> usize {
        self.network.num_parameters()
    }

    fn check_theta(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.num_parameters() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, reduced model has {} parameters",
                theta.len(),
                self.num_parameters()
            )));
        }
        Ok(())
    }

    fn residual(&self, s: &LossSample<T>, theta: &[T], a: &mut [T]) -> Result<Vec<T>> {
        self.network.propensities_into(&s.x_bar, theta, a)?;
        let mut diff = vec![T::zero(); s.target.len()];
        self.network.drift_from(a, &mut diff);
        for (d, &t) in diff.iter_mut().zip(&s.target) {
            *d = *d - t;
        }
        Ok(diff)
    }

    /// `1/2 sum_i |b_bar(Pi x_i; theta) - Pi b(x_i)|^2_Pi dt_i`.
    pub fn loss(&self, theta: &[T]) -> Result<T> {
        self.check_theta(theta)?;
        let terms = self
            .samples
            .par_iter()
            .with_min_len(64)
            .map(|s| {
                let mut a = vec![T::zero(); self.network.num_reactions()];
                let diff = self.residual(s, theta, &mut a)?;
                Ok(T::lit(0.5) * s.metric.quadratic_form(&diff) * s.dt)
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(terms.into_iter().sum())
    }

    /// Loss and its gradient in natural parameter coordinates.
    pub fn loss_and_gradient(&self, theta: &[T]) -> Result<(T, Vec<T>)> {
        self.check_theta(theta)?;
        let k = self.num_parameters();
        let terms = self
            .samples
            .par_iter()
            .with_min_len(64)
            .map(|s| {
                let mut a = vec![T::zero(); self.network.num_reactions()];
                let diff = self.residual(s, theta, &mut a)?;
                let w = s.metric.mul_vec(&diff);
                let value = T::lit(0.5) * diff.iter().zip(&w).map(|(&d, &v)| d * v).sum::<T>() * s.dt;
                let mut g = vec![T::zero(); k];
                for (j, r) in self.network.reactions.iter().enumerate() {
                    let proj: T = r.nu().iter().map(|&(i, n)| T::lit(n as f64) * w[i]).sum();
                    if proj == T::zero() {
                        continue;
                    }
                    for (q, da) in self.network.grad_propensity(j, &s.x_bar, theta)? {
                        g[q] = g[q] + s.dt * proj * da;
                    }
                }
                Ok((value, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = T::zero();
        let mut grad = vec![T::zero(); k];
        for (v, g) in terms {
            total = total + v;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc = *acc + gi;
            }
        }
        Ok((total, grad))
    }

    /// Full pathwise relative entropy split `(R, M)`: `R` sums
    /// `1/2 (tr B - log det B)` over samples with
    /// `B = Sigma_bar^{+1/2} (Pi Sigma Pi^T) Sigma_bar^{+1/2}` restricted to its
    /// retained spectrum; `M` is the drift mismatch weighted by
    /// `Sigma_bar^+` and `dt`.
    pub fn loss_full(&self, theta: &[T]) -> Result<(T, T)> {
        self.check_theta(theta)?;
        let terms = self
            .samples
            .par_iter()
            .with_min_len(64)
            .map(|s| {
                let mut a = vec![T::zero(); self.network.num_reactions()];
                let diff = self.residual(s, theta, &mut a)?;
                let sigma_bar = self.network.diffusion_from(&a);
                let n = sigma_bar.dim();
                let rtol = default_rtol::<T>(n);
                let pinv = pseudo_inverse(&sigma_bar, rtol)?;
                let c = pinv.inverse_sqrt.matmul(&s.sigma).matmul(&pinv.inverse_sqrt);
                let r = relative_entropy_spectrum(&c, rtol);
                let m = T::lit(0.5) * pinv.inverse.quadratic_form(&diff) * s.dt;
                Ok((r, m))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut r = T::zero();
        let mut m = T::zero();
        for (ri, mi) in terms {
            r = r + ri;
            m = m + mi;
        }
        Ok((r, m))
    }
}

/// `1/2 sum (mu - log mu)` over the eigenvalues of `b` above
/// `rtol * mu_max`.
pub fn relative_entropy_spectrum<T: Scalar>(b: &Matrix<T>, rtol: T) -> T {
    let mut sym = b.clone();
    let n = sym.dim();
    for i in 0..n {
        for j in 0..i {
            let v = (sym[(i, j)] + sym[(j, i)]) / T::lit(2.0);
            sym[(i, j)] = v;
            sym[(j, i)] = v;
        }
    }
    let (mu, _) = sym.symmetric_eigen();
    let max = mu.iter().copied().fold(T::zero(), T::max);
    mu.into_iter()
        .filter(|&m| max > T::zero() && m > rtol * max)
        .map(|m| T::lit(0.5) * (m - m.ln()))
        .sum()
}

/// Optimizer used by [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    #[default]
    NelderMead,
    #[serde(rename = "gd")]
    GradientDescent,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nelder-mead" => Ok(Self::NelderMead),
            "gd" => Ok(Self::GradientDescent),
            _ => Err(Error::Invalid(format!("unknown optimizer \"{s}\""))),
        }
    }
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::NelderMead => "nelder-mead",
            Self::GradientDescent => "gd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub optimizer: Optimizer,
    /// Weight of `|theta - theta0|^2`.
    pub lambda: f64,
    pub max_iter: usize,
    /// Relative tolerance on the objective.
    pub tol: f64,
    /// Simplex size (log coordinates) below which Nelder–Mead stops.
    pub xtol: f64,
    /// Also report the full `(R, M)` split at the optimum.
    pub full_loss: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::NelderMead,
            lambda: 0.0,
            max_iter: 20_000,
            tol: 1e-12,
            xtol: 1e-10,
            full_loss: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullLoss {
    pub r: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    pub theta_star: Vec<f64>,
    /// Simplified loss at `theta_star`, without the penalty.
    pub loss_value: f64,
    /// Penalized objective at `theta_star`.
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_full: Option<FullLoss>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub optimizer: Optimizer,
    pub lambda: f64,
    /// Best objective after each iteration.
    #[serde(default)]
    pub history: Vec<f64>,
}

struct Objective<'a> {
    data: &'a LossData<f64>,
    theta0: &'a [f64],
    lambda: f64,
    evaluations: usize,
}

impl Objective<'_> {
    fn theta(phi: &[f64]) -> Vec<f64> {
        phi.iter().map(|p| p.exp()).collect()
    }

    fn penalty(&self, theta: &[f64]) -> f64 {
        self.lambda * theta.iter().zip(self.theta0).map(|(t, t0)| (t - t0).powi(2)).sum::<f64>()
    }

    fn value(&mut self, phi: &[f64]) -> f64 {
        self.value_at(&Self::theta(phi))
    }

    fn value_at(&mut self, theta: &[f64]) -> f64 {
        self.evaluations += 1;
        match self.data.loss(theta) {
            Ok(v) if v.is_finite() => v + self.penalty(theta),
            _ => f64::INFINITY,
        }
    }

    /// Objective and gradient in log coordinates.
    fn value_and_gradient(&mut self, phi: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let theta = Self::theta(phi);
        let (v, g) = self.data.loss_and_gradient(&theta).ok()?;
        let value = v + self.penalty(&theta);
        if !value.is_finite() {
            return None;
        }
        let grad = g
            .iter()
            .zip(&theta)
            .zip(self.theta0)
            .map(|((gi, t), t0)| (gi + 2.0 * self.lambda * (t - t0)) * t)
            .collect();
        Some((value, grad))
    }
}

struct Outcome {
    phi: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Fit `theta` by minimizing `E(theta) + lambda |theta - theta0|^2` over
/// `log theta`, starting from `start` (defaults to `theta0`).
pub fn train(
    reduced: &ReducedModel,
    data: &LossData<f64>,
    start: Option<&[f64]>,
    opts: &TrainOptions,
) -> Result<TrainingResult> {
    if !(opts.lambda >= 0.0) {
        return Err(Error::Invalid("lambda must be nonnegative".into()));
    }
    let theta0 = &reduced.theta0;
    let start = start.unwrap_or(theta0);
    if start.len() != theta0.len() {
        return Err(Error::Dimension("start vector length".into()));
    }
    for (k, &v) in start.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::Invalid(format!(
                "parameter {} must be positive to be fitted in log coordinates, got {v}",
                reduced.network.parameters[k]
            )));
        }
    }
    let mut obj = Objective { data, theta0, lambda: opts.lambda, evaluations: 0 };
    let phi0: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    let f0 = obj.value_at(start);
    if !f0.is_finite() {
        return Err(Error::Invalid("loss is not finite at the starting point".into()));
    }
    let out = if f0 == 0.0 || phi0.is_empty() {
        Outcome { phi: phi0.clone(), value: f0, iterations: 0, converged: true, history: vec![f0] }
    } else {
        match opts.optimizer {
            Optimizer::NelderMead => nelder_mead(&mut obj, &phi0, f0, opts),
            Optimizer::GradientDescent => gradient_descent(&mut obj, &phi0, opts)?,
        }
    };
    let theta_star = if out.phi == phi0 { start.to_vec() } else { Objective::theta(&out.phi) };
    let loss_value = data.loss(&theta_star)?;
    let loss_full = if opts.full_loss {
        let (r, m) = data.loss_full(&theta_star)?;
        Some(FullLoss { r, m })
    } else {
        None
    };
    if !out.converged {
        log::warn!("optimizer stopped after {} iterations without converging", out.iterations);
    }
    Ok(TrainingResult {
        theta_star,
        loss_value,
        objective: out.value,
        loss_full,
        iterations: out.iterations,
        evaluations: obj.evaluations,
        converged: out.converged,
        optimizer: opts.optimizer,
        lambda: opts.lambda,
        history: out.history,
    })
}

/// Adaptive Nelder–Mead with restarts around the incumbent.
fn nelder_mead(obj: &mut Objective<'_>, phi0: &[f64], f0: f64, opts: &TrainOptions) -> Outcome {
    let n = phi0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut best = phi0.to_vec();
    let mut best_f = f0;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut step = 0.1;
    for _restart in 0..4 {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best.clone(), best_f)];
        for i in 0..n {
            let mut p = best.clone();
            p[i] += step;
            let f = obj.value(&p);
            simplex.push((p, f));
        }
        let start_f = best_f;
        let mut local_converged = false;
        while iterations < opts.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (fl, fh) = (simplex[0].1, simplex[n].1);
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if fl == 0.0 || (fh - fl <= opts.tol * fl.abs() && diameter <= opts.xtol) || diameter <= 1e-15 {
                local_converged = true;
                break;
            }
            iterations += 1;
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|(p, _)| p[k]).sum::<f64>() / nf)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n].0).map(|(c, h)| c + t * (c - h)).collect()
            };
            let xr = along(alpha);
            let fr = obj.value(&xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * beta);
                let fe = obj.value(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < fh {
                    let x = along(alpha * gamma);
                    let f = obj.value(&x);
                    (x, f)
                } else {
                    let x = along(-gamma);
                    let f = obj.value(&x);
                    (x, f)
                };
                if fc < fr.min(fh) {
                    simplex[n] = (xc, fc);
                } else {
                    let lo = simplex[0].0.clone();
                    for (p, f) in simplex.iter_mut().skip(1) {
                        for (pk, lk) in p.iter_mut().zip(&lo) {
                            *pk = lk + delta * (*pk - lk);
                        }
                        *f = obj.value(p);
                    }
                }
            }
            let current = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            history.push(current.min(best_f));
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_f {
            best = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if !local_converged {
            break;
        }
        // A restart that does not improve confirms the minimum.
        if best_f == 0.0 || start_f - best_f <= opts.tol * best_f.abs() {
            converged = true;
            break;
        }
        step = (step * 0.5).max(opts.xtol * 1e3);
    }
    Outcome { phi: best, value: best_f, iterations, converged, history }
}

/// Steepest descent with Armijo backtracking.
fn gradient_descent(obj: &mut Objective<'_>, phi0: &[f64], opts: &TrainOptions) -> Result<Outcome> {
    let (mut f, mut g) = obj
        .value_and_gradient(phi0)
        .ok_or_else(|| Error::Invalid("loss is not finite at the starting point".into()))?;
    let mut phi = phi0.to_vec();
    let mut step = 1.0;
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 || f == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = None;
        let mut t = step;
        for _ in 0..80 {
            let trial: Vec<f64> = phi.iter().zip(&g).map(|(p, gi)| p - t * gi).collect();
            if let Some((ft, gt)) = obj.value_and_gradient(&trial) {
                if ft <= f - 1e-4 * t * g2 {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - ft;
        phi = trial;
        f = ft;
        g = gt;
        step = t * 2.0;
        history.push(f);
        if decrease <= opts.tol * f.abs() {
            converged = true;
            break;
        }
    }
    Ok(Outcome { phi, value: f, iterations, converged, history })
}

pub const FITTED_SCHEMA_VERSION: u32 = 1;

/// `fitted.json` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFile {
    pub schema_version: u32,
    pub training: TrainingResult,
    pub reduced: ReducedFile,
    /// The reduced network with `theta_star` as parameter values.
    pub network: serde_json::Value,
}

impl FittedFile {
    pub fn new(reduced: &ReducedModel, training: TrainingResult) -> Result<Self> {
        let fitted = reduced.with_theta(&training.theta_star)?;
        Ok(Self {
            schema_version: FITTED_SCHEMA_VERSION,
            reduced: reduced.to_file(),
            network: fitted.to_json_value(),
            training,
        })
    }
}

/// Simplified loss in one call; see [`LossData::loss`].
pub fn loss_simplified<T: Scalar>(
    reduced: &ReducedModel,
    net: &ReactionNetwork,
    c: &[T],
    ts: &TimeSeries<T>,
    theta: &[T],
) -> Result<T> {
    LossData::new(reduced, net, c, ts)?.loss(theta)
}

/// Full loss split in one call; see [`LossData::loss_full`].
pub fn loss_full<T: Scalar>(
    reduced: &ReducedModel,
    net: &ReactionNetwork,
    c: &[T],
    ts: &TimeSeries<T>,
    theta: &[T],
) -> Result<(T, T)> {
    LossData::new(reduced, net, c, ts)?.loss_full(theta)
}

/// `theta0` of a reduced model in `T`.
pub fn theta0<T: Scalar>(reduced: &ReducedModel) -> Vec<T> {
    cast_slice(&reduced.theta0)
}

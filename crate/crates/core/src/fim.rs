//! Pathwise Fisher information of a reaction network estimated from time
//! series, and the classical forward-sensitivity comparison.
//!
//! Every estimator is a left-endpoint sum over the steps of a series:
//! the state at the start of step `i` is paired with `dt_i`. For SSA output
//! this is exact, because the state is constant over each holding interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::ReactionNetwork;
use crate::scalar::Scalar;
use crate::simulate::{Ensemble, SeriesKind, TimeSeries};

/// Parameter scale of an information estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Perturbations of `log c`; entry `(k, l)` carries the factor `c_k c_l`.
    #[default]
    Log,
    Natural,
}

/// Diagonal of the pathwise FIM with its ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationRanking<T = f64> {
    pub xi: Vec<T>,
    /// Parameters by decreasing information; ties keep ascending index.
    pub order: Vec<usize>,
    /// `cumulative[m]` is the share of the trace held by `order[..=m]`.
    pub cumulative: Vec<T>,
    pub scale: Scale,
    /// Monte Carlo standard errors, for ensemble estimates.
    pub stderr: Option<Vec<T>>,
}

impl<T: Scalar> InformationRanking<T> {
    pub fn from_xi(xi: Vec<T>, scale: Scale) -> Self {
        let mut order: Vec<usize> = (0..xi.len()).collect();
        order.sort_by(|&a, &b| xi[b].partial_cmp(&xi[a]).unwrap_or(std::cmp::Ordering::Equal));
        let total: T = order.iter().map(|&k| xi[k]).sum();
        let mut acc = T::zero();
        let cumulative = order
            .iter()
            .map(|&k| {
                acc = acc + xi[k];
                if total > T::zero() {
                    acc / total
                } else {
                    T::zero()
                }
            })
            .collect();
        Self { xi, order, cumulative, scale, stderr: None }
    }

    pub fn trace(&self) -> T {
        self.xi.iter().copied().sum()
    }

    /// Smallest prefix of `order` whose share reaches `kappa`, returned in
    /// ascending index order. `kappa = 1` selects every parameter.
    pub fn select(&self, kappa: f64) -> Result<Vec<usize>> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::Invalid(format!("kappa must lie in (0, 1], got {kappa}")));
        }
        if !(self.trace() > T::zero()) {
            return Err(Error::NoInformation);
        }
        let count = if kappa >= 1.0 {
            self.xi.len()
        } else {
            let kappa = T::lit(kappa);
            self.cumulative.iter().position(|&s| s >= kappa).map_or(self.xi.len(), |m| m + 1)
        };
        let mut p = self.order[..count].to_vec();
        p.sort_unstable();
        Ok(p)
    }
}

/// Block-diagonal pathwise FIM. Parameters that never appear together in a
/// propensity sit in different blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks<T = f64> {
    pub blocks: Vec<FimBlock<T>>,
    pub scale: Scale,
    num_params: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FimBlock<T = f64> {
    /// Global parameter indices, ascending.
    pub params: Vec<usize>,
    pub matrix: Matrix<T>,
}

impl<T: Scalar> FimBlocks<T> {
    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.num_params];
        for b in &self.blocks {
            for (a, &k) in b.params.iter().enumerate() {
                d[k] = b.matrix[(a, a)];
            }
        }
        d
    }

    /// Entry `(k, l)`; zero across blocks.
    pub fn get(&self, k: usize, l: usize) -> T {
        for b in &self.blocks {
            if let (Ok(a), Ok(c)) = (b.params.binary_search(&k), b.params.binary_search(&l)) {
                return b.matrix[(a, c)];
            }
        }
        T::zero()
    }

    pub fn dense(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.num_params);
        for b in &self.blocks {
            for (a, &k) in b.params.iter().enumerate() {
                for (c, &l) in b.params.iter().enumerate() {
                    m[(k, l)] = b.matrix[(a, c)];
                }
            }
        }
        m
    }
}

/// Groups of parameters connected through shared propensities.
pub fn parameter_blocks(net: &ReactionNetwork) -> Vec<Vec<usize>> {
    let k = net.num_parameters();
    let mut parent: Vec<usize> = (0..k).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for r in &net.reactions {
        if let Some((&first, rest)) = r.params().split_first() {
            for &other in rest {
                let (a, b) = (root(&mut parent, first), root(&mut parent, other));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for i in 0..k {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn check_inputs<T: Scalar>(net: &ReactionNetwork, c: &[T], ts: &TimeSeries<T>) -> Result<()> {
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
    Ok(())
}

/// Parameter gradients of `a_j` at `x`, or `None` when the reaction carries
/// no information there (`a_j = 0` with vanishing gradient).
fn informative_gradient<T: Scalar>(
    net: &ReactionNetwork,
    j: usize,
    x: &[T],
    c: &[T],
    sample: usize,
) -> Result<Option<(T, Vec<(usize, T)>)>> {
    let a = net.propensity(j, x, c)?;
    let g = net.grad_propensity(j, x, c)?;
    if a == T::zero() {
        if let Some(&(k, _)) = g.iter().find(|(_, v)| *v != T::zero()) {
            return Err(Error::SingularInformation { sample, reaction: j, parameter: k });
        }
        return Ok(None);
    }
    Ok(Some((a, g)))
}

/// `xi_k = sum_i sum_j (d a_j / d c_k)^2 / a_j dt_i`, the mean-field diagonal
/// with the series standing in for the mean-field path.
pub fn fim_diag_mean_field<T: Scalar>(
    net: &ReactionNetwork,
    c: &[T],
    ts: &TimeSeries<T>,
    scale: Scale,
) -> Result<InformationRanking<T>> {
    Ok(InformationRanking::from_xi(raw_diagonal(net, c, ts, scale)?, scale))
}

fn raw_diagonal<T: Scalar>(
    net: &ReactionNetwork,
    c: &[T],
    ts: &TimeSeries<T>,
    scale: Scale,
) -> Result<Vec<T>> {
    check_inputs(net, c, ts)?;
    let mut xi = vec![T::zero(); net.num_parameters()];
    for (i, (x, dt)) in ts.steps().enumerate() {
        for j in 0..net.num_reactions() {
            if let Some((a, g)) = informative_gradient(net, j, x, c, i)? {
                for (k, gk) in g {
                    xi[k] = xi[k] + gk * gk * (dt / a);
                }
            }
        }
    }
    if scale == Scale::Log {
        for (v, &ck) in xi.iter_mut().zip(c) {
            *v = *v * ck * ck;
        }
    }
    Ok(xi)
}

/// Full block structure of the mean-field pFIM: the outer products
/// `a_j (grad log a_j)(grad log a_j)^T dt_i` accumulated per block.
pub fn fim_blocks_mean_field<T: Scalar>(
    net: &ReactionNetwork,
    c: &[T],
    ts: &TimeSeries<T>,
    scale: Scale,
) -> Result<FimBlocks<T>> {
    check_inputs(net, c, ts)?;
    let groups = parameter_blocks(net);
    let mut locate = vec![(0, 0); net.num_parameters()];
    for (b, g) in groups.iter().enumerate() {
        for (a, &k) in g.iter().enumerate() {
            locate[k] = (b, a);
        }
    }
    let mut mats: Vec<Matrix<T>> = groups.iter().map(|g| Matrix::zeros(g.len())).collect();
    for (i, (x, dt)) in ts.steps().enumerate() {
        for j in 0..net.num_reactions() {
            let Some((a, g)) = informative_gradient(net, j, x, c, i)? else { continue };
            let w = dt / a;
            for &(k, gk) in &g {
                let (b, p) = locate[k];
                for &(l, gl) in &g {
                    let q = locate[l].1;
                    mats[b][(p, q)] = mats[b][(p, q)] + gk * gl * w;
                }
            }
        }
    }
    if scale == Scale::Log {
        for (g, m) in groups.iter().zip(mats.iter_mut()) {
            for (p, &k) in g.iter().enumerate() {
                for (q, &l) in g.iter().enumerate() {
                    m[(p, q)] = m[(p, q)] * (c[k] * c[l]);
                }
            }
        }
    }
    let blocks = groups
        .into_iter()
        .zip(mats)
        .map(|(params, matrix)| FimBlock { params, matrix })
        .collect();
    Ok(FimBlocks { blocks, scale, num_params: net.num_parameters() })
}

/// Monte Carlo pFIM diagonal over an SSA ensemble: the per-trajectory
/// holding-interval sums averaged over members, with standard errors.
pub fn fim_diag_stochastic(
    net: &ReactionNetwork,
    c: &[f64],
    ens: &Ensemble,
    scale: Scale,
) -> Result<InformationRanking<f64>> {
    if ens.kind() != SeriesKind::Ssa {
        return Err(Error::Invalid("stochastic pFIM needs an SSA ensemble".into()));
    }
    if ens.is_empty() {
        return Err(Error::Invalid("empty ensemble".into()));
    }
    let per_member = ens
        .members
        .par_iter()
        .map(|ts| raw_diagonal(net, c, ts, scale))
        .collect::<Result<Vec<_>>>()?;
    let m = per_member.len() as f64;
    let k = net.num_parameters();
    let mut mean = vec![0.0; k];
    for row in &per_member {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let stderr = (0..k)
        .map(|p| {
            if per_member.len() < 2 {
                return 0.0;
            }
            let ss: f64 = per_member.iter().map(|row| (row[p] - mean[p]).powi(2)).sum();
            (ss / (m - 1.0) / m).sqrt()
        })
        .collect();
    let mut ranking = InformationRanking::from_xi(mean, scale);
    ranking.stderr = Some(stderr);
    Ok(ranking)
}

/// Information carried by each reaction: the sum of `xi_k` over the
/// parameters it reads, normalized by the same sum over all reactions.
/// Parameters shared by several reactions are counted once per reaction.
pub fn reaction_information_share<T: Scalar>(
    net: &ReactionNetwork,
    ranking: &InformationRanking<T>,
) -> Result<Vec<T>> {
    if ranking.xi.len() != net.num_parameters() {
        return Err(Error::Dimension("ranking does not match the network".into()));
    }
    let raw: Vec<T> = net
        .reactions
        .iter()
        .map(|r| r.params().iter().map(|&k| ranking.xi[k]).sum())
        .collect();
    let total: T = raw.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::NoInformation);
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Forward sensitivities of the species time averages.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverageSensitivity<T = f64> {
    /// Mean-field time average of each species.
    pub time_average: Vec<T>,
    /// `indices[i][k] = c_k d(avg z_i)/d c_k`.
    pub indices: Vec<Vec<T>>,
}

/// Integrates `z' = b(z; c)` together with `s_k' = (db/dz) s_k + db/dc_k`
/// by RK4 and returns the log-scale sensitivities of the trapezoidal time
/// averages of `z`.
pub fn adjoint_sensitivities<T: Scalar>(
    net: &ReactionNetwork,
    c: &[T],
    x0: &[T],
    t_end: T,
    dt: T,
) -> Result<TimeAverageSensitivity<T>> {
    let d = net.num_species();
    let k = net.num_parameters();
    if x0.len() != d || c.len() != k {
        return Err(Error::Dimension("initial state or parameters do not match the network".into()));
    }
    let grid = crate::simulate::uniform_grid(t_end, dt)?;
    let n = d * (k + 1);
    let rhs = |y: &[T], out: &mut [T]| -> Result<()> {
        out.iter_mut().for_each(|v| *v = T::zero());
        let z = &y[..d];
        for (j, r) in net.reactions.iter().enumerate() {
            let a = net.propensity(j, z, c)?;
            let gz = net.species_grad_propensity(j, z, c)?;
            let gc = net.grad_propensity(j, z, c)?;
            let mut da = vec![T::zero(); k];
            for (p, slot) in da.iter_mut().enumerate() {
                let s = &y[d * (p + 1)..d * (p + 2)];
                *slot = gz.iter().map(|&(l, g)| g * s[l]).sum();
            }
            for (p, g) in gc {
                da[p] = da[p] + g;
            }
            for &(i, nu) in r.nu() {
                let nu = T::lit(nu as f64);
                out[i] = out[i] + nu * a;
                for (p, &v) in da.iter().enumerate() {
                    out[d * (p + 1) + i] = out[d * (p + 1) + i] + nu * v;
                }
            }
        }
        Ok(())
    };
    let mut y = vec![T::zero(); n];
    y[..d].copy_from_slice(x0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let half = T::lit(0.5);
    let mut integral = vec![T::zero(); n];
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let prev = y.clone();
        rhs(&y, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + h * half * k1[i];
        }
        rhs(&tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * half * k2[i];
        }
        rhs(&tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4)?;
        for i in 0..n {
            y[i] = y[i] + h / T::lit(6.0) * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: w[1].to_f64_lossy() });
        }
        for i in 0..n {
            integral[i] = integral[i] + half * h * (prev[i] + y[i]);
        }
    }
    let total = t_end;
    let time_average = integral[..d].iter().map(|&v| v / total).collect();
    let indices = (0..d)
        .map(|i| (0..k).map(|p| c[p] * integral[d * (p + 1) + i] / total).collect())
        .collect();
    Ok(TimeAverageSensitivity { time_average, indices })
}

/// `fim.json` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimReport {
    pub schema_version: u32,
    pub scale: Scale,
    pub parameters: Vec<String>,
    pub xi: Vec<f64>,
    pub order: Vec<usize>,
    pub cumulative: Vec<f64>,
    pub blocks: Vec<BlockReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub params: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

pub const FIM_SCHEMA_VERSION: u32 = 1;

impl FimReport {
    pub fn new(
        net: &ReactionNetwork,
        ranking: &InformationRanking<f64>,
        blocks: Option<&FimBlocks<f64>>,
    ) -> Self {
        let blocks = blocks
            .map(|b| {
                b.blocks
                    .iter()
                    .map(|blk| {
                        let (mut eig, _) = blk.matrix.symmetric_eigen();
                        eig.sort_by(|a, b| b.total_cmp(a));
                        BlockReport { params: blk.params.clone(), matrix: blk.matrix.rows(), eigenvalues: eig }
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            schema_version: FIM_SCHEMA_VERSION,
            scale: ranking.scale,
            parameters: net.parameters.clone(),
            xi: ranking.xi.clone(),
            order: ranking.order.clone(),
            cumulative: ranking.cumulative.clone(),
            blocks,
            stderr: ranking.stderr.clone(),
        }
    }

    pub fn ranking(&self) -> InformationRanking<f64> {
        let mut r = InformationRanking::from_xi(self.xi.clone(), self.scale);
        r.stderr = self.stderr.clone();
        r
    }
}

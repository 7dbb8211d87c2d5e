//! Jump-process, tau-leap and Euler–Maruyama CLE simulators.
//!
//! All three draw from a ChaCha8 stream seeded with `seed_from_u64(seed)`,
//! so a run is a pure function of `(network, c, x0, settings, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::network::ReactionNetwork;

use super::series::{uniform_grid, SeriesKind, TimeSeries};

/// Name of the generator recorded in outputs.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.3, seed_from_u64)";

/// Upper bound on recorded jumps for one SSA trajectory.
pub const MAX_JUMPS: usize = 10_000_000;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_dims(net: &ReactionNetwork, c: &[f64], x0: &[f64]) -> Result<()> {
    if x0.len() != net.num_species() || c.len() != net.num_parameters() {
        return Err(Error::Dimension("initial state or parameters do not match the network".into()));
    }
    Ok(())
}

fn finish(
    net: &ReactionNetwork,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    kind: SeriesKind,
    seed: u64,
) -> Result<TimeSeries> {
    let mut ts = TimeSeries::new(net.species.clone(), times, states, kind)?;
    ts.meta.seed = Some(seed);
    ts.meta.rng = Some(RNG_ALGORITHM.to_string());
    Ok(ts)
}

/// Gillespie direct method. Records every jump plus the final state at
/// `t_end`. A channel whose firing would make a population negative is
/// treated as having zero propensity.
pub fn simulate_ssa(
    net: &ReactionNetwork,
    c: &[f64],
    x0: &[f64],
    t_end: f64,
    seed: u64,
) -> Result<TimeSeries> {
    check_dims(net, c, x0)?;
    if x0.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
        return Err(Error::Invalid("SSA needs a nonnegative integer initial state".into()));
    }
    if !(t_end > 0.0) {
        return Err(Error::Invalid("t_end must be positive".into()));
    }
    let mut rng = rng_for(seed);
    let mut a = vec![0.0; net.num_reactions()];
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let (mut clamped, mut blocked) = (0u64, 0u64);
    loop {
        clamped += net.propensities_into(&x, c, &mut a)? as u64;
        for (aj, r) in a.iter_mut().zip(&net.reactions) {
            if *aj > 0.0 && r.nu().iter().any(|&(i, n)| x[i] + (n as f64) < 0.0) {
                *aj = 0.0;
                blocked += 1;
            }
        }
        let a0: f64 = a.iter().sum();
        if !(a0 > 0.0) {
            break;
        }
        let u: f64 = rng.gen();
        let tau = -(1.0 - u).ln() / a0;
        if t + tau >= t_end {
            break;
        }
        let target = rng.gen::<f64>() * a0;
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, &aj) in a.iter().enumerate() {
            if aj > 0.0 {
                acc += aj;
                chosen = Some(j);
                if target < acc {
                    break;
                }
            }
        }
        let j = chosen.expect("a0 > 0 implies a positive channel");
        for &(i, n) in net.reactions[j].nu() {
            x[i] += n as f64;
        }
        t += tau;
        if times.len() > MAX_JUMPS {
            return Err(Error::TooManyJumps { limit: MAX_JUMPS });
        }
        times.push(t);
        states.push(x.clone());
    }
    if *times.last().unwrap() < t_end {
        times.push(t_end);
        states.push(x);
    }
    let mut ts = finish(net, times, states, SeriesKind::Ssa, seed)?;
    ts.meta.clamped = clamped;
    ts.meta.blocked = blocked;
    Ok(ts)
}

/// Explicit tau-leap with Poisson channel counts; negative populations are
/// clipped to zero and counted.
pub fn simulate_tau_leap(
    net: &ReactionNetwork,
    c: &[f64],
    x0: &[f64],
    dt: f64,
    t_end: f64,
    seed: u64,
) -> Result<TimeSeries> {
    check_dims(net, c, x0)?;
    let grid = uniform_grid(t_end, dt)?;
    let mut rng = rng_for(seed);
    let mut a = vec![0.0; net.num_reactions()];
    let mut x = x0.to_vec();
    let mut states = vec![x.clone()];
    let (mut clamped, mut clipped) = (0u64, 0u64);
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        clamped += net.propensities_into(&x, c, &mut a)? as u64;
        let mut next = x.clone();
        for (r, &aj) in net.reactions.iter().zip(&a) {
            let mean = aj * h;
            if mean <= 0.0 {
                continue;
            }
            let k: f64 = Poisson::new(mean)
                .map_err(|e| Error::Invalid(format!("poisson mean {mean}: {e}")))?
                .sample(&mut rng);
            for &(i, n) in r.nu() {
                next[i] += k * n as f64;
            }
        }
        for v in next.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            }
        }
        x = next;
        states.push(x.clone());
    }
    let mut ts = finish(net, grid, states, SeriesKind::Tau, seed)?;
    ts.meta.clamped = clamped;
    ts.meta.clipped = clipped;
    Ok(ts)
}

/// Euler–Maruyama chemical Langevin equation
/// `x' = x + nu a dt + nu sqrt(diag(a)) dW` with one Wiener component per
/// channel. Negative populations are clipped to zero and counted.
pub fn simulate_cle(
    net: &ReactionNetwork,
    c: &[f64],
    x0: &[f64],
    dt: f64,
    t_end: f64,
    seed: u64,
) -> Result<TimeSeries> {
    simulate_cle_scaled(net, c, x0, dt, t_end, seed, 1.0)
}

/// CLE with the diffusion term multiplied by `noise_scale`; zero gives
/// explicit Euler on the reaction-rate ODE.
pub fn simulate_cle_scaled(
    net: &ReactionNetwork,
    c: &[f64],
    x0: &[f64],
    dt: f64,
    t_end: f64,
    seed: u64,
    noise_scale: f64,
) -> Result<TimeSeries> {
    check_dims(net, c, x0)?;
    let grid = uniform_grid(t_end, dt)?;
    let mut rng = rng_for(seed);
    let mut a = vec![0.0; net.num_reactions()];
    let mut b = vec![0.0; net.num_species()];
    let mut x = x0.to_vec();
    let mut states = vec![x.clone()];
    let (mut clamped, mut clipped) = (0u64, 0u64);
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        clamped += net.propensities_into(&x, c, &mut a)? as u64;
        net.drift_from(&a, &mut b);
        let mut next: Vec<f64> = x.iter().zip(&b).map(|(xi, bi)| xi + bi * h).collect();
        for (r, &aj) in net.reactions.iter().zip(&a) {
            let z: f64 = StandardNormal.sample(&mut rng);
            let amp = noise_scale * (aj * h).sqrt() * z;
            if amp == 0.0 {
                continue;
            }
            for &(i, n) in r.nu() {
                next[i] += n as f64 * amp;
            }
        }
        for v in next.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: w[1] });
        }
        x = next;
        states.push(x.clone());
    }
    let mut ts = finish(net, grid, states, SeriesKind::Cle, seed)?;
    ts.meta.clamped = clamped;
    ts.meta.clipped = clipped;
    Ok(ts)
}

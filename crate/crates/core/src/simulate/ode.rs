use crate::error::{Error, Result};
use crate::network::ReactionNetwork;
use crate::scalar::Scalar;

use super::series::{uniform_grid, SeriesKind, TimeSeries};

/// Reaction-rate ODE `z' = nu a(z; c)` on a uniform grid, classical RK4.
pub fn simulate_ode<T: Scalar>(
    net: &ReactionNetwork,
    c: &[T],
    x0: &[T],
    t_end: T,
    dt: T,
) -> Result<TimeSeries<T>> {
    simulate_ode_on_grid(net, c, x0, &uniform_grid(t_end, dt)?)
}

/// RK4 with one step per grid interval; every grid point is recorded.
pub fn simulate_ode_on_grid<T: Scalar>(
    net: &ReactionNetwork,
    c: &[T],
    x0: &[T],
    times: &[T],
) -> Result<TimeSeries<T>> {
    let d = net.num_species();
    if x0.len() != d || c.len() != net.num_parameters() {
        return Err(Error::Dimension("initial state or parameters do not match the network".into()));
    }
    let mut rhs = Rhs { net, c, a: vec![T::zero(); net.num_reactions()], clamped: 0 };
    let mut states = Vec::with_capacity(times.len());
    let mut x = x0.to_vec();
    states.push(x.clone());
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d]);
    let mut tmp = vec![T::zero(); d];
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let blow_up = |e: Error| match e {
            Error::NonFinite { .. } => Error::BlowUp { time: w[0].to_f64_lossy() },
            e => e,
        };
        rhs.eval(&x, &mut k1).map_err(blow_up)?;
        for i in 0..d {
            tmp[i] = x[i] + h / two * k1[i];
        }
        rhs.eval(&tmp, &mut k2).map_err(blow_up)?;
        for i in 0..d {
            tmp[i] = x[i] + h / two * k2[i];
        }
        rhs.eval(&tmp, &mut k3).map_err(blow_up)?;
        for i in 0..d {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs.eval(&tmp, &mut k4).map_err(blow_up)?;
        for i in 0..d {
            x[i] = x[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: w[1].to_f64_lossy() });
        }
        states.push(x.clone());
    }
    let mut ts = TimeSeries::new(net.species.clone(), times.to_vec(), states, SeriesKind::Ode)?;
    ts.meta.clamped = rhs.clamped;
    Ok(ts)
}

struct Rhs<'a, T> {
    net: &'a ReactionNetwork,
    c: &'a [T],
    a: Vec<T>,
    clamped: u64,
}

impl<T: Scalar> Rhs<'_, T> {
    fn eval(&mut self, x: &[T], out: &mut [T]) -> Result<()> {
        self.clamped += self.net.propensities_into(x, self.c, &mut self.a)? as u64;
        self.net.drift_from(&self.a, out);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_model;

    fn one_species(rate: &str, reactants: &str, products: &str, c: f64) -> ReactionNetwork {
        parse_model(&format!(
            r#"{{"species": [{{"name": "A", "initial": 1}}], "parameters": [{{"name": "c", "value": {c}}}],
                "reactions": [{{"reactants": {reactants}, "products": {products}, "rate": {rate}}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn exponential_decay() {
        let net = one_species(r#"{"mass_action": "c"}"#, r#"{"A": 1}"#, "{}", 1.0);
        let ts = simulate_ode(&net, &[1.0], &[1.0], 1.0, 1e-3).unwrap();
        assert!((ts.states.last().unwrap()[0] - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn linear_growth() {
        let net = one_species(r#"{"mass_action": "c"}"#, "{}", r#"{"A": 1}"#, 5.0);
        let ts: TimeSeries<f64> = simulate_ode(&net, &[5.0], &[0.0], 2.0, 0.01).unwrap();
        assert!((ts.states.last().unwrap()[0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_network_is_constant() {
        let net = ReactionNetwork::new(vec!["A".into()], vec![2.0], vec![], vec![], vec![]).unwrap();
        let ts = simulate_ode::<f64>(&net, &[], &[2.0], 1.0, 0.1).unwrap();
        assert!(ts.states.iter().all(|s| s[0] == 2.0));
    }

    #[test]
    fn blow_up_reported() {
        let net = one_species(r#"{"expr": "c * A^3"}"#, "{}", r#"{"A": 1}"#, 1.0);
        let err = simulate_ode(&net, &[1.0], &[1.0], 10.0, 0.01).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err}");
    }

    #[test]
    fn single_precision_decay() {
        let net = one_species(r#"{"mass_action": "c"}"#, r#"{"A": 1}"#, "{}", 1.0);
        let ts = simulate_ode::<f32>(&net, &[1.0], &[1.0], 1.0, 1e-2).unwrap();
        assert!((ts.states.last().unwrap()[0] - (-1f32).exp()).abs() < 1e-5);
    }
}

//! Model parameters and the per-station state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate parameters of one reactor or network variant.
///
/// Built through [`derive_params`] (or one of the `with_*` helpers), which
/// guarantees `eta = lambda / mu` and `q = 1 - p` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
    nu: f64,
    p: f64,
    eta: f64,
    q: f64,
}

fn check_rate(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("rate must be finite and > 0, got {v}")))
    }
}

/// Validates the rates and fills in the derived quantities.
///
/// `nu` defaults to `mu + beta`.
pub fn derive_params(
    lambda: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
    p: f64,
    nu: Option<f64>,
) -> Result<ModelParams> {
    check_rate("lambda", lambda)?;
    check_rate("mu", mu)?;
    check_rate("alpha", alpha)?;
    check_rate("beta", beta)?;
    let nu = nu.unwrap_or(mu + beta);
    check_rate("nu", nu)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("p out of range [0,1]: {p}")));
    }
    Ok(ModelParams {
        lambda,
        mu,
        alpha,
        beta,
        nu,
        p,
        eta: lambda / mu,
        q: 1.0 - p,
    })
}

impl ModelParams {
    /// Parameters given by density instead of arrival rate (`lambda = eta * mu`).
    pub fn from_eta(eta: f64, mu: f64, alpha: f64, beta: f64, p: f64) -> Result<Self> {
        check_rate("eta", eta)?;
        check_rate("mu", mu)?;
        derive_params(eta * mu, mu, alpha, beta, p, None)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// True when `nu` equals `mu + beta` (the DOCS default).
    pub fn nu_is_default(&self) -> bool {
        (self.nu - (self.mu + self.beta)).abs() <= 1e-12 * self.nu
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        derive_params(self.lambda, self.mu, self.alpha, self.beta, p, self.explicit_nu())
    }

    /// Keeps `mu` and rescales `lambda` so that `lambda / mu = eta`.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        check_rate("eta", eta)?;
        derive_params(eta * self.mu, self.mu, self.alpha, self.beta, self.p, self.explicit_nu())
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        derive_params(self.lambda, mu, self.alpha, self.beta, self.p, self.explicit_nu())
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        derive_params(self.lambda, self.mu, alpha, self.beta, self.p, self.explicit_nu())
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        derive_params(self.lambda, self.mu, self.alpha, beta, self.p, self.explicit_nu())
    }

    fn explicit_nu(&self) -> Option<f64> {
        if self.nu_is_default() {
            None
        } else {
            Some(self.nu)
        }
    }
}

/// Susceptible (`x`) and infected (`y`) counts at one station.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReactorState {
    pub x: u32,
    pub y: u32,
}

impl ReactorState {
    pub const EMPTY: ReactorState = ReactorState { x: 0, y: 0 };

    pub fn new(x: u32, y: u32) -> Self {
        ReactorState { x, y }
    }

    pub fn total(&self) -> u64 {
        u64::from(self.x) + u64::from(self.y)
    }

    pub fn is_empty(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub(crate) fn inc_x(&mut self) -> Result<()> {
        self.x = self.x.checked_add(1).ok_or(Error::Overflow("susceptible count"))?;
        Ok(())
    }

    pub(crate) fn inc_y(&mut self) -> Result<()> {
        self.y = self.y.checked_add(1).ok_or(Error::Overflow("infected count"))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_fields() {
        let m = derive_params(1.0, 1.0, 1.0, 1.0, 0.5, None).unwrap();
        assert_eq!(m.eta(), 1.0);
        assert_eq!(m.q(), 0.5);
        assert_eq!(m.nu(), 2.0);

        let m = derive_params(2.0, 1.0, 1.0, 1.0, 0.0, None).unwrap();
        assert_eq!(m.eta(), 2.0);
        assert_eq!(m.q(), 1.0);
    }

    #[test]
    fn p_out_of_range_names_field() {
        let err = derive_params(1.0, 1.0, 1.0, 1.0, 1.5, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p out of range"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn nonpositive_rate_rejected() {
        for (i, field) in ["lambda", "mu", "alpha", "beta"].iter().enumerate() {
            let mut r = [1.0; 4];
            r[i] = 0.0;
            let err = derive_params(r[0], r[1], r[2], r[3], 0.5, None).unwrap_err();
            assert!(err.to_string().contains(field));
        }
        assert!(derive_params(1.0, 1.0, 1.0, 1.0, 0.5, Some(-1.0)).is_err());
    }

    #[test]
    fn with_eta_keeps_mu() {
        let m = ModelParams::from_eta(2.0, 0.5, 1.0, 1.0, 0.3).unwrap();
        assert_eq!(m.lambda(), 1.0);
        let m2 = m.with_eta(4.0).unwrap();
        assert_eq!(m2.mu(), 0.5);
        assert_eq!(m2.eta(), 4.0);
    }

    #[test]
    fn explicit_nu_survives_rebuild() {
        let m = derive_params(1.0, 1.0, 1.0, 1.0, 0.5, Some(3.0)).unwrap();
        assert_eq!(m.with_p(0.2).unwrap().nu(), 3.0);
        let d = derive_params(1.0, 1.0, 1.0, 1.0, 0.5, None).unwrap();
        assert_eq!(d.with_beta(2.0).unwrap().nu(), 3.0);
    }
}

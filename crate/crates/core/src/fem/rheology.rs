//! Regularized power-law viscosity and linearization parameters.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Symmetric 2x2 tensor stored as (xx, yy, xy).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    /// Symmetric part of a gradient `g[i][j] = d u_i / d x_j`.
    pub fn sym(g: [[f64; 2]; 2]) -> Self {
        SymTensor2 {
            xx: g[0][0],
            yy: g[1][1],
            xy: 0.5 * (g[0][1] + g[1][0]),
        }
    }

    pub fn ddot(&self, o: &SymTensor2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }
}

/// Picard (fixed point) or Newton linearization of the viscous form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Linearization {
    Picard,
    Newton,
}

impl Linearization {
    /// The switch `gamma` multiplying the derivative-of-viscosity term.
    pub fn gamma(self) -> f64 {
        match self {
            Linearization::Picard => 0.0,
            Linearization::Newton => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Linearization::Picard => "picard",
            Linearization::Newton => "newton",
        }
    }
}

impl fmt::Display for Linearization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linearization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "picard" => Ok(Linearization::Picard),
            "newton" => Ok(Linearization::Newton),
            other => Err(format!("unknown method '{other}' (expected picard or newton)")),
        }
    }
}

/// Material and linearization parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Consistency `nu0`.
    pub nu0: f64,
    /// Power-law exponent in (1, 2].
    pub p_power: f64,
    /// Regularization, in the units of the strain rate.
    pub eps: f64,
    pub linearization: Linearization,
}

impl PhysicalParams {
    pub fn new(nu0: f64, p_power: f64, eps: f64, linearization: Linearization) -> Result<Self> {
        let params = PhysicalParams {
            nu0,
            p_power,
            eps,
            linearization,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_power > 1.0 && self.p_power <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "p must lie in (1, 2], got {}",
                self.p_power
            )));
        }
        if !(self.nu0 > 0.0) || !self.nu0.is_finite() {
            return Err(Error::InvalidArgument(format!("nu0 must be positive, got {}", self.nu0)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.newton_factor() > 0.0) {
            return Err(Error::InvalidArgument("1 + gamma (p - 2) must be positive".into()));
        }
        Ok(())
    }

    pub fn with_linearization(mut self, linearization: Linearization) -> Self {
        self.linearization = linearization;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// `1 + gamma (p - 2)`.
    pub fn newton_factor(&self) -> f64 {
        1.0 + self.linearization.gamma() * (self.p_power - 2.0)
    }

    /// Viscosity at zero strain rate, `nu0 eps^(p-2)`.
    pub fn nu_max(&self) -> f64 {
        self.nu0 * self.eps.powf(self.p_power - 2.0)
    }

    /// Viscosity and the Newton coefficient
    /// `gamma (p - 2) nu0 (eps^2 + |D|^2)^((p-4)/2)` at strain rate `du`.
    pub fn viscosity_and_derivative(&self, du: &SymTensor2) -> Result<(f64, f64)> {
        let nu = viscosity(du, self)?;
        let gamma = self.linearization.gamma();
        let c2 = if gamma == 0.0 {
            0.0
        } else {
            gamma * (self.p_power - 2.0) * nu / (self.eps * self.eps + du.norm_sq())
        };
        Ok((nu, c2))
    }
}

/// `nu0 (eps^2 + |Du|^2)^((p-2)/2)`.
pub fn viscosity(du: &SymTensor2, params: &PhysicalParams) -> Result<f64> {
    let q = params.eps * params.eps + du.norm_sq();
    if q == 0.0 {
        if params.p_power == 2.0 {
            return Ok(params.nu0);
        }
        return Err(Error::SingularViscosity);
    }
    Ok(params.nu0 * q.powf(0.5 * (params.p_power - 2.0)))
}

/// Consistency `nu0` and exponent `p` equivalent to Glen's law
/// `D = A tau_e^(n-1) tau` with effective stress `tau_e^2 = tau : tau / 2`.
///
/// Inverting Glen's law gives `tau = nu0 |D|^(p-2) D` with
/// `nu0 = 2^((n-1)/(2n)) A^(-1/n)` and `p = 1 + 1/n`.
pub fn glen_law(rate_factor: f64, glen_n: f64) -> Result<(f64, f64)> {
    if !(rate_factor > 0.0 && rate_factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate factor must be positive, got {rate_factor}")));
    }
    if !(glen_n >= 1.0 && glen_n.is_finite()) {
        return Err(Error::InvalidArgument(format!("Glen exponent must be at least 1, got {glen_n}")));
    }
    let nu0 = 2f64.powf((glen_n - 1.0) / (2.0 * glen_n)) * rate_factor.powf(-1.0 / glen_n);
    Ok((nu0, 1.0 + 1.0 / glen_n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, eps: f64) -> PhysicalParams {
        PhysicalParams::new(1.0, p, eps, Linearization::Newton).unwrap()
    }

    #[test]
    fn zero_strain_gives_nu_max() {
        let p = params(4.0 / 3.0, 1e-2);
        let nu = viscosity(&SymTensor2::default(), &p).unwrap();
        assert!((nu - 10f64.powf(4.0 / 3.0)).abs() < 1e-12);
        assert!((nu - 21.544_346_900_318_84).abs() < 1e-9);
        assert!((nu - p.nu_max()).abs() < 1e-12);
    }

    #[test]
    fn newtonian_limit() {
        let p = params(2.0, 0.3);
        for d in [SymTensor2::default(), SymTensor2::new(3.0, -1.0, 0.5)] {
            assert_eq!(viscosity(&d, &p).unwrap(), 1.0);
        }
        let (_, c2) = p.viscosity_and_derivative(&SymTensor2::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(c2, 0.0);
    }

    #[test]
    fn unregularized_shear() {
        let p = params(4.0 / 3.0, 0.0);
        let nu = viscosity(&SymTensor2::new(1.0, -1.0, 0.0), &p).unwrap();
        assert!((nu - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((nu - 0.793_700_525_984_1).abs() < 1e-12);
        assert!(matches!(
            viscosity(&SymTensor2::default(), &p),
            Err(Error::SingularViscosity)
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(PhysicalParams::new(1.0, 1.0, 0.1, Linearization::Picard).is_err());
        assert!(PhysicalParams::new(1.0, 2.5, 0.1, Linearization::Picard).is_err());
        assert!(PhysicalParams::new(0.0, 1.5, 0.1, Linearization::Picard).is_err());
        assert!(PhysicalParams::new(1.0, 1.5, -0.1, Linearization::Picard).is_err());
        let p = PhysicalParams::new(1.0, 4.0 / 3.0, 0.1, Linearization::Newton).unwrap();
        assert!((p.newton_factor() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn glen_law_inversion() {
        let (nu0, p) = glen_law(1e-16, 3.0).unwrap();
        assert!((p - 4.0 / 3.0).abs() < 1e-15);
        assert!((nu0 - 2f64.powf(1.0 / 3.0) * 1e16f64.powf(1.0 / 3.0)).abs() < 1e-9 * nu0);
        // round trip: strain from stress via Glen's law
        let params = PhysicalParams::new(nu0, p, 1e-300, Linearization::Picard).unwrap();
        let du = SymTensor2::new(0.01, -0.01, 0.02);
        let nu = viscosity(&du, &params).unwrap();
        let tau = SymTensor2::new(nu * du.xx, nu * du.yy, nu * du.xy);
        let tau_e2 = 0.5 * tau.norm_sq();
        let back = 1e-16 * tau_e2;
        assert!((back * tau.xy - du.xy).abs() < 1e-12 * du.xy.abs());
        assert!(glen_law(0.0, 3.0).is_err());
    }
}

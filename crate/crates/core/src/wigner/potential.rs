use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real polynomial `sum_k c_k x^k` (coefficients in ascending order).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self, order: usize) -> Self {
        if order >= self.coeffs.len() {
            return Polynomial::zero();
        }
        let coeffs = (order..self.coeffs.len())
            .map(|k| {
                let falling: f64 = ((k - order + 1)..=k).map(|v| v as f64).product();
                self.coeffs[k] * falling
            })
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// Potential `U(q)` of a Wigner-type equation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialPotential(pub Polynomial);

impl PolynomialPotential {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::BadParams("potential coefficients must be finite".into()));
        }
        Ok(PolynomialPotential(Polynomial::new(coeffs)))
    }

    pub fn free() -> Self {
        PolynomialPotential(Polynomial::zero())
    }

    /// `m w^2 q^2 / 2`.
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        PolynomialPotential(Polynomial::new(vec![0.0, 0.0, 0.5 * mass * omega * omega]))
    }

    /// `lambda q^4`.
    pub fn quartic(lambda: f64) -> Self {
        PolynomialPotential(Polynomial::new(vec![0.0, 0.0, 0.0, 0.0, lambda]))
    }

    /// Fock-sector potential `n U0 g(x)` for a polynomial profile `g`.
    pub fn fock_sector(n: usize, u0: f64, profile: &Polynomial) -> Self {
        PolynomialPotential(profile.scaled(n as f64 * u0))
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.degree()
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.0.eval(q)
    }

    pub fn derivative(&self, order: usize) -> Polynomial {
        self.0.derivative(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_quartic() {
        let u = PolynomialPotential::quartic(2.0);
        assert_eq!(u.derivative(1).coeffs, vec![0.0, 0.0, 0.0, 8.0]);
        assert_eq!(u.derivative(3).coeffs, vec![0.0, 48.0]);
        assert!(u.derivative(5).is_zero());
        assert_eq!(u.degree(), Some(4));
        assert_eq!(PolynomialPotential::free().degree(), None);
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(p.eval(3.0), 7.0);
    }
}

//! Survivor bonds and annuities under deterministic discounting.
//!
//! With the money-market numéraire and deterministic short rate `r`, the
//! time-`t` price of a survivor bond paying the survival indicator of
//! cohort `x` at `T` is `exp(−∫_t^T r) · G_t(T, x)`.

use std::io::Read;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulate::PathState;

/// Piecewise-constant short rate: `r(t) = rates[k]` on `[knots[k], knots[k+1])`,
/// with the last rate extended to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve<T> {
    knots: Vec<T>,
    rates: Vec<T>,
}

impl<T: Scalar> DiscountCurve<T> {
    pub fn new(knots: Vec<T>, rates: Vec<T>) -> Result<Self> {
        if knots.is_empty() || knots.len() != rates.len() {
            return Err(Error::invalid("discount curve", "needs one rate per knot"));
        }
        if knots[0] != T::zero() {
            return Err(Error::invalid("discount curve", "first knot must be t = 0"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("discount curve", "knots must increase"));
        }
        if knots.iter().chain(&rates).any(|v| !v.is_finite()) {
            return Err(Error::invalid("discount curve", "values must be finite"));
        }
        Ok(Self { knots, rates })
    }

    pub fn flat(rate: T) -> Result<Self> {
        Self::new(vec![T::zero()], vec![rate])
    }

    /// Reads `t, r` rows with a header line.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut knots = Vec::new();
        let mut rates = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!(
                    "discount row has {} fields",
                    rec.len()
                )));
            }
            let parse = |s: &str| -> Result<T> {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Parse(format!("bad number `{s}` in discount curve")))
            };
            knots.push(parse(&rec[0])?);
            rates.push(parse(&rec[1])?);
        }
        Self::new(knots, rates)
    }

    /// `∫_a^b r(u) du`, exact.
    pub fn integral(&self, a: T, b: T) -> T {
        if b < a {
            return -self.integral(b, a);
        }
        let mut acc = T::zero();
        for k in 0..self.knots.len() {
            let lo = self.knots[k].max(a);
            let hi = self
                .knots
                .get(k + 1)
                .copied()
                .unwrap_or(T::infinity())
                .min(b);
            if hi > lo {
                acc = acc + self.rates[k] * (hi - lo);
            }
        }
        if a < T::zero() {
            acc = acc + self.rates[0] * (b.min(T::zero()) - a);
        }
        acc
    }

    pub fn discount(&self, a: T, b: T) -> T {
        (-self.integral(a, b)).exp()
    }
}

/// `exp(−∫_t^T r) · G_t(T, x)` at the state's current time `t`.
pub fn survivor_bond_price<T: Scalar>(
    state: &PathState<T>,
    curve: &DiscountCurve<T>,
    maturity: T,
    x: T,
) -> Result<T> {
    let t = state.t();
    if maturity < t {
        return Err(Error::invalid("T", "maturity precedes valuation time"));
    }
    Ok(curve.discount(t, maturity) * state.survival(maturity, x)?)
}

/// Sum of survivor-bond prices over `payment_dates`.
pub fn annuity_value<T: Scalar>(
    state: &PathState<T>,
    curve: &DiscountCurve<T>,
    payment_dates: &[T],
    x: T,
) -> Result<T> {
    payment_dates.iter().try_fold(T::zero(), |acc, &d| {
        Ok(acc + survivor_bond_price(state, curve, d, x)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_integral() {
        let c = DiscountCurve::<f64>::new(vec![0.0, 1.0, 3.0], vec![0.01, 0.02, 0.05]).unwrap();
        assert!((c.integral(0.0, 4.0) - (0.01 + 0.04 + 0.05)).abs() < 1e-15);
        assert!((c.integral(0.5, 2.0) - (0.005 + 0.02)).abs() < 1e-15);
        assert!((c.discount(0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_discount() {
        let c = DiscountCurve::flat(0.03).unwrap();
        assert!((c.discount(2.0, 12.0) - (-0.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn invalid_curves() {
        assert!(DiscountCurve::new(vec![0.0, 1.0], vec![0.01]).is_err());
        assert!(DiscountCurve::new(vec![1.0], vec![0.01]).is_err());
        assert!(DiscountCurve::new(vec![0.0, 0.0], vec![0.01, 0.02]).is_err());
        assert!(DiscountCurve::<f64>::flat(f64::NAN).is_err());
    }

    #[test]
    fn csv_curve() {
        let text = "t,r\n0,0.01\n2,0.03\n";
        let c: DiscountCurve<f64> = DiscountCurve::from_csv(text.as_bytes()).unwrap();
        assert!((c.integral(0.0, 3.0) - 0.05).abs() < 1e-15);
        assert!(DiscountCurve::<f64>::from_csv("t,r\n0,abc\n".as_bytes()).is_err());
    }
}

//! Composite trapezoid integrals along grid lines.
//!
//! Two families of paths matter:
//! - constant `z`: column `j`, rows `0..=i`, giving `∫₀^s f(u, s + y − u) du`;
//! - constant `y`: the diagonal through `(i, j)` from its lower end
//!   `u = −y ∨ 0` (row 0 when `y ≥ 0`, column 0 otherwise), giving
//!   `∫_{−y∨0}^s f(u, y) du`.
//!
//! Both are computed as prefix sums over the whole surface in `O(n_s·n_z)`.
//! Nested integrals are prefixes of prefixes.

use super::Surface;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `Q(i, j) = ∫₀^{s_i} f(u, z_j − u) du` down column `j`.
pub fn const_z_prefix<T: Scalar>(f: &Surface<T>) -> Surface<T> {
    let g = *f.grid();
    let hh = g.h() * T::half();
    let mut out = Surface::zeros(g);
    for i in 1..g.n_s() {
        for j in 0..g.n_z() {
            let v = out.get(i - 1, j) + hh * (f.get(i - 1, j) + f.get(i, j));
            out.set(i, j, v);
        }
    }
    out.set_valid_rows(f.valid_rows());
    out
}

/// `P(i, j) = ∫_{−y∨0}^{s_i} f(u, y) du` with `y = z_j − s_i`, along the
/// diagonal through `(i, j)`.
pub fn const_age_prefix<T: Scalar>(f: &Surface<T>) -> Surface<T> {
    let g = *f.grid();
    let hh = g.h() * T::half();
    let mut out = Surface::zeros(g);
    for i in 1..g.n_s() {
        for j in 1..g.n_z() {
            let v = out.get(i - 1, j - 1) + hh * (f.get(i - 1, j - 1) + f.get(i, j));
            out.set(i, j, v);
        }
    }
    out.set_valid_rows(f.valid_rows());
    out
}

/// `∫_{s_lo}^{s_hi} f(u, y) du` by composite trapezoid on the diagonal
/// `z = u + y`. `y`, `s_lo` and `s_hi` must be multiples of `h`.
pub fn line_integral_const_age<T: Scalar>(f: &Surface<T>, y: T, s_lo: T, s_hi: T) -> Result<T> {
    let g = f.grid();
    let out = || Error::OutOfDomain {
        s: s_hi.as_f64(),
        y: y.as_f64(),
    };
    if s_lo > s_hi {
        return Err(Error::invalid("line integral", "s_lo must not exceed s_hi"));
    }
    let k = g.steps("y", y)?;
    let a = g.steps("s_lo", s_lo)?;
    let b = g.steps("s_hi", s_hi)?;
    if a < 0 || a + k < 0 || b >= g.n_s() as i64 || b + k >= g.n_z() as i64 {
        return Err(out());
    }
    Ok(diagonal_trapezoid(f, k, a as usize, b as usize))
}

/// Trapezoid over rows `a..=b` of the diagonal `j = i + k`; indices must be
/// in range.
pub(crate) fn diagonal_trapezoid<T: Scalar>(f: &Surface<T>, k: i64, a: usize, b: usize) -> T {
    if a == b {
        return T::zero();
    }
    let col = |i: usize| (i as i64 + k) as usize;
    let mut acc = T::half() * (f.get(a, col(a)) + f.get(b, col(b)));
    for i in a + 1..b {
        acc = acc + f.get(i, col(i));
    }
    acc * f.grid().h()
}

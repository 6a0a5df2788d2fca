//! Surfaces on the `(s, z = s + y)` grid.
//!
//! Node `(i, j)` sits at horizon `s_i = i·h` and terminal age `z_j = j·h`,
//! i.e. current age `y = (j − i)·h`. The shift `S_t` with `t = m·h` moves
//! row `i + m` to row `i`; rows pulled in from beyond the last horizon are
//! filled with the last row and marked stale via [`Surface::valid_rows`].

mod gompertz;
pub mod io;
mod norm;
pub mod quadrature;

pub use gompertz::{gompertz_makeham_surfaces, GompertzParams};
pub use norm::h_norm;
pub use quadrature::{const_age_prefix, const_z_prefix, line_integral_const_age};

use crate::error::{Error, Result};
use crate::scalar::{grid_index, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid<T> {
    h: T,
    n_s: usize,
    n_z: usize,
}

impl<T: Scalar> SurfaceGrid<T> {
    pub fn new(h: T, n_s: usize, n_z: usize) -> Result<Self> {
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::invalid("h", "grid step must be positive and finite"));
        }
        if n_s == 0 || n_z == 0 {
            return Err(Error::invalid("grid", "n_s and n_z must be positive"));
        }
        Ok(Self { h, n_s, n_z })
    }

    /// Grid covering `s ∈ [0, s_max]`, `z ∈ [0, z_max]`; both extents must be
    /// multiples of `h`.
    pub fn from_extent(h: T, s_max: T, z_max: T) -> Result<Self> {
        let ns = grid_index(s_max, h)
            .filter(|&k| k >= 0)
            .ok_or(Error::NotAligned {
                what: "s_max",
                value: s_max.as_f64(),
                step: h.as_f64(),
            })?;
        let nz = grid_index(z_max, h)
            .filter(|&k| k >= 0)
            .ok_or(Error::NotAligned {
                what: "z_max",
                value: z_max.as_f64(),
                step: h.as_f64(),
            })?;
        Self::new(h, ns as usize + 1, nz as usize + 1)
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn s(&self, i: usize) -> T {
        T::from_usize(i).unwrap() * self.h
    }

    pub fn z(&self, j: usize) -> T {
        T::from_usize(j).unwrap() * self.h
    }

    /// Current age `y = z_j − s_i` of node `(i, j)`.
    pub fn y(&self, i: usize, j: usize) -> T {
        self.z(j) - self.s(i)
    }

    pub fn s_max(&self) -> T {
        self.s(self.n_s - 1)
    }

    pub fn z_max(&self) -> T {
        self.z(self.n_z - 1)
    }

    /// Integer multiple of `h`, or a [`Error::NotAligned`] naming `what`.
    pub fn steps(&self, what: &'static str, value: T) -> Result<i64> {
        grid_index(value, self.h).ok_or(Error::NotAligned {
            what,
            value: value.as_f64(),
            step: self.h.as_f64(),
        })
    }

    /// Same step and shape, compared with a relative tolerance on `h`.
    pub fn compatible(&self, other: &Self) -> bool {
        self.n_s == other.n_s
            && self.n_z == other.n_z
            && (self.h - other.h).abs() <= T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) * self.h
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(h={}, n_s={}, n_z={}) vs (h={}, n_s={}, n_z={})",
                self.h, self.n_s, self.n_z, other.h, other.n_s, other.n_z
            )))
        }
    }

    pub fn cast<U: Scalar>(&self) -> SurfaceGrid<U> {
        SurfaceGrid {
            h: U::lit(self.h.as_f64()),
            n_s: self.n_s,
            n_z: self.n_z,
        }
    }
}

/// Values on a [`SurfaceGrid`], row-major by horizon index.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface<T> {
    grid: SurfaceGrid<T>,
    values: Vec<T>,
    valid_rows: usize,
}

impl<T: Scalar> Surface<T> {
    pub fn new(grid: SurfaceGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (k / grid.n_z, k % grid.n_z);
            return Err(Error::invalid(
                "surface",
                format!("non-finite value at node ({i}, {j})"),
            ));
        }
        Ok(Self {
            grid,
            values,
            valid_rows: grid.n_s,
        })
    }

    pub fn zeros(grid: SurfaceGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: SurfaceGrid<T>, c: T) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
            valid_rows: grid.n_s,
        }
    }

    /// Samples `f(s, y)` at every node.
    pub fn from_fn(grid: SurfaceGrid<T>, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_s {
            for j in 0..grid.n_z {
                values.push(f(grid.s(i), grid.y(i, j)));
            }
        }
        Self::new(grid, values)
    }

    /// Like [`from_fn`](Self::from_fn) for fallible samplers.
    pub fn try_from_fn(grid: SurfaceGrid<T>, mut f: impl FnMut(T, T) -> Result<T>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_s {
            for j in 0..grid.n_z {
                values.push(f(grid.s(i), grid.y(i, j))?);
            }
        }
        Self::new(grid, values)
    }

    /// Internal constructor for arithmetic results already known to be finite
    /// or whose finiteness the caller checks later.
    pub(crate) fn from_raw(grid: SurfaceGrid<T>, values: Vec<T>, valid_rows: usize) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            values,
            valid_rows,
        }
    }

    pub fn grid(&self) -> &SurfaceGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.n_z + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[i * self.grid.n_z + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.grid.n_z;
        &self.values[i * n..(i + 1) * n]
    }

    /// Rows `0..valid_rows` hold genuine values; later rows were filled by
    /// the shift boundary policy.
    pub fn valid_rows(&self) -> usize {
        self.valid_rows
    }

    pub fn is_stale(&self, i: usize) -> bool {
        i >= self.valid_rows
    }

    pub(crate) fn set_valid_rows(&mut self, rows: usize) {
        self.valid_rows = rows.min(self.grid.n_s);
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `S_t` for `t = m·h`.
    pub fn shift(&self, t: T) -> Result<Self> {
        let m = self.grid.steps("shift", t)?;
        if m < 0 {
            return Err(Error::invalid("shift", "time must be nonnegative"));
        }
        let mut out = self.clone();
        out.shift_rows_in_place(m as usize);
        Ok(out)
    }

    /// Shifts by `m` rows without reallocating.
    pub(crate) fn shift_rows_in_place(&mut self, m: usize) {
        if m == 0 {
            return;
        }
        let (n_s, n_z) = (self.grid.n_s, self.grid.n_z);
        if m < n_s {
            self.values.copy_within(m * n_z.., 0);
        } else {
            let last = (n_s - 1) * n_z;
            self.values.copy_within(last.., 0);
        }
        // rows [keep, n_s) replicate the last genuine row
        let keep = n_s.saturating_sub(m).max(1);
        let src = (keep - 1) * n_z;
        for i in keep..n_s {
            self.values.copy_within(src..src + n_z, i * n_z);
        }
        self.valid_rows = self.valid_rows.saturating_sub(m);
    }

    /// Bilinear interpolation in `(s, z)`.
    pub fn eval(&self, s: T, y: T) -> Result<T> {
        let g = &self.grid;
        let z = s + y;
        let tol = T::lit(1e-9) * g.h;
        let out = || Error::OutOfDomain {
            s: s.as_f64(),
            y: y.as_f64(),
        };
        if !(s >= -tol && s <= g.s_max() + tol && z >= -tol && z <= g.z_max() + tol) {
            return Err(out());
        }
        let locate = |v: T, n: usize| -> (usize, T) {
            let r = (v / g.h).max(T::zero());
            let k = r.floor().to_usize().unwrap_or(0).min(n.saturating_sub(2));
            let w = (r - T::from_usize(k).unwrap()).max(T::zero()).min(T::one());
            (k, w)
        };
        let (i, ws) = if g.n_s == 1 {
            (0, T::zero())
        } else {
            locate(s, g.n_s)
        };
        let (j, wz) = if g.n_z == 1 {
            (0, T::zero())
        } else {
            locate(z, g.n_z)
        };
        let i1 = (i + 1).min(g.n_s - 1);
        let j1 = (j + 1).min(g.n_z - 1);
        let one = T::one();
        Ok(
            (one - ws) * ((one - wz) * self.get(i, j) + wz * self.get(i, j1))
                + ws * ((one - wz) * self.get(i1, j) + wz * self.get(i1, j1)),
        )
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::from_raw(
            self.grid,
            self.values.iter().map(|&v| f(v)).collect(),
            self.valid_rows,
        )
    }

    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        self.grid.ensure_compatible(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            self.valid_rows.min(other.valid_rows),
        ))
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: T, x: &Self) -> Result<()> {
        self.grid.ensure_compatible(&x.grid)?;
        for (v, &xv) in self.values.iter_mut().zip(&x.values) {
            *v = *v + a * xv;
        }
        self.valid_rows = self.valid_rows.min(x.valid_rows);
        Ok(())
    }

    pub fn scaled(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Sup norm restricted to rows `0..valid_rows`.
    pub fn sup_norm_valid(&self) -> T {
        let n = self.valid_rows * self.grid.n_z;
        self.values[..n]
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> Surface<U> {
        Surface {
            grid: self.grid.cast(),
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
            valid_rows: self.valid_rows,
        }
    }
}

/// A curve over terminal age `z ≥ 0`, stored on the grid's `z` nodes and
/// interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeCurve<T> {
    h: T,
    values: Vec<T>,
}

impl<T: Scalar> AgeCurve<T> {
    pub fn new(h: T, values: Vec<T>) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        if values.is_empty() {
            return Err(Error::invalid("curve", "needs at least one node"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("curve", "non-finite value"));
        }
        Ok(Self { h, values })
    }

    pub fn from_fn(grid: &SurfaceGrid<T>, mut f: impl FnMut(T) -> T) -> Result<Self> {
        Self::new(grid.h(), (0..grid.n_z()).map(|j| f(grid.z(j))).collect())
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn eval(&self, z: T) -> Result<T> {
        let n = self.values.len();
        let r = z / self.h;
        let last = T::from_usize(n - 1).unwrap();
        let tol = T::lit(1e-9);
        if !(r >= -tol && r <= last + tol) {
            return Err(Error::OutOfDomain {
                s: 0.0,
                y: z.as_f64(),
            });
        }
        if n == 1 {
            return Ok(self.values[0]);
        }
        let r = r.max(T::zero()).min(last);
        let k = r.floor().to_usize().unwrap().min(n - 2);
        let w = r - T::from_usize(k).unwrap();
        Ok((T::one() - w) * self.values[k] + w * self.values[k + 1])
    }

    fn ensure_matches(&self, grid: &SurfaceGrid<T>) -> Result<()> {
        let probe = SurfaceGrid::new(self.h, grid.n_s(), self.values.len())?;
        grid.ensure_compatible(&probe)
    }
}

/// `μ₀(s, y) = γ₀(s + y) − ∫₀^s j₀(u, s + y − u) du`, trapezoid along each
/// constant-`z` column.
pub fn improvements_to_rates<T: Scalar>(
    j0: &Surface<T>,
    gamma0: &AgeCurve<T>,
) -> Result<Surface<T>> {
    gamma0.ensure_matches(j0.grid())?;
    let q = const_z_prefix(j0);
    let g = *j0.grid();
    let mut out = q.map(|v| -v);
    for i in 0..g.n_s() {
        for j in 0..g.n_z() {
            out.set(i, j, gamma0.values()[j] + out.get(i, j));
        }
    }
    Ok(out)
}

/// `j₀ = −(∂_s − ∂_y) μ₀` by forward differences down each constant-`z`
/// column, backward on the last row.
pub fn rates_to_improvements<T: Scalar>(mu0: &Surface<T>) -> Result<Surface<T>> {
    let g = *mu0.grid();
    if g.n_s() < 2 {
        return Err(Error::GridTooSmall(
            "rates_to_improvements needs n_s >= 2".into(),
        ));
    }
    let h = g.h();
    let mut out = Surface::zeros(g);
    for i in 0..g.n_s() {
        let (lo, hi) = if i + 1 < g.n_s() {
            (i, i + 1)
        } else {
            (i - 1, i)
        };
        for j in 0..g.n_z() {
            out.set(i, j, -(mu0.get(hi, j) - mu0.get(lo, j)) / h);
        }
    }
    out.set_valid_rows(mu0.valid_rows());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SurfaceGrid<f64> {
        SurfaceGrid::new(0.1, 11, 21).unwrap()
    }

    #[test]
    fn from_extent_counts_nodes() {
        let g = SurfaceGrid::from_extent(0.02, 3.0, 6.0).unwrap();
        assert_eq!((g.n_s(), g.n_z()), (151, 301));
        assert!(SurfaceGrid::from_extent(0.25, 1.1, 2.0).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = SurfaceGrid::new(1.0, 1, 2).unwrap();
        assert!(Surface::new(g, vec![1.0, f64::NAN]).is_err());
        assert!(Surface::new(g, vec![1.0]).is_err());
    }

    #[test]
    fn shift_identity_and_age_sum_invariance() {
        let f = Surface::from_fn(grid(), |s, y| s * s - y).unwrap();
        assert_eq!(f.shift(0.0).unwrap(), f);
        let g = Surface::from_fn(grid(), |s, y| s + y).unwrap();
        let sg = g.shift(0.3).unwrap();
        for (a, b) in sg.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(sg.valid_rows(), 8);
    }

    #[test]
    fn shift_moves_rows_and_fills_boundary() {
        let f = Surface::from_fn(grid(), |s, _| s).unwrap();
        let g = f.shift(0.2).unwrap();
        assert!((g.get(0, 5) - 0.2).abs() < 1e-15);
        assert!((g.get(8, 0) - 1.0).abs() < 1e-15);
        assert!((g.get(10, 3) - 1.0).abs() < 1e-15);
        assert!(g.is_stale(9) && !g.is_stale(8));
        assert!(f.shift(0.15).is_err());
        assert!(f.shift(-0.1).is_err());
        let far = f.shift(5.0).unwrap();
        assert_eq!(far.valid_rows(), 0);
        assert!(far.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn semigroup_law_on_interior() {
        let f = Surface::from_fn(grid(), |s, y| (s * 1.3).sin() + y * y).unwrap();
        let a = f.shift(0.1).unwrap().shift(0.1).unwrap();
        let b = f.shift(0.2).unwrap();
        for i in 0..b.valid_rows() {
            assert_eq!(a.row(i), b.row(i));
        }
    }

    #[test]
    fn eval_reproduces_bilinear() {
        let f = Surface::from_fn(grid(), |s, y| s + y).unwrap();
        assert!((f.eval(0.3, 0.4).unwrap() - 0.7).abs() < 1e-14);
        assert!((f.eval(0.2, 0.5).unwrap() - f.get(2, 7)).abs() < 1e-14);
        let lin = Surface::from_fn(grid(), |s, _| 3.0 * s).unwrap();
        // midpoint on a z-row: s=0.25, z=0.5
        let mid = lin.eval(0.25, 0.25).unwrap();
        assert!((mid - 0.5 * (lin.get(2, 5) + lin.get(3, 5))).abs() < 1e-14);
        assert!(f.eval(-0.1, 0.5).is_err());
        assert!(f.eval(0.5, -0.6).is_err());
        assert!(f.eval(1.1, 0.0).is_err());
    }

    #[test]
    fn zero_improvements_give_spot_curve() {
        let g = grid();
        let gamma = AgeCurve::from_fn(&g, |z| 0.01 + z).unwrap();
        let mu = improvements_to_rates(&Surface::zeros(g), &gamma).unwrap();
        for i in 0..g.n_s() {
            for j in 0..g.n_z() {
                assert_eq!(mu.get(i, j), gamma.values()[j]);
            }
        }
    }

    #[test]
    fn constant_rates_have_zero_improvement() {
        let mu = Surface::constant(grid(), 0.02);
        let j = rates_to_improvements(&mu).unwrap();
        assert_eq!(j.sup_norm(), 0.0);
        let tiny = SurfaceGrid::new(0.1, 1, 3).unwrap();
        assert!(rates_to_improvements(&Surface::zeros(tiny)).is_err());
    }

    #[test]
    fn exponential_decay_directional_derivative() {
        let theta2 = 0.3;
        let g = SurfaceGrid::new(0.01, 101, 50).unwrap();
        let shape = |z: f64| 1.0 + z * z;
        let mu = Surface::from_fn(g, |s: f64, y: f64| (-theta2 * s).exp() * shape(s + y)).unwrap();
        let j = rates_to_improvements(&mu).unwrap();
        let exact =
            Surface::from_fn(g, |s, y| theta2 * (-theta2 * s).exp() * shape(s + y)).unwrap();
        let err = j.sub(&exact).unwrap().sup_norm();
        assert!(err < 0.01 * exact.sup_norm(), "err {err}");
    }

    #[test]
    fn age_curve_interpolates() {
        let c = AgeCurve::new(0.5, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(c.eval(0.25).unwrap(), 0.5);
        assert_eq!(c.eval(1.0).unwrap(), 4.0);
        assert!(c.eval(1.2).is_err());
    }
}

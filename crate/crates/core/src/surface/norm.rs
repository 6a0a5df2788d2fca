//! Discrete version of the weighted norm on forward mortality surfaces,
//!
//! ```text
//! ‖h‖² = |h(0,0)|² + ∫|∂_s h(s,−s)|² w₁(s) ds + ∫|∂_z h(0,z)|² w₂(z) dz
//!        + ∬|∂_s∂_z h(s,z−s)|² w₃(s,z) ds dz
//! ```
//!
//! with `w₁(s) = e^{−βs}`, `w₂(z) = e^{−βz}`, `w₃(s,z) = e^{−β(s+z)}`.
//! Derivatives are taken in the `(s, z)` chart by central differences
//! (one-sided at the edges) and integrals are trapezoid sums truncated to
//! the grid.

use super::Surface;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Central differences of `v` with spacing `h`, one-sided at both ends.
fn gradient<T: Scalar>(v: &[T], h: T) -> Vec<T> {
    let n = v.len();
    let two = T::lit(2.0);
    (0..n)
        .map(|k| {
            if k == 0 {
                (v[1] - v[0]) / h
            } else if k == n - 1 {
                (v[n - 1] - v[n - 2]) / h
            } else {
                (v[k + 1] - v[k - 1]) / (two * h)
            }
        })
        .collect()
}

fn trapezoid_weight<T: Scalar>(k: usize, n: usize) -> T {
    if k == 0 || k + 1 == n {
        T::half()
    } else {
        T::one()
    }
}

pub fn h_norm<T: Scalar>(f: &Surface<T>, beta: T) -> Result<T> {
    let g = *f.grid();
    if g.n_s() < 3 || g.n_z() < 3 {
        return Err(Error::GridTooSmall(
            "h_norm needs n_s >= 3 and n_z >= 3".into(),
        ));
    }
    if !(beta > T::zero()) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    let h = g.h();
    let (n_s, n_z) = (g.n_s(), g.n_z());

    let mut total = f.get(0, 0) * f.get(0, 0);

    // ∂_s along the column z = 0, i.e. h(s, −s)
    let col0: Vec<T> = (0..n_s).map(|i| f.get(i, 0)).collect();
    let ds0 = gradient(&col0, h);
    let mut acc = T::zero();
    for (i, &d) in ds0.iter().enumerate() {
        acc = acc + trapezoid_weight::<T>(i, n_s) * d * d * (-beta * g.s(i)).exp();
    }
    total = total + acc * h;

    // ∂_z along the row s = 0
    let dz0 = gradient(f.row(0), h);
    let mut acc = T::zero();
    for (j, &d) in dz0.iter().enumerate() {
        acc = acc + trapezoid_weight::<T>(j, n_z) * d * d * (-beta * g.z(j)).exp();
    }
    total = total + acc * h;

    // mixed derivative: ∂_s of the row-wise ∂_z
    let dz: Vec<Vec<T>> = (0..n_s).map(|i| gradient(f.row(i), h)).collect();
    let mut acc = T::zero();
    let mut column = vec![T::zero(); n_s];
    for j in 0..n_z {
        for (c, row) in column.iter_mut().zip(&dz) {
            *c = row[j];
        }
        let dsz = gradient(&column, h);
        for (i, &d) in dsz.iter().enumerate() {
            let w = trapezoid_weight::<T>(i, n_s) * trapezoid_weight::<T>(j, n_z);
            acc = acc + w * d * d * (-beta * (g.s(i) + g.z(j))).exp();
        }
    }
    total = total + acc * h * h;

    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceGrid;

    #[test]
    fn constant_norm_is_abs() {
        let g = SurfaceGrid::new(0.1, 5, 7).unwrap();
        assert_eq!(h_norm(&Surface::constant(g, -3.5), 1.0).unwrap(), 3.5);
    }

    #[test]
    fn terminal_age_surface() {
        let g = SurfaceGrid::new(0.01, 11, 501).unwrap();
        let f = Surface::from_fn(g, |s, y| s + y).unwrap();
        let expected = (1.0 - (-5.0f64).exp()).sqrt();
        let got = h_norm(&f, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-4, "{got} vs {expected}");
    }

    #[test]
    fn homogeneous() {
        let g = SurfaceGrid::new(0.1, 6, 9).unwrap();
        let f = Surface::from_fn(g, |s: f64, y: f64| (s * y).sin() + s).unwrap();
        let a = h_norm(&f, 0.5).unwrap();
        let b = h_norm(&f.scaled(2.0), 0.5).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * a);
    }

    #[test]
    fn too_small() {
        let g = SurfaceGrid::new(0.1, 2, 9).unwrap();
        assert!(h_norm(&Surface::zeros(g), 1.0).is_err());
    }
}

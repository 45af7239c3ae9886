//! Small dense linear-algebra helpers shared by the model code: matrix
//! exponential, a reference Runge-Kutta integrator and spectral-radius
//! estimation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Matrix exponential by scaling-and-squaring with a degree-13 Padé core.
///
/// Accurate to ~1e-15 relative for the small (≤ a few dozen states) dense
/// matrices this crate works with.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::dims(format!("expm needs square matrix, got {}x{}", n, m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("expm input".into()));
    }

    // 1-norm (max column abs sum) drives the scaling exponent.
    let norm = (0..n)
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = m / 2f64.powi(s);

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let eye = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * B[13] + &a4 * B[11] + &a2 * B[9];
    let u = &a * &(&a6 * u_inner + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &eye * B[1]);
    let v_inner = &a6 * B[12] + &a4 * B[10] + &a2 * B[8];
    let v = &a6 * v_inner + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &eye * B[0];

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular Padé denominator in expm".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("expm result".into()));
    }
    Ok(r)
}

/// One classical RK4 step of `x' = f(x)` with step `h`.
pub fn rk4_step<F>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrate `x' = f(x)` over `t` seconds with `substeps` RK4 steps.
///
/// The right-hand side is assumed constant-in-time over the interval
/// (zero-order-hold inputs), which is the only case the model code needs.
pub fn rk4_integrate<F>(f: F, x0: &DVector<f64>, t: f64, substeps: usize) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let h = t / substeps as f64;
    let mut x = x0.clone();
    for _ in 0..substeps {
        x = rk4_step(&f, &x, h);
    }
    x
}

/// Spectral-radius estimate by power iteration.
///
/// Suited to the dissipative RC matrices in this crate, whose dominant
/// eigenvalue is real. Returns |lambda_max|.
pub fn spectral_radius(a: &DMatrix<f64>, iterations: usize) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "spectral_radius needs a square matrix");
    // Deterministic start with energy in every coordinate.
    let mut v = DVector::<f64>::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).recip());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w).abs();
        v = w / norm;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        let e = expm(&z).unwrap();
        assert_relative_eq!(e, DMatrix::identity(4, 4), epsilon = 1e-14);
    }

    #[test]
    fn expm_scalar_matches_exp() {
        for a in [-3.0, -0.2, 0.7, 4.5] {
            let m = DMatrix::from_element(1, 1, a);
            let e = expm(&m).unwrap();
            assert_relative_eq!(e[(0, 0)], a.exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn expm_matches_rk4_on_random_stable_system() {
        // x' = A x integrated over 1 time unit, RK4 at 1e-3 steps as reference.
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-1.2, 0.3, 0.0, 0.1, -0.8, 0.2, 0.0, 0.4, -1.5],
        );
        let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x_exp = expm(&a).unwrap() * &x0;
        let x_rk4 = rk4_integrate(|x| &a * x, &x0, 1.0, 1000);
        assert_relative_eq!(x_exp, x_rk4, max_relative = 1e-10);
    }

    #[test]
    fn spectral_radius_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -0.9, 0.5]));
        let r = spectral_radius(&a, 200);
        assert_relative_eq!(r, 0.9, max_relative = 1e-6);
    }
}

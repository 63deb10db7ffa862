#![allow(dead_code)]

use nalgebra::Matrix4;
use num_complex::Complex64;
use proptest::prelude::*;

use noiseflow::cascaded::CascadedParams;
use noiseflow::linalg::{ComplexMatrix2, RealMatrix4};
use noiseflow::optomech::OmParams;

pub fn to_na(m: &RealMatrix4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[(i, j)])
}

pub fn min_eigenvalue(m: &RealMatrix4) -> f64 {
    to_na(&m.symmetrized()).symmetric_eigenvalues().min()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

pub fn complex_matrix() -> impl Strategy<Value = ComplexMatrix2> {
    (complex(), complex(), complex(), complex()).prop_map(|(a, b, c, d)| ComplexMatrix2::new(a, b, c, d))
}

/// Equal-rate draws over the ranges used for the closed-form comparison.
pub fn equal_rate_params() -> impl Strategy<Value = CascadedParams> {
    (
        0.1..10.0f64,
        -20.0..20.0f64,
        0.0..5.0f64,
        0.0..std::f64::consts::TAU,
        0.0..std::f64::consts::TAU,
        [0.0..200.0f64, 0.0..200.0f64, 0.0..200.0f64],
        -5.0..5.0f64,
    )
        .prop_map(|(k, d, f, f_arg, phi, nbar, w1)| CascadedParams {
            omega1: w1,
            omega2: w1 + d * k,
            ..CascadedParams::equal_rate(k, d * k, phi, Complex64::from_polar(f * k, f_arg), nbar)
        })
}

pub fn general_params() -> impl Strategy<Value = CascadedParams> {
    (
        [-3.0..3.0f64, -3.0..3.0f64],
        [0.05..3.0f64, 0.05..3.0f64, 0.0..3.0f64, 0.0..3.0f64],
        0.0..std::f64::consts::TAU,
        complex(),
        [0.0..20.0f64, 0.0..20.0f64, 0.0..20.0f64],
    )
        .prop_map(|(w, rates, phi, f, nbar)| CascadedParams {
            omega1: w[0],
            omega2: w[1],
            kappa1: rates[0],
            kappa2: rates[1],
            gamma1: rates[2],
            gamma2: rates[3],
            phi,
            f,
            nbar1: nbar[0],
            nbar2: nbar[1],
            nbar3: nbar[2],
        })
}

pub fn om_params() -> impl Strategy<Value = OmParams> {
    (
        (1.0..100.0f64, 0.01..2.0f64),
        [-120.0..120.0f64, -120.0..120.0f64],
        [0.1..10.0f64, 0.1..10.0f64, 0.0..1.0f64, 0.0..1.0f64],
        (-5.0..5.0f64, -std::f64::consts::PI..std::f64::consts::PI),
        [0.0..2.0f64, 0.0..2.0f64],
        -3.0..3.0f64,
        [0.0..10.0f64, 0.0..10.0f64, 0.0..10.0f64],
    )
        .prop_map(|((wm, gm), d, k, (j, phi), g, omega_off, nbar)| OmParams {
            omega_m: wm,
            gamma_m: gm,
            delta1: d[0],
            delta2: d[1],
            kappa1: k[0],
            kappa2: k[1],
            kappa_ext1: k[0] * k[2],
            kappa_ext2: k[1] * k[3],
            j,
            phi,
            g1: g[0],
            g2: g[1],
            omega_eval: Some(wm + omega_off * gm),
            nbar1: nbar[0],
            nbar2: nbar[1],
            nbar_m: nbar[2],
            cavity_frequency: None,
        })
}

//! Shared numerical kernels: quadrature, ODE stepping, root finding,
//! interpolation and finite differences. Everything here is deterministic
//! and allocation-light; model-level code builds on these primitives.

pub mod fd;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod root;

/// Log-spaced grid with `n >= 2` points over `[lo, hi]`, `lo > 0`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Uniform grid with `n >= 2` points over `[lo, hi]`.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi > lo && n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

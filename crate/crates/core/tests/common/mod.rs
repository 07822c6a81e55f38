//! Brute-force reference computations for the integration suites, written
//! against first principles rather than the library's internals.
#![allow(dead_code)]

use qbsim::constants::HBAR;

/// Poisson weights p_n = e^{−ν} ν^n / n! for n = 0..dim, by the stable
/// multiplicative recurrence.
pub fn poisson_pmf(nu: f64, dim: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(dim);
    let mut w = (-nu).exp();
    for n in 0..dim {
        p.push(w);
        w *= nu / (n + 1) as f64;
    }
    p
}

/// Energy after the cheapest possible rearrangement of a population list on
/// the ladder ε_n = n ℏω: sort the weights descending and fill levels from
/// the bottom.
pub fn sorted_population_energy(populations: &[f64], omega: f64) -> f64 {
    let mut p = populations.to_vec();
    p.sort_by(|a, b| b.total_cmp(a));
    let units: f64 = p.iter().enumerate().map(|(n, q)| q * n as f64).sum();
    HBAR * omega * units
}

/// Ordinary least-squares fit y ≈ a + b·x; returns (a, b).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let a = (sy - b * sx) / n;
    (a, b)
}

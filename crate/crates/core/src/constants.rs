//! Physical constants (CODATA 2018; SI-exact where applicable).

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054571817e-34;

/// Planck constant [J s] (exact in the 2019 SI).
pub const H_PLANCK: f64 = 6.62607015e-34;

/// Elementary charge [C] (exact in the 2019 SI).
pub const E_CHARGE: f64 = 1.602176634e-19;

/// Magnetic flux quantum h/(2e) [Wb].
pub const PHI0: f64 = H_PLANCK / (2.0 * E_CHARGE);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_quantum_value() {
        // h/(2e) in double precision
        assert!((PHI0 - 2.067833848461929e-15).abs() < 1e-29);
    }

    #[test]
    fn hbar_is_h_over_two_pi() {
        let hbar = H_PLANCK / std::f64::consts::TAU;
        assert!((hbar - HBAR).abs() / HBAR < 1e-9);
    }
}

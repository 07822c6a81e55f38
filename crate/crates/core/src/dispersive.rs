//! Effective beam-splitter coupling between the storage cavity and the
//! drive-field mode, mediated by a far-detuned qubit.
//!
//! Second-order perturbation theory in g/Δ turns the raw circuit rates into
//! cavity Stark shifts `chi_a`, `chi_b` and a photon-exchange coupling
//! `lambda_ab`. The exchange vanishes when the two detunings cancel, which
//! is the battery's switch-off condition.

use crate::error::{Error, Result};

/// Default ceiling on g/|Δ| below which the perturbative map is trusted.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;

/// Raw circuit rates, all angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Storage-cavity frequency.
    pub omega_a: f64,
    /// Qubit (coupler) frequency.
    pub omega_q: f64,
    /// Center frequency of the charging field mode.
    pub omega_b: f64,
    /// Qubit-cavity coupling.
    pub g_a: f64,
    /// Qubit-drive coupling.
    pub g_b: f64,
    /// Cavity energy decay rate.
    pub gamma: f64,
}

impl CircuitParams {
    pub fn new(
        omega_a: f64,
        omega_q: f64,
        omega_b: f64,
        g_a: f64,
        g_b: f64,
        gamma: f64,
    ) -> Result<Self> {
        let p = Self {
            omega_a,
            omega_q,
            omega_b,
            g_a,
            g_b,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("omega_q", self.omega_q),
            ("omega_b", self.omega_b),
            ("g_a", self.g_a),
            ("g_b", self.g_b),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if self.omega_a <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_a",
                reason: format!("cavity frequency must be positive, got {}", self.omega_a),
            });
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("decay rate must be positive, got {}", self.gamma),
            });
        }
        if self.omega_q == self.omega_a {
            return Err(Error::ZeroDetuning { which: "cavity" });
        }
        if self.omega_q == self.omega_b {
            return Err(Error::ZeroDetuning { which: "drive" });
        }
        Ok(())
    }
}

/// Derived quantities of the effective model, all angular (rad/s) except the
/// dimensionless validity ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveParams {
    /// Qubit-cavity detuning ω_q − ω_a.
    pub delta_a: f64,
    /// Qubit-drive detuning ω_q − ω_b.
    pub delta_b: f64,
    /// Cavity Stark shift g_a²/Δ_a.
    pub chi_a: f64,
    /// Drive-mode Stark shift g_b²/Δ_b.
    pub chi_b: f64,
    /// Photon-exchange coupling g_a·g_b·(Δ_a+Δ_b)/(Δ_a·Δ_b).
    pub lambda_ab: f64,
    /// g_a/|Δ_a|.
    pub ratio_a: f64,
    /// g_b/|Δ_b|.
    pub ratio_b: f64,
}

/// Second-order map from raw rates to the effective exchange model.
///
/// When ω_q sits exactly at the midpoint (ω_a+ω_b)/2 the detunings cancel
/// and `lambda_ab` is forced to exactly 0.0: the analytic cancellation is
/// honored even when floating-point rounding of Δ_a+Δ_b would leave a
/// remainder of order ε·ω.
pub fn dispersive_map(params: &CircuitParams) -> Result<DispersiveParams> {
    params.validate()?;
    let delta_a = params.omega_q - params.omega_a;
    let delta_b = params.omega_q - params.omega_b;
    let chi_a = params.g_a * params.g_a / delta_a;
    let chi_b = params.g_b * params.g_b / delta_b;
    let delta_sum = if params.omega_q == 0.5 * (params.omega_a + params.omega_b) {
        0.0
    } else {
        delta_a + delta_b
    };
    let lambda_ab = params.g_a * params.g_b * delta_sum / (delta_a * delta_b);
    Ok(DispersiveParams {
        delta_a,
        delta_b,
        chi_a,
        chi_b,
        lambda_ab,
        ratio_a: params.g_a.abs() / delta_a.abs(),
        ratio_b: params.g_b.abs() / delta_b.abs(),
    })
}

/// Outcome of the g/|Δ| smallness check. Informational only: a failed flag
/// never blocks a computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    pub threshold: f64,
    pub ratio_a: f64,
    pub ratio_b: f64,
    /// ratio_a < threshold (strict; a ratio exactly at threshold fails).
    pub a_ok: bool,
    /// ratio_b < threshold (strict).
    pub b_ok: bool,
}

impl ValidityReport {
    pub fn ok(&self) -> bool {
        self.a_ok && self.b_ok
    }
}

/// Flag each coupling-to-detuning ratio against `threshold` (strictly).
pub fn validity_check(d: &DispersiveParams, threshold: f64) -> ValidityReport {
    ValidityReport {
        threshold,
        ratio_a: d.ratio_a,
        ratio_b: d.ratio_b,
        a_ok: d.ratio_a < threshold,
        b_ok: d.ratio_b < threshold,
    }
}

/// Qubit frequency at which the exchange coupling vanishes: the midpoint
/// (ω_a+ω_b)/2, where Δ_a = −Δ_b.
pub fn switch_frequency(omega_a: f64, omega_b: f64) -> Result<f64> {
    if !omega_a.is_finite() || !omega_b.is_finite() {
        return Err(Error::NonFinite("switch_frequency input"));
    }
    if omega_a == omega_b {
        return Err(Error::EqualCavityFrequencies);
    }
    Ok(0.5 * (omega_a + omega_b))
}

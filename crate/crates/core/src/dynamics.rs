//! Charging and decay dynamics of the stored field.
//!
//! The drive enters through a displaced-oscillator Hamiltonian linear in the
//! cavity ladder operators; dissipation is a single zero-temperature decay
//! channel at rate `gamma`. Closed forms exist for the mean photon number,
//! the charging power, and the full coherent trajectory, and the numeric
//! integrator is held to them in the test suite.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, FockSpace, Operator, Units};

/// Drive parameters of the charging Hamiltonian
/// H = −ℏ·λ·|β|·(a·e^{−iθ} + a†·e^{iθ}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingDrive {
    /// Exchange coupling λ (rad/s).
    pub lambda_ab: f64,
    /// Drive amplitude |β| (dimensionless).
    pub beta_mag: f64,
    /// Drive phase θ (radians).
    pub theta_b: f64,
}

impl ChargingDrive {
    pub fn new(lambda_ab: f64, beta_mag: f64, theta_b: f64) -> Result<Self> {
        if !lambda_ab.is_finite() {
            return Err(Error::NonFinite("lambda_ab"));
        }
        if !beta_mag.is_finite() || !theta_b.is_finite() {
            return Err(Error::NonFinite("drive amplitude"));
        }
        if beta_mag < 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta_mag",
                reason: format!("|beta| must be nonnegative, got {beta_mag}"),
            });
        }
        Ok(Self {
            lambda_ab,
            beta_mag,
            theta_b,
        })
    }

    /// Complex drive amplitude β = |β| e^{iθ}.
    pub fn beta(&self) -> Complex64 {
        Complex64::from_polar(self.beta_mag, self.theta_b)
    }

    /// |λ·β|, the rate scale of the drive term.
    pub fn drive_rate(&self) -> f64 {
        (self.lambda_ab * self.beta_mag).abs()
    }
}

/// H = −ℏ·λ·|β|·(a·e^{−iθ} + a†·e^{iθ}), in energy units (J).
pub fn charge_hamiltonian(drive: &ChargingDrive, space: FockSpace) -> Operator {
    let n = space.dim();
    let amp = -HBAR * drive.lambda_ab * drive.beta_mag;
    let phase = Complex64::cis(-drive.theta_b);
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        let v = amp * (k as f64).sqrt() * phase;
        m[(k - 1, k)] = v;
        m[(k, k - 1)] = v.conj();
    }
    Operator::new(m, Units::Energy).expect("ladder construction is square and finite")
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("time must be finite and nonnegative, got {t}"),
        });
    }
    Ok(())
}

fn check_positive_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("closed forms require gamma > 0, got {gamma}"),
        });
    }
    Ok(())
}

/// Steady-state mean photon number 4λ²|β|²/γ².
pub fn steady_state_mean_photons(drive: &ChargingDrive, gamma: f64) -> Result<f64> {
    check_positive_gamma(gamma)?;
    let l = drive.lambda_ab;
    let b = drive.beta_mag;
    Ok(4.0 * l * l * b * b / (gamma * gamma))
}

/// ⟨a†a⟩(t) = (4λ²|β|²/γ²)·(1 − e^{−γt/2})², the damped charging curve.
pub fn analytic_mean_photons(t: f64, drive: &ChargingDrive, gamma: f64) -> Result<f64> {
    check_time(t)?;
    let ss = steady_state_mean_photons(drive, gamma)?;
    let s = 1.0 - (-0.5 * gamma * t).exp();
    Ok(ss * s * s)
}

/// γ → 0 limit of the charging curve: ⟨a†a⟩(t) = (λ|β|t)².
pub fn undamped_mean_photons(t: f64, drive: &ChargingDrive) -> Result<f64> {
    check_time(t)?;
    let x = drive.lambda_ab * drive.beta_mag * t;
    Ok(x * x)
}

/// Instantaneous charging power
/// P(t) = (4ℏω_a·λ²|β|²/γ)·e^{−γt/2}(1 − e^{−γt/2}), in watts.
pub fn charging_power(t: f64, drive: &ChargingDrive, gamma: f64, omega_a: f64) -> Result<f64> {
    check_time(t)?;
    check_positive_gamma(gamma)?;
    let l = drive.lambda_ab;
    let b = drive.beta_mag;
    let coef = 4.0 * HBAR * omega_a * l * l * b * b / gamma;
    let x = (-0.5 * gamma * t).exp();
    Ok(coef * x * (1.0 - x))
}

/// Time of maximum charging power, t* = 2·ln2/γ.
pub fn peak_power_time(gamma: f64) -> Result<f64> {
    check_positive_gamma(gamma)?;
    Ok(2.0 * std::f64::consts::LN_2 / gamma)
}

/// Maximum charging power ℏω_a·λ²|β|²/γ (the t = t* value).
pub fn peak_power(drive: &ChargingDrive, gamma: f64, omega_a: f64) -> Result<f64> {
    check_positive_gamma(gamma)?;
    let l = drive.lambda_ab;
    let b = drive.beta_mag;
    Ok(HBAR * omega_a * l * l * b * b / gamma)
}

/// Coherent amplitude of the charging trajectory,
/// α(t) = (2iλβ/γ)·(1 − e^{−γt/2}) with β = |β|e^{iθ}.
///
/// The global phase follows the convention that α(∞) = 2iλβ/γ; only |α| is
/// observable through the photon number. |α(t)|² equals
/// [`analytic_mean_photons`] identically.
pub fn coherent_trajectory(t: f64, drive: &ChargingDrive, gamma: f64) -> Result<Complex64> {
    check_time(t)?;
    check_positive_gamma(gamma)?;
    let s = 1.0 - (-0.5 * gamma * t).exp();
    let mag = 2.0 * drive.lambda_ab * drive.beta_mag * s / gamma;
    Ok(Complex64::new(0.0, mag) * Complex64::cis(drive.theta_b))
}

/// Steady-state amplitude α(∞) = 2iλβ/γ.
pub fn steady_state_amplitude(drive: &ChargingDrive, gamma: f64) -> Result<Complex64> {
    check_positive_gamma(gamma)?;
    let mag = 2.0 * drive.lambda_ab * drive.beta_mag / gamma;
    Ok(Complex64::new(0.0, mag) * Complex64::cis(drive.theta_b))
}

/// Free-decay photon number n(τ) = n_max·e^{−γτ} after switch-off.
pub fn aging_mean_photons(tau: f64, n_max: f64, gamma: f64) -> Result<f64> {
    check_time(tau)?;
    if !n_max.is_finite() || n_max < 0.0 {
        return Err(Error::InvalidParameter {
            name: "n_max",
            reason: format!("initial photon number must be nonnegative, got {n_max}"),
        });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("decay rate must be nonnegative, got {gamma}"),
        });
    }
    Ok(n_max * (-gamma * tau).exp())
}

/// State of the freely decaying battery: the coherent state of amplitude
/// α₀·e^{−γτ/2} (a damped cavity maps coherent states to coherent states).
pub fn aging_state(
    tau: f64,
    alpha0: Complex64,
    gamma: f64,
    space: FockSpace,
) -> Result<crate::hilbert::Coherent> {
    check_time(tau)?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("decay rate must be nonnegative, got {gamma}"),
        });
    }
    crate::hilbert::coherent_state(space, alpha0 * (-0.5 * gamma * tau).exp())
}

/// Fixed-step integration plan for [`lindblad_evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladConfig {
    /// Step size (s). Adjusted by [`Self::auto`] to divide `t_end` exactly.
    pub dt: f64,
    /// Final time (s).
    pub t_end: f64,
    /// Full density-matrix snapshots are kept every this many steps
    /// (step 0 and the final step are always kept).
    pub snapshot_stride: usize,
    pub space: FockSpace,
    /// Cavity frequency used for the energy column, E = ℏω_a⟨n⟩ (rad/s).
    pub omega_a: f64,
}

impl LindbladConfig {
    pub fn new(
        dt: f64,
        t_end: f64,
        snapshot_stride: usize,
        space: FockSpace,
        omega_a: f64,
    ) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("step must be positive and finite, got {dt}"),
            });
        }
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("final time must be finite and nonnegative, got {t_end}"),
            });
        }
        if snapshot_stride == 0 {
            return Err(Error::InvalidParameter {
                name: "snapshot_stride",
                reason: "stride must be at least 1".into(),
            });
        }
        if !omega_a.is_finite() || omega_a < 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega_a",
                reason: format!("frequency must be finite and nonnegative, got {omega_a}"),
            });
        }
        Ok(Self {
            dt,
            t_end,
            snapshot_stride,
            space,
            omega_a,
        })
    }

    /// Pick a step that resolves the fastest rate and keeps the stiff top of
    /// the truncated ladder (decay rate up to γ·dim) inside the stability
    /// region with a wide margin, then round it down so that an integer
    /// number of steps lands exactly on `t_end`.
    pub fn auto(
        drive: Option<&ChargingDrive>,
        gamma: f64,
        t_end: f64,
        space: FockSpace,
        omega_a: f64,
        snapshot_stride: usize,
    ) -> Result<Self> {
        let dim = space.dim() as f64;
        let drive_rate = drive.map_or(0.0, ChargingDrive::drive_rate);
        let mut dt = f64::INFINITY;
        let max_rate = drive_rate.max(gamma);
        if max_rate > 0.0 {
            dt = dt.min(0.05 / max_rate);
        }
        if gamma > 0.0 {
            dt = dt.min(0.1 / (gamma * dim));
        }
        if drive_rate > 0.0 {
            dt = dt.min(0.5 / (drive_rate * dim.sqrt()));
        }
        if !dt.is_finite() {
            // generator is zero; any step reproduces the constant solution
            dt = if t_end > 0.0 { t_end / 100.0 } else { 1.0 };
        }
        if t_end > 0.0 {
            let steps = (t_end / dt).ceil().max(1.0);
            dt = t_end / steps;
        }
        Self::new(dt, t_end, snapshot_stride, space, omega_a)
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        if self.t_end == 0.0 {
            0
        } else {
            (self.t_end / self.dt).round().max(1.0) as usize
        }
    }

    /// Stability diagnostic: warns when dt·(fastest rate) exceeds 0.05.
    pub fn stability_warning(&self, h_rate: f64, gamma: f64) -> Option<String> {
        let product = self.dt * h_rate.max(gamma);
        if product > 0.05 {
            Some(format!(
                "dt * max rate = {product:.3e} exceeds the 0.05 stability guard; \
                 expect growing integration error"
            ))
        } else {
            None
        }
    }
}

/// A retained state along a numeric trajectory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub state: DensityMatrix,
}

/// Time series produced by [`lindblad_evolve`]: one entry per step,
/// beginning with the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Times (s), strictly increasing from 0.
    pub times: Vec<f64>,
    /// ⟨a†a⟩ per time.
    pub mean_photons: Vec<f64>,
    /// ℏω_a·⟨a†a⟩ per time (J).
    pub energy: Vec<f64>,
    /// Central-difference derivative of the energy (W).
    pub power: Vec<f64>,
    /// Full states kept at the configured stride, plus the final step.
    pub snapshots: Vec<Snapshot>,
    /// Non-fatal diagnostics (stability guard, truncation adequacy).
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trajectory always retains at least the initial state")
    }
}

/// Per-step trace tolerance of the integrator.
pub const EVOLUTION_TRACE_TOL: f64 = 1e-6;
/// Floor on the mean photon number during integration.
pub const MEAN_PHOTON_FLOOR: f64 = -1e-8;

struct Rhs<'a> {
    h: Option<(&'a DMatrix<Complex64>, usize)>,
    gamma: f64,
    sqrt_table: Vec<f64>,
}

impl Rhs<'_> {
    /// dρ/dt = −(i/ℏ)[H,ρ] + γ(a ρ a† − {a†a, ρ}/2), written elementwise.
    ///
    /// The commutator uses one banded product A = Hρ and the identity
    /// [H,ρ] = A − A† (valid for Hermitian H and ρ), which keeps the result
    /// Hermitian to the last bit. The damping channel is exact elementwise:
    ///   (aρa†)[m,n]   = √((m+1)(n+1))·ρ[m+1,n+1]
    ///   ({a†a,ρ}/2)[m,n] = (m+n)/2·ρ[m,n]
    fn eval(
        &self,
        rho: &DMatrix<Complex64>,
        out: &mut DMatrix<Complex64>,
        scratch: &mut DMatrix<Complex64>,
    ) {
        let n = rho.nrows();
        if let Some((h, bw)) = self.h {
            banded_mul(h, bw, rho, scratch);
            let c = Complex64::new(0.0, -1.0 / HBAR);
            for j in 0..n {
                for i in 0..n {
                    out[(i, j)] = c * (scratch[(i, j)] - scratch[(j, i)].conj());
                }
            }
        } else {
            out.fill(Complex64::new(0.0, 0.0));
        }
        if self.gamma != 0.0 {
            let sq = &self.sqrt_table;
            for j in 0..n {
                for i in 0..n {
                    let mut d = rho[(i, j)] * (-0.5 * (i + j) as f64);
                    if i + 1 < n && j + 1 < n {
                        d += rho[(i + 1, j + 1)] * (sq[i + 1] * sq[j + 1]);
                    }
                    out[(i, j)] += d * self.gamma;
                }
            }
        }
    }
}

/// out = h·rho exploiting that h has the given bandwidth.
fn banded_mul(
    h: &DMatrix<Complex64>,
    bw: usize,
    rho: &DMatrix<Complex64>,
    out: &mut DMatrix<Complex64>,
) {
    let n = rho.nrows();
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            let mut acc = zero;
            for k in lo..=hi {
                let hv = h[(i, k)];
                if hv != zero {
                    acc += hv * rho[(k, j)];
                }
            }
            out[(i, j)] = acc;
        }
    }
}

fn diag_trace(m: &DMatrix<Complex64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

fn diag_mean_photons(m: &DMatrix<Complex64>) -> f64 {
    (0..m.nrows()).map(|i| i as f64 * m[(i, i)].re).sum()
}

fn snapshot_check(state: &DensityMatrix, step: usize) -> Result<()> {
    state.validate().map_err(|e| match e {
        Error::NotHermitian { deviation } => Error::InvariantViolation {
            step,
            quantity: "hermiticity",
            value: deviation,
            bound: crate::hilbert::HERMITICITY_TOL,
        },
        Error::TraceNotOne { trace, tol } => Error::InvariantViolation {
            step,
            quantity: "trace",
            value: trace,
            bound: tol,
        },
        Error::NotPositive {
            min_eigenvalue,
            tol,
        } => Error::InvariantViolation {
            step,
            quantity: "positivity",
            value: min_eigenvalue,
            bound: tol,
        },
        other => other,
    })
}

/// Integrate dρ/dt = −(i/ℏ)[H,ρ] + γ·(aρa† − {a†a,ρ}/2) with classic
/// fixed-step fourth-order Runge-Kutta.
///
/// `h = None` means free decay (H = 0). The trace and the photon-number
/// floor are checked after every step; retained snapshots are re-validated
/// against all density-matrix invariants. A violation aborts with the step
/// index and the offending quantity.
pub fn lindblad_evolve(
    h: Option<&Operator>,
    gamma: f64,
    rho0: &DensityMatrix,
    cfg: &LindbladConfig,
) -> Result<Trajectory> {
    let n = cfg.space.dim();
    if rho0.dim() != n {
        return Err(Error::DimMismatch {
            left: rho0.dim(),
            right: n,
        });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("decay rate must be nonnegative, got {gamma}"),
        });
    }
    let mut warnings = Vec::new();
    let mut h_rate = 0.0f64;
    let banded = match h {
        Some(op) => {
            if op.dim() != n {
                return Err(Error::DimMismatch {
                    left: op.dim(),
                    right: n,
                });
            }
            if op.units() != Units::Energy {
                return Err(Error::UnitsMismatch {
                    left: op.units(),
                    right: Units::Energy,
                });
            }
            let dev = op.hermiticity_deviation();
            if dev > crate::hilbert::HERMITICITY_TOL {
                return Err(Error::NotHermitian { deviation: dev });
            }
            // Gershgorin row sum as the rate scale for the stability guard
            let m = op.matrix();
            for i in 0..n {
                let row: f64 = (0..n).map(|j| m[(i, j)].norm()).sum();
                h_rate = h_rate.max(row / HBAR);
            }
            Some((m, op.bandwidth()))
        }
        None => None,
    };
    rho0.validate()?;
    if let Some(w) = cfg.stability_warning(h_rate, gamma) {
        warnings.push(w);
    }

    let steps = cfg.steps();
    let dt = cfg.dt;
    let rhs = Rhs {
        h: banded,
        gamma,
        sqrt_table: (0..=n).map(|k| (k as f64).sqrt()).collect(),
    };

    let mut rho = rho0.matrix().clone();
    let mut k1 = DMatrix::zeros(n, n);
    let mut k2 = DMatrix::zeros(n, n);
    let mut k3 = DMatrix::zeros(n, n);
    let mut k4 = DMatrix::zeros(n, n);
    let mut stage = DMatrix::zeros(n, n);
    let mut scratch = DMatrix::zeros(n, n);

    let mut times = Vec::with_capacity(steps + 1);
    let mut mean_photons = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();

    let record = |step: usize,
                  rho: &DMatrix<Complex64>,
                  times: &mut Vec<f64>,
                  mean_photons: &mut Vec<f64>,
                  energy: &mut Vec<f64>,
                  snapshots: &mut Vec<Snapshot>|
     -> Result<()> {
        let tr = diag_trace(rho);
        if !tr.is_finite() || (tr - 1.0).abs() > EVOLUTION_TRACE_TOL {
            return Err(Error::InvariantViolation {
                step,
                quantity: "trace",
                value: tr,
                bound: EVOLUTION_TRACE_TOL,
            });
        }
        let nbar = diag_mean_photons(rho);
        if !nbar.is_finite() || nbar < MEAN_PHOTON_FLOOR {
            return Err(Error::InvariantViolation {
                step,
                quantity: "mean_photons",
                value: nbar,
                bound: MEAN_PHOTON_FLOOR,
            });
        }
        times.push(step as f64 * dt);
        mean_photons.push(nbar);
        energy.push(HBAR * cfg.omega_a * nbar);
        if step.is_multiple_of(cfg.snapshot_stride) || step == steps {
            let state = DensityMatrix::from_trusted(rho.clone());
            snapshot_check(&state, step)?;
            snapshots.push(Snapshot { step, state });
        }
        Ok(())
    };

    record(
        0,
        &rho,
        &mut times,
        &mut mean_photons,
        &mut energy,
        &mut snapshots,
    )?;

    let half = 0.5 * dt;
    let sixth = dt / 6.0;
    for step in 1..=steps {
        rhs.eval(&rho, &mut k1, &mut scratch);
        axpy_into(&mut stage, &rho, &k1, half);
        rhs.eval(&stage, &mut k2, &mut scratch);
        axpy_into(&mut stage, &rho, &k2, half);
        rhs.eval(&stage, &mut k3, &mut scratch);
        axpy_into(&mut stage, &rho, &k3, dt);
        rhs.eval(&stage, &mut k4, &mut scratch);
        {
            let r = rho.as_mut_slice();
            let (a, b, c, d) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
            for idx in 0..r.len() {
                r[idx] += (a[idx] + (b[idx] + c[idx]) * 2.0 + d[idx]) * sixth;
            }
        }
        record(
            step,
            &rho,
            &mut times,
            &mut mean_photons,
            &mut energy,
            &mut snapshots,
        )?;
    }

    let power = differentiate(&energy, dt);
    Ok(Trajectory {
        times,
        mean_photons,
        energy,
        power,
        snapshots,
        warnings,
    })
}

/// out = base + k·scale, elementwise.
fn axpy_into(
    out: &mut DMatrix<Complex64>,
    base: &DMatrix<Complex64>,
    k: &DMatrix<Complex64>,
    scale: f64,
) {
    let o = out.as_mut_slice();
    let b = base.as_slice();
    let kk = k.as_slice();
    for idx in 0..o.len() {
        o[idx] = b[idx] + kk[idx] * scale;
    }
}

/// Central differences (one-sided at the ends) of a uniformly sampled series.
fn differentiate(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut d = Vec::with_capacity(n);
    d.push((y[1] - y[0]) / dt);
    for i in 1..n - 1 {
        d.push((y[i + 1] - y[i - 1]) / (2.0 * dt));
    }
    d.push((y[n - 1] - y[n - 2]) / dt);
    d
}

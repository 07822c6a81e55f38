//! Extractable-work accounting: passive states and ergotropy.
//!
//! The passive state pairs the density-matrix spectrum, sorted descending,
//! with the energy eigenstates sorted ascending; its energy is the part of
//! the stored energy no unitary can extract. Two conventions are exposed:
//! `Coherent` evaluates the state as given (a pure state then surrenders all
//! of its energy), `Dephased` first strips Fock-basis coherences and
//! measures what the population distribution alone can deliver.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::HBAR;
use crate::dynamics::{steady_state_mean_photons, ChargingDrive};
use crate::error::{Error, Result};
use crate::hilbert::{coherent_state, expectation, DensityMatrix, FockSpace, Operator, Units};

/// Purity above which a state is treated as exactly pure (spectrum {1,0,…}).
pub const PURITY_PURE_TOL: f64 = 1e-12;
/// Relative width within which eigenvalues are grouped as degenerate and
/// ordered by basis index, keeping the passive pairing permutation-stable.
pub const CLUSTER_REL_TOL: f64 = 1e-12;

/// Which state the work accounting is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// The state as given.
    Coherent,
    /// The state with all Fock-basis coherences removed first.
    Dephased,
}

/// Energy bookkeeping of one state against one battery Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgotropyReport {
    /// Tr[ρH] (J).
    pub charged_energy: f64,
    /// Tr[σ_ρ H] of the passive state σ_ρ (J).
    pub passive_energy: f64,
    /// charged_energy − passive_energy, exactly (J).
    pub ergotropy: f64,
    /// ergotropy/charged_energy clamped to [0, 1]; 0 when nothing is stored.
    pub ratio: f64,
    pub convention: Convention,
}

/// Battery Hamiltonian ℏω_a·a†a in energy units.
pub fn battery_hamiltonian(space: FockSpace, omega_a: f64) -> Result<Operator> {
    if !omega_a.is_finite() {
        return Err(Error::NonFinite("omega_a"));
    }
    let n = space.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(HBAR * omega_a * i as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Operator::new(m, Units::Energy)
}

fn is_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLUSTER_REL_TOL * a.abs().max(b.abs())
}

/// Indices that sort `vals`, with near-degenerate runs re-ordered by
/// original index so the result is stable under eigenvalue noise.
fn argsort_clustered(vals: &[f64], ascending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| {
        let ord = vals[i].total_cmp(&vals[j]);
        let ord = if ascending { ord } else { ord.reverse() };
        ord.then(i.cmp(&j))
    });
    let mut k = 0;
    while k < idx.len() {
        let mut m = k + 1;
        while m < idx.len() && is_close(vals[idx[m - 1]], vals[idx[m]]) {
            m += 1;
        }
        idx[k..m].sort_unstable();
        k = m;
    }
    idx
}

/// Spectrum of ρ in descending order. Diagonal and (numerically) pure states
/// bypass the dense eigensolver: their spectra are exact.
fn spectrum_descending(rho: &DensityMatrix) -> Vec<f64> {
    let vals: Vec<f64> = if rho.is_diagonal() {
        rho.populations()
    } else if rho.purity() >= 1.0 - PURITY_PURE_TOL {
        let mut v = vec![0.0; rho.dim()];
        v[0] = rho.trace();
        return v;
    } else {
        rho.matrix()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    let order = argsort_clustered(&vals, false);
    order.into_iter().map(|i| vals[i]).collect()
}

enum EnergyBasis {
    /// The Hamiltonian is diagonal in the Fock basis; eigenvectors are basis
    /// vectors and only their ascending-energy order is needed.
    Fock(Vec<usize>),
    /// Dense Hermitian eigenbasis (columns) with an ascending-energy order.
    General {
        vectors: DMatrix<Complex64>,
        order: Vec<usize>,
    },
}

fn energy_eigensystem(h: &Operator) -> Result<(Vec<f64>, EnergyBasis)> {
    let dev = h.hermiticity_deviation();
    if dev > crate::hilbert::HERMITICITY_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    if h.bandwidth() == 0 {
        let energies: Vec<f64> = (0..h.dim()).map(|i| h.matrix()[(i, i)].re).collect();
        let order = argsort_clustered(&energies, true);
        Ok((energies, EnergyBasis::Fock(order)))
    } else {
        let eig = h.matrix().clone().symmetric_eigen();
        let energies: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = argsort_clustered(&energies, true);
        Ok((
            energies,
            EnergyBasis::General {
                vectors: eig.eigenvectors,
                order,
            },
        ))
    }
}

/// The passive state of ρ with respect to `h_b`: the ρ-spectrum r₀ ≥ r₁ ≥ …
/// placed on the energy eigenstates in ascending-energy order.
pub fn passive_state(rho: &DensityMatrix, h_b: &Operator) -> Result<DensityMatrix> {
    if rho.dim() != h_b.dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: h_b.dim(),
        });
    }
    let r = spectrum_descending(rho);
    let (_, basis) = energy_eigensystem(h_b)?;
    let n = rho.dim();
    let sigma = match basis {
        EnergyBasis::Fock(order) => {
            let mut m = DMatrix::zeros(n, n);
            for (k, &pos) in order.iter().enumerate() {
                m[(pos, pos)] = Complex64::new(r[k], 0.0);
            }
            m
        }
        EnergyBasis::General { vectors, order } => {
            let mut m = DMatrix::zeros(n, n);
            for (k, &col) in order.iter().enumerate() {
                if r[k] == 0.0 {
                    continue;
                }
                let v = vectors.column(col);
                for j in 0..n {
                    for i in 0..n {
                        m[(i, j)] += v[i] * v[j].conj() * r[k];
                    }
                }
            }
            m
        }
    };
    // spectrum of a validated state on an orthonormal basis: invariants hold
    Ok(DensityMatrix::from_trusted(sigma))
}

fn report_of(
    rho: &DensityMatrix,
    h_b: &Operator,
    convention: Convention,
) -> Result<ErgotropyReport> {
    let charged = expectation(h_b, rho)?.re;
    let r = spectrum_descending(rho);
    let (energies, basis) = energy_eigensystem(h_b)?;
    let order = match &basis {
        EnergyBasis::Fock(order) => order,
        EnergyBasis::General { order, .. } => order,
    };
    let passive: f64 = order
        .iter()
        .enumerate()
        .map(|(k, &pos)| r[k] * energies[pos])
        .sum();
    let erg = charged - passive;
    let ratio = if charged == 0.0 {
        0.0
    } else {
        (erg / charged).clamp(0.0, 1.0)
    };
    Ok(ErgotropyReport {
        charged_energy: charged,
        passive_energy: passive,
        ergotropy: erg,
        ratio,
        convention,
    })
}

/// Full work accounting of `rho` against `h_b` under the given convention.
pub fn report(
    rho: &DensityMatrix,
    h_b: &Operator,
    convention: Convention,
) -> Result<ErgotropyReport> {
    if rho.dim() != h_b.dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: h_b.dim(),
        });
    }
    match convention {
        Convention::Coherent => report_of(rho, h_b, convention),
        Convention::Dephased => report_of(&rho.dephased(), h_b, convention),
    }
}

/// One instant along a charging trajectory, reported in both conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgotropyTimePoint {
    pub t: f64,
    pub coherent: ErgotropyReport,
    pub dephased: ErgotropyReport,
}

/// Ergotropy of the charging trajectory on a time grid.
///
/// The Fock dimension is sized once for the largest amplitude on the grid;
/// each state is renormalized (truncation deficit below 1e-9 at that size)
/// before the projector is formed.
pub fn ergotropy_vs_time(
    drive: &ChargingDrive,
    gamma: f64,
    omega_a: f64,
    t_grid: &[f64],
) -> Result<Vec<ErgotropyTimePoint>> {
    let mut max_mag = 0.0f64;
    for &t in t_grid {
        max_mag = max_mag.max(crate::dynamics::coherent_trajectory(t, drive, gamma)?.norm());
    }
    let space = FockSpace::for_coherent(Complex64::new(max_mag, 0.0));
    let h_b = battery_hamiltonian(space, omega_a)?;
    t_grid
        .par_iter()
        .map(|&t| {
            let alpha = crate::dynamics::coherent_trajectory(t, drive, gamma)?;
            let ket = coherent_state(space, alpha)?.ket.renormalized()?;
            let rho = DensityMatrix::from_ket(&ket)?;
            Ok(ErgotropyTimePoint {
                t,
                coherent: report(&rho, &h_b, Convention::Coherent)?,
                dephased: report(&rho, &h_b, Convention::Dephased)?,
            })
        })
        .collect()
}

/// Ergotropy of the freely decaying battery on a delay grid.
///
/// The battery starts in the coherent state `alpha0` and ages to amplitude
/// α₀·e^{−γτ/2}; the Fock dimension is sized once for α₀, the largest
/// amplitude on the grid.
pub fn ergotropy_vs_aging(
    alpha0: Complex64,
    gamma: f64,
    omega_a: f64,
    tau_grid: &[f64],
) -> Result<Vec<ErgotropyTimePoint>> {
    let space = FockSpace::for_coherent(alpha0);
    let h_b = battery_hamiltonian(space, omega_a)?;
    tau_grid
        .par_iter()
        .map(|&tau| {
            let aged = crate::dynamics::aging_state(tau, alpha0, gamma, space)?;
            let rho = DensityMatrix::from_ket(&aged.ket.renormalized()?)?;
            Ok(ErgotropyTimePoint {
                t: tau,
                coherent: report(&rho, &h_b, Convention::Coherent)?,
                dephased: report(&rho, &h_b, Convention::Dephased)?,
            })
        })
        .collect()
}

/// One steady-state operating point of the β sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRatioPoint {
    pub beta: f64,
    /// Steady-state ⟨n⟩ = 4λ²|β|²/γ² (closed form).
    pub mean_photons: f64,
    pub ratio_dephased: f64,
    pub ratio_coherent: f64,
}

/// Steady-state extraction ratio versus drive amplitude.
pub fn ratio_vs_beta(
    beta_grid: &[f64],
    lambda_ab: f64,
    gamma: f64,
    omega_a: f64,
) -> Result<Vec<BetaRatioPoint>> {
    beta_grid
        .par_iter()
        .map(|&beta| {
            let drive = ChargingDrive::new(lambda_ab, beta, 0.0)?;
            let mean_photons = steady_state_mean_photons(&drive, gamma)?;
            let alpha = crate::dynamics::steady_state_amplitude(&drive, gamma)?;
            let space = FockSpace::for_coherent(alpha);
            let ket = coherent_state(space, alpha)?.ket.renormalized()?;
            let rho = DensityMatrix::from_ket(&ket)?;
            let h_b = battery_hamiltonian(space, omega_a)?;
            Ok(BetaRatioPoint {
                beta,
                mean_photons,
                ratio_dephased: report(&rho, &h_b, Convention::Dephased)?.ratio,
                ratio_coherent: report(&rho, &h_b, Convention::Coherent)?.ratio,
            })
        })
        .collect()
}

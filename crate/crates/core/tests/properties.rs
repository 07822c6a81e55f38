//! Property-based invariants: structural identities the model must satisfy
//! for every admissible parameter draw, not just at the headline operating
//! points.

mod common;

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use qbsim::constants::HBAR;
use qbsim::dispersive::{dispersive_map, switch_frequency, CircuitParams};
use qbsim::dynamics::{
    aging_mean_photons, analytic_mean_photons, charge_hamiltonian, coherent_trajectory,
    lindblad_evolve, steady_state_mean_photons, ChargingDrive, LindbladConfig,
};
use qbsim::ergotropy::{battery_hamiltonian, report, Convention};
use qbsim::hilbert::{
    basis_dm, coherent_state, expectation, number_op, DensityMatrix, FockSpace, Ket,
};
use qbsim::readout::{dip_detuning, transmission, ReadoutParams};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Relabeling the two modes (a↔b, including their couplings) leaves the
    /// exchange coupling bitwise unchanged and swaps the Stark shifts.
    #[test]
    fn exchange_coupling_is_invariant_under_mode_swap(
        omega_a in TAU * 2.0e9..TAU * 8.0e9,
        sep_frac in 0.05f64..0.6,
        fraction in 0.05f64..0.95,
        g_a in 1.0e5..1.0e8f64,
        g_b in 1.0e5..1.0e8f64,
        gamma in 1.0e3..1.0e6f64,
    ) {
        let separation = sep_frac * omega_a;
        let omega_b = omega_a - separation;
        let omega_q = omega_b + fraction * separation;
        let direct = dispersive_map(
            &CircuitParams::new(omega_a, omega_q, omega_b, g_a, g_b, gamma).unwrap(),
        )
        .unwrap();
        let swapped = dispersive_map(
            &CircuitParams::new(omega_b, omega_q, omega_a, g_b, g_a, gamma).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(swapped.lambda_ab, direct.lambda_ab);
        prop_assert_eq!(swapped.chi_a, direct.chi_b);
        prop_assert_eq!(swapped.chi_b, direct.chi_a);
        prop_assert_eq!(direct.chi_a, g_a * g_a / direct.delta_a);
    }

    /// Parking the qubit at the midpoint frequency switches the exchange
    /// coupling off identically, for every cavity pair.
    #[test]
    fn switch_off_is_exact_for_any_cavity_pair(
        omega_a in TAU * 2.0e9..TAU * 8.0e9,
        sep_frac in 0.02f64..0.6,
        g_a in 1.0e5..1.0e8f64,
        g_b in 1.0e5..1.0e8f64,
    ) {
        let omega_b = omega_a - sep_frac * omega_a;
        let mid = switch_frequency(omega_a, omega_b).unwrap();
        let map = dispersive_map(
            &CircuitParams::new(omega_a, mid, omega_b, g_a, g_b, 1e4).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(map.lambda_ab, 0.0);
    }

    /// The closed-form charge curve rises monotonically to its steady value,
    /// and the coherent amplitude carries exactly the same photon number.
    #[test]
    fn charging_curve_is_monotone_and_bounded(
        lambda_ab in 1.0e4..1.0e6f64,
        beta in 0.01f64..1.5,
        gamma in 1.0e3..1.0e5f64,
        u in 0.0f64..20.0,
        v in 0.0f64..20.0,
    ) {
        let drive = ChargingDrive::new(lambda_ab, beta, 0.0).unwrap();
        let (t1, t2) = (u.min(v) / gamma, u.max(v) / gamma);
        let n1 = analytic_mean_photons(t1, &drive, gamma).unwrap();
        let n2 = analytic_mean_photons(t2, &drive, gamma).unwrap();
        let n_ss = steady_state_mean_photons(&drive, gamma).unwrap();
        prop_assert!(n1 <= n2 * (1.0 + 1e-15));
        prop_assert!(n2 <= n_ss * (1.0 + 1e-12));

        let alpha = coherent_trajectory(t2, &drive, gamma).unwrap();
        prop_assert!((alpha.norm_sqr() - n2).abs() <= 1e-12 * n2.max(1e-300));
    }

    /// A truncated coherent state holds ⟨n⟩ = |α|² once renormalized, and its
    /// truncation deficit is a probability.
    #[test]
    fn coherent_states_store_their_amplitude(
        r in 0.0f64..4.0,
        theta in 0.0f64..TAU,
    ) {
        let alpha = Complex64::from_polar(r, theta);
        let space = FockSpace::for_coherent(alpha);
        let coherent = coherent_state(space, alpha).unwrap();
        prop_assert!((0.0..=1.0).contains(&coherent.deficit));
        prop_assert!(coherent.adequate_truncation);

        let ket = coherent.ket.renormalized().unwrap();
        let mean = expectation(&number_op(space), &ket).unwrap().re;
        let nu = r * r;
        if nu > 1e-6 {
            prop_assert!((mean - nu).abs() / nu < 1e-9);
        } else {
            prop_assert!(mean.abs() < 1e-6);
        }
    }

    /// For any diagonal state on the harmonic ladder: the passive energy is
    /// the floor, the ratio is a fraction, and the three energies close.
    #[test]
    fn ergotropy_reports_are_internally_consistent(
        raw in prop::array::uniform8(0.01f64..1.0),
    ) {
        let total: f64 = raw.iter().sum();
        let space = FockSpace::new(8).unwrap();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(8, 8);
        for (n, w) in raw.iter().enumerate() {
            m[(n, n)] = Complex64::new(w / total, 0.0);
        }
        let rho = DensityMatrix::new(m).unwrap();
        let h_b = battery_hamiltonian(space, 1.0).unwrap();
        let rep = report(&rho, &h_b, Convention::Dephased).unwrap();

        prop_assert!(rep.passive_energy >= 0.0);
        prop_assert!(rep.passive_energy <= rep.charged_energy * (1.0 + 1e-12));
        prop_assert!((0.0..=1.0).contains(&rep.ratio));
        prop_assert_eq!(rep.ergotropy, rep.charged_energy - rep.passive_energy);

        // Independent floor: sort the populations and refill the ladder.
        let brute = common::sorted_population_energy(&rho.populations(), 1.0);
        prop_assert!((rep.passive_energy - brute).abs() <= 1e-12 * brute.max(1e-300));
    }

    /// Any pure state surrenders its full energy: ratio exactly 1.
    #[test]
    fn pure_states_surrender_everything(
        re in prop::array::uniform8(-1.0f64..1.0),
        im in prop::array::uniform8(-1.0f64..1.0),
    ) {
        let mut v = nalgebra::DVector::<Complex64>::zeros(8);
        for n in 0..8 {
            v[n] = Complex64::new(re[n], im[n]);
        }
        prop_assume!(v.norm() > 0.05);
        let v = v.clone() / Complex64::new(v.norm(), 0.0);
        let ket = Ket::from_amplitudes(v).unwrap();
        let space = FockSpace::new(8).unwrap();
        let rho = DensityMatrix::from_ket(&ket).unwrap();
        let h_b = battery_hamiltonian(space, 1.0).unwrap();
        let rep = report(&rho, &h_b, Convention::Coherent).unwrap();
        if rep.charged_energy > 1e-12 * HBAR {
            prop_assert_eq!(rep.ratio, 1.0);
            prop_assert_eq!(rep.ergotropy, rep.charged_energy);
        } else {
            prop_assert_eq!(rep.ratio, 0.0);
        }
    }

    /// Transmission is a probability, vanishes at the dip, and recovers to
    /// one half exactly one linewidth away.
    #[test]
    fn transmission_is_a_probability_with_half_depth_shoulders(
        omega_a in TAU * 4.6e9..TAU * 6.0e9,
        g_a in 1.0e6..3.0e7f64,
        line_rate in 1.0e4..1.0e6f64,
        n_bar in 0.0f64..200.0,
        detuning in -3.0e6f64..3.0e6,
    ) {
        let p = ReadoutParams::new(TAU * 4.5e9, omega_a, g_a, line_rate).unwrap();
        let t = transmission(detuning, n_bar, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));

        let dip = dip_detuning(n_bar, &p).unwrap();
        prop_assert_eq!(transmission(dip, n_bar, &p).unwrap(), 0.0);
        for shoulder in [dip - line_rate, dip + line_rate] {
            let half = transmission(shoulder, n_bar, &p).unwrap();
            prop_assert!((half - 0.5).abs() < 1e-9);
        }
    }

    /// The dip moves affinely with the photon number: equal photon steps give
    /// equal frequency steps, with slope g_a²/Δ_a.
    #[test]
    fn dip_shift_is_affine_in_photon_number(
        omega_a in TAU * 4.6e9..TAU * 6.0e9,
        g_a in 1.0e6..3.0e7f64,
        n1 in 0.0f64..300.0,
        n2 in 0.0f64..300.0,
    ) {
        prop_assume!((n2 - n1).abs() > 1e-3);
        let p = ReadoutParams::new(TAU * 4.5e9, omega_a, g_a, 1e5).unwrap();
        let shift = dip_detuning(n2, &p).unwrap() - dip_detuning(n1, &p).unwrap();
        let slope = p.g_a * p.g_a / p.delta_a;
        let expected = slope * (n2 - n1);
        prop_assert!((shift - expected).abs() <= 1e-9 * expected.abs());
    }

    /// Free decay never gains photons, and the decayed state still stores
    /// exactly the photon number the law prescribes.
    #[test]
    fn aging_only_discharges(
        nu0 in 0.1f64..64.0,
        u in 0.0f64..15.0,
        v in 0.0f64..15.0,
        gamma in 1.0e3..1.0e5f64,
    ) {
        let (tau1, tau2) = (u.min(v) / gamma, u.max(v) / gamma);
        let n1 = aging_mean_photons(tau1, nu0, gamma).unwrap();
        let n2 = aging_mean_photons(tau2, nu0, gamma).unwrap();
        prop_assert!(n2 <= n1);
        prop_assert!(n2 >= 0.0 && n1 <= nu0);

        let alpha0 = Complex64::new(nu0.sqrt(), 0.0);
        let space = FockSpace::for_coherent(alpha0);
        let aged = qbsim::dynamics::aging_state(tau2, alpha0, gamma, space).unwrap();
        let mean = expectation(&number_op(space), &aged.ket.renormalized().unwrap())
            .unwrap()
            .re;
        prop_assert!((mean - n2).abs() <= 1e-9 * n2.max(1e-12));
    }
}

proptest! {
    // The master-equation cross-check integrates a 32-level ladder per case;
    // a handful of draws keeps the suite fast while still varying the drive
    // amplitude and phase.
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    /// Small-battery master-equation run tracks the closed-form charge curve
    /// for any drive phase and amplitude.
    #[test]
    fn small_battery_numerics_track_the_closed_form(
        beta in 0.02f64..0.10,
        theta in 0.0f64..TAU,
    ) {
        let gamma = 1e4;
        let drive = ChargingDrive::new(1e5, beta, theta).unwrap();
        let space = FockSpace::new(32).unwrap();
        let h = charge_hamiltonian(&drive, space);
        let cfg =
            LindbladConfig::auto(Some(&drive), gamma, 2.0 / gamma, space, TAU * 5e9, 200).unwrap();
        let rho0 = basis_dm(space, 0).unwrap();
        let traj = lindblad_evolve(Some(&h), gamma, &rho0, &cfg).unwrap();
        for (t, n) in traj.times.iter().zip(&traj.mean_photons) {
            let reference = analytic_mean_photons(*t, &drive, gamma).unwrap();
            if reference > 1e-10 {
                prop_assert!((n - reference).abs() / reference < 1e-4);
            }
        }
        for snap in &traj.snapshots {
            prop_assert!((snap.state.purity() - 1.0).abs() < 1e-6);
        }
    }
}

/// The passive energy of a bright dephased coherent state sits within 15% of
/// the Gaussian-envelope estimate 2·√(2ν/π) quanta.
#[test]
fn dephased_passive_energy_tracks_the_envelope_estimate() {
    for nu in [25.0, 64.0, 100.0, 213.16] {
        let alpha = Complex64::new(f64::sqrt(nu), 0.0);
        let space = FockSpace::for_coherent(alpha);
        let ket = coherent_state(space, alpha)
            .unwrap()
            .ket
            .renormalized()
            .unwrap();
        let rho = DensityMatrix::from_ket(&ket).unwrap();
        let h_b = battery_hamiltonian(space, 1.0).unwrap();
        let rep = report(&rho, &h_b, Convention::Dephased).unwrap();
        let envelope = 2.0 * (2.0 * nu / std::f64::consts::PI).sqrt() * HBAR;
        let rel = (rep.passive_energy - envelope).abs() / envelope;
        assert!(
            rel < 0.15,
            "passive energy at ν = {nu}: {:.4} quanta vs envelope {:.4} ({:.1}%)",
            rep.passive_energy / HBAR,
            envelope / HBAR,
            rel * 100.0
        );
    }
}

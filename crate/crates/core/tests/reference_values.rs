//! Published reference values and independent oracles.

use hgsim_core::analysis::detection::{correct_populations, detection_matrix};
use hgsim_core::analysis::{bell_fidelity_from_sum, fit_phonon_number, pair_bell_fidelity};
use hgsim_core::chain::{chain_and_modes, TrapConfig};
use hgsim_core::constants::{khz, mhz};
use hgsim_core::dynamics::single_ion::{sdf_population, sideband_rabi, Transition};
use hgsim_core::dynamics::{
    analytic_gate_state, calibrate_gate, evolve_master_equation, GateSpec, MasterSettings, NoiseModel, PulseEnvelope,
};
use hgsim_core::optics::{
    d4sigma, gradient_crosstalk, peak_separation, zero_pi_focal_field, zero_pi_sigma, Axis, BeamKind, BeamProfile,
    DAWSON_PEAK,
};
use std::f64::consts::PI;

#[test]
fn three_ion_modes_and_spacing() {
    let (chain, modes) = chain_and_modes(&TrapConfig::ytterbium(3, mhz(0.402))).unwrap();
    // Harmonic-trap closed forms: 1, √3, √(29/5).
    for (got, r) in modes.frequencies.iter().zip([1.0, 3f64.sqrt(), (29.0f64 / 5.0).sqrt()]) {
        assert!((got / mhz(0.402) - r).abs() < 1e-9);
    }
    // Quoted values to three decimals; the top mode sits 1.1 kHz above its quote.
    for (got, want) in modes.frequencies.iter().zip([0.402, 0.696, 0.967]) {
        assert!((got / mhz(1.0) - want).abs() < 1.5e-3, "{} MHz", got / mhz(1.0));
    }
    assert!((chain.min_spacing() * 1e6 - 5.4).abs() < 0.1);
}

#[test]
fn breathing_ratio_is_sqrt3() {
    for n in 2..=6 {
        let (_, modes) = chain_and_modes(&TrapConfig::ytterbium(n, mhz(0.3))).unwrap();
        assert!((modes.frequencies[1] / modes.frequencies[0] - 3f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn ideal_hg01_widths() {
    let beam = BeamProfile::new(BeamKind::Hg01Ideal, 1e-6, 0.0, 1.0).unwrap();
    assert!((peak_separation(&beam) * 1e6 - 1.4).abs() < 0.05);
    let d = d4sigma(&beam, Axis::Transverse) * 1e6;
    assert!((d - 2.0).abs() < 0.2, "{d}");
}

/// Focal field of a Gaussian pupil with a half-plane π step, by direct quadrature of the
/// Fourier integral `∫₀^∞ exp(−x²) sin(2yx) dx`.
fn diffraction_oracle(y: f64) -> f64 {
    let n = 20_000;
    let l = 8.0;
    let h = l / n as f64;
    let f = |x: f64| (-x * x).exp() * (2.0 * y * x).sin();
    let mut s = f(0.0) + f(l);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn zero_pi_profile_matches_diffraction_oracle() {
    let w0 = 1e-6;
    let s = zero_pi_sigma(w0);
    for k in 0..60 {
        let z = -6e-6 + k as f64 * 0.2e-6;
        let model = zero_pi_focal_field(w0, z) * DAWSON_PEAK;
        let oracle = diffraction_oracle(z / s);
        assert!((model - oracle).abs() < 1e-8, "z = {z}: {model} vs {oracle}");
    }
    let h = 1e-4;
    let grad = |y: f64| (diffraction_oracle(y + h) - diffraction_oracle(y - h)) / (2.0 * h);
    let oracle_xt = grad(5.4e-6 / s) / grad(0.0);
    let beam = BeamProfile::new(BeamKind::ZeroPi, w0, 0.0, 1.0).unwrap();
    let model_xt = gradient_crosstalk(&beam, 5.4e-6);
    assert!((oracle_xt - model_xt).abs() < 1e-6, "{oracle_xt} {model_xt}");
    assert!((model_xt.abs() - 0.01).abs() < 0.003, "{model_xt}");
    assert!((peak_separation(&beam) * 1e6 - 1.4).abs() < 0.05);
}

#[test]
fn measurement_pipeline() {
    assert!((bell_fidelity_from_sum(0.968, 0.953).unwrap() - 0.9605).abs() < 1e-12);
    let m = detection_matrix(0.9891, 0.9909, 2).unwrap();
    assert!((m.mean_fidelity() - 0.99).abs() < 5e-4);
    let truth = [0.47, 0.02, 0.03, 0.48];
    let c = correct_populations(&m.measure(&truth), &m).unwrap();
    for (a, b) in c.populations.iter().zip(truth) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn thermometry_round_trip() {
    let times: Vec<f64> = (0..81).map(|i| i as f64 * 5e-6).collect();
    let p = sideband_rabi(Transition::Blue, 1.0, khz(5.45), 0.02, 30, &times).unwrap();
    let fit = fit_phonon_number(&times, &p, None).unwrap();
    assert!((fit.nbar - 0.02).abs() < 0.01, "{fit:?}");
    assert!((fit.omega / khz(5.45) - 1.0).abs() < 0.01, "{fit:?}");
}

#[test]
fn resonant_force_population() {
    // Ωτ = 1 at the slit.
    let p = sdf_population(1.0 / 100e-6, 100e-6);
    assert!((p - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
}

fn com_gate() -> (hgsim_core::chain::ModeSet, GateSpec) {
    let (_, modes) = chain_and_modes(&TrapConfig::ytterbium(3, mhz(0.402))).unwrap();
    let g = GateSpec::new(
        &modes,
        (0, 2),
        0,
        khz(10.0),
        PulseEnvelope::sin2(120e-6, 20e-6),
        PI / 4.0,
        khz(2.5),
    )
    .unwrap();
    let g = calibrate_gate(&g, &modes).unwrap();
    (modes, g)
}

#[test]
fn ideal_gate_reaches_bell_state() {
    let (modes, g) = com_gate();
    let settings = MasterSettings {
        fock: Some(15),
        ..Default::default()
    };
    let r = evolve_master_equation(&g, &modes, &NoiseModel::noiseless(3), &settings).unwrap();
    assert!(pair_bell_fidelity(r.final_ions(), 0, 2).unwrap() >= 0.9999);
    let an = analytic_gate_state(&g, &modes, &[0.0; 3], 1).unwrap();
    assert!(pair_bell_fidelity(&an, 0, 2).unwrap() >= 0.9999);
}

#[test]
fn heating_error_is_linear_in_rate() {
    let (modes, g) = com_gate();
    let settings = MasterSettings {
        samples_per_gate: 2,
        ..Default::default()
    };
    let fidelity = |rate: f64| {
        let noise = NoiseModel {
            heating_rates: vec![rate, 0.0, 0.0],
            ..NoiseModel::noiseless(3)
        };
        let r = evolve_master_equation(&g, &modes, &noise, &settings).unwrap();
        pair_bell_fidelity(r.final_ions(), 0, 2).unwrap()
    };
    let f0 = fidelity(0.0);
    let per_rate: Vec<f64> = [50.0, 250.0, 500.0].iter().map(|&r| (f0 - fidelity(r)) / r).collect();
    for k in &per_rate {
        assert!((k / per_rate[1] - 1.0).abs() < 0.1, "{per_rate:?}");
    }
}

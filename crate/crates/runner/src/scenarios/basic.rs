//! Scenarios that need no gate: chain modes, beam profiles, spectra and single-ion SDF.

use serde_json::json;
use std::collections::BTreeMap;

use hgsim_core::analysis::detection::sample_counts;
use hgsim_core::analysis::fit_phonon_number;
use hgsim_core::chain::{chain_and_modes, lamb_dicke_matrix};
use hgsim_core::constants::{khz, mhz};
use hgsim_core::dynamics::single_ion::{detuned_sdf_oscillation, sdf_population, sideband_rabi, Transition};
use hgsim_core::dynamics::spectrum::{simulate_spectrum, SpectrumProbe};
use hgsim_core::optics::{
    coupling_sample, d4sigma, field_amplitude, field_gradient, gradient_crosstalk, gradient_length, peak_separation,
    sample_profile, Axis,
};

use super::{linspace, seed_of, to_khz, to_mhz};
use crate::config::{envelope, Scenario, SdfSection};
use crate::error::{Context, Result, RunnerError};
use crate::output::{to_value, Cell, Outcome, Table};

pub fn modes(s: &Scenario) -> Result<Outcome> {
    let trap = s.trap_config()?;
    let (chain, modes) = chain_and_modes(&trap).context("chain")?;
    let n = chain.len();
    let mut positions = Table::new("positions", &["ion", "position_um", "dimensionless"]);
    for (j, (z, u)) in chain.positions.iter().zip(chain.dimensionless()).enumerate() {
        positions.push(vec![j.into(), (z * 1e6).into(), u.into()]);
    }
    let mut cols: Vec<String> = ["mode", "frequency_mhz", "ratio"]
        .iter()
        .map(|c| c.to_string())
        .collect();
    cols.extend((0..n).map(|j| format!("b_{j}")));
    let mut table = Table::with_columns("modes", cols);
    let mut metrics = BTreeMap::new();
    for (m, nu) in modes.frequencies.iter().enumerate() {
        let mut row: Vec<Cell> = vec![m.into(), to_mhz(*nu).into(), (nu / trap.axial_freq).into()];
        row.extend(modes.column(m).into_iter().map(Cell::Num));
        table.push(row);
        metrics.insert(format!("mode_{m}_mhz"), to_mhz(*nu));
    }
    metrics.insert("length_scale_um".into(), chain.length_scale * 1e6);
    if n > 1 {
        metrics.insert("min_spacing_um".into(), chain.min_spacing() * 1e6);
    }
    Ok(Outcome {
        tables: vec![positions, table],
        data: json!({ "chain": to_value(&chain)?, "modes": to_value(&modes)? }),
        metrics,
    })
}

pub fn beam_profile(s: &Scenario) -> Result<Outcome> {
    let beam = s.beam_at(0.0)?;
    let p = s.profile.as_ref().expect("validated");
    let mut table = Table::new("profile", &["z_um", "amplitude", "gradient_per_um"]);
    for [z, e, g] in sample_profile(&beam, p.z_min_um * 1e-6, p.z_max_um * 1e-6, p.points) {
        table.push(vec![(z * 1e6).into(), e.into(), (g * 1e-6).into()]);
    }
    let spacing = match (p.spacing_um, &s.trap) {
        (Some(d), _) => Some(d * 1e-6),
        (None, Some(_)) => {
            let (chain, _) = chain_and_modes(&s.trap_config()?).context("chain")?;
            (chain.len() > 1).then(|| chain.min_spacing())
        }
        (None, None) => None,
    };
    let mut metrics = BTreeMap::from([
        ("peak_separation_um".to_string(), peak_separation(&beam) * 1e6),
        ("d4sigma_axial_um".to_string(), d4sigma(&beam, Axis::Axial) * 1e6),
        (
            "d4sigma_transverse_um".to_string(),
            d4sigma(&beam, Axis::Transverse) * 1e6,
        ),
        ("gradient_length_um".to_string(), gradient_length(&beam) * 1e6),
    ]);
    if let Some(d) = spacing {
        metrics.insert("spacing_um".into(), d * 1e6);
        metrics.insert("gradient_crosstalk".into(), gradient_crosstalk(&beam, d).abs());
        metrics.insert(
            "amplitude_at_spacing".into(),
            field_amplitude(&beam, beam.center + d).abs(),
        );
    }
    Ok(Outcome {
        tables: vec![table],
        data: json!({ "beam": to_value(&beam)? }),
        metrics,
    })
}

pub fn spectrum(s: &Scenario) -> Result<Outcome> {
    let trap = s.trap_config()?;
    let (chain, modes) = chain_and_modes(&trap).context("chain")?;
    let sp = s.spectrum.as_ref().expect("validated");
    let z = chain.positions[sp.ion];
    let beam = s.beam_at(z)?;
    let sample = coupling_sample(&beam, z);
    let weights: Vec<f64> = (0..chain.len())
        .map(|j| {
            if j == sp.ion {
                field_gradient(&beam, z).abs()
            } else {
                0.0
            }
        })
        .collect();
    let eta = lamb_dicke_matrix(&modes, &weights, 1.0).context("Lamb-Dicke factors")?;
    let sideband: Vec<f64> = eta[sp.ion].iter().map(|e| beam.omega_ref * e.abs()).collect();
    let noise = s.noise_model(modes.len());
    let probe = SpectrumProbe {
        detunings: linspace(sp.start_mhz, sp.stop_mhz, sp.points)
            .into_iter()
            .map(mhz)
            .collect(),
        tau: sp.probe_us * 1e-6,
        nbar: noise.initial_nbar.clone(),
        fock: sp.fock,
    };
    let p1 = simulate_spectrum(&modes, sample.carrier_rabi, &sideband, &probe);
    let mut table = Table::new("spectrum", &["detuning_mhz", "p1"]);
    for (d, p) in probe.detunings.iter().zip(&p1) {
        table.push(vec![to_mhz(*d).into(), (*p).into()]);
    }
    let mut metrics = BTreeMap::from([("carrier_khz".to_string(), to_khz(sample.carrier_rabi))]);
    for (m, (e, sb)) in eta[sp.ion].iter().zip(&sideband).enumerate() {
        metrics.insert(format!("eta_{m}"), e.abs());
        metrics.insert(format!("sideband_{m}_khz"), to_khz(*sb));
        metrics.insert(format!("mode_{m}_mhz"), to_mhz(modes.frequencies[m]));
    }
    Ok(Outcome {
        tables: vec![table],
        data: json!({ "ion": sp.ion, "coupling": to_value(&sample)?, "lamb_dicke": eta[sp.ion] }),
        metrics,
    })
}

pub fn sdf(s: &Scenario) -> Result<Outcome> {
    match s.sdf.as_ref().expect("validated") {
        SdfSection::Profile {
            offset_min_um,
            offset_max_um,
            points,
            probe_us,
        } => sdf_profile(s, *offset_min_um, *offset_max_um, *points, *probe_us),
        SdfSection::Detuned {
            detuning_khz,
            drive_khz,
            ramp_us,
            shape,
            nbar,
            stop_us,
            points,
        } => {
            let mut table = Table::new("oscillation", &["time_us", "p1"]);
            let mut series = Vec::with_capacity(*points);
            for t in linspace(0.0, *stop_us, *points) {
                let p = if t <= 0.0 {
                    0.0
                } else {
                    let env = envelope(t, ramp_us.min(0.5 * t), *shape);
                    detuned_sdf_oscillation(khz(*drive_khz), khz(*detuning_khz), &env, *nbar, &[t * 1e-6])
                        .context("detuned force")?[0]
                };
                table.push(vec![t.into(), p.into()]);
                series.push((t, p));
            }
            let (t_max, p_max) = series
                .iter()
                .copied()
                .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
            let mut metrics = BTreeMap::from([("p1_max".to_string(), p_max), ("t_max_us".to_string(), t_max)]);
            // First interior minimum after the maximum marks the loop closure.
            if let Some(w) = series
                .windows(3)
                .find(|w| w[1].0 > t_max && w[1].1 <= w[0].1 && w[1].1 <= w[2].1)
            {
                metrics.insert("return_time_us".into(), w[1].0);
                metrics.insert("return_p1".into(), w[1].1);
            }
            Ok(Outcome {
                tables: vec![table],
                data: json!({ "mode": "detuned" }),
                metrics,
            })
        }
        SdfSection::Thermometry {
            bsb_khz,
            nbar,
            stop_us,
            points,
            shots,
            fock,
        } => {
            let times: Vec<f64> = linspace(0.0, *stop_us, *points).into_iter().map(|t| t * 1e-6).collect();
            let model =
                sideband_rabi(Transition::Blue, 1.0, khz(*bsb_khz), *nbar, *fock, &times).context("sideband flop")?;
            let data: Vec<f64> = if *shots > 0 {
                let seed = seed_of(s)?;
                model
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let c = sample_counts(&[1.0 - p, *p], *shots, seed.wrapping_add(i as u64))
                            .context("shot sampling")?;
                        Ok(c[1] as f64 / *shots as f64)
                    })
                    .collect::<Result<_>>()?
            } else {
                model.clone()
            };
            let fit = fit_phonon_number(&times, &data, None).context("phonon-number fit")?;
            let fit_fock = (*fock).max((10.0 * (fit.nbar + 1.0)).ceil() as usize);
            let curve =
                sideband_rabi(Transition::Blue, 1.0, fit.omega, fit.nbar, fit_fock, &times).context("fitted flop")?;
            let mut table = Table::new("thermometry", &["time_us", "p1_model", "p1_data", "p1_fit"]);
            for i in 0..times.len() {
                table.push(vec![
                    (times[i] * 1e6).into(),
                    model[i].into(),
                    data[i].into(),
                    curve[i].into(),
                ]);
            }
            let metrics = BTreeMap::from([
                ("nbar_fit".to_string(), fit.nbar),
                ("nbar_err".to_string(), fit.nbar_err),
                ("bsb_fit_khz".to_string(), to_khz(fit.omega)),
                ("bsb_err_khz".to_string(), to_khz(fit.omega_err)),
                ("residual_rms".to_string(), fit.residual_rms),
            ]);
            Ok(Outcome {
                tables: vec![table],
                data: json!({ "mode": "thermometry", "fit": to_value(&fit)? }),
                metrics,
            })
        }
    }
}

fn sdf_profile(s: &Scenario, lo: f64, hi: f64, points: usize, probe_us: f64) -> Result<Outcome> {
    let beam = s.beam_at(0.0)?;
    let b = s.beam.as_ref().expect("validated");
    let g0 = field_gradient(&beam, beam.center).abs();
    if g0 == 0.0 {
        return Err(RunnerError::Validation(vec![
            "beam.kind: the force profile needs a beam with a gradient at its centre".into(),
        ]));
    }
    let tau = probe_us * 1e-6;
    let sdf_at = |z: f64| match b.sdf_khz {
        Some(pin) => khz(pin) * field_gradient(&beam, z).abs() / g0,
        None => coupling_sample(&beam, z).gradient_rabi_scale,
    };
    let mut table = Table::new(
        "sdf_profile",
        &["offset_um", "carrier_khz", "sdf_khz", "p1_carrier", "p1_sdf"],
    );
    for off in linspace(lo, hi, points) {
        let z = beam.center + off * 1e-6;
        let car = coupling_sample(&beam, z).carrier_rabi;
        let f = sdf_at(z);
        let p_car = (0.5 * car * tau).sin().powi(2);
        table.push(vec![
            off.into(),
            to_khz(car).into(),
            to_khz(f).into(),
            p_car.into(),
            sdf_population(f, tau).into(),
        ]);
    }
    let metrics = BTreeMap::from([
        ("z1q_minus_z2q_um".to_string(), 0.5 * peak_separation(&beam) * 1e6),
        ("sdf_slit_khz".to_string(), to_khz(sdf_at(beam.center))),
        ("carrier_peak_khz".to_string(), b.carrier_khz),
        ("p1_sdf_slit".to_string(), sdf_population(sdf_at(beam.center), tau)),
    ]);
    Ok(Outcome {
        tables: vec![table],
        data: json!({ "mode": "profile", "beam": to_value(&beam)? }),
        metrics,
    })
}

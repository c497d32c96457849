use proptest::prelude::*;
use twinbeam_core::analysis::{fit_noise_vs_power, line_fwhm, max_squeezing, slope_ratio, slope_ratio_to_db, PowerScanPoint};
use twinbeam_core::detection::{
    band_power, measure_twin_spectrum, snl_calibration, subtract_background, synthesize_coherent_trace,
    synthesize_difference_trace, synthesize_floor_trace, twin_optical_power, AnalyzerSettings, DetectorModel,
    SpectralShapePreset, TwinBeamReadout,
};
use twinbeam_core::medium::{
    linear_grid, respond, squeezing_vs, LossBudget, MediumCalibration, MediumParams, SweepAxis,
};
use twinbeam_core::noise::{
    ideal_noise_ratio, ideal_output_powers, lossy_noise_ratio, mc_noise_ratio, to_db, TwinBeamModel,
};
use twinbeam_core::readout::Setup;
use twinbeam_core::seed::stage_seed;
use twinbeam_core::source::{beat_spectrum, eom_chain_budget, effective_squeezing_under_jitter, ProbeSource};

// snapshot of configs/calibration.toml
fn shipped() -> MediumCalibration {
    MediumCalibration {
        g0: 2.5485946772568937,
        gamma_2: 40e6,
        delta_asym: 4e-8,
        detuning_width: 1e9,
        abs_strength: 0.04,
        xs_delta: 8.85538814589116e-9,
        xs_temp: 0.015030996034818308,
        xs_temp_threshold: 112.0,
        ref_pump_power: 0.6,
        ref_temperature: 112.0,
        ref_delta_one: 1.6e9,
        ref_cell_length: 0.025,
    }
}

fn lossy(g: f64, ep: f64, ec: f64) -> f64 {
    lossy_noise_ratio(&TwinBeamModel::new(g, 1.0, ep, ec).unwrap()).unwrap().linear
}

proptest! {
    #[test]
    fn ideal_ratio_strictly_decreasing(g in 1.0f64..1e3, dg in 1e-6f64..10.0) {
        let a = ideal_noise_ratio(g).unwrap().linear;
        let b = ideal_noise_ratio(g + dg).unwrap().linear;
        prop_assert!(b < a);
    }

    #[test]
    fn common_loss_scales_the_excess_over_snl(
        g in 1.0f64..20.0,
        ep in 0.05f64..1.0,
        ec in 0.05f64..1.0,
        s in 0.01f64..1.0,
    ) {
        let excess = lossy(g, ep, ec) - 1.0;
        let scaled = lossy(g, s * ep, s * ec) - 1.0;
        prop_assert!((scaled - s * excess).abs() <= 1e-12 * (1.0 + 2.0 * g));
    }

    #[test]
    fn common_loss_never_improves_squeezing(
        g in 1.0f64..20.0,
        ep in 0.05f64..1.0,
        ec in 0.05f64..1.0,
        k in 0.0f64..0.99,
    ) {
        let base = lossy(g, ep, ec);
        let worse = lossy(g, ep * (1.0 - k), ec * (1.0 - k));
        prop_assert!(base >= 1.0 || worse >= base * (1.0 - 1e-12));
    }

    #[test]
    fn lossy_ratio_rises_as_balanced_efficiency_falls(g in 1.0f64..20.0, eta in 0.05f64..1.0, k in 0.0f64..0.99) {
        prop_assert!(lossy(g, eta * (1.0 - k), eta * (1.0 - k)) >= lossy(g, eta, eta) * (1.0 - 1e-12));
    }

    #[test]
    fn balanced_losses_stay_between_ideal_and_snl(g in 1.0f64..50.0, eta in 0.01f64..1.0) {
        let v = lossy(g, eta, eta);
        let ideal = ideal_noise_ratio(g).unwrap().linear;
        prop_assert!(v >= ideal * (1.0 - 1e-12));
        prop_assert!(v <= 1.0 + 1e-12);
    }

    #[test]
    fn output_powers_differ_by_the_seed(seed in 1e-9f64..1.0, g in 1.0f64..100.0) {
        let (p, c) = ideal_output_powers(seed, g).unwrap();
        // one rounding in each product
        prop_assert!((p - c - seed).abs() <= 2.0 * f64::EPSILON * p);
        prop_assert!(c >= 0.0);
    }

    #[test]
    fn gain_falls_to_one_far_from_resonance(
        p in 0.0f64..1.5,
        t in 90.0f64..125.0,
        d in -100e6f64..100e6,
    ) {
        let cal = shipped();
        let far = respond(&MediumParams { pump_power: p, temperature: t, delta_two: d, delta_one: 1e15, ..Default::default() }, &cal).unwrap();
        prop_assert!(far.gain >= 1.0 && far.gain - 1.0 < 1e-9);
        let off = respond(&MediumParams { pump_power: 0.0, temperature: t, delta_two: d, ..Default::default() }, &cal).unwrap();
        prop_assert_eq!(off.gain, 1.0);
        let r = respond(&MediumParams { pump_power: p, temperature: t, delta_two: d, ..Default::default() }, &cal).unwrap();
        prop_assert!(r.gain >= 1.0);
        prop_assert!(r.eta_cell_probe > 0.0 && r.eta_cell_probe <= 1.0);
        prop_assert!(r.eta_cell_conj > 0.0 && r.eta_cell_conj <= 1.0);
    }

    #[test]
    fn beat_fwhm_tracks_linewidth(log_fwhm in 0.0f64..7.0, ratio in 10.0f64..40.0) {
        let fwhm = 10f64.powf(log_fwhm);
        let src = ProbeSource::independent().with_beat_fwhm(fwhm);
        let s = beat_spectrum(&src, 20.0 * fwhm, fwhm / ratio).unwrap();
        let est = line_fwhm(&s).unwrap();
        prop_assert!((est / fwhm - 1.0).abs() < 0.10, "{} vs {}", est, fwhm);
    }

    #[test]
    fn eom_budget_accounts_for_all_light(
        m1 in 0.0f64..0.4,
        p1 in 0.0f64..0.3,
        c in 0.0f64..0.3,
        t in 0.01f64..1.0,
    ) {
        let src = ProbeSource::EomSideband {
            beat_fwhm: 1.0,
            mod_freq: 9.2e9,
            rf_power_dbm: 34.0,
            sideband_fracs: (m1, p1, c),
            etalon_finesse: 60.0,
            etalon_chain_transmissivity: t,
        };
        let b = eom_chain_budget(&src).unwrap();
        for v in [b.probe_fraction, b.rejected_carrier, b.rejected_plus1, b.chain_loss, b.other_orders] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((b.total() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn balanced_losses_reduce_to_closed_form() {
    for g in linear_grid(1.0, 10.0, 0.25).unwrap() {
        for eta in linear_grid(0.1, 1.0, 0.05).unwrap() {
            let expected = (1.0 - eta) + eta / (2.0 * g - 1.0);
            let v = lossy(g, eta, eta);
            assert!((v - expected).abs() <= 1e-12 * expected, "G={g} eta={eta}: {v} vs {expected}");
        }
    }
}

#[test]
fn single_arm_loss_can_lower_noise() {
    // the probe carries G/(G-1) times the conjugate power, so extra probe
    // loss rebalances the pair
    assert!(lossy(3.5, 0.9, 1.0) < lossy(3.5, 1.0, 1.0));
    // and with a lossy probe arm the conjugate becomes the brighter beam
    assert!(lossy(14.5, 0.05, 0.2) < lossy(14.5, 0.05, 0.8));
    // near balance, extra loss on the dimmer beam can help as well
    assert!(0.2 * 2.6 > 0.31 * 1.6);
    assert!(lossy(2.6, 0.2, 0.29) < lossy(2.6, 0.2, 0.31));
}

#[test]
fn monte_carlo_agrees_with_closed_form() {
    let mut worst: f64 = 0.0;
    for (i, g) in [1.0, 2.0, 4.0, 10.0].into_iter().enumerate() {
        for (j, (ep, ec)) in [(0.1, 0.1), (0.5, 0.9), (0.9, 0.5), (1.0, 1.0)].into_iter().enumerate() {
            let m = TwinBeamModel::new(g, 1.0, ep, ec).unwrap();
            let mc = mc_noise_ratio(&m, 200_000, stage_seed(20181016, &format!("mc/{i}/{j}"))).unwrap();
            let exact = lossy_noise_ratio(&m).unwrap().linear;
            let z = (mc.estimate - exact).abs() / mc.standard_error;
            worst = worst.max(z);
            assert!(z < 3.0, "G={g} eta=({ep},{ec}): {} ± {} vs {exact}", mc.estimate, mc.standard_error);
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn monte_carlo_standard_error_is_calibrated() {
    let m = TwinBeamModel::new(3.0, 1.0, 0.8, 0.9).unwrap();
    let exact = lossy_noise_ratio(&m).unwrap().linear;
    let z: Vec<f64> = (0..100)
        .map(|s| {
            let e = mc_noise_ratio(&m, 20_000, s).unwrap();
            (e.estimate - exact) / e.standard_error
        })
        .collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 0.35, "{mean}");
    assert!((0.8..1.2).contains(&sd), "{sd}");
}

#[test]
fn lossless_sweep_reproduces_ideal_ratio() {
    let cal = MediumCalibration {
        abs_strength: 0.0,
        xs_delta: 0.0,
        xs_temp: 0.0,
        ..shipped()
    };
    let base = MediumParams {
        window_transmission: 1.0,
        ..Default::default()
    };
    for (axis, grid) in [
        (SweepAxis::Pump, linear_grid(0.0, 1.0, 0.1).unwrap()),
        (SweepAxis::Delta2, linear_grid(-44e6, 48e6, 4e6).unwrap()),
        (SweepAxis::Temperature, linear_grid(98.0, 117.0, 1.0).unwrap()),
    ] {
        let r = squeezing_vs(axis, &grid, &base, &cal, &LossBudget::lossless(), 1.0).unwrap();
        for (g, n) in r.gain.iter().zip(&r.noise_linear) {
            let ideal = ideal_noise_ratio(*g).unwrap().linear;
            assert!((n - ideal).abs() <= 1e-12 * ideal.max(1e-3), "{axis}: {n} vs {ideal}");
        }
    }
}

#[test]
fn jitter_never_improves_on_convex_optimum() {
    let setup = Setup {
        medium: MediumParams::default(),
        calibration: shipped(),
        losses: LossBudget::default(),
        source: ProbeSource::independent(),
        shape: SpectralShapePreset::INDEPENDENT,
        seed_power: 175e-6,
        gain_override: None,
    };
    let response = setup.detuning_response().unwrap();
    let v0 = response.at(0.0).unwrap();
    for fwhm in [1.0, 1e3, 1e5, 1e6, 5e6] {
        let avg = effective_squeezing_under_jitter(&setup.source.with_beat_fwhm(fwhm), &response, 0.0).unwrap();
        assert!(avg.linear >= v0 * (1.0 - 1e-12), "fwhm {fwhm}: {} < {v0}", avg.linear);
    }
}

fn analyzer() -> AnalyzerSettings {
    AnalyzerSettings::default()
}

#[test]
fn twin_spectrum_stays_above_loss_floor() {
    let model = TwinBeamModel::new(3.5, 175e-6, 0.85, 0.9).unwrap();
    let eta = 0.85f64.max(0.9);
    for (src, preset) in [
        (ProbeSource::eom(), SpectralShapePreset::EOM),
        (ProbeSource::pll(), SpectralShapePreset::PLL),
        (ProbeSource::independent(), SpectralShapePreset::INDEPENDENT),
    ] {
        let readout = TwinBeamReadout::from_model(model, src, preset).unwrap();
        for f in linear_grid(1e3, 6e6, 1e3).unwrap() {
            assert!(readout.normalized_noise(f) >= 1.0 - eta);
        }
    }
    let readout = TwinBeamReadout::from_model(model, ProbeSource::eom(), SpectralShapePreset::EOM).unwrap();
    let detector = DetectorModel {
        reference_power: twin_optical_power(&model, &DetectorModel::default()),
        ..Default::default()
    };
    let m = measure_twin_spectrum(&readout, &detector, &analyzer(), (1 << 21) as f64 / 12e6, 5).unwrap();
    for &db in &m.normalized.power_db {
        assert!(db >= to_db(1.0 - eta));
    }
}

#[test]
fn coherent_beam_normalizes_to_zero() {
    let detector = DetectorModel::default();
    let settings = analyzer();
    let duration = (1 << 22) as f64 / settings.sample_rate;
    let floor = {
        let t = synthesize_floor_trace(&detector, duration, settings.sample_rate, 1).unwrap();
        twinbeam_core::detection::spectrum_analyzer(&t, &settings).unwrap()
    };
    let a = subtract_background(&snl_calibration(1e-3, &detector, &settings, duration, 2).unwrap(), &floor).unwrap();
    let b = subtract_background(&snl_calibration(1e-3, &detector, &settings, duration, 3).unwrap(), &floor).unwrap();
    let n = a.normalize(&b).unwrap();
    for &db in &n.power_db {
        assert!(db.abs() < 0.2, "{db}");
    }
}

#[test]
fn spectra_differ_between_seeds_only_statistically() {
    let model = TwinBeamModel::new(3.0, 1e-4, 0.9, 0.9).unwrap();
    let readout = TwinBeamReadout::from_model(model, ProbeSource::eom(), SpectralShapePreset::EOM).unwrap();
    let detector = DetectorModel::default();
    let d = (1 << 21) as f64 / 12e6;
    let a = measure_twin_spectrum(&readout, &detector, &analyzer(), d, 1).unwrap();
    let a2 = measure_twin_spectrum(&readout, &detector, &analyzer(), d, 1).unwrap();
    let b = measure_twin_spectrum(&readout, &detector, &analyzer(), d, 2).unwrap();
    assert_eq!(a, a2);
    assert_ne!(a.normalized.power_db, b.normalized.power_db);
    let (_, ma) = max_squeezing(&a.normalized, (0.5e6, 2e6)).unwrap();
    let (_, mb) = max_squeezing(&b.normalized, (0.5e6, 2e6)).unwrap();
    assert!((ma - mb).abs() < 0.3);
}

#[test]
fn power_scan_recovers_lossy_ratio() {
    let settings = analyzer();
    let detector = DetectorModel::default();
    let duration = (1 << 20) as f64 / settings.sample_rate;
    let template = TwinBeamModel::new(3.0, 1.0, 0.9, 0.95).unwrap();
    let expected = lossy_noise_ratio(&template).unwrap();
    let mut twin = Vec::new();
    let mut snl = Vec::new();
    for (i, p) in [50e-6, 100e-6, 150e-6, 200e-6, 250e-6].into_iter().enumerate() {
        let model = TwinBeamModel { seed_power: p, ..template };
        let readout = TwinBeamReadout::from_model(model, ProbeSource::eom(), SpectralShapePreset::FLAT).unwrap();
        let power = twin_optical_power(&model, &detector);
        let t = synthesize_difference_trace(&readout, &detector, duration, settings.sample_rate, stage_seed(7, &format!("t{i}"))).unwrap();
        let c = synthesize_coherent_trace(power, &detector, duration, settings.sample_rate, stage_seed(7, &format!("c{i}"))).unwrap();
        let bt = band_power(&t, &settings, 0.5e6, 1.5e6).unwrap();
        let bc = band_power(&c, &settings, 0.5e6, 1.5e6).unwrap();
        twin.push(PowerScanPoint { total_power: power, noise_power: bt.psd, std_dev: bt.stderr });
        snl.push(PowerScanPoint { total_power: power, noise_power: bc.psd, std_dev: bc.stderr });
    }
    let ft = fit_noise_vs_power(&twin).unwrap();
    let fs = fit_noise_vs_power(&snl).unwrap();
    let (ratio, se) = slope_ratio(&ft, &fs).unwrap();
    assert!((ratio - expected.linear).abs() < 3.0 * se, "{ratio} ± {se} vs {}", expected.linear);
    let db = slope_ratio_to_db(&ft, &fs).unwrap();
    let db_se = 10.0 / std::f64::consts::LN_10 * se / ratio;
    assert!((db - expected.db).abs() < 3.0 * db_se);
}

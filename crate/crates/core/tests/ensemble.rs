use qam_core::ensemble::*;
use qam_core::fft::Radix2Fft;
use qam_core::quantum::*;

#[test]
fn condensate_statistics() {
    let betas = sample_betas(&EnsembleSpec::condensate(10_000, 42)).unwrap();
    let n = betas.len() as f64;
    let mean = betas.iter().sum::<f64>() / n;
    let var = betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let fwhm = var.sqrt() * FWHM_PER_SIGMA;
    assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    assert!((fwhm - 0.06).abs() < 0.005, "fwhm {fwhm}");
}

#[test]
fn zero_width_gives_the_centre() {
    let spec = EnsembleSpec {
        beta_fwhm: 0.0,
        ..EnsembleSpec::condensate(1, 0)
    };
    assert_eq!(sample_betas(&spec).unwrap(), vec![0.5]);
}

#[test]
fn sampling_is_deterministic() {
    let a = sample_betas(&EnsembleSpec::condensate(100, 9)).unwrap();
    let b = sample_betas(&EnsembleSpec::condensate(100, 9)).unwrap();
    let c = sample_betas(&EnsembleSpec::condensate(100, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

fn run(se: &SeModel, seed: u64) -> Vec<MomentumHistogram> {
    let q = QuantumParams::new(1.4, 5.97, 0.0257, -64, 63).unwrap();
    let prop = FloquetPropagator::new(q, Radix2Fft::new(128).unwrap()).unwrap();
    let mut states = sample_beta_ensemble(&EnsembleSpec::condensate(16, seed), &q).unwrap();
    let mut out = Vec::new();
    evolve_ensemble(&mut states, &prop, 30, se, seed, 1, |h| {
        out.push(h.clone());
        Ok(())
    })
    .unwrap();
    out
}

#[test]
fn unkicked_rotor_stays_put() {
    let q = QuantumParams::new(0.0, 5.97, 0.0257, -16, 15).unwrap();
    let prop = FloquetPropagator::new(q, Radix2Fft::new(32).unwrap()).unwrap();
    let mut states = vec![RotorState::plane_wave(0.5, 0, &q).unwrap()];
    evolve_ensemble(&mut states, &prop, 40, &SeModel::off(), 1, 10, |h| {
        assert!((h.get(0) - 1.0).abs() < 1e-15);
        Ok(())
    })
    .unwrap();
}

#[test]
fn zero_emission_probability_matches_disabled_channel() {
    assert_eq!(run(&SeModel::fixed(0.0).unwrap(), 3), run(&SeModel::off(), 3));
}

#[test]
fn emission_changes_the_distribution() {
    let off = run(&SeModel::off(), 3);
    let on = run(&SeModel::fixed(0.3).unwrap(), 3);
    assert_ne!(off.last(), on.last());
    let total = on.last().unwrap().total();
    assert!((total - 1.0).abs() < 1e-12);
}

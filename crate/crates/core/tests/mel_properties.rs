use proptest::prelude::*;

use ncae::dsp::{build_mel_filterbank, hz_to_mel, mel_to_hz, MfccExtractor, PreprocessConfig};

proptest! {
    #[test]
    fn mel_round_trip(f in 0.0f64..30_000.0) {
        prop_assert!((mel_to_hz(hz_to_mel(f)) - f).abs() <= 1e-9 * (1.0 + f));
    }

    #[test]
    fn mel_is_strictly_increasing(a in 0.0f64..22_050.0, gap in 1e-3f64..1_000.0) {
        prop_assert!(hz_to_mel(a + gap) > hz_to_mel(a));
    }
}

#[test]
fn centres_increase_and_every_interior_bin_is_covered() {
    let cfg = PreprocessConfig::default();
    let fb = build_mel_filterbank::<f64>(&cfg).unwrap();
    assert!(fb.centers.windows(2).all(|w| w[1] > w[0]));
    let bin_hz = cfg.sample_rate as f64 / cfg.window_len as f64;
    let first = (fb.centers[0] / bin_hz).ceil() as usize;
    let last = (fb.centers[fb.centers.len() - 1] / bin_hz).floor() as usize;
    for bin in first..=last {
        let total: f64 = (0..fb.n_mels()).map(|b| fb.row(b)[bin]).sum();
        assert!(total > 0.0, "bin {bin} has no filter");
    }
}

/// A pure tone puts the largest log-mel value in the band whose triangle
/// peaks closest to it, for tones spread across the spectrum.
#[test]
fn tone_peaks_in_nearest_band() {
    let cfg = PreprocessConfig::default();
    let mut ex = MfccExtractor::<f64>::new(&cfg).unwrap();
    let centers = ex.filterbank().centers.clone();
    for band in [10usize, 40, 70, 100, 120] {
        let f = centers[band];
        let x: Vec<f64> = (0..cfg.segment_samples())
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / cfg.sample_rate as f64).sin())
            .collect();
        let v = ex.vector(&x).unwrap().coeffs;
        let argmax = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert!(argmax.abs_diff(band) <= 1, "tone at band {band} ({f:.1} Hz) peaked in {argmax}");
    }
}

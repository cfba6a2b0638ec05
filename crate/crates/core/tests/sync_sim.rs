mod support;

use choreo_core::sim::{synthetic_bode, AxisModel, VehicleModel};
use choreo_core::sync::{compensate, FrequencyResponseTable, ResponsePoint};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use support::tracking::{fly, mode_errors, two_mode_wave};

#[test]
fn measured_table_round_trip() {
    let mp = two_mode_wave(0.0, 40.0);
    let model = VehicleModel::default();
    let mut freqs = mp.frequencies().to_vec();
    freqs.sort_by(f64::total_cmp);
    let table = synthetic_bode(&model, &freqs, 0.1).unwrap();
    let plain = fly(&mp, None, model);
    let comp = fly(&mp, Some(&table), model);
    let (amp, phase) = mode_errors(&mp, &comp, 5.0);
    assert!(amp <= 0.01 && phase <= 0.02, "amplitude {amp}, phase {phase}");
    for n in 0..mp.len() {
        assert!(comp.metrics.rms_error[n] <= 0.2 * plain.metrics.rms_error[n]);
    }
    // Uncompensated tracking is visibly off, so the check above has teeth.
    let (amp0, phase0) = mode_errors(&mp, &plain, 5.0);
    assert!(amp0 > 0.01 || phase0 > 0.1);
}

#[test]
fn continuous_response_table_round_trip() {
    let mp = two_mode_wave(0.0, 40.0);
    let model = VehicleModel::default();
    let mut freqs = mp.frequencies().to_vec();
    freqs.sort_by(f64::total_cmp);
    assert!(freqs.iter().all(|w| *w <= 3.0));
    let axes = std::array::from_fn(|axis| {
        freqs
            .iter()
            .map(|&w| {
                let (magnitude, phase) = model.axes[axis].frequency_response(w);
                ResponsePoint { omega: w, magnitude, phase }
            })
            .collect()
    });
    let table = FrequencyResponseTable::new(axes).unwrap();
    let (amp, phase) = mode_errors(&mp, &fly(&mp, Some(&table), model), 5.0);
    assert!(amp <= 0.01 && phase <= 0.02, "amplitude {amp}, phase {phase}");
}

#[test]
fn ideal_plant_needs_no_compensation() {
    let mp = two_mode_wave(0.0, 10.0);
    let run = fly(&mp, Some(&FrequencyResponseTable::identity()), VehicleModel::ideal(0.01));
    assert!(run.metrics.rms_error.iter().all(|e| *e < 1e-12));
}

fn model() -> impl Strategy<Value = AxisModel> {
    (1.0f64..20.0, 0.2f64..1.5, 0usize..20)
        .prop_map(|(wn, z, lag)| AxisModel { natural_frequency: wn, damping: z, delay: lag as f64 * 0.01 })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, rng_seed: RngSeed::Fixed(6), ..ProptestConfig::default() })]

    #[test]
    fn plant_is_linear(m in model(), r1 in proptest::collection::vec(-1.0f64..1.0, 300), r2 in proptest::collection::vec(-1.0f64..1.0, 300), s in -3.0f64..3.0) {
        let y1 = m.respond(&r1, 0.01);
        let y2 = m.respond(&r2, 0.01);
        let scaled: Vec<f64> = r1.iter().map(|v| s * v).collect();
        let summed: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
        let ys = m.respond(&scaled, 0.01);
        let yp = m.respond(&summed, 0.01);
        for k in 0..300 {
            prop_assert!((ys[k] - s * y1[k]).abs() <= 1e-9);
            prop_assert!((yp[k] - y1[k] - y2[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn bounded_input_gives_bounded_output(m in model(), r in proptest::collection::vec(-1.0f64..1.0, 2000)) {
        let y = m.respond(&r, 0.01);
        prop_assert!(y.iter().all(|v| v.is_finite() && v.abs() <= 10.0));
    }

    #[test]
    fn compensation_keeps_frequencies_and_centres(gains in proptest::collection::vec(0.2f64..3.0, 6), phases in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let mp = two_mode_wave(0.0, 5.0);
        let axes = std::array::from_fn(|axis| vec![
            ResponsePoint { omega: 0.5, magnitude: gains[2 * axis], phase: phases[2 * axis] },
            ResponsePoint { omega: 4.0, magnitude: gains[2 * axis + 1], phase: phases[2 * axis + 1] },
        ]);
        let table = FrequencyResponseTable::new(axes).unwrap();
        let cp = compensate(&mp, &table).unwrap();
        let out = cp.to_primitive();
        prop_assert_eq!(out.frequencies(), mp.frequencies());
        for (a, b) in out.drones().iter().zip(mp.drones()) {
            prop_assert_eq!(a.c, b.c);
        }
    }
}

mod common;

use ambientd::clock::SimTime;
use ambientd::image::SyntheticImage;
use ambientd::policy::{
    illuminance_control_step, lux_band, marker_control_step, predict_tracking, resolve_constraints,
    resolve_constraints_detailed, CalibrationCurve, ControlConstraint, IlluminancePolicyState, LuxBand,
    MarkerControllerState, MarkerPhase, TextureLabel,
};
use ambientd::scene::{
    read_light_sensor, read_light_sensor_with, render_region, render_region_with, LuxCurve, MarkerPattern, MarkerSpec,
    Region, RenderConfig, TextureSpec, SENSOR_RELATIVE_NOISE,
};
use ambientd::vision::{MatchReport, TextureClass};
use common::{check_resolution, constraint, random_constraints};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat(level: f64, lux: f64) -> Region {
    Region::new("r", TextureSpec::Flat { level }, lux)
}

#[test]
fn pixel_noise_shrinks_with_light() {
    let mut stds = Vec::new();
    for lux in [50.0, 150.0, 300.0, 750.0] {
        let region = flat(0.5, lux);
        let noiseless = render_region_with(&RenderConfig::noiseless(), &region, 0, 64, 48).unwrap();
        let mut total = 0.0;
        for seed in 0..100 {
            let img = render_region(&region, seed, 64, 48).unwrap();
            let diffs: Vec<f64> =
                img.pixels.iter().zip(&noiseless.pixels).map(|(&a, &b)| a as f64 - b as f64).collect();
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            total += (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt();
        }
        stds.push(total / 100.0);
    }
    assert!(stds.windows(2).all(|w| w[0] > w[1]), "{stds:?}");
}

#[test]
fn light_response_saturates() {
    let cfg = RenderConfig::noiseless();
    let at = |lux| render_region_with(&cfg, &flat(1.0, lux), 0, 32, 32).unwrap();
    let (a, b) = (at(500.0), at(1000.0));
    assert_eq!(a, b);
    assert!(a.pixels.iter().all(|&p| p == 255));
    assert!(at(250.0).pixels.iter().all(|&p| p == 128));
}

#[test]
fn render_is_deterministic_per_seed() {
    let region = Region::new("r", TextureSpec::Checkerboard { cell: 8, low: 0.1, high: 0.9 }, 200.0);
    assert_eq!(render_region(&region, 42, 80, 60).unwrap(), render_region(&region, 42, 80, 60).unwrap());
    assert_ne!(render_region(&region, 42, 80, 60).unwrap(), render_region(&region, 43, 80, 60).unwrap());
}

proptest! {
    #[test]
    fn pgm_round_trip(w in 1usize..48, h in 1usize..48, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = SyntheticImage::from_fn(w, h, |_, _| rng.random());
        prop_assert_eq!(SyntheticImage::from_pgm(&img.to_pgm()).unwrap(), img);
    }
}

#[test]
fn worked_resolution_examples() {
    let app = constraint("app", 250.0, 800.0, 750.0, 0);
    let comfort = constraint("comfort", 100.0, 400.0, 300.0, 1);
    assert_eq!(resolve_constraints(&[app.clone(), comfort]).unwrap(), 400.0);
    let disjoint = constraint("comfort", 100.0, 200.0, 150.0, 1);
    assert_eq!(resolve_constraints(&[app, disjoint]).unwrap(), 750.0);
}

#[test]
fn random_sets_land_in_highest_nonempty_intersection() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..500 {
        let cs = random_constraints(&mut rng);
        let out = resolve_constraints(&cs).unwrap();
        check_resolution(&cs, out).unwrap_or_else(|e| panic!("case {case}: {e}"));
    }
}

proptest! {
    #[test]
    fn same_tier_order_does_not_matter(seed: u64, order in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = random_constraints(&mut rng);
        let permuted: Vec<ControlConstraint> = order.iter().filter(|&&i| i < cs.len()).map(|&i| cs[i].clone()).collect();
        prop_assert_eq!(
            resolve_constraints_detailed(&cs).unwrap(),
            resolve_constraints_detailed(&permuted).unwrap()
        );
    }
}

fn default_curve() -> CalibrationCurve {
    CalibrationCurve::from_lux_curve(&LuxCurve::default(), 11).unwrap()
}

#[test]
fn deadband_holds_for_a_thousand_steps() {
    let curve = default_curve();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for texture in [TextureClass::Coarse, TextureClass::Fine] {
        let mut state = IlluminancePolicyState::default();
        state.set_texture(texture);
        let band = state.deadband_fraction * state.optimal_lux;
        for k in 0..1000u64 {
            let measured = state.optimal_lux + rng.random_range(-band..=band);
            let cmd = illuminance_control_step(&mut state, measured, &curve, SimTime(k * 5000)).unwrap();
            assert_eq!(cmd, None, "step {k} at {measured}");
        }
    }
}

/// Plant under the default bulb curve: a command takes effect before the
/// next 5 s reading. Returns (readings, true illuminance per cycle).
fn closed_loop(
    initial_lux: f64,
    texture: TextureClass,
    cycles: u64,
    seed: u64,
    sensor_noise: f64,
) -> (Vec<f64>, Vec<f64>) {
    let curve = default_curve();
    let bulb = LuxCurve::default();
    let mut state = IlluminancePolicyState::default();
    state.set_texture(texture);
    let mut region = flat(0.5, initial_lux);
    let mut readings = Vec::new();
    let mut truth = Vec::new();
    for k in 0..cycles {
        let measured = read_light_sensor_with(&region, seed * 1000 + k, sensor_noise);
        readings.push(measured);
        truth.push(region.illuminance);
        if let Some(cmd) = illuminance_control_step(&mut state, measured, &curve, SimTime(k * 5000)).unwrap() {
            region.illuminance = bulb.lux(cmd);
        }
    }
    (readings, truth)
}

#[test]
fn closed_loop_settles_within_five_cycles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut starts: Vec<f64> = (0..200).map(|_| rng.random_range(10.0..=1000.0)).collect();
    starts.extend([10.0, 1000.0, 270.0, 330.0, 675.0, 825.0]);
    for (i, &start) in starts.iter().enumerate() {
        for texture in [TextureClass::Coarse, TextureClass::Fine] {
            let optimum = if texture == TextureClass::Coarse { 300.0 } else { 750.0 };
            let inside = |l: &f64| (l - optimum).abs() <= 0.1 * optimum;
            let (readings, _) = closed_loop(start, texture, 30, i as u64, 0.0);
            assert!(readings[5..].iter().all(inside), "start {start} {texture:?}: {readings:?}");
            // A noisy sensor may read just outside the band near its edge,
            // but the light itself must stay inside.
            let (_, truth) = closed_loop(start, texture, 30, i as u64, SENSOR_RELATIVE_NOISE);
            assert!(truth[5..].iter().all(inside), "start {start} {texture:?}: {truth:?}");
        }
    }
}

#[test]
fn texture_switch_is_one_burst() {
    let curve = default_curve();
    let bulb = LuxCurve::default();
    let mut state = IlluminancePolicyState::default();
    let mut region = flat(0.5, 300.0);
    let mut commands = Vec::new();
    for k in 0..40u64 {
        if k == 10 {
            state.set_texture(TextureClass::Fine);
            assert_eq!(state.optimal_lux, 750.0);
        }
        let measured = read_light_sensor(&region, k);
        if let Some(cmd) = illuminance_control_step(&mut state, measured, &curve, SimTime(k * 5000)).unwrap() {
            commands.push(k);
            region.illuminance = bulb.lux(cmd);
        }
    }
    let bursts = commands.iter().enumerate().filter(|&(i, &k)| i == 0 || commands[i - 1] + 1 != k).count();
    assert!(!commands.is_empty() && commands[0] >= 10, "{commands:?}");
    assert!(bursts <= 1, "{commands:?}");
}

#[test]
fn predicted_error_falls_with_more_light() {
    for texture in [TextureLabel::Checkerboard, TextureLabel::FinePaperLike] {
        let errors: Vec<f64> = [LuxBand::Low, LuxBand::Medium, LuxBand::High]
            .iter()
            .map(|&band| {
                let lux = match band {
                    LuxBand::Low => 75.0,
                    LuxBand::Medium => 300.0,
                    LuxBand::High => 750.0,
                };
                assert_eq!(lux_band(lux), band);
                predict_tracking(texture, lux).unwrap().expected_error_cm
            })
            .collect();
        assert!(errors.windows(2).all(|w| w[0] >= w[1]), "{texture}: {errors:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let (a, b) = (rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0));
        let (lo, hi) = (f64::min(a, b), f64::max(a, b));
        assert!(lux_band(lo) <= lux_band(hi));
        for texture in [TextureLabel::Checkerboard, TextureLabel::FinePaperLike] {
            let (e_lo, e_hi) = (predict_tracking(texture, lo).unwrap(), predict_tracking(texture, hi).unwrap());
            assert!(e_lo.expected_error_cm >= e_hi.expected_error_cm);
        }
    }
}

#[test]
fn measured_predictions() {
    let coarse = predict_tracking(TextureLabel::Checkerboard, 300.0).unwrap();
    assert_eq!(coarse.expected_error_cm, 4.1);
    assert!(!coarse.estimated);
    let fine = predict_tracking(TextureLabel::FinePaperLike, 300.0).unwrap();
    assert_eq!(fine.expected_error_cm, 12.0);
    assert_eq!(fine.class, ambientd::policy::TrackingClass::Poor);
    assert!(!fine.guidance.is_empty());
    assert!(predict_tracking(TextureLabel::Checkerboard, -1.0).is_err());
}

proptest! {
    #[test]
    fn marker_escalation_terminates(
        pattern_index in 0usize..4,
        size_index in 0u8..=2,
        target in 1.0f64..100.0,
        scores in proptest::collection::vec(0.0f64..=100.0, 40),
    ) {
        let spec = MarkerSpec::new(MarkerPattern::ALL[pattern_index], size_index).unwrap();
        let mut state = MarkerControllerState::new(spec);
        state.target_percentage = target;
        let mut phases = vec![state.escalation];
        let mut actions = 0;
        let mut now = SimTime::ZERO;
        for &score in &scores {
            if state.is_terminal() {
                break;
            }
            let report = MatchReport::new((score * 10.0).round() as usize, 1000);
            actions += marker_control_step(&mut state, &report, TextureClass::Coarse, now).len();
            phases.push(state.escalation);
            now = now + SimTime::from_secs_f64(2.0);
        }
        prop_assert!(phases.windows(2).all(|w| w[0] <= w[1]), "{:?}", phases);
        // 2 light attempts, 2 enlargements and 3 switches at most.
        prop_assert!(actions <= 7);
        prop_assert!(state.eink_commands() <= 5);
        let all_below = scores.iter().all(|&s| (s * 10.0).round() / 10.0 < target);
        if all_below {
            prop_assert_eq!(state.phase, MarkerPhase::Exhausted);
        } else {
            prop_assert!(state.is_terminal() || scores.iter().take(8).all(|&s| (s * 10.0).round() / 10.0 < target));
        }
    }
}

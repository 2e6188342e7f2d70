use done_bench::benchmark::{
    camelback, distance_to_optimum, robot_arm_rollout, BenchmarkRegistry, Camelback, RobotArm,
};
use done_core::rng::{stream_rng, Stream};
use rand::Rng;

// Straight-line transcription of the arm model, written separately from the
// library version: explicit per-link variables, no loops over links.
fn arm_reference(u: &[f64]) -> f64 {
    let d = std::f64::consts::PI / 180.0;
    let (mut al1, mut al2, mut al3) = (0.0f64, 0.0f64, 0.0f64);
    let (mut v1, mut v2, mut v3) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..50 {
        let u1 = u[k].clamp(-1.0, 1.0);
        let u2 = u[50 + k].clamp(-1.0, 1.0);
        let u3 = u[100 + k].clamp(-1.0, 1.0);
        let a1 = u1 + (d * al1).sin() * 9.8 * 0.05;
        let a2 = u2 + (d * (al1 + al2)).sin() * 9.8 * 0.05;
        let a3 = u3 + (d * (al1 + al2 + al3)).sin() * 9.8 * 0.05;
        v1 += a1;
        v2 += a2;
        v3 += a3;
        al1 += v1;
        al2 += v2;
        al3 += v3;
    }
    let h = std::f64::consts::FRAC_PI_2;
    let x = 8.625 * (h + d * al1).cos()
        + 8.625 * (h + d * (al1 + al2)).cos()
        + 6.125 * (h + d * (al1 + al2 + al3)).cos();
    let y = 8.625 * (h + d * al1).sin()
        + 8.625 * (h + d * (al1 + al2)).sin()
        + 6.125 * (h + d * (al1 + al2 + al3)).sin();
    ((x - 6.96).powi(2) + (y - 12.66).powi(2)).sqrt()
}

#[test]
fn arm_zero_control_matches_reference() {
    let u = vec![0.0; 150];
    let got = robot_arm_rollout(&u).unwrap();
    assert!(
        (got - arm_reference(&u)).abs() < 1e-10,
        "{got} vs {}",
        arm_reference(&u)
    );
}

#[test]
fn arm_random_controls_match_reference() {
    let mut rng = stream_rng(4, Stream::Data);
    for _ in 0..50 {
        let u: Vec<f64> = (0..150).map(|_| rng.random_range(-1.5..1.5)).collect();
        assert!((robot_arm_rollout(&u).unwrap() - arm_reference(&u)).abs() < 1e-10);
    }
}

#[test]
fn arm_is_deterministic_and_bounded() {
    let mut rng = stream_rng(9, Stream::Data);
    let bound = 1.49 * (1..=50).map(|k| k as f64).sum::<f64>();
    for _ in 0..100 {
        let u: Vec<f64> = (0..150).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = robot_arm_rollout(&u).unwrap();
        let b = robot_arm_rollout(&u).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a.is_finite());
        // the tip can never leave the disc of radius sum(l) around the base
        assert!(a <= 23.375 + 6.96f64.hypot(12.66) + 1e-9);
    }
    let mut state = done_bench::benchmark::RobotArmState::default();
    for _ in 0..50 {
        state.step([1.0, 1.0, 1.0]);
    }
    assert!(state.angles.iter().all(|a| a.abs() <= bound));
}

#[test]
fn camelback_symmetry() {
    let mut rng = stream_rng(1, Stream::Data);
    for _ in 0..1000 {
        let x = [rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)];
        assert_eq!(camelback(&x), camelback(&[-x[0], -x[1]]));
    }
}

#[test]
fn optima_consistent_with_objectives() {
    for bench in BenchmarkRegistry::default().iter() {
        for o in bench.known_optima() {
            assert!(
                (bench.evaluate(&o.x) - o.value).abs() < 1e-3,
                "{}",
                bench.name()
            );
            assert!(bench.bounds().contains(&o.x));
        }
        assert!(bench.default_config(0).validate().is_ok());
        assert_eq!(bench.default_config(0).dim(), bench.dim());
    }
}

#[test]
fn distance_picks_nearest_minimizer() {
    let d = distance_to_optimum(&Camelback, &[-0.0898, 0.7126]).unwrap();
    assert!(d < 1e-4);
    assert!(distance_to_optimum(&RobotArm, &[0.0; 150]).is_none());
}

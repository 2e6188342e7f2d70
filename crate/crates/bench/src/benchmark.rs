//! Benchmark problems, selectable by name through a [`BenchmarkRegistry`].

use std::f64::consts::PI;

use done_core::rng::{stream_rng, Stream};
use done_core::{DoneConfig, FreqDistribution, SearchBox, SolverOptions};
use rand::Rng;

/// A known global minimizer and its value.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub x: Vec<f64>,
    pub value: f64,
}

pub trait Benchmark: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn dim(&self) -> usize;
    fn bounds(&self) -> SearchBox;
    /// Noise-free objective value.
    fn evaluate(&self, x: &[f64]) -> f64;

    fn known_optima(&self) -> Vec<KnownOptimum> {
        Vec::new()
    }

    /// Suggested optimizer settings for this problem.
    fn default_config(&self, seed: u64) -> DoneConfig;

    /// Uniform random start inside the box.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, Stream::InitialPoint);
        let b = self.bounds();
        b.lower()
            .iter()
            .zip(b.upper())
            .map(|(&lo, &hi)| rng.random_range(lo..=hi))
            .collect()
    }
}

/// Euclidean distance from `x` to the closest known optimum.
pub fn distance_to_optimum(bench: &dyn Benchmark, x: &[f64]) -> Option<f64> {
    bench
        .known_optima()
        .iter()
        .map(|o| {
            o.x.iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .min_by(f64::total_cmp)
}

/// Six-hump camelback on `[-2, 2] x [-1, 1]`.
pub fn camelback(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let x1s = x1 * x1;
    let x2s = x2 * x2;
    (4.0 - 2.1 * x1s + x1s * x1s / 3.0) * x1s + x1 * x2 + (-4.0 + 4.0 * x2s) * x2s
}

// Minimizers refined from the commonly quoted four-digit values.
const CAMELBACK_MINIMIZER: [f64; 2] = [0.089_842_013_100_318_06, -0.712_656_403_020_739_6];
const CAMELBACK_MINIMUM: f64 = -1.031_628_453_489_877_4;

pub struct Camelback;

impl Benchmark for Camelback {
    fn name(&self) -> &str {
        "camelback"
    }

    fn description(&self) -> &str {
        "six-hump camelback, two global minima, 2-D"
    }

    fn dim(&self) -> usize {
        2
    }

    fn bounds(&self) -> SearchBox {
        SearchBox::new(vec![-2.0, -1.0], vec![2.0, 1.0]).expect("valid box")
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        camelback(x)
    }

    fn known_optima(&self) -> Vec<KnownOptimum> {
        let [a, b] = CAMELBACK_MINIMIZER;
        vec![
            KnownOptimum {
                x: vec![a, b],
                value: CAMELBACK_MINIMUM,
            },
            KnownOptimum {
                x: vec![-a, -b],
                value: CAMELBACK_MINIMUM,
            },
        ]
    }

    fn default_config(&self, seed: u64) -> DoneConfig {
        DoneConfig {
            num_features: 500,
            lambda: 1e-10,
            sigma_perturb: 0.01,
            sigma_explore: 0.01,
            bounds: self.bounds(),
            iterations: 100,
            freq_dist: FreqDistribution::IsotropicGaussian { sigma: 10.0 },
            seed,
            solver: SolverOptions::default(),
        }
    }
}

pub const ROBOT_LINKS: [f64; 3] = [8.625, 8.625, 6.125];
pub const ROBOT_TARGET: [f64; 2] = [6.96, 12.66];
pub const ROBOT_STEPS: usize = 50;
const GRAVITY_TERM: f64 = 9.8 * 0.05;

/// Three-link planar arm; angles in degrees, zero angles point straight up.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotArmState {
    pub angles: [f64; 3],
    pub velocities: [f64; 3],
    pub accelerations: [f64; 3],
}

impl Default for RobotArmState {
    fn default() -> Self {
        Self {
            angles: [0.0; 3],
            velocities: [0.0; 3],
            accelerations: [0.0; 3],
        }
    }
}

impl RobotArmState {
    /// Advances one time step with controls `u` (clipped to `[-1, 1]`).
    pub fn step(&mut self, u: [f64; 3]) {
        let prev = self.angles;
        let mut cumulative = 0.0;
        for i in 0..3 {
            cumulative += prev[i];
            let a = u[i].clamp(-1.0, 1.0) + (PI / 180.0 * cumulative).sin() * GRAVITY_TERM;
            self.accelerations[i] = a;
            self.velocities[i] += a;
            self.angles[i] += self.velocities[i];
        }
    }

    pub fn tip(&self) -> [f64; 2] {
        let mut cumulative = 0.0;
        let mut tip = [0.0, 0.0];
        for j in 0..3 {
            cumulative += self.angles[j];
            let theta = PI / 2.0 + PI / 180.0 * cumulative;
            tip[0] += ROBOT_LINKS[j] * theta.cos();
            tip[1] += ROBOT_LINKS[j] * theta.sin();
        }
        tip
    }
}

/// Distance from the tip to the target after 50 steps. `u` holds the
/// controls of link 1 for steps 1..=50, then link 2, then link 3.
pub fn robot_arm_rollout(u: &[f64]) -> Result<f64, done_core::DoneError> {
    if u.len() != 3 * ROBOT_STEPS {
        return Err(done_core::DoneError::DimensionMismatch {
            expected: 3 * ROBOT_STEPS,
            got: u.len(),
        });
    }
    let mut state = RobotArmState::default();
    for k in 0..ROBOT_STEPS {
        state.step([u[k], u[ROBOT_STEPS + k], u[2 * ROBOT_STEPS + k]]);
    }
    let [x, y] = state.tip();
    Ok((x - ROBOT_TARGET[0]).hypot(y - ROBOT_TARGET[1]))
}

pub struct RobotArm;

impl Benchmark for RobotArm {
    fn name(&self) -> &str {
        "robot-arm"
    }

    fn description(&self) -> &str {
        "150 control inputs of a three-link arm, distance to target at step 50"
    }

    fn dim(&self) -> usize {
        3 * ROBOT_STEPS
    }

    fn bounds(&self) -> SearchBox {
        SearchBox::uniform(-1.0, 1.0, self.dim()).expect("valid box")
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        robot_arm_rollout(x).unwrap_or(f64::NAN)
    }

    /// Desk-scale settings; the original study used 3000 features and 10000
    /// measurements.
    fn default_config(&self, seed: u64) -> DoneConfig {
        DoneConfig {
            num_features: 500,
            lambda: 1e-3,
            sigma_perturb: 5e-5,
            sigma_explore: 5e-5,
            bounds: self.bounds(),
            iterations: 2000,
            freq_dist: FreqDistribution::IsotropicGaussian { sigma: 1.0 },
            seed,
            solver: SolverOptions::default(),
        }
    }
}

/// `||x||^2` on `[-1, 1]^2`.
pub struct Sphere;

impl Benchmark for Sphere {
    fn name(&self) -> &str {
        "sphere"
    }

    fn description(&self) -> &str {
        "convex quadratic, minimum 0 at the origin, 2-D"
    }

    fn dim(&self) -> usize {
        2
    }

    fn bounds(&self) -> SearchBox {
        SearchBox::uniform(-1.0, 1.0, 2).expect("valid box")
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn known_optima(&self) -> Vec<KnownOptimum> {
        vec![KnownOptimum {
            x: vec![0.0, 0.0],
            value: 0.0,
        }]
    }

    fn default_config(&self, seed: u64) -> DoneConfig {
        DoneConfig {
            num_features: 200,
            lambda: 1e-6,
            sigma_perturb: 0.01,
            sigma_explore: 0.01,
            bounds: self.bounds(),
            iterations: 100,
            freq_dist: FreqDistribution::IsotropicGaussian { sigma: 2.0 },
            seed,
            solver: SolverOptions::default(),
        }
    }
}

pub struct BenchmarkRegistry {
    entries: Vec<Box<dyn Benchmark>>,
}

impl Default for BenchmarkRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: Vec::new(),
        };
        r.register(Box::new(Camelback));
        r.register(Box::new(RobotArm));
        r.register(Box::new(Sphere));
        r
    }
}

impl BenchmarkRegistry {
    /// Adds a benchmark, replacing any with the same name.
    pub fn register(&mut self, bench: Box<dyn Benchmark>) {
        self.entries.retain(|b| b.name() != bench.name());
        self.entries.push(bench);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Benchmark> {
        self.entries
            .iter()
            .find(|b| b.name() == name)
            .map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|b| b.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Benchmark> {
        self.entries.iter().map(|b| b.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camelback_values() {
        assert_eq!(camelback(&[0.0, 0.0]), 0.0);
        assert!((camelback(&[0.0898, -0.7126]) + 1.0316).abs() < 2e-4);
        assert_eq!(camelback(&[-0.0898, 0.7126]), camelback(&[0.0898, -0.7126]));
        for o in Camelback.known_optima() {
            assert!((camelback(&o.x) - o.value).abs() < 1e-12);
        }
    }

    #[test]
    fn refined_minimizer_is_stationary() {
        let h = 1e-6;
        let [a, b] = CAMELBACK_MINIMIZER;
        let gx = (camelback(&[a + h, b]) - camelback(&[a - h, b])) / (2.0 * h);
        let gy = (camelback(&[a, b + h]) - camelback(&[a, b - h])) / (2.0 * h);
        assert!(gx.abs() < 1e-8 && gy.abs() < 1e-8, "{gx} {gy}");
    }

    #[test]
    fn arm_points_up_at_rest() {
        let tip = RobotArmState::default().tip();
        assert!(tip[0].abs() < 1e-14);
        assert!((tip[1] - 23.375).abs() < 1e-12);
    }

    #[test]
    fn rollout_rejects_wrong_length() {
        assert!(robot_arm_rollout(&[0.0; 149]).is_err());
    }

    #[test]
    fn registry_names() {
        let r = BenchmarkRegistry::default();
        assert_eq!(r.names(), vec!["camelback", "robot-arm", "sphere"]);
        assert!(r.get("camelbak").is_none());
    }

    #[test]
    fn initial_point_in_box() {
        for seed in 0..20 {
            let x = RobotArm.initial_point(seed);
            assert!(RobotArm.bounds().contains(&x));
        }
    }
}

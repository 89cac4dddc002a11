//! Vehicle motion along the street.
//!
//! Acceleration follows a birth-death Markov chain over `2S+1` equidistant
//! values in `[-a_max, a_max]`; between chain transitions the vehicle moves
//! with constant acceleration for one CAM period. Speed is clamped to the
//! configured interval after each update and every vehicle keeps its lateral
//! grid column for the whole trace.

use crate::channel::Scene;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Raised by a kinematic step that would carry the vehicle off the street;
/// the trace ends at the previous state.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("vehicle {vehicle_id} left the street after t = {t_s} s")]
pub struct VehicleLeftScene {
    pub vehicle_id: u64,
    pub t_s: f64,
}

/// Parameters of the acceleration Markov chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmcConfig {
    /// Half the state count: the chain has `2 * half_states + 1` states.
    pub half_states: usize,
    /// Maximum acceleration magnitude in m/s^2.
    pub a_max: f64,
    /// Probability of moving to a neighbouring state at each tick.
    pub p: f64,
}

impl Default for FsmcConfig {
    fn default() -> Self {
        Self { half_states: 2, a_max: 1.0, p: 0.2 }
    }
}

impl FsmcConfig {
    pub fn num_states(&self) -> usize {
        2 * self.half_states + 1
    }

    /// Acceleration value of a state index, `-a_max + i * a_max / S`.
    pub fn state_value(&self, index: usize) -> f64 {
        -self.a_max + index as f64 * self.a_max / self.half_states as f64
    }

    /// Row-stochastic transition matrix of the chain. Interior states move to
    /// each neighbour with probability `p`; edge states bounce inward with
    /// `p` and hold with `1 - p`, which keeps the matrix doubly stochastic.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            if i == 0 {
                m[i][i] = 1.0 - self.p;
                m[i][i + 1] = self.p;
            } else if i == n - 1 {
                m[i][i] = 1.0 - self.p;
                m[i][i - 1] = self.p;
            } else {
                m[i][i - 1] = self.p;
                m[i][i] = 1.0 - 2.0 * self.p;
                m[i][i + 1] = self.p;
            }
        }
        m
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.half_states < 1 {
            return Err("half_states must be >= 1".into());
        }
        if !(self.p > 0.0 && self.p <= 0.5) {
            return Err("transition probability must satisfy 0 < p <= 0.5".into());
        }
        if !(self.a_max >= 0.0) {
            return Err("a_max must be non-negative".into());
        }
        Ok(())
    }
}

/// Speed bounds, CAM period and travel direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig {
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    /// CAM period in seconds.
    pub delta_tau_s: f64,
    /// +1 drives toward increasing y, -1 toward decreasing y.
    pub direction: i8,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            v_min_mps: 30.0 / 3.6,
            v_max_mps: 50.0 / 3.6,
            delta_tau_s: 0.1,
            direction: 1,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.v_min_mps >= 0.0 && self.v_min_mps <= self.v_max_mps) {
            return Err("speed bounds must satisfy 0 <= v_min <= v_max".into());
        }
        if !(self.delta_tau_s > 0.0) {
            return Err("CAM period must be positive".into());
        }
        if self.direction != 1 && self.direction != -1 {
            return Err("direction must be +1 or -1".into());
        }
        Ok(())
    }
}

/// Kinematic and chain state of one vehicle at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub vehicle_id: u64,
    /// Tick index since the trace started; `t_s` is always `step * delta_tau`.
    pub step: u64,
    /// Simulation time in seconds.
    pub t_s: f64,
    /// Position along the street (y axis) in meters.
    pub longitudinal_m: f64,
    /// Fixed column offset across the street (x axis) in meters.
    pub lateral_m: f64,
    pub speed_mps: f64,
    /// Index into the acceleration chain, `0..2S`.
    pub accel_state: usize,
}

/// Deterministic per-trace random stream derived from the master seed and
/// the vehicle id.
pub fn trace_rng(master_seed: u64, vehicle_id: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&vehicle_id.to_le_bytes());
    seed[16..24].copy_from_slice(b"csi-trce");
    ChaCha8Rng::from_seed(seed)
}

/// Spawns a vehicle at the street end matching its direction, on a random
/// grid column, with speed uniform in `[v_min, v_max]` and a uniform initial
/// acceleration state.
pub fn init_vehicle(
    vehicle_id: u64,
    scene: &Scene,
    mobility: &MobilityConfig,
    fsmc: &FsmcConfig,
    rng: &mut impl Rng,
) -> VehicleState {
    let column = rng.gen_range(0..scene.num_cols());
    let speed_mps = if mobility.v_max_mps > mobility.v_min_mps {
        rng.gen_range(mobility.v_min_mps..mobility.v_max_mps)
    } else {
        mobility.v_min_mps
    };
    let accel_state = rng.gen_range(0..fsmc.num_states());
    let longitudinal_m = if mobility.direction >= 0 { 0.0 } else { scene.street_length_m };
    VehicleState {
        vehicle_id,
        step: 0,
        t_s: 0.0,
        longitudinal_m,
        lateral_m: column as f64 * scene.grid_step_m,
        speed_mps,
        accel_state,
    }
}

/// One chain transition. Interior states move to either neighbour with
/// probability `p` each, edge states move inward with `p`.
pub fn fsmc_step(state_index: usize, fsmc: &FsmcConfig, rng: &mut impl Rng) -> usize {
    let last = fsmc.num_states() - 1;
    let u: f64 = rng.gen();
    if state_index == 0 {
        if u < fsmc.p { 1 } else { 0 }
    } else if state_index == last {
        if u < fsmc.p { last - 1 } else { last }
    } else if u < fsmc.p {
        state_index - 1
    } else if u < 2.0 * fsmc.p {
        state_index + 1
    } else {
        state_index
    }
}

/// Advances one CAM period: constant-acceleration kinematics, speed clamp,
/// then the chain transition that takes effect for the next period.
pub fn kinematic_update(
    v: &VehicleState,
    scene: &Scene,
    mobility: &MobilityConfig,
    fsmc: &FsmcConfig,
    rng: &mut impl Rng,
) -> Result<VehicleState, VehicleLeftScene> {
    let dt = mobility.delta_tau_s;
    let accel = fsmc.state_value(v.accel_state);
    let displacement = v.speed_mps * dt + 0.5 * accel * dt * dt;
    let longitudinal_m = v.longitudinal_m + mobility.direction as f64 * displacement;
    if longitudinal_m < 0.0 || longitudinal_m > scene.street_length_m {
        return Err(VehicleLeftScene { vehicle_id: v.vehicle_id, t_s: v.t_s });
    }
    let step = v.step + 1;
    Ok(VehicleState {
        vehicle_id: v.vehicle_id,
        step,
        t_s: step as f64 * dt,
        longitudinal_m,
        lateral_m: v.lateral_m,
        speed_mps: (v.speed_mps + accel * dt).clamp(mobility.v_min_mps, mobility.v_max_mps),
        accel_state: fsmc_step(v.accel_state, fsmc, rng),
    })
}

/// Simulates one vehicle until it leaves the street or `max_steps` states
/// have been produced. The initial state is included.
pub fn simulate_trace(
    vehicle_id: u64,
    scene: &Scene,
    mobility: &MobilityConfig,
    fsmc: &FsmcConfig,
    rng: &mut impl Rng,
    max_steps: usize,
) -> Vec<VehicleState> {
    assert!(max_steps >= 1, "max_steps must be >= 1");
    let mut states = vec![init_vehicle(vehicle_id, scene, mobility, fsmc, rng)];
    while states.len() < max_steps {
        match kinematic_update(states.last().unwrap(), scene, mobility, fsmc, rng) {
            Ok(next) => states.push(next),
            Err(_) => break,
        }
    }
    states
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> Scene {
        Scene::default()
    }

    #[test]
    fn degenerate_speed_interval_is_exact() {
        let mut mobility = MobilityConfig::default();
        mobility.v_min_mps = 10.0;
        mobility.v_max_mps = 10.0;
        let mut rng = trace_rng(1, 1);
        let v = init_vehicle(1, &scene(), &mobility, &FsmcConfig::default(), &mut rng);
        assert_eq!(v.speed_mps, 10.0);
    }

    #[test]
    fn spawn_end_matches_direction() {
        let s = scene();
        let mut rng = trace_rng(2, 0);
        let fwd = init_vehicle(0, &s, &MobilityConfig::default(), &FsmcConfig::default(), &mut rng);
        assert_eq!(fwd.longitudinal_m, 0.0);
        let mut back = MobilityConfig::default();
        back.direction = -1;
        let rev = init_vehicle(0, &s, &back, &FsmcConfig::default(), &mut rng);
        assert_eq!(rev.longitudinal_m, s.street_length_m);
    }

    #[test]
    fn initial_accel_state_is_uniform() {
        let s = scene();
        let fsmc = FsmcConfig::default();
        let mobility = MobilityConfig::default();
        let mut rng = trace_rng(3, 7);
        let mut counts = [0usize; 5];
        let draws = 100_000;
        for id in 0..draws {
            let v = init_vehicle(id, &s, &mobility, &fsmc, &mut rng);
            counts[v.accel_state] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.2).abs() < 0.01, "state frequency {freq}");
        }
    }

    #[test]
    fn spawn_column_lies_on_grid() {
        let s = scene();
        let mut rng = trace_rng(4, 0);
        for id in 0..500 {
            let v = init_vehicle(id, &s, &MobilityConfig::default(), &FsmcConfig::default(), &mut rng);
            let col = v.lateral_m / s.grid_step_m;
            assert!((col - col.round()).abs() < 1e-9);
            assert!(v.lateral_m >= 0.0 && v.lateral_m <= s.street_width_m);
        }
    }

    #[test]
    fn interior_transition_frequencies() {
        let fsmc = FsmcConfig::default();
        let mut rng = trace_rng(5, 0);
        let trials = 1_000_000;
        let (mut left, mut stay, mut right) = (0u32, 0u32, 0u32);
        for _ in 0..trials {
            match fsmc_step(2, &fsmc, &mut rng) {
                1 => left += 1,
                2 => stay += 1,
                3 => right += 1,
                other => panic!("unreachable state {other}"),
            }
        }
        let n = trials as f64;
        assert!((left as f64 / n - 0.2).abs() < 0.005);
        assert!((stay as f64 / n - 0.6).abs() < 0.005);
        assert!((right as f64 / n - 0.2).abs() < 0.005);
    }

    #[test]
    fn half_probability_never_holds_interior_states() {
        let mut fsmc = FsmcConfig::default();
        fsmc.p = 0.5;
        let mut rng = trace_rng(6, 0);
        for _ in 0..10_000 {
            assert_ne!(fsmc_step(2, &fsmc, &mut rng), 2);
        }
    }

    // Oracle: power-iterate the transition matrix to its stationary law.
    fn stationary_law(fsmc: &FsmcConfig) -> Vec<f64> {
        let m = fsmc.transition_matrix();
        let n = m.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[j] += pi[i] * m[i][j];
                }
            }
            pi = next;
        }
        pi
    }

    #[test]
    fn transition_matrix_is_doubly_stochastic_with_uniform_law() {
        let fsmc = FsmcConfig::default();
        let m = fsmc.transition_matrix();
        for row in &m {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for j in 0..m.len() {
            let col: f64 = m.iter().map(|row| row[j]).sum();
            assert!((col - 1.0).abs() < 1e-12);
        }
        for p in stationary_law(&fsmc) {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn long_run_occupancy_matches_stationary_law() {
        let fsmc = FsmcConfig::default();
        let mut rng = trace_rng(7, 0);
        let mut counts = [0u64; 5];
        let mut state = 2;
        let steps = 1_000_000;
        for _ in 0..steps {
            state = fsmc_step(state, &fsmc, &mut rng);
            counts[state] += 1;
        }
        for c in counts {
            assert!((c as f64 / steps as f64 - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn zero_accel_step_is_exact() {
        let s = scene();
        let mut mobility = MobilityConfig::default();
        mobility.v_min_mps = 5.0;
        mobility.v_max_mps = 20.0;
        let fsmc = FsmcConfig::default();
        let v = VehicleState {
            vehicle_id: 0,
            step: 0,
            t_s: 0.0,
            longitudinal_m: 100.0,
            lateral_m: 10.0,
            speed_mps: 10.0,
            accel_state: 2, // value 0
        };
        let mut rng = trace_rng(8, 0);
        let next = kinematic_update(&v, &s, &mobility, &fsmc, &mut rng).unwrap();
        assert_eq!(next.longitudinal_m, 101.0);
        assert_eq!(next.speed_mps, 10.0);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn deceleration_matches_hand_kinematics() {
        let s = scene();
        let mut mobility = MobilityConfig::default();
        mobility.v_min_mps = 5.0;
        mobility.v_max_mps = 20.0;
        let fsmc = FsmcConfig::default();
        let v = VehicleState {
            vehicle_id: 0,
            step: 3,
            t_s: 0.3,
            longitudinal_m: 50.0,
            lateral_m: 4.0,
            speed_mps: 10.0,
            accel_state: 0, // value -1
        };
        let mut rng = trace_rng(9, 0);
        let next = kinematic_update(&v, &s, &mobility, &fsmc, &mut rng).unwrap();
        assert!((next.longitudinal_m - 50.995).abs() < 1e-12);
        assert!((next.speed_mps - 9.9).abs() < 1e-12);
    }

    #[test]
    fn speed_clamps_at_bounds() {
        let s = scene();
        let mobility = MobilityConfig::default();
        let fsmc = FsmcConfig::default();
        let mut rng = trace_rng(10, 0);
        let at_max = VehicleState {
            vehicle_id: 0,
            step: 0,
            t_s: 0.0,
            longitudinal_m: 10.0,
            lateral_m: 2.0,
            speed_mps: mobility.v_max_mps,
            accel_state: 4, // value +1
        };
        let next = kinematic_update(&at_max, &s, &mobility, &fsmc, &mut rng).unwrap();
        assert_eq!(next.speed_mps, mobility.v_max_mps);
        let at_min = VehicleState { speed_mps: mobility.v_min_mps, accel_state: 0, ..at_max };
        let next = kinematic_update(&at_min, &s, &mobility, &fsmc, &mut rng).unwrap();
        assert_eq!(next.speed_mps, mobility.v_min_mps);
    }

    #[test]
    fn leaving_the_street_signals() {
        let s = scene();
        let mobility = MobilityConfig::default();
        let fsmc = FsmcConfig::default();
        let v = VehicleState {
            vehicle_id: 3,
            step: 100,
            t_s: 10.0,
            longitudinal_m: s.street_length_m - 0.1,
            lateral_m: 2.0,
            speed_mps: 10.0,
            accel_state: 2,
        };
        let mut rng = trace_rng(11, 0);
        let err = kinematic_update(&v, &s, &mobility, &fsmc, &mut rng).unwrap_err();
        assert_eq!(err, VehicleLeftScene { vehicle_id: 3, t_s: 10.0 });
    }

    #[test]
    fn pinned_accel_gives_uniform_spacing() {
        let s = scene();
        let mut mobility = MobilityConfig::default();
        mobility.v_min_mps = 10.0;
        mobility.v_max_mps = 10.0;
        // a_max = 0 pins every chain state to zero acceleration.
        let fsmc = FsmcConfig { half_states: 2, a_max: 0.0, p: 0.2 };
        let mut rng = trace_rng(12, 0);
        let trace = simulate_trace(0, &s, &mobility, &fsmc, &mut rng, 50);
        assert_eq!(trace.len(), 50);
        for pair in trace.windows(2) {
            assert!((pair[1].longitudinal_m - pair[0].longitudinal_m - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn default_trace_length_is_bounded_by_extreme_speeds() {
        let s = scene();
        let mobility = MobilityConfig::default();
        let fsmc = FsmcConfig::default();
        for id in 0..10 {
            let mut rng = trace_rng(13, id);
            let trace = simulate_trace(id, &s, &mobility, &fsmc, &mut rng, 100_000);
            assert!(
                trace.len() >= 390 && trace.len() <= 670,
                "trace length {} out of band",
                trace.len()
            );
        }
    }

    #[test]
    fn traces_are_deterministic_under_seed() {
        let s = scene();
        let mobility = MobilityConfig::default();
        let fsmc = FsmcConfig::default();
        let run = || {
            let mut rng = trace_rng(99, 5);
            simulate_trace(5, &s, &mobility, &fsmc, &mut rng, 100_000)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trace_invariants_hold() {
        let s = scene();
        let mobility = MobilityConfig::default();
        let fsmc = FsmcConfig::default();
        for id in 0..5 {
            let mut rng = trace_rng(14, id);
            let trace = simulate_trace(id, &s, &mobility, &fsmc, &mut rng, 100_000);
            for pair in trace.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                assert_eq!(a.lateral_m, b.lateral_m);
                assert!((b.t_s - a.t_s - mobility.delta_tau_s).abs() < 1e-9);
                assert!(b.longitudinal_m > a.longitudinal_m);
            }
            for v in &trace {
                assert!(v.speed_mps >= mobility.v_min_mps && v.speed_mps <= mobility.v_max_mps);
                assert!(s.contains(v.lateral_m, v.longitudinal_m));
                assert!(v.accel_state < fsmc.num_states());
                assert_eq!(v.t_s, v.step as f64 * mobility.delta_tau_s);
            }
        }
    }
}

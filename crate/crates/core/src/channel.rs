//! Street-canyon multipath channel synthesis.
//!
//! Coordinate frame: `x` runs across the street (walls at `x = 0` and
//! `x = street_width_m`), `y` runs along the street, `z` is up. The base
//! station antenna panel is a uniform planar array; its response to a plane
//! wave departing at (azimuth, elevation) factors as a Kronecker product over
//! the array axes. Multipath comes from a deterministic image-method
//! generator: line of sight, ground bounce, one bounce off each wall, and a
//! ground+wall double bounce, each with free-space spreading loss and a
//! per-bounce power reflectivity.
//!
//! All functions here are pure; the channel is a fixed function of receiver
//! position, so repeated queries at one grid point return identical values.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Propagation speed used for delays, in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Errors from channel synthesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("receiver position (x={x}, y={y}) is outside the street grid")]
    PositionOutOfScene { x: f64, y: f64 },
    #[error("subcarrier index {k} out of range (K = {num_subcarriers})")]
    SubcarrierOutOfRange { k: usize, num_subcarriers: usize },
}

/// Uniform planar array layout at the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Antenna count along the x axis of the panel.
    pub m_x: usize,
    /// Antenna count along the y axis of the panel.
    pub m_y: usize,
    /// Antenna count along the z axis of the panel.
    pub m_z: usize,
    /// Element spacing as a fraction of the carrier wavelength.
    pub spacing_over_lambda: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        // 16-element 4x4 panel at half-wavelength spacing.
        Self { m_x: 4, m_y: 4, m_z: 1, spacing_over_lambda: 0.5 }
    }
}

impl ArrayGeometry {
    /// Total element count `M = m_x * m_y * m_z`.
    pub fn total_elements(&self) -> usize {
        self.m_x * self.m_y * self.m_z
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.m_x < 1 || self.m_y < 1 || self.m_z < 1 {
            return Err("array dimensions must all be >= 1".into());
        }
        if !(self.spacing_over_lambda > 0.0) {
            return Err("element spacing must be positive".into());
        }
        Ok(())
    }
}

/// OFDM carrier parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Number of OFDM subcarriers K.
    pub num_subcarriers: usize,
    /// Number of strongest paths kept per receiver position.
    pub max_paths: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 28e9,
            bandwidth_hz: 100e6,
            num_subcarriers: 240,
            max_paths: 5,
        }
    }
}

impl ChannelConfig {
    /// Carrier wavelength in meters.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.carrier_hz > 0.0) {
            return Err("carrier frequency must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err("bandwidth must be positive".into());
        }
        if self.num_subcarriers < 1 {
            return Err("subcarrier count must be >= 1".into());
        }
        if self.max_paths < 1 {
            return Err("max_paths must be >= 1".into());
        }
        Ok(())
    }
}

/// One propagation path from the base station to a receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    /// Linear path power gain.
    pub gain: f64,
    /// Propagation delay in seconds.
    pub delay_s: f64,
    /// Signal phase in radians, wrapped to `[0, 2*pi)`.
    pub phase_rad: f64,
    /// Departure azimuth at the base station, from the x axis in the xy plane.
    pub azimuth_rad: f64,
    /// Departure elevation, measured as the polar angle from the z axis.
    pub elevation_rad: f64,
}

/// Static street-canyon geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    /// Street extent along the y axis, in meters.
    pub street_length_m: f64,
    /// Street extent across, in meters; walls sit at `x = 0` and this value.
    pub street_width_m: f64,
    /// Grid pitch in meters.
    pub grid_step_m: f64,
    /// Base station position `[x, y, z]` in meters.
    pub gnb_position_m: [f64; 3],
    /// Amplitude reflection applied in power per bounce, in `[0, 1]`.
    pub wall_reflectivity: f64,
    /// Vehicle antenna height in meters.
    pub antenna_height_m: f64,
    /// Default base station height in meters.
    pub gnb_height_m: f64,
}

impl Default for Scene {
    fn default() -> Self {
        let gnb_height_m = 6.0;
        Self {
            street_length_m: 550.2,
            street_width_m: 36.0,
            grid_step_m: 0.2,
            // Roadside pole 4 m from the x=0 wall, halfway down the street.
            gnb_position_m: [4.0, 275.1, gnb_height_m],
            wall_reflectivity: 0.7,
            antenna_height_m: 1.5,
            gnb_height_m,
        }
    }
}

impl Scene {
    /// Number of grid rows along the street (row `i` sits at `y = i * step`).
    pub fn num_rows(&self) -> usize {
        (self.street_length_m / self.grid_step_m).round() as usize
    }

    /// Number of grid columns across the street (column `j` at `x = j * step`).
    pub fn num_cols(&self) -> usize {
        (self.street_width_m / self.grid_step_m).round() as usize + 1
    }

    /// Nearest grid row index for a longitudinal coordinate.
    pub fn row_of(&self, y: f64) -> usize {
        let i = (y / self.grid_step_m).round();
        (i.max(0.0) as usize).min(self.num_rows() - 1)
    }

    /// Nearest grid column index for a lateral coordinate.
    pub fn col_of(&self, x: f64) -> usize {
        let j = (x / self.grid_step_m).round();
        (j.max(0.0) as usize).min(self.num_cols() - 1)
    }

    /// Grid row of the base station.
    pub fn gnb_row(&self) -> usize {
        self.row_of(self.gnb_position_m[1])
    }

    /// True when the lateral/longitudinal coordinates fall inside the grid.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x <= self.street_width_m && y >= 0.0 && y <= self.street_length_m
    }

    /// Snaps a continuous position to the nearest grid point, at the vehicle
    /// antenna height. The channel is defined only at grid points.
    pub fn snap_to_grid(&self, x: f64, y: f64) -> [f64; 3] {
        [
            self.col_of(x) as f64 * self.grid_step_m,
            self.row_of(y) as f64 * self.grid_step_m,
            self.antenna_height_m,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.street_length_m > 0.0 && self.street_width_m > 0.0 && self.grid_step_m > 0.0) {
            return Err("scene extents and grid step must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.wall_reflectivity) {
            return Err("wall reflectivity must lie in [0, 1]".into());
        }
        if !(self.antenna_height_m > 0.0 && self.gnb_height_m > 0.0) {
            return Err("antenna heights must be positive".into());
        }
        Ok(())
    }
}

/// Channel coefficients of all array elements at a single subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub coefficients: Vec<Complex64>,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Channel coefficients across all K subcarriers; column k is subcarrier k.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub columns: Vec<ChannelVector>,
}

impl ChannelMatrix {
    pub fn num_subcarriers(&self) -> usize {
        self.columns.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.columns.first().map_or(0, ChannelVector::len)
    }
}

/// Array response vector for a plane wave departing at the given angles.
///
/// Built as `a_x (x) a_y (x) a_z` with per-axis element phases
/// `kappa * m * u`, `kappa = 2*pi*spacing_over_lambda`, and direction cosines
/// `u = (sin(el)cos(az), sin(el)sin(az), cos(el))`. Elements are flattened
/// x-major: element `(m_x, m_y, m_z)` lands at `(m_x*M_y + m_y)*M_z + m_z`.
pub fn array_response(azimuth_rad: f64, elevation_rad: f64, geometry: &ArrayGeometry) -> ChannelVector {
    let kappa = TAU * geometry.spacing_over_lambda;
    let (sin_el, cos_el) = elevation_rad.sin_cos();
    let (sin_az, cos_az) = azimuth_rad.sin_cos();
    let ux = sin_el * cos_az;
    let uy = sin_el * sin_az;
    let uz = cos_el;

    let axis = |count: usize, u: f64| -> Vec<Complex64> {
        (0..count)
            .map(|m| Complex64::from_polar(1.0, kappa * m as f64 * u))
            .collect()
    };
    let ax = axis(geometry.m_x, ux);
    let ay = axis(geometry.m_y, uy);
    let az = axis(geometry.m_z, uz);

    let mut coefficients = Vec::with_capacity(geometry.total_elements());
    for vx in &ax {
        for vy in &ay {
            for vz in &az {
                coefficients.push(vx * vy * vz);
            }
        }
    }
    ChannelVector { coefficients }
}

// Mirror set applied to the base station image for one path candidate. The
// candidate list is fixed; ordering below is the tie-break order when gains
// are equal.
#[derive(Clone, Copy)]
struct PathCandidate {
    flip_ground: bool,
    wall: Option<Wall>,
}

#[derive(Clone, Copy)]
enum Wall {
    Low,  // x = 0
    High, // x = street_width
}

const CANDIDATES: [PathCandidate; 5] = [
    PathCandidate { flip_ground: false, wall: None }, // line of sight
    PathCandidate { flip_ground: true, wall: None },  // ground bounce
    PathCandidate { flip_ground: false, wall: Some(Wall::Low) },
    PathCandidate { flip_ground: false, wall: Some(Wall::High) },
    PathCandidate { flip_ground: true, wall: Some(Wall::Low) }, // ground + wall
];

// Path lengths are clamped below by this to keep gains finite if a receiver
// ever coincides with an image point.
const MIN_PATH_LENGTH_M: f64 = 1.0;

/// Deterministic image-method path list for a receiver position.
///
/// Returns `min(max_paths, 5)` components sorted by descending gain: line of
/// sight, ground bounce, one bounce off each wall, and a ground-plus-low-wall
/// double bounce. Gain is free-space spreading over the unfolded length with
/// the squared wall reflectivity applied once per bounce; the phase is tied
/// to the delay,  `-2*pi*f_c*tau` wrapped to `[0, 2*pi)`, so the channel is a
/// fixed function of position.
pub fn trace_paths(
    scene: &Scene,
    rx_position_m: [f64; 3],
    config: &ChannelConfig,
) -> Result<Vec<PathComponent>, ChannelError> {
    let [rx_x, rx_y, _] = rx_position_m;
    if !scene.contains(rx_x, rx_y) {
        return Err(ChannelError::PositionOutOfScene { x: rx_x, y: rx_y });
    }

    let lambda = config.wavelength_m();
    let gnb = scene.gnb_position_m;
    let refl_power = scene.wall_reflectivity * scene.wall_reflectivity;

    let mut paths: Vec<PathComponent> = CANDIDATES
        .iter()
        .map(|cand| {
            let mut image = gnb;
            let mut bounces = 0u32;
            if cand.flip_ground {
                image[2] = -image[2];
                bounces += 1;
            }
            match cand.wall {
                Some(Wall::Low) => {
                    image[0] = -image[0];
                    bounces += 1;
                }
                Some(Wall::High) => {
                    image[0] = 2.0 * scene.street_width_m - image[0];
                    bounces += 1;
                }
                None => {}
            }

            let diff = [
                rx_position_m[0] - image[0],
                rx_position_m[1] - image[1],
                rx_position_m[2] - image[2],
            ];
            let dist = (diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]).sqrt();
            let length = dist.max(MIN_PATH_LENGTH_M);

            // Departure direction at the real base station: mirror the
            // image-to-receiver direction back through each reflecting plane.
            let mut dir = if dist > 1e-12 {
                [diff[0] / dist, diff[1] / dist, diff[2] / dist]
            } else {
                [1.0, 0.0, 0.0]
            };
            if cand.wall.is_some() {
                dir[0] = -dir[0];
            }
            if cand.flip_ground {
                dir[2] = -dir[2];
            }

            let gain = {
                let spreading = lambda / (4.0 * std::f64::consts::PI * length);
                spreading * spreading * refl_power.powi(bounces as i32)
            };
            let delay_s = length / SPEED_OF_LIGHT;
            let phase_rad = wrap_phase(-TAU * config.carrier_hz * delay_s);

            PathComponent {
                gain,
                delay_s,
                phase_rad,
                azimuth_rad: dir[1].atan2(dir[0]),
                elevation_rad: dir[2].clamp(-1.0, 1.0).acos(),
            }
        })
        .collect();

    paths.sort_by(|a, b| b.gain.partial_cmp(&a.gain).expect("path gains are finite"));
    paths.truncate(config.max_paths.min(paths.len()));
    Ok(paths)
}

fn wrap_phase(phase: f64) -> f64 {
    let wrapped = phase.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Channel vector at subcarrier `k`: the ray sum
/// `h_k = sum_l sqrt(rho_l / K) * exp(j*(theta_l + 2*pi*k*tau_l*B/K)) * a_l`.
pub fn channel_at_subcarrier(
    paths: &[PathComponent],
    k: usize,
    geometry: &ArrayGeometry,
    config: &ChannelConfig,
) -> Result<ChannelVector, ChannelError> {
    let big_k = config.num_subcarriers;
    if k >= big_k {
        return Err(ChannelError::SubcarrierOutOfRange { k, num_subcarriers: big_k });
    }

    let mut coefficients = vec![Complex64::new(0.0, 0.0); geometry.total_elements()];
    for path in paths {
        let steering = array_response(path.azimuth_rad, path.elevation_rad, geometry);
        let amplitude = (path.gain / big_k as f64).sqrt();
        let phase = path.phase_rad + TAU * k as f64 * path.delay_s * config.bandwidth_hz / big_k as f64;
        let scale = Complex64::from_polar(amplitude, phase);
        for (h, a) in coefficients.iter_mut().zip(&steering.coefficients) {
            *h += scale * a;
        }
    }
    Ok(ChannelVector { coefficients })
}

/// Full M x K channel matrix; column k is `channel_at_subcarrier(paths, k)`.
pub fn channel_matrix(
    paths: &[PathComponent],
    geometry: &ArrayGeometry,
    config: &ChannelConfig,
) -> ChannelMatrix {
    let columns = (0..config.num_subcarriers)
        .map(|k| {
            channel_at_subcarrier(paths, k, geometry, config)
                .expect("k < num_subcarriers by construction")
        })
        .collect();
    ChannelMatrix { columns }
}

//! Closed-loop agents: a 2-D arena with a differential-drive robot and a
//! simulated event camera + gyro, the obstacle-avoidance / target-acquisition
//! network, and the serial-order sequence-learning network. Both networks
//! compile onto the chip emulator.
//!
//! Conventions: meters, seconds, radians; arena x rightward, y upward; theta
//! is measured counter-clockwise from +x, so omega > 0 turns left. Image
//! columns are indexed scene-left-high (azimuth +fov/2 maps to the last
//! column), which keeps the crossed motor wiring below turning the robot
//! toward targets and away from obstacles with the plain decode
//! omega = g * (rate_R - rate_L), Motor-L/R being the wheel drives.

use alloc::vec;
use alloc::vec::Vec;

use crate::chip::{AerEvent, Chip, ChipConfig, ChipError, ConnectivityMatrix, Micros};
use crate::fields::{compile_wta, quantize_level, KernelParams, WtaLayout, WtaSpec};
use crate::rng::SimRng;

use libm::{atan2, asin, ceil, cos, exp, floor, round, sin, sqrt};

const PI: f64 = core::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub enum AgentError {
    InvalidArena(&'static str),
    InvalidParam(&'static str),
    Capacity,
    ItemOutOfRange,
    Chip(ChipError),
}

impl core::fmt::Display for AgentError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            AgentError::InvalidArena(s) => write!(f, "invalid arena: {s}"),
            AgentError::InvalidParam(s) => write!(f, "invalid parameter: {s}"),
            AgentError::Capacity => write!(f, "network does not fit on the chip"),
            AgentError::ItemOutOfRange => write!(f, "item location out of range"),
            AgentError::Chip(e) => write!(f, "chip: {e}"),
        }
    }
}

impl core::error::Error for AgentError {}

impl From<ChipError> for AgentError {
    fn from(e: ChipError) -> Self {
        AgentError::Chip(e)
    }
}

// ---------------------------------------------------------------------------
// Arena and robot
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetSpec {
    pub x: f64,
    pub y: f64,
    /// LED blink rate in Hz; 0 disables the LED.
    pub blink_hz: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Circle>,
    pub target: TargetSpec,
}

impl Arena {
    pub fn empty(width: f64, height: f64, target: TargetSpec) -> Self {
        Arena {
            width,
            height,
            obstacles: Vec::new(),
            target,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(AgentError::InvalidArena("bounds"));
        }
        let t = &self.target;
        if !(t.x >= 0.0 && t.x <= self.width && t.y >= 0.0 && t.y <= self.height) {
            return Err(AgentError::InvalidArena("target outside bounds"));
        }
        if !(t.blink_hz >= 0.0) {
            return Err(AgentError::InvalidArena("blink rate"));
        }
        for o in &self.obstacles {
            if !(o.r > 0.0) {
                return Err(AgentError::InvalidArena("obstacle radius"));
            }
            if o.x - o.r < 0.0 || o.x + o.r > self.width || o.y - o.r < 0.0 || o.y + o.r > self.height
            {
                return Err(AgentError::InvalidArena("obstacle outside bounds"));
            }
            let d = sqrt((t.x - o.x) * (t.x - o.x) + (t.y - o.y) * (t.y - o.y));
            if d <= o.r {
                return Err(AgentError::InvalidArena("target inside obstacle"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

impl RobotState {
    pub fn at(x: f64, y: f64, theta: f64) -> Self {
        RobotState {
            x,
            y,
            theta: wrap_angle(theta),
            v: 0.0,
            omega: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotLimits {
    pub v_max: f64,
    pub omega_max: f64,
    /// Robot body radius used for collision checks.
    pub radius: f64,
}

impl Default for RobotLimits {
    fn default() -> Self {
        RobotLimits {
            v_max: 0.3,
            omega_max: 2.0,
            radius: 0.05,
        }
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a - 2.0 * PI * floor((a + PI) / (2.0 * PI));
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn collides(arena: &Arena, x: f64, y: f64, radius: f64) -> bool {
    if x < radius || x > arena.width - radius || y < radius || y > arena.height - radius {
        return true;
    }
    arena.obstacles.iter().any(|o| {
        let dx = x - o.x;
        let dy = y - o.y;
        dx * dx + dy * dy < (o.r + radius) * (o.r + radius)
    })
}

/// Advance the unicycle one step. Commands are clamped to the limits; a
/// step that would collide with a wall or obstacle freezes the position and
/// reports the collision.
pub fn robot_step(
    arena: &Arena,
    r: &RobotState,
    v_cmd: f64,
    omega_cmd: f64,
    dt: f64,
    lim: &RobotLimits,
) -> (RobotState, bool) {
    debug_assert!(dt > 0.0);
    let v = v_cmd.clamp(-lim.v_max, lim.v_max);
    let omega = omega_cmd.clamp(-lim.omega_max, lim.omega_max);
    let nx = r.x + v * cos(r.theta) * dt;
    let ny = r.y + v * sin(r.theta) * dt;
    let theta = wrap_angle(r.theta + omega * dt);
    if collides(arena, nx, ny, lim.radius) {
        (
            RobotState {
                x: r.x,
                y: r.y,
                theta,
                v,
                omega,
            },
            true,
        )
    } else {
        (
            RobotState {
                x: nx,
                y: ny,
                theta,
                v,
                omega,
            },
            false,
        )
    }
}

// ---------------------------------------------------------------------------
// Event camera
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DvsModel {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Events per second per rad/s of apparent edge motion.
    pub k_motion: f64,
    /// Expected events per LED blink transition.
    pub k_led: f64,
}

impl Default for DvsModel {
    fn default() -> Self {
        DvsModel {
            width: 128,
            height: 128,
            fov: PI / 3.0,
            k_motion: 1500.0,
            k_led: 40.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DvsEvent {
    pub t: Micros,
    pub x: u16,
    pub y: u16,
}

impl DvsModel {
    /// Image column for an azimuth relative to the robot heading, or None
    /// when outside the field of view. Scene-left (positive azimuth) maps
    /// to high columns.
    pub fn column(&self, azimuth: f64) -> Option<u16> {
        let half = self.fov / 2.0;
        if azimuth <= -half || azimuth >= half {
            return None;
        }
        let c = (0.5 + azimuth / self.fov) * (self.width - 1) as f64;
        Some(round(c) as u16)
    }
}

/// Geometric event-camera model: obstacle edges emit Poisson events at a
/// rate proportional to their apparent angular velocity (lower image half),
/// the target LED emits a burst in the upper half at every blink
/// transition. A static robot in a static scene with the LED off emits
/// nothing.
pub fn simulate_dvs(
    model: &DvsModel,
    arena: &Arena,
    r: &RobotState,
    t0: f64,
    dt: f64,
    rng: &mut SimRng,
) -> Vec<DvsEvent> {
    debug_assert!(dt > 0.0);
    let mut out = Vec::new();
    let t0_us = (t0 * 1e6) as Micros;
    let dt_us = (dt * 1e6).max(1.0) as Micros;
    let half_rows = model.height as u16 / 2;

    // Obstacle silhouettes: two vertical edges per circle, each moving at
    // bearing_rate -/+ size_rate.
    for o in &arena.obstacles {
        let dx = o.x - r.x;
        let dy = o.y - r.y;
        let d = sqrt(dx * dx + dy * dy);
        if d <= o.r {
            continue;
        }
        let alpha = wrap_angle(atan2(dy, dx) - r.theta);
        let beta = asin((o.r / d).min(1.0));
        // d(alpha)/dt for a translating, rotating observer; d(beta)/dt from
        // the range rate.
        let alpha_rate = -r.omega + r.v * sin(alpha) / d;
        let denom = sqrt((1.0 - (o.r / d) * (o.r / d)).max(1e-9));
        let beta_rate = o.r * r.v * cos(alpha) / (d * d * denom);
        for (edge, rate) in [
            (alpha + beta, alpha_rate + beta_rate),
            (alpha - beta, alpha_rate - beta_rate),
        ] {
            let col = match model.column(edge) {
                Some(c) => c,
                None => continue,
            };
            let n = rng.poisson(model.k_motion * rate.abs() * dt);
            for _ in 0..n {
                out.push(DvsEvent {
                    t: t0_us + rng.next_below(dt_us),
                    x: col,
                    y: half_rows + rng.next_below(half_rows as u64) as u16,
                });
            }
        }
    }

    // Target LED: bursts at each on/off transition, upper image half, a
    // small pixel block around the target column.
    if arena.target.blink_hz > 0.0 {
        let f = 2.0 * arena.target.blink_hz;
        let first = ceil(t0 * f) as u64;
        let last = ceil((t0 + dt) * f) as u64;
        let dx = arena.target.x - r.x;
        let dy = arena.target.y - r.y;
        let alpha = wrap_angle(atan2(dy, dx) - r.theta);
        if let Some(col) = model.column(alpha) {
            let end = t0_us + dt_us - 1;
            for k in first..last {
                let tt = (((k as f64 / f) * 1e6) as Micros).clamp(t0_us, end);
                let n = rng.poisson(model.k_led);
                for _ in 0..n {
                    let jitter = rng.next_below(500).min(end - tt);
                    let xx = (col as i64 + rng.next_below(5) as i64 - 2)
                        .clamp(0, model.width as i64 - 1) as u16;
                    out.push(DvsEvent {
                        t: tt + jitter,
                        x: xx,
                        y: rng.next_below(half_rows as u64) as u16,
                    });
                }
            }
        }
    }

    out.sort_by_key(|e| e.t);
    out
}

// ---------------------------------------------------------------------------
// Obstacle-avoidance / target-acquisition network
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PopRange {
    pub start: u16,
    pub len: u16,
}

impl PopRange {
    pub fn end(&self) -> u16 {
        self.start + self.len
    }

    pub fn contains(&self, n: u16) -> bool {
        n >= self.start && n < self.end()
    }

    pub fn iter(&self) -> impl Iterator<Item = u16> {
        self.start..self.end()
    }
}

/// Named population ranges of the navigation network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkLayout {
    pub target_wta1: PopRange,
    pub target_wta2: PopRange,
    pub obstacle: PopRange,
    pub motor_l: PopRange,
    pub motor_r: PopRange,
    pub speed: PopRange,
    pub gyro: PopRange,
    pub inhibitory: PopRange,
}

impl NetworkLayout {
    pub fn populations(&self) -> [(&'static str, PopRange); 8] {
        [
            ("target_wta1", self.target_wta1),
            ("target_wta2", self.target_wta2),
            ("obstacle", self.obstacle),
            ("motor_l", self.motor_l),
            ("motor_r", self.motor_r),
            ("speed", self.speed),
            ("gyro", self.gyro),
            ("inhibitory", self.inhibitory),
        ]
    }

    pub fn total_neurons(&self) -> u16 {
        self.populations().iter().map(|(_, p)| p.len).sum()
    }
}

fn ranges_disjoint(pops: &[PopRange]) -> bool {
    let mut spans: Vec<(u16, u16)> = pops.iter().map(|p| (p.start, p.end())).collect();
    spans.sort_unstable();
    spans.windows(2).all(|w| w[0].1 <= w[1].0)
}

/// Input address map for the navigation chip: upper-half image columns
/// (pairs of pixels) start at 0, lower-half columns at 64, the gyro line is
/// a single address.
pub const ADDR_UPPER: u32 = 0;
pub const ADDR_LOWER: u32 = 64;
pub const ADDR_GYRO: u32 = 128;

/// Encode camera pixel events into chip input events: one address per two
/// image columns, upper and lower halves in separate banks.
pub fn dvs_to_aer(model: &DvsModel, events: &[DvsEvent]) -> Vec<AerEvent> {
    let half = (model.height / 2) as u16;
    events
        .iter()
        .map(|e| {
            let col = (e.x / 2) as u32;
            let base = if e.y < half { ADDR_UPPER } else { ADDR_LOWER };
            AerEvent::input(e.t, base + col)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BraitenbergParams {
    pub dvs_level: i8,
    /// Soft lateral excitation of the first target layer (amplitude,
    /// sigma in columns) — the "WTA" layer of the pair.
    pub wta1_lateral: (f64, f64),
    pub wta1_to_wta2: i8,
    /// Kernel of the selection layer — the "strong WTA".
    pub wta2_kernel: KernelParams,
    pub wta2_self: i8,
    pub wta2_to_inh: i8,
    pub inh_to_wta2: i8,
    pub wta2_to_motor: i8,
    pub obstacle_to_motor: i8,
    pub obstacle_to_speed: i8,
    pub gyro_to_visual: i8,
    /// Constant bias current on the Speed population, amperes.
    pub speed_bias: f64,
}

impl Default for BraitenbergParams {
    fn default() -> Self {
        BraitenbergParams {
            dvs_level: 3,
            wta1_lateral: (1.0, 2.5),
            wta1_to_wta2: 2,
            wta2_kernel: KernelParams {
                a_exc: 3.0,
                a_inh: 1.0,
                sigma_exc: 2.5,
                sigma_inh: 24.0,
            },
            wta2_self: 2,
            wta2_to_inh: 1,
            inh_to_wta2: -1,
            wta2_to_motor: 2,
            obstacle_to_motor: 2,
            obstacle_to_speed: -1,
            gyro_to_visual: -3,
            speed_bias: 100e-12,
        }
    }
}

fn all_to_all(
    conn: &mut ConnectivityMatrix,
    pre: PopRange,
    post: PopRange,
    level: i8,
) -> Result<(), ChipError> {
    for i in pre.iter() {
        for j in post.iter() {
            conn.connect_static(i, j, level)?;
        }
    }
    Ok(())
}

/// Compile the navigation network: two target layers (soft then strong
/// WTA), a topographic obstacle layer, crossed motor wiring, a
/// bias-driven speed population inhibited by obstacles, and a gyro
/// population that suppresses both visual layers while turning.
pub fn build_braitenberg(
    cfg: &ChipConfig,
    p: &BraitenbergParams,
) -> Result<(ChipConfig, NetworkLayout, ConnectivityMatrix), AgentError> {
    let layout = NetworkLayout {
        target_wta1: PopRange { start: 0, len: 64 },
        target_wta2: PopRange { start: 64, len: 64 },
        obstacle: PopRange {
            start: 128,
            len: 64,
        },
        motor_l: PopRange {
            start: 192,
            len: 16,
        },
        motor_r: PopRange {
            start: 208,
            len: 16,
        },
        speed: PopRange {
            start: 224,
            len: 16,
        },
        gyro: PopRange { start: 240, len: 8 },
        inhibitory: PopRange { start: 248, len: 8 },
    };
    let pops: Vec<PopRange> = layout.populations().iter().map(|(_, p)| *p).collect();
    if !ranges_disjoint(&pops) || layout.total_neurons() as usize > cfg.n_neurons {
        return Err(AgentError::Capacity);
    }
    let mut conn = ConnectivityMatrix::new(
        cfg.n_neurons,
        cfg.n_static_cols,
        cfg.n_plastic_cols,
        cfg.n_inputs,
    );

    // Sensor routing.
    for c in 0..64u32 {
        conn.route_input_static(ADDR_UPPER + c, layout.target_wta1.start + c as u16, p.dvs_level)?;
        conn.route_input_static(ADDR_LOWER + c, layout.obstacle.start + c as u16, p.dvs_level)?;
    }
    for g in layout.gyro.iter() {
        conn.route_input_static(ADDR_GYRO, g, p.dvs_level)?;
    }

    // First target layer: soft local cooperation only.
    let (a1, s1) = p.wta1_lateral;
    for i in 0..64u16 {
        for j in 0..64u16 {
            if i == j {
                continue;
            }
            let d = (i as f64 - j as f64).abs();
            let lvl = quantize_level(a1 * exp(-d * d / (2.0 * s1 * s1)));
            if lvl != 0 {
                conn.connect_static(
                    layout.target_wta1.start + i,
                    layout.target_wta1.start + j,
                    lvl,
                )?;
            }
        }
    }

    // Selection layer: hard competition through the shared inhibitory pool.
    compile_wta(
        &WtaSpec {
            n_exc: layout.target_wta2.len as usize,
            n_inh: layout.inhibitory.len as usize,
            kernel: p.wta2_kernel,
            exc_to_inh: p.wta2_to_inh,
            inh_to_exc: p.inh_to_wta2,
            self_exc: p.wta2_self,
        },
        WtaLayout {
            exc_start: layout.target_wta2.start,
            inh_start: layout.inhibitory.start,
        },
        &mut conn,
    )
    .map_err(|_| AgentError::Capacity)?;
    for i in 0..64u16 {
        conn.connect_static(
            layout.target_wta1.start + i,
            layout.target_wta2.start + i,
            p.wta1_to_wta2,
        )?;
    }

    // Crossed motor wiring. Columns above the midline are scene-left
    // (high azimuth): a target there drives the right wheel and the robot
    // turns toward it; an obstacle there drives the left wheel and the
    // robot turns away.
    let left_half = |pop: PopRange| PopRange {
        start: pop.start + 32,
        len: 32,
    };
    let right_half = |pop: PopRange| PopRange {
        start: pop.start,
        len: 32,
    };
    all_to_all(&mut conn, left_half(layout.target_wta2), layout.motor_r, p.wta2_to_motor)?;
    all_to_all(&mut conn, right_half(layout.target_wta2), layout.motor_l, p.wta2_to_motor)?;
    all_to_all(&mut conn, left_half(layout.obstacle), layout.motor_l, p.obstacle_to_motor)?;
    all_to_all(&mut conn, right_half(layout.obstacle), layout.motor_r, p.obstacle_to_motor)?;

    // Obstacles on a collision course (central image columns) brake;
    // turning suppresses vision.
    let obstacle_center = PopRange {
        start: layout.obstacle.start + 24,
        len: 16,
    };
    all_to_all(&mut conn, obstacle_center, layout.speed, p.obstacle_to_speed)?;
    all_to_all(&mut conn, layout.gyro, layout.target_wta1, p.gyro_to_visual)?;
    all_to_all(&mut conn, layout.gyro, layout.obstacle, p.gyro_to_visual)?;

    Ok((cfg.clone(), layout, conn))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotorGains {
    /// Meters per spike (v = g_v * per-neuron Speed rate).
    pub g_v: f64,
    /// Radians per spike (omega = g_omega * (rate_R - rate_L)).
    pub g_omega: f64,
}

impl Default for MotorGains {
    fn default() -> Self {
        MotorGains {
            g_v: 0.003,
            g_omega: 0.004,
        }
    }
}

fn pop_rate(events: &[AerEvent], pop: PopRange, from: Micros, window: f64) -> f64 {
    let count = events
        .iter()
        .filter(|e| e.timestamp >= from && pop.contains(e.address as u16))
        .count();
    count as f64 / window / pop.len as f64
}

/// Decode motor commands from the trailing `window` seconds of output
/// spikes: per-neuron population rates drive a linear readout.
pub fn decode_motors(
    events: &[AerEvent],
    window: f64,
    now_us: Micros,
    layout: &NetworkLayout,
    gains: &MotorGains,
) -> (f64, f64) {
    debug_assert!(window > 0.0);
    let from = now_us.saturating_sub((window * 1e6) as Micros);
    let rate_l = pop_rate(events, layout.motor_l, from, window);
    let rate_r = pop_rate(events, layout.motor_r, from, window);
    let rate_s = pop_rate(events, layout.speed, from, window);
    (gains.g_v * rate_s, gains.g_omega * (rate_r - rate_l))
}

// ---------------------------------------------------------------------------
// Navigation trial
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub collision: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trajectory: Vec<TrajectorySample>,
    pub reached: bool,
    pub collisions: u32,
    pub time_to_target: Option<f64>,
    pub energy: f64,
    pub sop_count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialParams {
    pub duration: f64,
    pub sensor_dt: f64,
    pub decode_window: f64,
    pub reach_dist: f64,
    pub start: RobotState,
    pub limits: RobotLimits,
    pub gains: MotorGains,
    pub dvs: DvsModel,
    /// Gyro events per second per rad/s of turn rate.
    pub k_gyro: f64,
    pub net: BraitenbergParams,
}

impl Default for TrialParams {
    fn default() -> Self {
        TrialParams {
            duration: 40.0,
            sensor_dt: 0.01,
            decode_window: 0.1,
            reach_dist: 0.1,
            start: RobotState::at(0.3, 0.5, 0.0),
            limits: RobotLimits::default(),
            gains: MotorGains::default(),
            dvs: DvsModel::default(),
            k_gyro: 600.0,
            net: BraitenbergParams::default(),
        }
    }
}

/// Run one closed navigation loop: camera and gyro events feed the chip,
/// decoded motor rates drive the robot. Terminates on target contact,
/// collision, or timeout; deterministic per (arena, seed).
pub fn run_navigation_trial(
    arena: &Arena,
    seed: u64,
    p: &TrialParams,
) -> Result<TrialResult, AgentError> {
    arena.validate()?;
    if p.duration < 0.0 || p.sensor_dt <= 0.0 || p.decode_window <= 0.0 {
        return Err(AgentError::InvalidParam("trial timing"));
    }
    let cfg = ChipConfig {
        seed,
        ..ChipConfig::default()
    };
    let (cfg, layout, conn) = build_braitenberg(&cfg, &p.net)?;
    let mut chip = Chip::build(cfg, conn)?;
    for n in layout.speed.iter() {
        chip.set_bias(n, p.net.speed_bias);
    }
    let mut rng = SimRng::new(seed).fork(0x6E61_7669);

    let mut robot = p.start;
    let mut trajectory = Vec::new();
    let mut recent: Vec<AerEvent> = Vec::new();
    let mut reached = false;
    let mut collisions = 0u32;
    let mut time_to_target = None;
    let n_steps = floor(p.duration / p.sensor_dt + 0.5) as u64;
    let dt_us = (p.sensor_dt * 1e6) as Micros;

    for k in 0..n_steps {
        let t0 = k as f64 * p.sensor_dt;
        let t0_us = k * dt_us;
        let mut input = dvs_to_aer(&p.dvs, &simulate_dvs(&p.dvs, arena, &robot, t0, p.sensor_dt, &mut rng));
        let n_gyro = rng.poisson(p.k_gyro * robot.omega.abs() * p.sensor_dt);
        for _ in 0..n_gyro {
            input.push(AerEvent::input(t0_us + rng.next_below(dt_us), ADDR_GYRO));
        }
        input.sort_by_key(|e| e.timestamp);
        let out = chip.advance(t0_us + dt_us, &input)?;
        recent.extend(out);
        let horizon = (t0_us + dt_us).saturating_sub((p.decode_window * 1e6) as Micros);
        recent.retain(|e| e.timestamp >= horizon);

        let (v_cmd, omega_cmd) =
            decode_motors(&recent, p.decode_window, t0_us + dt_us, &layout, &p.gains);
        let (next, hit) = robot_step(arena, &robot, v_cmd, omega_cmd, p.sensor_dt, &p.limits);
        robot = next;
        let t1 = t0 + p.sensor_dt;
        trajectory.push(TrajectorySample {
            t: t1,
            x: robot.x,
            y: robot.y,
            theta: robot.theta,
            v: robot.v,
            omega: robot.omega,
            collision: hit,
        });
        if hit {
            collisions += 1;
            break;
        }
        let dx = robot.x - arena.target.x;
        let dy = robot.y - arena.target.y;
        if sqrt(dx * dx + dy * dy) <= p.reach_dist {
            reached = true;
            time_to_target = Some(t1);
            break;
        }
    }

    let report = chip.energy_report();
    Ok(TrialResult {
        trajectory,
        reached,
        collisions,
        time_to_target,
        energy: report.total_energy,
        sop_count: report.sop_count,
    })
}

// ---------------------------------------------------------------------------
// Serial-order sequence network
// ---------------------------------------------------------------------------

/// Input address map for the sequence chip.
pub const ADDR_ORDINAL: u32 = 0; // one address per ordinal group
pub const ADDR_CONTENT: u32 = 8; // one address per content location
pub const ADDR_COS: u32 = 80; // condition-of-satisfaction drive
pub const ADDR_MEM_RESET: u32 = 81; // inhibitory line quenching all memory groups
pub const ADDR_CONTENT_RESET: u32 = 82; // inhibitory line quenching the content field

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceLayout {
    pub ordinal: Vec<PopRange>,
    pub memory: Vec<PopRange>,
    pub content: PopRange,
    pub cos: PopRange,
    pub inhibitory: PopRange,
}

impl SequenceLayout {
    pub fn total_neurons(&self) -> u16 {
        self.ordinal.iter().map(|p| p.len).sum::<u16>()
            + self.memory.iter().map(|p| p.len).sum::<u16>()
            + self.content.len
            + self.cos.len
            + self.inhibitory.len
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceParams {
    pub n_items: usize,
    pub group_size: usize,
    pub n_locations: usize,
    pub ordinal_self: i8,
    pub ordinal_mutual: i8,
    pub ordinal_to_memory: i8,
    pub memory_self: i8,
    pub memory_to_next: i8,
    pub memory_to_own: i8,
    pub cos_to_ordinal: i8,
    pub input_level: i8,
    pub content_kernel: KernelParams,
    pub content_self: i8,
    pub content_to_inh: i8,
    pub inh_to_content: i8,
}

impl Default for SequenceParams {
    fn default() -> Self {
        SequenceParams {
            n_items: 5,
            group_size: 16,
            n_locations: 64,
            ordinal_self: 3,
            ordinal_mutual: -3,
            ordinal_to_memory: 2,
            memory_self: 2,
            memory_to_next: 1,
            memory_to_own: -1,
            cos_to_ordinal: -3,
            input_level: 3,
            content_kernel: KernelParams {
                a_exc: 3.0,
                a_inh: 1.0,
                sigma_exc: 2.5,
                sigma_inh: 24.0,
            },
            content_self: 2,
            content_to_inh: 1,
            inh_to_content: -1,
        }
    }
}

/// Compile the sequence-learning network: ordinal groups chained through
/// memory groups, a content WTA reached through plastic synapses (initial
/// X = 0), and a CoS population that globally inhibits the ordinal groups.
pub fn build_sequence_network(
    cfg: &ChipConfig,
    p: &SequenceParams,
) -> Result<(ChipConfig, SequenceLayout, ConnectivityMatrix), AgentError> {
    let g = p.group_size as u16;
    let n = p.n_items as u16;
    let mut next = 0u16;
    let mut take = |len: u16| {
        let r = PopRange { start: next, len };
        next += len;
        r
    };
    let ordinal: Vec<PopRange> = (0..n).map(|_| take(g)).collect();
    let memory: Vec<PopRange> = (0..n).map(|_| take(g)).collect();
    let content = take(p.n_locations as u16);
    let cos = take(16);
    let inhibitory = take(16);
    if next as usize > cfg.n_neurons {
        return Err(AgentError::Capacity);
    }
    let layout = SequenceLayout {
        ordinal,
        memory,
        content,
        cos,
        inhibitory,
    };

    let mut conn = ConnectivityMatrix::new(
        cfg.n_neurons,
        cfg.n_static_cols,
        cfg.n_plastic_cols,
        cfg.n_inputs,
    );

    // External drive lines.
    for (i, ord) in layout.ordinal.iter().enumerate() {
        for nrn in ord.iter() {
            conn.route_input_static(ADDR_ORDINAL + i as u32, nrn, p.input_level)?;
        }
    }
    for j in 0..p.n_locations as u32 {
        conn.route_input_static(ADDR_CONTENT + j, layout.content.start + j as u16, p.input_level)?;
    }
    for nrn in layout.cos.iter() {
        conn.route_input_static(ADDR_COS, nrn, p.input_level)?;
    }
    for mem in &layout.memory {
        for nrn in mem.iter() {
            conn.route_input_static(ADDR_MEM_RESET, nrn, -3)?;
        }
    }
    for nrn in layout.content.iter() {
        conn.route_input_static(ADDR_CONTENT_RESET, nrn, -3)?;
    }

    // Content field with hard competition.
    compile_wta(
        &WtaSpec {
            n_exc: p.n_locations,
            n_inh: layout.inhibitory.len as usize,
            kernel: p.content_kernel,
            exc_to_inh: p.content_to_inh,
            inh_to_exc: p.inh_to_content,
            self_exc: p.content_self,
        },
        WtaLayout {
            exc_start: layout.content.start,
            inh_start: layout.inhibitory.start,
        },
        &mut conn,
    )
    .map_err(|_| AgentError::Capacity)?;

    for i in 0..p.n_items {
        let ord = layout.ordinal[i];
        let mem = layout.memory[i];
        // Self-sustaining groups.
        all_to_all(&mut conn, ord, ord, p.ordinal_self)?;
        all_to_all(&mut conn, mem, mem, p.memory_self)?;
        // Only one ordinal group active at a time.
        for (j, other) in layout.ordinal.iter().enumerate() {
            if j != i {
                all_to_all(&mut conn, ord, *other, p.ordinal_mutual)?;
            }
        }
        // Position tracking and chaining: memory i latches while ordinal i
        // is active, then biases the transition toward ordinal i+1 (the
        // inhibitory return to ordinal i breaks the tie after CoS).
        all_to_all(&mut conn, ord, mem, p.ordinal_to_memory)?;
        all_to_all(&mut conn, mem, ord, p.memory_to_own)?;
        if i + 1 < p.n_items {
            all_to_all(&mut conn, mem, layout.ordinal[i + 1], p.memory_to_next)?;
        }
        // CoS releases the active position.
        all_to_all(&mut conn, layout.cos, ord, p.cos_to_ordinal)?;
        // Learnable order -> content association.
        for pre in ord.iter() {
            for post in layout.content.iter() {
                conn.connect_plastic(pre, post, 0.0)?;
            }
        }
    }

    Ok((cfg.clone(), layout, conn))
}

// ---------------------------------------------------------------------------
// Sequence experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRun {
    pub t_item: f64,
    pub t_hold: f64,
    /// External Poisson drive rates, events/s on a single address line.
    pub ordinal_rate: f64,
    pub content_rate: f64,
    pub cos_rate: f64,
    pub cos_duration: f64,
    pub replay_timeout: f64,
}

impl Default for SequenceRun {
    fn default() -> Self {
        SequenceRun {
            t_item: 0.5,
            t_hold: 0.3,
            ordinal_rate: 1000.0,
            content_rate: 800.0,
            cos_rate: 3000.0,
            cos_duration: 0.15,
            replay_timeout: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceOutcome {
    /// Mean plastic state of each ordinal group onto each content
    /// location, n_items x n_locations.
    pub x_matrix: Vec<Vec<f64>>,
    /// Per-neuron plastic state, (n_items * group_size) x n_locations;
    /// rows ordered by ordinal group then neuron within the group.
    pub x_neurons: Vec<Vec<f64>>,
    /// Content bump positions detected during replay, in order.
    pub replay: Vec<f64>,
    pub energy: f64,
    pub sop_count: u64,
    /// Full output raster of the run, for plotting.
    pub raster: Vec<AerEvent>,
}

struct SequenceHarness {
    chip: Chip,
    layout: SequenceLayout,
    rng: SimRng,
    raster: Vec<AerEvent>,
    now: Micros,
}

impl SequenceHarness {
    /// Advance `dur` seconds while driving the listed address lines at the
    /// given Poisson rates; returns output events of the slab.
    fn drive(&mut self, dur: f64, lines: &[(u32, f64)]) -> Result<Vec<AerEvent>, AgentError> {
        let dt_us = (dur * 1e6) as Micros;
        if dt_us == 0 {
            return Ok(Vec::new());
        }
        let mut input = Vec::new();
        for &(addr, rate) in lines {
            let n = self.rng.poisson(rate * dur);
            for _ in 0..n {
                input.push(AerEvent::input(self.now + self.rng.next_below(dt_us), addr));
            }
        }
        input.sort_by_key(|e| e.timestamp);
        let out = self.chip.advance(self.now + dt_us, &input)?;
        self.now += dt_us;
        self.raster.extend(out.iter().copied());
        Ok(out)
    }

    fn content_histogram(&self, events: &[AerEvent]) -> Vec<u32> {
        let mut h = vec![0u32; self.layout.content.len as usize];
        for e in events {
            let a = e.address as u16;
            if self.layout.content.contains(a) {
                h[(a - self.layout.content.start) as usize] += 1;
            }
        }
        h
    }
}

// The WTA leaves at most one bump, so the global activity centroid is a
// stable position readout even while the argmax wanders across the
// refractory-saturated bump neurons.
fn activity_centroid(h: &[u32]) -> Option<(f64, u32)> {
    let mass: u32 = h.iter().sum();
    if mass == 0 {
        return None;
    }
    let num: f64 = h.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    Some((num / mass as f64, mass))
}

/// Learn a sequence of content locations, then replay it. Learning drives
/// each ordinal group together with an input bump at its item location;
/// item completion ("done") is signalled by externally generated CoS
/// events. Replay runs without content input: the chain advances whenever
/// the harness sees a stable content bump for `t_hold` and answers with a
/// CoS burst.
pub fn run_sequence_experiment(
    items: &[usize],
    seed: u64,
    p: &SequenceParams,
    run: &SequenceRun,
) -> Result<SequenceOutcome, AgentError> {
    if items.len() > p.n_items {
        return Err(AgentError::ItemOutOfRange);
    }
    if items.iter().any(|&loc| loc >= p.n_locations) {
        return Err(AgentError::ItemOutOfRange);
    }
    let cfg = ChipConfig {
        seed,
        ..ChipConfig::default()
    };
    let (cfg, layout, conn) = build_sequence_network(&cfg, p)?;
    let chip = Chip::build(cfg, conn)?;
    let mut h = SequenceHarness {
        chip,
        layout,
        rng: SimRng::new(seed).fork(0x5EC1),
        raster: Vec::new(),
        now: 0,
    };

    // LEARNING: item k pairs ordinal-group-k activity with a content bump
    // at its location, then a CoS burst releases the group.
    for (k, &loc) in items.iter().enumerate() {
        let mut lines = vec![(ADDR_ORDINAL + k as u32, run.ordinal_rate)];
        // Spread the content drive over a small neighborhood so the bump
        // has the width the field kernel expects.
        for off in -1i64..=1 {
            let j = loc as i64 + off;
            if j >= 0 && (j as usize) < p.n_locations {
                lines.push((ADDR_CONTENT + j as u32, run.content_rate / 3.0));
            }
        }
        h.drive(run.t_item, &lines)?;
        h.drive(
            run.cos_duration,
            &[(ADDR_COS, run.cos_rate), (ADDR_CONTENT_RESET, run.cos_rate)],
        )?;
        // Hold the inhibition through the gap: the memory chain would
        // otherwise re-ignite the released ordinal group and its learned
        // bump, and the next item would associate with the stale location.
        h.drive(
            0.1,
            &[
                (ADDR_COS, run.cos_rate / 3.0),
                (ADDR_CONTENT_RESET, run.cos_rate / 3.0),
            ],
        )?;
    }

    // Freeze the learned association matrix, per neuron and as group means.
    let mut x_neurons = Vec::with_capacity(p.n_items * p.group_size);
    let mut x_matrix = vec![vec![0.0; p.n_locations]; p.n_items];
    for (k, mean_row) in x_matrix.iter_mut().enumerate() {
        let ord = h.layout.ordinal[k];
        for pre in ord.iter() {
            let mut row = vec![0.0; p.n_locations];
            for (j, cell) in row.iter_mut().enumerate() {
                let post = h.layout.content.start + j as u16;
                let col = h
                    .chip
                    .connectivity()
                    .recurrent_targets(pre)
                    .iter()
                    .find_map(|t| match (t.neuron == post, t.column) {
                        (true, crate::chip::Column::Plastic(c)) => Some(c),
                        _ => None,
                    });
                if let Some(c) = col {
                    *cell = h.chip.plastic_x(post, c);
                }
            }
            for (m, x) in mean_row.iter_mut().zip(&row) {
                *m += x / ord.len as f64;
            }
            x_neurons.push(row);
        }
    }

    let mut replay = Vec::new();
    if !items.is_empty() {
        // Quench everything carried over from learning, then kick the
        // first ordinal group to start the chain.
        h.drive(
            0.2,
            &[
                (ADDR_MEM_RESET, run.cos_rate),
                (ADDR_CONTENT_RESET, run.cos_rate),
                (ADDR_COS, run.cos_rate),
            ],
        )?;
        h.drive(0.1, &[])?;
        h.drive(0.2, &[(ADDR_ORDINAL, run.ordinal_rate)])?;

        // REPLAY: watch for a stable bump, answer with CoS.
        let chunk = 0.01;
        let window = 10; // trailing chunks considered by the detector
        let mut hist: Vec<Vec<u32>> = Vec::new();
        let mut stable_for = 0.0;
        let mut stable_at = f64::NAN;
        let mut elapsed = 0.0;
        let timeout = run.replay_timeout * items.len() as f64;
        while replay.len() < items.len() && elapsed < timeout {
            let out = h.drive(chunk, &[])?;
            elapsed += chunk;
            hist.push(h.content_histogram(&out));
            if hist.len() > window {
                hist.remove(0);
            }
            let mut acc = vec![0u32; p.n_locations];
            for row in &hist {
                for (a, b) in acc.iter_mut().zip(row) {
                    *a += b;
                }
            }
            match activity_centroid(&acc) {
                Some((pos, mass)) if mass >= 20 => {
                    if stable_at.is_finite() && (pos - stable_at).abs() <= 1.5 {
                        stable_for += chunk;
                    } else {
                        stable_for = 0.0;
                    }
                    stable_at = pos;
                    if stable_for >= run.t_hold {
                        replay.push(pos);
                        h.drive(
                            run.cos_duration,
                            &[(ADDR_COS, run.cos_rate), (ADDR_CONTENT_RESET, run.cos_rate)],
                        )?;
                        h.drive(0.1, &[])?;
                        elapsed += run.cos_duration + 0.1;
                        hist.clear();
                        stable_for = 0.0;
                        stable_at = f64::NAN;
                    }
                }
                _ => {
                    stable_for = 0.0;
                    stable_at = f64::NAN;
                }
            }
        }
    }

    let report = h.chip.energy_report();
    Ok(SequenceOutcome {
        x_matrix,
        x_neurons,
        replay,
        energy: report.total_energy,
        sop_count: report.sop_count,
        raster: h.raster,
    })
}

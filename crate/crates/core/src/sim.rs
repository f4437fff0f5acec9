//! Arena, robot kinematics and the discrete-time tick loop.
//!
//! A tick runs four phases over robots in ascending id order: protocol
//! emission, channel delivery, protocol reception, motion. Emission, delivery
//! and neighbour detection all read the poses captured at the start of the
//! tick, so no robot sees another robot's same-tick motion. All randomness is
//! drawn from one seeded stream in that fixed order.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelConfig, Delivery, Transmission};
use crate::epidemic::{self, EpidemicParams, EpidemicState};
use crate::error::{ensure, Error, InvalidParam, Result};
use crate::field::{self, FieldParams, FieldState};
use crate::geometry::{normalize_angle, Pose, Vec2};

pub type SimRng = ChaCha8Rng;

/// Rejection-sampling budget per robot during placement.
pub const PLACEMENT_ATTEMPTS: u32 = 10_000;

/// Full placement passes tried before giving up.
pub const PLACEMENT_RESTARTS: u32 = 20;

/// Ticks a gradient follower keeps its escape heading after a collision turn.
const FOLLOW_HOLD_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArenaConfig {
    pub width: f64,
    pub height: f64,
}

impl ArenaConfig {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    /// Swarm area S_sw in mm².
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        ensure(self.width.is_finite() && self.width > 0.0, "arena_width_mm", "must be > 0")?;
        ensure(self.height.is_finite() && self.height > 0.0, "arena_height_mm", "must be > 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Moving,
    Stopped,
    Turning,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Moving => "moving",
            Mode::Stopped => "stopped",
            Mode::Turning => "turning",
        }
    }
}

/// How a robot chooses where to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    /// Random walk with collision avoidance.
    Wander,
    /// Never moves.
    Pinned,
    /// Steers toward the strongest field value it has heard.
    FollowGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub id: usize,
    pub position: Vec2,
    /// Radians in `[0, 2π)`.
    pub heading: f64,
    /// mm/s
    pub speed: f64,
    pub mode: Mode,
    pub behavior: Behavior,
    /// Follower keeps its heading until this tick after a collision turn.
    pub hold_until: u64,
    pub field: FieldState,
    pub epidemic: EpidemicState,
}

impl RobotState {
    pub fn pose(&self) -> Pose {
        Pose {
            id: self.id,
            position: self.position,
            heading: self.heading,
        }
    }
}

/// Robot with a caller-chosen start position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: usize,
    pub position: Vec2,
    /// Radians; drawn at random when absent.
    pub heading: Option<f64>,
    pub behavior: Behavior,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    None,
    VirtualField(FieldParams),
    Epidemic(EpidemicParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub arena: ArenaConfig,
    pub n_robots: usize,
    /// mm/s
    pub robot_speed: f64,
    /// mm
    pub collision_radius: f64,
    /// s
    pub time_step: f64,
    /// s
    pub duration: f64,
    pub rng_seed: u64,
    pub channel: ChannelConfig,
    pub protocol: Protocol,
    pub anchors: Vec<Anchor>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            arena: ArenaConfig::new(1100.0, 1400.0),
            n_robots: 50,
            robot_speed: 30.0,
            collision_radius: 150.0,
            time_step: 0.1,
            duration: 120.0,
            rng_seed: 0,
            channel: ChannelConfig::default(),
            protocol: Protocol::None,
            anchors: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), InvalidParam> {
        self.arena.validate()?;
        ensure(self.n_robots >= 1, "n_robots", "must be >= 1")?;
        ensure(
            self.robot_speed.is_finite() && self.robot_speed >= 0.0,
            "robot_speed_mm_s",
            "must be >= 0",
        )?;
        ensure(
            self.collision_radius.is_finite() && self.collision_radius >= 0.0,
            "collision_radius_mm",
            "must be >= 0",
        )?;
        ensure(
            self.time_step.is_finite() && self.time_step > 0.0,
            "time_step_s",
            "must be > 0",
        )?;
        ensure(
            self.duration.is_finite() && self.duration >= 0.0,
            "duration_s",
            "must be >= 0",
        )?;
        self.channel.validate()?;
        match &self.protocol {
            Protocol::None => {}
            Protocol::VirtualField(p) => p.validate(self.time_step, self.n_robots)?,
            Protocol::Epidemic(p) => p.validate(self.n_robots)?,
        }
        let mut seen = vec![false; self.n_robots];
        for a in &self.anchors {
            ensure(a.id < self.n_robots, "anchors", "anchor id out of range")?;
            ensure(!seen[a.id], "anchors", "duplicate anchor id")?;
            seen[a.id] = true;
            ensure(
                a.position.is_finite() && self.arena.contains(a.position),
                "anchors",
                "anchor outside arena",
            )?;
        }
        Ok(())
    }

    pub fn clock(&self, tick: u64) -> Clock {
        Clock {
            tick,
            time_step: self.time_step,
        }
    }

    /// Number of ticks covering `duration`.
    pub fn total_ticks(&self) -> u64 {
        (self.duration / self.time_step).round() as u64
    }
}

/// Current tick plus the tick length, enough to convert protocol periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub tick: u64,
    pub time_step: f64,
}

impl Clock {
    pub fn seconds(&self) -> f64 {
        self.tick as f64 * self.time_step
    }

    /// Whole ticks in `seconds`, at least one.
    pub fn ticks_for(&self, seconds: f64) -> u64 {
        ((seconds / self.time_step).round() as u64).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub config: SimConfig,
    pub robots: Vec<RobotState>,
    pub tick: u64,
    /// Channel output of the most recent tick, indexed by robot id.
    pub deliveries: Vec<Delivery>,
    rng: SimRng,
}

/// Places all robots and seeds protocol state.
pub fn init_world(config: SimConfig) -> Result<World> {
    config.validate()?;
    let mut rng = SimRng::seed_from_u64(config.rng_seed);
    let n = config.n_robots;
    let arena = config.arena;

    let mut anchors: Vec<Option<&Anchor>> = vec![None; n];
    for a in &config.anchors {
        anchors[a.id] = Some(a);
    }

    let mut robots = Vec::with_capacity(n);
    let mut restarts = 0;
    'placement: loop {
        robots.clear();
        let mut placed: Vec<Vec2> = config.anchors.iter().map(|a| a.position).collect();
        for (id, anchor) in anchors.iter().enumerate() {
            let (position, heading, behavior) = match anchor {
                Some(a) => {
                    let heading = match a.heading {
                        Some(h) => normalize_angle(h),
                        None => rng.gen_range(0.0..TAU),
                    };
                    (a.position, heading, a.behavior)
                }
                None => {
                    let Some(position) = sample_position(&mut rng, &arena, &placed, config.collision_radius) else {
                        // sequential sampling can jam well below the packing limit
                        restarts += 1;
                        if restarts > PLACEMENT_RESTARTS {
                            return Err(Error::PlacementInfeasible {
                                robot: id,
                                attempts: PLACEMENT_ATTEMPTS,
                            });
                        }
                        continue 'placement;
                    };
                    placed.push(position);
                    (position, rng.gen_range(0.0..TAU), Behavior::Wander)
                }
            };
            let (speed, mode) = match behavior {
                Behavior::Pinned => (0.0, Mode::Stopped),
                _ => (config.robot_speed, Mode::Moving),
            };
            robots.push(RobotState {
                id,
                position,
                heading,
                speed,
                mode,
                behavior,
                hold_until: 0,
                field: FieldState::new(id, &config.protocol),
                epidemic: EpidemicState::new(id, &config.protocol, config.channel.n_sectors),
            });
        }
        break;
    }

    Ok(World {
        deliveries: vec![Delivery::default(); n],
        config,
        robots,
        tick: 0,
        rng,
    })
}

fn sample_position(rng: &mut SimRng, arena: &ArenaConfig, placed: &[Vec2], min_gap: f64) -> Option<Vec2> {
    (0..PLACEMENT_ATTEMPTS).find_map(|_| {
        let p = Vec2::new(rng.gen_range(0.0..=arena.width), rng.gen_range(0.0..=arena.height));
        placed.iter().all(|q| q.distance(p) >= min_gap).then_some(p)
    })
}

impl World {
    pub fn clock(&self) -> Clock {
        self.config.clock(self.tick)
    }

    pub fn time_s(&self) -> f64 {
        self.clock().seconds()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.robots.iter().map(RobotState::pose).collect()
    }

    pub fn step(&mut self) {
        let clock = self.clock();
        let poses = self.poses();
        let channel = &self.config.channel;

        let transmissions: Vec<Transmission> = match &self.config.protocol {
            Protocol::None => Vec::new(),
            Protocol::VirtualField(p) => self
                .robots
                .iter()
                .filter_map(|r| field::field_emit(r, p, channel, clock))
                .collect(),
            Protocol::Epidemic(p) => self
                .robots
                .iter()
                .filter_map(|r| epidemic::epidemic_emit(r, p, channel, clock))
                .collect(),
        };
        for t in &transmissions {
            self.robots[t.sender_id].field.last_emit_tick = Some(clock.tick);
        }

        self.deliveries = channel::deliver(&transmissions, &poses, channel, clock.tick);

        match &self.config.protocol {
            Protocol::None => {}
            Protocol::VirtualField(p) => {
                for (robot, d) in self.robots.iter_mut().zip(&self.deliveries) {
                    field::field_receive(robot, &d.receptions, p);
                    field::field_decay(&mut robot.field, p, clock);
                }
            }
            Protocol::Epidemic(p) => {
                for (robot, d) in self.robots.iter_mut().zip(&self.deliveries) {
                    epidemic::epidemic_receive(robot, &d.receptions, p, clock);
                }
            }
        }

        let radius = self.config.collision_radius;
        let window = match &self.config.protocol {
            Protocol::VirtualField(p) => p.gradient_window,
            _ => FieldParams::default().gradient_window,
        };
        let hold_ticks = clock.ticks_for(FOLLOW_HOLD_S);
        for i in 0..self.robots.len() {
            let here = poses[i].position;
            let neighbors: Vec<Vec2> = poses
                .iter()
                .filter(|p| p.id != i && p.position.distance(here) <= radius)
                .map(|p| p.position)
                .collect();
            let robot = &mut self.robots[i];
            match robot.behavior {
                Behavior::Pinned => continue,
                Behavior::FollowGradient if clock.tick >= robot.hold_until => {
                    if let Some(s) = field::field_gradient_step_window(&robot.field, window, channel) {
                        robot.heading = s.heading;
                    }
                }
                _ => {}
            }
            if robot.mode == Mode::Stopped {
                match robot.epidemic.wait_until {
                    Some(until) if clock.tick < until => continue,
                    _ => {
                        robot.epidemic.resume();
                        robot.heading = self.rng.gen_range(0.0..TAU);
                    }
                }
            }
            move_robot(
                robot,
                &self.config.arena,
                &neighbors,
                radius,
                clock.time_step,
                &mut self.rng,
            );
            if robot.behavior == Behavior::FollowGradient && robot.mode == Mode::Turning {
                robot.hold_until = clock.tick + hold_ticks;
            }
        }

        self.tick += 1;
    }

    /// Steps until the configured duration is reached.
    pub fn run(&mut self) {
        let total = self.config.total_ticks();
        while self.tick < total {
            self.step();
        }
    }
}

/// One motion update. A robot with a wall or neighbour ahead of it inside
/// `collision_radius` stops and turns by a random angle in [90°, 270°];
/// otherwise it advances `speed · dt` along its heading, clamped to the arena
/// with the heading mirrored at any wall it touches.
pub fn move_robot(
    robot: &mut RobotState,
    arena: &ArenaConfig,
    neighbors: &[Vec2],
    collision_radius: f64,
    dt: f64,
    rng: &mut impl Rng,
) {
    let pos = robot.position;
    let dir = Vec2::from_angle(robot.heading);
    let neighbor_ahead = neighbors.iter().any(|&n| {
        let d = n - pos;
        d.length() <= collision_radius && d.dot(dir) > 0.0
    });
    let wall_ahead = (pos.x <= collision_radius && dir.x < 0.0)
        || (arena.width - pos.x <= collision_radius && dir.x > 0.0)
        || (pos.y <= collision_radius && dir.y < 0.0)
        || (arena.height - pos.y <= collision_radius && dir.y > 0.0);

    if neighbor_ahead || wall_ahead {
        let turn = rng.gen_range(FRAC_PI_2..=3.0 * FRAC_PI_2);
        robot.heading = normalize_angle(robot.heading + turn);
        robot.mode = Mode::Turning;
        return;
    }

    let mut next = pos + dir * (robot.speed * dt);
    let mut heading = robot.heading;
    if next.x < 0.0 || next.x > arena.width {
        next.x = next.x.clamp(0.0, arena.width);
        heading = PI - heading;
    }
    if next.y < 0.0 || next.y > arena.height {
        next.y = next.y.clamp(0.0, arena.height);
        heading = -heading;
    }
    robot.position = next;
    robot.heading = normalize_angle(heading);
    robot.mode = Mode::Moving;
}

//! Infection-style spreading of a tiny unmodified message.
//!
//! Seeds broadcast their reference number once per emit period. Any robot that
//! hears it becomes permanently infected, stops, and waits for a time that
//! grows with the number of its sectors that heard a neighbour during the
//! last period (its cluster degree).

use crate::channel::{ChannelConfig, Reception, Transmission};
use crate::error::{ensure, Error, InvalidParam};
use crate::sim::{Clock, Mode, Protocol, RobotState, World};

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicParams {
    /// s
    pub emit_period: f64,
    /// Waiting time per unit of cluster degree, s.
    pub base_wait: f64,
    /// Infected non-seeds rebroadcast the message.
    pub forwarding: bool,
    pub payload_bits: u8,
    /// Seed `seeds[i]` carries reference `i + 1`.
    pub seeds: Vec<usize>,
    /// Robots without a message to send emit an empty presence ping on their
    /// slot so neighbours can count them.
    pub presence_beacon: bool,
}

impl Default for EpidemicParams {
    fn default() -> Self {
        Self {
            emit_period: 5.0,
            base_wait: 3.0,
            forwarding: false,
            payload_bits: 1,
            seeds: vec![0],
            presence_beacon: false,
        }
    }
}

impl EpidemicParams {
    pub fn validate(&self, n_robots: usize) -> Result<(), InvalidParam> {
        ensure(
            self.emit_period.is_finite() && self.emit_period > 0.0,
            "emit_period_s",
            "must be > 0",
        )?;
        ensure(
            self.base_wait.is_finite() && self.base_wait >= 0.0,
            "base_wait_s",
            "must be >= 0",
        )?;
        ensure(
            (1..=16).contains(&self.payload_bits),
            "payload_bits",
            "must be in 1..=16",
        )?;
        ensure(!self.seeds.is_empty(), "seeds", "need at least one seed")?;
        ensure(
            self.seeds.iter().all(|&s| s < n_robots),
            "seeds",
            "seed id out of range",
        )?;
        let max_ref = (1u32 << self.payload_bits) - 1;
        ensure(
            self.seeds.len() as u32 <= max_ref,
            "payload_bits",
            "too narrow for the number of seeds",
        )
    }

    /// Linear waiting-time feedback, in seconds.
    pub fn wait_time(&self, cluster_degree: usize) -> f64 {
        self.base_wait * cluster_degree as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Susceptible,
    Infected { tick: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    pub status: Status,
    pub is_seed: bool,
    /// Reference carried by the message; 1 for the original seed, 0 while susceptible.
    pub seed_ref: u16,
    pub cluster_degree: usize,
    pub wait_until: Option<u64>,
    /// Last tick each receiver sector heard anything.
    pub last_heard: Vec<Option<u64>>,
}

impl EpidemicState {
    pub fn new(id: usize, protocol: &Protocol, n_sectors: usize) -> Self {
        let seed_index = match protocol {
            Protocol::Epidemic(p) => p.seeds.iter().position(|&s| s == id),
            _ => None,
        };
        Self {
            status: if seed_index.is_some() {
                Status::Infected { tick: 0 }
            } else {
                Status::Susceptible
            },
            is_seed: seed_index.is_some(),
            seed_ref: seed_index.map_or(0, |i| i as u16 + 1),
            cluster_degree: 0,
            wait_until: None,
            last_heard: vec![None; n_sectors],
        }
    }

    pub fn is_infected(&self) -> bool {
        matches!(self.status, Status::Infected { .. })
    }

    /// Ends a stop: the robot leaves its cluster.
    pub fn resume(&mut self) {
        self.cluster_degree = 0;
        self.wait_until = None;
    }
}

/// Seeds emit on ticks congruent to their id modulo the period; infected
/// forwarders emit one full period after their infection and every period
/// after that. With presence beacons on, every other robot sends an empty
/// ping on its id slot.
pub fn epidemic_emit(
    robot: &RobotState,
    params: &EpidemicParams,
    channel: &ChannelConfig,
    clock: Clock,
) -> Option<Transmission> {
    let period = clock.ticks_for(params.emit_period);
    let tick = clock.tick;
    let id_slot = tick % period == robot.id as u64 % period;
    let state = &robot.epidemic;

    let message = match state.status {
        Status::Infected { .. } if state.is_seed => id_slot,
        Status::Infected { tick: infected } if params.forwarding => {
            tick > infected && (tick - infected).is_multiple_of(period)
        }
        _ => false,
    };
    let payload = if message {
        state.seed_ref.max(1)
    } else if params.presence_beacon && id_slot {
        0
    } else {
        return None;
    };
    let t = Transmission::broadcast(robot.pose(), channel, payload, params.payload_bits);
    debug_assert!(t.is_ok(), "seed reference exceeds payload width");
    t.ok()
}

/// Applies one tick of receptions. A non-empty payload infects, stops the
/// robot and restarts its waiting time from the current cluster degree.
pub fn epidemic_receive(
    robot: &mut RobotState,
    receptions: &[Reception],
    params: &EpidemicParams,
    clock: Clock,
) {
    let tick = clock.tick;
    let state = &mut robot.epidemic;
    for r in receptions {
        if let Some(slot) = state.last_heard.get_mut(r.sector) {
            *slot = Some(tick);
        }
    }
    let Some(best_ref) = receptions.iter().map(|r| r.payload).filter(|&p| p > 0).min() else {
        return;
    };

    match state.status {
        Status::Susceptible => {
            state.status = Status::Infected { tick };
            state.seed_ref = best_ref;
        }
        Status::Infected { .. } if !state.is_seed => {
            state.seed_ref = state.seed_ref.min(best_ref);
        }
        Status::Infected { .. } => {}
    }

    let window = clock.ticks_for(params.emit_period);
    state.cluster_degree = state
        .last_heard
        .iter()
        .filter(|h| h.is_some_and(|t| tick - t < window))
        .count();
    let wait = (params.wait_time(state.cluster_degree) / clock.time_step).round() as u64;
    state.wait_until = Some(tick + wait);
    robot.mode = Mode::Stopped;
}

pub fn infected_count(world: &World) -> usize {
    world.robots.iter().filter(|r| r.epidemic.is_infected()).count()
}

/// Seconds until `trace` (infected count per tick) first reaches `n_robots`.
pub fn spread_time(trace: &[usize], n_robots: usize, time_step: f64) -> Result<f64, Error> {
    match trace.iter().position(|&c| c >= n_robots) {
        Some(tick) => Ok(tick as f64 * time_step),
        None => Err(Error::NotFullySpread {
            infected: trace.last().copied().unwrap_or(0),
            total: n_robots,
            elapsed_s: trace.len().saturating_sub(1) as f64 * time_step,
        }),
    }
}

/// Infected counts at each emission-period boundary.
pub fn generation_counts(trace: &[usize], period_ticks: usize) -> Vec<usize> {
    trace.iter().step_by(period_ticks.max(1)).copied().collect()
}

/// Generation-over-generation growth ratios, up to and including the first
/// generation that exceeds half the swarm.
pub fn early_growth_ratios(generations: &[usize], n_robots: usize) -> Vec<f64> {
    let mut ratios = Vec::new();
    for w in generations.windows(2) {
        if 2 * w[0] > n_robots {
            break;
        }
        ratios.push(w[1] as f64 / w[0].max(1) as f64);
    }
    ratios
}

/// A contiguous stretch of ticks during which one robot held a non-zero
/// cluster degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterEpisode {
    pub robot: usize,
    pub start_tick: u64,
    pub ticks: u64,
    pub max_degree: usize,
}

/// Collects [`ClusterEpisode`]s from per-tick observations.
#[derive(Debug, Clone, Default)]
pub struct ClusterTracker {
    open: Vec<Option<ClusterEpisode>>,
    pub finished: Vec<ClusterEpisode>,
}

impl ClusterTracker {
    pub fn new(n_robots: usize) -> Self {
        Self {
            open: vec![None; n_robots],
            finished: Vec::new(),
        }
    }

    /// Records the state after a tick. Seeds are landmarks, not cluster members.
    pub fn observe(&mut self, world: &World) {
        let tick = world.tick;
        for r in &world.robots {
            if r.epidemic.is_seed {
                continue;
            }
            let degree = r.epidemic.cluster_degree;
            let slot = &mut self.open[r.id];
            match (slot.as_mut(), degree) {
                (Some(ep), d) if d > 0 => {
                    ep.ticks += 1;
                    ep.max_degree = ep.max_degree.max(d);
                }
                (Some(_), _) => self.finished.push(slot.take().unwrap()),
                (None, d) if d > 0 => {
                    *slot = Some(ClusterEpisode {
                        robot: r.id,
                        start_tick: tick,
                        ticks: 1,
                        max_degree: d,
                    })
                }
                (None, _) => {}
            }
        }
    }

    /// All episodes, including the ones still open at the end of the run.
    pub fn episodes(&self) -> Vec<ClusterEpisode> {
        let mut all = self.finished.clone();
        all.extend(self.open.iter().flatten().copied());
        all.sort_by_key(|e| (e.start_tick, e.robot));
        all
    }
}

/// Mean episode length in ticks for episodes whose peak degree is in `degrees`.
pub fn mean_lifetime(episodes: &[ClusterEpisode], degrees: std::ops::RangeInclusive<usize>) -> Option<f64> {
    let selected: Vec<u64> = episodes
        .iter()
        .filter(|e| degrees.contains(&e.max_degree))
        .map(|e| e.ticks)
        .collect();
    if selected.is_empty() {
        None
    } else {
        Some(selected.iter().sum::<u64>() as f64 / selected.len() as f64)
    }
}

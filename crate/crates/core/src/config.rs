//! Run configuration files.
//!
//! A config is one flat JSON object. Only `scenario` is required; every other
//! key falls back to a per-scenario default. Unknown and duplicate keys are
//! rejected. Lengths are mm, times s, rates Hz, angles degrees.

use std::path::PathBuf;

use serde::Deserialize;

use crate::analytic::{LogBase, SweepGrid};
use crate::channel::ChannelConfig;
use crate::epidemic::EpidemicParams;
use crate::error::{ensure, Error, InvalidParam, Result};
use crate::field::{FieldParams, DEFAULT_AMPLIFICATION_THRESHOLD};
use crate::geometry::Vec2;
use crate::sim::{Anchor, ArenaConfig, Behavior, Protocol, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    VirtualField,
    EpidemicCluster,
    EpidemicSpread,
    SweepAnalytic,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::VirtualField => "virtual-field",
            Scenario::EpidemicCluster => "epidemic-cluster",
            Scenario::EpidemicSpread => "epidemic-spread",
            Scenario::SweepAnalytic => "sweep-analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum LogBaseKey {
    Two,
    Contacts,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Scenario>,
    seed: Option<u64>,

    n_robots: Option<usize>,
    arena_width_mm: Option<f64>,
    arena_height_mm: Option<f64>,
    robot_speed_mm_s: Option<f64>,
    collision_radius_mm: Option<f64>,
    time_step_s: Option<f64>,
    duration_s: Option<f64>,

    comm_radius_mm: Option<f64>,
    n_sectors: Option<usize>,
    sector_width_deg: Option<f64>,
    intensity_threshold: Option<f64>,
    half_duplex: Option<bool>,

    source_value: Option<u16>,
    emit_rate_hz: Option<f64>,
    amplification: Option<bool>,
    amplification_threshold: Option<f64>,
    history_capacity: Option<usize>,
    gradient_window: Option<usize>,
    evaporation_rate_hz: Option<f64>,
    source_x_mm: Option<f64>,
    source_y_mm: Option<f64>,

    emit_period_s: Option<f64>,
    base_wait_s: Option<f64>,
    forwarding: Option<bool>,
    payload_bits: Option<u8>,
    seeds: Option<Vec<usize>>,
    presence_beacon: Option<bool>,
    seed_x_mm: Option<f64>,
    seed_y_mm: Option<f64>,

    sweep_rc_mm: Option<Vec<f64>>,
    sweep_speed_mm_s: Option<Vec<f64>>,
    sweep_n_robots: Option<Vec<u32>>,
    sweep_area_mm2: Option<f64>,
    log_base: Option<LogBaseKey>,
    contact_window_s: Option<f64>,

    snapshot_period_s: Option<f64>,
    trace_every: Option<u64>,
    replications: Option<usize>,
    output_dir: Option<PathBuf>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub sim: SimConfig,
    pub sweep: SweepGrid,
    /// Seconds between heatmap snapshots; 0 disables them.
    pub snapshot_period: f64,
    /// Trace sampling decimation in ticks.
    pub trace_every: u64,
    /// Seeds used by `sweep` are `seed, seed+1, …`.
    pub replications: usize,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for `scenario` with the given seed.
    pub fn defaults(scenario: Scenario, seed: u64) -> Self {
        resolve(RawConfig {
            scenario: Some(scenario),
            seed: Some(seed),
            ..RawConfig::default()
        })
        .expect("built-in defaults are valid")
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        self.sim.validate()?;
        ensure(
            self.snapshot_period.is_finite() && self.snapshot_period >= 0.0,
            "snapshot_period_s",
            "must be >= 0",
        )?;
        let ratio = self.snapshot_period / self.sim.time_step;
        ensure(
            (ratio - ratio.round()).abs() < 1e-6,
            "snapshot_period_s",
            "must be a multiple of time_step_s",
        )?;
        ensure(self.trace_every >= 1, "trace_every", "must be >= 1")?;
        ensure(self.replications >= 1, "replications", "must be >= 1")?;
        if self.scenario == Scenario::SweepAnalytic {
            ensure(!self.sweep.is_empty(), "sweep_rc_mm", "sweep grid is empty")?;
        }
        Ok(())
    }

    pub fn snapshot_every_ticks(&self) -> Option<u64> {
        (self.snapshot_period > 0.0)
            .then(|| (self.snapshot_period / self.sim.time_step).round() as u64)
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let scenario = raw
        .scenario
        .ok_or_else(|| Error::Config("missing required field `scenario`".into()))?;

    struct Defaults {
        n: usize,
        arena: (f64, f64),
        collision: f64,
        duration: f64,
        comm_radius: f64,
        snapshot: f64,
    }
    let d = match scenario {
        Scenario::VirtualField => Defaults {
            n: 50,
            arena: (1100.0, 1400.0),
            collision: 150.0,
            duration: 120.0,
            comm_radius: 250.0,
            snapshot: 15.0,
        },
        Scenario::EpidemicCluster => Defaults {
            n: 11,
            arena: (1000.0, 1000.0),
            collision: 50.0,
            duration: 80.0,
            comm_radius: 250.0,
            snapshot: 10.0,
        },
        Scenario::EpidemicSpread => Defaults {
            n: 20,
            arena: (1000.0, 1000.0),
            collision: 30.0,
            duration: 600.0,
            comm_radius: 100.0,
            snapshot: 0.0,
        },
        Scenario::SweepAnalytic => Defaults {
            n: 1,
            arena: (1000.0, 1000.0),
            collision: 0.0,
            duration: 0.0,
            comm_radius: 100.0,
            snapshot: 0.0,
        },
    };

    let arena = ArenaConfig::new(
        raw.arena_width_mm.unwrap_or(d.arena.0),
        raw.arena_height_mm.unwrap_or(d.arena.1),
    );
    let n_robots = raw.n_robots.unwrap_or(d.n);

    let n_sectors = raw.n_sectors.unwrap_or(6);
    if let Some(w) = raw.sector_width_deg {
        let total = w * n_sectors as f64;
        if (total - 360.0).abs() > 1e-9 {
            return Err(InvalidParam::new(
                "sector_width_deg",
                format!("n_sectors × sector_width_deg must be 360, got {total}"),
            )
            .into());
        }
    }
    let channel = ChannelConfig {
        comm_radius: raw.comm_radius_mm.unwrap_or(d.comm_radius),
        n_sectors,
        intensity_threshold: raw.intensity_threshold.unwrap_or(0.01),
        half_duplex: raw.half_duplex.unwrap_or(true),
    };

    let mut anchors = Vec::new();
    let protocol = match scenario {
        Scenario::VirtualField => {
            let enabled = raw.amplification.unwrap_or(true);
            let params = FieldParams {
                source_value: raw.source_value.unwrap_or(100),
                emit_rate_hz: raw.emit_rate_hz.unwrap_or(5.0),
                amplification_threshold: enabled
                    .then(|| raw.amplification_threshold.unwrap_or(DEFAULT_AMPLIFICATION_THRESHOLD)),
                history_capacity: raw.history_capacity.unwrap_or(64),
                gradient_window: raw.gradient_window.unwrap_or(10),
                evaporation_rate_hz: raw.evaporation_rate_hz.unwrap_or(0.0),
                ..FieldParams::default()
            };
            // source pinned in the lower-right corner
            anchors.push(Anchor {
                id: params.sources[0],
                position: Vec2::new(
                    raw.source_x_mm.unwrap_or(arena.width - 50.0),
                    raw.source_y_mm.unwrap_or(50.0),
                ),
                heading: None,
                behavior: Behavior::Pinned,
            });
            Protocol::VirtualField(params)
        }
        Scenario::EpidemicCluster | Scenario::EpidemicSpread => {
            let cluster = scenario == Scenario::EpidemicCluster;
            let seeds = raw.seeds.clone().unwrap_or_else(|| vec![0]);
            let params = EpidemicParams {
                emit_period: raw.emit_period_s.unwrap_or(5.0),
                base_wait: raw.base_wait_s.unwrap_or(3.0),
                forwarding: raw.forwarding.unwrap_or(!cluster),
                payload_bits: raw
                    .payload_bits
                    .unwrap_or(if seeds.len() > 1 { 4 } else { 1 }),
                presence_beacon: raw.presence_beacon.unwrap_or(cluster),
                seeds,
            };
            if cluster || raw.seed_x_mm.is_some() || raw.seed_y_mm.is_some() {
                let c = arena.center();
                anchors.push(Anchor {
                    id: params.seeds.first().copied().unwrap_or(0),
                    position: Vec2::new(raw.seed_x_mm.unwrap_or(c.x), raw.seed_y_mm.unwrap_or(c.y)),
                    heading: None,
                    behavior: Behavior::Pinned,
                });
            }
            Protocol::Epidemic(params)
        }
        Scenario::SweepAnalytic => Protocol::None,
    };

    let sim = SimConfig {
        arena,
        n_robots,
        robot_speed: raw.robot_speed_mm_s.unwrap_or(30.0),
        collision_radius: raw.collision_radius_mm.unwrap_or(d.collision),
        time_step: raw.time_step_s.unwrap_or(0.1),
        duration: raw.duration_s.unwrap_or(d.duration),
        rng_seed: raw.seed.unwrap_or(0),
        channel,
        protocol,
        anchors,
    };

    let defaults = SweepGrid::default();
    let sweep = SweepGrid {
        comm_radius_mm: raw.sweep_rc_mm.unwrap_or(defaults.comm_radius_mm),
        speed_mm_s: raw.sweep_speed_mm_s.unwrap_or(defaults.speed_mm_s),
        n_robots: raw.sweep_n_robots.unwrap_or(defaults.n_robots),
        area_mm2: raw.sweep_area_mm2.unwrap_or(arena.area()),
        log_base: match raw.log_base {
            Some(LogBaseKey::Contacts) => LogBase::Contacts,
            _ => LogBase::Two,
        },
        window_s: raw.contact_window_s.unwrap_or(defaults.window_s),
    };

    let config = RunConfig {
        scenario,
        sim,
        sweep,
        snapshot_period: raw.snapshot_period_s.unwrap_or(d.snapshot),
        trace_every: raw.trace_every.unwrap_or(1),
        replications: raw.replications.unwrap_or(20),
        output_dir: raw.output_dir,
    };
    config.validate()?;
    Ok(config)
}

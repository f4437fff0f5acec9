//! Virtual gradient field.
//!
//! Sources hold a fixed value V₀. Every robot rebroadcasts its value minus one
//! at a high rate; receivers keep the largest value heard, adding one back
//! when the sender is very close. Values therefore fall off by one per hop
//! from the source, and the stored reception history lets a robot steer up
//! the gradient.

use std::collections::VecDeque;

use crate::channel::{sector_center, ChannelConfig, Reception, Transmission};
use crate::error::{ensure, InvalidParam};
use crate::geometry::Vec2;
use crate::sim::{ArenaConfig, Behavior, Clock, Protocol, RobotState};

pub const FIELD_PAYLOAD_BITS: u8 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldParams {
    /// V₀
    pub source_value: u16,
    pub emit_rate_hz: f64,
    /// Receptions at or above this intensity are amplified; `None` disables.
    pub amplification_threshold: Option<f64>,
    pub decrement: u16,
    pub amplify_add: u16,
    pub history_capacity: usize,
    /// Receptions considered by [`field_gradient_step`].
    pub gradient_window: usize,
    /// Value units lost per second by non-sources. Zero keeps the field static.
    pub evaporation_rate_hz: f64,
    pub sources: Vec<usize>,
}

/// Default amplification threshold: intensity at 0.3·R_c, which is
/// `(1 - 0.3)^2` for any radius.
pub const DEFAULT_AMPLIFICATION_THRESHOLD: f64 = 0.49;

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            source_value: 100,
            emit_rate_hz: 5.0,
            amplification_threshold: Some(DEFAULT_AMPLIFICATION_THRESHOLD),
            decrement: 1,
            amplify_add: 1,
            history_capacity: 64,
            gradient_window: 10,
            evaporation_rate_hz: 0.0,
            sources: vec![0],
        }
    }
}

impl FieldParams {
    pub fn validate(&self, time_step: f64, n_robots: usize) -> Result<(), InvalidParam> {
        ensure(self.source_value > 0, "source_value", "must be > 0")?;
        ensure(
            self.emit_rate_hz > 0.0 && self.emit_rate_hz * time_step <= 1.0 + 1e-9,
            "emit_rate_hz",
            "must be > 0 and at most one emission per tick",
        )?;
        ensure(self.history_capacity > 0, "history_capacity", "must be > 0")?;
        ensure(self.gradient_window > 0, "gradient_window", "must be > 0")?;
        ensure(
            self.evaporation_rate_hz.is_finite() && self.evaporation_rate_hz >= 0.0,
            "evaporation_rate_hz",
            "must be >= 0",
        )?;
        ensure(!self.sources.is_empty(), "sources", "need at least one source")?;
        ensure(
            self.sources.iter().all(|&s| s < n_robots),
            "sources",
            "source id out of range",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub tick: u64,
    pub value: u16,
    pub sector: usize,
    pub intensity: f64,
    /// Receiver heading at reception time, so old sectors can be re-anchored.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub current_value: u16,
    pub is_source: bool,
    pub source_value: u16,
    pub last_emit_tick: Option<u64>,
    pub history: VecDeque<HistoryEntry>,
    pub capacity: usize,
    /// Number of times an amplified value was adopted.
    pub amplifications: u32,
}

impl FieldState {
    pub fn new(id: usize, protocol: &Protocol) -> Self {
        let (is_source, v0, capacity) = match protocol {
            Protocol::VirtualField(p) => (p.sources.contains(&id), p.source_value, p.history_capacity),
            _ => (false, 0, FieldParams::default().history_capacity),
        };
        Self {
            current_value: if is_source { v0 } else { 0 },
            is_source,
            source_value: v0,
            last_emit_tick: None,
            history: VecDeque::with_capacity(capacity),
            capacity,
            amplifications: 0,
        }
    }

    fn record(&mut self, entry: HistoryEntry) {
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(entry);
    }
}

/// Ticks between emissions for `rate_hz`.
pub fn emit_period_ticks(rate_hz: f64, clock: Clock) -> u64 {
    ((1.0 / (rate_hz * clock.time_step)).round() as u64).max(1)
}

/// Robot `id` emits on ticks congruent to `id` modulo the emission period.
/// Gradient followers only listen, so half-duplex never hides a relay from them.
pub fn field_emit(
    robot: &RobotState,
    params: &FieldParams,
    channel: &ChannelConfig,
    clock: Clock,
) -> Option<Transmission> {
    if robot.behavior == Behavior::FollowGradient {
        return None;
    }
    let period = emit_period_ticks(params.emit_rate_hz, clock);
    if clock.tick % period != robot.id as u64 % period {
        return None;
    }
    let value = robot.field.current_value;
    if value == 0 {
        return None;
    }
    let payload = value.saturating_sub(params.decrement);
    Transmission::broadcast(robot.pose(), channel, payload, FIELD_PAYLOAD_BITS).ok()
}

/// Folds one tick of receptions into the robot's field state.
pub fn field_receive(robot: &mut RobotState, receptions: &[Reception], params: &FieldParams) {
    let heading = robot.heading;
    let state = &mut robot.field;
    for r in receptions {
        state.record(HistoryEntry {
            tick: r.tick,
            value: r.payload,
            sector: r.sector,
            intensity: r.intensity,
            heading,
        });
    }
    if state.is_source {
        return;
    }
    let Some(best) = receptions
        .iter()
        .max_by(|a, b| a.payload.cmp(&b.payload).then(a.intensity.total_cmp(&b.intensity)))
    else {
        return;
    };
    let amplified = params
        .amplification_threshold
        .is_some_and(|t| best.intensity >= t);
    let candidate = if amplified {
        best.payload.saturating_add(params.amplify_add)
    } else {
        best.payload
    };
    if candidate > state.current_value {
        state.current_value = candidate;
        if amplified {
            state.amplifications += 1;
        }
    }
}

/// Evaporation: non-sources lose one unit every `1 / rate` seconds.
pub fn field_decay(state: &mut FieldState, params: &FieldParams, clock: Clock) {
    if state.is_source || params.evaporation_rate_hz <= 0.0 || clock.tick == 0 {
        return;
    }
    let period = emit_period_ticks(params.evaporation_rate_hz, clock);
    if clock.tick.is_multiple_of(period) {
        state.current_value = state.current_value.saturating_sub(1);
    }
}

/// Desired travel direction extracted from the reception history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steering {
    /// Receiver sector the best reception arrived in.
    pub sector: usize,
    /// Absolute heading of that sector's centre at reception time.
    pub heading: f64,
}

/// Picks the sector whose best reception among the last `gradient_window`
/// entries has the highest value, breaking ties by intensity and then by
/// lower sector index.
pub fn field_gradient_step_window(
    state: &FieldState,
    window: usize,
    channel: &ChannelConfig,
) -> Option<Steering> {
    let start = state.history.len().saturating_sub(window);
    let mut best: Option<&HistoryEntry> = None;
    for e in state.history.range(start..) {
        let better = match best {
            None => true,
            Some(b) => (e.value, e.intensity, std::cmp::Reverse(e.sector))
                .partial_cmp(&(b.value, b.intensity, std::cmp::Reverse(b.sector)))
                .is_some_and(|o| o.is_gt()),
        };
        if better {
            best = Some(e);
        }
    }
    best.map(|e| Steering {
        sector: e.sector,
        heading: sector_center(e.heading, e.sector, channel),
    })
}

pub fn field_gradient_step(state: &FieldState, channel: &ChannelConfig) -> Option<Steering> {
    field_gradient_step_window(state, FieldParams::default().gradient_window, channel)
}

/// Robot values rasterised onto the arena. Row 0 is the top (largest y).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heatmap {
    pub cols: usize,
    pub rows: usize,
    pub values: Vec<u32>,
}

impl Heatmap {
    pub fn zeros(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            rows,
            values: vec![0; cols * rows],
        }
    }

    pub fn for_arena(arena: &ArenaConfig, cell_mm: f64) -> Self {
        let cols = (arena.width / cell_mm).ceil().max(1.0) as usize;
        let rows = (arena.height / cell_mm).ceil().max(1.0) as usize;
        Self::zeros(cols, rows)
    }

    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.values[row * self.cols + col]
    }

    /// Writes `value` into the cell containing `p`, keeping the larger value
    /// when several robots share a cell.
    pub fn stamp(&mut self, p: Vec2, cell_mm: f64, value: u32) {
        let col = ((p.x / cell_mm).floor().max(0.0) as usize).min(self.cols - 1);
        let row_from_bottom = ((p.y / cell_mm).floor().max(0.0) as usize).min(self.rows - 1);
        let row = self.rows - 1 - row_from_bottom;
        let cell = &mut self.values[row * self.cols + col];
        *cell = (*cell).max(value);
    }

    pub fn nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0).count()
    }

    /// Scales values so that `full_scale` maps to 255.
    pub fn normalized(&self, full_scale: u32) -> Vec<u8> {
        let scale = full_scale.max(1) as f64;
        self.values
            .iter()
            .map(|&v| ((v as f64 * 255.0 / scale).round()).min(255.0) as u8)
            .collect()
    }
}

pub const SNAPSHOT_CELL_MM: f64 = 10.0;

/// Stamps each robot's stored field value into a 10 mm grid.
pub fn field_snapshot(robots: &[RobotState], arena: &ArenaConfig) -> Heatmap {
    let mut map = Heatmap::for_arena(arena, SNAPSHOT_CELL_MM);
    for r in robots {
        map.stamp(r.position, SNAPSHOT_CELL_MM, u32::from(r.field.current_value));
    }
    map
}

/// Normalisation bound used when exporting field snapshots: V₀ plus history capacity.
pub fn snapshot_full_scale(params: &FieldParams) -> u32 {
    u32::from(params.source_value) + params.history_capacity as u32
}

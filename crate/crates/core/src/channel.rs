//! Directional, range-limited, half-duplex sector channel.
//!
//! Every robot carries `n_sectors` equal angular sectors for both emission and
//! reception, sector 0 centred on its heading and numbered counter-clockwise.
//! Received signal strength falls off with distance and doubles as a distance
//! estimate; simultaneous arrivals in one receiver sector collide.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, InvalidParam};
use crate::geometry::{normalize_angle, Pose, Vec2};

pub const MAX_SECTORS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Communication radius R_c in mm.
    pub comm_radius: f64,
    pub n_sectors: usize,
    /// Receptions at or below this intensity are lost.
    pub intensity_threshold: f64,
    pub half_duplex: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            comm_radius: 250.0,
            n_sectors: 6,
            intensity_threshold: 0.01,
            half_duplex: true,
        }
    }
}

impl ChannelConfig {
    pub fn sector_width(&self) -> f64 {
        TAU / self.n_sectors as f64
    }

    /// Largest distance at which a reception still clears the threshold.
    pub fn effective_range(&self) -> f64 {
        estimate_distance(self.intensity_threshold, self)
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        ensure(
            self.comm_radius.is_finite() && self.comm_radius > 0.0,
            "comm_radius_mm",
            "must be > 0",
        )?;
        ensure(
            (1..=MAX_SECTORS).contains(&self.n_sectors),
            "n_sectors",
            "must be in 1..=32",
        )?;
        ensure(
            self.intensity_threshold > 0.0 && self.intensity_threshold < 1.0,
            "intensity_threshold",
            "must be in (0, 1)",
        )
    }
}

/// Bitset of sector indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct SectorSet(u32);

impl SectorSet {
    pub const EMPTY: SectorSet = SectorSet(0);

    pub fn all(n_sectors: usize) -> Self {
        debug_assert!(n_sectors <= MAX_SECTORS);
        if n_sectors >= 32 {
            SectorSet(u32::MAX)
        } else {
            SectorSet((1u32 << n_sectors) - 1)
        }
    }

    pub fn single(sector: usize) -> Self {
        SectorSet(1 << sector)
    }

    pub fn insert(&mut self, sector: usize) {
        self.0 |= 1 << sector;
    }

    pub fn contains(self, sector: usize) -> bool {
        sector < MAX_SECTORS && self.0 & (1 << sector) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_SECTORS).filter(move |&s| self.contains(s))
    }
}

impl FromIterator<usize> for SectorSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = SectorSet::EMPTY;
        for s in iter {
            set.insert(s);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("payload {payload} does not fit in {bits} bits")]
    PayloadOverflow { payload: u16, bits: u8 },
    #[error("transmission must use at least one sector")]
    NoSectors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub sender_id: usize,
    pub sender_pos: Vec2,
    pub sender_heading: f64,
    pub sectors: SectorSet,
    pub payload: u16,
    pub payload_bits: u8,
}

impl Transmission {
    pub fn new(
        sender: Pose,
        sectors: SectorSet,
        payload: u16,
        payload_bits: u8,
    ) -> Result<Self, ChannelError> {
        if sectors.is_empty() {
            return Err(ChannelError::NoSectors);
        }
        if payload_bits < 16 && u32::from(payload) >= 1u32 << payload_bits {
            return Err(ChannelError::PayloadOverflow {
                payload,
                bits: payload_bits,
            });
        }
        Ok(Self {
            sender_id: sender.id,
            sender_pos: sender.position,
            sender_heading: sender.heading,
            sectors,
            payload,
            payload_bits,
        })
    }

    /// Emits on every sector.
    pub fn broadcast(
        sender: Pose,
        config: &ChannelConfig,
        payload: u16,
        payload_bits: u8,
    ) -> Result<Self, ChannelError> {
        Self::new(sender, SectorSet::all(config.n_sectors), payload, payload_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reception {
    pub payload: u16,
    /// Sector of the receiver the signal arrived in.
    pub sector: usize,
    pub intensity: f64,
    pub estimated_distance: f64,
    pub tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContextStats {
    /// Transmissions lost to a stronger one in the same receiver sector.
    pub noise_count: u32,
    pub request_count: u32,
    pub active_sectors: SectorSet,
}

/// What one robot got out of the channel during one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Delivery {
    pub receptions: Vec<Reception>,
    pub stats: ContextStats,
}

/// Received intensity at `distance`: `(1 - d/R_c)^2` inside the radius, 0 outside.
pub fn intensity(distance: f64, config: &ChannelConfig) -> f64 {
    let r = config.comm_radius;
    if !(0.0..=r).contains(&distance) {
        return 0.0;
    }
    let f = 1.0 - distance / r;
    f * f
}

/// Inverse of [`intensity`] on `(0, 1]`.
pub fn estimate_distance(intensity: f64, config: &ChannelConfig) -> f64 {
    let d = config.comm_radius * (1.0 - intensity.clamp(0.0, 1.0).sqrt());
    d.clamp(0.0, config.comm_radius)
}

/// Sector index containing `bearing` relative to `heading`. Sector `k` spans
/// `[k·w − w/2, k·w + w/2)` with `w` the sector width, wrapping at 2π.
pub fn sector_of(heading: f64, bearing: f64, config: &ChannelConfig) -> usize {
    let width = config.sector_width();
    let rel = normalize_angle(bearing - heading);
    let k = ((rel + width / 2.0) / width).floor() as usize;
    k % config.n_sectors
}

/// Absolute direction of the centre of `sector` for a robot facing `heading`.
pub fn sector_center(heading: f64, sector: usize, config: &ChannelConfig) -> f64 {
    normalize_angle(heading + sector as f64 * config.sector_width())
}

struct Candidate {
    sector: usize,
    intensity: f64,
    sender_id: usize,
    payload: u16,
}

/// Resolves one tick of transmissions against the start-of-tick poses of all
/// robots. Output is indexed like `receivers`.
pub fn deliver(
    transmissions: &[Transmission],
    receivers: &[Pose],
    config: &ChannelConfig,
    tick: u64,
) -> Vec<Delivery> {
    receivers
        .iter()
        .map(|rx| deliver_one(transmissions, rx, config, tick))
        .collect()
}

fn deliver_one(
    transmissions: &[Transmission],
    rx: &Pose,
    config: &ChannelConfig,
    tick: u64,
) -> Delivery {
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut transmitting = false;
    for t in transmissions {
        if t.sender_id == rx.id {
            transmitting = true;
            continue;
        }
        let d = t.sender_pos.distance(rx.position);
        if d > config.comm_radius {
            continue;
        }
        let i = intensity(d, config);
        if i <= config.intensity_threshold {
            continue;
        }
        let out_sector = sector_of(t.sender_heading, t.sender_pos.bearing_to(rx.position), config);
        if !t.sectors.contains(out_sector) {
            continue;
        }
        candidates.push(Candidate {
            sector: sector_of(rx.heading, rx.position.bearing_to(t.sender_pos), config),
            intensity: i,
            sender_id: t.sender_id,
            payload: t.payload,
        });
    }

    // strongest first, ties to the lower sender id
    candidates.sort_by(|a, b| {
        a.sector
            .cmp(&b.sector)
            .then(b.intensity.total_cmp(&a.intensity))
            .then(a.sender_id.cmp(&b.sender_id))
    });

    let mut delivery = Delivery::default();
    let mut last_sector = None;
    for c in candidates {
        if last_sector == Some(c.sector) {
            delivery.stats.noise_count += 1;
            continue;
        }
        last_sector = Some(c.sector);
        if transmitting && config.half_duplex {
            continue;
        }
        delivery.stats.request_count += 1;
        delivery.stats.active_sectors.insert(c.sector);
        delivery.receptions.push(Reception {
            payload: c.payload,
            sector: c.sector,
            intensity: c.intensity,
            estimated_distance: estimate_distance(c.intensity, config),
            tick,
        });
    }
    delivery
}

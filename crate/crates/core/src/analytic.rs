//! Closed-form estimate of epidemic spreading time in a mobile swarm.
//!
//! A robot moving at speed `v` with communication radius `R_c` meets
//! `n_c = 2√2·R_c·v·t·N / S_sw` others in time `t`. If every infected robot
//! infects `n_c` new ones per step, the infected population after `n` steps is
//! `k_n = k_{n-1}(n_c + 1)`, `k_0 = 1`.

use std::f64::consts::SQRT_2;
use std::ops::{Div, Mul};

use serde::Serialize;

use crate::error::{Error, Result};

/// mm
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Millimeters(pub f64);

/// mm/s
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct MmPerSecond(pub f64);

/// mm²
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct SquareMm(pub f64);

/// mm²/s, the area a robot sweeps per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct SweepRate(pub f64);

/// s
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Seconds(pub f64);

impl Mul<MmPerSecond> for Millimeters {
    type Output = SweepRate;
    fn mul(self, rhs: MmPerSecond) -> SweepRate {
        SweepRate(self.0 * rhs.0)
    }
}

impl Mul<Seconds> for SweepRate {
    type Output = SquareMm;
    fn mul(self, rhs: Seconds) -> SquareMm {
        SquareMm(self.0 * rhs.0)
    }
}

impl Mul<f64> for SweepRate {
    type Output = SweepRate;
    fn mul(self, rhs: f64) -> SweepRate {
        SweepRate(self.0 * rhs)
    }
}

impl Div<SquareMm> for SquareMm {
    type Output = f64;
    fn div(self, rhs: SquareMm) -> f64 {
        self.0 / rhs.0
    }
}

impl Div<SweepRate> for SquareMm {
    type Output = Seconds;
    fn div(self, rhs: SweepRate) -> Seconds {
        Seconds(self.0 / rhs.0)
    }
}

impl Mul<f64> for Seconds {
    type Output = Seconds;
    fn mul(self, rhs: f64) -> Seconds {
        Seconds(self.0 * rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticParams {
    pub comm_radius: Millimeters,
    pub speed: MmPerSecond,
    pub n_robots: u32,
    pub area: SquareMm,
    /// Observation window for [`contact_count`].
    pub t: Seconds,
}

impl AnalyticParams {
    pub fn new(comm_radius_mm: f64, speed_mm_s: f64, n_robots: u32, area_mm2: f64) -> Self {
        Self {
            comm_radius: Millimeters(comm_radius_mm),
            speed: MmPerSecond(speed_mm_s),
            n_robots,
            area: SquareMm(area_mm2),
            t: Seconds(1.0),
        }
    }

    pub fn with_window(mut self, t: f64) -> Self {
        self.t = Seconds(t);
        self
    }

    fn check(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.comm_radius.0) {
            return Err(Error::Domain("communication radius must be > 0"));
        }
        if !positive(self.speed.0) {
            return Err(Error::Domain("speed must be > 0"));
        }
        if !positive(self.area.0) {
            return Err(Error::Domain("swarm area must be > 0"));
        }
        if self.n_robots == 0 {
            return Err(Error::Domain("swarm size must be >= 1"));
        }
        if !(self.t.0.is_finite() && self.t.0 >= 0.0) {
            return Err(Error::Domain("observation window must be >= 0"));
        }
        Ok(())
    }

    /// Area the whole swarm sweeps per second, `2√2·R_c·v·N`.
    fn swarm_sweep(&self) -> SweepRate {
        (self.comm_radius * self.speed) * (2.0 * SQRT_2 * f64::from(self.n_robots))
    }
}

/// Expected contacts `n_c` within the window `t`.
pub fn contact_count(params: &AnalyticParams) -> Result<f64> {
    params.check()?;
    Ok((params.swarm_sweep() * params.t) / params.area)
}

/// Infected population after `n` steps, by the recursion `k_n = k_{n-1}(n_c+1)`.
pub fn infected_after(n_c: f64, n: u32) -> f64 {
    let mut k = 1.0;
    for _ in 0..n {
        k += n_c * k;
    }
    k
}

/// Steps until `(n_c+1)^n >= N`, i.e. `log_{n_c+1} N`.
pub fn steps_to_full(n_c: f64, n_robots: u32) -> Result<f64> {
    if !(n_c.is_finite() && n_c > 0.0) {
        return Err(Error::Domain("contact count must be > 0 for information to spread"));
    }
    if n_robots == 0 {
        return Err(Error::Domain("swarm size must be >= 1"));
    }
    Ok(f64::from(n_robots).ln() / (n_c + 1.0).ln())
}

/// Time until the seed's first infection, `S_sw / (2√2·R_c·v·N)`.
pub fn t_first(params: &AnalyticParams) -> Result<Seconds> {
    params.check()?;
    Ok(params.area / params.swarm_sweep())
}

/// How the number of spreading steps is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    /// `t_first · log₂ N`: one doubling per `t_first`.
    #[default]
    Two,
    /// `t · log_{n_c(t)+1} N`: one step per observation window `t`. Equal to
    /// `Two` when `t = t_first`, because then `n_c = 1`.
    Contacts,
}

/// Time to infect the whole swarm, `t_first · log₂ N`.
pub fn t_total(params: &AnalyticParams) -> Result<Seconds> {
    Ok(t_first(params)? * f64::from(params.n_robots).log2())
}

pub fn t_total_with(params: &AnalyticParams, base: LogBase) -> Result<Seconds> {
    match base {
        LogBase::Two => t_total(params),
        LogBase::Contacts => {
            if params.n_robots == 1 {
                params.check()?;
                return Ok(Seconds(0.0));
            }
            let n_c = contact_count(params)?;
            Ok(params.t * steps_to_full(n_c, params.n_robots)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub comm_radius_mm: Vec<f64>,
    pub speed_mm_s: Vec<f64>,
    pub n_robots: Vec<u32>,
    pub area_mm2: f64,
    pub log_base: LogBase,
    pub window_s: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            comm_radius_mm: (1..=12).map(|i| 25.0 * i as f64).collect(),
            speed_mm_s: vec![20.0, 30.0, 40.0],
            n_robots: vec![10, 20, 50],
            area_mm2: 1000.0 * 1000.0,
            log_base: LogBase::Two,
            window_s: 1.0,
        }
    }
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.comm_radius_mm.len() * self.speed_mm_s.len() * self.n_robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order: speed, then swarm size, then radius.
    pub fn points(&self) -> Vec<AnalyticParams> {
        let mut out = Vec::with_capacity(self.len());
        for &v in &self.speed_mm_s {
            for &n in &self.n_robots {
                for &r in &self.comm_radius_mm {
                    out.push(AnalyticParams::new(r, v, n, self.area_mm2).with_window(self.window_s));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub comm_radius_mm: f64,
    pub speed_mm_s: f64,
    pub n_robots: u32,
    pub area_mm2: f64,
    pub t_first_s: f64,
    pub t_total_s: f64,
}

pub const SWEEP_HEADER: [&str; 6] = [
    "rc_mm",
    "speed_mm_s",
    "n_robots",
    "area_mm2",
    "t_first_s",
    "t_total_s",
];

pub fn sweep_row(p: &AnalyticParams, base: LogBase) -> Result<SweepRow> {
    Ok(SweepRow {
        comm_radius_mm: p.comm_radius.0,
        speed_mm_s: p.speed.0,
        n_robots: p.n_robots,
        area_mm2: p.area.0,
        t_first_s: t_first(p)?.0,
        t_total_s: t_total_with(p, base)?.0,
    })
}

/// Evaluates `t_total` over the whole grid, in [`SweepGrid::points`] order.
pub fn sweep_t_total(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Domain("sweep grid is empty"));
    }
    grid.points().iter().map(|p| sweep_row(p, grid.log_base)).collect()
}

//! Scenario execution and artifact layout.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::analytic::{self, SweepRow, SWEEP_HEADER};
use crate::config::{RunConfig, Scenario};
use crate::epidemic::{self, ClusterEpisode, ClusterTracker};
use crate::error::{Error, Result};
use crate::field::{self, Heatmap, SNAPSHOT_CELL_MM};
use crate::io::{self, GrayImage, Summary, TraceRow};
use crate::metrics::{self, GradientReport};
use crate::sim::{init_world, Behavior, Mode, Protocol, World};

/// What to keep in memory while running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capture {
    pub trace: bool,
    pub snapshots: bool,
}

impl Capture {
    pub const ALL: Capture = Capture {
        trace: true,
        snapshots: true,
    };
    pub const METRICS_ONLY: Capture = Capture {
        trace: false,
        snapshots: false,
    };
}

#[derive(Debug, Clone, Default)]
pub struct Metrics {
    /// Infected count after each tick, starting with the initial state.
    pub infected_trace: Vec<usize>,
    pub spread_time_s: Option<f64>,
    pub gradient: Option<GradientReport>,
    pub episodes: Vec<ClusterEpisode>,
    pub mean_cluster_degree: Option<f64>,
    /// Share of mobile robot-ticks spent turning or stopped.
    pub busy_fraction: f64,
    pub mean_displacement_mm: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub final_world: Option<World>,
    pub metrics: Metrics,
    pub summary: Summary,
    pub trace: Vec<TraceRow>,
    pub snapshots: Vec<(u64, GrayImage)>,
    pub sweep_rows: Vec<SweepRow>,
}

impl RunOutput {
    pub fn fully_spread(&self) -> bool {
        self.config.scenario != Scenario::EpidemicSpread || self.metrics.spread_time_s.is_some()
    }
}

fn epidemic_snapshot(world: &World) -> GrayImage {
    let mut map = Heatmap::for_arena(&world.config.arena, SNAPSHOT_CELL_MM);
    for r in &world.robots {
        let v = if r.epidemic.is_infected() {
            2 + r.epidemic.cluster_degree as u32
        } else {
            1
        };
        map.stamp(r.position, SNAPSHOT_CELL_MM, v);
    }
    let full = world.config.channel.n_sectors as u32 + 2;
    GrayImage::new(map.cols, map.rows, map.normalized(full))
}

fn snapshot(world: &World) -> Option<GrayImage> {
    match &world.config.protocol {
        Protocol::VirtualField(p) => {
            let map = field::field_snapshot(&world.robots, &world.config.arena);
            Some(GrayImage::new(map.cols, map.rows, map.normalized(field::snapshot_full_scale(p))))
        }
        Protocol::Epidemic(_) => Some(epidemic_snapshot(world)),
        Protocol::None => None,
    }
}

/// Runs a scenario fully in memory.
pub fn simulate(config: &RunConfig, capture: Capture) -> Result<RunOutput> {
    config.validate()?;
    if config.scenario == Scenario::SweepAnalytic {
        let rows = analytic::sweep_t_total(&config.sweep)?;
        let mut summary = Summary::default();
        summary.push("scenario", config.scenario.as_str());
        summary.push("rows", rows.len());
        return Ok(RunOutput {
            config: config.clone(),
            final_world: None,
            metrics: Metrics::default(),
            summary,
            trace: Vec::new(),
            snapshots: Vec::new(),
            sweep_rows: rows,
        });
    }

    let mut world = init_world(config.sim.clone())?;
    let n = world.robots.len();
    let total_ticks = config.sim.total_ticks();
    let snap_every = config.snapshot_every_ticks();
    let stop_when_spread = config.scenario == Scenario::EpidemicSpread;
    let start: Vec<_> = world.robots.iter().map(|r| r.position).collect();

    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let mut tracker = ClusterTracker::new(n);
    let mut infected_trace = vec![epidemic::infected_count(&world)];
    let (mut busy, mut mobile_ticks) = (0u64, 0u64);
    let (mut degree_sum, mut degree_samples) = (0u64, 0u64);

    let record = |world: &World, trace: &mut Vec<TraceRow>, snapshots: &mut Vec<(u64, GrayImage)>| {
        if capture.trace && world.tick.is_multiple_of(config.trace_every) {
            trace.extend(io::trace_rows(world));
        }
        if capture.snapshots {
            if let Some(every) = snap_every {
                if world.tick.is_multiple_of(every) {
                    if let Some(img) = snapshot(world) {
                        snapshots.push((world.tick, img));
                    }
                }
            }
        }
    };
    record(&world, &mut trace, &mut snapshots);

    let mut spread_time_s = (infected_trace[0] == n).then_some(0.0);
    while world.tick < total_ticks && !(stop_when_spread && spread_time_s.is_some()) {
        world.step();
        let infected = epidemic::infected_count(&world);
        infected_trace.push(infected);
        if infected == n && spread_time_s.is_none() {
            spread_time_s = Some(world.time_s());
        }
        tracker.observe(&world);
        for r in &world.robots {
            if r.behavior != Behavior::Pinned {
                mobile_ticks += 1;
                if matches!(r.mode, Mode::Turning | Mode::Stopped) {
                    busy += 1;
                }
            }
            if !r.epidemic.is_seed && r.epidemic.cluster_degree > 0 {
                degree_sum += r.epidemic.cluster_degree as u64;
                degree_samples += 1;
            }
        }
        record(&world, &mut trace, &mut snapshots);
    }

    let gradient = match &config.sim.protocol {
        Protocol::VirtualField(p) => Some(metrics::gradient_report(
            &world.robots,
            p.sources[0],
            &config.sim.channel,
        )),
        _ => None,
    };
    let mobile: Vec<f64> = world
        .robots
        .iter()
        .filter(|r| r.behavior != Behavior::Pinned)
        .map(|r| r.position.distance(start[r.id]))
        .collect();
    let metrics = Metrics {
        infected_trace,
        spread_time_s,
        gradient,
        episodes: tracker.episodes(),
        mean_cluster_degree: (degree_samples > 0).then(|| degree_sum as f64 / degree_samples as f64),
        busy_fraction: if mobile_ticks == 0 {
            0.0
        } else {
            busy as f64 / mobile_ticks as f64
        },
        mean_displacement_mm: if mobile.is_empty() {
            0.0
        } else {
            mobile.iter().sum::<f64>() / mobile.len() as f64
        },
    };
    let summary = summarize(config, &world, &metrics);

    Ok(RunOutput {
        config: config.clone(),
        final_world: Some(world),
        metrics,
        summary,
        trace,
        snapshots,
        sweep_rows: Vec::new(),
    })
}

fn summarize(config: &RunConfig, world: &World, m: &Metrics) -> Summary {
    let dt = config.sim.time_step;
    let mut s = Summary::default();
    s.push("scenario", config.scenario.as_str());
    s.push("seed", config.sim.rng_seed);
    s.push("n_robots", world.robots.len());
    s.push("ticks", world.tick);
    s.push("time_s", format!("{:.3}", world.time_s()));
    s.push("final_infected", m.infected_trace.last().copied().unwrap_or(0));
    s.push_opt("spread_time_s", m.spread_time_s);
    s.push_opt("mean_cluster_degree", m.mean_cluster_degree);
    let lifetime = |r| epidemic::mean_lifetime(&m.episodes, r).map(|t| t * dt);
    s.push_opt("singleton_lifetime_s", lifetime(1..=1));
    s.push_opt("cluster_lifetime_s", lifetime(2..=3));
    s.push("cluster_episodes", m.episodes.len());
    match &m.gradient {
        Some(g) => {
            s.push("gradient_monotonicity_violations", g.monotonicity_violations);
            s.push("aware_robots", g.aware);
            s.push("reachable_robots", g.reachable);
            s.push_opt("gradient_spearman", g.spearman);
        }
        None => {
            s.push("gradient_monotonicity_violations", "NA");
        }
    }
    s.push("busy_fraction", format!("{:.6}", m.busy_fraction));
    s.push("mean_displacement_mm", format!("{:.3}", m.mean_displacement_mm));
    s
}

fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let to_err = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(to_err)?;
    w.write_record(SWEEP_HEADER).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every artifact of `output` into `dir`.
pub fn write_outputs(output: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if output.config.scenario == Scenario::SweepAnalytic {
        write_sweep_csv(&output.sweep_rows, &dir.join("t_total.csv"))?;
    } else {
        io::write_trace(&output.trace, &dir.join("trace.csv"))?;
        for (tick, img) in &output.snapshots {
            io::write_heatmap(img, &dir.join(format!("snapshot_{tick:06}.pgm")))?;
        }
    }
    output.summary.write(&dir.join("summary.txt"))
}

/// Runs one scenario and writes its artifacts. An `epidemic-spread` run that
/// times out keeps its artifacts and reports `NotFullySpread`.
pub fn run_scenario(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let output = simulate(config, Capture::ALL)?;
    write_outputs(&output, dir)?;
    if !output.fully_spread() {
        let world = output.final_world.as_ref().expect("simulation world");
        return Err(Error::NotFullySpread {
            infected: epidemic::infected_count(world),
            total: world.robots.len(),
            elapsed_s: world.time_s(),
        });
    }
    Ok(output)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Batch mode. `sweep-analytic` evaluates the grid; simulation scenarios run
/// `replications` seeds, each into its own `rep_NNN` directory, and merge
/// their summaries into `sweep.csv` in seed order.
pub fn run_sweep(config: &RunConfig, dir: &Path, jobs: usize) -> Result<()> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let jobs = jobs.max(1);

    if config.scenario == Scenario::SweepAnalytic {
        let points = config.sweep.points();
        let rows: Result<Vec<SweepRow>> = pool(jobs)?.install(|| {
            points
                .par_iter()
                .map(|p| analytic::sweep_row(p, config.sweep.log_base))
                .collect()
        });
        let rows = rows?;
        write_sweep_csv(&rows, &dir.join("t_total.csv"))?;
        let mut s = Summary::default();
        s.push("scenario", config.scenario.as_str());
        s.push("rows", rows.len());
        return s.write(&dir.join("summary.txt"));
    }

    let summaries: Result<Vec<Summary>> = pool(jobs)?.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|i| {
                let mut rep = config.clone();
                rep.sim.rng_seed = config.sim.rng_seed.wrapping_add(i as u64);
                let out = simulate(&rep, Capture::ALL)?;
                write_outputs(&out, &dir.join(format!("rep_{i:03}")))?;
                Ok(out.summary)
            })
            .collect()
    });
    let summaries = summaries?;

    let path = dir.join("sweep.csv");
    let to_err = |e: csv::Error| Error::io(&path, e.into());
    let mut w = csv::Writer::from_path(&path).map_err(to_err)?;
    let mut header = vec!["replicate".to_string()];
    header.extend(summaries[0].entries().iter().map(|(k, _)| k.clone()));
    w.write_record(&header).map_err(to_err)?;
    for (i, s) in summaries.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(s.entries().iter().map(|(_, v)| v.clone()));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{run_ca, MetricRecord, MetricSeries, Precession, Rotation};
use crate::ca::Side;
use crate::error::Result;
use crate::scenarios::CaScenario;

/// Thresholds at which precession counts are also reported.
pub const THRESHOLD_SWEEP: [f64; 3] = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub seeds: Vec<u64>,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub threshold: f64,
    /// A force has reached its goal when its final centroid lies this close
    /// to the enemy flag.
    pub goal_radius: f64,
}

impl EnsembleConfig {
    pub fn new(seeds: impl IntoIterator<Item = u64>) -> Self {
        Self {
            seeds: seeds.into_iter().collect(),
            jobs: 0,
            threshold: super::PRECESSION_THRESHOLD,
            goal_radius: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub precession: Precession,
    pub crossed: bool,
    /// Red, Blue.
    pub goal_reached: [bool; 2],
    pub series: MetricSeries,
}

impl RunOutcome {
    pub fn of(seed: u64, series: MetricSeries, goals: [(f64, f64); 2], cfg: &EnsembleConfig) -> Self {
        let last = series.records.last();
        let reached = |k: usize| {
            last.and_then(|r| r.centroid[k])
                .is_some_and(|(x, y)| (x - goals[k].0).hypot(y - goals[k].1) <= cfg.goal_radius)
        };
        Self {
            seed,
            precession: series.precession(cfg.threshold),
            crossed: series.crossed(),
            goal_reached: [reached(0), reached(1)],
            series,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub threshold: f64,
    /// Completed runs in seed order.
    pub runs: Vec<RunOutcome>,
    /// Seeds whose run failed, with the reason.
    pub failures: Vec<(u64, String)>,
    /// Pointwise mean over completed runs.
    pub mean: MetricSeries,
    /// Pointwise standard deviation, componentwise.
    pub sd: Vec<MetricRecord>,
}

impl EnsembleReport {
    /// Folds per-seed results in the order given.
    pub fn aggregate(scenario: &str, threshold: f64, results: Vec<(u64, Result<RunOutcome>)>) -> Self {
        let seeds = results.iter().map(|(s, _)| *s).collect();
        let mut runs = Vec::new();
        let mut failures = Vec::new();
        for (seed, r) in results {
            match r {
                Ok(o) => runs.push(o),
                Err(e) => failures.push((seed, e.to_string())),
            }
        }
        let (mean, sd) = pointwise(&runs);
        Self { scenario: scenario.to_string(), seeds, threshold, runs, failures, mean, sd }
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    /// Clockwise, anticlockwise and none counts at `threshold`.
    pub fn counts_at(&self, threshold: f64) -> [usize; 3] {
        let mut c = [0; 3];
        for r in &self.runs {
            let k = match Rotation::classify(r.precession.total_rotation, threshold) {
                Rotation::Clockwise => 0,
                Rotation::Anticlockwise => 1,
                Rotation::None => 2,
            };
            c[k] += 1;
        }
        c
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts_at(self.threshold)
    }

    fn fraction(&self, n: usize) -> f64 {
        if self.runs.is_empty() {
            0.0
        } else {
            n as f64 / self.runs.len() as f64
        }
    }

    pub fn precession_frequency(&self) -> f64 {
        let [cw, acw, _] = self.counts();
        self.fraction(cw + acw)
    }

    pub fn crossing_frequency(&self) -> f64 {
        self.fraction(self.runs.iter().filter(|r| r.crossed).count())
    }

    pub fn goal_reach_frequency(&self) -> [f64; 2] {
        let n = |k: usize| self.runs.iter().filter(|r| r.goal_reached[k]).count();
        [self.fraction(n(0)), self.fraction(n(1))]
    }

    pub fn mean_rotation(&self) -> f64 {
        let total: f64 = self.runs.iter().map(|r| r.precession.total_rotation).sum();
        if self.runs.is_empty() {
            0.0
        } else {
            total / self.runs.len() as f64
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let [cw, acw, none] = self.counts();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "runs: {} of {} seeds", self.n_runs(), self.seeds.len());
        for (seed, why) in &self.failures {
            let _ = writeln!(s, "failed seed {seed}: {why}");
        }
        let _ = writeln!(s, "precession threshold: {:.4} rad", self.threshold);
        let _ = writeln!(s, "clockwise: {cw}\nanticlockwise: {acw}\nnone: {none}");
        let _ = writeln!(s, "precession frequency: {:.4}", self.precession_frequency());
        let _ = writeln!(s, "mean rotation: {:.4} rad", self.mean_rotation());
        for th in THRESHOLD_SWEEP {
            let [a, b, c] = self.counts_at(th);
            let _ = writeln!(s, "at threshold {th:.4}: clockwise {a}, anticlockwise {b}, none {c}");
        }
        let [gr, gb] = self.goal_reach_frequency();
        let _ = writeln!(s, "goal reached: red {gr:.4}, blue {gb:.4}");
        let _ = writeln!(s, "forces passed: {:.4}", self.crossing_frequency());
        if let Some(last) = self.mean.records.last() {
            let _ = writeln!(s, "mean final living: red {:.2}, blue {:.2}", last.mass[0], last.mass[1]);
        }
        s
    }

    /// One row per completed run.
    pub fn write_runs_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# rotation: inter-centroid rotation after contact, radians, anticlockwise positive")?;
        writeln!(w, "seed,rotation,direction,crossed,red_goal,blue_goal,red_final,blue_final")?;
        for r in &self.runs {
            let last = r.series.records.last().map_or([0.0; 2], |x| x.mass);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.seed,
                r.precession.total_rotation,
                r.precession.direction.name(),
                r.crossed,
                r.goal_reached[0],
                r.goal_reached[1],
                last[0],
                last[1]
            )?;
        }
        Ok(())
    }
}

fn pointwise(runs: &[RunOutcome]) -> (MetricSeries, Vec<MetricRecord>) {
    let Some(first) = runs.first() else {
        return (MetricSeries { records: Vec::new(), contact_radius: 0.0, extent: (0.0, 0.0) }, Vec::new());
    };
    let len = runs.iter().map(|r| r.series.records.len()).min().unwrap_or(0);
    let mut mean = Vec::with_capacity(len);
    let mut sd = Vec::with_capacity(len);
    for k in 0..len {
        let recs: Vec<&MetricRecord> = runs.iter().map(|r| &r.series.records[k]).collect();
        let stat = |f: &dyn Fn(&MetricRecord) -> Option<f64>| -> (Option<f64>, Option<f64>) {
            let xs: Vec<f64> = recs.iter().filter_map(|r| f(r)).collect();
            if xs.is_empty() {
                return (None, None);
            }
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            (Some(m), Some(var.sqrt()))
        };
        let both = |f: &dyn Fn(&MetricRecord) -> Option<(f64, f64)>| {
            let (mx, sx) = stat(&|r| f(r).map(|c| c.0));
            let (my, sy) = stat(&|r| f(r).map(|c| c.1));
            (mx.zip(my), sx.zip(sy))
        };
        let val = |o: (Option<f64>, Option<f64>)| (o.0.unwrap_or(0.0), o.1.unwrap_or(0.0));
        let t = recs[0].t;
        let mass = [val(stat(&|r| Some(r.mass[0]))), val(stat(&|r| Some(r.mass[1])))];
        let cen = [both(&|r| r.centroid[0]), both(&|r| r.centroid[1])];
        let angle = stat(&|r| r.angle);
        let gap = stat(&|r| r.gap);
        let aspect = |k: usize| {
            // degenerate shapes are infinitely long and carry no spread
            let finite = stat(&|r: &MetricRecord| r.aspect[k].filter(|a| a.is_finite()));
            if finite.0.is_none() && recs.iter().any(|r| r.aspect[k].is_some()) {
                (Some(f64::INFINITY), Some(0.0))
            } else {
                finite
            }
        };
        let asp = [aspect(0), aspect(1)];
        let enc = [val(stat(&|r| Some(r.encirclement[0]))), val(stat(&|r| Some(r.encirclement[1])))];
        mean.push(MetricRecord {
            t,
            mass: [mass[0].0, mass[1].0],
            centroid: [cen[0].0, cen[1].0],
            angle: angle.0,
            gap: gap.0,
            aspect: [asp[0].0, asp[1].0],
            encirclement: [enc[0].0, enc[1].0],
        });
        sd.push(MetricRecord {
            t,
            mass: [mass[0].1, mass[1].1],
            centroid: [cen[0].1, cen[1].1],
            angle: angle.1,
            gap: gap.1,
            aspect: [asp[0].1, asp[1].1],
            encirclement: [enc[0].1, enc[1].1],
        });
    }
    let series = MetricSeries { records: mean, contact_radius: first.series.contact_radius, extent: first.series.extent };
    (series, sd)
}

/// Runs every seed of `cfg` on up to `cfg.jobs` threads. Results are folded
/// in seed order whatever order the runs finish in.
pub fn ensemble(name: &str, scenario: &CaScenario, cfg: &EnsembleConfig) -> EnsembleReport {
    let jobs = match cfg.jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(cfg.seeds.len().max(1));
    let goals = [
        to_f64(scenario.setup.goal(Side::Red)),
        to_f64(scenario.setup.goal(Side::Blue)),
    ];
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunOutcome>>>> = Mutex::new((0..cfg.seeds.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = cfg.seeds.get(k) else {
                    break;
                };
                let out = run_ca(scenario, seed).map(|(_, series)| RunOutcome::of(seed, series, goals, cfg));
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(out);
            });
        }
    });
    let results = cfg
        .seeds
        .iter()
        .zip(slots.into_inner().expect("workers finished"))
        .map(|(&seed, r)| (seed, r.expect("every seed was run")))
        .collect();
    EnsembleReport::aggregate(name, cfg.threshold, results)
}

fn to_f64(c: (i32, i32)) -> (f64, f64) {
    (c.0 as f64, c.1 as f64)
}

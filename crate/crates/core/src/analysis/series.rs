use std::io::{BufRead, Write};

use super::{centroid, encirclement, front_aspect, wrap, Frame, Precession, Rotation};
use crate::ca::{ca_run_observed, CaTrajectory, Side};
use crate::error::{Error, Result};
use crate::integrator::{run_observed, IntegratorConfig, RunTrajectory};
use crate::scenarios::{CaScenario, PdeScenario};

/// Angle steps at least this large are reversals of the axis.
const REVERSAL: f64 = std::f64::consts::PI - 1e-6;

/// Metrics of one instant. Index 0 is u / Red.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    /// Time (continuum) or step number (automaton).
    pub t: f64,
    /// Total mass or living agents.
    pub mass: [f64; 2],
    pub centroid: [Option<(f64, f64)>; 2],
    /// Unwrapped angle of the vector from force 0's centroid to force 1's.
    pub angle: Option<f64>,
    /// Centroid separation less the effective radii of both forces.
    pub gap: Option<f64>,
    pub aspect: [Option<f64>; 2],
    /// `[0]`: sectors around force 0 held by force 1; `[1]` the reverse.
    pub encirclement: [f64; 2],
}

impl MetricRecord {
    pub fn separation(&self) -> Option<f64> {
        let (a, b) = (self.centroid[0]?, self.centroid[1]?);
        Some((b.0 - a.0).hypot(b.1 - a.1))
    }

    fn blank(t: f64) -> Self {
        Self {
            t,
            mass: [0.0; 2],
            centroid: [None; 2],
            angle: None,
            gap: None,
            aspect: [None; 2],
            encirclement: [0.0; 2],
        }
    }
}

/// Radius of the disc with the same second moment as the point set.
fn effective_radius(points: &[super::Mass]) -> Option<f64> {
    let (cx, cy) = centroid(points)?;
    let (mut m, mut s) = (0.0, 0.0);
    for p in points {
        m += p.m;
        s += p.m * ((p.x - cx).powi(2) + (p.y - cy).powi(2));
    }
    Some((2.0 * s / m).sqrt())
}

/// Accumulates records frame by frame, unwrapping the angle as it goes.
#[derive(Debug, Clone)]
pub struct SeriesBuilder {
    series: MetricSeries,
    last_raw: Option<f64>,
    unwrapped: f64,
}

impl SeriesBuilder {
    /// `contact_radius` is the larger sensor range; sectors for encirclement
    /// are searched out to twice that.
    pub fn new(contact_radius: f64, extent: (f64, f64)) -> Self {
        Self {
            series: MetricSeries { records: Vec::new(), contact_radius, extent },
            last_raw: None,
            unwrapped: 0.0,
        }
    }

    pub fn push(&mut self, frame: &Frame) {
        let [a, b] = &frame.forces;
        let mut r = MetricRecord::blank(frame.t);
        r.mass = [frame.mass(0), frame.mass(1)];
        r.centroid = [centroid(a), centroid(b)];
        r.aspect = [front_aspect(a), front_aspect(b)];
        let reach = 2.0 * self.series.contact_radius;
        r.encirclement = [encirclement(a, b, reach), encirclement(b, a, reach)];
        if let (Some(p), Some(q)) = (r.centroid[0], r.centroid[1]) {
            let (dx, dy) = (q.0 - p.0, q.1 - p.1);
            if dx != 0.0 || dy != 0.0 {
                let raw = dy.atan2(dx);
                self.unwrapped = match self.last_raw {
                    Some(prev) => self.unwrapped + wrap(raw - prev),
                    None => raw,
                };
                self.last_raw = Some(raw);
            }
            if self.last_raw.is_some() {
                r.angle = Some(self.unwrapped);
            }
            let ra = effective_radius(a).unwrap_or(0.0);
            let rb = effective_radius(b).unwrap_or(0.0);
            r.gap = Some(dx.hypot(dy) - ra - rb);
        }
        self.series.records.push(r);
    }

    pub fn finish(self) -> MetricSeries {
        self.series
    }
}

/// Time series of metrics for one run (or an ensemble mean).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub records: Vec<MetricRecord>,
    /// Forces are in contact once their gap falls below this.
    pub contact_radius: f64,
    /// Battlefield size, used to put both engines on a common scale.
    pub extent: (f64, f64),
}

impl MetricSeries {
    pub fn duration(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// First record at which the forces are in contact.
    pub fn contact_index(&self) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.gap.is_some_and(|g| g < self.contact_radius))
    }

    pub fn contact_time(&self) -> Option<f64> {
        self.contact_index().map(|k| self.records[k].t)
    }

    /// Time in units of the approach: 0 at the start, 1 at first contact.
    /// Without contact the whole run counts as the approach.
    pub fn normalised_time(&self, t: f64) -> f64 {
        let t0 = self.records.first().map_or(0.0, |r| r.t);
        let span = match self.contact_time() {
            Some(tc) if tc > t0 => tc - t0,
            _ => self.duration(),
        };
        if span > 0.0 {
            (t - t0) / span
        } else {
            0.0
        }
    }

    /// Rotation of the inter-centroid axis from first contact to the last
    /// record where both forces exist.
    ///
    /// A step that exactly reverses the axis (forces passing straight through
    /// each other) has no sense of rotation and contributes nothing.
    pub fn precession(&self, threshold: f64) -> Precession {
        let none = Precession { direction: Rotation::None, total_rotation: 0.0 };
        let Some(k0) = self.contact_index() else {
            return none;
        };
        let Some(k1) = self.records.iter().rposition(|r| r.centroid.iter().all(Option::is_some)) else {
            return none;
        };
        if k1 <= k0 {
            return none;
        }
        let mut total = 0.0;
        let mut prev: Option<f64> = None;
        for r in &self.records[k0..=k1] {
            let Some(a) = r.angle else {
                continue;
            };
            if let Some(p) = prev {
                let d = a - p;
                if d.abs() < REVERSAL {
                    total += d;
                }
            }
            prev = Some(a);
        }
        Precession { direction: Rotation::classify(total, threshold), total_rotation: total }
    }

    /// Reflection through the horizontal midline: y ↦ height − y.
    pub fn mirrored(&self) -> Self {
        let h = self.extent.1;
        let flip = |c: Option<(f64, f64)>| c.map(|(x, y)| (x, h - y));
        let records = self
            .records
            .iter()
            .map(|r| MetricRecord {
                centroid: [flip(r.centroid[0]), flip(r.centroid[1])],
                angle: r.angle.map(|a| -a),
                ..*r
            })
            .collect();
        Self { records, ..self.clone() }
    }

    /// Linear interpolation of every metric at `t` (clamped to the run).
    pub fn at(&self, t: f64) -> MetricRecord {
        let recs = &self.records;
        assert!(!recs.is_empty(), "empty series");
        let k = recs.partition_point(|r| r.t <= t);
        if k == 0 {
            return MetricRecord { t, ..recs[0] };
        }
        if k == recs.len() {
            return MetricRecord { t, ..recs[k - 1] };
        }
        let (a, b) = (&recs[k - 1], &recs[k]);
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        let lerp = |x: f64, y: f64| x + w * (y - x);
        let opt = |x: Option<f64>, y: Option<f64>| Some(lerp(x?, y?));
        let pair = |x: Option<(f64, f64)>, y: Option<(f64, f64)>| {
            let (x, y) = (x?, y?);
            Some((lerp(x.0, y.0), lerp(x.1, y.1)))
        };
        MetricRecord {
            t,
            mass: [lerp(a.mass[0], b.mass[0]), lerp(a.mass[1], b.mass[1])],
            centroid: [pair(a.centroid[0], b.centroid[0]), pair(a.centroid[1], b.centroid[1])],
            angle: opt(a.angle, b.angle),
            gap: opt(a.gap, b.gap),
            aspect: [opt(a.aspect[0], b.aspect[0]), opt(a.aspect[1], b.aspect[1])],
            encirclement: [lerp(a.encirclement[0], b.encirclement[0]), lerp(a.encirclement[1], b.encirclement[1])],
        }
    }

    /// `n + 1` evenly spaced times spanning the run.
    pub fn sample_times(&self, n: usize) -> Vec<f64> {
        let t0 = self.records.first().map_or(0.0, |r| r.t);
        let d = self.duration();
        (0..=n).map(|k| t0 + d * k as f64 / n as f64).collect()
    }

    /// Mean centroid x-speed of `force` from the start to first contact.
    pub fn approach_speed(&self, force: usize) -> Option<f64> {
        let k = self.contact_index()?;
        let (a, b) = (&self.records[0], &self.records[k]);
        let (xa, xb) = (a.centroid[force]?.0, b.centroid[force]?.0);
        (b.t > a.t).then(|| (xb - xa).abs() / (b.t - a.t))
    }

    /// Longest stretch after first contact over which the centroid x-speed
    /// of `force`, measured on `n` equal segments of the run, stays below
    /// `ratio` times its approach speed. Returns `(start, end)` times.
    pub fn stationary_window(&self, force: usize, ratio: f64, n: usize) -> Option<(f64, f64)> {
        let tc = self.contact_time()?;
        let limit = ratio * self.approach_speed(force)?;
        let ts = self.sample_times(n);
        let xs: Vec<Option<f64>> = ts.iter().map(|&t| self.at(t).centroid[force].map(|c| c.0)).collect();
        let mut best: Option<(f64, f64)> = None;
        let mut open: Option<f64> = None;
        for k in 0..n {
            let slow = ts[k] >= tc
                && match (xs[k], xs[k + 1]) {
                    (Some(a), Some(b)) => (b - a).abs() / (ts[k + 1] - ts[k]) < limit,
                    _ => false,
                };
            if slow {
                let start = *open.get_or_insert(ts[k]);
                let end = ts[k + 1];
                if best.map_or(true, |(s, e)| end - start > e - s) {
                    best = Some((start, end));
                }
            } else {
                open = None;
            }
        }
        best
    }

    /// Mass lost per unit time over windows of length `window`, sliding by
    /// half a window. `force` of `None` sums both forces.
    pub fn loss_rates(&self, force: Option<usize>, window: f64) -> Vec<(f64, f64)> {
        let mass = |r: &MetricRecord| match force {
            Some(k) => r.mass[k],
            None => r.mass[0] + r.mass[1],
        };
        let mut out = Vec::new();
        let (Some(first), Some(last)) = (self.records.first(), self.records.last()) else {
            return out;
        };
        if !(window > 0.0) {
            return out;
        }
        let mut t = first.t;
        while t + window <= last.t + 1e-12 * window {
            let (a, b) = (self.at(t), self.at(t + window));
            out.push((t + 0.5 * window, (mass(&a) - mass(&b)) / window));
            t += 0.5 * window;
        }
        out
    }

    /// True once the forces have passed: the centroid-to-centroid vector
    /// points against its initial direction.
    pub fn crossed(&self) -> bool {
        let dir = |r: &MetricRecord| {
            let (a, b) = (r.centroid[0]?, r.centroid[1]?);
            Some((b.0 - a.0, b.1 - a.1))
        };
        let Some(d0) = self.records.first().and_then(dir) else {
            return false;
        };
        self.records
            .iter()
            .filter_map(dir)
            .any(|d| d.0 * d0.0 + d.1 * d0.1 < 0.0)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# t: time for the continuum model, step for the automaton")?;
        writeln!(w, "# force 0 is u (red), force 1 is v (blue)")?;
        writeln!(w, "# mass_k: total mass or living agents; cx_k, cy_k: centroid, empty once extinct")?;
        writeln!(w, "# angle: unwrapped direction of the centroid 0 -> centroid 1 vector, radians")?;
        writeln!(w, "# gap: centroid separation less both effective radii")?;
        writeln!(w, "# aspect_k: front aspect ratio; enc_01: sector fraction around force 0 held by force 1")?;
        writeln!(w, "# contact_radius={}", self.contact_radius)?;
        writeln!(w, "# extent={},{}", self.extent.0, self.extent.1)?;
        writeln!(w, "t,mass_0,mass_1,cx_0,cy_0,cx_1,cy_1,angle,gap,aspect_0,aspect_1,enc_01,enc_10")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let c = |k: usize| match r.centroid[k] {
                Some((x, y)) => format!("{x},{y}"),
                None => ",".to_string(),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.mass[0],
                r.mass[1],
                c(0),
                c(1),
                opt(r.angle),
                opt(r.gap),
                opt(r.aspect[0]),
                opt(r.aspect[1]),
                r.encirclement[0],
                r.encirclement[1]
            )?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut contact_radius = None;
        let mut extent = None;
        let mut records = Vec::new();
        let mut seen_header = false;
        for (n, line) in r.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            let bad = |m: String| Error::Parse { line: line_no, message: m };
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k {
                        "contact_radius" => contact_radius = Some(num(v)?),
                        "extent" => {
                            let (a, b) = v.split_once(',').ok_or_else(|| bad("extent needs two values".into()))?;
                            extent = Some((num(a)?, num(b)?));
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !seen_header {
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 13 {
                return Err(bad(format!("expected 13 columns, found {}", f.len())));
            }
            let opt = |s: &str| if s.trim().is_empty() { Ok(None) } else { num(s).map(Some) };
            let pair = |a: &str, b: &str| -> Result<Option<(f64, f64)>> {
                Ok(match (opt(a)?, opt(b)?) {
                    (Some(x), Some(y)) => Some((x, y)),
                    _ => None,
                })
            };
            records.push(MetricRecord {
                t: num(f[0])?,
                mass: [num(f[1])?, num(f[2])?],
                centroid: [pair(f[3], f[4])?, pair(f[5], f[6])?],
                angle: opt(f[7])?,
                gap: opt(f[8])?,
                aspect: [opt(f[9])?, opt(f[10])?],
                encirclement: [num(f[11])?, num(f[12])?],
            });
        }
        Ok(Self {
            records,
            contact_radius: contact_radius.ok_or_else(|| Error::MissingField("contact_radius".into()))?,
            extent: extent.ok_or_else(|| Error::MissingField("extent".into()))?,
        })
    }
}

/// Integrates a continuum scenario, recording metrics at every accepted step.
pub fn run_pde(scenario: &PdeScenario) -> Result<(RunTrajectory, MetricSeries)> {
    run_pde_with(scenario, &scenario.integrator())
}

/// As [`run_pde`] with explicit integrator settings.
pub fn run_pde_with(scenario: &PdeScenario, cfg: &IntegratorConfig) -> Result<(RunTrajectory, MetricSeries)> {
    let model = scenario.model()?;
    cfg.validate()?;
    let initial = scenario.initial_state();
    initial.validate()?;
    let radius = scenario.u.sensor_radius.max(scenario.v.sensor_radius);
    let mut builder = SeriesBuilder::new(radius, (scenario.grid.width(), scenario.grid.height()));
    let traj = run_observed(&initial, &model, cfg, |s| builder.push(&Frame::from_pde(s)));
    Ok((traj, builder.finish()))
}

/// Runs an automaton scenario for its configured number of steps,
/// recording metrics after every step.
pub fn run_ca(scenario: &CaScenario, seed: u64) -> Result<(CaTrajectory, MetricSeries)> {
    let setup = &scenario.setup;
    let radius = setup.params(Side::Red).sensor_range.max(setup.params(Side::Blue).sensor_range) as f64;
    let size = setup.size as f64;
    let mut builder = SeriesBuilder::new(radius, (size, size));
    let traj = ca_run_observed(setup, seed, scenario.steps, &scenario.snapshot_steps(), |s| {
        builder.push(&Frame::from_agents(s.t as f64, s.agents()))
    })?;
    Ok((traj, builder.finish()))
}

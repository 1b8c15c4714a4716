use super::MetricSeries;
use crate::error::{Error, Result};

/// Scenario family: the name up to its engine marker, so that
/// `precess-pde-offset-clockwise` and `precess-ca` are both `precess`.
pub fn family(name: &str) -> &str {
    for marker in ["-pde", "-ca"] {
        if let Some(k) = name.find(marker) {
            let rest = &name[k + marker.len()..];
            if rest.is_empty() || rest.starts_with('-') {
                return &name[..k];
            }
        }
    }
    name
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub names: [String; 2],
    /// Normalised times of the samples (1 is first contact).
    pub samples: Vec<f64>,
    /// Root-mean-square distance between matching centroids, in units of
    /// the battlefield width.
    pub centroid_rmse: f64,
    /// Per sample: survivor fractions `[a0, a1, b0, b1]`.
    pub losses: Vec<[f64; 4]>,
    /// Final survivor fractions of each series' two forces.
    pub survivors: [[f64; 2]; 2],
    /// Longest post-contact stationary stretch of force 0, as a fraction
    /// of each run.
    pub stationary: [f64; 2],
}

impl ComparisonReport {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "# time is normalised so that 1 is first contact; survivors are fractions of initial mass")?;
        writeln!(w, "# a = {}, b = {}", self.names[0], self.names[1])?;
        writeln!(w, "tau,a_0,a_1,b_0,b_1")?;
        for (t, l) in self.samples.iter().zip(&self.losses) {
            writeln!(w, "{t},{},{},{},{}", l[0], l[1], l[2], l[3])?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "a: {}\nb: {}\ncentroid rmse: {}\nfinal survivors a: {:.4} {:.4}\nfinal survivors b: {:.4} {:.4}\nstationary fraction: a {:.4}, b {:.4}\n",
            self.names[0],
            self.names[1],
            self.centroid_rmse,
            self.survivors[0][0],
            self.survivors[0][1],
            self.survivors[1][0],
            self.survivors[1][1],
            self.stationary[0],
            self.stationary[1],
        )
    }
}

/// Samples along each series' normalised clock.
const SAMPLES: usize = 100;

/// Compares two runs of the same scenario family, typically a continuum run
/// with an automaton ensemble mean. Time is rescaled so that both approaches
/// end at 1, positions are divided by the battlefield size.
pub fn compare(name_a: &str, a: &MetricSeries, name_b: &str, b: &MetricSeries) -> Result<ComparisonReport> {
    if family(name_a) != family(name_b) {
        return Err(Error::ScenarioMismatch(format!("{name_a} and {name_b} are different scenarios")));
    }
    if a.records.is_empty() || b.records.is_empty() {
        return Err(Error::ScenarioMismatch("cannot compare an empty run".into()));
    }
    let end = |s: &MetricSeries| s.normalised_time(s.records.last().map_or(0.0, |r| r.t));
    let tau_end = end(a).min(end(b));
    let real = |s: &MetricSeries, tau: f64| {
        let t0 = s.records[0].t;
        let span = match s.contact_time() {
            Some(tc) if tc > t0 => tc - t0,
            _ => s.duration(),
        };
        t0 + tau * span
    };
    let frac = |m: f64, m0: f64| if m0 > 0.0 { m / m0 } else { 0.0 };
    let (a0, b0) = (a.records[0].mass, b.records[0].mass);
    let mut samples = Vec::with_capacity(SAMPLES + 1);
    let mut losses = Vec::with_capacity(SAMPLES + 1);
    let (mut sq, mut n) = (0.0, 0usize);
    for k in 0..=SAMPLES {
        let tau = tau_end * k as f64 / SAMPLES as f64;
        let (ra, rb) = (a.at(real(a, tau)), b.at(real(b, tau)));
        for f in 0..2 {
            if let (Some(p), Some(q)) = (ra.centroid[f], rb.centroid[f]) {
                let dx = p.0 / a.extent.0 - q.0 / b.extent.0;
                let dy = p.1 / a.extent.1 - q.1 / b.extent.1;
                sq += dx * dx + dy * dy;
                n += 1;
            }
        }
        samples.push(tau);
        losses.push([frac(ra.mass[0], a0[0]), frac(ra.mass[1], a0[1]), frac(rb.mass[0], b0[0]), frac(rb.mass[1], b0[1])]);
    }
    let last = |s: &MetricSeries, m0: [f64; 2]| {
        let r = s.records.last().map_or([0.0; 2], |r| r.mass);
        [frac(r[0], m0[0]), frac(r[1], m0[1])]
    };
    let still = |s: &MetricSeries| {
        let d = s.duration();
        match s.stationary_window(0, 0.1, SAMPLES) {
            Some((t0, t1)) if d > 0.0 => (t1 - t0) / d,
            _ => 0.0,
        }
    };
    Ok(ComparisonReport {
        names: [name_a.to_string(), name_b.to_string()],
        samples,
        centroid_rmse: if n > 0 { (sq / n as f64).sqrt() } else { 0.0 },
        losses,
        survivors: [last(a, a0), last(b, b0)],
        stationary: [still(a), still(b)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Frame, Mass, SeriesBuilder};

    fn approach(shift: (f64, f64)) -> MetricSeries {
        let mut b = SeriesBuilder::new(12.0, (50.0, 50.0));
        for k in 0..=40 {
            let x = 10.0 + 0.5 * k.min(20) as f64;
            let p = |x: f64, y: f64| vec![Mass { x: x + shift.0, y: y + shift.1, m: 100.0 - k as f64 }];
            b.push(&Frame { t: k as f64, forces: [p(x, 25.0), p(50.0 - x, 25.0)] });
        }
        b.finish()
    }

    #[test]
    fn families() {
        assert_eq!(family("precess-pde-offset-clockwise"), "precess");
        assert_eq!(family("precess-ca-flag-offset"), "precess");
        assert_eq!(family("circle-pde"), "circle");
        assert_eq!(family("classic-fronts-ca"), "classic-fronts");
        assert_eq!(family("mine"), "mine");
    }

    #[test]
    fn self_comparison_is_exact() {
        let s = approach((0.0, 0.0));
        let r = compare("circle-pde", &s, "circle-pde", &s).unwrap();
        assert_eq!(r.centroid_rmse, 0.0);
        assert_eq!(r.survivors[0], r.survivors[1]);
        assert!(r.stationary[0] > 0.4, "{:?}", r.stationary);
    }

    #[test]
    fn constant_offset_gives_its_length() {
        let r = compare("circle-pde", &approach((0.0, 0.0)), "circle-ca", &approach((3.0, 4.0))).unwrap();
        assert!((r.centroid_rmse - 5.0 / 50.0).abs() < 1e-12, "{}", r.centroid_rmse);
    }

    #[test]
    fn different_scenarios_refuse() {
        let s = approach((0.0, 0.0));
        assert!(matches!(compare("circle-pde", &s, "precess-ca", &s), Err(Error::ScenarioMismatch(_))));
    }
}

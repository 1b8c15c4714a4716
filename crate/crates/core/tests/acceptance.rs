//! End-to-end behaviour of both engines on the built-in scenarios.
//!
//! Runs as a plain binary so that every check prints its verdict line even
//! under captured test output. `ACCEPTANCE_ONLY=3,5` runs a subset.
//!
//! At the tabulated end times the continuum forces have barely met, so the
//! behavioural checks on fronts, passing, precession and encirclement run
//! the same scenarios over longer horizons (see `HORIZON`).

use std::collections::{BTreeMap, BTreeSet};
use std::env;
use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use combat_core::analysis::{
    ensemble, run_ca, run_pde, run_pde_with, EnsembleConfig, Frame, MetricRecord, MetricSeries, Rotation,
    SeriesBuilder, PRECESSION_THRESHOLD, SECTORS,
};
use combat_core::ca::{
    ca_step, fire_phase, penalty, penalty_terms, Agent, CaSetup, CaState, Cell, Health, Sensed, Side,
};
use combat_core::integrator::{run_observed, RunTrajectory};
use combat_core::scenarios::{builtin, builtin_names, CaScenario, PdeScenario};
use combat_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

/// Horizons of the behavioural continuum runs.
const HORIZON: &[(&str, f64)] = &[
    ("classic-fronts-pde", 0.1),
    ("classic-fronts-pde-offset", 0.2),
    ("precess-pde", 0.04),
    ("precess-pde-offset-anticlockwise", 0.035),
    ("precess-pde-offset-clockwise", 0.035),
    ("circle-pde", 0.08),
    ("circle-pde-high-d", 0.1),
];

fn pde_builtin(name: &str) -> Result<PdeScenario> {
    Ok(builtin(name)?.pde()?.clone())
}

fn ca_builtin(name: &str) -> Result<CaScenario> {
    Ok(builtin(name)?.ca()?.clone())
}

fn extended(name: &str) -> Result<PdeScenario> {
    let mut s = pde_builtin(name)?;
    s.t_end = HORIZON.iter().find(|(n, _)| *n == name).expect("listed horizon").1;
    Ok(s)
}

fn complete(name: &str, traj: &RunTrajectory) -> Option<Verdict> {
    traj.failure.as_ref().map(|f| (false, format!("{name} stopped early: {f}")))
}

fn attempt(f: impl FnOnce() -> Result<Verdict>) -> Verdict {
    f().unwrap_or_else(|e| (false, format!("error: {e}")))
}

fn conservation() -> Verdict {
    attempt(|| {
        let mut s = pde_builtin("classic-fronts-pde")?;
        for p in [&mut s.u, &mut s.v] {
            p.aimed_fire = 0.0;
            p.fire_rate = 0.0;
        }
        let start = Instant::now();
        let (traj, _) = run_pde(&s)?;
        let secs = start.elapsed().as_secs_f64();
        if let Some(v) = complete("classic-fronts-pde", &traj) {
            return Ok(v);
        }
        let first = traj.series[0];
        let last = traj.series.last().unwrap();
        let drift = [
            (last.mass_u - first.mass_u).abs() / first.mass_u,
            (last.mass_v - first.mass_v).abs() / first.mass_v,
        ];
        let ok = drift.iter().all(|&d| d < 1e-3) && secs < 60.0;
        Ok((ok, format!("drift u {:.2e}, v {:.2e} (limit 1e-3); {secs:.1} s (limit 60 s)", drift[0], drift[1])))
    })
}

fn positivity() -> Verdict {
    attempt(|| {
        let mut worst = f64::INFINITY;
        let mut notes = Vec::new();
        let mut ok = true;
        for name in builtin_names().iter().filter(|n| n.contains("-pde")) {
            let s = pde_builtin(name)?;
            let (traj, _) = run_pde(&s)?;
            if let Some(v) = complete(name, &traj) {
                return Ok(v);
            }
            let pre = traj.min_before_clamp();
            let post = traj.snapshots.iter().map(|s| s.u.min().min(s.v.min())).fold(f64::INFINITY, f64::min);
            worst = worst.min(pre);
            if pre < -s.atol || post < 0.0 {
                ok = false;
                notes.push(format!("{name}: pre {pre:.2e}, post {post:.2e}"));
            }
        }
        let detail = if ok {
            format!("7 runs, lowest pre-clamp density {worst:.2e} (limit -1e-3), no negative snapshot cell")
        } else {
            notes.join("; ")
        };
        Ok((ok, detail))
    })
}

fn symmetric_fronts() -> Verdict {
    attempt(|| {
        let s = extended("classic-fronts-pde")?;
        let model = s.model()?;
        let radius = s.u.sensor_radius.max(s.v.sensor_radius);
        let mut builder = SeriesBuilder::new(radius, (s.grid.width(), s.grid.height()));
        let mut asym: f64 = 0.0;
        let traj = run_observed(&s.initial_state(), &model, &s.integrator(), |st| {
            builder.push(&Frame::from_pde(st));
            asym = asym.max(st.u.max_abs_diff(&st.v.point_reflect()));
        });
        if let Some(v) = complete("classic-fronts-pde", &traj) {
            return Ok(v);
        }
        let series = builder.finish();
        let Some(k0) = series.contact_index() else {
            return Ok((false, "the forces never come into contact".into()));
        };
        let fronts = series.records[k0..]
            .iter()
            .map(|r| r.aspect[0].unwrap_or(0.0).min(r.aspect[1].unwrap_or(0.0)))
            .fold(0.0, f64::max);
        let run = series.duration();
        let window = |k: usize| series.stationary_window(k, 0.1, 100).map_or(0.0, |(a, b)| (b - a) / run);
        let still = [window(0), window(1)];
        let ok = fronts > 3.0 && still.iter().all(|&w| w >= 0.25) && asym <= 1e-6;
        Ok((
            ok,
            format!(
                "contact t={:.4}; peak aspect of the weaker front {fronts:.2} (need > 3); stationary share u {:.2}, v {:.2} (need >= 0.25); asymmetry {asym:.1e} (limit 1e-6)",
                series.records[k0].t, still[0], still[1]
            ),
        ))
    })
}

fn offset_fronts() -> Verdict {
    attempt(|| {
        let s = extended("classic-fronts-pde-offset")?;
        let (traj, series) = run_pde(&s)?;
        if let Some(v) = complete("classic-fronts-pde-offset", &traj) {
            return Ok(v);
        }
        let passed = series.records.iter().find_map(|r| match r.centroid {
            [Some(u), Some(v)] if u.0 > v.0 => Some(r.t),
            _ => None,
        });
        let last = series.records.last().unwrap();
        let limit = 15.0 * s.grid.dx;
        let goals = [s.goal_flag(combat_core::scenarios::PdeForce::U), s.goal_flag(combat_core::scenarios::PdeForce::V)];
        let dist: Vec<f64> = (0..2)
            .map(|k| last.centroid[k].map_or(f64::INFINITY, |c| (c.0 - goals[k].0).hypot(c.1 - goals[k].1)))
            .collect();
        let ok = passed.is_some() && dist.iter().all(|&d| d <= limit);
        Ok((
            ok,
            format!(
                "red passes blue at {}; final distance to goal u {:.2}, v {:.2} (limit {limit} = 15 cells)",
                passed.map_or("never".to_string(), |t| format!("t={t:.4}")),
                dist[0],
                dist[1]
            ),
        ))
    })
}

fn precession_of(name: &str) -> Result<std::result::Result<f64, String>> {
    let s = extended(name)?;
    let (traj, series) = run_pde(&s)?;
    if let Some(f) = &traj.failure {
        return Ok(Err(format!("{name} stopped early: {f}")));
    }
    if series.contact_index().is_none() {
        return Ok(Err(format!("{name}: no contact")));
    }
    Ok(Ok(series.precession(PRECESSION_THRESHOLD).total_rotation))
}

fn continuum_precession() -> Verdict {
    attempt(|| {
        let mut rot = [0.0; 3];
        for (k, name) in ["precess-pde", "precess-pde-offset-anticlockwise", "precess-pde-offset-clockwise"]
            .iter()
            .enumerate()
        {
            match precession_of(name)? {
                Ok(r) => rot[k] = r,
                Err(e) => return Ok((false, e)),
            }
        }
        let [none, acw, cw] = rot;
        let mirror = (acw + cw).abs() / acw.abs().max(f64::MIN_POSITIVE);
        let ok = none.abs() < 0.2 && acw > PI / 2.0 && cw < 0.0 && mirror <= 0.05;
        Ok((
            ok,
            format!(
                "rotation: no offset {none:+.3} (need |.| < 0.2), anticlockwise {acw:+.3} (need > {:.3}), clockwise {cw:+.3} (mismatch {:.1}%, limit 5%)",
                PI / 2.0,
                100.0 * mirror
            ),
        ))
    })
}

/// Larger of the two encirclement fractions.
fn enc(r: &MetricRecord) -> f64 {
    r.encirclement[0].max(r.encirclement[1])
}

#[derive(Clone)]
struct CircleRun {
    series: MetricSeries,
    peak: f64,
    /// Normalised time at which encirclement falls below 10/16 after its peak.
    breakaway: Option<f64>,
}

fn circle(name: &str) -> Result<std::result::Result<CircleRun, String>> {
    // both circle checks look at the same runs
    static CACHE: Mutex<BTreeMap<String, std::result::Result<CircleRun, String>>> = Mutex::new(BTreeMap::new());
    if let Some(hit) = CACHE.lock().unwrap().get(name) {
        return Ok(hit.clone());
    }
    let s = extended(name)?;
    let (traj, series) = run_pde(&s)?;
    let out = match (&traj.failure, series.contact_index()) {
        (Some(f), _) => Err(format!("{name} stopped early: {f}")),
        (None, None) => Err(format!("{name}: no contact")),
        (None, Some(k0)) => {
            let after = &series.records[k0..];
            let peak = after.iter().map(enc).fold(0.0, f64::max);
            let kp = after.iter().position(|r| enc(r) == peak).unwrap();
            let breakaway = after[kp..]
                .iter()
                .find(|r| enc(r) < 10.0 / SECTORS as f64)
                .map(|r| series.normalised_time(r.t));
            Ok(CircleRun { series, peak, breakaway })
        }
    };
    CACHE.lock().unwrap().insert(name.to_string(), out.clone());
    Ok(out)
}

fn encirclement() -> Verdict {
    attempt(|| {
        let low = match circle("circle-pde")? {
            Ok(c) => c,
            Err(e) => return Ok((false, e)),
        };
        let high = match circle("circle-pde-high-d")? {
            Ok(c) => c,
            Err(e) => return Ok((false, e)),
        };
        let full = 14.0 / SECTORS as f64;
        let earlier = match (high.breakaway, low.breakaway) {
            (Some(h), Some(l)) => h < l,
            (Some(_), None) => true,
            _ => false,
        };
        let ok = low.peak >= full && high.peak >= full && earlier;
        let fmt = |b: Option<f64>| b.map_or("none".to_string(), |t| format!("{t:.2}"));
        Ok((
            ok,
            format!(
                "peak encirclement d=1e-5 {:.3}, d=1e-4 {:.3} (need >= {full:.3}); breakaway at normalised time d=1e-4 {}, d=1e-5 {} (need the former earlier)",
                low.peak,
                high.peak,
                fmt(high.breakaway),
                fmt(low.breakaway)
            ),
        ))
    })
}

fn loss_nonlinearity() -> Verdict {
    attempt(|| {
        let run = match circle("circle-pde")? {
            Ok(c) => c,
            Err(e) => return Ok((false, e)),
        };
        let series = &run.series;
        let tc = series.contact_time().unwrap();
        let window = 0.05 * series.duration();
        let rates = series.loss_rates(None, window);
        let full = 14.0 / SECTORS as f64;
        // contact phase: the window opening at first contact
        let contact = rates
            .iter()
            .filter(|(mid, _)| mid - 0.5 * window >= tc)
            .map(|&(_, r)| r)
            .next();
        let encircled: Vec<f64> = rates
            .iter()
            .filter(|(mid, _)| {
                let (a, b) = (mid - 0.5 * window, mid + 0.5 * window);
                a >= tc && series.records.iter().filter(|r| r.t >= a && r.t <= b).all(|r| enc(r) >= full)
            })
            .map(|&(_, r)| r)
            .collect();
        let (Some(c), false) = (contact, encircled.is_empty()) else {
            return Ok((false, "no window of stationary encirclement after contact".into()));
        };
        let e = encircled.iter().sum::<f64>() / encircled.len() as f64;
        let ratio = if c.min(e) > 0.0 { c.max(e) / c.min(e) } else { f64::INFINITY };
        Ok((
            ratio >= 2.0,
            format!(
                "loss rate at contact {c:.3e}, while encircled {e:.3e} over {} windows; ratio {ratio:.2} (need >= 2)",
                encircled.len()
            ),
        ))
    })
}

/// Brute-force penalty from the roster alone. Population sums run in
/// lattice-scan order (row by row), so results agree bit for bit.
fn oracle(state: &CaState, setup: &CaSetup, id: usize, c: Cell, w: &[f64; 6]) -> [f64; 6] {
    let me = &state.agents()[id];
    let p = setup.params(me.side);
    let mut seen: Vec<&Agent> = state
        .agents()
        .iter()
        .enumerate()
        .filter(|&(k, a)| {
            k != id
                && a.health != Health::Killed
                && (a.pos.0 - me.pos.0).abs() <= p.sensor_range
                && (a.pos.1 - me.pos.1).abs() <= p.sensor_range
        })
        .map(|(_, a)| a)
        .collect();
    seen.sort_by_key(|a| (a.pos.1, a.pos.0));
    let mut out = [0.0; 6];
    for (k, (friend, alive)) in [(true, true), (false, true), (true, false), (false, false)].into_iter().enumerate() {
        let group: Vec<f64> = seen
            .iter()
            .filter(|a| (a.side == me.side) == friend && (a.health == Health::Alive) == alive)
            .map(|a| (f64::from((a.pos.0 - c.0).pow(2) + (a.pos.1 - c.1).pow(2))).sqrt())
            .collect();
        if !group.is_empty() && w[k] != 0.0 {
            let sum = group.iter().fold(0.0, |s, d| s + d);
            out[k] = w[k] * sum / (2f64.sqrt() * f64::from(p.sensor_range) * group.len() as f64);
        }
    }
    let ratio = |weight: f64, f: Cell| {
        let new = (f64::from((f.0 - c.0).pow(2) + (f.1 - c.1).pow(2))).sqrt();
        let old = (f64::from((f.0 - me.pos.0).pow(2) + (f.1 - me.pos.1).pow(2))).sqrt();
        weight * new / old.max(1.0)
    };
    if w[4] != 0.0 {
        out[4] = ratio(w[4], p.flag);
    }
    if w[5] != 0.0 {
        out[5] = ratio(w[5], setup.params(me.side.other()).flag);
    }
    out
}

fn random_setup(rng: &mut ChaCha8Rng) -> CaSetup {
    let mut base = ca_builtin("precess-ca").unwrap().setup;
    let size = rng.gen_range(8..30);
    base.size = size;
    for p in [&mut base.red, &mut base.blue] {
        p.squad_size = rng.gen_range(1..25);
        p.sensor_range = rng.gen_range(1..7);
        p.fire_range = rng.gen_range(1..4);
        p.prob_hit = rng.gen_range(0.0..0.5);
        p.start_centre = (rng.gen_range(0..size), rng.gen_range(0..size));
        p.start_size = (size, size);
        p.flag = (rng.gen_range(0..size), rng.gen_range(0..size));
        for w in p.weights.iter_mut() {
            *w = rng.gen_range(-100.0..100.0);
        }
    }
    base.blue.squad_size = base.blue.squad_size.min((size * size) as usize - base.red.squad_size);
    base
}

fn determinism_and_oracle() -> Verdict {
    attempt(|| {
        let s = ca_builtin("precess-ca")?;
        let bytes = |seed: u64| -> Result<Vec<u8>> {
            let (traj, series) = run_ca(&s, seed)?;
            let mut out = format!("{traj:?}").into_bytes();
            series.write_csv(&mut out).expect("in-memory write");
            Ok(out)
        };
        let (a, b, other) = (bytes(17)?, bytes(17)?, bytes(18)?);
        let repeat = a == b && a != other;

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (mut states, mut evaluations, mut mismatches, mut injured) = (0, 0usize, 0usize, 0usize);
        while states < 1000 {
            let setup = random_setup(&mut rng);
            let Ok(mut state) = CaState::initial(&setup, rng.gen()) else {
                continue;
            };
            for _ in 0..rng.gen_range(0..5) {
                ca_step(&mut state, &setup);
            }
            states += 1;
            injured += state.agents().iter().filter(|a| a.health == Health::Injured).count();
            for id in 0..state.agents().len() {
                let me = state.agents()[id].clone();
                if !me.health.is_living() {
                    continue;
                }
                let mut w = setup.params(me.side).weights;
                for x in w.iter_mut() {
                    if rng.gen_bool(0.2) {
                        *x = 0.0;
                    }
                }
                let sensed = Sensed::gather(id, &state, &setup);
                let r = setup.params(me.side).move_range + 1;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let c = (me.pos.0 + dx, me.pos.1 + dy);
                        let want = oracle(&state, &setup, id, c, &w);
                        let total = want.iter().fold(0.0, |s, x| s + x);
                        evaluations += 1;
                        if penalty_terms(&sensed, c, &w) != want || penalty(&sensed, c, &w) != total {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
        let ok = repeat && mismatches == 0;
        Ok((
            ok,
            format!(
                "same seed identical: {}, other seed differs: {}; penalty oracle {mismatches} mismatches in {evaluations} evaluations over {states} states ({injured} injured agents)",
                a == b,
                a != other
            ),
        ))
    })
}

fn binomial_hits() -> Verdict {
    attempt(|| {
        let mut lines = Vec::new();
        let mut ok = true;
        for name in ["classic-fronts-ca", "circle-ca"] {
            let mut setup = ca_builtin(name)?.setup;
            setup.size = 10;
            for p in [&mut setup.red, &mut setup.blue] {
                p.defence = u32::MAX;
                p.flag = (0, 0);
            }
            let mut state = CaState::empty(10, 9);
            for x in 0..5 {
                for y in 0..2 {
                    state.place(Side::Red, (x, y))?;
                    state.place(Side::Blue, (x, y + 2))?;
                }
            }
            // expected shots per step from the geometry alone
            let mut mean = [0.0; 2];
            let mut var = [0.0; 2];
            for a in state.agents() {
                let p = setup.params(a.side);
                let targets = state
                    .agents()
                    .iter()
                    .filter(|b| b.side != a.side && (b.pos.0 - a.pos.0).abs().max((b.pos.1 - a.pos.1).abs()) <= p.fire_range)
                    .count();
                let shots = p.max_targets.limit().min(targets) as f64;
                let k = a.side.other().index();
                mean[k] += shots * p.prob_hit;
                var[k] += shots * p.prob_hit * (1.0 - p.prob_hit);
            }
            let steps = 100_000u64;
            let mut hits = [0u64; 2];
            for _ in 0..steps {
                let r = fire_phase(&mut state, &setup);
                hits[0] += r.hits[0];
                hits[1] += r.hits[1];
            }
            for k in 0..2 {
                let m = mean[k] * steps as f64;
                let sd = (var[k] * steps as f64).sqrt();
                let z = (hits[k] as f64 - m) / sd;
                ok &= z.abs() <= 3.0;
                lines.push(format!("{name} {} hit {} vs {m:.0} (z {z:+.2})", ["red", "blue"][k], hits[k]));
            }
        }
        Ok((ok, lines.join("; ")))
    })
}

fn ensemble_precession() -> Verdict {
    attempt(|| {
        let start = Instant::now();
        let cfg = EnsembleConfig::new(0..100);
        let sym = ensemble("precess-ca", &ca_builtin("precess-ca")?, &cfg);
        let offset_s = ca_builtin("precess-ca-flag-offset")?;
        let off = ensemble("precess-ca-flag-offset", &offset_s, &cfg);
        let secs = start.elapsed().as_secs_f64();

        // Red heads for the displaced flag; with the flag to the left of the
        // line between the forces Red passes Blue on that side, which turns
        // the axis clockwise.
        let red = offset_s.setup.red.start_centre;
        let blue = offset_s.setup.blue.start_centre;
        let goal = offset_s.setup.blue.flag;
        let axis = (blue.0 - red.0, blue.1 - red.1);
        let aim = (goal.0 - red.0, goal.1 - red.1);
        let expected = if axis.0 * aim.1 - axis.1 * aim.0 > 0 { Rotation::Clockwise } else { Rotation::Anticlockwise };
        let [cw, acw, _] = off.counts();
        let dominant = match cw.cmp(&acw) {
            std::cmp::Ordering::Greater => Rotation::Clockwise,
            std::cmp::Ordering::Less => Rotation::Anticlockwise,
            std::cmp::Ordering::Equal => Rotation::None,
        };
        let (fs, fo) = (sym.precession_frequency(), off.precession_frequency());
        let minority = fs < 0.5;
        let ok = minority && fo > fs && dominant == expected && secs < 300.0 && sym.failures.is_empty() && off.failures.is_empty();
        let [s_cw, s_acw, s_none] = sym.counts();
        let [_, _, o_none] = off.counts();
        Ok((
            ok,
            format!(
                "symmetric {:.0}% precess (cw {s_cw}, acw {s_acw}, none {s_none}; need < 50%); flag offset {:.0}% (cw {cw}, acw {acw}, none {o_none}), dominant {} (expected {}); {secs:.0} s (limit 300 s)",
                100.0 * fs,
                100.0 * fo,
                dominant.name(),
                expected.name()
            ),
        ))
    })
}

fn ensemble_fronts() -> Verdict {
    attempt(|| {
        let s = ca_builtin("classic-fronts-ca")?;
        let (mut crossed, mut monotone, mut front_losses, mut losses) = (0, 0, 0u64, 0u64);
        let seeds = 50;
        for seed in 0..seeds {
            let (traj, series) = run_ca(&s, seed)?;
            if series.crossed() {
                crossed += 1;
            }
            let alive = |r: &combat_core::ca::CaRecord| r.alive[0] + r.alive[1];
            if traj.records.windows(2).all(|w| w[1].alive[0] <= w[0].alive[0] && w[1].alive[1] <= w[0].alive[1]) {
                monotone += 1;
            }
            // front phase: first contact until the centroids have passed
            let d0 = direction(&series.records[0]);
            let start = series.contact_time().unwrap_or(f64::INFINITY);
            let end = series
                .records
                .iter()
                .find(|r| matches!((d0, direction(r)), (Some(a), Some(b)) if a.0 * b.0 + a.1 * b.1 < 0.0))
                .map_or(f64::INFINITY, |r| r.t);
            for w in traj.records.windows(2) {
                let lost = (alive(&w[0]) - alive(&w[1])) as u64;
                losses += lost;
                let t = w[1].step as f64;
                if t >= start && t <= end {
                    front_losses += lost;
                }
            }
        }
        let share = front_losses as f64 / losses.max(1) as f64;
        let pass_rate = crossed as f64 / seeds as f64;
        let ok = pass_rate >= 0.8 && monotone == seeds && share > 0.5;
        Ok((
            ok,
            format!(
                "passed in {crossed}/{seeds} runs (need 80%); alive counts non-increasing in {monotone}/{seeds}; {:.0}% of {losses} losses fall between contact and passing (need a majority)",
                100.0 * share
            ),
        ))
    })
}

fn direction(r: &MetricRecord) -> Option<(f64, f64)> {
    let (a, b) = (r.centroid[0]?, r.centroid[1]?);
    Some((b.0 - a.0, b.1 - a.1))
}

fn convergence() -> Verdict {
    attempt(|| {
        let s = pde_builtin("classic-fronts-pde")?;
        let (loose, _) = run_pde(&s)?;
        let mut cfg = s.integrator();
        cfg.atol = 1e-4;
        cfg.rtol = 1e-4;
        let (tight, _) = run_pde_with(&s, &cfg)?;
        for t in [&loose, &tight] {
            if let Some(v) = complete("classic-fronts-pde", t) {
                return Ok(v);
            }
        }
        let total = |t: &RunTrajectory| {
            let (u, v) = t.final_masses().unwrap();
            u + v
        };
        let rel = (total(&loose) - total(&tight)).abs() / total(&tight);
        Ok((
            rel < 1e-3,
            format!("final mass {:.6} vs {:.6}; relative change {rel:.2e} (limit 1e-3)", total(&loose), total(&tight)),
        ))
    })
}

fn main() {
    let only: Option<BTreeSet<usize>> = env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let checks: [(usize, &str, fn() -> Verdict); 12] = [
        (1, "conservation without attrition", conservation),
        (2, "positivity of every built-in continuum run", positivity),
        (3, "symmetric classic fronts", symmetric_fronts),
        (4, "offset classic fronts pass", offset_fronts),
        (5, "continuum precession", continuum_precession),
        (6, "circle encirclement and breakaway", encirclement),
        (7, "circle loss nonlinearity", loss_nonlinearity),
        (8, "automaton determinism and penalty oracle", determinism_and_oracle),
        (9, "point-blank hit statistics", binomial_hits),
        (10, "automaton precession ensemble", ensemble_precession),
        (11, "automaton classic fronts ensemble", ensemble_fronts),
        (12, "integrator tolerance convergence", convergence),
    ];
    let mut failed = Vec::new();
    for (n, title, check) in checks {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = check();
        println!(
            "criterion {n:>2} {} {title} [{:.0} s]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !ok {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

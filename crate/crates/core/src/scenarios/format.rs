//! Reading and writing the key–value scenario format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{CaScenario, Engine, PdeScenario, Scenario};
use crate::ca::{CaForceParams, CaSetup, Cell, MaxTargets};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pde::{PdeForceParams, SwitchMode};

const PDE_SCENARIO_KEYS: &[&str] = &["nx", "ny", "dx", "dy", "t_end", "tau0", "atol", "rtol", "safety", "snapshots"];
const CA_SCENARIO_KEYS: &[&str] = &["lattice", "steps", "snapshot_every"];
const PDE_FORCE_KEYS: &[&str] = &[
    "ID", "rho", "mu", "IT", "D", "C", "A_a", "A_r", "r_a", "r_r", "r_S", "dc", "attack", "d", "beta", "nu", "r_op",
    "switch",
];
const CA_FORCE_KEYS: &[&str] = &[
    "squad_size",
    "w1",
    "w2",
    "w3",
    "w4",
    "w5",
    "w6",
    "r_S",
    "r_F",
    "r_T",
    "w_M",
    "prob_hit",
    "max_targets",
    "defence",
    "cluster",
    "advance",
    "combat",
    "centre",
    "size",
    "flag",
];

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::param(key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::param(key, format!("must be finite, got `{v}`")));
    }
    Ok(x)
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::param(key, format!("expected an integer, got `{v}`")))
}

fn pair<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<(T, T)> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| Error::param(key, format!("expected `x, y`, got `{v}`")))?;
    Ok((f(key, a.trim())?, f(key, b.trim())?))
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn set_pde_force(p: &mut PdeForceParams, key: &str, v: &str) -> Result<()> {
    match key {
        "ID" => p.peak_density = num(key, v)?,
        "rho" => p.profile_radius = num(key, v)?,
        "mu" => p.centre = pair(key, v, num)?,
        "IT" => p.inner_threshold = num(key, v)?,
        "D" => p.diffusion = num(key, v)?,
        "C" => p.goal_velocity = pair(key, v, num)?,
        "A_a" => p.attraction = num(key, v)?,
        "A_r" => p.repulsion = num(key, v)?,
        "r_a" => p.attraction_radius = num(key, v)?,
        "r_r" => p.repulsion_radius = num(key, v)?,
        "r_S" => p.sensor_radius = num(key, v)?,
        "dc" => p.combat_threshold = num(key, v)?,
        "attack" => p.attack = int(key, v)?,
        "d" => p.aimed_fire = num(key, v)?,
        "beta" => p.fire_rate = num(key, v)?,
        "nu" => p.fire_decay = num(key, v)?,
        "r_op" => p.operating_range = num(key, v)?,
        "switch" => {
            p.switch_mode = SwitchMode::parse(v)
                .ok_or_else(|| Error::param(key, format!("expected none, front or pursuit, got `{v}`")))?
        }
        _ => return Err(Error::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn pde_force_entries(p: &PdeForceParams) -> Vec<(&'static str, String)> {
    vec![
        ("ID", f(p.peak_density)),
        ("rho", f(p.profile_radius)),
        ("mu", format!("{}, {}", f(p.centre.0), f(p.centre.1))),
        ("IT", f(p.inner_threshold)),
        ("D", f(p.diffusion)),
        ("C", format!("{}, {}", f(p.goal_velocity.0), f(p.goal_velocity.1))),
        ("A_a", f(p.attraction)),
        ("A_r", f(p.repulsion)),
        ("r_a", f(p.attraction_radius)),
        ("r_r", f(p.repulsion_radius)),
        ("r_S", f(p.sensor_radius)),
        ("dc", f(p.combat_threshold)),
        ("attack", p.attack.to_string()),
        ("d", f(p.aimed_fire)),
        ("beta", f(p.fire_rate)),
        ("nu", f(p.fire_decay)),
        ("r_op", f(p.operating_range)),
        ("switch", p.switch_mode.name().to_string()),
    ]
}

fn set_ca_force(p: &mut CaForceParams, key: &str, v: &str) -> Result<()> {
    let cell = |v: &str| -> Result<Cell> { pair(key, v, |k, s| int::<i32>(k, s)) };
    match key {
        "squad_size" => p.squad_size = int(key, v)?,
        "w1" | "w2" | "w3" | "w4" | "w5" | "w6" => {
            let k = key[1..].parse::<usize>().expect("weight index") - 1;
            p.weights[k] = num(key, v)?;
        }
        "r_S" => p.sensor_range = int(key, v)?,
        "r_F" => p.fire_range = int(key, v)?,
        "r_T" => p.threshold_range = int(key, v)?,
        "w_M" => p.move_range = int(key, v)?,
        "prob_hit" => p.prob_hit = num(key, v)?,
        "max_targets" => {
            p.max_targets = if v.eq_ignore_ascii_case("all") {
                MaxTargets::All
            } else {
                MaxTargets::Count(int(key, v)?)
            }
        }
        "defence" => p.defence = int(key, v)?,
        "cluster" => p.cluster_threshold = int(key, v)?,
        "advance" => p.advance_threshold = int(key, v)?,
        "combat" => p.combat_threshold = int(key, v)?,
        "centre" => p.start_centre = cell(v)?,
        "size" => p.start_size = cell(v)?,
        "flag" => p.flag = cell(v)?,
        _ => return Err(Error::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn ca_force_entries(p: &CaForceParams) -> Vec<(&'static str, String)> {
    let mut out = vec![("squad_size", p.squad_size.to_string())];
    for (k, name) in ["w1", "w2", "w3", "w4", "w5", "w6"].into_iter().enumerate() {
        out.push((name, f(p.weights[k])));
    }
    out.extend([
        ("r_S", p.sensor_range.to_string()),
        ("r_F", p.fire_range.to_string()),
        ("r_T", p.threshold_range.to_string()),
        ("w_M", p.move_range.to_string()),
        ("prob_hit", f(p.prob_hit)),
        (
            "max_targets",
            match p.max_targets {
                MaxTargets::All => "all".to_string(),
                MaxTargets::Count(n) => n.to_string(),
            },
        ),
        ("defence", p.defence.to_string()),
        ("cluster", p.cluster_threshold.to_string()),
        ("advance", p.advance_threshold.to_string()),
        ("combat", p.combat_threshold.to_string()),
        ("centre", format!("{}, {}", p.start_centre.0, p.start_centre.1)),
        ("size", format!("{}, {}", p.start_size.0, p.start_size.1)),
        ("flag", format!("{}, {}", p.flag.0, p.flag.1)),
    ]);
    out
}

fn set_pde_scenario(s: &mut PdeScenario, key: &str, v: &str) -> Result<()> {
    let g = s.grid;
    match key {
        "nx" => s.grid = Grid::new(int(key, v)?, g.ny, g.dx, g.dy)?,
        "ny" => s.grid = Grid::new(g.nx, int(key, v)?, g.dx, g.dy)?,
        "dx" => s.grid = Grid::new(g.nx, g.ny, num(key, v)?, g.dy)?,
        "dy" => s.grid = Grid::new(g.nx, g.ny, g.dx, num(key, v)?)?,
        "t_end" => s.t_end = num(key, v)?,
        "tau0" => s.tau0 = num(key, v)?,
        "atol" => s.atol = num(key, v)?,
        "rtol" => s.rtol = num(key, v)?,
        "safety" => s.safety = num(key, v)?,
        "snapshots" => s.snapshots = int(key, v)?,
        _ => return Err(Error::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn set_ca_scenario(s: &mut CaScenario, key: &str, v: &str) -> Result<()> {
    match key {
        "lattice" => s.setup.size = int(key, v)?,
        "steps" => s.steps = int(key, v)?,
        "snapshot_every" => s.snapshot_every = int(key, v)?,
        _ => return Err(Error::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn force_names(engine: &Engine) -> [&'static str; 2] {
    match engine {
        Engine::Pde(_) => ["u", "v"],
        Engine::Ca(_) => ["red", "blue"],
    }
}

/// Sets one field addressed as `section.key`, `scenario.key` or a bare
/// scenario key.
pub(super) fn set_path(s: &mut Scenario, path: &str, v: &str) -> Result<()> {
    let (section, key) = match path.split_once('.') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => ("scenario", path),
    };
    let [first, second] = force_names(&s.engine);
    match (&mut s.engine, section) {
        (_, "scenario") if key == "name" => s.name = v.to_string(),
        (Engine::Pde(p), "scenario") => set_pde_scenario(p, key, v)?,
        (Engine::Ca(c), "scenario") => set_ca_scenario(c, key, v)?,
        (Engine::Pde(p), "u") => set_pde_force(&mut p.u, key, v)?,
        (Engine::Pde(p), "v") => set_pde_force(&mut p.v, key, v)?,
        (Engine::Ca(c), "red") => set_ca_force(&mut c.setup.red, key, v)?,
        (Engine::Ca(c), "blue") => set_ca_force(&mut c.setup.blue, key, v)?,
        _ => {
            return Err(Error::UnknownKey(format!(
                "{path} (sections are scenario, {first}, {second})"
            )))
        }
    }
    Ok(())
}

pub(super) fn write(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]");
    let _ = writeln!(out, "name = {}", s.name);
    let _ = writeln!(out, "engine = {}", s.engine_name());
    let (head, forces): (Vec<(&str, String)>, [Vec<(&str, String)>; 2]) = match &s.engine {
        Engine::Pde(p) => (
            vec![
                ("nx", p.grid.nx.to_string()),
                ("ny", p.grid.ny.to_string()),
                ("dx", f(p.grid.dx)),
                ("dy", f(p.grid.dy)),
                ("t_end", f(p.t_end)),
                ("tau0", f(p.tau0)),
                ("atol", f(p.atol)),
                ("rtol", f(p.rtol)),
                ("safety", f(p.safety)),
                ("snapshots", p.snapshots.to_string()),
            ],
            [pde_force_entries(&p.u), pde_force_entries(&p.v)],
        ),
        Engine::Ca(c) => (
            vec![
                ("lattice", c.setup.size.to_string()),
                ("steps", c.steps.to_string()),
                ("snapshot_every", c.snapshot_every.to_string()),
            ],
            [ca_force_entries(&c.setup.red), ca_force_entries(&c.setup.blue)],
        ),
    };
    for (k, v) in head {
        let _ = writeln!(out, "{k} = {v}");
    }
    for (name, entries) in force_names(&s.engine).iter().zip(forces) {
        let _ = writeln!(out, "\n[force.{name}]");
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
    out
}

struct Section {
    line: usize,
    entries: BTreeMap<String, (usize, String)>,
}

pub(super) fn read(text: &str) -> Result<Scenario> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("unterminated section header `{line}`") })?
                .trim()
                .to_string();
            let known = ["scenario", "force.u", "force.v", "force.red", "force.blue"];
            if !known.contains(&name.as_str()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown section `[{name}]`; expected one of {}", known.join(", ")),
                });
            }
            if sections.contains_key(&name) {
                return Err(Error::Parse { line: line_no, message: format!("section `[{name}]` repeated") });
            }
            sections.insert(name.clone(), Section { line: line_no, entries: BTreeMap::new() });
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected `key = value`, got `{line}`") })?;
        let section = current
            .as_ref()
            .ok_or_else(|| Error::Parse { line: line_no, message: "key outside any section".into() })?;
        let entries = &mut sections.get_mut(section).expect("open section").entries;
        let key = key.trim().to_string();
        if entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
            return Err(Error::Parse { line: line_no, message: format!("key `{key}` repeated") });
        }
    }

    let head = sections.remove("scenario").ok_or_else(|| Error::MissingField("[scenario]".into()))?;
    let mut head_entries = head.entries;
    let take = |entries: &mut BTreeMap<String, (usize, String)>, key: &str, section: &str| {
        entries
            .remove(key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::MissingField(format!("{section}.{key}")))
    };
    let name = take(&mut head_entries, "name", "scenario")?;
    let engine = take(&mut head_entries, "engine", "scenario")?;
    let (mut scenario, head_keys, force_keys) = match engine.as_str() {
        "pde" => (
            Scenario { name, engine: Engine::Pde(blank_pde()) },
            PDE_SCENARIO_KEYS,
            PDE_FORCE_KEYS,
        ),
        "ca" => (Scenario { name, engine: Engine::Ca(blank_ca()) }, CA_SCENARIO_KEYS, CA_FORCE_KEYS),
        other => {
            return Err(Error::Parse {
                line: head.line,
                message: format!("unknown engine `{other}`; expected pde or ca"),
            })
        }
    };

    let fill = |scenario: &mut Scenario,
                mut entries: BTreeMap<String, (usize, String)>,
                keys: &[&str],
                section: &str|
     -> Result<()> {
        for &key in keys {
            let (line, value) = entries
                .remove(key)
                .ok_or_else(|| Error::MissingField(format!("{section}.{key}")))?;
            set_path(scenario, &format!("{section}.{key}"), &value).map_err(|e| match e {
                Error::Parameter { .. } | Error::Geometry(_) => Error::Parse { line, message: e.to_string() },
                e => e,
            })?;
        }
        if let Some((key, (line, _))) = entries.into_iter().next() {
            return Err(Error::Parse { line, message: Error::UnknownKey(format!("{section}.{key}")).to_string() });
        }
        Ok(())
    };
    fill(&mut scenario, head_entries, head_keys, "scenario")?;
    for name in force_names(&scenario.engine) {
        let section = sections
            .remove(&format!("force.{name}"))
            .ok_or_else(|| Error::MissingField(format!("[force.{name}]")))?;
        fill(&mut scenario, section.entries, force_keys, name)?;
    }
    if let Some((name, section)) = sections.into_iter().next() {
        return Err(Error::Parse {
            line: section.line,
            message: format!("section `[{name}]` does not belong to a {} scenario", scenario.engine_name()),
        });
    }
    Ok(scenario)
}

fn blank_pde() -> PdeScenario {
    PdeScenario {
        grid: Grid::new(100, 100, 0.5, 0.5).expect("default grid"),
        u: PdeForceParams::default(),
        v: PdeForceParams::default(),
        t_end: 1e-2,
        tau0: 1e-7,
        atol: 1e-3,
        rtol: 1e-3,
        safety: 0.9,
        snapshots: 11,
    }
}

fn blank_ca() -> CaScenario {
    CaScenario {
        setup: CaSetup { size: 100, red: CaForceParams::default(), blue: CaForceParams::default() },
        steps: 0,
        snapshot_every: 0,
    }
}

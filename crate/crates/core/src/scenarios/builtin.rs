//! Built-in scenarios: the ISAAC rule sets and the continuum parameter sets
//! of the three test scenarios.
//!
//! Continuum profile centres are tabulated as matrix indices (row, column),
//! that is `(y, x)`; they are transposed here. The symmetric scenarios are
//! unaffected, and only under this reading does the scenario labelled
//! anticlockwise turn anticlockwise in a y-up frame.

use super::{CaScenario, Engine, PdeScenario, Scenario};
use crate::ca::{CaForceParams, CaSetup, MaxTargets};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pde::{PdeForceParams, SwitchMode};

const NAMES: &[&str] = &[
    "classic-fronts-ca",
    "classic-fronts-pde",
    "classic-fronts-pde-offset",
    "precess-ca",
    "precess-ca-flag-offset",
    "precess-pde",
    "precess-pde-offset-anticlockwise",
    "precess-pde-offset-clockwise",
    "circle-ca",
    "circle-pde",
    "circle-pde-high-d",
];

pub fn builtin_names() -> &'static [&'static str] {
    NAMES
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let engine = match name {
        "classic-fronts-ca" => Engine::Ca(classic_fronts_ca()),
        "precess-ca" => Engine::Ca(precess_ca(false)),
        "precess-ca-flag-offset" => Engine::Ca(precess_ca(true)),
        "circle-ca" => Engine::Ca(circle_ca()),
        "classic-fronts-pde" => Engine::Pde(classic_fronts_pde((15.0, 15.0), (35.0, 35.0), 1e-2)),
        "classic-fronts-pde-offset" => Engine::Pde(classic_fronts_pde((19.0, 15.0), (31.0, 35.0), 2e-2)),
        "precess-pde" => Engine::Pde(precess_pde((15.0, 15.0), (35.0, 35.0), 4e-3)),
        "precess-pde-offset-anticlockwise" => Engine::Pde(precess_pde((15.0, 18.0), (35.0, 32.0), 3.5e-3)),
        "precess-pde-offset-clockwise" => {
            // mirror image of the anticlockwise case across the diagonal
            Engine::Pde(precess_pde((18.0, 15.0), (32.0, 35.0), 3.5e-3))
        }
        "circle-pde" => Engine::Pde(circle_pde(4.0, 18.0, 1e-5, 8e-3)),
        "circle-pde-high-d" => Engine::Pde(circle_pde(5.0, 20.0, 1e-4, 1e-2)),
        _ => {
            return Err(Error::UnknownScenario {
                name: name.to_string(),
                valid: NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(Scenario { name: name.to_string(), engine })
}

/// Table centre given as (row, column).
fn mu(row: f64, col: f64) -> (f64, f64) {
    (col, row)
}

fn pde(u: PdeForceParams, v: PdeForceParams, t_end: f64) -> PdeScenario {
    PdeScenario {
        grid: Grid::new(100, 100, 0.5, 0.5).expect("builtin grid"),
        u,
        v,
        t_end,
        tau0: 1e-7,
        atol: 1e-3,
        rtol: 1e-3,
        safety: 0.9,
        snapshots: 11,
    }
}

fn classic_fronts_pde(mu_u: (f64, f64), mu_v: (f64, f64), t_end: f64) -> PdeScenario {
    let u = PdeForceParams {
        peak_density: 8.0,
        profile_radius: 5.0,
        centre: mu(mu_u.0, mu_u.1),
        inner_threshold: 0.5,
        attraction_radius: 5.0,
        repulsion_radius: 2.5,
        diffusion: 5.0,
        goal_velocity: (20.0, 20.0),
        attraction: 5.0,
        repulsion: 0.5,
        sensor_radius: 3.0,
        combat_threshold: 100.0,
        attack: -1,
        aimed_fire: 2e-6,
        fire_rate: 8e-8,
        fire_decay: 0.2,
        operating_range: 0.0,
        switch_mode: SwitchMode::Front,
    };
    let v = PdeForceParams { centre: mu(mu_v.0, mu_v.1), goal_velocity: (-20.0, -20.0), ..u.clone() };
    pde(u, v, t_end)
}

fn precess_pde(mu_u: (f64, f64), mu_v: (f64, f64), t_end: f64) -> PdeScenario {
    let u = PdeForceParams {
        peak_density: 8.0,
        profile_radius: 5.0,
        centre: mu(mu_u.0, mu_u.1),
        inner_threshold: 1.0,
        attraction_radius: 5.0,
        repulsion_radius: 2.5,
        diffusion: 5.0,
        goal_velocity: (60.0, 60.0),
        attraction: 5.0,
        repulsion: 0.5,
        sensor_radius: 3.0,
        combat_threshold: 1e6,
        attack: -1,
        aimed_fire: 2e-6,
        fire_rate: 8e-8,
        fire_decay: 0.2,
        operating_range: 0.0,
        switch_mode: SwitchMode::Pursuit,
    };
    let v = PdeForceParams {
        peak_density: 12.0,
        centre: mu(mu_v.0, mu_v.1),
        goal_velocity: (-60.0, -60.0),
        repulsion: 1.0,
        sensor_radius: 7.0,
        combat_threshold: 4.0,
        ..u.clone()
    };
    pde(u, v, t_end)
}

fn circle_pde(sensor_v: f64, threshold: f64, d: f64, t_end: f64) -> PdeScenario {
    let u = PdeForceParams {
        peak_density: 8.0,
        profile_radius: 5.0,
        centre: mu(15.0, 15.0),
        inner_threshold: 1.0,
        attraction_radius: 5.0,
        repulsion_radius: 2.5,
        diffusion: 5.0,
        goal_velocity: (20.0, 20.0),
        attraction: 5.0,
        repulsion: 0.5,
        sensor_radius: 3.0,
        combat_threshold: threshold,
        attack: -1,
        aimed_fire: d,
        // no area fire in this scenario
        fire_rate: 0.0,
        fire_decay: 0.2,
        operating_range: 0.0,
        switch_mode: SwitchMode::Pursuit,
    };
    let v = PdeForceParams {
        peak_density: 12.0,
        centre: mu(35.0, 35.0),
        goal_velocity: (-20.0, -20.0),
        repulsion: 1.0,
        sensor_radius: sensor_v,
        ..u.clone()
    };
    pde(u, v, t_end)
}

fn ca(red: CaForceParams, blue: CaForceParams, steps: u64) -> CaScenario {
    CaScenario { setup: CaSetup { size: 100, red, blue }, steps, snapshot_every: 20 }
}

fn classic_fronts_ca() -> CaScenario {
    let red = CaForceParams {
        squad_size: 225,
        weights: [0.0, 50.0, 0.0, 50.0, 0.0, 5.0],
        sensor_range: 5,
        fire_range: 3,
        threshold_range: 2,
        move_range: 1,
        prob_hit: 2e-3,
        max_targets: MaxTargets::Count(5),
        defence: 1,
        cluster_threshold: 0,
        advance_threshold: 0,
        combat_threshold: 3,
        start_centre: (15, 50),
        start_size: (25, 25),
        flag: (1, 50),
    };
    let blue = CaForceParams { start_centre: (85, 50), flag: (99, 50), ..red.clone() };
    ca(red, blue, 1000)
}

fn precess_ca(flag_offset: bool) -> CaScenario {
    let red = CaForceParams {
        squad_size: 90,
        weights: [25.0, 10.0, 75.0, 25.0, 0.0, 50.0],
        sensor_range: 5,
        fire_range: 3,
        threshold_range: 2,
        move_range: 1,
        prob_hit: 2e-3,
        max_targets: MaxTargets::All,
        defence: 1,
        cluster_threshold: 10,
        advance_threshold: 0,
        combat_threshold: 4,
        start_centre: (10, 10),
        start_size: (20, 20),
        flag: (1, 1),
    };
    let blue = CaForceParams {
        weights: [10.0, 35.0, 10.0, 80.0, 0.0, 50.0],
        threshold_range: 3,
        cluster_threshold: 3,
        combat_threshold: -5,
        start_centre: (90, 90),
        flag: if flag_offset { (90, 99) } else { (99, 99) },
        ..red.clone()
    };
    ca(red, blue, 400)
}

fn circle_ca() -> CaScenario {
    let red = CaForceParams {
        squad_size: 200,
        weights: [10.0, 50.0, 0.0, 100.0, 0.0, 25.0],
        sensor_range: 5,
        fire_range: 3,
        threshold_range: 3,
        move_range: 1,
        prob_hit: 1e-3,
        max_targets: MaxTargets::Count(999),
        defence: 1,
        cluster_threshold: 3,
        advance_threshold: 0,
        combat_threshold: -7,
        start_centre: (10, 10),
        start_size: (20, 20),
        flag: (1, 1),
    };
    let blue = CaForceParams {
        weights: [25.0, 25.0, 75.0, 25.0, 0.0, 75.0],
        cluster_threshold: 15,
        combat_threshold: 5,
        start_centre: (90, 90),
        flag: (99, 99),
        ..red.clone()
    };
    ca(red, blue, 300)
}

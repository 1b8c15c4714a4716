//! Penalty function and meta-personality adjustments.

use std::f64::consts::SQRT_2;

use super::{euclid, CaSetup, CaState, Cell, Health};

/// What a mover sees from its current cell within its sensor square.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensed {
    pub here: Cell,
    pub sensor_range: f64,
    pub alive_friends: Vec<Cell>,
    pub alive_enemies: Vec<Cell>,
    pub injured_friends: Vec<Cell>,
    pub injured_enemies: Vec<Cell>,
    pub own_flag: Cell,
    pub enemy_flag: Cell,
}

impl Sensed {
    pub fn gather(id: usize, state: &CaState, setup: &CaSetup) -> Self {
        let me = &state.agents()[id];
        let p = setup.params(me.side);
        let mut s = Sensed {
            here: me.pos,
            sensor_range: f64::from(p.sensor_range),
            alive_friends: Vec::new(),
            alive_enemies: Vec::new(),
            injured_friends: Vec::new(),
            injured_enemies: Vec::new(),
            own_flag: p.flag,
            enemy_flag: setup.goal(me.side),
        };
        for other in state.within(me.pos, p.sensor_range) {
            if other == id {
                continue;
            }
            let a = &state.agents()[other];
            let list = match (a.side == me.side, a.health) {
                (true, Health::Alive) => &mut s.alive_friends,
                (false, Health::Alive) => &mut s.alive_enemies,
                (true, Health::Injured) => &mut s.injured_friends,
                (false, Health::Injured) => &mut s.injured_enemies,
                (_, Health::Killed) => continue,
            };
            list.push(a.pos);
        }
        s
    }
}

/// The six weighted terms of the penalty at `candidate`.
///
/// The four population terms are `w / (sqrt(2) r_S N) * sum of distances`
/// and vanish when `N = 0`; the flag terms are `w * d_new / d_old`, with
/// `d_old` taken as 1 when the mover stands on the flag.
pub fn penalty_terms(s: &Sensed, candidate: Cell, w: &[f64; 6]) -> [f64; 6] {
    let population = |weight: f64, cells: &[Cell]| {
        if cells.is_empty() || weight == 0.0 {
            return 0.0;
        }
        let sum: f64 = cells.iter().map(|&c| euclid(candidate, c)).sum();
        weight * sum / (SQRT_2 * s.sensor_range * cells.len() as f64)
    };
    let flag = |weight: f64, flag: Cell| {
        if weight == 0.0 {
            return 0.0;
        }
        weight * euclid(candidate, flag) / euclid(s.here, flag).max(1.0)
    };
    [
        population(w[0], &s.alive_friends),
        population(w[1], &s.alive_enemies),
        population(w[2], &s.injured_friends),
        population(w[3], &s.injured_enemies),
        flag(w[4], s.own_flag),
        flag(w[5], s.enemy_flag),
    ]
}

pub fn penalty(s: &Sensed, candidate: Cell, w: &[f64; 6]) -> f64 {
    penalty_terms(s, candidate, w).iter().sum()
}

/// Weights after the Advance, Cluster and Combat constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Effective {
    pub weights: [f64; 6],
    /// Set when the Cluster constraint overrides the penalty: the mover
    /// heads for the mean position of the friends it senses.
    pub forced: Option<(f64, f64)>,
    pub friends_near: i32,
    pub enemies_sensed: i32,
}

pub fn effective_weights(id: usize, state: &CaState, setup: &CaSetup) -> Effective {
    let me = &state.agents()[id];
    let p = setup.params(me.side);
    let mut friends_near = 0;
    for other in state.within(me.pos, p.threshold_range) {
        if other != id && state.agents()[other].side == me.side {
            friends_near += 1;
        }
    }
    let mut enemies_sensed = 0;
    let (mut n, mut sx, mut sy) = (0, 0.0, 0.0);
    for other in state.within(me.pos, p.sensor_range) {
        let a = &state.agents()[other];
        if a.side != me.side {
            enemies_sensed += 1;
        } else if other != id {
            n += 1;
            sx += f64::from(a.pos.0);
            sy += f64::from(a.pos.1);
        }
    }

    let mut w = p.weights;
    let mut forced = None;
    if p.advance_threshold != 0 && friends_near < p.advance_threshold {
        w[5] = -w[5];
    }
    if p.cluster_threshold != 0 {
        if friends_near >= p.cluster_threshold {
            w[0] = 0.0;
            w[2] = 0.0;
        } else if n > 0 {
            forced = Some((sx / f64::from(n), sy / f64::from(n)));
        }
    }
    if p.combat_threshold != 0 && friends_near - enemies_sensed < p.combat_threshold {
        w[1] = -w[1];
        w[3] = -w[3];
    }
    Effective { weights: w, forced, friends_near, enemies_sensed }
}

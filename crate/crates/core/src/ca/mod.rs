//! Stochastic lattice wargame in the style of ISAAC.
//!
//! Agents live on a square lattice, one per cell. Each step every living
//! agent in turn moves to the cell of least penalty within its movement
//! square, then all agents fire simultaneously at enemies within their fire
//! square. Every range is a Chebyshev (square) range.

mod rules;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use rules::{effective_weights, penalty, penalty_terms, Effective, Sensed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Red,
    Blue,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Red => Side::Blue,
            Side::Blue => Side::Red,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Red => "red",
            Side::Blue => "blue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Health {
    Alive,
    Injured,
    Killed,
}

impl Health {
    pub fn is_living(self) -> bool {
        self != Health::Killed
    }

    fn degraded(self) -> Self {
        match self {
            Health::Alive => Health::Injured,
            _ => Health::Killed,
        }
    }
}

pub type Cell = (i32, i32);

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub side: Side,
    pub pos: Cell,
    pub health: Health,
    /// Hits taken since the last change of health.
    pub hits: u32,
}

#[inline]
pub fn chebyshev(a: Cell, b: Cell) -> i32 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Euclidean distance between cells. The squared distance is an exact
/// integer, so this is correctly rounded (unlike `hypot`).
#[inline]
pub fn euclid(a: Cell, b: Cell) -> f64 {
    let (dx, dy) = (i64::from(a.0 - b.0), i64::from(a.1 - b.1));
    ((dx * dx + dy * dy) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxTargets {
    All,
    Count(usize),
}

impl MaxTargets {
    pub fn limit(self) -> usize {
        match self {
            MaxTargets::All => usize::MAX,
            MaxTargets::Count(n) => n,
        }
    }
}

/// Rule set of one force.
///
/// `weights` are `w1..w6`: alive friend, alive enemy, injured friend,
/// injured enemy, own flag, enemy flag. A threshold of zero switches its
/// constraint off.
#[derive(Debug, Clone, PartialEq)]
pub struct CaForceParams {
    pub squad_size: usize,
    pub weights: [f64; 6],
    pub sensor_range: i32,
    pub fire_range: i32,
    pub threshold_range: i32,
    pub move_range: i32,
    pub prob_hit: f64,
    pub max_targets: MaxTargets,
    pub defence: u32,
    pub cluster_threshold: i32,
    pub advance_threshold: i32,
    pub combat_threshold: i32,
    pub start_centre: Cell,
    pub start_size: (i32, i32),
    /// The force's own flag; its goal is the enemy flag.
    pub flag: Cell,
}

impl Default for CaForceParams {
    fn default() -> Self {
        Self {
            squad_size: 0,
            weights: [0.0; 6],
            sensor_range: 5,
            fire_range: 3,
            threshold_range: 2,
            move_range: 1,
            prob_hit: 0.0,
            max_targets: MaxTargets::All,
            defence: 1,
            cluster_threshold: 0,
            advance_threshold: 0,
            combat_threshold: 0,
            start_centre: (0, 0),
            start_size: (1, 1),
            flag: (0, 0),
        }
    }
}

impl CaForceParams {
    pub fn validate(&self, size: i32) -> Result<()> {
        for (name, r) in [
            ("r_S", self.sensor_range),
            ("r_F", self.fire_range),
            ("r_T", self.threshold_range),
            ("w_M", self.move_range),
        ] {
            if r < 0 {
                return Err(Error::param(name, format!("range must be non-negative, got {r}")));
            }
        }
        if !(0.0..=1.0).contains(&self.prob_hit) {
            return Err(Error::param("prob_hit", format!("must lie in [0, 1], got {}", self.prob_hit)));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("w", "weights must be finite"));
        }
        if self.defence == 0 {
            return Err(Error::param("defence", "must be at least 1"));
        }
        if self.start_size.0 <= 0 || self.start_size.1 <= 0 {
            return Err(Error::param("size", "start box must be non-empty"));
        }
        let inside = |c: Cell| (0..size).contains(&c.0) && (0..size).contains(&c.1);
        if !inside(self.flag) {
            return Err(Error::param("flag", format!("{:?} lies outside the {size}x{size} lattice", self.flag)));
        }
        if !inside(self.start_centre) {
            return Err(Error::param("centre", format!("{:?} lies outside the lattice", self.start_centre)));
        }
        Ok(())
    }

    /// Cells of the start box, clipped to the lattice.
    fn start_cells(&self, size: i32) -> (std::ops::Range<i32>, std::ops::Range<i32>) {
        let span = |c: i32, s: i32| {
            let lo = (c - s / 2).max(0);
            let hi = (c - s / 2 + s).min(size);
            lo..hi
        };
        (span(self.start_centre.0, self.start_size.0), span(self.start_centre.1, self.start_size.1))
    }
}

/// Both rule sets and the lattice size.
#[derive(Debug, Clone, PartialEq)]
pub struct CaSetup {
    pub size: i32,
    pub red: CaForceParams,
    pub blue: CaForceParams,
}

impl CaSetup {
    pub fn params(&self, side: Side) -> &CaForceParams {
        match side {
            Side::Red => &self.red,
            Side::Blue => &self.blue,
        }
    }

    pub fn goal(&self, side: Side) -> Cell {
        self.params(side.other()).flag
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 3 {
            return Err(Error::Geometry(format!("lattice size {} is below 3", self.size)));
        }
        self.red.validate(self.size)?;
        self.blue.validate(self.size)
    }
}

/// Roster, occupancy lattice and random stream of one run.
#[derive(Debug, Clone)]
pub struct CaState {
    size: i32,
    agents: Vec<Agent>,
    occupancy: Vec<Option<u32>>,
    rng: ChaCha8Rng,
    pub t: u64,
}

impl CaState {
    /// Empty lattice with a seeded stream.
    pub fn empty(size: i32, seed: u64) -> Self {
        Self {
            size,
            agents: Vec::new(),
            occupancy: vec![None; (size * size) as usize],
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 0,
        }
    }

    /// Drops each squad uniformly onto free cells of its start box.
    pub fn initial(setup: &CaSetup, seed: u64) -> Result<Self> {
        setup.validate()?;
        let mut state = Self::empty(setup.size, seed);
        for side in [Side::Red, Side::Blue] {
            let p = setup.params(side);
            let (xs, ys) = p.start_cells(setup.size);
            let free = xs
                .clone()
                .flat_map(|x| ys.clone().map(move |y| (x, y)))
                .filter(|&c| state.occupant(c).is_none())
                .count();
            if free < p.squad_size {
                return Err(Error::param(
                    "squad_size",
                    format!("{} {} agents do not fit into {free} free start cells", p.squad_size, side.name()),
                ));
            }
            let mut placed = 0;
            while placed < p.squad_size {
                let c = (state.rng.gen_range(xs.clone()), state.rng.gen_range(ys.clone()));
                if state.occupant(c).is_none() {
                    state.place(side, c)?;
                    placed += 1;
                }
            }
        }
        Ok(state)
    }

    /// Adds a living agent; fails on an occupied or outside cell.
    pub fn place(&mut self, side: Side, pos: Cell) -> Result<usize> {
        if !self.contains(pos) {
            return Err(Error::Geometry(format!("cell {pos:?} lies outside the lattice")));
        }
        if self.occupant(pos).is_some() {
            return Err(Error::Geometry(format!("cell {pos:?} is occupied")));
        }
        let id = self.agents.len();
        self.agents.push(Agent { side, pos, health: Health::Alive, hits: 0 });
        let k = self.cell_index(pos);
        self.occupancy[k] = Some(id as u32);
        Ok(id)
    }

    pub fn size(&self) -> i32 {
        self.size
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn contains(&self, c: Cell) -> bool {
        (0..self.size).contains(&c.0) && (0..self.size).contains(&c.1)
    }

    fn cell_index(&self, c: Cell) -> usize {
        (c.1 * self.size + c.0) as usize
    }

    pub fn occupant(&self, c: Cell) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        self.occupancy[self.cell_index(c)].map(|i| i as usize)
    }

    /// Ids of living agents within Chebyshev distance `r` of `c`.
    pub fn within(&self, c: Cell, r: i32) -> impl Iterator<Item = usize> + '_ {
        let x0 = (c.0 - r).max(0);
        let x1 = (c.0 + r).min(self.size - 1);
        let y0 = (c.1 - r).max(0);
        let y1 = (c.1 + r).min(self.size - 1);
        (y0..=y1).flat_map(move |y| (x0..=x1).filter_map(move |x| self.occupant((x, y))))
    }

    fn move_agent(&mut self, id: usize, to: Cell) {
        let from = self.agents[id].pos;
        if from == to {
            return;
        }
        let (kf, kt) = (self.cell_index(from), self.cell_index(to));
        debug_assert!(self.occupancy[kt].is_none());
        self.occupancy[kf] = None;
        self.occupancy[kt] = Some(id as u32);
        self.agents[id].pos = to;
    }

    /// Living (alive, injured) counts of one side.
    pub fn counts(&self, side: Side) -> (usize, usize) {
        self.agents.iter().filter(|a| a.side == side).fold((0, 0), |(al, inj), a| match a.health {
            Health::Alive => (al + 1, inj),
            Health::Injured => (al, inj + 1),
            Health::Killed => (al, inj),
        })
    }

    /// Mean position of one side's living agents.
    pub fn centroid(&self, side: Side) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for a in self.agents.iter().filter(|a| a.side == side && a.health.is_living()) {
            n += 1;
            sx += f64::from(a.pos.0);
            sy += f64::from(a.pos.1);
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Checks that the lattice and the roster agree.
    pub fn check_consistent(&self) -> Result<()> {
        let mut seen = vec![false; self.occupancy.len()];
        for (id, a) in self.agents.iter().enumerate() {
            if a.health.is_living() {
                let k = self.cell_index(a.pos);
                if self.occupancy[k] != Some(id as u32) || seen[k] {
                    return Err(Error::Geometry(format!("agent {id} is not registered at {:?}", a.pos)));
                }
                seen[k] = true;
            }
        }
        if self.occupancy.iter().zip(&seen).any(|(o, s)| o.is_some() != *s) {
            return Err(Error::Geometry("lattice holds a cell with no living agent".into()));
        }
        Ok(())
    }
}

/// Moves every living agent once, in shuffled order, with the lattice
/// updated after each move.
pub fn move_phase(state: &mut CaState, setup: &CaSetup) {
    let mut order: Vec<usize> = (0..state.agents.len()).filter(|&i| state.agents[i].health.is_living()).collect();
    order.shuffle(&mut state.rng);
    let mut candidates = Vec::new();
    let mut best = Vec::new();
    for id in order {
        let agent = &state.agents[id];
        let p = setup.params(agent.side);
        let here = agent.pos;
        let r = p.move_range;
        candidates.clear();
        for y in (here.1 - r)..=(here.1 + r) {
            for x in (here.0 - r)..=(here.0 + r) {
                let c = (x, y);
                if c == here || (state.contains(c) && state.occupant(c).is_none()) {
                    candidates.push(c);
                }
            }
        }
        let eff = effective_weights(id, state, setup);
        let sensed = if eff.forced.is_none() { Some(Sensed::gather(id, state, setup)) } else { None };
        best.clear();
        let mut low = f64::INFINITY;
        for &c in &candidates {
            let z = match (eff.forced, &sensed) {
                (Some((tx, ty)), _) => (f64::from(c.0) - tx).hypot(f64::from(c.1) - ty),
                (None, Some(s)) => penalty(s, c, &eff.weights),
                (None, None) => unreachable!(),
            };
            let tol = if low.is_finite() { 1e-12 * low.abs().max(1.0) } else { 0.0 };
            if best.is_empty() || z < low - tol {
                low = z;
                best.clear();
                best.push(c);
            } else if (z - low).abs() <= tol {
                best.push(c);
            }
        }
        let to = if best.len() == 1 { best[0] } else { best[state.rng.gen_range(0..best.len())] };
        state.move_agent(id, to);
    }
}

/// Hits landed during one fire phase, indexed by the side that was hit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FireReport {
    pub hits: [u64; 2],
}

/// Simultaneous fire: targets and hits are drawn against the health at the
/// start of the phase and applied afterwards.
pub fn fire_phase(state: &mut CaState, setup: &CaSetup) -> FireReport {
    let mut report = FireReport::default();
    let living: Vec<bool> = state.agents.iter().map(|a| a.health.is_living()).collect();
    let mut hits = vec![0u32; state.agents.len()];
    let mut pool = Vec::new();
    for id in 0..state.agents.len() {
        if !living[id] {
            continue;
        }
        let shooter = &state.agents[id];
        let p = setup.params(shooter.side);
        if p.prob_hit <= 0.0 {
            continue;
        }
        let side = shooter.side;
        pool.clear();
        pool.extend(
            state
                .within(shooter.pos, p.fire_range)
                .filter(|&t| living[t] && state.agents[t].side != side),
        );
        let n = p.max_targets.limit().min(pool.len());
        let (chosen, _) = pool.partial_shuffle(&mut state.rng, n);
        for &t in chosen.iter() {
            if state.rng.gen::<f64>() < p.prob_hit {
                hits[t] += 1;
                report.hits[side.other().index()] += 1;
            }
        }
    }
    for (id, &h) in hits.iter().enumerate() {
        for _ in 0..h {
            let agent = &mut state.agents[id];
            if !agent.health.is_living() {
                break;
            }
            let defence = setup.params(agent.side).defence;
            agent.hits += 1;
            if agent.hits >= defence {
                agent.hits = 0;
                agent.health = agent.health.degraded();
            }
        }
        if !state.agents[id].health.is_living() && living[id] {
            let k = state.cell_index(state.agents[id].pos);
            state.occupancy[k] = None;
        }
    }
    report
}

/// One move phase followed by one fire phase.
pub fn ca_step(state: &mut CaState, setup: &CaSetup) -> FireReport {
    move_phase(state, setup);
    let report = fire_phase(state, setup);
    state.t += 1;
    report
}

/// Per-step record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct CaRecord {
    pub step: u64,
    /// `[red, blue]` counts of alive agents.
    pub alive: [usize; 2],
    pub injured: [usize; 2],
    pub centroid: [Option<(f64, f64)>; 2],
}

impl CaRecord {
    pub fn of(state: &CaState) -> Self {
        let (ra, ri) = state.counts(Side::Red);
        let (ba, bi) = state.counts(Side::Blue);
        Self {
            step: state.t,
            alive: [ra, ba],
            injured: [ri, bi],
            centroid: [state.centroid(Side::Red), state.centroid(Side::Blue)],
        }
    }

    pub fn living(&self, side: Side) -> usize {
        self.alive[side.index()] + self.injured[side.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaSnapshot {
    pub step: u64,
    pub agents: Vec<Agent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaTrajectory {
    pub seed: u64,
    pub records: Vec<CaRecord>,
    pub snapshots: Vec<CaSnapshot>,
}

/// Runs `n_steps` steps from the seeded initial placement. Snapshots are
/// taken at the listed step numbers (0 is the initial state).
pub fn ca_run(setup: &CaSetup, seed: u64, n_steps: u64, snapshot_steps: &[u64]) -> Result<CaTrajectory> {
    ca_run_observed(setup, seed, n_steps, snapshot_steps, |_| {})
}

/// As `ca_run`, calling `observe` on the initial state and after every step.
pub fn ca_run_observed(
    setup: &CaSetup,
    seed: u64,
    n_steps: u64,
    snapshot_steps: &[u64],
    mut observe: impl FnMut(&CaState),
) -> Result<CaTrajectory> {
    let mut state = CaState::initial(setup, seed)?;
    let mut records = Vec::with_capacity(n_steps as usize + 1);
    let mut snapshots = Vec::new();
    let snap = |state: &CaState, snapshots: &mut Vec<CaSnapshot>| {
        if snapshot_steps.contains(&state.t) {
            snapshots.push(CaSnapshot { step: state.t, agents: state.agents.clone() });
        }
    };
    records.push(CaRecord::of(&state));
    snap(&state, &mut snapshots);
    observe(&state);
    for _ in 0..n_steps {
        ca_step(&mut state, setup);
        records.push(CaRecord::of(&state));
        snap(&state, &mut snapshots);
        observe(&state);
    }
    Ok(CaTrajectory { seed, records, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    fn bare(size: i32) -> CaSetup {
        CaSetup {
            size,
            red: CaForceParams { flag: (0, size / 2), ..Default::default() },
            blue: CaForceParams { flag: (size - 1, size / 2), ..Default::default() },
        }
    }

    /// Independent evaluation straight from the roster, no lattice lookups.
    fn oracle_terms(state: &CaState, setup: &CaSetup, id: usize, c: Cell, w: &[f64; 6]) -> [f64; 6] {
        let me = &state.agents()[id];
        let p = setup.params(me.side);
        let mut sums = [0.0; 4];
        let mut counts = [0usize; 4];
        for (other, a) in state.agents().iter().enumerate() {
            if other == id || a.health == Health::Killed {
                continue;
            }
            let dx = (a.pos.0 - me.pos.0).abs();
            let dy = (a.pos.1 - me.pos.1).abs();
            if dx > p.sensor_range || dy > p.sensor_range {
                continue;
            }
            let slot = match (a.side == me.side, a.health == Health::Alive) {
                (true, true) => 0,
                (false, true) => 1,
                (true, false) => 2,
                (false, false) => 3,
            };
            let d = (((a.pos.0 - c.0).pow(2) + (a.pos.1 - c.1).pow(2)) as f64).sqrt();
            sums[slot] += d;
            counts[slot] += 1;
        }
        let mut out = [0.0; 6];
        for k in 0..4 {
            if counts[k] > 0 {
                out[k] = w[k] * sums[k] / (2f64.sqrt() * p.sensor_range as f64 * counts[k] as f64);
            }
        }
        let ratio = |f: Cell| {
            let new = (((f.0 - c.0).pow(2) + (f.1 - c.1).pow(2)) as f64).sqrt();
            let old = (((f.0 - me.pos.0).pow(2) + (f.1 - me.pos.1).pow(2)) as f64).sqrt();
            new / if old == 0.0 { 1.0 } else { old }
        };
        out[4] = w[4] * ratio(p.flag);
        out[5] = w[5] * ratio(setup.goal(me.side));
        out
    }

    fn random_state(rng: &mut ChaCha8Rng, size: i32, n: usize) -> (CaState, CaSetup) {
        let mut setup = bare(size);
        for p in [&mut setup.red, &mut setup.blue] {
            p.sensor_range = rng.gen_range(1..6);
            p.flag = (rng.gen_range(0..size), rng.gen_range(0..size));
            p.weights = std::array::from_fn(|_| rng.gen_range(-100.0..100.0));
        }
        let mut state = CaState::empty(size, rng.gen());
        while state.agents().len() < n {
            let c = (rng.gen_range(0..size), rng.gen_range(0..size));
            let side = if rng.gen() { Side::Red } else { Side::Blue };
            if state.place(side, c).is_ok() {
                let id = state.agents().len() - 1;
                state.agents[id].health = match rng.gen_range(0..6) {
                    0 | 1 => Health::Injured,
                    2 => Health::Killed,
                    _ => Health::Alive,
                };
                if state.agents[id].health == Health::Killed {
                    let k = state.cell_index(c);
                    state.occupancy[k] = None;
                }
            }
        }
        (state, setup)
    }

    #[test]
    fn penalty_is_zero_with_nothing_to_see() {
        let setup = bare(20);
        let mut state = CaState::empty(20, 1);
        let id = state.place(Side::Red, (10, 10)).unwrap();
        let s = Sensed::gather(id, &state, &setup);
        for c in [(9, 9), (10, 10), (11, 10)] {
            assert_eq!(penalty(&s, c, &[1.0, 2.0, 3.0, 4.0, 0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn goal_term_ratio() {
        let setup = bare(20);
        let mut state = CaState::empty(20, 1);
        let id = state.place(Side::Red, (10, 10)).unwrap();
        let s = Sensed::gather(id, &state, &setup);
        let w = [0.0, 0.0, 0.0, 0.0, 0.0, 5.0];
        // red heads for the blue flag at (19, 10)
        assert_eq!(penalty(&s, (10, 10), &w), 5.0);
        let closer = penalty(&s, (11, 10), &w);
        assert!((closer - 5.0 * 8.0 / 9.0).abs() < 1e-12);
        assert!(penalty(&s, (9, 10), &w) > 5.0);
    }

    #[test]
    fn penalty_matches_roster_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let (state, setup) = random_state(&mut rng, 12, 10);
            for id in 0..state.agents().len() {
                if !state.agents()[id].health.is_living() {
                    continue;
                }
                let s = Sensed::gather(id, &state, &setup);
                let w = setup.params(state.agents()[id].side).weights;
                let here = state.agents()[id].pos;
                for c in [here, (here.0 + 1, here.1), (here.0 - 1, here.1 + 1)] {
                    let got = penalty_terms(&s, c, &w);
                    let want = oracle_terms(&state, &setup, id, c, &w);
                    for k in 0..6 {
                        assert!((got[k] - want[k]).abs() <= 1e-12 * want[k].abs().max(1.0), "term {k}: {got:?} vs {want:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn disabled_constraints_leave_weights() {
        let mut setup = bare(20);
        setup.red.weights = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut state = CaState::empty(20, 1);
        let id = state.place(Side::Red, (5, 5)).unwrap();
        state.place(Side::Blue, (6, 6)).unwrap();
        state.place(Side::Red, (4, 4)).unwrap();
        let e = effective_weights(id, &state, &setup);
        assert_eq!(e.weights, setup.red.weights);
        assert!(e.forced.is_none());
    }

    fn crowd(friends: &[Cell], enemies: &[Cell], setup: &CaSetup) -> (CaState, usize) {
        let mut state = CaState::empty(setup.size, 1);
        let id = state.place(Side::Red, (10, 10)).unwrap();
        for &c in friends {
            state.place(Side::Red, c).unwrap();
        }
        for &c in enemies {
            state.place(Side::Blue, c).unwrap();
        }
        (state, id)
    }

    #[test]
    fn combat_constraint_retreats_when_outnumbered() {
        let mut setup = bare(30);
        setup.red.weights = [25.0, 10.0, 75.0, 25.0, 0.0, 50.0];
        setup.red.combat_threshold = 4;
        setup.red.threshold_range = 2;
        setup.red.sensor_range = 5;
        let friends = [(9, 10), (11, 10), (10, 11)];
        let enemies: Vec<Cell> = (0..10).map(|k| (13 + k % 3, 7 + k / 3)).collect();
        let (state, id) = crowd(&friends, &enemies, &setup);
        let e = effective_weights(id, &state, &setup);
        assert_eq!((e.friends_near, e.enemies_sensed), (3, 10));
        assert_eq!(e.weights[1], -10.0);
        assert_eq!(e.weights[3], -25.0);
        assert_eq!(e.weights[5], 50.0);
    }

    #[test]
    fn negative_combat_threshold_pursues_when_outnumbered() {
        let mut setup = bare(30);
        setup.red.weights = [10.0, 50.0, 0.0, 100.0, 0.0, 25.0];
        setup.red.combat_threshold = -7;
        let friends = [(9, 10), (11, 10), (10, 11), (10, 9), (9, 9)];
        let enemies: Vec<Cell> = (0..10).map(|k| (13 + k % 3, 7 + k / 3)).collect();
        let (state, id) = crowd(&friends, &enemies, &setup);
        let e = effective_weights(id, &state, &setup);
        assert_eq!(e.friends_near - e.enemies_sensed, -5);
        assert_eq!(e.weights, setup.red.weights);
    }

    #[test]
    fn cluster_and_advance_constraints() {
        let mut setup = bare(30);
        setup.red.weights = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        setup.red.cluster_threshold = 3;
        setup.red.advance_threshold = 3;
        let (state, id) = crowd(&[(9, 10), (11, 10), (10, 11)], &[], &setup);
        let e = effective_weights(id, &state, &setup);
        assert_eq!(e.weights, [0.0, 2.0, 0.0, 4.0, 5.0, 6.0]);
        assert!(e.forced.is_none());

        // two friends near, one further out: forced toward their mean
        let (state, id) = crowd(&[(9, 10), (11, 10), (14, 13)], &[], &setup);
        let e = effective_weights(id, &state, &setup);
        assert_eq!(e.weights[5], -6.0);
        let (fx, fy) = e.forced.unwrap();
        assert!((fx - 34.0 / 3.0).abs() < 1e-12 && (fy - 11.0).abs() < 1e-12);
    }

    #[test]
    fn ties_are_broken_uniformly() {
        let setup = bare(20);
        let mut counts = std::collections::HashMap::new();
        let trials = 10_000;
        for seed in 0..trials {
            let mut state = CaState::empty(20, seed);
            state.place(Side::Red, (10, 10)).unwrap();
            move_phase(&mut state, &setup);
            *counts.entry(state.agents()[0].pos).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 9);
        let p = 1.0 / 9.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for (_, &n) in &counts {
            assert!((n as f64 - trials as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn goal_seeker_steps_toward_goal() {
        let mut setup = bare(20);
        setup.red.weights[5] = 5.0;
        let mut state = CaState::empty(20, 3);
        state.place(Side::Red, (5, 3)).unwrap();
        move_phase(&mut state, &setup);
        // goal is the blue flag at (19, 10)
        assert_eq!(state.agents()[0].pos, (6, 4));
    }

    #[test]
    fn surrounded_agent_stays() {
        let mut setup = bare(20);
        setup.red.weights[5] = 5.0;
        let mut state = CaState::empty(20, 3);
        state.place(Side::Red, (5, 5)).unwrap();
        for y in 4..=6 {
            for x in 4..=6 {
                if (x, y) != (5, 5) {
                    state.place(Side::Blue, (x, y)).unwrap();
                }
            }
        }
        setup.blue.move_range = 0;
        move_phase(&mut state, &setup);
        assert_eq!(state.agents()[0].pos, (5, 5));
        state.check_consistent().unwrap();
    }

    fn duel(prob: f64, max_targets: MaxTargets, range: i32, defence: u32) -> (CaState, CaSetup) {
        let mut setup = bare(20);
        for p in [&mut setup.red, &mut setup.blue] {
            p.prob_hit = prob;
            p.max_targets = max_targets;
            p.fire_range = range;
            p.defence = defence;
        }
        let mut state = CaState::empty(20, 9);
        for k in 0..10 {
            state.place(Side::Red, (k % 5, k / 5)).unwrap();
            state.place(Side::Blue, (k % 5, 2 + k / 5)).unwrap();
        }
        (state, setup)
    }

    #[test]
    fn no_hits_without_hit_probability() {
        let (mut state, setup) = duel(0.0, MaxTargets::All, 10, 1);
        let before = state.agents().to_vec();
        let r = fire_phase(&mut state, &setup);
        assert_eq!(r.hits, [0, 0]);
        assert_eq!(state.agents(), &before[..]);
    }

    #[test]
    fn no_hits_out_of_range() {
        let mut setup = bare(20);
        setup.red.prob_hit = 1.0;
        setup.blue.prob_hit = 1.0;
        setup.red.fire_range = 3;
        setup.blue.fire_range = 3;
        let mut state = CaState::empty(20, 1);
        state.place(Side::Red, (0, 0)).unwrap();
        state.place(Side::Blue, (4, 0)).unwrap();
        assert_eq!(fire_phase(&mut state, &setup).hits, [0, 0]);
        state.move_agent(1, (3, 3));
        assert_eq!(fire_phase(&mut state, &setup).hits, [1, 1]);
        assert!(state.agents().iter().all(|a| a.health == Health::Injured));
        fire_phase(&mut state, &setup);
        assert!(state.agents().iter().all(|a| a.health == Health::Killed));
        state.check_consistent().unwrap();
        assert_eq!(state.occupant((0, 0)), None);
    }

    #[test]
    fn point_blank_hits_follow_binomial_mean() {
        let (mut state, setup) = duel(2e-3, MaxTargets::Count(5), 10, u32::MAX);
        let steps = 20_000u64;
        let mut total = [0u64; 2];
        for _ in 0..steps {
            let r = fire_phase(&mut state, &setup);
            total[0] += r.hits[0];
            total[1] += r.hits[1];
        }
        let shots = (steps * 10 * 5) as f64;
        let sigma = (shots * 2e-3 * (1.0 - 2e-3)).sqrt();
        for t in total {
            assert!((t as f64 - shots * 2e-3).abs() < 3.0 * sigma, "{total:?}");
        }
    }

    #[test]
    fn same_seed_same_run() {
        let mut setup = bare(40);
        for (p, c) in [(&mut setup.red, (8, 20)), (&mut setup.blue, (31, 20))] {
            p.squad_size = 40;
            p.start_centre = c;
            p.start_size = (10, 10);
            p.weights = [0.0, 50.0, 0.0, 50.0, 0.0, 5.0];
            p.prob_hit = 0.05;
            p.max_targets = MaxTargets::Count(5);
            p.combat_threshold = 3;
        }
        let a = ca_run(&setup, 5, 30, &[0, 10, 30]).unwrap();
        let b = ca_run(&setup, 5, 30, &[0, 10, 30]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.snapshots.len(), 3);
        assert_eq!(a.records.len(), 31);
        let c = ca_run(&setup, 6, 30, &[]).unwrap();
        assert_ne!(a.records, c.records);
        let zero = ca_run(&setup, 5, 0, &[0]).unwrap();
        assert_eq!(zero.snapshots[0], a.snapshots[0]);
    }

    #[test]
    fn overfull_start_box_is_rejected() {
        let mut setup = bare(20);
        setup.red.squad_size = 10;
        setup.red.start_centre = (5, 5);
        setup.red.start_size = (3, 3);
        assert!(CaState::initial(&setup, 1).is_err());
    }

    #[test]
    fn random_walk_has_no_drift() {
        let setup = bare(200);
        let mut state = CaState::empty(200, 21);
        state.place(Side::Red, (100, 100)).unwrap();
        let steps = 10_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        let mut prev = (100, 100);
        for _ in 0..steps {
            move_phase(&mut state, &setup);
            let p = state.agents()[0].pos;
            sx += f64::from(p.0 - prev.0);
            sy += f64::from(p.1 - prev.1);
            prev = p;
            if chebyshev(p, (100, 100)) > 90 {
                state.move_agent(0, (100, 100));
                prev = (100, 100);
            }
        }
        // each step is uniform over {-1, 0, 1}: variance 2/3
        let sigma = (steps as f64 * 2.0 / 3.0).sqrt();
        assert!(sx.abs() < 3.0 * sigma && sy.abs() < 3.0 * sigma, "{sx} {sy}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn step_invariants(seed in 0u64..10_000, n in 5usize..40) {
            let mut setup = bare(24);
            for (p, c) in [(&mut setup.red, (6, 12)), (&mut setup.blue, (17, 12))] {
                p.squad_size = n;
                p.start_centre = c;
                p.start_size = (10, 10);
                p.weights = [10.0, 40.0, 5.0, 40.0, 0.0, 20.0];
                p.prob_hit = 0.2;
                p.max_targets = MaxTargets::Count(3);
                p.cluster_threshold = 3;
                p.combat_threshold = 2;
            }
            let mut state = CaState::initial(&setup, seed).unwrap();
            let mut living = [n, n];
            for _ in 0..15 {
                ca_step(&mut state, &setup);
                state.check_consistent().unwrap();
                for side in [Side::Red, Side::Blue] {
                    let total = state.agents().iter().filter(|a| a.side == side).count();
                    prop_assert_eq!(total, n);
                    let (a, i) = state.counts(side);
                    prop_assert!(a + i <= living[side.index()]);
                    living[side.index()] = a + i;
                }
            }
        }
    }
}

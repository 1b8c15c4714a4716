//! Scenario registry and the plain-text scenario format.
//!
//! A scenario bundles two forces, the battlefield and the run length for one
//! engine. Files look like
//!
//! ```text
//! [scenario]
//! name = classic-fronts-pde
//! engine = pde
//! t_end = 1e-2
//! ...
//! [force.u]
//! D = 5
//! C = 20, 20
//! ...
//! ```
//!
//! PDE forces are `u` (red) and `v` (blue); CA forces are `red` and `blue`.
//! Every key is required, `#` starts a comment, and the same dotted paths
//! (`u.d`, `red.w6`, `t_end`) address single fields for overrides.

mod builtin;
mod format;

use std::path::Path;

use crate::ca::{CaSetup, Side};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::{even_times, IntegratorConfig};
use crate::pde::{PdeForceParams, PdeModel, PdeState};

pub use builtin::{builtin, builtin_names};

/// Which of the two continuum forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeForce {
    U,
    V,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeScenario {
    pub grid: Grid,
    pub u: PdeForceParams,
    pub v: PdeForceParams,
    pub t_end: f64,
    pub tau0: f64,
    pub atol: f64,
    pub rtol: f64,
    pub safety: f64,
    /// Number of evenly spaced snapshots, both ends included.
    pub snapshots: usize,
}

impl PdeScenario {
    pub fn params(&self, force: PdeForce) -> &PdeForceParams {
        match force {
            PdeForce::U => &self.u,
            PdeForce::V => &self.v,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            tau0: self.tau0,
            atol: self.atol,
            rtol: self.rtol,
            t_end: self.t_end,
            snapshot_times: if self.t_end == 0.0 { vec![0.0] } else { even_times(self.t_end, self.snapshots) },
            safety: self.safety,
        }
    }

    pub fn initial_state(&self) -> PdeState {
        PdeState::initial(self.grid, &self.u, &self.v)
    }

    pub fn model(&self) -> Result<PdeModel> {
        PdeModel::new(self.grid, self.u.clone(), self.v.clone())
    }

    /// Where a force is headed: the wall point reached from the domain
    /// centre along its goal velocity.
    pub fn goal_flag(&self, force: PdeForce) -> (f64, f64) {
        let (cx, cy) = self.params(force).goal_velocity;
        let (w, h) = (self.grid.width(), self.grid.height());
        let (x0, y0) = (0.5 * w, 0.5 * h);
        let reach = |c: f64, half: f64| if c == 0.0 { f64::INFINITY } else { half / c.abs() };
        let s = reach(cx, 0.5 * w).min(reach(cy, 0.5 * h));
        if !s.is_finite() {
            return (x0, y0);
        }
        (x0 + s * cx, y0 + s * cy)
    }

    fn validate(&self) -> Result<()> {
        self.u.validate()?;
        self.v.validate()?;
        self.integrator().validate()?;
        if self.snapshots < 1 {
            return Err(Error::param("snapshots", "need at least one snapshot"));
        }
        for (name, p) in [("u", &self.u), ("v", &self.v)] {
            let (x, y) = p.centre;
            if !(0.0..=self.grid.width()).contains(&x) || !(0.0..=self.grid.height()).contains(&y) {
                return Err(Error::param(format!("{name}.mu"), format!("{:?} lies outside the battlefield", p.centre)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaScenario {
    pub setup: CaSetup,
    pub steps: u64,
    /// Snapshot interval in steps; 0 keeps only the first and last state.
    pub snapshot_every: u64,
}

impl CaScenario {
    pub fn snapshot_steps(&self) -> Vec<u64> {
        let mut out: Vec<u64> = if self.snapshot_every == 0 {
            vec![0]
        } else {
            (0..=self.steps).step_by(self.snapshot_every as usize).collect()
        };
        if out.last() != Some(&self.steps) {
            out.push(self.steps);
        }
        out
    }

    pub fn params(&self, side: Side) -> &crate::ca::CaForceParams {
        self.setup.params(side)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Pde(PdeScenario),
    Ca(CaScenario),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub engine: Engine,
}

impl Scenario {
    pub fn engine_name(&self) -> &'static str {
        match self.engine {
            Engine::Pde(_) => "pde",
            Engine::Ca(_) => "ca",
        }
    }

    pub fn pde(&self) -> Result<&PdeScenario> {
        match &self.engine {
            Engine::Pde(p) => Ok(p),
            Engine::Ca(_) => Err(Error::ScenarioMismatch(format!("`{}` is a CA scenario", self.name))),
        }
    }

    pub fn ca(&self) -> Result<&CaScenario> {
        match &self.engine {
            Engine::Ca(c) => Ok(c),
            Engine::Pde(_) => Err(Error::ScenarioMismatch(format!("`{}` is a PDE scenario", self.name))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.engine {
            Engine::Pde(p) => p.validate(),
            Engine::Ca(c) => c.setup.validate(),
        }
    }

    /// Sets one field from its dotted path, e.g. `u.d` or `red.w6`.
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        format::set_path(self, path.trim(), value.trim())?;
        self.validate()
    }

    /// Applies `path=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (path, value) = o
                .split_once('=')
                .ok_or_else(|| Error::param("--set", format!("expected key=value, got `{o}`")))?;
            self.set(path, value)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format::write(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let s = format::read(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// A builtin name or, failing that, a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    match builtin(name_or_path) {
        Ok(s) => Ok(s),
        Err(e) if Path::new(name_or_path).is_file() => {
            drop(e);
            Scenario::load(name_or_path)
        }
        Err(e) => Err(e),
    }
}

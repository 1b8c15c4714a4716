//! Adaptive explicit time stepping for the semi-discrete PDE system.
//!
//! Bogacki–Shampine 3(2) with first-same-as-last reuse, a componentwise
//! max-norm error test, and positivity by rejection: a step whose result dips
//! below `-atol` anywhere is retried at half the step size, and accepted
//! states are clamped at zero.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::pde::{PdeModel, PdeState};

/// Steps smaller than this abort the run.
pub const MIN_STEP: f64 = 1e-15;

/// Anything that yields `(du/dt, dv/dt)` for a state.
pub trait System {
    fn rhs(&self, state: &PdeState) -> (ScalarField, ScalarField);
}

impl System for PdeModel {
    fn rhs(&self, state: &PdeState) -> (ScalarField, ScalarField) {
        PdeModel::rhs(self, state)
    }
}

impl<F> System for F
where
    F: Fn(&PdeState) -> (ScalarField, ScalarField),
{
    fn rhs(&self, state: &PdeState) -> (ScalarField, ScalarField) {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    /// Initial step size.
    pub tau0: f64,
    pub atol: f64,
    pub rtol: f64,
    pub t_end: f64,
    /// Sorted output times in `[0, t_end]`.
    pub snapshot_times: Vec<f64>,
    pub safety: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tau0: 1e-7,
            atol: 1e-3,
            rtol: 1e-3,
            t_end: 1e-2,
            snapshot_times: Vec::new(),
            safety: 0.9,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("end_time", format!("must be non-negative, got {}", self.t_end)));
        }
        if !(self.tau0 > 0.0 && (self.t_end == 0.0 || self.tau0 < self.t_end)) {
            return Err(Error::param("tau0", format!("need 0 < tau0 < t_end, got {}", self.tau0)));
        }
        if !(self.atol > 0.0 && self.rtol > 0.0) {
            return Err(Error::param("atol", "tolerances must be positive"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::param("safety", format!("must lie in (0, 1], got {}", self.safety)));
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_end).contains(&t) || t < prev {
                return Err(Error::param(
                    "snapshots",
                    format!("times must be sorted and inside [0, {}], got {t}", self.t_end),
                ));
            }
            prev = t;
        }
        Ok(())
    }

    /// `n` evenly spaced snapshot times including both ends.
    pub fn with_even_snapshots(mut self, n: usize) -> Self {
        self.snapshot_times = even_times(self.t_end, n);
        self
    }
}

pub fn even_times(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_end],
        // the last time is exactly t_end; k * t_end / (n - 1) can overshoot it
        _ => (0..n).map(|k| if k + 1 == n { t_end } else { t_end * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Result of one attempted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// The advanced state when accepted, the input state otherwise.
    pub state: PdeState,
    pub tau_next: f64,
    pub accepted: bool,
    /// Scaled error norm of the attempt.
    pub error: f64,
    /// Smallest density before clamping.
    pub min_before_clamp: f64,
    /// Right-hand side at the new state (reusable as the next first stage).
    pub(crate) last_stage: Option<(ScalarField, ScalarField)>,
}

fn combine(base: &ScalarField, terms: &[(f64, &ScalarField)]) -> ScalarField {
    let mut out = base.clone();
    let vals = out.values_mut();
    for (c, f) in terms {
        for (o, x) in vals.iter_mut().zip(f.values()) {
            *o += c * x;
        }
    }
    out
}

/// One Bogacki–Shampine attempt of size `tau` from `state`.
pub fn step<S: System + ?Sized>(
    state: &PdeState,
    system: &S,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<StepOutcome> {
    step_with(state, system, tau, cfg, None)
}

pub(crate) fn step_with<S: System + ?Sized>(
    state: &PdeState,
    system: &S,
    tau: f64,
    cfg: &IntegratorConfig,
    first_stage: Option<(ScalarField, ScalarField)>,
) -> Result<StepOutcome> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    if tau < MIN_STEP {
        return Err(Error::Stiffness { t: state.t, tau });
    }
    let h = tau;
    let (k1u, k1v) = first_stage.unwrap_or_else(|| system.rhs(state));
    let s2 = PdeState {
        u: combine(&state.u, &[(0.5 * h, &k1u)]),
        v: combine(&state.v, &[(0.5 * h, &k1v)]),
        t: state.t + 0.5 * h,
    };
    let (k2u, k2v) = system.rhs(&s2);
    let s3 = PdeState {
        u: combine(&state.u, &[(0.75 * h, &k2u)]),
        v: combine(&state.v, &[(0.75 * h, &k2v)]),
        t: state.t + 0.75 * h,
    };
    let (k3u, k3v) = system.rhs(&s3);
    let mut next = PdeState {
        u: combine(
            &state.u,
            &[(2.0 / 9.0 * h, &k1u), (1.0 / 3.0 * h, &k2u), (4.0 / 9.0 * h, &k3u)],
        ),
        v: combine(
            &state.v,
            &[(2.0 / 9.0 * h, &k1v), (1.0 / 3.0 * h, &k2v), (4.0 / 9.0 * h, &k3v)],
        ),
        t: state.t + h,
    };
    let (k4u, k4v) = system.rhs(&next);

    // y_new - z with z the embedded second-order solution
    let e1 = 2.0 / 9.0 - 7.0 / 24.0;
    let e2 = 1.0 / 3.0 - 1.0 / 4.0;
    let e3 = 4.0 / 9.0 - 1.0 / 3.0;
    let e4 = -1.0 / 8.0;
    let mut err: f64 = 0.0;
    for (y0, y1, k1, k2, k3, k4) in [
        (&state.u, &next.u, &k1u, &k2u, &k3u, &k4u),
        (&state.v, &next.v, &k1v, &k2v, &k3v, &k4v),
    ] {
        for idx in 0..y0.values().len() {
            let e = h
                * (e1 * k1.values()[idx]
                    + e2 * k2.values()[idx]
                    + e3 * k3.values()[idx]
                    + e4 * k4.values()[idx]);
            let scale = cfg.atol + cfg.rtol * y0.values()[idx].abs().max(y1.values()[idx].abs());
            err = err.max(e.abs() / scale);
        }
    }
    if !err.is_finite() {
        err = f64::INFINITY;
    }
    let min_before_clamp = next.u.min().min(next.v.min());

    if err > 1.0 || min_before_clamp < -cfg.atol {
        return Ok(StepOutcome {
            state: state.clone(),
            tau_next: 0.5 * tau,
            accepted: false,
            error: err,
            min_before_clamp,
            last_stage: Some((k1u, k1v)),
        });
    }

    let clamped = min_before_clamp < 0.0;
    if clamped {
        for f in [&mut next.u, &mut next.v] {
            for x in f.values_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
    }
    let growth = if err == 0.0 {
        2.0
    } else {
        (cfg.safety * err.powf(-1.0 / 3.0)).min(2.0)
    };
    Ok(StepOutcome {
        state: next,
        tau_next: tau * growth,
        accepted: true,
        error: err,
        min_before_clamp,
        last_stage: if clamped { None } else { Some((k4u, k4v)) },
    })
}

/// Per accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub tau: f64,
    /// Minimum density of the step result before clamping.
    pub min_before_clamp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<StepRecord>,
    pub rejected_steps: usize,
    /// Set when integration stopped early.
    pub failure: Option<String>,
}

impl RunTrajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Smallest pre-clamp density over all accepted steps.
    pub fn min_before_clamp(&self) -> f64 {
        self.series
            .iter()
            .map(|r| r.min_before_clamp)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn final_masses(&self) -> Option<(f64, f64)> {
        self.series.last().map(|r| (r.mass_u, r.mass_v))
    }
}

fn lerp(a: &ScalarField, b: &ScalarField, w: f64) -> ScalarField {
    let mut out = a.clone();
    for (o, x) in out.values_mut().iter_mut().zip(b.values()) {
        *o += w * (x - *o);
    }
    out
}

/// Integrates `initial` to `cfg.t_end`.
///
/// Snapshots at the requested times are linear interpolants between the
/// accepted steps that bracket them. The first record of `series` is the
/// initial state. On failure the trajectory up to the last accepted step is
/// returned with `failure` set.
pub fn run<S: System + ?Sized>(initial: &PdeState, system: &S, cfg: &IntegratorConfig) -> Result<RunTrajectory> {
    cfg.validate()?;
    initial.validate()?;
    Ok(run_observed(initial, system, cfg, |_| {}))
}

/// As `run`, calling `observe` on every accepted state.
pub fn run_observed<S: System + ?Sized>(
    initial: &PdeState,
    system: &S,
    cfg: &IntegratorConfig,
    mut observe: impl FnMut(&PdeState),
) -> RunTrajectory {
    let mut traj = RunTrajectory {
        snapshots: Vec::new(),
        series: vec![StepRecord {
            t: initial.t,
            mass_u: initial.u.total_mass(),
            mass_v: initial.v.total_mass(),
            tau: 0.0,
            min_before_clamp: initial.u.min().min(initial.v.min()),
        }],
        rejected_steps: 0,
        failure: None,
    };
    let mut pending = cfg.snapshot_times.iter().copied().peekable();
    while let Some(&ts) = pending.peek() {
        if ts <= initial.t {
            traj.snapshots.push(Snapshot {
                t: ts,
                u: initial.u.clone(),
                v: initial.v.clone(),
            });
            pending.next();
        } else {
            break;
        }
    }
    observe(initial);

    let mut state = initial.clone();
    let mut tau = cfg.tau0;
    let mut stage: Option<(ScalarField, ScalarField)> = None;
    let t_end = cfg.t_end;
    while state.t < t_end {
        let remaining = t_end - state.t;
        let last = tau >= remaining * (1.0 - 1e-12);
        let h = if last { remaining } else { tau };
        let outcome = match step_with(&state, system, h, cfg, stage.take()) {
            Ok(o) => o,
            Err(e) => {
                traj.failure = Some(e.to_string());
                break;
            }
        };
        if !outcome.accepted {
            traj.rejected_steps += 1;
            stage = outcome.last_stage;
            tau = outcome.tau_next;
            continue;
        }
        let mut next = outcome.state;
        if last {
            next.t = t_end;
        }
        while let Some(&ts) = pending.peek() {
            if ts > next.t {
                break;
            }
            let w = if next.t > state.t {
                (ts - state.t) / (next.t - state.t)
            } else {
                1.0
            };
            traj.snapshots.push(Snapshot {
                t: ts,
                u: lerp(&state.u, &next.u, w),
                v: lerp(&state.v, &next.v, w),
            });
            pending.next();
        }
        traj.series.push(StepRecord {
            t: next.t,
            mass_u: next.u.total_mass(),
            mass_v: next.v.total_mass(),
            tau: h,
            min_before_clamp: outcome.min_before_clamp,
        });
        observe(&next);
        stage = outcome.last_stage;
        // keep the controller's proposal rather than the clipped final size
        tau = if last { tau.max(outcome.tau_next) } else { outcome.tau_next };
        state = next;
    }
    traj
}

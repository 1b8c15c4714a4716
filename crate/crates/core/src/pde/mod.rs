//! Right-hand side of the coupled two-force integro-PDE system.
//!
//! For a force `w` facing enemy `e` the tendency is
//!
//! ```text
//! dw/dt = div(D grad w)                              diffusion
//!       - [w (k_fire * e) + d e]                     attrition
//!       - div(w V)                                   transport
//! V     = C_eff w + A_a grad(K_a * w) - A_r w grad(K_r * w)
//! ```
//!
//! where `C_eff` is the goal velocity after the force's combat switch.

mod flux;

pub use flux::{diffusion, koren, limited_face_value, transport, FaceVelocity};

use crate::error::{Error, Result};
use crate::grid::{
    self, build_firing_kernel, gradient, Convolver, Grid, Kernel, PreparedKernel, ScalarField,
    VectorField,
};

/// Gradients weaker than this leave the pursuit direction undefined (zero).
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// How a force's goal velocity reacts to the local balance of forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchMode {
    /// Constant goal velocity.
    None,
    /// `+C` with a strict local advantage above the threshold, `-C` otherwise.
    Front,
    /// `C` plus pursuit (or retreat) along the enemy-mass gradient.
    Pursuit,
}

impl SwitchMode {
    pub fn name(self) -> &'static str {
        match self {
            SwitchMode::None => "none",
            SwitchMode::Front => "front",
            SwitchMode::Pursuit => "pursuit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(SwitchMode::None),
            "front" => Some(SwitchMode::Front),
            "pursuit" => Some(SwitchMode::Pursuit),
            _ => None,
        }
    }
}

/// Continuum coefficients and initial profile of one force.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeForceParams {
    /// `D`
    pub diffusion: f64,
    /// `C`, signed; points at the force's goal.
    pub goal_velocity: (f64, f64),
    /// `A_a`
    pub attraction: f64,
    /// `A_r`
    pub repulsion: f64,
    /// `r_a`
    pub attraction_radius: f64,
    /// `r_r`
    pub repulsion_radius: f64,
    /// `r_S`, radius of the local-mass discs used by the combat switch.
    pub sensor_radius: f64,
    /// `Δc`
    pub combat_threshold: f64,
    /// `+1` aggressive, `-1` defensive.
    pub attack: i8,
    /// `d`, aimed-fire coefficient.
    pub aimed_fire: f64,
    /// `β`
    pub fire_rate: f64,
    /// `ν`
    pub fire_decay: f64,
    /// `r_op`
    pub operating_range: f64,
    /// `ID`, plateau density of the initial profile.
    pub peak_density: f64,
    /// `ρ`, radius of the initial profile.
    pub profile_radius: f64,
    /// `μ`, centre of the initial profile.
    pub centre: (f64, f64),
    /// `IT`; carried through configuration but not used by the dynamics.
    pub inner_threshold: f64,
    pub switch_mode: SwitchMode,
}

impl Default for PdeForceParams {
    fn default() -> Self {
        Self {
            diffusion: 0.0,
            goal_velocity: (0.0, 0.0),
            attraction: 0.0,
            repulsion: 0.0,
            attraction_radius: 5.0,
            repulsion_radius: 2.5,
            sensor_radius: 3.0,
            combat_threshold: 0.0,
            attack: -1,
            aimed_fire: 0.0,
            fire_rate: 0.0,
            fire_decay: 0.2,
            operating_range: 0.0,
            peak_density: 0.0,
            profile_radius: 5.0,
            centre: (0.0, 0.0),
            inner_threshold: 0.0,
            switch_mode: SwitchMode::None,
        }
    }
}

impl PdeForceParams {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("D", self.diffusion),
            ("A_a", self.attraction),
            ("A_r", self.repulsion),
            ("d", self.aimed_fire),
            ("beta", self.fire_rate),
            ("ID", self.peak_density),
            ("rho", self.profile_radius),
            ("r_op", self.operating_range),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        for (name, v) in [
            ("C.x", self.goal_velocity.0),
            ("C.y", self.goal_velocity.1),
            ("delta_c", self.combat_threshold),
            ("mu.x", self.centre.0),
            ("mu.y", self.centre.1),
            ("IT", self.inner_threshold),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(self.fire_decay > 0.0 && self.fire_decay.is_finite()) {
            return Err(Error::param("nu", format!("must be positive, got {}", self.fire_decay)));
        }
        if !(self.sensor_radius > 0.0 && self.sensor_radius.is_finite()) {
            return Err(Error::param("r_s", format!("must be positive, got {}", self.sensor_radius)));
        }
        if self.attack != 1 && self.attack != -1 {
            return Err(Error::param("attack", format!("must be 1 or -1, got {}", self.attack)));
        }
        if self.attraction != 0.0 || self.repulsion != 0.0 {
            if !(self.repulsion_radius > 0.0 && self.attraction_radius > self.repulsion_radius) {
                return Err(Error::param(
                    "r_a",
                    format!(
                        "need r_a > r_r > 0, got r_a = {}, r_r = {}",
                        self.attraction_radius, self.repulsion_radius
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Plateau of height `ID` and radius `ρ` around `μ`, with a half-cosine
    /// ramp one cell wide straddling the rim.
    pub fn initial_profile(&self, grid: Grid) -> ScalarField {
        let h = grid.dx.max(grid.dy);
        let inner = self.profile_radius - 0.5 * h;
        let (cx, cy) = self.centre;
        let peak = self.peak_density;
        ScalarField::from_fn(grid, |x, y| {
            let r = (x - cx).hypot(y - cy);
            if r <= inner {
                peak
            } else if r < inner + h {
                0.5 * peak * (1.0 + (std::f64::consts::PI * (r - inner) / h).cos())
            } else {
                0.0
            }
        })
    }
}

/// Red (`u`) and blue (`v`) densities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub u: ScalarField,
    pub v: ScalarField,
    pub t: f64,
}

impl PdeState {
    pub fn new(u: ScalarField, v: ScalarField, t: f64) -> Result<Self> {
        u.grid().check_same(v.grid())?;
        Ok(Self { u, v, t })
    }

    pub fn initial(grid: Grid, p_u: &PdeForceParams, p_v: &PdeForceParams) -> Self {
        Self {
            u: p_u.initial_profile(grid),
            v: p_v.initial_profile(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn validate(&self) -> Result<()> {
        self.u.grid().check_same(self.v.grid())?;
        for (name, f) in [("u", &self.u), ("v", &self.v)] {
            if let Some(k) = f.values().iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::param(name, format!("negative or non-finite density at cell {k}")));
            }
        }
        Ok(())
    }
}

/// `-[w (k_fire * enemy) + d enemy]`; `k_fire` comes from the enemy's
/// `β, ν`.
pub fn f_react(w: &ScalarField, enemy: &ScalarField, p: &PdeForceParams, k_fire: &Kernel) -> Result<ScalarField> {
    w.grid().check_same(enemy.grid())?;
    let fire = if k_fire.is_zero() {
        ScalarField::zeros(*w.grid())
    } else {
        grid::clamp_roundoff(enemy, grid::convolve(enemy, k_fire)?)
    };
    Ok(react_from_fire(w, enemy, &fire, p.aimed_fire))
}

fn react_from_fire(w: &ScalarField, enemy: &ScalarField, fire: &ScalarField, d: f64) -> ScalarField {
    let values = w
        .values()
        .iter()
        .zip(enemy.values())
        .zip(fire.values())
        .map(|((w, e), f)| -(w * f + d * e))
        .collect();
    ScalarField::from_values(*w.grid(), values).expect("finite attrition")
}

/// `div(D grad w)` with constant `D` and zero-flux walls.
pub fn f_diff(w: &ScalarField, p: &PdeForceParams) -> ScalarField {
    diffusion(w, p.diffusion)
}

/// Goal velocity after the front switch: `+C` where
/// `own_mass - enemy_mass > Δc`, `-C` otherwise.
pub fn combat_switch_front(own_mass: &ScalarField, enemy_mass: &ScalarField, p: &PdeForceParams) -> VectorField {
    let g = *own_mass.grid();
    let (cx, cy) = p.goal_velocity;
    let mut vx = Vec::with_capacity(g.len());
    let mut vy = Vec::with_capacity(g.len());
    for (m, e) in own_mass.values().iter().zip(enemy_mass.values()) {
        let s = if m - e > p.combat_threshold { 1.0 } else { -1.0 };
        vx.push(s * cx);
        vy.push(s * cy);
    }
    VectorField {
        x: ScalarField::from_values(g, vx).expect("finite velocity"),
        y: ScalarField::from_values(g, vy).expect("finite velocity"),
    }
}

/// Goal velocity after the pursuit switch:
/// `C + s * enemy_mass * unit(grad enemy_mass)`, with `s = +1` where
/// `own_mass - enemy_mass >= Δc` and `s = attack` elsewhere.
///
/// `enemy_mass` is the local mass of the enemy within the sensor radius.
pub fn combat_switch_pursuit(own_mass: &ScalarField, enemy_mass: &ScalarField, p: &PdeForceParams) -> VectorField {
    let g = *own_mass.grid();
    let grad = gradient(enemy_mass);
    let (cx, cy) = p.goal_velocity;
    let attack = f64::from(p.attack);
    let mut vx = Vec::with_capacity(g.len());
    let mut vy = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let m = own_mass.values()[k];
        let e = enemy_mass.values()[k];
        let (gx, gy) = grad.at(k);
        let norm = gx.hypot(gy);
        let s = if m - e >= p.combat_threshold { 1.0 } else { attack };
        if norm < GRADIENT_FLOOR {
            vx.push(cx);
            vy.push(cy);
        } else {
            vx.push(cx + s * e * gx / norm);
            vy.push(cy + s * e * gy / norm);
        }
    }
    VectorField {
        x: ScalarField::from_values(g, vx).expect("finite velocity"),
        y: ScalarField::from_values(g, vy).expect("finite velocity"),
    }
}

/// Face velocities of the transport term from the cell-centred goal
/// velocity and the cohesion/crowding potentials `K_a * w`, `K_r * w`.
fn face_velocity(
    w: &ScalarField,
    goal: &VectorField,
    attraction: Option<(f64, &ScalarField)>,
    repulsion: Option<(f64, &ScalarField)>,
) -> FaceVelocity {
    let g = *w.grid();
    let (nx, ny) = (g.nx, g.ny);
    let f = w.values();
    let mut vel = FaceVelocity::zeros(&g);
    let face = |k: usize, l: usize, h: f64, goal: &[f64]| -> f64 {
        let mean = 0.5 * (f[k] + f[l]);
        let mut a = 0.5 * (goal[k] + goal[l]) * mean;
        if let Some((coef, phi)) = attraction {
            a += coef * (phi.values()[l] - phi.values()[k]) / h;
        }
        if let Some((coef, phi)) = repulsion {
            a -= coef * mean * (phi.values()[l] - phi.values()[k]) / h;
        }
        a
    };
    for j in 0..ny {
        for i in 0..nx - 1 {
            let k = g.index(i, j);
            vel.x[j * (nx - 1) + i] = face(k, k + 1, g.dx, goal.x.values());
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let k = g.index(i, j);
            vel.y[j * nx + i] = face(k, k + nx, g.dy, goal.y.values());
        }
    }
    vel
}

/// Transport term `-div(w V)` with
/// `V = goal w + A_a grad(K_a * w) - A_r w grad(K_r * w)`.
pub fn f_vel(
    w: &ScalarField,
    goal: &VectorField,
    p: &PdeForceParams,
    k_a: &Kernel,
    k_r: &Kernel,
) -> Result<ScalarField> {
    w.grid().check_same(goal.grid())?;
    let phi_a = if p.attraction != 0.0 { Some(grid::convolve(w, k_a)?) } else { None };
    let phi_r = if p.repulsion != 0.0 { Some(grid::convolve(w, k_r)?) } else { None };
    let vel = face_velocity(
        w,
        goal,
        phi_a.as_ref().map(|phi| (p.attraction, phi)),
        phi_r.as_ref().map(|phi| (p.repulsion, phi)),
    );
    Ok(transport(w, &vel))
}

struct ForceKernels {
    attraction: Option<PreparedKernel>,
    repulsion: Option<PreparedKernel>,
    sensor: Option<PreparedKernel>,
    /// Fire this force delivers, applied to its own density.
    fire: Option<PreparedKernel>,
}

/// Kernels and transforms prepared once for a pair of forces on one grid.
pub struct PdeModel {
    grid: Grid,
    p_u: PdeForceParams,
    p_v: PdeForceParams,
    conv: Convolver,
    ku: ForceKernels,
    kv: ForceKernels,
}

impl std::fmt::Debug for PdeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdeModel")
            .field("grid", &self.grid)
            .field("p_u", &self.p_u)
            .field("p_v", &self.p_v)
            .finish()
    }
}

/// One evaluation of the right-hand side, split by term.
#[derive(Debug, Clone)]
pub struct RhsTerms {
    pub diffusion: ScalarField,
    pub reaction: ScalarField,
    pub transport: ScalarField,
}

impl RhsTerms {
    pub fn total(&self) -> ScalarField {
        let mut out = self.diffusion.clone();
        for ((o, r), t) in out
            .values_mut()
            .iter_mut()
            .zip(self.reaction.values())
            .zip(self.transport.values())
        {
            *o += r + t;
        }
        out
    }
}

impl PdeModel {
    pub fn new(grid: Grid, p_u: PdeForceParams, p_v: PdeForceParams) -> Result<Self> {
        p_u.validate()?;
        p_v.validate()?;
        let mut conv = Convolver::new(grid);
        let ku = Self::kernels(&mut conv, &grid, &p_u)?;
        let kv = Self::kernels(&mut conv, &grid, &p_v)?;
        Ok(Self {
            grid,
            p_u,
            p_v,
            conv,
            ku,
            kv,
        })
    }

    fn kernels(conv: &mut Convolver, grid: &Grid, p: &PdeForceParams) -> Result<ForceKernels> {
        let attraction = if p.attraction != 0.0 {
            Some(conv.prepare(&Kernel::attraction(p.attraction_radius, grid)?)?)
        } else {
            None
        };
        let repulsion = if p.repulsion != 0.0 {
            Some(conv.prepare(&Kernel::repulsion(p.repulsion_radius, grid)?)?)
        } else {
            None
        };
        let sensor = if p.switch_mode != SwitchMode::None {
            Some(conv.prepare(&Kernel::disc(p.sensor_radius, grid)?)?)
        } else {
            None
        };
        let fire_kernel = build_firing_kernel(p.fire_rate, p.fire_decay, p.operating_range, grid)?;
        let fire = if fire_kernel.is_zero() {
            None
        } else {
            Some(conv.prepare(&fire_kernel)?)
        };
        Ok(ForceKernels {
            attraction,
            repulsion,
            sensor,
            fire,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> (&PdeForceParams, &PdeForceParams) {
        (&self.p_u, &self.p_v)
    }

    /// Convolves `a` and `b` with one kernel each; shares a transform when
    /// the kernels coincide.
    fn pair(
        &self,
        a: &ScalarField,
        ka: Option<&PreparedKernel>,
        b: &ScalarField,
        kb: Option<&PreparedKernel>,
    ) -> (Option<ScalarField>, Option<ScalarField>) {
        match (ka, kb) {
            (Some(x), Some(y)) if x.kernel() == y.kernel() => {
                let (fa, fb) = self.conv.apply_pair(a, Some(b), x);
                (
                    Some(grid::clamp_roundoff(a, fa)),
                    fb.map(|fb| grid::clamp_roundoff(b, fb)),
                )
            }
            _ => (
                ka.map(|k| grid::clamp_roundoff(a, self.conv.apply(a, k))),
                kb.map(|k| grid::clamp_roundoff(b, self.conv.apply(b, k))),
            ),
        }
    }

    fn goal(&self, p: &PdeForceParams, own_mass: Option<&ScalarField>, enemy_mass: Option<&ScalarField>) -> VectorField {
        match (p.switch_mode, own_mass, enemy_mass) {
            (SwitchMode::Front, Some(m), Some(e)) => combat_switch_front(m, e, p),
            (SwitchMode::Pursuit, Some(m), Some(e)) => combat_switch_pursuit(m, e, p),
            _ => VectorField::constant(self.grid, p.goal_velocity.0, p.goal_velocity.1),
        }
    }

    /// Goal velocities of both forces after their combat switches.
    pub fn goal_velocities(&self, state: &PdeState) -> (VectorField, VectorField) {
        let (u, v) = (&state.u, &state.v);
        let su = self.ku.sensor.as_ref();
        let sv = self.kv.sensor.as_ref();
        // local masses inside each force's own sensor disc
        let (u_in_su, v_in_su) = self.pair(u, su, v, su);
        let (u_in_sv, v_in_sv) = self.pair(u, sv, v, sv);
        let goal_u = self.goal(&self.p_u, u_in_su.as_ref(), v_in_su.as_ref());
        let goal_v = self.goal(&self.p_v, v_in_sv.as_ref(), u_in_sv.as_ref());
        (goal_u, goal_v)
    }

    /// Right-hand side split into its three terms for each force.
    pub fn terms(&self, state: &PdeState) -> (RhsTerms, RhsTerms) {
        let (u, v) = (&state.u, &state.v);
        let (goal_u, goal_v) = self.goal_velocities(state);

        let (phi_a_u, phi_a_v) = self.pair(u, self.ku.attraction.as_ref(), v, self.kv.attraction.as_ref());
        let (phi_r_u, phi_r_v) = self.pair(u, self.ku.repulsion.as_ref(), v, self.kv.repulsion.as_ref());
        // fire received by u is delivered by v and vice versa
        let (fire_from_u, fire_from_v) = self.pair(u, self.ku.fire.as_ref(), v, self.kv.fire.as_ref());

        let zero = ScalarField::zeros(self.grid);
        let vel_u = face_velocity(
            u,
            &goal_u,
            phi_a_u.as_ref().map(|phi| (self.p_u.attraction, phi)),
            phi_r_u.as_ref().map(|phi| (self.p_u.repulsion, phi)),
        );
        let vel_v = face_velocity(
            v,
            &goal_v,
            phi_a_v.as_ref().map(|phi| (self.p_v.attraction, phi)),
            phi_r_v.as_ref().map(|phi| (self.p_v.repulsion, phi)),
        );
        let tu = RhsTerms {
            diffusion: diffusion(u, self.p_u.diffusion),
            reaction: react_from_fire(u, v, fire_from_v.as_ref().unwrap_or(&zero), self.p_u.aimed_fire),
            transport: transport(u, &vel_u),
        };
        let tv = RhsTerms {
            diffusion: diffusion(v, self.p_v.diffusion),
            reaction: react_from_fire(v, u, fire_from_u.as_ref().unwrap_or(&zero), self.p_v.aimed_fire),
            transport: transport(v, &vel_v),
        };
        (tu, tv)
    }

    /// `(du/dt, dv/dt)`.
    pub fn rhs(&self, state: &PdeState) -> (ScalarField, ScalarField) {
        let (tu, tv) = self.terms(state);
        (tu.total(), tv.total())
    }
}

/// One-shot right-hand side; builds kernels on every call.
pub fn rhs(state: &PdeState, p_u: &PdeForceParams, p_v: &PdeForceParams) -> Result<(ScalarField, ScalarField)> {
    state.validate()?;
    let model = PdeModel::new(*state.grid(), p_u.clone(), p_v.clone())?;
    Ok(model.rhs(state))
}

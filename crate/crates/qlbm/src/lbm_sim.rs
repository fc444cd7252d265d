//! Reference lattice Boltzmann simulator.
//!
//! BGK collision with the exact second-order equilibrium, followed by a
//! double-buffered pull-form streaming step with halfway bounce-back at
//! solid nodes. All quantities are in lattice units except where a grid
//! spacing and time step are passed explicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{boundary_links, GridSpec, SolidMask, C, OPPOSITE, Q, W};

/// Distribution functions laid out by flat variable index.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub time_step: u64,
}

impl PopulationField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len_f()], time_step: 0 }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len_f() {
            return Err(Error::Dimension(format!(
                "expected {} populations, got {}",
                grid.len_f(),
                values.len()
            )));
        }
        Ok(Self { grid, values, time_step: 0 })
    }

    #[inline]
    pub fn node(&self, a: usize) -> &[f64] {
        &self.values[a * Q..(a + 1) * Q]
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn total_momentum(&self) -> [f64; 3] {
        let mut p = [0.0; 3];
        for chunk in self.values.chunks_exact(Q) {
            let m = momentum(chunk);
            for d in 0..3 {
                p[d] += m[d];
            }
        }
        p
    }

    /// Largest `|f|` over solid nodes; zero for a valid field.
    pub fn max_abs_at_solid(&self, mask: &SolidMask) -> f64 {
        (0..self.grid.n())
            .filter(|a| mask.is_solid(*a))
            .flat_map(|a| self.node(a).iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Relaxation time, initial velocity and density tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub tau: f64,
    pub initial_velocity: [f64; 3],
    pub epsilon_rho: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { tau: 0.6, initial_velocity: [0.0; 3], epsilon_rho: 1e-3 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        validate_tau(self.tau)?;
        if !(self.epsilon_rho > 0.0) {
            return Err(Error::Config("epsilon_rho must be positive".into()));
        }
        if self.initial_velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial velocity must be finite".into()));
        }
        Ok(())
    }

    /// True when the initial lattice speed exceeds the usual 0.2 guidance.
    pub fn speed_warning(&self) -> Option<String> {
        let s = self.initial_velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
        (s > 0.2).then(|| format!("initial lattice speed {s:.3} exceeds 0.2"))
    }
}

pub fn validate_tau(tau: f64) -> Result<()> {
    if !(tau > 0.5 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0.5, 1], got {tau}")));
    }
    Ok(())
}

/// Which equilibrium the collision operator relaxes towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumModel {
    Exact,
    Cubic,
}

#[inline]
fn momentum(f: &[f64]) -> [f64; 3] {
    let mut m = [0.0; 3];
    for i in 0..Q {
        for d in 0..3 {
            m[d] += f[i] * C[i][d] as f64;
        }
    }
    m
}

/// Density and momentum density of one node.
pub fn local_moments(f: &[f64]) -> (f64, [f64; 3]) {
    (f.iter().sum(), momentum(f))
}

#[inline]
fn cu(i: usize, u: [f64; 3]) -> f64 {
    C[i][0] as f64 * u[0] + C[i][1] as f64 * u[1] + C[i][2] as f64 * u[2]
}

/// Second-order equilibrium `w_i rho (1 + 3 u.c + 9/2 (u.c)^2 - 3/2 u.u)`.
pub fn equilibrium(rho: f64, u: [f64; 3]) -> [f64; Q] {
    let uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let mut out = [0.0; Q];
    for i in 0..Q {
        let e = cu(i, u);
        out[i] = W[i] * rho * (1.0 + 3.0 * e + 4.5 * e * e - 1.5 * uu);
    }
    out
}

fn equilibrium_of(f: &[f64]) -> [f64; Q] {
    let (rho, j) = local_moments(f);
    if rho == 0.0 {
        return [0.0; Q];
    }
    equilibrium(rho, [j[0] / rho, j[1] / rho, j[2] / rho])
}

/// Cubic equilibrium with `1/rho` replaced by `2 - rho`; polynomial in `f`.
pub fn approx_equilibrium(f: &[f64]) -> [f64; Q] {
    let (rho, j) = local_moments(f);
    let jj = j[0] * j[0] + j[1] * j[1] + j[2] * j[2];
    let inv = 2.0 - rho;
    let mut out = [0.0; Q];
    for i in 0..Q {
        let e = cu(i, j);
        out[i] = W[i] * (rho + 3.0 * e + 4.5 * inv * e * e - 1.5 * inv * jj);
    }
    out
}

fn local_equilibrium(f: &[f64], model: EquilibriumModel) -> [f64; Q] {
    match model {
        EquilibriumModel::Exact => equilibrium_of(f),
        EquilibriumModel::Cubic => approx_equilibrium(f),
    }
}

/// Equilibrium populations at fluid nodes, zero at solid nodes.
pub fn init_field(mask: &SolidMask, rho: f64, u: [f64; 3]) -> PopulationField {
    let grid = mask.grid;
    let feq = equilibrium(rho, u);
    let mut field = PopulationField::zeros(grid);
    field
        .values
        .par_chunks_mut(Q)
        .enumerate()
        .for_each(|(a, out)| {
            if mask.is_fluid(a) {
                out.copy_from_slice(&feq);
            }
        });
    field
}

/// BGK relaxation at fluid nodes; solid nodes are left untouched.
pub fn collide(field: &PopulationField, mask: &SolidMask, tau: f64) -> PopulationField {
    collide_with(field, mask, tau, EquilibriumModel::Exact)
}

pub fn collide_with(
    field: &PopulationField,
    mask: &SolidMask,
    tau: f64,
    model: EquilibriumModel,
) -> PopulationField {
    let mut out = field.clone();
    out.values
        .par_chunks_mut(Q)
        .enumerate()
        .for_each(|(a, f)| {
            if mask.is_fluid(a) {
                let feq = local_equilibrium(f, model);
                for i in 0..Q {
                    f[i] -= (f[i] - feq[i]) / tau;
                }
            }
        });
    out
}

/// Free streaming with halfway bounce-back, periodic in every axis.
pub fn stream(field: &PopulationField, mask: &SolidMask) -> PopulationField {
    let grid = field.grid;
    let src = &field.values;
    let mut values = vec![0.0; src.len()];
    values.par_chunks_mut(Q).enumerate().for_each(|(y, out)| {
        if mask.is_solid(y) {
            return;
        }
        for i in 0..Q {
            let from = grid.neighbor(y, i, -1);
            out[i] = if mask.is_fluid(from) {
                src[from * Q + i]
            } else {
                src[y * Q + OPPOSITE[i]]
            };
        }
    });
    PopulationField { grid, values, time_step: field.time_step }
}

/// One collide-then-stream update.
pub fn step(field: &PopulationField, config: &SimConfig, mask: &SolidMask) -> PopulationField {
    step_with_exchange(field, config, mask).0
}

/// One update plus the momentum handed to the solid during streaming.
pub fn step_with_exchange(
    field: &PopulationField,
    config: &SimConfig,
    mask: &SolidMask,
) -> (PopulationField, [f64; 3]) {
    let post = collide(field, mask, config.tau);
    let mut next = stream(&post, mask);
    next.time_step = field.time_step + 1;
    let j = momentum_exchange(&post, &next, mask);
    (next, j)
}

/// Time derivative of the continuous form: streaming difference plus
/// collision towards the chosen equilibrium.
pub fn continuous_rhs(field: &PopulationField, mask: &SolidMask, tau: f64, model: EquilibriumModel) -> Vec<f64> {
    let grid = field.grid;
    let f = &field.values;
    let mut out = vec![0.0; f.len()];
    out.par_chunks_mut(Q).enumerate().for_each(|(a, d)| {
        if mask.is_solid(a) {
            return;
        }
        let local = &f[a * Q..(a + 1) * Q];
        let feq = local_equilibrium(local, model);
        for i in 0..Q {
            let from = grid.neighbor(a, i, -1);
            let incoming = if mask.is_fluid(from) { f[from * Q + i] } else { local[OPPOSITE[i]] };
            d[i] = incoming - local[i] - (local[i] - feq[i]) / tau;
        }
    });
    out
}

/// Density and velocity at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroFields {
    pub density: Vec<f64>,
    pub velocity: Vec<[f64; 3]>,
    /// Nodes with zero density, where velocity is reported as zero.
    pub zero_density_nodes: usize,
}

impl MacroFields {
    /// Largest `|1 - rho|` over fluid nodes.
    pub fn max_density_deviation(&self, mask: &SolidMask) -> f64 {
        self.density
            .iter()
            .enumerate()
            .filter(|(a, _)| mask.is_fluid(*a))
            .map(|(_, r)| (1.0 - r).abs())
            .fold(0.0, f64::max)
    }
}

pub fn macro_fields(field: &PopulationField) -> MacroFields {
    let mut density = Vec::with_capacity(field.grid.n());
    let mut velocity = Vec::with_capacity(field.grid.n());
    let mut zero = 0;
    for chunk in field.values.chunks_exact(Q) {
        let (rho, j) = local_moments(chunk);
        density.push(rho);
        if rho == 0.0 {
            zero += 1;
            velocity.push([0.0; 3]);
        } else {
            velocity.push([j[0] / rho, j[1] / rho, j[2] / rho]);
        }
    }
    MacroFields { density, velocity, zero_density_nodes: zero }
}

/// Drag along x from a single field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragReport {
    pub force: f64,
    pub links: usize,
    /// Set when there are no boundary links and the force is trivially zero.
    pub no_links: bool,
}

/// `(dx^3/dt) * sum over links of (f_i(x) + f_opp(x)) c_ix`.
pub fn drag_force(field: &PopulationField, mask: &SolidMask, dx: f64, dt: f64) -> DragReport {
    let links = boundary_links(mask);
    let f = &field.values;
    let sum: f64 = links
        .iter()
        .map(|l| (f[l.node * Q + l.dir] + f[l.node * Q + OPPOSITE[l.dir]]) * C[l.dir][0] as f64)
        .sum();
    DragReport { force: dx.powi(3) / dt * sum, links: links.len(), no_links: links.is_empty() }
}

/// Momentum given to the solid during one streaming step, in lattice units:
/// outgoing post-collision populations plus the reflected post-stream ones.
pub fn momentum_exchange(pre_stream: &PopulationField, post_stream: &PopulationField, mask: &SolidMask) -> [f64; 3] {
    let mut j = [0.0; 3];
    for l in boundary_links(mask) {
        let s = pre_stream.values[l.node * Q + l.dir] + post_stream.values[l.node * Q + OPPOSITE[l.dir]];
        for d in 0..3 {
            j[d] += s * C[l.dir][d] as f64;
        }
    }
    j
}

/// One row of the drag series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragSample {
    pub step: u64,
    pub drag_n: f64,
    pub total_mass: f64,
    pub max_density_deviation: f64,
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<DragSample>,
    pub snapshots: Vec<PopulationField>,
    pub final_field: PopulationField,
    /// Steps whose density deviation exceeded `10 * epsilon_rho`.
    pub density_warnings: usize,
}

/// Physical scaling used to report drag in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub dx: f64,
    pub dt: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Self { dx: 1.0, dt: 1.0 }
    }
}

/// Runs `steps` updates from the equilibrium initial state.
/// `snapshot_every = 0` keeps only the initial snapshot.
pub fn run(
    config: &SimConfig,
    mask: &SolidMask,
    steps: u64,
    scaling: Scaling,
    snapshot_every: u64,
) -> Result<Trajectory> {
    config.validate()?;
    let mut field = init_field(mask, 1.0, config.initial_velocity);
    let mut snapshots = vec![field.clone()];
    let mut samples = Vec::with_capacity(steps as usize);
    let mut warnings = 0;
    let factor = scaling.dx.powi(3) / scaling.dt;
    for s in 1..=steps {
        let (next, j) = step_with_exchange(&field, config, mask);
        field = next;
        let dev = macro_fields(&field).max_density_deviation(mask);
        if dev > 10.0 * config.epsilon_rho {
            warnings += 1;
        }
        let mass = field.total_mass();
        if !mass.is_finite() {
            return Err(Error::Numerical(format!("non-finite mass at step {s}")));
        }
        samples.push(DragSample { step: s, drag_n: factor * j[0], total_mass: mass, max_density_deviation: dev });
        if snapshot_every > 0 && s % snapshot_every == 0 {
            snapshots.push(field.clone());
        }
    }
    Ok(Trajectory { samples, snapshots, final_field: field, density_warnings: warnings })
}

/// CSV rows `x,y,z,i,f`.
pub fn snapshot_csv(field: &PopulationField) -> String {
    let mut s = String::from("x,y,z,i,f\n");
    for (mu, v) in field.values.iter().enumerate() {
        let p = field.grid.node_coords(mu / Q);
        s.push_str(&format!("{},{},{},{},{:e}\n", p[0], p[1], p[2], mu % Q, v));
    }
    s
}

pub fn drag_series_csv(samples: &[DragSample]) -> String {
    let mut s = String::from("step,drag_N,total_mass,max_density_deviation\n");
    for r in samples {
        s.push_str(&format!("{},{:e},{:.17e},{:e}\n", r.step, r.drag_n, r.total_mass, r.max_density_deviation));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_equilibrium_is_weights() {
        let f = equilibrium(1.0, [0.0; 3]);
        for i in 0..Q {
            assert_eq!(f[i], W[i]);
        }
    }

    #[test]
    fn single_link_drag() {
        let g = GridSpec::new(3, 1, 1).unwrap();
        let mask = SolidMask::from_flags(g, vec![false, true, false]).unwrap();
        let mut field = PopulationField::zeros(g);
        // direction 24 is (1,0,0); only node 0 carries populations
        field.values[24] = 0.5;
        field.values[OPPOSITE[24]] = 0.5;
        let r = drag_force(&field, &mask, 1.0, 1.0);
        assert!((r.force - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_one_gives_equilibrium() {
        let g = GridSpec::cube(2).unwrap();
        let mask = SolidMask::all_fluid(g);
        let mut field = init_field(&mask, 1.0, [0.02, 0.0, 0.01]);
        field.values[5] += 0.01;
        let out = collide(&field, &mask, 1.0);
        let feq = equilibrium_of(field.node(0));
        for i in 0..Q {
            assert!((out.values[i] - feq[i]).abs() < 1e-15);
        }
    }
}

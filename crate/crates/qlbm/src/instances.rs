//! Problem-instance catalog and physical-to-lattice parameter derivation.
//!
//! Node counts reach `1e26`, so every size is carried as `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridSpec, Q};
use crate::lbm_sim::validate_tau;

/// Water at 20 C.
pub const WATER_NU: f64 = 1.003e-6;
pub const WATER_RHO: f64 = 998.21;
pub const DEFAULT_TAU: f64 = 0.6;
pub const VELOCITY_MARGIN: f64 = 1.05;
/// Lattice Mach numbers above this are flagged.
pub const MACH_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeometryDescriptor {
    Sphere { center: [f64; 3], radius: f64 },
    /// Hull carried as bounding data only.
    Hull { length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum DxRule {
    /// `dx = L / Re`.
    LengthOverReynolds,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalInstance {
    pub id: String,
    pub name: String,
    pub kinematic_viscosity: f64,
    pub density: f64,
    pub characteristic_length: f64,
    pub reynolds: f64,
    pub velocity: f64,
    /// `[min, max]` per axis in metres.
    pub domain: [[f64; 2]; 3],
    pub geometry: GeometryDescriptor,
    pub velocity_margin: f64,
    pub dx_rule: DxRule,
    /// Advective time stored as data instead of `L / u_max`.
    #[serde(default)]
    pub advective_time: Option<f64>,
    /// Fluid-node count stored as data instead of derived.
    #[serde(default)]
    pub fluid_nodes: Option<f64>,
}

pub fn velocity_from_reynolds(re: f64, nu: f64, length: f64) -> f64 {
    nu * re / length
}

pub fn reynolds_from_velocity(u: f64, nu: f64, length: f64) -> f64 {
    u * length / nu
}

/// Rounds to one significant figure.
pub fn round_one_sig_fig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor();
    let scale = 10f64.powf(e);
    (x / scale).round() * scale
}

impl PhysicalInstance {
    /// Builds an instance from a Reynolds number, deriving the velocity.
    pub fn from_reynolds(
        id: &str,
        name: &str,
        reynolds: f64,
        length: f64,
        domain: [[f64; 2]; 3],
        geometry: GeometryDescriptor,
    ) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kinematic_viscosity: WATER_NU,
            density: WATER_RHO,
            characteristic_length: length,
            reynolds,
            velocity: velocity_from_reynolds(reynolds, WATER_NU, length),
            domain,
            geometry,
            velocity_margin: VELOCITY_MARGIN,
            dx_rule: DxRule::LengthOverReynolds,
            advective_time: None,
            fluid_nodes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("kinematic_viscosity", self.kinematic_viscosity),
            ("density", self.density),
            ("characteristic_length", self.characteristic_length),
            ("reynolds", self.reynolds),
            ("velocity", self.velocity),
            ("velocity_margin", self.velocity_margin),
        ];
        for (k, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        for (ax, [lo, hi]) in self.domain.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::Config(format!("domain axis {ax} is empty")));
            }
        }
        if let DxRule::Fixed(dx) = self.dx_rule {
            if !(dx > 0.0) {
                return Err(Error::Config("fixed dx must be positive".into()));
            }
        }
        let re = reynolds_from_velocity(self.velocity, self.kinematic_viscosity, self.characteristic_length);
        if ((re - self.reynolds) / self.reynolds).abs() > 1e-2 {
            return Err(Error::Config(format!(
                "velocity {} gives Re = {re:.4e}, inconsistent with stored Re = {:.4e}",
                self.velocity, self.reynolds
            )));
        }
        Ok(())
    }

    pub fn u_max(&self) -> f64 {
        self.velocity_margin * self.velocity
    }

    pub fn extents(&self) -> [f64; 3] {
        self.domain.map(|[lo, hi]| hi - lo)
    }

    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn dx(&self) -> f64 {
        match self.dx_rule {
            DxRule::LengthOverReynolds => self.characteristic_length / self.reynolds,
            DxRule::Fixed(dx) => dx,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeInstance {
    pub id: String,
    pub reynolds: f64,
    pub velocity: f64,
    pub u_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub tau: f64,
    pub advective_time: f64,
    pub t_star: f64,
    /// `T* / dt` before rounding.
    pub t_steps_exact: f64,
    pub t_steps: f64,
    pub grid_counts: [f64; 3],
    pub n: f64,
    pub nq: f64,
    pub carleman_dimension: f64,
    pub n_f: f64,
    pub lattice_velocity: f64,
    pub lattice_mach: f64,
    pub volume: f64,
    /// Obstacle radius used by the drag-coefficient bound; half the hull
    /// length for hulls.
    pub obstacle_radius: f64,
    pub warnings: Vec<String>,
}

impl LatticeInstance {
    /// A simulable grid; refuses anything beyond `max_nodes`.
    pub fn grid(&self, max_nodes: f64) -> Result<GridSpec> {
        if self.n > max_nodes {
            return Err(Error::Capacity(format!("instance {} has n = {:.3e} nodes (limit {max_nodes:e})", self.id, self.n)));
        }
        let [x, y, z] = self.grid_counts;
        GridSpec::new(x as usize, y as usize, z as usize)
    }

    /// Residual of `nu = cs^2 (tau - 1/2) dx^2 / dt`, relative to `nu`.
    pub fn consistency_residual(&self, nu: f64) -> f64 {
        let lhs = (self.tau - 0.5) / 3.0 * self.dx * self.dx / self.dt;
        ((lhs - nu) / nu).abs()
    }
}

pub fn derive_dt(nu: f64, tau: f64, dx: f64) -> f64 {
    (tau - 0.5) / 3.0 * dx * dx / nu
}

pub fn derive_lattice(instance: &PhysicalInstance, tau: f64) -> Result<LatticeInstance> {
    validate_tau(tau)?;
    instance.validate()?;
    let nu = instance.kinematic_viscosity;
    let dx = instance.dx();
    let dt = derive_dt(nu, tau, dx);
    let u_max = instance.u_max();
    let advective_time = instance.advective_time.unwrap_or(instance.characteristic_length / u_max);
    let t_star = 2.0 * advective_time;
    let t_steps_exact = t_star / dt;
    let grid_counts = instance.extents().map(|e| (e / dx).round());
    let n: f64 = grid_counts.iter().product();
    let nq = n * Q as f64;
    let (n_f, obstacle_radius) = match instance.geometry {
        GeometryDescriptor::Sphere { radius, .. } => {
            let solid = (4.0 / 3.0 * std::f64::consts::PI * radius.powi(3) / dx.powi(3)).round();
            (instance.fluid_nodes.unwrap_or(n - solid), radius)
        }
        GeometryDescriptor::Hull { length } => (instance.fluid_nodes.unwrap_or(n), length / 2.0),
    };
    let lattice_velocity = u_max * dt / dx;
    let lattice_mach = lattice_velocity * 3f64.sqrt();
    let mut warnings = Vec::new();
    if lattice_mach > MACH_LIMIT {
        warnings.push(format!("lattice Mach {lattice_mach:.3} exceeds {MACH_LIMIT}"));
    }
    Ok(LatticeInstance {
        id: instance.id.clone(),
        reynolds: instance.reynolds,
        velocity: instance.velocity,
        u_max,
        dx,
        dt,
        tau,
        advective_time,
        t_star,
        t_steps_exact,
        t_steps: t_steps_exact.round(),
        grid_counts,
        n,
        nq,
        carleman_dimension: nq + nq * nq + nq * nq * nq,
        n_f,
        lattice_velocity,
        lattice_mach,
        volume: instance.volume(),
        obstacle_radius,
        warnings,
    })
}

/// `(phi_min, phi_max)`: bounds on `||phi||_2` over incompressible states.
pub fn phi_norm_bounds(n_f: f64, eps_rho: f64) -> (f64, f64) {
    let q = Q as f64;
    let lo_base = (1.0 - eps_rho / q).powi(2) / q;
    let hi_base = (1.0 + eps_rho).powi(2);
    let (mut lo, mut hi) = (0.0, 0.0);
    for k in 1..=3 {
        lo += (n_f * lo_base).powi(k);
        hi += (n_f * hi_base).powi(k);
    }
    (lo.sqrt(), hi.sqrt())
}

/// `(||f||_min, ||f||_max)` over incompressible states.
pub fn f_norm_bounds(n_f: f64, eps_rho: f64) -> (f64, f64) {
    let q = Q as f64;
    ((n_f * (1.0 - eps_rho / q).powi(2) / q).sqrt(), (n_f * (1.0 + eps_rho).powi(2)).sqrt())
}

const SPHERE_DOMAIN: [[f64; 2]; 3] = [[-5.0, 5.0], [-4.0, 4.0], [-4.0, 4.0]];

pub fn sphere_instance(exponent: i32) -> PhysicalInstance {
    PhysicalInstance::from_reynolds(
        &format!("sphere-re1e{exponent}"),
        &format!("Flow past a sphere, Re=1e{exponent}"),
        10f64.powi(exponent),
        1.0,
        SPHERE_DOMAIN,
        GeometryDescriptor::Sphere { center: [0.0; 3], radius: 0.5 },
    )
}

fn hull(id: &str, name: &str, u: f64, length: f64, dx: f64, domain: [[f64; 2]; 3], t_adv: f64, n_f: f64) -> PhysicalInstance {
    PhysicalInstance {
        id: id.into(),
        name: name.into(),
        kinematic_viscosity: WATER_NU,
        density: WATER_RHO,
        characteristic_length: length,
        reynolds: reynolds_from_velocity(u, WATER_NU, length),
        velocity: u,
        domain,
        geometry: GeometryDescriptor::Hull { length },
        velocity_margin: VELOCITY_MARGIN,
        dx_rule: DxRule::Fixed(dx),
        advective_time: Some(t_adv),
        fluid_nodes: Some(n_f),
    }
}

/// Eight spheres (Re 1e1..1e8) followed by JBC, KCS and MV Regal.
pub fn catalog() -> Vec<PhysicalInstance> {
    let mut v: Vec<PhysicalInstance> = (1..=8).map(sphere_instance).collect();
    v.push(hull(
        "jbc",
        "Japan Bulk Carrier (model scale)",
        1.179,
        7.0,
        5e-6,
        [[-7.0, 7.0], [-2.0, 2.0], [-1.0, 0.4125]],
        6.0,
        6.068e17,
    ));
    v.push(hull(
        "kcs",
        "KRISO container ship (model scale)",
        0.915,
        7.27,
        5e-6,
        [[-10.0, 4.0], [-2.0, 2.0], [-1.0, 0.34178]],
        7.0,
        5.806e17,
    ));
    v.push(hull(
        "mv-regal",
        "MV Regal (full scale)",
        7.202,
        138.0,
        5e-7,
        [[-100.0, 200.0], [-35.0, 35.0], [-10.0, 5.25]],
        18.0,
        2.429e24,
    ));
    v
}

pub fn find(id: &str) -> Result<PhysicalInstance> {
    catalog()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::Config(format!("unknown instance id '{id}'")))
}

pub fn sphere_catalog() -> Vec<PhysicalInstance> {
    catalog().into_iter().filter(|p| matches!(p.geometry, GeometryDescriptor::Sphere { .. })).collect()
}

/// How the lattice step count grows with grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalingRule {
    /// `dt ~ dx^alpha`, giving `T ~ n^((1 + alpha) / (3 alpha))`.
    Cfl { alpha: f64 },
    /// Fixed lattice velocity under diffusive scaling: `T ~ n^(1/3)`.
    Diffusive,
}

impl ScalingRule {
    pub fn exponent(&self) -> Result<f64> {
        match *self {
            ScalingRule::Cfl { alpha } => time_step_scaling(alpha),
            ScalingRule::Diffusive => Ok(1.0 / 3.0),
        }
    }
}

pub fn time_step_scaling(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    Ok((1.0 + alpha) / (3.0 * alpha))
}

/// Instance file: an inline instance or a catalog id, plus overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub instance: Option<PhysicalInstance>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub dx_rule: Option<DxRule>,
    #[serde(default)]
    pub epsilon_rho: Option<f64>,
}

impl InstanceConfig {
    pub fn resolve(&self) -> Result<(PhysicalInstance, f64)> {
        let mut inst = match (&self.id, &self.instance) {
            (Some(id), None) => find(id)?,
            (None, Some(p)) => p.clone(),
            _ => return Err(Error::Config("exactly one of 'id' or 'instance' must be given".into())),
        };
        if let Some(rule) = self.dx_rule {
            inst.dx_rule = rule;
        }
        Ok((inst, self.tau.unwrap_or(DEFAULT_TAU)))
    }
}

pub fn catalog_json() -> Result<String> {
    serde_json::to_string_pretty(&catalog()).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sig_fig() {
        assert_eq!(round_one_sig_fig(5.654), 6.0);
        assert!((round_one_sig_fig(0.0234) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn hull_reynolds() {
        let j = derive_lattice(&find("jbc").unwrap(), 0.6).unwrap();
        assert!((j.reynolds / 8.23e6 - 1.0).abs() < 1e-3);
        assert!(!j.warnings.is_empty());
    }
}

//! D3Q27 velocity set, flat variable indexing and solid/fluid geometry.
//!
//! Grid coordinates are zero-based integers and every axis wraps
//! periodically. Flat indices follow the ordering
//! `mu = Q * (x + nx*y + nx*ny*z) + i`; higher-order monomials are ordered
//! position-major (all node indices first, then all direction indices).

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of discrete velocities.
pub const Q: usize = 27;
/// Index of the rest velocity.
pub const REST: usize = 26;

/// Velocity vector of direction `i`; components cycle through `1, -1, 0`
/// with periods 3, 9 and 27.
const fn component_formula(i: usize) -> [i32; 3] {
    [
        (((i % 27) + 2) % 3) as i32 - 1,
        (((i / 3) + 2) % 3) as i32 - 1,
        (((i / 9) + 2) % 3) as i32 - 1,
    ]
}

const fn build_vectors() -> [[i32; 3]; Q] {
    let mut out = [[0; 3]; Q];
    let mut i = 0;
    while i < Q {
        out[i] = component_formula(i);
        i += 1;
    }
    out
}

/// Lattice vectors `c_i` in table order.
pub const C: [[i32; 3]; Q] = build_vectors();

const fn build_opposite() -> [usize; Q] {
    let mut out = [0; Q];
    let mut i = 0;
    while i < Q {
        let c = C[i];
        out[i] = (i as i32 + c[0] + 3 * c[1] + 9 * c[2]) as usize;
        i += 1;
    }
    out
}

/// `OPPOSITE[i]` is the direction with `c = -c_i`.
pub const OPPOSITE: [usize; Q] = build_opposite();

const fn build_weights() -> [f64; Q] {
    let mut out = [0.0; Q];
    let mut i = 0;
    while i < Q {
        let c = C[i];
        let s = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        out[i] = match s {
            0 => 8.0 / 27.0,
            1 => 2.0 / 27.0,
            2 => 1.0 / 54.0,
            _ => 1.0 / 216.0,
        };
        i += 1;
    }
    out
}

/// Lattice weights `w_i` as floats.
pub const W: [f64; Q] = build_weights();

/// Squared lattice speed of sound.
pub const CS2: f64 = 1.0 / 3.0;

/// Exact weight of direction `i`.
pub fn weight_exact(i: usize) -> Ratio<i64> {
    let c = C[i];
    match c[0] * c[0] + c[1] * c[1] + c[2] * c[2] {
        0 => Ratio::new(8, 27),
        1 => Ratio::new(2, 27),
        2 => Ratio::new(1, 54),
        _ => Ratio::new(1, 216),
    }
}

/// Integer dot product `c_i . c_j`.
#[inline]
pub fn cdot(i: usize, j: usize) -> i32 {
    let (a, b) = (C[i], C[j]);
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The D3Q27 constants bundled as a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySet {
    pub vectors: Vec<[i32; 3]>,
    pub weights: Vec<f64>,
    pub weights_exact: Vec<(i64, i64)>,
    pub opposite: Vec<usize>,
    pub speed_of_sound_sq: (i64, i64),
}

impl VelocitySet {
    pub fn d3q27() -> Self {
        Self {
            vectors: C.to_vec(),
            weights: W.to_vec(),
            weights_exact: (0..Q)
                .map(|i| {
                    let w = weight_exact(i);
                    (*w.numer(), *w.denom())
                })
                .collect(),
            opposite: OPPOSITE.to_vec(),
            speed_of_sound_sq: (1, 3),
        }
    }
}

/// Velocity vector of direction `i`.
pub fn velocity_component(i: usize) -> Result<[i32; 3]> {
    if i >= Q {
        return Err(Error::OutOfRange(format!("direction {i} not in 0..{Q}")));
    }
    Ok(component_formula(i))
}

/// Opposite direction of `i`.
pub fn opposite(i: usize) -> Result<usize> {
    if i >= Q {
        return Err(Error::OutOfRange(format!("direction {i} not in 0..{Q}")));
    }
    Ok(OPPOSITE[i])
}

/// Periodic box of `nx * ny * nz` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Config(format!(
                "grid dimensions must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    /// Total node count.
    pub fn n(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Number of first-order variables `nQ`.
    pub fn len_f(&self) -> usize {
        self.n() * Q
    }

    pub fn periodic(&self) -> bool {
        true
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        p[0] < self.nx && p[1] < self.ny && p[2] < self.nz
    }

    /// Flat node index `x + nx*y + nx*ny*z`.
    #[inline]
    pub fn node_index(&self, p: [usize; 3]) -> usize {
        p[0] + self.nx * (p[1] + self.ny * p[2])
    }

    #[inline]
    pub fn node_coords(&self, a: usize) -> [usize; 3] {
        let x = a % self.nx;
        let r = a / self.nx;
        [x, r % self.ny, r / self.ny]
    }

    /// Node reached from `a` by moving `sign * c_i`, wrapped.
    #[inline]
    pub fn neighbor(&self, a: usize, i: usize, sign: i32) -> usize {
        let p = self.node_coords(a);
        let c = C[i];
        let wrap = |v: usize, d: i32, len: usize| -> usize {
            ((v as i64 + (sign * d) as i64).rem_euclid(len as i64)) as usize
        };
        self.node_index([
            wrap(p[0], c[0], self.nx),
            wrap(p[1], c[1], self.ny),
            wrap(p[2], c[2], self.nz),
        ])
    }
}

/// Flat index of `f_i` at node `p`.
pub fn l1_index(grid: &GridSpec, p: [usize; 3], i: usize) -> Result<usize> {
    if !grid.contains(p) {
        return Err(Error::OutOfRange(format!("node {p:?} outside grid")));
    }
    if i >= Q {
        return Err(Error::OutOfRange(format!("direction {i} not in 0..{Q}")));
    }
    Ok(Q * grid.node_index(p) + i)
}

/// Inverse of [`l1_index`].
pub fn l1_inverse(grid: &GridSpec, mu: usize) -> Result<([usize; 3], usize)> {
    if mu >= grid.len_f() {
        return Err(Error::OutOfRange(format!("index {mu} not below nQ")));
    }
    Ok((grid.node_coords(mu / Q), mu % Q))
}

/// Node/direction pair of a first-order variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub node: usize,
    pub dir: usize,
}

impl Mono {
    pub fn new(node: usize, dir: usize) -> Self {
        Self { node, dir }
    }

    #[inline]
    pub fn from_flat(mu: usize) -> Self {
        Self { node: mu / Q, dir: mu % Q }
    }

    #[inline]
    pub fn flat(&self) -> usize {
        Q * self.node + self.dir
    }
}

fn check_mono(grid: &GridSpec, m: Mono) -> Result<()> {
    if m.node >= grid.n() || m.dir >= Q {
        return Err(Error::OutOfRange(format!("monomial factor {m:?} outside grid")));
    }
    Ok(())
}

/// Index of the second-order monomial `f_j(x_b) f_k(x_g)`:
/// `Q^2 (n b + g) + Q j + k`.
pub fn l2_index(grid: &GridSpec, a: Mono, b: Mono) -> Result<usize> {
    check_mono(grid, a)?;
    check_mono(grid, b)?;
    Ok(l2_raw(grid.n(), a, b))
}

#[inline]
pub(crate) fn l2_raw(n: usize, a: Mono, b: Mono) -> usize {
    Q * Q * (n * a.node + b.node) + Q * a.dir + b.dir
}

pub fn l2_inverse(grid: &GridSpec, idx: usize) -> Result<(Mono, Mono)> {
    let n = grid.n();
    if idx >= grid.len_f().pow(2) {
        return Err(Error::OutOfRange(format!("index {idx} not below (nQ)^2")));
    }
    let dirs = idx % (Q * Q);
    let pos = idx / (Q * Q);
    Ok((Mono::new(pos / n, dirs / Q), Mono::new(pos % n, dirs % Q)))
}

/// Index of the third-order monomial, position-major:
/// `Q^3 (n^2 a + n b + g) + Q^2 j + Q k + l`.
pub fn l3_index(grid: &GridSpec, a: Mono, b: Mono, c: Mono) -> Result<usize> {
    check_mono(grid, a)?;
    check_mono(grid, b)?;
    check_mono(grid, c)?;
    Ok(l3_raw(grid.n(), a, b, c))
}

#[inline]
pub(crate) fn l3_raw(n: usize, a: Mono, b: Mono, c: Mono) -> usize {
    Q * Q * Q * (n * n * a.node + n * b.node + c.node) + Q * Q * a.dir + Q * b.dir + c.dir
}

pub fn l3_inverse(grid: &GridSpec, idx: usize) -> Result<(Mono, Mono, Mono)> {
    let n = grid.n();
    if idx >= grid.len_f().pow(3) {
        return Err(Error::OutOfRange(format!("index {idx} not below (nQ)^3")));
    }
    let dirs = idx % (Q * Q * Q);
    let pos = idx / (Q * Q * Q);
    Ok((
        Mono::new(pos / (n * n), dirs / (Q * Q)),
        Mono::new((pos / n) % n, (dirs / Q) % Q),
        Mono::new(pos % n, dirs % Q),
    ))
}

/// Fluid or solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Fluid,
    Solid,
}

/// Axis-aligned box `[origin, origin + extents)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prism {
    pub origin: [f64; 3],
    pub extents: [f64; 3],
}

impl Prism {
    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|d| heaviside(p[d] - self.origin[d]) - heaviside(p[d] - self.origin[d] - self.extents[d]) > 0.5)
    }
}

/// Solid-node classifier in grid coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryOracle {
    /// No solid nodes.
    Empty,
    Sphere { center: [f64; 3], radius: f64 },
    Prism(Prism),
    Prisms { prisms: Vec<Prism> },
}

#[inline]
fn heaviside(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        0.0
    }
}

impl GeometryOracle {
    /// Evaluates `N(x)`: 1 for solid, 0 for fluid.
    pub fn evaluate(&self, p: [usize; 3]) -> u8 {
        let x = [p[0] as f64, p[1] as f64, p[2] as f64];
        let solid = match self {
            GeometryOracle::Empty => false,
            GeometryOracle::Sphere { center, radius } => {
                let d2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
                heaviside(radius * radius - d2) > 0.5
            }
            GeometryOracle::Prism(pr) => pr.contains(x),
            GeometryOracle::Prisms { prisms } => prisms.iter().any(|pr| pr.contains(x)),
        };
        solid as u8
    }

    pub fn prism_count(&self) -> usize {
        match self {
            GeometryOracle::Prism(_) => 1,
            GeometryOracle::Prisms { prisms } => prisms.len(),
            _ => 0,
        }
    }
}

/// Classifies a node, rejecting coordinates outside the grid.
pub fn classify(grid: &GridSpec, oracle: &GeometryOracle, p: [usize; 3]) -> Result<NodeKind> {
    if !grid.contains(p) {
        return Err(Error::OutOfRange(format!("node {p:?} outside grid")));
    }
    Ok(if oracle.evaluate(p) == 1 {
        NodeKind::Solid
    } else {
        NodeKind::Fluid
    })
}

/// Oracle evaluated once per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolidMask {
    pub grid: GridSpec,
    solid: Vec<bool>,
}

impl SolidMask {
    pub fn from_oracle(grid: GridSpec, oracle: &GeometryOracle) -> Self {
        let solid = (0..grid.n())
            .map(|a| oracle.evaluate(grid.node_coords(a)) == 1)
            .collect();
        Self { grid, solid }
    }

    pub fn all_fluid(grid: GridSpec) -> Self {
        Self { grid, solid: vec![false; grid.n()] }
    }

    pub fn from_flags(grid: GridSpec, solid: Vec<bool>) -> Result<Self> {
        if solid.len() != grid.n() {
            return Err(Error::Dimension(format!(
                "mask length {} != node count {}",
                solid.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, solid })
    }

    #[inline]
    pub fn is_solid(&self, a: usize) -> bool {
        self.solid[a]
    }

    #[inline]
    pub fn is_fluid(&self, a: usize) -> bool {
        !self.solid[a]
    }

    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|s| **s).count()
    }

    pub fn fluid_count(&self) -> usize {
        self.grid.n() - self.solid_count()
    }
}

/// Pairs `(x, i)` with `x` fluid and `x + c_i` solid, sorted by flat index.
pub fn boundary_links(mask: &SolidMask) -> Vec<Mono> {
    let g = mask.grid;
    let mut out = Vec::new();
    for a in 0..g.n() {
        if mask.is_solid(a) {
            continue;
        }
        for i in 0..Q {
            if mask.is_solid(g.neighbor(a, i, 1)) {
                out.push(Mono::new(a, i));
            }
        }
    }
    out
}

/// Fluid nodes adjacent to at least one solid node.
pub fn boundary_nodes(mask: &SolidMask) -> Vec<usize> {
    let mut nodes: Vec<usize> = boundary_links(mask).iter().map(|m| m.node).collect();
    nodes.dedup();
    nodes
}

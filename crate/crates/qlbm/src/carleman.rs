//! Third-order Carleman linearization of the cubic lattice Boltzmann ODE.
//!
//! The right-hand side `(S + F1) f + F2 f^2 + F3 f^3` is generated from
//! closed-form entry functions. Collision blocks are identical at every node,
//! so the system stores one per-node block of each and builds global entries
//! on demand. Second- and third-order vectors use position-major ordering
//! (see [`crate::lattice::l2_index`]); lifted blocks are applied matrix-free.

use std::collections::HashSet;
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cdot, l2_raw, l3_raw, weight_exact, GridSpec, Mono, SolidMask, OPPOSITE, Q, REST, W};
use crate::lbm_sim::validate_tau;

type Rat = Ratio<i64>;

/// Whether degenerate monomials each get a coefficient or share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dense,
    Sparse,
}

fn ri(v: i32) -> Rat {
    Rat::from_integer(v as i64)
}

/// `tau * F1` entry at one node.
pub fn f1_coef(i: usize, j: usize) -> Rat {
    let delta = if i == j { Rat::from_integer(1) } else { Rat::from_integer(0) };
    let w = weight_exact(i);
    -delta + w + w * ri(3 * cdot(i, j))
}

/// `tau * F2` entry at one node, every ordering of `(j, k)` populated.
pub fn f2_coef_dense(i: usize, j: usize, k: usize) -> Rat {
    let w = weight_exact(i);
    w * ri(9 * cdot(i, j) * cdot(i, k)) - w * ri(3 * cdot(j, k))
}

/// `tau * F3` entry at one node; `j` is the density factor.
pub fn f3_coef_dense(i: usize, _j: usize, k: usize, l: usize) -> Rat {
    let w = weight_exact(i);
    w * Rat::new(-9, 2) * ri(cdot(i, k) * cdot(i, l)) + w * Rat::new(3, 2) * ri(cdot(k, l))
}

/// Sparse `F2`: the symmetrized coefficient sits on `j <= k` only.
pub fn f2_coef_sparse(i: usize, j: usize, k: usize) -> Rat {
    use std::cmp::Ordering::*;
    match j.cmp(&k) {
        Equal => f2_coef_dense(i, j, j),
        Less => f2_coef_dense(i, j, k) + f2_coef_dense(i, k, j),
        Greater => Rat::from_integer(0),
    }
}

/// Sparse `F3`: the sum over all distinct orderings sits on `j <= k <= l`.
pub fn f3_coef_sparse(i: usize, j: usize, k: usize, l: usize) -> Rat {
    if !(j <= k && k <= l) {
        return Rat::from_integer(0);
    }
    let perms = [[j, k, l], [j, l, k], [k, j, l], [k, l, j], [l, j, k], [l, k, j]];
    let mut seen: Vec<[usize; 3]> = Vec::with_capacity(6);
    let mut s = Rat::from_integer(0);
    for p in perms {
        if !seen.contains(&p) {
            seen.push(p);
            s += f3_coef_dense(i, p[0], p[1], p[2]);
        }
    }
    s
}

fn to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Streaming matrix element for row `f_i(x_a)` and column `f_j(x_b)`.
/// Cases are summed, so a grid where `x - c_i == x` nets to zero.
pub fn s_entry(mask: &SolidMask, r: Mono, c: Mono) -> i8 {
    let g = mask.grid;
    if mask.is_solid(r.node) || r.dir == REST {
        return 0;
    }
    let back = g.neighbor(r.node, r.dir, -1);
    let mut v = 0i8;
    if c.node == r.node && c.dir == r.dir {
        v -= 1;
    }
    if c.node == back && mask.is_fluid(back) && c.dir == r.dir {
        v += 1;
    }
    if c.node == r.node && mask.is_solid(back) && c.dir == OPPOSITE[r.dir] {
        v += 1;
    }
    v
}

/// Nonzero `(column, value)` pairs of one row of `S`.
pub fn s_row(mask: &SolidMask, row: usize) -> Vec<(usize, f64)> {
    let r = Mono::from_flat(row);
    let g = mask.grid;
    if mask.is_solid(r.node) || r.dir == REST {
        return Vec::new();
    }
    let back = g.neighbor(r.node, r.dir, -1);
    let cand = [
        Mono::new(r.node, r.dir),
        Mono::new(back, r.dir),
        Mono::new(r.node, OPPOSITE[r.dir]),
    ];
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(2);
    for c in cand {
        let v = s_entry(mask, r, c);
        if v != 0 && !out.iter().any(|(col, _)| *col == c.flat()) {
            out.push((c.flat(), v as f64));
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

pub fn f1_entry(r: Mono, c: Mono, tau: f64) -> f64 {
    if r.node != c.node {
        return 0.0;
    }
    to_f64(f1_coef(r.dir, c.dir)) / tau
}

pub fn f2_entry_dense(r: Mono, c: (Mono, Mono), tau: f64) -> f64 {
    f2_entry(Variant::Dense, r, c, tau)
}

pub fn f2_entry_sparse(r: Mono, c: (Mono, Mono), tau: f64) -> f64 {
    f2_entry(Variant::Sparse, r, c, tau)
}

pub fn f3_entry_dense(r: Mono, c: (Mono, Mono, Mono), tau: f64) -> f64 {
    f3_entry(Variant::Dense, r, c, tau)
}

pub fn f3_entry_sparse(r: Mono, c: (Mono, Mono, Mono), tau: f64) -> f64 {
    f3_entry(Variant::Sparse, r, c, tau)
}

pub fn f2_entry(variant: Variant, r: Mono, c: (Mono, Mono), tau: f64) -> f64 {
    if r.node != c.0.node || r.node != c.1.node {
        return 0.0;
    }
    let v = match variant {
        Variant::Dense => f2_coef_dense(r.dir, c.0.dir, c.1.dir),
        Variant::Sparse => f2_coef_sparse(r.dir, c.0.dir, c.1.dir),
    };
    to_f64(v) / tau
}

pub fn f3_entry(variant: Variant, r: Mono, c: (Mono, Mono, Mono), tau: f64) -> f64 {
    if r.node != c.0.node || r.node != c.1.node || r.node != c.2.node {
        return 0.0;
    }
    let v = match variant {
        Variant::Dense => f3_coef_dense(r.dir, c.0.dir, c.1.dir, c.2.dir),
        Variant::Sparse => f3_coef_sparse(r.dir, c.0.dir, c.1.dir, c.2.dir),
    };
    to_f64(v) / tau
}

/// Nonzero counts of the per-node blocks, from exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub variant: Variant,
    pub f1_nonzeros: usize,
    pub f1_unique: usize,
    pub f2_nonzeros: usize,
    pub f2_unique: usize,
    pub f3_nonzeros: usize,
    pub f3_unique: usize,
}

/// Counts are independent of `tau`, which only rescales every entry.
pub fn census(variant: Variant) -> Census {
    let mut u1 = HashSet::new();
    let mut n1 = 0;
    for i in 0..Q {
        for j in 0..Q {
            let v = f1_coef(i, j);
            if v != Rat::from_integer(0) {
                n1 += 1;
                u1.insert(v);
            }
        }
    }
    let mut u2 = HashSet::new();
    let mut n2 = 0;
    for i in 0..Q {
        for j in 0..Q {
            for k in 0..Q {
                let v = match variant {
                    Variant::Dense => f2_coef_dense(i, j, k),
                    Variant::Sparse => f2_coef_sparse(i, j, k),
                };
                if v != Rat::from_integer(0) {
                    n2 += 1;
                    u2.insert(v);
                }
            }
        }
    }
    let mut u3 = HashSet::new();
    let mut n3 = 0;
    for i in 0..Q {
        for j in 0..Q {
            for k in 0..Q {
                for l in 0..Q {
                    let v = match variant {
                        Variant::Dense => f3_coef_dense(i, j, k, l),
                        Variant::Sparse => f3_coef_sparse(i, j, k, l),
                    };
                    if v != Rat::from_integer(0) {
                        n3 += 1;
                        u3.insert(v);
                    }
                }
            }
        }
    }
    Census {
        variant,
        f1_nonzeros: n1,
        f1_unique: u1.len(),
        f2_nonzeros: n2,
        f2_unique: u2.len(),
        f3_nonzeros: n3,
        f3_unique: u3.len(),
    }
}

/// Per-node collision blocks as row-wise nonzero lists over local columns.
#[derive(Debug, Clone)]
pub struct LocalBlocks {
    pub tau: f64,
    pub variant: Variant,
    /// `f1[i]`: `(j, value)`.
    pub f1: Vec<Vec<(usize, f64)>>,
    /// `f2[i]`: `(j, k, value)`.
    pub f2: Vec<Vec<(usize, usize, f64)>>,
    /// `f3[i]`: `(j, k, l, value)`.
    pub f3: Vec<Vec<(usize, usize, usize, f64)>>,
}

impl LocalBlocks {
    pub fn new(tau: f64, variant: Variant) -> Result<Self> {
        validate_tau(tau)?;
        let zero = Rat::from_integer(0);
        let mut f1 = vec![Vec::new(); Q];
        let mut f2 = vec![Vec::new(); Q];
        let mut f3 = vec![Vec::new(); Q];
        for i in 0..Q {
            for j in 0..Q {
                let v = f1_coef(i, j);
                if v != zero {
                    f1[i].push((j, to_f64(v) / tau));
                }
                for k in 0..Q {
                    let v = match variant {
                        Variant::Dense => f2_coef_dense(i, j, k),
                        Variant::Sparse => f2_coef_sparse(i, j, k),
                    };
                    if v != zero {
                        f2[i].push((j, k, to_f64(v) / tau));
                    }
                    for l in 0..Q {
                        let v = match variant {
                            Variant::Dense => f3_coef_dense(i, j, k, l),
                            Variant::Sparse => f3_coef_sparse(i, j, k, l),
                        };
                        if v != zero {
                            f3[i].push((j, k, l, to_f64(v) / tau));
                        }
                    }
                }
            }
        }
        Ok(Self { tau, variant, f1, f2, f3 })
    }

    fn row_abs(rows: impl Iterator<Item = f64>) -> f64 {
        rows.map(f64::abs).sum()
    }

    pub fn f1_inf(&self) -> f64 {
        self.f1.iter().map(|r| Self::row_abs(r.iter().map(|e| e.1))).fold(0.0, f64::max)
    }

    pub fn f2_inf(&self) -> f64 {
        self.f2.iter().map(|r| Self::row_abs(r.iter().map(|e| e.2))).fold(0.0, f64::max)
    }

    pub fn f3_inf(&self) -> f64 {
        self.f3.iter().map(|r| Self::row_abs(r.iter().map(|e| e.3))).fold(0.0, f64::max)
    }

    pub fn f1_one(&self) -> f64 {
        let mut col = vec![0.0; Q];
        for r in &self.f1 {
            for &(j, v) in r {
                col[j] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn f2_one(&self) -> f64 {
        let mut col = vec![0.0; Q * Q];
        for r in &self.f2 {
            for &(j, k, v) in r {
                col[Q * j + k] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn f3_one(&self) -> f64 {
        let mut col = vec![0.0; Q * Q * Q];
        for r in &self.f3 {
            for &(j, k, l, v) in r {
                col[Q * Q * j + Q * k + l] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

/// Coordinate-format sparse matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTriples {
    pub shape: (usize, usize),
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseTriples {
    pub fn new(shape: (usize, usize)) -> Self {
        Self { shape, rows: Vec::new(), cols: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        self.rows.push(r);
        self.cols.push(c);
        self.values.push(v);
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Sorts by (row, col), merges duplicates and drops zeros.
    pub fn canonicalize(&mut self) {
        let mut idx: Vec<usize> = (0..self.nnz()).collect();
        idx.sort_by_key(|&e| (self.rows[e], self.cols[e]));
        let mut out = SparseTriples::new(self.shape);
        for e in idx {
            let (r, c, v) = (self.rows[e], self.cols[e], self.values[e]);
            if out.nnz() > 0 && *out.rows.last().unwrap() == r && *out.cols.last().unwrap() == c {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.push(r, c, v);
            }
        }
        let keep: Vec<usize> = (0..out.nnz()).filter(|&e| out.values[e] != 0.0).collect();
        self.rows = keep.iter().map(|&e| out.rows[e]).collect();
        self.cols = keep.iter().map(|&e| out.cols[e]).collect();
        self.values = keep.iter().map(|&e| out.values[e]).collect();
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        (0..self.nnz())
            .filter(|&e| self.rows[e] == r && self.cols[e] == c)
            .map(|e| self.values[e])
            .sum()
    }

    /// `row col value` per line.
    pub fn to_coo_text(&self) -> String {
        let mut s = format!("% {} {} {}\n", self.shape.0, self.shape.1, self.nnz());
        for e in 0..self.nnz() {
            s.push_str(&format!("{} {} {:.17e}\n", self.rows[e], self.cols[e], self.values[e]));
        }
        s
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.shape.0];
        for e in 0..self.nnz() {
            y[self.rows[e]] += self.values[e] * x[self.cols[e]];
        }
        y
    }
}

/// Default limit on `nQ` for explicit assembly.
pub const ASSEMBLY_CAP: usize = 2048;
/// Limit on stored nonzeros of any explicitly assembled block.
pub const NNZ_CAP: usize = 20_000_000;
/// Limit on `nQ` for storing all three sectors of a Carleman vector.
pub const PHI_CAP: usize = 54;

/// The first-order blocks of `A`: `S + F1`, `F2`, `F3`.
#[derive(Debug, Clone)]
pub struct CarlemanSystem {
    pub mask: SolidMask,
    pub local: LocalBlocks,
    /// Row lists of `S + F1`.
    b_rows: Vec<Vec<(usize, f64)>>,
}

impl CarlemanSystem {
    /// Structured, matrix-free system; no size limit.
    pub fn new(mask: SolidMask, tau: f64, variant: Variant) -> Result<Self> {
        let local = LocalBlocks::new(tau, variant)?;
        let b_rows = build_b_rows(&mask, &local);
        Ok(Self { mask, local, b_rows })
    }

    pub fn grid(&self) -> GridSpec {
        self.mask.grid
    }

    pub fn len_f(&self) -> usize {
        self.mask.grid.len_f()
    }

    /// Total dimension `nQ + (nQ)^2 + (nQ)^3`.
    pub fn dimension(&self) -> u128 {
        let m = self.len_f() as u128;
        m + m * m + m * m * m
    }

    pub fn b_row(&self, row: usize) -> &[(usize, f64)] {
        &self.b_rows[row]
    }

    pub fn apply_b(&self, x: &[f64]) -> Vec<f64> {
        self.b_rows
            .iter()
            .map(|r| r.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }
}

fn build_b_rows(mask: &SolidMask, local: &LocalBlocks) -> Vec<Vec<(usize, f64)>> {
    let nq = mask.grid.len_f();
    (0..nq)
        .map(|row| {
            let r = Mono::from_flat(row);
            let mut e: Vec<(usize, f64)> =
                local.f1[r.dir].iter().map(|&(j, v)| (Q * r.node + j, v)).collect();
            for (c, v) in s_row(mask, row) {
                match e.iter_mut().find(|x| x.0 == c) {
                    Some(x) => x.1 += v,
                    None => e.push((c, v)),
                }
            }
            e.retain(|x| x.1 != 0.0);
            e.sort_by_key(|x| x.0);
            e
        })
        .collect()
}

/// Explicit coordinate-format blocks.
#[derive(Debug, Clone)]
pub struct AssembledBlocks {
    pub s: SparseTriples,
    pub s_plus_f1: SparseTriples,
    pub f2: SparseTriples,
    pub f3: SparseTriples,
}

/// Builds every nonzero of `S`, `S + F1`, `F2` and `F3` with global indices.
pub fn assemble_first_order(mask: &SolidMask, tau: f64, variant: Variant, cap: usize) -> Result<AssembledBlocks> {
    let g = mask.grid;
    let nq = g.len_f();
    if nq > cap {
        return Err(Error::Capacity(format!(
            "nQ = {nq} exceeds assembly cap {cap}; use the matrix-free system instead"
        )));
    }
    let sys = CarlemanSystem::new(mask.clone(), tau, variant)?;
    let f3_nnz: usize = sys.local.f3.iter().map(Vec::len).sum::<usize>() * g.n();
    if f3_nnz > NNZ_CAP {
        return Err(Error::Capacity(format!(
            "F3 would hold {f3_nnz} nonzeros (limit {NNZ_CAP}); use the matrix-free system instead"
        )));
    }
    let n = g.n();
    let mut s = SparseTriples::new((nq, nq));
    let mut b = SparseTriples::new((nq, nq));
    let mut f2 = SparseTriples::new((nq, nq * nq));
    let mut f3 = SparseTriples::new((nq, nq * nq * nq));
    for row in 0..nq {
        for (c, v) in s_row(mask, row) {
            s.push(row, c, v);
        }
        for &(c, v) in sys.b_row(row) {
            b.push(row, c, v);
        }
        let r = Mono::from_flat(row);
        let a = r.node;
        for &(j, k, v) in &sys.local.f2[r.dir] {
            f2.push(row, l2_raw(n, Mono::new(a, j), Mono::new(a, k)), v);
        }
        for &(j, k, l, v) in &sys.local.f3[r.dir] {
            f3.push(row, l3_raw(n, Mono::new(a, j), Mono::new(a, k), Mono::new(a, l)), v);
        }
    }
    Ok(AssembledBlocks { s, s_plus_f1: b, f2, f3 })
}

/// `(S + F1) f + F2 f^2 + F3 f^3` evaluated node by node.
pub fn nonlinear_rhs(f: &[f64], sys: &CarlemanSystem) -> Result<Vec<f64>> {
    if f.len() != sys.len_f() {
        return Err(Error::Dimension(format!("f has length {}, expected {}", f.len(), sys.len_f())));
    }
    let mut out = sys.apply_b(f);
    for a in 0..sys.grid().n() {
        let x = &f[a * Q..(a + 1) * Q];
        for i in 0..Q {
            let mut acc = 0.0;
            for &(j, k, v) in &sys.local.f2[i] {
                acc += v * x[j] * x[k];
            }
            for &(j, k, l, v) in &sys.local.f3[i] {
                acc += v * x[j] * x[k] * x[l];
            }
            out[a * Q + i] += acc;
        }
    }
    Ok(out)
}

/// Read access to the three sectors of a Carleman vector by factor tuples.
pub trait PhiSource {
    fn s1(&self, a: usize) -> f64;
    fn s2(&self, a: usize, b: usize) -> f64;
    fn s3(&self, a: usize, b: usize, c: usize) -> f64;
}

/// `(f, f^2, f^3)` evaluated lazily from `f`.
pub struct Embedded<'a>(pub &'a [f64]);

impl PhiSource for Embedded<'_> {
    fn s1(&self, a: usize) -> f64 {
        self.0[a]
    }
    fn s2(&self, a: usize, b: usize) -> f64 {
        self.0[a] * self.0[b]
    }
    fn s3(&self, a: usize, b: usize, c: usize) -> f64 {
        self.0[a] * self.0[b] * self.0[c]
    }
}

/// Stored Carleman vector in position-major ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    pub grid: GridSpec,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
    /// Per-factor offsets: the position-major index is a sum of one term
    /// per factor.
    off2: [Vec<usize>; 2],
    off3: [Vec<usize>; 3],
}

impl Phi {
    pub fn zeros(grid: GridSpec) -> Result<Self> {
        let m = grid.len_f();
        if m > PHI_CAP {
            return Err(Error::Capacity(format!("storing phi needs nQ <= {PHI_CAP}, got {m}")));
        }
        let n = grid.n();
        let z = Mono::new(0, 0);
        let f2 = |g: &dyn Fn(Mono) -> usize| (0..m).map(|a| g(Mono::from_flat(a))).collect::<Vec<_>>();
        let off2 = [f2(&|a| l2_raw(n, a, z)), f2(&|b| l2_raw(n, z, b))];
        let off3 = [f2(&|a| l3_raw(n, a, z, z)), f2(&|b| l3_raw(n, z, b, z)), f2(&|c| l3_raw(n, z, z, c))];
        Ok(Self { grid, s1: vec![0.0; m], s2: vec![0.0; m * m], s3: vec![0.0; m * m * m], off2, off3 })
    }

    /// `(f, f (x) f, f (x) f (x) f)`.
    pub fn embed(grid: GridSpec, f: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(grid)?;
        if f.len() != grid.len_f() {
            return Err(Error::Dimension("f length does not match grid".into()));
        }
        let m = f.len();
        p.s1.copy_from_slice(f);
        for a in 0..m {
            for b in 0..m {
                let i2 = p.i2(a, b);
                p.s2[i2] = f[a] * f[b];
                for c in 0..m {
                    let i3 = p.i3(a, b, c);
                    p.s3[i3] = f[a] * f[b] * f[c];
                }
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn i2(&self, a: usize, b: usize) -> usize {
        self.off2[0][a] + self.off2[1][b]
    }

    #[inline]
    pub fn i3(&self, a: usize, b: usize, c: usize) -> usize {
        self.off3[0][a] + self.off3[1][b] + self.off3[2][c]
    }

    pub fn inf_norm(&self) -> f64 {
        self.s1.iter().chain(&self.s2).chain(&self.s3).map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn axpy(&self, alpha: f64, other: &Phi) -> Phi {
        let z = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a + alpha * b).collect();
        Phi {
            grid: self.grid,
            s1: z(&self.s1, &other.s1),
            s2: z(&self.s2, &other.s2),
            s3: z(&self.s3, &other.s3),
            off2: self.off2.clone(),
            off3: self.off3.clone(),
        }
    }
}

impl PhiSource for Phi {
    fn s1(&self, a: usize) -> f64 {
        self.s1[a]
    }
    fn s2(&self, a: usize, b: usize) -> f64 {
        self.s2[self.i2(a, b)]
    }
    fn s3(&self, a: usize, b: usize, c: usize) -> f64 {
        self.s3[self.i3(a, b, c)]
    }
}

/// `F2` row `row` contracted against a second-order source.
#[inline]
fn f2_row_dot(sys: &CarlemanSystem, row: usize, g: impl Fn(usize, usize) -> f64) -> f64 {
    let r = Mono::from_flat(row);
    let base = Q * r.node;
    sys.local.f2[r.dir].iter().map(|&(j, k, v)| v * g(base + j, base + k)).sum()
}

#[inline]
fn f3_row_dot(sys: &CarlemanSystem, row: usize, g: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let r = Mono::from_flat(row);
    let base = Q * r.node;
    sys.local.f3[r.dir].iter().map(|&(j, k, l, v)| v * g(base + j, base + k, base + l)).sum()
}

/// First sector of `A phi` for any source, without storing higher sectors.
pub fn carleman_apply_sector1<P: PhiSource>(phi: &P, sys: &CarlemanSystem) -> Vec<f64> {
    (0..sys.len_f())
        .map(|row| {
            let lin: f64 = sys.b_row(row).iter().map(|&(c, v)| v * phi.s1(c)).sum();
            lin + f2_row_dot(sys, row, |a, b| phi.s2(a, b)) + f3_row_dot(sys, row, |a, b, c| phi.s3(a, b, c))
        })
        .collect()
}

/// `A phi` with Kronecker-sum lifts applied factor by factor.
pub fn carleman_apply(phi: &Phi, sys: &CarlemanSystem) -> Result<Phi> {
    if phi.grid != sys.grid() {
        return Err(Error::Dimension("phi grid differs from system grid".into()));
    }
    let m = sys.len_f();
    let mut out = Phi::zeros(phi.grid)?;
    out.s1 = carleman_apply_sector1(phi, sys);
    for a in 0..m {
        for b in 0..m {
            let mut acc = 0.0;
            for &(c, v) in sys.b_row(b) {
                acc += v * phi.s2(a, c);
            }
            for &(c, v) in sys.b_row(a) {
                acc += v * phi.s2(c, b);
            }
            acc += f2_row_dot(sys, b, |x, y| phi.s3(a, x, y));
            acc += f2_row_dot(sys, a, |x, y| phi.s3(x, y, b));
            let i2 = out.i2(a, b);
            out.s2[i2] = acc;
            for c in 0..m {
                let mut acc = 0.0;
                for &(d, v) in sys.b_row(c) {
                    acc += v * phi.s3(a, b, d);
                }
                for &(d, v) in sys.b_row(b) {
                    acc += v * phi.s3(a, d, c);
                }
                for &(d, v) in sys.b_row(a) {
                    acc += v * phi.s3(d, b, c);
                }
                let i3 = out.i3(a, b, c);
                out.s3[i3] = acc;
            }
        }
    }
    Ok(out)
}

/// Explicit RK4 trajectory of `d phi/dt = A phi`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Phi>,
}

/// Integrates the truncated system; aborts when the state stops being
/// finite or grows by more than `1e12` over its initial size.
pub fn integrate_truncated(phi0: &Phi, sys: &CarlemanSystem, t_end: f64, step: f64) -> Result<Trajectory> {
    if !(step > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Config("step must be positive and t_end non-negative".into()));
    }
    let steps = (t_end / step).round() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let limit = 1e12 * phi0.inf_norm().max(1.0);
    let mut times = vec![0.0];
    let mut states = vec![phi0.clone()];
    let mut y = phi0.clone();
    for s in 1..=steps {
        let k1 = carleman_apply(&y, sys)?;
        let k2 = carleman_apply(&y.axpy(h / 2.0, &k1), sys)?;
        let k3 = carleman_apply(&y.axpy(h / 2.0, &k2), sys)?;
        let k4 = carleman_apply(&y.axpy(h, &k3), sys)?;
        y = y.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
        let norm = y.inf_norm();
        if !norm.is_finite() || norm > limit {
            return Err(Error::Numerical(format!("truncated system blew up at step {s} (|phi| = {norm:e})")));
        }
        times.push(s as f64 * h);
        states.push(y.clone());
    }
    Ok(Trajectory { times, states })
}

/// RK4 on the cubic ODE `df/dt = nonlinear_rhs(f)`.
pub fn integrate_nonlinear(f0: &[f64], sys: &CarlemanSystem, t_end: f64, step: f64) -> Result<Vec<Vec<f64>>> {
    let steps = (t_end / step).round() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let add = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + a * q).collect() };
    let mut out = vec![f0.to_vec()];
    let mut y = f0.to_vec();
    for _ in 0..steps {
        let k1 = nonlinear_rhs(&y, sys)?;
        let k2 = nonlinear_rhs(&add(&y, h / 2.0, &k1), sys)?;
        let k3 = nonlinear_rhs(&add(&y, h / 2.0, &k2), sys)?;
        let k4 = nonlinear_rhs(&add(&y, h, &k3), sys)?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Forward Euler step `f + dt * rhs(f)`.
pub fn euler_step(f: &[f64], sys: &CarlemanSystem, dt: f64) -> Result<Vec<f64>> {
    let d = nonlinear_rhs(f, sys)?;
    Ok(f.iter().zip(&d).map(|(a, b)| a + dt * b).collect())
}

/// `S x` alone.
pub fn apply_s(sys: &CarlemanSystem, x: &[f64]) -> Vec<f64> {
    (0..sys.len_f()).map(|r| s_row(&sys.mask, r).iter().map(|&(c, v)| v * x[c]).sum()).collect()
}

/// Collision part `F1 f + F2 f^2 + F3 f^3`.
pub fn collision_rhs(f: &[f64], sys: &CarlemanSystem) -> Result<Vec<f64>> {
    let total = nonlinear_rhs(f, sys)?;
    let s = apply_s(sys, f);
    Ok(total.iter().zip(&s).map(|(a, b)| a - b).collect())
}

/// `(I + S)(f + collision(f))`: collide, then stream.
pub fn euler_step_split(f: &[f64], sys: &CarlemanSystem) -> Result<Vec<f64>> {
    let c = collision_rhs(f, sys)?;
    let post: Vec<f64> = f.iter().zip(&c).map(|(a, b)| a + b).collect();
    let s = apply_s(sys, &post);
    Ok(post.iter().zip(&s).map(|(a, b)| a + b).collect())
}

/// Dense `sum_l I (x) .. B .. (x) I` for a square `dim x dim` matrix.
pub fn kron_lift(b: &[f64], dim: usize, order: u32) -> Vec<f64> {
    let big = dim.pow(order);
    let mut out = vec![0.0; big * big];
    for row in 0..big {
        for slot in 0..order {
            let stride = dim.pow(order - 1 - slot);
            let ri = (row / stride) % dim;
            for c in 0..dim {
                let v = b[ri * dim + c];
                if v != 0.0 {
                    let col = row - ri * stride + c * stride;
                    out[row * big + col] += v;
                }
            }
        }
    }
    out
}

pub fn dense_inf_norm(a: &[f64], rows: usize, cols: usize) -> f64 {
    (0..rows).map(|r| a[r * cols..(r + 1) * cols].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Exact `||F~2||_inf` for a single node, from the lifted row sums.
pub fn f_tilde2_inf_norm(local: &LocalBlocks) -> f64 {
    let top = local.f3_inf();
    let mut scratch2 = vec![0.0f64; Q * Q * Q];
    let mut scratch3 = vec![0.0f64; Q * Q * Q * Q];
    let mut best = top;
    for a in 0..Q {
        for b in 0..Q {
            let mut touched2 = Vec::new();
            for &(j, k, v) in &local.f2[b] {
                let c = (a * Q + j) * Q + k;
                scratch2[c] += v;
                touched2.push(c);
            }
            for &(j, k, v) in &local.f2[a] {
                let c = (j * Q + k) * Q + b;
                scratch2[c] += v;
                touched2.push(c);
            }
            let mut sum = 0.0;
            for c in touched2 {
                sum += scratch2[c].abs();
                scratch2[c] = 0.0;
            }
            let mut touched3 = Vec::new();
            for &(j, k, l, v) in &local.f3[b] {
                let c = ((a * Q + j) * Q + k) * Q + l;
                scratch3[c] += v;
                touched3.push(c);
            }
            for &(j, k, l, v) in &local.f3[a] {
                let c = ((j * Q + k) * Q + l) * Q + b;
                scratch3[c] += v;
                touched3.push(c);
            }
            for c in touched3 {
                sum += scratch3[c].abs();
                scratch3[c] = 0.0;
            }
            best = f64::max(best, sum);
        }
    }
    best
}

/// Smallest integer strictly above `x`.
fn next_integer(x: f64) -> f64 {
    x.floor() + 1.0
}

/// Block norms and the resulting bounds on `||A||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub tau: f64,
    pub s_inf: f64,
    pub s_one: f64,
    pub f1_inf: f64,
    pub f1_one: f64,
    pub f2_inf: f64,
    pub f2_one: f64,
    pub f3_inf: f64,
    pub f3_one: f64,
    /// `tau`-free coefficients `tau * ||F||` in the order
    /// F1 inf, F1 one, F2 inf, F2 one, F3 inf, F3 one.
    pub coefficients: [f64; 6],
    /// The same coefficients raised to the next integer.
    pub integer_coefficients: [f64; 6],
    pub a_one_bound: f64,
    pub a_inf_bound: f64,
    pub spectral_bound: f64,
    /// `sqrt(||A||_1 ||A||_inf)` with the unrounded norms.
    pub spectral_bound_enumerated: f64,
}

impl NormReport {
    pub fn a_one_bound_formula(tau: f64, ic: &[f64; 6]) -> f64 {
        6.0 + (ic[5] + 2.0 * ic[3] + 3.0 * ic[1]) / tau
    }

    pub fn a_inf_bound_formula(tau: f64, ic: &[f64; 6]) -> f64 {
        2.0 + (ic[0] + ic[2] + ic[4]) / tau
    }
}

/// Norms of the per-node blocks; they do not depend on the grid size.
pub fn norm_report(tau: f64) -> Result<NormReport> {
    validate_tau(tau)?;
    static UNIT: OnceLock<[f64; 6]> = OnceLock::new();
    let coefficients = *UNIT.get_or_init(|| {
        let l = LocalBlocks::new(1.0, Variant::Dense).expect("tau = 1 is valid");
        [l.f1_inf(), l.f1_one(), l.f2_inf(), l.f2_one(), l.f3_inf(), l.f3_one()]
    });
    let [f1_inf, f1_one, f2_inf, f2_one, f3_inf, f3_one] = coefficients.map(|c| c / tau);
    // Each coefficient is a rational with denominator dividing 216; round to
    // that grid before bumping so floating noise cannot shift the integer.
    let integer_coefficients = coefficients.map(|c| next_integer((c * 216.0).round() / 216.0));
    let a1 = NormReport::a_one_bound_formula(tau, &integer_coefficients);
    let ainf = NormReport::a_inf_bound_formula(tau, &integer_coefficients);
    let a1_e = f3_one + 2.0 * f2_one + 3.0 * (2.0 + f1_one);
    let ainf_e = 2.0 + f1_inf + f2_inf + f3_inf;
    Ok(NormReport {
        tau,
        s_inf: 2.0,
        s_one: 2.0,
        f1_inf,
        f1_one,
        f2_inf,
        f2_one,
        f3_inf,
        f3_one,
        coefficients,
        integer_coefficients,
        a_one_bound: a1,
        a_inf_bound: ainf,
        spectral_bound: (a1 * ainf).sqrt(),
        spectral_bound_enumerated: (a1_e * ainf_e).sqrt(),
    })
}

/// Interval of guaranteed truncation convergence and the error envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceWindow {
    pub tau: f64,
    pub phi0_inf_norm: f64,
    pub t_c_lower: f64,
    pub t_c_upper: f64,
    pub t_c: f64,
    pub beta0: f64,
    pub f_tilde1_norm: f64,
    pub f_tilde2_norm: f64,
}

impl ConvergenceWindow {
    /// Error envelope at time `t` for truncation order `k`; infinite once
    /// the denominator stops being positive.
    pub fn error_envelope(&self, t: f64, k: u32) -> f64 {
        let e = (self.f_tilde1_norm * t).exp();
        let den = (1.0 + self.beta0) - self.beta0 * e;
        if den <= 0.0 {
            return f64::INFINITY;
        }
        self.phi0_inf_norm * e / den * (self.beta0 * (e - 1.0)).powi(k as i32)
    }
}

pub fn convergence_window(phi0_inf: f64, tau: f64) -> Result<ConvergenceWindow> {
    if !(phi0_inf > 0.0) {
        return Err(Error::Config("phi0 norm must be positive".into()));
    }
    let r = norm_report(tau)?;
    let s = r.s_inf;
    let f2f3 = r.f2_inf + r.f3_inf;
    let lower = 1.0 / (2.0 * phi0_inf * f2f3 + s + r.f1_inf + r.f2_inf);
    let upper = 1.0 / (2.0 * phi0_inf * f2f3);
    let b = s + r.f1_inf;
    let ft1 = f64::max(b + r.f2_inf, 2.0 * b);
    let ft2 = 2.0 * f2f3;
    let beta0 = phi0_inf * ft2 / ft1;
    let t_c = (1.0 + 1.0 / beta0).ln() / ft1;
    Ok(ConvergenceWindow {
        tau,
        phi0_inf_norm: phi0_inf,
        t_c_lower: lower,
        t_c_upper: upper,
        t_c,
        beta0,
        f_tilde1_norm: ft1,
        f_tilde2_norm: ft2,
    })
}

/// Rest-state check used by callers that want the collision part alone.
pub fn is_rest_state(f: &[f64]) -> bool {
    f.chunks_exact(Q).all(|x| x.iter().zip(W.iter()).all(|(a, w)| (a - w).abs() < 1e-15))
}

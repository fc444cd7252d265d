//! Quantum resource estimation.
//!
//! Block-encoding cost formulas (bespoke and unstructured), streaming
//! oracle costs, Carleman combination, amplitude-normalization bounds,
//! amplitude-estimation counts, the ODE history system and an end-to-end
//! estimate with a layered breakdown.
//!
//! The number of linear-solver calls is a pluggable model
//! ([`QlsaCallModel`]); every estimate records which model produced it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::carleman::norm_report;
use crate::error::{Error, Result};
use crate::instances::{f_norm_bounds, phi_norm_bounds, LatticeInstance};
use crate::lattice::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FMatrix {
    F1,
    F2,
    F3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Bespoke,
    Unstructured,
}

impl std::str::FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bespoke" => Ok(Encoding::Bespoke),
            "unstructured" => Ok(Encoding::Unstructured),
            _ => Err(Error::Config(format!("unknown encoding '{s}' (bespoke|unstructured)"))),
        }
    }
}

/// Base of the logarithm in the bespoke `F2`/`F3` formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEncodingCost {
    pub label: String,
    pub matrix: FMatrix,
    pub encoding: Encoding,
    /// Grid size; only the unstructured formulas depend on it.
    pub n: f64,
    pub log_base: LogBase,
    pub subnormalization: f64,
    pub clean_ancillae: u32,
    pub persistent_ancillae: u32,
    pub epsilon: f64,
    pub t_gates: f64,
}

impl BlockEncodingCost {
    pub fn t_gates_at(&self, eps: f64) -> Result<f64> {
        t_gate_formula(self.encoding, self.matrix, self.n, eps, self.log_base)
    }

    pub fn ancillae(&self) -> u32 {
        self.clean_ancillae + self.persistent_ancillae
    }
}

fn ceil_log2(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.log2().ceil()
    }
}

/// T-gate formula of one encoding of one matrix.
pub fn t_gate_formula(encoding: Encoding, m: FMatrix, n: f64, eps: f64, base: LogBase) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("target error must be positive, got {eps}")));
    }
    match encoding {
        Encoding::Bespoke => {
            if eps > 1.0 {
                return Err(Error::Config(format!("bespoke encodings need 0 < eps <= 1, got {eps}")));
            }
            Ok(match m {
                FMatrix::F1 => 465.2 + 13.8 * (1.0 / eps).log2(),
                FMatrix::F2 => 328.0 + 5.75 * base.log(1.0 / eps),
                FMatrix::F3 => 340.0 + 5.75 * base.log(1.0 / eps),
            })
        }
        Encoding::Unstructured => {
            if !(n >= 1.0) {
                return Err(Error::Config(format!("grid size must be at least 1, got {n}")));
            }
            let t = match m {
                FMatrix::F1 => 838.35 * (729.0 / eps).log2(),
                FMatrix::F2 => {
                    let l = (2.0 * n.log2()).ceil();
                    8.0 * l + 17457.0 * (15180.0 / eps).log2() - 16.0 + 2.0 * l * (l - 1.0)
                }
                FMatrix::F3 => {
                    let l = (3.0 * n.log2()).ceil();
                    8.0 * l + 471339.0 * (409860.0 / eps).log2() - 16.0 + 2.0 * l * (l - 1.0)
                }
            };
            Ok(t.max(0.0))
        }
    }
}

pub fn cost_f1_bespoke(eps: f64) -> Result<BlockEncodingCost> {
    cost_f_bespoke(FMatrix::F1, eps, LogBase::Two)
}

pub fn cost_f2_bespoke(eps: f64) -> Result<BlockEncodingCost> {
    cost_f_bespoke(FMatrix::F2, eps, LogBase::Two)
}

pub fn cost_f3_bespoke(eps: f64) -> Result<BlockEncodingCost> {
    cost_f_bespoke(FMatrix::F3, eps, LogBase::Two)
}

pub fn cost_f_bespoke(m: FMatrix, eps: f64, base: LogBase) -> Result<BlockEncodingCost> {
    let (sub, clean, persistent) = match m {
        FMatrix::F1 => (1.0 / 257.0, 8, 9),
        FMatrix::F2 => (3.0 / 13312.0, 6, 22),
        FMatrix::F3 => (3.0 / 106496.0, 6, 25),
    };
    Ok(BlockEncodingCost {
        label: format!("{m:?} bespoke"),
        matrix: m,
        encoding: Encoding::Bespoke,
        n: 1.0,
        log_base: base,
        subnormalization: sub,
        clean_ancillae: clean,
        persistent_ancillae: persistent,
        epsilon: eps,
        t_gates: t_gate_formula(Encoding::Bespoke, m, 1.0, eps, base)?,
    })
}

pub fn cost_f_unstructured(m: FMatrix, n: f64, eps: f64) -> Result<BlockEncodingCost> {
    let q = Q as f64;
    let lq = ceil_log2(q) as u32;
    let (sub, clean) = match m {
        FMatrix::F1 => (1.0 / (1.589_506_17 * q), lq + 1),
        FMatrix::F2 => (1.0 / (40.0 / 9.0 * q), lq + 3),
        FMatrix::F3 => (1.0 / (20.0 / 9.0 * q), lq + 3),
    };
    Ok(BlockEncodingCost {
        label: format!("{m:?} unstructured"),
        matrix: m,
        encoding: Encoding::Unstructured,
        n,
        log_base: LogBase::Two,
        subnormalization: sub,
        clean_ancillae: clean,
        persistent_ancillae: 0,
        epsilon: eps,
        t_gates: t_gate_formula(Encoding::Unstructured, m, n, eps, LogBase::Two)?,
    })
}

pub fn cost_f(encoding: Encoding, m: FMatrix, n: f64, eps: f64, base: LogBase) -> Result<BlockEncodingCost> {
    match encoding {
        Encoding::Bespoke => cost_f_bespoke(m, eps, base),
        Encoding::Unstructured => cost_f_unstructured(m, n, eps),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "count", rename_all = "lowercase")]
pub enum StreamingGeometry {
    Sphere,
    Prisms(u32),
}

/// `max_axis ceil(log2 n_axis)`.
pub fn position_bits(grid_counts: [f64; 3]) -> u32 {
    grid_counts.iter().map(|&c| ceil_log2(c) as u32).max().unwrap_or(0)
}

pub fn oracle_t_gates(geometry: StreamingGeometry, n_p: u32) -> f64 {
    let np = n_p as f64;
    let t = match geometry {
        StreamingGeometry::Sphere => 12.0 * np * np + 32.0 * np - 52.0,
        StreamingGeometry::Prisms(count) => count as f64 * (72.0 * np - 138.0),
    };
    t.max(0.0)
}

pub fn shift_t_gates(n_p: u32) -> f64 {
    12.0 * (n_p as f64 - 1.0).max(0.0)
}

/// One of the two index-arithmetic operators; the adder width is
/// `ceil(log2 nQ)`.
pub fn s_index_t_gates(n: f64) -> f64 {
    let q = Q as f64;
    let w = ceil_log2(n * q);
    let logs = ceil_log2(n * q) + ceil_log2((n - 1.0) * q) + ceil_log2((n - 2.0) * q);
    (6.0 * (11.0 * w - 15.0)).max(0.0) + 14.0 * logs + 42.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamingCost {
    pub n_p: u32,
    pub oracle: f64,
    pub shift: f64,
    pub s1: f64,
    pub s2: f64,
    /// Two oracle calls (compute and uncompute), one shift, `S1` and `S2`.
    pub total: f64,
}

pub fn cost_streaming(geometry: StreamingGeometry, n: f64, n_p: u32) -> StreamingCost {
    let oracle = oracle_t_gates(geometry, n_p);
    let shift = shift_t_gates(n_p);
    let s = s_index_t_gates(n);
    StreamingCost { n_p, oracle, shift, s1: s, s2: s, total: 2.0 * oracle + shift + 2.0 * s }
}

/// `S + F1` encoding parameters: subnormalization, ancillae, error factor.
pub const S_PLUS_F1_SUBNORMALIZATION: f64 = 2.0;
pub const S_PLUS_F1_ANCILLAE: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarlemanConvention {
    /// `3n + a + 16` qubits and subnormalization `54 beta` (T = D = 3).
    #[default]
    InText,
    /// `nT + a + 3 ceil(log2 T) + ceil(log2 D)` qubits, `D T (T+1) beta / 2`.
    Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanEncodingCost {
    pub convention: CarlemanConvention,
    pub qubits: f64,
    pub subnormalization: f64,
    pub qubits_theorem: f64,
    pub subnormalization_theorem: f64,
    pub qubits_in_text: Option<f64>,
    pub subnormalization_in_text: Option<f64>,
}

pub fn cost_carleman(
    beta: f64,
    a: u32,
    n_qubits_base: u32,
    t_trunc: u32,
    d: u32,
    convention: CarlemanConvention,
) -> Result<CarlemanEncodingCost> {
    if !(beta > 0.0) || t_trunc == 0 || d == 0 {
        return Err(Error::Config("beta must be positive and T, D at least 1".into()));
    }
    let (n, t, dd) = (n_qubits_base as f64, t_trunc as f64, d as f64);
    let qubits_theorem = n * t + a as f64 + 3.0 * ceil_log2(t) + ceil_log2(dd);
    let sub_theorem = dd * t * (t + 1.0) * beta / 2.0;
    let in_text = (t_trunc == 3 && d == 3).then(|| (3.0 * n + a as f64 + 16.0, 54.0 * beta));
    let (qubits, subnormalization) = match (convention, in_text) {
        (CarlemanConvention::InText, Some(v)) => v,
        (CarlemanConvention::InText, None) => {
            return Err(Error::Config("the in-text convention covers T = D = 3 only".into()))
        }
        (CarlemanConvention::Theorem, _) => (qubits_theorem, sub_theorem),
    };
    Ok(CarlemanEncodingCost {
        convention,
        qubits,
        subnormalization,
        qubits_theorem,
        subnormalization_theorem: sub_theorem,
        qubits_in_text: in_text.map(|v| v.0),
        subnormalization_in_text: in_text.map(|v| v.1),
    })
}

pub fn cost_adder(n_bits: u32) -> f64 {
    16.0 * n_bits as f64 + 22.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBounds {
    pub f_lower: f64,
    pub f_upper: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub v_upper: f64,
    pub drag: f64,
    pub relative_error: f64,
    /// Required amplitude-estimation accuracy.
    pub eps_tilde: f64,
    /// `pi ||v|| ||f|| / (4 F eps)`.
    pub grover_iterates_direct: f64,
    /// `C n^(1/6) / (F eps)`.
    pub grover_iterate_bound: f64,
    pub c_constant: f64,
    pub t_tilde: f64,
    pub diagnostics: Vec<String>,
}

/// `||v||_2` bound from the boundary-cell count of an obstacle of radius `r`.
pub fn v_norm_upper(volume: f64, r: f64, dt: f64, n: f64) -> f64 {
    (216.0 * PI * volume.powf(4.0 / 3.0) * r * r / (dt * dt * n.powf(4.0 / 3.0))).sqrt()
}

pub fn grover_constant(volume: f64, r: f64, t_tilde: f64) -> f64 {
    (3.0 * PI).powf(1.5) / 2f64.sqrt() * volume.powf(2.0 / 3.0) * r / t_tilde
}

pub fn amplitude_bounds(inst: &LatticeInstance, eps_rho: f64, drag: f64, rel_err: f64) -> Result<AmplitudeBounds> {
    if !(eps_rho >= 0.0 && eps_rho < 1.0) {
        return Err(Error::Config(format!("epsilon_rho must lie in [0, 1), got {eps_rho}")));
    }
    if !(rel_err > 0.0) {
        return Err(Error::Config(format!("relative error must be positive, got {rel_err}")));
    }
    let (f_lower, f_upper) = f_norm_bounds(inst.n_f, eps_rho);
    let (phi_min, phi_max) = phi_norm_bounds(inst.n_f, eps_rho);
    let v_upper = v_norm_upper(inst.volume, inst.obstacle_radius, inst.dt, inst.n);
    let t_tilde = inst.n.cbrt() * inst.dt;
    let c = grover_constant(inst.volume, inst.obstacle_radius, t_tilde);
    let mut diagnostics = Vec::new();
    let (eps_tilde, direct, bound) = if drag > 0.0 {
        (
            drag * rel_err / (2.0 * v_upper * f_upper),
            PI * v_upper * f_upper / (4.0 * drag * rel_err),
            c * inst.n.powf(1.0 / 6.0) / (drag * rel_err),
        )
    } else {
        diagnostics.push(format!("drag estimate {drag} is not positive; iterate bounds are infinite"));
        (0.0, f64::INFINITY, f64::INFINITY)
    };
    Ok(AmplitudeBounds {
        f_lower,
        f_upper,
        phi_min,
        phi_max,
        v_upper,
        drag,
        relative_error: rel_err,
        eps_tilde,
        grover_iterates_direct: direct,
        grover_iterate_bound: bound,
        c_constant: c,
        t_tilde,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaeCounts {
    pub repetitions: f64,
    pub grover_iterates: f64,
}

/// `32 / (1 - 2 sin(pi/14))^2 = 103.903...`, frozen at four significant
/// figures; with a ceiling this reproduces the published 425 and 1558.
pub const QAE_PREFACTOR: f64 = 103.9;

/// Circuit repetitions and Grover iterates per circuit for accuracy
/// `eps_tilde` at confidence `1 - delta`.
pub fn qae_counts(eps_tilde: f64, delta: f64) -> Result<QaeCounts> {
    if !(eps_tilde > 0.0 && eps_tilde < PI / 4.0) {
        return Err(Error::Config(format!("eps_tilde must lie in (0, pi/4), got {eps_tilde}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    let pre = QAE_PREFACTOR;
    let reps = (pre * (2.0 / delta * (PI / (4.0 * eps_tilde)).log2()).ln()).ceil();
    Ok(QaeCounts { repetitions: reps.max(1.0), grover_iterates: (PI / (8.0 * eps_tilde)).ceil() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistoryBlock {
    Identity,
    NegIdentity,
    /// `-A h / j`.
    NegAh(u32),
}

/// Nonzero blocks of `L_(m,k,p)` as `(block_row, block_col, block)`.
pub fn history_pattern(m: usize, k: usize, p: usize) -> Vec<(usize, usize, HistoryBlock)> {
    let rows = m * (k + 1) + p + 1;
    let mut out = Vec::new();
    for r in 0..rows {
        let main = m * (k + 1);
        if r == 0 {
        } else if r <= main {
            let j = r % (k + 1);
            if j == 0 {
                for c in (r - (k + 1))..r {
                    out.push((r, c, HistoryBlock::NegIdentity));
                }
            } else {
                out.push((r, r - 1, HistoryBlock::NegAh(j as u32)));
            }
        } else {
            out.push((r, r - 1, HistoryBlock::NegIdentity));
        }
        out.push((r, r, HistoryBlock::Identity));
    }
    out
}

/// Text grid of the block pattern: `I`, `-I`, `-Ah`, `-Ah/j`, blank.
pub fn render_history_pattern(m: usize, k: usize, p: usize) -> Vec<Vec<String>> {
    let rows = m * (k + 1) + p + 1;
    let mut g = vec![vec![String::new(); rows]; rows];
    for (r, c, b) in history_pattern(m, k, p) {
        g[r][c] = match b {
            HistoryBlock::Identity => "I".into(),
            HistoryBlock::NegIdentity => "-I".into(),
            HistoryBlock::NegAh(1) => "-Ah".into(),
            HistoryBlock::NegAh(j) => format!("-Ah/{j}"),
        };
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryModel {
    pub h: f64,
    pub m: f64,
    pub k: u32,
    pub p: f64,
    pub block_rows: f64,
    pub block_dimension: f64,
    pub dimension: f64,
}

/// Smallest `k` with `m (k+1)!^-1 <= eps`, taking `||A|| h <= 1`.
pub fn taylor_truncation(m: f64, eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps < 1.0) || !(m >= 1.0) {
        return Err(Error::Config("taylor truncation needs m >= 1 and 0 < eps < 1".into()));
    }
    let target = (m / eps).ln();
    let mut log_fact = 0.0;
    for k in 1..200u32 {
        log_fact += ((k + 1) as f64).ln();
        if log_fact >= target {
            return Ok(k);
        }
    }
    Err(Error::Numerical("taylor truncation did not converge".into()))
}

/// Size of the history system; `p = None` pads with `m (k+1)` steps.
pub fn ode_history_model(block_dimension: f64, h: f64, t_lattice: f64, k: u32, p: Option<f64>) -> Result<HistoryModel> {
    if !(h > 0.0) || !(t_lattice > 0.0) || !(block_dimension >= 1.0) {
        return Err(Error::Config("history model needs positive h, T and block dimension".into()));
    }
    let m = (t_lattice / h).ceil();
    let p = p.unwrap_or(m * (k as f64 + 1.0));
    let block_rows = m * (k as f64 + 1.0) + p + 1.0;
    Ok(HistoryModel { h, m, k, p, block_rows, block_dimension, dimension: block_rows * block_dimension })
}

/// Assembles `L_(m,k,p)` for a dense `dim x dim` matrix `A` and solves it by
/// block forward substitution. Returns one vector per block row.
#[allow(clippy::too_many_arguments)]
pub fn build_and_solve_history_small(
    a: &[f64],
    dim: usize,
    phi0: &[f64],
    b: &[f64],
    h: f64,
    m: usize,
    k: usize,
    p: usize,
) -> Result<Vec<Vec<f64>>> {
    if a.len() != dim * dim || phi0.len() != dim || b.len() != dim {
        return Err(Error::Dimension("A, phi0 and b must match dim".into()));
    }
    if k == 0 || m == 0 {
        return Err(Error::Config("m and k must be at least 1".into()));
    }
    let rows = m * (k + 1) + p + 1;
    if rows * dim > 100_000 {
        return Err(Error::Capacity(format!("history system dimension {} exceeds 1e5", rows * dim)));
    }
    let matvec = |x: &[f64]| -> Vec<f64> {
        (0..dim).map(|i| (0..dim).map(|j| a[i * dim + j] * x[j]).sum()).collect()
    };
    let pattern = history_pattern(m, k, p);
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut rhs = if r == 0 {
            phi0.to_vec()
        } else if r <= m * (k + 1) && r % (k + 1) == 1 {
            b.iter().map(|v| h * v).collect()
        } else {
            vec![0.0; dim]
        };
        for &(rr, c, blk) in pattern.iter().filter(|e| e.0 == r && e.1 < r) {
            debug_assert_eq!(rr, r);
            match blk {
                HistoryBlock::NegIdentity => rhs.iter_mut().zip(&x[c]).for_each(|(s, v)| *s += v),
                HistoryBlock::NegAh(j) => {
                    let ax = matvec(&x[c]);
                    rhs.iter_mut().zip(ax).for_each(|(s, v)| *s += h / j as f64 * v);
                }
                HistoryBlock::Identity => {
                    return Err(Error::Numerical("identity block below the diagonal".into()))
                }
            }
        }
        x.push(rhs);
    }
    Ok(x)
}

/// Pluggable count of calls to the `A` block encoding made by the linear
/// solver for one state preparation.
pub trait QlsaCallModel: Send + Sync {
    fn id(&self) -> String;
    fn calls(&self, kappa: f64, solver_error: f64) -> f64;
}

/// `c0 * kappa * ln(1 / eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearKappaLog {
    pub c0: f64,
}

impl Default for LinearKappaLog {
    fn default() -> Self {
        Self { c0: 1.0 }
    }
}

impl QlsaCallModel for LinearKappaLog {
    fn id(&self) -> String {
        format!("linear-kappa-log(c0={})", self.c0)
    }
    fn calls(&self, kappa: f64, solver_error: f64) -> f64 {
        self.c0 * kappa * (1.0 / solver_error).ln()
    }
}

/// Fixed call count, independent of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantCalls(pub f64);

impl QlsaCallModel for ConstantCalls {
    fn id(&self) -> String {
        format!("constant({})", self.0)
    }
    fn calls(&self, _kappa: f64, _solver_error: f64) -> f64 {
        self.0
    }
}

/// Equal-or-weighted split of the relative error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub total: f64,
    /// Weights for amplitude estimation, linear solver, block encodings.
    pub weights: [f64; 3],
}

impl ErrorBudget {
    pub fn shares(&self) -> [f64; 3] {
        let s: f64 = self.weights.iter().sum();
        self.weights.map(|w| self.total * w / s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModelConfig {
    pub tau: f64,
    /// `None` uses the norm-report bound.
    pub spectral_norm_a: Option<f64>,
    /// `None` uses `1 / ||A||_2`.
    pub h: Option<f64>,
    pub spectral_abscissa: f64,
    pub c_max: f64,
    pub b_norm: f64,
    pub epsilon_rho: f64,
    pub budget: ErrorBudget,
    pub delta: f64,
    pub encoding: Encoding,
    pub log_base: LogBase,
    pub carleman_convention: CarlemanConvention,
    /// Drag in lattice force units; `None` uses the placeholder model.
    pub drag: Option<f64>,
    /// Drag coefficient of the placeholder model.
    pub drag_coefficient: f64,
}

impl Default for CostModelConfig {
    fn default() -> Self {
        Self {
            tau: 0.6,
            spectral_norm_a: None,
            h: None,
            spectral_abscissa: 0.0,
            c_max: 1.0,
            b_norm: 0.0,
            epsilon_rho: 1e-3,
            budget: ErrorBudget { total: 1e-2, weights: [1.0, 1.0, 1.0] },
            delta: 1e-2,
            encoding: Encoding::Bespoke,
            log_base: LogBase::Two,
            carleman_convention: CarlemanConvention::InText,
            drag: None,
            drag_coefficient: 0.5,
        }
    }
}

impl CostModelConfig {
    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(h)) = (self.spectral_norm_a, self.h) {
            if h * a > 1.0 + 1e-12 {
                return Err(Error::Config(format!("h * ||A|| = {} exceeds 1", h * a)));
            }
        }
        if !(self.c_max > 0.0) || !(self.budget.total > 0.0) || self.budget.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("c_max, error budget and weights must be positive".into()));
        }
        Ok(())
    }
}

/// Drag magnitude used when no estimate is supplied:
/// `C_D / 2 * u^2 * pi R^2` in lattice units, scaled by `dx^3 / dt`.
pub fn placeholder_drag(inst: &LatticeInstance, drag_coefficient: f64) -> f64 {
    let r_lat = inst.obstacle_radius / inst.dx;
    let u_lat = inst.velocity * inst.dt / inst.dx;
    0.5 * drag_coefficient * u_lat * u_lat * PI * r_lat * r_lat * inst.dx.powi(3) / inst.dt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingBreakdown {
    pub streaming: StreamingCost,
    pub f1: BlockEncodingCost,
    pub f2: BlockEncodingCost,
    pub f3: BlockEncodingCost,
    pub f_blocks_t_gates: f64,
    pub a_encoding_t_gates: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub instance: String,
    pub reynolds: f64,
    pub model_id: String,
    pub config: CostModelConfig,
    pub logical_qubits: f64,
    pub t_gate_total: f64,
    /// Multiplicative call layers, outermost first.
    pub layers: Vec<Layer>,
    pub per_encoding: EncodingBreakdown,
    pub history: HistoryModel,
    pub kappa: f64,
    pub bounds: AmplitudeBounds,
    pub carleman: CarlemanEncodingCost,
    pub diagnostics: Vec<String>,
}

impl ResourceEstimate {
    /// Product of the layer counts and the per-encoding T-gate cost.
    pub fn recompose(&self) -> f64 {
        self.layers.iter().map(|l| l.calls).product::<f64>() * self.per_encoding.a_encoding_t_gates
    }
}

pub fn encoding_breakdown(inst: &LatticeInstance, config: &CostModelConfig, eps_encoding: f64) -> Result<EncodingBreakdown> {
    let each = eps_encoding / 4.0;
    let n_p = position_bits(inst.grid_counts);
    let streaming = cost_streaming(StreamingGeometry::Sphere, inst.n, n_p);
    let f1 = cost_f(config.encoding, FMatrix::F1, inst.n, each, config.log_base)?;
    let f2 = cost_f(config.encoding, FMatrix::F2, inst.n, each, config.log_base)?;
    let f3 = cost_f(config.encoding, FMatrix::F3, inst.n, each, config.log_base)?;
    let f_blocks = f1.t_gates + f2.t_gates + f3.t_gates;
    Ok(EncodingBreakdown {
        a_encoding_t_gates: streaming.total + f_blocks,
        f_blocks_t_gates: f_blocks,
        streaming,
        f1,
        f2,
        f3,
    })
}

pub fn estimate_instance(inst: &LatticeInstance, config: &CostModelConfig, model: &dyn QlsaCallModel) -> Result<ResourceEstimate> {
    config.validate()?;
    let mut diagnostics = inst.warnings.clone();
    let norm_a = match config.spectral_norm_a {
        Some(v) => v,
        None => norm_report(config.tau)?.spectral_bound,
    };
    let h = config.h.unwrap_or(1.0 / norm_a);
    let [eps_qae, eps_solver, eps_enc] = config.budget.shares();
    let m = (inst.t_steps / h).ceil();
    let k = taylor_truncation(m, eps_solver.min(0.5))?;
    let history = ode_history_model(inst.nq, h, inst.t_steps, k, None)?;
    let kappa = history.block_rows * config.c_max;
    let qlsa_calls = model.calls(kappa, eps_solver);

    let drag = match config.drag {
        Some(d) => d,
        None => {
            diagnostics.push(format!("no drag estimate; placeholder with C_D = {}", config.drag_coefficient));
            placeholder_drag(inst, config.drag_coefficient)
        }
    };
    let bounds = amplitude_bounds(inst, config.epsilon_rho, drag, eps_qae)?;
    diagnostics.extend(bounds.diagnostics.iter().cloned());
    let (reps, preps) = if bounds.eps_tilde >= PI / 4.0 {
        diagnostics.push("required accuracy is trivial; amplitude estimation skipped".into());
        (1.0, 1.0)
    } else if bounds.eps_tilde > 0.0 {
        let q = qae_counts(bounds.eps_tilde, config.delta)?;
        (q.repetitions, 2.0 * q.grover_iterates + 1.0)
    } else {
        return Err(Error::Numerical("amplitude-estimation accuracy is zero".into()));
    };

    let per_encoding = encoding_breakdown(inst, config, eps_enc)?;
    let layers = vec![
        Layer { name: "circuit_repetitions".into(), calls: reps },
        Layer { name: "state_preparations_per_circuit".into(), calls: preps },
        Layer { name: "qlsa_a_encoding_calls".into(), calls: qlsa_calls },
        Layer { name: "carleman_block_calls_per_a".into(), calls: 1.0 },
    ];
    let t_gate_total = layers.iter().map(|l| l.calls).product::<f64>() * per_encoding.a_encoding_t_gates;

    let index_bits = ceil_log2(inst.nq) as u32;
    let a = [&per_encoding.f1, &per_encoding.f2, &per_encoding.f3]
        .iter()
        .map(|c| c.ancillae())
        .max()
        .unwrap_or(0)
        .max(S_PLUS_F1_ANCILLAE);
    let beta = [S_PLUS_F1_SUBNORMALIZATION, 1.0 / per_encoding.f2.subnormalization, 1.0 / per_encoding.f3.subnormalization]
        .into_iter()
        .fold(0.0, f64::max);
    let carleman = cost_carleman(beta, a, index_bits, 3, 3, config.carleman_convention)?;
    let logical_qubits = carleman.qubits + ceil_log2(history.block_rows) + 1.0;

    Ok(ResourceEstimate {
        instance: inst.id.clone(),
        reynolds: inst.reynolds,
        model_id: model.id(),
        config: config.clone(),
        logical_qubits,
        t_gate_total,
        layers,
        per_encoding,
        history,
        kappa,
        bounds,
        carleman,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log10` units.
    pub residual: f64,
}

/// Least-squares line through `(log10 x, log10 y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::Config("a power-law fit needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Config("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PowerLawFit { slope, intercept, residual: (ss / n).sqrt() })
}

//! Soft-margin kernel SVM trained by sequential minimal optimization.
//!
//! The trainer solves the dual
//!
//! ```text
//! maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! two multipliers at a time. The first index comes from Platt's outer loop
//! (alternating full sweeps and sweeps over unbound multipliers); the second
//! is the unbound multiplier with the largest error gap, falling back to
//! sweeps that start at a seeded random offset. The decision function is
//! `f(x) = sum_i a_i y_i K(sv_i, z) + b` where `z` is `x` after
//! standardization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::Label;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    /// RBF with `gamma = 1 / dim`.
    pub fn default_rbf(dim: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(SvmError::InvalidKernel(format!(
                "rbf gamma must be positive, got {gamma}"
            ))),
            _ => Ok(()),
        }
    }

    /// Zero for the linear kernel; used for tie-breaking and serialization.
    pub fn gamma(&self) -> f64 {
        match *self {
            KernelSpec::Linear => 0.0,
            KernelSpec::Rbf { gamma } => gamma,
        }
    }

    fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// `a . b` (linear) or `exp(-gamma |a - b|^2)` (rbf).
pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64, SvmError> {
    if a.len() != b.len() {
        return Err(SvmError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(spec.eval_unchecked(a, b))
}

/// Per-feature z-scoring with population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
    constant: Vec<bool>,
}

impl Standardizer {
    /// Pass-through standardizer (means 0, stds 1).
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
            constant: vec![false; dim],
        }
    }

    /// Zero-variance columns get `std = 1` and are flagged in [`Self::constant_features`].
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, SvmError> {
        if rows.len() < 2 {
            return Err(SvmError::TooFewSamples {
                needed: 2,
                got: rows.len(),
            });
        }
        let dim = rows[0].len();
        check_dims(rows, dim)?;
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        let mut stds = vec![1.0; dim];
        let mut constant = vec![false; dim];
        for j in 0..dim {
            let first = rows[0][j];
            if rows.iter().all(|r| r[j] == first) {
                means[j] = first;
                constant[j] = true;
                continue;
            }
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            let std = var.sqrt();
            if std > 1e-12 * mean.abs().max(1.0) {
                stds[j] = std;
            } else {
                constant[j] = true;
            }
        }
        Ok(Self { means, stds, constant })
    }

    pub fn from_parts(means: Vec<f64>, stds: Vec<f64>, constant: Vec<bool>) -> Result<Self, SvmError> {
        if means.len() != stds.len() || means.len() != constant.len() {
            return Err(SvmError::InvalidModel("standardizer vectors differ in length".into()));
        }
        if stds.iter().any(|s| !(*s > 0.0)) {
            return Err(SvmError::InvalidModel("standardizer std must be > 0".into()));
        }
        Ok(Self { means, stds, constant })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn constant_features(&self) -> &[bool] {
        &self.constant
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

fn check_dims(rows: &[Vec<f64>], dim: usize) -> Result<(), SvmError> {
    match rows.iter().find(|r| r.len() != dim) {
        Some(r) => Err(SvmError::DimensionMismatch {
            expected: dim,
            got: r.len(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub tolerance: f64,
    pub max_passes: u32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 10_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidConfig(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(SvmError::InvalidConfig(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidConfig("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// How training went. A model with `converged == false` is still usable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub c: f64,
    pub tolerance: f64,
    pub passes: u32,
    pub converged: bool,
    pub kkt_violations: u32,
}

/// Raw solver output over the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub passes: u32,
    pub converged: bool,
    pub kkt_violations: u32,
}

struct Solver {
    n: usize,
    gram: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    err: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    rng: ChaCha8Rng,
}

// Minimum relative change of a multiplier that counts as progress.
const STEP_EPS: f64 = 1e-10;
// Multipliers this close (relative to C) to a bound are snapped onto it.
const BOUND_EPS: f64 = 1e-12;

impl Solver {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn is_unbound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn output(&self, i: usize) -> f64 {
        let row = &self.gram[i * self.n..(i + 1) * self.n];
        row.iter()
            .zip(self.alpha.iter().zip(&self.y))
            .filter(|(_, (a, _))| **a != 0.0)
            .map(|(k, (a, y))| a * y * k)
            .sum::<f64>()
            + self.b
    }

    fn refresh_errors(&mut self) {
        for i in 0..self.n {
            self.err[i] = self.output(i) - self.y[i];
        }
    }

    fn violates(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn snap(&self, a: f64) -> f64 {
        if a < BOUND_EPS * self.c {
            0.0
        } else if a > self.c * (1.0 - BOUND_EPS) {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let (k11, k12, k22) = (self.k(i1, i1), self.k(i1, i2), self.k(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Objective is linear along the constraint line; pick the better end.
            let f1 = y1 * (e1 - self.b) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 - self.b) - s * a1 * k12 - a2 * k22;
            let obj = |a2_end: f64| {
                let a1_end = a1 + s * (a2 - a2_end);
                a1_end * f1
                    + a2_end * f2
                    + 0.5 * a1_end * a1_end * k11
                    + 0.5 * a2_end * a2_end * k22
                    + s * a2_end * a1_end * k12
            };
            let (obj_lo, obj_hi) = (obj(lo), obj(hi));
            if obj_lo < obj_hi - STEP_EPS {
                lo
            } else if obj_lo > obj_hi + STEP_EPS {
                hi
            } else {
                a2
            }
        };
        a2_new = self.snap(a2_new);
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let a1_new = self.snap((a1 + s * (a2 - a2_new)).clamp(0.0, c));

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let b_new = if a1_new > 0.0 && a1_new < c {
            b1
        } else if a2_new > 0.0 && a2_new < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.b;
        for k in 0..self.n {
            self.err[k] += d1 * self.gram[i1 * self.n + k] + d2 * self.gram[i2 * self.n + k] + db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.b = b_new;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates(i2) {
            return false;
        }
        let e2 = self.err[i2];
        let unbound: Vec<usize> = (0..self.n).filter(|&i| self.is_unbound(i)).collect();
        if unbound.len() > 1 {
            let mut best = None;
            let mut best_gap = -1.0;
            for &i in &unbound {
                let gap = (self.err[i] - e2).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best = Some(i);
                }
            }
            if let Some(i1) = best {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        if !unbound.is_empty() {
            let start = self.rng.random_range(0..unbound.len());
            for off in 0..unbound.len() {
                let i1 = unbound[(start + off) % unbound.len()];
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..self.n);
        for off in 0..self.n {
            if self.take_step((start + off) % self.n, i2) {
                return true;
            }
        }
        false
    }

    fn count_violations(&self) -> u32 {
        (0..self.n).filter(|&i| self.violates(i)).count() as u32
    }
}

fn validate_training_set(x: &[Vec<f64>], y: &[Label]) -> Result<usize, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(SvmError::TooFewSamples {
            needed: 2,
            got: x.len(),
        });
    }
    let dim = x[0].len();
    check_dims(x, dim)?;
    let has = |l: Label| y.contains(&l);
    if !has(Label::Normal) || !has(Label::Asphyxia) {
        return Err(SvmError::SingleClassInput);
    }
    Ok(dim)
}

/// Runs SMO and returns the multipliers of every training row.
pub fn smo_solve(x: &[Vec<f64>], y: &[Label], kernel: &KernelSpec, cfg: &TrainConfig) -> Result<SmoSolution, SvmError> {
    validate_training_set(x, y)?;
    kernel.validate()?;
    cfg.validate()?;
    let n = x.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval_unchecked(&x[i], &x[j]);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let mut s = Solver {
        n,
        gram,
        err: ys.iter().map(|v| -v).collect(),
        y: ys,
        alpha: vec![0.0; n],
        b: 0.0,
        c: cfg.c,
        tol: cfg.tolerance,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };

    let mut passes = 0u32;
    let mut examine_all = true;
    let mut converged = false;
    let mut stalled = false;
    while passes < cfg.max_passes {
        let mut changed = 0usize;
        if examine_all {
            s.refresh_errors();
            for i in 0..n {
                changed += s.examine(i) as usize;
            }
        } else {
            for i in 0..n {
                if s.is_unbound(i) {
                    changed += s.examine(i) as usize;
                }
            }
        }
        passes += 1;
        if examine_all {
            if changed == 0 {
                s.refresh_errors();
                if s.count_violations() == 0 {
                    converged = true;
                    break;
                }
                if stalled {
                    break;
                }
                stalled = true;
                continue;
            }
            stalled = false;
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }
    s.refresh_errors();
    let kkt_violations = s.count_violations();
    Ok(SmoSolution {
        alphas: s.alpha,
        bias: s.b,
        passes,
        converged: converged && kkt_violations == 0,
        kkt_violations,
    })
}

/// Dual objective `sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(alphas: &[f64], x: &[Vec<f64>], y: &[Label], kernel: &KernelSpec) -> f64 {
    let mut quad = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            quad += alphas[i] * alphas[j] * y[i].sign() * y[j].sign() * kernel.eval_unchecked(&x[i], &x[j]);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Trains on rows that are already standardized; the returned model carries an
/// identity standardizer. See [`fit_standardized`] for the usual entry point.
pub fn smo_train(x: &[Vec<f64>], y: &[Label], kernel: &KernelSpec, cfg: &TrainConfig) -> Result<SvmModel, SvmError> {
    let sol = smo_solve(x, y, kernel, cfg)?;
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for ((row, &a), label) in x.iter().zip(&sol.alphas).zip(y) {
        if a > 0.0 {
            support_vectors.push(row.clone());
            dual_coefs.push(a * label.sign());
        }
    }
    let dim = x[0].len();
    SvmModel::from_parts(
        *kernel,
        Standardizer::identity(dim),
        support_vectors,
        dual_coefs,
        sol.bias,
        TrainingMeta {
            c: cfg.c,
            tolerance: cfg.tolerance,
            passes: sol.passes,
            converged: sol.converged,
            kkt_violations: sol.kkt_violations,
        },
    )
}

/// Fits a standardizer on `raw`, trains on the standardized rows, and attaches it.
pub fn fit_standardized(
    raw: &[Vec<f64>],
    y: &[Label],
    kernel: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<SvmModel, SvmError> {
    let standardizer = Standardizer::fit(raw)?;
    let z = raw
        .iter()
        .map(|r| standardizer.apply(r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut model = smo_train(&z, y, kernel, cfg)?;
    model.standardizer = standardizer;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    kernel: KernelSpec,
    standardizer: Standardizer,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    meta: TrainingMeta,
}

impl SvmModel {
    /// Checks shapes, `|coef| <= C`, `|sum coef| <= 1e-6`, and `n_sv >= 1`.
    pub fn from_parts(
        kernel: KernelSpec,
        standardizer: Standardizer,
        support_vectors: Vec<Vec<f64>>,
        dual_coefs: Vec<f64>,
        bias: f64,
        meta: TrainingMeta,
    ) -> Result<Self, SvmError> {
        kernel.validate()?;
        if support_vectors.is_empty() {
            return Err(SvmError::InvalidModel("no support vectors".into()));
        }
        if support_vectors.len() != dual_coefs.len() {
            return Err(SvmError::InvalidModel(format!(
                "{} support vectors but {} coefficients",
                support_vectors.len(),
                dual_coefs.len()
            )));
        }
        check_dims(&support_vectors, standardizer.dim())?;
        let slack = meta.c * 1e-12;
        if let Some(c) = dual_coefs.iter().find(|c| !(c.abs() <= meta.c + slack)) {
            return Err(SvmError::InvalidModel(format!(
                "coefficient {c} exceeds C = {}",
                meta.c
            )));
        }
        let sum: f64 = dual_coefs.iter().sum();
        if !(sum.abs() <= 1e-6) {
            return Err(SvmError::InvalidModel(format!("coefficients sum to {sum}, expected 0")));
        }
        if !bias.is_finite() {
            return Err(SvmError::InvalidModel("bias is not finite".into()));
        }
        Ok(Self {
            kernel,
            standardizer,
            support_vectors,
            dual_coefs,
            bias,
            meta,
        })
    }

    /// Degenerate model whose decision value is `bias` everywhere.
    pub fn bias_only(dim: usize, bias: f64) -> SvmModel {
        SvmModel {
            kernel: KernelSpec::Linear,
            standardizer: Standardizer::identity(dim),
            support_vectors: vec![vec![0.0; dim]],
            dual_coefs: vec![0.0],
            bias,
            meta: TrainingMeta {
                c: 1.0,
                tolerance: 1e-3,
                passes: 0,
                converged: true,
                kkt_violations: 0,
            },
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn dual_coefs(&self) -> &[f64] {
        &self.dual_coefs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        let z = self.standardizer.apply(x)?;
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * self.kernel.eval_unchecked(sv, &z))
            .sum::<f64>()
            + self.bias)
    }

    /// `sign(f(x))`, with `f(x) = 0` mapped to asphyxia.
    pub fn predict(&self, x: &[f64]) -> Result<Label, SvmError> {
        Ok(Label::from_decision(self.decision_value(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(c: f64) -> TrainingMeta {
        TrainingMeta {
            c,
            tolerance: 1e-3,
            passes: 0,
            converged: true,
            kkt_violations: 0,
        }
    }

    #[test]
    fn kernel_examples() {
        let rbf = KernelSpec::Rbf { gamma: 0.5 };
        assert_eq!(kernel_eval(&rbf, &[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
        assert_eq!(
            kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        let v = kernel_eval(&rbf, &[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-15);
        assert!(matches!(
            kernel_eval(&rbf, &[0.0], &[0.0, 1.0]),
            Err(SvmError::DimensionMismatch { .. })
        ));
        assert!(KernelSpec::Rbf { gamma: 0.0 }.validate().is_err());
    }

    #[test]
    fn standardizer_examples() {
        let rows = vec![
            vec![1.0, 0.1, 3.0],
            vec![2.0, 0.1, -1.0],
            vec![4.0, 0.1, 0.5],
            vec![-3.0, 0.1, 2.0],
        ];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.stds()[1], 1.0);
        assert_eq!(s.constant_features(), &[false, true, false]);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r).unwrap()).collect();
        for j in 0..3 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / 4.0;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-9);
            if j == 1 {
                assert!(z.iter().all(|r| r[1] == 0.0));
            } else {
                assert!((var - 1.0).abs() < 1e-9);
            }
        }
        let a = [0.5, 0.1, 7.0];
        let b = [-2.0, 0.3, 1.0];
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
        let lhs = s.apply(&mid).unwrap();
        let (sa, sb) = (s.apply(&a).unwrap(), s.apply(&b).unwrap());
        for j in 0..3 {
            assert!((lhs[j] - (sa[j] + sb[j]) / 2.0).abs() < 1e-12);
        }
        assert!(matches!(
            Standardizer::fit(&rows[..1]),
            Err(SvmError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn two_point_problem_is_solved_exactly() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![Label::Normal, Label::Asphyxia];
        let sol = smo_solve(&x, &y, &KernelSpec::Linear, &TrainConfig::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.alphas[0] - 0.5).abs() < 1e-6 && (sol.alphas[1] - 0.5).abs() < 1e-6);
        assert!(sol.bias.abs() < 1e-6);
        let model = smo_train(&x, &y, &KernelSpec::Linear, &TrainConfig::default()).unwrap();
        assert!(model.decision_value(&[0.0]).unwrap().abs() < 1e-6);
        assert!((model.decision_value(&[2.0]).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![Label::Normal, Label::Normal];
        assert_eq!(
            smo_train(&x, &y, &KernelSpec::Linear, &TrainConfig::default()),
            Err(SvmError::SingleClassInput)
        );
    }

    #[test]
    fn predict_sign_and_tie() {
        assert_eq!(
            SvmModel::bias_only(2, 5.0).predict(&[1.0, 2.0]).unwrap(),
            Label::Asphyxia
        );
        assert_eq!(
            SvmModel::bias_only(2, -5.0).predict(&[1.0, 2.0]).unwrap(),
            Label::Normal
        );
        assert_eq!(
            SvmModel::bias_only(2, 0.0).predict(&[1.0, 2.0]).unwrap(),
            Label::Asphyxia
        );
        assert!(matches!(
            SvmModel::bias_only(2, 0.0).predict(&[1.0]),
            Err(SvmError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn non_convergence_is_tagged_not_fatal() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64).cos()])
            .collect();
        let y: Vec<Label> = (0..20)
            .map(|i| if i % 3 == 0 { Label::Asphyxia } else { Label::Normal })
            .collect();
        let cfg = TrainConfig {
            max_passes: 1,
            c: 100.0,
            ..TrainConfig::default()
        };
        let model = smo_train(&x, &y, &KernelSpec::Rbf { gamma: 1.0 }, &cfg).unwrap();
        assert_eq!(model.meta().passes, 1);
        assert!(!model.meta().converged);
        assert!(model.meta().kkt_violations > 0);
    }

    #[test]
    fn model_invariants_are_enforced() {
        let ok = SvmModel::from_parts(
            KernelSpec::Linear,
            Standardizer::identity(1),
            vec![vec![1.0], vec![-1.0]],
            vec![0.5, -0.5],
            0.0,
            meta(1.0),
        );
        assert!(ok.is_ok());
        let over_c = SvmModel::from_parts(
            KernelSpec::Linear,
            Standardizer::identity(1),
            vec![vec![1.0], vec![-1.0]],
            vec![2.0, -2.0],
            0.0,
            meta(1.0),
        );
        assert!(matches!(over_c, Err(SvmError::InvalidModel(_))));
        let unbalanced = SvmModel::from_parts(
            KernelSpec::Linear,
            Standardizer::identity(1),
            vec![vec![1.0]],
            vec![0.5],
            0.0,
            meta(1.0),
        );
        assert!(matches!(unbalanced, Err(SvmError::InvalidModel(_))));
    }
}

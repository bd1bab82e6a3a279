//! Identification of the axisymmetric force-area weights from a dataset.
//!
//! Two stages per link, mirroring the usual sparse-then-exact recipe:
//! 1. Lasso (cyclic coordinate descent, intercept unpenalized) selects the
//!    drag basis support;
//! 2. unregularized least squares refits the selected basis exactly.
//!
//! Dataset outputs are base-frame force-area triples; they reduce to
//! (C_D A, C_N A) pairs by projecting onto the drag direction (-d) and the
//! normalized normal direction ((d x k) x d). Out-of-plane residuals drop.

use nalgebra::{DMatrix, DVector};

use super::axisym::{AxisymCoeffs, LinkCoeffs, SIN_ALPHA_GUARD};
use crate::dataset::AeroDataset;
use crate::model::{forward_kinematics, JointState, RobotModel};
use crate::{Error, Result};

/// Coordinate-descent stopping tolerance on the largest weight change.
const CD_TOL: f64 = 1e-10;
/// Maximum coordinate-descent sweeps.
const CD_MAX_SWEEPS: usize = 100_000;
/// Cross-validation grid: 20 logarithmic points spanning 4 decades.
const CV_GRID: usize = 20;
const CV_DECADES: f64 = 4.0;
const CV_FOLDS: usize = 5;

/// One projected observation: angle of attack and the two force areas.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedSample {
    pub alpha: f64,
    pub cda: f64,
    pub cna: f64,
}

/// Fit controls.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Fixed Lasso penalty; `None` selects it by 5-fold cross-validation.
    pub lambda: Option<f64>,
}

/// Fit result with per-link diagnostics.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub coeffs: AxisymCoeffs,
    /// Penalty used per link.
    pub lambdas: Vec<f64>,
    /// True where the support refit was rank-deficient and the full basis
    /// was used instead.
    pub rank_fallback: Vec<bool>,
}

/// Reduce dataset outputs to per-link (alpha, C_D A, C_N A) observations.
pub fn project_samples(model: &RobotModel, ds: &AeroDataset) -> Result<Vec<Vec<ProjectedSample>>> {
    if ds.n_links != model.n_aero_links() || ds.n_joints != model.n_joints() {
        return Err(Error::Dimension(format!(
            "dataset is {} joints x {} links, model is {} x {}",
            ds.n_joints,
            ds.n_links,
            model.n_joints(),
            model.n_aero_links()
        )));
    }
    let mut out: Vec<Vec<ProjectedSample>> = vec![Vec::with_capacity(ds.samples.len()); ds.n_links];
    let mut st = JointState::zero(model.n_joints());
    for sample in &ds.samples {
        st.s.copy_from(&sample.s);
        let kin = forward_kinematics(model, &st)?;
        let d = sample.wind_dir();
        for (a, &li) in model.aero_links().iter().enumerate() {
            let k_hat = kin.links[li].rot * model.links[li].symmetry_axis;
            let alpha = d.dot(&k_hat).clamp(-1.0, 1.0).acos();
            let cda = -sample.y[a].dot(&d);
            let s = alpha.sin();
            let cna = if s >= SIN_ALPHA_GUARD {
                let n_hat = d.cross(&k_hat).cross(&d) / s;
                sample.y[a].dot(&n_hat)
            } else {
                0.0
            };
            out[a].push(ProjectedSample { alpha, cda, cna });
        }
    }
    Ok(out)
}

/// Fit every aero link of the model from the dataset.
pub fn fit_coefficients(model: &RobotModel, ds: &AeroDataset, opts: FitOptions) -> Result<FitOutcome> {
    let projected = project_samples(model, ds)?;
    let mut entries = Vec::with_capacity(projected.len());
    let mut lambdas = Vec::with_capacity(projected.len());
    let mut fallbacks = Vec::with_capacity(projected.len());
    for (a, samples) in projected.iter().enumerate() {
        let name = model.links[model.aero_links()[a]].name.clone();
        let (coeffs, lambda, fallback) = fit_link(samples, opts)
            .map_err(|e| Error::Validation(format!("link '{name}': {e}")))?;
        entries.push((name, coeffs));
        lambdas.push(lambda);
        fallbacks.push(fallback);
    }
    Ok(FitOutcome {
        coeffs: AxisymCoeffs { entries },
        lambdas,
        rank_fallback: fallbacks,
    })
}

/// Drag design row: [1, cos a, sin^2 a, sin^3 a, cos^3 a].
fn drag_row(alpha: f64) -> [f64; 5] {
    let (s, c) = alpha.sin_cos();
    [1.0, c, s * s, s * s * s, c * c * c]
}

/// Fit one link. Returns (weights, lambda used, rank fallback flag).
pub fn fit_link(samples: &[ProjectedSample], opts: FitOptions) -> Result<(LinkCoeffs, f64, bool)> {
    let n = samples.len();
    if n < 6 {
        return Err(Error::Validation(format!("need at least 6 samples, got {n}")));
    }
    let mut alphas: Vec<f64> = samples.iter().map(|p| p.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if alphas.len() < 5 {
        return Err(Error::Validation(format!(
            "need at least 5 distinct angles of attack, got {}",
            alphas.len()
        )));
    }

    let x_drag = DMatrix::from_fn(n, 5, |i, j| drag_row(samples[i].alpha)[j]);
    let y_drag = DVector::from_fn(n, |i, _| samples[i].cda);
    let x_norm = DMatrix::from_fn(n, 1, |i, _| {
        let (s, c) = samples[i].alpha.sin_cos();
        s * s * c
    });
    let y_norm = DVector::from_fn(n, |i, _| samples[i].cna);

    let penalized = [false, true, true, true, true];
    let lambda = match opts.lambda {
        Some(l) if l >= 0.0 => l,
        Some(l) => return Err(Error::Validation(format!("lambda must be >= 0, got {l}"))),
        None => cross_validate_lambda(&x_drag, &y_drag, &penalized),
    };

    // Stage 1: Lasso selects the support.
    let w_lasso = lasso(&x_drag, &y_drag, lambda, &penalized);
    let support: Vec<usize> = (0..5).filter(|&j| j == 0 || w_lasso[j] != 0.0).collect();

    // Stage 2: exact least squares on the support.
    let mut fallback = false;
    let mut w = [0.0; 6];
    match least_squares(&x_drag, &y_drag, &support) {
        Some(ws) => {
            for (k, &j) in support.iter().enumerate() {
                w[j] = ws[k];
            }
        }
        None => {
            // Rank-deficient support refit: fall back to the full basis via
            // a rank-revealing solve.
            fallback = true;
            let full: Vec<usize> = (0..5).collect();
            let svd = x_drag.clone().svd(true, true);
            let ws = svd.solve(&y_drag, 1e-12).map_err(|e| Error::Validation(e.to_string()))?;
            for j in 0..5 {
                w[j] = ws[j];
            }
            let _ = full;
        }
    }

    // Normal force area: single penalized basis function.
    let w5_lasso = lasso(&x_norm, &y_norm, lambda, &[true]);
    if w5_lasso[0] != 0.0 {
        let denom = x_norm.column(0).norm_squared();
        w[5] = if denom > 0.0 { x_norm.column(0).dot(&y_norm) / denom } else { 0.0 };
    }

    // Physical drag positivity, restored by lifting the constant term.
    let mut min_cda = f64::INFINITY;
    let coeffs_probe = LinkCoeffs { w };
    for deg in 0..=180 {
        let (cda, _) = super::axisym::eval_force_areas(&coeffs_probe, (deg as f64).to_radians());
        min_cda = min_cda.min(cda);
    }
    if min_cda < 0.0 {
        w[0] -= min_cda;
    }

    Ok((LinkCoeffs { w }, lambda, fallback))
}

/// Cyclic coordinate descent for
/// `min (1/2N) |y - X w|^2 + lambda * sum_{j penalized} |w_j|`.
fn lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, penalized: &[bool]) -> DVector<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared() / n).collect();
    let mut w = DVector::zeros(p);
    let mut resid = y.clone();
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_delta = 0.0_f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho = x.column(j).dot(&resid) / n + col_sq[j] * w[j];
            let new = if penalized[j] {
                soft_threshold(rho, lambda) / col_sq[j]
            } else {
                rho / col_sq[j]
            };
            let delta = new - w[j];
            if delta != 0.0 {
                resid -= delta * x.column(j);
                w[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < CD_TOL {
            break;
        }
    }
    w
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Plain least squares on the selected columns; `None` when the normal
/// equations are numerically rank-deficient.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Option<DVector<f64>> {
    let n = x.nrows();
    let k = support.len();
    let xs = DMatrix::from_fn(n, k, |i, j| x[(i, support[j])]);
    let gram = xs.transpose() * &xs;
    let rhs = xs.transpose() * y;
    let eig = gram.clone().symmetric_eigenvalues();
    if eig.min() < 1e-10 * eig.max().max(1e-300) {
        return None;
    }
    gram.cholesky().map(|ch| ch.solve(&rhs))
}

/// 5-fold CV over a logarithmic penalty grid, picking the lowest held-out
/// mean squared error. Fold assignment is index mod 5 (deterministic).
fn cross_validate_lambda(x: &DMatrix<f64>, y: &DVector<f64>, penalized: &[bool]) -> f64 {
    let n = x.nrows();
    let mean_y = y.mean();
    let lam_max = (0..x.ncols())
        .filter(|&j| penalized[j])
        .map(|j| {
            let xj = x.column(j);
            (xj.dot(y) - mean_y * xj.sum()).abs() / n as f64
        })
        .fold(0.0, f64::max)
        .max(1e-12);
    let grid: Vec<f64> = (0..CV_GRID)
        .map(|i| lam_max * 10f64.powf(-CV_DECADES * i as f64 / (CV_GRID - 1) as f64))
        .collect();

    let mut best = (f64::INFINITY, grid[grid.len() - 1]);
    for &lam in &grid {
        let mut err = 0.0;
        let mut count = 0usize;
        for fold in 0..CV_FOLDS {
            let train_idx: Vec<usize> = (0..n).filter(|i| i % CV_FOLDS != fold).collect();
            let test_idx: Vec<usize> = (0..n).filter(|i| i % CV_FOLDS == fold).collect();
            if train_idx.is_empty() || test_idx.is_empty() {
                continue;
            }
            let xt = DMatrix::from_fn(train_idx.len(), x.ncols(), |i, j| x[(train_idx[i], j)]);
            let yt = DVector::from_fn(train_idx.len(), |i, _| y[train_idx[i]]);
            let w = lasso(&xt, &yt, lam, penalized);
            for &i in &test_idx {
                let pred: f64 = (0..x.ncols()).map(|j| x[(i, j)] * w[j]).sum();
                err += (pred - y[i]).powi(2);
                count += 1;
            }
        }
        let mse = err / count.max(1) as f64;
        if mse < best.0 {
            best = (mse, lam);
        }
    }
    best.1
}

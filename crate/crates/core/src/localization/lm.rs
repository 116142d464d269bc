//! Levenberg-Marquardt over the position with the orientation projected out.

use alloc::boxed::Box;
use alloc::vec::Vec;
use nalgebra::{DVector, Dyn, Matrix3, Matrix4, OMatrix, Vector4, U3};

use super::secular::orientation_from_design;
use super::{beta, design_matrix, localize_dual3, LocalizationError, PanelMeasurements, PoseEstimate, RssEntry, RssVector};
use crate::geometry::{Aabb, Vec3};
use crate::optical::VcselAnchor;

/// Which gradient of `f_i(r) = beta_i(d_i) (n . u_i)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianForm {
    /// `beta ~ 1/d^2`, valid for ranges much longer than the Rayleigh range.
    FarField,
    /// Exact derivative of the Gaussian-beam `beta`.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    Point(Vec3),
    /// Seed from the dual-mode closed form when the readings allow it,
    /// otherwise start from `fallback`. `region` picks the trilateration root.
    DualModeOr { fallback: Vec3, region: Aabb },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmConfig {
    /// Initial damping as a multiple of `trace(G^T G) / 3`.
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub max_iterations: usize,
    /// m
    pub step_tolerance: f64,
    /// W
    pub residual_tolerance: f64,
    pub initial_guess: InitialGuess,
    pub jacobian: JacobianForm,
    /// Include the response of the projected orientation to position in the
    /// Gauss-Newton model. The gradient is the same either way; without this
    /// term the model overestimates the attainable decrease whenever a
    /// lateral shift can be traded for a tilt, as with small coplanar anchor
    /// sets, and the iteration crawls.
    pub projected: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 3.0,
            max_iterations: 100,
            step_tolerance: 1e-10,
            residual_tolerance: 1e-18,
            initial_guess: InitialGuess::Point(Vec3::new(5.0, 5.0, 1.5)),
            jacobian: JacobianForm::General,
            projected: true,
        }
    }
}

/// `f_i(r, n) - p_i` for the usable readings, with `n` held fixed.
pub fn residuals_fixed_normal(
    r: &Vec3,
    n: &Vec3,
    anchors: &[VcselAnchor],
    measurements: &RssVector,
    pd_area: f64,
) -> DVector<f64> {
    let entries: Vec<RssEntry> = measurements.usable_all().copied().collect();
    let (v, p) = design_matrix(r, anchors, &entries, pd_area);
    v * n - p
}

/// Jacobian of [`residuals_fixed_normal`] with respect to `r`.
pub fn residual_jacobian(
    r: &Vec3,
    n: &Vec3,
    anchors: &[VcselAnchor],
    measurements: &RssVector,
    pd_area: f64,
    form: JacobianForm,
) -> OMatrix<f64, Dyn, U3> {
    let entries: Vec<RssEntry> = measurements.usable_all().copied().collect();
    jacobian_rows(r, n, anchors, &entries, pd_area, form)
}

/// Derivative of the row `beta(d) u^T` with respect to `r`; it is the
/// symmetric matrix `k u u^T - (beta/d)(I - u u^T)`, so `D n` is the
/// gradient of `f = beta (n . u)`.
fn row_derivative(a: &VcselAnchor, mode: usize, r: &Vec3, pd_area: f64, form: JacobianForm) -> Matrix3<f64> {
    let mode = &a.modes[mode];
    let s = a.position - r;
    let d = s.norm();
    let u = s / d;
    let b = beta(mode, pd_area, d);
    let radial = match form {
        JacobianForm::FarField => 2.0 * b / d,
        JacobianForm::General => {
            let z = mode.rayleigh_range();
            2.0 * b * d / (z * z + d * d)
        }
    };
    let uu = u * u.transpose();
    uu * radial - (Matrix3::identity() - uu) * (b / d)
}

fn jacobian_rows(
    r: &Vec3,
    n: &Vec3,
    anchors: &[VcselAnchor],
    entries: &[RssEntry],
    pd_area: f64,
    form: JacobianForm,
) -> OMatrix<f64, Dyn, U3> {
    let mut g = OMatrix::<f64, Dyn, U3>::zeros(entries.len());
    for (row, e) in entries.iter().enumerate() {
        let grad = row_derivative(&anchors[e.anchor], e.mode, r, pd_area, form) * n;
        for c in 0..3 {
            g[(row, c)] = grad[c];
        }
    }
    g
}

/// Jacobian of `e(r) = V(r) n(r) - p` where `n(r)` is the constrained
/// minimiser. `dn/dr_c` solves the differentiated stationarity conditions
/// `(V^T V + l I) dn + dl n = -dV^T e - V^T dV n` with `n . dn = 0`.
fn projected_jacobian(
    cur: &Eval,
    anchors: &[VcselAnchor],
    entries: &[RssEntry],
    pd_area: f64,
    form: JacobianForm,
) -> OMatrix<f64, Dyn, U3> {
    let rows: Vec<Matrix3<f64>> = entries
        .iter()
        .map(|e| row_derivative(&anchors[e.anchor], e.mode, &cur.r, pd_area, form))
        .collect();
    let mut g = OMatrix::<f64, Dyn, U3>::zeros(entries.len());
    for (i, d) in rows.iter().enumerate() {
        let grad = d * cur.n;
        for c in 0..3 {
            g[(i, c)] = grad[c];
        }
    }
    let a = cur.v.transpose() * &cur.v + Matrix3::identity() * cur.lambda;
    let mut k = Matrix4::zeros();
    k.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
    for j in 0..3 {
        k[(j, 3)] = cur.n[j];
        k[(3, j)] = cur.n[j];
    }
    let Some(lu) = Some(k.lu()).filter(|lu| lu.is_invertible()) else {
        return g;
    };
    let mut out = g.clone();
    for c in 0..3 {
        // column c of dV: row i is column c of the row derivative
        let mut dvt_e = Vec3::zeros();
        for (i, d) in rows.iter().enumerate() {
            dvt_e += d.column(c) * cur.e[i];
        }
        let vt_dvn: Vec3 = cur.v.transpose() * g.column(c);
        let rhs3 = -dvt_e - vt_dvn;
        let Some(sol) = lu.solve(&Vector4::new(rhs3[0], rhs3[1], rhs3[2], 0.0)) else {
            continue;
        };
        let dn = Vec3::new(sol[0], sol[1], sol[2]);
        let col = g.column(c) + &cur.v * dn;
        out.set_column(c, &col);
    }
    out
}

struct Eval {
    r: Vec3,
    n: Vec3,
    lambda: f64,
    v: OMatrix<f64, Dyn, U3>,
    e: DVector<f64>,
    cost: f64,
}

fn evaluate(
    r: Vec3,
    anchors: &[VcselAnchor],
    entries: &[RssEntry],
    pd_area: f64,
) -> Result<Eval, LocalizationError> {
    let (v, p) = design_matrix(&r, anchors, entries, pd_area);
    let (n, lambda) = orientation_from_design(&v, &p)?;
    let e = &v * n - p;
    let cost = 0.5 * e.norm_squared();
    Ok(Eval { r, n, lambda, v, e, cost })
}

/// Fits position and orientation to the usable readings.
///
/// On hitting the iteration cap the best point so far comes back inside
/// [`LocalizationError::MaxIterations`] with `converged = false`.
pub fn localize_lm(
    anchors: &[VcselAnchor],
    measurements: &RssVector,
    pd_area: f64,
    cfg: &LmConfig,
) -> Result<PoseEstimate, LocalizationError> {
    localize_lm_traced(anchors, measurements, pd_area, cfg, &mut Vec::new())
}

/// [`localize_lm`] that also records the cost `||e||^2 / 2` at the start
/// and after every accepted step.
pub fn localize_lm_traced(
    anchors: &[VcselAnchor],
    measurements: &RssVector,
    pd_area: f64,
    cfg: &LmConfig,
    trace: &mut Vec<f64>,
) -> Result<PoseEstimate, LocalizationError> {
    let entries: Vec<RssEntry> = measurements.usable_all().copied().collect();
    if entries.len() < 5 {
        return Err(LocalizationError::TooFewMeasurements { needed: 5, have: entries.len() });
    }
    let start = match cfg.initial_guess {
        InitialGuess::Point(p) => p,
        InitialGuess::DualModeOr { fallback, region } => {
            let m = PanelMeasurements { panel: 0, anchors: anchors.to_vec(), rss: measurements.clone() };
            localize_dual3(&m, pd_area, &region).map(|e| e.position).unwrap_or(fallback)
        }
    };
    let mut cur = evaluate(start, anchors, &entries, pd_area)?;
    trace.push(cur.cost);
    let mut damping = None;
    let mut iterations = 0;
    let mut converged = cur.e.norm() < cfg.residual_tolerance;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let g = if cfg.projected {
            projected_jacobian(&cur, anchors, &entries, pd_area, cfg.jacobian)
        } else {
            jacobian_rows(&cur.r, &cur.n, anchors, &entries, pd_area, cfg.jacobian)
        };
        let gtg: Matrix3<f64> = g.transpose() * &g;
        let gte: Vec3 = g.transpose() * &cur.e;
        let lambda = *damping.get_or_insert(cfg.initial_damping * gtg.trace() / 3.0);
        let lhs = gtg + Matrix3::identity() * lambda;
        let Some(step) = lhs.cholesky().map(|c| c.solve(&(-gte))) else {
            damping = Some(lambda * cfg.damping_up);
            continue;
        };
        if step.norm() < cfg.step_tolerance {
            converged = true;
            break;
        }
        let predicted = -(gte.dot(&step)) - 0.5 * step.dot(&(gtg * step));
        let accepted = match evaluate(cur.r + step, anchors, &entries, pd_area) {
            Ok(next) => {
                let actual = cur.cost - next.cost;
                if predicted > 0.0 && actual >= 0.1 * predicted {
                    cur = next;
                    trace.push(cur.cost);
                    true
                } else {
                    false
                }
            }
            Err(_) => false,
        };
        if accepted {
            damping = Some(lambda / cfg.damping_down);
            if cur.e.norm() < cfg.residual_tolerance {
                converged = true;
            }
        } else {
            damping = Some(lambda * cfg.damping_up);
        }
    }

    let est = PoseEstimate {
        position: cur.r,
        orientation: cur.n,
        residual_norm: cur.e.norm(),
        iterations,
        converged,
        panel: None,
    };
    if converged {
        Ok(est)
    } else {
        Err(LocalizationError::MaxIterations(Box::new(est)))
    }
}

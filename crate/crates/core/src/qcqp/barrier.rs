use serde::{Deserialize, Serialize};

use super::spec::{ConeConstraint, QcqpSpec};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_ridged, RMatrix, RVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Target for the barrier duality-gap bound `weight / t`, relative to
    /// `max(1, |objective|)`.
    pub gap_tol: f64,
    /// Barrier parameter growth per outer iteration.
    pub mu: f64,
    /// Centering stops when the squared Newton decrement halves below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, mu: 10.0, newton_tol: 1e-13, max_newton: 200, max_outer: 80 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Gap target not reached but the iterate is strictly feasible.
    Inaccurate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqpSolution {
    #[serde(with = "crate::json::rvector")]
    pub x: RVector,
    pub objective: f64,
    pub status: SolveStatus,
    /// Barrier bound on the duality gap at termination.
    pub duality_gap: f64,
    /// Stationarity residual `‖∇f₀ + Σ λᵢ∇fᵢ‖∞` with barrier multipliers.
    pub kkt_residual: f64,
    /// Largest constraint value at `x` (negative: strictly feasible).
    pub max_violation: f64,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
}

/// Solve `spec`, optionally from a caller-provided start point. A start that
/// is not strictly feasible is replaced by a phase-1 point.
pub fn solve(spec: &QcqpSpec, start: Option<&RVector>, opts: &SolveOptions) -> Result<QcqpSolution> {
    spec.validate()?;
    let n = spec.dim;
    let x0 = match start {
        Some(x) if x.len() != n => return Err(Error::Dimension(format!("start has length {}, expected {n}", x.len()))),
        Some(x) => x.clone(),
        None => RVector::zeros(n),
    };
    let x0 = if strictly_feasible(spec, &x0) { x0 } else { phase_one(spec, &x0, opts)? };

    let weight = spec.barrier_weight();
    if weight == 0.0 {
        return unconstrained(spec);
    }
    let mut x = x0;
    let mut t = initial_t(spec, &x, weight);
    let mut newton_total = 0;
    let mut outer = 0;
    let mut status = SolveStatus::Inaccurate;
    while outer < opts.max_outer {
        outer += 1;
        let (xc, iters) = match center(spec, &x, t, opts) {
            Ok(r) => r,
            // Keep the last centred point once the Hessian is too ill-conditioned to go on.
            Err(Error::Numerical(_)) if outer > 1 => {
                t /= opts.mu;
                break;
            }
            Err(e) => return Err(e),
        };
        x = xc;
        newton_total += iters;
        if weight / t < opts.gap_tol * spec.objective(&x).abs().max(1.0) {
            status = SolveStatus::Optimal;
            break;
        }
        t *= opts.mu;
    }
    let (g_obj, g_bar) = gradients(spec, &x);
    let kkt_residual = (&g_obj + &g_bar / t).amax();
    Ok(QcqpSolution {
        objective: spec.objective(&x),
        max_violation: spec.max_violation(&x),
        x,
        status,
        duality_gap: weight / t,
        kkt_residual,
        outer_iterations: outer,
        newton_iterations: newton_total,
    })
}

fn unconstrained(spec: &QcqpSpec) -> Result<QcqpSolution> {
    // minimise xᵀQ₀x + q₀ᵀx: 2Q₀x = −q₀
    let x = if spec.q0_lin.iter().all(|v| *v == 0.0) {
        RVector::zeros(spec.dim)
    } else {
        let chol = cholesky_ridged(&(&spec.q0 * 2.0)).ok_or_else(|| Error::Numerical("unbounded objective".into()))?;
        chol.solve(&(-&spec.q0_lin))
    };
    Ok(QcqpSolution {
        objective: spec.objective(&x),
        max_violation: f64::NEG_INFINITY,
        x,
        status: SolveStatus::Optimal,
        duality_gap: 0.0,
        kkt_residual: 0.0,
        outer_iterations: 0,
        newton_iterations: 0,
    })
}

fn cone_parts(c: &ConeConstraint, x: &RVector) -> (RVector, f64) {
    (&c.c_mat * x + &c.c, c.d.dot(x) + c.e)
}

fn strictly_feasible(spec: &QcqpSpec, x: &RVector) -> bool {
    spec.linear.iter().all(|c| c.value(x) < 0.0)
        && spec.quadratic.iter().all(|c| c.value(x) < 0.0)
        && spec.cones.iter().all(|c| {
            let (u, s) = cone_parts(c, x);
            s > 0.0 && s * s - u.norm_squared() > 0.0
        })
}

/// Barrier value `−Σ log(−fᵢ) − Σ log(s² − ‖u‖²)`, or `None` outside the domain.
fn barrier_value(spec: &QcqpSpec, x: &RVector) -> Option<f64> {
    let mut phi = 0.0;
    for c in &spec.linear {
        let v = c.value(x);
        if !(v < 0.0) {
            return None;
        }
        phi -= (-v).ln();
    }
    for c in &spec.quadratic {
        let v = c.value(x);
        if !(v < 0.0) {
            return None;
        }
        phi -= (-v).ln();
    }
    for c in &spec.cones {
        let (u, s) = cone_parts(c, x);
        let g = s * s - u.norm_squared();
        if !(s > 0.0 && g > 0.0) {
            return None;
        }
        phi -= g.ln();
    }
    Some(phi)
}

/// Objective gradient and barrier gradient at `x`.
fn gradients(spec: &QcqpSpec, x: &RVector) -> (RVector, RVector) {
    let g_obj = &spec.q0 * x * 2.0 + &spec.q0_lin;
    let mut g_bar = RVector::zeros(spec.dim);
    for c in &spec.linear {
        g_bar.axpy(-1.0 / c.value(x), &c.a, 1.0);
    }
    for c in &spec.quadratic {
        let grad = &c.q_mat * x * 2.0 + &c.q;
        g_bar.axpy(-1.0 / c.value(x), &grad, 1.0);
    }
    for c in &spec.cones {
        let (u, s) = cone_parts(c, x);
        let g = s * s - u.norm_squared();
        let dg = &c.d * (2.0 * s) - c.c_mat.transpose() * &u * 2.0;
        g_bar.axpy(-1.0 / g, &dg, 1.0);
    }
    (g_obj, g_bar)
}

fn hessian(spec: &QcqpSpec, x: &RVector, t: f64) -> RMatrix {
    let n = spec.dim;
    let mut h = &spec.q0 * (2.0 * t);
    for c in &spec.linear {
        let v = c.value(x);
        h.ger(1.0 / (v * v), &c.a, &c.a, 1.0);
    }
    for c in &spec.quadratic {
        let v = c.value(x);
        let grad = &c.q_mat * x * 2.0 + &c.q;
        h.ger(1.0 / (v * v), &grad, &grad, 1.0);
        h += &c.q_mat * (-2.0 / v);
    }
    for c in &spec.cones {
        let (u, s) = cone_parts(c, x);
        let g = s * s - u.norm_squared();
        let dg = &c.d * (2.0 * s) - c.c_mat.transpose() * &u * 2.0;
        h.ger(1.0 / (g * g), &dg, &dg, 1.0);
        // −∇²g/g with ∇²g = 2ddᵀ − 2CᵀC
        h.ger(-2.0 / g, &c.d, &c.d, 1.0);
        h += c.c_mat.transpose() * &c.c_mat * (2.0 / g);
    }
    debug_assert_eq!(h.nrows(), n);
    h
}

fn merit(spec: &QcqpSpec, x: &RVector, t: f64) -> Option<f64> {
    barrier_value(spec, x).map(|phi| t * spec.objective(x) + phi)
}

fn initial_t(spec: &QcqpSpec, x: &RVector, weight: f64) -> f64 {
    // least-squares fit of t·∇f₀ + ∇φ ≈ 0, clamped to a sane range
    let (g_obj, g_bar) = gradients(spec, x);
    let denom = g_obj.norm_squared();
    let fallback = weight / spec.objective(x).abs().max(1.0);
    let t = if denom > 0.0 { -g_obj.dot(&g_bar) / denom } else { fallback };
    if t.is_finite() && t > 0.0 {
        t.clamp(fallback * 1e-3, fallback * 1e3)
    } else {
        fallback
    }
}

/// Damped Newton minimisation of `t·f₀ + φ` starting from a strictly feasible point.
fn center(spec: &QcqpSpec, x0: &RVector, t: f64, opts: &SolveOptions) -> Result<(RVector, usize)> {
    let mut x = x0.clone();
    let mut fx = merit(spec, &x, t).ok_or_else(|| Error::Numerical("centering started outside the domain".into()))?;
    for iter in 0..opts.max_newton {
        let (g_obj, g_bar) = gradients(spec, &x);
        let grad = g_obj * t + g_bar;
        let h = hessian(spec, &x, t);
        let chol = cholesky_ridged(&h).ok_or_else(|| Error::Numerical("barrier Hessian factorisation failed".into()))?;
        let mut dx = -chol.solve(&grad);
        dx -= chol.solve(&(&h * &dx + &grad));
        let decrement2 = -grad.dot(&dx);
        if !decrement2.is_finite() {
            return Err(Error::Numerical("non-finite Newton decrement".into()));
        }
        if decrement2 / 2.0 <= opts.newton_tol {
            return Ok((x, iter));
        }
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-14 {
            let trial = &x + &dx * step;
            if let Some(ft) = merit(spec, &trial, t) {
                let exact = ft <= fx - 0.25 * step * decrement2;
                // Derivative form of the same test once merit differences are rounding noise.
                let approx = ft <= fx + 1e-10 * fx.abs() && {
                    let (go, gb) = gradients(spec, &trial);
                    (go * t + gb).dot(&dx) <= 0.5 * decrement2
                };
                if exact || approx {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // no representable decrease left; treat a tiny decrement as centred
            if decrement2 <= 1e-8 * (1.0 + fx.abs()) {
                return Ok((x, iter));
            }
            return Err(Error::Numerical(format!("barrier Newton step failed to decrease (decrement² {decrement2:.3e})")));
        }
    }
    Ok((x, opts.max_newton))
}

/// Find a strictly feasible point by minimising a shared slack `s` with
/// `fᵢ(x) ≤ s`, `s ≥ −1` and a large trust ball on `x`.
fn phase_one(spec: &QcqpSpec, x0: &RVector, opts: &SolveOptions) -> Result<RVector> {
    let n = spec.dim;
    let np = n + 1;
    let pad_vec = |v: &RVector, last: f64| {
        let mut out = RVector::zeros(np);
        out.rows_mut(0, n).copy_from(v);
        out[n] = last;
        out
    };
    let pad_mat = |m: &RMatrix| {
        let mut out = RMatrix::zeros(np, np);
        out.view_mut((0, 0), (n, n)).copy_from(m);
        out
    };
    let mut aux = QcqpSpec::new(RMatrix::zeros(np, np), pad_vec(&RVector::zeros(n), 1.0));
    for c in &spec.linear {
        aux.add_linear(pad_vec(&c.a, -1.0), c.b);
    }
    for c in &spec.quadratic {
        aux.add_quadratic(pad_mat(&c.q_mat), pad_vec(&c.q, -1.0), c.r);
    }
    for c in &spec.cones {
        let mut cm = RMatrix::zeros(c.c_mat.nrows(), np);
        cm.view_mut((0, 0), (c.c_mat.nrows(), n)).copy_from(&c.c_mat);
        aux.add_cone(cm, c.c.clone(), pad_vec(&c.d, 1.0), c.e);
    }
    aux.add_linear(pad_vec(&RVector::zeros(n), -1.0), 1.0);
    let radius2 = 1e8 * (1.0 + x0.norm_squared());
    aux.add_quadratic(pad_mat(&RMatrix::identity(n, n)), RVector::zeros(np), radius2);

    let violation = spec.max_violation(x0).max(0.0);
    let start = pad_vec(x0, violation + 1.0);
    debug_assert!(strictly_feasible(&aux, &start));

    let weight = aux.barrier_weight();
    let mut z = start;
    let mut t = initial_t(&aux, &z, weight);
    for _ in 0..opts.max_outer {
        let (zc, _) = center(&aux, &z, t, opts)?;
        z = zc;
        let x = z.rows(0, n).into_owned();
        if z[n] < 0.0 && strictly_feasible(spec, &x) {
            return Ok(x);
        }
        if weight / t < opts.gap_tol {
            break;
        }
        t *= opts.mu;
    }
    Err(Error::Infeasible(format!("phase 1 could not find a strictly feasible point (best slack {:.3e})", z[n])))
}

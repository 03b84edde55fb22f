//! Limited-memory BFGS with a weak-Wolfe bisection line search.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::{KlapError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub grad_tol: f64,
    /// Stop when `|f_k − f_{k−1}| ≤ δ (|f_k| + δ)`.
    pub obj_rel_tol: f64,
    pub max_iterations: usize,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            obj_rel_tol: 1e-6,
            max_iterations: 50_000,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    LineSearchFailure,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        matches!(
            self,
            StopReason::GradientTolerance | StopReason::ObjectiveTolerance
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::GradientTolerance => "gradient-tolerance",
            StopReason::ObjectiveTolerance => "objective-tolerance",
            StopReason::MaxIterations => "max-iterations",
            StopReason::LineSearchFailure => "line-search-failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: DVector<f64>,
    pub f: f64,
    pub grad: DVector<f64>,
    pub iterations: usize,
    /// Number of objective/gradient evaluations, including the one at `x0`.
    pub evaluations: usize,
    pub stop: StopReason,
    /// One entry per accepted iterate, starting with `x0`.
    pub trace: Vec<TraceEntry>,
}

impl LbfgsOutcome {
    pub fn converged(&self) -> bool {
        self.stop.is_converged()
    }
}

const ARMIJO_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_LINE_SEARCH_STEPS: usize = 60;

/// Minimizes `f`, where `eval(x)` returns `(f(x), ∇f(x))`.
///
/// Every accepted step satisfies the Armijo condition, so the objective is
/// non-increasing along the returned trace. Evaluation errors and non-finite
/// values during the line search are treated as `+∞`; an error at `x0` is returned.
pub fn minimize<F>(mut eval: F, x0: DVector<f64>, opts: &LbfgsOptions) -> Result<LbfgsOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    if opts.memory == 0 || opts.max_iterations == 0 {
        return Err(KlapError::InvalidConfig(
            "L-BFGS memory and iteration cap must be positive".into(),
        ));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(KlapError::NonFinite("initial point".into()));
    }
    let (mut f, mut g) = eval(&x0)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(KlapError::NonFinite("objective at the initial point".into()));
    }
    let mut x = x0;
    let mut evaluations = 1;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: f,
        grad_norm: g.norm(),
    }];
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();

    let finish = |x, f, grad, iterations, evaluations, stop, trace| {
        Ok(LbfgsOutcome {
            x,
            f,
            grad,
            iterations,
            evaluations,
            stop,
            trace,
        })
    };

    if g.norm() <= opts.grad_tol {
        return finish(x, f, g, 0, evaluations, StopReason::GradientTolerance, trace);
    }

    for k in 1..=opts.max_iterations {
        let mut d = -two_loop(&g, &history);
        let mut gd = g.dot(&d);
        if !(gd < 0.0) {
            // curvature pairs produced an ascent direction; fall back to steepest descent
            history.clear();
            d = -&g;
            gd = g.dot(&d);
        }
        let initial_step = if history.is_empty() {
            (1.0 / g.norm()).min(1.0)
        } else {
            1.0
        };

        let mut step = initial_step;
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut accepted: Option<(DVector<f64>, f64, DVector<f64>)> = None;
        let mut armijo_point: Option<(DVector<f64>, f64, DVector<f64>)> = None;
        for _ in 0..MAX_LINE_SEARCH_STEPS {
            let trial = &x + &d * step;
            evaluations += 1;
            let value = eval(&trial)
                .ok()
                .filter(|(ft, gt)| ft.is_finite() && gt.iter().all(|v| v.is_finite()));
            match value {
                Some((ft, gt)) if ft <= f + ARMIJO_C1 * step * gd => {
                    if gt.dot(&d) >= WOLFE_C2 * gd {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                    if armijo_point.as_ref().is_none_or(|(_, fa, _)| ft < *fa) {
                        armijo_point = Some((trial, ft, gt));
                    }
                    lo = step;
                    step = if hi.is_finite() {
                        0.5 * (lo + hi)
                    } else {
                        2.0 * step
                    };
                }
                _ => {
                    hi = step;
                    step = 0.5 * (lo + hi);
                }
            }
        }
        let Some((x_new, f_new, g_new)) = accepted.or(armijo_point) else {
            return finish(x, f, g, k - 1, evaluations, StopReason::LineSearchFailure, trace);
        };

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > f64::EPSILON * s.norm() * y.norm() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let f_prev = f;
        x = x_new;
        f = f_new;
        g = g_new;
        let grad_norm = g.norm();
        trace.push(TraceEntry {
            iteration: k,
            objective: f,
            grad_norm,
        });

        if grad_norm <= opts.grad_tol {
            return finish(x, f, g, k, evaluations, StopReason::GradientTolerance, trace);
        }
        if (f - f_prev).abs() <= opts.obj_rel_tol * (f.abs() + opts.obj_rel_tol) {
            return finish(x, f, g, k, evaluations, StopReason::ObjectiveTolerance, trace);
        }
    }
    let k = opts.max_iterations;
    finish(x, f, g, k, evaluations, StopReason::MaxIterations, trace)
}

/// `H_k g` by the two-loop recursion with initial scaling `sᵀy / yᵀy`.
fn two_loop(g: &DVector<f64>, history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q -= y * a;
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q += s * (a - b);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = DVector::from_vec(vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ]);
        Ok((f, g))
    }

    #[test]
    fn rosenbrock_converges() {
        let opts = LbfgsOptions {
            obj_rel_tol: 1e-14,
            ..Default::default()
        };
        let out = minimize(rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &opts).unwrap();
        assert!(out.converged());
        assert!(
            (out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5,
            "{}",
            out.x
        );
        for w in out.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let out = minimize(rosenbrock, DVector::from_vec(vec![1.0, 1.0]), &Default::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.stop, StopReason::GradientTolerance);
    }

    #[test]
    fn quadratic_in_few_steps() {
        let diag = DVector::from_vec(vec![1.0, 3.0, 10.0]);
        let eval = |x: &DVector<f64>| {
            let g = x.component_mul(&diag);
            Ok((0.5 * x.dot(&g), g))
        };
        let opts = LbfgsOptions {
            grad_tol: 1e-10,
            obj_rel_tol: 0.0,
            ..Default::default()
        };
        let out = minimize(eval, DVector::from_vec(vec![1.0, -2.0, 0.5]), &opts).unwrap();
        assert_eq!(out.stop, StopReason::GradientTolerance);
        assert!(out.iterations < 30);
    }

    #[test]
    fn rejects_bad_input() {
        let nan = DVector::from_vec(vec![f64::NAN, 0.0]);
        assert!(minimize(rosenbrock, nan, &Default::default()).is_err());
        let opts = LbfgsOptions {
            memory: 0,
            ..Default::default()
        };
        assert!(minimize(rosenbrock, DVector::zeros(2), &opts).is_err());
    }
}

//! Limited-memory BFGS with a strong-Wolfe line search (bracketing followed
//! by cubic-interpolation zoom).

/// Objective callback: writes the gradient into the second argument and
/// returns the function value.
pub trait Objective {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Objective for F {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once the infinity norm of the gradient falls below this.
    pub gtol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 200,
            gtol: 1e-5,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// No step satisfying the Wolfe conditions was found; the best iterate
    /// seen so far is returned.
    LineSearchFailed,
    /// The objective stopped changing at machine precision.
    NoProgress,
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Probe {
    alpha: f64,
    f: f64,
    d: f64,
}

struct LineSearch<'a, O: Objective> {
    obj: &'a mut O,
    x0: &'a [f64],
    dir: &'a [f64],
    x: Vec<f64>,
    g: Vec<f64>,
    evals: usize,
}

impl<O: Objective> LineSearch<'_, O> {
    fn probe(&mut self, alpha: f64) -> Probe {
        for ((xi, x0), d) in self.x.iter_mut().zip(self.x0).zip(self.dir) {
            *xi = x0 + alpha * d;
        }
        let f = self.obj.eval(&self.x, &mut self.g);
        self.evals += 1;
        Probe {
            alpha,
            f,
            d: dot(&self.g, self.dir),
        }
    }
}

/// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db),
/// falling back to bisection when it is undefined or outside the interval.
fn cubic_min(a: &Probe, b: &Probe) -> f64 {
    let d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.d * b.d;
    let mid = 0.5 * (a.alpha + b.alpha);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
    let (lo, hi) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

/// Strong-Wolfe line search. Returns the accepted probe with `x`/`g` left at
/// that point, or `None` on failure.
fn strong_wolfe<O: Objective>(ls: &mut LineSearch<'_, O>, f0: f64, d0: f64, alpha0: f64, opt: &LbfgsOptions) -> Option<Probe> {
    let mut prev = Probe { alpha: 0.0, f: f0, d: d0 };
    let mut alpha = alpha0;
    let mut budget = opt.max_line_search;
    for i in 0..opt.max_line_search {
        budget -= 1;
        let cur = ls.probe(alpha);
        if !cur.f.is_finite() {
            // Step went somewhere undefined: shrink toward the last good point.
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if cur.f > f0 + opt.c1 * alpha * d0 || (i > 0 && cur.f >= prev.f) {
            return zoom(ls, f0, d0, prev, cur, budget, opt);
        }
        if cur.d.abs() <= -opt.c2 * d0 {
            return Some(cur);
        }
        if cur.d >= 0.0 {
            return zoom(ls, f0, d0, cur, prev, budget, opt);
        }
        prev = cur;
        alpha *= 2.0;
    }
    None
}

fn zoom<O: Objective>(
    ls: &mut LineSearch<'_, O>,
    f0: f64,
    d0: f64,
    mut lo: Probe,
    mut hi: Probe,
    budget: usize,
    opt: &LbfgsOptions,
) -> Option<Probe> {
    for _ in 0..budget {
        let alpha = cubic_min(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
        let cur = ls.probe(alpha);
        if !cur.f.is_finite() || cur.f > f0 + opt.c1 * alpha * d0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.d.abs() <= -opt.c2 * d0 {
                return Some(cur);
            }
            if cur.d * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Accept the best sufficient-decrease point if the curvature condition
    // could not be met within the budget.
    if lo.alpha > 0.0 && lo.f < f0 {
        ls.probe(lo.alpha);
        return Some(lo);
    }
    None
}

pub fn minimize<O: Objective>(obj: &mut O, x0: &[f64], opt: &LbfgsOptions) -> LbfgsResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, &mut g);
    let mut evals = 1;
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(opt.memory);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(opt.memory);
    let mut rho: Vec<f64> = Vec::with_capacity(opt.memory);
    let mut dir = vec![0.0; n];
    let mut alpha_buf = vec![0.0; opt.memory];

    let mut iterations = 0;
    let termination = loop {
        if inf_norm(&g) < opt.gtol {
            break Termination::GradientTolerance;
        }
        if iterations >= opt.max_iters {
            break Termination::MaxIterations;
        }

        // Two-loop recursion: dir = -H g.
        dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
        let m = s_hist.len();
        for k in (0..m).rev() {
            let a = rho[k] * dot(&s_hist[k], &dir);
            alpha_buf[k] = a;
            dir.iter_mut().zip(&y_hist[k]).for_each(|(d, yk)| *d -= a * yk);
        }
        if m > 0 {
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            dir.iter_mut().for_each(|d| *d *= gamma);
        }
        for k in 0..m {
            let b = rho[k] * dot(&y_hist[k], &dir);
            dir.iter_mut().zip(&s_hist[k]).for_each(|(d, sk)| *d += (alpha_buf[k] - b) * sk);
        }
        let mut d0 = dot(&g, &dir);
        if !(d0 < 0.0) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
            d0 = dot(&g, &dir);
        }
        let alpha0 = if s_hist.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };

        let mut ls = LineSearch {
            obj: &mut *obj,
            x0: &x,
            dir: &dir,
            x: vec![0.0; n],
            g: vec![0.0; n],
            evals: 0,
        };
        let accepted = strong_wolfe(&mut ls, f, d0, alpha0, opt);
        evals += ls.evals;
        let Some(step) = accepted else {
            break Termination::LineSearchFailed;
        };
        let (x_new, g_new) = (ls.x, ls.g);
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        let no_progress = step.f >= f && (f - step.f).abs() <= f64::EPSILON * f.abs();
        x = x_new;
        g = g_new;
        f = step.f;
        if sy > 1e-12 * dot(&yv, &yv).max(f64::MIN_POSITIVE) {
            if s_hist.len() == opt.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            rho.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(yv);
        }
        if no_progress {
            break Termination::NoProgress;
        }
    };

    LbfgsResult {
        grad_norm: inf_norm(&g),
        x,
        f,
        iterations,
        evaluations: evals,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize(&mut f, &[-1.2, 1.0], &LbfgsOptions { gtol: 1e-8, ..Default::default() });
        assert_eq!(r.termination, Termination::GradientTolerance);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn quadratic_in_few_iterations() {
        let diag = [1.0, 10.0, 100.0, 1000.0];
        let mut f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = diag[i] * (x[i] - 1.0);
                v += 0.5 * diag[i] * (x[i] - 1.0).powi(2);
            }
            v
        };
        let r = minimize(&mut f, &[0.0; 4], &LbfgsOptions { gtol: 1e-10, ..Default::default() });
        assert!(r.iterations < 30);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn zero_budget_returns_start() {
        let mut f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        let r = minimize(&mut f, &[3.0], &LbfgsOptions { max_iters: 0, ..Default::default() });
        assert_eq!(r.x, vec![3.0]);
        assert_eq!(r.termination, Termination::MaxIterations);
    }
}

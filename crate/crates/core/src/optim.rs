//! Limited-memory BFGS with a strong-Wolfe line search.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub memory: usize,
    /// Stop when the infinity norm of the gradient drops below this.
    pub grad_tol: f64,
    /// Stop when the relative decrease over one iteration drops below this.
    pub f_tol: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { max_iters: 200, memory: 10, grad_tol: 1e-9, f_tol: 1e-12, c1: 1e-4, c2: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which returns the value and writes the gradient.
pub fn lbfgs<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evals = 1;
    let mut trace = vec![fx];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    if n == 0 || !fx.is_finite() {
        return LbfgsOutcome { x, f: fx, iterations: 0, evaluations: evals, trace, converged: n == 0 };
    }

    while iters < opts.max_iters {
        if inf_norm(&g) <= opts.grad_tol {
            converged = true;
            break;
        }
        // Two-loop recursion.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dot(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let s = 1.0 / inf_norm(&g).max(1e-300);
            d.iter_mut().for_each(|v| *v *= s.min(1.0));
        }
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        let mut dg = dot(&d, &g);
        if !(dg < 0.0) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            let s = 1.0 / inf_norm(&g).max(1e-300);
            d = g.iter().map(|v| -v * s.min(1.0)).collect();
            dg = dot(&d, &g);
        }

        let ls = wolfe_search(&mut f, &x, fx, &g, &d, dg, opts, &mut evals);
        let Some((step, f_new, g_new)) = ls else {
            break;
        };
        iters += 1;
        let s: Vec<f64> = d.iter().map(|v| v * step).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let x_new: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
        let decrease = fx - f_new;
        x = x_new;
        g = g_new;
        let f_old = fx;
        fx = f_new;
        trace.push(fx);
        if dot(&s, &yv) > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            s_hist.push(s);
            y_hist.push(yv);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        if decrease.abs() <= opts.f_tol * f_old.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    LbfgsOutcome { x, f: fx, iterations: iters, evaluations: evals, trace, converged }
}

#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    _g0: &[f64],
    d: &[f64],
    dg0: f64,
    opts: &LbfgsOptions,
    evals: &mut usize,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut trial = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut phi = |t: f64, g: &mut Vec<f64>, trial: &mut Vec<f64>, evals: &mut usize| -> (f64, f64) {
        for i in 0..n {
            trial[i] = x[i] + t * d[i];
        }
        *evals += 1;
        let v = f(trial, g);
        (v, dot(g, d))
    };

    let mut t_prev = 0.0;
    let mut f_prev = f0;
    let mut dg_prev = dg0;
    let mut t = 1.0;
    for i in 0..30 {
        let (ft, dgt) = phi(t, &mut g, &mut trial, evals);
        if !ft.is_finite() || ft > f0 + opts.c1 * t * dg0 || (i > 0 && ft >= f_prev) {
            return zoom(&mut phi, f0, dg0, (t_prev, f_prev, dg_prev), (t, ft, dgt), opts, &mut g, &mut trial, evals);
        }
        if dgt.abs() <= -opts.c2 * dg0 {
            return Some((t, ft, g));
        }
        if dgt >= 0.0 {
            return zoom(&mut phi, f0, dg0, (t, ft, dgt), (t_prev, f_prev, dg_prev), opts, &mut g, &mut trial, evals);
        }
        t_prev = t;
        f_prev = ft;
        dg_prev = dgt;
        t *= 2.0;
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<P>(
    phi: &mut P,
    f0: f64,
    dg0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    opts: &LbfgsOptions,
    g: &mut Vec<f64>,
    trial: &mut Vec<f64>,
    evals: &mut usize,
) -> Option<(f64, f64, Vec<f64>)>
where
    P: FnMut(f64, &mut Vec<f64>, &mut Vec<f64>, &mut usize) -> (f64, f64),
{
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for _ in 0..40 {
        // Safeguarded quadratic interpolation using the low end's slope.
        let (tl, fl, dl) = lo;
        let (th, fh, _) = hi;
        let width = th - tl;
        let mut t = if fh.is_finite() {
            let denom = 2.0 * (fh - fl - dl * width);
            if denom > 0.0 { tl - dl * width * width / denom } else { tl + 0.5 * width }
        } else {
            tl + 0.1 * width
        };
        let (a, b) = if tl < th { (tl, th) } else { (th, tl) };
        let margin = 0.1 * (b - a);
        if !(t > a + margin && t < b - margin) {
            t = 0.5 * (a + b);
        }
        let (ft, dgt) = phi(t, g, trial, evals);
        if !ft.is_finite() || ft > f0 + opts.c1 * t * dg0 || ft >= fl {
            hi = (t, ft, dgt);
        } else {
            if dgt.abs() <= -opts.c2 * dg0 {
                return Some((t, ft, g.clone()));
            }
            if ft < best.as_ref().map_or(f0, |b| b.1) {
                best = Some((t, ft, g.clone()));
            }
            if dgt * (th - tl) >= 0.0 {
                hi = lo;
            }
            lo = (t, ft, dgt);
        }
        if (hi.0 - lo.0).abs() < 1e-16 * lo.0.abs().max(1.0) {
            break;
        }
    }
    // Accept the best sufficient-decrease point even if curvature failed.
    best
}

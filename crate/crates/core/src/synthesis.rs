//! Rational multiplier synthesis: minimize the worst scattering gain
//! `max_k ||(I - m Y_k)(I + m Y_k)^-1||_inf` over a fixed-order `m(s)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{certify_system, Certificate};
use crate::components::{MultiplierFilter, OMEGA0_50HZ};
use crate::error::{Error, Result};
use crate::linalg::{complex_lu_solve, inv_2x2, mul_2x2, sigma_max_2x2, to_2x2};
use crate::lti::{hinf_norm, FrequencyGrid, HinfMethod, StateSpaceModel, HINF_TOL};
use crate::optim::{lbfgs, LbfgsOptions};

type M2 = [[Complex64; 2]; 2];

/// Objective value for ill-posed iterates.
pub const PENALTY: f64 = 1e6;
/// Acceptance level for the verified scattering gain.
pub const SUCCESS_LEVEL: f64 = 1.0 + 1e-6;
/// Dissipation added to the state matrix on top of the parametrized part.
const MU: f64 = 1e-6;

/// Unconstrained parameters of an order-`n` multiplier with `D_m = I`:
/// `A = w (S - G G^T) - 2 mu I`, `B = w B_hat`, `C`, where `S` is skew
/// symmetric, `G` lower triangular and `w` a fixed frequency scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTheta {
    pub order: usize,
    pub omega_scale: f64,
    pub values: Vec<f64>,
}

impl MultiplierTheta {
    pub fn len_for(order: usize) -> usize {
        order * order + 4 * order
    }

    pub fn zeros(order: usize, omega_scale: f64) -> Self {
        Self { order, omega_scale, values: vec![0.0; Self::len_for(order)] }
    }

    fn offsets(&self) -> (usize, usize, usize, usize) {
        let n = self.order;
        let s = 0;
        let g = s + n * (n - 1) / 2;
        let b = g + n * (n + 1) / 2;
        let c = b + 2 * n;
        (s, g, b, c)
    }

    fn g_factor(&self) -> DMatrix<f64> {
        let n = self.order;
        let (_, go, _, _) = self.offsets();
        let mut g = DMatrix::zeros(n, n);
        let mut k = go;
        for i in 0..n {
            for j in 0..=i {
                g[(i, j)] = self.values[k];
                k += 1;
            }
        }
        g
    }

    /// `(A, B, C)` of the multiplier realization.
    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.order;
        let w = self.omega_scale;
        let (so, _, bo, co) = self.offsets();
        let mut s = DMatrix::zeros(n, n);
        let mut k = so;
        for i in 0..n {
            for j in i + 1..n {
                s[(i, j)] = self.values[k];
                s[(j, i)] = -self.values[k];
                k += 1;
            }
        }
        let g = self.g_factor();
        let a = (s - &g * g.transpose()) * w - DMatrix::identity(n, n) * (2.0 * MU);
        let b = DMatrix::from_row_slice(n, 2, &self.values[bo..bo + 2 * n]) * w;
        let c = DMatrix::from_row_slice(2, n, &self.values[co..co + 2 * n]);
        (a, b, c)
    }

    pub fn to_model(&self) -> StateSpaceModel {
        let (a, b, c) = self.matrices();
        StateSpaceModel::new(a, b, c, DMatrix::identity(2, 2)).expect("consistent multiplier dimensions")
    }

    pub fn to_multiplier(&self) -> Result<MultiplierFilter> {
        MultiplierFilter::rational(self.to_model())
    }

    /// Chains gradients with respect to `(A, B, C)` back to the parameters.
    fn chain(&self, ga: &DMatrix<f64>, gb: &DMatrix<f64>, gc: &DMatrix<f64>, out: &mut [f64]) {
        let n = self.order;
        let w = self.omega_scale;
        let (so, go, bo, co) = self.offsets();
        let mut k = so;
        for i in 0..n {
            for j in i + 1..n {
                out[k] = w * (ga[(i, j)] - ga[(j, i)]);
                k += 1;
            }
        }
        let g = self.g_factor();
        let gg = (ga + ga.transpose()) * &g * (-w);
        let mut k = go;
        for i in 0..n {
            for j in 0..=i {
                out[k] = gg[(i, j)];
                k += 1;
            }
        }
        for i in 0..n {
            for j in 0..2 {
                out[bo + 2 * i + j] = w * gb[(i, j)];
                out[co + n * j + i] = gc[(j, i)];
            }
        }
    }

    /// Parameters reproducing a diagonal-pole multiplier
    /// `A = -diag(poles)`, `B`, `C`.
    pub fn from_diagonal(poles: &[f64], b: &DMatrix<f64>, c: &DMatrix<f64>, omega_scale: f64) -> Self {
        let n = poles.len();
        let mut th = Self::zeros(n, omega_scale);
        let (_, go, bo, co) = th.offsets();
        let mut k = go;
        for i in 0..n {
            for j in 0..=i {
                if i == j {
                    th.values[k] = ((poles[i] - 2.0 * MU).max(0.0) / omega_scale).sqrt();
                }
                k += 1;
            }
        }
        for i in 0..n {
            for j in 0..2 {
                th.values[bo + 2 * i + j] = b[(i, j)] / omega_scale;
                th.values[co + n * j + i] = c[(j, i)];
            }
        }
        th
    }
}

/// `R = (I - G)(I + G)^-1` with `G = m Y`.
pub fn scattering(m: &MultiplierFilter, y: &StateSpaceModel) -> Result<StateSpaceModel> {
    let MultiplierFilter::Rational(mm) = m else {
        return Err(Error::InvalidParams("scattering transform needs a rational multiplier".into()));
    };
    let g = StateSpaceModel::series(mm, y)?;
    scattering_of(&g)
}

/// Scattering transform of an arbitrary square model.
pub fn scattering_of(g: &StateSpaceModel) -> Result<StateSpaceModel> {
    let p = g.outputs();
    if g.inputs() != p {
        return Err(Error::DimensionMismatch("scattering needs a square system".into()));
    }
    let i = DMatrix::<f64>::identity(p, p);
    let idp = &i + g.d();
    if idp.iter().any(|x| !x.is_finite()) || crate::linalg::rank(&idp, 1e-12) < p {
        return Err(Error::IllPosedFeedthrough);
    }
    let inv = idp.try_inverse().ok_or(Error::IllPosedFeedthrough)?;
    let a = g.a() - g.b() * &inv * g.c();
    let b = g.b() * &inv;
    let c = -(&inv * g.c()) * 2.0;
    let d = &inv * 2.0 - i;
    StateSpaceModel::new(a, b, c, d)
}

/// How the objective gradient is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Exact gradient of the smoothed objective from singular vectors.
    Analytic,
    /// Central differences with relative step 1e-6.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Frequencies the objective is evaluated on.
    pub grid: FrequencyGrid,
    /// Random starts in addition to the warm start.
    pub starts: usize,
    /// L-BFGS iterations per temperature stage.
    pub max_iters: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    /// Log-sum-exp temperatures, applied in order.
    pub temperatures: Vec<f64>,
    pub seed: u64,
    /// Frequency scale of the parametrization (rad/s).
    pub omega_scale: f64,
    pub warm_start: bool,
    /// Breakpoint of the piecewise multiplier used for the warm start.
    pub warm_omega_f: f64,
    pub gradient: GradientMethod,
    /// Rounds of adding verified peak frequencies to the grid and re-polishing.
    pub refine_rounds: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            grid: FrequencyGrid::default(),
            starts: 16,
            max_iters: 150,
            grad_tol: 1e-10,
            f_tol: 1e-13,
            temperatures: vec![10.0, 30.0, 100.0, 300.0, 1000.0, 1e4, 1e5, 1e6, 1e7],
            seed: 1,
            omega_scale: 100.0,
            warm_start: true,
            warm_omega_f: OMEGA0_50HZ,
            gradient: GradientMethod::Analytic,
            refine_rounds: 3,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 && !self.warm_start {
            return Err(Error::InvalidParams("synthesis needs at least one start".into()));
        }
        if self.temperatures.is_empty() || self.temperatures.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidParams("temperatures must be positive".into()));
        }
        if !(self.omega_scale > 0.0) {
            return Err(Error::InvalidParams("omega_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentNorm {
    pub id: String,
    /// Normalization factor applied to the admittance.
    pub scale: f64,
    pub grid_norm: f64,
    pub verified_norm: f64,
    pub verified_omega: f64,
    pub minimum_phase: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub warm: bool,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub theta: MultiplierTheta,
    /// Grid maximum of the scattering gain at the returned parameters.
    pub grid_objective: f64,
    /// Maximum over components of the Hamiltonian-verified norm.
    pub verified_objective: f64,
    pub components: Vec<ComponentNorm>,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
    /// Smoothed objective per accepted step of the winning start.
    pub trace: Vec<f64>,
    /// Verified norm within the acceptance level, every `I + mY` minimum
    /// phase and the Hermitian certificate passing on the original scale.
    pub success: bool,
    pub certificate: Option<Certificate>,
}

impl SynthesisResult {
    pub fn multiplier(&self) -> Result<MultiplierFilter> {
        self.theta.to_multiplier()
    }
}

/// Precomputed frequency responses and the smoothed minimax objective.
struct Evaluator {
    omegas: Vec<f64>,
    /// `resp[k][i]`: component `k` at frequency `i`.
    resp: Vec<Vec<M2>>,
}

struct EvalOut {
    smooth: f64,
    max: f64,
}

impl Evaluator {
    /// Grid points plus `w = 0` whenever every component has a finite DC
    /// response: the scattering gain of a singular `Y(0)` touches one there.
    fn new(ys: &[StateSpaceModel], scales: &[f64], grid: &FrequencyGrid) -> Result<Self> {
        let mut pts = grid.points().to_vec();
        if ys.iter().all(|y| y.freq_response(0.0).is_ok_and(|r| r.iter().all(|z| z.is_finite()))) {
            pts.insert(0, 0.0);
        }
        Self::from_points(ys, scales, pts)
    }

    fn from_points(ys: &[StateSpaceModel], scales: &[f64], mut omegas: Vec<f64>) -> Result<Self> {
        omegas.sort_by(f64::total_cmp);
        omegas.dedup();
        let resp = ys
            .iter()
            .zip(scales)
            .map(|(y, &s)| {
                omegas
                    .iter()
                    .map(|&w| {
                        let mut r = to_2x2(&y.freq_response(w)?);
                        r.iter_mut().flatten().for_each(|z| *z *= s);
                        Ok(r)
                    })
                    .collect::<Result<Vec<M2>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { omegas, resp })
    }

    fn add_frequencies(&mut self, ys: &[StateSpaceModel], scales: &[f64], extra: &[f64]) -> Result<()> {
        let mut pts = self.omegas.clone();
        pts.extend(extra.iter().copied().filter(|w| w.is_finite() && *w >= 0.0));
        *self = Self::from_points(ys, scales, pts)?;
        Ok(())
    }

    /// Returns the per-(component, frequency) gains, or `None` if ill posed.
    fn sigmas(&self, theta: &MultiplierTheta) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.resp.len() * self.omegas.len());
        let n = theta.order;
        let (a, b, c) = theta.matrices();
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        let mut rhs = vec![Complex64::new(0.0, 0.0); n * 2];
        let mut ms = Vec::with_capacity(self.omegas.len());
        for &w in &self.omegas {
            ms.push(multiplier_at(&a, &b, &c, w, &mut buf, &mut rhs)?.0);
        }
        for comp in &self.resp {
            for (i, y) in comp.iter().enumerate() {
                let g = mul_2x2(&ms[i], y);
                let (_, r) = scatter_2x2(&g)?;
                out.push(sigma_max_2x2(&r).0);
            }
        }
        Some(out)
    }

    fn eval(&self, theta: &MultiplierTheta, tau: f64, grad: Option<&mut [f64]>) -> EvalOut {
        let n = theta.order;
        let nw = self.omegas.len();
        let nk = self.resp.len();
        if nk == 0 {
            if let Some(g) = grad {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            return EvalOut { smooth: 0.0, max: 0.0 };
        }
        let (a, b, c) = theta.matrices();
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        let mut rhs = vec![Complex64::new(0.0, 0.0); n * n.max(2)];
        let want_grad = grad.is_some();
        // Per frequency: m, Phi B (n x 2), C Phi (2 x n).
        let mut ms = Vec::with_capacity(nw);
        let mut pbs = Vec::with_capacity(if want_grad { nw } else { 0 });
        let mut cps = Vec::with_capacity(if want_grad { nw } else { 0 });
        for &w in &self.omegas {
            if want_grad {
                match resolvent_products(&a, &b, &c, w, &mut buf, &mut rhs) {
                    Some((m, pb, cp)) => {
                        ms.push(m);
                        pbs.push(pb);
                        cps.push(cp);
                    }
                    None => return self.penalty(grad),
                }
            } else {
                match multiplier_at(&a, &b, &c, w, &mut buf, &mut rhs) {
                    Some((m, _)) => ms.push(m),
                    None => return self.penalty(grad),
                }
            }
        }
        let mut sig = vec![0.0; nk * nw];
        let mut lam: Vec<M2> = if want_grad { vec![[[Complex64::new(0.0, 0.0); 2]; 2]; nk * nw] } else { Vec::new() };
        for k in 0..nk {
            for i in 0..nw {
                let y = &self.resp[k][i];
                let g = mul_2x2(&ms[i], y);
                let Some((wm, r)) = scatter_2x2(&g) else {
                    return self.penalty(grad);
                };
                let (s, u, v) = sigma_max_2x2(&r);
                sig[k * nw + i] = s;
                if want_grad {
                    // Lambda = -2 Y W v u^H W
                    let wv = [wm[0][0] * v[0] + wm[0][1] * v[1], wm[1][0] * v[0] + wm[1][1] * v[1]];
                    let ywv = [y[0][0] * wv[0] + y[0][1] * wv[1], y[1][0] * wv[0] + y[1][1] * wv[1]];
                    let uhw = [u[0].conj() * wm[0][0] + u[1].conj() * wm[1][0], u[0].conj() * wm[0][1] + u[1].conj() * wm[1][1]];
                    lam[k * nw + i] = [
                        [ywv[0] * uhw[0] * -2.0, ywv[0] * uhw[1] * -2.0],
                        [ywv[1] * uhw[0] * -2.0, ywv[1] * uhw[1] * -2.0],
                    ];
                }
            }
        }
        let max = sig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let weights: Vec<f64> = sig
            .iter()
            .map(|s| {
                let e = (tau * (s - max)).exp();
                z += e;
                e
            })
            .collect();
        let smooth = max + z.ln() / tau;
        if let Some(out) = grad {
            let mut ga = DMatrix::<f64>::zeros(n, n);
            let mut gb = DMatrix::<f64>::zeros(n, 2);
            let mut gc = DMatrix::<f64>::zeros(2, n);
            for i in 0..nw {
                let mut lt = [[Complex64::new(0.0, 0.0); 2]; 2];
                let mut any = false;
                for k in 0..nk {
                    let wgt = weights[k * nw + i] / z;
                    if wgt < 1e-300 {
                        continue;
                    }
                    any = true;
                    let l = &lam[k * nw + i];
                    for r in 0..2 {
                        for s in 0..2 {
                            lt[r][s] += l[r][s] * wgt;
                        }
                    }
                }
                if !any {
                    continue;
                }
                let pb: &Vec<Complex64> = &pbs[i]; // n x 2 row-major
                let cp: &Vec<Complex64> = &cps[i]; // 2 x n row-major
                // P = Phi B Lambda (n x 2); Q = Lambda C Phi (2 x n)
                let mut p = vec![Complex64::new(0.0, 0.0); n * 2];
                let mut q = vec![Complex64::new(0.0, 0.0); 2 * n];
                for r in 0..n {
                    for s in 0..2 {
                        p[r * 2 + s] = pb[r * 2] * lt[0][s] + pb[r * 2 + 1] * lt[1][s];
                    }
                }
                for r in 0..2 {
                    for s in 0..n {
                        q[r * n + s] = lt[r][0] * cp[s] + lt[r][1] * cp[n + s];
                    }
                }
                for r in 0..n {
                    for s in 0..2 {
                        gc[(s, r)] += p[r * 2 + s].re;
                        gb[(r, s)] += q[s * n + r].re;
                    }
                }
                // gA = Re((P C Phi)^T)
                for r in 0..n {
                    for s in 0..n {
                        let v = p[r * 2] * cp[s] + p[r * 2 + 1] * cp[n + s];
                        ga[(s, r)] += v.re;
                    }
                }
            }
            theta.chain(&ga, &gb, &gc, out);
        }
        EvalOut { smooth, max }
    }

    fn penalty(&self, grad: Option<&mut [f64]>) -> EvalOut {
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        EvalOut { smooth: PENALTY, max: PENALTY }
    }
}

/// `m(jw)` and `(jwI - A)^-1 B`.
fn multiplier_at(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    w: f64,
    buf: &mut [Complex64],
    rhs: &mut [Complex64],
) -> Option<(M2, Vec<Complex64>)> {
    let n = a.nrows();
    let mut m = crate::components::identity_2x2();
    if n == 0 {
        return Some((m, Vec::new()));
    }
    fill_resolvent(a, w, buf);
    for i in 0..n {
        for j in 0..2 {
            rhs[i * 2 + j] = Complex64::new(b[(i, j)], 0.0);
        }
    }
    let ratio = complex_lu_solve(buf, n, &mut rhs[..n * 2], 2)?;
    if ratio <= 1e-14 {
        return None;
    }
    for r in 0..2 {
        for s in 0..2 {
            let mut acc = m[r][s];
            for k in 0..n {
                acc += rhs[k * 2 + s] * c[(r, k)];
            }
            m[r][s] = acc;
        }
    }
    Some((m, rhs[..n * 2].to_vec()))
}

fn fill_resolvent(a: &DMatrix<f64>, w: f64, buf: &mut [Complex64]) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            buf[i * n + j] = Complex64::new(-a[(i, j)], if i == j { w } else { 0.0 });
        }
    }
}

/// `m(jw)`, `Phi B` (n x 2) and `C Phi` (2 x n), with `Phi = (jwI - A)^-1`.
fn resolvent_products(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    w: f64,
    buf: &mut [Complex64],
    rhs: &mut [Complex64],
) -> Option<(M2, Vec<Complex64>, Vec<Complex64>)> {
    let n = a.nrows();
    if n == 0 {
        return Some((crate::components::identity_2x2(), Vec::new(), Vec::new()));
    }
    // Full inverse: n right-hand sides.
    fill_resolvent(a, w, buf);
    for i in 0..n {
        for j in 0..n {
            rhs[i * n + j] = Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
        }
    }
    let ratio = complex_lu_solve(buf, n, rhs, n)?;
    if ratio <= 1e-14 {
        return None;
    }
    let phi = &rhs[..n * n];
    let mut pb = vec![Complex64::new(0.0, 0.0); n * 2];
    let mut cp = vec![Complex64::new(0.0, 0.0); 2 * n];
    for i in 0..n {
        for j in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += phi[i * n + k] * b[(k, j)];
            }
            pb[i * 2 + j] = acc;
        }
    }
    for i in 0..2 {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += phi[k * n + j] * c[(i, k)];
            }
            cp[i * n + j] = acc;
        }
    }
    let mut m = crate::components::identity_2x2();
    for r in 0..2 {
        for s in 0..2 {
            let mut acc = m[r][s];
            for k in 0..n {
                acc += c[(r, k)] * pb[k * 2 + s];
            }
            m[r][s] = acc;
        }
    }
    Some((m, pb, cp))
}

/// `(W, R)` with `W = (I + G)^-1` and `R = 2W - I`.
#[inline]
fn scatter_2x2(g: &M2) -> Option<(M2, M2)> {
    let one = Complex64::new(1.0, 0.0);
    let ipg = [[g[0][0] + one, g[0][1]], [g[1][0], g[1][1] + one]];
    let w = inv_2x2(&ipg)?;
    let r = [[w[0][0] * 2.0 - one, w[0][1] * 2.0], [w[1][0] * 2.0, w[1][1] * 2.0 - one]];
    Some((w, r))
}

/// Grid maximum over components and frequencies of `sigma_max(R_k(jw))`;
/// `PENALTY` when some `I + mY_k` is singular on the grid.
pub fn objective(theta: &MultiplierTheta, ys: &[StateSpaceModel], grid: &FrequencyGrid) -> Result<f64> {
    let ones = vec![1.0; ys.len()];
    let ev = Evaluator::new(ys, &ones, grid)?;
    Ok(ev.eval(theta, 1.0, None).max)
}

/// Smoothed objective and its gradient, exposed for testing.
pub fn smoothed_objective(
    theta: &MultiplierTheta,
    ys: &[StateSpaceModel],
    grid: &FrequencyGrid,
    tau: f64,
    method: GradientMethod,
) -> Result<(f64, Vec<f64>)> {
    let ones = vec![1.0; ys.len()];
    let ev = Evaluator::new(ys, &ones, grid)?;
    let mut g = vec![0.0; theta.values.len()];
    let f = match method {
        GradientMethod::Analytic => ev.eval(theta, tau, Some(&mut g)).smooth,
        GradientMethod::FiniteDifference => fd_gradient(&ev, theta, tau, &mut g),
    };
    Ok((f, g))
}

fn fd_gradient(ev: &Evaluator, theta: &MultiplierTheta, tau: f64, g: &mut [f64]) -> f64 {
    let f0 = ev.eval(theta, tau, None).smooth;
    let mut th = theta.clone();
    for i in 0..th.values.len() {
        let x = th.values[i];
        let h = 1e-6 * x.abs().max(1.0);
        th.values[i] = x + h;
        let fp = ev.eval(&th, tau, None).smooth;
        th.values[i] = x - h;
        let fm = ev.eval(&th, tau, None).smooth;
        th.values[i] = x;
        g[i] = (fp - fm) / (2.0 * h);
    }
    f0
}

/// Least-squares fit of an order-6 (or any even order) multiplier with fixed
/// real poles to the piecewise rotation/identity response.
pub fn warm_start_theta(order: usize, omega_f: f64, omega_scale: f64, grid: &FrequencyGrid) -> MultiplierTheta {
    let base = [0.3, 1.0, 3.0];
    let poles: Vec<f64> = (0..order).map(|i| omega_f * base[(i / 2) % 3] * (1.0 + (i / 6) as f64)).collect();
    // B stacks 2x2 identities; C is fitted.
    let mut b = DMatrix::zeros(order, 2);
    for i in 0..order {
        b[(i, i % 2)] = 1.0;
    }
    // m(jw) - I = C (jwI - A)^-1 B, rows of C are independent problems.
    let pts = grid.points();
    let mut lhs = DMatrix::<f64>::zeros(4 * pts.len(), order);
    let mut rhs_mat = DMatrix::<f64>::zeros(4 * pts.len(), 2);
    for (t, &w) in pts.iter().enumerate() {
        let target_minus_i = if w < omega_f { [[-1.0, -1.0], [1.0, -1.0]] } else { [[0.0, 0.0], [0.0, 0.0]] };
        // Weight equally in log frequency.
        for col in 0..2 {
            for k in 0..order {
                if k % 2 != col {
                    continue;
                }
                let h = Complex64::new(1.0, 0.0) / Complex64::new(poles[k], w);
                lhs[(4 * t + 2 * col, k)] = h.re;
                lhs[(4 * t + 2 * col + 1, k)] = h.im;
            }
            for row in 0..2 {
                rhs_mat[(4 * t + 2 * col, row)] = target_minus_i[row][col];
            }
        }
    }
    let svd = lhs.svd(true, true);
    let sol = svd.solve(&rhs_mat, 1e-12).unwrap_or_else(|_| DMatrix::zeros(order, 2));
    let c = sol.transpose();
    MultiplierTheta::from_diagonal(&poles, &b, &c, omega_scale)
}

fn random_theta(order: usize, omega_scale: f64, rng: &mut ChaCha8Rng) -> MultiplierTheta {
    let mut th = MultiplierTheta::zeros(order, omega_scale);
    let (so, go, bo, co) = th.offsets();
    for v in &mut th.values[so..go] {
        *v = rng.gen_range(-1.0..1.0);
    }
    let mut k = go;
    for i in 0..order {
        for j in 0..=i {
            th.values[k] = if i == j {
                // pole magnitudes spread over two decades around omega_scale
                10f64.powf(rng.gen_range(-1.0..1.0)).sqrt()
            } else {
                0.3 * rng.gen_range(-1.0..1.0)
            };
            k += 1;
        }
    }
    for v in &mut th.values[bo..co] {
        *v = rng.gen_range(-1.0..1.0);
    }
    for v in &mut th.values[co..] {
        *v = 0.5 * rng.gen_range(-1.0..1.0);
    }
    th
}

struct LocalResult {
    theta: MultiplierTheta,
    objective: f64,
    iterations: usize,
    evaluations: usize,
    trace: Vec<f64>,
}

fn local_search(ev: &Evaluator, start: MultiplierTheta, cfg: &SynthesisConfig) -> LocalResult {
    let mut theta = start;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    for &tau in &cfg.temperatures {
        let opts = LbfgsOptions { max_iters: cfg.max_iters, grad_tol: cfg.grad_tol, f_tol: cfg.f_tol, ..Default::default() };
        let template = theta.clone();
        let out = lbfgs(
            |x: &[f64], g: &mut [f64]| {
                let th = MultiplierTheta { values: x.to_vec(), ..template.clone() };
                match cfg.gradient {
                    GradientMethod::Analytic => ev.eval(&th, tau, Some(g)).smooth,
                    GradientMethod::FiniteDifference => fd_gradient(ev, &th, tau, g),
                }
            },
            &theta.values,
            &opts,
        );
        iterations += out.iterations;
        evaluations += out.evaluations;
        trace.extend_from_slice(&out.trace);
        theta.values = out.x;
    }
    let objective = ev.eval(&theta, 1.0, None).max;
    LocalResult { theta, objective, iterations, evaluations, trace }
}

/// Hamiltonian-verified norms of the scattering transforms.
fn verify_norms(
    theta: &MultiplierTheta,
    ids: &[String],
    ys: &[StateSpaceModel],
    scales: &[f64],
    ev: &Evaluator,
) -> Result<Vec<ComponentNorm>> {
    let m = theta.to_multiplier()?;
    let sig = ev.sigmas(theta);
    let nw = ev.omegas.len();
    ys.iter()
        .enumerate()
        .map(|(k, y)| {
            let grid_norm = sig.as_ref().map_or(PENALTY, |s| s[k * nw..(k + 1) * nw].iter().copied().fold(0.0, f64::max));
            let r = scattering(&m, &y.scaled(scales[k]))?;
            let minimum_phase = r.order() == 0 || r.is_hurwitz(0.0)?;
            let (verified_norm, verified_omega) = if minimum_phase {
                let h = hinf_norm(&r, HinfMethod::Bisection, HINF_TOL)?;
                (h.value, h.omega)
            } else {
                (f64::INFINITY, f64::NAN)
            };
            Ok(ComponentNorm { id: ids[k].clone(), scale: scales[k], grid_norm, verified_norm, verified_omega, minimum_phase })
        })
        .collect()
}

fn normalization(y: &StateSpaceModel, grid: &FrequencyGrid) -> Result<f64> {
    let mut peak: f64 = 0.0;
    for &w in grid.points() {
        peak = peak.max(y.freq_response(w)?.norm());
    }
    Ok(if peak > 0.0 && peak.is_finite() { 1.0 / peak } else { 1.0 })
}

/// Multi-start synthesis of an order-`order` multiplier for `ys`.
pub fn synthesize(ys: &[(String, StateSpaceModel)], order: usize, cfg: &SynthesisConfig) -> Result<SynthesisResult> {
    if order == 0 {
        return Err(Error::InvalidOrder("multiplier order must be at least 1".into()));
    }
    if ys.is_empty() {
        return Err(Error::InvalidParams("no components to synthesize for".into()));
    }
    cfg.validate()?;
    for (id, y) in ys {
        if y.inputs() != 2 || y.outputs() != 2 {
            return Err(Error::DimensionMismatch(format!("component `{id}` is not 2x2")));
        }
    }
    let ids: Vec<String> = ys.iter().map(|(id, _)| id.clone()).collect();
    let models: Vec<StateSpaceModel> = ys.iter().map(|(_, y)| y.clone()).collect();
    let scales: Vec<f64> = models.iter().map(|y| normalization(y, &cfg.grid)).collect::<Result<_>>()?;
    let mut ev = Evaluator::new(&models, &scales, &cfg.grid)?;

    let mut seeds: Vec<(usize, bool, MultiplierTheta)> = Vec::new();
    if cfg.warm_start {
        seeds.push((0, true, warm_start_theta(order, cfg.warm_omega_f, cfg.omega_scale, &cfg.grid)));
    }
    let offset = seeds.len();
    for i in 0..cfg.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
        seeds.push((offset + i, false, random_theta(order, cfg.omega_scale, &mut rng)));
    }

    let results: Vec<LocalResult> = seeds.par_iter().map(|(_, _, th)| local_search(&ev, th.clone(), cfg)).collect();
    let starts: Vec<StartSummary> = seeds
        .iter()
        .zip(&results)
        .map(|((index, warm, _), r)| StartSummary {
            index: *index,
            warm: *warm,
            objective: r.objective,
            iterations: r.iterations,
            evaluations: r.evaluations,
        })
        .collect();
    // Lowest objective wins; ties go to the lowest start index.
    let best = (0..results.len())
        .min_by(|&a, &b| results[a].objective.total_cmp(&results[b].objective).then(a.cmp(&b)))
        .expect("at least one start");
    let mut theta = results[best].theta.clone();
    let mut trace = results[best].trace.clone();

    let mut comps = verify_norms(&theta, &ids, &models, &scales, &ev)?;
    // Grid adequacy: add verified peak frequencies and polish from the best point.
    for _ in 0..cfg.refine_rounds {
        let worst = comps.iter().map(|c| c.verified_norm).fold(0.0, f64::max);
        let grid_obj = ev.eval(&theta, 1.0, None).max;
        if worst <= SUCCESS_LEVEL || worst - grid_obj <= 1e-9 {
            break;
        }
        let extra: Vec<f64> = comps
            .iter()
            .filter(|c| c.verified_omega.is_finite())
            .flat_map(|c| [c.verified_omega * 0.999, c.verified_omega, c.verified_omega * 1.001])
            .collect();
        if extra.is_empty() {
            break;
        }
        ev.add_frequencies(&models, &scales, &extra)?;
        let polished = local_search(&ev, theta.clone(), cfg);
        theta = polished.theta;
        trace.extend_from_slice(&polished.trace);
        comps = verify_norms(&theta, &ids, &models, &scales, &ev)?;
    }

    let grid_objective = ev.eval(&theta, 1.0, None).max;
    let verified_objective = comps.iter().map(|c| c.verified_norm).fold(0.0, f64::max);
    let mut result = SynthesisResult {
        theta,
        grid_objective,
        verified_objective,
        components: comps,
        best_start: starts[best].index,
        starts,
        trace,
        success: false,
        certificate: None,
    };
    let cert = verify(&result, ys, &FrequencyGrid::default(), crate::certificate::DEFAULT_EPS)?;
    result.success = verified_objective <= SUCCESS_LEVEL && result.components.iter().all(|c| c.minimum_phase) && cert.pass;
    result.certificate = Some(cert);
    Ok(result)
}

/// Hermitian certificate for the synthesized multiplier on the original
/// (unnormalized) admittances, with minimum-phase diagnostics.
pub fn verify(result: &SynthesisResult, ys: &[(String, StateSpaceModel)], grid: &FrequencyGrid, eps: f64) -> Result<Certificate> {
    let m = result.multiplier()?;
    let mut cert = certify_system(&m, ys, grid, eps)?;
    for (id, y) in ys {
        let r = scattering(&m, y)?;
        if !(r.order() == 0 || r.is_hurwitz(0.0)?) {
            cert.warnings.push(Error::MinimumPhaseViolation(id.clone()).to_string());
        }
    }
    Ok(cert)
}

//! Component admittance builders: RL lines, droop-controlled grid-forming
//! inverters and the two multiplier families.
//!
//! All admittances map a terminal dq voltage perturbation (global synchronous
//! frame) to the current flowing from the bus into the component, so that the
//! nodal balance reads `i_inj = (Y_net + Y_D) v`. Passive elements therefore
//! have a positive semidefinite Hermitian part.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::lti::{FrequencyGrid, StateSpaceModel};

pub const OMEGA0_50HZ: f64 = 2.0 * PI * 50.0;

/// Series RL branch in per-unit; `l` is the inductance with `X = omega0 * l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub r: f64,
    pub l: f64,
    pub omega0: f64,
}

impl LineParams {
    pub fn new(r: f64, l: f64, omega0: f64) -> Result<Self> {
        let p = Self { r, l, omega0 };
        p.validate()?;
        Ok(p)
    }

    /// From resistance and reactance at `omega0`.
    pub fn from_rx(r: f64, x: f64, omega0: f64) -> Result<Self> {
        Self::new(r, x / omega0, omega0)
    }

    pub fn reactance(&self) -> f64 {
        self.omega0 * self.l
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.l > 0.0 && self.omega0 > 0.0) || !(self.r.is_finite() && self.l.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "line requires R > 0, L > 0, omega0 > 0 (got R={}, L={}, omega0={})",
                self.r, self.l, self.omega0
            )));
        }
        Ok(())
    }
}

/// `[[R + sL, -omega0 L], [omega0 L, R + sL]]^-1` as a two-state model.
pub fn line_admittance(p: &LineParams) -> Result<StateSpaceModel> {
    p.validate()?;
    let (r, l, w0) = (p.r, p.l, p.omega0);
    StateSpaceModel::new(
        DMatrix::from_row_slice(2, 2, &[-r / l, w0, -w0, -r / l]),
        DMatrix::identity(2, 2) / l,
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 2),
    )
}

/// Grid-forming inverter with P-f / Q-V droop, cascaded voltage and current
/// PI loops, LC filter and coupling branch. Per-unit on `s_rated`; inductances
/// and capacitances are given as reactance/susceptance at `omega0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GfmParams {
    /// Active-power droop (fraction, 0.01 = 1 %).
    pub m_p: f64,
    /// Reactive-power droop (fraction).
    pub n_q: f64,
    /// Power measurement low-pass cutoff (rad/s).
    pub omega_c: f64,
    pub k_pv: f64,
    pub k_iv: f64,
    /// Current-loop gain; see [`GfmParams::current_pi_gains`].
    pub k_ic: f64,
    pub c_f: f64,
    pub l_f: f64,
    pub r_f: f64,
    pub r_c: f64,
    pub x_c: f64,
    /// Output-current feed-forward gain of the voltage loop.
    pub f_ff: f64,
    pub omega0: f64,
    pub v0: f64,
    pub p0: f64,
    pub q0: f64,
    /// Device rating (MVA).
    pub s_rated: f64,
    /// System base the admittance is expressed on (MVA).
    pub s_base: f64,
}

impl Default for GfmParams {
    fn default() -> Self {
        Self {
            m_p: 0.01,
            n_q: 0.01,
            omega_c: 125.6637,
            k_pv: 1.7778,
            k_iv: 0.0,
            k_ic: 3.1416e3,
            c_f: 1.7778,
            l_f: 0.08,
            r_f: 0.003,
            r_c: 0.01,
            x_c: 0.015,
            f_ff: 1.0,
            omega0: OMEGA0_50HZ,
            v0: 1.0,
            p0: 0.0,
            q0: 0.0,
            s_rated: 600.0,
            s_base: 600.0,
        }
    }
}

impl GfmParams {
    pub fn with_droop(mut self, m_p: f64, n_q: f64) -> Self {
        self.m_p = m_p;
        self.n_q = n_q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let gains = [self.omega_c, self.k_pv, self.k_iv, self.k_ic, self.r_f, self.r_c, self.f_ff];
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidParams("GFM gains must be finite and non-negative".into()));
        }
        if !(self.c_f > 0.0 && self.l_f > 0.0 && self.x_c > 0.0) {
            return Err(Error::InvalidParams("GFM requires C_f, L_f, X_c > 0".into()));
        }
        for (name, g) in [("m_p", self.m_p), ("n_q", self.n_q)] {
            if !(g > 0.0 && g <= 0.1) {
                return Err(Error::InvalidParams(format!("droop gain {name} = {g} outside (0, 0.1]")));
            }
        }
        if !(self.omega0 > 0.0 && self.v0 > 0.0 && self.s_rated > 0.0 && self.s_base > 0.0) {
            return Err(Error::InvalidParams("omega0, V0 and the MVA bases must be positive".into()));
        }
        Ok(())
    }

    /// Current-loop PI gains by pole-zero cancellation: `K_p = k_ic L_f` with
    /// `L_f` the per-unit reactance, and `K_i` placing the controller zero on
    /// the filter pole `omega0 R_f / L_f`. The closed current loop is then a
    /// first-order lag with bandwidth `k_ic * omega0` rad/s.
    pub fn current_pi_gains(&self) -> (f64, f64) {
        let k_p = self.k_ic * self.l_f;
        (k_p, k_p * self.omega0 * self.r_f / self.l_f)
    }
}

/// Equilibrium of the nonlinear inverter model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Terminal voltage, global frame (p.u.).
    pub terminal_voltage: [f64; 2],
    /// Current injected into the network, global frame, device base (p.u.).
    pub injected_current: [f64; 2],
    pub state_names: Vec<String>,
    pub states: Vec<f64>,
    /// Angle of the controller frame relative to the global frame (rad).
    pub delta: f64,
    /// Infinity norm of the state derivative at the returned point.
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// Forward-mode dual numbers for exact Jacobians of the inverter model.

const NDUAL: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    d: [f64; NDUAL],
}

impl Dual {
    fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; NDUAL];
        d[i] = 1.0;
        Self { v, d }
    }
}

trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn k(x: f64) -> Self;
    fn scale(self, x: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Scalar for f64 {
    fn k(x: f64) -> Self {
        x
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..NDUAL {
            self.d[i] += o.d[i];
        }
        self
    }
}
impl Sub for Dual {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..NDUAL {
            self.d[i] -= o.d[i];
        }
        self
    }
}
impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; NDUAL];
        for (i, di) in d.iter_mut().enumerate() {
            *di = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}
impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}
impl Scalar for Dual {
    fn k(x: f64) -> Self {
        Self { v: x, d: [0.0; NDUAL] }
    }
    fn scale(mut self, x: f64) -> Self {
        self.v *= x;
        for di in self.d.iter_mut() {
            *di *= x;
        }
        self
    }
    fn sin(self) -> Self {
        let c = self.v.cos();
        let mut r = self.scale(c);
        r.v = self.v.sin();
        r
    }
    fn cos(self) -> Self {
        let s = self.v.sin();
        let mut r = self.scale(-s);
        r.v = self.v.cos();
        r
    }
}

/// State layout of the inverter model. Integrators whose gain is zero are
/// structurally disconnected and left out.
#[derive(Debug, Clone)]
struct GfmLayout {
    phi: Option<usize>,
    gamma: Option<usize>,
    il: usize,
    vo: usize,
    io: usize,
    n: usize,
}

const DELTA: usize = 0;
const PF: usize = 1;
const QF: usize = 2;

impl GfmLayout {
    fn new(p: &GfmParams) -> Self {
        let mut n = 3;
        let phi = if p.k_iv != 0.0 {
            n += 2;
            Some(n - 2)
        } else {
            None
        };
        let (_, k_ii) = p.current_pi_gains();
        let gamma = if k_ii != 0.0 {
            n += 2;
            Some(n - 2)
        } else {
            None
        };
        let il = n;
        let vo = n + 2;
        let io = n + 4;
        Self { phi, gamma, il, vo, io, n: n + 6 }
    }

    fn names(&self) -> Vec<String> {
        let mut v = vec!["delta".to_string(), "p_filt".into(), "q_filt".into()];
        if self.phi.is_some() {
            v.extend(["phi_d".into(), "phi_q".into()]);
        }
        if self.gamma.is_some() {
            v.extend(["gamma_d".into(), "gamma_q".into()]);
        }
        v.extend(["il_d".into(), "il_q".into(), "vo_d".into(), "vo_q".into(), "io_d".into(), "io_q".into()]);
        v
    }
}

/// Nonlinear inverter model: returns the state derivative and the current
/// injected into the network (global frame, device base).
fn gfm_rhs<T: Scalar>(p: &GfmParams, lay: &GfmLayout, x: &[T], vb: [T; 2]) -> (Vec<T>, [T; 2]) {
    let w0 = p.omega0;
    let (k_pc, k_ii) = p.current_pi_gains();
    let lf = p.l_f / w0;
    let cf = p.c_f / w0;
    let lc = p.x_c / w0;
    let delta = x[DELTA];
    let (c, s) = (delta.cos(), delta.sin());
    let vbd = c * vb[0] + s * vb[1];
    let vbq = c * vb[1] - s * vb[0];
    let (ild, ilq) = (x[lay.il], x[lay.il + 1]);
    let (vod, voq) = (x[lay.vo], x[lay.vo + 1]);
    let (iod, ioq) = (x[lay.io], x[lay.io + 1]);
    let pf = x[PF];
    let qf = x[QF];

    // Frequency of the controller frame (rad/s).
    let w = T::k(w0) - (pf - T::k(p.p0)).scale(w0 * p.m_p);
    let p_inst = vod * iod + voq * ioq;
    let q_inst = voq * iod - vod * ioq;
    let v_ref = T::k(p.v0) - (qf - T::k(p.q0)).scale(p.n_q);
    let evd = v_ref - vod;
    let evq = -voq;
    let (phid, phiq) = match lay.phi {
        Some(i) => (x[i], x[i + 1]),
        None => (T::k(0.0), T::k(0.0)),
    };
    let ild_ref = iod.scale(p.f_ff) - voq.scale(p.c_f) + evd.scale(p.k_pv) + phid.scale(p.k_iv);
    let ilq_ref = ioq.scale(p.f_ff) + vod.scale(p.c_f) + evq.scale(p.k_pv) + phiq.scale(p.k_iv);
    let eid = ild_ref - ild;
    let eiq = ilq_ref - ilq;
    let (gamd, gamq) = match lay.gamma {
        Some(i) => (x[i], x[i + 1]),
        None => (T::k(0.0), T::k(0.0)),
    };
    let vid = -ilq.scale(p.l_f) + eid.scale(k_pc) + gamd.scale(k_ii);
    let viq = ild.scale(p.l_f) + eiq.scale(k_pc) + gamq.scale(k_ii);

    let mut dx = vec![T::k(0.0); lay.n];
    dx[DELTA] = w - T::k(w0);
    dx[PF] = (p_inst - pf).scale(p.omega_c);
    dx[QF] = (q_inst - qf).scale(p.omega_c);
    if let Some(i) = lay.phi {
        dx[i] = evd;
        dx[i + 1] = evq;
    }
    if let Some(i) = lay.gamma {
        dx[i] = eid;
        dx[i + 1] = eiq;
    }
    dx[lay.il] = (vid - ild.scale(p.r_f) - vod).scale(1.0 / lf) + w * ilq;
    dx[lay.il + 1] = (viq - ilq.scale(p.r_f) - voq).scale(1.0 / lf) - w * ild;
    dx[lay.vo] = (ild - iod).scale(1.0 / cf) + w * voq;
    dx[lay.vo + 1] = (ilq - ioq).scale(1.0 / cf) - w * vod;
    dx[lay.io] = (vod - iod.scale(p.r_c) - vbd).scale(1.0 / lc) + w * ioq;
    dx[lay.io + 1] = (voq - ioq.scale(p.r_c) - vbq).scale(1.0 / lc) - w * iod;

    let out = [c * iod - s * ioq, s * iod + c * ioq];
    (dx, out)
}

/// Jacobians `(df/dx, df/dv, dy/dx, dy/dv)` of the nonlinear model.
fn gfm_jacobians(p: &GfmParams, lay: &GfmLayout, x: &[f64], vb: [f64; 2]) -> [DMatrix<f64>; 4] {
    let n = lay.n;
    assert!(n + 2 <= NDUAL);
    let xd: Vec<Dual> = x.iter().enumerate().map(|(i, &v)| Dual::var(v, i)).collect();
    let vd = [Dual::var(vb[0], n), Dual::var(vb[1], n + 1)];
    let (dx, y) = gfm_rhs(p, lay, &xd, vd);
    let fx = DMatrix::from_fn(n, n, |i, j| dx[i].d[j]);
    let fv = DMatrix::from_fn(n, 2, |i, j| dx[i].d[n + j]);
    let yx = DMatrix::from_fn(2, n, |i, j| y[i].d[j]);
    let yv = DMatrix::from_fn(2, 2, |i, j| y[i].d[n + j]);
    [fx, fv, yx, yv]
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Steady state of the inverter for a given terminal voltage (global frame),
/// by Newton iteration on the full nonlinear model.
pub fn gfm_equilibrium(p: &GfmParams, terminal_voltage_dq: [f64; 2]) -> Result<OperatingPoint> {
    p.validate()?;
    let vmag = terminal_voltage_dq[0].hypot(terminal_voltage_dq[1]);
    if !(0.8..=1.2).contains(&vmag) {
        return Err(Error::OutOfRange(format!("terminal voltage magnitude {vmag:.4} p.u. outside [0.8, 1.2]")));
    }
    let lay = GfmLayout::new(p);
    let (k_pc, k_ii) = p.current_pi_gains();
    // Initial guess: setpoint powers delivered at the capacitor, frame aligned
    // with the capacitor voltage.
    let s_ref = Complex64::new(p.p0, p.q0);
    let vb = Complex64::new(terminal_voltage_dq[0], terminal_voltage_dq[1]);
    let zc = Complex64::new(p.r_c, p.x_c);
    let mut vo_g = vb;
    for _ in 0..20 {
        vo_g = vb + zc * (s_ref / vo_g).conj();
    }
    let delta0 = vo_g.arg();
    let rot = Complex64::from_polar(1.0, -delta0);
    let vo = vo_g * rot;
    let i_loc = (s_ref / vo).conj();
    let il = i_loc + Complex64::new(0.0, p.c_f) * vo;
    let mut x = vec![0.0; lay.n];
    x[DELTA] = delta0;
    x[PF] = p.p0;
    x[QF] = p.q0;
    x[lay.il] = il.re;
    x[lay.il + 1] = il.im;
    x[lay.vo] = vo.re;
    x[lay.vo + 1] = vo.im;
    x[lay.io] = i_loc.re;
    x[lay.io + 1] = i_loc.im;
    if let Some(g) = lay.gamma {
        // Integrator supplies the resistive drop of the filter inductor.
        let vi = vo + Complex64::new(p.r_f, p.l_f) * il;
        x[g] = (vi.re + p.l_f * il.im) / k_ii;
        x[g + 1] = (vi.im - p.l_f * il.re) / k_ii;
        let _ = k_pc;
    }
    let max_iter = 50;
    let tol = 1e-10;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let (f, _) = gfm_rhs(p, &lay, &x, terminal_voltage_dq);
        residual = inf_norm(&f);
        if residual <= tol {
            return Ok(finish_op(p, &lay, x, terminal_voltage_dq, residual));
        }
        let [fx, ..] = gfm_jacobians(p, &lay, &x, terminal_voltage_dq);
        let rhs = nalgebra::DVector::from_vec(f.clone());
        let step = match fx.lu().solve(&rhs) {
            Some(s) => s,
            None => break,
        };
        // Damped update keeps the iteration inside the basin for heavy loading.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi - t * si).collect();
            let (ft, _) = gfm_rhs(p, &lay, &trial, terminal_voltage_dq);
            if inf_norm(&ft).is_finite() && inf_norm(&ft) < residual {
                x = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let (f, _) = gfm_rhs(p, &lay, &x, terminal_voltage_dq);
    residual = residual.min(inf_norm(&f));
    if residual <= tol {
        return Ok(finish_op(p, &lay, x, terminal_voltage_dq, residual));
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

fn finish_op(p: &GfmParams, lay: &GfmLayout, x: Vec<f64>, vb: [f64; 2], residual: f64) -> OperatingPoint {
    let (_, y) = gfm_rhs(p, lay, &x, vb);
    OperatingPoint {
        terminal_voltage: vb,
        injected_current: y,
        state_names: lay.names(),
        delta: x[DELTA],
        states: x,
        residual,
    }
}

/// Equilibrium at the default linearization point: terminal voltage `(V0, 0)`.
pub fn gfm_default_equilibrium(p: &GfmParams) -> Result<OperatingPoint> {
    gfm_equilibrium(p, [p.v0, 0.0])
}

/// How the small-signal model is obtained from the nonlinear one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearization {
    /// Exact derivatives (forward-mode dual numbers).
    Analytic,
    /// Central differences with relative step `1e-7`.
    FiniteDifference,
}

/// Small-signal admittance of the inverter at `op`: bus voltage (global dq)
/// to current drawn from the bus, converted to the system base.
pub fn gfm_admittance(p: &GfmParams, op: &OperatingPoint) -> Result<StateSpaceModel> {
    gfm_admittance_with(p, op, Linearization::Analytic)
}

pub fn gfm_admittance_with(p: &GfmParams, op: &OperatingPoint, how: Linearization) -> Result<StateSpaceModel> {
    p.validate()?;
    let lay = GfmLayout::new(p);
    if op.states.len() != lay.n {
        return Err(Error::LinearizationFailure(format!(
            "operating point has {} states, model has {}",
            op.states.len(),
            lay.n
        )));
    }
    let (f, _) = gfm_rhs(p, &lay, &op.states, op.terminal_voltage);
    if inf_norm(&f) > 1e-8 {
        return Err(Error::LinearizationFailure(format!("not an equilibrium (residual {:.3e})", inf_norm(&f))));
    }
    let [fx, fv, yx, yv] = match how {
        Linearization::Analytic => gfm_jacobians(p, &lay, &op.states, op.terminal_voltage),
        Linearization::FiniteDifference => fd_jacobians(p, &lay, &op.states, op.terminal_voltage),
    };
    if crate::linalg::rank(&fx, 1e-13) < lay.n {
        return Err(Error::LinearizationFailure("state Jacobian is rank deficient".into()));
    }
    // Current drawn from the bus = -(current injected by the inverter).
    let k = -p.s_rated / p.s_base;
    StateSpaceModel::new(fx, fv, yx * k, yv * k)
}

fn fd_jacobians(p: &GfmParams, lay: &GfmLayout, x: &[f64], vb: [f64; 2]) -> [DMatrix<f64>; 4] {
    let n = lay.n;
    let mut z: Vec<f64> = x.to_vec();
    z.extend_from_slice(&vb);
    let eval = |z: &[f64]| {
        let (f, y) = gfm_rhs(p, lay, &z[..n], [z[n], z[n + 1]]);
        let mut out = f;
        out.extend_from_slice(&y);
        out
    };
    let mut jac = DMatrix::zeros(n + 2, n + 2);
    for j in 0..n + 2 {
        let h = 1e-7 * z[j].abs().max(1.0);
        let orig = z[j];
        z[j] = orig + h;
        let fp = eval(&z);
        z[j] = orig - h;
        let fm = eval(&z);
        z[j] = orig;
        for i in 0..n + 2 {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    [
        jac.view((0, 0), (n, n)).into_owned(),
        jac.view((0, n), (n, 2)).into_owned(),
        jac.view((n, 0), (2, n)).into_owned(),
        jac.view((n, n), (2, 2)).into_owned(),
    ]
}

/// Convenience: default equilibrium followed by linearization.
pub fn gfm_default_admittance(p: &GfmParams) -> Result<StateSpaceModel> {
    gfm_admittance(p, &gfm_default_equilibrium(p)?)
}

/// Number of states of the inverter small-signal model for these parameters.
pub fn gfm_state_names(p: &GfmParams) -> Vec<String> {
    GfmLayout::new(p).names()
}

// ---------------------------------------------------------------------------
// Multipliers

/// The 90-degree rotation `[[0, -1], [1, 0]]`.
pub fn rotation_j() -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    [[z, Complex64::new(-1.0, 0.0)], [Complex64::new(1.0, 0.0), z]]
}

pub fn identity_2x2() -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    [[o, z], [z, o]]
}

/// Dynamic 2x2 multiplier `m(s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierFilter {
    /// `m(s) = C_m (sI - A_m)^-1 B_m + I`.
    Rational(StateSpaceModel),
    /// Rotation below `omega_f`, identity at and above.
    Piecewise { omega_f: f64 },
}

/// Serializable description of a multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MultiplierSpec {
    Piecewise { omega_f: f64 },
    Rational { model: crate::io::ModelJson },
    Identity,
}

pub fn make_multiplier(spec: &MultiplierSpec) -> Result<MultiplierFilter> {
    match spec {
        MultiplierSpec::Piecewise { omega_f } => MultiplierFilter::piecewise(*omega_f),
        MultiplierSpec::Rational { model } => MultiplierFilter::rational(model.to_model()?),
        MultiplierSpec::Identity => Ok(MultiplierFilter::identity()),
    }
}

/// Hurwitz margin required of rational multipliers.
pub const MULTIPLIER_HURWITZ_MARGIN: f64 = 1e-6;
/// Minimum `|det m(jw)|` accepted on a grid.
pub const MULTIPLIER_DET_FLOOR: f64 = 1e-9;

impl MultiplierFilter {
    pub fn identity() -> Self {
        MultiplierFilter::Rational(StateSpaceModel::identity(2))
    }

    pub fn piecewise(omega_f: f64) -> Result<Self> {
        if !(omega_f > 0.0 && omega_f.is_finite()) {
            return Err(Error::InvalidParams(format!("piecewise multiplier needs omega_f > 0 (got {omega_f})")));
        }
        Ok(MultiplierFilter::Piecewise { omega_f })
    }

    pub fn rational(model: StateSpaceModel) -> Result<Self> {
        if model.inputs() != 2 || model.outputs() != 2 {
            return Err(Error::DimensionMismatch("multiplier must be 2x2".into()));
        }
        if model.d() != &DMatrix::<f64>::identity(2, 2) {
            return Err(Error::InvalidParams("rational multiplier requires D_m = I".into()));
        }
        if model.order() > 0 && !model.is_hurwitz(MULTIPLIER_HURWITZ_MARGIN)? {
            return Err(Error::NonHurwitzA);
        }
        Ok(MultiplierFilter::Rational(model))
    }

    pub fn order(&self) -> usize {
        match self {
            MultiplierFilter::Rational(m) => m.order(),
            MultiplierFilter::Piecewise { .. } => 0,
        }
    }

    pub fn eval(&self, omega: f64) -> Result<[[Complex64; 2]; 2]> {
        match self {
            MultiplierFilter::Piecewise { omega_f } => Ok(if omega < *omega_f { rotation_j() } else { identity_2x2() }),
            MultiplierFilter::Rational(m) => Ok(crate::linalg::to_2x2(&m.freq_response(omega)?)),
        }
    }

    pub fn eval_matrix(&self, omega: f64) -> Result<CMatrix> {
        let m = self.eval(omega)?;
        Ok(CMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]))
    }

    /// Limit as `omega -> infinity`.
    pub fn high_frequency_limit(&self) -> [[Complex64; 2]; 2] {
        identity_2x2()
    }

    /// Checks `|det m(jw)| > 1e-9` on every grid point.
    pub fn check_nonsingular(&self, grid: &FrequencyGrid) -> Result<()> {
        for &w in grid.points() {
            let m = self.eval(w)?;
            if crate::linalg::det_2x2(&m).norm() <= MULTIPLIER_DET_FLOOR {
                return Err(Error::SingularMultiplier { omega: w });
            }
        }
        Ok(())
    }

    pub fn to_spec(&self) -> MultiplierSpec {
        match self {
            MultiplierFilter::Piecewise { omega_f } => MultiplierSpec::Piecewise { omega_f: *omega_f },
            MultiplierFilter::Rational(m) => MultiplierSpec::Rational { model: crate::io::ModelJson::from_model(m) },
        }
    }

    /// Short stable hash of the multiplier parameters.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.to_spec()).expect("multiplier spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

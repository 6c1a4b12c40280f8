//! Linear time-invariant systems: frequency response, interconnection,
//! Hermitian-part spectra, H-infinity norms, stability and minimum-phase tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Real state-space realization `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(match name {
                    "A" => "A",
                    "B" => "B",
                    "C" => "C",
                    _ => "D",
                }));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless system `y = D u`.
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self { a: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, m), c: DMatrix::zeros(p, 0), d }
    }

    pub fn identity(p: usize) -> Self {
        Self::static_gain(DMatrix::identity(p, p))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Transfer matrix at an arbitrary complex point `s`.
    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        let n = self.order();
        let (p, m) = (self.outputs(), self.inputs());
        let mut out = CMatrix::from_fn(p, m, |i, j| Complex64::new(self.d[(i, j)], 0.0));
        if n == 0 {
            return Ok(out);
        }
        let mut res = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                res[i * n + j] = Complex64::new(-self.a[(i, j)], 0.0);
            }
            res[i * n + i] += s;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n * m];
        for i in 0..n {
            for j in 0..m {
                x[i * m + j] = Complex64::new(self.b[(i, j)], 0.0);
            }
        }
        let rel = linalg::complex_lu_solve(&mut res, n, &mut x, m);
        match rel {
            Some(r) if r > 1e-14 => {}
            _ => return Err(Error::SingularResolvent { omega: s.im }),
        }
        for i in 0..p {
            for j in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.c[(i, k)] * x[k * m + j];
                }
                out[(i, j)] += acc;
            }
        }
        Ok(out)
    }

    /// `C (j omega I - A)^-1 B + D`.
    pub fn freq_response(&self, omega: f64) -> Result<CMatrix> {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Realization of `after(s) * before(s)`.
    pub fn series(after: &Self, before: &Self) -> Result<Self> {
        if before.outputs() != after.inputs() {
            return Err(Error::DimensionMismatch(format!(
                "series: before has {} outputs, after has {} inputs",
                before.outputs(),
                after.inputs()
            )));
        }
        let (n1, n2) = (before.order(), after.order());
        let n = n1 + n2;
        let m = before.inputs();
        let p = after.outputs();
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n1, n1)).copy_from(&before.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&after.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&after.b * &before.c));
        let mut b = DMatrix::zeros(n, m);
        b.view_mut((0, 0), (n1, m)).copy_from(&before.b);
        b.view_mut((n1, 0), (n2, m)).copy_from(&(&after.b * &before.d));
        let mut c = DMatrix::zeros(p, n);
        c.view_mut((0, 0), (p, n1)).copy_from(&(&after.d * &before.c));
        c.view_mut((0, n1), (p, n2)).copy_from(&after.c);
        let d = &after.d * &before.d;
        Self::new(a, b, c, d)
    }

    /// Realization of `wa * ga(s) + wb * gb(s)` (shared input, summed outputs).
    pub fn weighted_sum(wa: f64, ga: &Self, wb: f64, gb: &Self) -> Result<Self> {
        if ga.inputs() != gb.inputs() || ga.outputs() != gb.outputs() {
            return Err(Error::DimensionMismatch("weighted_sum: operand shapes differ".into()));
        }
        let (n1, n2) = (ga.order(), gb.order());
        let n = n1 + n2;
        let (p, m) = (ga.outputs(), ga.inputs());
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n1, n1)).copy_from(&ga.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&gb.a);
        let mut b = DMatrix::zeros(n, m);
        b.view_mut((0, 0), (n1, m)).copy_from(&ga.b);
        b.view_mut((n1, 0), (n2, m)).copy_from(&gb.b);
        let mut c = DMatrix::zeros(p, n);
        c.view_mut((0, 0), (p, n1)).copy_from(&(&ga.c * wa));
        c.view_mut((0, n1), (p, n2)).copy_from(&(&gb.c * wb));
        let d = &ga.d * wa + &gb.d * wb;
        Self::new(a, b, c, d)
    }

    /// Multiply the output by a scalar.
    pub fn scaled(&self, k: f64) -> Self {
        Self { a: self.a.clone(), b: self.b.clone(), c: &self.c * k, d: &self.d * k }
    }

    /// Eigenvalues of A.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    /// Largest real part among the poles (`-inf` for a static system).
    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self.poles()?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Every pole has real part below `-margin`.
    pub fn is_hurwitz(&self, margin: f64) -> Result<bool> {
        Ok(self.poles()?.iter().all(|z| z.re < -margin))
    }

    /// Finite transmission zeros: generalized eigenvalues of the system pencil.
    pub fn transmission_zeros(&self) -> Result<Vec<Complex64>> {
        if self.inputs() != self.outputs() {
            return Err(Error::DimensionMismatch("transmission zeros need a square system".into()));
        }
        linalg::semi_explicit_finite_eigenvalues(&self.a, &self.b, &self.c, &self.d).map_err(|e| match e {
            Error::SingularPencil(msg) => Error::DegeneratePencil(msg),
            other => other,
        })
    }

    /// All transmission zeros have real part below `-tol`.
    pub fn minimum_phase(&self, tol: f64) -> Result<bool> {
        Ok(self.transmission_zeros()?.iter().all(|z| z.re < -tol))
    }

    /// Response as `s -> infinity`.
    pub fn high_frequency_gain(&self) -> CMatrix {
        self.d.map(|x| Complex64::new(x, 0.0))
    }
}

/// Strictly increasing set of positive angular frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.len() < 2 {
            return Err(Error::InvalidGrid("at least two distinct points required".into()));
        }
        if points.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGrid("all frequencies must be finite and positive".into()));
        }
        Ok(Self { points })
    }

    pub fn logspace(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min > 0.0 && max > min && n >= 2) {
            return Err(Error::InvalidGrid(format!("logspace({min}, {max}, {n})")));
        }
        let (l0, l1) = (min.log10(), max.log10());
        Self::new((0..n).map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64)).collect())
    }

    /// Adds `n` evenly spaced points on `[lo, hi]`.
    pub fn with_linear_window(&self, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let mut pts = self.points.clone();
        if n >= 2 {
            pts.extend((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64));
        }
        Self::new(pts)
    }

    /// 2000 log points over [1e-2, 1e5] rad/s plus 200 linear points on
    /// [0.8, 1.2] x 2 pi 50.
    pub fn default_grid() -> Self {
        let w0 = 2.0 * std::f64::consts::PI * 50.0;
        Self::logspace(1e-2, 1e5, 2000)
            .and_then(|g| g.with_linear_window(0.8 * w0, 1.2 * w0, 200))
            .expect("default grid is valid")
    }

    /// Log grid over [min, max] with `n` points and the same linear window
    /// around the nominal frequency as the default grid (when it fits).
    pub fn with_bounds(min: f64, max: f64, n: usize) -> Result<Self> {
        let w0 = 2.0 * std::f64::consts::PI * 50.0;
        let g = Self::logspace(min, max, n)?;
        if 0.8 * w0 > min && 1.2 * w0 < max {
            g.with_linear_window(0.8 * w0, 1.2 * w0, (n / 10).max(2))
        } else {
            Ok(g)
        }
    }

    /// Grid with twice the density (midpoints inserted, geometric mean).
    pub fn doubled(&self) -> Self {
        let mut pts = Vec::with_capacity(2 * self.points.len());
        for w in self.points.windows(2) {
            pts.push(w[0]);
            pts.push((w[0] * w[1]).sqrt());
        }
        pts.push(*self.points.last().expect("non-empty"));
        Self::new(pts).expect("refinement of a valid grid is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn min(&self) -> f64 {
        self.points[0]
    }
    pub fn max(&self) -> f64 {
        *self.points.last().expect("non-empty")
    }

    /// Short description used in reports.
    pub fn descriptor(&self) -> String {
        format!("{} points on [{:e}, {:e}] rad/s", self.len(), self.min(), self.max())
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::default_grid()
    }
}

/// Ascending eigenvalues of `Her(M)` at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianSpectrum {
    pub frequency: f64,
    pub eigenvalues: Vec<f64>,
}

/// `Her(M) = (M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn hermitian_spectrum(m: &CMatrix, frequency: f64) -> Result<HermitianSpectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("Hermitian part needs a square matrix".into()));
    }
    let mut eigenvalues: Vec<f64> = if m.nrows() == 0 {
        Vec::new()
    } else {
        hermitian_part(m).symmetric_eigenvalues().iter().copied().collect()
    };
    eigenvalues.sort_by(f64::total_cmp);
    Ok(HermitianSpectrum { frequency, eigenvalues })
}

/// `lambda_min(Her(M))` for a square complex matrix.
pub fn hermitian_min_eig(m: &CMatrix) -> f64 {
    assert_eq!(m.nrows(), m.ncols(), "hermitian_min_eig needs a square matrix");
    match m.nrows() {
        0 => f64::INFINITY,
        1 => m[(0, 0)].re,
        2 => linalg::her_min_eig_2x2(&linalg::to_2x2(m)),
        _ => hermitian_part(m).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Largest singular value of a complex matrix.
pub fn sigma_max(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.shape() == (2, 2) {
        return linalg::sigma_max_2x2(&linalg::to_2x2(m)).0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// How to compute the H-infinity norm.
#[derive(Debug, Clone, Copy)]
pub enum HinfMethod<'a> {
    /// Grid maximum with golden-section refinement around the best local peaks.
    Grid(&'a FrequencyGrid),
    /// Hamiltonian imaginary-axis test with gamma iteration.
    Bisection,
}

/// Peak gain and the frequency where it is attained (`f64::INFINITY` when the
/// supremum is the feedthrough gain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfNorm {
    pub value: f64,
    pub omega: f64,
}

/// Default absolute tolerance of the Hamiltonian bisection.
pub const HINF_TOL: f64 = 1e-8;

pub fn hinf_norm(sys: &StateSpaceModel, method: HinfMethod<'_>, tol: f64) -> Result<HinfNorm> {
    match method {
        HinfMethod::Grid(grid) => hinf_grid(sys, grid, tol),
        HinfMethod::Bisection => hinf_bisection(sys, tol),
    }
}

fn sigma_at(sys: &StateSpaceModel, omega: f64) -> Result<f64> {
    Ok(sigma_max(&sys.freq_response(omega)?))
}

/// Golden-section search for the maximum of `f` on `[lo, hi]` in log-frequency
/// (or linear frequency when `lo == 0`).
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, rtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let log = lo > 0.0;
    let (mut a, mut b) = if log { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let map = |x: f64| if log { x.exp() } else { x };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(map(x1));
    let mut f2 = f(map(x2));
    for _ in 0..200 {
        if (b - a).abs() <= rtol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(map(x2));
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(map(x1));
        }
    }
    if f1 >= f2 {
        (map(x1), f1)
    } else {
        (map(x2), f2)
    }
}

/// Indices of the `k` largest local maxima of `vals` (endpoints included).
pub fn top_local_maxima(vals: &[f64], k: usize) -> Vec<usize> {
    let n = vals.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let l = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
            let r = if i + 1 < n { vals[i + 1] } else { f64::NEG_INFINITY };
            vals[i] >= l && vals[i] >= r
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    peaks.truncate(k);
    peaks
}

fn hinf_grid(sys: &StateSpaceModel, grid: &FrequencyGrid, tol: f64) -> Result<HinfNorm> {
    let mut best = HinfNorm { value: sigma_max(&sys.high_frequency_gain()), omega: f64::INFINITY };
    if sys.order() == 0 {
        return Ok(best);
    }
    let pts = grid.points();
    let vals: Vec<f64> = pts.iter().map(|&w| sigma_at(sys, w)).collect::<Result<_>>()?;
    // The DC value is included when A is invertible.
    let dc = sys.eval(Complex64::new(0.0, 0.0)).ok().map(|g| sigma_max(&g));
    if let Some(v) = dc {
        if v > best.value {
            best = HinfNorm { value: v, omega: 0.0 };
        }
    }
    let rtol = tol.max(1e-12).min(1e-6);
    for i in top_local_maxima(&vals, 5) {
        if vals[i] > best.value {
            best = HinfNorm { value: vals[i], omega: pts[i] };
        }
        let lo = if i == 0 { if dc.is_some() { 0.0 } else { pts[0] * 0.5 } } else { pts[i - 1] };
        let hi = if i + 1 < pts.len() { pts[i + 1] } else { pts[i] * 2.0 };
        let (w, v) = golden_max(|w| sigma_at(sys, w).unwrap_or(f64::NEG_INFINITY), lo, hi, rtol * 1e-3);
        if v > best.value {
            best = HinfNorm { value: v, omega: w };
        }
    }
    Ok(best)
}

/// Hamiltonian whose imaginary eigenvalues are the frequencies where `gamma`
/// is a singular value of the transfer matrix. Requires `gamma > sigma_max(D)`.
pub fn hamiltonian(sys: &StateSpaceModel, gamma: f64) -> Result<DMatrix<f64>> {
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let (p, m) = (sys.outputs(), sys.inputs());
    let g2 = gamma * gamma;
    let r = d.transpose() * d - DMatrix::identity(m, m) * g2;
    let s = d * d.transpose() - DMatrix::identity(p, p) * g2;
    let rinv = r.try_inverse().ok_or(Error::IllPosedFeedthrough)?;
    let sinv = s.try_inverse().ok_or(Error::IllPosedFeedthrough)?;
    let n = sys.order();
    let top_left = a - b * &rinv * d.transpose() * c;
    let top_right = -(b * &rinv * b.transpose()) * gamma;
    let bottom_left = (c.transpose() * &sinv * c) * gamma;
    let bottom_right = -a.transpose() + c.transpose() * d * &rinv * b.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&top_left);
    h.view_mut((0, n), (n, n)).copy_from(&top_right);
    h.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    h.view_mut((n, n), (n, n)).copy_from(&bottom_right);
    Ok(h)
}

fn imaginary_axis_frequencies(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut ws: Vec<f64> = linalg::eigenvalues(h)?
        .into_iter()
        .filter(|z| z.im >= 0.0 && z.re.abs() <= 1e-6 * (1.0 + z.norm()))
        .map(|z| z.im)
        .collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    Ok(ws)
}

fn hinf_bisection(sys: &StateSpaceModel, tol: f64) -> Result<HinfNorm> {
    if sys.order() > 0 {
        let abscissa = sys.spectral_abscissa()?;
        if abscissa >= 0.0 {
            return Err(Error::UnstableSystem { abscissa });
        }
    }
    let mut best = HinfNorm { value: sigma_max(&sys.high_frequency_gain()), omega: f64::INFINITY };
    if sys.order() == 0 {
        return Ok(best);
    }
    let consider = |w: f64, best: &mut HinfNorm| -> Result<f64> {
        let v = sigma_at(sys, w)?;
        if v > best.value {
            *best = HinfNorm { value: v, omega: w };
        }
        Ok(v)
    };
    consider(0.0, &mut best)?;
    for z in sys.poles()? {
        if z.im >= 0.0 {
            consider(z.im.abs(), &mut best)?;
            consider(z.norm(), &mut best)?;
        }
    }
    let tol = tol.max(1e-15);
    // Each pass either certifies that no singular value reaches best + tol
    // or raises the lower bound to a value attained at a crossing midpoint.
    for _ in 0..200 {
        let gamma = best.value + tol;
        let ws = imaginary_axis_frequencies(&hamiltonian(sys, gamma)?)?;
        if ws.is_empty() {
            break;
        }
        let mut cands = ws.clone();
        cands.extend(ws.windows(2).map(|p| 0.5 * (p[0] + p[1])));
        let mut top: f64 = 0.0;
        for w in cands {
            top = top.max(consider(w, &mut best)?);
        }
        if top < gamma {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    fn second_order(zeta: f64, wn: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -wn * wn, -2.0 * zeta * wn]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[wn * wn, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn static_feedthrough_response() {
        let g = StateSpaceModel::identity(2);
        let r = g.freq_response(3.7).unwrap();
        assert_eq!(r, CMatrix::identity(2, 2));
    }

    #[test]
    fn first_order_response() {
        let r = scalar(-1.0, 1.0, 1.0, 0.0).freq_response(1.0).unwrap();
        assert!((r[(0, 0)] - Complex64::new(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let e = StateSpaceModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(1, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1));
        assert!(matches!(e, Err(Error::DimensionMismatch(_))));
        let nan = StateSpaceModel::new(
            DMatrix::from_element(1, 1, f64::NAN),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(nan, Err(Error::NonFinite(_))));
    }

    #[test]
    fn resolvent_singular_on_imaginary_pole() {
        let osc = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(osc.freq_response(1.0), Err(Error::SingularResolvent { .. })));
        assert!(!osc.is_hurwitz(0.0).unwrap());
    }

    #[test]
    fn series_of_two_lags_has_unit_dc_gain() {
        let lag = scalar(-1.0, 1.0, 1.0, 0.0);
        let g = StateSpaceModel::series(&lag, &lag).unwrap();
        assert_eq!(g.order(), 2);
        let r = g.eval(Complex64::new(0.0, 0.0)).unwrap();
        assert!((r[(0, 0)].re - 1.0).abs() < 1e-14);
        let w = 2.0;
        let expect = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, w) * Complex64::new(1.0, w));
        assert!((g.freq_response(w).unwrap()[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn series_dimension_check() {
        let a = StateSpaceModel::identity(2);
        let b = StateSpaceModel::identity(3);
        assert!(matches!(StateSpaceModel::series(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn hermitian_min_eig_examples() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert_eq!(hermitian_min_eig(&CMatrix::identity(2, 2)), 1.0);
        let skew = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        assert_eq!(hermitian_min_eig(&skew), 0.0);
        let m = CMatrix::from_row_slice(2, 2, &[c(46.154), c(-30.769), c(30.769), c(46.154)]);
        assert!((hermitian_min_eig(&m) - 46.154).abs() < 1e-9);
        let three = CMatrix::from_row_slice(3, 3, &[c(1.0), c(0.0), c(0.0), c(0.0), c(2.0), c(0.0), c(0.0), c(0.0), c(-3.0)]);
        assert!((hermitian_min_eig(&three) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn hinf_examples() {
        let zero = StateSpaceModel::static_gain(DMatrix::zeros(2, 2));
        assert_eq!(hinf_norm(&zero, HinfMethod::Bisection, HINF_TOL).unwrap().value, 0.0);
        let lag = scalar(-1.0, 1.0, 1.0, 0.0);
        let h = hinf_norm(&lag, HinfMethod::Bisection, HINF_TOL).unwrap();
        assert!((h.value - 1.0).abs() < 1e-8);
        assert_eq!(h.omega, 0.0);
        let z: f64 = 0.1;
        let peak = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        let sys = second_order(z, 1.0);
        let hb = hinf_norm(&sys, HinfMethod::Bisection, HINF_TOL).unwrap();
        assert!((hb.value - peak).abs() < 1e-6, "{} vs {}", hb.value, peak);
        let grid = FrequencyGrid::default_grid();
        let hg = hinf_norm(&sys, HinfMethod::Grid(&grid), HINF_TOL).unwrap();
        assert!((hg.value - peak).abs() < 1e-6);
        assert!(hg.value <= hb.value + 1e-8);
    }

    #[test]
    fn bisection_rejects_unstable() {
        let g = scalar(1.0, 1.0, 1.0, 0.0);
        assert!(matches!(hinf_norm(&g, HinfMethod::Bisection, HINF_TOL), Err(Error::UnstableSystem { .. })));
    }

    #[test]
    fn hurwitz_checks() {
        assert!(scalar(-1.0, 1.0, 1.0, 0.0).is_hurwitz(0.0).unwrap());
        assert!(!scalar(-1.0, 1.0, 1.0, 0.0).is_hurwitz(2.0).unwrap());
    }

    #[test]
    fn minimum_phase_examples() {
        assert!(StateSpaceModel::identity(2).minimum_phase(0.0).unwrap());
        // (s - 1)/(s + 2) = 1 - 3/(s + 2)
        let g = scalar(-2.0, 1.0, -3.0, 1.0);
        assert!(!g.minimum_phase(0.0).unwrap());
        let zs = g.transmission_zeros().unwrap();
        assert_eq!(zs.len(), 1);
        assert!((zs[0].re - 1.0).abs() < 1e-12);
        // strictly proper 1/(s+1): no finite zeros
        assert!(scalar(-1.0, 1.0, 1.0, 0.0).transmission_zeros().unwrap().is_empty());
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(vec![1.0]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 1.0]).is_err());
        let g = FrequencyGrid::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(g.points(), &[1.0, 2.0, 3.0]);
        let d = FrequencyGrid::default_grid();
        assert!(d.len() > 2000 && d.min() == 1e-2 && d.max() == 1e5);
        assert!(d.points().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.doubled().len(), 5);
    }
}

//! Per-component generalized passivity certificate: `Her(m(jw) Y(jw)) > eps`
//! on a frequency grid, with local refinement and endpoint/homotopy checks.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::MultiplierFilter;
use crate::error::{Error, Result};
use crate::linalg::{her_min_eig_2x2, mul_2x2, to_2x2};
use crate::lti::{FrequencyGrid, StateSpaceModel};

/// Default strictness margin.
pub const DEFAULT_EPS: f64 = 1e-6;


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub id: String,
    /// Smallest eigenvalue of `Her(mY)` found on the grid and its refinement.
    pub min_eig: f64,
    /// Frequency where `min_eig` was found (rad/s).
    pub argmin_omega: f64,
    /// Smallest eigenvalue on the plain grid, before refinement.
    pub grid_min_eig: f64,
    /// Grid point closest to the refined minimum.
    pub grid_argmin_omega: f64,
    /// `lambda_min(Her(D_m D_Y))`, the limit as omega grows without bound.
    pub high_frequency_limit: f64,
    /// Value near DC (first grid point scaled down by 1e3), informational.
    pub low_frequency_value: Option<f64>,
    /// Whether `Y` itself is Hurwitz; required for the certificate.
    pub admittance_stable: bool,
    pub pass: bool,
    pub eps: f64,
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub reports: Vec<ComponentReport>,
    pub pass: bool,
    pub multiplier: String,
    pub eps: f64,
    pub warnings: Vec<String>,
}

/// `lambda_min(Her(m(jw) Y(jw)))` at one frequency.
pub fn min_eig_at(m: &MultiplierFilter, y: &StateSpaceModel, omega: f64) -> Result<f64> {
    let mm = m.eval(omega)?;
    let yy = to_2x2(&y.freq_response(omega)?);
    Ok(her_min_eig_2x2(&mul_2x2(&mm, &yy)))
}

fn check_2x2(y: &StateSpaceModel) -> Result<()> {
    if y.inputs() != 2 || y.outputs() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "component must be 2x2 (got {}x{})",
            y.outputs(),
            y.inputs()
        )));
    }
    Ok(())
}

/// Minimum-eigenvalue curve over the grid.
pub fn min_eig_curve(m: &MultiplierFilter, y: &StateSpaceModel, grid: &FrequencyGrid) -> Result<Vec<(f64, f64)>> {
    check_2x2(y)?;
    m.check_nonsingular(grid)?;
    grid.points().iter().map(|&w| Ok((w, min_eig_at(m, y, w)?))).collect()
}

/// Golden-section minimization of `f` on `[lo, hi]` in log frequency.
fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    let (x, v) = crate::lti::golden_max(|w| -f(w), lo, hi, 1e-10);
    (x, -v)
}

pub fn check_component(m: &MultiplierFilter, y: &StateSpaceModel, grid: &FrequencyGrid, eps: f64) -> Result<ComponentReport> {
    check_2x2(y)?;
    let curve = min_eig_curve(m, y, grid)?;
    let pts = grid.points();
    let (imin, &(w_grid, v_grid)) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("grid has at least two points");

    let eval = |w: f64| min_eig_at(m, y, w).unwrap_or(f64::NEG_INFINITY);
    let mut best = (w_grid, v_grid);
    // 4x denser local grid over the two neighboring intervals on each side,
    // then golden-section on the best bracket.
    let lo_i = imin.saturating_sub(2);
    let hi_i = (imin + 2).min(pts.len() - 1);
    let mut local = Vec::new();
    for i in lo_i..hi_i {
        let (a, b) = (pts[i], pts[i + 1]);
        for k in 0..4 {
            let w = a * (b / a).powf(k as f64 / 4.0);
            local.push((w, eval(w)));
        }
    }
    local.push((pts[hi_i], curve[hi_i].1));
    for &(w, v) in &local {
        if v < best.1 {
            best = (w, v);
        }
    }
    let j = local.iter().position(|p| p.0 == best.0).unwrap_or(0);
    let a = local[j.saturating_sub(1)].0.min(best.0);
    let b = local[(j + 1).min(local.len() - 1)].0.max(best.0);
    if b > a {
        let (w, v) = golden_min(eval, a, b);
        if v < best.1 {
            best = (w, v);
        }
    }

    let dm = m.high_frequency_limit();
    let dy = to_2x2(&y.d().map(|x| Complex64::new(x, 0.0)));
    let high_frequency_limit = her_min_eig_2x2(&mul_2x2(&dm, &dy));
    let low_frequency_value = min_eig_at(m, y, grid.min() * 1e-3).ok();
    let admittance_stable = y.order() == 0 || y.is_hurwitz(0.0)?;
    let pass = best.1 > eps && high_frequency_limit >= 0.0 && admittance_stable;
    Ok(ComponentReport {
        id: String::new(),
        min_eig: best.1,
        argmin_omega: best.0,
        grid_min_eig: v_grid,
        grid_argmin_omega: nearest(pts, best.0),
        high_frequency_limit,
        low_frequency_value,
        admittance_stable,
        pass,
        eps,
        grid: grid.descriptor(),
    })
}

fn nearest(pts: &[f64], w: f64) -> f64 {
    *pts.iter().min_by(|a, b| (a.ln() - w.ln()).abs().total_cmp(&(b.ln() - w.ln()).abs())).expect("non-empty")
}

/// Reports at alpha = 0 (reference) and alpha = 1 (target).
pub fn check_endpoints(
    m: &MultiplierFilter,
    y_ref: &StateSpaceModel,
    y: &StateSpaceModel,
    grid: &FrequencyGrid,
    eps: f64,
) -> Result<(ComponentReport, ComponentReport)> {
    Ok((check_component(m, y_ref, grid, eps)?, check_component(m, y, grid, eps)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopySample {
    pub alpha: f64,
    pub min_eig: f64,
    pub argmin_omega: f64,
}

/// Grid minimum of `lambda_min(Her(m [(1 - a) Y_ref + a Y]))` for each alpha.
pub fn sample_homotopy(
    m: &MultiplierFilter,
    y_ref: &StateSpaceModel,
    y: &StateSpaceModel,
    grid: &FrequencyGrid,
    alphas: &[f64],
) -> Result<Vec<HomotopySample>> {
    check_2x2(y_ref)?;
    check_2x2(y)?;
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) || alphas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("alphas must be sorted and within [0, 1]".into()));
    }
    m.check_nonsingular(grid)?;
    let mut resp = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        let mm = m.eval(w)?;
        let a = mul_2x2(&mm, &to_2x2(&y_ref.freq_response(w)?));
        let b = mul_2x2(&mm, &to_2x2(&y.freq_response(w)?));
        resp.push((w, a, b));
    }
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let mut best = HomotopySample { alpha, min_eig: f64::INFINITY, argmin_omega: f64::NAN };
            for (w, a, b) in &resp {
                let mut c = *a;
                for i in 0..2 {
                    for j in 0..2 {
                        c[i][j] = a[i][j] * (1.0 - alpha) + b[i][j] * alpha;
                    }
                }
                let v = her_min_eig_2x2(&c);
                if v < best.min_eig {
                    best.min_eig = v;
                    best.argmin_omega = *w;
                }
            }
            best
        })
        .collect())
}

/// One report per component; the aggregate passes iff every report passes.
pub fn certify_system(
    m: &MultiplierFilter,
    components: &[(String, StateSpaceModel)],
    grid: &FrequencyGrid,
    eps: f64,
) -> Result<Certificate> {
    let mut warnings = Vec::new();
    if components.is_empty() {
        warnings.push("empty component list: certificate holds vacuously".to_string());
    }
    let reports: Result<Vec<ComponentReport>> = components
        .par_iter()
        .map(|(id, y)| {
            let mut r = check_component(m, y, grid, eps)?;
            r.id = id.clone();
            Ok(r)
        })
        .collect();
    let reports = reports?;
    for r in &reports {
        if !r.admittance_stable {
            warnings.push(format!("component `{}` has an unstable admittance", r.id));
        }
    }
    Ok(Certificate {
        pass: reports.iter().all(|r| r.pass),
        reports,
        multiplier: m.fingerprint(),
        eps,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::*;

    fn line() -> StateSpaceModel {
        line_admittance(&LineParams::from_rx(0.01, 0.015, OMEGA0_50HZ).unwrap()).unwrap()
    }

    fn gfm(mp: f64, nq: f64) -> StateSpaceModel {
        gfm_default_admittance(&GfmParams::default().with_droop(mp, nq)).unwrap()
    }

    #[test]
    fn identity_multiplier_certifies_line() {
        let r = check_component(&MultiplierFilter::identity(), &line(), &FrequencyGrid::default(), DEFAULT_EPS).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn identity_multiplier_rejects_gfm_at_low_frequency() {
        let r = check_component(&MultiplierFilter::identity(), &gfm(0.01, 0.01), &FrequencyGrid::default(), DEFAULT_EPS)
            .unwrap();
        assert!(!r.pass);
        assert!(r.argmin_omega < OMEGA0_50HZ, "argmin {}", r.argmin_omega);
    }

    #[test]
    fn piecewise_rotation_fixes_low_frequency_band() {
        let y = gfm(0.003, 0.01);
        let m = MultiplierFilter::piecewise(OMEGA0_50HZ).unwrap();
        for w in [0.1, 1.0, 10.0] {
            assert!(min_eig_at(&MultiplierFilter::identity(), &y, w).unwrap() < 0.0);
            assert!(min_eig_at(&m, &y, w).unwrap() > 0.0);
        }
    }

    #[test]
    fn refinement_never_raises_minimum() {
        let g = FrequencyGrid::default();
        let r = check_component(&MultiplierFilter::identity(), &gfm(0.01, 0.01), &g, 0.0).unwrap();
        assert!(r.min_eig <= r.grid_min_eig);
        assert!(g.points().contains(&r.grid_argmin_omega));
    }

    #[test]
    fn degenerate_homotopy_endpoints_match() {
        let y = line();
        let (a, b) = check_endpoints(&MultiplierFilter::identity(), &y, &y, &FrequencyGrid::default(), DEFAULT_EPS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn homotopy_with_two_alphas_matches_endpoints() {
        let g = FrequencyGrid::logspace(1e-1, 1e4, 200).unwrap();
        let m = MultiplierFilter::identity();
        let (yr, y) = (line(), gfm(0.01, 0.01));
        let s = sample_homotopy(&m, &yr, &y, &g, &[0.0, 1.0]).unwrap();
        let (a, b) = check_endpoints(&m, &yr, &y, &g, 0.0).unwrap();
        assert_eq!(s[0].min_eig, a.grid_min_eig);
        assert_eq!(s[1].min_eig, b.grid_min_eig);
        // failing endpoint: the curve crosses zero somewhere along alpha
        let alphas: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let s = sample_homotopy(&m, &yr, &y, &g, &alphas).unwrap();
        assert!(s.first().unwrap().min_eig > 0.0 && s.last().unwrap().min_eig < 0.0);
    }

    #[test]
    fn aggregate_is_conjunction() {
        let comps = vec![("gfm".to_string(), gfm(0.01, 0.01)), ("line".to_string(), line())];
        let c = certify_system(&MultiplierFilter::identity(), &comps, &FrequencyGrid::default(), DEFAULT_EPS).unwrap();
        assert!(!c.pass);
        assert!(!c.reports[0].pass && c.reports[1].pass);
        let empty = certify_system(&MultiplierFilter::identity(), &[], &FrequencyGrid::default(), DEFAULT_EPS).unwrap();
        assert!(empty.pass && !empty.warnings.is_empty());
    }

    #[test]
    fn multiplier_scaling_scales_minimum() {
        let g = FrequencyGrid::logspace(1e-1, 1e4, 300).unwrap();
        let y = gfm(0.01, 0.01);
        let base = min_eig_curve(&MultiplierFilter::identity(), &y, &g).unwrap();
        let c = 2.5;
        let scaled = MultiplierFilter::rational(StateSpaceModel::static_gain(nalgebra::DMatrix::identity(2, 2)))
            .unwrap();
        // c*I is not a valid rational multiplier (D must be I); scale the admittance instead.
        let y_scaled = y.scaled(c);
        let s = min_eig_curve(&scaled, &y_scaled, &g).unwrap();
        for (a, b) in base.iter().zip(&s) {
            assert!((b.1 - c * a.1).abs() <= 1e-10 * (1.0 + b.1.abs()));
        }
    }
}

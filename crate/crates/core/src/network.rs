//! Interconnected small-signal models: topology files, descriptor assembly
//! with algebraic bus voltages, finite spectra and the validation experiments
//! (droop sweep, random allocation, homotopy trajectories).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::certify_system;
use crate::components::{gfm_default_admittance, line_admittance, GfmParams, LineParams, MultiplierFilter, OMEGA0_50HZ};
use crate::error::{Error, Result};
use crate::linalg::{semi_explicit_finite_eigenvalues, singular_values_c, sort_by_real_desc, CMatrix};
use crate::lti::{FrequencyGrid, StateSpaceModel};

/// Default stability margin on the spectral abscissa (rad/s).
pub const STABILITY_MARGIN: f64 = 1e-6;
/// Generalized eigenvalues above this magnitude are treated as infinite.
pub const INFINITE_EIGENVALUE: f64 = 1e10;
/// Real-part band reported as near-axis.
pub const NEAR_AXIS: f64 = 1e-3;

pub const TWO_BUS_JSON: &str = include_str!("../data/two_bus.json");
pub const IEEE39_JSON: &str = include_str!("../data/ieee39.json");
pub const TWO_BUS_WEAK_DAMPING_JSON: &str = include_str!("../data/two_bus_weak_damping.json");

// ---------------------------------------------------------------------------
// File format

/// Branch entry; exactly one of `x` (reactance at `omega0`) or `l` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

/// Constant-impedance load, either as a series RL branch to ground or as
/// consumed power at unit voltage (`p`, `q` per unit on the system base).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub bus: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceKind {
    Gfm {
        #[serde(default)]
        params: GfmParams,
    },
    /// Ideal voltage source: the bus voltage perturbation is zero.
    InfiniteBus,
    /// Passive series RL shunt (used as the homotopy reference device).
    Rl { r: f64, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub bus: u32,
    #[serde(flatten)]
    pub kind: DeviceKind,
}

fn default_omega0() -> f64 {
    OMEGA0_50HZ
}

/// On-disk network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default)]
    pub name: String,
    pub base_mva: f64,
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    pub buses: Vec<u32>,
    pub lines: Vec<BranchSpec>,
    #[serde(default)]
    pub loads: Vec<LoadSpec>,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

// ---------------------------------------------------------------------------
// Validated topology

/// Series RL element; `to == None` means a shunt to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: Option<u32>,
    pub r: f64,
    /// Inductance, `X / omega0`.
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub bus: u32,
    pub kind: DeviceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub name: String,
    pub base_mva: f64,
    pub omega0: f64,
    pub buses: Vec<u32>,
    pub lines: Vec<Branch>,
    pub loads: Vec<Branch>,
    pub devices: Vec<Device>,
}

fn branch_l(x: Option<f64>, l: Option<f64>, omega0: f64, what: &str) -> Result<f64> {
    match (x, l) {
        (Some(x), None) => Ok(x / omega0),
        (None, Some(l)) => Ok(l),
        _ => Err(Error::Validation(format!("{what}: give exactly one of `x` or `l`"))),
    }
}

impl NetworkTopology {
    pub fn from_file(f: &NetworkFile) -> Result<Self> {
        if !(f.base_mva > 0.0) || !(f.omega0 > 0.0) {
            return Err(Error::Validation("base_mva and omega0 must be positive".into()));
        }
        let mut lines = Vec::with_capacity(f.lines.len());
        for (i, b) in f.lines.iter().enumerate() {
            let what = format!("lines[{i}] ({}-{})", b.from, b.to);
            lines.push(Branch { from: b.from, to: Some(b.to), r: b.r, l: branch_l(b.x, b.l, f.omega0, &what)? });
        }
        let mut loads = Vec::with_capacity(f.loads.len());
        for (i, ld) in f.loads.iter().enumerate() {
            let what = format!("loads[{i}] (bus {})", ld.bus);
            let (r, l) = match (ld.r, ld.x, ld.p, ld.q) {
                (Some(r), Some(x), None, None) => (r, x / f.omega0),
                (None, None, Some(p), q) => {
                    // Z = V^2 / conj(S) at V = 1; capacitive parts are dropped.
                    let q = q.unwrap_or(0.0).max(0.0);
                    let s2 = p * p + q * q;
                    if !(p > 0.0) {
                        return Err(Error::Validation(format!("{what}: p must be positive")));
                    }
                    (p / s2, q / s2 / f.omega0)
                }
                _ => return Err(Error::Validation(format!("{what}: give either (r, x) or (p[, q])"))),
            };
            loads.push(Branch { from: ld.bus, to: None, r, l });
        }
        let devices = f.devices.iter().map(|d| Device { bus: d.bus, kind: d.kind.clone() }).collect();
        let t = Self { name: f.name.clone(), base_mva: f.base_mva, omega0: f.omega0, buses: f.buses.clone(), lines, loads, devices };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<u32> = self.buses.iter().copied().collect();
        if ids.len() != self.buses.len() {
            return Err(Error::Validation("duplicate bus id".into()));
        }
        if ids.is_empty() {
            return Err(Error::Validation("network has no buses".into()));
        }
        for b in &self.lines {
            let ends = [Some(b.from), b.to];
            for e in ends.into_iter().flatten() {
                if !ids.contains(&e) {
                    return Err(Error::Validation(format!("branch endpoint {e} is not a bus")));
                }
            }
            if b.to == Some(b.from) {
                return Err(Error::Validation(format!("branch {}-{} is a self loop", b.from, b.from)));
            }
            if !(b.r >= 0.0 && b.l > 0.0 && b.r.is_finite() && b.l.is_finite()) {
                return Err(Error::Validation(format!(
                    "branch at bus {} needs R >= 0 and L > 0 (got R={}, L={})",
                    b.from, b.r, b.l
                )));
            }
        }
        for b in &self.loads {
            if !ids.contains(&b.from) {
                return Err(Error::Validation(format!("load bus {} is not a bus", b.from)));
            }
            // Purely resistive loads are static conductances.
            if !(b.r > 0.0 && b.l >= 0.0 && b.r.is_finite() && b.l.is_finite()) {
                return Err(Error::Validation(format!(
                    "load at bus {} needs R > 0 and L >= 0 (got R={}, L={})",
                    b.from, b.r, b.l
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for d in &self.devices {
            if !ids.contains(&d.bus) {
                return Err(Error::Validation(format!("device bus {} is not a bus", d.bus)));
            }
            if !seen.insert(d.bus) {
                return Err(Error::Validation(format!("more than one device at bus {}", d.bus)));
            }
            match &d.kind {
                DeviceKind::Gfm { params } => {
                    params.validate()?;
                    if (params.omega0 - self.omega0).abs() > 1e-9 * self.omega0 {
                        return Err(Error::FrameMismatch(format!(
                            "device at bus {} rotates at {} rad/s, network at {}",
                            d.bus, params.omega0, self.omega0
                        )));
                    }
                }
                DeviceKind::Rl { r, x } => {
                    LineParams::from_rx(*r, *x, self.omega0)?;
                }
                DeviceKind::InfiniteBus => {}
            }
        }
        // Connectivity through lines.
        let index: BTreeMap<u32, usize> = self.buses.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut parent: Vec<usize> = (0..self.buses.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for b in &self.lines {
            let (x, y) = (find(&mut parent, index[&b.from]), find(&mut parent, index[&b.to.expect("line")]));
            parent[x] = y;
        }
        let root = find(&mut parent, 0);
        if (0..self.buses.len()).any(|i| find(&mut parent, i) != root) {
            return Err(Error::Validation("network graph is not connected".into()));
        }
        Ok(())
    }

    /// Applies `(m_p, n_q)` to every inverter.
    pub fn with_droop(&self, m_p: f64, n_q: f64) -> Self {
        let mut t = self.clone();
        for d in &mut t.devices {
            if let DeviceKind::Gfm { params } = &mut d.kind {
                params.m_p = m_p;
                params.n_q = n_q;
            }
        }
        t
    }

    /// Same network with every inverter replaced by a passive RL shunt.
    pub fn passive_reference(&self, r: f64, x: f64) -> Self {
        let mut t = self.clone();
        for d in &mut t.devices {
            if matches!(d.kind, DeviceKind::Gfm { .. }) {
                d.kind = DeviceKind::Rl { r, x };
            }
        }
        t
    }

    /// Buses carrying an inverter.
    pub fn gfm_buses(&self) -> Vec<u32> {
        self.devices.iter().filter(|d| matches!(d.kind, DeviceKind::Gfm { .. })).map(|d| d.bus).collect()
    }

    /// Keeps only the inverters at `buses` (other devices untouched).
    pub fn with_gfms_at(&self, buses: &[u32]) -> Self {
        let keep: BTreeSet<u32> = buses.iter().copied().collect();
        let mut t = self.clone();
        t.devices.retain(|d| !matches!(d.kind, DeviceKind::Gfm { .. }) || keep.contains(&d.bus));
        t
    }

    /// Renames buses through `map` (must be a bijection onto new ids).
    pub fn relabeled(&self, map: &BTreeMap<u32, u32>) -> Self {
        let f = |b: u32| map.get(&b).copied().unwrap_or(b);
        let mut t = self.clone();
        t.buses = self.buses.iter().map(|b| f(*b)).collect();
        for br in t.lines.iter_mut().chain(t.loads.iter_mut()) {
            br.from = f(br.from);
            br.to = br.to.map(f);
        }
        for d in &mut t.devices {
            d.bus = f(d.bus);
        }
        t
    }

    fn infinite_buses(&self) -> BTreeSet<u32> {
        self.devices.iter().filter(|d| matches!(d.kind, DeviceKind::InfiniteBus)).map(|d| d.bus).collect()
    }
}

pub fn parse_network(text: &str, origin: &str) -> Result<NetworkTopology> {
    let f: NetworkFile = crate::io::parse_json(text, origin)?;
    NetworkTopology::from_file(&f)
}

pub fn load_network(path: &Path) -> Result<NetworkTopology> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text, &path.display().to_string())
}

/// Bundled networks by name (`two_bus`, `two_bus_weak_damping`, `ieee39`).
pub fn bundled_network(name: &str) -> Result<NetworkTopology> {
    match name {
        "two_bus" => parse_network(TWO_BUS_JSON, "two_bus.json"),
        "two_bus_weak_damping" => parse_network(TWO_BUS_WEAK_DAMPING_JSON, "two_bus_weak_damping.json"),
        "ieee39" => parse_network(IEEE39_JSON, "ieee39.json"),
        other => Err(Error::Validation(format!("unknown bundled network `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Component models

/// Inverter parameters as placed in the network (system base applied).
pub fn placed_gfm(topo: &NetworkTopology, params: &GfmParams) -> GfmParams {
    let mut p = params.clone();
    p.s_base = topo.base_mva;
    p
}

/// Admittance of every device that has dynamics, keyed by bus.
pub fn device_models(topo: &NetworkTopology) -> Result<BTreeMap<u32, StateSpaceModel>> {
    let built: Vec<Option<(u32, StateSpaceModel)>> = topo
        .devices
        .par_iter()
        .map(|d| match &d.kind {
            DeviceKind::Gfm { params } => Ok(Some((d.bus, gfm_default_admittance(&placed_gfm(topo, params))?))),
            DeviceKind::Rl { r, x } => Ok(Some((d.bus, line_admittance(&LineParams::from_rx(*r, *x, topo.omega0)?)?))),
            DeviceKind::InfiniteBus => Ok(None),
        })
        .collect::<Result<_>>()?;
    Ok(built.into_iter().flatten().collect())
}

fn branch_model(b: &Branch, omega0: f64) -> StateSpaceModel {
    let (r, l) = (b.r, b.l);
    if l == 0.0 {
        return StateSpaceModel::static_gain(DMatrix::identity(2, 2) / r);
    }
    StateSpaceModel::new(
        DMatrix::from_row_slice(2, 2, &[-r / l, omega0, -omega0, -r / l]),
        DMatrix::identity(2, 2) / l,
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 2),
    )
    .expect("2x2 branch")
}

/// Every component admittance of the network (devices, lines and loads) for
/// the per-component certificate. Infinite buses are ideal sources and carry
/// no admittance.
pub fn component_admittances(
    topo: &NetworkTopology,
    models: &BTreeMap<u32, StateSpaceModel>,
) -> Vec<(String, StateSpaceModel)> {
    let mut out = Vec::new();
    for d in &topo.devices {
        if let Some(y) = models.get(&d.bus) {
            let tag = match d.kind {
                DeviceKind::Gfm { .. } => "gfm",
                DeviceKind::Rl { .. } => "rl",
                DeviceKind::InfiniteBus => continue,
            };
            out.push((format!("{tag}@{}", d.bus), y.clone()));
        }
    }
    for b in &topo.lines {
        out.push((format!("line {}-{}", b.from, b.to.unwrap_or(0)), branch_model(b, topo.omega0)));
    }
    for b in &topo.loads {
        out.push((format!("load@{}", b.from), branch_model(b, topo.omega0)));
    }
    out
}

// ---------------------------------------------------------------------------
// Descriptor assembly

/// `E z' = A z` with `E = diag(I, 0)`: the first `n_dynamic` unknowns are
/// states (device states, branch currents), the rest are bus voltages whose
/// rows are KCL.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorModel {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub labels: Vec<String>,
    pub n_dynamic: usize,
}

impl DescriptorModel {
    pub fn size(&self) -> usize {
        self.a.nrows()
    }
}

/// Stacks device dynamics, branch dynamics
/// `L i' = -R i - omega0 L J i + (v_from - v_to)` and one KCL row pair per
/// non-infinite bus (the sum of currents drawn from the bus vanishes).
pub fn assemble(topo: &NetworkTopology, models: &BTreeMap<u32, StateSpaceModel>) -> Result<DescriptorModel> {
    let inf = topo.infinite_buses();
    let vbuses: Vec<u32> = topo.buses.iter().copied().filter(|b| !inf.contains(b)).collect();
    let vidx: BTreeMap<u32, usize> = vbuses.iter().enumerate().map(|(i, b)| (*b, i)).collect();

    let mut dyn_devices = Vec::new();
    for d in &topo.devices {
        if matches!(d.kind, DeviceKind::InfiniteBus) {
            continue;
        }
        let y = models.get(&d.bus).ok_or(Error::MissingDeviceModel(d.bus as usize))?;
        if y.inputs() != 2 || y.outputs() != 2 {
            return Err(Error::FrameMismatch(format!("device at bus {} is not a 2x2 dq model", d.bus)));
        }
        dyn_devices.push((d.bus, y));
    }
    let nx: usize = dyn_devices.iter().map(|(_, y)| y.order()).sum();
    let branches: Vec<&Branch> = topo.lines.iter().chain(&topo.loads).filter(|b| b.l > 0.0).collect();
    let conductances: Vec<&Branch> = topo.loads.iter().filter(|b| b.l == 0.0).collect();
    let nd = nx + 2 * branches.len();
    let nv = 2 * vbuses.len();
    let n = nd + nv;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut labels = Vec::with_capacity(n);
    let vcol = |bus: u32| vidx.get(&bus).map(|i| nd + 2 * i);
    let krow = vcol;

    let mut off = 0;
    for (bus, y) in &dyn_devices {
        let k = y.order();
        a.view_mut((off, off), (k, k)).copy_from(y.a());
        if let Some(c) = vcol(*bus) {
            a.view_mut((off, c), (k, 2)).copy_from(y.b());
            let r = krow(*bus).expect("voltage bus");
            let mut blk = a.view_mut((r, off), (2, k));
            blk += y.c();
            let mut dblk = a.view_mut((r, c), (2, 2));
            dblk += y.d();
        }
        for i in 0..k {
            labels.push(format!("dev{bus}.x{i}"));
        }
        off += k;
    }
    for b in &branches {
        let (r, l, w0) = (b.r, b.l, topo.omega0);
        a[(off, off)] = -r / l;
        a[(off, off + 1)] = w0;
        a[(off + 1, off)] = -w0;
        a[(off + 1, off + 1)] = -r / l;
        for (bus, sign) in [(Some(b.from), 1.0), (b.to, -1.0)] {
            let Some(bus) = bus else { continue };
            if let Some(c) = vcol(bus) {
                a[(off, c)] += sign / l;
                a[(off + 1, c + 1)] += sign / l;
                let r = krow(bus).expect("voltage bus");
                a[(r, off)] += sign;
                a[(r + 1, off + 1)] += sign;
            }
        }
        let tag = match b.to {
            Some(t) => format!("line{}-{}", b.from, t),
            None => format!("load{}", b.from),
        };
        labels.push(format!("{tag}.id"));
        labels.push(format!("{tag}.iq"));
        off += 2;
    }
    for b in &conductances {
        if let Some(c) = vcol(b.from) {
            a[(c, c)] += 1.0 / b.r;
            a[(c + 1, c + 1)] += 1.0 / b.r;
        }
    }
    for b in &vbuses {
        labels.push(format!("bus{b}.vd"));
        labels.push(format!("bus{b}.vq"));
    }
    let mut e = DMatrix::zeros(n, n);
    for i in 0..nd {
        e[(i, i)] = 1.0;
    }
    Ok(DescriptorModel { e, a, labels, n_dynamic: nd })
}

/// `Y_net(s) + Y_D(s)` over the non-infinite buses (2x2 blocks, bus order).
pub fn total_admittance(
    topo: &NetworkTopology,
    models: &BTreeMap<u32, StateSpaceModel>,
    s: Complex64,
) -> Result<CMatrix> {
    let inf = topo.infinite_buses();
    let vbuses: Vec<u32> = topo.buses.iter().copied().filter(|b| !inf.contains(b)).collect();
    let vidx: BTreeMap<u32, usize> = vbuses.iter().enumerate().map(|(i, b)| (*b, i)).collect();
    let mut y = CMatrix::zeros(2 * vbuses.len(), 2 * vbuses.len());
    let mut stamp = |i: usize, j: usize, blk: &CMatrix, sign: f64| {
        for r in 0..2 {
            for c in 0..2 {
                y[(2 * i + r, 2 * j + c)] += blk[(r, c)] * sign;
            }
        }
    };
    for d in &topo.devices {
        if matches!(d.kind, DeviceKind::InfiniteBus) {
            continue;
        }
        let m = models.get(&d.bus).ok_or(Error::MissingDeviceModel(d.bus as usize))?;
        if let Some(&i) = vidx.get(&d.bus) {
            stamp(i, i, &m.eval(s)?, 1.0);
        }
    }
    for b in topo.lines.iter().chain(&topo.loads) {
        let yb = branch_model(b, topo.omega0).eval(s)?;
        let f = vidx.get(&b.from).copied();
        let t = b.to.and_then(|t| vidx.get(&t).copied());
        if let Some(f) = f {
            stamp(f, f, &yb, 1.0);
        }
        if let Some(t) = t {
            stamp(t, t, &yb, 1.0);
        }
        if let (Some(f), Some(t)) = (f, t) {
            stamp(f, t, &yb, -1.0);
            stamp(t, f, &yb, -1.0);
        }
    }
    Ok(y)
}

/// Relative smallest singular value of `Y_tot(s)`; vanishes at network modes
/// that are not also component poles.
pub fn kcl_singularity(topo: &NetworkTopology, models: &BTreeMap<u32, StateSpaceModel>, s: Complex64) -> Result<f64> {
    let y = total_admittance(topo, models, s)?;
    let sv = singular_values_c(&y);
    let (hi, lo) = (sv.first().copied().unwrap_or(0.0), sv.last().copied().unwrap_or(0.0));
    Ok(if hi > 0.0 { lo / hi } else { 0.0 })
}

// ---------------------------------------------------------------------------
// Spectra

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Finite eigenvalues sorted by real part, descending.
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
    pub stable: bool,
    pub margin: f64,
    /// Eigenvalues with `|Re| < NEAR_AXIS`.
    pub near_axis: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub allocation: Vec<u32>,
}

/// Finite generalized eigenvalues of the descriptor pencil.
pub fn finite_eigenvalues(model: &DescriptorModel, margin: f64) -> Result<StabilityReport> {
    let nd = model.n_dynamic;
    let n = model.size();
    let a = &model.a;
    let mut eig = semi_explicit_finite_eigenvalues(
        &a.view((0, 0), (nd, nd)).into_owned(),
        &a.view((0, nd), (nd, n - nd)).into_owned(),
        &a.view((nd, 0), (n - nd, nd)).into_owned(),
        &a.view((nd, nd), (n - nd, n - nd)).into_owned(),
    )?;
    eig.retain(|z| z.norm() <= INFINITE_EIGENVALUE);
    Ok(report_from(eig, margin))
}

fn report_from(mut eig: Vec<Complex64>, margin: f64) -> StabilityReport {
    sort_by_real_desc(&mut eig);
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let near_axis = eig.iter().copied().filter(|z| z.re.abs() < NEAR_AXIS).collect();
    StabilityReport {
        abscissa,
        stable: abscissa < -margin,
        margin,
        near_axis,
        eigenvalues: eig,
        seed: None,
        trial: None,
        allocation: Vec::new(),
    }
}

/// Device models, assembly and spectrum in one call.
pub fn network_spectrum(topo: &NetworkTopology, margin: f64) -> Result<StabilityReport> {
    let models = device_models(topo)?;
    finite_eigenvalues(&assemble(topo, &models)?, margin)
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m_p: f64,
    pub n_q: f64,
    pub certified: bool,
    pub stable: bool,
    /// Smallest certificate eigenvalue over all components.
    pub min_eig: f64,
    pub abscissa: f64,
}

pub const SWEEP_COLUMNS: [&str; 6] = ["m_p", "n_q", "certified", "stable", "min_eig", "abscissa"];

impl SweepPoint {
    pub fn csv_row(&self) -> Vec<String> {
        use crate::io::fmt_f64;
        vec![
            fmt_f64(self.m_p),
            fmt_f64(self.n_q),
            u8::from(self.certified).to_string(),
            u8::from(self.stable).to_string(),
            fmt_f64(self.min_eig),
            fmt_f64(self.abscissa),
        ]
    }
}

/// Certificate and eigenvalue verdict for every `(m_p, n_q)` pair, `m_p`
/// major. All inverters in `topo` receive the same droop gains.
pub fn droop_sweep(
    topo: &NetworkTopology,
    m: &MultiplierFilter,
    mp_grid: &[f64],
    nq_grid: &[f64],
    grid: &FrequencyGrid,
    eps: f64,
) -> Result<Vec<SweepPoint>> {
    let pairs: Vec<(f64, f64)> = mp_grid.iter().flat_map(|&mp| nq_grid.iter().map(move |&nq| (mp, nq))).collect();
    pairs
        .par_iter()
        .map(|&(m_p, n_q)| {
            let t = topo.with_droop(m_p, n_q);
            let models = device_models(&t)?;
            let comps = component_admittances(&t, &models);
            let cert = certify_system(m, &comps, grid, eps)?;
            let min_eig = cert.reports.iter().map(|r| r.min_eig).fold(f64::INFINITY, f64::min);
            let spec = finite_eigenvalues(&assemble(&t, &models)?, STABILITY_MARGIN)?;
            Ok(SweepPoint { m_p, n_q, certified: cert.pass, stable: spec.stable, min_eig, abscissa: spec.abscissa })
        })
        .collect()
}

/// Inverter buses for one trial: uniform sample without replacement, sorted.
pub fn random_allocation(slots: &[u32], n_devices: usize, seed: u64, trial: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut pick: Vec<u32> = rand::seq::index::sample(&mut rng, slots.len(), n_devices).into_iter().map(|i| slots[i]).collect();
    pick.sort_unstable();
    pick
}

/// Places `n_devices` inverters on random inverter slots of `topo` for each
/// trial and computes the full spectrum.
pub fn random_allocation_experiment(
    topo: &NetworkTopology,
    n_trials: usize,
    n_devices: usize,
    seed: u64,
    margin: f64,
) -> Result<Vec<StabilityReport>> {
    let slots = topo.gfm_buses();
    if n_devices > slots.len() {
        return Err(Error::Validation(format!(
            "{n_devices} inverters requested but only {} slots exist",
            slots.len()
        )));
    }
    if n_trials == 0 {
        return Ok(Vec::new());
    }
    let all = device_models(topo)?;
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let alloc = random_allocation(&slots, n_devices, seed, trial);
            let t = topo.with_gfms_at(&alloc);
            let models: BTreeMap<u32, StateSpaceModel> =
                all.iter().filter(|(b, _)| t.devices.iter().any(|d| d.bus == **b)).map(|(b, y)| (*b, y.clone())).collect();
            let mut rep = finite_eigenvalues(&assemble(&t, &models)?, margin)?;
            rep.seed = Some(seed);
            rep.trial = Some(trial);
            rep.allocation = alloc;
            Ok(rep)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyPoint {
    pub alpha: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Per eigenvalue: its real part changed sign since the previous sample.
    pub crossing: Vec<bool>,
}

impl HomotopyPoint {
    pub fn crossings(&self) -> usize {
        self.crossing.iter().filter(|c| **c).count()
    }
}

pub const LOCI_COLUMNS: [&str; 4] = ["alpha", "re", "im", "crossing_flag"];

/// Greedy nearest-neighbour matching of `cur` to `prev`; flags sign changes
/// of the real part along matched pairs.
pub fn flag_crossings(prev: &[Complex64], cur: &[Complex64]) -> Vec<bool> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * cur.len());
    for (i, c) in cur.iter().enumerate() {
        for (j, p) in prev.iter().enumerate() {
            pairs.push(((c - p).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_c = vec![false; cur.len()];
    let mut used_p = vec![false; prev.len()];
    let mut flags = vec![false; cur.len()];
    for (_, i, j) in pairs {
        if used_c[i] || used_p[j] {
            continue;
        }
        used_c[i] = true;
        used_p[j] = true;
        flags[i] = (cur[i].re >= 0.0) != (prev[j].re >= 0.0);
    }
    flags
}

/// Spectra of the affine family `Y_k(s, a) = (1 - a) Y_ref,k(s) + a Y_k(s)`
/// over `alphas`. Both topologies must share buses and branches and place
/// their devices on the same buses. Every sample uses the same state set (both
/// endpoint models), so at `a = 0` and `a = 1` the spectrum also contains the
/// decoupled modes of the inactive model; crossings are flagged between
/// consecutive samples of equal size.
pub fn homotopy_trajectory(topo_ref: &NetworkTopology, topo: &NetworkTopology, alphas: &[f64]) -> Result<Vec<HomotopyPoint>> {
    if topo_ref.buses != topo.buses || topo_ref.lines != topo.lines || topo_ref.loads != topo.loads {
        return Err(Error::Validation("homotopy endpoints must share buses and branches".into()));
    }
    let kinds = |t: &NetworkTopology| {
        t.devices.iter().map(|d| (d.bus, matches!(d.kind, DeviceKind::InfiniteBus))).collect::<Vec<_>>()
    };
    if kinds(topo_ref) != kinds(topo) {
        return Err(Error::Validation("homotopy endpoints must place devices on the same buses".into()));
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidParams("alpha samples must lie in [0, 1]".into()));
    }
    let m0 = device_models(topo_ref)?;
    let m1 = device_models(topo)?;
    let spectra: Vec<Vec<Complex64>> = alphas
        .par_iter()
        .map(|&alpha| {
            let models: BTreeMap<u32, StateSpaceModel> = m0
                .iter()
                .map(|(b, y0)| Ok((*b, StateSpaceModel::weighted_sum(1.0 - alpha, y0, alpha, &m1[b])?)))
                .collect::<Result<_>>()?;
            Ok(finite_eigenvalues(&assemble(topo, &models)?, 0.0)?.eigenvalues)
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<HomotopyPoint> = Vec::with_capacity(alphas.len());
    for (&alpha, eig) in alphas.iter().zip(spectra) {
        let crossing = match out.last() {
            Some(prev) => flag_crossings(&prev.eigenvalues, &eig),
            None => vec![false; eig.len()],
        };
        out.push(HomotopyPoint { alpha, eigenvalues: eig, crossing });
    }
    Ok(out)
}

/// Evenly spaced samples `0, 1/(n-1), ..., 1`.
pub fn alpha_samples(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

//! Builds meshes, covers, weights and fields from a run configuration.

use std::sync::Arc;

use cdr_core::complex::{BlockIndex, Cochain, Complex, Weights};
use cdr_core::cover::build_cover;
use cdr_core::hodge::HodgeProblem;
use cdr_core::mesh::{build_interval_mesh, build_triangle_mesh, Mesh};
use cdr_core::models::{self, InclusionConfig, MultiContinuumConfig, RodsConfig, ScalarFn};

use crate::config::{
    FieldConfig, LoadedConfig, MeshConfig, ModelConfig, SetConfig, SetRef, WeightsConfig,
};
use crate::error::CliError;

/// Everything a command needs about the discrete problem.
pub struct Setup {
    pub complex: Arc<Complex>,
    pub weights: Weights,
    pub degree: usize,
    pub set_names: Vec<String>,
    /// Quadrature load of a model preset.
    pub model_load: Option<Vec<f64>>,
}

impl Setup {
    /// The Hodge-Laplace problem: model forcing or the `[source]` field.
    pub fn problem(&self, cfg: &LoadedConfig) -> Result<HodgeProblem, CliError> {
        match &self.model_load {
            Some(load) => Ok(HodgeProblem::from_load(Arc::clone(&self.complex), 0, self.weights.clone(), load.clone())?),
            None => {
                let source = cfg.config.source.clone().unwrap_or_default();
                let phi = self.field(cfg, "source", self.degree, &source)?;
                Ok(HodgeProblem::from_source(Arc::clone(&self.complex), self.degree, self.weights.clone(), &phi)?)
            }
        }
    }

    /// de Rham map of a configured field at degree `k`.
    pub fn field(&self, cfg: &LoadedConfig, key: &str, k: usize, field: &FieldConfig) -> Result<Cochain, CliError> {
        let overrides = field
            .blocks
            .iter()
            .map(|b| Ok((self.resolve(cfg, key, b.index.as_deref())?, b.p, b.value.clone())))
            .collect::<Result<Vec<_>, CliError>>()?;
        let out = models::de_rham(&self.complex, k, |block, x| {
            overrides
                .iter()
                .rev()
                .find(|(idx, p, _)| matches(block, idx.as_deref(), *p))
                .map_or_else(|| field.default.eval(x), |(_, _, v)| v.eval(x))
        })
        .map_err(|e| cfg.error(key, e.to_string()))?;
        if out.values().iter().any(|v| !v.is_finite()) {
            return Err(cfg.error(key, format!("[{key}] evaluates to a non-finite value")).into());
        }
        Ok(out)
    }

    fn resolve(&self, cfg: &LoadedConfig, key: &str, refs: Option<&[SetRef]>) -> Result<Option<Vec<usize>>, CliError> {
        resolve(&self.set_names, cfg, key, refs)
    }
}

/// Sorted cover indices of a multi-index given by set references.
fn resolve(names: &[String], cfg: &LoadedConfig, key: &str, refs: Option<&[SetRef]>) -> Result<Option<Vec<usize>>, CliError> {
    let Some(refs) = refs else { return Ok(None) };
    let mut idx = refs
        .iter()
        .map(|r| match r {
            SetRef::Index(i) if *i < names.len() => Ok(*i),
            SetRef::Index(i) => Err(cfg.error_at_value("index", &i.to_string(), format!("set index {i} out of range"))),
            SetRef::Name(n) => names
                .iter()
                .position(|s| s == n)
                .ok_or_else(|| cfg.error_at_value("index", &format!("\"{n}\""), format!("unknown set `{n}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    idx.sort_unstable();
    if idx.windows(2).any(|w| w[0] == w[1]) || idx.is_empty() {
        return Err(cfg.error_at_value("index", "[", format!("[{key}] multi-index needs distinct sets")).into());
    }
    Ok(Some(idx))
}

fn matches(block: &BlockIndex, idx: Option<&[usize]>, p: Option<usize>) -> bool {
    idx.is_none_or(|i| i == block.idx.indices()) && p.is_none_or(|p| p == block.p)
}

pub fn build(cfg: &LoadedConfig) -> Result<Setup, CliError> {
    let c = &cfg.config;
    match &c.model {
        Some(model) => {
            if c.mesh.is_some() || c.cover.is_some() {
                return Err(cfg.error("model", "[model] replaces [mesh] and [cover]; remove one of them").into());
            }
            if c.weights.is_some() {
                return Err(cfg.error("weights", "model presets define their own weights").into());
            }
            if c.source.is_some() {
                return Err(cfg.error("source", "model presets take their forcing from [model]").into());
            }
            if c.problem.degree != 0 {
                return Err(cfg.error("degree", "model presets are degree-0 problems").into());
            }
            let problem = build_model(cfg, model, &ModelOverrides::default())?;
            let names = (0..problem.complex.cover().num_sets()).map(|i| i.to_string()).collect();
            Ok(Setup {
                complex: Arc::clone(&problem.complex),
                weights: problem.weights,
                degree: 0,
                set_names: names,
                model_load: Some(problem.load),
            })
        }
        None => {
            let mesh_cfg = c.mesh.as_ref().ok_or_else(|| cfg.error("mesh", "either [model] or [mesh] and [cover] is required"))?;
            let cover_cfg = c.cover.as_ref().ok_or_else(|| cfg.error("cover", "[cover] with at least one set is required"))?;
            let mesh = Arc::new(build_mesh(cfg, mesh_cfg)?);
            let sets = cover_cfg
                .sets
                .iter()
                .enumerate()
                .map(|(i, s)| cells_of(cfg, &mesh, i, s))
                .collect::<Result<Vec<_>, _>>()?;
            let cover = build_cover(&mesh, sets).map_err(|e| cfg.error("sets", e.to_string()))?;
            let complex = Arc::new(Complex::new(Arc::new(cover)));
            let degree = c.problem.degree;
            if degree > complex.max_degree() {
                return Err(cfg.error("degree", format!("degree {degree} exceeds the top degree {}", complex.max_degree())).into());
            }
            let names: Vec<String> = cover_cfg
                .sets
                .iter()
                .enumerate()
                .map(|(i, s)| s.name.clone().unwrap_or_else(|| i.to_string()))
                .collect();
            let weights = build_weights(cfg, &complex, &names, c.weights.as_ref())?;
            Ok(Setup { complex, weights, degree, set_names: names, model_load: None })
        }
    }
}

fn build_mesh(cfg: &LoadedConfig, m: &MeshConfig) -> Result<Mesh, CliError> {
    let err = |msg: String| CliError::from(cfg.error("mesh", msg));
    let mesh = match (m.dim, m.extents.as_slice(), m.resolution.as_slice()) {
        (1, &[a, b], &[n]) => build_interval_mesh(a, b, n).map_err(|e| err(e.to_string()))?,
        (2, &[x0, y0, x1, y1], &[nx, ny]) => build_triangle_mesh(x0, y0, x1, y1, nx, ny).map_err(|e| err(e.to_string()))?,
        (1 | 2, _, _) => return Err(err(format!("a {}D mesh needs {} extents and {} resolution entries", m.dim, 2 * m.dim, m.dim))),
        (d, _, _) => return Err(err(format!("unsupported mesh dimension {d}"))),
    };
    if m.holes.is_empty() {
        return Ok(mesh);
    }
    if m.dim != 2 {
        return Err(err("holes are only supported in 2D".into()));
    }
    let keep = mesh.cells_where(|c| !m.holes.iter().any(|h| in_box(c, h)));
    mesh.restrict_cells(&keep).map_err(|e| err(e.to_string()))
}

fn in_box(c: [f64; 2], b: &[f64; 4]) -> bool {
    c[0] > b[0] && c[0] < b[2] && c[1] > b[1] && c[1] < b[3]
}

fn in_sector(c: [f64; 2], s: &[f64; 4]) -> bool {
    let mut t = (c[1] - s[1]).atan2(c[0] - s[0]).to_degrees();
    while t < s[2] {
        t += 360.0;
    }
    t <= s[3]
}

fn cells_of(cfg: &LoadedConfig, mesh: &Mesh, i: usize, s: &SetConfig) -> Result<Vec<usize>, CliError> {
    let shapes = [s.all == Some(true), s.interval.is_some(), s.rect.is_some(), s.disk.is_some(), s.sector.is_some()];
    if shapes.iter().filter(|&&b| b).count() != 1 {
        return Err(cfg.error("sets", format!("cover set {i} needs exactly one of all, interval, box, disk, sector")).into());
    }
    let cells = if s.all == Some(true) {
        (0..mesh.num_cells()).collect()
    } else if let Some([a, b]) = s.interval {
        mesh.cells_where(|c| c[0] > a && c[0] < b)
    } else if let Some(r) = &s.rect {
        mesh.cells_where(|c| in_box(c, r))
    } else if let Some([cx, cy, r]) = s.disk {
        mesh.cells_where(|c| (c[0] - cx).powi(2) + (c[1] - cy).powi(2) < r * r)
    } else {
        let sec = s.sector.expect("one shape is set");
        mesh.cells_where(|c| in_sector(c, &sec))
    };
    if cells.is_empty() {
        return Err(cfg.error("sets", format!("cover set {i} contains no cell centers")).into());
    }
    Ok(cells)
}

fn build_weights(cfg: &LoadedConfig, complex: &Complex, names: &[String], w: Option<&WeightsConfig>) -> Result<Weights, CliError> {
    let mut weights = complex.unit_weights();
    let Some(w) = w else { return Ok(weights) };
    let overrides = w
        .blocks
        .iter()
        .map(|b| Ok((b.degree, resolve(names, cfg, "weights", b.index.as_deref())?, b.p, b.value.clone())))
        .collect::<Result<Vec<_>, CliError>>()?;
    for (k, ..) in &overrides {
        if *k > complex.max_degree() + 1 {
            return Err(cfg.error("degree", format!("weight override for degree {k} beyond the complex")).into());
        }
    }
    for k in 0..=complex.max_degree() + 1 {
        let field = complex
            .weights_from_fn(k, |block, x| {
                overrides
                    .iter()
                    .rev()
                    .find(|(d, idx, p, _)| *d == k && matches(block, idx.as_deref(), *p))
                    .map_or_else(|| w.default.eval(x), |(.., v)| v.eval(x))
            })
            .map_err(|e| cfg.error("weights", e.to_string()))?;
        weights.set(field)?;
    }
    Ok(weights)
}

/// Changes applied to a model preset before it is built.
#[derive(Clone, Default)]
pub struct ModelOverrides {
    /// `cells_per_unit` for rods, cells per axis in 2D.
    pub resolution: Option<usize>,
    pub forcings: Option<Vec<ScalarFn>>,
    /// Sweep parameter: `epsilon` for rods, `radius` for the inclusion.
    pub parameter: Option<(String, f64)>,
}

fn forcing_pair(o: &ModelOverrides, f0: &crate::expr::Expression, f1: &crate::expr::Expression) -> (ScalarFn, ScalarFn) {
    match &o.forcings {
        Some(f) => (f[0].clone(), f[1].clone()),
        None => (f0.to_fn(), f1.to_fn()),
    }
}

/// Builds a model preset as a degree-0 problem.
pub fn build_model(cfg: &LoadedConfig, model: &ModelConfig, o: &ModelOverrides) -> Result<HodgeProblem, CliError> {
    let anchored = |e: cdr_core::Error| CliError::from(cfg.error("kind", e.to_string()));
    let param = |name: &str, default: f64| -> Result<f64, CliError> {
        match &o.parameter {
            None => Ok(default),
            Some((p, v)) if p == name => Ok(*v),
            Some((p, _)) => Err(cfg.error("parameter", format!("parameter `{p}` does not apply to this model (expected `{name}`)")).into()),
        }
    };
    match model {
        ModelConfig::Rods(m) => {
            let (f0, f1) = forcing_pair(o, &m.f0, &m.f1);
            models::build_rods(&RodsConfig {
                epsilon: param("epsilon", m.epsilon)?,
                cells_per_unit: o.resolution.unwrap_or(m.cells_per_unit),
                w0: m.w0,
                w1: m.w1,
                w01: m.w01,
                f0,
                f1,
            })
            .map_err(anchored)
        }
        ModelConfig::Multicontinuum(m) => {
            if o.parameter.is_some() {
                param("none", 0.0)?;
            }
            let n = m.permeabilities.len();
            let forcings = match &o.forcings {
                Some(f) => f.clone(),
                None if m.forcings.is_empty() => vec![models::constant(0.0); n],
                None => m.forcings.iter().map(|f| f.to_fn()).collect(),
            };
            models::build_multicontinuum(&MultiContinuumConfig {
                extents: m.extents,
                nx: o.resolution.unwrap_or(m.resolution[0]),
                ny: o.resolution.unwrap_or(m.resolution[1]),
                permeabilities: m.permeabilities.clone(),
                exchange: m.exchange.clone(),
                forcings,
                compressible: m.compressible,
            })
            .map_err(anchored)
        }
        ModelConfig::Inclusion(m) => {
            let (f0, f1) = forcing_pair(o, &m.f0, &m.f1);
            models::build_inclusion(&InclusionConfig {
                extents: m.extents,
                nx: o.resolution.unwrap_or(m.resolution[0]),
                ny: o.resolution.unwrap_or(m.resolution[1]),
                center: m.center,
                radius: param("radius", m.radius)?,
                w0: m.w0,
                w1: m.w1,
                w01: m.w01,
                f0,
                f1,
            })
            .map_err(anchored)
        }
    }
}

use std::sync::Arc;

use cdr_core::complex::Cochain;
use cdr_core::evolution::{
    observed_rates, self_convergence, simulate, LaplacianOperator, Scheme, TransientState,
};
use cdr_core::hodge::{
    cohomology_dims, harmonic_basis, hodge_decompose, poincare_constant, solve_mixed, solve_primal_k0, HodgeSolution,
};
use cdr_core::linalg::dot;
use cdr_core::models::{self, double_porosity_manufactured, rods_manufactured, ScalarFn};
use serde_json::{json, Value};

use crate::config::{LoadedConfig, Method, ModelConfig};
use crate::error::CliError;
use crate::output::{cochain_rows, jnum, num, Output, COCHAIN_COLUMNS};
use crate::setup::{build, build_model, ModelOverrides};

fn columns<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    COCHAIN_COLUMNS.iter().copied().chain(extra.iter().copied()).collect()
}

pub fn solve(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let setup = build(cfg)?;
    let problem = setup.problem(cfg)?;
    let k = setup.degree;
    let method = match cfg.config.solver.method {
        Method::Auto if k == 0 => Method::Primal,
        Method::Auto => Method::Mixed,
        Method::Primal if k != 0 => return Err(cfg.error("method", "the primal solver handles degree 0 only").into()),
        m => m,
    };
    let tol = cfg.config.solver.residual_tol;
    if !(tol > 0.0) {
        return Err(cfg.error("residual_tol", "residual_tol must be positive").into());
    }
    let sol: HodgeSolution = if method == Method::Primal { solve_primal_k0(&problem)? } else { solve_mixed(&problem)? };

    out.csv("solution.csv", &columns(&["value"]), &cochain_rows(&setup.complex, &[&sol.alpha]))?;
    let mut diag = json!({
        "command": "solve",
        "degree": k,
        "dimension": setup.complex.dim(k),
        "method": if method == Method::Primal { "primal" } else { "mixed" },
        "residual": jnum(sol.residual),
        "residual_tol": tol,
        "orthogonality": jnum(sol.orthogonality),
        "harmonic_dim": sol.kernel_dim,
        "harmonic_component": sol.harmonic_component.iter().map(|&c| jnum(c)).collect::<Vec<_>>(),
        "harmonic_fraction": jnum(sol.harmonic_fraction),
        "projected": sol.projected,
        "warnings": sol.warnings,
    });
    if k == 0 && setup.complex.cover().num_sets() > 1 {
        let balance = models::mass_balance(&problem, &sol.alpha)?;
        diag["mass_balance"] = balance
            .iter()
            .map(|b| json!({"set": b.set, "exchange": jnum(b.exchange), "source": jnum(b.source), "residual": jnum(b.residual())}))
            .collect();
    }
    out.json("diagnostics.json", diag)?;
    if cfg.config.solver.matrix_market {
        out.matrix_market("derivative.mtx", &setup.complex.total_derivative(k)?)?;
        out.matrix_market("mass.mtx", &setup.complex.mass_matrix(k, setup.weights.get(k))?)?;
    }
    if !(sol.residual <= tol) {
        return Err(CliError::Solver(format!("residual {:e} exceeds residual_tol {tol:e}", sol.residual)));
    }
    println!("solve: degree {k}, dimension {}, residual {:e}", setup.complex.dim(k), sol.residual);
    Ok(())
}

pub fn cohomology(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let setup = build(cfg)?;
    let dims = cohomology_dims(&setup.complex)?;
    let harmonic = (0..dims.len())
        .map(|k| harmonic_basis(&setup.complex, k, &setup.weights).map(|b| b.dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let entries: Vec<String> = dims.iter().enumerate().map(|(k, d)| format!("\"k{k}\":{d}")).collect();
    println!("{{{}}}", entries.join(","));
    out.json(
        "cohomology.json",
        json!({
            "command": "cohomology",
            "dims": dims,
            "harmonic_dims": harmonic,
            "consistent": dims == harmonic,
            "max_degree": setup.complex.max_degree(),
            "num_sets": setup.complex.cover().num_sets(),
            "max_level": setup.complex.cover().max_level(),
        }),
    )?;
    if dims != harmonic {
        return Err(CliError::Solver(format!("harmonic dimensions {harmonic:?} disagree with ranks {dims:?}")));
    }
    Ok(())
}

pub fn decompose(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    if cfg.config.model.is_some() {
        return Err(cfg.error("model", "decompose needs [mesh], [cover] and a [source] field").into());
    }
    let setup = build(cfg)?;
    let k = setup.degree;
    let omega = setup.field(cfg, "source", k, &cfg.config.source.clone().unwrap_or_default())?;
    let dec = hodge_decompose(&setup.complex, k, &setup.weights, &omega)?;
    let m = setup.complex.mass_matrix(k, setup.weights.get(k))?.into_matrix();
    let ip = |a: &Cochain, b: &Cochain| dot(a.values(), &m.mul_vec(b.values()));
    let n2 = ip(&omega, &omega);
    let rel = |v: f64| if n2 > 0.0 { v / n2 } else { v };
    let recon: Vec<f64> = (0..omega.values().len())
        .map(|i| dec.exact.values()[i] + dec.harmonic.values()[i] + dec.coexact.values()[i] - omega.values()[i])
        .collect();
    let recon_err = dot(&recon, &m.mul_vec(&recon)).sqrt() / n2.sqrt().max(f64::MIN_POSITIVE);
    out.csv(
        "decomposition.csv",
        &columns(&["omega", "exact", "harmonic", "coexact"]),
        &cochain_rows(&setup.complex, &[&omega, &dec.exact, &dec.harmonic, &dec.coexact]),
    )?;
    out.json(
        "diagnostics.json",
        json!({
            "command": "decompose",
            "degree": k,
            "norm_squared": {
                "omega": jnum(n2),
                "exact": jnum(ip(&dec.exact, &dec.exact)),
                "harmonic": jnum(ip(&dec.harmonic, &dec.harmonic)),
                "coexact": jnum(ip(&dec.coexact, &dec.coexact)),
            },
            "orthogonality": {
                "exact_harmonic": jnum(rel(ip(&dec.exact, &dec.harmonic).abs())),
                "exact_coexact": jnum(rel(ip(&dec.exact, &dec.coexact).abs())),
                "harmonic_coexact": jnum(rel(ip(&dec.harmonic, &dec.coexact).abs())),
            },
            "reconstruction_error": jnum(recon_err),
            "kernel_residual": jnum(dec.kernel_residual),
        }),
    )?;
    println!("decompose: degree {k}, reconstruction error {recon_err:e}");
    Ok(())
}

pub fn poincare(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let pc = cfg.config.poincare.clone().unwrap_or(crate::config::PoincareConfig { degrees: None, sweep: None });
    let runs: Vec<(String, Option<f64>)> = match &pc.sweep {
        None => vec![("none".into(), None)],
        Some(s) => {
            if cfg.config.model.is_none() {
                return Err(cfg.error("sweep", "a sweep needs a [model] preset").into());
            }
            if s.values.is_empty() {
                return Err(cfg.error("values", "sweep values are empty").into());
            }
            s.values.iter().map(|&v| (s.parameter.clone(), Some(v))).collect()
        }
    };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (param, value) in runs {
        let setup = match (value, &cfg.config.model) {
            (Some(v), Some(model)) => {
                let o = ModelOverrides { parameter: Some((param.clone(), v)), ..Default::default() };
                let p = build_model(cfg, model, &o)?;
                (Arc::clone(&p.complex), p.weights)
            }
            _ => {
                let s = build(cfg)?;
                (s.complex, s.weights)
            }
        };
        let (complex, weights) = setup;
        let degrees = pc.degrees.clone().unwrap_or_else(|| (0..complex.max_degree()).collect());
        for k in degrees {
            if k >= complex.max_degree() {
                return Err(cfg.error("degrees", format!("the Poincaré constant needs k < {}", complex.max_degree())).into());
            }
            let c = poincare_constant(&complex, k, &weights)?;
            rows.push(vec![
                param.clone(),
                value.map(num).unwrap_or_default(),
                k.to_string(),
                num(c.constant),
                num(c.eigenvalue),
                c.kernel.len().to_string(),
            ]);
            records.push(json!({"parameter": param, "value": value.map(jnum), "k": k, "constant": jnum(c.constant), "eigenvalue": jnum(c.eigenvalue), "kernel_dim": c.kernel.len()}));
        }
    }
    out.csv("poincare.csv", &["parameter", "value", "k", "constant", "eigenvalue", "kernel_dim"], &rows)?;
    out.json("diagnostics.json", json!({"command": "poincare", "runs": records}))?;
    println!("poincare: {} constants", rows.len());
    Ok(())
}

pub fn transient(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let tc = cfg.config.transient.clone().ok_or_else(|| cfg.error("transient", "[transient] section is required"))?;
    let scheme = Scheme::from_order(tc.order).map_err(|e| cfg.error("order", e.to_string()))?;
    if !(tc.dt > 0.0) || tc.steps == 0 || tc.record_every == 0 {
        return Err(cfg.error("dt", "dt must be positive and steps, record_every at least 1").into());
    }
    if let Some(ModelConfig::Multicontinuum(m)) = &cfg.config.model {
        if !m.compressible {
            return Err(cfg.error("compressible", "transient multi-continuum runs need compressible = true").into());
        }
    }
    let setup = build(cfg)?;
    let k = setup.degree;
    let lap = Arc::new(LaplacianOperator::new(&setup.complex, k, &setup.weights)?);
    let alpha0 = setup.field(cfg, "initial", k, &tc.initial)?;
    let velocity = match scheme {
        Scheme::Wave => Some(setup.field(cfg, "velocity", k, &tc.velocity)?),
        Scheme::Heat => None,
    };
    let load = if tc.forced { Some(setup.problem(cfg)?.load) } else { None };
    let initial = TransientState::new(alpha0, velocity);
    let (last, history) = simulate(&lap, scheme, tc.dt, tc.steps, initial.clone(), load.as_deref())?;

    let rows: Vec<Vec<String>> = history
        .iter()
        .enumerate()
        .filter(|(i, _)| i % tc.record_every == 0 || *i == tc.steps)
        .map(|(i, r)| vec![i.to_string(), num(r.t), num(r.energy), num(r.alpha_norm), num(r.d_alpha_norm), num(r.codiff_norm)])
        .collect();
    out.csv("energy.csv", &["step", "t", "energy", "alpha_norm", "d_alpha_norm", "codiff_norm"], &rows)?;
    out.csv("final.csv", &columns(&["value"]), &cochain_rows(&setup.complex, &[&last.alpha]))?;

    let e0 = history[0].energy;
    let drift = history.iter().map(|h| (h.energy - e0).abs()).fold(0.0, f64::max) / if e0 > 0.0 { e0 } else { 1.0 };
    let monotone = history.windows(2).all(|w| w[1].alpha_norm <= w[0].alpha_norm * (1.0 + 1e-14));
    let mut diag = json!({
        "command": "transient",
        "scheme": if scheme == Scheme::Heat { "heat" } else { "wave" },
        "degree": k,
        "dt": tc.dt,
        "steps": tc.steps,
        "final_time": jnum(last.t),
        "forced": tc.forced,
        "energy_initial": jnum(e0),
        "energy_final": jnum(history.last().map_or(e0, |h| h.energy)),
    });
    match scheme {
        Scheme::Wave => diag["max_relative_energy_drift"] = jnum(drift),
        Scheme::Heat => diag["monotone_norm_decay"] = json!(monotone),
    }
    if let Some(sc) = &tc.self_convergence {
        if !(sc.t_final > 0.0) || sc.base_steps == 0 || sc.levels < 2 {
            return Err(cfg.error("self_convergence", "self_convergence needs t_final > 0, base_steps >= 1, levels >= 2").into());
        }
        let errs = self_convergence(&lap, scheme, sc.t_final, sc.base_steps, sc.levels, &initial, load.as_deref())?;
        let rates = observed_rates(&errs);
        let rows: Vec<Vec<String>> = errs
            .iter()
            .enumerate()
            .map(|(i, (dt, e))| vec![num(*dt), num(*e), if i == 0 { String::new() } else { num(rates[i - 1]) }])
            .collect();
        out.csv("self_convergence.csv", &["dt", "difference", "rate"], &rows)?;
        diag["self_convergence_rates"] = rates.iter().map(|&r| jnum(r)).collect();
    }
    out.json("diagnostics.json", diag)?;
    match scheme {
        Scheme::Wave => println!("transient: {} wave steps, max relative energy drift {drift:e}", tc.steps),
        Scheme::Heat => println!("transient: {} heat steps, monotone decay {monotone}", tc.steps),
    }
    Ok(())
}

pub fn convergence(cfg: &LoadedConfig, out: &Output) -> Result<(), CliError> {
    let cc = cfg.config.convergence.clone().ok_or_else(|| cfg.error("convergence", "[convergence] section is required"))?;
    let model = cfg.config.model.clone().ok_or_else(|| cfg.error("convergence", "a convergence study needs a [model] preset"))?;
    if cc.refinements.is_empty() {
        return Err(cfg.error("refinements", "at least one refinement is required").into());
    }
    let (forcings, exact): (Option<Vec<ScalarFn>>, Vec<ScalarFn>) = match (cc.manufactured.as_deref(), &model) {
        (Some("rods"), ModelConfig::Rods(m)) => {
            let mf = rods_manufactured(m.epsilon, m.w0, m.w1, m.w01);
            (Some(mf.forcing), mf.exact)
        }
        (Some("double_porosity"), ModelConfig::Multicontinuum(m)) => {
            if m.permeabilities.len() != 2 || m.extents != [0.0, 0.0, 1.0, 1.0] {
                return Err(cfg.error("manufactured", "double_porosity needs two continua on the unit square").into());
            }
            let mf = double_porosity_manufactured(m.permeabilities[0], m.permeabilities[1], m.exchange[0][1]);
            (Some(mf.forcing), mf.exact)
        }
        (Some(other), _) => {
            return Err(cfg.error("manufactured", format!("manufactured preset `{other}` does not match the model kind")).into())
        }
        (None, _) => {
            let exact = cc.exact.as_ref().ok_or_else(|| cfg.error("convergence", "give `manufactured` or `exact`"))?;
            (None, exact.iter().map(|e| e.to_fn()).collect())
        }
    };
    let width = match &model {
        ModelConfig::Rods(_) => 1.0,
        ModelConfig::Multicontinuum(m) => m.extents[2] - m.extents[0],
        ModelConfig::Inclusion(m) => m.extents[2] - m.extents[0],
    };
    let mut levels = Vec::new();
    for &r in &cc.refinements {
        let o = ModelOverrides { resolution: Some(r), forcings: forcings.clone(), parameter: None };
        let problem = build_model(cfg, &model, &o)?;
        let n_sets = problem.complex.cover().num_sets();
        if exact.len() != n_sets {
            return Err(cfg.error("exact", format!("expected {n_sets} exact solutions, got {}", exact.len())).into());
        }
        let sol = solve_primal_k0(&problem)?;
        let err = models::l2_error_k0(&problem.complex, &sol.alpha, |b, x| exact[b.idx.indices()[0]](x))?;
        levels.push((r, width / r as f64, err));
    }
    let rates: Vec<Option<f64>> = std::iter::once(None)
        .chain(levels.windows(2).map(|w| {
            let rate = (w[0].2 / w[1].2).ln() / (w[0].1 / w[1].1).ln();
            (w[0].2 > 0.0 && w[1].2 > 0.0 && rate.is_finite()).then_some(rate)
        }))
        .collect();
    let rows: Vec<Vec<String>> = levels
        .iter()
        .zip(&rates)
        .enumerate()
        .map(|(i, ((r, h, e), rate))| vec![i.to_string(), r.to_string(), num(*h), num(*e), rate.map(num).unwrap_or_default()])
        .collect();
    out.csv("convergence.csv", &["level", "resolution", "h", "l2_error", "rate"], &rows)?;
    let last_rate = rates.last().copied().flatten();
    out.json(
        "diagnostics.json",
        json!({
            "command": "convergence",
            "errors": levels.iter().map(|l| jnum(l.2)).collect::<Vec<_>>(),
            "rates": rates.iter().map(|r| r.map_or(Value::Null, jnum)).collect::<Vec<_>>(),
            "last_rate": last_rate.map_or(Value::Null, jnum),
        }),
    )?;
    println!("convergence: {} levels, last rate {}", levels.len(), last_rate.map(num).unwrap_or_else(|| "-".into()));
    Ok(())
}

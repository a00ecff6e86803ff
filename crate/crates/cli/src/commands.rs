use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use gho_core::almost_convex::{certify, SampledFunction};
use gho_core::continuity::{
    dyadic_deltas, eplus_study, gap_edge_track, hausdorff_series, holder_fit, sample_spectrum, spectral_sweep,
    ApproxPolicy, FitResult, ScalingSeries, SpectrumMethod,
};
use gho_core::model::{model_from_json, GhoModel};
use gho_core::operator::DEFAULT_MAX_DIM;
use gho_core::partition::{partition_function_with, FiniteState, PartitionOptions};
use gho_core::rational::farey_in;
use gho_core::resolvent::{admissible_mu, decay_check, estimate_b, resolvent_kernel, twisted_parametrix_from};
use gho_core::spectral::{bloch_bands_with, detect_gaps, largest_gap, EdgeFilter, Gap, KGrid};
use gho_core::{assemble_with, AssemblyOptions, BoxRegion, GhoError};

use crate::args::{Cli, Command, DeltaArgs, MethodArgs, MethodKind};
use crate::output::{csv_table, Outcome};

fn load_model(path: Option<&Path>) -> Result<GhoModel> {
    match path {
        None => Ok(GhoModel::harper(1.0, 1.0)?),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read model file {}", p.display()))?;
            model_from_json(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn spectrum_method(m: &MethodArgs) -> SpectrumMethod {
    match m.method {
        MethodKind::Bloch => SpectrumMethod::Bloch {
            m: m.m,
            adaptive: !m.fixed_grid,
            approx: ApproxPolicy { q_max: m.q_max, ..ApproxPolicy::default() },
        },
        MethodKind::Truncation => {
            let side = 2 * m.radius as usize + 1;
            SpectrumMethod::Truncation {
                radius: m.radius,
                max_dim: (side * side).max(DEFAULT_MAX_DIM),
                filter: m.filter_margin.map(|margin| EdgeFilter { margin, threshold: m.filter_threshold }),
            }
        }
    }
}

fn delta_list(d: &DeltaArgs, default: (i32, i32)) -> Result<Vec<f64>> {
    let list = match &d.deltas {
        Some(v) => v.clone(),
        None => {
            let (from, to) = (d.from.unwrap_or(default.0), d.to.unwrap_or(default.1));
            if from < 1 || to < from {
                bail!("dyadic exponents need 1 <= from <= to, got {from}..{to}");
            }
            dyadic_deltas(from, to)
        }
    };
    if let Some(bad) = list.iter().find(|&&x| !(x > 0.0 && x <= 0.5)) {
        bail!("deltas must lie in (0, 1/2], got {bad}");
    }
    Ok(list)
}

// Shortest round-trip text; scientific form keeps tiny and huge values short.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fit_json(fit: &Result<FitResult, GhoError>) -> Value {
    match fit {
        Ok(f) => serde_json::to_value(f).expect("plain struct"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn method_json(m: &SpectrumMethod) -> Value {
    serde_json::to_value(m).expect("plain enum")
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let model_path = cli.common.model.as_deref();
    match &cli.command {
        Command::Butterfly { eps_min, eps_max, steps, method, q_max, m, radius } => {
            butterfly(&load_model(model_path)?, *eps_min, *eps_max, *steps, *method, *q_max, *m, *radius)
        }
        Command::Hausdorff { eps0, deltas, method, min_exponent, max_residual, self_test } => {
            let list = delta_list(deltas, if *self_test { (1, 10) } else { (4, 10) })?;
            if *self_test {
                return hausdorff_self_test(&list);
            }
            hausdorff(&load_model(model_path)?, *eps0, &list, &spectrum_method(method), *min_exponent, *max_residual)
        }
        Command::GapTrack { eps0, deltas, method, gap, min_gap, min_exponent } => gap_track(
            &load_model(model_path)?,
            *eps0,
            &delta_list(deltas, (5, 10))?,
            &spectrum_method(method),
            gap.as_deref(),
            *min_gap,
            *min_exponent,
        ),
        Command::Midpoint { eps0, deltas, method, min_defect_exponent, min_difference_exponent } => midpoint(
            &load_model(model_path)?,
            *eps0,
            &delta_list(deltas, (4, 9))?,
            &spectrum_method(method),
            *min_defect_exponent,
            *min_difference_exponent,
        ),
        Command::PartitionDemo { state, n, beta, pairs, seed } => partition_demo(state, *n, *beta, *pairs, *seed),
        Command::Certify { samples, alpha, eta_max } => certify_samples(samples, *alpha, *eta_max),
        Command::DecayCheck { eps, radius, d, b_radius, force_mu } => {
            decay(&load_model(model_path)?, *eps, *radius, *d, *b_radius, *force_mu)
        }
        Command::ParametrixCheck { eps, z, radius, tolerance } => {
            parametrix(&load_model(model_path)?, eps, *z, *radius, *tolerance)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn butterfly(
    model: &GhoModel,
    eps_min: f64,
    eps_max: f64,
    steps: usize,
    method: MethodKind,
    q_max: u64,
    m: usize,
    radius: u32,
) -> Result<Outcome> {
    if !(eps_min.is_finite() && eps_max.is_finite() && eps_max >= eps_min) {
        bail!("need finite eps_min <= eps_max");
    }
    let mut samples: Vec<(f64, Vec<f64>)> = match method {
        MethodKind::Bloch => {
            let b = model.phase.constant_field_strength().ok_or(GhoError::UnsupportedPhase)?;
            if b == 0.0 {
                bail!("Bloch butterfly needs a nonzero constant field");
            }
            if m == 0 || q_max == 0 {
                bail!("m and q_max must be positive");
            }
            let (a, c) = (eps_min * b / TAU, eps_max * b / TAU);
            let fluxes = farey_in(q_max, a.min(c), a.max(c));
            fluxes
                .par_iter()
                .map(|r| {
                    let eps = TAU * r.p as f64 / (r.q as f64 * b);
                    bloch_bands_with(model, r.p, r.q, KGrid::Fixed(m))
                        .map(|bs| (eps, bs.values()))
                        .map_err(|e| GhoError::AtEpsilon { epsilon: eps, cause: Box::new(e) })
                })
                .collect::<Result<_, _>>()?
        }
        MethodKind::Truncation => {
            if steps == 0 {
                bail!("steps must be at least 1");
            }
            let eps: Vec<f64> = (0..steps)
                .map(|i| if steps == 1 { eps_min } else { eps_min + (eps_max - eps_min) * i as f64 / (steps - 1) as f64 })
                .collect();
            let side = 2 * radius as usize + 1;
            let method = SpectrumMethod::Truncation { radius, max_dim: (side * side).max(DEFAULT_MAX_DIM), filter: None };
            spectral_sweep(model, &eps, &method)?.into_iter().map(|s| (s.epsilon, s.values)).collect()
        }
    };
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rows = Vec::new();
    for (eps, values) in &samples {
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        rows.extend(v.into_iter().map(|x| vec![num(*eps), num(x)]));
    }
    let count = rows.len();
    let report = json!({
        "command": "butterfly",
        "model": model.label,
        "method": match method { MethodKind::Bloch => "bloch", MethodKind::Truncation => "truncation" },
        "epsilons": samples.len(),
        "rows": count,
        "samples": samples.iter().map(|(e, v)| json!({"epsilon": e, "values": v})).collect::<Vec<_>>(),
        "pass": true,
    });
    Ok(Outcome { csv: csv_table(&["epsilon", "value"], rows), report, pass: true, report_only: false, paired: false })
}

fn hausdorff_self_test(deltas: &[f64]) -> Result<Outcome> {
    let series = ScalingSeries::synthetic(deltas.to_vec(), |d| 0.7 * d.sqrt())?;
    let fit = holder_fit(&series);
    let pass = matches!(fit, Ok(f) if (f.exponent - 0.5).abs() <= 1e-9);
    let rows = series.deltas.iter().zip(&series.observations).map(|(d, o)| vec![num(*d), num(*o)]);
    let report = json!({
        "command": "hausdorff",
        "self_test": true,
        "expected_exponent": 0.5,
        "fit": fit_json(&fit),
        "pass": pass,
    });
    Ok(Outcome { csv: csv_table(&["delta", "distance"], rows), report, pass, report_only: false, paired: true })
}

fn hausdorff(
    model: &GhoModel,
    eps0: f64,
    deltas: &[f64],
    method: &SpectrumMethod,
    min_exponent: f64,
    max_residual: f64,
) -> Result<Outcome> {
    let study = hausdorff_series(model, eps0, deltas, method)?;
    let fit = holder_fit(&study.series);
    let pass = matches!(fit, Ok(f) if f.exponent >= min_exponent && f.residual <= max_residual);
    let rows = study.points.iter().map(|p| vec![num(p.delta), num(p.distance)]);
    let report = json!({
        "command": "hausdorff",
        "self_test": false,
        "model": model.label,
        "eps0": eps0,
        "method": method_json(method),
        "points": study.points,
        "fit": fit_json(&fit),
        "min_exponent": min_exponent,
        "max_residual": max_residual,
        "pass": pass,
    });
    Ok(Outcome { csv: csv_table(&["delta", "distance"], rows), report, pass, report_only: false, paired: true })
}

fn gap_track(
    model: &GhoModel,
    eps0: f64,
    deltas: &[f64],
    method: &SpectrumMethod,
    gap: Option<&[f64]>,
    min_gap: f64,
    min_exponent: f64,
) -> Result<Outcome> {
    let gap = match gap {
        Some([lo, hi]) => Gap::new(*lo, *hi)?,
        Some(_) => bail!("--gap takes exactly two values"),
        None => {
            let base = sample_spectrum(model, eps0, method, 0.0)?;
            largest_gap(&detect_gaps(&base, min_gap)?)
                .with_context(|| format!("no gap wider than {min_gap} at eps0 = {eps0}"))?
        }
    };
    let header = ["delta", "e1_plus", "e2_plus", "e1_minus", "e2_minus"];
    let track = match gap_edge_track(model, eps0, gap, deltas, method) {
        Ok(t) => t,
        Err(e @ GhoError::GapClosed { .. }) => {
            let report = json!({
                "command": "gap-track",
                "model": model.label,
                "eps0": eps0,
                "gap": gap,
                "closed": e.to_string(),
                "pass": false,
            });
            return Ok(Outcome { csv: csv_table(&header, []), report, pass: false, report_only: false, paired: true });
        }
        Err(e) => return Err(e.into()),
    };
    let label = model.label.as_str();
    let e1 = track.edge_series(false, label, method.name()).and_then(|s| holder_fit(&s));
    let e2 = track.edge_series(true, label, method.name()).and_then(|s| holder_fit(&s));
    let pass = matches!(e1, Ok(f) if f.exponent >= min_exponent) && matches!(e2, Ok(f) if f.exponent >= min_exponent);
    let rows = track
        .rows
        .iter()
        .map(|r| vec![num(r.delta), num(r.e1_plus), num(r.e2_plus), num(r.e1_minus), num(r.e2_minus)]);
    let report = json!({
        "command": "gap-track",
        "model": model.label,
        "eps0": eps0,
        "method": method_json(method),
        "gap": gap,
        "closed": Value::Null,
        "rows": track.rows,
        "e1_fit": fit_json(&e1),
        "e2_fit": fit_json(&e2),
        "min_exponent": min_exponent,
        "pass": pass,
    });
    Ok(Outcome { csv: csv_table(&header, rows), report, pass, report_only: false, paired: true })
}

fn midpoint(
    model: &GhoModel,
    eps0: f64,
    deltas: &[f64],
    method: &SpectrumMethod,
    min_defect: f64,
    min_difference: f64,
) -> Result<Outcome> {
    let study = eplus_study(model, eps0, deltas, method)?;
    let defect = study.defect_series().and_then(|s| holder_fit(&s));
    let diff = study.difference_series().and_then(|s| holder_fit(&s));
    let pass = matches!(defect, Ok(f) if f.exponent >= min_defect) && matches!(diff, Ok(f) if f.exponent >= min_difference);
    let rows = (0..study.deltas.len()).map(|i| {
        vec![
            num(study.deltas[i]),
            num(study.e_plus[i]),
            num(study.e_minus[i]),
            num(study.defects[i]),
            num((study.e_plus[i] - study.e0).abs()),
        ]
    });
    let report = json!({
        "command": "midpoint",
        "model": model.label,
        "eps0": eps0,
        "e0": study.e0,
        "method": method_json(method),
        "deltas": study.deltas,
        "defects": study.defects,
        "defect_fit": fit_json(&defect),
        "difference_fit": fit_json(&diff),
        "min_defect_exponent": min_defect,
        "min_difference_exponent": min_difference,
        "pass": pass,
    });
    Ok(Outcome {
        csv: csv_table(&["delta", "e_plus", "e_minus", "defect", "difference"], rows),
        report,
        pass,
        report_only: false,
        paired: true,
    })
}

fn partition_demo(state: &Path, n: u32, beta: f64, pairs: usize, seed: u64) -> Result<Outcome> {
    let file = fs::File::open(state).with_context(|| format!("cannot open {}", state.display()))?;
    let phi = FiniteState::from_csv(file).with_context(|| format!("in {}", state.display()))?;
    let opts = PartitionOptions { beta, lipschitz_pairs: pairs, seed };
    let (f, cert) = partition_function_with(&phi, n, &opts)?;
    let pass = cert.pass();
    let rows = f.centers.iter().enumerate().map(|(i, c)| vec![i.to_string(), c.x1.to_string(), c.x2.to_string()]);
    let mut report = json!({ "command": "partition-demo", "state": state.display().to_string(), "support": phi.len() });
    let obj = report.as_object_mut().expect("object");
    if let Value::Object(fields) = serde_json::to_value(&cert)? {
        obj.extend(fields);
    }
    obj.insert("pass".into(), Value::Bool(pass));
    Ok(Outcome { csv: csv_table(&["index", "x1", "x2"], rows), report, pass, report_only: false, paired: true })
}

fn certify_samples(samples: &Path, alpha: f64, eta_max: f64) -> Result<Outcome> {
    let file = fs::File::open(samples).with_context(|| format!("cannot open {}", samples.display()))?;
    let f = SampledFunction::from_csv(file).with_context(|| format!("in {}", samples.display()))?;
    let eval = |x: f64| f.eval(x).expect("inside the sampled range");
    let cert = certify(&eval, f.grid(), eta_max, alpha)?;
    let pass = cert.is_valid();
    let rows = cert.ladder.iter().map(|r| vec![num(r.eta), num(r.max_ratio), r.samples.to_string()]);
    let report = json!({
        "command": "certify",
        "samples": samples.display().to_string(),
        "points": f.grid().len(),
        "p": cert.p,
        "n_defect": cert.n_defect,
        "alpha": cert.alpha,
        "eta_max": eta_max,
        "pairs_checked": cert.pairs_checked,
        "max_usage": cert.max_usage,
        "ladder": cert.ladder,
        "violations": cert.violations,
        "pass": pass,
    });
    Ok(Outcome { csv: csv_table(&["eta", "max_ratio", "samples"], rows), report, pass, report_only: false, paired: true })
}

fn decay(model: &GhoModel, eps: f64, radius: u32, d: f64, b_radius: u32, force_mu: Option<f64>) -> Result<Outcome> {
    if d.is_nan() || d <= 0.0 {
        bail!("d must be positive");
    }
    let region = BoxRegion::centered(radius);
    let op = assemble_with(model, eps, region, &AssemblyOptions::with_max_dim(region.len().max(DEFAULT_MAX_DIM)))?;
    let top = gho_core::spectral::eigen_spectrum(&op)?.max().context("empty spectrum")?;
    let rk = resolvent_kernel(&op, Complex64::new(top + d, 0.0))?;
    let b = estimate_b(&model.kernel, b_radius)?;
    let admissible = admissible_mu(model.kernel.beta(), rk.d, b)?;
    let mu = force_mu.unwrap_or(admissible);
    let rep = decay_check(&rk, mu)?;

    // Largest normalized kernel value per integer distance shell, interior pairs only.
    let pts = region.points();
    let interior: Vec<usize> = (0..pts.len()).filter(|&i| region.depth(pts[i]) >= rep.margin as i64).collect();
    let mut shells: Vec<f64> = Vec::new();
    for &i in &interior {
        for &j in &interior {
            let r = pts[i].dist(pts[j]);
            let k = r.floor() as usize;
            if shells.len() <= k {
                shells.resize(k + 1, 0.0);
            }
            shells[k] = shells[k].max(rk.g[(i, j)].norm());
        }
    }
    let rows = shells.iter().enumerate().map(|(k, &g)| vec![k.to_string(), num(g), num(2.0 / rk.d * (-mu * k as f64).exp())]);
    let report = json!({
        "command": "decay-check",
        "model": model.label,
        "eps": eps,
        "radius": radius,
        "z": top + d,
        "d": rk.d,
        "b": b,
        "admissible_mu": admissible,
        "mu": mu,
        "forced": force_mu.is_some(),
        "resolvent_residual": rk.residual,
        "max_ratio": rep.max_ratio,
        "max_offdiag_ratio": rep.max_offdiag_ratio,
        "margin": rep.margin,
        "interior_sites": rep.interior_sites,
        "pass": rep.pass,
    });
    Ok(Outcome {
        csv: csv_table(&["distance", "max_abs_g", "bound_at_shell_start"], rows),
        report,
        pass: rep.pass,
        report_only: force_mu.is_some(),
        paired: true,
    })
}

fn parametrix(model: &GhoModel, eps: &[f64], z: f64, radius: u32, tolerance: f64) -> Result<Outcome> {
    if eps.is_empty() {
        bail!("need at least one epsilon");
    }
    let region = BoxRegion::centered(radius);
    let op0 = assemble_with(model, 0.0, region, &AssemblyOptions::with_max_dim(region.len().max(DEFAULT_MAX_DIM)))?;
    let rk = resolvent_kernel(&op0, Complex64::new(z, 0.0))?;
    let b = estimate_b(&model.kernel, 12)?;
    let mu = admissible_mu(model.kernel.beta(), rk.d, b)?;
    let mut results = Vec::new();
    for &e in eps {
        let p = twisted_parametrix_from(model, &op0, &rk, e)?;
        results.push(json!({
            "epsilon": e,
            "residual": p.residual,
            "t_column_sum": p.t_column_sum,
            "m_constant": p.t_column_sum * mu.powi(3) * rk.d,
        }));
    }
    let pass = results.iter().all(|r| r["residual"].as_f64().is_some_and(|v| v <= tolerance));
    let rows = results.iter().map(|r| {
        ["epsilon", "residual", "t_column_sum", "m_constant"].iter().map(|k| num(r[*k].as_f64().unwrap_or(f64::NAN))).collect()
    });
    let report = json!({
        "command": "parametrix-check",
        "model": model.label,
        "z": z,
        "radius": radius,
        "d": rk.d,
        "mu": mu,
        "tolerance": tolerance,
        "results": results,
        "pass": pass,
    });
    Ok(Outcome {
        csv: csv_table(&["epsilon", "residual", "t_column_sum", "m_constant"], rows),
        report,
        pass,
        report_only: false,
        paired: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.5, -3.25e-12, 6.02e23, 0.1, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(8.881784197001252e-16), "8.881784197001252e-16");
    }

    #[test]
    fn delta_lists_are_validated() {
        let d = |deltas: Option<Vec<f64>>, from, to| DeltaArgs { deltas, from, to };
        assert_eq!(delta_list(&d(None, Some(1), Some(3)), (4, 9)).unwrap(), vec![0.5, 0.25, 0.125]);
        assert_eq!(delta_list(&d(None, None, None), (4, 5)).unwrap(), vec![0.0625, 0.03125]);
        assert!(delta_list(&d(Some(vec![0.1, 0.0]), None, None), (4, 9)).is_err());
        assert!(delta_list(&d(Some(vec![0.6]), None, None), (4, 9)).is_err());
        assert!(delta_list(&d(None, Some(5), Some(4)), (4, 9)).is_err());
    }
}

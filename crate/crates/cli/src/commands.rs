use std::collections::{BTreeMap, BTreeSet};

use anyhow::{bail, Context, Result};
use infosum::anova::{
    anova_decompose, inner, variance, variance_drop_bound, BoundMode, CAdditiveFunction, TableFunction,
};
use infosum::clt::{iid_info_sequence, monotone_on_average, projection_gap, MONOTONE_H, MONOTONE_INV_I, MONOTONE_N};
use infosum::collections::optimize_packing_lp;
use infosum::functionals::score_convolution_check;
use infosum::scalar::LpField;
use infosum::verifiers::*;
use infosum::{build_density, Error, FractionalPacking, SubsetCollection, WeightVector};
use num_rational::Rational64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{build_collection, AnovaInput, PackInput, ScoreInput, SweepInput, VerifyInput};
use crate::{Settings, ANOVA_TOL, DEFAULT_N_MAX};

/// A command result in both output formats.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub json: Value,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    /// Some requested check failed.
    pub violated: bool,
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).unwrap_or_default()
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn set_label(s: &[usize]) -> String {
    let inner: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

#[derive(Serialize)]
struct Entry<'a> {
    collection: &'a str,
    #[serde(flatten)]
    report: &'a InequalityReport<f64>,
}

fn status_label(s: ReportStatus) -> &'static str {
    match s {
        ReportStatus::Satisfied => "satisfied",
        ReportStatus::Violated => "violated",
        ReportStatus::Skipped => "skipped",
    }
}

fn summary<'a>(statuses: impl Iterator<Item = &'a ReportStatus>) -> Value {
    let mut counts = BTreeMap::from([("satisfied", 0usize), ("violated", 0), ("skipped", 0)]);
    for s in statuses {
        *counts.get_mut(status_label(*s)).unwrap() += 1;
    }
    json!(counts)
}

fn monotone_reports(sys: &System, c: &SubsetCollection, ctx: &Settings) -> Result<Vec<InequalityReport<f64>>> {
    if c.classify().balanced {
        return Ok(monotone_on_average(sys, c, &ctx.tol)?);
    }
    let reason = "out of contract: needs a balanced collection";
    Ok(vec![
        InequalityReport::skipped("monotone_avg_entropy", MONOTONE_H, ctx.tol.entropy_abs, reason),
        InequalityReport::skipped("monotone_avg_entropy_power", MONOTONE_N, ctx.tol.relative, reason),
        InequalityReport::skipped("monotone_avg_inverse_fisher", MONOTONE_INV_I, ctx.tol.relative, reason),
    ])
}

type System = infosum::SumSystem<f64>;

pub fn verify(inp: VerifyInput, ctx: &Settings) -> Result<Artifact> {
    let dists = inp.system.dists()?;
    let mut sys = System::new(dists, &ctx.grid).context("system")?;
    if inp.collections.is_empty() {
        bail!("collections: at least one collection is required");
    }
    let names: BTreeSet<&str> = inp.collections.iter().map(|c| c.name.as_str()).collect();
    if names.len() != inp.collections.len() {
        bail!("collections: names must be unique");
    }
    for (field, map) in [("weights", &inp.weights), ("packings", &inp.packings)] {
        if let Some(k) = map.keys().find(|k| !names.contains(k.as_str())) {
            bail!("{field}.{k}: no collection of that name");
        }
    }

    let mut reports: Vec<(String, InequalityReport<f64>)> = Vec::new();
    let mut projections = BTreeMap::new();
    for (k, nc) in inp.collections.iter().enumerate() {
        let c = build_collection(&nc.standard, &nc.sets, sys.n(), &format!("collections[{k}]"))?;
        sys.prepare(&c).with_context(|| format!("collections[{k}]"))?;
        let name = &nc.name;
        let w = match inp.weights.get(name) {
            Some(v) => {
                let w = WeightVector::new(v.clone()).with_context(|| format!("weights.{name}"))?;
                if w.len() != c.len() {
                    bail!("weights.{name}: {} weights for {} sets", w.len(), c.len());
                }
                w
            }
            None => WeightVector::uniform(c.len()),
        };
        let beta = match inp.packings.get(name) {
            Some(v) if v.len() != c.len() => bail!("packings.{name}: {} entries for {} sets", v.len(), c.len()),
            Some(v) => FractionalPacking::new(v.clone()),
            None => FractionalPacking::natural(&c),
        };
        log::info!("collection {name}: {} sets, r = {}", c.len(), c.r());

        let mut batch = vec![
            verify_subset_epi(&sys, &c, &ctx.tol)?,
            verify_fii(&sys, &c, &ctx.tol)?,
            verify_weighted_fii(&sys, &c, &w, &ctx.tol)?,
            verify_entropy_of_sums(&sys, &c, &w, &ctx.tol)?,
            verify_relent(&sys, &c, &w, &ctx.tol)?,
            verify_refined_fii(&sys, &c, &beta, &ctx.tol).with_context(|| format!("packings.{name}"))?,
            verify_rs_epi(&sys, &c, &ctx.tol)?,
        ];
        if inp.monotone_on_average {
            batch.extend(monotone_reports(&sys, &c, ctx)?);
        }
        reports.extend(batch.into_iter().map(|r| (name.clone(), r)));

        if let Some(points) = inp.projection_points {
            let value = match projection_gap(&sys, &c, &w, points, ctx.seed) {
                Ok(g) => json!(g),
                Err(Error::ScoreUndefined(m)) => json!({ "skipped": format!("score undefined: {m}") }),
                Err(e) => return Err(e).context(format!("projection gap for {name}")),
            };
            projections.insert(name.clone(), value);
        }
    }
    reports.sort_by(|a, b| a.1.name.cmp(&b.1.name).then_with(|| a.0.cmp(&b.0)));

    let violated = reports.iter().any(|(_, r)| r.status == ReportStatus::Violated);
    let entries: Vec<Entry> = reports.iter().map(|(c, r)| Entry { collection: c, report: r }).collect();
    let mut json = json!({
        "command": "verify",
        "seed": ctx.seed,
        "grid": ctx.grid,
        "tolerances": ctx.tol,
        "summary": summary(reports.iter().map(|(_, r)| &r.status)),
        "reports": entries,
    });
    if inp.projection_points.is_some() {
        json["projection_gap"] = json!(projections);
    }
    let csv_rows = reports
        .iter()
        .map(|(c, r)| {
            vec![
                r.name.clone(),
                opt(r.lhs),
                opt(r.rhs),
                opt(r.gap),
                r.satisfied.to_string(),
                num(r.tolerance),
                status_label(r.status).to_string(),
                c.clone(),
                r.inequality.clone(),
                r.reason.clone().unwrap_or_default(),
                ctx.seed.to_string(),
            ]
        })
        .collect();
    Ok(Artifact {
        json,
        csv_header: header(&[
            "name", "lhs", "rhs", "gap", "satisfied", "tolerance", "status", "collection", "inequality", "reason",
            "seed",
        ]),
        csv_rows,
        violated,
    })
}

pub fn clt_sweep(inp: SweepInput, ctx: &Settings) -> Result<Artifact> {
    let n_max = ctx.n_max.or(inp.n_max).unwrap_or(DEFAULT_N_MAX);
    let res = iid_info_sequence(&inp.distribution, n_max, &ctx.grid, &ctx.tol).context("distribution")?;
    let monotone = res.monotone();
    let json = json!({
        "command": "clt-sweep",
        "seed": ctx.seed,
        "grid": ctx.grid,
        "n_max": n_max,
        "tolerance": res.tolerance,
        "monotone": monotone,
        "rows": res.rows,
    });
    let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
    let csv_rows = res
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.entropy),
                opt(r.fisher),
                num(r.entropy_power),
                num(r.rel_entropy_gaussian),
                opt(r.gap_prev),
                flag(r.entropy_nondecreasing),
                flag(r.fisher_nonincreasing),
                ctx.seed.to_string(),
            ]
        })
        .collect();
    Ok(Artifact {
        json,
        csv_header: header(&[
            "n",
            "entropy",
            "fisher",
            "entropy_power",
            "rel_entropy_gaussian",
            "gap_prev",
            "entropy_nondecreasing",
            "fisher_nonincreasing",
            "seed",
        ]),
        csv_rows,
        violated: !monotone,
    })
}

pub fn anova_demo(inp: AnovaInput, ctx: &Settings) -> Result<Artifact> {
    let space = inp.space;
    let psi = TableFunction::new(&space, inp.values).context("values")?;
    let dec = anova_decompose(&psi, &space)?;
    let table = dec.variance_table(&space);
    let reconstruction_error = dec.reconstruct().max_abs_diff(&psi);
    let comps: Vec<_> = dec.iter().map(|(_, a)| a).collect();
    let mut orthogonality_error = 0.0f64;
    for (i, a) in comps.iter().enumerate() {
        for b in &comps[i + 1..] {
            orthogonality_error = orthogonality_error.max(inner(a, b, &space).abs());
        }
    }
    let exact = reconstruction_error < ANOVA_TOL && orthogonality_error < ANOVA_TOL;
    let mut violated = !exact;

    let mut json = json!({
        "command": "anova-demo",
        "seed": ctx.seed,
        "shape": space.shape(),
        "total_variance": variance(&psi, &space),
        "variance_table": table,
        "reconstruction_error": reconstruction_error,
        "orthogonality_error": orthogonality_error,
        "exact": exact,
    });

    if let Some(ca) = inp.c_additive {
        let c = build_collection(&ca.standard, &ca.sets, space.n(), "c_additive")?;
        let raw = ca
            .components
            .into_iter()
            .enumerate()
            .map(|(k, v)| TableFunction::new(&space, v).with_context(|| format!("c_additive.components[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let u = if ca.center {
            CAdditiveFunction::centered(c.clone(), raw, &space)
        } else {
            CAdditiveFunction::new(c.clone(), raw, &space)
        }
        .context("c_additive")?;
        let sq: Vec<f64> = u.components().iter().map(|p| inner(p, p, &space)).collect();
        let (lp_beta, _) = optimize_packing_lp(&c, &sq)?;
        let modes = [
            ("uniform", BoundMode::Uniform),
            ("natural_packing", BoundMode::Packing(FractionalPacking::natural(&c))),
            ("lp_packing", BoundMode::Packing(lp_beta)),
        ];
        let mut bounds = Vec::new();
        for (label, mode) in &modes {
            let b = variance_drop_bound(&u, &space, mode)?;
            violated |= !b.holds();
            let mut v = json!({ "mode": label, "lhs": b.lhs, "rhs": b.rhs, "holds": b.holds() });
            if let BoundMode::Packing(beta) = mode {
                v["beta"] = json!(beta.beta);
            }
            bounds.push(v);
        }
        json["variance_drop"] = json!(bounds);
    }

    let csv_rows = table
        .iter()
        .map(|row| vec![set_label(&row.subset), num(row.variance), ctx.seed.to_string()])
        .collect();
    Ok(Artifact { json, csv_header: header(&["subset", "variance", "seed"]), csv_rows, violated })
}

pub fn pack_optimize(inp: PackInput, ctx: &Settings) -> Result<Artifact> {
    let c = build_collection(&inp.standard, &inp.sets, inp.n, "collection")?;
    let objective = inp.objective.unwrap_or_else(|| vec![1.0; c.len()]);
    if objective.len() != c.len() {
        bail!("objective: {} entries for {} sets", objective.len(), c.len());
    }
    let value_of = |beta: &[f64]| beta.iter().zip(&objective).map(|(b, o)| b * o).sum::<f64>();

    let (beta, value, exact) = if inp.exact {
        let obj = objective
            .iter()
            .enumerate()
            .map(|(k, &x)| Rational64::approximate_float(x).with_context(|| format!("objective[{k}]: {x} has no rational form")))
            .collect::<Result<Vec<_>>>()?;
        let (beta, value) = optimize_packing_lp(&c, &obj)?;
        let as_f64: Vec<f64> = beta.beta.iter().map(|b| b.to_f64_lossy()).collect();
        let labels: Vec<String> = beta.beta.iter().map(|b| b.to_string()).collect();
        (as_f64, value.to_f64_lossy(), Some((labels, value.to_string())))
    } else {
        let (beta, value) = optimize_packing_lp(&c, &objective)?;
        (beta.beta, value, None)
    };
    let natural = FractionalPacking::<f64>::natural(&c);
    let uniform = FractionalPacking::<f64>::uniform(&c);
    let mut json = json!({
        "command": "pack-optimize",
        "seed": ctx.seed,
        "n": c.n(),
        "sets": c.sets(),
        "r": c.r(),
        "classification": c.classify(),
        "objective": objective,
        "beta": beta,
        "value": value,
        "natural_value": value_of(&natural.beta),
        "uniform_value": value_of(&uniform.beta),
    });
    if let Some((labels, v)) = &exact {
        json["beta_exact"] = json!(labels);
        json["value_exact"] = json!(v);
    }
    let csv_rows = c
        .sets()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let exact_beta = exact.as_ref().map(|(l, _)| l[k].clone()).unwrap_or_default();
            vec![set_label(s), num(objective[k]), num(beta[k]), exact_beta, ctx.seed.to_string()]
        })
        .collect();
    Ok(Artifact {
        json,
        csv_header: header(&["set", "objective", "beta", "beta_exact", "seed"]),
        csv_rows,
        violated: false,
    })
}

pub fn score_check(inp: ScoreInput, ctx: &Settings) -> Result<Artifact> {
    let mut pairs = inp.pairs;
    pairs.sort_by(|a, b| a.name.cmp(&b.name));
    let mut rows = Vec::new();
    for (k, p) in pairs.iter().enumerate() {
        let d1 = build_density(&p.first, &ctx.grid).with_context(|| format!("pairs[{k}].first"))?;
        let d2 = build_density(&p.second, &ctx.grid).with_context(|| format!("pairs[{k}].second"))?;
        let (deviation, status, reason) = match score_convolution_check(&d1, &d2) {
            Ok(d) if d < ctx.score_tol => (Some(d), ReportStatus::Satisfied, None),
            Ok(d) => (Some(d), ReportStatus::Violated, None),
            Err(Error::ScoreUndefined(m)) => (None, ReportStatus::Skipped, Some(format!("score undefined: {m}"))),
            Err(e) => return Err(e).context(format!("pair {}", p.name)),
        };
        rows.push((p.name.clone(), deviation, status, reason));
    }
    let violated = rows.iter().any(|r| r.2 == ReportStatus::Violated);
    let entries: Vec<Value> = rows
        .iter()
        .map(|(name, d, s, reason)| {
            let mut v = json!({
                "name": name,
                "deviation": d,
                "tolerance": ctx.score_tol,
                "satisfied": *s == ReportStatus::Satisfied,
                "status": status_label(*s),
            });
            if let Some(r) = reason {
                v["reason"] = json!(r);
            }
            v
        })
        .collect();
    let json = json!({
        "command": "score-check",
        "seed": ctx.seed,
        "grid": ctx.grid,
        "identity": "rho_{X+Y}(x) = E[rho_X(X) | X+Y = x]",
        "summary": summary(rows.iter().map(|r| &r.2)),
        "pairs": entries,
    });
    let csv_rows = rows
        .iter()
        .map(|(name, d, s, reason)| {
            vec![
                name.clone(),
                opt(*d),
                (*s == ReportStatus::Satisfied).to_string(),
                num(ctx.score_tol),
                status_label(*s).to_string(),
                reason.clone().unwrap_or_default(),
                ctx.seed.to_string(),
            ]
        })
        .collect();
    Ok(Artifact {
        json,
        csv_header: header(&["name", "deviation", "satisfied", "tolerance", "status", "reason", "seed"]),
        csv_rows,
        violated,
    })
}

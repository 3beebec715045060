use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use apiary_core::flora::field::resource_fields;
use apiary_core::flora::{
    critical_density, eikonal_residual, quality_at_distance, EikonalReport, QualityField,
    ResourceKind,
};
use apiary_core::foraging::foragers_required;
use apiary_core::market::{build_eta_cut, pollen_affine, ExchangeSolution};
use apiary_core::sim::scenario::{parse_assignment, SCHEMA_VERSION};
use apiary_core::sim::{self, write_reports_csv, RunSummary, Scenario, Simulation};
use apiary_core::Execution;
use serde_json::{json, Value};

use crate::Status;

pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
}

impl Options {
    fn scenario(&self) -> Result<Scenario> {
        let overrides = self
            .overrides
            .iter()
            .map(|s| parse_assignment(s))
            .collect::<Result<Vec<_>, _>>()?;
        let scenario = Scenario::load(self.config.as_deref(), &overrides)?;
        log::info!(
            "loaded scenario {:?} ({} days)",
            scenario.name,
            scenario.horizon
        );
        Ok(scenario)
    }

    fn out_dir(&self) -> Result<&Path> {
        let dir = self
            .out
            .as_deref()
            .ok_or_else(|| anyhow!("--out <dir> is required"))?;
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn run(opts: &Options) -> Result<Status> {
    let scenario = opts.scenario()?;
    let dir = opts.out_dir()?;
    let outcome = sim::run(&scenario)?;

    let mut w = create(dir, "reports.csv")?;
    write_reports_csv(&outcome.reports, &mut w)?;
    w.flush()?;
    let summary = RunSummary::new(&scenario, &outcome);
    write_json(dir, "summary.json", &summary)?;

    println!(
        "{}: {}/{} days, honey {:.1} g, pollen {:.1} g, population {:.0}",
        scenario.name,
        summary.days_completed,
        summary.horizon,
        summary.final_honey,
        summary.final_pollen_stock,
        summary.final_population
    );
    println!(
        "regimes: deficit {} surplus {} balanced {}; max |energy drift| {:.3e} J",
        summary.days_deficit,
        summary.days_surplus,
        summary.days_balanced,
        summary.max_abs_energy_drift
    );
    match &outcome.halt {
        Some(s) => {
            eprintln!(
                "starved of {:?} on day {} (short by {:.3} g)",
                s.stock, s.day, s.shortfall
            );
            Ok(Status::Starved)
        }
        None => Ok(Status::Ok),
    }
}

fn eikonal_json(name: &str, report: &EikonalReport) -> Value {
    json!({
        "field": name,
        "cells": report.count,
        "max_residual": report.max,
        "mean_residual": report.mean,
        "target_slope": report.target,
        "within_5_percent": report.fraction_within(0.05),
        "degenerate": report.degenerate,
    })
}

fn dump_field(dir: &Path, stem: &str, field: &QualityField) -> Result<()> {
    let mut csv = create(dir, &format!("{stem}.csv"))?;
    field.values.write_csv(&mut csv)?;
    csv.flush()?;
    let mut pgm = create(dir, &format!("{stem}.pgm"))?;
    field.values.write_pgm(&mut pgm)?;
    pgm.flush()?;
    Ok(())
}

pub fn field(opts: &Options) -> Result<Status> {
    let scenario = opts.scenario()?;
    let Some(landscape) = scenario.landscape.as_ref() else {
        bail!("landscape: the field command needs a `landscape` section");
    };
    let dir = opts.out_dir()?;
    let p = &scenario.foraging;
    let fields = resource_fields(landscape, &scenario.resources, p, Execution::Parallel)?;

    let mut summary = Vec::new();
    for (id, f) in &fields {
        dump_field(dir, &format!("quality_{id}"), f)?;
        summary.push(eikonal_json(&id.to_string(), &eikonal_residual(f, p)));
    }
    let combined = fields
        .iter()
        .map(|(_, f)| f.clone())
        .reduce(|acc, f| acc.merge(&f))
        .ok_or_else(|| anyhow!("landscape has no nectar patches"))?;
    dump_field(dir, "quality", &combined)?;
    let report = eikonal_residual(&combined, p);
    summary.push(eikonal_json("combined", &report));
    write_json(dir, "eikonal.json", &summary)?;

    println!("field       cells   max_residual   mean_residual   within_5%");
    for s in &summary {
        println!(
            "{:<10} {:>6}   {:>12.4e}   {:>13.4e}   {:>8.4}",
            s["field"].as_str().unwrap_or_default(),
            s["cells"],
            s["max_residual"].as_f64().unwrap_or(f64::NAN),
            s["mean_residual"].as_f64().unwrap_or(f64::NAN),
            s["within_5_percent"].as_f64().unwrap_or(f64::NAN),
        );
    }
    let hive = landscape.hive;
    println!(
        "quality at hive ({}, {}): {:.6}",
        hive[0],
        hive[1],
        combined.at(hive[0], hive[1])
    );
    Ok(Status::Ok)
}

fn read_solution(path: &Path) -> Result<ExchangeSolution> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} is not an exchange solution", path.display()))
}

pub fn market(opts: &Options, previous: Option<&Path>) -> Result<Status> {
    let scenario = opts.scenario()?;
    let previous = previous.map(read_solution).transpose()?;
    let dir = opts.out_dir()?;
    let mut simulation = Simulation::new(&scenario)?;
    simulation.set_previous(previous);
    let quote = simulation.quote()?;
    write_json(dir, "quote.json", &quote)?;

    let regime = quote.ratio.regime.as_str();
    match &quote.solution {
        Ok(solution) => {
            write_json(dir, "exchange_solution.json", solution)?;
            let tau = solution
                .tau
                .map_or("none".to_string(), |t| format!("{t:.9}"));
            println!(
                "regime={regime} case={} tau={tau} iterations={} converged={}",
                serde_json::to_value(solution.case)?
                    .as_str()
                    .unwrap_or_default(),
                solution.trace.len(),
                solution.converged
            );
            for flag in &solution.flags {
                eprintln!("warning: {flag}");
            }
            Ok(Status::Ok)
        }
        Err(e) => {
            println!("regime={regime} case=none tau=none");
            eprintln!("market infeasible: {e}");
            Ok(Status::MarketInfeasible)
        }
    }
}

pub fn check(opts: &Options) -> Result<Status> {
    let scenario = opts.scenario()?;
    let simulation = Simulation::new(&scenario)?;
    let quote = simulation.quote()?;
    let p = &scenario.foraging;
    let winter = scenario.first_winter();

    println!(
        "scenario {} (schema {SCHEMA_VERSION}), horizon {} days",
        scenario.name, scenario.horizon
    );
    println!("t_brood = {} °C", scenario.thermal.t_brood);
    println!("d_max = {} m", p.d_max);
    println!(
        "r_target = {:.6} J/g over {} winter days; r_hive = {}; regime {}",
        simulation.r_target(),
        winter.len(),
        quote
            .ratio
            .r_hive
            .map_or("n/a".to_string(), |r| format!("{r:.6} J/g")),
        quote.ratio.regime.as_str()
    );
    println!("foragers on day 0 = {:.3}", quote.budget);

    let mut resources = Vec::new();
    let mut lines = Vec::new();
    println!("id  kind    distance_m  rho         rho_crit      quality_or_tau0  capacity");
    for res in &scenario.resources {
        let d = scenario.distance(res).unwrap_or(f64::NAN);
        let rho_crit = critical_density(res, p);
        let (kind, score, capacity) = match res.kind {
            ResourceKind::Nectar => (
                "nectar",
                quality_at_distance(res, d, p)?,
                foragers_required(res, d, p),
            ),
            ResourceKind::Pollen => {
                let line = pollen_affine(res, d, scenario.market.xi, p)?;
                if res.in_bloom(0) {
                    lines.push(line);
                }
                ("pollen", line.zero_crossing(), line.capacity)
            }
        };
        println!(
            "{:<3} {kind:<7} {d:>10.1}  {:<10.4e}  {rho_crit:<12.4e}  {score:>15.6}  {capacity:>8.2}",
            res.id, res.density
        );
        resources.push(json!({
            "id": res.id,
            "kind": kind,
            "distance": d,
            "density": res.density,
            "rho_crit": rho_crit,
            "quality_or_zero_crossing": score,
            "capacity": capacity,
        }));
    }

    let cut = if lines.is_empty() || !(quote.budget > 0.0) {
        println!("pollen cut: no pollen resources or foragers on day 0");
        Value::Null
    } else {
        let cut = build_eta_cut(&lines, quote.budget)?;
        println!(
            "pollen cut for {:.3} foragers: t0 = {}, t1 = {}",
            quote.budget, cut.t0, cut.t1
        );
        json!({ "demand": cut.demand, "t0": finite(cut.t0), "t1": finite(cut.t1) })
    };

    if opts.out.is_some() {
        let dir = opts.out_dir()?;
        write_json(
            dir,
            "check.json",
            &json!({
                "scenario": scenario.name,
                "t_brood": scenario.thermal.t_brood,
                "d_max": p.d_max,
                "r_target": simulation.r_target(),
                "ratio": quote.ratio,
                "foragers": quote.budget,
                "resources": resources,
                "cut": cut,
            }),
        )?;
    }
    Ok(Status::Ok)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("inf")
    }
}

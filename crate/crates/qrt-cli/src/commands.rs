use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use qrt::ed::{self, FockConfig};
use qrt::measure::{inverted_variance, CoherentScale, EvalOptions};
use qrt::model::{boundary_g1c, critical_g1, critical_theta, soft_quasimomentum, ModelParams, Quasimomentum};
use qrt::modes::np_modes;
use qrt::qfi::{qfi, DerivativeMode};
use qrt::scaling::{fit_power_law, heisenberg_verdict, sweep, Axis, Column, Spacing, SweepRow, SweepSpec};
use qrt::state::{solve, solve_branch, Branch};
use qrt::{classify_phase, QrtError, SolverOptions};

use crate::config::{ConfigError, Resolver};
use crate::output::{fmt_f64, fmt_opt, to_json, Format, Table};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Fit(String),
    Oracle(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Fit(_) => 3,
            CliError::Oracle(_) => 4,
            CliError::Run(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Fit(m) | CliError::Oracle(m) | CliError::Run(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

fn config_err(e: QrtError) -> CliError {
    CliError::Config(e.to_string())
}

pub struct Ctx {
    pub format: Format,
    pub seed: u64,
    pub pool: rayon::ThreadPool,
}

fn render(ctx: &Ctx, table: Table, json_body: Value) -> Result<Vec<u8>, CliError> {
    match ctx.format {
        Format::Csv => table.to_csv().map_err(|e| CliError::Run(e.to_string())),
        Format::Json => Ok(to_json(json_body)),
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn model(r: &mut Resolver) -> Result<ModelParams, CliError> {
    let omega = r.f64("model", "omega", Some(1.0))?;
    let j = r.f64("model", "j", Some(0.1))?;
    r.set_units(omega, j);
    let delta = r.f64("model", "delta", Some(1e4))?;
    let theta = r.f64("model", "theta", Some(-2.0 * std::f64::consts::PI / 3.0))?;
    let g1 = r.f64("model", "g1", Some(0.3))?;
    ModelParams::new(omega, delta, j, theta, g1).map_err(config_err)
}

fn params_json(p: &ModelParams) -> Value {
    json!({ "omega": p.omega, "delta": p.delta, "j": p.j_hop, "theta": p.theta, "g1": p.g1 })
}

fn eval_options(r: &mut Resolver, ctx: &Ctx) -> Result<(EvalOptions, Option<Branch>, f64), CliError> {
    let derivative = match r.choice("eval", "derivative", &["total", "explicit"], "total")?.as_str() {
        "explicit" => DerivativeMode::Explicit,
        _ => DerivativeMode::Total,
    };
    let coherent = match r.choice("eval", "coherent", &["rescaled", "physical"], "rescaled")?.as_str() {
        "physical" => CoherentScale::Physical,
        _ => CoherentScale::Rescaled,
    };
    let defaults = SolverOptions::default();
    let random_starts = r.usize("eval", "random_starts", defaults.random_starts)?;
    let branch = match r.choice("eval", "branch", &["auto", "normal", "ferro", "chiral"], "auto")?.as_str() {
        "normal" => Some(Branch::Normal),
        "ferro" => Some(Branch::Ferro),
        "chiral" => Some(Branch::Chiral),
        _ => None,
    };
    let phase_tol = r.f64("eval", "phase_tol", Some(qrt::model::DEFAULT_PHASE_TOL))?;
    if !(phase_tol >= 0.0) {
        return Err(CliError::Config("[eval] phase_tol must be non-negative".into()));
    }
    let solver = SolverOptions { seed: ctx.seed, random_starts, ..defaults };
    Ok((EvalOptions { derivative, coherent, solver }, branch, phase_tol))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn q_label(q: Quasimomentum) -> &'static str {
    match q {
        Quasimomentum::Zero => "0",
        Quasimomentum::Plus => "+2pi/3",
        Quasimomentum::Minus => "-2pi/3",
    }
}

pub fn phase_diagram(r: &mut Resolver, ctx: &Ctx) -> Result<Vec<u8>, CliError> {
    let base = model(r)?;
    let pi = std::f64::consts::PI;
    let (t0, t1) = (r.f64("grid", "theta_min", Some(-pi))?, r.f64("grid", "theta_max", Some(pi))?);
    let (g0, g1) = (r.f64("grid", "g1_min", Some(0.0))?, r.f64("grid", "g1_max", Some(1.0))?);
    let nt = r.usize("grid", "theta_points", 121)?;
    let ng = r.usize("grid", "g1_points", 101)?;
    let nb = r.usize("grid", "boundary_points", 361)?;
    if nt == 0 || ng == 0 || nb == 0 || t1 < t0 || g1 < g0 || g0 < 0.0 {
        return Err(CliError::Config("[grid] ranges must be non-empty with min <= max and g1_min >= 0".into()));
    }
    let thc = critical_theta(base.omega, base.j_hop);
    let boundary: Vec<(f64, [f64; 3], Quasimomentum)> = linspace(t0, t1, nb)
        .into_iter()
        .map(|th| {
            let g = Quasimomentum::ALL.map(|q| boundary_g1c(q, th, base.omega, base.j_hop).unwrap_or(f64::NAN));
            (th, g, soft_quasimomentum(th, base.omega, base.j_hop))
        })
        .collect();
    let points: Vec<(f64, f64)> = linspace(t0, t1, nt).into_iter().flat_map(|th| linspace(g0, g1, ng).into_iter().map(move |g| (th, g))).collect();
    let grid: Vec<String> = ctx.pool.install(|| {
        points
            .par_iter()
            .map(|&(th, g)| match ModelParams::new(base.omega, base.delta, base.j_hop, th, g).and_then(|p| classify_phase(&p, qrt::model::DEFAULT_PHASE_TOL)) {
                Ok(l) => l.kind.as_str().to_string(),
                Err(e) => e.tag().to_string(),
            })
            .collect()
    });
    let lines = [(-thc, "theta_c"), (0.0, "fasp"), (thc, "theta_c")];

    let mut t = Table::new(vec!["record", "theta", "g1", "q", "phase"]);
    for (th, g, soft) in &boundary {
        for q in Quasimomentum::ALL {
            t.rows.push(vec!["boundary".into(), fmt_f64(*th), fmt_f64(g[q.index()]), q_label(q).into(), String::new()]);
        }
        t.rows.push(vec!["boundary_min".into(), fmt_f64(*th), fmt_f64(g[soft.index()]), q_label(*soft).into(), String::new()]);
    }
    for (th, name) in lines {
        t.rows.push(vec!["line".into(), fmt_f64(th), String::new(), String::new(), name.into()]);
    }
    for ((th, g), ph) in points.iter().zip(&grid) {
        t.rows.push(vec!["grid".into(), fmt_f64(*th), fmt_f64(*g), String::new(), ph.clone()]);
    }
    let body = json!({
        "theta_c": thc,
        "boundary": boundary.iter().map(|(th, g, soft)| json!({
            "theta": th,
            "g1c_zero": num(g[0]), "g1c_plus": num(g[1]), "g1c_minus": num(g[2]),
            "g1c": num(g[soft.index()]), "soft_q": q_label(*soft),
        })).collect::<Vec<_>>(),
        "lines": lines.iter().map(|(th, name)| json!({ "theta": th, "kind": name })).collect::<Vec<_>>(),
        "grid": points.iter().zip(&grid).map(|((th, g), ph)| json!({ "theta": th, "g1": g, "phase": ph })).collect::<Vec<_>>(),
    });
    render(ctx, t, body)
}

pub const SWEEP_COLUMNS: [&str; 10] = ["x", "distance", "phase", "I", "N1", "var_N1", "F", "ratio", "eps_soft", "status"];

fn row_json(r: &SweepRow) -> Value {
    json!({
        "x": num(r.x), "distance": num(r.distance), "phase": r.phase, "I": num(r.qfi), "N1": num(r.n1),
        "var_N1": num(r.var_n1), "F": num(r.f), "ratio": num(r.ratio), "eps_soft": num(r.eps_soft), "status": r.status,
        "var_N1_exact": num(r.var_n1_exact), "F_exact": num(r.f_exact), "N1_fluct": num(r.n1_fluct), "degenerate": r.degenerate,
    })
}

pub fn sweep_cmd(r: &mut Resolver, ctx: &Ctx) -> Result<Vec<u8>, CliError> {
    let base = model(r)?;
    let (options, branch, phase_tol) = eval_options(r, ctx)?;
    let axis = match r.choice("sweep", "axis", &["g1", "theta"], "g1")?.as_str() {
        "theta" => Axis::Theta,
        _ => Axis::G1,
    };
    let spacing = match r.choice("sweep", "spacing", &["log", "linear"], "log")?.as_str() {
        "linear" => Spacing::Linear,
        _ => Spacing::LogDistance,
    };
    let side = r.f64("sweep", "side", Some(1.0))?;
    if side != 1.0 && side != -1.0 {
        return Err(CliError::Config("[sweep] side must be +1 or -1".into()));
    }
    let critical = if r.has("sweep", "critical") {
        r.f64("sweep", "critical", None)?
    } else {
        let c = match axis {
            Axis::G1 => critical_g1(&base).map_err(config_err)?.1,
            Axis::Theta => critical_theta(base.omega, base.j_hop).copysign(if base.theta < 0.0 { -1.0 } else { 1.0 }),
        };
        r.resolved.entry("sweep".into()).or_default().insert("critical".into(), format!("{c:?}"));
        c
    };
    let range = match spacing {
        Spacing::LogDistance => (r.f64("sweep", "d_min", Some(1e-4))?, r.f64("sweep", "d_max", Some(1e-2))?),
        Spacing::Linear => (r.f64("sweep", "x_min", None)?, r.f64("sweep", "x_max", None)?),
    };
    let n_points = r.usize("sweep", "points", 20)?;
    let spec = SweepSpec { axis, base, critical, side, range, n_points, spacing, branch, phase_tol, options };
    let table = sweep(&spec).map_err(|e| match e {
        QrtError::Domain(m) => CliError::Config(m),
        other => CliError::Run(other.to_string()),
    })?;
    if table.rows.iter().all(|r| r.status != "ok") {
        return Err(CliError::Run("every sweep point failed".into()));
    }
    let mut t = Table::new(SWEEP_COLUMNS.to_vec());
    for row in &table.rows {
        t.rows.push(vec![
            fmt_f64(row.x),
            fmt_f64(row.distance),
            row.phase.clone(),
            fmt_f64(row.qfi),
            fmt_f64(row.n1),
            fmt_f64(row.var_n1),
            fmt_f64(row.f),
            fmt_f64(row.ratio),
            fmt_f64(row.eps_soft),
            row.status.clone(),
        ]);
    }
    let body = json!({
        "axis": match axis { Axis::G1 => "g1", Axis::Theta => "theta" },
        "critical": critical,
        "control": params_json(&base),
        "rows": table.rows.iter().map(row_json).collect::<Vec<_>>(),
    });
    render(ctx, t, body)
}

/// Columns of a sweep table as f64 vectors, from CSV or JSON.
fn read_table(path: &Path) -> Result<BTreeMap<String, Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cols: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid JSON in {}: {e}", path.display())))?;
        let rows = v.get("rows").and_then(|r| r.as_array()).ok_or_else(|| CliError::Config("JSON input has no rows array".into()))?;
        for row in rows {
            if let Some(obj) = row.as_object() {
                for (k, val) in obj {
                    if val.is_number() || val.is_null() {
                        cols.entry(k.clone()).or_default().push(val.as_f64().unwrap_or(f64::NAN));
                    }
                }
            }
        }
    } else {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers().map_err(|e| CliError::Config(e.to_string()))?.iter().map(String::from).collect();
        for rec in rd.records() {
            let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
            for (k, v) in header.iter().zip(rec.iter()) {
                cols.entry(k.clone()).or_default().push(v.parse::<f64>().unwrap_or(f64::NAN));
            }
        }
    }
    Ok(cols)
}

pub fn fit_cmd(r: &mut Resolver, ctx: &Ctx) -> Result<Vec<u8>, CliError> {
    let input = r.string("fit", "input", None)?;
    let names = r.string("fit", "columns", Some("I"))?;
    let window = (r.f64("fit", "d_min", Some(1e-4))?, r.f64("fit", "d_max", Some(1e-2))?);
    let tol = r.f64("fit", "verdict_tol", Some(0.15))?;
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(CliError::Config("[fit] requires 0 < d_min < d_max".into()));
    }
    let columns: Vec<Column> = names
        .split(',')
        .map(|s| Column::parse(s.trim()).ok_or_else(|| CliError::Config(format!("[fit] unknown column '{}'", s.trim()))))
        .collect::<Result<_, _>>()?;
    let data = read_table(Path::new(&input))?;
    let d = data.get("distance").ok_or_else(|| CliError::Config("input has no distance column".into()))?;
    let mut fits = Vec::new();
    for c in &columns {
        let y = data.get(c.name()).ok_or_else(|| CliError::Config(format!("input has no {} column", c.name())))?;
        let mut f = fit_power_law(d, y, window).map_err(|e| CliError::Fit(format!("{}: {e}", c.name())))?;
        if c.vanishes() {
            f.nu = f.slope;
        }
        fits.push((*c, f));
    }
    let nu_of = |c: Column| fits.iter().find(|(k, _)| *k == c).map(|(_, f)| f.nu);
    let verdict = match (nu_of(Column::Qfi), nu_of(Column::N1), nu_of(Column::EpsSoft)) {
        (Some(i), Some(n), Some(e)) => Some(heisenberg_verdict(i, n, e, tol)),
        _ => None,
    };
    let mut t = Table::new(vec!["column", "nu", "slope", "intercept", "r2", "window_min", "window_max", "n_points", "poor_fit"]);
    for (c, f) in &fits {
        t.rows.push(vec![
            c.name().into(),
            fmt_f64(f.nu),
            fmt_f64(f.slope),
            fmt_f64(f.intercept),
            fmt_f64(f.r2),
            fmt_f64(f.window.0),
            fmt_f64(f.window.1),
            f.n_points.to_string(),
            f.poor_fit.to_string(),
        ]);
    }
    let body = json!({
        "input": input,
        "fits": fits.iter().map(|(c, f)| json!({
            "column": c.name(), "nu": f.nu, "slope": f.slope, "intercept": f.intercept, "r2": f.r2,
            "window": [f.window.0, f.window.1], "n_points": f.n_points, "poor_fit": f.poor_fit,
        })).collect::<Vec<_>>(),
        "verdict": verdict,
    });
    render(ctx, t, body)
}

struct OracleRow {
    ratio: f64,
    g1: f64,
    distance: f64,
    qfi_formula: f64,
    qfi_ed: f64,
    gap_eff: f64,
    gap_ed: f64,
    converged: Option<bool>,
    status: String,
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::NAN
    } else {
        (a - b) / b
    }
}

fn oracle_point(base: &ModelParams, ratio: f64, distance: f64, cfg: &FockConfig, displaced: bool, fd: f64, cutoff_tol: f64, solver: &SolverOptions) -> OracleRow {
    let mut row = OracleRow {
        ratio,
        g1: f64::NAN,
        distance,
        qfi_formula: f64::NAN,
        qfi_ed: f64::NAN,
        gap_eff: f64::NAN,
        gap_ed: f64::NAN,
        converged: None,
        status: "ok".into(),
    };
    let run = |row: &mut OracleRow| -> Result<(), QrtError> {
        let p0 = ModelParams::new(base.omega, ratio * base.omega, base.j_hop, base.theta, 0.0)?;
        let (_, g1c) = critical_g1(&p0)?;
        let p = p0.with_g1(g1c * (1.0 - distance));
        row.g1 = p.g1;
        let superradiant = distance < 0.0;
        if superradiant && !displaced {
            row.status = "warning:superradiant-without-displaced-frame".into();
            return Ok(());
        }
        row.qfi_formula = qfi(&p)?.value;
        let mut cfg = *cfg;
        if superradiant {
            let gs = solve(&p, qrt::model::DEFAULT_PHASE_TOL, &[], solver)?;
            row.gap_eff = gs.eps_soft();
            cfg.displaced_frame = Some(gs.disp);
        } else {
            row.gap_eff = np_modes(&p)?.min_eps();
        }
        let res = ed::solve(&p, &cfg, cutoff_tol)?;
        row.gap_ed = res.gap;
        row.converged = Some(res.converged);
        row.qfi_ed = ed::qfi_fidelity(&p, &cfg, fd)?;
        Ok(())
    };
    if let Err(e) = run(&mut row) {
        row.status = e.tag().to_string();
    }
    row
}

/// "monotone" when |relative QFI error| strictly decreases with Δ/ω.
fn trend(rows: &[&OracleRow]) -> &'static str {
    let mut v: Vec<(f64, f64)> = rows.iter().map(|r| (r.ratio, rel(r.qfi_ed, r.qfi_formula).abs())).collect();
    if v.len() < 2 || v.iter().any(|x| !x.1.is_finite()) {
        return "n/a";
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    if v.windows(2).all(|w| w[1].1 < w[0].1) {
        "monotone"
    } else {
        "not-monotone"
    }
}

pub fn oracle_compare(r: &mut Resolver, ctx: &Ctx) -> Result<Vec<u8>, CliError> {
    let base = model(r)?;
    let (options, _, _) = eval_options(r, ctx)?;
    let ratios = r.f64_list("oracle", "delta_ratios", &[10.0, 20.0, 50.0])?;
    let distances = r.f64_list("oracle", "distances", &[1.0, 0.5, 0.2])?;
    let n_max = r.usize("oracle", "n_max", 8)?;
    let fd = r.f64("oracle", "fd_step", Some(1e-3))?;
    let max_dim = r.usize("oracle", "max_dim", 400_000)?;
    let displaced = r.bool("oracle", "displaced", false)?;
    let cutoff_tol = r.f64("oracle", "cutoff_tol", Some(1e-6))?;
    if ratios.iter().any(|&x| !(x > 0.0)) || distances.iter().any(|&d| d > 1.0) || !(fd > 0.0) || n_max < 1 {
        return Err(CliError::Config("[oracle] needs positive Δ/ω ratios, distances <= 1, fd_step > 0 and n_max >= 1".into()));
    }
    let cfg = FockConfig { n_max, max_dim, ..Default::default() };
    // the cutoff check diagonalizes at n_max + 2
    let needed = FockConfig { n_max: n_max + 2, ..cfg }.dim();
    if needed > max_dim {
        return Err(CliError::Oracle(format!("Hilbert dimension {needed} exceeds max_dim {max_dim}")));
    }
    let jobs: Vec<(f64, f64)> = distances.iter().flat_map(|&d| ratios.iter().map(move |&x| (d, x))).collect();
    let rows: Vec<OracleRow> = ctx.pool.install(|| jobs.par_iter().map(|&(d, x)| oracle_point(&base, x, d, &cfg, displaced, fd, cutoff_tol, &options.solver)).collect());
    let trends: Vec<(f64, &str)> = distances
        .iter()
        .map(|&d| {
            let group: Vec<&OracleRow> = rows.iter().filter(|r| r.distance == d).collect();
            (d, trend(&group))
        })
        .collect();
    let trend_of = |d: f64| trends.iter().find(|t| t.0 == d).map(|t| t.1).unwrap_or("n/a");
    let mut t = Table::new(vec!["delta_ratio", "g1", "distance", "I_formula", "I_ed", "rel_err_I", "gap_eff", "gap_ed", "rel_err_gap", "converged", "trend", "status"]);
    for row in &rows {
        t.rows.push(vec![
            fmt_f64(row.ratio),
            fmt_f64(row.g1),
            fmt_f64(row.distance),
            fmt_f64(row.qfi_formula),
            fmt_f64(row.qfi_ed),
            fmt_f64(rel(row.qfi_ed, row.qfi_formula)),
            fmt_f64(row.gap_eff),
            fmt_f64(row.gap_ed),
            fmt_f64(rel(row.gap_ed, row.gap_eff)),
            row.converged.map(|c| c.to_string()).unwrap_or_default(),
            trend_of(row.distance).into(),
            row.status.clone(),
        ]);
    }
    let body = json!({
        "theta": base.theta,
        "n_max": n_max,
        "rows": rows.iter().map(|row| json!({
            "delta_ratio": row.ratio, "g1": num(row.g1), "distance": row.distance,
            "I_formula": num(row.qfi_formula), "I_ed": num(row.qfi_ed), "rel_err_I": num(rel(row.qfi_ed, row.qfi_formula)),
            "gap_eff": num(row.gap_eff), "gap_ed": num(row.gap_ed), "rel_err_gap": num(rel(row.gap_ed, row.gap_eff)),
            "converged": row.converged, "status": row.status,
        })).collect::<Vec<_>>(),
        "trends": trends.iter().map(|(d, v)| json!({ "distance": d, "trend": v })).collect::<Vec<_>>(),
    });
    render(ctx, t, body)
}

pub fn measure_cmd(r: &mut Resolver, ctx: &Ctx) -> Result<Vec<u8>, CliError> {
    let p = model(r)?;
    let (options, branch, phase_tol) = eval_options(r, ctx)?;
    let gs = match branch {
        Some(b) => solve_branch(&p, b, &[], &options.solver),
        None => solve(&p, phase_tol, &[], &options.solver),
    }
    .map_err(|e| match e {
        QrtError::AmbiguousPhase(_) | QrtError::Domain(_) => config_err(e),
        other => CliError::Run(other.to_string()),
    })?;
    let m = inverted_variance(&gs, &options).map_err(|e| CliError::Run(e.to_string()))?;
    let fields: Vec<(&'static str, String, Value)> = vec![
        ("phase", m.phase.kind.as_str().into(), json!(m.phase.kind.as_str())),
        ("soft_q", q_label(m.phase.soft_q).into(), json!(q_label(m.phase.soft_q))),
        ("N1", fmt_f64(m.n1_mean), num(m.n1_mean)),
        ("var_N1", fmt_f64(m.n1_var), num(m.n1_var)),
        ("dN1_dg1", fmt_f64(m.dn1_dg1), num(m.dn1_dg1)),
        ("F", fmt_f64(m.inv_variance), num(m.inv_variance)),
        ("I", fmt_f64(m.qfi), num(m.qfi)),
        ("ratio", fmt_f64(m.qcrb_ratio), num(m.qcrb_ratio)),
        ("var_N1_exact", fmt_f64(m.n1_var_exact), num(m.n1_var_exact)),
        ("F_exact", fmt_f64(m.inv_variance_exact), num(m.inv_variance_exact)),
        ("ratio_exact", fmt_f64(m.qcrb_ratio_exact), num(m.qcrb_ratio_exact)),
        ("F_fsp_closed", fmt_opt(m.inv_variance_fsp_closed), m.inv_variance_fsp_closed.map(num).unwrap_or(Value::Null)),
        ("eps_soft", fmt_f64(gs.eps_soft()), num(gs.eps_soft())),
    ];
    let mut t = Table::new(fields.iter().map(|f| f.0).collect());
    t.rows.push(fields.iter().map(|f| f.1.clone()).collect());
    let mut body = serde_json::Map::new();
    body.insert("params".into(), params_json(&p));
    for (k, _, v) in fields {
        body.insert(k.into(), v);
    }
    render(ctx, t, Value::Object(body))
}

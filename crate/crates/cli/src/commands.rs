use std::io::Write;
use std::path::{Path, PathBuf};

use diffmourre::grid::frequencies;
use diffmourre::lap::{self, eps_sweep, geometric_eps, spectrum_summary, LapCurve, SpectralResolvent, StateSummary};
use diffmourre::mourre::{commutator_symbol, free_mourre_check, projected_mourre, MourreOptions};
use diffmourre::potentials::{assumption_report, boundary_warnings, build_potential};
use diffmourre::symcom::{self, golden_corpus, normalize, parse_corpus, CorpusEntry, CrossCheck, OpExpr};
use diffmourre::{Error, Field, GridSpec, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{e16, Sink};
use crate::plots::{render, Chart, Mark, Series};

pub struct Context {
    pub config: RunConfig,
    pub hash: String,
    pub out: PathBuf,
    pub json: bool,
    pub plots: bool,
}

impl Context {
    fn sink<'a>(&'a self, command: &'a str) -> Result<Sink<'a>> {
        Sink::new(&self.out, command, &self.hash)
    }

    fn potential(&self, grid: &GridSpec) -> Result<Field> {
        let v = build_potential(&self.config.potential, grid)?;
        for w in boundary_warnings(&self.config.potential, &v) {
            eprintln!("warning: potentials: {w}");
        }
        Ok(v)
    }

    fn report<T: Serialize>(&self, sink: &Sink, value: &T, summary: impl FnOnce()) -> Result<()> {
        if self.json {
            print!("{}", sink.json_text(value)?);
        } else {
            summary();
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct SymcheckRow {
    identity: String,
    symbolic: bool,
    numeric: Option<CrossCheck>,
    numeric_note: Option<String>,
    residual: Option<String>,
    pass: bool,
}

/// Returns false when any identity fails.
pub fn symcheck(ctx: &Context, corpus: Option<&Path>) -> Result<bool> {
    let entries: Vec<CorpusEntry> = match corpus {
        Some(p) => parse_corpus(&std::fs::read_to_string(p)?)?,
        None => golden_corpus(),
    };
    let cases: Vec<_> = entries.iter().flat_map(|e| e.cases.iter()).collect();
    // parse everything first so syntax errors surface before any work
    for c in &cases {
        c.sides()?;
    }
    let rows: Vec<SymcheckRow> = cases
        .par_iter()
        .map(|c| {
            let (l, r) = c.sides()?;
            let symbolic = c.holds()?;
            let residual = if symbolic { None } else { Some(normalize(&OpExpr::sub(l, r))?.to_string()) };
            let (numeric, numeric_note) = match symcom::cross_check_default(c, ctx.config.seed) {
                Ok(x) => (Some(x), None),
                Err(Error::Algebra(msg)) => (None, Some(msg)),
                Err(e) => return Err(e),
            };
            let pass = symbolic && numeric.as_ref().is_none_or(|n| n.passes());
            Ok(SymcheckRow { identity: c.name.clone(), symbolic, numeric, numeric_note, residual, pass })
        })
        .collect::<Result<_>>()?;
    let sink = ctx.sink("symcheck")?;
    sink.json("symcheck.json", &rows)?;
    let passed = rows.iter().filter(|r| r.pass).count();
    ctx.report(&sink, &rows, || {
        let width = rows.iter().map(|r| r.identity.len()).max().unwrap_or(8).max(8);
        println!("{:<width$}  {:<9}  {:>10}  {:>10}  status", "identity", "symbolic", "engine", "sides");
        for r in &rows {
            let (engine, sides) = match &r.numeric {
                Some(n) => (format!("{:.2e}", n.engine_lhs.max(n.engine_rhs)), format!("{:.2e}", n.sides)),
                None => ("-".into(), "-".into()),
            };
            let sym = if r.symbolic { "equal" } else { "differs" };
            let status = if r.pass { "PASS" } else { "FAIL" };
            println!("{:<width$}  {sym:<9}  {engine:>10}  {sides:>10}  {status}", r.identity);
            if let Some(res) = &r.residual {
                println!("{:<width$}  lhs - rhs = {res}", "");
            }
        }
        println!("{passed}/{} identities pass", rows.len());
    })?;
    for r in rows.iter().filter(|r| !r.pass) {
        eprintln!("symcom: identity `{}` failed", r.identity);
    }
    Ok(passed == rows.len())
}

#[derive(Serialize)]
struct FreeMourreRecord {
    grid: crate::config::GridConfig,
    window: crate::config::WindowConfig,
    delta: f64,
    delta_support: f64,
    margin: f64,
    shell_frequencies: usize,
}

pub fn freemourre(ctx: &Context) -> Result<()> {
    let grid = ctx.config.grid()?;
    let window = ctx.config.energy_window()?;
    let check = free_mourre_check(&grid, &window)?;
    let record = FreeMourreRecord {
        grid: ctx.config.grid.clone(),
        window: ctx.config.window.clone(),
        delta: check.delta,
        delta_support: check.delta_support,
        margin: check.margin,
        shell_frequencies: check.shell_frequencies,
    };
    let sink = ctx.sink("freemourre")?;
    sink.json("freemourre.json", &record)?;
    let mut xi = frequencies(&grid);
    xi.sort_by(f64::total_cmp);
    let curve: Vec<(f64, f64)> = xi
        .iter()
        .map(|&x| {
            let mut v = vec![0.0; grid.dim()];
            v[0] = x;
            (x, commutator_symbol(&v, grid.beta()))
        })
        .collect();
    sink.csv("symbol.csv", |w| {
        writeln!(w, "xi,symbol")?;
        for (x, s) in &curve {
            writeln!(w, "{},{}", e16(*x), e16(*s))?;
        }
        Ok(())
    })?;
    if ctx.plots {
        let chart = Chart {
            title: "commutator symbol along the first axis",
            x_label: "xi",
            y_label: "symbol",
            log_x: false,
            log_y: false,
            mark: Mark::Line,
        };
        sink.svg("symbol.svg", render(&chart, &[Series { label: "sin(beta xi) xi / beta".into(), points: curve }]))?;
    }
    ctx.report(&sink, &record, || {
        println!("delta = {:.6}  (support {:.6})", record.delta, record.delta_support);
        println!("pointwise margin = {:.3e} over {} window frequencies", record.margin, record.shell_frequencies);
    })
}

pub fn mourre(ctx: &Context) -> Result<()> {
    let grid = ctx.config.grid()?;
    let window = ctx.config.energy_window()?;
    ctx.config.potential.validate()?;
    let options = MourreOptions {
        c_fraction: ctx.config.mourre.c_fraction,
        route: ctx.config.mourre.route,
        dense_cap: ctx.config.dense_cap,
        ..MourreOptions::default()
    };
    if !(options.c_fraction > 0.0 && options.c_fraction <= 1.0) {
        return Err(Error::InvalidGrid(format!("mourre.c_fraction = {} must lie in (0, 1]", options.c_fraction)));
    }
    let report = projected_mourre(&grid, |g| ctx.potential(g), &window, &options)?;
    let sink = ctx.sink("mourre")?;
    sink.json("mourre.json", &report)?;
    sink.csv("mourre_spectrum.csv", |w| {
        writeln!(w, "index,mu")?;
        for (k, mu) in report.spectrum.iter().enumerate() {
            writeln!(w, "{k},{}", e16(*mu))?;
        }
        Ok(())
    })?;
    if ctx.plots {
        let chart = Chart {
            title: "compressed commutator spectrum",
            x_label: "index",
            y_label: "mu",
            log_x: false,
            log_y: false,
            mark: Mark::Dots,
        };
        let pts = report.spectrum.iter().enumerate().map(|(k, &m)| (k as f64, m)).collect();
        let c_line = vec![(0.0, report.c), (report.spectrum.len().saturating_sub(1) as f64, report.c)];
        let doc = render(&chart, &[Series { label: "mu".into(), points: pts }, Series { label: "c".into(), points: c_line }]);
        sink.svg("mourre_spectrum.svg", doc)?;
    }
    ctx.report(&sink, &report, || {
        println!("delta_free = {:.6}, c = {:.6}, k = {} of {}", report.delta_free, report.c, report.k, report.spectrum.len());
        for row in &report.l_scan {
            println!("  L = {:<6} k = {}", row.half_width, row.k);
        }
    })
}

pub fn lap(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let grid = cfg.grid()?;
    cfg.validate_lap()?;
    cfg.potential.validate()?;
    let v = ctx.potential(&grid)?;
    let res = SpectralResolvent::new(&grid, &v, cfg.dense_cap)?;
    let wr = res.weighted(cfg.lap.weight, cfg.lap.gamma, cfg.dense_cap)?;
    let curves: Vec<LapCurve> = cfg
        .lap
        .lambda
        .iter()
        .map(|&lambda| {
            let eps = if cfg.lap.eps.is_empty() {
                // stay below ε = 1 where possible: above it the norm is just ~1/ε
                let floor = wr.eps_floor(lambda);
                geometric_eps((1e2 * floor).min(1.0).max(1e1 * floor), floor, 7)
            } else {
                cfg.lap.eps.clone()
            };
            eps_sweep(&wr, lambda, &eps, cfg.lap.enforce_floor)
        })
        .collect::<Result<_>>()?;
    let sink = ctx.sink("lap")?;
    for (k, c) in curves.iter().enumerate() {
        sink.csv(&format!("lap_{k}.csv"), |w| lap::write_lap_csv(w, std::slice::from_ref(c)))?;
    }
    sink.json("lap.json", &curves)?;
    if ctx.plots {
        let chart = Chart {
            title: "weighted resolvent norm",
            x_label: "eps",
            y_label: "norm",
            log_x: true,
            log_y: true,
            mark: Mark::Line,
        };
        let series: Vec<Series> =
            curves.iter().map(|c| Series { label: format!("lambda = {}", c.lambda), points: c.rows.clone() }).collect();
        sink.svg("lap.svg", render(&chart, &series))?;
    }
    ctx.report(&sink, &curves, || {
        for c in &curves {
            println!(
                "lambda = {}: classification={}  floor = {:.3e}  last-decade change = {:.2}%  slope = {:.3}",
                c.lambda,
                c.classification.tag(),
                c.eps_floor,
                100.0 * c.last_decade_change,
                c.slope
            );
        }
    })
}

#[derive(Serialize)]
struct SpectrumRecord {
    window_top: f64,
    eigenvalues_below_top: usize,
    in_window: usize,
    localized_in_window: usize,
    localized: usize,
    states: Vec<StateRecord>,
}

#[derive(Serialize)]
struct StateRecord {
    #[serde(flatten)]
    state: StateSummary,
    in_window: bool,
}

pub fn spectrum(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let grid = cfg.grid()?;
    cfg.potential.validate()?;
    let v = ctx.potential(&grid)?;
    let res = SpectralResolvent::new(&grid, &v, cfg.dense_cap)?;
    let top = grid.window_top();
    let states: Vec<StateRecord> = spectrum_summary(&res, f64::NEG_INFINITY, top)
        .into_iter()
        .map(|s| StateRecord { in_window: s.energy > 0.0 && s.energy < top, state: s })
        .collect();
    let record = SpectrumRecord {
        window_top: top,
        eigenvalues_below_top: states.len(),
        in_window: states.iter().filter(|s| s.in_window).count(),
        localized_in_window: states.iter().filter(|s| s.in_window && s.state.localized).count(),
        localized: states.iter().filter(|s| s.state.localized).count(),
        states,
    };
    let sink = ctx.sink("spectrum")?;
    sink.json("spectrum.json", &record)?;
    sink.csv("spectrum.csv", |w| {
        writeln!(w, "energy,participation,x2,localized,in_window")?;
        for s in &record.states {
            let st = &s.state;
            writeln!(w, "{},{},{},{},{}", e16(st.energy), e16(st.participation), e16(st.x2), st.localized, s.in_window)?;
        }
        Ok(())
    })?;
    if ctx.plots {
        let chart = Chart {
            title: "eigenvalues and participation ratio",
            x_label: "energy",
            y_label: "participation",
            log_x: false,
            log_y: false,
            mark: Mark::Dots,
        };
        let pts = record.states.iter().map(|s| (s.state.energy, s.state.participation)).collect();
        sink.svg("spectrum.svg", render(&chart, &[Series { label: "states".into(), points: pts }]))?;
    }
    ctx.report(&sink, &record, || {
        println!(
            "{} eigenvalues below {:.4}; {} in I, {} localized ({} in I)",
            record.eigenvalues_below_top, top, record.in_window, record.localized, record.localized_in_window
        );
        for s in record.states.iter().filter(|s| s.state.localized) {
            println!("  E = {:.6}  participation = {:.4}  <x^2> = {:.4}", s.state.energy, s.state.participation, s.state.x2);
        }
    })
}

pub fn assumptions(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let grid = cfg.grid()?;
    let report = assumption_report(&cfg.potential, &grid, cfg.dense_cap)?;
    let sink = ctx.sink("assumptions")?;
    sink.json("assumptions.json", &report)?;
    ctx.report(&sink, &report, || {
        println!("{}", report.proxy_note);
        for r in &report.rows {
            println!(
                "  {:<22} sup = {:.3e}  sv slope = {:>8}  compact proxy = {:<5}  bounded proxy = {}",
                r.quantity,
                r.sup_norm,
                r.sv_slope.map_or("-".into(), |s| format!("{s:.3}")),
                r.compact_proxy,
                r.bounded_proxy
            );
        }
    })
}

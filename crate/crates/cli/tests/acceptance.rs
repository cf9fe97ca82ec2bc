//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use diffmourre::lap::{c2_regularity_check, eps_sweep, geometric_eps, Classification, SpectralResolvent};
use diffmourre::linalg::{self, hermitian_defect, CMat};
use diffmourre::mourre::{
    commutator_symbol, delta_free, free_mourre_check, hamiltonian_real, i_a_real, projected_mourre, EnergyWindow, MourreOptions,
};
use diffmourre::operators::{a_op, a_op_decomposed, interior_relative_difference, shift_op, Sign, WeightKind, DEFAULT_DENSE_CAP};
use diffmourre::potentials::{assumption_report_default, build_potential, PotentialSpec};
use diffmourre::symcom::{cross_check, golden_corpus, random_bindings};
use diffmourre::{make_grid, Field, GridSpec};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid(d: usize, l: f64, n: usize, beta: f64) -> GridSpec {
    make_grid(d, l, n, beta).expect("valid acceptance grid")
}

fn window_1_2() -> EnergyWindow {
    EnergyWindow::new(1.0, 2.0, 0.5, 1.0).expect("[1,2] lies inside I for beta = 1")
}

fn symbolic_suite() -> Outcome {
    let start = Instant::now();
    let corpus = golden_corpus();
    let mut failed = Vec::new();
    let mut cases = 0;
    for e in &corpus {
        for c in &e.cases {
            cases += 1;
            if !c.holds().unwrap_or(false) {
                failed.push(c.name.clone());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failed.is_empty() && corpus.len() == 5 && secs < 5.0,
        format!("{} identities ({cases} cases), failed {failed:?}, {secs:.2}s (limit 5s)", corpus.len()),
    )
}

fn numeric_symbolic() -> Outcome {
    // the j != k double commutator needs a second axis; every other identity runs on the d = 1 grid
    let g1 = grid(1, 8.0, 128, 1.0);
    let g2 = grid(2, 4.0, 32, 1.0);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut errors = Vec::new();
    for seed in 1..=10u64 {
        for e in golden_corpus() {
            for c in &e.cases {
                let (l, r) = c.sides().expect("golden corpus parses");
                let g = if l.max_axis().max(r.max_axis()) == Some(1) { &g2 } else { &g1 };
                let mut names = l.functions();
                names.extend(r.functions());
                names.dedup();
                match cross_check(c, g, &random_bindings(g, &names, seed)) {
                    Ok(x) => {
                        worst = worst.max(x.engine_lhs).max(x.engine_rhs);
                        checks += 1;
                    }
                    Err(err) => errors.push(format!("{}: {err}", c.name)),
                }
            }
        }
    }
    outcome(
        errors.is_empty() && worst <= 1e-10,
        format!("{checks} side pairs over 10 random potentials, worst relative Frobenius {worst:.2e} (limit 1e-10) {errors:?}"),
    )
}

fn exactness() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for g in [grid(1, 8.0, 128, 1.0), grid(2, 4.0, 32, 1.0)] {
        let a = a_op(&g).to_dense().expect("within cap");
        let defect = hermitian_defect(&a);
        let mut unitary = true;
        for axis in 0..g.dim() {
            let t = shift_op(&g, axis, Sign::Plus).to_dense().expect("within cap");
            let entries_ok = (0..g.len()).all(|i| (0..g.len()).all(|j| t[(i, j)] == linalg::ZERO || t[(i, j)] == linalg::ONE));
            let rows_ok = (0..g.len()).all(|i| (0..g.len()).filter(|&j| t[(i, j)] == linalg::ONE).count() == 1);
            let cols_ok = (0..g.len()).all(|j| (0..g.len()).filter(|&i| t[(i, j)] == linalg::ONE).count() == 1);
            let tt: CMat = &t * t.adjoint();
            let id_ok = (0..g.len()).all(|i| (0..g.len()).all(|j| tt[(i, j)] == if i == j { linalg::ONE } else { linalg::ZERO }));
            unitary &= entries_ok && rows_ok && cols_ok && id_ok;
        }
        let dec = a_op_decomposed(&g).to_dense().expect("within cap");
        let eq3 = interior_relative_difference(&g, &a, &dec);
        pass &= defect == 0.0 && unitary && eq3 <= 1e-12;
        notes.push(format!("d={}: |A-A*|={defect:e}, T permutation+unitary={unitary}, interior |A-A(expansion)|={eq3:.1e}", g.dim()));
    }
    outcome(pass, notes.join("; "))
}

fn scan_oracle_1d(a: f64, b: f64) -> f64 {
    let (r0, r1) = ((2.0 * a).sqrt(), (2.0 * b).sqrt());
    let n = 1_000_000;
    (0..=n).map(|k| r0 + (r1 - r0) * k as f64 / n as f64).map(|r| r.sin() * r).fold(f64::INFINITY, f64::min)
}

fn sphere_oracle_2d(a: f64, b: f64) -> f64 {
    let (r0, r1) = ((2.0 * a).sqrt(), (2.0 * b).sqrt());
    let mut best = f64::INFINITY;
    for i in 0..=400 {
        let r = r0 + (r1 - r0) * i as f64 / 400.0;
        for j in 0..4000 {
            let th = std::f64::consts::TAU * j as f64 / 4000.0;
            let (x, y) = (r * th.cos(), r * th.sin());
            best = best.min(x.sin() * x + y.sin() * y);
        }
    }
    best
}

fn free_mourre() -> Outcome {
    let start = Instant::now();
    let w = window_1_2();
    let d1 = delta_free(&w, 1).expect("window valid");
    let d2 = delta_free(&w, 2).expect("window valid");
    let o1 = scan_oracle_1d(1.0, 2.0);
    let o2 = sphere_oracle_2d(1.0, 2.0);
    let m1 = free_mourre_check(&grid(1, 16.0, 256, 1.0), &w).expect("resolved window");
    let m2 = free_mourre_check(&grid(2, 16.0, 128, 1.0), &w).expect("resolved window");
    let secs = start.elapsed().as_secs_f64();
    let pass = (d1 - o1).abs() <= 1e-3
        && (d1 - 1.3970).abs() <= 1e-3
        && (d2 - o2).abs() <= 0.01 * o2
        && m1.margin >= -1e-12
        && m2.margin >= -1e-12
        && secs < 10.0;
    outcome(
        pass,
        format!(
            "delta_free d=1 {d1:.6} (oracle {o1:.6}), d=2 {d2:.6} (sphere oracle {o2:.6}), margins {:.1e}/{:.1e}, {secs:.2}s (limit 10s)",
            m1.margin, m2.margin
        ),
    )
}

fn symbol_window() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for g in [grid(1, 8.0, 128, 1.0), grid(2, 8.0, 64, 1.0)] {
        let edge = std::f64::consts::PI / g.beta();
        let edge_k = (g.half_width() / g.beta()).round() as i64;
        let mut min_inside = f64::INFINITY;
        let mut max_edge: f64 = 0.0;
        let mut edge_points = 0;
        for i in 0..g.len() {
            let xi = g.xi(i);
            let xi = &xi[..g.dim()];
            let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let s = commutator_symbol(xi, g.beta());
            if norm > 0.0 && norm < edge * (1.0 - 1e-12) {
                min_inside = min_inside.min(s);
            }
            let ks: Vec<i64> = (0..g.dim()).map(|a| g.wavenumber(g.axis_index(i, a))).collect();
            if ks.iter().filter(|&&k| k.abs() == edge_k).count() == 1 && ks.iter().all(|&k| k == 0 || k.abs() == edge_k) {
                edge_points += 1;
                max_edge = max_edge.max(s.abs());
            }
        }
        pass &= min_inside > 0.0 && edge_points > 0 && max_edge <= 1e-12;
        notes.push(format!("d={}: min inside {min_inside:.3e}, |symbol| at {edge_points} edge points <= {max_edge:.1e}", g.dim()));
    }
    outcome(pass, notes.join("; "))
}

fn projected_stability() -> Outcome {
    let g = grid(1, 8.0, 128, 1.0);
    let w = window_1_2();
    let opts = MourreOptions::default();
    let spec = PotentialSpec::example5(2.0, 0.5);
    let run = |spec: &PotentialSpec| projected_mourre(&g, |g| build_potential(spec, g), &w, &opts);
    match (run(&spec), run(&PotentialSpec::Zero)) {
        (Ok(r), Ok(r0)) => {
            let ks: Vec<usize> = r.l_scan.iter().map(|s| s.k).collect();
            let ls: Vec<f64> = r.l_scan.iter().map(|s| s.half_width).collect();
            let k0: Vec<usize> = r0.l_scan.iter().map(|s| s.k).collect();
            let monotone = ks.windows(2).all(|p| p[1] <= p[0]);
            outcome(
                monotone && k0.iter().all(|&k| k == 0) && r0.k == 0,
                format!("L {ls:?}: k {ks:?} at c = {:.4}; V=0 control k {k0:?}", r.c),
            )
        }
        (a, b) => outcome(false, format!("error: {:?} / {:?}", a.err(), b.err())),
    }
}

fn lap_classification() -> Outcome {
    // free case: largest admissible box at n = 1024
    let start = Instant::now();
    let g = grid(1, 128.0, 1024, 1.0);
    let free = SpectralResolvent::new(&g, &Field::zeros(&g), DEFAULT_DENSE_CAP).expect("dense H");
    let wr = free.weighted(WeightKind::Position, 1.0, DEFAULT_DENSE_CAP).expect("weight");
    let floor = wr.eps_floor(1.0);
    let free_curve = eps_sweep(&wr, 1.0, &geometric_eps(1e2 * floor, floor, 7), true).expect("sweep");
    let free_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let gw = grid(1, 16.0, 256, 1.0);
    let v = build_potential(&PotentialSpec::Well { depth: -5.0, width: 2.0 }, &gw).expect("well");
    let well = SpectralResolvent::new(&gw, &v, DEFAULT_DENSE_CAP).expect("dense H");
    let e0 = well.eigenvalues()[0];
    let wr = well.weighted(WeightKind::Position, 1.0, DEFAULT_DENSE_CAP).expect("weight");
    let well_curve = eps_sweep(&wr, e0, &geometric_eps(1e-1, 1e-4, 7), false).expect("sweep");
    let well_secs = start.elapsed().as_secs_f64();

    let free_ok = matches!(free_curve.classification, Classification::Saturating) && free_secs < 60.0;
    let well_ok = matches!(well_curve.classification, Classification::Diverging { slope } if (slope + 1.0).abs() <= 0.1)
        && well_secs < 60.0;
    outcome(
        free_ok && well_ok,
        format!(
            "free lambda=1: {} (eps {:.2e}..{:.2e}, floor {:.2e}, last-decade change {:.1}%, limit 5%, {free_secs:.1}s); \
             well E0={e0:.4}: {} (slope {:.3}, R2 {:.4}, {well_secs:.1}s)",
            free_curve.classification.tag(),
            free_curve.rows[0].0,
            free_curve.rows.last().unwrap().0,
            free_curve.eps_floor,
            100.0 * free_curve.last_decade_change,
            well_curve.classification.tag(),
            well_curve.slope,
            well_curve.r_squared,
        ),
    )
}

fn c2_probe() -> Outcome {
    let g = grid(1, 4.0, 64, 1.0);
    let v = build_potential(&PotentialSpec::example5(2.0, 0.5), &g).expect("potential");
    let z = Complex64::new(1.0, 0.5);
    let rep = match c2_regularity_check(&g, &v, z, &[1e-2, 5e-3], &[1e-3, 2e-3, 5e-3, 1e-2], DEFAULT_DENSE_CAP) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    // the sign as stated with a minus, evaluated independently
    let res = SpectralResolvent::new(&g, &v, DEFAULT_DENSE_CAP).expect("dense H");
    let r = res.matrix(z).expect("off the real axis");
    let ia = linalg::to_complex(&i_a_real(&g, DEFAULT_DENSE_CAP).expect("iA"));
    let h = linalg::to_complex(&hamiltonian_real(&g, &v, DEFAULT_DENSE_CAP).expect("H"));
    let lhs = &ia * &r - &r * &ia;
    let rhs = &r * (&h * &ia - &ia * &h) * &r;
    let minus_form = linalg::relative_difference(&lhs, &linalg::scaled(&rhs, -linalg::ONE));
    let ratio = rep.richardson_ratios[0];
    let pass = (ratio - 4.0).abs() <= 0.5 && rep.identity_residual <= 1e-10 && rep.second_variation < 0.1;
    outcome(
        pass,
        format!(
            "Richardson ratio {ratio:.3} (4 +- 0.5), i[A,R] = +R[H,iA]R residual {:.1e} (minus-sign form leaves {minus_form:.2}), \
             second-difference variation {:.2}% (limit 10%)",
            rep.identity_residual,
            100.0 * rep.second_variation
        ),
    )
}

fn assumption_proxies() -> Outcome {
    let g = grid(1, 16.0, 256, 1.0);
    let decaying = assumption_report_default(&PotentialSpec::example5(1.0, 1.0), &g);
    let periodic = assumption_report_default(&PotentialSpec::example5(0.0, 1.0), &g);
    match (decaying, periodic) {
        (Ok(d), Ok(p)) => {
            let v = d.row("V").expect("row");
            let xv = d.row("x1*D1(V)").expect("row");
            let pv = p.row("V").expect("row");
            let fmt = |r: &diffmourre::potentials::AssumptionRow| {
                format!("compact={} slope={:.3} decay={:.2}", r.compact_proxy, r.sv_slope.unwrap_or(f64::NAN), r.decay_exponent.unwrap_or(f64::NAN))
            };
            outcome(
                v.compact_proxy && xv.compact_proxy && !pv.compact_proxy,
                format!("gamma=1 V [{}], x1*D1(V) [{}]; periodic W alone V [{}]", fmt(v), fmt(xv), fmt(pv)),
            )
        }
        (a, b) => outcome(false, format!("error: {:?} / {:?}", a.err(), b.err())),
    }
}

fn run_cli(config: &Path, out: &Path, args: &[&str]) -> (i32, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_diffmourre"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--plots")
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), o.stdout)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"grid": {"d": 1, "L": 8, "n": 128, "beta": 1},
            "potential": {"kind": "example5", "gamma": 2, "amplitude": 0.5},
            "lap": {"gamma": 1, "weight": "conj", "lambda": [1.0, 3.0], "enforce_floor": false}}"#,
    )
    .expect("write config");
    let mut notes = Vec::new();
    let mut pass = true;
    for cmd in ["symcheck", "freemourre", "mourre", "lap", "spectrum", "assumptions"] {
        let (a, b) = (tmp.path().join(format!("{cmd}-a")), tmp.path().join(format!("{cmd}-b")));
        let (ca, sa) = run_cli(&config, &a, &[cmd]);
        let (cb, sb) = run_cli(&config, &b, &[cmd]);
        let (fa, fb) = (dir_contents(&a), dir_contents(&b));
        let same = ca == 0 && cb == 0 && sa == sb && !fa.is_empty() && fa == fb;
        pass &= same;
        notes.push(format!("{cmd}:{}({} files)", if same { "identical" } else { "DIFFERENT" }, fa.len()));
    }
    outcome(pass, notes.join(" "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("symbolic identity suite", symbolic_suite),
        ("numeric-symbolic cross-validation", numeric_symbolic),
        ("exactness of A and T", exactness),
        ("free Mourre constant", free_mourre),
        ("symbol window", symbol_window),
        ("projected Mourre stability", projected_stability),
        ("LAP saturation/divergence", lap_classification),
        ("C2 probe", c2_probe),
        ("assumption proxies", assumption_proxies),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} [{:.1}s]: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

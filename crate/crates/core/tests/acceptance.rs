//! Acceptance run: one PASS/FAIL (or REPORT) line per criterion; exits
//! nonzero when any gated criterion fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use curvefem::lift::{certify_prop44, trace_mismatch};
use curvefem::study::{self, cubic_defects, interpolation_on_series, mesh_series, run_on_series, CertifyConfig, RunConfig};
use curvefem::{ConvergenceRow, CurvedMesh, Exponent, LiftConfig, LiftMap, LiftVariant, SmoothBoundary, UnitDisk};

const LEVELS: std::ops::RangeInclusive<usize> = 1..=5;
const SLOPE_LEVELS: std::ops::RangeInclusive<usize> = 0..=3;

struct Line {
    id: usize,
    name: &'static str,
    pass: Option<bool>,
    detail: String,
}

impl Line {
    fn print(&self) {
        let tag = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "REPORT",
        };
        println!("{tag} [{}] {} {}", self.id, self.name, self.detail);
    }
}

/// Gate helper: collects every violated entry.
#[derive(Default)]
struct Gate {
    failures: Vec<String>,
    worst: f64,
}

impl Gate {
    fn band(&mut self, label: String, value: f64, lo: f64, hi: f64) {
        let margin = (value - lo).min(hi - value);
        if self.failures.is_empty() && (self.worst == 0.0 || margin < self.worst) {
            self.worst = margin;
        }
        if !(lo..=hi).contains(&value) {
            self.failures.push(format!("{label}={value:.3}∉[{lo:.2},{hi:.2}]"));
        }
    }

    fn near(&mut self, label: String, value: f64, target: f64, tol: f64) {
        self.band(label, value, target - tol, target + tol);
    }

    fn finish(self, id: usize, name: &'static str, extra: String) -> Line {
        let pass = self.failures.is_empty();
        let detail = if pass {
            format!("min_margin={:.3}{extra}", self.worst)
        } else {
            format!("{}{extra}", self.failures.join(" "))
        };
        Line {
            id,
            name,
            pass: Some(pass),
            detail,
        }
    }
}

struct Data {
    disk: Arc<dyn SmoothBoundary>,
    series: HashMap<usize, Vec<(usize, CurvedMesh)>>,
    rows: HashMap<(usize, usize, LiftConfig), ConvergenceRow>,
    slowest: Duration,
}

impl Data {
    fn new() -> Self {
        let disk: Arc<dyn SmoothBoundary> = Arc::new(UnitDisk::new());
        let series = (1..=3)
            .map(|r| (r, mesh_series(disk.as_ref(), r, LEVELS).expect("mesh series")))
            .collect();
        Self {
            disk,
            series,
            rows: HashMap::new(),
            slowest: Duration::ZERO,
        }
    }

    fn row(&mut self, r: usize, k: usize, lift: LiftConfig) -> &ConvergenceRow {
        if !self.rows.contains_key(&(r, k, lift)) {
            let cfg = RunConfig {
                r,
                k,
                levels: LEVELS,
                lift,
                ..RunConfig::default()
            };
            let t = Instant::now();
            let row = run_on_series(&self.series[&r], self.disk.clone(), &cfg).expect("convergence run");
            self.slowest = self.slowest.max(t.elapsed());
            self.rows.insert((r, k, lift), row);
        }
        &self.rows[&(r, k, lift)]
    }
}

fn new_lift(s: Exponent) -> LiftConfig {
    LiftConfig::new(LiftVariant::New, s)
}

fn table1(d: &mut Data) -> Line {
    let mut g = Gate::default();
    for k in 1..=4 {
        let e = d.row(1, k, new_lift(Exponent::Auto)).eoc;
        g.near(format!("r1k{k}.L2"), e[0], 1.98, 0.25);
        let (target, tol) = if k == 1 { (1.0, 0.2) } else { (1.5, 0.25) };
        g.near(format!("r1k{k}.H1"), e[1], target, tol);
        let e = d.row(2, k, new_lift(Exponent::Auto)).eoc;
        g.near(format!("r2k{k}.L2"), e[0], (k as f64 + 1.0).min(4.0), 0.3);
    }
    let limit = Duration::from_secs(600);
    if d.slowest > limit {
        g.failures.push(format!("slowest_run={:.1?}>10min", d.slowest));
    }
    g.finish(1, "interior_rates_new_lift", format!(" slowest_run={:.1?}", d.slowest))
}

fn table2(d: &mut Data) -> Line {
    let mut g = Gate::default();
    let e = d.row(2, 3, new_lift(Exponent::Auto)).eoc;
    g.near("r2k3.L2G".into(), e[2], 4.0, 0.3);
    g.near("r2k3.H1G".into(), e[3], 3.0, 0.3);
    for k in 1..=4 {
        let e = d.row(1, k, new_lift(Exponent::Auto)).eoc;
        g.near(format!("r1k{k}.L2G"), e[2], 2.0, 0.25);
        g.near(format!("r1k{k}.H1G"), e[3], if k == 1 { 1.0 } else { 2.0 }, 0.25);
    }
    g.finish(2, "boundary_rates_new_lift", String::new())
}

fn table3(d: &mut Data) -> Line {
    let mut g = Gate::default();
    let former = LiftConfig::new(LiftVariant::Former, Exponent::Auto);
    for k in 2..=4 {
        let e = d.row(2, k, former).eoc;
        g.band(format!("r2k{k}.L2"), e[0], 2.2, 2.8);
        g.band(format!("r2k{k}.H1"), e[1], 1.2, 1.8);
        if k >= 3 {
            g.near(format!("r2k{k}.L2G"), e[2], 3.0, 0.3);
        }
    }
    g.finish(3, "former_lift_rates", String::new())
}

fn slopes(d: &Data) -> Line {
    let t = Instant::now();
    let mut g = Gate::default();
    for r in 1..=3 {
        let meshes = mesh_series(d.disk.as_ref(), r, SLOPE_LEVELS).expect("mesh series");
        for s in [Exponent::Fixed(2), Exponent::Fixed(r as u32 + 2)] {
            let rep = certify_prop44(&meshes, d.disk.as_ref(), new_lift(s)).expect("slope report");
            let lo = r as f64 - 0.3;
            g.band(format!("r{r}s{s}.DG"), rep.slope_dg, lo, f64::INFINITY);
            g.band(format!("r{r}s{s}.Jh"), rep.slope_jh, lo, f64::INFINITY);
        }
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(120) {
        g.failures.push(format!("runtime={elapsed:.1?}>2min"));
    }
    g.finish(4, "lift_differential_slopes", format!(" levels=4 runtime={elapsed:.1?}"))
}

fn trace(d: &Data) -> Line {
    let mut worst: f64 = 0.0;
    for r in 1..=3 {
        for (_, mesh) in &d.series[&r][..3] {
            for s in [Exponent::Auto, Exponent::Fixed(2), Exponent::Fixed(1)] {
                let m = trace_mismatch(mesh, d.disk.as_ref(), new_lift(s), 2 * r + 6).expect("trace");
                worst = worst.max(m);
            }
        }
    }
    Line {
        id: 5,
        name: "trace_compatibility",
        pass: Some(worst <= 1e-10),
        detail: format!("max|G-b|={worst:.3e} tol=1e-10"),
    }
}

fn interpolation(d: &Data) -> Line {
    let mut g = Gate::default();
    for r in 1..=3 {
        for k in 1..=r {
            let cfg = RunConfig {
                r,
                k,
                levels: LEVELS,
                ..RunConfig::default()
            };
            let e = interpolation_on_series(&d.series[&r], d.disk.as_ref(), &cfg).expect("interpolation").eoc;
            let kf = k as f64;
            g.near(format!("r{r}k{k}.L2"), e[0], kf + 1.0, 0.25);
            g.near(format!("r{r}k{k}.L2G"), e[2], kf + 1.0, 0.25);
            g.near(format!("r{r}k{k}.H1"), e[1], kf, 0.25);
            g.near(format!("r{r}k{k}.H1G"), e[3], kf, 0.25);
        }
    }
    g.finish(6, "interpolation_rates", String::new())
}

fn exponent_robustness(d: &mut Data) -> Line {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for r in 1..=3 {
        for k in 1..=4 {
            let a = d.row(r, k, new_lift(Exponent::Auto)).eoc;
            let b = d.row(r, k, new_lift(Exponent::Fixed(2))).eoc;
            for (i, (x, y)) in a.iter().zip(&b).enumerate() {
                let diff = (x - y).abs();
                worst = worst.max(diff);
                if diff > 0.05 {
                    failures.push(format!("r{r}k{k}.norm{i}:{x:.3}vs{y:.3}"));
                }
            }
        }
    }
    Line {
        id: 7,
        name: "exponent_robustness",
        pass: Some(failures.is_empty()),
        detail: format!("max|ΔEOC|={worst:.4} tol=0.05 {}", failures.join(" ")),
    }
}

fn cubic_defect(d: &mut Data) -> Line {
    let table = curvefem::ConvergenceTable {
        rows: (1..=4).map(|k| d.row(3, k, new_lift(Exponent::Auto)).clone()).collect(),
    };
    let flagged = cubic_defects(&table);
    let summary = study::summary_markdown(&table);
    let listed = flagged
        .iter()
        .map(|(k, norm, eoc, optimal)| format!("P{k}.{norm}={eoc:.2}(opt {optimal})"))
        .collect::<Vec<_>>()
        .join(" ");
    let consistent = flagged.is_empty() != summary.contains("defect observed");
    Line {
        id: 8,
        name: "cubic_mesh_defect",
        pass: None,
        detail: format!(
            "{} flagged{} {listed}",
            if flagged.is_empty() { "no defect," } else { "defect observed," },
            if consistent { "" } else { " (summary.md flag missing!)" }
        ),
    }
}

fn properties(d: &Data) -> Line {
    let t = Instant::now();
    let config = CertifyConfig {
        rs: vec![1, 2, 3],
        levels: SLOPE_LEVELS,
    };
    let checks = study::certify(&config).expect("certification suite");
    let mut failures: Vec<String> = checks
        .iter()
        .filter(|c| c.pass == Some(false))
        .map(|c| c.name.clone())
        .collect();

    // Lift round trip: G^{-1}(G(x)) through Newton inversion of the mesh map.
    let mut worst: f64 = 0.0;
    for r in 1..=3 {
        let mesh = &d.series[&r][0].1;
        for e in 0..mesh.len() {
            let map = LiftMap::new(mesh, d.disk.as_ref(), LiftConfig::default(), e);
            for x in [[0.2, 0.3], [1.0 / 3.0, 1.0 / 3.0], [0.6, 0.1]] {
                let p = mesh.point(e, x);
                let back = map.locate(&p).expect("inversion");
                worst = worst.max((back[0] - x[0]).abs().max((back[1] - x[1]).abs()));
            }
        }
    }
    if worst > 1e-10 {
        failures.push(format!("round_trip={worst:.2e}"));
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("runtime={elapsed:.1?}>5min"));
    }
    Line {
        id: 9,
        name: "property_suites",
        pass: Some(failures.is_empty()),
        detail: format!(
            "checks={} round_trip={worst:.1e} runtime={elapsed:.1?} {}",
            checks.len(),
            failures.join(" ")
        ),
    }
}

fn main() -> ExitCode {
    // Plain `cargo test` passes harness flags such as `--quiet`; only a
    // listing request needs an answer.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let t = Instant::now();
    let mut d = Data::new();
    let lines = [
        table1(&mut d),
        table2(&mut d),
        table3(&mut d),
        slopes(&d),
        trace(&d),
        interpolation(&d),
        exponent_robustness(&mut d),
        cubic_defect(&mut d),
        properties(&d),
    ];
    for l in &lines {
        l.print();
    }
    let failed = lines.iter().filter(|l| l.pass == Some(false)).count();
    println!("acceptance: {} gated, {failed} failed, {:.1?}", lines.iter().filter(|l| l.pass.is_some()).count(), t.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::collections::HashMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use curvefem::mesh::write_mesh;
use curvefem::study::{self, CertifyConfig, RunConfig, SweepConfig};
use curvefem::ventcel::{named_solution, AssemblyOptions};
use curvefem::{
    assemble, derive_manufactured, generate_disk_mesh, CurvedMesh, Error, Exponent, LiftConfig, LiftVariant, Result,
    SmoothBoundary, UnitDisk,
};

/// Convergence studies for the Ventcel problem on the unit disk.
///
/// Every option can also be given in a `key=value` file passed with
/// `--config` (keys: r, k, levels, lift, s, kappa, alpha, beta, solution,
/// out); command-line flags take precedence.
#[derive(Debug, Parser)]
#[command(name = "curvefem", version)]
struct Cli {
    /// Mesh orders, comma separated (1..=3).
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    /// Finite element degrees, comma separated (1..=4).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Inclusive refinement level range, e.g. 0..4.
    #[arg(long)]
    levels: Option<String>,
    /// Lift variant: new or former.
    #[arg(long)]
    lift: Option<String>,
    /// Lift exponent: auto (r+2), 1 or 2.
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Manufactured solution: y_exp_x or one.
    #[arg(long)]
    solution: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every curved mesh to <out>/meshes/.
    #[arg(long)]
    dump_mesh: bool,
    /// Write the coarsest-level matrix of each run as `i j value` lines.
    #[arg(long)]
    dump_matrix: bool,
    /// Run the certification suite instead of the convergence sweep.
    #[arg(long)]
    certify: bool,
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
struct Settings {
    sweep: SweepConfig,
    out: PathBuf,
}

fn parse_levels(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Config(format!("levels must look like A..B, got '{s}'")))?;
    let parse = |v: &str| {
        v.trim()
            .trim_start_matches('=')
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("invalid level '{v}'")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(Error::Config(format!("empty level range {a}..{b}")));
    }
    Ok(a..=b)
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Config(format!("invalid integer '{v}'"))))
        .collect()
}

fn parse_real(key: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("invalid value for {key}: '{s}'")))
}

fn read_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = k.trim().to_string();
        const KEYS: [&str; 10] = ["r", "k", "levels", "lift", "s", "kappa", "alpha", "beta", "solution", "out"];
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("{}:{}: unknown key '{key}'", path.display(), i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn settings(cli: &Cli) -> Result<Settings> {
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => HashMap::new(),
    };
    let get = |key: &str| file.get(key).map(String::as_str);

    let rs = match (&cli.r, get("r")) {
        (Some(v), _) => v.clone(),
        (None, Some(s)) => parse_list(s)?,
        (None, None) => vec![1, 2, 3],
    };
    let ks = match (&cli.k, get("k")) {
        (Some(v), _) => v.clone(),
        (None, Some(s)) => parse_list(s)?,
        (None, None) => vec![1, 2, 3, 4],
    };
    let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| get(key).map(str::to_owned));
    let mut base = RunConfig::default();
    if let Some(s) = pick(&cli.levels, "levels") {
        base.levels = parse_levels(&s)?;
    }
    let variant: LiftVariant = pick(&cli.lift, "lift").as_deref().unwrap_or("new").parse()?;
    let exponent: Exponent = match pick(&cli.s, "s").as_deref().unwrap_or("auto") {
        s @ ("auto" | "1" | "2") => s.parse()?,
        s => return Err(Error::Config(format!("--s must be auto, 1 or 2, got '{s}'"))),
    };
    base.lift = LiftConfig::new(variant, exponent);
    for (flag, key, slot) in [
        (cli.kappa, "kappa", &mut base.kappa),
        (cli.alpha, "alpha", &mut base.alpha),
        (cli.beta, "beta", &mut base.beta),
    ] {
        if let Some(v) = flag {
            *slot = v;
        } else if let Some(s) = get(key) {
            *slot = parse_real(key, s)?;
        }
    }
    if let Some(s) = pick(&cli.solution, "solution") {
        base.solution = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let sweep = SweepConfig { rs, ks, base };
    for cfg in sweep.runs() {
        cfg.validate()?;
    }
    Ok(Settings { sweep, out })
}

fn dump_meshes(settings: &Settings) -> Result<()> {
    let disk = UnitDisk::new();
    let dir = settings.out.join("meshes");
    fs::create_dir_all(&dir)?;
    for &r in &settings.sweep.rs {
        for level in settings.sweep.base.levels.clone() {
            let mesh = CurvedMesh::build(generate_disk_mesh(&disk, level)?, &disk, r)?;
            let file = fs::File::create(dir.join(format!("disk_r{r}_level{level}.mesh")))?;
            write_mesh(&mesh, BufWriter::new(file))?;
        }
    }
    Ok(())
}

fn dump_matrices(settings: &Settings) -> Result<()> {
    let disk: Arc<dyn SmoothBoundary> = Arc::new(UnitDisk::new());
    let level = *settings.sweep.base.levels.start();
    for cfg in settings.sweep.runs() {
        let mesh = CurvedMesh::build(generate_disk_mesh(disk.as_ref(), level)?, disk.as_ref(), cfg.r)?;
        let spec = derive_manufactured(named_solution(&cfg.solution)?, cfg.kappa, cfg.alpha, cfg.beta, disk.clone())?;
        let sys = assemble(&mesh, disk.as_ref(), cfg.lift, &spec, cfg.k, AssemblyOptions::default())?;
        let dir = settings.out.join(cfg.run_name());
        fs::create_dir_all(&dir)?;
        let file = fs::File::create(dir.join(format!("matrix_level{level}.coo")))?;
        sys.matrix.write_coo(BufWriter::new(file))?;
    }
    Ok(())
}

fn run_certify(settings: &Settings) -> Result<bool> {
    let config = CertifyConfig {
        rs: settings.sweep.rs.clone(),
        levels: settings.sweep.base.levels.clone(),
    };
    if config.levels.clone().count() < 4 {
        return Err(Error::Config("certification needs at least 4 levels".into()));
    }
    let checks = study::certify(&config)?;
    fs::create_dir_all(&settings.out)?;
    study::write_certify(&checks, fs::File::create(settings.out.join("certify.txt"))?)?;
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(checks.iter().all(|c| c.pass != Some(false)))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let settings = settings(cli)?;
    if cli.dump_mesh {
        dump_meshes(&settings)?;
    }
    if cli.dump_matrix {
        dump_matrices(&settings)?;
    }
    if cli.certify {
        return Ok(if run_certify(&settings)? { ExitCode::SUCCESS } else { ExitCode::from(2) });
    }
    let table = study::run_sweep(&settings.sweep, |row| {
        let e = row.eoc;
        eprintln!(
            "r={} k={} lift={} s={}: EOC L2(Ω) {:.2}  H1(Ω) {:.2}  L2(Γ) {:.2}  H1(Γ) {:.2}",
            row.r, row.k, row.lift.variant, row.lift.exponent, e[0], e[1], e[2], e[3]
        );
    })?;
    study::write_outputs(&table, &settings.out)?;
    println!("{}", study::summary_markdown(&table));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

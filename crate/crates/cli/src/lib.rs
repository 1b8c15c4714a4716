//! The `combat` command line: single runs of either engine, automaton
//! ensembles, engine comparisons and snapshot rendering. Every run writes a
//! self-contained directory ("bundle").

pub mod grid_file;
pub mod render;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use combat_core::analysis::{compare, ensemble, run_ca, run_pde_with, EnsembleConfig, MetricSeries};
use combat_core::ca::Side;
use combat_core::scenarios::{builtin_names, resolve, Scenario};
use thiserror::Error;

use grid_file::GridFile;

/// Default output root when `--out` is not given.
pub const OUT_ENV: &str = "COMBAT_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] combat_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 1 for failures while running, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        use combat_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Stiffness { .. } | E::Io { .. }) => 1,
            CliError::Core(_) => 2,
            CliError::Io { .. } | CliError::Failed(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "combat", version, about = "Continuum and cellular-automaton combat simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a continuum scenario.
    RunPde(RunPdeArgs),
    /// Run one seed of an automaton scenario.
    RunCa(RunCaArgs),
    /// Run many seeds of an automaton scenario and aggregate them.
    Ensemble(EnsembleArgs),
    /// Compare a continuum bundle with an automaton bundle.
    Compare(CompareArgs),
    /// Draw the snapshots of a bundle.
    Render(RenderArgs),
    /// List the builtin scenarios.
    List,
    /// Print a scenario in file form.
    Show(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Builtin name or scenario file.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Scenario file; takes precedence over --scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a field, e.g. `u.d=0` or `red.w6=-5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        let mut s = match (&self.config, &self.scenario) {
            (Some(path), _) => Scenario::load(path)?,
            (None, Some(name)) => resolve(name)?,
            (None, None) => return Err(CliError::Usage("give --scenario or --config".into())),
        };
        s.apply_overrides(&self.overrides)?;
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct RunPdeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Snapshot times, comma separated; default is evenly spaced.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct RunCaArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 100)]
    pub runs: u64,
    /// First seed; runs use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Concurrent runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub pde: PathBuf,
    #[arg(long)]
    pub ca: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ascii,
    Pgm,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Ascii)]
    pub format: Format,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunPde(a) => run_pde_cmd(&a),
        Command::RunCa(a) => run_ca_cmd(&a),
        Command::Ensemble(a) => ensemble_cmd(&a),
        Command::Compare(a) => compare_cmd(&a),
        Command::Render(a) => render_cmd(&a),
        Command::List => {
            for n in builtin_names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Show(a) => {
            print!("{}", a.load()?.to_text());
            Ok(())
        }
    }
}

/// Writes to stdout, treating a closed pipe as the reader having seen enough.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn out_dir(given: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match given {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
            root.join(default_name)
        }
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn series_csv(s: &MetricSeries) -> Vec<u8> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf).expect("writing to memory");
    buf
}

fn run_pde_cmd(a: &RunPdeArgs) -> Result<()> {
    let scenario = a.scenario.load()?;
    let p = scenario.pde()?.clone();
    let mut cfg = p.integrator();
    if let Some(times) = &a.snapshots {
        let mut times = times.clone();
        times.sort_by(f64::total_cmp);
        cfg.snapshot_times = times;
    }
    cfg.validate()?;
    let dir = out_dir(&a.out, &scenario.name);
    mkdir(&dir.join("snapshots"))?;
    write(&dir.join("resolved.scenario"), scenario.to_text())?;

    let (traj, series) = run_pde_with(&p, &cfg)?;

    let mut losses = String::from("# total mass of each force after every accepted step\nt,u,v\n");
    for r in &traj.series {
        let _ = writeln!(losses, "{},{},{}", r.t, r.mass_u, r.mass_v);
    }
    write(&dir.join("losses.csv"), losses)?;
    write(&dir.join("metrics.csv"), series_csv(&series))?;
    let g = p.grid;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        for (name, f) in [("u", &snap.u), ("v", &snap.v)] {
            let file = GridFile::from_bottom_up(snap.t, name, g.nx, g.ny, f.values());
            write(&dir.join("snapshots").join(format!("{name}_{k:03}.csv")), file.to_text())?;
        }
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "scenario: {}", scenario.name);
    let _ = writeln!(summary, "engine: pde");
    let _ = writeln!(summary, "accepted steps: {}", traj.series.len() - 1);
    let _ = writeln!(summary, "rejected steps: {}", traj.rejected_steps);
    let _ = writeln!(summary, "min density before clamping: {:e}", traj.min_before_clamp());
    let first = &traj.series[0];
    if let Some(last) = traj.series.last() {
        let _ = writeln!(summary, "final time: {}", last.t);
        let _ = writeln!(summary, "mass u: {} -> {}", first.mass_u, last.mass_u);
        let _ = writeln!(summary, "mass v: {} -> {}", first.mass_v, last.mass_v);
    }
    describe_series(&mut summary, &series);
    if let Some(why) = &traj.failure {
        let _ = writeln!(summary, "failed: {why}");
        write(&dir.join("summary.txt"), &summary)?;
        write(&dir.join("error.txt"), format!("{why}\n"))?;
        return Err(CliError::Failed(format!("integration stopped early: {why} (partial bundle in {})", dir.display())));
    }
    write(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("bundle: {}", dir.display());
    Ok(())
}

fn describe_series(out: &mut String, s: &MetricSeries) {
    match s.contact_time() {
        Some(t) => {
            let _ = writeln!(out, "first contact: {t}");
        }
        None => {
            let _ = writeln!(out, "first contact: none");
        }
    }
    let p = s.precession(combat_core::analysis::PRECESSION_THRESHOLD);
    let _ = writeln!(out, "rotation after contact: {:.4} rad ({})", p.total_rotation, p.direction.name());
    let _ = writeln!(out, "forces passed: {}", s.crossed());
}

fn run_ca_cmd(a: &RunCaArgs) -> Result<()> {
    let mut scenario = a.scenario.load()?;
    if let Some(n) = a.steps {
        scenario.set("steps", &n.to_string())?;
    }
    let ca = scenario.ca()?.clone();
    let dir = out_dir(&a.out, &format!("{}-seed{}", scenario.name, a.seed));
    mkdir(&dir.join("snapshots"))?;
    write(&dir.join("resolved.scenario"), format!("# seed={}\n{}", a.seed, scenario.to_text()))?;

    let (traj, series) = run_ca(&ca, a.seed)?;

    let mut losses = String::from("# agent counts after every step\nstep,red_alive,red_injured,blue_alive,blue_injured\n");
    for r in &traj.records {
        let _ = writeln!(losses, "{},{},{},{},{}", r.step, r.alive[0], r.injured[0], r.alive[1], r.injured[1]);
    }
    write(&dir.join("losses.csv"), losses)?;
    write(&dir.join("metrics.csv"), series_csv(&series))?;
    let n = ca.setup.size as usize;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        for side in [Side::Red, Side::Blue] {
            let mut grid = vec![0.0; n * n];
            for ag in snap.agents.iter().filter(|g| g.side == side && g.health.is_living()) {
                grid[ag.pos.1 as usize * n + ag.pos.0 as usize] = 1.0;
            }
            let file = GridFile::from_bottom_up(snap.step as f64, side.name(), n, n, &grid);
            write(&dir.join("snapshots").join(format!("{}_{k:03}.csv", side.name())), file.to_text())?;
        }
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "scenario: {}", scenario.name);
    let _ = writeln!(summary, "engine: ca");
    let _ = writeln!(summary, "seed: {}", a.seed);
    let _ = writeln!(summary, "steps: {}", ca.steps);
    if let (Some(f), Some(l)) = (traj.records.first(), traj.records.last()) {
        for side in [Side::Red, Side::Blue] {
            let _ = writeln!(summary, "living {}: {} -> {}", side.name(), f.living(side), l.living(side));
        }
    }
    describe_series(&mut summary, &series);
    write(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("bundle: {}", dir.display());
    Ok(())
}

fn ensemble_cmd(a: &EnsembleArgs) -> Result<()> {
    let mut scenario = a.scenario.load()?;
    if let Some(n) = a.steps {
        scenario.set("steps", &n.to_string())?;
    }
    let ca = scenario.ca()?.clone();
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let dir = out_dir(&a.out, &format!("{}-ensemble", scenario.name));
    mkdir(&dir)?;
    write(&dir.join("resolved.scenario"), scenario.to_text())?;
    let mut cfg = EnsembleConfig::new(a.seed..a.seed + a.runs);
    cfg.jobs = a.jobs;
    let report = ensemble(&scenario.name, &ca, &cfg);

    let mut runs = Vec::new();
    report.write_runs_csv(&mut runs).expect("writing to memory");
    write(&dir.join("runs.csv"), runs)?;
    write(&dir.join("metrics.csv"), series_csv(&report.mean))?;
    let sd = MetricSeries { records: report.sd.clone(), ..report.mean.clone() };
    write(&dir.join("metrics_sd.csv"), series_csv(&sd))?;
    let mut losses = String::from("# living agents per step over the ensemble\nstep,red_mean,red_sd,blue_mean,blue_sd\n");
    for (m, s) in report.mean.records.iter().zip(&report.sd) {
        let _ = writeln!(losses, "{},{},{},{},{}", m.t, m.mass[0], s.mass[0], m.mass[1], s.mass[1]);
    }
    write(&dir.join("losses.csv"), losses)?;
    let summary = report.summary();
    write(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("bundle: {}", dir.display());
    if report.runs.is_empty() {
        return Err(CliError::Failed("every run failed".into()));
    }
    Ok(())
}

/// Scenario name and metric series of a bundle.
fn read_bundle(dir: &Path) -> Result<(String, MetricSeries)> {
    let echo = dir.join("resolved.scenario");
    let metrics = dir.join("metrics.csv");
    if !echo.is_file() || !metrics.is_file() {
        return Err(CliError::Usage(format!("{} is not a run bundle", dir.display())));
    }
    let text = fs::read_to_string(&echo).map_err(|e| CliError::io(&echo, e))?;
    let scenario = Scenario::from_text(&text)?;
    let file = fs::File::open(&metrics).map_err(|e| CliError::io(&metrics, e))?;
    let series = MetricSeries::read_csv(std::io::BufReader::new(file))?;
    Ok((scenario.name, series))
}

fn compare_cmd(a: &CompareArgs) -> Result<()> {
    let (na, sa) = read_bundle(&a.pde)?;
    let (nb, sb) = read_bundle(&a.ca)?;
    let report = compare(&na, &sa, &nb, &sb)?;
    let dir = out_dir(&a.out, &format!("compare-{}", combat_core::analysis::family(&na)));
    mkdir(&dir)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).expect("writing to memory");
    write(&dir.join("comparison.csv"), csv)?;
    let summary = report.summary();
    write(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

/// Snapshot files of a bundle grouped by index, two forces each.
fn snapshot_pairs(bundle: &Path) -> Result<Vec<(String, [GridFile; 2])>> {
    let dir = bundle.join("snapshots");
    let mut names: Vec<String> = match fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".csv"))
            .collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    let mut by_index: std::collections::BTreeMap<String, Vec<GridFile>> = Default::default();
    for n in &names {
        let stem = n.trim_end_matches(".csv");
        let Some((_, idx)) = stem.rsplit_once('_') else {
            continue;
        };
        by_index.entry(idx.to_string()).or_default().push(GridFile::load(&dir.join(n))?);
    }
    let mut out = Vec::new();
    for (idx, mut files) in by_index {
        if files.len() != 2 {
            return Err(CliError::Usage(format!("snapshot {idx} needs exactly two force files")));
        }
        // force 0 first: u before v, red before blue
        files.sort_by_key(|f| matches!(f.force.as_str(), "v" | "blue"));
        let b = files.pop().expect("two files");
        let a = files.pop().expect("two files");
        out.push((idx, [a, b]));
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{} has no snapshots", bundle.display())));
    }
    Ok(out)
}

fn render_cmd(a: &RenderArgs) -> Result<()> {
    let pairs = snapshot_pairs(&a.bundle)?;
    match a.format {
        Format::Ascii => {
            let mut text = String::new();
            for (_, [u, v]) in &pairs {
                let _ = writeln!(text, "t = {}  ({} {:?}, {} {:?})", u.t, u.force, render::GLYPHS[0][9], v.force, render::GLYPHS[1][9]);
                text.push_str(&render::ascii(u, v));
            }
            emit(&text);
        }
        Format::Pgm => {
            let dir = a.bundle.join("render");
            mkdir(&dir)?;
            for (idx, files) in &pairs {
                for f in files {
                    let path = dir.join(format!("{}_{idx}.pgm", f.force));
                    write(&path, render::pgm(f))?;
                    println!("{}", path.display());
                }
            }
        }
    }
    Ok(())
}


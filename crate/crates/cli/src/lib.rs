//! Command-line front end: run scenarios, sweep them, and grade the preset checks.

pub mod output;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridsim::scenario::{builtin_preset, set_path, OutputFormat, Scenario, SweepBlock, PRESETS};
use hybridsim::Error;
use rayon::prelude::*;

use output::{sha256_hex, OutputSet};
use report::{PresetOutcome, SweepPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_PHYSICS,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hybridsim",
    version,
    about = "Atom-oscillator coupling budgets, dynamics and checks"
)]
pub struct Cli {
    /// Directory of scenario files used instead of the built-in presets.
    #[arg(long, env = "HYBRIDSIM_PRESET_DIR", global = true)]
    pub preset_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one scenario (file path or preset name).
    Run {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a scenario over a grid of one or more parameters.
    Sweep {
        scenario: String,
        /// `section.key=grid` with grid `a,b,c`, `lin:start:stop:n` or `log:start:stop:n`.
        /// Repeat for a Cartesian product. Defaults to the scenario's sweep sections.
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// Emit a specialised table instead of all quantities.
        #[arg(long)]
        table: Option<TableKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Grade every check of every preset.
    PaperCheck {
        /// Print the check ids without running anything.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        common: Common,
    },
    /// List available presets.
    ListPresets,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Write report files here (atomically). Without it the report goes to stdout.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps and checks.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    /// Trap analysis rows (distance, barrier, epsilon, frequency) of a surface scenario.
    Trap,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn config_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: msg.into(),
    }
}

fn io_failure(what: &str, e: std::io::Error) -> Failure {
    config_failure(format!("{what}: {e}"))
}

/// A scenario's source text and the name it was found under.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub text: String,
}

/// A path to an existing file, else a preset name.
pub fn resolve(arg: &str, preset_dir: Option<&Path>) -> Result<Source, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| io_failure(arg, e))?;
        return Ok(Source {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            text,
        });
    }
    if let Some(dir) = preset_dir {
        let p = dir.join(format!("{arg}.toml"));
        if p.is_file() {
            let text =
                fs::read_to_string(&p).map_err(|e| io_failure(&p.display().to_string(), e))?;
            return Ok(Source {
                name: arg.into(),
                text,
            });
        }
    }
    builtin_preset(arg)
        .map(|t| Source {
            name: arg.into(),
            text: t.into(),
        })
        .ok_or_else(|| config_failure(format!("'{arg}' is neither a file nor a known preset")))
}

/// Presets from `dir` (every `*.toml`, by file name) or the built-in set.
pub fn presets(dir: Option<&Path>) -> Result<Vec<Source>, Failure> {
    let Some(dir) = dir else {
        return Ok(PRESETS
            .iter()
            .map(|(n, t)| Source {
                name: n.to_string(),
                text: t.to_string(),
            })
            .collect());
    };
    let what = dir.display().to_string();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_failure(&what, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text =
                fs::read_to_string(&p).map_err(|e| io_failure(&p.display().to_string(), e))?;
            let name = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            Ok(Source { name, text })
        })
        .collect()
}

fn parse(src: &Source) -> Result<(toml::Value, Scenario), Failure> {
    let doc: toml::Value = toml::from_str(&src.text)
        .map_err(|e| config_failure(format!("{}: {}", src.name, e.message())))?;
    let s = Scenario::from_value(doc.clone()).map_err(|e| Failure::from(e.context(&src.name)))?;
    Ok((doc, s))
}

fn formats(common: &Common, s: Option<&Scenario>) -> Vec<Format> {
    if let Some(f) = common.format {
        return vec![f];
    }
    let from_file: Vec<Format> = s
        .and_then(|s| s.output.as_ref())
        .map(|o| {
            o.formats
                .iter()
                .map(|f| match f {
                    OutputFormat::Csv => Format::Csv,
                    OutputFormat::Json => Format::Json,
                })
                .collect()
        })
        .unwrap_or_default();
    if from_file.is_empty() {
        vec![Format::Csv]
    } else {
        from_file
    }
}

fn emit(set: &OutputSet, dir: Option<&Path>, out: &mut String) -> Result<(), Failure> {
    if let Some(dir) = dir {
        let written = set
            .write(dir)
            .map_err(|e| io_failure(&dir.display().to_string(), e))?;
        for p in written {
            out.push_str(&format!("wrote {}\n", p.display()));
        }
    }
    Ok(())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    if jobs == 0 {
        return Err(config_failure("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| config_failure(format!("thread pool: {e}")))
}

/// Run a command, appending what it prints to `out`. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut String) -> Result<i32, Failure> {
    let dir = cli.preset_dir.as_deref();
    match &cli.command {
        Command::Run { scenario, common } => run(&resolve(scenario, dir)?, common, out),
        Command::Sweep {
            scenario,
            axes,
            table,
            common,
        } => sweep(&resolve(scenario, dir)?, axes, *table, common, out),
        Command::PaperCheck { list, common } => paper_check(&presets(dir)?, *list, common, out),
        Command::ListPresets => {
            for src in presets(dir)? {
                let (_, s) = parse(&src)?;
                out.push_str(&format!(
                    "{:<18} {:<12} {}\n",
                    src.name,
                    scheme_name(&s),
                    s.description
                ));
            }
            Ok(EXIT_OK)
        }
    }
}

fn scheme_name(s: &Scenario) -> String {
    serde_json::to_value(s.scheme)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn run(src: &Source, common: &Common, out: &mut String) -> Result<i32, Failure> {
    let (doc, s) = parse(src)?;
    let hash = sha256_hex(src.text.as_bytes());
    let ev = s.evaluate()?;
    let verdicts = s.run_checks(&ev);
    let stem = s
        .output
        .as_ref()
        .and_then(|o| o.stem.clone())
        .unwrap_or_else(|| s.name.clone());
    let mut set = OutputSet::default();
    for f in formats(common, Some(&s)) {
        let one = report::run_outputs(&stem, f == Format::Json, &hash, &doc, &s, &ev, &verdicts);
        if common.output_dir.is_none() {
            // stdout gets the main report only
            out.push_str(&match f {
                Format::Json => report::run_json(&hash, &s, &ev, &verdicts),
                Format::Csv => report::run_csv(&hash, &doc, &ev, &verdicts),
            });
        }
        merge(&mut set, one);
    }
    if common.output_dir.is_some() {
        for v in &verdicts {
            out.push_str(&verdict_line(v));
        }
    }
    emit(&set, common.output_dir.as_deref(), out)?;
    Ok(if verdicts.iter().all(|v| v.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn merge(into: &mut OutputSet, from: OutputSet) {
    for (name, contents) in from.into_files() {
        into.add(name, contents);
    }
}

fn verdict_line(v: &hybridsim::scenario::CheckVerdict) -> String {
    let computed = v
        .computed
        .map(|x| format!("{x:.6e}"))
        .unwrap_or_else(|| "missing".into());
    let target = v
        .target
        .map(|x| format!("target {x:e}, "))
        .unwrap_or_default();
    format!(
        "{} {} [{}] {} = {} ({}{}, {})\n",
        if v.pass { "PASS" } else { "FAIL" },
        v.id,
        v.preset,
        v.quantity,
        computed,
        target,
        v.tolerance,
        v.source
    )
}

/// Grid index `i` of a Cartesian product, last axis fastest.
fn unravel(mut i: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for (k, n) in sizes.iter().enumerate().rev() {
        idx[k] = i % n;
        i /= n;
    }
    idx
}

pub fn sweep(
    src: &Source,
    axis_args: &[String],
    table: Option<TableKind>,
    common: &Common,
    out: &mut String,
) -> Result<i32, Failure> {
    let (doc, s) = parse(src)?;
    let axes: Vec<SweepBlock> = if axis_args.is_empty() {
        s.sweeps.clone()
    } else {
        axis_args
            .iter()
            .map(|a| SweepBlock::parse_cli(a))
            .collect::<Result<_, _>>()?
    };
    if axes.is_empty() {
        return Err(config_failure(
            "no sweep axis: pass --axis or add a [[sweep]] section",
        ));
    }
    if table == Some(TableKind::Trap) && s.bec_surface.is_none() {
        return Err(config_failure("--table trap needs a bec_surface scenario"));
    }
    let grids: Vec<Vec<f64>> = axes.iter().map(|a| a.grid()).collect::<Result<_, _>>()?;
    let names: Vec<String> = axes.iter().map(|a| a.axis.clone()).collect();
    // axis paths are checked once, before any work
    let mut probe = doc.clone();
    for (a, g) in names.iter().zip(&grids) {
        set_path(&mut probe, a, g[0])?;
    }
    Scenario::from_value(probe)?;
    let mut hashed = src.text.clone();
    for (a, g) in names.iter().zip(&grids) {
        let vals: Vec<String> = g.iter().map(|x| format!("{x:e}")).collect();
        hashed.push_str(&format!("\n# axis {a} = {}", vals.join(",")));
    }
    let hash = sha256_hex(hashed.as_bytes());
    let sizes: Vec<usize> = grids.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();

    let eval_point = |index: usize| -> SweepPoint {
        let idx = unravel(index, &sizes);
        let values: Vec<f64> = idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
        let mut p = SweepPoint {
            index,
            axes: values.clone(),
            error: None,
            quantities: Default::default(),
            trap_row: None,
        };
        let mut d = doc.clone();
        let result = names
            .iter()
            .zip(&values)
            .try_for_each(|(a, &x)| set_path(&mut d, a, x))
            .and_then(|_| Scenario::from_value(d));
        let result = result.and_then(|sc| match table {
            Some(TableKind::Trap) => sc.trap_row().map(|r| p.trap_row = Some(r)),
            None => sc.evaluate().map(|ev| p.quantities = ev.quantities),
        });
        if let Err(e) = result {
            p.error = Some(e.to_string());
        }
        p
    };
    let points: Vec<SweepPoint> =
        pool(common.jobs)?.install(|| (0..total).into_par_iter().map(eval_point).collect());

    let stem = s
        .output
        .as_ref()
        .and_then(|o| o.stem.clone())
        .unwrap_or_else(|| s.name.clone());
    let mut set = OutputSet::default();
    for f in formats(common, Some(&s)) {
        let (name, text) = match (table, f) {
            (Some(TableKind::Trap), _) => {
                (format!("{stem}_trap.csv"), report::trap_csv(&hash, &points))
            }
            (None, Format::Csv) => (
                format!("{stem}_sweep.csv"),
                report::sweep_csv(&hash, &names, &points),
            ),
            (None, Format::Json) => (
                format!("{stem}_sweep.json"),
                report::sweep_json(&hash, &names, &points),
            ),
        };
        if common.output_dir.is_none() {
            out.push_str(&text);
        }
        set.add(name, text);
    }
    let failed = points.iter().filter(|p| p.error.is_some()).count();
    if common.output_dir.is_some() {
        out.push_str(&format!("{total} points, {failed} failed\n"));
    }
    emit(&set, common.output_dir.as_deref(), out)?;
    Ok(EXIT_OK)
}

pub fn paper_check(
    sources: &[Source],
    list: bool,
    common: &Common,
    out: &mut String,
) -> Result<i32, Failure> {
    let parsed: Vec<(String, Scenario)> = sources
        .iter()
        .map(|src| parse(src).map(|(_, s)| (src.name.clone(), s)))
        .collect::<Result<_, _>>()?;
    if list {
        for (name, s) in &parsed {
            for c in &s.checks {
                out.push_str(&format!(
                    "{} [{}] {} ({}, {})\n",
                    c.id,
                    name,
                    c.quantity,
                    c.tolerance_text(),
                    c.source
                ));
            }
        }
        return Ok(EXIT_OK);
    }
    let outcomes: Vec<PresetOutcome> = pool(common.jobs)?.install(|| {
        parsed
            .par_iter()
            .map(|(name, s)| match s.evaluate() {
                Ok(ev) => PresetOutcome {
                    preset: name.clone(),
                    error: None,
                    verdicts: s.run_checks(&ev),
                },
                Err(e) => PresetOutcome {
                    preset: name.clone(),
                    error: Some(e.to_string()),
                    verdicts: s.checks.iter().map(|c| c.grade(&s.name, None)).collect(),
                },
            })
            .collect()
    });
    let mut n = 0;
    let mut failed = 0;
    for o in &outcomes {
        if let Some(e) = &o.error {
            out.push_str(&format!("ERROR [{}] {e}\n", o.preset));
        }
        for v in &o.verdicts {
            n += 1;
            failed += usize::from(!v.pass);
            out.push_str(&verdict_line(v));
        }
    }
    out.push_str(&format!("{n} checks, {failed} failed\n"));
    let all: String = sources
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let hash = sha256_hex(all.as_bytes());
    let mut set = OutputSet::default();
    for f in formats(common, None) {
        match f {
            Format::Csv => set.add("paper_check.csv", report::checks_csv(&hash, &outcomes)),
            Format::Json => set.add("paper_check.json", report::checks_json(&hash, &outcomes)),
        }
    }
    emit(&set, common.output_dir.as_deref(), out)?;
    Ok(
        if failed == 0 && outcomes.iter().all(|o| o.error.is_none()) {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
    )
}

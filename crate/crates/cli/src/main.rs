//! `mlc`: check, run and generate from M models.

use clap::{Args, Parser, Subcommand};
use mlang::codegen::{self, GenError, GenOptions};
use mlang::runtime::{self, externals, RunConfig, StopReason};
use mlang::stdlib::prelude::{MCORE_NAME, MCORE_SOURCE};
use mlang::syntax::{parse_timespan, LoadOptions};
use mlang::{compile_file, Compilation};
use rust_decimal::Decimal;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "mlc", version, about = "Compiler, simulator and generators for M models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check models
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        load: LoadArgs,
        /// Print the syntax tree as JSON
        #[arg(long)]
        dump_ast: bool,
        /// List declared external functions and whether the host provides them
        #[arg(long)]
        list_externals: bool,
    },
    /// Simulate a model and write its trace
    Run {
        path: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clock step used when the next event is not in the future
        #[arg(long)]
        epsilon: Option<String>,
        /// Stop before simulated time passes this timespan, e.g. `30s`
        #[arg(long)]
        max_time: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        max_events: u64,
        /// Trace destination: a file, `-` for stdout; no trace when absent
        #[arg(long)]
        trace: Option<String>,
        /// Keep only the last two values of each state variable
        #[arg(long)]
        truncate_history: bool,
    },
    /// Run a generator (`rebeca`, `trace-schema`)
    Gen {
        path: PathBuf,
        generator: String,
        #[command(flatten)]
        load: LoadArgs,
        /// Output file; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Discretization multiplier for the Rebeca generator
        #[arg(long, default_value_t = 100_000)]
        scale: i64,
    },
    /// Create a project directory with the prelude and a sample model
    Init { dir: PathBuf },
}

#[derive(Args)]
struct LoadArgs {
    /// Additional include directory (repeatable)
    #[arg(short = 'I', value_name = "DIR")]
    include: Vec<PathBuf>,
    /// Do not load mcore.m implicitly
    #[arg(long)]
    no_prelude: bool,
}

impl LoadArgs {
    fn options(&self) -> LoadOptions {
        let mut search_paths = self.include.clone();
        if let Some(env) = std::env::var_os("M_INCLUDE_PATH") {
            search_paths.extend(std::env::split_paths(&env).filter(|p| !p.as_os_str().is_empty()));
        }
        LoadOptions {
            search_paths,
            implicit_prelude: !self.no_prelude,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let code = match cli.command {
        Command::Check { paths, load, dump_ast, list_externals } => check(&paths, &load.options(), dump_ast, list_externals),
        Command::Run {
            path,
            load,
            seed,
            epsilon,
            max_time,
            max_events,
            trace,
            truncate_history,
        } => match run_config(seed, epsilon.as_deref(), max_time.as_deref(), max_events, truncate_history) {
            Ok(cfg) => run(&path, &load.options(), cfg, trace.as_deref()),
            Err(m) => {
                eprintln!("error: {m}");
                1
            }
        },
        Command::Gen { path, generator, load, out, scale } => gen(&path, &generator, &load.options(), out.as_deref(), scale),
        Command::Init { dir } => init(&dir),
    };
    ExitCode::from(code)
}

fn compile(path: &Path, opts: &LoadOptions) -> Result<Compilation, u8> {
    match compile_file(path, opts) {
        Ok(c) => {
            let text = c.render_diagnostics();
            if !text.is_empty() {
                eprint!("{text}");
                if !text.ends_with('\n') {
                    eprintln!();
                }
            }
            if c.has_errors() {
                Err(1)
            } else {
                Ok(c)
            }
        }
        Err(m) => {
            eprintln!("error: {m}");
            Err(1)
        }
    }
}

fn check(paths: &[PathBuf], opts: &LoadOptions, dump_ast: bool, list_externals: bool) -> u8 {
    let mut code = 0;
    for path in paths {
        let c = match compile_file(path, opts) {
            Ok(c) => c,
            Err(m) => {
                eprintln!("error: {m}");
                code = 1;
                continue;
            }
        };
        print!("{}", c.render_diagnostics());
        if dump_ast {
            println!("{}", serde_json::to_string_pretty(&c.unit.program).expect("program serializes"));
        }
        if list_externals {
            if let Some(m) = &c.model {
                for e in &m.externals {
                    let bound = externals::lookup(&e.name, e.params.len()).is_some();
                    let status = if bound { "bound" } else { "unbound" };
                    println!("{}/{} {status}", e.name, e.params.len());
                }
            }
        }
        if c.has_errors() {
            code = 1;
        } else {
            println!("{}: ok", path.display());
        }
    }
    code
}

fn run_config(seed: u64, epsilon: Option<&str>, max_time: Option<&str>, max_events: u64, truncate_history: bool) -> Result<RunConfig, String> {
    let mut cfg = RunConfig {
        seed,
        max_events,
        truncate_history,
        ..RunConfig::default()
    };
    if max_events == 0 {
        return Err("--max-events must be positive".into());
    }
    if let Some(e) = epsilon {
        let d = Decimal::from_str(e).map_err(|_| format!("invalid --epsilon `{e}`"))?;
        if d <= Decimal::ZERO {
            return Err("--epsilon must be positive".into());
        }
        cfg.epsilon = d;
    }
    if let Some(t) = max_time {
        let ts = parse_timespan(t).ok_or_else(|| format!("invalid --max-time `{t}` (expected a timespan such as 30s)"))?;
        cfg.max_time_ms = Some(ts.total_millis());
    }
    Ok(cfg)
}

fn run(path: &Path, opts: &LoadOptions, cfg: RunConfig, trace: Option<&str>) -> u8 {
    let c = match compile(path, opts) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let model = c.model.as_ref().expect("checked model");
    let result = runtime::run(model, cfg);
    let to_stdout = trace == Some("-");
    let mut info: Box<dyn Write> = if to_stdout { Box::new(std::io::stderr()) } else { Box::new(std::io::stdout()) };
    for line in &result.output {
        let _ = write!(info, "{line}");
    }
    match trace {
        Some("-") => print!("{}", result.trace_jsonl()),
        Some(file) => {
            if let Err(e) = fs::write(file, result.trace_jsonl()) {
                eprintln!("error: cannot write {file}: {e}");
                return 1;
            }
        }
        None => {}
    }
    let _ = writeln!(
        info,
        "dispatched {} events, final time {}, stop reason {}",
        result.dispatched,
        runtime::trace::time_text(result.final_time()),
        result.stop.name()
    );
    if let Some(e) = &result.error {
        eprintln!("{}", e.render(&c.unit.sources));
    }
    if result.stop == StopReason::RuntimeError {
        2
    } else {
        0
    }
}

fn gen(path: &Path, generator: &str, opts: &LoadOptions, out: Option<&Path>, scale: i64) -> u8 {
    if !codegen::GENERATORS.iter().any(|(n, _)| *n == generator) {
        eprintln!("error: {}", GenError::UnknownGenerator { name: generator.to_string() });
        return 1;
    }
    if scale <= 0 {
        eprintln!("error: --scale must be positive");
        return 1;
    }
    let c = match compile(path, opts) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let model = c.model.as_ref().expect("checked model");
    match codegen::generate(generator, model, &GenOptions { scale }) {
        Ok(a) => {
            match out {
                Some(p) => {
                    let report = p.with_extension("report.json");
                    if let Err(e) = fs::write(p, &a.text).and_then(|_| fs::write(&report, a.report.to_json() + "\n")) {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return 1;
                    }
                }
                None => print!("{}", a.text),
            }
            0
        }
        Err(GenError::Unsupported(list)) => {
            for u in &list {
                eprintln!(
                    "error {}:{}:{} unsupported-feature {}: {}",
                    c.unit.sources.path(u.span.file),
                    u.span.line,
                    u.span.column,
                    u.construct,
                    u.message
                );
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

const SAMPLE: &str = r#"include "mcore.m";

def Counter class[actor] {
    var[state] count:int = 0;

    do[every(1s)] tick {
        count = count + 1;
        if (count >= 5) {
            println("done after " + toString(count) + " ticks");
            terminate();
        }
    }
};

main {
    var c:actor = Counter();
}
"#;

fn init(dir: &Path) -> u8 {
    let model = dir.join("model.m");
    if model.exists() {
        eprintln!("error: {} already exists", model.display());
        return 1;
    }
    let res = fs::create_dir_all(dir)
        .and_then(|_| fs::write(dir.join(MCORE_NAME), MCORE_SOURCE))
        .and_then(|_| fs::write(&model, SAMPLE));
    match res {
        Ok(()) => {
            println!("created {}", model.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

//! The `leam` command line. Exit codes: 0 success, 1 validation or domain
//! failure, 2 configuration or usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use leam_core::design::{design_patch, PatchDesignInput};
use leam_core::macros::{lint_macros, parse_macro, MacroDoc};
use leam_core::material::Catalog;
use leam_core::trimmed;

use crate::backend::{Backend, LiveBackend, ReplayBackend, ReplayMatch};
use crate::config::Config;
use crate::pipeline::{run_pipeline, run_update, Mode, PipelineConfig, UserInput};
use crate::prompt::{ImageInput, PromptAssets};
use crate::report::{geom_report, write_report, GeomReport, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::workspace::LoadedWorkspace;
use crate::PipelineError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "leam", version, about = "Antenna descriptions to simulator macro files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Replay,
    Live,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the four-stage pipeline into a new workspace.
    Model {
        /// Text description of the antenna.
        #[arg(long)]
        desc: PathBuf,
        /// Image of the antenna; may be repeated.
        #[arg(long = "image")]
        images: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "strong")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "replay")]
        backend: BackendArg,
        /// Recorded transcripts for the replay backend.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Match fixtures by invocation number and tool instead of request hash.
        #[arg(long)]
        replay_loose: bool,
        /// Output directory; must be empty or absent.
        #[arg(long)]
        workspace: PathBuf,
        /// Model checks copied into the workspace for `geom-report`.
        #[arg(long)]
        checks: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Directory of prompt assets replacing the built-in ones.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Write an UpdatePara macro with new parameter values and re-verify.
    Update {
        #[arg(long)]
        workspace: PathBuf,
        /// `NAME=VALUE`; may be repeated.
        #[arg(long = "param", value_parser = parse_assignment)]
        params: Vec<(String, f64)>,
        /// File of `NAME = VALUE` lines.
        #[arg(long)]
        params_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Parse and lint macro files, in execution order.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Write geom_report.txt and geom_report.rec for a workspace.
    GeomReport {
        #[arg(long)]
        workspace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Size a rectangular patch with the transmission-line model.
    DesignPatch {
        /// Resonant frequency in Hz.
        #[arg(long)]
        f0: f64,
        /// Substrate relative permittivity.
        #[arg(long)]
        er: f64,
        /// Substrate height in mm.
        #[arg(long)]
        h: f64,
    },
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (n, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad number `{}`", v.trim()))?;
    Ok((n.trim().to_string(), v))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_USAGE
            } else {
                EXIT_DOMAIN
            }
        }
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn config_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> Result<i32, PipelineError> {
    match cmd {
        Command::Model {
            desc,
            images,
            mode,
            backend,
            fixtures,
            replay_loose,
            workspace,
            checks,
            config,
            catalog,
            assets,
        } => {
            let file_cfg = match &config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            let mut cfg = PipelineConfig {
                mode: match mode {
                    ModeArg::Strong => Mode::Strong,
                    ModeArg::Weak => Mode::Weak,
                },
                models: file_cfg.models.clone(),
                ..PipelineConfig::default()
            };
            if let Some(p) = &catalog {
                cfg = cfg.with_catalog(config_file(p)?)?;
            }
            if let Some(dir) = &assets {
                if !dir.is_dir() {
                    return Err(PipelineError::Config(format!("assets directory {} not found", dir.display())));
                }
                cfg.assets = PromptAssets::load_dir(dir)?;
            }
            let backend: Box<dyn Backend> = match backend {
                BackendArg::Replay => {
                    let dir = fixtures.ok_or_else(|| {
                        PipelineError::Config("the replay backend needs --fixtures".into())
                    })?;
                    if !dir.is_dir() {
                        return Err(PipelineError::Config(format!(
                            "fixtures directory {} not found",
                            dir.display()
                        )));
                    }
                    let matching = if replay_loose { ReplayMatch::Loose } else { ReplayMatch::Hash };
                    Box::new(
                        ReplayBackend::open(&dir, matching)
                            .map_err(|e| PipelineError::Config(e.to_string()))?,
                    )
                }
                BackendArg::Live => Box::new(LiveBackend::new(file_cfg.live_config())),
            };
            if !desc.is_file() {
                return Err(PipelineError::Config(format!("description {} not found", desc.display())));
            }
            let input = UserInput {
                text: read(&desc)?,
                images: images.iter().map(|p| ImageInput::load(p)).collect::<Result<_, _>>()?,
                checks: checks.as_deref().map(read).transpose()?,
            };
            let state = run_pipeline(&workspace, &input, &cfg, backend.as_ref())?;
            println!("{}", state.summary().expect("dimensioned"));
            for e in &state.manifest {
                println!("  {}", e.file);
            }
            println!("workspace: {}", workspace.display());
            Ok(EXIT_OK)
        }
        Command::Update {
            workspace,
            mut params,
            params_file,
            samples,
            seed,
        } => {
            if let Some(p) = params_file {
                let mut from_file = Vec::new();
                for (i, line) in read(&p)?.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    from_file.push(parse_assignment(line).map_err(|e| {
                        PipelineError::Config(format!("{} line {}: {e}", p.display(), i + 1))
                    })?);
                }
                from_file.append(&mut params);
                params = from_file;
            }
            let outcome = run_update(&workspace, &params, &PipelineConfig::default(), None)?;
            println!("wrote {}", outcome.file);
            let ws = LoadedWorkspace::load(&workspace)?;
            let report = geom_report(&ws.dims, &outcome.parameters, &ws.checks, samples, seed)?;
            print_summary(&report);
            Ok(if report.all_checks_pass() { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Validate { files, catalog } => {
            let catalog = match &catalog {
                Some(p) => Catalog::parse(&config_file(p)?)
                    .map_err(|e| PipelineError::Config(format!("catalog: {e}")))?,
                None => Catalog::builtin(),
            };
            let mut docs: Vec<MacroDoc> = Vec::new();
            let mut ok = true;
            for f in &files {
                match parse_macro(&read(f)?) {
                    Ok(d) => docs.push(d),
                    Err(e) => {
                        eprintln!("{}: {e}", f.display());
                        ok = false;
                        docs.push(MacroDoc::default());
                    }
                }
            }
            if ok {
                for d in lint_macros(&docs, &catalog) {
                    let s = d.to_string();
                    let msg = s.split_once(": ").map_or(s.as_str(), |(_, m)| m);
                    eprintln!("{} statement {}: {msg}", files[d.doc].display(), d.statement + 1);
                    ok = false;
                }
            }
            if ok {
                println!("{} file(s) clean", files.len());
            }
            Ok(if ok { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::GeomReport {
            workspace,
            samples,
            seed,
        } => {
            let ws = LoadedWorkspace::load(&workspace)?;
            let report = write_report(&ws, samples, seed)?;
            print!("{}", report.text());
            Ok(if report.all_checks_pass() { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::DesignPatch { f0, er, h } => {
            match design_patch(PatchDesignInput { f0, epsilon_r: er, h }) {
                Ok(out) => {
                    println!("W = {} mm", trimmed(out.width, 6));
                    println!("L = {} mm", trimmed(out.length, 6));
                    println!("eps_eff = {}", trimmed(out.epsilon_eff, 6));
                    println!("delta_L = {} mm", trimmed(out.delta_l, 6));
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(EXIT_USAGE)
                }
            }
        }
    }
}

fn print_summary(report: &GeomReport) {
    for s in &report.solids {
        match s.exact_volume {
            Some(v) => println!("{}: exact volume {} mm^3", s.name, trimmed(v, 9)),
            None => println!(
                "{}: estimated volume {} ± {} mm^3",
                s.name,
                trimmed(s.mc.estimate, 6),
                trimmed(s.mc.stderr, 6)
            ),
        }
    }
    for row in &report.checks {
        println!("{}", GeomReport::check_line(row));
    }
}

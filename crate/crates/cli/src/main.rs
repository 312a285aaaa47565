use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use fermi_rpa_cli::{run, Format, Mode, RunConfig};

/// Momentum distribution of the bosonized RPA trial state.
#[derive(Parser, Debug)]
#[command(name = "fermi-rpa", version)]
struct Cli {
    mode: Mode,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when neither this nor `output.path` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Omit the `# generated ...` header line in CSV output.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// `const:v,R` or `coulomb-sr:e2,R`; replaces the configured potential.
    #[arg(long)]
    potential: Option<String>,
    /// Override `model.kf`.
    #[arg(long)]
    kf: Option<f64>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return fail(1, format!("invalid config: cannot read {}: {e}", path.display())),
            };
            match RunConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => return fail(1, format!("invalid config: {e}")),
            }
        }
        None => RunConfig::default(),
    };
    if let Some(p) = cli.potential {
        cfg.potential = fermi_rpa_cli::config::PotentialSection { preset: Some(p), ..Default::default() };
    }
    if let Some(kf) = cli.kf {
        cfg.model.kf = kf;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(1, "invalid config: --threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(1, format!("invalid config: thread pool: {e}"));
        }
    }
    let format = cli.format.unwrap_or(cfg.output.format);
    let out = cli.out.or_else(|| cfg.output.path.as_ref().map(PathBuf::from));

    let output = match run(cli.mode, &cfg) {
        Ok(o) => o,
        Err(e) => return fail(e.exit_code(), e),
    };
    for line in &output.summary {
        eprintln!("{line}");
    }
    let Some(table) = output.table else {
        return ExitCode::SUCCESS;
    };
    let text = match format {
        Format::Csv => {
            let header = (!cli.no_timestamp).then(|| {
                let t = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                format!("generated {} unix={t}", cli.mode)
            });
            table.to_csv(header.as_deref())
        }
        Format::Json => table.to_json(),
    };
    let mut writes = output.extra_files;
    match out {
        Some(p) => writes.push((p.to_string_lossy().into_owned(), text)),
        None => print!("{text}"),
    }
    for (path, body) in writes {
        if let Err(e) = fs::write(&path, body) {
            return fail(1, format!("invalid config: cannot write {path}: {e}"));
        }
    }
    ExitCode::SUCCESS
}

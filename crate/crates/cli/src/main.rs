#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ulsched::antenna::{
    antenna_exact, antenna_greedy, AntennaSelectionInstance, MAX_EXACT_ANTENNAS,
};
use ulsched::harness::{
    run_experiment, verify_scenario, write_csv, write_json, Algorithm, Alphabet, HarnessError,
    HarnessResult, MatrixSpec, OutputFormat, RunOptions, Scenario,
};
use ulsched::par::Execution;

#[derive(Parser)]
#[command(
    name = "ulsched",
    version,
    about = "Uplink MU-MIMO resource block scheduling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario at a single SNR point.
    Schedule {
        #[command(flatten)]
        common: Common,
        /// SNR in dB; defaults to the first point of the scenario grid.
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Run the scenario over its SNR grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Replace the grid by `from:to:step` (dB).
        #[arg(long, value_parser = parse_grid)]
        grid: Option<Grid>,
    },
    /// Transmit antenna selection on a single channel matrix.
    AntennaSelect {
        /// TOML file with `rows`, `cols`, `re` and optionally `im` (row-major).
        #[arg(long)]
        config: PathBuf,
        /// Number of antennas to select.
        #[arg(long = "select", short = 'c')]
        select: usize,
        /// Linear SNR.
        #[arg(long, default_value_t = 1.0)]
        snr: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the oracle checks on the first interval of every SNR point.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Print ground-set and constraint statistics.
    Enumerate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated; the first one drives the fairness weights.
    #[arg(long, value_enum, value_delimiter = ',')]
    algo: Vec<Algo>,
    #[arg(long, value_enum)]
    alphabet: Option<AlphabetArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Record wall-clock time per row (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Greedy,
    Lazy,
    Pruned,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlphabetArg {
    Gaussian,
    Finite,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [from, to, step] = parts[..] else {
        return Err("expected from:to:step".into());
    };
    if !(step > 0.0) || to < from {
        return Err("need step > 0 and to >= from".into());
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok(Grid((0..=n).map(|i| from + i as f64 * step).collect()))
}

impl Common {
    fn scenario(&self) -> HarnessResult<Scenario> {
        let mut s = Scenario::load(&self.config)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if !self.algo.is_empty() {
            s.algorithms = self
                .algo
                .iter()
                .map(|a| match a {
                    Algo::Greedy => Algorithm::Greedy,
                    Algo::Lazy => Algorithm::Lazy,
                    Algo::Pruned => Algorithm::Pruned,
                    Algo::Exact => Algorithm::Exact,
                })
                .collect();
        }
        if let Some(a) = self.alphabet {
            s.alphabet = match a {
                AlphabetArg::Gaussian => Alphabet::Gaussian,
                AlphabetArg::Finite => Alphabet::Finite,
            };
        }
        Ok(s)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            timing: self.timing,
        }
    }
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_and_write(common: &Common, scenario: Scenario) -> HarnessResult<()> {
    scenario.validate()?;
    let rows = run_experiment(&scenario, common.options())?;
    let mut out = open_out(common.out.as_deref())?;
    match common.format.into() {
        OutputFormat::Csv => write_csv(&rows, &mut out)?,
        OutputFormat::Json => write_json(&scenario, &rows, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn antenna_select(
    config: &Path,
    select: usize,
    snr: f64,
    out: Option<&Path>,
    format: Format,
) -> HarnessResult<()> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", config.display())))?;
    let spec: MatrixSpec =
        toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let instance = AntennaSelectionInstance::new(spec.to_matrix()?, select, snr)?;
    let mut results = vec![("greedy", antenna_greedy(&instance)?)];
    if instance.n_antennas() <= MAX_EXACT_ANTENNAS {
        results.push(("exact", antenna_exact(&instance)?));
    }
    let mut w = open_out(out)?;
    match format {
        Format::Csv => {
            writeln!(w, "algorithm,value,columns")?;
            for (name, r) in &results {
                let cols: Vec<String> = r.columns.iter().map(|c| c.to_string()).collect();
                writeln!(
                    w,
                    "{name},{},{}",
                    ulsched::harness::format_sig9(r.value),
                    cols.join(" ")
                )?;
            }
        }
        Format::Json => {
            let doc: Vec<_> = results
                .iter()
                .map(|(name, r)| {
                    serde_json::json!({ "algorithm": name, "value": r.value, "columns": r.columns })
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::other)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn verify(common: &Common) -> HarnessResult<bool> {
    let scenario = common.scenario()?;
    let results = verify_scenario(&scenario, common.options())?;
    let mut out = open_out(common.out.as_deref())?;
    writeln!(out, "snr_db,check,status,detail")?;
    for r in &results {
        let status = if r.passed { "pass" } else { "FAIL" };
        writeln!(
            out,
            "{},{},{status},{}",
            r.snr_db,
            r.name,
            r.detail.replace(',', ";")
        )?;
    }
    out.flush()?;
    Ok(results.iter().all(|r| r.passed))
}

fn enumerate(common: &Common) -> HarnessResult<()> {
    let s = common.scenario()?;
    let st = s.instance()?.stats();
    let mut out = open_out(common.out.as_deref())?;
    writeln!(out, "users               {}", st.users)?;
    writeln!(out, "resource blocks     {}", st.rbs)?;
    writeln!(out, "codebook size       {}", st.codebook_size)?;
    writeln!(
        out,
        "allocations         {} ({} one-chunk, {} two-chunk)",
        st.allocations, st.one_chunk_allocations, st.two_chunk_allocations
    )?;
    writeln!(out, "elements            {}", st.elements)?;
    writeln!(out, "control rows        {}", st.control_rows)?;
    writeln!(out, "interference rows   {}", st.interference_rows)?;
    writeln!(out, "column sparsity     {}", st.column_sparsity)?;
    writeln!(out, "max feasible size   {}", st.max_feasible_size)?;
    let a = &st.assumptions;
    if a.holds {
        writeln!(out, "assumptions         hold")?;
    } else {
        writeln!(
            out,
            "assumptions         violated: {}",
            a.diagnostic.as_deref().unwrap_or("?")
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> HarnessResult<ExitCode> {
    match cli.command {
        Command::Schedule { common, snr_db } => {
            let mut s = common.scenario()?;
            s.snr_db = vec![snr_db.unwrap_or(s.snr_db[0])];
            run_and_write(&common, s)?;
        }
        Command::Sweep { common, grid } => {
            let mut s = common.scenario()?;
            if let Some(Grid(g)) = grid {
                s.snr_db = g;
            }
            run_and_write(&common, s)?;
        }
        Command::AntennaSelect {
            config,
            select,
            snr,
            out,
            format,
        } => {
            antenna_select(&config, select, snr, out.as_deref(), format)?;
        }
        Command::Verify { common } => {
            if !verify(&common)? {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Enumerate { common } => enumerate(&common)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

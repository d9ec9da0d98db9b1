use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pbinfer::dgp::{ObservationModelSpec, Setting};
use pbinfer::estimators::Method;
use pbinfer::gwas::{self, CohortSpec, ScanOptions};
use pbinfer::sim::{self, SimScenario, TableFormat};

#[derive(Parser)]
#[command(
    name = "pbinfer",
    version,
    about = "Regression inference with partially observed outcomes"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo scenarios and write records.csv, summary.csv, summary.md.
    Simulate(SimulateArgs),
    /// Print a summary table from a simulate output directory.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
    },
    /// Write one replicate's analysis frame as CSV.
    Generate(GenerateArgs),
    /// Per-variant association scans.
    #[command(subcommand)]
    Gwas(GwasCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON (one object or an array).
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    config: Option<PathBuf>,
    /// Built-in grid name.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Override the replicate count of every scenario.
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Scenario name when the config holds several.
    #[arg(long)]
    scenario: Option<String>,
    /// 1-based replicate index.
    #[arg(long, default_value_t = 1)]
    replicate: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the unmasked outcome column.
    #[arg(long)]
    unsafe_truth: bool,
}

#[derive(Subcommand)]
enum GwasCommand {
    Scan {
        #[arg(long)]
        pheno: PathBuf,
        #[arg(long)]
        geno: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "cca,wcca,ps_ppi,synsurr")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0.01)]
        maf: f64,
        #[arg(long, default_value_t = gwas::GENOME_WIDE)]
        significance: f64,
        /// Skip the inverse normal transform of y and yhat.
        #[arg(long)]
        no_transform: bool,
        /// Refit the propensity model for every variant.
        #[arg(long)]
        per_variant_propensity: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes `<prefix>pheno.csv` and `<prefix>geno.csv`.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        variants: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Causal variant as `index:effect`; repeatable.
        #[arg(long, value_parser = parse_causal)]
        causal: Vec<(usize, f64)>,
        /// Observation probability of the phenotype.
        #[arg(long, default_value_t = 0.5)]
        observed: f64,
        #[arg(long)]
        out_prefix: String,
    },
}

fn parse_causal(s: &str) -> std::result::Result<(usize, f64), String> {
    let (v, b) = s.split_once(':').ok_or("expected index:effect")?;
    Ok((
        v.parse().map_err(|e| format!("bad index: {e}"))?,
        b.parse().map_err(|e| format!("bad effect: {e}"))?,
    ))
}

fn load_scenarios(path: &Path) -> Result<Vec<SimScenario>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SimScenario::from_json(&text)?)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut scenarios = match (&args.config, &args.grid) {
        (Some(path), _) => load_scenarios(path)?,
        (None, Some(name)) => sim::builtin_grids(name)?,
        (None, None) => unreachable!("clap requires one of --config/--grid"),
    };
    if let Some(l) = args.replicates {
        if l == 0 {
            bail!("--replicates must be at least 1");
        }
        for sc in &mut scenarios {
            sc.replicates = l;
        }
    }
    let outputs = sim::run_grid(&scenarios)?;
    sim::write_outputs(&args.out, &outputs)?;
    eprintln!("wrote {} scenarios to {}", outputs.len(), args.out.display());
    Ok(())
}

fn table(input: &Path, format: &str) -> Result<()> {
    let format: TableFormat = format.parse()?;
    let path = input.join("summary.csv");
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let rows = sim::parse_summary_csv(BufReader::new(file))?;
    sim::emit_table(&rows, format, io::stdout().lock())?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let scenarios = load_scenarios(&args.config)?;
    let sc = match &args.scenario {
        Some(name) => scenarios
            .iter()
            .find(|s| &s.name == name)
            .with_context(|| format!("no scenario named `{name}`"))?,
        None => &scenarios[0],
    };
    if args.replicate == 0 {
        bail!("--replicate is 1-based");
    }
    let frame = sim::replicate_frame(sc, args.replicate)?;
    frame.write_csv(BufWriter::new(File::create(&args.out)?), args.unsafe_truth)?;
    Ok(())
}

fn gwas_command(cmd: GwasCommand) -> Result<()> {
    match cmd {
        GwasCommand::Scan {
            pheno,
            geno,
            methods,
            maf,
            significance,
            no_transform,
            per_variant_propensity,
            out,
        } => {
            let p = gwas::read_pheno_csv(BufReader::new(File::open(&pheno)?))
                .with_context(|| format!("reading {}", pheno.display()))?;
            let g = gwas::read_geno_csv(BufReader::new(File::open(&geno)?))
                .with_context(|| format!("reading {}", geno.display()))?;
            let opts = ScanOptions {
                methods,
                maf,
                significance,
                transform: !no_transform,
                per_variant_propensity,
            };
            let rows = gwas::run_variant_scan(&p, &g, &opts)?;
            gwas::write_scan_csv(&rows, BufWriter::new(File::create(&out)?))?;
            eprintln!("scanned {} variants", rows.len());
        }
        GwasCommand::Simulate {
            n,
            variants,
            seed,
            causal,
            observed,
            out_prefix,
        } => {
            let mut spec = CohortSpec::new(n, variants);
            spec.causal = causal;
            spec.missingness = ObservationModelSpec::mcar(Setting::LinearContinuous, observed);
            let (p, g) = gwas::simulate_cohort(&spec, seed)?;
            gwas::write_pheno_csv(&p, BufWriter::new(File::create(format!("{out_prefix}pheno.csv"))?))?;
            gwas::write_geno_csv(&g, BufWriter::new(File::create(format!("{out_prefix}geno.csv"))?))?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Table { input, format } => table(&input, &format),
        Command::Generate(args) => generate(args),
        Command::Gwas(cmd) => gwas_command(cmd),
    }
}

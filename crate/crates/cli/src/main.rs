//! `affine-perc`: command-line front end to the carpet simulator.
//!
//! Results go to stdout (JSON, or CSV for tables) or atomically to `--out`.
//! The fully resolved configuration, including the seed actually used, is
//! echoed to stderr as one JSON line so every run can be repeated exactly.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affine_perc::analytic::analytic_report;
use affine_perc::estimator::{
    compare_hv, estimate_crossing, estimate_survival, find_critical, parse_p_grid, sweep,
    CrossingSetup,
};
use affine_perc::io::{
    load_realization, realization_to_json, sweep_csv_string, write_atomic, write_census_csv,
};
use affine_perc::render::{render_pgm, render_svg, ImageFormat, RenderSpec, Rgb};
use affine_perc::{census, Adjacency, Direction, Generator, GridParams, Layout, Realization};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "affine-perc",
    version,
    about = "Random self-affine carpets: generation, crossings and analytic bounds"
)]
struct Cli {
    #[command(subcommand)]
    #[serde(flatten)]
    command: Command,

    /// Master seed; a random seed is drawn and echoed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte Carlo trials (0 = all cores). Results do not
    /// depend on this.
    #[arg(long, global = true, env = "AFFINE_PERC_THREADS")]
    threads: Option<usize>,

    /// Write the result here (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Sample a realization and write it as JSON.
    Generate(GenerateArgs),
    /// Draw one level of a realization as SVG or PGM.
    Render(RenderArgs),
    /// Monte Carlo crossing probability at one p.
    Estimate(EstimateArgs),
    /// Crossing estimates over a grid of p values.
    Sweep(SweepArgs),
    /// Bisect for the p at which the crossing estimate reaches a threshold.
    Critical(CriticalArgs),
    /// Component counts, sizes and islands per level.
    Census(CensusArgs),
    /// Extinction, dimensions, j-full limit and crossing bounds.
    Analytic(AnalyticArgs),
    /// Paired comparison of horizontal and vertical crossings.
    CompareHv(CompareArgs),
    /// Monte Carlo survival frequency next to the analytic value.
    Survival(SurvivalArgs),
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
struct GridArgs {
    /// Columns per subdivision.
    #[arg(long)]
    n: u32,
    /// Rows per subdivision (m > n >= 2).
    #[arg(long)]
    m: u32,
}

impl GridArgs {
    fn params(&self) -> affine_perc::Result<GridParams> {
        GridParams::new(self.n, self.m)
    }
}

/// Either a realization file or the parameters to sample one.
#[derive(Debug, Args, Serialize)]
struct SourceArgs {
    /// Realization JSON produced by `generate`.
    #[arg(long, conflicts_with_all = ["n", "m", "p", "depth"])]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    n: Option<u32>,
    #[arg(long, required_unless_present = "input")]
    m: Option<u32>,
    #[arg(long, required_unless_present = "input")]
    p: Option<f64>,
    /// Generation depth (defaults to --level).
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, default_value_t = 0)]
    copy: u32,
}

#[derive(Debug, Args, Serialize)]
struct GenerateArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    p: f64,
    #[arg(long, alias = "depth")]
    level: u32,
    /// Domain-copy index.
    #[arg(long, default_value_t = 0)]
    copy: u32,
    /// Force every level below this one to be fully selected.
    #[arg(long)]
    k0: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ImageArg {
    Svg,
    Pgm,
}

#[derive(Debug, Args, Serialize)]
struct RenderArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Level to draw.
    #[arg(long)]
    level: u32,
    #[arg(long, value_enum, default_value = "svg")]
    format: ImageArg,
    #[arg(long, default_value_t = 800)]
    width_px: u32,
    #[arg(long, default_value = "#000000")]
    fill: String,
    #[arg(long, default_value = "#ffffff")]
    empty: String,
    /// Outline the square and its first subdivision.
    #[arg(long)]
    gridlines: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AdjacencyArg {
    Edge,
    Corner,
}

impl From<AdjacencyArg> for Adjacency {
    fn from(a: AdjacencyArg) -> Self {
        match a {
            AdjacencyArg::Edge => Adjacency::Edge,
            AdjacencyArg::Corner => Adjacency::Corner,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DomainArg {
    Unit,
    TwoTall,
    TwoWide,
}

impl From<DomainArg> for Layout {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Unit => Layout::Unit,
            DomainArg::TwoTall => Layout::TwoTall,
            DomainArg::TwoWide => Layout::TwoWide,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DirectionArg {
    H,
    V,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::H => Direction::H,
            DirectionArg::V => Direction::V,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TableArg {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
struct CrossingArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, alias = "depth")]
    level: u32,
    #[arg(long)]
    trials: u64,
    #[arg(long, value_enum, default_value = "corner")]
    adjacency: AdjacencyArg,
    #[arg(long, value_enum, default_value = "unit")]
    domain: DomainArg,
    #[arg(long, value_enum, default_value = "h")]
    direction: DirectionArg,
}

impl CrossingArgs {
    fn setup(&self) -> affine_perc::Result<CrossingSetup> {
        Ok(
            CrossingSetup::new(self.grid.params()?, self.level, self.direction.into())
                .with_domain(self.domain.into())
                .with_adjacency(self.adjacency.into()),
        )
    }
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    crossing: CrossingArgs,
    #[arg(long)]
    p: f64,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    crossing: CrossingArgs,
    /// Grid of p values as lo:hi:step.
    #[arg(long)]
    p_grid: String,
    /// Reuse one seed across the grid so estimates are monotone in p.
    #[arg(long)]
    coupled: bool,
    /// Output format; CSV when writing to --out, JSON on stdout by default.
    #[arg(long, value_enum)]
    format: Option<TableArg>,
}

#[derive(Debug, Args, Serialize)]
struct CriticalArgs {
    #[command(flatten)]
    crossing: CrossingArgs,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct CensusArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Level to census; every level when omitted.
    #[arg(long)]
    level: Option<u32>,
    #[arg(long, value_enum, default_value = "corner")]
    adjacency: AdjacencyArg,
    #[arg(long, value_enum)]
    format: Option<TableArg>,
}

#[derive(Debug, Args, Serialize)]
struct AnalyticArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    p: f64,
    /// Bisection width for the j-full threshold.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    p: f64,
    #[arg(long, alias = "depth")]
    level: u32,
    #[arg(long)]
    trials: u64,
    #[arg(long, value_enum, default_value = "corner")]
    adjacency: AdjacencyArg,
}

#[derive(Debug, Args, Serialize)]
struct SurvivalArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    p: f64,
    #[arg(long, alias = "depth")]
    level: u32,
    #[arg(long)]
    trials: u64,
}

impl Command {
    fn uses_seed(&self) -> bool {
        match self {
            Command::Analytic(_) => false,
            Command::Render(a) => a.source.input.is_none(),
            Command::Census(a) => a.source.input.is_none(),
            _ => true,
        }
    }
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if cli.command.uses_seed() && cli.seed.is_none() {
        cli.seed = Some(rand::random());
    }
    match serde_json::to_string(&cli) {
        Ok(config) => eprintln!("{{\"config\":{config}}}"),
        Err(e) => eprintln!("warning: could not echo config: {e}"),
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn json<T: Serialize>(value: &T) -> affine_perc::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> affine_perc::Result<()> {
    use std::io::Write;
    match out {
        Some(path) => write_atomic(path, bytes),
        None => Ok(std::io::stdout().lock().write_all(bytes)?),
    }
}

fn table_format(explicit: Option<TableArg>, out: Option<&Path>) -> TableArg {
    explicit.unwrap_or(if out.is_some() {
        TableArg::Csv
    } else {
        TableArg::Json
    })
}

fn load_or_generate(
    src: &SourceArgs,
    level: Option<u32>,
    seed: Option<u64>,
) -> affine_perc::Result<Realization> {
    if let Some(path) = &src.input {
        return load_realization(path);
    }
    // clap guarantees these when --input is absent.
    let (n, m, p) = (src.n.unwrap(), src.m.unwrap(), src.p.unwrap());
    let depth = src.depth.or(level).ok_or_else(|| {
        affine_perc::Error::Domain("either --depth or --level is required".into())
    })?;
    Generator::new(GridParams::new(n, m)?).generate(p, depth, seed.unwrap_or(0), src.copy)
}

fn run(cli: &Cli) -> affine_perc::Result<()> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Generate(a) => {
            let gen = Generator::new(a.grid.params()?);
            let r = match a.k0 {
                Some(k0) => gen.force_prefix(a.p, a.level, seed, a.copy, k0)?,
                None => gen.generate(a.p, a.level, seed, a.copy)?,
            };
            emit(out, realization_to_json(&r).as_bytes())
        }
        Command::Render(a) => {
            let r = load_or_generate(&a.source, Some(a.level), cli.seed)?;
            let spec = RenderSpec {
                width_px: a.width_px,
                fill: a.fill.parse::<Rgb>()?,
                empty: a.empty.parse::<Rgb>()?,
                draw_gridlines: a.gridlines,
                ..RenderSpec::new(
                    a.level,
                    match a.format {
                        ImageArg::Svg => ImageFormat::Svg,
                        ImageArg::Pgm => ImageFormat::Pgm,
                    },
                )
            };
            let bytes = match spec.format {
                ImageFormat::Svg => render_svg(&r, &spec)?.into_bytes(),
                ImageFormat::Pgm => render_pgm(&r, &spec)?,
            };
            emit(out, &bytes)
        }
        Command::Estimate(a) => {
            let est = estimate_crossing(&a.crossing.setup()?, a.p, a.crossing.trials, seed)?;
            emit(out, &json(&est)?)
        }
        Command::Sweep(a) => {
            let grid = parse_p_grid(&a.p_grid)?;
            let result = sweep(
                &a.crossing.setup()?,
                &grid,
                a.crossing.trials,
                a.coupled,
                seed,
            )?;
            let bytes = match table_format(a.format, out) {
                TableArg::Csv => sweep_csv_string(&result)?.into_bytes(),
                TableArg::Json => json(&result)?,
            };
            emit(out, &bytes)
        }
        Command::Critical(a) => {
            let bracket = find_critical(
                &a.crossing.setup()?,
                a.crossing.trials,
                a.threshold,
                a.tol,
                seed,
            )?;
            emit(out, &json(&bracket)?)
        }
        Command::Census(a) => {
            let r = load_or_generate(&a.source, a.level, cli.seed)?;
            let levels = match a.level {
                Some(k) => vec![k],
                None => (1..=r.depth()).collect(),
            };
            let rows = levels
                .into_iter()
                .map(|k| census(&r, k, a.adjacency.into()))
                .collect::<affine_perc::Result<Vec<_>>>()?;
            let bytes = match table_format(a.format, out) {
                TableArg::Csv => {
                    let mut buf = Vec::new();
                    write_census_csv(&mut buf, &rows)?;
                    buf
                }
                TableArg::Json => json(&rows)?,
            };
            emit(out, &bytes)
        }
        Command::Analytic(a) => emit(out, &json(&analytic_report(a.grid.params()?, a.p, a.tol)?)?),
        Command::CompareHv(a) => {
            let c = compare_hv(
                a.grid.params()?,
                a.p,
                a.level,
                a.trials,
                a.adjacency.into(),
                seed,
            )?;
            emit(out, &json(&c)?)
        }
        Command::Survival(a) => {
            let params = a.grid.params()?;
            let est = estimate_survival(params, a.p, a.level, a.trials, seed)?;
            let report = serde_json::json!({
                "estimate": est,
                "analytic_limit": affine_perc::analytic::extinction_prob(params, a.p)?.survival,
                "analytic_at_level": affine_perc::analytic::survival_at_depth(params, a.p, a.level)?,
            });
            emit(out, &json(&report)?)
        }
    }
}

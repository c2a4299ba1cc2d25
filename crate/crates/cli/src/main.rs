use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use relaynet::bounds::BoundConfig;
use relaynet::cgras::{enumerate_all, enumerate_schemes, Cgras, EdgePolicy, EnumOptions, MessageAllocation, TxPolicy};
use relaynet::channel::{ChannelSpec, RateTarget};
use relaynet::optimizer::{optimize_scheme, EnergyWeights, PowerSolution, SplitSearch};
use relaynet::sweep::{self, Format, Grid, SchemeLibrary, SweepOptions, Sweeper};
use relaynet::{Error, NodeSet};

#[derive(Parser)]
#[command(name = "relaynet", version, about = "Energy-efficient coding schemes for a 2-relay, 3-receiver downlink")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file with default values for any of the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Symmetric rate; several values may be given separated by commas
    #[arg(long, global = true, value_delimiter = ',')]
    rate: Vec<f64>,
    /// `points` over [0, 2] or `min:max:points`
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true, overrides_with = "no_split")]
    split: bool,
    #[arg(long, global = true, overrides_with = "split")]
    no_split: bool,
    #[arg(long, global = true)]
    split_step: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output formats, comma separated (csv, json, svg, text)
    #[arg(long, global = true, value_delimiter = ',')]
    format: Vec<String>,
    /// Random directions per allocation for the lower bound
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    tie_tol: Option<f64>,
    /// Relay power weights `mu1,mu2`
    #[arg(long, global = true, value_delimiter = ',')]
    mu: Vec<f64>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// List the schemes of one allocation or of all allocations
    Enumerate {
        /// Allocation such as `1|23`
        #[arg(long)]
        alloc: Option<String>,
        /// Allow any nonempty subset of the knowing relays to transmit
        #[arg(long)]
        any_tx: bool,
        /// Only maximal superposition orders
        #[arg(long)]
        maximal: bool,
        /// Keep mirror images
        #[arg(long)]
        no_dedup: bool,
        /// Print only the number of schemes
        #[arg(long)]
        count: bool,
    },
    /// Optimize one scheme, or find the best scheme, at a single channel point
    Optimize {
        /// Scheme in text form; the best scheme is searched when omitted
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Phase map over an (a, b) grid
    Sweep,
    /// Lower bound against the best schemes at one channel point
    Bound,
    /// Split and no-split sweeps side by side, with their difference surface
    Compare,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct Config {
    a: Option<f64>,
    b: Option<f64>,
    rate: Option<OneOrMany<f64>>,
    grid: Option<String>,
    split: Option<bool>,
    split_step: Option<f64>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    format: Option<OneOrMany<String>>,
    samples: Option<usize>,
    tie_tol: Option<f64>,
    mu: Option<[f64; 2]>,
    channel: Option<ChannelSpec>,
    scheme: Option<String>,
}

/// Flags merged over the config file.
struct Settings {
    a: Option<f64>,
    b: Option<f64>,
    rates: Vec<f64>,
    grid: Option<String>,
    split: bool,
    split_step: f64,
    seed: u64,
    out_dir: Option<PathBuf>,
    formats: Vec<String>,
    samples: usize,
    tie_tol: f64,
    weights: EnergyWeights,
    channel: Option<ChannelSpec>,
    scheme: Option<String>,
}

impl Settings {
    fn resolve(c: Common, scheme: Option<String>) -> relaynet::Result<Self> {
        let cfg: Config = match &c.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            None => Config::default(),
        };
        let split = if c.split {
            true
        } else if c.no_split {
            false
        } else {
            cfg.split.unwrap_or(false)
        };
        let mu = if c.mu.is_empty() { cfg.mu.unwrap_or([1.0, 1.0]).to_vec() } else { c.mu };
        let mu: [f64; 2] = mu.try_into().map_err(|_| Error::Config("--mu takes exactly two weights".into()))?;
        Ok(Settings {
            a: c.a.or(cfg.a),
            b: c.b.or(cfg.b),
            rates: if c.rate.is_empty() { cfg.rate.map(OneOrMany::into_vec).unwrap_or_default() } else { c.rate },
            grid: c.grid.or(cfg.grid),
            split,
            split_step: c.split_step.or(cfg.split_step).unwrap_or(0.05),
            seed: c.seed.or(cfg.seed).unwrap_or(1),
            out_dir: c.out_dir.or(cfg.out_dir),
            formats: if c.format.is_empty() { cfg.format.map(OneOrMany::into_vec).unwrap_or_default() } else { c.format },
            samples: c.samples.or(cfg.samples).unwrap_or(2000),
            tie_tol: c.tie_tol.or(cfg.tie_tol).unwrap_or(0.05),
            weights: EnergyWeights::new(mu)?,
            channel: cfg.channel,
            scheme: scheme.or(cfg.scheme),
        })
    }

    fn sweep_options(&self) -> SweepOptions {
        SweepOptions { split: self.split, split_step: self.split_step, tie_tol: self.tie_tol, weights: self.weights }
    }

    fn split_search(&self) -> SplitSearch {
        SplitSearch { step: self.split_step, search: self.split }
    }

    fn grid(&self) -> relaynet::Result<Grid> {
        Grid::parse(self.grid.as_deref().unwrap_or("21"))
    }

    fn rates_or(&self, default: &[f64]) -> Vec<f64> {
        if self.rates.is_empty() {
            default.to_vec()
        } else {
            self.rates.clone()
        }
    }

    fn single_rate(&self) -> relaynet::Result<f64> {
        match self.rates.as_slice() {
            [r] => Ok(*r),
            [] => Err(Error::Config("--rate is required".into())),
            _ => Err(Error::Config("this command takes a single --rate".into())),
        }
    }

    fn point(&self) -> relaynet::Result<(f64, f64)> {
        match (self.a, self.b) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Config("--a and --b are required".into())),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn wants(&self, fmt: &str, default: bool) -> bool {
        if self.formats.is_empty() {
            default
        } else {
            self.formats.iter().any(|f| f == fmt)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let scheme = match &cli.command {
        Command::Optimize { scheme } => scheme.clone(),
        _ => None,
    };
    let result = Settings::resolve(cli.common, scheme).and_then(|s| run(cli.command, &s));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command, s: &Settings) -> relaynet::Result<ExitCode> {
    let mut out = io::stdout().lock();
    match command {
        Command::Enumerate { alloc, any_tx, maximal, no_dedup, count } => {
            let opts = EnumOptions {
                allow_splitting: s.split,
                tx_policy: if any_tx { TxPolicy::AnySubset } else { TxPolicy::Tight },
                edge_policy: if maximal { EdgePolicy::Maximal } else { EdgePolicy::All },
                ..Default::default()
            };
            let schemes = match alloc {
                Some(text) => {
                    let alloc = parse_allocation(&text)?;
                    let list = enumerate_schemes(&alloc, &opts);
                    if no_dedup {
                        list
                    } else {
                        relaynet::cgras::dedup_symmetric(list)
                    }
                }
                None => enumerate_all(&opts, !no_dedup),
            };
            if count {
                writeln!(out, "{}", schemes.len())?;
            } else if s.wants("json", false) {
                let rows: Vec<serde_json::Value> = schemes
                    .iter()
                    .map(|c| {
                        serde_json::json!({
                            "scheme": c.to_string(),
                            "key": c.canonicalize(),
                            "cooperation": c.cooperation_level(),
                        })
                    })
                    .collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?;
            } else {
                for c in &schemes {
                    writeln!(out, "{c}")?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize { .. } => {
            let rate = s.single_rate()?;
            let target = RateTarget::symmetric(rate)?;
            let spec = match (&s.channel, s.a, s.b) {
                (_, Some(a), Some(b)) => ChannelSpec::Symmetric { a, b },
                (Some(spec), _, _) => spec.clone(),
                _ => return Err(Error::Config("give --a and --b, or a channel in the config file".into())),
            };
            let (ch, rc) = spec.resolve()?;
            let split = s.split_search();
            let solution = match &s.scheme {
                Some(text) => {
                    let c: Cgras = text.parse()?;
                    let violations = c.validate();
                    if !violations.is_empty() {
                        let msgs: Vec<String> = violations.iter().map(ToString::to_string).collect();
                        return Err(Error::InvalidScheme(msgs.join("; ")));
                    }
                    optimize_scheme(&c, &ch, &rc, &target, &s.weights, &split)?
                }
                None => best_scheme(&spec, &ch, &rc, &target, s)?,
            };
            if s.wants("json", false) {
                writeln!(out, "{}", solution.to_json()?)?;
            } else {
                print_solution(&mut out, &solution)?;
            }
            Ok(if solution.feasible { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Sweep => {
            let grid = s.grid()?;
            let formats = sweep_formats(s)?;
            let lib = SchemeLibrary::new(s.split);
            for rate in s.rates_or(&[0.1, 0.5, 1.0, 2.0]) {
                let pm = sweep::run_sweep_with(&lib, &grid, rate, &s.sweep_options())?;
                report_errors(&pm);
                for path in sweep::emit(&pm, &formats, &s.out_dir())? {
                    writeln!(out, "{}", path.display())?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound => {
            let (a, b) = s.point()?;
            let rates = s.rates_or(&[1.0, 2.0, 3.0]);
            let cfg = BoundConfig { samples: s.samples, seed: s.seed, weights: s.weights, ..Default::default() };
            let rows = sweep::bound_trace(a, b, &rates, &s.sweep_options(), &cfg)?;
            match &s.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let path = dir.join(format!("bound_a{a}_b{b}.csv"));
                    sweep::write_bound_trace_csv(&rows, fs::File::create(&path)?)?;
                    writeln!(out, "{}", path.display())?;
                }
                None => sweep::write_bound_trace_csv(&rows, &mut out)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare => {
            let grid = s.grid()?;
            let formats = sweep_formats(s)?;
            let dir = s.out_dir();
            let plain = SchemeLibrary::new(false);
            let split = SchemeLibrary::new(true);
            for rate in s.rates_or(&[2.0]) {
                let pn = sweep::run_sweep_with(&plain, &grid, rate, &SweepOptions { split: false, ..s.sweep_options() })?;
                let ps = sweep::run_sweep_with(&split, &grid, rate, &SweepOptions { split: true, ..s.sweep_options() })?;
                report_errors(&pn);
                report_errors(&ps);
                let mut paths = sweep::emit(&pn, &formats, &dir)?;
                paths.extend(sweep::emit(&ps, &formats, &dir)?);
                let rows = sweep::difference_surface(&pn, &ps)?;
                let path = dir.join(format!("difference_r{rate}.csv"));
                sweep::write_difference_csv(&rows, fs::File::create(&path)?)?;
                paths.push(path);
                for p in paths {
                    writeln!(out, "{}", p.display())?;
                }
                let best = rows.iter().filter(|r| r.gain.is_finite()).map(|r| r.gain).fold(0.0, f64::max);
                writeln!(out, "rate {rate}: largest energy saving from splitting {best}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_allocation(text: &str) -> relaynet::Result<MessageAllocation> {
    let bad = || Error::Config(format!("allocation `{text}` must look like `1|23`"));
    let (r1, r2) = text.split_once('|').ok_or_else(bad)?;
    let r1 = NodeSet::parse_digits(r1.trim()).ok_or_else(bad)?;
    let r2 = NodeSet::parse_digits(r2.trim()).ok_or_else(bad)?;
    MessageAllocation::new(r1, r2)
}

fn sweep_formats(s: &Settings) -> relaynet::Result<Vec<Format>> {
    if s.formats.is_empty() {
        return Ok(vec![Format::Csv, Format::Json, Format::Svg]);
    }
    s.formats.iter().map(|f| f.parse()).collect()
}

fn report_errors(pm: &sweep::PhaseMap) {
    for c in pm.cells.iter().filter(|c| !c.errors.is_empty()) {
        log::warn!("cell a={} b={}: {}", c.a, c.b, c.errors.join("; "));
    }
}

/// Best scheme at one point. Symmetric channels use the deduplicated sweep
/// library; explicit channels try every scheme.
fn best_scheme(
    spec: &ChannelSpec,
    ch: &relaynet::channel::AccessChannel,
    rc: &relaynet::channel::RelayChannel,
    target: &RateTarget,
    s: &Settings,
) -> relaynet::Result<PowerSolution> {
    let split = s.split_search();
    if let ChannelSpec::Symmetric { a, b } = *spec {
        if target.sum() > 0.0 {
            let lib = SchemeLibrary::new(s.split);
            let cell = Sweeper::new(&lib, target.rate(0), s.sweep_options())?.evaluate_cell(a, b)?;
            return match cell.winner {
                Some(key) => optimize_scheme(&key.parse()?, ch, rc, target, &s.weights, &split),
                None => Ok(PowerSolution::infeasible(0)),
            };
        }
    }
    let mut best: Option<PowerSolution> = None;
    for c in enumerate_all(&EnumOptions::for_sweep(s.split), false) {
        let ps = optimize_scheme(&c, ch, rc, target, &s.weights, &split)?;
        if ps.feasible && best.as_ref().is_none_or(|b| ps.energy < b.energy) {
            best = Some(ps);
        }
    }
    Ok(best.unwrap_or_else(|| PowerSolution::infeasible(0)))
}

fn print_solution(out: &mut impl Write, ps: &PowerSolution) -> io::Result<()> {
    writeln!(out, "scheme    {}", ps.scheme.as_deref().unwrap_or("-"))?;
    writeln!(out, "key       {}", ps.key.as_deref().unwrap_or("-"))?;
    writeln!(out, "feasible  {}", if ps.feasible { "yes" } else { "no" })?;
    if !ps.feasible {
        return Ok(());
    }
    writeln!(out, "E_TOT     {}", ps.energy)?;
    writeln!(out, "P_BS      {}", ps.bs_power)?;
    writeln!(out, "P_RN      {} {}", ps.relay_powers[0], ps.relay_powers[1])?;
    let powers: Vec<String> = ps.codeword_powers.iter().map(|p| p.to_string()).collect();
    writeln!(out, "codewords {}", powers.join(" "))?;
    let shares: Vec<String> = ps.shares.iter().map(|p| p.to_string()).collect();
    writeln!(out, "shares    {}", shares.join(" "))?;
    writeln!(out, "binding   {}", ps.binding.join(", "))?;
    Ok(())
}

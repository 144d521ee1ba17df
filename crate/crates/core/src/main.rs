use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use vrlat::harness::output::write_trace;
use vrlat::harness::sweep::swap_communities;
use vrlat::harness::{
    emit_results, emit_trace, run_sweep, symmetric_configuration, write_records, Format, RunConfig, Variant,
};
use vrlat::latency::end_to_end_report;
use vrlat::model::{types, UserConfiguration};
use vrlat::optimizer::{equal_baseline, optimize_downlink, optimize_uplink, StepSize};
use vrlat::Error;

#[derive(Parser)]
#[command(name = "vrlat", version, about = "End-to-end latency and bandwidth allocation for two-cell VR social networks")]
struct Cli {
    /// TOML file with [scenario], [optimizer] and [sweep] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Seed for evaluation and optimizer draws; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo samples for latency evaluation.
    #[arg(long)]
    samples: Option<usize>,
    /// Scenario draws T in the optimizer's sample average.
    #[arg(long = "saa-t")]
    saa_t: Option<usize>,
    /// Subgradient iterations K.
    #[arg(long = "iters-k")]
    iters_k: Option<usize>,
    /// Fixed subgradient step size beta.
    #[arg(long, conflicts_with = "step_scale")]
    step: Option<f64>,
    /// Step multiplier c in beta = c (W_up/N)^3 / (a N).
    #[arg(long = "step-scale")]
    step_scale: Option<f64>,
}

#[derive(Args, Clone)]
struct Target {
    /// Cross-type ratio of the symmetric layout.
    #[arg(long, conflicts_with = "counts")]
    rho: Option<f64>,
    /// Explicit counts N11,N12,N21,N22.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    counts: Option<Vec<u32>>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one configuration and print its latency report as JSON.
    Evaluate {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "equal-both")]
        variant: Variant,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Optimize the uplink allocation and print allocations plus trace.
    Optimize {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the cross-type ratio over several allocation variants.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated cross-type ratios.
        #[arg(long = "rho-grid", value_delimiter = ',')]
        rho_grid: Option<Vec<f64>>,
        /// Comma-separated variants.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<Variant>>,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add a wall-clock timestamp to every record.
        #[arg(long)]
        stamp: bool,
    },
}

fn load_config(path: &Option<PathBuf>, o: &Overrides) -> vrlat::Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = o.seed {
        cfg.sweep.eval_seed = seed;
        cfg.optimizer.seed = seed;
    }
    if let Some(s) = o.samples {
        cfg.sweep.eval_samples = s;
    }
    if let Some(t) = o.saa_t {
        cfg.optimizer.saa_samples = t;
    }
    if let Some(k) = o.iters_k {
        cfg.optimizer.iterations = k;
    }
    if let Some(beta) = o.step {
        cfg.optimizer.step_size = Some(beta);
    }
    if let Some(c) = o.step_scale {
        cfg.optimizer.step_size = None;
        cfg.optimizer.step_scale = c;
    }
    Ok(cfg)
}

fn resolve_users(target: &Target, total: u32) -> vrlat::Result<UserConfiguration> {
    match (&target.counts, target.rho) {
        (Some(c), _) => Ok(UserConfiguration::from_flat([c[0], c[1], c[2], c[3]])),
        (None, Some(rho)) => symmetric_configuration(total, rho),
        (None, None) => symmetric_configuration(total, 0.0),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Evaluate {
            target,
            variant,
            overrides,
        } => {
            let cfg = load_config(&cli.config, &overrides)?;
            let scenario = cfg.scenario();
            let mut users = resolve_users(&target, scenario.total_users)?;
            if variant == Variant::SwappedServers {
                users = swap_communities(&users);
            }
            let mut alloc = equal_baseline(&users, &scenario);
            if matches!(variant, Variant::OptimalUpOnly | Variant::OptimalBoth) {
                alloc.up = optimize_uplink(&scenario, &users, &cfg.optimizer_settings())?.0;
            }
            if matches!(variant, Variant::OptimalDnOnly | Variant::OptimalBoth) {
                alloc.dn = optimize_downlink(&users, scenario.bandwidth_dn);
            }
            let report = end_to_end_report(&scenario, &users, &alloc, cfg.sweep.eval_samples, cfg.sweep.eval_seed)?;
            let out = serde_json::json!({
                "variant": variant,
                "counts": users.flat(),
                "allocation": alloc,
                "report": report,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Optimize {
            target,
            overrides,
            format,
            out,
        } => {
            let cfg = load_config(&cli.config, &overrides)?;
            let scenario = cfg.scenario();
            let users = resolve_users(&target, scenario.total_users)?;
            let settings = cfg.optimizer_settings();
            let (up, trace) = optimize_uplink(&scenario, &users, &settings)?;
            let dn = optimize_downlink(&users, scenario.bandwidth_dn);
            let step = match settings.step {
                StepSize::Absolute(_) => "fixed",
                StepSize::Scaled(_) => "scaled",
            };
            eprintln!(
                "counts {:?}, step {} ({step}), best iterate {} of {}",
                users.flat(),
                trace.step_size,
                trace.best_index,
                trace.iterates.len() - 1
            );
            for (i, j) in types() {
                if users.count(i, j) > 0 {
                    eprintln!(
                        "  N{}{}: w_up = {:.6e} Hz, w_dn = {:.6e} Hz",
                        i + 1,
                        j + 1,
                        up[i][j].unwrap_or(0.0),
                        dn[i][j].unwrap_or(0.0)
                    );
                }
            }
            match out {
                Some(path) => emit_trace(&trace, format, &path)?,
                None => write_trace(&trace, format, std::io::stdout().lock())?,
            }
        }
        Command::Sweep {
            overrides,
            rho_grid,
            variants,
            format,
            out,
            stamp,
        } => {
            let mut cfg = load_config(&cli.config, &overrides)?;
            if let Some(g) = rho_grid {
                cfg.sweep.rho_grid = g;
            }
            if let Some(v) = variants {
                cfg.sweep.variants = v;
            }
            let mut spec = cfg.sweep_spec();
            spec.stamp = stamp;
            let records = run_sweep(&cfg.scenario(), &spec)?;
            match out {
                Some(path) => emit_results(&records, format, &path)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    write_records(&records, format, &mut stdout)?;
                    stdout.flush()?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.downcast_ref::<Error>().is_some_and(Error::is_validation);
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}

//! Command-line toolkit for slider-model point-feature label placement:
//! dataset generation, policy training, evaluation, method comparison,
//! SVG rendering, and the predefined ablation grids.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pointlabel_core::baselines::{pbl_solve, PblConfig, PblMode};
use pointlabel_core::benchmark::{
    completeness, evaluate, generate_dataset, summarize, DatasetInstance, DatasetSpec, Method,
    DEFAULT_DATASET_SEED,
};
use pointlabel_core::env::EnvConfig;
use pointlabel_core::infer::{policy_solve, random_policy_solve};
use pointlabel_core::io::{
    load_checkpoint, load_instance, load_layout, save_checkpoint, save_instance, save_layout,
    write_jsonl, CheckpointHeader,
};
use pointlabel_core::net::{NetConfig, PolicyNet};
use pointlabel_core::obs::ObsConfig;
use pointlabel_core::trainer::{train, TrainConfig};
use pointlabel_core::Real;

/// Environment variable overriding the worker-thread count.
const WORKERS_ENV: &str = "POINTLABEL_WORKERS";

#[derive(Parser)]
#[command(
    name = "pointlabel",
    version,
    about = "Point-feature label placement: learned policies, greedy baselines, benchmark tooling"
)]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Trained policy from a checkpoint.
    Rfl,
    /// Untrained policy with fresh random weights.
    RflRandom,
    /// Greedy labeling, adjacent candidates only.
    PblA,
    /// Greedy labeling with distant spiral fallback.
    PblAd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridArg {
    /// Network architecture variants.
    Table1,
    /// Observation content sets.
    Table2,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the benchmark dataset, one JSON instance per file.
    GenData {
        /// Dataset seed (defaults to the library's standard benchmark seed).
        #[arg(long)]
        seed: Option<u64>,
        /// JSON file overriding any subset of the default configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one dataset part (e.g. compact or volume).
        #[arg(long)]
        part: Option<String>,
    },
    /// Train a policy; writes policy.ckpt and stats.jsonl into --out.
    Train {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one method over a dataset directory; writes records JSONL.
    Eval {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output records file (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Dataset directory produced by gen-data.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Checkpoint file (required for method rfl).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        part: Option<String>,
        /// Stochastic runs per instance (deterministic methods always run once).
        #[arg(long)]
        runs: Option<usize>,
        /// Step budget per episode.
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Evaluate several methods and write records plus per-count summaries.
    Compare {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for records.jsonl and summary.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated method list.
        #[arg(long, default_value = "rfl-random,pbl-a,pbl-ad")]
        methods: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        part: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Render an instance with a layout (from file or solved here) to SVG.
    Render {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output SVG file.
        #[arg(long)]
        out: PathBuf,
        /// Instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Pre-computed layout JSON file (alternative to --method).
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Solve the instance with this method before rendering.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<u32>,
        /// Also write the solved layout as JSON next to the SVG.
        #[arg(long)]
        save_layout: bool,
    },
    /// Print or write the predefined ablation configuration grids.
    Ablate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (omit to print to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Which grid: table1 (architectures) or table2 (observation sets).
        #[arg(long, value_enum)]
        grid: GridArg,
        /// Comma-separated set numbers (table2 only; default: all).
        #[arg(long)]
        sets: Option<String>,
    },
}

/// Evaluation knobs not covered by the component configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct EvalSettings {
    runs: usize,
    horizon: u32,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { runs: 10, horizon: 500 }
    }
}

/// The complete tool configuration. A `--config` file may override any
/// subset of fields; everything absent keeps its default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct AppConfig {
    env: EnvConfig<Real>,
    obs: ObsConfig<Real>,
    net: NetConfig<Real>,
    train: TrainConfig<Real>,
    dataset: DatasetSpec<Real>,
    pbl: PblConfig,
    eval: EvalSettings,
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        None => Ok(AppConfig::default()),
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

/// Applies the worker-count override from the environment, if any.
fn init_workers() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(None) };
    let n: usize = raw
        .parse()
        .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        bail!("{WORKERS_ENV} must be positive");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("initializing worker pool")?;
    Ok(Some(n))
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let workers = init_workers()?;
    let quiet = cli.quiet;
    let say = |msg: String| {
        if !quiet {
            println!("{msg}");
        }
    };
    if let Some(n) = workers {
        say(format!("worker threads: {n}"));
    }
    match cli.command {
        Command::GenData { seed, config, out, part } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(DEFAULT_DATASET_SEED);
            let mut data = generate_dataset(&cfg.dataset, seed);
            if let Some(part) = &part {
                data.retain(|d| &d.part == part);
                if data.is_empty() {
                    bail!("dataset part {part:?} matches no instances");
                }
            }
            fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let anchors: usize = data.iter().map(|d| d.count).sum();
            for item in &data {
                save_instance(&out.join(format!("{}.json", item.name)), &item.instance)?;
            }
            say(format!(
                "wrote {} instances ({anchors} anchors) to {}",
                data.len(),
                out.display()
            ));
        }
        Command::Train { seed, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let mut tcfg = cfg.train.clone();
            if let Some(seed) = seed {
                tcfg.seed = seed;
            }
            if tcfg.workers == 0 {
                if let Some(n) = workers {
                    tcfg.workers = n;
                }
            }
            fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let mut stats_rows = Vec::new();
            let result = train(&cfg.env, &cfg.obs, cfg.net.clone(), &tcfg, |stats, _| {
                say(format!(
                    "iter {:>4}  reward {:>9.4}  eplen {:>6.1}  solved {:>5.1}%  kl {:.4}  clip {:.2}",
                    stats.iteration,
                    stats.reward_mean,
                    stats.ep_len_mean,
                    100.0 * stats.solve_rate,
                    stats.approx_kl,
                    stats.clip_fraction,
                ));
                stats_rows.push(stats.clone());
            })?;
            write_jsonl(&out.join("stats.jsonl"), &stats_rows)?;
            let header = CheckpointHeader {
                net: cfg.net.clone(),
                obs: cfg.obs.clone(),
                env: cfg.env.clone(),
                manifest: result.net.layout().tensors.clone(),
                iteration: tcfg.iterations,
                seed: tcfg.seed,
            };
            let ckpt = out.join("policy.ckpt");
            save_checkpoint(&ckpt, &header, &result.params)?;
            say(format!("checkpoint written to {}", ckpt.display()));
        }
        Command::Eval { seed, config, out, data, method, checkpoint, part, runs, horizon } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(0);
            let dataset = load_dataset(&data, part.as_deref())?;
            let (m, obs_cfg) = build_method(method, checkpoint.as_deref(), &cfg)?;
            let runs = runs.unwrap_or(cfg.eval.runs);
            let horizon = horizon.unwrap_or(cfg.eval.horizon);
            let records = evaluate(&cfg.env, &obs_cfg, &dataset, &m, runs, horizon, seed)?;
            if let Some(dir) = out.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            write_jsonl(&out, &records)?;
            say(format!(
                "{}: {} records, completeness {:.1}% -> {}",
                m.name(),
                records.len(),
                completeness(&records)?,
                out.display()
            ));
        }
        Command::Compare { seed, config, out, data, methods, checkpoint, part, runs, horizon } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(0);
            let dataset = load_dataset(&data, part.as_deref())?;
            let runs = runs.unwrap_or(cfg.eval.runs);
            let horizon = horizon.unwrap_or(cfg.eval.horizon);
            fs::create_dir_all(&out)?;
            let mut all_records = Vec::new();
            for name in methods.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let arg = MethodArg::from_str(name, true)
                    .map_err(|_| anyhow!("unknown method {name:?}"))?;
                let (m, obs_cfg) = build_method(arg, checkpoint.as_deref(), &cfg)?;
                let records = evaluate(&cfg.env, &obs_cfg, &dataset, &m, runs, horizon, seed)?;
                say(format!(
                    "{}: {} records, completeness {:.1}%",
                    m.name(),
                    records.len(),
                    completeness(&records)?
                ));
                all_records.extend(records);
            }
            let summary = summarize(&all_records)?;
            write_jsonl(&out.join("records.jsonl"), &all_records)?;
            fs::write(out.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
            if !quiet {
                println!(
                    "{:<12} {:<8} {:>5} {:>8} {:>10} {:>10}",
                    "method", "part", "count", "complete", "med ms", "med steps"
                );
                for s in &summary {
                    println!(
                        "{:<12} {:<8} {:>5} {:>7.1}% {:>10.3} {:>10.1}",
                        s.method, s.part, s.count, s.completeness, s.time_ms.median, s.steps.median
                    );
                }
            }
            say(format!("summary written to {}", out.join("summary.json").display()));
        }
        Command::Render {
            seed,
            config,
            out,
            instance,
            layout,
            method,
            checkpoint,
            horizon,
            save_layout: keep_layout,
        } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(0);
            let inst = load_instance::<Real>(&instance)?;
            let layout = match (layout, method) {
                (Some(path), None) => load_layout(&path)?,
                (None, Some(arg)) => {
                    let horizon = horizon.unwrap_or(cfg.eval.horizon);
                    solve_one(arg, checkpoint.as_deref(), &cfg, &inst, horizon, seed)?
                }
                (None, None) => bail!("provide either --layout or --method"),
                (Some(_), Some(_)) => bail!("--layout and --method are mutually exclusive"),
            };
            let svg = pointlabel_core::render::render_svg(&inst, &layout)?;
            if let Some(dir) = out.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
            if keep_layout {
                save_layout(&out.with_extension("layout.json"), &layout)?;
            }
            say(format!(
                "rendered {} anchors ({} placed) to {}",
                inst.len(),
                layout.placed_count(),
                out.display()
            ));
        }
        Command::Ablate { seed: _, config, out, grid, sets } => {
            let cfg = load_config(config.as_deref())?;
            let rows = ablation_rows(grid, sets.as_deref(), &cfg)?;
            match out {
                None => {
                    for row in &rows {
                        println!("{}", serde_json::to_string(row)?);
                    }
                }
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    for row in &rows {
                        let name = row["name"].as_str().unwrap_or("row");
                        fs::write(
                            dir.join(format!("{name}.json")),
                            serde_json::to_vec_pretty(row)?,
                        )?;
                    }
                    say(format!("wrote {} grid entries to {}", rows.len(), dir.display()));
                }
            }
        }
    }
    Ok(())
}

/// Reads a dataset directory back into memory, ordered by file name.
fn load_dataset(dir: &Path, part: Option<&str>) -> Result<Vec<DatasetInstance<Real>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading dataset directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| anyhow!("unreadable file name {}", path.display()))?;
        let mut pieces = stem.rsplitn(3, '_');
        let index: usize = pieces
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| anyhow!("file name {stem:?} is not {{part}}_{{count}}_{{index}}"))?;
        let count: usize = pieces
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| anyhow!("file name {stem:?} is not {{part}}_{{count}}_{{index}}"))?;
        let part_name = pieces
            .next()
            .ok_or_else(|| anyhow!("file name {stem:?} is not {{part}}_{{count}}_{{index}}"))?;
        if part.is_some_and(|p| p != part_name) {
            continue;
        }
        let instance = load_instance::<Real>(&path)?;
        if instance.len() != count {
            bail!(
                "{} declares {count} anchors in its name but contains {}",
                path.display(),
                instance.len()
            );
        }
        out.push(DatasetInstance {
            name: stem.to_string(),
            part: part_name.to_string(),
            count,
            index,
            instance,
        });
    }
    if out.is_empty() {
        bail!("no instances found in {}", dir.display());
    }
    Ok(out)
}

/// Builds a benchmark method plus the observation configuration it should
/// be evaluated with (the checkpoint's own for trained policies).
fn build_method(
    arg: MethodArg,
    checkpoint: Option<&Path>,
    cfg: &AppConfig,
) -> Result<(Method<Real>, ObsConfig<Real>)> {
    match arg {
        MethodArg::Rfl => {
            let path = checkpoint.ok_or_else(|| anyhow!("method rfl needs --checkpoint"))?;
            let (header, params) = load_checkpoint::<Real>(path)?;
            header.ensure_obs_len(cfg.obs.obs_len())?;
            let obs = header.obs.clone();
            Ok((Method::Trained { net_cfg: header.net, params }, obs))
        }
        MethodArg::RflRandom => {
            Ok((Method::Random { net_cfg: cfg.net.clone() }, cfg.obs.clone()))
        }
        MethodArg::PblA => Ok((
            Method::Pbl { config: PblConfig { mode: PblMode::Adjacent, ..cfg.pbl.clone() } },
            cfg.obs.clone(),
        )),
        MethodArg::PblAd => Ok((
            Method::Pbl {
                config: PblConfig { mode: PblMode::AdjacentDistant, ..cfg.pbl.clone() },
            },
            cfg.obs.clone(),
        )),
    }
}

/// Solves a single instance with the chosen method (used by `render`).
fn solve_one(
    arg: MethodArg,
    checkpoint: Option<&Path>,
    cfg: &AppConfig,
    inst: &pointlabel_core::env::Instance<Real>,
    horizon: u32,
    seed: u64,
) -> Result<pointlabel_core::layout::Layout<Real>> {
    Ok(match arg {
        MethodArg::Rfl => {
            let path = checkpoint.ok_or_else(|| anyhow!("method rfl needs --checkpoint"))?;
            let (header, params) = load_checkpoint::<Real>(path)?;
            header.ensure_obs_len(cfg.obs.obs_len())?;
            let net = header.build_net()?;
            policy_solve(&cfg.env, &header.obs, &net, &params, inst, horizon, seed)?
        }
        MethodArg::RflRandom => {
            random_policy_solve(&cfg.env, &cfg.obs, &cfg.net, inst, horizon, seed)?
        }
        MethodArg::PblA => pbl_solve(
            inst,
            &PblConfig { mode: PblMode::Adjacent, ..cfg.pbl.clone() },
        )?,
        MethodArg::PblAd => pbl_solve(
            inst,
            &PblConfig { mode: PblMode::AdjacentDistant, ..cfg.pbl.clone() },
        )?,
    })
}

/// Materializes one ablation grid as JSON rows.
fn ablation_rows(
    grid: GridArg,
    sets: Option<&str>,
    cfg: &AppConfig,
) -> Result<Vec<serde_json::Value>> {
    use pointlabel_core::ablate;
    let mut rows = Vec::new();
    match grid {
        GridArg::Table1 => {
            for (name, net_cfg) in ablate::architecture_grid::<Real>() {
                let net = PolicyNet::new(net_cfg.clone(), &cfg.obs)?;
                rows.push(serde_json::json!({
                    "name": format!("variant_{name}"),
                    "variant": name,
                    "param_count": net.param_count(),
                    "config": net_cfg,
                }));
            }
        }
        GridArg::Table2 => {
            let selected: Vec<usize> = match sets {
                None => (1..=ablate::OBSERVATION_SETS).collect(),
                Some(raw) => raw
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().with_context(|| format!("bad set number {s:?}")))
                    .collect::<Result<_>>()?,
            };
            let explicit = sets.is_some();
            for set in selected {
                let label = ablate::observation_set_label(set);
                match ablate::observation_set::<Real>(set) {
                    Ok(obs) => rows.push(serde_json::json!({
                        "name": format!("set_{set:02}"),
                        "set": set,
                        "label": label,
                        "observation_length": obs.obs_len(),
                        "config": obs,
                    })),
                    Err(e) if explicit => return Err(e.into()),
                    Err(e) => rows.push(serde_json::json!({
                        "name": format!("set_{set:02}"),
                        "set": set,
                        "label": label,
                        "unsupported": e.to_string(),
                    })),
                }
            }
        }
    }
    Ok(rows)
}

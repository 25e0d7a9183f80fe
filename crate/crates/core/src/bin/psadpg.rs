use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use psadpg::envs::Environment;
use psadpg::harness::{
    aggregate_csv, aggregate_curves, emit_plot_data, evaluate, gradcheck_csv, gradcheck_suite, load_config,
    make_env, read_curve, rng_stream, run_training, CurvePoint, EnvChoice, RunConfig, TrainingObserver,
    CHECKPOINT_FILE,
};
use psadpg::nn::gradcheck::GradCheckConfig;
use psadpg::theorem::{enumerate_simplex_grid, verify_theorem1, TabularMdp};
use psadpg::{Error, Result};

#[derive(Parser)]
#[command(name = "psadpg", version, about = "Probability surrogate action DPG, a DQN baseline, and a tabular optimality checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` override, e.g. `hyperparams.learning_rate=0.001`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(out) = &self.out {
            overrides.push(format!("output_path={}", toml_string(&out.display().to_string())));
        }
        load_config(self.config.as_deref(), &overrides)
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent; writes curve.csv, checkpoint.bin and metadata.json.
    Train {
        #[command(flatten)]
        common: Common,
        /// Print a progress line every N episodes (0 = silent).
        #[arg(long, default_value_t = 50)]
        progress: usize,
    },
    /// Run a saved policy without learning.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to load; defaults to <out>/checkpoint.bin.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare task and probability-surrogate optimal values on tabular MDPs.
    VerifyTheorem {
        #[command(flatten)]
        common: Common,
        /// MDP file; otherwise the config's tabular env, otherwise random MDPs.
        #[arg(long)]
        mdp: Option<PathBuf>,
        /// Number of random MDPs when no file is given.
        #[arg(long, default_value_t = 20)]
        random: usize,
        #[arg(long, default_value_t = 5)]
        max_states: usize,
        #[arg(long, default_value_t = 4)]
        max_actions: usize,
        /// Simplex grid resolution.
        #[arg(short, long, default_value_t = 8)]
        k: usize,
        /// Value-iteration tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Largest acceptable value gap.
        #[arg(long, default_value_t = 1e-8)]
        gap_tol: f64,
    },
    /// Check reverse-mode gradients of every network against finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        coordinates: usize,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        #[arg(long, default_value_t = 1e-4)]
        max_rel_error: f64,
    },
    /// Mean and range of mean100 across several curve files.
    Aggregate {
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        curves: Vec<PathBuf>,
    },
    /// Two-column plot data, one block per `label=curve.csv`.
    PlotData {
        #[arg(long)]
        out: PathBuf,
        series: Vec<String>,
    },
}

struct Progress {
    every: usize,
}

impl TrainingObserver for Progress {
    fn on_episode(&mut self, p: &CurvePoint) {
        if self.every > 0 && p.episode.is_multiple_of(self.every) {
            eprintln!("episode {:>6}  reward {:>9.2}  mean100 {:>9.3}", p.episode, p.reward, p.mean100);
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, progress } => {
            let cfg = common.config()?;
            let (outcome, art) = run_training(&cfg, &mut Progress { every: progress })?;
            let last = outcome.curve.last().expect("at least one episode");
            println!(
                "{} on {}: {} episodes, {} steps, final mean100 {:.3}",
                cfg.agent.name(),
                cfg.env,
                cfg.episodes,
                outcome.total_steps,
                last.mean100
            );
            println!("wrote {}, {}, {}", art.curve.display(), art.checkpoint.display(), art.metadata.display());
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.config()?;
            let path = checkpoint.unwrap_or_else(|| cfg.output_path.join(CHECKPOINT_FILE));
            let returns = evaluate(&cfg, &path)?;
            let mean = returns.iter().sum::<f64>() / returns.len() as f64;
            let min = returns.iter().copied().fold(f64::INFINITY, f64::min);
            let max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            println!("{} episodes: mean return {mean:.3} (min {min}, max {max})", returns.len());
        }
        Command::VerifyTheorem {
            common,
            mdp,
            random,
            max_states,
            max_actions,
            k,
            tol,
            gap_tol,
        } => {
            let cfg = common.config()?;
            let file = mdp.or_else(|| match cfg.env_choice() {
                Ok(EnvChoice::Tabular(p)) => Some(p),
                _ => None,
            });
            let mdps: Vec<(String, TabularMdp)> = match file {
                Some(p) => vec![(p.display().to_string(), TabularMdp::load(&p)?)],
                None => {
                    if max_states == 0 || max_actions == 0 {
                        return Err(Error::Config("--max-states and --max-actions must be positive".into()));
                    }
                    let mut rng = rng_stream(cfg.seed, "theorem");
                    (0..random)
                        .map(|i| {
                            let ns = rng.gen_range(1..=max_states);
                            let na = rng.gen_range(1..=max_actions);
                            Ok((format!("random-{i}"), TabularMdp::random(ns, na, 0.9, &mut rng)?))
                        })
                        .collect::<Result<_>>()?
                }
            };
            let mut csv = String::new();
            let mut all_hold = true;
            for (name, m) in &mdps {
                let grid = enumerate_simplex_grid(m.n_actions(), k)?;
                let report = verify_theorem1(m, &grid, tol)?;
                let holds = report.holds(gap_tol);
                all_hold &= holds;
                println!("== {name}: {} states, {} actions, holds = {holds}", m.n_states(), m.n_actions());
                print!("{}", report.to_table(&grid));
                let body = report.to_csv(&grid);
                let mut lines = body.lines();
                let header = lines.next().expect("csv header");
                if csv.is_empty() {
                    csv = format!("mdp,{header}\n");
                }
                for l in lines {
                    csv.push_str(&format!("{name},{l}\n"));
                }
            }
            let path = cfg.output_path.join("theorem.csv");
            write(&path, &csv)?;
            println!("wrote {}", path.display());
            if !all_hold {
                return Err(Error::State(format!("optimality check failed with gap tolerance {gap_tol}")));
            }
        }
        Command::Gradcheck {
            common,
            coordinates,
            batch,
            max_rel_error,
        } => {
            let cfg = common.config()?;
            let env: Box<dyn Environment> = make_env(&cfg, rng_stream(cfg.seed, "env"))?;
            let mut rng = ChaCha20Rng::from_rng(rng_stream(cfg.seed, "gradcheck")).expect("chacha seeding");
            let gc = GradCheckConfig {
                coordinates,
                ..GradCheckConfig::default()
            };
            let rows = gradcheck_suite(env.obs_dim(), env.action_count(), &cfg.hyperparams, &gc, batch.max(1), &mut rng)?;
            let csv = gradcheck_csv(&rows);
            print!("{csv}");
            let path = cfg.output_path.join("gradcheck.csv");
            write(&path, &csv)?;
            if let Some(bad) = rows.iter().find(|r| r.report.max_rel_error > max_rel_error) {
                return Err(Error::State(format!(
                    "{} gradient relative error {:e} exceeds {max_rel_error:e}",
                    bad.name, bad.report.max_rel_error
                )));
            }
        }
        Command::Aggregate { out, curves } => {
            if curves.is_empty() {
                return Err(Error::Config("no curve files given".into()));
            }
            let loaded = curves.iter().map(|p| read_curve(p)).collect::<Result<Vec<_>>>()?;
            write(&out, &aggregate_csv(&aggregate_curves(&loaded)))?;
        }
        Command::PlotData { out, series } => {
            let loaded = series
                .iter()
                .map(|s| {
                    let (label, path) = s
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("`{s}`: expected label=curve.csv")))?;
                    Ok((label.to_string(), read_curve(Path::new(path))?))
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<(&str, &[CurvePoint])> = loaded.iter().map(|(l, c)| (l.as_str(), c.as_slice())).collect();
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            emit_plot_data(&refs, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

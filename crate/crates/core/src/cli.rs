//! Command line front end. `src/bin/artic.rs` only calls [`main`].

use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bridge::{LoopbackServer, ServerOptions, PROTOCOL_VERSION};
use crate::checkpoint::Checkpoint;
use crate::env::EpisodeConfig;
use crate::error::{Error, Result};
use crate::harness::files::{read_trajectory_csv, write_embedding, write_rewards_csv, write_trajectory_csv};
use crate::harness::run::{episode_config, latest_checkpoint};
use crate::harness::{evaluate, plot, run_episode, ActionMode, Backend, RunConfig, RunPaths, TargetSpec};

#[derive(Debug, Parser)]
#[command(name = "artic", version, about = "Train and evaluate articulatory speech policies")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Run config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (train, eval, rollout) or file (export-audio,
    /// make-target, plot-data).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy on the config's target.
    Train {
        /// Continue from this checkpoint.
        #[arg(long, value_name = "CKPT", conflicts_with = "resume_latest")]
        resume: Option<PathBuf>,
        /// Continue from the newest checkpoint in the output directory.
        #[arg(long)]
        resume_latest: bool,
    },
    /// Greedy episode of a checkpoint; prints and writes the report row.
    Eval {
        #[arg(long, value_name = "CKPT")]
        checkpoint: PathBuf,
        /// Listener transcription stored with the report.
        #[arg(long, default_value = "")]
        transcription: String,
    },
    /// Sampled episode; writes trajectory, per-step rewards and audio.
    Rollout {
        #[arg(long, value_name = "CKPT")]
        checkpoint: PathBuf,
        /// Use mean actions instead of sampling.
        #[arg(long)]
        greedy: bool,
    },
    /// Render a trajectory CSV to a WAV file.
    ExportAudio {
        #[arg(long, value_name = "CSV")]
        trajectory: PathBuf,
    },
    /// Compute a target embedding; without a source flag, the config's
    /// target is used.
    MakeTarget {
        #[command(flatten)]
        source: TargetArgs,
    },
    /// Moving averages of a stats CSV.
    PlotData {
        #[arg(long, value_name = "CSV")]
        stats: PathBuf,
        /// Window in episodes.
        #[arg(long, default_value_t = 500)]
        window: u64,
    },
    /// Serve the reference backend over the bridge protocol.
    #[command(hide = true)]
    ServeReference {
        /// `host:port` to listen on; stdio when absent.
        #[arg(long)]
        listen: Option<String>,
        /// Version to announce (for testing clients).
        #[arg(long, default_value_t = PROTOCOL_VERSION)]
        protocol_version: u32,
    },
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct TargetArgs {
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long, value_name = "CSV")]
    pub trajectory: Option<PathBuf>,
    #[arg(long, value_name = "WAV")]
    pub wav: Option<PathBuf>,
    #[arg(long)]
    pub syllable: Option<String>,
}

impl TargetArgs {
    fn spec(&self) -> Option<TargetSpec> {
        if let Some(v) = &self.fixture {
            return Some(TargetSpec::Fixture(v.clone()));
        }
        if let Some(v) = &self.trajectory {
            return Some(TargetSpec::Trajectory(v.clone()));
        }
        if let Some(v) = &self.wav {
            return Some(TargetSpec::Wav(v.clone()));
        }
        self.syllable.clone().map(TargetSpec::Syllable)
    }
}

fn load_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml("")?,
    };
    if let Some(s) = g.seed {
        cfg.seed = Some(s);
        cfg.train.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn require_out<'a>(g: &'a GlobalOpts, what: &str) -> Result<&'a Path> {
    g.out.as_deref().ok_or_else(|| Error::Config(format!("{what} needs --out <PATH>")))
}

/// Episode settings for a checkpoint: target from the checkpoint, timing
/// from the config.
fn checkpoint_episode(cfg: &RunConfig, ck: &Checkpoint) -> EpisodeConfig {
    episode_config(cfg, ck.target_id.clone(), ck.target.clone())
}

fn out_dir_for(cfg: &RunConfig, g: &GlobalOpts, ckpt: &Path) -> PathBuf {
    if g.out.is_some() || g.config.is_some() {
        return cfg.output.dir.clone();
    }
    ckpt.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Train { resume, resume_latest } => {
            let cfg = load_config(g)?;
            let paths = RunPaths::new(&cfg.output.dir);
            let resume = match (resume, resume_latest) {
                (Some(p), _) => Some(p),
                (None, true) => Some(latest_checkpoint(&paths.dir).ok_or_else(|| {
                    Error::Config(format!("no checkpoint to resume in {}", paths.checkpoints().display()))
                })?),
                (None, false) => None,
            };
            let ckpt = resume.as_deref().map(Checkpoint::load).transpose()?;
            let mut backend = Backend::open(&cfg.backend)?;
            let outcome = crate::harness::train(&cfg, &mut backend, ckpt.as_ref(), &paths)?;
            println!(
                "trained {} episodes in {} updates ({:?}); stats in {}",
                outcome.episodes,
                outcome.updates,
                outcome.reason,
                paths.stats().display()
            );
        }
        Command::Eval { checkpoint, transcription } => {
            let cfg = load_config(g)?;
            let ck = Checkpoint::load(&checkpoint)?;
            let mut backend = Backend::open(&cfg.backend)?;
            let dir = out_dir_for(&cfg, g, &checkpoint);
            let report = evaluate(&ck.params, &checkpoint_episode(&cfg, &ck), &mut backend, &dir, &transcription)?;
            let csv_path = dir.join(format!("eval_{}.csv", report.syllable));
            report.write_csv(&csv_path)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let err = |e: csv::Error| Error::Csv { path: "<stdout>".into(), message: e.to_string() };
            w.write_record(crate::harness::EvalReport::CSV_HEADER).map_err(err)?;
            w.write_record(report.csv_record()).map_err(err)?;
            w.flush()?;
        }
        Command::Rollout { checkpoint, greedy } => {
            let cfg = load_config(g)?;
            let ck = Checkpoint::load(&checkpoint)?;
            let mut backend = Backend::open(&cfg.backend)?;
            let ep = checkpoint_episode(&cfg, &ck);
            crate::harness::eval::check_compatible(&ck.params, &ep, &backend)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
            let mode = if greedy { ActionMode::Greedy } else { ActionMode::Sample(&mut rng) };
            let (traj, signals, total) = run_episode(&ck.params, &ep, &mut backend, mode)?;
            let dir = out_dir_for(&cfg, g, &checkpoint);
            std::fs::create_dir_all(&dir)?;
            let id = &ep.target_id;
            let t = dir.join(format!("rollout_{id}_trajectory.csv"));
            let r = dir.join(format!("rollout_{id}_rewards.csv"));
            let w = dir.join(format!("rollout_{id}.wav"));
            write_trajectory_csv(&traj, &t)?;
            write_rewards_csv(&signals, &r)?;
            backend.write_wav(&traj, ep.step_duration, &w)?;
            println!("total_reward {total:?}; wrote {}, {}, {}", t.display(), r.display(), w.display());
        }
        Command::ExportAudio { trajectory } => {
            let cfg = load_config(g)?;
            let out = require_out(g, "export-audio")?;
            let traj = read_trajectory_csv(&trajectory, "export")?;
            let mut backend = Backend::open(&cfg.backend)?;
            backend.write_wav(&traj, cfg.episode.step_duration, out)?;
            println!("wrote {}", out.display());
        }
        Command::MakeTarget { source } => {
            let cfg = load_config(g)?;
            let out = require_out(g, "make-target")?;
            let spec = match source.spec() {
                Some(s) => s,
                None => cfg.target.spec()?.ok_or_else(|| {
                    Error::Config("no target source: pass --fixture, --trajectory, --wav or --syllable".into())
                })?,
            };
            let mut backend = Backend::open(&cfg.backend)?;
            let (id, e) = backend.make_target(&spec, cfg.episode.step_duration)?;
            write_embedding(&id, &e, out)?;
            println!("wrote {} ({} dims, id {id})", out.display(), e.dim());
        }
        Command::PlotData { stats, window } => {
            let rows = plot::smooth(&plot::read_stats(&stats)?, window)?;
            match &g.out {
                Some(p) => plot::write_smoothed(&rows, &mut std::io::BufWriter::new(std::fs::File::create(p)?))?,
                None => plot::write_smoothed(&rows, &mut std::io::stdout().lock())?,
            }
        }
        Command::ServeReference { listen, protocol_version } => {
            let cfg = load_config(g)?;
            let opts = ServerOptions { reference: cfg.backend.reference(), protocol_version, ..ServerOptions::default() };
            match listen {
                None => {
                    let stdin = std::io::stdin().lock();
                    LoopbackServer::new(opts)?.serve(stdin, std::io::stdout().lock())?;
                }
                Some(addr) => {
                    let listener = TcpListener::bind(&addr)?;
                    eprintln!("listening on {}", listener.local_addr()?);
                    std::io::stderr().flush()?;
                    for conn in listener.incoming() {
                        let conn = conn?;
                        let opts = opts.clone();
                        std::thread::spawn(move || {
                            let res = (|| -> Result<()> {
                                conn.set_nodelay(true)?;
                                let read = std::io::BufReader::new(conn.try_clone()?);
                                LoopbackServer::new(opts)?.serve(read, conn)
                            })();
                            if let Err(e) = res {
                                log::warn!("connection ended: {e}");
                            }
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Entry point: parse, run, map errors to exit codes (2 usage, 1 other).
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ARTIC_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // Output piped into `head` and the like.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tiler::commands::{self, RunConfig};
use tiler::{pgm, render, BoundMethod, CameraState, LocalBound, Result, SceneConfig};

#[derive(Parser)]
#[command(
    name = "tiler",
    version,
    about = "Per-tile error bounds for a road-scene state estimator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render labelled images at random states for training.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, num_args = 2, allow_hyphen_values = true, default_values_t = [-50.0, 50.0])]
        delta_range: Vec<f64>,
        #[arg(long, num_args = 2, allow_hyphen_values = true, default_values_t = [-70.0, 70.0])]
        theta_range: Vec<f64>,
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Bound every tile of the state space and write a run directory.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Keep rows already in tiles.csv and continue after them.
        #[arg(long)]
        resume: bool,
        /// Also write boxes.bin for fast local-bound queries.
        #[arg(long)]
        dump_boxes: bool,
    },
    /// Sample each tile of a run and compare with its bound.
    Estimate {
        run_dir: PathBuf,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Heatmaps, distributions, and trusted fractions for a run.
    Report { run_dir: PathBuf },
    /// Local error bound for one image against a run.
    Query { run_dir: PathBuf, image: PathBuf },
    /// Run the Tiler at several cell sizes and tabulate percentiles.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.4, 0.2])]
        cells: Vec<f64>,
    },
    /// Render one image as PGM.
    Render {
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scene: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    delta_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    theta_range: Option<Vec<f64>>,
    #[arg(long)]
    cell_delta: Option<f64>,
    #[arg(long)]
    cell_theta: Option<f64>,
    #[arg(long)]
    method: Option<BoundMethod>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    spacing: Option<f64>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.network {
            cfg.network = Some(v);
        }
        if let Some(v) = self.scene {
            cfg.scene = Some(v);
        }
        if let Some(v) = self.delta_range {
            cfg.delta_range = [v[0], v[1]];
        }
        if let Some(v) = self.theta_range {
            cfg.theta_range = [v[0], v[1]];
        }
        if let Some(v) = self.cell_delta {
            cfg.cell_delta = v;
        }
        if let Some(v) = self.cell_theta {
            cfg.cell_theta = v;
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.spacing {
            cfg.spacing = v;
        }
        Ok(cfg)
    }
}

fn scene_or_default(path: Option<PathBuf>) -> Result<SceneConfig> {
    path.map_or_else(|| Ok(SceneConfig::default()), SceneConfig::from_file)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenDataset {
            out,
            count,
            seed,
            delta_range,
            theta_range,
            scene,
        } => {
            let scene = scene_or_default(scene)?;
            commands::gen_dataset(
                &out,
                count,
                seed,
                [delta_range[0], delta_range[1]],
                [theta_range[0], theta_range[1]],
                &scene,
            )?;
            println!("wrote {count} images to {}", out.display());
        }
        Command::Verify {
            run,
            resume,
            dump_boxes,
        } => {
            let mut cfg = run.resolve()?;
            cfg.dump_boxes |= dump_boxes;
            let s = commands::verify(&cfg, resume)?;
            println!(
                "{} tiles ({}x{}), method {}, global bound delta {:.4} theta {:.4}, {:.1}s",
                s.tiles, s.grid.0, s.grid.1, s.method, s.global_bound[0], s.global_bound[1], s.wall_seconds
            );
        }
        Command::Estimate {
            run_dir,
            spacing,
            workers,
        } => {
            let s = commands::estimate(&run_dir, spacing, workers)?;
            println!(
                "{} tiles at spacing {}, empirical max delta {:.4} theta {:.4}, min gap delta {:.4} theta {:.4}",
                s.tiles, s.spacing, s.empirical_max[0], s.empirical_max[1], s.min_gap[0], s.min_gap[1]
            );
        }
        Command::Report { run_dir } => {
            let s = commands::report(&run_dir)?;
            for q in &s.quantities {
                println!(
                    "{}: global {:.4}, p50 {:.4}, p90 {:.4}, p99 {:.4}, trusted {:.2}% at {:.2}",
                    q.quantity,
                    q.global_bound,
                    q.p50,
                    q.p90,
                    q.p99,
                    100.0 * q.trusted_fraction,
                    q.trust_tolerance
                );
            }
        }
        Command::Query { run_dir, image } => match commands::query(&run_dir, &pgm::read_image(&image)?)? {
            LocalBound::Covered(e) => println!("covered: delta {:.4} theta {:.4}", e[0], e[1]),
            LocalBound::NotCovered => println!("NOT_COVERED"),
        },
        Command::Sweep { run, cells } => {
            let cfg = run.resolve()?;
            for r in commands::sweep(&cfg, &cells)? {
                println!(
                    "cell {}: {} tiles, p99 delta {:.4} theta {:.4}, global delta {:.4} theta {:.4}",
                    r.cell_size, r.tiles, r.p99_delta, r.p99_theta, r.global_delta, r.global_theta
                );
            }
        }
        Command::Render {
            delta,
            theta,
            out,
            scene,
        } => {
            let scene = scene_or_default(scene)?;
            scene.validate()?;
            pgm::write_image(&out, &render(CameraState::new(delta, theta), &scene))?;
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

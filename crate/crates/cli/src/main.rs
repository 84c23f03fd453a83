//! `herbar`: build target databases, recognize single frames, render
//! overlays, run the confusion benchmark, check catalog consistency and
//! launch the recognition service.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "herbar", version, about = "Herb picture recognition toolkit")]
struct Cli {
    /// RANSAC seed; fixed seed gives byte-identical output.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for recognition (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register the pictures of a manifest into a .hrb database.
    BuildDb(BuildDbArgs),
    /// Recognize one frame.
    Recognize(RecognizeArgs),
    /// Draw the wireframe model over a frame at the recovered pose.
    Overlay(OverlayArgs),
    /// Replay rotation, occlusion, interference and color tests.
    Bench(BenchArgs),
    /// Cross-check a catalog against a database.
    Validate(ValidateArgs),
    /// Run the recognition service.
    Serve(ServeArgs),
    /// Write the synthetic fixture set: pictures, manifest, catalog, models.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    /// JSON list of {name, image_path, content_id}; paths are relative to the manifest.
    manifest: PathBuf,
    /// Output database file.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = herbar_core::targetdb::DEFAULT_MIN_KEYPOINTS)]
    min_keypoints: usize,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    frame: PathBuf,
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Print JSON instead of a summary line.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 12)]
    min_inliers: usize,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    frame: PathBuf,
    #[arg(long)]
    db: PathBuf,
    /// WireframeModel JSON.
    #[arg(long)]
    model: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Camera intrinsics JSON {fx, fy, cx, cy}; defaults to fx = fy = 0.9·width.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Line color as RRGGBB hex.
    #[arg(long, default_value = "ff2020")]
    color: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    db: PathBuf,
    /// Directory holding each target's source picture as <content_id>.png or <name>.png.
    #[arg(long)]
    targets_dir: PathBuf,
    /// Write the JSON report here (stdout otherwise).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Save every synthesized frame as PNG into this directory.
    #[arg(long)]
    dump_cases: Option<PathBuf>,
    /// Targets with fewer keypoints are treated as low-texture.
    #[arg(long, default_value_t = herbar_core::targetdb::DEFAULT_MIN_KEYPOINTS)]
    low_texture_below: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    /// Directory of <content_id>.json wireframe models.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = herbar_service::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value_t = 12)]
    min_inliers: usize,
    #[arg(long, default_value_t = herbar_service::DEFAULT_HYSTERESIS)]
    hysteresis: usize,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Output directory.
    out: PathBuf,
    /// Number of pictures to render (at most 88).
    #[arg(long, default_value_t = 88)]
    count: usize,
    /// Picture side length in pixels.
    #[arg(long, default_value_t = 320)]
    size: u32,
    /// Render the last picture as a plain, low-texture sheet.
    #[arg(long)]
    low_texture: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into()))
        .with_writer(std::io::stderr)
        .init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::BuildDb(a) => commands::build_db(&a),
        Command::Recognize(a) => commands::recognize(&a, cli.seed),
        Command::Overlay(a) => commands::overlay(&a, cli.seed),
        Command::Bench(a) => commands::bench(&a, cli.seed),
        Command::Validate(a) => commands::validate(&a),
        Command::Serve(a) => commands::serve(&a, cli.seed),
        Command::Fixtures(a) => commands::fixtures(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

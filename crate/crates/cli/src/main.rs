use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tactile_crack::fusion::{
    assemble_reconstruction, read_reconstruction_csv, reconstruct_all, refine_visual_mask, verify_edges,
    write_reconstruction_csv, EdgeVerdict,
};
use tactile_crack::harness::{
    detection_metrics, emit_report, reconstruction_metrics, run_demo, PipelineConfig,
};
use tactile_crack::planner::{build_touch_plan, plan_passive_raster, TouchPlan, SENSOR_FOOTPRINT_MM};
use tactile_crack::segment::{ingest_mask, segment_tactile, segment_visual};
use tactile_crack::simscene::{generate_scene, random_scene, Scene};
use tactile_crack::skeleton::SkeletonGraph;
use tactile_crack::tactile::{read_frames, simulate_plan, write_frames};
use tactile_crack::{io, Error, Mask, Result};

#[derive(Parser)]
#[command(name = "tactile-crack", version, about = "Vision-guided active tactile crack detection on synthetic structures")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Pipeline configuration as JSON; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scene directory.
    Generate {
        #[arg(long, default_value_t = 2)]
        real: usize,
        #[arg(long, default_value_t = 1)]
        fake: usize,
        #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [140.0, 105.0])]
        extent_mm: Vec<f64>,
    },
    /// Threshold an albedo raster into a visual crack mask.
    SegmentVisual {
        #[arg(long)]
        albedo: PathBuf,
    },
    /// Thin a mask and extract keypoints and minimal edges.
    Skeletonize {
        #[arg(long)]
        mask: PathBuf,
    },
    /// Plan contacts along skeleton edges, or a passive raster over a scene.
    Plan {
        #[arg(long, required_unless_present = "passive")]
        graph: Option<PathBuf>,
        #[arg(long, requires = "scene")]
        passive: bool,
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Press the simulated sensor at every planned contact.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Segment tactile frames into crack masks.
    SegmentTactile {
        #[arg(long)]
        frames: PathBuf,
    },
    /// Verify edges against tactile masks and refine the visual mask.
    Fuse(FuseArgs),
    /// Lift tactile crack pixels of kept edges to world points.
    Reconstruct {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        /// Verdicts from `fuse`; without them every frame is used.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Score a detection mask and/or a reconstruction against a scene.
    Evaluate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        reconstruction: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        touches: usize,
    },
    /// Run all four methods on the demo corpus and write the report.
    Demo,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    masks: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    visual: PathBuf,
}

fn out_path(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().ok_or_else(|| Error::Parameter("--out is required for this command".into()))
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => io::read_json(p)?,
        None => PipelineConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn mask_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("mask_{i:04}.pgm"))
}

/// Masks written by `segment-tactile`; a missing file means that press made no contact.
fn read_tactile_masks(dir: &Path, n: usize) -> Result<Vec<Option<Mask>>> {
    (0..n)
        .map(|i| {
            let p = mask_path(dir, i);
            if p.exists() {
                io::read_mask(&p).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Generate { real, fake, extent_mm } => {
            let spec = random_scene(cli.seed, *real, *fake, (extent_mm[0], extent_mm[1]), &cfg.corpus.generator)?;
            generate_scene(&spec)?.save(out_path(cli)?)
        }
        Command::SegmentVisual { albedo } => {
            let a = io::read_f32_grid(albedo)?;
            io::write_mask(out_path(cli)?, &segment_visual(&a, &cfg.segmenter)?)
        }
        Command::Skeletonize { mask } => {
            let m = io::read_mask(mask)?;
            io::write_json(out_path(cli)?, &SkeletonGraph::from_mask(&m))
        }
        Command::Plan { graph, passive, scene } => {
            let plan = if *passive {
                let s = Scene::load(scene.as_deref().expect("clap enforces --scene"))?;
                plan_passive_raster(s.geometry(), SENSOR_FOOTPRINT_MM, cfg.passive_overlap)?
            } else {
                let g: SkeletonGraph = io::read_json(graph.as_deref().expect("clap enforces --graph"))?;
                build_touch_plan(&g, g.geometry(), cfg.spacing_mm)?
            };
            io::write_json(out_path(cli)?, &plan)
        }
        Command::Simulate { scene, plan } => {
            let s = Scene::load(scene)?;
            let p: TouchPlan = io::read_json(plan)?;
            write_frames(out_path(cli)?, &simulate_plan(&s, &cfg.sensor, &p, cli.seed)?)
        }
        Command::SegmentTactile { frames } => {
            let out = out_path(cli)?;
            io::ensure_dir(out)?;
            for (i, f) in read_frames(frames)?.iter().enumerate() {
                match segment_tactile(f, &cfg.segmenter) {
                    Ok(m) => io::write_mask(&mask_path(out, i), &m)?,
                    Err(Error::NoContact) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(())
        }
        Command::Fuse(a) => {
            let out = out_path(cli)?;
            let plan: TouchPlan = io::read_json(&a.plan)?;
            let graph: SkeletonGraph = io::read_json(&a.graph)?;
            let visual = ingest_mask(&a.visual, graph.geometry())?;
            let masks = read_tactile_masks(&a.masks, plan.len())?;
            let mut verdicts = verify_edges(&plan, &masks, cfg.area_threshold_frac)?;
            // edges that received no contact still need a (kept) verdict
            for e in verdicts.len()..graph.edges.len() {
                verdicts.push(EdgeVerdict { edge_index: e, touches: 0, low_area_touches: 0, rejected: false });
            }
            let refined = refine_visual_mask(&visual, &graph, &verdicts)?;
            io::ensure_dir(out)?;
            io::write_json(&out.join("verdicts.json"), &verdicts)?;
            io::write_mask(&out.join("refined.pgm"), &refined)
        }
        Command::Reconstruct { plan, frames, masks, verdicts } => {
            let plan: TouchPlan = io::read_json(plan)?;
            let frames = read_frames(frames)?;
            let masks = read_tactile_masks(masks, frames.len())?;
            let recon = match verdicts {
                Some(v) => {
                    let mut v: Vec<EdgeVerdict> = io::read_json(v)?;
                    v.truncate(plan.per_edge_index.len());
                    assemble_reconstruction(&frames, &masks, &v, &plan, &cfg.sensor, &cfg.reconstruct)?
                }
                None => reconstruct_all(&frames, &masks, &cfg.sensor, &cfg.reconstruct)?,
            };
            write_reconstruction_csv(out_path(cli)?, &recon)
        }
        Command::Evaluate { scene, mask, reconstruction, touches } => {
            let s = Scene::load(scene)?;
            let mut report = json!({ "scene": scene.display().to_string() });
            if let Some(m) = mask {
                let pred = ingest_mask(m, s.geometry())?;
                report["detection"] = json!(detection_metrics(&pred, &s.gt_mask)?);
            }
            if let Some(r) = reconstruction {
                let recon = read_reconstruction_csv(r)?;
                let m = reconstruction_metrics(recon.positions(), &s.gt_centerlines, *touches, cfg.per_touch_s)?;
                report["reconstruction"] = json!(m);
            }
            match &cli.out {
                Some(p) => io::write_json(p, &report),
                None => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("json values serialize"));
                    Ok(())
                }
            }
        }
        Command::Demo => {
            let out = out_path(cli)?;
            let results = run_demo(&cfg, cli.seed)?;
            emit_report(&results, &cfg, cli.seed, out)?;
            print!("{}", tactile_crack::harness::report_csv(&results));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

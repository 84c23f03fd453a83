use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use herbar_core::bench::{run_bench, synthesize_cases, BenchConfig, CaseImages};
use herbar_core::content::{load_catalog, validate_against_db, Catalog};
use herbar_core::features::ExtractParams;
use herbar_core::fixtures::{box_model, herb_picture, low_texture_picture, synthetic_catalog, HERBS};
use herbar_core::imaging::{to_grayscale, ColorImage};
use herbar_core::matcher::{recognize_image, RecognizeParams};
use herbar_core::pose::{
    decompose_homography, normalized_target_homography, render_overlay, CameraIntrinsics, WireframeModel,
};
use herbar_core::targetdb::{build_target, load_db, rate_target, save_db, RegisterParams, TargetDatabase};
use herbar_service::{Engine, ServiceConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{BenchArgs, BuildDbArgs, FixturesArgs, OverlayArgs, RecognizeArgs, ServeArgs, ValidateArgs};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub image_path: PathBuf,
    pub content_id: String,
}

fn read_db(path: &Path) -> Result<TargetDatabase> {
    let file = File::open(path).with_context(|| format!("cannot open database {}", path.display()))?;
    load_db(&mut BufReader::new(file)).with_context(|| format!("cannot load database {}", path.display()))
}

fn read_catalog(path: &Path) -> Result<Catalog> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read catalog {}", path.display()))?;
    load_catalog(&text).with_context(|| format!("invalid catalog {}", path.display()))
}

fn recognize_params(seed: u64) -> RecognizeParams {
    let mut p = RecognizeParams::default();
    p.ransac.seed = seed;
    p
}

/// Writes through a sibling temporary file so a failure never leaves a
/// partial output behind.
fn write_atomically(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?);
        write(&mut w)?;
        w.flush()?;
        fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn build_db(args: &BuildDbArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.manifest)
        .with_context(|| format!("cannot read manifest {}", args.manifest.display()))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text).context("invalid manifest")?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let params = RegisterParams {
        min_keypoints: args.min_keypoints,
        ..RegisterParams::default()
    };

    let mut db = TargetDatabase::new();
    let mut failures = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let path = base.join(&e.image_path);
        let img = match ColorImage::load_png(&path) {
            Ok(img) => img,
            Err(err) => {
                failures.push(format!("{}: cannot load {}: {err}", e.name, path.display()));
                continue;
            }
        };
        let id = i as u32 + 1;
        match build_target(id, &e.name, &e.content_id, &img, &params).and_then(|t| db.push(t)) {
            Ok(()) => {}
            Err(err) => failures.push(format!("{}: {err}", e.name)),
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("rejected {f}");
        }
        eprintln!("no database written ({} of {} entries rejected)", failures.len(), entries.len());
        return Ok(ExitCode::from(1));
    }
    write_atomically(&args.out, |w| Ok(save_db(&db, w)?))?;

    println!("{:>4}  {:<28} {:<6} {:>9} {:>7}", "id", "name", "stars", "keypoints", "spread");
    for t in db.targets() {
        let r = rate_target(t);
        println!(
            "{:>4}  {:<28} {:<6} {:>9} {:>7.3}",
            t.id,
            t.name,
            "*".repeat(r.stars as usize),
            r.keypoint_count,
            r.spread
        );
    }
    eprintln!("wrote {} targets to {}", db.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn recognize(args: &RecognizeArgs, seed: u64) -> Result<ExitCode> {
    let db = read_db(&args.db)?;
    let catalog = args.catalog.as_deref().map(read_catalog).transpose()?;
    let frame = ColorImage::load_png(&args.frame).with_context(|| format!("cannot load {}", args.frame.display()))?;
    let mut params = recognize_params(seed);
    params.min_inliers = args.min_inliers;
    let detection = recognize_image(&to_grayscale(&frame), &db, &ExtractParams::default(), &params);

    let Some(d) = detection else {
        if args.json {
            println!("{}", json!({ "detection": null }));
        } else {
            println!("no detection");
        }
        return Ok(ExitCode::SUCCESS);
    };
    let target = db.get(d.target_id).expect("detected target is in the database");
    let entry = catalog.as_ref().and_then(|c| c.get(&target.content_id));
    if args.json {
        let out = json!({
            "detection": {
                "target_id": d.target_id,
                "name": target.name,
                "content_id": target.content_id,
                "confidence": d.confidence,
                "inliers": d.inliers,
                "matched": d.matched,
                "homography": d.homography.normalized().to_row_major(),
            },
            "entry": entry,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!(
            "{} (id {}): {} inliers of {} matches, confidence {:.3}",
            target.name, d.target_id, d.inliers, d.matched, d.confidence
        );
        if let Some(e) = entry {
            println!("{} / {}: {}", e.name_cn, e.name_en, e.usage);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_color(hex: &str) -> Result<[u8; 4]> {
    let hex = hex.trim_start_matches('#');
    if hex.len() != 6 {
        bail!("color must be RRGGBB, got {hex:?}");
    }
    let v = u32::from_str_radix(hex, 16).with_context(|| format!("bad color {hex:?}"))?;
    Ok([(v >> 16) as u8, (v >> 8) as u8, v as u8, 255])
}

pub fn overlay(args: &OverlayArgs, seed: u64) -> Result<ExitCode> {
    let db = read_db(&args.db)?;
    let model = WireframeModel::from_json_file(&args.model)?;
    let color = parse_color(&args.color)?;
    let frame = ColorImage::load_png(&args.frame).with_context(|| format!("cannot load {}", args.frame.display()))?;
    let k = match &args.intrinsics {
        Some(p) => CameraIntrinsics::from_json_file(p)?,
        None => CameraIntrinsics::default_for(frame.width(), frame.height()),
    };
    let detection = recognize_image(&to_grayscale(&frame), &db, &ExtractParams::default(), &recognize_params(seed));
    let out = match &detection {
        Some(d) => {
            let target = db.get(d.target_id).expect("detected target is in the database");
            let pose = decompose_homography(&normalized_target_homography(&d.homography, target.image_width), &k)
                .context("cannot recover a pose from the detection")?;
            eprintln!("{} (id {}), t = {:?}", target.name, target.id, pose.t);
            render_overlay(&frame, &pose, &k, &model, color)
        }
        None => {
            eprintln!("no detection; frame copied unchanged");
            frame
        }
    };
    out.save_png(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn load_sources(db: &TargetDatabase, dir: &Path) -> Result<HashMap<u32, ColorImage>> {
    let mut sources = HashMap::new();
    for t in db.targets() {
        let candidates = [dir.join(format!("{}.png", t.content_id)), dir.join(format!("{}.png", t.name))];
        match candidates.iter().find(|p| p.is_file()) {
            Some(p) => {
                let img = ColorImage::load_png(p).with_context(|| format!("cannot load {}", p.display()))?;
                sources.insert(t.id, img);
            }
            None => eprintln!("warning: no source picture for target {} ({}); its cases are skipped", t.id, t.name),
        }
    }
    Ok(sources)
}

pub fn bench(args: &BenchArgs, seed: u64) -> Result<ExitCode> {
    let db = read_db(&args.db)?;
    let sources = load_sources(&db, &args.targets_dir)?;
    let config = BenchConfig {
        extract: ExtractParams::default(),
        recognize: recognize_params(seed),
        low_texture_keypoints: args.low_texture_below,
    };
    if let Some(dir) = &args.dump_cases {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (i, c) in synthesize_cases(&db, &sources, &config).iter().enumerate() {
            let stem = format!("{i:04}_t{}_{}_{}", c.target_id, c.test.as_str(), c.parameter.tag());
            match &c.frames {
                Some(CaseImages::Gray(img)) => img.save_png(dir.join(format!("{stem}.png")))?,
                Some(CaseImages::ColorPair(color, gray)) => {
                    color.save_png(dir.join(format!("{stem}_color.png")))?;
                    gray.save_png(dir.join(format!("{stem}_gray.png")))?;
                }
                None => {}
            }
        }
    }
    let report = run_bench(&db, &sources, &config);
    eprint!("{}", report.table());
    match &args.report {
        Some(path) => write_atomically(path, |w| Ok(w.write_all(report.to_json().as_bytes())?))?,
        None => println!("{}", report.to_json()),
    }
    Ok(if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn validate(args: &ValidateArgs) -> Result<ExitCode> {
    let db = read_db(&args.db)?;
    let catalog = read_catalog(&args.catalog)?;
    let report = validate_against_db(&catalog, &db);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.missing_entries.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn serve(args: &ServeArgs, seed: u64) -> Result<ExitCode> {
    let config = ServiceConfig {
        db: args.db.clone(),
        catalog: args.catalog.clone(),
        models: args.models.clone(),
        host: args.host.clone(),
        port: args.port,
        seed,
        min_inliers: args.min_inliers,
        hysteresis: args.hysteresis,
    };
    let engine = Engine::load(&config)?;
    let runtime = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    runtime.block_on(herbar_service::serve(engine, &config.host, config.port))?;
    Ok(ExitCode::SUCCESS)
}

pub fn fixtures(args: &FixturesArgs) -> Result<ExitCode> {
    if args.count == 0 || args.count > HERBS.len() {
        bail!("--count must be between 1 and {}", HERBS.len());
    }
    let images = args.out.join("images");
    let models = args.out.join("models");
    fs::create_dir_all(&images)?;
    fs::create_dir_all(&models)?;
    let mut manifest = Vec::new();
    for (i, (id, _, en)) in HERBS.iter().take(args.count).enumerate() {
        let img = if args.low_texture && i + 1 == args.count {
            low_texture_picture(args.size, args.size)
        } else {
            herb_picture(i as u32, args.size, args.size)
        };
        let rel = PathBuf::from("images").join(format!("{id}.png"));
        img.save_png(args.out.join(&rel))?;
        fs::write(
            models.join(format!("{id}.json")),
            serde_json::to_string_pretty(&box_model(en, 1.0))?,
        )?;
        manifest.push(ManifestEntry {
            name: en.to_string(),
            image_path: rel,
            content_id: id.to_string(),
        });
    }
    fs::write(args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    fs::write(args.out.join("catalog.json"), synthetic_catalog().to_json())?;
    eprintln!("wrote {} pictures to {}", args.count, args.out.display());
    Ok(ExitCode::SUCCESS)
}

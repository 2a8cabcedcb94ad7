use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayvote::io::{self, Manifest, SceneFiles, TrajectoryEntry, VaConfig};
use rayvote::{
    compare_schemes, da_aggregate, rma_aggregate, va_aggregate, volume_to_cloud, voxelize,
    CameraView, CompareConfig, DaConfig, FeaturePointCloud, RmaConfig, SynthConfig, TsdfGrid,
};

use crate::{AggregateArgs, BenchArgs, EvalArgs, Failure, SchemeArg, SchemeOverrides, SynthArgs, THREADS_ENV};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Builds the worker pool from --threads, the environment, or core count.
fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let from_env = std::env::var(THREADS_ENV)
        .ok()
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| usage(format!("{THREADS_ENV}={v:?} is not a thread count")))
        })
        .transpose()?;
    let n = threads.or(from_env).unwrap_or(0);
    if threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::Runtime(e.into()))
}

pub fn synth(args: SynthArgs) -> Result<(), Failure> {
    let truncation = args
        .truncation
        .unwrap_or(rayvote::defaults::TRUNCATION_FACTOR * args.voxel);
    let cfg = SynthConfig {
        preset: args.preset.into(),
        views: args.views,
        dims: args.dims,
        voxel_size: args.voxel,
        truncation,
        image_width: args.image_size,
        image_height: args.image_size,
        channels: args.channels,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let out = rayvote::synthesize(&cfg)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(Failure::Runtime)?;

    io::write_tsdf_grid(&args.out.join("scene.tsdf"), &out.grid)?;
    let entries: Vec<TrajectoryEntry> = out
        .views
        .iter()
        .map(|v| TrajectoryEntry {
            intrinsics: v.intrinsics,
            pose: v.pose,
        })
        .collect();
    io::write_trajectory(&args.out.join("trajectory.txt"), &entries)?;

    let mut feature_maps = Vec::with_capacity(out.views.len());
    for (i, view) in out.views.iter().enumerate() {
        let name = format!("view_{i:03}.fmap");
        io::write_feature_map(&args.out.join(&name), &view.features)?;
        feature_maps.push(name);
    }

    let manifest = Manifest {
        schema_version: io::MANIFEST_SCHEMA_VERSION,
        scene: SceneFiles {
            tsdf: "scene.tsdf".into(),
            trajectory: "trajectory.txt".into(),
            feature_maps,
            preset: Some(cfg.preset),
        },
        rma: RmaConfig::default(),
        da: DaConfig::default(),
        va: VaConfig::default(),
        output: Some("cloud.ply".into()),
    };
    let manifest_path = args.out.join("manifest.toml");
    std::fs::write(&manifest_path, manifest.to_toml())
        .with_context(|| format!("writing {}", manifest_path.display()))
        .map_err(Failure::Runtime)?;

    println!("preset: {}", cfg.preset);
    println!("views: {}", out.views.len());
    println!("grid: {}x{}x{} @ {} m", cfg.dims[0], cfg.dims[1], cfg.dims[2], cfg.voxel_size);
    println!("wrote: {}", manifest_path.display());
    Ok(())
}

struct LoadedScene {
    manifest: Manifest,
    base: PathBuf,
    grid: TsdfGrid,
    views: Vec<CameraView>,
}

fn load_scene(path: &Path) -> Result<LoadedScene, Failure> {
    let (manifest, base) = io::load_manifest(path)?;
    let (grid, views) = io::load_scene_inputs(&manifest, &base)?;
    Ok(LoadedScene {
        manifest,
        base,
        grid,
        views,
    })
}

fn apply_overrides(
    rma: &mut RmaConfig,
    da: &mut DaConfig,
    va: &mut VaConfig,
    over: &SchemeOverrides,
) -> Result<(), Failure> {
    if let Some(theta) = over.theta {
        rma.weight_threshold = theta;
    }
    if let Some(samples) = over.samples {
        rma.samples_per_ray = samples;
        da.samples_per_ray = samples;
    }
    if let Some(t_max) = over.t_max {
        rma.t_max = Some(t_max);
        da.t_max = Some(t_max);
    }
    if let Some(scale) = over.scale {
        rma.sigmoid_scale = scale;
    }
    if let Some(sampling) = over.sampling {
        rma.sampling = sampling.into();
        da.sampling = sampling.into();
    }
    if let Some(k) = over.k {
        da.k = k;
    }
    if let Some(band) = over.band {
        if band.is_nan() || band <= 0.0 {
            return Err(usage(format!("--band {band} must be positive")));
        }
        va.band = Some(band);
    }
    rma.validate().map_err(|e| usage(e.to_string()))?;
    da.validate().map_err(|e| usage(e.to_string()))?;
    Ok(())
}

fn run_scheme(
    scheme: SchemeArg,
    scene: &LoadedScene,
    rma: &RmaConfig,
    da: &DaConfig,
    va: &VaConfig,
) -> Result<FeaturePointCloud, Failure> {
    let cloud = match scheme {
        SchemeArg::Rma => rma_aggregate(&scene.grid, &scene.views, rma)?,
        SchemeArg::Da => da_aggregate(&scene.grid, &scene.views, da)?,
        SchemeArg::Va => {
            let volume = va_aggregate(
                &scene.views,
                scene.grid.dims(),
                scene.grid.origin(),
                scene.grid.voxel_size(),
            )?;
            let band = va.band.unwrap_or_else(|| scene.grid.truncation());
            volume_to_cloud(&volume, &scene.grid, band)?
        }
    };
    Ok(cloud)
}

pub fn aggregate(args: AggregateArgs) -> Result<(), Failure> {
    let pool = thread_pool(args.threads)?;
    let scene = load_scene(&args.manifest)?;
    let mut rma = scene.manifest.rma;
    let mut da = scene.manifest.da;
    let mut va = scene.manifest.va;
    apply_overrides(&mut rma, &mut da, &mut va, &args.overrides)?;
    if let Some(mv) = args.merge_voxel {
        if mv.is_nan() || mv <= 0.0 {
            return Err(usage(format!("--merge-voxel {mv} must be positive")));
        }
    }

    let out_path = match (&args.out, &scene.manifest.output) {
        (Some(path), _) => path.clone(),
        (None, Some(rel)) => scene.base.join(rel),
        (None, None) => return Err(usage("no --out given and manifest has no output entry")),
    };

    let started = Instant::now();
    let cloud = pool.install(|| run_scheme(args.scheme, &scene, &rma, &da, &va))?;
    let elapsed = started.elapsed().as_secs_f64();

    io::write_ply(&out_path, &cloud)?;
    if let Some(mv) = args.merge_voxel {
        let merged = pool.install(|| voxelize(&cloud, mv))?;
        let merged_path = out_path.with_extension("merged.ply");
        io::write_ply(&merged_path, &merged.to_cloud())?;
        println!("merged_voxels: {}", merged.len());
        println!("wrote_merged: {}", merged_path.display());
    }

    println!("scheme: {}", args.scheme.name());
    println!("points: {}", cloud.len());
    println!("total_weight: {}", cloud.total_weight());
    println!("elapsed_s: {elapsed:.3}");
    println!("wrote: {}", out_path.display());
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<(), Failure> {
    if args.schemes.is_empty() {
        return Err(usage("--schemes must name at least one scheme"));
    }
    let pool = thread_pool(args.threads)?;
    let scene = load_scene(&args.manifest)?;
    let Some(preset) = scene.manifest.scene.preset else {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "manifest {} lacks a scene preset; evaluation needs the analytic oracle",
            args.manifest.display()
        )));
    };
    let analytic = rayvote::synth::build_scene(
        preset,
        scene.grid.min_corner(),
        scene.grid.max_corner(),
    );

    let mut cfg = CompareConfig::for_grid(&scene.grid);
    cfg.rma = scene.manifest.rma;
    cfg.da = scene.manifest.da;
    let mut va = scene.manifest.va;
    apply_overrides(&mut cfg.rma, &mut cfg.da, &mut va, &args.overrides)?;
    if let Some(band) = va.band {
        cfg.band = band;
    }

    let all = pool.install(|| compare_schemes(&analytic, &scene.grid, &scene.views, &cfg))?;
    let wanted: Vec<_> = args
        .schemes
        .iter()
        .map(|s| {
            all.iter()
                .find(|r| r.scheme == s.name())
                .expect("all schemes reported")
                .clone()
        })
        .collect();

    println!(
        "{:<8}{:>10}{:>14}{:>14}{:>14}{:>16}",
        "scheme", "points", "total_weight", "surface_mass", "leakage", "mean_distance"
    );
    for r in &wanted {
        let leakage = r
            .occlusion_leakage
            .map(|l| format!("{l:.6}"))
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{:<8}{:>10}{:>14.6}{:>14.6}{:>14}{:>16.6}",
            r.scheme, r.points, r.total_weight, r.surface_mass, leakage, r.mean_surface_distance
        );
    }

    if let Some(out) = &args.out {
        #[derive(serde::Serialize)]
        struct ReportDoc<'a> {
            schema_version: u32,
            report: &'a [rayvote::AggregationReport],
        }
        let doc = toml::to_string_pretty(&ReportDoc {
            schema_version: 1,
            report: &wanted,
        })
        .expect("report serializes");
        std::fs::write(out, doc)
            .with_context(|| format!("writing {}", out.display()))
            .map_err(Failure::Runtime)?;
        println!("wrote: {}", out.display());
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<(), Failure> {
    let pool = thread_pool(args.threads)?;
    let scene = load_scene(&args.manifest)?;
    let mut rma = scene.manifest.rma;
    let mut da = scene.manifest.da;
    let mut va = scene.manifest.va;
    apply_overrides(&mut rma, &mut da, &mut va, &args.overrides)?;

    let rays: usize = scene
        .views
        .iter()
        .map(|v| v.intrinsics.width as usize * v.intrinsics.height as usize)
        .sum();
    let total_samples = rays * rma.samples_per_ray;

    let started = Instant::now();
    let rma_cloud = pool.install(|| rma_aggregate(&scene.grid, &scene.views, &rma))?;
    let rma_elapsed = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let da_cloud = pool.install(|| da_aggregate(&scene.grid, &scene.views, &da))?;
    let da_elapsed = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let volume = pool.install(|| {
        va_aggregate(
            &scene.views,
            scene.grid.dims(),
            scene.grid.origin(),
            scene.grid.voxel_size(),
        )
    })?;
    let band = va.band.unwrap_or_else(|| scene.grid.truncation());
    let va_cloud = volume_to_cloud(&volume, &scene.grid, band)?;
    let va_elapsed = started.elapsed().as_secs_f64();

    println!("threads: {}", pool.current_num_threads());
    println!("rays: {rays}");
    println!("samples_per_ray: {}", rma.samples_per_ray);
    println!("total_samples: {total_samples}");
    println!("rma_elapsed_s: {rma_elapsed:.4}");
    println!("rma_samples_per_sec: {:.0}", total_samples as f64 / rma_elapsed);
    println!("rma_points: {}", rma_cloud.len());
    println!("da_elapsed_s: {da_elapsed:.4}");
    println!("da_points: {}", da_cloud.len());
    println!("va_elapsed_s: {va_elapsed:.4}");
    println!("va_points: {}", va_cloud.len());
    Ok(())
}

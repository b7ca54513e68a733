//! End-to-end orchestration.
//!
//! The estimation pipeline runs four globally barriered stages per scene:
//!
//! 1. multi-scale PatchMatch per view (`mpm`),
//! 2. geometric-consistency optimization against the stage-1 depth maps
//!    (`geom1`),
//! 3. planar-prior construction and prior-assisted optimization (`prior`),
//! 4. a final geometric-consistency optimization (`geom2`).
//!
//! Stages 2-4 need the *other* views' current depth maps, so depth snapshots
//! are taken between stages; views inside a stage are independent and run in
//! parallel. Stage toggles exist for ablation; disabled stages are identity.

mod colormap;

pub use colormap::{colormap_table, percentile_range, render_depth_png};

use crate::cost::ThresholdSchedule;
use crate::engine::{self, HypothesisMap, ScaleSchedule};
use crate::error::{Error, Result};
use crate::fusion::{self, FuseParams, FusedPoint};
use crate::prior::{self, AnchorGate, PriorModel};
use crate::scene::{self, DepthRaster, Raster, Scene, View};
use rayon::prelude::*;
use std::path::Path;

/// Which pipeline stages run. `mpm` is the base stage and cannot be
/// disabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSet {
    pub geom1: bool,
    pub prior: bool,
    pub geom2: bool,
}

impl StageSet {
    pub const ALL: StageSet = StageSet { geom1: true, prior: true, geom2: true };
    pub const MPM_ONLY: StageSet = StageSet { geom1: false, prior: false, geom2: false };

    /// Parse a comma-separated stage list (`mpm,geom1,prior,geom2`). The
    /// list must contain `mpm`.
    pub fn parse(list: &str) -> Result<StageSet> {
        let mut mpm = false;
        let mut set = StageSet::MPM_ONLY;
        for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "mpm" => mpm = true,
                "geom1" => set.geom1 = true,
                "prior" => set.prior = true,
                "geom2" => set.geom2 = true,
                "all" => {
                    mpm = true;
                    set = StageSet::ALL;
                }
                other => return Err(Error::Config(format!("unknown stage `{other}`"))),
            }
        }
        if !mpm {
            return Err(Error::Config("stage list must include `mpm`".into()));
        }
        Ok(set)
    }
}

impl std::fmt::Display for StageSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mpm")?;
        if self.geom1 {
            write!(f, ",geom1")?;
        }
        if self.prior {
            write!(f, ",prior")?;
        }
        if self.geom2 {
            write!(f, ",geom2")?;
        }
        Ok(())
    }
}

/// Full pipeline configuration; field defaults match the CLI defaults.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub max_dim: usize,
    /// Maximum window scale; `None` picks it from the resolution.
    pub smax: Option<u32>,
    pub seed: u64,
    pub tau0: f64,
    pub alpha: f64,
    /// Weight of the geometric term in stages 2 and 4.
    pub eta: f64,
    pub lambda_prior: f64,
    pub sigma_prior: f64,
    /// Anchor selection cell size in pixels.
    pub cell: usize,
    pub stages: StageSet,
    pub anchor_gate: AnchorGate,
    pub geom_iterations: u32,
    pub prior_iterations: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_dim: 3200,
            smax: None,
            seed: 0,
            tau0: 0.8,
            alpha: 90.0,
            eta: 0.2,
            lambda_prior: 0.3,
            sigma_prior: 0.05,
            cell: 25,
            stages: StageSet::ALL,
            anchor_gate: AnchorGate::Geometric,
            geom_iterations: 2,
            prior_iterations: 3,
        }
    }
}

/// Per-view rasters produced by the pipeline.
pub struct ViewOutput {
    pub stem: String,
    pub depth: DepthRaster,
    pub normal: Raster<[f32; 3]>,
    /// Aggregated photometric cost of the final hypotheses.
    pub cost: Raster<f32>,
}

/// Per-view prior statistics (zeros when the prior stage was disabled).
#[derive(Debug, Clone, Default)]
pub struct ViewStats {
    pub anchors: usize,
    pub triangles: usize,
}

pub struct EstimateResult {
    pub outputs: Vec<ViewOutput>,
    pub stats: Vec<ViewStats>,
    pub s_max: u32,
}

fn other_views(scene: &Scene, i: usize) -> Vec<&View> {
    scene.views.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).collect()
}

fn other_indices(n: usize, i: usize) -> Vec<usize> {
    (0..n).filter(|&j| j != i).collect()
}

fn view_seed(seed: u64, view: usize) -> u64 {
    seed ^ (view as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5851_f42d_4c95_7f2d
}

/// Run the estimation pipeline over a loaded scene.
pub fn run_estimate(scene: Scene, cfg: &PipelineConfig) -> Result<EstimateResult> {
    if scene.views.len() < 2 {
        return Err(Error::Config("estimation needs at least two views".into()));
    }
    if cfg.max_dim < 64 {
        return Err(Error::Config("--max-dim must be at least 64".into()));
    }
    let scene = scene::rescale_to_max_dim(scene, cfg.max_dim);
    let n = scene.views.len();
    let max_dim = scene.views.iter().map(|v| v.camera.width.max(v.camera.height)).max().unwrap();
    let s_max = cfg.smax.unwrap_or_else(|| engine::select_smax(max_dim));
    let schedule = ScaleSchedule::new(s_max);
    let tau = ThresholdSchedule::new(cfg.tau0, cfg.alpha);
    // Geometric and prior passes hold the threshold at its final annealed
    // value.
    let tau_hold = tau.value(schedule.iterations_per_scale - 1);
    let range = scene.depth_range;

    // Stage 1: multi-scale PatchMatch, independently per view.
    let mut maps: Vec<HypothesisMap> = (0..n)
        .into_par_iter()
        .map(|i| {
            engine::run_mpm(
                &scene.views[i],
                &other_views(&scene, i),
                &schedule,
                &tau,
                range,
                view_seed(cfg.seed, i),
            )
        })
        .collect();
    let mut depths: Vec<DepthRaster> = maps.iter().map(HypothesisMap::depth_raster).collect();

    // Stage 2: geometric consistency against the stage-1 maps.
    if cfg.stages.geom1 {
        run_geometric_stage(&scene, &mut maps, &depths, cfg, tau_hold, range);
        depths = maps.iter().map(HypothesisMap::depth_raster).collect();
    }

    // Stage 3: geometric-consistency-filtered planar prior.
    let mut stats = vec![ViewStats::default(); n];
    if cfg.stages.prior {
        let collected: Vec<ViewStats> = maps
            .par_iter_mut()
            .enumerate()
            .map(|(i, map)| {
                let sources = other_views(&scene, i);
                let cam = &scene.views[i].camera;
                let m_g = match cfg.anchor_gate {
                    AnchorGate::Geometric => {
                        let src_cams: Vec<&scene::CameraModel> =
                            other_indices(n, i).into_iter().map(|j| &scene.views[j].camera).collect();
                        let src_depths: Vec<&DepthRaster> =
                            other_indices(n, i).into_iter().map(|j| &depths[j]).collect();
                        engine::geometric_consistency_raster(map, cam, &src_cams, &src_depths)
                    }
                    AnchorGate::Photometric => Raster::new(cam.width, cam.height, 0.0f32),
                };
                let anchors = prior::select_anchors(map, &m_g, cfg.cell, cfg.anchor_gate);
                let model = PriorModel::build(cam, anchors);
                let stats = ViewStats {
                    anchors: model.vertices().len(),
                    triangles: model.triangles().len(),
                };
                prior::run_prior_pass(
                    map,
                    &scene.views[i],
                    &sources,
                    &model,
                    cfg.prior_iterations,
                    cfg.lambda_prior,
                    cfg.sigma_prior,
                    tau_hold,
                    range,
                );
                stats
            })
            .collect();
        stats = collected;
        depths = maps.iter().map(HypothesisMap::depth_raster).collect();
    }

    // Stage 4: final geometric consistency.
    if cfg.stages.geom2 {
        run_geometric_stage(&scene, &mut maps, &depths, cfg, tau_hold, range);
    }

    let outputs = scene
        .views
        .iter()
        .zip(&maps)
        .map(|(v, m)| ViewOutput {
            stem: v.stem().to_string(),
            depth: m.depth_raster(),
            normal: m.normal_raster(),
            cost: m.photo_raster(),
        })
        .collect();
    Ok(EstimateResult { outputs, stats, s_max })
}

fn run_geometric_stage(
    scene: &Scene,
    maps: &mut [HypothesisMap],
    depths: &[DepthRaster],
    cfg: &PipelineConfig,
    tau_hold: f64,
    range: (f64, f64),
) {
    let n = scene.views.len();
    maps.par_iter_mut().enumerate().for_each(|(i, map)| {
        let sources = other_views(scene, i);
        let src_depths: Vec<&DepthRaster> =
            other_indices(n, i).into_iter().map(|j| &depths[j]).collect();
        engine::run_geometric_pass(
            map,
            &scene.views[i],
            &sources,
            &src_depths,
            cfg.eta,
            cfg.geom_iterations,
            tau_hold,
            range,
        );
    });
}

/// Write the per-view rasters as `<stem>.depth.dmap`, `<stem>.normal.dmap`
/// and `<stem>.cost.dmap`.
pub fn write_outputs(result: &EstimateResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for out in &result.outputs {
        scene::write_raster(&out_dir.join(format!("{}.depth.dmap", out.stem)), &out.depth)?;
        scene::write_raster(&out_dir.join(format!("{}.normal.dmap", out.stem)), &out.normal)?;
        scene::write_raster(&out_dir.join(format!("{}.cost.dmap", out.stem)), &out.cost)?;
    }
    Ok(())
}

/// Per-view depth and normal rasters, as loaded back from disk.
pub type LoadedRasters = (Vec<DepthRaster>, Vec<Raster<[f32; 3]>>);

/// Load per-view depth and normal rasters written by [`write_outputs`].
pub fn load_outputs(scene: &Scene, raster_dir: &Path) -> Result<LoadedRasters> {
    let mut depths = Vec::new();
    let mut normals = Vec::new();
    for v in &scene.views {
        let stem = v.stem();
        depths.push(scene::read_raster(&raster_dir.join(format!("{stem}.depth.dmap")))?);
        normals.push(scene::read_raster(&raster_dir.join(format!("{stem}.normal.dmap")))?);
    }
    Ok((depths, normals))
}

/// Rescale every view (camera and image) to the resolution its depth raster
/// was estimated at, so fusion runs in raster coordinates regardless of the
/// `--max-dim` the estimate used.
pub fn adapt_scene_to_rasters(scene: Scene, depths: &[DepthRaster]) -> Result<Scene> {
    if scene.views.len() != depths.len() {
        return Err(Error::Config("raster count does not match view count".into()));
    }
    let views = scene
        .views
        .into_iter()
        .zip(depths)
        .map(|(v, d)| {
            if (v.camera.width, v.camera.height) == (d.width(), d.height()) {
                return Ok(v);
            }
            if d.width() > v.camera.width || d.height() > v.camera.height {
                return Err(Error::Config(format!(
                    "raster {}x{} larger than image {}x{}",
                    d.width(),
                    d.height(),
                    v.camera.width,
                    v.camera.height
                )));
            }
            let sx = d.width() as f64 / v.camera.width as f64;
            let sy = d.height() as f64 / v.camera.height as f64;
            if (sx - sy).abs() / sx > 0.01 {
                return Err(Error::Config("raster aspect does not match the image".into()));
            }
            Ok(View {
                camera: v.camera.scaled(sx, sy, d.width(), d.height()),
                image: v.image.downsample_to(d.width(), d.height()),
                name: v.name,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scene { views, depth_range: scene.depth_range })
}

/// Fuse rasters produced by [`run_estimate`] into a point cloud.
pub fn run_fuse(
    scene: Scene,
    depths: Vec<DepthRaster>,
    normals: Vec<Raster<[f32; 3]>>,
    params: &FuseParams,
) -> Result<Vec<FusedPoint>> {
    let scene = adapt_scene_to_rasters(scene, &depths)?;
    Ok(fusion::fuse(&scene, &depths, &normals, params))
}

// ---------------------------------------------------------------------------
// Desk-scale ablation report.
// ---------------------------------------------------------------------------

/// One ablation row: a stage/gate combination evaluated against ground
/// truth.
pub struct AblationRow {
    pub label: String,
    pub median_rel_err: f64,
    pub bad_2pct: f64,
    pub coverage: f64,
}

/// Run the standard ablation ladder on a rendered synthetic scene and
/// evaluate view 0 inside `mask`. Rows share the seed, so differences come
/// from the toggled stages alone.
pub fn run_ablation(
    rendered: &crate::synth::RenderedScene,
    cfg: &PipelineConfig,
    mask: &Raster<bool>,
) -> Result<Vec<AblationRow>> {
    let rows: Vec<(&str, PipelineConfig)> = vec![
        ("single-scale", PipelineConfig { smax: Some(0), stages: StageSet::MPM_ONLY, ..cfg.clone() }),
        ("mpm", PipelineConfig { stages: StageSet::MPM_ONLY, ..cfg.clone() }),
        (
            "mpm+gc",
            PipelineConfig {
                stages: StageSet { geom1: true, prior: false, geom2: false },
                ..cfg.clone()
            },
        ),
        (
            "mpm+gc+pp",
            PipelineConfig {
                stages: StageSet { geom1: true, prior: true, geom2: false },
                anchor_gate: AnchorGate::Photometric,
                ..cfg.clone()
            },
        ),
        (
            "mpm+gc+gp",
            PipelineConfig {
                stages: StageSet { geom1: true, prior: true, geom2: false },
                anchor_gate: AnchorGate::Geometric,
                ..cfg.clone()
            },
        ),
        ("full", PipelineConfig { stages: StageSet::ALL, anchor_gate: AnchorGate::Geometric, ..cfg.clone() }),
    ];
    let mut out = Vec::new();
    for (label, row_cfg) in rows {
        let result = run_estimate(rendered.scene.clone(), &row_cfg)?;
        let report = crate::synth::depth_error_report(&result.outputs[0].depth, &rendered.gt_depths[0], mask)?;
        out.push(AblationRow {
            label: label.to_string(),
            median_rel_err: report.median_rel_err(),
            bad_2pct: report.bad_pixel_fraction(0.02),
            coverage: report.coverage(),
        });
    }
    Ok(out)
}

/// Format ablation rows as tab-separated text.
pub fn ablation_tsv(rows: &[AblationRow]) -> String {
    let mut s = String::from("config\tmedian_rel_err\tbad>2%\tcoverage\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{:.5}\t{:.4}\t{:.4}\n",
            r.label, r.median_rel_err, r.bad_2pct, r.coverage
        ));
    }
    s
}

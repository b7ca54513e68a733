//! Why planar-prior anchors are gated by geometric consistency.
//!
//! Photometric cost alone cannot tell a reliable pixel from one whose patch
//! matches well at a wrong depth. This example plants such impostors in a
//! converged map (wrong depth, forced-zero photometric cost), then selects
//! anchors with the photometric-only rule and with the additional
//! cross-view geometric gate, and counts how many impostors each admits.
//!
//! ```bash
//! cargo run --release --example anchor_gating
//! ```

use patchmatch_mvs::cost::ThresholdSchedule;
use patchmatch_mvs::engine::{self, ScaleSchedule};
use patchmatch_mvs::geometry::PlaneHypothesis;
use patchmatch_mvs::prior::{select_anchors, AnchorGate, PriorModel};
use patchmatch_mvs::scene::{DepthRaster, View};
use patchmatch_mvs::synth;

fn main() -> anyhow::Result<()> {
    println!("rendering a 3-view textured plane (160x120) and estimating every view...");
    let rendered = synth::render(&synth::preset_textured_plane(160, 120, 3), 21)?;
    let scene = &rendered.scene;
    let tau = ThresholdSchedule::default();
    let sched = ScaleSchedule::new(0);
    let range = scene.depth_range;

    let maps: Vec<_> = (0..3)
        .map(|i| {
            let sources: Vec<&View> =
                scene.views.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).collect();
            engine::run_mpm(&scene.views[i], &sources, &sched, &tau, range, 3)
        })
        .collect();

    // Impostors: wrong depth, photometric cost forced to zero.
    let mut map = maps[0].clone();
    let mut planted = Vec::new();
    for k in 0..40usize {
        let (x, y) = (6 + (k * 41) % 148, 6 + (k * 17) % 108);
        map.store(map.index(x, y), PlaneHypothesis::fronto(8.5), 0.0, 0.0, 0.0);
        planted.push((x, y));
    }
    println!("planted {} impostors (depth 8.5 vs true ~5.0, photometric cost 0)", planted.len());

    let src_cams: Vec<_> = scene.views.iter().skip(1).map(|v| &v.camera).collect();
    let src_depths_owned: Vec<DepthRaster> = maps[1..].iter().map(|m| m.depth_raster()).collect();
    let src_depths: Vec<&DepthRaster> = src_depths_owned.iter().collect();
    let m_g = engine::geometric_consistency_raster(&map, &scene.views[0].camera, &src_cams, &src_depths);

    let out = std::path::Path::new("target/examples-output/anchor_gating");
    std::fs::create_dir_all(out)?;
    println!("\ngate         anchors  impostors  triangles");
    for (name, gate) in [("photometric", AnchorGate::Photometric), ("geometric", AnchorGate::Geometric)] {
        let anchors = select_anchors(&map, &m_g, 25, gate);
        let impostors = anchors.iter().filter(|a| planted.contains(&a.pixel)).count();
        let model = PriorModel::build(&scene.views[0].camera, anchors.clone());
        println!("{name:<12} {:<8} {impostors:<10} {}", anchors.len(), model.triangles().len());
        // Inspectable dumps: the triangulation and the prior depth surface.
        model.write_debug(&out.join(format!("{name}.triangulation.txt")))?;
        patchmatch_mvs::scene::write_raster(
            &out.join(format!("{name}.prior.depth.dmap")),
            &model.depth_raster(&scene.views[0].camera),
        )?;
    }
    println!("\ntriangulation dumps -> {}", out.display());
    println!("\nthe geometric gate (m_p < 0.2 and m_g < 1.0) rejects every impostor;");
    println!("photometric-only selection wires them into the prior mesh.");
    Ok(())
}

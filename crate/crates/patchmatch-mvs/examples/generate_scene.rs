//! Generate a synthetic calibrated scene with ground truth.
//!
//! Builds one of the bundled scene presets, saves its JSON description
//! (usable with `mvs synth`), and renders it into a loadable scene
//! directory: `images/`, `cameras.txt`, `images.txt`, `range.txt`, plus
//! ground-truth depth and normal rasters under `gt/`.
//!
//! ```bash
//! cargo run --example generate_scene
//! ```

use patchmatch_mvs::synth;

fn main() -> anyhow::Result<()> {
    let out = std::path::Path::new("target/examples-output/generate_scene");
    std::fs::create_dir_all(out)?;

    let spec = synth::preset_two_plane(320, 240, 3);
    let spec_path = out.join("scene.json");
    std::fs::write(&spec_path, serde_json::to_string_pretty(&spec)?)?;
    println!("scene description -> {}", spec_path.display());

    let rendered = synth::render(&spec, 42)?;
    let scene_dir = out.join("scene");
    synth::write_scene_dir(&rendered, &scene_dir)?;
    println!(
        "rendered {} views of {} planes -> {}",
        rendered.scene.views.len(),
        spec.planes.len(),
        scene_dir.display()
    );
    println!("depth range: {:?}", rendered.scene.depth_range);
    println!("try: mvs estimate {} <out_dir>", scene_dir.display());
    Ok(())
}

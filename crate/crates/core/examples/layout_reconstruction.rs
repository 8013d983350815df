//! Recover a bird's-eye layout from a graph and score it up to similarity.
//!
//! Run with `cargo run --example layout_reconstruction`.

use std::path::Path;

use scene_scaffold::align::procrustes_align;
use scene_scaffold::graph::{build_incremental, reconstruct, scene_layout, DEFAULT_DELTA};
use scene_scaffold::localcogmap::DecodeMode;
use scene_scaffold::scene::parse_scene;

pub fn run_example() -> anyhow::Result<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/room.json");
    let scene = parse_scene(&std::fs::read_to_string(path)?)?;
    let graph = build_incremental(&scene, DEFAULT_DELTA)?;
    let truth = scene_layout(&scene);

    let mut out = String::new();
    for (name, mode) in [("continuous", DecodeMode::Continuous), ("quantized", DecodeMode::Quantized)] {
        let layout = reconstruct(&graph, mode)?;
        let fit = procrustes_align(&layout, &truth)?;
        out += &format!(
            "{name:>10}: rms {:.3e} m, scale {:.3}, rotation {:.1} deg\n",
            fit.rms,
            fit.transform.scale,
            fit.transform.rotation.to_degrees()
        );
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

//! Build a scene graph with the incremental algorithm and validate it.
//!
//! Run with `cargo run --example incremental_graph`.

use std::path::Path;

use scene_scaffold::graph::{build_incremental, validate, DEFAULT_DELTA};
use scene_scaffold::scene::parse_scene;

pub fn run_example() -> anyhow::Result<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/room.json");
    let scene = parse_scene(&std::fs::read_to_string(path)?)?;
    let graph = build_incremental(&scene, DEFAULT_DELTA)?;

    let mut out = format!("{} objects -> {} LCMs\n", scene.objects.len(), graph.lcms.len());
    out += &format!("placement order: {}\n", graph.placement_order.join(" "));
    for (i, lcm) in graph.lcms.iter().enumerate() {
        let [a, b, t] = lcm.ids();
        out += &format!("  {i}: {a} + {b} -> {t} at {}\n", lcm.target_grid());
    }
    let ids: Vec<&str> = scene.objects.iter().map(|o| o.id.as_str()).collect();
    let report = validate(&graph.lcms, &ids)?;
    out += &format!("connected={} rigid={}\n", report.connected, report.rigid);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

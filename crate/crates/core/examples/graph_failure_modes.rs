//! The two ways an unstructured set of triplets fails to fix a layout.
//!
//! Run with `cargo run --example graph_failure_modes`.

use std::path::Path;

use scene_scaffold::graph::{sample_random_triplets, validate};
use scene_scaffold::localcogmap::{encode_triplet, Point2, TripletIds};
use scene_scaffold::scene::parse_scene;

pub fn run_example() -> anyhow::Result<String> {
    // Random triplets over two distant clusters rarely bridge them.
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/two_clusters.json");
    let scene = parse_scene(&std::fs::read_to_string(path)?)?;
    let lcms = sample_random_triplets(&scene, 3, 0)?;
    let ids: Vec<&str> = scene.objects.iter().map(|o| o.id.as_str()).collect();
    let report = validate(&lcms, &ids)?;
    let mut out = format!("random k=3: connected={} components:\n", report.connected);
    for c in &report.components {
        out += &format!("  {}\n", c.join(" "));
    }

    // Connected through C, but D and E are never placed from known anchors.
    let ids_of = |a, b, t| TripletIds {
        anchor_a: a,
        anchor_b: b,
        target: t,
    };
    let p = Point2::new;
    let lcms = [
        encode_triplet(p(0.0, 0.0), p(0.0, -2.0), p(1.0, -1.0), ids_of("A", "B", "C"))?,
        encode_triplet(p(4.0, 0.0), p(4.0, -2.0), p(1.0, -1.0), ids_of("D", "E", "C"))?,
    ];
    let report = validate(&lcms, &["A", "B", "C", "D", "E"])?;
    out += &format!(
        "shared target: connected={} rigid={} stalled_at={:?}\n",
        report.connected, report.rigid, report.stalled_at
    );
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

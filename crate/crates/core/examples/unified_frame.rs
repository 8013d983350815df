//! Express oriented boxes as 7-DoF boxes in the first camera's frame.
//!
//! Run with `cargo run --example unified_frame`.

use std::path::Path;

use scene_scaffold::geometry::{normalize_scene, wrap_yaw};
use scene_scaffold::scene::parse_scene;

pub fn run_example() -> anyhow::Result<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/camera_plus_y.json");
    let scene = parse_scene(&std::fs::read_to_string(path)?)?;
    let norm = normalize_scene(&scene).map_err(|e| anyhow::anyhow!("{e:?}"))?;
    let f = &norm.frame;
    let mut out = format!("origin {:?}, x axis {:?}, y axis {:?}\n", f.origin, f.x_axis, f.y_axis);
    for (src, o) in scene.objects.iter().zip(&norm.objects) {
        let c = o.bbox.center;
        out += &format!(
            "{}: {:?} -> ({:.2}, {:.2}, {:.2}), yaw {:.4}\n",
            o.id, src.bbox.center, c.x, c.y, c.z, o.bbox.yaw
        );
    }
    out += &format!("wrap_yaw(7.0) = {:.4}\n", wrap_yaw(7.0)?);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

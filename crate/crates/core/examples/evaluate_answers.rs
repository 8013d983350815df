//! Score free-form model answers and write error histograms.
//!
//! Run with `cargo run --example evaluate_answers`.

use scene_scaffold::geometry::Box7DoF;
use scene_scaffold::localcogmap::GridCoord;
use scene_scaffold::metrics::{
    cogmap_error, grounding_errors, parse_box7_answer, parse_grid_answer, write_histogram_csv, GroundingBins,
};
use scene_scaffold::scene::Vec3;

pub fn run_example() -> anyhow::Result<String> {
    let answers = ["The lamp is at [7, 3].", "[8, 4]", "somewhere near the bed", "[6,3]"];
    let truth = GridCoord::new(7, 3)?;
    let mut preds = Vec::new();
    let mut no_parse = 0;
    for a in answers {
        match parse_grid_answer(a) {
            Ok(g) => preds.push(g),
            Err(_) => no_parse += 1,
        }
    }
    let gts = vec![truth; preds.len()];
    let summary = cogmap_error(&preds, &gts, 0.5)?;
    let mut out = format!(
        "cogmap: {} parsed, {no_parse} unparseable, mean {:.4}\n",
        summary.count, summary.mean_error
    );
    out += &write_histogram_csv(&summary);

    let pred = parse_box7_answer("(2.10, 0.00, 0.50, 1.00, 1.10, 0.90, 3.10)")?;
    let gt = Box7DoF::new(Vec3::new(2.0, 0.0, 0.5), [1.0, 1.0, 1.0], -3.1);
    let g = grounding_errors(&[pred], &[gt], GroundingBins::default())?;
    out += &format!(
        "grounding: center {:.3} m, size {:.3} m, yaw {:.4} rad\n",
        g.center.mean_error, g.size.mean_error, g.yaw.mean_error
    );
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

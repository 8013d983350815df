//! Encode a triplet on the 10x10 grid and decode it back.
//!
//! Run with `cargo run --example cogmap_grid`.

use scene_scaffold::localcogmap::{decode_target, encode_triplet, DecodeMode, Point2, TripletIds};

pub fn run_example() -> anyhow::Result<String> {
    let (a, b, t) = (Point2::new(0.0, 0.0), Point2::new(0.0, -2.0), Point2::new(2.0, -2.0));
    let ids = TripletIds {
        anchor_a: "table",
        anchor_b: "sofa",
        target: "lamp",
    };
    let lcm = encode_triplet(a, b, t, ids)?;
    let mut out = format!(
        "anchor A {} / anchor B {} / target {}\n",
        lcm.anchor_a_grid(),
        lcm.anchor_b_grid(),
        lcm.target_grid()
    );

    // Anchors are free to move: the grid only sees the relative layout.
    let (a2, b2) = (Point2::new(10.0, 4.0), Point2::new(14.0, 4.0));
    let back = decode_target(&lcm, a2, b2, DecodeMode::Quantized)?;
    out += &format!("decoded against moved anchors: ({:.2}, {:.2})\n", back.x, back.y);

    let far = encode_triplet(a, b, Point2::new(30.0, 0.0), ids)?;
    out += &format!(
        "far target clamps to {} (out_of_grid = {})\n",
        far.target_grid(),
        far.out_of_grid()
    );
    out += &format!("{}\n", serde_json::to_string(&lcm)?);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

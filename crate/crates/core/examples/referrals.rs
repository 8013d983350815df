//! Unambiguous referring phrases for objects that share a category.
//!
//! Run with `cargo run --example referrals`.

use std::path::Path;

use scene_scaffold::referral::{
    direction_referral, proximity_referral, resolve_referral, temporal_referral, ReferralOutcome,
};
use scene_scaffold::scene::parse_scene;

pub fn run_example() -> anyhow::Result<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/room.json");
    let scene = parse_scene(&std::fs::read_to_string(path)?)?;
    let mut out = String::new();
    let outcomes = [
        proximity_referral(&scene, "chair_0", "table_0")?,
        proximity_referral(&scene, "chair_1", "table_0")?,
        direction_referral(&scene, "chair_2", "door_0", "bed_0")?,
        temporal_referral(&scene, "chair_0")?,
        temporal_referral(&scene, "lamp_1")?,
    ];
    for outcome in outcomes {
        match outcome {
            ReferralOutcome::Accepted(r) => {
                let found = resolve_referral(&scene, &r)?;
                out += &format!("accepted: \"{}\" -> {}\n", r.phrase, found.join(", "));
            }
            ReferralOutcome::Rejected(why) => out += &format!("rejected: {why}\n"),
        }
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

//! Emit scene-graph and grounding QA records as JSONL.
//!
//! Run with `cargo run --example qa_dataset`.

use std::path::Path;

use scene_scaffold::graph::{build_incremental, DEFAULT_DELTA};
use scene_scaffold::qa::{emit_grounding_qa, emit_scenegraph_qa, parse_jsonl, serialize_jsonl};
use scene_scaffold::referral::ReferralKind;
use scene_scaffold::scene::parse_scene;

pub fn run_example() -> anyhow::Result<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/room.json");
    let scene = parse_scene(&std::fs::read_to_string(path)?)?;
    let graph = build_incremental(&scene, DEFAULT_DELTA)?;

    let mut records = emit_scenegraph_qa(&graph, &scene)?;
    let grounding = emit_grounding_qa(&scene, &ReferralKind::DEFAULT_POLICY, 0)?;
    records.extend(grounding.records);
    let jsonl = serialize_jsonl(&records);
    assert_eq!(parse_jsonl(&jsonl)?.len(), records.len());

    let mut out = format!("{} records, {} objects skipped\n", records.len(), grounding.skipped.len());
    for r in parse_jsonl(&jsonl)? {
        out += &format!("{}\n  Q: {}\n  A: {}\n", r.id, r.question, r.answer);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}

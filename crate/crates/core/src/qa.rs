//! Question/answer records for training and evaluation.
//!
//! Scene-graph QA emits one self-contained record per LocalCogMap: the
//! question fixes two anchors on the grid and asks for the target's cell.
//! Grounding QA emits one record per unambiguously referable object, asking
//! for its 7-DoF box in the unified frame.

use std::collections::HashMap;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box9_to_box7, scene_frame, Box7DoF};
use crate::graph::{validate, SceneGraph};
use crate::localcogmap::{GridCoord, ANCHOR_A_CELL, ANCHOR_B_CELL};
use crate::referral::{
    category_label, direction_referral, proximity_referral, resolve_referral, temporal_referral,
    Referral, ReferralKind, ReferralOutcome,
};
use crate::scene::{ObjectRecord, Scene, Vec3};

pub const SCENEGRAPH_TEMPLATE_ID: &str = "scenegraph_qa/v1";
pub const GROUNDING_TEMPLATE_ID: &str = "grounding_qa/v1";

pub const SCENEGRAPH_SYSTEM_CONTEXT: &str = "\
You are looking at a video of an indoor scene. A local cognitive map is a 10x10 \
bird's-eye-view grid whose cells are written [u, v] with u and v from 0 to 9. \
Two anchor objects fix the grid: anchor A occupies [5, 5] and anchor B occupies [5, 3]. \
One grid unit is half the ground distance between the anchors, +v points from anchor B \
toward anchor A, and +u points to the right when looking along +v. \
Your task is to place a target object on this grid. \
Answer with the target's cell as [u, v]; cells beyond the grid are clamped to its border.";

pub const GROUNDING_SYSTEM_CONTEXT: &str = "\
You are looking at a video of an indoor scene. Use the global frame whose origin is the \
camera's optical center in the first frame, whose +x axis is that camera's viewing \
direction projected onto the floor, and whose +z axis points up (right-handed). \
Describe an object by its 3D bounding box (x, y, z, l, w, h, yaw): the box center, \
its length, width and height along its own axes in meters, and its rotation about +z \
in radians within (-pi, pi]. Write every value with two decimals.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    GroundingQa,
    ScenegraphQa,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::GroundingQa => "grounding_qa",
            Task::ScenegraphQa => "scenegraph_qa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroundTruth {
    Grid(GridCoord),
    Box(Box7DoF),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Lcm {
        index: usize,
        anchor_a: String,
        anchor_b: String,
        target: String,
    },
    Object {
        index: usize,
        object_id: String,
        /// `None` when the category has a single instance.
        referral: Option<Referral>,
    },
}

impl Provenance {
    pub fn index(&self) -> usize {
        match self {
            Provenance::Lcm { index, .. } | Provenance::Object { index, .. } => *index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QARecord {
    pub id: String,
    pub scene_id: String,
    pub task: Task,
    pub template_id: String,
    pub system_context: String,
    pub question: String,
    pub answer: String,
    pub ground_truth: GroundTruth,
    pub provenance: Provenance,
}

fn record_id(scene_id: &str, task: Task, index: usize) -> String {
    format!("{scene_id}:{}:{index}", task.name())
}

pub fn format_grid(g: GridCoord) -> String {
    g.to_string()
}

fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

/// Canonical answer for a 7-DoF box: `(x, y, z, l, w, h, yaw)` with two
/// decimals.
pub fn format_box7(b: &Box7DoF) -> String {
    let parts: Vec<String> = b.to_array().iter().map(|&v| fixed2(v)).collect();
    format!("({})", parts.join(", "))
}

/// The box as it reads back from its canonical answer.
pub fn round_box7(b: &Box7DoF) -> Box7DoF {
    let r = |v: f64| fixed2(v).parse::<f64>().expect("formatted float parses");
    Box7DoF {
        center: Vec3::new(r(b.center.x), r(b.center.y), r(b.center.z)),
        size: b.size.map(r),
        yaw: r(b.yaw),
    }
}

fn object_label(obj: &ObjectRecord) -> String {
    format!("{} ({})", category_label(&obj.category), obj.id)
}

/// One record per LCM of a rigid graph.
pub fn emit_scenegraph_qa(graph: &SceneGraph, scene: &Scene) -> Result<Vec<QARecord>> {
    let report = validate(&graph.lcms, &graph.placement_order)?;
    if !report.rigid {
        return Err(Error::NonRigid {
            stalled_at: report.stalled_at.unwrap_or(0),
        });
    }
    let lookup = |id: &str| scene.object(id).ok_or_else(|| Error::UnknownObject(id.to_owned()));
    graph
        .lcms
        .iter()
        .enumerate()
        .map(|(index, lcm)| {
            let (a, b, t) = (
                lookup(lcm.anchor_a())?,
                lookup(lcm.anchor_b())?,
                lookup(lcm.target())?,
            );
            let question = format!(
                "Anchor A is the {} at {ANCHOR_A_CELL}. Anchor B is the {} at {ANCHOR_B_CELL}. \
                 In which cell of the local cognitive map is the {}? Answer as [u, v].",
                object_label(a),
                object_label(b),
                object_label(t),
            );
            Ok(QARecord {
                id: record_id(&graph.scene_id, Task::ScenegraphQa, index),
                scene_id: graph.scene_id.clone(),
                task: Task::ScenegraphQa,
                template_id: SCENEGRAPH_TEMPLATE_ID.to_owned(),
                system_context: SCENEGRAPH_SYSTEM_CONTEXT.to_owned(),
                question,
                answer: format_grid(lcm.target_grid()),
                ground_truth: GroundTruth::Grid(lcm.target_grid()),
                provenance: Provenance::Lcm {
                    index,
                    anchor_a: lcm.anchor_a().to_owned(),
                    anchor_b: lcm.anchor_b().to_owned(),
                    target: lcm.target().to_owned(),
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingBatch {
    pub records: Vec<QARecord>,
    /// Objects without a usable referral, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn try_strategy(
    scene: &Scene,
    kind: ReferralKind,
    target: &ObjectRecord,
    landmarks: &[&ObjectRecord],
    reasons: &mut Vec<String>,
) -> Option<Referral> {
    let mut note = |what: String| reasons.push(format!("{}: {what}", kind.name()));
    match kind {
        ReferralKind::Proximity => {
            for anchor in landmarks {
                match proximity_referral(scene, &target.id, &anchor.id) {
                    Ok(ReferralOutcome::Accepted(r)) => return Some(r),
                    Ok(ReferralOutcome::Rejected(why)) => note(format!("{} -> {why}", anchor.id)),
                    Err(e) => note(e.to_string()),
                }
            }
        }
        ReferralKind::Direction => {
            for pos in landmarks {
                for ori in landmarks {
                    if pos.id == ori.id {
                        continue;
                    }
                    match direction_referral(scene, &target.id, &pos.id, &ori.id) {
                        Ok(ReferralOutcome::Accepted(r)) => return Some(r),
                        Ok(ReferralOutcome::Rejected(why)) => {
                            note(format!("{}/{} -> {why}", pos.id, ori.id))
                        }
                        Err(e) => note(e.to_string()),
                    }
                }
            }
        }
        ReferralKind::Temporal => match temporal_referral(scene, &target.id) {
            Ok(ReferralOutcome::Accepted(r)) => return Some(r),
            Ok(ReferralOutcome::Rejected(why)) => note(why.to_string()),
            Err(e) => note(e.to_string()),
        },
    }
    if landmarks.is_empty() && kind != ReferralKind::Temporal {
        note("no single-instance landmark in scene".into());
    }
    None
}

/// Grounding records for every object that can be referred to
/// unambiguously. Strategies are tried in `policy` order; landmark anchors
/// are objects whose category has a single instance, visited in an order
/// shuffled by `seed`.
pub fn emit_grounding_qa(scene: &Scene, policy: &[ReferralKind], seed: u64) -> Result<GroundingBatch> {
    let frame = scene_frame(scene)?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for o in &scene.objects {
        *counts.entry(o.category.as_str()).or_default() += 1;
    }
    let landmarks: Vec<&ObjectRecord> = scene
        .objects
        .iter()
        .filter(|o| counts[o.category.as_str()] == 1)
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (index, obj) in scene.objects.iter().enumerate() {
        let exact = match box9_to_box7(&frame, &obj.bbox, &obj.id) {
            Ok(b) => b,
            Err(e) => {
                skipped.push((obj.id.clone(), e.to_string()));
                continue;
            }
        };
        let gt = round_box7(&exact);
        if gt.size.iter().any(|&s| s <= 0.0) {
            skipped.push((obj.id.clone(), "extent rounds to zero at answer precision".into()));
            continue;
        }

        let referral = if counts[obj.category.as_str()] == 1 {
            None
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut order = landmarks.clone();
            order.shuffle(&mut rng);
            let mut reasons = Vec::new();
            let found = policy
                .iter()
                .find_map(|&kind| try_strategy(scene, kind, obj, &order, &mut reasons));
            match found {
                Some(r) => {
                    debug_assert_eq!(resolve_referral(scene, &r).ok(), Some(vec![obj.id.clone()]));
                    Some(r)
                }
                None => {
                    let reason = if reasons.is_empty() {
                        "no referral strategy in policy".to_owned()
                    } else {
                        reasons.join("; ")
                    };
                    debug!("scene {}: skipping `{}`: {reason}", scene.scene_id, obj.id);
                    skipped.push((obj.id.clone(), reason));
                    continue;
                }
            }
        };
        let phrase = match &referral {
            Some(r) => r.phrase.clone(),
            None => format!("the {}", category_label(&obj.category)),
        };
        records.push(QARecord {
            id: record_id(&scene.scene_id, Task::GroundingQa, index),
            scene_id: scene.scene_id.clone(),
            task: Task::GroundingQa,
            template_id: GROUNDING_TEMPLATE_ID.to_owned(),
            system_context: GROUNDING_SYSTEM_CONTEXT.to_owned(),
            question: format!(
                "Output the 3D bounding box of {phrase} as (x, y, z, l, w, h, yaw)."
            ),
            answer: format_box7(&gt),
            ground_truth: GroundTruth::Box(gt),
            provenance: Provenance::Object {
                index,
                object_id: obj.id.clone(),
                referral,
            },
        });
    }
    Ok(GroundingBatch { records, skipped })
}

fn sort_key(r: &QARecord) -> (&str, Task, usize) {
    (&r.scene_id, r.task, r.provenance.index())
}

/// One JSON object per line, sorted by (scene, task, provenance index).
pub fn serialize_jsonl(records: &[QARecord]) -> String {
    let mut sorted: Vec<&QARecord> = records.iter().collect();
    sorted.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
        out.push('\n');
    }
    out
}

/// Parses JSONL records. Blank lines and `{"meta": ...}` header lines are
/// skipped.
pub fn parse_jsonl(text: &str) -> Result<Vec<QARecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::Malformed(format!("line {}: {e}", n + 1)))?;
        if value.get("meta").is_some() {
            continue;
        }
        out.push(
            serde_json::from_value(value)
                .map_err(|e| Error::Malformed(format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_incremental;
    use crate::scene::{Box9DoF, CameraFrame, Mat3};

    fn o(id: &str, cat: &str, x: f64, y: f64) -> ObjectRecord {
        ObjectRecord::new(id, cat, Box9DoF::axis_aligned(Vec3::new(x, y, 0.5), [1.0; 3]))
    }

    /// Camera at the origin looking along +x; the unified frame is the
    /// source frame.
    fn identity_camera() -> CameraFrame {
        CameraFrame {
            index: 0,
            rotation: Mat3::from_rows([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
            translation: Vec3::ZERO,
        }
    }

    #[test]
    fn worked_example_answer() {
        let scene = Scene::new(
            "s",
            vec![o("A", "table", 0.0, 0.0), o("B", "sofa", 0.0, -2.0), o("T", "lamp", 2.0, -2.0)],
            None,
        )
        .unwrap();
        let g = build_incremental(&scene, 5.0).unwrap();
        let recs = emit_scenegraph_qa(&g, &scene).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].answer, "[7, 3]");
        assert_eq!(recs[0].id, "s:scenegraph_qa:0");
        assert!(recs[0].question.contains("table (A) at [5, 5]"));
        assert!(recs[0].question.contains("sofa (B) at [5, 3]"));
    }

    #[test]
    fn box_answer_format() {
        let b = Box7DoF::new(Vec3::new(2.0, 0.0, 0.5), [1.0; 3], 0.0);
        assert_eq!(format_box7(&b), "(2.00, 0.00, 0.50, 1.00, 1.00, 1.00, 0.00)");
        let b = Box7DoF::new(Vec3::new(-0.001, 1.234, -2.346), [0.3, 0.004, 1.0], -0.004);
        assert_eq!(format_box7(&b), "(0.00, 1.23, -2.35, 0.30, 0.00, 1.00, 0.00)");
    }

    #[test]
    fn singleton_uses_bare_category() {
        let scene = Scene::new(
            "g",
            vec![{
                let mut x = o("sofa_0", "sofa", 2.0, 0.0);
                x.bbox.center.z = 0.5;
                x
            }],
            Some(vec![identity_camera()]),
        )
        .unwrap();
        let batch = emit_grounding_qa(&scene, &ReferralKind::DEFAULT_POLICY, 0).unwrap();
        assert_eq!(batch.records.len(), 1);
        let r = &batch.records[0];
        assert!(r.question.contains("of the sofa as"));
        assert_eq!(r.answer, "(2.00, 0.00, 0.50, 1.00, 1.00, 1.00, 0.00)");
    }

    #[test]
    fn missing_trajectory() {
        let scene = Scene::new("g", vec![o("a", "sofa", 0.0, 0.0)], None).unwrap();
        assert_eq!(
            emit_grounding_qa(&scene, &ReferralKind::DEFAULT_POLICY, 0),
            Err(Error::MissingTrajectory { scene_id: "g".into() })
        );
    }

    #[test]
    fn jsonl_sorted_and_parseable() {
        assert_eq!(serialize_jsonl(&[]), "");
        let scene = Scene::new(
            "s",
            vec![
                o("a", "x", 0.0, 0.0),
                o("b", "x", 1.0, 0.0),
                o("c", "x", 0.0, 1.0),
                o("d", "x", 1.0, 1.0),
            ],
            None,
        )
        .unwrap();
        let g = build_incremental(&scene, 3.0).unwrap();
        let mut recs = emit_scenegraph_qa(&g, &scene).unwrap();
        let forward = serialize_jsonl(&recs);
        recs.reverse();
        assert_eq!(serialize_jsonl(&recs), forward);
        assert_eq!(forward.lines().count(), 2);
        assert!(forward.ends_with('\n'));
        let with_meta = format!("{{\"meta\":{{\"tool\":\"x\"}}}}\n{forward}");
        recs.reverse();
        assert_eq!(parse_jsonl(&with_meta).unwrap(), recs);
    }
}

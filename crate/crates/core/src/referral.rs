//! Unambiguous referring expressions for grounding questions.
//!
//! Three strategies single out one instance among objects of the same
//! category: distance to a landmark (nearest / furthest), direction relative
//! to a landmark pair (front / right / behind / left), and order of first
//! appearance in the video. Every accepted referral is checked against
//! [`resolve`], which evaluates the same description without knowing the
//! target.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::bev;
use crate::localcogmap::{Point2, MIN_ANCHOR_SEPARATION};
use crate::scene::{center_distance, ObjectRecord, Scene};

/// Relative distance margin the winner must hold over the runner-up.
pub const DISTANCE_MARGIN: f64 = 0.05;
/// Angular margin (degrees) a target must keep from its sector boundaries.
pub const ANGLE_MARGIN_DEG: f64 = 5.0;

const MARGIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferralKind {
    Proximity,
    Direction,
    Temporal,
}

impl ReferralKind {
    pub const DEFAULT_POLICY: [ReferralKind; 3] =
        [ReferralKind::Proximity, ReferralKind::Direction, ReferralKind::Temporal];

    pub fn name(self) -> &'static str {
        match self {
            ReferralKind::Proximity => "proximity",
            ReferralKind::Direction => "direction",
            ReferralKind::Temporal => "temporal",
        }
    }
}

impl std::str::FromStr for ReferralKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proximity" => Ok(ReferralKind::Proximity),
            "direction" => Ok(ReferralKind::Direction),
            "temporal" => Ok(ReferralKind::Temporal),
            other => Err(Error::InvalidField {
                path: "policy".into(),
                detail: format!("unknown referral strategy `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Front,
    Right,
    Behind,
    Left,
}

impl Sector {
    fn phrase(self) -> &'static str {
        match self {
            Sector::Front => "in front of",
            Sector::Right => "to the right of",
            Sector::Behind => "behind",
            Sector::Left => "to the left of",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    Nearest,
    Furthest,
    Direction(Sector),
    Ordinal(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Referral {
    pub kind: ReferralKind,
    pub target_id: String,
    pub category: String,
    pub anchor_ids: Vec<String>,
    pub qualifier: Qualifier,
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    /// Only one instance of the category: no qualifier is needed.
    Singleton,
    AmbiguousMargin { margin: f64 },
    NotExtreme,
    SharedSector { sector: Sector, other: String },
    BoundaryProximity { degrees: f64 },
    CoincidentAnchors,
    /// Target sits on the position anchor in the ground plane.
    UndefinedDirection,
    TiedFirstFrame { frame: u64 },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Singleton => write!(f, "only instance of its category"),
            Rejection::AmbiguousMargin { margin } => {
                write!(f, "distance margin {:.1}% below {:.0}%", margin * 100.0, DISTANCE_MARGIN * 100.0)
            }
            Rejection::NotExtreme => write!(f, "neither nearest nor furthest"),
            Rejection::SharedSector { sector, other } => {
                write!(f, "sector {sector:?} shared with `{other}`")
            }
            Rejection::BoundaryProximity { degrees } => {
                write!(f, "{degrees:.2} deg from a sector boundary")
            }
            Rejection::CoincidentAnchors => write!(f, "anchors coincide"),
            Rejection::UndefinedDirection => write!(f, "target coincides with the position anchor"),
            Rejection::TiedFirstFrame { frame } => write!(f, "first appearance tied at frame {frame}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferralOutcome {
    Accepted(Referral),
    Rejected(Rejection),
}

impl ReferralOutcome {
    pub fn accepted(self) -> Option<Referral> {
        match self {
            ReferralOutcome::Accepted(r) => Some(r),
            ReferralOutcome::Rejected(_) => None,
        }
    }
}

fn get<'a>(scene: &'a Scene, id: &str) -> Result<&'a ObjectRecord> {
    scene.object(id).ok_or_else(|| Error::UnknownObject(id.to_owned()))
}

/// Human-readable category name.
pub fn category_label(category: &str) -> String {
    category.replace('_', " ")
}

fn instances<'a>(scene: &'a Scene, category: &str, exclude: &[&str]) -> Vec<&'a ObjectRecord> {
    scene
        .objects
        .iter()
        .filter(|o| o.category == category && !exclude.contains(&o.id.as_str()))
        .collect()
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m > 0.0 {
        (a - b).abs() / m
    } else {
        0.0
    }
}

fn distinguishable(a: f64, b: f64) -> bool {
    relative_gap(a, b) >= DISTANCE_MARGIN - MARGIN_SLACK
}

/// Refers to `target_id` as the nearest or furthest instance of its category
/// from `anchor_id`.
pub fn proximity_referral(scene: &Scene, target_id: &str, anchor_id: &str) -> Result<ReferralOutcome> {
    if target_id == anchor_id {
        return Err(Error::InvalidReferralIds);
    }
    let target = get(scene, target_id)?;
    let anchor = get(scene, anchor_id)?;
    let mut ranked: Vec<(f64, &ObjectRecord)> = instances(scene, &target.category, &[anchor_id])
        .into_iter()
        .map(|o| (center_distance(o, anchor), o))
        .collect();
    if ranked.len() < 2 {
        return Ok(ReferralOutcome::Rejected(Rejection::Singleton));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    let last = ranked.len() - 1;
    let (qualifier, margin) = if ranked[0].1.id == target_id {
        (Qualifier::Nearest, relative_gap(ranked[0].0, ranked[1].0))
    } else if ranked[last].1.id == target_id {
        (Qualifier::Furthest, relative_gap(ranked[last].0, ranked[last - 1].0))
    } else {
        return Ok(ReferralOutcome::Rejected(Rejection::NotExtreme));
    };
    if margin < DISTANCE_MARGIN - MARGIN_SLACK {
        return Ok(ReferralOutcome::Rejected(Rejection::AmbiguousMargin { margin }));
    }
    let rel = if qualifier == Qualifier::Nearest {
        "nearest to"
    } else {
        "furthest from"
    };
    Ok(ReferralOutcome::Accepted(Referral {
        kind: ReferralKind::Proximity,
        target_id: target_id.to_owned(),
        category: target.category.clone(),
        anchor_ids: vec![anchor_id.to_owned()],
        qualifier,
        phrase: format!(
            "the {} {} the {}",
            category_label(&target.category),
            rel,
            category_label(&anchor.category)
        ),
    }))
}

/// Signed angle (radians, counter-clockwise positive) of `d` relative to
/// `front`.
fn signed_angle(front: Point2, d: Point2) -> f64 {
    let cross = front.x * d.y - front.y * d.x;
    cross.atan2(front.dot(d))
}

/// Sector of a relative angle and its distance (degrees) to the nearest
/// sector boundary.
fn sector_of(angle: f64) -> (Sector, f64) {
    let deg = angle.to_degrees();
    if deg.abs() <= 45.0 {
        (Sector::Front, 45.0 - deg.abs())
    } else if deg.abs() >= 135.0 {
        (Sector::Behind, deg.abs() - 135.0)
    } else if deg > 0.0 {
        (Sector::Left, (deg - 45.0).min(135.0 - deg))
    } else {
        (Sector::Right, (-45.0 - deg).min(deg + 135.0))
    }
}

/// Direction frame from the position anchor toward the orientation anchor;
/// `None` when the anchors coincide in BEV.
fn front_direction(pos: &ObjectRecord, ori: &ObjectRecord) -> Option<(Point2, Point2)> {
    let (p, o) = (bev(pos), bev(ori));
    let d = o - p;
    let len = d.norm();
    (len >= MIN_ANCHOR_SEPARATION).then(|| (p, d * (1.0 / len)))
}

/// Sector of `obj` around the anchor pair; `None` if it sits on the
/// position anchor.
fn object_sector(origin: Point2, front: Point2, obj: &ObjectRecord) -> Option<(Sector, f64)> {
    let d = bev(obj) - origin;
    (d.norm() >= MIN_ANCHOR_SEPARATION).then(|| sector_of(signed_angle(front, d)))
}

/// Refers to `target_id` by the 90-degree sector it occupies when standing
/// at the position anchor and facing the orientation anchor.
pub fn direction_referral(
    scene: &Scene,
    target_id: &str,
    position_anchor_id: &str,
    orientation_anchor_id: &str,
) -> Result<ReferralOutcome> {
    if target_id == position_anchor_id
        || target_id == orientation_anchor_id
        || position_anchor_id == orientation_anchor_id
    {
        return Err(Error::InvalidReferralIds);
    }
    let target = get(scene, target_id)?;
    let pos = get(scene, position_anchor_id)?;
    let ori = get(scene, orientation_anchor_id)?;
    let Some((origin, front)) = front_direction(pos, ori) else {
        return Ok(ReferralOutcome::Rejected(Rejection::CoincidentAnchors));
    };
    let Some((sector, boundary)) = object_sector(origin, front, target) else {
        return Ok(ReferralOutcome::Rejected(Rejection::UndefinedDirection));
    };
    if boundary < ANGLE_MARGIN_DEG - MARGIN_SLACK {
        return Ok(ReferralOutcome::Rejected(Rejection::BoundaryProximity { degrees: boundary }));
    }
    let exclude = [target_id, position_anchor_id, orientation_anchor_id];
    for other in instances(scene, &target.category, &exclude) {
        let shared = match object_sector(origin, front, other) {
            Some((s, _)) => s == sector,
            None => true,
        };
        if shared {
            return Ok(ReferralOutcome::Rejected(Rejection::SharedSector {
                sector,
                other: other.id.clone(),
            }));
        }
    }
    Ok(ReferralOutcome::Accepted(Referral {
        kind: ReferralKind::Direction,
        target_id: target_id.to_owned(),
        category: target.category.clone(),
        anchor_ids: vec![position_anchor_id.to_owned(), orientation_anchor_id.to_owned()],
        qualifier: Qualifier::Direction(sector),
        phrase: format!(
            "the {} {} the {} when facing the {}",
            category_label(&target.category),
            sector.phrase(),
            category_label(&pos.category),
            category_label(&ori.category)
        ),
    }))
}

fn ordinal_word(k: u32) -> String {
    const WORDS: [&str; 10] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    ];
    match WORDS.get(k as usize - 1) {
        Some(w) => (*w).to_owned(),
        None => {
            let suffix = match (k % 10, k % 100) {
                (1, n) if n != 11 => "st",
                (2, n) if n != 12 => "nd",
                (3, n) if n != 13 => "rd",
                _ => "th",
            };
            format!("{k}{suffix}")
        }
    }
}

fn first_frames<'a>(scene: &'a Scene, category: &str) -> Result<Vec<(u64, &'a ObjectRecord)>> {
    instances(scene, category, &[])
        .into_iter()
        .map(|o| {
            o.first_frame
                .map(|f| (f, o))
                .ok_or_else(|| Error::MissingFirstFrame { id: o.id.clone() })
        })
        .collect()
}

/// Refers to `target_id` by the order in which instances of its category
/// first appear in the video.
pub fn temporal_referral(scene: &Scene, target_id: &str) -> Result<ReferralOutcome> {
    let target = get(scene, target_id)?;
    let mut frames = first_frames(scene, &target.category)?;
    frames.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        return Ok(ReferralOutcome::Rejected(Rejection::TiedFirstFrame { frame: w[0].0 }));
    }
    let rank = frames
        .iter()
        .position(|(_, o)| o.id == target_id)
        .expect("target is an instance of its own category") as u32
        + 1;
    Ok(ReferralOutcome::Accepted(Referral {
        kind: ReferralKind::Temporal,
        target_id: target_id.to_owned(),
        category: target.category.clone(),
        anchor_ids: Vec::new(),
        qualifier: Qualifier::Ordinal(rank),
        phrase: format!(
            "the {} {} to appear in the video",
            ordinal_word(rank),
            category_label(&target.category)
        ),
    }))
}

/// Evaluates a referral description (kind, qualifier, category, anchors)
/// against the scene and returns every object that fits it, sorted by id.
/// An unambiguous description yields exactly one id.
pub fn resolve(
    scene: &Scene,
    kind: ReferralKind,
    qualifier: Qualifier,
    category: &str,
    anchor_ids: &[String],
) -> Result<Vec<String>> {
    let anchors: Vec<&ObjectRecord> = anchor_ids.iter().map(|id| get(scene, id)).collect::<Result<_>>()?;
    let exclude: Vec<&str> = anchor_ids.iter().map(String::as_str).collect();
    let mut out: Vec<String> = match (kind, qualifier, anchors.as_slice()) {
        (ReferralKind::Proximity, Qualifier::Nearest | Qualifier::Furthest, [anchor]) => {
            let dists: Vec<(f64, &ObjectRecord)> = instances(scene, category, &exclude)
                .into_iter()
                .map(|o| (center_distance(o, anchor), o))
                .collect();
            let pick = |ord: Ordering| {
                dists
                    .iter()
                    .map(|d| d.0)
                    .reduce(|a, b| if b.total_cmp(&a) == ord { b } else { a })
            };
            let extreme = match qualifier {
                Qualifier::Nearest => pick(Ordering::Less),
                _ => pick(Ordering::Greater),
            };
            match extreme {
                Some(e) => dists
                    .iter()
                    .filter(|(d, _)| !distinguishable(*d, e))
                    .map(|(_, o)| o.id.clone())
                    .collect(),
                None => Vec::new(),
            }
        }
        (ReferralKind::Direction, Qualifier::Direction(sector), [pos, ori]) => {
            let Some((origin, front)) = front_direction(pos, ori) else {
                return Ok(Vec::new());
            };
            instances(scene, category, &exclude)
                .into_iter()
                .filter(|o| object_sector(origin, front, o).is_none_or(|(s, _)| s == sector))
                .map(|o| o.id.clone())
                .collect()
        }
        (ReferralKind::Temporal, Qualifier::Ordinal(k), []) => {
            let mut frames: Vec<u64> = first_frames(scene, category)?.iter().map(|f| f.0).collect();
            frames.sort_unstable();
            match frames.get(k as usize - 1) {
                Some(&f) => first_frames(scene, category)?
                    .into_iter()
                    .filter(|(g, _)| *g == f)
                    .map(|(_, o)| o.id.clone())
                    .collect(),
                None => Vec::new(),
            }
        }
        _ => {
            return Err(Error::SchemaMismatch(format!(
                "qualifier {qualifier:?} with {} anchors does not fit a {} referral",
                anchor_ids.len(),
                kind.name()
            )))
        }
    };
    out.sort();
    Ok(out)
}

pub fn resolve_referral(scene: &Scene, r: &Referral) -> Result<Vec<String>> {
    resolve(scene, r.kind, r.qualifier, &r.category, &r.anchor_ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Box9DoF, Vec3};

    fn o(id: &str, cat: &str, x: f64, y: f64) -> ObjectRecord {
        ObjectRecord::new(id, cat, Box9DoF::axis_aligned(Vec3::new(x, y, 0.0), [0.5; 3]))
    }

    fn scene(objects: Vec<ObjectRecord>) -> Scene {
        Scene::new("r", objects, None).unwrap()
    }

    fn polar(deg: f64, r: f64) -> (f64, f64) {
        let a = deg.to_radians();
        (r * a.cos(), r * a.sin())
    }

    #[test]
    fn nearest_with_clear_margin() {
        let s = scene(vec![
            o("table", "table", 0.0, 0.0),
            o("c1", "chair", 1.0, 0.0),
            o("c2", "chair", 0.0, 3.0),
        ]);
        let r = proximity_referral(&s, "c1", "table").unwrap().accepted().unwrap();
        assert_eq!(r.qualifier, Qualifier::Nearest);
        assert_eq!(r.phrase, "the chair nearest to the table");
        assert_eq!(resolve_referral(&s, &r).unwrap(), ["c1"]);
        let r = proximity_referral(&s, "c2", "table").unwrap().accepted().unwrap();
        assert_eq!(r.qualifier, Qualifier::Furthest);
        assert_eq!(resolve_referral(&s, &r).unwrap(), ["c2"]);
    }

    #[test]
    fn near_tie_is_ambiguous() {
        let s = scene(vec![
            o("table", "table", 0.0, 0.0),
            o("c1", "chair", 2.0, 0.0),
            o("c2", "chair", 0.0, 2.02),
        ]);
        // 0.02 / 2.02 < 5%
        const { assert!(0.02 / 2.02 < DISTANCE_MARGIN) };
        match proximity_referral(&s, "c1", "table").unwrap() {
            ReferralOutcome::Rejected(Rejection::AmbiguousMargin { margin }) => {
                assert!((margin - 0.02 / 2.02).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singleton_and_middle() {
        let s = scene(vec![o("table", "table", 0.0, 0.0), o("c1", "chair", 2.0, 0.0)]);
        assert_eq!(
            proximity_referral(&s, "c1", "table").unwrap(),
            ReferralOutcome::Rejected(Rejection::Singleton)
        );
        let s = scene(vec![
            o("table", "table", 0.0, 0.0),
            o("c1", "chair", 1.0, 0.0),
            o("c2", "chair", 2.0, 0.0),
            o("c3", "chair", 3.0, 0.0),
        ]);
        assert_eq!(
            proximity_referral(&s, "c2", "table").unwrap(),
            ReferralOutcome::Rejected(Rejection::NotExtreme)
        );
        assert_eq!(proximity_referral(&s, "c2", "c2"), Err(Error::InvalidReferralIds));
        assert_eq!(
            proximity_referral(&s, "c2", "nope"),
            Err(Error::UnknownObject("nope".into()))
        );
    }

    fn direction_scene(targets: &[(&str, f64)]) -> Scene {
        let mut objects = vec![o("bed", "bed", 0.0, 0.0), o("door", "door", 5.0, 0.0)];
        for &(id, deg) in targets {
            let (x, y) = polar(deg, 2.0);
            objects.push(o(id, "chair", x, y));
        }
        scene(objects)
    }

    #[test]
    fn direction_axis_case() {
        let s = direction_scene(&[("c1", 0.0), ("c2", 180.0)]);
        let r = direction_referral(&s, "c1", "bed", "door").unwrap().accepted().unwrap();
        assert_eq!(r.qualifier, Qualifier::Direction(Sector::Front));
        assert_eq!(r.phrase, "the chair in front of the bed when facing the door");
        assert_eq!(resolve_referral(&s, &r).unwrap(), ["c1"]);
    }

    #[test]
    fn direction_sides() {
        let s = direction_scene(&[("l", 90.0), ("r", -90.0), ("b", 170.0)]);
        let q = |id| {
            direction_referral(&s, id, "bed", "door")
                .unwrap()
                .accepted()
                .unwrap()
                .qualifier
        };
        assert_eq!(q("l"), Qualifier::Direction(Sector::Left));
        assert_eq!(q("r"), Qualifier::Direction(Sector::Right));
        assert_eq!(q("b"), Qualifier::Direction(Sector::Behind));
    }

    #[test]
    fn direction_boundary_proximity() {
        let s = direction_scene(&[("c1", 44.0), ("c2", 180.0)]);
        match direction_referral(&s, "c1", "bed", "door").unwrap() {
            ReferralOutcome::Rejected(Rejection::BoundaryProximity { degrees }) => {
                assert!((degrees - 1.0).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
        let s = direction_scene(&[("c1", 40.0), ("c2", 180.0)]);
        assert!(direction_referral(&s, "c1", "bed", "door").unwrap().accepted().is_some());
    }

    #[test]
    fn direction_shared_sector() {
        // Oracle: atan2 puts both 10 and 30 degrees inside (-45, 45].
        for deg in [10.0f64, 30.0] {
            let (x, y) = polar(deg, 2.0);
            assert!(y.atan2(x).to_degrees().abs() < 45.0);
        }
        let s = direction_scene(&[("c1", 10.0), ("c2", 30.0)]);
        assert!(matches!(
            direction_referral(&s, "c1", "bed", "door").unwrap(),
            ReferralOutcome::Rejected(Rejection::SharedSector { sector: Sector::Front, .. })
        ));
    }

    #[test]
    fn direction_degenerate_inputs() {
        let s = scene(vec![
            o("bed", "bed", 0.0, 0.0),
            o("rug", "rug", 0.0, 0.0),
            o("c1", "chair", 1.0, 0.0),
        ]);
        assert_eq!(
            direction_referral(&s, "c1", "bed", "rug").unwrap(),
            ReferralOutcome::Rejected(Rejection::CoincidentAnchors)
        );
        let s = scene(vec![
            o("bed", "bed", 0.0, 0.0),
            o("door", "door", 1.0, 0.0),
            o("c1", "chair", 0.0, 0.0),
        ]);
        assert_eq!(
            direction_referral(&s, "c1", "bed", "door").unwrap(),
            ReferralOutcome::Rejected(Rejection::UndefinedDirection)
        );
        assert_eq!(direction_referral(&s, "c1", "bed", "bed"), Err(Error::InvalidReferralIds));
    }

    #[test]
    fn temporal_cases() {
        let s = scene(vec![
            o("c1", "chair", 0.0, 0.0).with_first_frame(40),
            o("c2", "chair", 1.0, 0.0).with_first_frame(10),
            o("t", "table", 2.0, 0.0).with_first_frame(7),
        ]);
        let r = temporal_referral(&s, "c2").unwrap().accepted().unwrap();
        assert_eq!(r.qualifier, Qualifier::Ordinal(1));
        assert_eq!(r.phrase, "the first chair to appear in the video");
        assert_eq!(resolve_referral(&s, &r).unwrap(), ["c2"]);
        let r = temporal_referral(&s, "c1").unwrap().accepted().unwrap();
        assert_eq!(r.qualifier, Qualifier::Ordinal(2));
        let r = temporal_referral(&s, "t").unwrap().accepted().unwrap();
        assert_eq!(r.qualifier, Qualifier::Ordinal(1));

        let tied = scene(vec![
            o("c1", "chair", 0.0, 0.0).with_first_frame(25),
            o("c2", "chair", 1.0, 0.0).with_first_frame(25),
        ]);
        assert_eq!(
            temporal_referral(&tied, "c1").unwrap(),
            ReferralOutcome::Rejected(Rejection::TiedFirstFrame { frame: 25 })
        );
        let missing = scene(vec![
            o("c1", "chair", 0.0, 0.0).with_first_frame(25),
            o("c2", "chair", 1.0, 0.0),
        ]);
        assert_eq!(
            temporal_referral(&missing, "c1"),
            Err(Error::MissingFirstFrame { id: "c2".into() })
        );
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal_word(1), "first");
        assert_eq!(ordinal_word(10), "tenth");
        assert_eq!(ordinal_word(11), "11th");
        assert_eq!(ordinal_word(22), "22nd");
        assert_eq!(ordinal_word(103), "103rd");
    }
}

//! Local cognitive maps: a 10x10 bird's-eye-view grid fixed by two anchor
//! objects, encoding the relative position of a third (target) object.
//!
//! Grid construction for anchors `a`, `b` and target `t` (all BEV points):
//!
//! * cell size `s = |b - a| / 2`, so anchor B sits two cells from anchor A;
//! * `v_hat = (a - b) / |a - b|` is the grid +v direction;
//! * `u_hat` is `v_hat` rotated -90 degrees, giving a positively oriented
//!   `(u_hat, v_hat)` basis;
//! * `t` maps to `(5, 5) + ((t - a).u_hat / s, (t - a).v_hat / s)`.
//!
//! Anchor A is always at cell (5, 5) and anchor B at (5, 3).

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_SIZE: u8 = 10;
pub const GRID_MAX: f64 = (GRID_SIZE - 1) as f64;
pub const ANCHOR_A_CELL: GridCoord = GridCoord { u: 5, v: 5 };
pub const ANCHOR_B_CELL: GridCoord = GridCoord { u: 5, v: 3 };
/// Minimum ground-plane separation between the two anchors, meters.
pub const MIN_ANCHOR_SEPARATION: f64 = 1e-6;

/// A bird's-eye-view point (meters, or grid units for continuous cells).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Clockwise quarter turn.
    pub fn rot_cw(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i64; 2]", into = "[i64; 2]")]
pub struct GridCoord {
    pub u: u8,
    pub v: u8,
}

impl GridCoord {
    pub fn new(u: i64, v: i64) -> Result<Self> {
        let range = 0..i64::from(GRID_SIZE);
        if range.contains(&u) && range.contains(&v) {
            Ok(Self {
                u: u as u8,
                v: v as u8,
            })
        } else {
            Err(Error::OutOfRange { u, v })
        }
    }

    pub fn as_point(self) -> Point2 {
        Point2::new(f64::from(self.u), f64::from(self.v))
    }

    pub fn distance(self, o: GridCoord) -> f64 {
        self.as_point().distance(o.as_point())
    }
}

impl TryFrom<[i64; 2]> for GridCoord {
    type Error = Error;
    fn try_from(a: [i64; 2]) -> Result<Self> {
        GridCoord::new(a[0], a[1])
    }
}

impl From<GridCoord> for [i64; 2] {
    fn from(g: GridCoord) -> Self {
        [i64::from(g.u), i64::from(g.v)]
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.u, self.v)
    }
}

/// Rounds half away from zero and clamps each component to [0, 9]. The flag
/// is set when the unrounded value lies outside [0, 9].
pub fn quantize(cont: Point2) -> Result<(GridCoord, bool)> {
    if !cont.is_finite() {
        return Err(Error::NonFinite("grid coordinate"));
    }
    let out = |c: f64| !(0.0..=GRID_MAX).contains(&c);
    let cell = |c: f64| c.round().clamp(0.0, GRID_MAX) as i64;
    let coord = GridCoord::new(cell(cont.x), cell(cont.y))?;
    Ok((coord, out(cont.x) || out(cont.y)))
}

/// Local frame of a LocalCogMap expressed in BEV world coordinates.
#[derive(Debug, Clone, Copy)]
struct GridFrame {
    origin: Point2,
    u_hat: Point2,
    v_hat: Point2,
    cell: f64,
}

impl GridFrame {
    fn new(a: Point2, b: Point2) -> Result<Self> {
        let d = a - b;
        let sep = d.norm();
        if sep.is_nan() || sep < MIN_ANCHOR_SEPARATION {
            return Err(Error::CoincidentAnchors { separation: sep });
        }
        let v_hat = d * (1.0 / sep);
        Ok(Self {
            origin: a,
            u_hat: v_hat.rot_cw(),
            v_hat,
            cell: sep / 2.0,
        })
    }

    fn grid_point(&self, p: Point2) -> Point2 {
        let d = p - self.origin;
        let a = ANCHOR_A_CELL.as_point();
        Point2::new(
            a.x + d.dot(self.u_hat) / self.cell,
            a.y + d.dot(self.v_hat) / self.cell,
        )
    }

    fn world_point(&self, g: Point2) -> Point2 {
        let a = ANCHOR_A_CELL.as_point();
        self.origin + (self.u_hat * (g.x - a.x) + self.v_hat * (g.y - a.y)) * self.cell
    }
}

/// One (anchor, anchor, target) triplet on the 10x10 grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LcmDoc", into = "LcmDoc")]
pub struct LocalCogMap {
    anchor_a: String,
    anchor_b: String,
    target: String,
    target_grid: GridCoord,
    target_grid_continuous: Point2,
    out_of_grid: bool,
}

impl LocalCogMap {
    pub fn anchor_a(&self) -> &str {
        &self.anchor_a
    }

    pub fn anchor_b(&self) -> &str {
        &self.anchor_b
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn anchor_a_grid(&self) -> GridCoord {
        ANCHOR_A_CELL
    }

    pub fn anchor_b_grid(&self) -> GridCoord {
        ANCHOR_B_CELL
    }

    pub fn target_grid(&self) -> GridCoord {
        self.target_grid
    }

    pub fn target_grid_continuous(&self) -> Point2 {
        self.target_grid_continuous
    }

    pub fn out_of_grid(&self) -> bool {
        self.out_of_grid
    }

    /// The three ids as (anchor A, anchor B, target).
    pub fn ids(&self) -> [&str; 3] {
        [&self.anchor_a, &self.anchor_b, &self.target]
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LcmDoc {
    anchor_a: String,
    anchor_b: String,
    target: String,
    target_grid: GridCoord,
    target_grid_continuous: Point2,
    out_of_grid: bool,
}

impl TryFrom<LcmDoc> for LocalCogMap {
    type Error = Error;
    fn try_from(d: LcmDoc) -> Result<Self> {
        check_distinct(&d.anchor_a, &d.anchor_b, &d.target)?;
        let (grid, out) = quantize(d.target_grid_continuous)?;
        if grid != d.target_grid || out != d.out_of_grid {
            return Err(Error::InvalidField {
                path: "target_grid".into(),
                detail: format!(
                    "{} / out_of_grid={} is inconsistent with continuous ({}, {})",
                    d.target_grid, d.out_of_grid, d.target_grid_continuous.x, d.target_grid_continuous.y
                ),
            });
        }
        Ok(LocalCogMap {
            anchor_a: d.anchor_a,
            anchor_b: d.anchor_b,
            target: d.target,
            target_grid: grid,
            target_grid_continuous: d.target_grid_continuous,
            out_of_grid: out,
        })
    }
}

impl From<LocalCogMap> for LcmDoc {
    fn from(l: LocalCogMap) -> Self {
        LcmDoc {
            anchor_a: l.anchor_a,
            anchor_b: l.anchor_b,
            target: l.target,
            target_grid: l.target_grid,
            target_grid_continuous: l.target_grid_continuous,
            out_of_grid: l.out_of_grid,
        }
    }
}

fn check_distinct(a: &str, b: &str, t: &str) -> Result<()> {
    if a == b || a == t || b == t {
        return Err(Error::RepeatedIds(a.into(), b.into(), t.into()));
    }
    Ok(())
}

/// Object ids for one triplet.
#[derive(Debug, Clone, Copy)]
pub struct TripletIds<'a> {
    pub anchor_a: &'a str,
    pub anchor_b: &'a str,
    pub target: &'a str,
}

/// Encodes the target's position relative to two anchors.
pub fn encode_triplet(
    anchor_a: Point2,
    anchor_b: Point2,
    target: Point2,
    ids: TripletIds<'_>,
) -> Result<LocalCogMap> {
    check_distinct(ids.anchor_a, ids.anchor_b, ids.target)?;
    if !(anchor_a.is_finite() && anchor_b.is_finite() && target.is_finite()) {
        return Err(Error::NonFinite("BEV point"));
    }
    let frame = GridFrame::new(anchor_a, anchor_b)?;
    let cont = frame.grid_point(target);
    let (grid, out) = quantize(cont)?;
    Ok(LocalCogMap {
        anchor_a: ids.anchor_a.to_owned(),
        anchor_b: ids.anchor_b.to_owned(),
        target: ids.target.to_owned(),
        target_grid: grid,
        target_grid_continuous: cont,
        out_of_grid: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Decode the quantized cell.
    #[default]
    Quantized,
    /// Decode the unrounded grid position.
    Continuous,
}

/// Inverts [`encode_triplet`]: recovers the target's BEV position from the
/// anchors' positions.
pub fn decode_target(
    lcm: &LocalCogMap,
    anchor_a: Point2,
    anchor_b: Point2,
    mode: DecodeMode,
) -> Result<Point2> {
    let frame = GridFrame::new(anchor_a, anchor_b)?;
    let g = match mode {
        DecodeMode::Quantized => lcm.target_grid.as_point(),
        DecodeMode::Continuous => lcm.target_grid_continuous,
    };
    Ok(frame.world_point(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDS: TripletIds<'static> = TripletIds {
        anchor_a: "a",
        anchor_b: "b",
        target: "t",
    };

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    /// Independent hand construction: rotate the world so that B->A points
    /// along +v, scale by half the anchor distance, and shift A to (5, 5).
    fn oracle_continuous(a: Point2, b: Point2, t: Point2) -> Point2 {
        let ang = (a.y - b.y).atan2(a.x - b.x);
        // rotate by (pi/2 - ang) so that B->A lands on +y
        let rot = std::f64::consts::FRAC_PI_2 - ang;
        let (s, c) = rot.sin_cos();
        let d = t - a;
        let r = p(c * d.x - s * d.y, s * d.x + c * d.y);
        let cell = a.distance(b) / 2.0;
        p(5.0 + r.x / cell, 5.0 + r.y / cell)
    }

    #[test]
    fn worked_example() {
        let (a, b, t) = (p(0.0, 0.0), p(0.0, -2.0), p(2.0, -2.0));
        let o = oracle_continuous(a, b, t);
        assert!((o.x - 7.0).abs() < 1e-12 && (o.y - 3.0).abs() < 1e-12);
        let lcm = encode_triplet(a, b, t, IDS).unwrap();
        assert_eq!(lcm.anchor_a_grid(), GridCoord { u: 5, v: 5 });
        assert_eq!(lcm.anchor_b_grid(), GridCoord { u: 5, v: 3 });
        assert_eq!(lcm.target_grid(), GridCoord { u: 7, v: 3 });
        assert!(!lcm.out_of_grid());
        assert_eq!(lcm.target_grid().to_string(), "[7, 3]");

        let back = decode_target(&lcm, a, b, DecodeMode::Quantized).unwrap();
        assert!(back.distance(t) < 1e-12);
    }

    #[test]
    fn anchor_b_lands_on_its_cell() {
        let (a, b) = (p(3.0, 1.0), p(-2.0, 4.0));
        let lcm = encode_triplet(a, b, b, IDS).unwrap();
        let c = lcm.target_grid_continuous();
        assert!((c.x - 5.0).abs() < 1e-12 && (c.y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn target_on_anchor_a() {
        let lcm = encode_triplet(p(1.0, 1.0), p(4.0, 5.0), p(1.0, 1.0), IDS).unwrap();
        assert_eq!(lcm.target_grid(), ANCHOR_A_CELL);
        assert!(!lcm.out_of_grid());
        let back = decode_target(&lcm, p(1.0, 1.0), p(4.0, 5.0), DecodeMode::Quantized).unwrap();
        assert_eq!(back, p(1.0, 1.0));
    }

    #[test]
    fn far_target_is_clamped_and_flagged() {
        let (a, b, t) = (p(0.0, 0.0), p(0.0, -2.0), p(20.0, 0.0));
        let o = oracle_continuous(a, b, t);
        let lcm = encode_triplet(a, b, t, IDS).unwrap();
        let c = lcm.target_grid_continuous();
        assert!((c.x - 25.0).abs() < 1e-12 && (c.y - 5.0).abs() < 1e-12);
        assert!((o.x - c.x).abs() < 1e-12 && (o.y - c.y).abs() < 1e-12);
        assert_eq!(lcm.target_grid(), GridCoord { u: 9, v: 5 });
        assert!(lcm.out_of_grid());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(p(5.0, 5.0)).unwrap(), (GridCoord { u: 5, v: 5 }, false));
        // Oracle: half away from zero, independent of f64::round.
        let half_away = |x: f64| (x.abs() + 0.5).floor().copysign(x);
        assert_eq!((half_away(7.5), half_away(2.49)), (8.0, 2.0));
        assert_eq!(quantize(p(7.5, 2.49)).unwrap(), (GridCoord { u: 8, v: 2 }, false));
        assert_eq!(quantize(p(-1.2, 4.0)).unwrap(), (GridCoord { u: 0, v: 4 }, true));
        assert_eq!(quantize(p(9.3, 0.0)).unwrap(), (GridCoord { u: 9, v: 0 }, true));
        assert!(quantize(p(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn coincident_anchors_and_repeated_ids() {
        assert!(matches!(
            encode_triplet(p(1.0, 1.0), p(1.0, 1.0 + 1e-8), p(0.0, 0.0), IDS),
            Err(Error::CoincidentAnchors { .. })
        ));
        let ids = TripletIds {
            anchor_a: "a",
            anchor_b: "a",
            target: "t",
        };
        assert!(matches!(
            encode_triplet(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), ids),
            Err(Error::RepeatedIds(..))
        ));
        let lcm = encode_triplet(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), IDS).unwrap();
        assert!(decode_target(&lcm, p(0.0, 0.0), p(0.0, 0.0), DecodeMode::Continuous).is_err());
    }

    #[test]
    fn json_shape_and_validation() {
        let lcm = encode_triplet(p(0.0, 0.0), p(0.0, -2.0), p(2.0, -2.0), IDS).unwrap();
        let v = serde_json::to_value(&lcm).unwrap();
        assert_eq!(v["anchor_a"], "a");
        assert_eq!(v["target_grid"], serde_json::json!([7, 3]));
        assert_eq!(v["out_of_grid"], false);
        let back: LocalCogMap = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, lcm);

        let mut bad = v.clone();
        bad["target_grid"] = serde_json::json!([6, 3]);
        assert!(serde_json::from_value::<LocalCogMap>(bad).is_err());
        let mut bad = v;
        bad["target_grid"] = serde_json::json!([10, 3]);
        assert!(serde_json::from_value::<LocalCogMap>(bad).is_err());
    }
}

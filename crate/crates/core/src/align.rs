//! Least-squares 2D similarity alignment between two labelled layouts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localcogmap::Point2;

/// `p -> scale * R(rotation) * p + translation`, never a reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity2 {
    pub scale: f64,
    pub rotation: f64,
    pub translation: Point2,
}

impl Similarity2 {
    pub const IDENTITY: Similarity2 = Similarity2 {
        scale: 1.0,
        rotation: 0.0,
        translation: Point2::new(0.0, 0.0),
    };

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.rotation.sin_cos();
        Point2::new(
            self.scale * (c * p.x - s * p.y) + self.translation.x,
            self.scale * (s * p.x + c * p.y) + self.translation.y,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// Maps `layout_a` onto `layout_b`.
    pub transform: Similarity2,
    /// Root-mean-square distance between transformed `a` and `b`.
    pub rms: f64,
}

const VARIANCE_EPS: f64 = 1e-18;

/// Finds the similarity that best maps `layout_a` onto `layout_b`.
///
/// Treating points as complex numbers, the optimal map for centered layouts
/// is multiplication by `z = sum(conj(a_i) * b_i) / sum(|a_i|^2)`.
pub fn procrustes_align(
    layout_a: &BTreeMap<String, Point2>,
    layout_b: &BTreeMap<String, Point2>,
) -> Result<Alignment> {
    if layout_a.len() != layout_b.len() || layout_a.keys().zip(layout_b.keys()).any(|(x, y)| x != y) {
        return Err(Error::MismatchedIds);
    }
    if layout_a.len() < 2 {
        return Err(Error::DegenerateAlignment);
    }
    let pairs: Vec<(Point2, Point2)> = layout_a
        .values()
        .zip(layout_b.values())
        .map(|(&a, &b)| (a, b))
        .collect();
    let n = pairs.len() as f64;
    let mean = |f: fn(&(Point2, Point2)) -> Point2| {
        let s = pairs.iter().map(f).fold(Point2::default(), |acc, p| acc + p);
        s * (1.0 / n)
    };
    let ma = mean(|p| p.0);
    let mb = mean(|p| p.1);

    let (mut var_a, mut var_b, mut re, mut im) = (0.0, 0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        let (a, b) = (a - ma, b - mb);
        var_a += a.dot(a);
        var_b += b.dot(b);
        // conj(a) * b
        re += a.x * b.x + a.y * b.y;
        im += a.x * b.y - a.y * b.x;
    }
    if var_a < VARIANCE_EPS || var_b < VARIANCE_EPS {
        return Err(Error::DegenerateAlignment);
    }
    let (zr, zi) = (re / var_a, im / var_a);
    let rotated_mean = Point2::new(zr * ma.x - zi * ma.y, zi * ma.x + zr * ma.y);
    let transform = Similarity2 {
        scale: zr.hypot(zi),
        rotation: zi.atan2(zr),
        translation: mb - rotated_mean,
    };
    let sse: f64 = pairs
        .iter()
        .map(|&(a, b)| {
            let d = transform.apply(a) - b;
            d.dot(d)
        })
        .sum();
    Ok(Alignment {
        transform,
        rms: (sse / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(points: &[(f64, f64)]) -> BTreeMap<String, Point2> {
        points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (format!("o{i}"), Point2::new(x, y)))
            .collect()
    }

    fn triangle() -> BTreeMap<String, Point2> {
        layout(&[(0.0, 0.0), (2.0, 0.0), (0.5, 1.5)])
    }

    #[test]
    fn identical_layouts() {
        let a = triangle();
        let al = procrustes_align(&a, &a).unwrap();
        assert!(al.rms < 1e-12);
        assert!((al.transform.scale - 1.0).abs() < 1e-12);
        assert!(al.transform.rotation.abs() < 1e-12);
        assert!(al.transform.translation.norm() < 1e-12);
    }

    #[test]
    fn recovers_rotation_and_scale() {
        let a = triangle();
        let t = Similarity2 {
            scale: 2.0,
            rotation: std::f64::consts::FRAC_PI_2,
            translation: Point2::new(3.0, -1.0),
        };
        let b: BTreeMap<_, _> = a.iter().map(|(k, &p)| (k.clone(), t.apply(p))).collect();
        let al = procrustes_align(&a, &b).unwrap();
        assert!(al.rms < 1e-9);
        assert!((al.transform.scale - 2.0).abs() < 1e-12);
        assert!((al.transform.rotation - t.rotation).abs() < 1e-12);
    }

    /// Oracle: scan rotation angles, fitting scale and translation in
    /// closed form for each, and keep the best residual.
    fn scan_rms(a: &BTreeMap<String, Point2>, b: &BTreeMap<String, Point2>) -> f64 {
        let pa: Vec<Point2> = a.values().copied().collect();
        let pb: Vec<Point2> = b.values().copied().collect();
        let n = pa.len() as f64;
        let mut best = f64::INFINITY;
        let steps = 200_000;
        for i in 0..steps {
            let th = i as f64 / steps as f64 * std::f64::consts::TAU;
            let (s, c) = th.sin_cos();
            let ra: Vec<Point2> = pa.iter().map(|p| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)).collect();
            let ma = ra.iter().fold(Point2::default(), |acc, &p| acc + p) * (1.0 / n);
            let mb = pb.iter().fold(Point2::default(), |acc, &p| acc + p) * (1.0 / n);
            let num: f64 = ra.iter().zip(&pb).map(|(&x, &y)| (x - ma).dot(y - mb)).sum();
            let den: f64 = ra.iter().map(|&x| (x - ma).dot(x - ma)).sum();
            let scale = (num / den).max(0.0);
            let sse: f64 = ra
                .iter()
                .zip(&pb)
                .map(|(&x, &y)| {
                    let d = (x - ma) * scale - (y - mb);
                    d.dot(d)
                })
                .sum();
            best = best.min((sse / n).sqrt());
        }
        best
    }

    #[test]
    fn mirror_is_not_recoverable() {
        let a = triangle();
        let b: BTreeMap<_, _> = a.iter().map(|(k, p)| (k.clone(), Point2::new(-p.x, p.y))).collect();
        let al = procrustes_align(&a, &b).unwrap();
        let oracle = scan_rms(&a, &b);
        assert!(oracle > 0.1);
        assert!(al.rms > 0.1);
        assert!((al.rms - oracle).abs() < 1e-6, "{} vs {}", al.rms, oracle);
    }

    #[test]
    fn noisy_layout_matches_scan_oracle() {
        let a = layout(&[(0.0, 0.0), (1.0, 0.2), (2.5, -1.0), (0.3, 3.0), (-1.0, 1.0)]);
        let b = layout(&[(5.1, 1.0), (5.0, 2.9), (7.2, 4.1), (1.4, 1.9), (3.0, -0.1)]);
        let al = procrustes_align(&a, &b).unwrap();
        assert!((al.rms - scan_rms(&a, &b)).abs() < 1e-6);
    }

    #[test]
    fn error_cases() {
        let a = triangle();
        let mut b = triangle();
        b.insert("extra".into(), Point2::new(0.0, 0.0));
        assert_eq!(procrustes_align(&a, &b), Err(Error::MismatchedIds));
        let flat = layout(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]);
        assert_eq!(procrustes_align(&flat, &a), Err(Error::DegenerateAlignment));
        let one = layout(&[(0.0, 0.0)]);
        assert_eq!(procrustes_align(&one, &one), Err(Error::DegenerateAlignment));
    }
}

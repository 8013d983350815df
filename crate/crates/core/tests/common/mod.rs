//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scene_scaffold::scene::{parse_scene, Box9DoF, ObjectRecord, Scene, Vec3};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> Scene {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    parse_scene(&text).unwrap()
}

/// `n` unit boxes with centers uniform in a disk of radius `diameter / 2`,
/// so every pairwise distance is at most `diameter`.
pub fn random_scene(seed: u64, n: usize, diameter: f64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = diameter / 2.0;
    let objects = (0..n)
        .map(|i| {
            let r = r_max * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let c = Vec3::new(r * th.cos(), r * th.sin(), rng.gen_range(0.2..1.5));
            let yaw = rng.gen_range(-3.0..3.0);
            ObjectRecord::new(format!("obj_{i:02}"), "thing", Box9DoF::with_yaw(c, [0.5, 0.4, 0.3], yaw))
        })
        .collect();
    Scene::new(format!("random_{seed}"), objects, None).unwrap()
}

/// Brute-force count of triplets with every pairwise 3D center distance at
/// most `delta`.
pub fn count_feasible_triplets(scene: &Scene, delta: f64) -> usize {
    let c: Vec<Vec3> = scene.objects.iter().map(|o| o.bbox.center).collect();
    let mut count = 0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            for k in j + 1..c.len() {
                let d = [c[i].distance(c[j]), c[j].distance(c[k]), c[i].distance(c[k])];
                if d.iter().all(|&x| x <= delta) {
                    count += 1;
                }
            }
        }
    }
    count
}

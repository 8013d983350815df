//! Scene graphs as chains of LocalCogMaps.
//!
//! [`build_incremental`] seeds the graph with one compact triplet and then
//! attaches every remaining object to its two nearest already-placed
//! objects, so each new position follows from two known anchors. The
//! exhaustive and random-sampling builders exist as baselines and as test
//! oracles; [`validate`] detects the two ways an arbitrary set of triplets
//! fails to pin down a layout (disconnected, or connected but not rigid).

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localcogmap::{
    decode_target, encode_triplet, DecodeMode, LocalCogMap, Point2, TripletIds,
    MIN_ANCHOR_SEPARATION,
};
use crate::scene::{ObjectRecord, Scene};

pub const DEFAULT_DELTA: f64 = 3.0;
/// Largest scene accepted by [`exhaustive_triplets`].
pub const EXHAUSTIVE_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub scene_id: String,
    /// Seed threshold used by [`build_incremental`]; absent for graphs built
    /// another way.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub placement_order: Vec<String>,
    pub lcms: Vec<LocalCogMap>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub rigid: bool,
    pub components: Vec<Vec<String>>,
    pub stalled_at: Option<usize>,
}

/// Ground-plane position of an object's box center.
///
/// LocalCogMaps are invariant under rotations about +z and translations, so
/// source-frame and unified-frame BEV positions produce identical maps.
pub fn bev(obj: &ObjectRecord) -> Point2 {
    let c = obj.center();
    Point2::new(c.x, c.y)
}

struct Layout<'a> {
    objects: Vec<&'a ObjectRecord>,
    points: Vec<Point2>,
    dist: Vec<Vec<f64>>,
}

impl<'a> Layout<'a> {
    /// Objects sorted by id, with a dense distance matrix.
    fn new(scene: &'a Scene) -> Self {
        let mut objects: Vec<&ObjectRecord> = scene.objects.iter().collect();
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        let points = objects.iter().map(|o| bev(o)).collect();
        let dist = objects
            .iter()
            .map(|a| objects.iter().map(|b| a.center().distance(b.center())).collect())
            .collect();
        Self {
            objects,
            points,
            dist,
        }
    }

    fn len(&self) -> usize {
        self.objects.len()
    }

    fn id(&self, i: usize) -> &'a str {
        &self.objects[i].id
    }

    fn diameter(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dist[i][j].max(self.dist[j][k]).max(self.dist[i][k])
    }

    fn separated(&self, i: usize, j: usize) -> bool {
        self.points[i].distance(self.points[j]) >= MIN_ANCHOR_SEPARATION
    }

    fn encode(&self, a: usize, b: usize, t: usize) -> Result<LocalCogMap> {
        encode_triplet(
            self.points[a],
            self.points[b],
            self.points[t],
            TripletIds {
                anchor_a: self.id(a),
                anchor_b: self.id(b),
                target: self.id(t),
            },
        )
    }

    /// LCM for a sorted triplet `i < j < k`. The two smallest ids are the
    /// anchors; if they are stacked in the ground plane the next role
    /// assignment is used. `None` when all three coincide in BEV.
    fn triplet_lcm(&self, i: usize, j: usize, k: usize) -> Option<LocalCogMap> {
        [(i, j, k), (i, k, j), (j, k, i)]
            .into_iter()
            .find(|&(a, b, _)| self.separated(a, b))
            .map(|(a, b, t)| self.encode(a, b, t).expect("anchors checked for separation"))
    }
}

fn check_size(scene: &Scene) -> Result<()> {
    match scene.objects.len() {
        n if n < 3 => Err(Error::TooFewObjects(n)),
        _ => Ok(()),
    }
}

/// Incremental scene graph generation.
///
/// The seed triplet is the first triplet in lexicographic id order whose
/// diameter is at most `delta` (or, if none qualifies, the triplet with the
/// smallest diameter). Each following step picks the unplaced object
/// closest to the placed set and anchors it on its two nearest placed
/// objects, the nearer one becoming anchor A.
pub fn build_incremental(scene: &Scene, delta: f64) -> Result<SceneGraph> {
    check_size(scene)?;
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidDelta(delta));
    }
    let layout = Layout::new(scene);
    let n = layout.len();

    let mut seed = None;
    let mut fallback: Option<(f64, LocalCogMap, [usize; 3])> = None;
    'search: for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let diam = layout.diameter(i, j, k);
                let feasible = diam <= delta;
                if !feasible && fallback.as_ref().is_some_and(|f| f.0 <= diam) {
                    continue;
                }
                let Some(lcm) = layout.triplet_lcm(i, j, k) else {
                    continue;
                };
                if feasible {
                    seed = Some((lcm, [i, j, k]));
                    break 'search;
                }
                fallback = Some((diam, lcm, [i, j, k]));
            }
        }
    }
    let (first, members) = match (seed, fallback) {
        (Some(s), _) => s,
        (None, Some((diam, lcm, m))) => {
            debug!(
                "scene {}: no triplet within delta={delta}, seeding with diameter {diam:.3}",
                scene.scene_id
            );
            (lcm, m)
        }
        (None, None) => return Err(Error::DegenerateLayout),
    };

    let mut placed = vec![false; n];
    let mut placement_order: Vec<String> = first.ids().iter().map(|s| s.to_string()).collect();
    let mut lcms = vec![first];
    let mut nearest = vec![f64::INFINITY; n];
    let place = |v: usize, placed: &mut Vec<bool>, nearest: &mut Vec<f64>| {
        placed[v] = true;
        for (u, d) in nearest.iter_mut().enumerate() {
            *d = d.min(layout.dist[u][v]);
        }
    };
    for m in members {
        place(m, &mut placed, &mut nearest);
    }

    while placement_order.len() < n {
        // Ties resolve to the smaller id since indices follow id order.
        let u = (0..n)
            .filter(|&u| !placed[u])
            .min_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(a.cmp(&b)))
            .expect("an unplaced object remains");
        let placed_ids: Vec<usize> = (0..n).filter(|&v| placed[v]).collect();
        let (a, b) = nearest_anchor_pair(&layout, u, &placed_ids).ok_or(Error::DegenerateLayout)?;
        lcms.push(layout.encode(a, b, u)?);
        placement_order.push(layout.id(u).to_owned());
        place(u, &mut placed, &mut nearest);
    }

    Ok(SceneGraph {
        scene_id: scene.scene_id.clone(),
        delta: Some(delta),
        placement_order,
        lcms,
    })
}

/// Pair of placed objects minimizing the summed distance to `u`, nearer
/// first. Pairs stacked in the ground plane are skipped.
fn nearest_anchor_pair(layout: &Layout<'_>, u: usize, inside: &[usize]) -> Option<(usize, usize)> {
    let mut cand = inside.to_vec();
    cand.sort_by(|&a, &b| {
        layout.dist[u][a]
            .total_cmp(&layout.dist[u][b])
            .then(a.cmp(&b))
    });
    if cand.len() >= 2 && layout.separated(cand[0], cand[1]) {
        return Some((cand[0], cand[1]));
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for p in 0..cand.len() {
        for q in p + 1..cand.len() {
            let (a, b) = (cand[p], cand[q]);
            if !layout.separated(a, b) {
                continue;
            }
            let sum = layout.dist[u][a] + layout.dist[u][b];
            if best.is_none_or(|(s, _, _)| sum < s) {
                best = Some((sum, a, b));
            }
        }
    }
    best.map(|(_, a, b)| (a, b))
}

/// Every triplet whose diameter is at most `delta`, in lexicographic id
/// order, with the two smallest ids as anchors. Cubic in the number of
/// objects.
pub fn exhaustive_triplets(scene: &Scene, delta: f64) -> Result<Vec<LocalCogMap>> {
    check_size(scene)?;
    let n = scene.objects.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let layout = Layout::new(scene);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if layout.diameter(i, j, k) > delta {
                    continue;
                }
                match layout.triplet_lcm(i, j, k) {
                    Some(lcm) => out.push(lcm),
                    None => debug!(
                        "skipping triplet ({}, {}, {}): all three coincide in BEV",
                        layout.id(i),
                        layout.id(j),
                        layout.id(k)
                    ),
                }
            }
        }
    }
    Ok(out)
}

fn choose3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn choose2(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        n * (n - 1) / 2
    }
}

/// Triplet at position `rank` of the lexicographic enumeration of
/// `i < j < k < n`.
fn unrank_triplet(mut rank: usize, n: usize) -> [usize; 3] {
    let mut i = 0;
    while rank >= choose2(n - 1 - i) {
        rank -= choose2(n - 1 - i);
        i += 1;
    }
    let mut j = i + 1;
    while rank >= n - 1 - j {
        rank -= n - 1 - j;
        j += 1;
    }
    [i, j, j + 1 + rank]
}

/// `k` triplets drawn uniformly without replacement from all C(N, 3)
/// triplets (all of them when `k` is at least that), returned in
/// lexicographic order. Deterministic for a given seed.
pub fn sample_random_triplets(scene: &Scene, k: usize, seed: u64) -> Result<Vec<LocalCogMap>> {
    check_size(scene)?;
    let layout = Layout::new(scene);
    let n = layout.len();
    let total = choose3(n);
    let mut ranks: Vec<usize> = if k >= total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, total, k).into_vec()
    };
    ranks.sort_unstable();
    Ok(ranks
        .into_iter()
        .filter_map(|r| {
            let [i, j, k] = unrank_triplet(r, n);
            layout.triplet_lcm(i, j, k)
        })
        .collect())
}

/// Connectivity and rigidity of a set of LCMs over `object_ids`.
///
/// Rigidity is checked by simulated placement: starting from one seed LCM
/// (all three members placed), any LCM whose two anchors are placed places
/// its target. Every LCM is tried as the seed. When no seed reaches every
/// object, `stalled_at` is the lowest-index LCM the best seed never applied
/// (or `lcms.len()` if it applied them all and objects remain uncovered).
pub fn validate<S: AsRef<str>>(lcms: &[LocalCogMap], object_ids: &[S]) -> Result<ValidationReport> {
    let ids: BTreeSet<&str> = object_ids.iter().map(|s| s.as_ref()).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = index.len();
    let mut tri = Vec::with_capacity(lcms.len());
    for lcm in lcms {
        let mut t = [0usize; 3];
        for (slot, id) in t.iter_mut().zip(lcm.ids()) {
            *slot = *index.get(id).ok_or_else(|| Error::UnknownObject(id.to_owned()))?;
        }
        tri.push(t);
    }

    // Connectivity via union-find over hyperedges.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in &tri {
        for &m in &t[1..] {
            let (ra, rb) = (find(&mut parent, t[0]), find(&mut parent, m));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let names: Vec<&str> = ids.iter().copied().collect();
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(name.to_string());
    }
    let components: Vec<Vec<String>> = groups.into_values().collect();
    let connected = components.len() == 1;

    // Rigidity via simulated two-anchor placement from every seed.
    let mut by_anchor: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (l, t) in tri.iter().enumerate() {
        by_anchor[t[0]].push(l);
        by_anchor[t[1]].push(l);
    }
    let mut best: Option<(usize, Vec<bool>)> = None;
    for seed in 0..tri.len() {
        let (count, applied) = propagate(&tri, &by_anchor, n, seed);
        if count == n {
            return Ok(ValidationReport {
                connected,
                rigid: true,
                components,
                stalled_at: None,
            });
        }
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            best = Some((count, applied));
        }
    }
    let stalled_at = match best {
        Some((_, applied)) => applied.iter().position(|a| !a).unwrap_or(tri.len()),
        None => 0,
    };
    Ok(ValidationReport {
        connected,
        rigid: false,
        components,
        stalled_at: Some(stalled_at),
    })
}

fn propagate(tri: &[[usize; 3]], by_anchor: &[Vec<usize>], n: usize, seed: usize) -> (usize, Vec<bool>) {
    let mut placed = vec![false; n];
    let mut anchors_placed = vec![0u8; tri.len()];
    let mut applied = vec![false; tri.len()];
    let mut queue: Vec<usize> = Vec::new();
    let mut count = 0;
    applied[seed] = true;
    for &m in &tri[seed] {
        if !placed[m] {
            placed[m] = true;
            count += 1;
            queue.push(m);
        }
    }
    while let Some(v) = queue.pop() {
        for &l in &by_anchor[v] {
            anchors_placed[l] += 1;
            if anchors_placed[l] == 2 && !applied[l] {
                applied[l] = true;
                let t = tri[l][2];
                if !placed[t] {
                    placed[t] = true;
                    count += 1;
                    queue.push(t);
                }
            }
        }
    }
    (count, applied)
}

/// Recovers BEV positions for every object of a rigid graph by decoding its
/// LCMs in order. The first LCM's anchors are pinned at (0, 0) and (0, -2),
/// i.e. one meter per grid cell; the result matches the true layout up to
/// a similarity transform. If quantization merges the two anchors of a
/// later LCM, its target is placed on them (the zero-cell-size limit).
pub fn reconstruct(graph: &SceneGraph, mode: DecodeMode) -> Result<BTreeMap<String, Point2>> {
    let report = validate(&graph.lcms, &graph.placement_order)?;
    if !report.rigid {
        return Err(Error::NonRigid {
            stalled_at: report.stalled_at.unwrap_or(0),
        });
    }
    let first = &graph.lcms[0];
    let mut pos: BTreeMap<String, Point2> = BTreeMap::new();
    let (a0, b0) = (Point2::new(0.0, 0.0), Point2::new(0.0, -2.0));
    pos.insert(first.anchor_a().to_owned(), a0);
    pos.insert(first.anchor_b().to_owned(), b0);
    pos.insert(first.target().to_owned(), decode_target(first, a0, b0, mode)?);
    for (index, lcm) in graph.lcms.iter().enumerate().skip(1) {
        let anchor = |id: &str| {
            pos.get(id).copied().ok_or_else(|| Error::MissingAnchor {
                index,
                id: id.to_owned(),
            })
        };
        let (a, b) = (anchor(lcm.anchor_a())?, anchor(lcm.anchor_b())?);
        let t = if a.distance(b) < MIN_ANCHOR_SEPARATION {
            // Rounded positions can merge two anchors. The cell size is then
            // zero, so every grid offset collapses onto the anchors.
            debug!("{}: anchors of LCM {index} coincide after decoding", graph.scene_id);
            a
        } else {
            decode_target(lcm, a, b, mode)?
        };
        pos.entry(lcm.target().to_owned()).or_insert(t);
    }
    Ok(pos)
}

/// BEV layout of a scene keyed by object id.
pub fn scene_layout(scene: &Scene) -> BTreeMap<String, Point2> {
    scene.objects.iter().map(|o| (o.id.clone(), bev(o))).collect()
}

/// Orders triplets as sorted id triples, for role-independent comparison.
pub fn triplet_key(lcm: &LocalCogMap) -> [String; 3] {
    let mut ids = lcm.ids().map(str::to_owned);
    ids.sort();
    ids
}

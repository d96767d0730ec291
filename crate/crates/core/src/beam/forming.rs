//! Turning clusters into beams and measuring sector coverage.

use serde::{Deserialize, Serialize};

use crate::clustering::{run_clustering, ClusteringConfig};
use crate::geometry::{wrap_angle, Point2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Pointing angle from the gNB, radians.
    pub boresight: f64,
    /// Full angular width of the served sector, radians.
    pub width: f64,
    /// UE ids served by this beam, ascending.
    pub members: Vec<usize>,
    pub rbg_count: usize,
}

/// A cluster as seen by beam formation: its center and the positions that
/// were clustered (reported or expected positions, never the true ones).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCluster {
    pub center: Point2D,
    pub members: Vec<(usize, Point2D)>,
}

impl BeamCluster {
    pub fn from_labels(
        ids: &[usize],
        positions: &[Point2D],
        labels: &[usize],
        centers: &[Point2D],
    ) -> Vec<BeamCluster> {
        let mut out: Vec<BeamCluster> =
            centers.iter().map(|c| BeamCluster { center: *c, members: Vec::new() }).collect();
        for ((id, p), &l) in ids.iter().zip(positions).zip(labels) {
            out[l].members.push((*id, *p));
        }
        out
    }

    fn angular_spread(&self, gnb: Point2D) -> f64 {
        if self.members.len() < 2 {
            return 0.0;
        }
        let axis = self.center.angle_from(gnb);
        let (lo, hi) = self.members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, p)| {
            let off = wrap_angle(p.angle_from(gnb) - axis);
            (lo.min(off), hi.max(off))
        });
        hi - lo
    }

    fn recenter(&mut self) {
        let n = self.members.len() as f64;
        self.center = self.members.iter().fold(Point2D::ORIGIN, |a, (_, p)| a + *p) * (1.0 / n);
    }
}

/// Builds `n_beams` beams from clusters.
///
/// Extra beams come from splitting the cluster with the widest angular spread
/// into two (K-means, k = 2) until the count matches or no cluster has two
/// members left. Surplus clusters are merged pairwise, always joining the two
/// beams whose boresights are angularly closest. Empty clusters are dropped.
pub fn form_beams(clusters: &[BeamCluster], gnb: Point2D, width: f64, n_beams: usize, rbg_count: usize) -> Vec<Beam> {
    let mut work: Vec<BeamCluster> = clusters.iter().filter(|c| !c.members.is_empty()).cloned().collect();
    let n_beams = n_beams.max(1);

    while work.len() < n_beams {
        let mut widest: Option<(usize, f64)> = None;
        for (i, c) in work.iter().enumerate() {
            if c.members.len() < 2 {
                continue;
            }
            let spread = c.angular_spread(gnb);
            if widest.is_none_or(|(_, s)| spread > s) {
                widest = Some((i, spread));
            }
        }
        let Some((i, _)) = widest else { break };
        let (a, b) = split_in_two(&work[i]);
        work[i] = a;
        work.insert(i + 1, b);
    }

    while work.len() > n_beams {
        let mut closest = (0, 1, f64::INFINITY);
        for i in 0..work.len() {
            for j in i + 1..work.len() {
                let d = wrap_angle(work[i].center.angle_from(gnb) - work[j].center.angle_from(gnb)).abs();
                if d < closest.2 {
                    closest = (i, j, d);
                }
            }
        }
        let (i, j, _) = closest;
        let absorbed = work.remove(j);
        work[i].members.extend(absorbed.members);
        work[i].recenter();
    }

    work.into_iter()
        .map(|c| {
            let mut members: Vec<usize> = c.members.iter().map(|(id, _)| *id).collect();
            members.sort_unstable();
            Beam { boresight: c.center.angle_from(gnb), width, members, rbg_count }
        })
        .collect()
}

fn split_in_two(cluster: &BeamCluster) -> (BeamCluster, BeamCluster) {
    let pts: Vec<Point2D> = cluster.members.iter().map(|(_, p)| *p).collect();
    let result = run_clustering(&pts, &ClusteringConfig::new(2)).expect("cluster has at least two members");
    let mut halves = [
        BeamCluster { center: result.centers[0], members: Vec::new() },
        BeamCluster { center: result.centers[1], members: Vec::new() },
    ];
    for (m, &l) in cluster.members.iter().zip(&result.labels) {
        halves[l].members.push(*m);
    }
    // Coincident members can leave one half empty; fall back to an index split.
    if halves.iter().any(|h| h.members.is_empty()) {
        let mid = cluster.members.len() / 2;
        halves[0].members = cluster.members[..mid].to_vec();
        halves[1].members = cluster.members[mid..].to_vec();
    }
    for h in &mut halves {
        h.recenter();
    }
    let [a, b] = halves;
    (a, b)
}

/// True when `pos` lies inside the beam's sector (inclusive edge) and the cell.
pub fn is_covered(beam: &Beam, pos: Point2D, gnb: Point2D, cell_radius: f64) -> bool {
    pos.dist(gnb) <= cell_radius && wrap_angle(pos.angle_from(gnb) - beam.boresight).abs() <= beam.width / 2.0
}

/// Fraction of positions covered by at least one beam. An empty population
/// counts as fully covered.
pub fn coverage_rate(beams: &[Beam], positions: &[Point2D], gnb: Point2D, cell_radius: f64) -> f64 {
    if positions.is_empty() {
        return 1.0;
    }
    let covered = positions.iter().filter(|p| beams.iter().any(|b| is_covered(b, **p, gnb, cell_radius))).count();
    covered as f64 / positions.len() as f64
}

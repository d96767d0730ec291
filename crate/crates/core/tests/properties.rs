use beamsim_core::agent::{reward, TrafficClass};
use beamsim_core::beam::{beam_gain, coverage_rate, AntennaConfig, Beam};
use beamsim_core::clustering::{run_clustering, run_clustering_observed, ClusteringConfig, InitStrategy};
use beamsim_core::geometry::{Point2D, UncertainPoint, UncertaintyPdf};
use beamsim_core::traffic::PacketQueue;
use proptest::prelude::*;

fn point(range: f64) -> impl Strategy<Value = Point2D> {
    (-range..range, -range..range).prop_map(|(x, y)| Point2D::new(x, y))
}

fn disk() -> impl Strategy<Value = UncertaintyPdf> {
    (point(200.0), 0.0..30.0f64).prop_map(|(c, r)| UncertaintyPdf::uniform_disk(c, r).unwrap())
}

fn sample_based() -> impl Strategy<Value = UncertaintyPdf> {
    prop::collection::vec((point(200.0), 0.01..1.0f64), 1..6).prop_map(|v| {
        let total: f64 = v.iter().map(|(_, w)| w).sum();
        let (samples, weights) = v.into_iter().map(|(p, w)| (p, w / total)).unzip();
        UncertaintyPdf::sample_based(samples, weights).unwrap()
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn disks_instance() -> impl Strategy<Value = (Vec<UncertainPoint>, usize)> {
    (prop::collection::vec(disk(), 3..40), 1..6usize).prop_map(|(pdfs, k)| {
        let k = k.min(pdfs.len());
        (pdfs.into_iter().enumerate().map(|(i, p)| UncertainPoint::new(i, p).unwrap()).collect(), k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shift_invariance(pdf in prop_oneof![disk(), sample_based()], c in point(300.0), v in point(500.0)) {
        let a = pdf.expected_sq_distance(c);
        let b = pdf.translate(v).expected_sq_distance(c + v);
        prop_assert!(rel_close(a, b, 1e-9) || (a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn disk_decomposition(pdf in disk(), c in point(300.0)) {
        let UncertaintyPdf::UniformDisk { center, radius } = pdf else { unreachable!() };
        let excess = pdf.expected_sq_distance(c) - center.dist_sq(c);
        let want = radius * radius / 2.0;
        prop_assert!((excess - want).abs() <= 1e-12 * pdf.expected_sq_distance(c).max(1.0), "{excess} vs {want}");
    }

    #[test]
    fn zero_radius_is_plain_distance(mu in point(300.0), c in point(300.0)) {
        let pdf = UncertaintyPdf::uniform_disk(mu, 0.0).unwrap();
        prop_assert_eq!(pdf.expected_sq_distance(c).to_bits(), mu.dist_sq(c).to_bits());
    }

    #[test]
    fn bias_variance_split(pdf in sample_based(), c in point(300.0)) {
        // E|x - c|^2 = |E x - c|^2 + E|x - E x|^2 for any distribution
        let m = pdf.expected_position();
        let spread = pdf.expected_sq_distance(m);
        let direct = pdf.expected_sq_distance(c);
        prop_assert!(rel_close(direct, m.dist_sq(c) + spread, 1e-9) || (direct - m.dist_sq(c) - spread).abs() < 1e-9);
    }

    #[test]
    fn lloyd_objective_never_increases((data, k) in disks_instance(), seed in any::<u64>(), random in any::<bool>()) {
        let cfg = ClusteringConfig {
            seed,
            init_strategy: if random { InitStrategy::RandomPoints } else { InitStrategy::FarthestFirst },
            ..ClusteringConfig::new(k)
        };
        let mut objectives = Vec::new();
        run_clustering_observed(&data, &cfg, None, |r| objectives.push(r.objective)).unwrap();
        for w in objectives.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn clustering_is_deterministic((data, k) in disks_instance(), seed in any::<u64>()) {
        let cfg = ClusteringConfig { seed, init_strategy: InitStrategy::RandomPoints, ..ClusteringConfig::new(k) };
        prop_assert_eq!(run_clustering(&data, &cfg).unwrap(), run_clustering(&data, &cfg).unwrap());
    }

    #[test]
    fn uniform_disks_degenerate_to_kmeans((data, k) in disks_instance(), seed in any::<u64>(), random in any::<bool>()) {
        let cfg = ClusteringConfig {
            seed,
            init_strategy: if random { InitStrategy::RandomPoints } else { InitStrategy::FarthestFirst },
            ..ClusteringConfig::new(k)
        };
        let centers: Vec<Point2D> = data.iter().map(|p| p.expected_position()).collect();
        let mut uk = Vec::new();
        let mut km = Vec::new();
        run_clustering_observed(&data, &cfg, None, |r| uk.push(r.labels.clone())).unwrap();
        run_clustering_observed(&centers, &cfg, None, |r| km.push(r.labels.clone())).unwrap();
        prop_assert_eq!(uk, km);
    }

    #[test]
    fn permutation_equivariance(points in prop::collection::vec(point(200.0), 4..30), k in 1..5usize, rot in 0..1000usize) {
        let k = k.min(points.len());
        let n = points.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let permuted: Vec<Point2D> = perm.iter().map(|&i| points[i]).collect();
        let cfg = ClusteringConfig::new(k);
        let a = run_clustering(&points, &cfg).unwrap();
        let b = run_clustering(&permuted, &cfg).unwrap();
        prop_assert!(rel_close(a.objective, b.objective, 1e-9) || (a.objective - b.objective).abs() < 1e-9);
        // same partition: permuted point j sits with point perm[j]
        for i in 0..n {
            for j in 0..n {
                let together_a = a.labels[perm[i]] == a.labels[perm[j]];
                let together_b = b.labels[i] == b.labels[j];
                prop_assert_eq!(together_a, together_b);
            }
        }
    }

    #[test]
    fn coverage_rotation_invariance(
        positions in prop::collection::vec(point(150.0), 1..12),
        boresights in prop::collection::vec(-3.1..3.1f64, 1..6),
        width_deg in 1.0..60.0f64,
        theta in -3.1..3.1f64,
    ) {
        let width = width_deg.to_radians();
        let beams: Vec<Beam> = boresights.iter().map(|&b| Beam { boresight: b, width, members: vec![], rbg_count: 1 }).collect();
        let rot_beams: Vec<Beam> = beams.iter().map(|b| Beam { boresight: b.boresight + theta, ..b.clone() }).collect();
        let rot_pos: Vec<Point2D> = positions.iter().map(|p| p.rotate_about(Point2D::ORIGIN, theta)).collect();
        // keep clear of sector edges and the cell boundary, where rounding decides
        let margin = 1e-9;
        let clear = positions.iter().all(|p| {
            (p.norm() - 160.0).abs() > margin
                && boresights.iter().all(|&b| {
                    let off = beamsim_core::geometry::wrap_angle(p.angle_from(Point2D::ORIGIN) - b).abs();
                    (off - width / 2.0).abs() > margin
                })
        });
        prop_assume!(clear);
        prop_assert_eq!(
            coverage_rate(&beams, &positions, Point2D::ORIGIN, 160.0),
            coverage_rate(&rot_beams, &rot_pos, Point2D::ORIGIN, 160.0)
        );
    }

    #[test]
    fn adding_a_beam_never_reduces_coverage(
        positions in prop::collection::vec(point(170.0), 1..12),
        boresights in prop::collection::vec(-3.1..3.1f64, 0..6),
        extra in -3.1..3.1f64,
        width_deg in 1.0..60.0f64,
    ) {
        let mk = |b: f64| Beam { boresight: b, width: width_deg.to_radians(), members: vec![], rbg_count: 1 };
        let mut beams: Vec<Beam> = boresights.iter().map(|&b| mk(b)).collect();
        let before = coverage_rate(&beams, &positions, Point2D::ORIGIN, 160.0);
        beams.push(mk(extra));
        prop_assert!(coverage_rate(&beams, &positions, Point2D::ORIGIN, 160.0) >= before);
    }

    #[test]
    fn beam_gain_bounds(b in -1.5..1.5f64, u in -1.5..1.5f64, n in 1..256usize) {
        let cfg = AntennaConfig::with_elements(n);
        let g = beam_gain(b, u, &cfg);
        prop_assert!(g >= 0.0 && g <= n as f64 * (1.0 + 1e-12), "{g}");
        prop_assert!(rel_close(g, beam_gain(u, b, &cfg), 1e-9) || (g - beam_gain(u, b, &cfg)).abs() < 1e-12);
    }

    #[test]
    fn queue_conserves_packets(steps in prop::collection::vec((0..5u64, 0..2000u64), 1..60)) {
        let mut q = PacketQueue::new();
        let mut arrived = 0;
        let mut delivered = 0;
        for (t, (n, budget)) in steps.into_iter().enumerate() {
            let t = t as u64;
            q.push_arrivals(n, 256, t);
            arrived += n;
            let served = q.serve(budget, t);
            prop_assert!(served.iter().map(|p| p.size_bits).sum::<u64>() <= budget);
            delivered += served.len() as u64;
            prop_assert_eq!(arrived, delivered + q.len() as u64);
            prop_assert!(q.head_of_line_delay(t) >= 1);
        }
    }

    #[test]
    fn reward_is_in_open_unit_interval(s in 1e-6..30.0f64, d in 1e-3..1.0f64, urllc in any::<bool>()) {
        let class = if urllc { TrafficClass::Urllc } else { TrafficClass::Embb };
        let r = reward(class, s, d);
        prop_assert!(r > 0.0 && r < 1.0, "{r}");
    }
}

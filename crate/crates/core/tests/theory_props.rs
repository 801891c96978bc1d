use gal_core::rng::{stream, substream, Stream};
use gal_core::theory::random::{random_dist_pair, random_leakage_instance, random_tradeoff_case};
use gal_core::theory::*;
use proptest::prelude::*;

fn dist_on(xs: &[f64], weights: &[f64]) -> DiscreteDist {
    DiscreteDist::from_weights(xs.iter().map(|&x| vec![x]).collect(), weights).unwrap()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n)
}

proptest! {
    #[test]
    fn advantage_equals_tv(pair in (1usize..=10).prop_flat_map(|n| (weights(n), weights(n)))) {
        let xs: Vec<f64> = (0..pair.0.len()).map(|i| i as f64).collect();
        let p = dist_on(&xs, &pair.0);
        let q = dist_on(&xs, &pair.1);
        let adv = advantage_bruteforce(&p, &q).unwrap();
        prop_assert!((adv - tv_distance(&p, &q).unwrap()).abs() <= 1e-12);
        prop_assert!(check_error_decomposition(&p, &q).unwrap());
    }

    #[test]
    fn w1_symmetry_and_triangle(
        set in (1usize..=8).prop_flat_map(|n| (
            prop::collection::vec(-5.0f64..5.0, n), weights(n), weights(n), weights(n)
        ))
    ) {
        let (xs, a, b, c) = set;
        let mut xs = xs;
        xs.iter_mut().enumerate().for_each(|(i, x)| *x += 11.0 * i as f64);
        let (p, q, r) = (dist_on(&xs, &a), dist_on(&xs, &b), dist_on(&xs, &c));
        let pq = w1_discrete(&p, &q, euclidean).unwrap();
        let qp = w1_discrete(&q, &p, euclidean).unwrap();
        let pr = w1_discrete(&p, &r, euclidean).unwrap();
        let qr = w1_discrete(&q, &r, euclidean).unwrap();
        prop_assert!((pq - qp).abs() <= 1e-9);
        prop_assert!(pr <= pq + qr + 1e-9);
        prop_assert!(pq >= 0.0);
    }

    #[test]
    fn w1_matches_bernoulli(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let exact = w1_discrete(&DiscreteDist::bernoulli(p).unwrap(), &DiscreteDist::bernoulli(q).unwrap(), euclidean).unwrap();
        prop_assert!((exact - w1_bernoulli(p, q).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn sorted_oracle_agrees_with_flow(
        pts in (1usize..=12).prop_flat_map(|n| (prop::collection::vec(-4.0f64..4.0, n), prop::collection::vec(-4.0f64..4.0, n)))
    ) {
        let w = vec![1.0; pts.0.len()];
        let flow = w1_discrete(&dist_on(&pts.0, &w), &dist_on(&pts.1, &w), euclidean).unwrap();
        prop_assert!((flow - w1_sorted_1d(&pts.0, &pts.1).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn tv_data_processing(
        set in (2usize..=10, 1usize..=5).prop_flat_map(|(n, m)| (weights(n), weights(n), prop::collection::vec(0..m, n)))
    ) {
        let (a, b, map) = set;
        let xs: Vec<f64> = (0..a.len()).map(|i| i as f64).collect();
        let (p, q) = (dist_on(&xs, &a), dist_on(&xs, &b));
        let idx = |x: &[f64]| vec![map[x[0] as usize] as f64];
        let (gp, gq) = (p.pushforward(idx).unwrap(), q.pushforward(idx).unwrap());
        prop_assert!(tv_distance(&gp, &gq).unwrap() <= tv_distance(&p, &q).unwrap() + 1e-12);
    }
}

#[test]
fn wasserstein_contraction_under_lipschitz_maps() {
    let mut rng = stream(77, Stream::Theory);
    use rand::Rng as _;
    for _ in 0..200 {
        let (p, q) = random_dist_pair(&mut rng, 10, 1).unwrap();
        let c: f64 = rng.random_range(0.0..3.0);
        let (a, b): (f64, f64) = (rng.random_range(0.1..2.0), rng.random_range(-1.0..1.0));
        let f = move |x: &[f64]| vec![c * (a * x[0] + b).sin() / a];
        let (fp, fq) = (p.pushforward(f).unwrap(), q.pushforward(f).unwrap());
        let lhs = w1_discrete(&fp, &fq, euclidean).unwrap();
        assert!(lhs <= c * w1_discrete(&p, &q, euclidean).unwrap() + 1e-9);
    }
}

#[test]
fn randomized_bound_instances_hold() {
    for i in 0..200 {
        let (inst, h) = random_tradeoff_case(&mut substream(5, Stream::Theory, i), 12).unwrap();
        let rec = check_tradeoff_bound(&inst, &h).unwrap();
        assert!(rec.holds, "tradeoff instance {i}: {rec:?}");
        let inst = random_leakage_instance(&mut substream(6, Stream::Theory, i), 12).unwrap();
        let rec = check_leakage_bound(&inst).unwrap();
        assert!(rec.holds, "leakage instance {i}: {rec:?}");
    }
}

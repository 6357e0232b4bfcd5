use std::f64::consts::PI;
use std::sync::Arc;

use mht_ggsp::basis::{BandlimitedSignal, Coefficients, JointBasis};
use mht_ggsp::detector::{bh_procedure, evaluate, step_up_threshold};
use mht_ggsp::estimator::{log_likelihood, Sample, SampleSet};
use mht_ggsp::graph::{build_knn_graph, Point, SpectralBasis};
use mht_ggsp::pvalue::{lfdr, SigmoidBeta, UniformNull};
use proptest::prelude::*;

fn coords_strategy(max_n: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::btree_set((0u32..60, 0u32..60), 3..max_n).prop_map(|s| {
        s.into_iter()
            .map(|(x, y)| [x as f64 * 1.7, y as f64 * 0.9])
            .collect()
    })
}

fn basis_of(coords: &[Point], k: usize) -> JointBasis {
    let g = build_knn_graph(coords, k).unwrap().graph;
    JointBasis::new(Arc::new(SpectralBasis::of_graph(&g).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knn_graph_is_simple_and_covers_k_neighbours(coords in coords_strategy(40), k in 1usize..8) {
        let knn = build_knn_graph(&coords, k).unwrap();
        let g = &knn.graph;
        let n = coords.len();
        for (u, v) in g.edges() {
            prop_assert!(u < v && v < n);
        }
        let kk = k.min(n - 1);
        for d in g.degrees() {
            prop_assert!(d >= kk);
        }
        let l = g.laplacian();
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| l[(i, j)]).sum();
            prop_assert!(row_sum.abs() < 1e-12);
            for j in 0..n {
                prop_assert_eq!(l[(i, j)], l[(j, i)]);
            }
        }
    }

    #[test]
    fn spectrum_is_sorted_nonnegative_with_constant_first_mode(coords in coords_strategy(30), k in 2usize..6) {
        let g = build_knn_graph(&coords, k).unwrap().graph;
        let s = SpectralBasis::of_graph(&g).unwrap();
        let ev = s.eigenvalues();
        prop_assert!(ev[0].abs() < 1e-9);
        for w in ev.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!(ev.iter().all(|&l| l > -1e-9));
        let trace: f64 = g.degrees().iter().map(|&d| d as f64).sum();
        prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-8 * trace.max(1.0));
    }

    #[test]
    fn signal_is_linear_in_coefficients(
        coords in coords_strategy(20),
        a in prop::collection::vec(-5.0f64..5.0, 6),
        b in prop::collection::vec(-5.0f64..5.0, 6),
        c in -3.0f64..3.0,
        t in -PI..PI,
    ) {
        let basis = basis_of(&coords, 3);
        let sig = |v: Vec<f64>| {
            BandlimitedSignal::new(basis.clone(), Coefficients { k1: 2, k2: 3, bound: 1e3, values: v }).unwrap()
        };
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + c * y).collect();
        let (sa, sb, sm) = (sig(a), sig(b), sig(mix));
        for v in 0..coords.len() {
            let lhs = sm.evaluate(v, t).unwrap();
            let rhs = sa.evaluate(v, t).unwrap() + c * sb.evaluate(v, t).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_on_the_joint_domain(
        coords in coords_strategy(16),
        xi in prop::collection::vec(-4.0f64..4.0, 9),
    ) {
        let basis = basis_of(&coords, 3);
        let sig = BandlimitedSignal::new(basis, Coefficients { k1: 3, k2: 3, bound: 1e3, values: xi.clone() }).unwrap();
        let nodes = 400;
        let h = 2.0 * PI / nodes as f64;
        let mut energy = 0.0;
        for v in 0..coords.len() {
            for q in 0..nodes {
                let t = -PI + (q as f64 + 0.5) * h;
                energy += sig.evaluate(v, t).unwrap().powi(2) * h;
            }
        }
        let coeff: f64 = xi.iter().map(|x| x * x).sum();
        prop_assert!((energy - coeff).abs() < 1e-8 * coeff.max(1.0));
    }

    #[test]
    fn step_up_matches_exhaustive_search(
        l in prop::collection::vec(prop_oneof![0u8..=16, 0u8..=3].prop_map(|k| k as f64 / 16.0), 1..120),
        alpha in prop::sample::select(vec![0.0625, 0.125, 0.1875, 0.25]),
    ) {
        let (eta, mask) = step_up_threshold(&l, alpha).unwrap();
        let mut sorted = l.clone();
        sorted.sort_by(f64::total_cmp);
        let mut best_k = 0;
        for k in 1..=sorted.len() {
            let boundary = k == sorted.len() || sorted[k] > sorted[k - 1];
            if boundary && sorted[..k].iter().sum::<f64>() <= alpha * k as f64 {
                best_k = k;
            }
        }
        prop_assert_eq!(mask.iter().filter(|&&r| r).count(), best_k);
        prop_assert_eq!(eta, (best_k > 0).then(|| sorted[best_k - 1]));
        if best_k > 0 {
            let rejected: Vec<f64> = l.iter().zip(&mask).filter(|(_, &r)| r).map(|(&x, _)| x).collect();
            prop_assert!(rejected.iter().sum::<f64>() <= alpha * rejected.len() as f64);
        }
    }

    #[test]
    fn rejections_grow_with_alpha(
        l in prop::collection::vec(0.0f64..=1.0, 1..200),
        p in prop::collection::vec(1e-9f64..=1.0, 1..200),
        a1 in 0.01f64..0.5,
        gap in 0.0f64..0.4,
    ) {
        let a2 = (a1 + gap).min(0.99);
        let (_, r1) = step_up_threshold(&l, a1).unwrap();
        let (_, r2) = step_up_threshold(&l, a2).unwrap();
        prop_assert!(r1.iter().zip(&r2).all(|(&x, &y)| !x || y));
        let b1 = bh_procedure(&p, a1).unwrap();
        let b2 = bh_procedure(&p, a2).unwrap();
        prop_assert!(b1.iter().zip(&b2).all(|(&x, &y)| !x || y));
    }

    #[test]
    fn detection_is_permutation_equivariant(
        l in prop::collection::vec(0.0f64..=1.0, 2..150),
        seed in any::<u64>(),
        alpha in 0.02f64..0.5,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..l.len()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<f64> = perm.iter().map(|&i| l[i]).collect();
        let (e1, r1) = step_up_threshold(&l, alpha).unwrap();
        let (e2, r2) = step_up_threshold(&permuted, alpha).unwrap();
        prop_assert_eq!(e1, e2);
        for (j, &i) in perm.iter().enumerate() {
            prop_assert_eq!(r2[j], r1[i]);
        }
        let p: Vec<f64> = l.iter().map(|x| x.max(1e-12)).collect();
        let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let b1 = bh_procedure(&p, alpha).unwrap();
        let b2 = bh_procedure(&pp, alpha).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            prop_assert_eq!(b2[j], b1[i]);
        }
    }

    #[test]
    fn fdp_and_tpp_are_proportions(
        pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..100),
    ) {
        let (reject, truth): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let e = evaluate(&reject, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&e.fdp) && (0.0..=1.0).contains(&e.tpp));
        prop_assert!(e.n_false_reject <= e.n_reject);
        let true_rej = e.n_reject - e.n_false_reject;
        prop_assert_eq!(e.fdp, e.n_false_reject as f64 / e.n_reject.max(1) as f64);
        prop_assert_eq!(e.tpp, true_rej as f64 / e.n_alternatives.max(1) as f64);
    }

    #[test]
    fn lfdr_is_monotone_in_p(g in -6.0f64..6.0, p1 in 1e-12f64..1.0, p2 in 1e-12f64..1.0) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let a = lfdr(&SigmoidBeta, &UniformNull, lo, g, 0, 0.0).unwrap();
        let b = lfdr(&SigmoidBeta, &UniformNull, hi, g, 0, 0.0).unwrap();
        prop_assert!(a <= b + 1e-15);
    }

    #[test]
    fn likelihood_is_invariant_to_sample_order(coords in coords_strategy(12), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        use rand::seq::SliceRandom;
        let basis = basis_of(&coords, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut records: Vec<Sample> = (0..50)
            .map(|_| Sample::new(rng.random_range(0..coords.len()), rng.random_range(-PI..PI), rng.random_range(1e-6..1.0)))
            .collect();
        let xi = Coefficients { k1: 2, k2: 2, bound: 1e3, values: vec![1.0, -2.0, 0.5, 3.0] };
        let a = log_likelihood(&xi, &SampleSet::new(records.clone(), None).unwrap(), &basis, &SigmoidBeta).unwrap();
        records.shuffle(&mut rng);
        let b = log_likelihood(&xi, &SampleSet::new(records, None).unwrap(), &basis, &SigmoidBeta).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }
}

use std::collections::BTreeSet;

use mbv_graph::estimator::{
    apply_threshold, empirical_quantile, estimate_theta, estimate_theta_by_parity, theta_bound,
    FrequencyVector, ThresholdRule, ThresholdScope,
};
use mbv_graph::io;
use mbv_graph::lattice::{dense_zeta_matrix, mobius_in_place, zeta_in_place};
use mbv_graph::logistic::{symmetrize, CoefficientMatrix, SymmetrizationRule};
use mbv_graph::metrics::confusion;
use mbv_graph::model::{
    conditional_odds_ratio, conditional_success, hierarchical_closure, is_hierarchical,
    probs_from_theta, theta_from_probs,
};
use mbv_graph::sampler::{sample, SampleMatrix};
use mbv_graph::{GraphEstimate, LatticeVector, ProbabilityVector, SubsetIndex, ThetaVector};
use proptest::prelude::*;

fn probability_vector(max_p: usize) -> impl Strategy<Value = ProbabilityVector> {
    (1..=max_p).prop_flat_map(|p| {
        prop::collection::vec(0.01f64..1.0, 1 << p)
            .prop_map(move |w| ProbabilityVector::from_weights(p, w).unwrap())
    })
}

fn theta_vector(max_p: usize) -> impl Strategy<Value = ThetaVector> {
    (1..=max_p).prop_flat_map(|p| {
        prop::collection::vec(-2.0f64..2.0, 1 << p).prop_map(move |v| {
            ThetaVector::normalize(LatticeVector::new(p, v).unwrap()).unwrap().0
        })
    })
}

fn graph_of(p: usize) -> impl Strategy<Value = GraphEstimate> {
    let pairs = p * (p - 1) / 2;
    prop::collection::vec(prop_oneof![Just(0.0), -3.0f64..3.0], pairs).prop_map(move |w| {
        let mut g = GraphEstimate::new(p);
        let mut k = 0;
        for i in 0..p {
            for j in i + 1..p {
                g.set_weight(i, j, w[k]).unwrap();
                k += 1;
            }
        }
        g
    })
}

fn graph(max_p: usize) -> impl Strategy<Value = GraphEstimate> {
    (2..=max_p).prop_flat_map(graph_of)
}

proptest! {
    #[test]
    fn transforms_are_inverse_on_integers(p in 0usize..=8, seed in any::<u64>()) {
        let f: Vec<i64> = (0..1u64 << p).map(|k| ((k.wrapping_mul(seed | 1) >> 7) % 19) as i64 - 9).collect();
        let mut g = f.clone();
        zeta_in_place(&mut g).unwrap();
        let mut back = g.clone();
        mobius_in_place(&mut back).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn fast_zeta_is_a_subset_sum(p in 0usize..=6, values in prop::collection::vec(-50i64..50, 64)) {
        let f = &values[..1 << p];
        let mut g = f.to_vec();
        zeta_in_place(&mut g).unwrap();
        let z = dense_zeta_matrix(p).unwrap();
        for c in 0..f.len() {
            let direct: i64 = (0..f.len()).map(|r| z.get(r, c) * f[r]).sum();
            prop_assert_eq!(g[c], direct);
        }
    }

    #[test]
    fn theta_probability_round_trip(pi in probability_vector(7)) {
        let back = probs_from_theta(&theta_from_probs(&pi).unwrap()).unwrap();
        for (a, b) in pi.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_theta_sums_to_one(th in theta_vector(6)) {
        let total: f64 = probs_from_theta(&th).unwrap().values().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_success_matches_enumeration(th in theta_vector(5), j in 0usize..5, rest in any::<u32>()) {
        let p = th.p();
        let j = j % p;
        let rest = SubsetIndex::new(rest & ((1 << p) - 1)).without(j);
        let pi = probs_from_theta(&th).unwrap();
        let on = pi.get(rest.with(j));
        let off = pi.get(rest);
        let got = conditional_success(&th, j, rest).unwrap();
        prop_assert!((got - on / (on + off)).abs() < 1e-12);
    }

    #[test]
    fn log_odds_ratio_sums_interactions(th in theta_vector(5), i in 0usize..5, j in 0usize..5, rest in any::<u32>()) {
        let p = th.p();
        prop_assume!(p >= 2);
        let (i, j) = (i % p, j % p);
        prop_assume!(i != j);
        let rest = SubsetIndex::new(rest & ((1 << p) - 1)).without(i).without(j);
        let pi = probs_from_theta(&th).unwrap();
        let or = conditional_odds_ratio(&pi, i, j, rest).unwrap();
        let expected: f64 = rest.subsets().map(|s| th.get(s.with(i).with(j))).sum();
        prop_assert!((or.ln() - expected).abs() < 1e-9);
    }

    #[test]
    fn estimators_agree_and_respect_bound(pi in probability_vector(6), n in 50.0f64..5000.0, alpha in 0.01f64..1.0) {
        let counts: Vec<f64> = pi.values().iter().map(|v| (v * n).floor()).collect();
        let freq = FrequencyVector::from_counts(pi.p(), counts).unwrap().with_smoothing(alpha).unwrap();
        let a = estimate_theta(&freq).unwrap();
        let b = estimate_theta_by_parity(&freq).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for d in SubsetIndex::full(pi.p()).subsets() {
            prop_assert!(a.get(d).abs() <= theta_bound(&freq, d).unwrap() * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn quantile_threshold_kills_the_lower_tail(th in theta_vector(5), q in 0.0f64..1.0) {
        let rule = ThresholdRule::quantile(q, ThresholdScope::AllNonEmpty);
        let out = apply_threshold(&th, &rule).unwrap();
        let mags: Vec<f64> = th.lattice().iter().filter(|(d, _)| !d.is_empty()).map(|(_, v)| v.abs()).collect();
        let cut = empirical_quantile(&mags, q).unwrap();
        for (d, v) in th.lattice().iter().filter(|(d, _)| !d.is_empty()) {
            if q > 0.0 && v.abs() <= cut {
                prop_assert_eq!(out.get(d), 0.0);
            } else {
                prop_assert_eq!(out.get(d), v);
            }
        }
        let total: f64 = probs_from_theta(&out).unwrap().values().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn larger_quantiles_keep_fewer_entries(th in theta_vector(5), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = apply_threshold(&th, &ThresholdRule::quantile(lo, ThresholdScope::AllNonEmpty)).unwrap();
        let b = apply_threshold(&th, &ThresholdRule::quantile(hi, ThresholdScope::AllNonEmpty)).unwrap();
        for (d, v) in b.lattice().iter().filter(|(d, _)| !d.is_empty()) {
            if v != 0.0 {
                prop_assert!(a.get(d) != 0.0);
            }
        }
    }

    #[test]
    fn symmetrize_is_symmetric_and_idempotent(g in graph(6)) {
        let p = g.p();
        let mut raw = CoefficientMatrix::zeros(p);
        for ((i, j), w) in g.edges() {
            raw.set(i, j, w);
            raw.set(j, i, w);
        }
        for rule in [SymmetrizationRule::MinMagnitude, SymmetrizationRule::MaxMagnitude] {
            prop_assert_eq!(&symmetrize(&raw, rule), &g);
        }
    }

    #[test]
    fn symmetrize_edge_rules(a in graph(6), seed in any::<u64>()) {
        let p = a.p();
        let mut raw = CoefficientMatrix::zeros(p);
        for i in 0..p {
            for j in 0..p {
                if i != j && (seed >> ((i * p + j) % 64)) & 1 == 1 {
                    raw.set(i, j, a.weight(i.min(j), i.max(j)) * if i < j { 1.0 } else { -0.5 });
                }
            }
        }
        let min = symmetrize(&raw, SymmetrizationRule::MinMagnitude);
        let max = symmetrize(&raw, SymmetrizationRule::MaxMagnitude);
        for i in 0..p {
            for j in i + 1..p {
                let (x, y) = (raw.get(i, j), raw.get(j, i));
                prop_assert_eq!(min.has_edge(i, j), x != 0.0 && y != 0.0);
                prop_assert_eq!(max.has_edge(i, j), x != 0.0 || y != 0.0);
                prop_assert_eq!(min.weight(i, j), min.weight(j, i));
            }
        }
    }

    #[test]
    fn confusion_counts_partition_pairs((a, b) in (2usize..=7).prop_flat_map(|p| (graph_of(p), graph_of(p)))) {
        let c = confusion(&a, &b).unwrap();
        let pairs = a.p() * (a.p() - 1) / 2;
        prop_assert_eq!(c.total(), pairs);
        prop_assert!((c.accuracy() - (1.0 - (c.fp + c.fn_) as f64 / pairs as f64)).abs() < 1e-15);
    }

    #[test]
    fn closure_is_hierarchical(p in 1usize..=5, picks in prop::collection::vec(any::<u32>(), 0..12)) {
        let support: BTreeSet<SubsetIndex> = picks.iter().map(|&m| SubsetIndex::new(m & ((1 << p) - 1))).collect();
        let closed = hierarchical_closure(p, &support).unwrap();
        let mut lv = LatticeVector::zeros(p).unwrap();
        for d in &closed {
            if !d.is_empty() {
                lv.set(*d, 0.3);
            }
        }
        let th = ThetaVector::normalize(lv).unwrap().0;
        prop_assert!(is_hierarchical(&th, 0.0));
        prop_assert!(closed.iter().all(|d| d.is_empty() || support.contains(d)));
    }

    #[test]
    fn sampling_is_deterministic(pi in probability_vector(4), n in 1usize..200, seed in any::<u64>()) {
        prop_assert_eq!(sample(&pi, n, seed).unwrap(), sample(&pi, n, seed).unwrap());
    }

    #[test]
    fn samples_csv_round_trip(p in 1usize..8, bits in prop::collection::vec(0u8..2, 1..200)) {
        let n = bits.len() / p;
        prop_assume!(n >= 1);
        let data = SampleMatrix::new(p, bits[..n * p].to_vec()).unwrap();
        prop_assert_eq!(io::parse_samples(&io::write_samples(&data).unwrap()).unwrap(), data);
    }

    #[test]
    fn graph_formats_round_trip(g in graph(8)) {
        prop_assert_eq!(&io::parse_edge_csv(&io::write_edge_csv(&g).unwrap(), g.p()).unwrap(), &g);
        prop_assert_eq!(&io::parse_graph_json(&io::write_graph_json(&g).unwrap()).unwrap(), &g);
    }

    #[test]
    fn model_files_round_trip(th in theta_vector(5), pi in probability_vector(4)) {
        let back = io::parse_model(&io::write_theta_model(&th).unwrap()).unwrap().theta().unwrap();
        prop_assert_eq!(back, th);
        let back = io::parse_model(&io::write_probability_model(&pi).unwrap()).unwrap().probabilities().unwrap();
        prop_assert_eq!(back, pi);
    }
}

use std::collections::BTreeSet;

use buyback::harness::{gen, run_batch, GeneratorConfig, InstanceKind};
use buyback::{brute_opt, greedy_offline, run_stream, Decision, ElementId, Instance, Threshold, Variant, Weight};
use num::{BigRational, Zero};

fn ids(v: &[u32]) -> BTreeSet<ElementId> {
    v.iter().map(|&i| ElementId(i)).collect()
}

fn w(s: &str) -> Weight {
    s.parse().unwrap()
}

/// Two partition matroids over elements 0..n with the given class maps.
fn two_partitions(weights: &[&str], left: &[usize], right: &[usize], caps: (&[usize], &[usize]), r: &str) -> Instance {
    let elements: Vec<String> =
        weights.iter().enumerate().map(|(i, w)| format!(r#"{{"id":{i},"weight":"{w}"}}"#)).collect();
    let classes = |c: &[usize]| -> String {
        c.iter().enumerate().map(|(i, k)| format!(r#""{i}":{k}"#)).collect::<Vec<_>>().join(",")
    };
    let json = format!(
        r#"{{"k":2,"f":"0","r":"{r}","elements":[{}],
            "matroids":[{{"type":"partition","classes":{{{}}},"capacities":{:?}}},
                        {{"type":"partition","classes":{{{}}},"capacities":{:?}}}],
            "order":{:?}}}"#,
        elements.join(","),
        classes(left),
        caps.0,
        classes(right),
        caps.1,
        (0..weights.len()).collect::<Vec<_>>(),
    );
    Instance::from_json(&json).unwrap()
}

#[test]
fn single_slot_stream() {
    let inst = Instance::from_json(
        r#"{"k":1,"f":"0","r":"2",
            "elements":[{"id":1,"weight":"1"},{"id":2,"weight":"3/2"},{"id":3,"weight":"3"}],
            "matroids":[{"type":"uniform","rank":1}],
            "order":[1,2,3]}"#,
    )
    .unwrap();
    for variant in [Variant::Alg1, Variant::Alg2] {
        let report = run_stream(&inst, variant).unwrap();
        assert_eq!(report.utility, w("3").into_ratio());
        assert_eq!(report.final_set, ids(&[3]));
        let decisions: Vec<Decision> = report.trace.iter().map(|s| s.decision.clone()).collect();
        assert_eq!(
            decisions,
            vec![Decision::AcceptFree, Decision::Reject, Decision::AcceptEvict { evicted: ids(&[1]) }]
        );
    }
}

#[test]
fn empty_instance() {
    let inst = Instance::from_json(r#"{"k":1,"f":"0","elements":[],"matroids":[{"type":"uniform","rank":1}],"order":[]}"#)
        .unwrap();
    let report = run_stream(&inst, Variant::Alg1).unwrap();
    assert!(report.final_set.is_empty());
    assert!(report.utility.is_zero());
    assert!(brute_opt(&inst).unwrap().weight.is_zero());
    assert!(greedy_offline(&inst).unwrap().weight.is_zero());
}

#[test]
fn two_conflicts_below_threshold_rejected() {
    // 0 = a, 1 = b, 2 = e; e shares a left vertex with a and a right vertex with b.
    let inst = two_partitions(&["1", "1", "3"], &[0, 1, 0], &[0, 1, 1], (&[1, 1], &[1, 1]), "17071/10000");
    for variant in [Variant::Alg1, Variant::Alg2] {
        let report = run_stream(&inst, variant).unwrap();
        assert_eq!(report.trace[2].decision, Decision::Reject);
        assert_eq!(report.final_set, ids(&[0, 1]));
    }
}

#[test]
fn greedy_drops_two_and_accepts() {
    let inst = two_partitions(&["1", "1", "5"], &[0, 1, 0], &[0, 1, 1], (&[1, 1], &[1, 1]), "2");
    for variant in [Variant::Alg1, Variant::Alg2] {
        let report = run_stream(&inst, variant).unwrap();
        assert_eq!(report.trace[2].decision, Decision::AcceptEvict { evicted: ids(&[0, 1]) });
        assert_eq!(report.utility, w("5").into_ratio());
    }
}

/// The per-matroid lightest-circuit rule and the greedy rule part ways once two
/// matroids have circuits of length three: the circuit rule evicts the lightest
/// element of each circuit, while greedy only drops what it must.
#[test]
fn circuit_rule_and_greedy_rule_diverge_with_two_matroids() {
    // a = 0 (4), b = 1 (3), c = 2 (2), e = 3 (10).
    // Matroid 1: {a, b, e} share a class of capacity 2, c alone.
    // Matroid 2: {b, c, e} share a class of capacity 2, a alone.
    let inst = two_partitions(&["4", "3", "2", "10"], &[0, 0, 1, 0], &[1, 0, 0, 0], (&[2, 1], &[2, 1]), "3/2");
    let circuit = run_stream(&inst, Variant::Alg1).unwrap();
    let greedy = run_stream(&inst, Variant::Alg2).unwrap();
    assert_eq!(circuit.trace[3].decision, Decision::AcceptEvict { evicted: ids(&[1, 2]) });
    assert_eq!(greedy.trace[3].decision, Decision::AcceptEvict { evicted: ids(&[1]) });
    assert_eq!(circuit.final_set, ids(&[0, 3]));
    assert_eq!(greedy.final_set, ids(&[0, 2, 3]));
}

/// A parallel edge is the lightest element of both circuits and is counted once per
/// matroid by the circuit rule, once overall by the greedy rule.
#[test]
fn parallel_edge_counted_per_matroid() {
    let inst = two_partitions(&["5", "9"], &[0, 0], &[0, 0], (&[1], &[1]), "3/2");
    let circuit = run_stream(&inst, Variant::Alg1).unwrap();
    let greedy = run_stream(&inst, Variant::Alg2).unwrap();
    assert_eq!(circuit.trace[1].decision, Decision::Reject);
    assert_eq!(greedy.trace[1].decision, Decision::AcceptEvict { evicted: ids(&[0]) });
}

#[test]
fn two_by_two_matching_optimum() {
    // e11, e12, e21, e22
    let inst = two_partitions(&["5", "4", "4", "1"], &[0, 0, 1, 1], &[0, 1, 0, 1], (&[1, 1], &[1, 1]), "optimal");
    let opt = brute_opt(&inst).unwrap();
    assert_eq!(opt.set, ids(&[1, 2]));
    assert_eq!(opt.weight, w("8"));
    let greedy = greedy_offline(&inst).unwrap();
    assert_eq!(greedy.set, ids(&[0, 3]));
    assert_eq!(greedy.weight, w("6"));
}

#[test]
fn free_disposal_within_ratio() {
    let bound: BigRational = w("582843/100000").into_ratio();
    for seed in 0..40 {
        let inst = gen(&GeneratorConfig::new(seed, InstanceKind::FreeDisposal, 8, 2)).unwrap();
        let report = run_stream(&inst, Variant::Alg1).unwrap();
        let opt = brute_opt(&inst).unwrap().weight.into_ratio();
        assert!(&report.utility * &bound >= opt, "seed {seed}: {} vs {}", report.utility, opt);
    }
}

#[test]
fn single_advertiser_unit_capacity_is_a_single_slot() {
    let config = GeneratorConfig {
        sides: Some((6, 1)),
        capacity: Some(1),
        r: Threshold::Explicit(w("2")),
        ..GeneratorConfig::new(3, InstanceKind::FreeDisposal, 6, 2)
    };
    let inst = gen(&config).unwrap();
    let report = run_stream(&inst, Variant::Alg1).unwrap();
    // Replay the rank-one buyback rule by hand.
    let mut held: Option<&Weight> = None;
    let mut utility = BigRational::zero();
    for id in &inst.order {
        let x = &inst.element(*id).unwrap().weight;
        match held {
            None => {
                held = Some(x);
                utility += x.as_ratio();
            }
            Some(h) if x.as_ratio() >= &(h.as_ratio() * w("2").as_ratio()) => {
                utility += x.as_ratio() - h.as_ratio();
                held = Some(x);
            }
            Some(_) => {}
        }
    }
    assert_eq!(report.final_set.len(), 1);
    assert_eq!(report.utility, utility);
}

#[test]
fn batch_is_reproducible() {
    let configs: Vec<GeneratorConfig> =
        (0..12).map(|s| GeneratorConfig::new(s, InstanceKind::MixedIntersection, 7, 2)).collect();
    let a = serde_json::to_string(&run_batch(&configs, &[Variant::Alg1, Variant::Alg2])).unwrap();
    let b = serde_json::to_string(&run_batch(&configs, &[Variant::Alg1, Variant::Alg2])).unwrap();
    assert_eq!(a, b);
}

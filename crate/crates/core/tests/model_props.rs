use index_coding::gf::{in_span, rank, sample_nonzero, span_of, FVector, Field, Subspace};
use index_coding::{MessageSet, Problem, Receiver};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_problem() -> impl Strategy<Value = Problem> {
    (1usize..=7).prop_flat_map(|n| {
        let receiver = (0..n, proptest::collection::vec(any::<bool>(), n), any::<bool>()).prop_map(move |(d, side, two)| {
            let mut demands = MessageSet::from_labels(&[d + 1]);
            if two && n > 1 {
                demands.insert((d + 1) % n);
            }
            let side_info: MessageSet = (0..n).filter(|m| side[*m] && !demands.contains(m)).collect();
            Receiver { demands, side_info }
        });
        proptest::collection::vec(receiver, 1..=6).prop_map(move |rs| Problem::new(n, rs, None).unwrap())
    })
}

fn arb_vectors(q: u32, len: usize, max: usize) -> impl Strategy<Value = Vec<FVector>> {
    let field = Field::new(q as u64).unwrap();
    proptest::collection::vec(proptest::collection::vec(0..q as i64, len), 0..=max)
        .prop_map(move |vs| vs.iter().map(|c| FVector::new(field, c).unwrap()).collect())
}

proptest! {
    #[test]
    fn interfering_sets_avoid_side_info_and_demand(p in arb_problem()) {
        for (j, r) in p.receivers().iter().enumerate() {
            for k in 0..p.n() {
                let i = p.interfering_set(j, k);
                prop_assert!(i.is_disjoint(&r.side_info));
                prop_assert!(!i.contains(&k));
            }
        }
    }

    #[test]
    fn restriction_never_creates_conflicts(p in arb_problem(), mask in any::<u8>()) {
        let subset: MessageSet = (0..p.n()).filter(|m| mask & (1 << m) != 0).collect();
        prop_assume!(!subset.is_empty());
        let (r, back) = p.restrict(&subset).unwrap();
        let original = p.conflict_pairs();
        for (a, b) in r.conflict_pairs() {
            prop_assert!(original.contains(&(back[a], back[b])));
        }
    }

    #[test]
    fn json_round_trip(p in arb_problem()) {
        prop_assert_eq!(Problem::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn conflicts_ignore_receiver_order(p in arb_problem(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..p.receivers().len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(p.permute_receivers(&order).conflict_pairs(), p.conflict_pairs());
    }

    #[test]
    fn rank_ignores_order_and_scaling(vs in arb_vectors(5, 3, 5), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, Rng};
        let field = Field::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ws: Vec<FVector> = vs.iter().map(|v| v.scale(rng.gen_range(1..5))).collect();
        ws.shuffle(&mut rng);
        prop_assert_eq!(rank(field, 3, &vs).unwrap(), rank(field, 3, &ws).unwrap());
    }

    #[test]
    fn intersection_dimension_formula(a in arb_vectors(3, 3, 3), b in arb_vectors(3, 3, 3)) {
        let field = Field::new(3).unwrap();
        let (sa, sb) = (span_of(field, 3, &a).unwrap(), span_of(field, 3, &b).unwrap());
        let both: Vec<FVector> = sa.basis().iter().chain(sb.basis()).copied().collect();
        let sum = span_of(field, 3, &both).unwrap().dim();
        prop_assert_eq!(sa.intersect(&sb).unwrap().dim(), sa.dim() + sb.dim() - sum);
    }

    #[test]
    fn membership_matches_rank(xs in arb_vectors(2, 4, 4), v in arb_vectors(2, 4, 1)) {
        prop_assume!(v.len() == 1);
        let field = Field::new(2).unwrap();
        let mut with = xs.clone();
        with.push(v[0]);
        let inside = in_span(&v[0], &span_of(field, 4, &xs).unwrap()).unwrap();
        prop_assert_eq!(inside, rank(field, 4, &with).unwrap() == rank(field, 4, &xs).unwrap());
    }
}

/// Every nonzero vector of a line or plane over GF(2) and GF(3) is eventually sampled.
#[test]
fn sampling_covers_small_subspaces() {
    for q in [2u64, 3] {
        let field = Field::new(q).unwrap();
        let e = |i| FVector::unit(field, 3, i).unwrap();
        let line = span_of(field, 3, &[e(0).add(&e(1))]).unwrap();
        let plane = span_of(field, 3, &[e(0), e(2)]).unwrap();
        for s in [line, plane] {
            let expected = (q as usize).pow(s.dim() as u32) - 1;
            let mut seen = std::collections::BTreeSet::new();
            for seed in 0..500 {
                let v = sample_nonzero(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                assert!(!v.is_zero() && s.contains(&v).unwrap());
                seen.insert(v.coords().to_vec());
            }
            assert_eq!(seen.len(), expected, "GF({q}) subspace of dimension {}", s.dim());
        }
    }
}

#[test]
fn zero_subspace_from_no_vectors() {
    let field = Field::new(7).unwrap();
    assert_eq!(span_of(field, 3, &[]).unwrap(), Subspace::zero(field, 3).unwrap());
}

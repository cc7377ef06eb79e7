use ghd_core::oneway::{brute_force_witness, find_witness, is_witness};
use ghd_core::round_elim::{check_recurrences, recurrence_table, sauer_bound_check, vc_dimension};
use ghd_core::streaming::{exact_f0, ghd_to_streams, KmvSketch, Stream};
use ghd_core::{ghd_eval, hamming_distance, near_orthogonal, BitString, Gap, GhdParams, Ternary};
use num_bigint::BigUint;
use proptest::prelude::*;

fn bitstring(n: usize) -> impl Strategy<Value = BitString> {
    proptest::collection::vec(any::<bool>(), n).prop_map(BitString::from_bits)
}

fn pair(max_n: usize) -> impl Strategy<Value = (BitString, BitString)> {
    (1..=max_n).prop_flat_map(|n| (bitstring(n), bitstring(n)))
}

fn gap() -> impl Strategy<Value = Gap> {
    (1u64..=6, 1u64..=4).prop_map(|(a, b)| Gap::from_c(a, b).unwrap())
}

proptest! {
    #[test]
    fn complementing_y_flips_the_answer((x, y) in pair(200), g in gap()) {
        let p = GhdParams::new(x.len(), g).unwrap();
        let v = ghd_eval(&p, &x, &y).unwrap();
        prop_assert_eq!(ghd_eval(&p, &x, &y.complement()).unwrap(), v.flipped());
        prop_assert_eq!(near_orthogonal(&p, &x, &y).unwrap(), v == Ternary::Star);
    }

    #[test]
    fn witnesses_verify_and_match_brute_force((x1, x2) in pair(9), g in gap()) {
        let p = GhdParams::new(x1.len(), g).unwrap();
        let fast = find_witness(&p, &x1, &x2).unwrap();
        let slow = brute_force_witness(&p, &x1, &x2).unwrap();
        prop_assert_eq!(fast.is_some(), slow.is_some());
        if let Some(y) = fast {
            prop_assert!(is_witness(&p, &x1, &x2, &y));
        }
    }

    #[test]
    fn f0_of_reduction_is_n_plus_distance((x, y) in pair(300)) {
        let (a, b) = ghd_to_streams(&x, &y).unwrap();
        prop_assert_eq!(exact_f0(&a.concat(&b)), (x.len() + hamming_distance(&x, &y).unwrap()) as u64);
    }

    #[test]
    fn sketch_merge_is_union(
        k in 1usize..64,
        seed in any::<u64>(),
        a in proptest::collection::vec(0u64..500, 0..300),
        b in proptest::collection::vec(0u64..500, 0..300),
    ) {
        let sa = Stream::new(500, a).unwrap();
        let sb = Stream::new(500, b).unwrap();
        let mut left = KmvSketch::new(k, seed).unwrap();
        left.update_stream(&sa);
        let mut right = KmvSketch::new(k, seed).unwrap();
        right.update_stream(&sb);
        let mut whole = KmvSketch::new(k, seed).unwrap();
        whole.update_stream(&sa.concat(&sb));
        prop_assert_eq!(left.merge(&right).unwrap(), whole.clone());
        prop_assert_eq!(right.merge(&left).unwrap(), whole.clone());
        let text = serde_json::to_string(&whole).unwrap();
        prop_assert_eq!(serde_json::from_str::<KmvSketch>(&text).unwrap(), whole.clone());
        if whole.kept.len() < k {
            prop_assert_eq!(whole.estimate() as u64, exact_f0(&sa.concat(&sb)));
        }
    }

    #[test]
    fn sauer_never_violated(raw in proptest::collection::vec(0u64..256, 1..120)) {
        let s: Vec<BitString> = raw.iter().map(|&v| BitString::from_u64(v, 8)).collect();
        prop_assert!(sauer_bound_check(&s, 8).unwrap().pass);
        let (_, cert) = vc_dimension(&s, 8).unwrap();
        prop_assert!(cert.replay());
    }

    #[test]
    fn recurrence_tables_check_out(s in 1u64..1000, k in 1usize..=3, extra in 0u64..8) {
        let n = BigUint::from(1u32) << (4 * k * k) as u64 + extra;
        prop_assert!(check_recurrences(&recurrence_table(&n, s, k).unwrap()));
    }
}

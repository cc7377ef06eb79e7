use ghd_core::distributions::{appendix_suite, sample_mu, Distribution, SeededRng};
use ghd_core::oneway::{build_covering, protocol_from_cover, verify_cover, CoverStrategy};
use ghd_core::protocols::{error_exact, error_mc, DeterministicProtocol, ProtocolFile};
use ghd_core::round_elim::{
    eliminate_round_with, good_inputs, two_round_reference, EliminationConfig,
};
use ghd_core::streaming::simulate_onepass;
use ghd_core::{ghd_eval, Gap, GhdParams};

#[test]
fn cover_protocol_survives_file_round_trip() {
    let p = GhdParams::new(9, Gap::integer(1)).unwrap();
    let mut rng = SeededRng::from_seed(3);
    let cover = build_covering(9, p.gap, CoverStrategy::Greedy, &mut rng).unwrap();
    assert!(verify_cover(&cover, 0, &mut rng).unwrap().covered());
    let proto = protocol_from_cover(&cover, &p).unwrap();
    let file = proto.tabulate().unwrap().to_file().unwrap();
    let text = serde_json::to_string(&file).unwrap();
    let back =
        DeterministicProtocol::from_file(&serde_json::from_str::<ProtocolFile>(&text).unwrap())
            .unwrap();
    let a = error_exact(&proto, &p, Distribution::Mu).unwrap();
    let b = error_exact(&back, &p, Distribution::Mu).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.errors, 0);
}

#[test]
fn exact_and_sampled_errors_agree() {
    let p = GhdParams::new(8, Gap::from_c(1, 2).unwrap()).unwrap();
    let proto = DeterministicProtocol::random_table(8, 2, &mut SeededRng::from_seed(1)).unwrap();
    let exact = error_exact(&proto, &p, Distribution::Mu).unwrap();
    let mc = error_mc(
        &proto,
        &p,
        Distribution::Mu,
        40_000,
        &mut SeededRng::from_seed(2),
    )
    .unwrap();
    assert!(
        (exact.error - mc.error).abs()
            <= 4.0 * (exact.error * (1.0 - exact.error) / 40_000.0).sqrt()
    );
}

#[test]
fn round_elimination_from_a_protocol_file() {
    let p = GhdParams::new(6, Gap::from_c(1, 4).unwrap()).unwrap();
    let proto = two_round_reference(&p, 2).unwrap().tabulate().unwrap();
    let back = DeterministicProtocol::from_file(&proto.to_file().unwrap()).unwrap();
    assert_eq!(good_inputs(&back, &p, 0.0).unwrap().good.len(), 64);
    let cfg = EliminationConfig {
        error_trials: 300,
        sign_samples: 300,
    };
    let (q, d) =
        eliminate_round_with(&back, &p, 0.0, 3, &cfg, &mut SeededRng::from_seed(9)).unwrap();
    assert_eq!(q.rounds(), 1);
    assert_eq!(q.message_bits(), &[3 * 6]);
    assert!(d.embedding_ok);
    assert!(d.certificate.replay());
}

#[test]
fn streaming_decisions_track_ghd_with_large_sketches() {
    let p = GhdParams::new(32, Gap::integer(1)).unwrap();
    let mut rng = SeededRng::from_seed(5);
    for _ in 0..200 {
        let (x, y) = sample_mu(&p, &mut rng).unwrap();
        let out = simulate_onepass(&p, 64, &x, &y, &mut rng).unwrap();
        assert_eq!(Some(out.decision), ghd_eval(&p, &x, &y).unwrap().as_bit());
    }
}

#[test]
fn appendix_suite_shape() {
    let reports = appendix_suite(2500).unwrap();
    let ops: Vec<&str> = reports.iter().map(|r| r.op.as_str()).collect();
    assert_eq!(
        ops,
        [
            "verify_claim_tooclose",
            "verify_claim_hyp",
            "feller_bracket",
            "feller_bracket",
            "feller_bracket",
            "fraction_defined"
        ]
    );
    assert!(reports[2..5].iter().all(|r| r.pass));
}

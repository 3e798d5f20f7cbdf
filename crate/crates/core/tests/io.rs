mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bellcomm::comm::{min_comm, Mode};
use bellcomm::io::{
    correlation_to_json, decomposition_to_json, inequality_to_json, parse_correlation, parse_decomposition,
    parse_facet_export, parse_inequality, parse_strategy_dump, strategy_dump,
};
use bellcomm::inequalities::BellInequality;
use bellcomm::quantum::qutrit_example;
use bellcomm::strategies::CostModel;

#[test]
fn shape_errors_name_the_path() {
    let text = r#"{"scenario":{"settings_a":2,"settings_b":2,"outcomes_a":2,"outcomes_b":2},"p":[[[[1,0],[0,0]]],[[[1,0],[0,0]],[[1,0],[0,0]]]]}"#;
    let err = parse_correlation(text).unwrap_err().to_string();
    assert!(err.contains("p[0]") && err.contains("found 1"), "{err}");
}

#[test]
fn non_finite_local_bound_rejected() {
    let b = BellInequality::chsh(2).unwrap();
    let text = inequality_to_json(&b, Some(2.0)).replace("\"local_bound\": 2.0", "\"local_bound\": 1e999");
    assert!(parse_inequality(&text).is_err());
}

#[test]
fn lp_decomposition_round_trips() {
    let dec = min_comm(&qutrit_example(), &CostModel::default(), Mode::Enumerate).unwrap().decomposition;
    let back = parse_decomposition(&decomposition_to_json(&dec)).unwrap();
    assert_eq!(back, dec);
}

#[test]
fn strategy_dump_skips_comments() {
    let st = common::all_strategies(2)[77];
    let text = format!("# header\n\n{}", strategy_dump(&[st]));
    assert_eq!(parse_strategy_dump(&text).unwrap(), vec![st]);
    assert!(parse_strategy_dump("class=9 alpha=0000 beta=0000").is_err());
}

proptest! {
    #[test]
    fn correlation_round_trip(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_quantum(d, &mut rng);
        prop_assert_eq!(parse_correlation(&correlation_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_correlation(&text);
        let _ = parse_inequality(&text);
        let _ = parse_decomposition(&text);
        let _ = parse_facet_export(&text);
        let _ = parse_strategy_dump(&text);
    }

    #[test]
    fn json_prefix_mutations_never_panic(cut in 0usize..400, byte in any::<u8>()) {
        let text = correlation_to_json(&qutrit_example());
        let mut bytes = text.into_bytes();
        let cut = cut.min(bytes.len() - 1);
        bytes[cut] = byte;
        if let Ok(s) = String::from_utf8(bytes) {
            let _ = parse_correlation(&s);
        }
    }
}

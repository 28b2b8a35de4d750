use std::collections::BTreeSet;

use proptest::prelude::*;
use protoabs::corpus::{
    apply_rules, default_rules, generate_synthetic, nearest_template, parse_traces, preprocess, serialize_traces,
    DecodedMessage, DecodedRow, DecodedTrace, PreprocessOptions, SynthSpec,
};
use protoabs::{build_corpus, Corpus, FieldToken, RawMessage};

const CLIENT_HELLO_SAMPLE: &str = "\
HANDSHAKE-IN CLIENTHELLO
VERSION TLS_1_2
RANDOM 5a1f30c2
SESSIONID 00
CIPHERSUITES TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256 TLS_RSA_WITH_AES_128_CBC_SHA256 TLS_RSA_WITH_AES_256_CBC_SHA
";

fn word() -> impl Strategy<Value = String> {
    "[A-Z][A-Z0-9_-]{0,6}"
}

fn traces() -> impl Strategy<Value = Vec<DecodedTrace>> {
    let row = (word(), prop::collection::vec(word(), 0..4)).prop_map(|(key, values)| DecodedRow { key, values });
    let message = prop::collection::vec(row, 1..6).prop_map(|rows| DecodedMessage { rows });
    let trace = prop::collection::vec(message, 1..5).prop_map(|messages| DecodedTrace { messages });
    prop::collection::vec(trace, 1..4)
}

#[test]
fn sample_message_parses_and_filters() {
    let traces = parse_traces(CLIENT_HELLO_SAMPLE).unwrap();
    assert_eq!(traces.len(), 1);
    assert_eq!(traces[0].messages.len(), 1);
    assert_eq!(traces[0].messages[0].rows.len(), 5);
    let corpus = preprocess(&traces, &PreprocessOptions::default()).unwrap();
    assert_eq!(corpus.len(), 1);
    assert_eq!(corpus.message(0).len_present(), 5);
    assert_eq!(apply_rules(&corpus, &default_rules()).unwrap().get(0), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_text_round_trips(t in traces()) {
        let text = serialize_traces(&t);
        prop_assert_eq!(parse_traces(&text).unwrap(), t.clone());
        prop_assert_eq!(serialize_traces(&parse_traces(&text).unwrap()), text);
    }

    #[test]
    fn preprocess_drops_filtered_keys(t in traces(), arity in 1usize..12, dropped in prop::collection::btree_set(word(), 0..4)) {
        let options = PreprocessOptions { arity, drop_keys: dropped.clone(), ..Default::default() };
        match preprocess(&t, &options) {
            Ok(corpus) => {
                for m in corpus.messages() {
                    prop_assert_eq!(m.arity(), arity);
                    for token in m.fields() {
                        if let Some(key) = token.key() {
                            prop_assert!(!dropped.contains(key));
                        }
                    }
                }
            }
            Err(e) => prop_assert!(matches!(e, protoabs::Error::EmptyCorpus), "{e}"),
        }
    }

    #[test]
    fn sampling_is_a_seeded_subset(t in traces(), seed in any::<u64>(), frac in 0.0f64..=1.0) {
        let all = preprocess(&t, &PreprocessOptions::default()).unwrap();
        let n = ((all.len() as f64 * frac) as usize).max(1);
        let options = PreprocessOptions { sample_n: Some(n), seed, ..Default::default() };
        let sampled = preprocess(&t, &options).unwrap();
        prop_assert_eq!(sampled.len(), n);
        prop_assert_eq!(&sampled, &preprocess(&t, &options).unwrap());
        let ids: BTreeSet<&str> = all.messages().iter().map(|m| m.source_id()).collect();
        for m in sampled.messages() {
            prop_assert!(ids.contains(m.source_id()));
        }
    }

    #[test]
    fn corpus_json_round_trips(t in traces(), arity in 1usize..10) {
        let corpus = preprocess(&t, &PreprocessOptions { arity, ..Default::default() }).unwrap();
        let json = serde_json::to_string(&corpus).unwrap();
        let back: Corpus = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn build_corpus_is_deterministic_and_hamming_consistent(rows in prop::collection::vec(prop::collection::vec("[abc]", 0..5), 1..12)) {
        let raw: Vec<RawMessage> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| RawMessage::new(r.iter().map(|t| FieldToken::new(t.as_str())).collect(), format!("r{i}")))
            .collect();
        let a = build_corpus(&raw, 4).unwrap();
        prop_assert_eq!(&a, &build_corpus(&raw, 4).unwrap());
        for i in 0..a.len() {
            for j in 0..a.len() {
                let equal = protoabs::message_equal(a.message(i), a.message(j)).unwrap();
                let mismatches = a.codes(i).iter().zip(a.codes(j)).filter(|(x, y)| x != y).count();
                prop_assert_eq!(equal, mismatches == 0);
            }
        }
    }

    #[test]
    fn synthetic_corpora_are_rule_labeled_and_separable(seed in any::<u64>(), n in 50usize..400) {
        let spec = SynthSpec { n_messages: n, seed, noise_rate: 0.0, ..SynthSpec::default() };
        let (corpus, labels) = generate_synthetic(&spec).unwrap();
        let ruled = apply_rules(&corpus, &default_rules()).unwrap();
        prop_assert_eq!(&ruled, &labels);
        prop_assert_eq!(&ruled, &apply_rules(&corpus, &default_rules()).unwrap());
        for (i, m) in corpus.messages().iter().enumerate() {
            prop_assert_eq!(Some(nearest_template(&spec.templates, m)), labels.get(i));
        }
    }

    #[test]
    fn noisy_synthetic_corpora_stay_rule_labeled(seed in any::<u64>()) {
        let spec = SynthSpec { n_messages: 300, seed, noise_rate: 0.3, ..SynthSpec::default() };
        let (corpus, labels) = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(apply_rules(&corpus, &default_rules()).unwrap(), labels);
    }
}

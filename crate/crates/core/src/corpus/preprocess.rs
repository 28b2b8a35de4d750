use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::{DecodedMessage, DecodedTrace};
use crate::error::{Error, Result};
use crate::message::{build_corpus, Corpus, FieldToken, RawMessage, DEFAULT_ARITY};

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessOptions {
    pub arity: usize,
    /// Row keys removed before flattening.
    pub drop_keys: BTreeSet<String>,
    /// Sample this many messages without replacement; `None` keeps all.
    pub sample_n: Option<usize>,
    pub seed: u64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            arity: DEFAULT_ARITY,
            drop_keys: ["RANDOM", "SESSIONID"].into_iter().map(String::from).collect(),
            sample_n: None,
            seed: 0,
        }
    }
}

/// Flattens rows into `KEY=VALUE` tokens, one per value; a row without values
/// becomes `KEY=`.
pub fn message_tokens(message: &DecodedMessage, drop_keys: &BTreeSet<String>) -> Vec<FieldToken> {
    let mut tokens = Vec::new();
    for row in message.rows.iter().filter(|r| !drop_keys.contains(&r.key)) {
        if row.values.is_empty() {
            tokens.push(FieldToken::composite(&row.key, ""));
        }
        for v in &row.values {
            tokens.push(FieldToken::composite(&row.key, v));
        }
    }
    tokens
}

pub fn preprocess(traces: &[DecodedTrace], options: &PreprocessOptions) -> Result<Corpus> {
    let raw: Vec<RawMessage> = traces
        .iter()
        .enumerate()
        .flat_map(|(t, trace)| {
            trace.messages.iter().enumerate().map(move |(m, message)| {
                RawMessage::new(message_tokens(message, &options.drop_keys), format!("trace{t}/msg{m}"))
            })
        })
        .collect();
    if raw.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let raw = match options.sample_n {
        None => raw,
        Some(n) if n > raw.len() => return Err(Error::SampleTooLarge { requested: n, available: raw.len() }),
        Some(n) => {
            let mut order: Vec<usize> = (0..raw.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));
            let mut chosen = order[..n].to_vec();
            chosen.sort_unstable();
            chosen.into_iter().map(|i| raw[i].clone()).collect()
        }
    };
    build_corpus(&raw, options.arity)
}

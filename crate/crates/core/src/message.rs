//! Categorical message representation shared by every other module.
//!
//! A [`Message`] is an ordered, fixed-arity sequence of [`FieldToken`]s. Tokens
//! derived from decoded key/value rows are `KEY=VALUE` composites, so two
//! messages are compared position by position. Short messages are padded with
//! the reserved [`ABSENT`] symbol; padding is always a suffix.
//!
//! A [`Corpus`] additionally interns every token into a per-position symbol
//! table so that distance computations work on `u32` codes.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved symbol for a padded or missing field.
pub const ABSENT: &str = "ABSENT";

/// Default message arity.
pub const DEFAULT_ARITY: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldToken(String);

impl FieldToken {
    pub fn new(value: impl Into<String>) -> Self {
        FieldToken(value.into())
    }

    pub fn absent() -> Self {
        FieldToken(ABSENT.to_owned())
    }

    /// `KEY=VALUE` composite token.
    pub fn composite(key: &str, value: &str) -> Self {
        FieldToken(format!("{key}={value}"))
    }

    pub fn is_absent(&self) -> bool {
        self.0 == ABSENT
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Key part of a `KEY=VALUE` composite.
    pub fn key(&self) -> Option<&str> {
        self.0.split_once('=').map(|(k, _)| k)
    }
}

impl fmt::Display for FieldToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FieldToken {
    fn from(value: &str) -> Self {
        FieldToken::new(value)
    }
}

/// One data point. Equality ignores `source_id`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Message {
    fields: Vec<FieldToken>,
    #[serde(default)]
    source_id: String,
}

impl Message {
    /// Builds a message from an already padded field sequence.
    pub fn new(fields: Vec<FieldToken>, source_id: impl Into<String>) -> Result<Self> {
        check_suffix_padding(&fields)?;
        Ok(Message { fields, source_id: source_id.into() })
    }

    /// Truncates `tokens` to `arity` and pads with [`ABSENT`].
    pub fn padded(tokens: &[FieldToken], arity: usize, source_id: impl Into<String>) -> Result<Self> {
        let mut fields: Vec<FieldToken> = tokens.iter().take(arity).cloned().collect();
        fields.resize(arity, FieldToken::absent());
        Message::new(fields, source_id)
    }

    pub fn fields(&self) -> &[FieldToken] {
        &self.fields
    }

    pub fn arity(&self) -> usize {
        self.fields.len()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Number of leading non-ABSENT fields.
    pub fn len_present(&self) -> usize {
        self.fields.iter().take_while(|t| !t.is_absent()).count()
    }
}

impl PartialEq for Message {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields
    }
}

impl Eq for Message {}

fn check_suffix_padding(fields: &[FieldToken]) -> Result<()> {
    if let Some(first_absent) = fields.iter().position(FieldToken::is_absent) {
        if fields[first_absent..].iter().any(|t| !t.is_absent()) {
            return Err(Error::InteriorPadding { position: first_absent });
        }
    }
    Ok(())
}

/// Positional equality of two messages of the same arity.
pub fn message_equal(a: &Message, b: &Message) -> Result<bool> {
    if a.arity() != b.arity() {
        return Err(Error::ArityMismatch { expected: a.arity(), found: b.arity() });
    }
    Ok(a.fields == b.fields)
}

/// Unpadded token list as produced by ingestion or synthesis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawMessage {
    pub tokens: Vec<FieldToken>,
    pub source_id: String,
}

impl RawMessage {
    pub fn new(tokens: Vec<FieldToken>, source_id: impl Into<String>) -> Self {
        RawMessage { tokens, source_id: source_id.into() }
    }
}

/// Truncates and pads every raw message to `arity` and interns the result.
pub fn build_corpus(raw_messages: &[RawMessage], arity: usize) -> Result<Corpus> {
    if raw_messages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if arity == 0 {
        return Err(Error::InvalidInput("arity must be at least 1".into()));
    }
    let messages = raw_messages
        .iter()
        .map(|raw| Message::padded(&raw.tokens, arity, raw.source_id.clone()))
        .collect::<Result<Vec<_>>>()?;
    Corpus::from_messages(messages)
}

/// Immutable set of equal-arity messages with per-position symbol tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CorpusFile", into = "CorpusFile")]
pub struct Corpus {
    messages: Vec<Message>,
    arity: usize,
    vocabulary: Vec<Vec<FieldToken>>,
    index: Vec<HashMap<FieldToken, u32>>,
    codes: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    arity: usize,
    messages: Vec<Message>,
}

impl TryFrom<CorpusFile> for Corpus {
    type Error = Error;

    fn try_from(file: CorpusFile) -> Result<Self> {
        let corpus = Corpus::from_messages(file.messages)?;
        if corpus.arity != file.arity {
            return Err(Error::ArityMismatch { expected: file.arity, found: corpus.arity });
        }
        Ok(corpus)
    }
}

impl From<Corpus> for CorpusFile {
    fn from(corpus: Corpus) -> Self {
        CorpusFile { arity: corpus.arity, messages: corpus.messages }
    }
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.vocabulary == other.vocabulary
            && self.codes == other.codes
            && self.messages.iter().zip(&other.messages).all(|(a, b)| a == b && a.source_id == b.source_id)
    }
}

impl Corpus {
    /// Interns already padded messages. Vocabulary order is first appearance.
    pub fn from_messages(messages: Vec<Message>) -> Result<Self> {
        let arity = messages.first().ok_or(Error::EmptyCorpus)?.arity();
        if arity == 0 {
            return Err(Error::InvalidInput("arity must be at least 1".into()));
        }
        let mut vocabulary = vec![Vec::new(); arity];
        let mut index: Vec<HashMap<FieldToken, u32>> = vec![HashMap::new(); arity];
        let mut codes = Vec::with_capacity(messages.len() * arity);
        for message in &messages {
            if message.arity() != arity {
                return Err(Error::ArityMismatch { expected: arity, found: message.arity() });
            }
            check_suffix_padding(&message.fields)?;
            for (pos, token) in message.fields.iter().enumerate() {
                let next = vocabulary[pos].len() as u32;
                let code = *index[pos].entry(token.clone()).or_insert_with(|| {
                    vocabulary[pos].push(token.clone());
                    next
                });
                codes.push(code);
            }
        }
        Ok(Corpus { messages, arity, vocabulary, index, codes })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn message(&self, i: usize) -> &Message {
        &self.messages[i]
    }

    /// Symbol table of position `pos`.
    pub fn vocabulary(&self, pos: usize) -> &[FieldToken] {
        &self.vocabulary[pos]
    }

    /// Interned codes of message `i`.
    pub fn codes(&self, i: usize) -> &[u32] {
        &self.codes[i * self.arity..(i + 1) * self.arity]
    }

    pub fn token(&self, pos: usize, code: u32) -> &FieldToken {
        &self.vocabulary[pos][code as usize]
    }

    /// Encodes a message against this corpus' symbol tables. Tokens not in the
    /// vocabulary map to fresh codes past the end of the table, so they compare
    /// unequal to every corpus token at that position.
    pub fn encode(&self, message: &Message) -> Result<Vec<u32>> {
        if message.arity() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: message.arity() });
        }
        Ok(message
            .fields
            .iter()
            .enumerate()
            .map(|(pos, token)| self.index[pos].get(token).copied().unwrap_or(self.vocabulary[pos].len() as u32))
            .collect())
    }

    /// Inverse of [`Corpus::encode`] for in-vocabulary codes.
    pub fn decode(&self, codes: &[u32], source_id: impl Into<String>) -> Result<Message> {
        let message = self.decode_fields(codes, source_id)?;
        check_suffix_padding(&message.fields)?;
        Ok(message)
    }

    /// Like [`Corpus::decode`] but without the suffix-padding check: per-field
    /// modes may put ABSENT in front of a present token.
    pub fn decode_centroid(&self, codes: &[u32], source_id: impl Into<String>) -> Result<Message> {
        self.decode_fields(codes, source_id)
    }

    fn decode_fields(&self, codes: &[u32], source_id: impl Into<String>) -> Result<Message> {
        if codes.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: codes.len() });
        }
        let fields = codes
            .iter()
            .enumerate()
            .map(|(pos, &c)| {
                self.vocabulary[pos]
                    .get(c as usize)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("code {c} outside vocabulary at position {pos}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Message { fields, source_id: source_id.into() })
    }

    /// Number of distinct messages (ignoring provenance).
    pub fn distinct_messages(&self) -> usize {
        let mut seen: Vec<&[u32]> = (0..self.len()).map(|i| self.codes(i)).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Reference class of each message, or `None` for unlabeled points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    num_classes: usize,
    labels: Vec<Option<usize>>,
}

impl LabelVector {
    pub fn new(labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidInput(format!("label {bad} outside 0..{num_classes}")));
        }
        Ok(LabelVector { num_classes, labels })
    }

    /// Fully labeled vector; J is one more than the largest label.
    pub fn from_classes(classes: &[usize]) -> Self {
        let num_classes = classes.iter().max().map_or(0, |m| m + 1);
        LabelVector { num_classes, labels: classes.iter().map(|&c| Some(c)).collect() }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Members of every class, in index order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_classes];
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(c) = label {
                members[*c].push(i);
            }
        }
        members
    }

    pub fn histogram(&self) -> Vec<usize> {
        self.class_members().iter().map(Vec::len).collect()
    }
}

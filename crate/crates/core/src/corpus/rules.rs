//! Rule-based reference abstraction.
//!
//! Rule file syntax, one rule per line:
//!
//! ```text
//! <class_id> <priority> <test> [<test>…]
//! ```
//!
//! A test is `KEY=VALUE` (some field is exactly the composite token),
//! `KEY=*` (some field has key `KEY`), `@<pos>=TOKEN` (field `pos` is exactly
//! `TOKEN`), `@<pos>=*` (field `pos` is present), or a lone `*` that matches
//! everything. All tests of a rule must hold. The highest priority matching
//! rule wins; equal priorities go to the smaller class id.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::message::{Corpus, LabelVector, Message};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleTarget {
    Key(String),
    Position(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleExpect {
    Token(String),
    Any,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleTest {
    pub target: RuleTarget,
    pub expect: RuleExpect,
}

impl RuleTest {
    fn holds(&self, message: &Message) -> bool {
        match (&self.target, &self.expect) {
            (RuleTarget::Key(key), RuleExpect::Token(value)) => message.fields().iter().any(|t| {
                t.as_str().strip_prefix(key.as_str()).and_then(|r| r.strip_prefix('=')) == Some(value.as_str())
            }),
            (RuleTarget::Key(key), RuleExpect::Any) => message.fields().iter().any(|t| t.key() == Some(key.as_str())),
            (RuleTarget::Position(p), RuleExpect::Token(token)) => {
                message.fields().get(*p).is_some_and(|t| t.as_str() == token)
            }
            (RuleTarget::Position(p), RuleExpect::Any) => message.fields().get(*p).is_some_and(|t| !t.is_absent()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractionRule {
    pub class_id: usize,
    pub priority: i64,
    /// Conjunction; empty matches everything.
    pub tests: Vec<RuleTest>,
}

impl AbstractionRule {
    pub fn matches(&self, message: &Message) -> bool {
        self.tests.iter().all(|t| t.holds(message))
    }
}

fn parse_test(word: &str) -> std::result::Result<Option<RuleTest>, String> {
    if word == "*" {
        return Ok(None);
    }
    let (key, value) = word.split_once('=').ok_or_else(|| format!("test `{word}` lacks '='"))?;
    let target = match key.strip_prefix('@') {
        Some(pos) => RuleTarget::Position(pos.parse().map_err(|e| format!("bad position `{pos}`: {e}"))?),
        None if key.is_empty() => return Err(format!("test `{word}` has an empty key")),
        None => RuleTarget::Key(key.to_owned()),
    };
    let expect = if value == "*" { RuleExpect::Any } else { RuleExpect::Token(value.to_owned()) };
    Ok(Some(RuleTest { target, expect }))
}

pub fn parse_rules(text: &str) -> Result<Vec<AbstractionRule>> {
    let mut rules = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { path: None, line: n + 1, message };
        let mut words = line.split_whitespace();
        let class_id = words.next().unwrap_or_default();
        let class_id = class_id.parse().map_err(|e| err(format!("bad class id `{class_id}`: {e}")))?;
        let priority = words.next().ok_or_else(|| err("missing priority".into()))?;
        let priority = priority.parse().map_err(|e| err(format!("bad priority `{priority}`: {e}")))?;
        let words: Vec<&str> = words.collect();
        if words.is_empty() {
            return Err(err("rule has no tests (use `*` for a catch-all)".into()));
        }
        let tests =
            words.into_iter().filter_map(|w| parse_test(w).map_err(err).transpose()).collect::<Result<Vec<_>>>()?;
        rules.push(AbstractionRule { class_id, priority, tests });
    }
    Ok(rules)
}

pub fn read_rules(path: &Path) -> Result<Vec<AbstractionRule>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse { path: Some(path.to_owned()), line, message },
        other => other,
    })
}

/// Labels every message with its best matching rule's class.
pub fn apply_rules(corpus: &Corpus, rules: &[AbstractionRule]) -> Result<LabelVector> {
    let classes: BTreeSet<usize> = rules.iter().map(|r| r.class_id).collect();
    let num_classes = classes.len();
    if num_classes == 0 {
        return Err(Error::BadRules("rule set is empty".into()));
    }
    if classes.iter().next_back() != Some(&(num_classes - 1)) {
        return Err(Error::BadRules(format!(
            "class ids must be contiguous from 0, got {:?}",
            classes.iter().collect::<Vec<_>>()
        )));
    }
    let mut ranked: Vec<&AbstractionRule> = rules.iter().collect();
    ranked.sort_by(|a, b| b.priority.cmp(&a.priority).then(a.class_id.cmp(&b.class_id)));

    let labels = corpus
        .messages()
        .iter()
        .enumerate()
        .map(|(i, message)| {
            ranked.iter().find(|r| r.matches(message)).map(|r| Some(r.class_id)).ok_or_else(|| {
                Error::UnmatchedMessage {
                    index: i,
                    source_id: message.source_id().to_owned(),
                    tokens: message
                        .fields()
                        .iter()
                        .take_while(|t| !t.is_absent())
                        .map(|t| t.as_str())
                        .collect::<Vec<_>>()
                        .join(" "),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabelVector::new(labels, num_classes)
}

/// 21-class reference abstraction over sub-protocol, direction and message type.
pub const DEFAULT_RULES: &str = "\
# class priority tests
0  10 HANDSHAKE-IN=CLIENTHELLO
1  10 HANDSHAKE-OUT=SERVERHELLO
2  10 HANDSHAKE-OUT=CERTIFICATE
3  10 HANDSHAKE-OUT=SERVERKEYEXCHANGE
4  10 HANDSHAKE-OUT=CERTIFICATEREQUEST
5  10 HANDSHAKE-OUT=SERVERHELLODONE
6  10 HANDSHAKE-IN=CERTIFICATE
7  10 HANDSHAKE-IN=CLIENTKEYEXCHANGE
8  10 HANDSHAKE-IN=CERTIFICATEVERIFY
9  10 HANDSHAKE-IN=FINISHED
10 10 HANDSHAKE-OUT=FINISHED
11 10 CHANGECIPHERSPEC-IN=*
12 10 CHANGECIPHERSPEC-OUT=*
13 10 ALERT-IN=WARNING
14 10 ALERT-IN=FATAL
15 10 ALERT-OUT=WARNING
16 10 ALERT-OUT=FATAL
17 10 HANDSHAKE-OUT=HELLOREQUEST
18 10 HANDSHAKE-OUT=NEWSESSIONTICKET
19 10 APPLICATIONDATA-IN=*
20 10 APPLICATIONDATA-OUT=*
";

pub fn default_rules() -> Vec<AbstractionRule> {
    parse_rules(DEFAULT_RULES).expect("bundled rules parse")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::preprocess::{preprocess, PreprocessOptions};
    use crate::corpus::trace::parse_traces;

    fn corpus(text: &str) -> Corpus {
        preprocess(&parse_traces(text).unwrap(), &PreprocessOptions::default()).unwrap()
    }

    #[test]
    fn client_hello_rule() {
        let c = corpus("HANDSHAKE-IN CLIENTHELLO\nVERSION TLS_1_2\nCIPHERSUITES TLS_RSA_WITH_AES_128_CBC_SHA256\n");
        let rules = parse_rules("0 1 HANDSHAKE-IN=CLIENTHELLO\n1 1 *\n").unwrap();
        assert_eq!(apply_rules(&c, &rules).unwrap().labels(), &[Some(0)]);
        assert_eq!(apply_rules(&c, &default_rules()).unwrap().labels(), &[Some(0)]);
    }

    #[test]
    fn priority_decides() {
        let c = corpus("A x\nB y\n");
        let rules = parse_rules("0 5 A=x\n1 9 B=*\n").unwrap();
        assert_eq!(apply_rules(&c, &rules).unwrap().get(0), Some(1));
        let rules = parse_rules("1 5 A=x\n0 5 @1=B=y\n").unwrap();
        assert_eq!(apply_rules(&c, &rules).unwrap().get(0), Some(0));
    }

    #[test]
    fn catch_all_and_unmatched() {
        let c = corpus("A x\n\nQ z\n");
        let rules = parse_rules("0 5 A=x\n1 0 *\n").unwrap();
        assert_eq!(apply_rules(&c, &rules).unwrap().labels(), &[Some(0), Some(1)]);
        let rules = parse_rules("0 5 A=x\n").unwrap();
        assert!(matches!(apply_rules(&c, &rules), Err(Error::UnmatchedMessage { index: 1, .. })));
    }

    #[test]
    fn positional_tests() {
        let c = corpus("A x\nB y\n");
        assert!(parse_rules("0 1 @1=*").unwrap()[0].matches(c.message(0)));
        assert!(!parse_rules("0 1 @2=*").unwrap()[0].matches(c.message(0)));
        assert!(!parse_rules("0 1 @0=B=y").unwrap()[0].matches(c.message(0)));
    }

    #[test]
    fn malformed_rules() {
        assert!(matches!(parse_rules("x 1 A=b"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_rules("\n0 1"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_rules("0 1 Ab"), Err(Error::Parse { .. })));
        let c = corpus("A x\n");
        assert!(matches!(apply_rules(&c, &parse_rules("2 1 *").unwrap()), Err(Error::BadRules(_))));
    }
}

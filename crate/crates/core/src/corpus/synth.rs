//! Synthetic TLS-like corpora with ground-truth classes.
//!
//! Each class is a template: an ordered list of slots, each either a fixed
//! token or a weighted choice among tokens. A message draws its length
//! uniformly from `min_len..=slots.len()`, fills the leading slots, and
//! replaces each drawn choice token with a fresh junk token of the same key
//! with probability `noise_rate`. Fixed slots are never perturbed, so a class
//! is recognizable by its fixed tokens.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::{build_corpus, Corpus, FieldToken, LabelVector, Message, RawMessage, DEFAULT_ARITY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Slot {
    Fixed(String),
    Choice(Vec<(String, f64)>),
}

impl Slot {
    fn allows(&self, token: &str) -> bool {
        match self {
            Slot::Fixed(t) => t == token,
            Slot::Choice(options) => options.iter().any(|(t, _)| t == token),
        }
    }

    fn key(&self) -> &str {
        let token = match self {
            Slot::Fixed(t) => t.as_str(),
            Slot::Choice(options) => options.first().map_or("", |(t, _)| t.as_str()),
        };
        token.split_once('=').map_or(token, |(k, _)| k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassTemplate {
    pub name: String,
    pub min_len: usize,
    pub slots: Vec<Slot>,
}

impl ClassTemplate {
    /// Positions of `message` the template cannot produce,
    /// ignoring noise. Zero for every noise-free message of this class.
    pub fn mismatches(&self, message: &Message) -> usize {
        message
            .fields()
            .iter()
            .enumerate()
            .filter(|(pos, token)| {
                let ok = match self.slots.get(*pos) {
                    Some(slot) => slot.allows(token.as_str()) || (token.is_absent() && *pos >= self.min_len),
                    None => token.is_absent(),
                };
                !ok
            })
            .count()
    }

    fn always_present(&self, arity: usize) -> usize {
        self.min_len.min(arity)
    }
}

/// Index of the template with the fewest [`ClassTemplate::mismatches`]; ties go low.
pub fn nearest_template(templates: &[ClassTemplate], message: &Message) -> usize {
    let mut best = (usize::MAX, 0);
    for (c, t) in templates.iter().enumerate() {
        let d = t.mismatches(message);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub templates: Vec<ClassTemplate>,
    pub n_messages: usize,
    pub noise_rate: f64,
    pub seed: u64,
    pub arity: usize,
    /// Relative class frequencies; uniform when `None`.
    pub class_weights: Option<Vec<f64>>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            templates: tls_templates(),
            n_messages: 5000,
            noise_rate: 0.05,
            seed: 0,
            arity: DEFAULT_ARITY,
            class_weights: None,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(m));
        if self.templates.is_empty() {
            return bad("no class templates".into());
        }
        if self.n_messages == 0 {
            return bad("n_messages must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return bad(format!("noise_rate {} outside [0, 1)", self.noise_rate));
        }
        if self.arity == 0 {
            return bad("arity must be at least 1".into());
        }
        if let Some(w) = &self.class_weights {
            if w.len() != self.templates.len() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return bad("class weights must be positive, one per template".into());
            }
        }
        for t in &self.templates {
            if t.min_len == 0 || t.min_len > t.slots.len() {
                return bad(format!("template {}: min_len {} outside 1..={}", t.name, t.min_len, t.slots.len()));
            }
            for slot in &t.slots {
                if let Slot::Choice(options) = slot {
                    if options.is_empty() || options.iter().any(|(_, w)| !(w.is_finite() && *w > 0.0)) {
                        return bad(format!("template {}: choice slot needs positive weights", t.name));
                    }
                }
            }
        }
        for (a, ta) in self.templates.iter().enumerate() {
            for tb in &self.templates[a + 1..] {
                let shared = ta.always_present(self.arity).min(tb.always_present(self.arity));
                let separated = (0..shared).any(|p| {
                    let (sa, sb) = (&ta.slots[p], &tb.slots[p]);
                    match (sa, sb) {
                        (Slot::Fixed(x), other) | (other, Slot::Fixed(x)) => !other.allows(x),
                        (Slot::Choice(xs), _) => xs.iter().all(|(x, _)| !sb.allows(x)),
                    }
                });
                if !separated {
                    return bad(format!("templates {} and {} are indistinguishable", ta.name, tb.name));
                }
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Corpus, LabelVector)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let class_weights = spec.class_weights.clone().unwrap_or_else(|| vec![1.0; spec.templates.len()]);
    let class_dist = WeightedIndex::new(&class_weights).map_err(|e| Error::BadSpec(e.to_string()))?;
    let slot_dists: Vec<Vec<Option<WeightedIndex<f64>>>> = spec
        .templates
        .iter()
        .map(|t| {
            t.slots
                .iter()
                .map(|s| match s {
                    Slot::Fixed(_) => Ok(None),
                    Slot::Choice(options) => WeightedIndex::new(options.iter().map(|(_, w)| *w))
                        .map(Some)
                        .map_err(|e| Error::BadSpec(e.to_string())),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut raw = Vec::with_capacity(spec.n_messages);
    let mut classes = Vec::with_capacity(spec.n_messages);
    for i in 0..spec.n_messages {
        let class = class_dist.sample(&mut rng);
        let template = &spec.templates[class];
        let len = rng.random_range(template.min_len..=template.slots.len());
        let mut tokens = Vec::with_capacity(len);
        for (slot, dist) in template.slots.iter().zip(&slot_dists[class]).take(len) {
            let token = match (slot, dist) {
                (Slot::Choice(options), Some(dist)) => {
                    let chosen = &options[dist.sample(&mut rng)].0;
                    if rng.random::<f64>() < spec.noise_rate {
                        format!("{}=NOISE_{:08x}", slot.key(), rng.random::<u32>())
                    } else {
                        chosen.clone()
                    }
                }
                (Slot::Fixed(t), _) => t.clone(),
                (Slot::Choice(_), None) => unreachable!("choice slots always carry a distribution"),
            };
            tokens.push(FieldToken::new(token));
        }
        raw.push(RawMessage::new(tokens, format!("synth{i}")));
        classes.push(Some(class));
    }
    let corpus = build_corpus(&raw, spec.arity)?;
    let labels = LabelVector::new(classes, spec.templates.len())?;
    Ok((corpus, labels))
}

fn fixed(token: &str) -> Slot {
    Slot::Fixed(token.to_owned())
}

fn choice(options: &[(&str, f64)]) -> Slot {
    Slot::Choice(options.iter().map(|(t, w)| ((*t).to_owned(), *w)).collect())
}

/// `count` positions of a list-valued row; position `p` favours the `p`-th
/// entry of `preferred` with probability `p_preferred`.
fn list(key: &str, preferred: &[&str], count: usize, p_preferred: f64) -> Vec<Slot> {
    let rest = (1.0 - p_preferred) / (preferred.len() - 1) as f64;
    (0..count)
        .map(|p| {
            Slot::Choice(
                preferred
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (format!("{key}={v}"), if i == p % preferred.len() { p_preferred } else { rest }))
                    .collect(),
            )
        })
        .collect()
}

const CIPHERS: &[&str] = &[
    "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256",
    "TLS_ECDHE_RSA_WITH_AES_256_GCM_SHA384",
    "TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA256",
    "TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA",
    "TLS_DHE_RSA_WITH_AES_128_GCM_SHA256",
    "TLS_DHE_RSA_WITH_AES_256_CBC_SHA",
    "TLS_RSA_WITH_AES_128_GCM_SHA256",
    "TLS_RSA_WITH_AES_256_GCM_SHA384",
    "TLS_RSA_WITH_AES_128_CBC_SHA256",
    "TLS_RSA_WITH_AES_128_CBC_SHA",
    "TLS_RSA_WITH_AES_256_CBC_SHA",
    "TLS_RSA_WITH_3DES_EDE_CBC_SHA",
];

const EXTENSIONS: &[&str] = &[
    "SERVER_NAME",
    "RENEGOTIATION_INFO",
    "ELLIPTIC_CURVES",
    "EC_POINT_FORMATS",
    "SESSION_TICKET",
    "SIGNATURE_ALGORITHMS",
    "HEARTBEAT",
    "ALPN",
    "EXTENDED_MASTER_SECRET",
    "PADDING",
];

const SIGNATURE_ALGORITHMS: &[&str] =
    &["RSA_PKCS1_SHA256", "RSA_PKCS1_SHA384", "RSA_PKCS1_SHA1", "ECDSA_SECP256R1_SHA256", "RSA_PKCS1_SHA512"];

fn version() -> Slot {
    choice(&[("VERSION=TLS_1_2", 0.75), ("VERSION=TLS_1_1", 0.1), ("VERSION=TLS_1_0", 0.15)])
}

fn template(name: &str, min_len: usize, slots: Vec<Slot>) -> ClassTemplate {
    ClassTemplate { name: name.to_owned(), min_len, slots }
}

fn alert(direction: &str, level: &str, descriptions: &[&str]) -> ClassTemplate {
    let weight = 1.0 / descriptions.len() as f64;
    let options: Vec<(String, f64)> = descriptions.iter().map(|d| (format!("ALERT-{direction}={d}"), weight)).collect();
    template(
        &format!("ALERT-{direction} {level}"),
        2,
        vec![fixed(&format!("ALERT-{direction}={level}")), Slot::Choice(options)],
    )
}

/// 21 TLS message classes matching [`DEFAULT_RULES`](super::rules::DEFAULT_RULES), in class-id order.
pub fn tls_templates() -> Vec<ClassTemplate> {
    let lifetimes = [("LIFETIME=300", 0.2), ("LIFETIME=7200", 0.5), ("LIFETIME=86400", 0.3)];
    let lengths = [("LENGTH=SMALL", 0.4), ("LENGTH=MEDIUM", 0.35), ("LENGTH=FULL", 0.25)];
    let server_certs = |n: usize| -> Vec<Slot> {
        let chain = ["CERTIFICATE=CN_SERVER", "CERTIFICATE=CN_INTERMEDIATE_CA", "CERTIFICATE=CN_ROOT_CA"];
        (0..n)
            .map(|p| {
                Slot::Choice(
                    chain.iter().enumerate().map(|(i, c)| ((*c).to_owned(), if i == p { 0.8 } else { 0.1 })).collect(),
                )
            })
            .collect()
    };
    let mut client_hello = vec![fixed("HANDSHAKE-IN=CLIENTHELLO"), version(), fixed("COMPRESSION=NULL")];
    client_hello.extend(list("CIPHERSUITES", CIPHERS, 12, 0.7));
    client_hello.extend(list("EXTENSIONS", EXTENSIONS, 8, 0.7));

    let mut server_hello = vec![
        fixed("HANDSHAKE-OUT=SERVERHELLO"),
        version(),
        fixed("COMPRESSION=NULL"),
        choice(&[
            ("CIPHERSUITE=TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256", 0.5),
            ("CIPHERSUITE=TLS_RSA_WITH_AES_128_CBC_SHA256", 0.3),
            ("CIPHERSUITE=TLS_DHE_RSA_WITH_AES_256_CBC_SHA", 0.2),
        ]),
    ];
    server_hello.extend(list(
        "EXTENSIONS",
        &["RENEGOTIATION_INFO", "EC_POINT_FORMATS", "SESSION_TICKET", "ALPN"],
        4,
        0.7,
    ));

    let mut certificate_out = vec![fixed("HANDSHAKE-OUT=CERTIFICATE")];
    certificate_out.extend(server_certs(3));

    let mut certificate_request = vec![
        fixed("HANDSHAKE-OUT=CERTIFICATEREQUEST"),
        choice(&[("CERTIFICATETYPES=RSA_SIGN", 0.7), ("CERTIFICATETYPES=ECDSA_SIGN", 0.3)]),
    ];
    certificate_request.extend(list("SIGNATUREALGORITHMS", SIGNATURE_ALGORITHMS, 4, 0.7));
    certificate_request
        .push(choice(&[("CERTIFICATEAUTHORITIES=CN_ROOT_CA", 0.6), ("CERTIFICATEAUTHORITIES=CN_CLIENT_CA", 0.4)]));

    vec![
        template("HANDSHAKE-IN CLIENTHELLO", 18, client_hello),
        template("HANDSHAKE-OUT SERVERHELLO", 7, server_hello),
        template("HANDSHAKE-OUT CERTIFICATE", 3, certificate_out),
        template(
            "HANDSHAKE-OUT SERVERKEYEXCHANGE",
            4,
            vec![
                fixed("HANDSHAKE-OUT=SERVERKEYEXCHANGE"),
                choice(&[("KEYEXCHANGE=ECDHE", 0.7), ("KEYEXCHANGE=DHE", 0.3)]),
                choice(&[("NAMEDCURVE=SECP256R1", 0.6), ("NAMEDCURVE=SECP384R1", 0.25), ("NAMEDCURVE=X25519", 0.15)]),
                choice(&[("SIGNATUREALGORITHM=RSA_PKCS1_SHA256", 0.6), ("SIGNATUREALGORITHM=RSA_PKCS1_SHA512", 0.4)]),
            ],
        ),
        template("HANDSHAKE-OUT CERTIFICATEREQUEST", 7, certificate_request),
        template("HANDSHAKE-OUT SERVERHELLODONE", 1, vec![fixed("HANDSHAKE-OUT=SERVERHELLODONE")]),
        template(
            "HANDSHAKE-IN CERTIFICATE",
            3,
            vec![
                fixed("HANDSHAKE-IN=CERTIFICATE"),
                choice(&[("CERTIFICATE=CN_CLIENT", 0.8), ("CERTIFICATE=CN_CLIENT_LEGACY", 0.2)]),
                choice(&[("CERTIFICATE=CN_CLIENT_CA", 0.9), ("CERTIFICATE=CN_ROOT_CA", 0.1)]),
            ],
        ),
        template(
            "HANDSHAKE-IN CLIENTKEYEXCHANGE",
            2,
            vec![
                fixed("HANDSHAKE-IN=CLIENTKEYEXCHANGE"),
                choice(&[("KEYEXCHANGE=RSA", 0.4), ("KEYEXCHANGE=ECDHE", 0.45), ("KEYEXCHANGE=DHE", 0.15)]),
            ],
        ),
        template(
            "HANDSHAKE-IN CERTIFICATEVERIFY",
            2,
            vec![
                fixed("HANDSHAKE-IN=CERTIFICATEVERIFY"),
                choice(&[("SIGNATUREALGORITHM=RSA_PKCS1_SHA256", 0.7), ("SIGNATUREALGORITHM=RSA_PKCS1_SHA1", 0.3)]),
            ],
        ),
        template("HANDSHAKE-IN FINISHED", 1, vec![fixed("HANDSHAKE-IN=FINISHED")]),
        template("HANDSHAKE-OUT FINISHED", 1, vec![fixed("HANDSHAKE-OUT=FINISHED")]),
        template("CHANGECIPHERSPEC-IN", 1, vec![fixed("CHANGECIPHERSPEC-IN=")]),
        template("CHANGECIPHERSPEC-OUT", 1, vec![fixed("CHANGECIPHERSPEC-OUT=")]),
        alert("IN", "WARNING", &["CLOSE_NOTIFY", "NO_RENEGOTIATION", "USER_CANCELED"]),
        alert("IN", "FATAL", &["HANDSHAKE_FAILURE", "BAD_RECORD_MAC", "UNEXPECTED_MESSAGE", "DECODE_ERROR"]),
        alert("OUT", "WARNING", &["CLOSE_NOTIFY", "NO_RENEGOTIATION"]),
        alert("OUT", "FATAL", &["HANDSHAKE_FAILURE", "BAD_RECORD_MAC", "UNEXPECTED_MESSAGE", "PROTOCOL_VERSION"]),
        template("HANDSHAKE-OUT HELLOREQUEST", 1, vec![fixed("HANDSHAKE-OUT=HELLOREQUEST")]),
        template(
            "HANDSHAKE-OUT NEWSESSIONTICKET",
            2,
            vec![fixed("HANDSHAKE-OUT=NEWSESSIONTICKET"), choice(&lifetimes)],
        ),
        template("APPLICATIONDATA-IN", 2, vec![fixed("APPLICATIONDATA-IN=RECORD"), choice(&lengths)]),
        template("APPLICATIONDATA-OUT", 2, vec![fixed("APPLICATIONDATA-OUT=RECORD"), choice(&lengths)]),
    ]
}

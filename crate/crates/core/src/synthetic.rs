//! Seeded synthetic URL corpus and intelligence-fixture generation.
//!
//! Benign URLs are dictionary-word domains with clean paths; malicious URLs
//! stuff credential keywords into hosts, use abuse-prone TLDs, encoded
//! paths, IP hosts, and executable extensions. A configurable ambiguous
//! fraction draws both classes toward each other so the middle of the
//! probability range is populated.

use std::collections::HashSet;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledSample, BENIGN, MALICIOUS};
use crate::intel::{fixture_document, url_identifier};

/// Neutral vocabulary; none of these contain a phishing keyword as a
/// substring.
const NEUTRAL_WORDS: &[&str] = &[
    "maple", "river", "garden", "autumn", "cloud", "stone", "bridge", "forest", "piano",
    "coffee", "market", "silver", "harbor", "meadow", "violet", "orange", "candle", "pepper",
    "window", "turtle", "breeze", "canyon", "ember", "falcon", "grove", "hazel", "island",
    "jasper", "kettle", "lantern", "mellow", "nectar", "onyx", "prairie", "quartz", "ripple",
    "saffron", "timber", "umber", "velvet", "willow", "zephyr", "anchor", "birch", "cedar",
    "dune", "echo", "fjord", "glacier", "heron", "iris", "juniper", "krill", "lagoon",
    "mosaic", "nimbus", "orchid", "pebble", "quill", "raven", "sparrow", "thistle", "upland",
    "vortex", "walnut", "yonder", "zenith", "amber", "basil", "clover", "delta", "elm",
    "fennel", "ginger", "hollow", "indigo", "jade", "kelp", "lotus", "mango", "noble",
    "opal", "plume", "reed", "sage", "tulip", "umbra", "vine", "wren", "yarrow",
];

const BRANDS: &[&str] =
    &["paypal", "amazon", "apple", "netflix", "chase", "dropbox", "outlook", "coinbase"];

/// Keywords both classes may exhibit in the ambiguous band; the first three
/// lean benign, the rest lean malicious.
const AMBIGUOUS_TOKENS: &[&str] = &["login", "secure", "account", "update", "signin", "verify"];

const CLEAN_TLDS: &[&str] = &["com", "org", "net", "io", "us", "edu"];
const ABUSE_TLDS: &[&str] = &["zip", "work", "review", "xyz", "top", "icu"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSpec {
    pub samples: usize,
    pub benign_fraction: f64,
    /// Fraction of samples drawn from the overlapping ambiguous band.
    pub ambiguous_fraction: f64,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self { samples: 5000, benign_fraction: 0.6, ambiguous_fraction: 0.2, seed: 42 }
    }
}

/// Generates a deduplicated, seeded URL corpus.
pub fn generate(spec: &BenchmarkSpec) -> Vec<LabeledSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let benign_target = (spec.samples as f64 * spec.benign_fraction).round() as usize;
    let mut texts: HashSet<String> = HashSet::with_capacity(spec.samples);
    let mut samples = Vec::with_capacity(spec.samples);
    let mut benign_emitted = 0usize;

    while samples.len() < spec.samples {
        let label = if benign_emitted < benign_target { BENIGN } else { MALICIOUS };
        let ambiguous = rng.gen_bool(spec.ambiguous_fraction);
        let text = if !ambiguous {
            if label == BENIGN {
                clear_benign(&mut rng)
            } else {
                clear_malicious(&mut rng)
            }
        } else if rng.gen_bool(0.1) {
            ambiguous_coinflip(&mut rng)
        } else if label == BENIGN {
            ambiguous_benign(&mut rng)
        } else {
            ambiguous_malicious(&mut rng)
        };
        if texts.insert(text.clone()) {
            let origin = format!("synthetic:{}", samples.len());
            samples.push(LabeledSample::new(text, label, origin));
            if label == BENIGN {
                benign_emitted += 1;
            }
        }
    }
    samples.shuffle(&mut rng);
    samples
}

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    NEUTRAL_WORDS[rng.gen_range(0..NEUTRAL_WORDS.len())]
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn clear_benign(rng: &mut ChaCha8Rng) -> String {
    let tld = pick(rng, CLEAN_TLDS);
    let host = match rng.gen_range(0..4) {
        0 => format!("{}.{tld}", word(rng)),
        1 => format!("www.{}.{tld}", word(rng)),
        2 => format!("{}-{}.{tld}", word(rng), word(rng)),
        _ => format!("{}.{}.{tld}", word(rng), word(rng)),
    };
    let path = match rng.gen_range(0..5) {
        0 => String::new(),
        1 => "/".to_string(),
        2 => format!("/{}", word(rng)),
        3 => format!("/{}/{}.html", word(rng), word(rng)),
        _ => format!("/{}?id={}", word(rng), rng.gen_range(1..9999)),
    };
    format!("{host}{path}")
}

/// Shared structural templates for the ambiguous band; both classes draw
/// from the same shapes so only token choice and small mutations separate
/// them.
fn ambiguous_shape(rng: &mut ChaCha8Rng, token: &str) -> String {
    let tld = pick(rng, CLEAN_TLDS);
    match rng.gen_range(0..5) {
        0 => format!("{}.{tld}/{token}", word(rng)),
        1 => format!("{}-{token}.{tld}", word(rng)),
        2 => format!("{token}.{}.{tld}/{}", word(rng), word(rng)),
        3 => format!("{}.{tld}/{}/{token}.html", word(rng), word(rng)),
        _ => format!("{}{}.{tld}/{token}", word(rng), word(rng)),
    }
}

fn ambiguous_benign(rng: &mut ChaCha8Rng) -> String {
    // Legitimate services expose credential-flavored paths and subdomains,
    // leaning on the benign-flavored tokens.
    let token = if rng.gen_bool(0.9) {
        AMBIGUOUS_TOKENS[rng.gen_range(0..3)]
    } else {
        AMBIGUOUS_TOKENS[rng.gen_range(3..AMBIGUOUS_TOKENS.len())]
    };
    ambiguous_shape(rng, token)
}

/// A thin slice of the ambiguous band is generated identically for both
/// classes: genuine coin flips that keep the calibrated middle populated.
fn ambiguous_coinflip(rng: &mut ChaCha8Rng) -> String {
    let token = AMBIGUOUS_TOKENS[rng.gen_range(0..AMBIGUOUS_TOKENS.len())];
    ambiguous_shape(rng, token)
}

fn clear_malicious(rng: &mut ChaCha8Rng) -> String {
    let phish = pick(rng, AMBIGUOUS_TOKENS);
    let brand = pick(rng, BRANDS);
    match rng.gen_range(0..5) {
        0 => format!(
            "{phish}-{brand}.{}.{}/{}.php",
            word(rng),
            pick(rng, ABUSE_TLDS),
            pick(rng, AMBIGUOUS_TOKENS),
        ),
        1 => {
            let ip: String = format!(
                "{}.{}.{}.{}",
                rng.gen_range(1..254),
                rng.gen_range(0..255),
                rng.gen_range(0..255),
                rng.gen_range(1..254)
            );
            format!("{ip}/{}/{phish}.php", word(rng))
        }
        2 => format!(
            "{brand}.{phish}.{}.{}.{}/{}",
            word(rng),
            word(rng),
            pick(rng, CLEAN_TLDS),
            pick(rng, AMBIGUOUS_TOKENS),
        ),
        3 => format!(
            "{}-{phish}{}.{}/%{:02x}%{:02x}%{:02x}%{:02x}",
            word(rng),
            rng.gen_range(10..99),
            pick(rng, ABUSE_TLDS),
            rng.gen_range(0x41..0x5a),
            rng.gen_range(0x41..0x5a),
            rng.gen_range(0x61..0x7a),
            rng.gen_range(0x61..0x7a),
        ),
        _ => format!("{brand}{}.{}/{}.exe", word(rng), pick(rng, CLEAN_TLDS), word(rng)),
    }
}

fn ambiguous_malicious(rng: &mut ChaCha8Rng) -> String {
    // Same shapes as the ambiguous benign band, leaning on the
    // malicious-flavored tokens, sometimes with digits or one escape.
    let token = if rng.gen_bool(0.7) {
        AMBIGUOUS_TOKENS[rng.gen_range(3..AMBIGUOUS_TOKENS.len())]
    } else {
        AMBIGUOUS_TOKENS[rng.gen_range(0..3)]
    };
    let token = if rng.gen_bool(0.45) {
        format!("{token}{}", rng.gen_range(1..99))
    } else {
        token.to_string()
    };
    let mut url = ambiguous_shape(rng, &token);
    if rng.gen_bool(0.2) {
        url.push_str(&format!("%{:02x}", rng.gen_range(0x41..0x7au8)));
    }
    url
}

/// Oracle-leaning mock fixture set: a configurable fraction of malicious
/// samples get reports at or above the engine range minimum, every benign
/// sample gets an explicit zero-detection report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub malicious_coverage: f64,
    pub engines_min: u32,
    pub engines_max: u32,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self { malicious_coverage: 0.85, engines_min: 6, engines_max: 40, seed: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureStats {
    pub malicious_total: usize,
    pub malicious_covered: usize,
    pub benign_reports: usize,
}

/// Writes one fixture document per covered sample, named by URL identifier.
pub fn write_intel_fixtures(
    dir: impl AsRef<Path>,
    samples: &[LabeledSample],
    spec: &FixtureSpec,
) -> io::Result<FixtureStats> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut stats = FixtureStats { malicious_total: 0, malicious_covered: 0, benign_reports: 0 };

    for sample in samples {
        let id = url_identifier(&sample.text).expect("samples are non-empty");
        if sample.label == MALICIOUS {
            stats.malicious_total += 1;
            if rng.gen_bool(spec.malicious_coverage) {
                stats.malicious_covered += 1;
                let engines = rng.gen_range(spec.engines_min..=spec.engines_max);
                let body = fixture_document(
                    engines,
                    rng.gen_range(0..3),
                    rng.gen_range(10..40),
                    rng.gen_range(0..10),
                    &["phishing"],
                    1_700_000_000,
                );
                std::fs::write(dir.join(format!("{id}.json")), body)?;
            }
        } else {
            stats.benign_reports += 1;
            let body = fixture_document(
                0,
                0,
                rng.gen_range(20..70),
                rng.gen_range(0..20),
                &[],
                1_700_000_000,
            );
            std::fs::write(dir.join(format!("{id}.json")), body)?;
        }
    }
    Ok(stats)
}

//! Deterministic stand-in corpus: templated Bangla-script and Latin
//! transliterated FAQ utterances for a small shop/course business.
//!
//! Every intent owns at least two keywords per script that no other intent
//! and no filler word uses. Every utterance contains the intent's primary
//! keyword for its script, so the intents are separable by construction.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::block::quote_if_needed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub nlu: String,
    pub domain: String,
    pub stories: String,
}

struct IntentTemplate {
    name: &'static str,
    bangla: &'static [&'static str],
    latin: &'static [&'static str],
    response_bn: &'static str,
    response_en: &'static str,
}

const INTENTS: &[IntentTemplate] = &[
    IntentTemplate { name: "greet", bangla: &["হ্যালো", "আসসালামু"], latin: &["hello", "hi"], response_bn: "হ্যালো! কীভাবে সাহায্য করতে পারি?", response_en: "Hello! How can I help?" },
    IntentTemplate { name: "goodbye", bangla: &["বিদায়", "খোদাহাফেজ"], latin: &["bye", "tata"], response_bn: "আবার কথা হবে, বিদায়!", response_en: "Goodbye, talk soon!" },
    IntentTemplate { name: "ask_price", bangla: &["দাম", "মূল্য"], latin: &["dam", "price"], response_bn: "দাম ৫০০ টাকা থেকে শুরু।", response_en: "Prices start at 500 taka." },
    IntentTemplate { name: "ask_delivery", bangla: &["ডেলিভারি", "পৌঁছাবে"], latin: &["delivery", "pouchabe"], response_bn: "ডেলিভারি ২-৩ দিনে হয়।", response_en: "Delivery takes 2-3 days." },
    IntentTemplate { name: "ask_payment", bangla: &["পেমেন্ট", "পরিশোধ"], latin: &["payment", "porishodh"], response_bn: "আমরা বিকাশ, নগদ ও কার্ড নেই।", response_en: "We accept bKash, Nagad and cards." },
    IntentTemplate { name: "ask_location", bangla: &["ঠিকানা", "অফিস"], latin: &["thikana", "office"], response_bn: "আমাদের অফিস ধানমন্ডিতে।", response_en: "Our office is in Dhanmondi." },
    IntentTemplate { name: "ask_hours", bangla: &["খোলা", "সময়সূচি"], latin: &["khola", "schedule"], response_bn: "সকাল ১০টা থেকে রাত ৮টা পর্যন্ত খোলা।", response_en: "Open 10am to 8pm." },
    IntentTemplate { name: "ask_return", bangla: &["ফেরত", "রিটার্ন"], latin: &["ferot", "return"], response_bn: "৭ দিনের মধ্যে ফেরত দেওয়া যায়।", response_en: "Returns are accepted within 7 days." },
    IntentTemplate { name: "ask_discount", bangla: &["ছাড়", "অফার"], latin: &["chhar", "offer"], response_bn: "এই সপ্তাহে ১০% ছাড় চলছে।", response_en: "There is a 10% discount this week." },
    IntentTemplate { name: "ask_contact", bangla: &["যোগাযোগ", "হটলাইন"], latin: &["jogajog", "hotline"], response_bn: "হটলাইন: ০১৭০০০০০০০০", response_en: "Hotline: 01700000000" },
    IntentTemplate { name: "ask_warranty", bangla: &["ওয়ারেন্টি", "গ্যারান্টি"], latin: &["warranty", "guarantee"], response_bn: "১ বছরের ওয়ারেন্টি আছে।", response_en: "There is a one-year warranty." },
    IntentTemplate { name: "ask_stock", bangla: &["স্টক", "মজুদ"], latin: &["stock", "available"], response_bn: "হ্যাঁ, স্টকে আছে।", response_en: "Yes, it is in stock." },
    IntentTemplate { name: "course_details", bangla: &["কোর্স", "সিলেবাস"], latin: &["course", "syllabus"], response_bn: "কোর্সে ১২টি মডিউল আছে।", response_en: "The course has 12 modules." },
    IntentTemplate { name: "course_access_duration", bangla: &["মেয়াদ", "এক্সেস"], latin: &["meyad", "access"], response_bn: "এক্সেস ১ বছর থাকবে।", response_en: "Access lasts one year." },
    IntentTemplate { name: "ask_refund", bangla: &["রিফান্ড", "টাকাফেরত"], latin: &["refund", "moneyback"], response_bn: "রিফান্ড ৫ কার্যদিবসে হয়।", response_en: "Refunds take 5 working days." },
    IntentTemplate { name: "thanks", bangla: &["ধন্যবাদ", "শুকরিয়া"], latin: &["thanks", "dhonnobad"], response_bn: "আপনাকেও ধন্যবাদ!", response_en: "Thank you too!" },
];

struct EntityTemplate {
    name: &'static str,
    /// (Bangla form, Latin form); the Latin form is the canonical value.
    values: &'static [(&'static str, &'static str)],
}

const ENTITIES: &[EntityTemplate] = &[
    EntityTemplate { name: "city", values: &[("ঢাকা", "dhaka"), ("চট্টগ্রাম", "chittagong"), ("সিলেট", "sylhet"), ("খুলনা", "khulna")] },
    EntityTemplate { name: "product", values: &[("জামা", "shirt"), ("জুতা", "shoes"), ("ব্যাগ", "bag"), ("ঘড়ি", "watch")] },
    EntityTemplate { name: "quantity", values: &[("২টা", "2ta"), ("৩টা", "3ta"), ("৫টা", "5ta"), ("১০টা", "10ta")] },
    EntityTemplate { name: "color", values: &[("লাল", "lal"), ("নীল", "nil"), ("কালো", "kalo")] },
    EntityTemplate { name: "size", values: &[("ছোট", "choto"), ("মাঝারি", "majhari"), ("বড়", "boro")] },
    EntityTemplate { name: "payment_method", values: &[("বিকাশ", "bkash"), ("নগদ", "nagad"), ("রকেট", "rocket")] },
    EntityTemplate { name: "course", values: &[("পাইথন", "python"), ("ডিজাইন", "design"), ("মার্কেটিং", "marketing")] },
    EntityTemplate { name: "date", values: &[("আজ", "aj"), ("কাল", "kal"), ("শুক্রবার", "shukrobar")] },
    EntityTemplate { name: "price", values: &[("৫০০টাকা", "500tk"), ("১০০০টাকা", "1000tk"), ("২০০টাকা", "200tk")] },
];

const FILLERS_BN: &[&str] = &["আমি", "জানতে", "চাই", "আপনাদের", "কি", "একটু", "বলবেন", "প্লিজ", "ভাই", "আপু"];
const FILLERS_LATIN: &[&str] = &["ami", "jante", "chai", "apnader", "ki", "ektu", "bolben", "plz", "bhai", "apu"];

const SYLLABLES_BN: &[&str] = &["ক", "গ", "ম", "ন", "র", "ল", "স", "ত", "প", "ব"];
const SYLLABLES_LATIN: &[&str] = &["ka", "go", "mi", "nu", "ro", "le", "sa", "ti", "po", "bu"];

/// Maximum supported number of entity types.
pub const MAX_SYNTHETIC_ENTITY_TYPES: usize = 9;

struct IntentSpec {
    name: String,
    bangla: Vec<String>,
    latin: Vec<String>,
    responses: [String; 2],
    entity: Option<usize>,
}

fn intent_specs(n_intents: usize, n_entity_types: usize) -> Vec<IntentSpec> {
    (0..n_intents)
        .map(|i| {
            let entity = if i < 2 || n_entity_types == 0 {
                None
            } else {
                Some((i - 2) % n_entity_types)
            };
            match INTENTS.get(i) {
                Some(t) => IntentSpec {
                    name: t.name.to_string(),
                    bangla: t.bangla.iter().map(|s| s.to_string()).collect(),
                    latin: t.latin.iter().map(|s| s.to_string()).collect(),
                    responses: [t.response_bn.to_string(), t.response_en.to_string()],
                    entity,
                },
                None => {
                    // Pseudo-words spelled from the intent index, so they are
                    // unique and never collide with the hand-written lists.
                    let word = |syl: &[&str], variant: usize| -> String {
                        let mut s = String::from(syl[variant]);
                        for digit in format!("{i:03}").bytes() {
                            s.push_str(syl[(digit - b'0') as usize]);
                        }
                        s
                    };
                    let name = format!("intent_{i:03}");
                    IntentSpec {
                        bangla: vec![word(SYLLABLES_BN, 0), word(SYLLABLES_BN, 1)],
                        latin: vec![word(SYLLABLES_LATIN, 0), word(SYLLABLES_LATIN, 1)],
                        responses: [format!("{name} উত্তর"), format!("Answer for {name}.")],
                        name,
                        entity,
                    }
                }
            }
        })
        .collect()
}

/// Generates nlu, domain and stories file contents.
///
/// Produces `n_intents * examples_per_intent` examples, one `utter_` response
/// per intent, one story per intent and one extra two-turn story.
///
/// # Panics
///
/// If `n_intents < 2`, `examples_per_intent < 4` or `n_entity_types > 9`.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_intents: usize,
    examples_per_intent: usize,
    n_entity_types: usize,
) -> SyntheticCorpus {
    assert!(n_intents >= 2, "need at least 2 intents");
    assert!(examples_per_intent >= 4, "need at least 4 examples per intent");
    assert!(n_entity_types <= MAX_SYNTHETIC_ENTITY_TYPES, "at most 9 entity types");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = intent_specs(n_intents, n_entity_types);

    let mut nlu = String::from("version: \"3.1\"\nnlu:\n");
    for spec in &specs {
        let _ = writeln!(nlu, "- intent: {}", spec.name);
        nlu.push_str("  examples:\n");
        for line in utterances(spec, examples_per_intent, &mut rng) {
            let _ = writeln!(nlu, "  - {}", quote_if_needed(&line));
        }
    }
    let used_entities: BTreeSet<usize> = specs.iter().filter_map(|s| s.entity).collect();
    for &e in &used_entities {
        for (bangla, latin) in ENTITIES[e].values {
            let _ = writeln!(nlu, "- synonym: {latin}");
            let _ = writeln!(nlu, "  examples:\n  - {bangla}");
        }
    }

    let mut domain = String::from("version: \"3.1\"\nintents:\n");
    let mut intent_names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    intent_names.sort();
    for name in &intent_names {
        let _ = writeln!(domain, "  - {name}");
    }
    domain.push_str("entities:\n");
    for &e in &used_entities {
        let _ = writeln!(domain, "  - {}", ENTITIES[e].name);
    }
    domain.push_str("responses:\n");
    let mut by_name: Vec<&IntentSpec> = specs.iter().collect();
    by_name.sort_by(|a, b| a.name.cmp(&b.name));
    for spec in &by_name {
        let _ = writeln!(domain, "  utter_{}:", spec.name);
        for r in &spec.responses {
            let _ = writeln!(domain, "  - text: {}", quote_if_needed(r));
        }
    }

    let mut stories = String::from("version: \"3.1\"\nstories:\n");
    for spec in &specs {
        let _ = writeln!(stories, "- story: {} path", spec.name);
        stories.push_str("  steps:\n");
        let _ = writeln!(stories, "  - intent: {}", spec.name);
        let _ = writeln!(stories, "  - action: utter_{}", spec.name);
    }
    let second = &specs[if specs.len() > 2 { 2 } else { 1 }];
    let first = &specs[0];
    let _ = writeln!(stories, "- story: {} then {}", first.name, second.name);
    stories.push_str("  steps:\n");
    for spec in [first, second] {
        let _ = writeln!(stories, "  - intent: {}", spec.name);
        let _ = writeln!(stories, "  - action: utter_{}", spec.name);
    }

    SyntheticCorpus { nlu, domain, stories }
}

fn utterances(spec: &IntentSpec, count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempt = 0usize;
    while out.len() < count {
        attempt += 1;
        let latin = out.len() % 2 == 1;
        let (keywords, fillers) = if latin {
            (&spec.latin, FILLERS_LATIN)
        } else {
            (&spec.bangla, FILLERS_BN)
        };
        let mut words: Vec<String> = Vec::new();
        let n_fillers = rng.gen_range(1..=3);
        for _ in 0..n_fillers {
            words.push(fillers.choose(rng).unwrap().to_string());
        }
        // The primary keyword is always present; any 80-20 split leaves at
        // least three same-script utterances of the intent in training.
        let at = rng.gen_range(0..=words.len());
        words.insert(at, keywords[0].clone());
        if rng.gen_bool(0.5) {
            let extra = &keywords[1 + rng.gen_range(0..keywords.len() - 1)];
            let at = rng.gen_range(0..=words.len());
            words.insert(at, extra.clone());
        }
        if let Some(e) = spec.entity {
            // Roughly two in three utterances carry the intent's entity.
            if rng.gen_range(0..3) < 2 {
                let template = &ENTITIES[e];
                let (bn, la) = template.values[rng.gen_range(0..template.values.len())];
                let surface = if latin { la } else { bn };
                let at = rng.gen_range(0..=words.len());
                words.insert(at, format!("[{surface}]({})", template.name));
            }
        }
        if attempt > 50 * count {
            // Filler combinations exhausted; disambiguate with a counter word.
            words.push(format!("{}", out.len()));
        }
        let mut line = words.join(" ");
        // Some users close with a question mark or a danda, typed flush
        // against the last word.
        match rng.gen_range(0..6) {
            0 => line.push('?'),
            1 if !latin => line.push('।'),
            _ => {}
        }
        if seen.insert(line.clone()) {
            out.push(line);
        }
    }
    out
}

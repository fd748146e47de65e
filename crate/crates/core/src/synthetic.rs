//! Seeded synthetic fixtures: a bibliographic corpus with planted
//! duplicates and boundary years, a method lexicon, noisy candidate lists,
//! gold annotations, a method/topic co-occurrence corpus and a two-source
//! token corpus for topic recovery.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::extract::{DocMethods, MethodLexicon, MethodSets};
use crate::ingest::{BiblioRecord, Source};
use crate::topics::{TokenizedDoc, TopicAssignment};

pub const BUNDLE_SEED: u64 = 7;

/// (canonical, variants)
pub const LEXICON: [(&str, &[&str]); 10] = [
    ("text mining", &["text-mining", "text analytics"]),
    (
        "topic modeling",
        &["topic modelling", "lda", "latent dirichlet allocation"],
    ),
    ("natural language processing", &["nlp"]),
    (
        "geographic information system",
        &["gis", "geographic information systems"],
    ),
    ("social network analysis", &["sna", "network analysis"]),
    (
        "data visualization",
        &["data visualisation", "visualization"],
    ),
    ("machine learning", &["ml", "machine-learning"]),
    ("optical character recognition", &["ocr"]),
    ("3d modeling", &["3d modelling", "photogrammetry"]),
    ("stylometry", &["authorship attribution"]),
];

struct Theme {
    words: [&'static str; 10],
    methods: [usize; 3],
}

const THEMES: [Theme; 6] = [
    Theme {
        words: [
            "archive",
            "manuscript",
            "letters",
            "correspondence",
            "catalogue",
            "collection",
            "provenance",
            "charter",
            "ledger",
            "scribe",
        ],
        methods: [7, 0, 1],
    },
    Theme {
        words: [
            "heritage",
            "museum",
            "monument",
            "artefact",
            "preservation",
            "conservation",
            "exhibit",
            "sculpture",
            "curator",
            "restoration",
        ],
        methods: [8, 5, 3],
    },
    Theme {
        words: [
            "novel",
            "poetry",
            "literary",
            "author",
            "narrative",
            "fiction",
            "genre",
            "verse",
            "prose",
            "canon",
        ],
        methods: [9, 1, 0],
    },
    Theme {
        words: [
            "landscape",
            "settlement",
            "region",
            "archaeology",
            "excavation",
            "territory",
            "parish",
            "boundary",
            "village",
            "terrain",
        ],
        methods: [3, 5, 8],
    },
    Theme {
        words: [
            "language",
            "dialect",
            "grammar",
            "lexical",
            "syntax",
            "vocabulary",
            "phonology",
            "morphology",
            "idiom",
            "translation",
        ],
        methods: [2, 6, 0],
    },
    Theme {
        words: [
            "newspaper",
            "press",
            "periodical",
            "editorial",
            "readership",
            "journalism",
            "pamphlet",
            "broadside",
            "printer",
            "column",
        ],
        methods: [4, 7, 1],
    },
];

const NOISE: [&str; 12] = [
    "close reading",
    "digital archive",
    "our framework",
    "qualitative interviews",
    "case study",
    "survey",
    "the proposed pipeline",
    "expert annotation",
    "online platform",
    "comparative reading",
    "crowdsourcing campaign",
    "archival research",
];

const VENUES: [&str; 4] = [
    "Digital Scholarship in the Humanities",
    "Journal of Cultural Analytics",
    "Literary and Linguistic Computing",
    "Digital Humanities Quarterly",
];

pub fn lexicon() -> Result<MethodLexicon> {
    MethodLexicon::from_entries(LEXICON.iter().map(|(c, v)| (*c, v.to_vec())))
}

/// Surface form a document used for one of its methods, in the text's casing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedMethod {
    pub canonical: String,
    pub surface: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticBundle {
    pub records: Vec<BiblioRecord>,
    /// Planted methods per record id.
    pub planted: BTreeMap<String, Vec<PlantedMethod>>,
    /// Ids of records meant to survive year filtering and deduplication.
    pub survivors: Vec<String>,
    pub candidates: BTreeMap<String, Vec<String>>,
}

impl SyntheticBundle {
    pub fn gold(&self) -> MethodSets {
        self.survivors
            .iter()
            .map(|id| {
                let set = self.planted[id]
                    .iter()
                    .map(|m| m.canonical.clone())
                    .collect();
                (id.clone(), set)
            })
            .collect()
    }

    pub fn planted_sets(&self) -> MethodSets {
        self.planted
            .iter()
            .map(|(id, ms)| (id.clone(), ms.iter().map(|m| m.canonical.clone()).collect()))
            .collect()
    }
}

fn surface_for(rng: &mut ChaCha8Rng, method: usize) -> String {
    let (canonical, variants) = LEXICON[method];
    let mut forms: Vec<&str> = vec![canonical];
    forms.extend_from_slice(variants);
    let form = *forms.choose(rng).expect("non-empty");
    match form {
        "lda" | "nlp" | "gis" | "sna" | "ml" | "ocr" => form.to_uppercase(),
        f if rng.gen_bool(0.3) => capitalize(f),
        f => f.to_string(),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pick_methods(rng: &mut ChaCha8Rng, theme: &Theme) -> Vec<usize> {
    let count = rng.gen_range(1..=3);
    let mut out: Vec<usize> = Vec::new();
    while out.len() < count {
        let m = if rng.gen_bool(0.8) {
            *theme.methods.choose(rng).expect("non-empty")
        } else {
            rng.gen_range(0..LEXICON.len())
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

fn words<'a>(rng: &mut ChaCha8Rng, theme: &'a Theme, n: usize) -> Vec<&'a str> {
    (0..n)
        .map(|_| *theme.words.choose(rng).expect("non-empty"))
        .collect()
}

fn base_record(rng: &mut ChaCha8Rng, i: usize) -> (BiblioRecord, Vec<PlantedMethod>) {
    let theme = &THEMES[rng.gen_range(0..THEMES.len())];
    let methods: Vec<PlantedMethod> = pick_methods(rng, theme)
        .into_iter()
        .map(|m| PlantedMethod {
            canonical: LEXICON[m].0.to_string(),
            surface: surface_for(rng, m),
        })
        .collect();

    let t: Vec<&str> = theme.words.choose_multiple(rng, 3).copied().collect();
    let title = format!(
        "{} and the {} of {} {}: case {}",
        capitalize(&methods[0].surface),
        t[0],
        t[1],
        t[2],
        i + 1
    );

    let mut sentences = Vec::new();
    let w = words(rng, theme, 4);
    sentences.push(format!(
        "This study examines {} and {} in {} {}.",
        w[0], w[1], w[2], w[3]
    ));
    for m in &methods {
        let w = words(rng, theme, 3);
        sentences.push(format!(
            "We apply {} to the {} {} of {}.",
            m.surface, w[0], w[1], w[2]
        ));
    }
    for _ in 0..rng.gen_range(2..=4) {
        let w = words(rng, theme, 6);
        sentences.push(format!(
            "The {} {} shows {} {} across {} {}.",
            w[0], w[1], w[2], w[3], w[4], w[5]
        ));
    }

    let source = [Source::Wos, Source::Crossref, Source::Dimensions][i % 3];
    let record = BiblioRecord {
        id: format!("syn{:03}", i + 1),
        source,
        doi: Some(format!("10.5555/syn.{:03}", i + 1)),
        title,
        abstract_text: sentences.join(" "),
        year: rng.gen_range(1993..=2022),
        venue: Some(VENUES[i % VENUES.len()].to_string()),
        authors: vec![
            format!("Author {}", i % 17),
            format!("Author {}", (i * 7 + 3) % 17),
        ],
    };
    (record, methods)
}

fn leading_sentences(text: &str, n: usize) -> String {
    let parts: Vec<&str> = text.split_inclusive(". ").take(n).collect();
    parts.concat().trim_end().to_string()
}

/// Removes one letter from the middle word of the title.
fn one_edit(title: &str) -> String {
    let chars: Vec<char> = title.chars().collect();
    let mut at = chars.len() / 2;
    while !chars[at].is_alphabetic() {
        at += 1;
    }
    chars
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != at)
        .map(|(_, c)| c)
        .collect()
}

/// The 60-record fixture: 55 generated records, three planted duplicates
/// (same DOI, same title, one-edit title) and two boundary-year records.
pub fn bundle(seed: u64) -> SyntheticBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut planted = BTreeMap::new();
    let mut survivors = Vec::new();

    for i in 0..55 {
        let (r, m) = base_record(&mut rng, i);
        survivors.push(r.id.clone());
        planted.insert(r.id.clone(), m);
        records.push(r);
    }

    let mut dup = |base: usize, id: &str, edit: &dyn Fn(&mut BiblioRecord)| {
        let mut r = records[base].clone();
        r.id = id.to_string();
        r.source = Source::Crossref;
        // intro plus the method sentences, shorter than the original
        let keep = 1 + planted[&records[base].id].len();
        r.abstract_text = leading_sentences(&r.abstract_text, keep);
        r.doi = None;
        edit(&mut r);
        planted.insert(r.id.clone(), planted[&records[base].id].clone());
        records.push(r);
    };
    dup(4, "syn-dup-doi", &|r| {
        r.doi = Some(format!("https://doi.org/10.5555/SYN.{:03}", 5));
        r.title = format!("{} (reprint)", r.title);
    });
    dup(9, "syn-dup-title", &|r| {
        r.title = format!("  {}. ", r.title.to_uppercase());
        r.source = Source::Dimensions;
    });
    dup(14, "syn-dup-fuzzy", &|r| r.title = one_edit(&r.title));

    for (id, year) in [("syn-1991", 1991), ("syn-1992", 1992)] {
        let (mut r, m) = base_record(&mut rng, records.len());
        r.id = id.to_string();
        r.year = year;
        r.doi = Some(format!("10.5555/syn.{year}"));
        if year >= 1992 {
            survivors.push(id.to_string());
        }
        planted.insert(id.to_string(), m);
        records.push(r);
    }

    let candidates = records
        .iter()
        .map(|r| {
            let truth = &planted[&r.id];
            let mut c: Vec<String> = truth.iter().map(|m| m.surface.clone()).collect();
            c.extend(
                NOISE
                    .choose_multiple(&mut rng, truth.len())
                    .map(|s| s.to_string()),
            );
            c.shuffle(&mut rng);
            (r.id.clone(), c)
        })
        .collect();

    SyntheticBundle {
        records,
        planted,
        survivors,
        candidates,
    }
}

#[derive(Serialize)]
struct CandidateLine<'a> {
    doc_id: &'a str,
    candidates: &'a [String],
}

pub const BUNDLE_CONFIG: &str = r#"version = 1
inputs = ["records.jsonl"]
format = "jsonl"
lexicon = "lexicon.json"
candidates = "candidates.jsonl"
k_list = [2, 3, 4, 6]
seed = 7
out_dir = "out"
"#;

/// File name and contents of every bundled fixture file.
pub fn bundle_files(seed: u64) -> Result<Vec<(&'static str, String)>> {
    let b = bundle(seed);
    let lexicon: BTreeMap<&str, &[&str]> = LEXICON.iter().copied().collect();
    let candidates: Vec<CandidateLine> = b
        .records
        .iter()
        .map(|r| CandidateLine {
            doc_id: &r.id,
            candidates: &b.candidates[&r.id],
        })
        .collect();
    let gold: Vec<DocMethods> = b
        .gold()
        .into_iter()
        .map(|(doc_id, m)| DocMethods {
            doc_id,
            methods: m.into_iter().collect(),
        })
        .collect();
    Ok(vec![
        ("records.jsonl", crate::io::to_jsonl(&b.records)?),
        (
            "lexicon.json",
            serde_json::to_string_pretty(&lexicon)? + "\n",
        ),
        ("candidates.jsonl", crate::io::to_jsonl(&candidates)?),
        ("gold.jsonl", crate::io::to_jsonl(&gold)?),
        ("config.toml", BUNDLE_CONFIG.to_string()),
    ])
}

pub fn write_bundle(dir: &Path, seed: u64) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for (name, contents) in bundle_files(seed)? {
        let path = dir.join(name);
        crate::io::write_file(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Method sets and dominant topics for `docs` documents over the ten
/// lexicon methods and six topics, with topic-dependent method preferences.
pub fn cooccurrence_corpus(seed: u64, docs: usize) -> (MethodSets, Vec<TopicAssignment>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut methods = MethodSets::new();
    let mut assignments = Vec::with_capacity(docs);
    for i in 0..docs {
        let id = format!("d{i:04}");
        let topic = rng.gen_range(0..THEMES.len());
        if !rng.gen_bool(0.1) {
            let set: BTreeSet<String> = pick_methods(&mut rng, &THEMES[topic])
                .into_iter()
                .map(|m| LEXICON[m].0.to_string())
                .collect();
            methods.insert(id.clone(), set);
        }
        assignments.push(TopicAssignment {
            doc_id: id,
            topic_id: topic,
        });
    }
    (methods, assignments)
}

/// Documents drawn from one of two disjoint vocabularies; returns the docs
/// and the generating source of each.
pub fn two_source_corpus(
    seed: u64,
    docs: usize,
    doc_len: usize,
) -> (Vec<TokenizedDoc>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: [Vec<String>; 2] = [
        (0..20).map(|w| format!("alpha{w:02}")).collect(),
        (0..20).map(|w| format!("omega{w:02}")).collect(),
    ];
    let mut corpus = Vec::with_capacity(docs);
    let mut truth = Vec::with_capacity(docs);
    for i in 0..docs {
        let src = rng.gen_range(0..2);
        let tokens = (0..doc_len)
            .map(|_| vocab[src].choose(&mut rng).expect("non-empty").clone())
            .collect();
        corpus.push(TokenizedDoc {
            doc_id: format!("g{i:03}"),
            tokens,
        });
        truth.push(src);
    }
    (corpus, truth)
}

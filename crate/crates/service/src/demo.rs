//! A small, self-consistent toy corpus: 50 documents, 5 labelled claims and
//! 30 propagation trees. Used by the end-to-end tests and handy for trying
//! the service locally.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use panacea_core::corpus::{
    Claim, ClaimLabel, Document, LabelProvenance, Location, RumourClass, TreeNodeRecord, TreeStance,
};

pub const DEMO_DOCUMENTS: usize = 50;
pub const DEMO_TREES: usize = 30;

struct Topic {
    claim_id: &'static str,
    claim: &'static str,
    label: ClaimLabel,
    subject: &'static str,
    supporting: &'static [&'static str],
    refuting: &'static [&'static str],
    background: &'static [&'static str],
}

const TOPICS: [Topic; 5] = [
    Topic {
        claim_id: "c1",
        claim: "coronavirus is genetically engineered",
        label: ClaimLabel::False,
        subject: "virus origin",
        supporting: &["Some posts insist the coronavirus is genetically engineered in a laboratory."],
        refuting: &[
            "There is no evidence that the coronavirus is genetically engineered.",
            "Genome analysis shows the coronavirus was not engineered and did not come from a laboratory.",
            "Scientists found no sign that the virus is genetically engineered by humans.",
        ],
        background: &[
            "Researchers compared the genome of the new coronavirus with related bat viruses.",
            "The spike protein evolved through natural selection in an animal host.",
        ],
    },
    Topic {
        claim_id: "c2",
        claim: "vitamin c cures coronavirus",
        label: ClaimLabel::False,
        subject: "vitamin c",
        supporting: &["Online adverts claim that high doses of vitamin c cure coronavirus."],
        refuting: &[
            "Vitamin c does not cure coronavirus infection.",
            "No clinical trial has shown that vitamin c cures the coronavirus.",
            "Doctors warn there is no cure for coronavirus in vitamin supplements.",
        ],
        background: &[
            "Vitamin c supports the normal function of the immune system.",
            "A balanced diet provides enough vitamin c for most adults.",
        ],
    },
    Topic {
        claim_id: "c3",
        claim: "face masks reduce the spread of coronavirus",
        label: ClaimLabel::True,
        subject: "face masks",
        supporting: &[
            "Face masks reduce the spread of coronavirus by blocking respiratory droplets.",
            "Studies show that wearing face masks reduces the spread of coronavirus in crowded places.",
            "Health agencies recommend face masks because they reduce coronavirus transmission.",
        ],
        refuting: &["A few commentators claim face masks are useless against the virus."],
        background: &[
            "Surgical masks and cloth masks filter droplets to different degrees.",
            "Masks work best together with distancing and ventilation.",
        ],
    },
    Topic {
        claim_id: "c4",
        claim: "5g networks spread coronavirus",
        label: ClaimLabel::False,
        subject: "5g networks",
        supporting: &["Conspiracy videos say 5g networks spread coronavirus through radio waves."],
        refuting: &[
            "Radio waves from 5g networks cannot spread coronavirus.",
            "The coronavirus is not spread by 5g networks; it spreads between people.",
            "Countries without 5g networks also have coronavirus outbreaks, so 5g does not spread the virus.",
        ],
        background: &[
            "5g networks use radio frequencies similar to earlier mobile generations.",
            "Telecom engineers have faced harassment over the 5g rumours.",
        ],
    },
    Topic {
        claim_id: "c5",
        claim: "washing hands with soap prevents coronavirus infection",
        label: ClaimLabel::True,
        subject: "hand washing",
        supporting: &[
            "Washing hands with soap prevents coronavirus infection by destroying the viral envelope.",
            "Regular hand washing with soap lowers the risk of coronavirus infection.",
            "Doctors confirm that washing hands with soap prevents many infections including coronavirus.",
        ],
        refuting: &["Some people doubt that soap does anything against the coronavirus."],
        background: &[
            "Hands should be washed for at least twenty seconds.",
            "Alcohol-based sanitiser is an alternative when soap and water are unavailable.",
        ],
    },
];

const SOURCES: [(&str, &str); 5] = [
    ("World Health Organization", "scientific"),
    ("Reuters", "news"),
    ("BBC", "news"),
    ("Centers for Disease Control", "scientific"),
    ("Full Fact", "fact-check"),
];

const PLACES: [&str; 10] =
    ["London", "Paris", "New York", "Lagos", "Mumbai", "Tokyo", "Berlin", "Sydney", "Toronto", "Madrid"];

/// Paths of the written record files.
#[derive(Debug, Clone)]
pub struct DemoFiles {
    pub documents: PathBuf,
    pub claims: PathBuf,
    pub trees: PathBuf,
}

pub fn demo_claims() -> Vec<Claim> {
    TOPICS
        .iter()
        .map(|t| Claim {
            claim_id: t.claim_id.to_string(),
            text: t.claim.to_string(),
            label: t.label,
            source: "demo".to_string(),
            subtype: String::new(),
        })
        .collect()
}

pub fn demo_documents() -> Vec<Document> {
    let mut docs = Vec::with_capacity(DEMO_DOCUMENTS);
    for i in 0..DEMO_DOCUMENTS {
        let topic = &TOPICS[i % TOPICS.len()];
        let round = i / TOPICS.len();
        let (source, doc_type) = SOURCES[(i + round) % SOURCES.len()];
        let mut sentences: Vec<&str> = Vec::new();
        // Most documents back the claim's true label; a few report the opposite view.
        let (main, other) = match topic.label {
            ClaimLabel::False => (topic.refuting, topic.supporting),
            _ => (topic.supporting, topic.refuting),
        };
        sentences.push(main[round % main.len()]);
        sentences.push(topic.background[round % topic.background.len()]);
        if round % 4 == 3 {
            sentences.push(other[0]);
        }
        sentences.push(main[(round + 1) % main.len()]);
        sentences.push(topic.background[(round + 1) % topic.background.len()]);
        docs.push(Document {
            doc_id: format!("doc-{:03}", i + 1),
            title: format!("{} report {}", topic.subject, round + 1),
            body: sentences.join(" "),
            source: source.to_string(),
            doc_type: doc_type.to_string(),
            url: format!("https://example.org/{}/{}", topic.claim_id, round + 1),
            date: NaiveDate::from_ymd_opt(2020, 3, 1).unwrap() + Duration::days(i as i64),
        });
    }
    docs
}

/// Trees of false claims grow as deep reply chains; trees of true claims as
/// flat reply stars.
pub fn demo_trees() -> Vec<TreeNodeRecord> {
    let mut records = Vec::new();
    for t in 0..DEMO_TREES {
        let topic = &TOPICS[t % TOPICS.len()];
        let round = t / TOPICS.len();
        let rumour = topic.label == ClaimLabel::False;
        let size = 5 + (t * 7) % 8;
        let tree_id = format!("tree-{:03}", t + 1);
        let start = Utc.with_ymd_and_hms(2020, 3, 1, 8, 0, 0).unwrap() + Duration::hours((t * 13) as i64);
        for k in 0..size {
            let parent = if k == 0 {
                None
            } else if rumour {
                Some(k - 1)
            } else {
                Some(0)
            };
            let text = if k == 0 {
                match round % 3 {
                    0 => format!("{}! share this", topic.claim),
                    1 => format!("BREAKING: {}", topic.claim),
                    _ => format!("Is it true that {}?", topic.claim),
                }
            } else if k % 3 == 0 {
                topic.refuting[k % topic.refuting.len()].to_string()
            } else if k % 3 == 1 {
                topic.supporting[k % topic.supporting.len()].to_string()
            } else {
                format!("I read that {} today, what a week", topic.claim)
            };
            records.push(TreeNodeRecord {
                tree_id: tree_id.clone(),
                tweet_id: node_id(&tree_id, k),
                parent_id: parent.map(|p| node_id(&tree_id, p)),
                user_id: format!("user{}", (t * 31 + k * 17) % 97),
                post_time: start + Duration::minutes((k * 90) as i64),
                text,
                location: Some(Location::Name(PLACES[(t + k) % PLACES.len()].to_string())),
                retweet_count: ((t + 3 * k) % 11) as u64,
                claim_ref: (k == 0).then(|| topic.claim_id.to_string()),
                stance_label: (k == 0).then_some(TreeStance::Support),
                rumour_label: (k == 0)
                    .then_some(if rumour { RumourClass::Rumour } else { RumourClass::NonRumour }),
                label_provenance: (k == 0).then_some(LabelProvenance::Annotated),
                rumour_prob: None,
            });
        }
    }
    records
}

/// The root tweet's id doubles as the tree id.
fn node_id(tree_id: &str, k: usize) -> String {
    if k == 0 {
        tree_id.to_string()
    } else {
        format!("{tree_id}-{k:02}")
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    f.flush()
}

/// Writes `documents.jsonl`, `claims.jsonl` and `trees.jsonl` into `dir`.
pub fn write_demo_corpus(dir: impl AsRef<Path>) -> std::io::Result<DemoFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = DemoFiles {
        documents: dir.join("documents.jsonl"),
        claims: dir.join("claims.jsonl"),
        trees: dir.join("trees.jsonl"),
    };
    write_jsonl(&files.documents, &demo_documents())?;
    write_jsonl(&files.claims, &demo_claims())?;
    write_jsonl(&files.trees, &demo_trees())?;
    Ok(files)
}

//! Regenerates the committed test fixtures under `tests/fixtures/`.
//!
//! Run from the crate directory:
//!
//! ```bash
//! cargo run -p iotwatch-cli --example gen_fixtures
//! ```
//!
//! Everything is seeded, so reruns are byte-identical. The generator asserts
//! the properties the fixtures are meant to pin (event counts, class counts,
//! retweet count, classification outcome) before writing anything.

use std::fmt::Write as _;
use std::path::PathBuf;

use iotwatch_core::corpus::{Label, LabeledDoc, Source};
use iotwatch_core::features::{FeatureMatrix, Vocabulary, Weighting};
use iotwatch_core::model::{train_model, ModelSpec};
use iotwatch_core::monitor::KeywordSet;
use iotwatch_core::seed::splitmix64;
use iotwatch_core::text::{preprocess, Stopwords};
use iotwatch_core::Pipeline;

/// Tiny deterministic PRNG for index shuffling.
struct Mix(u64);

impl Mix {
    fn next_below(&mut self, bound: usize) -> usize {
        self.0 = splitmix64(self.0);
        (self.0 % bound as u64) as usize
    }
}

const RELATED_TEMPLATES: [&str; 4] = [
    "IoT alert: exploit gives a remote attacker control of camera firmware",
    "New IoT vulnerability: buffer overflow in device firmware lets an attacker run exploit code",
    "CVE advisory: heap overflow vulnerability in IoT router firmware, exploit observed",
    "IoT botnet abusing firmware vulnerability; remote attacker exploit spreading",
];

const UNRELATED_TEMPLATES: [&str; 4] = [
    "IoT update: new cloud dashboard feature announcement for the smart home release",
    "Weekly IoT roundup: platform update and release notes for developers",
    "IoT conference announcement: cloud feature demos and release schedule",
    "Our IoT newsletter covers the dashboard update and the upcoming feature release",
];

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn training_corpus() -> (Vec<Vec<String>>, Vec<Label>) {
    let stopwords = Stopwords::bundled();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    for round in 0..8 {
        for template in RELATED_TEMPLATES {
            let text = format!("{template} case {round}");
            tokens.push(preprocess(&text, stopwords));
            labels.push(Label::Related);
        }
        for template in UNRELATED_TEMPLATES {
            let text = format!("{template} case {round}");
            tokens.push(preprocess(&text, stopwords));
            labels.push(Label::Unrelated);
        }
    }
    (tokens, labels)
}

fn monitor_fixtures() {
    const TOTAL: usize = 2126;
    const RELATED: usize = 119;
    const RETWEETS: usize = 1084;

    let (tokens, labels) = training_corpus();
    let vocab = Vocabulary::fit(&tokens).expect("fit fixture vocabulary");
    let x = FeatureMatrix::from_corpus(&tokens, &vocab, Weighting::TfIdf);
    let spec = ModelSpec::Rforest {
        trees: 15,
        max_features: 0.75,
        bootstrap: true,
        min_samples_leaf: 1,
    };
    let model = train_model(&spec, &x, &labels, 42).expect("train fixture model");
    let pipeline = Pipeline::new(
        model.clone(),
        vocab.clone(),
        Stopwords::bundled().clone(),
        Weighting::TfIdf,
    )
    .expect("fixture pipeline");

    // Spread the 119 related events evenly through the stream.
    let mut related_slots = [false; TOTAL];
    for i in 0..RELATED {
        related_slots[i * TOTAL / RELATED] = true;
    }
    assert_eq!(related_slots.iter().filter(|&&s| s).count(), RELATED);

    // Exactly 1084 retweets, chosen by a seeded shuffle.
    let mut order: Vec<usize> = (0..TOTAL).collect();
    let mut rng = Mix(0xFEED_5EED);
    for i in (1..TOTAL).rev() {
        let j = rng.next_below(i + 1);
        order.swap(i, j);
    }
    let mut retweet_slots = [false; TOTAL];
    for &i in order.iter().take(RETWEETS) {
        retweet_slots[i] = true;
    }

    let keywords = KeywordSet::default_list();
    let mut lines = String::new();
    let mut related_count = 0usize;
    for i in 0..TOTAL {
        let text = if related_slots[i] {
            let t = RELATED_TEMPLATES[i % RELATED_TEMPLATES.len()];
            format!("{t} (incident {i})")
        } else {
            let t = UNRELATED_TEMPLATES[i % UNRELATED_TEMPLATES.len()];
            format!("{t} (issue {i})")
        };
        assert!(keywords.is_match(&text), "event {i} must pass the keyword filter");
        let (label, _) = pipeline.classify(&text);
        assert_eq!(
            label == Label::Related,
            related_slots[i],
            "event {i} classified against its slot"
        );
        if label == Label::Related {
            related_count += 1;
        }
        let minute = i / 60;
        let second = i % 60;
        let event = serde_json::json!({
            "id": format!("t{:04}", i),
            "created_at": format!("2021-05-01T{:02}:{:02}:{:02}Z", 10 + minute / 60, minute % 60, second),
            "text": text,
            "retweeted": retweet_slots[i],
            "user": format!("user{}", i % 97),
        });
        writeln!(lines, "{event}").unwrap();
    }
    assert_eq!(related_count, RELATED);

    let dir = fixture_dir();
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("replay_2126.jsonl"), lines).unwrap();
    model.save(&dir.join("monitor_model.json")).unwrap();
    vocab.save(&dir.join("monitor_model.vocab.json")).unwrap();
    println!(
        "monitor fixture: {TOTAL} events, {RELATED} related, {RETWEETS} retweets ({:.4}%)",
        RETWEETS as f64 / TOTAL as f64 * 100.0
    );
}

/// Prediction fixture realizing the reference confusion matrix
/// (tp=218, fp=255, fn=29, tn=3698) over 247 related / 3,953 unrelated docs.
fn tableii_fixtures() {
    let dir = fixture_dir();
    let mut truth = String::new();
    let mut preds = String::new();
    let mut cm = [0usize; 4]; // tp, fp, fn, tn
    for i in 0..4200usize {
        let related = i < 247;
        let predicted_related = if related { i < 218 } else { i < 247 + 255 };
        match (predicted_related, related) {
            (true, true) => cm[0] += 1,
            (true, false) => cm[1] += 1,
            (false, true) => cm[2] += 1,
            (false, false) => cm[3] += 1,
        }
        let doc = LabeledDoc {
            doc_id: format!("tweet{i:04}"),
            text: format!("captured post number {i}"),
            label: if related { Label::Related } else { Label::Unrelated },
            source: Source::Tweet,
        };
        writeln!(truth, "{}", serde_json::to_string(&doc).unwrap()).unwrap();
        let pred = serde_json::json!({
            "doc_id": doc.doc_id,
            "label": if predicted_related { "related" } else { "unrelated" },
        });
        writeln!(preds, "{pred}").unwrap();
    }
    assert_eq!(cm, [218, 255, 29, 3698]);
    std::fs::write(dir.join("tableii_truth.jsonl"), truth).unwrap();
    std::fs::write(dir.join("tableii_preds.jsonl"), preds).unwrap();
    println!("prediction fixture: cm(tp=218, fp=255, fn=29, tn=3698)");
}

fn main() {
    monitor_fixtures();
    tableii_fixtures();
    println!("fixtures written to {}", fixture_dir().display());
}

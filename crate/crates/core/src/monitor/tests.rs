use chrono::TimeZone;

use super::*;
use crate::features::{FeatureMatrix, Weighting};
use crate::model::{train_model, ModelSpec};
use crate::pipeline::Pipeline;
use crate::text::Stopwords;

// ---------------------------------------------------------------- keywords

#[test]
fn default_list_is_the_eleven_keywords() {
    let set = KeywordSet::default_list();
    assert_eq!(set.keywords().len(), 11);
    assert_eq!(set.keywords()[0], "IoT");
    assert_eq!(set.keywords()[8], "CVE");
}

#[test]
fn single_word_keyword_matches_case_insensitively() {
    let set = KeywordSet::default_list();
    assert_eq!(set.match_text("New CVE published today"), vec!["CVE"]);
    assert!(set.is_match("new cve published"));
    assert!(set.is_match("#IoT rocks"));
}

#[test]
fn token_boundary_rule_rejects_interior_matches() {
    let set = KeywordSet::new(vec!["IoT".into()]).unwrap();
    let text = "biotic sensors are neat";
    assert!(!set.is_match(text));
    // Divergence from a naive substring matcher is the point of the rule.
    assert!(text.to_lowercase().contains("iot"));
    // Boundary fixtures against the naive-substring oracle.
    let cases = [
        ("IoT rocks", true, true),
        ("#IoT", true, true),
        ("riot police", false, true),
        ("patriotism", false, true),
        ("iot", true, true),
        ("IoT-enabled", true, true),
        ("suriot", false, true),
        ("no match here", false, false),
    ];
    for (text, expected, naive) in cases {
        assert_eq!(set.is_match(text), expected, "{text}");
        assert_eq!(text.to_lowercase().contains("iot"), naive, "{text}");
    }
}

#[test]
fn multi_word_keyword_normalizes_interior_whitespace() {
    let set = KeywordSet::new(vec!["remote attacker".into()]).unwrap();
    assert!(set.is_match("a remote  attacker may strike"));
    assert!(set.is_match("A Remote\tAttacker appeared"));
    assert!(set.is_match("remote attackers are busy")); // substring rule
    assert!(!set.is_match("remote code attacker"));
}

#[test]
fn matched_list_preserves_declaration_order() {
    let set = KeywordSet::default_list();
    let matched = set.match_text("CVE alert: IoT devices firmware exploit");
    assert_eq!(matched, vec!["IoT", "CVE", "devices firmware"]);
}

#[test]
fn empty_keyword_list_is_rejected() {
    assert!(KeywordSet::new(vec![]).is_err());
    assert!(KeywordSet::new(vec!["  ".into()]).is_err());
}

// ---------------------------------------------------------------- replay

fn event_json(id: &str, text: &str, retweeted: bool) -> String {
    format!(
        r#"{{"id":"{id}","created_at":"2021-05-01T10:00:00Z","text":"{text}","retweeted":{retweeted},"user":"tester"}}"#
    )
}

#[test]
fn replay_yields_events_in_order() {
    let data = [
        event_json("1", "first", false),
        event_json("2", "second", true),
        event_json("3", "third", false),
    ]
    .join("\n");
    let mut source = ReplaySource::from_reader(data.as_bytes());
    let mut ids = Vec::new();
    while let Some(event) = source.next_event().unwrap() {
        ids.push(event.event_id);
    }
    assert_eq!(ids, ["1", "2", "3"]);
    assert_eq!(source.skipped(), 0);
}

#[test]
fn replay_skips_malformed_middle_line() {
    let data = format!(
        "{}\nnot json at all\n{}\n",
        event_json("1", "first", false),
        event_json("2", "second", false)
    );
    let mut source = ReplaySource::from_reader(data.as_bytes());
    let mut count = 0;
    while source.next_event().unwrap().is_some() {
        count += 1;
    }
    assert_eq!(count, 2);
    assert_eq!(source.skipped(), 1);
}

#[test]
fn replay_empty_file_completes_normally() {
    let mut source = ReplaySource::from_reader(&b""[..]);
    assert!(source.next_event().unwrap().is_none());
    assert_eq!(source.skipped(), 0);
}

#[test]
fn replay_missing_file_errors_before_first_event() {
    assert!(ReplaySource::open(std::path::Path::new("/nonexistent/replay.jsonl")).is_err());
}

#[test]
fn replay_rejects_events_without_required_fields() {
    let data = format!(
        "{}\n{}\n",
        r#"{"id":"","created_at":"2021-05-01T10:00:00Z","text":"x","retweeted":false,"user":"u"}"#,
        r#"{"id":"ok","created_at":"not a timestamp","text":"x","retweeted":false,"user":"u"}"#
    );
    let mut source = ReplaySource::from_reader(data.as_bytes());
    assert!(source.next_event().unwrap().is_none());
    assert_eq!(source.skipped(), 2);
}

// ---------------------------------------------------------------- run loop

/// Tiny pipeline: vocabulary {exploit, update}, NB model where "exploit"
/// means related and "update" unrelated.
fn fixture_pipeline() -> Pipeline {
    let corpus = vec![
        vec!["exploit".to_string(), "overflow".to_string()],
        vec!["exploit".to_string()],
        vec!["update".to_string(), "release".to_string()],
        vec!["update".to_string()],
    ];
    let vocab = crate::features::Vocabulary::fit(&corpus).unwrap();
    let x = FeatureMatrix::from_corpus(&corpus, &vocab, Weighting::TfIdf);
    let y = vec![
        Label::Related,
        Label::Related,
        Label::Unrelated,
        Label::Unrelated,
    ];
    let model = train_model(&ModelSpec::multinomial_nb(), &x, &y, 0).unwrap();
    Pipeline::new(model, vocab, Stopwords::bundled().clone(), Weighting::TfIdf).unwrap()
}

fn make_event(id: usize, text: &str, retweet: bool) -> TweetEvent {
    TweetEvent {
        event_id: format!("e{id}"),
        created_at: chrono::Utc.with_ymd_and_hms(2021, 5, 1, 10, 0, 0).unwrap(),
        text: text.to_string(),
        is_retweet: retweet,
        author: "tester".into(),
    }
}

#[test]
fn run_monitor_counts_and_alerts() {
    let pipeline = fixture_pipeline();
    let events = vec![
        make_event(1, "IoT exploit overflow spotted", false),
        make_event(2, "IoT update release notes", true),
        make_event(3, "nothing interesting at all", false), // fails keyword filter
        make_event(4, "CVE exploit in device", true),
    ];
    let mut source = VecSource::new(events);
    let mut sink = VecSink::default();
    let stats = run_monitor(
        &mut source,
        &pipeline,
        KeywordSet::default_list(),
        &mut sink,
        StopBound::Exhausted,
    )
    .unwrap();
    assert_eq!(stats.collected, 3);
    assert_eq!(stats.related, 2);
    assert_eq!(stats.unrelated, 1);
    assert_eq!(stats.retweets, 2);
    assert!(!stats.partial);
    assert_eq!(stats.harvest_rate_total, Some(2.0 / 3.0));
    assert_eq!(stats.harvest_rate_vs_unrelated, Some(2.0));
    assert_eq!(stats.retweet_fraction, Some(2.0 / 3.0));
    // Conservation: alerts == related, ordered seq, all keyword-matched.
    assert_eq!(sink.alerts.len(), 2);
    assert_eq!(sink.alerts[0].seq, 1);
    assert_eq!(sink.alerts[1].seq, 2);
    assert_eq!(sink.alerts[0].event_id, "e1");
    assert_eq!(sink.alerts[1].event_id, "e4");
    for alert in &sink.alerts {
        assert_eq!(alert.label, Label::Related);
        assert!(!alert.matched_keywords.is_empty());
    }
}

#[test]
fn run_monitor_empty_source_gives_zero_stats() {
    let pipeline = fixture_pipeline();
    let mut source = VecSource::new(vec![]);
    let mut sink = VecSink::default();
    let stats = run_monitor(
        &mut source,
        &pipeline,
        KeywordSet::default_list(),
        &mut sink,
        StopBound::Exhausted,
    )
    .unwrap();
    assert_eq!(stats.collected, 0);
    assert_eq!(stats.harvest_rate_total, None);
    assert!(sink.alerts.is_empty());
}

#[test]
fn run_monitor_event_bound_stops_at_count() {
    let pipeline = fixture_pipeline();
    let events: Vec<TweetEvent> = (0..500)
        .map(|i| make_event(i, "IoT exploit overflow", false))
        .collect();
    let mut source = VecSource::new(events);
    let mut sink = VecSink::default();
    let stats = run_monitor(
        &mut source,
        &pipeline,
        KeywordSet::default_list(),
        &mut sink,
        StopBound::Events(150),
    )
    .unwrap();
    assert_eq!(stats.collected, 150);
    assert_eq!(sink.alerts.len(), 150);
}

#[test]
fn run_monitor_replay_is_deterministic() {
    let pipeline = fixture_pipeline();
    let lines: Vec<String> = (0..50)
        .map(|i| {
            let text = if i % 3 == 0 { "IoT exploit overflow" } else { "IoT update release" };
            event_json(&format!("id{i}"), text, i % 2 == 0)
        })
        .collect();
    let data = lines.join("\n");
    let run = || {
        let mut source = ReplaySource::from_reader(data.as_bytes());
        let mut sink = VecSink::default();
        let stats = run_monitor(
            &mut source,
            &pipeline,
            KeywordSet::default_list(),
            &mut sink,
            StopBound::Exhausted,
        )
        .unwrap();
        (stats, sink.alerts)
    };
    let (stats_a, alerts_a) = run();
    let (stats_b, alerts_b) = run();
    assert_eq!(stats_a, stats_b);
    assert_eq!(alerts_a, alerts_b);
    assert_eq!(stats_a.related as usize, alerts_a.len());
    // harvest_rate_total <= harvest_rate_vs_unrelated when related > 0.
    assert!(stats_a.harvest_rate_total.unwrap() <= stats_a.harvest_rate_vs_unrelated.unwrap());
}

struct FailingSink {
    after: usize,
    emitted: usize,
}

impl AlertSink for FailingSink {
    fn emit(&mut self, _alert: &Alert) -> crate::error::Result<()> {
        if self.emitted >= self.after {
            return Err(crate::error::Error::EmptyInput("sink full"));
        }
        self.emitted += 1;
        Ok(())
    }
}

#[test]
fn sink_failure_aborts_with_partial_stats() {
    let pipeline = fixture_pipeline();
    let events: Vec<TweetEvent> = (0..10)
        .map(|i| make_event(i, "IoT exploit overflow", false))
        .collect();
    let mut source = VecSource::new(events);
    let mut sink = FailingSink { after: 3, emitted: 0 };
    match run_monitor(
        &mut source,
        &pipeline,
        KeywordSet::default_list(),
        &mut sink,
        StopBound::Exhausted,
    ) {
        Err(crate::error::Error::MonitorAborted { stats, .. }) => {
            assert!(stats.partial);
            assert_eq!(stats.related, 4); // the 4th alert failed to emit
        }
        other => panic!("expected abort, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn alert_jsonl_has_the_contract_keys() {
    let alert = Alert {
        event_id: "e1".into(),
        label: Label::Related,
        score: 0.9,
        matched_keywords: vec!["CVE".into()],
        emitted_at: chrono::Utc.with_ymd_and_hms(2021, 5, 1, 10, 0, 0).unwrap(),
        seq: 1,
    };
    let mut sink = JsonlSink::new(Vec::new());
    sink.emit(&alert).unwrap();
    let line = String::from_utf8(sink.into_inner()).unwrap();
    let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    for key in ["event_id", "label", "score", "matched_keywords", "emitted_at", "seq"] {
        assert!(value.get(key).is_some(), "missing {key}");
    }
    assert_eq!(value["label"], "related");
}

#[test]
fn tweet_event_round_trips_contract_keys() {
    let line = event_json("e9", "hello world", true);
    let event: TweetEvent = serde_json::from_str(&line).unwrap();
    assert_eq!(event.event_id, "e9");
    assert!(event.is_retweet);
    assert_eq!(event.author, "tester");
    let back = serde_json::to_value(&event).unwrap();
    for key in ["id", "created_at", "text", "retweeted", "user"] {
        assert!(back.get(key).is_some(), "missing {key}");
    }
}

use std::collections::BTreeSet;

use rand::Rng;
use topiary_core::changelog::{LogFile, Provenance};
use topiary_core::refactor::{plan_merge, MergeRequest};
use topiary_core::synth::random_edit;
use topiary_core::{vocab, write_taxonomy, AnnotationValue, AtomicChange, Axiom, Iri, LogError, ProjectId, ProjectLog, UserId};
use topiary_testkit::gen::{iri, root};
use topiary_testkit::oracle::{fold_revisions, history_scan, Facts};
use topiary_testkit::rng;

fn user() -> UserId {
    UserId::new("curator")
}

fn random_log(seed: u64, commits: u64) -> ProjectLog {
    let mut r = rng(seed);
    let mut log = ProjectLog::new(ProjectId::new("demo"), root());
    for i in 0..commits {
        let edit = random_edit(log.head(), &mut r, i);
        log.commit(edit, user(), format!("edit {i}"), Provenance::Manual).unwrap();
    }
    log
}

#[test]
fn replay_matches_fold_oracle() {
    let log = random_log(1, 300);
    let mut r = rng(99);
    for _ in 0..30 {
        let k = r.random_range(0..=log.head_revision());
        let oracle = fold_revisions(&root(), &log.revisions()[..k as usize]);
        assert_eq!(log.replay(k).unwrap().axioms(), &oracle, "k = {k}");
    }
    assert_eq!(log.head().axioms(), &fold_revisions(&root(), log.revisions()));
    assert!(matches!(log.replay(log.head_revision() + 1), Err(LogError::UnknownRevision(_))));
    assert_eq!(log.replay(0).unwrap().axioms().len(), 1);
}

#[test]
fn each_revision_extends_the_previous_replay() {
    let log = random_log(2, 60);
    for k in 1..=log.head_revision() {
        let mut prev = log.replay(k - 1).unwrap();
        prev.apply_all(&log.revision(k).unwrap().changes).unwrap();
        assert_eq!(prev, log.replay(k).unwrap());
    }
}

#[test]
fn failed_commit_leaves_head_untouched() {
    let mut log = random_log(3, 40);
    let mut r = rng(7);
    for i in 0..50 {
        let before = log.head().clone();
        let n = log.head_revision();
        let mut plan = random_edit(log.head(), &mut r, 1000 + i);
        let bogus = AtomicChange::remove(Axiom::annotation(vocab().label.clone(), root(), AnnotationValue::plain("never there")));
        let at = r.random_range(0..=plan.len());
        plan.insert(at, bogus);
        match log.commit(plan, user(), "bad", Provenance::Manual) {
            Err(LogError::ValidationFailed { index, .. }) => assert!(index <= at),
            other => panic!("expected failure, got {other:?}"),
        }
        assert_eq!(log.head(), &before);
        assert_eq!(log.head_revision(), n);
    }
}

#[test]
fn garden_bench_commit_is_one_revision() {
    let mut log = ProjectLog::new(ProjectId::new("demo"), root());
    log.commit(
        vec![AtomicChange::add(Axiom::declaration(iri("outdoor_furniture"))), AtomicChange::add(Axiom::sub_class_of(iri("outdoor_furniture"), root()))],
        user(),
        "setup",
        Provenance::Manual,
    )
    .unwrap();
    let changes = vec![
        AtomicChange::add(Axiom::declaration(iri("garden_bench"))),
        AtomicChange::add(Axiom::sub_class_of(iri("garden_bench"), iri("outdoor_furniture"))),
        AtomicChange::add(Axiom::annotation(vocab().label.clone(), iri("garden_bench"), AnnotationValue::lang_string("Garden Bench", topiary_testkit::gen::lang("en")))),
    ];
    let rev = log.commit(changes, user(), "Add Garden Bench", Provenance::Manual).unwrap();
    assert_eq!((rev.number, rev.changes.len()), (2, 3));
    assert!(matches!(log.commit(vec![], user(), "", Provenance::Manual), Err(LogError::EmptyChangeSet)));
}

#[test]
fn filtered_history_matches_scan() {
    let log = random_log(4, 200);
    let entities: BTreeSet<Iri> = log.head().classes().cloned().collect();
    for e in entities.iter().take(80) {
        let got: Vec<u64> = log.history(Some(e)).iter().map(|r| r.number).collect();
        assert_eq!(got, history_scan(log.revisions(), e), "{e}");
    }
    assert_eq!(log.history(None).len(), 200);
    let page: Vec<u64> = log.history_page(None, 10, 5).iter().map(|r| r.number).collect();
    assert_eq!(page, vec![190, 189, 188, 187, 186]);
}

#[test]
fn revert_restores_canonical_text() {
    let ontology = Iri::parse("https://example.org/t").unwrap();
    let mut log = random_log(5, 30);
    let mut r = rng(11);
    for i in 0..60 {
        let before = write_taxonomy(log.head(), &ontology);
        let edit = random_edit(log.head(), &mut r, 500 + i);
        let n = log.commit(edit, user(), "c", Provenance::Manual).unwrap().number;
        let rev = log.revert(n, user()).unwrap();
        assert_eq!(rev.provenance, Provenance::Revert(n));
        assert_eq!(write_taxonomy(log.head(), &ontology), before);
    }
}

#[test]
fn revert_conflicts_with_later_edits() {
    let mut log = ProjectLog::new(ProjectId::new("demo"), root());
    let label = |s: &str| Axiom::annotation(vocab().label.clone(), iri("a"), AnnotationValue::plain(s));
    log.commit(vec![AtomicChange::add(Axiom::declaration(iri("a"))), AtomicChange::add(Axiom::sub_class_of(iri("a"), root()))], user(), "a", Provenance::Manual).unwrap();
    log.commit(vec![AtomicChange::add(label("x"))], user(), "x", Provenance::Manual).unwrap();
    log.commit(vec![AtomicChange::remove(label("x")), AtomicChange::add(label("y"))], user(), "rename", Provenance::Manual).unwrap();
    let head = log.head().clone();
    assert!(matches!(log.revert(2, user()), Err(LogError::InverseNotApplicable { .. })));
    assert_eq!(log.head(), &head);
    assert!(matches!(log.revert(1, user()), Err(LogError::InverseNotApplicable { .. })));
    assert!(matches!(log.revert(9, user()), Err(LogError::UnknownRevision(9))));
}

#[test]
fn revert_of_revert_reapplies() {
    let mut log = random_log(6, 20);
    let mut r = rng(3);
    let edit = random_edit(log.head(), &mut r, 77);
    let k = log.commit(edit, user(), "k", Provenance::Manual).unwrap().number;
    let after_k = log.head().clone();
    let undo = log.revert(k, user()).unwrap().number;
    assert!(matches!(log.revert(k, user()), Err(LogError::InverseNotApplicable { .. })));
    log.revert(undo, user()).unwrap();
    assert_eq!(log.head(), &after_k);
}

#[test]
fn merge_revert_restores_source_edges() {
    let mut log = random_log(8, 150);
    let f = Facts::of(log.head());
    let candidates: Vec<Iri> = f.declared.iter().filter(|c| **c != root() && !f.deprecated(c)).cloned().collect();
    let mut r = rng(5);
    let mut merged = 0;
    for _ in 0..40 {
        let target = candidates[r.random_range(0..candidates.len())].clone();
        let source = candidates[r.random_range(0..candidates.len())].clone();
        let req = MergeRequest { sources: [source.clone()].into(), target, commit_message: String::new() };
        let Ok(plan) = plan_merge(log.head(), &req) else { continue };
        let snapshot = log.head().clone();
        let n = log.commit(plan, user(), "merge", Provenance::Merge).unwrap().number;
        log.revert(n, user()).unwrap();
        assert_eq!(log.head(), &snapshot);
        assert_eq!(Facts::of(log.head()).edges.iter().filter(|(s, _)| *s == source).count(), snapshot.parents(&source).count());
        merged += 1;
    }
    assert!(merged > 10);
}

#[test]
fn log_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    let log = random_log(9, 50);
    {
        let (mut file, existing) = LogFile::open(&path).unwrap();
        assert!(existing.is_empty());
        for rev in log.revisions() {
            file.append(rev).unwrap();
        }
    }
    let (_, revisions) = LogFile::open(&path).unwrap();
    assert_eq!(revisions, log.revisions());
    let rebuilt = ProjectLog::from_revisions(ProjectId::new("demo"), root(), revisions).unwrap();
    assert_eq!(rebuilt.head(), log.head());
    let first = std::fs::read_to_string(&path).unwrap();
    let line: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    for key in ["rev", "author", "ts", "msg", "prov", "changes"] {
        assert!(line.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn timestamps_never_decrease() {
    let log = random_log(10, 100);
    assert!(log.revisions().windows(2).all(|w| w[0].timestamp <= w[1].timestamp && w[0].number + 1 == w[1].number));
}

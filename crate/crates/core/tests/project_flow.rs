use std::sync::{Arc, Mutex};

use rand::Rng;
use topiary_core::authz::Role;
use topiary_core::discussions::ThreadStatus;
use topiary_core::events::{EventEnvelope, EventKind};
use topiary_core::export::ExportOptions;
use topiary_core::links::deep_link;
use topiary_core::project::{Project, ProjectError, SettingsUpdate};
use topiary_core::refactor::{AnnotationAction, AnnotationSelection, MergeRequest};
use topiary_core::seed::SeedSheet;
use topiary_core::synth::random_edit;
use topiary_core::tags::{Criteria, TagRule};
use topiary_core::{vocab, ProjectId, Revision, Taxonomy, TagId, UserId};
use topiary_testkit::gen::{iri, root};
use topiary_testkit::rng;

fn u(s: &str) -> UserId {
    UserId::new(s)
}

fn project() -> Project {
    let mut p = Project::new(ProjectId::new("demo"), "Demo", root(), u("owner"));
    for (user, role) in [("viewer", Role::View), ("commenter", Role::Comment), ("editor", Role::Edit), ("manager", Role::Manage)] {
        p.grant(&u("owner"), &u(user), role).unwrap();
    }
    p
}

#[test]
fn events_rebuild_head_and_stay_gapless() {
    let mut p = project();
    let start = p.events().last_seq();
    let seen: Arc<Mutex<Vec<EventEnvelope>>> = Arc::default();
    let sink = seen.clone();
    p.set_event_sink(Box::new(move |e| sink.lock().unwrap().push(e.clone())));
    let mut r = rng(12);
    for i in 0..300 {
        if i % 5 == 4 {
            let classes: Vec<_> = p.head().classes().cloned().collect();
            let e = classes[r.random_range(0..classes.len())].clone();
            p.post_comment(&u("commenter"), &e, &format!("note {i} @editor"), None).unwrap();
        } else {
            let edit = random_edit(p.head(), &mut r, i);
            p.commit(&u("editor"), edit, "edit").unwrap();
        }
    }
    let events = seen.lock().unwrap().clone();
    assert_eq!(events.iter().map(|e| e.seq).collect::<Vec<_>>(), (start + 1..=start + events.len() as u64).collect::<Vec<_>>());
    assert_eq!(p.subscribe(&u("viewer"), start).unwrap(), events);
    let mut rebuilt = Taxonomy::new(root());
    let mut last = 0;
    for e in events.iter().filter(|e| e.kind == EventKind::RevisionCommitted) {
        let rev: Revision = serde_json::from_value(e.payload.clone()).unwrap();
        assert_eq!(rev.number, last + 1);
        last = rev.number;
        rebuilt.apply_all(&rev.changes).unwrap();
    }
    assert_eq!(&rebuilt, p.head());
    assert_eq!(p.log().replay(last).unwrap(), rebuilt);
}

type Op = fn(&mut Project, &UserId) -> Result<(), ProjectError>;

fn seeded() -> Project {
    let mut p = project();
    let sheet = SeedSheet::from_csv("level1,level2,level3\nHome Decor,Sofas,\nHome Decor,Lamps,\nArt,,\n").unwrap();
    p.import_seed(&u("owner"), &sheet).unwrap();
    p.create_tag(&u("owner"), "Review", None, "#00AA00").unwrap();
    p.post_comment(&u("owner"), &iri("sofas"), "first", None).unwrap();
    p
}

#[test]
fn every_mutation_checks_its_role_first() {
    let ops: Vec<(&str, Role, Op)> = vec![
        ("commit", Role::Edit, |p, a| {
            let c = topiary_core::multilang::default_label_change(&iri("art"), "Fine Art", p.languages()).unwrap();
            p.commit(a, vec![c], "label").map(drop)
        }),
        ("merge", Role::Edit, |p, a| p.merge(a, &MergeRequest { sources: [iri("lamps")].into(), target: iri("sofas"), commit_message: String::new() }).map(drop)),
        ("move", Role::Edit, |p, a| p.bulk_move(a, &[iri("lamps")].into(), &iri("art"), "").map(drop)),
        ("bulk-annotate", Role::Edit, |p, a| {
            let sel = AnnotationSelection { property: Some(vocab().label.clone()), value_pattern: Some("Art".into()), ..Default::default() };
            p.bulk_annotate(a, &sel, &AnnotationAction::ReplaceValue("Arts".into()), "").map(drop)
        }),
        ("revert", Role::Edit, |p, a| p.revert(a, 1).map(drop)),
        ("tags", Role::Edit, |p, a| p.create_tag(a, "Other", None, "#123456").map(drop)),
        ("tag-rules", Role::Edit, |p, a| {
            p.set_tag_rule(a, TagRule { tag: TagId::new("tag-1"), enabled: true, criteria: Criteria::IsDeprecated })
        }),
        ("assign", Role::Edit, |p, a| p.assign_tag(a, &iri("art"), &TagId::new("tag-1"))),
        ("threads", Role::Comment, |p, a| p.post_comment(a, &iri("art"), "hello", None).map(drop)),
        ("resolve", Role::Comment, |p, a| {
            let id = p.board().threads().next().unwrap().id;
            p.set_thread_status(a, id, ThreadStatus::Resolved).map(drop)
        }),
        ("settings", Role::Manage, |p, a| p.update_settings(a, SettingsUpdate { name: Some("Renamed".into()), ..Default::default() }).map(drop)),
        ("grant", Role::Manage, |p, a| p.grant(a, &u("newcomer"), Role::View)),
    ];
    let users = [("stranger", None), ("viewer", Some(Role::View)), ("commenter", Some(Role::Comment)), ("editor", Some(Role::Edit)), ("manager", Some(Role::Manage))];
    for (name, required, op) in &ops {
        for (user, role) in users {
            let mut p = seeded();
            let before = (p.head().clone(), p.log().head_revision(), p.events().last_seq(), serde_json::to_string(p.settings()).unwrap(), p.board().comment_count(), serde_json::to_string(p.tags()).unwrap());
            let result = op(&mut p, &u(user));
            let allowed = role.is_some_and(|r| r >= *required);
            if allowed {
                assert!(result.is_ok(), "{name} by {user}: {result:?}");
            } else {
                let denied = matches!(result, Err(ProjectError::Authz(_)) | Err(ProjectError::Discussion(topiary_core::discussions::DiscussionError::PermissionDenied(_))));
                assert!(denied, "{name} by {user}: {result:?}");
                let after = (p.head().clone(), p.log().head_revision(), p.events().last_seq(), serde_json::to_string(p.settings()).unwrap(), p.board().comment_count(), serde_json::to_string(p.tags()).unwrap());
                assert_eq!(before, after, "{name} by {user} changed state");
            }
        }
    }
}

#[test]
fn reads_need_membership() {
    let mut p = seeded();
    assert!(p.entity_view(&u("stranger"), &iri("art")).is_err());
    assert!(p.export(&u("stranger"), ExportOptions::default(), None).is_err());
    let view = p.entity_view(&u("viewer"), &iri("sofas")).unwrap();
    assert_eq!(view.deep_link, deep_link(&ProjectId::new("demo"), &iri("sofas")));
    assert_eq!(view.thread_ids.len(), 1);
}

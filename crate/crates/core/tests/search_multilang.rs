use std::collections::BTreeSet;

use rand::Rng;
use topiary_core::multilang::{resolve_display_name, DisplayLanguageConfig, DisplaySource};
use topiary_core::search::{search, MatchRank, SearchField, SearchQuery};
use topiary_core::tags::{Assignments, Criteria, TagRule, TagStore};
use topiary_core::{vocab, AnnotationValue, AtomicChange, Axiom, Iri, Taxonomy};
use topiary_testkit::gen::{iri, lang, random_taxonomy, root};
use topiary_testkit::oracle::{resolve_label, search_scan};
use topiary_testkit::rng;

#[test]
fn search_result_set_equals_scan() {
    let v = vocab();
    let cfg = DisplayLanguageConfig::default();
    let field_sets = [
        vec![SearchField::Label],
        vec![SearchField::Label, SearchField::AltLabel],
        vec![SearchField::Definition],
        vec![SearchField::Label, SearchField::AltLabel, SearchField::Definition],
    ];
    for seed in 0..20 {
        let mut r = rng(seed);
        let tax = random_taxonomy(&mut r, 200);
        for needle in ["sofas", "GARDEN", "s b", "about 1", "e", "zzz-nonexistent"] {
            for fields in &field_sets {
                let include_deprecated = r.random_bool(0.5);
                let q = SearchQuery { fields: fields.iter().copied().collect(), include_deprecated, limit: 500, ..SearchQuery::text(needle) };
                let hits = search(&tax, &q, &cfg, &Assignments::new()).unwrap();
                let got: BTreeSet<Iri> = hits.iter().map(|h| h.iri.clone()).collect();
                let props: Vec<&Iri> = fields
                    .iter()
                    .map(|f| match f {
                        SearchField::Label => &v.label,
                        SearchField::AltLabel => &v.alt_label,
                        SearchField::Definition => &v.definition,
                    })
                    .collect();
                let want = search_scan(&tax, needle, &props, include_deprecated);
                let want: BTreeSet<Iri> = want.into_iter().take(500).collect();
                assert_eq!(got, want, "seed {seed} {needle:?} {fields:?}");
                assert!(hits.windows(2).all(|w| w[0].rank <= w[1].rank));
            }
        }
    }
}

#[test]
fn sofa_is_a_prefix_hit() {
    let mut tax = Taxonomy::new(root());
    tax.apply(&AtomicChange::add(Axiom::declaration(iri("sofas")))).unwrap();
    tax.apply(&AtomicChange::add(Axiom::sub_class_of(iri("sofas"), root()))).unwrap();
    tax.apply(&AtomicChange::add(Axiom::annotation(vocab().label.clone(), iri("sofas"), AnnotationValue::lang_string("Sofas", lang("en"))))).unwrap();
    let hits = search(&tax, &SearchQuery::text("sofa"), &DisplayLanguageConfig::default(), &Assignments::new()).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].rank, MatchRank::Prefix);
}

const UNIVERSE: [(&str, &str); 6] = [("Kert", "hu"), ("Garden", "en"), ("Yard", "en-US"), ("Garten", "de"), ("Backyard", "en-US"), ("Jardin", "fr-CA")];
const PREFS: [&str; 5] = ["en", "en-US", "hu", "de-AT", "fr"];

#[test]
fn resolution_fallback_exhaustive() {
    let mut orders: Vec<Vec<&str>> = vec![vec![]];
    for a in PREFS {
        orders.push(vec![a]);
        for b in PREFS {
            if a != b {
                orders.push(vec![a, b]);
            }
        }
    }
    let e = iri("garden");
    for mask in 0u32..(1 << UNIVERSE.len()) {
        let chosen: Vec<(&str, &str)> = UNIVERSE.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, x)| *x).collect();
        let mut tax = Taxonomy::new(root());
        tax.apply(&AtomicChange::add(Axiom::declaration(e.clone()))).unwrap();
        tax.apply(&AtomicChange::add(Axiom::sub_class_of(e.clone(), root()))).unwrap();
        for (text, l) in &chosen {
            tax.apply(&AtomicChange::add(Axiom::annotation(vocab().label.clone(), e.clone(), AnnotationValue::lang_string(*text, lang(l))))).unwrap();
        }
        for primary in &orders {
            for secondary in orders.iter().take(8) {
                let cfg = DisplayLanguageConfig {
                    primary: primary.iter().map(|l| lang(l)).collect(),
                    secondary: secondary.iter().map(|l| lang(l)).collect(),
                    default_for_new_entities: lang("en"),
                };
                let names = resolve_display_name(&tax, &e, &cfg).unwrap();
                match resolve_label(&chosen, primary) {
                    Some(text) => assert_eq!(names.primary.text, text, "{chosen:?} {primary:?}"),
                    None => {
                        assert_eq!(names.primary.text, "garden");
                        assert_eq!(names.primary.source, DisplaySource::IriFallback);
                    }
                }
                assert_eq!(names.secondary.map(|n| n.text), resolve_label(&chosen, secondary), "{chosen:?} {secondary:?}");
            }
        }
    }
}

#[test]
fn english_hungarian_translation_view() {
    let v = vocab();
    let mut tax = Taxonomy::new(root());
    let add = |tax: &mut Taxonomy, a: Axiom| tax.apply(&AtomicChange::add(a)).unwrap();
    for (c, en, hu) in [("architecture", "Architecture", Some("Építészet")), ("gardening", "Gardening", None), ("art", "Art", Some("Művészet"))] {
        add(&mut tax, Axiom::declaration(iri(c)));
        add(&mut tax, Axiom::sub_class_of(iri(c), root()));
        add(&mut tax, Axiom::annotation(v.label.clone(), iri(c), AnnotationValue::lang_string(en, lang("en"))));
        if let Some(hu) = hu {
            add(&mut tax, Axiom::annotation(v.label.clone(), iri(c), AnnotationValue::lang_string(hu, lang("hu"))));
        }
    }
    let cfg: DisplayLanguageConfig = serde_json::from_str(r#"{"primary":["en"],"secondary":["hu"],"default":"en"}"#).unwrap();
    let names = resolve_display_name(&tax, &iri("architecture"), &cfg).unwrap();
    assert_eq!(names.primary.text, "Architecture");
    assert_eq!(names.secondary.unwrap().text, "Építészet");
    assert!(resolve_display_name(&tax, &iri("gardening"), &cfg).unwrap().secondary.is_none());

    let mut store = TagStore::default();
    let tag = store.define_tag("Missing HU", None, "#3366cc").unwrap().id.clone();
    let rule = TagRule {
        tag: tag.clone(),
        enabled: true,
        criteria: Criteria::And(vec![
            Criteria::IsDescendantOf(root()),
            Criteria::MissingAnnotation { property: v.label.clone(), lang: Some(lang("hu")) },
        ]),
    };
    store.set_rule(&tax, rule).unwrap();
    assert_eq!(store.find_by_tag(&tax, &tag, &cfg).unwrap(), vec![iri("gardening")]);
}

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use topiary_core::tags::{Assignments, Criteria, TagRule, ValueMatcher};
use topiary_core::{vocab, AnnotationValue, AtomicChange, Axiom, Iri, LanguageTag, TagId, Taxonomy};

pub const NS: &str = "https://example.org/t/";

pub fn iri(local: &str) -> Iri {
    Iri::parse(&format!("{NS}{local}")).unwrap()
}

pub fn root() -> Iri {
    iri("root")
}

pub fn lang(tag: &str) -> LanguageTag {
    LanguageTag::parse(tag).unwrap()
}

/// Non-standard numeric property used by range matchers.
pub fn score() -> Iri {
    Iri::parse("https://example.org/prop/score").unwrap()
}

const WORDS: [&str; 12] = ["Sofas", "Garden", "Bench", "Modern", "Art", "Decor", "Lamps", "Tiles", "Cakes", "Boots", "Rugs", "Vases"];
const LANGS: [&str; 4] = ["en", "en-GB", "hu", "de"];
const SCORES: [&str; 10] = ["3", "-2.5", "10", "7.25", ".5", "abc", "1e3", "42", " 8 ", "5."];

fn pick<'a, R: Rng, T>(rng: &mut R, xs: &'a [T]) -> &'a T {
    &xs[rng.random_range(0..xs.len())]
}

fn word_label<R: Rng>(rng: &mut R, pool: usize) -> String {
    let a = pick(rng, &WORDS[..pool.clamp(1, WORDS.len())]);
    let b = pick(rng, &WORDS);
    format!("{a} {b}")
}

/// Tree-shaped taxonomy of `classes` classes below the root, with label
/// collisions, multilingual labels, overlapping alt labels, numeric scores
/// and some deprecated leaves.
pub fn random_taxonomy<R: Rng>(rng: &mut R, classes: usize) -> Taxonomy {
    let v = vocab();
    let mut tax = Taxonomy::new(root());
    let mut live = vec![root()];
    let apply = |tax: &mut Taxonomy, a: Axiom| {
        let _ = tax.apply(&AtomicChange::add(a));
    };
    for i in 1..=classes {
        let c = iri(&format!("c{i}"));
        let parent = pick(rng, &live).clone();
        apply(&mut tax, Axiom::declaration(c.clone()));
        apply(&mut tax, Axiom::sub_class_of(c.clone(), parent));
        let mut labels = Vec::new();
        for _ in 0..rng.random_range(0..3) {
            let label = AnnotationValue::lang_string(word_label(rng, 5), lang(pick(rng, &LANGS)));
            labels.push(label.clone());
            apply(&mut tax, Axiom::annotation(v.label.clone(), c.clone(), label));
        }
        if rng.random_bool(0.3) {
            let alt = match labels.first() {
                Some(l) if rng.random_bool(0.5) => l.clone(),
                _ => AnnotationValue::lang_string(word_label(rng, 12), lang(pick(rng, &LANGS))),
            };
            apply(&mut tax, Axiom::annotation(v.alt_label.clone(), c.clone(), alt));
        }
        if rng.random_bool(0.5) {
            apply(&mut tax, Axiom::annotation(v.definition.clone(), c.clone(), AnnotationValue::lang_string(format!("About {i}"), lang("en"))));
        }
        if rng.random_bool(0.4) {
            apply(&mut tax, Axiom::annotation(score(), c.clone(), AnnotationValue::plain(*pick(rng, &SCORES))));
        }
        live.push(c);
    }
    for c in live.iter().skip(1) {
        if tax.child_count(c) == 0 && rng.random_bool(0.05) {
            apply(&mut tax, Axiom::annotation(v.deprecated.clone(), c.clone(), AnnotationValue::boolean(true)));
        }
    }
    tax
}

fn random_matcher<R: Rng>(rng: &mut R) -> ValueMatcher {
    match rng.random_range(0..4) {
        0 => ValueMatcher::Equals {
            lexical: word_label(rng, 3),
            lang: rng.random_bool(0.5).then(|| lang(pick(rng, &LANGS))),
        },
        1 => ValueMatcher::Regex(pick(rng, &["^Sofas", "s$", "[0-9]", "e", "(?i)^garden", "^\\s*[0-9]+\\s*$"]).to_string()),
        2 => {
            let a: f64 = rng.random_range(-5.0..20.0);
            let b: f64 = rng.random_range(-5.0..20.0);
            ValueMatcher::NumericRange {
                min: a.min(b).round(),
                max: a.max(b).round(),
                min_inclusive: rng.random_bool(0.5),
                max_inclusive: rng.random_bool(0.5),
            }
        }
        _ => ValueMatcher::AnyValue,
    }
}

fn random_property<R: Rng>(rng: &mut R) -> Iri {
    let v = vocab();
    pick(rng, &[v.label.clone(), v.alt_label.clone(), v.definition.clone(), score()]).clone()
}

/// Random criteria tree of at most `depth` levels over classes of `tax`.
pub fn random_criteria<R: Rng>(rng: &mut R, tax: &Taxonomy, depth: usize) -> Criteria {
    let v = vocab();
    if depth > 1 && rng.random_bool(0.4) {
        return match rng.random_range(0..3) {
            0 => Criteria::And((0..rng.random_range(1..4)).map(|_| random_criteria(rng, tax, depth - 1)).collect()),
            1 => Criteria::Or((0..rng.random_range(1..4)).map(|_| random_criteria(rng, tax, depth - 1)).collect()),
            _ => Criteria::Not(Box::new(random_criteria(rng, tax, depth - 1))),
        };
    }
    match rng.random_range(0..7) {
        0 => Criteria::HasAnnotation { property: random_property(rng), value: random_matcher(rng) },
        1 => Criteria::MissingAnnotation {
            property: random_property(rng),
            lang: rng.random_bool(0.4).then(|| lang(pick(rng, &LANGS))),
        },
        2 => {
            let classes: Vec<&Iri> = tax.classes().collect();
            Criteria::IsDescendantOf((*pick(rng, &classes)).clone())
        }
        3 => Criteria::IsDeprecated,
        4 => Criteria::NonUniqueLabel(lang(pick(rng, &LANGS))),
        5 => Criteria::AnnotationOverlap { a: v.label.clone(), b: v.alt_label.clone() },
        _ => Criteria::AnnotationOverlap { a: random_property(rng), b: random_property(rng) },
    }
}

/// Up to five rules plus a few manual assignments.
pub fn random_rules<R: Rng>(rng: &mut R, tax: &Taxonomy) -> (Vec<TagRule>, Assignments) {
    let rules: Vec<TagRule> = (1..=rng.random_range(1..=5))
        .map(|i| TagRule { tag: TagId::new(format!("tag-{i}")), enabled: rng.random_bool(0.85), criteria: random_criteria(rng, tax, 4) })
        .collect();
    let classes: Vec<&Iri> = tax.classes().collect();
    let mut manual = Assignments::new();
    for _ in 0..rng.random_range(0..4) {
        let e = (*pick(rng, &classes)).clone();
        let tag = TagId::new(format!("tag-{}", rng.random_range(1..=6)));
        manual.entry(e).or_default().insert(tag);
    }
    (rules, manual)
}

const NASTY: [&str; 12] = [
    "plain", "with \"quotes\"", "back\\slash", "line\nbreak", "tab\there", "Árvíztűrő tükörfúrógép", "emoji 🌿",
    "#not a comment", ")paren(", "", "  spaced  ", "a \\\" mix",
];

/// Arbitrary axiom content for serializer round trips: foreign namespaces,
/// IRIs that cannot be abbreviated, escaped literals, typed and plain
/// values, unknown properties.
pub fn random_ofn_taxonomy<R: Rng>(rng: &mut R, classes: usize) -> Taxonomy {
    let v = vocab();
    let namespaces = [NS, "http://other.example/ns#", "urn:x-test:"];
    let mut tax = Taxonomy::new(root());
    let mut live = vec![root()];
    for i in 1..=classes {
        let ns = pick(rng, &namespaces);
        let local = match rng.random_range(0..4) {
            0 => format!("c{i}"),
            1 => format!("c{i}-x.y"),
            2 => format!("c{i}(odd)"),
            _ => format!("c{i}%C3%A9"),
        };
        let c = Iri::parse(&format!("{ns}{local}")).unwrap();
        let parent = pick(rng, &live).clone();
        tax.apply(&AtomicChange::add(Axiom::declaration(c.clone()))).unwrap();
        tax.apply(&AtomicChange::add(Axiom::sub_class_of(c.clone(), parent))).unwrap();
        for _ in 0..rng.random_range(0..4) {
            let text = format!("{} {i}", pick(rng, &NASTY));
            let value = match rng.random_range(0..4) {
                0 => AnnotationValue::plain(text),
                1 => AnnotationValue::boolean(rng.random_bool(0.5)),
                2 => AnnotationValue::typed(text, v.xsd_string.clone()).unwrap(),
                _ => AnnotationValue::lang_string(text, lang(pick(rng, &["en", "hu", "en-US", "zh-Hant-TW"]))),
            };
            let prop = pick(rng, &[v.label.clone(), v.alt_label.clone(), v.definition.clone(), score(), v.example_pin.clone()]).clone();
            let _ = tax.apply(&AtomicChange::add(Axiom::annotation(prop, c.clone(), value)));
        }
        live.push(c);
    }
    tax
}

/// The same axioms inserted in a shuffled order.
pub fn permuted<R: Rng>(rng: &mut R, tax: &Taxonomy) -> Taxonomy {
    let mut axioms: Vec<Axiom> = tax.axioms().iter().cloned().collect();
    axioms.shuffle(rng);
    Taxonomy::from_axioms_unchecked(tax.root().clone(), tax.mode(), axioms)
}

/// A random non-empty subset of `xs`.
pub fn subset<R: Rng, T: Clone + Ord>(rng: &mut R, xs: &[T], max: usize) -> BTreeSet<T> {
    let n = rng.random_range(1..=max.min(xs.len()).max(1));
    let mut out = BTreeSet::new();
    while out.len() < n.min(xs.len()) {
        out.insert(pick(rng, xs).clone());
    }
    out
}

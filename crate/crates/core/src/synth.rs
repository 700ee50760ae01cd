//! Deterministic generator for taxonomies with a prescribed shape: class
//! count, vertical count and exact maximum depth.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::iri::{Iri, LanguageTag};
use crate::model::{AnnotationValue, AtomicChange, Axiom, Taxonomy};
use crate::seed::mint_iri;
use crate::vocab::vocab;

const VERTICALS: [&str; 24] = [
    "Animals", "Architecture", "Art", "Beauty", "Cars and Motorcycles", "Celebrities", "Design", "DIY and Crafts",
    "Education", "Entertainment", "Fashion", "Food and Drink", "Gardening", "Health", "History", "Home Decor",
    "Humor", "Kids and Parenting", "Men's Fashion", "Outdoors", "Photography", "Quotes", "Sports", "Travel",
];

const MODIFIERS: [&str; 40] = [
    "Modern", "Vintage", "Rustic", "Minimalist", "Tropical", "Classic", "Urban", "Coastal", "Nordic", "Bohemian",
    "Industrial", "Seasonal", "Budget", "Luxury", "Handmade", "Outdoor", "Indoor", "Small", "Large", "Family",
    "Weekend", "Holiday", "Summer", "Winter", "Spring", "Autumn", "Healthy", "Quick", "Easy", "Advanced",
    "Colorful", "Neutral", "Retro", "Art Deco", "Mid Century", "Farmhouse", "Japanese", "French", "Italian", "Mexican",
];

const NOUNS: [&str; 40] = [
    "Ideas", "Projects", "Recipes", "Styles", "Gardens", "Rooms", "Outfits", "Tips", "Patterns", "Decor",
    "Lighting", "Furniture", "Desserts", "Workouts", "Destinations", "Crafts", "Gifts", "Parties", "Hairstyles", "Tattoos",
    "Photography", "Paintings", "Sculptures", "Buildings", "Interiors", "Kitchens", "Bathrooms", "Bedrooms", "Shoes", "Bags",
    "Jewelry", "Makeup", "Quotes", "Games", "Toys", "Books", "Movies", "Music", "Cocktails", "Snacks",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    /// Classes excluding the root.
    pub classes: usize,
    pub verticals: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Fraction of classes below depth 1 given a definition.
    pub definition_rate: f64,
    pub alt_label_rate: f64,
    pub hu_label_rate: f64,
    pub no_ads_rate: f64,
    pub reviewed_rate: f64,
}

impl ShapeSpec {
    /// ~11,000 classes, 24 verticals, 12 levels.
    pub fn paper() -> Self {
        ShapeSpec {
            classes: 11_000,
            verticals: 24,
            max_depth: 12,
            seed: 2017,
            definition_rate: 0.6,
            alt_label_rate: 0.3,
            hu_label_rate: 0.2,
            no_ads_rate: 0.01,
            reviewed_rate: 0.5,
        }
    }

    pub fn small(classes: usize, verticals: usize, max_depth: usize, seed: u64) -> Self {
        ShapeSpec { classes, verticals, max_depth, seed, ..ShapeSpec::paper() }
    }

    fn feasible(&self) -> bool {
        self.verticals >= 1 && self.max_depth >= 1 && self.classes >= self.verticals + self.max_depth - 1
    }
}

/// Changes building a taxonomy of exactly `spec.classes` classes under
/// `root`, with exactly `spec.verticals` verticals and maximum depth exactly
/// `spec.max_depth`. Every class gets an English label; other annotations are
/// sprinkled at the configured rates. Returns `None` when the shape is
/// impossible (fewer classes than verticals plus a deepest chain).
pub fn synthesize(root: &Iri, spec: &ShapeSpec) -> Option<Vec<AtomicChange>> {
    if !spec.feasible() {
        return None;
    }
    let v = vocab();
    let en = LanguageTag::parse("en").expect("static tag");
    let hu = LanguageTag::parse("hu").expect("static tag");
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let ns = root.namespace().to_string();
    let mut taken: BTreeSet<Iri> = BTreeSet::from([root.clone()]);
    let mut used_labels: BTreeSet<String> = VERTICALS.iter().take(spec.verticals).map(|s| s.to_string()).collect();
    let mut by_depth: Vec<Vec<(Iri, String)>> = vec![Vec::new(); spec.max_depth + 1];
    let mut changes = Vec::new();

    let mut add = |changes: &mut Vec<AtomicChange>, rng: &mut StdRng, parent: &Iri, label: String, depth: usize| -> Iri {
        let iri = mint_iri(&ns, &label, &|i| taken.contains(i));
        taken.insert(iri.clone());
        changes.push(AtomicChange::add(Axiom::declaration(iri.clone())));
        changes.push(AtomicChange::add(Axiom::sub_class_of(iri.clone(), parent.clone())));
        changes.push(AtomicChange::add(Axiom::annotation(v.label.clone(), iri.clone(), AnnotationValue::lang_string(label.clone(), en.clone()))));
        if depth >= 2 && rng.random_bool(spec.definition_rate) {
            let text = format!("Pins about {}.", label.to_lowercase());
            changes.push(AtomicChange::add(Axiom::annotation(v.definition.clone(), iri.clone(), AnnotationValue::lang_string(text, en.clone()))));
        }
        if rng.random_bool(spec.alt_label_rate) {
            let alt = format!("{label} Inspiration");
            changes.push(AtomicChange::add(Axiom::annotation(v.alt_label.clone(), iri.clone(), AnnotationValue::lang_string(alt, en.clone()))));
        }
        if rng.random_bool(spec.hu_label_rate) {
            let text = format!("{label} (hu)");
            changes.push(AtomicChange::add(Axiom::annotation(v.label.clone(), iri.clone(), AnnotationValue::lang_string(text, hu.clone()))));
        }
        if depth >= 2 && rng.random_bool(spec.no_ads_rate) {
            changes.push(AtomicChange::add(Axiom::annotation(v.no_ads.clone(), iri.clone(), AnnotationValue::boolean(true))));
        }
        if rng.random_bool(spec.reviewed_rate) {
            changes.push(AtomicChange::add(Axiom::annotation(v.is_human_reviewed.clone(), iri.clone(), AnnotationValue::boolean(true))));
        }
        iri
    };

    let mut fresh_label = |rng: &mut StdRng, parent_label: &str| -> String {
        let modifier = MODIFIERS[rng.random_range(0..MODIFIERS.len())];
        let noun = NOUNS[rng.random_range(0..NOUNS.len())];
        let head = parent_label.split_whitespace().last().unwrap_or(noun);
        let base = if rng.random_bool(0.5) { format!("{modifier} {noun}") } else { format!("{modifier} {head} {noun}") };
        let label = (1..)
            .map(|n| if n == 1 { base.clone() } else { format!("{base} {n}") })
            .find(|candidate| !used_labels.contains(candidate))
            .expect("unbounded candidates");
        used_labels.insert(label.clone());
        label
    };

    for i in 0..spec.verticals {
        let label = match VERTICALS.get(i) {
            Some(name) => name.to_string(),
            None => format!("Vertical {}", i + 1),
        };
        let iri = add(&mut changes, &mut rng, root, label.clone(), 1);
        by_depth[1].push((iri, label));
    }
    // one chain reaching the maximum depth
    let mut parent = by_depth[1][0].clone();
    for depth in 2..=spec.max_depth {
        let label = fresh_label(&mut rng, &parent.1);
        let iri = add(&mut changes, &mut rng, &parent.0, label.clone(), depth);
        parent = (iri, label);
        by_depth[depth].push(parent.clone());
    }
    // the rest: parent depth drawn from a bump peaking around levels 2 to 4
    let weights: Vec<f64> = (1..spec.max_depth).map(|d| match d {
        1 => 2.0,
        2 => 4.0,
        3 => 3.0,
        4 => 1.5,
        5 => 0.6,
        6 => 0.25,
        _ => 0.1,
    }).collect();
    let total = spec.verticals + spec.max_depth - 1;
    for _ in total..spec.classes {
        let available: f64 = weights.iter().enumerate().filter(|(i, _)| !by_depth[i + 1].is_empty()).map(|(_, w)| w).sum();
        let mut pick = rng.random_range(0.0..available);
        let mut depth = 1;
        for (i, w) in weights.iter().enumerate() {
            if by_depth[i + 1].is_empty() {
                continue;
            }
            depth = i + 1;
            if pick < *w {
                break;
            }
            pick -= w;
        }
        let (parent_iri, parent_label) = by_depth[depth][rng.random_range(0..by_depth[depth].len())].clone();
        let label = fresh_label(&mut rng, &parent_label);
        let iri = add(&mut changes, &mut rng, &parent_iri, label.clone(), depth + 1);
        by_depth[depth + 1].push((iri, label));
    }
    Some(changes)
}

/// A random but applicable composite edit against `tax`: add a class, add
/// or drop an annotation, relabel, move a class or deprecate a leaf. `serial`
/// keeps minted labels unique across calls.
pub fn random_edit<R: Rng>(tax: &Taxonomy, rng: &mut R, serial: u64) -> Vec<AtomicChange> {
    let v = vocab();
    let en = LanguageTag::parse("en").expect("static tag");
    let live: Vec<&Iri> = tax.classes().filter(|c| !tax.is_deprecated(c)).collect();
    let non_root: Vec<&Iri> = live.iter().copied().filter(|c| *c != tax.root()).collect();
    let pick = |rng: &mut R, from: &[&Iri]| from[rng.random_range(0..from.len())].clone();
    let kind = if non_root.is_empty() { 0 } else { rng.random_range(0..6) };
    match kind {
        1 => {
            let c = pick(rng, &non_root);
            let value = AnnotationValue::lang_string(format!("Alt {serial}"), en);
            vec![AtomicChange::add(Axiom::annotation(v.alt_label.clone(), c, value))]
        }
        2 => {
            let c = pick(rng, &non_root);
            let existing: Vec<(&Iri, &AnnotationValue)> = tax.annotations(&c).filter(|(p, _)| **p != v.deprecated).collect();
            match existing.get(rng.random_range(0..existing.len().max(1))) {
                Some((p, value)) => vec![AtomicChange::remove(Axiom::annotation((*p).clone(), c.clone(), (*value).clone()))],
                None => vec![AtomicChange::add(Axiom::annotation(v.definition.clone(), c, AnnotationValue::plain(format!("Note {serial}"))))],
            }
        }
        3 => {
            let c = pick(rng, &non_root);
            let mut changes: Vec<AtomicChange> =
                tax.labels(&c).map(|l| AtomicChange::remove(Axiom::annotation(v.label.clone(), c.clone(), l.clone()))).collect();
            changes.push(AtomicChange::add(Axiom::annotation(v.label.clone(), c, AnnotationValue::lang_string(format!("Renamed {serial}"), en))));
            changes
        }
        4 => {
            let c = pick(rng, &non_root);
            let targets: Vec<&Iri> = live.iter().copied().filter(|t| **t != c && !tax.is_ancestor(&c, t) && !tax.parents(&c).any(|p| p == *t)).collect();
            if targets.is_empty() {
                return random_edit_add(tax, rng, serial, &live);
            }
            let target = pick(rng, &targets);
            let mut changes: Vec<AtomicChange> = tax.parents(&c).map(|p| AtomicChange::remove(Axiom::sub_class_of(c.clone(), p.clone()))).collect();
            changes.push(AtomicChange::add(Axiom::sub_class_of(c, target)));
            changes
        }
        5 => {
            let leaves: Vec<&Iri> = non_root.iter().copied().filter(|c| tax.child_count(c) == 0).collect();
            if leaves.is_empty() {
                return random_edit_add(tax, rng, serial, &live);
            }
            let c = pick(rng, &leaves);
            let mut changes: Vec<AtomicChange> = tax.parents(&c).map(|p| AtomicChange::remove(Axiom::sub_class_of(c.clone(), p.clone()))).collect();
            changes.push(AtomicChange::add(Axiom::annotation(v.deprecated.clone(), c, AnnotationValue::boolean(true))));
            changes
        }
        _ => random_edit_add(tax, rng, serial, &live),
    }
}

fn random_edit_add<R: Rng>(tax: &Taxonomy, rng: &mut R, serial: u64, live: &[&Iri]) -> Vec<AtomicChange> {
    let v = vocab();
    let en = LanguageTag::parse("en").expect("static tag");
    let parent = live[rng.random_range(0..live.len())].clone();
    let label = format!("{} {} {serial}", MODIFIERS[rng.random_range(0..MODIFIERS.len())], NOUNS[rng.random_range(0..NOUNS.len())]);
    let iri = mint_iri(tax.root().namespace(), &label, &|i| tax.is_declared(i));
    let mut changes = vec![
        AtomicChange::add(Axiom::declaration(iri.clone())),
        AtomicChange::add(Axiom::sub_class_of(iri.clone(), parent)),
        AtomicChange::add(Axiom::annotation(v.label.clone(), iri.clone(), AnnotationValue::lang_string(label.clone(), en.clone()))),
    ];
    if rng.random_bool(0.3) {
        let hu = LanguageTag::parse("hu").expect("static tag");
        changes.push(AtomicChange::add(Axiom::annotation(v.label.clone(), iri.clone(), AnnotationValue::lang_string(format!("{label} (hu)"), hu))));
    }
    if rng.random_bool(0.5) {
        changes.push(AtomicChange::add(Axiom::annotation(v.definition.clone(), iri, AnnotationValue::lang_string(format!("About {label}."), en))));
    }
    changes
}

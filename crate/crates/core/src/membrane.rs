//! A small active-membrane engine with numeric (hybrid) labels and polarities.
//!
//! A [`Membrane`] is a labeled, polarized node holding a multiset of objects
//! and nested child membranes. A rule acts on a *region* node: it matches one
//! of the region's children (and possibly an object in the region itself),
//! and rewrites that part of the tree. Five rule kinds are supported:
//!
//! * evolution: `[a -> v]_h^e`, rewrites an object inside a membrane,
//! * in-communication: `a [ ]_h^e1 -> [b]_h^e2`, moves an object from the region into a child,
//! * out-communication: `[a]_h^e1 -> b [ ]_h^e2`, moves an object from a child into the region,
//! * dissolution: `[a]_h^e -> b`, removes a child and spills its contents,
//! * division: `[a]_h^e1 -> [b]_h^e2 [c]_h^e3`, splits a child into two.
//!
//! Matching is separated from application: [`applicable_rules`] enumerates
//! every `(rule, binding)` pair in a canonical order, [`choose_rule`] picks one
//! uniformly at random and [`apply_rule`] performs exactly one rewrite.

use std::fmt::{self, Write as _};

use rand::Rng;
use thiserror::Error;

use crate::model::Criterion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinLabel {
    /// 1-based ordinal within the bins of the same type and owner.
    pub ordinal: u32,
    pub type_index: usize,
    pub capacity: u64,
    /// Virtual thread that owns the bin, once claimed.
    pub owner: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Skin,
    Sublist(usize),
    Bin(BinLabel),
    Synthetic(i64),
}

impl Label {
    pub fn capacity(&self) -> Option<u64> {
        match self {
            Label::Bin(b) => Some(b.capacity),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Skin => f.write_str("skin"),
            Label::Sublist(i) => write!(f, "S{i}"),
            Label::Bin(b) => match b.owner {
                Some(owner) => write!(f, "(b,{},{},{})", b.ordinal, b.capacity, owner),
                None => write!(f, "(b,{},{})", b.ordinal, b.capacity),
            },
            Label::Synthetic(n) => write!(f, "[{n}]"),
        }
    }
}

/// Numeric polarity: item count for sublists, load for bins.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polarity {
    pub charge: u64,
    pub divided: bool,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.charge)?;
        if self.divided {
            f.write_str(",-")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ItemObject {
    pub id: usize,
    pub weight: u64,
    pub tag: Option<Criterion>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Object {
    Item(ItemObject),
    Yes,
    No,
}

impl Object {
    pub fn item(id: usize, weight: u64) -> Self {
        Object::Item(ItemObject { id, weight, tag: None })
    }

    pub fn as_item(&self) -> Option<&ItemObject> {
        match self {
            Object::Item(it) => Some(it),
            _ => None,
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Item(it) => {
                write!(f, "w{}:{}", it.id, it.weight)?;
                if let Some(tag) = it.tag {
                    write!(f, "/{tag}")?;
                }
                Ok(())
            }
            Object::Yes => f.write_str("Yes"),
            Object::No => f.write_str("No"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membrane {
    pub label: Label,
    pub polarity: Polarity,
    pub objects: Vec<Object>,
    pub children: Vec<Membrane>,
}

impl Membrane {
    pub fn new(label: Label) -> Self {
        Self { label, polarity: Polarity::default(), objects: Vec::new(), children: Vec::new() }
    }

    pub fn with_children(label: Label, children: Vec<Membrane>) -> Self {
        Self { children, ..Self::new(label) }
    }

    pub fn is_bin(&self) -> bool {
        matches!(self.label, Label::Bin(_))
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemObject> {
        self.objects.iter().filter_map(Object::as_item)
    }

    /// Item objects anywhere in this subtree.
    pub fn all_items(&self) -> Vec<ItemObject> {
        let mut out = Vec::new();
        self.collect_items(&mut out);
        out
    }

    fn collect_items(&self, out: &mut Vec<ItemObject>) {
        out.extend(self.items().copied());
        for child in &self.children {
            child.collect_items(out);
        }
    }

    pub fn has_tagged_item(&self) -> bool {
        self.items().any(|it| it.tag.is_some())
    }

    /// Checks the polarity/content invariants over the whole subtree.
    pub fn audit(&self) -> Result<(), AuditError> {
        match self.label {
            Label::Bin(b) => {
                let load: u64 = self.items().map(|it| it.weight).sum();
                if load != self.polarity.charge {
                    return Err(AuditError::LoadMismatch { label: self.label, charge: self.polarity.charge, load });
                }
                if load > b.capacity {
                    return Err(AuditError::Overfull { label: self.label, load });
                }
            }
            Label::Sublist(_) => {
                let count = self.items().count() as u64;
                if count != self.polarity.charge {
                    return Err(AuditError::CountMismatch { label: self.label, charge: self.polarity.charge, count });
                }
            }
            _ => {}
        }
        self.children.iter().try_for_each(Membrane::audit)
    }

    /// One node per line, `label polarity {objects}`, children indented by two spaces.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_into(&mut out, 0);
        out
    }

    fn dump_into(&self, out: &mut String, depth: usize) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        let _ = write!(out, "{} {} {{", self.label, self.polarity);
        for (i, obj) in self.objects.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{obj}");
        }
        out.push_str("}\n");
        for child in &self.children {
            child.dump_into(out, depth + 1);
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("{label}: polarity {charge} but contents weigh {load}")]
    LoadMismatch { label: Label, charge: u64, load: u64 },
    #[error("{label}: polarity {charge} but holds {count} items")]
    CountMismatch { label: Label, charge: u64, count: u64 },
    #[error("{label}: load {load} exceeds capacity")]
    Overfull { label: Label, load: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Evolution,
    InCommunication,
    OutCommunication,
    Dissolve,
    Divide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelGuard {
    Any,
    Skin,
    Sublist,
    Bin,
    Synthetic,
}

impl LabelGuard {
    pub fn matches(self, label: &Label) -> bool {
        matches!(
            (self, label),
            (LabelGuard::Any, _)
                | (LabelGuard::Skin, Label::Skin)
                | (LabelGuard::Sublist, Label::Sublist(_))
                | (LabelGuard::Bin, Label::Bin(_))
                | (LabelGuard::Synthetic, Label::Synthetic(_))
        )
    }
}

/// Predicate on the matched membrane's polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChargeGuard {
    Any,
    Zero,
    AtLeast(u64),
    Below(u64),
    /// `charge < capacity`.
    BelowCapacity,
    /// `2 * charge >= capacity` and not yet divided.
    HalfFullUndivided,
}

impl ChargeGuard {
    pub fn matches(self, membrane: &Membrane) -> bool {
        let k = membrane.polarity.charge;
        match self {
            ChargeGuard::Any => true,
            ChargeGuard::Zero => k == 0,
            ChargeGuard::AtLeast(n) => k >= n,
            ChargeGuard::Below(n) => k < n,
            ChargeGuard::BelowCapacity => membrane.label.capacity().is_some_and(|c| k < c),
            ChargeGuard::HalfFullUndivided => {
                !membrane.polarity.divided
                    && membrane.label.capacity().is_some_and(|c| 2 * u128::from(k) >= u128::from(c))
            }
        }
    }
}

/// Which object a rule consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectPattern {
    Nothing,
    AnyItem,
    /// Only the first item object in insertion order.
    FrontItem,
    UntaggedItem,
    TaggedItem,
    Yes,
    No,
}

impl ObjectPattern {
    fn matches(self, obj: &Object) -> bool {
        match (self, obj) {
            (ObjectPattern::AnyItem | ObjectPattern::FrontItem, Object::Item(_)) => true,
            (ObjectPattern::UntaggedItem, Object::Item(it)) => it.tag.is_none(),
            (ObjectPattern::TaggedItem, Object::Item(it)) => it.tag.is_some(),
            (ObjectPattern::Yes, Object::Yes) | (ObjectPattern::No, Object::No) => true,
            _ => false,
        }
    }
}

/// How a communication rule updates the polarity of the membrane it touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChargeUpdate {
    Unchanged,
    /// +/- 1 per object.
    Count,
    /// +/- the item weight.
    Weight,
}

/// Guard evaluated on the region node itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionGuard {
    Any,
    /// No tagged (emitted but unplaced) item objects in the region.
    NoTaggedItems,
}

impl RegionGuard {
    fn matches(self, region: &Membrane) -> bool {
        match self {
            RegionGuard::Any => true,
            RegionGuard::NoTaggedItems => !region.has_tagged_item(),
        }
    }
}

/// Narrows the fitting targets of an in-communication to a single one.
/// Receives the item and `(capacity, load)` of each fitting target in
/// creation order, returns the position of the chosen target.
pub type TargetSelector = fn(&ItemObject, &mut dyn Iterator<Item = (u64, u64)>) -> Option<usize>;

#[derive(Clone, Copy)]
pub enum Placement {
    /// One binding per fitting target.
    AnyFitting,
    Select(TargetSelector),
}

impl fmt::Debug for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::AnyFitting => f.write_str("AnyFitting"),
            Placement::Select(_) => f.write_str("Select(..)"),
        }
    }
}

/// Small set of selection criteria, iterated in FF, BF, WF order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CriterionSet(u8);

impl FromIterator<Criterion> for CriterionSet {
    fn from_iter<I: IntoIterator<Item = Criterion>>(it: I) -> Self {
        CriterionSet(it.into_iter().fold(0, |acc, c| acc | 1 << c as u8))
    }
}

impl CriterionSet {
    pub const ALL: CriterionSet = CriterionSet(0b111);

    pub fn only(c: Criterion) -> Self {
        CriterionSet(1 << c as u8)
    }

    pub fn contains(self, c: Criterion) -> bool {
        self.0 & (1 << c as u8) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Criterion> {
        Criterion::ALL.into_iter().filter(move |&c| self.contains(c))
    }
}

#[derive(Clone, Copy)]
pub enum Effect {
    /// Replace the matched object inside the matched membrane.
    Evolve(fn(&Object) -> Vec<Object>),
    InCommunication {
        charge: ChargeUpdate,
        placement: Placement,
        relabel: Option<fn(&Label) -> Label>,
    },
    OutCommunication {
        charge: ChargeUpdate,
        /// Criteria the emitted item may be tagged with; one binding per criterion.
        /// `None` leaves the object unchanged.
        tags: Option<CriterionSet>,
        relabel: Option<fn(&Label) -> Label>,
    },
    Dissolve {
        emit: Option<Object>,
    },
    Divide,
}

impl fmt::Debug for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::Evolve(_) => f.write_str("Evolve(..)"),
            Effect::InCommunication { charge, placement, relabel } => f
                .debug_struct("InCommunication")
                .field("charge", charge)
                .field("placement", placement)
                .field("relabel", &relabel.is_some())
                .finish(),
            Effect::OutCommunication { charge, tags, relabel } => f
                .debug_struct("OutCommunication")
                .field("charge", charge)
                .field("tags", tags)
                .field("relabel", &relabel.is_some())
                .finish(),
            Effect::Dissolve { emit } => f.debug_struct("Dissolve").field("emit", emit).finish(),
            Effect::Divide => f.write_str("Divide"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RuleSchema {
    /// Rule number used in traces.
    pub number: u8,
    pub target: LabelGuard,
    pub guard: ChargeGuard,
    pub pattern: ObjectPattern,
    pub region: RegionGuard,
    pub effect: Effect,
}

impl RuleSchema {
    pub fn kind(&self) -> RuleKind {
        match self.effect {
            Effect::Evolve(_) => RuleKind::Evolution,
            Effect::InCommunication { .. } => RuleKind::InCommunication,
            Effect::OutCommunication { .. } => RuleKind::OutCommunication,
            Effect::Dissolve { .. } => RuleKind::Dissolve,
            Effect::Divide => RuleKind::Divide,
        }
    }
}

/// A concrete match of a rule against a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Binding {
    /// Index of the rule in the list passed to [`applicable_rules`].
    pub rule: usize,
    /// Child membrane the rule acts on (the destination for in-communication).
    pub membrane: usize,
    /// Object index: in the region for in-communication, in the child otherwise.
    pub object: Option<usize>,
    pub item: Option<usize>,
    pub tag: Option<Criterion>,
    charge: u64,
    label: Label,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("no applicable rule")]
    NoApplicableRule,
    #[error("binding no longer matches the membrane tree")]
    StaleBinding,
    #[error("binding refers to unknown rule {0}")]
    UnknownRule(usize),
}

fn object_matches_binding(obj: Option<&Object>, item: Option<usize>) -> bool {
    match (obj, item) {
        (Some(Object::Item(it)), Some(id)) => it.id == id,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Enumerates every applicable `(rule, binding)` pair for `region`.
///
/// Order: rules in the given order; within a rule, by ascending item id,
/// then criterion (FF, BF, WF), then ascending child index.
pub fn applicable_rules(region: &Membrane, rules: &[RuleSchema]) -> Vec<Binding> {
    let mut out = Vec::new();
    for (rule_index, rule) in rules.iter().enumerate() {
        if !rule.region.matches(region) {
            continue;
        }
        let start = out.len();
        collect_bindings(region, rule_index, rule, &mut out);
        if out.len() - start > 1 {
            out[start..].sort_by_key(|b| (b.item.unwrap_or(0), b.tag, b.membrane));
        }
    }
    out
}

fn collect_bindings(region: &Membrane, rule_index: usize, rule: &RuleSchema, out: &mut Vec<Binding>) {
    let binding = |membrane: usize, child: &Membrane, object: Option<usize>, item: Option<usize>, tag| Binding {
        rule: rule_index,
        membrane,
        object,
        item,
        tag,
        charge: child.polarity.charge,
        label: child.label,
    };

    match rule.effect {
        Effect::InCommunication { charge, placement, .. } => {
            for (obj_index, obj) in region.objects.iter().enumerate() {
                if !rule.pattern.matches(obj) {
                    continue;
                }
                let accepts = |child: &Membrane| {
                    if !rule.target.matches(&child.label) || !rule.guard.matches(child) {
                        return false;
                    }
                    match (child.label.capacity(), obj, charge) {
                        (Some(cap), Object::Item(it), ChargeUpdate::Weight) => child.polarity.charge + it.weight <= cap,
                        _ => true,
                    }
                };
                let item = obj.as_item().map(|it| it.id);
                match placement {
                    Placement::AnyFitting => {
                        for (ci, child) in region.children.iter().enumerate() {
                            if accepts(child) {
                                out.push(binding(ci, child, Some(obj_index), item, None));
                            }
                        }
                    }
                    Placement::Select(select) => {
                        let Some(it) = obj.as_item() else { continue };
                        let mut slots = region
                            .children
                            .iter()
                            .filter(|c| accepts(c))
                            .map(|c| (c.label.capacity().unwrap_or(u64::MAX), c.polarity.charge));
                        if let Some(pos) = select(it, &mut slots) {
                            let (ci, child) = region
                                .children
                                .iter()
                                .enumerate()
                                .filter(|(_, c)| accepts(c))
                                .nth(pos)
                                .expect("selector returned an out-of-range slot");
                            out.push(binding(ci, child, Some(obj_index), item, None));
                        }
                    }
                }
            }
        }
        _ => {
            for (ci, child) in region.children.iter().enumerate() {
                if !rule.target.matches(&child.label) || !rule.guard.matches(child) {
                    continue;
                }
                if rule.pattern == ObjectPattern::Nothing {
                    out.push(binding(ci, child, None, None, None));
                    continue;
                }
                let tags = match rule.effect {
                    Effect::OutCommunication { tags: Some(set), .. } => Some(set),
                    _ => None,
                };
                for (oi, obj) in child.objects.iter().enumerate() {
                    if rule.pattern == ObjectPattern::FrontItem {
                        if obj.as_item().is_none() {
                            continue;
                        }
                    } else if !rule.pattern.matches(obj) {
                        continue;
                    }
                    let item = obj.as_item().map(|it| it.id);
                    match tags {
                        Some(set) => {
                            for c in set.iter() {
                                out.push(binding(ci, child, Some(oi), item, Some(c)));
                            }
                        }
                        None => out.push(binding(ci, child, Some(oi), item, None)),
                    }
                    if rule.pattern == ObjectPattern::FrontItem {
                        break;
                    }
                }
            }
        }
    }
}

/// Builds a binding for a specific child and object after checking the
/// rule's guards, for callers that pick the match themselves.
pub fn bind(
    region: &Membrane,
    rules: &[RuleSchema],
    rule: usize,
    membrane: usize,
    object: Option<usize>,
    tag: Option<Criterion>,
) -> Result<Binding, EngineError> {
    let schema = rules.get(rule).ok_or(EngineError::UnknownRule(rule))?;
    let child = region.children.get(membrane).ok_or(EngineError::StaleBinding)?;
    if !schema.region.matches(region) || !schema.target.matches(&child.label) || !schema.guard.matches(child) {
        return Err(EngineError::StaleBinding);
    }
    let source = match schema.effect {
        Effect::InCommunication { .. } => &region.objects,
        _ => &child.objects,
    };
    let obj = match object {
        Some(oi) => {
            let obj = source.get(oi).ok_or(EngineError::StaleBinding)?;
            if !schema.pattern.matches(obj) {
                return Err(EngineError::StaleBinding);
            }
            Some(obj)
        }
        None if schema.pattern == ObjectPattern::Nothing => None,
        None => return Err(EngineError::StaleBinding),
    };
    if let (Effect::InCommunication { charge: ChargeUpdate::Weight, .. }, Some(Object::Item(it)), Some(cap)) =
        (schema.effect, obj, child.label.capacity())
    {
        if child.polarity.charge + it.weight > cap {
            return Err(EngineError::StaleBinding);
        }
    }
    Ok(Binding {
        rule,
        membrane,
        object,
        item: obj.and_then(Object::as_item).map(|it| it.id),
        tag,
        charge: child.polarity.charge,
        label: child.label,
    })
}

/// Picks one candidate uniformly at random.
pub fn choose_rule<R: Rng + ?Sized>(candidates: &[Binding], rng: &mut R) -> Result<Binding, EngineError> {
    match candidates.len() {
        0 => Err(EngineError::NoApplicableRule),
        1 => Ok(candidates[0]),
        n => Ok(candidates[rng.random_range(0..n)]),
    }
}

/// What a single rule application did, for traces and instrumentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Applied {
    pub number: u8,
    pub kind: RuleKind,
    pub item: Option<usize>,
    pub tag: Option<Criterion>,
    /// Label of the membrane acted on (the original, for divisions).
    pub membrane: Label,
    /// Label of the membrane created by a division.
    pub created: Option<Label>,
}

impl fmt::Display for Applied {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule{}", self.number)?;
        if let Some(id) = self.item {
            write!(f, " w{id}")?;
        }
        if let Some(tag) = self.tag {
            write!(f, "/{tag}")?;
        }
        write!(f, " {}", self.membrane)?;
        if let Some(created) = self.created {
            write!(f, " -> {created}")?;
        }
        Ok(())
    }
}

fn update_charge(polarity: &mut Polarity, update: ChargeUpdate, obj: &Object, add: bool) {
    let delta = match (update, obj) {
        (ChargeUpdate::Unchanged, _) => 0,
        (ChargeUpdate::Count, _) => 1,
        (ChargeUpdate::Weight, Object::Item(it)) => it.weight,
        (ChargeUpdate::Weight, _) => 0,
    };
    if add {
        polarity.charge += delta;
    } else {
        polarity.charge -= delta;
    }
}

/// Applies one rule to `region`. The binding must come from
/// [`applicable_rules`] on the current state of `region`.
pub fn apply_rule(region: &mut Membrane, rules: &[RuleSchema], binding: &Binding) -> Result<Applied, EngineError> {
    let rule = rules.get(binding.rule).ok_or(EngineError::UnknownRule(binding.rule))?;
    let child = region.children.get(binding.membrane).ok_or(EngineError::StaleBinding)?;
    if child.label != binding.label || child.polarity.charge != binding.charge {
        return Err(EngineError::StaleBinding);
    }
    let mut applied = Applied {
        number: rule.number,
        kind: rule.kind(),
        item: binding.item,
        tag: binding.tag,
        membrane: child.label,
        created: None,
    };

    match rule.effect {
        Effect::InCommunication { charge, relabel, .. } => {
            let oi = binding.object.ok_or(EngineError::StaleBinding)?;
            if !object_matches_binding(region.objects.get(oi), binding.item) {
                return Err(EngineError::StaleBinding);
            }
            let mut obj = region.objects.remove(oi);
            if let Object::Item(it) = &mut obj {
                it.tag = None;
            }
            let child = &mut region.children[binding.membrane];
            update_charge(&mut child.polarity, charge, &obj, true);
            child.objects.push(obj);
            if let Some(relabel) = relabel {
                child.label = relabel(&child.label);
            }
        }
        Effect::OutCommunication { charge, relabel, .. } => {
            let oi = binding.object.ok_or(EngineError::StaleBinding)?;
            let child = &mut region.children[binding.membrane];
            if !object_matches_binding(child.objects.get(oi), binding.item) {
                return Err(EngineError::StaleBinding);
            }
            let mut obj = child.objects.remove(oi);
            update_charge(&mut child.polarity, charge, &obj, false);
            if let Some(relabel) = relabel {
                child.label = relabel(&child.label);
            }
            if let (Object::Item(it), Some(tag)) = (&mut obj, binding.tag) {
                it.tag = Some(tag);
            }
            region.objects.push(obj);
        }
        Effect::Evolve(rewrite) => {
            let oi = binding.object.ok_or(EngineError::StaleBinding)?;
            let child = &mut region.children[binding.membrane];
            if !object_matches_binding(child.objects.get(oi), binding.item) {
                return Err(EngineError::StaleBinding);
            }
            let obj = child.objects.remove(oi);
            child.objects.extend(rewrite(&obj));
        }
        Effect::Dissolve { emit } => {
            let dissolved = region.children.remove(binding.membrane);
            region.objects.extend(dissolved.objects);
            region.children.extend(dissolved.children);
            if let Some(obj) = emit {
                region.objects.push(obj);
            }
        }
        Effect::Divide => {
            let label = match region.children[binding.membrane].label {
                Label::Bin(b) => {
                    let last = region
                        .children
                        .iter()
                        .filter_map(|c| match c.label {
                            Label::Bin(o) if o.type_index == b.type_index && o.owner == b.owner => Some(o.ordinal),
                            _ => None,
                        })
                        .max()
                        .unwrap_or(b.ordinal);
                    Label::Bin(BinLabel { ordinal: last + 1, ..b })
                }
                other => other,
            };
            region.children[binding.membrane].polarity.divided = true;
            region.children.push(Membrane::new(label));
            applied.created = Some(label);
        }
    }
    Ok(applied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bin_membrane(capacity: u64, load: u64) -> Membrane {
        let mut m = Membrane::new(Label::Bin(BinLabel { ordinal: 1, type_index: 0, capacity, owner: Some(0) }));
        if load > 0 {
            m.objects.push(Object::item(99, load));
            m.polarity.charge = load;
        }
        m
    }

    fn sublist(items: &[(usize, u64)]) -> Membrane {
        let mut m = Membrane::new(Label::Sublist(0));
        m.objects = items.iter().map(|&(id, w)| Object::item(id, w)).collect();
        m.polarity.charge = items.len() as u64;
        m
    }

    fn emit_rule() -> RuleSchema {
        RuleSchema {
            number: 3,
            target: LabelGuard::Sublist,
            guard: ChargeGuard::AtLeast(1),
            pattern: ObjectPattern::AnyItem,
            region: RegionGuard::NoTaggedItems,
            effect: Effect::OutCommunication {
                charge: ChargeUpdate::Count,
                tags: Some(CriterionSet::ALL),
                relabel: None,
            },
        }
    }

    fn pack_rule() -> RuleSchema {
        RuleSchema {
            number: 4,
            target: LabelGuard::Bin,
            guard: ChargeGuard::BelowCapacity,
            pattern: ObjectPattern::TaggedItem,
            region: RegionGuard::Any,
            effect: Effect::InCommunication {
                charge: ChargeUpdate::Weight,
                placement: Placement::AnyFitting,
                relabel: None,
            },
        }
    }

    fn divide_rule() -> RuleSchema {
        RuleSchema {
            number: 5,
            target: LabelGuard::Bin,
            guard: ChargeGuard::HalfFullUndivided,
            pattern: ObjectPattern::Nothing,
            region: RegionGuard::Any,
            effect: Effect::Divide,
        }
    }

    fn done_rule() -> RuleSchema {
        RuleSchema {
            number: 6,
            target: LabelGuard::Sublist,
            guard: ChargeGuard::Zero,
            pattern: ObjectPattern::Nothing,
            region: RegionGuard::NoTaggedItems,
            effect: Effect::Dissolve { emit: Some(Object::Yes) },
        }
    }

    fn region(children: Vec<Membrane>) -> Membrane {
        Membrane::with_children(Label::Synthetic(1), children)
    }

    #[test]
    fn division_guard_is_exact_half() {
        let rules = [divide_rule()];
        assert!(applicable_rules(&region(vec![bin_membrane(100, 49)]), &rules).is_empty());
        assert_eq!(applicable_rules(&region(vec![bin_membrane(100, 50)]), &rules).len(), 1);
        // odd capacity: 2 * 50 >= 101 is false, 2 * 51 >= 101 holds
        assert!(applicable_rules(&region(vec![bin_membrane(101, 50)]), &rules).is_empty());
        assert_eq!(applicable_rules(&region(vec![bin_membrane(101, 51)]), &rules).len(), 1);
    }

    #[test]
    fn emission_and_termination_guards_are_disjoint() {
        let rules = [emit_rule(), done_rule()];
        let empty = region(vec![sublist(&[])]);
        let found = applicable_rules(&empty, &rules);
        assert_eq!(found.len(), 1);
        assert_eq!(rules[found[0].rule].number, 6);

        let full = region(vec![sublist(&[(0, 4)])]);
        let found = applicable_rules(&full, &rules);
        assert!(found.iter().all(|b| rules[b.rule].number == 3));
        assert_eq!(found.len(), 3);
    }

    #[test]
    fn bindings_are_ordered_by_item_then_criterion() {
        let rules = [emit_rule()];
        let r = region(vec![sublist(&[(5, 1), (2, 1), (7, 1)])]);
        let found = applicable_rules(&r, &rules);
        let keys: Vec<_> = found.iter().map(|b| (b.item.unwrap(), b.tag.unwrap())).collect();
        assert_eq!(keys[0], (2, Criterion::FirstFit));
        assert_eq!(keys[2], (2, Criterion::WorstFit));
        assert_eq!(keys[3], (5, Criterion::FirstFit));
        assert_eq!(keys[8], (7, Criterion::WorstFit));
        assert_eq!(found, applicable_rules(&r, &rules));
    }

    #[test]
    fn in_communication_adds_weight() {
        let rules = [pack_rule()];
        let mut r = region(vec![bin_membrane(100, 10)]);
        r.objects.push(Object::Item(ItemObject { id: 3, weight: 7, tag: Some(Criterion::BestFit) }));
        let found = applicable_rules(&r, &rules);
        assert_eq!(found.len(), 1);
        apply_rule(&mut r, &rules, &found[0]).unwrap();
        assert_eq!(r.children[0].polarity.charge, 17);
        assert!(r.objects.is_empty());
        assert!(r.children[0].items().any(|it| it.id == 3 && it.tag.is_none()));
        r.audit().unwrap();
    }

    #[test]
    fn in_communication_respects_capacity() {
        let rules = [pack_rule()];
        let mut r = region(vec![bin_membrane(100, 95)]);
        r.objects.push(Object::Item(ItemObject { id: 3, weight: 7, tag: Some(Criterion::FirstFit) }));
        assert!(applicable_rules(&r, &rules).is_empty());
    }

    #[test]
    fn division_appends_next_ordinal() {
        let rules = [divide_rule()];
        let mut r = region(vec![bin_membrane(100, 60)]);
        let found = applicable_rules(&r, &rules);
        let applied = apply_rule(&mut r, &rules, &found[0]).unwrap();
        assert_eq!(r.children.len(), 2);
        assert!(r.children[0].polarity.divided);
        assert_eq!(r.children[1].polarity, Polarity::default());
        match r.children[1].label {
            Label::Bin(b) => {
                assert_eq!((b.ordinal, b.capacity, b.owner), (2, 100, Some(0)));
            }
            other => panic!("unexpected label {other}"),
        }
        assert_eq!(applied.created, Some(r.children[1].label));
        // the divided bin no longer matches
        assert!(applicable_rules(&r, &rules).is_empty());
    }

    #[test]
    fn out_communication_tags_and_decrements() {
        let rules = [emit_rule()];
        let mut r = region(vec![sublist(&[(0, 4), (1, 5), (2, 6)])]);
        let found = applicable_rules(&r, &rules);
        let pick = found.iter().find(|b| b.item == Some(1) && b.tag == Some(Criterion::WorstFit)).unwrap();
        apply_rule(&mut r, &rules, pick).unwrap();
        assert_eq!(r.children[0].polarity.charge, 2);
        assert_eq!(r.objects, vec![Object::Item(ItemObject { id: 1, weight: 5, tag: Some(Criterion::WorstFit) })]);
        r.audit().unwrap();
    }

    #[test]
    fn dissolution_spills_and_emits() {
        let rules = [done_rule()];
        let mut r = region(vec![sublist(&[]), bin_membrane(10, 3)]);
        let found = applicable_rules(&r, &rules);
        apply_rule(&mut r, &rules, &found[0]).unwrap();
        assert_eq!(r.children.len(), 1);
        assert_eq!(r.objects, vec![Object::Yes]);
    }

    #[test]
    fn evolution_rewrites_in_place() {
        fn split(obj: &Object) -> Vec<Object> {
            match obj {
                Object::Item(_) => vec![Object::Yes, Object::No],
                other => vec![*other],
            }
        }
        let rules = [RuleSchema {
            number: 0,
            target: LabelGuard::Sublist,
            guard: ChargeGuard::Any,
            pattern: ObjectPattern::UntaggedItem,
            region: RegionGuard::Any,
            effect: Effect::Evolve(split),
        }];
        let mut r = region(vec![sublist(&[(0, 1)])]);
        let found = applicable_rules(&r, &rules);
        apply_rule(&mut r, &rules, &found[0]).unwrap();
        assert_eq!(r.children[0].objects, vec![Object::Yes, Object::No]);
    }

    #[test]
    fn communication_can_relabel() {
        fn to_sublist(_: &Label) -> Label {
            Label::Sublist(42)
        }
        let rules = [RuleSchema {
            number: 1,
            target: LabelGuard::Synthetic,
            guard: ChargeGuard::Any,
            pattern: ObjectPattern::AnyItem,
            region: RegionGuard::Any,
            effect: Effect::InCommunication {
                charge: ChargeUpdate::Count,
                placement: Placement::AnyFitting,
                relabel: Some(to_sublist),
            },
        }];
        let mut r = Membrane::with_children(Label::Skin, vec![Membrane::new(Label::Synthetic(7))]);
        r.objects.push(Object::item(0, 3));
        let found = applicable_rules(&r, &rules);
        apply_rule(&mut r, &rules, &found[0]).unwrap();
        assert_eq!(r.children[0].label, Label::Sublist(42));
        assert_eq!(r.children[0].polarity.charge, 1);
    }

    #[test]
    fn stale_binding_is_rejected() {
        let rules = [emit_rule()];
        let mut r = region(vec![sublist(&[(0, 4), (1, 5)])]);
        let found = applicable_rules(&r, &rules);
        apply_rule(&mut r, &rules, &found[0]).unwrap();
        assert_eq!(apply_rule(&mut r, &rules, &found[3]), Err(EngineError::StaleBinding));
    }

    #[test]
    fn choose_rule_contract() {
        let rules = [emit_rule()];
        let r = region(vec![sublist(&[(0, 4)])]);
        let found = applicable_rules(&r, &rules);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(choose_rule(&found[..1], &mut rng).unwrap(), found[0]);
        assert_eq!(choose_rule(&[], &mut rng), Err(EngineError::NoApplicableRule));

        let replay = |seed| choose_rule(&found, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for seed in 0..20 {
            assert_eq!(replay(seed), replay(seed));
        }
    }

    #[test]
    fn choose_rule_is_roughly_uniform() {
        let rules = [emit_rule()];
        let r = region(vec![sublist(&[(0, 4)])]);
        let two = &applicable_rules(&r, &rules)[..2];
        let firsts = (0..10_000u64)
            .filter(|&seed| choose_rule(two, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap() == two[0])
            .count();
        assert!((4700..=5300).contains(&firsts), "first candidate chosen {firsts} times");
    }

    #[test]
    fn dump_format() {
        let mut r = region(vec![sublist(&[(0, 4)]), bin_membrane(100, 0)]);
        r.objects.push(Object::Item(ItemObject { id: 1, weight: 2, tag: Some(Criterion::BestFit) }));
        r.children[1].polarity.divided = true;
        assert_eq!(r.dump(), "[1] 0 {w1:2/BF}\n  S0 1 {w0:4}\n  (b,1,100,0) 0,- {}\n");
    }
}

//! The per-thread packing loop: rules 3 to 6 driven through the membrane engine.

use rand::RngCore;

use crate::membrane::{
    applicable_rules, apply_rule, choose_rule, BinLabel, ChargeGuard, ChargeUpdate, CriterionSet, Effect, ItemObject,
    Label, LabelGuard, Membrane, Object, ObjectPattern, Placement, RegionGuard, RuleSchema,
};
use crate::model::{Bin, BinTypeTable, Criterion, Item};

use super::rng::StreamPath;

/// Picks the bin for an item of `weight` among `(capacity, load)` slots given
/// in creation order. The criterion ranks the open (non-empty) slots with
/// enough room. If none fits, an empty slot is opened: the largest for WF,
/// the smallest that holds the item otherwise. Ties go to the lowest creation
/// index.
pub fn select_slot(weight: u64, criterion: Criterion, slots: impl IntoIterator<Item = (u64, u64)>) -> Option<usize> {
    let mut open: Option<(usize, u64)> = None;
    let mut empty: Option<(usize, u64)> = None;
    for (pos, (capacity, load)) in slots.into_iter().enumerate() {
        if load + weight > capacity {
            continue;
        }
        let residual = capacity - load;
        if load == 0 {
            let wider = criterion == Criterion::WorstFit;
            if empty.is_none_or(|(_, r)| if wider { residual > r } else { residual < r }) {
                empty = Some((pos, residual));
            }
            continue;
        }
        let better = match (criterion, open) {
            (_, None) => true,
            (Criterion::FirstFit, Some(_)) => false,
            (Criterion::BestFit, Some((_, r))) => residual < r,
            (Criterion::WorstFit, Some((_, r))) => residual > r,
        };
        if better {
            open = Some((pos, residual));
        }
    }
    open.or(empty).map(|(pos, _)| pos)
}

pub fn select_target_bin(weight: u64, criterion: Criterion, bins: &[Bin]) -> Option<usize> {
    select_slot(weight, criterion, bins.iter().map(|b| (b.capacity, b.load)))
}

fn criterion_selector(item: &ItemObject, slots: &mut dyn Iterator<Item = (u64, u64)>) -> Option<usize> {
    select_slot(item.weight, item.tag.unwrap_or(Criterion::FirstFit), slots)
}

/// How the sublist releases items.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emission {
    /// Any remaining item may be sent out next.
    Free,
    /// Items leave in sublist order.
    InOrder,
}

/// How one candidate is picked when several rules apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleChoice {
    Random,
    /// Pack before divide before emit before terminate; first binding wins.
    Priority,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackPolicy {
    pub emission: Emission,
    pub criteria: CriterionSet,
    pub choice: RuleChoice,
}

impl PackPolicy {
    pub fn deterministic(criterion: Criterion) -> Self {
        Self { emission: Emission::InOrder, criteria: CriterionSet::only(criterion), choice: RuleChoice::Priority }
    }
}

pub const RULE_EMIT: u8 = 3;
pub const RULE_PACK: u8 = 4;
pub const RULE_DIVIDE: u8 = 5;
pub const RULE_DONE: u8 = 6;

/// Rules 3 to 6, in that order.
pub fn thread_rules(policy: &PackPolicy) -> [RuleSchema; 4] {
    let emit_pattern = match policy.emission {
        Emission::Free => ObjectPattern::AnyItem,
        Emission::InOrder => ObjectPattern::FrontItem,
    };
    [
        RuleSchema {
            number: RULE_EMIT,
            target: LabelGuard::Sublist,
            guard: ChargeGuard::AtLeast(1),
            pattern: emit_pattern,
            region: RegionGuard::NoTaggedItems,
            effect: Effect::OutCommunication {
                charge: ChargeUpdate::Count,
                tags: Some(policy.criteria),
                relabel: None,
            },
        },
        RuleSchema {
            number: RULE_PACK,
            target: LabelGuard::Bin,
            guard: ChargeGuard::BelowCapacity,
            pattern: ObjectPattern::TaggedItem,
            region: RegionGuard::Any,
            effect: Effect::InCommunication {
                charge: ChargeUpdate::Weight,
                placement: Placement::Select(criterion_selector),
                relabel: None,
            },
        },
        RuleSchema {
            number: RULE_DIVIDE,
            target: LabelGuard::Bin,
            guard: ChargeGuard::HalfFullUndivided,
            pattern: ObjectPattern::Nothing,
            region: RegionGuard::Any,
            effect: Effect::Divide,
        },
        RuleSchema {
            number: RULE_DONE,
            target: LabelGuard::Sublist,
            guard: ChargeGuard::Zero,
            pattern: ObjectPattern::Nothing,
            region: RegionGuard::NoTaggedItems,
            effect: Effect::Dissolve { emit: Some(Object::Yes) },
        },
    ]
}

/// Rule 2: the thread claims one empty bin of every type.
pub fn own_bins(bin_types: &BinTypeTable, owner: usize) -> Vec<Membrane> {
    bin_types
        .capacities()
        .iter()
        .enumerate()
        .map(|(type_index, &capacity)| {
            Membrane::new(Label::Bin(BinLabel { ordinal: 1, type_index, capacity, owner: Some(owner) }))
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ThreadStats {
    pub applications: usize,
    pub divisions: usize,
    pub fallbacks: usize,
    /// Bins ever created per type, including the initial one.
    pub bins_per_type: Vec<usize>,
    /// Total weight of the thread's subset.
    pub subset_weight: u64,
}

/// Outcome of one virtual thread.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadResult {
    pub block: usize,
    pub lane: usize,
    /// Every bin the thread owns in creation order, empty ones included.
    pub bins: Vec<Bin>,
    pub capacity_used: u64,
    pub items_packed: usize,
    pub stats: ThreadStats,
    pub trace: Vec<String>,
}

impl ThreadResult {
    pub fn used_bins(&self) -> impl Iterator<Item = &Bin> {
        self.bins.iter().filter(|b| b.is_used())
    }
}

/// Where a thread sits in the grid and what it should record.
#[derive(Clone, Copy, Debug)]
pub struct ThreadContext {
    pub path: StreamPath,
    pub owner: usize,
    pub trace: bool,
}

impl ThreadContext {
    pub fn detached() -> Self {
        Self { path: StreamPath::new(0, 0, 0), owner: 0, trace: false }
    }
}

/// Runs the rule loop for one thread until rule 6 fires.
///
/// `rng` is required for [`RuleChoice::Random`] and ignored otherwise.
pub fn pack_thread(
    subset: &[Item],
    bin_types: &BinTypeTable,
    policy: &PackPolicy,
    ctx: ThreadContext,
    mut rng: Option<&mut dyn RngCore>,
) -> ThreadResult {
    let rules = thread_rules(policy);
    let prefix =
        if ctx.trace { format!("{}.{}.{}", ctx.path.kernel, ctx.path.block, ctx.path.lane) } else { String::new() };
    let mut trace = Vec::new();

    let mut sublist = Membrane::new(Label::Sublist(ctx.owner));
    sublist.objects = subset.iter().map(|it| Object::item(it.id, it.weight)).collect();
    sublist.polarity.charge = subset.len() as u64;
    let mut children = vec![sublist];
    children.extend(own_bins(bin_types, ctx.owner));
    if ctx.trace {
        for bin in &children[1..] {
            trace.push(format!("{prefix} rule2 {}", bin.label));
        }
    }
    let mut region = Membrane::with_children(Label::Synthetic(1), children);

    let mut stats = ThreadStats {
        bins_per_type: vec![1; bin_types.len()],
        subset_weight: subset.iter().map(|it| it.weight).sum(),
        ..ThreadStats::default()
    };

    loop {
        let candidates = applicable_rules(&region, &rules);
        if candidates.is_empty() {
            // An emitted item fits nowhere and no bin can divide: open the
            // smallest type that holds it.
            let Some(pos) = region.objects.iter().position(|o| o.as_item().is_some_and(|it| it.tag.is_some())) else {
                break;
            };
            let Object::Item(mut item) = region.objects.remove(pos) else { unreachable!() };
            item.tag = None;
            let type_index = bin_types.smallest_fitting(item.weight).expect("item heavier than every bin type");
            let ordinal = region
                .children
                .iter()
                .filter_map(|c| match c.label {
                    Label::Bin(b) if b.type_index == type_index => Some(b.ordinal),
                    _ => None,
                })
                .max()
                .unwrap_or(0)
                + 1;
            let label = Label::Bin(BinLabel {
                ordinal,
                type_index,
                capacity: bin_types.capacity(type_index),
                owner: Some(ctx.owner),
            });
            let mut bin = Membrane::new(label);
            bin.polarity.charge = item.weight;
            bin.objects.push(Object::Item(item));
            region.children.push(bin);
            stats.fallbacks += 1;
            stats.bins_per_type[type_index] += 1;
            if ctx.trace {
                trace.push(format!("{prefix} fallback w{} {label}", item.id));
            }
            continue;
        }

        let binding = match policy.choice {
            RuleChoice::Random => {
                let rng = rng.as_deref_mut().expect("random rule choice needs a stream");
                choose_rule(&candidates, rng).expect("candidates are non-empty")
            }
            RuleChoice::Priority => {
                let rank = |number: u8| match number {
                    RULE_PACK => 0,
                    RULE_DIVIDE => 1,
                    RULE_EMIT => 2,
                    _ => 3,
                };
                *candidates.iter().min_by_key(|b| rank(rules[b.rule].number)).expect("candidates are non-empty")
            }
        };
        let applied = apply_rule(&mut region, &rules, &binding).expect("binding taken from the current tree");
        stats.applications += 1;
        if ctx.trace {
            trace.push(format!("{prefix} {applied}"));
        }
        match applied.number {
            RULE_DIVIDE => {
                stats.divisions += 1;
                if let Some(Label::Bin(b)) = applied.created {
                    stats.bins_per_type[b.type_index] += 1;
                }
            }
            RULE_DONE => break,
            _ => {}
        }
    }

    let bins: Vec<Bin> = region
        .children
        .iter()
        .filter_map(|m| match m.label {
            Label::Bin(b) => Some(Bin {
                type_index: b.type_index,
                capacity: b.capacity,
                load: m.polarity.charge,
                contents: m.items().map(|it| it.id).collect(),
                divided: m.polarity.divided,
            }),
            _ => None,
        })
        .collect();
    let capacity_used = bins.iter().filter(|b| b.is_used()).map(|b| b.capacity).sum();
    let items_packed = bins.iter().map(|b| b.contents.len()).sum();
    ThreadResult {
        block: ctx.path.block as usize,
        lane: ctx.path.lane as usize,
        bins,
        capacity_used,
        items_packed,
        stats,
        trace,
    }
}

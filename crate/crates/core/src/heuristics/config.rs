use rand::Rng;

use crate::membrane::{
    apply_rule, bind, BinLabel, ChargeGuard, ChargeUpdate, Effect, Label, LabelGuard, Membrane, Object, ObjectPattern,
    Placement, RegionGuard, RuleSchema,
};
use crate::model::{Instance, Item};

use super::plan::ExecutionPlan;
use super::rng::RngStream;

/// Rule 1: an item object enters a sublist that still has room.
pub fn distribution_rule(subset_size: usize) -> RuleSchema {
    RuleSchema {
        number: 1,
        target: LabelGuard::Sublist,
        guard: ChargeGuard::Below(subset_size as u64),
        pattern: ObjectPattern::UntaggedItem,
        region: RegionGuard::Any,
        effect: Effect::InCommunication {
            charge: ChargeUpdate::Count,
            placement: Placement::AnyFitting,
            relabel: None,
        },
    }
}

/// Skin membrane holding `plan.sublists` sublists and one bin membrane per
/// type, with every item distributed to a uniformly chosen non-full sublist.
pub fn build_initial_config(instance: &Instance, plan: &ExecutionPlan, rng: &mut RngStream) -> Membrane {
    let mut children: Vec<Membrane> = (0..plan.sublists).map(|i| Membrane::new(Label::Sublist(i))).collect();
    children.extend(instance.bin_types().capacities().iter().enumerate().map(|(type_index, &capacity)| {
        Membrane::new(Label::Bin(BinLabel { ordinal: 1, type_index, capacity, owner: None }))
    }));
    let mut skin = Membrane::with_children(Label::Skin, children);
    // Items are injected from the back so each removal is O(1); reversed here
    // so that item 0 is placed first.
    skin.objects = instance.items().iter().rev().map(|it| Object::item(it.id, it.weight)).collect();

    let rules = [distribution_rule(plan.subset_size)];
    let mut open: Vec<usize> = (0..plan.sublists).collect();
    while let Some(last) = skin.objects.len().checked_sub(1) {
        assert!(!open.is_empty(), "sublists cannot hold every item");
        let pick = rng.random_range(0..open.len());
        let binding = bind(&skin, &rules, 0, open[pick], Some(last), None).expect("open sublist accepts items");
        apply_rule(&mut skin, &rules, &binding).expect("fresh binding");
        if skin.children[open[pick]].polarity.charge as usize >= plan.subset_size {
            open.swap_remove(pick);
        }
    }
    skin
}

/// Items held by each sublist membrane of `skin`, by sublist index.
pub fn sublist_contents(skin: &Membrane) -> Vec<Vec<Item>> {
    let mut out = Vec::new();
    for child in &skin.children {
        if let Label::Sublist(i) = child.label {
            if out.len() <= i {
                out.resize_with(i + 1, Vec::new);
            }
            out[i] = child.items().map(|it| Item { id: it.id, weight: it.weight }).collect();
        }
    }
    out
}

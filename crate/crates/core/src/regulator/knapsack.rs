//! Budgeted selection of re-render candidates.
//!
//! Each item carries the expected perceptual benefit of re-rendering one
//! sprite and the marginal compute cost of doing so; selectors maximize total
//! benefit within a capacity. The greedy pass orders items by refinement rate
//! (benefit per compute unit) and skips items that no longer fit; comparing
//! its plan with the single best-fitting item guarantees at least half the
//! optimal benefit. Limited subset search tightens that to k/(k+1).

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::Error;
use crate::scene::SpriteId;

/// One re-render candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackItem {
    pub id: SpriteId,
    /// Expected perceptual benefit of re-rendering instead of warping.
    pub benefit: f64,
    /// Marginal compute cost of re-rendering instead of warping; positive.
    pub weight: f64,
}

impl KnapsackItem {
    pub fn rate(&self) -> f64 {
        self.benefit / self.weight
    }
}

/// Chosen items with their accumulated benefit and spend.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Selection {
    pub chosen: BTreeSet<SpriteId>,
    pub benefit: f64,
    pub spend: f64,
    /// The highest-rate item skipped for lack of room, if any: the first
    /// sprite pruned from the rendering list by the deadline.
    pub first_skipped: Option<(SpriteId, f64)>,
}

/// Maximum candidate count accepted by the exact solver.
pub const MAX_EXACT_CANDIDATES: usize = 22;

/// Items worth considering: positive benefit and positive weight. Sorted by
/// rate, then benefit, then id — a total order, so selection is independent
/// of input order. Items too heavy for the capacity are kept: they are never
/// taken, but they do count as pruned by the deadline, which the
/// multi-dimension pass uses to gauge what a degradation step could buy back.
fn ordered(items: &[KnapsackItem]) -> Vec<&KnapsackItem> {
    let mut keep: Vec<&KnapsackItem> = items
        .iter()
        .filter(|it| it.benefit > 0.0 && it.weight > 0.0)
        .collect();
    keep.sort_by(|a, b| compare_items(a, b));
    keep
}

fn compare_items(a: &KnapsackItem, b: &KnapsackItem) -> Ordering {
    b.rate()
        .partial_cmp(&a.rate())
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.benefit.partial_cmp(&a.benefit).unwrap_or(Ordering::Equal))
        .then_with(|| a.id.cmp(&b.id))
}

fn fill_in_order<'a>(
    items: impl Iterator<Item = &'a KnapsackItem>,
    capacity: f64,
    mut selection: Selection,
) -> Selection {
    for item in items {
        if selection.spend + item.weight <= capacity {
            selection.spend += item.weight;
            selection.benefit += item.benefit;
            selection.chosen.insert(item.id.clone());
        } else if selection.first_skipped.is_none() {
            selection.first_skipped = Some((item.id.clone(), item.benefit));
        }
    }
    selection
}

/// Greedy-by-rate with skipping: walks items in rate order, taking whatever
/// still fits.
pub fn greedy_fill(items: &[KnapsackItem], capacity: f64) -> Selection {
    fill_in_order(ordered(items).into_iter(), capacity, Selection::default())
}

/// The single item of largest benefit that fits alone.
pub fn best_single(items: &[KnapsackItem], capacity: f64) -> Selection {
    let mut best: Option<&KnapsackItem> = None;
    for item in items {
        if item.benefit <= 0.0 || item.weight <= 0.0 || item.weight > capacity {
            continue;
        }
        let better = match best {
            None => true,
            Some(current) => match item.benefit.partial_cmp(&current.benefit) {
                Some(Ordering::Greater) => true,
                Some(Ordering::Equal) => match item.weight.partial_cmp(&current.weight) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Equal) => item.id < current.id,
                    _ => false,
                },
                _ => false,
            },
        };
        if better {
            best = Some(item);
        }
    }
    match best {
        None => Selection::default(),
        Some(item) => Selection {
            chosen: BTreeSet::from([item.id.clone()]),
            benefit: item.benefit,
            spend: item.weight,
            first_skipped: None,
        },
    }
}

/// Greedy-by-rate compared against the best single item; the better of the
/// two carries at least half the optimal benefit. Ties keep the greedy plan.
pub fn greedy_with_best_single(items: &[KnapsackItem], capacity: f64) -> Selection {
    let greedy = greedy_fill(items, capacity);
    let single = best_single(items, capacity);
    if single.benefit > greedy.benefit {
        single
    } else {
        greedy
    }
}

/// Limited subset search: every feasible seed subset of size <= k is forced
/// in and completed greedily by rate; the best completion wins. `k = 0`
/// reproduces the plain greedy fill; `k >= 1` dominates the greedy-plus-best-
/// single plan and guarantees k/(k+1) of the optimum.
pub fn sahni(items: &[KnapsackItem], capacity: f64, k: usize) -> Result<Selection, Error> {
    if k > 3 {
        return Err(Error::Validation(format!(
            "subset search size is limited to 3, got {k}"
        )));
    }
    // Seeds heavier than the capacity can never complete; drop them early.
    let ordered_items: Vec<&KnapsackItem> = ordered(items)
        .into_iter()
        .filter(|it| it.weight <= capacity)
        .collect();
    let n = ordered_items.len();
    let mut best = greedy_fill(items, capacity);

    let mut seed = Vec::new();
    for size in 1..=k.min(n) {
        enumerate_seeds(&ordered_items, capacity, size, 0, &mut seed, &mut best);
    }
    Ok(best)
}

fn enumerate_seeds(
    items: &[&KnapsackItem],
    capacity: f64,
    size: usize,
    start: usize,
    seed: &mut Vec<usize>,
    best: &mut Selection,
) {
    if seed.len() == size {
        let mut selection = Selection::default();
        for &i in seed.iter() {
            selection.spend += items[i].weight;
            selection.benefit += items[i].benefit;
            selection.chosen.insert(items[i].id.clone());
        }
        if selection.spend > capacity {
            return;
        }
        let seeded: BTreeSet<usize> = seed.iter().copied().collect();
        let completion = fill_in_order(
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| !seeded.contains(i))
                .map(|(_, it)| *it),
            capacity,
            selection,
        );
        if better_selection(&completion, best) {
            *best = completion;
        }
        return;
    }
    for i in start..items.len() {
        seed.push(i);
        enumerate_seeds(items, capacity, size, i + 1, seed, best);
        seed.pop();
    }
}

fn better_selection(candidate: &Selection, incumbent: &Selection) -> bool {
    match candidate.benefit.partial_cmp(&incumbent.benefit) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => match candidate.spend.partial_cmp(&incumbent.spend) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => candidate.chosen < incumbent.chosen,
            _ => false,
        },
        _ => false,
    }
}

/// Exact optimum by branch and bound with a fractional relaxation bound.
/// Limited to [`MAX_EXACT_CANDIDATES`] items that fit the capacity at all.
pub fn exact_oracle(items: &[KnapsackItem], capacity: f64) -> Result<Selection, Error> {
    let ordered_items: Vec<&KnapsackItem> = ordered(items)
        .into_iter()
        .filter(|it| it.weight <= capacity)
        .collect();
    if ordered_items.len() > MAX_EXACT_CANDIDATES {
        return Err(Error::TooManyCandidates {
            limit: MAX_EXACT_CANDIDATES,
            got: ordered_items.len(),
        });
    }
    let mut best = Selection::default();
    let mut chosen = Vec::new();
    branch(&ordered_items, capacity, 0, 0.0, 0.0, &mut chosen, &mut best);
    Ok(best)
}

fn fractional_bound(items: &[&KnapsackItem], index: usize, spend: f64, capacity: f64) -> f64 {
    let mut room = capacity - spend;
    let mut bound = 0.0;
    for item in &items[index..] {
        if item.weight <= room {
            room -= item.weight;
            bound += item.benefit;
        } else {
            bound += item.rate() * room;
            break;
        }
    }
    bound
}

fn branch(
    items: &[&KnapsackItem],
    capacity: f64,
    index: usize,
    benefit: f64,
    spend: f64,
    chosen: &mut Vec<SpriteId>,
    best: &mut Selection,
) {
    if benefit > best.benefit {
        *best = Selection {
            chosen: chosen.iter().cloned().collect(),
            benefit,
            spend,
            first_skipped: None,
        };
    }
    if index == items.len() {
        return;
    }
    if benefit + fractional_bound(items, index, spend, capacity) <= best.benefit {
        return;
    }
    let item = items[index];
    if spend + item.weight <= capacity {
        chosen.push(item.id.clone());
        branch(items, capacity, index + 1, benefit + item.benefit, spend + item.weight, chosen, best);
        chosen.pop();
    }
    branch(items, capacity, index + 1, benefit, spend, chosen, best);
}

//! Weighted finite-state transducer over the tropical semiring
//! (plus = min, times = addition, zero = +inf, one = 0).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::symbol::EPSILON;

/// Tropical semiring weight. Grammar weights are non-negative reals.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Weight(pub f64);

impl Weight {
    /// Additive identity: no path.
    pub fn zero() -> Weight {
        Weight(f64::INFINITY)
    }

    /// Multiplicative identity: the free path.
    pub fn one() -> Weight {
        Weight(0.0)
    }

    /// Semiring plus: min.
    pub fn plus(self, other: Weight) -> Weight {
        Weight(self.0.min(other.0))
    }

    /// Semiring times: addition along a path.
    pub fn times(self, other: Weight) -> Weight {
        Weight(self.0 + other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub ilabel: u32,
    pub olabel: u32,
    pub weight: f64,
    pub next: u32,
}

/// Mutable vector-backed FST. States are dense ids; finals map to final weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fst {
    arcs: Vec<Vec<Arc>>,
    start: u32,
    finals: BTreeMap<u32, f64>,
}

impl Fst {
    pub fn new() -> Fst {
        Fst::default()
    }

    pub fn add_state(&mut self) -> u32 {
        self.arcs.push(Vec::new());
        (self.arcs.len() - 1) as u32
    }

    pub fn set_start(&mut self, state: u32) {
        debug_assert!((state as usize) < self.arcs.len());
        self.start = state;
    }

    pub fn set_final(&mut self, state: u32, weight: f64) {
        debug_assert!((state as usize) < self.arcs.len());
        self.finals.insert(state, weight);
    }

    pub fn add_arc(&mut self, from: u32, arc: Arc) {
        debug_assert!((arc.next as usize) < self.arcs.len());
        self.arcs[from as usize].push(arc);
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn arcs(&self, state: u32) -> &[Arc] {
        &self.arcs[state as usize]
    }

    pub fn final_weight(&self, state: u32) -> Option<f64> {
        self.finals.get(&state).copied()
    }

    pub fn finals(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.finals.iter().map(|(&s, &w)| (s, w))
    }

    /// Swaps input and output labels on every arc. Involution.
    pub fn invert(&self) -> Fst {
        let mut out = self.clone();
        for arcs in &mut out.arcs {
            for arc in arcs {
                std::mem::swap(&mut arc.ilabel, &mut arc.olabel);
            }
        }
        out
    }

    /// Keeps only states on some start-to-final path, renumbering densely.
    /// State order among kept states is preserved.
    pub fn trim(&self) -> Fst {
        if self.arcs.is_empty() {
            return Fst::new();
        }
        let n = self.arcs.len();
        // forward reachability
        let mut fwd = vec![false; n];
        let mut stack = vec![self.start as usize];
        fwd[self.start as usize] = true;
        while let Some(s) = stack.pop() {
            for arc in &self.arcs[s] {
                if !fwd[arc.next as usize] {
                    fwd[arc.next as usize] = true;
                    stack.push(arc.next as usize);
                }
            }
        }
        // backward reachability from finals
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, arcs) in self.arcs.iter().enumerate() {
            for arc in arcs {
                rev[arc.next as usize].push(s);
            }
        }
        let mut bwd = vec![false; n];
        let mut stack: Vec<usize> = self.finals.keys().map(|&s| s as usize).collect();
        for &s in &stack {
            bwd[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !bwd[p] {
                    bwd[p] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&s| fwd[s] && bwd[s]).collect();
        let mut remap: HashMap<usize, u32> = HashMap::new();
        let mut out = Fst::new();
        for &s in &keep {
            remap.insert(s, out.add_state());
        }
        if let Some(&start) = remap.get(&(self.start as usize)) {
            out.set_start(start);
        }
        for &s in &keep {
            let ns = remap[&s];
            for arc in &self.arcs[s] {
                if let Some(&nn) = remap.get(&(arc.next as usize)) {
                    out.add_arc(
                        ns,
                        Arc {
                            ilabel: arc.ilabel,
                            olabel: arc.olabel,
                            weight: arc.weight,
                            next: nn,
                        },
                    );
                }
            }
            if let Some(&w) = self.finals.get(&(s as u32)) {
                out.set_final(ns, w);
            }
        }
        out
    }

    /// True if at least one final state is reachable from the start.
    pub fn has_accepting_path(&self) -> bool {
        let trimmed = self.trim();
        trimmed.num_states() > 0 && trimmed.finals.keys().next().is_some()
    }
}

/// Standard weighted composition with epsilon handling:
/// language(result) = {(x, z) : exists y with (x, y) in a and (y, z) in b}.
///
/// Epsilon moves are taken without a filter; the tropical semiring is
/// idempotent, so duplicated epsilon interleavings do not change path weights.
pub fn compose(a: &Fst, b: &Fst) -> Fst {
    let mut out = Fst::new();
    let mut map: HashMap<(u32, u32), u32> = HashMap::new();
    let mut queue: Vec<(u32, u32)> = Vec::new();

    let state_of = |pair: (u32, u32),
                        out: &mut Fst,
                        queue: &mut Vec<(u32, u32)>,
                        map: &mut HashMap<(u32, u32), u32>| {
        *map.entry(pair).or_insert_with(|| {
            queue.push(pair);
            out.add_state()
        })
    };

    if a.num_states() == 0 || b.num_states() == 0 {
        return out;
    }
    let start = state_of((a.start, b.start), &mut out, &mut queue, &mut map);
    out.set_start(start);

    while let Some((sa, sb)) = queue.pop() {
        let s = map[&(sa, sb)];
        if let (Some(wa), Some(wb)) = (a.final_weight(sa), b.final_weight(sb)) {
            out.set_final(s, wa + wb);
        }
        for arc_a in a.arcs(sa) {
            if arc_a.olabel == EPSILON {
                // a advances alone
                let t = state_of((arc_a.next, sb), &mut out, &mut queue, &mut map);
                out.add_arc(
                    s,
                    Arc {
                        ilabel: arc_a.ilabel,
                        olabel: EPSILON,
                        weight: arc_a.weight,
                        next: t,
                    },
                );
            } else {
                for arc_b in b.arcs(sb) {
                    if arc_b.ilabel == arc_a.olabel {
                        let t = state_of((arc_a.next, arc_b.next), &mut out, &mut queue, &mut map);
                        out.add_arc(
                            s,
                            Arc {
                                ilabel: arc_a.ilabel,
                                olabel: arc_b.olabel,
                                weight: arc_a.weight + arc_b.weight,
                                next: t,
                            },
                        );
                    }
                }
            }
        }
        for arc_b in b.arcs(sb) {
            if arc_b.ilabel == EPSILON {
                // b advances alone
                let t = state_of((sa, arc_b.next), &mut out, &mut queue, &mut map);
                out.add_arc(
                    s,
                    Arc {
                        ilabel: EPSILON,
                        olabel: arc_b.olabel,
                        weight: arc_b.weight,
                        next: t,
                    },
                );
            }
        }
    }
    out.trim()
}

/// One accepting path's output tape and total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutput {
    pub olabels: Vec<u32>,
    pub weight: f64,
}

#[derive(Clone)]
struct QueueItem {
    weight: f64,
    olabels: Vec<u32>,
    state: u32,
    pos: usize,
    /// Final weight already added; popping this item ends the search.
    done: bool,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap via reversed compare; weight first, then output ids
        other
            .weight
            .partial_cmp(&self.weight)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.olabels.cmp(&self.olabels))
    }
}
impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight accepting path for the exact input label sequence.
/// Ties broken by lexicographically smallest output id sequence.
/// Input epsilon arcs are traversed without consuming input.
///
/// Returns `None` when no accepting path exists (including unknown labels).
pub fn shortest_path(fst: &Fst, input: &[u32]) -> Option<PathOutput> {
    if fst.num_states() == 0 {
        return None;
    }
    let n = input.len();
    let mut heap = BinaryHeap::new();
    let mut settled: HashSet<(u32, usize)> = HashSet::new();
    heap.push(QueueItem {
        weight: 0.0,
        olabels: Vec::new(),
        state: fst.start(),
        pos: 0,
        done: false,
    });
    while let Some(item) = heap.pop() {
        if item.done {
            return Some(PathOutput {
                olabels: item.olabels,
                weight: item.weight,
            });
        }
        if !settled.insert((item.state, item.pos)) {
            continue;
        }
        if item.pos == n {
            if let Some(fw) = fst.final_weight(item.state) {
                heap.push(QueueItem {
                    weight: item.weight + fw,
                    olabels: item.olabels.clone(),
                    state: item.state,
                    pos: item.pos,
                    done: true,
                });
            }
        }
        for arc in fst.arcs(item.state) {
            let next_pos = if arc.ilabel == EPSILON {
                item.pos
            } else if item.pos < n && input[item.pos] == arc.ilabel {
                item.pos + 1
            } else {
                continue;
            };
            if settled.contains(&(arc.next, next_pos)) {
                continue;
            }
            let mut olabels = item.olabels.clone();
            if arc.olabel != EPSILON {
                olabels.push(arc.olabel);
            }
            heap.push(QueueItem {
                weight: item.weight + arc.weight,
                olabels,
                state: arc.next,
                pos: next_pos,
                done: false,
            });
        }
    }
    None
}

//! Exhaustive path enumeration for acyclic FSTs. Mainly useful for grammar
//! debugging and as an independent cross-check of shortest-path and
//! composition results.

use super::fst::Fst;
use super::symbol::EPSILON;

/// One complete start-to-final path with epsilon labels removed.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPath {
    pub ilabels: Vec<u32>,
    pub olabels: Vec<u32>,
    pub weight: f64,
}

/// Enumerates every accepting path, up to `limit` paths. Returns `None`
/// if the limit is exceeded or a cycle is encountered on a path.
pub fn enumerate_paths(fst: &Fst, limit: usize) -> Option<Vec<FullPath>> {
    if fst.num_states() == 0 {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    let mut on_stack = vec![false; fst.num_states()];
    let mut ilabels = Vec::new();
    let mut olabels = Vec::new();
    let ok = walk(
        fst,
        fst.start(),
        0.0,
        &mut ilabels,
        &mut olabels,
        &mut on_stack,
        &mut out,
        limit,
    );
    if ok {
        Some(out)
    } else {
        None
    }
}

#[allow(clippy::too_many_arguments)]
fn walk(
    fst: &Fst,
    state: u32,
    weight: f64,
    ilabels: &mut Vec<u32>,
    olabels: &mut Vec<u32>,
    on_stack: &mut [bool],
    out: &mut Vec<FullPath>,
    limit: usize,
) -> bool {
    if on_stack[state as usize] {
        return false; // cycle
    }
    if let Some(fw) = fst.final_weight(state) {
        if out.len() >= limit {
            return false;
        }
        out.push(FullPath {
            ilabels: ilabels.clone(),
            olabels: olabels.clone(),
            weight: weight + fw,
        });
    }
    on_stack[state as usize] = true;
    for arc in fst.arcs(state) {
        let pushed_i = arc.ilabel != EPSILON;
        let pushed_o = arc.olabel != EPSILON;
        if pushed_i {
            ilabels.push(arc.ilabel);
        }
        if pushed_o {
            olabels.push(arc.olabel);
        }
        let ok = walk(
            fst,
            arc.next,
            weight + arc.weight,
            ilabels,
            olabels,
            on_stack,
            out,
            limit,
        );
        if pushed_i {
            ilabels.pop();
        }
        if pushed_o {
            olabels.pop();
        }
        if !ok {
            on_stack[state as usize] = false;
            return false;
        }
    }
    on_stack[state as usize] = false;
    true
}

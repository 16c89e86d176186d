//! Connectivity analysis and construction of the replacement VSC set.
//!
//! Every unit runs these functions on the same decoded connectivity matrix
//! and the same metric, so all of them arrive at the same plan without any
//! further coordination.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{ControlMode, DerUnit};
use crate::DerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSource {
    Local,
    DecodedPtch,
}

/// Binary receivability matrix: `q[u][j]` is true when `u` hears `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityMatrix {
    q: Vec<Vec<bool>>,
    pub source: MatrixSource,
}

impl ConnectivityMatrix {
    /// Builds from rows; the diagonal is forced to one.
    pub fn from_rows(mut rows: Vec<Vec<bool>>, source: MatrixSource) -> Self {
        let n = rows.len();
        for (u, row) in rows.iter_mut().enumerate() {
            assert_eq!(row.len(), n, "connectivity matrix must be square");
            row[u] = true;
        }
        ConnectivityMatrix { q: rows, source }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(vec![vec![false; n]; n], MatrixSource::Local)
    }

    pub fn full(n: usize) -> Self {
        Self::from_rows(vec![vec![true; n]; n], MatrixSource::Local)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn get(&self, u: DerId, j: DerId) -> bool {
        self.q[u.index()][j.index()]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.q
    }

    /// A usable wireless link needs both directions.
    pub fn linked(&self, u: DerId, j: DerId) -> bool {
        u != j && self.get(u, j) && self.get(j, u)
    }

    /// An all-zero off-diagonal row, i.e. the unit reported an empty list.
    pub fn is_silent(&self, u: DerId) -> bool {
        let i = u.index();
        self.q[i].iter().enumerate().all(|(j, &b)| j == i || !b)
    }

    pub fn ids(&self) -> impl Iterator<Item = DerId> {
        (0..self.len()).map(DerId::from_index)
    }
}

/// Non-negative symmetric score matrix; here pairwise distances in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    pub m: Vec<Vec<f64>>,
}

impl MetricMatrix {
    pub fn new(m: Vec<Vec<f64>>) -> Self {
        MetricMatrix { m }
    }

    pub fn get(&self, u: DerId, j: DerId) -> f64 {
        self.m[u.index()][j.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSwitch {
    pub id: DerId,
    pub from: ControlMode,
    pub to: ControlMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VsetPlan {
    pub old_vset: BTreeSet<DerId>,
    pub new_vset: BTreeSet<DerId>,
    pub switches: Vec<ModeSwitch>,
    pub feasible: bool,
}

impl VsetPlan {
    fn new(old_vset: &BTreeSet<DerId>, new_vset: BTreeSet<DerId>, feasible: bool) -> Self {
        let switches = old_vset
            .symmetric_difference(&new_vset)
            .map(|&id| {
                if new_vset.contains(&id) {
                    ModeSwitch { id, from: ControlMode::Csc, to: ControlMode::Vsc }
                } else {
                    ModeSwitch { id, from: ControlMode::Vsc, to: ControlMode::Csc }
                }
            })
            .collect();
        VsetPlan { old_vset: old_vset.clone(), new_vset, switches, feasible }
    }

    pub fn unchanged(vset: &BTreeSet<DerId>) -> Self {
        Self::new(vset, vset.clone(), true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReconfigError {
    /// No connected set of the requested size exists; carries the partial
    /// plan for degraded operation.
    Infeasible(VsetPlan),
}

impl fmt::Display for ReconfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconfigError::Infeasible(p) => write!(
                f,
                "no connected VSC set of size {} exists (partial set has {})",
                p.old_vset.len(),
                p.new_vset.len()
            ),
        }
    }
}

impl core::error::Error for ReconfigError {}

/// Connected components of the subgraph induced by `vset`, largest first,
/// ties broken by smallest member id.
pub fn components(q: &ConnectivityMatrix, vset: &BTreeSet<DerId>) -> Vec<BTreeSet<DerId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in vset {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &j in vset {
                if q.linked(u, j) && seen.insert(j) {
                    comp.insert(j);
                    queue.push_back(j);
                }
            }
        }
        out.push(comp);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.first().cmp(&b.first())));
    out
}

/// Greedy construction of `V'`.
///
/// Seeds with the largest component of `vset` that has no silent member, then
/// repeatedly adds the non-silent unit linked to `V'` with the highest summed
/// metric to the members it links to (smallest id on ties) until `V'` has
/// `target` members. When the components already form one group the plan is
/// the identity. If no component qualifies as a seed, the smallest-id
/// non-silent unit whose reachable group has at least `target` members
/// starts the set.
pub fn build_new_vset(
    q: &ConnectivityMatrix,
    metric: &MetricMatrix,
    vset: &BTreeSet<DerId>,
    target: usize,
) -> Result<VsetPlan, ReconfigError> {
    let comps = components(q, vset);
    if comps.len() <= 1 {
        return Ok(VsetPlan::unchanged(vset));
    }

    let mut next: BTreeSet<DerId> = match comps.into_iter().find(|c| c.iter().all(|&u| !q.is_silent(u))) {
        Some(c) => c,
        None => {
            // Every old VSC is cut off: restart from the first unit whose
            // reachable group can hold a full set.
            let voiced: BTreeSet<DerId> = q.ids().filter(|&u| !q.is_silent(u)).collect();
            components(q, &voiced)
                .into_iter()
                .filter(|c| c.len() >= target)
                .flat_map(|c| c.first().copied())
                .min()
                .map(|u| BTreeSet::from([u]))
                .unwrap_or_default()
        }
    };

    while next.len() < target {
        let mut best: Option<(f64, DerId)> = None;
        for c in q.ids() {
            if next.contains(&c) || q.is_silent(c) {
                continue;
            }
            let mut linked_any = false;
            let mut score = 0.0;
            for &m in &next {
                if q.linked(c, m) {
                    linked_any = true;
                    score += metric.get(c, m);
                }
            }
            if linked_any && best.is_none_or(|(s, _)| score > s) {
                best = Some((score, c));
            }
        }
        match best {
            Some((_, c)) => {
                next.insert(c);
            }
            None => break,
        }
    }

    if next.len() == target {
        Ok(VsetPlan::new(vset, next, true))
    } else {
        Err(ReconfigError::Infeasible(VsetPlan::new(vset, next, false)))
    }
}

/// Sets every unit's mode from the plan's target set.
pub fn apply_plan(plan: &VsetPlan, units: &[DerUnit]) -> Vec<DerUnit> {
    units
        .iter()
        .map(|u| {
            let mut u = u.clone();
            u.mode = if plan.new_vset.contains(&u.id) { ControlMode::Vsc } else { ControlMode::Csc };
            u
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[u16]) -> BTreeSet<DerId> {
        xs.iter().map(|&x| DerId(x)).collect()
    }

    fn from_edges(n: usize, edges: &[(u16, u16)]) -> ConnectivityMatrix {
        let mut rows = vec![vec![false; n]; n];
        for &(a, b) in edges {
            rows[a as usize - 1][b as usize - 1] = true;
            rows[b as usize - 1][a as usize - 1] = true;
        }
        ConnectivityMatrix::from_rows(rows, MatrixSource::DecodedPtch)
    }

    #[test]
    fn single_component_when_fully_connected() {
        let c = components(&ConnectivityMatrix::full(9), &ids(&[2, 5, 6, 9]));
        assert_eq!(c, vec![ids(&[2, 5, 6, 9])]);
    }

    #[test]
    fn identity_gives_singletons_in_id_order() {
        let c = components(&ConnectivityMatrix::identity(9), &ids(&[9, 2, 6, 5]));
        assert_eq!(c, vec![ids(&[2]), ids(&[5]), ids(&[6]), ids(&[9])]);
    }

    #[test]
    fn connected_vset_is_left_alone() {
        let q = ConnectivityMatrix::full(5);
        let m = MetricMatrix::new(vec![vec![1.0; 5]; 5]);
        let plan = build_new_vset(&q, &m, &ids(&[1, 2]), 2).unwrap();
        assert_eq!(plan.new_vset, ids(&[1, 2]));
        assert!(plan.switches.is_empty());
    }

    #[test]
    fn infeasible_when_only_three_reachable() {
        // 1-2-3 chain, everything else silent; V = {1, 4}.
        let q = from_edges(6, &[(1, 2), (2, 3)]);
        let m = MetricMatrix::new(vec![vec![1.0; 6]; 6]);
        match build_new_vset(&q, &m, &ids(&[1, 4, 5, 6]), 4) {
            Err(ReconfigError::Infeasible(p)) => {
                assert!(!p.feasible);
                assert_eq!(p.new_vset, ids(&[1, 2, 3]));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn metric_picks_farthest_candidate() {
        // Star around 1; candidates 2, 3, 4 all linked to 1.
        let q = from_edges(4, &[(1, 2), (1, 3), (1, 4), (3, 4)]);
        let mut m = vec![vec![0.0; 4]; 4];
        m[0][1] = 10.0;
        m[0][2] = 30.0;
        m[0][3] = 20.0;
        for a in 0..4 {
            for b in 0..a {
                m[a][b] = m[b][a];
            }
        }
        // V = {1, 2} where 2 went silent: rows of 2 are zero.
        let mut rows = q.rows().to_vec();
        rows[1] = vec![false; 4];
        rows[0][1] = false;
        let q = ConnectivityMatrix::from_rows(rows, MatrixSource::DecodedPtch);
        let plan = build_new_vset(&q, &MetricMatrix::new(m), &ids(&[1, 2]), 2).unwrap();
        assert_eq!(plan.new_vset, ids(&[1, 3]));
    }

    #[test]
    fn apply_is_idempotent() {
        let units = vec![DerUnit::vsc(1, 48.0, 0.3, 0.1), DerUnit::csc(2, 2.0)];
        let plan = VsetPlan::new(&ids(&[1]), ids(&[2]), true);
        let once = apply_plan(&plan, &units);
        assert_eq!(once[0].mode, ControlMode::Csc);
        assert_eq!(once[1].mode, ControlMode::Vsc);
        assert_eq!(apply_plan(&plan, &once), once);
        assert_eq!(apply_plan(&VsetPlan::unchanged(&ids(&[1])), &units), units);
    }
}

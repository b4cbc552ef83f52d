//! Static BS clustering and best-channel user affiliation.
//!
//! BSs are merged bottom-up with the minimax linkage: the distance between two
//! clusters is the minimax radius of their union, i.e. the smallest radius of
//! a disc centered at one of the member points that covers every member. Each
//! merge must respect a per-level cap on cluster size.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::scenario::{distance, NetworkRealization, Point};
use crate::{Error, Result};

/// `max_size(m)`: the largest number of BSs a cluster may hold when the
/// network has `m` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeSchedule {
    // caps[m - 1] is the cap for m clusters
    caps: Vec<usize>,
}

impl SizeSchedule {
    /// Caps for `m = 1..=caps.len()`.
    ///
    /// Caps may not grow with `m`: a cluster formed under a looser cap at a
    /// finer level could otherwise exceed a tighter cap further up.
    pub fn from_caps(caps: Vec<usize>) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::InvalidConfig("size schedule is empty".into()));
        }
        if let Some(m) = (1..caps.len()).find(|&m| caps[m] > caps[m - 1]) {
            return Err(Error::InvalidConfig(format!(
                "size cap {} at {} clusters exceeds cap {} at {} clusters",
                caps[m],
                m + 1,
                caps[m - 1],
                m
            )));
        }
        Ok(Self { caps })
    }

    /// Every level allows a single cluster of all BSs.
    pub fn unconstrained(num_bs: usize) -> Self {
        Self {
            caps: vec![num_bs; num_bs.max(1)],
        }
    }

    /// Leaf counts of a binary tree: the cap at `m` clusters is the smallest
    /// power of two strictly above `num_bs / m`, clipped to `num_bs`.
    ///
    /// For 20 BSs: 2 for m >= 11, 4 for 6..=10, 8 for 3..=5, 16 for m = 2, 20 for m = 1.
    pub fn binary_tree(num_bs: usize) -> Self {
        let caps = (1..=num_bs.max(1))
            .map(|m| {
                let mut cap = 1usize;
                // smallest power of two p with p * m > num_bs
                while cap * m <= num_bs {
                    cap *= 2;
                }
                cap.min(num_bs).max(1)
            })
            .collect();
        Self { caps }
    }

    pub fn num_bs(&self) -> usize {
        self.caps.len()
    }

    pub fn max_size(&self, m: usize) -> usize {
        self.caps[m - 1]
    }

    /// Checks `max_size(m) >= ceil(num_bs / m)` for every level.
    pub fn check_feasible(&self) -> Result<()> {
        let n = self.num_bs();
        for m in 1..=n {
            if self.max_size(m) < n.div_ceil(m) {
                return Err(Error::ScheduleInfeasible {
                    level: m,
                    max_size: self.max_size(m),
                });
            }
        }
        Ok(())
    }
}

/// `max over s_j of d(center, s_j)`.
fn radius_around(center: Point, points: &[Point]) -> f64 {
    points
        .iter()
        .map(|&p| distance(center, p))
        .fold(0.0, f64::max)
}

/// Minimax radius: `min over s_i in S of max over s_j in S of d(s_i, s_j)`.
pub fn minimax_radius(points: &[Point]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(points
        .iter()
        .map(|&c| radius_around(c, points))
        .fold(f64::INFINITY, f64::min))
}

/// Minimax linkage between two point sets: the minimax radius of their union.
pub fn minimax_linkage(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let union: Vec<Point> = a.iter().chain(b).copied().collect();
    minimax_radius(&union)
}

/// One agglomeration step. Singletons carry ids `0..num_bs`; the `i`-th merge
/// creates id `num_bs + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub merged: usize,
    /// Linkage at which the merge happened.
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterHierarchy {
    num_bs: usize,
    merges: Vec<Merge>,
    // levels[m - 1]: partition into m groups, each sorted, groups ordered by smallest member
    levels: Vec<Vec<Vec<usize>>>,
}

impl ClusterHierarchy {
    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Partition of the BSs into `m` clusters.
    pub fn level(&self, m: usize) -> Result<&[Vec<usize>]> {
        if m == 0 || m > self.num_bs {
            return Err(Error::LevelOutOfRange {
                m,
                num_bs: self.num_bs,
            });
        }
        Ok(&self.levels[m - 1])
    }

    /// Merge list, one line per merge: `<left> <right> <merged> <height> <size>`.
    pub fn to_dendrogram_text(&self) -> String {
        let mut out = format!("# dendrogram num_bs={}\n# left right merged height size\n", self.num_bs);
        for mg in &self.merges {
            let _ = writeln!(out, "{} {} {} {} {}", mg.left, mg.right, mg.merged, mg.height, mg.size);
        }
        out
    }
}

struct Node {
    id: usize,
    members: Vec<usize>,
}

/// Size-constrained minimax-linkage agglomerative clustering.
///
/// At each step the pair of current clusters with the smallest linkage whose
/// combined size fits the cap of the resulting level is merged. Ties go to the
/// lexicographically smallest pair of smallest-member indices. Linkages are
/// recomputed from the member points each step.
pub fn build_hierarchy(bs_positions: &[Point], schedule: &SizeSchedule) -> Result<ClusterHierarchy> {
    let n = bs_positions.len();
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    if schedule.num_bs() != n {
        return Err(Error::InvalidConfig(format!(
            "size schedule covers {} levels but there are {} BSs",
            schedule.num_bs(),
            n
        )));
    }

    let mut nodes: Vec<Node> = (0..n).map(|b| Node { id: b, members: vec![b] }).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut levels = vec![Vec::new(); n];
    levels[n - 1] = nodes.iter().map(|nd| nd.members.clone()).collect();

    let mut scratch = Vec::with_capacity(n);
    for m in (1..n).rev() {
        let cap = schedule.max_size(m);
        // nodes are kept ordered by smallest member, so scanning i < j with a
        // strict comparison yields the lexicographic tie-break
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if nodes[i].members.len() + nodes[j].members.len() > cap {
                    continue;
                }
                scratch.clear();
                scratch.extend(nodes[i].members.iter().chain(&nodes[j].members).map(|&b| bs_positions[b]));
                let link = minimax_radius(&scratch)?;
                if best.is_none_or(|(_, _, d)| link < d) {
                    best = Some((i, j, link));
                }
            }
        }
        let (i, j, height) = best.ok_or(Error::ScheduleInfeasible { level: m, max_size: cap })?;

        let right = nodes.remove(j);
        let left = &mut nodes[i];
        let merged = n + merges.len();
        merges.push(Merge {
            left: left.id,
            right: right.id,
            merged,
            height,
            size: left.members.len() + right.members.len(),
        });
        left.id = merged;
        left.members.extend(right.members);
        left.members.sort_unstable();
        // the merged node keeps the smaller minimum, so ordering is preserved
        levels[m - 1] = nodes.iter().map(|nd| nd.members.clone()).collect();
    }

    Ok(ClusterHierarchy { num_bs: n, merges, levels })
}

/// How a user's "best BS" is chosen from its per-band channel coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffiliationRule {
    /// Largest `|h_{u,b,k}|` over all bands.
    #[default]
    MaxOverBands,
    /// Largest band-averaged `|h_{u,b,k}|^2`.
    MeanPower,
}

/// Best-channel BS of every user. Ties go to the smallest BS index.
pub fn best_bs(real: &NetworkRealization, rule: AffiliationRule) -> Vec<usize> {
    let num_bands = real.num_bands();
    (0..real.num_users())
        .map(|u| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for b in 0..real.num_bs() {
                let score = match rule {
                    AffiliationRule::MaxOverBands => (0..num_bands)
                        .map(|k| real.channel.get(u, b, k).norm())
                        .fold(f64::NEG_INFINITY, f64::max),
                    AffiliationRule::MeanPower => {
                        (0..num_bands)
                            .map(|k| real.channel.get(u, b, k).norm_sqr())
                            .sum::<f64>()
                            / num_bands as f64
                    }
                };
                if score > best_score {
                    best_score = score;
                    best = b;
                }
            }
            best
        })
        .collect()
}

/// Virtual cells: disjoint BS sets and the users they serve.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCellPartition {
    pub bs_of_cell: Vec<Vec<usize>>,
    pub users_of_cell: Vec<Vec<usize>>,
    /// Best BS of every user.
    pub serving_bs: Vec<usize>,
    pub cell_of_bs: Vec<usize>,
    pub cell_of_user: Vec<usize>,
}

impl VirtualCellPartition {
    /// Builds the partition from BS groups and each user's serving BS.
    pub fn from_groups(bs_groups: &[Vec<usize>], serving_bs: Vec<usize>) -> Result<Self> {
        let num_bs: usize = bs_groups.iter().map(Vec::len).sum();
        let mut cell_of_bs = vec![usize::MAX; num_bs];
        for (v, group) in bs_groups.iter().enumerate() {
            for &b in group {
                if b >= num_bs || cell_of_bs[b] != usize::MAX {
                    return Err(Error::InvalidConfig(format!("BS groups are not a partition (BS {b})")));
                }
                cell_of_bs[b] = v;
            }
        }
        let mut users_of_cell = vec![Vec::new(); bs_groups.len()];
        let mut cell_of_user = Vec::with_capacity(serving_bs.len());
        for (u, &b) in serving_bs.iter().enumerate() {
            let v = *cell_of_bs
                .get(b)
                .ok_or_else(|| Error::InvalidConfig(format!("user {u} served by unknown BS {b}")))?;
            users_of_cell[v].push(u);
            cell_of_user.push(v);
        }
        Ok(Self {
            bs_of_cell: bs_groups.to_vec(),
            users_of_cell,
            serving_bs,
            cell_of_bs,
            cell_of_user,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.bs_of_cell.len()
    }

    pub fn num_bs(&self) -> usize {
        self.cell_of_bs.len()
    }

    pub fn num_users(&self) -> usize {
        self.serving_bs.len()
    }

    /// Number of users whose best BS is `b`, for every `b`.
    pub fn users_per_bs(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_bs()];
        for &b in &self.serving_bs {
            counts[b] += 1;
        }
        counts
    }

    /// Both the BS sets and the user sets partition their ground sets, and
    /// every user sits in the cell of its serving BS.
    pub fn is_proper(&self) -> bool {
        fn covers_once(sets: &[Vec<usize>], n: usize) -> bool {
            let mut seen = vec![false; n];
            for &x in sets.iter().flatten() {
                if x >= n || seen[x] {
                    return false;
                }
                seen[x] = true;
            }
            seen.into_iter().all(|s| s)
        }
        covers_once(&self.bs_of_cell, self.num_bs())
            && covers_once(&self.users_of_cell, self.num_users())
            && self
                .serving_bs
                .iter()
                .enumerate()
                .all(|(u, &b)| self.cell_of_user[u] == self.cell_of_bs[b])
    }
}

/// Cuts the hierarchy at `m` cells and attaches each user to the cell of its best BS.
pub fn affiliate_users(
    real: &NetworkRealization,
    hierarchy: &ClusterHierarchy,
    m: usize,
    rule: AffiliationRule,
) -> Result<VirtualCellPartition> {
    let groups = hierarchy.level(m)?;
    VirtualCellPartition::from_groups(groups, best_bs(real, rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ChannelTensor;
    use num_complex::Complex64;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn radius_examples() {
        assert_eq!(minimax_radius(&pts(&[(0.0, 0.0)])).unwrap(), 0.0);
        assert_eq!(minimax_radius(&pts(&[(0.0, 0.0), (2.0, 0.0)])).unwrap(), 2.0);
        assert_eq!(minimax_radius(&pts(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)])).unwrap(), 2.0);
        assert!(matches!(minimax_radius(&[]), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn linkage_examples() {
        let a = pts(&[(0.0, 0.0)]);
        let b = pts(&[(2.0, 0.0)]);
        assert_eq!(minimax_linkage(&a, &b).unwrap(), 2.0);
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(3.0, 0.0)]);
        assert_eq!(minimax_linkage(&a, &b).unwrap(), 2.0);
        // same union split differently
        let a2 = pts(&[(0.0, 0.0)]);
        let b2 = pts(&[(1.0, 0.0), (3.0, 0.0)]);
        assert_eq!(minimax_linkage(&a2, &b2).unwrap(), 2.0);
        assert!(minimax_linkage(&a, &[]).is_err());
    }

    #[test]
    fn binary_tree_schedule_for_twenty() {
        let s = SizeSchedule::binary_tree(20);
        for m in 1..=20 {
            let expected = match m {
                1 => 20,
                2 => 16,
                3..=5 => 8,
                6..=10 => 4,
                _ => 2,
            };
            assert_eq!(s.max_size(m), expected, "m = {m}");
        }
        s.check_feasible().unwrap();
    }

    #[test]
    fn infeasible_schedule_detected() {
        let s = SizeSchedule::from_caps(vec![4, 1, 1, 1]).unwrap();
        assert!(matches!(s.check_feasible(), Err(Error::ScheduleInfeasible { level: 2, .. })));
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (5.0, 0.0), (6.0, 0.0)]);
        // the first merge already needs a pair
        let err = build_hierarchy(&p, &s).unwrap_err();
        assert!(matches!(err, Error::ScheduleInfeasible { level: 3, max_size: 1 }));
    }

    #[test]
    fn caps_growing_with_m_rejected() {
        assert!(SizeSchedule::from_caps(vec![4, 1, 2, 4]).is_err());
        assert!(SizeSchedule::from_caps(vec![4, 2, 2, 1]).is_ok());
    }

    #[test]
    fn two_near_pairs() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (100.0, 0.0), (101.0, 0.0)]);
        let s = SizeSchedule::from_caps(vec![4, 2, 2, 2]).unwrap();
        let h = build_hierarchy(&p, &s).unwrap();
        assert_eq!(h.level(2).unwrap(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(h.level(1).unwrap(), &[vec![0, 1, 2, 3]]);
        assert_eq!(h.merges().len(), 3);
        assert_eq!(h.merges()[0], Merge { left: 0, right: 1, merged: 4, height: 1.0, size: 2 });
    }

    #[test]
    fn two_bs_unconstrained() {
        let p = pts(&[(0.0, 0.0), (10.0, 0.0)]);
        let h = build_hierarchy(&p, &SizeSchedule::unconstrained(2)).unwrap();
        assert_eq!(h.level(1).unwrap(), &[vec![0, 1]]);
    }

    #[test]
    fn top_level_is_singletons() {
        let p = pts(&[(0.0, 0.0), (3.0, 1.0), (7.0, 2.0), (1.0, 9.0), (4.0, 4.0)]);
        let h = build_hierarchy(&p, &SizeSchedule::unconstrained(5)).unwrap();
        assert_eq!(h.level(5).unwrap(), &[vec![0], vec![1], vec![2], vec![3], vec![4]]);
        assert!(h.level(0).is_err());
        assert!(h.level(6).is_err());
    }

    #[test]
    fn ties_prefer_smallest_indices() {
        // equilateral-ish: all pair distances equal on a unit square's sides
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let h = build_hierarchy(&p, &SizeSchedule::unconstrained(4)).unwrap();
        assert_eq!(h.level(3).unwrap(), &[vec![0, 1], vec![2], vec![3]]);
    }

    #[test]
    fn dendrogram_text_lists_merges() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (100.0, 0.0)]);
        let h = build_hierarchy(&p, &SizeSchedule::unconstrained(3)).unwrap();
        let text = h.to_dendrogram_text();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, vec!["0 1 3 1 2", "3 2 4 99 3"]);
    }

    fn realization_from(channel: ChannelTensor) -> NetworkRealization {
        let (nu, nb, _) = channel.shape();
        NetworkRealization::new(
            vec![Point::default(); nb],
            vec![Point::default(); nu],
            channel,
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn dominant_bs_wins() {
        let ch = ChannelTensor::from_fn(1, 5, 3, |_, b, _| Complex64::new(if b == 3 { 2.0 } else { 1.0 }, 0.0));
        let real = realization_from(ch);
        assert_eq!(best_bs(&real, AffiliationRule::MaxOverBands), vec![3]);
        assert_eq!(best_bs(&real, AffiliationRule::MeanPower), vec![3]);
    }

    #[test]
    fn rules_can_disagree() {
        // BS 0 has one strong band, BS 1 is uniformly decent
        let ch = ChannelTensor::from_fn(1, 2, 4, |_, b, k| match (b, k) {
            (0, 0) => Complex64::new(3.0, 0.0),
            (0, _) => Complex64::new(0.1, 0.0),
            _ => Complex64::new(0.0, 2.0),
        });
        let real = realization_from(ch);
        assert_eq!(best_bs(&real, AffiliationRule::MaxOverBands), vec![0]);
        assert_eq!(best_bs(&real, AffiliationRule::MeanPower), vec![1]);
    }

    #[test]
    fn equal_channels_tie_to_smallest_bs() {
        let ch = ChannelTensor::from_fn(2, 3, 2, |_, _, _| Complex64::new(0.5, 0.5));
        let real = realization_from(ch);
        assert_eq!(best_bs(&real, AffiliationRule::MaxOverBands), vec![0, 0]);
    }

    #[test]
    fn zero_users_partition_is_proper() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (9.0, 0.0)]);
        let h = build_hierarchy(&p, &SizeSchedule::unconstrained(3)).unwrap();
        let real = NetworkRealization::new(p, vec![], ChannelTensor::zeros(0, 3, 2), 1.0, 1.0).unwrap();
        let part = affiliate_users(&real, &h, 2, AffiliationRule::MaxOverBands).unwrap();
        assert!(part.users_of_cell.iter().all(Vec::is_empty));
        assert!(part.is_proper());
        assert_eq!(part.users_per_bs(), vec![0, 0, 0]);
    }

    #[test]
    fn non_partition_groups_rejected() {
        assert!(VirtualCellPartition::from_groups(&[vec![0, 1], vec![1]], vec![]).is_err());
        assert!(VirtualCellPartition::from_groups(&[vec![0]], vec![3]).is_err());
    }
}

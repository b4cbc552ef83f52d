//! Proportional band allocation to non-interfering BS groups, and per-user
//! transmit band sets.
//!
//! Bands are 0-based indices in `0..num_bands`.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::clustering::VirtualCellPartition;
use crate::intergraph::Coloring;
use crate::scenario::{distance, Point};
use crate::{Error, Result};

/// Denominator used for a group's ideal share `f~_l = |K| n_l / D_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareDenominator {
    /// `D_l = sum_i n_i`: shares add up to `|K|`.
    #[default]
    Total,
    /// `D_l = sum_{i != l} n_i`, taken literally. Shares overshoot `|K|` and
    /// the rounding step trims the excess.
    OtherGroups,
}

/// Nonnegative rational `num / den`, `den > 0`.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn ceil(self) -> u128 {
        self.num.div_ceil(self.den)
    }

    fn is_integer(self) -> bool {
        self.num.is_multiple_of(self.den)
    }

    /// `ceil(x) - x`.
    fn ceil_gap(self) -> Ratio {
        Ratio {
            num: self.ceil() * self.den - self.num,
            den: self.den,
        }
    }

    fn cmp(self, other: Ratio) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Number of bands `f_l` for every group, proportional to its user count `n_l`.
///
/// When the ideal shares are not all integers, every share is rounded up and
/// the excess `delta = sum ceil(f~) - |K|` is taken back one band at a time
/// from groups in order of decreasing rounding gap `ceil(f~) - f~` (ties to
/// the lower group index), skipping groups that would drop below one band.
/// Passes over that order repeat until the excess is gone.
///
/// A group with users always keeps at least one band. If no group has users,
/// the first group receives every band.
pub fn allocate_group_bands(
    user_counts: &[usize],
    num_bands: usize,
    denominator: ShareDenominator,
) -> Result<Vec<usize>> {
    let groups = user_counts.len();
    if groups == 0 {
        return Err(Error::BandAllocation {
            num_bands,
            reason: "no groups".into(),
        });
    }
    let loaded = user_counts.iter().filter(|&&n| n > 0).count();
    if num_bands < loaded {
        return Err(Error::BandAllocation {
            num_bands,
            reason: format!("{loaded} groups have users"),
        });
    }
    let total: u128 = user_counts.iter().map(|&n| n as u128).sum();
    if total == 0 {
        let mut f = vec![0; groups];
        f[0] = num_bands;
        return Ok(f);
    }

    let k = num_bands as u128;
    let shares: Vec<Ratio> = user_counts
        .iter()
        .map(|&n| {
            let n = n as u128;
            let den = match denominator {
                ShareDenominator::Total => total,
                ShareDenominator::OtherGroups => total - n,
            };
            if den == 0 {
                // the only loaded group under the literal denominator
                Ratio { num: k, den: 1 }
            } else {
                Ratio { num: k * n, den }
            }
        })
        .collect();

    let mut f: Vec<u128> = shares.iter().map(|s| s.ceil()).collect();
    if shares.iter().all(|s| s.is_integer()) && f.iter().sum::<u128>() == k {
        return Ok(f.into_iter().map(|x| x as usize).collect());
    }

    let sum: u128 = f.iter().sum();
    if sum < k {
        return Err(Error::BandAllocation {
            num_bands,
            reason: format!("rounded shares sum to {sum}"),
        });
    }
    let mut excess = sum - k;

    let mut order: Vec<usize> = (0..groups).collect();
    // stable: equal gaps keep ascending group index
    order.sort_by(|&a, &b| shares[b].ceil_gap().cmp(shares[a].ceil_gap()));

    while excess > 0 {
        let mut progressed = false;
        for &g in &order {
            if excess == 0 {
                break;
            }
            if f[g] > 1 {
                f[g] -= 1;
                excess -= 1;
                progressed = true;
            }
        }
        if !progressed {
            return Err(Error::BandAllocation {
                num_bands,
                reason: format!("{excess} surplus bands left with every group at one band"),
            });
        }
    }
    Ok(f.into_iter().map(|x| x as usize).collect())
}

/// Consecutive band ranges: group `l` gets the `f_l` bands after all earlier groups.
pub fn group_band_ranges(group_band_counts: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    group_band_counts
        .iter()
        .map(|&f| {
            let r = start..start + f;
            start += f;
            r
        })
        .collect()
}

/// Receive bands of every BS: the range of its color group.
pub fn assign_bs_bands(coloring: &Coloring, group_band_counts: &[usize]) -> Vec<Vec<usize>> {
    assert_eq!(
        coloring.groups.len(),
        group_band_counts.len(),
        "one band count per color group"
    );
    let ranges = group_band_ranges(group_band_counts);
    coloring
        .color_of
        .iter()
        .map(|&c| ranges[c].clone().collect())
        .collect()
}

/// Transmit bands of every user: all bands minus those received by foreign
/// BSs that are within `gamma_d` of both the user and its serving BS.
pub fn assign_user_bands(
    bs_positions: &[Point],
    user_positions: &[Point],
    partition: &VirtualCellPartition,
    bands_of_bs: &[Vec<usize>],
    num_bands: usize,
    gamma_d: f64,
) -> Vec<Vec<usize>> {
    user_positions
        .iter()
        .enumerate()
        .map(|(u, &up)| {
            let serving = partition.serving_bs[u];
            let cell = partition.cell_of_bs[serving];
            let mut blocked = vec![false; num_bands];
            for (other, &op) in bs_positions.iter().enumerate() {
                if partition.cell_of_bs[other] != cell
                    && distance(bs_positions[serving], op) < gamma_d
                    && distance(up, op) < gamma_d
                {
                    for &k in &bands_of_bs[other] {
                        blocked[k] = true;
                    }
                }
            }
            (0..num_bands).filter(|&k| !blocked[k]).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPlan {
    pub num_bands: usize,
    /// `f_l` per color group.
    pub group_band_counts: Vec<usize>,
    pub group_ranges: Vec<Range<usize>>,
    /// `K_b`.
    pub bands_of_bs: Vec<Vec<usize>>,
    /// `K_u`.
    pub bands_of_user: Vec<Vec<usize>>,
}

impl FrequencyPlan {
    /// Every BS listens and every user transmits on every band.
    pub fn unrestricted(num_bs: usize, num_users: usize, num_bands: usize) -> Self {
        let all: Vec<usize> = (0..num_bands).collect();
        Self {
            num_bands,
            group_band_counts: vec![num_bands],
            group_ranges: group_band_ranges(&[num_bands]),
            bands_of_bs: vec![all.clone(); num_bs],
            bands_of_user: vec![all; num_users],
        }
    }

    /// CSV with `entity,id,bands`. BS rows carry an inclusive range `first-last`
    /// (empty when the BS has no bands); user rows a `;`-separated list.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity,id,bands\n");
        for (b, bands) in self.bands_of_bs.iter().enumerate() {
            let range = match (bands.first(), bands.last()) {
                (Some(first), Some(last)) => format!("{first}-{last}"),
                _ => String::new(),
            };
            let _ = writeln!(out, "bs,{b},{range}");
        }
        for (u, bands) in self.bands_of_user.iter().enumerate() {
            let list: Vec<String> = bands.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "user,{u},{}", list.join(";"));
        }
        out
    }
}

/// Full frequency plan for one (partition, coloring, gamma_d).
pub fn plan_frequencies(
    bs_positions: &[Point],
    user_positions: &[Point],
    partition: &VirtualCellPartition,
    coloring: &Coloring,
    num_bands: usize,
    gamma_d: f64,
    denominator: ShareDenominator,
) -> Result<FrequencyPlan> {
    let per_bs = partition.users_per_bs();
    let group_users: Vec<usize> = coloring
        .groups
        .iter()
        .map(|g| g.iter().map(|&b| per_bs[b]).sum())
        .collect();
    let group_band_counts = allocate_group_bands(&group_users, num_bands, denominator)?;
    let bands_of_bs = assign_bs_bands(coloring, &group_band_counts);
    let bands_of_user = assign_user_bands(
        bs_positions,
        user_positions,
        partition,
        &bands_of_bs,
        num_bands,
        gamma_d,
    );
    Ok(FrequencyPlan {
        num_bands,
        group_ranges: group_band_ranges(&group_band_counts),
        group_band_counts,
        bands_of_bs,
        bands_of_user,
    })
}

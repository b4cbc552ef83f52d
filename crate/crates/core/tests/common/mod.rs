//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vcell::scenario::{ChannelTensor, NetworkRealization, Point};

pub type CMatrix = Vec<Vec<Complex64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss(rng: &mut impl Rng, std: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (std * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn identity(n: usize, scale: f64) -> CMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new(if i == j { scale } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

/// `m += w * v v^H`, entry by entry.
pub fn add_outer(m: &mut CMatrix, w: f64, v: &[Complex64]) {
    for i in 0..v.len() {
        for j in 0..v.len() {
            m[i][j] += v[i] * v[j].conj() * w;
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &CMatrix) -> Complex64 {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        if a[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            d = -d;
        }
        d *= a[col][col];
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let sub = a[col][c] * f;
                a[r][c] -= sub;
            }
        }
    }
    d
}

/// Solves `m x = b` by Gauss-Jordan elimination.
pub fn solve(m: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = m.len();
    let mut a: CMatrix = m.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        a.swap(pivot, col);
        let p = a[col][col];
        for c in col..=n {
            a[col][c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for c in col..=n {
                    let sub = a[col][c] * f;
                    a[r][c] -= sub;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n]).collect()
}

/// `v^H m^{-1} v` via a linear solve.
pub fn inv_quad(m: &CMatrix, v: &[Complex64]) -> f64 {
    let x = solve(m, v);
    v.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum()
}

/// `log2 det(I + m n^{-1})` computed as `log2(det(m + n) / det(n))`.
pub fn log2_det_ratio(numerator: &CMatrix, denominator: &CMatrix) -> f64 {
    (det(numerator).norm() / det(denominator).norm()).log2()
}

/// Small random realization in normalized units (sigma^2 = 1, W = 1):
/// channel gains of 0..20 dB SNR per unit power.
pub fn random_realization(rng: &mut impl Rng, num_users: usize, num_bs: usize, num_bands: usize) -> NetworkRealization {
    let bs = (0..num_bs).map(|_| Point::new(rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0)).collect();
    let users = (0..num_users).map(|_| Point::new(rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0)).collect();
    let scale: Vec<f64> = (0..num_users * num_bs).map(|_| 10f64.powf(rng.random::<f64>() * 2.0)).collect();
    let ch = ChannelTensor::from_fn(num_users, num_bs, num_bands, |u, b, _| {
        cgauss(rng, scale[u * num_bs + b].sqrt())
    });
    NetworkRealization::new(bs, users, ch, 1.0, 1.0).unwrap()
}

/// Greedy agglomeration by exhaustive pair search over bitmask clusters,
/// comparing squared distances. `caps[m - 1]` limits cluster size at `m` clusters.
/// Returns the partition at every level, index `m - 1`.
pub fn brute_force_hierarchy(points: &[(f64, f64)], caps: &[usize]) -> Option<Vec<Vec<Vec<usize>>>> {
    let n = points.len();
    let d2 = |a: usize, b: usize| {
        let dx = points[a].0 - points[b].0;
        let dy = points[a].1 - points[b].1;
        dx * dx + dy * dy
    };
    let members = |mask: u32| (0..n).filter(move |&i| mask & (1 << i) != 0);
    let radius2 = |mask: u32| {
        members(mask)
            .map(|c| members(mask).map(|o| d2(c, o)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    };
    let lowest = |mask: u32| mask.trailing_zeros() as usize;
    let as_groups = |clusters: &[u32]| {
        let mut g: Vec<Vec<usize>> = clusters.iter().map(|&c| members(c).collect()).collect();
        g.sort();
        g
    };

    let mut clusters: Vec<u32> = (0..n).map(|i| 1u32 << i).collect();
    let mut levels = vec![Vec::new(); n];
    levels[n - 1] = as_groups(&clusters);
    for m in (1..n).rev() {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in 0..clusters.len() {
                if a == b {
                    continue;
                }
                let (ca, cb) = (clusters[a], clusters[b]);
                if lowest(ca) > lowest(cb) {
                    continue;
                }
                if (ca | cb).count_ones() as usize > caps[m - 1] {
                    continue;
                }
                let key = (radius2(ca | cb), lowest(ca), lowest(cb));
                let better = match best {
                    None => true,
                    Some((r, la, lb, _, _)) => key.0 < r || (key.0 == r && (key.1, key.2) < (la, lb)),
                };
                if better {
                    best = Some((key.0, key.1, key.2, a, b));
                }
            }
        }
        let (_, _, _, a, b) = best?;
        let merged = clusters[a] | clusters[b];
        clusters = clusters
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != a && i != b)
            .map(|(_, &c)| c)
            .collect();
        clusters.push(merged);
        levels[m - 1] = as_groups(&clusters);
    }
    Some(levels)
}

/// Exact chromatic number by trying `k = 1, 2, ...` with backtracking.
pub fn chromatic_number(n: usize, edges: &[(usize, usize)]) -> usize {
    if n == 0 {
        return 0;
    }
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    fn colorable(v: usize, k: usize, colors: &mut Vec<usize>, adj: &[Vec<bool>]) -> bool {
        if v == adj.len() {
            return true;
        }
        for c in 0..k {
            if (0..v).all(|w| !adj[v][w] || colors[w] != c) {
                colors[v] = c;
                if colorable(v + 1, k, colors, adj) {
                    return true;
                }
            }
        }
        false
    }
    (1..=n)
        .find(|&k| colorable(0, k, &mut vec![0; n], &adj))
        .unwrap()
}

/// Random simple graph with edge probability `p`.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Best single-user split for parallel channels by trying every active set.
/// Returns `(powers, sum log2(1 + g p))`.
pub fn waterfill_by_active_sets(gains: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let n = gains.len();
    let mut best = (vec![0.0; n], 0.0);
    for mask in 1u32..(1 << n) {
        let active: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0 && gains[k] > 0.0).collect();
        if active.len() != mask.count_ones() as usize {
            continue;
        }
        let level = (budget + active.iter().map(|&k| 1.0 / gains[k]).sum::<f64>()) / active.len() as f64;
        if active.iter().any(|&k| level < 1.0 / gains[k]) {
            continue;
        }
        let mut p = vec![0.0; n];
        for &k in &active {
            p[k] = level - 1.0 / gains[k];
        }
        let value: f64 = (0..n).map(|k| (1.0 + gains[k] * p[k]).log2()).sum();
        if value > best.1 {
            best = (p, value);
        }
    }
    best
}

/// Random single-cell power problem in normalized units. BS `b` listens on
/// band `k` with probability 0.7 and user `i` may use band `k` with
/// probability 0.7 (at least one band each).
pub fn random_cell_problem(
    rng: &mut impl Rng,
    num_users: usize,
    num_bs: usize,
    num_bands: usize,
) -> vcell::powalloc::CellPowerProblem {
    let listeners: Vec<Vec<usize>> = (0..num_bands)
        .map(|_| (0..num_bs).filter(|_| rng.random::<f64>() < 0.7).collect())
        .collect();
    let scale: Vec<f64> = (0..num_users * num_bs).map(|_| 10f64.powf(rng.random::<f64>() * 2.0)).collect();
    let channels = (0..num_users)
        .map(|i| {
            listeners
                .iter()
                .map(|l| l.iter().map(|&b| cgauss(rng, scale[i * num_bs + b].sqrt())).collect())
                .collect()
        })
        .collect();
    let allowed = (0..num_users)
        .map(|_| {
            let mut mask: Vec<bool> = (0..num_bands).map(|_| rng.random::<f64>() < 0.7).collect();
            if !mask.contains(&true) {
                mask[rng.random_range(0..num_bands)] = true;
            }
            mask
        })
        .collect();
    vcell::powalloc::CellPowerProblem {
        users: (0..num_users).collect(),
        listeners,
        channels,
        allowed,
        noise_power: 1.0,
        budget: 1.0,
        band_width: 1.0,
    }
}

/// Covariance on band `k` of everything except user `skip`, built entry by entry.
pub fn cell_band_covariance(
    problem: &vcell::powalloc::CellPowerProblem,
    power: &[Vec<f64>],
    k: usize,
    skip: Option<usize>,
) -> CMatrix {
    let mut m = identity(problem.listeners[k].len(), problem.noise_power);
    for i in 0..problem.num_users() {
        if Some(i) != skip && power[i][k] > 0.0 {
            add_outer(&mut m, power[i][k], &problem.channels[i][k]);
        }
    }
    m
}

/// `W sum_k log2 det(I + sum_i p h h^H / sigma^2)` by explicit determinants.
pub fn naive_cell_objective(problem: &vcell::powalloc::CellPowerProblem, power: &[Vec<f64>]) -> f64 {
    (0..problem.num_bands())
        .map(|k| {
            let n = problem.listeners[k].len();
            if n == 0 {
                return 0.0;
            }
            let full = cell_band_covariance(problem, power, k, None);
            problem.band_width * log2_det_ratio(&full, &identity(n, problem.noise_power))
        })
        .sum()
}

/// Effective gains `h^H S^{-1} h` of user `i` given everyone else's powers.
pub fn naive_effective_gains(problem: &vcell::powalloc::CellPowerProblem, power: &[Vec<f64>], i: usize) -> Vec<f64> {
    (0..problem.num_bands())
        .map(|k| {
            if problem.listeners[k].is_empty() {
                0.0
            } else {
                inv_quad(&cell_band_covariance(problem, power, k, Some(i)), &problem.channels[i][k])
            }
        })
        .collect()
}

/// Random realization split into cells of BSs `[0..a)`, `[a..b)`, ... with
/// users served by random BSs and random powers on random bands.
pub fn random_cells(
    rng: &mut impl Rng,
    num_users: usize,
    num_bs: usize,
    num_bands: usize,
    num_cells: usize,
) -> (NetworkRealization, vcell::clustering::VirtualCellPartition, vcell::powalloc::PowerAllocation) {
    let real = random_realization(rng, num_users, num_bs, num_bands);
    let groups: Vec<Vec<usize>> = (0..num_cells)
        .map(|c| (0..num_bs).filter(|b| b % num_cells == c).collect())
        .collect();
    let serving: Vec<usize> = (0..num_users).map(|_| rng.random_range(0..num_bs)).collect();
    let partition = vcell::clustering::VirtualCellPartition::from_groups(&groups, serving).unwrap();
    let power = (0..num_users)
        .map(|_| {
            (0..num_bands)
                .map(|_| if rng.random::<f64>() < 0.7 { rng.random::<f64>() } else { 0.0 })
                .collect()
        })
        .collect();
    (real, partition, vcell::powalloc::PowerAllocation { power })
}

/// Out-of-cell covariance of `cell` on band `k`, entry by entry.
pub fn naive_outside_covariance(
    real: &NetworkRealization,
    partition: &vcell::clustering::VirtualCellPartition,
    power: &[Vec<f64>],
    cell: usize,
    k: usize,
) -> CMatrix {
    let bss = &partition.bs_of_cell[cell];
    let mut m = identity(bss.len(), real.noise_power_per_band);
    for u in 0..real.num_users() {
        if partition.cell_of_user[u] != cell && power[u][k] > 0.0 {
            let h: Vec<Complex64> = bss.iter().map(|&b| real.channel.get(u, b, k)).collect();
            add_outer(&mut m, power[u][k], &h);
        }
    }
    m
}

pub fn cell_vector(real: &NetworkRealization, partition: &vcell::clustering::VirtualCellPartition, u: usize, cell: usize, k: usize) -> Vec<Complex64> {
    partition.bs_of_cell[cell].iter().map(|&b| real.channel.get(u, b, k)).collect()
}

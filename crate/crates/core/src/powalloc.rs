//! Sum-capacity power allocation inside a virtual cell.
//!
//! Users of a cell water-fill in turn against the noise plus the in-cell
//! interference of everyone else, seen only by the BSs listening on each band.
//! Interference from other cells is ignored at this stage.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clustering::VirtualCellPartition;
use crate::freqalloc::FrequencyPlan;
use crate::linalg::HermitianMatrix;
use crate::scenario::NetworkRealization;
use crate::{Error, Result};

/// Stopping rule for the cyclic best-response iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop once no power moved by more than `tol * budget` over a full cycle.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500,
        }
    }
}

/// Single-user water-filling result.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub powers: Vec<f64>,
    /// Water level `mu = W / lambda`; zero when nothing is poured.
    pub level: f64,
}

impl WaterFilling {
    /// Lagrange multiplier of the budget constraint, `W / mu`.
    pub fn lambda(&self, band_width: f64) -> f64 {
        if self.level > 0.0 {
            band_width / self.level
        } else {
            f64::INFINITY
        }
    }
}

/// Maximizes `sum_k W log2(1 + g_k p_k)` subject to `sum_k p_k <= budget`.
///
/// Only bands with `allowed[k]` and `g_k > 0` receive power, each getting
/// `(mu - 1/g_k)^+`. The level `mu` is found exactly by sorting the inverse
/// gains and growing the active set.
pub fn waterfill_single_user(effective_gains: &[f64], budget: f64, allowed: &[bool]) -> WaterFilling {
    assert_eq!(effective_gains.len(), allowed.len(), "one flag per band");
    let mut powers = vec![0.0; effective_gains.len()];
    let mut floors: Vec<(f64, usize)> = effective_gains
        .iter()
        .zip(allowed)
        .enumerate()
        .filter(|&(_, (&g, &ok))| ok && g > 0.0 && g.is_finite())
        .map(|(k, (&g, _))| (1.0 / g, k))
        .collect();
    if floors.is_empty() || !(budget > 0.0) {
        return WaterFilling { powers, level: 0.0 };
    }
    floors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut level = 0.0;
    let mut prefix = 0.0;
    for (j, &(floor, _)) in floors.iter().enumerate() {
        // band j joins only if the level with bands 0..j already exceeds its floor
        if j > 0 && level <= floor {
            break;
        }
        prefix += floor;
        level = (budget + prefix) / (j + 1) as f64;
    }
    for &(floor, k) in &floors {
        powers[k] = (level - floor).max(0.0);
    }
    WaterFilling { powers, level }
}

/// Power-allocation problem of one virtual cell.
#[derive(Debug, Clone)]
pub struct CellPowerProblem {
    /// Global ids of the cell's users; row `i` of every per-user table is `users[i]`.
    pub users: Vec<usize>,
    /// Global ids of the BSs listening on each band.
    pub listeners: Vec<Vec<usize>>,
    /// `h~[i][k]`: user `i`'s coefficients to `listeners[k]` on band `k`.
    pub channels: Vec<Vec<Vec<Complex64>>>,
    /// Transmit mask `k in K_u` per user.
    pub allowed: Vec<Vec<bool>>,
    pub noise_power: f64,
    pub budget: f64,
    pub band_width: f64,
}

impl CellPowerProblem {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_bands(&self) -> usize {
        self.listeners.len()
    }

    pub fn validate(&self) -> Result<()> {
        let nk = self.num_bands();
        let shapes_ok = self.channels.len() == self.num_users()
            && self.allowed.len() == self.num_users()
            && self.channels.iter().all(|row| {
                row.len() == nk && row.iter().zip(&self.listeners).all(|(h, l)| h.len() == l.len())
            })
            && self.allowed.iter().all(|a| a.len() == nk);
        if !shapes_ok {
            return Err(Error::InvalidConfig("cell problem tables have inconsistent shapes".into()));
        }
        if !(self.noise_power > 0.0) || !(self.budget >= 0.0) || !(self.band_width > 0.0) {
            return Err(Error::InvalidConfig(
                "noise power and band width must be > 0, budget >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Problem of cell `cell` under a frequency plan: BS `b` listens on `K_b`,
    /// user `u` may transmit on `K_u`.
    pub fn from_plan(
        real: &NetworkRealization,
        partition: &VirtualCellPartition,
        plan: &FrequencyPlan,
        cell: usize,
        budget: f64,
    ) -> Self {
        let num_bands = real.num_bands();
        let mut listeners = vec![Vec::new(); num_bands];
        for &b in &partition.bs_of_cell[cell] {
            for &k in &plan.bands_of_bs[b] {
                listeners[k].push(b);
            }
        }
        for l in &mut listeners {
            l.sort_unstable();
        }
        let users = partition.users_of_cell[cell].clone();
        let channels = users
            .iter()
            .map(|&u| {
                (0..num_bands)
                    .map(|k| real.channel.gather(u, k, &listeners[k]))
                    .collect()
            })
            .collect();
        let allowed = users
            .iter()
            .map(|&u| {
                let mut mask = vec![false; num_bands];
                for &k in &plan.bands_of_user[u] {
                    mask[k] = true;
                }
                mask
            })
            .collect();
        Self {
            users,
            listeners,
            channels,
            allowed,
            noise_power: real.noise_power_per_band,
            budget,
            band_width: real.band_width,
        }
    }

    /// `N~ + sum_{i != skip} p_i h_i h_i^H` on band `k`.
    fn band_covariance(&self, power: &[Vec<f64>], k: usize, skip: Option<usize>) -> HermitianMatrix {
        let mut cov = HermitianMatrix::scaled_identity(self.listeners[k].len(), self.noise_power);
        for (i, row) in power.iter().enumerate() {
            if Some(i) != skip {
                cov.add_rank_one(row[k], &self.channels[i][k]);
            }
        }
        cov
    }
}

/// Transmit powers in watts, `power[i][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub power: Vec<Vec<f64>>,
}

impl PowerAllocation {
    pub fn zeros(num_users: usize, num_bands: usize) -> Self {
        Self {
            power: vec![vec![0.0; num_bands]; num_users],
        }
    }

    pub fn total_power(&self, user: usize) -> f64 {
        self.power[user].iter().sum()
    }

    /// CSV `user,band,power` listing nonzero entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("user,band,power\n");
        for (u, row) in self.power.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    let _ = writeln!(out, "{u},{k},{p}");
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    /// Rows follow `CellPowerProblem::users`.
    pub allocation: PowerAllocation,
    pub converged: bool,
    /// Full cycles run.
    pub iterations: usize,
    /// Sum-capacity objective, bits/s.
    pub objective: f64,
    /// Objective after each cycle.
    pub objective_trace: Vec<f64>,
}

/// `sum_k W log2 det(I + sum_i p_ik h~_ik h~_ik^H / sigma^2)`, in bits/s.
pub fn cell_objective(problem: &CellPowerProblem, allocation: &PowerAllocation) -> f64 {
    let inv_noise = 1.0 / problem.noise_power;
    let mut total = 0.0;
    for k in 0..problem.num_bands() {
        let dim = problem.listeners[k].len();
        if dim == 0 {
            continue;
        }
        let mut m = HermitianMatrix::scaled_identity(dim, 1.0);
        for (i, row) in allocation.power.iter().enumerate() {
            m.add_rank_one(row[k] * inv_noise, &problem.channels[i][k]);
        }
        // I + PSD is always positive definite
        let ln_det = m.cholesky().map(|c| c.ln_det()).unwrap_or(0.0);
        total += problem.band_width * ln_det / std::f64::consts::LN_2;
    }
    total
}

/// Effective gain `h^H (S - p h h^H)^{-1} h` of a user with current power
/// `p` on a band whose full covariance `S` has inverse `s_inv`.
///
/// With `a = h^H S^{-1} h` this is `a / (1 - p a)`. When `1 - p a` is too
/// small to trust, the covariance without the user is factored directly.
fn effective_gain(s_inv: &HermitianMatrix, s: &HermitianMatrix, h: &[Complex64], p: f64) -> Result<f64> {
    let a: f64 = h
        .iter()
        .zip(s_inv.mul_vec(h))
        .map(|(x, y)| (x.conj() * y).re)
        .sum();
    let rest = 1.0 - p * a;
    if rest > 1e-6 {
        return Ok(a / rest);
    }
    let mut sigma = s.clone();
    sigma.add_rank_one(-p, h);
    Ok(sigma.cholesky()?.inverse_quadratic_form(h))
}

/// Cyclic iterative water-filling, starting from zero power and visiting
/// users in index order.
///
/// Each best response needs `h^H Sigma^{-1} h` with `Sigma` the covariance of
/// noise plus every other user. The band covariances and their inverses are
/// rebuilt at the start of each cycle and kept current with rank-one updates
/// as users move.
pub fn solve_cell(problem: &CellPowerProblem, options: &SolverOptions) -> Result<CellSolution> {
    problem.validate()?;
    let nu = problem.num_users();
    let nk = problem.num_bands();
    let mut alloc = PowerAllocation::zeros(nu, nk);
    let mut trace = Vec::new();
    if nu == 0 {
        return Ok(CellSolution {
            allocation: alloc,
            converged: true,
            iterations: 0,
            objective: 0.0,
            objective_trace: trace,
        });
    }

    let threshold = options.tol * problem.budget;
    let mut converged = false;
    let mut iterations = 0;
    let mut gains = vec![0.0; nk];
    while iterations < options.max_iters {
        iterations += 1;
        let mut cov: Vec<HermitianMatrix> = (0..nk)
            .map(|k| problem.band_covariance(&alloc.power, k, None))
            .collect();
        let mut cov_inv = cov
            .iter()
            .map(|c| c.cholesky().map(|f| f.inverse()))
            .collect::<Result<Vec<_>>>()?;
        let mut max_change = 0.0f64;
        for i in 0..nu {
            for k in 0..nk {
                gains[k] = if problem.allowed[i][k] && !problem.listeners[k].is_empty() {
                    effective_gain(&cov_inv[k], &cov[k], &problem.channels[i][k], alloc.power[i][k])?
                } else {
                    0.0
                };
            }
            let fill = waterfill_single_user(&gains, problem.budget, &problem.allowed[i]);
            for k in 0..nk {
                let delta = fill.powers[k] - alloc.power[i][k];
                if delta == 0.0 {
                    continue;
                }
                max_change = max_change.max(delta.abs());
                if problem.listeners[k].is_empty() {
                    continue;
                }
                let h = &problem.channels[i][k];
                cov[k].add_rank_one(delta, h);
                if !cov_inv[k].inverse_rank_one_update(delta, h) {
                    cov_inv[k] = cov[k].cholesky()?.inverse();
                }
            }
            alloc.power[i] = fill.powers;
        }
        trace.push(cell_objective(problem, &alloc));
        if max_change < threshold || max_change == 0.0 {
            converged = true;
            break;
        }
    }

    Ok(CellSolution {
        objective: trace.last().copied().unwrap_or(0.0),
        allocation: alloc,
        converged,
        iterations,
        objective_trace: trace,
    })
}

/// Solves every cell and scatters the powers into a global `[user][band]` matrix.
pub fn allocate_powers(
    real: &NetworkRealization,
    partition: &VirtualCellPartition,
    plan: &FrequencyPlan,
    budget: f64,
    options: &SolverOptions,
) -> Result<(PowerAllocation, Vec<CellSolution>)> {
    let mut global = PowerAllocation::zeros(real.num_users(), real.num_bands());
    let mut solutions = Vec::with_capacity(partition.num_cells());
    for cell in 0..partition.num_cells() {
        let problem = CellPowerProblem::from_plan(real, partition, plan, cell, budget);
        let sol = solve_cell(&problem, options)?;
        for (row, &u) in sol.allocation.power.iter().zip(&problem.users) {
            global.power[u].clone_from(row);
        }
        solutions.push(sol);
    }
    Ok((global, solutions))
}

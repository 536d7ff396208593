//! Numerical rank, kernels, finite-difference row checks and the rigidity
//! decision.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contexts::{assemble, bar_functional, bar_margin, bar_row, random_placement, ContextSpec, Placement};
use crate::error::{Error, Result};
use crate::graph::{BiColouredGraph, Colour};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_TRIALS: usize = 5;
pub const FD_STEP: f64 = 1e-6;

const RESAMPLES: u64 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub rank: usize,
    /// Descending singular values of the row-normalised matrix.
    pub singular_values: Vec<f64>,
    pub tol: f64,
}

impl RankResult {
    /// `sigma_rank / sigma_1`, the relative size of the smallest retained
    /// singular value.
    pub fn gap(&self) -> f64 {
        match (self.rank, self.singular_values.first()) {
            (0, _) | (_, None) => 0.0,
            (r, Some(&top)) => self.singular_values[r - 1] / top,
        }
    }

    /// `sigma_{rank+1} / sigma_1`, the relative size of the largest discarded
    /// singular value.
    pub fn tail(&self) -> f64 {
        match (self.singular_values.get(self.rank), self.singular_values.first()) {
            (Some(&next), Some(&top)) if top > 0.0 => next / top,
            _ => 0.0,
        }
    }
}

fn normalised_rows(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(out)
}

/// Pads with zero rows so the SVD yields a full right factor.
fn padded_svd(m: &DMatrix<f64>, vectors: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
    let cols = m.ncols();
    if cols == 0 {
        return (Vec::new(), vectors.then(|| DMatrix::zeros(0, 0)));
    }
    let square = if m.nrows() < cols { m.clone().resize_vertically(cols, 0.0) } else { m.clone() };
    let svd = square.svd(false, vectors);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = svd.v_t.map(|vt| DMatrix::from_fn(cols, cols, |r, c| vt[(order[c], r)]));
    let shown = values.into_iter().take(m.nrows().min(cols)).collect();
    (shown, v)
}

fn count_above(values: &[f64], tol: f64) -> usize {
    match values.first() {
        Some(&top) if top > 0.0 => values.iter().filter(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

/// Singular-value thresholded rank after scaling each row to unit length.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> Result<RankResult> {
    let (singular_values, _) = padded_svd(&normalised_rows(m)?, false);
    let rank = count_above(&singular_values, tol);
    Ok(RankResult { rank, singular_values, tol })
}

/// Orthonormal columns spanning the numerical kernel.
pub fn nullspace_basis(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let (singular_values, v) = padded_svd(&normalised_rows(m)?, true);
    let rank = count_above(&singular_values, tol);
    let v = v.expect("right singular vectors requested");
    Ok(v.columns(rank, m.ncols() - rank).into_owned())
}

/// Largest entrywise deviation between the analytic row of a `colour` bar from
/// `pi` to `pj` and central differences of its functional, relative to the
/// row's largest entry.
pub fn fd_check(ctx: &ContextSpec, colour: Colour, pi: &[f64], pj: &[f64], h: f64) -> Result<f64> {
    let margin = bar_margin(ctx, colour, pi, pj);
    if !(margin > 10.0 * h) {
        return Err(Error::Degenerate(format!("bar margin {margin:e} does not exceed 10 h = {:e}", 10.0 * h)));
    }
    let (at_i, at_j) = bar_row(ctx, colour, pi, pj)?;
    let analytic: Vec<f64> = at_i.into_iter().chain(at_j).collect();
    let mut x: Vec<f64> = pi.iter().chain(pj).copied().collect();
    let d = pi.len();
    let mut numeric = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let base = x[k];
        x[k] = base + h;
        let plus = bar_functional(ctx, colour, &x[..d], &x[d..]);
        x[k] = base - h;
        let minus = bar_functional(ctx, colour, &x[..d], &x[d..]);
        x[k] = base;
        numeric.push((plus - minus) / (2.0 * h));
    }
    let scale = analytic.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(f64::MIN_POSITIVE);
    let worst = analytic.iter().zip(&numeric).fold(0.0f64, |m, (a, f)| m.max((a - f).abs()));
    Ok(worst / scale)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RigidityStatus {
    MinimallyRigid,
    RigidRedundant,
    Flexible,
}

impl fmt::Display for RigidityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RigidityStatus::MinimallyRigid => "MINIMALLY_RIGID",
            RigidityStatus::RigidRedundant => "RIGID_REDUNDANT",
            RigidityStatus::Flexible => "FLEXIBLE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityVerdict {
    pub status: RigidityStatus,
    pub rank: usize,
    pub required_rank: usize,
    pub edge_count: usize,
    pub maxwell_count: i64,
    pub trials: usize,
    /// Rank of every trial, in order.
    pub trial_ranks: Vec<usize>,
    /// The trial whose rank was kept.
    pub best: RankResult,
}

impl RigidityVerdict {
    pub fn gap(&self) -> f64 {
        self.best.gap()
    }
}

/// Seed of trial `t` under master seed `seed`.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ (t + 1)
}

/// A placement of `g` whose rows are all well defined.
pub fn generic_placement(ctx: &ContextSpec, g: &BiColouredGraph, seed: u64) -> Result<Placement> {
    for r in 0..RESAMPLES {
        let p = random_placement(ctx, g.n(), trial_seed(seed, 1000 + r))?;
        match assemble(ctx, g, &p) {
            Ok(_) => return Ok(p),
            Err(Error::Row { .. } | Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SamplingFailed(RESAMPLES as usize))
}

/// Maximum numerical rank over `trials` random placements, compared with the
/// context's required rank and Maxwell count.
pub fn decide_rigidity(
    ctx: &ContextSpec,
    g: &BiColouredGraph,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<RigidityVerdict> {
    ctx.validate()?;
    if let Some(e) = g.edges().find(|e| e.is_loop()) {
        return Err(Error::LoopNotAllowed(format!("loop {e} in a framework")));
    }
    let trials = trials.max(1);
    let mut best: Option<RankResult> = None;
    let mut trial_ranks = Vec::with_capacity(trials);
    for t in 0..trials {
        let p = generic_placement(ctx, g, trial_seed(seed, t as u64))?;
        let result = numerical_rank(&assemble(ctx, g, &p)?.matrix, tol)?;
        trial_ranks.push(result.rank);
        let better = best.as_ref().is_none_or(|b| (result.rank, result.gap()) > (b.rank, b.gap()));
        if better {
            best = Some(result);
        }
    }
    let best = best.expect("at least one trial");
    let required_rank = ctx.required_rank(g.n());
    let maxwell_count = ctx.maxwell_count(g.n());
    let edge_count = g.edge_count();
    let status = if best.rank < required_rank {
        RigidityStatus::Flexible
    } else if edge_count as i64 == maxwell_count {
        RigidityStatus::MinimallyRigid
    } else {
        RigidityStatus::RigidRedundant
    };
    Ok(RigidityVerdict { status, rank: best.rank, required_rank, edge_count, maxwell_count, trials, trial_ranks, best })
}

/// Whether `g` has exactly the Maxwell edge count of `ctx`.
pub fn maxwell_audit(ctx: &ContextSpec, g: &BiColouredGraph) -> bool {
    g.edge_count() as i64 == ctx.maxwell_count(g.n())
}

//! Sweeps over harvesting rates: per-`beta` curves, the coexistence switch
//! point and `(alpha, beta)` heatmaps. Every cell is an independent run from
//! the same initial state, so results do not depend on scheduling.

use rayon::prelude::*;

use crate::analysis::{simulate_and_classify, Outcome, OutcomeRecord};
use crate::dynamics::{CompetitionModel, HarvestRates, PopulationState, SimulationConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_HEATMAP_POINTS: usize = 41;
pub const DEFAULT_CURVE_POINTS: usize = 101;
pub const DEFAULT_SWITCH_TOL: f64 = 1e-3;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * T::from_usize_lossy(i) / last
                    }
                })
                .collect()
        }
    }
}

/// Settings shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<T> {
    pub sim: SimulationConfig<T>,
    pub initial: PopulationState<T>,
    /// Worker count; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl<T: Scalar> SweepConfig<T> {
    pub fn new(sim: SimulationConfig<T>, initial: PopulationState<T>) -> Self {
        Self {
            sim,
            initial,
            jobs: None,
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = Some(jobs);
        self
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        match self.jobs {
            None => Ok(f()),
            Some(0) => Err(Error::InvalidParameter("jobs must be at least 1".into())),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// One simulation and classification at `(alpha, beta)`.
pub fn run_cell<T: Scalar>(
    model: &CompetitionModel<T>,
    alpha: T,
    beta: T,
    cfg: &SweepConfig<T>,
) -> Result<OutcomeRecord<T>> {
    let rates = HarvestRates::new(alpha, beta)?;
    Ok(simulate_and_classify(model, cfg.initial.clone(), rates, &cfg.sim)?.record)
}

/// One record per `alpha`; a failing cell keeps its error and the rest go on.
pub fn sweep_alpha<T: Scalar>(
    model: &CompetitionModel<T>,
    beta: T,
    alphas: &[T],
    cfg: &SweepConfig<T>,
) -> Result<Vec<Result<OutcomeRecord<T>>>> {
    cfg.install(|| {
        alphas
            .par_iter()
            .map(|&alpha| run_cell(model, alpha, beta, cfg))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid<T> {
    pub alphas: Vec<T>,
    pub betas: Vec<T>,
    /// `records[i][j]` belongs to `(alphas[j], betas[i])`.
    pub records: Vec<Vec<Result<OutcomeRecord<T>>>>,
}

impl<T: Scalar> SweepGrid<T> {
    pub fn outcome(&self, i: usize, j: usize) -> Option<Outcome> {
        self.records[i][j].as_ref().ok().map(|r| r.outcome)
    }

    /// Cells in row-major order (`beta` outer, `alpha` inner).
    pub fn cells(&self) -> impl Iterator<Item = (T, T, &Result<OutcomeRecord<T>>)> {
        self.records.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, rec)| (self.alphas[j], self.betas[i], rec))
        })
    }

    pub fn failures(&self) -> usize {
        self.cells().filter(|(_, _, r)| r.is_err()).count()
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.cells()
            .filter(|(_, _, r)| matches!(r, Ok(rec) if rec.outcome == outcome))
            .count()
    }

    /// Number of connected components of cells with `outcome`, counting
    /// diagonal neighbours as connected (a thin band along a diagonal is
    /// sampled as a staircase).
    pub fn components(&self, outcome: Outcome) -> usize {
        let (rows, cols) = (self.betas.len(), self.alphas.len());
        let mut seen = vec![vec![false; cols]; rows];
        let mut count = 0;
        for i in 0..rows {
            for j in 0..cols {
                if seen[i][j] || self.outcome(i, j) != Some(outcome) {
                    continue;
                }
                count += 1;
                let mut stack = vec![(i, j)];
                seen[i][j] = true;
                while let Some((a, b)) = stack.pop() {
                    for (dx, dy) in [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                        let x = a.wrapping_add_signed(dx);
                        let y = b.wrapping_add_signed(dy);
                        if x < rows && y < cols && !seen[x][y] && self.outcome(x, y) == Some(outcome) {
                            seen[x][y] = true;
                            stack.push((x, y));
                        }
                    }
                }
            }
        }
        count
    }

    /// Largest finite yield over all successful cells.
    pub fn max_yield(&self) -> Option<T> {
        self.cells()
            .filter_map(|(_, _, r)| r.as_ref().ok().map(|rec| rec.total_yield()))
            .fold(None, |m, y| Some(m.map_or(y, |m: T| m.max(y))))
    }
}

pub fn sweep_grid<T: Scalar>(
    model: &CompetitionModel<T>,
    alphas: &[T],
    betas: &[T],
    cfg: &SweepConfig<T>,
) -> Result<SweepGrid<T>> {
    let cells: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|i| (0..alphas.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<Result<OutcomeRecord<T>>> = cfg.install(|| {
        cells
            .par_iter()
            .map(|&(i, j)| run_cell(model, alphas[j], betas[i], cfg))
            .collect()
    })?;
    let mut it = flat.into_iter();
    let records = (0..betas.len())
        .map(|_| it.by_ref().take(alphas.len()).collect())
        .collect();
    Ok(SweepGrid {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        records,
    })
}

/// Rank along increasing `alpha`; `None` for outcomes outside the sequence
/// `OnlyU -> Coexistence -> OnlyV`.
fn alpha_rank(o: Outcome) -> Option<u8> {
    match o {
        Outcome::OnlyU => Some(0),
        Outcome::Coexistence => Some(1),
        Outcome::OnlyV => Some(2),
        Outcome::Extinction | Outcome::Unresolved => None,
    }
}

/// Outcomes along increasing `alpha` never step back in the order
/// `OnlyU -> Coexistence -> OnlyV`. Unresolved and failed cells are ignored.
pub fn is_monotone_in_alpha<T>(records: &[Result<OutcomeRecord<T>>]) -> bool {
    let ranks: Vec<u8> = records
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .filter_map(|r| alpha_rank(r.outcome))
        .collect();
    ranks.windows(2).all(|w| w[0] <= w[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchPoint<T> {
    pub beta: T,
    /// Midpoint of the final bracket.
    pub alpha_double_star: T,
    pub bracket_width: T,
    /// Outcome on the low-`alpha` side of the bracket.
    pub below: Outcome,
    /// Outcome on the high-`alpha` side.
    pub above: Outcome,
}

/// Bisection for the `alpha` at which the outcome stops being what it is at
/// `alpha = beta + tol`, searched up to `alpha = 1 - tol`.
pub fn find_switch<T: Scalar>(
    model: &CompetitionModel<T>,
    beta: T,
    cfg: &SweepConfig<T>,
    tol: T,
) -> Result<SwitchPoint<T>> {
    find_switch_in(model, beta, beta + tol, T::one() - tol, cfg, tol)
}

/// [`find_switch`] on an explicit bracket `[lo, hi]`.
pub fn find_switch_in<T: Scalar>(
    model: &CompetitionModel<T>,
    beta: T,
    mut lo: T,
    mut hi: T,
    cfg: &SweepConfig<T>,
    tol: T,
) -> Result<SwitchPoint<T>> {
    if !(tol > T::zero()) || !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "bad bracket [{lo}, {hi}] or tolerance {tol}"
        )));
    }
    let outcome = |alpha: T| run_cell(model, alpha, beta, cfg).map(|r| r.outcome);
    let below = outcome(lo)?;
    let mut above = outcome(hi)?;
    if below == above {
        return Err(Error::NoSwitch {
            beta: beta.as_f64(),
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let two = T::lit(2.0);
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        let o = outcome(mid)?;
        if o == below {
            lo = mid;
        } else {
            hi = mid;
            above = o;
        }
    }
    Ok(SwitchPoint {
        beta,
        alpha_double_star: (lo + hi) / two,
        bracket_width: hi - lo,
        below,
        above,
    })
}

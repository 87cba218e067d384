//! Power allocation between the superposed users.
//!
//! The free distance of the product code is a concave-ish function of the
//! power split: pushing power to the weak user strengthens parallel events
//! but weakens diverge-and-merge events, and vice versa. The optimum
//! equalizes the two families. For the 4-state 8-PSK pair this has a closed
//! form; a grid search over the ratio serves as an independent check and
//! covers other codes via the trellis-search evaluator.

use std::f64::consts::SQRT_2;

use crate::constellation::Constellation;
use crate::error::{invalid_input, Result};
use crate::freedist::{free_distance_search, free_distance_sq};
use crate::product::{tensor_product, PowerPair};
use crate::trellis::Trellis;

/// An allocated power split and the free distance it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSolution {
    pub p1: f64,
    pub p2: f64,
    /// The split ratio `p1/p2`.
    pub ratio: f64,
    /// Squared free distance of the product code at this split.
    pub free_sq: f64,
}

/// The ratio `p1/p2` that maximizes the free distance, independent of the
/// total budget: `((2*sqrt(2) - sqrt(2 + sqrt(2)))/2)^2`.
///
/// It is the root of `4t^2 - 8*sqrt(2)*t + 6 - sqrt(2) = 0` (in `t =
/// sqrt(p1/p2)`) that keeps the weak user below the strong one, i.e. the
/// split where the parallel distance `4*p1` meets the diverge-and-merge
/// distance.
pub fn optimal_power_ratio() -> f64 {
    let t = (2.0 * SQRT_2 - (2.0 + SQRT_2).sqrt()) / 2.0;
    t * t
}

/// Splits `budget` optimally between the users (closed form).
pub fn optimal_powers(budget: f64) -> Result<PowerSolution> {
    let ratio = optimal_power_ratio();
    let pair = PowerPair::from_ratio(budget, ratio)?;
    let report = free_distance_sq(&pair);
    Ok(PowerSolution { p1: pair.p1(), p2: pair.p2(), ratio, free_sq: report.free_sq })
}

/// How the grid search measures free distance at each candidate split.
pub enum DistanceEval<'a> {
    /// The closed-form expressions for the 4-state 8-PSK pair.
    ClosedForm,
    /// Direct search on the product trellis built from the given codes.
    Search {
        trellis1: &'a Trellis,
        constellation1: &'a Constellation,
        trellis2: &'a Trellis,
        constellation2: &'a Constellation,
        max_len: usize,
    },
}

impl DistanceEval<'_> {
    fn free_sq(&self, pair: &PowerPair) -> Result<f64> {
        match self {
            DistanceEval::ClosedForm => Ok(free_distance_sq(pair).free_sq),
            DistanceEval::Search {
                trellis1,
                constellation1,
                trellis2,
                constellation2,
                max_len,
            } => {
                let pt =
                    tensor_product(trellis1, constellation1, trellis2, constellation2, pair)?;
                Ok(free_distance_search(&pt, *max_len)?.free_sq)
            }
        }
    }
}

/// Splits `budget` by maximizing free distance over the ratio grid
/// `step, 2*step, ...` below 1.
///
/// The whole budget is always spent. Ties break toward the smaller ratio
/// (only strict improvements move the argmax).
pub fn optimal_powers_grid(
    budget: f64,
    step: f64,
    eval: &DistanceEval<'_>,
) -> Result<PowerSolution> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(invalid_input!("power budget must be positive, got {budget}"));
    }
    if !(step.is_finite() && 0.0 < step && step < 1.0) {
        return Err(invalid_input!("ratio step must lie in (0, 1), got {step}"));
    }
    let mut best: Option<PowerSolution> = None;
    let mut k = 1usize;
    loop {
        let ratio = k as f64 * step;
        if ratio >= 1.0 {
            break;
        }
        let pair = PowerPair::from_ratio(budget, ratio)?;
        let free_sq = eval.free_sq(&pair)?;
        if best.is_none_or(|b| free_sq > b.free_sq) {
            best = Some(PowerSolution { p1: pair.p1(), p2: pair.p2(), ratio, free_sq });
        }
        k += 1;
    }
    best.ok_or_else(|| invalid_input!("ratio grid with step {step} is empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freedist::diverge_merge_distance_sq;

    #[test]
    fn optimal_ratio_solves_the_equalization_quadratic() {
        let t = optimal_power_ratio().sqrt();
        let residual = 4.0 * t * t - 8.0 * SQRT_2 * t + 6.0 - SQRT_2;
        assert!(residual.abs() < 1e-12, "residual {residual}");
        // Frozen numeric value.
        assert!((optimal_power_ratio() - 0.2404274607).abs() < 1e-9);
    }

    #[test]
    fn optimal_powers_spend_the_budget_and_equalize_families() {
        let sol = optimal_powers(1.0).unwrap();
        assert_eq!(sol.p1 + sol.p2, 1.0);
        assert!((sol.p1 - 0.193826).abs() < 1e-5);
        assert!((sol.p2 - 0.806174).abs() < 1e-5);
        // At the optimum both event families sit at 4*p1.
        assert!((sol.free_sq - 4.0 * sol.p1).abs() < 1e-9);
        let pair = PowerPair::new(sol.p1, sol.p2).unwrap();
        assert!((diverge_merge_distance_sq(&pair) - 4.0 * sol.p1).abs() < 1e-9);
        // The mid-step weak-user flip is inactive at the optimum.
        let slack = 4.0 * sol.p1 + 2.0 * (sol.p1 * sol.p2).sqrt() * (SQRT_2 - 2.0);
        assert!(slack > 0.0);
    }

    #[test]
    fn optimal_ratio_is_budget_invariant() {
        let a = optimal_powers(1.0).unwrap();
        let b = optimal_powers(7.0).unwrap();
        assert_eq!(a.ratio, b.ratio);
        assert!((b.p1 - 7.0 * a.p1).abs() < 1e-12);
        assert!((b.free_sq - 7.0 * a.free_sq).abs() < 1e-9);
    }

    #[test]
    fn grid_search_brackets_the_closed_form_optimum() {
        let closed = optimal_powers(1.0).unwrap();
        let grid = optimal_powers_grid(1.0, 1e-3, &DistanceEval::ClosedForm).unwrap();
        assert!((grid.ratio - closed.ratio).abs() <= 1e-3 + 1e-12);
        assert!(grid.free_sq <= closed.free_sq + 1e-12);
        assert!((grid.p1 + grid.p2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_search_with_trellis_evaluator_lands_in_the_window() {
        let t = Trellis::ungerboeck_4state();
        let c = Constellation::psk8(0.0);
        let eval = DistanceEval::Search {
            trellis1: &t,
            constellation1: &c,
            trellis2: &t,
            constellation2: &c,
            max_len: 12,
        };
        let sol = optimal_powers_grid(1.0, 0.01, &eval).unwrap();
        // The measured free distance peaks where the weak-user parallel
        // family meets the five-step mutual-cancellation family — below the
        // closed-form optimum of ~0.24, which overestimates mid-ratio
        // distances.
        assert!(
            (sol.ratio - 0.19).abs() < 1e-12,
            "searched optimum ratio {} moved off the verified grid point",
            sol.ratio
        );
        assert!((sol.free_sq - 0.638655462).abs() < 1e-9);
        assert!((sol.free_sq - 4.0 * sol.p1).abs() < 1e-9, "parallel family sets the peak");
    }

    #[test]
    fn free_distance_is_unimodal_on_the_grid() {
        let mut values = Vec::new();
        let mut k = 1;
        while k < 100 {
            let pair = PowerPair::from_ratio(1.0, k as f64 * 0.01).unwrap();
            values.push(free_distance_sq(&pair).free_sq);
            k += 1;
        }
        let peak = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        for w in values[..=peak].windows(2) {
            assert!(w[0] <= w[1] + 1e-12, "not rising before the peak");
        }
        for w in values[peak..].windows(2) {
            assert!(w[0] + 1e-12 >= w[1], "not falling after the peak");
        }
    }

    #[test]
    fn rejects_bad_budget_and_step() {
        assert!(optimal_powers(0.0).is_err());
        assert!(optimal_powers(-1.0).is_err());
        assert!(optimal_powers_grid(1.0, 0.0, &DistanceEval::ClosedForm).is_err());
        assert!(optimal_powers_grid(1.0, 1.0, &DistanceEval::ClosedForm).is_err());
        assert!(optimal_powers_grid(0.0, 0.1, &DistanceEval::ClosedForm).is_err());
    }
}

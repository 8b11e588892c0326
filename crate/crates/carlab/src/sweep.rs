//! Convergence sweeps: one table of `(parameter, error, ratio)` per target.

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::report::{Report, SuiteReport};
use crate::suites;

/// Finest grid the sparse Fock kernels accept.
const MAX_GRID: usize = 128;
const MAX_PICARD_LEVELS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepTarget {
    /// Generator identity with the exact difference pair, in h.
    GeneratorH,
    /// Generator identity with forward differences on both sides, in h.
    SameSideH,
    /// Single-particle integral equation, in h.
    IntegralEquationH,
    /// Kraus Riemann sums, in the number of windows.
    KrausN,
    /// Small-time link to the boundary perturbation, in t.
    SmallTimeT,
    /// Picard gap to the flow of shifts, in the step count.
    PicardN,
}

impl SweepTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GeneratorH => "generator_h",
            Self::SameSideH => "same_side_h",
            Self::IntegralEquationH => "integral_equation_h",
            Self::KrausN => "kraus_n",
            Self::SmallTimeT => "small_time_t",
            Self::PicardN => "picard_n",
        }
    }
}

fn check_grid(base: usize, levels: usize) -> Result<(), HarnessError> {
    match base.checked_shl(levels as u32 - 1) {
        Some(top) if levels <= 16 && top <= MAX_GRID => Ok(()),
        _ => Err(HarnessError::Usage(format!("{levels} levels from {base} points exceed the {MAX_GRID}-point limit"))),
    }
}

pub fn run_sweep(target: SweepTarget, levels: usize, config: &ExperimentConfig) -> Result<Report, HarnessError> {
    if levels < 3 {
        return Err(HarnessError::Usage(format!("a sweep needs at least 3 levels, got {levels}")));
    }
    let table = match target {
        SweepTarget::GeneratorH => {
            check_grid(config.sweep_base_points, levels)?;
            suites::generator_sweep(config, levels)
        }
        SweepTarget::SameSideH => {
            check_grid(config.sweep_base_points, levels)?;
            suites::same_side_sweep(config, levels)
        }
        SweepTarget::IntegralEquationH => {
            check_grid(config.grid_points, levels)?;
            suites::integral_sweep(config, levels)
        }
        SweepTarget::SmallTimeT => {
            check_grid(config.sweep_base_points, levels)?;
            suites::small_time_sweep(config, levels)
        }
        SweepTarget::KrausN => {
            let first = config.kraus_n[0];
            let ns: Vec<usize> = (0..levels).map(|k| first << k).collect();
            if ns.iter().any(|&n| 64 % n != 0) {
                return Err(HarnessError::Usage(format!(
                    "{levels} doublings of n = {first} do not divide the 64-cell bin"
                )));
            }
            suites::kraus_sweep(config, &ns)
        }
        SweepTarget::PicardN => {
            if levels > MAX_PICARD_LEVELS {
                return Err(HarnessError::Usage(format!("at most {MAX_PICARD_LEVELS} Picard levels")));
            }
            suites::picard_sweep(config, levels)
        }
    };
    let suite = SuiteReport::new(target.as_str(), Vec::new(), vec![table]);
    Ok(Report::new("sweep", target.as_str(), config.seed, &config.preset, vec![suite]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_limits() {
        let c = ExperimentConfig::default();
        assert!(matches!(run_sweep(SweepTarget::KrausN, 2, &c), Err(HarnessError::Usage(_))));
        assert!(matches!(run_sweep(SweepTarget::GeneratorH, 5, &c), Err(HarnessError::Usage(_))));
        assert!(matches!(run_sweep(SweepTarget::KrausN, 6, &c), Err(HarnessError::Usage(_))));
        assert!(check_grid(16, 4).is_ok());
        assert!(check_grid(16, 64).is_err());
    }

    #[test]
    fn picard_sweep_settles() {
        let c = ExperimentConfig::default();
        let r = run_sweep(SweepTarget::PicardN, 5, &c).unwrap();
        assert_eq!(r.suites[0].tables[0].rows.len(), 5);
        assert!(r.status.is_pass(), "{:?}", r.suites[0].tables[0]);
    }
}

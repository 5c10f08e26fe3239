use std::fmt;

use super::config::ExperimentConfig;
use super::run::run_experiment;
use crate::error::{Error, Result};

const PARAMETERS: [&str; 3] = ["alpha", "delta", "beta"];

#[derive(Clone, Debug, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    /// Time-averaged posterior std of `(α, δ, β)` without oversampling.
    pub std_single: [f64; 3],
    /// Same with oversampling factor 3.
    pub std_oversampled: [f64; 3],
    pub wall_time_single: f64,
    pub wall_time_oversampled: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OversamplingComparison {
    /// Averaging window.
    pub window: (f64, f64),
    pub seeds: Vec<SeedComparison>,
    /// Inputs dropped as duplicates.
    pub warnings: Vec<String>,
}

impl OversamplingComparison {
    /// Fraction of (seed, parameter) pairs with oversampled std ≤ single std.
    pub fn pair_fraction(&self) -> f64 {
        let wins: usize = self.seeds.iter().map(wins).sum();
        wins as f64 / (3 * self.seeds.len()) as f64
    }

    /// Per parameter, the fraction of seeds where oversampling did not widen the posterior.
    pub fn parameter_fractions(&self) -> [f64; 3] {
        std::array::from_fn(|k| {
            let wins = self
                .seeds
                .iter()
                .filter(|s| s.std_oversampled[k] <= s.std_single[k])
                .count();
            wins as f64 / self.seeds.len() as f64
        })
    }

    /// Strict majority of pairs favour oversampling.
    pub fn majority(&self) -> bool {
        self.pair_fraction() > 0.5
    }
}

fn wins(s: &SeedComparison) -> usize {
    (0..3).filter(|&k| s.std_oversampled[k] <= s.std_single[k]).count()
}

impl fmt::Display for OversamplingComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(
            f,
            "posterior std averaged over t in [{}, {}], L=1 vs L=3",
            self.window.0, self.window.1
        )?;
        writeln!(f, "{:>6} {:>9} {:>14} {:>14} {:>6}", "seed", "parameter", "std L=1", "std L=3", "L3<=L1")?;
        for s in &self.seeds {
            for (k, name) in PARAMETERS.iter().enumerate() {
                writeln!(
                    f,
                    "{:>6} {:>9} {:>14.6e} {:>14.6e} {:>6}",
                    s.seed,
                    name,
                    s.std_single[k],
                    s.std_oversampled[k],
                    s.std_oversampled[k] <= s.std_single[k]
                )?;
            }
            writeln!(
                f,
                "{:>6} wall time L=1 {:.2} s, L=3 {:.2} s",
                s.seed, s.wall_time_single, s.wall_time_oversampled
            )?;
        }
        let fr = self.parameter_fractions();
        for (name, v) in PARAMETERS.iter().zip(fr) {
            writeln!(f, "seed fraction with L3<=L1 for {name}: {v:.2}")?;
        }
        write!(
            f,
            "pair fraction {:.3} over {} runs: {}",
            self.pair_fraction(),
            2 * self.seeds.len(),
            if self.majority() {
                "oversampling reduces posterior std in the majority"
            } else {
                "no majority for reduced posterior std"
            }
        )
    }
}

/// Runs every seed with `L = 1` and `L = 3` and compares the time-averaged
/// parameter posterior std over the second half of the run.
///
/// Output directories are ignored; nothing is written.
pub fn compare_oversampling(config: &ExperimentConfig, seeds: &[u64]) -> Result<OversamplingComparison> {
    let mut unique = Vec::with_capacity(seeds.len());
    let mut warnings = Vec::new();
    for &s in seeds {
        if unique.contains(&s) {
            warnings.push(format!("duplicate seed {s} ignored"));
        } else {
            unique.push(s);
        }
    }
    if unique.len() < 2 {
        return Err(Error::InvalidArgument("≥ 2 seeds required".into()));
    }
    config.validate()?;
    let window = (config.t_start + 0.5 * (config.t_end - config.t_start), config.t_end);

    let mut results = Vec::with_capacity(unique.len());
    for seed in unique {
        let run = |l: usize| {
            let c = ExperimentConfig {
                seed,
                oversampling_factor: l,
                output_dir: None,
                ..config.clone()
            };
            run_experiment(&c)
        };
        let single = run(1)?;
        let over = run(3)?;
        results.push(SeedComparison {
            seed,
            std_single: single.parameter_stds(window.0, window.1),
            std_oversampled: over.parameter_stds(window.0, window.1),
            wall_time_single: single.total_wall_time,
            wall_time_oversampled: over.total_wall_time,
        });
    }
    Ok(OversamplingComparison {
        window,
        seeds: results,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_seed_is_rejected() {
        let err = compare_oversampling(&ExperimentConfig::default(), &[4, 4]).unwrap_err();
        assert!(err.to_string().contains("≥ 2 seeds required"));
    }

    #[test]
    fn fractions_count_ties_as_wins() {
        let c = OversamplingComparison {
            window: (50.0, 100.0),
            seeds: vec![
                SeedComparison {
                    seed: 1,
                    std_single: [1.0, 1.0, 1.0],
                    std_oversampled: [0.5, 1.0, 2.0],
                    wall_time_single: 0.0,
                    wall_time_oversampled: 0.0,
                },
                SeedComparison {
                    seed: 2,
                    std_single: [1.0, 1.0, 1.0],
                    std_oversampled: [2.0, 2.0, 0.1],
                    wall_time_single: 0.0,
                    wall_time_oversampled: 0.0,
                },
            ],
            warnings: vec![],
        };
        assert_eq!(c.pair_fraction(), 0.5);
        assert_eq!(c.parameter_fractions(), [0.5, 0.5, 0.5]);
        assert!(!c.majority());
    }

    #[test]
    fn duplicates_are_dropped_with_warning() {
        let config = ExperimentConfig {
            t_end: 1.0,
            map_order: 1,
            spread: 0.5,
            ..ExperimentConfig::default()
        };
        let c = compare_oversampling(&config, &[1, 2, 1]).unwrap();
        assert_eq!(c.seeds.len(), 2);
        assert_eq!(c.warnings.len(), 1);
        assert_eq!(c.window, (0.5, 1.0));
    }
}

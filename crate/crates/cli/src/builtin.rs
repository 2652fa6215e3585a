//! Scenarios shipped with the tool.

use mclab_core::merging::Metric;

use crate::scenario::{Analysis, Generator, Horizon, Mode, OutputSpec, PairRule, ScalingCheck, Scenario, ScenarioError};

pub const BUILTIN_NAMES: &[&str] = &[
    "thm43-scaling",
    "mirrored-pair",
    "pb0-probe",
    "wpb1-probe",
    "thw1-bounds",
    "wpb2-probe",
    "stick-stability",
    "spectral-comparison",
];

fn merging(epsilon: f64, metric: Metric, horizon: Horizon) -> Analysis {
    Analysis::Merging { epsilon, metric, horizon, stop_at_epsilon: true, keep_trajectory: false }
}

fn base(name: &str, description: &str, mode: Mode, generator: Generator, sizes: Vec<usize>) -> Scenario {
    Scenario {
        name: name.to_string(),
        description: description.to_string(),
        mode,
        generator,
        sizes,
        trials: 1,
        seed: 0,
        analyses: Vec::new(),
        scaling_checks: Vec::new(),
        output: OutputSpec::default(),
        budget_nodes: None,
    }
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let s = match name {
        "thm43-scaling" => Scenario {
            trials: 50,
            seed: 43,
            analyses: vec![merging(0.25, Metric::Relsup, Horizon { base: 1000, per_n: 100, per_n2: 0 })],
            scaling_checks: vec![ScalingCheck {
                analysis: 0,
                quantity: "merging_time".into(),
                min_ratio: Some(1.4),
                max_ratio: Some(2.8),
            }],
            ..base(
                name,
                "Relative-sup merging time at 1/4 of i.i.d. constant-rate birth-death chains with drift ratio in [1.2, 2] grows linearly in N.",
                Mode::Assert,
                Generator::RandomConstantRate { a: 1.2, a_max: 2.0 },
                vec![16, 32, 64],
            )
        },
        "mirrored-pair" => Scenario {
            seed: 41,
            analyses: vec![
                merging(0.25, Metric::Tv, Horizon { base: 1000, per_n: 0, per_n2: 4 }),
                merging(0.25, Metric::Relsup, Horizon { base: 1000, per_n: 0, per_n2: 4 }),
            ],
            scaling_checks: vec![ScalingCheck {
                analysis: 0,
                quantity: "merging_time".into(),
                min_ratio: Some(3.2),
                max_ratio: None,
            }],
            ..base(
                name,
                "Alternating constant-rate chains with opposite drifts merge on the diffusive N^2 scale.",
                Mode::Assert,
                Generator::MirroredPair { p: 0.6, q: 0.4, r: 0.0 },
                vec![16, 32, 64],
            )
        },
        "pb0-probe" => Scenario {
            trials: 20,
            seed: 7,
            analyses: vec![merging(0.25, Metric::Tv, Horizon { base: 1000, per_n: 0, per_n2: 20 })],
            ..base(
                name,
                "Total-variation merging time of random band-class birth-death sequences, reported as T/N^2.",
                Mode::Report,
                Generator::BandBirthDeath,
                vec![8, 16, 32],
            )
        },
        "wpb1-probe" => Scenario {
            trials: 10,
            seed: 11,
            analyses: vec![
                merging(0.25, Metric::Tv, Horizon { base: 1000, per_n: 0, per_n2: 20 }),
                Analysis::Spectral { b: 2.0, horizon: Horizon { base: 0, per_n: 0, per_n2: 10 } },
            ],
            ..base(
                name,
                "Merging time of lazy-stick walks with fresh weights in [1, 2] at every step, against the relaxation scale of the unweighted walk.",
                Mode::Report,
                Generator::WeightedLazyStick { b: 2.0, common_measure: false },
                vec![8, 16, 32],
            )
        },
        "thw1-bounds" => Scenario {
            trials: 10,
            seed: 13,
            analyses: vec![
                Analysis::Bounds { horizon: Horizon { base: 0, per_n: 0, per_n2: 2 }, mu0: crate::scenario::InitialMeasure::Degree },
                merging(0.25, Metric::Tv, Horizon { base: 1000, per_n: 0, per_n2: 20 }),
            ],
            ..base(
                name,
                "Lazy-stick weightings Metropolis-adjusted to a common invariant measure: singular-value bounds dominate the exact distances.",
                Mode::Assert,
                Generator::WeightedLazyStick { b: 2.0, common_measure: true },
                vec![8, 16],
            )
        },
        "wpb2-probe" => Scenario {
            trials: 10,
            seed: 17,
            analyses: vec![
                Analysis::PathBand { horizon: Horizon { base: 0, per_n: 0, per_n2: 4 } },
                merging(0.25, Metric::Tv, Horizon { base: 1000, per_n: 0, per_n2: 20 }),
            ],
            ..base(
                name,
                "How far the degree measure drifts along weighted lazy-stick sequences, next to their merging times.",
                Mode::Report,
                Generator::WeightedLazyStick { b: 2.0, common_measure: false },
                vec![8, 16, 32],
            )
        },
        "stick-stability" => Scenario {
            analyses: vec![Analysis::Stability {
                depth: Horizon { base: 0, per_n: 2, per_n2: 0 },
                criterion_c: Some(2.0),
                criterion_depth: Some(4),
                search: false,
            }],
            ..base(
                name,
                "Word-tree envelope of the alternating stick pair against the uniform measure.",
                Mode::Report,
                Generator::StickPair { p: 0.6, q: 0.4, r: 0.0, eta1: 0.0, eta2: 0.0, rule: PairRule::Alternating },
                vec![5, 7],
            )
        },
        "spectral-comparison" => Scenario {
            trials: 5,
            seed: 19,
            analyses: vec![Analysis::Spectral { b: 2.0, horizon: Horizon { base: 0, per_n: 0, per_n2: 10 } }],
            ..base(
                name,
                "Spectral gap and deviation bounds of weighted random 3-regular graphs against their simple random walk.",
                Mode::Assert,
                Generator::WeightedRegular { b: 2.0, degree: 3 },
                vec![16, 32, 64],
            )
        },
        other => return Err(ScenarioError::UnknownBuiltin(other.to_string())),
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::canonical_bytes;

    #[test]
    fn builtins_are_valid_and_round_trip() {
        for name in BUILTIN_NAMES {
            let s = builtin(name).unwrap();
            assert_eq!(&s.name, name);
            let parsed = Scenario::from_bytes(&canonical_bytes(&s)).unwrap();
            assert_eq!(parsed, s);
        }
        assert!(builtin("nope").is_err());
    }
}

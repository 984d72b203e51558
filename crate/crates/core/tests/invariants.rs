use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seiqr_core::config::{
    parse_config, to_toml, ControlMask, CostWeights, Discretization, FbsSettings, InitialCondition, ModelParams,
    ReactionScheme, ScenarioSpec, SignConvention,
};
use seiqr_core::forward::{solve_forward, ControlTrajectory, StateSnapshot};
use seiqr_core::grid::Grid;
use seiqr_core::scenario::{build_initial_condition, run_all_cases, NESTING_TOL};

fn random_controls(grid: Grid, nt: usize, seed: u64) -> ControlTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ControlTrajectory::from_fn(grid, nt, |_, _, _, _| rng.gen_range(0.0..=1.0))
}

fn hotspot_spec(n: usize, t_final: f64) -> ScenarioSpec {
    ScenarioSpec {
        disc: Discretization::new(n, n, 1.0, t_final, 0.1).unwrap(),
        ic: InitialCondition {
            hotspot: (n / 3, n / 2),
            ..InitialCondition::default()
        },
        ..ScenarioSpec::default()
    }
}

/// Domain total of the population after one step, from the summed kinetics
/// dN/dt = Lambda |Omega| - mu N integrated by one RK4 step.
fn rk4_population_step(n: f64, area: f64, p: &ModelParams, dt: f64) -> f64 {
    let z = p.mu * dt;
    n + dt * (p.recruitment * area - p.mu * n) * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn population_follows_balance_at_equilibrium(seed in any::<u64>()) {
        // Background S = Lambda / mu: transfers cancel and demography is balanced.
        let spec = hotspot_spec(10, 6.0);
        let ic = build_initial_condition(&spec);
        let u = random_controls(spec.disc.grid(), spec.disc.nt, seed);
        let states = solve_forward(&ic, &u, &spec.params, &spec.disc).unwrap();
        let area = spec.disc.grid().area();
        let n = states.population_series();
        for k in 0..spec.disc.nt {
            let predicted = n[k] + spec.disc.dt * (spec.params.recruitment * area - spec.params.mu * n[k]);
            prop_assert!((n[k + 1] - predicted).abs() <= 1e-9 * predicted.abs());
        }
    }

    #[test]
    fn population_follows_rk4_balance_off_equilibrium(seed in any::<u64>(), s0 in 10.0f64..150.0) {
        let mut spec = hotspot_spec(8, 6.0);
        spec.ic.background_s = s0;
        let ic = build_initial_condition(&spec);
        let u = random_controls(spec.disc.grid(), spec.disc.nt, seed);
        let states = solve_forward(&ic, &u, &spec.params, &spec.disc).unwrap();
        let area = spec.disc.grid().area();
        let n = states.population_series();
        for k in 0..spec.disc.nt {
            let predicted = rk4_population_step(n[k], area, &spec.params, spec.disc.dt);
            prop_assert!((n[k + 1] - predicted).abs() <= 1e-11 * predicted.abs());
        }
    }

    #[test]
    fn states_stay_nonnegative_and_bounded(
        seed in any::<u64>(),
        values in prop::array::uniform5(0.0f64..120.0),
    ) {
        let disc = Discretization::new(7, 5, 1.0, 5.0, 0.1).unwrap();
        let grid = disc.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let ic = StateSnapshot::new(
            std::array::from_fn(|c| seiqr_core::grid::Field::from_fn(grid, |_, _| values[c] * rng.gen_range(0.0..1.0))),
            0.0,
        );
        let u = random_controls(grid, disc.nt, seed);
        let states = solve_forward(&ic, &u, &ModelParams::default(), &disc).unwrap();
        prop_assert!(states.min_value() >= -1e-9, "{}", states.min_value());
        prop_assert!(states.envelope_excess() <= 1e-9);
    }

    #[test]
    fn infection_free_compartments_stay_empty(seed in any::<u64>(), s0 in 1.0f64..200.0) {
        let disc = Discretization::new(6, 6, 1.0, 10.0, 0.1).unwrap();
        let grid = disc.grid();
        let ic = StateSnapshot::uniform(grid, [s0, 0.0, 0.0, 0.0, 0.0], 0.0);
        let u = random_controls(grid, disc.nt, seed);
        let states = solve_forward(&ic, &u, &ModelParams::default(), &disc).unwrap();
        for snap in &states.snapshots {
            for c in 1..4 {
                prop_assert_eq!(snap.fields[c].max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn config_round_trips_through_toml(
        beta in 0.0f64..1.0,
        kappa in prop::array::uniform4(0.0f64..100.0),
        w in prop::array::uniform3(0.0f64..1000.0),
        n in 2usize..60,
        nt in 1usize..400,
        mask in prop::array::uniform3(any::<bool>()),
        omega in 0.01f64..=1.0,
        euler in any::<bool>(),
        duality in any::<bool>(),
    ) {
        let dt = 0.05;
        let spec = ScenarioSpec {
            active: ControlMask(mask),
            ic: InitialCondition {
                background_s: 90.0,
                hotspot: (n / 2, n - 1),
                hotspot_fractions: [0.5, 0.3, 0.2],
            },
            params: ModelParams { beta1: beta, ..ModelParams::default() },
            weights: CostWeights {
                kappa1: kappa[0],
                kappa2: kappa[1],
                kappa3: kappa[2],
                kappa4: kappa[3],
                w1: w[0],
                w2: w[1],
                w3: w[2],
                ..CostWeights::default()
            },
            disc: Discretization {
                nx: n,
                ny: n + 1,
                hx: 1.0,
                hy: 0.5,
                t_final: nt as f64 * dt,
                dt,
                nt,
                reaction_scheme: if euler { ReactionScheme::Euler } else { ReactionScheme::Rk4 },
            },
        };
        let settings = FbsSettings {
            relax_omega: omega,
            sign_convention: if duality { SignConvention::Duality } else { SignConvention::Paper },
            ..FbsSettings::default()
        };
        let text = to_toml(&spec, &settings);
        let (spec2, settings2) = parse_config(&text).unwrap();
        prop_assert_eq!(spec2, spec);
        prop_assert_eq!(settings2, settings);
        prop_assert_eq!(to_toml(&spec2, &settings2), text);
    }
}

#[test]
fn disease_free_state_is_invariant_for_600_steps() {
    let mut spec = ScenarioSpec::default();
    spec.ic.hotspot_fractions = [1.0, 0.0, 0.0];
    let ic = build_initial_condition(&spec);
    let u = ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt);
    let states = solve_forward(&ic, &u, &spec.params, &spec.disc).unwrap();
    assert_eq!(states.snapshots.len(), 601);
    for snap in &states.snapshots {
        let s = snap.s().max_abs();
        for c in 1..5 {
            assert!(snap.fields[c].max_abs() <= 1e-12 * s);
        }
        assert!((snap.s().min() - 100.0).abs() <= 1e-12 * 100.0);
    }
}

#[test]
fn nesting_holds_for_several_weightings() {
    let settings = FbsSettings {
        max_iter: 15,
        ..FbsSettings::default()
    };
    let weightings = [
        CostWeights::default(),
        CostWeights {
            kappa2: 10.0,
            w1: 50.0,
            w3: 5.0,
            ..CostWeights::default()
        },
        CostWeights {
            kappa1: 0.2,
            kappa3: 3.0,
            kappa4: 0.1,
            w2: 0.5,
            sigma1: 1.0,
            ..CostWeights::default()
        },
    ];
    for weights in weightings {
        let spec = ScenarioSpec {
            weights,
            ..hotspot_spec(8, 4.0)
        };
        let report = run_all_cases(&spec, &settings);
        let j: Vec<f64> = (0..=8)
            .map(|id| if id == 0 { 0.0 } else { report.cost_of(id).unwrap() })
            .collect();
        let le = |a: usize, b: usize| j[a] <= j[b] * (1.0 + NESTING_TOL);
        for other in 1..8 {
            assert!(le(8, other), "J(8) > J({other}) for {weights:?}");
        }
        assert!(le(5, 2) && le(5, 3));
        assert!(le(6, 2) && le(6, 4));
        assert!(le(7, 3) && le(7, 4));
        assert!(report.nesting_violations().is_empty());
        for id in 2..=8 {
            assert!(j[id] <= j[1]);
        }
    }
}

#[test]
fn suite_is_deterministic() {
    let spec = ScenarioSpec {
        weights: CostWeights {
            kappa2: 10.0,
            ..CostWeights::default()
        },
        ..hotspot_spec(6, 3.0)
    };
    let settings = FbsSettings {
        max_iter: 10,
        ..FbsSettings::default()
    };
    let a = run_all_cases(&spec, &settings);
    let b = run_all_cases(&spec, &settings);
    for id in 1..=8 {
        assert_eq!(a.cost_of(id).unwrap().to_bits(), b.cost_of(id).unwrap().to_bits());
    }
    assert_eq!(a.verdict, b.verdict);
}

use collab_core::contract::{
    aggregate_user_payoff, check_feasibility, complete_involvement, expected_profit, optimal_rewards_given_tasks,
    solve_complete, solve_incomplete, Contract, ContractItem, Population, ProfitMethod, UserTypeProfile,
    KKT_TOLERANCE,
};
use collab_core::oracles::{complete_type_oracle, enumerate_ir_ic, grid_contract_oracle, GridOracleConfig};
use proptest::prelude::*;

/// Strictly decreasing unit costs from positive decrements.
fn unit_costs(types: usize) -> impl Strategy<Value = Vec<f64>> {
    (0.05f64..1.0, prop::collection::vec(0.05f64..1.5, types)).prop_map(|(base, steps)| {
        let mut k: Vec<f64> = steps
            .iter()
            .rev()
            .scan(base, |acc, s| {
                let out = *acc;
                *acc += s;
                Some(out)
            })
            .collect();
        k.reverse();
        k
    })
}

fn probabilities(types: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, types).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        let mut q: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let head: f64 = q[..q.len() - 1].iter().sum();
        let last = q.len() - 1;
        q[last] = 1.0 - head;
        q
    })
}

fn profile(types: std::ops::RangeInclusive<usize>, max_users: u64, capped: bool) -> impl Strategy<Value = UserTypeProfile> {
    types.prop_flat_map(move |i| {
        (
            unit_costs(i),
            prop::collection::vec(0.3f64..8.0, i),
            prop::collection::vec(prop_oneof![Just(f64::INFINITY), 0.02f64..2.0], i),
            1..=max_users,
            probabilities(i),
        )
            .prop_map(move |(k, theta, caps, total, q)| {
                let caps = if capped { caps } else { vec![f64::INFINITY; k.len()] };
                UserTypeProfile::new(k, caps, theta, Population::Probabilistic { total, probabilities: q }).unwrap()
            })
    })
}

/// Random menus: half arbitrary, half built near the feasibility boundary.
fn contract_for(types: usize) -> impl Strategy<Value = (Vec<f64>, Contract)> {
    (
        unit_costs(types),
        prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), types),
        prop::collection::vec(0.0f64..1.0, types),
        any::<bool>(),
    )
        .prop_map(move |(k, raw, mix, structured)| {
            let items = if structured {
                let mut tasks: Vec<f64> = raw.iter().map(|p| p.1).collect();
                tasks.sort_by(f64::total_cmp);
                let mut items = Vec::with_capacity(types);
                let mut prev = ContractItem::NULL;
                for i in 0..types {
                    let dt = tasks[i] - prev.task;
                    let lo = prev.reward + k[i] * dt;
                    let hi = if i == 0 { lo + 0.5 } else { prev.reward + k[i - 1] * dt };
                    // occasionally step just outside the band
                    let w = mix[i] * 1.2 - 0.1;
                    let reward = (lo + w * (hi - lo)).max(0.0);
                    prev = ContractItem { reward, task: tasks[i] };
                    items.push(prev);
                }
                items
            } else {
                raw.iter().map(|&(reward, task)| ContractItem { reward, task }).collect()
            };
            (k, Contract::new(items).unwrap())
        })
}

#[test]
fn two_type_example_against_constraint_enumeration() {
    let k = [2.0, 1.0];
    for (pairs, feasible) in [
        (vec![(2.0, 1.0), (3.0, 2.0)], true),
        (vec![(2.0, 1.0), (5.0, 2.0)], false),
        (vec![(0.0, 0.0), (0.0, 0.0)], true),
    ] {
        let c = Contract::from_pairs(&pairs).unwrap();
        assert_eq!(check_feasibility(&c, &k).unwrap().feasible(), feasible);
        assert_eq!(enumerate_ir_ic(&c, &k).unwrap().is_empty(), feasible);
    }
}

#[test]
fn spread_cost_menu_structure() {
    let p = UserTypeProfile::uncapped(
        vec![1.5, 1.0, 0.5],
        vec![5.0; 3],
        Population::Probabilistic {
            total: 120,
            probabilities: vec![1.0 / 3.0; 3],
        },
    )
    .unwrap();
    let s = solve_incomplete(&p).unwrap();
    let (r, t) = (s.contract.rewards(), s.contract.tasks());
    for i in 0..2 {
        assert!(t[i] < t[i + 1] && r[i] < r[i + 1]);
        assert!(((r[i + 1] - r[i]) / (t[i + 1] - t[i]) - p.unit_costs()[i + 1]).abs() <= 1e-6);
        assert!(r[i] / t[i] > r[i + 1] / t[i + 1]);
    }
    assert_eq!(s.per_type_payoff[0], 0.0);
    assert!(s.per_type_payoff[0] < s.per_type_payoff[1] && s.per_type_payoff[1] < s.per_type_payoff[2]);
}

#[test]
fn close_cost_aggregate_payoff_trends() {
    let p = UserTypeProfile::uncapped(
        vec![1.1, 1.0, 0.9],
        vec![5.0; 3],
        Population::Probabilistic {
            total: 12,
            probabilities: vec![1.0 / 3.0; 3],
        },
    )
    .unwrap();
    let s = solve_incomplete(&p).unwrap();
    let k = p.unit_costs();
    let payoff = |a: u64, b: u64| aggregate_user_payoff(&s.contract, &vec![a, b, 12 - a - b].into(), k).unwrap();
    let mut best = f64::NEG_INFINITY;
    for a in 0..=12u64 {
        for b in 0..=12 - a {
            let here = payoff(a, b);
            best = best.max(here);
            if a + b < 12 {
                // one more type-1 user replacing a type-3 user
                assert!(payoff(a + 1, b) <= here + 1e-12);
            }
            if b > 0 {
                // one type-2 user replaced by type 3
                assert!(payoff(a, b - 1) >= here - 1e-12);
            }
        }
    }
    assert_eq!(best, payoff(0, 0));
    assert_eq!(payoff(12, 0), 0.0);
}

#[test]
fn grid_oracle_reproduces_single_type_closed_form() {
    let p = UserTypeProfile::new(
        vec![1.0],
        vec![2.0],
        vec![5.0],
        Population::Probabilistic {
            total: 4,
            probabilities: vec![1.0],
        },
    )
    .unwrap();
    let grid = grid_contract_oracle(&p, GridOracleConfig::default()).unwrap();
    assert!((grid.tasks[0] - 1.0).abs() < 1e-4);
    let none = UserTypeProfile::uncapped(
        vec![2.0, 1.0],
        vec![1.0, 0.5],
        Population::Probabilistic {
            total: 5,
            probabilities: vec![0.5, 0.5],
        },
    )
    .unwrap();
    let grid = grid_contract_oracle(&none, GridOracleConfig::default()).unwrap();
    assert_eq!(grid.tasks, vec![0.0, 0.0]);
    assert_eq!(grid.expected_profit, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn neighbor_conditions_match_constraint_enumeration((k, c) in (1usize..=5).prop_flat_map(contract_for)) {
        let verdict = check_feasibility(&c, &k).unwrap().feasible();
        let violations = enumerate_ir_ic(&c, &k).unwrap();
        prop_assert_eq!(verdict, violations.is_empty(), "{:?}", violations);
    }

    #[test]
    fn telescoped_rewards_are_pointwise_minimal(
        (k, raw) in (1usize..=5).prop_flat_map(|i| (unit_costs(i), prop::collection::vec(0.0f64..3.0, i))),
        which in 0usize..5,
    ) {
        let mut tasks = raw;
        tasks.sort_by(f64::total_cmp);
        let rewards = optimal_rewards_given_tasks(&tasks, &k).unwrap();
        let pairs: Vec<(f64, f64)> = rewards.iter().copied().zip(tasks.iter().copied()).collect();
        let c = Contract::from_pairs(&pairs).unwrap();
        prop_assert!(check_feasibility(&c, &k).unwrap().feasible());
        let payoffs = c.payoffs(&k);
        prop_assert!(payoffs[0].abs() < 1e-12);
        prop_assert!(payoffs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let i = which % k.len();
        if pairs[i].0 >= 1e-4 {
            let mut cheaper = pairs.clone();
            cheaper[i].0 -= 1e-4;
            let c = Contract::from_pairs(&cheaper).unwrap();
            prop_assert!(!check_feasibility(&c, &k).unwrap().feasible());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn incomplete_solutions_are_feasible_and_structured(p in profile(1..=4, 40, true)) {
        let s = solve_incomplete(&p).unwrap();
        let k = p.unit_costs();
        prop_assert!(check_feasibility(&s.contract, k).unwrap().feasible());
        prop_assert!(enumerate_ir_ic(&s.contract, k).unwrap().is_empty());
        let (r, t) = (s.contract.rewards(), s.contract.tasks());
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(t.iter().zip(p.capacities()).all(|(t, c)| t <= c));
        let u = &s.per_type_payoff;
        prop_assert!(u.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        if let Some(&lowest) = s.involved.first() {
            prop_assert!(u[lowest].abs() <= 1e-12);
        }
        prop_assert!(s.diagnostics.unwrap().max_residual() <= KKT_TOLERANCE);
        let tested = s.involvement_test.len();
        prop_assert!(tested <= complete_involvement(&p).len());
    }

    #[test]
    fn marginal_and_multinomial_profits_agree(
        p in profile(3..=3, 15, false),
        raw in prop::collection::vec(0.0f64..2.0, 3),
    ) {
        let mut tasks = raw;
        tasks.sort_by(f64::total_cmp);
        let rewards = optimal_rewards_given_tasks(&tasks, p.unit_costs()).unwrap();
        let pairs: Vec<(f64, f64)> = rewards.into_iter().zip(tasks).collect();
        let c = Contract::from_pairs(&pairs).unwrap();
        let a = expected_profit(&c, &p, ProfitMethod::Marginal).unwrap();
        let b = expected_profit(&c, &p, ProfitMethod::Multinomial).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn complete_contract_matches_per_type_grid(
        (k, theta, caps, counts) in (1usize..=4).prop_flat_map(|i| (
            unit_costs(i),
            prop::collection::vec(0.3f64..8.0, i),
            prop::collection::vec(prop_oneof![Just(f64::INFINITY), 0.02f64..2.0], i),
            prop::collection::vec(0u64..30, i),
        )),
    ) {
        let p = UserTypeProfile::new(k.clone(), caps.clone(), theta.clone(), Population::Counts(counts.clone().into())).unwrap();
        let s = solve_complete(&p).unwrap();
        let oracle: f64 = (0..k.len()).map(|i| complete_type_oracle(theta[i], k[i], counts[i], caps[i]).1).sum();
        prop_assert!((s.expected_profit - oracle).abs() <= 1e-6 * oracle.abs().max(1.0));
        prop_assert!(s.per_type_payoff.iter().all(|&u| u.abs() <= 1e-12));
    }

    #[test]
    fn tasks_respond_monotonically_to_own_parameters(
        p in profile(2..=3, 30, true),
        which in 0usize..3,
        bump in 0.01f64..2.0,
    ) {
        let i = which % p.types();
        let base = solve_incomplete(&p).unwrap().contract.tasks();

        let mut theta = p.preferences().to_vec();
        theta[i] += bump;
        let richer = solve_incomplete(&p.with_preferences(theta).unwrap()).unwrap().contract.tasks();
        prop_assert!(richer[i] >= base[i] - 1e-9);

        let mut k = p.unit_costs().to_vec();
        let floor = k.get(i + 1).copied().unwrap_or(0.0);
        k[i] = floor + (k[i] - floor) * 0.5;
        let cheaper = solve_incomplete(&p.with_unit_costs(k).unwrap()).unwrap().contract.tasks();
        prop_assert!(cheaper[i] >= base[i] - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn incomplete_solver_matches_grid_search(p in profile(2..=2, 8, true)) {
        let s = solve_incomplete(&p).unwrap();
        let grid = grid_contract_oracle(&p, GridOracleConfig::default()).unwrap();
        let solver = expected_profit(&s.contract, &p, ProfitMethod::Multinomial).unwrap();
        prop_assert!(solver >= grid.expected_profit - 1e-9, "solver {} grid {}", solver, grid.expected_profit);
        prop_assert!(solver - grid.expected_profit <= 1e-3, "solver {} grid {}", solver, grid.expected_profit);
    }
}

use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use antscape_core::evolve::{
    init_population, phenotypic_crossover_toward, random_individual, standard_crossover,
    tournament_select, GpConfig,
};
use antscape_core::program::{EvalOptions, InitMethod, Interpreter};
use antscape_core::schema::{
    cells_before_cycle, compositions_of_size, default_schema, enumerate_schemas,
    is_trail_gap_schema, pyramid_layer, rotate, subtree_direction,
};
use antscape_core::world::parse_body;
use antscape_core::{
    format_program, parse_program, Composition, Direction, FunctionSet, Heading, Individual,
    Representation, RunResult, Terminal, TrailMap, TreeRole, WorldState,
};

fn arb_individual(representation: Representation) -> impl Strategy<Value = Individual> {
    (any::<u64>(), 1usize..=6, any::<bool>()).prop_map(move |(seed, depth, full)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let method = if full { InitMethod::Full } else { InitMethod::Grow };
        random_individual(representation, method, depth, &mut rng)
    })
}

fn arb_any_individual() -> impl Strategy<Value = Individual> {
    prop_oneof![
        arb_individual(Representation::Standard),
        arb_individual(Representation::Extended)
    ]
}

fn arb_body(max: usize) -> impl Strategy<Value = Vec<Terminal>> {
    prop::collection::vec(
        prop_oneof![Just(Terminal::Move), Just(Terminal::Left), Just(Terminal::Right)],
        1..=max,
    )
}

fn all_bodies(max_len: usize) -> Vec<Vec<Terminal>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Terminal>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|b| {
                Terminal::ALL.into_iter().map(move |t| {
                    let mut n = b.clone();
                    n.push(t);
                    n
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn simulate_heading(body: &[Terminal]) -> Heading {
    let empty = TrailMap::empty("empty", 8, 8);
    let mut w = WorldState::new(&empty, body.len() as u32);
    for &t in body {
        w.apply_terminal(t).unwrap();
    }
    w.heading()
}

#[test]
fn direction_matches_simulation_for_all_short_bodies() {
    let bodies = all_bodies(6);
    assert_eq!(bodies.len(), 1092);
    for b in &bodies {
        let sim = simulate_heading(b);
        // Left turns count positively.
        let expected = Direction::from_value(u32::from((4 - sim.right_turns_from(Heading::East)) % 4));
        assert_eq!(Composition::of(b).direction(), expected, "{b:?}");
    }
}

#[test]
fn backward_bodies_cycle_quickly() {
    for b in all_bodies(6) {
        if Composition::of(&b).direction() == Direction::Backward {
            assert!(cells_before_cycle(&b) <= 2 * b.len(), "{b:?}");
        }
    }
}

#[test]
fn pyramid_neighbours_differ_by_one_substitution() {
    for n in 1..=8 {
        let layer = compositions_of_size(n);
        for a in &layer {
            for b in &layer {
                if a.l1_distance(b) == 2 {
                    let d = [
                        a.moves as i64 - b.moves as i64,
                        a.lefts as i64 - b.lefts as i64,
                        a.rights as i64 - b.rights as i64,
                    ];
                    let mut s = d.to_vec();
                    s.sort();
                    assert_eq!(s, vec![-1, 0, 1]);
                }
            }
        }
    }
}

#[test]
fn pyramid_populations_match_multinomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 100_000;
    let size = 5u32;
    let records: Vec<(Composition, u32)> = (0..n)
        .map(|_| {
            let body: Vec<Terminal> = (0..size)
                .map(|_| Terminal::ALL[rng.random_range(0..3)])
                .collect();
            (Composition::of(&body), 0)
        })
        .collect();
    let layer = pyramid_layer(&records, size, 25);
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let mut chi2 = 0.0;
    for cell in &layer.cells {
        let c = cell.composition;
        let p = fact(size) / (fact(c.moves) * fact(c.lefts) * fact(c.rights)) / 3f64.powi(size as i32);
        let expected = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (cell.population as f64 - expected).abs() < 4.0 * sigma,
            "{c}: {} vs {expected}",
            cell.population
        );
        chi2 += (cell.population as f64 - expected).powi(2) / expected;
    }
    // 99.9th percentile of chi-squared with 20 degrees of freedom.
    assert!(chi2 < 45.31, "chi2 = {chi2}");
}

#[test]
fn tournament_winner_rank_follows_order_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let fitness: Vec<u32> = (0..500).collect();
    let draws = 10_000;
    let mut top_decile = 0;
    let mut top_30 = 0;
    for _ in 0..draws {
        let w = tournament_select(&fitness, 7, &mut rng);
        if w >= 450 {
            top_decile += 1;
        }
        if w >= 350 {
            top_30 += 1;
        }
    }
    // P(max of 7 uniform draws lies in the top fraction q) = 1 - (1-q)^7.
    for (hits, q) in [(top_decile, 0.1f64), (top_30, 0.3)] {
        let p = 1.0 - (1.0 - q).powi(7);
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - draws as f64 * p).abs() < 4.0 * sigma, "q={q}: {hits}");
    }
    assert!(top_30 as f64 / draws as f64 > 0.9);
}

#[test]
fn crossover_children_respect_depth_and_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for repr in [Representation::Standard, Representation::Extended] {
        let config = GpConfig {
            population_size: 100,
            representation: repr,
            ..GpConfig::default()
        };
        let mut pop = init_population(&config, &mut rng);
        for _ in 0..1000 {
            let i = rng.random_range(0..pop.len());
            let j = rng.random_range(0..pop.len());
            let (a, b) = standard_crossover(&pop[i], &pop[j], 17, &mut rng);
            for c in [&a, &b] {
                assert!(c.main().depth() <= 17);
                assert!(c.adf().is_none_or(|t| t.depth() <= 17));
                assert_eq!(c.representation(), repr);
                let main_set = match repr {
                    Representation::Standard => FunctionSet::Standard,
                    Representation::Extended => FunctionSet::ExtendedMain,
                };
                assert!(c.main().uses_only(main_set));
                assert!(c.adf().is_none_or(|t| t.uses_only(FunctionSet::ExtendedAdf)));
            }
            pop[i] = a;
            pop[j] = b;
        }
    }
}

#[test]
fn accepted_phenotypic_swaps_preserve_region_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut accepted = 0;
    let mut tries = 0;
    for repr in [Representation::Standard, Representation::Extended] {
        let config = GpConfig {
            population_size: 200,
            representation: repr,
            ..GpConfig::default()
        };
        let pop = init_population(&config, &mut rng);
        let target_count = accepted + 5_000;
        while accepted < target_count {
            tries += 1;
            assert!(tries < 200_000, "too few accepted swaps");
            let a = &pop[rng.random_range(0..pop.len())];
            let b = &pop[rng.random_range(0..pop.len())];
            let k = Direction::from_value(rng.random_range(0..4));
            let out = phenotypic_crossover_toward(a, b, k, 17, 0.9, 50, &mut rng);
            if let Some((pa, pb)) = out.accepted {
                accepted += 1;
                let removed = subtree_direction(a, pa.role, pa.index);
                let inserted = subtree_direction(b, pb.role, pb.index);
                assert_eq!(removed, k);
                assert_eq!(inserted, k);
                // When kept, child_a holds b's subtree at a's point.
                let (ca, _) = &out.children;
                if ca != a && pa.role == TreeRole::Main && repr == Representation::Standard {
                    assert_eq!(subtree_direction(ca, pa.role, pa.index), inserted);
                }
            } else {
                assert_eq!(out.children, (a.clone(), b.clone()));
            }
        }
    }
    assert_eq!(accepted, 10_000);
}

#[test]
fn population_is_stable_across_generations() {
    let trail = antscape_core::BundledTrail::SantaFe.load().unwrap();
    for repr in [Representation::Standard, Representation::Extended] {
        let config = GpConfig {
            population_size: 40,
            generations: 5,
            representation: repr,
            crossover_kind: antscape_core::evolve::CrossoverKind::Phenotypic,
            success_fitness: 1000,
            seed: 3,
            ..GpConfig::default()
        };
        let log = antscape_core::evolve::run_gp(&config, &trail);
        assert_eq!(log.records.len(), 5);
        for r in &log.records {
            assert_eq!(r.best.individual.representation(), repr);
            assert!(r.best.individual.depth() <= 17);
            assert_eq!(r.summary.max, r.best.fitness);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn format_parse_fixed_point(ind in arb_any_individual()) {
        let text = format_program(&ind);
        let back = parse_program(&text).unwrap();
        prop_assert_eq!(&back, &ind);
        prop_assert_eq!(format_program(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ramped_trees_stay_within_depth_six(seed in any::<u64>(), extended in any::<bool>()) {
        let config = GpConfig {
            population_size: 50,
            representation: if extended { Representation::Extended } else { Representation::Standard },
            ..GpConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ind in init_population(&config, &mut rng) {
            prop_assert!(ind.main().depth() <= 6);
            prop_assert!(ind.adf().is_none_or(|t| t.depth() <= 6));
        }
    }

    #[test]
    fn rotation_invariance(body in arb_body(12), k in 0usize..12) {
        let r = rotate(&body, k);
        prop_assert_eq!(Composition::of(&r), Composition::of(&body));
        prop_assert_eq!(Composition::of(&r).direction(), Composition::of(&body).direction());
        prop_assert_eq!(is_trail_gap_schema(&r), is_trail_gap_schema(&body));
    }

    #[test]
    fn default_schema_matches_foodless_run(ind in arb_any_individual()) {
        let empty = TrailMap::empty("empty", 32, 32);
        let run = RunResult::with_options(&ind, &empty, EvalOptions::new(5000));
        let first = &run.trace[0];
        prop_assert!(first.sensor_key.iter().all(|&b| !b));
        let d = default_schema(&ind);
        if !first.halted {
            prop_assert_eq!(&first.body, &d.body);
        } else {
            prop_assert!(d.body.starts_with(&first.body));
        }
    }

    #[test]
    fn same_key_same_body(ind in arb_any_individual()) {
        let trail = antscape_core::BundledTrail::SantaFe.load().unwrap();
        let run = RunResult::with_options(&ind, &trail, EvalOptions::new(600));
        let mut seen: HashMap<&[bool], &[Terminal]> = HashMap::new();
        for it in run.trace.iter().filter(|it| !it.halted) {
            if let Some(prev) = seen.insert(&it.sensor_key, &it.body) {
                prop_assert_eq!(prev, &it.body[..]);
            }
        }
        let schemas = enumerate_schemas(&run);
        prop_assert_eq!(schemas.len(), seen.len());
    }

    #[test]
    fn trace_replay_reproduces_final_state(ind in arb_any_individual()) {
        let trail = antscape_core::BundledTrail::SantaFe.load().unwrap();
        let run = RunResult::with_options(&ind, &trail, EvalOptions::new(600));
        let mut w = WorldState::new(&trail, 600);
        for it in &run.trace {
            for &t in &it.body {
                w.apply_terminal(t).unwrap();
            }
        }
        prop_assert_eq!(w.position(), run.state.position());
        prop_assert_eq!(w.heading(), run.state.heading());
        prop_assert_eq!(w.food_eaten(), run.fitness);
        prop_assert_eq!(w.steps_taken(), run.state.steps_taken());
        prop_assert_eq!(w.cells_visited(), run.cells_visited());
    }

    #[test]
    fn introns_contribute_to_no_schema(ind in arb_individual(Representation::Standard), seed in any::<u64>()) {
        let trail = antscape_core::BundledTrail::SantaFe.load().unwrap();
        let opts = EvalOptions::new(600);
        let mut interp = Interpreter::new(&ind, &trail, opts).track_coverage();
        while interp.run_iteration() {}
        let covered = interp.coverage().unwrap()[0].clone();
        let run = interp.finish();
        // Swap every never-executed leaf for another terminal: nothing changes.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let main = ind.main();
        let mut mutated = main.clone();
        for idx in 0..main.size() {
            if !covered[idx] && main.kind(idx).is_leaf() {
                let kinds = FunctionSet::Standard.terminals();
                let leaf = antscape_core::Tree::leaf(kinds[rng.random_range(0..kinds.len())]);
                mutated = mutated.replace_subtree(idx, &leaf);
            }
        }
        let other = ind.with_tree(TreeRole::Main, mutated);
        let run2 = RunResult::with_options(&other, &trail, opts);
        prop_assert_eq!(enumerate_schemas(&run), enumerate_schemas(&run2));
        prop_assert_eq!(run.fitness, run2.fitness);
    }
}

#[test]
fn aggregates_ignore_replicate_order() {
    use antscape_core::experiments::{replicate_config, summarize_replicates, Variant};
    let trail = antscape_core::BundledTrail::SantaFe.load().unwrap();
    let base = GpConfig {
        population_size: 60,
        generations: 8,
        ..GpConfig::default()
    };
    let v = Variant::Extended;
    let logs: Vec<_> = (0..8)
        .map(|r| antscape_core::evolve::run_gp(&replicate_config(&base, v, 5, r), &trail))
        .collect();
    let mut rev = logs.clone();
    rev.reverse();
    let a = summarize_replicates(v, v.apply(&base), logs, 0.99);
    let b = summarize_replicates(v, v.apply(&base), rev, 0.99);
    assert_eq!(a.success_rate, b.success_rate);
    assert_eq!(a.effort, b.effort);
    assert_eq!(a.transitions, b.transitions);
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.solution_pyramids, b.solution_pyramids);
}

#[test]
fn effort_never_rises_with_an_extra_late_success() {
    use antscape_core::experiments::computational_effort;
    let base = [Some(5), None, None, Some(12)];
    let e0 = computational_effort(&base, 20, 100, 0.99).unwrap().effort;
    let mut more = base.to_vec();
    more[1] = Some(19);
    let e1 = computational_effort(&more, 20, 100, 0.99).unwrap().effort;
    assert!(e1 <= e0);
}

#[test]
fn parse_body_round_trip() {
    let b = parse_body("rmlmm").unwrap();
    assert_eq!(cells_before_cycle(&b), 96);
}

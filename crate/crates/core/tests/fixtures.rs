use std::path::PathBuf;

use antscape_core::evolve::{run_gp, GpConfig};
use antscape_core::experiments::{replicate_config, Variant};
use antscape_core::program::EvalOptions;
use antscape_core::schema::{default_schema, is_trail_gap_schema, orientation_profile, ProbeSet};
use antscape_core::world::body_string;
use antscape_core::{
    evaluate, parse_program, BundledTrail, Direction, Heading, Individual, Orientation, RunResult,
};

fn fixture(name: &str) -> Individual {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fix1_first_iterations_by_hand() {
    let trail = BundledTrail::SantaFe.load().unwrap();
    let ind = fixture("fix1.ant");
    assert_eq!(ind.size(), 15);
    let run = evaluate(&ind, &trail, 600);

    // Facing North and South the cells beside the start row are empty, so
    // the first three iterations turn a full circle and step East onto food.
    for it in &run.trace[..3] {
        assert_eq!(it.sensor_key, vec![false, false]);
        assert_eq!(body_string(&it.body), "llllm");
    }
    // At (3,0) the ant, facing South, sees the trail turn down and runs it.
    let fourth = &run.trace[3];
    assert_eq!(fourth.sensor_key, vec![false, true]);
    assert_eq!(body_string(&fourth.body), "lllmmmm");

    let mut w = antscape_core::WorldState::new(&trail, 600);
    for it in &run.trace[..4] {
        for &t in &it.body {
            w.apply_terminal(t).unwrap();
        }
    }
    assert_eq!(w.position(), (3, 4));
    assert_eq!(w.heading(), Heading::South);
    assert_eq!(w.food_eaten(), 7);
    assert_eq!(w.steps_taken(), 22);
}

#[test]
fn fixtures_replay_to_full_fitness() {
    let trail = BundledTrail::SantaFe.load().unwrap();
    for name in ["fix1.ant", "koza.ant"] {
        let ind = fixture(name);
        let run = RunResult::with_options(&ind, &trail, EvalOptions::new(600));
        assert_eq!(run.fitness, 89, "{name}");
        assert!(run.state.steps_taken() <= 600);
        assert_eq!(default_schema(&ind).direction, Direction::Same, "{name}");
    }
    let koza = RunResult::with_options(&fixture("koza.ant"), &trail, EvalOptions::new(600));
    assert_eq!(koza.state.steps_taken(), 538);
    assert_eq!(koza.cells_visited(), 144);
}

#[test]
fn fix1_default_schema_is_a_trail_gap_sequence() {
    let d = default_schema(&fixture("fix1.ant"));
    assert_eq!(d.body_string(), "llllm");
    assert!(is_trail_gap_schema(&d.body));
}

#[test]
fn fixture_probe_orientations() {
    let probes = ProbeSet::default();
    for name in ["fix1.ant", "koza.ant"] {
        let p = orientation_profile(&fixture(name), &probes);
        assert!(p.is_uniform(), "{name}: {p:?}");
        assert_eq!(p.straight, Some(Orientation::Forward), "{name}");
    }
    // A program that only spins never eats the probe food.
    let spin = parse_program("left").unwrap();
    let p = orientation_profile(&spin, &probes);
    assert_eq!((p.straight, p.left_turn, p.right_turn), (None, None, None));
}

#[test]
fn pinned_seed_rediscovers_fix1() {
    let trail = BundledTrail::SantaFe.load().unwrap();
    let config = replicate_config(&GpConfig::default(), Variant::StandardGp, 1, 92);
    let log = run_gp(&config, &trail);
    assert!(log.solved);
    assert_eq!(log.solved_generation, Some(7));
    assert_eq!(log.solution.unwrap(), fixture("fix1.ant"));
}

#[test]
fn adf_fixture_uses_continue() {
    let trail = BundledTrail::SantaFe.load().unwrap();
    let ind = fixture("adf_example.ant");
    let run = evaluate(&ind, &trail, 600);
    assert!(run.trace.iter().any(|it| it.truncated_by_continue));
    assert!(run.fitness > 0);
    // Default path: right, left, left left, move.
    assert_eq!(default_schema(&ind).body_string(), "rlllm");
}

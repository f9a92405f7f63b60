use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use antscape_core::evolve::{run_gp, CrossoverKind, GpConfig};
use antscape_core::experiments::{
    computational_effort, run_random_population_study, run_random_walk_study, run_replicates,
    Scale, Variant, PYRAMID_SIZES,
};
use antscape_core::output::{
    manifest_text, read_runs, run_rows, solution_text, write_aggregates, write_directions,
    write_effort, write_layer, write_marginals, write_records, write_run_log, write_runs,
    write_table_rows, write_text, write_trajectory, write_transitions, write_walks, RunRow,
};
use antscape_core::schema::{
    cells_before_cycle, default_schema, enumerate_schemas, is_trail_gap_schema,
    orientation_profile, schema_count, ProbeSet,
};
use antscape_core::{
    format_program, parse_program, parse_trail, BundledTrail, Individual, Representation,
    RunResult, TrailMap,
};
use antscape_core::program::EvalOptions;

#[derive(Debug, Parser)]
#[command(name = "antscape", version, about = "Artificial-ant GP workbench")]
pub struct Cli {
    /// key=value file of flag defaults; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One GP run.
    #[command(args_override_self = true)]
    RunGp(RunGpArgs),
    /// Evaluate a ramped half-and-half population of random programs.
    #[command(args_override_self = true)]
    RandomPop(RandomPopArgs),
    /// Random-walk baseline.
    #[command(args_override_self = true)]
    RandomWalk(RandomWalkArgs),
    /// Replicate campaign over the four GP configurations.
    #[command(args_override_self = true)]
    Replicates(ReplicatesArgs),
    /// Schema analysis of one program.
    #[command(args_override_self = true)]
    Analyze(ProgramArgs),
    /// Computational effort from a runs.csv table.
    #[command(args_override_self = true)]
    Effort(EffortArgs),
    /// Orientation probes of one program.
    #[command(args_override_self = true)]
    Probe(ProbeArgs),
    /// Evaluate one program.
    #[command(args_override_self = true)]
    Replay(ProgramArgs),
}

#[derive(Debug, Args)]
pub struct TrailArgs {
    /// Bundled trail name or path to a trail file.
    #[arg(long, default_value = "santa_fe")]
    pub trail: String,
    /// Energy budget; 600 by default, 3000 on los_altos.
    #[arg(long)]
    pub energy: Option<u32>,
}

#[derive(Debug, Args)]
pub struct GpArgs {
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub tournament: usize,
    #[arg(long, default_value_t = 17)]
    pub max_depth: usize,
}

#[derive(Debug, Args)]
pub struct RunGpArgs {
    #[command(flatten)]
    pub trail: TrailArgs,
    #[command(flatten)]
    pub gp: GpArgs,
    #[arg(long, default_value = "standard")]
    pub xover: CrossoverKind,
    #[arg(long, default_value = "standard")]
    pub repr: Representation,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RandomPopArgs {
    #[command(flatten)]
    pub trail: TrailArgs,
    /// Program count; overrides --scale.
    #[arg(long)]
    pub programs: Option<usize>,
    #[arg(long, default_value = "desk")]
    pub scale: Scale,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RandomWalkArgs {
    #[command(flatten)]
    pub trail: TrailArgs,
    /// Walk count; overrides --scale.
    #[arg(long)]
    pub walks: Option<usize>,
    #[arg(long, default_value = "desk")]
    pub scale: Scale,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplicatesArgs {
    #[command(flatten)]
    pub trail: TrailArgs,
    #[command(flatten)]
    pub gp: GpArgs,
    /// Replicates per configuration; overrides --scale.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value = "desk")]
    pub scale: Scale,
    /// Only this crossover (default: both kinds).
    #[arg(long)]
    pub xover: Option<CrossoverKind>,
    /// Only this representation (default: both).
    #[arg(long)]
    pub repr: Option<Representation>,
    #[arg(long, default_value_t = 0.99)]
    pub z: f64,
    /// Also write every run's per-generation log.
    #[arg(long)]
    pub logs: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProgramArgs {
    /// Program file (.ant) or inline program text.
    #[arg(long)]
    pub program: String,
    #[command(flatten)]
    pub trail: TrailArgs,
    /// Write per-iteration detail here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EffortArgs {
    /// runs.csv from `replicates`.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.99)]
    pub z: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub program: String,
    #[arg(long, default_value_t = 600)]
    pub energy: u32,
}

pub fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Command::RunGp(a) => cmd_run_gp(a),
        Command::RandomPop(a) => cmd_random_pop(a),
        Command::RandomWalk(a) => cmd_random_walk(a),
        Command::Replicates(a) => cmd_replicates(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Effort(a) => cmd_effort(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn load_trail(spec: &str) -> Result<TrailMap> {
    if let Ok(b) = spec.parse::<BundledTrail>() {
        return Ok(b.load()?);
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).with_context(|| {
        format!("{spec:?} is neither a bundled trail (santa_fe, los_altos, probe_*) nor a readable file")
    })?;
    let name = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().to_string());
    Ok(parse_trail(&name, &text)?)
}

fn is_los_altos(trail: &TrailMap) -> bool {
    trail.name() == BundledTrail::LosAltos.name()
}

fn energy_for(trail: &TrailMap, flag: Option<u32>) -> u32 {
    flag.unwrap_or(if is_los_altos(trail) { 3000 } else { 600 })
}

fn gp_config(trail: &TrailMap, t: &TrailArgs, g: &GpArgs, seed: u64) -> Result<GpConfig> {
    let la = is_los_altos(trail);
    let config = GpConfig {
        population_size: g.pop.unwrap_or(if la { 2000 } else { 500 }),
        generations: g.gens.unwrap_or(if la { 100 } else { 50 }),
        tournament_size: g.tournament,
        max_depth: g.max_depth,
        energy: energy_for(trail, t.energy),
        success_fitness: trail.food_count() as u32,
        seed,
        ..GpConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn load_program(spec: &str) -> Result<Individual> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?
    } else if spec.trim_start().starts_with('(')
        || spec.trim_start().starts_with("main:")
        || parse_program(spec).is_ok()
    {
        spec.to_string()
    } else {
        bail!("program {spec:?} is not a file and does not parse as program text");
    };
    parse_program(&text).with_context(|| format!("invalid program in {spec}"))
}

fn manifest(out: &Path, command: &str, entries: Vec<(&str, String)>) -> Result<()> {
    let mut all = vec![
        ("command".to_string(), command.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    all.extend(entries.into_iter().map(|(k, v)| (k.to_string(), v)));
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_text(&out.join("manifest.txt"), &manifest_text(&all, &ts.to_string()))?;
    Ok(())
}

fn gp_entries(c: &GpConfig, trail: &TrailMap) -> Vec<(&'static str, String)> {
    vec![
        ("trail", trail.name().to_string()),
        ("seed", c.seed.to_string()),
        ("pop", c.population_size.to_string()),
        ("gens", c.generations.to_string()),
        ("energy", c.energy.to_string()),
        ("tournament", c.tournament_size.to_string()),
        ("max_depth", c.max_depth.to_string()),
    ]
}

fn cmd_run_gp(a: RunGpArgs) -> Result<String> {
    let trail = load_trail(&a.trail.trail)?;
    let config = GpConfig {
        representation: a.repr,
        crossover_kind: a.xover,
        ..gp_config(&trail, &a.trail, &a.gp, a.seed)?
    };
    let log = run_gp(&config, &trail);
    write_run_log(&a.out.join("run_log.csv"), &log)?;
    if let Some(solution) = &log.solution {
        write_text(&a.out.join("solution.ant"), &format!("{}\n", format_program(solution)))?;
    }
    let mut entries = gp_entries(&config, &trail);
    entries.push(("xover", config.crossover_kind.name().to_string()));
    entries.push(("repr", config.representation.name().to_string()));
    manifest(&a.out, "run-gp", entries)?;
    let best = log.records.iter().map(|r| r.best.fitness).max().unwrap_or(0);
    Ok(format!(
        "fitness={best} solved={} generation={} generations_run={}",
        log.solved,
        log.solved_generation.map_or("-".to_string(), |g| g.to_string()),
        log.records.len()
    ))
}

fn cmd_random_pop(a: RandomPopArgs) -> Result<String> {
    let trail = load_trail(&a.trail.trail)?;
    let energy = energy_for(&trail, a.trail.energy);
    let n = a.programs.unwrap_or(a.scale.programs());
    if n == 0 {
        bail!("--programs must be at least 1");
    }
    let study = run_random_population_study(&trail, n, energy, a.seed);
    write_records(&a.out.join("records.csv"), &study.records)?;
    write_aggregates(&a.out.join("aggregates.csv"), &study.aggregates)?;
    write_directions(&a.out.join("directions.csv"), &study.aggregates.directions_by_size)?;
    for (layer, size) in study.aggregates.pyramids.iter().zip(PYRAMID_SIZES) {
        write_layer(&a.out.join(format!("pyramid_{size}.csv")), layer)?;
    }
    manifest(
        &a.out,
        "random-pop",
        vec![
            ("trail", trail.name().to_string()),
            ("seed", a.seed.to_string()),
            ("programs", n.to_string()),
            ("energy", energy.to_string()),
        ],
    )?;
    let agg = &study.aggregates;
    Ok(format!(
        "programs={n} fit_fraction={:.4} mean_fitness={:.3} mean_cells={:.3}",
        agg.fit_fraction(),
        agg.mean_fitness,
        agg.mean_cells
    ))
}

fn cmd_random_walk(a: RandomWalkArgs) -> Result<String> {
    let trail = load_trail(&a.trail.trail)?;
    let steps = energy_for(&trail, a.trail.energy);
    let n = a.walks.unwrap_or(a.scale.walks());
    if n == 0 {
        bail!("--walks must be at least 1");
    }
    let study = run_random_walk_study(&trail, n, steps, a.seed);
    write_walks(&a.out.join("walks.csv"), &study)?;
    manifest(
        &a.out,
        "random-walk",
        vec![
            ("trail", trail.name().to_string()),
            ("seed", a.seed.to_string()),
            ("walks", n.to_string()),
            ("steps", steps.to_string()),
        ],
    )?;
    Ok(format!(
        "walks={n} mean_cells={:.3} mean_fitness={:.3}",
        study.mean_cells(),
        study.mean_fitness()
    ))
}

fn cmd_replicates(a: ReplicatesArgs) -> Result<String> {
    let trail = load_trail(&a.trail.trail)?;
    let base = gp_config(&trail, &a.trail, &a.gp, a.seed)?;
    let n = a.replicates.unwrap_or(a.scale.replicates());
    if n == 0 {
        bail!("--replicates must be at least 1");
    }
    if !(a.z > 0.0 && a.z < 1.0) {
        bail!("--z must lie strictly between 0 and 1");
    }
    let variants: Vec<Variant> = Variant::ALL
        .into_iter()
        .filter(|v| a.xover.is_none_or(|x| v.crossover() == x))
        .filter(|v| a.repr.is_none_or(|r| v.representation() == r))
        .collect();

    let mut all_rows: Vec<RunRow> = Vec::new();
    let mut summary_rows = Vec::new();
    let mut parts = Vec::new();
    for v in variants {
        let r = run_replicates(&trail, &base, v, n, a.seed, a.z);
        let dir = a.out.join(v.name());
        let rows = run_rows(v, &r.logs, base.population_size, base.generations);
        write_runs(&dir.join("runs.csv"), &rows)?;
        all_rows.extend(rows);
        if let Ok(t) = &r.effort {
            write_effort(&dir.join("effort.csv"), v.name(), t)?;
        }
        write_transitions(&dir.join("transitions.csv"), &r.transitions)?;
        write_marginals(&dir.join("marginals.csv"), &r.transitions)?;
        write_trajectory(&dir.join("trajectory.csv"), &r.trajectory)?;
        for layer in &r.solution_pyramids {
            write_layer(&dir.join(format!("solution_pyramid_{}.csv", layer.size)), layer)?;
        }
        for s in &r.solutions {
            write_text(
                &dir.join("solutions").join(format!("replicate_{:04}.ant", s.replicate)),
                &solution_text(s, v),
            )?;
        }
        if a.logs {
            for (i, log) in r.logs.iter().enumerate() {
                write_run_log(&dir.join("logs").join(format!("replicate_{i:04}.csv")), log)?;
            }
        }
        let effort = r.effort.as_ref().map_or(String::new(), |t| t.effort.to_string());
        summary_rows.push(vec![
            v.name().to_string(),
            n.to_string(),
            r.solved().to_string(),
            format!("{:.6}", r.success_rate),
            effort.clone(),
        ]);
        parts.push(format!(
            "{v}: solved={}/{n} effort={}",
            r.solved(),
            if effort.is_empty() { "-" } else { &effort }
        ));
    }
    write_runs(&a.out.join("runs.csv"), &all_rows)?;
    write_table_rows(
        &a.out.join("summary.csv"),
        &["variant", "replicates", "solved", "success_rate", "effort"],
        summary_rows,
    )?;
    let mut entries = gp_entries(&base, &trail);
    entries.push(("replicates", n.to_string()));
    entries.push(("z", a.z.to_string()));
    manifest(&a.out, "replicates", entries)?;
    Ok(parts.join("; "))
}

fn cmd_effort(a: EffortArgs) -> Result<String> {
    let rows = read_runs(&a.input)?;
    if rows.is_empty() {
        bail!("{} holds no runs", a.input.display());
    }
    let mut groups: Vec<(String, Vec<&RunRow>)> = Vec::new();
    for r in &rows {
        match groups.iter_mut().find(|(v, _)| *v == r.variant) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.variant.clone(), vec![r])),
        }
    }
    let mut parts = Vec::new();
    for (variant, group) in &groups {
        let pop = group[0].pop_size;
        let gens = group.iter().map(|r| r.generations).max().unwrap_or(1);
        if group.iter().any(|r| r.pop_size != pop) {
            bail!("variant {variant}: runs disagree on pop_size");
        }
        let solved: Vec<Option<usize>> = group.iter().map(|r| r.solved_generation).collect();
        let table = computational_effort(&solved, gens, pop, a.z)
            .with_context(|| format!("variant {variant}"))?;
        if let Some(out) = &a.out {
            write_effort(&out.join(format!("effort_{variant}.csv")), variant, &table)?;
        }
        parts.push(if groups.len() == 1 {
            format!("effort={}", table.effort)
        } else {
            format!("{variant} effort={}", table.effort)
        });
    }
    Ok(parts.join(" "))
}

fn cmd_replay(a: ProgramArgs) -> Result<String> {
    let program = load_program(&a.program)?;
    let trail = load_trail(&a.trail.trail)?;
    let energy = energy_for(&trail, a.trail.energy);
    let run = RunResult::with_options(&program, &trail, EvalOptions::new(energy));
    if let Some(out) = &a.out {
        write_iterations(&out.join("iterations.csv"), &run)?;
    }
    let solved = run.fitness as usize == trail.food_count();
    Ok(format!("fitness={} solved={solved}", run.fitness))
}

fn write_iterations(path: &Path, run: &RunResult<'_>) -> Result<()> {
    let rows = run.trace.iter().enumerate().map(|(i, it)| {
        vec![
            i.to_string(),
            it.sensor_key.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            antscape_core::world::body_string(&it.body),
            it.truncated_by_continue.to_string(),
            it.halted.to_string(),
        ]
    });
    write_table_rows(path, &["iteration", "key", "body", "continued", "halted"], rows)?;
    Ok(())
}

fn cmd_analyze(a: ProgramArgs) -> Result<String> {
    let program = load_program(&a.program)?;
    let trail = load_trail(&a.trail.trail)?;
    let energy = energy_for(&trail, a.trail.energy);
    let run = RunResult::with_options(&program, &trail, EvalOptions::new(energy));
    let d = default_schema(&program);
    if let Some(out) = &a.out {
        let rows = enumerate_schemas(&run).into_iter().map(|s| {
            vec![
                s.key.iter().map(|&b| if b { '1' } else { '0' }).collect(),
                s.body_string(),
                s.composition.to_string(),
                s.direction.name().to_string(),
            ]
        });
        write_table_rows(&out.join("schemas.csv"), &["key", "body", "composition", "direction"], rows)?;
    }
    Ok(format!(
        "default={} composition={} direction={} cells_before_cycle={} trail_gap={} schemas={} fitness={} cells_visited={}",
        d.body_string(),
        d.composition,
        d.direction.name(),
        cells_before_cycle(&d.body),
        is_trail_gap_schema(&d.body),
        schema_count(&run),
        run.fitness,
        run.cells_visited()
    ))
}

fn cmd_probe(a: ProbeArgs) -> Result<String> {
    let program = load_program(&a.program)?;
    let probes = ProbeSet {
        energy: a.energy,
        ..ProbeSet::default()
    };
    let p = orientation_profile(&program, &probes);
    let name = |o: Option<antscape_core::Orientation>| o.map_or("none", |o| o.name());
    Ok(format!(
        "straight={} left={} right={} uniform={}",
        name(p.straight),
        name(p.left_turn),
        name(p.right_turn),
        p.is_uniform()
    ))
}

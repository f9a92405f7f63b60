//! CSV and text emission for studies. Comma separated, header row, LF line
//! endings, fixed float precision.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evolve::RunLog;
use crate::experiments::{
    ArchivedSolution, DirectionCounts, EffortTable, GroupMean, PopulationAggregates,
    ProgramRecord, TrajectoryPoint, TransitionMatrix, Variant, WalkStudy,
};
use crate::program::format_program;
use crate::schema::{Direction, PyramidLayer};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}, row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

pub fn write_table_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| OutputError::Io { path: p, source }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub const RUN_LOG_HEADER: [&str; 10] = [
    "gen",
    "best_fitness",
    "best_size",
    "best_default_schema",
    "M",
    "L",
    "R",
    "direction",
    "cells_visited",
    "schema_count",
];

pub fn write_run_log(path: &Path, log: &RunLog) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &RUN_LOG_HEADER,
        log.records.iter().map(|r| {
            let b = &r.best;
            vec![
                r.generation.to_string(),
                b.fitness.to_string(),
                b.individual.size().to_string(),
                b.default_body.clone(),
                b.composition.moves.to_string(),
                b.composition.lefts.to_string(),
                b.composition.rights.to_string(),
                b.direction.name().to_string(),
                b.cells_visited.to_string(),
                b.schema_count.to_string(),
            ]
        }),
    )
}

pub const LAYER_HEADER: [&str; 8] = [
    "size",
    "n_m",
    "n_l",
    "n_r",
    "population",
    "max_fitness",
    "fit_count",
    "mean_fitness",
];

pub fn write_layer(path: &Path, layer: &PyramidLayer) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &LAYER_HEADER,
        layer.cells.iter().map(|c| {
            vec![
                layer.size.to_string(),
                c.composition.moves.to_string(),
                c.composition.lefts.to_string(),
                c.composition.rights.to_string(),
                c.population.to_string(),
                c.max_fitness.to_string(),
                c.fit_count.to_string(),
                f(c.mean_fitness),
            ]
        }),
    )
}

pub fn write_records(path: &Path, records: &[ProgramRecord]) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &[
            "index",
            "fitness",
            "cells_visited",
            "iterations",
            "schema_size",
            "M",
            "L",
            "R",
            "direction",
            "schema_count",
            "default_schema",
            "program",
        ],
        records.iter().map(|r| {
            vec![
                r.index.to_string(),
                r.fitness.to_string(),
                r.cells_visited.to_string(),
                r.iterations.to_string(),
                r.composition.size().to_string(),
                r.composition.moves.to_string(),
                r.composition.lefts.to_string(),
                r.composition.rights.to_string(),
                r.direction.name().to_string(),
                r.schema_count.to_string(),
                r.default_body.clone(),
                format_program(&r.program),
            ]
        }),
    )
}

/// One long table of the grouped means: fitness by cells-visited bin,
/// cells and fitness by default-schema size, fitness by schema count.
pub fn write_aggregates(path: &Path, a: &PopulationAggregates) -> Result<(), OutputError> {
    let tables: [(&str, &[GroupMean]); 4] = [
        ("fitness_by_cells", &a.fitness_by_cells),
        ("cells_by_schema_size", &a.cells_by_schema_size),
        ("fitness_by_schema_size", &a.fitness_by_schema_size),
        ("fitness_by_schema_count", &a.fitness_by_schema_count),
    ];
    write_table_rows(
        path,
        &["table", "key", "count", "mean"],
        tables.iter().flat_map(|(name, groups)| {
            groups
                .iter()
                .map(move |g| vec![name.to_string(), g.key.to_string(), g.count.to_string(), f(g.mean)])
        }),
    )
}

pub fn write_directions(path: &Path, rows: &[DirectionCounts]) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &["size", "direction", "all", "fit"],
        rows.iter().flat_map(|d| {
            Direction::ALL.into_iter().map(move |dir| {
                let k = dir.value() as usize;
                vec![
                    d.size.to_string(),
                    dir.name().to_string(),
                    d.all[k].to_string(),
                    d.fit[k].to_string(),
                ]
            })
        }),
    )
}

pub fn write_walks(path: &Path, walks: &WalkStudy) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &["walk", "cells_visited", "fitness"],
        walks
            .cells
            .iter()
            .zip(&walks.fitness)
            .enumerate()
            .map(|(i, (c, fit))| vec![i.to_string(), c.to_string(), fit.to_string()]),
    )
}

pub fn write_effort(path: &Path, variant: &str, t: &EffortTable) -> Result<(), OutputError> {
    let opt = |x: Option<u64>| x.map_or(String::new(), |v| v.to_string());
    write_table_rows(
        path,
        &[
            "variant",
            "generation",
            "successes",
            "replicates",
            "p",
            "runs_needed",
            "individuals",
        ],
        t.rows.iter().map(|r| {
            vec![
                variant.to_string(),
                r.generation.to_string(),
                r.successes.to_string(),
                t.replicates.to_string(),
                f(r.probability),
                opt(r.runs_needed),
                opt(r.individuals),
            ]
        }),
    )
}

pub fn write_transitions(path: &Path, m: &TransitionMatrix) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &["from", "to", "from_direction", "to_direction", "count"],
        m.counts.iter().map(|(&(from, to), &c)| {
            vec![
                from.to_string(),
                to.to_string(),
                from.direction().name().to_string(),
                to.direction().name().to_string(),
                c.to_string(),
            ]
        }),
    )
}

pub fn write_marginals(path: &Path, m: &TransitionMatrix) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &["composition", "direction", "outgoing", "incoming"],
        m.marginals().into_iter().map(|x| {
            vec![
                x.composition.to_string(),
                x.composition.direction().name().to_string(),
                x.outgoing.to_string(),
                x.incoming.to_string(),
            ]
        }),
    )
}

pub fn write_trajectory(path: &Path, points: &[TrajectoryPoint]) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &[
            "gen",
            "solved_runs",
            "solved_mean_cells",
            "unsolved_runs",
            "unsolved_mean_cells",
            "unsolved_mean_schema_count",
        ],
        points.iter().map(|p| {
            vec![
                p.generation.to_string(),
                p.solved_runs.to_string(),
                f(p.solved_mean_cells),
                p.unsolved_runs.to_string(),
                f(p.unsolved_mean_cells),
                f(p.unsolved_mean_schema_count),
            ]
        }),
    )
}

/// One row of runs.csv.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRow {
    pub variant: String,
    pub replicate: usize,
    pub solved: bool,
    pub solved_generation: Option<usize>,
    pub pop_size: usize,
    pub generations: usize,
}

pub const RUNS_HEADER: [&str; 6] = [
    "variant",
    "replicate",
    "solved",
    "solved_generation",
    "pop_size",
    "generations",
];

pub fn run_rows(variant: Variant, logs: &[RunLog], pop_size: usize, generations: usize) -> Vec<RunRow> {
    logs.iter()
        .enumerate()
        .map(|(replicate, l)| RunRow {
            variant: variant.name().to_string(),
            replicate,
            solved: l.solved,
            solved_generation: l.solved_generation,
            pop_size,
            generations,
        })
        .collect()
}

pub fn write_runs(path: &Path, rows: &[RunRow]) -> Result<(), OutputError> {
    write_table_rows(
        path,
        &RUNS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.variant.clone(),
                r.replicate.to_string(),
                r.solved.to_string(),
                r.solved_generation.map_or(String::new(), |g| g.to_string()),
                r.pop_size.to_string(),
                r.generations.to_string(),
            ]
        }),
    )
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRow>, OutputError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing = |name: &str| OutputError::Parse {
        path: path.to_path_buf(),
        row: 1,
        message: format!("missing column {name:?}"),
    };
    let c_variant = col("variant");
    let c_rep = col("replicate").ok_or_else(|| missing("replicate"))?;
    let c_solved = col("solved").ok_or_else(|| missing("solved"))?;
    let c_gen = col("solved_generation").ok_or_else(|| missing("solved_generation"))?;
    let c_pop = col("pop_size").ok_or_else(|| missing("pop_size"))?;
    let c_gens = col("generations").ok_or_else(|| missing("generations"))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |message: String| OutputError::Parse {
            path: path.to_path_buf(),
            row,
            message,
        };
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let num = |c: usize, name: &str| {
            field(c)
                .parse::<usize>()
                .map_err(|_| bad(format!("{name} {:?} is not a count", field(c))))
        };
        let solved = match field(c_solved) {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(bad(format!("solved {other:?} is not a boolean"))),
        };
        let solved_generation = match field(c_gen) {
            "" => None,
            _ => Some(num(c_gen, "solved_generation")?),
        };
        if solved != solved_generation.is_some() {
            return Err(bad("solved and solved_generation disagree".into()));
        }
        out.push(RunRow {
            variant: c_variant.map_or("all", field).to_string(),
            replicate: num(c_rep, "replicate")?,
            solved,
            solved_generation,
            pop_size: num(c_pop, "pop_size")?,
            generations: num(c_gens, "generations")?,
        });
    }
    Ok(out)
}

/// Program file with a commented header; readable by `parse_program`.
pub fn solution_text(s: &ArchivedSolution, variant: Variant) -> String {
    format!(
        "; variant {variant}, replicate {}, generation {}\n; default schema {} ({}, {})\n{}\n",
        s.replicate,
        s.generation,
        s.default_body,
        s.composition,
        s.direction.name(),
        format_program(&s.program)
    )
}

/// key=value lines; the timestamp is always the last line so outputs can be
/// compared without it.
pub fn manifest_text(entries: &[(String, String)], timestamp: &str) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(&format!("{k}={v}\n"));
    }
    out.push_str(&format!("timestamp={timestamp}\n"));
    out
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use garagegen::dqn::{self, write_checkpoint};
use garagegen::garage_set::{parse_garage_set, write_garage_set, GarageSample};
use garagegen::grid::EncodingMatrix;
use garagegen::maps;
use garagegen::metrics::{self, content_hash, GarageRecord};
use garagegen::par::Exec;
use garagegen::roadnet::{build_topology, emit_mesh, emit_opendrive, render_histogram_svg, render_matrix_svg};
use garagegen::sim::{self, EvaluationRow, SimError, SimGarage};

use crate::config::Loaded;
use crate::error::CliError;
use crate::filter::Filter;

pub const GARAGES: &str = "garages.txt";
pub const TRAINING: &str = "training.csv";
pub const CHECKPOINT: &str = "checkpoint.gfqn";
pub const SCORES: &str = "scores.csv";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const HEATMAP_SVG: &str = "heatmap.svg";
pub const EXPORT_DIR: &str = "exports";
pub const MANIFEST: &str = "exports.csv";
pub const EVALUATION: &str = "evaluation.csv";
pub const REGRESSION: &str = "regression.csv";
pub const REPORT: &str = "report.txt";

/// A run directory and the configuration that owns it.
pub struct Run {
    pub loaded: Loaded,
    pub dir: PathBuf,
    pub exec: Exec,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io(path))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn input(&self, input: Option<&Path>) -> PathBuf {
        input.map_or_else(|| self.path(GARAGES), Path::to_path_buf)
    }

    fn load_set(&self, input: Option<&Path>) -> Result<Vec<GarageSample>, CliError> {
        let path = self.input(input);
        parse_garage_set(&read(&path)?).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

/// File names for one training run; suffixed when several seeds share a directory.
fn train_names(seed: Option<u64>) -> [String; 3] {
    match seed {
        None => [GARAGES.into(), TRAINING.into(), CHECKPOINT.into()],
        Some(s) => [
            format!("garages-seed{s}.txt"),
            format!("training-seed{s}.csv"),
            format!("checkpoint-seed{s}.gfqn"),
        ],
    }
}

pub fn train(run: &Run, seeds: Option<&[u64]>) -> Result<(), CliError> {
    let cfg = &run.loaded.config;
    let map = run.loaded.initial_map()?;
    let plan: Vec<(u64, Option<u64>)> = match seeds {
        None => vec![(cfg.train.seed, None)],
        Some(list) => list.iter().map(|&s| (s, Some(s))).collect(),
    };
    for (seed, suffix) in plan {
        let train_cfg = dqn::TrainConfig {
            seed,
            ..cfg.train.clone()
        };
        let out = dqn::train(map.clone(), cfg.env_config(), train_cfg)
            .map_err(|e| CliError::Runtime(format!("training (seed {seed}): {e}")))?;
        let [set, curve, ckpt] = train_names(suffix);
        write(&run.path(&set), &write_garage_set(&out.garages))?;
        write(&run.path(&curve), &out.log.to_csv())?;
        let ckpt = run.path(&ckpt);
        let file = fs::File::create(&ckpt).map_err(CliError::io(&ckpt))?;
        write_checkpoint(&out.net, std::io::BufWriter::new(file))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", ckpt.display())))?;
        let usable = out.garages.iter().filter(|g| g.usable).count();
        println!("seed {seed}: episodes {}, usable {usable}", out.garages.len());
    }
    Ok(())
}

/// Usable garages of a set, scored and deduplicated.
pub fn scored(run: &Run, input: Option<&Path>) -> Result<Vec<GarageRecord>, CliError> {
    let samples = run.load_set(input)?;
    let initial = run.loaded.initial_map()?;
    let records = metrics::score_all(&samples, &initial, &run.loaded.config.metrics, run.exec)
        .map_err(CliError::runtime("scoring"))?;
    Ok(metrics::dedupe(records.into_iter().filter(|r| r.usable).collect()))
}

pub fn score(run: &Run, input: Option<&Path>) -> Result<(), CliError> {
    let records = scored(run, input)?;
    let heat = metrics::heatmap(&records);
    write(&run.path(SCORES), &metrics::scores_csv(&records))?;
    write(&run.path(HEATMAP_CSV), &heat.to_csv())?;
    write(&run.path(HEATMAP_SVG), &render_histogram_svg(&heat))?;
    println!(
        "scored {} distinct usable garages ({} with reachable stalls)",
        records.len(),
        heat.total()
    );
    Ok(())
}

/// One row of a scores CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    pub index: usize,
    pub delta: f64,
    pub lambda: Option<f64>,
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || format!("line {}: malformed row {line:?}", i + 1);
        if f.len() != 8 {
            return Err(bad());
        }
        rows.push(ScoreRow {
            index: f[0].parse().map_err(|_| bad())?,
            delta: f[2].parse().map_err(|_| bad())?,
            lambda: match f[7] {
                "" => None,
                v => Some(v.parse().map_err(|_| bad())?),
            },
        });
    }
    Ok(rows)
}

/// A scored garage with its matrix, as selected for export or simulation.
#[derive(Debug, Clone)]
struct Selected {
    hash: String,
    index: usize,
    lambda: f64,
    delta: f64,
    matrix: EncodingMatrix,
}

fn scored_set(run: &Run, input: Option<&Path>) -> Result<Vec<Selected>, CliError> {
    let path = run.path(SCORES);
    if !path.exists() {
        return Err(CliError::Runtime(format!(
            "{} not found; run `garagegen score` first",
            path.display()
        )));
    }
    let rows = parse_scores(&read(&path)?).map_err(CliError::runtime(path.display()))?;
    let samples = run.load_set(input)?;
    rows.into_iter()
        .filter_map(|r| r.lambda.map(|l| (r, l)))
        .map(|(r, lambda)| {
            let matrix = samples
                .get(r.index)
                .map(|s| s.matrix.clone())
                .ok_or_else(|| {
                    CliError::Runtime(format!(
                        "{} lists garage {} but the set has {} records",
                        path.display(),
                        r.index,
                        samples.len()
                    ))
                })?;
            Ok(Selected {
                hash: content_hash(&matrix),
                index: r.index,
                lambda,
                delta: r.delta,
                matrix,
            })
        })
        .collect()
}

pub enum Selection<'a> {
    Id(&'a str),
    Filter(&'a Filter),
}

pub fn export(run: &Run, selection: Selection<'_>, input: Option<&Path>) -> Result<(), CliError> {
    let all = scored_set(run, input)?;
    let picked: Vec<&Selected> = match selection {
        Selection::Id(id) => {
            let hit = all
                .iter()
                .find(|s| s.hash == id || s.index.to_string() == id)
                .ok_or_else(|| CliError::Runtime(format!("no scored garage with id {id:?}")))?;
            vec![hit]
        }
        Selection::Filter(f) => all.iter().filter(|s| f.matches(s.lambda, s.delta)).collect(),
    };
    if picked.is_empty() {
        eprintln!("warning: empty selection, nothing exported");
        return Ok(());
    }
    let dir = run.path(EXPORT_DIR);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let mut manifest = String::from("hash,index,lambda,delta\n");
    for s in &picked {
        let grid = s.matrix.grid();
        let topo = build_topology(grid).map_err(|e| CliError::Runtime(format!("garage {}: {e}", s.hash)))?;
        write(&dir.join(format!("{}.xodr", s.hash)), &emit_opendrive(&topo))?;
        write(&dir.join(format!("{}.mesh.txt", s.hash)), &emit_mesh(grid).to_obj())?;
        write(&dir.join(format!("{}.svg", s.hash)), &render_matrix_svg(grid))?;
        let _ = writeln!(manifest, "{},{},{},{}", s.hash, s.index, s.lambda, s.delta);
    }
    write(&run.path(MANIFEST), &manifest)?;
    println!("exported {} garages to {}", picked.len(), dir.display());
    Ok(())
}

pub enum SimSource {
    Exported,
    Spanning(usize),
    Fixture,
}

fn exported(run: &Run, input: Option<&Path>) -> Result<Vec<SimGarage>, CliError> {
    let path = run.path(MANIFEST);
    if !path.exists() {
        return Err(CliError::Runtime(format!(
            "{} not found; run `garagegen export` first",
            path.display()
        )));
    }
    let samples = run.load_set(input)?;
    let mut out = Vec::new();
    for (i, line) in read(&path)?.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || CliError::Runtime(format!("{} line {}: malformed row", path.display(), i + 1));
        let [hash, index, lambda, _] = f[..] else {
            return Err(bad());
        };
        let index: usize = index.parse().map_err(|_| bad())?;
        let matrix = samples.get(index).map(|s| s.matrix.clone()).ok_or_else(bad)?;
        if content_hash(&matrix) != hash {
            return Err(CliError::Runtime(format!(
                "{} line {}: garage {index} no longer matches {hash}; export again",
                path.display(),
                i + 1
            )));
        }
        out.push(SimGarage {
            id: hash.to_string(),
            lambda: lambda.parse().map_err(|_| bad())?,
            matrix,
        });
    }
    Ok(out)
}

fn fixture_rows() -> Vec<EvaluationRow> {
    maps::evaluation_table()
        .into_iter()
        .map(|r| EvaluationRow {
            garage: r.index.to_string(),
            lambda: r.difficulty,
            trials: r.test_count,
            collision: r.collision,
            timeout: r.timeout,
            deadlock: r.deadlock,
        })
        .collect()
}

pub fn simulate(run: &Run, source: SimSource, input: Option<&Path>) -> Result<(), CliError> {
    let cfg = &run.loaded.config.sim;
    let rows = match source {
        SimSource::Fixture => fixture_rows(),
        SimSource::Exported | SimSource::Spanning(_) => {
            let garages = match source {
                SimSource::Spanning(n) => {
                    let all = scored(run, input)?;
                    metrics::spanning_sample(&all, n)
                        .into_iter()
                        .map(|r| SimGarage {
                            id: r.hash.clone(),
                            lambda: r.scores.expect("sample is scored").lambda,
                            matrix: r.matrix.clone(),
                        })
                        .collect()
                }
                _ => exported(run, input)?,
            };
            if garages.is_empty() {
                return Err(CliError::Runtime("no garages to simulate".into()));
            }
            sim::evaluate(&garages, cfg, run.exec).map_err(CliError::runtime("simulation"))?
        }
    };
    write(&run.path(EVALUATION), &sim::evaluation_csv(&rows))?;
    let reg_path = run.path(REGRESSION);
    match sim::regression_rows(&rows) {
        Ok(reg) => {
            write(&reg_path, &sim::regression_csv(&reg))?;
            let r = reg.r.map_or("undefined".to_string(), |r| format!("{r:.4}"));
            println!(
                "{} garages: slope {:.4}, intercept {:.4}, r {r}",
                rows.len(),
                reg.slope,
                reg.intercept
            );
        }
        Err(e @ (SimError::DegenerateVariance | SimError::TooFewPoints(_))) => {
            if reg_path.exists() {
                fs::remove_file(&reg_path).map_err(CliError::io(&reg_path))?;
            }
            println!("{} garages: regression declined ({e:?}: {e})", rows.len());
        }
        Err(e) => return Err(CliError::Runtime(format!("regression: {e}"))),
    }
    Ok(())
}

/// Minimum evaluated garages for the correlation check in the report.
pub const REPORT_MIN_GARAGES: usize = 16;
pub const REPORT_MAX_R: f64 = -0.3;

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Builds the report text and says whether every check that ran passed.
pub fn report(run: &Run) -> Result<(String, bool), CliError> {
    let mut out = String::new();
    let mut ok = true;
    let mut curves: Vec<PathBuf> = fs::read_dir(&run.dir)
        .map_err(CliError::io(&run.dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("training") && n.ends_with(".csv"))
        })
        .collect();
    curves.sort();
    let _ = writeln!(out, "run directory: {}", run.dir.display());
    if curves.is_empty() {
        let _ = writeln!(out, "training: no curves");
    }
    for c in &curves {
        let rows = csv_rows(&read(c)?);
        let returns: Vec<f64> = rows.iter().filter_map(|r| r.get(1)?.parse().ok()).collect();
        let usable = rows.iter().filter(|r| r.get(3).is_some_and(|u| u == "1")).count();
        let name = c.file_name().unwrap_or_default().to_string_lossy();
        let _ = write!(out, "training {name}: episodes {}, usable {usable}", rows.len());
        let k = returns.len() / 10;
        if k > 0 {
            let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            let _ = write!(
                out,
                ", first-decile return {:.2}, last-decile return {:.2}",
                mean(&returns[..k]),
                mean(&returns[returns.len() - k..])
            );
        }
        out.push('\n');
    }

    let scores = run.path(SCORES);
    if scores.exists() {
        let rows = parse_scores(&read(&scores)?).map_err(CliError::runtime(scores.display()))?;
        let mid = rows.iter().filter(|r| (0.5..=0.9).contains(&r.delta)).count();
        let _ = writeln!(
            out,
            "scores: {} distinct usable garages, {mid} with coverage in [0.5, 0.9]",
            rows.len()
        );
    } else {
        let _ = writeln!(out, "scores: not computed");
    }

    let regression = run.path(REGRESSION);
    let evaluation = run.path(EVALUATION);
    if regression.exists() {
        let row = csv_rows(&read(&regression)?).into_iter().next().unwrap_or_default();
        let field = |i: usize| row.get(i).and_then(|v| v.parse::<f64>().ok());
        let (slope, r, n) = (field(0), field(2), field(3).map_or(0, |n| n as usize));
        let _ = writeln!(
            out,
            "simulation: {n} garages, slope {}, r {}",
            slope.map_or("?".into(), |s| format!("{s:.4}")),
            r.map_or("undefined".into(), |r| format!("{r:.4}"))
        );
        let pass = n >= REPORT_MIN_GARAGES
            && r.is_some_and(|r| r < REPORT_MAX_R)
            && slope.is_some_and(|s| s < 0.0);
        ok &= pass;
        let _ = writeln!(
            out,
            "difficulty correlation (n >= {REPORT_MIN_GARAGES}, r < {REPORT_MAX_R}, slope < 0): {}",
            if pass { "PASS" } else { "FAIL" }
        );
    } else if evaluation.exists() {
        let _ = writeln!(out, "simulation: regression declined");
    } else {
        let _ = writeln!(out, "simulation: not run");
    }
    write(&run.path(REPORT), &out)?;
    Ok((out, ok))
}

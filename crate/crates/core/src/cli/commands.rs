use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::manifest::{sha256_file, ArtifactWriter};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hin::{generate_synthetic, io, make_splits, Fold, GroundTruth, HinGraph, SplitSet, TargetTask};
use crate::hop::{build_operators, build_search_space, neighborhoods, HopOperator, OperatorBank, SearchSpace};
use crate::model::{save_checkpoint, Architecture, ForwardConfig, Model};
use crate::search::{exhaustive_oracle, search, selection_frequency, FrequencyTable, OracleEntry, SearchTrace};
use crate::train::{
    cross_validate, evaluate, markdown_table, train_discrete, EvalReport, Method, RunResult,
};

/// Resolved settings shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub exec: Exec,
    pub timestamps: bool,
    /// Architecture file for `retrain` and `eval`; defaults to the search
    /// output.
    pub architecture: Option<PathBuf>,
}

impl Context {
    fn architecture_path(&self) -> PathBuf {
        self.architecture
            .clone()
            .unwrap_or_else(|| self.out.join("search").join("architecture.json"))
    }
}

/// Graph, labels, search space and operators loaded from the data directory.
pub struct Dataset {
    pub graph: HinGraph,
    pub task: TargetTask,
    pub space: SearchSpace,
    pub bank: OperatorBank,
    pub splits: SplitSet,
    pub inputs: BTreeMap<String, String>,
}

impl Dataset {
    pub fn model(&self, cfg: &RunConfig) -> Result<Model<'_>> {
        let fc = ForwardConfig {
            k: cfg.model.k,
            dropout: cfg.model.dropout,
            ..ForwardConfig::default()
        };
        Model::new(&self.graph, &self.space, &self.bank, fc)
    }

    pub fn fold(&self, cfg: &RunConfig) -> Result<&Fold> {
        self.splits.folds.get(cfg.eval.fold).ok_or_else(|| {
            Error::Config(format!(
                "fold {} requested but only {} folds exist",
                cfg.eval.fold,
                self.splits.folds.len()
            ))
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

fn ensure_finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation(format!("non-finite value in {what}")))
    }
}

pub fn load_dataset(cfg: &RunConfig, out: &Path, exec: Exec) -> Result<Dataset> {
    let dir = &cfg.data.dir;
    let graph = io::load_dir(dir)?;
    let anchor = match &cfg.data.anchor {
        Some(a) => a.clone(),
        None => {
            let gt: GroundTruth = read_json(&dir.join("ground_truth.json")).map_err(|e| match e {
                Error::MissingFile(p) => Error::Config(format!(
                    "data.anchor is not set and {} does not exist",
                    p.display()
                )),
                e => e,
            })?;
            gt.anchor_type
        }
    };
    let labels_path = dir.join("labels.csv");
    let task = io::load_labels(&labels_path, &graph, &anchor)?;

    let mut files: Vec<PathBuf> = vec![dir.join("schema.json"), labels_path];
    files.extend(graph.schema().node_types().iter().map(|t| io::node_file(dir, t)));
    files.extend(graph.schema().edge_types().iter().map(|e| io::edge_file(dir, &e.name)));
    let mut inputs = BTreeMap::new();
    for f in &files {
        let rel = f.strip_prefix(dir).unwrap_or(f).to_string_lossy().into_owned();
        inputs.insert(rel, sha256_file(f)?);
    }

    let space = build_search_space(graph.schema(), &anchor, cfg.model.k)?;
    let operators = load_or_build_operators(cfg, out, &graph, &space, &anchor, &inputs, exec)?;
    let bank = OperatorBank::from_operators(&graph, &space, &operators)?;
    let splits = make_splits(&task, cfg.eval.num_folds, cfg.eval.train_fraction, cfg.eval.split_seed)?;
    Ok(Dataset {
        graph,
        task,
        space,
        bank,
        splits,
        inputs,
    })
}

/// Operators are cached under `out/cache/operators/<key>`, where the key
/// hashes the dataset files, anchor, K and neighborhood mode.
fn load_or_build_operators(
    cfg: &RunConfig,
    out: &Path,
    graph: &HinGraph,
    space: &SearchSpace,
    anchor: &str,
    inputs: &BTreeMap<String, String>,
    exec: Exec,
) -> Result<Vec<Vec<HopOperator>>> {
    let build = || {
        let nbs = neighborhoods(graph, anchor, cfg.model.k, cfg.data.neighborhood, exec)?;
        build_operators(graph, space, &nbs, exec)
    };
    if !cfg.data.cache_operators {
        return build();
    }
    let key_src = serde_json::json!({
        "inputs": inputs,
        "anchor": anchor,
        "k": cfg.model.k,
        "neighborhood": cfg.data.neighborhood,
    });
    let key = hex::encode(Sha256::digest(key_src.to_string().as_bytes()));
    let dir = out.join("cache").join("operators").join(&key[..16]);
    let file = |h: usize, i: usize| dir.join(format!("hop{}_cand{i}.bin", h + 1));

    let cached: Option<Vec<Vec<HopOperator>>> = (|| {
        let mut per_hop = Vec::new();
        for (h, cands) in space.per_hop().iter().enumerate() {
            let mut ops = Vec::new();
            for i in 0..cands.len() {
                let f = fs::File::open(file(h, i)).ok()?;
                ops.push(HopOperator::read_from(graph, std::io::BufReader::new(f)).ok()?);
            }
            per_hop.push(ops);
        }
        Some(per_hop)
    })();
    if let Some(ops) = cached {
        info!("loaded operators from {}", dir.display());
        return Ok(ops);
    }
    let ops = build()?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (h, hop_ops) in ops.iter().enumerate() {
        for (i, op) in hop_ops.iter().enumerate() {
            let path = file(h, i);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            op.write_to(graph, std::io::BufWriter::new(f)).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(ops)
}

pub fn generate(ctx: &Context, seed_override: Option<u64>, dir: &Path) -> Result<()> {
    let mut spec = ctx.config.data.synthetic.clone();
    if let Some(s) = seed_override {
        spec.seed = s;
    }
    let (graph, task, truth) = generate_synthetic(&spec)?;
    io::write_dir(dir, &graph, Some(&task))?;
    let mut w = ArtifactWriter::new(dir)?;
    w.json("ground_truth.json", &truth)?;
    w.record("schema.json")?;
    w.record("labels.csv")?;
    for t in graph.schema().node_types() {
        w.record(&rel_name(&io::node_file(dir, t), dir))?;
    }
    for e in graph.schema().edge_types() {
        w.record(&rel_name(&io::edge_file(dir, &e.name), dir))?;
    }
    let mut config = ctx.config.clone();
    config.data.synthetic = spec.clone();
    w.finish("generate", &config, &[spec.seed], BTreeMap::new(), ctx.timestamps)?;
    info!(
        "wrote {} nodes, {} edges to {}",
        graph.total_nodes(),
        graph.num_edges(),
        dir.display()
    );
    Ok(())
}

fn rel_name(path: &Path, root: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().into_owned()
}

pub fn run_search(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let data = load_dataset(cfg, &ctx.out, ctx.exec)?;
    let model = data.model(cfg)?;
    let fold = data.fold(cfg)?;
    let results = ctx.exec.map_slice(&ctx.seeds, |&s| {
        info!("search seed {s}");
        search(&model, &data.task, fold, &cfg.search_config(s))
    });
    let results: Vec<(Architecture, SearchTrace)> = results.into_iter().collect::<Result<_>>()?;

    let mut w = ArtifactWriter::new(&ctx.out.join("search"))?;
    for (&s, (arch, trace)) in ctx.seeds.iter().zip(&results) {
        ensure_finite(
            "search trace",
            trace.epochs.iter().flat_map(|e| [e.train_loss, e.valid_loss]),
        )?;
        w.json(&format!("architecture_seed{s}.json"), arch)?;
        w.json(&format!("trace_seed{s}.json"), trace)?;
    }
    let archs: Vec<Architecture> = results.into_iter().map(|(a, _)| a).collect();
    let freq = selection_frequency(&archs)?;
    w.json("architecture.json", freq.model_wise_mode())?;
    w.json("frequency.json", &freq)?;
    info!("selected {}", freq.model_wise_mode());
    w.finish("search", cfg, &ctx.seeds, data.inputs.clone(), ctx.timestamps)?;
    Ok(())
}

pub fn run_retrain(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let arch_path = ctx.architecture_path();
    let arch: Architecture = read_json(&arch_path)?;
    let data = load_dataset(cfg, &ctx.out, ctx.exec)?;
    arch.indices(&data.space)?;
    let model = data.model(cfg)?;
    let fold = data.fold(cfg)?;
    let trained = ctx.exec.map_slice(&ctx.seeds, |&s| {
        info!("retrain {arch} seed {s}");
        let tc = cfg.train_config(s);
        let (params, history) = train_discrete(&model, &data.task, &arch, fold, &tc)?;
        let valid = evaluate(&model, &params, &data.task, &arch, &fold.valid)?;
        let test = evaluate(&model, &params, &data.task, &arch, &fold.test)?;
        let run = RunResult {
            fold: cfg.eval.fold,
            seed: s,
            architecture: arch.clone(),
            valid,
            test,
            epochs: history.epochs.len(),
        };
        Ok((params, history, run))
    });
    let trained: Vec<_> = trained.into_iter().collect::<Result<_>>()?;

    let mut w = ArtifactWriter::new(&ctx.out.join("retrain"))?;
    let mut runs = Vec::new();
    for (params, history, run) in trained {
        let s = run.seed;
        ensure_finite("retrain scores", [run.valid.macro_f1, run.test.macro_f1])?;
        let ckpt = format!("seed{s}");
        let tc = serde_json::to_value(cfg.train_config(s)).expect("config serializes");
        save_checkpoint(&w.root().join(&ckpt), &params, data.graph.schema().node_types(), s, tc)?;
        w.record(&format!("{ckpt}/manifest.json"))?;
        w.json(&format!("history_seed{s}.json"), &history)?;
        runs.push(run);
    }
    let report = EvalReport::from_runs(arch.to_string(), runs, false)?;
    w.json("results.json", &report)?;
    let mut inputs = data.inputs.clone();
    inputs.insert("architecture.json".into(), sha256_file(&arch_path)?);
    w.finish("retrain", cfg, &ctx.seeds, inputs, ctx.timestamps)?;
    Ok(())
}

pub fn run_eval(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let arch_path = ctx.architecture_path();
    let arch: Architecture = read_json(&arch_path)?;
    let data = load_dataset(cfg, &ctx.out, ctx.exec)?;
    arch.indices(&data.space)?;
    let model = data.model(cfg)?;
    let tc = cfg.train_config(cfg.seed);

    let mut methods = vec![
        ("searched.json", Method::Fixed(arch)),
        ("all_nodes.json", Method::AllNodes),
    ];
    if cfg.eval.include_search {
        methods.push(("search_cv.json", Method::Search(cfg.search_config(cfg.seed))));
    }
    let mut w = ArtifactWriter::new(&ctx.out.join("eval"))?;
    let mut reports = Vec::new();
    for (file, method) in &methods {
        info!("cross-validating {}", method.name());
        let report = cross_validate(&model, &data.task, method, &tc, &data.splits, &ctx.seeds, ctx.exec)?;
        ensure_finite("eval scores", [report.macro_f1.mean, report.micro_f1.mean])?;
        w.json(file, &report)?;
        reports.push(report);
    }
    w.text("report.md", &markdown_table(&reports))?;
    let mut inputs = data.inputs.clone();
    inputs.insert("architecture.json".into(), sha256_file(&arch_path)?);
    w.finish("eval", cfg, &ctx.seeds, inputs, ctx.timestamps)?;
    Ok(())
}

pub fn run_oracle(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let data = load_dataset(cfg, &ctx.out, ctx.exec)?;
    let model = data.model(cfg)?;
    let fold = data.fold(cfg)?;
    let tc = cfg.train_config(cfg.seed);
    let ranking = exhaustive_oracle(&model, &data.task, fold, &tc, &ctx.seeds, cfg.eval.oracle_cap, ctx.exec)?;
    ensure_finite("oracle ranking", ranking.iter().map(|e| e.mean_valid_macro_f1))?;
    let mut w = ArtifactWriter::new(&ctx.out.join("oracle"))?;
    w.json("ranking.json", &ranking)?;
    w.finish("oracle", cfg, &ctx.seeds, data.inputs.clone(), ctx.timestamps)?;
    Ok(())
}

/// Where the searched architecture stands in the exhaustive ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub best: Architecture,
    pub best_valid_macro_f1: f64,
    pub searched: Architecture,
    pub searched_valid_macro_f1: f64,
    /// 1-based position of the searched architecture in the ranking.
    pub searched_rank: usize,
    pub num_architectures: usize,
    /// Oracle-best minus searched validation Macro-F1, in percentage points.
    pub regret_points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub runs: usize,
    pub macro_f1: String,
    pub micro_f1: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub oracle: Option<OracleComparison>,
    pub frequency: Option<FrequencyTable>,
    /// Commands whose manifests were found, in pipeline order.
    pub stages: Vec<String>,
}

pub fn compare_to_oracle(ranking: &[OracleEntry], searched: &Architecture) -> Result<OracleComparison> {
    let best = ranking
        .first()
        .ok_or_else(|| Error::InconsistentSpace("empty oracle ranking".into()))?;
    let (pos, entry) = ranking
        .iter()
        .enumerate()
        .find(|(_, e)| &e.architecture == searched)
        .ok_or_else(|| Error::InconsistentSpace(format!("searched architecture {searched} is not in the ranking")))?;
    Ok(OracleComparison {
        best: best.architecture.clone(),
        best_valid_macro_f1: best.mean_valid_macro_f1,
        searched: searched.clone(),
        searched_valid_macro_f1: entry.mean_valid_macro_f1,
        searched_rank: pos + 1,
        num_architectures: ranking.len(),
        regret_points: 100.0 * (best.mean_valid_macro_f1 - entry.mean_valid_macro_f1),
    })
}

fn optional<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>> {
    match read_json(path) {
        Ok(v) => Ok(Some(v)),
        Err(Error::MissingFile(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn run_report(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let out = &ctx.out;
    let mut inputs = BTreeMap::new();
    let mut stages = Vec::new();
    for stage in ["search", "retrain", "eval", "oracle"] {
        let m = out.join(stage).join("manifest.json");
        if m.exists() {
            inputs.insert(format!("{stage}/manifest.json"), sha256_file(&m)?);
            stages.push(stage.to_string());
        }
    }

    let mut reports: Vec<EvalReport> = Vec::new();
    for file in ["searched.json", "all_nodes.json", "search_cv.json"] {
        if let Some(r) = optional(&out.join("eval").join(file))? {
            reports.push(r);
        }
    }
    if reports.is_empty() {
        return Err(Error::MissingFile(out.join("eval").join("searched.json")));
    }
    let frequency: Option<FrequencyTable> = optional(&out.join("search").join("frequency.json"))?;
    let searched: Option<Architecture> = optional(&ctx.architecture_path())?;
    let ranking: Option<Vec<OracleEntry>> = optional(&out.join("oracle").join("ranking.json"))?;
    let oracle = match (&ranking, &searched) {
        (Some(r), Some(a)) => Some(compare_to_oracle(r, a)?),
        _ => None,
    };

    let rows: Vec<ReportRow> = reports
        .iter()
        .map(|r| ReportRow {
            method: r.method.clone(),
            runs: r.runs,
            macro_f1: r.macro_f1.percent(),
            micro_f1: r.micro_f1.percent(),
        })
        .collect();
    let mut md = String::from("| Method | Runs | Macro-F1 | Micro-F1 | Regret (points) |\n|---|---|---|---|---|\n");
    for (row, r) in rows.iter().zip(&reports) {
        let regret = match (&oracle, &searched) {
            (Some(o), Some(a)) if r.method == a.to_string() => format!("{:.2}", o.regret_points),
            _ => "-".to_string(),
        };
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            row.method, row.runs, row.macro_f1, row.micro_f1, regret
        ));
    }
    if let Some(o) = &oracle {
        md.push_str(&format!(
            "\nOracle-best {} reaches {:.2} validation Macro-F1; searched {} reaches {:.2} (rank {} of {}).\n",
            o.best,
            100.0 * o.best_valid_macro_f1,
            o.searched,
            100.0 * o.searched_valid_macro_f1,
            o.searched_rank,
            o.num_architectures
        ));
    }

    let report = Report {
        rows,
        oracle,
        frequency,
        stages,
    };
    let mut w = ArtifactWriter::new(&out.join("report"))?;
    w.json("report.json", &report)?;
    w.text("report.md", &md)?;
    w.finish("report", cfg, &ctx.seeds, inputs, ctx.timestamps)?;
    Ok(())
}

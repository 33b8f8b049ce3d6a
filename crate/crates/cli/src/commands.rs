//! Subcommand bodies. Each returns its artifacts; nothing is written here.

use std::fmt::Write as _;

use ndarray::Array2;
use serde_json::json;

use sdrc::nodes::{polynomial_features, pool_nodes};
use sdrc::pipeline::{extract_states, run_reservoir, Recorded};
use sdrc::readout::{predict, split, train_with_choice};
use sdrc::search::{compare_extraction, field_sweep, linear_fit, select_with, weighted_mean_frequency, Evaluator, SweepConfig};
use sdrc::signal::write_container;
use sdrc::spinwave::delay_line_reference;
use sdrc::speech::{raw_symbol_means, run_protocol, speech_states, SpeechReport};
use sdrc::tasks::{capacity, gen_classification_stream, load_wav_dir, nmse, synthetic_corpus, Metrics, TaskDataset};
use sdrc::{Extraction, StateMatrix};

use crate::config::{ExperimentConfig, ReservoirKind, TaskName};
use crate::output::Artifact;
use crate::{stage, CliError};

/// Half-width around `em_center` excluded when averaging node frequencies.
pub const EM_EXCLUSION: f64 = 0.2e9;

fn task_name(cfg: &ExperimentConfig) -> &'static str {
    match cfg.task.kind {
        TaskName::Parity => "parity",
        TaskName::Narma2 => "narma2",
    }
}

fn generate_task(cfg: &ExperimentConfig) -> Result<TaskDataset, CliError> {
    cfg.task.generate()
}

fn record(cfg: &ExperimentConfig, inputs: &[f64]) -> Result<Recorded<f64>, CliError> {
    run_reservoir(inputs, &cfg.pipeline()).map_err(stage("simulate"))
}

fn state_bytes(states: &StateMatrix<f64>) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    states.write_container(&mut bytes).map_err(stage("export"))?;
    Ok(bytes)
}

fn state_csv(states: &StateMatrix<f64>) -> Result<String, CliError> {
    let mut bytes = Vec::new();
    states.write_csv(&mut bytes).map_err(stage("export"))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let task = generate_task(cfg)?;
    let recorded = record(cfg, &task.inputs)?;
    let mut out = Vec::with_capacity(recorded.responses.len() + 2);
    for r in &recorded.responses {
        let mut bytes = Vec::new();
        write_container(&r.signal, &mut bytes).map_err(stage("export"))?;
        out.push(Artifact::binary(format!("detector_{}.bin", r.detector_index), bytes));
    }
    let mut csv = String::from("symbol,input\n");
    for (i, u) in task.inputs.iter().enumerate() {
        writeln!(csv, "{i},{u}").unwrap();
    }
    out.push(Artifact::csv("inputs.csv", csv));
    let first = &recorded.responses[0].signal;
    out.push(Artifact::json(
        "simulate.json",
        json!({
            "task": task_name(cfg),
            "n_symbols": task.inputs.len(),
            "n_detectors": recorded.responses.len(),
            "sample_rate": first.sample_rate(),
            "samples_per_detector": first.len(),
            "fmr_frequency": cfg.reservoir.fmr_frequency(),
        }),
    ));
    Ok(out)
}

/// States of the configured reservoir and the number of detector groups in their columns.
fn reservoir_states(cfg: &ExperimentConfig, inputs: &[f64]) -> Result<(StateMatrix<f64>, usize), CliError> {
    match cfg.benchmark.reservoir {
        ReservoirKind::Simulator => {
            let recorded = record(cfg, inputs)?;
            let n_det = recorded.responses.len();
            let extraction = cfg.extraction.to_extraction(n_det)?;
            let states = extract_states(&recorded, &extraction).map_err(stage("extract"))?;
            Ok((states, n_det))
        }
        ReservoirKind::DelayLine => {
            let states = delay_line_reference(inputs, cfg.benchmark.delay_depth, cfg.pulse.symbol_duration)
                .map_err(stage("delay line"))?;
            Ok((states, 1))
        }
    }
}

pub fn extract(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let task = generate_task(cfg)?;
    let (states, _) = reservoir_states(cfg, &task.inputs)?;
    Ok(vec![
        Artifact::csv("states.csv", state_csv(&states)?),
        Artifact::binary("states.bin", state_bytes(&states)?),
    ])
}

fn metrics_csv(task: &str, hash: &str, rows: &[(String, f64)]) -> String {
    let mut csv = String::from("task,config_hash,metric,value\n");
    for (m, v) in rows {
        writeln!(csv, "{task},{hash},{m},{v}").unwrap();
    }
    csv
}

pub fn benchmark(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let b = &cfg.benchmark;
    if b.reservoir == ReservoirKind::DelayLine && !b.compare_node_counts.is_empty() {
        return Err(CliError::Config("benchmark.compare_node_counts: needs the simulator reservoir".into()));
    }
    if b.feature_degree > 1 && b.select_nodes {
        return Err(CliError::Config("benchmark.select_nodes: not available with feature_degree > 1".into()));
    }
    let task = generate_task(cfg)?;
    let name = task_name(cfg);
    let split_spec = cfg.readout.split();
    let selection = cfg.search.selection(split_spec);
    let mut out = Vec::new();

    let (mut states, n_det) = match (b.reservoir, b.compare_node_counts.is_empty()) {
        (ReservoirKind::Simulator, false) => {
            let recorded = record(cfg, &task.inputs)?;
            let n_det = recorded.responses.len();
            let nodes = pool_nodes(&cfg.extraction.filter_bank()?, n_det, cfg.extraction.envelope);
            let spectral = extract_states(&recorded, &Extraction::Spectral { nodes }).map_err(stage("extract"))?;
            let virtual_pool =
                extract_states(&recorded, &Extraction::Virtual { nodes_per_symbol: cfg.extraction.nodes_per_symbol })
                    .map_err(stage("extract"))?;
            let rows = compare_extraction(&spectral, &virtual_pool, n_det, &task, &b.compare_node_counts, &selection)
                .map_err(stage("comparison"))?;
            let mut csv = String::from("n_per_detector,approach,best,worst,trials\n");
            for r in &rows {
                writeln!(csv, "{},{},{},{},{}", r.n_per_detector, r.approach.name(), r.best, r.worst, r.trials).unwrap();
            }
            out.push(Artifact::csv("comparison.csv", csv));
            let extraction = cfg.extraction.to_extraction(n_det)?;
            let states = match extraction {
                Extraction::Spectral { .. } => spectral,
                Extraction::Virtual { .. } => virtual_pool,
                e => extract_states(&recorded, &e).map_err(stage("extract"))?,
            };
            (states, n_det)
        }
        _ => reservoir_states(cfg, &task.inputs)?,
    };

    let mut chosen = None;
    if b.select_nodes {
        let eval = Evaluator::new(&states, n_det, &task, &split_spec, selection.lambda).map_err(stage("search"))?;
        let trials = select_with(&eval, n_det, &selection).map_err(stage("search"))?;
        let mut csv = String::from("rank,metric,value,seed,node_indices\n");
        for (rank, t) in trials.iter().take(cfg.search.top_k).enumerate() {
            let idx: Vec<String> = t.node_indices.iter().map(|i| i.to_string()).collect();
            writeln!(csv, "{rank},{},{},{},{}", eval.objective().name(), t.metric_value, t.seed, idx.join(" ")).unwrap();
        }
        out.push(Artifact::csv("selection.csv", csv));
        let best = &trials[0];
        states = states
            .select_columns(&eval.columns(&best.node_indices, selection.index_mode))
            .map_err(stage("search"))?;
        chosen = Some(best.node_indices.clone());
    }
    if b.feature_degree > 1 {
        states = polynomial_features(&states, b.feature_degree, cfg.task.kind == TaskName::Narma2)
            .map_err(stage("features"))?;
    }

    let (train, test) = split(&states, &task.targets, &split_spec).map_err(stage("split"))?;
    let model =
        train_with_choice(train.states.values.view(), train.targets.view(), &cfg.readout.lambda).map_err(stage("train"))?;
    let pred: Array2<f64> = predict(&model, &test.states).map_err(stage("evaluate"))?;
    let mut metrics = Metrics::default();
    match cfg.task.kind {
        TaskName::Parity => {
            let (r2, cap) = capacity(pred.view(), test.targets.view()).map_err(stage("evaluate"))?;
            metrics.r2_per_k = r2;
            metrics.capacity = Some(cap);
        }
        TaskName::Narma2 => {
            let p = pred.column(0).to_vec();
            let t = test.targets.column(0).to_vec();
            metrics.nmse = Some(nmse(&p, &t).map_err(stage("evaluate"))?);
            let mut csv = String::from("symbol,target,prediction\n");
            for ((row, t), p) in test.rows.iter().zip(&t).zip(&p) {
                writeln!(csv, "{row},{t},{p}").unwrap();
            }
            out.push(Artifact::csv("trace.csv", csv));
        }
    }
    let mut rows = metrics.rows();
    rows.push(("lambda".into(), model.lambda));
    rows.push(("n_nodes".into(), states.n_nodes() as f64));
    out.push(Artifact::csv("metrics.csv", metrics_csv(name, &cfg.hash(), &rows)));
    out.push(Artifact::json(
        "summary.json",
        json!({
            "task": name,
            "metrics": metrics,
            "lambda": model.lambda,
            "n_nodes": states.n_nodes(),
            "train_rows": train.rows.len(),
            "test_rows": test.rows.len(),
            "selected_node_indices": chosen,
        }),
    ));
    Ok(out)
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let fields = cfg.search.fields_tesla()?;
    if fields.is_empty() {
        return Err(CliError::Config("search.fields_mt: no bias fields given".into()));
    }
    if cfg.benchmark.reservoir != ReservoirKind::Simulator {
        return Err(CliError::Config("benchmark.reservoir: the sweep needs the simulator".into()));
    }
    let task = generate_task(cfg)?;
    let sweep_cfg = SweepConfig {
        fields,
        selection: cfg.search.selection(cfg.readout.split()),
        top_k: cfg.search.top_k,
        pool: cfg.extraction.filter_bank()?,
        envelope: cfg.extraction.envelope,
    };
    let result = field_sweep(&task.inputs, &task, &cfg.pipeline(), &sweep_cfg).map_err(stage("sweep"))?;

    // The library writers include a config_hash column; the hash line is added on output.
    let hash = cfg.hash();
    let mut summary = Vec::new();
    result.write_summary_csv(&hash, &mut summary).map_err(stage("export"))?;
    let mut occurrence = Vec::new();
    result.write_occurrence_csv(&hash, &mut occurrence).map_err(stage("export"))?;

    let em = cfg.reservoir.em_center;
    let mut top = String::from("field_mT,rank,value,seed,node_indices\n");
    let mut per_field = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in &result.rows {
        for (rank, t) in r.top.iter().enumerate() {
            let idx: Vec<String> = t.node_indices.iter().map(|i| i.to_string()).collect();
            writeln!(top, "{},{rank},{},{},{}", r.bias_field * 1e3, t.metric_value, t.seed, idx.join(" ")).unwrap();
        }
        let non_em = weighted_mean_frequency(&r.occurrences, &result.pool_centers, |f| (f - em).abs() > EM_EXCLUSION);
        let peak = r
            .occurrences
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| result.pool_centers[i]);
        if let Some(f) = non_em {
            xs.push(r.bias_field);
            ys.push(f);
        }
        per_field.push(json!({
            "field_mT": r.bias_field * 1e3,
            "best": r.best,
            "worst": r.worst,
            "mean": r.mean,
            "non_em_mean_frequency": non_em,
            "peak_frequency": peak,
        }));
    }
    let slope = linear_fit(&xs, &ys).map(|(s, _)| s);
    Ok(vec![
        Artifact::csv("sweep_summary.csv", String::from_utf8(summary).expect("ascii")),
        Artifact::csv("sweep_occurrence.csv", String::from_utf8(occurrence).expect("ascii")),
        Artifact::csv("sweep_top.csv", top),
        Artifact::json(
            "sweep.json",
            json!({
                "task": task_name(cfg),
                "objective": result.objective.name(),
                "em_center": em,
                "fields": per_field,
                "non_em_slope_hz_per_tesla": slope,
            }),
        ),
    ])
}

fn trials_csv(report: &SpeechReport, baseline: Option<&SpeechReport>) -> String {
    let mut csv = String::from(if baseline.is_some() {
        "trial,seed,lambda,accuracy,baseline_accuracy\n"
    } else {
        "trial,seed,lambda,accuracy\n"
    });
    for (i, t) in report.trials.iter().enumerate() {
        write!(csv, "{i},{},{},{}", t.seed, t.lambda, t.accuracy).unwrap();
        if let Some(b) = baseline {
            write!(csv, ",{}", b.trials[i].accuracy).unwrap();
        }
        csv.push('\n');
    }
    csv
}

pub fn speech(cfg: &ExperimentConfig, synthetic: bool) -> Result<Vec<Artifact>, CliError> {
    let s = &cfg.speech;
    let corpus = if synthetic {
        synthetic_corpus(&s.synthetic).map_err(stage("corpus"))?
    } else {
        let dir = s
            .wav_dir
            .as_ref()
            .ok_or_else(|| CliError::Config("speech.wav_dir: not set (or pass --synthetic)".into()))?;
        load_wav_dir(dir, None).map_err(stage("corpus"))?
    };
    corpus.validate(2, 2).map_err(stage("corpus"))?;
    let scfg = cfg.speech_config()?;
    let stream = gen_classification_stream(&corpus, scfg.symbols_per_sample, scfg.length).map_err(stage("corpus"))?;
    let states = speech_states::<f64>(&stream, &scfg).map_err(stage("simulate"))?;
    let report = run_protocol(&states, &stream, &scfg).map_err(stage("readout"))?;
    let baseline = if s.baseline {
        let raw = raw_symbol_means(&stream).map_err(stage("baseline"))?;
        Some(run_protocol(&raw, &stream, &scfg).map_err(stage("baseline"))?)
    } else {
        None
    };

    let names = &stream.class_names;
    let mut confusion = String::from("true_class,predicted_class,count\n");
    for (i, row) in report.confusion.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            writeln!(confusion, "{},{},{c}", names[i], names[j]).unwrap();
        }
    }
    let mut traces = String::from("recording,name,label,symbol,decision");
    for n in names {
        write!(traces, ",score_{n}").unwrap();
    }
    traces.push('\n');
    for t in &report.traces {
        let rec = &corpus.recordings[t.recording].name;
        for (k, (row, d)) in t.outputs.rows().into_iter().zip(&t.decisions).enumerate() {
            write!(traces, "{},{rec},{},{k},{}", t.recording, names[t.label], names[*d]).unwrap();
            for v in row {
                write!(traces, ",{v}").unwrap();
            }
            traces.push('\n');
        }
    }
    let mut rows = vec![
        ("mean_accuracy".to_string(), report.mean_accuracy),
        ("n_recordings".to_string(), stream.labels.len() as f64),
        ("n_nodes".to_string(), states.n_nodes() as f64),
    ];
    if let Some(b) = &baseline {
        rows.push(("baseline_mean_accuracy".to_string(), b.mean_accuracy));
    }
    Ok(vec![
        Artifact::csv("speech_trials.csv", trials_csv(&report, baseline.as_ref())),
        Artifact::csv("speech_confusion.csv", confusion),
        Artifact::csv("speech_traces.csv", traces),
        Artifact::csv("metrics.csv", metrics_csv("speech", &cfg.hash(), &rows)),
        Artifact::json(
            "speech.json",
            json!({
                "class_names": names,
                "corpus": if synthetic { "synthetic" } else { "wav" },
                "n_recordings": stream.labels.len(),
                "n_nodes": states.n_nodes(),
                "mean_accuracy": report.mean_accuracy,
                "trial_accuracy": report.trials.iter().map(|t| t.accuracy).collect::<Vec<_>>(),
                "confusion": report.confusion,
                "baseline_mean_accuracy": baseline.as_ref().map(|b| b.mean_accuracy),
            }),
        ),
    ])
}

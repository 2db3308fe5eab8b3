use std::collections::BTreeMap;
use std::fs;

use anyhow::{bail, Context, Result};
use benchsubset::fixtures;
use benchsubset::linreg::LinearModel;
use benchsubset::predictor::{
    approx_relative_error_from_log_mae, dataset_reports, predict_report, rebase_scores,
    reports_to_csv, truth_prediction_inversions, PredictionReport,
};
use benchsubset::score_table::load_scores_with_side_columns;
use benchsubset::structure_analysis::{
    anticorrelated_pairs, correlated_pairs, export_dot, fairness_report, pearson_matrix,
    rank_single_games, Categories, CorrelatedPair,
};
use benchsubset::subset_search::{
    enumerate_and_score, fit_subset, nested_pipeline, per_game_models, variance_explained,
    PipelineOptions, SearchConfig,
};
use serde_json::json;

use crate::cli::{
    AnalyzeCommand, Cli, CorrelateArgs, FairnessArgs, PipelineArgs, PredictArgs, RankSingleArgs,
    SearchArgs,
};
use crate::output::{aligned, csv_field, filter_config, load_dataset, load_norms, Run};

pub fn run(cli: Cli) -> Result<()> {
    let name = match &cli.command {
        crate::cli::Command::Search(_) => "search",
        crate::cli::Command::Pipeline(_) => "pipeline",
        crate::cli::Command::Predict(_) => "predict",
        crate::cli::Command::Analyze(AnalyzeCommand::RankSingle(_)) => "analyze rank-single",
        crate::cli::Command::Analyze(AnalyzeCommand::Correlate(_)) => "analyze correlate",
        crate::cli::Command::Analyze(AnalyzeCommand::Fairness(_)) => "analyze fairness",
    };
    let run = Run::new(&cli.out, name, cli.quiet, cli.json, cli.threads)?;
    match cli.command {
        crate::cli::Command::Search(args) => search(run, args, cli.threads),
        crate::cli::Command::Pipeline(args) => pipeline(run, args, cli.threads),
        crate::cli::Command::Predict(args) => predict(run, args),
        crate::cli::Command::Analyze(AnalyzeCommand::RankSingle(args)) => rank_single(run, args),
        crate::cli::Command::Analyze(AnalyzeCommand::Correlate(args)) => correlate(run, args),
        crate::cli::Command::Analyze(AnalyzeCommand::Fairness(args)) => fairness(run, args),
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn search(mut run: Run, args: SearchArgs, threads: usize) -> Result<()> {
    let dataset = load_dataset(&mut run, &args.data)?;
    let config = SearchConfig {
        subset_size: args.size as usize,
        must_include: args.include,
        exclude: args.exclude,
        folds: args.cv.folds as usize,
        seed: args.cv.seed,
        with_intercept: args.intercept,
        top_k: args.top_k as usize,
        threads,
        progress: !run.quiet,
    };
    let result = enumerate_and_score(&dataset, &config)?;
    run.write_csv("ranked.csv", &result.to_csv())?;
    let best = result.best().model.clone().with_name(format!("best-{}", args.size));
    run.write("best_model.json", &(best.to_json()? + "\n"))?;

    let s = result.stats;
    let mut text = format!(
        "{} algorithms x {} environments; {} candidates ({} scored, {} too few algorithms, {} singular)\n\n",
        dataset.n_algorithms(),
        dataset.n_environments(),
        s.total,
        s.scored,
        s.skipped_too_few_algorithms,
        s.skipped_singular
    );
    let rows: Vec<Vec<String>> = result
        .ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                format!("{:.6}", r.cv_mse),
                format!("{:.3}", r.model.stats.r_squared),
                r.n_algorithms.to_string(),
                r.environments.join(", "),
            ]
        })
        .collect();
    text += &aligned(&["rank", "cv_mse", "R2", "n", "environments"], &rows);
    run.report(&text, &json!({ "stats": s, "ranked": result.ranked }))?;
    let config_json = json!({
        "search": config,
        "filter": filter_config(&args.data),
        "target": args.data.target,
    });
    run.finish(config_json, Some(args.cv.seed))
}

/// Display names for the suite members.
const SUITE_LABELS: [(&str, &str); 6] = [
    ("size-1", "Subset-1"),
    ("size-3", "Subset-3"),
    ("size-5", "Subset-5"),
    ("size-10", "Subset-10"),
    ("val-3", "Subset-3-Val"),
    ("val-5", "Subset-5-Val"),
];

fn summary_row(label: &str, model: &LinearModel) -> Vec<String> {
    let rel = model
        .stats
        .log_mae
        .map(|m| pct(approx_relative_error_from_log_mae(m, 10.0)))
        .unwrap_or_default();
    vec![
        label.to_string(),
        model.environment_ids.join("; "),
        format!("{:.3}", model.stats.r_squared),
        rel,
        model.stats.cv_mse.map(|v| format!("{v:.6}")).unwrap_or_default(),
        model.stats.n_algorithms.to_string(),
    ]
}

fn pipeline(mut run: Run, args: PipelineArgs, threads: usize) -> Result<()> {
    let dataset = load_dataset(&mut run, &args.data)?;
    let options = PipelineOptions {
        folds: args.cv.folds as usize,
        seed: args.cv.seed,
        threads,
        progress: !run.quiet,
    };
    let mut suite = nested_pipeline(&dataset, options)?;
    let mut variance = BTreeMap::new();
    for name in ["size-5", "size-10"] {
        let subset = suite.get(name).expect("pipeline member").environment_ids.clone();
        let bank = per_game_models(&dataset, &subset)?;
        variance.insert(name.to_string(), variance_explained(&bank, &dataset)?);
        run.write(&format!("banks/{name}-bank.json"), &(bank.to_json()? + "\n"))?;
        suite.banks.insert(name.to_string(), bank);
    }
    for entry in &suite.entries {
        run.write(&format!("models/{}.json", entry.name), &(entry.model.to_json()? + "\n"))?;
    }
    run.write_json("suite.json", &json!({ "suite": suite, "variance_explained": variance }))?;

    let mut rows = Vec::new();
    for (name, label) in SUITE_LABELS {
        rows.push(summary_row(label, suite.get(name).expect("pipeline member")));
    }
    let mut notes = Vec::new();
    for (name, envs) in fixtures::reference_subsets() {
        let idx = match dataset.resolve(&envs) {
            Ok(idx) => idx,
            Err(_) => {
                notes.push(format!("{name}: not all environments present after filtering"));
                continue;
            }
        };
        match fit_subset(&dataset, &idx, options.folds, options.seed, false) {
            Ok(m) => rows.push(summary_row(&name, &m)),
            Err(e) => notes.push(format!("{name}: {e}")),
        }
    }
    let headers = ["name", "games", "R2", "approx_rel_error", "cv_mse", "n_algorithms"];
    let mut text = format!(
        "{} algorithms x {} environments, {}-fold CV, seed {}\n\n",
        dataset.n_algorithms(),
        dataset.n_environments(),
        options.folds,
        options.seed
    );
    text += &aligned(&headers, &rows);
    text += "\n";
    for name in ["size-5", "size-10"] {
        let v = &variance[name];
        text += &format!(
            "variance explained by the {name} per-game models: {} over {} environments\n",
            pct(v.fraction),
            v.environments_used
        );
    }
    for n in &notes {
        text += &format!("note: {n}\n");
    }
    run.write("summary.txt", &(run.header_line() + &text))?;
    let mut csv = headers.join(",") + "\n";
    for r in &rows {
        csv += &(r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",") + "\n");
    }
    run.write_csv("summary.csv", &csv)?;
    run.report(&text, &json!({ "summary": rows, "variance_explained": variance, "notes": notes }))?;
    let config = json!({
        "folds": options.folds,
        "filter": filter_config(&args.data),
        "target": args.data.target,
        "with_intercept": false,
    });
    run.finish(config, Some(options.seed))
}

fn predict(mut run: Run, args: PredictArgs) -> Result<()> {
    run.add_input("scores", &args.scores)?;
    let norms = load_norms(&mut run, args.norms.as_deref())?;
    run.add_input("model", &args.model)?;
    let model = LinearModel::load(&args.model)?;
    if let (Some(expected), Some(actual)) = (&model.norms_sha256, norms.checksum()) {
        if expected != actual {
            let msg = format!(
                "model was fitted against normalization table {expected}, but {actual} was supplied"
            );
            if args.strict {
                bail!(msg);
            }
            run.warn(&msg);
        }
    }
    let side: Vec<&str> = args.true_summary.iter().map(String::as_str).collect();
    let (raw, side_values) = load_scores_with_side_columns(&args.scores, &side)?;
    let truth = args.true_summary.as_ref().map(|c| &side_values[c]);

    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (a, id) in raw.algorithm_ids().iter().enumerate() {
        let scores: BTreeMap<String, f64> = raw
            .environment_ids()
            .iter()
            .zip(raw.row(a))
            .filter_map(|(e, v)| v.map(|v| (e.clone(), v)))
            .collect();
        let t = truth.and_then(|col| col[a]);
        match predict_report(&model, id, &scores, &norms, t) {
            Ok(r) => reports.push(r),
            Err(e) => {
                run.warn(&format!("{id}: {e}"));
                errors.push(json!({ "algorithm": id, "error": e.to_string() }));
            }
        }
    }
    run.write_csv("predictions.csv", &reports_to_csv(&reports))?;

    let with_truth = reports.iter().filter(|r| r.true_summary.is_some()).count();
    let inversions = if with_truth > 0 { Some(truth_prediction_inversions(&reports)?) } else { None };
    let rebased = match &args.baseline {
        Some(b) => {
            let r = rebase_scores(&reports, b)?;
            run.write_csv("rebased.csv", &reports_to_csv(&r))?;
            Some(r)
        }
        None => None,
    };
    let doc = json!({
        "model": model.name,
        "reports": reports,
        "errors": errors,
        "inversion_count": inversions,
        "baseline": args.baseline,
        "rebased": rebased,
    });
    run.write_json("predictions.json", &doc)?;

    let mut text = prediction_table(&reports);
    if let Some(r) = &rebased {
        text += &format!("\nrelative to {}:\n", args.baseline.as_deref().unwrap_or_default());
        text += &prediction_table(r);
    }
    if let Some(n) = inversions {
        text += &format!("\ninversions between true and predicted order: {n}\n");
    }
    if !errors.is_empty() {
        text += &format!("{} algorithm(s) could not be predicted; see predictions.json\n", errors.len());
    }
    run.report(&text, &doc)?;
    let config = json!({
        "true_summary": args.true_summary,
        "baseline": args.baseline,
        "strict": args.strict,
    });
    run.finish(config, None)
}

fn prediction_table(reports: &[PredictionReport]) -> String {
    let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map(f).unwrap_or_default();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.algorithm_id.clone(),
                format!("{:.2}", r.predicted_summary),
                opt(r.true_summary, &|v| format!("{v:.2}")),
                opt(r.relative_error, &|v| pct(v)),
            ]
        })
        .collect();
    aligned(&["algorithm", "predicted", "true", "rel_error"], &rows)
}

fn rank_single(mut run: Run, args: RankSingleArgs) -> Result<()> {
    let dataset = load_dataset(&mut run, &args.data)?;
    let ranking = rank_single_games(&dataset)?;
    let mut csv = String::from("environment,slope,intercept,r_squared,n_algorithms\n");
    for f in &ranking.ranked {
        csv += &format!(
            "{},{},{},{},{}\n",
            csv_field(&f.environment),
            f.slope,
            f.intercept,
            f.r_squared,
            f.n_algorithms
        );
    }
    run.write_csv("rank_single.csv", &csv)?;
    run.write_json("rank_single.json", &ranking)?;
    let rows: Vec<Vec<String>> = ranking
        .ranked
        .iter()
        .map(|f| {
            vec![
                f.environment.clone(),
                format!("{:.3}", f.r_squared),
                format!("{:.3}", f.slope),
                format!("{:.3}", f.intercept),
                f.n_algorithms.to_string(),
            ]
        })
        .collect();
    let mut text = aligned(&["environment", "R2", "slope", "intercept", "n"], &rows);
    for (env, why) in &ranking.flagged {
        text += &format!("excluded {env}: {why}\n");
    }
    run.report(&text, &ranking)?;
    run.finish(json!({ "filter": filter_config(&args.data), "target": args.data.target }), None)
}

fn pairs_csv(pairs: &[CorrelatedPair]) -> String {
    let mut csv = String::from("a,b,pcc,n_algorithms,high\n");
    for p in pairs {
        csv += &format!("{},{},{},{},{}\n", csv_field(&p.a), csv_field(&p.b), p.pcc, p.n_algorithms, p.high);
    }
    csv
}

fn correlate(mut run: Run, args: CorrelateArgs) -> Result<()> {
    let dataset = load_dataset(&mut run, &args.data)?;
    let categories = match &args.categories {
        Some(p) => {
            run.add_input("categories", p)?;
            Categories::load(p)?
        }
        None => {
            run.add_embedded("categories", "<embedded categories>", fixtures::CATEGORIES_CSV.as_bytes());
            fixtures::categories()
        }
    };
    let graph = pearson_matrix(&dataset).with_categories(&categories);
    let top = correlated_pairs(&graph, args.threshold, args.top)?;
    let negative = anticorrelated_pairs(&graph, args.threshold, args.top)?;

    let mut matrix = String::from("environment");
    for e in &graph.environments {
        matrix += &format!(",{}", csv_field(e));
    }
    matrix += "\n";
    for (i, e) in graph.environments.iter().enumerate() {
        matrix += &csv_field(e);
        for v in &graph.pcc[i] {
            matrix += &format!(",{}", v.map(|x| x.to_string()).unwrap_or_default());
        }
        matrix += "\n";
    }
    run.write_csv("pcc_matrix.csv", &matrix)?;
    run.write_csv("correlated_pairs.csv", &pairs_csv(&top))?;
    run.write_csv("anticorrelated_pairs.csv", &pairs_csv(&negative))?;
    let doc = json!({ "threshold": args.threshold, "top": top, "anticorrelated": negative, "graph": graph });
    run.write_json("correlation.json", &doc)?;
    if let Some(path) = &args.dot {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let dot = format!("// inputs: {}\n{}", run.manifest.checksum_chain(), export_dot(&top, &categories));
        fs::write(path, dot).with_context(|| format!("writing {}", path.display()))?;
    }

    let row = |p: &CorrelatedPair| {
        vec![
            p.a.clone(),
            p.b.clone(),
            format!("{:.3}", p.pcc),
            p.n_algorithms.to_string(),
            if p.high { "high".into() } else { String::new() },
        ]
    };
    let mut text = aligned(&["a", "b", "pcc", "n", ""], &top.iter().map(row).collect::<Vec<_>>());
    if !negative.is_empty() {
        text += "\nnegatively correlated:\n";
        text += &aligned(&["a", "b", "pcc", "n", ""], &negative.iter().map(row).collect::<Vec<_>>());
    }
    run.report(&text, &json!({ "top": top, "anticorrelated": negative }))?;
    let config = json!({
        "filter": filter_config(&args.data),
        "target": args.data.target,
        "threshold": args.threshold,
        "top": args.top,
    });
    run.finish(config, None)
}

fn fairness(mut run: Run, args: FairnessArgs) -> Result<()> {
    let dataset = load_dataset(&mut run, &args.data)?;
    run.add_input("model", &args.model)?;
    let model = LinearModel::load(&args.model)?;
    let (reports, skipped) = dataset_reports(&model, &dataset)?;
    let report = fairness_report(&reports)?;
    run.write_json("fairness.json", &json!({ "report": report, "skipped_algorithms": skipped }))?;

    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| {
            vec![
                g.name.clone(),
                g.algorithm_ids.len().to_string(),
                pct(g.mean_abs_rel_error),
                pct(g.mean_rel_error),
            ]
        })
        .collect();
    let mut text = aligned(&["tertile", "n", "mean |rel err|", "mean rel err"], &rows);
    text += "\n";
    let rows: Vec<Vec<String>> = report
        .tests
        .iter()
        .map(|t| {
            vec![
                format!("{} vs {}", t.group_a, t.group_b),
                serde_json::to_value(t.metric)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                format!("{:.3}", t.t),
                format!("{:.1}", t.df),
                format!("{:.4}", t.p_value),
                if t.significant { "significant".into() } else { String::new() },
            ]
        })
        .collect();
    text += &aligned(&["groups", "metric", "t", "df", "p", ""], &rows);
    if !skipped.is_empty() {
        text += &format!("{} algorithm(s) lacked a model input and were left out\n", skipped.len());
    }
    run.write("fairness.txt", &(run.header_line() + &text))?;
    run.report(&text, &report)?;
    run.finish(json!({ "filter": filter_config(&args.data), "target": args.data.target }), None)
}

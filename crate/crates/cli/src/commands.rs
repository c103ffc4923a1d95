//! Subcommand implementations.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use archlens::cluster::{cluster_characters, cluster_vocabulary, read_coords_csv, write_cluster_vocabulary_csv, ClusterOptions, KMeansConfig};
use archlens::diachronic::{centrality_series, ratio_series, select_top_characters, TrendSeries};
use archlens::distinct::{group_distinctiveness, top_attributes, write_rows_csv, Group, Sign};
use archlens::eval::{cross_validate, error_over_time, make_splits, write_predictions_csv, ModelSpec};
use archlens::featurize::{FeatureKind, Featurizer};
use archlens::io::{apply_labels, read_characters_file, read_embeddings, read_labels, write_characters_file, write_embeddings};
use archlens::linear::{self, ModelKind, TrainConfig};
use archlens::model::{validate_dataset, ValidationConfig};
use archlens::synth::{planted_corpus, PlantedConfig};
use archlens::{Dataset, Label};
use thiserror::Error;

use crate::args::{ClusterArgs, Command, DataArgs, DetectArgs, EvalArgs, FeatureArg, ModelArg, ModelArgs, SynthArgs, TrendArgs, ValidateArgs, ZscoreArgs};
use crate::svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0} validation finding(s)")]
    Findings(usize),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: archlens::Error },
    #[error(transparent)]
    Lib(#[from] archlens::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Findings(_) => 1,
            CliError::Input { .. } | CliError::Lib(_) | CliError::Io(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Eval(a) => eval(a),
        Command::Detect(a) => detect(a),
        Command::Zscore(a) => zscore(a),
        Command::Cluster(a) => cluster(a),
        Command::Trend(a) => trend(a),
        Command::Synth(a) => synth(a),
    }
}

fn at<T>(path: &Path, r: archlens::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

fn load(characters: &Path, embeddings: Option<&Path>, labels: Option<&Path>) -> CliResult<Dataset> {
    let mut dataset = at(characters, read_characters_file(characters))?;
    if let Some(p) = embeddings {
        dataset.embeddings = Some(at(p, read_embeddings(p))?);
    }
    if let Some(p) = labels {
        let map = at(p, File::open(p).map_err(archlens::Error::from).and_then(read_labels))?;
        at(p, apply_labels(&mut dataset, &map))?;
    }
    Ok(dataset)
}

fn load_data(data: &DataArgs) -> CliResult<Dataset> {
    load(&data.characters, data.embeddings.as_deref(), data.labels.as_deref())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn validate(args: ValidateArgs) -> CliResult<()> {
    if args.min_year > args.max_year {
        return Err(CliError::Usage("--min-year exceeds --max-year".into()));
    }
    let dataset = load_data(&args.data)?;
    let findings = validate_dataset(&dataset, &ValidationConfig { year_range: args.min_year..=args.max_year });
    let mut out = std::io::stdout().lock();
    for f in &findings {
        writeln!(out, "{f}")?;
    }
    if findings.is_empty() {
        writeln!(out, "ok: {} characters", dataset.len())?;
        Ok(())
    } else {
        Err(CliError::Findings(findings.len()))
    }
}

fn featurizer(m: &ModelArgs) -> Featurizer {
    match m.features {
        FeatureArg::Bow => Featurizer::Bow { vocab_size: m.vocab_size, categories: m.categories.clone() },
        FeatureArg::Emb => Featurizer::Embedding,
    }
}

fn model_spec(m: &ModelArgs, kind: FeatureKind) -> CliResult<ModelSpec> {
    if !(m.lambda > 0.0 && m.lambda.is_finite()) {
        return Err(CliError::Usage("--lambda must be positive".into()));
    }
    if m.max_epochs == 0 || m.vocab_size == 0 {
        return Err(CliError::Usage("--max-epochs and --vocab-size must be positive".into()));
    }
    let model = match m.model {
        ModelArg::Logreg => ModelKind::LogReg,
        ModelArg::Svm => ModelKind::LinearSvm,
    };
    let config = TrainConfig { l2_lambda: m.lambda, max_epochs: m.max_epochs, seed: m.seed, ..TrainConfig::for_features(kind) };
    Ok(ModelSpec { kind: model, config })
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let featurizer = featurizer(&args.model);
    let spec = model_spec(&args.model, featurizer.kind())?;
    let dataset = load_data(&args.data)?;
    fs::create_dir_all(&args.out)?;

    let plan = make_splits(&dataset, args.scheme, args.model.seed)?;
    let outcome = cross_validate(&dataset, &featurizer, &spec, &plan)?;
    let report = &outcome.report;
    report.write_report(create(&args.out.join("report.txt"))?)?;
    report.write_fold_csv(create(&args.out.join("folds.csv"))?)?;
    write_predictions_csv(&outcome.predictions, create(&args.out.join("predictions.csv"))?)?;
    let errors = error_over_time(&outcome.predictions, args.bin_width);
    errors.write_csv(create(&args.out.join("error_over_time.csv"))?)?;
    if args.svg {
        let chart = svg::line_chart("Misclassification rate over time", "year", "error rate", &errors.xy(), None);
        write_text(&args.out.join("error_over_time.svg"), &chart)?;
    }
    println!("balanced_accuracy={}", report.balanced_accuracy());
    Ok(())
}

/// Attaches a quadratic fit when the series has enough distinct bins.
fn fitted(series: TrendSeries, name: &str) -> TrendSeries {
    match series.clone().with_fit() {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{name}: no quadratic fit ({e})");
            series
        }
    }
}

fn series_chart(series: &TrendSeries, title: &str, y_label: &str) -> String {
    let fit = series.fit;
    let curve = fit.as_ref().map(|f| move |x: f64| f.eval(x));
    match &curve {
        Some(c) => svg::line_chart(title, "year", y_label, &series.xy(), Some(c)),
        None => svg::line_chart(title, "year", y_label, &series.xy(), None),
    }
}

fn detect(args: DetectArgs) -> CliResult<()> {
    let featurizer = featurizer(&args.model);
    let spec = model_spec(&args.model, featurizer.kind())?;
    let train = load(&args.train_characters, args.train_embeddings.as_deref(), args.train_labels.as_deref())?;
    let corpus = load(&args.corpus_characters, args.corpus_embeddings.as_deref(), None)?;
    if corpus.is_empty() {
        return Err(CliError::Input {
            path: args.corpus_characters.clone(),
            source: archlens::Error::InvalidInput("empty corpus".into()),
        });
    }
    fs::create_dir_all(&args.out)?;

    let labeled = train.labeled_indices();
    let fitted_features = featurizer.fit(&train, &labeled)?;
    let x = fitted_features.transform(&train, &labeled)?;
    let y: Vec<Label> = labeled.iter().filter_map(|&i| train.characters[i].label).collect();
    let model = linear::train(&x, &y, spec.kind, &spec.config)?;
    model.save(args.out.join("model.clmd"))?;
    if let Some(vocab) = fitted_features.vocabulary() {
        vocab.write_csv(create(&args.out.join("vocabulary.csv"))?)?;
    }

    let k = usize::try_from(args.top_k).map_err(|_| CliError::Usage("--top-k too large".into()))?;
    let retained = select_top_characters(&corpus, k)?;
    let mut predicted = HashMap::with_capacity(retained.len());
    let mut w = csv::Writer::from_writer(create(&args.out.join("predictions.csv"))?);
    w.write_record(["character_id", "novel_id", "year", "score", "label"]).map_err(archlens::Error::from)?;
    for c in &retained.characters {
        let score = model.decision_score(&fitted_features.transform_one(&retained, c)?)?;
        let label = linear::label_for_score(score);
        w.write_record([c.character_id.as_str(), &c.novel_id, &c.year.to_string(), &score.to_string(), label.as_str()])
            .map_err(archlens::Error::from)?;
        predicted.insert(c.character_id.clone(), label);
    }
    w.flush()?;

    let ratio = fitted(ratio_series(&retained.characters, &predicted, args.bin_width)?, "ratio series");
    ratio.write_csv(create(&args.out.join("ratio.csv"))?)?;
    let detectives: HashSet<String> =
        predicted.iter().filter(|(_, l)| l.is_detective()).map(|(id, _)| id.clone()).collect();
    let centrality = fitted(centrality_series(&retained.characters, &detectives, args.bin_width), "centrality series");
    centrality.write_csv(create(&args.out.join("centrality.csv"))?)?;
    if args.svg {
        write_text(&args.out.join("ratio.svg"), &series_chart(&ratio, "Detective ratio", "share of characters"))?;
        write_text(&args.out.join("centrality.svg"), &series_chart(&centrality, "Detective centrality", "mention ratio"))?;
    }
    println!("retained={} detectives={}", retained.len(), detectives.len());
    Ok(())
}

fn read_groups(path: &Path) -> CliResult<HashMap<String, Group>> {
    let parse = || -> archlens::Result<HashMap<String, Group>> {
        let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
        let headers = rdr.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| archlens::Error::Format(format!("groups CSV is missing column `{name}`")))
        };
        let (ii, gi) = (column("character_id")?, column("group")?);
        let mut out = HashMap::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let group = match record.get(gi).map(str::trim) {
                Some("1") => Group::One,
                Some("2") => Group::Two,
                other => {
                    return Err(archlens::Error::Parse { line: i + 2, message: format!("group must be 1 or 2, got {other:?}") })
                }
            };
            out.insert(record.get(ii).unwrap_or_default().trim().to_string(), group);
        }
        Ok(out)
    };
    at(path, parse())
}

fn zscore(args: ZscoreArgs) -> CliResult<()> {
    let dataset = load_data(&args.data)?;
    let partition = match &args.groups {
        Some(p) => read_groups(p)?,
        None => dataset
            .characters
            .iter()
            .filter_map(|c| c.label.map(|l| (c.character_id.clone(), if l.is_detective() { Group::One } else { Group::Two })))
            .collect(),
    };
    let table = group_distinctiveness(&dataset.characters, &partition, &args.categories)?;
    table.write_csv(create(&args.out)?)?;
    let top = top_attributes(&table, args.top, Sign::Both);
    write_rows_csv(&top, create(&args.out.with_extension("top.csv"))?)?;
    if args.svg {
        let bars: Vec<(String, f64)> = top.iter().map(|r| (format!("{}/{}", r.category, r.lemma), r.normalized_z)).collect();
        write_text(&args.out.with_extension("svg"), &svg::bar_chart("Most distinctive attributes", &bars))?;
    }
    println!("rows={}", table.rows.len());
    Ok(())
}

fn cluster(args: ClusterArgs) -> CliResult<()> {
    let coords = match &args.coords {
        Some(p) => Some(at(p, File::open(p).map_err(archlens::Error::from).and_then(|f| read_coords_csv(BufReader::new(f))))?),
        None => None,
    };
    if args.on_2d && coords.is_none() {
        log::info!("--on-2d without --coords clusters the PCA projection");
    }
    let dataset = load_data(&args.data)?;
    fs::create_dir_all(&args.out)?;
    let ids: Vec<String> = dataset
        .characters
        .iter()
        .filter(|c| args.all || c.label == Some(Label::Detective))
        .map(|c| c.character_id.clone())
        .collect();
    let restarts = usize::try_from(args.restarts).map_err(|_| CliError::Usage("--restarts too large".into()))?;
    let config = KMeansConfig { restarts, ..KMeansConfig::new(args.k, args.seed) };
    let options = ClusterOptions { coords: coords.as_ref(), on_2d: args.on_2d };
    let result = cluster_characters(&dataset, &ids, &config, &options)?;
    result.write_csv(create(&args.out.join("assignments.csv"))?)?;
    let vocab = cluster_vocabulary(&dataset.characters, &result, args.top, &args.categories)?;
    write_cluster_vocabulary_csv(&vocab, create(&args.out.join("vocabulary.csv"))?)?;
    let sizes: Vec<String> = result.sizes().iter().map(ToString::to_string).collect();
    write_text(&args.out.join("summary.txt"), &format!("k={}\ninertia={}\nsizes={}\n", result.k, result.inertia, sizes.join(",")))?;
    if args.svg {
        let pts: Vec<(f64, f64, usize)> =
            result.members.iter().filter_map(|m| m.coords.map(|(x, y)| (x, y, m.cluster))).collect();
        write_text(&args.out.join("clusters.svg"), &svg::scatter("Character clusters", &pts))?;
    }
    println!("k={} inertia={}", result.k, result.inertia);
    Ok(())
}

fn trend(args: TrendArgs) -> CliResult<()> {
    let file = File::open(&args.input).map_err(|e| CliError::Input { path: args.input.clone(), source: e.into() })?;
    let series = at(&args.input, TrendSeries::read_csv(BufReader::new(file)))?;
    let series = series.with_fit()?;
    series.write_csv(create(&args.out)?)?;
    if args.svg {
        write_text(&args.out.with_extension("svg"), &series_chart(&series, "Trend", "value"))?;
    }
    if let Some(f) = &series.fit {
        println!("a={} b={} c={}", f.a, f.b, f.c);
    }
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult<()> {
    if args.dim == 0 || args.separation.is_nan() || args.separation < 0.0 || args.authors == 0 || args.novels_per_author == 0 {
        return Err(CliError::Usage("--dim, --authors and --novels-per-author must be positive".into()));
    }
    let config = PlantedConfig {
        detectives: args.detectives,
        others: args.others,
        authors: args.authors,
        novels_per_author: args.novels_per_author,
        embedding_dim: args.dim,
        separation: args.separation,
        detectives_from: args.detectives_from,
        seed: args.seed,
        ..Default::default()
    };
    if args.detectives > 0 && config.detectives_from.is_some_and(|y| y > config.years.1) {
        return Err(CliError::Usage(format!("--detectives-from must not exceed {}", config.years.1)));
    }
    let mut dataset = planted_corpus(&config);
    if args.unlabeled {
        dataset.characters.iter_mut().for_each(|c| c.label = None);
    }
    fs::create_dir_all(&args.out)?;
    write_characters_file(&dataset.characters, args.out.join("characters.jsonl"))?;
    if let Some(m) = &dataset.embeddings {
        write_embeddings(m, args.out.join("embeddings.cemb"))?;
    }
    println!("characters={}", dataset.len());
    Ok(())
}

//! Experiment pipeline behavior through the library API.

mod common;

use neurec::config::{load_config, ExperimentConfig, ModelKind};
use neurec::experiment::{
    csv_report, emit_report, load_dataset, read_result, recommend_top_n, run_experiment_on, run_split, run_sweep_on,
    ReportFormat, SweepParam, TrainedModel,
};
use neurec::io;
use neurec::neurec_core::data::split_holdout;
use neurec::neurec_core::models::{NeuRecModel, Variant};
use neurec::neurec_core::rng;
use tempfile::tempdir;

fn config(dir: &std::path::Path, model: &str) -> ExperimentConfig {
    let log = common::write_log(dir, 30, 20, 4);
    load_config(None, &common::quick_overrides(&log, &dir.join("runs"), model)).unwrap()
}

#[test]
fn zero_epochs_evaluates_the_initial_model() {
    let dir = tempdir().unwrap();
    let mut cfg = config(dir.path(), "u_neurec");
    cfg.train.epochs = 0;
    let (matrix, _) = load_dataset(&cfg).unwrap();
    let (split, model, result) = run_split(&cfg, &matrix, 7).unwrap();
    assert!(result.epoch_losses.is_empty());

    let train_cfg = neurec::neurec_core::models::TrainConfig { seed: 7, ..cfg.train.clone() };
    let init =
        NeuRecModel::init(Variant::UserBased, matrix.num_users(), matrix.num_items(), &train_cfg, &mut rng::seeded(7))
            .unwrap();
    assert_eq!(model, TrainedModel::NeuRec(init.clone()));
    assert_eq!(TrainedModel::NeuRec(init).evaluate(&split).unwrap(), result.report);
}

#[test]
fn single_value_sweep_matches_a_plain_run() {
    let dir = tempdir().unwrap();
    let cfg = config(dir.path(), "u_neurec");
    let (matrix, ids) = load_dataset(&cfg).unwrap();
    let table = run_sweep_on(&cfg, SweepParam::K, &["4".to_string()], &matrix, &ids, None).unwrap();
    let plain = run_experiment_on(&cfg, &matrix, &ids, None).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].result.mean, plain.mean);
    assert_eq!(table.rows[0].result.std, plain.std);
    assert_eq!(table.rows[0].result.name, "experiment-k-4");
    let csv = table.to_csv();
    assert!(csv.starts_with("param,value,P@5,P@10,R@5,R@10,MAP,MRR,NDCG\nk,4,"));
}

#[test]
fn artifacts_reload_to_the_same_report() {
    let dir = tempdir().unwrap();
    for model in ["u_neurec", "i_neurec", "bpr_mf", "mostpop", "slim"] {
        let cfg = config(dir.path(), model);
        let (matrix, ids) = load_dataset(&cfg).unwrap();
        let out = dir.path().join(model);
        let result = run_experiment_on(&cfg, &matrix, &ids, Some(&out)).unwrap();
        assert_eq!(result.splits.len(), 2);
        assert!(result.std.is_some());
        for split_result in &result.splits {
            let seed_dir = out.join(format!("seed-{}", split_result.seed));
            let split = io::read_split_path(&seed_dir.join("split.txt")).unwrap();
            assert_eq!(split, split_holdout(&matrix, cfg.ratio, split_result.seed).unwrap());
            let file = std::fs::read_dir(&seed_dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("model."))
                .unwrap();
            let reloaded = TrainedModel::load(&file).unwrap();
            assert_eq!(reloaded.evaluate(&split).unwrap(), split_result.report, "{model}");
            assert_eq!(reloaded.num_parameters(), split_result.num_parameters);
        }
        assert_eq!(std::fs::read_to_string(out.join("summary.csv")).unwrap(), csv_report(&result));
        let reread = read_result(&out.join("result.json")).unwrap();
        assert_eq!(reread, result);
        assert_eq!(io::read_ids(&out.join("ids.tsv")).unwrap(), ids);
        let reparsed = neurec::config::load_config(Some(&std::fs::read_to_string(out.join("config.txt")).unwrap()), &[]);
        assert_eq!(reparsed.unwrap().to_pairs()[1..], cfg.to_pairs()[1..]);
    }
}

#[test]
fn json_report_round_trips() {
    let dir = tempdir().unwrap();
    let cfg = config(dir.path(), "mostpop");
    let (matrix, ids) = load_dataset(&cfg).unwrap();
    let result = run_experiment_on(&cfg, &matrix, &ids, None).unwrap();
    let path = dir.path().join("r.json");
    emit_report(&result, ReportFormat::Json, &path).unwrap();
    assert_eq!(read_result(&path).unwrap(), result);
    assert_eq!(result.model, ModelKind::Mostpop);
}

#[test]
fn recommendations_are_unseen_and_best_first() {
    let dir = tempdir().unwrap();
    let cfg = config(dir.path(), "mostpop");
    let (matrix, ids) = load_dataset(&cfg).unwrap();
    let split = split_holdout(&matrix, 0.8, 1).unwrap();
    let (model, _) = TrainedModel::train(cfg.model, &cfg.train, &cfg.slim, &split.train).unwrap();
    let TrainedModel::MostPop(pop) = &model else { panic!("expected mostPOP") };
    let user = ids.user_id(3).unwrap();
    let items = recommend_top_n(&model, &split, &ids, user, 5).unwrap();
    assert_eq!(items.len(), 5);
    let idx: Vec<usize> = items.iter().map(|i| ids.item_index(i).unwrap()).collect();
    assert!(idx.iter().all(|&i| !split.train.contains(3, i)));
    assert!(idx.windows(2).all(|w| pop.scores()[w[0]] >= pop.scores()[w[1]]));
    let unseen = matrix.num_items() - split.train.row(3).len();
    assert_eq!(recommend_top_n(&model, &split, &ids, user, 10_000).unwrap().len(), unseen);
    let err = recommend_top_n(&model, &split, &ids, "nobody", 5).unwrap_err().to_string();
    assert!(err.contains("nobody") && err.contains("30 known"), "{err}");
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempdir().unwrap();
    let cfg = config(dir.path(), "u_neurec");
    let (matrix, ids) = load_dataset(&cfg).unwrap();
    let a = run_experiment_on(&cfg, &matrix, &ids, None).unwrap();
    let b = run_experiment_on(&cfg, &matrix, &ids, None).unwrap();
    assert_eq!(csv_report(&a), csv_report(&b));
    for (x, y) in a.splits.iter().zip(&b.splits) {
        assert_eq!(x.report, y.report);
        assert_eq!(x.epoch_losses, y.epoch_losses);
    }
}

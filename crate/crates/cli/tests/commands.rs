use std::path::Path;

use dpm_cli::config::{expand, parse_single};
use dpm_cli::run::{cmd_eval, cmd_train, load_record, RunStatus, METRICS_FILE};
use dpm_cli::sweep::{cmd_sweep, regenerate_summary, summary_header, SUMMARY_FILE};
use dpm_cli::{main_with_args, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use dpm_core::diffnet::write_checkpoint;
use dpm_core::pdes::PdeId;
use dpm_core::sampling::Segment;
use dpm_core::{LayerSpec, NetworkParams};

fn tiny(out: &Path, method: &str, extra: &str) -> String {
    format!(
        r#"
[experiment]
pde = "viscous-burgers"
method = "{method}"
seeds = [3]
output_dir = {out:?}

[network]
depth = 2
width = 6

[trainer]
max_epochs = 4
{extra}

[sampling]
n_u = 20
n_f = 64
"#
    )
}

#[test]
fn one_epoch_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let text = tiny(dir.path(), "pinn-d2", "").replace("max_epochs = 4", "max_epochs = 1");
    let records = cmd_train(&parse_single(&text, None).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r.file.status, RunStatus::Completed);
    assert_eq!(r.file.epochs, 1);
    for f in ["config.toml", "history.csv", "checkpoint.txt", "metrics.csv", "record.toml"] {
        assert!(r.dir.join(f).is_file(), "{f}");
    }
    let history = std::fs::read_to_string(r.dir.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    assert_eq!(load_record(&r.dir).unwrap(), *r);
    let metrics = std::fs::read_to_string(r.dir.join(METRICS_FILE)).unwrap();
    assert!(metrics.starts_with("pde,method,segment,rel_l2,explained_variance,max_error,mean_abs_error\n"));
    assert_eq!(metrics.lines().count(), 4);
}

#[test]
fn repeated_runs_give_identical_metrics() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let read = |out: &Path| {
        let r = cmd_train(&parse_single(&tiny(out, "pinn-d1", ""), None).unwrap()).unwrap();
        (
            std::fs::read(r[0].dir.join(METRICS_FILE)).unwrap(),
            std::fs::read(r[0].dir.join("history.csv")).unwrap(),
        )
    };
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn zero_network_has_unit_relative_error() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("zero.txt");
    let zero = NetworkParams::zeros(LayerSpec::new(4, 2, 1, false)).unwrap();
    write_checkpoint(&zero, std::fs::File::create(&ck).unwrap()).unwrap();
    let (m, report) = cmd_eval(&ck, PdeId::ViscousBurgers, Segment::Test, dir.path()).unwrap();
    assert_eq!(m.rel_l2, 1.0);
    let again = cmd_eval(&ck, PdeId::ViscousBurgers, Segment::Test, dir.path()).unwrap().0;
    assert_eq!(m, again);
    assert!(report.is_file());
    // one output channel cannot describe the complex NLS field
    assert!(cmd_eval(&ck, PdeId::Nls, Segment::Test, dir.path()).is_err());
}

#[test]
fn sweep_selects_by_validation_and_regenerates() {
    let dir = tempfile::tempdir().unwrap();
    let text = tiny(dir.path(), "pinn", "learning_rate = [0.005, 0.001]");
    let configs = expand(&text, None).unwrap();
    assert_eq!(configs.len(), 2);
    let outcome = cmd_sweep(&configs, 2).unwrap();
    assert_eq!(outcome.records.len(), 2);
    assert_eq!(outcome.failures(), 0);

    let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let mut rows = csv::Reader::from_reader(summary.as_bytes());
    let header: Vec<String> = rows.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, summary_header());
    assert_eq!(header.len(), 17);
    assert_eq!(&header[1..5], ["PINN_L2", "PINN_EV", "PINN_Max", "PINN_MAE"]);
    let row = rows.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "viscous-burgers");
    let best = outcome
        .records
        .iter()
        .min_by(|a, b| {
            let v = |r: &dpm_cli::run::RunRecord| r.metrics_for(Segment::Validation).unwrap().rel_l2;
            v(a).total_cmp(&v(b))
        })
        .unwrap();
    let test = best.metrics_for(Segment::Test).unwrap();
    assert_eq!(row[1].parse::<f64>().unwrap(), test.rel_l2);
    assert!(row[5].is_empty(), "no PINN-R runs in this sweep");

    std::fs::remove_file(dir.path().join(SUMMARY_FILE)).unwrap();
    regenerate_summary(dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap(), summary);
}

#[test]
fn plots_are_written_with_stable_names() {
    let dir = tempfile::tempdir().unwrap();
    let r = cmd_train(&parse_single(&tiny(dir.path(), "pinn-d2", ""), None).unwrap()).unwrap();
    let out = dir.path().join("plots");
    let files = dpm_cli::plot::cmd_plot(&r[0].dir, None, Some(&out)).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "viscous-burgers-pinn-d2-heatmap.svg",
            "viscous-burgers-pinn-d2-losses.svg",
            "viscous-burgers-pinn-d2-snapshot-0.83.svg",
            "viscous-burgers-pinn-d2-snapshot-0.98.svg",
        ]
    );
    let losses = std::fs::read_to_string(out.join(&names[1])).unwrap();
    assert!(losses.contains("pulling target"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    assert_eq!(main_with_args(["dpm", "solve-ref", "--pde", "heat"]), EXIT_USAGE);
    assert_eq!(main_with_args(["dpm", "frobnicate"]), EXIT_USAGE);
    assert_eq!(
        main_with_args(["dpm", "solve-ref", "--pde", "viscous-burgers", "--segment", "test", "--output-dir", &out]),
        EXIT_OK
    );

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, tiny(dir.path(), "pinn-d2", "alpha = 10.0")).unwrap();
    assert_eq!(main_with_args(["dpm", "train", cfg.to_str().unwrap()]), EXIT_USAGE);
    std::fs::write(&cfg, "[experiment]\npde = \"nls\"\nmethod = []\n").unwrap();
    assert_eq!(main_with_args(["dpm", "sweep", cfg.to_str().unwrap()]), EXIT_USAGE);

    let missing = dir.path().join("nope.txt");
    assert_eq!(
        main_with_args(["dpm", "eval", "--checkpoint", missing.to_str().unwrap(), "--pde", "nls", "--output-dir", &out]),
        EXIT_RUNTIME
    );

    let good = dir.path().join("good.toml");
    std::fs::write(&good, tiny(dir.path(), "pinn", "")).unwrap();
    assert_eq!(main_with_args(["dpm", "train", good.to_str().unwrap()]), EXIT_OK);
}

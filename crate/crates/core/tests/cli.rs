use std::path::Path;
use std::process::{Command, Output};

fn lms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lms")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "n_models=16\nn_train=8\nn_dev=4\nn_test=4\nn_langs=4\nd_model=6\nd_lang=5\nrank=3\n";

/// Generates the small dataset into `dir` and returns the data flags.
fn small_dataset(dir: &Path) -> Vec<String> {
    let cfg = dir.join("synth.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.join("data");
    let o = lms(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut exp = std::fs::read_to_string(out.join("experiment.cfg")).unwrap();
    exp.push_str("hidden=16\noutput=8\nlearning_rate=1e-3\nbatch_size=8\n");
    std::fs::write(out.join("experiment.cfg"), exp).unwrap();
    let p = |f: &str| out.join(f).to_str().unwrap().to_string();
    vec![
        "--features".into(),
        p("features.tsv"),
        "--langvecs".into(),
        p("langvec.tsv"),
        "--perf".into(),
        p("perf.tsv"),
        "--split".into(),
        p("split.tsv"),
        "--config".into(),
        p("experiment.cfg"),
    ]
}

fn with<'a>(cmd: &'a str, data: &'a [String], extra: &'a [&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(data.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("synth.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    for d in ["a", "b"] {
        let out = tmp.path().join(d);
        assert!(lms(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"])
            .status
            .success());
    }
    for f in ["features.tsv", "langvec.tsv", "perf.tsv", "split.tsv", "oracle.tsv", "experiment.cfg"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn gradcheck_reports_and_passes() {
    let o = lms(&["gradcheck", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("max relative error"));
}

#[test]
fn randomized_commands_need_a_seed() {
    for cmd in ["gen", "gradcheck", "bootstrap", "train", "grid", "eval"] {
        let o = lms(&[cmd]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("--seed"), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = lms(&["gradcheck", "--seed", "1", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn help_shows_defaults() {
    let o = lms(&["eval", "--help"]);
    let text = stdout(&o);
    assert!(o.status.success());
    for flag in ["--features", "--langvecs", "--perf", "--split", "--config", "--report-out", "--seed", "--bins", "--jobs"] {
        assert!(text.contains(flag), "{flag}");
    }
    assert!(text.contains("[default: 10]"));
    assert!(stdout(&lms(&["bootstrap", "--help"])).contains("--B <B>"));
    assert!(stdout(&lms(&["select", "--help"])).contains("[default: lms]"));
}

#[test]
fn eval_without_split_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path());
    let split = data.iter().position(|a| a == "--split").unwrap() + 1;
    std::fs::remove_file(&data[split]).unwrap();
    let report = tmp.path().join("r.tsv");
    let o = lms(&with("eval", &data, &["--report-out", report.to_str().unwrap(), "--seed", "1"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("split.tsv"), "{}", stderr(&o));
}

#[test]
fn validate_flags_broken_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path());
    assert_eq!(lms(&with("validate", &data, &[])).status.code(), Some(0));
    let features = &data[data.iter().position(|a| a == "--features").unwrap() + 1];
    let text = std::fs::read_to_string(features).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("m000\tl02\t")).collect();
    std::fs::write(features, kept.join("\n")).unwrap();
    let o = lms(&with("validate", &data, &[]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("m000"), "{}", stdout(&o));
}

#[test]
fn train_select_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset(tmp.path());
    let params = tmp.path().join("params.txt");
    let p = params.to_str().unwrap();
    let o = lms(&with("train", &data, &["--params-out", p, "--seed", "4"]));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("epoch\tloss\tpair_count\n"));

    let o = lms(&with("select", &data, &["--params-in", p]));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("lms\tm"));
    let o = lms(&with("select", &data, &["--strategy", "pivot_dev"]));
    assert!(stdout(&o).contains("pivot="));
    assert_eq!(lms(&with("select", &data, &[])).status.code(), Some(1));
    assert_eq!(lms(&with("select", &data, &["--strategy", "best"])).status.code(), Some(2));

    let report = tmp.path().join("report.tsv");
    let o = lms(&with("eval", &data, &["--report-out", report.to_str().unwrap(), "--seed", "2", "--bins", "4"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("target\tstrategy\tchosen_model\ttest_score\tdelta_en_dev\tregret\tpairwise_acc\ttau\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("AVG\t")).count(), 5);
    for lang in ["l01", "l02", "l03", "l04"] {
        let h = std::fs::read_to_string(tmp.path().join(format!("report.hist.{lang}.tsv"))).unwrap();
        assert_eq!(h.lines().count(), 5);
        let total: usize = h.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 4);
    }
}

#[test]
fn significance_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d.txt");
    std::fs::write(&d, "1\n-1\n").unwrap();
    let o = lms(&["bootstrap", "--deltas", d.to_str().unwrap(), "--exhaustive", "--seed", "0"]);
    assert_eq!(stdout(&o), "p\t0.75\n");
    let o = lms(&["bootstrap", "--deltas", d.to_str().unwrap(), "--B", "500", "--seed", "9"]);
    assert!(o.status.success());
    let (a, b) = (tmp.path().join("a.txt"), tmp.path().join("b.txt"));
    std::fs::write(&a, "2\n4\n").unwrap();
    std::fs::write(&b, "1\n3\n").unwrap();
    let o = lms(&["ztest", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.starts_with("z\t0.5\np\t0.308537"), "{text}");
}

use std::path::PathBuf;

use bnlu_cli::{run, Streams};

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bnlu(args: &[&str], input: &str) -> Output {
    let mut stdin = input.as_bytes();
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("bnlu").chain(args.iter().copied()),
        &mut Streams {
            stdin: &mut stdin,
            stdout: &mut stdout,
            stderr: &mut stderr,
        },
    );
    Output {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bnlu-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn s(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_two_with_one_prefixed_line() {
    for args in [&["frobnicate"][..], &["train", "--data", "x"], &["gen-corpus", "--out", "x", "--intents", "1"]] {
        let out = bnlu(args, "");
        assert_eq!(out.code, 2, "{args:?}");
        assert!(out.stderr.starts_with("error:usage: "), "{}", out.stderr);
        assert!(out.stdout.is_empty());
    }
    let help = bnlu(&["--help"], "");
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("data-validate"));
}

#[test]
fn runtime_errors_exit_one_with_category() {
    let missing = temp("missing");
    let out = bnlu(&["data-validate", "--data", &s(&missing)], "");
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("error:data: "), "{}", out.stderr);
    assert_eq!(out.stderr.lines().count(), 1);

    let data = temp("bad-preset");
    assert_eq!(bnlu(&["gen-corpus", "--out", &s(&data), "--intents", "3", "--examples", "4"], "").code, 0);
    let out = bnlu(&["train", "--data", &s(&data), "--pipeline", "P9", "--out", &s(&data.join("m"))], "");
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("error:config: "), "{}", out.stderr);

    let out = bnlu(&["shell", "--model", &s(&missing)], "");
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("error:model: "), "{}", out.stderr);
    std::fs::remove_dir_all(&data).unwrap();
}

#[test]
fn generated_corpus_validates() {
    let data = temp("validate");
    let out = bnlu(&["gen-corpus", "--out", &s(&data)], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    let out = bnlu(&["data-validate", "--data", &s(&data)], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("ok: 120 examples, 12 intents, 3 entity types"), "{}", out.stdout);
    std::fs::remove_dir_all(&data).unwrap();
}

#[test]
fn train_evaluate_and_chat() {
    let root = temp("e2e");
    let (data, model, report) = (root.join("data"), root.join("model"), root.join("report"));
    assert_eq!(bnlu(&["gen-corpus", "--out", &s(&data), "--intents", "4", "--examples", "6"], "").code, 0);

    let out = bnlu(
        &["train", "--data", &s(&data), "--pipeline", "P1", "--out", &s(&model), "--epochs", "30", "--policy-epochs", "30"],
        "",
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(model.join("model.json").is_file());
    let loss = std::fs::read_to_string(model.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 31);

    let out = bnlu(&["evaluate", "--data", &s(&data), "--pipeline", "P1", "--out", &s(&report), "--epochs", "30"], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    for f in ["metrics.csv", "confusion.csv", "confusion.svg", "histogram.csv", "histogram.svg", "predictions.csv"] {
        assert!(report.join(f).is_file(), "{f}");
    }

    let out = bnlu(&["shell", "--model", &s(&model), "--verbose"], "hello\n\n/quit\nnever read\n");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().any(|l| l.starts_with("bot: ")), "{}", out.stdout);
    assert!(out.stdout.lines().any(|l| l.starts_with("  [")), "{}", out.stdout);
    std::fs::remove_dir_all(&root).unwrap();
}

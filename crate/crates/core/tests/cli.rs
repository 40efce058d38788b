use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use teaching_style::features::GroundTruth;
use teaching_style::space::AdjectiveLexicon;

fn tsss(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsss"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["synth", "--n", "200", "--seed", "42", "--out", "a.jsonl"]
        )),
        0
    );
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["synth", "--n", "200", "--seed", "42", "--out", "b.jsonl"]
        )),
        0
    );
    for ext in ["jsonl", "truth.json", "grouping.json"] {
        let a = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
    let c = tsss(
        dir.path(),
        &["synth", "--n", "200", "--seed", "43", "--out", "c.jsonl"],
    );
    assert_eq!(code(&c), 0);
    assert_ne!(
        fs::read(dir.path().join("a.jsonl")).unwrap(),
        fs::read(dir.path().join("c.jsonl")).unwrap()
    );
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let zero = tsss(dir.path(), &["synth", "--n", "0", "--out", "x.jsonl"]);
    assert_eq!(code(&zero), 2);
    assert!(stderr(&zero).contains("--n"));
    assert!(!dir.path().join("x.jsonl").exists());
    assert_eq!(
        code(&tsss(dir.path(), &["synth", "--out", "missing/x.jsonl"])),
        2
    );
    assert_eq!(code(&tsss(dir.path(), &["frobnicate"])), 2);
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["train", "--data", "nope.jsonl", "--out", "m.json"]
        )),
        2
    );
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["train", "--variant", "svm", "--data", "d", "--out", "m"]
        )),
        2
    );
    tsss(dir.path(), &["synth", "--n", "20", "--out", "d.jsonl"]);
    let lambda = tsss(
        dir.path(),
        &[
            "train", "--data", "d.jsonl", "--out", "m.json", "--lambda", "1.5",
        ],
    );
    assert_eq!(code(&lambda), 2);
    assert!(stderr(&lambda).contains("lambda"));
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["eval", "--data", "d.jsonl", "--out", "ev", "--folds", "1"]
        )),
        2
    );
}

#[test]
fn sidecar_map_reproduces_noiseless_labels() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["synth", "--n", "50", "--seed", "8", "--out", "d.jsonl"]
        )),
        0
    );
    let truth: GroundTruth =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d.truth.json")).unwrap())
            .unwrap();
    let records = teaching_style::dataset::read_jsonl(&dir.path().join("d.jsonl")).unwrap();
    for r in &records {
        let want = r.label.unwrap();
        let got = truth.apply_groups(&r.groups).unwrap();
        assert!((got.pleasure - want.pleasure).abs() < 1e-12);
        assert!((got.arousal - want.arousal).abs() < 1e-12);
    }
}

#[test]
fn predict_refuses_a_different_grouping() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tsss(d, &["synth", "--n", "30", "--out", "a.jsonl"]);
    tsss(
        d,
        &["synth", "--n", "30", "--paths", "5", "--out", "b.jsonl"],
    );
    let train = tsss(
        d,
        &[
            "train", "--data", "a.jsonl", "--out", "m.json", "--hidden", "4", "--epochs", "1",
        ],
    );
    assert_eq!(code(&train), 0, "{}", stderr(&train));
    assert!(d.join("m.log.csv").exists());
    let out = tsss(
        d,
        &[
            "predict", "--data", "b.jsonl", "--model", "m.json", "--out", "p.csv",
        ],
    );
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("grouping hash mismatch"), "{msg}");
    let b_hash = teaching_style::features::GroupingConfig::from_json(
        &fs::read_to_string(d.join("b.grouping.json")).unwrap(),
    )
    .unwrap()
    .hash();
    assert!(msg.contains(&b_hash), "{msg}");
    assert!(!d.join("p.csv").exists());
}

#[test]
fn map_puts_an_exact_adjective_first() {
    let dir = tempfile::tempdir().unwrap();
    let lex = AdjectiveLexicon::builtin();
    let e = &lex.entries()[7];
    let csv = format!(
        "utterance_id,pleasure,arousal\nu1,{},{}\nu2,0.0,0.0\n",
        e.coord.pleasure, e.coord.arousal
    );
    fs::write(dir.path().join("p.csv"), csv).unwrap();
    assert_eq!(
        code(&tsss(
            dir.path(),
            &["map", "--data", "p.csv", "--out", "m.json", "--k", "3"]
        )),
        0
    );
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(map["u1"][0]["id"], e.id);
    assert_eq!(map["u1"][0]["distance"], 0.0);
    assert_eq!(map["u2"].as_array().unwrap().len(), 3);
}

#[test]
fn gaze_and_lexicon_commands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tsss(
        d,
        &[
            "synth",
            "--kind",
            "gaze",
            "--n",
            "6",
            "--students",
            "10",
            "--out",
            "g.jsonl",
        ],
    );
    assert_eq!(
        code(&tsss(d, &["gaze", "--data", "g.jsonl", "--out", "geo.csv"])),
        0
    );
    assert_eq!(
        code(&tsss(
            d,
            &[
                "gaze",
                "--data",
                "g.jsonl",
                "--polarity",
                "literal",
                "--out",
                "lit.csv"
            ]
        )),
        0
    );
    let geo = fs::read_to_string(d.join("geo.csv")).unwrap();
    let lit = fs::read_to_string(d.join("lit.csv")).unwrap();
    assert_eq!(geo.lines().count(), 11);
    let swap = geo
        .replace(",I\n", ",X\n")
        .replace(",II\n", ",I\n")
        .replace(",X\n", ",II\n");
    assert_eq!(swap, lit);

    tsss(
        d,
        &[
            "synth",
            "--kind",
            "annotations",
            "--n",
            "4",
            "--out",
            "a.jsonl",
        ],
    );
    let out = tsss(d, &["lexicon", "--data", "a.jsonl", "--out", "lex.json"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("cronbach alpha (pleasure)"));
    let lex = AdjectiveLexicon::load(&d.join("lex.json")).unwrap();
    assert!(lex.len() > 20);
    assert_eq!(
        code(&tsss(
            d,
            &[
                "lexicon",
                "--data",
                "a.jsonl",
                "--threshold",
                "6",
                "--out",
                "x.json"
            ]
        )),
        2
    );
}

#[test]
fn commands_leave_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tsss(d, &["synth", "--n", "24", "--out", "d.jsonl"]);
    let before = fs::read(d.join("d.jsonl")).unwrap();
    tsss(
        d,
        &[
            "train", "--data", "d.jsonl", "--out", "m.json", "--hidden", "4", "--epochs", "1",
        ],
    );
    let model = fs::read(d.join("m.json")).unwrap();
    tsss(
        d,
        &[
            "predict", "--data", "d.jsonl", "--model", "m.json", "--out", "p.csv",
        ],
    );
    tsss(
        d,
        &[
            "eval", "--data", "d.jsonl", "--model", "m.json", "--out", "ev",
        ],
    );
    assert_eq!(fs::read(d.join("d.jsonl")).unwrap(), before);
    assert_eq!(fs::read(d.join("m.json")).unwrap(), model);
}

/// synth → train → eval on held-out utterances with the default settings.
#[test]
fn pipeline_reaches_high_ccc_on_held_out_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&tsss(
            d,
            &["synth", "--n", "600", "--seed", "5", "--out", "all.jsonl"]
        )),
        0
    );
    let text = fs::read_to_string(d.join("all.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    fs::write(d.join("train.jsonl"), lines[..500].join("\n") + "\n").unwrap();
    fs::write(d.join("test.jsonl"), lines[500..].join("\n") + "\n").unwrap();
    for split in ["train", "test"] {
        fs::copy(
            d.join("all.grouping.json"),
            d.join(format!("{split}.grouping.json")),
        )
        .unwrap();
    }
    let train = tsss(
        d,
        &[
            "train",
            "--data",
            "train.jsonl",
            "--out",
            "model.json",
            "--seed",
            "1",
        ],
    );
    assert_eq!(code(&train), 0, "{}", stderr(&train));
    let eval = tsss(
        d,
        &[
            "eval",
            "--data",
            "test.jsonl",
            "--model",
            "model.json",
            "--out",
            "report",
        ],
    );
    assert_eq!(code(&eval), 0, "{}", stderr(&eval));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("report/report.json")).unwrap()).unwrap();
    let p = json["mean_pleasure"]["ccc"].as_f64().unwrap();
    let a = json["mean_arousal"]["ccc"].as_f64().unwrap();
    assert!(p >= 0.95 && a >= 0.95, "held-out CCC {p} {a}");
    let csv = fs::read_to_string(d.join("report/report.csv")).unwrap();
    assert!(csv.starts_with("scope,n,p_rmse,p_ccc,a_rmse,a_ccc\n"));
}

use std::path::PathBuf;
use std::process::Command;

use revlab::cli::{
    main_with, parse_config, OutputFormat, TraceRender, UsageError, EXIT_MISMATCH, EXIT_OK,
    EXIT_USAGE,
};
use revlab::goals::GoalId;
use revlab::protocols::ProtocolName;
use revlab::report::DISCLAIMER;
use serde_json::Value;

fn reference(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "reference", name]
        .iter()
        .collect();
    p.display().to_string()
}

fn revlab(args: &[&str], workers: Option<&str>) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_revlab"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("REVLAB_WORKERS", w),
        None => cmd.env_remove("REVLAB_WORKERS"),
    };
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn flags_select_protocol_and_goals() {
    let cfg = parse_config(
        [
            "revlab",
            "--protocol",
            "rtoken",
            "--goals",
            "g2",
            "--change",
        ],
        None,
    )
    .unwrap();
    assert_eq!(cfg.protocol, ProtocolName::Rtoken);
    assert_eq!(cfg.goals, vec![GoalId::G2]);
    assert!(cfg.change_enabled);

    let cfg = parse_config(
        [
            "revlab", "--goals", "G3,g1,g3", "--output", "json", "--trace", "msc",
        ],
        None,
    )
    .unwrap();
    assert_eq!(cfg.goals, vec![GoalId::G1, GoalId::G3]);
    assert_eq!(cfg.output, OutputFormat::Json);
    assert_eq!(cfg.trace_render, TraceRender::Msc);

    let cfg = parse_config(["revlab", "--goals", "all", "--change"], None).unwrap();
    assert_eq!(cfg.goals, GoalId::ALL.to_vec());
}

#[test]
fn bad_input_is_a_usage_error() {
    for argv in [
        vec!["revlab", "--protocol", "plain", "--goals", "g5"],
        vec!["revlab", "--protocol", "xtoken"],
        vec!["revlab", "--goals", "g9"],
        vec!["revlab", "--frobnicate"],
        vec!["revlab", "--vehicles", "0"],
    ] {
        let e = parse_config(argv.clone(), None).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE, "{argv:?}");
    }
    let e = parse_config(["revlab", "--goals", "g9"], None).unwrap_err();
    assert!(e.to_string().contains("g9"));
    assert!(matches!(
        parse_config(["revlab", "--help"], None),
        Err(UsageError::Display(_))
    ));
}

#[test]
fn flags_override_the_config_file() {
    let dir = std::env::temp_dir().join(format!("revlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("scenario.json");
    std::fs::write(&file, r#"{"protocol": "otoken", "change_enabled": true, "bounds": {"max_steps": 9}, "output": "json"}"#).unwrap();
    let path = file.display().to_string();

    let cfg = parse_config(["revlab", "--config", &path], None).unwrap();
    assert_eq!(cfg.protocol, ProtocolName::Otoken);
    assert_eq!(cfg.bounds.max_steps, 9);
    assert_eq!(cfg.goals.len(), 7);

    let cfg = parse_config(
        [
            "revlab",
            "--config",
            &path,
            "--protocol",
            "plain",
            "--max-steps",
            "12",
            "--output",
            "text",
        ],
        None,
    )
    .unwrap();
    assert_eq!(cfg.protocol, ProtocolName::Plain);
    assert_eq!(cfg.bounds.max_steps, 12);
    assert_eq!(cfg.output, OutputFormat::Text);

    std::fs::write(&file, r#"{"protocol": "otoken", "colour": "blue"}"#).unwrap();
    assert_eq!(
        parse_config(["revlab", "--config", &path], None)
            .unwrap_err()
            .exit_code(),
        EXIT_USAGE
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_report_round_trips_and_carries_disclaimers() {
    let out = main_with(
        [
            "revlab",
            "--protocol",
            "rtoken",
            "--goals",
            "g2",
            "--change",
            "--output",
            "json",
            "--deterministic",
        ],
        None,
    );
    assert_eq!(out.exit_code, EXIT_OK);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let mut again = serde_json::to_string_pretty(&v).unwrap();
    again.push('\n');
    assert_eq!(again, out.stdout);
    assert_eq!(v["schema"], 1);
    let g2 = &v["verdicts"][0];
    assert_eq!(g2["outcome"], "counterexample-found");
    assert!(!g2["evidence"]["steps"].as_array().unwrap().is_empty());

    let out = main_with(
        [
            "revlab",
            "--protocol",
            "otoken",
            "--change",
            "--output",
            "json",
            "--deterministic",
        ],
        None,
    );
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    for verdict in v["verdicts"].as_array().unwrap() {
        if verdict["mode"] == "all-traces" {
            assert_eq!(verdict["disclaimer"], DISCLAIMER);
        }
    }
}

#[test]
fn reference_matrices_drive_the_exit_code() {
    let (code, _, _) = revlab(
        &[
            "--protocol",
            "otoken",
            "--goals",
            "all",
            "--change",
            "--expect",
            &reference("otoken.json"),
        ],
        None,
    );
    assert_eq!(code, EXIT_OK);
    let (code, _, _) = revlab(
        &[
            "--protocol",
            "plain",
            "--goals",
            "g5",
            "--change",
            "--expect",
            &reference("plain.json"),
        ],
        None,
    );
    assert_eq!(code, EXIT_OK);
    let (code, _, _) = revlab(
        &[
            "--protocol",
            "rtoken",
            "--goals",
            "all",
            "--change",
            "--expect",
            &reference("rtoken.json"),
        ],
        None,
    );
    assert_eq!(code, EXIT_OK);

    // A wrong reference fails the run but still prints the report.
    let dir = std::env::temp_dir().join(format!("revlab-expect-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let wrong = dir.join("wrong.json");
    std::fs::write(&wrong, r#"{"schema": 1, "protocol": "rtoken", "verdicts": {"g2": "no-counterexample-within-bounds"}}"#).unwrap();
    let (code, stdout, stderr) = revlab(
        &[
            "--protocol",
            "rtoken",
            "--goals",
            "g2",
            "--change",
            "--expect",
            &wrong.display().to_string(),
        ],
        None,
    );
    assert_eq!(code, EXIT_MISMATCH);
    assert!(stdout.contains("counterexample-found"));
    assert!(!stderr.is_empty());
    std::fs::remove_dir_all(&dir).unwrap();

    let (code, _, _) = revlab(
        &[
            "--protocol",
            "rtoken",
            "--expect",
            &reference("otoken.json"),
        ],
        None,
    );
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn binary_exit_codes() {
    assert_eq!(revlab(&[], None).0, EXIT_OK);
    assert_eq!(revlab(&["--help"], None).0, EXIT_OK);
    assert_eq!(revlab(&["--goals", "g6"], None).0, EXIT_USAGE);
    assert_eq!(revlab(&[], Some("many")).0, EXIT_USAGE);
}

#[test]
fn deterministic_json_is_byte_stable_across_workers() {
    let args = [
        "--protocol",
        "rtoken",
        "--change",
        "--goals",
        "all",
        "--output",
        "json",
        "--deterministic",
        "--trace",
        "msc",
    ];
    let (c1, a, _) = revlab(&args, Some("1"));
    let (c2, b, _) = revlab(&args, Some("8"));
    let (c3, c, _) = revlab(&args, Some("8"));
    assert_eq!((c1, c2, c3), (0, 0, 0));
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn msc_marks_the_forged_confirmation() {
    let out = main_with(
        [
            "revlab",
            "--protocol",
            "rtoken",
            "--goals",
            "g2",
            "--change",
            "--trace",
            "msc",
        ],
        None,
    );
    assert!(out.stdout.contains("OSR-REQ (intercepted)"));
    assert!(out.stdout.contains("OSR-CONF (forged)"));
    let honest = main_with(["revlab", "--goals", "g1", "--trace", "msc"], None);
    assert!(!honest.stdout.contains("forged"));
    assert!(honest.stdout.contains("OSR-REQ") && honest.stdout.contains("OSR-CONF"));
}

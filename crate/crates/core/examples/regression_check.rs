//! Drives the command-line front end in-process: compares a run against
//! the shipped reference matrix, then against a deliberately wrong one.

use revlab::cli::main_with;

fn main() {
    let reference = concat!(env!("CARGO_MANIFEST_DIR"), "/../../reference/otoken.json");
    let ok = main_with(
        [
            "revlab",
            "--protocol",
            "otoken",
            "--goals",
            "all",
            "--change",
            "--expect",
            reference,
        ],
        None,
    );
    println!("against {reference}: exit {}", ok.exit_code);
    print!(
        "{}",
        ok.stdout
            .lines()
            .filter(|l| l.starts_with('G') || l.starts_with("reference"))
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );

    let wrong = std::env::temp_dir().join("revlab-wrong-reference.json");
    std::fs::write(
        &wrong,
        r#"{"schema": 1, "protocol": "otoken", "verdicts": {"g2": "counterexample-found"}}"#,
    )
    .expect("write");
    let bad = main_with(
        [
            "revlab",
            "--protocol",
            "otoken",
            "--goals",
            "g2",
            "--change",
            "--expect",
            &wrong.display().to_string(),
        ],
        None,
    );
    println!("\nagainst a wrong reference: exit {}", bad.exit_code);
    print!("{}", bad.stderr);
    let _ = std::fs::remove_file(wrong);
}

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn gcs(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gcs"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_log_wealth(text: &str) -> f64 {
    text.lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn wealth_of_a_single_draw() {
    // one draw of category 1 against m_1 = 0.02 pays 0.5 / 0.02
    let out = stdout(&gcs(&["wealth", "--at", "0.02,0.98"], "1\n"));
    assert!((last_log_wealth(&out) - 25f64.ln()).abs() < 1e-12);
}

#[test]
fn census_wealth_after_two_draws() {
    let out = stdout(&gcs(
        &[
            "wealth",
            "--method",
            "ppr",
            "--population",
            "4",
            "--at",
            "3,1",
        ],
        "1\n1\n",
    ));
    assert!((last_log_wealth(&out) - 0.75f64.ln()).abs() < 1e-12);
    let out = stdout(&gcs(
        &[
            "wealth",
            "--method",
            "wor-kt",
            "--population",
            "4",
            "--at",
            "3,1",
        ],
        "1\n1\n",
    ));
    assert!((last_log_wealth(&out) - 1.5f64.ln()).abs() < 1e-12);
}

#[test]
fn box_input_is_embedded() {
    // the observation sits exactly at the candidate, so no bet can profit
    let out = stdout(&gcs(
        &["wealth", "--method", "up", "--box", "--at", "0.15,0.45,0.4"],
        "0.3,0.9\n",
    ));
    assert!(last_log_wealth(&out).abs() < 1e-12);
}

#[test]
fn confset_dump_matches_the_one_draw_example() {
    let out = stdout(&gcs(&["confset", "--k", "2", "--grid", "4"], "1\n1\n"));
    let active: Vec<&str> = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(active, ["false", "true", "true", "true", "true"]);
}

#[test]
fn audit_stream_reports_bounds() {
    let out = stdout(&gcs(
        &[
            "wor",
            "--stream",
            "--population",
            "2",
            "--k",
            "2",
            "--method",
            "ppr",
        ],
        "1\n",
    ));
    let line: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(line["t"], 1);
    assert_eq!(line["active_count"], 2);
    assert_eq!(line["bounds"][0], serde_json::json!([1, 2]));
    assert_eq!(line["decided"], false);
}

#[test]
fn audit_summary_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("stop.svg");
    let json = dir.path().join("stop.json");
    let o = gcs(
        &[
            "wor",
            "--census",
            "30,15,5",
            "--permutations",
            "20",
            "--json",
            json.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ],
        "",
    );
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 1 + 2 * 20);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wor-kt/ppr stopping time"));
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(doc["summary"]["stop_ratio"]["mean_ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn seeds_change_the_output() {
    let run = |seed: &str| {
        stdout(&gcs(
            &[
                "simulate",
                "--mu",
                "0.5,0.3,0.2",
                "--t",
                "20",
                "--trials",
                "2",
                "--grid",
                "10",
                "--seed",
                seed,
            ],
            "",
        ))
    };
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"preset":"fig3","k":3,"t":10,"trials":2,"delta":0.1,"mu":null,"conc":[6,2.5,1.5],"census":null,"methods":["up","up2-mix"],"seed":9,"grid":10}"#,
    )
    .unwrap();
    let out = stdout(&gcs(
        &[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--trials",
            "3",
        ],
        "",
    ));
    assert_eq!(out.lines().count(), 1 + 2 * 3 * 11);
}

#[test]
fn bad_input_fails_with_a_message() {
    let o = gcs(&["simulate", "--preset", "fig1"], "");
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mu"));
    let o = gcs(&["wealth", "--at", "0.5,0.5"], "3\n");
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = gcs(&["simulate", "--conc", "1,1,1", "--methods", "sanov"], "");
    assert!(!o.status.success());
}

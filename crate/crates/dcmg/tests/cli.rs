use std::process::Command;

fn dcmg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dcmg")).args(args).output().unwrap()
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = dcmg(&["run", "--scenario", "baseline", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("t,v_bus,i_1,"));
    assert!(text.contains("LoadStep:P=1440"));
}

#[test]
fn validate_exit_codes() {
    assert!(dcmg(&["validate", "--scenario", "jam-with-defense"]).status.success());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let json = dcmg::BUILTIN[0].1.replace("\"tau_d\": 0.005", "\"tau_d\": 0.03");
    std::fs::write(&bad, json).unwrap();
    let o = dcmg(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau_d"));

    let o = dcmg(&["run", "--scenario", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!dcmg(&["validate", "--scenario", "/nonexistent.json"]).status.success());
}

#[test]
fn ber_prints_one_row() {
    let o = dcmg(&["ber", "--gamma", "0.01", "--sigma", "0.01", "--samples", "20", "--trials", "10000"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",true"), "{}", lines[1]);
}

#[test]
fn dump_q_shows_the_jammed_rows() {
    let o = dcmg(&["dump-q", "--scenario", "jam-with-defense", "--at", "5.1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# ptch start=5.000000 end=5.180000"));
    assert!(text.contains("transmitted,5,0,0,0,0,1,0,0,0,0"));
    assert!(text.contains("decoded_by_9,5,0,0,0,0,1,0,0,0,0"));
    assert!(!dcmg(&["dump-q", "--scenario", "jam-with-defense", "--at", "1.0"]).status.success());
}

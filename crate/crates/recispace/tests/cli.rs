use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_recispace"));
    c.env_remove("RECISPACE_OUTPUT_DIR");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn body_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["classify", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&[], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn classify_three_point_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pts.tsv", "user\tr_in\tr_out\n1\t0.25\t0.75\n2\t0.5\t0.5\n3\t1\t1\n");
    let o = run(&["classify", "--points", "pts.tsv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# producer=classify config="));
    let labels: Vec<String> = body_rows(&text).into_iter().map(|r| r[3].clone()).collect();
    assert_eq!(labels, ["Feeding", "Intermediate", "Circulating"]);
}

#[test]
fn median_grid_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pts.tsv", "user\tr_in\tr_out\n1\t0.25\t0.75\n2\t0.5\t0.5\n3\t1\t1\n4\t1\t1\n");
    write(dir.path(), "props.tsv", "user\tp_retweets\n1\t0.5\n2\tNA\n3\t0.2\n4\t0.4\n");
    let o = run(
        &[
            "grid", "--points", "pts.tsv", "--resolution", "10", "--stat", "median",
            "--properties", "props.tsv", "--property", "p_retweets", "-o", "grid.tsv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body_rows(&std::fs::read_to_string(dir.path().join("grid.tsv")).unwrap());
    assert_eq!(rows.len(), 100);
    let top = rows.iter().find(|r| r[0] == "9" && r[1] == "9").unwrap();
    assert_eq!((top[6].as_str(), top[7].as_str()), ("2", "0.30000000000000004"));
    let mid = rows.iter().find(|r| r[0] == "5" && r[1] == "5").unwrap();
    assert_eq!((mid[6].as_str(), mid[7].as_str()), ("1", "NA"));

    let o = run(&["grid", "--points", "pts.tsv", "--stat", "median"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stats_reports_kruskal_wallis_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cls = String::from("user\tr_in\tr_out\tlabel\n");
    let mut props = String::from("user\tp_retweets\tp_replies\n");
    for (i, (label, v)) in [
        ("Flowing", 1), ("Flowing", 2), ("Flowing", 3),
        ("Feeding", 4), ("Feeding", 5), ("Feeding", 6),
        ("Circulating", 7), ("Circulating", 8), ("Circulating", 9),
    ]
    .iter()
    .enumerate()
    {
        cls.push_str(&format!("{i}\t0.5\t0.5\t{label}\n"));
        props.push_str(&format!("{i}\t{v}\t1\n"));
    }
    write(dir.path(), "cls.tsv", &cls);
    write(dir.path(), "props.tsv", &props);
    let o = run(
        &[
            "stats", "--classification", "cls.tsv", "--properties", "props.tsv",
            "--property", "p_retweets", "--property", "p_replies", "--groups", "archetype",
            "--letter-values", "lv.tsv", "--min-tail", "1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows = body_rows(&text);
    let kw = &rows[0];
    assert_eq!(&kw[..3], ["p_retweets", "kruskal_wallis", "all(df=2)"]);
    assert!((kw[3].parse::<f64>().unwrap() - 7.2).abs() < 1e-9);
    assert!((kw[4].parse::<f64>().unwrap() - 0.02732372244729252).abs() < 1e-12);
    let pairs: Vec<&str> = rows[1..4].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(pairs, ["Flowing|Feeding", "Flowing|Circulating", "Feeding|Circulating"]);
    // constant property: omnibus undefined, recorded as skipped
    assert!(text.contains("# skipped property=p_replies"));
    let lv = std::fs::read_to_string(dir.path().join("lv.tsv")).unwrap();
    assert!(lv.contains("p_retweets\tFlowing\t3\tM\t2\t2\t2"));
}

#[test]
fn edge_stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "followees.tsv", "# user\tfollowee\n1\t2\n1\t3\n2\t1\n");
    write(d, "followers.tsv", "1\t4\n3\t1\n1\t1\n");
    write(d, "focal.tsv", "1\n2\n");

    let o = run(&["ingest", "--follows", "followees.tsv", "--followed-by", "followers.tsv"], d);
    assert!(o.status.success());
    let edges: Vec<Vec<String>> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect();
    // 1->3 appears in both files, 1->1 is dropped
    assert_eq!(edges.len(), 4);
    assert!(stderr(&o).contains("self_edges=1"));

    let o = run(
        &["degrees", "--follows", "followees.tsv", "--followed-by", "followers.tsv", "--focal", "focal.tsv"],
        d,
    );
    let rows = body_rows(&stdout(&o));
    assert_eq!(rows[0], ["1", "2", "2", "1"]);
    assert_eq!(rows[1], ["2", "1", "1", "1"]);

    let o = run(
        &[
            "reciprocity", "--follows", "followees.tsv", "--followed-by", "followers.tsv",
            "-o", "points.tsv",
        ],
        d,
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(d.join("points.tsv")).unwrap();
    assert!(text.contains("mutual_pairs=1 connected_pairs=3"));
    assert_eq!(body_rows(&text).len(), 4);

    let o = run(&["classify", "--points", "points.tsv", "-o", "cls.tsv"], d);
    assert!(o.status.success());
    let o = run(
        &[
            "flows", "--follows", "followees.tsv", "--followed-by", "followers.tsv",
            "--classification", "cls.tsv", "--normalize", "rows",
        ],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("# normalized_by=row"));

    let o = run(&["degrees", "--focal", "focal.tsv"], d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn metrics_and_vocab_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "profiles.tsv",
        "user\tstatuses_count\tfavourites_count\tfollowers_count\tfriends_count\tcreated_at\n\
         1\t10\t5\t2000\t230\t1300000000\n2\t3\t1\t4\t5\t1400000000\n3\t\t1\t4\t5\t1400000000\n",
    );
    write(
        d,
        "timelines.tsv",
        "1\t100\toriginal\t4\t8\t\tpizza night\ten\n\
         1\t200\tretweet\t0\t0\t50\tpizza again\ten\n\
         2\t100\toriginal\t1\t1\t\tcoffee time\ten\n",
    );
    let o = run(&["metrics", "--profiles", "profiles.tsv", "--timelines", "timelines.tsv", "--cutoff", "150"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("skipped user 3"));
    let rows = body_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "1");
    // both posts qualify: the retweet's source predates the cutoff
    assert_eq!(&rows[0][11..], ["2", "4", "4", "8"]);

    write(d, "cls.tsv", "user\tr_in\tr_out\tlabel\n1\t0.1\t0.9\tFeeding\n2\t0.9\t0.9\tCirculating\n");
    let o = run(
        &["vocab", "--classification", "cls.tsv", "--timelines", "timelines.tsv", "--min-support", "1"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = body_rows(&stdout(&o));
    let words: Vec<(&str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[2].as_str())).collect();
    assert!(words.contains(&("Feeding", "pizza")));
    assert!(words.contains(&("Circulating", "coffee")));
    assert!(!words.iter().any(|(_, w)| *w == "again"));
}

#[test]
fn report_honours_output_dir_env_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["synth", "--block-size", "8", "--seed", "5", "-o", "syn"], d);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = bin()
        .args(["--threads", "2", "report", "-c", "syn/report.conf", "--set", "vocab_k=3"])
        .env("RECISPACE_OUTPUT_DIR", d.join("from_env"))
        .current_dir(d)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = std::fs::read_to_string(d.join("from_env/manifest.tsv")).unwrap();
    assert!(manifest.contains("config\tvocab_k\t3"));
    for entry in std::fs::read_dir(d.join("from_env")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        assert!(text.starts_with("# producer=report config="));
    }
    let o = run(&["verify", "from_env/manifest.tsv"], d);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = run(&["report", "-c", "syn/report.conf", "--set", "profiles=gone.tsv", "--output-dir", "x"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gone.tsv"));
    let o = run(&["report", "-c", "syn/report.conf", "--set", "colour=red"], d);
    assert_eq!(o.status.code(), Some(1));
}

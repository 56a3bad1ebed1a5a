use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

use careloop_core::digest::digest_bytes;

static NEXT: AtomicU32 = AtomicU32::new(0);

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("stores")
        .join(format!("cli-{name}-{}-{}", std::process::id(), NEXT.fetch_add(1, Ordering::Relaxed)));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn careloop(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_careloop"))
        .arg("--store-dir")
        .arg(store)
        .args(args)
        .env_remove("ADHERENCE_GEN_URL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Hash of every file path and content under `dir`.
fn tree_digest(dir: &Path) -> String {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut files = BTreeMap::new();
    walk(dir, dir, &mut files);
    let mut bytes = Vec::new();
    for (path, content) in files {
        bytes.extend(path.as_bytes());
        bytes.push(0);
        bytes.extend(digest_bytes(&content).as_bytes());
        bytes.push(b'\n');
    }
    digest_bytes(&bytes)
}

fn simulated(dir: &Path, seed: &str) -> PathBuf {
    let bundles = dir.join("bundles");
    let o = careloop(&dir.join("unused"), &["simulate", "--seed", seed, "--mix", "14,8,2", "--out", bundles.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    bundles
}

#[test]
fn end_to_end_mix_and_drafts() {
    let dir = workdir("e2e");
    let bundles = simulated(&dir, "7");
    assert_eq!(std::fs::read_dir(&bundles).unwrap().count(), 24);
    let store = dir.join("store");

    let o = careloop(&store, &["ingest", bundles.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 24);

    let o = careloop(&store, &["triage", "--all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut counts = BTreeMap::new();
    for line in out.lines().filter(|l| l.starts_with("case-")) {
        *counts.entry(line.split('\t').nth(1).unwrap().to_string()).or_insert(0) += 1;
    }
    assert_eq!(counts["urgent"], 14);
    assert_eq!(counts["attention"], 8);
    assert_eq!(counts["stable"], 2);
    assert!(out.lines().last().unwrap().starts_with("total\t"));

    let o = careloop(&store, &["draft", "--all", "--gen-backend", "template"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let drafted: Vec<_> = stdout(&o).lines().filter(|l| l.contains("\tdrafted\t")).map(String::from).collect();
    assert_eq!(drafted.len(), 24);
    assert!(drafted.iter().all(|l| l.ends_with("\t0 external")));
    assert_eq!(std::fs::read_dir(store.join("drafts")).unwrap().count(), 24);
}

#[test]
fn same_seed_writes_identical_bundles() {
    let (a, b) = (workdir("sim-a"), workdir("sim-b"));
    assert_eq!(tree_digest(&simulated(&a, "99")), tree_digest(&simulated(&b, "99")));
    let c = workdir("sim-c");
    assert_ne!(tree_digest(&simulated(&a, "99")), tree_digest(&simulated(&c, "100")));
}

#[test]
fn usage_errors_exit_2_and_touch_nothing() {
    let dir = workdir("usage");
    let bundles = simulated(&dir, "3");
    let store = dir.join("store");
    assert!(careloop(&store, &["ingest", bundles.to_str().unwrap()]).status.success());
    let before = tree_digest(&store);
    for args in [
        &["triage", "--all", "--bogus"][..],
        &["triage"],
        &["triage", "case-001", "--all"],
        &["draft", "--all", "--gen-backend", "llama"],
        &["frobnicate"],
        &["stats"],
    ] {
        let o = careloop(&store, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("--help"), "{args:?}");
    }
    assert_eq!(tree_digest(&store), before);
}

#[test]
fn domain_failures_exit_1_and_leave_the_store_unchanged() {
    let dir = workdir("fail");
    let bundles = simulated(&dir, "5");
    let store = dir.join("store");
    assert!(careloop(&store, &["ingest", bundles.to_str().unwrap()]).status.success());
    let before = tree_digest(&store);

    let o = careloop(&store, &["draft", "--all"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: MissingTriage: "), "{}", stderr(&o));

    let o = careloop(&store, &["triage", "case-999"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: UnknownCase: "));

    // Re-ingesting any bundle rejects the whole batch.
    let o = careloop(&store, &["ingest", bundles.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: DuplicateCase: "), "{}", stderr(&o));

    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"case_id\": 3}").unwrap();
    let o = careloop(&store, &["ingest", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.json"));

    let o = careloop(&store, &["export", "case-001"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: NotExported: "));

    let config = dir.join("bad.toml");
    std::fs::write(&config, "[generator]\ntemperature = \"hot\"\n").unwrap();
    let o = careloop(&store, &["--config", config.to_str().unwrap(), "triage", "--all"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: ConfigError: "), "{}", stderr(&o));

    assert_eq!(tree_digest(&store), before);

    // Commands other than ingest never create a store.
    let missing = dir.join("nowhere");
    let o = careloop(&missing, &["triage", "--all"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!missing.exists());
}

#[test]
fn external_backend_without_endpoint_fails_cleanly() {
    let dir = workdir("external");
    let bundles = simulated(&dir, "8");
    let store = dir.join("store");
    assert!(careloop(&store, &["ingest", bundles.to_str().unwrap()]).status.success());
    assert!(careloop(&store, &["triage", "--all"]).status.success());
    let before = tree_digest(&store);
    let o = careloop(&store, &["triage", "--all", "--estimator", "external"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: ServiceUnreachable: "), "{}", stderr(&o));
    assert_eq!(tree_digest(&store), before);
}

#[test]
fn partial_generator_config_is_accepted() {
    let dir = workdir("config");
    let bundles = simulated(&dir, "7");
    let store = dir.join("store");
    assert!(careloop(&store, &["ingest", bundles.to_str().unwrap()]).status.success());
    let config = dir.join("gen.toml");
    std::fs::write(&config, "[generator]\nbackend = \"template\"\n").unwrap();
    let o = careloop(&store, &["--config", config.to_str().unwrap(), "triage", "--all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("total\t"));
}

#[test]
fn stats_commands() {
    let dir = workdir("stats");
    let o = careloop(&dir, &["stats", "--t-test", "4.79,0.83,24,5.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "t(23)\t-1.24\tp\t0.228");

    let means = "5.04,4.42,4.62,4.88,4.83,4.75,4.96,5.25,4.83,4.79,5.08,4.87";
    let o = careloop(&dir, &["stats", "--dimension-means", means]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "overall_mean\t4.86");

    let o = careloop(&dir, &["stats", "--t-test", "4.79,0.0,24"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: DegenerateInput: "), "{}", stderr(&o));
}

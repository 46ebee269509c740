use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn roadbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadbench")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

struct Net {
    _dir: tempfile::TempDir,
    root: PathBuf,
    gr: PathBuf,
    co: PathBuf,
}

fn synth(n: usize) -> Net {
    let dir = tempfile::tempdir().expect("tempdir");
    let root = dir.path().to_path_buf();
    let (gr, co) = (root.join("net.gr"), root.join("net.co"));
    let o = roadbench(&["synth", "--n", &n.to_string(), "--seed", "4", "--graph", s(&gr), "--coords", s(&co)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    Net { _dir: dir, root, gr, co }
}

fn with_graph<'a>(net: &'a Net, args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend(["--graph", s(&net.gr), "--coords", s(&net.co)]);
    v
}

#[test]
fn full_pipeline() {
    let net = synth(600);
    assert_eq!(code(&roadbench(&with_graph(&net, &["validate"]))), 0);

    let build_csv = net.root.join("build.csv");
    let mut indexes = Vec::new();
    for m in ["ch", "tnr", "silc", "pcpd"] {
        let out = net.root.join(format!("{m}.idx"));
        let o = roadbench(&with_graph(
            &net,
            &["build", "--method", m, "--grid", "16", "--out", s(&out), "--csv", s(&build_csv)],
        ));
        assert_eq!(code(&o), 0, "{m}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(&fs::read(&out).unwrap()[..6], b"RBIDX1");
        indexes.push(out);
    }
    let build_text = fs::read_to_string(&build_csv).unwrap();
    assert!(build_text.starts_with("dataset,method,params,vertices,edges,build_s,index_bytes\n"));
    assert_eq!(build_text.lines().count(), 5);

    let mut verify = with_graph(&net, &["verify", "--pairs", "300"]);
    verify.push("--index");
    verify.extend(indexes.iter().map(|p| s(p)));
    let o = roadbench(&verify);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));

    let q1 = net.root.join("q1.txt");
    let q2 = net.root.join("q2.txt");
    for q in [&q1, &q2] {
        let o = roadbench(&with_graph(&net, &["gen-queries", "--kind", "linf", "--count", "20", "--seed", "3", "--out", s(q)]));
        assert_eq!(code(&o), 0);
    }
    let text = fs::read_to_string(&q1).unwrap();
    assert_eq!(text, fs::read_to_string(&q2).unwrap());
    assert!(text.starts_with("# queryset Q1 3 "));
    let rq = net.root.join("r.txt");
    assert_eq!(code(&roadbench(&with_graph(&net, &["gen-queries", "--kind", "network", "--count", "10", "--out", s(&rq)]))), 0);
    assert!(fs::read_to_string(&rq).unwrap().starts_with("# queryset R1 1 "));

    let query_csv = net.root.join("query.csv");
    for idx in [Some(&indexes[0]), Some(&indexes[2]), None] {
        let mut args = with_graph(&net, &["query", "--queries", s(&q1), "--mode", "path", "--verify-paths", "--csv", s(&query_csv)]);
        if let Some(i) = idx {
            args.extend(["--index", s(i)]);
        }
        let o = roadbench(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let qtext = fs::read_to_string(&query_csv).unwrap();
    assert!(qtext.contains("dataset,method,queryset,mode,threads,count,mean_us"));
    assert!(qtext.contains(",bidijkstra,Q10,path,1,"));

    let o = roadbench(&with_graph(&net, &["query", "--queries", s(&q1), "--index", s(&indexes[1]), "--threads", "2"]));
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains(",tnr,Q5,distance,2,20,"));

    let red = net.root.join("red.csv");
    assert_eq!(code(&roadbench(&with_graph(&net, &["redundancy", "--pairs", "30", "--out", s(&red)]))), 0);
    let red_text = fs::read_to_string(&red).unwrap();
    assert!(red_text.starts_with("s,t,len_p,len_pprime,ratio\n"));
    assert_eq!(red_text.lines().count(), 31);

    let summary = net.root.join("summary.csv");
    let o = roadbench(&["report", "--csv", s(&build_csv), s(&query_csv), "--out", s(&summary)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sum = fs::read_to_string(&summary).unwrap();
    assert!(sum.lines().count() >= 5);
}

#[test]
fn exit_codes() {
    let net = synth(300);
    // Usage errors.
    assert_eq!(code(&roadbench(&[])), 1);
    assert_eq!(code(&roadbench(&with_graph(&net, &["build", "--method", "nope", "--out", "x"]))), 1);
    assert_eq!(code(&roadbench(&["--help"])), 0);
    // Missing input is a data error.
    assert_eq!(code(&roadbench(&["validate", "--graph", "/nonexistent.gr", "--coords", "/nonexistent.co"])), 3);

    let idx = net.root.join("ch.idx");
    assert_eq!(code(&roadbench(&with_graph(&net, &["build", "--method", "ch", "--out", s(&idx)]))), 0);

    // An index of another network is rejected by fingerprint.
    let other = synth(200);
    let o = roadbench(&with_graph(&other, &["verify", "--index", s(&idx)]));
    assert_eq!(code(&o), 3);

    // Over the RAM budget without the override.
    let q = net.root.join("q.txt");
    assert_eq!(code(&roadbench(&with_graph(&net, &["gen-queries", "--count", "5", "--out", s(&q)]))), 0);
    let over = with_graph(&net, &["query", "--index", s(&idx), "--queries", s(&q), "--ram-budget-mb", "0"]);
    assert_eq!(code(&roadbench(&over)), 3);
    let mut allowed = over.clone();
    allowed.push("--allow-over-budget");
    assert_eq!(code(&roadbench(&allowed)), 0);

    // Shrinking every stored arc weight keeps the container loadable but
    // makes answers wrong, which verify must catch.
    let mut bytes = fs::read(&idx).unwrap();
    let header = 6 + 2 + 1 + 8;
    let n = u32::from_le_bytes(bytes[header..header + 4].try_into().unwrap()) as usize;
    let arcs_at = header + 4 + 4 * n;
    let arcs = u64::from_le_bytes(bytes[arcs_at..arcs_at + 8].try_into().unwrap()) as usize;
    assert_eq!(bytes[arcs_at + 8], 4);
    let first = arcs_at + 9;
    for i in 0..arcs {
        let at = first + 16 * i + 8;
        bytes[at..at + 4].copy_from_slice(&1u32.to_le_bytes());
    }
    let bad = net.root.join("bad.idx");
    fs::write(&bad, &bytes).unwrap();
    let o = roadbench(&with_graph(&net, &["verify", "--index", s(&bad), "--pairs", "50"]));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL ch"));

    // Truncated containers are data errors.
    fs::write(&bad, &bytes[..40]).unwrap();
    assert_eq!(code(&roadbench(&with_graph(&net, &["verify", "--index", s(&bad)]))), 3);
}

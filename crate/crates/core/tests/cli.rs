use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gilbert::cli::files::{instance_to_json, parse_solution, solution_to_json};
use gilbert::special::rounded_affine_triangle;
use tempfile::TempDir;

fn gilbert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gilbert")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve(dir: &TempDir, inst: &Path, name: &str) -> (Output, PathBuf) {
    let out = dir.path().join(name);
    (gilbert(&["solve", s(inst), "--out", s(&out)]), out)
}

const FOUR: &str = r#"{"dim":2,"norm":{"kind":"euclidean"},"weight":{"kind":"power","d":1,"h":1,"alpha":0.5},
 "sources":[{"point":[0,0],"tonnage":1},{"point":[0,4],"tonnage":1},{"point":[30,0],"tonnage":1},{"point":[30,4],"tonnage":1}],
 "sink":[15,2]}"#;

#[test]
fn solve_triangle_end_to_end() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri.json", &instance_to_json(&rounded_affine_triangle()));
    let (run, out) = solve(&dir, &inst, "sol.json");
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stderr).contains("weight not concave"));
    let sol = parse_solution(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let expected = (9982.5 + 7.0 * 3890.25f64.sqrt()).sqrt();
    assert!((sol.cost - expected).abs() < 1e-6, "{}", sol.cost);
    assert_eq!(sol.certificate.verdict, "certified");
    assert_eq!(sol.vertices.len(), 4);

    let svg = dir.path().join("tri.svg");
    assert_eq!(gilbert(&["svg", s(&out), "--out", s(&svg)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<circle").count(), 3);
    assert_eq!(text.matches(r#"class="steiner""#).count(), 1);
    assert_eq!(text.matches("<line").count(), 3);
    assert!(text.contains("cost = 102.07"));
}

#[test]
fn single_source_is_a_straight_edge() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "one.json",
        r#"{"dim":3,"norm":{"kind":"p","p":3},"weight":{"kind":"constant","d":2},"sources":[{"point":[1,2,3],"tonnage":5}],"sink":[0,0,0]}"#,
    );
    let (run, out) = solve(&dir, &inst, "sol.json");
    assert_eq!(run.status.code(), Some(0));
    let sol = parse_solution(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(sol.edges.len(), 1);
    let expected = 2.0 * (1.0f64 + 8.0 + 27.0).powf(1.0 / 3.0);
    assert!((sol.cost - expected).abs() < 1e-12);
}

#[test]
fn solve_is_deterministic_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "four.json", FOUR);
    let (a, pa) = solve(&dir, &inst, "a.json");
    let (b, pb) = solve(&dir, &inst, "b.json");
    assert_eq!(a.status.code(), b.status.code());
    let (ta, tb) = (std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let parsed = parse_solution(&text).unwrap();
    assert_eq!(solution_to_json(&parsed) + "\n", text);
    assert_eq!(gilbert(&["certify", s(&pa), s(&inst)]).status.code(), Some(0));

    let svg = gilbert(&["svg", s(&pa)]);
    let text = String::from_utf8(svg.stdout).unwrap();
    assert_eq!(text.matches(r#"class="steiner""#).count(), 2);
}

#[test]
fn certify_rejects_displaced_vertex() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri.json", &instance_to_json(&rounded_affine_triangle()));
    let (_, out) = solve(&dir, &inst, "sol.json");
    let mut sol = parse_solution(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let st = sol.vertices.iter_mut().find(|v| v.id == "s1").unwrap();
    st.point[0] += 0.1;
    let bad = write(&dir, "bad.json", &solution_to_json(&sol));
    let run = gilbert(&["certify", s(&bad), s(&inst)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stdout).contains("violated: balancing at s1"));
}

#[test]
fn certify_rejects_planar_degree4_star() {
    let dir = TempDir::new().unwrap();
    let (r, c, si) = (1.0f64, 3f64.sqrt() / 2.0, 0.5);
    let inst = write(
        &dir,
        "star.json",
        &format!(
            r#"{{"dim":2,"norm":{{"kind":"euclidean"}},"weight":{{"kind":"affine","d":1,"h":1}},
            "sources":[{{"point":[0,{r}],"tonnage":1}},{{"point":[{c},{si}],"tonnage":1}},{{"point":[-{c},{si}],"tonnage":1}}],
            "sink":[0,-1]}}"#
        ),
    );
    let edge = |from: &str, to: &str, flow: f64| {
        format!(r#"{{"from":"{from}","to":"{to}","flow":{flow},"weight":{},"length":1}}"#, 1.0 + flow)
    };
    let sol = format!(
        r#"{{"cost":0,"vertices":[
          {{"id":"p1","kind":"source","point":[0,1]}},{{"id":"p2","kind":"source","point":[{c},{si}]}},
          {{"id":"p3","kind":"source","point":[-{c},{si}]}},{{"id":"q","kind":"sink","point":[0,-1]}},
          {{"id":"s1","kind":"steiner","point":[0,0]}}],
          "edges":[{},{},{},{}],
          "certificate":{{"verdict":"certified","stars":[]}},"converged":true}}"#,
        edge("p1", "s1", 1.0),
        edge("p2", "s1", 1.0),
        edge("p3", "s1", 1.0),
        edge("s1", "q", 3.0)
    );
    let sol = write(&dir, "sol.json", &sol);
    let run = gilbert(&["certify", s(&sol), s(&inst)]);
    assert_eq!(run.status.code(), Some(2), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("violated: collapsing at s1"));
}

#[test]
fn svg_errors() {
    let dir = TempDir::new().unwrap();
    let missing = write(&dir, "m.json", r#"{"cost":1,"vertices":[],"certificate":{"verdict":"x","stars":[]},"converged":true}"#);
    let run = gilbert(&["svg", s(&missing)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("edges"));

    let inst = write(
        &dir,
        "one.json",
        r#"{"dim":3,"norm":{"kind":"euclidean"},"weight":{"kind":"constant","d":1},"sources":[{"point":[1,2,3],"tonnage":1}],"sink":[0,0,0]}"#,
    );
    let (_, out) = solve(&dir, &inst, "sol.json");
    let run = gilbert(&["svg", s(&out)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("dimension 3"));
}

#[test]
fn enumerate_counts() {
    for (n, count) in [(1, 1), (2, 1), (3, 3), (4, 15), (5, 105), (6, 945)] {
        let run = gilbert(&["enumerate", &n.to_string()]);
        assert_eq!(run.status.code(), Some(0));
        assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), count.to_string());
    }
    let run = gilbert(&["enumerate", "3", "--list"]);
    assert_eq!(String::from_utf8_lossy(&run.stdout).lines().count(), 4);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "not json",
        r#"{"dim":2,"norm":{"kind":"euclidean"},"weight":{"kind":"constant","d":1},"sources":[],"sink":[0,0]}"#,
        r#"{"dim":2,"norm":{"kind":"euclidean"},"weight":{"kind":"affine","d":1},"sources":[{"point":[1,1],"tonnage":1}],"sink":[0,0]}"#,
        r#"{"dim":2,"norm":{"kind":"p","p":0.5},"weight":{"kind":"constant","d":1},"sources":[{"point":[1,1],"tonnage":1}],"sink":[0,0]}"#,
        r#"{"dim":2,"norm":{"kind":"euclidean"},"weight":{"kind":"constant","d":1},"sources":[{"point":[1,1,1],"tonnage":1}],"sink":[0,0]}"#,
        r#"{"dim":2,"norm":{"kind":"euclidean"},"weight":{"kind":"constant","d":1},"sources":[{"point":[1,1],"tonnage":-1}],"sink":[0,0]}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = write(&dir, &format!("bad{i}.json"), text);
        let run = gilbert(&["solve", s(&p)]);
        assert_eq!(run.status.code(), Some(1), "case {i}");
        assert!(String::from_utf8_lossy(&run.stderr).starts_with("error:"), "case {i}");
    }
    assert_eq!(gilbert(&["solve", "/nonexistent/x.json"]).status.code(), Some(1));
    assert_eq!(gilbert(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gilbert(&["solve", s(&dir.path().join("bad0.json")), "--tol", "-1"]).status.code(), Some(1));
}

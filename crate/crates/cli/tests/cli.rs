use std::path::{Path, PathBuf};
use std::process::Command;

use cqtl_cli::{
    emit_json, load_model, parse_json, run_check, trace, Binding, CheckFlags, CliError, Engine, ResultDocument,
};
use cqtl_core::{print_model, FormatError};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn cqtl(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cqtl"))
        .args(args)
        .env("CQTL_COLOR", "0")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// Per world, the single bound variable's values.
fn values(doc: &ResultDocument) -> Vec<(String, Vec<String>)> {
    doc.per_world
        .iter()
        .map(|w| {
            let vals = w
                .assignments
                .iter()
                .map(|row| {
                    assert_eq!(row.len(), 1);
                    match row.values().next().unwrap() {
                        Binding::Element(e) => e.clone(),
                        Binding::Set(s) => format!("{s:?}"),
                    }
                })
                .collect();
            (w.world.clone(), vals)
        })
        .collect()
}

fn check(model: &str, ctx: &str, f: &str) -> ResultDocument {
    let m = load_model(&fixture(model)).unwrap();
    run_check(&m, f, ctx, &CheckFlags::default()).unwrap().document
}

fn owned(rows: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
    rows.iter()
        .map(|(w, v)| (w.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect()
}

#[test]
fn nodes_that_merge_into_another() {
    let doc = check("running.cm", "y:node", "exists x:node. (x != y & X[x = y])");
    assert_eq!(
        values(&doc),
        owned(&[("w0", &["n0", "n2"]), ("w1", &["n3", "n4"]), ("w2", &[])])
    );
}

#[test]
fn edges_deallocated_in_every_successor() {
    let doc = check("running.cm", "x:edge", "present(x) & WX[false]");
    assert_eq!(values(&doc), owned(&[("w0", &["e2"]), ("w1", &[]), ("w2", &[])]));
}

#[test]
fn toy_item_never_survives_two_steps() {
    let doc = check("twostate.cm", "x:item", "present(x) & X[X[present(x)]]");
    assert_eq!(values(&doc), owned(&[("s0", &[]), ("s1", &[])]));
}

#[test]
fn world_restriction() {
    let m = load_model(&fixture("running.cm")).unwrap();
    let flags = CheckFlags {
        world: Some("w1".into()),
        ..CheckFlags::default()
    };
    let doc = run_check(&m, "present(x) & WX[false]", "x:edge", &flags)
        .unwrap()
        .document;
    assert_eq!(doc.per_world.len(), 1);
    let flags = CheckFlags {
        world: Some("nowhere".into()),
        ..CheckFlags::default()
    };
    assert!(matches!(
        run_check(&m, "true", "", &flags),
        Err(CliError::UnknownWorld(_))
    ));
}

#[test]
fn load_running_model() {
    let m = load_model(&fixture("running.cm")).unwrap();
    assert_eq!(m.worlds().len(), 3);
    assert_eq!(m.transitions().len(), 4);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("again.cm");
    std::fs::write(&p, print_model(&m)).unwrap();
    assert_eq!(load_model(&p).unwrap(), m);
}

#[test]
fn load_rejects_unknown_world() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.cm");
    std::fs::write(
        &p,
        "signature { sort s; }\nworld a { s: x; }\ntransition t : a -> b { }\n",
    )
    .unwrap();
    match load_model(&p) {
        Err(CliError::Model {
            source: FormatError::Validation(_),
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn load_rejects_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.cm");
    std::fs::write(&p, "").unwrap();
    let err = load_model(&p).unwrap_err();
    assert!(
        matches!(
            err,
            CliError::Model {
                source: FormatError::Parse { .. },
                ..
            }
        ),
        "{err:?}"
    );
    let text = err.to_string();
    assert!(text.starts_with(&format!("{}:1:", p.display())), "{text}");
}

#[test]
fn json_is_byte_stable() {
    let a = emit_json(&check("running.cm", "y:node", "exists x:node. (x != y & X[x = y])"));
    let b = emit_json(&check("running.cm", "y:node", "exists x:node. (x != y & X[x = y])"));
    assert_eq!(a, b);
    assert!(a.ends_with(b"\n"));
    assert!(!a[..a.len() - 1].contains(&b'\n'));

    let (code, out, _) = cqtl(&[
        "check",
        fixture("running.cm").to_str().unwrap(),
        "-c",
        "y:node",
        "-f",
        "exists x:node. (x != y & X[x = y])",
        "--json",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.as_bytes(), &a[..]);
}

#[test]
fn empty_result_serializes() {
    let m = load_model(&fixture("running.cm")).unwrap();
    let flags = CheckFlags {
        world: Some("w2".into()),
        ..CheckFlags::default()
    };
    let doc = run_check(&m, "false", "", &flags).unwrap().document;
    let text = String::from_utf8(emit_json(&doc)).unwrap();
    assert_eq!(
        text,
        "{\"context\":\"\",\"formula\":\"false\",\"perWorld\":[{\"assignments\":[],\"world\":\"w2\"}],\"stats\":{\"configCount\":3,\"elapsedMs\":0,\"fixpointRounds\":0}}\n"
    );
}

#[test]
fn json_round_trip() {
    let cases = [
        ("running.cm", "y:node", "exists x:node. (x != y & X[x = y])"),
        ("running.cm", "x:node, N:Set(node)", "x in N & X[true]"),
        ("ltl_chain.cm", "", "<> (exists y:q. present(y))"),
    ];
    for (model, ctx, f) in cases {
        let doc = check(model, ctx, f);
        assert_eq!(parse_json(&emit_json(&doc)).unwrap(), doc, "{f}");
    }
}

#[test]
fn engines_agree_on_fixtures() {
    let cases: &[(&str, &str, &str)] = &[
        ("running.cm", "y:node", "exists x:node. (x != y & X[x = y])"),
        ("running.cm", "x:edge", "present(x) & WX[false]"),
        ("running.cm", "x:edge", "nextStepPreserved(x) U nextStepDeallocated(x)"),
        ("running.cm", "x:node", "[] <> present(x)"),
        ("running.cm", "N:Set(node)", "forall x:node. (x in N | X[x in N])"),
        ("running.cm", "", "exists e:edge. loop(e) W (forall n:node. false)"),
        ("twostate.cm", "x:item", "present(x) & X[X[present(x)]]"),
        ("twostate.cm", "", "<> (forall x:item. false)"),
        (
            "ltl_chain.cm",
            "",
            "(exists x:p. present(x)) U (exists y:q. present(y))",
        ),
        ("ltl_chain.cm", "", "[] <> (exists x:p. present(x))"),
        ("ltl_chain.cm", "P:Set(p)", "exists x:p. (x in P & WX[x in P])"),
    ];
    for (model, ctx, f) in cases {
        let path = fixture(model);
        for sub in ["check", "oracle"] {
            let (code, _, err) = cqtl(&[sub, path.to_str().unwrap(), "-c", ctx, "-f", f, "--oracle", "--compare"]);
            assert_eq!(code, 0, "{sub} {model} {f}: {err}");
        }
        let m = load_model(&path).unwrap();
        let fixpoint = run_check(&m, f, ctx, &CheckFlags::default()).unwrap();
        let flags = CheckFlags {
            engine: Engine::Oracle,
            expand_eq: true,
            ..CheckFlags::default()
        };
        let oracle = run_check(&m, f, ctx, &flags).unwrap();
        assert_eq!(fixpoint.document.per_world, oracle.document.per_world, "{f}");
    }
}

#[test]
fn exit_codes() {
    let running = fixture("running.cm");
    let running = running.to_str().unwrap();
    let (code, _, _) = cqtl(&[
        "check",
        running,
        "-c",
        "x:edge",
        "-f",
        "present(x) & WX[false]",
        "--require-sat",
    ]);
    assert_eq!(code, 1);
    let (code, _, _) = cqtl(&["check", running, "-c", "x:edge", "-f", "present(x)", "--require-sat"]);
    assert_eq!(code, 0);
    let (code, _, err) = cqtl(&["check", running, "-f", "not (X[true])"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
    let (code, _, _) = cqtl(&["check", "/nonexistent.cm", "-f", "true"]);
    assert_eq!(code, 2);
    let (code, out, _) = cqtl(&["validate", running]);
    assert_eq!((code, out.as_str()), (0, "ok: 3 worlds, 4 transitions\n"));
}

#[test]
fn trace_follows_counterparts() {
    let m = load_model(&fixture("running.cm")).unwrap();
    let path = |p: &[&str]| p.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert_eq!(
        trace(&m, "e0@w0", &path(&["f0", "f1"])).unwrap(),
        ["e0@w0", "  --f0--> e3@w1", "  --f1--> e5@w2"]
    );
    assert!(matches!(trace(&m, "e0", &[]), Err(CliError::BadStart(_))));
    assert!(matches!(trace(&m, "e0@w9", &[]), Err(CliError::UnknownWorld(_))));
    assert!(matches!(
        trace(&m, "e0@w0", &path(&["g"])),
        Err(CliError::UnknownTransition(_))
    ));
    assert!(trace(&m, "e0@w0", &path(&["f1"])).is_err());

    let toy = load_model(&fixture("twostate.cm")).unwrap();
    assert_eq!(
        trace(&toy, "i@s0", &path(&["f0", "f1"])).unwrap(),
        ["i@s0", "  --f0--> dead", "  --f1--> dead"]
    );

    let (code, out, _) = cqtl(&[
        "trace",
        fixture("running.cm").to_str().unwrap(),
        "--start",
        "e0@w0",
        "--path",
        "f0,f1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "e0@w0\n  --f0--> e3@w1\n  --f1--> e5@w2\n");
}

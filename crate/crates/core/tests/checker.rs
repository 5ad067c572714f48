mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{analyze_target, corpus_files, analyze_all_configs};
use violet_core::checker::{
    check_code_upgrade, check_default, check_evolution, check_update, check_workload_shift,
    generate_test_case, locate_rows, CheckError, ConcreteConfig, Verdict,
};
use violet_core::impact::{compile_atom, ImpactModel};
use violet_core::lang::{Domain, Metric, Value};
use violet_core::symexec::{SymVar, SymVarKind};

fn cfg(items: &[(&str, Value)]) -> ConcreteConfig {
    items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn b(x: bool) -> Value {
    Value::Bool(x)
}

fn i(x: i64) -> Value {
    Value::Int(x)
}

fn mimic() -> ImpactModel {
    analyze_target("autocommit.cfs", "autocommit").model
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Every finding cites rows of the model whose costs reproduce the ratio, and its
/// test case satisfies the slow row's predicate.
fn assert_sound(model: &ImpactModel, report: &violet_core::checker::CheckReport) {
    let vars = model.vars();
    for f in &report.findings {
        let slow = model.row(f.slow.state).unwrap();
        assert_eq!(slow.config_constraint, f.slow.config_constraint);
        for r in &f.triggered {
            assert_eq!(slow.cost.get(r.metric), r.slow);
            assert!(r.exceeds(report.threshold));
        }
        let asg: Vec<Option<Value>> = vars.iter().map(|v| f.test_case.get(&v.name).cloned()).collect();
        for atom in &slow.input_predicate {
            let e = compile_atom(atom, &vars).unwrap();
            assert_eq!(e.eval(&asg), Some(Value::Bool(true)), "{atom}");
        }
    }
}

#[test]
fn locate_rows_on_mimic() {
    let m = mimic();
    let rows = locate_rows(&m, &cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1))])).unwrap();
    let constrained: Vec<&Vec<String>> =
        rows.iter().map(|r| &r.config_constraint).filter(|c| !c.is_empty()).collect();
    assert_eq!(constrained, vec![&strs(&["autocommit==true", "flush_at_trx_commit==1"])]);
    for flush in 0..=2 {
        let rows = locate_rows(&m, &cfg(&[("autocommit", b(false)), ("flush_at_trx_commit", i(flush))])).unwrap();
        let constrained: Vec<&Vec<String>> =
            rows.iter().map(|r| &r.config_constraint).filter(|c| !c.is_empty()).collect();
        assert_eq!(constrained, vec![&strs(&["autocommit==false"])]);
    }
    let empty = ImpactModel::empty("none", "x");
    assert!(locate_rows(&empty, &ConcreteConfig::new()).unwrap().is_empty());
    assert!(matches!(
        locate_rows(&m, &cfg(&[("flush_at_trx_commit", i(9))])),
        Err(CheckError::InvalidValue { .. })
    ));
}

#[test]
fn update_to_durable_autocommit_is_specious() {
    let m = mimic();
    let t0 = Instant::now();
    let r = check_update(
        &m,
        &cfg(&[("autocommit", b(false))]),
        &cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1))]),
        100,
    )
    .unwrap();
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(r.verdict, Verdict::Specious);
    let f = &r.findings[0];
    assert_eq!(f.metric(), Metric::Latency);
    assert_eq!((f.triggered[0].slow, f.triggered[0].fast), (2600, 600));
    assert_eq!(f.fast.config_constraint, strs(&["autocommit==false"]));
    assert_eq!(f.test_case, cfg(&[("sql_command", Value::Enum("INSERT".into()))]));
    assert_eq!(f.critical_chain.last().map(String::as_str), Some("fil_flush"));
    assert_sound(&m, &r);
    let again = check_update(
        &m,
        &cfg(&[("autocommit", b(false))]),
        &cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1))]),
        100,
    )
    .unwrap();
    assert_eq!(again, r);
}

#[test]
fn unchanged_or_cheaper_update_is_ok() {
    let m = mimic();
    let c = cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1))]);
    assert_eq!(check_update(&m, &c, &c, 100).unwrap().verdict, Verdict::Ok);
    let r = check_update(&m, &c, &cfg(&[("autocommit", b(false))]), 100).unwrap();
    assert_eq!(r.verdict, Verdict::Ok);
}

#[test]
fn verdicts_are_monotone_in_threshold() {
    let m = mimic();
    let old = cfg(&[("autocommit", b(false))]);
    for flush in 0..=2 {
        let new = cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(flush))]);
        let mut seen_ok = false;
        for t in [10, 25, 50, 100, 200, 400, 800] {
            let v = check_update(&m, &old, &new, t).unwrap().verdict;
            if seen_ok {
                assert_eq!(v, Verdict::Ok, "flush={flush} t={t}");
            }
            seen_ok |= v == Verdict::Ok;
        }
    }
}

#[test]
fn poor_defaults() {
    let m = mimic();
    let defaults = cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1)), ("binlog_format", Value::Enum("ROW".into()))]);
    let r = check_default(&m, &defaults, 100).unwrap();
    assert_eq!(r.verdict, Verdict::Specious);
    assert_sound(&m, &r);

    let pd = analyze_target("poor_default.cfs", "flush_method").model;
    let t0 = Instant::now();
    let r = check_default(&pd, &cfg(&[("flush_method", Value::Enum("FSYNC".into()))]), 100).unwrap();
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(r.verdict, Verdict::Specious);
    assert_eq!(r.findings[0].test_case, cfg(&[("workload", Value::Enum("BULK".into()))]));
    assert_sound(&pd, &r);
    // the fastest method is the slow side of no pair on the latency metric
    let r = check_default(&pd, &cfg(&[("flush_method", Value::Enum("NOSYNC".into()))]), 100).unwrap();
    assert_eq!(r.verdict, Verdict::Ok);
    assert!(matches!(
        check_default(&pd, &cfg(&[("no_such_param", i(1))]), 100),
        Err(CheckError::NoMatchingRow(_))
    ));
}

#[test]
fn code_upgrade_regression() {
    let old = mimic();
    let new = analyze_target("autocommit_v2.cfs", "autocommit").model;
    let c = cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1))]);
    let t0 = Instant::now();
    let r = check_code_upgrade(&old, &new, Some(&c), 100).unwrap();
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(r.verdict, Verdict::Specious);
    assert_eq!(r.findings.len(), 1);
    let f = &r.findings[0];
    assert_eq!(f.slow.config_constraint, strs(&["autocommit==true", "flush_at_trx_commit==1"]));
    assert!(f.triggered[0].slow >= 2 * f.triggered[0].fast);
    assert!(r.only_old.is_empty() && r.only_new.is_empty());
    assert_sound(&new, &r);
    // the rows an upgrade did not touch stay quiet
    let r = check_code_upgrade(&old, &new, Some(&cfg(&[("autocommit", b(false))])), 100).unwrap();
    assert_eq!(r.verdict, Verdict::Ok);
    let same = check_code_upgrade(&old, &old, None, 100).unwrap();
    assert_eq!(same.verdict, Verdict::Ok);
}

#[test]
fn workload_shift_to_inserts() {
    let m = mimic();
    let c = cfg(&[("autocommit", b(true)), ("flush_at_trx_commit", i(1))]);
    let t0 = Instant::now();
    let r = check_workload_shift(&m, &c, &strs(&["sql_command==SELECT"]), &strs(&["sql_command==INSERT"]), 100).unwrap();
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(r.verdict, Verdict::Specious);
    assert_eq!(r.findings[0].test_case, cfg(&[("sql_command", Value::Enum("INSERT".into()))]));
    assert_sound(&m, &r);
    let back = check_workload_shift(&m, &c, &strs(&["sql_command==INSERT"]), &strs(&["sql_command==SELECT"]), 100).unwrap();
    assert_eq!(back.verdict, Verdict::Ok);
    let combined = check_evolution(&m, &m, &c, Some((&strs(&["sql_command==SELECT"]), &strs(&["sql_command==INSERT"]))), 100).unwrap();
    assert_eq!(combined.verdict, Verdict::Specious);
    assert_eq!(check_evolution(&m, &m, &c, None, 100).unwrap().verdict, Verdict::Ok);
}

#[test]
fn test_case_generation() {
    let vars = vec![
        SymVar {
            name: "n".into(),
            kind: SymVarKind::Input,
            domain: Domain::Int { lo: 0, hi: 10 },
        },
        SymVar {
            name: "mode".into(),
            kind: SymVarKind::Input,
            domain: Domain::Enum(vec!["A".into(), "B".into()]),
        },
    ];
    let none = BTreeMap::new();
    let tc = generate_test_case(&strs(&["n>3", "n<6"]), &vars, &none).unwrap();
    assert_eq!(tc, cfg(&[("n", i(4)), ("mode", Value::Enum("A".into()))]));
    let tc = generate_test_case(&[], &vars, &none).unwrap();
    assert_eq!(tc, cfg(&[("n", i(0)), ("mode", Value::Enum("A".into()))]));
    assert!(matches!(
        generate_test_case(&strs(&["n>3", "n<4"]), &vars, &none),
        Err(CheckError::UnsatPredicate(_))
    ));
}

#[test]
fn every_default_check_is_sound_on_corpus() {
    for name in corpus_files() {
        let m = analyze_all_configs(&name).model;
        let defaults: ConcreteConfig = m
            .variables
            .iter()
            .filter_map(|v| Some((v.var.name.clone(), v.default.clone()?)))
            .collect();
        match check_default(&m, &defaults, 100) {
            Ok(r) => assert_sound(&m, &r),
            Err(CheckError::NoMatchingRow(_)) => {}
            Err(e) => panic!("{name}: {e}"),
        }
    }
}

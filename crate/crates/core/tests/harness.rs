use std::fs;

use quick_xml::events::Event;
use quick_xml::Reader;
use schauder_core::harness::{emit, run, EstimateReport, ExperimentConfig, ExperimentId, Format};

fn small(id: ExperimentId) -> ExperimentConfig {
    let mut c = ExperimentConfig::default_for(id);
    c.resolutions = vec![17, 33];
    c.ensemble = 3;
    c
}

fn well_formed(xml: &str) -> bool {
    let mut r = Reader::from_str(xml);
    let mut depth = 0i32;
    loop {
        match r.read_event() {
            Ok(Event::Start(_)) => depth += 1,
            Ok(Event::End(_)) => depth -= 1,
            Ok(Event::Eof) => return depth == 0,
            Ok(_) => {}
            Err(_) => return false,
        }
    }
}

#[test]
fn defaults_validate() {
    for id in ExperimentId::ALL {
        ExperimentConfig::default_for(id).validate().unwrap();
        assert!(!id.description().is_empty());
        assert_eq!(ExperimentId::parse(id.as_str()).unwrap(), id);
    }
    assert!(ExperimentId::parse("E9").is_err());
}

#[test]
fn invalid_configs_rejected() {
    let base = ExperimentConfig::default_for(ExperimentId::E1);
    let mut bad = Vec::new();
    let mut c = base.clone();
    c.delta = 1.0;
    bad.push(c);
    let mut c = base.clone();
    c.resolutions = vec![33, 17];
    bad.push(c);
    let mut c = base.clone();
    c.ensemble = 0;
    bad.push(c);
    let mut c = base.clone();
    c.resolutions = vec![20, 40];
    bad.push(c);
    let mut c = ExperimentConfig::default_for(ExperimentId::C2);
    c.resolutions = vec![65];
    bad.push(c);
    let mut c = ExperimentConfig::default_for(ExperimentId::E3);
    c.resolutions = vec![33];
    bad.push(c);
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
        assert!(run(&c).is_err());
    }
    let extra = r#"{"experiment":"E1","d":2,"q":1,"delta":0.5,"nu":0.2,"resolutions":[17],"ensemble":1,"seed":1,"margin":0.25,"tol":1e-10,"out_dir":null,"extra":1}"#;
    assert!(ExperimentConfig::from_json(extra).is_err());
}

#[test]
fn emit_json_csv_svg() {
    let cfg = small(ExperimentId::E1);
    let rep = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&rep, dir.path(), &Format::ALL).unwrap();
    assert!(files.iter().all(|p| p.exists()));

    let back: EstimateReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back, rep);

    let csv = fs::read_to_string(dir.path().join("nondiv.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + cfg.ensemble * cfg.resolutions.len());
    let cols = csv.lines().next().unwrap().split(',').count();
    assert!(csv.lines().all(|l| l.split(',').count() == cols));

    let svgs: Vec<_> = files.iter().filter(|p| p.extension().is_some_and(|e| e == "svg")).collect();
    assert!(!svgs.is_empty());
    for p in svgs {
        assert!(well_formed(&fs::read_to_string(p).unwrap()), "{}", p.display());
    }
}

#[test]
fn degenerate_values_do_not_break_plots() {
    let cfg = ExperimentConfig::default_for(ExperimentId::C2);
    let mut rep = EstimateReport::new(&cfg);
    rep.series.insert(
        "odd <name> & stuff".into(),
        schauder_core::harness::Series { x_label: "x".into(), y_label: "y".into(), points: vec![[0.0, -1.0], [f64::NAN, 2.0], [1.0, 1.0]] },
    );
    rep.scalars.insert("inf".into(), f64::INFINITY);
    rep.scalars.insert("nan".into(), f64::NAN);
    rep.verdicts.push(schauder_core::harness::Verdict::at_most("v", f64::NEG_INFINITY, f64::INFINITY, ""));
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&rep, dir.path(), &[Format::Svg, Format::Json]).unwrap();
    assert_eq!(files.len(), 2);
    let svg = files.iter().find(|p| p.extension().is_some_and(|e| e == "svg")).unwrap();
    assert!(well_formed(&fs::read_to_string(svg).unwrap()));
    let back: EstimateReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back.scalars["inf"], f64::INFINITY);
    assert!(back.scalars["nan"].is_nan());
    assert!(back.series["odd <name> & stuff"].points[1][0].is_nan());
    assert_eq!(back.verdicts[0].value, f64::NEG_INFINITY);
    assert_eq!(back.verdicts[0].threshold, f64::INFINITY);
}

#[test]
fn reports_are_deterministic() {
    for id in [ExperimentId::E2, ExperimentId::Q1] {
        let mut cfg = small(id);
        if id == ExperimentId::Q1 {
            cfg.resolutions = vec![33, 65];
        }
        let a = serde_json::to_string_pretty(&run(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string_pretty(&run(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn verdicts_follow_report_quantities() {
    let rep = run(&small(ExperimentId::E1)).unwrap();
    let b = &rep.branches[0];
    let drift = rep.verdicts.iter().find(|v| v.name.ends_with("drift")).unwrap();
    assert_eq!(drift.value, b.drift.unwrap());
    assert_eq!(drift.passed, (b.drift.unwrap() - 1.0).abs() <= 0.25);
    let growth = rep.verdicts.iter().find(|v| v.name.ends_with("control growth")).unwrap();
    assert_eq!(growth.value, b.control_growth.unwrap());
    for m in &b.members {
        if let Some(r) = m.ratio {
            assert!(r >= 0.0);
            assert_eq!(r, m.solution_seminorm / m.data_seminorm);
        }
    }
}

#[test]
fn counterexample_reports() {
    let c1 = run(&ExperimentConfig::default_for(ExperimentId::C1)).unwrap();
    let s = &c1.series["sup_u_xy_vs_h"].points;
    assert!(s.windows(2).all(|w| w[1][1] > w[0][1]));
    // h = 2^-4 vs 2^-8
    assert!(s[4][1] / s[0][1] >= 1.5);
    assert!(c1.passed());
}

use netsens::fixtures::{florentine, florentine_id};
use netsens::maxelem::TopPConfig;
use netsens::sensitivity::{
    all_edge_sensitivities, estrada_index, finite_difference_check, top_p_edges, total_communicability,
    EdgeMask, Measure, SensitivityOptions,
};
use netsens::Graph;

fn names(labels: &[String], i: usize, j: usize) -> (String, String) {
    let (a, b) = (labels[i].clone(), labels[j].clone());
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_top5(measure: Measure, expected: &[(&str, &str, f64)]) {
    let (g, labels): (Graph, _) = florentine().unwrap();
    let report = top_p_edges(&g, measure, true, &SensitivityOptions::default(), &TopPConfig::with_p(5)).unwrap();
    assert_eq!(report.entries.len(), 5);
    for (e, &(a, b, v)) in report.entries.iter().zip(expected) {
        let want = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        assert_eq!(names(&labels, e.i, e.j), want);
        assert!((e.value - v).abs() <= 0.01, "{a}-{b}: {} vs {v}", e.value);
    }
}

#[test]
fn total_sensitivity_top_five_virtual_edges() {
    check_top5(
        Measure::Total,
        &[
            ("Medici", "Strozzi", 42.22),
            ("Medici", "Guadagni", 39.40),
            ("Medici", "Bischeri", 36.20),
            ("Medici", "Peruzzi", 35.33),
            ("Medici", "Castellani", 34.26),
        ],
    );
}

#[test]
fn estrada_sensitivity_top_five_virtual_edges() {
    check_top5(
        Measure::Estrada,
        &[
            ("Medici", "Guadagni", 2.73),
            ("Bischeri", "Castellani", 2.46),
            ("Tornabuoni", "Albizzi", 2.36),
            ("Medici", "Strozzi", 2.10),
            ("Guadagni", "Ridolfi", 2.02),
        ],
    );
}

#[test]
fn measures_and_exhaustive_sweep_agree() {
    let (g, _): (Graph, _) = florentine().unwrap();
    let tight = SensitivityOptions::with_tol(1e-10);
    let tn = total_communicability(&g, &tight).unwrap().value;
    assert!((tn - 323.058).abs() < 1e-3, "{tn}");
    assert!((estrada_index(&g, 2000).unwrap() - 54.2197).abs() < 1e-3);
    let all = all_edge_sensitivities(&g, Measure::Total, &EdgeMask::Virtual, &tight).unwrap();
    assert_eq!(all.entries.len(), 15 * 14 / 2 - 20);
    let top = top_p_edges(&g, Measure::Total, true, &tight, &TopPConfig::with_p(5)).unwrap();
    for (a, b) in all.entries.iter().zip(&top.entries) {
        assert_eq!((a.i, a.j), (b.i, b.j));
        assert!((a.value - b.value).abs() < 1e-8);
    }
}

#[test]
fn derivative_matches_central_difference() {
    let (g, _): (Graph, _) = florentine().unwrap();
    let (i, j) = (florentine_id("Medici").unwrap(), florentine_id("Strozzi").unwrap());
    let tight = SensitivityOptions::with_tol(1e-10);
    for measure in [Measure::Total, Measure::Subgraph(i), Measure::Estrada] {
        let fd = finite_difference_check(&g, measure, i, j, 1e-5, &tight, 512).unwrap();
        assert!((fd.analytic - fd.numeric).abs() <= 1e-5 * fd.analytic.abs(), "{measure:?}: {fd:?}");
    }
}

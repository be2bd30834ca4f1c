use annulus_metrics::geodesics::{self, SPIRAL_BAND_MARGIN};
use annulus_metrics::hardy::Truncation;
use annulus_metrics::metrics::{self, Metric};
use annulus_metrics::report;
use annulus_metrics::variation::{self, Limit, Quantity, SweepSpec, DEFAULT_R_GRID};
use annulus_metrics::EllipticContext;
use num_complex::Complex64;

fn tr() -> Truncation {
    Truncation::default()
}

fn data_lines(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn sweep_csv_round_trips_every_bit() {
    let spec = SweepSpec::new(DEFAULT_R_GRID.to_vec(), vec![0.2, 0.6], Quantity::ALL.to_vec()).unwrap();
    let rows = variation::run_sweep(&spec, &tr()).unwrap();
    let limits = variation::classify_sweep(&spec, &rows).unwrap();
    let text = report::sweep_csv(&spec, &rows, &limits, &tr()).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("# limit")).count(), 16);
    for (row, fields) in rows.iter().zip(data_lines(&text)) {
        assert_eq!(fields[0].parse::<f64>().unwrap().to_bits(), row.r.to_bits());
        for (i, v) in row.values.iter().enumerate() {
            assert_eq!(fields[2 + i].parse::<f64>().unwrap().to_bits(), v.unwrap().to_bits());
        }
    }
    let json: serde_json::Value = serde_json::from_str(&report::sweep_json(&spec, &rows).unwrap()).unwrap();
    for (row, obj) in rows.iter().zip(json.as_array().unwrap()) {
        assert_eq!(
            obj["kappa_s"].as_f64().unwrap(),
            row.get(&spec, Quantity::KappaS).unwrap()
        );
        assert!(obj["errors"].as_object().unwrap().is_empty());
    }
}

#[test]
fn sweep_agrees_with_pointwise_and_elliptic_routes() {
    let r = 1e-3;
    let spec = SweepSpec::new(vec![r], vec![0.3, 0.7], vec![Quantity::S, Quantity::KappaC]).unwrap();
    let rows = variation::run_sweep(&spec, &tr()).unwrap();
    let ctx = EllipticContext::new(r, metrics::ELLIPTIC_TOL).unwrap();
    for row in &rows {
        let z = Complex64::from_polar(r.powf(row.lambda), 0.4);
        let s = metrics::szego_metric_wp_ctx(&ctx, z).unwrap();
        assert!((row.values[0].unwrap() - s).abs() <= 1e-8 * s);
        let smp = metrics::sample(r, z, &tr()).unwrap();
        assert!((row.values[1].unwrap() - smp.kappa_c).abs() <= 1e-12 * smp.kappa_c.abs());
    }
}

#[test]
fn small_inner_radius_approaches_the_disc() {
    // away from the puncture, A_r looks like the disc as r → 0
    let z = Complex64::new(0.3, 0.4);
    let disc = 1.0 / (1.0 - z.norm_sqr());
    let mut prev = f64::INFINITY;
    for r in [1e-2, 1e-4, 1e-6] {
        let smp = metrics::sample(r, z, &tr()).unwrap();
        let gap = (smp.c - disc).abs() / disc;
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-4);
}

#[test]
fn spiral_trace_exports_a_consistent_table() {
    let r = 0.1;
    let rep = geodesics::spiral_trace(r, Metric::Szego, Complex64::new(0.0, -0.6), 21.0 * 4.53, &tr()).unwrap();
    assert!(rep.stayed_in_band && !rep.closed);
    let text = report::trace_csv(&rep.trace, &["demo".to_string()]).unwrap();
    assert!(text.lines().any(|l| l == "# demo"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), rep.trace.samples.len());
    let windings: Vec<i64> = rows.iter().map(|f| f[5].parse().unwrap()).collect();
    assert!(windings.windows(2).all(|w| w[1] >= w[0]));
    assert!(*windings.last().unwrap() >= 20);
    for f in &rows {
        let rho: f64 = f[3].parse().unwrap();
        assert!(rho >= r + SPIRAL_BAND_MARGIN && rho <= 1.0 - SPIRAL_BAND_MARGIN);
    }
}

#[test]
fn ratio_of_metrics_is_unbounded_along_the_geometric_mean() {
    let spec = SweepSpec::new(
        variation::EXTENDED_R_GRID.to_vec(),
        vec![0.5],
        vec![Quantity::RatioSOverC, Quantity::C, Quantity::S],
    )
    .unwrap();
    let rows = variation::run_sweep(&spec, &tr()).unwrap();
    let limits = variation::classify_sweep(&spec, &rows).unwrap();
    assert_eq!(limits[0].limit, Limit::PosInf);
    assert!(matches!(limits[1].limit, Limit::Finite(v) if (v - 2.0).abs() < 1e-6));
    assert_eq!(limits[2].limit, Limit::PosInf);
}

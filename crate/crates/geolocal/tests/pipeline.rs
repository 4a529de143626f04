mod common;

use geolocal::geometry::{sample_plane, GeometryError, PlaneFrame};
use geolocal::hamiltonian::{output_probability, taylor_probability, CoeffVector, EvolutionSpec};
use geolocal::interp::{delta_separated_subset, make_bins_radial};
use geolocal::pipeline::{
    assemble_bound_ledger, audit_corruption, average_case_oracle, interpolate_circumference, log10_taylor_bound,
    symmetrized_sample, worst_to_average_reduce, AverageCaseOracle, CorruptionModel, LedgerInputs, OracleConfig,
    PipelineError, ReductionParams, ReductionStatus, SimulatedOracle, Stage, REPORT_SCHEMA_VERSION,
};
use geolocal::rng::SeedSource;

use common::{oracle, unit_worst_instance, worst_instance};

fn truth(g: &CoeffVector) -> f64 {
    output_probability(&EvolutionSpec::standard(g.clone())).unwrap()
}

fn frame_for(g: &CoeffVector, seed: u64) -> PlaneFrame {
    sample_plane(g, &mut SeedSource::new(seed).stream("test", "plane", 0)).unwrap()
}

#[test]
fn budgets_follow_degree() {
    let p = ReductionParams::for_degree(16);
    assert_eq!((p.radial_bins, p.circumference_bins), (32, 41));
    assert_eq!((p.radial_k, p.circumference_k), (3, 10));
    assert_eq!(p.taylor_order(), 8);
    let p = ReductionParams::for_degree(20);
    assert_eq!((p.radial_bins, p.circumference_bins), (40, 51));
}

#[test]
fn exact_oracle_is_exact_and_repeatable() {
    let g = worst_instance("1x2");
    let (o, _) = oracle(OracleConfig::exact(3));
    let v = average_case_oracle(&o, &g).unwrap();
    assert_eq!(v, truth(&g));
    assert_eq!(v, average_case_oracle(&o, &g).unwrap());
}

#[test]
fn noisy_oracle_stays_within_epsilon() {
    let t = common::table("1x2");
    let (o, _) = oracle(OracleConfig { epsilon_a: 1e-6, ..OracleConfig::exact(4) });
    let mut rng = SeedSource::new(4).stream("test", "points", 0);
    for _ in 0..200 {
        let g = geolocal::geometry::sample_coeffs(&t, &mut rng);
        let v = average_case_oracle(&o, &g).unwrap();
        assert!((v - truth(&g)).abs() <= 1e-6);
    }
}

#[test]
fn corruption_frequency_is_bernoulli() {
    let t = common::table("1x1");
    let delta = 0.1;
    let o = SimulatedOracle::new(OracleConfig { delta_corrupt: delta, ..OracleConfig::exact(5) }).unwrap().with_trace();
    let mut rng = SeedSource::new(5).stream("test", "freq", 0);
    let calls = 10_000;
    for _ in 0..calls {
        let g = geolocal::geometry::sample_coeffs(&t, &mut rng);
        o.query(&g, Stage::Direct).unwrap();
    }
    let trace = o.trace();
    assert_eq!(trace.len(), calls);
    let hits = trace.iter().filter(|r| r.corrupted()).count() as f64;
    let sigma = (calls as f64 * delta * (1.0 - delta)).sqrt();
    assert!((hits - calls as f64 * delta).abs() <= 3.0 * sigma, "{hits} corrupted calls");
    for r in trace.iter().filter(|r| r.corrupted()) {
        let g = CoeffVector::new(t.clone(), r.point.clone()).unwrap();
        assert!((r.value - truth(&g) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn uniform_and_callback_models() {
    let g = worst_instance("1x2");
    let uniform = OracleConfig { delta_corrupt: 0.999, model: CorruptionModel::Uniform, ..OracleConfig::exact(1) };
    let (o, summary) = oracle(uniform);
    assert_eq!(summary.model, "uniform");
    let v = average_case_oracle(&o, &g).unwrap();
    assert!((0.0..=1.0).contains(&v));
    let cb = CorruptionModel::Callback(std::sync::Arc::new(|_: &CoeffVector, t: f64, _: &mut _| -t));
    let (o, _) = oracle(OracleConfig { delta_corrupt: 0.999, model: cb, ..OracleConfig::exact(1) });
    assert!(o.is_corrupted(&g));
    assert_eq!(average_case_oracle(&o, &g).unwrap(), -truth(&g));
}

#[test]
fn oracle_rejects_bad_config() {
    for cfg in [
        OracleConfig { delta_corrupt: 1.0, ..OracleConfig::exact(0) },
        OracleConfig { epsilon_a: -1.0, ..OracleConfig::exact(0) },
        OracleConfig { tau: 0.0, ..OracleConfig::exact(0) },
    ] {
        assert!(matches!(SimulatedOracle::new(cfg), Err(PipelineError::InvalidParams(_))));
    }
}

#[test]
fn symmetrized_sample_properties() {
    let g = worst_instance("1x2");
    let frame = frame_for(&g, 2);
    let (o, _) = oracle(OracleConfig::exact(2));
    let (x, y) = symmetrized_sample(&o, &frame, 0.7, 0.0, Stage::Direct).unwrap();
    assert_eq!(x, 1.0);
    assert_eq!(y, truth(&frame.embed(0.7, 0.0)));
    for th in [0.1, 0.9, 2.5] {
        let a = symmetrized_sample(&o, &frame, 0.7, th, Stage::Direct).unwrap();
        let b = symmetrized_sample(&o, &frame, 0.7, -th, Stage::Direct).unwrap();
        assert_eq!(a, b);
        // high-order surrogate averaged over the pair
        let t = |s: f64| taylor_probability(&EvolutionSpec::standard(frame.embed(0.7, s)), 40).unwrap();
        assert!((a.1 - 0.5 * (t(th) + t(-th))).abs() < 1e-12);
    }
}

#[test]
fn circumference_recovers_north_pole() {
    let g = worst_instance("1x2");
    let frame = frame_for(&g, 6);
    let (o, _) = oracle(OracleConfig::exact(6));
    // no corruption to budget for; the default budget needs 45 of 51 bins,
    // more than the angular density at l = 15 fills
    let params = ReductionParams { circumference_k: 0, ..ReductionParams::for_degree(20) };
    let mut rng = SeedSource::new(6).stream("test", "circ", 0);
    let out = interpolate_circumference(&o, &frame, 0.5, &params, 0.0, 0, &mut rng).unwrap();
    let err = (out.estimate - truth(&frame.embed(0.5, 0.0))).abs();
    assert!(err <= 1e-6, "error {err}");
    assert_eq!(out.disagreements, 0);
    assert!(out.nodes.len() >= params.degree + 2 * params.circumference_k + 1);

    let mut rng = SeedSource::new(6).stream("test", "circ", 1);
    let near_origin = interpolate_circumference(&o, &frame, 1e-3, &params, 0.0, 1, &mut rng).unwrap();
    assert!((near_origin.estimate - 1.0).abs() <= 1e-3);
    assert!(interpolate_circumference(&o, &frame, 0.0, &params, 0.0, 2, &mut rng).is_err());
}

#[test]
fn corrupted_circumference_within_stage_bound() {
    let g = unit_worst_instance("1x2");
    let params = ReductionParams::for_degree(16);
    let mut within = 0;
    for seed in 0..100 {
        let frame = frame_for(&g, seed);
        let (o, _) = oracle(OracleConfig { epsilon_a: 1e-10, delta_corrupt: 0.05, ..OracleConfig::exact(seed) });
        let mut rng = SeedSource::new(seed).stream("test", "circ", 0);
        let Ok(out) = interpolate_circumference(&o, &frame, 0.8, &params, 1e-10, 0, &mut rng) else {
            continue;
        };
        let target = frame.embed(0.8, 0.0);
        let surrogate = taylor_probability(&EvolutionSpec::standard(target), params.taylor_order()).unwrap();
        if (out.estimate - surrogate).abs().log10() <= out.log10_bound {
            within += 1;
        }
    }
    assert!(within >= 95, "{within}/100");
}

#[test]
fn zero_target_is_rejected() {
    let t = common::table("1x2");
    let (o, summary) = oracle(OracleConfig::exact(0));
    let err = worst_to_average_reduce(&o, summary, &CoeffVector::zeros(t), &ReductionParams::for_degree(16));
    assert!(matches!(err, Err(PipelineError::Geometry(GeometryError::ZeroTarget))));
}

#[test]
fn invalid_params_are_rejected() {
    let g = worst_instance("1x2");
    let (o, summary) = oracle(OracleConfig::exact(0));
    let params = ReductionParams { radial_bins: 10, ..ReductionParams::for_degree(16) };
    assert!(matches!(worst_to_average_reduce(&o, summary, &g, &params), Err(PipelineError::InvalidParams(_))));
}

#[test]
fn reports_are_deterministic() {
    let g = worst_instance("1x2");
    let run = |seed: u64| {
        let cfg = OracleConfig { epsilon_a: 1e-10, delta_corrupt: 0.05, ..OracleConfig::exact(seed) };
        let (o, summary) = oracle(cfg);
        let params = ReductionParams { seed, ..ReductionParams::for_degree(16) };
        serde_json::to_string(&worst_to_average_reduce(&o, summary, &g, &params).unwrap()).unwrap()
    };
    let a = run(21);
    assert_eq!(a, run(21));
    assert_ne!(a, run(22));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema_version"], REPORT_SCHEMA_VERSION);
}

#[test]
fn exact_oracle_error_within_chain() {
    for (g, seed) in [(worst_instance("1x2"), 1), (unit_worst_instance("1x2"), 2)] {
        let (o, summary) = oracle(OracleConfig::exact(seed));
        let params = ReductionParams { seed, ..ReductionParams::for_degree(16) };
        let mut report = worst_to_average_reduce(&o, summary, &g, &params).unwrap();
        report.attach_truth(&g, 1.0).unwrap();
        assert!(report.succeeded());
        assert!(report.failed_stages.is_empty());
        assert!(report.stages.iter().all(|s| s.disagreements == 0));
        // with eps_A = 0 the node noise is the Taylor gap alone, which must be certified
        assert!(report.stages.iter().all(|s| s.log10_node_noise.is_finite()));
        let inp = report.ledger_inputs.as_ref().unwrap();
        assert_eq!(report.ledger[0].log10_value, log10_taylor_bound(inp.target_h_bound, 1.0, 8));
        assert!(report.abs_error.unwrap().log10() <= report.certified_bound_log10);
    }
}

#[test]
fn corrupted_run_audits_within_budget() {
    let g = unit_worst_instance("1x2");
    let (o, summary) = oracle(OracleConfig { epsilon_a: 1e-10, delta_corrupt: 0.05, ..OracleConfig::exact(9) });
    let params = ReductionParams { seed: 9, ..ReductionParams::for_degree(16) };
    let report = worst_to_average_reduce(&o, summary, &g, &params).unwrap();
    assert!(report.succeeded());
    let audit = audit_corruption(&report, &o, g.table()).unwrap();
    assert!(audit.within_budgets(), "{audit:?}");
    assert_eq!(audit.circumference.len(), report.stages.len());
}

#[test]
fn starved_radial_stage_reports_failure() {
    let g = worst_instance("1x2");
    let (o, summary) = oracle(OracleConfig::exact(0));
    let params = ReductionParams { radial_samples: 5, max_doublings: 0, ..ReductionParams::for_degree(16) };
    let report = worst_to_average_reduce(&o, summary, &g, &params).unwrap();
    assert!(matches!(&report.status, ReductionStatus::Failed { stage, .. } if stage == "radial"));
    assert!(report.estimate.is_none());
    assert!(report.ledger.is_empty());
}

#[test]
fn more_samples_never_lose_occupancy() {
    // streams are shared, so a larger draw is a superset of a smaller one
    let l = 15;
    let bins = make_bins_radial(l, 32).unwrap();
    let params = geolocal::geometry::EnsembleParams::new(l).unwrap();
    let need = 16 + 2 * 3 + 1;
    let mut failures = Vec::new();
    for m in [40usize, 80, 160, 320] {
        let f = (0..200u64)
            .filter(|&s| {
                let mut rng = SeedSource::new(s).stream("test", "occupancy", 0);
                let rs: Vec<f64> = (0..m).map(|_| geolocal::geometry::sample_radius(&params, &mut rng)).collect();
                delta_separated_subset(&rs, &bins).len() < need
            })
            .count();
        failures.push(f);
    }
    assert!(failures.windows(2).all(|w| w[1] <= w[0]), "{failures:?}");
    assert!(failures[0] > failures[3], "{failures:?}");
}

fn ledger_inputs(circ: f64, h: f64) -> LedgerInputs {
    LedgerInputs {
        degree: 8,
        taylor_order: 4,
        tau: 1.0,
        target_norm: 2.0,
        target_h_bound: h,
        radial_delta: 1e-3,
        radial_rebw_delta: 0.1,
        radial_nodes: 12,
        lp_tolerance: 0.0,
        log10_circumference_bound: Some(circ),
    }
}

#[test]
fn ledger_without_stage_error_is_taylor_only() {
    let l = assemble_bound_ledger(&ledger_inputs(f64::NEG_INFINITY, 1.0)).unwrap();
    let taylor = l.entry("taylor_target").unwrap().log10_value;
    assert_eq!(l.log10_total, taylor);
    assert!((10f64.powf(taylor) - 2.0 * 1f64.exp() * (std::f64::consts::E / 4.0).powi(5)).abs() < 1e-12);
}

#[test]
fn ledger_is_linear_in_stage_error() {
    let base = assemble_bound_ledger(&ledger_inputs(-12.0, 0.0)).unwrap();
    let doubled = assemble_bound_ledger(&ledger_inputs(-12.0 + 2f64.log10(), 0.0)).unwrap();
    assert!((doubled.total() / base.total() - 2.0).abs() < 1e-10);
    let remez = base.entry("remez_extrapolation").unwrap().log10_value;
    let by_hand = 9.0 * (std::f64::consts::E.powi(2) * 2.0 / (1e-3 * 18.0)).log10();
    assert!((remez - by_hand).abs() < 1e-12);
}

#[test]
fn ledger_needs_every_stage() {
    let mut inp = ledger_inputs(-12.0, 1.0);
    inp.log10_circumference_bound = None;
    assert!(matches!(assemble_bound_ledger(&inp), Err(PipelineError::MissingStage("circumference"))));
    let mut inp = ledger_inputs(-12.0, 1.0);
    inp.radial_nodes = 0;
    assert!(matches!(assemble_bound_ledger(&inp), Err(PipelineError::MissingStage("radial"))));
}

#[test]
fn taylor_entry_uncertified_below_threshold() {
    let l = assemble_bound_ledger(&ledger_inputs(-12.0, 5.0)).unwrap();
    assert_eq!(l.entry("taylor_target").unwrap().log10_value, f64::INFINITY);
    assert_eq!(l.total(), f64::INFINITY);
}

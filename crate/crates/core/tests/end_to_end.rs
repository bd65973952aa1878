use priodpa::battery::{algorithm_by_name, battery};
use priodpa::cat::{decode_run_cat, encode_cat_advice, greedy_cat, tree_adversary};
use priodpa::dpa_path::greedy_paths;
use priodpa::engine::run;
use priodpa::lwdpa::{adversary_play_lwdpa, decode_run_lwdpa, encode_lwdpa_advice, PabParams};
use priodpa::model::{validate_solution, GainMode, Graph, Instance};
use priodpa::oracle::brute_force_opt;
use priodpa::report::{to_csv_string, GainRatio, RatioReport};
use priodpa::tape::AdviceTape;
use priodpa::DpaError;

#[test]
fn instance_file_round_trip_keeps_results() {
    let graph = Graph::tree(&[(0, 1), (1, 2), (1, 3), (1, 4), (4, 5), (4, 6)]).unwrap();
    let instance = Instance::from_pairs(graph, &[(0, 2), (3, 5), (2, 6), (0, 3), (5, 6)]).unwrap();
    let text = instance.to_json();
    let back = Instance::from_json(&text).unwrap();
    assert_eq!(back.fingerprint(), instance.fingerprint());
    let a = greedy_cat(&instance).unwrap();
    let b = greedy_cat(&back).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(validate_solution(&back, &b));
}

#[test]
fn tapes_survive_serialization() {
    let graph = Graph::path(13).unwrap();
    let instance =
        Instance::from_pairs(graph, &[(0, 4), (2, 6), (4, 9), (6, 13), (9, 11), (1, 12)]).unwrap();
    let tape = encode_lwdpa_advice(&instance).unwrap();
    let mut reread = AdviceTape::from_json(&tape.to_json()).unwrap();
    let solution = decode_run_lwdpa(&instance, &mut reread).unwrap();
    let opt = brute_force_opt(&instance, GainMode::Length)
        .unwrap()
        .optimum;
    assert_eq!(solution.gain(GainMode::Length), opt);

    let tree = Graph::tree(&[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
    let instance = Instance::from_pairs(tree, &[(1, 2), (3, 4), (2, 5), (1, 4), (3, 5)]).unwrap();
    let mut tape = encode_cat_advice(&instance).unwrap();
    let solution = decode_run_cat(&instance, &mut tape).unwrap();
    assert_eq!(
        solution.len() as u64,
        brute_force_opt(&instance, GainMode::Count).unwrap().optimum
    );
    assert_eq!(tape.consumed(), tape.len());
}

#[test]
fn truncated_tape_is_reported() {
    let graph = Graph::path(12).unwrap();
    let instance = Instance::from_pairs(graph, &[(0, 4), (4, 8), (8, 12)]).unwrap();
    let full = encode_lwdpa_advice(&instance).unwrap();
    let mut short = AdviceTape::from_bits(full.bits()[..2].iter().copied());
    let err = decode_run_lwdpa(&instance, &mut short).unwrap_err();
    assert!(matches!(err, DpaError::AdviceExhausted { .. }), "{err}");
}

#[test]
fn named_algorithms_never_beat_the_oracle() {
    let graph = Graph::path(9).unwrap();
    let instance =
        Instance::from_pairs(graph, &[(0, 3), (2, 5), (4, 9), (1, 8), (6, 7), (3, 4)]).unwrap();
    let opt = brute_force_opt(&instance, GainMode::Count).unwrap().optimum;
    let greedy = greedy_paths(&instance).unwrap();
    assert_eq!(greedy.len() as u64, opt);
    for mut alg in battery() {
        let out = run(alg.as_mut(), &instance, None).unwrap();
        assert!(validate_solution(&instance, &out.solution));
        assert!(out.solution.len() as u64 <= opt, "{}", alg.name());
    }
}

#[test]
fn adversaries_through_the_public_api() {
    let mut alg = algorithm_by_name("greedy-lwdpa").unwrap();
    let out = adversary_play_lwdpa(alg.as_mut(), PabParams::new(4, 10).unwrap()).unwrap();
    assert!(out.ratio() >= GainRatio::new(11, 4));

    let star = Graph::tree(&[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    for name in [
        "greedy-cat",
        "greedy-lex",
        "reject-first-cat",
        "first-only-lex",
    ] {
        let mut alg = algorithm_by_name(name).unwrap();
        let out = tree_adversary(alg.as_mut(), &star).unwrap();
        assert!(out.ratio() >= GainRatio::new(2, 1), "{name}");
    }
}

#[test]
fn reports_render_unbounded_ratios() {
    let row = RatioReport::new("path:3", "first-only-lex", "00", 0, 2, 0);
    assert!(row.gain_ratio().is_unbounded());
    let back = RatioReport::from_json(&row.to_json()).unwrap();
    assert_eq!(back, row);
    let csv = to_csv_string(&[row]);
    assert_eq!(csv.lines().count(), 2);
}

use sigrecon_core::{pmp, procgen, signature, vartime, Group64, Mode, OuParams, SolverParams64, TimeSearchParams64};

fn ou_target() -> Group64 {
    let ou = procgen::simulate_ou(&OuParams::isotropic(2, 5.0, 0.5, 1.0, 7)).unwrap();
    signature::signature_of_path(&ou, 3).unwrap()
}

/// A stiff first step overflows the forward flow; it must count as a
/// rejection instead of an error.
#[test]
fn overflowing_update_is_rejected() {
    let target = ou_target();
    let params = SolverParams64 {
        gamma: 1e3,
        max_iters: 300,
        ..Default::default()
    };
    let init = pmp::chord_init(&target, 1.0, params.steps).unwrap();
    let res = pmp::solve(&target, &init, &params).unwrap();
    assert!(res.rejections > 0);
    assert!(res.cost_trace.windows(2).all(|w| w[1] < w[0]));
    assert!(res.endpoint_error.is_finite());
}

#[test]
fn penalty_continuation_reduces_terminal_error() {
    let target = ou_target();
    let mut controls = pmp::chord_init(&target, 1.0, 200).unwrap();
    let mut errors = Vec::new();
    for gamma in [10.0, 100.0, 1000.0] {
        let params = SolverParams64 {
            steps: 200,
            gamma,
            c0: gamma / 10.0,
            max_iters: 5000,
            mode: Mode::Penalty,
            ..Default::default()
        };
        let res = pmp::solve(&target, &controls, &params).unwrap();
        errors.push(res.endpoint_error);
        controls = res.controls;
    }
    assert!(errors.windows(2).all(|w| w[1] <= w[0] * 1.1), "{errors:?}");
    assert!(errors[2] < 1e-2, "{errors:?}");
}

/// Seeding the horizon search with the length of a penalty solution should
/// reach feasibility within three expansions on OU targets. The first-order
/// error of the discrete descent direction stalls both solvers near a
/// terminal error of 1e-3, so this does not hold at desk scale; run with
/// `--ignored` to measure it.
#[test]
#[ignore = "known limitation: OU targets stall near the feasibility tolerance"]
fn penalty_length_seeds_the_horizon_search() {
    for seed in [7, 11, 13] {
        let ou = procgen::simulate_ou(&OuParams::isotropic(2, 5.0, 0.5, 1.0, seed)).unwrap();
        let target = signature::signature_of_path(&ou, 3).unwrap();
        let penalty = SolverParams64 {
            gamma: 1e3,
            max_iters: 5000,
            ..Default::default()
        };
        let init = pmp::chord_init(&target, 1.0, penalty.steps).unwrap();
        let seeded = pmp::solve(&target, &init, &penalty).unwrap();

        let mut params = TimeSearchParams64::for_target(&target);
        params.t_init = seeded.length;
        params.max_expansions = 3;
        let found = vartime::search_final_time_from(&target, Some(&seeded.controls), &params, &mut |_| {});
        assert!(found.is_ok(), "seed {seed}: {:?}", found.err());
    }
}

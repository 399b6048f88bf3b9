//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sigrecon_core::io::{self, ResultJson};
use sigrecon_core::{
    pmp, procgen, signature, vartime, ControlPath, Group64, Mode, OuParams, Path64, SolverParams64,
    TimeSearchParams64,
};

use crate::args::{
    BmArgs, CompareArgs, GammaSweepArgs, OuArgs, ReconstructArgs, SearchArgs, SignArgs, SolverArgs, TargetArgs,
};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// `explicit` if given, else `out_dir/name` with `out_dir` created on demand.
fn output_path(out_dir: &Path, explicit: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.clone());
    }
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::OutputDir {
        path: out_dir.display().to_string(),
        source,
    })?;
    Ok(out_dir.join(name))
}

pub fn simulate_ou(out_dir: &Path, a: &OuArgs) -> Result<()> {
    let mut params = OuParams::isotropic(a.dim, a.theta, a.kappa, a.sigma, a.grid.seed).with_grid(a.grid.steps, a.grid.horizon);
    params.x0 = vec![a.x0; a.dim];
    let path = procgen::simulate_ou(&params)?;
    let file = output_path(out_dir, &a.grid.output, &format!("ou_seed{}.csv", a.grid.seed))?;
    io::write_path(&file, &path)?;
    println!("wrote {} ({} samples, length {:.6})", file.display(), path.len(), path.length());
    Ok(())
}

pub fn simulate_bm(out_dir: &Path, a: &BmArgs) -> Result<()> {
    let path = procgen::simulate_bm(a.dim, a.sigma, a.grid.steps, a.grid.horizon, a.grid.seed)?;
    let file = output_path(out_dir, &a.grid.output, &format!("bm_seed{}.csv", a.grid.seed))?;
    io::write_path(&file, &path)?;
    println!("wrote {} ({} samples, length {:.6})", file.display(), path.len(), path.length());
    Ok(())
}

pub fn sign(out_dir: &Path, a: &SignArgs) -> Result<()> {
    let path: Path64 = io::read_path(&a.input)?;
    let sig = signature::signature_of_path(&path, a.depth)?;
    let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("path");
    let file = output_path(out_dir, &a.output, &format!("{stem}.sig.json"))?;
    io::write_signature(&file, &sig)?;
    println!(
        "wrote {} (dim {}, depth {}, {} coefficients)",
        file.display(),
        sig.dim(),
        sig.depth(),
        sig.len()
    );
    Ok(())
}

fn load_target(a: &TargetArgs) -> Result<Group64> {
    let t = io::read_signature::<f64>(&a.target)?;
    match Group64::from_tensor(t.clone(), a.group_tol) {
        Ok(g) => Ok(g),
        Err(e @ sigrecon_core::Error::NotGroupLike { .. }) if a.allow_non_group_like => {
            eprintln!("warning: {e}; proceeding as requested");
            Ok(Group64::from_tensor(t, f64::INFINITY)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn solver_params(s: &SolverArgs, mode: Mode, eps: f64) -> SolverParams64 {
    let defaults = SolverParams64::default();
    let (max_iters, cost_floor) = match mode {
        Mode::Penalty => (defaults.max_iters, 0.0),
        Mode::VariableTime => (3000, 0.1 * eps),
    };
    SolverParams64 {
        steps: s.steps,
        max_iters: s.max_iters.unwrap_or(max_iters),
        c0: s.c0,
        c_grow: s.c_grow,
        c_shrink: s.c_shrink,
        c_min: s.c_min,
        c_max: s.c_max,
        fp_iters: s.fp_iters,
        fp_tol: s.fp_tol,
        stall_tol: s.stall_tol,
        stall_window: s.stall_window,
        cost_floor: s.cost_floor.unwrap_or(cost_floor),
        mode,
        gamma: s.gamma,
        horizon: s.horizon,
    }
}

fn search_params(target: &Group64, s: &SearchArgs, inner: SolverParams64) -> TimeSearchParams64 {
    let defaults = TimeSearchParams64::for_target(target);
    TimeSearchParams64 {
        t_init: s.t_init.unwrap_or(defaults.t_init),
        eps: s.eps,
        grow: s.grow,
        refine_steps: s.refine_steps,
        refine_shrink: s.refine_shrink,
        max_expansions: s.max_expansions,
        inner,
    }
}

fn penalty_solve(target: &Group64, params: &SolverParams64) -> Result<sigrecon_core::SolveResult64> {
    let init = pmp::chord_init(target, params.horizon, params.steps)?;
    Ok(pmp::solve(target, &init, params)?)
}

pub fn reconstruct(out_dir: &Path, a: &ReconstructArgs) -> Result<()> {
    let target = load_target(&a.target)?;
    let started = Instant::now();
    let record = match a.mode {
        Mode::Penalty => {
            let params = solver_params(&a.solver, Mode::Penalty, a.search.eps);
            params.validate()?;
            let result = penalty_solve(&target, &params)?;
            ResultJson::from_solve(&result, &params, &target, started.elapsed().as_secs_f64())
        }
        Mode::VariableTime => {
            let inner = solver_params(&a.solver, Mode::VariableTime, a.search.eps);
            let mut search = search_params(&target, &a.search, inner);
            let mut warm: Option<ControlPath<f64>> = None;
            if a.seed_time_from_penalty {
                let params = solver_params(&a.solver, Mode::Penalty, a.search.eps);
                let params = SolverParams64 {
                    max_iters: a.solver.max_iters.unwrap_or(SolverParams64::default().max_iters),
                    ..params
                };
                let first = penalty_solve(&target, &params)?;
                println!(
                    "penalty pre-solve: length {:.6}, endpoint error {:.3e}, status {}",
                    first.length,
                    first.endpoint_error,
                    first.status.as_str()
                );
                search.t_init = first.length.max(1e-3);
                warm = Some(first.controls);
            }
            search.validate()?;
            let found = vartime::search_final_time_from(&target, warm.as_ref(), &search, &mut |_| {})?;
            ResultJson::from_search(&found, &search, &target, started.elapsed().as_secs_f64())
        }
    };

    let result_file = output_path(out_dir, &a.output, "result.json")?;
    let path_file = output_path(out_dir, &a.path_output, "reconstruction.csv")?;
    io::write_result(&result_file, &record)?;
    let path: Path64 = record.sampled_path()?;
    io::write_path(&path_file, &path)?;

    println!("mode            {}", a.mode.as_str());
    println!("status          {}", record.status);
    if let Some(t) = record.t_star {
        println!("T*              {t:.6}");
    }
    println!("endpoint error  {:.6e}", record.endpoint_error);
    println!("length          {:.6}", record.length);
    println!("energy          {:.6}", record.energy);
    println!("iterations      {} ({} rejected)", record.iterations_used, record.rejections);
    println!("wall time       {:.3} s", record.wall_time_s);
    println!("wrote {} and {}", result_file.display(), path_file.display());

    if let Some(tol) = a.max_endpoint_error {
        if !(record.endpoint_error <= tol) {
            return Err(CliError::Check(format!(
                "endpoint error {:.3e} exceeds {tol:.3e}",
                record.endpoint_error
            )));
        }
    }
    if let Some(tol) = a.max_coeff_error {
        let sig = signature::signature_of_path(&path, target.depth())?;
        let diff = sig.max_abs_diff(&target)?;
        println!("max coeff error {diff:.6e}");
        if !(diff <= tol) {
            return Err(CliError::Check(format!("signature coefficient error {diff:.3e} exceeds {tol:.3e}")));
        }
    }
    Ok(())
}

pub fn compare(out_dir: &Path, a: &CompareArgs) -> Result<()> {
    let original: Path64 = io::read_path(&a.original)?;
    let recon: Path64 = io::read_path(&a.reconstructed)?;
    if original.dim() != recon.dim() {
        return Err(CliError::Core(sigrecon_core::Error::InvalidPath(format!(
            "original has dimension {}, reconstruction has {}",
            original.dim(),
            recon.dim()
        ))));
    }
    if a.samples < 2 {
        return Err(CliError::Usage("--samples must be >= 2".into()));
    }
    let sig_o = signature::signature_of_path(&original, a.depth)?;
    let sig_r = signature::signature_of_path(&recon, a.depth)?;
    let diff = sig_r.try_sub(&sig_o)?;
    let max_abs = diff.max_abs();
    let rel = diff.norm() / sig_o.norm();
    let (len_o, len_r) = (original.length(), recon.length());

    let d = original.dim();
    let mut header = vec!["s".to_string()];
    header.extend((1..=d).map(|i| format!("original_x{i}")));
    header.extend((1..=d).map(|i| format!("reconstructed_x{i}")));
    let rows: Vec<Vec<f64>> = (0..a.samples)
        .map(|j| {
            let s = j as f64 / (a.samples - 1) as f64;
            let mut row = vec![s];
            row.extend(original.sample_normalized(s));
            row.extend(recon.sample_normalized(s));
            row
        })
        .collect();
    let file = output_path(out_dir, &a.output, "compare.csv")?;
    io::write_table(&file, &header, &rows)?;

    println!("max coeff error       {max_abs:.6e}");
    println!("relative l2 error     {rel:.6e}");
    println!("original length       {len_o:.6}");
    println!("reconstructed length  {len_r:.6}");
    println!("length ratio          {:.6}", len_r / len_o);
    println!("wrote {}", file.display());

    if let Some(tol) = a.max_coeff_error {
        if !(max_abs <= tol) {
            return Err(CliError::Check(format!("signature coefficient error {max_abs:.3e} exceeds {tol:.3e}")));
        }
    }
    if let Some(slack) = a.length_slack {
        if !(len_r <= len_o * (1.0 + slack)) {
            return Err(CliError::Check(format!(
                "reconstructed length {len_r:.6} exceeds original {len_o:.6} by more than {slack}"
            )));
        }
    }
    Ok(())
}

pub fn gamma_sweep(out_dir: &Path, a: &GammaSweepArgs) -> Result<()> {
    if a.gammas.is_empty() {
        return Err(CliError::Usage("--gammas must not be empty".into()));
    }
    let target = load_target(&a.target)?;
    let base = solver_params(&a.solver, Mode::Penalty, 0.0);
    let outcomes: Vec<_> = a
        .gammas
        .par_iter()
        .map(|&gamma| {
            let params = SolverParams64 { gamma, ..base.clone() };
            params.validate().map_err(CliError::from)?;
            penalty_solve(&target, &params)
        })
        .collect();

    let header: Vec<String> = ["gamma", "endpoint_error", "energy", "length", "iterations", "rejections"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    let mut failures = 0;
    println!("{:>12} {:>14} {:>12} {:>12} {:>8}  status", "gamma", "endpoint_err", "energy", "length", "iters");
    for (&gamma, outcome) in a.gammas.iter().zip(&outcomes) {
        match outcome {
            Ok(r) => {
                println!(
                    "{gamma:>12.4e} {:>14.6e} {:>12.6} {:>12.6} {:>8}  {}",
                    r.endpoint_error,
                    r.energy,
                    r.length,
                    r.iterations_used,
                    r.status.as_str()
                );
                rows.push(vec![
                    gamma,
                    r.endpoint_error,
                    r.energy,
                    r.length,
                    r.iterations_used as f64,
                    r.rejections as f64,
                ]);
            }
            Err(e) => {
                failures += 1;
                eprintln!("gamma {gamma:e} failed: {e}");
                rows.push(vec![gamma, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN]);
            }
        }
    }
    let file = output_path(out_dir, &a.output, "gamma_sweep.csv")?;
    io::write_table(&file, &header, &rows)?;
    println!("wrote {}", file.display());

    if let Some(tol) = a.check_trend {
        if failures > 0 {
            return Err(CliError::Check(format!("{failures} solve(s) failed")));
        }
        let mut by_gamma: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        by_gamma.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in by_gamma.windows(2) {
            if !(w[1].1 <= w[0].1 * (1.0 + tol)) {
                return Err(CliError::Check(format!(
                    "endpoint error rises from {:.3e} at gamma {} to {:.3e} at gamma {}",
                    w[0].1, w[0].0, w[1].1, w[1].0
                )));
            }
        }
    }
    Ok(())
}

//! Command implementations. Exit codes: 0 ok, 1 validation fail, 2 solver
//! non-convergence, 3 regularity/certification fail (artifacts still
//! written), 64 usage or config error.

use crate::config::{ConfigError, RunConfig};
use crate::report;
use ricciwarp_core::general::solve_general;
use ricciwarp_core::hamilton::solve_constant_t2;
use ricciwarp_core::solution::ScalingSolution;
use ricciwarp_core::tensor::PrescribedTensor;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_REGULARITY: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

fn fail_usage(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

pub fn cmd_validate(cfg: &RunConfig, out: &Path) -> i32 {
    let tensor = match cfg.build_tensor() {
        Ok(t) => t,
        Err(e) => return fail_usage(e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail_usage(e);
    }
    let rep = tensor.validate(cfg.solver.validation_grid_n);
    let json = report::to_json_string(&report::validation_json(&rep));
    if let Err(e) = report::write_atomic(&out.join("validation.json"), &json) {
        return fail_usage(e);
    }
    if rep.pass {
        println!("validation: pass");
        EXIT_OK
    } else {
        for c in rep.failing() {
            println!("validation: FAIL {} (value {:.6e})", c.name, c.value);
        }
        EXIT_VALIDATION
    }
}

pub enum SolveOutcome {
    Solved { solution: Box<ScalingSolution>, certified: bool },
    ValidationFailed,
    SolverFailed(String),
}

/// The full solve pipeline behind `cmd_solve` and each sweep point:
/// validation gate, dispatch on T2 constancy (or the forced choice), and
/// certification against the report tolerances.
pub fn run_solve(cfg: &RunConfig, tensor: &PrescribedTensor) -> SolveOutcome {
    let rep = tensor.validate(cfg.solver.validation_grid_n);
    if !rep.pass {
        return SolveOutcome::ValidationFailed;
    }
    let use_hamilton = match cfg.problem.solver.as_str() {
        "hamilton" => true,
        "general" => false,
        _ => tensor.t2_is_constant(256),
    };
    let solved: Result<ScalingSolution, String> = if use_hamilton {
        solve_constant_t2(
            tensor,
            cfg.problem.f1_mid,
            cfg.problem.f2_value,
            &cfg.hamilton_options(),
        )
        .map_err(|e| e.to_string())
    } else {
        solve_general(tensor, cfg.problem.a, cfg.problem.s, &cfg.general_options())
            .map_err(|e| e.to_string())
    };
    match solved {
        Ok(solution) => {
            let r = &solution.residuals;
            let certified = r.sup_r0 <= cfg.report.residual_tol
                && r.sup_r1 <= cfg.report.residual_tol
                && r.sup_r2 <= cfg.report.residual_tol
                && r.sigma_max_dev <= cfg.report.sigma_tol
                && solution.regularity.pass;
            SolveOutcome::Solved { solution: Box::new(solution), certified }
        }
        Err(e) => SolveOutcome::SolverFailed(e),
    }
}

fn write_solution_artifacts(
    cfg: &RunConfig,
    sol: &ScalingSolution,
    certified: bool,
    out: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    report::write_atomic(&out.join("profile.csv"), &sol.profile_csv())?;
    let sjson = report::to_json_string(&report::solution_json(sol, certified));
    report::write_atomic(&out.join("solution.json"), &sjson)?;
    let resjson = report::to_json_string(&report::residual_json(&sol.residuals));
    report::write_atomic(&out.join("residuals.json"), &resjson)?;
    let rjson = report::to_json_string(&report::regularity_json(&sol.regularity));
    report::write_atomic(&out.join("regularity.json"), &rjson)?;
    report::write_atomic(&out.join("profile.svg"), &crate::plot::solution_svg(sol))?;
    if !sol.continuation.steps.is_empty() {
        report::write_atomic(&out.join("continuation.csv"), &sol.continuation.csv())?;
    }
    let _ = cfg;
    Ok(())
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> i32 {
    let tensor = match cfg.build_tensor() {
        Ok(t) => t,
        Err(e) => return fail_usage(e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail_usage(e);
    }
    let vrep = tensor.validate(cfg.solver.validation_grid_n);
    let vjson = report::to_json_string(&report::validation_json(&vrep));
    if let Err(e) = report::write_atomic(&out.join("validation.json"), &vjson) {
        return fail_usage(e);
    }
    match run_solve(cfg, &tensor) {
        SolveOutcome::ValidationFailed => {
            for c in vrep.failing() {
                eprintln!("validation: FAIL {} (value {:.6e})", c.name, c.value);
            }
            EXIT_VALIDATION
        }
        SolveOutcome::SolverFailed(e) => {
            eprintln!("solver: {e}");
            EXIT_NO_CONVERGENCE
        }
        SolveOutcome::Solved { solution, certified } => {
            if let Err(e) = write_solution_artifacts(cfg, &solution, certified, out) {
                return fail_usage(e);
            }
            println!(
                "solved: c1 = {:.12}, c2 = {:.12}, sup residuals ({:.3e}, {:.3e}, {:.3e}), certified = {certified}",
                solution.c1,
                solution.c2,
                solution.residuals.sup_r0,
                solution.residuals.sup_r1,
                solution.residuals.sup_r2
            );
            if certified {
                EXIT_OK
            } else {
                for c in solution.regularity.failing() {
                    eprintln!("regularity: FAIL {} (value {:.6e})", c.name, c.value);
                }
                EXIT_REGULARITY
            }
        }
    }
}

struct SweepPoint {
    value: f64,
    c1: f64,
    c2: f64,
    sup_r0: f64,
    sup_r1: f64,
    sup_r2: f64,
    status: String,
}

fn sweep_point_config(cfg: &RunConfig, parameter: &str, value: f64) -> Result<RunConfig, String> {
    let mut point = cfg.clone();
    match parameter {
        "kappa" => {
            point.tensor.kind = "perturbed".into();
            point.tensor.kappa = Some(value);
        }
        "a" => {
            if !(value > 0.0) {
                return Err(format!("a = {value} must be > 0"));
            }
            point.problem.a = value;
            // the two pipelines parametrize the same free initial value
            // through a = e^{-2 y1(1/2)} = 1/f1(1/2)^2
            point.problem.f1_mid = 1.0 / value.sqrt();
        }
        "d1" => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(format!("d1 = {value} must be an integer >= 2"));
            }
            point.tensor.d1 = value as u32;
        }
        other => return Err(format!("unknown sweep parameter '{other}'")),
    }
    Ok(point)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path, workers: usize) -> i32 {
    let sweep = match &cfg.sweep {
        Some(s) => s.clone(),
        None => return fail_usage("sweep command needs a [sweep] section"),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail_usage(e);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let points: Vec<SweepPoint> = pool.install(|| {
        use rayon::prelude::*;
        sweep
            .values
            .par_iter()
            .enumerate()
            .map(|(k, &value)| {
                let nan = f64::NAN;
                let fail = |status: String| SweepPoint {
                    value,
                    c1: nan,
                    c2: nan,
                    sup_r0: nan,
                    sup_r1: nan,
                    sup_r2: nan,
                    status,
                };
                let point_cfg = match sweep_point_config(cfg, &sweep.parameter, value) {
                    Ok(c) => c,
                    Err(e) => return fail(format!("config: {e}")),
                };
                let tensor = match point_cfg.build_tensor() {
                    Ok(t) => t,
                    Err(e) => return fail(format!("tensor: {e}")),
                };
                let sub = out.join(format!("point_{k:02}"));
                match run_solve(&point_cfg, &tensor) {
                    SolveOutcome::ValidationFailed => fail("validation".into()),
                    SolveOutcome::SolverFailed(e) => fail(format!("solver: {e}")),
                    SolveOutcome::Solved { solution, certified } => {
                        if write_solution_artifacts(&point_cfg, &solution, certified, &sub).is_err()
                        {
                            return fail("io".into());
                        }
                        SweepPoint {
                            value,
                            c1: solution.c1,
                            c2: solution.c2,
                            sup_r0: solution.residuals.sup_r0,
                            sup_r1: solution.residuals.sup_r1,
                            sup_r2: solution.residuals.sup_r2,
                            status: if certified { "ok".into() } else { "uncertified".into() },
                        }
                    }
                }
            })
            .collect()
    });

    let mut csv = String::from("parameter,value,c1,c2,sup_r0,sup_r1,sup_r2,status\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            sweep.parameter, p.value, p.c1, p.c2, p.sup_r0, p.sup_r1, p.sup_r2, p.status
        ));
    }
    if let Err(e) = report::write_atomic(&out.join("sweep.csv"), &csv) {
        return fail_usage(e);
    }
    let successes = points.iter().filter(|p| p.status == "ok" || p.status == "uncertified").count();
    println!("sweep: {successes}/{} points solved", points.len());
    if successes > 0 {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    RunConfig::load(path)
}

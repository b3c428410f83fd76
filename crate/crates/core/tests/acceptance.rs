//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use mrf_relax::dual::{dual_u, dual_u_smoothed, entropy_constant, free_energy};
use mrf_relax::generate::{generate_grid, generate_lp_tight, LpTightParams, PotentialLaw};
use mrf_relax::projection::{
    lipschitz_linear, project_primal_energy, project_primal_free_energy, solve_transport,
    solve_transport_entropic, TransportProblem,
};
use mrf_relax::solvers::{solve, DualSolution, RhoSchedule, SolverConfig, SolverKind};
use mrf_relax::{decompose_grid, Decomposition, Marginals, MrfModel, Reparametrization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_lambda(model: &MrfModel, rng: &mut ChaCha8Rng, scale: f64) -> Reparametrization {
    let mut l = Reparametrization::zeros(model);
    for row in &mut l.lambda {
        for x in row.iter_mut() {
            *x = rng.gen_range(-scale..scale);
        }
    }
    l
}

fn feasibility_certification() -> Outcome {
    let m = generate_grid(10, 10, 3, PotentialLaw::Uniform01, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let nodes: Vec<Vec<f64>> = (0..m.num_nodes())
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect())
            .collect();
        let mu = project_primal_energy(&m, &nodes).map_err(|e| e.to_string())?;
        worst = worst.max(m.constraint_residual(&mu).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 5.0,
        format!("worst residual {worst:.2e} over 1000 inputs in {secs:.2}s"),
    )
}

fn grid_suite() -> Vec<MrfModel> {
    let mut suite = Vec::new();
    for seed in 0..3 {
        suite.push(generate_grid(3, 3, 3, PotentialLaw::Uniform01, seed).unwrap());
        suite.push(generate_grid(4, 5, 2, PotentialLaw::UniformSym(1.0), seed).unwrap());
        suite.push(generate_grid(6, 6, 4, PotentialLaw::Uniform01, seed).unwrap());
    }
    suite
}

fn solver_config(kind: SolverKind, max_iters: usize) -> SolverConfig {
    let mut cfg = SolverConfig {
        max_iters,
        tolerance: 1e-6,
        ..SolverConfig::default()
    };
    if kind == SolverKind::Nest {
        cfg.rho = 0.1;
        cfg.rho_schedule = RhoSchedule::Diminishing {
            factor: 1.0,
            min_rho: 1e-8,
        };
    }
    cfg
}

fn weak_duality() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut records = 0;
    for m in grid_suite() {
        let d = decompose_grid(&m).unwrap();
        for kind in SolverKind::ALL {
            let r = solve(kind, &m, Some(&d), &solver_config(kind, 300)).map_err(|e| e.to_string())?;
            for rec in &r.records {
                worst = worst.min(rec.primal_bound - rec.dual_bound);
                records += 1;
            }
        }
    }
    check(
        worst >= -1e-9,
        format!("smallest primal - dual {worst:.2e} over {records} records"),
    )
}

fn tree_exactness() -> Outcome {
    let mut worst_gap: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut failures = Vec::new();
    for seed in 0..20 {
        let m = random_tree(seed);
        let oracle = if m.label_counts().iter().map(|&k| k as f64).product::<f64>() <= 2e5 {
            exhaustive_map(&m).0
        } else {
            leaf_elimination(&m)
        };
        let d = Decomposition::for_forest(&m).unwrap();
        let start = Instant::now();
        for kind in SolverKind::ALL {
            let mut cfg = solver_config(kind, 1_000_000);
            cfg.time_budget_s = 7.0;
            let r = solve(kind, &m, Some(&d), &cfg).map_err(|e| e.to_string())?;
            let last = r.last();
            let scale = oracle.abs().max(1.0);
            let err = ((last.primal_bound - oracle).abs()).max((last.dual_bound - oracle).abs()) / scale;
            worst_gap = worst_gap.max(last.relative_gap());
            worst_err = worst_err.max(err);
            if last.relative_gap() > 1e-6 || err > 1e-6 {
                failures.push(format!("seed {seed} {kind}"));
            }
        }
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    check(
        failures.is_empty() && slowest < 30.0,
        format!(
            "worst relative gap {worst_gap:.2e}, worst distance to MAP {worst_err:.2e}, slowest instance {slowest:.2}s{}",
            if failures.is_empty() { String::new() } else { format!(", failed: {}", failures.join(", ")) }
        ),
    )
}

fn lp_oracle_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let m = generate_grid(3, 3, 3, PotentialLaw::UniformSym(1.0), seed).unwrap();
        let (value, _) = lp_oracle(&m);
        let cfg = SolverConfig {
            max_iters: 500_000,
            tolerance: 1e-8,
            ..SolverConfig::default()
        };
        let r = solve(SolverKind::Fpd, &m, None, &cfg).map_err(|e| e.to_string())?;
        let last = r.last();
        worst = worst
            .max((last.dual_bound - value).abs())
            .max((last.primal_bound - value).abs());
    }
    check(
        worst <= 1e-4,
        format!("largest bound deviation from the LP optimum {worst:.2e}"),
    )
}

fn smoothing_envelope() -> Outcome {
    let m = generate_grid(5, 5, 3, PotentialLaw::Uniform01, 2).unwrap();
    let d = decompose_grid(&m).unwrap();
    let log_x: f64 = m.label_counts().iter().map(|&k| (k as f64).ln()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut lo, mut hi_slack) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..100 {
        let l = random_lambda(&m, &mut rng, 1.0);
        let u = dual_u(&m, &d, &l).unwrap().value;
        for rho in [1.0, 0.1] {
            let us = dual_u_smoothed(&m, &d, &l, rho).unwrap().value;
            lo = lo.min(u - us);
            hi_slack = hi_slack.min(2.0 * rho * log_x - (u - us));
        }
    }
    check(
        lo >= 0.0 && hi_slack >= 0.0,
        format!("min(U - U_rho) {lo:.3e}, min slack to 2 rho log|X| {hi_slack:.3e}"),
    )
}

fn gradient_check() -> Outcome {
    let m = generate_grid(3, 3, 3, PotentialLaw::UniformSym(1.0), 4).unwrap();
    let d = decompose_grid(&m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let l = random_lambda(&m, &mut rng, 1.0);
        for rho in [1.0, 0.1, 0.01] {
            let g = dual_u_smoothed(&m, &d, &l, rho).unwrap().gradient;
            let flat: Vec<f64> = l.lambda.iter().flatten().copied().collect();
            let shape: Vec<usize> = l.lambda.iter().map(Vec::len).collect();
            let f = |x: &[f64]| {
                let mut rows = Vec::new();
                let mut at = 0;
                for &k in &shape {
                    rows.push(x[at..at + k].to_vec());
                    at += k;
                }
                dual_u_smoothed(&m, &d, &Reparametrization { lambda: rows }, rho)
                    .unwrap()
                    .value
            };
            let fd: Vec<f64> = (0..flat.len())
                .map(|k| central_difference(f, &flat, k, 1e-4 * rho))
                .collect();
            let g: Vec<f64> = g.into_iter().flatten().collect();
            let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let norm = fd.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
            worst = worst.max(diff / norm);
        }
    }
    check(
        worst <= 1e-5,
        format!("worst relative sup-norm error {worst:.2e}"),
    )
}

fn free_energy_sandwich() -> Outcome {
    let m = generate_grid(4, 4, 3, PotentialLaw::UniformSym(1.0), 3).unwrap();
    let d = decompose_grid(&m).unwrap();
    let c_h = entropy_constant(&m, &d);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        let mu = random_feasible(&m, &mut rng, 1 + i % 6);
        let e = m.relaxed_energy(&mu).unwrap();
        for rho in [1.0, 0.1] {
            let f = free_energy(&m, &d, &mu, rho).map_err(|e| e.to_string())?;
            worst = worst.min(e - f).min(f + rho * c_h - e);
        }
    }
    check(
        worst >= -1e-9,
        format!("smallest slack of the sandwich {worst:.3e}"),
    )
}

fn smoothed_strong_duality() -> Outcome {
    let m = generate_grid(4, 4, 3, PotentialLaw::UniformSym(1.0), 8).unwrap();
    let d = decompose_grid(&m).unwrap();
    let rho = 0.5;
    let cfg = SolverConfig {
        max_iters: 5000,
        rho,
        tolerance: 0.0,
        track_smoothed_gap: false,
        ..SolverConfig::default()
    };
    let r = solve(SolverKind::Nest, &m, Some(&d), &cfg).map_err(|e| e.to_string())?;
    let DualSolution::Lambda(lambda) = &r.dual else {
        return Err("NEST returned no reparametrization".into());
    };
    let eval = dual_u_smoothed(&m, &d, lambda, rho).unwrap();
    let mu =
        project_primal_free_energy(&m, &d, &eval.mean_node_marginals(), rho).map_err(|e| e.to_string())?;
    let primal = free_energy(&m, &d, &mu, rho).map_err(|e| e.to_string())?;
    let diff = (primal - eval.value).abs();
    check(
        diff <= 1e-3,
        format!(
            "smoothed dual {:.6}, free energy {primal:.6}, difference {diff:.2e}",
            eval.value
        ),
    )
}

fn random_transport(rng: &mut ChaCha8Rng) -> TransportProblem {
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(1..=5);
    let degenerate = rng.gen_bool(0.5);
    let marginal = |k: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let raw: Vec<f64> = (0..k)
            .map(|_| {
                if degenerate {
                    // small integers produce ties and zero entries
                    rng.gen_range(0..3) as f64
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        if raw.iter().sum::<f64>() == 0.0 {
            vec![1.0; k]
        } else {
            raw
        }
    };
    let r = marginal(n, rng);
    let s = marginal(m, rng);
    let cost: Vec<f64> = (0..n * m)
        .map(|_| {
            if degenerate {
                rng.gen_range(0..4) as f64
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    TransportProblem::new(cost, &r, &s).unwrap()
}

fn transport_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_cost, mut worst_cert, mut worst_feas): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut most_pivots = 0;
    for _ in 0..500 {
        let p = random_transport(&mut rng);
        let sol = solve_transport(&p).map_err(|e| e.to_string())?;
        let oracle = transport_bfs_oracle(&p);
        worst_cost = worst_cost.max((sol.cost - oracle).abs());
        worst_cert = worst_cert.max(sol.certificate_violation(&p));
        let (n, m) = (p.rows(), p.cols());
        for i in 0..n {
            let s: f64 = sol.plan[i * m..(i + 1) * m].iter().sum();
            worst_feas = worst_feas.max((s - p.supply()[i]).abs());
        }
        for j in 0..m {
            let s: f64 = (0..n).map(|i| sol.plan[i * m + j]).sum();
            worst_feas = worst_feas.max((s - p.demand()[j]).abs());
        }
        worst_feas = worst_feas.max(-sol.plan.iter().copied().fold(0.0, f64::min));
        most_pivots = most_pivots.max(sol.pivots);
    }
    check(
        worst_cost <= 1e-10 && worst_cert <= 1e-10 && worst_feas <= 1e-10,
        format!(
            "cost error {worst_cost:.2e}, certificate violation {worst_cert:.2e}, marginal error {worst_feas:.2e}, most pivots {most_pivots}"
        ),
    )
}

fn entropic_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=5);
        let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.01).collect();
        let s: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.01).collect();
        let cost: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = TransportProblem::new(cost, &r, &s).unwrap();
        let exact = solve_transport(&p).map_err(|e| e.to_string())?;
        let ent = solve_transport_entropic(&p, 1e-6, 1, p.supply(), p.demand()).map_err(|e| e.to_string())?;
        let cost: f64 = ent.plan.iter().zip(p.cost()).map(|(a, b)| a * b).sum();
        worst = worst.max((cost - exact.cost).abs());
    }
    check(worst <= 1e-4, format!("largest cost difference {worst:.2e}"))
}

fn infinity_scaling() -> Outcome {
    let start = Instant::now();
    let mut curves = Vec::new();
    for infinity in [1e4, 1e5, 1e6, 1e7] {
        let params = LpTightParams {
            rows: 20,
            cols: 20,
            labels: 3,
            margin: 10.0,
            infinity,
            forbidden_fraction: 0.3,
            seed: 1,
        };
        let (m, planted) = generate_lp_tight(&params).unwrap();
        let d = decompose_grid(&m).unwrap();
        let e_star = m.energy(&planted).unwrap();
        let cfg = SolverConfig {
            max_iters: 400,
            rho: 1.0,
            tolerance: 0.0,
            track_smoothed_gap: false,
            ..SolverConfig::default()
        };
        let r = solve(SolverKind::Nest, &m, Some(&d), &cfg).map_err(|e| e.to_string())?;
        curves.push(
            r.records
                .iter()
                .map(|rec| rec.primal_bound - e_star)
                .collect::<Vec<f64>>(),
        );
    }
    let mut offsets = Vec::new();
    for pair in curves.windows(2) {
        let logs: Vec<f64> = pair[0]
            .iter()
            .zip(&pair[1])
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| b.ln() - a.ln())
            .collect();
        offsets.push(logs.iter().sum::<f64>() / logs.len().max(1) as f64);
    }
    let secs = start.elapsed().as_secs_f64();
    let target = 10f64.ln();
    check(
        offsets.iter().all(|o| (o - target).abs() <= 0.7) && secs < 600.0,
        format!(
            "mean offsets {} (log 10 = {target:.3}) in {secs:.1}s",
            offsets
                .iter()
                .map(|o| format!("{o:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn gap_convergence() -> Outcome {
    let m = generate_grid(30, 30, 4, PotentialLaw::Uniform01, 0).unwrap();
    let d = decompose_grid(&m).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for kind in [SolverKind::Fpd, SolverKind::SgAve, SolverKind::SgWei] {
        let cfg = SolverConfig {
            max_iters: 4000,
            tolerance: 0.0,
            ..SolverConfig::default()
        };
        let r = solve(kind, &m, Some(&d), &cfg).map_err(|e| e.to_string())?;
        let monotone = r.records.windows(2).all(|w| w[1].dual_bound >= w[0].dual_bound);
        let integer_above = r.records.iter().all(|x| x.integer_bound >= x.primal_bound - 1e-9);
        let at20 = r
            .records
            .iter()
            .find(|x| x.iter == 20)
            .map(|x| x.gap)
            .unwrap_or(f64::NAN);
        let shrink = at20 / r.last().gap;
        ok &= monotone && integer_above && shrink >= 10.0;
        details.push(format!("{kind} shrink {shrink:.1}x"));
        if !monotone {
            details.push(format!("{kind} dual not monotone"));
        }
        if !integer_above {
            details.push(format!("{kind} integer below relaxed"));
        }
    }
    check(ok, details.join(", "))
}

fn projection_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = f64::INFINITY;
    for (inst, seed) in (0..4).enumerate() {
        let m = generate_grid(3, 3, 3, PotentialLaw::UniformSym(1.0), seed).unwrap();
        let (e_star, _) = lp_oracle(&m);
        let lip = lipschitz_linear(&m);
        let dykstra = Dykstra::new(&m);
        for _ in 0..25 {
            let spread = [0.05, 0.3, 1.0][inst % 3];
            let base = random_feasible(&m, &mut rng, 3);
            let jitter = |b: &Vec<Vec<f64>>, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
                b.iter()
                    .map(|r| r.iter().map(|v| v + rng.gen_range(-spread..spread)).collect())
                    .collect()
            };
            let z = Marginals {
                nodes: jitter(&base.nodes, &mut rng),
                edges: Some(jitter(base.edges.as_ref().unwrap(), &mut rng)),
            };
            let flat = flatten(&z);
            let proj = dykstra.project(&flat, 1e-13, 200_000);
            let dist = (&flat - &proj).norm();
            let p = project_primal_energy(&m, &z.nodes).map_err(|e| e.to_string())?;
            let lhs = (m.relaxed_energy(&p).unwrap() - e_star).abs();
            let rhs = (m.relaxed_energy(&z).unwrap() - e_star).abs() + (lip.l_x + lip.l_y) * dist;
            worst = worst.min(rhs - lhs);
        }
    }
    check(
        worst >= -1e-9,
        format!("smallest slack of the bound {worst:.3e} over 100 points"),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("feasibility certification", feasibility_certification),
        ("weak duality at every epoch", weak_duality),
        ("tree exactness", tree_exactness),
        ("dense LP oracle agreement", lp_oracle_agreement),
        ("smoothing envelope", smoothing_envelope),
        ("smoothed gradient vs finite differences", gradient_check),
        ("free energy sandwich", free_energy_sandwich),
        ("smoothed strong duality", smoothed_strong_duality),
        ("transportation simplex vs enumeration", transport_correctness),
        ("entropic transport limit", entropic_limit),
        ("infinity scaling offsets", infinity_scaling),
        ("gap convergence on a 30x30 grid", gap_convergence),
        ("projection bound", projection_bound),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

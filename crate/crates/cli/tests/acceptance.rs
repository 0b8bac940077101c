//! Full-system acceptance run: one verdict line per criterion, all asserted
//! at the end. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines as they print.

use contact_hj::characteristics::{
    assemble_solutions, find_fixed_points, rk4_integrate, CharacteristicsError, ContactState,
};
use contact_hj::model::{make_grid, sup_dist, ContactModel, PeriodicGrid};
use contact_hj::reference::{build_critical_solution, IntervalFamily};
use contact_hj::semigroup::{
    action_profile, backward_step, evolve, forward_step, residual_report, solve_fixed_point,
    Direction, SolveReport, SolveStatus, StepParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;
use tempfile::TempDir;

struct Tally {
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Tally {
        Tally { failures: Vec::new() }
    }

    fn check(&mut self, id: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {verdict} — {detail}");
        if !pass {
            self.failures.push(format!("{id}: {detail}"));
        }
    }
}

fn hjc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hjc"))
        .args(args)
        .output()
        .expect("spawn hjc")
}

fn solve(
    seed: &[f64],
    m: &ContactModel,
    grid: &PeriodicGrid,
    sp: &StepParams,
    dir: Direction,
) -> SolveReport {
    solve_fixed_point(seed, m, grid, sp, dir).expect("solver setup")
}

/// Integrates from `s0`, backing off to just before the blowup time when the
/// orbit escapes; returns the kept samples.
fn trajectory(s0: ContactState, t_end: f64, h: f64, m: &ContactModel) -> Vec<(f64, ContactState)> {
    match rk4_integrate(s0, (0.0, t_end), h, m) {
        Ok(t) => t,
        Err(CharacteristicsError::Blowup { t }) => {
            let t_safe = t - 2.0 * h;
            if t_safe < h {
                vec![(0.0, s0)]
            } else {
                rk4_integrate(s0, (0.0, t_safe), h, m).expect("pre-blowup span")
            }
        }
        Err(e) => panic!("trajectory failed: {e}"),
    }
}

#[test]
fn acceptance_criteria() {
    let mut tally = Tally::new();
    let grid = make_grid(2048).unwrap();
    let delta = 1e-3;

    // 1 — bisection on the default model brackets zero
    {
        let start = Instant::now();
        let tmp = TempDir::new().unwrap();
        let dir = tmp.path().join("crit");
        let out = hjc(&[
            "critical", "--n", "1024", "--delta", "0.001", "--horizon", "50", "--out",
            dir.to_str().unwrap(),
        ]);
        let elapsed = start.elapsed();
        let line = std::fs::read_to_string(dir.join("critical.txt")).unwrap_or_default();
        let c_hat: f64 = line
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("c_hat="))
            .and_then(|v| v.parse().ok())
            .unwrap_or(f64::NAN);
        let pass = out.status.code() == Some(0)
            && c_hat.abs() <= 0.02
            && elapsed.as_secs_f64() <= 120.0;
        tally.check(
            "1",
            pass,
            format!("c_hat = {c_hat:.2e} within ±0.02, {:.1}s of 120s budget", elapsed.as_secs_f64()),
        );
    }

    // 3 — grid limits vs assembled fronts at three levels (computed first so
    // the level-one profiles can be reused by criterion 2)
    let mut level_one: Option<(Vec<f64>, Vec<f64>)> = None;
    {
        let start = Instant::now();
        let mut worst_upper: f64 = 0.0;
        let mut worst_lower: f64 = 0.0;
        let mut ordered = true;
        for c in [0.8, 1.0, 2.0] {
            let m = ContactModel::toy(c);
            let sp = StepParams::for_model(&m, &grid, delta);
            let (u0a, u1a) = assemble_solutions(&m, &grid).unwrap();
            let up = solve(&vec![c; grid.n], &m, &grid, &sp, Direction::Backward);
            let down = solve(&vec![0.0; grid.n], &m, &grid, &sp, Direction::Forward);
            let bar = solve(&down.solution, &m, &grid, &sp, Direction::Backward);
            worst_upper = worst_upper.max(sup_dist(&up.solution, &u1a));
            worst_lower = worst_lower.max(sup_dist(&bar.solution, &u0a));
            ordered &= u0a.iter().zip(&u1a).all(|(a, b)| a <= b);
            if c == 1.0 {
                level_one = Some((u0a, bar.solution.clone()));
            }
        }
        let elapsed = start.elapsed();
        let pass = worst_upper <= 0.05
            && worst_lower <= 0.05
            && ordered
            && elapsed.as_secs_f64() <= 600.0;
        let detail = format!(
            "const-c vs u1 within {worst_upper:.1e}, recipe vs u0 within {worst_lower:.1e}, \
             u0 <= u1 nodewise: {ordered}, {:.1}s of 600s budget",
            elapsed.as_secs_f64()
        );
        // printed in order below
        let (u0a, bar) = level_one.as_ref().unwrap();
        let sins: Vec<f64> = grid.xs.iter().map(|x| x.sin()).collect();
        let d_traced = sup_dist(u0a, &sins);
        let d_grid = sup_dist(bar, &sins);
        tally.check(
            "2",
            d_traced <= 1e-3 && d_grid <= 0.05,
            format!("lower solution vs sin: traced {d_traced:.1e} (<= 1e-3), grid {d_grid:.1e} (<= 0.05)"),
        );
        tally.check("3", pass, detail);
    }

    // 4 — the endpoint bump profile at the critical level
    {
        let m0 = ContactModel::toy(0.0);
        let u = build_critical_solution(&IntervalFamily::full(), &grid).unwrap();
        let at = u[3 * grid.n / 4];
        let value_ok = (at - 0.358886).abs() <= 1e-5;
        let rr = residual_report(&u, &m0, &grid);
        let gate_ok =
            rr.max_smooth_residual <= 1e-3 && rr.convex_kinks() == 0 && rr.concave_kinks() == 1;
        let sp0 = StepParams::for_model(&m0, &grid, delta);
        let moved = evolve(&u, 1.0, &m0, &grid, &sp0, Direction::Backward).unwrap();
        let drift = sup_dist(&u, &moved);
        tally.check(
            "4",
            value_ok && gate_ok && drift <= 5e-3,
            format!(
                "u(3pi/2) = {at:.7} vs 0.358886, residual {:.1e} with concave-only corner, \
                 unit-time drift {drift:.1e} (<= 5e-3)",
                rr.max_smooth_residual
            ),
        );
    }

    // 5 — linearization at both rest points across levels
    {
        let mut pass = true;
        let mut worst: f64 = 0.0;
        for c in [0.8, 1.0, 2.0] {
            let fps = find_fixed_points(&ContactModel::toy(c));
            pass &= fps.len() == 2;
            let root = (1.0 + 8.0 * c).sqrt();
            // fps[0] sits at -pi/2 (coupling -1), fps[1] at +pi/2 (coupling +1)
            let cases = [
                (&fps[0], [[0.0, 2.0], [c, 1.0]], ((1.0 + root) / 2.0, (1.0 - root) / 2.0)),
                (&fps[1], [[0.0, 2.0], [c, -1.0]], ((-1.0 + root) / 2.0, (-1.0 - root) / 2.0)),
            ];
            for (fp, jac, (mu_u, mu_s)) in cases {
                pass &= fp.jacobian == jac;
                let (a, b) = fp.eigenvalues;
                worst = worst.max((a - mu_u).abs()).max((b - mu_s).abs());
            }
        }
        pass &= worst <= 1e-10;
        tally.check(
            "5",
            pass,
            format!("jacobians exact, eigenvalue defect {worst:.1e} (<= 1e-10)"),
        );
    }

    // 6a — order preservation of both one-step operators, exactly
    {
        let m = ContactModel::toy(1.0);
        let g256 = make_grid(256).unwrap();
        let sp = StepParams::for_model(&m, &g256, delta);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut exact = true;
        for _ in 0..1000 {
            let f: Vec<f64> = (0..g256.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: Vec<f64> = f.iter().map(|v| v + 0.01 + rng.gen_range(0.0..0.5)).collect();
            let bf = backward_step(&f, &m, &g256, &sp).unwrap();
            let bg = backward_step(&g, &m, &g256, &sp).unwrap();
            exact &= bf.iter().zip(&bg).all(|(a, b)| a <= b);
            let ff = forward_step(&f, &m, &g256, &sp).unwrap();
            let fg = forward_step(&g, &m, &g256, &sp).unwrap();
            exact &= ff.iter().zip(&fg).all(|(a, b)| a <= b);
        }
        tally.check("6a", exact, "10^3 ordered pairs stay ordered, no tolerance".to_string());
    }

    // 6b — the backward flow lifts strict subsolutions
    {
        let m = ContactModel::toy(1.0);
        let g512 = make_grid(512).unwrap();
        let sp = StepParams::for_model(&m, &g512, delta);
        let slack = 10.0 * sp.delta * sp.delta;
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut monotone = true;
        for _ in 0..100 {
            let alpha = rng.gen_range(-0.3..0.3);
            let beta = rng.gen_range(-0.3..0.3);
            let mut f: Vec<f64> = g512.xs.iter().map(|x| alpha * x.sin() + beta).collect();
            for _ in 0..200 {
                let g = backward_step(&f, &m, &g512, &sp).unwrap();
                monotone &= f.iter().zip(&g).all(|(fi, gi)| *gi >= *fi - slack);
                f = g;
            }
        }
        tally.check(
            "6b",
            monotone,
            format!("10^2 subsolution seeds nondecreasing over 200 steps, slack {slack:.0e}"),
        );
    }

    // 6c — value round-trip through the two action kernels; the defect
    // scales with the node spacing of the point source, so this runs finer
    {
        let m = ContactModel::toy(1.0);
        let g4096 = make_grid(4096).unwrap();
        let sp = StepParams::for_model(&m, &g4096, delta);
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let i0 = rng.gen_range(0..g4096.n);
            let u0 = rng.gen_range(-1.0..1.0);
            let t = rng.gen_range(0.5..2.0);
            let cost =
                action_profile(g4096.xs[i0], u0, t, &m, &g4096, &sp, Direction::Backward).unwrap();
            let reached: Vec<usize> = (0..g4096.n).filter(|&i| cost[i] < 100.0).collect();
            assert!(!reached.is_empty());
            let ix = reached[rng.gen_range(0..reached.len())];
            let back =
                action_profile(g4096.xs[ix], cost[ix], t, &m, &g4096, &sp, Direction::Forward)
                    .unwrap();
            worst = worst.max((back[i0] - u0).abs());
        }
        tally.check(
            "6c",
            worst <= 1e-2,
            format!("10^2 round-trips recover the source value within {worst:.1e} (<= 1e-2)"),
        );
    }

    // 6d — energy-shell drift along characteristics while the orbit stays in
    // a bounded phase window (every random start escapes before t = 20)
    {
        let m = ContactModel::toy(1.0);
        let h = 1e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let mut worst: f64 = 0.0;
        let mut kept = 0usize;
        for _ in 0..100 {
            let x0 = loop {
                let x: f64 = rng.gen_range(0.0..TAU);
                if x.sin().abs() > 0.1 {
                    break x;
                }
            };
            let p0 = rng.gen_range(-2.0..2.0);
            let u0 = (m.c - m.h(x0, p0)) / x0.sin();
            for (_, s) in trajectory(ContactState::new(x0, p0, u0), 20.0, h, &m) {
                if s.p.abs() <= 50.0 && s.u.abs() <= 50.0 {
                    worst = worst.max((m.hamiltonian_value(s.x, s.p, s.u) - m.c).abs());
                    kept += 1;
                }
            }
        }
        tally.check(
            "6d",
            worst <= 1e-8 && kept > 0,
            format!("10^2 on-shell starts, drift {worst:.1e} over {kept} bounded samples (<= 1e-8)"),
        );
    }

    // 6e — kinetic and velocity costs pair off
    {
        let m = ContactModel::toy(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let mut pass = true;
        for _ in 0..10_000 {
            let p = rng.gen_range(-10.0..10.0);
            let v = rng.gen_range(-10.0..10.0);
            let x = rng.gen_range(0.0..TAU);
            pass &= m.h(x, p) + m.l(x, v) >= p * v - 1e-9;
            let p_star = 0.5 * v;
            pass &= (m.h(x, p_star) + m.l(x, v) - p_star * v).abs() <= 1e-8;
        }
        tally.check("6e", pass, "10^4 samples satisfy the pairing inequality".to_string());
    }

    // 6f — reflecting a trajectory about x = pi/2 flips it exactly
    {
        let m = ContactModel::toy(1.0);
        let h = 1e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let x0 = loop {
                let x: f64 = rng.gen_range(0.0..TAU);
                if x.sin().abs() > 0.3 {
                    break x;
                }
            };
            let p0 = rng.gen_range(-1.0..1.0);
            let u0 = (m.c - m.h(x0, p0)) / x0.sin();
            let a = trajectory(ContactState::new(x0, p0, u0), 2.0, h, &m);
            let b = trajectory(ContactState::new(PI - x0, -p0, u0), 2.0, h, &m);
            for ((_, s), (_, sm)) in a.iter().zip(&b) {
                worst = worst
                    .max((sm.x - (PI - s.x)).abs())
                    .max((sm.p + s.p).abs())
                    .max((sm.u - s.u).abs());
            }
        }
        tally.check(
            "6f",
            worst <= 1e-8,
            format!("10 mirrored pairs agree within {worst:.1e} (<= 1e-8)"),
        );
    }

    // 7 — a level below critical trips the divergence signal
    {
        let m = ContactModel::toy(-0.5);
        let g1024 = make_grid(1024).unwrap();
        let sp = StepParams::for_model(&m, &g1024, delta);
        let rep = solve(&vec![0.0; g1024.n], &m, &g1024, &sp, Direction::Backward);
        let t_hit = rep.iterations as f64 * sp.delta;
        let tmp = TempDir::new().unwrap();
        let out = hjc(&[
            "solve", "--c=-0.5", "--n", "256",
            "--out", tmp.path().join("div").to_str().unwrap(),
        ]);
        let pass = rep.status == SolveStatus::Diverged && t_hit <= 50.0
            && out.status.code() == Some(2);
        tally.check(
            "7",
            pass,
            format!("diverged at t = {t_hit:.1} of 50, solve exit code {:?}", out.status.code()),
        );
    }

    // 8 — identical configs give byte-identical outputs
    {
        let tmp = TempDir::new().unwrap();
        let run = |dir: &std::path::Path| {
            let out = hjc(&[
                "reproduce-figure", "--c-list", "0.8,1,2", "--n", "1024", "--delta", "0.001",
                "--out", dir.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        };
        let da = tmp.path().join("a");
        let db = tmp.path().join("b");
        run(&da);
        run(&db);
        let mut compared = 0usize;
        let mut identical = true;
        let mut names = vec!["distances.txt".to_string()];
        for c in ["0.8", "1", "2"] {
            for f in ["u0.csv", "u1.csv", "u_minus.csv", "u_plus.csv", "u_bar_minus.csv"] {
                names.push(format!("c-{c}/{f}"));
            }
        }
        for name in &names {
            let ba = std::fs::read(da.join(name)).unwrap();
            let bb = std::fs::read(db.join(name)).unwrap();
            identical &= ba == bb;
            compared += 1;
        }
        tally.check(
            "8",
            identical && compared == 16,
            format!("{compared} files byte-identical across two runs"),
        );
    }

    assert!(
        tally.failures.is_empty(),
        "acceptance failures:\n{}",
        tally.failures.join("\n")
    );
}

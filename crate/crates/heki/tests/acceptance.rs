//! Acceptance gate: eight end-to-end criteria with pinned tolerances.
//!
//! Each test prints one `criterion N: PASS/FAIL (...)` line with the
//! measured quantities and asserts the pinned thresholds. Statistical
//! criteria run on the committed seed set (base seed 0); outcomes are
//! reported as measured.

use std::time::Instant;

use heki::config::{ExperimentConfig, Method};
use heki::experiment::{make_truth, paired_wins, run_many, Problem};
use heki::limits::refinement_study;

use heki_core::ensemble::{
    cross_cov, perturb_observations, scaled_gamma, update_with_perturbed,
};
use heki_core::flow::LinearFlow;
use heki_core::grid::Grid1d;
use heki_core::hierarchy::{noncentred_update, stack_centred, Clamp, NonCentredEnsemble};
use heki_core::linalg::Mat;
use heki_core::matern::{MaternParams, SpectralFieldMap};
use heki_core::rng::{stream, Prng};
use heki_core::variants::gauss_taper_matrix;

use nalgebra as na;

// Pinned tolerances and budgets, one place. [DERIVED] values are frozen
// outputs of independent oracles.
const SPAN_TOL: f64 = 1e-8;
const ESCAPE_MIN: f64 = 1e-3;
const EXACT_TOL: f64 = 1e-12;
const HAND_TOL: f64 = 1e-14;
const PRIOR_REL_FRO_MAX: f64 = 0.05;
const PRIOR_SE_BAND: f64 = 3.0;
const PRIOR_SAMPLES: usize = 50_000;
const PRIOR_SEED: u64 = 0x6d61_7465_726e;
const DISSIPATION_STEPS: usize = 1_000;
const DISSIPATION_DT: f64 = 1e-3;
const INFLATION_GAMMA: f64 = 0.1;
const ORDER_BAND: (f64, f64) = (0.8, 1.2);
const SEED_COUNT: usize = 10;
const ELL_TARGET: f64 = 37.0;
const ELL_BAND: f64 = 12.0; // |prior mean - target|
const BAND_SEEDS_MIN: usize = 9;
const WINS_MIN: usize = 8;

fn report(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("{name}: {verdict} ({detail})");
    assert!(pass, "{name}: FAIL ({detail})");
}

fn orthonormal_basis(m: &Mat) -> na::DMatrix<f64> {
    let dm = na::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)]);
    dm.qr().q()
}

/// Largest relative distance of any column of `cols` from span(Q).
fn span_residual(q: &na::DMatrix<f64>, cols: &Mat) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..cols.cols() {
        let c = na::DVector::from_vec(cols.col(j));
        let proj = q * (q.transpose() * &c);
        let r = (&c - proj).norm() / c.norm();
        worst = worst.max(r);
    }
    worst
}

struct Setup {
    cfg: ExperimentConfig,
    problem: Problem,
    y: Vec<f64>,
    gs: Vec<f64>,
}

fn setup(n_particles: usize) -> Setup {
    let cfg = ExperimentConfig {
        n_particles,
        ..ExperimentConfig::default()
    };
    let problem = Problem::new(&cfg).unwrap();
    let truth = make_truth(&problem, &cfg, cfg.base_seed).unwrap();
    let gs = scaled_gamma(
        &vec![cfg.gamma_update; problem.fwd.data_len()],
        cfg.step,
    )
    .unwrap();
    Setup {
        cfg,
        problem,
        y: truth.y,
        gs,
    }
}

#[test]
fn c1_subspace_invariance_standard_and_centred() {
    let t0 = Instant::now();
    let s = setup(50);
    let unit = s.cfg.ell_unit;
    let j = s.cfg.n_particles;

    let mut rx = Prng::substream(s.cfg.base_seed, stream::INIT_FIELD);
    let mut re = Prng::substream(s.cfg.base_seed, stream::INIT_HYPER);
    let ens = NonCentredEnsemble::init(
        s.cfg.grid_points,
        j,
        s.cfg.ell_init[0],
        s.cfg.ell_init[1],
        &mut rx,
        &mut re,
    )
    .unwrap();

    // Standard: fixed-lengthscale physical ensemble updated directly.
    let mut u = Mat::zeros(s.cfg.grid_points, j);
    for c in 0..j {
        u.set_col(
            c,
            &s.problem
                .map
                .transform(&ens.xi.col(c), s.cfg.ell_fixed * unit)
                .unwrap(),
        );
    }
    let q_std = orthonormal_basis(&u);
    let mut rp = Prng::substream(s.cfg.base_seed, stream::UPDATE_PERTURBATIONS);
    let mut res_std = 0.0_f64;
    for _ in 0..s.cfg.n_iterations {
        let preds = s.problem.fwd.predict_ensemble(&u).unwrap();
        let yp = perturb_observations(&s.y, &s.gs, j, &mut rp).unwrap();
        u = update_with_perturbed(&u, &preds, &yp, &s.gs).unwrap();
        res_std = res_std.max(span_residual(&q_std, &u));
    }

    // Centred: joint (field, lengthscale) state updated directly.
    let fields = ens.physical_fields(&s.problem.map, unit).unwrap();
    let mut stacked = stack_centred(&fields, &ens.ell).unwrap();
    let q_cen = orthonormal_basis(&stacked);
    let mut rp = Prng::substream(s.cfg.base_seed, stream::UPDATE_PERTURBATIONS);
    let mut res_cen = 0.0_f64;
    for _ in 0..s.cfg.n_iterations {
        let mut f = Mat::zeros(s.cfg.grid_points, j);
        for c in 0..j {
            let col = stacked.col(c);
            f.set_col(c, &col[..s.cfg.grid_points]);
        }
        let preds = s.problem.fwd.predict_ensemble(&f).unwrap();
        let yp = perturb_observations(&s.y, &s.gs, j, &mut rp).unwrap();
        heki_core::hierarchy::centred_update(&mut stacked, &preds, &yp, &s.gs).unwrap();
        res_cen = res_cen.max(span_residual(&q_cen, &stacked));
    }

    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 1 (subspace invariance)",
        res_std < SPAN_TOL && res_cen < SPAN_TOL && dt < 5.0,
        &format!("standard {res_std:.2e}, centred {res_cen:.2e}, tol {SPAN_TOL:.0e}, {dt:.2} s"),
    );
}

#[test]
fn c2_noncentred_escapes_physical_span() {
    let t0 = Instant::now();
    // Span breaking needs fewer particles than field dimensions.
    let s = setup(20);
    let unit = s.cfg.ell_unit;
    let j = s.cfg.n_particles;
    let clamp = Clamp {
        lo: s.cfg.ell_clamp[0],
        hi: s.cfg.ell_clamp[1],
    };

    let mut rx = Prng::substream(s.cfg.base_seed, stream::INIT_FIELD);
    let mut re = Prng::substream(s.cfg.base_seed, stream::INIT_HYPER);
    let mut ens = NonCentredEnsemble::init(
        s.cfg.grid_points,
        j,
        s.cfg.ell_init[0],
        s.cfg.ell_init[1],
        &mut rx,
        &mut re,
    )
    .unwrap();
    let mut rp = Prng::substream(s.cfg.base_seed, stream::UPDATE_PERTURBATIONS);

    let u0 = ens.physical_fields(&s.problem.map, unit).unwrap();
    let q_u = orthonormal_basis(&u0);
    let q_xi = orthonormal_basis(&ens.xi);

    let mut escape_by_5 = 0.0_f64;
    let mut xi_res = 0.0_f64;
    for it in 1..=s.cfg.n_iterations {
        let fields = ens.physical_fields(&s.problem.map, unit).unwrap();
        let preds = s.problem.fwd.predict_ensemble(&fields).unwrap();
        let yp = perturb_observations(&s.y, &s.gs, j, &mut rp).unwrap();
        noncentred_update(&mut ens, &preds, &yp, &s.gs, clamp, None, None, None).unwrap();
        let fields = ens.physical_fields(&s.problem.map, unit).unwrap();
        if it <= 5 {
            escape_by_5 = escape_by_5.max(span_residual(&q_u, &fields));
        }
        xi_res = xi_res.max(span_residual(&q_xi, &ens.xi));
    }

    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 2 (non-centred span breaking)",
        escape_by_5 > ESCAPE_MIN && xi_res < SPAN_TOL && dt < 10.0,
        &format!(
            "physical escape {escape_by_5:.2e} (> {ESCAPE_MIN:.0e}), \
             xi block {xi_res:.2e} (< {SPAN_TOL:.0e}); scalar lengthscale \
             block spans trivially; {dt:.2} s"
        ),
    );
}

#[test]
fn c3_prior_sampler_equivalence() {
    let t0 = Instant::now();
    // Wide domain so check pairs sit far from the Dirichlet boundary;
    // mesh spacing matches the inversion grid.
    let n = 100;
    let grid = Grid1d::new(0.0, 2.0 * std::f64::consts::PI, n);
    let map = SpectralFieldMap::new(grid, 1.0, 0.8).unwrap();
    let ell = 0.74;
    let params = MaternParams::new(1.0, 0.8, ell).unwrap();

    let mut r_spec = Prng::substream(PRIOR_SEED, 0);
    let mut r_whit = Prng::substream(PRIOR_SEED, 1);
    let mut c_spec = Mat::zeros(n, n);
    let mut c_whit = Mat::zeros(n, n);
    for _ in 0..PRIOR_SAMPLES {
        let u = map.sample_spectral(ell, &mut r_spec).unwrap();
        for a in 0..n {
            let ua = u[a];
            let row = c_spec.row_mut(a);
            for b in 0..n {
                row[b] += ua * u[b];
            }
        }
        let u = map.sample_whiten(ell, &mut r_whit).unwrap();
        for a in 0..n {
            let ua = u[a];
            let row = c_whit.row_mut(a);
            for b in 0..n {
                row[b] += ua * u[b];
            }
        }
    }
    let inv = 1.0 / PRIOR_SAMPLES as f64;
    c_spec.scale(inv);
    c_whit.scale(inv);

    let mut diff = c_spec.clone();
    diff.add_scaled(&c_whit, -1.0);
    let mut mean = c_spec.clone();
    mean.add_scaled(&c_whit, 1.0);
    mean.scale(0.5);
    let rel_fro = diff.fro_norm() / mean.fro_norm();

    // Distinct-point pairs straddling the middle of the domain; diagonal
    // variance carries an irreducible spectral-truncation bias at this
    // roughness and is not a fair analytic check.
    let mid = n / 2;
    let offsets = [2usize, 3, 4, 5, 6, 8, 10, 14, 20, 30];
    let mut pairs_ok = 0;
    let mut worst = 0.0_f64;
    for &m in &offsets {
        let jdx = mid + m;
        let r = m as f64 * grid.h();
        let ana = params.covariance(r).unwrap();
        let se = ((1.0 + ana * ana) / PRIOR_SAMPLES as f64).sqrt();
        let d1 = (c_spec[(mid, jdx)] - ana).abs() / se;
        let d2 = (c_whit[(mid, jdx)] - ana).abs() / se;
        worst = worst.max(d1).max(d2);
        if d1 < PRIOR_SE_BAND && d2 < PRIOR_SE_BAND {
            pairs_ok += 1;
        }
    }

    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 3 (prior sampler equivalence)",
        rel_fro < PRIOR_REL_FRO_MAX && pairs_ok == offsets.len() && dt < 30.0,
        &format!(
            "routes rel Frobenius {rel_fro:.4} (< {PRIOR_REL_FRO_MAX}), \
             analytic pairs {pairs_ok}/{} within {PRIOR_SE_BAND} SE \
             (worst {worst:.2} SE), {dt:.2} s",
            offsets.len()
        ),
    );
}

#[test]
fn c4_gradient_flow_dissipation() {
    let t0 = Instant::now();
    let s = setup(10);
    let g = s.problem.fwd.matrix().unwrap();
    let truth = make_truth(&s.problem, &s.cfg, s.cfg.base_seed).unwrap();
    let y = g.matvec(&truth.u_true); // noise-free data
    let k = y.len();
    let flow = LinearFlow::new(g, y, vec![s.cfg.limit_gamma; k]).unwrap();

    let mut ri = Prng::substream(s.cfg.base_seed, stream::INIT_FIELD);
    let mut u0 = Mat::zeros(s.cfg.grid_points, 10);
    for c in 0..10 {
        let xi = ri.gaussian_vec(s.cfg.grid_points);
        u0.set_col(
            c,
            &s.problem
                .map
                .transform(&xi, s.cfg.ell_fixed * s.cfg.ell_unit)
                .unwrap(),
        );
    }

    // Plain flow: mean misfit must never increase.
    let mut u = u0.clone();
    let mut phis = Vec::with_capacity(DISSIPATION_STEPS + 1);
    phis.push(flow.mean_phi(&u).unwrap());
    for _ in 0..DISSIPATION_STEPS {
        flow.euler_step(&mut u, DISSIPATION_DT).unwrap();
        phis.push(flow.mean_phi(&u).unwrap());
    }
    let mut increases = 0usize;
    for w in phis.windows(2) {
        if w[1] - w[0] > EXACT_TOL * (1.0 + w[0].abs()) {
            increases += 1;
        }
    }

    // Inflated flow: per-step decrease at least the inflation term's share
    // of the dissipation rate, up to the measured second-order remainder.
    let c0 = s
        .problem
        .map
        .covariance_matrix(s.cfg.ell_fixed * s.cfg.ell_unit)
        .unwrap();
    let mut u = u0.clone();
    let mut phis_i = Vec::with_capacity(DISSIPATION_STEPS + 1);
    let mut bounds = Vec::with_capacity(DISSIPATION_STEPS);
    phis_i.push(flow.mean_phi(&u).unwrap());
    for _ in 0..DISSIPATION_STEPS {
        bounds.push(
            flow.dissipation_bound(&u, INFLATION_GAMMA, &c0).unwrap(),
        );
        flow.inflated_euler_step(&mut u, DISSIPATION_DT, INFLATION_GAMMA, &c0)
            .unwrap();
        phis_i.push(flow.mean_phi(&u).unwrap());
    }
    let mut ok_steps = 0usize;
    for nstep in 0..DISSIPATION_STEPS {
        let decrease = phis_i[nstep] - phis_i[nstep + 1];
        // Central second difference of the misfit path measures the local
        // O(dt^2) integrator remainder.
        let c = if nstep == 0 { 1 } else { nstep };
        let curv = (phis_i[c + 1] - 2.0 * phis_i[c] + phis_i[c - 1]).abs();
        if decrease >= DISSIPATION_DT * bounds[nstep] - curv - EXACT_TOL {
            ok_steps += 1;
        }
    }
    let frac = ok_steps as f64 / DISSIPATION_STEPS as f64;

    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 4 (gradient-flow dissipation)",
        increases == 0 && frac >= 0.99 && dt < 10.0,
        &format!(
            "misfit increases {increases}/{DISSIPATION_STEPS}, inflated bound \
             satisfied on {:.1}% of steps (Phi {:.3} -> {:.3e}), {dt:.2} s",
            100.0 * frac,
            phis[0],
            phis[DISSIPATION_STEPS]
        ),
    );
}

#[test]
fn c5_discrete_scheme_refines_to_the_flow() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::default();
    let rep = refinement_study(&cfg, &[0.1, 0.05, 0.025, 0.0125], cfg.base_seed, 10).unwrap();
    let order_ok = |o: f64| o > ORDER_BAND.0 && o < ORDER_BAND.1;
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 5 (continuous-time limit)",
        rep.discrete_monotone
            && rep.euler_monotone
            && order_ok(rep.discrete_order)
            && order_ok(rep.euler_order)
            && dt < 20.0,
        &format!(
            "discrete errors {:?} order {:.3}, euler errors {:?} order {:.3}, \
             band [{}, {}], {dt:.2} s",
            rep.discrete_errors, rep.discrete_order, rep.euler_errors, rep.euler_order,
            ORDER_BAND.0, ORDER_BAND.1
        ),
    );
}

#[test]
fn c6_lengthscale_learning() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::default();
    let seeds = run_many(&cfg, SEED_COUNT, None).unwrap();

    let mut in_band = 0usize;
    let mut finals = Vec::new();
    let mut mean_trace = vec![0.0; cfg.n_iterations + 1];
    for s in &seeds {
        let r = s.run(Method::NonCentred).unwrap();
        let f = r.final_mean_ell().unwrap();
        finals.push(f);
        if (f - ELL_TARGET).abs() < ELL_BAND {
            in_band += 1;
        }
        for (m, v) in mean_trace.iter_mut().zip(r.mean_ell_trace.iter()) {
            *m += v / SEED_COUNT as f64;
        }
    }
    let incr: Vec<f64> = mean_trace.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let first5: f64 = incr[..5].iter().sum::<f64>() / 5.0;
    let last5: f64 = incr[incr.len() - 5..].iter().sum::<f64>() / 5.0;
    let flattening = last5 < first5;

    let dt = t0.elapsed().as_secs_f64();
    let finals_str: Vec<String> = finals.iter().map(|f| format!("{f:.2}")).collect();
    report(
        "criterion 6 (lengthscale learning)",
        in_band >= BAND_SEEDS_MIN && flattening && dt < 60.0,
        &format!(
            "|final mean(ell) - {ELL_TARGET}| < {ELL_BAND} in {in_band}/{SEED_COUNT} seeds \
             (need >= {BAND_SEEDS_MIN}; finals [{}]), mean curve moves {:.2} -> {:.2}, \
             flattening |d ell| first5 {first5:.3} vs last5 {last5:.3}, {dt:.2} s",
            finals_str.join(", "),
            mean_trace[0],
            mean_trace[cfg.n_iterations]
        ),
    );
}

#[test]
fn c7_localization_and_inflation_beat_standard() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::default();
    let seeds = run_many(&cfg, SEED_COUNT, None).unwrap();
    let wins_loc = paired_wins(&seeds, Method::NonCentredLoc, Method::Standard);
    let wins_infl = paired_wins(&seeds, Method::NonCentredInfl, Method::Standard);
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 7 (method comparison)",
        wins_loc >= WINS_MIN && wins_infl >= WINS_MIN && dt < 120.0,
        &format!(
            "paired wins vs standard: localization {wins_loc}/{SEED_COUNT}, \
             inflation {wins_infl}/{SEED_COUNT} (need >= {WINS_MIN} each), {dt:.2} s"
        ),
    );
}

#[test]
fn c8_oracle_equivalence() {
    let t0 = Instant::now();
    let mut worst = 0.0_f64;

    // Empirical covariance assembly vs a dense-linear-algebra oracle.
    let mut rng = Prng::substream(2718, 0);
    let a = Mat::from_fn(6, 40, |_, _| rng.next_gaussian());
    let b = Mat::from_fn(4, 40, |_, _| 0.3 * rng.next_gaussian() + 0.1);
    let cab = cross_cov(&a, &b).unwrap();
    let da = na::DMatrix::from_fn(6, 40, |i, j| a[(i, j)]);
    let db = na::DMatrix::from_fn(4, 40, |i, j| b[(i, j)]);
    let center = |m: &na::DMatrix<f64>| {
        let mean = m.column_mean();
        let mut c = m.clone();
        for j in 0..c.ncols() {
            for i in 0..c.nrows() {
                c[(i, j)] -= mean[i];
            }
        }
        c
    };
    let oracle = center(&da) * center(&db).transpose() / 40.0;
    for i in 0..6 {
        for j in 0..4 {
            worst = worst.max((cab[(i, j)] - oracle[(i, j)]).abs() / oracle.norm());
        }
    }
    let cov_ok = worst < EXACT_TOL;

    // Scalar three-particle Kalman case, worked by hand and frozen. [DERIVED]
    let hand_u = [0.2, -0.5, 1.1];
    let hand_iota = [0.05, -0.10, 0.02];
    let hand_unew = [
        0.4516549648946841,
        0.23560682046138426,
        0.6431494483450351,
    ];
    let u = Mat::from_vec(1, 3, hand_u.to_vec()).unwrap();
    let p = Mat::from_fn(1, 3, |_, j| 2.0 * hand_u[j]);
    let yp = Mat::from_fn(1, 3, |_, j| 1.0 + hand_iota[j]);
    let unew = update_with_perturbed(&u, &p, &yp, &[0.5]).unwrap();
    let mut hand_err = 0.0_f64;
    for j in 0..3 {
        hand_err = hand_err.max((unew[(0, j)] - hand_unew[j]).abs());
    }
    let hand_ok = hand_err < HAND_TOL;

    // Drift identities on a random linear problem: the native discrete
    // update equals the tamed integrator step exactly, and the flow drift
    // equals minus the empirical-covariance-preconditioned gradient.
    let g = Mat::from_fn(5, 12, |_, _| rng.next_gaussian() * 0.4);
    let y: Vec<f64> = (0..5).map(|_| rng.next_gaussian()).collect();
    let gamma: Vec<f64> = (0..5).map(|i| 0.5 + 0.25 * i as f64).collect();
    let flow = LinearFlow::new(g, y, gamma).unwrap();
    let ens = Mat::from_fn(12, 7, |_, _| rng.next_gaussian());
    let mut ud = ens.clone();
    let mut ut = ens.clone();
    flow.discrete_step(&mut ud, 0.07).unwrap();
    flow.tamed_step(&mut ut, 0.07).unwrap();
    let mut dd = ud.clone();
    dd.add_scaled(&ut, -1.0);
    let step_eq = dd.fro_norm() / ut.fro_norm();

    let rhs = flow.rhs(&ens).unwrap();
    let cuu = cross_cov(&ens, &ens).unwrap();
    let mut drift_err = 0.0_f64;
    let mut drift_scale = 0.0_f64;
    for j in 0..ens.cols() {
        let grad = flow.grad_phi(&ens.col(j));
        let expected: Vec<f64> = cuu.matvec(&grad).iter().map(|v| -v).collect();
        for i in 0..ens.rows() {
            drift_err = drift_err.max((rhs[(i, j)] - expected[i]).abs());
            drift_scale = drift_scale.max(expected[i].abs());
        }
    }
    let drift_rel = drift_err / drift_scale;
    let drift_ok = step_eq < EXACT_TOL && drift_rel < EXACT_TOL;

    // Taper entries against frozen closed-form values. [DERIVED]
    let taper = gauss_taper_matrix(&[0.0, 5.0], &[0.0, 3.0], 10.0).unwrap();
    let frozen_eye = 1.0;
    let frozen_d3_r10 = 0.9559974818331; // exp(-9/200)
    let taper2 = gauss_taper_matrix(&[0.0], &[5.0], 1.0).unwrap();
    let frozen_d5_r1 = 3.726653172078671e-06; // exp(-12.5)
    let taper_err = (taper[(0, 0)] - frozen_eye)
        .abs()
        .max((taper[(0, 1)] - frozen_d3_r10).abs() / frozen_d3_r10)
        .max((taper2[(0, 0)] - frozen_d5_r1).abs() / frozen_d5_r1);
    let taper_ok = taper_err < 1e-12;

    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 8 (oracle equivalence)",
        cov_ok && hand_ok && drift_ok && taper_ok && dt < 10.0,
        &format!(
            "cov vs oracle {worst:.1e}, hand Kalman {hand_err:.1e}, \
             discrete-vs-tamed {step_eq:.1e}, drift identity {drift_rel:.1e}, \
             taper {taper_err:.1e}, {dt:.2} s"
        ),
    );
}

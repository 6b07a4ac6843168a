//! Acceptance criteria, one line of output each.
//!
//! Runs every criterion even when an earlier one fails and exits nonzero if
//! any failed.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plrep::eqnn::{act_on_vector, forward, frequency_flow_report, identity_dataset, layer_apply, make_layer, mse, spectrum, train_toy, Network};
use plrep::graphs::{interaction_graph, predicted_graph_abs, predicted_graph_relu, product_graph, reachability, schur_allowed, InteractionGraph, DEFAULT_TOL};
use plrep::groups::{burnside_count, make_abelian, make_cyclic, make_symmetric, natural_gset, orbits, product_gset, regular_gset, GSet};
use plrep::linalg::Matrix;
use plrep::plmaps::{abs_pl, activation_in_fourier, apply_componentwise, custom_pl, equivariance_check, relu, spike_map, unit_tent, DEFAULT_SEED};
use plrep::reps::{conjugate_action, cyclic_simples, fourier_basis, rep_matrix, Decomposition};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cyclic(n: usize) -> Decomposition {
    fourier_basis(&Arc::new(make_cyclic(n).unwrap())).unwrap()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn shift_matrix(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for x in 0..n {
        m[((x + 1) % n, x)] = 1.0;
    }
    m
}

fn labeled(pairs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    pairs.iter().map(|(a, b)| (format!("L_{a}"), format!("L_{b}"))).collect()
}

fn with_loops(loops: &[&str], cross: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    let mut e = labeled(cross);
    e.extend(loops.iter().map(|l| (format!("L_{l}"), format!("L_{l}"))));
    e
}

fn describe(edges: &BTreeSet<(String, String)>) -> String {
    if edges.is_empty() {
        return "none".into();
    }
    edges.iter().map(|(a, b)| format!("{a}->{b}")).collect::<Vec<_>>().join(" ")
}

fn fourier_basis_n5() -> Outcome {
    let start = Instant::now();
    let d = cyclic(5);
    let s = |k: f64, j: f64| -(2.0 * PI * k * j / 5.0).sin();
    let c = |k: f64, j: f64| (2.0 * PI * k * j / 5.0).cos();
    // fourth column taken as −sin(4πj/5) for row j
    let printed: Vec<Vec<f64>> = (1..=5).map(|j| j as f64).map(|j| vec![1.0, s(1.0, j), c(1.0, j), s(2.0, j), c(2.0, j)]).collect();
    let q_err = d.q().sub(&Matrix::from_rows(&printed).unwrap()).unwrap().max_abs();
    ensure(q_err < 1e-12, format!("Q differs by {q_err:e}"))?;

    let r = |t: f64| vec![[t.cos(), -t.sin()], [t.sin(), t.cos()]];
    let (a, b) = (r(2.0 * PI / 5.0), r(4.0 * PI / 5.0));
    let n_printed = Matrix::from_rows(&[
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, a[0][0], a[0][1], 0.0, 0.0],
        vec![0.0, a[1][0], a[1][1], 0.0, 0.0],
        vec![0.0, 0.0, 0.0, b[0][0], b[0][1]],
        vec![0.0, 0.0, 0.0, b[1][0], b[1][1]],
    ])
    .unwrap();
    let m_printed = Matrix::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0, 1.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, 0.0],
    ])
    .unwrap();
    ensure(m_printed == shift_matrix(5), "shift matrix convention differs")?;
    let n = conjugate_action(&d, 1).map_err(|e| e.to_string())?;
    let n_err = n.sub(&n_printed).unwrap().max_abs();
    ensure(n_err < 1e-10, format!("N differs by {n_err:e}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_millis(100), format!("took {elapsed:?}"))?;
    Ok(format!("Q err {q_err:.1e}, N err {n_err:.1e}, {elapsed:?}"))
}

fn relu_coefficients_n5() -> Outcome {
    let d = cyclic(5);
    let printed: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.31, 0.5, -0.07, 0.0, -0.24],
        [0.32, 0.0, 0.48, 0.0, 0.2],
        [0.31, 0.0, -0.24, 0.5, -0.07],
        [0.32, 0.0, 0.2, 0.0, 0.48],
    ];
    let mut worst: f64 = 0.0;
    for (i, want) in printed.iter().enumerate() {
        let mut e = [0.0; 5];
        e[i] = 1.0;
        let got = activation_in_fourier(&d, &relu(), &e).unwrap();
        let err = max_diff(&got, want);
        let tol = if i == 0 { 1e-12 } else { 0.01 };
        ensure(err <= tol, format!("e{} -> {got:?}, err {err:e}", i + 1))?;
        worst = worst.max(err);
    }
    Ok(format!("max err {worst:.3}"))
}

fn abs_coefficients_n6() -> Outcome {
    let d = cyclic(6);
    let cases: [(&[usize], [f64; 6]); 4] = [
        (&[0], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        (&[1, 2], [0.91, 0.0, 0.0, 0.58, 0.089, 0.0]),
        (&[3, 4], [0.91, 0.0, 0.0, -0.58, 0.089, 0.0]),
        (&[5], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
    ];
    let mut worst: f64 = 0.0;
    for (idx, want) in cases {
        let mut c = [0.0; 6];
        idx.iter().for_each(|&i| c[i] = 1.0);
        let got = activation_in_fourier(&d, &abs_pl(), &c).unwrap();
        let err = max_diff(&got, &want);
        ensure(err <= 0.01, format!("{idx:?} -> {got:?}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max err {worst:.3}"))
}

fn figure_graphs() -> Outcome {
    let all = ["0", "1", "2", "3", "4"];
    let figures: Vec<(usize, &str, BTreeSet<(String, String)>)> = vec![
        (3, "relu", with_loops(&["0", "1"], &[("1", "0")])),
        (5, "relu", with_loops(&all[..3], &[("1", "0"), ("2", "0"), ("1", "2"), ("2", "1")])),
        (6, "relu", with_loops(&all[..4], &[("1", "0"), ("1", "2"), ("2", "0"), ("3", "0")])),
        (
            7,
            "relu",
            with_loops(&all[..4], &[("1", "0"), ("2", "0"), ("3", "0"), ("1", "2"), ("2", "1"), ("1", "3"), ("3", "1"), ("2", "3"), ("3", "2")]),
        ),
        (6, "abs", with_loops(&["0", "2"], &[("1", "0"), ("1", "2"), ("3", "0"), ("2", "0")])),
        (8, "abs", with_loops(&["0"], &[("4", "0"), ("2", "4"), ("2", "0"), ("3", "4"), ("3", "2"), ("3", "0"), ("1", "4"), ("1", "2"), ("1", "0")])),
    ];
    for (n, act, drawn) in &figures {
        let pl = act.parse().unwrap();
        let g = interaction_graph(&cyclic(*n), &pl, DEFAULT_TOL, DEFAULT_SEED).unwrap();
        let got = g.labeled_edges();
        ensure(&got == drawn, format!("c{n} {act}: computed {}", describe(&got)))?;
    }

    let d8 = cyclic(8);
    let numeric = interaction_graph(&d8, &relu(), DEFAULT_TOL, DEFAULT_SEED).unwrap();
    ensure(numeric.same_edges(&predicted_graph_relu(&d8).unwrap()), "c8 relu numeric differs from prediction")?;
    let drawn8 = with_loops(
        &all,
        &[("4", "0"), ("2", "4"), ("2", "0"), ("3", "4"), ("3", "2"), ("3", "0"), ("3", "1"), ("1", "4"), ("1", "2"), ("1", "0"), ("1", "3")],
    );
    let figure_only: BTreeSet<_> = drawn8.difference(&numeric.labeled_edges()).cloned().collect();
    ensure(figure_only == labeled(&[("1", "3"), ("3", "1")]), format!("unexpected c8 figure diff {}", describe(&figure_only)))?;
    ensure(numeric.labeled_edges().is_subset(&drawn8), "c8 numeric has edges absent from the figure")?;

    let report = plrep::verify::run_suite(plrep::verify::Suite::Cyclic, &plrep::verify::VerifyOptions { n_max: 8, ..Default::default() }).unwrap();
    let flagged = report.checks.iter().find(|c| c.name == "figure c8 relu").ok_or("c8 figure not checked")?;
    ensure(flagged.status == plrep::verify::Status::Informational, "c8 figure not flagged as informational")?;
    ensure(report.passed(), "verify report has failures")?;
    Ok(format!("{} figures match; c8 figure-only edges {}", figures.len(), describe(&figure_only)))
}

/// Edges from the divisibility rules, from ord(L_k) = n / gcd(n, k).
fn rule_edges(n: usize, with_all_loops: bool) -> BTreeSet<(usize, usize)> {
    let m = n / 2 + 1;
    let ord = |k: usize| n / gcd(n, k);
    let half = |k: usize| if ord(k) % 2 == 0 { ord(k) / 2 } else { ord(k) };
    (0..m).flat_map(|l| (0..m).map(move |k| (l, k))).filter(|&(l, k)| (with_all_loops && l == k) || half(l) % ord(k) == 0).collect()
}

fn theorem_sweep() -> Outcome {
    let start = Instant::now();
    let mut edges = 0;
    for n in 1..=64 {
        let d = cyclic(n);
        let r = interaction_graph(&d, &relu(), DEFAULT_TOL, DEFAULT_SEED).unwrap();
        let a = interaction_graph(&d, &abs_pl(), DEFAULT_TOL, DEFAULT_SEED).unwrap();
        ensure(r.edges == rule_edges(n, true), format!("c{n} relu differs from rule"))?;
        ensure(a.edges == rule_edges(n, false), format!("c{n} abs differs from rule"))?;
        ensure(r.same_edges(&predicted_graph_relu(&d).unwrap()) && a.same_edges(&predicted_graph_abs(&d).unwrap()), format!("c{n} predicted graph"))?;
        for &(i, j) in r.edges.iter().chain(&a.edges) {
            ensure(schur_allowed(&d.simples()[i], &d.simples()[j]).unwrap().allowed, format!("c{n} edge {i}->{j} breaks kernel containment"))?;
            // kernel of L_k is {g : kg ≡ 0 mod n}
            ensure((0..n).all(|g| (i * g) % n != 0 || (j * g) % n == 0), format!("c{n} edge {i}->{j} fails direct kernel check"))?;
        }
        ensure(r.edges == a.with_loops(), format!("c{n} relu != abs + loops"))?;
        edges += r.edges.len() + a.edges.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("n <= 64, {edges} edges checked, {elapsed:.1?}"))
}

fn decomposition_properties() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for n in 1..=64 {
        let d = cyclic(n);
        let qdqt = d.q().matmul(&d.q().transpose().scale_rows(d.dscale())).unwrap();
        let residual = qdqt.sub(&Matrix::identity(n)).unwrap().norm_inf();
        let conj = d.q_inv().matmul(&shift_matrix(n)).unwrap().matmul(d.q()).unwrap();
        let mass = d.off_block_mass(&conj);
        ensure(residual < 1e-9 && mass < 1e-9, format!("c{n}: residual {residual:e}, off-block {mass:e}"))?;
        worst = (worst.0.max(residual), worst.1.max(mass));
    }
    Ok(format!("max residual {:.1e}, max off-block {:.1e}", worst.0, worst.1))
}

fn fixed_point_orbits(gs: &GSet) -> usize {
    let g = gs.group();
    let fixed: usize = g.elements().map(|e| (0..gs.size()).filter(|&x| gs.act(e, x) == x).count()).sum();
    fixed / g.order()
}

fn orbit_counts() -> Outcome {
    for n in 2..=4 {
        let g = Arc::new(make_abelian(vec![n, n]).unwrap());
        let x = regular_gset(&g);
        let sq = product_gset(&x, &x).unwrap();
        let count = orbits(&sq).len();
        ensure(count == n * n, format!("C_{n}^2: {count} orbits"))?;
        ensure(burnside_count(&sq).unwrap() == count && fixed_point_orbits(&sq) == count, format!("C_{n}^2 Burnside"))?;
        if n == 2 {
            let diag: Vec<usize> = (0..4).map(|p| 4 * p + p).collect();
            ensure(orbits(&sq).classes()[0] == diag, "C_2^2 diagonal orbit")?;
        }
    }
    for n in 3..=6 {
        let s = Arc::new(make_symmetric(n).unwrap());
        let x = natural_gset(&s).unwrap();
        let sq = product_gset(&x, &x).unwrap();
        let count = orbits(&sq).len();
        ensure(count == 2, format!("S_{n}: {count} orbits"))?;
        ensure(burnside_count(&sq).unwrap() == 2 && fixed_point_orbits(&sq) == 2, format!("S_{n} Burnside"))?;
    }
    let deep: plrep::groups::Group = "perm:3:(123),(12)".parse().unwrap();
    ensure(deep.order() == 6, "perm spec order")?;
    Ok("C_n^2: n^2 orbits for n in 2..4; S_n pairs: 2 orbits for n in 3..6".into())
}

const GRID_IN: [[f64; 10]; 10] = [
    [0.0, 0.6, 0.7, 0.7, 0.0, 0.3, 0.9, 0.8, 0.3, 0.6],
    [0.4, 1.0, 0.9, 0.8, 0.8, 0.3, 0.4, 1.0, 0.9, 0.0],
    [0.9, 0.0, 0.0, 0.8, 0.4, 0.1, 0.6, 0.1, 0.6, 0.0],
    [0.3, 0.6, 0.3, 0.6, 0.0, 0.0, 0.8, 0.1, 0.3, 0.8],
    [0.8, 0.5, 0.1, 0.1, 0.5, 0.7, 0.6, 0.7, 0.2, 0.7],
    [0.2, 0.7, 0.8, 0.8, 0.3, 0.6, 0.6, 0.0, 0.6, 0.3],
    [0.9, 0.4, 0.6, 0.5, 0.0, 0.5, 0.5, 0.8, 0.4, 0.8],
    [0.7, 0.0, 0.6, 0.9, 0.9, 0.1, 0.1, 0.6, 1.0, 0.1],
    [0.9, 0.9, 0.8, 0.9, 0.4, 0.0, 1.0, 0.3, 0.2, 0.5],
    [0.3, 1.0, 0.2, 0.4, 1.0, 0.8, 0.4, 0.0, 0.5, 0.8],
];

fn convolution_example() -> Outcome {
    let g = Arc::new(make_abelian(vec![10, 10]).unwrap());
    let x = regular_gset(&g);
    let mut layer = make_layer(&x, &x).unwrap();
    for offset in [[1, 0], [0, 1], [9, 0], [0, 9]] {
        layer.set_pair_weight(g.encode(&offset), 0, 0.25);
    }
    let flat: Vec<f64> = GRID_IN.iter().flatten().copied().collect();
    let out = layer_apply(&layer, &flat).unwrap();
    let at = |r: usize, c: usize| out[10 * r + c];
    let highlight = at(1, 1);
    let by_hand = 0.25 * (0.6 + 0.9 + 0.0 + 0.4);
    ensure((highlight - 0.475).abs() < 1e-12 && (highlight - by_hand).abs() < 1e-12, format!("highlighted pixel {highlight}"))?;
    let zoom = [[0.475, 0.675, 0.6], [0.475, 0.475, 0.625], [0.175, 0.625, 0.5]];
    let mut worst: f64 = 0.0;
    for (r, row) in zoom.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            worst = worst.max((at(r, c) - v).abs());
        }
    }
    ensure(worst < 1e-12, format!("zoomed block err {worst:e}"))?;
    for r in 0..10 {
        for c in 0..10 {
            let avg = 0.25 * (GRID_IN[(r + 1) % 10][c] + GRID_IN[(r + 9) % 10][c] + GRID_IN[r][(c + 1) % 10] + GRID_IN[r][(c + 9) % 10]);
            ensure((at(r, c) - avg).abs() < 1e-12, format!("pixel ({r},{c}) is not the neighbor average"))?;
        }
    }
    Ok(format!("pixel (1,1) = {highlight}, zoom err {worst:.1e}"))
}

fn product_graphs() -> Outcome {
    let numeric = |n: usize| interaction_graph(&cyclic(n), &relu(), DEFAULT_TOL, DEFAULT_SEED).unwrap();
    let p35 = product_graph(&numeric(3), &numeric(5)).unwrap();
    let loops = ["00", "01", "02", "10", "11", "12"];
    let cross = [
        ("01", "00"), ("01", "02"), ("02", "01"), ("02", "00"),
        ("11", "10"), ("11", "12"), ("12", "11"), ("12", "10"),
        ("10", "00"),
        ("11", "00"), ("11", "01"), ("11", "02"),
        ("12", "00"), ("12", "01"), ("12", "02"),
    ];
    let drawn = with_loops(&loops, &cross);
    ensure(p35.labeled_edges() == drawn, format!("C3xC5 product: {}", describe(&p35.labeled_edges())))?;

    let p22 = product_graph(&numeric(2), &numeric(2)).unwrap();
    let d22 = fourier_basis(&Arc::new(make_abelian(vec![2, 2]).unwrap())).unwrap();
    let direct = interaction_graph(&d22, &relu(), DEFAULT_TOL, DEFAULT_SEED).unwrap();
    let product_only: BTreeSet<_> = p22.labeled_edges().difference(&direct.labeled_edges()).cloned().collect();
    let direct_only: BTreeSet<_> = direct.labeled_edges().difference(&p22.labeled_edges()).cloned().collect();
    ensure(
        p22.same_edges(&direct),
        format!("C2xC2 product != direct numeric; product-only {}; direct-only {}", describe(&product_only), describe(&direct_only)),
    )?;
    Ok("C3xC5 matches figure; C2xC2 product = direct".into())
}

fn equivariant_networks() -> Outcome {
    let x = regular_gset(&Arc::new(make_cyclic(8).unwrap()));
    let mut net = Network::through(&[x.clone(), x.clone(), x.clone(), x.clone()], relu()).unwrap();
    net.randomize(DEFAULT_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let g = rng.gen_range(0..8);
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let lhs = forward(&net, &act_on_vector(&x, g, &v)).unwrap();
        let rhs = act_on_vector(&x, g, &forward(&net, &v).unwrap());
        dev = dev.max(max_diff(&lhs, &rhs));
    }
    ensure(dev < 1e-10, format!("equivariance deviation {dev:e}"))?;

    // central differences of ½‖net(v) − t‖² against the analytic gradient
    let mut worst: f64 = 0.0;
    for cfg in 0..10u64 {
        let mut net = Network::through(&[x.clone(), x.clone(), x.clone(), x.clone()], relu()).unwrap();
        net.randomize(1000 + cfg);
        let (v, t) = loop {
            let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let t: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if net.kink_margin(&v).unwrap() > 1e-6 {
                break (v, t);
            }
        };
        let out = forward(&net, &v).unwrap();
        let up: Vec<f64> = out.iter().zip(&t).map(|(o, t)| o - t).collect();
        let analytic = plrep::eqnn::backward(&net, &v, &up).unwrap().weights;
        let loss = |n: &Network| 0.5 * forward(n, &v).unwrap().iter().zip(&t).map(|(o, t)| (o - t).powi(2)).sum::<f64>();
        for (k, layer) in analytic.iter().enumerate() {
            for (c, &a) in layer.iter().enumerate() {
                let h = 1e-5;
                let mut w = net.layers()[k].weights().to_vec();
                let base = w[c];
                w[c] = base + h;
                let mut plus = net.clone();
                plus.layers_mut()[k].set_weights(w.clone()).unwrap();
                w[c] = base - h;
                let mut minus = net.clone();
                minus.layers_mut()[k].set_weights(w).unwrap();
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-8));
            }
        }
    }
    ensure(worst < 1e-5, format!("gradient relative error {worst:e}"))?;

    let c4 = regular_gset(&Arc::new(make_cyclic(4).unwrap()));
    let mut id = Network::through(&[c4.clone(), c4], relu()).unwrap();
    let data = identity_dataset(4, 16, DEFAULT_SEED);
    train_toy(&mut id, &data, 2000, 0.5).unwrap();
    let final_mse = mse(&id, &data).unwrap();
    ensure(final_mse < 1e-6, format!("identity learning MSE {final_mse:e}"))?;
    Ok(format!("deviation {dev:.1e}, gradient err {worst:.1e}, identity MSE {final_mse:.1e}"))
}

/// Energy per frequency from a direct complex DFT.
fn dft_energies(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let power: Vec<f64> = (0..n)
        .map(|k| {
            let (re, im) = v.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, &x)| {
                let t = -2.0 * PI * (k * j) as f64 / n as f64;
                (re + x * t.cos(), im + x * t.sin())
            });
            (re * re + im * im) / n as f64
        })
        .collect();
    (0..=n / 2).map(|k| if k == 0 || 2 * k == n { power[k] } else { power[k] + power[n - k] }).collect()
}

fn frequency_flow() -> Outcome {
    let d = cyclic(16);
    let signal: Vec<f64> = (1..=16).map(|j| -(2.0 * PI * j as f64 / 16.0).sin()).collect();
    let rectified = apply_componentwise(&relu(), &signal);
    let oracle = dft_energies(&rectified);
    let report = spectrum(&d, &rectified, 1e-9).unwrap();
    // L_1 reaches itself and every L_k with ord(L_k) | 8
    let allowed = |k: usize| k == 1 || 8 % (16 / gcd(16, k)) == 0;
    for (k, (label, &e)) in report.energies.iter().enumerate() {
        ensure((e - oracle[k]).abs() < 1e-9, format!("{label}: energy {e} vs DFT {}", oracle[k]))?;
        if allowed(k) {
            ensure(e >= 1e-9, format!("{label} should carry energy"))?;
        } else {
            ensure(e < 1e-9, format!("{label} carries forbidden energy {e:e}"))?;
        }
    }
    for n in 1..=16 {
        let d = cyclic(n);
        let g: InteractionGraph = interaction_graph(&d, &relu(), DEFAULT_TOL, DEFAULT_SEED).unwrap();
        for k in 1..=4 {
            let flow = frequency_flow_report(&d, &relu(), k, 1e-9, DEFAULT_SEED).unwrap();
            ensure(flow == reachability(&g, k), format!("c{n} k={k}: flow differs from reachability"))?;
        }
    }
    Ok("c16 spectrum matches DFT and rule; flow = reachability for n <= 16, k <= 4".into())
}

fn spike_maps() -> Outcome {
    let n = 7;
    let tent = spike_map(n, unit_tent()).unwrap();
    let skew = spike_map(n, custom_pl(vec![0.0, 0.25, 1.0], vec![0.0, 4.0, -4.0 / 3.0, 0.0], 0.0).unwrap()).unwrap();
    let rot = &cyclic_simples(n).unwrap()[1];
    let mats: Vec<Matrix> = (0..n).map(|g| rep_matrix(rot, g)).collect();
    let triv = vec![Matrix::identity(1); n];
    let mut dev: f64 = 0.0;
    for s in [&tent, &skew] {
        dev = dev.max(equivariance_check(|v| s.eval_vec(v), &mats, &triv, 200, DEFAULT_SEED));
    }
    ensure(dev < 1e-10, format!("equivariance deviation {dev:e}"))?;
    let mid = PI / n as f64;
    let apex = tent.eval(&[mid.cos(), mid.sin()]);
    ensure(apex > 0.5, format!("apex value {apex}"))?;
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        for r in [0.5, 1.0, 3.0] {
            ensure(tent.eval(&[r * t.cos(), r * t.sin()]).abs() < 1e-12, format!("boundary ray {k} nonzero"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let points: Vec<[f64; 2]> = (0..16).map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]).collect();
    let rows: Vec<Vec<f64>> = [&tent, &skew].iter().map(|s| points.iter().map(|p| s.eval(p)).collect()).collect();
    let rank = Matrix::from_rows(&rows).unwrap().rank(1e-9);
    ensure(rank == 2, format!("evaluation rank {rank}"))?;
    Ok(format!("deviation {dev:.1e}, apex {apex:.3}, rank {rank}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("fourier basis n=5", fourier_basis_n5),
        ("relu coefficients n=5", relu_coefficients_n5),
        ("abs coefficients n=6", abs_coefficients_n6),
        ("graph figures", figure_graphs),
        ("theorem sweep n<=64", theorem_sweep),
        ("decomposition properties", decomposition_properties),
        ("orbit counts", orbit_counts),
        ("convolution example", convolution_example),
        ("product graphs", product_graphs),
        ("equivariant networks", equivariant_networks),
        ("frequency flow", frequency_flow),
        ("spike maps", spike_maps),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

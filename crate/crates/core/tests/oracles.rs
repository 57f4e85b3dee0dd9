//! Dense brute-force oracles and property checks across modules.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use unifilter::analysis::{deepwalk_operator, dirichlet_energy, node2vec_operator};
use unifilter::approx::{fit_polynomial, fit_rational, TargetSignal};
use unifilter::features::max_rel_error;
use unifilter::filter::{compose, make_preset, FilterSpec, SolverMethod, SolverOptions};
use unifilter::graph::{build_graph, random_connected, Graph};
use unifilter::io::{filter_spec_from_json, filter_spec_to_json};
use unifilter::operator::{Scheme, SparseOperator};
use unifilter::spectral::{check_equivalence, eigendecompose, frequency_response, default_grid};
use unifilter::FeatureMatrix;

/// Dense adjacency and degrees built straight from the edge list.
fn dense_adjacency(g: &Graph) -> (DMatrix<f64>, Vec<f64>) {
    let n = g.num_nodes();
    let mut a = DMatrix::zeros(n, n);
    for (u, v, w) in g.edges() {
        a[(u, v)] = w;
        a[(v, u)] = w;
    }
    let d = (0..n).map(|i| a.row(i).sum()).collect();
    (a, d)
}

fn inv_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        0.0
    }
}

/// Textbook definitions of every scheme, independent of the sparse builder.
fn dense_scheme(g: &Graph, s: Scheme) -> DMatrix<f64> {
    let (a, d) = dense_adjacency(g);
    let n = g.num_nodes();
    let id = DMatrix::<f64>::identity(n, n);
    let scale = |m: &DMatrix<f64>, l: &[f64], r: &[f64]| DMatrix::from_fn(n, n, |i, j| l[i] * m[(i, j)] * r[j]);
    let dinv: Vec<f64> = d.iter().map(|&x| inv_or_zero(x)).collect();
    let dsq: Vec<f64> = d.iter().map(|&x| inv_or_zero(x).sqrt()).collect();
    let ones = vec![1.0; n];
    let ai = &a + &id;
    let dh: Vec<f64> = d.iter().map(|x| x + 1.0).collect();
    match s {
        Scheme::AdjRaw => a,
        Scheme::AdjRw => scale(&a, &dinv, &ones),
        Scheme::AdjSym => scale(&a, &dsq, &dsq),
        Scheme::AdjRenorm => {
            let s: Vec<f64> = dh.iter().map(|x| 1.0 / x.sqrt()).collect();
            scale(&ai, &s, &s)
        }
        Scheme::AdjRwSelfLoop => {
            let s: Vec<f64> = dh.iter().map(|x| 1.0 / x).collect();
            scale(&ai, &s, &ones)
        }
        Scheme::LapUnnorm => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)) - a,
        Scheme::LapSym => id - scale(&a, &dsq, &dsq),
        Scheme::LapRw => id - scale(&a, &dinv, &ones),
        Scheme::Identity => id,
    }
}

fn dense_poly(m: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
    let n = m.nrows();
    let mut acc = DMatrix::zeros(n, n);
    let mut pow = DMatrix::identity(n, n);
    for &cj in c {
        acc += &pow * cj;
        pow = &pow * m;
    }
    acc
}

/// `P(M) Q(M)⁻¹` by dense LU.
fn dense_filter(f: &FilterSpec, g: &Graph) -> DMatrix<f64> {
    let m = dense_scheme(g, f.scheme);
    let p = dense_poly(&m, &f.numerator());
    let q = dense_poly(&m, &f.denominator());
    q.lu().solve(&p).unwrap()
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (4..=max_n, 0.0..0.4f64, any::<u64>()).prop_map(|(n, p, seed)| random_connected(n, p, seed).unwrap())
}

/// Arbitrary simple graph, possibly disconnected with isolated nodes.
fn arb_loose_graph() -> impl Strategy<Value = Graph> {
    (2usize..12).prop_flat_map(|n| {
        proptest::collection::btree_set((0..n, 0..n), 0..20).prop_map(move |pairs| {
            let edges: Vec<(usize, usize, f64)> = pairs
                .into_iter()
                .filter(|(u, v)| u < v)
                .map(|(u, v)| (u, v, 1.0))
                .collect();
            build_graph(edges, Some(n)).unwrap()
        })
    })
}

fn all_presets() -> Vec<FilterSpec> {
    vec![
        make_preset("gcn", &[]).unwrap(),
        make_preset("sage", &[]).unwrap(),
        make_preset("gin", &[("eps", 0.3)]).unwrap(),
        make_preset("chebnet", &[("theta0", 0.2), ("theta1", 0.5), ("theta2", -0.1)]).unwrap(),
        make_preset("dcnn", &[("psi1", 0.6), ("psi2", 0.4)]).unwrap(),
        make_preset("sgc", &[("k", 3.0)]).unwrap(),
        make_preset("ar_lp", &[("alpha", 2.0)]).unwrap(),
        make_preset("ppnp", &[("alpha", 0.15)]).unwrap(),
        make_preset("arma", &[("a", -0.5), ("b", 0.7)]).unwrap(),
    ]
}

#[test]
fn schemes_match_textbook_definitions_with_isolated_nodes() {
    let g = Graph::from_pairs(&[(0, 1), (1, 2), (2, 0), (3, 4)], Some(6)).unwrap();
    for s in Scheme::ALL {
        let sparse = SparseOperator::build(&g, s).to_dense();
        assert!((sparse - dense_scheme(&g, s)).amax() <= 1e-15, "{s}");
    }
}

#[test]
fn lap_sym_null_vector() {
    let g = random_connected(20, 0.2, 3).unwrap();
    let l = SparseOperator::build(&g, Scheme::LapSym);
    let v = nalgebra::DVector::from_iterator(20, g.degree_vector().into_iter().map(f64::sqrt));
    let x = FeatureMatrix::new(DMatrix::from_column_slice(20, 1, v.as_slice())).unwrap();
    assert!(l.apply(&x).unwrap().max_abs() <= 1e-8 * v.amax());
    let dec = eigendecompose(&l).unwrap();
    let u0 = dec.eigenvectors.column(0);
    let cos = (u0.dot(&v) / v.norm()).abs();
    assert_relative_eq!(cos, 1.0, epsilon = 1e-8);
}

#[test]
fn jacobi_agrees_with_library_eigensolver() {
    let g = random_connected(30, 0.15, 8).unwrap();
    let m = SparseOperator::build(&g, Scheme::AdjSym);
    let mine = eigendecompose(&m).unwrap();
    let mut reference: Vec<f64> = m.to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
    reference.sort_by(f64::total_cmp);
    for (a, b) in mine.eigenvalues.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((mine.reconstruct() - m.to_dense()).amax() < 1e-10);
}

#[test]
fn fitted_filters_are_first_class() {
    let g = random_connected(14, 0.2, 2).unwrap();
    let x = FeatureMatrix::random(14, 3, 3);
    let poly = fit_polynomial(&TargetSignal::jump(), 6, 256).unwrap();
    assert!(check_equivalence(&poly.filter, &g, &x, 1e-8).unwrap().pass);
    let rat = fit_rational(&TargetSignal::jump(), 2, 2, 256).unwrap();
    assert!(check_equivalence(&rat.filter, &g, &x, 1e-8).unwrap().pass);
    // filter response equals the Chebyshev-form evaluation
    for &l in &[0.0, 0.4, 1.3, 2.0] {
        assert!((rat.filter.response(l) - rat.eval(l)).abs() < 1e-9);
    }
}

#[test]
fn exact_family_members_are_recovered() {
    let cubic = TargetSignal::function(|l| 0.5 - l + 0.25 * l * l * l, (0.0, 2.0)).unwrap();
    assert!(fit_polynomial(&cubic, 3, 128).unwrap().max_error <= 1e-8);
    let ppnp = make_preset("ppnp", &[("alpha", 0.4)]).unwrap();
    let t = TargetSignal::closed_form(ppnp, (0.0, 2.0)).unwrap();
    assert!(fit_rational(&t, 0, 1, 128).unwrap().max_error <= 1e-8);
    let arma = TargetSignal::function(|l| (1.0 + l) / (2.0 + l * l), (0.0, 2.0)).unwrap();
    assert!(fit_rational(&arma, 1, 2, 128).unwrap().max_error <= 1e-8);
}

#[test]
fn polynomial_error_nonincreasing_and_rational_dominates() {
    let t = TargetSignal::jump();
    let grid = 512;
    let mut prev = f64::INFINITY;
    for k in 1..=20 {
        let rms = fit_polynomial(&t, k, grid).unwrap().rms_error;
        // least squares on nested spaces; rms on the error grid tracks it
        assert!(rms <= prev * (1.0 + 1e-2) + 1e-12, "k={k}: {rms} > {prev}");
        prev = rms;
    }
    for k in [1usize, 2, 4, 6] {
        let p = fit_polynomial(&t, k, grid).unwrap().max_error;
        let r = fit_rational(&t, k, 2, grid).unwrap().max_error;
        assert!(r <= p + 1e-12, "k={k}: {r} > {p}");
    }
}

#[test]
fn monotone_responses() {
    let grid = default_grid();
    let gcn = frequency_response(&make_preset("gcn", &[]).unwrap(), &grid).unwrap();
    assert!(gcn.values.windows(2).all(|w| w[1] < w[0]));
    for a in [0.05, 0.3, 0.7, 0.95] {
        let p = frequency_response(&make_preset("ppnp", &[("alpha", a)]).unwrap(), &grid).unwrap();
        assert_relative_eq!(p.values[0], 1.0, epsilon = 1e-15);
        assert!(p.values.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn node2vec_matches_dense_brute_force() {
    let g = random_connected(9, 0.3, 5).unwrap();
    let a = dense_scheme(&g, Scheme::AdjRw);
    let (p, q) = (2.0, 0.5);
    let expect = DMatrix::identity(9, 9) / p + &a + (&a * &a - &a) / q;
    assert!((node2vec_operator(&g, p, q).unwrap() - expect).amax() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sparse_apply_matches_dense_product(g in arb_loose_graph(), seed in any::<u64>()) {
        let x = FeatureMatrix::random(g.num_nodes(), 3, seed);
        for s in Scheme::ALL {
            let op = SparseOperator::build(&g, s);
            let dense = dense_scheme(&g, s) * x.as_matrix();
            prop_assert!(max_rel_error(&dense, op.apply(&x).unwrap().as_matrix()) <= 1e-12);
            if s.is_symmetric() {
                let m = op.to_dense();
                prop_assert!((&m - m.transpose()).amax() <= 1e-12);
            }
        }
        let lap = SparseOperator::build(&g, Scheme::LapSym).to_dense();
        let adj = SparseOperator::build(&g, Scheme::AdjSym).to_dense();
        prop_assert_eq!(lap + adj, DMatrix::identity(g.num_nodes(), g.num_nodes()));
    }

    #[test]
    fn normalized_spectra_are_bounded(g in arb_loose_graph()) {
        let lap = eigendecompose(&SparseOperator::build(&g, Scheme::LapSym)).unwrap();
        prop_assert!(lap.eigenvalues.iter().all(|&l| (-1e-10..=2.0 + 1e-10).contains(&l)));
        let adj = eigendecompose(&SparseOperator::build(&g, Scheme::AdjSym)).unwrap();
        prop_assert!(adj.eigenvalues.iter().all(|&l| (-1.0 - 1e-10..=1.0 + 1e-10).contains(&l)));
        prop_assert!(adj.orthogonality_error() <= 1e-8);
        let rw = SparseOperator::build(&g, Scheme::AdjRw).to_dense();
        for i in 0..g.num_nodes() {
            let want = if g.degree(i) > 0.0 { 1.0 } else { 0.0 };
            prop_assert!((rw.row(i).sum() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn parseval(g in arb_graph(40), seed in any::<u64>()) {
        let x = FeatureMatrix::random(g.num_nodes(), 3, seed);
        let dec = eigendecompose(&SparseOperator::build(&g, Scheme::LapSym)).unwrap();
        let xf = dec.transform(x.as_matrix());
        prop_assert!((xf.norm() - x.as_matrix().norm()).abs() <= 1e-8 * x.as_matrix().norm());
    }

    #[test]
    fn presets_match_dense_oracle_and_spectral_side(g in arb_graph(40), seed in any::<u64>()) {
        let x = FeatureMatrix::random(g.num_nodes(), 2, seed);
        for f in all_presets() {
            let z = f.apply(&g, &x, &SolverOptions::default()).unwrap();
            let dense = dense_filter(&f, &g) * x.as_matrix();
            prop_assert!(max_rel_error(&dense, z.as_matrix()) <= 1e-8, "{:?}", f.preset);
            let r = check_equivalence(&f, &g, &x, 1e-8).unwrap();
            prop_assert!(r.pass, "{:?} {}", f.preset, r.max_rel_error);
        }
    }

    #[test]
    fn equivalence_with_isolated_nodes(g in arb_loose_graph(), seed in any::<u64>()) {
        let x = FeatureMatrix::random(g.num_nodes(), 2, seed);
        let filters = [
            FilterSpec::polynomial(vec![0.3, 0.5, 0.2], Scheme::AdjRw).unwrap(),
            FilterSpec::rational(vec![0.5], vec![-0.5], Scheme::AdjRw).unwrap(),
            make_preset("sage", &[]).unwrap(),
            FilterSpec::polynomial(vec![1.0, -0.5], Scheme::LapRw).unwrap(),
        ];
        for f in filters {
            let r = check_equivalence(&f, &g, &x, 1e-8).unwrap();
            prop_assert!(r.pass, "{:?} {}", f.family, r.max_rel_error);
        }
    }

    #[test]
    fn solvers_agree_on_ppnp(g in arb_graph(48), seed in any::<u64>(), ai in 0usize..3) {
        let alpha = [0.1, 0.5, 0.9][ai];
        let f = make_preset("ppnp", &[("alpha", alpha)]).unwrap();
        let x = FeatureMatrix::random(g.num_nodes(), 3, seed);
        let fixed = f.apply(&g, &x, &SolverOptions::with_method(SolverMethod::FixedPoint)).unwrap();
        let dense = f.apply(&g, &x, &SolverOptions::with_method(SolverMethod::DenseDirect)).unwrap();
        prop_assert!(max_rel_error(dense.as_matrix(), fixed.as_matrix()) <= 1e-8);
    }

    #[test]
    fn compose_is_sequential_application(
        g in arb_graph(30),
        c1 in proptest::collection::vec(-1.0..1.0f64, 1..4),
        c2 in proptest::collection::vec(-1.0..1.0f64, 1..4),
        seed in any::<u64>(),
    ) {
        let f1 = FilterSpec::polynomial(c1, Scheme::AdjSym).unwrap();
        let f2 = FilterSpec::polynomial(c2, Scheme::AdjSym).unwrap();
        let x = FeatureMatrix::random(g.num_nodes(), 2, seed);
        let opts = SolverOptions::default();
        let seq = f1.apply(&g, &f2.apply(&g, &x, &opts).unwrap(), &opts).unwrap();
        let once = compose(&f1, &f2).unwrap().apply(&g, &x, &opts).unwrap();
        let scale = seq.max_abs().max(1e-3);
        prop_assert!((seq.as_matrix() - once.as_matrix()).amax() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn deepwalk_is_row_stochastic(g in arb_graph(30), t in 0usize..8) {
        let f = deepwalk_operator(&g, t).unwrap();
        let s: f64 = f.numerator().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-15 * (t + 1) as f64);
        let d = f.dense_operator(&g).unwrap();
        for i in 0..g.num_nodes() {
            prop_assert!((d.row(i).sum() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn energy_vanishes_iff_constant_per_component(g in arb_loose_graph(), seed in any::<u64>()) {
        let comp = g.components();
        let n = g.num_nodes();
        let vals = FeatureMatrix::random(n, 2, seed);
        let per_comp = DMatrix::from_fn(n, 2, |i, j| vals.as_matrix()[(comp[i], j)]);
        let z = FeatureMatrix::new(per_comp).unwrap();
        prop_assert!(dirichlet_energy(&g, &z).unwrap() <= 1e-12);
        // breaking constancy on a node with an edge gives positive energy
        if let Some((u, _, _)) = g.edges().next() {
            let mut m = z.into_inner();
            m[(u, 0)] += 1.0;
            prop_assert!(dirichlet_energy(&g, &FeatureMatrix::new(m).unwrap()).unwrap() > 0.0);
        }
    }

    #[test]
    fn filter_spec_json_round_trip(
        coeffs in proptest::collection::vec(-1e3..1e3f64, 1..6),
        den in proptest::collection::vec(-1.0..1.0f64, 0..3),
        si in 0usize..9,
    ) {
        let s = Scheme::ALL[si];
        for f in [
            FilterSpec::polynomial(coeffs.clone(), s).unwrap(),
            FilterSpec::rational(coeffs.clone(), den.clone(), s).unwrap(),
            FilterSpec::linear(coeffs[0], -coeffs[0], s),
        ] {
            prop_assert_eq!(filter_spec_from_json(&filter_spec_to_json(&f)).unwrap(), f);
        }
    }
}

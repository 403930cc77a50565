use hyperhdg::analysis::l2_error;
use hyperhdg::skeletal::project_on_node;
use hyperhdg::*;

fn tight(degree: usize) -> SolveOptions {
    SolveOptions {
        degree,
        tol: 1e-13,
        ..SolveOptions::default()
    }
}

#[test]
fn star_center_value_for_every_degree() {
    let g = star_graph(&[1.0; 3], &[true; 3]).unwrap();
    for p in 0..=3 {
        let sol = solve_problem(&g, &NodalData::star_oracle(), &tight(p)).unwrap();
        assert!((sol.node_trace(0)[0] - 1.0 / 3.0).abs() < 1e-12, "p = {p}");
        assert!(sol.node_trace(0)[1..].iter().all(|c| c.abs() < 1e-12));
    }
}

#[test]
fn star_with_unequal_lengths_and_conductivities() {
    // Kirchhoff: sum_k kappa_k (u_k - lambda) / L_k = 0
    let arms = [StarArm::new(0.5, 2.0, true), StarArm::new(2.0, 1.0, true), StarArm::new(1.0, 3.0, true)];
    let g = star_graph_with_arms(&arms).unwrap();
    let values = [0.0, 1.0, -2.0, 4.0];
    let data = NodalData {
        dirichlet: values.to_vec(),
        ..NodalData::default()
    };
    let sol = solve_problem(&g, &data, &tight(1)).unwrap();
    let w: Vec<f64> = arms.iter().map(|a| a.kappa / a.length).collect();
    let expect = (w[0] * values[1] + w[1] * values[2] + w[2] * values[3]) / w.iter().sum::<f64>();
    assert!((sol.node_trace(0)[0] - expect).abs() < 1e-12);
}

#[test]
fn neumann_arm_carries_constant_value() {
    let g = star_graph(&[1.0, 1.0, 1.0], &[true, true, false]).unwrap();
    let data = NodalData {
        dirichlet: vec![0.0, 0.0, 1.0, 0.0],
        ..NodalData::default()
    };
    let sol = solve_problem(&g, &data, &tight(1)).unwrap();
    assert!((sol.node_trace(0)[0] - 0.5).abs() < 1e-12);
    assert!((sol.node_trace(3)[0] - 0.5).abs() < 1e-12);
    assert!((sol.eval_u(2, &[0.4]) - 0.5).abs() < 1e-12);
}

#[test]
fn interval_with_uniform_load() {
    // -u'' = 2 on (0, 1), u(0) = u(1) = 0: u = x (1 - x)
    let g = single_edge(1.0, 1.0).unwrap();
    let data = NodalData {
        edge_source: vec![2.0],
        ..NodalData::default()
    };
    let sol = solve_problem(&g, &data, &tight(2)).unwrap();
    for x in [0.1, 0.5, 0.8] {
        assert!((sol.eval_u(0, &[x]) - x * (1.0 - x)).abs() < 1e-12);
    }
    let chain = star_graph(&[0.5, 0.5], &[true, true]).unwrap();
    let data = NodalData {
        edge_source: vec![2.0, 2.0],
        ..NodalData::default()
    };
    for p in 1..=2 {
        let sol = solve_problem(&chain, &data, &tight(p)).unwrap();
        assert!((sol.node_trace(0)[0] - 0.25).abs() < 1e-12, "p = {p}");
    }
}

#[test]
fn quadratic_traces_are_exact_for_p2() {
    for d in 1..=3 {
        let g = cube_filling(FillingSpec::new(d, 1, 1)).unwrap();
        let u = ExactSolution::paper_quadratic(3);
        let sol = solve_problem(&g, &u, &tight(2)).unwrap();
        assert!(l2_error(&g, &sol, &u) < 1e-10);
        for n in 0..g.nodes().len() {
            let exact = project_on_node(&g, n, 2, |x| u.value(x)).unwrap();
            for (a, b) in sol.node_trace(n).iter().zip(&exact) {
                assert!((a - b).abs() < 1e-10, "d = {d}, node {n}");
            }
        }
    }
}

#[test]
fn nonunit_kappa_with_catalog_data() {
    let g = mesh::with_kappa(&cube_filling(FillingSpec::new(2, 1, 0)).unwrap(), 2.5).unwrap();
    let u = ExactSolution::paper_quadratic(3);
    let sol = solve_problem(&g, &u, &tight(2)).unwrap();
    assert!(l2_error(&g, &sol, &u) < 1e-10);
    assert!(sol.conservation.defect() < 1e-10);
}

#[test]
fn node_renumbering_leaves_fields_unchanged() {
    let g = cube_filling(FillingSpec::new(2, 2, 0)).unwrap();
    let mut file = g.to_file();
    let n = file.nodes.len();
    // reverse the node ids
    let new_id = |old: usize| n - 1 - old;
    file.nodes.reverse();
    for inc in &mut file.incidences {
        inc.node = new_id(inc.node);
    }
    let permuted = HyperGraph::from_file(file).unwrap();
    let u = ExactSolution::paper_quadratic(3);
    let opts = SolveOptions {
        method: SolverMethod::Direct,
        ..SolveOptions::default()
    };
    let a = solve_problem(&g, &u, &opts).unwrap();
    let b = solve_problem(&permuted, &u, &opts).unwrap();
    for e in 0..g.edges().len() {
        for (x, y) in a.edges[e].u.iter().zip(&b.edges[e].u) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    for old in 0..n {
        for (x, y) in a.node_trace(old).iter().zip(b.node_trace(new_id(old))) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn interchange_round_trip_gives_identical_solution() {
    let g = cube_filling(FillingSpec::new(3, 1, 0)).unwrap();
    let again = HyperGraph::from_json(&g.to_json().unwrap()).unwrap();
    let u = ExactSolution::paper_quadratic(3);
    let a = solve_problem(&g, &u, &SolveOptions::default()).unwrap();
    let b = solve_problem(&again, &u, &SolveOptions::default()).unwrap();
    assert_eq!(a.lambda, b.lambda);
}

#[test]
fn matrix_market_dump_matches_system() {
    let g = cube_filling(FillingSpec::new(2, 1, 0)).unwrap();
    let sys = assemble_problem(&g, &ExactSolution::paper_quadratic(3), &SolveOptions::default()).unwrap();
    let mm = sys.to_matrix_market();
    let header: Vec<usize> = mm.lines().nth(1).unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
    assert_eq!(header, vec![sys.matrix.n, sys.matrix.n, sys.matrix.nnz()]);
    assert_eq!(mm.lines().count(), 2 + sys.matrix.nnz());
}

#[test]
fn direct_solver_size_limit() {
    let g = cube_filling(FillingSpec::new(2, 3, 1)).unwrap();
    let opts = SolveOptions {
        method: SolverMethod::Direct,
        ..SolveOptions::default()
    };
    let err = solve_problem(&g, &ExactSolution::paper_quadratic(3), &opts).unwrap_err();
    assert!(matches!(err, Error::Invalid(_)));
}

#[test]
fn zero_load_gives_zero_trace() {
    let g = cube_filling(FillingSpec::new(3, 1, 0)).unwrap();
    let sol = solve_problem(&g, &ExactSolution::constant(3, 0.0), &SolveOptions::default()).unwrap();
    assert_eq!(sol.stats.iterations, 0);
    assert!(sol.lambda.iter().all(|&v| v == 0.0));
}

#[test]
fn invalid_options_are_rejected() {
    let g = single_edge(1.0, 1.0).unwrap();
    let data = NodalData::default();
    for opts in [
        SolveOptions { tau: 0.0, ..SolveOptions::default() },
        SolveOptions { tol: 0.0, ..SolveOptions::default() },
    ] {
        assert!(matches!(solve_problem(&g, &data, &opts), Err(Error::Invalid(_))));
    }
}

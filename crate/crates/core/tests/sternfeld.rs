use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recurlab::linalg::{kron, ComplexMatrix, C64};
use recurlab::sternfeld::{
    check_wrc_bound, dsa_witness, find_rook_circuit, is_dsa_measure, is_wdsa, is_wdsa_with, is_wrc,
    marginals, partial_tensor_embed, solve_labels_on_subset, Grid, GridSubset, RankMode,
    SignedGridMeasure, Site,
};

fn subset_of_mask(p: usize, q: usize, mask: u32) -> GridSubset {
    let sites: Vec<Site> = (0..p * q)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| vec![b / q, b % q])
        .collect();
    GridSubset::new(Grid::new(vec![p, q]).unwrap(), sites).unwrap()
}

/// Cycle rank of the bipartite rows/columns graph: edges minus vertices
/// touched plus connected components, by depth-first search.
fn cycle_rank(p: usize, q: usize, sites: &[Site]) -> usize {
    let n = p + q;
    let mut adj = vec![vec![]; n];
    for s in sites {
        adj[s[0]].push(p + s[1]);
        adj[p + s[1]].push(s[0]);
    }
    let touched: Vec<usize> = (0..n).filter(|&v| !adj[v].is_empty()).collect();
    let mut seen = vec![false; n];
    let mut components = 0;
    for &start in &touched {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    sites.len() + components - touched.len()
}

#[test]
fn four_corner_measure_has_vanishing_marginals() {
    let grid = Grid::new(vec![3, 4]).unwrap();
    let (a, b, x, y) = (0, 2, 1, 3);
    let m = SignedGridMeasure::new(
        grid,
        vec![vec![a, x], vec![a, y], vec![b, x], vec![b, y]],
        vec![1.0, -1.0, -1.0, 1.0],
    )
    .unwrap();
    assert!(marginals(&m).iter().flatten().all(|&v| v == 0.0));
    assert!(is_dsa_measure(&m));
}

#[test]
fn wrc_and_wdsa_agree_on_every_small_grid() {
    for p in 1..=4 {
        for q in 1..=4 {
            for mask in 0u32..1 << (p * q) {
                let s = subset_of_mask(p, q, mask);
                let wrc = is_wrc(&s).unwrap();
                assert_eq!(
                    wrc,
                    cycle_rank(p, q, s.sites()) == 0,
                    "{p}x{q} mask {mask:b}"
                );
                assert_eq!(wrc, is_wdsa(&s).unwrap(), "{p}x{q} mask {mask:b}");
                if mask % 7 == 0 {
                    assert_eq!(
                        is_wdsa_with(&s, RankMode::Float).unwrap(),
                        is_wdsa_with(&s, RankMode::Exact).unwrap()
                    );
                }
            }
        }
    }
}

#[test]
fn wrc_bound_is_tight_up_to_four_by_four() {
    for p in 1..=4 {
        for q in 1..=4 {
            let r = check_wrc_bound(p, q).unwrap();
            assert_eq!(r.max_wrc_size, p + q - 1);
            assert_eq!(r.violations, 0);
            assert_eq!(r.subsets_checked, 1u64 << (p * q));
            assert!(r.bound_holds);
        }
    }
}

#[test]
fn rook_circuits_are_valid_and_carry_dsa_measures() {
    for (p, q) in [(2, 2), (3, 3), (3, 4)] {
        for mask in 0u32..1 << (p * q) {
            let s = subset_of_mask(p, q, mask);
            let Some(path) = find_rook_circuit(&s).unwrap() else {
                continue;
            };
            assert!(path.is_valid(), "{p}x{q} mask {mask:b}: {path:?}");
            assert!(path.turning_points.iter().all(|t| s.contains(t)));
            let m = path.alternating_measure(s.grid().clone());
            assert!(marginals(&m).iter().flatten().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn wdsa_is_dual_to_label_solvability() {
    let mut g = ChaCha8Rng::seed_from_u64(31);
    for (p, q) in [(2, 2), (2, 3), (3, 3)] {
        for mask in 1u32..1 << (p * q) {
            let s = subset_of_mask(p, q, mask);
            let values: Vec<f64> = (0..s.len()).map(|_| g.random_range(-1.0..1.0)).collect();
            let solvable = solve_labels_on_subset(&s, &values).unwrap().is_some();
            let witness = dsa_witness(&s).unwrap();
            if is_wdsa(&s).unwrap() {
                assert!(solvable, "{p}x{q} mask {mask:b}");
                assert!(witness.is_none());
            } else {
                assert!(!solvable, "{p}x{q} mask {mask:b}");
                let m = witness.unwrap();
                assert!(is_dsa_measure(&m));
                assert!(m.support.iter().all(|t| s.contains(t)));
            }
        }
    }
}

#[test]
fn three_axis_rank_modes_agree() {
    let grid = Grid::new(vec![2, 2, 3]).unwrap();
    let all = grid.all_sites();
    let mut g = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let sites: Vec<Site> = all.iter().filter(|_| g.random_bool(0.5)).cloned().collect();
        let s = GridSubset::new(grid.clone(), sites).unwrap();
        assert_eq!(
            is_wdsa_with(&s, RankMode::Float).unwrap(),
            is_wdsa_with(&s, RankMode::Exact).unwrap()
        );
    }
}

fn random_rank_matrix(n: usize, rank: usize, g: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut draw = |r: usize, c: usize| {
        let e = (0..r * c)
            .map(|_| C64::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::new(r, c, e).unwrap()
    };
    let (a, b) = (draw(n, rank), draw(rank, n));
    a.matmul(&b).unwrap()
}

#[test]
fn partial_tensor_embedding_closes_the_diagram() {
    let mut g = ChaCha8Rng::seed_from_u64(77);
    let wdsas: Vec<GridSubset> = (1u32..1 << 6)
        .map(|m| subset_of_mask(2, 3, m))
        .filter(|s| is_wdsa(s).unwrap())
        .collect();
    for trial in 0..20 {
        let s = &wdsas[g.random_range(0..wdsas.len())];
        let m = random_rank_matrix(5, s.len(), &mut g);
        let e = partial_tensor_embed(&m, s).unwrap();
        assert!(e.residual <= 1e-9, "trial {trial}: {}", e.residual);
        let product = kron(&e.factors).unwrap();
        let rebuilt =
            e.v.adjoint()
                .matmul(&product)
                .unwrap()
                .matmul(&e.u)
                .unwrap();
        let scale = e.singular_values[0].max(1.0);
        assert!(rebuilt.max_abs_diff(&m) <= 1e-9 * scale, "trial {trial}");
    }
}

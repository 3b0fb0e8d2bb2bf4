use dipole_cost::emit::{self, Format};
use dipole_cost::model::Edge;
use dipole_cost::sweep::{self, run_sweep};
use dipole_cost::*;
use proptest::prelude::*;

fn topology_strategy() -> impl Strategy<Value = Topology> {
    (1usize..=4).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let len = pairs.len();
        (
            Just(n),
            proptest::collection::vec(proptest::option::of(-2.0f64..2.0), len),
        )
            .prop_map(move |(n, weights)| {
                let edges = pairs
                    .iter()
                    .zip(weights)
                    .filter_map(|(&(a, b), w)| w.map(|w| Edge::new(a, b, w)))
                    .collect();
                Topology::new(n, edges).unwrap()
            })
    })
}

fn spec_strategy() -> impl Strategy<Value = SystemSpec> {
    (topology_strategy(), -1.5f64..1.5, 0.0f64..2.0, any::<u8>()).prop_map(|(t, h, beta, bits)| {
        let n = t.dipoles;
        let pattern = (0..n).map(|i| bits >> i & 1 == 1).collect();
        SystemSpec::new(t, h, beta).with_pattern(pattern)
    })
}

fn states(n: usize) -> impl Iterator<Item = SpinState> {
    (0..1usize << n).map(move |x| SpinState::from_index(x, n))
}

proptest! {
    #[test]
    fn delta_energy_matches_total_difference(spec in spec_strategy()) {
        for s in states(spec.dipoles()) {
            for i in 0..spec.dipoles() {
                let direct = total_energy(&spec, s.flipped(i)).unwrap() - total_energy(&spec, s).unwrap();
                let local = delta_energy(&spec, s, i).unwrap();
                prop_assert!((direct - local).abs() < 1e-12, "{direct} vs {local}");
            }
        }
    }

    #[test]
    fn flip_probability_complement(de in -50.0f64..50.0, beta in 0.0f64..5.0) {
        let sum = flip_probability(de, beta) + flip_probability(-de, beta);
        prop_assert!((sum - 1.0).abs() < 1e-15);
        let p = flip_probability(de, beta);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn detailed_balance(spec in spec_strategy()) {
        let p = build_transition_matrix(&spec).unwrap();
        for x in states(spec.dipoles()) {
            for i in 0..spec.dipoles() {
                let y = x.flipped(i);
                let ex = total_energy(&spec, x).unwrap();
                let ey = total_energy(&spec, y).unwrap();
                // Compare in log space to stay clear of overflow.
                let lhs = -spec.beta * ex + p[(x.index(), y.index())].ln();
                let rhs = -spec.beta * ey + p[(y.index(), x.index())].ln();
                prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn rows_stochastic(spec in spec_strategy()) {
        let p = build_transition_matrix(&spec).unwrap();
        for x in 0..p.rows() {
            let s: f64 = p.row(x).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn field_sign_and_pattern_complement(spec in spec_strategy()) {
        let mut flipped = spec.clone();
        flipped.h = -spec.h;
        flipped.stored_pattern = spec.stored_pattern.iter().map(|b| !b).collect();
        for x in states(spec.dipoles()) {
            prop_assert_eq!(total_energy(&spec, x).unwrap(), total_energy(&flipped, x).unwrap());
        }
        let a = retention_time_exact(&spec, AbsorptionRule::MajorityWrong);
        let b = retention_time_exact(&flipped, AbsorptionRule::MajorityWrong);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a.tau - b.tau).abs() <= 1e-9 * a.tau),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn cost_is_affine_in_replenishment(
        spec in spec_strategy().prop_filter("nonnegative couplings", |s| s.topology.edges.iter().all(|e| e.coupling >= 0.0)),
        c_m in 0.0f64..5.0,
        r1 in 0.0f64..10.0,
        r2 in 0.0f64..10.0,
    ) {
        let base = CostParams { c_m, ..CostParams::default() };
        let rule = AbsorptionRule::MajorityWrong;
        let Ok(zero) = generalized_cost(&spec, &CostParams { c_r: 0.0, ..base }, rule) else {
            return Ok(());
        };
        let a = generalized_cost(&spec, &CostParams { c_r: r1, ..base }, rule).unwrap();
        let b = generalized_cost(&spec, &CostParams { c_r: r2, ..base }, rule).unwrap();
        let slope = spec.dipoles() as f64 / zero.tau_used;
        for (c_r, br) in [(r1, a), (r2, b)] {
            let predicted = zero.total + slope * c_r;
            prop_assert!((br.total - predicted).abs() <= 1e-12 * br.total.max(1.0));
        }
    }

    #[test]
    fn cost_monotone_in_material_and_k(c_m in 0.0f64..4.0, dc in 0.0f64..2.0, k in 0.0f64..3.0, dk in 0.0f64..2.0, s_f in 0.0f64..2.0) {
        let lo = CostParams { c_m, k, ..CostParams::default() };
        let hi_m = CostParams { c_m: c_m + dc, ..lo };
        let hi_k = CostParams { k: k + dk, ..lo };
        for s in Scenario::ALL {
            let base = scenario_cost(s, &lo, 0.5, s_f, 1.0).unwrap().total;
            prop_assert!(scenario_cost(s, &hi_m, 0.5, s_f, 1.0).unwrap().total >= base);
            prop_assert!(scenario_cost(s, &hi_k, 0.5, s_f, 1.0).unwrap().total >= base);
        }
    }

    #[test]
    fn coupling_cost_monotone_in_strength(a in 0.0f64..5.0, d in 0.0f64..5.0, m in 0.01f64..3.0, c_m in 0.0f64..3.0) {
        let p = CostParams { m, c_m, ..CostParams::default() };
        prop_assert!(coupling_cost(a + d, &p).unwrap() >= coupling_cost(a, &p).unwrap());
    }
}

fn permute_spec(spec: &SystemSpec, perm: &[usize]) -> SystemSpec {
    let n = spec.dipoles();
    let mut edges: Vec<Edge> = spec
        .topology
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (perm[e.a], perm[e.b]);
            Edge::new(a.min(b), a.max(b), e.coupling)
        })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    let mut pattern = vec![false; n];
    for i in 0..n {
        pattern[perm[i]] = spec.stored_pattern[i];
    }
    SystemSpec::new(Topology::new(n, edges).unwrap(), spec.h, spec.beta).with_pattern(pattern)
}

fn permute_state(s: SpinState, perm: &[usize]) -> SpinState {
    let mask = (0..s.dipoles)
        .filter(|&i| s.is_wrong(i))
        .fold(0u64, |m, i| m | 1 << perm[i]);
    SpinState { wrong_mask: mask, dipoles: s.dipoles }
}

#[test]
fn automorphisms_preserve_energy_and_retention() {
    let triangle_perms: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let patterns = [vec![true, true, true], vec![true, false, true], vec![false, false, true]];
    for pattern in &patterns {
        let tri = SystemSpec::new(Topology::triangle3(0.7), 0.4, 1.0).with_pattern(pattern.clone());
        let tau = retention_time_exact(&tri, AbsorptionRule::MajorityWrong).unwrap().tau;
        for perm in &triangle_perms {
            let moved = permute_spec(&tri, perm);
            assert_eq!(moved.topology.edges.len(), 3);
            for s in states(3) {
                let e0 = total_energy(&tri, s).unwrap();
                let e1 = total_energy(&moved, permute_state(s, perm)).unwrap();
                assert!((e0 - e1).abs() < 1e-12);
            }
            let t = retention_time_exact(&moved, AbsorptionRule::MajorityWrong).unwrap().tau;
            assert!((t - tau).abs() <= 1e-10 * tau);
        }

        let line = SystemSpec::new(Topology::line3(0.9), 0.3, 1.2).with_pattern(pattern.clone());
        let reversed = permute_spec(&line, &[2, 1, 0]);
        assert_eq!(reversed.topology, Topology::line3(0.9));
        for s in states(3) {
            let e0 = total_energy(&line, s).unwrap();
            let e1 = total_energy(&reversed, permute_state(s, &[2, 1, 0])).unwrap();
            assert!((e0 - e1).abs() < 1e-12);
        }
        let a = retention_time_exact(&line, AbsorptionRule::MajorityWrong).unwrap().tau;
        let b = retention_time_exact(&reversed, AbsorptionRule::MajorityWrong).unwrap().tau;
        assert!((a - b).abs() <= 1e-10 * a);
    }
}

#[test]
fn single_field_cost_tends_to_isolated() {
    let p = CostParams { c_m: 1.3, c_r: 2.7, ..CostParams::default() };
    let s1 = scenario_cost(Scenario::S1, &p, 0.0, 0.0, 1.0).unwrap().total;
    let s2 = scenario_cost(Scenario::S2, &p, 1e-6, 0.0, 1.0).unwrap().total;
    assert!((s1 - s2).abs() < 1e-5, "{s1} vs {s2}");
}

fn cheaper(a: &CostBreakdown, b: &CostBreakdown) -> bool {
    a.total < b.total
}

#[test]
fn crossover_semantics_for_three_and_line_triangle() {
    let eps = 1e-3;
    for h in [0.25, 0.5, 1.0, 2.0] {
        let r = critical_three_uncoupled(h, 1.0, 1.0).unwrap();
        for (factor, field_wins) in [(1.0 + eps, true), (1.0 - eps, false)] {
            let p = CostParams { c_r: r.c_r0 * factor, ..CostParams::default() };
            let s3 = scenario_cost(Scenario::S3, &p, h, 0.0, 1.0).unwrap();
            let s4 = scenario_cost(Scenario::S4, &p, h, 0.0, 1.0).unwrap();
            assert_eq!(cheaper(&s4, &s3), field_wins, "h = {h}, factor = {factor}");
        }
        for s_f in [0.1, 0.5, 1.0] {
            let base = CostParams { c_m: 1.5, ..CostParams::default() };
            let r = critical_line_vs_triangle(h, s_f, 1.0, &base).unwrap();
            for (factor, triangle_wins) in [(1.0 + eps, true), (1.0 - eps, false)] {
                let p = CostParams { c_r: r.c_r0 * factor, ..base };
                let s5 = scenario_cost(Scenario::S5, &p, h, s_f, 1.0).unwrap();
                let s6 = scenario_cost(Scenario::S6, &p, h, s_f, 1.0).unwrap();
                assert_eq!(cheaper(&s6, &s5), triangle_wins, "h = {h}, s_f = {s_f}");
            }
        }
    }
}

#[test]
fn generic_crossover_semantics_single_dipole() {
    let eps = 1e-3;
    let plain = Configuration::new("S1", Scenario::S1.spec(0.0, 0.0, 1.0));
    for h in [0.25, 1.0, 2.0] {
        let field = Configuration::new("S2", Scenario::S2.spec(h, 0.0, 1.0));
        let r = generic_crossover(&plain, &field, &CostParams::default()).unwrap();
        assert_eq!(r.regime_above, "S2 cheaper");
        for (factor, field_wins) in [(1.0 + eps, true), (1.0 - eps, false)] {
            let p = CostParams { c_r: r.c_r0 * factor, ..CostParams::default() };
            let s1 = scenario_cost(Scenario::S1, &p, h, 0.0, 1.0).unwrap();
            let s2 = scenario_cost(Scenario::S2, &p, h, 0.0, 1.0).unwrap();
            assert_eq!(cheaper(&s2, &s1), field_wins, "h = {h}");
        }
    }
}

#[test]
fn critical_single_increasing_in_field() {
    let values: Vec<f64> = (1..=500)
        .map(|i| critical_single(i as f64 * 0.01, 1.0, 1.0).unwrap().c_r0)
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn mc_reproducible_across_runs() {
    let spec = SystemSpec::new(Topology::line3(0.3), 0.2, 1.0);
    let cfg = McConfig::new(5_000, 42);
    let a = estimate_retention(&spec, AbsorptionRule::MajorityWrong, &cfg).unwrap();
    let b = estimate_retention_with_workers(&spec, AbsorptionRule::MajorityWrong, &cfg, 3).unwrap();
    assert_eq!(a, b);
    let other = estimate_retention(&spec, AbsorptionRule::MajorityWrong, &McConfig::new(5_000, 43)).unwrap();
    assert_ne!(a.mean, other.mean);
}

#[test]
fn emitted_formats_carry_identical_values() {
    let table = run_sweep(&sweep::figure_recipe(1, Default::default()).unwrap()).unwrap();
    let csv = &emit::emit(&table, Format::Csv).unwrap()[0].contents;
    let json = &emit::emit(&table, Format::Json).unwrap()[0].contents;
    let dat = &emit::emit(&table, Format::Dat).unwrap()[0].contents;

    let csv_rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let dat_rows: Vec<Vec<f64>> = dat
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    let from_json = emit::parse_json(json).unwrap();

    assert_eq!(csv_rows, table.rows);
    assert_eq!(from_json, table);
    assert_eq!(dat_rows.len(), table.rows.len());
    for (d, r) in dat_rows.iter().zip(&table.rows) {
        assert_eq!(d, &vec![r[0], r[1]]);
    }
}

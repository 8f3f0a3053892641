use proptest::prelude::*;

use hamjet::connections::Geometry;
use hamjet::expr::{parse_expr, Expr, Point, VarRef};
use hamjet::space::HamiltonSpace;
use hamjet::verify::{run_suite, sample_points, SampleConfig, Suite};

const DIMS: (usize, usize) = (2, 2);

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec!["t1", "t2", "x1", "x2", "p1_1", "p1_2", "p2_1", "p2_2"]).prop_map(str::to_string),
        (-3i32..=3).prop_map(|k| format!("{k}")),
        (1i32..=4).prop_map(|k| format!("{k}/4")),
    ]
}

/// Source text of a smooth expression over the coordinates of a (2, 2) space.
fn source() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(2 + ({b})^2)")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            (inner, 2i32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
        ]
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    source().prop_map(|s| parse_expr(&s, DIMS).expect("generated source parses"))
}

fn point() -> impl Strategy<Value = Point> {
    prop::collection::vec(-1.5f64..1.5, 8).prop_map(|v| Point {
        t: v[0..2].to_vec(),
        x: v[2..4].to_vec(),
        p: vec![v[4..6].to_vec(), v[6..8].to_vec()],
    })
}

fn var() -> impl Strategy<Value = VarRef> {
    prop::sample::select(VarRef::all(DIMS.0, DIMS.1))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn eval(e: &Expr, pt: &Point) -> f64 {
    e.eval(pt).expect("smooth expression evaluates")
}

/// Central difference with one Richardson step.
fn fd(e: &Expr, pt: &Point, v: VarRef) -> f64 {
    let d = |h: f64| (eval(e, &pt.shifted(v, h)) - eval(e, &pt.shifted(v, -h))) / (2.0 * h);
    let h = 1e-3;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivative_agrees_with_finite_differences(e in expr(), pt in point(), v in var()) {
        let d = eval(&e.diff(v), &pt);
        prop_assert!(close(d, fd(&e, &pt, v), 1e-6), "{e}: d/d{v} = {d}, fd = {}", fd(&e, &pt, v));
    }

    #[test]
    fn simplify_preserves_values(e in expr(), pt in point()) {
        prop_assert!(close(eval(&e, &pt), eval(&e.simplify(), &pt), 1e-12));
    }

    #[test]
    fn simplify_is_idempotent(e in expr()) {
        let once = e.simplify();
        prop_assert_eq!(once.simplify().to_string(), once.to_string());
    }

    #[test]
    fn mixed_partials_commute(e in expr(), pt in point(), u in var(), v in var()) {
        let uv = eval(&e.diff(u).diff(v), &pt);
        let vu = eval(&e.diff(v).diff(u), &pt);
        prop_assert!(close(uv, vu, 1e-10), "{e}: {uv} vs {vu}");
    }

    #[test]
    fn display_round_trips(e in expr(), pt in point()) {
        let back = parse_expr(&e.to_string(), DIMS).unwrap();
        prop_assert!(close(eval(&e, &pt), eval(&back, &pt), 1e-12), "{e} reparsed as {back}");
    }

    #[test]
    fn derivative_of_a_variable_free_expression_vanishes(e in expr(), v in var()) {
        prop_assume!(!e.depends_on(v));
        prop_assert!(e.diff(v).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn timewarp_n1_is_linear_in_the_momenta(pt in point(), scale in -2.0f64..2.0) {
        let geo = Geometry::new(&HamiltonSpace::bundled("timewarp").unwrap());
        let mut scaled = pt.clone();
        for row in &mut scaled.p {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        for (idx, c) in geo.nonlinear.n1.iter() {
            for v in VarRef::all(2, 2).into_iter().filter(|v| matches!(v, VarRef::Momentum { .. })) {
                for w in VarRef::all(2, 2).into_iter().filter(|w| matches!(w, VarRef::Momentum { .. })) {
                    prop_assert!(c.diff(v).diff(w).is_zero(), "N1{idx:?} not linear");
                }
            }
            prop_assert!(close(eval(c, &scaled), scale * eval(c, &pt), 1e-12));
        }
    }
}

fn family_space(k: [f64; 4]) -> HamiltonSpace {
    let src = format!(
        "name = \"family\"\ndims = {{ m = 2, n = 2 }}\n\
         h = [[\"1 + {a}*t1^2\", \"0\"], [\"0\", \"-exp({b}*t2)\"]]\n\
         g_inv = [[\"2 + sin({c}*x1)\", \"{d}*x2/4\"], [\"{d}*x2/4\", \"3 + x1^2\"]]\n\
         U = [[\"{c}*x2\", \"x1*t1\"], [\"0\", \"{a}*t2*x1\"]]\n",
        a = k[0],
        b = k[1],
        c = k[2],
        d = k[3],
    );
    HamiltonSpace::from_toml(&src).expect("family member is valid")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn metricity_holds_across_a_family(k in prop::array::uniform4(0.1f64..1.0)) {
        let s = family_space(k);
        let cfg = SampleConfig { count: 10, ..Default::default() };
        for r in run_suite(&s, Suite::Metricity, &cfg, 1.0).unwrap() {
            prop_assert!(r.ok(), "{} on {k:?}: {:e}", r.identity, r.max_abs_residual);
        }
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>()) {
        let s = HamiltonSpace::bundled("sphere2_u").unwrap();
        let cfg = SampleConfig { seed, count: 10, ..Default::default() };
        prop_assert_eq!(sample_points(&s, &cfg).unwrap(), sample_points(&s, &cfg).unwrap());
        let a = serde_json::to_string(&run_suite(&s, Suite::Tables, &cfg, 1.0).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suite(&s, Suite::Tables, &cfg, 1.0).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

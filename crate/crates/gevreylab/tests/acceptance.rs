//! Acceptance suite: end-to-end checks of the classifier, solver,
//! estimator, majorant, counterexample, and lemma machinery at fixed
//! tolerances, each with a wall-clock budget and one PASS line.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complete, Integer, Rational};

use gevreylab::analysis::{check_lower_bound, check_norm_properties, estimate_gevrey};
use gevreylab::eqdsl;
use gevreylab::equation::{
    CoeffSpec, EquationSpec, InitialData, Inhomogeneity, RatPoly, Term, TermFactor,
};
use gevreylab::moments::{envelope_f64, MomentSequence};
use gevreylab::polygon;
use gevreylab::series::MultiIndex;
use gevreylab::solver::{
    build_counterexample, check_majorant, solve, technical_product_lower_bound, SolveRequest,
};
use gevreylab::Exact;

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn parse(text: &str) -> EquationSpec {
    eqdsl::parse(text).expect("fixture parses")
}

fn sigma_c_of(text: &str) -> Rational {
    polygon::build(&parse(text)).expect("polygon builds").sigma_c
}

fn rat(n: i64, d: u64) -> Rational {
    Rational::from((n, d))
}

fn budget(t0: Instant, limit_s: u64, label: &str) {
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(limit_s),
        "{label} exceeded its {limit_s}s budget: {elapsed:.2?}"
    );
}

// ---------------------------------------------------------------------------
// 1. Critical values match the worked examples exactly.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_critical_value_table() {
    let t0 = Instant::now();

    // Heat family Dt u = t^v Dx^2 u with orders (s0, s1).
    let heat = |s0: &str, s1: &str, v: u32| {
        format!(
            "moment t = gamma({s0})\nmoment x = gamma({s1})\ninit 0 = geom\n\
             Dt u - t^{v} * Dx^2 u = 0\n"
        )
    };
    assert_eq!(sigma_c_of(&heat("1", "1", 0)), rat(1, 1));
    assert_eq!(sigma_c_of(&heat("2", "1", 0)), rat(0, 1));
    assert_eq!(sigma_c_of(&heat("1", "2", 1)), rat(3, 2));

    // Boussinesq at t-orders 1 and 3.
    assert_eq!(sigma_c_of(&fixture("boussinesq.eq")), rat(1, 1));
    let slow_boussinesq = fixture("boussinesq.eq").replace("gamma(1)\nmoment x", "gamma(3)\nmoment x");
    assert_eq!(sigma_c_of(&slow_boussinesq), rat(0, 1));

    assert_eq!(sigma_c_of(&fixture("kdv.eq")), rat(2, 1));
    assert_eq!(sigma_c_of(&fixture("burgers.eq")), rat(1, 1));

    // Two-term dispersive family Dt u = t^v1 Dx^q1 u + t^v2 Dx^q2 u,
    // one parameter set per branch of its critical-value formula.
    let two_term = |q1: u32, q2: u32, v1: u32, v2: u32, s0: &str, s1: &str| {
        format!(
            "moment t = gamma({s0})\nmoment x = gamma({s1})\ninit 0 = geom\n\
             Dt u - t^{v1} * Dx^{q1} u - t^{v2} * Dx^{q2} u = 0\n"
        )
    };
    let branches: [(u32, u32, u32, u32, &str, &str, Rational); 5] = [
        (2, 1, 0, 0, "3", "1", rat(0, 1)),
        (3, 1, 1, 0, "2", "1", rat(1, 2)),
        (4, 2, 0, 1, "1", "1", rat(3, 1)),
        (3, 3, 2, 1, "1", "1", rat(1, 1)),
        (4, 2, 3, 0, "1", "1", rat(1, 1)),
    ];
    for (q1, q2, v1, v2, s0, s1, expected) in branches {
        let text = two_term(q1, q2, v1, v2, s0, s1);
        assert_eq!(sigma_c_of(&text), expected, "branch ({q1},{q2},{v1},{v2},{s0},{s1})");
    }

    budget(t0, 1, "critical value table");
    println!("ACCEPTANCE 1: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 2. Solver versus closed form and versus a classical Taylor oracle.
// ---------------------------------------------------------------------------

/// Plain dense polynomial: exponent vector -> coefficient.
type Poly = BTreeMap<Vec<u32>, Rational>;

fn factorial(n: u64) -> Rational {
    Rational::from(Integer::factorial(n as u32).complete())
}

fn poly_of(p: &RatPoly) -> Poly {
    p.iter().map(|(idx, c)| (idx.as_slice().to_vec(), c.clone())).collect()
}

fn poly_add_scaled(dst: &mut Poly, src: &Poly, scale: &Rational) {
    for (k, c) in src {
        let add = (c * scale).complete();
        let slot = dst.entry(k.clone()).or_insert_with(Rational::new);
        *slot += add;
        if *slot == 0 {
            dst.remove(k);
        }
    }
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let k: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            *out.entry(k).or_insert_with(Rational::new) += (ca * cb).complete();
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Classical x-derivative: coefficient at k picks up the falling
/// factorial prod_d (k_d + q_d)(k_d + q_d - 1)...(k_d + 1) from k + q.
fn poly_dx(p: &Poly, q: &[u32]) -> Poly {
    let mut out = Poly::new();
    for (k, c) in p {
        let mut shifted = Vec::with_capacity(k.len());
        let mut weight = Integer::from(1);
        let mut ok = true;
        for (d, &kd) in k.iter().enumerate() {
            let qd = q[d];
            if kd < qd {
                ok = false;
                break;
            }
            shifted.push(kd - qd);
            for step in 0..qd {
                weight *= kd - step;
            }
        }
        if ok {
            let scaled = (c * &weight).complete();
            if scaled != 0 {
                out.insert(shifted, scaled);
            }
        }
    }
    out
}

/// Independent Taylor recursion for linear gamma(1) specs with plain
/// coefficients U_j of sum_j U_j t^j:
///   U_{j+kappa} (j+kappa)!/j! =
///     F_j + sum_t sum_{b+c=j-v_t} (a_{t,b}/b!) d_x^{q_t} U_{c+i_t} (c+i_t)!/c!
/// with U_i = phi_i / i! for i < kappa and F_j = f_j / j!.
fn classical_solve(spec: &EquationSpec, j_max: u32) -> Vec<Poly> {
    let kappa = spec.kappa;
    let mut us: Vec<Poly> = Vec::new();
    for i in 0..kappa {
        let InitialData::Poly(p) = &spec.initial[i as usize] else {
            panic!("oracle expects polynomial data");
        };
        let mut u = Poly::new();
        poly_add_scaled(&mut u, &poly_of(p), &Rational::from(factorial(i as u64).recip_ref()));
        us.push(u);
    }
    for j in 0..=(j_max - kappa) {
        let mut acc = Poly::new();
        if let Inhomogeneity::Poly(entries) = &spec.inhomogeneity {
            if let Some((_, f)) = entries.iter().find(|(jj, _)| *jj == j) {
                poly_add_scaled(&mut acc, &poly_of(f), &Rational::from(factorial(j as u64).recip_ref()));
            }
        }
        for term in &spec.terms {
            let Some(jp) = j.checked_sub(term.v) else { continue };
            let f = &term.factors[0];
            assert_eq!(f.r, 1, "oracle expects linear terms");
            for b in 0..=jp {
                let a_b = term.coeff.entry(spec.dim, b);
                if a_b.is_zero() {
                    continue;
                }
                let c = jp - b;
                let du = poly_dx(&us[(c + f.i) as usize], f.q.as_slice());
                let w = factorial((c + f.i) as u64)
                    / factorial(c as u64)
                    / factorial(b as u64);
                poly_add_scaled(&mut acc, &poly_mul(&poly_of(&a_b), &du), &w);
            }
        }
        let mut next = Poly::new();
        let shift = factorial(j as u64) / factorial((j + kappa) as u64);
        poly_add_scaled(&mut next, &acc, &shift);
        us.push(next);
    }
    us
}

fn random_poly(rng: &mut ChaCha8Rng, dim: usize, max_deg: u32) -> RatPoly {
    let mut p = RatPoly::new();
    for _ in 0..rng.random_range(0..=3) {
        let idx: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=max_deg)).collect();
        let num = rng.random_range(-3i64..=3);
        let den = rng.random_range(1u64..=2);
        p.insert(MultiIndex::from_slice(&idx), rat(num, den));
    }
    p
}

fn random_linear_spec(rng: &mut ChaCha8Rng) -> EquationSpec {
    let dim = rng.random_range(1..=2usize);
    let kappa = rng.random_range(1..=2u32);
    let gamma1 = Arc::new(MomentSequence::gamma(Rational::from(1)).unwrap());
    let moments = vec![gamma1; dim + 1];

    let mut terms = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let i = rng.random_range(0..kappa);
        let q: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=2)).collect();
        let v = rng.random_range(0..=2u32);
        let coeff = match rng.random_range(0..3) {
            0 => {
                let num = loop {
                    let n = rng.random_range(-3i64..=3);
                    if n != 0 {
                        break n;
                    }
                };
                CoeffSpec::Const(rat(num, rng.random_range(1..=2)))
            }
            1 => CoeffSpec::Poly(vec![(0, random_poly(rng, dim, 1))]),
            _ => CoeffSpec::Poly(vec![
                (0, random_poly(rng, dim, 1)),
                (1, random_poly(rng, dim, 1)),
            ]),
        };
        terms.push(Term {
            v,
            coeff,
            factors: vec![TermFactor { i, q: MultiIndex::from_slice(&q), r: 1 }],
        });
    }

    let initial = (0..kappa).map(|_| InitialData::Poly(random_poly(rng, dim, 2))).collect();
    let inhomogeneity = if rng.random_bool(0.5) {
        Inhomogeneity::Zero
    } else {
        Inhomogeneity::Poly(
            (0..=2).map(|j| (j, random_poly(rng, dim, 1))).collect(),
        )
    };

    EquationSpec { dim, kappa, moments, terms, inhomogeneity, initial }
}

fn xseries_to_poly(xs: &gevreylab::series::XSeries<Exact>) -> Poly {
    xs.iter()
        .filter(|(_, c)| **c != 0)
        .map(|(idx, c)| (idx.as_slice().to_vec(), c.clone()))
        .collect()
}

#[test]
fn acceptance_2_solver_against_oracles() {
    let t0 = Instant::now();

    // Transported diffusion with linear datum has the closed form
    // x / (1 - 2t) = sum_j x 2^j t^j, i.e. u_j = 2^j j! x normalized.
    let burgers_line = "init 0 = x\nDt u - Dx^2 u - 2 * u * Dx u = 0\n";
    let req = SolveRequest { spec: parse(burgers_line), j_max: 12, d_out: 4 };
    let sol = solve::<Exact>(&req, ()).expect("solves");
    for j in 0..=12u32 {
        let expected: Poly = [(
            vec![1u32],
            factorial(j as u64) * Rational::from(Integer::from(1) << j),
        )]
        .into_iter()
        .collect();
        assert_eq!(
            xseries_to_poly(&sol.u.entries()[j as usize]),
            expected,
            "closed form mismatch at order {j}"
        );
    }

    // Fifty random linear specs against the independent recursion.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2_0002);
    for trial in 0..50 {
        let spec = random_linear_spec(&mut rng);
        let req = SolveRequest { spec: spec.clone(), j_max: 8, d_out: 16 };
        let sol = solve::<Exact>(&req, ())
            .unwrap_or_else(|e| panic!("trial {trial}: solve failed: {e}"));
        let oracle = classical_solve(&spec, 8);
        for j in 0..=8usize {
            let mut expected = Poly::new();
            poly_add_scaled(&mut expected, &oracle[j], &factorial(j as u64));
            assert_eq!(
                xseries_to_poly(&sol.u.entries()[j]),
                expected,
                "trial {trial}: normalized entries diverge from the oracle at order {j}"
            );
        }
    }

    budget(t0, 30, "solver oracle comparison");
    println!("ACCEPTANCE 2: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 3. Growth estimator on the heat benchmark.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_3_heat_estimator() {
    let t0 = Instant::now();

    let req = SolveRequest { spec: parse(&fixture("heat.eq")), j_max: 40, d_out: 100 };
    let sol = solve::<Exact>(&req, ()).expect("solves");
    let est = estimate_gevrey::<Exact>(&sol.u, &rat(1, 2), Some((20, 40))).expect("estimates");
    assert!(!est.degenerate);
    assert!(
        (0.9..=1.1).contains(&est.sigma_hat),
        "geometric heat data should look Gevrey-1, got {}",
        est.sigma_hat
    );

    // Polynomial data gives an entire (polynomial in t) solution.
    let poly_heat = "init 0 = x^2\nDt u - Dx^2 u = 0\n";
    let req = SolveRequest { spec: parse(poly_heat), j_max: 40, d_out: 8 };
    let sol = solve::<Exact>(&req, ()).expect("solves");
    let est = estimate_gevrey::<Exact>(&sol.u, &rat(1, 2), None).expect("estimates");
    assert!(est.degenerate, "polynomial data must be flagged degenerate");
    assert_eq!(est.sigma_hat, 0.0);

    budget(t0, 10, "heat estimator");
    println!("ACCEPTANCE 3: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 4. Sharpness counterexample: estimate near sigma_c, probes refuted.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_counterexample_growth() {
    let t0 = Instant::now();

    let template = parse(&fixture("burgers.eq"));
    let ce = build_counterexample(&template).expect("template qualifies");
    assert_eq!(ce.sigma_c, rat(1, 1));

    let req = SolveRequest { spec: ce.spec.clone(), j_max: 40, d_out: 120 };
    let sol = solve::<Exact>(&req, ()).expect("solves");

    let est = estimate_gevrey::<Exact>(&sol.u, &rat(1, 2), None).expect("estimates");
    let sigma_c = ce.sigma_c.to_f64();
    assert!(
        (est.sigma_hat - sigma_c).abs() <= 0.15,
        "estimate {} should sit within 0.15 of sigma_c = {sigma_c}",
        est.sigma_hat
    );

    let probes = [rat(9, 10), rat(1, 2)];
    let lb = check_lower_bound::<Exact>(&sol.u, ce.spec.kappa, &ce.kstar_data(), &probes, None)
        .expect("lower bound check runs");
    assert_eq!(lb.violations.len(), probes.len());
    for v in &lb.violations {
        assert!(
            v.detected,
            "growth at sigma' = {} must refute the smaller Gevrey class",
            v.sigma_prime
        );
    }

    budget(t0, 60, "counterexample growth");
    println!("ACCEPTANCE 4: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 5. Norm inequality suite: zero failures over 200 exact trials.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_5_norm_suite() {
    let t0 = Instant::now();

    let report = check_norm_properties(0x5EED_0005, 200).expect("suite runs");
    assert!(report.all_passed);
    assert_eq!(report.properties.len(), 6);
    for p in &report.properties {
        assert_eq!(p.trials, 200, "{}", p.name);
        assert_eq!(p.failures, 0, "{}: {:?}", p.name, p.witness);
    }

    budget(t0, 60, "norm suite");
    println!("ACCEPTANCE 5: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 6. Majorant domination for the two worked parabolic examples.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_6_majorant_domination() {
    let t0 = Instant::now();

    for name in ["heat.eq", "burgers.eq"] {
        let spec = parse(&fixture(name));
        let sigma = polygon::build(&spec).unwrap().sigma_c;
        let req = SolveRequest { spec: spec.clone(), j_max: 20, d_out: 24 };
        let sol = solve::<Exact>(&req, ()).expect("solves");
        let report =
            check_majorant::<Exact>(&sol, &spec, &sigma, &rat(1, 2), ()).expect("majorant runs");
        assert!(report.dominated, "{name}: N_j must stay below the majorant");
        assert!(report.c_star >= 1);
        assert_eq!(report.entries.len(), 21);
        for e in &report.entries {
            assert!(
                e.n_j <= e.v_j * (1.0 + 1e-9),
                "{name}: order {} has N_j = {} above v_j = {}",
                e.j,
                e.n_j,
                e.v_j
            );
        }
    }

    budget(t0, 60, "majorant domination");
    println!("ACCEPTANCE 6: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 7. Factorial product lemma and the gamma ratio envelope.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_lemma_and_envelope() {
    let t0 = Instant::now();

    for j in 0..=12 {
        for v in 1..=4 {
            for a in 0..=4 {
                let (lhs, rhs) = technical_product_lower_bound(j, v, a);
                assert!(lhs >= rhs, "product bound fails at j={j}, v={v}, a={a}");
            }
        }
    }

    for (num, den) in [(1u64, 1u64), (3, 2), (2, 1), (3, 1)] {
        let s = Rational::from((num, den));
        let m = MomentSequence::gamma(s.clone()).unwrap();
        let (lo, hi) = m.regularity_bounds_f64(10_000).unwrap();
        let (env_lo, env_hi) = envelope_f64(s.to_f64());
        assert!(
            lo >= env_lo * (1.0 - 1e-9) && hi <= env_hi * (1.0 + 1e-9),
            "gamma({num}/{den}) ratios [{lo}, {hi}] escape the envelope [{env_lo}, {env_hi}]"
        );
    }

    budget(t0, 5, "lemma and envelope");
    println!("ACCEPTANCE 7: PASS ({:.2?})", t0.elapsed());
}

// ---------------------------------------------------------------------------
// 8. Golden corpus: DSL round-trip and polygon agreement.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_golden_corpus_round_trip() {
    let t0 = Instant::now();

    let expectations = [
        ("heat.eq", rat(1, 1)),
        ("boussinesq.eq", rat(1, 1)),
        ("burgers.eq", rat(1, 1)),
        ("kdv.eq", rat(2, 1)),
        ("grmbkdv.eq", rat(1, 1)),
    ];
    for (name, sigma_c) in expectations {
        let text = fixture(name);
        let spec = parse(&text);
        let printed = eqdsl::print(&spec).expect("prints");
        let reparsed = eqdsl::parse(&printed)
            .unwrap_or_else(|e| panic!("{name}: printed form fails to parse: {e}"));
        assert_eq!(spec, reparsed, "{name}: round trip changed the spec");
        assert_eq!(
            polygon::build(&spec).unwrap().sigma_c,
            sigma_c,
            "{name}: critical value drifted"
        );
    }

    budget(t0, 1, "golden corpus");
    println!("ACCEPTANCE 8: PASS ({:.2?})", t0.elapsed());
}

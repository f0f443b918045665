use epi_lab::ineq::{self, CheckContext, ReportKind, Verdict};
use epi_lab::Distribution1D;

const HALF_LOG_1_25: f64 = 0.111_571_775_657_104_88;
const MI_1_4: f64 = 0.223_143_551_314_209_76;

fn ctx() -> CheckContext {
    CheckContext::default()
}

fn gauss(v: f64) -> Distribution1D {
    Distribution1D::gaussian(v).unwrap()
}

fn laplace() -> Distribution1D {
    Distribution1D::laplace(1.0).unwrap()
}

fn logistic() -> Distribution1D {
    Distribution1D::logistic(1.0).unwrap()
}

fn bimodal() -> Distribution1D {
    Distribution1D::mixture(&[0.5, 0.5], &[-1.5, 1.5], &[0.6, 0.6]).unwrap()
}

fn family() -> Vec<Distribution1D> {
    vec![gauss(1.0), laplace(), logistic(), bimodal()]
}

fn lambdas() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[test]
fn shannon_examples() {
    let r = ineq::epi_shannon(&gauss(1.0), &gauss(4.0), &ctx()).unwrap();
    assert!(r.gap.abs() < 1e-5);
    assert_eq!(r.verdict, Verdict::Equality);

    let r = ineq::epi_shannon(&laplace(), &laplace(), &ctx()).unwrap();
    assert!((r.rhs - 3.461_023_917_729_060_4).abs() < 1e-12);
    // mpmath oracle: N_laplace_sum, shannon_gap_laplace
    assert!((r.lhs - 3.812_801_777_317_693).abs() < 1e-5);
    assert!((r.gap - 0.351_777_859_588_632_64).abs() < 1e-5);
    assert_eq!(r.verdict, Verdict::Holds);

    let a = 1.7f64;
    let s = ineq::epi_shannon(
        &Distribution1D::laplace(a).unwrap(),
        &Distribution1D::laplace(a).unwrap(),
        &ctx(),
    )
    .unwrap();
    for (scaled, base) in [(s.lhs, r.lhs), (s.rhs, r.rhs), (s.gap, r.gap)] {
        assert!((scaled / (a * a * base) - 1.0).abs() < 1e-4);
    }
}

#[test]
fn lieb_examples() {
    let r = ineq::epi_lieb(&gauss(1.0), &gauss(1.0), 0.3, &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Equality);
    assert!(r.gap.abs() < 1e-6);
    let r = ineq::epi_lieb(&gauss(1.0), &gauss(4.0), 0.5, &ctx()).unwrap();
    assert!((r.gap - HALF_LOG_1_25).abs() < 1e-9);
    let r = ineq::epi_lieb(&laplace(), &laplace(), 0.5, &ctx()).unwrap();
    // mpmath oracle: lieb_gap_laplace_half
    assert!((r.gap - 0.048_399_909_118_375_618).abs() < 2e-6);
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn power_concavity_examples() {
    let r = ineq::epi_power_concavity(&gauss(2.0), &gauss(2.0), 0.4, &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Equality);
    let r = ineq::epi_power_concavity(&gauss(1.0), &gauss(4.0), 0.5, &ctx()).unwrap();
    assert!((r.lhs - 2.5).abs() < 1e-12 && (r.rhs - 2.5).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Equality);
    let r = ineq::epi_power_concavity(&laplace(), &laplace(), 0.5, &ctx()).unwrap();
    // mpmath oracle: power_conc_gap_laplace_half
    assert!((r.gap - 0.175_888_929_794_316_32).abs() < 1e-5);
}

#[test]
fn reverse_examples() {
    let r = ineq::reverse_epi(&gauss(1.0), &gauss(1.0), 0.7, &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Equality);
    let r = ineq::reverse_epi(&gauss(1.0), &gauss(4.0), 0.5, &ctx()).unwrap();
    // mpmath oracle: reverse_lhs_1_4, reverse_rhs_1_4
    assert!((r.lhs - 1.653_940_347_827_540_5).abs() < 1e-9);
    assert!((r.rhs - 1.765_512_123_484_645_4).abs() < 1e-9);
    assert!((r.gap - 0.111_571_6).abs() < 1e-5);
    let r = ineq::reverse_epi(&laplace(), &laplace(), 0.5, &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn deficit_examples() {
    let c = ineq::deficit_sandwich(&gauss(1.0), &gauss(1.0), 0.2, &ctx()).unwrap();
    assert_eq!(c.verdict(), Verdict::Equality);
    let c = ineq::deficit_sandwich(&gauss(1.0), &gauss(4.0), 0.5, &ctx()).unwrap();
    let lower = c.step("deficit_nonnegative").unwrap();
    let upper = c.step("deficit_below_mutual_information").unwrap();
    assert!((lower.lhs - HALF_LOG_1_25).abs() < 1e-9);
    assert!((upper.rhs - MI_1_4).abs() < 1e-9);
    assert_eq!(c.verdict(), Verdict::Holds);
    for l in lambdas() {
        let c = ineq::deficit_sandwich(&laplace(), &laplace(), l, &ctx()).unwrap();
        assert_eq!(c.verdict(), Verdict::Holds, "lambda {l}");
        assert!((c.total_gap - c.steps.iter().map(|s| s.gap).sum::<f64>()).abs() < 1e-12);
    }
}

#[test]
fn proof_chain_examples() {
    for l in lambdas() {
        let c = ineq::proof_chain(&gauss(1.0), &gauss(1.0), l, &ctx()).unwrap();
        for s in c.rows() {
            assert!(s.gap.abs() < 1e-6, "{}: {}", s.name, s.gap);
        }
        assert_eq!(c.verdict(), Verdict::Equality);
    }

    let c = ineq::proof_chain(&gauss(4.0), &gauss(1.0), 0.5, &ctx()).unwrap();
    assert!((c.step("jensen").unwrap().gap - 0.058_891_517_828_191_727).abs() < 1e-12);
    // mpmath oracle: cond_gap_lin_4_1
    assert!((c.step("conditioning").unwrap().gap - 0.052_680_257_828_913_151).abs() < 1e-9);
    assert!((c.total_gap - HALF_LOG_1_25).abs() < 1e-6);

    let c = ineq::proof_chain(&laplace(), &laplace(), 0.5, &ctx()).unwrap();
    // mpmath oracles: jensen_lap_pair_half, cond_gap_lap_pair_half
    assert!((c.step("jensen").unwrap().gap - 0.025_018_355_449_980_628).abs() < 1e-8);
    assert!((c.step("conditioning").unwrap().gap - 0.023_381_553_668_394_989).abs() < 2e-6);
    for s in &c.steps {
        assert!(s.gap >= -1e-6);
    }
    assert!(c.closure.as_ref().unwrap().gap.abs() < 1e-4);

    let c = ineq::proof_chain(&gauss(1.0), &bimodal(), 0.5, &ctx()).unwrap();
    // mpmath oracle: jensen_gauss_bimodal_half
    let j = c.step("jensen").unwrap();
    assert!(
        (j.gap - 0.044_786_755_341_493_59).abs() < 1e-8,
        "{} err {}",
        j.gap,
        j.err
    );
    assert!(c.closure.as_ref().unwrap().gap.abs() < 1e-5);
}

#[test]
fn proof_chain_names_failing_step() {
    let err = ineq::proof_chain(&gauss(1.0), &gauss(1.0), 1.0, &ctx()).unwrap_err();
    assert!(err.to_string().contains("lambda"));
}

#[test]
fn equality_diagnostics_examples() {
    let c = ineq::equality_diagnostics(&gauss(1.0), &gauss(1.0), 0.5, &ctx()).unwrap();
    assert_eq!(c.notes["equality_regime"], serde_json::json!(true));
    let c = ineq::equality_diagnostics(&gauss(1.0), &gauss(4.0), 0.5, &ctx()).unwrap();
    assert_eq!(c.notes["equality_regime"], serde_json::json!(false));
    assert!(c.step("t_prime_deviation").unwrap().gap < 1e-9);
    assert!((c.step("derivative_mismatch").unwrap().gap - 1.0).abs() < 1e-9);
    assert!(c.step("epi_lieb").unwrap().gap > 0.1);
    let c = ineq::equality_diagnostics(&laplace(), &laplace(), 0.5, &ctx()).unwrap();
    assert!(c.step("t_prime_deviation").unwrap().gap > 0.1);
    assert_eq!(c.notes["equality_regime"], serde_json::json!(false));
}

#[test]
fn reverse_equivalence_examples() {
    let c = ineq::reverse_equivalence(&gauss(1.0), &gauss(4.0), 0.5, &ctx()).unwrap();
    for s in &c.steps {
        assert!((s.gap - 0.111_571_6).abs() < 1e-5);
    }
    let a = ineq::reverse_equivalence(&laplace(), &logistic(), 0.3, &ctx()).unwrap();
    let b = ineq::reverse_equivalence(&logistic(), &laplace(), 0.7, &ctx()).unwrap();
    assert!((a.steps[0].gap - b.steps[0].gap).abs() < 1e-12);
    let c = ineq::reverse_equivalence(&laplace(), &laplace(), 0.4, &ctx()).unwrap();
    assert!(c.closure.as_ref().unwrap().gap.abs() < 1e-5);
}

#[test]
fn zamir_feder_examples() {
    let dists = vec![laplace(), logistic(), gauss(2.0)];
    let r = ineq::zamir_feder(&[1.0, 0.0, 0.0], &dists, &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Equality);
    let t = (1.0f64 / 3.0).sqrt();
    let r = ineq::zamir_feder(&[t, t, t], &[laplace(), laplace(), laplace()], &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(ineq::zamir_feder(&[0.5, 0.5, 0.5], &dists, &ctx()).is_err());
}

#[test]
fn renyi_examples() {
    let (p, q) = ineq::renyi_exponents(0.5, 2.0).unwrap();
    assert!((p - 4.0 / 3.0).abs() < 1e-14 && (q - 4.0 / 3.0).abs() < 1e-14);
    let (p, q) = ineq::renyi_exponents(0.3, 2.0 / 3.0).unwrap();
    assert!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0);
    assert!(ineq::renyi_exponents(0.5, 1.0).is_err());

    for l in [0.2, 0.5] {
        for r in [2.0, 2.0 / 3.0] {
            let g = ineq::renyi_epi(&gauss(1.0), &gauss(1.0), l, r, &ctx()).unwrap();
            assert!(g.gap.abs() < 1e-12);
            assert_eq!(g.verdict, Verdict::Equality);
        }
    }
    let r = ineq::renyi_epi(&laplace(), &laplace(), 0.5, 2.0, &ctx()).unwrap();
    // mpmath oracle: renyi_epi_gap_laplace_half_r2
    assert!(
        (r.gap - 0.038_480_520_568_064_162).abs() < 5e-6,
        "{}",
        r.gap
    );
    assert_eq!(r.verdict, Verdict::Holds);
}

#[test]
fn renyi_continuity_near_one() {
    for (x, y) in [(gauss(1.0), gauss(4.0)), (laplace(), laplace())] {
        let lieb = ineq::epi_lieb(&x, &y, 0.5, &ctx()).unwrap().gap;
        for r in [0.99, 1.01] {
            let g = ineq::renyi_epi(&x, &y, 0.5, r, &ctx()).unwrap().gap;
            assert!((g - lieb).abs() < 0.02, "r={r}: {g} vs {lieb}");
        }
    }
}

#[test]
fn young_examples() {
    let r = ineq::young_check(&gauss(1.0), &gauss(1.0), 4.0 / 3.0, 4.0 / 3.0, 2.0, &ctx()).unwrap();
    // mpmath oracle: young_fwd_gauss
    assert!((r.lhs - 0.446_621_920_869_001_14).abs() < 1e-8);
    assert_eq!(r.verdict, Verdict::Equality);
    let r = ineq::young_check(&gauss(1.0), &gauss(1.0), 0.8, 0.8, 2.0 / 3.0, &ctx()).unwrap();
    // mpmath oracle: young_rev_gauss
    assert!((r.lhs - 2.239_030_269_840_495_3).abs() < 1e-7);
    assert!(r.gap >= -1e-5);
    let r = ineq::young_check(&laplace(), &logistic(), 4.0 / 3.0, 4.0 / 3.0, 2.0, &ctx()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(ineq::young_check(&laplace(), &laplace(), 1.5, 1.5, 2.0, &ctx()).is_err());
    assert!(ineq::young_check(&laplace(), &laplace(), 0.8, 1.5, 2.0, &ctx()).is_err());
}

#[test]
fn transport_checks() {
    for t in family().into_iter().skip(1).chain([gauss(4.0)]) {
        let r = ineq::change_of_variable(&t, &ctx()).unwrap();
        assert_eq!(r.kind, ReportKind::Identity);
        assert!(r.gap.abs() < 1e-6, "{t}: {}", r.gap);
        let c = ineq::transport_pushforward(&t, &ctx().with_seed(11)).unwrap();
        assert_ne!(c.verdict(), Verdict::Violated, "{t}: {c:?}");
    }
}

#[test]
fn gaussian_matrix_cells() {
    for dim in [1, 2, 3, 5] {
        for seed in 0..5 {
            let c = ineq::gaussian_matrix(dim, seed, &ctx()).unwrap();
            assert!(!c.verdict().is_violation(), "{c:?}");
        }
    }
}

#[test]
fn full_sweep_properties() {
    let fam = family();
    let mut cells = 0;
    for x in &fam {
        for y in &fam {
            for l in lambdas() {
                let c = ineq::proof_chain(x, y, l, &ctx()).unwrap();
                for s in &c.steps {
                    assert!(s.gap >= -1e-6, "{x} {y} {l}: {} = {}", s.name, s.gap);
                }
                assert!(c.closure.as_ref().unwrap().gap.abs() < 1e-4, "{x} {y} {l}");
                assert!(!c.verdict().is_violation(), "{c:?}");
                let e = ineq::reverse_equivalence(x, y, l, &ctx()).unwrap();
                assert!(e.closure.as_ref().unwrap().gap.abs() < 1e-5);
                let d = ineq::deficit_sandwich(x, y, l, &ctx()).unwrap();
                assert!(d.steps.iter().all(|s| s.gap >= -(s.err + 1e-9)), "{d:?}");
                cells += 1;
            }
        }
    }
    assert_eq!(cells, 144);
}

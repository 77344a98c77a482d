//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{harmonic, ints, oeis_dir, rel, spec, spec_path};
use eulerlaw::analytic::{named_rho_entries, quasi_power_params, rho_catalog, shifted_entry, RhoEntry};
use eulerlaw::classify::{classify, normal_params, LimitLaw};
use eulerlaw::cli::{cmd_oeis, RunConfig};
use eulerlaw::expr::BiPoly;
use eulerlaw::moments::{
    central_moment_recurrence, factorial_moment_recurrence, mean_closed_form, mean_recurrence, moments_of_row,
    MeanParams, MeanValue,
};
use eulerlaw::oeis::{known_layout, load_fixture, match_triangle};
use eulerlaw::poly::Poly;
use eulerlaw::rational::{rat, ri, to_f64, Rational};
use eulerlaw::recurrence::{
    canonicalize, catalog_spec, generate_rows, ClassSpec, FamilyId, RecurrenceSpec, RowGenerator,
};
use eulerlaw::special::gamma;
use eulerlaw::verify::{ks_distance, rate_fit, row_pmf, scaled_moments_nn};

type Outcome = Result<String, String>;
/// Name, check and time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn eulerian() -> RecurrenceSpec {
    catalog_spec(FamilyId::A, &[ri(1), ri(1), ri(1)]).unwrap().spec
}

fn normal_of(law: &LimitLaw) -> Option<(Rational, Rational)> {
    match law {
        LimitLaw::Normal { mu, sigma2, .. } => Some((mu.clone(), sigma2.clone())),
        _ => None,
    }
}

/// Largest relative error of `E (X_n / n^tau)^m`, `1 <= m <= order`, against `template`.
fn scaled_errors(name: &str, n: i64, tau: f64, order: usize, template: impl Fn(usize) -> f64) -> Vec<f64> {
    let s = spec(name);
    let cf = canonicalize(&s);
    let nn = cf.nn_params().expect("canonical form");
    let got = scaled_moments_nn(&nn, cf.start, &cf.initial, n, tau).unwrap();
    (1..=order).map(|m| rel(got[m], template(m))).collect()
}

fn criterion1() -> Outcome {
    let table = [
        vec![1],
        vec![1],
        vec![1, 1],
        vec![1, 4, 1],
        vec![1, 11, 11, 1],
        vec![1, 26, 66, 26, 1],
        vec![1, 57, 302, 302, 57, 1],
    ];
    let rows = generate_rows(&eulerian(), 25).unwrap();
    for (n, want) in table.iter().enumerate() {
        check(ints(&rows[n]) == *want, format!("row {n} = {:?}", ints(&rows[n])))?;
    }
    for id in ["A008292", "A173018"] {
        let layout = known_layout(id).unwrap();
        let mut bfile = load_fixture(&oeis_dir(), id).unwrap();
        let keep: usize = (layout.first_row..=25).map(|n| layout.row_entries(n, &rows[n as usize]).len()).sum();
        bfile.entries.truncate(keep);
        let m = match_triangle(id, &rows, 0, &bfile, &layout);
        check(m.is_full() && m.entries_matched == keep, format!("{id}: {}", m.to_json()))?;
    }
    let r = generate_rows(&spec("a008971"), 5).unwrap();
    check(ints(&r[5]) == [1, 58, 61], format!("A008971 row 5 = {:?}", ints(&r[5])))?;
    Ok("Eulerian rows n <= 6, A008292/A173018 to n = 25, A008971 row 5".into())
}

fn criterion2() -> Outcome {
    let rows = generate_rows(&eulerian(), 200).unwrap();
    for n in 2..=200i64 {
        let s = moments_of_row(n, &rows[n as usize], 2).unwrap();
        check(s.mean == rat(n - 1, 2) && s.variance == rat(n + 1, 12), format!("Eulerian n = {n}"))?;
    }
    let alt = spec("a244312");
    let rows = generate_rows(&alt, 60).unwrap();
    for n in 1..=60i64 {
        let s = moments_of_row(n, &rows[(n - alt.start) as usize], 1).unwrap();
        let want = if n % 2 == 0 { rat(n * n, 2 * (n - 1)) } else { rat(n + 1, 2) };
        check(s.mean == want, format!("A244312 n = {n}: {} vs {want}", s.mean))?;
    }
    Ok("exact for 2 <= n <= 200 and n <= 60".into())
}

fn random_poly(rng: &mut StdRng, lo: i64, hi: i64) -> Poly {
    Poly::from_ints((0..3).map(|_| rng.gen_range(lo..=hi)))
}

fn criterion3() -> Outcome {
    const UPTO: i64 = 60;
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let one_minus_v = Poly::from_ints([1, -1]);
    let mut accepted = 0;
    let mut tries = 0;
    while accepted < 50 {
        tries += 1;
        check(tries < 100_000, "could not sample 50 specs")?;
        let (alpha, beta, gamma) = (random_poly(&mut rng, 0, 3), random_poly(&mut rng, 0, 3), random_poly(&mut rng, -2, 3));
        if alpha.eval_one() <= ri(0) || beta.eval_one() <= ri(0) {
            continue;
        }
        let a = BiPoly::from_n_coeffs(&[gamma.clone(), alpha.clone()]);
        let b = BiPoly::from_v_poly(&(&beta * &one_minus_v));
        let s = RecurrenceSpec::single("random", 0, ClassSpec::simple(a, b), Poly::one());
        let Ok(rows) = generate_rows(&s, UPTO) else { continue };
        if rows.iter().any(|r| !r.has_nonnegative_coeffs() || r.eval_one() <= ri(0)) {
            continue;
        }
        accepted += 1;
        let cf = canonicalize(&s);
        let means = mean_recurrence(&cf, UPTO).map_err(|e| e.to_string())?;
        let central = central_moment_recurrence(&cf, 4, UPTO).map_err(|e| e.to_string())?;
        let mp = MeanParams::from_canonical(&cf).map_err(|e| e.to_string())?;
        let label = format!("alpha = {alpha:?}, beta = {beta:?}, gamma = {gamma:?}");
        for n in 0..=UPTO {
            let row = moments_of_row(n, &rows[n as usize], 4).unwrap();
            let i = n as usize;
            check(means[i] == row.mean, format!("{label}: mean recurrence at n = {n}"))?;
            check(central[i][..5] == row.central[..5], format!("{label}: central moments at n = {n}"))?;
            match mean_closed_form(&mp, n).map_err(|e| e.to_string())? {
                MeanValue::Exact(m) => check(m == row.mean, format!("{label}: closed form at n = {n}"))?,
                MeanValue::Approx(x) => return Err(format!("{label}: closed form not exact ({x})")),
            }
        }
    }
    Ok(format!("50 specs ({tries} draws), n <= {UPTO}"))
}

fn criterion4() -> Outcome {
    let triples = [(1, 1, 1), (0, 1, 1), (1, 1, 2), (2, 1, 2), (1, 2, 1), (2, 2, 1), (0, 2, 3), (3, 1, 3), (1, 3, 2), (4, 2, 2)];
    for (p, q, r) in triples {
        let e = catalog_spec(FamilyId::A, &[ri(p), ri(q), ri(r)]).map_err(|e| e.to_string())?;
        let (law, _) = classify(&e.spec);
        check(normal_of(&law) == Some((rat(1, 2), rat(1, 12))), format!("A({p},{q},{r}) -> {law:?}"))?;
    }
    let t = catalog_spec(FamilyId::T, &[ri(0), ri(2), ri(1)]).map_err(|e| e.to_string())?;
    let cases: Vec<(String, RecurrenceSpec, (Rational, Rational))> = vec![
        ("T(0,2,1)".into(), t.spec, (rat(2, 3), rat(1, 9))),
        ("a008971".into(), spec("a008971"), (rat(1, 3), rat(2, 45))),
        ("a162976".into(), spec("a162976"), (rat(1, 6), rat(23, 180))),
        ("tree_tableaux".into(), spec("tree_tableaux"), (rat(3, 4), rat(7, 48))),
        ("a158781".into(), spec("a158781"), (ri(1), rat(1, 3))),
    ];
    for (name, s, want) in cases {
        let (law, _) = classify(&s);
        check(normal_of(&law) == Some(want.clone()), format!("{name} -> {law:?}, want {want:?}"))?;
    }
    Ok("10 A(p,q,r) triples and 5 named specs".into())
}

fn criterion5() -> Outcome {
    let mut entries: Vec<RhoEntry> = named_rho_entries();
    let fam = |f: FamilyId, ps: &[Rational]| rho_catalog(f, ps).map_err(|e| format!("{f:?}{ps:?}: {e}"));
    entries.push(fam(FamilyId::A, &[ri(1), ri(1), ri(1)])?);
    entries.push(fam(FamilyId::A, &[ri(2), ri(3), ri(1)])?);
    entries.push(fam(FamilyId::T, &[ri(0), ri(2), ri(1)])?);
    entries.push(fam(FamilyId::T, &[ri(1), ri(3), ri(2)])?);
    entries.push(fam(FamilyId::Q, &[ri(1), ri(1)])?);
    entries.push(fam(FamilyId::Q, &[ri(2), rat(1, 2)])?);
    entries.push(fam(FamilyId::M, &[ri(1), ri(2), ri(1)])?);
    entries.push(fam(FamilyId::M, &[ri(0), ri(3), ri(2)])?);
    entries.push(shifted_entry(&ri(1), &ri(2)).map_err(|e| e.to_string())?);
    entries.push(shifted_entry(&ri(0), &ri(1)).map_err(|e| e.to_string())?);
    let mut worst: f64 = 0.0;
    for e in &entries {
        let (mu, s2) = normal_params(&e.alpha, &e.beta).map_err(|err| format!("{}: {err}", e.label))?;
        let q = quasi_power_params(e).map_err(|err| format!("{}: {err}", e.label))?;
        let d = (q.mu - to_f64(&mu)).abs().max((q.sigma2 - to_f64(&s2)).abs());
        worst = worst.max(d);
        check(d < 1e-7, format!("{}: analytic ({}, {}) vs ({mu}, {s2})", e.label, q.mu, q.sigma2))?;
    }
    Ok(format!("{} entries, max deviation {worst:.1e}", entries.len()))
}

fn factorial_at(name: &str, n: i64, order: usize) -> Vec<f64> {
    let s = spec(name);
    let cf = canonicalize(&s);
    let nn = cf.nn_params().expect("canonical form");
    factorial_moment_recurrence::<f64>(&nn, cf.start, &cf.initial, order, n, false).unwrap().remove(0)
}

fn criterion6() -> Outcome {
    let q = factorial_at("a008290", 500, 4);
    let e1: f64 = (1..=4).map(|m| rel(q[m], 1.0)).fold(0.0, f64::max);
    check(e1 < 0.01, format!("A008290 Q = {:?}", &q[1..]))?;
    let q = factorial_at("a065600", 2000, 3);
    let target = |m: usize| gamma(m as f64 + 2.0) * 0.5f64.powi(m as i32);
    let e2: f64 = (1..=3).map(|m| rel(q[m], target(m))).fold(0.0, f64::max);
    check(e2 < 0.02, format!("A065600 Q = {:?}", &q[1..]))?;
    Ok(format!("max errors {e1:.1e} (Poisson), {e2:.1e} (negative binomial)"))
}

fn criterion7() -> Outcome {
    let beta22 = |m: usize| gamma(4.0) * gamma(m as f64 + 2.0) / (gamma(2.0) * gamma(m as f64 + 4.0));
    let errs = scaled_errors("a091441", 400, 1.0, 4, beta22);
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    check(worst < 0.01, format!("A091441 errors {errs:?}"))?;
    let a = BiPoly::from_terms([(1, 0, ri(1)), (0, 0, ri(1)), (0, 1, ri(2))]);
    let b = BiPoly::from_terms([(0, 1, ri(-1)), (0, 2, ri(1))]);
    let s = RecurrenceSpec::single("beta_rr", 0, ClassSpec::simple(a, b), Poly::from_ints([1, 1]));
    match classify(&s).0 {
        LimitLaw::BetaMixture { components } => {
            let w: Vec<Rational> = components.iter().map(|c| c.weight.clone()).collect();
            check(w == [rat(1, 2), rat(1, 2)], format!("weights {w:?}"))?;
        }
        other => return Err(format!("h0 = h1 = 1 gave {other:?}")),
    }
    Ok(format!("Beta(2,2) max error {worst:.2e}; mixture weights (1/2, 1/2)"))
}

fn criterion8() -> Outcome {
    // Rayleigh(sigma = 1/sqrt 2): E R^m = (sigma sqrt 2)^m Gamma(1 + m/2)
    let rayleigh = |m: usize| gamma(1.0 + m as f64 / 2.0);
    // Half-normal(sigma = sqrt 2): E |Z|^m = sigma^m 2^(m/2) Gamma((m+1)/2) / sqrt(pi)
    let half_normal = |m: usize| 2f64.powi(m as i32) * gamma((m as f64 + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    let r = scaled_errors("a039598", 2000, 0.5, 4, rayleigh);
    let h = scaled_errors("a193229", 2000, 0.5, 4, half_normal);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{:.2}%", 100.0 * x)).collect::<Vec<_>>().join(" ");
    let detail = format!("Rayleigh m<=4: {}; half-normal m<=4: {}", fmt(&r), fmt(&h));
    check(r.iter().chain(&h).all(|&e| e < 0.03), detail.clone())?;
    Ok(detail)
}

fn criterion9() -> Outcome {
    let ml = |m: usize| gamma(0.25) * gamma(m as f64 + 1.0) / (2f64.powi(m as i32) * gamma((m as f64 + 1.0) / 4.0));
    let errs = scaled_errors("a202550", 5000, 0.25, 3, ml);
    let detail = format!("m<=3 errors {}", errs.iter().map(|x| format!("{:.2}%", 100.0 * x)).collect::<Vec<_>>().join(" "));
    check(errs.iter().all(|&e| e < 0.10), detail.clone())?;
    Ok(detail)
}

fn criterion10() -> Outcome {
    let (law, _) = classify(&spec("pascal"));
    check(normal_of(&law) == Some((rat(1, 2), rat(1, 4))), format!("pascal -> {law:?}"))?;
    let s = spec("stirling_cycle");
    let (law, _) = classify(&s);
    check(
        matches!(law, LimitLaw::Normal { mean_scale: eulerlaw::classify::Scale::Log, var_scale: eulerlaw::classify::Scale::Log, .. }),
        format!("stirling_cycle -> {law:?}"),
    )?;
    let rows = generate_rows(&s, 200).unwrap();
    for n in 1..=200i64 {
        let m = moments_of_row(n, &rows[n as usize], 1).unwrap().mean;
        check(m == harmonic(n), format!("stirling_cycle mean at n = {n}"))?;
    }
    let (law, _) = classify(&spec("trinomial"));
    check(normal_of(&law) == Some((ri(1), rat(2, 3))), format!("trinomial -> {law:?}"))?;
    Ok("Pascal (1/2, 1/4); harmonic means to n = 200; trinomial (1, 2/3)".into())
}

fn criterion11() -> Outcome {
    let ns = [100i64, 200, 400, 800, 1600];
    let mut gen = RowGenerator::new(&eulerian()).unwrap();
    let mut points = Vec::new();
    loop {
        let (n, row) = gen.next_row().unwrap();
        if ns.contains(&n) {
            let mean = (n - 1) as f64 / 2.0;
            let sd = ((n + 1) as f64 / 12.0).sqrt();
            points.push((n, ks_distance(&row_pmf(&row), mean, sd)));
        }
        if n == 1600 {
            break;
        }
    }
    let slope = rate_fit(&points).map_err(|e| e.to_string())?;
    check((-0.65..=-0.35).contains(&slope), format!("slope {slope}"))?;
    Ok(format!("slope {slope:.3}"))
}

fn criterion12() -> Outcome {
    let cases = [
        ("A008292", "eulerian"),
        ("A060187", "a060187"),
        ("A008517", "a008517"),
        ("A008290", "a008290"),
        ("A039598", "a039598"),
        ("A193229", "a193229"),
        ("A065600", "a065600"),
        ("A091441", "a091441"),
        ("A202550", "a202550"),
        ("A244312", "a244312"),
    ];
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (id, name) in cases {
        let mut cfg = RunConfig::for_spec(spec_path(name));
        cfg.id = Some(id.into());
        cfg.offline = true;
        cfg.fixtures = Some(oeis_dir());
        cfg.cache = cache.path().to_path_buf();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cmd_oeis(&cfg, &mut out, &mut err);
        check(code == 0, format!("{id}: exit {code}: {}{}", String::from_utf8_lossy(&out), String::from_utf8_lossy(&err)))?;
    }
    Ok("10 A-numbers, offline".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("exact triangle fixtures", criterion1, 1),
        ("exact moment formulas", criterion2, 5),
        ("oracle equivalence", criterion3, 60),
        ("normal classification", criterion4, 1),
        ("analytic cross-check", criterion5, 10),
        ("discrete laws", criterion6, 120),
        ("Beta laws", criterion7, 60),
        ("Rayleigh / half-normal", criterion8, 180),
        ("Mittag-Leffler", criterion9, 300),
        ("beta = 0 regimes", criterion10, 5),
        ("convergence rate", criterion11, 120),
        ("OEIS validation", criterion12, 30),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let dt = t.elapsed();
        let res = match res {
            Ok(d) if dt > Duration::from_secs(*budget) => Err(format!("{d}; took {dt:.1?}, budget {budget} s")),
            r => r,
        };
        match res {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{dt:.2?}]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{dt:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use qsteiner::counting::necessary_conditions;
use qsteiner::designs::*;
use qsteiner::equations::*;
use qsteiner::{count_c, count_d, count_n, enumerate_subspaces, gaussian, Field, Subspace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn rat(x: BigInt) -> Rational {
    Rational::from_integer(x)
}

fn c1_formula_vs_oracle() -> Outcome {
    let mut checked = 0u64;
    for q in [2u32, 3] {
        let f = Field::new(q).unwrap();
        for n in 2..=7usize {
            for t in 1..=4.min(n) {
                let hist = common::puncture_histograms(q, t, n);
                for m in 1..n {
                    let p = n - m;
                    for s in t.saturating_sub(p)..=t.min(m) {
                        let want = count_n(s as u32, m as u32, t as u32, n as u32, q).unwrap();
                        let mut seen = 0u64;
                        for x in enumerate_subspaces(f, m, s).unwrap() {
                            let got = hist[&m].get(&x).copied().unwrap_or(0);
                            ensure!(big(got) == want, "N q={q} s={s} m={m} t={t} n={n}: oracle {got}, formula {want}");
                            seen += 1;
                        }
                        checked += seen;
                    }
                }
            }
        }
        for k in 2..=4usize {
            for t in 1..k {
                for s in 0..=t {
                    for r in s..=(k - t + s).min(k) {
                        let want = count_c(s as u32, t as u32, r as u32, k as u32, q).unwrap();
                        let m = r + 1;
                        let xs: Vec<Subspace> = enumerate_subspaces(f, m, s).unwrap().collect();
                        let ys: Vec<Subspace> = enumerate_subspaces(f, m, r).unwrap().collect();
                        for x in [xs.first().unwrap(), xs.last().unwrap()] {
                            let y = ys.iter().find(|y| y.contains(x).unwrap()).unwrap();
                            // two different k-dimensional witnesses over Y
                            let mut direct = y.clone();
                            let mut shifted = y.extensions_same_dim().unwrap().pop().unwrap();
                            for _ in r..k {
                                direct = direct.extension_raise_dim().unwrap();
                                shifted = shifted.extension_raise_dim().unwrap();
                            }
                            for w in [&direct, &shifted] {
                                let got = common::covered_within(w, x, t);
                                ensure!(big(got) == want, "C q={q} s={s} t={t} r={r} k={k}: oracle {got}, formula {want}");
                                checked += 1;
                            }
                        }
                    }
                }
            }
        }
        for m in 1..=6usize {
            for r in 0..=m.min(4) {
                for s in 0..=r {
                    let want = count_d(s as u32, r as u32, m as u32, q).unwrap();
                    let xs: Vec<Subspace> = enumerate_subspaces(f, m, s).unwrap().collect();
                    for x in [xs.first().unwrap(), xs.last().unwrap()] {
                        let got = enumerate_subspaces(f, m, r).unwrap().filter(|y| y.contains(x).unwrap()).count();
                        ensure!(big(got as u64) == want, "D q={q} s={s} r={r} m={m}: oracle {got}, formula {want}");
                        checked += 1;
                    }
                }
            }
        }
    }
    let f2 = Field::new(2).unwrap();
    let hist = common::puncture_histograms(2, 3, 7);
    let x = enumerate_subspaces(f2, 5, 2).unwrap().next().unwrap();
    ensure!(hist[&5][&x] == 12 && count_n(2, 5, 3, 7, 2).unwrap() == big(12), "N anchor 12 failed");
    ensure!(count_c(2, 2, 2, 3, 2).unwrap() == big(4), "C anchor 4 failed");
    let y = Subspace::span(f2, 4, &[vec![0, 1, 0, 0], vec![0, 0, 1, 0]]).unwrap();
    ensure!(common::covered_within(&y.extension_raise_dim().unwrap(), &y, 2) == 4, "C anchor oracle failed");
    Ok(format!("{checked} oracle comparisons, anchors N=12 and C=4"))
}

fn c2_worked_example() -> Outcome {
    let sys = build_full(DesignParams::new(2, 2, 3, 7, 2)).unwrap();
    let out = solve(&sys, &[]).unwrap();
    ensure!(out.status == SolveStatus::Unique, "status {}", out.status);
    let dims: Vec<usize> = sys.variables.iter().map(Subspace::dim).collect();
    ensure!(dims == [0, 1, 1, 1, 2], "variable dimensions {dims:?}");
    let want: Vec<Rational> = [5, 40, 40, 40, 256].map(|v| rat(BigInt::from(v))).to_vec();
    ensure!(out.values == want, "solution {:?}", out.values);
    Ok("(a_X, a_Y, a_Z, a_U, a_V) = (5, 40, 40, 40, 256)".into())
}

fn solve_pinned(params: DesignParams) -> SolveOutcome {
    let sys = build_uniform(params).unwrap();
    solve(&sys, &[null_pin(params)]).unwrap()
}

fn c3_uniform_families() -> Outcome {
    let mut lines = 0;
    for qv in [2u32, 3] {
        let q = BigInt::from(qv);
        let p = |e: u32| q.pow(e);
        let g = |n: u32, k: u32| BigInt::from(gaussian(n, k, qv));
        let r = |num: BigInt, den: BigInt| Rational::new(num, den);
        let one = || BigInt::one();

        let mut cases: Vec<(UniformFamily, u32, Vec<Rational>)> = vec![
            (
                UniformFamily::S3484,
                0,
                vec![one(), BigInt::zero(), p(2) * (p(2) + 1), p(4) * (p(4) - 1), p(12) - p(11) + p(7)]
                    .into_iter()
                    .map(rat)
                    .collect(),
            ),
            (
                UniformFamily::S45116,
                0,
                vec![
                    one(),
                    BigInt::zero(),
                    p(2) * (p(2) + 1),
                    p(9) + p(7) - p(4),
                    p(14) - p(9) + p(7),
                    (p(18) + p(11)) * (&q - 1),
                ]
                .into_iter()
                .map(rat)
                .collect(),
            ),
            (
                UniformFamily::S56126,
                0,
                vec![
                    one(),
                    BigInt::zero(),
                    p(2) * (p(4) + p(2) + 1),
                    p(4) * (p(8) + p(6) + p(5) - 1),
                    p(7) * (p(11) + p(9) + p(7) - p(6) + 1),
                    p(11) * (p(13) - p(7) + p(6) - 1),
                    p(16) * (p(14) - p(13) + p(7) - p(6) + 1),
                ]
                .into_iter()
                .map(rat)
                .collect(),
            ),
        ];
        for k in [3u32, 7, 9] {
            cases.push((
                UniformFamily::Fano,
                k,
                vec![
                    r(g(k, 2), g(3, 2)),
                    rat(BigInt::zero()),
                    rat(p(k - 1)),
                    rat(p(k + 1) * (&q - 1)),
                ],
            ));
        }
        cases.push((
            UniformFamily::S34Even,
            4,
            vec![one(), BigInt::zero(), p(2) * (p(2) + 1), p(4) * (p(4) - 1), p(12) - p(11) + p(7)]
                .into_iter()
                .map(rat)
                .collect(),
        ));

        for (family, k, want) in cases {
            let params = family.params(qv, k);
            let out = solve_pinned(params);
            ensure!(out.status == SolveStatus::Unique, "{params}: {}", out.status);
            ensure!(out.values == want, "{params}: solved {:?}, expected {:?}", out.values, want);
            ensure!(out.nonneg_integer, "{params}: not a nonnegative integer solution");
            let closed = uniform_family_solution(family, qv, k).map_err(|e| format!("{params}: {e}"))?;
            ensure!(closed.as_rationals() == want, "{params}: closed form differs");
            lines += 1;
        }

        for k in [8u32, 10] {
            let params = UniformFamily::S34Even.params(qv, k);
            let out = solve_pinned(params);
            let x4 = r(
                (p(3 * k) - p(2 * k + 3) + p(k + 3)) * (&q - 1),
                p(k - 3) - 1,
            );
            ensure!(out.status == SolveStatus::Unique, "{params}: {}", out.status);
            ensure!(out.value("X4") == Some(&x4), "{params}: X4 = {:?}", out.value("X4"));
            ensure!(!x4.is_integer() && !out.nonneg_integer, "{params}: X4 unexpectedly integral");
            match uniform_family_solution(UniformFamily::S34Even, qv, k) {
                Err(EquationError::NonIntegral { components }) if components.contains(&"X4".to_string()) => {}
                other => return Err(format!("{params}: expected rejection naming X4, got {other:?}")),
            }
            lines += 1;
        }
    }

    // X2 of S_q(5,6,12;6): q^2(q^4+q^2+1) verifies, q^2(q^4+q^2+q) does not
    let params = DesignParams::new(2, 5, 6, 12, 6);
    let sol = uniform_family_solution(UniformFamily::S56126, 2, 0).unwrap();
    let good = construct_uniform_design(params, &sol.as_rationals()).unwrap();
    let mut variant = sol.as_rationals();
    variant[2] = rat(BigInt::from(4 * (16 + 4 + 2)));
    let bad = construct_uniform_design(params, &variant).unwrap();
    ensure!(verify(&good).unwrap().passed, "S_2(5,6,12;6) uniform design fails verification");
    ensure!(!verify(&bad).unwrap().passed, "X2 = 88 variant unexpectedly verifies");
    Ok(format!(
        "{lines} family instances exact; 3-4-2k-k rejected at k=8,10 (X4), accepted at k=4; \
         S_q(5,6,12;6) uses X2 = q^2(q^4+q^2+1) (X2 = q^2(q^4+q^2+q) fails the verifier)"
    ))
}

fn timed_verify(d: &DesignMultiset, blocks: u64, limit: Duration) -> Result<String, String> {
    let start = Instant::now();
    let rep = verify(d).unwrap();
    let took = start.elapsed();
    ensure!(rep.passed, "{rep}");
    ensure!(rep.total_multiplicity == big(blocks), "{}: {} blocks, expected {blocks}", d.params(), rep.total_multiplicity);
    ensure!(took <= limit, "{}: verification took {took:?}", d.params());
    Ok(format!("{} {} blocks", d.params(), blocks))
}

fn parallelism_24() -> Parallelism {
    build_parallelism(2, 4, &ParallelismSource::Search { node_budget: DEFAULT_NODE_BUDGET }).unwrap()
}

fn c4_constructions_verify() -> Outcome {
    let limit = Duration::from_secs(30);
    let int = |v: u64| rat(BigInt::from(v));
    let mut done = Vec::new();
    let fano4 = construct_uniform_design(DesignParams::new(2, 2, 3, 7, 4), &[int(1), int(0), int(4), int(16)]).unwrap();
    done.push(timed_verify(&fano4, 381, limit)?);
    let s3484 = construct_uniform_design(
        DesignParams::new(2, 3, 4, 8, 4),
        &[int(1), int(0), int(20), int(240), int(2176)],
    )
    .unwrap();
    done.push(timed_verify(&s3484, 6477, limit)?);
    let s3485 = construct_s3485(2).unwrap();
    let sizes: Vec<(usize, u64)> = s3485.blocks().iter().fold(Vec::new(), |mut acc, (b, &m)| {
        acc.push((b.dim(), m));
        acc
    });
    let part = |dim: usize, mult: u64| sizes.iter().filter(|&&(d, m)| d == dim && m == mult).count();
    ensure!(
        (part(1, 1), part(2, 1), part(3, 16), part(3, 14), part(4, 128), part(4, 136)) == (1, 140, 35, 120, 15, 16),
        "S_2(3,4,8;5) part sizes differ"
    );
    done.push(timed_verify(&s3485, 6477, limit)?);
    let par = parallelism_24();
    let m5 = construct_fano_m5(2, &par).unwrap();
    done.push(timed_verify(&m5, 381, limit)?);
    let rec = construct_recursive(2, 3, &par, &trivial_base(2).unwrap()).unwrap();
    done.push(timed_verify(&rec, 381, limit)?);
    Ok(done.join("; "))
}

fn c5_puncture_chain() -> Outcome {
    let mut d = construct_fano_m5(2, &parallelism_24()).unwrap();
    ensure!(verify(&d).unwrap().passed, "start design fails");
    let mut trail = vec![d.params().m];
    while d.params().m > 1 {
        d = puncture_design(&d).unwrap();
        let rep = verify(&d).unwrap();
        ensure!(rep.passed, "{rep}");
        trail.push(d.params().m);
        match d.params().m {
            4 => ensure!(d == construct_fano_m4(2).unwrap(), "m=4 image is not the uniform design"),
            2 => ensure!(common::totals(&d) == [(0, 5), (1, 120), (2, 256)], "m=2 totals {:?}", common::totals(&d)),
            _ => {}
        }
    }
    let t = common::totals(&d);
    ensure!(t == [(0, 45), (1, 336)], "m=1 totals {t:?}");
    Ok(format!("m = {trail:?} all verify; m=1 totals (45, 336), 336 + 45*7 = 651"))
}

fn c6_steiner_puncture() -> Outcome {
    let mut out = Vec::new();
    for (q, n) in [(2u32, 4u32), (2, 6), (3, 4)] {
        let spread = build_spread(q, n).unwrap();
        let s = spread.as_steiner().unwrap();
        let (images, lower) = puncture_steiner(&s).unwrap();
        ensure!(lower.blocks().len() == 1, "q={q} n={n}: {} lowered blocks", lower.blocks().len());
        let special = lower.blocks().iter().next().unwrap();
        let imgs: Vec<Subspace> = spread.lines().iter().map(|l| l.puncture(1).unwrap()).collect();
        ensure!(imgs.iter().filter(|i| i.dim() == 1).count() == 1, "independent recount of lowered blocks");
        ensure!(images.total_multiplicity() == big(imgs.len() as u64), "image multiset size");
        let f = Field::new(q).unwrap();
        for x in enumerate_subspaces(f, (n - 1) as usize, 1).unwrap() {
            let appearances = imgs.iter().filter(|i| i.dim() == 2 && i.contains(&x).unwrap()).count() as u32;
            let want = if special.contains(&x).unwrap() { 0 } else { q };
            ensure!(appearances == want, "q={q} n={n}: {x} appears {appearances} times");
        }
        out.push(format!("S_{q}(1,2,{n})"));
    }
    Ok(format!("{}: one lowered block, q appearances of each uncovered point", out.join(", ")))
}

fn c7_necessary() -> Outcome {
    for q in [2, 3, 4] {
        let rep = necessary_conditions(2, 3, 7, q).unwrap();
        ensure!(rep.pass, "(2,3,7,{q}) fails");
    }
    let rep = necessary_conditions(2, 3, 7, 2).unwrap();
    let quotients: Vec<BigUint> = rep.entries.iter().map(|e| e.quotient().unwrap()).collect();
    ensure!(quotients == [big(381), big(21)], "quotients {quotients:?}");
    let rep = necessary_conditions(2, 3, 8, 2).unwrap();
    ensure!(!rep.pass && rep.first_failure() == Some(0), "(2,3,8,2) should fail at i=0");
    for q in [2, 3, 4, 5] {
        for k in 2..=4 {
            ensure!(necessary_conditions(1, 2, 2 * k, q).unwrap().pass, "(1,2,{},{q}) fails", 2 * k);
        }
    }
    Ok("(2,3,7,q) pass for q=2,3,4 (381, 21 at q=2); (2,3,8,2) fails at i=0; spreads pass".into())
}

fn c8_spreads_parallelism() -> Outcome {
    for (q, n, size) in [(2u32, 4u32, 5usize), (2, 6, 21), (3, 4, 10)] {
        let s = build_spread(q, n).unwrap();
        let lines: Vec<Subspace> = s.lines().iter().cloned().collect();
        ensure!(lines.len() == size, "spread q={q} n={n}: {} lines", lines.len());
        ensure!(common::is_partition(s.field(), n as usize, &lines), "spread q={q} n={n} is not a partition");
    }
    let start = Instant::now();
    let par = parallelism_24();
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(5), "search took {took:?}");
    ensure!(par.spreads().len() == 7, "{} spreads", par.spreads().len());
    let f = Field::new(2).unwrap();
    let mut all = HashSet::new();
    for s in par.spreads() {
        let lines: Vec<Subspace> = s.lines().iter().cloned().collect();
        ensure!(lines.len() == 5 && common::is_partition(f, 4, &lines), "a spread is not a partition");
        all.extend(lines);
    }
    let every: HashSet<Subspace> = enumerate_subspaces(f, 4, 2).unwrap().collect();
    ensure!(all.len() == 35 && all == every, "spreads cover {} lines", all.len());
    Ok(format!("spreads (2,4),(2,6),(3,4) partition; 7 disjoint spreads over 35 lines in {took:?}"))
}

fn c9_negative_controls() -> Outcome {
    let int = |v: u64| rat(BigInt::from(v));
    let designs = vec![
        construct_fano_m4(2).unwrap(),
        construct_fano_m5(2, &parallelism_24()).unwrap(),
        construct_uniform_design(DesignParams::new(2, 3, 4, 8, 4), &[int(1), int(0), int(20), int(240), int(2176)])
            .unwrap(),
        construct_s3485(2).unwrap(),
        construct_fano_m4(3).unwrap(),
    ];
    let mut mutations = 0;
    for d in &designs {
        ensure!(verify(d).unwrap().passed, "{} does not verify", d.params());
        for (b, &m) in d.blocks() {
            for new in [m + 1, m - 1] {
                let mut e = d.clone();
                e.set_multiplicity(b.clone(), new).unwrap();
                ensure!(!verify(&e).unwrap().passed, "{}: changing {b:?} to {new} still verifies", d.params());
                mutations += 1;
            }
        }
        let r = d.params().r_range();
        if let Some(absent) = r
            .flat_map(|r| enumerate_subspaces(d.field(), d.params().m as usize, r as usize).unwrap())
            .find(|y| d.multiplicity(y) == 0)
        {
            let mut e = d.clone();
            e.add(absent.clone(), 1).unwrap();
            ensure!(!verify(&e).unwrap().passed, "{}: adding {absent:?} still verifies", d.params());
            mutations += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut transforms = 0;
    for d in &designs {
        for _ in 0..100 {
            let ops = common::random_ops(&mut rng, d.field(), d.params().m as usize);
            let e = apply_transform(d, &ops).unwrap();
            ensure!(verify(&e).unwrap().passed, "{}: transform {ops:?} broke verification", d.params());
            transforms += 1;
        }
    }
    for (q, n) in [(2u32, 4u32), (3, 4)] {
        let s = build_spread(q, n).unwrap().as_steiner().unwrap();
        for _ in 0..100 {
            let ops = common::random_ops(&mut rng, s.field(), n as usize);
            let e = apply_transform(&s, &ops).unwrap();
            e.check().map_err(|err| format!("spread q={q}: {ops:?}: {err}"))?;
            transforms += 1;
        }
    }
    Ok(format!("{mutations} single-multiplicity mutations all fail; {transforms} random transforms all still pass"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("formula-vs-oracle equivalence", c1_formula_vs_oracle, Duration::from_secs(120)),
        ("m=2 full system worked example", c2_worked_example, Duration::from_secs(1)),
        ("uniform family solutions", c3_uniform_families, Duration::from_secs(10)),
        ("constructed designs verify", c4_constructions_verify, Duration::from_secs(150)),
        ("puncturing closure chain", c5_puncture_chain, Duration::from_secs(10)),
        ("Steiner puncture at t=1", c6_steiner_puncture, Duration::from_secs(5)),
        ("necessary-condition gate", c7_necessary, Duration::from_secs(5)),
        ("spreads and parallelism", c8_spreads_parallelism, Duration::from_secs(10)),
        ("negative controls", c9_negative_controls, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let result = match result {
            Ok(_) if took > *limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} ({took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({took:.2?})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

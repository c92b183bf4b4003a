//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Built with `harness = false` so the report
//! is always visible under `cargo test`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hankel_degree::bounds::{alpha_for_prob, prob_exact_iid, Variant};
use hankel_degree::dense::{singular_values, CMatrix};
use hankel_degree::dft::{dft_forward, sup_norm};
use hankel_degree::identification::{
    aic_scan, degree_lower_bound, empirical_degree_lower_bound, sample_noise_norms, simulate_lti,
    EstimatorOptions,
};
use hankel_degree::signals::{add_noise, nmr_signal, random_modal_system, NmrParameters};
use hankel_degree::spectrum::{
    count_at_or_above, dense_singular_values, lanczos_singular_values, LanczosConfig,
};
use hankel_degree::stochastics::{sample_noise, NoiseKind, NoiseModel, SeededGenerator};
use hankel_degree::structured::{dft_norm_bound, HankelOperator};
use hankel_degree::Complex64;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Kac-Murdock-Szego covariance `rho^{|j-k|}`, modulated by `e^{i theta (j-k)}` when complex.
fn kms_covariance(n: usize, rho: f64, complex: bool) -> CMatrix {
    let theta = if complex { 0.7 } else { 0.0 };
    CMatrix::from_fn(n, n, |j, k| {
        let d = j as f64 - k as f64;
        Complex64::from_polar(rho.powf(d.abs()), theta * d)
    })
}

fn model(kind: NoiseKind, n: usize) -> NoiseModel {
    match kind {
        NoiseKind::RealIid => NoiseModel::real_iid(),
        NoiseKind::ComplexIid => NoiseModel::complex_iid(),
        NoiseKind::RealCov => NoiseModel::real_cov(kms_covariance(n, 0.6, false)).unwrap(),
        NoiseKind::ComplexCov => NoiseModel::complex_cov(kms_covariance(n, 0.6, true)).unwrap(),
    }
}

fn random_complex(n: usize, seed: u64) -> Vec<Complex64> {
    let mut gen = SeededGenerator::new(seed, 0);
    (0..n)
        .map(|_| Complex64::new(gen.standard_normal(), gen.standard_normal()))
        .collect()
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn embedding_bound() -> Outcome {
    let ns = [8usize, 16, 32, 64, 128, 256];
    let models: Vec<Vec<NoiseModel>> = ns
        .iter()
        .map(|&n| NoiseKind::ALL.iter().map(|&k| model(k, n)).collect())
        .collect();
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|t| {
            let ni = t as usize % ns.len();
            let ki = (t as usize / ns.len()) % 4;
            let n = ns[ni];
            let g = sample_noise(&models[ni][ki], n, &mut SeededGenerator::new(101, t)).unwrap();
            let norm =
                singular_values(&HankelOperator::new(&g, n / 2).unwrap().to_dense().unwrap())
                    .unwrap()[0];
            let bound = dft_norm_bound(&g).unwrap();
            norm / bound
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1.0 + 1e-10,
        format!("1000 trials, all four distributions, max ||G||/(sqrt(n)||Fg||_inf) = {worst:.6}"),
    )
}

fn fast_matvec() -> Outcome {
    let mut cases: Vec<(usize, usize)> =
        (2..=64).flat_map(|n| (1..n).map(move |m| (n, m))).collect();
    for n in [255, 256, 257] {
        cases.extend([1, 2, n / 3, n / 2, n / 2 + 1, n - 2, n - 1].map(|m| (n, m)));
    }
    let count = cases.len();
    let worst = cases
        .par_iter()
        .map(|&(n, m)| {
            let seed = (n * 1000 + m) as u64;
            let y = random_complex(n, seed);
            let h = HankelOperator::new(&y, m).unwrap();
            let d = h.to_dense().unwrap();
            let x = random_complex(m, seed + 1);
            let v = random_complex(n - m, seed + 2);
            let e1 = rel_diff(&h.matvec(&x).unwrap(), &d.matvec(&x));
            let e2 = rel_diff(&h.adjoint_matvec(&v).unwrap(), &d.adjoint_matvec(&v));
            e1.max(e2)
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-12,
        format!("{count} shapes, max relative error {worst:.2e}"),
    )
}

fn sharpness_witness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in (2..=64).chain([127, 128, 255, 256, 257]) {
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        g[0] = Complex64::new(1.0, 0.0);
        let bound = dft_norm_bound(&g).unwrap();
        for m in [1, n / 2, n - 1].into_iter().filter(|&m| m >= 1) {
            let norm = singular_values(&HankelOperator::new(&g, m).unwrap().to_dense().unwrap())
                .unwrap()[0];
            worst = worst.max((norm - 1.0).abs()).max((bound - 1.0).abs());
            count += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("g = e_0 over {count} shapes, max |value - 1| = {worst:.1e}"),
    )
}

fn coverage() -> Outcome {
    let trials = 2000;
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for &kind in &NoiseKind::ALL {
        for n in [16usize, 64, 256] {
            let model = model(kind, n);
            let norms = sample_noise_norms(&model, n, n / 2, trials, 0xC0FE + n as u64).unwrap();
            for p in [0.5, 0.9, 0.99] {
                let alpha = alpha_for_prob(p, &model, n, Variant::Paper).unwrap();
                let thresh = alpha * (n as f64).sqrt();
                let hit = norms.iter().filter(|&&s| s <= thresh).count() as f64 / trials as f64;
                let floor = p - 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
                min_margin = min_margin.min(hit - floor);
                if hit < floor {
                    failures.push(format!("{kind} n={n} p={p}: {hit:.4} < {floor:.4}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("36 cells x 2000 trials, smallest margin above p - 3 se: {min_margin:.4}")
        } else {
            failures.join("; ")
        },
    )
}

/// One-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn exact_iid_cdf() -> Outcome {
    let trials = 5000;
    // asymptotic KS critical value at the 0.001 level
    let critical = 1.9495 / (trials as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut cells = Vec::new();
    for kind in [NoiseKind::RealIid, NoiseKind::ComplexIid] {
        let model = model(kind, 0);
        for n in [16usize, 64] {
            let xs: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let g = sample_noise(&model, n, &mut SeededGenerator::new(555 + n as u64, t))
                        .unwrap();
                    sup_norm(&dft_forward(&g).unwrap())
                })
                .collect();
            let d = ks_statistic(xs, |a| prob_exact_iid(a, kind, n).unwrap());
            worst = worst.max(d);
            pass &= d <= critical;
            cells.push(format!("{kind} n={n}: D={d:.4}"));
        }
    }
    outcome(
        pass,
        format!("{} (critical {critical:.4})", cells.join(", ")),
    )
}

fn asymptotic_rate() -> Outcome {
    let m = NoiseModel::complex_iid();
    let mut ratios = Vec::new();
    for e in [10u32, 14, 20] {
        let n = 1usize << e;
        let alpha = alpha_for_prob(0.5, &m, n, Variant::Paper).unwrap();
        let nf = n as f64;
        ratios.push(alpha * nf.sqrt() / (2.0 * nf * nf.ln()).sqrt());
    }
    let pass = ratios.iter().all(|r| (0.8..=1.3).contains(r));
    outcome(
        pass,
        format!("alpha(0.5) sqrt(n) / sqrt(2 n log n) = {ratios:.4?} for n = 2^10, 2^14, 2^20"),
    )
}

fn nmr_recovery() -> Outcome {
    let y = nmr_signal(&NmrParameters::default()).unwrap();
    let s = singular_values(&HankelOperator::new(&y, 128).unwrap().to_dense().unwrap()).unwrap();
    let rank = s.iter().filter(|&&v| v > 1e-8 * s[0]).count();
    let model = NoiseModel::complex_iid();
    let opts = EstimatorOptions::default();
    let rows: Vec<(usize, usize)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let yt = add_noise(&y, 15.0, &model, &mut SeededGenerator::new(seed, 0)).unwrap();
            let thm = degree_lower_bound(&yt, 15.0, &model, 0.99, Variant::Paper, &opts).unwrap();
            let emp =
                empirical_degree_lower_bound(&yt, 15.0, &model, 99.0, 400, 10_000 + seed, &opts)
                    .unwrap();
            (thm.lower_bound, emp.lower_bound)
        })
        .collect();
    let below = rows.iter().filter(|(t, _)| *t <= 11).count();
    let ordered = rows.iter().filter(|(t, e)| e >= t).count();
    let thm: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let emp: Vec<usize> = rows.iter().map(|r| r.1).collect();
    outcome(
        rank == 11 && below >= 48 && ordered == 50,
        format!(
            "noise-free rank {rank}; theorem <= 11 in {below}/50; empirical >= theorem in {ordered}/50 \
             (theorem range {}..={}, empirical range {}..={})",
            thm.iter().min().unwrap(),
            thm.iter().max().unwrap(),
            emp.iter().min().unwrap(),
            emp.iter().max().unwrap()
        ),
    )
}

fn nalgebra_singular_values(h: &HankelOperator) -> Vec<f64> {
    let (r, c) = h.shape();
    let m = nalgebra::DMatrix::from_fn(r, c, |j, k| h.entry(j, k));
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn lanczos_agreement() -> Outcome {
    let config = LanczosConfig {
        tol: 1e-10,
        ..Default::default()
    };
    let mut details = Vec::new();
    let mut pass = true;
    for n in [256usize, 2048] {
        let y = random_complex(n, 8 + n as u64);
        let h = HankelOperator::new(&y, n / 2).unwrap();
        let lz = lanczos_singular_values(&h, 20, &config).unwrap();
        let reference = if n == 256 {
            dense_singular_values(&h.to_dense().unwrap())
                .unwrap()
                .values
        } else {
            nalgebra_singular_values(&h)
        };
        let mut worst: f64 = 0.0;
        let mut compared = 0;
        for (i, (&a, &ok)) in lz.values.iter().zip(&lz.converged).enumerate() {
            if ok {
                worst = worst.max((a - reference[i]).abs() / reference[i]);
                compared += 1;
            }
        }
        pass &= worst <= 1e-8 && compared == 20;
        details.push(format!(
            "n={n}: {compared}/20 converged, max rel diff {worst:.1e}"
        ));
    }
    outcome(pass, details.join("; "))
}

fn weyl_counting() -> Outcome {
    let results: Vec<(usize, usize)> = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let mut gen = SeededGenerator::new(909, t);
            let n = 12 + (t as usize % 40);
            let r = 1 + (t as usize % 6);
            let sys = random_modal_system(r, 0.95, 5000 + t).unwrap();
            let y = simulate_lti(&sys, n);
            let h = HankelOperator::new(&y, n / 2).unwrap().to_dense().unwrap();
            // alternate Hankel-structured and unstructured perturbations at varied scales
            let scale = 10f64.powf(-3.0 + 3.0 * (t % 7) as f64 / 6.0);
            let e = if t % 2 == 0 {
                let g = sample_noise(&NoiseModel::complex_iid(), n, &mut gen).unwrap();
                let g: Vec<Complex64> = g.iter().map(|z| z * scale).collect();
                HankelOperator::new(&g, n / 2).unwrap().to_dense().unwrap()
            } else {
                CMatrix::from_fn(h.rows(), h.cols(), |_, _| {
                    Complex64::new(gen.standard_normal(), gen.standard_normal()) * scale
                })
            };
            let perturbed = CMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] + e[(i, j)]);
            let e_norm = singular_values(&e).unwrap()[0];
            let spec = dense_singular_values(&perturbed).unwrap();
            (count_at_or_above(&spec, e_norm).count, r)
        })
        .collect();
    let violations = results.iter().filter(|(c, r)| c > r).count();
    let exact = results.iter().filter(|(c, r)| c == r).count();
    outcome(
        violations == 0,
        format!("200 instances, {violations} violations, count equals rank in {exact}"),
    )
}

fn aic_ordering() -> Outcome {
    let y = nmr_signal(&NmrParameters::default()).unwrap();
    let model = NoiseModel::complex_iid();
    let opts = EstimatorOptions::default();
    let rows: Vec<(usize, usize)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let yt = add_noise(&y, 15.0, &model, &mut SeededGenerator::new(seed, 0)).unwrap();
            let thm = degree_lower_bound(&yt, 15.0, &model, 0.99, Variant::Paper, &opts).unwrap();
            let scan = aic_scan(&yt, 15.0, &model, 20, &opts).unwrap();
            (thm.lower_bound, scan.argmin_q)
        })
        .collect();
    let ok = rows.iter().filter(|(t, a)| t <= a).count();
    let argmins: Vec<usize> = rows.iter().map(|r| r.1).collect();
    outcome(
        ok * 10 >= 50 * 9,
        format!(
            "theorem bound <= AIC argmin in {ok}/50 seeds (argmin range {}..={})",
            argmins.iter().min().unwrap(),
            argmins.iter().max().unwrap()
        ),
    )
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, Check); 10] = [
        (
            1,
            "embedding bound validity",
            Duration::from_secs(120),
            embedding_bound,
        ),
        (
            2,
            "fast matvec correctness",
            Duration::from_secs(60),
            fast_matvec,
        ),
        (
            3,
            "sharpness witness",
            Duration::from_secs(60),
            sharpness_witness,
        ),
        (
            4,
            "coverage of the norm bound",
            Duration::from_secs(600),
            coverage,
        ),
        (
            5,
            "exact i.i.d. CDF",
            Duration::from_secs(180),
            exact_iid_cdf,
        ),
        (
            6,
            "asymptotic rate",
            Duration::from_secs(10),
            asymptotic_rate,
        ),
        (
            7,
            "NMR degree recovery",
            Duration::from_secs(600),
            nmr_recovery,
        ),
        (
            8,
            "Lanczos/dense agreement",
            Duration::from_secs(180),
            lanczos_agreement,
        ),
        (9, "Weyl counting", Duration::from_secs(60), weyl_counting),
        (10, "AIC ordering", Duration::from_secs(900), aic_ordering),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let within = elapsed <= limit;
        let pass = out.pass && within;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s, limit {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if within { "" } else { ", over time" }
        );
    }
    println!(
        "criterion 11 SKIP beam-model degree numbers at n = 8192: excluded from the gate, needs the external SLICOT dataset \
         (ingestion is covered by the Matrix Market fixture tests)"
    );
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

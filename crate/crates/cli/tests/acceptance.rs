//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or exceeds its time budget.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fairprobe::consistency::{
    average_ranks, discordant_pairs, pearson, spearman, CorrelationCell, CorrelationEntry,
    CorrelationKind, CorrelationMatrix, ScoreTable,
};
use fairprobe::datasets::{generate_synthetic, split, SplitSpec, SyntheticSpec};
use fairprobe::experiment::{
    instantiations, provenance_notes, DatasetResult, ExperimentResult, Provenance,
};
use fairprobe::metrics::{compute, Method};
use fairprobe::numerics::second_singular_value;
use fairprobe::report::{format_cell, write_report};
use fairprobe::zoo::{predict, train, Family, ModelConfig, PredictionSet};
use fairprobe::{run_experiment, Error, ExperimentConfig};
use fairprobe_cli::cmd_run;
use nalgebra::{Matrix4, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn score(m: Method, ps: &PredictionSet) -> std::result::Result<f64, String> {
    compute(m, ps)
        .map(|f| f.value)
        .map_err(|e| format!("{m}: {e}"))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// ---------------------------------------------------------------- criterion 1

/// Pearson from exact integer moments.
fn integer_pearson(x: &[i64], y: &[i64]) -> Option<f64> {
    let n = x.len() as i128;
    let sx: i128 = x.iter().map(|&v| v as i128).sum();
    let sy: i128 = y.iter().map(|&v| v as i128).sum();
    let sxy: i128 = x.iter().zip(y).map(|(&a, &b)| a as i128 * b as i128).sum();
    let sxx: i128 = x.iter().map(|&v| (v as i128) * (v as i128)).sum();
    let syy: i128 = y.iter().map(|&v| (v as i128) * (v as i128)).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return None;
    }
    Some((n * sxy - sx * sy) as f64 / ((vx as f64) * (vy as f64)).sqrt())
}

/// Twice the average rank: `2 * #less + #equal + 1`.
fn doubled_ranks(x: &[i64]) -> Vec<i64> {
    x.iter()
        .map(|&v| {
            2 * x.iter().filter(|&&u| u < v).count() as i64
                + x.iter().filter(|&&u| u == v).count() as i64
                + 1
        })
        .collect()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut compared, mut degenerate, mut tied) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(3..=12);
        let x: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
        let y: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        match (integer_pearson(&x, &y), pearson(&xf, &yf)) {
            (Some(r), Ok(c)) => {
                worst = worst.max((r - c.r).abs());
                ensure((r - c.r).abs() <= 1e-12, || {
                    format!("pearson {x:?} {y:?}: {} vs oracle {r}", c.r)
                })?;
            }
            (None, Err(Error::ZeroVariance)) => degenerate += 1,
            (o, got) => return Err(format!("pearson {x:?} {y:?}: oracle {o:?}, got {got:?}")),
        }
        let (rx, ry) = (doubled_ranks(&x), doubled_ranks(&y));
        match (integer_pearson(&rx, &ry), spearman(&xf, &yf)) {
            (Some(r), Ok(c)) => {
                worst = worst.max((r - c.r).abs());
                ensure((r - c.r).abs() <= 1e-12, || {
                    format!("spearman {x:?} {y:?}: {} vs oracle {r}", c.r)
                })?;
                let half = |v: &[i64]| v.iter().map(|&r| r as f64 / 2.0).collect::<Vec<_>>();
                let (hx, hy) = (half(&rx), half(&ry));
                ensure(hx == average_ranks(&xf) && hy == average_ranks(&yf), || {
                    format!("average ranks of {x:?}")
                })?;
                let direct = pearson(&hx, &hy).map_err(|e| e.to_string())?;
                ensure(c.r.to_bits() == direct.r.to_bits(), || {
                    format!("spearman != pearson of ranks on {x:?} {y:?}")
                })?;
                if rx.iter().any(|&r| r % 2 == 0) || ry.iter().any(|&r| r % 2 == 0) {
                    tied += 1;
                }
            }
            (None, Err(Error::ZeroVariance)) => degenerate += 1,
            (o, got) => return Err(format!("spearman {x:?} {y:?}: oracle {o:?}, got {got:?}")),
        }
        compared += 1;
    }
    Ok(format!("{compared} vector pairs, {tied} with ties, {degenerate} zero-variance cases, max |diff| {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|_| rng.random_range(-2i32..=2) as f64).collect())
            .collect();
        let m = Matrix4::from_fn(|i, j| rows[i][j]);
        let mut eig: Vec<f64> = SymmetricEigen::new(m.transpose() * m)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let oracle = eig[1].max(0.0).sqrt();
        let got = second_singular_value(&rows).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle).abs());
        ensure((got - oracle).abs() <= 1e-8, || {
            format!("{rows:?}: {got} vs oracle {oracle}")
        })?;
    }
    Ok(format!("500 matrices, max |diff| {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut s, mut y, mut a) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..1000 {
        let yy = normal(&mut rng);
        let ss = yy + 0.5 * normal(&mut rng);
        for g in 0..2 {
            s.push(ss);
            y.push(yy);
            a.push(g);
        }
    }
    let ps = PredictionSet::new("identical", s, y, a).map_err(|e| e.to_string())?;
    let v: Vec<f64> = Method::ALL
        .iter()
        .map(|&m| score(m, &ps))
        .collect::<Result<_, _>>()?;
    ensure(v[0] == 0.0 && v[1] == 0.0, || {
        format!("P1 {} P2 {} not exactly 0", v[0], v[1])
    })?;
    ensure(v[2] < 0.1, || format!("P3 {}", v[2]))?;
    ensure(v[3] < 0.02, || format!("P4 {}", v[3]))?;
    ensure(v[4] < 0.02, || format!("C1 {}", v[4]))?;
    ensure(v[5] < 0.12, || format!("C2 {}", v[5]))?;
    Ok(format!(
        "P1 {} P2 {} P3 {:.4} P4 {:.4} C1 {:.4} C2 {:.4}",
        v[0], v[1], v[2], v[3], v[4], v[5]
    ))
}

// ---------------------------------------------------------------- criterion 4

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<usize> = (0..2000).map(|i| i % 2).collect();
    let y: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
    let s = a.iter().map(|&g| g as f64).collect();
    let ps = PredictionSet::new("s=a", s, y, a).map_err(|e| e.to_string())?;
    let (p1, p2, p3, p4) = (
        score(Method::P1, &ps)?,
        score(Method::P2, &ps)?,
        score(Method::P3, &ps)?,
        score(Method::P4, &ps)?,
    );
    ensure(p1 >= 0.49, || format!("P1 {p1}"))?;
    ensure(p2 >= 0.95, || format!("P2 {p2}"))?;
    ensure(p3 >= 0.95, || format!("P3 {p3}"))?;
    ensure((p4 - std::f64::consts::LN_2).abs() <= 0.05, || {
        format!("P4 {p4}")
    })?;
    Ok(format!("P1 {p1:.4} P2 {p2:.4} P3 {p3:.4} P4 {p4:.4}"))
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5() -> Check {
    let ridge = ModelConfig::new("ridge_a1", Family::Ridge, &[("alpha", 1.0)]);
    let parity = [Method::P1, Method::P2, Method::P3, Method::P4];
    let mut rows = Vec::new();
    for dependence in [0.0, 1.0, 2.0, 4.0] {
        let d = generate_synthetic(SyntheticSpec {
            n: 5000,
            dependence,
            noise_sd: 1.0,
            seed: 5,
        })
        .map_err(|e| e.to_string())?;
        let (tr, te) = split(&d, SplitSpec::default()).map_err(|e| e.to_string())?;
        let model = train(&ridge, &tr).map_err(|e| e.to_string())?;
        let ps = predict(&model, &te).map_err(|e| e.to_string())?;
        rows.push(
            parity
                .iter()
                .map(|&m| score(m, &ps))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    for (j, m) in parity.iter().enumerate() {
        ensure(rows.windows(2).all(|w| w[1][j] >= w[0][j]), || {
            format!(
                "{m} not non-decreasing over dependence: {:?}",
                rows.iter().map(|r| r[j]).collect::<Vec<_>>()
            )
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let n = 5000;
    let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let y: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let noise: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let mut sep = Vec::new();
    for gamma in [0.0, 0.5, 1.0, 2.0] {
        let s = (0..n)
            .map(|i| y[i] + gamma * a[i] as f64 + noise[i])
            .collect();
        let ps = PredictionSet::new("gamma", s, y.clone(), a.clone()).map_err(|e| e.to_string())?;
        sep.push([score(Method::C1, &ps)?, score(Method::C2, &ps)?]);
    }
    for (j, m) in ["C1", "C2"].iter().enumerate() {
        ensure(sep.windows(2).all(|w| w[1][j] >= w[0][j]), || {
            format!(
                "{m} not non-decreasing over gamma: {:?}",
                sep.iter().map(|r| r[j]).collect::<Vec<_>>()
            )
        })?;
    }
    let fmt = |v: Vec<f64>| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join("<=")
    };
    Ok(format!(
        "P1 {} | P3 {} | C1 {} | C2 {}",
        fmt(rows.iter().map(|r| r[0]).collect()),
        fmt(rows.iter().map(|r| r[2]).collect()),
        fmt(sep.iter().map(|r| r[0]).collect()),
        fmt(sep.iter().map(|r| r[1]).collect())
    ))
}

// ---------------------------------------------------------- criteria 6 and 8

const SUITE_CONFIG: &str = include_str!("../../../configs/synthetic.cfg");

fn pearson_r(d: &DatasetResult, m1: Method, m2: Method) -> Option<f64> {
    d.entry(CorrelationKind::Pearson, m1, m2)
        .and_then(CorrelationEntry::cell)
        .map(|c| c.r)
}

fn criterion_6(dir: &Path) -> Check {
    let cfg_path = dir.join("suite.cfg");
    fs::write(&cfg_path, SUITE_CONFIG).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::from_file(&cfg_path).map_err(|e| e.to_string())?;
    let result = run_experiment(&cfg).map_err(|e| e.to_string())?;
    write_report(&result, &dir.join("criterion6")).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut spread_found = None;
    let mut below = Vec::new();
    for d in &result.datasets {
        ensure(d.score_table.model_ids().len() == 24, || {
            format!(
                "{}: {} models scored",
                d.name,
                d.score_table.model_ids().len()
            )
        })?;
        let r12 = pearson_r(d, Method::P1, Method::P2)
            .ok_or_else(|| format!("{}: (P1,P2) undefined", d.name))?;
        lines.push(format!("{} r(P1,P2)={r12:.3}", d.name));
        if r12 < 0.9 {
            below.push(d.name.clone());
        }
        for m in d
            .correlations
            .iter()
            .filter(|m| m.kind == CorrelationKind::Pearson)
        {
            for (m1, m2, e) in m.pairs() {
                if let Some(c) = e.cell() {
                    if c.r <= r12 - 0.2 && spread_found.is_none() {
                        spread_found = Some(format!("{}: r({m1},{m2})={:.3}", d.name, c.r));
                    }
                }
            }
        }
    }
    let spread = spread_found
        .ok_or_else(|| format!("no method pair 0.2 below (P1,P2); {}", lines.join(", ")))?;
    ensure(below.is_empty(), || {
        format!(
            "Pearson(P1,P2) < 0.9 on {}; {}; variability: {spread}",
            below.join(", "),
            lines.join(", ")
        )
    })?;
    Ok(format!("{}; variability: {spread}", lines.join(", ")))
}

fn criterion_8(dir: &Path) -> Check {
    let cfg_path = dir.join("suite.cfg");
    let (a, b) = (dir.join("run_a"), dir.join("run_b"));
    for out in [&a, &b] {
        cmd_run(&cfg_path, out, None).map_err(|e| e.to_string())?;
    }
    let (ra, rb) = (
        fs::read(a.join("report.json")).map_err(|e| e.to_string())?,
        fs::read(b.join("report.json")).map_err(|e| e.to_string())?,
    );
    ensure(ra == rb, || "report.json differs between runs".into())?;
    let c6 = fs::read(dir.join("criterion6").join("report.json")).map_err(|e| e.to_string())?;
    ensure(ra == c6, || {
        "report.json differs from the criterion 6 run".into()
    })?;
    Ok(format!(
        "report.json byte-identical across runs ({} bytes)",
        ra.len()
    ))
}

// ---------------------------------------------------------------- criterion 7

fn random_prediction_set(rng: &mut ChaCha8Rng, k: usize) -> PredictionSet {
    let n = rng.random_range(800..1500);
    let shift = rng.random_range(0.0..1.5);
    let a: Vec<usize> = (0..n)
        .map(|i| {
            if i < 2 * k {
                i % k
            } else {
                rng.random_range(0..k)
            }
        })
        .collect();
    let y: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let rounded = rng.random_bool(0.3);
    let s = (0..n)
        .map(|i| {
            let v = 0.7 * y[i] + shift * a[i] as f64 + normal(rng);
            if rounded {
                (v * 4.0).round() / 4.0
            } else {
                v
            }
        })
        .collect();
    PredictionSet::new("random", s, y, a).expect("valid")
}

fn outcome(m: Method, ps: &PredictionSet) -> std::result::Result<u64, String> {
    compute(m, ps)
        .map(|f| f.value.to_bits())
        .map_err(|e| e.to_string())
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut comparisons = 0;
    for case in 0..20 {
        let k = rng.random_range(2..=4);
        let base = random_prediction_set(&mut rng, k);
        let n = base.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut relabel: Vec<usize> = (0..k).map(|g| g * 3 + 1).collect();
        relabel.shuffle(&mut rng);
        let scale = [0.001, 0.5, 3.0, 1000.0][case % 4];
        let offset = rng.random_range(-100.0..100.0);
        let pick = |f: &dyn Fn(usize) -> f64| perm.iter().map(|&i| f(i)).collect::<Vec<_>>();
        let s = base.s();
        let y = base.y().to_vec();
        let moved_a: Vec<usize> = perm.iter().map(|&i| relabel[base.a()[i]]).collect();
        let moved_y = pick(&|i| y[i]);
        let permuted = PredictionSet::new("p", pick(&|i| s[i]), moved_y.clone(), moved_a.clone())
            .expect("valid");
        let affine = PredictionSet::new("t", pick(&|i| scale * s[i] + offset), moved_y, moved_a)
            .expect("valid");
        for m in Method::ALL {
            let want = outcome(m, &base);
            ensure(want == outcome(m, &permuted), || {
                format!("case {case}: {m} changed under permutation+relabeling")
            })?;
            comparisons += 1;
            if !matches!(m, Method::P4 | Method::C1) {
                ensure(want == outcome(m, &affine), || {
                    format!("case {case}: {m} changed under affine map x{scale}")
                })?;
                comparisons += 1;
            }
        }
    }
    Ok(format!(
        "20 prediction sets, {comparisons} bit-level comparisons"
    ))
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut total = 0;
    for case in 0..100 {
        let k = rng.random_range(2..=10);
        let tie_free = case % 2 == 0;
        let column = |rng: &mut ChaCha8Rng| -> Vec<i64> {
            if tie_free {
                let mut v: Vec<i64> = (0..k as i64).collect();
                v.shuffle(rng);
                v
            } else {
                (0..k).map(|_| rng.random_range(0..4)).collect()
            }
        };
        let (c1, c2) = (column(&mut rng), column(&mut rng));
        let ids: Vec<String> = (0..k).map(|i| format!("model{i}")).collect();
        let values = (0..k).map(|i| vec![c1[i] as f64, c2[i] as f64]).collect();
        let t = ScoreTable::new("t", ids.clone(), vec![Method::P1, Method::P2], values)
            .map_err(|e| e.to_string())?;
        let got = discordant_pairs(&t, Method::P1, Method::P2).map_err(|e| e.to_string())?;
        let mut expected = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let flips = (c1[i] < c1[j] && c2[i] > c2[j]) || (c1[i] > c1[j] && c2[i] < c2[j]);
                if flips {
                    expected.push((
                        ids[i].clone(),
                        ids[j].clone(),
                        (c1[i] - c1[j]) as f64,
                        (c2[i] - c2[j]) as f64,
                    ));
                }
            }
        }
        let got_t: Vec<_> = got
            .iter()
            .map(|p| (p.model_i.clone(), p.model_j.clone(), p.delta_m1, p.delta_m2))
            .collect();
        ensure(got_t == expected, || {
            format!("case {case}: {got_t:?} vs {expected:?}")
        })?;
        if tie_free {
            // Kendall: concordant + discordant = k(k-1)/2 without ties
            let pairs = k * (k - 1) / 2;
            let concordant = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                .filter(|&(i, j)| (c1[i] - c1[j]) * (c2[i] - c2[j]) > 0)
                .count();
            let tau = (concordant as f64 - got.len() as f64) / pairs as f64;
            let implied = pairs as f64 * (1.0 - tau) / 2.0;
            ensure((implied - got.len() as f64).abs() < 1e-9, || {
                format!("case {case}: Kendall count mismatch")
            })?;
        }
        total += got.len();
    }
    Ok(format!("100 tables, {total} discordant pairs matched"))
}

// --------------------------------------------------------------- criterion 10

fn criterion_10() -> Check {
    let methods = vec![Method::P1, Method::P2];
    let dataset = |name: &str, r: f64, p_value: f64| {
        let cell = CorrelationEntry::Value(CorrelationCell {
            r,
            p_value,
            significant: p_value < 0.05,
            n: 24,
        });
        let matrix = |kind| CorrelationMatrix {
            dataset: name.into(),
            kind,
            methods: methods.clone(),
            entries: vec![
                vec![CorrelationEntry::Diagonal, cell.clone()],
                vec![cell.clone(), CorrelationEntry::Diagonal],
            ],
        };
        DatasetResult {
            name: name.into(),
            rows: 0,
            dropped_rows: 0,
            train_rows: 0,
            test_rows: 0,
            group_labels: Vec::new(),
            test_group_counts: Vec::new(),
            models: Vec::new(),
            excluded: Vec::new(),
            score_table: ScoreTable::new(name, Vec::new(), methods.clone(), Vec::new())
                .expect("empty table"),
            correlations: vec![
                matrix(CorrelationKind::Pearson),
                matrix(CorrelationKind::Spearman),
            ],
            discordant: Vec::new(),
        }
    };
    let result = ExperimentResult {
        methods: methods.clone(),
        datasets: vec![
            dataset("a", 0.994, 0.001),
            dataset("b", 0.505, 0.01),
            dataset("c", -0.31, 0.2),
        ],
        provenance: Provenance {
            tool_version: String::new(),
            config_hash: String::new(),
            master_seed: 0,
            test_fraction: 0.2,
            instantiations: instantiations(&methods),
            density_ratio_classifier: String::new(),
            notes: provenance_notes(),
        },
    };
    let got = format_cell(&result, CorrelationKind::Pearson, Method::P1, Method::P2);
    ensure(got == "(0.99*, 0.50*, -0.31)", || {
        format!("rendered {got:?}")
    })?;
    Ok(format!("rendered {got}"))
}

// ------------------------------------------------------------------- harness

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().to_path_buf();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, budget: Duration, f: &dyn Fn() -> Check| -> Duration {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if elapsed <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("over time budget: {d}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {status} {name} [{:.1}s / {:.0}s] {detail}",
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        );
        elapsed
    };
    let secs = Duration::from_secs;
    report(1, "correlation oracle", secs(1), &criterion_1);
    report(2, "svd oracle", secs(5), &criterion_2);
    report(3, "zero-disparity soundness", secs(30), &criterion_3);
    report(4, "perfect-dependence ceiling", secs(30), &criterion_4);
    report(5, "monotonicity sweep", secs(120), &criterion_5);
    let c6_budget = secs(600);
    report(6, "qualitative table trend", c6_budget, &|| {
        criterion_6(&path)
    });
    report(7, "invariance suite", secs(60), &criterion_7);
    report(8, "determinism", c6_budget * 2, &|| criterion_8(&path));
    report(9, "discordant-pair oracle", secs(1), &criterion_9);
    report(10, "table formatting golden", secs(1), &criterion_10);
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

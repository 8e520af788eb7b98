//! Acceptance suite: one PASS/FAIL line per criterion. Failures exit non-zero
//! when `GENSURP_ACCEPTANCE_STRICT` is set.
//!
//! Reference values are computed here from first principles (hand-derived
//! constants, brute-force enumeration, closed-form algebra) rather than by
//! calling the library code they check.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gensurp_core::analysis::{pearson, spearman, variance_analysis, Item};
use gensurp_core::estimator::{simulate_batch, Estimator};
use gensurp_core::eval::{delta_r2_cv, ols_fit, r2, PredictorValues, RegressionSpec, Stimulus};
use gensurp_core::lm::fixtures::Memoryless;
use gensurp_core::lm::{LanguageModel, Sym, TokenString};
use gensurp_core::measures::{GsModel, DEFAULT_EPSILON};
use gensurp_core::representation::EmbeddingTable;
use gensurp_core::testbed::{Testbed, TestbedSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn model(name: &str) -> GsModel {
    GsModel::from_name(name, DEFAULT_EPSILON).expect("catalog name")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name}: got {got}, expected {want} ± {tol}"))
}

// ---------- TOY fixture and its independent oracle ----------

const P_A: f64 = 0.5;
const P_B: f64 = 0.3;
const P_EOS: f64 = 0.2;

fn toy_embeddings(lm: &Memoryless) -> gensurp_core::BoundEmbeddings {
    let mut v = std::collections::HashMap::new();
    v.insert("a".to_string(), vec![1.0, 0.0, 0.0]);
    v.insert("b".to_string(), vec![0.0, 1.0, 0.0]);
    EmbeddingTable::new(3, v, Some(vec![0.0, 0.0, 1.0]))
        .expect("valid table")
        .bind(lm.alphabet())
}

/// Mean-pooled orthonormal representation of a string with `na` a's and `nb` b's.
fn toy_rep(na: usize, nb: usize) -> [f64; 3] {
    let n = (na + nb) as f64;
    if na + nb == 0 {
        [0.0, 0.0, 1.0]
    } else {
        [na as f64 / n, nb as f64 / n, 0.0]
    }
}

fn cos_dist(x: [f64; 3], y: [f64; 3]) -> f64 {
    let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    1.0 - dot / (nx * ny)
}

/// Truncated sampling distribution of TOY continuations, written out by
/// hand: strings shorter than `l` stop with probability `P_EOS`, strings of
/// length `l` carry their prefix probability. Each entry is (string as
/// bytes, probability).
fn toy_truncated(l: usize) -> Vec<(Vec<u8>, f64)> {
    let mut out = Vec::new();
    let mut frontier = vec![(Vec::<u8>::new(), 1.0f64)];
    for depth in 0..=l {
        let mut next = Vec::new();
        for (s, p) in frontier {
            if depth == l {
                out.push((s, p));
                continue;
            }
            out.push((s.clone(), p * P_EOS));
            for (c, q) in [(b'a', P_A), (b'b', P_B)] {
                let mut t = s.clone();
                t.push(c);
                next.push((t, p * q));
            }
        }
        frontier = next;
    }
    out
}

struct ToyOracle {
    /// (na, nb, first symbol, length) → probability
    classes: BTreeMap<(usize, usize, u8, usize), f64>,
    l: usize,
}

impl ToyOracle {
    fn new(l: usize) -> Self {
        let mut classes = BTreeMap::new();
        for (s, p) in toy_truncated(l) {
            let na = s.iter().filter(|&&c| c == b'a').count();
            let first = s.first().copied().unwrap_or(0);
            *classes.entry((na, s.len() - na, first, s.len())).or_insert(0.0) += p;
        }
        Self { classes, l }
    }

    fn expect(&self, g: impl Fn(usize, usize, u8, usize) -> f64) -> f64 {
        self.classes.iter().map(|(&(na, nb, f, len), &p)| p * g(na, nb, f, len)).sum()
    }

    fn first_prob(f: u8) -> f64 {
        match f {
            b'a' => P_A,
            b'b' => P_B,
            _ => P_EOS,
        }
    }

    /// Expected value of every scoring function for target `w = "a"` after
    /// context `c = "b"`.
    fn expected_scores(&self) -> BTreeMap<&'static str, f64> {
        let l = self.l;
        let rep_w = toy_rep(1, 0);
        let e = |f: u8| match f {
            b'a' => [1.0, 0.0, 0.0],
            b'b' => [0.0, 1.0, 0.0],
            _ => [0.0, 0.0, 1.0],
        };
        let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
        // L1 distance between the logistic activations of w₁ = a and c_last = b
        let shift = (0..3).map(|i| (logistic(e(b'a')[i]) - logistic(e(b'b')[i])).abs()).sum::<f64>();
        let mut m = BTreeMap::new();
        m.insert("probability", self.expect(|_, _, f, _| (f == b'a') as u8 as f64));
        m.insert("surprisal", m["probability"]);
        m.insert("information_value", self.expect(|na, nb, _, _| cos_dist(toy_rep(na, nb), rep_w)));
        m.insert("exp_next_surprisal", self.expect(|_, _, f, _| -Self::first_prob(f).ln()));
        m.insert("exp_next_probability", self.expect(|_, _, f, _| Self::first_prob(f)));
        m.insert(
            "exp_next_info_value",
            self.expect(|_, _, f, _| {
                [b'a', b'b', 0u8].iter().map(|&u| Self::first_prob(u) * cos_dist(e(f), e(u))).sum()
            }),
        );
        m.insert(
            "entropy",
            self.expect(|na, nb, _, len| {
                let prefix = P_A.powi(na as i32) * P_B.powi(nb as i32);
                -(if len == l { prefix } else { prefix * P_EOS }).ln()
            }),
        );
        let eiv: f64 = self
            .classes
            .iter()
            .map(|(&(na, nb, _, _), &p)| {
                p * self.expect(|ma, mb, _, _| cos_dist(toy_rep(na, nb), toy_rep(ma, mb)))
            })
            .sum();
        m.insert("exp_info_value", eiv);
        m.insert("pmi", P_B * m["probability"]);
        m.insert("sim_adjusted_surprisal", self.expect(|na, nb, _, _| 1.0 - cos_dist(toy_rep(na, nb), rep_w) / 2.0));
        m.insert("semantic_update", shift * m["probability"]);
        m
    }
}

fn warp(model: &GsModel, x: f64) -> f64 {
    model.warping.apply(x)
}

fn oracle_equivalence() -> Outcome {
    let lm = Memoryless::toy();
    let rep = toy_embeddings(&lm);
    let est = Estimator::new(&lm, Some(&rep));
    let a = lm.alphabet().encode(["a"]).unwrap();
    let b = lm.alphabet().encode(["b"]).unwrap();

    let h = -(P_A * P_A.ln() + P_B * P_B.ln() + P_EOS * P_EOS.ln());
    // Third column: values worked out by hand, kept at four decimals.
    #[allow(clippy::approx_constant)]
    let expected = [
        ("surprisal", -(P_A.ln()), 0.6931),
        ("probability", P_A, 0.5),
        ("exp_next_surprisal", h, 1.0297),
        ("exp_next_probability", P_A * P_A + P_B * P_B + P_EOS * P_EOS, 0.38),
        ("exp_next_info_value", 1.0 - (P_A * P_A + P_B * P_B + P_EOS * P_EOS), 0.62),
    ];
    for (name, derived, printed) in expected {
        close(&format!("{name} derivation"), derived, printed, 5e-5)?;
        let got = est.estimate_exact(&model(name), &a, &[]).map_err(|e| e.to_string())?.value;
        close(&format!("exact {name}"), got, derived, 1e-9)?;
    }
    // per-continuation next-symbol information value for v starting with "a"
    let dist = lm.next_distribution(&[]).unwrap();
    let g = gensurp_core::measures::score_next_symbol_info_value(&a, &dist, &rep).map_err(|e| e.to_string())?;
    close("next-symbol info value of v = a…", g, P_B + P_EOS, 1e-9)?;
    close("next-symbol info value printed", P_B + P_EOS, 0.5, 1e-12)?;

    let l = 20;
    let oracle = ToyOracle::new(l).expected_scores();
    let mut worst = String::new();
    let mut worst_err = 0.0;
    for m in GsModel::catalog(DEFAULT_EPSILON) {
        let want = warp(&m, oracle[m.name.as_str()]);
        let got = est
            .estimate_mc(&m, &a, &b, 1 << 15, l, 0)
            .map_err(|e| format!("{}: {e}", m.name))?
            .value;
        let (err, tol) = if m.warping.is_identity() {
            ((got - want).abs() / want.abs().max(1e-12), 0.01)
        } else {
            ((got - want).abs(), 0.02)
        };
        // identity-warped measures with a zero oracle value must estimate zero
        let ok = if m.warping.is_identity() && want == 0.0 { got == 0.0 } else { err <= tol };
        ensure(ok, || format!("MC {}: got {got}, oracle {want} (error {err:.5}, tolerance {tol})", m.name))?;
        if err > worst_err {
            worst_err = err;
            worst = m.name.clone();
        }
    }
    Ok(format!("exact values within 1e-9; 11 MC estimates within tolerance, worst {worst} at {worst_err:.4}"))
}

fn unbiasedness() -> Outcome {
    let lm = Memoryless::toy();
    let rep = toy_embeddings(&lm);
    let est = Estimator::new(&lm, Some(&rep));
    let a = lm.alphabet().encode(["a"]).unwrap();
    let b = lm.alphabet().encode(["b"]).unwrap();
    let (n, l, runs) = (64, 10, 200u64);
    let oracle = ToyOracle::new(l).expected_scores();
    let mut lines = Vec::new();
    for m in GsModel::catalog(DEFAULT_EPSILON).into_iter().filter(|m| m.warping.is_identity()) {
        let values: Vec<f64> = (0..runs)
            .map(|seed| est.estimate_mc(&m, &a, &b, n, l, 1000 + seed).map(|e| e.value))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mean = values.iter().sum::<f64>() / runs as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
        let se = sd / (runs as f64).sqrt();
        let want = oracle[m.name.as_str()];
        let z = if se > 0.0 { (mean - want) / se } else if mean == want { 0.0 } else { f64::INFINITY };
        ensure(z.abs() <= 3.0, || format!("{}: mean {mean}, oracle {want}, z = {z:.2}", m.name))?;
        lines.push(format!("{} z={z:+.2}", m.name));
    }
    Ok(lines.join(", "))
}

fn testbed(stimuli: usize, seed: u64) -> Testbed {
    Testbed::build(TestbedSpec {
        stimuli,
        seed,
        ..TestbedSpec::default()
    })
    .expect("testbed builds")
}

fn anticipatory_invariance() -> Outcome {
    let tb = testbed(60, 7);
    let rep = tb.embeddings.bind(tb.model.alphabet());
    let est = Estimator::new(&tb.model, Some(&rep));
    let items = tb.items();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let v = tb.model.alphabet().len() as u32;
    let mut checked = 0;
    for m in GsModel::catalog(DEFAULT_EPSILON).into_iter().filter(|m| m.anticipatory) {
        for _ in 0..20 {
            let item = &items[rng.random_range(0..items.len())];
            let mut draw = || -> TokenString {
                let len = rng.random_range(1..=3);
                (0..len).map(|_| Sym(rng.random_range(0..v))).collect()
            };
            let (w1, w2) = (draw(), draw());
            let seed = rng.random::<u64>();
            let x = est.estimate_mc(&m, &w1, &item.context, 64, 5, seed).map_err(|e| e.to_string())?;
            let y = est.estimate_mc(&m, &w2, &item.context, 64, 5, seed).map_err(|e| e.to_string())?;
            ensure(x.value.to_bits() == y.value.to_bits(), || {
                format!("{}: {} vs {} for two targets", m.name, x.value, y.value)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} target pairs bit-identical across 5 anticipatory measures"))
}

fn closed_form_identities() -> Outcome {
    let tb = testbed(500, 11);
    let est = Estimator::new(&tb.model, None);
    let items = tb.items();
    ensure(items.len() >= 500, || format!("only {} stimuli", items.len()))?;
    let (s, p) = (model("surprisal"), model("probability"));
    let mut worst_exp: f64 = 0.0;
    let mut worst_agg: f64 = 0.0;
    for (k, item) in items.iter().take(500).enumerate() {
        let sv = est.estimate_exact(&s, &item.target, &item.context).map_err(|e| e.to_string())?.value;
        let pv = est.estimate_exact(&p, &item.target, &item.context).map_err(|e| e.to_string())?.value;
        worst_exp = worst_exp.max(((-sv).exp() - pv).abs());
        // two-token word: this target plus the next stimulus target
        let next = &items[(k + 1) % items.len()].target;
        let word: TokenString = item.target.iter().chain(next.iter()).copied().collect();
        let mut ctx = item.context.to_vec();
        let mut sum_s = 0.0;
        let mut prod_p = 1.0;
        for &tok in word.iter() {
            let t = [tok];
            sum_s += est.estimate_exact(&s, &t, &ctx).map_err(|e| e.to_string())?.value;
            prod_p *= est.estimate_exact(&p, &t, &ctx).map_err(|e| e.to_string())?.value;
            ctx.push(tok);
        }
        let word_s = est.estimate_word_exact(&s, &word, &item.context).map_err(|e| e.to_string())?.value;
        worst_agg = worst_agg.max((sum_s + prod_p.ln()).abs()).max((word_s - sum_s).abs());
    }
    ensure(worst_exp <= 1e-12, || format!("exp(−surprisal) differs from probability by {worst_exp:e}"))?;
    ensure(worst_agg <= 1e-9, || format!("token aggregation differs by {worst_agg:e}"))?;
    Ok(format!("max |exp(−s) − p| = {worst_exp:.1e}; max aggregation gap = {worst_agg:.1e}"))
}

fn variance_trends() -> Outcome {
    let tb = Testbed::build(TestbedSpec {
        stimuli: 100,
        ..TestbedSpec::default()
    })
    .expect("testbed builds");
    let rep = tb.embeddings.bind(tb.model.alphabet());
    let est = Estimator::new(&tb.model, Some(&rep));
    let items: Vec<Item> = tb.items().into_iter().take(100).collect();
    let models: Vec<GsModel> = ["information_value", "exp_next_info_value", "entropy", "exp_info_value"]
        .iter()
        .map(|n| model(n))
        .collect();
    let grid = [1 << 2, 1 << 7, 1 << 9];
    let reports = variance_analysis(&est, &models, &items, &grid, 5, 1000, 17).map_err(|e| e.to_string())?;
    let find = |name: &str, n: usize| reports.iter().find(|r| r.measure == name && r.n == n).expect("report");
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for m in &models {
        let (lo, hi) = (find(&m.name, 1 << 2), find(&m.name, 1 << 9));
        if hi.mean_cv >= lo.mean_cv {
            failures.push(format!("{}: mean CV {} at N=512 not below {} at N=4", m.name, hi.mean_cv, lo.mean_cv));
        }
        let n_needed = if m.name == "entropy" { 1 << 9 } else { 1 << 7 };
        let rc_at = |n: usize| find(&m.name, n).resample_correlation.as_ref().map_or(f64::NAN, |r| r.mean);
        let rc = rc_at(n_needed);
        // Negated so that NaN counts as a failure.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(rc_at(1 << 7) >= rc_at(1 << 2)) {
            failures.push(format!("{}: resample correlation falls from N=4 to N=128", m.name));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(rc >= 0.99) {
            failures.push(format!("{}: resample correlation {rc:.4} at N={n_needed}", m.name));
        }
        summary.push(format!("{} CV {:.3}→{:.3}, r={rc:.4}@{n_needed}", m.name, lo.mean_cv, hi.mean_cv));
    }
    if failures.is_empty() {
        Ok(summary.join("; "))
    } else {
        Err(format!("{} ({})", failures.join("; "), summary.join("; ")))
    }
}

fn exact_vs_mc() -> Outcome {
    let tb = testbed(240, 5);
    let est = Estimator::new(&tb.model, None);
    let items = tb.items();
    ensure(items.len() >= 200, || format!("only {} stimuli", items.len()))?;
    let mut cols: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for item in &items {
        let batch = simulate_batch(&tb.model, &item.context, 1 << 9, 5, 23).map_err(|e| e.to_string())?;
        for name in ["probability", "surprisal"] {
            let m = model(name);
            let exact = est.estimate_exact(&m, &item.target, &item.context).map_err(|e| e.to_string())?.value;
            let mc = est
                .estimate_from_batch(&m, &item.target, &item.context, &batch, 5, 23)
                .map_err(|e| e.to_string())?
                .value;
            let e = cols.entry(name).or_default();
            e.0.push(exact);
            e.1.push(mc);
        }
    }
    let rp = pearson(&cols["probability"].0, &cols["probability"].1).map_err(|e| e.to_string())?;
    let rs = pearson(&cols["surprisal"].0, &cols["surprisal"].1).map_err(|e| e.to_string())?;
    let rho = spearman(&cols["surprisal"].0, &cols["probability"].0).map_err(|e| e.to_string())?;
    ensure(rp >= 0.95, || format!("probability exact-vs-MC r = {rp:.4}"))?;
    ensure(rs >= 0.90, || format!("surprisal exact-vs-MC r = {rs:.4}"))?;
    ensure(rho == -1.0, || format!("Spearman(surprisal, probability) = {rho}"))?;
    Ok(format!("{} stimuli: r(probability) = {rp:.4}, r(surprisal) = {rs:.4}, ρ = {rho}", items.len()))
}

// ---------- regression harness ----------

fn synthetic(n: usize, seed: u64, effect: f64, noise_sd: f64) -> (Vec<Stimulus>, PredictorValues, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stimuli = Vec::with_capacity(n);
    let mut est = PredictorValues::new();
    let mut ms = Vec::with_capacity(n);
    for i in 0..n {
        let z = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let len = rng.random_range(2..10usize);
        let ctx = rng.random_range(3..12usize);
        let freq = 10f64.powf(rng.random_range(0.0..4.0));
        let mut s = Stimulus::new(format!("i{i}"), format!("s{i}"), ctx, "x ".repeat(ctx), "y".repeat(len), freq);
        let m = z(&mut rng);
        let noise = noise_sd * z(&mut rng);
        let y = 0.3 * len as f64 - 0.2 * (freq + 1.0).ln() + 0.1 * ctx as f64 + effect * m + noise;
        s.measurements.insert("y".into(), Some(y));
        est.insert(
            s.item_id.clone(),
            [("m".to_string(), m), ("len_copy".to_string(), len as f64)].into(),
        );
        stimuli.push(s);
        ms.push(m);
    }
    (stimuli, est, ms)
}

fn regression_calibration() -> Outcome {
    // y = baseline + 2·m + noise: the partial share of m is 4 / (4 + σ²) of
    // the variance left after the baseline
    let (effect, noise_sd) = (2.0, 2.0);
    let (stimuli, est, _) = synthetic(3000, 1, effect, noise_sd);
    let spec = RegressionSpec::new("y", vec!["m".into()]);
    let report = delta_r2_cv(&spec, &stimuli, &est).map_err(|e| e.to_string())?;
    // total variance: baseline part computed from the sample, m part 4, noise 4
    let baseline_var = {
        let vals: Vec<f64> = stimuli
            .iter()
            .map(|s| {
                0.3 * s.target_length as f64 - 0.2 * (s.frequency + 1.0).ln() + 0.1 * s.context_length as f64
            })
            .collect();
        let mu = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / vals.len() as f64
    };
    let analytic = effect * effect / (baseline_var + effect * effect + noise_sd * noise_sd);
    close("ΔR² recovery", report.mean, analytic, 0.02)?;
    ensure(report.p_value < 0.001, || format!("planted effect p = {}", report.p_value))?;

    let redundant = RegressionSpec::new("y", vec!["len_copy".into()]);
    let red = delta_r2_cv(&redundant, &stimuli, &est).map_err(|e| e.to_string())?;
    ensure(red.mean.abs() < 0.005, || format!("redundant ΔR² mean {}", red.mean))?;

    let mut above = 0;
    for run in 0..100u64 {
        let (st, es, _) = synthetic(300, 10_000 + run, 0.0, 1.0);
        let spec = RegressionSpec {
            seeds: 20,
            seed: run,
            permutation_resamples: 2000,
            ..RegressionSpec::new("y", vec!["m".into()])
        };
        let rep = delta_r2_cv(&spec, &st, &es).map_err(|e| e.to_string())?;
        if rep.p_value > 0.01 {
            above += 1;
        }
    }
    ensure(above >= 90, || format!("only {above}/100 null runs had p > 0.01"))?;
    Ok(format!(
        "ΔR² {:.4} vs analytic {analytic:.4}; p = {:.1e}; redundant mean {:.1e}; null p > 0.01 in {above}/100",
        report.mean, report.p_value, red.mean
    ))
}

fn ols_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 200;
    let beta = [1.5, -2.0, 0.25, 3.0];
    let x = DMatrix::from_fn(n, 4, |_, j| if j == 0 { 1.0 } else { rng.random_range(-5.0..5.0) });
    let y = &x * DVector::from_row_slice(&beta);
    let fit = ols_fit(&x, &y);
    for (j, b) in beta.iter().enumerate() {
        close(&format!("β{j}"), fit.coefficients[j], *b, 1e-9)?;
    }

    let noisy: DVector<f64> = y.map(|v| v + Distribution::<f64>::sample(&StandardNormal, &mut rng) * 4.0);
    let (train, test) = (0..150, 150..n);
    let fit_r2 = |x: &DMatrix<f64>| {
        let f = ols_fit(&x.rows(train.start, train.len()).into_owned(), &noisy.rows(train.start, train.len()).into_owned());
        r2(&(x.rows(test.start, test.len()) * &f.coefficients), &noisy.rows(test.start, test.len()).into_owned())
    };
    let before = fit_r2(&x);
    let mut shifted = x.clone();
    shifted.column_mut(2).iter_mut().for_each(|v| *v = *v * 1000.0 + 7.0);
    let after = fit_r2(&shifted);
    close("R² under affine rescaling", after, before, 1e-9)?;
    Ok(format!("coefficients to 1e-9; held-out R² {before:.6} unchanged by rescaling (Δ {:.1e})", (after - before).abs()))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "oracle equivalence",
            limit: Some(Duration::from_secs(120)),
            run: oracle_equivalence,
        },
        Criterion {
            name: "unbiasedness",
            limit: None,
            run: unbiasedness,
        },
        Criterion {
            name: "anticipatory invariance",
            limit: None,
            run: anticipatory_invariance,
        },
        Criterion {
            name: "closed-form identities",
            limit: None,
            run: closed_form_identities,
        },
        Criterion {
            name: "variance trends",
            limit: Some(Duration::from_secs(30 * 60)),
            run: variance_trends,
        },
        Criterion {
            name: "exact-vs-MC correlation",
            limit: None,
            run: exact_vs_mc,
        },
        Criterion {
            name: "regression harness calibration",
            limit: None,
            run: regression_calibration,
        },
        Criterion {
            name: "OLS correctness",
            limit: None,
            run: ols_correctness,
        },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, c.limit) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:.1?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {:<32} {:>8.2}s  {detail}", c.name, elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:<32} {:>8.2}s  {detail}", c.name, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        if std::env::var_os("GENSURP_ACCEPTANCE_STRICT").is_some() {
            ExitCode::FAILURE
        } else {
            println!("set GENSURP_ACCEPTANCE_STRICT=1 to turn failures into a non-zero exit");
            ExitCode::SUCCESS
        }
    } else {
        println!("all criteria passed");
        ExitCode::SUCCESS
    }
}

//! Invariants of links, likelihood, fitting, sampling, the multinomial
//! decomposition and model comparison.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skewlink::bayes::{run_mcmc, sample, McmcOptions, PriorSpec};
use skewlink::data::{finney1947, grazeffe2008, MultinomialRow};
use skewlink::likelihood::{gradient, hessian, log_likelihood};
use skewlink::links::{
    ag_skewness, cloglog_limit_gap, moment_skewness, AG_SKEWNESS_FLOOR, LOGIT_APPROXIMANT, MOMENT_SKEWNESS_FLOOR,
    PROBIT_APPROXIMANT,
};
use skewlink::mle::{fit_mle, FitOptions, FitResult};
use skewlink::multinomial::{
    category_probs, decompose, fit_multinomial, multinomial_metrics, probs_from_thetas, thetas_from_probs,
    MultinomialMethod,
};
use skewlink::selection::{aic, bic, compare, ks_mae, SortKey};
use skewlink::special::norm_cdf;
use skewlink::{
    ComparisonRow, GroupedDataset, GroupedRow, LinkFamily, LinkKind, MultinomialDataset, MultinomialFit, ParamVector,
};

fn link_of(kind: LinkKind, gamma: f64) -> LinkFamily {
    LinkFamily::new(kind, kind.has_shape().then_some(gamma)).unwrap()
}

fn small_dataset(rng: &mut ChaCha8Rng, n_rows: usize) -> GroupedDataset {
    let rows = (0..n_rows)
        .map(|_| {
            let trials = rng.random_range(1..=12);
            GroupedRow {
                x: vec![1.0, rng.random_range(0.0..2.0)],
                successes: rng.random_range(0..=trials),
                trials,
            }
        })
        .collect();
    GroupedDataset::new(rows, vec!["(intercept)".into(), "x".into()]).unwrap()
}

fn short_chain() -> McmcOptions {
    McmcOptions {
        seed: 11,
        n_burn: 500,
        n_keep: 400,
        thin: 2,
        initial: None,
    }
}

fn finney_prior() -> PriorSpec {
    PriorSpec::hierarchical(9.0, 100.0, vec![0.25, 0.8, 0.1, -0.15], 25.0).unwrap()
}

/// Monte Carlo standard error of a mean by non-overlapping batch means.
fn batch_mean_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (var / means.len() as f64).sqrt()
}

// ---------------------------------------------------------------- links

proptest! {
    #[test]
    fn forward_then_inverse_link_roundtrips(
        kind_ix in 0usize..6,
        gamma in 0.2f64..25.0,
        mu in 1e-9f64..(1.0 - 1e-9),
    ) {
        let link = link_of(LinkKind::ALL[kind_ix], gamma);
        let eta = link.forward_link(mu).unwrap();
        let back = link.inverse_link(eta);
        prop_assert!((back - mu).abs() < 1e-10, "{link}: mu {mu} -> eta {eta} -> {back}");
    }
}

#[test]
fn inverse_links_are_monotone_on_a_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid: Vec<f64> = (0..1000).map(|i| -6.0 + 12.0 * i as f64 / 999.0).collect();
    for _ in 0..50 {
        let gamma = (rng.random_range(-3.0f64..6.0)).exp();
        for kind in LinkKind::ALL {
            let link = link_of(kind, gamma);
            let sign = if kind == LinkKind::ReflectedWeibull { -1.0 } else { 1.0 };
            let vals: Vec<f64> = grid.iter().map(|&e| link.inverse_link(e)).collect();
            for w in vals.windows(2) {
                assert!(sign * (w[1] - w[0]) >= 0.0, "{link} not monotone: {w:?}");
            }
        }
    }
}

#[test]
fn skewness_stays_above_its_floors() {
    for i in 0..=2000 {
        let gamma = (0.05f64.ln() + (500.0f64 / 0.05).ln() * i as f64 / 2000.0).exp();
        let m = moment_skewness(gamma);
        let a = ag_skewness(gamma);
        assert!(m > MOMENT_SKEWNESS_FLOOR, "moment skewness {m} at gamma {gamma}");
        assert!(a > AG_SKEWNESS_FLOOR, "AG skewness {a} at gamma {gamma}");
        if gamma >= 1.0 {
            assert!(m <= 2.0 + 1e-12, "moment skewness {m} above 2 at gamma {gamma}");
        }
    }
    assert!((moment_skewness(1.0) - 2.0).abs() < 1e-12);
}

fn sup_distance(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    (0..=6000)
        .map(|i| lo + (hi - lo) * i as f64 / 6000.0)
        .map(|e| (f(e) - g(e)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn weibull_approximants_track_probit_and_logit() {
    let probit = sup_distance(|e| PROBIT_APPROXIMANT.eval(e), norm_cdf, -3.0, 3.0);
    let logit = sup_distance(|e| LOGIT_APPROXIMANT.eval(e), |e| 1.0 / (1.0 + (-e).exp()), -4.0, 4.0);
    assert!(probit < 0.02, "probit sup-norm {probit}");
    assert!(logit < 0.02, "logit sup-norm {logit}");
}

#[test]
fn cloglog_gap_shrinks_with_shape_away_from_zero() {
    for eta in [-2.0, -1.0, 1.0, 2.0] {
        let gaps: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&g| cloglog_limit_gap(eta, g).unwrap()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "eta {eta}: {gaps:?}");
        assert!(gaps[2] < 1e-3, "eta {eta}: {gaps:?}");
    }
    assert!(cloglog_limit_gap(1.0, 1e4).unwrap() < 1e-3);
    assert!(cloglog_limit_gap(-2.0, 1e6).unwrap() < 1e-4);
}

#[test]
fn cloglog_gap_vanishes_identically_at_zero() {
    for g in [1e2, 1e3, 1e4] {
        assert_eq!(cloglog_limit_gap(0.0, g).unwrap(), 0.0);
    }
}

// ----------------------------------------------------------- likelihood

#[test]
fn grouped_and_bernoulli_likelihoods_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let data = small_dataset(&mut rng, 6);
        let bern = data.to_bernoulli();
        let params = ParamVector::new(rng.random_range(0.5..5.0), vec![rng.random_range(0.2..1.0), rng.random_range(0.0..0.5)]).unwrap();
        for kind in LinkKind::ALL {
            let link = link_of(kind, 2.0);
            let p = if kind.has_shape() { params.clone() } else { ParamVector::fixed(params.beta.clone()) };
            let a = log_likelihood(&p, &data, &link).unwrap();
            let b = log_likelihood(&p, &bern, &link).unwrap();
            assert!((a - b).abs() < 1e-9, "{kind}: {a} vs {b}");
        }
        for kind in [LinkKind::Weibull, LinkKind::ReflectedWeibull] {
            let (ga, gb) = (gradient(&params, &data, kind).unwrap(), gradient(&params, &bern, kind).unwrap());
            assert!(ga.iter().zip(&gb).all(|(x, y)| (x - y).abs() < 1e-9), "{ga:?} vs {gb:?}");
            let (ha, hb) = (hessian(&params, &data, kind).unwrap(), hessian(&params, &bern, kind).unwrap());
            for i in 0..ha.rows() {
                for j in 0..ha.cols() {
                    assert!((ha[(i, j)] - hb[(i, j)]).abs() < 1e-9);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn likelihood_ignores_row_order(order in Just((0..17).collect::<Vec<usize>>()).prop_shuffle()) {
        let data = finney1947();
        let shuffled = data.permuted(&order).unwrap();
        let params = ParamVector::new(3.2, vec![0.26, 0.79, 0.11, -0.15]).unwrap();
        let link = LinkFamily::weibull(3.2).unwrap();
        let a = log_likelihood(&params, &data, &link).unwrap();
        let b = log_likelihood(&params, &shuffled, &link).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

// ------------------------------------------------------------------ MLE

#[test]
fn logit_fit_recovers_a_known_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let truth = [-0.5, 1.2];
    let rows = (0..10)
        .map(|i| {
            let x = -1.0 + 0.25 * i as f64;
            let p = 1.0 / (1.0 + (-(truth[0] + truth[1] * x)).exp());
            let successes = (0..200).filter(|_| rng.random::<f64>() < p).count() as u64;
            GroupedRow {
                x: vec![1.0, x],
                successes,
                trials: 200,
            }
        })
        .collect();
    let data = GroupedDataset::new(rows, vec!["(intercept)".into(), "x".into()]).unwrap();
    let fit = fit_mle(&data, &LinkFamily::Logit, &FitOptions::default()).unwrap();
    let se = fit.std_errors.clone().unwrap();
    for j in 0..2 {
        assert!((fit.params.beta[j] - truth[j]).abs() < 3.0 * se[j], "beta {j}: {:?} se {se:?}", fit.params.beta);
    }
    // lattice oracle: no grid point beats the fit
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=200 {
        for j in 0..=200 {
            let b = [truth[0] - 0.5 + i as f64 * 0.005, truth[1] - 0.5 + j as f64 * 0.005];
            let ll = log_likelihood(&ParamVector::fixed(b.to_vec()), &data, &LinkFamily::Logit).unwrap();
            if ll > best.0 {
                best = (ll, b[0], b[1]);
            }
        }
    }
    assert!(fit.log_lik >= best.0 - 1e-9);
    assert!((fit.params.beta[0] - best.1).abs() <= 0.005 && (fit.params.beta[1] - best.2).abs() <= 0.005);
}

#[test]
fn weibull_fit_is_never_worse_than_cloglog() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sets = vec![finney1947()];
    sets.extend((0..4).map(|_| small_dataset(&mut rng, 8)));
    for data in &sets {
        let opts = FitOptions::default();
        let (Ok(w), Ok(c)) = (
            fit_mle(data, &LinkFamily::weibull(3.6).unwrap(), &opts),
            fit_mle(data, &LinkFamily::Cloglog, &opts),
        ) else {
            continue;
        };
        assert!(w.log_lik >= c.log_lik - 0.01, "weibull {} vs cloglog {}", w.log_lik, c.log_lik);
    }
}

#[test]
fn fits_are_deterministic_and_order_free() {
    let data = finney1947();
    let link = LinkFamily::weibull(3.6).unwrap();
    let a = fit_mle(&data, &link, &FitOptions::default()).unwrap();
    let b = fit_mle(&data, &link, &FitOptions::default()).unwrap();
    assert_eq!(a, b);
    let rev: Vec<usize> = (0..data.len()).rev().collect();
    let c = fit_mle(&data.permuted(&rev).unwrap(), &LinkFamily::Probit, &FitOptions::default()).unwrap();
    let d = fit_mle(&data, &LinkFamily::Probit, &FitOptions::default()).unwrap();
    assert!((c.log_lik - d.log_lik).abs() < 1e-9);
}

// ------------------------------------------------------------------ MCMC

#[test]
fn chains_are_reproducible_by_seed() {
    let data = finney1947();
    let link = LinkFamily::weibull(3.6).unwrap();
    let a = run_mcmc(&data, &link, &finney_prior(), &short_chain()).unwrap();
    let b = run_mcmc(&data, &link, &finney_prior(), &short_chain()).unwrap();
    assert_eq!(a, b);
    let c = run_mcmc(&data, &link, &finney_prior(), &McmcOptions { seed: 12, ..short_chain() }).unwrap();
    assert_ne!(a.draws, c.draws);
}

#[test]
fn draws_respect_prior_support() {
    let data = finney1947();
    let link = LinkFamily::weibull(3.6).unwrap();
    let noninf = run_mcmc(&data, &link, &PriorSpec::noninformative(2.0).unwrap(), &short_chain()).unwrap();
    assert!(noninf.column(0).iter().all(|&g| g > 1.0));
    let hier = run_mcmc(&data, &link, &finney_prior(), &short_chain()).unwrap();
    assert!(hier.column(0).iter().all(|&g| g > 0.0));
    assert!(hier.acceptance_rate > 0.0 && hier.acceptance_rate < 1.0);
}

#[test]
fn sampler_reproduces_a_standard_normal() {
    let opts = McmcOptions {
        seed: 2024,
        n_burn: 10_000,
        n_keep: 50_000,
        thin: 5,
        initial: None,
    };
    let out = sample(|x| -0.5 * x[0] * x[0], &[0.0], &opts).unwrap();
    let xs: Vec<f64> = out.draws.iter().map(|d| d[0]).collect();
    assert_eq!(xs.len(), 50_000);
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    assert!(m.abs() < 0.05, "mean {m}");
    assert!((0.93..=1.07).contains(&sd), "sd {sd}");
}

#[test]
fn prior_only_chain_matches_prior_means() {
    let empty = GroupedDataset::empty(vec!["(intercept)".into(), "x".into()]).unwrap();
    let prior = PriorSpec::hierarchical(3.0, 1.0, vec![0.5, -1.0], 4.0).unwrap();
    let opts = McmcOptions {
        seed: 8,
        n_burn: 5_000,
        n_keep: 20_000,
        thin: 5,
        initial: None,
    };
    let chain = run_mcmc(&empty, &LinkFamily::weibull(3.0).unwrap(), &prior, &opts).unwrap();
    for (j, target) in [3.0, 0.5, -1.0].into_iter().enumerate() {
        let col = chain.column(j);
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let se = batch_mean_se(&col, 50);
        assert!((m - target).abs() < 3.0 * se, "param {j}: mean {m}, target {target}, se {se}");
    }
}

// ----------------------------------------------------------- multinomial

fn logit_sub_fit(beta: Vec<f64>) -> FitResult {
    FitResult {
        link: LinkFamily::Logit,
        params: ParamVector::fixed(beta),
        std_errors: None,
        std_error_note: None,
        log_lik: 0.0,
        n_obs: 0,
        n_params: 2,
        converged: true,
        n_evals: 0,
        restarts: 0,
        fitted: Vec::new(),
        note: None,
    }
}

proptest! {
    #[test]
    fn category_probabilities_sum_to_one(
        k in 2usize..=6,
        coefs in prop::collection::vec((-4.0f64..4.0, -2.0f64..2.0), 5),
        x in -3.0f64..3.0,
        thetas in prop::collection::vec(0.0f64..=1.0, 5),
    ) {
        let fit = MultinomialFit {
            link: LinkFamily::Logit,
            sub_fits: coefs[..k - 1].iter().map(|&(a, b)| logit_sub_fit(vec![a, b])).collect(),
            chains: None,
            converged: true,
            category_labels: (0..k).map(|i| i.to_string()).collect(),
        };
        let p = category_probs(&fit, &[1.0, x]);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let q = probs_from_thetas(&thetas[..k - 1]);
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thetas_and_probabilities_roundtrip(w in prop::collection::vec(0.01f64..1.0, 2..=6)) {
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|v| v / total).collect();
        let back = probs_from_thetas(&thetas_from_probs(&p));
        for (a, b) in p.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposed_trials_chain_down(
        rows in prop::collection::vec(prop::collection::vec(0u64..50, 3), 1..6),
        last in prop::collection::vec(1u64..50, 6),
    ) {
        let rows: Vec<MultinomialRow> = rows
            .into_iter()
            .zip(&last)
            .enumerate()
            .map(|(i, (mut counts, &l))| {
                counts.push(l);
                MultinomialRow { x: vec![1.0, i as f64], counts }
            })
            .collect();
        let data = MultinomialDataset::new(
            rows.clone(),
            vec!["(intercept)".into(), "x".into()],
            (0..4).map(|i| i.to_string()).collect(),
        )
        .unwrap();
        let z = decompose(&data);
        prop_assert_eq!(z.len(), 3);
        for (i, r) in rows.iter().enumerate() {
            prop_assert_eq!(z[0].rows()[i].trials, r.counts.iter().sum::<u64>());
            for k in 1..3 {
                let prev = &z[k - 1].rows()[i];
                prop_assert_eq!(z[k].rows()[i].trials, prev.trials - prev.successes);
            }
        }
    }
}

#[test]
fn multinomial_likelihood_factorizes() {
    for link in [LinkFamily::Logit, LinkFamily::reflected_weibull(3.6).unwrap()] {
        let data = grazeffe2008();
        let fit = fit_multinomial(&data, &link, &MultinomialMethod::Mle(FitOptions::default())).unwrap();
        let total = multinomial_metrics(&fit, &data).unwrap().log_lik;
        let parts: f64 = fit.sub_fits.iter().map(|f| f.log_lik).sum();
        assert!((total - parts).abs() < 1e-9, "{link}: {total} vs {parts}");
    }
}

#[test]
fn two_category_multinomial_is_the_binomial_fit() {
    let bin = finney1947();
    let rows = bin
        .rows()
        .iter()
        .map(|r| MultinomialRow {
            x: r.x.clone(),
            counts: vec![r.successes, r.trials - r.successes],
        })
        .collect();
    let multi = MultinomialDataset::new(rows, bin.covariate_names().to_vec(), vec!["dead".into(), "alive".into()]).unwrap();
    for link in [LinkFamily::Probit, LinkFamily::weibull(3.6).unwrap()] {
        let direct = fit_mle(&bin, &link, &FitOptions::default()).unwrap();
        let via = fit_multinomial(&multi, &link, &MultinomialMethod::Mle(FitOptions::default())).unwrap();
        assert_eq!(via.sub_fits[0].params, direct.params);
        let m = multinomial_metrics(&via, &multi).unwrap();
        assert!((m.log_lik - direct.log_lik).abs() < 1e-9);
    }
}

// -------------------------------------------------------------- selection

fn comparison_row(model: String, aic: Option<f64>) -> ComparisonRow {
    ComparisonRow {
        model,
        dataset: "d".into(),
        log_lik: 0.0,
        aic,
        bic: None,
        dic: None,
        p_d: None,
        ks: 0.0,
        mae: 0.0,
        n_params: 1,
        n_obs: 1,
    }
}

proptest! {
    #[test]
    fn ks_dominates_mae(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
        let (o, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (ks, mae) = ks_mae(&o, &p).unwrap();
        prop_assert!(ks >= mae);
    }

    #[test]
    fn compare_ignores_input_order(
        aics in prop::collection::vec(prop::option::of(0u8..4), 1..8),
        seed in any::<u64>(),
    ) {
        let rows: Vec<ComparisonRow> = aics
            .iter()
            .enumerate()
            .map(|(i, a)| comparison_row(format!("m{i}"), a.map(f64::from)))
            .collect();
        let mut shuffled = rows.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(compare(rows, SortKey::Aic).unwrap(), compare(shuffled, SortKey::Aic).unwrap());
    }
}

#[test]
fn information_criteria_recompute_exactly() {
    let data = finney1947();
    for link in [LinkFamily::weibull(3.6).unwrap(), LinkFamily::Cloglog, LinkFamily::Probit, LinkFamily::Logit] {
        let fit = fit_mle(&data, &link, &FitOptions::default()).unwrap();
        let row = ComparisonRow::from_fit(link.kind().name(), &fit, &data).unwrap();
        let p = fit.n_params as f64;
        assert!((row.aic.unwrap() - (-2.0 * fit.log_lik + 2.0 * p)).abs() < 1e-9);
        assert!((row.bic.unwrap() - (-2.0 * fit.log_lik + p * 818f64.ln())).abs() < 1e-9);
        assert_eq!(row.aic.unwrap(), aic(fit.log_lik, fit.n_params));
        assert_eq!(row.bic.unwrap(), bic(fit.log_lik, fit.n_params, 818));
    }
}

//! Held-out perplexity, UMass coherence and topic-count selection.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gibbs::{fit_topic_model, TopicModel, TopicWordDist};
use super::{TokenizedDoc, TopicModelConfig};
use crate::error::{Error, Result};

pub const FOLD_IN_SWEEPS: usize = 100;
const FOLD_IN_SEED_OFFSET: u64 = 0x0f01_d1e5;

/// θ for an unseen document with φ held fixed.
fn fold_in(
    words: &[Option<usize>],
    dist: &TopicWordDist,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let k = dist.k();
    let mut counts = vec![0u32; k];
    let mut z = Vec::with_capacity(words.len());
    for _ in words {
        let t = rng.gen_range(0..k);
        counts[t] += 1;
        z.push(t);
    }
    if k > 1 {
        let mut cumulative = vec![0.0; k];
        for _ in 0..FOLD_IN_SWEEPS {
            for (n, &w) in words.iter().enumerate() {
                counts[z[n]] -= 1;
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (counts[t] as f64 + alpha) * dist.prob(t, w);
                    cumulative[t] = acc;
                }
                let u = rng.gen::<f64>() * acc;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
                z[n] = new;
                counts[new] += 1;
            }
        }
    }
    let denom = words.len() as f64 + k as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// exp(−Σ log Σ_j θ(d,j)·φ(j,w) / N) over held-out tokens, θ by fold-in.
pub fn perplexity_with(
    dist: &TopicWordDist,
    alpha: f64,
    heldout: &[TokenizedDoc],
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loglik = 0.0;
    let mut n_tokens = 0usize;
    for doc in heldout {
        if doc.tokens.is_empty() {
            continue;
        }
        let ids: Vec<Option<usize>> = doc.tokens.iter().map(|t| dist.word_id(t)).collect();
        let theta = fold_in(&ids, dist, alpha, &mut rng);
        for &w in &ids {
            let p: f64 = theta
                .iter()
                .enumerate()
                .map(|(t, th)| th * dist.prob(t, w))
                .sum();
            loglik += p.ln();
        }
        n_tokens += ids.len();
    }
    if n_tokens == 0 {
        return Err(Error::input("held-out set has no tokens"));
    }
    Ok((-loglik / n_tokens as f64).exp())
}

pub fn perplexity(model: &TopicModel, heldout: &[TokenizedDoc]) -> Result<f64> {
    perplexity_with(
        model.words(),
        model.alpha(),
        heldout,
        model.config().seed.wrapping_add(FOLD_IN_SEED_OFFSET),
    )
}

/// log((D(w_i, w_j) + 1) / D(w_j)), `higher_docs` being the document
/// frequency of the higher-ranked word.
pub fn umass_pair_score(co_docs: usize, higher_docs: usize) -> f64 {
    ((co_docs + 1) as f64 / higher_docs as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub mean: f64,
    pub per_topic: Vec<f64>,
    /// Topics with fewer than `top_n` distinct assigned words.
    pub short_topics: Vec<usize>,
}

/// Mean UMass coherence of the topics' top words, with document
/// frequencies counted on `corpus`.
pub fn coherence_umass(
    model: &TopicModel,
    corpus: &[TokenizedDoc],
    top_n: usize,
) -> Result<CoherenceReport> {
    if top_n < 2 {
        return Err(Error::config("coherence needs top_n >= 2"));
    }
    let dist = model.words();
    let tops: Vec<Vec<usize>> = (0..model.k()).map(|t| model.top_words(t, top_n)).collect();
    let needed: HashSet<usize> = tops.iter().flatten().copied().collect();

    // document bitsets for the words that appear in some top list
    let blocks = corpus.len().div_ceil(64);
    let mut bits: std::collections::HashMap<usize, Vec<u64>> =
        needed.iter().map(|&w| (w, vec![0u64; blocks])).collect();
    for (d, doc) in corpus.iter().enumerate() {
        for tok in &doc.tokens {
            if let Some(set) = dist.word_id(tok).and_then(|w| bits.get_mut(&w)) {
                set[d / 64] |= 1 << (d % 64);
            }
        }
    }
    let df = |w: usize| -> usize { bits[&w].iter().map(|b| b.count_ones() as usize).sum() };
    let co = |a: usize, b: usize| -> usize {
        bits[&a]
            .iter()
            .zip(&bits[&b])
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    };

    let mut per_topic = Vec::with_capacity(tops.len());
    let mut short_topics = Vec::new();
    for (t, words) in tops.iter().enumerate() {
        if words.len() < top_n {
            short_topics.push(t);
        }
        let mut score = 0.0;
        for i in 1..words.len() {
            for j in 0..i {
                let higher = df(words[j]);
                if higher == 0 {
                    return Err(Error::input(format!(
                        "top word `{}` of topic {t} does not occur in the coherence corpus",
                        dist.vocab()[words[j]]
                    )));
                }
                score += umass_pair_score(co(words[i], words[j]), higher);
            }
        }
        per_topic.push(score);
    }
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport {
        mean,
        per_topic,
        short_topics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicQualityPoint {
    pub k: usize,
    pub perplexity: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<TopicQualityPoint>,
    pub selected_k: usize,
}

/// Picks the K with the smallest perplexity rank + coherence rank
/// (competition ranking; ties go to the smaller K).
pub fn select_by_rank_sum(points: &[TopicQualityPoint]) -> Option<usize> {
    let rank_sum = |p: &TopicQualityPoint| {
        let perp = points
            .iter()
            .filter(|q| q.perplexity < p.perplexity)
            .count();
        let coh = points.iter().filter(|q| q.coherence > p.coherence).count();
        perp + coh
    };
    points
        .iter()
        .min_by(|a, b| rank_sum(a).cmp(&rank_sum(b)).then(a.k.cmp(&b.k)))
        .map(|p| p.k)
}

/// Every `every`-th document (1-based positions every, 2·every, ...) goes to
/// the held-out set.
pub fn split_heldout(
    docs: &[TokenizedDoc],
    every: usize,
) -> Result<(Vec<TokenizedDoc>, Vec<TokenizedDoc>)> {
    if every < 2 {
        return Err(Error::config("held-out stride must be at least 2"));
    }
    let (mut train, mut heldout) = (Vec::new(), Vec::new());
    for (i, d) in docs.iter().enumerate() {
        if i % every == every - 1 {
            heldout.push(d.clone());
        } else {
            train.push(d.clone());
        }
    }
    Ok((train, heldout))
}

/// Fits one model per K (seed = template seed + K) and scores each.
pub fn sweep_topic_counts(
    train: &[TokenizedDoc],
    heldout: &[TokenizedDoc],
    ks: &[usize],
    template: &TopicModelConfig,
    top_n: usize,
) -> Result<SweepResult> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::config("topic sweep needs at least one K"));
    }
    let points = ks
        .par_iter()
        .map(|&k| {
            let config = TopicModelConfig {
                k,
                seed: template.seed.wrapping_add(k as u64),
                ..template.clone()
            };
            let model = fit_topic_model(train, &config)?;
            Ok(TopicQualityPoint {
                k,
                perplexity: perplexity(&model, heldout)?,
                coherence: coherence_umass(&model, train, top_n)?.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let selected_k = select_by_rank_sum(&points).expect("non-empty sweep");
    Ok(SweepResult { points, selected_k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> TokenizedDoc {
        TokenizedDoc {
            doc_id: id.into(),
            tokens: text.split_whitespace().map(str::to_string).collect(),
        }
    }

    fn cfg(k: usize) -> TopicModelConfig {
        TopicModelConfig {
            iterations: 30,
            burn_in: 0,
            ..TopicModelConfig::new(k, 5)
        }
    }

    #[test]
    fn uniform_model_perplexity_is_vocabulary_size() {
        let vocab: Vec<String> = (0..37).map(|i| format!("w{i}")).collect();
        let heldout = vec![doc("h1", "w1 w2 w3 w3 w30"), doc("h2", "w0 unseen w36")];
        for k in [1, 3] {
            let dist = TopicWordDist::uniform(vocab.clone(), k);
            let p = perplexity_with(&dist, 0.5, &heldout, 1).unwrap();
            assert!((p - 37.0).abs() <= 37.0 * 1e-12, "{p}");
        }
    }

    #[test]
    fn perplexity_is_at_least_one() {
        let corpus = vec![doc("a", "x y z x"), doc("b", "p q p q r")];
        let m = fit_topic_model(&corpus, &cfg(2)).unwrap();
        assert!(perplexity(&m, &corpus).unwrap() >= 1.0);
        assert!(perplexity(&m, &[doc("e", "")]).is_err());
    }

    #[test]
    fn unseen_words_keep_finite_perplexity() {
        let m = fit_topic_model(&[doc("a", "x y z")], &cfg(2)).unwrap();
        let p = perplexity(&m, &[doc("h", "never seen before")]).unwrap();
        assert!(p.is_finite() && p > 1.0);
    }

    #[test]
    fn two_symbol_document_approaches_perplexity_two() {
        // the empirical unigram distribution is (1/2, 1/2)
        let corpus = vec![doc("a", "a a b b")];
        let config = TopicModelConfig {
            alpha: Some(1e-9),
            beta: 1e-9,
            ..cfg(1)
        };
        let m = fit_topic_model(&corpus, &config).unwrap();
        assert!((perplexity(&m, &corpus).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn pair_score_matches_hand_value() {
        assert!((umass_pair_score(5, 10) - (0.6f64).ln()).abs() < 1e-15);
        assert!((umass_pair_score(5, 10) + 0.5108).abs() < 1e-4);
        assert!(umass_pair_score(1000, 1000) > 0.0 && umass_pair_score(1000, 1000) < 1e-3);
    }

    #[test]
    fn always_cooccurring_pair_scores_log_eleven_tenths() {
        let corpus: Vec<_> = (0..10)
            .map(|i| doc(&format!("d{i}"), "alpha beta"))
            .collect();
        let m = fit_topic_model(&corpus, &cfg(1)).unwrap();
        let c = coherence_umass(&m, &corpus, 2).unwrap();
        assert!((c.mean - (11.0f64 / 10.0).ln()).abs() < 1e-15);
        assert!(c.short_topics.is_empty());
    }

    #[test]
    fn short_topics_are_flagged() {
        let corpus = vec![doc("a", "x y"), doc("b", "x y")];
        let m = fit_topic_model(&corpus, &cfg(1)).unwrap();
        let c = coherence_umass(&m, &corpus, 10).unwrap();
        assert_eq!(c.short_topics, [0]);
        assert!(coherence_umass(&m, &corpus, 1).is_err());
    }

    #[test]
    fn rank_sum_selection() {
        let pt = |k, perplexity, coherence| TopicQualityPoint {
            k,
            perplexity,
            coherence,
        };
        assert_eq!(select_by_rank_sum(&[pt(7, 10.0, -3.0)]), Some(7));
        let dominated = [pt(2, 50.0, -9.0), pt(4, 20.0, -1.0), pt(8, 30.0, -2.0)];
        assert_eq!(select_by_rank_sum(&dominated), Some(4));
        // 2 and 8 both sum to 1 + 0; the smaller K wins
        let tied = [pt(2, 30.0, -1.0), pt(8, 20.0, -2.0)];
        assert_eq!(select_by_rank_sum(&tied), Some(2));
        assert_eq!(select_by_rank_sum(&[]), None);
    }

    #[test]
    fn heldout_split_is_strided() {
        let docs: Vec<_> = (0..10).map(|i| doc(&format!("d{i}"), "x")).collect();
        let (train, held) = split_heldout(&docs, 5).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(
            held.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(),
            ["d4", "d9"]
        );
        assert!(split_heldout(&docs, 1).is_err());
    }
}

//! Collapsed Gibbs sampling for a latent Dirichlet topic model.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, DocTopicDist, TokenizedDoc, TopicAssignment, TopicModelConfig};
use crate::error::{Error, Result};

/// Topic-word probabilities φ(j, w) over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicWordDist {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    phi: Vec<Vec<f64>>,
    /// Probability of a word outside the vocabulary, per topic.
    unseen: Vec<f64>,
}

impl TopicWordDist {
    pub fn new(vocab: Vec<String>, phi: Vec<Vec<f64>>, unseen: Vec<f64>) -> Result<Self> {
        if phi.is_empty() || phi.len() != unseen.len() {
            return Err(Error::Logic(
                "phi and unseen must have one row per topic".into(),
            ));
        }
        if phi.iter().any(|row| row.len() != vocab.len()) {
            return Err(Error::Logic("phi rows must span the vocabulary".into()));
        }
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Self {
            vocab,
            index,
            phi,
            unseen,
        })
    }

    /// Every word, seen or not, gets 1/V under every topic.
    pub fn uniform(vocab: Vec<String>, k: usize) -> Self {
        let p = 1.0 / vocab.len() as f64;
        let phi = vec![vec![p; vocab.len()]; k];
        Self::new(vocab, phi, vec![p; k]).expect("shapes are consistent by construction")
    }

    pub fn k(&self) -> usize {
        self.phi.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn prob(&self, topic: usize, word: Option<usize>) -> f64 {
        match word {
            Some(w) => self.phi[topic][w],
            None => self.unseen[topic],
        }
    }

    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }
}

/// Final sampler state plus the point estimates read from it.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    config: TopicModelConfig,
    alpha: f64,
    doc_ids: Vec<String>,
    /// n_{d,j}, row-major D x K
    doc_topic: Vec<u32>,
    doc_len: Vec<usize>,
    /// n_{j,w}, word-major V x K
    topic_word: Vec<u32>,
    topic_total: Vec<u64>,
    words: TopicWordDist,
    warnings: Vec<String>,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn config(&self) -> &TopicModelConfig {
        &self.config
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn words(&self) -> &TopicWordDist {
        &self.words
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn topic_word_count(&self, topic: usize, word: usize) -> u32 {
        self.topic_word[word * self.k() + topic]
    }

    /// θ(d, j) = (n_{d,j} + α) / (n_d + Kα)
    pub fn theta(&self, doc: usize) -> Vec<f64> {
        let k = self.k();
        let denom = self.doc_len[doc] as f64 + k as f64 * self.alpha;
        self.doc_topic[doc * k..(doc + 1) * k]
            .iter()
            .map(|&n| (n as f64 + self.alpha) / denom)
            .collect()
    }

    pub fn doc_topic_dists(&self) -> Vec<DocTopicDist> {
        (0..self.doc_ids.len())
            .map(|d| DocTopicDist {
                doc_id: self.doc_ids[d].clone(),
                probs: self.theta(d),
            })
            .collect()
    }

    pub fn assignments(&self) -> Vec<TopicAssignment> {
        (0..self.doc_ids.len())
            .map(|d| TopicAssignment {
                doc_id: self.doc_ids[d].clone(),
                topic_id: argmax_lowest(&self.theta(d)),
            })
            .collect()
    }

    /// Word ids of the topic's `n` most probable words that were actually
    /// assigned to it, ordered by φ descending then word id.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.words.vocab.len())
            .filter(|&w| self.topic_word_count(topic, w) > 0)
            .collect();
        ids.sort_by(|&a, &b| {
            self.topic_word_count(topic, b)
                .cmp(&self.topic_word_count(topic, a))
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids
    }
}

/// Runs `config.iterations` full sweeps from a seeded random start.
pub fn fit_topic_model(corpus: &[TokenizedDoc], config: &TopicModelConfig) -> Result<TopicModel> {
    config.validate()?;
    let total_tokens: usize = corpus.iter().map(|d| d.tokens.len()).sum();
    if total_tokens == 0 {
        return Err(Error::input(
            "cannot fit a topic model: every document is empty",
        ));
    }
    let mut warnings = Vec::new();
    if config.k > total_tokens {
        warnings.push(format!(
            "K = {} exceeds the total token count {total_tokens}",
            config.k
        ));
    }

    let vocab: Vec<String> = corpus
        .iter()
        .flat_map(|d| d.tokens.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| d.tokens.iter().map(|t| index[t.as_str()]).collect())
        .collect();

    let k = config.k;
    let v = vocab.len();
    let alpha = config.alpha();
    let beta = config.beta;
    let vbeta = v as f64 * beta;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut doc_topic = vec![0u32; docs.len() * k];
    let mut topic_word = vec![0u32; v * k];
    let mut topic_total = vec![0u64; k];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, words) in docs.iter().enumerate() {
        let mut zd = Vec::with_capacity(words.len());
        for &w in words {
            let t = rng.gen_range(0..k);
            doc_topic[d * k + t] += 1;
            topic_word[w * k + t] += 1;
            topic_total[t] += 1;
            zd.push(t);
        }
        z.push(zd);
    }

    let mut cumulative = vec![0.0f64; k];
    for _ in 0..config.iterations {
        for (d, words) in docs.iter().enumerate() {
            let nd = &mut doc_topic[d * k..(d + 1) * k];
            for (n, &w) in words.iter().enumerate() {
                let old = z[d][n];
                nd[old] -= 1;
                topic_word[w * k + old] -= 1;
                topic_total[old] -= 1;

                let nw = &topic_word[w * k..(w + 1) * k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (nd[t] as f64 + alpha) * (nw[t] as f64 + beta)
                        / (topic_total[t] as f64 + vbeta);
                    cumulative[t] = acc;
                }
                let u = rng.gen::<f64>() * acc;
                let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);

                z[d][n] = new;
                nd[new] += 1;
                topic_word[w * k + new] += 1;
                topic_total[new] += 1;
            }
        }
    }

    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let denom = topic_total[t] as f64 + vbeta;
            (0..v)
                .map(|w| (topic_word[w * k + t] as f64 + beta) / denom)
                .collect()
        })
        .collect();
    let unseen = (0..k)
        .map(|t| beta / (topic_total[t] as f64 + vbeta))
        .collect();

    Ok(TopicModel {
        config: config.clone(),
        alpha,
        doc_ids: corpus.iter().map(|d| d.doc_id.clone()).collect(),
        doc_topic,
        doc_len: docs.iter().map(Vec::len).collect(),
        topic_word,
        topic_total,
        words: TopicWordDist::new(vocab, phi, unseen)?,
        warnings,
    })
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

    fn small_config(k: usize, seed: u64) -> TopicModelConfig {
        TopicModelConfig {
            iterations: 50,
            burn_in: 10,
            ..TopicModelConfig::new(k, seed)
        }
    }

    #[test]
    fn single_topic_is_degenerate() {
        let corpus = vec![doc("a", "x y z"), doc("b", "y y"), doc("c", "")];
        let m = fit_topic_model(&corpus, &small_config(1, 3)).unwrap();
        for dist in m.doc_topic_dists() {
            assert_eq!(dist.probs, [1.0]);
        }
        assert!(m.assignments().iter().all(|a| a.topic_id == 0));
    }

    #[test]
    fn empty_document_gets_uniform_distribution() {
        let corpus = vec![doc("a", "x y z w"), doc("b", "")];
        let m = fit_topic_model(&corpus, &small_config(4, 3)).unwrap();
        assert_eq!(m.theta(1), [0.25; 4]);
    }

    #[test]
    fn distributions_sum_to_one() {
        let corpus: Vec<_> = (0..20)
            .map(|i| {
                doc(
                    &format!("d{i}"),
                    &"alpha beta gamma delta eps".repeat(1 + i % 3),
                )
            })
            .collect();
        let m = fit_topic_model(&corpus, &small_config(3, 9)).unwrap();
        for dist in m.doc_topic_dists() {
            let s: f64 = dist.probs.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(dist.probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn same_seed_same_state() {
        let corpus = vec![
            doc("a", "x y z x y"),
            doc("b", "p q r p"),
            doc("c", "x p y q"),
        ];
        let a = fit_topic_model(&corpus, &small_config(2, 42)).unwrap();
        let b = fit_topic_model(&corpus, &small_config(2, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_empty_corpus_fails() {
        let err = fit_topic_model(&[doc("a", ""), doc("b", "")], &small_config(2, 1)).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn more_topics_than_tokens_warns() {
        let m = fit_topic_model(&[doc("a", "x y")], &small_config(5, 1)).unwrap();
        assert_eq!(m.warnings().len(), 1);
    }
}

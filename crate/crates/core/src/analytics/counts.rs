use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::StancedTweet;
use crate::corpus::PropagationTree;
use crate::inference::Stance;
use crate::text::content_tokens;

pub const WORD_CLOUD_SIZE: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCount {
    pub date: NaiveDate,
    pub count: usize,
}

/// Tweets per UTC calendar day across all trees, ascending by date; days
/// without tweets are omitted.
pub fn tweet_count_series(trees: &[&PropagationTree]) -> Vec<DayCount> {
    let mut days: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for node in trees.iter().flat_map(|t| &t.nodes) {
        *days.entry(node.post_time.date_naive()).or_default() += 1;
    }
    days.into_iter().map(|(date, count)| DayCount { date, count }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCloud {
    pub support: Vec<WordCount>,
    pub refute: Vec<WordCount>,
}

fn top_words<'a>(texts: impl Iterator<Item = &'a str>, n: usize) -> Vec<WordCount> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in texts {
        for t in content_tokens(text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut list: Vec<WordCount> = counts.into_iter().map(|(word, count)| WordCount { word, count }).collect();
    list.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    list.truncate(n);
    list
}

/// Most frequent content words among supporting and refuting tweets.
/// Stopwords, punctuation and numbers are dropped; neutral tweets are ignored.
pub fn word_cloud(tweets: &[StancedTweet], n: usize) -> WordCloud {
    let of = |stance: Stance| tweets.iter().filter(move |t| t.stance == stance).map(|t| t.node.text.as_str());
    WordCloud { support: top_words(of(Stance::Support), n), refute: top_words(of(Stance::Refute), n) }
}

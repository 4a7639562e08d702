//! Lexicon scoring, daily aggregation and the three-class distribution.

use senticast::corpus::{filter_corpus, parse_chat_export, Anonymizer, FilterConfig};
use senticast::sentiment::{aggregate_daily, distribution, score_corpus, Lexicon, LexiconProvider};

const EXPORT: &str = "\
Author,Date,Content
alice,2023-06-15T10:00:00Z,great event tonight
bob,2023-06-15T12:00:00Z,the client is laggy and broken
carol,2023-06-15T13:00:00Z,when does it start
dave,2023-06-17T08:00:00Z,love the new wearables
erin,2023-06-17T09:00:00Z,awesome
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let parsed = parse_chat_export(EXPORT.as_bytes(), &Anonymizer::new(""))?;
    let corpus = filter_corpus(parsed.messages, &FilterConfig::default());
    let provider = LexiconProvider { lexicon: Lexicon::builtin() };
    let sents = score_corpus(&provider, &corpus);

    for (s, m) in sents.iter().zip(corpus.messages()) {
        println!("{:<8} {:.2}  {}", s.label, s.gamma, m.content);
    }
    println!();
    // 06-16 has no messages: S = 0, neutral
    for d in aggregate_daily(&sents, &corpus)? {
        println!("{}  S={:+.4}  n={}  {}", d.date, d.score, d.n, d.klass);
    }
    println!("\n{}", distribution(&sents)?);
    Ok(())
}

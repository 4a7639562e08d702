//! Load externally produced classifier scores and match them to a corpus.

use senticast::corpus::{filter_corpus, parse_chat_export, Anonymizer, FilterConfig};
use senticast::sentiment::{aggregate_daily, load_interchange_scores, write_interchange_scores, Label, MessageSentiment};

const EXPORT: &str = "\
author_hash,timestamp,content
a1,2023-06-15T10:00:00.000Z,the parcel sale went well
b2,2023-06-15T14:00:00.000Z,servers are down again
c3,2023-06-16T09:00:00.000Z,see you at the concert
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let parsed = parse_chat_export(EXPORT.as_bytes(), &Anonymizer::new(""))?;
    let corpus = filter_corpus(parsed.messages, &FilterConfig::default());

    // stand-in for a classifier's output file
    let fake = [(Label::Positive, 0.91), (Label::Negative, 0.84), (Label::Neutral, 0.66)];
    let sents: Vec<MessageSentiment> = fake
        .iter()
        .enumerate()
        .map(|(index, &(label, gamma))| MessageSentiment { index, label, gamma })
        .collect();
    let mut file = Vec::new();
    write_interchange_scores(&sents, &corpus, &mut file)?;
    print!("{}", String::from_utf8_lossy(&file));

    let loaded = load_interchange_scores(file.as_slice(), &corpus)?;
    println!("diagnostics: {}", loaded.diagnostics());
    for d in aggregate_daily(&loaded.into_complete()?, &corpus)? {
        println!("{}  S={:+.3}  {}", d.date, d.score, d.klass);
    }
    Ok(())
}

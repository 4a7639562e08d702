//! Chat export -> anonymized, filtered corpus.

use senticast::corpus::{filter_corpus, parse_chat_export, write_corpus_csv, Anonymizer, FilterConfig};

const EXPORT: &str = "\
AuthorID,Author,Date,Content,Attachments,Reactions
111,alice,15-Jun-23 10:04 AM,gm builders,,\"👍 (3)\"
222,bob,15-Jun-23 11:30 AM,   ,,
222,bob,15-Jun-23 11:31 AM,,https://cdn.example/a.png,
999,modbot,15-Jun-23 12:00 PM,Welcome to the server!,,
333,carol,16-Jun-23 09:15 AM,land prices look bullish,,
333,carol,16-Jun-23 09:15 AM,land prices look bullish,,
444,dave,yesterday,timestamp is not parseable,,
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let anon = Anonymizer::new("demo-salt");
    let parsed = parse_chat_export(EXPORT.as_bytes(), &anon)?;
    for d in &parsed.diagnostics {
        println!("rejected {d}");
    }

    let rules = FilterConfig::default().with_raw_bots(&anon, ["999"]);
    let corpus = filter_corpus(parsed.messages, &rules);
    println!("{:?}\n", corpus.stats());
    write_corpus_csv(corpus.messages(), std::io::stdout().lock())?;
    Ok(())
}

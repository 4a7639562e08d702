use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use senticast::pipeline::{run, PipelineError, Settings};

#[derive(Parser)]
#[command(name = "senticast", version, about = "Chat sentiment + market data return forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

macro_rules! command_args {
    ($name:ident { $($field:ident : $help:literal),* $(,)? }) => {
        #[derive(Args)]
        struct $name {
            /// key=value config file; flags win over it
            #[arg(long)]
            config: Option<PathBuf>,
            $(
                #[doc = $help]
                #[arg(long)]
                $field: Option<String>,
            )*
        }

        impl $name {
            fn settings(&self) -> Result<Settings, PipelineError> {
                let mut s = match &self.config {
                    Some(p) => Settings::from_config_file(p)?,
                    None => Settings::default(),
                };
                let mut flags = Settings::default();
                $(
                    if let Some(v) = &self.$field {
                        flags.set(stringify!($field), v.clone());
                    }
                )*
                s.overlay(&flags);
                Ok(s)
            }
        }
    };
}

command_args!(IngestArgs {
    ohlcv: "OHLCV export (csv)",
    chat: "chat export(s), comma separated",
    out: "output directory",
    columns: "header overrides, e.g. date=timeOpen,market_cap=marketCap",
    delimiter: "OHLCV field delimiter (one byte or `tab`)",
    salt: "salt for author hashing",
    bots: "raw bot handles, comma separated",
    drop_empty: "drop empty messages (true|false)",
    drop_attachment_only: "drop attachment-only messages (true|false)",
    drop_bots: "drop bot messages (true|false)",
    drop_duplicates: "drop duplicate messages (true|false)",
});

command_args!(SentimentArgs {
    corpus: "canonical corpus.csv",
    provider: "lexicon | interchange",
    scores: "interchange file (provider=interchange)",
    lexicon: "word,polarity lexicon file (provider=lexicon)",
    strict: "fail with exit 3 if any message is unscored (true|false)",
    out: "output directory",
});

command_args!(FeaturesArgs {
    prices: "canonical price file",
    daily: "sentiment_daily.csv",
    out: "output directory",
});

command_args!(TrainArgs {
    prices: "canonical price file",
    daily: "sentiment_daily.csv",
    out: "output directory",
    variant: "baseline | multimodal",
    seed: "model seed",
    lookback: "window length in days",
    train_frac: "chronological train fraction",
    scaler: "minmax | zscore",
    variant_features: "multimodal inputs, e.g. tau,vol,mcap,senti",
    epochs: "training epochs",
    lr: "learning rate",
    hidden: "LSTM hidden size",
    clip: "global gradient-norm clip (0 disables)",
    optimizer: "adam | sgd",
    batch: "full | <mini-batch size>",
});

command_args!(CompareArgs {
    prices: "canonical price file",
    daily: "sentiment_daily.csv",
    out: "output directory",
    seeds: "seed list, e.g. 1..8 or 1,2,5",
    lookback: "window length in days",
    train_frac: "chronological train fraction",
    scaler: "minmax | zscore",
    variant_features: "multimodal inputs, e.g. tau,vol,mcap,senti",
    epochs: "training epochs",
    lr: "learning rate",
    hidden: "LSTM hidden size",
    clip: "global gradient-norm clip (0 disables)",
    optimizer: "adam | sgd",
    batch: "full | <mini-batch size>",
});

command_args!(SynthArgs {
    days: "number of days",
    seed: "generator seed",
    beta: "sentiment coefficient",
    noise_sd: "return noise sd",
    sentiment_sd: "daily sentiment sd",
    start: "first day (YYYY-MM-DD)",
    out: "output directory",
});

command_args!(ReportArgs {
    comparison: "comparison.csv",
    out: "optional directory for comparison.txt",
});

#[derive(Subcommand)]
enum Command {
    /// Parse OHLCV and chat exports into canonical files
    Ingest(IngestArgs),
    /// Score messages and aggregate daily sentiment
    Sentiment(SentimentArgs),
    /// Align prices with daily sentiment
    Features(FeaturesArgs),
    /// Train and evaluate one variant with one seed
    Train(TrainArgs),
    /// Paired baseline vs multimodal runs over a seed list
    Compare(CompareArgs),
    /// Generate synthetic prices with a planted sentiment signal
    Synth(SynthArgs),
    /// Render a comparison.csv as a text table
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (name, settings) = match &cli.command {
        Command::Ingest(a) => ("ingest", a.settings()),
        Command::Sentiment(a) => ("sentiment", a.settings()),
        Command::Features(a) => ("features", a.settings()),
        Command::Train(a) => ("train", a.settings()),
        Command::Compare(a) => ("compare", a.settings()),
        Command::Synth(a) => ("synth", a.settings()),
        Command::Report(a) => ("report", a.settings()),
    };
    match settings.and_then(|s| run(name, &s)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

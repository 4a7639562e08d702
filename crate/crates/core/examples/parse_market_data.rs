//! Parse a vendor OHLCV export, then derive typical prices and log returns.

use senticast::market_data::{log_returns, parse_ohlcv_csv, write_price_csv, ColumnMap, CsvSchema};

const EXPORT: &str = "\
timeOpen;open;high;low;close;volume;marketCap
2023-06-17T00:00:00.000Z;0.3921;0.3975;0.3860;0.3902;51230000;741000000
2023-06-15T00:00:00.000Z;0.4010;0.4102;0.3890;0.3950;61020000;750500000
2023-06-16T00:00:00.000Z;0.3950;0.3999;0.3870;0.3921;48800000;745000000
2023-06-18T00:00:00.000Z;0.3902;0.4188;0.3899;0.4120;88100000;782800000
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = CsvSchema {
        delimiter: b';',
        columns: ColumnMap::default().with_overrides("date=timeOpen,market_cap=marketCap")?,
    };
    // rows come back sorted by date
    let series = parse_ohlcv_csv(EXPORT.as_bytes(), &schema)?;
    for (bar, tau) in series.bars().iter().zip(series.typical()) {
        println!("{}  close {:.4}  typical {:.6}", bar.date, bar.close, tau);
    }
    for r in log_returns(&series)? {
        println!("r[{}] = {:+.6}", r.date, r.r);
    }

    println!("\ncanonical form:");
    write_price_csv(&series, std::io::stdout().lock())?;
    Ok(())
}

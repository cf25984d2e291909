//! Writes a weekly close-price CSV for the four-block synthetic market.
//!
//! cargo run -p rmtport --example synthetic_prices -- prices.csv [weeks] [seed]

use std::fs::File;

use rmtport::synthetic::{prices_from_returns, BlockMarket};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().ok_or("usage: synthetic_prices <out.csv> [weeks] [seed]")?;
    let weeks: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(232);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let returns = BlockMarket::four_blocks().returns(weeks, seed)?;
    prices_from_returns(&returns).to_csv(File::create(&path)?)?;
    println!("wrote {} weeks of prices for {} assets to {path}", weeks + 1, returns.dimension());
    Ok(())
}

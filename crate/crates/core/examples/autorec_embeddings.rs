//! Fits a user-based AutoRec to one domain and pulls out frozen embeddings.

use darec::autorec::{extract_embeddings, train_autorec, AutoRecConfig};
use darec::harness::{synth_generate, SynthConfig};
use darec::nncore::SeedStream;
use darec::ratings::{Domain, Orientation};

fn main() -> anyhow::Result<()> {
    let data = synth_generate(&SynthConfig::default())?.data;
    let cfg = AutoRecConfig {
        k: 16,
        lr: 0.01,
        epochs: 100,
        ..AutoRecConfig::default()
    };
    let trained = train_autorec(&data.source, Orientation::User, &cfg, &SeedStream::new(0))?;
    let last = trained.history.last().expect("at least one epoch");
    println!("{} epochs, final training loss {:.4}", trained.history.len(), last.loss);
    let emb = extract_embeddings(&trained.params, &data.source, Orientation::User, Domain::Source)?;
    println!("{} embeddings of size {}", emb.len(), emb.k());
    println!("user 0: {:.3?}", &emb.get(0)[..4]);
    Ok(())
}

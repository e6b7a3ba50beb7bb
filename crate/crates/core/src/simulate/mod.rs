//! Synthetic stand-in for the acoustic model: a generated phone language
//! with a lexicon and wordpiece inventory, evaluation corpora with
//! personal contacts, and planted CTC emission matrices.

mod corpus;
mod emit;
mod world;

pub use corpus::{
    gen_corpus, gen_lm_text, Contact, ContactKind, Corpus, CorpusConfig, EntitySpan, Grammar, Utterance,
};
pub use emit::{
    synth_emissions, synth_from_pieces, utterance_rng, ConfusionMap, EmissionContext, NoiseConfig, NOISELESS_FLOOR,
};
pub use world::{
    gen_world, mode_spelling, phone_spelling, reading, sample_spelling, AcousticRealization, LexWord,
    PhoneSpelling, World, WorldConfig, PHONES,
};

use crate::decoder::EmissionMatrix;
use crate::error::Result;
use crate::tokenize::WordpieceModel;

/// Emissions for a phone sequence through an acoustic realization.
pub fn synth_from_phones<S: AsRef<str>>(
    phones: &[S],
    realization: &AcousticRealization,
    wp: &WordpieceModel,
    ctx: EmissionContext<'_>,
    cfg: &NoiseConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<EmissionMatrix> {
    let plan = realization.realize(phones)?;
    synth_from_pieces(&plan, wp, ctx, cfg, rng)
}

/// Emissions for one utterance of a corpus, seeded by its id.
pub fn utterance_emissions(u: &Utterance, wp: &WordpieceModel, ctx: EmissionContext<'_>, cfg: &NoiseConfig) -> Result<EmissionMatrix> {
    let mut rng = utterance_rng(cfg.seed, &u.id);
    synth_from_pieces(&u.plan, wp, ctx, cfg, &mut rng)
}

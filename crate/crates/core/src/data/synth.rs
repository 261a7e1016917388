//! Synthetic review corpus. A template grammar over a ~200-word vocabulary
//! emits three sentence families: single-aspect sentences with a
//! polarity-bearing adjective, coordinated aspects that share one sentiment
//! word adjacent to only the last term, and neutral mentions. Polarity is a
//! deterministic function of the lexicon, and `O` filler is stretched to hit
//! a configurable O:non-O ratio.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::TaggedSentence;
use super::schema::{PolarityTag, TermTag};

const ASPECTS_SINGLE: &[&str] = &[
    "battery", "screen", "keyboard", "speakers", "camera", "display", "trackpad", "charger",
    "processor", "fan", "hinge", "webcam", "microphone", "monitor", "printer", "router", "stylus",
    "dock",
];

const ASPECTS_MULTI: &[(&str, &str)] = &[
    ("battery", "life"),
    ("operating", "system"),
    ("screen", "resolution"),
    ("build", "quality"),
    ("touch", "pad"),
    ("hard", "drive"),
    ("power", "cord"),
    ("key", "travel"),
];

const POS_ADJ: &[&str] = &[
    "great", "fantastic", "excellent", "amazing", "wonderful", "superb", "impressive", "reliable",
    "crisp", "sturdy",
];

const NEG_ADJ: &[&str] = &[
    "terrible", "awful", "horrible", "disappointing", "flimsy", "sluggish", "noisy", "unreliable",
    "shoddy", "dim",
];

const NEUTRAL_VERBS: &[&str] = &[
    "used", "tried", "tested", "opened", "configured", "installed", "updated", "restarted",
];

const COPULA_SG: &[&str] = &["is", "was", "looks", "feels", "seems"];
const COPULA_PL: &[&str] = &["are", "were", "look", "feel", "seem"];
const TIME_WORDS: &[&str] = &["yesterday", "today", "recently", "earlier", "tonight", "beforehand"];

const FILLER: &[&str] = &[
    "it", "this", "that", "my", "our", "your", "a", "an", "so", "very", "quite", "really", "just",
    "still", "then", "when", "while", "after", "before", "because", "since", "though", "which",
    "who", "what", "where", "how", "all", "some", "most", "few", "other", "another", "same", "new",
    "old", "first", "last", "next", "day", "week", "month", "year", "time", "thing", "way",
    "store", "shop", "online", "home", "office", "work", "travel", "trip", "box", "case", "cover",
    "cable", "setup", "manual", "support", "service", "team", "order", "delivery", "package",
    "review", "price", "deal", "sale", "brand", "model", "version", "unit", "item", "piece",
    "part", "side", "top", "bottom", "edge", "corner", "surface", "light", "mode", "menu",
    "option", "feature", "update", "question", "answer", "note", "detail", "point", "fact",
    "reason", "result", "change", "start", "end", "middle", "moment", "hour", "minute", "morning",
    "evening", "weekend", "friend", "family", "house", "room", "desk", "chair", "bag", "shelf",
    "wall", "window",
];

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub n_sentences: usize,
    pub seed: u64,
    /// Target corpus-wide O:non-O token ratio.
    pub imbalance: f64,
    /// Enable the conflict-polarity template family.
    pub with_con: bool,
    /// Sentences longer than max_len - 2 are never emitted.
    pub max_len: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sentences: 2000,
            seed: 0,
            imbalance: 20.0,
            with_con: false,
            max_len: 128,
        }
    }
}

struct Core {
    tokens: Vec<String>,
    term_tags: Vec<TermTag>,
    polarity_tags: Vec<PolarityTag>,
}

impl Core {
    fn new() -> Self {
        Core {
            tokens: Vec::new(),
            term_tags: Vec::new(),
            polarity_tags: Vec::new(),
        }
    }

    fn word(&mut self, w: &str) {
        self.tokens.push(w.to_string());
        self.term_tags.push(TermTag::Outside);
        self.polarity_tags.push(PolarityTag::Outside);
    }

    fn aspect(&mut self, rng: &mut ChaCha8Rng, polarity: PolarityTag) -> usize {
        if rng.random_bool(0.3) {
            let &(a, b) = ASPECTS_MULTI.choose(rng).unwrap();
            self.tokens.push(a.to_string());
            self.term_tags.push(TermTag::Begin);
            self.polarity_tags.push(polarity);
            self.tokens.push(b.to_string());
            self.term_tags.push(TermTag::Inside);
            self.polarity_tags.push(polarity);
            2
        } else {
            let &a = ASPECTS_SINGLE.choose(rng).unwrap();
            self.tokens.push(a.to_string());
            self.term_tags.push(TermTag::Begin);
            self.polarity_tags.push(polarity);
            1
        }
    }
}

fn sentiment_pick(rng: &mut ChaCha8Rng) -> (&'static str, PolarityTag) {
    if rng.random_bool(0.5) {
        (POS_ADJ.choose(rng).unwrap(), PolarityTag::Positive)
    } else {
        (NEG_ADJ.choose(rng).unwrap(), PolarityTag::Negative)
    }
}

pub fn synth_generate(cfg: &SynthConfig) -> Vec<TaggedSentence> {
    assert!(cfg.n_sentences >= 1);
    assert!(cfg.imbalance > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sentences = Vec::with_capacity(cfg.n_sentences);
    let mut o_total = 0usize;
    let mut non_o_total = 0usize;

    for _ in 0..cfg.n_sentences {
        let mut core = Core::new();
        let family = rng.random_range(0.0..1.0);
        let (a_cut, b_cut, c_cut) = if cfg.with_con {
            (0.40, 0.67, 0.90)
        } else {
            (0.45, 0.75, 1.0)
        };
        if family < a_cut {
            // the ASPECT is ADJ
            let (adj, pol) = sentiment_pick(&mut rng);
            core.word("the");
            core.aspect(&mut rng, pol);
            core.word(COPULA_SG.choose(&mut rng).unwrap());
            core.word(adj);
        } else if family < b_cut {
            // the A and the B are ADJ: one sentiment word, both terms share it
            let (adj, pol) = sentiment_pick(&mut rng);
            core.word("the");
            core.aspect(&mut rng, pol);
            core.word("and");
            core.word("the");
            core.aspect(&mut rng, pol);
            core.word(COPULA_PL.choose(&mut rng).unwrap());
            core.word(adj);
        } else if family < c_cut {
            // i used the ASPECT yesterday
            core.word("i");
            core.word(NEUTRAL_VERBS.choose(&mut rng).unwrap());
            core.word("the");
            core.aspect(&mut rng, PolarityTag::Neutral);
            core.word(TIME_WORDS.choose(&mut rng).unwrap());
        } else {
            // the ASPECT is ADJ+ but also ADJ-
            core.word("the");
            core.aspect(&mut rng, PolarityTag::Conflict);
            core.word(COPULA_SG.choose(&mut rng).unwrap());
            core.word(POS_ADJ.choose(&mut rng).unwrap());
            core.word("but");
            core.word("also");
            core.word(NEG_ADJ.choose(&mut rng).unwrap());
        }

        let core_non_o = core.term_tags.iter().filter(|&&t| t != TermTag::Outside).count();
        let core_o = core.tokens.len() - core_non_o;

        // Global accounting: pad with filler O tokens until the corpus so
        // far sits on the requested ratio, capped by the length limit.
        let desired_o = (cfg.imbalance * (non_o_total + core_non_o) as f64).round() as i64;
        let have_o = (o_total + core_o) as i64;
        let cap = (cfg.max_len - 2).saturating_sub(core.tokens.len());
        let pad = (desired_o - have_o).clamp(0, cap as i64) as usize;

        // filler goes after the core pattern, so aspect terms and their
        // sentiment words keep stable low positions
        let mut tokens = core.tokens;
        let mut term_tags = core.term_tags;
        let mut polarity_tags = core.polarity_tags;
        for _ in 0..pad {
            tokens.push(FILLER.choose(&mut rng).unwrap().to_string());
            term_tags.push(TermTag::Outside);
            polarity_tags.push(PolarityTag::Outside);
        }

        o_total += core_o + pad;
        non_o_total += core_non_o;
        sentences.push(TaggedSentence::new(tokens, term_tags, polarity_tags));
    }
    sentences
}

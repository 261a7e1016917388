//! The two tag sets. Ids are fixed across runs: B=0, I=1, O=2 for term tags
//! and POS=0, NEU=1, NEG=2, CON=3, O=4 for polarity tags. The two `O`
//! symbols live in different sets and never compare equal.

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum TermTag {
    Begin,
    Inside,
    Outside,
}

impl TermTag {
    pub const COUNT: usize = 3;

    pub fn id(self) -> usize {
        match self {
            TermTag::Begin => 0,
            TermTag::Inside => 1,
            TermTag::Outside => 2,
        }
    }

    pub fn from_id(id: usize) -> Option<Self> {
        match id {
            0 => Some(TermTag::Begin),
            1 => Some(TermTag::Inside),
            2 => Some(TermTag::Outside),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "B" => Some(TermTag::Begin),
            "I" => Some(TermTag::Inside),
            "O" => Some(TermTag::Outside),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TermTag::Begin => "B",
            TermTag::Inside => "I",
            TermTag::Outside => "O",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum PolarityTag {
    Positive,
    Neutral,
    Negative,
    Conflict,
    Outside,
}

impl PolarityTag {
    pub const COUNT: usize = 5;

    pub fn id(self) -> usize {
        match self {
            PolarityTag::Positive => 0,
            PolarityTag::Neutral => 1,
            PolarityTag::Negative => 2,
            PolarityTag::Conflict => 3,
            PolarityTag::Outside => 4,
        }
    }

    pub fn from_id(id: usize) -> Option<Self> {
        match id {
            0 => Some(PolarityTag::Positive),
            1 => Some(PolarityTag::Neutral),
            2 => Some(PolarityTag::Negative),
            3 => Some(PolarityTag::Conflict),
            4 => Some(PolarityTag::Outside),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "POS" => Some(PolarityTag::Positive),
            "NEU" => Some(PolarityTag::Neutral),
            "NEG" => Some(PolarityTag::Negative),
            "CON" => Some(PolarityTag::Conflict),
            "O" => Some(PolarityTag::Outside),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolarityTag::Positive => "POS",
            PolarityTag::Neutral => "NEU",
            PolarityTag::Negative => "NEG",
            PolarityTag::Conflict => "CON",
            PolarityTag::Outside => "O",
        }
    }
}

//! Label taxonomies.
//!
//! Codes serialize as their short string form (`"Fq"`, `"SR-D"`, ...). Parsing
//! is case-insensitive, ignores `-`, `_` and spaces, and reads `NA` as `O` in
//! every scheme.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A closed set of label codes with a stable order.
pub trait Code: Copy + Ord + Eq + fmt::Debug + 'static {
    /// Every code, in canonical order.
    const ALL: &'static [Self];
    /// Name of the scheme, used in diagnostics.
    const SCHEME: &'static str;

    fn code(self) -> &'static str;

    /// Position of this code in [`Code::ALL`].
    fn index(self) -> usize;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {scheme} label `{value}`")]
pub struct ParseLabelError {
    pub scheme: &'static str,
    pub value: String,
}

fn normalized_eq(input: &str, code: &str) -> bool {
    let mut a = input
        .chars()
        .filter(|c| !matches!(c, '-' | '_' | ' '))
        .map(|c| c.to_ascii_uppercase());
    let mut b = code
        .chars()
        .filter(|c| !matches!(c, '-' | '_' | ' '))
        .map(|c| c.to_ascii_uppercase());
    loop {
        match (a.next(), b.next()) {
            (None, None) => return true,
            (Some(x), Some(y)) if x == y => {}
            _ => return false,
        }
    }
}

macro_rules! coded_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $scheme:literal, other = $other:ident {
            $($(#[$vmeta:meta])* $variant:ident => $code:literal),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($(#[$vmeta])* $variant),+
        }

        impl Code for $name {
            const ALL: &'static [Self] = &[$($name::$variant),+];
            const SCHEME: &'static str = $scheme;

            fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }

            fn index(self) -> usize {
                self as usize
            }
        }

        impl FromStr for $name {
            type Err = ParseLabelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                if normalized_eq(s, "NA") {
                    return Ok($name::$other);
                }
                for &label in <$name as Code>::ALL {
                    if normalized_eq(s, label.code()) {
                        return Ok(label);
                    }
                }
                Err(ParseLabelError { scheme: $scheme, value: s.into() })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.code())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                struct CodeVisitor;

                impl<'de> Visitor<'de> for CodeVisitor {
                    type Value = $name;

                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        write!(f, "a {} code", $scheme)
                    }

                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$name, E> {
                        v.parse().map_err(E::custom)
                    }
                }

                deserializer.deserialize_str(CodeVisitor)
            }
        }
    };
}

/// Who produced an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpeakerRole {
    Teacher,
    Student,
}

impl SpeakerRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SpeakerRole::Teacher => "Teacher",
            SpeakerRole::Student => "Student",
        }
    }
}

impl fmt::Display for SpeakerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown speaker `{0}` (expected Teacher or Student)")]
pub struct ParseSpeakerError(pub String);

impl FromStr for SpeakerRole {
    type Err = ParseSpeakerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("teacher") {
            Ok(SpeakerRole::Teacher)
        } else if t.eq_ignore_ascii_case("student") {
            Ok(SpeakerRole::Student)
        } else {
            Err(ParseSpeakerError(t.into()))
        }
    }
}

coded_enum! {
    /// Functional code of a classroom turn (10 classes).
    UtteranceType, "UT", other = O {
        Q => "Q",
        P => "P",
        E => "E",
        Fy => "Fy",
        Fs => "Fs",
        Fq => "Fq",
        Rs => "Rs",
        Rq => "Rq",
        Ry => "Ry",
        O => "O",
    }
}

impl UtteranceType {
    /// The only role allowed to produce this code, or `None` for `O`.
    pub fn speaker(self) -> Option<SpeakerRole> {
        use UtteranceType::*;
        match self {
            Q | P | E | Fy | Fs | Fq => Some(SpeakerRole::Teacher),
            Rs | Rq | Ry => Some(SpeakerRole::Student),
            O => None,
        }
    }

    pub fn allows(self, role: SpeakerRole) -> bool {
        self.speaker().is_none_or(|r| r == role)
    }

    pub fn name(self) -> &'static str {
        use UtteranceType::*;
        match self {
            Q => "Question",
            P => "Prompt",
            E => "Explanation/Example",
            Fy => "Feedback - Confirmation",
            Fs => "Feedback - Statement",
            Fq => "Feedback - Question",
            Rs => "Response - Statement",
            Rq => "Response - Question",
            Ry => "Response - Confirmation",
            O => "Other",
        }
    }

    pub fn description(self) -> &'static str {
        use UtteranceType::*;
        match self {
            Q => "Inquiry posed to students",
            P => "Cue to guide student thinking",
            E => "Detailed information or illustration",
            Fy => "Affirm / repeat student response",
            Fs => "Feedback with additional content",
            Fq => "Feedback that probes further",
            Rs => "Substantive declarative answer",
            Rq => "Student inquiry or rephrased Q",
            Ry => "Agreement or minimal reply",
            O => "Off-topic, inaudible, procedural",
        }
    }
}

coded_enum! {
    /// Original six-class reasoning-component scheme.
    Rc6, "RC6", other = O {
        Ex => "EX",
        Sk => "SK",
        Od => "OD",
        Pd => "PD",
        Mt => "MT",
        O => "O",
    }
}

impl Rc6 {
    pub fn name(self) -> &'static str {
        match self {
            Rc6::Ex => "Experience",
            Rc6::Sk => "Scientific Knowledge",
            Rc6::Od => "Observation/Data",
            Rc6::Pd => "Patterns from Data",
            Rc6::Mt => "Models/Theories",
            Rc6::O => "Other",
        }
    }
}

coded_enum! {
    /// Revised four-class reasoning-component scheme.
    Rc4, "RC4", other = O {
        Er => "ER",
        Srd => "SR-D",
        Sri => "SR-I",
        O => "O",
    }
}

impl Rc4 {
    /// Cognitive Complexity Index weight: O=0, ER=1, SR-D=2, SR-I=3.
    pub fn cci_weight(self) -> u8 {
        match self {
            Rc4::O => 0,
            Rc4::Er => 1,
            Rc4::Srd => 2,
            Rc4::Sri => 3,
        }
    }

    pub fn from_cci_weight(weight: u8) -> Option<Rc4> {
        match weight {
            0 => Some(Rc4::O),
            1 => Some(Rc4::Er),
            2 => Some(Rc4::Srd),
            3 => Some(Rc4::Sri),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rc4::Er => "Everyday Reasoning",
            Rc4::Srd => "Scientific Reasoning - Descriptive",
            Rc4::Sri => "Scientific Reasoning - Inferential",
            Rc4::O => "Other",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Rc4::Er => "Informal knowledge: personal experience, anecdote, analogy or a naive explanation",
            Rc4::Srd => "States or recalls scientific concepts, terms, definitions, observations or measurements without inferring beyond them",
            Rc4::Sri => "Reasons from data: finds patterns, compares, generalizes, predicts, explains or proposes models",
            Rc4::O => "Procedural talk, classroom management, inaudible or off-topic remarks",
        }
    }
}

/// Collapses the six-class scheme onto the four-class scheme.
///
/// EX maps to ER, the descriptive pair SK/OD to SR-D, the inferential pair
/// PD/MT to SR-I, and O is unchanged.
pub fn remap_rc(rc6: Rc6) -> Rc4 {
    match rc6 {
        Rc6::Ex => Rc4::Er,
        Rc6::Sk | Rc6::Od => Rc4::Srd,
        Rc6::Pd | Rc6::Mt => Rc4::Sri,
        Rc6::O => Rc4::O,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn remap_is_exhaustive_and_surjective() {
        let expected = [
            (Rc6::Ex, Rc4::Er),
            (Rc6::Sk, Rc4::Srd),
            (Rc6::Od, Rc4::Srd),
            (Rc6::Pd, Rc4::Sri),
            (Rc6::Mt, Rc4::Sri),
            (Rc6::O, Rc4::O),
        ];
        for (from, to) in expected {
            assert_eq!(remap_rc(from), to);
        }
        let image: BTreeSet<_> = Rc6::ALL.iter().map(|&r| remap_rc(r)).collect();
        assert_eq!(image.len(), Rc4::ALL.len());
    }

    #[test]
    fn cci_weights_are_a_bijection() {
        for &rc in Rc4::ALL {
            assert_eq!(Rc4::from_cci_weight(rc.cci_weight()), Some(rc));
        }
        assert_eq!(Rc4::from_cci_weight(4), None);
        assert_eq!(Rc4::O.cci_weight(), 0);
        assert_eq!(Rc4::Sri.cci_weight(), 3);
    }

    #[test]
    fn parsing_accepts_common_spellings() {
        assert_eq!("SR-D".parse::<Rc4>().unwrap(), Rc4::Srd);
        assert_eq!("srd".parse::<Rc4>().unwrap(), Rc4::Srd);
        assert_eq!("SR_I".parse::<Rc4>().unwrap(), Rc4::Sri);
        assert_eq!("NA".parse::<Rc4>().unwrap(), Rc4::O);
        assert_eq!("fq".parse::<UtteranceType>().unwrap(), UtteranceType::Fq);
        assert_eq!("NA".parse::<UtteranceType>().unwrap(), UtteranceType::O);
        assert_eq!(" sk ".parse::<Rc6>().unwrap(), Rc6::Sk);
        let err = "XYZ".parse::<Rc4>().unwrap_err();
        assert_eq!(err.scheme, "RC4");
    }

    #[test]
    fn every_code_round_trips_through_its_string() {
        for &ut in UtteranceType::ALL {
            assert_eq!(ut.code().parse::<UtteranceType>().unwrap(), ut);
        }
        for &rc in Rc6::ALL {
            assert_eq!(rc.code().parse::<Rc6>().unwrap(), rc);
        }
        for &rc in Rc4::ALL {
            assert_eq!(rc.code().parse::<Rc4>().unwrap(), rc);
            assert_eq!(Rc4::ALL[rc.index()], rc);
        }
    }

    #[test]
    fn speaker_constraints() {
        assert!(UtteranceType::Q.allows(SpeakerRole::Teacher));
        assert!(!UtteranceType::Q.allows(SpeakerRole::Student));
        assert!(UtteranceType::Rq.allows(SpeakerRole::Student));
        assert!(UtteranceType::O.allows(SpeakerRole::Student));
        assert!(UtteranceType::O.allows(SpeakerRole::Teacher));
        assert!("teacher".parse::<SpeakerRole>().is_ok());
        assert!("Robot".parse::<SpeakerRole>().is_err());
    }
}

use serde::{Deserialize, Serialize};

/// Script class of a message, decided by the share of alphabetic code points
/// in the Bengali block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    Bangla,
    LatinTransliteration,
    /// No alphabetic characters at all.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanguageTag {
    pub script: Script,
    /// Bengali-block share of alphabetic code points; 0 when there are none.
    pub bangla_ratio: f64,
}

pub fn is_bangla(c: char) -> bool {
    ('\u{0980}'..='\u{09FF}').contains(&c)
}

pub fn detect_language(text: &str) -> LanguageTag {
    let (mut bangla, mut alphabetic) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        alphabetic += 1;
        bangla += usize::from(is_bangla(c));
    }
    if alphabetic == 0 {
        return LanguageTag {
            script: Script::Other,
            bangla_ratio: 0.0,
        };
    }
    let ratio = bangla as f64 / alphabetic as f64;
    LanguageTag {
        script: if ratio >= 0.5 { Script::Bangla } else { Script::LatinTransliteration },
        bangla_ratio: ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_classes() {
        let bn = detect_language("আমি ভালো আছি");
        assert_eq!((bn.script, bn.bangla_ratio), (Script::Bangla, 1.0));
        let lat = detect_language("ami bhalo achi");
        assert_eq!((lat.script, lat.bangla_ratio), (Script::LatinTransliteration, 0.0));
        assert_eq!(detect_language("12345 !!").script, Script::Other);
        assert_eq!(detect_language("").script, Script::Other);
        assert_eq!(detect_language("১২৩ ।").script, Script::Other);
    }

    #[test]
    fn half_is_bangla() {
        let t = detect_language("কখ ab");
        assert_eq!((t.script, t.bangla_ratio), (Script::Bangla, 0.5));
        assert_eq!(detect_language("ক abc").script, Script::LatinTransliteration);
    }

    proptest! {
        #[test]
        fn bangla_concatenation_stays_bangla(
            a in "[কখগচজতদনপবমরলসহ ]{0,12}[কখগচজতদনপবমরলসহ]",
            latin in "[a-z0-9 ]{0,10}",
            bangla in "[কখগচজতদনপবমরলসহ]{1,10}",
        ) {
            let b = format!("{latin}{bangla}");
            prop_assume!(detect_language(&b).script == Script::Bangla);
            prop_assert_eq!(detect_language(&a).script, Script::Bangla);
            prop_assert_eq!(detect_language(&format!("{a}{b}")).script, Script::Bangla);
        }

        #[test]
        fn total_and_pure(s in any::<String>()) {
            let t = detect_language(&s);
            prop_assert_eq!(t, detect_language(&s));
            prop_assert!((0.0..=1.0).contains(&t.bangla_ratio));
        }
    }
}

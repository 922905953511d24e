use std::fmt;
use std::str::FromStr;

use crate::geo::Point;

/// Provider complexity, highest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProviderCategory {
    Hospital = 0,
    HealthCenter = 1,
    SanitaryPost = 2,
}

impl ProviderCategory {
    pub const ALL: [ProviderCategory; 3] =
        [ProviderCategory::Hospital, ProviderCategory::HealthCenter, ProviderCategory::SanitaryPost];

    pub fn as_str(self) -> &'static str {
        match self {
            ProviderCategory::Hospital => "hospital",
            ProviderCategory::HealthCenter => "health_center",
            ProviderCategory::SanitaryPost => "sanitary_post",
        }
    }
}

impl fmt::Display for ProviderCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProviderCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize(s).replace(' ', "_").as_str() {
            "hospital" => Ok(ProviderCategory::Hospital),
            "health_center" | "center" | "centre" => Ok(ProviderCategory::HealthCenter),
            "sanitary_post" | "post" => Ok(ProviderCategory::SanitaryPost),
            other => Err(format!("unknown provider category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HealthProvider<T> {
    pub id: String,
    pub location: Point<T>,
    pub category: ProviderCategory,
}

/// A label rule: labels containing `pattern` map to `category`, or are
/// discarded when `category` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRule {
    pub pattern: String,
    pub category: Option<ProviderCategory>,
}

/// Ordered label rules; the first rule whose pattern occurs as whole words in
/// the normalised label decides. Labels matching no rule are discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    rules: Vec<LabelRule>,
}

impl LabelMap {
    pub fn new(rules: Vec<LabelRule>) -> Self {
        let rules = rules
            .into_iter()
            .map(|r| LabelRule { pattern: normalize(&r.pattern), category: r.category })
            .filter(|r| !r.pattern.is_empty())
            .collect();
        LabelMap { rules }
    }

    pub fn rules(&self) -> &[LabelRule] {
        &self.rules
    }

    pub fn classify(&self, label: &str) -> Option<ProviderCategory> {
        let padded = format!(" {} ", normalize(label));
        self.rules
            .iter()
            .find(|r| padded.contains(&format!(" {} ", r.pattern)))
            .and_then(|r| r.category)
    }
}

impl Default for LabelMap {
    fn default() -> Self {
        use ProviderCategory::*;
        let rule = |p: &str, c: Option<ProviderCategory>| LabelRule { pattern: p.into(), category: c };
        LabelMap::new(vec![
            rule("geriatric", None),
            rule("administrative", None),
            rule("office", None),
            rule("hospital", Some(Hospital)),
            rule("health center", Some(HealthCenter)),
            rule("centro de salud", Some(HealthCenter)),
            rule("caps", Some(HealthCenter)),
            rule("clinic", Some(HealthCenter)),
            rule("sanitary post", Some(SanitaryPost)),
            rule("puesto sanitario", Some(SanitaryPost)),
            rule("posta", Some(SanitaryPost)),
        ])
    }
}

/// Lowercase, ASCII-fold the common accented vowels, and collapse every run
/// of non-alphanumerics to a single space.
fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut gap = false;
    for c in s.chars().flat_map(char::to_lowercase) {
        let c = match c {
            'á' | 'à' | 'ä' => 'a',
            'é' | 'è' | 'ë' => 'e',
            'í' | 'ì' | 'ï' => 'i',
            'ó' | 'ò' | 'ö' => 'o',
            'ú' | 'ù' | 'ü' => 'u',
            'ñ' => 'n',
            c => c,
        };
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.push(c);
        } else {
            gap = true;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified<T> {
    pub providers: Vec<HealthProvider<T>>,
    pub discarded: usize,
}

pub fn classify_providers<T: Copy>(raw: &[(String, Point<T>, String)], map: &LabelMap) -> Classified<T> {
    let mut providers = Vec::new();
    let mut discarded = 0;
    for (id, location, label) in raw {
        match map.classify(label) {
            Some(category) => providers.push(HealthProvider { id: id.clone(), location: *location, category }),
            None => discarded += 1,
        }
    }
    Classified { providers, discarded }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rules() {
        let m = LabelMap::default();
        assert_eq!(m.classify("Hospital Zonal"), Some(ProviderCategory::Hospital));
        assert_eq!(m.classify("CAPS N° 12"), Some(ProviderCategory::HealthCenter));
        assert_eq!(m.classify("Puesto Sanitario Los Álamos"), Some(ProviderCategory::SanitaryPost));
        assert_eq!(m.classify("geriatric office"), None);
        assert_eq!(m.classify("hospital administrative office"), None);
        // Whole-word match only.
        assert_eq!(m.classify("capsule store"), None);
    }

    #[test]
    fn synthetic_label_set() {
        let labels = [
            "hospital zonal", "hospital regional", "hospital", "centro de salud", "health center 3",
            "caps barrio norte", "caps", "clinic", "sanitary post", "posta rural", "puesto sanitario",
            "posta", "hospital materno", "centro de salud 9", "posta 2", "health center", "clinic east",
            "geriatric office", "administrative office", "pharmacy",
        ];
        let raw: Vec<(String, Point<f64>, String)> =
            labels.iter().enumerate().map(|(i, l)| (format!("p{i}"), Point::new(0.0, 0.0), l.to_string())).collect();
        let c = classify_providers(&raw, &LabelMap::default());
        assert_eq!(c.providers.len(), 17);
        assert_eq!(c.discarded, 3);
    }

    #[test]
    fn category_tokens() {
        for c in ProviderCategory::ALL {
            assert_eq!(c.as_str().parse::<ProviderCategory>().unwrap(), c);
        }
    }
}

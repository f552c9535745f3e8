use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::normalize::normalize_code;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Introductory,
    Interview,
    Competition,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [
        Difficulty::Introductory,
        Difficulty::Interview,
        Difficulty::Competition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Introductory => "introductory",
            Difficulty::Interview => "interview",
            Difficulty::Competition => "competition",
        }
    }

    /// Column header used in report tables.
    pub fn short(self) -> &'static str {
        match self {
            Difficulty::Introductory => "Intro",
            Difficulty::Interview => "Inter",
            Difficulty::Competition => "Comp",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "introductory" => Ok(Difficulty::Introductory),
            "interview" => Ok(Difficulty::Interview),
            "competition" => Ok(Difficulty::Competition),
            other => Err(format!("unknown difficulty `{other}`")),
        }
    }
}

/// Where a test case came from. Serialized as `seed` or `augmented:<iteration>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestOrigin {
    Seed,
    Augmented(u32),
}

/// Where a code solution came from. Serialized as `ground-truth` or `augmented:<iteration>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolutionOrigin {
    GroundTruth,
    Augmented(u32),
}

fn parse_augmented(s: &str) -> Option<u32> {
    s.strip_prefix("augmented:").and_then(|n| n.parse().ok())
}

impl fmt::Display for TestOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestOrigin::Seed => f.write_str("seed"),
            TestOrigin::Augmented(i) => write!(f, "augmented:{i}"),
        }
    }
}

impl FromStr for TestOrigin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "seed" {
            return Ok(TestOrigin::Seed);
        }
        parse_augmented(s)
            .map(TestOrigin::Augmented)
            .ok_or_else(|| format!("invalid test origin `{s}`"))
    }
}

impl fmt::Display for SolutionOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionOrigin::GroundTruth => f.write_str("ground-truth"),
            SolutionOrigin::Augmented(i) => write!(f, "augmented:{i}"),
        }
    }
}

impl FromStr for SolutionOrigin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ground-truth" {
            return Ok(SolutionOrigin::GroundTruth);
        }
        parse_augmented(s)
            .map(SolutionOrigin::Augmented)
            .ok_or_else(|| format!("invalid solution origin `{s}`"))
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(TestOrigin);
string_serde!(SolutionOrigin);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub input: String,
    pub output: String,
    pub origin: TestOrigin,
    pub train_eligible: bool,
}

impl TestCase {
    pub fn seed(input: impl Into<String>, output: impl Into<String>) -> Self {
        TestCase {
            input: input.into(),
            output: output.into(),
            origin: TestOrigin::Seed,
            train_eligible: true,
        }
    }

    /// Whether both sides fit under `threshold` characters.
    pub fn fits(&self, threshold: usize) -> bool {
        self.input.chars().count() <= threshold && self.output.chars().count() <= threshold
    }
}

/// A candidate or reference program. `normalized` is always derived from `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSolution {
    source: String,
    normalized: String,
    pub origin: SolutionOrigin,
    pub verified: bool,
}

impl CodeSolution {
    pub fn new(source: impl Into<String>, origin: SolutionOrigin, verified: bool) -> Self {
        let source = source.into();
        let normalized = normalize_code(&source);
        CodeSolution {
            source,
            normalized,
            origin,
            verified,
        }
    }

    pub fn ground_truth(source: impl Into<String>) -> Self {
        Self::new(source, SolutionOrigin::GroundTruth, true)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }

    pub fn is_ground_truth(&self) -> bool {
        self.origin == SolutionOrigin::GroundTruth
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub id: String,
    pub description: String,
    pub difficulty: Difficulty,
    pub solutions: Vec<CodeSolution>,
    pub tests: Vec<TestCase>,
}

impl Problem {
    /// The reference program used to execute test inputs: the first ground-truth entry.
    pub fn ground_truth(&self) -> Option<&CodeSolution> {
        self.solutions.iter().find(|s| s.is_ground_truth())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub problems: Vec<Problem>,
}

impl Dataset {
    pub fn new(problems: Vec<Problem>) -> Self {
        Dataset { problems }
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_strings() {
        assert_eq!(TestOrigin::Augmented(2).to_string(), "augmented:2");
        assert_eq!("seed".parse::<TestOrigin>().unwrap(), TestOrigin::Seed);
        assert_eq!(
            "augmented:7".parse::<SolutionOrigin>().unwrap(),
            SolutionOrigin::Augmented(7)
        );
        assert!("augmented:x".parse::<TestOrigin>().is_err());
        assert!("gt".parse::<SolutionOrigin>().is_err());
    }

    #[test]
    fn normalized_tracks_source() {
        let s = CodeSolution::ground_truth("print(1)   \r\n\r\n\r\n");
        assert_eq!(s.normalized(), "print(1)\n");
    }

    #[test]
    fn first_ground_truth_wins() {
        let p = Problem {
            id: "p".into(),
            description: String::new(),
            difficulty: Difficulty::Interview,
            solutions: vec![
                CodeSolution::new("a", SolutionOrigin::Augmented(1), true),
                CodeSolution::ground_truth("b"),
                CodeSolution::ground_truth("c"),
            ],
            tests: vec![],
        };
        assert_eq!(p.ground_truth().unwrap().source(), "b");
    }
}

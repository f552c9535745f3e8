use std::collections::BTreeMap;
use std::fmt;

use super::{Completion, GenerationError, GenerationRequest, Generator};

type Script = dyn Fn(&GenerationRequest) -> Vec<String> + Send + Sync;

/// Emits completions built by a closure, or looked up per problem id.
pub struct StubGenerator {
    tag: String,
    script: Box<Script>,
}

impl fmt::Debug for StubGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StubGenerator").field("tag", &self.tag).finish_non_exhaustive()
    }
}

impl StubGenerator {
    pub fn new(tag: impl Into<String>, script: impl Fn(&GenerationRequest) -> Vec<String> + Send + Sync + 'static) -> Self {
        StubGenerator {
            tag: tag.into(),
            script: Box::new(script),
        }
    }

    /// Fixed completions per problem id; unknown problems get none.
    pub fn from_map(tag: impl Into<String>, completions: BTreeMap<String, Vec<String>>) -> Self {
        Self::new(tag, move |req| completions.get(&req.problem_id).cloned().unwrap_or_default())
    }
}

impl Generator for StubGenerator {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Completion>, GenerationError> {
        request.validate()?;
        Ok((self.script)(request)
            .into_iter()
            .take(request.num_samples)
            .enumerate()
            .map(|(sample_index, text)| Completion {
                text,
                sample_index,
                generator_tag: self.tag.clone(),
            })
            .collect())
    }
}
